use std::path::Path;

use serde::Serialize;

use qsearch_core::engine::{run, DensityMode, EngineOptions, RunConfig};
use qsearch_core::harness::{
    fit_scaling, run_scaling, run_sweep, selftest, ExperimentConfig, FitModel, ScalingConfig,
    ScalingFit,
};
use qsearch_core::noise::{Mechanism, NoiseSpec, WeightDistribution};
use qsearch_core::optimize::GreedySettings;
use qsearch_core::par::Parallelism;
use qsearch_core::problem::{ScheduleSpec, SearchInstance};
use qsearch_core::twolevel::ComputationTime;
use qsearch_core::Tolerances;

use crate::args::{
    DensityKind, EncodingKind, FitKind, InstanceArgs, NoiseArgs, NoiseKind, ScalingArgs,
    ScheduleKind, SingleRunArgs, SweepArgs, WeightKind,
};
use crate::output::{now, num, OutputSet};
use crate::settings::{pick, require, FileConfig, GridValue};
use crate::CliError;

fn mechanism(k: NoiseKind) -> Mechanism {
    match k {
        NoiseKind::None => Mechanism::None,
        NoiseKind::QubitCoherent => Mechanism::QubitCoherent,
        NoiseKind::QuditCoherent => Mechanism::QuditCoherent,
        NoiseKind::QubitChannel => Mechanism::QubitChannel,
        NoiseKind::QuditChannel => Mechanism::QuditChannel,
    }
}

fn density(k: DensityKind) -> DensityMode {
    match k {
        DensityKind::Auto => DensityMode::Auto,
        DensityKind::Dense => DensityMode::Dense,
        DensityKind::Factored => DensityMode::Factored,
    }
}

fn weights(k: WeightKind) -> WeightDistribution {
    match k {
        WeightKind::NormalizedUniform => WeightDistribution::NormalizedUniform,
        WeightKind::Dirichlet => WeightDistribution::Dirichlet,
    }
}

fn build_instance(kind: EncodingKind, size: u64) -> Result<SearchInstance, CliError> {
    match kind {
        EncodingKind::Qubit => {
            let n = u32::try_from(size)
                .map_err(|_| CliError::Config(format!("qubit count {size} too large")))?;
            SearchInstance::qubits(n).map_err(CliError::config)
        }
        EncodingKind::Qudit => SearchInstance::qudit(size).map_err(CliError::config),
    }
}

fn resolve_instance(a: &InstanceArgs, file: &FileConfig) -> Result<SearchInstance, CliError> {
    let kind = require(a.encoding, &file.encoding, "encoding")?;
    let size = match kind {
        EncodingKind::Qubit => require(a.n, &file.n, "n")? as u64,
        EncodingKind::Qudit => require(a.d, &file.d, "d")?,
    };
    build_instance(kind, size)
}

fn grid(
    flag: &Option<String>,
    file: &Option<GridValue>,
    name: &str,
    default: &str,
) -> Result<Vec<f64>, CliError> {
    match (flag, file) {
        (Some(s), _) => GridValue::Text(s.clone()).values(name),
        (None, Some(g)) => g.values(name),
        (None, None) => GridValue::Text(default.to_string()).values(name),
    }
}

#[derive(Debug, Clone, Serialize)]
struct ResolvedNoise {
    mechanism: Mechanism,
    weights: WeightDistribution,
    density: DensityMode,
    seed: u64,
}

fn resolve_noise(a: &NoiseArgs, file: &FileConfig) -> ResolvedNoise {
    ResolvedNoise {
        mechanism: mechanism(pick(a.noise, &file.noise, NoiseKind::None)),
        weights: weights(pick(
            a.weights,
            &file.weights,
            WeightKind::NormalizedUniform,
        )),
        density: density(pick(a.density, &file.density, DensityKind::Auto)),
        seed: pick(a.seed, &file.seed, 0),
    }
}

fn schedule(kind: ScheduleKind, layers: usize, parallelism: Parallelism) -> ScheduleSpec {
    match kind {
        ScheduleKind::Grover => ScheduleSpec::Grover { layers },
        ScheduleKind::Greedy => ScheduleSpec::Greedy {
            layers,
            settings: GreedySettings {
                parallelism,
                ..GreedySettings::default()
            },
        },
    }
}

fn check_run(config: &RunConfig) -> Result<(), CliError> {
    let layers = config.schedule.layers();
    if layers < 1 {
        return Err(CliError::Config("--layers must be >= 1".into()));
    }
    if matches!(config.schedule, ScheduleSpec::Grover { .. }) && layers < 2 {
        return Err(CliError::Config(
            "the Grover schedule needs --layers >= 2".into(),
        ));
    }
    if !(config.r.is_finite() && config.r >= 0.0) {
        return Err(CliError::Config(format!(
            "--r {} must be finite and >= 0",
            config.r
        )));
    }
    config
        .instance
        .full_space_dim(&Tolerances::default())
        .map_err(CliError::config)?;
    config
        .noise
        .validate(&config.instance, layers)
        .map_err(CliError::config)
}

#[derive(Serialize)]
struct SingleRunSummary {
    final_success: f64,
    best_success: f64,
    layers: usize,
}

pub fn single_run(
    a: &SingleRunArgs,
    file: &FileConfig,
    out: &Path,
    par: Parallelism,
) -> Result<(), CliError> {
    let started = now();
    let instance = resolve_instance(&a.instance, file)?;
    let noise = resolve_noise(&a.noise, file);
    let layers = require(a.layers, &file.layers, "layers")?;
    let config = RunConfig {
        instance,
        schedule: schedule(
            pick(a.schedule, &file.schedule, ScheduleKind::Grover),
            layers,
            par,
        ),
        r: pick(a.r, &file.r, 0.0),
        noise: NoiseSpec {
            eps: pick(a.eps, &file.eps, 0.0),
            mechanism: noise.mechanism,
            seed: noise.seed,
            weights: noise.weights,
        },
    };
    check_run(&config)?;
    let opts = EngineOptions {
        density: noise.density,
        ..EngineOptions::default()
    };
    let trace = run(&config, &opts).map_err(CliError::runtime)?;
    let rows: Vec<Vec<String>> = trace
        .records
        .iter()
        .map(|r| {
            vec![
                r.layer.to_string(),
                num(r.coefficients.a),
                num(r.coefficients.b),
                num(r.coefficients.r),
                num(r.success),
                num(r.normalization),
            ]
        })
        .collect();
    let mut set = OutputSet::new(out)?;
    let path = set.csv(
        "trace.csv",
        &["layer", "A", "B", "r", "p_success", "diagnostic"],
        &rows,
    )?;
    let summary = SingleRunSummary {
        final_success: trace.final_success,
        best_success: trace.best_success(),
        layers: trace.records.len(),
    };
    println!(
        "final p_success {} -> {}",
        num(trace.final_success),
        path.display()
    );
    #[derive(Serialize)]
    struct Resolved<'a> {
        run: &'a RunConfig,
        engine: EngineOptions,
    }
    set.finish(
        "single-run",
        Resolved {
            run: &config,
            engine: opts,
        },
        config.noise.seed,
        started,
        summary,
    )?;
    Ok(())
}

#[derive(Serialize)]
struct SweepSummary {
    rows: usize,
    failed_rows: usize,
}

pub fn sweep(
    name: &str,
    a: &SweepArgs,
    file: &FileConfig,
    out: &Path,
    par: Parallelism,
    default_eps: &str,
    default_r: &str,
) -> Result<(), CliError> {
    let started = now();
    let instance = resolve_instance(&a.instance, file)?;
    let noise = resolve_noise(&a.noise, file);
    let layers = require(a.layers, &file.layers, "layers")?;
    let mut cfg = ExperimentConfig::new(
        vec![instance],
        schedule(
            pick(a.schedule, &file.schedule, ScheduleKind::Grover),
            layers,
            par,
        ),
    );
    cfg.eps_grid = grid(&a.eps_grid, &file.eps_grid, "eps-grid", default_eps)?;
    cfg.r_grid = grid(&a.r_grid, &file.r_grid, "r-grid", default_r)?;
    cfg.mechanism = noise.mechanism;
    cfg.weights = noise.weights;
    cfg.realizations = pick(a.realizations, &file.realizations, 20);
    cfg.master_seed = noise.seed;
    cfg.parallelism = par;
    cfg.engine.density = noise.density;
    cfg.validate().map_err(CliError::config)?;
    for &eps in &cfg.eps_grid {
        let spec = NoiseSpec::new(cfg.mechanism, eps, 0);
        spec.validate(&instance, layers).map_err(CliError::config)?;
    }
    if matches!(cfg.schedule, ScheduleSpec::Grover { .. }) && layers < 2 {
        return Err(CliError::Config(
            "the Grover schedule needs --layers >= 2".into(),
        ));
    }
    let res = run_sweep(&cfg).map_err(CliError::runtime)?;
    let rows: Vec<Vec<String>> = res
        .rows
        .iter()
        .map(|r| {
            vec![
                r.point_key.clone(),
                num(r.eps),
                num(r.r),
                r.realization.to_string(),
                r.seed.to_string(),
                num(*r.outcome.as_ref().unwrap_or(&f64::NAN)),
            ]
        })
        .collect();
    let agg: Vec<Vec<String>> = res
        .points
        .iter()
        .map(|p| {
            let (n, mean, se) = match &p.stats {
                Some(s) => (s.n, num(s.mean), s.stderr.map(num).unwrap_or_default()),
                None => (0, num(f64::NAN), String::new()),
            };
            vec![
                p.point.key.clone(),
                num(p.point.eps),
                num(p.point.r),
                n.to_string(),
                mean,
                se,
            ]
        })
        .collect();
    let failed = res.rows.iter().filter(|r| r.outcome.is_err()).count();
    for r in res.rows.iter().filter(|r| r.outcome.is_err()) {
        log::warn!(
            "{} realization {}: {}",
            r.point_key,
            r.realization,
            r.outcome.as_ref().unwrap_err()
        );
    }
    let mut set = OutputSet::new(out)?;
    set.csv(
        "sweep.csv",
        &["point_key", "eps", "r", "realization", "seed", "p_success"],
        &rows,
    )?;
    let path = set.csv(
        "aggregate.csv",
        &["point_key", "eps", "r", "n", "mean_p", "stderr"],
        &agg,
    )?;
    println!(
        "{} points, {} rows ({failed} failed) -> {}",
        res.points.len(),
        res.rows.len(),
        path.display()
    );
    let seed = cfg.master_seed;
    set.finish(
        name,
        cfg,
        seed,
        started,
        SweepSummary {
            rows: res.rows.len(),
            failed_rows: failed,
        },
    )?;
    if failed == res.rows.len() {
        return Err(CliError::Runtime("every run failed".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct FitEntry {
    eps: f64,
    fit: Option<ScalingFit>,
    error: Option<String>,
}

pub fn scaling(
    a: &ScalingArgs,
    file: &FileConfig,
    out: &Path,
    par: Parallelism,
) -> Result<(), CliError> {
    let started = now();
    let kind = require(a.encoding, &file.encoding, "encoding")?;
    let sizes = match (&a.sizes, &file.sizes) {
        (Some(s), _) => GridValue::Text(s.clone()).values("sizes")?,
        (None, Some(g)) => g.values("sizes")?,
        (None, None) => return Err(CliError::Config("missing required option --sizes".into())),
    };
    let instances = sizes
        .iter()
        .map(|&s| {
            if s.fract() != 0.0 || s < 1.0 {
                return Err(CliError::Config(format!(
                    "--sizes: {s} is not a positive integer"
                )));
            }
            build_instance(kind, s as u64)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let noise = resolve_noise(&a.noise, file);
    let mut cfg = ScalingConfig::new(
        instances,
        pick(a.r, &file.r, 0.0),
        pick(a.delta, &file.delta, 0.5),
    );
    cfg.eps_grid = grid(&a.eps_grid, &file.eps_grid, "eps-grid", "0")?;
    cfg.mechanism = noise.mechanism;
    cfg.lmax = a.lmax.or(file.lmax);
    cfg.master_seed = noise.seed;
    cfg.parallelism = par;
    cfg.settings.parallelism = par;
    cfg.engine.density = noise.density;
    if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
        return Err(CliError::Config(format!(
            "--delta {} not in (0, 1)",
            cfg.delta
        )));
    }
    if !(cfg.r.is_finite() && cfg.r >= 0.0) {
        return Err(CliError::Config(format!(
            "--r {} must be finite and >= 0",
            cfg.r
        )));
    }
    if cfg.lmax == Some(0) {
        return Err(CliError::Config("--lmax must be >= 1".into()));
    }
    for inst in &cfg.instances {
        NoiseSpec::new(cfg.mechanism, 0.0, 0)
            .validate(inst, 1)
            .map_err(CliError::config)?;
        if cfg.mechanism.is_random() && cfg.eps_grid.iter().any(|&e| e > 0.0) {
            return Err(CliError::Config(format!(
                "computation time needs deterministic noise; {} is random",
                cfg.mechanism.label()
            )));
        }
    }
    let rows = run_scaling(&cfg).map_err(CliError::runtime)?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let (l, status) = match &r.outcome {
                Ok(ComputationTime::Reached { layers }) => {
                    (layers.to_string(), "reached".to_string())
                }
                Ok(ComputationTime::NotReached { .. }) => {
                    (String::new(), "not-reached".to_string())
                }
                Err(e) => (String::new(), format!("error: {e}")),
            };
            vec![
                r.instance.dim().to_string(),
                num(r.eps),
                num(r.r),
                num(r.delta),
                l,
                status,
            ]
        })
        .collect();
    let model = match pick(a.fit, &file.fit, FitKind::LogLog) {
        FitKind::LogLog => FitModel::LogLog,
        FitKind::Linear => FitModel::Linear,
    };
    let fits: Vec<FitEntry> = cfg
        .eps_grid
        .iter()
        .map(|&eps| {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.eps == eps)
                .filter_map(|r| {
                    let d = r.instance.dim() as f64;
                    let x = match model {
                        FitModel::LogLog => d,
                        FitModel::Linear => d.log2(),
                    };
                    r.layers().map(|l| (x, l as f64))
                })
                .collect();
            match fit_scaling(&pts, model) {
                Ok(f) => {
                    println!(
                        "eps {eps}: slope {:.6} intercept {:.6} R^2 {:.6}",
                        f.slope, f.intercept, f.r_squared
                    );
                    FitEntry {
                        eps,
                        fit: Some(f),
                        error: None,
                    }
                }
                Err(e) => FitEntry {
                    eps,
                    fit: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let mut set = OutputSet::new(out)?;
    let path = set.csv(
        "scaling.csv",
        &["dim", "eps", "r", "delta", "L", "status"],
        &table,
    )?;
    println!("{} rows -> {}", table.len(), path.display());
    let seed = cfg.master_seed;
    set.finish("scaling", cfg, seed, started, fits)?;
    Ok(())
}

pub fn run_selftest(par: Parallelism) -> Result<(), CliError> {
    let checks = selftest(par);
    let mut failed = 0;
    for c in &checks {
        println!(
            "[{}] {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
        failed += usize::from(!c.passed);
    }
    if failed > 0 {
        return Err(CliError::Runtime(format!(
            "{failed} of {} checks failed",
            checks.len()
        )));
    }
    Ok(())
}
