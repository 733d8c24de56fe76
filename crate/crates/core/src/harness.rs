//! Seeded sweeps over instances, noise strengths and reinforcement values,
//! statistics over realizations, scaling fits and the self-test suite.

use serde::{Deserialize, Serialize};

use crate::engine::{computation_time, run, EngineOptions, RunConfig};
use crate::noise::{derive_seed, Mechanism, NoiseSpec, WeightDistribution};
use crate::optimize::GreedySettings;
use crate::par::{map_indexed, Parallelism};
use crate::problem::{ScheduleSpec, SearchInstance};
use crate::twolevel::{default_lmax, ComputationTime};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub instances: Vec<SearchInstance>,
    pub schedule: ScheduleSpec,
    pub r_grid: Vec<f64>,
    pub eps_grid: Vec<f64>,
    pub mechanism: Mechanism,
    pub weights: WeightDistribution,
    pub realizations: usize,
    pub master_seed: u64,
    pub parallelism: Parallelism,
    pub engine: EngineOptions,
}

impl ExperimentConfig {
    pub fn new(instances: Vec<SearchInstance>, schedule: ScheduleSpec) -> Self {
        ExperimentConfig {
            instances,
            schedule,
            r_grid: vec![0.0],
            eps_grid: vec![0.0],
            mechanism: Mechanism::None,
            weights: WeightDistribution::default(),
            realizations: 20,
            master_seed: 0,
            parallelism: Parallelism::default(),
            engine: EngineOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.instances.is_empty() {
            return Err(Error::invalid("instances", "empty"));
        }
        if self.r_grid.is_empty() {
            return Err(Error::invalid("r_grid", "empty"));
        }
        if self.eps_grid.is_empty() {
            return Err(Error::invalid("eps_grid", "empty"));
        }
        if self.realizations < 1 {
            return Err(Error::invalid("realizations", "must be >= 1"));
        }
        if self.schedule.layers() < 1 {
            return Err(Error::invalid("layers", "must be >= 1"));
        }
        for &r in &self.r_grid {
            if !(r.is_finite() && r >= 0.0) {
                return Err(Error::invalid(
                    "r_grid",
                    format!("{r} must be finite and >= 0"),
                ));
            }
        }
        for &e in &self.eps_grid {
            if !(e.is_finite() && e >= 0.0) {
                return Err(Error::invalid(
                    "eps_grid",
                    format!("{e} must be finite and >= 0"),
                ));
            }
        }
        for inst in &self.instances {
            NoiseSpec::new(self.mechanism, 0.0, 0).validate(inst, self.schedule.layers())?;
        }
        Ok(())
    }

    /// Sweep points in canonical order: instance, then ε, then r.
    pub fn points(&self) -> Vec<SweepPoint> {
        let mut out = Vec::new();
        for inst in &self.instances {
            for (ei, &eps) in self.eps_grid.iter().enumerate() {
                for (ri, &r) in self.r_grid.iter().enumerate() {
                    out.push(SweepPoint {
                        index: out.len(),
                        key: format!("{}/e{ei}/r{ri}", inst.encoding().label()),
                        instance: *inst,
                        eps,
                        r,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub index: usize,
    pub key: String,
    pub instance: SearchInstance,
    pub eps: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub point_index: usize,
    pub point_key: String,
    pub eps: f64,
    pub r: f64,
    pub realization: usize,
    pub seed: u64,
    /// Final success probability, or the error that stopped the run.
    pub outcome: std::result::Result<f64, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStatistics {
    pub n: usize,
    pub mean: f64,
    /// `s/√n`; absent for a single sample.
    pub stderr: Option<f64>,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub point: SweepPoint,
    /// `None` when every realization failed.
    pub stats: Option<SummaryStatistics>,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub points: Vec<PointSummary>,
}

impl SweepResult {
    pub fn point(&self, instance: &SearchInstance, eps: f64, r: f64) -> Option<&PointSummary> {
        self.points
            .iter()
            .find(|p| p.point.instance == *instance && p.point.eps == eps && p.point.r == r)
    }
}

/// Seed of one run, independent of execution order.
pub fn run_seed(master: u64, point: usize, realization: usize) -> u64 {
    derive_seed(master, &[point as u64, realization as u64])
}

pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let points = cfg.points();
    let reps = cfg.realizations;
    let rows = map_indexed(points.len() * reps, cfg.parallelism, |k| {
        let (pi, rep) = (k / reps, k % reps);
        let p = &points[pi];
        let seed = run_seed(cfg.master_seed, pi, rep);
        let noise = NoiseSpec {
            eps: p.eps,
            mechanism: cfg.mechanism,
            seed,
            weights: cfg.weights,
        };
        let config = RunConfig {
            instance: p.instance,
            schedule: cfg.schedule.clone(),
            r: p.r,
            noise,
        };
        let outcome = run(&config, &cfg.engine)
            .map(|t| t.final_success)
            .map_err(|e| e.to_string());
        if let Err(e) = &outcome {
            log::warn!("run {} realization {rep} failed: {e}", p.key);
        }
        SweepRow {
            point_index: pi,
            point_key: p.key.clone(),
            eps: p.eps,
            r: p.r,
            realization: rep,
            seed,
            outcome,
        }
    });
    let summaries = points
        .into_iter()
        .map(|point| {
            let mine = &rows[point.index * reps..(point.index + 1) * reps];
            let ok: Vec<f64> = mine
                .iter()
                .filter_map(|r| r.outcome.as_ref().ok().copied())
                .collect();
            PointSummary {
                stats: aggregate(&ok).ok(),
                failures: reps - ok.len(),
                point,
            }
        })
        .collect();
    Ok(SweepResult {
        rows,
        points: summaries,
    })
}

/// Mean, unbiased standard error, min and max. Samples are summed in sorted
/// order so the result does not depend on their order.
pub fn aggregate(samples: &[f64]) -> Result<SummaryStatistics> {
    if samples.is_empty() {
        return Err(Error::invalid("samples", "empty"));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("samples", "non-finite value"));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let (min, max) = (s[0], s[n - 1]);
    // identical samples: avoid a rounding-sized spread
    let mean = if min == max {
        min
    } else {
        s.iter().sum::<f64>() / n as f64
    };
    let stderr = (n > 1).then(|| {
        let var = s.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    });
    Ok(SummaryStatistics {
        n,
        mean,
        stderr,
        min,
        max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitModel {
    /// `log y = slope · log x + intercept`
    LogLog,
    /// `y = slope · x + intercept`
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub model: FitModel,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n: usize,
    pub x_min: f64,
    pub x_max: f64,
}

/// Ordinary least squares in the model's coordinates.
pub fn fit_scaling(points: &[(f64, f64)], model: FitModel) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::invalid("points", "need at least 3"));
    }
    let transformed: Vec<(f64, f64)> = match model {
        FitModel::Linear => points.to_vec(),
        FitModel::LogLog => {
            if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
                return Err(Error::invalid(
                    "points",
                    "log-log fit needs positive values",
                ));
            }
            points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect()
        }
    };
    let n = transformed.len() as f64;
    let mx = transformed.iter().map(|p| p.0).sum::<f64>() / n;
    let my = transformed.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = transformed.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = transformed.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = transformed.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= f64::EPSILON * mx.abs().max(1.0) {
        return Err(Error::invalid("points", "all x values are equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = transformed
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(ScalingFit {
        model,
        slope,
        intercept,
        r_squared,
        n: points.len(),
        x_min: points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
        x_max: points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Computation-time measurements over instances and noise strengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub instances: Vec<SearchInstance>,
    pub eps_grid: Vec<f64>,
    pub r: f64,
    pub delta: f64,
    pub mechanism: Mechanism,
    /// Defaults to `⌈10√dim⌉` per instance.
    pub lmax: Option<usize>,
    pub settings: GreedySettings,
    pub master_seed: u64,
    pub parallelism: Parallelism,
    pub engine: EngineOptions,
}

impl ScalingConfig {
    pub fn new(instances: Vec<SearchInstance>, r: f64, delta: f64) -> Self {
        ScalingConfig {
            instances,
            eps_grid: vec![0.0],
            r,
            delta,
            mechanism: Mechanism::None,
            lmax: None,
            settings: GreedySettings::default(),
            master_seed: 0,
            parallelism: Parallelism::default(),
            engine: EngineOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub instance: SearchInstance,
    pub eps: f64,
    pub r: f64,
    pub delta: f64,
    pub outcome: std::result::Result<ComputationTime, String>,
}

impl ScalingRow {
    pub fn layers(&self) -> Option<usize> {
        self.outcome.as_ref().ok().and_then(|c| c.layers())
    }
}

pub fn run_scaling(cfg: &ScalingConfig) -> Result<Vec<ScalingRow>> {
    if cfg.instances.is_empty() || cfg.eps_grid.is_empty() {
        return Err(Error::invalid(
            "scaling",
            "instances and eps grid must be non-empty",
        ));
    }
    cfg.settings.validate()?;
    let n_eps = cfg.eps_grid.len();
    let rows = map_indexed(cfg.instances.len() * n_eps, cfg.parallelism, |k| {
        let inst = cfg.instances[k / n_eps];
        let eps = cfg.eps_grid[k % n_eps];
        let noise = NoiseSpec {
            eps,
            mechanism: cfg.mechanism,
            seed: derive_seed(cfg.master_seed, &[k as u64]),
            weights: WeightDistribution::default(),
        };
        let lmax = cfg.lmax.unwrap_or_else(|| default_lmax(inst.dim()));
        let outcome = computation_time(
            &inst,
            cfg.r,
            cfg.delta,
            &noise,
            lmax,
            &cfg.settings,
            &cfg.engine,
        )
        .map(|rep| rep.result)
        .map_err(|e| e.to_string());
        ScalingRow {
            instance: inst,
            eps,
            r: cfg.r,
            delta: cfg.delta,
            outcome,
        }
    });
    Ok(rows)
}

/// Fit of `L` against the dimension over the reached rows of one ε.
pub fn fit_rows(
    rows: &[ScalingRow],
    eps: f64,
    x: impl Fn(&SearchInstance) -> f64,
    model: FitModel,
) -> Result<ScalingFit> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.eps == eps)
        .filter_map(|r| r.layers().map(|l| (x(&r.instance), l as f64)))
        .collect();
    fit_scaling(&pts, model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, f: impl FnOnce() -> Result<(bool, String)>) -> SelfCheck {
    let (passed, detail) = match f() {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    SelfCheck {
        name: name.to_string(),
        passed,
        detail,
    }
}

/// Fast invariant suite over the whole stack.
pub fn selftest(parallelism: Parallelism) -> Vec<SelfCheck> {
    use crate::engine::{run_greedy, run_grover_annealing, DensityMode};
    use crate::twolevel;

    let settings = GreedySettings {
        parallelism,
        ..GreedySettings::default()
    };
    let mut out = Vec::new();
    out.push(check(
        "two-level equals full space (greedy, N = 3, r = 1)",
        || {
            let inst = SearchInstance::qubits(3)?;
            let full = run_greedy(
                &inst,
                10,
                1.0,
                &NoiseSpec::none(),
                &settings,
                &EngineOptions::default(),
            )?;
            let two = twolevel::greedy_trajectory(inst.p0(), 1.0, 10, &settings)?;
            let diff = full
                .records
                .iter()
                .zip(&two)
                .map(|(a, b)| (a.success - b.success).abs())
                .fold(0.0, f64::max);
            Ok((diff < 1e-8, format!("max |dP| = {diff:.3e}")))
        },
    ));
    out.push(check("mixed path equals pure path without noise", || {
        let inst = SearchInstance::qudit(16)?;
        let pure = run_grover_annealing(
            &inst,
            20,
            2.0,
            &NoiseSpec::none(),
            &EngineOptions::default(),
        )?;
        let opts = EngineOptions {
            force_mixed: true,
            density: DensityMode::Factored,
            ..EngineOptions::default()
        };
        let mixed = run_grover_annealing(&inst, 20, 2.0, &NoiseSpec::none(), &opts)?;
        let diff = pure
            .records
            .iter()
            .zip(&mixed.records)
            .map(|(a, b)| (a.success - b.success).abs())
            .fold(0.0, f64::max);
        Ok((diff < 1e-9, format!("max |dP| = {diff:.3e}")))
    }));
    out.push(check("channels preserve trace", || {
        let mut worst: f64 = 0.0;
        let q = run_grover_annealing(
            &SearchInstance::qubits(4)?,
            10,
            1.0,
            &NoiseSpec::new(Mechanism::QubitChannel, 2.0, 3),
            &EngineOptions::default(),
        )?;
        let d = run_grover_annealing(
            &SearchInstance::qudit(20)?,
            10,
            2.0,
            &NoiseSpec::new(Mechanism::QuditChannel, 2.0, 3),
            &EngineOptions::default(),
        )?;
        for r in q.records.iter().chain(&d.records) {
            worst = worst.max((r.normalization - 1.0).abs());
        }
        Ok((worst < 1e-9, format!("max |tr - 1| = {worst:.3e}")))
    }));
    out.push(check("coherent runs preserve norm", || {
        let t = run_grover_annealing(
            &SearchInstance::qubits(6)?,
            30,
            1.0,
            &NoiseSpec::new(Mechanism::QubitCoherent, 3.0, 11),
            &EngineOptions::default(),
        )?;
        let worst = t
            .records
            .iter()
            .map(|r| (r.normalization - 1.0).abs())
            .fold(0.0, f64::max);
        Ok((worst < 1e-9, format!("max |norm - 1| = {worst:.3e}")))
    }));
    out.push(check("runs are reproducible from their seed", || {
        let inst = SearchInstance::qubits(4)?;
        let noise = NoiseSpec::new(Mechanism::QubitCoherent, 2.0, 5);
        let a = run_grover_annealing(&inst, 15, 1.0, &noise, &EngineOptions::default())?;
        let b = run_grover_annealing(&inst, 15, 1.0, &noise, &EngineOptions::default())?;
        Ok((a == b, format!("final P = {:.12}", a.final_success)))
    }));
    out.push(check(
        "Grover scaling of the noise-free greedy time",
        || {
            let pts = (6..=14)
                .map(|n| {
                    let t = twolevel::computation_time_two_level(
                        2f64.powi(-n),
                        0.0,
                        0.5,
                        100_000,
                        &settings,
                    )?;
                    let l = t
                        .layers()
                        .ok_or_else(|| Error::invalid("L", "not reached"))?;
                    Ok((2f64.powi(n), l as f64))
                })
                .collect::<Result<Vec<_>>>()?;
            let fit = fit_scaling(&pts, FitModel::LogLog)?;
            Ok((
                (0.45..=0.55).contains(&fit.slope),
                format!("slope = {:.4}", fit.slope),
            ))
        },
    ));
    out.push(check("aggregate two-point formula", || {
        let s = aggregate(&[0.0, 1.0])?;
        Ok((s.mean == 0.5 && s.stderr == Some(0.5), format!("{s:?}")))
    }));
    out
}
