//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails. `ACCEPTANCE_ONLY=1,6` restricts the run.

use std::time::Instant;

use qsearch_core::engine::{evolve_layer, run, DensityMode, EngineOptions, RunConfig};
use qsearch_core::harness::{
    fit_rows, fit_scaling, run_scaling, run_sweep, ExperimentConfig, FitModel, ScalingConfig,
};
use qsearch_core::noise::{
    Channel, LayerNoise, Mechanism, NoiseSpec, PauliWeights, WeightDistribution,
};
use qsearch_core::optimize::GreedySettings;
use qsearch_core::par::Parallelism;
use qsearch_core::problem::{
    GroverSchedule, LayerCoefficients, QuantumStateRep, ScheduleSpec, SearchInstance,
};
use qsearch_core::spectral::{
    dense_unitary_exp, hermitian_eigendecompose, krylov_exp_apply, Axis, CMatrix, CVector,
    DensityRep, ExtraTerm, FactoredDensity, LowRankPropagator, PauliTerm, StructuredHamiltonian,
    UnitaryAction, C64,
};
use qsearch_core::twolevel::{self, computation_time_two_level, default_lmax};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = (usize, &'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn grover_scaling() -> Outcome {
    let settings = GreedySettings::default();
    let mut pts = Vec::new();
    for n in 6..=20 {
        let dim = 1u64 << n;
        match computation_time_two_level(2f64.powi(-n), 0.0, 0.5, default_lmax(dim), &settings) {
            Ok(t) => match t.layers() {
                Some(l) => pts.push((dim as f64, l as f64)),
                None => return outcome(false, format!("N = {n}: not reached")),
            },
            Err(e) => return outcome(false, format!("N = {n}: {e}")),
        }
    }
    let fit = fit_scaling(&pts, FitModel::LogLog).unwrap();
    outcome(
        (0.45..=0.55).contains(&fit.slope),
        format!(
            "log-log slope {:.4} (need [0.45, 0.55]), R^2 {:.4}",
            fit.slope, fit.r_squared
        ),
    )
}

fn reinforced_scaling() -> Outcome {
    let settings = GreedySettings::default();
    let mut ok = true;
    let mut parts = Vec::new();
    let mut at20 = None;
    for delta in [0.5, 1e-6] {
        let mut pts = Vec::new();
        for n in 6..=24 {
            let dim = 1u64 << n;
            let t =
                computation_time_two_level(2f64.powi(-n), 1.0, delta, default_lmax(dim), &settings);
            match t.ok().and_then(|t| t.layers()) {
                Some(l) => {
                    if delta == 0.5 && n == 20 {
                        at20 = Some(l);
                    }
                    pts.push((n as f64, l as f64));
                }
                None => {
                    ok = false;
                    parts.push(format!("delta {delta:e} N {n}: not reached"));
                }
            }
        }
        let fit = fit_scaling(&pts, FitModel::Linear).unwrap();
        ok &= fit.r_squared > 0.98;
        let ls: Vec<String> = pts.iter().map(|p| format!("{}", p.1)).collect();
        parts.push(format!(
            "delta {delta:e}: R^2 {:.4} (need > 0.98) slope {:.3} L = [{}]",
            fit.r_squared,
            fit.slope,
            ls.join(" ")
        ));
    }
    let bound = (2f64.powi(20)).sqrt() / 20.0;
    let l20 = at20.unwrap_or(usize::MAX);
    ok &= (l20 as f64) < bound;
    parts.push(format!("L(1/2, N = 20) = {l20} (need < {bound})"));
    outcome(ok, parts.join("; "))
}

fn optimal_reinforcement() -> Outcome {
    let inst = SearchInstance::qudit(100).unwrap();
    let r_grid: Vec<f64> = (0..=20).map(|k| 0.25 * k as f64).collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for mechanism in [Mechanism::QuditCoherent, Mechanism::QuditChannel] {
        let mut cfg = ExperimentConfig::new(vec![inst], ScheduleSpec::Grover { layers: 10 });
        cfg.r_grid = r_grid.clone();
        cfg.eps_grid = vec![0.0, 1.0, 2.0, 4.0];
        cfg.mechanism = mechanism;
        cfg.realizations = 1;
        let res = match run_sweep(&cfg) {
            Ok(r) => r,
            Err(e) => return outcome(false, e.to_string()),
        };
        for &eps in &cfg.eps_grid {
            let curve: Vec<(f64, f64)> = r_grid
                .iter()
                .map(|&r| {
                    (
                        r,
                        res.point(&inst, eps, r)
                            .and_then(|p| p.stats.as_ref())
                            .map_or(f64::NAN, |s| s.mean),
                    )
                })
                .collect();
            let best = curve
                .iter()
                .copied()
                .fold(
                    (f64::NAN, f64::NEG_INFINITY),
                    |b, c| if c.1 > b.1 { c } else { b },
                );
            let good = (2.0..=3.0).contains(&best.0) && best.1 > curve[0].1;
            ok &= good;
            parts.push(format!(
                "{} eps {eps}: argmax r {} P {:.4} vs P(r=0) {:.4}",
                mechanism.label(),
                best.0,
                best.1,
                curve[0].1
            ));
        }
    }
    outcome(ok, parts.join("; "))
}

fn coherent_benefit() -> Outcome {
    let inst = SearchInstance::qubits(8).unwrap();
    let mut cfg = ExperimentConfig::new(vec![inst], ScheduleSpec::Grover { layers: 50 });
    cfg.r_grid = vec![0.0, 1.0];
    cfg.eps_grid = vec![1.0, 2.0, 3.0];
    cfg.mechanism = Mechanism::QubitCoherent;
    cfg.realizations = 20;
    cfg.master_seed = 2024;
    let res = match run_sweep(&cfg) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for eps in [1.0, 2.0, 3.0] {
        let s0 = res.point(&inst, eps, 0.0).and_then(|p| p.stats.clone());
        let s1 = res.point(&inst, eps, 1.0).and_then(|p| p.stats.clone());
        let (Some(s0), Some(s1)) = (s0, s1) else {
            return outcome(false, format!("eps {eps}: failed runs"));
        };
        let (e0, e1) = (s0.stderr.unwrap(), s1.stderr.unwrap());
        let combined = (e0 * e0 + e1 * e1).sqrt();
        let gap = s1.mean - s0.mean;
        let good = gap > 2.0 * combined && e0 < 0.05 && e1 < 0.05 && s0.n == 20 && s1.n == 20;
        ok &= good;
        parts.push(format!(
            "eps {eps}: P(r=1) {:.4}±{e1:.4} vs P(r=0) {:.4}±{e0:.4}",
            s1.mean, s0.mean
        ));
    }
    outcome(ok, parts.join("; "))
}

fn noisy_time_reduction() -> Outcome {
    let dims = [50u64, 100, 200, 400, 800];
    let instances: Vec<SearchInstance> = dims
        .iter()
        .map(|&d| SearchInstance::qudit(d).unwrap())
        .collect();
    let x = |i: &SearchInstance| i.dim() as f64;
    let mut ok = true;
    let mut parts = Vec::new();

    let base = ScalingConfig::new(instances.clone(), 0.0, 0.5);
    let rows = run_scaling(&base).unwrap();
    match fit_rows(&rows, 0.0, x, FitModel::LogLog) {
        Ok(f) => {
            ok &= (0.45..=0.55).contains(&f.slope);
            parts.push(format!(
                "baseline r=0 slope {:.4} (need [0.45, 0.55])",
                f.slope
            ));
        }
        Err(e) => {
            ok = false;
            parts.push(format!("baseline: {e}"));
        }
    }
    for (mechanism, r) in [
        (Mechanism::QuditCoherent, 1.0),
        (Mechanism::QuditChannel, 2.0),
    ] {
        let mut cfg = ScalingConfig::new(instances.clone(), r, 0.5);
        cfg.mechanism = mechanism;
        cfg.eps_grid = vec![0.0, 2.0, 4.0];
        cfg.engine.density = DensityMode::Factored;
        let rows = run_scaling(&cfg).unwrap();
        for eps in [0.0, 2.0, 4.0] {
            let ls: Vec<String> = rows
                .iter()
                .filter(|r| r.eps == eps)
                .map(|r| match &r.outcome {
                    Ok(t) => t.layers().map_or("-".to_string(), |l| l.to_string()),
                    Err(e) => format!("error({e})"),
                })
                .collect();
            match fit_rows(&rows, eps, x, FitModel::LogLog) {
                Ok(f) => {
                    let good = f.slope < 0.25 && f.n == dims.len();
                    ok &= good;
                    parts.push(format!(
                        "{} r={r} eps {eps}: slope {:.4} (need < 0.25) L = [{}]",
                        mechanism.label(),
                        f.slope,
                        ls.join(" ")
                    ));
                }
                Err(e) => {
                    ok = false;
                    parts.push(format!(
                        "{} eps {eps}: {e} L = [{}]",
                        mechanism.label(),
                        ls.join(" ")
                    ));
                }
            }
        }
    }
    outcome(ok, parts.join("; "))
}

/// Plain dense simulation: explicit matrices, explicit exponential.
fn dense_reference(inst: &SearchInstance, schedule: &[LayerCoefficients]) -> Vec<f64> {
    let psi_i = inst.initial_state().unwrap();
    let f = inst.target_state().unwrap();
    let d = psi_i.len();
    let id = CMatrix::identity(d, d);
    let pi = &psi_i * psi_i.adjoint();
    let pf = &f * f.adjoint();
    let mut psi = psi_i.clone();
    schedule
        .iter()
        .map(|c| {
            let h =
                (&id - &pi).scale(c.a) + (&id - &pf).scale(c.b) - (&psi * psi.adjoint()).scale(c.r);
            psi = dense_unitary_exp(&h, d).unwrap() * &psi;
            psi[inst.target()].norm_sqr()
        })
        .collect()
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let inst = if k % 2 == 0 {
            SearchInstance::qubits(rng.random_range(1..=4)).unwrap()
        } else {
            SearchInstance::qudit(rng.random_range(2..=16)).unwrap()
        };
        let r = rng.random_range(0.0..5.0);
        let layers = rng.random_range(2..=40);
        let schedule: Vec<LayerCoefficients> = if k % 4 < 2 {
            let g = GroverSchedule::for_instance(&inst, layers).unwrap();
            (0..layers).map(|l| g.coefficients(l, r).unwrap()).collect()
        } else {
            (0..layers)
                .map(|_| LayerCoefficients::new(rng.random(), rng.random(), r).unwrap())
                .collect()
        };
        let two = twolevel::run_schedule(inst.p0(), &schedule);
        let dense = dense_reference(&inst, &schedule);
        let engine = run(
            &RunConfig {
                instance: inst,
                schedule: ScheduleSpec::Explicit {
                    coefficients: schedule.clone(),
                },
                r,
                noise: NoiseSpec::none(),
            },
            &EngineOptions::default(),
        )
        .unwrap()
        .successes();
        for l in 0..layers {
            worst = worst
                .max((two[l] - dense[l]).abs())
                .max((two[l] - engine[l]).abs());
        }
    }
    outcome(
        worst < 1e-8,
        format!("max per-layer |dP| {worst:.3e} over 50 configs (need < 1e-8)"),
    )
}

fn random_vector(rng: &mut impl Rng, d: usize) -> CVector {
    let v = CVector::from_fn(d, |_, _| {
        C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    let n = v.norm();
    v / C64::new(n, 0.0)
}

fn random_density(rng: &mut impl Rng, d: usize, rank: usize) -> FactoredDensity {
    let branches: Vec<(f64, CVector)> = (0..rank)
        .map(|_| (rng.random::<f64>() + 0.01, random_vector(rng, d)))
        .collect();
    let total: f64 = branches.iter().map(|b| b.0).sum();
    let branches: Vec<_> = branches.into_iter().map(|(q, v)| (q / total, v)).collect();
    FactoredDensity::from_branches(d, &branches).unwrap()
}

fn random_hamiltonian(rng: &mut impl Rng, d: usize, qubits: Option<u32>) -> StructuredHamiltonian {
    let mut h = StructuredHamiltonian::new(d, rng.random_range(0.0..3.0));
    for _ in 0..rng.random_range(1..=4) {
        h.push_rank_one(rng.random_range(-2.0..2.0), random_vector(rng, d))
            .unwrap();
    }
    let extra = match (qubits, rng.random_range(0..3)) {
        (Some(n), 0) => ExtraTerm::PauliSum {
            n_qubits: n,
            terms: (0..n)
                .flat_map(|s| Axis::ALL.into_iter().map(move |a| (s, a)))
                .map(|(site, axis)| PauliTerm {
                    site,
                    axis,
                    coeff: rng.random_range(-1.0..1.0),
                })
                .collect(),
        },
        (None, 0) => ExtraTerm::ShiftPair {
            strength: rng.random_range(0.0..2.0),
        },
        _ => ExtraTerm::None,
    };
    h.with_extra(extra).unwrap()
}

fn invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut parts = Vec::new();
    let mut ok = true;

    // unitarity of both propagators
    let mut worst_u: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(1..=6u32);
        let d = 1usize << n;
        let h = random_hamiltonian(&mut rng, d, Some(n));
        let v = random_vector(&mut rng, d);
        let out = if h.is_low_rank() {
            let u = LowRankPropagator::new(&h).unwrap();
            let m = u.apply_columns(&CMatrix::identity(d, d)).unwrap();
            worst_u = worst_u.max((m.adjoint() * &m - CMatrix::identity(d, d)).norm());
            u.apply(&v).unwrap()
        } else {
            krylov_exp_apply(&h, &v, 1e-12, 64).unwrap().vector
        };
        worst_u = worst_u.max((out.norm() - 1.0).abs());
    }
    ok &= worst_u < 1e-10;
    parts.push(format!("unitarity {worst_u:.2e}"));

    // trace preservation and positivity of full layers
    let mut worst_tr: f64 = 0.0;
    let mut min_eig = f64::INFINITY;
    for k in 0..100 {
        let qudit = k % 2 == 0;
        let (inst, channel) = if qudit {
            let d = rng.random_range(2..=24u64);
            (
                SearchInstance::qudit(d).unwrap(),
                Channel::qudit_shift(rng.random()).unwrap(),
            )
        } else {
            let n = rng.random_range(1..=4u32);
            let w = PauliWeights::sample(rng.random(), n, WeightDistribution::NormalizedUniform)
                .unwrap();
            (
                SearchInstance::qubits(n).unwrap(),
                Channel::qubit_pauli(rng.random(), w).unwrap(),
            )
        };
        let d = inst.dim() as usize;
        let mode = if k % 4 < 2 {
            DensityMode::Dense
        } else {
            DensityMode::Factored
        };
        let opts = EngineOptions {
            density: mode,
            force_mixed: true,
            ..EngineOptions::default()
        };
        let rank = rng.random_range(1..=d.min(4));
        let rho = random_density(&mut rng, d, rank);
        let state = QuantumStateRep::Mixed(match mode {
            DensityMode::Dense => DensityRep::Dense(rho.to_dense()),
            _ => DensityRep::Factored(rho),
        });
        let c =
            LayerCoefficients::new(rng.random(), rng.random(), rng.random_range(0.0..4.0)).unwrap();
        let noise = LayerNoise {
            coherent: ExtraTerm::None,
            channel,
        };
        let out = evolve_layer(&state, &inst, &c, &noise, &opts).unwrap();
        worst_tr = worst_tr.max((out.normalization - 1.0).abs());
        let QuantumStateRep::Mixed(rho) = out.state else {
            unreachable!()
        };
        let m = rho.to_dense();
        let e = hermitian_eigendecompose(&((&m + m.adjoint()).scale(0.5))).unwrap();
        min_eig = min_eig.min(e.values[0]);
    }
    ok &= worst_tr < 1e-10 && min_eig >= -1e-9;
    parts.push(format!(
        "layer trace {worst_tr:.2e}, min eigenvalue {min_eig:.2e}"
    ));

    // channels alone
    let mut worst_ch: f64 = 0.0;
    for k in 0..100 {
        let n = 1 + (k % 4) as u32;
        let d = 1usize << n;
        let rho = DensityRep::Factored(random_density(&mut rng, d, 1 + k % d));
        let w = PauliWeights::sample(k as u64, n, WeightDistribution::Dirichlet).unwrap();
        let eps = rng.random();
        for ch in [
            Channel::qubit_pauli(eps, w).unwrap(),
            Channel::qudit_shift(eps).unwrap(),
        ] {
            worst_ch = worst_ch.max((ch.apply(&rho).unwrap().trace() - 1.0).abs());
        }
    }
    ok &= worst_ch < 1e-10;
    parts.push(format!("channel trace {worst_ch:.2e}"));

    // Krylov against the dense exponential
    let tol = 1e-10;
    let mut worst_k: f64 = 0.0;
    for k in 0..100 {
        let (d, qubits) = if k % 2 == 0 {
            let n = rng.random_range(2..=6u32);
            (1usize << n, Some(n))
        } else {
            (rng.random_range(2..=64usize), None)
        };
        let h = random_hamiltonian(&mut rng, d, qubits);
        let v = random_vector(&mut rng, d);
        let dense = dense_unitary_exp(&h.to_dense(64).unwrap(), 64).unwrap() * &v;
        let kr = krylov_exp_apply(&h, &v, tol, 64).unwrap().vector;
        worst_k = worst_k.max((dense - kr).norm());
    }
    ok &= worst_k < tol;
    parts.push(format!("krylov vs dense {worst_k:.2e} (tol {tol:e})"));

    // byte-identical reruns
    let mut identical = true;
    for k in 0..100u64 {
        let (inst, mechanism) = match k % 4 {
            0 => (SearchInstance::qubits(3).unwrap(), Mechanism::QubitCoherent),
            1 => (SearchInstance::qubits(3).unwrap(), Mechanism::QubitChannel),
            2 => (SearchInstance::qudit(9).unwrap(), Mechanism::QuditCoherent),
            _ => (SearchInstance::qudit(9).unwrap(), Mechanism::QuditChannel),
        };
        let config = RunConfig {
            instance: inst,
            schedule: ScheduleSpec::Grover { layers: 6 },
            r: rng.random_range(0.0..3.0),
            noise: NoiseSpec::new(mechanism, rng.random_range(0.0..6.0), rng.random()),
        };
        let a = serde_json::to_vec(&run(&config, &EngineOptions::default()).unwrap()).unwrap();
        let b = serde_json::to_vec(&run(&config, &EngineOptions::default()).unwrap()).unwrap();
        identical &= a == b;
    }
    let mut sweep = ExperimentConfig::new(
        vec![SearchInstance::qubits(3).unwrap()],
        ScheduleSpec::Grover { layers: 8 },
    );
    sweep.mechanism = Mechanism::QubitCoherent;
    sweep.eps_grid = vec![1.0, 2.0];
    sweep.realizations = 4;
    let a = serde_json::to_vec(&run_sweep(&sweep).unwrap()).unwrap();
    sweep.parallelism = Parallelism::Sequential;
    let b = serde_json::to_vec(&run_sweep(&sweep).unwrap()).unwrap();
    identical &= a == b;
    ok &= identical;
    parts.push(format!("reruns identical: {identical}"));

    outcome(ok, parts.join("; "))
}

fn main() {
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let criteria: [Criterion; 7] = [
        (1, "grover scaling without noise", grover_scaling),
        (2, "reinforced scaling without noise", reinforced_scaling),
        (3, "optimal reinforcement location", optimal_reinforcement),
        (4, "coherent noise benefit", coherent_benefit),
        (5, "noisy computation time reduction", noisy_time_reduction),
        (6, "two-level oracle equivalence", oracle_equivalence),
        (7, "invariant suite", invariants),
    ];
    let mut failed = 0;
    for (id, name, f) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let res = f();
        let tag = if res.passed { "PASS" } else { "FAIL" };
        println!(
            "[{tag}] criterion {id} {name} ({:.1}s): {}",
            start.elapsed().as_secs_f64(),
            res.detail
        );
        if !res.passed {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
