//! Layered evolution in the full Hilbert space, greedy coefficient selection
//! and computation-time measurement.
//!
//! Pure states are propagated with the exact low-rank propagator when the
//! Hamiltonian has no noise term and with Krylov otherwise. Mixed states use
//! a dense matrix up to `mixed_dense_cap` and the factored form above it.

use serde::{Deserialize, Serialize};

use crate::noise::{Channel, LayerNoise, NoiseSpec, PauliWeights};
use crate::optimize::{grid_maximize, GreedySettings, Optimum};
use crate::problem::{
    assemble_hamiltonian, success_probability, GroverSchedule, LayerCoefficients, QuantumStateRep,
    ScheduleSpec, SearchInstance,
};
use crate::spectral::{
    basis_vector, columns_to_matrix, conjugate_density, dense_unitary_exp,
    hermitian_eigendecompose, inner, krylov_exp_apply, orthonormal_basis, truncate_rank, CMatrix,
    CVector, DensityRep, ExtraTerm, FactoredDensity, KrylovPropagator, LowRankPropagator,
    StructuredHamiltonian, C64,
};
use crate::twolevel::{computation_time_two_level, ComputationTime};
use crate::{Error, Result, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityMode {
    /// Dense up to `mixed_dense_cap`, factored above.
    #[default]
    Auto,
    Dense,
    Factored,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineOptions {
    pub tolerances: Tolerances,
    pub density: DensityMode,
    /// Run the density path even without a channel.
    pub force_mixed: bool,
}

/// Per-layer outcome. `layer` counts from 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub layer: usize,
    pub coefficients: LayerCoefficients,
    pub success: f64,
    /// Norm squared (pure) or trace (mixed) before truncation.
    pub normalization: f64,
    pub truncation_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub instance: SearchInstance,
    pub schedule: ScheduleSpec,
    /// Reinforcement strength for Grover and greedy schedules.
    pub r: f64,
    pub noise: NoiseSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub config: RunConfig,
    pub records: Vec<LayerRecord>,
    pub final_success: f64,
}

impl RunTrace {
    pub fn successes(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.success).collect()
    }

    pub fn best_success(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.success)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn mixed_representation(inst: &SearchInstance, opts: &EngineOptions) -> Result<bool> {
    let dim = inst.dim() as usize;
    let tol = &opts.tolerances;
    match opts.density {
        DensityMode::Dense if dim > tol.mixed_dense_cap => Err(Error::DimensionCap {
            what: "dense mixed state",
            dim,
            cap: tol.mixed_dense_cap,
        }),
        DensityMode::Dense => Ok(false),
        _ if dim > tol.mixed_factored_cap => Err(Error::DimensionCap {
            what: "factored mixed state",
            dim,
            cap: tol.mixed_factored_cap,
        }),
        DensityMode::Factored => Ok(true),
        DensityMode::Auto => Ok(dim > tol.mixed_dense_cap),
    }
}

/// `|ψ_i⟩` in the representation a run with this noise uses.
pub fn initial_state(
    inst: &SearchInstance,
    noise: &NoiseSpec,
    opts: &EngineOptions,
) -> Result<QuantumStateRep> {
    let dim = inst.full_space_dim(&opts.tolerances)?;
    let psi = CVector::from_element(dim, C64::new((dim as f64).recip().sqrt(), 0.0));
    if noise.mechanism.is_channel() || opts.force_mixed {
        Ok(QuantumStateRep::Mixed(
            if mixed_representation(inst, opts)? {
                DensityRep::pure_factored(&psi)
            } else {
                DensityRep::pure_dense(&psi)
            },
        ))
    } else {
        Ok(QuantumStateRep::Pure(psi))
    }
}

fn propagate_pure(h: &StructuredHamiltonian, psi: &CVector, tol: &Tolerances) -> Result<CVector> {
    use crate::spectral::UnitaryAction;
    if h.is_low_rank() {
        LowRankPropagator::new(h)?.apply(psi)
    } else {
        Ok(krylov_exp_apply(h, psi, tol.krylov_tol, tol.krylov_max_dim)?.vector)
    }
}

fn conjugate(h: &StructuredHamiltonian, rho: &DensityRep, tol: &Tolerances) -> Result<DensityRep> {
    use crate::spectral::HermitianOp;
    if h.is_low_rank() {
        conjugate_density(&LowRankPropagator::new(h)?, rho)
    } else if h.dim() <= tol.dense_cap {
        conjugate_density(
            &dense_unitary_exp(&h.to_dense(tol.dense_cap)?, tol.dense_cap)?,
            rho,
        )
    } else {
        let k = KrylovPropagator {
            op: h,
            tol: tol.krylov_tol,
            max_dim: tol.krylov_max_dim,
        };
        conjugate_density(&k, rho)
    }
}

fn drop_null_weights(f: FactoredDensity) -> Result<FactoredDensity> {
    if f.weights().iter().all(|&w| w > 0.0) {
        return Ok(f);
    }
    let keep: Vec<usize> = (0..f.rank()).filter(|&k| f.weights()[k] > 0.0).collect();
    let weights = keep.iter().map(|&k| f.weights()[k]).collect();
    let vectors = CMatrix::from_fn(f.dim(), keep.len(), |r, c| f.vectors()[(r, keep[c])]);
    FactoredDensity::new(weights, vectors)
}

/// Result of one layer: new state, its normalization before truncation and
/// the discarded eigenvalue mass.
#[derive(Debug, Clone)]
pub struct LayerOutcome {
    pub state: QuantumStateRep,
    pub normalization: f64,
    pub truncation_loss: f64,
}

/// `ρ → E_l(U_l ρ U_l†)` with `H_l` built from the current state.
pub fn evolve_layer(
    state: &QuantumStateRep,
    inst: &SearchInstance,
    c: &LayerCoefficients,
    noise: &LayerNoise,
    opts: &EngineOptions,
) -> Result<LayerOutcome> {
    let tol = &opts.tolerances;
    let h = assemble_hamiltonian(inst, c, state, &noise.coherent)?;
    match state {
        QuantumStateRep::Pure(psi) => {
            if !noise.channel.is_identity() {
                return Err(Error::Unsupported("a channel needs a mixed state".into()));
            }
            let out = propagate_pure(&h, psi, tol)?;
            let n = out.norm_squared();
            Ok(LayerOutcome {
                state: QuantumStateRep::Pure(out),
                normalization: n,
                truncation_loss: 0.0,
            })
        }
        QuantumStateRep::Mixed(rho) => {
            let rotated = conjugate(&h, rho, tol)?;
            let out = noise.channel.apply(&rotated)?;
            let n = out.trace();
            let (out, loss) = match out {
                DensityRep::Dense(_) => (out, 0.0),
                DensityRep::Factored(_) => {
                    let (t, report) = truncate_rank(&out, tol.truncation_budget)?;
                    let DensityRep::Factored(f) = t else {
                        unreachable!()
                    };
                    (
                        DensityRep::Factored(drop_null_weights(f)?),
                        report.discarded_mass,
                    )
                }
            };
            Ok(LayerOutcome {
                state: QuantumStateRep::Mixed(out),
                normalization: n,
                truncation_loss: loss,
            })
        }
    }
}

/// One-layer success probability as a function of `(A, B)`, evaluated in the
/// subspace spanned by `|ψ_i⟩`, `|ψ_f⟩` and the range of `ρ`.
///
/// Without a noise term `H − (A+B)I` lives in that subspace `W`, so
/// `U ρ U† = W e^{−iM} R e^{iM} W†` with `M = −A aa† − B bb† − rR`.
struct ProjectedObjective {
    a: CVector,
    b: CVector,
    r_mat: CMatrix,
    /// `(q, W†g)`: the objective is `Σ q ⟨g|U ρ U†|g⟩`.
    probes: Vec<(f64, CVector)>,
}

impl ProjectedObjective {
    fn new(state: &QuantumStateRep, inst: &SearchInstance, channel: &Channel) -> Result<Self> {
        let psi_i = inst.initial_state()?;
        let target = inst.target();
        let dim = state.dim();
        let psi_f = basis_vector(dim, target);
        let components: Vec<(f64, CVector)> = match state {
            QuantumStateRep::Pure(v) => vec![(1.0, v.clone())],
            QuantumStateRep::Mixed(rho) => {
                let f = rho.to_factored()?;
                (0..f.rank())
                    .filter(|&k| f.weights()[k] > 1e-15)
                    .map(|k| (f.weights()[k], f.vector(k)))
                    .collect()
            }
        };
        let basis = orthonormal_basis(
            [&psi_i, &psi_f]
                .into_iter()
                .chain(components.iter().map(|(_, v)| v)),
            1e-12,
        );
        let w = columns_to_matrix(dim, &basis);
        let wa = w.adjoint();
        let m = w.ncols();
        let mut r_mat = CMatrix::zeros(m, m);
        for (p, v) in &components {
            let c = &wa * v;
            r_mat += (&c * c.adjoint()).scale(*p);
        }
        let probes = match channel {
            Channel::Identity => vec![(1.0, &wa * &psi_f)],
            // X†|t⟩ = |t−1⟩
            Channel::QuditShift { eps } => vec![
                (1.0 - eps, &wa * &psi_f),
                (*eps, &wa * basis_vector(dim, (target + dim - 1) % dim)),
            ],
            Channel::QubitPauli { .. } => {
                return Err(Error::Unsupported(
                    "greedy optimization with a random Pauli channel".into(),
                ))
            }
        };
        Ok(ProjectedObjective {
            a: &wa * psi_i,
            b: &wa * psi_f,
            r_mat,
            probes,
        })
    }

    fn value(&self, a: f64, b: f64, r: f64) -> Result<f64> {
        let m = (&self.a * self.a.adjoint()).scale(-a) + (&self.b * self.b.adjoint()).scale(-b)
            - self.r_mat.scale(r);
        let eig = hermitian_eigendecompose(&m)?;
        // e^{+iM}
        let back = eig.apply_function(|x| C64::from_polar(1.0, x));
        let mut total = 0.0;
        for (q, u) in &self.probes {
            if *q == 0.0 {
                continue;
            }
            let y = &back * u;
            total += q * inner(&y, &(&self.r_mat * &y)).re;
        }
        Ok(total)
    }
}

/// Greedy `(A*, B*)` for the next layer. The noise context must be
/// deterministic: none, the qudit coherent term or the shift channel.
pub fn locally_optimal_coefficients(
    state: &QuantumStateRep,
    inst: &SearchInstance,
    r: f64,
    noise: &LayerNoise,
    settings: &GreedySettings,
    opts: &EngineOptions,
) -> Result<Optimum> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::invalid("r", format!("{r} must be finite and >= 0")));
    }
    if matches!(noise.coherent, ExtraTerm::PauliSum { .. })
        || matches!(noise.channel, Channel::QubitPauli { .. })
    {
        return Err(Error::Unsupported(
            "greedy optimization needs deterministic noise; random qubit noise has no single objective".into(),
        ));
    }
    let silent = LayerNoise::default();
    let context = if settings.noise_aware { noise } else { &silent };
    if context.coherent.is_none() {
        let objective = ProjectedObjective::new(state, inst, &context.channel)?;
        grid_maximize(settings, |a, b| objective.value(a, b, r))
    } else {
        grid_maximize(settings, |a, b| {
            let c = LayerCoefficients { a, b, r };
            let out = evolve_layer(state, inst, &c, context, opts)?;
            Ok(success_probability(&out.state, inst))
        })
    }
}

/// Coefficient source for one run.
enum Driver<'a> {
    Grover(GroverSchedule, f64),
    Greedy(&'a GreedySettings, f64),
    Explicit(&'a [LayerCoefficients]),
}

struct RunOutcome {
    records: Vec<LayerRecord>,
    reached: bool,
}

/// Runs `budget` layers (fewer if `stop_above` is exceeded first).
fn run_layers(
    inst: &SearchInstance,
    driver: &Driver,
    budget: usize,
    noise: &NoiseSpec,
    opts: &EngineOptions,
    stop_above: Option<f64>,
) -> Result<RunOutcome> {
    noise.validate(inst, budget)?;
    let weights: Option<PauliWeights> = match inst.n_qubits() {
        Some(n) => noise.channel_weights(n)?,
        None => None,
    };
    let mut state = initial_state(inst, noise, opts)?;
    let mut records = Vec::with_capacity(budget);
    for l in 0..budget {
        let layer_noise = noise.layer_noise(inst, budget, l + 1, weights.as_ref())?;
        let c = match driver {
            Driver::Grover(g, r) => g.coefficients(l, *r)?,
            Driver::Explicit(cs) => cs[l],
            Driver::Greedy(settings, r) => {
                let opt =
                    locally_optimal_coefficients(&state, inst, *r, &layer_noise, settings, opts)?;
                LayerCoefficients::new(opt.a, opt.b, *r)?
            }
        };
        let out = evolve_layer(&state, inst, &c, &layer_noise, opts)?;
        state = out.state;
        let success = success_probability(&state, inst);
        log::trace!(
            "layer {} A={} B={} r={} P={}",
            l + 1,
            c.a,
            c.b,
            c.r,
            success
        );
        records.push(LayerRecord {
            layer: l + 1,
            coefficients: c,
            success,
            normalization: out.normalization,
            truncation_loss: out.truncation_loss,
        });
        if let Some(t) = stop_above {
            if success > t {
                return Ok(RunOutcome {
                    records,
                    reached: true,
                });
            }
        }
    }
    Ok(RunOutcome {
        records,
        reached: false,
    })
}

/// Executes one configured run and records every layer.
pub fn run(config: &RunConfig, opts: &EngineOptions) -> Result<RunTrace> {
    let inst = &config.instance;
    let layers = config.schedule.layers();
    let driver = match &config.schedule {
        ScheduleSpec::Grover { layers } => {
            Driver::Grover(GroverSchedule::for_instance(inst, *layers)?, config.r)
        }
        ScheduleSpec::Greedy { settings, .. } => {
            settings.validate()?;
            Driver::Greedy(settings, config.r)
        }
        ScheduleSpec::Explicit { coefficients } => Driver::Explicit(coefficients),
    };
    if layers == 0 {
        return Err(Error::invalid("layers", "a run needs at least one layer"));
    }
    if !(config.r.is_finite() && config.r >= 0.0) {
        return Err(Error::invalid(
            "r",
            format!("{} must be finite and >= 0", config.r),
        ));
    }
    let out = run_layers(inst, &driver, layers, &config.noise, opts, None)?;
    let final_success = out.records.last().map(|r| r.success).unwrap_or(inst.p0());
    Ok(RunTrace {
        config: config.clone(),
        records: out.records,
        final_success,
    })
}

/// Grover-schedule annealing: `A_l = 1 − t_l`, `B_l = t_l`, constant `r`.
pub fn run_grover_annealing(
    inst: &SearchInstance,
    layers: usize,
    r: f64,
    noise: &NoiseSpec,
    opts: &EngineOptions,
) -> Result<RunTrace> {
    run(
        &RunConfig {
            instance: *inst,
            schedule: ScheduleSpec::Grover { layers },
            r,
            noise: *noise,
        },
        opts,
    )
}

pub fn run_greedy(
    inst: &SearchInstance,
    layers: usize,
    r: f64,
    noise: &NoiseSpec,
    settings: &GreedySettings,
    opts: &EngineOptions,
) -> Result<RunTrace> {
    run(
        &RunConfig {
            instance: *inst,
            schedule: ScheduleSpec::Greedy {
                layers,
                settings: settings.clone(),
            },
            r,
            noise: *noise,
        },
        opts,
    )
}

/// One evaluated layer budget during a computation-time search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetProbe {
    pub budget: usize,
    pub reached: bool,
    pub best_success: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComputationTimeReport {
    pub result: ComputationTime,
    pub probes: Vec<BudgetProbe>,
    /// The budget after the answer was checked and failed, so the answer
    /// came from a linear scan.
    pub monotonicity_violated: bool,
}

/// Smallest budget `L` such that a greedy run with `ε_l = ε/L` exceeds
/// `1 − δ` at some layer `l ≤ L`. Budgets are searched by doubling and then
/// bisection; the answer is re-checked at `L + 1` and a violation falls back
/// to a linear scan.
pub fn computation_time(
    inst: &SearchInstance,
    r: f64,
    delta: f64,
    noise: &NoiseSpec,
    lmax: usize,
    settings: &GreedySettings,
    opts: &EngineOptions,
) -> Result<ComputationTimeReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("delta", format!("{delta} not in (0, 1)")));
    }
    if lmax < 1 {
        return Err(Error::invalid("lmax", "must be >= 1"));
    }
    settings.validate()?;
    if noise.is_silent() {
        // the noise does not depend on the budget, so one run decides
        let result = computation_time_two_level(inst.p0(), r, delta, lmax, settings)?;
        return Ok(ComputationTimeReport {
            result,
            probes: Vec::new(),
            monotonicity_violated: false,
        });
    }
    if !noise.is_deterministic() {
        return Err(Error::Unsupported(
            "computation time needs deterministic noise; random qubit noise has no single objective".into(),
        ));
    }
    if inst.p0() > 1.0 - delta {
        return Ok(ComputationTimeReport {
            result: ComputationTime::Reached { layers: 0 },
            probes: Vec::new(),
            monotonicity_violated: false,
        });
    }
    let threshold = 1.0 - delta;
    let driver = Driver::Greedy(settings, r);
    let mut probes: Vec<BudgetProbe> = Vec::new();
    let mut probe = |budget: usize| -> Result<BudgetProbe> {
        if let Some(p) = probes.iter().find(|p| p.budget == budget) {
            return Ok(*p);
        }
        let p = if noise.mechanism.is_channel() && noise.per_layer(budget) > 1.0 {
            BudgetProbe {
                budget,
                reached: false,
                best_success: f64::NAN,
            }
        } else {
            let out = run_layers(inst, &driver, budget, noise, opts, Some(threshold))?;
            BudgetProbe {
                budget,
                reached: out.reached,
                best_success: out
                    .records
                    .iter()
                    .map(|r| r.success)
                    .fold(inst.p0(), f64::max),
            }
        };
        log::debug!(
            "budget {} reached={} best={}",
            p.budget,
            p.reached,
            p.best_success
        );
        probes.push(p);
        Ok(p)
    };

    // doubling
    let mut lo = 0usize;
    let mut hi = None;
    let mut b = 1usize;
    loop {
        let b_eff = b.min(lmax);
        if probe(b_eff)?.reached {
            hi = Some(b_eff);
            break;
        }
        lo = b_eff;
        if b_eff == lmax {
            break;
        }
        b *= 2;
    }
    let mut violated = false;
    let result = match hi {
        None => None,
        Some(mut hi) => {
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                if probe(mid)?.reached {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            if hi < lmax && !probe(hi + 1)?.reached {
                violated = true;
                log::warn!("budget monotonicity violated at L = {hi}; scanning linearly");
                let mut found = None;
                for l in 1..=lmax {
                    if probe(l)?.reached {
                        found = Some(l);
                        break;
                    }
                }
                found
            } else {
                Some(hi)
            }
        }
    };
    let result = match result {
        Some(layers) => ComputationTime::Reached { layers },
        None => ComputationTime::NotReached {
            best_success: probes
                .iter()
                .map(|p| p.best_success)
                .filter(|x| x.is_finite())
                .fold(inst.p0(), f64::max),
        },
    };
    probes.sort_by_key(|p| p.budget);
    Ok(ComputationTimeReport {
        result,
        probes,
        monotonicity_violated: violated,
    })
}
