//! Exact noise-free dynamics on `span{|ψ_f⟩, |ψ_f^⊥⟩}`.
//!
//! Without noise every Hamiltonian in the problem leaves this plane
//! invariant, so one layer is a 2×2 unitary
//! `e^{−ih₀}(cos h · I − i sin h · ĥ·σ)` whose field depends on the current
//! amplitudes through the feedback term. This path handles any `N`.

use serde::{Deserialize, Serialize};

use crate::optimize::{grid_maximize, GreedySettings};
use crate::problem::LayerCoefficients;
use crate::spectral::C64;
use crate::{Error, Result};

/// `α|ψ_f⟩ + β|ψ_f^⊥⟩`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelState {
    pub alpha: C64,
    pub beta: C64,
}

impl TwoLevelState {
    pub fn new(alpha: C64, beta: C64) -> Result<Self> {
        let n = alpha.norm_sqr() + beta.norm_sqr();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("state", format!("|α|²+|β|² = {n}")));
        }
        Ok(TwoLevelState { alpha, beta })
    }

    /// `√P0|ψ_f⟩ + √(1−P0)|ψ_f^⊥⟩`
    pub fn initial(p0: f64) -> Self {
        TwoLevelState {
            alpha: C64::new(p0.sqrt(), 0.0),
            beta: C64::new((1.0 - p0).sqrt(), 0.0),
        }
    }

    pub fn target() -> Self {
        TwoLevelState {
            alpha: C64::new(1.0, 0.0),
            beta: C64::new(0.0, 0.0),
        }
    }

    /// Success probability `|α|²`.
    pub fn success(&self) -> f64 {
        self.alpha.norm_sqr()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.alpha.norm_sqr() + self.beta.norm_sqr()
    }
}

/// `H = h₀ I + hx σx + hy σy + hz σz` in the `(ψ_f, ψ_f^⊥)` basis.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldVector {
    pub h0: f64,
    pub hx: f64,
    pub hy: f64,
    pub hz: f64,
}

impl FieldVector {
    pub fn magnitude(&self) -> f64 {
        (self.hx * self.hx + self.hy * self.hy + self.hz * self.hz).sqrt()
    }
}

pub fn field_components(c: &LayerCoefficients, p0: f64, s: &TwoLevelState) -> FieldVector {
    let ab = s.alpha * s.beta.conj();
    FieldVector {
        h0: 0.5 * (c.a + c.b - c.r),
        hx: -c.a * (p0 * (1.0 - p0)).sqrt() - c.r * ab.re,
        hy: c.r * ab.im,
        hz: 0.5 * (c.a - c.b - 2.0 * c.a * p0 - c.r * (2.0 * s.alpha.norm_sqr() - 1.0)),
    }
}

/// Applies `e^{−ih₀}(cos h · I − i sin h · ĥ·σ)`; at `h = 0` only the phase.
pub fn evolve_two_level(s: &TwoLevelState, f: &FieldVector) -> TwoLevelState {
    let h = f.magnitude();
    let (c, sinc) = if h > 0.0 {
        (h.cos(), h.sin() / h)
    } else {
        (1.0, 0.0)
    };
    let mi = C64::new(0.0, -sinc);
    let off_up = C64::new(f.hx, -f.hy);
    let off_down = C64::new(f.hx, f.hy);
    let alpha = s.alpha * c + mi * (s.alpha * f.hz + off_up * s.beta);
    let beta = s.beta * c + mi * (off_down * s.alpha - s.beta * f.hz);
    let phase = C64::from_polar(1.0, -f.h0);
    TwoLevelState {
        alpha: alpha * phase,
        beta: beta * phase,
    }
}

/// One layer with explicit coefficients.
pub fn step(s: &TwoLevelState, c: &LayerCoefficients, p0: f64) -> TwoLevelState {
    evolve_two_level(s, &field_components(c, p0, s))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyStep {
    pub coefficients: LayerCoefficients,
    pub success: f64,
    pub state: TwoLevelState,
}

/// Locally optimal `(A*, B*)`: maximizes the success probability after one layer.
pub fn greedy_step(
    s: &TwoLevelState,
    r: f64,
    p0: f64,
    settings: &GreedySettings,
) -> Result<GreedyStep> {
    let opt = grid_maximize(settings, |a, b| {
        let c = LayerCoefficients { a, b, r };
        Ok(step(s, &c, p0).success())
    })?;
    let coefficients = LayerCoefficients::new(opt.a, opt.b, r)?;
    let state = step(s, &coefficients, p0);
    Ok(GreedyStep {
        coefficients,
        success: state.success(),
        state,
    })
}

/// Outcome of a computation-time search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "status")]
pub enum ComputationTime {
    Reached { layers: usize },
    NotReached { best_success: f64 },
}

impl ComputationTime {
    pub fn layers(&self) -> Option<usize> {
        match self {
            ComputationTime::Reached { layers } => Some(*layers),
            ComputationTime::NotReached { .. } => None,
        }
    }
}

/// `⌈10√dim⌉`
pub fn default_lmax(dim: u64) -> usize {
    (10.0 * (dim as f64).sqrt()).ceil() as usize
}

/// Greedy trajectory of `layers` steps from `|ψ_i⟩`.
pub fn greedy_trajectory(
    p0: f64,
    r: f64,
    layers: usize,
    settings: &GreedySettings,
) -> Result<Vec<GreedyStep>> {
    let mut s = TwoLevelState::initial(p0);
    let mut out = Vec::with_capacity(layers);
    for _ in 0..layers {
        let g = greedy_step(&s, r, p0, settings)?;
        s = g.state;
        out.push(g);
    }
    Ok(out)
}

/// Smallest number of greedy layers after which `P_success > 1 − δ`.
pub fn computation_time_two_level(
    p0: f64,
    r: f64,
    delta: f64,
    lmax: usize,
    settings: &GreedySettings,
) -> Result<ComputationTime> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("delta", format!("{delta} not in (0, 1)")));
    }
    if lmax < 1 {
        return Err(Error::invalid("lmax", "must be >= 1"));
    }
    let threshold = 1.0 - delta;
    if p0 > threshold {
        return Ok(ComputationTime::Reached { layers: 0 });
    }
    let mut s = TwoLevelState::initial(p0);
    let mut best = p0;
    for layer in 1..=lmax {
        let g = greedy_step(&s, r, p0, settings)?;
        s = g.state;
        best = best.max(g.success);
        if g.success > threshold {
            return Ok(ComputationTime::Reached { layers: layer });
        }
    }
    Ok(ComputationTime::NotReached { best_success: best })
}

/// Success probability after each layer of an explicit schedule.
pub fn run_schedule(p0: f64, schedule: &[LayerCoefficients]) -> Vec<f64> {
    let mut s = TwoLevelState::initial(p0);
    schedule
        .iter()
        .map(|c| {
            s = step(&s, c, p0);
            s.success()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimize::SearchDomain;
    use crate::problem::{assemble_hamiltonian, QuantumStateRep, SearchInstance};
    use crate::spectral::{dense_unitary_exp, inner, CMatrix, ExtraTerm};
    use rand::{Rng, SeedableRng};

    fn coeffs(a: f64, b: f64, r: f64) -> LayerCoefficients {
        LayerCoefficients::new(a, b, r).unwrap()
    }

    fn random_state(rng: &mut impl Rng) -> TwoLevelState {
        let a = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        let b = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
        TwoLevelState::new(a / n, b / n).unwrap()
    }

    #[test]
    fn hy_vanishes_without_feedback_or_phase() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let s = random_state(&mut rng);
            assert_eq!(field_components(&coeffs(0.3, 0.8, 0.0), 0.1, &s).hy, 0.0);
        }
        let real = TwoLevelState::new(C64::new(0.6, 0.0), C64::new(-0.8, 0.0)).unwrap();
        assert_eq!(field_components(&coeffs(0.3, 0.8, 1.7), 0.1, &real).hy, 0.0);
    }

    #[test]
    fn fields_match_dense_projection() {
        // A = 1, B = 0, r = 0 at the initial state, and a generic case with feedback
        let inst = SearchInstance::qubits(4).unwrap();
        let p0 = inst.p0();
        let f = inst.target_state().unwrap();
        let perp = inst.orthogonal_state().unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let cases = [
            (coeffs(1.0, 0.0, 0.0), TwoLevelState::initial(p0)),
            (coeffs(0.4, 0.9, 1.3), random_state(&mut rng)),
        ];
        for (c, s) in cases {
            let psi = f.scale(1.0) * s.alpha + &perp * s.beta;
            let h = assemble_hamiltonian(&inst, &c, &QuantumStateRep::Pure(psi), &ExtraTerm::None)
                .unwrap()
                .to_dense(1024)
                .unwrap();
            let e =
                |x: &crate::spectral::CVector, y: &crate::spectral::CVector| inner(x, &(&h * y));
            let (hff, hfp, hpp) = (e(&f, &f), e(&f, &perp), e(&perp, &perp));
            let fv = field_components(&c, p0, &s);
            assert!((hff.re - (fv.h0 + fv.hz)).abs() < 1e-12);
            assert!((hpp.re - (fv.h0 - fv.hz)).abs() < 1e-12);
            assert!((hfp - C64::new(fv.hx, -fv.hy)).norm() < 1e-12);
        }
        let fv = field_components(&coeffs(1.0, 0.0, 0.0), p0, &TwoLevelState::initial(p0));
        assert!((fv.hx + (p0 * (1.0 - p0)).sqrt()).abs() < 1e-15);
        assert!((fv.hz - 0.5 * (1.0 - 2.0 * p0)).abs() < 1e-15);
    }

    #[test]
    fn zero_field_is_identity() {
        let s = TwoLevelState::initial(0.2);
        assert_eq!(evolve_two_level(&s, &FieldVector::default()), s);
    }

    #[test]
    fn sigma_z_field_only_adds_phase() {
        let s = TwoLevelState::target();
        let f = FieldVector {
            hz: std::f64::consts::FRAC_PI_2,
            ..FieldVector::default()
        };
        let out = evolve_two_level(&s, &f);
        assert!((out.alpha.norm() - 1.0).abs() < 1e-15);
        assert!(out.beta.norm() < 1e-15);
    }

    #[test]
    fn matches_dense_two_by_two_exponential() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let s = random_state(&mut rng);
            let f = FieldVector {
                h0: rng.random::<f64>() * 2.0,
                hx: rng.random::<f64>() - 0.5,
                hy: rng.random::<f64>() - 0.5,
                hz: 3.0 * (rng.random::<f64>() - 0.5),
            };
            let h = CMatrix::from_row_slice(
                2,
                2,
                &[
                    C64::new(f.h0 + f.hz, 0.0),
                    C64::new(f.hx, -f.hy),
                    C64::new(f.hx, f.hy),
                    C64::new(f.h0 - f.hz, 0.0),
                ],
            );
            let u = dense_unitary_exp(&h, 2).unwrap();
            let v = crate::spectral::CVector::from_vec(vec![s.alpha, s.beta]);
            let w = u * v;
            let out = evolve_two_level(&s, &f);
            assert!((out.alpha - w[0]).norm() < 1e-12 && (out.beta - w[1]).norm() < 1e-12);
            assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn target_is_a_greedy_fixed_point() {
        for r in [0.0, 1.0, 2.5] {
            let g = greedy_step(
                &TwoLevelState::target(),
                r,
                1.0 / 64.0,
                &GreedySettings::default(),
            )
            .unwrap();
            assert!((g.success - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn coarse_greedy_equals_explicit_max() {
        let p0 = 1.0 / 16.0;
        let s = TwoLevelState::initial(p0);
        let g = greedy_step(&s, 0.0, p0, &GreedySettings::coarse_only(3)).unwrap();
        let mut best: f64 = 0.0;
        for a in [0.0, 0.5, 1.0] {
            for b in [0.0, 0.5, 1.0] {
                best = best.max(step(&s, &coeffs(a, b, 0.0), p0).success());
            }
        }
        assert_eq!(g.success, best);
    }

    #[test]
    fn greedy_matches_fine_brute_force() {
        let p0 = 1.0 / 16.0;
        let s = TwoLevelState::initial(p0);
        let g = greedy_step(&s, 0.0, p0, &GreedySettings::default()).unwrap();
        let mut best: f64 = 0.0;
        for i in 0..=1000 {
            for j in 0..=1000 {
                let c = coeffs(i as f64 / 1000.0, j as f64 / 1000.0, 0.0);
                best = best.max(step(&s, &c, p0).success());
            }
        }
        assert!((g.success - best).abs() < 1e-6, "{} vs {best}", g.success);
    }

    #[test]
    fn threshold_below_start_needs_no_layers() {
        let p0 = 1.0 / 8.0;
        let t = computation_time_two_level(p0, 1.0, 0.9, 10, &GreedySettings::default()).unwrap();
        assert_eq!(t, ComputationTime::Reached { layers: 0 });
    }

    #[test]
    fn single_qubit_needs_one_layer() {
        // exhaustive single-layer oracle: some (A, B) exceeds 1/2
        let p0 = 0.5;
        let s = TwoLevelState::initial(p0);
        let mut best: f64 = 0.0;
        for i in 0..=200 {
            for j in 0..=200 {
                best = best
                    .max(step(&s, &coeffs(i as f64 / 200.0, j as f64 / 200.0, 0.0), p0).success());
            }
        }
        assert!(best > 0.5);
        let t = computation_time_two_level(p0, 0.0, 0.5, 10, &GreedySettings::default()).unwrap();
        assert_eq!(t, ComputationTime::Reached { layers: 1 });
    }

    #[test]
    fn reports_not_reached() {
        let t = computation_time_two_level(1.0 / 4096.0, 0.0, 0.5, 3, &GreedySettings::default())
            .unwrap();
        match t {
            ComputationTime::NotReached { best_success } => assert!(best_success < 0.5),
            other => panic!("{other:?}"),
        }
        assert!(computation_time_two_level(0.5, 0.0, 1.5, 3, &GreedySettings::default()).is_err());
    }

    #[test]
    fn norm_preserved_over_many_layers() {
        let p0 = 1.0 / 1024.0;
        let mut s = TwoLevelState::initial(p0);
        let c = coeffs(0.6, 0.55, 1.0);
        for _ in 0..10_000 {
            s = step(&s, &c, p0);
        }
        assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn annealing_line_domain_is_supported() {
        let settings = GreedySettings {
            domain: SearchDomain::AnnealingLine,
            ..GreedySettings::default()
        };
        let g = greedy_step(&TwoLevelState::initial(0.01), 1.0, 0.01, &settings).unwrap();
        assert!((g.coefficients.a + g.coefficients.b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grover_scaling_at_small_sizes() {
        let settings = GreedySettings::default();
        let l = |n: i32| {
            computation_time_two_level(2f64.powi(-n), 0.0, 0.5, 100_000, &settings)
                .unwrap()
                .layers()
                .unwrap() as f64
        };
        // quadrupling the dimension roughly doubles the time
        let ratio = l(14) / l(12);
        assert!((1.8..2.2).contains(&ratio), "{ratio}");
    }
}
