//! Search instances, annealing schedules, Hamiltonian assembly with the
//! reinforcement feedback, and the success-probability observable.

use serde::{Deserialize, Serialize};

use crate::optimize::GreedySettings;
use crate::spectral::{
    basis_vector, CMatrix, CVector, DensityRep, ExtraTerm, StructuredHamiltonian, C64,
};
use crate::{Error, Result, Tolerances};

/// Largest qubit count representable with an exact `1/2^N` and `1 − 1/2^N`.
pub const MAX_QUBITS: u32 = 52;
/// Largest qudit dimension accepted anywhere.
pub const MAX_QUDIT_DIM: u64 = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    Qubit(u32),
    Qudit(u64),
}

impl Encoding {
    pub fn label(&self) -> String {
        match self {
            Encoding::Qubit(n) => format!("qubit{n}"),
            Encoding::Qudit(d) => format!("qudit{d}"),
        }
    }
}

/// Unstructured search over `dim` basis states with one marked state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchInstance {
    encoding: Encoding,
    dim: u64,
    target: u64,
}

impl SearchInstance {
    pub fn build(encoding: Encoding) -> Result<Self> {
        let dim = match encoding {
            Encoding::Qubit(n) if n == 0 || n > MAX_QUBITS => {
                return Err(Error::invalid("N", format!("{n} not in 1..={MAX_QUBITS}")))
            }
            Encoding::Qubit(n) => 1u64 << n,
            Encoding::Qudit(d) if d < 2 => return Err(Error::invalid("D", format!("{d} < 2"))),
            Encoding::Qudit(d) if d > MAX_QUDIT_DIM => {
                return Err(Error::DimensionCap {
                    what: "qudit",
                    dim: d as usize,
                    cap: MAX_QUDIT_DIM as usize,
                })
            }
            Encoding::Qudit(d) => d,
        };
        Ok(SearchInstance {
            encoding,
            dim,
            target: 0,
        })
    }

    pub fn qubits(n: u32) -> Result<Self> {
        Self::build(Encoding::Qubit(n))
    }

    pub fn qudit(d: u64) -> Result<Self> {
        Self::build(Encoding::Qudit(d))
    }

    /// Moves the marked state. All constructions are covariant under basis
    /// permutations, so this only matters for tests.
    pub fn with_target(mut self, target: u64) -> Result<Self> {
        if target >= self.dim {
            return Err(Error::invalid(
                "target",
                format!("{target} >= dim {}", self.dim),
            ));
        }
        self.target = target;
        Ok(self)
    }

    pub fn encoding(&self) -> Encoding {
        self.encoding
    }

    pub fn dim(&self) -> u64 {
        self.dim
    }

    pub fn target(&self) -> usize {
        self.target as usize
    }

    pub fn n_qubits(&self) -> Option<u32> {
        match self.encoding {
            Encoding::Qubit(n) => Some(n),
            Encoding::Qudit(_) => None,
        }
    }

    /// `P0 = 1/dim`
    pub fn p0(&self) -> f64 {
        1.0 / self.dim as f64
    }

    /// `1 − P0 = (dim − 1)/dim`
    pub fn one_minus_p0(&self) -> f64 {
        (self.dim - 1) as f64 / self.dim as f64
    }

    /// `√(P0(1 − P0)) = √(dim − 1)/dim`
    pub fn overlap(&self) -> f64 {
        ((self.dim - 1) as f64).sqrt() / self.dim as f64
    }

    /// Dimension as `usize` after checking the full-space caps.
    pub fn full_space_dim(&self, tol: &Tolerances) -> Result<usize> {
        match self.encoding {
            Encoding::Qubit(n) if n > tol.pure_qubit_cap => Err(Error::DimensionCap {
                what: "full-space qubit",
                dim: self.dim as usize,
                cap: 1usize << tol.pure_qubit_cap,
            }),
            Encoding::Qudit(d) if d as usize > tol.pure_qudit_cap => Err(Error::DimensionCap {
                what: "full-space qudit",
                dim: d as usize,
                cap: tol.pure_qudit_cap,
            }),
            _ => Ok(self.dim as usize),
        }
    }

    /// Uniform superposition `|ψ_i⟩`, the ground state of `I − |ψ_i⟩⟨ψ_i|`.
    pub fn initial_state(&self) -> Result<CVector> {
        let dim = self.full_space_dim(&Tolerances::default())?;
        let amp = C64::new((dim as f64).recip().sqrt(), 0.0);
        Ok(CVector::from_element(dim, amp))
    }

    /// `|ψ_f⟩`
    pub fn target_state(&self) -> Result<CVector> {
        let dim = self.full_space_dim(&Tolerances::default())?;
        Ok(basis_vector(dim, self.target()))
    }

    /// `|ψ_f^⊥⟩`: uniform over the unmarked states.
    pub fn orthogonal_state(&self) -> Result<CVector> {
        let dim = self.full_space_dim(&Tolerances::default())?;
        let amp = C64::new(((dim - 1) as f64).recip().sqrt(), 0.0);
        let mut v = CVector::from_element(dim, amp);
        v[self.target()] = C64::new(0.0, 0.0);
        Ok(v)
    }
}

/// `(A_l, B_l, r_l)` for one layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerCoefficients {
    pub a: f64,
    pub b: f64,
    pub r: f64,
}

impl LayerCoefficients {
    pub fn new(a: f64, b: f64, r: f64) -> Result<Self> {
        for (name, v) in [("A", a), ("B", b), ("r", r)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(name, format!("{v} must be finite and >= 0")));
            }
        }
        Ok(LayerCoefficients { a, b, r })
    }

    /// Annealing form `A = 1 − t`, `B = t`.
    pub fn annealing(t: f64, r: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::invalid("t", format!("{t} not in [0, 1]")));
        }
        Self::new(1.0 - t, t, r)
    }
}

/// Grover-optimal annealing profile for `L` layers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroverSchedule {
    p0: f64,
    layers: usize,
    phi: f64,
}

impl GroverSchedule {
    pub fn new(p0: f64, layers: usize) -> Result<Self> {
        if !(p0 > 0.0 && p0 < 1.0) {
            return Err(Error::invalid("P0", format!("{p0} not in (0, 1)")));
        }
        if layers < 2 {
            return Err(Error::invalid("L", format!("{layers} < 2")));
        }
        let phi = ((1.0 - p0) / p0).sqrt().atan();
        Ok(GroverSchedule { p0, layers, phi })
    }

    pub fn for_instance(inst: &SearchInstance, layers: usize) -> Result<Self> {
        Self::new(inst.p0(), layers)
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// `t_l = ½[1 − √(P0/(1−P0)) tan((1 − 2l/(L−1))φ)]`, exact at both ends.
    pub fn time(&self, layer: usize) -> Result<f64> {
        let last = self.layers - 1;
        if layer > last {
            return Err(Error::invalid("l", format!("{layer} > L-1 = {last}")));
        }
        if layer == 0 {
            return Ok(0.0);
        }
        if layer == last {
            return Ok(1.0);
        }
        let x = 1.0 - 2.0 * layer as f64 / last as f64;
        let ratio = (self.p0 / (1.0 - self.p0)).sqrt();
        Ok((0.5 * (1.0 - ratio * (x * self.phi).tan())).clamp(0.0, 1.0))
    }

    pub fn coefficients(&self, layer: usize, r: f64) -> Result<LayerCoefficients> {
        LayerCoefficients::annealing(self.time(layer)?, r)
    }
}

/// How a run chooses its per-layer coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum ScheduleSpec {
    Grover {
        layers: usize,
    },
    Greedy {
        layers: usize,
        settings: GreedySettings,
    },
    Explicit {
        coefficients: Vec<LayerCoefficients>,
    },
}

impl ScheduleSpec {
    pub fn layers(&self) -> usize {
        match self {
            ScheduleSpec::Grover { layers } | ScheduleSpec::Greedy { layers, .. } => *layers,
            ScheduleSpec::Explicit { coefficients } => coefficients.len(),
        }
    }
}

/// A full-space quantum state: pure vector or density operator.
#[derive(Debug, Clone, PartialEq)]
pub enum QuantumStateRep {
    Pure(CVector),
    Mixed(DensityRep),
}

impl QuantumStateRep {
    pub fn dim(&self) -> usize {
        match self {
            QuantumStateRep::Pure(v) => v.len(),
            QuantumStateRep::Mixed(rho) => rho.dim(),
        }
    }

    /// Norm squared for pure states, trace for mixed ones.
    pub fn normalization(&self) -> f64 {
        match self {
            QuantumStateRep::Pure(v) => v.norm_squared(),
            QuantumStateRep::Mixed(rho) => rho.trace(),
        }
    }

    pub fn to_dense_density(&self) -> CMatrix {
        match self {
            QuantumStateRep::Pure(v) => v * v.adjoint(),
            QuantumStateRep::Mixed(rho) => rho.to_dense(),
        }
    }
}

/// `H = A(I − |ψ_i⟩⟨ψ_i|) + B(I − |ψ_f⟩⟨ψ_f|) − r ρ + V`.
pub fn assemble_hamiltonian(
    inst: &SearchInstance,
    c: &LayerCoefficients,
    state: &QuantumStateRep,
    noise: &ExtraTerm,
) -> Result<StructuredHamiltonian> {
    let dim = inst.full_space_dim(&Tolerances::default())?;
    if state.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: state.dim(),
        });
    }
    let mut h = StructuredHamiltonian::new(dim, c.a + c.b);
    h.push_rank_one(-c.a, inst.initial_state()?)?;
    h.push_rank_one(-c.b, inst.target_state()?)?;
    if c.r != 0.0 {
        match state {
            QuantumStateRep::Pure(psi) => h.push_rank_one(-c.r, psi.clone())?,
            QuantumStateRep::Mixed(rho) => {
                let f = rho.to_factored()?;
                for (k, &p) in f.weights().iter().enumerate() {
                    if p.abs() > 1e-15 {
                        h.push_rank_one(-c.r * p, f.vector(k))?;
                    }
                }
            }
        }
    }
    h.with_extra(noise.clone())
}

/// `tr(ρ |ψ_f⟩⟨ψ_f|)`
pub fn success_probability(state: &QuantumStateRep, inst: &SearchInstance) -> f64 {
    let t = inst.target();
    match state {
        QuantumStateRep::Pure(psi) => psi[t].norm_sqr(),
        QuantumStateRep::Mixed(rho) => rho.population(t),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{hermitian_eigendecompose, inner, FactoredDensity, HermitianOp};

    #[test]
    fn single_qubit_instance() {
        let inst = SearchInstance::qubits(1).unwrap();
        assert_eq!(inst.dim(), 2);
        assert_eq!(inst.p0(), 0.5);
        let psi = inst.initial_state().unwrap();
        for z in psi.iter() {
            assert!((z.re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        }
    }

    #[test]
    fn qudit_four_is_uniform() {
        let inst = SearchInstance::qudit(4).unwrap();
        assert_eq!(inst.p0(), 0.25);
        assert!(inst
            .initial_state()
            .unwrap()
            .iter()
            .all(|z| (z.re - 0.5).abs() < 1e-15));
    }

    #[test]
    fn eight_qubits_p0() {
        let inst = SearchInstance::qubits(8).unwrap();
        assert_eq!(inst.p0(), 1.0 / 256.0);
        assert_eq!(inst.p0() * inst.dim() as f64, 1.0);
        // 2^-14 is exact in binary
        let big = SearchInstance::qubits(14).unwrap();
        assert_eq!(big.p0() * big.dim() as f64, 1.0);
    }

    #[test]
    fn initial_state_decomposition() {
        for inst in [
            SearchInstance::qubits(5).unwrap(),
            SearchInstance::qudit(37).unwrap(),
        ] {
            let built = inst.target_state().unwrap().scale(inst.p0().sqrt())
                + inst
                    .orthogonal_state()
                    .unwrap()
                    .scale(inst.one_minus_p0().sqrt());
            assert!((built - inst.initial_state().unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_instances() {
        assert!(SearchInstance::qubits(0).is_err());
        assert!(SearchInstance::qubits(MAX_QUBITS + 1).is_err());
        assert!(SearchInstance::qudit(1).is_err());
        assert!(SearchInstance::qudit(MAX_QUDIT_DIM + 1).is_err());
        assert!(SearchInstance::qudit(8).unwrap().with_target(8).is_err());
        // two-level only sizes build, but refuse full-space vectors
        let big = SearchInstance::qubits(20).unwrap();
        assert!(big.initial_state().is_err());
    }

    #[test]
    fn grover_endpoints_and_midpoint() {
        for (p0, layers) in [(1.0 / 256.0, 50), (0.5, 2), (0.01, 11)] {
            let s = GroverSchedule::new(p0, layers).unwrap();
            assert_eq!(s.time(0).unwrap(), 0.0);
            assert_eq!(s.time(layers - 1).unwrap(), 1.0);
            assert!(s.phi() > 0.0 && s.phi() < std::f64::consts::FRAC_PI_2);
        }
        let s = GroverSchedule::new(0.01, 11).unwrap();
        assert!((s.time(5).unwrap() - 0.5).abs() < 1e-15);
        // the closed form itself hits the endpoints
        let ratio = (0.01f64 / 0.99).sqrt();
        assert!((ratio * s.phi().tan() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn grover_reference_value() {
        // mpmath at 50 digits: P0 = 1/256, L = 50, l = 10
        let s = GroverSchedule::new(1.0 / 256.0, 50).unwrap();
        let t = s.time(10).unwrap();
        assert!((t - GROVER_T_256_50_10).abs() < 1e-15, "{t}");
    }

    const GROVER_T_256_50_10: f64 = 0.461_133_767_835_748_2;

    #[test]
    fn grover_rejects_bad_inputs() {
        assert!(GroverSchedule::new(0.0, 10).is_err());
        assert!(GroverSchedule::new(1.0, 10).is_err());
        assert!(GroverSchedule::new(0.5, 1).is_err());
        assert!(GroverSchedule::new(0.5, 5).unwrap().time(5).is_err());
    }

    fn pure(inst: &SearchInstance) -> QuantumStateRep {
        QuantumStateRep::Pure(inst.initial_state().unwrap())
    }

    #[test]
    fn zero_coefficients_give_zero_operator() {
        let inst = SearchInstance::qubits(3).unwrap();
        let c = LayerCoefficients::new(0.0, 0.0, 0.0).unwrap();
        let h = assemble_hamiltonian(&inst, &c, &pure(&inst), &ExtraTerm::None).unwrap();
        assert!(h.to_dense(1024).unwrap().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn target_expectation_without_feedback() {
        let inst = SearchInstance::qudit(9).unwrap();
        let c = LayerCoefficients::new(0.7, 0.4, 0.0).unwrap();
        let h = assemble_hamiltonian(&inst, &c, &pure(&inst), &ExtraTerm::None).unwrap();
        let f = inst.target_state().unwrap();
        let e = inner(&f, &h.apply(&f)).re;
        assert!((e - 0.7 * inst.one_minus_p0()).abs() < 1e-14);
    }

    #[test]
    fn mixed_feedback_matches_dense_assembly() {
        use crate::spectral::testing::*;
        use rand::Rng;
        let mut rng = rng(16);
        let inst = SearchInstance::qubits(4).unwrap();
        let f = random_factored(&mut rng, 16, 2);
        let c =
            LayerCoefficients::new(rng.random(), rng.random(), 2.0 * rng.random::<f64>()).unwrap();
        let dense_rho = f.to_dense();
        for state in [
            QuantumStateRep::Mixed(DensityRep::Factored(f.clone())),
            QuantumStateRep::Mixed(DensityRep::Dense(dense_rho.clone())),
        ] {
            let h = assemble_hamiltonian(&inst, &c, &state, &ExtraTerm::None).unwrap();
            let psi_i = inst.initial_state().unwrap();
            let psi_f = inst.target_state().unwrap();
            let id = CMatrix::identity(16, 16);
            let reference = (&id - &psi_i * psi_i.adjoint()).scale(c.a)
                + (&id - &psi_f * psi_f.adjoint()).scale(c.b)
                - dense_rho.scale(c.r);
            for _ in 0..20 {
                let v = random_vector(&mut rng, 16);
                assert!((h.apply(&v) - &reference * &v).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn ground_states_of_endpoint_hamiltonians() {
        let inst = SearchInstance::qudit(12).unwrap();
        let state = pure(&inst);
        for (a, b, expected) in [
            (1.0, 0.0, inst.initial_state().unwrap()),
            (0.0, 1.0, inst.target_state().unwrap()),
        ] {
            let c = LayerCoefficients::new(a, b, 0.0).unwrap();
            let h = assemble_hamiltonian(&inst, &c, &state, &ExtraTerm::None).unwrap();
            let eig = hermitian_eigendecompose(&h.to_dense(1024).unwrap()).unwrap();
            assert!(eig.values[0].abs() < 1e-12);
            assert!(eig.values[1] - eig.values[0] > 0.5);
            let ground = eig.vectors.column(0).into_owned();
            assert!((inner(&ground, &expected).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn success_probability_cases() {
        let inst = SearchInstance::qubits(3).unwrap();
        let f = inst.target_state().unwrap();
        assert_eq!(
            success_probability(&QuantumStateRep::Pure(f.clone()), &inst),
            1.0
        );
        let p = success_probability(&pure(&inst), &inst);
        assert!((p - inst.p0()).abs() < 1e-15);
        let phased = inst.initial_state().unwrap() * C64::from_polar(1.0, 0.7);
        assert!((success_probability(&QuantumStateRep::Pure(phased), &inst) - p).abs() < 1e-15);
        let mix = FactoredDensity::new(
            vec![0.5, 0.5],
            crate::spectral::columns_to_matrix(8, &[basis_vector(8, 0), basis_vector(8, 1)]),
        )
        .unwrap();
        let m = QuantumStateRep::Mixed(DensityRep::Factored(mix));
        assert_eq!(success_probability(&m, &inst), 0.5);
    }
}
