//! Noise mechanisms: coherent perturbations that enter the layer Hamiltonian
//! and incoherent channels applied after the layer unitary.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, Normal};
use serde::{Deserialize, Serialize};

use crate::problem::{Encoding, SearchInstance};
use crate::spectral::{
    Axis, CMatrix, CVector, DensityRep, ExtraTerm, FactoredDensity, PauliTerm, C64,
};
use crate::{Error, Result};

/// splitmix64 finalizer.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `base` and a path of indices. Distinct paths
/// give statistically independent streams.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix(base), |acc, &p| splitmix(acc ^ splitmix(p)))
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mechanism {
    #[default]
    None,
    /// Random weight-1 Pauli terms, Gaussian coefficients redrawn every layer.
    QubitCoherent,
    /// `ε_l (X + X†)` on a qudit.
    QuditCoherent,
    /// Pauli channel with random weights fixed per realization.
    QubitChannel,
    /// `ρ → (1−ε_l)ρ + ε_l XρX†`
    QuditChannel,
}

impl Mechanism {
    pub const ALL: [Mechanism; 5] = [
        Mechanism::None,
        Mechanism::QubitCoherent,
        Mechanism::QuditCoherent,
        Mechanism::QubitChannel,
        Mechanism::QuditChannel,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Mechanism::None => "none",
            Mechanism::QubitCoherent => "qubit-coherent",
            Mechanism::QuditCoherent => "qudit-coherent",
            Mechanism::QubitChannel => "qubit-channel",
            Mechanism::QuditChannel => "qudit-channel",
        }
    }

    pub fn is_channel(&self) -> bool {
        matches!(self, Mechanism::QubitChannel | Mechanism::QuditChannel)
    }

    pub fn is_random(&self) -> bool {
        matches!(self, Mechanism::QubitCoherent | Mechanism::QubitChannel)
    }

    pub fn is_qubit(&self) -> bool {
        matches!(self, Mechanism::QubitCoherent | Mechanism::QubitChannel)
    }

    pub fn is_qudit(&self) -> bool {
        matches!(self, Mechanism::QuditCoherent | Mechanism::QuditChannel)
    }
}

impl std::str::FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mechanism::ALL
            .into_iter()
            .find(|m| m.label() == s)
            .ok_or_else(|| Error::invalid("mechanism", format!("unknown mechanism '{s}'")))
    }
}

/// How channel weights `w_{iμ}` are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightDistribution {
    /// i.i.d. Uniform(0,1), normalized by the sum.
    #[default]
    NormalizedUniform,
    /// Dirichlet(1,…,1), i.e. normalized Exp(1) draws.
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpec {
    pub eps: f64,
    pub mechanism: Mechanism,
    pub seed: u64,
    pub weights: WeightDistribution,
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec::default()
    }

    pub fn new(mechanism: Mechanism, eps: f64, seed: u64) -> Self {
        NoiseSpec {
            eps,
            mechanism,
            seed,
            weights: WeightDistribution::default(),
        }
    }

    /// `ε_l = ε / L`
    pub fn per_layer(&self, budget: usize) -> f64 {
        if budget == 0 {
            0.0
        } else {
            self.eps / budget as f64
        }
    }

    pub fn is_silent(&self) -> bool {
        self.mechanism == Mechanism::None || self.eps == 0.0
    }

    /// True if the noise of every layer is a function of the layer budget only.
    pub fn is_deterministic(&self) -> bool {
        self.is_silent() || !self.mechanism.is_random()
    }

    pub fn validate(&self, inst: &SearchInstance, budget: usize) -> Result<()> {
        if !(self.eps.is_finite() && self.eps >= 0.0) {
            return Err(Error::invalid(
                "eps",
                format!("{} must be finite and >= 0", self.eps),
            ));
        }
        match (self.mechanism, inst.encoding()) {
            (Mechanism::None, _) => {}
            (m, Encoding::Qudit(_)) if m.is_qubit() => {
                return Err(Error::invalid(
                    "mechanism",
                    format!("{} requires a qubit encoding", m.label()),
                ))
            }
            (m, Encoding::Qubit(_)) if m.is_qudit() => {
                return Err(Error::invalid(
                    "mechanism",
                    format!("{} requires a qudit encoding", m.label()),
                ))
            }
            _ => {}
        }
        if self.mechanism.is_channel() && self.per_layer(budget) > 1.0 {
            return Err(Error::invalid(
                "eps",
                format!("per-layer strength {}/{} exceeds 1", self.eps, budget),
            ));
        }
        Ok(())
    }

    /// Per-realization channel weights (qubit channel only).
    pub fn channel_weights(&self, n_qubits: u32) -> Result<Option<PauliWeights>> {
        if self.mechanism != Mechanism::QubitChannel || self.eps == 0.0 {
            return Ok(None);
        }
        PauliWeights::sample(
            derive_seed(self.seed, &[WEIGHT_STREAM]),
            n_qubits,
            self.weights,
        )
        .map(Some)
    }

    /// Everything the engine needs for layer `layer` (1-based) of a run with `budget` layers.
    pub fn layer_noise(
        &self,
        inst: &SearchInstance,
        budget: usize,
        layer: usize,
        weights: Option<&PauliWeights>,
    ) -> Result<LayerNoise> {
        let eps_l = self.per_layer(budget);
        if self.is_silent() {
            return Ok(LayerNoise::default());
        }
        Ok(match self.mechanism {
            Mechanism::None => LayerNoise::default(),
            Mechanism::QubitCoherent => LayerNoise {
                coherent: sample_qubit_coherent(
                    derive_seed(self.seed, &[COHERENT_STREAM]),
                    layer as u64,
                    eps_l,
                    inst.n_qubits().unwrap_or(0),
                )?,
                channel: Channel::Identity,
            },
            Mechanism::QuditCoherent => LayerNoise {
                coherent: qudit_coherent(eps_l, inst.dim())?,
                channel: Channel::Identity,
            },
            Mechanism::QubitChannel => {
                let w = weights.ok_or_else(|| {
                    Error::invalid("weights", "qubit channel needs Pauli weights")
                })?;
                LayerNoise {
                    coherent: ExtraTerm::None,
                    channel: Channel::qubit_pauli(eps_l, w.clone())?,
                }
            }
            Mechanism::QuditChannel => LayerNoise {
                coherent: ExtraTerm::None,
                channel: Channel::qudit_shift(eps_l)?,
            },
        })
    }
}

const COHERENT_STREAM: u64 = 0x636f_6865_7265_6e74;
const WEIGHT_STREAM: u64 = 0x7765_6967_6874_7300;

/// Coherent term and channel acting in one layer.
#[derive(Debug, Clone, Default)]
pub struct LayerNoise {
    pub coherent: ExtraTerm,
    pub channel: Channel,
}

impl LayerNoise {
    pub fn is_none(&self) -> bool {
        self.coherent.is_none() && self.channel.is_identity()
    }
}

/// `w_{iμ}`, stored at index `3i + μ` with `μ = x, y, z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliWeights {
    n_qubits: u32,
    w: Vec<f64>,
}

impl PauliWeights {
    pub fn sample(seed: u64, n_qubits: u32, dist: WeightDistribution) -> Result<Self> {
        let mut rng = seeded_rng(seed);
        let raw: Vec<f64> = (0..3 * n_qubits as usize)
            .map(|_| match dist {
                WeightDistribution::NormalizedUniform => rng.sample::<f64, _>(Open01),
                WeightDistribution::Dirichlet => rng.sample::<f64, _>(Exp1),
            })
            .collect();
        Self::from_draws(n_qubits, raw)
    }

    /// Normalizes positive raw draws by their sum.
    pub fn from_draws(n_qubits: u32, raw: Vec<f64>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::invalid("n_qubits", "must be >= 1"));
        }
        if raw.len() != 3 * n_qubits as usize {
            return Err(Error::DimensionMismatch {
                expected: 3 * n_qubits as usize,
                got: raw.len(),
            });
        }
        if raw.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
            return Err(Error::invalid("weights", "draws must be finite and > 0"));
        }
        let total: f64 = raw.iter().sum();
        Ok(PauliWeights {
            n_qubits,
            w: raw.into_iter().map(|x| x / total).collect(),
        })
    }

    pub fn n_qubits(&self) -> u32 {
        self.n_qubits
    }

    pub fn get(&self, site: u32, axis: Axis) -> f64 {
        self.w[3 * site as usize + axis_index(axis)]
    }

    pub fn values(&self) -> &[f64] {
        &self.w
    }

    pub fn sum(&self) -> f64 {
        self.w.iter().sum()
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, Axis, f64)> + '_ {
        (0..self.n_qubits)
            .flat_map(move |i| Axis::ALL.into_iter().map(move |a| (i, a, self.get(i, a))))
    }
}

fn axis_index(a: Axis) -> usize {
    match a {
        Axis::X => 0,
        Axis::Y => 1,
        Axis::Z => 2,
    }
}

/// `V_l = Σ_{iμ} ε_{l,iμ} σ_i^μ` with `ε_{l,iμ} ~ Normal(0, ε_l²)`.
/// Coefficients depend only on `(seed, layer)`.
pub fn sample_qubit_coherent(
    seed: u64,
    layer: u64,
    eps_l: f64,
    n_qubits: u32,
) -> Result<ExtraTerm> {
    if !(eps_l.is_finite() && eps_l >= 0.0) {
        return Err(Error::invalid(
            "eps_l",
            format!("{eps_l} must be finite and >= 0"),
        ));
    }
    if eps_l == 0.0 {
        return Ok(ExtraTerm::None);
    }
    let normal = Normal::new(0.0, eps_l).map_err(|e| Error::invalid("eps_l", e.to_string()))?;
    let mut rng = seeded_rng(derive_seed(seed, &[layer]));
    let terms = (0..n_qubits)
        .flat_map(|site| Axis::ALL.into_iter().map(move |axis| (site, axis)))
        .map(|(site, axis)| PauliTerm {
            site,
            axis,
            coeff: rng.sample(normal),
        })
        .collect();
    Ok(ExtraTerm::PauliSum { n_qubits, terms })
}

/// `ε_l (X + X†)`
pub fn qudit_coherent(eps_l: f64, dim: u64) -> Result<ExtraTerm> {
    if dim < 2 {
        return Err(Error::invalid("dim", "qudit dimension must be >= 2"));
    }
    if !(eps_l.is_finite() && eps_l >= 0.0) {
        return Err(Error::invalid(
            "eps_l",
            format!("{eps_l} must be finite and >= 0"),
        ));
    }
    if eps_l == 0.0 {
        return Ok(ExtraTerm::None);
    }
    Ok(ExtraTerm::ShiftPair { strength: eps_l })
}

/// Generalized Pauli operators on `C^D`: `X|d⟩ = |d+1⟩`, `Z|d⟩ = ω^d|d⟩`, `Y = XZ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuditPauliOps {
    dim: usize,
}

impl QuditPauliOps {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::invalid("dim", "qudit dimension must be >= 2"));
        }
        Ok(QuditPauliOps { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn omega(&self) -> C64 {
        C64::from_polar(1.0, 2.0 * std::f64::consts::PI / self.dim as f64)
    }

    fn check(&self, v: &CVector) {
        assert_eq!(
            v.len(),
            self.dim,
            "vector length does not match qudit dimension"
        );
    }

    pub fn apply_x(&self, v: &CVector) -> CVector {
        self.check(v);
        let d = self.dim;
        CVector::from_fn(d, |k, _| v[(k + d - 1) % d])
    }

    pub fn apply_x_adjoint(&self, v: &CVector) -> CVector {
        self.check(v);
        let d = self.dim;
        CVector::from_fn(d, |k, _| v[(k + 1) % d])
    }

    pub fn apply_z(&self, v: &CVector) -> CVector {
        self.check(v);
        let w = self.omega();
        CVector::from_fn(self.dim, |k, _| v[k] * w.powu(k as u32))
    }

    pub fn apply_y(&self, v: &CVector) -> CVector {
        self.apply_x(&self.apply_z(v))
    }

    pub fn x_dense(&self) -> CMatrix {
        let d = self.dim;
        CMatrix::from_fn(d, d, |r, c| {
            if r == (c + 1) % d {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn z_dense(&self) -> CMatrix {
        let w = self.omega();
        CMatrix::from_fn(self.dim, self.dim, |r, c| {
            if r == c {
                w.powu(r as u32)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn y_dense(&self) -> CMatrix {
        self.x_dense() * self.z_dense()
    }
}

/// `σ_site^axis |k⟩ = s(k) |k'⟩`; returns `(k', s(k))` for basis index `k`.
fn pauli_entry(k: usize, site: u32, axis: Axis) -> (usize, C64) {
    let mask = 1usize << site;
    let up = k & mask == 0;
    match axis {
        Axis::X => (k ^ mask, C64::new(1.0, 0.0)),
        // σy|0⟩ = i|1⟩, σy|1⟩ = −i|0⟩
        Axis::Y => (
            k ^ mask,
            if up {
                C64::new(0.0, 1.0)
            } else {
                C64::new(0.0, -1.0)
            },
        ),
        Axis::Z => (k, C64::new(if up { 1.0 } else { -1.0 }, 0.0)),
    }
}

pub fn apply_pauli(v: &CVector, site: u32, axis: Axis) -> CVector {
    let mut out = CVector::zeros(v.len());
    for k in 0..v.len() {
        let (k2, s) = pauli_entry(k, site, axis);
        out[k2] = s * v[k];
    }
    out
}

/// `σ ρ σ` for a weight-1 Pauli.
fn pauli_conjugate_dense(rho: &CMatrix, site: u32, axis: Axis) -> CMatrix {
    let d = rho.nrows();
    let mut out = CMatrix::zeros(d, d);
    for k in 0..d {
        let (k2, sk) = pauli_entry(k, site, axis);
        for j in 0..d {
            let (j2, sj) = pauli_entry(j, site, axis);
            out[(j2, k2)] = sj * rho[(j, k)] * sk.conj();
        }
    }
    out
}

/// Incoherent map applied after the layer unitary.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum Channel {
    #[default]
    Identity,
    QubitPauli {
        eps: f64,
        weights: PauliWeights,
    },
    QuditShift {
        eps: f64,
    },
}

fn check_strength(eps: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::invalid("eps_l", format!("{eps} not in [0, 1]")));
    }
    Ok(())
}

impl Channel {
    pub fn qubit_pauli(eps: f64, weights: PauliWeights) -> Result<Self> {
        check_strength(eps)?;
        Ok(if eps == 0.0 {
            Channel::Identity
        } else {
            Channel::QubitPauli { eps, weights }
        })
    }

    pub fn qudit_shift(eps: f64) -> Result<Self> {
        check_strength(eps)?;
        Ok(if eps == 0.0 {
            Channel::Identity
        } else {
            Channel::QuditShift { eps }
        })
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Channel::Identity)
    }

    /// Kraus-style branches `(q, K v)` with `Σ q K†K = I`.
    pub fn branches(&self, v: &CVector) -> Vec<(f64, CVector)> {
        match self {
            Channel::Identity => vec![(1.0, v.clone())],
            Channel::QubitPauli { eps, weights } => {
                let mut out = Vec::with_capacity(1 + weights.w.len());
                if *eps < 1.0 {
                    out.push((1.0 - eps, v.clone()));
                }
                for (site, axis, w) in weights.terms() {
                    out.push((eps * w, apply_pauli(v, site, axis)));
                }
                out
            }
            Channel::QuditShift { eps } => {
                let d = v.len();
                let shifted = CVector::from_fn(d, |k, _| v[(k + d - 1) % d]);
                if *eps < 1.0 {
                    vec![(1.0 - eps, v.clone()), (*eps, shifted)]
                } else {
                    vec![(1.0, shifted)]
                }
            }
        }
    }

    pub fn apply_dense(&self, rho: &CMatrix) -> Result<CMatrix> {
        match self {
            Channel::Identity => Ok(rho.clone()),
            Channel::QubitPauli { eps, weights } => {
                let d = rho.nrows();
                if d != 1usize << weights.n_qubits {
                    return Err(Error::DimensionMismatch {
                        expected: 1usize << weights.n_qubits,
                        got: d,
                    });
                }
                let mut out = rho * C64::new(1.0 - eps, 0.0);
                for (site, axis, w) in weights.terms() {
                    out += pauli_conjugate_dense(rho, site, axis) * C64::new(eps * w, 0.0);
                }
                Ok(out)
            }
            Channel::QuditShift { eps } => {
                let d = rho.nrows();
                let shifted =
                    CMatrix::from_fn(d, d, |j, k| rho[((j + d - 1) % d, (k + d - 1) % d)]);
                Ok(rho * C64::new(1.0 - eps, 0.0) + shifted * C64::new(*eps, 0.0))
            }
        }
    }

    pub fn apply_factored(&self, rho: &FactoredDensity) -> Result<FactoredDensity> {
        if self.is_identity() {
            return Ok(rho.clone());
        }
        let mut branches = Vec::new();
        for (k, &p) in rho.weights().iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            for (q, v) in self.branches(&rho.vector(k)) {
                branches.push((p * q, v));
            }
        }
        if branches.is_empty() {
            return Ok(rho.clone());
        }
        FactoredDensity::from_branches(rho.dim(), &branches)
    }

    pub fn apply(&self, rho: &DensityRep) -> Result<DensityRep> {
        match rho {
            DensityRep::Dense(m) => self.apply_dense(m).map(DensityRep::Dense),
            DensityRep::Factored(f) => self.apply_factored(f).map(DensityRep::Factored),
        }
    }
}

pub fn apply_qubit_pauli_channel(
    rho: &DensityRep,
    eps_l: f64,
    weights: &PauliWeights,
) -> Result<DensityRep> {
    Channel::qubit_pauli(eps_l, weights.clone())?.apply(rho)
}

pub fn apply_qudit_shift_channel(rho: &DensityRep, eps_l: f64) -> Result<DensityRep> {
    Channel::qudit_shift(eps_l)?.apply(rho)
}
