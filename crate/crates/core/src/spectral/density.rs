use super::eigen::hermitian_eigendecompose_tol;
use super::{inner, CMatrix, CVector, UnitaryAction};
use crate::{Error, Result};

/// `ρ = Σ_k p_k |φ_k⟩⟨φ_k|` with orthonormal `φ_k` stored as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FactoredDensity {
    weights: Vec<f64>,
    vectors: CMatrix,
}

impl FactoredDensity {
    pub fn new(weights: Vec<f64>, vectors: CMatrix) -> Result<Self> {
        if weights.len() != vectors.ncols() {
            return Err(Error::DimensionMismatch {
                expected: vectors.ncols(),
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < -1e-12) {
            return Err(Error::invalid("weights", "must be finite and non-negative"));
        }
        let gram = vectors.adjoint() * &vectors;
        let off = (gram - CMatrix::identity(weights.len(), weights.len()))
            .iter()
            .fold(0.0f64, |m, z| m.max(z.norm()));
        if off > 1e-9 {
            return Err(Error::invalid(
                "vectors",
                format!("not orthonormal (deviation {off:.2e})"),
            ));
        }
        Ok(FactoredDensity { weights, vectors })
    }

    pub fn pure(psi: &CVector) -> Self {
        let n = super::norm(psi);
        FactoredDensity {
            weights: vec![1.0],
            vectors: CMatrix::from_column_slice(psi.len(), 1, psi.unscale(n).as_slice()),
        }
    }

    /// Re-orthogonalizes `Σ_j q_j |v_j⟩⟨v_j|` (arbitrary, possibly dependent
    /// `v_j`) into eigen-form through a thin QR of `[√q_j v_j]`.
    /// Zero eigenvalues are kept; pass the result through [`truncate_rank`].
    pub fn from_branches(dim: usize, branches: &[(f64, CVector)]) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::invalid("branches", "empty"));
        }
        let mut y = CMatrix::zeros(dim, branches.len());
        for (j, (q, v)) in branches.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
            if *q < 0.0 {
                return Err(Error::invalid("branch weight", "negative"));
            }
            y.set_column(j, &v.scale(q.sqrt()));
        }
        let qr = y.qr();
        let q = qr.q();
        let r = qr.r();
        let small = &r * r.adjoint();
        let eig = hermitian_eigendecompose_tol(&small, 1e-8)?;
        let k = eig.values.len();
        // descending weights
        let weights: Vec<f64> = (0..k).rev().map(|i| eig.values[i].max(0.0)).collect();
        let rotated = q * eig.vectors;
        let vectors = CMatrix::from_fn(dim, k, |row, col| rotated[(row, k - 1 - col)]);
        Ok(FactoredDensity { weights, vectors })
    }

    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn vectors(&self) -> &CMatrix {
        &self.vectors
    }

    pub fn vector(&self, k: usize) -> CVector {
        self.vectors.column(k).into_owned()
    }

    pub fn trace(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (k, w) in self.weights.iter().enumerate() {
            scaled.column_mut(k).scale_mut(*w);
        }
        scaled * self.vectors.adjoint()
    }

    /// `⟨g|ρ|g⟩`
    pub fn expectation(&self, g: &CVector) -> f64 {
        let c = self.vectors.adjoint() * g;
        self.weights
            .iter()
            .zip(c.iter())
            .map(|(w, z)| w * z.norm_sqr())
            .sum()
    }

    /// `⟨i|ρ|i⟩`
    pub fn population(&self, index: usize) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(k, w)| w * self.vectors[(index, k)].norm_sqr())
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DensityRep {
    Dense(CMatrix),
    Factored(FactoredDensity),
}

impl DensityRep {
    pub fn pure_dense(psi: &CVector) -> Self {
        DensityRep::Dense(psi * psi.adjoint())
    }

    pub fn pure_factored(psi: &CVector) -> Self {
        DensityRep::Factored(FactoredDensity::pure(psi))
    }

    pub fn dim(&self) -> usize {
        match self {
            DensityRep::Dense(m) => m.nrows(),
            DensityRep::Factored(f) => f.dim(),
        }
    }

    pub fn trace(&self) -> f64 {
        match self {
            DensityRep::Dense(m) => m.diagonal().iter().map(|z| z.re).sum(),
            DensityRep::Factored(f) => f.trace(),
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        match self {
            DensityRep::Dense(m) => m.clone(),
            DensityRep::Factored(f) => f.to_dense(),
        }
    }

    pub fn expectation(&self, g: &CVector) -> f64 {
        match self {
            DensityRep::Dense(m) => inner(g, &(m * g)).re,
            DensityRep::Factored(f) => f.expectation(g),
        }
    }

    pub fn population(&self, index: usize) -> f64 {
        match self {
            DensityRep::Dense(m) => m[(index, index)].re,
            DensityRep::Factored(f) => f.population(index),
        }
    }

    /// Eigenvalues, ascending. Dense path only below `cap`.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        match self {
            DensityRep::Dense(m) => Ok(hermitian_eigendecompose_tol(m, 1e-8)?.values),
            DensityRep::Factored(f) => {
                let mut w = f.weights.clone();
                w.sort_by(f64::total_cmp);
                Ok(w)
            }
        }
    }

    /// Rank-ordered eigen-form of either representation.
    pub fn to_factored(&self) -> Result<FactoredDensity> {
        match self {
            DensityRep::Factored(f) => Ok(f.clone()),
            DensityRep::Dense(m) => {
                let eig = hermitian_eigendecompose_tol(m, 1e-8)?;
                let k = eig.values.len();
                let weights = (0..k).rev().map(|i| eig.values[i]).collect();
                let vectors = CMatrix::from_fn(m.nrows(), k, |r, c| eig.vectors[(r, k - 1 - c)]);
                Ok(FactoredDensity { weights, vectors })
            }
        }
    }
}

/// `U ρ U†`.
pub fn conjugate_density<U: UnitaryAction + ?Sized>(u: &U, rho: &DensityRep) -> Result<DensityRep> {
    if u.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: u.dim(),
        });
    }
    match rho {
        DensityRep::Dense(m) => {
            // U (U ρ)† = U ρ U† for Hermitian ρ
            let left = u.apply_columns(m)?;
            let both = u.apply_columns(&left.adjoint())?;
            Ok(DensityRep::Dense((&both + both.adjoint()).scale(0.5)))
        }
        DensityRep::Factored(f) => Ok(DensityRep::Factored(FactoredDensity {
            weights: f.weights.clone(),
            vectors: u.apply_columns(&f.vectors)?,
        })),
    }
}

/// What a truncation discarded.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Truncation {
    /// Eigenvalue mass removed before renormalization; also the trace
    /// distance between input and output.
    pub discarded_mass: f64,
    pub kept_rank: usize,
}

/// Drops the smallest eigenvalues while their cumulative mass stays within
/// `budget`, then renormalizes the rest to unit trace.
pub fn truncate_rank(rho: &DensityRep, budget: f64) -> Result<(DensityRep, Truncation)> {
    if !(budget > 0.0 && budget <= 1e-3) {
        return Err(Error::invalid(
            "budget",
            format!("{budget} not in (0, 1e-3]"),
        ));
    }
    let f = rho.to_factored()?;
    let mut order: Vec<usize> = (0..f.rank()).collect();
    order.sort_by(|&a, &b| f.weights[b].total_cmp(&f.weights[a]));
    let mut keep = order.len();
    let mut discarded = 0.0;
    while keep > 1 {
        let w = f.weights[order[keep - 1]];
        if w <= 0.0 {
            keep -= 1;
            continue;
        }
        if discarded + w > budget {
            break;
        }
        discarded += w;
        keep -= 1;
    }
    let kept = &order[..keep];
    let total: f64 = kept.iter().map(|&k| f.weights[k]).sum();
    let weights: Vec<f64> = kept.iter().map(|&k| f.weights[k] / total).collect();
    let vectors = CMatrix::from_fn(f.dim(), keep, |r, c| f.vectors[(r, kept[c])]);
    let out = FactoredDensity { weights, vectors };
    let report = Truncation {
        discarded_mass: discarded,
        kept_rank: keep,
    };
    let rep = match rho {
        DensityRep::Dense(_) => DensityRep::Dense(out.to_dense()),
        DensityRep::Factored(_) => DensityRep::Factored(out),
    };
    Ok((rep, report))
}

/// `½‖ρ − σ‖₁` by dense eigendecomposition.
pub fn trace_distance(a: &DensityRep, b: &DensityRep) -> Result<f64> {
    let diff = a.to_dense() - b.to_dense();
    let eig = hermitian_eigendecompose_tol(&diff, 1e-8)?;
    Ok(0.5 * eig.values.iter().map(|x| x.abs()).sum::<f64>())
}
