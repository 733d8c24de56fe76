use nalgebra::{linalg::SymmetricEigen, DMatrix, DVector};

use super::{inner, norm, CVector, HermitianOp, UnitaryAction, C64};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct KrylovResult {
    pub vector: CVector,
    /// Number of Lanczos vectors used.
    pub krylov_dim: usize,
    /// A posteriori error estimate `β_m |e_mᵀ exp(−iT_m) e_1|‖v‖`.
    pub error_estimate: f64,
}

/// `exp(−iT) e₁` for the real symmetric tridiagonal `T`.
fn tridiagonal_exp_first_column(alphas: &[f64], betas: &[f64]) -> DVector<C64> {
    let k = alphas.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    DVector::from_fn(k, |row, _| {
        (0..k)
            .map(|j| {
                let s = eig.eigenvectors[(row, j)] * eig.eigenvectors[(0, j)];
                C64::from_polar(s, -eig.eigenvalues[j])
            })
            .sum()
    })
}

/// Lanczos approximation of `exp(−iH) v` with full re-orthogonalization.
///
/// Stops at the first Krylov dimension whose residual estimate is below
/// `tol`, or exactly on an invariant subspace. No restarts.
pub fn krylov_exp_apply<H: HermitianOp + ?Sized>(
    op: &H,
    v: &CVector,
    tol: f64,
    max_dim: usize,
) -> Result<KrylovResult> {
    if !(tol > 0.0 && tol <= 1e-4) {
        return Err(Error::invalid("tol", format!("{tol} not in (0, 1e-4]")));
    }
    if v.len() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            got: v.len(),
        });
    }
    let beta0 = norm(v);
    if beta0 == 0.0 {
        return Ok(KrylovResult {
            vector: v.clone(),
            krylov_dim: 0,
            error_estimate: 0.0,
        });
    }
    let one = C64::new(1.0, 0.0);
    let mut basis: Vec<CVector> = vec![v.unscale(beta0)];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = CVector::zeros(v.len());
    let mut estimate = f64::INFINITY;
    let max_dim = max_dim.max(1).min(v.len().max(1));

    for j in 0..max_dim {
        op.apply_into(&basis[j], &mut w);
        let alpha = inner(&basis[j], &w).re;
        w.axpy(C64::new(-alpha, 0.0), &basis[j], one);
        if j > 0 {
            w.axpy(C64::new(-betas[j - 1], 0.0), &basis[j - 1], one);
        }
        for _ in 0..2 {
            for q in &basis {
                let c = inner(q, &w);
                w.axpy(-c, q, one);
            }
        }
        let beta = norm(&w);
        alphas.push(alpha);
        let y = tridiagonal_exp_first_column(&alphas, &betas);
        estimate = beta0 * beta * y[j].norm();
        let scale = 1.0 + alpha.abs() + betas.last().copied().unwrap_or(0.0);
        let exhausted = j + 1 == v.len();
        if beta <= 1e-14 * scale || estimate < tol || exhausted {
            let mut out = CVector::zeros(v.len());
            for (q, c) in basis.iter().zip(y.iter()) {
                out.axpy(*c * beta0, q, one);
            }
            return Ok(KrylovResult {
                vector: out,
                krylov_dim: j + 1,
                error_estimate: if exhausted { 0.0 } else { estimate },
            });
        }
        betas.push(beta);
        basis.push(w.unscale(beta));
    }
    Err(Error::KrylovNotConverged {
        krylov_dim: max_dim,
        residual: estimate,
        tolerance: tol,
    })
}

/// [`UnitaryAction`] for `exp(−iH)` backed by [`krylov_exp_apply`].
pub struct KrylovPropagator<'a, H: HermitianOp + ?Sized> {
    pub op: &'a H,
    pub tol: f64,
    pub max_dim: usize,
}

impl<H: HermitianOp + ?Sized> UnitaryAction for KrylovPropagator<'_, H> {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn apply(&self, v: &CVector) -> Result<CVector> {
        krylov_exp_apply(self.op, v, self.tol, self.max_dim).map(|r| r.vector)
    }
}
