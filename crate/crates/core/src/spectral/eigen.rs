use nalgebra::linalg::SymmetricEigen;

use super::{CMatrix, C64};
use crate::{Error, Result};

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in the order of `values`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    /// `V f(Λ) V†` for a scalar function of the eigenvalues.
    pub fn apply_function(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (j, &lambda) in self.values.iter().enumerate() {
            let fl = f(lambda);
            for z in scaled.column_mut(j).iter_mut() {
                *z *= fl;
            }
        }
        scaled * self.vectors.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.apply_function(|x| C64::new(x, 0.0))
    }
}

/// `‖M − M†‖_F / ‖M‖_F` (zero for the zero matrix).
pub fn hermitian_residual(m: &CMatrix) -> f64 {
    let total: f64 = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if total == 0.0 {
        return 0.0;
    }
    let diff = m - m.adjoint();
    diff.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() / total
}

pub fn hermitian_eigendecompose(m: &CMatrix) -> Result<HermitianEigen> {
    hermitian_eigendecompose_tol(m, crate::Tolerances::default().hermitian)
}

pub(crate) fn hermitian_eigendecompose_tol(m: &CMatrix, tol: f64) -> Result<HermitianEigen> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let residual = hermitian_residual(m);
    if residual > tol {
        return Err(Error::NotHermitian {
            residual,
            tolerance: tol,
        });
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

/// `exp(−iH)` through the eigendecomposition `H = V Λ V†`.
pub fn dense_unitary_exp(h: &CMatrix, cap: usize) -> Result<CMatrix> {
    if h.nrows() > cap {
        return Err(Error::DimensionCap {
            what: "dense exponential",
            dim: h.nrows(),
            cap,
        });
    }
    let eig = hermitian_eigendecompose(h)?;
    Ok(eig.apply_function(|x| C64::from_polar(1.0, -x)))
}
