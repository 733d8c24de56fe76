//! Complex linear-algebra kernel: Hermitian eigendecomposition, unitary
//! exponentials (dense and Krylov), structured Hamiltonians and density
//! operators.

mod density;
mod eigen;
mod krylov;
mod lowrank;
mod structured;

pub use density::{
    conjugate_density, trace_distance, truncate_rank, DensityRep, FactoredDensity, Truncation,
};
pub use eigen::{dense_unitary_exp, hermitian_eigendecompose, hermitian_residual, HermitianEigen};
pub use krylov::{krylov_exp_apply, KrylovPropagator, KrylovResult};
pub use lowrank::LowRankPropagator;
pub use structured::{Axis, ExtraTerm, HermitianOp, PauliTerm, StructuredHamiltonian};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CVector = DVector<C64>;
pub type CMatrix = DMatrix<C64>;

use crate::Result;

/// Anything that applies a fixed unitary to state vectors.
pub trait UnitaryAction {
    fn dim(&self) -> usize;

    fn apply(&self, v: &CVector) -> Result<CVector>;

    /// Applies the unitary to every column of `m`.
    fn apply_columns(&self, m: &CMatrix) -> Result<CMatrix> {
        let mut out = CMatrix::zeros(m.nrows(), m.ncols());
        for (j, col) in m.column_iter().enumerate() {
            let v = self.apply(&col.into_owned())?;
            out.set_column(j, &v);
        }
        Ok(out)
    }
}

impl UnitaryAction for CMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, v: &CVector) -> Result<CVector> {
        Ok(self * v)
    }

    fn apply_columns(&self, m: &CMatrix) -> Result<CMatrix> {
        Ok(self * m)
    }
}

/// `‖v‖₂`
pub fn norm(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `⟨a|b⟩`, conjugate-linear in `a`.
pub fn inner(a: &CVector, b: &CVector) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Unit basis vector `|index⟩`.
pub fn basis_vector(dim: usize, index: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[index] = C64::new(1.0, 0.0);
    v
}

/// Orthonormalizes `vectors` by modified Gram-Schmidt with one
/// re-orthogonalization pass, dropping directions whose residual norm falls
/// below `drop_tol` (relative to the input norm).
pub fn orthonormal_basis<'a, I>(vectors: I, drop_tol: f64) -> Vec<CVector>
where
    I: IntoIterator<Item = &'a CVector>,
{
    let mut basis: Vec<CVector> = Vec::new();
    for v in vectors {
        let scale = norm(v);
        if scale == 0.0 {
            continue;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = inner(q, &w);
                w.axpy(-c, q, C64::new(1.0, 0.0));
            }
        }
        let n = norm(&w);
        if n > drop_tol * scale {
            w.unscale_mut(n);
            basis.push(w);
        }
    }
    basis
}

/// Stacks column vectors into a matrix.
pub fn columns_to_matrix(dim: usize, cols: &[CVector]) -> CMatrix {
    let mut m = CMatrix::zeros(dim, cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
    m
}
