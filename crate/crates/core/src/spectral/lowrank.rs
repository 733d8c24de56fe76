use super::eigen::hermitian_eigendecompose_tol;
use super::{
    columns_to_matrix, orthonormal_basis, CMatrix, CVector, StructuredHamiltonian, UnitaryAction,
    C64,
};
use crate::{Error, Result};

/// Exact `exp(−iH)` for `H = c·I + Σ w_k |u_k⟩⟨u_k|`.
///
/// With `W` an orthonormal basis of `span{u_k}` and `M = W†(H − cI)W`,
/// `exp(−iH) = e^{−ic} [I + W (e^{−iM} − I) W†]`.
#[derive(Debug, Clone)]
pub struct LowRankPropagator {
    phase: C64,
    basis: CMatrix,
    correction: CMatrix,
}

impl LowRankPropagator {
    pub fn new(h: &StructuredHamiltonian) -> Result<Self> {
        use super::HermitianOp;
        if !h.is_low_rank() {
            return Err(Error::Unsupported(
                "low-rank propagator needs a Hamiltonian without extra terms".into(),
            ));
        }
        let dim = h.dim();
        let cols = orthonormal_basis(h.rank_one.iter().map(|(_, u)| u), 1e-13);
        let basis = columns_to_matrix(dim, &cols);
        let m = basis.ncols();
        let mut small = CMatrix::zeros(m, m);
        for (w, u) in &h.rank_one {
            let c = basis.adjoint() * u;
            small += (&c * c.adjoint()).scale(*w);
        }
        let correction = if m == 0 {
            small
        } else {
            let eig = hermitian_eigendecompose_tol(&small, 1e-8)?;
            eig.apply_function(|x| C64::from_polar(1.0, -x)) - CMatrix::identity(m, m)
        };
        Ok(LowRankPropagator {
            phase: C64::from_polar(1.0, -h.identity),
            basis,
            correction,
        })
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }
}

impl UnitaryAction for LowRankPropagator {
    fn dim(&self) -> usize {
        self.basis.nrows()
    }

    fn apply(&self, v: &CVector) -> Result<CVector> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        let coords = self.basis.adjoint() * v;
        let mut out = v + &self.basis * (&self.correction * coords);
        out *= self.phase;
        Ok(out)
    }

    fn apply_columns(&self, m: &CMatrix) -> Result<CMatrix> {
        let coords = self.basis.adjoint() * m;
        let mut out = m + &self.basis * (&self.correction * coords);
        out *= self.phase;
        Ok(out)
    }
}
