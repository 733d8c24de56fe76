use serde::{Deserialize, Serialize};

use super::{inner, CMatrix, CVector, C64};
use crate::{Error, Result};

/// Matrix-free Hermitian operator.
pub trait HermitianOp: Sync {
    fn dim(&self) -> usize;

    /// `out ← H v`
    fn apply_into(&self, v: &CVector, out: &mut CVector);

    fn apply(&self, v: &CVector) -> CVector {
        let mut out = CVector::zeros(self.dim());
        self.apply_into(v, &mut out);
        out
    }
}

impl HermitianOp for CMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply_into(&self, v: &CVector, out: &mut CVector) {
        self.mul_to(v, out);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
}

/// Real coefficient times a single-site Pauli operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub site: u32,
    pub axis: Axis,
    pub coeff: f64,
}

/// Term of a [`StructuredHamiltonian`] that is neither identity nor low rank.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum ExtraTerm {
    #[default]
    None,
    /// `Σ c σ_site^axis` on `n_qubits` qubits; site `i` is bit `i` of the basis index.
    PauliSum {
        n_qubits: u32,
        terms: Vec<PauliTerm>,
    },
    /// `strength · (X + X†)` with the cyclic shift `X|d⟩ = |d+1 mod D⟩`.
    ShiftPair { strength: f64 },
}

impl ExtraTerm {
    pub fn is_none(&self) -> bool {
        match self {
            ExtraTerm::None => true,
            ExtraTerm::PauliSum { terms, .. } => terms.iter().all(|t| t.coeff == 0.0),
            ExtraTerm::ShiftPair { strength } => *strength == 0.0,
        }
    }

    /// `out += term · v`
    pub fn accumulate(&self, v: &CVector, out: &mut CVector) {
        match self {
            ExtraTerm::None => {}
            ExtraTerm::PauliSum { n_qubits, terms } => {
                // Fold the three axes of each site into one flip coefficient
                // and one diagonal coefficient.
                let n = *n_qubits as usize;
                let mut cx = vec![0.0; n];
                let mut cy = vec![0.0; n];
                let mut cz = vec![0.0; n];
                for t in terms {
                    let s = t.site as usize;
                    match t.axis {
                        Axis::X => cx[s] += t.coeff,
                        Axis::Y => cy[s] += t.coeff,
                        Axis::Z => cz[s] += t.coeff,
                    }
                }
                for k in 0..v.len() {
                    let mut acc = C64::new(0.0, 0.0);
                    for site in 0..n {
                        let mask = 1usize << site;
                        let up = k & mask == 0;
                        if cx[site] != 0.0 || cy[site] != 0.0 {
                            // σx → 1, σy → −i on |0⟩ rows and +i on |1⟩ rows
                            let flip = if up {
                                C64::new(cx[site], -cy[site])
                            } else {
                                C64::new(cx[site], cy[site])
                            };
                            acc += flip * v[k ^ mask];
                        }
                        if cz[site] != 0.0 {
                            acc += v[k] * if up { cz[site] } else { -cz[site] };
                        }
                    }
                    out[k] += acc;
                }
            }
            ExtraTerm::ShiftPair { strength } => {
                let d = v.len();
                if *strength == 0.0 || d == 0 {
                    return;
                }
                for k in 0..d {
                    let prev = v[(k + d - 1) % d];
                    let next = v[(k + 1) % d];
                    out[k] += (prev + next) * *strength;
                }
            }
        }
    }
}

/// `c·I + Σ_k w_k |u_k⟩⟨u_k| + extra`, with real `c`, `w_k`.
#[derive(Debug, Clone)]
pub struct StructuredHamiltonian {
    dim: usize,
    pub identity: f64,
    pub rank_one: Vec<(f64, CVector)>,
    pub extra: ExtraTerm,
}

impl StructuredHamiltonian {
    pub fn new(dim: usize, identity: f64) -> Self {
        StructuredHamiltonian {
            dim,
            identity,
            rank_one: Vec::new(),
            extra: ExtraTerm::None,
        }
    }

    pub fn push_rank_one(&mut self, weight: f64, u: CVector) -> Result<()> {
        if u.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: u.len(),
            });
        }
        if weight != 0.0 {
            self.rank_one.push((weight, u));
        }
        Ok(())
    }

    pub fn with_extra(mut self, extra: ExtraTerm) -> Result<Self> {
        match &extra {
            ExtraTerm::PauliSum { n_qubits, terms } => {
                if 1usize.checked_shl(*n_qubits) != Some(self.dim) {
                    return Err(Error::DimensionMismatch {
                        expected: self.dim,
                        got: 1usize << n_qubits,
                    });
                }
                if terms
                    .iter()
                    .any(|t| t.site >= *n_qubits || !t.coeff.is_finite())
                {
                    return Err(Error::invalid(
                        "pauli term",
                        "site out of range or non-finite",
                    ));
                }
            }
            ExtraTerm::ShiftPair { strength } if !strength.is_finite() => {
                return Err(Error::invalid("shift strength", "non-finite"));
            }
            _ => {}
        }
        self.extra = extra;
        Ok(self)
    }

    /// True when the operator is identity plus finitely many projectors.
    pub fn is_low_rank(&self) -> bool {
        self.extra.is_none()
    }

    /// Dense matrix, assembled term by term.
    pub fn to_dense(&self, cap: usize) -> Result<CMatrix> {
        if self.dim > cap {
            return Err(Error::DimensionCap {
                what: "dense materialization",
                dim: self.dim,
                cap,
            });
        }
        let mut m = CMatrix::identity(self.dim, self.dim).scale(self.identity);
        for (w, u) in &self.rank_one {
            m += (u * u.adjoint()).scale(*w);
        }
        if !self.extra.is_none() {
            for j in 0..self.dim {
                let e = super::basis_vector(self.dim, j);
                let mut col = CVector::zeros(self.dim);
                self.extra.accumulate(&e, &mut col);
                for i in 0..self.dim {
                    m[(i, j)] += col[i];
                }
            }
        }
        Ok(m)
    }
}

impl HermitianOp for StructuredHamiltonian {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_into(&self, v: &CVector, out: &mut CVector) {
        out.copy_from(v);
        out.scale_mut(self.identity);
        for (w, u) in &self.rank_one {
            let c = inner(u, v) * *w;
            out.axpy(c, u, C64::new(1.0, 0.0));
        }
        self.extra.accumulate(v, out);
    }
}
