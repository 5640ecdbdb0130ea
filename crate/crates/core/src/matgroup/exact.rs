use serde::{Deserialize, Serialize};

use super::RealMatrix;
use crate::error::{Error, Result};

/// Square integer matrix with checked 64-bit arithmetic, stored row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExactMatrix {
    dim: usize,
    entries: Vec<i64>,
}

impl ExactMatrix {
    pub fn new(dim: usize, entries: Vec<i64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput(
                "matrix dimension must be positive".into(),
            ));
        }
        if entries.len() != dim * dim {
            return Err(Error::DimMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        Ok(Self { dim, entries })
    }

    /// Constructor for lattice elements: rejects determinants other than ±1.
    pub fn unimodular(dim: usize, entries: Vec<i64>) -> Result<Self> {
        let m = Self::new(dim, entries)?;
        let det = m.det()?;
        if det.abs() != 1 {
            return Err(Error::NonUnimodular(det));
        }
        Ok(m)
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1;
        }
        Self { dim, entries }
    }

    pub fn from_rows<const N: usize>(rows: [[i64; N]; N]) -> Self {
        Self {
            dim: N,
            entries: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.dim + j]
    }

    /// Exact determinant by fraction-free (Bareiss) elimination in `i128`.
    pub fn det(&self) -> Result<i128> {
        det_i128(self.dim, &self.entries)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let d = self.dim;
        let mut out = vec![0i64; d * d];
        for i in 0..d {
            for j in 0..d {
                let mut acc: i64 = 0;
                for k in 0..d {
                    let p = self.entries[i * d + k]
                        .checked_mul(other.entries[k * d + j])
                        .ok_or(Error::Overflow)?;
                    acc = acc.checked_add(p).ok_or(Error::Overflow)?;
                }
                out[i * d + j] = acc;
            }
        }
        Ok(Self {
            dim: d,
            entries: out,
        })
    }

    /// Exact inverse via the adjugate; requires determinant ±1.
    pub fn inverse_unimodular(&self) -> Result<Self> {
        let det = self.det()?;
        if det.abs() != 1 {
            return Err(Error::NonUnimodular(det));
        }
        let d = self.dim;
        if d == 1 {
            return Ok(self.clone());
        }
        let mut out = vec![0i64; d * d];
        let mut minor = Vec::with_capacity((d - 1) * (d - 1));
        for i in 0..d {
            for j in 0..d {
                minor.clear();
                for r in (0..d).filter(|&r| r != i) {
                    for c in (0..d).filter(|&c| c != j) {
                        minor.push(self.entries[r * d + c]);
                    }
                }
                let cof = det_i128(d - 1, &minor)?;
                let signed = if (i + j) % 2 == 0 { cof } else { -cof };
                // adj[j][i] = cofactor[i][j]; dividing by ±1 is multiplying by it
                let v = signed * det;
                out[j * d + i] = i64::try_from(v).map_err(|_| Error::Overflow)?;
            }
        }
        Ok(Self {
            dim: d,
            entries: out,
        })
    }

    pub fn neg(&self) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .map(|&x| x.checked_neg().ok_or(Error::Overflow))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dim: self.dim,
            entries,
        })
    }

    pub fn to_real(&self) -> RealMatrix {
        RealMatrix::from_vec_unchecked(self.dim, self.entries.iter().map(|&x| x as f64).collect())
    }
}

/// Free-function form of [`ExactMatrix::mul`].
pub fn mat_mul(a: &ExactMatrix, b: &ExactMatrix) -> Result<ExactMatrix> {
    a.mul(b)
}

/// Free-function form of [`ExactMatrix::inverse_unimodular`].
pub fn inverse_unimodular(a: &ExactMatrix) -> Result<ExactMatrix> {
    a.inverse_unimodular()
}

pub(crate) fn det_i128(d: usize, entries: &[i64]) -> Result<i128> {
    match d {
        0 => Ok(1),
        1 => Ok(entries[0] as i128),
        2 => {
            let (a, b, c, e) = (
                entries[0] as i128,
                entries[1] as i128,
                entries[2] as i128,
                entries[3] as i128,
            );
            Ok(a * e - b * c)
        }
        _ => {
            let mut m: Vec<i128> = entries.iter().map(|&x| x as i128).collect();
            let mut sign = 1i128;
            let mut prev = 1i128;
            for k in 0..d - 1 {
                if m[k * d + k] == 0 {
                    let Some(swap) = (k + 1..d).find(|&r| m[r * d + k] != 0) else {
                        return Ok(0);
                    };
                    for c in 0..d {
                        m.swap(k * d + c, swap * d + c);
                    }
                    sign = -sign;
                }
                let pivot = m[k * d + k];
                for i in k + 1..d {
                    for j in k + 1..d {
                        let lhs = m[i * d + j].checked_mul(pivot).ok_or(Error::Overflow)?;
                        let rhs = m[i * d + k]
                            .checked_mul(m[k * d + j])
                            .ok_or(Error::Overflow)?;
                        let diff = lhs.checked_sub(rhs).ok_or(Error::Overflow)?;
                        m[i * d + j] = diff / prev;
                    }
                    m[i * d + k] = 0;
                }
                prev = pivot;
            }
            Ok(sign * m[d * d - 1])
        }
    }
}
