use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square real matrix, row-major, finite entries only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput(
                "matrix dimension must be positive".into(),
            ));
        }
        if data.len() != dim * dim {
            return Err(Error::DimMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        Ok(Self { dim, data })
    }

    pub(crate) fn from_vec_unchecked(dim: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), dim * dim);
        Self { dim, data }
    }

    pub fn from_rows<const N: usize>(rows: [[f64; N]; N]) -> Self {
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        assert!(data.iter().all(|x| x.is_finite()), "non-finite entry");
        Self { dim: N, data }
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn diag(d: &[f64]) -> Self {
        Self::from_fn(d.len(), |i, j| if i == j { d[i] } else { 0.0 })
    }

    /// Elementary matrix with a single 1 at `(i, j)`.
    pub fn unit(dim: usize, i: usize, j: usize) -> Self {
        Self::from_fn(dim, |a, b| if a == i && b == j { 1.0 } else { 0.0 })
    }

    pub fn rotation2(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::from_rows([[c, -s], [s, c]])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, j)).collect()
    }

    /// Determinant by partial-pivot elimination.
    pub fn det(&self) -> f64 {
        let d = self.dim;
        match d {
            1 => self.data[0],
            2 => self.data[0] * self.data[3] - self.data[1] * self.data[2],
            3 => {
                let m = &self.data;
                m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
                    + m[2] * (m[3] * m[7] - m[4] * m[6])
            }
            _ => {
                let mut m = self.data.clone();
                let mut det = 1.0;
                for k in 0..d {
                    let p = (k..d)
                        .max_by(|&a, &b| m[a * d + k].abs().total_cmp(&m[b * d + k].abs()))
                        .unwrap();
                    if m[p * d + k] == 0.0 {
                        return 0.0;
                    }
                    if p != k {
                        for c in 0..d {
                            m.swap(k * d + c, p * d + c);
                        }
                        det = -det;
                    }
                    let piv = m[k * d + k];
                    det *= piv;
                    for i in k + 1..d {
                        let f = m[i * d + k] / piv;
                        for c in k..d {
                            m[i * d + c] -= f * m[k * d + c];
                        }
                    }
                }
                det
            }
        }
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        let d = self.dim;
        let mut a = self.data.clone();
        let mut inv = Self::identity(d).data;
        let scale = self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for k in 0..d {
            let p = (k..d)
                .max_by(|&x, &y| a[x * d + k].abs().total_cmp(&a[y * d + k].abs()))
                .unwrap();
            if a[p * d + k].abs() <= 1e-300_f64.max(scale * 1e-15) {
                return Err(Error::InvalidInput("matrix is singular".into()));
            }
            if p != k {
                for c in 0..d {
                    a.swap(k * d + c, p * d + c);
                    inv.swap(k * d + c, p * d + c);
                }
            }
            let piv = a[k * d + k];
            for c in 0..d {
                a[k * d + c] /= piv;
                inv[k * d + c] /= piv;
            }
            for i in 0..d {
                if i != k {
                    let f = a[i * d + k];
                    if f != 0.0 {
                        for c in 0..d {
                            a[i * d + c] -= f * a[k * d + c];
                            inv[i * d + c] -= f * inv[k * d + c];
                        }
                    }
                }
            }
        }
        Ok(Self { dim: d, data: inv })
    }

    /// Lower bound on the smallest singular value: 1/‖A⁻¹‖_F.
    pub fn sigma_min_lower(&self) -> Result<f64> {
        Ok(1.0 / self.inverse()?.frobenius())
    }

    /// Kronecker product.
    pub fn kron(&self, other: &Self) -> Self {
        let (m, n) = (self.dim, other.dim);
        Self::from_fn(m * n, |i, j| {
            self.get(i / n, j / n) * other.get(i % n, j % n)
        })
    }

    /// Row vector times matrix.
    pub fn left_apply(&self, v: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|j| (0..d).map(|i| v[i] * self.data[i * d + j]).sum())
            .collect()
    }

    /// Matrix times column vector.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|i| (0..d).map(|j| self.data[i * d + j] * v[j]).sum())
            .collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl Mul for &RealMatrix {
    type Output = RealMatrix;

    fn mul(self, rhs: &RealMatrix) -> RealMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in product");
        let d = self.dim;
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..d {
                    out[i * d + j] += a * rhs.data[k * d + j];
                }
            }
        }
        RealMatrix { dim: d, data: out }
    }
}

impl Add for &RealMatrix {
    type Output = RealMatrix;

    fn add(self, rhs: &RealMatrix) -> RealMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in sum");
        RealMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &RealMatrix {
    type Output = RealMatrix;

    fn sub(self, rhs: &RealMatrix) -> RealMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in difference");
        RealMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        assert!(RealMatrix::new(2, vec![1.0, f64::NAN, 0.0, 1.0]).is_err());
        assert!(RealMatrix::new(2, vec![1.0, f64::INFINITY, 0.0, 1.0]).is_err());
        assert!(RealMatrix::new(2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn inverse_round_trip() {
        let a = RealMatrix::from_rows([[2.0, 1.0, 0.5], [0.0, 3.0, -1.0], [1.0, 0.0, 1.0]]);
        let p = &a * &a.inverse().unwrap();
        assert!(p.max_abs_diff(&RealMatrix::identity(3)) < 1e-14);
        assert!((a.det() - 3.5).abs() < 1e-12);
    }

    #[test]
    fn kron_of_diagonals_is_diagonal() {
        let a = RealMatrix::diag(&[2.0, 3.0]);
        let b = RealMatrix::diag(&[5.0, 7.0, 11.0]);
        assert_eq!(
            a.kron(&b),
            RealMatrix::diag(&[10.0, 14.0, 22.0, 15.0, 21.0, 33.0])
        );
    }

    #[test]
    fn general_det_agrees_with_product_rule() {
        let a = RealMatrix::from_fn(4, |i, j| ((i * 7 + j * 3) % 5) as f64 - 1.5);
        let b = RealMatrix::from_fn(4, |i, j| if i <= j { 1.0 + j as f64 } else { 0.5 });
        let ab = &a * &b;
        assert!((ab.det() - a.det() * b.det()).abs() < 1e-9 * (1.0 + ab.det().abs()));
    }
}
