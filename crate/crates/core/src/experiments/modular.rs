//! Reduction to the standard fundamental domain of SL(2,ℤ) on the upper
//! half-plane and a six-cell partition of it.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{fold_ball, LatticeSpec};
use crate::matgroup::{DistanceFunction, RealMatrix};

const MAX_STEPS: usize = 10_000;

/// Moves z into F = {|Re z| ≤ ½, |z| ≥ 1} by translations and z ↦ −1/z.
pub fn reduce(mut z: Complex64) -> Complex64 {
    for _ in 0..MAX_STEPS {
        z.re -= z.re.round();
        let r2 = z.norm_sqr();
        if r2 >= 1.0 {
            break;
        }
        z = Complex64::new(-z.re / r2, z.im / r2);
    }
    z
}

/// M·i for a real 2 × 2 matrix of determinant `det`, computed without cancellation in Im.
pub fn mobius_i(m: &RealMatrix) -> Complex64 {
    let (a, b, c, d) = (m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1));
    let den = c * c + d * d;
    Complex64::new((a * c + b * d) / den, (a * d - b * c) / den)
}

/// F split into three vertical strips (Re z < −1/6, |Re z| ≤ 1/6, Re z > 1/6)
/// times Im z below or above `height`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModularCells {
    pub height: f64,
}

const STRIPS: [(f64, f64); 3] = [
    (-0.5, -1.0 / 6.0),
    (-1.0 / 6.0, 1.0 / 6.0),
    (1.0 / 6.0, 0.5),
];

impl ModularCells {
    pub fn new(height: f64) -> Result<Self> {
        if !(height > 1.0 && height.is_finite()) {
            return Err(Error::InvalidInput("cell height must exceed 1".into()));
        }
        Ok(Self { height })
    }

    pub fn cell(&self, z: Complex64) -> usize {
        let strip = if z.re < STRIPS[0].1 {
            0
        } else if z.re <= STRIPS[1].1 {
            1
        } else {
            2
        };
        strip + if z.im >= self.height { 3 } else { 0 }
    }

    /// Hyperbolic area dx dy/y² of each cell divided by area(F) = π/3.
    pub fn proportions(&self) -> [f64; 6] {
        let mut out = [0.0; 6];
        for (k, &(a, b)) in STRIPS.iter().enumerate() {
            let upper = (b - a) / self.height;
            out[k] = (b.asin() - a.asin() - upper) / (PI / 3.0);
            out[k + 3] = upper / (PI / 3.0);
        }
        out
    }
}

/// Cell counts of the reduced points g₀⁻¹λ·i over λ ∈ SL(2,ℤ) with D(λ) < T.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModularHistogram {
    pub t: f64,
    pub counts: [u64; 6],
    pub total: u64,
}

pub fn modular_histogram(
    g0: &RealMatrix,
    d: &DistanceFunction,
    t: f64,
    cells: ModularCells,
    cap: u64,
) -> Result<ModularHistogram> {
    if g0.dim() != 2 {
        return Err(Error::DimMismatch {
            expected: 2,
            got: g0.dim(),
        });
    }
    if (g0.det() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput("g₀ must have determinant 1".into()));
    }
    let inv = g0.inverse()?;
    let (counts, _) = fold_ball(
        &LatticeSpec::sl(2),
        d,
        t,
        cap,
        || [0u64; 6],
        |acc, l| {
            let lam =
                RealMatrix::from_rows([[l[0] as f64, l[1] as f64], [l[2] as f64, l[3] as f64]]);
            acc[cells.cell(reduce(mobius_i(&(&inv * &lam))))] += 1;
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
            a
        },
    )?;
    Ok(ModularHistogram {
        t,
        counts,
        total: counts.iter().sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matgroup::NormSpec;

    #[test]
    fn reduction_lands_in_domain() {
        for z in [
            Complex64::new(3.7, 0.01),
            Complex64::new(-0.3, 1e-6),
            Complex64::new(0.1, 0.5),
        ] {
            let w = reduce(z);
            assert!(
                w.re.abs() <= 0.5 + 1e-12 && w.norm_sqr() >= 1.0 - 1e-12,
                "{w}"
            );
        }
        // i·1/2 ↦ 2i
        assert!((reduce(Complex64::new(0.0, 0.5)) - Complex64::new(0.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn proportions_sum_to_one() {
        let p = ModularCells::new(2.0).unwrap().proportions();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(p.iter().all(|&x| x > 0.1));
    }

    #[test]
    fn identity_is_degenerate() {
        let d = DistanceFunction::new(NormSpec::frobenius(2));
        let cells = ModularCells::new(2.0).unwrap();
        let h = modular_histogram(&RealMatrix::identity(2), &d, 30.0, cells, u64::MAX).unwrap();
        let base = cells.cell(Complex64::new(0.0, 1.0));
        assert_eq!(h.counts[base], h.total);
        let n = crate::lattice::gamma_count(
            &crate::lattice::enumerate_ball(&LatticeSpec::sl(2), &d, 30.0).unwrap(),
        );
        assert_eq!(h.total, n);
    }
}
