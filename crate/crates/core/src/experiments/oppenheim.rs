//! Integer frames of a diagonal quadratic form with Gram matrix in a box.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matgroup::pnorm;

/// Entrywise bounds lo ≤ gᵀQg ≤ hi on a symmetric 3 × 3 Gram matrix (row-major).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GramBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl GramBox {
    pub fn validate(&self) -> Result<()> {
        for m in [&self.lo, &self.hi] {
            if m.len() != 9 {
                return Err(Error::DimMismatch {
                    expected: 9,
                    got: m.len(),
                });
            }
            if m.iter().any(|x| x.is_nan()) {
                return Err(Error::InvalidInput(
                    "Gram box bounds must not be NaN".into(),
                ));
            }
            for i in 0..3 {
                for j in 0..i {
                    if m[3 * i + j] != m[3 * j + i] {
                        return Err(Error::InvalidInput(
                            "Gram box bounds must be symmetric".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// True if some entry interval is empty.
    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(a, b)| a > b)
    }

    fn holds(&self, i: usize, j: usize, x: f64) -> bool {
        self.lo[3 * i + j] <= x && x <= self.hi[3 * i + j]
    }
}

/// Diagonal form Q = diag(q) on ℤ³ and the column norm ‖·‖_p.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameCounter {
    q: [f64; 3],
    p: f64,
    gram: GramBox,
}

/// Counts at one threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameCount {
    pub t: f64,
    pub frames: u64,
    /// Candidate columns summed over the three column lists.
    pub columns: u64,
}

impl FrameCounter {
    pub fn new(q: &[f64], p: f64, gram: GramBox) -> Result<Self> {
        if q.len() != 3 {
            return Err(Error::DimMismatch {
                expected: 3,
                got: q.len(),
            });
        }
        if q.iter().any(|x| !x.is_finite()) || q[2] == 0.0 {
            return Err(Error::InvalidInput(
                "form needs finite entries and q₃ ≠ 0".into(),
            ));
        }
        if !(p >= 1.0) {
            return Err(Error::InvalidInput("column norm needs p ≥ 1".into()));
        }
        gram.validate()?;
        Ok(Self {
            q: [q[0], q[1], q[2]],
            p,
            gram,
        })
    }

    fn form(&self, a: &[i64; 3], b: &[i64; 3]) -> f64 {
        (0..3).map(|i| self.q[i] * (a[i] * b[i]) as f64).sum()
    }

    /// Integer v with ‖v‖_p < T and lo ≤ Q(v) ≤ hi, solving for the last coordinate.
    fn columns(&self, t: f64, lo: f64, hi: f64) -> Vec<[i64; 3]> {
        let r = t.ceil() as i64;
        let mut out = Vec::new();
        for x in -r..=r {
            for y in -r..=r {
                let s = self.q[0] * (x * x) as f64 + self.q[1] * (y * y) as f64;
                let (a, b) = ((lo - s) / self.q[2], (hi - s) / self.q[2]);
                let (z2_lo, z2_hi) = (a.min(b).max(0.0), a.max(b));
                if z2_hi < 0.0 {
                    continue;
                }
                let z_lo = z2_lo.sqrt().ceil() as i64;
                let z_hi = (z2_hi.sqrt().floor() as i64).min(r);
                for z in z_lo..=z_hi {
                    for zz in if z == 0 { vec![0] } else { vec![z, -z] } {
                        let v = [x, y, zz];
                        let qv = self.form(&v, &v);
                        if lo <= qv && qv <= hi && pnorm(v.iter().map(|&c| c as f64), self.p) < t {
                            out.push(v);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Number of g ∈ GL(3,ℤ), det g = ±1, with max column norm < T and gᵀQg in the box.
    pub fn count(&self, t: f64) -> FrameCount {
        if self.gram.is_empty() || t <= 0.0 {
            return FrameCount {
                t,
                frames: 0,
                columns: 0,
            };
        }
        let lists: Vec<Vec<[i64; 3]>> = (0..3)
            .map(|j| self.columns(t, self.gram.lo[4 * j], self.gram.hi[4 * j]))
            .collect();
        let frames = lists[0]
            .par_iter()
            .map(|v1| {
                let mut n = 0u64;
                for v2 in &lists[1] {
                    if !self.gram.holds(0, 1, self.form(v1, v2)) {
                        continue;
                    }
                    let cross = [
                        v1[1] * v2[2] - v1[2] * v2[1],
                        v1[2] * v2[0] - v1[0] * v2[2],
                        v1[0] * v2[1] - v1[1] * v2[0],
                    ];
                    for v3 in &lists[2] {
                        let det = cross[0] * v3[0] + cross[1] * v3[1] + cross[2] * v3[2];
                        if det.abs() == 1
                            && self.gram.holds(0, 2, self.form(v1, v3))
                            && self.gram.holds(1, 2, self.form(v2, v3))
                        {
                            n += 1;
                        }
                    }
                }
                n
            })
            .sum();
        FrameCount {
            t,
            frames,
            columns: lists.iter().map(|l| l.len() as u64).sum(),
        }
    }
}
