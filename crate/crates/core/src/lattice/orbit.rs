use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::enumerate::{fold_ball, BallEnumeration, LatticeSpec};
use super::testfn::{Region, TestFunction};
use crate::error::{Error, Result};
use crate::matgroup::DistanceFunction;

/// How Γ moves the base point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Action {
    /// w = v·γ on row vectors of ℝ^d.
    RightLinear,
    /// x ↦ γ⁻¹x mod ℤ^d on the torus.
    InverseLeftTorus,
}

/// Base point of an orbit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "space", content = "coords", rename_all = "kebab-case")]
pub enum OrbitPoint {
    Vector(Vec<f64>),
    Torus(Vec<f64>),
}

impl OrbitPoint {
    pub fn coords(&self) -> &[f64] {
        match self {
            Self::Vector(v) | Self::Torus(v) => v,
        }
    }
}

const CHUNK: usize = 4096;

fn check(point: &OrbitPoint, action: Action, dim: usize) -> Result<()> {
    match (point, action) {
        (OrbitPoint::Vector(_), Action::RightLinear)
        | (OrbitPoint::Torus(_), Action::InverseLeftTorus) => {}
        _ => return Err(Error::ActionMismatch),
    }
    let n = point.coords().len();
    if n != dim {
        return Err(Error::DimMismatch {
            expected: dim,
            got: n,
        });
    }
    if point.coords().iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("orbit point must be finite".into()));
    }
    Ok(())
}

/// Image of the base point under γ (row-major entries), written to `out`.
pub fn act(point: &OrbitPoint, gamma: &[i64], out: &mut [f64]) {
    let d = out.len();
    match point {
        OrbitPoint::Vector(v) => {
            for j in 0..d {
                out[j] = (0..d).map(|i| v[i] * gamma[i * d + j] as f64).sum();
            }
        }
        OrbitPoint::Torus(x) => {
            let inv = inverse_entries(gamma, d);
            for i in 0..d {
                let y: f64 = (0..d).map(|j| inv[i * d + j] as f64 * x[j]).sum();
                out[i] = y - y.floor();
            }
        }
    }
}

/// Inverse of a determinant ±1 integer matrix of size 2 or 3.
fn inverse_entries(g: &[i64], d: usize) -> [i64; 9] {
    let mut out = [0i64; 9];
    if d == 2 {
        let s = g[0] * g[3] - g[1] * g[2];
        out[..4].copy_from_slice(&[s * g[3], -s * g[1], -s * g[2], s * g[0]]);
    } else {
        let m = |i: usize, j: usize| g[i * 3 + j];
        let cof = |i: usize, j: usize| {
            let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
            let (c0, c1) = ((j + 1) % 3, (j + 2) % 3);
            m(r0, c0) * m(r1, c1) - m(r0, c1) * m(r1, c0)
        };
        let det = (0..3).map(|j| m(0, j) * cof(0, j)).sum::<i64>();
        for i in 0..3 {
            for j in 0..3 {
                out[i * 3 + j] = det * cof(j, i);
            }
        }
    }
    out
}

fn fold_elements<T, F>(b: &BallEnumeration, point: &OrbitPoint, zero: T, f: F) -> T
where
    T: Send + Sync + Copy + std::ops::Add<Output = T>,
    F: Fn(&[f64]) -> T + Sync,
{
    let d = b.lattice.dim;
    let parts: Vec<T> = b
        .elements
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut w = vec![0.0; d];
            chunk.iter().fold(zero, |acc, g| {
                act(point, g.entries(), &mut w);
                acc + f(&w)
            })
        })
        .collect();
    parts.into_iter().fold(zero, |a, x| a + x)
}

/// S_{φ,v}(T) = Σ_{γ ∈ Γ_T} φ(v·γ), or Σ φ(γ⁻¹x₀) on the torus.
pub fn orbit_sum(
    b: &BallEnumeration,
    point: &OrbitPoint,
    phi: &TestFunction,
    action: Action,
) -> Result<f64> {
    check(point, action, b.lattice.dim)?;
    phi.validate()?;
    Ok(fold_elements(b, point, 0.0, |w| phi.value(w)))
}

/// Complex orbit sum; needed for character (Weyl) sums.
pub fn orbit_sum_complex(
    b: &BallEnumeration,
    point: &OrbitPoint,
    phi: &TestFunction,
    action: Action,
) -> Result<Complex64> {
    check(point, action, b.lattice.dim)?;
    phi.validate()?;
    Ok(fold_elements(b, point, Complex64::new(0.0, 0.0), |w| {
        phi.complex_value(w)
    }))
}

/// N_T(A, x₀) = #{γ ∈ Γ_T : x₀γ ∈ A}.
pub fn count_in_set(
    b: &BallEnumeration,
    point: &OrbitPoint,
    region: &Region,
    action: Action,
) -> Result<u64> {
    check(point, action, b.lattice.dim)?;
    Ok(fold_elements(b, point, 0u64, |w| region.contains(w) as u64))
}

/// Orbit sums of several test functions over Γ_T without materializing
/// the ball. Returns the sums and #Γ_T.
pub fn orbit_sums_streaming(
    l: &LatticeSpec,
    d: &DistanceFunction,
    t: f64,
    cap: u64,
    point: &OrbitPoint,
    phis: &[TestFunction],
    action: Action,
) -> Result<(Vec<Complex64>, u64)> {
    check(point, action, l.dim)?;
    for p in phis {
        p.validate()?;
    }
    let n = phis.len();
    let dim = l.dim;
    let ((sums, count), _) = fold_ball(
        l,
        d,
        t,
        cap,
        || (vec![Complex64::new(0.0, 0.0); n], 0u64),
        |acc, g| {
            let mut w = [0.0; 3];
            act(point, g, &mut w[..dim]);
            for (s, p) in acc.0.iter_mut().zip(phis) {
                *s += p.complex_value(&w[..dim]);
            }
            acc.1 += 1;
        },
        |mut a, b| {
            for (x, y) in a.0.iter_mut().zip(b.0) {
                *x += y;
            }
            a.1 += b.1;
            a
        },
    )?;
    Ok((sums, count))
}
