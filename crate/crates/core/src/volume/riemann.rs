use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matgroup::RealMatrix;
use crate::numeric::{bisect, golden_min, integrate, unit_ball_volume};
use crate::rootsys::{pair_f, rho, to_f64, RootSystemData};

/// Inner product on 𝔞 in the coordinates of the root system data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InnerProduct {
    Standard,
    Gram { matrix: Vec<Vec<f64>> },
}

impl InnerProduct {
    fn gram(&self, r: usize) -> Result<Vec<Vec<f64>>> {
        match self {
            Self::Standard => Ok((0..r)
                .map(|i| (0..r).map(|j| (i == j) as u8 as f64).collect())
                .collect()),
            Self::Gram { matrix } => {
                if matrix.len() != r || matrix.iter().any(|row| row.len() != r) {
                    return Err(Error::DimMismatch {
                        expected: r,
                        got: matrix.len(),
                    });
                }
                for i in 0..r {
                    for j in 0..r {
                        if (matrix[i][j] - matrix[j][i]).abs() > 1e-12 * (1.0 + matrix[i][j].abs())
                        {
                            return Err(Error::InvalidInput(
                                "Gram matrix must be symmetric".into(),
                            ));
                        }
                    }
                }
                Ok(matrix.clone())
            }
        }
    }

    /// Lower Cholesky factor L with G = L Lᵀ.
    fn cholesky(&self, r: usize) -> Result<Vec<Vec<f64>>> {
        let g = self.gram(r)?;
        let mut l = vec![vec![0.0; r]; r];
        for i in 0..r {
            for j in 0..=i {
                let s: f64 = g[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::InvalidInput(
                            "Gram matrix must be positive definite".into(),
                        ));
                    }
                    l[i][i] = s.sqrt();
                } else {
                    l[i][j] = s / l[j][j];
                }
            }
        }
        Ok(l)
    }
}

/// Solves L x = b.
fn forward(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; b.len()];
    for i in 0..b.len() {
        x[i] = (b[i] - (0..i).map(|k| l[i][k] * x[k]).sum::<f64>()) / l[i][i];
    }
    x
}

/// Solves Lᵀ x = b.
fn backward(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = (b[i] - (i + 1..n).map(|k| l[k][i] * x[k]).sum::<f64>()) / l[i][i];
    }
    x
}

/// The unit vector maximizing ρ on the unit sphere: v_ρ/‖v_ρ‖ with ⟨v_ρ, Y⟩ = ρ(Y).
pub fn ymax(rs: &RootSystemData, inner: &InnerProduct) -> Result<Vec<f64>> {
    let l = inner.cholesky(rs.rank)?;
    let r: Vec<f64> = rho(rs).iter().map(to_f64).collect();
    let v = backward(&l, &forward(&l, &r));
    let n = v.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>().sqrt();
    let y: Vec<f64> = v.iter().map(|x| x / n).collect();
    if (0..rs.rank).any(|i| !(pair_f(rs.simple(i), &y) > 1e-12)) {
        return Err(Error::NotInteriorPoint);
    }
    Ok(y)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiemannianExponents {
    /// Exponential rate δ = 2ρ(Y_max).
    pub delta: f64,
    /// Polynomial power (rank − 1)/2.
    pub power: f64,
}

pub fn riemannian_exponents(
    rs: &RootSystemData,
    inner: &InnerProduct,
) -> Result<RiemannianExponents> {
    let y = ymax(rs, inner)?;
    let two_rho: f64 = 2.0
        * rho(rs)
            .iter()
            .zip(&y)
            .map(|(a, b)| to_f64(a) * b)
            .sum::<f64>();
    Ok(RiemannianExponents {
        delta: two_rho,
        power: (rs.rank as f64 - 1.0) / 2.0,
    })
}

/// ∫_{B(0,T)} e^{λ(Y)} dY in ℝ^r (orthonormal coordinates), sliced orthogonally to λ.
pub fn exp_ball_integral(lambda: &[f64], r: usize, t: f64) -> Result<f64> {
    if lambda.len() != r {
        return Err(Error::DimMismatch {
            expected: r,
            got: lambda.len(),
        });
    }
    if r == 0 {
        return Err(Error::InvalidInput("dimension must be positive".into()));
    }
    if !(t > 0.0) {
        return Ok(0.0);
    }
    let a = lambda.iter().map(|x| x * x).sum::<f64>().sqrt();
    if a == 0.0 {
        return Ok(unit_ball_volume(r) * t.powi(r as i32));
    }
    // x = T cos θ along λ; the slice is an (r−1)-ball of radius T sin θ
    let w = unit_ball_volume(r - 1) * t.powi(r as i32);
    let q = integrate(
        |th: f64| (a * t * (th.cos() - 1.0)).exp() * th.sin().powi(r as i32),
        0.0,
        PI,
        0.0,
        1e-13,
        2000,
    );
    Ok(w * q.value * (a * t).exp())
}

/// ∫ e^{λ(Y)} dY over the planar sector {ρ(cos φ, sin φ) : 0 ≤ ρ < T, φ_lo ≤ φ ≤ φ_hi}.
pub fn exp_sector_integral_2d(lambda: [f64; 2], phi_lo: f64, phi_hi: f64, t: f64) -> f64 {
    let radial = |phi: f64| {
        let a = lambda[0] * phi.cos() + lambda[1] * phi.sin();
        let x = a * t;
        if x.abs() < 1e-6 {
            t * t * (0.5 + x / 3.0 + x * x / 8.0)
        } else {
            ((x - 1.0) * x.exp() + 1.0) / (a * a)
        }
    };
    integrate(radial, phi_lo, phi_hi, 0.0, 1e-12, 2000).value
}

/// ∫_{𝔞⁺ ∩ B(0,T) ∩ S} e^{2ρ(Y)} dY for rank 2, where S is the cone of half-angle
/// `half_angle` around Y_max (the whole chamber if `None`).
pub fn chamber_exp_integral_2d(
    rs: &RootSystemData,
    inner: &InnerProduct,
    t: f64,
    half_angle: Option<f64>,
) -> Result<f64> {
    if rs.rank != 2 {
        return Err(Error::DimMismatch {
            expected: 2,
            got: rs.rank,
        });
    }
    let l = inner.cholesky(2)?;
    let lt = |y: &[f64]| vec![l[0][0] * y[0] + l[1][0] * y[1], l[1][1] * y[1]];
    // chamber edges: α_i(ω_j) = δ_ij
    let a = [rs.simple(0), rs.simple(1)].map(|s| [to_f64(&s[0]), to_f64(&s[1])]);
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let w1 = [a[1][1] / det, -a[1][0] / det];
    let w2 = [-a[0][1] / det, a[0][0] / det];
    let ang = |y: &[f64]| {
        let z = lt(y);
        z[1].atan2(z[0])
    };
    let (mut lo, mut hi) = (ang(&w1), ang(&w2));
    if hi < lo {
        std::mem::swap(&mut lo, &mut hi);
    }
    if hi - lo > PI {
        let tmp = lo + TAU;
        lo = hi;
        hi = tmp;
    }
    if let Some(h) = half_angle {
        let mut m = ang(&ymax(rs, inner)?);
        while m < lo {
            m += TAU;
        }
        lo = lo.max(m - h);
        hi = hi.min(m + h);
    }
    let two_rho: Vec<f64> = rho(rs).iter().map(|x| 2.0 * to_f64(x)).collect();
    let lz = forward(&l, &two_rho);
    Ok(exp_sector_integral_2d([lz[0], lz[1]], lo, hi, t))
}

/// Hyperbolic distance in the upper half-plane (curvature −1).
pub fn hyperbolic_distance(z: Complex64, w: Complex64) -> f64 {
    2.0 * ((z - w).norm() / (2.0 * (z.im * w.im).sqrt())).asinh()
}

/// Busemann function of the geodesic ray t ↦ i e^t, evaluated as d(γ(t_max), x) − t_max.
pub fn busemann_rank1(x: Complex64, t_max: f64) -> f64 {
    busemann_rank1_with_tail(x, t_max).0
}

/// Value at t_max and the Cauchy-tail estimate |β(t_max) − β(t_max − 1)|.
pub fn busemann_rank1_with_tail(x: Complex64, t_max: f64) -> (f64, f64) {
    let b = |t: f64| hyperbolic_distance(Complex64::new(0.0, t.exp()), x) - t;
    let v = b(t_max);
    (v, (v - b(t_max - 1.0)).abs())
}

fn mobius(g: &RealMatrix, z: Complex64) -> Complex64 {
    let (a, b, c, d) = (g.get(0, 0), g.get(0, 1), g.get(1, 0), g.get(1, 1));
    (z * a + b) / (z * c + d)
}

/// ∫_K Im(k·z) dk over SO(2) with the n-point trapezoid rule.
fn avg_im(z: Complex64, n: usize) -> f64 {
    (0..n)
        .map(|k| mobius(&RealMatrix::rotation2(PI * k as f64 / n as f64), z).im)
        .sum::<f64>()
        / n as f64
}

fn check_sl2(g: &RealMatrix) -> Result<()> {
    if g.dim() != 2 {
        return Err(Error::DimMismatch {
            expected: 2,
            got: g.dim(),
        });
    }
    if !(g.det() > 0.0) {
        return Err(Error::InvalidInput(
            "expected a matrix of positive determinant".into(),
        ));
    }
    Ok(())
}

fn normalize(g: &RealMatrix) -> RealMatrix {
    g.scale(1.0 / g.det().sqrt())
}

/// C(g₁, g₂) with λ({h ∈ SL(2,ℝ) : d(g₁hg₂·i, i) < T}) ~ C(g₁, g₂) e^T.
///
/// Equals ½ ∫_K e^{−b(k g₁⁻¹ i)} dk ∫_K e^{−b(k g₂ i)} dk with b the Busemann
/// function toward ∞, e^{−b(z)} = Im z.
pub fn rank1_constant(g1: &RealMatrix, g2: &RealMatrix, n: usize) -> Result<f64> {
    check_sl2(g1)?;
    check_sl2(g2)?;
    let i = Complex64::new(0.0, 1.0);
    let w = mobius(&normalize(g1).inverse()?, i);
    let z = mobius(&normalize(g2), i);
    Ok(0.5 * avg_im(w, n) * avg_im(z, n))
}

/// λ({h ∈ SL(2,ℝ) : d(g₁hg₂·i, i) < T}) with h = k₁ a_t k₂, dλ = sinh t dt dk₁ dk₂,
/// on an n × n trapezoid grid in K × K.
pub fn riemannian_skew_volume_sl2(
    g1: &RealMatrix,
    g2: &RealMatrix,
    t: f64,
    n: usize,
) -> Result<f64> {
    check_sl2(g1)?;
    check_sl2(g2)?;
    let i = Complex64::new(0.0, 1.0);
    let g1i = normalize(g1).inverse()?;
    let g2 = normalize(g2);
    let mut total = 0.0;
    for a in 0..n {
        let k1i = RealMatrix::rotation2(-PI * a as f64 / n as f64);
        let w = mobius(&k1i, mobius(&g1i, i));
        for b in 0..n {
            let k2 = RealMatrix::rotation2(PI * b as f64 / n as f64);
            let z = mobius(&k2, mobius(&g2, i));
            total += geodesic_ball_measure(z, w, t);
        }
    }
    Ok(total / (n * n) as f64)
}

/// ∫ sinh s ds over {s ≥ 0 : d(e^s z, w) < T}; the distance is convex along the geodesic.
fn geodesic_ball_measure(z: Complex64, w: Complex64, t: f64) -> f64 {
    let d = |s: f64| hyperbolic_distance(z * s.exp(), w);
    let span = t + 2.0 * hyperbolic_distance(z, w) + 1.0;
    let (s0, d0) = golden_min(d, -span, span, 1e-14);
    if d0 >= t {
        return 0.0;
    }
    let hi = bisect(|s| d(s) - t, s0, s0 + span + t, 200);
    let lo = bisect(|s| d(s) - t, s0 - span - t, s0, 200).max(0.0);
    if hi <= lo {
        return 0.0;
    }
    hi.cosh() - lo.cosh()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootsys::GroupSpec;

    #[test]
    fn ymax_examples() {
        let a1 = GroupSpec::SLn { n: 2 }.root_system();
        let y = ymax(&a1, &InnerProduct::Standard).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-15);
        let e = riemannian_exponents(&a1, &InnerProduct::Standard).unwrap();
        assert!((e.delta - 2.0).abs() < 1e-15);
        assert_eq!(e.power, 0.0);
        let a1a1 = GroupSpec::SL2xSL2Tensor { l: 2 }.root_system();
        let y = ymax(&a1a1, &InnerProduct::Standard).unwrap();
        assert!((y[0] - 0.5f64.sqrt()).abs() < 1e-15 && (y[1] - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(
            riemannian_exponents(&a1a1, &InnerProduct::Standard)
                .unwrap()
                .power,
            0.5
        );
    }

    #[test]
    fn ymax_maximizes_rho_on_sphere() {
        for gs in [
            GroupSpec::SOpq { p: 2, q: 3 },
            GroupSpec::SLn { n: 3 },
            GroupSpec::SOpq { p: 2, q: 2 },
        ] {
            let rs = gs.root_system();
            for inner in [
                InnerProduct::Standard,
                InnerProduct::Gram {
                    matrix: vec![vec![2.0, 0.5], vec![0.5, 1.0]],
                },
            ] {
                let y = ymax(&rs, &inner).unwrap();
                let g = inner.gram(2).unwrap();
                let r = rho(&rs);
                let n = 200_000;
                let mut best = (f64::MIN, vec![]);
                for k in 0..n {
                    let th = TAU * k as f64 / n as f64;
                    let v = [th.cos(), th.sin()];
                    let q = (0..2)
                        .map(|i| (0..2).map(|j| g[i][j] * v[i] * v[j]).sum::<f64>())
                        .sum::<f64>()
                        .sqrt();
                    let u = [v[0] / q, v[1] / q];
                    if rs.in_chamber(&u, 0.0) {
                        let val = pair_f(&r, &u);
                        if val > best.0 {
                            best = (val, u.to_vec());
                        }
                    }
                }
                assert!((pair_f(&r, &y) - best.0).abs() < 1e-9, "{gs:?}");
                assert!((y[0] - best.1[0]).abs() < 1e-4 && (y[1] - best.1[1]).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn exp_ball_closed_forms() {
        for t in [0.5, 3.0, 20.0] {
            let v = exp_ball_integral(&[1.0], 1, t).unwrap();
            assert!((v / (2.0 * t.sinh()) - 1.0).abs() < 1e-12);
        }
        assert!(
            (exp_ball_integral(&[0.0, 0.0, 0.0], 3, 2.0).unwrap() - 4.0 / 3.0 * PI * 8.0).abs()
                < 1e-12
        );
        // 3-ball: disc slices of area π(T² − x²), giving 4π(T cosh T − sinh T)
        let t: f64 = 2.5;
        let v = exp_ball_integral(&[0.0, 1.0, 0.0], 3, t).unwrap();
        let want = 4.0 * PI * (t * t.cosh() - t.sinh());
        assert!((v / want - 1.0).abs() < 1e-11, "{v} {want}");
    }

    #[test]
    fn exp_ball_against_midpoint_rule() {
        let t = 6.0;
        let n = 2000;
        let h = 2.0 * t / n as f64;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                let (x, y) = (-t + h * (i as f64 + 0.5), -t + h * (j as f64 + 0.5));
                if x * x + y * y < t * t {
                    s += (0.6 * x - 0.8 * y).exp();
                }
            }
        }
        let v = exp_ball_integral(&[0.6, -0.8], 2, t).unwrap();
        assert!((s * h * h / v - 1.0).abs() < 2e-3);
    }

    #[test]
    fn sector_matches_ball() {
        let t = 7.0;
        let full = exp_sector_integral_2d([0.3, 0.9], 0.0, TAU, t);
        let ball = exp_ball_integral(&[0.3, 0.9], 2, t).unwrap();
        assert!((full / ball - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cone_around_ymax_carries_the_mass() {
        let rs = GroupSpec::SOpq { p: 2, q: 3 }.root_system();
        let inner = InnerProduct::Standard;
        let mut prev = 0.0;
        for t in [5.0, 20.0, 80.0] {
            let all = chamber_exp_integral_2d(&rs, &inner, t, None).unwrap();
            let cone = chamber_exp_integral_2d(&rs, &inner, t, Some(0.2)).unwrap();
            let r = cone / all;
            assert!(r > prev && r <= 1.0 + 1e-12);
            prev = r;
        }
        assert!(prev > 0.99);
    }

    #[test]
    fn busemann() {
        let i = Complex64::new(0.0, 1.0);
        assert!(busemann_rank1(i, 40.0).abs() < 1e-12);
        let ahead = Complex64::new(0.0, 1.5f64.exp());
        assert!((busemann_rank1(ahead, 40.0) + 1.5).abs() < 1e-9);
        for x in [
            Complex64::new(0.7, 0.2),
            Complex64::new(-3.0, 5.0),
            Complex64::new(10.0, 0.01),
        ] {
            let (v, tail) = busemann_rank1_with_tail(x, 40.0);
            assert!((v + x.im.ln()).abs() < 1e-6, "{x}");
            assert!(tail < 1e-6);
        }
    }

    #[test]
    fn rank1_volume_identity() {
        let id = RealMatrix::identity(2);
        assert!((rank1_constant(&id, &id, 8).unwrap() - 0.5).abs() < 1e-15);
        let v = riemannian_skew_volume_sl2(&id, &id, 3.0, 4).unwrap();
        assert!((v - (3f64.cosh() - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn rank1_skew_volume_approaches_constant() {
        let g1 = RealMatrix::from_rows([[2.0, 1.0], [1.0, 1.0]]);
        let g2 = RealMatrix::from_rows([[1.0, 0.5], [0.0, 1.0]]);
        let c = rank1_constant(&g1, &g2, 256).unwrap();
        let t = 25.0;
        let v = riemannian_skew_volume_sl2(&g1, &g2, t, 128).unwrap();
        assert!(
            (v / (c * t.exp()) - 1.0).abs() < 1e-3,
            "{} vs {c}",
            v / t.exp()
        );
    }
}
