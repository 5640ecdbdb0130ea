//! Limiting densities of orbits of lattices in SL(2,ℝ) acting on ℝ², and the
//! predicted orbit sums they integrate to.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::TestFunction;
use crate::matgroup::{pnorm, NormSpec, RealMatrix};
use crate::numeric::{adaptive_simpson, integrate, sublevel_intervals, substream};
use crate::volume::{
    limit_ratio_alpha, unipotent_skewball_volume, Method, SkewFamily, VolumeEstimate,
};

/// Haar measure on SL(2,ℝ) in Cartan coordinates (probability on K, sinh t dt)
/// gives SL(2,ℤ) covolume 1/12; multiplying by 12 normalizes the covolume to 1.
pub const CARTAN_TO_UNIT_COVOLUME: f64 = 12.0;

/// The fibered measure dt dw (H-coordinate times Lebesgue on ℝ²) equals 2π² times
/// the Cartan measure, so unit covolume corresponds to the factor 6/π².
pub const FIBERED_TO_UNIT_COVOLUME: f64 = 6.0 / (PI * PI);

/// Default schedule for limit-ratio estimates of α.
pub const DEFAULT_ALPHA_SCHEDULE: [f64; 4] = [1e3, 1e4, 1e5, 1e6];

const SIMPSON_TOL: f64 = 1e-6;
const SIMPSON_DEPTH: u32 = 12;

fn vec2(v: &[f64]) -> Result<[f64; 2]> {
    if v.len() != 2 {
        return Err(Error::DimMismatch {
            expected: 2,
            got: v.len(),
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("vector must be finite".into()));
    }
    if v[0] == 0.0 && v[1] == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok([v[0], v[1]])
}

/// Coordinate chart for a section of ℝ²∖{0} ≅ H\SL(2,ℝ).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Chart {
    /// σ(v) = [[v₁, v₂], [0, 1/v₁]], needs v₁ ≠ 0.
    First,
    /// σ(v) = [[v₁, v₂], [−1/v₂, 0]], needs v₂ ≠ 0.
    Second,
}

impl Chart {
    /// The better-conditioned chart for `v`.
    pub fn for_vector(v: &[f64]) -> Self {
        if v[0].abs() >= v[1].abs() {
            Self::First
        } else {
            Self::Second
        }
    }
}

/// A section σ with e₁σ(v) = v and det σ(v) = 1.
pub fn section(v: &[f64], chart: Chart) -> Result<RealMatrix> {
    let [a, b] = vec2(v)?;
    match chart {
        Chart::First if a != 0.0 => Ok(RealMatrix::from_rows([[a, b], [0.0, 1.0 / a]])),
        Chart::Second if b != 0.0 => Ok(RealMatrix::from_rows([[a, b], [-1.0 / b, 0.0]])),
        _ => Err(Error::InvalidInput(format!(
            "{chart:?} chart does not cover ({a}, {b})"
        ))),
    }
}

/// M(v, w) = σ(v)⁻¹ E₂₁ σ(w) = [[−v₂w₁, −v₂w₂], [v₁w₁, v₁w₂]] (independent of the sections).
pub fn ledrappier_matrix(v: &[f64], w: &[f64]) -> Result<RealMatrix> {
    let [v1, v2] = vec2(v)?;
    let [w1, w2] = vec2(w)?;
    Ok(RealMatrix::from_rows([
        [-v2 * w1, -v2 * w2],
        [v1 * w1, v1 * w2],
    ]))
}

/// α_v(w) = ‖E₂₁‖/‖M(v, w)‖.
pub fn ledrappier_density(v: &[f64], w: &[f64], norm: &NormSpec) -> Result<f64> {
    norm.validate()?;
    if norm.dim() != 2 {
        return Err(Error::DimMismatch {
            expected: 2,
            got: norm.dim(),
        });
    }
    let m = ledrappier_matrix(v, w)?;
    Ok(norm.eval_slice(RealMatrix::unit(2, 1, 0).data()) / norm.eval_slice(m.data()))
}

/// α_v(w) as the limit of λ(H_T[σ(v)⁻¹, σ(w)])/λ(H_T) with sections in the given charts.
pub fn numeric_alpha_chart(
    v: &[f64],
    w: &[f64],
    norm: &NormSpec,
    schedule: &[f64],
    charts: (Chart, Chart),
) -> Result<f64> {
    let g1 = section(v, charts.0)?.inverse()?;
    let g2 = section(w, charts.1)?;
    let fam = SkewFamily::Unipotent { norm: norm.clone() };
    Ok(limit_ratio_alpha(&fam, &g1, &g2, schedule)?.estimate)
}

/// α_v(w) with the first chart when v₁w₁ ≠ 0 and the mirrored chart otherwise.
pub fn numeric_alpha(v: &[f64], w: &[f64], norm: &NormSpec, schedule: &[f64]) -> Result<f64> {
    let vv = vec2(v)?;
    let ww = vec2(w)?;
    let charts = if vv[0] != 0.0 && ww[0] != 0.0 {
        (Chart::First, Chart::First)
    } else {
        (Chart::for_vector(&vv), Chart::for_vector(&ww))
    };
    numeric_alpha_chart(v, w, norm, schedule, charts)
}

/// How the density α_v is evaluated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DensityKind {
    /// 1/(‖v‖_p‖w‖_p) for the entrywise p-norm.
    LedrappierPNorm {
        p: f64,
    },
    LedrappierGeneral {
        norm: NormSpec,
    },
    NumericAlpha {
        norm: NormSpec,
        schedule: Vec<f64>,
    },
}

/// The density w ↦ α_v(w) on ℝ²∖{0}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityField {
    pub v: Vec<f64>,
    pub kind: DensityKind,
}

impl DensityField {
    pub fn eval(&self, w: &[f64]) -> Result<f64> {
        match &self.kind {
            DensityKind::LedrappierPNorm { p } => {
                vec2(&self.v)?;
                vec2(w)?;
                Ok(1.0 / (pnorm(self.v.iter().copied(), *p) * pnorm(w.iter().copied(), *p)))
            }
            DensityKind::LedrappierGeneral { norm } => ledrappier_density(&self.v, w, norm),
            DensityKind::NumericAlpha { norm, schedule } => {
                numeric_alpha(&self.v, w, norm, schedule)
            }
        }
    }
}

/// Angular range (θ_lo, θ_hi) containing the support of φ.
fn angular_support(phi: &TestFunction) -> (f64, f64) {
    match phi {
        TestFunction::SmoothBump { center, radius, .. } => {
            let c = center[0].hypot(center[1]);
            let mid = center[1].atan2(center[0]);
            let h = (radius / c).min(1.0).asin();
            (mid - h, mid + h)
        }
        TestFunction::BoxIndicator { lo, hi } => {
            let mid = (0.5 * (lo[1] + hi[1])).atan2(0.5 * (lo[0] + hi[0]));
            let angles = [
                (lo[0], lo[1]),
                (lo[0], hi[1]),
                (hi[0], lo[1]),
                (hi[0], hi[1]),
            ]
            .map(|(x, y)| {
                let a = y.atan2(x) - mid;
                a - TAU * (a / TAU).round()
            });
            let lo_a = angles.iter().copied().fold(f64::INFINITY, f64::min);
            let hi_a = angles.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (mid + lo_a, mid + hi_a)
        }
        _ => (0.0, TAU),
    }
}

/// ∫_{ℝ²} φ(w) f(w) dw in polar coordinates by nested adaptive Simpson.
/// Returns `None` for φ ≡ 0.
fn polar_integral(
    phi: &TestFunction,
    f: &(dyn Fn(&[f64]) -> Result<f64> + Sync),
) -> Result<Option<f64>> {
    phi.validate()?;
    if let Some(d) = phi.dim() {
        if d != 2 {
            return Err(Error::DimMismatch {
                expected: 2,
                got: d,
            });
        }
    }
    if *phi == TestFunction::Zero {
        return Ok(None);
    }
    let (r_lo, r_hi) = match phi.radial_support() {
        // pulled in by a few ulps so indicator boundaries do not round to the outside
        Some((a, b)) if a > 0.0 => (a * (1.0 + 1e-13), b * (1.0 - 1e-13)),
        _ => return Err(Error::SupportEscapesDomain),
    };
    let (th_lo, th_hi) = angular_support(phi);
    let err = std::sync::Mutex::new(None);
    let inner = |th: f64| {
        let (s, c) = th.sin_cos();
        adaptive_simpson(
            |r| {
                let w = [r * c, r * s];
                let p = phi.value(&w);
                if p == 0.0 {
                    return 0.0;
                }
                match f(&w) {
                    Ok(x) => p * x * r,
                    Err(e) => {
                        *err.lock().unwrap() = Some(e);
                        0.0
                    }
                }
            },
            r_lo,
            r_hi,
            SIMPSON_TOL,
            SIMPSON_DEPTH,
        )
    };
    let v = adaptive_simpson(inner, th_lo, th_hi, SIMPSON_TOL, SIMPSON_DEPTH);
    if let Some(e) = err.into_inner().unwrap() {
        return Err(e);
    }
    Ok(Some(v))
}

/// ∫ φ(w) α_v(w) dw.
pub fn nu_integral(phi: &TestFunction, field: &DensityField) -> Result<f64> {
    vec2(&field.v)?;
    Ok(polar_integral(phi, &|w| field.eval(w))?.unwrap_or(0.0))
}

/// Result of comparing α(g₁, g₂) with α(h₁g₁, h₂g₂).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaInvarianceReport {
    pub alpha: f64,
    pub alpha_translated: f64,
    pub ratio: f64,
    pub deviation: f64,
}

fn is_lower_unipotent(h: &RealMatrix) -> bool {
    h.dim() == 2 && h.get(0, 0) == 1.0 && h.get(1, 1) == 1.0 && h.get(0, 1) == 0.0
}

/// α(g₁, g₂) = lim λ({h : ‖g₁⁻¹hg₂‖ < T})/λ(H_T) against α(h₁g₁, h₂g₂) for
/// h₁, h₂ in the lower unipotent subgroup (a unimodular H).
pub fn alpha_invariance_check(
    h1: &RealMatrix,
    h2: &RealMatrix,
    g1: &RealMatrix,
    g2: &RealMatrix,
    norm: &NormSpec,
    schedule: &[f64],
) -> Result<AlphaInvarianceReport> {
    if !is_lower_unipotent(h1) || !is_lower_unipotent(h2) {
        return Err(Error::InvalidInput("h₁, h₂ must be lower unipotent".into()));
    }
    let fam = SkewFamily::Unipotent { norm: norm.clone() };
    let alpha = limit_ratio_alpha(&fam, &g1.inverse()?, g2, schedule)?.estimate;
    let alpha_translated =
        limit_ratio_alpha(&fam, &(h1 * g1).inverse()?, &(h2 * g2), schedule)?.estimate;
    let ratio = alpha_translated / alpha;
    Ok(AlphaInvarianceReport {
        alpha,
        alpha_translated,
        ratio,
        deviation: (ratio - 1.0).abs(),
    })
}

/// {t ≥ 0 : u₁²eᵗ + u₂²e⁻ᵗ ≤ c}.
fn radius_sublevel(u1: f64, u2: f64, c: f64) -> Option<(f64, f64)> {
    let (a, b) = (u1 * u1, u2 * u2);
    let (x_lo, x_hi) = if a == 0.0 {
        (b / c, f64::INFINITY)
    } else {
        let disc = c * c - 4.0 * a * b;
        if disc < 0.0 {
            return None;
        }
        let s = disc.sqrt();
        // stable roots of a x² − c x + b
        let x_hi = (c + s) / (2.0 * a);
        (if x_hi > 0.0 { b / (a * x_hi) } else { 0.0 }, x_hi)
    };
    if x_hi < 1.0 {
        return None;
    }
    Some((x_lo.max(1.0).ln(), x_hi.ln()))
}

/// t-intervals on which ρ_min ≤ |u·a_t| ≤ ρ_max.
fn radial_t_intervals(u: [f64; 2], r_min: f64, r_max: f64) -> Vec<(f64, f64)> {
    let Some((lo, hi)) = radius_sublevel(u[0], u[1], r_max * r_max) else {
        return Vec::new();
    };
    match radius_sublevel(u[0], u[1], r_min * r_min) {
        None => vec![(lo, hi)],
        Some((a, b)) => {
            let mut out = Vec::new();
            if a > lo {
                out.push((lo, a.min(hi)));
            }
            if b < hi {
                out.push((b.max(lo), hi));
            }
            out
        }
    }
}

fn intersect(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &(p, q) in a {
        for &(r, s) in b {
            let (lo, hi) = (p.max(r), q.min(s));
            if hi > lo {
                out.push((lo, hi));
            }
        }
    }
    out
}

/// S̃_{φ,v}(T) = ∫_{G_T} φ(v·g) dm(g) on SL(2,ℝ), m of unit SL(2,ℤ)-covolume, by Monte
/// Carlo over K × K with the Cartan coordinate t integrated by quadrature.
pub fn g_orbit_integral(
    phi: &TestFunction,
    v: &[f64],
    norm: &NormSpec,
    t: f64,
    samples: usize,
    seed: u64,
) -> Result<VolumeEstimate> {
    let method = Method::MonteCarlo { samples, seed };
    if v.len() != 2 {
        return Err(Error::UnsupportedGroup(format!("SL({}, ℝ)", v.len())));
    }
    let v = vec2(v)?;
    norm.validate()?;
    if norm.dim() != 2 {
        return Err(Error::DimMismatch {
            expected: 2,
            got: norm.dim(),
        });
    }
    phi.validate()?;
    if samples < 2 {
        return Err(Error::InvalidInput(
            "Monte Carlo needs at least two samples".into(),
        ));
    }
    if *phi == TestFunction::Zero || t <= 0.0 {
        return Ok(VolumeEstimate {
            value: 0.0,
            stderr: 0.0,
            method,
        });
    }
    let (r_min, r_max) = match phi.radial_support() {
        Some(s) => s,
        None => return Err(Error::SupportEscapesDomain),
    };
    // ‖g‖ ≥ c_F‖g‖_F ≥ c_F e^{t/2}
    let t_cap = 2.0 * (t / norm.frobenius_lower()).ln().max(0.0);
    let vals: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            use rand::Rng;
            let mut rng = substream(seed, i as u64);
            let (th1, th2): (f64, f64) = (TAU * rng.random::<f64>(), TAU * rng.random::<f64>());
            let k1 = RealMatrix::rotation2(th1);
            let k2 = RealMatrix::rotation2(th2);
            let u = k1.left_apply(&v);
            let g = |s: f64| {
                let a = RealMatrix::diag(&[(0.5 * s).exp(), (-0.5 * s).exp()]);
                &(&k1 * &a) * &k2
            };
            let ball = sublevel_intervals(|s| norm.eval_slice(g(s).data()), 0.0, t_cap, t, 64);
            let parts = intersect(&ball, &radial_t_intervals([u[0], u[1]], r_min, r_max));
            let inner: f64 = parts
                .iter()
                .map(|&(a, b)| {
                    integrate(
                        |s| phi.value(&g(s).left_apply(&v)) * s.sinh(),
                        a,
                        b,
                        0.0,
                        1e-9,
                        400,
                    )
                    .value
                })
                .sum();
            CARTAN_TO_UNIT_COVOLUME * inner
        })
        .collect();
    let n = samples as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(VolumeEstimate {
        value: mean,
        stderr: (var / n).sqrt(),
        method,
    })
}

/// S̃_{φ,v}(T) through the fibration g = σ(v)⁻¹ u_s σ(w):
/// (6/π²) ∫ φ(w) λ({s : ‖σ(v)⁻¹ u_s σ(w)‖ < T}) dw, deterministic.
pub fn g_orbit_integral_fibered(
    phi: &TestFunction,
    v: &[f64],
    norm: &NormSpec,
    t: f64,
) -> Result<f64> {
    let g1 = section(v, Chart::for_vector(v))?.inverse()?;
    norm.validate()?;
    let f = |w: &[f64]| {
        let g2 = section(w, Chart::for_vector(w))?;
        unipotent_skewball_volume(&g1, &g2, norm, t)
    };
    Ok(FIBERED_TO_UNIT_COVOLUME * polar_integral(phi, &f)?.unwrap_or(0.0))
}

/// Empirical against predicted series along a schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquidistReport {
    pub schedule: Vec<f64>,
    pub empirical: Vec<f64>,
    pub predicted: Vec<f64>,
    pub relative_errors: Vec<f64>,
    /// Number of consecutive steps on which the relative error does not increase.
    pub nonincreasing_steps: usize,
    pub monotone: bool,
}

pub fn equidist_compare(
    schedule: &[f64],
    empirical: &[f64],
    predicted: &[f64],
) -> Result<EquidistReport> {
    if empirical.len() != schedule.len() {
        return Err(Error::LengthMismatch(schedule.len(), empirical.len()));
    }
    if predicted.len() != schedule.len() {
        return Err(Error::LengthMismatch(schedule.len(), predicted.len()));
    }
    let relative_errors: Vec<f64> = empirical
        .iter()
        .zip(predicted)
        .map(|(e, p)| (e / p - 1.0).abs())
        .collect();
    let nonincreasing_steps = relative_errors.windows(2).filter(|w| w[1] <= w[0]).count();
    Ok(EquidistReport {
        schedule: schedule.to_vec(),
        empirical: empirical.to_vec(),
        predicted: predicted.to_vec(),
        monotone: nonincreasing_steps + 1 >= relative_errors.len(),
        relative_errors,
        nonincreasing_steps,
    })
}

impl EquidistReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }

    /// Two columns: `T,relative_error`.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        let io = |e: std::io::Error| Error::Io(e.to_string());
        writeln!(w, "T,relative_error").map_err(io)?;
        for (t, e) in self.schedule.iter().zip(&self.relative_errors) {
            writeln!(w, "{t},{e}").map_err(io)?;
        }
        Ok(())
    }
}
