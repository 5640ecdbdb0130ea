use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::haar::{haar_volume, Method, SkewBallSpec};
use crate::error::{Error, Result};
use crate::matgroup::{NormSpec, RealMatrix};
use crate::numeric::{bisect, golden_min, integrate, sublevel_intervals};
use crate::rootsys::GroupSpec;

fn check_dim(g: &RealMatrix, n: usize) -> Result<()> {
    if g.dim() != n {
        return Err(Error::DimMismatch {
            expected: n,
            got: g.dim(),
        });
    }
    Ok(())
}

/// Length of {t : ‖a + t b‖ < T} for a = g₁g₂ and b = g₁E₂₁g₂, i.e. the
/// Haar measure of the skew ball of the lower unipotent subgroup of SL(2,ℝ).
pub fn unipotent_skewball_volume(
    g1: &RealMatrix,
    g2: &RealMatrix,
    norm: &NormSpec,
    t: f64,
) -> Result<f64> {
    norm.validate()?;
    check_dim(g1, 2)?;
    check_dim(g2, 2)?;
    if norm.dim() != 2 {
        return Err(Error::DimMismatch {
            expected: 2,
            got: norm.dim(),
        });
    }
    let a = g1 * g2;
    let b = &(g1 * &RealMatrix::unit(2, 1, 0)) * g2;
    let nb = norm.eval_slice(b.data());
    if !(nb > 0.0) {
        return Err(Error::DegenerateDirection);
    }
    let f = |s: f64| {
        let m: Vec<f64> = a
            .data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| x + s * y)
            .collect();
        norm.eval_slice(&m)
    };
    let na = norm.eval_slice(a.data());
    let r = 2.0 * na / nb + 1.0;
    let (s0, f0) = golden_min(f, -r, r, 1e-14);
    if f0 >= t {
        return Ok(0.0);
    }
    let reach = (t + na) / nb + r;
    let hi = bisect(|s| f(s) - t, s0, s0 + reach, 200);
    let lo = bisect(|s| f(s) - t, s0 - reach, s0, 200);
    Ok(hi - lo)
}

/// The profile f_c(t) = e^t √(c² cos² t + sin² t) of the spiral subgroup.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpiralProfile {
    pub c: f64,
}

impl SpiralProfile {
    /// Validates c > 1 and strict monotonicity of f_c via d/dt ln f_c > 0 on a period.
    pub fn new(c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 1.0) {
            return Err(Error::InvalidInput(format!(
                "spiral parameter must exceed 1, got {c}"
            )));
        }
        let c2 = c * c;
        let n = 20_000;
        for i in 0..=n {
            let s = PI * i as f64 / n as f64;
            let (sn, cs) = s.sin_cos();
            let d = 1.0 + (1.0 - c2) * sn * cs / (c2 * cs * cs + sn * sn);
            if !(d > 0.0) {
                return Err(Error::NonMonotoneProfile(c));
            }
        }
        Ok(Self { c })
    }

    pub fn f(&self, t: f64) -> f64 {
        let (s, c) = t.sin_cos();
        t.exp() * (self.c * self.c * c * c + s * s).sqrt()
    }

    /// f_c⁻¹(x) for x > 0.
    pub fn inverse(&self, x: f64) -> f64 {
        // e^t ≤ f_c(t) ≤ c e^t brackets the root
        let (lo, hi) = (x.ln() - self.c.ln() - 1e-9, x.ln() + 1e-9);
        bisect(|t| self.f(t) - x, lo, hi, 200)
    }
}

/// h(x, y, t) in the spiral subgroup H ⊂ SL(3,ℝ).
pub fn spiral_h_element(x: f64, y: f64, t: f64) -> RealMatrix {
    let (s, c) = t.sin_cos();
    let e = t.exp();
    RealMatrix::from_rows([
        [e * c, -e * s, x],
        [e * s, e * c, y],
        [0.0, 0.0, (-2.0 * t).exp()],
    ])
}

/// The spiral norm with the parameter matching f_c.
pub fn spiral_norm(c: f64) -> NormSpec {
    NormSpec::spiral(c * c)
}

/// λ(H_T) = (π/2) T² (e^{2τ} − 1/T) with τ = f_c⁻¹(T), for the left Haar measure e^{2t} dx dy dt.
pub fn spiral_h_volume(c: f64, t: f64) -> Result<f64> {
    let p = SpiralProfile::new(c)?;
    if t <= 1.0 {
        return Ok(0.0);
    }
    let tau = p.inverse(t);
    Ok((0.5 * PI * t * t * ((2.0 * tau).exp() - 1.0 / t)).max(0.0))
}

pub fn spiral_t_n(c: f64, n: u32) -> f64 {
    c * (TAU * n as f64).exp()
}

pub fn spiral_s_n(c: f64, n: u32) -> f64 {
    SpiralProfile { c }.f((2.0 * n as f64 + 0.5) * PI)
}

const POLAR_ANGLES: usize = 256;

/// λ({h ∈ H : ‖g₁ h g₂‖ < T}) for the spiral subgroup, by direct integration:
/// the t-support from the partial minimum over (x, y), the convex (x, y)-slice
/// area in polar coordinates, and adaptive quadrature in t against e^{2t}.
pub fn spiral_skew_volume(c: f64, g1: &RealMatrix, g2: &RealMatrix, t: f64) -> Result<f64> {
    SpiralProfile::new(c)?;
    check_dim(g1, 3)?;
    check_dim(g2, 3)?;
    if t <= 1.0 {
        return Ok(0.0);
    }
    let norm = spiral_norm(c);
    let s = g1.sigma_min_lower()? * g2.sigma_min_lower()? * norm.frobenius_lower();
    // ‖h‖_F ≥ max(√2 e^t, e^{−2t}, r)
    let l = t / s;
    let (t_lo, t_hi) = (-0.5 * l.ln(), (l / 2f64.sqrt()).ln());
    if !(t_hi > t_lo) {
        return Ok(0.0);
    }
    let bx = &(g1 * &RealMatrix::unit(3, 0, 2)) * g2;
    let by = &(g1 * &RealMatrix::unit(3, 1, 2)) * g2;
    let slice = Slice {
        norm: &norm,
        g1,
        g2,
        bx: bx.data(),
        by: by.data(),
        s,
    };
    let samples = (((t_hi - t_lo) / PI).ceil() as usize * 256).max(1024);
    let support = sublevel_intervals(|u| slice.minimum(u).2, t_lo, t_hi, t, samples);
    let parts: Vec<f64> = support
        .par_iter()
        .map(|&(a, b)| {
            integrate(|u| (2.0 * u).exp() * slice.area(u, t), a, b, 0.0, 1e-9, 400).value
        })
        .collect();
    Ok(parts.iter().sum())
}

struct Slice<'a> {
    norm: &'a NormSpec,
    g1: &'a RealMatrix,
    g2: &'a RealMatrix,
    bx: &'a [f64],
    by: &'a [f64],
    s: f64,
}

impl Slice<'_> {
    fn base(&self, u: f64) -> RealMatrix {
        &(self.g1 * &spiral_h_element(0.0, 0.0, u)) * self.g2
    }

    fn eval(&self, a: &[f64], x: f64, y: f64) -> f64 {
        let mut m = [0.0; 9];
        for k in 0..9 {
            m[k] = a[k] + x * self.bx[k] + y * self.by[k];
        }
        self.norm.eval_slice(&m)
    }

    /// (x*, y*, min) of the convex function (x, y) ↦ ‖g₁ h(x, y, u) g₂‖.
    fn minimum(&self, u: f64) -> (f64, f64, f64) {
        let a = self.base(u);
        let a = a.data();
        let r = 2.0 * self.norm.eval_slice(a) / self.s + 1.0;
        let inner = |x: f64| golden_min(|y| self.eval(a, x, y), -r, r, 1e-12);
        let (x, _) = golden_min(|x| inner(x).1, -r, r, 1e-12);
        let (y, v) = inner(x);
        (x, y, v)
    }

    /// Area of {(x, y) : ‖g₁ h(x, y, u) g₂‖ < T}.
    fn area(&self, u: f64, t: f64) -> f64 {
        let (x0, y0, v) = self.minimum(u);
        if v >= t {
            return 0.0;
        }
        let a = self.base(u);
        let a = a.data();
        let reach = (t + self.norm.eval_slice(a)) / self.s + x0.hypot(y0) + 1.0;
        let sum: f64 = (0..POLAR_ANGLES)
            .map(|k| {
                let (sn, cs) = (TAU * k as f64 / POLAR_ANGLES as f64).sin_cos();
                let rho = bisect(
                    |r| self.eval(a, x0 + r * cs, y0 + r * sn) - t,
                    0.0,
                    reach,
                    100,
                );
                rho * rho
            })
            .sum();
        0.5 * sum * TAU / POLAR_ANGLES as f64
    }
}

/// Families of subgroups H with a skew-ball volume λ(H_T[g₁, g₂]).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SkewFamily {
    /// Lower unipotent subgroup of SL(2,ℝ).
    Unipotent { norm: NormSpec },
    /// The spiral subgroup of SL(3,ℝ) with the norm matched to f_c.
    Spiral { c: f64 },
    /// A semisimple group H with Haar measure from the Cartan decomposition.
    Semisimple {
        group: GroupSpec,
        norm: NormSpec,
        method: Method,
    },
}

impl SkewFamily {
    pub fn dim(&self) -> usize {
        match self {
            Self::Unipotent { .. } => 2,
            Self::Spiral { .. } => 3,
            Self::Semisimple { group, .. } => group.rep_dim(),
        }
    }

    pub fn skew_volume(&self, g1: &RealMatrix, g2: &RealMatrix, t: f64) -> Result<f64> {
        match self {
            Self::Unipotent { norm } => unipotent_skewball_volume(g1, g2, norm, t),
            Self::Spiral { c } => spiral_skew_volume(*c, g1, g2, t),
            Self::Semisimple {
                group,
                norm,
                method,
            } => {
                let spec = SkewBallSpec {
                    group: *group,
                    g1: g1.clone(),
                    g2: g2.clone(),
                    norm: norm.clone(),
                    t,
                };
                Ok(haar_volume(&spec, *method)?.value)
            }
        }
    }

    /// λ(H_T), using the closed form where one exists.
    pub fn volume(&self, t: f64) -> Result<f64> {
        match self {
            Self::Spiral { c } => spiral_h_volume(*c, t),
            _ => {
                let id = RealMatrix::identity(self.dim());
                self.skew_volume(&id, &id, t)
            }
        }
    }
}

/// Ratios λ(H_T[g₁,g₂])/λ(H_T) along a schedule with an extrapolated limit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaEstimate {
    pub schedule: Vec<f64>,
    pub ratios: Vec<f64>,
    pub estimate: f64,
    /// Largest pairwise deviation among the tail ratios (last half of the schedule).
    pub stability: f64,
    /// Fitted decay exponent of ratio(T) = α + a T^{−κ}, if the tail is monotone and contracting.
    pub kappa: Option<f64>,
}

/// Fits ratio(T) = α + a T^{−κ} through the last three points.
pub fn richardson(ts: &[f64], rs: &[f64]) -> (f64, Option<f64>) {
    let n = rs.len();
    let last = *rs.last().unwrap_or(&f64::NAN);
    if n < 3 {
        return (last, None);
    }
    let (t1, t2, t3) = (ts[n - 3], ts[n - 2], ts[n - 1]);
    let (r1, r2, r3) = (rs[n - 3], rs[n - 2], rs[n - 1]);
    let (d1, d2) = (r2 - r1, r3 - r2);
    if d1 == 0.0 || d2 == 0.0 {
        return (last, None);
    }
    let q = d2 / d1;
    if !(q > 0.0 && t1 < t2 && t2 < t3) {
        return (last, None);
    }
    let model = |k: f64| {
        let x = |t: f64| t.powf(-k);
        (x(t3) - x(t2)) / (x(t2) - x(t1))
    };
    // model(k) decreases from its k → 0 limit towards 0
    let q0 = (t3 / t2).ln() / (t2 / t1).ln();
    if !(q < q0) {
        return (last, None);
    }
    let mut hi = 1.0;
    while model(hi) > q && hi < 1e3 {
        hi *= 2.0;
    }
    let k = bisect(|k| model(k) - q, 1e-9, hi, 200);
    let a = d2 / (t3.powf(-k) - t2.powf(-k));
    (r3 - a * t3.powf(-k), Some(k))
}

pub fn limit_ratio_alpha(
    fam: &SkewFamily,
    g1: &RealMatrix,
    g2: &RealMatrix,
    schedule: &[f64],
) -> Result<AlphaEstimate> {
    if schedule.is_empty() {
        return Err(Error::InvalidInput("empty schedule".into()));
    }
    let ratios: Vec<f64> = schedule
        .iter()
        .map(|&t| Ok(fam.skew_volume(g1, g2, t)? / fam.volume(t)?))
        .collect::<Result<_>>()?;
    let (estimate, kappa) = richardson(schedule, &ratios);
    let tail = &ratios[ratios.len() - ratios.len().div_ceil(2).max(1)..];
    let stability = tail
        .iter()
        .flat_map(|a| tail.iter().map(move |b| (a - b).abs()))
        .fold(0.0, f64::max);
    Ok(AlphaEstimate {
        schedule: schedule.to_vec(),
        ratios,
        estimate,
        stability,
        kappa,
    })
}
