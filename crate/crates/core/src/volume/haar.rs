use std::f64::consts::TAU;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::xi::ExpPoly;
use crate::error::{Error, Result};
use crate::matgroup::{NormSpec, RealMatrix};
use crate::numeric::{gauss_legendre, integrate, sublevel_intervals, substream};
use crate::rootsys::{to_f64, ChamberCoords, CompactKind, GroupSpec};

/// Grid cells used to locate the boundary of a radial slice.
const SLICE_SAMPLES: usize = 64;
/// Monte Carlo draws per random substream.
const MC_CHUNK: usize = 64;

/// How a volume was (or should be) computed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Method {
    /// Product rule on K × K with `k_nodes` points per circle factor
    /// (deterministic; the chamber integral is adaptive).
    Quadrature {
        k_nodes: usize,
    },
    MonteCarlo {
        samples: usize,
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub value: f64,
    /// Zero for deterministic quadrature.
    pub stderr: f64,
    pub method: Method,
}

/// H_T[g₁, g₂] = {h ∈ H : D(g₁ h g₂) < T}; g₁, g₂ act in the representation space.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewBallSpec {
    pub group: GroupSpec,
    pub g1: RealMatrix,
    pub g2: RealMatrix,
    pub norm: NormSpec,
    pub t: f64,
}

impl SkewBallSpec {
    pub fn ball(group: GroupSpec, norm: NormSpec, t: f64) -> Self {
        let n = group.rep_dim();
        Self {
            group,
            g1: RealMatrix::identity(n),
            g2: RealMatrix::identity(n),
            norm,
            t,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.group.validate()?;
        self.norm.validate()?;
        let n = self.group.rep_dim();
        for d in [self.g1.dim(), self.g2.dim(), self.norm.dim()] {
            if d != n {
                return Err(Error::DimMismatch {
                    expected: n,
                    got: d,
                });
            }
        }
        if self.g1.det().abs() < 1e-300 || self.g2.det().abs() < 1e-300 {
            return Err(Error::InvalidInput("g₁ and g₂ must be invertible".into()));
        }
        if !self.t.is_finite() {
            return Err(Error::InvalidInput("threshold must be finite".into()));
        }
        Ok(())
    }
}

/// Restricts one chamber coordinate t_coord ≤ max (natural β order).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChamberWindow {
    pub coord: usize,
    pub max: f64,
}

/// Volume of H_T together with the part inside a chamber window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WindowedVolume {
    pub full: VolumeEstimate,
    pub windowed: VolumeEstimate,
    pub fraction: f64,
    pub fraction_stderr: f64,
}

/// Integrates ξ over {t ∈ a⁺ : ‖·‖ < T} for a given norm evaluator.
pub(crate) struct Chamber {
    pub cc: ChamberCoords,
    pub xi: ExpPoly,
    /// λ₁(β_i) as floats.
    pub vals: Vec<f64>,
    /// The radial coordinate: the argmin of λ₁(β_i).
    pub inner: usize,
    pub t: f64,
}

impl Chamber {
    pub fn new(gs: &GroupSpec, t: f64) -> Result<Self> {
        let cc = ChamberCoords::new(gs)?;
        let xi = ExpPoly::xi(&cc);
        let vals = cc.exps.values.iter().map(to_f64).collect();
        let inner = cc.exps.order[0];
        Ok(Self {
            cc,
            xi,
            vals,
            inner,
            t,
        })
    }

    pub fn rank(&self) -> usize {
        self.cc.rank
    }

    /// Upper bound for coordinate i given λ₁(t) < l.
    pub fn coord_max(&self, i: usize, l: f64) -> f64 {
        (l / self.vals[i]).max(0.0)
    }

    /// ∫ ξ along the inner coordinate at the outer point `t` (t_inner ignored).
    pub fn slice(&self, eval: &dyn Fn(&[f64]) -> f64, t: &[f64], l: f64, clip: Option<f64>) -> f64 {
        let mut p = t.to_vec();
        p[self.inner] = 0.0;
        let used: f64 = (0..self.rank())
            .filter(|&i| i != self.inner)
            .map(|i| self.vals[i] * p[i])
            .sum();
        let hi = (l - used) / self.vals[self.inner];
        if hi <= 0.0 {
            return 0.0;
        }
        let mut q = p.clone();
        let ivs = sublevel_intervals(
            |s| {
                q[self.inner] = s;
                eval(&q)
            },
            0.0,
            hi,
            self.t,
            SLICE_SAMPLES,
        );
        ivs.iter()
            .map(|&(u, v)| {
                let v = clip.map_or(v, |c| v.min(c));
                self.xi.integrate_along(&p, self.inner, u, v)
            })
            .sum()
    }

    /// Returns (full, windowed) chamber integrals for rank ≤ 2.
    pub fn integrate(
        &self,
        eval: &(dyn Fn(&[f64]) -> f64 + Sync),
        l: f64,
        window: Option<ChamberWindow>,
        rel_tol: f64,
    ) -> Result<(f64, f64)> {
        let r = self.rank();
        if l <= 0.0 {
            return Ok((0.0, 0.0));
        }
        let clip_inner = window.filter(|w| w.coord == self.inner).map(|w| w.max);
        match r {
            1 => {
                let full = self.slice(eval, &[0.0], l, None);
                let win = if window.is_some() {
                    self.slice(eval, &[0.0], l, clip_inner)
                } else {
                    full
                };
                Ok((full, win))
            }
            2 => {
                let j = 1 - self.inner;
                let top = self.coord_max(j, l);
                let f = |x: f64, clip: Option<f64>| {
                    let mut t = [0.0; 2];
                    t[j] = x;
                    self.slice(eval, &t, l, clip)
                };
                let q = |a: f64, b: f64, clip: Option<f64>| {
                    integrate(|x| f(x, clip), a, b, 0.0, rel_tol, 2000).value
                };
                match window {
                    None => {
                        let v = q(0.0, top, None);
                        Ok((v, v))
                    }
                    Some(w) if w.coord == j => {
                        let m = w.max.clamp(0.0, top);
                        let a = q(0.0, m, None);
                        let b = q(m, top, None);
                        Ok((a + b, a))
                    }
                    Some(_) => Ok((q(0.0, top, None), q(0.0, top, clip_inner))),
                }
            }
            _ => Err(Error::InvalidInput(format!(
                "deterministic chamber integration supports rank ≤ 2, got {r}"
            ))),
        }
    }

    /// Stratified Monte Carlo over the outer coordinates (any rank ≥ 2).
    pub fn integrate_mc(
        &self,
        eval: &(dyn Fn(&[f64]) -> f64 + Sync),
        l: f64,
        samples: usize,
        seed: u64,
    ) -> (f64, f64) {
        let r = self.rank();
        if l <= 0.0 || samples == 0 {
            return (0.0, 0.0);
        }
        let outer: Vec<usize> = (0..r).filter(|&i| i != self.inner).collect();
        let tops: Vec<f64> = outer.iter().map(|&i| self.coord_max(i, l)).collect();
        let box_vol: f64 = tops.iter().product();
        let chunks = samples.div_ceil(MC_CHUNK);
        let parts: Vec<(f64, f64)> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = substream(seed, c as u64);
                let mut s = (0.0, 0.0);
                for k in c * MC_CHUNK..((c + 1) * MC_CHUNK).min(samples) {
                    let mut t = vec![0.0; r];
                    for (n, (&i, &top)) in outer.iter().zip(&tops).enumerate() {
                        let u: f64 = rng.random();
                        // stratify the first outer coordinate
                        t[i] = if n == 0 {
                            (k as f64 + u) / samples as f64 * top
                        } else {
                            u * top
                        };
                    }
                    let v = box_vol * self.slice(eval, &t, l, None);
                    s.0 += v;
                    s.1 += v * v;
                }
                s
            })
            .collect();
        let (sum, sq) = parts.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
        let n = samples as f64;
        let mean = sum / n;
        let var = (sq / n - mean * mean).max(0.0);
        (mean, (var / n).sqrt())
    }

    /// ‖diag Ψ(exp Y)‖ evaluator.
    pub fn diag_eval<'a>(&'a self, norm: &'a NormSpec) -> impl Fn(&[f64]) -> f64 + Sync + 'a {
        let n = self.cc.dim();
        move |t: &[f64]| {
            let mut d = vec![0.0; n];
            self.cc.rep_diag_t(t, &mut d);
            let mut m = vec![0.0; n * n];
            for i in 0..n {
                m[i * n + i] = d[i];
            }
            norm.eval_slice(&m)
        }
    }

    /// ‖A · diag Ψ(exp Y) · B‖ evaluator.
    pub fn sandwich_eval<'a>(
        &'a self,
        norm: &'a NormSpec,
        a: &'a RealMatrix,
        b: &'a RealMatrix,
    ) -> impl Fn(&[f64]) -> f64 + Sync + 'a {
        let n = self.cc.dim();
        move |t: &[f64]| {
            let mut d = vec![0.0; n];
            self.cc.rep_diag_t(t, &mut d);
            let (ad, bd) = (a.data(), b.data());
            let mut m = vec![0.0; n * n];
            for i in 0..n {
                for k in 0..n {
                    let x = ad[i * n + k] * d[k];
                    if x == 0.0 {
                        continue;
                    }
                    for j in 0..n {
                        m[i * n + j] += x * bd[k * n + j];
                    }
                }
            }
            norm.eval_slice(&m)
        }
    }
}

/// log of the largest admissible diagonal entry: λ₁(Y) < L on the ball.
pub(crate) fn log_bound(norm: &NormSpec, g1: &RealMatrix, g2: &RealMatrix, t: f64) -> Result<f64> {
    let s = g1.sigma_min_lower()? * g2.sigma_min_lower()?;
    Ok((t / (norm.frobenius_lower() * s)).ln())
}

fn check_norm(gs: &GroupSpec, norm: &NormSpec) -> Result<()> {
    gs.validate()?;
    norm.validate()?;
    if norm.dim() != gs.rep_dim() {
        return Err(Error::DimMismatch {
            expected: gs.rep_dim(),
            got: norm.dim(),
        });
    }
    Ok(())
}

const CHAMBER_REL_TOL: f64 = 1e-10;
const CHAMBER_MC_SAMPLES: usize = 20_000;
/// Per-node tolerance when K is integrated; the K rule dominates the error.
const K_NODE_REL_TOL: f64 = 1e-7;

/// ∫_{a⁺(T)} ξ(Y) dY with a⁺(T) = {Y ∈ a⁺ : ‖Ψ(exp Y)‖ < T}.
///
/// Adaptive quadrature for rank ≤ 2, stratified Monte Carlo (fixed seed 0)
/// above that.
pub fn chamber_sector_volume(gs: &GroupSpec, norm: &NormSpec, t: f64) -> Result<VolumeEstimate> {
    chamber_sector_volume_with(gs, norm, t, CHAMBER_MC_SAMPLES, 0)
}

pub fn chamber_sector_volume_with(
    gs: &GroupSpec,
    norm: &NormSpec,
    t: f64,
    mc_samples: usize,
    seed: u64,
) -> Result<VolumeEstimate> {
    check_norm(gs, norm)?;
    let ch = Chamber::new(gs, t)?;
    let quad = Method::Quadrature { k_nodes: 1 };
    if t <= 1.0 {
        return Ok(VolumeEstimate {
            value: 0.0,
            stderr: 0.0,
            method: quad,
        });
    }
    let l = (t / norm.frobenius_lower()).ln();
    let eval = ch.diag_eval(norm);
    if ch.rank() <= 2 {
        let (v, _) = ch.integrate(&eval, l, None, CHAMBER_REL_TOL)?;
        Ok(VolumeEstimate {
            value: v,
            stderr: 0.0,
            method: quad,
        })
    } else {
        let (v, e) = ch.integrate_mc(&eval, l, mc_samples, seed);
        Ok(VolumeEstimate {
            value: v,
            stderr: e,
            method: Method::MonteCarlo {
                samples: mc_samples,
                seed,
            },
        })
    }
}

/// Parameters of the identity of K.
fn k_identity(kind: CompactKind) -> Vec<f64> {
    match kind {
        CompactKind::So2 => vec![0.0],
        CompactKind::So2xSo2 => vec![0.0, 0.0],
        CompactKind::So3 => vec![1.0, 0.0, 0.0, 0.0],
        CompactKind::Unsupported => Vec::new(),
    }
}

/// Deterministic product rule on K: (parameters, weight) with weights summing to 1.
pub fn k_rule(gs: &GroupSpec, n: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    let n = n.max(1);
    let circle: Vec<f64> = (0..n).map(|j| TAU * j as f64 / n as f64).collect();
    let w = 1.0 / n as f64;
    Ok(match gs.compact_kind() {
        CompactKind::So2 => circle.iter().map(|&a| (vec![a], w)).collect(),
        CompactKind::So2xSo2 => circle
            .iter()
            .flat_map(|&a| circle.iter().map(move |&b| (vec![a, b], w * w)))
            .collect(),
        CompactKind::So3 => {
            // ZYZ Euler angles: trapezoid in α, γ and Gauss–Legendre in cos β
            let (xs, ws) = gauss_legendre(n);
            let mut out = Vec::with_capacity(n * n * n);
            for &a in &circle {
                for (x, wb) in xs.iter().zip(&ws) {
                    let b = x.acos();
                    for &g in &circle {
                        out.push((euler_zyz_quaternion(a, b, g), w * w * wb / 2.0));
                    }
                }
            }
            out
        }
        CompactKind::Unsupported => return Err(Error::UnsupportedCompactGroup(gs.name())),
    })
}

fn quat_mul(p: [f64; 4], q: [f64; 4]) -> [f64; 4] {
    [
        p[0] * q[0] - p[1] * q[1] - p[2] * q[2] - p[3] * q[3],
        p[0] * q[1] + p[1] * q[0] + p[2] * q[3] - p[3] * q[2],
        p[0] * q[2] - p[1] * q[3] + p[2] * q[0] + p[3] * q[1],
        p[0] * q[3] + p[1] * q[2] - p[2] * q[1] + p[3] * q[0],
    ]
}

fn euler_zyz_quaternion(a: f64, b: f64, g: f64) -> Vec<f64> {
    let z = |t: f64| [(t / 2.0).cos(), 0.0, 0.0, (t / 2.0).sin()];
    let y = |t: f64| [(t / 2.0).cos(), 0.0, (t / 2.0).sin(), 0.0];
    quat_mul(quat_mul(z(a), y(b)), z(g)).to_vec()
}

fn is_orthogonal(g: &RealMatrix) -> bool {
    (&g.transpose() * g).max_abs_diff(&RealMatrix::identity(g.dim())) < 1e-12
}

/// Per-node chamber integrals (full, windowed) over a list of (k₁, k₂) pairs.
fn node_values(
    spec: &SkewBallSpec,
    ch: &Chamber,
    l: f64,
    pairs: &[(Vec<f64>, Vec<f64>)],
    window: Option<ChamberWindow>,
    rel_tol: f64,
) -> Result<Vec<(f64, f64)>> {
    pairs
        .par_iter()
        .map(|(p1, p2)| {
            let a = &spec.g1 * &spec.group.compact_element(p1)?;
            let b = &spec.group.compact_element(p2)? * &spec.g2;
            let eval = ch.sandwich_eval(&spec.norm, &a, &b);
            ch.integrate(&eval, l, window, rel_tol)
        })
        .collect()
}

fn haar_core(
    spec: &SkewBallSpec,
    method: Method,
    window: Option<ChamberWindow>,
) -> Result<WindowedVolume> {
    spec.validate()?;
    let kind = spec.group.compact_kind();
    if kind == CompactKind::Unsupported {
        return Err(Error::UnsupportedCompactGroup(spec.group.name()));
    }
    if let Some(w) = window {
        if w.coord >= spec.group.rank() {
            return Err(Error::InvalidInput(format!(
                "window coordinate {} out of range",
                w.coord
            )));
        }
    }
    let zero = VolumeEstimate {
        value: 0.0,
        stderr: 0.0,
        method,
    };
    let empty = WindowedVolume {
        full: zero,
        windowed: zero,
        fraction: 0.0,
        fraction_stderr: 0.0,
    };
    if spec.t <= 1.0 {
        return Ok(empty);
    }
    let ch = Chamber::new(&spec.group, spec.t)?;
    let l = log_bound(&spec.norm, &spec.g1, &spec.g2, spec.t)?;
    if l <= 0.0 {
        return Ok(empty);
    }
    let invariant =
        spec.norm.is_orthogonally_invariant() && is_orthogonal(&spec.g1) && is_orthogonal(&spec.g2);
    let (weights, vals): (Vec<f64>, Vec<(f64, f64)>) = if invariant {
        let id = k_identity(kind);
        (
            vec![1.0],
            node_values(spec, &ch, l, &[(id.clone(), id)], window, CHAMBER_REL_TOL)?,
        )
    } else {
        match method {
            Method::Quadrature { k_nodes } => {
                let rule = k_rule(&spec.group, k_nodes)?;
                let mut pairs = Vec::with_capacity(rule.len() * rule.len());
                let mut w = Vec::with_capacity(rule.len() * rule.len());
                for (p1, w1) in &rule {
                    for (p2, w2) in &rule {
                        pairs.push((p1.clone(), p2.clone()));
                        w.push(w1 * w2);
                    }
                }
                (
                    w,
                    node_values(spec, &ch, l, &pairs, window, K_NODE_REL_TOL)?,
                )
            }
            Method::MonteCarlo { samples, seed } => {
                if samples == 0 {
                    return Err(Error::InvalidInput(
                        "Monte Carlo needs at least one sample".into(),
                    ));
                }
                let mut pairs = Vec::with_capacity(samples);
                for c in 0..samples.div_ceil(MC_CHUNK) {
                    let mut rng = substream(seed, c as u64);
                    for _ in c * MC_CHUNK..((c + 1) * MC_CHUNK).min(samples) {
                        let p1 = spec.group.sample_compact(&mut rng)?;
                        let p2 = spec.group.sample_compact(&mut rng)?;
                        pairs.push((p1, p2));
                    }
                }
                (
                    vec![1.0 / samples as f64; samples],
                    node_values(spec, &ch, l, &pairs, window, K_NODE_REL_TOL)?,
                )
            }
        }
    };
    let full: f64 = weights.iter().zip(&vals).map(|(w, v)| w * v.0).sum();
    let win: f64 = weights.iter().zip(&vals).map(|(w, v)| w * v.1).sum();
    let fraction = if full > 0.0 { win / full } else { 0.0 };
    let (se_full, se_win, se_frac) = match method {
        Method::MonteCarlo { samples, .. } if !invariant && samples > 1 => {
            let n = samples as f64;
            let sd = |f: &dyn Fn(&(f64, f64)) -> f64, mean: f64| {
                (vals.iter().map(|v| (f(v) - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
            };
            let se_frac = if full > 0.0 {
                sd(&|v| v.1 - fraction * v.0, 0.0) / full
            } else {
                0.0
            };
            (sd(&|v| v.0, full), sd(&|v| v.1, win), se_frac)
        }
        _ => (0.0, 0.0, 0.0),
    };
    Ok(WindowedVolume {
        full: VolumeEstimate {
            value: full,
            stderr: se_full,
            method,
        },
        windowed: VolumeEstimate {
            value: win,
            stderr: se_win,
            method,
        },
        fraction,
        fraction_stderr: se_frac,
    })
}

/// λ(H_T[g₁,g₂]) = ∫_K∫_K∫_{a⁺} 1{‖g₁k₁ exp(Y) k₂g₂‖ < T} ξ(Y) dY dk₁ dk₂.
///
/// dY is Lebesgue measure in chamber coordinates and dk is the probability
/// Haar measure. When the norm and both translates are orthogonally
/// invariant the K-integrals are skipped.
pub fn haar_volume(spec: &SkewBallSpec, method: Method) -> Result<VolumeEstimate> {
    Ok(haar_core(spec, method, None)?.full)
}

/// Volume of H_T and of its part with t_coord ≤ max, from the same K nodes.
pub fn haar_volume_windowed(
    spec: &SkewBallSpec,
    method: Method,
    window: ChamberWindow,
) -> Result<WindowedVolume> {
    haar_core(spec, method, Some(window))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sl2() -> GroupSpec {
        GroupSpec::SLn { n: 2 }
    }

    #[test]
    fn frobenius_closed_form() {
        for t in [2.0, 10.0, 100.0] {
            let v = chamber_sector_volume(&sl2(), &NormSpec::frobenius(2), t).unwrap();
            let want = t * t / 2.0 - 1.0;
            assert!(
                (v.value / want - 1.0).abs() < 1e-9,
                "T={t}: {} vs {want}",
                v.value
            );
            let spec = SkewBallSpec::ball(sl2(), NormSpec::frobenius(2), t);
            let h = haar_volume(&spec, Method::Quadrature { k_nodes: 8 }).unwrap();
            assert!((h.value / want - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn k_quadrature_reproduces_invariant_case() {
        // same norm as Frobenius but not flagged invariant, so K is integrated
        let norm = NormSpec::weighted(2, 2.0, vec![1.0; 4]);
        let spec = SkewBallSpec::ball(sl2(), norm, 10.0);
        let h = haar_volume(&spec, Method::Quadrature { k_nodes: 6 }).unwrap();
        assert!((h.value - 49.0).abs() < 1e-8, "{}", h.value);
    }

    #[test]
    fn empty_and_monotone() {
        let n = NormSpec::max_entry(2);
        assert_eq!(chamber_sector_volume(&sl2(), &n, 0.9).unwrap().value, 0.0);
        assert_eq!(chamber_sector_volume(&sl2(), &n, 1.0).unwrap().value, 0.0);
        let mut prev = 0.0;
        for t in [1.2, 2.0, 5.0, 30.0] {
            let v = chamber_sector_volume(&sl2(), &n, t).unwrap().value;
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn sopq_has_no_k() {
        let spec = SkewBallSpec::ball(GroupSpec::SOpq { p: 1, q: 2 }, NormSpec::frobenius(3), 5.0);
        assert!(matches!(
            haar_volume(&spec, Method::Quadrature { k_nodes: 4 }),
            Err(Error::UnsupportedCompactGroup(_))
        ));
        assert!(
            chamber_sector_volume(
                &GroupSpec::SOpq { p: 1, q: 2 },
                &NormSpec::frobenius(3),
                5.0
            )
            .unwrap()
            .value
                > 0.0
        );
    }

    #[test]
    fn tensor_slope_matches_exponent() {
        let gs = GroupSpec::SL2xSL2Tensor { l: 3 };
        let n = NormSpec::max_entry(6);
        let ts = [1e2, 1e3, 1e4];
        let vs: Vec<f64> = ts
            .iter()
            .map(|&t| chamber_sector_volume(&gs, &n, t).unwrap().value)
            .collect();
        let slope = crate::numeric::loglog_slope(&ts, &vs);
        assert!((slope / 2.0 - 1.0).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn so3_rule_integrates_haar() {
        // E|k₁₁|² = 1/3 under Haar measure on SO(3)
        let gs = GroupSpec::SLn { n: 3 };
        let rule = k_rule(&gs, 6).unwrap();
        let total: f64 = rule.iter().map(|r| r.1).sum();
        let m: f64 = rule
            .iter()
            .map(|(p, w)| w * gs.compact_element(p).unwrap().get(0, 0).powi(2))
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((m - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn mc_is_thread_independent() {
        let spec = SkewBallSpec::ball(sl2(), NormSpec::max_entry(2), 20.0);
        let m = Method::MonteCarlo {
            samples: 300,
            seed: 7,
        };
        let a = haar_volume(&spec, m).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| haar_volume(&spec, m).unwrap());
        assert_eq!(a, b);
        assert!(a.stderr > 0.0);
    }

    #[test]
    fn window_fraction_limits() {
        let gs = GroupSpec::SL2xSL2Tensor { l: 3 };
        let spec = SkewBallSpec::ball(gs, NormSpec::frobenius(6), 1e3);
        let m = Method::Quadrature { k_nodes: 1 };
        let w = haar_volume_windowed(&spec, m, ChamberWindow { coord: 1, max: 1e9 }).unwrap();
        assert!((w.fraction - 1.0).abs() < 1e-12);
        let w0 = haar_volume_windowed(&spec, m, ChamberWindow { coord: 1, max: 0.0 }).unwrap();
        assert_eq!(w0.fraction, 0.0);
        let w2 = haar_volume_windowed(&spec, m, ChamberWindow { coord: 1, max: 2.0 }).unwrap();
        assert!(w2.fraction > 0.1 && w2.fraction < 1.0);
    }
}
