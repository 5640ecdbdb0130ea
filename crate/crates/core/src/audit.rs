//! Numeric auditors for the counting hypotheses UC, I1, I2, D1 and D2.
//!
//! No auditor proves a universally quantified statement. `Pass` means no
//! violation was found on the sampled grid with the margins stated in the
//! report; `Fail` carries a witness that [`Witness::replay`] re-checks with a
//! single direct computation; `Inconclusive` explains why no verdict was
//! possible.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{fold_ball, LatticeSpec};
use crate::matgroup::{DistanceFunction, NormSpec, RealMatrix};
use crate::numeric::{bisect, loglog_slope, substream};
use crate::rootsys::GroupSpec;
use crate::volume::{
    chamber_sector_volume, haar_volume, limit_ratio_alpha, Method, SkewBallSpec, SkewFamily,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    Uc,
    I1,
    I2,
    D1,
    D2,
}

impl std::str::FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uc" => Ok(Self::Uc),
            "i1" => Ok(Self::I1),
            "i2" => Ok(Self::I2),
            "d1" => Ok(Self::D1),
            "d2" => Ok(Self::D2),
            other => Err(Error::InvalidInput(format!("unknown condition {other:?}"))),
        }
    }
}

/// Where ball volumes come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum VolumeSource {
    /// Chamber-sector volume; equals m(G_T) for bi-K-invariant norms and
    /// ignores the translates.
    Chamber { group: GroupSpec, norm: NormSpec },
    /// Full Haar volume of the skew ball.
    Haar {
        group: GroupSpec,
        norm: NormSpec,
        method: Method,
    },
    /// Skew-ball volumes of a subgroup family.
    Family { family: SkewFamily },
}

impl VolumeSource {
    pub fn dim(&self) -> usize {
        match self {
            Self::Chamber { group, .. } | Self::Haar { group, .. } => group.rep_dim(),
            Self::Family { family } => family.dim(),
        }
    }

    pub fn volume(&self, t: f64) -> Result<f64> {
        let id = RealMatrix::identity(self.dim());
        self.skew_volume(&id, &id, t)
    }

    pub fn skew_volume(&self, g1: &RealMatrix, g2: &RealMatrix, t: f64) -> Result<f64> {
        match self {
            Self::Chamber { group, norm } => Ok(chamber_sector_volume(group, norm, t)?.value),
            Self::Haar {
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
            Self::Family { family } => {
                let id = RealMatrix::identity(family.dim());
                if *g1 == id && *g2 == id {
                    family.volume(t)
                } else {
                    family.skew_volume(g1, g2, t)
                }
            }
        }
    }
}

/// A concrete violation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Witness {
    /// D(gu) ≥ (1+ε)·D(g).
    Uc {
        distance: DistanceFunction,
        g: RealMatrix,
        u: RealMatrix,
        epsilon: f64,
    },
    /// V((1+δ)T) > (1+ε)·V(T) for the skew ball [g₁, g₂].
    Growth {
        source: VolumeSource,
        g1: RealMatrix,
        g2: RealMatrix,
        t: f64,
        delta: f64,
        epsilon: f64,
    },
    /// The count-to-volume ratios at T_a and T_b differ by more than the relative tolerance.
    Count {
        lattice: LatticeSpec,
        distance: DistanceFunction,
        source: VolumeSource,
        t_a: f64,
        t_b: f64,
        tolerance: f64,
    },
    /// The skew-ball ratios at T_a and T_b differ by more than the absolute tolerance.
    RatioBand {
        family: SkewFamily,
        g1: RealMatrix,
        g2: RealMatrix,
        t_a: f64,
        t_b: f64,
        tolerance: f64,
    },
}

impl Witness {
    /// Re-evaluates the witness; `true` confirms the violation.
    pub fn replay(&self) -> Result<bool> {
        match self {
            Self::Uc {
                distance,
                g,
                u,
                epsilon,
            } => Ok(uc_ratio(distance, g, u)? >= 1.0 + epsilon),
            Self::Growth {
                source,
                g1,
                g2,
                t,
                delta,
                epsilon,
            } => {
                let lo = source.skew_volume(g1, g2, *t)?;
                let hi = source.skew_volume(g1, g2, (1.0 + delta) * t)?;
                Ok(hi > (1.0 + epsilon) * lo)
            }
            Self::Count {
                lattice,
                distance,
                source,
                t_a,
                t_b,
                tolerance,
            } => {
                let ra = count_ratio(lattice, distance, source, *t_a, u64::MAX)?.2;
                let rb = count_ratio(lattice, distance, source, *t_b, u64::MAX)?.2;
                Ok((ra / rb - 1.0).abs() > *tolerance)
            }
            Self::RatioBand {
                family,
                g1,
                g2,
                t_a,
                t_b,
                tolerance,
            } => {
                let r = |t: f64| -> Result<f64> {
                    Ok(family.skew_volume(g1, g2, t)? / family.volume(t)?)
                };
                Ok((r(*t_a)? - r(*t_b)?).abs() > *tolerance)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    /// Pass, with an empirical constant in place of the asserted limit 1.
    PassWithConstant {
        constant: f64,
    },
    Fail {
        witness: Box<Witness>,
    },
    Inconclusive {
        reason: String,
    },
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Self::Pass | Self::PassWithConstant { .. })
    }

    pub fn is_fail(&self) -> bool {
        matches!(self, Self::Fail { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Pass => "pass",
            Self::PassWithConstant { .. } => "pass-with-constant",
            Self::Fail { .. } => "fail",
            Self::Inconclusive { .. } => "inconclusive",
        }
    }
}

/// One sampled grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct GridRow {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<RealMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<RealMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub value: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub flagged: bool,
}

/// Result of one audit.
///
/// `max_violation` is the largest excess of the audited quantity over its
/// allowed bound; a negative value is the margin left on the grid. It is
/// absent when no grid was evaluated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub condition: Condition,
    pub grid: Vec<GridRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_violation: Option<f64>,
    #[serde(flatten)]
    pub verdict: Verdict,
    pub metrics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl AuditReport {
    fn new(condition: Condition) -> Self {
        Self {
            condition,
            grid: Vec::new(),
            max_violation: None,
            verdict: Verdict::Inconclusive {
                reason: String::new(),
            },
            metrics: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    fn inconclusive(condition: Condition, reason: &str) -> Self {
        Self {
            verdict: Verdict::Inconclusive {
                reason: reason.into(),
            },
            ..Self::new(condition)
        }
    }

    pub fn metric(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).copied()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }

    /// Replays the witness of a `Fail` verdict; `None` for other verdicts.
    pub fn replay(&self) -> Option<Result<bool>> {
        match &self.verdict {
            Verdict::Fail { witness } => Some(witness.replay()),
            _ => None,
        }
    }
}

/// D(gu)/D(g).
pub fn uc_ratio(d: &DistanceFunction, g: &RealMatrix, u: &RealMatrix) -> Result<f64> {
    Ok(d.eval(&(g * u))? / d.eval(g)?)
}

/// Sample sizes for [`audit_uc`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UcSampling {
    pub g_samples: usize,
    pub u_samples: usize,
    pub seed: u64,
}

impl Default for UcSampling {
    fn default() -> Self {
        Self {
            g_samples: 256,
            u_samples: 32,
            seed: 0,
        }
    }
}

const UC_MIN_RADIUS: f64 = 1e-12;

fn sample_g(rng: &mut impl Rng, n: usize) -> RealMatrix {
    // entries up to 1e6 through row and column scales in [1, 1e3]
    let rs: Vec<f64> = (0..n)
        .map(|_| 10f64.powf(3.0 * rng.random::<f64>()))
        .collect();
    let cs: Vec<f64> = (0..n)
        .map(|_| 10f64.powf(3.0 * rng.random::<f64>()))
        .collect();
    let data = (0..n * n)
        .map(|k| rs[k / n] * cs[k % n] * (2.0 * rng.random::<f64>() - 1.0))
        .collect();
    RealMatrix::new(n, data).expect("finite entries")
}

fn sample_direction(rng: &mut impl Rng, n: usize) -> RealMatrix {
    let data = (0..n * n)
        .map(|_| 2.0 * rng.random::<f64>() - 1.0)
        .collect();
    let x = RealMatrix::new(n, data).expect("finite entries");
    let m = x.data().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    x.scale(1.0 / m)
}

/// Right uniform continuity: finds a radius r such that every sampled
/// u = I + rX with max|X_ij| = 1 satisfies D(gu) < (1+ε)D(g).
pub fn audit_uc(d: &DistanceFunction, epsilon: f64, sampling: UcSampling) -> Result<AuditReport> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    if sampling.g_samples == 0 || sampling.u_samples == 0 {
        return Ok(AuditReport::inconclusive(Condition::Uc, "empty sample"));
    }
    let n = d.norm.dim();
    let mut gs: Vec<RealMatrix> = (0..sampling.g_samples)
        .map(|i| sample_g(&mut substream(sampling.seed, i as u64), n))
        .collect();
    // deterministic extremes diag(R, 1/R, 1, …)
    for r in [1e3, 1e6] {
        let mut diag = vec![1.0; n];
        diag[0] = r;
        diag[n - 1] = 1.0 / r;
        gs.push(RealMatrix::diag(&diag));
    }
    let xs: Vec<RealMatrix> = (0..sampling.u_samples)
        .map(|j| sample_direction(&mut substream(sampling.seed, (1u64 << 32) + j as u64), n))
        .collect();
    let id = RealMatrix::identity(n);
    let u_at = |x: &RealMatrix, r: f64| &id + &x.scale(r);
    // worst ratio per g at radius r, in g order
    let worst = |r: f64| -> Result<Vec<(f64, usize)>> {
        gs.par_iter()
            .map(|g| {
                let mut best = (f64::NEG_INFINITY, 0);
                for (j, x) in xs.iter().enumerate() {
                    let q = uc_ratio(d, g, &u_at(x, r))?;
                    if q > best.0 {
                        best = (q, j);
                    }
                }
                Ok(best)
            })
            .collect()
    };
    let max_of = |w: &[(f64, usize)]| w.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let bound = 1.0 + epsilon;
    let mut report = AuditReport::new(Condition::Uc);
    let w_min = worst(UC_MIN_RADIUS)?;
    if max_of(&w_min) >= bound {
        let (i, &(q, j)) = w_min
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
            .expect("nonempty sample");
        report.max_violation = Some(q - bound);
        report.verdict = Verdict::Fail {
            witness: Box::new(Witness::Uc {
                distance: d.clone(),
                g: gs[i].clone(),
                u: u_at(&xs[j], UC_MIN_RADIUS),
                epsilon,
            }),
        };
        return Ok(report);
    }
    let radius = if max_of(&worst(1.0)?) < bound {
        1.0
    } else {
        // log-radius bisection between a passing and a failing radius
        let lr = bisect(
            |s| match worst(10f64.powf(s)) {
                Ok(w) if max_of(&w) < bound => 1.0,
                _ => -1.0,
            },
            UC_MIN_RADIUS.log10(),
            0.0,
            60,
        );
        // step back to the passing side of the final bracket
        let mut r = 10f64.powf(lr);
        while max_of(&worst(r)?) >= bound {
            r *= 0.5;
        }
        r
    };
    let w = worst(radius)?;
    report.grid = w
        .iter()
        .enumerate()
        .map(|(i, &(q, j))| GridRow {
            g: Some(gs[i].clone()),
            u: Some(u_at(&xs[j], radius)),
            epsilon: Some(epsilon),
            value: q,
            ..GridRow::default()
        })
        .collect();
    report.max_violation = Some(max_of(&w) - bound);
    report.metrics.insert("radius".into(), radius);
    report.metrics.insert("max_ratio".into(), max_of(&w));
    report.verdict = Verdict::Pass;
    Ok(report)
}

/// Largest δ on the bisection grid such that V((1+δ)T) ≤ (1+ε)V(T) for every T in the schedule.
fn growth_audit(
    condition: Condition,
    source: &VolumeSource,
    pairs: &[(RealMatrix, RealMatrix)],
    epsilon: f64,
    schedule: &[f64],
) -> Result<AuditReport> {
    if !(epsilon > 0.0) {
        return Ok(AuditReport::inconclusive(
            condition,
            "epsilon = 0 admits no positive delta",
        ));
    }
    if schedule.is_empty() || pairs.is_empty() {
        return Ok(AuditReport::inconclusive(
            condition,
            "empty schedule or compact sample",
        ));
    }
    let grid: Vec<(usize, f64)> = (0..pairs.len())
        .flat_map(|p| schedule.iter().map(move |&t| (p, t)))
        .collect();
    let base: Vec<f64> = grid
        .par_iter()
        .map(|&(p, t)| source.skew_volume(&pairs[p].0, &pairs[p].1, t))
        .collect::<Result<_>>()?;
    let live: Vec<usize> = (0..grid.len()).filter(|&i| base[i] > 0.0).collect();
    if live.is_empty() {
        return Ok(AuditReport::inconclusive(
            condition,
            "all sampled balls are empty",
        ));
    }
    let ratios = |delta: f64| -> Result<Vec<f64>> {
        live.par_iter()
            .map(|&i| {
                let (p, t) = grid[i];
                Ok(source.skew_volume(&pairs[p].0, &pairs[p].1, (1.0 + delta) * t)? / base[i])
            })
            .collect()
    };
    let bound = 1.0 + epsilon;
    let worst = |rs: &[f64]| rs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let delta_min = 1e-9;
    let mut report = AuditReport::new(condition);
    let at_min = ratios(delta_min)?;
    if worst(&at_min) > bound {
        let k = (0..at_min.len())
            .max_by(|&a, &b| at_min[a].total_cmp(&at_min[b]))
            .expect("nonempty");
        let (p, t) = grid[live[k]];
        report.max_violation = Some(at_min[k] - bound);
        report.verdict = Verdict::Fail {
            witness: Box::new(Witness::Growth {
                source: source.clone(),
                g1: pairs[p].0.clone(),
                g2: pairs[p].1.clone(),
                t,
                delta: delta_min,
                epsilon,
            }),
        };
        return Ok(report);
    }
    let (mut lo, mut hi) = (delta_min, 1.0);
    if worst(&ratios(hi)?) <= bound {
        lo = hi;
    } else {
        for _ in 0..48 {
            let mid = (lo * hi).sqrt();
            if worst(&ratios(mid)?) <= bound {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi / lo < 1.0 + 1e-6 {
                break;
            }
        }
    }
    let rs = ratios(lo)?;
    report.grid = live
        .iter()
        .zip(&rs)
        .map(|(&i, &q)| {
            let (p, t) = grid[i];
            let id = RealMatrix::identity(source.dim());
            GridRow {
                g: (pairs[p].0 != id || pairs[p].1 != id).then(|| &pairs[p].0 * &pairs[p].1),
                t: Some(t),
                delta: Some(lo),
                epsilon: Some(epsilon),
                value: q,
                ..GridRow::default()
            }
        })
        .collect();
    report.max_violation = Some(worst(&rs) - bound);
    report.metrics.insert("delta".into(), lo);
    report.metrics.insert(
        "t0".into(),
        schedule.iter().copied().fold(f64::INFINITY, f64::min),
    );
    report.verdict = Verdict::Pass;
    Ok(report)
}

/// Moderate volume growth of the balls G_T.
pub fn audit_i1(source: &VolumeSource, epsilon: f64, schedule: &[f64]) -> Result<AuditReport> {
    let id = RealMatrix::identity(source.dim());
    growth_audit(
        Condition::I1,
        source,
        &[(id.clone(), id)],
        epsilon,
        schedule,
    )
}

/// Uniform volume growth of the skew balls over the sampled pairs (g₁, g₂).
pub fn audit_d1(
    family: &SkewFamily,
    pairs: &[(RealMatrix, RealMatrix)],
    epsilon: f64,
    schedule: &[f64],
) -> Result<AuditReport> {
    let n = family.dim();
    for (a, b) in pairs {
        for g in [a, b] {
            if g.dim() != n {
                return Err(Error::DimMismatch {
                    expected: n,
                    got: g.dim(),
                });
            }
        }
    }
    growth_audit(
        Condition::D1,
        &VolumeSource::Family {
            family: family.clone(),
        },
        pairs,
        epsilon,
        schedule,
    )
}

/// (#Γ_T, m(G_T), ratio).
fn count_ratio(
    l: &LatticeSpec,
    d: &DistanceFunction,
    source: &VolumeSource,
    t: f64,
    cap: u64,
) -> Result<(u64, f64, f64)> {
    let (count, _) = fold_ball(l, d, t, cap, || 0u64, |c, _| *c += 1, |a, b| a + b)?;
    let v = source.volume(t)?;
    Ok((count, v, count as f64 / v))
}

/// Relative spread allowed among the count-to-volume ratios.
pub const I2_TOLERANCE: f64 = 0.1;
/// Thresholds below this are flagged as too small for a meaningful ratio.
pub const I2_MIN_T: f64 = 2.0;

/// Equidistribution of Γ-points: tabulates #Γ_T/m(G_T). A flat ratio is
/// reported as Pass-with-constant; the constant is the inverse covolume in
/// the volume normalization of `source`.
pub fn audit_i2(
    l: &LatticeSpec,
    d: &DistanceFunction,
    source: &VolumeSource,
    schedule: &[f64],
    cap: u64,
) -> Result<AuditReport> {
    if schedule.is_empty() {
        return Ok(AuditReport::inconclusive(Condition::I2, "empty schedule"));
    }
    if source.dim() != l.dim {
        return Err(Error::DimMismatch {
            expected: l.dim,
            got: source.dim(),
        });
    }
    let rows: Vec<(u64, f64, f64)> = schedule
        .iter()
        .map(|&t| count_ratio(l, d, source, t, cap))
        .collect::<Result<_>>()?;
    let mut report = AuditReport::new(Condition::I2);
    report.grid = schedule
        .iter()
        .zip(&rows)
        .map(|(&t, &(_, _, r))| GridRow {
            t: Some(t),
            value: r,
            flagged: t < I2_MIN_T,
            ..GridRow::default()
        })
        .collect();
    let usable: Vec<usize> = (0..schedule.len())
        .filter(|&i| schedule[i] >= I2_MIN_T && rows[i].1 > 0.0)
        .collect();
    if schedule.iter().any(|&t| t < I2_MIN_T) {
        report.notes.push(format!(
            "thresholds below {I2_MIN_T} are flagged and excluded"
        ));
    }
    if usable.is_empty() {
        report.verdict = Verdict::Inconclusive {
            reason: "no usable threshold".into(),
        };
        return Ok(report);
    }
    let (imin, imax) = usable.iter().fold((usable[0], usable[0]), |(lo, hi), &i| {
        (
            if rows[i].2 < rows[lo].2 { i } else { lo },
            if rows[i].2 > rows[hi].2 { i } else { hi },
        )
    });
    let spread = rows[imax].2 / rows[imin].2 - 1.0;
    let last = rows[*usable.last().expect("nonempty")].2;
    report.max_violation = Some(spread - I2_TOLERANCE);
    report.metrics.insert("spread".into(), spread);
    report.metrics.insert("constant".into(), last);
    report.metrics.insert("covolume".into(), 1.0 / last);
    if usable.len() >= 2 {
        let ts: Vec<f64> = usable.iter().map(|&i| schedule[i]).collect();
        let cs: Vec<f64> = usable.iter().map(|&i| rows[i].0 as f64).collect();
        report
            .metrics
            .insert("count_slope".into(), loglog_slope(&ts, &cs));
    }
    report.verdict = if spread <= I2_TOLERANCE {
        Verdict::PassWithConstant { constant: last }
    } else {
        Verdict::Fail {
            witness: Box::new(Witness::Count {
                lattice: *l,
                distance: d.clone(),
                source: source.clone(),
                t_a: schedule[imax],
                t_b: schedule[imin],
                tolerance: I2_TOLERANCE,
            }),
        }
    };
    Ok(report)
}

/// Relative accuracy of a single skew-ball volume for each family.
pub fn nominal_rel_error(family: &SkewFamily) -> f64 {
    match family {
        SkewFamily::Unipotent { .. } => 1e-9,
        SkewFamily::Spiral { .. } => 1e-5,
        SkewFamily::Semisimple {
            method: Method::Quadrature { .. },
            ..
        } => 1e-4,
        SkewFamily::Semisimple {
            method: Method::MonteCarlo { samples, .. },
            ..
        } => 1.0 / (*samples as f64).sqrt(),
    }
}

/// Existence of the limit ratio λ(H_T[g₁,g₂])/λ(H_T). The ratios over the
/// last half of the schedule (at least three points) are split into
/// monotone drift and back-and-forth oscillation; oscillation above three
/// times the integration error is a failure and the band [min, max] of the
/// tail is reported. Otherwise the extrapolated limit must be positive and finite.
pub fn audit_d2(
    family: &SkewFamily,
    g1: &RealMatrix,
    g2: &RealMatrix,
    schedule: &[f64],
) -> Result<AuditReport> {
    if schedule.len() < 3 {
        return Ok(AuditReport::inconclusive(
            Condition::D2,
            "need at least three thresholds",
        ));
    }
    if schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "schedule must be strictly increasing".into(),
        ));
    }
    let est = limit_ratio_alpha(family, g1, g2, schedule)?;
    let n = est.ratios.len();
    let start = n - n.div_ceil(2).max(3);
    let tail = &est.ratios[start..];
    let steps: Vec<f64> = tail.windows(2).map(|w| w[1] - w[0]).collect();
    let oscillation =
        0.5 * (steps.iter().map(|d| d.abs()).sum::<f64>() - steps.iter().sum::<f64>().abs());
    let scale = tail.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    let tolerance = 3.0 * nominal_rel_error(family) * scale;
    let (imin, imax) = (0..tail.len()).fold((0, 0), |(lo, hi), i| {
        (
            if tail[i] < tail[lo] { i } else { lo },
            if tail[i] > tail[hi] { i } else { hi },
        )
    });

    let mut report = AuditReport::new(Condition::D2);
    report.grid = est
        .schedule
        .iter()
        .zip(&est.ratios)
        .map(|(&t, &r)| GridRow {
            t: Some(t),
            value: r,
            ..GridRow::default()
        })
        .collect();
    report.max_violation = Some(oscillation - tolerance);
    report.metrics.insert("oscillation".into(), oscillation);
    report.metrics.insert("tolerance".into(), tolerance);
    report.metrics.insert("band_lo".into(), tail[imin]);
    report.metrics.insert("band_hi".into(), tail[imax]);
    if let Some(k) = est.kappa {
        report.metrics.insert("kappa".into(), k);
    }
    report.verdict = if oscillation > tolerance {
        Verdict::Fail {
            witness: Box::new(Witness::RatioBand {
                family: family.clone(),
                g1: g1.clone(),
                g2: g2.clone(),
                t_a: schedule[start + imax],
                t_b: schedule[start + imin],
                tolerance,
            }),
        }
    } else if est.estimate.is_finite() && est.estimate > 0.0 {
        report.metrics.insert("limit".into(), est.estimate);
        Verdict::Pass
    } else {
        Verdict::Inconclusive {
            reason: format!(
                "extrapolated limit {} is not positive and finite",
                est.estimate
            ),
        }
    };
    Ok(report)
}
