use std::f64::consts::PI;

use num_complex::Complex64;

use super::manifest::{RunContext, Series};
use super::modular::{modular_histogram, ModularCells};
use super::oppenheim::FrameCounter;
use super::{
    AuditParams, AuditSpec, CounterexampleParams, ExpectedVerdict, LedrappierParams,
    ModularExpectation, NonbalancedParams, OppenheimParams, TorusParams, TranslateModularParams,
    VolumeSweepParams,
};
use crate::audit::{self, AuditReport, Verdict};
use crate::density::{
    equidist_compare, g_orbit_integral_fibered, nu_integral, DensityField, DensityKind,
    FIBERED_TO_UNIT_COVOLUME,
};
use crate::error::{Error, Result};
use crate::lattice::{
    fold_ball, orbit_sums_streaming, Action, LatticeSpec, OrbitPoint, TestFunction,
};
use crate::matgroup::{DistanceFunction, RealMatrix};
use crate::numeric::{log_space, loglog_slope};
use crate::rootsys::{growth_exponents, to_f64, GroupSpec};
use crate::volume::{
    haar_volume_windowed, spiral_h_volume, spiral_s_n, spiral_skew_volume, spiral_t_n,
    unipotent_skewball_volume, volume_sweep, write_sweep_csv, ChamberWindow, Method, SkewBallSpec,
    SkewFamily, SpiralProfile,
};

fn f(x: f64) -> String {
    format!("{x}")
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

/// S_{φ,v}(T), S̃_{φ,v}(T) and the normalized sums S/λ(H_T) against (6/π²)·ν(φ).
pub fn run_ledrappier(p: &LedrappierParams, ctx: &mut RunContext) -> Result<()> {
    let d = DistanceFunction::new(p.norm.clone());
    let point = OrbitPoint::Vector(p.v.clone());
    let id = RealMatrix::identity(2);
    let field = DensityField {
        v: p.v.clone(),
        kind: DensityKind::LedrappierGeneral {
            norm: p.norm.clone(),
        },
    };
    let limit = FIBERED_TO_UNIT_COVOLUME * nu_integral(&p.phi, &field)?;
    let (mut s_emp, mut s_pred, mut rows) = (Vec::new(), Vec::new(), Vec::new());
    for &t in &p.schedule {
        let (sums, count) = orbit_sums_streaming(
            &LatticeSpec::sl(2),
            &d,
            t,
            ctx.budget,
            &point,
            std::slice::from_ref(&p.phi),
            Action::RightLinear,
        )?;
        let s = sums[0].re;
        let st = g_orbit_integral_fibered(&p.phi, &p.v, &p.norm, t)?;
        let lam = unipotent_skewball_volume(&id, &id, &p.norm, t)?;
        rows.push(vec![
            f(t),
            count.to_string(),
            f(s),
            f(st),
            f(rel(s, st)),
            f(s / lam),
            f(limit),
        ]);
        s_emp.push(s);
        s_pred.push(st);
    }
    ctx.write_csv(
        "ledrappier.csv",
        &[
            "T",
            "count",
            "S",
            "S_tilde",
            "relative_error",
            "S_over_lambda",
            "predicted_limit",
        ],
        &rows,
    )?;
    if p.phi == TestFunction::Zero {
        let zero = s_emp.iter().chain(&s_pred).all(|x| *x == 0.0);
        ctx.check("zero-sums", zero, 0.0, Some(0.0), "φ ≡ 0");
        return Ok(());
    }
    let rep = equidist_compare(&p.schedule, &s_emp, &s_pred)?;
    ctx.write_json("equidist.json", &rep)?;
    let last = *rep.relative_errors.last().expect("nonempty schedule");
    ctx.check(
        "final-relative-error",
        last <= p.tolerance,
        last,
        Some(p.tolerance),
        "|S/S̃ − 1| at the largest T",
    );
    let steps = p.schedule.len() - 1;
    let need = p.min_nonincreasing.unwrap_or(steps.saturating_sub(1));
    ctx.check(
        "nonincreasing-steps",
        rep.nonincreasing_steps >= need,
        rep.nonincreasing_steps as f64,
        Some(need as f64),
        format!("of {steps} steps"),
    );
    ctx.add_series(
        Series::new(
            "ledrappier_relative_error",
            "T",
            "relative_error",
            p.schedule
                .iter()
                .copied()
                .zip(rep.relative_errors)
                .collect(),
        )
        .log_xy(),
    );
    Ok(())
}

/// Weyl sums W_k(T) = |Σ e^{2πi⟨k, γ⁻¹x₀⟩}|/#Γ_T.
pub fn run_torus(p: &TorusParams, ctx: &mut RunContext) -> Result<()> {
    let dim = p.x0.len();
    let d = DistanceFunction::new(p.norm.clone());
    let point = OrbitPoint::Torus(p.x0.clone());
    let chars: Vec<TestFunction> = p
        .frequencies
        .iter()
        .map(|k| TestFunction::TrigCharacter { k: k.clone() })
        .collect();
    let mut rows = Vec::new();
    let mut last = Vec::new();
    let mut series: Vec<Vec<(f64, f64)>> = vec![Vec::new(); chars.len()];
    for &t in &p.schedule {
        let (sums, count) = orbit_sums_streaming(
            &LatticeSpec::sl(dim),
            &d,
            t,
            ctx.budget,
            &point,
            &chars,
            Action::InverseLeftTorus,
        )?;
        last.clear();
        for (i, (k, s)) in p.frequencies.iter().zip(&sums).enumerate() {
            let w = if count == 0 {
                f64::NAN
            } else {
                s.norm() / count as f64
            };
            let label = k
                .iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(";");
            rows.push(vec![f(t), count.to_string(), label, f(w)]);
            series[i].push((t, w));
            last.push(w);
        }
    }
    ctx.write_csv("torus.csv", &["T", "count", "k", "W"], &rows)?;
    let t_max = *p.schedule.last().expect("nonempty schedule");
    for (k, &w) in p.frequencies.iter().zip(&last) {
        let label = format!(
            "({})",
            k.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        );
        if k.iter().all(|&x| x == 0) {
            ctx.check(
                &format!("W{label}-trivial"),
                (w - 1.0).abs() <= 1e-12,
                w,
                Some(1.0),
                "trivial character",
            );
            continue;
        }
        if let Some(m) = p.max_weyl {
            ctx.check(
                &format!("W{label}-max"),
                w <= m,
                w,
                Some(m),
                format!("T = {t_max}"),
            );
        }
        if let Some(m) = p.min_weyl {
            ctx.check(
                &format!("W{label}-min"),
                w >= m,
                w,
                Some(m),
                format!("T = {t_max}"),
            );
        }
    }
    for (k, pts) in p.frequencies.iter().zip(series) {
        let name = format!(
            "torus_W_{}",
            k.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join("_")
        );
        ctx.add_series(Series::new(name, "T", "W", pts).log_x());
    }
    Ok(())
}

/// Cell histogram of g₀⁻¹λ·i reduced to the fundamental domain, against hyperbolic area.
pub fn run_translate_modular(p: &TranslateModularParams, ctx: &mut RunContext) -> Result<()> {
    let g0 = RealMatrix::new(2, p.g0.clone())?;
    let d = DistanceFunction::new(p.norm.clone());
    let cells = ModularCells::new(p.cell_height)?;
    let expected = cells.proportions();
    let mut rows = Vec::new();
    let mut hist = None;
    for &t in &p.schedule {
        let h = modular_histogram(&g0, &d, t, cells, ctx.budget)?;
        for k in 0..6 {
            let share = if h.total == 0 {
                0.0
            } else {
                h.counts[k] as f64 / h.total as f64
            };
            rows.push(vec![
                f(t),
                k.to_string(),
                h.counts[k].to_string(),
                f(share),
                f(expected[k]),
            ]);
        }
        hist = Some(h);
    }
    ctx.write_csv(
        "modular.csv",
        &["T", "cell", "count", "proportion", "expected"],
        &rows,
    )?;
    let h = hist.expect("nonempty schedule");
    let (n, _) = fold_ball(
        &LatticeSpec::sl(2),
        &d,
        h.t,
        ctx.budget,
        || 0u64,
        |c, _| *c += 1,
        |a, b| a + b,
    )?;
    ctx.check(
        "total-mass",
        h.total == n,
        h.total as f64,
        Some(n as f64),
        "histogram mass equals #Λ_T",
    );
    match p.expect {
        ModularExpectation::Equidistributed => {
            let dev = (0..6)
                .map(|k| rel(h.counts[k] as f64 / h.total as f64, expected[k]))
                .fold(0.0f64, f64::max);
            ctx.check(
                "cell-deviation",
                dev <= p.tolerance,
                dev,
                Some(p.tolerance),
                format!("max over 6 cells at T = {}", h.t),
            );
        }
        ModularExpectation::Basepoint => {
            let base = cells.cell(Complex64::new(0.0, 1.0));
            ctx.check(
                "basepoint-cell",
                h.counts[base] == h.total,
                h.counts[base] as f64,
                Some(h.total as f64),
                "",
            );
        }
    }
    let pts = (0..6)
        .map(|k| {
            (
                k as f64,
                h.counts[k] as f64 / h.total.max(1) as f64 / expected[k],
            )
        })
        .collect();
    ctx.add_series(Series::new(
        "modular_cell_ratio",
        "cell",
        "empirical_over_expected",
        pts,
    ));
    Ok(())
}

fn rotation3() -> RealMatrix {
    RealMatrix::from_rows([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
}

/// λ(H_T)/T⁴ along T_n and S_n, and the skew ratios for the pair (e, R).
pub fn run_counterexample_d2(p: &CounterexampleParams, ctx: &mut RunContext) -> Result<()> {
    let c = p.c;
    SpiralProfile::new(c)?;
    let (id, r) = (RealMatrix::identity(3), rotation3());
    let ratio =
        |t: f64| -> Result<f64> { Ok(spiral_skew_volume(c, &id, &r, t)? / spiral_h_volume(c, t)?) };
    let mut rows = Vec::new();
    let (mut st, mut ss) = (Vec::new(), Vec::new());
    let mut last = [0.0; 4];
    for n in 1..=p.n {
        let (tn, sn) = (spiral_t_n(c, n), spiral_s_n(c, n));
        let vt = spiral_h_volume(c, tn)? / tn.powi(4);
        let vs = spiral_h_volume(c, sn)? / sn.powi(4);
        let (rt, rs) = (ratio(tn)?, ratio(sn)?);
        rows.push(vec![
            n.to_string(),
            f(tn),
            f(vt),
            f(PI / (2.0 * c * c)),
            f(sn),
            f(vs),
            f(PI / 2.0),
            f(rt),
            f(rs),
        ]);
        st.push((tn, rt));
        ss.push((sn, rs));
        last = [vt, vs, rt, rs];
    }
    ctx.write_csv(
        "counterexample.csv",
        &[
            "n",
            "T_n",
            "vol_T_over_T4",
            "target_T",
            "S_n",
            "vol_S_over_S4",
            "target_S",
            "skew_ratio_T",
            "skew_ratio_S",
        ],
        &rows,
    )?;
    let c2 = c * c;
    let [vt, vs, rt, rs] = last;
    let (vtol, rtol) = (p.volume_tolerance, p.ratio_tolerance);
    ctx.check(
        "volume-T_n",
        rel(vt, PI / (2.0 * c2)) <= vtol,
        rel(vt, PI / (2.0 * c2)),
        Some(vtol),
        "λ(H_{T_n})/T_n⁴ vs π/(2c²)",
    );
    ctx.check(
        "volume-S_n",
        rel(vs, PI / 2.0) <= vtol,
        rel(vs, PI / 2.0),
        Some(vtol),
        "λ(H_{S_n})/S_n⁴ vs π/2",
    );
    ctx.check(
        "skew-ratio-T_n",
        rel(rt, c2) <= rtol,
        rel(rt, c2),
        Some(rtol),
        "ratio along T_n vs c²",
    );
    ctx.check(
        "skew-ratio-S_n",
        rel(rs, 1.0 / c2) <= rtol,
        rel(rs, 1.0 / c2),
        Some(rtol),
        "ratio along S_n vs 1/c²",
    );

    let sched: Vec<f64> = (p.n.saturating_sub(1).max(1)..=p.n)
        .flat_map(|n| [spiral_t_n(c, n), spiral_s_n(c, n)])
        .collect();
    let rep = audit::audit_d2(&SkewFamily::Spiral { c }, &id, &r, &sched)?;
    ctx.write_json("audit_d2.json", &rep)?;
    ctx.check(
        "audit-d2-fails",
        rep.verdict.is_fail(),
        rep.metric("oscillation").unwrap_or(f64::NAN),
        rep.metric("tolerance"),
        "D2 verdict",
    );
    if let (Some(lo), Some(hi)) = (rep.metric("band_lo"), rep.metric("band_hi")) {
        ctx.check(
            "band-low",
            rel(lo, 1.0 / c2) <= rtol,
            rel(lo, 1.0 / c2),
            Some(rtol),
            "band minimum vs 1/c²",
        );
        ctx.check(
            "band-high",
            rel(hi, c2) <= rtol,
            rel(hi, c2),
            Some(rtol),
            "band maximum vs c²",
        );
    }
    ctx.add_series(Series::new("skew_ratio_T_n", "T", "ratio", st).log_x());
    ctx.add_series(Series::new("skew_ratio_S_n", "T", "ratio", ss).log_x());
    Ok(())
}

/// Fraction of λ(H_T) with one chamber coordinate at most M, under each norm.
pub fn run_nonbalanced(p: &NonbalancedParams, ctx: &mut RunContext) -> Result<()> {
    let gs = GroupSpec::SL2xSL2Tensor { l: p.l };
    let window = ChamberWindow {
        coord: p.coord,
        max: p.window,
    };
    let method = Method::Quadrature { k_nodes: p.k_nodes };
    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    for (i, norm) in p.norms.iter().enumerate() {
        let mut fr = Vec::new();
        for &t in &p.schedule {
            let w = haar_volume_windowed(&SkewBallSpec::ball(gs, norm.clone(), t), method, window)?;
            rows.push(vec![
                i.to_string(),
                f(t),
                f(w.fraction),
                f(w.full.value),
                f(w.windowed.value),
            ]);
            fr.push(w.fraction);
        }
        let min = fr.iter().copied().fold(f64::INFINITY, f64::min);
        let change = rel(*fr.last().expect("nonempty"), fr[0]);
        ctx.check(
            &format!("norm{i}-floor"),
            min >= p.floor,
            min,
            Some(p.floor),
            "smallest fraction over the schedule",
        );
        ctx.check(
            &format!("norm{i}-stable"),
            change <= p.max_change,
            change,
            Some(p.max_change),
            "relative change first to last",
        );
        verdicts.push(min >= p.floor);
        ctx.add_series(
            Series::new(
                format!("fraction_norm{i}"),
                "T",
                "fraction",
                p.schedule.iter().copied().zip(fr).collect(),
            )
            .log_x(),
        );
    }
    ctx.write_csv(
        "nonbalanced.csv",
        &["norm", "T", "fraction", "full_volume", "windowed_volume"],
        &rows,
    )?;
    let same = verdicts.windows(2).all(|w| w[0] == w[1]);
    let label = if verdicts[0] {
        "not-balanced"
    } else {
        "no-positive-floor"
    };
    ctx.check(
        "same-verdict",
        same,
        verdicts.iter().filter(|v| **v).count() as f64,
        None,
        label,
    );
    Ok(())
}

/// Signature exponent p(q − 1) with p ≤ q the numbers of positive and negative entries.
fn signature_exponent(q: &[f64]) -> f64 {
    let pos = q.iter().filter(|x| **x > 0.0).count();
    let neg = q.len() - pos;
    let (p, q) = (pos.min(neg), pos.max(neg));
    (p * (q - 1)) as f64
}

/// Frame counts against T^{p(q−1)}.
pub fn run_oppenheim(p: &OppenheimParams, ctx: &mut RunContext) -> Result<()> {
    let fc = FrameCounter::new(&p.q, p.column_p, p.gram.clone())?;
    let m = signature_exponent(&p.q);
    let counts: Vec<u64> = p.schedule.iter().map(|&t| fc.count(t).frames).collect();
    let scaled: Vec<f64> = p
        .schedule
        .iter()
        .zip(&counts)
        .map(|(t, &n)| n as f64 / t.powf(m))
        .collect();
    let rows: Vec<Vec<String>> = p
        .schedule
        .iter()
        .zip(&counts)
        .zip(&scaled)
        .map(|((t, n), s)| vec![f(*t), n.to_string(), f(*s)])
        .collect();
    ctx.write_csv("oppenheim.csv", &["T", "frames", "frames_over_T_m"], &rows)?;
    if p.gram.is_empty() {
        ctx.check(
            "empty-box",
            counts.iter().all(|&n| n == 0),
            counts.iter().sum::<u64>() as f64,
            Some(0.0),
            "",
        );
        return Ok(());
    }
    if counts.contains(&0) || counts.len() < 2 {
        ctx.check(
            "slope",
            false,
            f64::NAN,
            Some(m),
            "needs two or more nonzero counts",
        );
        return Ok(());
    }
    let ys: Vec<f64> = counts.iter().map(|&n| n as f64).collect();
    let slope = loglog_slope(&p.schedule, &ys);
    ctx.check(
        "slope",
        (slope - m).abs() <= p.slope_tolerance,
        slope,
        Some(m),
        format!("tolerance {}", p.slope_tolerance),
    );
    let (lo, hi) = scaled
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    let spread = hi / lo - 1.0;
    ctx.check(
        "flatness",
        spread <= p.flat_tolerance,
        spread,
        Some(p.flat_tolerance),
        "max/min − 1 of count/T^m",
    );
    ctx.add_series(
        Series::new(
            "oppenheim_frames",
            "T",
            "frames",
            p.schedule.iter().copied().zip(ys).collect(),
        )
        .log_xy(),
    );
    Ok(())
}

pub fn run_volume_sweep(p: &VolumeSweepParams, ctx: &mut RunContext) -> Result<()> {
    let ts = log_space(p.tmin, p.tmax, p.points);
    let method = p.method.map(|m| match m {
        Method::MonteCarlo { samples, .. } => Method::MonteCarlo {
            samples,
            seed: ctx.seed,
        },
        q => q,
    });
    let pts = volume_sweep(&p.group, &p.norm, &ts, method)?;
    let mut buf = Vec::new();
    write_sweep_csv(&pts, &mut buf)?;
    ctx.write_file(
        "volume_sweep.csv",
        &String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))?,
    )?;
    let vals: Vec<f64> = pts.iter().map(|s| s.estimate.value).collect();
    let monotone = vals.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-9));
    ctx.check(
        "monotone",
        monotone,
        vals.len() as f64,
        None,
        "volumes nondecreasing in T",
    );
    ctx.check(
        "positive",
        vals.last().is_some_and(|v| *v > 0.0),
        *vals.last().unwrap_or(&0.0),
        Some(0.0),
        "",
    );
    if vals.len() >= 2 && vals.iter().all(|v| *v > 0.0) {
        let m = to_f64(&growth_exponents(&p.group).m);
        let slope = loglog_slope(&ts, &vals);
        ctx.check(
            "loglog-slope",
            slope.is_finite(),
            slope,
            Some(m),
            "informational: compare with the growth exponent",
        );
    }
    ctx.add_series(
        Series::new("volume", "T", "volume", ts.into_iter().zip(vals).collect()).log_xy(),
    );
    Ok(())
}

pub fn run_audit(p: &AuditParams, ctx: &mut RunContext) -> Result<()> {
    let rep: AuditReport = match &p.check {
        AuditSpec::Uc { norm, epsilon, .. } => audit::audit_uc(
            &DistanceFunction::new(norm.clone()),
            *epsilon,
            p.check.uc_sampling(ctx.seed).expect("uc spec"),
        )?,
        AuditSpec::I1 {
            source,
            epsilon,
            schedule,
        } => audit::audit_i1(source, *epsilon, schedule)?,
        AuditSpec::I2 {
            lattice,
            norm,
            source,
            schedule,
        } => audit::audit_i2(
            lattice,
            &DistanceFunction::new(norm.clone()),
            source,
            schedule,
            ctx.budget,
        )?,
        AuditSpec::D1 {
            family,
            pairs,
            epsilon,
            schedule,
        } => audit::audit_d1(family, pairs, *epsilon, schedule)?,
        AuditSpec::D2 {
            family,
            g1,
            g2,
            schedule,
        } => audit::audit_d2(family, g1, g2, schedule)?,
    };
    ctx.write_json("audit.json", &rep)?;
    let got = match rep.verdict {
        Verdict::Pass | Verdict::PassWithConstant { .. } => ExpectedVerdict::Pass,
        Verdict::Fail { .. } => ExpectedVerdict::Fail,
        Verdict::Inconclusive { .. } => ExpectedVerdict::Inconclusive,
    };
    let want = p.expect.unwrap_or(ExpectedVerdict::Pass);
    ctx.check(
        "verdict",
        got == want,
        rep.max_violation.unwrap_or(f64::NAN),
        None,
        format!("{} (expected {want:?})", rep.verdict.label()),
    );
    if let Some(replayed) = rep.replay() {
        let ok = replayed?;
        ctx.check(
            "witness-replay",
            ok,
            ok as u8 as f64,
            Some(1.0),
            "witness re-evaluates to a violation",
        );
    }
    let pts: Vec<(f64, f64)> = rep
        .grid
        .iter()
        .filter_map(|g| g.t.map(|t| (t, g.value)))
        .collect();
    if !pts.is_empty() {
        ctx.add_series(
            Series::new(
                format!("audit_{:?}", rep.condition).to_lowercase(),
                "T",
                "value",
                pts,
            )
            .log_x(),
        );
    }
    Ok(())
}
