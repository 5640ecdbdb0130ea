//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails. Tolerances are fixed here.

use std::f64::consts::{PI, SQRT_2};
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use orbitlab::audit::audit_d2;
use orbitlab::density::{
    ledrappier_density, numeric_alpha, numeric_alpha_chart, Chart, DEFAULT_ALPHA_SCHEDULE,
};
use orbitlab::experiments::{run, RunManifest, ScenarioConfig};
use orbitlab::lattice::{enumerate_ball, fold_ball, LatticeSpec, DEFAULT_BUDGET};
use orbitlab::numeric::loglog_slope;
use orbitlab::rootsys::{growth_exponents, rat, LogPower};
use orbitlab::volume::{
    asymptotic_constant_c, chamber_sector_volume, default_k_method, exp_ball_integral, haar_volume,
    haar_volume_windowed, limit_ratio_alpha, spiral_h_volume, spiral_s_n, spiral_skew_volume,
    spiral_t_n, ymax, ChamberWindow, InnerProduct, Method, SkewBallSpec, SkewFamily,
};
use orbitlab::{DistanceFunction, ExactMatrix, GroupSpec, NormSpec, RealMatrix};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

type Suite = fn() -> Result<(), String>;
type Criterion = fn() -> Outcome;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn within(start: Instant, limit: Duration) -> bool {
    start.elapsed() <= limit
}

// 1 ----------------------------------------------------------------------

fn closed_form_volume() -> Outcome {
    let start = Instant::now();
    let sl2 = GroupSpec::SLn { n: 2 };
    let mut worst: f64 = 0.0;
    for t in [2.0, 10.0, 100.0] {
        let v = chamber_sector_volume(&sl2, &NormSpec::frobenius(2), t)
            .unwrap()
            .value;
        worst = worst.max(rel(v, t * t / 2.0 - 1.0));
    }
    let fast = within(start, Duration::from_secs(1));
    outcome(
        worst <= 1e-6 && fast,
        format!("max rel err {worst:.2e} (tol 1e-6), {:?}", start.elapsed()),
    )
}

// 2 ----------------------------------------------------------------------

fn constant_pipeline() -> Outcome {
    let start = Instant::now();
    let gs = GroupSpec::SLn { n: 2 };
    let norm = NormSpec::entrywise(2, 4.0);
    let c = asymptotic_constant_c(&gs, &norm, 1e-8).unwrap();
    let t = 1e4;
    let v = haar_volume(&SkewBallSpec::ball(gs, norm, t), default_k_method(&gs))
        .unwrap()
        .value;
    let err = rel(v, c * t * t);
    let fast = within(start, Duration::from_secs(60));
    outcome(
        err <= 0.03 && fast,
        format!(
            "|λ/(C T²) − 1| = {err:.2e} (tol 0.03), C = {c:.6}, {:?}",
            start.elapsed()
        ),
    )
}

// 3 ----------------------------------------------------------------------

fn sopq_exponents() -> Outcome {
    let mut bad = Vec::new();
    for (p, q) in [(1usize, 2usize), (2, 3), (3, 4), (2, 4)] {
        let e = growth_exponents(&GroupSpec::SOpq { p, q });
        if e.m != rat((p * (q - 1)) as i64, 1) || !e.condition_g {
            bad.push(format!("SO({p},{q}): m = {}, G = {}", e.m, e.condition_g));
        }
    }
    for p in [2usize, 3] {
        let e = growth_exponents(&GroupSpec::SOpq { p, q: p });
        if e.condition_g || e.ell != LogPower::Known(1) || e.m != rat((p * (p - 1)) as i64, 1) {
            bad.push(format!(
                "SO({p},{p}): m = {}, G = {}, ℓ = {:?}",
                e.m, e.condition_g, e.ell
            ));
        }
    }
    outcome(
        bad.is_empty(),
        if bad.is_empty() {
            "m = p(q−1) exact; G iff p < q".into()
        } else {
            bad.join("; ")
        },
    )
}

// 4 ----------------------------------------------------------------------

fn rotation3() -> RealMatrix {
    RealMatrix::from_rows([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
}

fn spiral_counterexample() -> Outcome {
    let start = Instant::now();
    let (c, n) = (1.1, 3);
    let (tn, sn) = (spiral_t_n(c, n), spiral_s_n(c, n));
    let (id, r) = (RealMatrix::identity(3), rotation3());
    let ratio =
        |t: f64| spiral_skew_volume(c, &id, &r, t).unwrap() / spiral_h_volume(c, t).unwrap();
    let vt = rel(
        spiral_h_volume(c, tn).unwrap() / tn.powi(4),
        PI / (2.0 * c * c),
    );
    let vs = rel(spiral_h_volume(c, sn).unwrap() / sn.powi(4), PI / 2.0);
    let rt = rel(ratio(tn), c * c);
    let rs = rel(ratio(sn), 1.0 / (c * c));
    let sched = [spiral_t_n(c, 2), spiral_s_n(c, 2), tn, sn];
    let rep = audit_d2(&SkewFamily::Spiral { c }, &id, &r, &sched).unwrap();
    let lo = rep
        .metric("band_lo")
        .map_or(f64::INFINITY, |x| rel(x, 1.0 / (c * c)));
    let hi = rep
        .metric("band_hi")
        .map_or(f64::INFINITY, |x| rel(x, c * c));
    let passed = vt <= 0.03
        && vs <= 0.03
        && rt <= 0.05
        && rs <= 0.05
        && rep.verdict.is_fail()
        && lo <= 0.05
        && hi <= 0.05
        && within(start, Duration::from_secs(60));
    outcome(
        passed,
        format!(
            "volumes {vt:.1e}/{vs:.1e} (tol 0.03), ratios {rt:.1e}/{rs:.1e} (tol 0.05), audit {} band {lo:.1e}/{hi:.1e}",
            rep.verdict.label()
        ),
    )
}

// 5 ----------------------------------------------------------------------

fn run_inline(json: serde_json::Value) -> RunManifest {
    let cfg = ScenarioConfig::from_json(&json.to_string()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    run(&cfg, dir.path()).unwrap()
}

fn check_value(m: &RunManifest, name: &str) -> f64 {
    m.check(name).and_then(|c| c.value).unwrap_or(f64::NAN)
}

fn ledrappier() -> Outcome {
    let start = Instant::now();
    let m = run_inline(serde_json::json!({
        "schema_version": 1,
        "scenario": {
            "name": "ledrappier",
            "v": [1.0, SQRT_2],
            "phi": {"kind": "annulus-bump", "r_min": 0.5, "r_max": 2.0, "order": 2},
            "norm": {"kind": "entrywise", "dim": 2, "p": 2.0},
            "schedule": [250.0, 500.0, 1000.0, 2000.0]
        }
    }));
    let err = check_value(&m, "final-relative-error");
    let steps = check_value(&m, "nonincreasing-steps");
    let passed = err <= 0.10 && steps >= 2.0 && within(start, Duration::from_secs(300));
    outcome(
        passed,
        format!("|S/S̃ − 1| = {err:.4} at T = 2000 (tol 0.10), {steps} of 3 steps nonincreasing"),
    )
}

// 6 ----------------------------------------------------------------------

fn density_grid() -> Outcome {
    let grid: [([f64; 2], [f64; 2]); 10] = [
        ([1.0, 0.0], [1.0, 0.0]),
        ([1.0, 0.5], [0.3, -2.0]),
        ([-0.7, 1.3], [1.1, 0.4]),
        ([2.0, 1.0], [-1.0, 3.0]),
        ([0.0, 1.0], [1.0, 1.0]),
        ([0.5, -0.5], [2.0, 0.1]),
        ([1.5, 2.5], [-0.2, 0.9]),
        ([-1.0, -1.0], [1.0, -2.0]),
        ([3.0, 0.2], [0.0, 1.0]),
        ([0.4, 1.9], [1.3, -1.3]),
    ];
    let mut worst: f64 = 0.0;
    let mut identity: f64 = 0.0;
    for p in [1.0, 2.0, f64::INFINITY] {
        let norm = NormSpec::entrywise(2, p);
        let pn = |x: &[f64; 2]| {
            if p.is_infinite() {
                x[0].abs().max(x[1].abs())
            } else {
                (x[0].abs().powf(p) + x[1].abs().powf(p)).powf(1.0 / p)
            }
        };
        for (v, w) in &grid {
            let a = ledrappier_density(v, w, &norm).unwrap();
            let b = numeric_alpha(v, w, &norm, &DEFAULT_ALPHA_SCHEDULE).unwrap();
            worst = worst.max(rel(a, b));
            identity = identity.max((a * pn(v) * pn(w) - 1.0).abs());
        }
    }
    outcome(
        worst <= 0.05 && identity <= 1e-12,
        format!("max |closed/numeric − 1| = {worst:.2e} (tol 0.05), identity error {identity:.1e} (tol 1e-12)"),
    )
}

// 7 ----------------------------------------------------------------------

fn brute(l: &LatticeSpec, d: &DistanceFunction, t: f64) -> Vec<ExactMatrix> {
    let n = l.dim * l.dim;
    let b = (d.norm.entry_bound() * t).floor() as i64;
    let side = (2 * b + 1) as usize;
    let mut out = Vec::new();
    let mut e = vec![0i64; n];
    let mut f = vec![0f64; n];
    for code in 0..side.pow(n as u32) {
        let mut c = code;
        for k in 0..n {
            e[k] = (c % side) as i64 - b;
            f[k] = e[k] as f64;
            c /= side;
        }
        if d.eval_slice(&f) < t {
            let m = ExactMatrix::new(l.dim, e.clone()).unwrap();
            if l.contains(&m).unwrap() {
                out.push(m);
            }
        }
    }
    out.sort();
    out
}

fn enumeration_oracle() -> Outcome {
    let mut cases = Vec::new();
    for t in [1.5, 2.0, 3.0, 4.0, 5.0] {
        for norm in [
            NormSpec::frobenius(2),
            NormSpec::max_entry(2),
            NormSpec::entrywise(2, 1.0),
        ] {
            cases.push((LatticeSpec::sl(2), norm, t));
        }
    }
    for t in [2.0, 3.0] {
        cases.push((LatticeSpec::sl(3), NormSpec::max_entry(3), t));
    }
    let mut mismatches = Vec::new();
    for (l, norm, t) in &cases {
        let d = DistanceFunction::new(norm.clone());
        let got = enumerate_ball(l, &d, *t).unwrap().elements;
        if got != brute(l, &d, *t) {
            mismatches.push(format!("d = {} T = {t}", l.dim));
        }
    }
    outcome(
        mismatches.is_empty(),
        format!("{} cases, mismatches: {:?}", cases.len(), mismatches),
    )
}

// 8 ----------------------------------------------------------------------

fn count(t: f64) -> u64 {
    let d = DistanceFunction::new(NormSpec::frobenius(2));
    fold_ball(
        &LatticeSpec::sl(2),
        &d,
        t,
        DEFAULT_BUDGET,
        || (),
        |_, _| {},
        |a, _| a,
    )
    .unwrap()
    .1
}

fn i2_trend() -> Outcome {
    let ts = [100.0, 200.0, 400.0, 800.0];
    let ns: Vec<f64> = ts.iter().map(|&t| count(t) as f64).collect();
    let flat = rel(ns[2] / (ts[2] * ts[2]), ns[3] / (ts[3] * ts[3]));
    let slope = loglog_slope(&ts, &ns);
    outcome(
        flat <= 0.10 && (slope - 2.0).abs() <= 0.1,
        format!(
            "#Γ_T/T² at 400 vs 800 differ by {flat:.2e} (tol 0.10), slope {slope:.4} (2 ± 0.1)"
        ),
    )
}

// 9 ----------------------------------------------------------------------

fn torus_json(
    x0: [f64; 2],
    frequencies: serde_json::Value,
    bound: &str,
    value: f64,
) -> serde_json::Value {
    let mut s = serde_json::json!({
        "name": "torus",
        "x0": x0,
        "frequencies": frequencies,
        "norm": {"kind": "entrywise", "dim": 2, "p": 2.0},
        "schedule": [75.0, 150.0, 300.0]
    });
    s[bound] = serde_json::json!(value);
    serde_json::json!({"schema_version": 1, "scenario": s})
}

fn torus() -> Outcome {
    let m = run_inline(torus_json(
        [SQRT_2 - 1.0, 3f64.sqrt() - 1.0],
        serde_json::json!([[1, 0]]),
        "max_weyl",
        0.05,
    ));
    let w = check_value(&m, "W(1,0)-max");
    let m = run_inline(torus_json(
        [0.0, 0.0],
        serde_json::json!([[1, 0]]),
        "min_weyl",
        0.5,
    ));
    let control = check_value(&m, "W(1,0)-min");
    outcome(
        w <= 0.05 && control > 0.5,
        format!("|W(1,0)(300)| = {w:.2e} (tol 0.05), rational control {control:.3} (> 0.5)"),
    )
}

// 10 ---------------------------------------------------------------------

fn exp_ball_shape() -> Outcome {
    let shape: Vec<f64> = (0..=8)
        .map(|k| {
            let t = 20.0 + 2.5 * k as f64;
            exp_ball_integral(&[1.0, 0.0], 2, t).unwrap() / (t.sqrt() * t.exp())
        })
        .collect();
    let (lo, hi) = shape
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    let spread = hi / lo - 1.0;
    let r1 = [0.5, 1.0, 5.0, 20.0, 40.0]
        .iter()
        .map(|&t: &f64| rel(exp_ball_integral(&[1.0], 1, t).unwrap(), 2.0 * t.sinh()))
        .fold(0.0f64, f64::max);
    outcome(
        spread < 0.05 && r1 <= 1e-9,
        format!("spread over [20, 40] {spread:.2e} (< 0.05), r = 1 error {r1:.1e} (1e-9)"),
    )
}

// 11 ---------------------------------------------------------------------

fn nonbalanced() -> Outcome {
    let gs = GroupSpec::SL2xSL2Tensor { l: 3 };
    let window = ChamberWindow { coord: 1, max: 2.0 };
    let mut mins = Vec::new();
    for p in [1.0, 2.0] {
        let m = [1e3, 1e4]
            .iter()
            .map(|&t| {
                let spec = SkewBallSpec::ball(gs, NormSpec::entrywise(6, p), t);
                haar_volume_windowed(&spec, Method::Quadrature { k_nodes: 6 }, window)
                    .unwrap()
                    .fraction
            })
            .fold(f64::INFINITY, f64::min);
        mins.push(m);
    }
    let verdicts: Vec<bool> = mins.iter().map(|&m| m > 0.1).collect();
    outcome(
        verdicts.iter().all(|&v| v) && verdicts[0] == verdicts[1],
        format!(
            "min fraction over T ∈ [1e3, 1e4]: 1-norm {:.3}, 2-norm {:.3} (> 0.1 under both)",
            mins[0], mins[1]
        ),
    )
}

// 12 ---------------------------------------------------------------------

fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

fn norms(dim: usize) -> Vec<NormSpec> {
    vec![
        NormSpec::frobenius(dim),
        NormSpec::max_entry(dim),
        NormSpec::entrywise(dim, 1.0),
        NormSpec::entrywise(dim, 3.0),
        NormSpec::max_column(dim, 2.0),
    ]
}

fn norm_axioms() -> Result<(), String> {
    let entries = prop::collection::vec(-10.0f64..10.0, 9);
    runner(128)
        .run(&(entries.clone(), entries, -5.0f64..5.0), |(a, b, s)| {
            let (a, b) = (
                RealMatrix::new(3, a).unwrap(),
                RealMatrix::new(3, b).unwrap(),
            );
            for n in norms(3) {
                let (na, nb) = (n.eval(&a).unwrap(), n.eval(&b).unwrap());
                prop_assert!(na >= 0.0);
                prop_assert!(
                    (n.eval(&a.scale(s)).unwrap() - s.abs() * na).abs() <= 1e-9 * (1.0 + na)
                );
                prop_assert!(n.eval(&(&a + &b)).unwrap() <= (na + nb) * (1.0 + 1e-12) + 1e-12);
            }
            prop_assert_eq!(
                NormSpec::frobenius(3)
                    .eval(&RealMatrix::identity(3).scale(0.0))
                    .unwrap(),
                0.0
            );
            Ok(())
        })
        .map_err(|e| format!("norm axioms: {e}"))
}

fn alpha_identity() -> Result<(), String> {
    runner(32)
        .run(&(0usize..5), |k| {
            let n = norms(2).swap_remove(k);
            let e = RealMatrix::identity(2);
            let a = limit_ratio_alpha(
                &SkewFamily::Unipotent { norm: n },
                &e,
                &e,
                &DEFAULT_ALPHA_SCHEDULE,
            )
            .unwrap();
            prop_assert!(
                (a.estimate - 1.0).abs() <= 1e-12,
                "α(e, e) = {}",
                a.estimate
            );
            Ok(())
        })
        .map_err(|e| format!("α(e, e): {e}"))?;
    let e3 = RealMatrix::identity(3);
    let a = limit_ratio_alpha(&SkewFamily::Spiral { c: 1.1 }, &e3, &e3, &[1e3, 1e4, 1e5]).unwrap();
    if (a.estimate - 1.0).abs() > 1e-12 {
        return Err(format!("α(e, e) = {} for the spiral family", a.estimate));
    }
    Ok(())
}

fn ymax_interior() -> Result<(), String> {
    let groups = [
        GroupSpec::SLn { n: 2 },
        GroupSpec::SLn { n: 3 },
        GroupSpec::SLn { n: 4 },
        GroupSpec::SOpq { p: 1, q: 2 },
        GroupSpec::SOpq { p: 2, q: 3 },
        GroupSpec::SOpq { p: 2, q: 2 },
        GroupSpec::SOpq { p: 3, q: 4 },
        GroupSpec::SL2xSL2Tensor { l: 3 },
    ];
    for gs in groups {
        let rs = gs.root_system();
        let y = ymax(&rs, &InnerProduct::Standard).map_err(|e| e.to_string())?;
        if !rs.in_chamber(&y, -1e-9) {
            return Err(format!("Y_max {y:?} on the chamber wall for {}", gs.name()));
        }
    }
    Ok(())
}

fn chart_independence() -> Result<(), String> {
    let coord = prop_oneof![-3.0f64..-0.2, 0.2f64..3.0];
    let vec2 = (coord.clone(), coord);
    runner(12)
        .run(&(vec2.clone(), vec2), |((v0, v1), (w0, w1))| {
            let (v, w) = ([v0, v1], [w0, w1]);
            let n = NormSpec::entrywise(2, 3.0);
            let s = [1e3, 1e4, 1e5];
            let base = numeric_alpha_chart(&v, &w, &n, &s, (Chart::First, Chart::First)).unwrap();
            for charts in [
                (Chart::First, Chart::Second),
                (Chart::Second, Chart::First),
                (Chart::Second, Chart::Second),
            ] {
                let a = numeric_alpha_chart(&v, &w, &n, &s, charts).unwrap();
                prop_assert!(rel(a, base) <= 1e-6, "{charts:?}: {a} vs {base}");
            }
            Ok(())
        })
        .map_err(|e| format!("chart independence: {e}"))
}

fn mc_thread_determinism() -> Result<(), String> {
    let spec = SkewBallSpec::ball(GroupSpec::SLn { n: 3 }, NormSpec::entrywise(3, 1.0), 50.0);
    let method = Method::MonteCarlo {
        samples: 96,
        seed: 11,
    };
    let mut vals = Vec::new();
    for threads in [1, 2, 4] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| e.to_string())?;
        let v = pool
            .install(|| haar_volume(&spec, method))
            .map_err(|e| e.to_string())?;
        vals.push((v.value.to_bits(), v.stderr.to_bits()));
    }
    if vals.windows(2).all(|w| w[0] == w[1]) {
        Ok(())
    } else {
        Err(format!(
            "MC estimates differ across thread counts: {vals:?}"
        ))
    }
}

fn property_suites() -> Outcome {
    let suites: [(&str, Suite); 5] = [
        ("norm axioms", norm_axioms),
        ("α(e,e) = 1", alpha_identity),
        ("Y_max interior", ymax_interior),
        ("chart independence", chart_independence),
        ("MC thread determinism", mc_thread_determinism),
    ];
    let failures: Vec<String> = suites.iter().filter_map(|(_, f)| f().err()).collect();
    let names: Vec<&str> = suites.iter().map(|s| s.0).collect();
    if failures.is_empty() {
        outcome(true, format!("{} with zero violations", names.join(", ")))
    } else {
        outcome(false, failures.join("; "))
    }
}

// ------------------------------------------------------------------------

#[test]
fn acceptance() {
    let criteria: [(&str, Criterion); 12] = [
        ("closed-form chamber volume", closed_form_volume),
        ("asymptotic constant pipeline", constant_pipeline),
        ("SO(p,q) exponents and condition G", sopq_exponents),
        ("spiral counterexample", spiral_counterexample),
        ("Ledrappier equidistribution", ledrappier),
        ("density cross-validation", density_grid),
        ("enumeration oracle", enumeration_oracle),
        ("I2 counting trend", i2_trend),
        ("torus Weyl sums", torus),
        ("exponential ball shape", exp_ball_shape),
        ("non-balanced witness", nonbalanced),
        ("property suites", property_suites),
    ];
    let mut failed = Vec::new();
    let mut out = std::io::stdout().lock();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        let tag = if o.passed { "PASS" } else { "FAIL" };
        writeln!(
            out,
            "{tag} criterion {:>2} {name}: {} [{:.2?}]",
            i + 1,
            o.detail,
            start.elapsed()
        )
        .unwrap();
        if !o.passed {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
