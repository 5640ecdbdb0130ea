use std::io::Write;

use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matgroup::{DistanceFunction, ExactMatrix};

/// Default cap on enumerated candidate tuples.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeFamily {
    /// Integer matrices with determinant 1.
    Sl,
    /// Integer matrices with determinant ±1.
    DetPm1,
}

/// SL(d,ℤ) or the determinant ±1 integer matrices, for d ∈ {2, 3}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub family: LatticeFamily,
    pub dim: usize,
}

impl LatticeSpec {
    pub fn sl(dim: usize) -> Self {
        Self {
            family: LatticeFamily::Sl,
            dim,
        }
    }

    pub fn det_pm1(dim: usize) -> Self {
        Self {
            family: LatticeFamily::DetPm1,
            dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 2 || self.dim == 3 {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "lattice dimension {} not in {{2, 3}}",
                self.dim
            )))
        }
    }

    /// Exact membership test.
    pub fn contains(&self, m: &ExactMatrix) -> Result<bool> {
        if m.dim() != self.dim {
            return Ok(false);
        }
        let det = m.det()?;
        Ok(match self.family {
            LatticeFamily::Sl => det == 1,
            LatticeFamily::DetPm1 => det.abs() == 1,
        })
    }

    fn targets(&self) -> &'static [i64] {
        match self.family {
            LatticeFamily::Sl => &[1],
            LatticeFamily::DetPm1 => &[1, -1],
        }
    }
}

/// The finite set Γ_T = {γ ∈ Γ : D(γ) < T}, sorted lexicographically.
#[derive(Clone, Debug)]
pub struct BallEnumeration {
    pub lattice: LatticeSpec,
    pub distance: DistanceFunction,
    pub threshold: f64,
    pub elements: Vec<ExactMatrix>,
    /// Candidate tuples examined by the search.
    pub candidates: u64,
}

impl BallEnumeration {
    pub fn count(&self) -> u64 {
        self.elements.len() as u64
    }

    /// One matrix per line, row-major entries, with a header.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        let d = self.lattice.dim;
        let header: Vec<String> = (0..d * d)
            .map(|k| format!("a{}{}", k / d + 1, k % d + 1))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for m in &self.elements {
            let row: Vec<String> = m.entries().iter().map(|x| x.to_string()).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Cardinality of an enumerated ball.
pub fn gamma_count(b: &BallEnumeration) -> u64 {
    b.count()
}

/// Largest absolute entry any element of the ball can have.
pub fn entry_bound(d: &DistanceFunction, t: f64) -> i64 {
    (d.norm.entry_bound() * t).floor() as i64
}

fn check_inputs(l: &LatticeSpec, d: &DistanceFunction) -> Result<()> {
    l.validate()?;
    d.norm.validate()?;
    if d.norm.dim() != l.dim {
        return Err(Error::DimMismatch {
            expected: l.dim,
            got: d.norm.dim(),
        });
    }
    Ok(())
}

/// Predicted number of candidate tuples for the search at threshold `t`.
pub fn predicted_candidates(l: &LatticeSpec, d: &DistanceFunction, t: f64) -> u64 {
    let b = entry_bound(d, t).max(0) as f64;
    let mult = if l.family == LatticeFamily::DetPm1 {
        2.0
    } else {
        1.0
    };
    match l.dim {
        // Σ over primitive first rows of (2B+1)/max(|a|,|b|) ≈ 10 B²
        2 => (mult * (10.0 * b * b + 16.0 * b + 8.0)) as u64,
        // the column lists alone need (2B+1)³ work
        _ => ((2.0 * b + 1.0).powi(3)) as u64,
    }
}

/// Streams every γ ∈ Γ_T through `visit`, folding per search stratum.
///
/// Strata are processed in parallel; their results are combined with
/// `merge` in stratum order, so the output does not depend on the number
/// of worker threads.
pub fn fold_ball<R, I, V, M>(
    l: &LatticeSpec,
    d: &DistanceFunction,
    t: f64,
    cap: u64,
    init: I,
    visit: V,
    merge: M,
) -> Result<(R, u64)>
where
    R: Send,
    I: Fn() -> R + Sync,
    V: Fn(&mut R, &[i64]) + Sync,
    M: Fn(R, R) -> R,
{
    check_inputs(l, d)?;
    let predicted = predicted_candidates(l, d, t);
    if predicted > cap {
        return Err(Error::BudgetExceeded { predicted, cap });
    }
    if t <= 1.0 {
        return Ok((init(), 0));
    }
    let parts: Vec<(R, u64)> = match l.dim {
        2 => fold_dim2(l, d, t, &init, &visit),
        _ => fold_dim3(l, d, t, cap, &init, &visit)?,
    };
    let mut total = 0u64;
    let mut acc = init();
    for (r, c) in parts {
        acc = merge(acc, r);
        total += c;
    }
    Ok((acc, total))
}

/// Enumerates Γ_T exactly; fails with `BudgetExceeded` above the cap.
pub fn enumerate_ball(l: &LatticeSpec, d: &DistanceFunction, t: f64) -> Result<BallEnumeration> {
    enumerate_ball_with_cap(l, d, t, DEFAULT_BUDGET)
}

pub fn enumerate_ball_with_cap(
    l: &LatticeSpec,
    d: &DistanceFunction,
    t: f64,
    cap: u64,
) -> Result<BallEnumeration> {
    let dim = l.dim;
    let (flat, candidates) = fold_ball(
        l,
        d,
        t,
        cap,
        Vec::<i64>::new,
        |acc, m| acc.extend_from_slice(m),
        |mut a, b| {
            a.extend(b);
            a
        },
    )?;
    let mut elements: Vec<ExactMatrix> = flat
        .chunks_exact(dim * dim)
        .map(|c| ExactMatrix::new(dim, c.to_vec()).expect("square chunk"))
        .collect();
    elements.sort_unstable();
    Ok(BallEnumeration {
        lattice: *l,
        distance: d.clone(),
        threshold: t,
        elements,
        candidates,
    })
}

/// Extended Euclid: returns (g, x, y) with a·x + b·y = g = gcd(a, b) ≥ 0.
pub fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut r0, mut r1) = (a, b);
    let (mut s0, mut s1) = (1i64, 0i64);
    let (mut t0, mut t1) = (0i64, 1i64);
    while r1 != 0 {
        let q = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 < 0 {
        (-r0, -s0, -t0)
    } else {
        (r0, s0, t0)
    }
}

fn fdiv(a: i64, b: i64) -> i64 {
    Integer::div_floor(&a, &b)
}

fn cdiv(a: i64, b: i64) -> i64 {
    Integer::div_ceil(&a, &b)
}

/// Inclusive range of k with |c0 + k·a| ≤ bound; `None` if empty.
fn k_range(c0: i64, a: i64, bound: i64) -> Option<(i64, i64)> {
    if a == 0 {
        return (c0.abs() <= bound).then_some((i64::MIN, i64::MAX));
    }
    let (lo, hi) = if a > 0 {
        (cdiv(-bound - c0, a), fdiv(bound - c0, a))
    } else {
        let a = -a;
        (cdiv(c0 - bound, a), fdiv(c0 + bound, a))
    };
    (lo <= hi).then_some((lo, hi))
}

fn fold_dim2<R: Send>(
    l: &LatticeSpec,
    d: &DistanceFunction,
    t: f64,
    init: &(impl Fn() -> R + Sync),
    visit: &(impl Fn(&mut R, &[i64]) + Sync),
) -> Vec<(R, u64)> {
    let bound = entry_bound(d, t);
    let targets = l.targets();
    (-bound..=bound)
        .into_par_iter()
        .map(|a| {
            let mut acc = init();
            let mut candidates = 0u64;
            let mut m = [0i64; 4];
            let mut mf = [0f64; 4];
            for b in -bound..=bound {
                let (g, x, y) = ext_gcd(a, b);
                if g != 1 {
                    continue;
                }
                mf[0] = a as f64;
                mf[1] = b as f64;
                // rows with only the first row filled bound the norm from below
                mf[2] = 0.0;
                mf[3] = 0.0;
                if d.norm.eval_slice(&mf) >= t {
                    continue;
                }
                for &s in targets {
                    // a·d − b·c = s has the solutions (c, d) = s·(−y, x) + k·(a, b)
                    let (c0, d0) = (-y * s, x * s);
                    let Some((k1, k2)) = k_range(c0, a, bound) else {
                        continue;
                    };
                    let Some((k3, k4)) = k_range(d0, b, bound) else {
                        continue;
                    };
                    let (klo, khi) = (k1.max(k3), k2.min(k4));
                    for k in klo..=khi {
                        candidates += 1;
                        let (c, dd) = (c0 + k * a, d0 + k * b);
                        mf[2] = c as f64;
                        mf[3] = dd as f64;
                        if d.norm.eval_slice(&mf) < t {
                            m[0] = a;
                            m[1] = b;
                            m[2] = c;
                            m[3] = dd;
                            visit(&mut acc, &m);
                        }
                    }
                }
            }
            (acc, candidates)
        })
        .collect()
}

fn gcd3(v: &[i64; 3]) -> i64 {
    v[0].gcd(&v[1]).gcd(&v[2])
}

fn cross(a: &[i64; 3], b: &[i64; 3]) -> [i64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn set_col(m: &mut [f64; 9], j: usize, v: &[i64; 3]) {
    for i in 0..3 {
        m[i * 3 + j] = v[i] as f64;
    }
}

fn fold_dim3<R: Send>(
    l: &LatticeSpec,
    d: &DistanceFunction,
    t: f64,
    cap: u64,
    init: &(impl Fn() -> R + Sync),
    visit: &(impl Fn(&mut R, &[i64]) + Sync),
) -> Result<Vec<(R, u64)>> {
    let bound = entry_bound(d, t);
    // primitive vectors admissible as column j on their own
    let cols: Vec<Vec<[i64; 3]>> = (0..3)
        .map(|j| {
            let mut out = Vec::new();
            let mut mf = [0f64; 9];
            for x in -bound..=bound {
                for y in -bound..=bound {
                    for z in -bound..=bound {
                        let v = [x, y, z];
                        if gcd3(&v) != 1 {
                            continue;
                        }
                        set_col(&mut mf, j, &v);
                        if d.norm.eval_slice(&mf) < t {
                            out.push(v);
                        }
                    }
                }
            }
            out
        })
        .collect();
    let pairs = cols[0].len() as u64 * cols[1].len() as u64;
    if pairs > cap {
        return Err(Error::BudgetExceeded {
            predicted: pairs,
            cap,
        });
    }
    let targets = l.targets();
    Ok(cols[0]
        .par_iter()
        .map(|c1| {
            let mut acc = init();
            let mut candidates = 0u64;
            let mut mf = [0f64; 9];
            let mut m = [0i64; 9];
            set_col(&mut mf, 0, c1);
            for c2 in &cols[1] {
                candidates += 1;
                set_col(&mut mf, 1, c2);
                set_col(&mut mf, 2, &[0, 0, 0]);
                if d.norm.eval_slice(&mf) >= t {
                    continue;
                }
                let n = cross(c1, c2);
                if gcd3(&n) != 1 {
                    continue;
                }
                for &s in targets {
                    solve_dot(&n, s, bound, |c3| {
                        candidates += 1;
                        set_col(&mut mf, 2, &c3);
                        if d.norm.eval_slice(&mf) < t {
                            for i in 0..3 {
                                m[i * 3] = c1[i];
                                m[i * 3 + 1] = c2[i];
                                m[i * 3 + 2] = c3[i];
                            }
                            visit(&mut acc, &m);
                        }
                    });
                }
            }
            (acc, candidates)
        })
        .collect())
}

/// Calls `f` on every x ∈ [−B, B]³ with n·x = s (gcd(n) = 1 assumed).
fn solve_dot(n: &[i64; 3], s: i64, bound: i64, mut f: impl FnMut([i64; 3])) {
    let k = (0..3).max_by_key(|&i| n[i].abs()).unwrap();
    let (i, j) = ((k + 1) % 3, (k + 2) % 3);
    let nk = n[k];
    let mut x = [0i64; 3];
    for xi in -bound..=bound {
        let r = s - n[i] * xi;
        x[i] = xi;
        if n[j] == 0 {
            if r % nk != 0 {
                continue;
            }
            let xk = r / nk;
            if xk.abs() > bound {
                continue;
            }
            x[k] = xk;
            for xj in -bound..=bound {
                x[j] = xj;
                f(x);
            }
            continue;
        }
        // n_j x_j ≡ r (mod |n_k|)
        let modulus = nk.abs();
        let (g, inv, _) = ext_gcd(n[j], modulus);
        if r.rem_euclid(g) != 0 {
            continue;
        }
        let step = modulus / g;
        let x0 = ((r / g) % step * (inv % step)).rem_euclid(step);
        // |r − n_j x_j| ≤ B|n_k| bounds x_j
        let (lo_a, hi_a) = if n[j] > 0 {
            (
                cdiv(r - bound * modulus, n[j]),
                fdiv(r + bound * modulus, n[j]),
            )
        } else {
            let nj = -n[j];
            (
                cdiv(-r - bound * modulus, nj),
                fdiv(-r + bound * modulus, nj),
            )
        };
        let lo = lo_a.max(-bound);
        let hi = hi_a.min(bound);
        if lo > hi {
            continue;
        }
        let mut xj = lo + (x0 - lo).rem_euclid(step);
        while xj <= hi {
            let rem = r - n[j] * xj;
            debug_assert_eq!(rem % nk, 0);
            let xk = rem / nk;
            if xk.abs() <= bound {
                x[j] = xj;
                x[k] = xk;
                f(x);
            }
            xj += step;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matgroup::NormSpec;

    fn dist(n: NormSpec) -> DistanceFunction {
        DistanceFunction::new(n)
    }

    #[test]
    fn ext_gcd_identity() {
        for a in -20i64..=20 {
            for b in -20i64..=20 {
                let (g, x, y) = ext_gcd(a, b);
                assert_eq!(a * x + b * y, g);
                assert_eq!(g, a.gcd(&b));
            }
        }
    }

    #[test]
    fn k_range_is_exact() {
        for c0 in -9i64..=9 {
            for a in -4i64..=4 {
                let want: Vec<i64> = (-40..=40).filter(|k| (c0 + k * a).abs() <= 5).collect();
                match k_range(c0, a, 5) {
                    None => assert!(want.is_empty()),
                    Some((lo, hi)) if a == 0 => {
                        assert_eq!((lo, hi), (i64::MIN, i64::MAX));
                        assert_eq!(want.len(), 81);
                    }
                    Some((lo, hi)) => assert_eq!(want, (lo..=hi).collect::<Vec<_>>()),
                }
            }
        }
    }

    #[test]
    fn solve_dot_matches_brute_force() {
        let bound = 4;
        for n in [
            [3i64, 5, 7],
            [0, 1, 0],
            [2, -3, 0],
            [-6, 10, 15],
            [1, 1, 1],
            [0, 0, -1],
        ] {
            for s in [1i64, -1] {
                let mut got = Vec::new();
                solve_dot(&n, s, bound, |x| got.push(x));
                got.sort();
                let mut want = Vec::new();
                for x in -bound..=bound {
                    for y in -bound..=bound {
                        for z in -bound..=bound {
                            if n[0] * x + n[1] * y + n[2] * z == s {
                                want.push([x, y, z]);
                            }
                        }
                    }
                }
                assert_eq!(got, want, "n = {n:?}, s = {s}");
            }
        }
    }

    #[test]
    fn max_norm_t_1_5_is_brute_force_set() {
        let b = enumerate_ball(&LatticeSpec::sl(2), &dist(NormSpec::max_entry(2)), 1.5).unwrap();
        let mut want = Vec::new();
        for e in 0..81 {
            let v: Vec<i64> = (0..4).map(|k| (e / 3i64.pow(k)) % 3 - 1).collect();
            if v[0] * v[3] - v[1] * v[2] == 1 {
                want.push(ExactMatrix::new(2, v).unwrap());
            }
        }
        want.sort();
        assert_eq!(b.elements, want);
        assert_eq!(gamma_count(&b), want.len() as u64);
    }

    #[test]
    fn small_thresholds() {
        let d = dist(NormSpec::frobenius(2));
        let l = LatticeSpec::sl(2);
        assert_eq!(gamma_count(&enumerate_ball(&l, &d, 0.5).unwrap()), 0);
        assert_eq!(gamma_count(&enumerate_ball(&l, &d, 1.0).unwrap()), 0);
        let b = enumerate_ball(&l, &d, 2f64.sqrt() + 1e-9).unwrap();
        assert!(b.elements.contains(&ExactMatrix::identity(2)));
        let b3 = enumerate_ball(
            &LatticeSpec::sl(3),
            &dist(NormSpec::frobenius(3)),
            3f64.sqrt() + 1e-9,
        )
        .unwrap();
        assert!(b3.elements.contains(&ExactMatrix::identity(3)));
    }

    #[test]
    fn monotone_and_even() {
        let d = dist(NormSpec::frobenius(2));
        let l = LatticeSpec::sl(2);
        let mut prev: Option<BallEnumeration> = None;
        for t in [1.5, 2.0, 3.0, 4.5, 7.0, 12.0] {
            let b = enumerate_ball(&l, &d, t).unwrap();
            assert_eq!(b.count() % 2, 0);
            for g in &b.elements {
                assert!(b.elements.binary_search(&g.neg().unwrap()).is_ok());
            }
            if let Some(p) = prev {
                assert!(p
                    .elements
                    .iter()
                    .all(|g| b.elements.binary_search(g).is_ok()));
            }
            prev = Some(b);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let d = dist(NormSpec::frobenius(2));
        let err = enumerate_ball_with_cap(&LatticeSpec::sl(2), &d, 100.0, 1000).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { cap: 1000, .. }));
    }

    #[test]
    fn csv_export() {
        let b = enumerate_ball(&LatticeSpec::sl(2), &dist(NormSpec::max_entry(2)), 1.5).unwrap();
        let mut buf = Vec::new();
        b.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("a11,a12,a21,a22\n"));
        assert_eq!(s.lines().count() as u64, b.count() + 1);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let d = dist(NormSpec::frobenius(3));
        assert!(matches!(
            enumerate_ball(&LatticeSpec::sl(2), &d, 3.0),
            Err(Error::DimMismatch { .. })
        ));
        assert!(LatticeSpec::sl(4).validate().is_err());
    }
}
