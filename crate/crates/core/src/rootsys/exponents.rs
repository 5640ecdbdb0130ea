use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::{int, pair, solve, to_f64, GroupSpec, Rat, RootSystemData};
use crate::error::{Error, Result};
use crate::matgroup::RealMatrix;

/// ρ = ½ Σ_{α∈Φ⁺} m_α α.
pub fn rho(rs: &RootSystemData) -> Vec<Rat> {
    let mut out = vec![Rat::zero(); rs.rank];
    for root in &rs.positive_roots {
        for (o, c) in out.iter_mut().zip(&root.covector) {
            *o += c * int(root.multiplicity as i64);
        }
    }
    out.iter().map(|x| x / int(2)).collect()
}

/// Dual basis of the simple roots, rescaled so that 2ρ(β_i) = 1.
pub fn rescaled_basis(rs: &RootSystemData) -> Result<Vec<Vec<Rat>>> {
    let r = rs.rank;
    let two_rho: Vec<Rat> = rho(rs).iter().map(|x| x * int(2)).collect();
    let a: Vec<Vec<Rat>> = (0..r).map(|i| rs.simple(i).to_vec()).collect();
    let mut out = Vec::with_capacity(r);
    for j in 0..r {
        let rhs: Vec<Rat> = (0..r).map(|i| int((i == j) as i64)).collect();
        let dual = solve(a.clone(), rhs).ok_or(Error::SingularCartanMatrix)?;
        let norm = pair(&two_rho, &dual);
        if norm <= Rat::zero() {
            return Err(Error::SingularCartanMatrix);
        }
        out.push(dual.iter().map(|x| x / norm).collect());
    }
    Ok(out)
}

/// Power of log T in the volume growth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogPower {
    Known(u32),
    Unknown,
}

/// Exponents (m₁, m = 1/m₁, ℓ) and condition G.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthExponents {
    pub m1: Rat,
    pub m: Rat,
    pub ell: LogPower,
    pub condition_g: bool,
    /// λ₁(β_i) in the natural order of the simple roots.
    pub values: Vec<Rat>,
    /// Permutation of β indices with an argmin of λ₁(β_i) first.
    pub order: Vec<usize>,
    /// Second smallest value, if rank ≥ 2.
    pub m2: Option<Rat>,
}

pub fn growth_exponents(gs: &GroupSpec) -> GrowthExponents {
    let rs = gs.root_system();
    let ws = gs.weight_system();
    let beta = rescaled_basis(&rs).expect("supported root data is nonsingular");
    let values: Vec<Rat> = beta.iter().map(|b| pair(ws.highest(), b)).collect();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].cmp(&values[b]).then(a.cmp(&b)));
    let m1 = values[order[0]];
    let m2 = order.get(1).map(|&i| values[i]);
    let condition_g = m2.map_or(true, |v| v > m1);
    let ell = if condition_g && gs.is_irreducible() {
        LogPower::Known(0)
    } else if matches!(*gs, GroupSpec::SOpq { p, q } if p == q) {
        LogPower::Known(1)
    } else {
        LogPower::Unknown
    };
    GrowthExponents {
        m1,
        m: Rat::one() / m1,
        ell,
        condition_g,
        values,
        order,
        m2,
    }
}

/// Root, weight and exponent data expressed in the rescaled coordinates t_i.
///
/// A point of the chamber is Y = Σ t_i β_i with t_i ≥ 0, and every root or
/// weight becomes a linear form in t.
#[derive(Clone, Debug)]
pub struct ChamberCoords {
    pub group: GroupSpec,
    pub rank: usize,
    pub beta: Vec<Vec<Rat>>,
    /// α(β_i) for each positive root, with multiplicity.
    pub roots_t: Vec<(Vec<Rat>, u32)>,
    /// λ_k(β_i) for each weight k.
    pub weights_t: Vec<Vec<Rat>>,
    pub weights_f: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
    pub exps: GrowthExponents,
}

impl ChamberCoords {
    pub fn new(gs: &GroupSpec) -> Result<Self> {
        gs.validate()?;
        let rs = gs.root_system();
        let ws = gs.weight_system();
        let beta = rescaled_basis(&rs)?;
        let lin = |cov: &[Rat]| -> Vec<Rat> { beta.iter().map(|b| pair(cov, b)).collect() };
        let roots_t = rs
            .positive_roots
            .iter()
            .map(|r| (lin(&r.covector), r.multiplicity))
            .collect();
        let weights_t: Vec<Vec<Rat>> = ws.weights.iter().map(|w| lin(&w.covector)).collect();
        let weights_f = weights_t
            .iter()
            .map(|w| w.iter().map(to_f64).collect())
            .collect();
        Ok(Self {
            group: *gs,
            rank: rs.rank,
            beta,
            roots_t,
            weights_t,
            weights_f,
            assignment: ws.assignment,
            exps: growth_exponents(gs),
        })
    }

    pub fn dim(&self) -> usize {
        self.assignment.len()
    }

    /// Diagonal of Ψ(exp Σ t_i β_i).
    pub fn rep_diag_t(&self, t: &[f64], out: &mut [f64]) {
        for (j, &k) in self.assignment.iter().enumerate() {
            let e: f64 = self.weights_f[k].iter().zip(t).map(|(a, b)| a * b).sum();
            out[j] = e.exp();
        }
    }

    /// log of the largest diagonal entry, i.e. λ₁(Y).
    pub fn highest_t(&self, t: &[f64]) -> f64 {
        let hi = &self.weights_f[0];
        hi.iter().zip(t).map(|(a, b)| a * b).sum()
    }

    /// Y in s-coordinates.
    pub fn to_s(&self, t: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rank];
        for (ti, b) in t.iter().zip(&self.beta) {
            for (yk, bk) in y.iter_mut().zip(b) {
                *yk += ti * to_f64(bk);
            }
        }
        y
    }

    /// Weight indices k with λ_k(β₁) = m₁ (β₁ the argmin direction).
    pub fn top_weights(&self) -> Vec<usize> {
        let b1 = self.exps.order[0];
        (0..self.weights_t.len())
            .filter(|&k| self.weights_t[k][b1] == self.exps.m1)
            .collect()
    }

    /// τ = (t₂,…,t_r) in the reordered basis, lifted to a full t-vector with t₁ = 0.
    pub fn lift_tau(&self, tau: &[f64]) -> Vec<f64> {
        let mut t = vec![0.0; self.rank];
        for (i, &x) in tau.iter().enumerate() {
            t[self.exps.order[i + 1]] = x;
        }
        t
    }
}

/// The diagonal matrix E_τ built from the weight spaces with λ_k(β₁) = m₁.
pub fn e_tau(gs: &GroupSpec, tau: &[f64]) -> Result<RealMatrix> {
    let cc = ChamberCoords::new(gs)?;
    e_tau_cc(&cc, tau)
}

pub(crate) fn e_tau_cc(cc: &ChamberCoords, tau: &[f64]) -> Result<RealMatrix> {
    if !cc.exps.condition_g {
        return Err(Error::ConditionGRequired);
    }
    if tau.len() + 1 != cc.rank {
        return Err(Error::DimMismatch {
            expected: cc.rank - 1,
            got: tau.len(),
        });
    }
    let top = cc.top_weights();
    let t = cc.lift_tau(tau);
    let diag: Vec<f64> = cc
        .assignment
        .iter()
        .map(|&k| {
            if top.contains(&k) {
                cc.weights_f[k]
                    .iter()
                    .zip(&t)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    .exp()
            } else {
                0.0
            }
        })
        .collect();
    Ok(RealMatrix::diag(&diag))
}

/// ξ̂(τ) = (½)^{Σ_{α∉Φ̂} m_α} Π_{α∈Φ̂} (½ − ½e^{−2α(τ̄)})^{m_α} e^{Σ t_i}.
pub fn xi_hat(gs: &GroupSpec, tau: &[f64]) -> Result<f64> {
    let cc = ChamberCoords::new(gs)?;
    xi_hat_cc(&cc, tau)
}

pub(crate) fn xi_hat_cc(cc: &ChamberCoords, tau: &[f64]) -> Result<f64> {
    if !cc.exps.condition_g {
        return Err(Error::ConditionGRequired);
    }
    if tau.len() + 1 != cc.rank {
        return Err(Error::DimMismatch {
            expected: cc.rank - 1,
            got: tau.len(),
        });
    }
    let b1 = cc.exps.order[0];
    let t = cc.lift_tau(tau);
    let mut log_half = 0u32;
    let mut prod = 1.0;
    for (a, m) in &cc.roots_t {
        if a[b1].is_zero() {
            let at: f64 = a.iter().zip(&t).map(|(x, y)| to_f64(x) * y).sum();
            prod *= (0.5 - 0.5 * (-2.0 * at).exp()).powi(*m as i32);
        } else {
            log_half += m;
        }
    }
    Ok(0.5f64.powi(log_half as i32) * prod * tau.iter().sum::<f64>().exp())
}

/// Balancedness of H (depends on the group and representation only).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BalanceVerdict {
    Balanced,
    NotBalanced,
    Unknown,
}

pub fn balanced_verdict(gs: &GroupSpec) -> BalanceVerdict {
    if gs.is_simple() || gs.is_so22_like() {
        return BalanceVerdict::Balanced;
    }
    let ex = growth_exponents(gs);
    if gs.is_irreducible() && ex.condition_g {
        BalanceVerdict::NotBalanced
    } else {
        BalanceVerdict::Unknown
    }
}

#[cfg(test)]
mod tests {
    use super::super::{pair_f, rat};
    use super::*;
    use crate::numeric::substream;
    use rand::Rng;

    fn groups() -> Vec<GroupSpec> {
        vec![
            GroupSpec::SLn { n: 2 },
            GroupSpec::SLn { n: 3 },
            GroupSpec::SLn { n: 4 },
            GroupSpec::SOpq { p: 1, q: 2 },
            GroupSpec::SOpq { p: 2, q: 2 },
            GroupSpec::SOpq { p: 2, q: 3 },
            GroupSpec::SOpq { p: 3, q: 3 },
            GroupSpec::SOpq { p: 3, q: 4 },
            GroupSpec::SOpq { p: 2, q: 4 },
            GroupSpec::SL2xSL2Tensor { l: 2 },
            GroupSpec::SL2xSL2Tensor { l: 3 },
            GroupSpec::SL2xSL2Tensor { l: 4 },
        ]
    }

    #[test]
    fn rho_examples() {
        let sl2 = GroupSpec::SLn { n: 2 }.root_system();
        assert_eq!(rho(&sl2), vec![int(1)]); // 2ρ(s) = 2s
        for (p, q) in [(1, 2), (2, 3), (3, 4), (2, 4), (3, 3)] {
            let r = rho(&GroupSpec::SOpq { p, q }.root_system());
            for (i, c) in r.iter().enumerate() {
                assert_eq!(
                    c * int(2),
                    int((p + q) as i64 - 2 * (i as i64 + 1)),
                    "SO({p},{q})"
                );
            }
        }
        let t = GroupSpec::SL2xSL2Tensor { l: 3 }.root_system();
        // ½(α₁+α₂) with α_i = 2s_i
        assert_eq!(rho(&t), vec![int(1), int(1)]);
    }

    #[test]
    fn rescaled_basis_examples() {
        let b = rescaled_basis(&GroupSpec::SLn { n: 2 }.root_system()).unwrap();
        assert_eq!(b, vec![vec![rat(1, 2)]]);
        // SO(1,2): α = s with multiplicity 1, ρ = s/2, β̃ = 1 already normalized
        let b = rescaled_basis(&GroupSpec::SOpq { p: 1, q: 2 }.root_system()).unwrap();
        assert_eq!(b, vec![vec![int(1)]]);
        let b = rescaled_basis(&GroupSpec::SL2xSL2Tensor { l: 3 }.root_system()).unwrap();
        // Y_i is the unit vector e_i with α_i(Y_i) = 2; β_i = Y_i/2
        assert_eq!(b, vec![vec![rat(1, 2), int(0)], vec![int(0), rat(1, 2)]]);
    }

    #[test]
    fn rescaled_basis_properties() {
        for g in groups() {
            let rs = g.root_system();
            let beta = rescaled_basis(&rs).unwrap();
            let two_rho: Vec<Rat> = rho(&rs).iter().map(|x| x * int(2)).collect();
            for (j, b) in beta.iter().enumerate() {
                assert_eq!(pair(&two_rho, b), int(1));
                for i in 0..rs.rank {
                    if i != j {
                        assert_eq!(pair(rs.simple(i), b), int(0), "{g:?}");
                    }
                }
            }
            let cc = ChamberCoords::new(&g).unwrap();
            let mut rng = substream(11, 0);
            for _ in 0..100 {
                let t: Vec<f64> = (0..rs.rank).map(|_| rng.random::<f64>() * 10.0).collect();
                let y = cc.to_s(&t);
                let lhs = pair_f(&two_rho, &y);
                assert!((lhs - t.iter().sum::<f64>()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn highest_weight_dominates_on_chamber() {
        for g in groups() {
            let cc = ChamberCoords::new(&g).unwrap();
            let ws = g.weight_system();
            let mut rng = substream(5, 1);
            for _ in 0..1000 {
                let t: Vec<f64> = (0..cc.rank).map(|_| rng.random::<f64>() * 5.0).collect();
                let y = cc.to_s(&t);
                let top = pair_f(ws.highest(), &y);
                for w in &ws.weights {
                    assert!(top >= pair_f(&w.covector, &y) - 1e-12, "{g:?}");
                }
            }
        }
    }

    #[test]
    fn so_pq_exponents() {
        for (p, q) in [(1usize, 2usize), (2, 3), (3, 4), (2, 4), (1, 5)] {
            let e = growth_exponents(&GroupSpec::SOpq { p, q });
            assert_eq!(e.m, int((p * (q - 1)) as i64));
            assert_eq!(e.m1, rat(1, (p * (q - 1)) as i64));
            assert!(e.condition_g);
            assert_eq!(e.ell, LogPower::Known(0));
            // the minimizing direction comes first in `order`
            assert_eq!(e.values[e.order[0]], e.m1);
        }
        for p in [2usize, 3] {
            let e = growth_exponents(&GroupSpec::SOpq { p, q: p });
            assert!(!e.condition_g);
            assert_eq!(e.ell, LogPower::Known(1));
            assert_eq!(e.m, int((p * (p - 1)) as i64));
        }
    }

    #[test]
    fn so_pq_intermediate_values() {
        // λ₁(β_k) = 1/(k(p+q−k−1)) for k < p
        let (p, q) = (3usize, 5usize);
        let e = growth_exponents(&GroupSpec::SOpq { p, q });
        for k in 1..p {
            assert_eq!(e.values[k - 1], rat(1, (k * (p + q - k - 1)) as i64));
        }
    }

    #[test]
    fn tensor_exponents() {
        for l in [3usize, 4, 5] {
            let e = growth_exponents(&GroupSpec::SL2xSL2Tensor { l });
            assert_eq!(e.values, vec![rat(1, 2), rat(l as i64 - 1, 2)]);
            assert_eq!(e.m1, rat(1, 2));
            assert!(e.condition_g);
        }
        assert!(!growth_exponents(&GroupSpec::SL2xSL2Tensor { l: 2 }).condition_g);
        // standard representation of SL(n): growth T^{n²−n}
        for n in 2..6usize {
            let e = growth_exponents(&GroupSpec::SLn { n });
            assert!(e.condition_g);
            assert_eq!(e.m, int((n * n - n) as i64));
        }
    }

    #[test]
    fn e_tau_examples() {
        let e = e_tau(&GroupSpec::SLn { n: 2 }, &[]).unwrap();
        assert_eq!(e, RealMatrix::diag(&[1.0, 0.0]));
        // oracle: enumerate weights i·s₁ + j·s₂ and mark those with λ(β₁) = ½
        let l = 3usize;
        let e = e_tau(&GroupSpec::SL2xSL2Tensor { l }, &[0.0]).unwrap();
        let mut want = Vec::new();
        for i in [1i64, -1] {
            for _ in 0..l {
                // weight i·s₁ + j·s₂ has λ(β₁) = i/2, which equals m₁ = ½ iff i = 1
                want.push(if rat(i, 2) == rat(1, 2) { 1.0 } else { 0.0 });
            }
        }
        assert_eq!(e, RealMatrix::diag(&want));
        let e = e_tau(&GroupSpec::SL2xSL2Tensor { l }, &[1.5]).unwrap();
        // λ(β₂) = j/2 for j = 2, 0, −2
        let got: Vec<f64> = (0..6).map(|i| e.get(i, i)).collect();
        let want = [1.5f64.exp(), 1.0, (-1.5f64).exp(), 0.0, 0.0, 0.0];
        for (a, b) in got.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(
            e_tau(&GroupSpec::SOpq { p: 2, q: 2 }, &[0.0]),
            Err(Error::ConditionGRequired)
        );
    }

    #[test]
    fn e_tau_entries_at_least_one_for_nonnegative_tau() {
        for g in [
            GroupSpec::SOpq { p: 2, q: 3 },
            GroupSpec::SOpq { p: 3, q: 4 },
            GroupSpec::SL2xSL2Tensor { l: 4 },
        ] {
            let r = g.rank();
            let tau = vec![0.0; r - 1];
            let e = e_tau(&g, &tau).unwrap();
            for i in 0..e.dim() {
                let v = e.get(i, i);
                assert!(v == 0.0 || v == 1.0);
            }
        }
    }

    #[test]
    fn xi_hat_examples() {
        assert_eq!(xi_hat(&GroupSpec::SLn { n: 2 }, &[]).unwrap(), 0.5);
        let g = GroupSpec::SOpq { p: 2, q: 3 };
        assert_eq!(xi_hat(&g, &[0.0]).unwrap(), 0.0);
        for t in [0.1, 1.0, 4.0] {
            let v = xi_hat(&g, &[t]).unwrap();
            assert!(v > 0.0 && v <= t.exp());
        }
        // no root of the tensor family vanishes on β₁ except α₂
        let v = xi_hat(&GroupSpec::SL2xSL2Tensor { l: 3 }, &[2.0]).unwrap();
        let want = 0.5 * (0.5 - 0.5 * (-4.0f64).exp()) * 2f64.exp();
        assert!((v - want).abs() < 1e-14);
    }

    #[test]
    fn balance() {
        assert_eq!(
            balanced_verdict(&GroupSpec::SOpq { p: 1, q: 2 }),
            BalanceVerdict::Balanced
        );
        assert_eq!(
            balanced_verdict(&GroupSpec::SOpq { p: 2, q: 2 }),
            BalanceVerdict::Balanced
        );
        assert_eq!(
            balanced_verdict(&GroupSpec::SLn { n: 3 }),
            BalanceVerdict::Balanced
        );
        for l in 3..6 {
            assert_eq!(
                balanced_verdict(&GroupSpec::SL2xSL2Tensor { l }),
                BalanceVerdict::NotBalanced
            );
        }
        assert_eq!(
            balanced_verdict(&GroupSpec::SL2xSL2Tensor { l: 2 }),
            BalanceVerdict::Balanced
        );
    }
}
