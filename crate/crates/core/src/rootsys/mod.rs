//! Restricted root data, weights and growth exponents for the supported groups.
//!
//! Covectors on `a` are stored in the coordinates `s₁,…,s_r` of each family and
//! paired with exact rationals; floating point appears only after exponentiation.

mod exponents;
mod group;

pub use exponents::{
    balanced_verdict, e_tau, growth_exponents, rescaled_basis, rho, xi_hat, BalanceVerdict,
    ChamberCoords, GrowthExponents, LogPower,
};
pub(crate) use exponents::{e_tau_cc, xi_hat_cc};
pub use group::{sym_power, CompactKind, GroupSpec};

use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

pub type Rat = Rational64;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(n, d)
}

pub fn int(n: i64) -> Rat {
    Rat::from_integer(n)
}

/// Exact pairing of a covector with a vector.
pub fn pair(cov: &[Rat], v: &[Rat]) -> Rat {
    cov.iter()
        .zip(v)
        .fold(Rat::zero(), |acc, (a, b)| acc + a * b)
}

/// Pairing of an exact covector with a real vector.
pub fn pair_f(cov: &[Rat], y: &[f64]) -> f64 {
    cov.iter().zip(y).map(|(a, b)| to_f64(a) * b).sum()
}

pub fn to_f64(q: &Rat) -> f64 {
    q.to_f64().expect("rational fits in f64")
}

/// A positive restricted root with its multiplicity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Root {
    pub covector: Vec<Rat>,
    pub multiplicity: u32,
}

/// Positive roots Φ⁺ with multiplicities and a choice of simple roots Δ.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RootSystemData {
    pub rank: usize,
    pub positive_roots: Vec<Root>,
    /// Indices into `positive_roots` of α₁,…,α_r.
    pub simple_roots: Vec<usize>,
}

impl RootSystemData {
    /// Validates linear independence of Δ and that Φ⁺ ⊂ ℕΔ.
    pub fn new(rank: usize, positive_roots: Vec<Root>, simple_roots: Vec<usize>) -> Result<Self> {
        if simple_roots.len() != rank {
            return Err(Error::InvalidInput("need exactly rank simple roots".into()));
        }
        let rs = Self {
            rank,
            positive_roots,
            simple_roots,
        };
        for root in &rs.positive_roots {
            if root.covector.len() != rank || root.multiplicity == 0 {
                return Err(Error::InvalidInput("malformed root".into()));
            }
            let coeffs = rs.simple_coordinates(&root.covector)?;
            if coeffs.iter().any(|c| c.is_negative() || !c.is_integer()) {
                return Err(Error::InvalidInput(
                    "positive root is not a nonnegative integer combination of simple roots".into(),
                ));
            }
        }
        Ok(rs)
    }

    pub fn simple(&self, i: usize) -> &[Rat] {
        &self.positive_roots[self.simple_roots[i]].covector
    }

    /// Coefficients of a covector in the basis of simple roots.
    pub fn simple_coordinates(&self, cov: &[Rat]) -> Result<Vec<Rat>> {
        // Σ c_i α_i = cov  ⇔  (columns α_i) c = cov
        let r = self.rank;
        let a: Vec<Vec<Rat>> = (0..r)
            .map(|row| (0..r).map(|i| self.simple(i)[row]).collect())
            .collect();
        solve(a, cov.to_vec()).ok_or(Error::SingularCartanMatrix)
    }

    /// True when every simple root is ≥ −tol on `y`.
    pub fn in_chamber(&self, y: &[f64], tol: f64) -> bool {
        (0..self.rank).all(|i| pair_f(self.simple(i), y) >= -tol)
    }
}

/// A weight with its multiplicity in the representation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Weight {
    pub covector: Vec<Rat>,
    pub multiplicity: u32,
}

/// Weights of a representation, the basis-to-weight map and the highest weight.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightSystem {
    pub weights: Vec<Weight>,
    /// Basis index j ↦ index k of the weight space containing E_j.
    pub assignment: Vec<usize>,
    pub highest_index: usize,
}

impl WeightSystem {
    pub fn dim(&self) -> usize {
        self.assignment.len()
    }

    pub fn highest(&self) -> &[Rat] {
        &self.weights[self.highest_index].covector
    }
}

/// Solves `a x = b` over ℚ by Gaussian elimination; `None` when singular.
pub fn solve(mut a: Vec<Vec<Rat>>, mut b: Vec<Rat>) -> Option<Vec<Rat>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).find(|&i| !a[i][k].is_zero())?;
        a.swap(k, p);
        b.swap(k, p);
        let piv = a[k][k];
        for j in k..n {
            a[k][j] /= piv;
        }
        b[k] /= piv;
        for i in 0..n {
            if i != k && !a[i][k].is_zero() {
                let f = a[i][k];
                for j in k..n {
                    let v = a[k][j];
                    a[i][j] -= f * v;
                }
                let v = b[k];
                b[i] -= f * v;
            }
        }
    }
    debug_assert!(a.iter().enumerate().all(|(i, row)| row[i].is_one()));
    Some(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_solve() {
        let a = vec![vec![int(2), int(1)], vec![int(1), int(3)]];
        let x = solve(a, vec![int(3), int(5)]).unwrap();
        assert_eq!(x, vec![rat(4, 5), rat(7, 5)]);
        let sing = vec![vec![int(1), int(2)], vec![int(2), int(4)]];
        assert!(solve(sing, vec![int(1), int(1)]).is_none());
    }

    #[test]
    fn dependent_simple_roots_rejected() {
        let r = |c: Vec<Rat>| Root {
            covector: c,
            multiplicity: 1,
        };
        let err = RootSystemData::new(
            2,
            vec![r(vec![int(1), int(0)]), r(vec![int(2), int(0)])],
            vec![0, 1],
        );
        assert_eq!(err, Err(Error::SingularCartanMatrix));
    }
}
