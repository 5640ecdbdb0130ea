use std::collections::BTreeMap;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::rootsys::{pair_f, to_f64, ChamberCoords, Rat, RootSystemData};

/// ξ(Y) = Π_{α∈Φ⁺} sinh^{m_α}(α(Y)) for Y in the closed chamber.
pub fn xi(rs: &RootSystemData, y: &[f64]) -> Result<f64> {
    if y.len() != rs.rank {
        return Err(Error::DimMismatch {
            expected: rs.rank,
            got: y.len(),
        });
    }
    if !rs.in_chamber(y, 1e-12) {
        return Err(Error::OutsideChamber);
    }
    Ok(rs
        .positive_roots
        .iter()
        .map(|r| {
            pair_f(&r.covector, y)
                .max(0.0)
                .sinh()
                .powi(r.multiplicity as i32)
        })
        .product())
}

/// ξ written as a finite sum Σ c_k e^{⟨e_k, t⟩} in chamber coordinates t.
#[derive(Clone, Debug)]
pub struct ExpPoly {
    pub terms: Vec<(Vec<f64>, f64)>,
}

impl ExpPoly {
    pub fn xi(cc: &ChamberCoords) -> Self {
        let mut acc: BTreeMap<Vec<Rat>, f64> = BTreeMap::new();
        acc.insert(vec![Rat::zero(); cc.rank], 1.0);
        for (a, m) in &cc.roots_t {
            for _ in 0..*m {
                let mut next = BTreeMap::new();
                for (e, c) in &acc {
                    for s in [1i64, -1] {
                        let k: Vec<Rat> =
                            e.iter().zip(a).map(|(x, y)| x + y * Rat::from(s)).collect();
                        *next.entry(k).or_insert(0.0) += 0.5 * s as f64 * c;
                    }
                }
                acc = next;
            }
        }
        let terms = acc
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(e, c)| (e.iter().map(to_f64).collect(), c))
            .collect();
        Self { terms }
    }

    pub fn eval(&self, t: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(t).map(|(a, b)| a * b).sum::<f64>().exp())
            .sum()
    }

    /// ∫_u^v ξ(t + s·e_i) ds where `t` has t_i = 0.
    pub fn integrate_along(&self, t: &[f64], i: usize, u: f64, v: f64) -> f64 {
        if !(v > u) {
            return 0.0;
        }
        self.terms
            .iter()
            .map(|(e, c)| {
                let rest: f64 = e.iter().zip(t).map(|(a, b)| a * b).sum();
                let k = e[i];
                if k == 0.0 {
                    c * rest.exp() * (v - u)
                } else {
                    c * (k * u + rest).exp() * (k * (v - u)).exp_m1() / k
                }
            })
            .sum()
    }
}

/// ξ in chamber coordinates, evaluated directly from the root forms.
pub fn xi_t(cc: &ChamberCoords, t: &[f64]) -> f64 {
    cc.roots_t
        .iter()
        .map(|(a, m)| {
            let x: f64 = a.iter().zip(t).map(|(p, q)| to_f64(p) * q).sum();
            x.max(0.0).sinh().powi(*m as i32)
        })
        .product()
}
