use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{int, Rat, Root, RootSystemData, Weight, WeightSystem};
use crate::error::{Error, Result};
use crate::matgroup::RealMatrix;

/// Supported semisimple groups together with their representation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "family", deny_unknown_fields)]
pub enum GroupSpec {
    /// SL(n,ℝ) in its standard representation.
    SLn { n: usize },
    /// SO(p,q), 1 ≤ p ≤ q, p+q ≥ 3, standard representation on ℝ^{p+q}.
    SOpq { p: usize, q: usize },
    /// SL(2,ℝ)×SL(2,ℝ) acting on ℝ² ⊗ Sym^{l−1}(ℝ²), dimension 2l.
    SL2xSL2Tensor { l: usize },
}

/// Parametrization available for the maximal compact subgroup K.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CompactKind {
    So2,
    So2xSo2,
    So3,
    Unsupported,
}

impl GroupSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::SLn { n } => n >= 2,
            Self::SOpq { p, q } => p >= 1 && p <= q && p + q >= 3,
            Self::SL2xSL2Tensor { l } => l >= 2,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "invalid group parameters {self:?}"
            )))
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::SLn { n } => format!("SL({n},R)"),
            Self::SOpq { p, q } => format!("SO({p},{q})"),
            Self::SL2xSL2Tensor { l } => format!("SL2xSL2 on 2x{l}"),
        }
    }

    pub fn rank(&self) -> usize {
        match *self {
            Self::SLn { n } => n - 1,
            Self::SOpq { p, .. } => p,
            Self::SL2xSL2Tensor { .. } => 2,
        }
    }

    pub fn rep_dim(&self) -> usize {
        match *self {
            Self::SLn { n } => n,
            Self::SOpq { p, q } => p + q,
            Self::SL2xSL2Tensor { l } => 2 * l,
        }
    }

    pub fn is_simple(&self) -> bool {
        match *self {
            Self::SLn { .. } => true,
            Self::SOpq { p, q } => !(p == 2 && q == 2),
            Self::SL2xSL2Tensor { .. } => false,
        }
    }

    /// All supported representations are irreducible.
    pub fn is_irreducible(&self) -> bool {
        true
    }

    /// Identity component isomorphic to SO(2,2)°, which is balanced.
    pub fn is_so22_like(&self) -> bool {
        matches!(
            *self,
            Self::SOpq { p: 2, q: 2 } | Self::SL2xSL2Tensor { l: 2 }
        )
    }

    pub fn compact_kind(&self) -> CompactKind {
        match *self {
            Self::SLn { n: 2 } => CompactKind::So2,
            Self::SLn { n: 3 } => CompactKind::So3,
            Self::SL2xSL2Tensor { .. } => CompactKind::So2xSo2,
            _ => CompactKind::Unsupported,
        }
    }

    pub fn root_system(&self) -> RootSystemData {
        let r = self.rank();
        let e = |i: usize| -> Vec<Rat> { (0..r).map(|k| int((k == i) as i64)).collect() };
        let sub =
            |a: &[Rat], b: &[Rat]| -> Vec<Rat> { a.iter().zip(b).map(|(x, y)| x - y).collect() };
        let add =
            |a: &[Rat], b: &[Rat]| -> Vec<Rat> { a.iter().zip(b).map(|(x, y)| x + y).collect() };
        let root = |c: Vec<Rat>, m: u32| Root {
            covector: c,
            multiplicity: m,
        };
        let (roots, simple) = match *self {
            Self::SLn { n } => {
                // coordinates y_1..y_{n-1}; y_n = −Σ y_k
                let y = |i: usize| -> Vec<Rat> {
                    if i < n - 1 {
                        e(i)
                    } else {
                        vec![int(-1); r]
                    }
                };
                let mut roots = Vec::new();
                let mut simple = vec![0; r];
                for i in 0..n {
                    for j in i + 1..n {
                        if j == i + 1 {
                            simple[i] = roots.len();
                        }
                        roots.push(root(sub(&y(i), &y(j)), 1));
                    }
                }
                (roots, simple)
            }
            Self::SOpq { p, q } => {
                let mut roots = Vec::new();
                let mut simple = vec![0; p];
                for i in 0..p {
                    for j in i + 1..p {
                        if j == i + 1 {
                            simple[i] = roots.len();
                        }
                        roots.push(root(sub(&e(i), &e(j)), 1));
                    }
                }
                if q > p {
                    for i in 0..p {
                        if i == p - 1 {
                            simple[p - 1] = roots.len();
                        }
                        roots.push(root(e(i), (q - p) as u32));
                    }
                }
                for i in 0..p {
                    for j in i + 1..p {
                        if q == p && i == p - 2 && j == p - 1 {
                            simple[p - 1] = roots.len();
                        }
                        roots.push(root(add(&e(i), &e(j)), 1));
                    }
                }
                (roots, simple)
            }
            Self::SL2xSL2Tensor { .. } => (
                vec![root(vec![int(2), int(0)], 1), root(vec![int(0), int(2)], 1)],
                vec![0, 1],
            ),
        };
        RootSystemData::new(r, roots, simple).expect("hard-coded root data is valid")
    }

    pub fn weight_system(&self) -> WeightSystem {
        let r = self.rank();
        let w = |c: Vec<Rat>, m: u32| Weight {
            covector: c,
            multiplicity: m,
        };
        match *self {
            Self::SLn { n } => {
                let mut weights = Vec::new();
                for i in 0..n {
                    let c = if i < n - 1 {
                        (0..r).map(|k| int((k == i) as i64)).collect()
                    } else {
                        vec![int(-1); r]
                    };
                    weights.push(w(c, 1));
                }
                WeightSystem {
                    weights,
                    assignment: (0..n).collect(),
                    highest_index: 0,
                }
            }
            Self::SOpq { p, q } => {
                let e = |i: usize, s: i64| -> Vec<Rat> {
                    (0..p).map(|k| int(s * (k == i) as i64)).collect()
                };
                let mut weights: Vec<Weight> = (0..p).map(|i| w(e(i, 1), 1)).collect();
                let mut assignment: Vec<usize> = (0..p).collect();
                if q > p {
                    weights.push(w(vec![int(0); p], (q - p) as u32));
                    assignment.extend(std::iter::repeat(p).take(q - p));
                }
                for i in (0..p).rev() {
                    assignment.push(weights.len());
                    weights.push(w(e(i, -1), 1));
                }
                WeightSystem {
                    weights,
                    assignment,
                    highest_index: 0,
                }
            }
            Self::SL2xSL2Tensor { l } => {
                let mut weights = Vec::new();
                for a in 0..2i64 {
                    for b in 0..l as i64 {
                        let i = 1 - 2 * a;
                        let j = l as i64 - 1 - 2 * b;
                        weights.push(w(vec![int(i), int(j)], 1));
                    }
                }
                WeightSystem {
                    weights,
                    assignment: (0..2 * l).collect(),
                    highest_index: 0,
                }
            }
        }
    }

    /// Diagonal of Ψ(exp Y) for Y given in s-coordinates.
    pub fn rep_diag(&self, y: &[f64]) -> Vec<f64> {
        let ws = self.weight_system();
        ws.assignment
            .iter()
            .map(|&k| super::pair_f(&ws.weights[k].covector, y).exp())
            .collect()
    }

    /// Number of real parameters of one K factor in [`Self::compact_element`].
    pub fn compact_params(&self) -> Result<usize> {
        match self.compact_kind() {
            CompactKind::So2 => Ok(1),
            CompactKind::So2xSo2 => Ok(2),
            CompactKind::So3 => Ok(4),
            CompactKind::Unsupported => Err(Error::UnsupportedCompactGroup(self.name())),
        }
    }

    /// Ψ(k) for angles (SO(2), SO(2)×SO(2)) or a unit quaternion (SO(3)).
    pub fn compact_element(&self, params: &[f64]) -> Result<RealMatrix> {
        match (self.compact_kind(), *self) {
            (CompactKind::So2, _) => Ok(RealMatrix::rotation2(params[0])),
            (CompactKind::So2xSo2, Self::SL2xSL2Tensor { l }) => {
                Ok(RealMatrix::rotation2(params[0])
                    .kron(&sym_power(&RealMatrix::rotation2(params[1]), l - 1)))
            }
            (CompactKind::So3, _) => Ok(quaternion_rotation(params)),
            _ => Err(Error::UnsupportedCompactGroup(self.name())),
        }
    }

    /// Draws a Haar-random element of K as parameters for [`Self::compact_element`].
    pub fn sample_compact(&self, rng: &mut impl Rng) -> Result<Vec<f64>> {
        match self.compact_kind() {
            CompactKind::So2 => Ok(vec![rng.random::<f64>() * 2.0 * PI]),
            CompactKind::So2xSo2 => Ok(vec![
                rng.random::<f64>() * 2.0 * PI,
                rng.random::<f64>() * 2.0 * PI,
            ]),
            CompactKind::So3 => loop {
                let v: Vec<f64> = (0..4).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
                let n2: f64 = v.iter().map(|x| x * x).sum();
                if n2 > 1e-6 && n2 <= 1.0 {
                    let n = n2.sqrt();
                    break Ok(v.iter().map(|x| x / n).collect());
                }
            },
            CompactKind::Unsupported => Err(Error::UnsupportedCompactGroup(self.name())),
        }
    }

    /// Ψ(g₁, g₂) = g₁ ⊗ Sym^{l−1}(g₂) for the tensor family.
    pub fn tensor_rep(&self, g1: &RealMatrix, g2: &RealMatrix) -> Result<RealMatrix> {
        match *self {
            Self::SL2xSL2Tensor { l } => Ok(g1.kron(&sym_power(g2, l - 1))),
            _ => Err(Error::UnsupportedGroup(self.name())),
        }
    }
}

/// Sym^n of a 2×2 matrix in the orthonormal basis √C(n,b)·x^{n−b}y^b.
///
/// Acts on homogeneous polynomials by (g·f)(x,y) = f((x,y)g), so diagonal
/// matrices act diagonally with weights n−2b and rotations act orthogonally.
pub fn sym_power(g: &RealMatrix, n: usize) -> RealMatrix {
    let (a, b, c, d) = (g.get(0, 0), g.get(0, 1), g.get(1, 0), g.get(1, 1));
    // x' = a x + c y, y' = b x + d y
    let binom = |n: usize, k: usize| -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    };
    let poly_pow = |p: [f64; 2], k: usize| -> Vec<f64> {
        // coefficients of (p0 x + p1 y)^k by power of y
        (0..=k)
            .map(|j| binom(k, j) * p[0].powi((k - j) as i32) * p[1].powi(j as i32))
            .collect()
    };
    let mut m = vec![0.0; (n + 1) * (n + 1)];
    for col in 0..=n {
        let u = poly_pow([a, c], n - col);
        let v = poly_pow([b, d], col);
        for (i, ui) in u.iter().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                m[(i + j) * (n + 1) + col] += ui * vj;
            }
        }
    }
    RealMatrix::from_fn(n + 1, |row, col| {
        m[row * (n + 1) + col] * (binom(n, col) / binom(n, row)).sqrt()
    })
}

fn quaternion_rotation(q: &[f64]) -> RealMatrix {
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (w, x, y, z) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
    RealMatrix::from_rows([
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::substream;

    fn groups() -> Vec<GroupSpec> {
        vec![
            GroupSpec::SLn { n: 2 },
            GroupSpec::SLn { n: 3 },
            GroupSpec::SLn { n: 4 },
            GroupSpec::SOpq { p: 1, q: 2 },
            GroupSpec::SOpq { p: 2, q: 2 },
            GroupSpec::SOpq { p: 2, q: 3 },
            GroupSpec::SOpq { p: 3, q: 4 },
            GroupSpec::SOpq { p: 2, q: 4 },
            GroupSpec::SL2xSL2Tensor { l: 2 },
            GroupSpec::SL2xSL2Tensor { l: 3 },
            GroupSpec::SL2xSL2Tensor { l: 4 },
        ]
    }

    #[test]
    fn multiplicities_sum_to_dimension() {
        for g in groups() {
            let ws = g.weight_system();
            let total: u32 = ws.weights.iter().map(|w| w.multiplicity).sum();
            assert_eq!(total as usize, g.rep_dim(), "{g:?}");
            assert_eq!(ws.dim(), g.rep_dim());
            for (k, w) in ws.weights.iter().enumerate() {
                let count = ws.assignment.iter().filter(|&&a| a == k).count();
                assert_eq!(count as u32, w.multiplicity);
            }
        }
    }

    #[test]
    fn root_counts() {
        // |Φ⁺| with multiplicity equals (dim H − dim K − rank) / 2·... checked via dim H
        let dim_h = |g: &GroupSpec| -> usize {
            let rs = g.root_system();
            let roots: u32 = rs.positive_roots.iter().map(|r| r.multiplicity).sum();
            // dim h = dim m + rank + 2 Σ m_α; for split forms m = 0
            let m = match *g {
                GroupSpec::SOpq { p, q } => (q - p) * (q - p - 1) / 2,
                _ => 0,
            };
            m + g.rank() + 2 * roots as usize
        };
        assert_eq!(dim_h(&GroupSpec::SLn { n: 3 }), 8);
        assert_eq!(dim_h(&GroupSpec::SOpq { p: 2, q: 3 }), 10);
        assert_eq!(dim_h(&GroupSpec::SOpq { p: 3, q: 4 }), 21);
        assert_eq!(dim_h(&GroupSpec::SOpq { p: 1, q: 2 }), 3);
        assert_eq!(dim_h(&GroupSpec::SL2xSL2Tensor { l: 3 }), 6);
    }

    #[test]
    fn sym_power_is_a_homomorphism_and_orthogonal_on_rotations() {
        let g = RealMatrix::from_rows([[1.2, 0.4], [-0.7, 0.6]]);
        let h = RealMatrix::from_rows([[0.3, -1.1], [0.9, 2.0]]);
        for n in 1..5 {
            let lhs = sym_power(&(&g * &h), n);
            let rhs = &sym_power(&g, n) * &sym_power(&h, n);
            assert!(lhs.max_abs_diff(&rhs) < 1e-12, "n = {n}");
            let k = sym_power(&RealMatrix::rotation2(0.83), n);
            let kkt = &k * &k.transpose();
            assert!(kkt.max_abs_diff(&RealMatrix::identity(n + 1)) < 1e-12);
        }
    }

    #[test]
    fn tensor_rep_matches_weights_on_the_torus() {
        let g = GroupSpec::SL2xSL2Tensor { l: 3 };
        let (s1, s2): (f64, f64) = (0.4, -0.25);
        let a1 = RealMatrix::diag(&[s1.exp(), (-s1).exp()]);
        let a2 = RealMatrix::diag(&[s2.exp(), (-s2).exp()]);
        let psi = g.tensor_rep(&a1, &a2).unwrap();
        let want = RealMatrix::diag(&g.rep_diag(&[s1, s2]));
        assert!(psi.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn compact_elements_are_orthogonal() {
        let mut rng = substream(1, 0);
        for g in [
            GroupSpec::SLn { n: 2 },
            GroupSpec::SLn { n: 3 },
            GroupSpec::SL2xSL2Tensor { l: 4 },
        ] {
            for _ in 0..10 {
                let k = g
                    .compact_element(&g.sample_compact(&mut rng).unwrap())
                    .unwrap();
                let kkt = &k * &k.transpose();
                assert!(kkt.max_abs_diff(&RealMatrix::identity(g.rep_dim())) < 1e-12);
                assert!((k.det().abs() - 1.0).abs() < 1e-12);
            }
        }
        assert!(matches!(
            GroupSpec::SOpq { p: 2, q: 3 }.compact_element(&[0.0]),
            Err(Error::UnsupportedCompactGroup(_))
        ));
    }

    #[test]
    fn json_round_trip() {
        for g in groups() {
            let s = serde_json::to_string(&g).unwrap();
            assert_eq!(serde_json::from_str::<GroupSpec>(&s).unwrap(), g);
        }
        assert!(serde_json::from_str::<GroupSpec>(r#"{"family":"SLn","n":2,"x":1}"#).is_err());
        assert!(GroupSpec::SOpq { p: 3, q: 2 }.validate().is_err());
        assert!(GroupSpec::SOpq { p: 1, q: 1 }.validate().is_err());
    }
}
