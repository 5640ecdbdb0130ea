use serde::{Deserialize, Serialize};

use super::RealMatrix;
use crate::error::{Error, Result};

/// A norm on d×d real matrices, described as data.
///
/// Exponents `p` accept `"inf"` in JSON for the max norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NormSpec {
    /// (Σ|a_ij|^p)^{1/p}.
    Entrywise {
        dim: usize,
        #[serde(with = "exponent")]
        p: f64,
    },
    /// Maximum over columns of the vector p-norm of the column.
    MaxColumn {
        dim: usize,
        #[serde(with = "exponent")]
        p: f64,
    },
    /// max{√(c·a11²+a12²), √(c·a22²+a21²), √(a13²+a23²), |a31|, |a32|, |a33|} on 3×3 matrices.
    Spiral { c: f64 },
    /// (Σ|w_ij a_ij|^p)^{1/p} with positive row-major weights.
    Weighted {
        dim: usize,
        #[serde(with = "exponent")]
        p: f64,
        weights: Vec<f64>,
    },
}

impl NormSpec {
    pub fn entrywise(dim: usize, p: f64) -> Self {
        Self::Entrywise { dim, p }
    }

    pub fn frobenius(dim: usize) -> Self {
        Self::Entrywise { dim, p: 2.0 }
    }

    pub fn max_entry(dim: usize) -> Self {
        Self::Entrywise {
            dim,
            p: f64::INFINITY,
        }
    }

    pub fn max_column(dim: usize, p: f64) -> Self {
        Self::MaxColumn { dim, p }
    }

    pub fn spiral(c: f64) -> Self {
        Self::Spiral { c }
    }

    pub fn weighted(dim: usize, p: f64, weights: Vec<f64>) -> Self {
        Self::Weighted { dim, p, weights }
    }

    /// Entrywise p-norm multiplied by a positive constant.
    pub fn scaled_entrywise(dim: usize, p: f64, factor: f64) -> Self {
        Self::Weighted {
            dim,
            p,
            weights: vec![factor; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Entrywise { dim, .. }
            | Self::MaxColumn { dim, .. }
            | Self::Weighted { dim, .. } => *dim,
            Self::Spiral { .. } => 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        let check_p = |p: f64| p >= 1.0 && !p.is_nan();
        match self {
            Self::Entrywise { dim, p } | Self::MaxColumn { dim, p } => {
                if *dim == 0 {
                    return bad("norm dimension must be positive");
                }
                if !check_p(*p) {
                    return bad("norm exponent must be >= 1");
                }
            }
            Self::Spiral { c } => {
                if !(c.is_finite() && *c > 1.0) {
                    return bad("spiral norm requires c > 1");
                }
            }
            Self::Weighted { dim, p, weights } => {
                if *dim == 0 || weights.len() != dim * dim {
                    return bad("weight matrix must be dim x dim");
                }
                if !check_p(*p) {
                    return bad("norm exponent must be >= 1");
                }
                if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                    return bad("weights must be positive and finite");
                }
            }
        }
        Ok(())
    }

    /// Evaluates the norm on a row-major slice of length dim².
    pub fn eval_slice(&self, a: &[f64]) -> f64 {
        match self {
            Self::Entrywise { p, .. } => pnorm(a.iter().copied(), *p),
            Self::MaxColumn { dim, p } => {
                let d = *dim;
                (0..d)
                    .map(|j| pnorm((0..d).map(|i| a[i * d + j]), *p))
                    .fold(0.0, f64::max)
            }
            Self::Spiral { c } => {
                let t1 = (c * a[0] * a[0] + a[1] * a[1]).sqrt();
                let t2 = (c * a[4] * a[4] + a[3] * a[3]).sqrt();
                let t3 = a[2].hypot(a[5]);
                t1.max(t2)
                    .max(t3)
                    .max(a[6].abs())
                    .max(a[7].abs())
                    .max(a[8].abs())
            }
            Self::Weighted { p, weights, .. } => {
                pnorm(a.iter().zip(weights).map(|(x, w)| x * w), *p)
            }
        }
    }

    pub fn eval(&self, a: &RealMatrix) -> Result<f64> {
        if a.dim() != self.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                got: a.dim(),
            });
        }
        Ok(self.eval_slice(a.data()))
    }

    /// Constant κ with |a_ij| ≤ κ‖A‖ for every entry.
    pub fn entry_bound(&self) -> f64 {
        match self {
            Self::Entrywise { .. } | Self::MaxColumn { .. } => 1.0,
            Self::Spiral { c } => 1.0f64.max(1.0 / c.sqrt()),
            Self::Weighted { weights, .. } => {
                1.0 / weights.iter().copied().fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Constant c with ‖A‖ ≥ c·‖A‖_F.
    pub fn frobenius_lower(&self) -> f64 {
        let vec_const = |n: usize, p: f64| {
            if p <= 2.0 {
                1.0
            } else {
                (n as f64).powf(1.0 / p - 0.5)
            }
        };
        match self {
            Self::Entrywise { dim, p } => vec_const(dim * dim, *p),
            Self::MaxColumn { dim, p } => vec_const(*dim, *p) / (*dim as f64).sqrt(),
            Self::Spiral { c } => (c.min(1.0) / 6.0).sqrt(),
            Self::Weighted { dim, p, weights } => {
                vec_const(dim * dim, *p) * weights.iter().copied().fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// True when the norm is invariant under A ↦ k₁Ak₂ for orthogonal k₁, k₂.
    pub fn is_orthogonally_invariant(&self) -> bool {
        matches!(self, Self::Entrywise { p, .. } if *p == 2.0)
    }
}

/// Free-function form of [`NormSpec::eval`].
pub fn norm_eval(n: &NormSpec, a: &RealMatrix) -> Result<f64> {
    n.eval(a)
}

/// Vector p-norm of an iterator, with scaling to avoid overflow.
pub fn pnorm(xs: impl Iterator<Item = f64> + Clone, p: f64) -> f64 {
    if p == 1.0 {
        xs.map(f64::abs).sum()
    } else if p == 2.0 {
        xs.map(|x| x * x).sum::<f64>().sqrt()
    } else if p.is_infinite() {
        xs.fold(0.0f64, |m, x| m.max(x.abs()))
    } else {
        let m = xs.clone().fold(0.0f64, |m, x| m.max(x.abs()));
        if m == 0.0 {
            return 0.0;
        }
        m * xs.map(|x| (x.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// Tag naming the representation through which group elements are measured.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RepresentationTag {
    #[default]
    Identity,
    Named(String),
}

/// D(g) = max{1, ‖Ψ(g)‖}; `g` is passed already in the representation space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceFunction {
    pub norm: NormSpec,
    #[serde(default)]
    pub representation: RepresentationTag,
}

impl DistanceFunction {
    pub fn new(norm: NormSpec) -> Self {
        Self {
            norm,
            representation: RepresentationTag::Identity,
        }
    }

    pub fn eval(&self, g: &RealMatrix) -> Result<f64> {
        Ok(self.norm.eval(g)?.max(1.0))
    }

    pub fn eval_slice(&self, g: &[f64]) -> f64 {
        self.norm.eval_slice(g).max(1.0)
    }
}

/// Free-function form of [`DistanceFunction::eval`].
pub fn distance(d: &DistanceFunction, g: &RealMatrix) -> Result<f64> {
    d.eval(g)
}

mod exponent {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &f64, s: S) -> Result<S::Ok, S::Error> {
        if p.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*p)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = f64;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a number >= 1 or \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
                Ok(v)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
                Ok(v as f64)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
                Ok(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
                match v {
                    "inf" | "infinity" | "Infinity" => Ok(f64::INFINITY),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn all_norms() -> Vec<NormSpec> {
        vec![
            NormSpec::entrywise(3, 1.0),
            NormSpec::frobenius(3),
            NormSpec::entrywise(3, 3.5),
            NormSpec::max_entry(3),
            NormSpec::max_column(3, 1.0),
            NormSpec::max_column(3, 2.0),
            NormSpec::max_column(3, f64::INFINITY),
            NormSpec::spiral(1.21),
            NormSpec::weighted(3, 2.0, vec![1.0, 2.0, 0.5, 3.0, 1.0, 1.0, 0.25, 1.0, 4.0]),
        ]
    }

    #[test]
    fn frobenius_of_identity() {
        let n = NormSpec::frobenius(2);
        assert!((n.eval(&RealMatrix::identity(2)).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn spiral_identity_is_sqrt_c() {
        let c = 1.21;
        let v = NormSpec::spiral(c).eval(&RealMatrix::identity(3)).unwrap();
        assert!((v - c.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn dim_mismatch() {
        assert!(matches!(
            NormSpec::frobenius(2).eval(&RealMatrix::identity(3)),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn distance_examples() {
        let d = DistanceFunction::new(NormSpec::frobenius(2));
        assert!((d.eval(&RealMatrix::identity(2)).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let s: f64 = 1.3;
        let g = RealMatrix::diag(&[s.exp(), (-s).exp()]);
        let want = ((2.0 * s).exp() + (-2.0 * s).exp()).sqrt();
        assert!((d.eval(&g).unwrap() - want).abs() < 1e-12);
        let small = RealMatrix::diag(&[0.1, 0.2]);
        assert_eq!(d.eval(&small).unwrap(), 1.0);
    }

    #[test]
    fn json_exponent_round_trip() {
        let n = NormSpec::max_entry(2);
        let s = serde_json::to_string(&n).unwrap();
        assert!(s.contains("\"inf\""));
        assert_eq!(serde_json::from_str::<NormSpec>(&s).unwrap(), n);
        let bad = r#"{"kind":"entrywise","dim":2,"p":2,"extra":1}"#;
        assert!(serde_json::from_str::<NormSpec>(bad).is_err());
    }

    #[test]
    fn validation() {
        assert!(NormSpec::spiral(0.9).validate().is_err());
        assert!(NormSpec::entrywise(2, 0.5).validate().is_err());
        assert!(NormSpec::weighted(2, 2.0, vec![1.0, -1.0, 1.0, 1.0])
            .validate()
            .is_err());
        for n in all_norms() {
            n.validate().unwrap();
        }
    }

    #[test]
    fn frobenius_rotation_invariance() {
        let n = NormSpec::frobenius(2);
        let a = RealMatrix::from_rows([[1.5, -0.3], [2.2, 0.7]]);
        let base = n.eval(&a).unwrap();
        for k in 0..16 {
            let r1 = RealMatrix::rotation2(0.37 * k as f64);
            let r2 = RealMatrix::rotation2(-1.1 * k as f64 + 0.2);
            let v = n.eval(&(&(&r1 * &a) * &r2)).unwrap();
            assert!((v - base).abs() < 1e-12);
        }
    }

    fn mat3() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1e3f64..1e3, 9)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn norm_axioms(a in mat3(), b in mat3(), t in -50.0f64..50.0) {
            for n in all_norms() {
                let na = n.eval_slice(&a);
                let nb = n.eval_slice(&b);
                let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
                prop_assert!(n.eval_slice(&sum) <= (na + nb) * (1.0 + 1e-12));
                let ta: Vec<f64> = a.iter().map(|x| t * x).collect();
                prop_assert!((n.eval_slice(&ta) - t.abs() * na).abs() <= 1e-9 * (1.0 + t.abs() * na));
                prop_assert!(na > 0.0);
                prop_assert!(n.eval_slice(&[0.0; 9]) == 0.0);
                let entry_max = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                prop_assert!(entry_max <= n.entry_bound() * na * (1.0 + 1e-12));
                let fro = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                prop_assert!(na >= n.frobenius_lower() * fro * (1.0 - 1e-12));
            }
        }

        #[test]
        fn zeroing_entries_never_increases(a in mat3(), mask in prop::collection::vec(any::<bool>(), 9)) {
            for n in all_norms() {
                let masked: Vec<f64> = a.iter().zip(&mask).map(|(x, &m)| if m { *x } else { 0.0 }).collect();
                prop_assert!(n.eval_slice(&masked) <= n.eval_slice(&a) * (1.0 + 1e-12));
            }
        }
    }
}
