use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Test functions φ on ℝ^d or on the torus ℝ^d/ℤ^d.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TestFunction {
    Zero,
    /// (1 − (‖w − c‖/r)²)^order inside the ball, 0 outside.
    SmoothBump {
        center: Vec<f64>,
        radius: f64,
        order: u32,
    },
    /// Radial bump (1 − u²)^order with u = (‖w‖ − mid)/half-width.
    AnnulusBump {
        r_min: f64,
        r_max: f64,
        order: u32,
    },
    BoxIndicator {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// Indicator of r_min ≤ ‖w‖₂ ≤ r_max.
    AnnulusIndicator {
        r_min: f64,
        r_max: f64,
    },
    /// x ↦ e^{2πi k·x}.
    TrigCharacter {
        k: Vec<i64>,
    },
}

pub(crate) fn annulus_contains(w: &[f64], r_min: f64, r_max: f64) -> bool {
    let r2: f64 = w.iter().map(|x| x * x).sum();
    r_min * r_min <= r2 && r2 <= r_max * r_max
}

pub(crate) fn box_contains(w: &[f64], lo: &[f64], hi: &[f64]) -> bool {
    w.iter()
        .zip(lo.iter().zip(hi))
        .all(|(x, (a, b))| *a <= *x && *x <= *b)
}

impl TestFunction {
    pub fn smooth_bump(center: Vec<f64>, radius: f64) -> Self {
        Self::SmoothBump {
            center,
            radius,
            order: 2,
        }
    }

    pub fn annulus_bump(r_min: f64, r_max: f64) -> Self {
        Self::AnnulusBump {
            r_min,
            r_max,
            order: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: &str| Err(Error::InvalidInput(s.to_string()));
        match self {
            Self::Zero | Self::TrigCharacter { .. } => Ok(()),
            Self::SmoothBump { center, radius, .. } => {
                if !(radius.is_finite() && *radius > 0.0) || center.iter().any(|c| !c.is_finite()) {
                    bad("bump needs a finite center and positive radius")
                } else {
                    Ok(())
                }
            }
            Self::AnnulusBump { r_min, r_max, .. } | Self::AnnulusIndicator { r_min, r_max } => {
                if !(r_min.is_finite() && r_max.is_finite() && 0.0 <= *r_min && r_min < r_max) {
                    bad("annulus needs 0 ≤ r_min < r_max < ∞")
                } else {
                    Ok(())
                }
            }
            Self::BoxIndicator { lo, hi } => {
                if lo.len() != hi.len()
                    || lo
                        .iter()
                        .zip(hi)
                        .any(|(a, b)| !(a.is_finite() && b.is_finite() && a <= b))
                {
                    bad("box needs finite lo ≤ hi of equal length")
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Ambient dimension if the function fixes one.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Self::SmoothBump { center, .. } => Some(center.len()),
            Self::BoxIndicator { lo, .. } => Some(lo.len()),
            Self::TrigCharacter { k } => Some(k.len()),
            _ => None,
        }
    }

    pub fn is_compactly_supported(&self) -> bool {
        !matches!(self, Self::TrigCharacter { .. })
    }

    /// Radii (ρ_min, ρ_max) with supp φ ⊆ {ρ_min ≤ ‖w‖ ≤ ρ_max}.
    pub fn radial_support(&self) -> Option<(f64, f64)> {
        match self {
            Self::Zero => Some((0.0, 0.0)),
            Self::SmoothBump { center, radius, .. } => {
                let c = center.iter().map(|x| x * x).sum::<f64>().sqrt();
                Some(((c - radius).max(0.0), c + radius))
            }
            Self::AnnulusBump { r_min, r_max, .. } | Self::AnnulusIndicator { r_min, r_max } => {
                Some((*r_min, *r_max))
            }
            Self::BoxIndicator { lo, hi } => {
                let far = lo
                    .iter()
                    .zip(hi)
                    .map(|(a, b)| a.abs().max(b.abs()).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let near = lo
                    .iter()
                    .zip(hi)
                    .map(|(a, b)| {
                        if *a <= 0.0 && 0.0 <= *b {
                            0.0
                        } else {
                            a.abs().min(b.abs()).powi(2)
                        }
                    })
                    .sum::<f64>()
                    .sqrt();
                Some((near, far))
            }
            Self::TrigCharacter { .. } => None,
        }
    }

    /// Real value; the real part for characters.
    pub fn value(&self, w: &[f64]) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::SmoothBump {
                center,
                radius,
                order,
            } => {
                let r2: f64 = w.iter().zip(center).map(|(x, c)| (x - c) * (x - c)).sum();
                let u = r2 / (radius * radius);
                if u < 1.0 {
                    (1.0 - u).powi(*order as i32)
                } else {
                    0.0
                }
            }
            Self::AnnulusBump {
                r_min,
                r_max,
                order,
            } => {
                let r = w.iter().map(|x| x * x).sum::<f64>().sqrt();
                let h = 0.5 * (r_max - r_min);
                let u = (r - 0.5 * (r_max + r_min)) / h;
                if u.abs() < 1.0 {
                    (1.0 - u * u).powi(*order as i32)
                } else {
                    0.0
                }
            }
            Self::BoxIndicator { lo, hi } => box_contains(w, lo, hi) as u8 as f64,
            Self::AnnulusIndicator { r_min, r_max } => {
                annulus_contains(w, *r_min, *r_max) as u8 as f64
            }
            Self::TrigCharacter { k } => (TAU * phase(k, w)).cos(),
        }
    }

    pub fn complex_value(&self, w: &[f64]) -> Complex64 {
        match self {
            Self::TrigCharacter { k } => Complex64::from_polar(1.0, TAU * phase(k, w)),
            _ => Complex64::new(self.value(w), 0.0),
        }
    }
}

fn phase(k: &[i64], w: &[f64]) -> f64 {
    k.iter().zip(w).map(|(a, x)| *a as f64 * x).sum()
}

/// Regions A for orbit counting N_T(A, x₀).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Region {
    Whole,
    Empty,
    Annulus { r_min: f64, r_max: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Region {
    pub fn contains(&self, w: &[f64]) -> bool {
        match self {
            Self::Whole => true,
            Self::Empty => false,
            Self::Annulus { r_min, r_max } => annulus_contains(w, *r_min, *r_max),
            Self::Box { lo, hi } => box_contains(w, lo, hi),
        }
    }

    /// The indicator of the region as a test function, where one exists.
    pub fn indicator(&self) -> Option<TestFunction> {
        match self {
            Self::Annulus { r_min, r_max } => Some(TestFunction::AnnulusIndicator {
                r_min: *r_min,
                r_max: *r_max,
            }),
            Self::Box { lo, hi } => Some(TestFunction::BoxIndicator {
                lo: lo.clone(),
                hi: hi.clone(),
            }),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bump_profile() {
        let f = TestFunction::smooth_bump(vec![1.0, 0.0], 0.5);
        assert_eq!(f.value(&[1.0, 0.0]), 1.0);
        assert_eq!(f.value(&[1.5, 0.0]), 0.0);
        assert!((f.value(&[1.25, 0.0]) - 0.5625).abs() < 1e-15);
        let a = TestFunction::annulus_bump(1.0, 3.0);
        assert_eq!(a.value(&[0.0, 2.0]), 1.0);
        assert_eq!(a.value(&[0.0, 3.0]), 0.0);
        assert_eq!(a.radial_support(), Some((1.0, 3.0)));
    }

    #[test]
    fn validation() {
        assert!(TestFunction::smooth_bump(vec![0.0], -1.0)
            .validate()
            .is_err());
        assert!(TestFunction::AnnulusIndicator {
            r_min: 2.0,
            r_max: 1.0
        }
        .validate()
        .is_err());
        assert!(TestFunction::BoxIndicator {
            lo: vec![0.0],
            hi: vec![]
        }
        .validate()
        .is_err());
        assert!(TestFunction::annulus_bump(1.0, 2.0).validate().is_ok());
    }

    #[test]
    fn json_round_trip() {
        let f = TestFunction::TrigCharacter { k: vec![1, -2] };
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"kind":"trig-character","k":[1,-2]}"#);
        assert_eq!(serde_json::from_str::<TestFunction>(&s).unwrap(), f);
        assert!(
            serde_json::from_str::<TestFunction>(r#"{"kind":"trig-character","k":[1],"x":1}"#)
                .is_err()
        );
    }

    proptest! {
        #[test]
        fn character_has_unit_modulus(k0 in -9i64..9, k1 in -9i64..9, x in -5.0f64..5.0, y in -5.0f64..5.0) {
            let f = TestFunction::TrigCharacter { k: vec![k0, k1] };
            prop_assert!((f.complex_value(&[x, y]).norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn support_radii_contain_support(x in -4.0f64..4.0, y in -4.0f64..4.0) {
            for f in [
                TestFunction::smooth_bump(vec![1.0, -0.5], 1.2),
                TestFunction::annulus_bump(0.5, 2.5),
                TestFunction::BoxIndicator { lo: vec![0.5, -1.0], hi: vec![2.0, 1.0] },
            ] {
                let (lo, hi) = f.radial_support().unwrap();
                let r = (x * x + y * y).sqrt();
                if f.value(&[x, y]) != 0.0 {
                    prop_assert!(lo - 1e-12 <= r && r <= hi + 1e-12);
                }
            }
        }

        #[test]
        fn region_matches_indicator(x in -3.0f64..3.0, y in -3.0f64..3.0) {
            let r = Region::Annulus { r_min: 1.0, r_max: 2.0 };
            prop_assert_eq!(r.contains(&[x, y]) as u8 as f64, r.indicator().unwrap().value(&[x, y]));
        }
    }
}
