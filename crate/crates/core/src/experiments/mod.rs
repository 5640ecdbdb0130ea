//! Scenario configs, runners and run manifests.
//!
//! A run reads a [`ScenarioConfig`] (strict JSON, versioned), writes CSV and
//! JSON outputs plus plot data into an output directory and records them in
//! a [`RunManifest`] together with the scenario's acceptance checks.

mod manifest;
pub mod modular;
pub mod oppenheim;
mod scenarios;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::audit::{UcSampling, VolumeSource};
use crate::error::{Error, Result};
use crate::lattice::{LatticeSpec, TestFunction, DEFAULT_BUDGET};
use crate::matgroup::{NormSpec, RealMatrix};
use crate::rootsys::GroupSpec;
use crate::volume::{Method, SkewFamily};

pub use manifest::{
    emit_plot_data, sha256_hex, Check, OutputRecord, RunContext, RunManifest, Series,
    ARTIFACT_VERSION,
};
pub use oppenheim::GramBox;
pub use scenarios::{
    run_audit, run_counterexample_d2, run_ledrappier, run_nonbalanced, run_oppenheim, run_torus,
    run_translate_modular, run_volume_sweep,
};

pub const SCHEMA_VERSION: u32 = 1;

fn default_budget() -> u64 {
    DEFAULT_BUDGET
}

/// Top-level configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Cap on enumerated candidates for lattice scenarios.
    #[serde(default = "default_budget")]
    pub budget: u64,
    pub scenario: Scenario,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Scenario {
    Ledrappier(LedrappierParams),
    Torus(TorusParams),
    TranslateModular(TranslateModularParams),
    CounterexampleD2(CounterexampleParams),
    Nonbalanced(NonbalancedParams),
    OppenheimFrames(OppenheimParams),
    VolumeSweep(VolumeSweepParams),
    Audit(AuditParams),
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Ledrappier(_) => "ledrappier",
            Self::Torus(_) => "torus",
            Self::TranslateModular(_) => "translate-modular",
            Self::CounterexampleD2(_) => "counterexample-d2",
            Self::Nonbalanced(_) => "nonbalanced",
            Self::OppenheimFrames(_) => "oppenheim-frames",
            Self::VolumeSweep(_) => "volume-sweep",
            Self::Audit(_) => "audit",
        }
    }
}

/// Scenario names accepted on the command line.
pub const SCENARIO_NAMES: [&str; 8] = [
    "ledrappier",
    "torus",
    "translate-modular",
    "counterexample-d2",
    "nonbalanced",
    "oppenheim-frames",
    "volume-sweep",
    "audit",
];

macro_rules! defaults {
    ($($name:ident: $t:ty = $v:expr;)*) => {
        $(fn $name() -> $t { $v })*
    };
}

defaults! {
    d_ledrappier_tol: f64 = 0.10;
    d_cell_height: f64 = 2.0;
    d_modular_tol: f64 = 0.15;
    d_spiral_c: f64 = 1.1;
    d_spiral_n: u32 = 3;
    d_volume_tol: f64 = 0.03;
    d_ratio_tol: f64 = 0.05;
    d_tensor_l: usize = 3;
    d_window_coord: usize = 1;
    d_window: f64 = 2.0;
    d_k_nodes: usize = 12;
    d_floor: f64 = 0.1;
    d_max_change: f64 = 0.2;
    d_column_p: f64 = 2.0;
    d_slope_tol: f64 = 0.3;
    d_flat_tol: f64 = 0.25;
    d_g_samples: usize = 256;
    d_u_samples: usize = 32;
    d_sweep_points: usize = 8;
}

/// S_{φ,v}(T) against its prediction S̃_{φ,v}(T) for SL(2,ℤ) acting on ℝ².
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LedrappierParams {
    pub v: Vec<f64>,
    pub phi: TestFunction,
    pub norm: NormSpec,
    pub schedule: Vec<f64>,
    /// Bound on |S/S̃ − 1| at the largest T.
    #[serde(default = "d_ledrappier_tol")]
    pub tolerance: f64,
    /// Required number of steps on which the error does not increase; defaults to all but one.
    #[serde(default)]
    pub min_nonincreasing: Option<usize>,
}

/// Weyl sums of the orbit γ⁻¹x₀ on the torus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusParams {
    pub x0: Vec<f64>,
    pub frequencies: Vec<Vec<i64>>,
    pub norm: NormSpec,
    pub schedule: Vec<f64>,
    /// Every nonzero frequency must have W ≤ max_weyl at the largest T.
    #[serde(default)]
    pub max_weyl: Option<f64>,
    /// Every nonzero frequency must have W ≥ min_weyl at the largest T.
    #[serde(default)]
    pub min_weyl: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ModularExpectation {
    #[default]
    Equidistributed,
    /// Every point reduces to the cell of i.
    Basepoint,
}

/// Histogram of reduced points g₀⁻¹λ·i on the modular surface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranslateModularParams {
    /// Row-major 2 × 2 matrix of determinant 1.
    pub g0: Vec<f64>,
    pub norm: NormSpec,
    pub schedule: Vec<f64>,
    #[serde(default = "d_cell_height")]
    pub cell_height: f64,
    /// Bound on the relative deviation of each cell at the largest T.
    #[serde(default = "d_modular_tol")]
    pub tolerance: f64,
    #[serde(default)]
    pub expect: ModularExpectation,
}

/// Ball volumes and skew ratios of the spiral subgroup along T_n, S_n.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleParams {
    #[serde(default = "d_spiral_c")]
    pub c: f64,
    /// Largest index n; checks are made at this n.
    #[serde(default = "d_spiral_n")]
    pub n: u32,
    #[serde(default = "d_volume_tol")]
    pub volume_tolerance: f64,
    #[serde(default = "d_ratio_tol")]
    pub ratio_tolerance: f64,
}

/// Volume fraction of H_T with one chamber coordinate bounded, for SL₂ × SL₂.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonbalancedParams {
    #[serde(default = "d_tensor_l")]
    pub l: usize,
    #[serde(default = "d_window_coord")]
    pub coord: usize,
    /// Bound M on the windowed coordinate.
    #[serde(default = "d_window")]
    pub window: f64,
    pub schedule: Vec<f64>,
    pub norms: Vec<NormSpec>,
    #[serde(default = "d_k_nodes")]
    pub k_nodes: usize,
    #[serde(default = "d_floor")]
    pub floor: f64,
    /// Bound on |f(T_last)/f(T_first) − 1|.
    #[serde(default = "d_max_change")]
    pub max_change: f64,
}

/// Integer frames with Gram matrix in a box for an indefinite ternary form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OppenheimParams {
    /// Diagonal of Q.
    pub q: Vec<f64>,
    pub gram: GramBox,
    #[serde(default = "d_column_p")]
    pub column_p: f64,
    pub schedule: Vec<f64>,
    #[serde(default = "d_slope_tol")]
    pub slope_tolerance: f64,
    /// Bound on max/min − 1 of count/T^{p(q−1)} over the schedule.
    #[serde(default = "d_flat_tol")]
    pub flat_tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeSweepParams {
    pub group: GroupSpec,
    pub norm: NormSpec,
    pub tmin: f64,
    pub tmax: f64,
    #[serde(default = "d_sweep_points")]
    pub points: usize,
    /// Full Haar volume with this method; the chamber-sector volume if absent.
    /// A Monte Carlo seed is replaced by the run seed.
    #[serde(default)]
    pub method: Option<Method>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpectedVerdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Parameters of one auditor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "condition", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AuditSpec {
    Uc {
        norm: NormSpec,
        epsilon: f64,
        #[serde(default = "d_g_samples")]
        g_samples: usize,
        #[serde(default = "d_u_samples")]
        u_samples: usize,
    },
    I1 {
        source: VolumeSource,
        epsilon: f64,
        schedule: Vec<f64>,
    },
    I2 {
        lattice: LatticeSpec,
        norm: NormSpec,
        source: VolumeSource,
        schedule: Vec<f64>,
    },
    D1 {
        family: SkewFamily,
        pairs: Vec<(RealMatrix, RealMatrix)>,
        epsilon: f64,
        schedule: Vec<f64>,
    },
    D2 {
        family: SkewFamily,
        g1: RealMatrix,
        g2: RealMatrix,
        schedule: Vec<f64>,
    },
}

impl AuditSpec {
    pub fn condition(&self) -> crate::audit::Condition {
        use crate::audit::Condition;
        match self {
            Self::Uc { .. } => Condition::Uc,
            Self::I1 { .. } => Condition::I1,
            Self::I2 { .. } => Condition::I2,
            Self::D1 { .. } => Condition::D1,
            Self::D2 { .. } => Condition::D2,
        }
    }

    pub(crate) fn uc_sampling(&self, seed: u64) -> Option<UcSampling> {
        match self {
            Self::Uc {
                g_samples,
                u_samples,
                ..
            } => Some(UcSampling {
                g_samples: *g_samples,
                u_samples: *u_samples,
                seed,
            }),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditParams {
    pub check: AuditSpec,
    /// Expected verdict; without it the run passes only on a Pass verdict.
    #[serde(default)]
    pub expect: Option<ExpectedVerdict>,
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn check_schedule(name: &str, s: &[f64]) -> Result<()> {
    if s.is_empty() {
        return Err(cfg_err(format!("{name}: schedule is empty")));
    }
    if s.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(cfg_err(format!(
            "{name}: thresholds must be positive and finite"
        )));
    }
    if s.windows(2).any(|w| w[1] <= w[0]) {
        return Err(cfg_err(format!(
            "{name}: schedule must be strictly increasing"
        )));
    }
    Ok(())
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(cfg_err(format!("{name} must be positive and finite")))
    }
}

fn check_norm(norm: &NormSpec, dim: usize) -> Result<()> {
    norm.validate().map_err(|e| cfg_err(e.to_string()))?;
    if norm.dim() != dim {
        return Err(cfg_err(format!(
            "norm acts on {}×{} matrices, expected {dim}×{dim}",
            norm.dim(),
            norm.dim()
        )));
    }
    Ok(())
}

impl ScenarioConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| cfg_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s =
            fs::read_to_string(path).map_err(|e| cfg_err(format!("{}: {e}", path.display())))?;
        Self::from_json(&s)
    }

    /// SHA-256 of the canonical JSON form of the configuration.
    pub fn hash(&self) -> String {
        sha256_hex(
            serde_json::to_string(self)
                .expect("config serializes")
                .as_bytes(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(cfg_err(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        match &self.scenario {
            Scenario::Ledrappier(p) => {
                if p.v.len() != 2
                    || p.v.iter().all(|x| *x == 0.0)
                    || p.v.iter().any(|x| !x.is_finite())
                {
                    return Err(cfg_err(
                        "ledrappier: v must be a finite nonzero vector in ℝ²",
                    ));
                }
                p.phi.validate().map_err(|e| cfg_err(e.to_string()))?;
                check_norm(&p.norm, 2)?;
                check_schedule("ledrappier", &p.schedule)?;
                check_positive("tolerance", p.tolerance)?;
            }
            Scenario::Torus(p) => {
                let d = p.x0.len();
                if !(d == 2 || d == 3) || p.x0.iter().any(|x| !x.is_finite()) {
                    return Err(cfg_err(
                        "torus: x0 must be a finite point of dimension 2 or 3",
                    ));
                }
                if p.frequencies.is_empty() || p.frequencies.iter().any(|k| k.len() != d) {
                    return Err(cfg_err(
                        "torus: frequencies must be nonempty and match the dimension of x0",
                    ));
                }
                check_norm(&p.norm, d)?;
                check_schedule("torus", &p.schedule)?;
            }
            Scenario::TranslateModular(p) => {
                if p.g0.len() != 4 || p.g0.iter().any(|x| !x.is_finite()) {
                    return Err(cfg_err(
                        "translate-modular: g0 must have four finite entries",
                    ));
                }
                let det = p.g0[0] * p.g0[3] - p.g0[1] * p.g0[2];
                if (det - 1.0).abs() > 1e-9 {
                    return Err(cfg_err(format!(
                        "translate-modular: det g0 = {det}, expected 1"
                    )));
                }
                check_norm(&p.norm, 2)?;
                check_schedule("translate-modular", &p.schedule)?;
                if !(p.cell_height > 1.0 && p.cell_height.is_finite()) {
                    return Err(cfg_err("translate-modular: cell_height must exceed 1"));
                }
                check_positive("tolerance", p.tolerance)?;
            }
            Scenario::CounterexampleD2(p) => {
                if !(p.c > 1.0 && p.c.is_finite()) {
                    return Err(cfg_err("counterexample-d2: c must exceed 1"));
                }
                if p.n == 0 || p.n > 6 {
                    return Err(cfg_err("counterexample-d2: n must lie in 1..=6"));
                }
                check_positive("volume_tolerance", p.volume_tolerance)?;
                check_positive("ratio_tolerance", p.ratio_tolerance)?;
            }
            Scenario::Nonbalanced(p) => {
                if !(p.l == 3 || p.l == 4) {
                    return Err(cfg_err("nonbalanced: l must be 3 or 4"));
                }
                if p.coord > 1 {
                    return Err(cfg_err("nonbalanced: coord must be 0 or 1"));
                }
                if p.norms.is_empty() {
                    return Err(cfg_err("nonbalanced: at least one norm is required"));
                }
                let dim = GroupSpec::SL2xSL2Tensor { l: p.l }.rep_dim();
                for n in &p.norms {
                    check_norm(n, dim)?;
                }
                check_schedule("nonbalanced", &p.schedule)?;
                if p.k_nodes == 0 || !(p.window >= 0.0) {
                    return Err(cfg_err(
                        "nonbalanced: k_nodes must be positive and window nonnegative",
                    ));
                }
            }
            Scenario::OppenheimFrames(p) => {
                if p.q.len() != 3 || p.q.iter().any(|x| !x.is_finite() || *x == 0.0) {
                    return Err(cfg_err(
                        "oppenheim-frames: q must be three finite nonzero entries",
                    ));
                }
                if p.q.iter().all(|x| *x > 0.0) || p.q.iter().all(|x| *x < 0.0) {
                    return Err(cfg_err("oppenheim-frames: q must be indefinite"));
                }
                p.gram.validate().map_err(|e| cfg_err(e.to_string()))?;
                check_schedule("oppenheim-frames", &p.schedule)?;
                if !(p.column_p >= 1.0) {
                    return Err(cfg_err("oppenheim-frames: column_p must be at least 1"));
                }
            }
            Scenario::VolumeSweep(p) => {
                p.group.validate().map_err(|e| cfg_err(e.to_string()))?;
                check_norm(&p.norm, p.group.rep_dim())?;
                check_positive("tmin", p.tmin)?;
                if !(p.tmax >= p.tmin && p.tmax.is_finite()) || p.points == 0 {
                    return Err(cfg_err(
                        "volume-sweep: need tmin ≤ tmax and at least one point",
                    ));
                }
            }
            Scenario::Audit(p) => match &p.check {
                AuditSpec::Uc { norm, epsilon, .. } => {
                    norm.validate().map_err(|e| cfg_err(e.to_string()))?;
                    check_positive("epsilon", *epsilon)?;
                }
                AuditSpec::I1 {
                    schedule, epsilon, ..
                }
                | AuditSpec::D1 {
                    schedule, epsilon, ..
                } => {
                    check_schedule("audit", schedule)?;
                    if !(*epsilon >= 0.0) {
                        return Err(cfg_err("epsilon must be nonnegative"));
                    }
                }
                AuditSpec::I2 {
                    schedule,
                    lattice,
                    norm,
                    ..
                } => {
                    check_schedule("audit", schedule)?;
                    lattice.validate().map_err(|e| cfg_err(e.to_string()))?;
                    check_norm(norm, lattice.dim)?;
                }
                AuditSpec::D2 { schedule, .. } => check_schedule("audit", schedule)?,
            },
        }
        Ok(())
    }
}

/// Runs a scenario into `out_dir`, writing `manifest.json` there.
pub fn run(cfg: &ScenarioConfig, out_dir: &Path) -> Result<RunManifest> {
    cfg.validate()?;
    let mut ctx = RunContext::new(
        out_dir,
        cfg.scenario.name(),
        cfg.hash(),
        cfg.seed,
        cfg.budget,
    )?;
    match &cfg.scenario {
        Scenario::Ledrappier(p) => run_ledrappier(p, &mut ctx)?,
        Scenario::Torus(p) => run_torus(p, &mut ctx)?,
        Scenario::TranslateModular(p) => run_translate_modular(p, &mut ctx)?,
        Scenario::CounterexampleD2(p) => run_counterexample_d2(p, &mut ctx)?,
        Scenario::Nonbalanced(p) => run_nonbalanced(p, &mut ctx)?,
        Scenario::OppenheimFrames(p) => run_oppenheim(p, &mut ctx)?,
        Scenario::VolumeSweep(p) => run_volume_sweep(p, &mut ctx)?,
        Scenario::Audit(p) => run_audit(p, &mut ctx)?,
    }
    ctx.finish()
}
