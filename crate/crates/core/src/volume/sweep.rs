use std::io::Write;

use serde::{Deserialize, Serialize};

use super::haar::{chamber_sector_volume, haar_volume, Method, SkewBallSpec, VolumeEstimate};
use crate::error::{Error, Result};
use crate::matgroup::NormSpec;
use crate::rootsys::GroupSpec;

/// One point of a volume sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub t: f64,
    pub estimate: VolumeEstimate,
}

impl Method {
    /// Compact label used in CSV output.
    pub fn label(&self) -> String {
        match self {
            Self::Quadrature { k_nodes } => format!("quadrature:k_nodes={k_nodes}"),
            Self::MonteCarlo { samples, seed } => format!("mc:samples={samples}:seed={seed}"),
        }
    }
}

/// Ball volumes along a schedule: full Haar volume when `method` is given,
/// the chamber-sector volume otherwise.
pub fn volume_sweep(
    gs: &GroupSpec,
    norm: &NormSpec,
    ts: &[f64],
    method: Option<Method>,
) -> Result<Vec<SweepPoint>> {
    ts.iter()
        .map(|&t| {
            let estimate = match method {
                Some(m) => haar_volume(&SkewBallSpec::ball(*gs, norm.clone(), t), m)?,
                None => chamber_sector_volume(gs, norm, t)?,
            };
            Ok(SweepPoint { t, estimate })
        })
        .collect()
}

/// Writes `T,value,stderr,method` rows.
pub fn write_sweep_csv(points: &[SweepPoint], mut w: impl Write) -> Result<()> {
    let io = |e: std::io::Error| Error::Io(e.to_string());
    writeln!(w, "T,value,stderr,method").map_err(io)?;
    for p in points {
        writeln!(
            w,
            "{},{},{},{}",
            p.t,
            p.estimate.value,
            p.estimate.stderr,
            p.estimate.method.label()
        )
        .map_err(io)?;
    }
    Ok(())
}
