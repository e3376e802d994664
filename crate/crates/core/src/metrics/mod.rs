//! Region-aware metrics over an edited case.
//!
//! Every metric is optional: a metric whose required mask is empty on every
//! frame is absent, never zero, and is left out of corpus aggregates.

mod region;

pub use region::{
    e_copy, e_temp, evaluate_regions, p_perceptual, p_tempdrift, r_ghost, seam_score, Backends,
    InnerRegion, MaskSelector, MetricOutcome, RegionParams,
};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::TrajectorySet;
use crate::perceptual::BackendError;
use crate::raster::{FrameSequence, RasterError, RegionMasks};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("invalid case: {0}")]
    InvalidCase(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "camera-only")]
    CameraOnly,
    #[serde(rename = "camera+object")]
    CameraObject,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseMeta {
    pub case_id: String,
    pub category: Category,
    pub fps: f64,
}

impl CaseMeta {
    pub fn new(case_id: impl Into<String>, category: Category) -> Self {
        Self {
            case_id: case_id.into(),
            category,
            fps: 16.0,
        }
    }
}

/// Generated frames, references, per-frame region masks and optional
/// trajectories for one edited clip.
#[derive(Debug, Clone)]
pub struct CaseBundle {
    pub generated: FrameSequence,
    pub preserve_ref: FrameSequence,
    /// Required when any Reveal or Expand mask is non-empty.
    pub ghost_ref: Option<FrameSequence>,
    pub masks: Vec<RegionMasks>,
    pub meta: CaseMeta,
    pub trajectories: TrajectorySet,
}

impl CaseBundle {
    pub fn frame_count(&self) -> usize {
        self.generated.len()
    }

    pub fn width(&self) -> usize {
        self.generated.first().map_or(0, |f| f.width())
    }

    pub fn height(&self) -> usize {
        self.generated.first().map_or(0, |f| f.height())
    }

    pub fn needs_ghost(&self) -> bool {
        self.masks.iter().any(|m| m.reveal.any() || m.expand.any())
    }

    /// Checks lengths, shapes, the mask partition on every frame and the
    /// ghost-reference dependency.
    pub fn validate(&self) -> Result<(), MetricError> {
        let t = self.generated.len();
        if t < 2 {
            return Err(MetricError::InvalidCase(format!("{t} frames, at least 2 required")));
        }
        let mut lengths = vec![("preserve_ref", self.preserve_ref.len()), ("masks", self.masks.len())];
        if let Some(g) = &self.ghost_ref {
            lengths.push(("ghost_ref", g.len()));
        }
        for (name, len) in lengths {
            if len != t {
                return Err(MetricError::InvalidCase(format!("{name} has {len} frames, generated has {t}")));
            }
        }
        let (w, h) = (self.width(), self.height());
        let sequences = [Some(&self.generated), Some(&self.preserve_ref), self.ghost_ref.as_ref()];
        for (name, seq) in ["generated", "preserve_ref", "ghost_ref"].iter().zip(sequences) {
            for (i, f) in seq.into_iter().flatten().enumerate() {
                if f.width() != w || f.height() != h {
                    return Err(MetricError::InvalidCase(format!(
                        "{name} frame {i} is {}x{}, expected {w}x{h}",
                        f.width(),
                        f.height()
                    )));
                }
            }
        }
        for (i, m) in self.masks.iter().enumerate() {
            if m.width() != w || m.height() != h {
                return Err(MetricError::InvalidCase(format!(
                    "masks of frame {i} are {}x{}, expected {w}x{h}",
                    m.width(),
                    m.height()
                )));
            }
            m.validate()
                .map_err(|e| MetricError::InvalidCase(format!("frame {i}: {e}")))?;
        }
        if self.ghost_ref.is_none() && self.needs_ghost() {
            return Err(MetricError::InvalidCase(
                "ghost_ref is missing but reveal or expand masks are non-empty".into(),
            ));
        }
        self.trajectories
            .validate(t)
            .map_err(|e| MetricError::InvalidCase(format!("trajectories: {e}")))?;
        Ok(())
    }
}

/// Every reported metric, in report column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    PLpips,
    PDists,
    PTempDrift,
    PDynLpips,
    RGhost,
    RSeam,
    ETemp,
    ESeam,
    ECopy,
    CamRotErr,
    CamTransErr,
    ObjMc,
}

impl Metric {
    pub const ALL: [Metric; 12] = [
        Metric::PLpips,
        Metric::PDists,
        Metric::PTempDrift,
        Metric::PDynLpips,
        Metric::RGhost,
        Metric::RSeam,
        Metric::ETemp,
        Metric::ESeam,
        Metric::ECopy,
        Metric::CamRotErr,
        Metric::CamTransErr,
        Metric::ObjMc,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Metric::PLpips => "p_lpips",
            Metric::PDists => "p_dists",
            Metric::PTempDrift => "p_tempdrift",
            Metric::PDynLpips => "p_dyn_lpips",
            Metric::RGhost => "r_ghost",
            Metric::RSeam => "r_seam",
            Metric::ETemp => "e_temp",
            Metric::ESeam => "e_seam",
            Metric::ECopy => "e_copy",
            Metric::CamRotErr => "cam_rot_err",
            Metric::CamTransErr => "cam_trans_err",
            Metric::ObjMc => "objmc",
        }
    }

    pub fn from_key(key: &str) -> Option<Metric> {
        Metric::ALL.into_iter().find(|m| m.key() == key)
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// Case-level metric values plus per-frame (or per-pair) traces.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricReport {
    values: [Option<f64>; 12],
    pub traces: BTreeMap<Metric, Vec<Option<f64>>>,
}

impl MetricReport {
    pub fn get(&self, m: Metric) -> Option<f64> {
        self.values[m.index()]
    }

    pub fn set(&mut self, m: Metric, v: Option<f64>) {
        self.values[m.index()] = v;
    }

    pub fn record(&mut self, m: Metric, outcome: MetricOutcome) {
        self.set(m, outcome.value);
        self.traces.insert(m, outcome.per_frame);
    }

    pub fn iter(&self) -> impl Iterator<Item = (Metric, Option<f64>)> + '_ {
        Metric::ALL.into_iter().map(|m| (m, self.get(m)))
    }
}
