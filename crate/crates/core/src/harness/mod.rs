//! Case ingestion, proxy-case generation, corpus evaluation and reports.

mod case_io;
mod corpus;
mod proxy;
mod report;

pub use case_io::{discover_cases, list_frames, load_case, load_frame_dir, write_case};
pub use corpus::{evaluate_case, evaluate_corpus, CaseOutcome};
pub use proxy::{gen_proxy_case, synthetic_source_video, ProxyKind, ProxyParams, Rect};
pub use report::{format_decimal, round6, Aggregate, CaseEntry, CorpusReport};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::GeometryConfig;
use crate::metrics::RegionParams;
use crate::perceptual::{self, PerceptualBackend};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("case error: {0}")]
    Case(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

/// Evaluation settings. Every field is optional in the JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub sigma: f64,
    pub boundary_radius: usize,
    pub neutral_color: [f64; 3],
    pub geometry: GeometryConfig,
    pub lambda_objmc: f64,
    pub perceptual_backend: String,
    pub structure_backend: String,
    /// Executable for the `external` backend; falls back to the
    /// environment variable when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub external_command: Option<PathBuf>,
    /// Not echoed in reports, which must not depend on it.
    #[serde(skip_serializing)]
    pub workers: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            sigma: 0.18,
            boundary_radius: 5,
            neutral_color: [0.5; 3],
            geometry: GeometryConfig::default(),
            lambda_objmc: crate::control::DEFAULT_LAMBDA_OBJMC,
            perceptual_backend: perceptual::REFERENCE_PERCEPTUAL.into(),
            structure_backend: perceptual::REFERENCE_DISTS.into(),
            external_command: None,
            workers: 1,
            seed: 0,
        }
    }
}

impl EvalConfig {
    pub fn from_json_str(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad("sigma must be positive");
        }
        if self.boundary_radius == 0 {
            return bad("boundary_radius must be positive");
        }
        if !self.neutral_color.iter().all(|c| (0.0..=1.0).contains(c)) {
            return bad("neutral_color channels must lie in [0, 1]");
        }
        if !(self.lambda_objmc > 0.0 && self.lambda_objmc.is_finite()) {
            return bad("lambda_objmc must be positive");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        self.geometry
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        self.backends()?;
        Ok(())
    }

    pub fn region_params(&self) -> RegionParams {
        RegionParams {
            sigma: self.sigma,
            boundary_radius: self.boundary_radius,
            neutral: self.neutral_color,
        }
    }

    /// Instantiates `(perceptual, structure)` backends.
    pub fn backends(&self) -> Result<(Box<dyn PerceptualBackend>, Box<dyn PerceptualBackend>), HarnessError> {
        let make = |name: &str| {
            perceptual::backend_by_name(name, self.external_command.as_deref())
                .map_err(|e| HarnessError::Config(e.to_string()))
        };
        Ok((make(&self.perceptual_backend)?, make(&self.structure_backend)?))
    }
}
