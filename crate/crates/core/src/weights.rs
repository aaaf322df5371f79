//! Versioned JSON weights files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::NormStats;
use crate::error::{Error, Result};
use crate::forecast::spec_for;
use crate::models::{Backend, CircuitSpec, ModelKind, ParamVector, DEFAULT_CUTOFF};
use crate::training::TrainConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Trained parameters plus what is needed to rebuild and reuse the model.
#[derive(Debug, Clone, PartialEq)]
pub struct PretrainedWeights {
    pub kind: ModelKind,
    pub n_features: usize,
    pub params: ParamVector,
    pub norm_stats: Option<NormStats>,
    /// CV truncation; `None` for DV models.
    pub cutoff: Option<usize>,
    pub seed: u64,
    pub config_digest: String,
    pub source: String,
}

impl PretrainedWeights {
    pub fn from_training(
        spec: &CircuitSpec,
        params: ParamVector,
        norm_stats: Option<NormStats>,
        config: &TrainConfig,
        source: impl Into<String>,
    ) -> Self {
        PretrainedWeights {
            kind: spec.kind(),
            n_features: spec.n_features(),
            params,
            norm_stats,
            cutoff: spec.cutoff(),
            seed: config.seed,
            config_digest: config.digest(),
            source: source.into(),
        }
    }

    pub fn build_spec(&self) -> Result<CircuitSpec> {
        let cutoff = self.cutoff.unwrap_or(DEFAULT_CUTOFF);
        let spec = spec_for(self.kind, self.n_features, cutoff)?;
        if spec.slots() != self.params.names() {
            return Err(Error::Weights(format!(
                "slots {:?} do not match the {} layout {:?}",
                self.params.names(),
                self.kind,
                spec.slots()
            )));
        }
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = WeightsFile {
            schema_version: SCHEMA_VERSION,
            model: self.kind.to_string(),
            n_features: self.n_features,
            cutoff: self.cutoff,
            slots: self
                .params
                .names()
                .iter()
                .zip(self.params.values())
                .map(|(name, &value)| Slot {
                    name: name.clone(),
                    value,
                })
                .collect(),
            norm_stats: self.norm_stats.clone(),
            seed: self.seed,
            config_digest: self.config_digest.clone(),
            source: self.source.clone(),
        };
        let mut text = serde_json::to_string_pretty(&file)
            .map_err(|e| Error::Weights(format!("cannot serialize weights: {e}")))?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let probe: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| Error::Weights(format!("weights file is not valid JSON: {e}")))?;
        match probe.get("schema_version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(SCHEMA_VERSION) => {}
            Some(v) => {
                return Err(Error::Weights(format!(
                    "unsupported schema version {v}; this build reads version {SCHEMA_VERSION}"
                )))
            }
            None => return Err(Error::Weights("missing schema_version".into())),
        }
        let file: WeightsFile = serde_json::from_value(probe)
            .map_err(|e| Error::Weights(format!("malformed weights file: {e}")))?;
        let kind: ModelKind = file
            .model
            .parse()
            .map_err(|e| Error::Weights(format!("{e}")))?;
        let (names, values) = file.slots.into_iter().map(|s| (s.name, s.value)).unzip();
        let params = ParamVector::new(names, values).map_err(|e| Error::Weights(format!("{e}")))?;
        if kind.backend() == Backend::Dv && file.cutoff.is_some() {
            return Err(Error::Weights("DV weights carry no cutoff".into()));
        }
        let weights = PretrainedWeights {
            kind,
            n_features: file.n_features,
            params,
            norm_stats: file.norm_stats,
            cutoff: file.cutoff,
            seed: file.seed,
            config_digest: file.config_digest,
            source: file.source,
        };
        weights.build_spec().map_err(|e| match e {
            Error::Weights(m) => Error::Weights(m),
            other => Error::Weights(other.to_string()),
        })?;
        Ok(weights)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_json(&text)
    }

    /// Bundled reference weights: `cv1`, `cv2` or `cv3`.
    pub fn builtin(name: &str) -> Result<Self> {
        let text = match name {
            "cv1" => include_str!("../fixtures/weights/cv1.json"),
            "cv2" => include_str!("../fixtures/weights/cv2.json"),
            "cv3" => include_str!("../fixtures/weights/cv3.json"),
            _ => {
                return Err(Error::Weights(format!(
                    "no bundled weights named '{name}' (have cv1, cv2, cv3)"
                )))
            }
        };
        Self::from_json(text)
    }

    /// A path, or `builtin:NAME` for bundled weights.
    pub fn resolve(location: &str) -> Result<Self> {
        match location.strip_prefix("builtin:") {
            Some(name) => Self::builtin(name),
            None => Self::load(Path::new(location)),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsFile {
    schema_version: u32,
    model: String,
    n_features: usize,
    cutoff: Option<usize>,
    slots: Vec<Slot>,
    norm_stats: Option<NormStats>,
    seed: u64,
    config_digest: String,
    source: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Slot {
    name: String,
    value: f64,
}
