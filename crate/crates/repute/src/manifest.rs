//! Per-stage records and the run manifest.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::files::{read_json, write_json, FileError};

/// Written as `stage.json` in each stage directory. Output paths are
/// relative to the run's output root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub input_digest: String,
    pub outputs: BTreeMap<String, String>,
    pub counts: BTreeMap<String, u64>,
    /// Skipped and failed items, in processing order.
    pub log: Vec<String>,
    pub wall_clock_ms: i64,
}

impl StageRecord {
    pub fn load(path: &Path) -> Result<Self, FileError> {
        read_json(path)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSummary {
    pub counts: BTreeMap<String, u64>,
    pub log: Vec<String>,
    pub wall_clock_ms: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub config_digest: String,
    pub fixture_digest: String,
    pub model_id: String,
    pub temperature: f64,
    /// Pipeline choices that are not fixed by the method itself.
    pub notes: Vec<String>,
    pub stages: BTreeMap<String, StageSummary>,
    /// Every stage output with its content digest.
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn add_stage(&mut self, record: &StageRecord) {
        self.stages.insert(
            record.stage.clone(),
            StageSummary {
                counts: record.counts.clone(),
                log: record.log.clone(),
                wall_clock_ms: record.wall_clock_ms,
            },
        );
        self.outputs.extend(record.outputs.iter().map(|(k, v)| (k.clone(), v.clone())));
    }

    pub fn write(&self, path: &Path) -> Result<(), FileError> {
        write_json(path, self)
    }
}

pub const PIPELINE_NOTES: &[&str] = &[
    "aspect extraction categorizes sentences in chunks and unifies topics across chunks in a second call",
    "duplicate aspects are merged by normalized name, then by a model synonym check",
    "mention filtering keeps alias sentences and asks the model only about their direct neighbours",
    "stage-two judgment prompts are fresh requests carrying the three evil definitions, not the stage-one transcript",
    "system prompts and temperature are pipeline choices recorded here",
];
