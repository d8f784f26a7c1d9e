//! Report envelope shared by all subcommands.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use toricfrob::fan::FanFile;

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: Vec<String>,
    pub input_hash: String,
    pub tool_version: String,
    pub passed: bool,
    pub result: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
}

/// What a subcommand hands back before it is wrapped in a [`Report`].
pub struct Outcome {
    pub result: Value,
    pub passed: bool,
    pub tsv: Option<String>,
    pub inputs: Vec<FanFile>,
}

impl Outcome {
    pub fn new(result: impl Serialize, passed: bool) -> anyhow::Result<Self> {
        Ok(Self { result: serde_json::to_value(result)?, passed, tsv: None, inputs: Vec::new() })
    }

    pub fn with_tsv(mut self, tsv: String) -> Self {
        self.tsv = Some(tsv);
        self
    }

    pub fn with_inputs(mut self, inputs: Vec<FanFile>) -> Self {
        self.inputs = inputs;
        self
    }
}

/// SHA-256 of the command echo and the input fans.
pub fn input_hash(command: &[String], inputs: &[FanFile]) -> String {
    let payload = serde_json::to_vec(&(command, inputs)).expect("hash payload");
    hex::encode(Sha256::digest(payload))
}

impl Report {
    pub fn build(command: Vec<String>, outcome: &Outcome, timing_ms: Option<f64>) -> Self {
        Self {
            input_hash: input_hash(&command, &outcome.inputs),
            command,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            passed: outcome.passed,
            result: outcome.result.clone(),
            timing_ms,
        }
    }
}
