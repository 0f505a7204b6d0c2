use serde::{Deserialize, Serialize};

/// Cell counts of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellSummary {
    pub total: usize,
    pub ok: usize,
    pub diverged: usize,
}

/// Record of one CLI invocation, written for failed runs too.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub seed: Option<u64>,
    pub threads: usize,
    /// The parsed configuration after flag overrides, or `null` if parsing failed.
    pub config: serde_json::Value,
    pub status: String,
    pub exit_code: i32,
    pub error: Option<String>,
    pub wallclock_ms: u64,
    pub cells: Option<CellSummary>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, threads: usize) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            seed: None,
            threads,
            config: serde_json::Value::Null,
            status: "ok".to_string(),
            exit_code: 0,
            error: None,
            wallclock_ms: 0,
            cells: None,
            outputs: Vec::new(),
        }
    }
}
