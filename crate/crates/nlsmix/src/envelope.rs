use serde::Serialize;

use crate::cache::sha256_hex;

pub const SCHEMA_VERSION: u32 = 1;

/// Everything a run produced. `stats` is the only part that may differ
/// between two runs of the same config.
#[derive(Debug, Serialize)]
pub struct Envelope {
    pub schema_version: u32,
    pub command: String,
    pub config: serde_json::Value,
    pub input_hash: String,
    pub records: serde_json::Value,
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
    pub tables: Vec<String>,
    pub stats: Stats,
}

#[derive(Debug, Serialize)]
pub struct Stats {
    pub wall_clock_seconds: f64,
    pub threads: usize,
    pub cache_hits: usize,
    pub cache_misses: usize,
}

/// Hash of the command and its resolved inputs, in canonical JSON.
pub fn input_hash(command: &str, config: &serde_json::Value) -> String {
    let text = format!("nlsmix/{SCHEMA_VERSION}/{command}/{config}");
    sha256_hex(text.as_bytes())
}
