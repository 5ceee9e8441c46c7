//! Per-run output files: `messages.csv`, `summary.json`, `edges.txt`.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use gossip_sim_core::metrics::{ByteCounters, MessageRecord};
use gossip_sim_core::{RunOutput, ScenarioConfig, Summary};
use serde::{Deserialize, Serialize};

use crate::config::ConfigFile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageRow {
    pub msg_id: String,
    pub publisher: u32,
    pub publish_ms: f64,
    pub size: u64,
    pub fragments: u32,
    pub warmup: bool,
    pub delivered: usize,
    pub l15_ms: Option<f64>,
    pub l85_ms: Option<f64>,
    pub l100_ms: Option<f64>,
    pub duplicates: u64,
    pub canceled: u64,
}

impl From<&MessageRecord> for MessageRow {
    fn from(m: &MessageRecord) -> Self {
        MessageRow {
            msg_id: m.id.to_string(),
            publisher: m.publisher.0,
            publish_ms: m.publish_time,
            size: m.size,
            fragments: m.fragments,
            warmup: m.warmup,
            delivered: m.completions.len(),
            l15_ms: m.coverage_latency(15),
            l85_ms: m.coverage_latency(85),
            l100_ms: m.coverage_latency(100),
            duplicates: m.duplicates,
            canceled: m.canceled,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bytes {
    pub payload: u64,
    pub ihave: u64,
    pub iwant: u64,
    pub idontwant: u64,
    pub framing: u64,
}

impl From<ByteCounters> for Bytes {
    fn from(b: ByteCounters) -> Self {
        Bytes {
            payload: b.payload,
            ihave: b.ihave,
            iwant: b.iwant,
            idontwant: b.idontwant,
            framing: b.framing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub messages: usize,
    pub measured: usize,
    pub mean_l15_ms: Option<f64>,
    pub mean_l85_ms: Option<f64>,
    pub mean_l100_ms: Option<f64>,
    pub delta_l_ms: Option<f64>,
    pub median_l100_ms: Option<f64>,
    pub mean_node_median_ms: Option<f64>,
    pub b_n: u64,
    pub bytes: Bytes,
    pub iwant_requests: u64,
    pub duplicates: u64,
    pub canceled: u64,
}

impl From<&Summary> for Metrics {
    fn from(s: &Summary) -> Self {
        Metrics {
            messages: s.messages,
            measured: s.measured,
            mean_l15_ms: s.mean_l15_ms,
            mean_l85_ms: s.mean_l85_ms,
            mean_l100_ms: s.mean_l100_ms,
            delta_l_ms: s.delta_l_ms,
            median_l100_ms: s.median_l100_ms,
            mean_node_median_ms: s.mean_node_median_ms,
            b_n: s.b_n,
            bytes: s.bytes.into(),
            iwant_requests: s.iwant_requests,
            duplicates: s.duplicates,
            canceled: s.canceled,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryFile {
    pub complete: bool,
    pub horizon_reached: bool,
    pub end_time_ms: f64,
    pub events: u64,
    pub seed: u64,
    pub metrics: Metrics,
    /// Full configuration of the run; feeding it back reproduces the run.
    pub config: ConfigFile,
}

impl SummaryFile {
    pub fn new(config: &ScenarioConfig, out: &RunOutput) -> Self {
        SummaryFile {
            complete: out.result.complete,
            horizon_reached: out.result.horizon_reached,
            end_time_ms: out.result.end_time,
            events: out.result.events_processed,
            seed: config.seed,
            metrics: Metrics::from(&out.summary),
            config: ConfigFile::from(config),
        }
    }
}

pub fn message_rows(out: &RunOutput) -> Vec<MessageRow> {
    out.result.ledger.messages.iter().map(MessageRow::from).collect()
}

pub fn write_messages_csv(path: &Path, rows: &[MessageRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes every output of one run into `dir`.
pub fn write_run(dir: &Path, config: &ScenarioConfig, out: &RunOutput, edges: bool) -> Result<SummaryFile> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_messages_csv(&dir.join("messages.csv"), &message_rows(out))?;
    let summary = SummaryFile::new(config, out);
    let json = serde_json::to_string_pretty(&summary)?;
    fs::write(dir.join("summary.json"), json + "\n")?;
    if edges {
        fs::write(dir.join("edges.txt"), out.network.edge_list_text())?;
    }
    Ok(summary)
}

/// Reads a configuration from either a config file or an emitted
/// `summary.json`.
pub fn load_config(text: &str) -> Result<ConfigFile, crate::ConfigError> {
    if let Ok(summary) = serde_json::from_str::<SummaryFile>(text) {
        return Ok(summary.config);
    }
    ConfigFile::from_json(text)
}
