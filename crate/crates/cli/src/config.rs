//! Flat JSON configuration schema.
//!
//! Every field is optional; missing fields take the defaults of
//! [`ScenarioConfig::default`]. Sizes may be given as integers (bytes) or as
//! strings such as `"1MB"`. `horizon_ms` defaults to the publication span
//! plus a drain allowance.

use gossip_sim_core::params::{MeshParams, TransportParams};
use gossip_sim_core::scenario::DEFAULT_DRAIN_MS;
use gossip_sim_core::ScenarioConfig;
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::{Map, Value};

use crate::units::parse_size;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error("override {0:?} is not of the form key=value")]
    Override(String),
}

impl ConfigError {
    pub fn path(&self) -> Option<&str> {
        match self {
            ConfigError::Parse { path, .. } => Some(path),
            ConfigError::Invalid { field, .. } => Some(field),
            ConfigError::Override(_) => None,
        }
    }
}

impl From<gossip_sim_core::ConfigError> for ConfigError {
    fn from(e: gossip_sim_core::ConfigError) -> Self {
        ConfigError::Invalid {
            field: e.field.to_string(),
            reason: e.reason,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub n_nodes: usize,
    pub n_publishers: usize,
    #[serde(deserialize_with = "size")]
    pub message_size: u64,
    pub inter_message_delay_ms: f64,
    pub single_publisher: bool,
    pub warmup_count: usize,
    pub seed: u64,
    pub horizon_ms: Option<f64>,

    pub idontwant: bool,
    pub stagger: bool,
    pub fragmentation: bool,

    pub d: usize,
    pub d_low: usize,
    pub d_high: usize,
    pub d_lazy: usize,
    pub d_out: usize,
    pub gossip_factor: f64,
    pub heartbeat_interval_ms: f64,
    pub stagger_interval_ms: f64,
    pub stagger_group_size: usize,
    #[serde(deserialize_with = "size")]
    pub large_msg_threshold: u64,
    pub fragment_count: u32,
    pub flood_publish: bool,

    pub bandwidth_mbps: f64,
    pub latency_ms: f64,
    pub cwnd_model: bool,
    pub mss: u64,
    pub initial_window_segments: u64,
    #[serde(deserialize_with = "size")]
    pub ssthresh: u64,
    #[serde(deserialize_with = "size")]
    pub max_cwnd: u64,
    pub idle_reset: bool,
    pub idle_timeout_ms: f64,
    pub processing_delay_ms: f64,
}

fn size<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Size {
        Bytes(u64),
        Text(String),
    }
    match Size::deserialize(d)? {
        Size::Bytes(b) => Ok(b),
        Size::Text(t) => parse_size(&t).map_err(serde::de::Error::custom),
    }
}

impl Default for ConfigFile {
    fn default() -> Self {
        let mut c = ConfigFile::from(&ScenarioConfig::default());
        c.horizon_ms = None;
        c
    }
}

impl From<&ScenarioConfig> for ConfigFile {
    fn from(c: &ScenarioConfig) -> Self {
        let (m, t) = (&c.mesh, &c.transport);
        ConfigFile {
            n_nodes: c.n_nodes,
            n_publishers: c.n_publishers,
            message_size: c.message_size,
            inter_message_delay_ms: c.inter_message_delay_ms,
            single_publisher: c.single_publisher,
            warmup_count: c.warmup_count,
            seed: c.seed,
            horizon_ms: Some(c.horizon_ms),
            idontwant: c.idontwant,
            stagger: c.stagger,
            fragmentation: c.fragmentation,
            d: m.d,
            d_low: m.d_low,
            d_high: m.d_high,
            d_lazy: m.d_lazy,
            d_out: m.d_out,
            gossip_factor: m.gossip_factor,
            heartbeat_interval_ms: m.heartbeat_interval,
            stagger_interval_ms: m.stagger_interval,
            stagger_group_size: m.stagger_group_size,
            large_msg_threshold: m.large_msg_threshold,
            fragment_count: m.fragment_count,
            flood_publish: m.flood_publish,
            bandwidth_mbps: t.bandwidth_mbps,
            latency_ms: t.latency_ms,
            cwnd_model: t.cwnd_model,
            mss: t.mss,
            initial_window_segments: t.initial_window_segments,
            ssthresh: t.ssthresh,
            max_cwnd: t.max_cwnd,
            idle_reset: t.idle_reset,
            idle_timeout_ms: t.idle_timeout_ms,
            processing_delay_ms: t.processing_delay_ms,
        }
    }
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Applies `key=value` overrides. Values are read as JSON and fall back
    /// to plain strings, so `message_size=1MB` and `idontwant=true` both work.
    pub fn apply_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self, ConfigError> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let Value::Object(mut map) = serde_json::to_value(self).expect("config serializes") else {
            unreachable!("config is an object")
        };
        for o in overrides {
            let o = o.as_ref();
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| ConfigError::Override(o.to_string()))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(ConfigError::Override(o.to_string()));
            }
            let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
            map.insert(k.to_string(), value);
        }
        Self::from_value(map)
    }

    fn from_value(map: Map<String, Value>) -> Result<Self, ConfigError> {
        serde_path_to_error::deserialize(Value::Object(map)).map_err(|e| ConfigError::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })
    }

    pub fn to_scenario(&self) -> Result<ScenarioConfig, ConfigError> {
        let mesh = MeshParams {
            d: self.d,
            d_low: self.d_low,
            d_high: self.d_high,
            d_lazy: self.d_lazy,
            d_out: self.d_out,
            gossip_factor: self.gossip_factor,
            heartbeat_interval: self.heartbeat_interval_ms,
            stagger_interval: self.stagger_interval_ms,
            stagger_group_size: self.stagger_group_size,
            large_msg_threshold: self.large_msg_threshold,
            fragment_count: self.fragment_count,
            flood_publish: self.flood_publish,
        };
        let transport = TransportParams {
            bandwidth_mbps: self.bandwidth_mbps,
            latency_ms: self.latency_ms,
            cwnd_model: self.cwnd_model,
            mss: self.mss,
            initial_window_segments: self.initial_window_segments,
            ssthresh: self.ssthresh,
            max_cwnd: self.max_cwnd,
            idle_reset: self.idle_reset,
            idle_timeout_ms: self.idle_timeout_ms,
            processing_delay_ms: self.processing_delay_ms,
        };
        let horizon_ms = self.horizon_ms.unwrap_or(
            self.n_publishers as f64 * self.inter_message_delay_ms + DEFAULT_DRAIN_MS,
        );
        let c = ScenarioConfig {
            n_nodes: self.n_nodes,
            n_publishers: self.n_publishers,
            message_size: self.message_size,
            inter_message_delay_ms: self.inter_message_delay_ms,
            mesh,
            transport,
            idontwant: self.idontwant,
            stagger: self.stagger,
            fragmentation: self.fragmentation,
            seed: self.seed,
            horizon_ms,
            warmup_count: self.warmup_count,
            single_publisher: self.single_publisher,
        };
        c.validate()?;
        Ok(c)
    }
}
