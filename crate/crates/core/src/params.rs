//! Protocol and transport parameters.

use crate::error::ConfigError;

/// GossipSub mesh and large-message parameters. Times are milliseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshParams {
    pub d: usize,
    pub d_low: usize,
    pub d_high: usize,
    pub d_lazy: usize,
    /// Parsed and stored only; nothing enforces outbound quotas without mesh
    /// maintenance.
    pub d_out: usize,
    pub gossip_factor: f64,
    pub heartbeat_interval: f64,
    pub stagger_interval: f64,
    /// Parallel group size when staggering; 1 means strictly sequential.
    pub stagger_group_size: usize,
    pub large_msg_threshold: u64,
    pub fragment_count: u32,
    pub flood_publish: bool,
}

impl Default for MeshParams {
    fn default() -> Self {
        MeshParams {
            d: 8,
            d_low: 6,
            d_high: 12,
            d_lazy: 6,
            d_out: 3,
            gossip_factor: 0.05,
            heartbeat_interval: 1000.0,
            stagger_interval: 200.0,
            stagger_group_size: 1,
            large_msg_threshold: 16 * 1024,
            fragment_count: 1,
            flood_publish: false,
        }
    }
}

impl MeshParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.d_low <= self.d && self.d <= self.d_high) {
            return Err(ConfigError::new("d", "requires d_low <= d <= d_high"));
        }
        if self.d_out > self.d_low {
            return Err(ConfigError::new("d_out", "must not exceed d_low"));
        }
        if self.d < 1 {
            return Err(ConfigError::new("d", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.gossip_factor) {
            return Err(ConfigError::new("gossip_factor", "must lie in [0, 1]"));
        }
        if !(self.heartbeat_interval > 0.0) {
            return Err(ConfigError::new("heartbeat_interval_ms", "must be positive"));
        }
        if !(self.stagger_interval > 0.0) {
            return Err(ConfigError::new("stagger_interval_ms", "must be positive"));
        }
        if self.stagger_group_size < 1 {
            return Err(ConfigError::new("stagger_group_size", "must be at least 1"));
        }
        if self.fragment_count < 1 {
            return Err(ConfigError::new("fragment_count", "must be at least 1"));
        }
        if self.flood_publish {
            return Err(ConfigError::new("flood_publish", "flood publishing is not modeled"));
        }
        Ok(())
    }
}

/// Everything a peer's state machine needs to know about the run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig {
    pub mesh: MeshParams,
    pub idontwant: bool,
    pub stagger: bool,
    pub fragmentation: bool,
    /// Heartbeats a message stays available for IWANT replies.
    pub history_length: usize,
    /// Heartbeats a message is advertised in IHAVE gossip.
    pub gossip_window: usize,
    /// Per-RPC framing overhead in bytes.
    pub framing_overhead: u64,
    /// Seed mixed into message identifiers.
    pub seed: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            mesh: MeshParams::default(),
            idontwant: false,
            stagger: false,
            fragmentation: false,
            history_length: 5,
            gossip_window: 3,
            framing_overhead: 64,
            seed: 0,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.mesh.validate()?;
        if self.gossip_window == 0 || self.gossip_window > self.history_length {
            return Err(ConfigError::new(
                "gossip_window",
                "must lie in [1, history_length]",
            ));
        }
        Ok(())
    }
}

/// Flow-level transport knobs. Bandwidth is per direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportParams {
    pub bandwidth_mbps: f64,
    pub latency_ms: f64,
    pub cwnd_model: bool,
    pub mss: u64,
    pub initial_window_segments: u64,
    pub ssthresh: u64,
    pub max_cwnd: u64,
    pub idle_reset: bool,
    pub idle_timeout_ms: f64,
    /// Delay between full reception and the start of forwarding. IDONTWANT
    /// announcements are not delayed.
    pub processing_delay_ms: f64,
}

impl Default for TransportParams {
    fn default() -> Self {
        TransportParams {
            bandwidth_mbps: 50.0,
            latency_ms: 100.0,
            cwnd_model: true,
            mss: 1460,
            initial_window_segments: 10,
            ssthresh: 64 * 1024,
            max_cwnd: 1024 * 1024,
            idle_reset: false,
            idle_timeout_ms: 1000.0,
            processing_delay_ms: 0.0,
        }
    }
}

impl TransportParams {
    /// Bandwidth in bytes per millisecond.
    pub fn bytes_per_ms(&self) -> f64 {
        mbps_to_bytes_per_ms(self.bandwidth_mbps)
    }

    pub fn initial_window(&self) -> u64 {
        self.mss * self.initial_window_segments
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.bandwidth_mbps > 0.0 && self.bandwidth_mbps.is_finite()) {
            return Err(ConfigError::new("bandwidth_mbps", "must be positive and finite"));
        }
        if !(self.latency_ms >= 0.0 && self.latency_ms.is_finite()) {
            return Err(ConfigError::new("latency_ms", "must be non-negative"));
        }
        if self.mss == 0 {
            return Err(ConfigError::new("mss", "must be positive"));
        }
        if self.initial_window_segments == 0 {
            return Err(ConfigError::new("initial_window_segments", "must be positive"));
        }
        if self.max_cwnd < self.initial_window() {
            return Err(ConfigError::new("max_cwnd", "must be at least the initial window"));
        }
        if !(self.idle_timeout_ms > 0.0) {
            return Err(ConfigError::new("idle_timeout_ms", "must be positive"));
        }
        if !(self.processing_delay_ms >= 0.0 && self.processing_delay_ms.is_finite()) {
            return Err(ConfigError::new("processing_delay_ms", "must be non-negative"));
        }
        Ok(())
    }
}

pub fn mbps_to_bytes_per_ms(mbps: f64) -> f64 {
    // 1 Mbit/s = 10^6 / 8 bytes per 1000 ms
    mbps * 1000.0 / 8.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_parameters() {
        let m = MeshParams::default();
        assert_eq!((m.d, m.d_low, m.d_high, m.d_lazy, m.d_out), (8, 6, 12, 6, 3));
        assert_eq!(m.gossip_factor, 0.05);
        assert_eq!(m.heartbeat_interval, 1000.0);
        assert_eq!(m.stagger_interval, 200.0);
        assert!(!m.flood_publish);
        assert_eq!(m.d_out, m.d_low / 2);
        m.validate().unwrap();
        ProtocolConfig::default().validate().unwrap();
        TransportParams::default().validate().unwrap();
    }

    #[test]
    fn unit_conversion() {
        assert_eq!(mbps_to_bytes_per_ms(50.0), 6250.0);
        assert_eq!(TransportParams::default().initial_window(), 14_600);
    }

    #[test]
    fn rejects_inconsistent_degrees() {
        let m = MeshParams { d_low: 9, ..MeshParams::default() };
        assert_eq!(m.validate().unwrap_err().field, "d");
        let m = MeshParams { d_out: 7, ..MeshParams::default() };
        assert_eq!(m.validate().unwrap_err().field, "d_out");
        let m = MeshParams { stagger_group_size: 0, ..MeshParams::default() };
        assert_eq!(m.validate().unwrap_err().field, "stagger_group_size");
    }
}
