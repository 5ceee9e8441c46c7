//! Scenario description, run driver and the built-in sweep presets.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::index;

use crate::engine::{self, Publication, RunError, RunResult, SimulationSetup};
use crate::error::ConfigError;
use crate::message::PeerId;
use crate::metrics::Summary;
use crate::params::{MeshParams, ProtocolConfig, TransportParams};
use crate::rng::{self, Stream};
use crate::topology::{build_network, Network};

/// Time allowed after the last publication before a run is declared
/// incomplete.
pub const DEFAULT_DRAIN_MS: f64 = 120_000.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioConfig {
    pub n_nodes: usize,
    /// Number of published messages; each comes from a distinct publisher
    /// unless `single_publisher` is set.
    pub n_publishers: usize,
    pub message_size: u64,
    pub inter_message_delay_ms: f64,
    pub mesh: MeshParams,
    pub transport: TransportParams,
    pub idontwant: bool,
    pub stagger: bool,
    pub fragmentation: bool,
    pub seed: u64,
    pub horizon_ms: f64,
    pub warmup_count: usize,
    /// One node publishes every message.
    pub single_publisher: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig::scenario2(200_000)
    }
}

impl ScenarioConfig {
    fn base(n_nodes: usize, n_publishers: usize, size: u64, delay: f64) -> Self {
        ScenarioConfig {
            n_nodes,
            n_publishers,
            message_size: size,
            inter_message_delay_ms: delay,
            mesh: MeshParams::default(),
            transport: TransportParams::default(),
            idontwant: false,
            stagger: false,
            fragmentation: false,
            seed: 1,
            horizon_ms: n_publishers as f64 * delay + DEFAULT_DRAIN_MS,
            warmup_count: 2,
            single_publisher: false,
        }
    }

    /// Network-size sweep row: 12 publishers, 200 KB, 3 s apart.
    pub fn scenario1(n_nodes: usize) -> Self {
        Self::base(n_nodes, 12, 200_000, 3000.0)
    }

    /// Message-size sweep row: 1000 nodes, 12 publishers, 4 s apart.
    pub fn scenario2(size: u64) -> Self {
        Self::base(1000, 12, size, 4000.0)
    }

    /// Publisher-count sweep row: 1000 nodes, 50 KB, 100 ms apart.
    pub fn scenario3(n_publishers: usize) -> Self {
        Self::base(1000, n_publishers, 50_000, 100.0)
    }

    pub fn with_idontwant(mut self) -> Self {
        self.idontwant = true;
        self
    }

    pub fn with_stagger(mut self, group_size: usize) -> Self {
        self.stagger = true;
        self.mesh.stagger_group_size = group_size;
        self
    }

    pub fn with_fragments(mut self, n: u32) -> Self {
        self.fragmentation = true;
        self.mesh.fragment_count = n;
        self
    }

    /// Re-derives the horizon from the publication schedule.
    pub fn with_default_horizon(mut self) -> Self {
        self.horizon_ms = self.n_publishers as f64 * self.inter_message_delay_ms + DEFAULT_DRAIN_MS;
        self
    }

    pub fn protocol(&self) -> ProtocolConfig {
        ProtocolConfig {
            mesh: self.mesh,
            idontwant: self.idontwant,
            stagger: self.stagger,
            fragmentation: self.fragmentation,
            seed: self.seed,
            ..ProtocolConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_nodes < 2 {
            return Err(ConfigError::new("n_nodes", "need at least two nodes"));
        }
        if self.n_publishers == 0 {
            return Err(ConfigError::new("n_publishers", "must be positive"));
        }
        if !self.single_publisher && self.n_publishers > self.n_nodes {
            return Err(ConfigError::new("n_publishers", "must not exceed n_nodes"));
        }
        if self.message_size == 0 {
            return Err(ConfigError::new("message_size", "must be positive"));
        }
        if !(self.inter_message_delay_ms >= 0.0) {
            return Err(ConfigError::new("inter_message_delay_ms", "must be non-negative"));
        }
        if !(self.horizon_ms > self.n_publishers as f64 * self.inter_message_delay_ms) {
            return Err(ConfigError::new(
                "horizon_ms",
                "must exceed n_publishers * inter_message_delay_ms",
            ));
        }
        self.protocol().validate()?;
        self.transport.validate()
    }

    pub fn network(&self) -> Result<Network, ConfigError> {
        Ok(build_network(self.n_nodes, &self.mesh, self.seed)?
            .with_latency(self.transport.latency_ms)
            .with_bandwidth(self.transport.bandwidth_mbps))
    }

    /// Publication schedule: publisher `k` publishes at `k * delay`.
    pub fn publications(&self) -> Vec<Publication> {
        let mut rng = rng::derive(self.seed, Stream::Publishers, 0);
        let publishers: Vec<PeerId> = if self.single_publisher {
            let p = index::sample(&mut rng, self.n_nodes, 1).index(0) as u32;
            alloc::vec![PeerId(p); self.n_publishers]
        } else {
            index::sample(&mut rng, self.n_nodes, self.n_publishers)
                .into_iter()
                .map(|i| PeerId(i as u32))
                .collect()
        };
        publishers
            .into_iter()
            .enumerate()
            .map(|(k, publisher)| Publication {
                time: k as f64 * self.inter_message_delay_ms,
                publisher,
                size: self.message_size,
                warmup: k < self.warmup_count,
            })
            .collect()
    }
}

#[derive(Debug)]
pub struct RunOutput {
    pub network: Network,
    pub summary: Summary,
    pub result: RunResult,
}

impl RunOutput {
    pub fn complete(&self) -> bool {
        self.result.complete
    }
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<RunOutput, RunError> {
    run_with(config, false)
}

/// Like [`run_scenario`], optionally keeping a record of every transfer.
pub fn run_with(config: &ScenarioConfig, record_transfers: bool) -> Result<RunOutput, RunError> {
    config.validate().map_err(RunError::Config)?;
    let network = config.network().map_err(RunError::Config)?;
    let setup = SimulationSetup {
        network: network.clone(),
        protocol: config.protocol(),
        transport: config.transport,
        publications: config.publications(),
        horizon_ms: config.horizon_ms,
        seed: config.seed,
        record_transfers,
    };
    let result = engine::run(setup)?;
    let summary = result.ledger.summarize();
    Ok(RunOutput {
        network,
        summary,
        result,
    })
}

/// One cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub name: String,
    pub axes: Vec<(&'static str, String)>,
    pub config: ScenarioConfig,
}

impl SweepCell {
    fn new(name: String, axes: Vec<(&'static str, String)>, config: ScenarioConfig) -> Self {
        SweepCell { name, axes, config }
    }
}

/// Publisher counts for the publisher sweep. The table header and its row
/// labels disagree by two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PublisherCounts {
    #[default]
    Header,
    RowLabels,
}

impl PublisherCounts {
    pub fn values(self) -> [usize; 5] {
        match self {
            PublisherCounts::Header => [22, 42, 62, 82, 102],
            PublisherCounts::RowLabels => [20, 40, 60, 80, 100],
        }
    }
}

pub const PRESETS: &[&str] = &[
    "table1-scenario1",
    "table1-scenario2",
    "table1-scenario3",
    "table3-latency-sweep",
    "table3-latency-sweep-stagger",
    "feature-matrix",
];

pub const SCENARIO2_SIZES: [u64; 5] = [200_000, 400_000, 600_000, 800_000, 1_000_000];
pub const TABLE3_LATENCIES: [f64; 3] = [25.0, 50.0, 100.0];
pub const TABLE3_WARMUPS: usize = 15;
pub const TABLE3_MEASURED: usize = 10;

/// A single publisher sends warm-up messages followed by measured ones.
pub fn table3_cell(size: u64, latency_ms: f64, stagger: bool) -> ScenarioConfig {
    let mut c = ScenarioConfig::scenario2(size).with_idontwant();
    if stagger {
        c = c.with_stagger(1);
    }
    c.transport.latency_ms = latency_ms;
    c.single_publisher = true;
    c.warmup_count = TABLE3_WARMUPS;
    c.n_publishers = TABLE3_WARMUPS + TABLE3_MEASURED;
    c.with_default_horizon()
}

/// The eight feature combinations compared on one base scenario.
pub fn feature_matrix(base: ScenarioConfig) -> Vec<SweepCell> {
    let mut cells = Vec::new();
    let mut push = |name: &str, c: ScenarioConfig| {
        let axes = alloc::vec![
            ("idontwant", format!("{}", c.idontwant)),
            ("stagger_k", if c.stagger { format!("{}", c.mesh.stagger_group_size) } else { String::from("0") }),
            ("fragments", if c.fragmentation { format!("{}", c.mesh.fragment_count) } else { String::from("1") }),
        ];
        cells.push(SweepCell::new(String::from(name), axes, c));
    };
    push("baseline", base);
    push("idontwant", base.with_idontwant());
    for k in 1..=4 {
        push(&format!("stagger-k{k}"), base.with_idontwant().with_stagger(k));
    }
    push("fragments-n4", base.with_fragments(4));
    push("all", base.with_idontwant().with_stagger(3).with_fragments(4));
    cells
}

/// Expands a named preset into its cells, or `None` for an unknown name.
pub fn preset(name: &str, publishers: PublisherCounts, seed: u64) -> Option<Vec<SweepCell>> {
    let mut cells = match name {
        "table1-scenario1" => (1..=6)
            .map(|i| {
                let n = 2000 * i;
                let c = ScenarioConfig::scenario1(n);
                SweepCell::new(format!("n{n}"), alloc::vec![("n_nodes", format!("{n}"))], c)
            })
            .collect(),
        "table1-scenario2" => SCENARIO2_SIZES
            .iter()
            .map(|&s| {
                let c = ScenarioConfig::scenario2(s);
                SweepCell::new(format!("s{}kb", s / 1000), alloc::vec![("message_size", format!("{s}"))], c)
            })
            .collect(),
        "table1-scenario3" => publishers
            .values()
            .iter()
            .map(|&p| {
                let c = ScenarioConfig::scenario3(p);
                SweepCell::new(format!("p{p}"), alloc::vec![("n_publishers", format!("{p}"))], c)
            })
            .collect(),
        "table3-latency-sweep" | "table3-latency-sweep-stagger" => {
            let stagger = name.ends_with("stagger");
            let mut v = Vec::new();
            for &s in &SCENARIO2_SIZES {
                for &lat in &TABLE3_LATENCIES {
                    v.push(SweepCell::new(
                        format!("s{}kb-lat{}", s / 1000, lat as u32),
                        alloc::vec![
                            ("message_size", format!("{s}")),
                            ("latency_ms", format!("{lat}")),
                        ],
                        table3_cell(s, lat, stagger),
                    ));
                }
            }
            v
        }
        "feature-matrix" => feature_matrix(ScenarioConfig::scenario2(1_000_000)),
        _ => return None,
    };
    for cell in &mut cells {
        cell.config.seed = seed;
    }
    Some(cells)
}
