//! Delivery timelines, byte counters and the evaluation quantities derived
//! from them.

use alloc::vec::Vec;

use crate::message::{MessageId, PeerId};
use crate::params::mbps_to_bytes_per_ms;
use crate::topology::diameter_estimate;

/// Width of the intervals used for the interval-count form of latencies.
pub const INTERVAL_MS: f64 = 100.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ByteCounters {
    pub payload: u64,
    pub ihave: u64,
    pub iwant: u64,
    pub idontwant: u64,
    pub framing: u64,
}

impl ByteCounters {
    /// Network-wide total, `B_N`.
    pub fn total(&self) -> u64 {
        self.payload + self.ihave + self.iwant + self.idontwant + self.framing
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MessageRecord {
    pub id: MessageId,
    pub publisher: PeerId,
    pub publish_time: f64,
    pub size: u64,
    pub fragments: u32,
    pub warmup: bool,
    /// Times at which nodes came to hold the complete message, in order.
    pub completions: Vec<f64>,
    pub duplicates: u64,
    pub duplicates_per_node: Vec<u32>,
    pub canceled: u64,
}

impl MessageRecord {
    pub fn is_fully_disseminated(&self) -> bool {
        self.completions.len() == self.duplicates_per_node.len()
    }

    /// Time from publication until `percent`% of the nodes hold the
    /// complete message. `None` if that coverage was never reached.
    pub fn coverage_latency(&self, percent: u32) -> Option<f64> {
        let n = self.duplicates_per_node.len();
        let needed = (percent as usize * n).div_ceil(100).max(1);
        self.completions
            .get(needed - 1)
            .map(|t| t - self.publish_time)
    }

    /// Median over nodes of the per-node delivery latency.
    pub fn median_node_latency(&self) -> Option<f64> {
        if !self.is_fully_disseminated() {
            return None;
        }
        let lat: Vec<f64> = self.completions.iter().map(|t| t - self.publish_time).collect();
        median(&lat)
    }
}

/// `ceil(latency / 100 ms)`.
pub fn interval_count(latency_ms: f64) -> u64 {
    libm::ceil(latency_ms / INTERVAL_MS).max(0.0) as u64
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsLedger {
    n_nodes: usize,
    pub messages: Vec<MessageRecord>,
    pub bytes: ByteCounters,
    pub iwant_requests: u64,
    completed: usize,
}

impl MetricsLedger {
    pub fn new(n_nodes: usize) -> Self {
        MetricsLedger {
            n_nodes,
            messages: Vec::new(),
            bytes: ByteCounters::default(),
            iwant_requests: 0,
            completed: 0,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Registers a published message and returns its record index.
    pub fn add_message(
        &mut self,
        id: MessageId,
        publisher: PeerId,
        publish_time: f64,
        size: u64,
        fragments: u32,
        warmup: bool,
    ) -> usize {
        self.messages.push(MessageRecord {
            id,
            publisher,
            publish_time,
            size,
            fragments,
            warmup,
            completions: Vec::new(),
            duplicates: 0,
            duplicates_per_node: alloc::vec![0; self.n_nodes],
            canceled: 0,
        });
        self.messages.len() - 1
    }

    pub fn record_completion(&mut self, record: usize, time: f64) {
        let rec = &mut self.messages[record];
        debug_assert!(time >= rec.publish_time);
        debug_assert!(rec.completions.last().is_none_or(|&t| t <= time));
        rec.completions.push(time);
        self.completed += 1;
    }

    pub fn record_duplicate(&mut self, record: usize, node: PeerId) {
        let rec = &mut self.messages[record];
        rec.duplicates += 1;
        rec.duplicates_per_node[node.index()] += 1;
    }

    pub fn record_cancel(&mut self, record: usize) {
        self.messages[record].canceled += 1;
    }

    pub fn all_delivered(&self) -> bool {
        self.completed == self.messages.len() * self.n_nodes
    }

    /// Duplicate receptions per node, summed over messages.
    pub fn duplicates_per_node(&self) -> Vec<u64> {
        let mut out = alloc::vec![0u64; self.n_nodes];
        for rec in &self.messages {
            for (o, d) in out.iter_mut().zip(&rec.duplicates_per_node) {
                *o += u64::from(*d);
            }
        }
        out
    }

    pub fn summarize(&self) -> Summary {
        summarize(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub messages: usize,
    pub measured: usize,
    pub complete: bool,
    pub mean_l15_ms: Option<f64>,
    pub mean_l85_ms: Option<f64>,
    pub mean_l100_ms: Option<f64>,
    /// Sample standard deviation of per-message `L100`.
    pub delta_l_ms: Option<f64>,
    /// Median of per-message `L100` across measured messages.
    pub median_l100_ms: Option<f64>,
    /// Mean over measured messages of the median node delivery latency.
    pub mean_node_median_ms: Option<f64>,
    pub bytes: ByteCounters,
    pub b_n: u64,
    pub iwant_requests: u64,
    pub duplicates: u64,
    pub canceled: u64,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

pub fn sample_std_dev(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs)?;
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    Some(libm::sqrt(ss / (xs.len() - 1) as f64))
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    })
}

/// Latency statistics exclude warm-up messages; byte totals include them.
pub fn summarize(ledger: &MetricsLedger) -> Summary {
    let measured: Vec<&MessageRecord> = ledger.messages.iter().filter(|m| !m.warmup).collect();
    let per = |p: u32| -> Vec<f64> {
        measured
            .iter()
            .filter_map(|m| m.coverage_latency(p))
            .collect()
    };
    let l100 = per(100);
    let node_medians: Vec<f64> = measured
        .iter()
        .filter_map(|m| m.median_node_latency())
        .collect();
    Summary {
        messages: ledger.messages.len(),
        measured: measured.len(),
        complete: ledger.messages.iter().all(MessageRecord::is_fully_disseminated),
        mean_l15_ms: mean(&per(15)),
        mean_l85_ms: mean(&per(85)),
        mean_l100_ms: mean(&l100),
        delta_l_ms: if l100.len() >= 3 {
            sample_std_dev(&l100)
        } else {
            None
        },
        median_l100_ms: median(&l100),
        mean_node_median_ms: mean(&node_medians),
        bytes: ledger.bytes,
        b_n: ledger.bytes.total(),
        iwant_requests: ledger.iwant_requests,
        duplicates: ledger.messages.iter().map(|m| m.duplicates).sum(),
        canceled: ledger.messages.iter().map(|m| m.canceled).sum(),
    }
}

/// Closed-form latency estimates for a message of `size_bytes` over a
/// `degree`-regular mesh of `nodes` peers.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticalEstimate {
    pub hops: u32,
    /// Time for one relay to push the message to all `degree` mesh peers
    /// over its shared uplink.
    pub hop_transmission_ms: f64,
    pub baseline_ms: f64,
    pub fragmented_transmission_ms: f64,
    pub fragmented_ms: f64,
    /// New peers covered in each staggered transmission round.
    pub stagger_new: Vec<u64>,
    pub stagger_cumulative: Vec<u64>,
}

/// Peers newly reached in rounds `0..rounds` of sequential relaying: `2^X`
/// while `X < degree`, afterwards the sum of the previous `degree` rounds.
pub fn stagger_growth(degree: usize, rounds: usize) -> Vec<u64> {
    let mut new: Vec<u64> = Vec::with_capacity(rounds);
    for x in 0..rounds {
        let v = if x < degree {
            1u64.checked_shl(x as u32).unwrap_or(u64::MAX)
        } else {
            new[x - degree..x].iter().fold(0u64, |a, b| a.saturating_add(*b))
        };
        new.push(v);
    }
    new
}

pub fn analytical_estimate(
    size_bytes: u64,
    rate_mbps: f64,
    latency_ms: f64,
    nodes: u64,
    degree: u64,
    fragments: u32,
) -> AnalyticalEstimate {
    let hops = diameter_estimate(nodes, degree);
    let single = size_bytes as f64 / mbps_to_bytes_per_ms(rate_mbps);
    let hop_tx = single * degree as f64;
    let h = f64::from(hops);
    let baseline_ms = (latency_ms + hop_tx) * h;
    let fragmented_transmission_ms = if hops == 0 {
        0.0
    } else {
        hop_tx * (2.0 * h - 1.0) / f64::from(fragments.max(1))
    };
    let fragmented_ms = fragmented_transmission_ms + latency_ms * h;

    let mut stagger_new = Vec::new();
    let mut stagger_cumulative = Vec::new();
    let mut covered = 0u64;
    let growth = stagger_growth(degree as usize, 64);
    for v in growth {
        covered = covered.saturating_add(v);
        stagger_new.push(v);
        stagger_cumulative.push(covered);
        if covered >= nodes {
            break;
        }
    }
    AnalyticalEstimate {
        hops,
        hop_transmission_ms: hop_tx,
        baseline_ms,
        fragmented_transmission_ms,
        fragmented_ms,
        stagger_new,
        stagger_cumulative,
    }
}
