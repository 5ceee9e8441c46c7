//! The 16-node, degree-3 mesh of the round-by-round suppression example and
//! a brute-force round model to check the simulator against.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use gossip_sim_core::engine::{self, Publication, RunResult, SimulationSetup};
use gossip_sim_core::protocol::JobKind;
use gossip_sim_core::{MeshParams, Network, PeerId, ProtocolConfig, TransportParams};

/// Node labels by index; node 0 (`A`) publishes.
pub const NAMES: [&str; 16] = [
    "A", "C", "G", "H", "L", "K", "D", "M", "J", "F", "N", "I", "O", "P", "E", "B",
];

const EDGES: [(&str, &str); 24] = [
    ("A", "G"),
    ("A", "L"),
    ("A", "B"),
    ("C", "G"),
    ("C", "H"),
    ("C", "D"),
    ("G", "F"),
    ("H", "F"),
    ("H", "P"),
    ("L", "M"),
    ("L", "F"),
    ("K", "I"),
    ("K", "P"),
    ("K", "E"),
    ("D", "J"),
    ("D", "E"),
    ("M", "O"),
    ("M", "P"),
    ("J", "N"),
    ("J", "I"),
    ("N", "I"),
    ("N", "B"),
    ("O", "E"),
    ("O", "B"),
];

pub fn id(name: &str) -> u32 {
    NAMES.iter().position(|n| *n == name).expect("known node") as u32
}

pub fn name(id: u32) -> &'static str {
    NAMES[id as usize]
}

pub fn edges() -> Vec<(u32, u32)> {
    EDGES.iter().map(|(a, b)| (id(a), id(b))).collect()
}

fn adjacency() -> Vec<Vec<u32>> {
    let mut adj = vec![Vec::new(); NAMES.len()];
    for (a, b) in edges() {
        adj[a as usize].push(b);
        adj[b as usize].push(a);
    }
    for l in &mut adj {
        l.sort_unstable();
    }
    adj
}

/// First-reception round of every node.
pub fn layers() -> Vec<u32> {
    let adj = adjacency();
    let mut layer = vec![u32::MAX; NAMES.len()];
    layer[0] = 0;
    let mut frontier = vec![0u32];
    let mut r = 0;
    while !frontier.is_empty() {
        r += 1;
        let mut next = Vec::new();
        for &u in &frontier {
            for &v in &adj[u as usize] {
                if layer[v as usize] == u32::MAX {
                    layer[v as usize] = r;
                    next.push(v);
                }
            }
        }
        frontier = next;
    }
    layer
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundTrace {
    /// `(round, from, to)` of every transmission.
    pub sends: BTreeSet<(u32, u32, u32)>,
}

impl RoundTrace {
    pub fn pairs(&self) -> BTreeSet<(u32, u32)> {
        self.sends.iter().map(|&(_, a, b)| (a, b)).collect()
    }
}

/// Everyone holding the message sends in lock-step rounds; IDONTWANT notices
/// from a round's receivers land before the following round starts.
/// Ties between same-round senders go to the lowest id unless `first` names
/// the sender for a node.
pub fn round_model(idontwant: bool) -> RoundTrace {
    round_model_with(idontwant, &BTreeMap::new())
}

pub fn round_model_with(idontwant: bool, first: &BTreeMap<u32, u32>) -> RoundTrace {
    let adj = adjacency();
    let n = NAMES.len();
    let mut received: Vec<Option<u32>> = vec![None; n];
    let mut from: Vec<Option<u32>> = vec![None; n];
    let mut dontwant: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); n];
    received[0] = Some(0);
    let mut sends = BTreeSet::new();
    for round in 1.. {
        let senders: Vec<u32> = (0..n as u32)
            .filter(|&u| received[u as usize] == Some(round - 1))
            .collect();
        if senders.is_empty() {
            break;
        }
        let mut arrivals: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for &u in &senders {
            for &v in &adj[u as usize] {
                if Some(v) == from[u as usize] {
                    continue;
                }
                if idontwant && dontwant[u as usize].contains(&v) {
                    continue;
                }
                sends.insert((round, u, v));
                arrivals.entry(v).or_default().push(u);
            }
        }
        let mut fresh = Vec::new();
        for (v, by) in arrivals {
            if received[v as usize].is_none() {
                received[v as usize] = Some(round);
                from[v as usize] = match first.get(&v) {
                    Some(u) if by.contains(u) => Some(*u),
                    _ => by.iter().min().copied(),
                };
                fresh.push(v);
            }
        }
        if idontwant {
            for v in fresh {
                for &w in &adj[v as usize] {
                    if Some(w) != from[v as usize] {
                        dontwant[w as usize].insert(v);
                    }
                }
            }
        }
    }
    RoundTrace { sends }
}

/// Runs the simulator with timings that make it round-synchronous: sends
/// start `processing` ms after reception, notices need only `latency` ms,
/// and payload transfer time is negligible.
pub fn simulate(idontwant: bool) -> RunResult {
    let mesh = MeshParams {
        d: 3,
        d_low: 2,
        d_high: 4,
        d_lazy: 0,
        d_out: 1,
        gossip_factor: 0.0,
        large_msg_threshold: 1,
        ..MeshParams::default()
    };
    let transport = TransportParams {
        bandwidth_mbps: 1e9,
        latency_ms: 0.1,
        cwnd_model: false,
        processing_delay_ms: 0.9,
        ..TransportParams::default()
    };
    let network = Network::from_edges(NAMES.len(), &edges())
        .with_latency(transport.latency_ms)
        .with_bandwidth(transport.bandwidth_mbps);
    engine::run(SimulationSetup {
        network,
        protocol: ProtocolConfig {
            mesh,
            idontwant,
            ..ProtocolConfig::default()
        },
        transport,
        publications: vec![Publication {
            time: 0.0,
            publisher: PeerId(0),
            size: 1,
            warmup: false,
        }],
        horizon_ms: 10_000.0,
        seed: 1,
        record_transfers: true,
    })
    .expect("golden run")
}

/// Simulated transmissions as `(round, from, to)`; a round is one
/// processing-plus-latency period.
pub fn simulated_sends(r: &RunResult) -> BTreeSet<(u32, u32, u32)> {
    r.transfers
        .iter()
        .filter(|t| t.kind == JobKind::Forward)
        .map(|t| {
            let round = t.started.floor() as u32 + 1;
            (round, t.from.0, t.to.0)
        })
        .collect()
}

pub fn pretty(pairs: &BTreeSet<(u32, u32)>) -> String {
    pairs
        .iter()
        .map(|&(a, b)| format!("{}->{}", name(a), name(b)))
        .collect::<Vec<_>>()
        .join(" ")
}

/// The peer each node first received the message from.
pub fn first_senders(r: &RunResult) -> BTreeMap<u32, u32> {
    let mut best: BTreeMap<u32, (f64, u32)> = BTreeMap::new();
    for t in r.transfers.iter().filter(|t| t.kind == JobKind::Forward) {
        let e = best.entry(t.to.0).or_insert((f64::INFINITY, u32::MAX));
        if t.finished < e.0 {
            *e = (t.finished, t.from.0);
        }
    }
    best.into_iter().map(|(v, (_, u))| (v, u)).collect()
}

/// Compares simulator and round model. Returns the suppressed transmissions
/// on success.
pub fn check() -> Result<BTreeSet<(u32, u32)>, String> {
    let on = simulate(true);
    let off = simulate(false);
    let expected_on = round_model_with(true, &first_senders(&on));
    let expected_off = round_model_with(false, &first_senders(&off));
    if !(on.complete && off.complete) {
        return Err("golden runs did not reach every node".into());
    }
    let sim_on = simulated_sends(&on);
    if sim_on != expected_on.sends {
        return Err(format!(
            "sends with IDONTWANT differ: simulator {:?} vs model {:?}",
            sim_on, expected_on.sends
        ));
    }
    let sim_off = simulated_sends(&off);
    if sim_off != expected_off.sends {
        return Err(format!(
            "sends without IDONTWANT differ: simulator {:?} vs model {:?}",
            sim_off, expected_off.sends
        ));
    }
    let suppressed: BTreeSet<(u32, u32)> =
        expected_off.pairs().difference(&expected_on.pairs()).copied().collect();
    let sim_suppressed: BTreeSet<(u32, u32)> = sim_off
        .iter()
        .map(|&(_, a, b)| (a, b))
        .collect::<BTreeSet<_>>()
        .difference(&sim_on.iter().map(|&(_, a, b)| (a, b)).collect())
        .copied()
        .collect();
    if sim_suppressed != suppressed {
        return Err(format!(
            "suppressed sets differ: simulator [{}] vs model [{}]",
            pretty(&sim_suppressed),
            pretty(&suppressed)
        ));
    }
    Ok(suppressed)
}
