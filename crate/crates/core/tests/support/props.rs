//! Run-level invariants checked over many seeds. Each check returns a
//! description of the first violation it finds.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use gossip_sim_core::protocol::{JobKind, JobState};
use gossip_sim_core::scenario::{run_with, RunOutput};
use gossip_sim_core::{build_network, MessageId, PeerId, ScenarioConfig};

pub const NODES: usize = 200;

/// A 200-node scenario small enough to run dozens of times.
pub fn small(seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        n_nodes: NODES,
        n_publishers: 4,
        message_size: 100_000,
        inter_message_delay_ms: 1000.0,
        warmup_count: 1,
        seed,
        ..ScenarioConfig::scenario2(100_000)
    }
    .with_default_horizon()
}

/// Every extension enabled at once.
pub fn small_all(seed: u64) -> ScenarioConfig {
    small(seed).with_idontwant().with_stagger(2).with_fragments(3)
}

fn run(c: &ScenarioConfig) -> Result<RunOutput, String> {
    let out = run_with(c, true).map_err(|e| e.to_string())?;
    if !out.complete() {
        return Err(format!("seed {}: run incomplete", c.seed));
    }
    Ok(out)
}

pub fn determinism(seed: u64) -> Result<(), String> {
    let c = small_all(seed);
    let a = run(&c)?;
    let b = run(&c)?;
    let (a, b) = (&a.result, &b.result);
    if a.event_digest != b.event_digest || a.events_processed != b.events_processed {
        return Err(format!("seed {seed}: event sequences differ"));
    }
    if a.ledger != b.ledger {
        return Err(format!("seed {seed}: ledgers differ"));
    }
    if a.transfers != b.transfers || a.links != b.links {
        return Err(format!("seed {seed}: transfers differ"));
    }
    Ok(())
}

/// Bytes leaving every link arrive on it, and the ledger's payload and
/// framing account for exactly the bytes put on the wire.
pub fn byte_conservation(seed: u64) -> Result<(), String> {
    let c = small(seed).with_idontwant().with_fragments(2);
    let out = run(&c)?;
    let r = &out.result;
    for l in &r.links {
        if l.bytes_sent != l.bytes_received {
            return Err(format!(
                "seed {seed}: link {}->{} sent {} received {}",
                l.src, l.dst, l.bytes_sent, l.bytes_received
            ));
        }
    }
    let on_links: u64 = r.links.iter().map(|l| l.bytes_sent).sum();
    let in_records: u64 = r.transfers.iter().map(|t| t.bytes).sum();
    let framing = c.protocol().framing_overhead * r.transfers.len() as u64;
    let payload = r.ledger.bytes.payload;
    if on_links != in_records + framing || in_records != payload {
        return Err(format!(
            "seed {seed}: links {on_links}, transfers {in_records}, ledger payload {payload} + framing {framing}"
        ));
    }
    let s = &out.summary;
    if s.b_n != s.bytes.total() {
        return Err(format!("seed {seed}: B_N {} != byte total {}", s.b_n, s.bytes.total()));
    }
    Ok(())
}

/// Every node delivers every message exactly once.
pub fn single_delivery(seed: u64) -> Result<(), String> {
    for c in [small(seed), small(seed).with_idontwant().with_fragments(4)] {
        let out = run(&c)?;
        for m in &out.result.ledger.messages {
            if m.completions.len() != NODES {
                return Err(format!(
                    "seed {seed}: message delivered {} times over {NODES} nodes",
                    m.completions.len()
                ));
            }
            for n in &out.result.nodes {
                let held = if m.fragments > 1 {
                    n.is_reassembled(&m.id)
                } else {
                    n.has_seen(&m.id)
                };
                if !held {
                    return Err(format!("seed {seed}: node {} lacks a message", n.peer()));
                }
            }
        }
    }
    Ok(())
}

/// Fragments are full chunks plus a non-empty remainder, add up to the
/// parent, and each always travels with the same size.
pub fn fragment_conservation(seed: u64) -> Result<(), String> {
    let mut c = small(seed).with_fragments(3);
    c.message_size = 100_001;
    let out = run(&c)?;
    let mut sent: BTreeMap<MessageId, BTreeSet<u64>> = BTreeMap::new();
    for t in &out.result.transfers {
        sent.entry(t.msg).or_default().insert(t.bytes);
    }
    for m in &out.result.ledger.messages {
        let mut sizes = BTreeMap::new();
        for i in 0..m.fragments {
            let f = m.id.fragment(i);
            match sent.get(&f).map(|s| s.iter().copied().collect::<Vec<_>>()).as_deref() {
                Some([s]) => sizes.insert(f, *s),
                other => return Err(format!("seed {seed}: fragment {i} sent with sizes {other:?}")),
            };
        }
        let total: u64 = sizes.values().sum();
        if total != m.size || m.fragments != 3 {
            return Err(format!("seed {seed}: fragments sum to {total}, message is {}", m.size));
        }
        let chunk = m.size.div_ceil(u64::from(m.fragments));
        let ordered: Vec<u64> = (0..m.fragments).map(|i| sizes[&m.id.fragment(i)]).collect();
        let (last, full) = ordered.split_last().unwrap();
        if full.iter().any(|&s| s != chunk) || *last == 0 || *last > chunk {
            return Err(format!("seed {seed}: unexpected fragment sizes {ordered:?}"));
        }
    }
    Ok(())
}

/// With one peer per group and no timeouts, a node starts forwarding to its
/// next peer only once the previous transfer has left.
pub fn stagger_ordering(seed: u64) -> Result<(), String> {
    let mut c = small(seed).with_idontwant().with_stagger(1);
    c.mesh.stagger_interval = 1e9;
    let out = run(&c)?;
    let mut finished: BTreeMap<(PeerId, PeerId, MessageId), f64> = BTreeMap::new();
    for t in out.result.transfers.iter().filter(|t| t.kind == JobKind::Forward) {
        finished.insert((t.from, t.to, t.msg), t.finished);
    }
    for node in &out.result.nodes {
        let mut by_msg: BTreeMap<MessageId, Vec<_>> = BTreeMap::new();
        for j in node.jobs().filter(|j| j.kind == JobKind::Forward) {
            by_msg.entry(j.msg).or_default().push(j);
        }
        for jobs in by_msg.values_mut() {
            jobs.sort_by_key(|j| j.group_index);
            let mut last_done: Option<f64> = None;
            let mut last_start: Option<f64> = None;
            for j in jobs.iter() {
                let Some(start) = j.start_time else { continue };
                if let Some(s) = last_start {
                    if start <= s {
                        return Err(format!("seed {seed}: node {} started group {} early", node.peer(), j.group_index));
                    }
                }
                if let Some(d) = last_done {
                    if start + 1e-9 < d {
                        return Err(format!(
                            "seed {seed}: node {} group {} began at {start} before the previous finished at {d}",
                            node.peer(),
                            j.group_index
                        ));
                    }
                }
                last_start = Some(start);
                if j.state == JobState::Done {
                    last_done = finished.get(&(node.peer(), j.target, j.msg)).copied();
                }
            }
        }
    }
    Ok(())
}

/// Mesh degrees stay within bounds and the overlay is connected and
/// reproducible.
pub fn degree_bounds(seed: u64) -> Result<(), String> {
    let c = small(seed);
    let a = build_network(NODES, &c.mesh, seed).map_err(|e| e.to_string())?;
    let b = build_network(NODES, &c.mesh, seed).map_err(|e| e.to_string())?;
    if a.edge_list_text() != b.edge_list_text() {
        return Err(format!("seed {seed}: topology not reproducible"));
    }
    if !a.is_connected() {
        return Err(format!("seed {seed}: disconnected overlay"));
    }
    for p in 0..NODES as u32 {
        let d = a.degree(PeerId(p));
        if d < c.mesh.d_low || d > c.mesh.d_high {
            return Err(format!("seed {seed}: node {p} has degree {d}"));
        }
        let set: BTreeSet<_> = a.neighbors(PeerId(p)).iter().collect();
        if set.len() != d || set.contains(&PeerId(p)) {
            return Err(format!("seed {seed}: node {p} has repeated or self links"));
        }
    }
    Ok(())
}

/// A canceled send never reaches the wire.
pub fn suppression_soundness(seed: u64) -> Result<(), String> {
    let c = small(seed).with_idontwant().with_stagger(2);
    let out = run(&c)?;
    let sent: BTreeSet<(PeerId, PeerId, MessageId)> =
        out.result.transfers.iter().map(|t| (t.from, t.to, t.msg)).collect();
    for node in &out.result.nodes {
        for j in node.jobs().filter(|j| j.state == JobState::Canceled) {
            if sent.contains(&(node.peer(), j.target, j.msg)) {
                return Err(format!("seed {seed}: canceled job at {} was transmitted", node.peer()));
            }
        }
    }
    Ok(())
}

pub type Check = fn(u64) -> Result<(), String>;

pub const CHECKS: [(&str, Check); 7] = [
    ("determinism", determinism),
    ("byte conservation", byte_conservation),
    ("single delivery", single_delivery),
    ("fragment conservation", fragment_conservation),
    ("stagger ordering", stagger_ordering),
    ("degree bounds", degree_bounds),
    ("suppression soundness", suppression_soundness),
];
