//! Deterministic event loop for one run.
//!
//! Transfers on a directed link are sent in order, one at a time. The
//! transfers at the head of their links share the sender's uplink max-min
//! fairly; each is further capped by its window (`cwnd / rtt`) and by an
//! equal share of the receiver's downlink. Rates are recomputed whenever a
//! transfer starts or finishes or a window grows. Control RPCs skip the
//! bandwidth model and arrive after the link latency.

use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng;

use super::link::LinkState;
use super::rate::water_fill;
use crate::error::{ConfigError, ProtocolError};
use crate::message::{Message, MessageId, PeerId};
use crate::metrics::MetricsLedger;
use crate::params::{mbps_to_bytes_per_ms, ProtocolConfig, TransportParams};
use crate::protocol::{Action, JobId, JobKind, NodeState};
use crate::rng::{self, Stream};
use crate::rpc::{ControlKind, ControlRpc};
use crate::topology::Network;

/// Transfers this close to their end are complete.
const FINISH_EPS_MS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Publication {
    pub time: f64,
    pub publisher: PeerId,
    pub size: u64,
    pub warmup: bool,
}

#[derive(Debug, Clone)]
pub struct SimulationSetup {
    pub network: Network,
    pub protocol: ProtocolConfig,
    pub transport: TransportParams,
    pub publications: Vec<Publication>,
    pub horizon_ms: f64,
    pub seed: u64,
    /// Keep a record of every payload transfer.
    pub record_transfers: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferRecord {
    pub from: PeerId,
    pub to: PeerId,
    pub msg: MessageId,
    pub kind: JobKind,
    pub bytes: u64,
    /// Handed to the transport.
    pub accepted: f64,
    /// First byte on the wire.
    pub started: f64,
    /// Last byte left the sender.
    pub finished: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkSummary {
    pub src: PeerId,
    pub dst: PeerId,
    pub bytes_sent: u64,
    pub bytes_received: u64,
    pub cwnd: u64,
}

#[derive(Debug)]
pub struct RunResult {
    pub ledger: MetricsLedger,
    /// Every message reached every node.
    pub complete: bool,
    pub horizon_reached: bool,
    pub end_time: f64,
    pub events_processed: u64,
    /// Digest of the processed event sequence.
    pub event_digest: u64,
    pub links: Vec<LinkSummary>,
    pub transfers: Vec<TransferRecord>,
    pub nodes: Vec<NodeState>,
}

#[derive(Debug, Clone)]
enum EventKind {
    Publish(usize),
    Heartbeat(PeerId),
    StaggerTimeout { node: PeerId, token: u64 },
    StartJob { node: PeerId, job: JobId, to: PeerId, msg: MessageId, size: u64 },
    UplinkDone { node: PeerId },
    CwndTick { link: usize },
    Deliver { link: usize, msg: MessageId, bytes: u64 },
    Control { from: PeerId, to: Vec<PeerId>, rpc: Arc<ControlRpc> },
}

impl EventKind {
    fn tag(&self) -> (u64, u64) {
        match self {
            EventKind::Publish(i) => (1, *i as u64),
            EventKind::Heartbeat(p) => (2, u64::from(p.0)),
            EventKind::StaggerTimeout { node, token } => (3, u64::from(node.0) ^ (token << 20)),
            EventKind::StartJob { node, job, .. } => (4, u64::from(node.0) ^ (job.0 << 20)),
            EventKind::UplinkDone { node } => (5, u64::from(node.0)),
            EventKind::CwndTick { link } => (6, *link as u64),
            EventKind::Deliver { link, bytes, .. } => (7, *link as u64 ^ (bytes << 24)),
            EventKind::Control { from, to, .. } => (8, u64::from(from.0) ^ ((to.len() as u64) << 32)),
        }
    }
}

#[derive(Debug)]
struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    // reversed: the heap pops the earliest event, ties by insertion order
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

#[derive(Debug, Clone)]
struct Transfer {
    link: usize,
    src: PeerId,
    dst: PeerId,
    job: JobId,
    msg: MessageId,
    payload: u64,
    total: f64,
    sent: f64,
    rate: f64,
    last_update: f64,
    accepted: f64,
    started: f64,
    active: bool,
}

pub struct Simulation {
    network: Network,
    protocol: ProtocolConfig,
    transport: TransportParams,
    nodes: Vec<NodeState>,
    links: Vec<LinkState>,
    link_index: BTreeMap<(u32, u32), usize>,
    transfers: Vec<Transfer>,
    free_transfers: Vec<usize>,
    out_active: Vec<Vec<usize>>,
    in_active: Vec<Vec<usize>>,
    events: BinaryHeap<Event>,
    seq: u64,
    messages: BTreeMap<MessageId, Message>,
    record_of: BTreeMap<MessageId, usize>,
    ledger: MetricsLedger,
    publications: Vec<Publication>,
    published: usize,
    pending_work: usize,
    horizon: f64,
    bandwidth: f64,
    record_transfers: bool,
    trace: Vec<TransferRecord>,
    digest: u64,
    processed: u64,
    scratch_flows: Vec<usize>,
    /// Pending completion wake-up per uplink; never later than the true
    /// earliest completion.
    uplink_wake: Vec<f64>,
    scratch_caps: Vec<f64>,
    scratch_rates: Vec<f64>,
}

impl Simulation {
    pub fn new(setup: SimulationSetup) -> Result<Self, ConfigError> {
        setup.protocol.validate()?;
        setup.transport.validate()?;
        let n = setup.network.n_nodes();
        for p in &setup.publications {
            if p.publisher.index() >= n {
                return Err(ConfigError::new("n_publishers", "publisher outside the network"));
            }
            if p.size == 0 {
                return Err(ConfigError::new("message_size", "must be positive"));
            }
        }
        let mut protocol = setup.protocol;
        protocol.seed = setup.seed;
        let nodes: Vec<NodeState> = (0..n as u32)
            .map(|p| {
                let peer = PeerId(p);
                NodeState::new(
                    peer,
                    setup.network.neighbors(peer).to_vec(),
                    setup.network.known_peers(peer),
                    protocol,
                    rng::derive(setup.seed, Stream::Peer, u64::from(p)),
                )
            })
            .collect();
        let bandwidth = mbps_to_bytes_per_ms(setup.network.bandwidth_mbps());
        let mut sim = Simulation {
            protocol,
            transport: setup.transport,
            nodes,
            links: Vec::new(),
            link_index: BTreeMap::new(),
            transfers: Vec::new(),
            free_transfers: Vec::new(),
            out_active: alloc::vec![Vec::new(); n],
            in_active: alloc::vec![Vec::new(); n],
            events: BinaryHeap::new(),
            seq: 0,
            messages: BTreeMap::new(),
            record_of: BTreeMap::new(),
            ledger: MetricsLedger::new(n),
            publications: setup.publications,
            published: 0,
            pending_work: 0,
            horizon: setup.horizon_ms,
            bandwidth,
            record_transfers: setup.record_transfers,
            trace: Vec::new(),
            digest: 0xcbf2_9ce4_8422_2325,
            processed: 0,
            scratch_flows: Vec::new(),
            uplink_wake: alloc::vec![f64::INFINITY; n],
            scratch_caps: Vec::new(),
            scratch_rates: Vec::new(),
            network: setup.network,
        };
        for i in 0..sim.publications.len() {
            let t = sim.publications[i].time;
            sim.push(t, EventKind::Publish(i));
        }
        let hb = sim.protocol.mesh.heartbeat_interval;
        for p in 0..n as u32 {
            let jitter = rng::derive(setup.seed, Stream::Heartbeat, u64::from(p)).gen_range(0.0..hb);
            sim.push(jitter, EventKind::Heartbeat(PeerId(p)));
        }
        Ok(sim)
    }

    fn push(&mut self, time: f64, kind: EventKind) {
        let seq = self.seq;
        self.seq += 1;
        self.events.push(Event { time, seq, kind });
    }

    pub fn run(mut self) -> Result<RunResult, ProtocolError> {
        let mut horizon_reached = false;
        let mut now = 0.0;
        while let Some(ev) = self.events.pop() {
            if ev.time > self.horizon {
                horizon_reached = true;
                break;
            }
            now = ev.time;
            self.note(&ev);
            self.dispatch(ev.kind, now)?;
        }
        let links = self
            .links
            .iter()
            .map(|l| LinkSummary {
                src: l.src,
                dst: l.dst,
                bytes_sent: l.bytes_sent,
                bytes_received: l.bytes_received,
                cwnd: l.cwnd,
            })
            .collect();
        Ok(RunResult {
            complete: self.ledger.all_delivered(),
            ledger: self.ledger,
            horizon_reached,
            end_time: now,
            events_processed: self.processed,
            event_digest: self.digest,
            links,
            transfers: self.trace,
            nodes: self.nodes,
        })
    }

    fn note(&mut self, ev: &Event) {
        let (tag, payload) = ev.kind.tag();
        for word in [ev.time.to_bits(), tag, payload] {
            self.digest ^= word;
            self.digest = self.digest.wrapping_mul(0x0000_0100_0000_01b3);
        }
        self.processed += 1;
    }

    fn quiescent(&self) -> bool {
        self.published == self.publications.len()
            && self.pending_work == 0
            && self.ledger.all_delivered()
    }

    fn dispatch(&mut self, kind: EventKind, now: f64) -> Result<(), ProtocolError> {
        match kind {
            EventKind::Publish(i) => {
                let p = self.publications[i];
                self.published += 1;
                let out = self.nodes[p.publisher.index()].publish(p.size, now)?;
                let rec = self.ledger.add_message(
                    out.message.id,
                    p.publisher,
                    now,
                    p.size,
                    out.parts.len() as u32,
                    p.warmup,
                );
                self.record_of.insert(out.message.id, rec);
                for part in &out.parts {
                    self.record_of.insert(part.id, rec);
                    self.messages.insert(part.id, part.clone());
                }
                self.apply(p.publisher, out.actions, now);
            }
            EventKind::Heartbeat(p) => {
                let actions = self.nodes[p.index()].heartbeat(now);
                self.apply(p, actions, now);
                if !self.quiescent() {
                    let next = now + self.protocol.mesh.heartbeat_interval;
                    self.push(next, EventKind::Heartbeat(p));
                }
            }
            EventKind::StaggerTimeout { node, token } => {
                let actions = self.nodes[node.index()].on_stagger_timeout(token, now);
                self.apply(node, actions, now);
            }
            EventKind::StartJob {
                node,
                job,
                to,
                msg,
                size,
            } => {
                self.pending_work -= 1;
                self.start_job(node, job, to, msg, size, now);
            }
            EventKind::UplinkDone { node } => {
                // superseded by an earlier wake-up
                if self.uplink_wake[node.index()] == now {
                    self.uplink_wake[node.index()] = f64::INFINITY;
                    self.finish_next(node, now);
                }
            }
            EventKind::CwndTick { link } => {
                let l = &mut self.links[link];
                l.tick_pending = false;
                if l.is_busy() && l.cwnd < self.transport.max_cwnd {
                    let old_cap = l.window_rate(&self.transport);
                    l.cwnd_update(now, &self.transport);
                    let (src, rtt, head) = (l.src, l.rtt, l.queue[0]);
                    if l.cwnd < self.transport.max_cwnd {
                        l.tick_pending = true;
                        self.push(now + rtt, EventKind::CwndTick { link });
                    }
                    // a flow below its old window cap is bottlenecked elsewhere
                    // and keeps its allocation
                    if self.transfers[head].rate >= old_cap * (1.0 - 1e-9) {
                        self.recompute_uplink(src, now);
                    }
                }
            }
            EventKind::Deliver { link, msg, bytes } => {
                self.pending_work -= 1;
                let l = &mut self.links[link];
                l.bytes_received += bytes;
                let (from, to) = (l.src, l.dst);
                let message = &self.messages[&msg];
                let actions = self.nodes[to.index()].handle_message_received(message, from, now)?;
                self.apply(to, actions, now);
            }
            EventKind::Control { from, to, rpc } => {
                for target in to {
                    let node = &mut self.nodes[target.index()];
                    let actions = match rpc.kind() {
                        ControlKind::IHave => node.handle_ihave(rpc.ids(), from, now),
                        ControlKind::IWant => node.handle_iwant(rpc.ids(), from, now),
                        ControlKind::IDontWant => {
                            let mut out = Vec::new();
                            for id in rpc.ids() {
                                out.extend(node.handle_idontwant(*id, from, now));
                            }
                            out
                        }
                    };
                    self.apply(target, actions, now);
                }
            }
        }
        Ok(())
    }

    fn apply(&mut self, node: PeerId, actions: Vec<Action>, now: f64) {
        for action in actions {
            match action {
                Action::Transmit { job, to, msg, size } => {
                    let delay = self.transport.processing_delay_ms;
                    if delay > 0.0 {
                        self.pending_work += 1;
                        self.push(
                            now + delay,
                            EventKind::StartJob {
                                node,
                                job,
                                to,
                                msg,
                                size,
                            },
                        );
                    } else {
                        self.start_job(node, job, to, msg, size, now);
                    }
                }
                Action::Control { to, rpc } => self.send_control(node, to, rpc, now),
                Action::ArmStaggerTimer { at, token } => {
                    self.push(at, EventKind::StaggerTimeout { node, token });
                }
                Action::Received { .. } => {}
                Action::Completed { logical } => {
                    let rec = self.record_of[&logical];
                    self.ledger.record_completion(rec, now);
                }
                Action::Duplicate { msg, .. } => {
                    let rec = self.record_of[&msg];
                    self.ledger.record_duplicate(rec, node);
                }
                Action::Canceled { msg, .. } => {
                    let rec = self.record_of[&msg];
                    self.ledger.record_cancel(rec);
                }
            }
        }
    }

    fn send_control(&mut self, from: PeerId, to: Vec<PeerId>, rpc: ControlRpc, now: f64) {
        let copies = to.len() as u64;
        let framing = self.protocol.framing_overhead * copies;
        let ids = rpc.id_bytes() * copies;
        let bytes = &mut self.ledger.bytes;
        bytes.framing += framing;
        match rpc.kind() {
            ControlKind::IHave => bytes.ihave += ids,
            ControlKind::IWant => {
                bytes.iwant += ids;
                self.ledger.iwant_requests += rpc.ids().len() as u64 * copies;
            }
            ControlKind::IDontWant => bytes.idontwant += ids,
        }
        let rpc = Arc::new(rpc);
        if let Some(lat) = self.network.uniform_latency() {
            self.push(now + lat, EventKind::Control { from, to, rpc });
        } else {
            for target in to {
                let lat = self.network.latency(from, target);
                self.push(
                    now + lat,
                    EventKind::Control {
                        from,
                        to: alloc::vec![target],
                        rpc: rpc.clone(),
                    },
                );
            }
        }
    }

    fn link_for(&mut self, src: PeerId, dst: PeerId) -> usize {
        if let Some(&l) = self.link_index.get(&(src.0, dst.0)) {
            return l;
        }
        let lat = self.network.latency(src, dst);
        self.links.push(LinkState::new(src, dst, lat, &self.transport));
        let id = self.links.len() - 1;
        self.link_index.insert((src.0, dst.0), id);
        id
    }

    fn start_job(&mut self, node: PeerId, job: JobId, to: PeerId, msg: MessageId, size: u64, now: f64) {
        if !self.nodes[node.index()].begin_job(job, now) {
            return;
        }
        let link = self.link_for(node, to);
        let t = Transfer {
            link,
            src: node,
            dst: to,
            job,
            msg,
            payload: size,
            total: (size + self.protocol.framing_overhead) as f64,
            sent: 0.0,
            rate: 0.0,
            last_update: now,
            accepted: now,
            started: f64::NAN,
            active: false,
        };
        let id = match self.free_transfers.pop() {
            Some(slot) => {
                self.transfers[slot] = t;
                slot
            }
            None => {
                self.transfers.push(t);
                self.transfers.len() - 1
            }
        };
        self.pending_work += 1;
        self.links[link].queue.push_back(id);
        if self.links[link].queue.len() == 1 {
            self.activate(id, now);
            self.refresh(node, to, now);
        }
    }

    fn activate(&mut self, id: usize, now: f64) {
        let link = self.transfers[id].link;
        let l = &mut self.links[link];
        l.idle_check(now, &self.transport);
        l.last_activity = now;
        let schedule_tick = self.transport.cwnd_model
            && l.rtt > 0.0
            && !l.tick_pending
            && l.cwnd < self.transport.max_cwnd;
        if schedule_tick {
            l.tick_pending = true;
        }
        let rtt = l.rtt;
        let t = &mut self.transfers[id];
        t.active = true;
        t.started = now;
        t.last_update = now;
        t.rate = 0.0;
        let (src, dst) = (t.src, t.dst);
        self.out_active[src.index()].push(id);
        self.in_active[dst.index()].push(id);
        if schedule_tick {
            self.push(now + rtt, EventKind::CwndTick { link });
        }
    }

    /// Recomputes every uplink whose allocation depends on traffic between
    /// `src` and `dst`.
    fn refresh(&mut self, src: PeerId, dst: PeerId, now: f64) {
        let mut senders: Vec<PeerId> = self.in_active[dst.index()]
            .iter()
            .map(|&t| self.transfers[t].src)
            .collect();
        senders.push(src);
        senders.sort_unstable();
        senders.dedup();
        for s in senders {
            self.recompute_uplink(s, now);
        }
    }

    fn recompute_uplink(&mut self, node: PeerId, now: f64) {
        let mut flows = core::mem::take(&mut self.scratch_flows);
        flows.clear();
        flows.extend_from_slice(&self.out_active[node.index()]);
        if flows.is_empty() {
            self.scratch_flows = flows;
            return;
        }
        let mut caps = core::mem::take(&mut self.scratch_caps);
        caps.clear();
        caps.extend(flows.iter().map(|&id| {
            let t = &self.transfers[id];
            let window = self.links[t.link].window_rate(&self.transport);
            let downlink = self.bandwidth / self.in_active[t.dst.index()].len() as f64;
            window.min(downlink)
        }));
        let mut rates = core::mem::take(&mut self.scratch_rates);
        rates.clear();
        rates.resize(caps.len(), 0.0);
        water_fill(self.bandwidth, &caps, &mut rates);
        let mut next = f64::INFINITY;
        for (&id, &rate) in flows.iter().zip(&rates) {
            let t = &mut self.transfers[id];
            t.sent = (t.sent + t.rate * (now - t.last_update)).min(t.total);
            t.last_update = now;
            t.rate = rate;
            next = next.min(now + (t.total - t.sent).max(0.0) / rate);
        }
        self.wake_uplink(node, next);
        self.scratch_flows = flows;
        self.scratch_caps = caps;
        self.scratch_rates = rates;
    }

    /// Completes the transfer on `node`'s uplink that finishes first.
    fn finish_next(&mut self, node: PeerId, now: f64) {
        let mut best: Option<(f64, usize)> = None;
        for &id in &self.out_active[node.index()] {
            let t = &mut self.transfers[id];
            t.sent = (t.sent + t.rate * (now - t.last_update)).min(t.total);
            t.last_update = now;
            let left = (t.total - t.sent).max(0.0) / t.rate;
            if best.is_none_or(|(b, _)| left < b) {
                best = Some((left, id));
            }
        }
        match best {
            Some((left, id)) if left <= FINISH_EPS_MS || now + left <= now => {
                self.complete_transfer(id, now)
            }
            Some((left, _)) => self.wake_uplink(node, now + left),
            None => {}
        }
    }

    fn wake_uplink(&mut self, node: PeerId, at: f64) {
        let wake = &mut self.uplink_wake[node.index()];
        if at < *wake {
            *wake = at;
            self.push(at, EventKind::UplinkDone { node });
        }
    }

    fn complete_transfer(&mut self, id: usize, now: f64) {
        let t = &mut self.transfers[id];
        t.active = false;
        t.sent = t.total;
        let t = t.clone();
        let out = &mut self.out_active[t.src.index()];
        out.swap_remove(out.iter().position(|&x| x == id).expect("active outgoing"));
        let inc = &mut self.in_active[t.dst.index()];
        inc.swap_remove(inc.iter().position(|&x| x == id).expect("active incoming"));
        self.free_transfers.push(id);
        self.pending_work -= 1;

        let wire = t.total as u64;
        let l = &mut self.links[t.link];
        let head = l.queue.pop_front();
        debug_assert_eq!(head, Some(id));
        l.bytes_sent += wire;
        l.last_activity = now;
        let tau_p = l.tau_p;
        let next = l.queue.front().copied();
        self.ledger.bytes.payload += t.payload;
        self.ledger.bytes.framing += wire - t.payload;

        if self.record_transfers {
            let kind = self.nodes[t.src.index()]
                .job(t.job)
                .map_or(JobKind::Forward, |j| j.kind);
            self.trace.push(TransferRecord {
                from: t.src,
                to: t.dst,
                msg: t.msg,
                kind,
                bytes: t.payload,
                accepted: t.accepted,
                started: t.started,
                finished: now,
            });
        }

        self.pending_work += 1;
        self.push(
            now + tau_p,
            EventKind::Deliver {
                link: t.link,
                msg: t.msg,
                bytes: wire,
            },
        );
        if let Some(next) = next {
            self.activate(next, now);
        }
        self.refresh(t.src, t.dst, now);
        let actions = self.nodes[t.src.index()].job_completed(t.job, now);
        self.apply(t.src, actions, now);
    }
}

/// Builds and runs a simulation.
pub fn run(setup: SimulationSetup) -> Result<RunResult, RunError> {
    let sim = Simulation::new(setup).map_err(RunError::Config)?;
    sim.run().map_err(RunError::Protocol)
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunError {
    Config(ConfigError),
    Protocol(ProtocolError),
}

impl core::fmt::Display for RunError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "invalid configuration: {e}"),
            RunError::Protocol(e) => write!(f, "simulator fault: {e}"),
        }
    }
}

impl core::error::Error for RunError {}

#[cfg(test)]
mod tests;
