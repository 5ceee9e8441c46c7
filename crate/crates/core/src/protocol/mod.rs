//! Per-peer GossipSub state machine with IDONTWANT suppression, staggered
//! forwarding and fragmentation.
//!
//! Every operation takes the current simulated time from the caller and
//! returns a list of [`Action`]s for the transport to carry out. Nothing in
//! here keeps time or touches the network.

mod mcache;
mod stagger;

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

pub use mcache::MessageCache;
pub use stagger::partition_groups;
use stagger::{ActiveGroup, Batch, StaggerQueue};

use crate::error::ProtocolError;
use crate::message::{fragment_message, Message, MessageId, PeerId, TopicId};
use crate::params::ProtocolConfig;
use crate::rng::SimRng;
use crate::rpc::{ControlKind, ControlRpc};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JobId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JobState {
    Queued,
    InFlight,
    Canceled,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JobKind {
    Forward,
    IwantReply,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SendJob {
    pub id: JobId,
    pub msg: MessageId,
    pub size: u64,
    pub target: PeerId,
    pub state: JobState,
    pub kind: JobKind,
    pub enqueue_time: f64,
    pub start_time: Option<f64>,
    /// Stagger round of this job within the relay of its message.
    pub group_index: usize,
}

/// Side effects requested by the state machine.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    /// Hand a payload send to the transport. The job is still cancellable
    /// until the transport calls [`NodeState::begin_job`].
    Transmit {
        job: JobId,
        to: PeerId,
        msg: MessageId,
        size: u64,
    },
    Control { to: Vec<PeerId>, rpc: ControlRpc },
    ArmStaggerTimer { at: f64, token: u64 },
    /// First reception of a message or fragment.
    Received { msg: MessageId },
    /// The node now holds the complete logical message.
    Completed { logical: MessageId },
    Duplicate { msg: MessageId, from: PeerId },
    Canceled { job: JobId, msg: MessageId, to: PeerId },
}

/// Peers a node can exchange gossip with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KnownPeers {
    /// Every node of an `n`-node network.
    Everyone { n: u32 },
    Listed(Vec<PeerId>),
}

impl KnownPeers {
    fn contains(&self, peer: PeerId) -> bool {
        match self {
            KnownPeers::Everyone { n } => peer.0 < *n,
            KnownPeers::Listed(list) => list.contains(&peer),
        }
    }
}

#[derive(Debug, Clone)]
struct Reassembly {
    have: Vec<bool>,
    count: u32,
}

/// Result of [`NodeState::publish`].
#[derive(Debug, Clone)]
pub struct Published {
    pub message: Message,
    /// Fragments, or the message itself when it was not split.
    pub parts: Vec<Message>,
    pub actions: Vec<Action>,
}

/// Number of IHAVE targets for a heartbeat: `max(d_lazy, ceil(factor * n))`,
/// bounded by the `n` available non-mesh peers.
pub fn gossip_target_count(d_lazy: usize, gossip_factor: f64, non_mesh: usize) -> usize {
    let scaled = libm::ceil(gossip_factor * non_mesh as f64 - 1e-9).max(0.0) as usize;
    d_lazy.max(scaled).min(non_mesh)
}

#[derive(Debug, Clone)]
pub struct NodeState {
    peer: PeerId,
    config: ProtocolConfig,
    mesh: Vec<PeerId>,
    known: KnownPeers,
    seen: BTreeMap<MessageId, f64>,
    dontwant_received: BTreeMap<MessageId, BTreeSet<PeerId>>,
    jobs: BTreeMap<JobId, SendJob>,
    job_index: BTreeMap<(MessageId, PeerId), JobId>,
    stagger: StaggerQueue,
    reassembly: BTreeMap<MessageId, Reassembly>,
    mcache: MessageCache,
    iwant_pending: BTreeMap<MessageId, f64>,
    rng: SimRng,
    next_job: u64,
    next_seq: u64,
    next_token: u64,
}

impl NodeState {
    pub fn new(
        peer: PeerId,
        mut mesh: Vec<PeerId>,
        known: KnownPeers,
        config: ProtocolConfig,
        rng: SimRng,
    ) -> Self {
        mesh.sort_unstable();
        mesh.dedup();
        NodeState {
            peer,
            mcache: MessageCache::new(config.history_length, config.gossip_window),
            config,
            mesh,
            known,
            seen: BTreeMap::new(),
            dontwant_received: BTreeMap::new(),
            jobs: BTreeMap::new(),
            job_index: BTreeMap::new(),
            stagger: StaggerQueue::default(),
            reassembly: BTreeMap::new(),
            iwant_pending: BTreeMap::new(),
            rng,
            next_job: 0,
            next_seq: 0,
            next_token: 0,
        }
    }

    pub fn peer(&self) -> PeerId {
        self.peer
    }

    pub fn mesh(&self) -> &[PeerId] {
        &self.mesh
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.config
    }

    pub fn has_seen(&self, id: &MessageId) -> bool {
        self.seen.contains_key(id)
    }

    pub fn first_seen(&self, id: &MessageId) -> Option<f64> {
        self.seen.get(id).copied()
    }

    pub fn dontwant_from(&self, id: &MessageId) -> impl Iterator<Item = PeerId> + '_ {
        self.dontwant_received.get(id).into_iter().flatten().copied()
    }

    pub fn job(&self, id: JobId) -> Option<&SendJob> {
        self.jobs.get(&id)
    }

    pub fn jobs(&self) -> impl Iterator<Item = &SendJob> {
        self.jobs.values()
    }

    pub fn job_for(&self, msg: &MessageId, target: PeerId) -> Option<&SendJob> {
        self.job_index.get(&(*msg, target)).and_then(|j| self.jobs.get(j))
    }

    /// Staggered groups not yet released.
    pub fn queued_groups(&self) -> usize {
        self.stagger.queued_groups()
    }

    pub fn cached_size(&self, id: &MessageId) -> Option<u64> {
        self.mcache.get(id)
    }

    /// Whether the node holds every fragment of `parent`.
    pub fn is_reassembled(&self, parent: &MessageId) -> bool {
        self.reassembly
            .get(parent)
            .is_some_and(|r| r.count as usize == r.have.len())
    }

    fn is_neighbor(&self, peer: PeerId) -> bool {
        peer != self.peer && (self.mesh.binary_search(&peer).is_ok() || self.known.contains(peer))
    }

    fn is_large(&self, size: u64) -> bool {
        size >= self.config.mesh.large_msg_threshold
    }

    fn non_mesh_count(&self) -> usize {
        match &self.known {
            KnownPeers::Everyone { n } => (*n as usize).saturating_sub(1 + self.mesh.len()),
            KnownPeers::Listed(list) => list
                .iter()
                .filter(|p| **p != self.peer && self.mesh.binary_search(p).is_err())
                .count(),
        }
    }

    /// Publishes a new message of `size` bytes originating at this node.
    pub fn publish(&mut self, size: u64, now: f64) -> Result<Published, ProtocolError> {
        if size == 0 {
            return Err(ProtocolError::EmptyMessage);
        }
        let id = MessageId::derive(self.config.seed, self.peer, self.next_seq);
        self.next_seq += 1;
        let message = Message {
            id,
            topic: TopicId::default(),
            size,
            publisher: self.peer,
            publish_time: now,
            fragment: None,
        };
        let n = self.config.mesh.fragment_count;
        let parts = if self.config.fragmentation && n > 1 && self.is_large(size) {
            fragment_message(&message, n)?
        } else {
            alloc::vec![message.clone()]
        };
        let mut actions = alloc::vec![Action::Completed { logical: id }];
        if parts.len() > 1 {
            self.reassembly.insert(
                id,
                Reassembly {
                    have: alloc::vec![true; parts.len()],
                    count: parts.len() as u32,
                },
            );
        }
        let mesh = self.mesh.clone();
        for part in &parts {
            self.seen.insert(part.id, now);
            self.mcache.put(part.id, part.size);
            self.schedule_forwards(part.id, part.size, &mesh, now, &mut actions);
        }
        Ok(Published {
            message,
            parts,
            actions,
        })
    }

    /// Called once the full transfer of `msg` from `from` has arrived.
    pub fn handle_message_received(
        &mut self,
        msg: &Message,
        from: PeerId,
        now: f64,
    ) -> Result<Vec<Action>, ProtocolError> {
        if !self.is_neighbor(from) {
            return Err(ProtocolError::UnknownPeer {
                node: self.peer,
                from,
            });
        }
        if self.seen.contains_key(&msg.id) {
            return Ok(alloc::vec![Action::Duplicate { msg: msg.id, from }]);
        }
        self.seen.insert(msg.id, now);
        self.mcache.put(msg.id, msg.size);
        self.iwant_pending.remove(&msg.id);

        let mut actions = alloc::vec![Action::Received { msg: msg.id }];
        let successors: Vec<PeerId> = {
            let dontwant = self.dontwant_received.get(&msg.id);
            self.mesh
                .iter()
                .copied()
                .filter(|p| *p != from && !dontwant.is_some_and(|d| d.contains(p)))
                .collect()
        };
        if self.config.idontwant && self.is_large(msg.size) && !successors.is_empty() {
            let rpc = ControlRpc::new(ControlKind::IDontWant, alloc::vec![msg.id])
                .expect("one id");
            actions.push(Action::Control {
                to: successors.clone(),
                rpc,
            });
        }
        self.schedule_forwards(msg.id, msg.size, &successors, now, &mut actions);

        match msg.fragment {
            None => actions.push(Action::Completed { logical: msg.id }),
            Some(info) => {
                let entry = self.reassembly.entry(info.parent).or_insert_with(|| Reassembly {
                    have: alloc::vec![false; info.total as usize],
                    count: 0,
                });
                let slot = &mut entry.have[info.index as usize];
                if !*slot {
                    *slot = true;
                    entry.count += 1;
                    if entry.count == info.total {
                        actions.push(Action::Completed {
                            logical: info.parent,
                        });
                    }
                }
            }
        }
        Ok(actions)
    }

    /// Creates send jobs for `successors` and either releases them all at
    /// once or queues them for staggered release.
    pub fn schedule_forwards(
        &mut self,
        msg: MessageId,
        size: u64,
        successors: &[PeerId],
        now: f64,
        actions: &mut Vec<Action>,
    ) {
        let mut targets: Vec<PeerId> = successors
            .iter()
            .copied()
            .filter(|p| *p != self.peer && !self.job_index.contains_key(&(msg, *p)))
            .collect();
        if targets.is_empty() {
            return;
        }
        if !self.config.stagger || !self.is_large(size) {
            for to in targets {
                let job = self.new_job(msg, size, to, JobKind::Forward, 0, now);
                actions.push(Action::Transmit { job, to, msg, size });
            }
            return;
        }
        targets.shuffle(&mut self.rng);
        let groups: VecDeque<Vec<JobId>> =
            partition_groups(&targets, self.config.mesh.stagger_group_size)
                .into_iter()
                .enumerate()
                .map(|(g, group)| {
                    group
                        .into_iter()
                        .map(|to| self.new_job(msg, size, to, JobKind::Forward, g, now))
                        .collect()
                })
                .collect();
        self.stagger.batches.push_back(Batch { groups });
        self.pump(now, actions);
    }

    fn new_job(
        &mut self,
        msg: MessageId,
        size: u64,
        target: PeerId,
        kind: JobKind,
        group_index: usize,
        now: f64,
    ) -> JobId {
        let id = JobId(self.next_job);
        self.next_job += 1;
        self.jobs.insert(
            id,
            SendJob {
                id,
                msg,
                size,
                target,
                state: JobState::Queued,
                kind,
                enqueue_time: now,
                start_time: None,
                group_index,
            },
        );
        self.job_index.insert((msg, target), id);
        id
    }

    fn job_pending(&self, id: &JobId) -> bool {
        self.jobs
            .get(id)
            .is_some_and(|j| matches!(j.state, JobState::Queued | JobState::InFlight))
    }

    /// Releases the next staggered group if the current one has finished.
    fn pump(&mut self, now: f64, actions: &mut Vec<Action>) {
        loop {
            if let Some(current) = &self.stagger.current {
                if current.jobs.iter().any(|j| self.job_pending(j)) {
                    return;
                }
                self.stagger.current = None;
            }
            let Some(group) = self.stagger.next_group() else {
                return;
            };
            let live: Vec<JobId> = group
                .into_iter()
                .filter(|j| self.jobs.get(j).is_some_and(|job| job.state == JobState::Queued))
                .collect();
            if live.is_empty() {
                continue;
            }
            for j in &live {
                let job = &self.jobs[j];
                actions.push(Action::Transmit {
                    job: job.id,
                    to: job.target,
                    msg: job.msg,
                    size: job.size,
                });
            }
            let token = self.next_token;
            self.next_token += 1;
            self.stagger.current = Some(ActiveGroup { jobs: live, token });
            actions.push(Action::ArmStaggerTimer {
                at: now + self.config.mesh.stagger_interval,
                token,
            });
            return;
        }
    }

    /// The stagger interval of the group identified by `token` elapsed.
    pub fn on_stagger_timeout(&mut self, token: u64, now: f64) -> Vec<Action> {
        let mut actions = Vec::new();
        if self.stagger.current.as_ref().is_some_and(|c| c.token == token) {
            self.stagger.current = None;
            self.pump(now, &mut actions);
        }
        actions
    }

    /// The transport accepted the job. Returns `false` if it was canceled in
    /// the meantime and must not be sent.
    pub fn begin_job(&mut self, id: JobId, now: f64) -> bool {
        match self.jobs.get_mut(&id) {
            Some(job) if job.state == JobState::Queued => {
                job.state = JobState::InFlight;
                job.start_time = Some(now);
                true
            }
            _ => false,
        }
    }

    /// The last byte of the job's transfer left this node.
    pub fn job_completed(&mut self, id: JobId, now: f64) -> Vec<Action> {
        let mut actions = Vec::new();
        if let Some(job) = self.jobs.get_mut(&id) {
            debug_assert_eq!(job.state, JobState::InFlight);
            job.state = JobState::Done;
            self.pump(now, &mut actions);
        }
        actions
    }

    pub fn handle_idontwant(&mut self, msg: MessageId, from: PeerId, now: f64) -> Vec<Action> {
        self.dontwant_received.entry(msg).or_default().insert(from);
        let mut actions = Vec::new();
        if let Some(&jid) = self.job_index.get(&(msg, from)) {
            let job = self.jobs.get_mut(&jid).expect("indexed job");
            if job.state == JobState::Queued {
                job.state = JobState::Canceled;
                actions.push(Action::Canceled {
                    job: jid,
                    msg,
                    to: from,
                });
                self.pump(now, &mut actions);
            }
        }
        actions
    }

    /// Emits IHAVE gossip for recent messages and advances the cache.
    pub fn heartbeat(&mut self, now: f64) -> Vec<Action> {
        let _ = now;
        let ids = self.mcache.gossip_ids();
        self.mcache.shift();
        let Some(rpc) = ControlRpc::new(ControlKind::IHave, ids) else {
            return Vec::new();
        };
        let count = gossip_target_count(
            self.config.mesh.d_lazy,
            self.config.mesh.gossip_factor,
            self.non_mesh_count(),
        );
        let to = self.sample_non_mesh(count);
        if to.is_empty() {
            return Vec::new();
        }
        alloc::vec![Action::Control { to, rpc }]
    }

    fn sample_non_mesh(&mut self, count: usize) -> Vec<PeerId> {
        let available = self.non_mesh_count();
        if count == 0 {
            return Vec::new();
        }
        if let KnownPeers::Everyone { n } = self.known {
            if count * 2 <= available {
                let mut chosen = BTreeSet::new();
                let mut out = Vec::with_capacity(count);
                while out.len() < count {
                    let p = PeerId(self.rng.gen_range(0..n));
                    if p == self.peer || self.mesh.binary_search(&p).is_ok() || !chosen.insert(p) {
                        continue;
                    }
                    out.push(p);
                }
                return out;
            }
        }
        let mut pool: Vec<PeerId> = match &self.known {
            KnownPeers::Everyone { n } => (0..*n).map(PeerId).collect(),
            KnownPeers::Listed(list) => list.clone(),
        };
        pool.retain(|p| *p != self.peer && self.mesh.binary_search(p).is_err());
        let (picked, _) = pool.partial_shuffle(&mut self.rng, count);
        picked.to_vec()
    }

    pub fn handle_ihave(&mut self, ids: &[MessageId], from: PeerId, now: f64) -> Vec<Action> {
        let window = self.config.mesh.heartbeat_interval;
        let mut wanted = Vec::new();
        for id in ids {
            if self.seen.contains_key(id) {
                continue;
            }
            if self
                .iwant_pending
                .get(id)
                .is_some_and(|asked| now - asked < window)
            {
                continue;
            }
            self.iwant_pending.insert(*id, now);
            wanted.push(*id);
        }
        match ControlRpc::new(ControlKind::IWant, wanted) {
            Some(rpc) => alloc::vec![Action::Control {
                to: alloc::vec![from],
                rpc
            }],
            None => Vec::new(),
        }
    }

    /// Serves requested messages that are still cached; unknown ids are
    /// ignored.
    pub fn handle_iwant(&mut self, ids: &[MessageId], from: PeerId, now: f64) -> Vec<Action> {
        let mut actions = Vec::new();
        for id in ids {
            let Some(size) = self.mcache.get(id) else {
                continue;
            };
            if self.job_index.contains_key(&(*id, from)) {
                continue;
            }
            let job = self.new_job(*id, size, from, JobKind::IwantReply, 0, now);
            actions.push(Action::Transmit {
                job,
                to: from,
                msg: *id,
                size,
            });
        }
        actions
    }
}
