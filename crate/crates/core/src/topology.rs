//! Seeded overlay construction.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::ConfigError;
use crate::message::PeerId;
use crate::params::MeshParams;
use crate::protocol::KnownPeers;
use crate::rng::{self, SimRng, Stream};

const MAX_ATTEMPTS: u64 = 32;

/// Static overlay used for one run: full-message mesh plus link properties.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    adjacency: Vec<Vec<PeerId>>,
    latency_ms: f64,
    latency_overrides: BTreeMap<(u32, u32), f64>,
    bandwidth_mbps: f64,
}

impl Network {
    /// Builds a network from an explicit undirected edge list without
    /// checking degree bounds.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Self {
        let mut sets = alloc::vec![BTreeSet::new(); n];
        for &(a, b) in edges {
            assert!(a != b && (a as usize) < n && (b as usize) < n, "bad edge {a}-{b}");
            sets[a as usize].insert(PeerId(b));
            sets[b as usize].insert(PeerId(a));
        }
        Network {
            adjacency: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
            latency_ms: 100.0,
            latency_overrides: BTreeMap::new(),
            bandwidth_mbps: 50.0,
        }
    }

    pub fn with_latency(mut self, latency_ms: f64) -> Self {
        self.latency_ms = latency_ms;
        self
    }

    pub fn with_bandwidth(mut self, mbps: f64) -> Self {
        self.bandwidth_mbps = mbps;
        self
    }

    /// Overrides the latency of one undirected link.
    pub fn set_link_latency(&mut self, a: PeerId, b: PeerId, latency_ms: f64) {
        self.latency_overrides.insert(edge_key(a, b), latency_ms);
    }

    pub fn n_nodes(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, p: PeerId) -> &[PeerId] {
        &self.adjacency[p.index()]
    }

    pub fn degree(&self, p: PeerId) -> usize {
        self.adjacency[p.index()].len()
    }

    pub fn is_mesh_edge(&self, a: PeerId, b: PeerId) -> bool {
        self.adjacency[a.index()].binary_search(&b).is_ok()
    }

    /// Gossip view of a node: every other node.
    pub fn known_peers(&self, _p: PeerId) -> KnownPeers {
        KnownPeers::Everyone {
            n: self.n_nodes() as u32,
        }
    }

    pub fn latency(&self, a: PeerId, b: PeerId) -> f64 {
        self.latency_overrides
            .get(&edge_key(a, b))
            .copied()
            .unwrap_or(self.latency_ms)
    }

    pub fn uniform_latency(&self) -> Option<f64> {
        self.latency_overrides.is_empty().then_some(self.latency_ms)
    }

    pub fn bandwidth_mbps(&self) -> f64 {
        self.bandwidth_mbps
    }

    /// Undirected edges with `a < b`, in order.
    pub fn edges(&self) -> impl Iterator<Item = (PeerId, PeerId)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(a, ns)| {
            ns.iter()
                .filter(move |b| b.index() > a)
                .map(move |b| (PeerId(a as u32), *b))
        })
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn mean_degree(&self) -> f64 {
        if self.adjacency.is_empty() {
            return 0.0;
        }
        2.0 * self.edge_count() as f64 / self.n_nodes() as f64
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n_nodes();
        if n == 0 {
            return true;
        }
        let mut seen = alloc::vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for v in &self.adjacency[u] {
                if !seen[v.index()] {
                    seen[v.index()] = true;
                    count += 1;
                    queue.push_back(v.index());
                }
            }
        }
        count == n
    }

    /// One edge per line, `"a b"`.
    pub fn edge_list_text(&self) -> String {
        use core::fmt::Write;
        let mut out = String::new();
        for (a, b) in self.edges() {
            let _ = writeln!(out, "{a} {b}");
        }
        out
    }
}

fn edge_key(a: PeerId, b: PeerId) -> (u32, u32) {
    (a.0.min(b.0), a.0.max(b.0))
}

/// Builds a connected, approximately `d`-regular mesh whose degrees all lie
/// in `[d_low, d_high]`.
pub fn build_network(n: usize, mesh: &MeshParams, seed: u64) -> Result<Network, ConfigError> {
    if n < 2 || n - 1 < mesh.d_low {
        return Err(ConfigError::new(
            "n_nodes",
            alloc::format!("{n} nodes cannot give every node {} mesh peers", mesh.d_low),
        ));
    }
    let target = mesh.d.min(n - 1);
    if target == n - 1 {
        let edges: Vec<(u32, u32)> = (0..n as u32)
            .flat_map(|a| (a + 1..n as u32).map(move |b| (a, b)))
            .collect();
        return Ok(Network::from_edges(n, &edges));
    }
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = rng::derive(seed, Stream::Topology, attempt);
        let sets = random_near_regular(n, target, mesh.d_high, &mut rng);
        let net = Network {
            adjacency: sets.into_iter().map(|s| s.into_iter().map(PeerId).collect()).collect(),
            latency_ms: 100.0,
            latency_overrides: BTreeMap::new(),
            bandwidth_mbps: 50.0,
        };
        let degrees_ok = (0..n).all(|u| (mesh.d_low..=mesh.d_high).contains(&net.adjacency[u].len()));
        if degrees_ok && net.is_connected() {
            return Ok(net);
        }
    }
    Err(ConfigError::new(
        "n_nodes",
        alloc::format!("no connected mesh within degree bounds after {MAX_ATTEMPTS} attempts"),
    ))
}

/// Stub pairing followed by repair of the degree deficits left by rejected
/// self-loops and parallel edges.
fn random_near_regular(n: usize, d: usize, d_high: usize, rng: &mut SimRng) -> Vec<BTreeSet<u32>> {
    let mut stubs: Vec<u32> = (0..n as u32).flat_map(|u| core::iter::repeat_n(u, d)).collect();
    stubs.shuffle(rng);
    let mut adj = alloc::vec![BTreeSet::new(); n];
    for pair in stubs.chunks_exact(2) {
        let (a, b) = (pair[0], pair[1]);
        if a != b && !adj[a as usize].contains(&b) {
            adj[a as usize].insert(b);
            adj[b as usize].insert(a);
        }
    }

    // Pair up deficient nodes directly, else splice them into a random edge.
    let mut budget = 64 * n;
    loop {
        let deficient: Vec<u32> = (0..n as u32).filter(|&u| adj[u as usize].len() < d).collect();
        if deficient.is_empty() || budget == 0 {
            break;
        }
        let mut progressed = false;
        for &u in &deficient {
            if adj[u as usize].len() >= d {
                continue;
            }
            budget = budget.saturating_sub(1);
            let partner = deficient.iter().copied().find(|&v| {
                v != u && adj[v as usize].len() < d && !adj[u as usize].contains(&v)
            });
            if let Some(v) = partner {
                adj[u as usize].insert(v);
                adj[v as usize].insert(u);
                progressed = true;
                continue;
            }
            if adj[u as usize].len() + 2 <= d {
                // remove a random edge x-y and attach both ends to u
                let x = rng.gen_range(0..n as u32);
                let Some(&y) = adj[x as usize].iter().nth(rng.gen_range(0..adj[x as usize].len().max(1))) else {
                    continue;
                };
                if x == u || y == u || adj[u as usize].contains(&x) || adj[u as usize].contains(&y) {
                    continue;
                }
                adj[x as usize].remove(&y);
                adj[y as usize].remove(&x);
                for w in [x, y] {
                    adj[u as usize].insert(w);
                    adj[w as usize].insert(u);
                }
                progressed = true;
            } else {
                // single missing stub: borrow capacity up to d_high
                let v = rng.gen_range(0..n as u32);
                if v != u && adj[v as usize].len() < d_high && !adj[u as usize].contains(&v) {
                    adj[u as usize].insert(v);
                    adj[v as usize].insert(u);
                    progressed = true;
                }
            }
        }
        if !progressed && budget == 0 {
            break;
        }
    }
    adj
}

/// Hop-count estimate `ceil(log N / log d)`, computed exactly as the
/// smallest `h` with `d^h >= N`.
pub fn diameter_estimate(n: u64, d: u64) -> u32 {
    assert!(n >= 1 && d >= 2, "diameter_estimate needs n >= 1 and d >= 2");
    let mut hops = 0;
    let mut reach: u64 = 1;
    while reach < n {
        reach = reach.saturating_mul(d);
        hops += 1;
    }
    hops
}
