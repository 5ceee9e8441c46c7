//! Deterministic discrete-event simulation of a GossipSub-style overlay.
//!
//! The crate is `no_std` (it needs `alloc`) and performs no I/O. It contains
//! the per-peer protocol state machine with its large-message extensions
//! (IDONTWANT suppression, staggered forwarding, fragmentation), a flow-level
//! transport model with a loss-free congestion window, seeded topology
//! construction, and the metrics used to evaluate runs.
//!
//! A run is driven by [`engine::Simulation`], which owns every piece of
//! state for one scenario. Independent runs share nothing and can execute on
//! separate threads.
#![no_std]

extern crate alloc;

pub mod error;
pub mod message;
pub mod metrics;
pub mod params;
pub mod protocol;
pub mod rng;
pub mod rpc;
pub mod scenario;
pub mod topology;
pub mod transport;

pub use transport::engine;

pub use error::{ConfigError, FragmentError, ProtocolError};
pub use message::{FragmentInfo, Message, MessageId, PeerId, TopicId};
pub use metrics::{analytical_estimate, AnalyticalEstimate, MetricsLedger, Summary};
pub use params::{MeshParams, ProtocolConfig, TransportParams};
pub use scenario::{run_scenario, RunOutput, ScenarioConfig};
pub use topology::{build_network, diameter_estimate, Network};
