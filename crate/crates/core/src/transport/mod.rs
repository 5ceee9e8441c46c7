//! Flow-level transport: directed links with a loss-free congestion window,
//! processor-sharing uplinks, and the event loop that drives the peers.

pub mod engine;
mod link;
mod rate;

pub use link::LinkState;
pub use rate::{effective_rate, water_fill};
