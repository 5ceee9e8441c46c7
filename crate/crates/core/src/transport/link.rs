use alloc::collections::VecDeque;

use crate::message::PeerId;
use crate::params::TransportParams;

/// State of one directed connection.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkState {
    pub src: PeerId,
    pub dst: PeerId,
    pub tau_p: f64,
    pub cwnd: u64,
    pub ssthresh: u64,
    pub last_activity: f64,
    pub rtt: f64,
    pub bytes_sent: u64,
    pub bytes_received: u64,
    /// Transfers in send order; only the head is on the wire.
    pub(crate) queue: VecDeque<usize>,
    pub(crate) tick_pending: bool,
}

impl LinkState {
    pub fn new(src: PeerId, dst: PeerId, tau_p: f64, params: &TransportParams) -> Self {
        LinkState {
            src,
            dst,
            tau_p,
            cwnd: params.initial_window(),
            ssthresh: params.ssthresh,
            last_activity: f64::NEG_INFINITY,
            rtt: 2.0 * tau_p,
            bytes_sent: 0,
            bytes_received: 0,
            queue: VecDeque::new(),
            tick_pending: false,
        }
    }

    /// One round trip of activity: double below `ssthresh`, otherwise grow
    /// by one segment, never beyond `max_cwnd`.
    pub fn cwnd_update(&mut self, now: f64, params: &TransportParams) {
        let grown = if self.cwnd < self.ssthresh {
            self.cwnd.saturating_mul(2)
        } else {
            self.cwnd.saturating_add(params.mss)
        };
        self.cwnd = grown.min(params.max_cwnd).max(self.cwnd);
        self.last_activity = now;
    }

    /// Falls back to the initial window after a long enough idle period,
    /// when idle restarts are enabled.
    pub fn idle_check(&mut self, now: f64, params: &TransportParams) {
        if params.idle_reset && now - self.last_activity > params.idle_timeout_ms {
            self.cwnd = params.initial_window();
        }
    }

    /// Rate ceiling imposed by the window, bytes per millisecond.
    pub fn window_rate(&self, params: &TransportParams) -> f64 {
        if !params.cwnd_model || self.rtt <= 0.0 {
            f64::INFINITY
        } else {
            self.cwnd as f64 / self.rtt
        }
    }

    pub fn is_busy(&self) -> bool {
        !self.queue.is_empty()
    }
}
