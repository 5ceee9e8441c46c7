use alloc::collections::VecDeque;
use alloc::vec::Vec;

use super::JobId;

/// Splits an already shuffled successor list into consecutive groups of
/// `group_size`; the last group takes the remainder.
pub fn partition_groups<T: Copy>(shuffled: &[T], group_size: usize) -> Vec<Vec<T>> {
    assert!(group_size >= 1);
    shuffled.chunks(group_size).map(<[T]>::to_vec).collect()
}

#[derive(Debug, Clone)]
pub(crate) struct Batch {
    pub groups: VecDeque<Vec<JobId>>,
}

#[derive(Debug, Clone)]
pub(crate) struct ActiveGroup {
    pub jobs: Vec<JobId>,
    pub token: u64,
}

/// Per-peer release schedule for staggered sends. One group is current at a
/// time; the next is released once every job of the current group has
/// finished or the stagger interval expires. Groups are taken round-robin
/// across the queued messages.
#[derive(Debug, Clone, Default)]
pub(crate) struct StaggerQueue {
    pub batches: VecDeque<Batch>,
    pub current: Option<ActiveGroup>,
}

impl StaggerQueue {
    /// Pops the next group in rotation order.
    pub fn next_group(&mut self) -> Option<Vec<JobId>> {
        let mut batch = self.batches.pop_front()?;
        let group = batch.groups.pop_front();
        if !batch.groups.is_empty() {
            self.batches.push_back(batch);
        }
        Some(group.unwrap_or_default())
    }

    pub fn queued_groups(&self) -> usize {
        self.batches.iter().map(|b| b.groups.len()).sum()
    }
}
