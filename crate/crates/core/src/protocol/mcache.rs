use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::message::MessageId;

/// Sliding window of recently seen messages, one bucket per heartbeat.
/// Bucket 0 collects messages seen since the last heartbeat.
#[derive(Debug, Clone)]
pub struct MessageCache {
    buckets: VecDeque<Vec<(MessageId, u64)>>,
    history: usize,
    gossip: usize,
}

impl MessageCache {
    pub fn new(history: usize, gossip: usize) -> Self {
        assert!(gossip >= 1 && gossip <= history);
        let mut buckets = VecDeque::with_capacity(history);
        buckets.resize_with(history, Vec::new);
        MessageCache {
            buckets,
            history,
            gossip,
        }
    }

    pub fn put(&mut self, id: MessageId, size: u64) {
        self.buckets[0].push((id, size));
    }

    /// Size of a still-cached message.
    pub fn get(&self, id: &MessageId) -> Option<u64> {
        self.buckets
            .iter()
            .flat_map(|b| b.iter())
            .find(|(m, _)| m == id)
            .map(|&(_, size)| size)
    }

    /// Identifiers advertised in the next IHAVE round.
    pub fn gossip_ids(&self) -> Vec<MessageId> {
        self.buckets
            .iter()
            .take(self.gossip)
            .flat_map(|b| b.iter().map(|(id, _)| *id))
            .collect()
    }

    pub fn shift(&mut self) {
        self.buckets.push_front(Vec::new());
        self.buckets.truncate(self.history);
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.iter().all(|b| b.is_empty())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::message::PeerId;

    #[test]
    fn windows_expire() {
        let a = MessageId::derive(0, PeerId(0), 0);
        let mut mc = MessageCache::new(5, 3);
        assert!(mc.gossip_ids().is_empty());
        mc.put(a, 10);
        for _ in 0..3 {
            assert_eq!(mc.gossip_ids(), alloc::vec![a]);
            mc.shift();
        }
        assert!(mc.gossip_ids().is_empty());
        assert_eq!(mc.get(&a), Some(10));
        mc.shift();
        assert_eq!(mc.get(&a), Some(10));
        mc.shift();
        assert_eq!(mc.get(&a), None);
        assert!(mc.is_empty());
    }
}
