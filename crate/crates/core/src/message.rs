use alloc::vec::Vec;
use core::fmt;

use rand::RngCore;

use crate::error::FragmentError;
use crate::rng::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PeerId(pub u32);

impl PeerId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for PeerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TopicId(pub u32);

/// Opaque 32-byte message identifier.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MessageId(pub [u8; 32]);

impl MessageId {
    pub const LEN: usize = 32;

    /// Identifier of the `seq`-th message published by `publisher` in a run
    /// keyed by `seed`.
    pub fn derive(seed: u64, publisher: PeerId, seq: u64) -> Self {
        let mut rng = rng::derive(seed, Stream::MessageIds, (u64::from(publisher.0) << 32) ^ seq);
        let mut bytes = [0u8; 32];
        rng.fill_bytes(&mut bytes);
        MessageId(bytes)
    }

    /// Identifier of fragment `index` of this message.
    pub fn fragment(&self, index: u32) -> Self {
        let mut seed = [0u64; 4];
        for (lane, chunk) in seed.iter_mut().zip(self.0.chunks_exact(8)) {
            *lane = u64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        }
        let folded = seed[0] ^ seed[1].rotate_left(13) ^ seed[2].rotate_left(29) ^ seed[3].rotate_left(41);
        let mut rng = rng::derive(folded, Stream::MessageIds, u64::from(index) + 1);
        let mut bytes = [0u8; 32];
        rng.fill_bytes(&mut bytes);
        MessageId(bytes)
    }

    /// First eight bytes as lowercase hex, used in CSV output.
    pub fn short_hex(&self) -> alloc::string::String {
        use core::fmt::Write;
        let mut s = alloc::string::String::with_capacity(16);
        for b in &self.0[..8] {
            let _ = write!(s, "{b:02x}");
        }
        s
    }
}

impl fmt::Debug for MessageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MessageId({})", self.short_hex())
    }
}

impl fmt::Display for MessageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FragmentInfo {
    pub parent: MessageId,
    pub index: u32,
    pub total: u32,
}

/// Payload descriptor. Only the size matters to the simulation; there is no
/// content.
#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub id: MessageId,
    pub topic: TopicId,
    pub size: u64,
    pub publisher: PeerId,
    pub publish_time: f64,
    pub fragment: Option<FragmentInfo>,
}

impl Message {
    /// Identifier of the full message this one belongs to.
    pub fn logical_id(&self) -> MessageId {
        self.fragment.map_or(self.id, |f| f.parent)
    }
}

/// Sizes of the `n` fragments of an `size`-byte message: every fragment is
/// `ceil(size / n)` bytes except the last, which takes the remainder.
pub fn fragment_sizes(size: u64, n: u32) -> Result<Vec<u64>, FragmentError> {
    if n == 0 {
        return Err(FragmentError::ZeroFragments);
    }
    let n64 = u64::from(n);
    let chunk = size.div_ceil(n64);
    if n64 > size || chunk * (n64 - 1) >= size {
        return Err(FragmentError::TooManyFragments { size, fragments: n });
    }
    let mut remaining = size;
    let sizes = (0..n)
        .map(|_| {
            let s = chunk.min(remaining);
            remaining -= s;
            s
        })
        .collect();
    Ok(sizes)
}

/// Splits `msg` into `n` independently forwarded fragments. `n == 1` returns
/// the message unchanged.
pub fn fragment_message(msg: &Message, n: u32) -> Result<Vec<Message>, FragmentError> {
    if msg.fragment.is_some() {
        return Err(FragmentError::AlreadyFragment);
    }
    if n == 1 {
        return Ok(alloc::vec![msg.clone()]);
    }
    let sizes = fragment_sizes(msg.size, n)?;
    Ok(sizes
        .into_iter()
        .enumerate()
        .map(|(index, size)| Message {
            id: msg.id.fragment(index as u32),
            topic: msg.topic,
            size,
            publisher: msg.publisher,
            publish_time: msg.publish_time,
            fragment: Some(FragmentInfo {
                parent: msg.id,
                index: index as u32,
                total: n,
            }),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn msg(size: u64) -> Message {
        Message {
            id: MessageId::derive(1, PeerId(0), 0),
            topic: TopicId(0),
            size,
            publisher: PeerId(0),
            publish_time: 0.0,
            fragment: None,
        }
    }

    /// Independent oracle: repeatedly take min(ceil(S/n), remaining).
    fn oracle(size: u64, n: u64) -> Vec<u64> {
        let chunk = (size + n - 1) / n;
        let mut left = size;
        let mut out = Vec::new();
        for _ in 0..n {
            let take = if left < chunk { left } else { chunk };
            out.push(take);
            left -= take;
        }
        out
    }

    #[test]
    fn exact_division() {
        let frags = fragment_message(&msg(1_048_576), 4).unwrap();
        assert_eq!(frags.len(), 4);
        assert!(frags.iter().all(|f| f.size == 262_144));
        for (i, f) in frags.iter().enumerate() {
            let info = f.fragment.unwrap();
            assert_eq!((info.index, info.total), (i as u32, 4));
            assert_eq!(info.parent, frags[0].fragment.unwrap().parent);
        }
    }

    #[test]
    fn remainder_goes_to_last() {
        assert_eq!(oracle(10, 4), vec![3, 3, 3, 1]);
        let sizes: Vec<u64> = fragment_message(&msg(10), 4)
            .unwrap()
            .iter()
            .map(|f| f.size)
            .collect();
        assert_eq!(sizes, oracle(10, 4));
    }

    #[test]
    fn single_fragment_is_identity() {
        let m = msg(5);
        let out = fragment_message(&m, 1).unwrap();
        assert_eq!(out, vec![m]);
        assert!(out[0].fragment.is_none());
    }

    #[test]
    fn rejects_impossible_splits() {
        assert_eq!(
            fragment_message(&msg(3), 4),
            Err(FragmentError::TooManyFragments { size: 3, fragments: 4 })
        );
        // ceil(9/4) = 3 would leave the fourth fragment empty
        assert!(fragment_message(&msg(9), 4).is_err());
        assert_eq!(fragment_message(&msg(9), 0), Err(FragmentError::ZeroFragments));
        let frag = fragment_message(&msg(8), 2).unwrap().remove(0);
        assert_eq!(fragment_message(&frag, 2), Err(FragmentError::AlreadyFragment));
    }

    #[test]
    fn fragment_ids_are_distinct_and_stable() {
        let parent = MessageId::derive(9, PeerId(4), 2);
        let ids: Vec<_> = (0..8).map(|i| parent.fragment(i)).collect();
        for (i, a) in ids.iter().enumerate() {
            assert_ne!(*a, parent);
            for b in &ids[i + 1..] {
                assert_ne!(a, b);
            }
        }
        assert_eq!(parent.fragment(3), MessageId::derive(9, PeerId(4), 2).fragment(3));
    }

    proptest! {
        #[test]
        fn sizes_conserve_total(size in 1u64..5_000_000, n in 1u32..64) {
            match fragment_sizes(size, n) {
                Ok(sizes) => {
                    prop_assert_eq!(sizes.iter().sum::<u64>(), size);
                    prop_assert!(sizes.iter().all(|&s| s > 0));
                    prop_assert_eq!(sizes, oracle(size, u64::from(n)));
                }
                Err(_) => {
                    let chunk = size.div_ceil(u64::from(n));
                    prop_assert!(chunk * (u64::from(n) - 1) >= size);
                }
            }
        }
    }
}
