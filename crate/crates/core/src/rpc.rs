use alloc::vec::Vec;

use crate::message::MessageId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ControlKind {
    IHave,
    IWant,
    IDontWant,
}

/// Control announcement carrying message identifiers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlRpc {
    kind: ControlKind,
    ids: Vec<MessageId>,
}

impl ControlRpc {
    /// Returns `None` for an empty id list.
    pub fn new(kind: ControlKind, ids: Vec<MessageId>) -> Option<Self> {
        if ids.is_empty() {
            None
        } else {
            Some(ControlRpc { kind, ids })
        }
    }

    pub fn kind(&self) -> ControlKind {
        self.kind
    }

    pub fn ids(&self) -> &[MessageId] {
        &self.ids
    }

    /// Bytes taken by the identifiers alone.
    pub fn id_bytes(&self) -> u64 {
        (MessageId::LEN * self.ids.len()) as u64
    }

    pub fn wire_size(&self, framing_overhead: u64) -> u64 {
        framing_overhead + self.id_bytes()
    }
}
