use core::fmt;

use crate::message::PeerId;

/// Invalid parameter, reported with the flat configuration key it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub field: &'static str,
    pub reason: alloc::string::String,
}

impl ConfigError {
    pub(crate) fn new(field: &'static str, reason: impl Into<alloc::string::String>) -> Self {
        ConfigError {
            field,
            reason: reason.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

impl core::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FragmentError {
    ZeroFragments,
    AlreadyFragment,
    /// The ceiling split would leave at least one fragment empty.
    TooManyFragments { size: u64, fragments: u32 },
}

impl fmt::Display for FragmentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FragmentError::ZeroFragments => f.write_str("fragment count must be at least 1"),
            FragmentError::AlreadyFragment => f.write_str("cannot fragment a fragment"),
            FragmentError::TooManyFragments { size, fragments } => write!(
                f,
                "cannot split {size} bytes into {fragments} non-empty fragments"
            ),
        }
    }
}

impl core::error::Error for FragmentError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    /// A peer received traffic from a node it has no relationship with.
    UnknownPeer { node: PeerId, from: PeerId },
    EmptyMessage,
    Fragment(FragmentError),
}

impl fmt::Display for ProtocolError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProtocolError::UnknownPeer { node, from } => {
                write!(f, "peer {node} received a message from non-neighbor {from}")
            }
            ProtocolError::EmptyMessage => f.write_str("message size must be positive"),
            ProtocolError::Fragment(e) => write!(f, "fragmentation failed: {e}"),
        }
    }
}

impl core::error::Error for ProtocolError {}

impl From<FragmentError> for ProtocolError {
    fn from(e: FragmentError) -> Self {
        ProtocolError::Fragment(e)
    }
}
