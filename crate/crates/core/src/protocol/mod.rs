//! Message schema and per-entity state machines for FHPMIPv6 and the
//! reactive PMIPv6 baseline.
//!
//! Every transition takes the entity state by `&mut` plus one input and
//! returns the [`Action`]s it produces. Transitions never touch the engine;
//! the scenario driver applies the actions.

use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::sim_core::{Detail, EntityId, TraceKind};

mod mag;
mod message;
mod msn;
mod slma;

pub use mag::{GroupCtx, GroupProfile, GroupRole, MagState, NewPhase};
pub use message::{Body, Group, GroupId, Message, MessageTag, NetworkPrefix, PrefixParseError};
pub use msn::{MsnPhase, MsnState, Reception};
pub use slma::{active_counts, AaaState, BindingCacheEntry, BindingState, SlmaState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProtocolMode {
    Pmipv6,
    Fhpmipv6,
}

impl ProtocolMode {
    pub const fn name(self) -> &'static str {
        match self {
            ProtocolMode::Pmipv6 => "pmipv6",
            ProtocolMode::Fhpmipv6 => "fhpmipv6",
        }
    }
}

impl fmt::Display for ProtocolMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Whether the new gateway registers the whole group with one S_PBU or
/// registers each of the n body sensors in turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SignalingMode {
    Aggregated,
    PerSensor,
}

impl SignalingMode {
    pub const fn name(self) -> &'static str {
        match self {
            SignalingMode::Aggregated => "aggregated",
            SignalingMode::PerSensor => "per_sensor",
        }
    }
}

impl fmt::Display for SignalingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BufferCap {
    #[default]
    Unbounded,
    Packets(usize),
}

impl BufferCap {
    pub fn admits(self, len: usize) -> bool {
        match self {
            BufferCap::Unbounded => true,
            BufferCap::Packets(cap) => len < cap,
        }
    }
}

/// Why a DataPacket or control message was discarded.
pub mod drop_reason {
    pub const NO_BINDING: &str = "no_binding";
    pub const MSN_DETACHED: &str = "msn_detached";
    pub const GROUP_DETACHED: &str = "group_detached";
    pub const BUFFER_FULL: &str = "buffer_full";
    pub const NO_TUNNEL: &str = "no_tunnel";
    pub const STALE_CONTROL: &str = "stale_control";
}

/// Output of a state-machine transition.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    /// Hand `msg` to the next hop `to`.
    Send { to: EntityId, msg: Message },
    /// Discard `msg`; DataPacket drops count as packet loss.
    Drop { msg: Message, reason: &'static str },
    /// Trace-only record (state change or buffer operation).
    Note { kind: TraceKind, detail: Detail },
}

impl Action {
    pub fn send(to: EntityId, msg: Message) -> Self {
        Action::Send { to, msg }
    }

    pub fn state(tag: &'static str, note: &'static str, group: GroupId) -> Self {
        Action::Note {
            kind: TraceKind::StateChange,
            detail: Detail::tag(tag).with_note(note).with_group(group.0),
        }
    }
}

/// Sent messages only, in emission order.
pub fn sent(actions: &[Action]) -> Vec<&Message> {
    actions
        .iter()
        .filter_map(|a| match a {
            Action::Send { msg, .. } => Some(msg),
            _ => None,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("target AP {0} is not in the neighbor table")]
    UnknownNeighborAp(EntityId),
    #[error("handover for group {0:?} already in progress at this gateway")]
    DuplicateHandover(GroupId),
    #[error("gateway is not serving group {0:?}")]
    NotServing(GroupId),
    #[error("authentication rejected for group {0:?}")]
    AuthFailed(GroupId),
    #[error("malformed home network prefix {0}")]
    MalformedPrefix(NetworkPrefix),
    #[error("unexpected {tag} for group {group:?}")]
    Unexpected { tag: MessageTag, group: GroupId },
}
