use core::fmt;
use core::net::Ipv6Addr;
use core::str::FromStr;

use crate::sim_core::{Detail, EntityId, SimTime, Traced};

/// An IPv6 prefix, e.g. `2001:db8:1::/64`. Used as the home network prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NetworkPrefix {
    pub addr: Ipv6Addr,
    pub len: u8,
}

impl NetworkPrefix {
    pub fn new(addr: Ipv6Addr, len: u8) -> Self {
        NetworkPrefix { addr, len }
    }

    /// A prefix is well formed when its length is in 1..=128 and no host
    /// bits are set.
    pub fn is_well_formed(&self) -> bool {
        if self.len == 0 || self.len > 128 {
            return false;
        }
        let bits = u128::from(self.addr);
        let host_mask = if self.len == 128 {
            0
        } else {
            u128::MAX >> self.len
        };
        bits & host_mask == 0
    }
}

impl fmt::Display for NetworkPrefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.addr, self.len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrefixParseError;

impl fmt::Display for PrefixParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("expected an IPv6 prefix such as 2001:db8::/64")
    }
}

impl FromStr for NetworkPrefix {
    type Err = PrefixParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (addr, len) = s.trim().split_once('/').ok_or(PrefixParseError)?;
        let addr = Ipv6Addr::from_str(addr).map_err(|_| PrefixParseError)?;
        let len = len.parse::<u8>().map_err(|_| PrefixParseError)?;
        Ok(NetworkPrefix { addr, len })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupId(pub u32);

/// A patient's body-sensor group. The coordinator carries all mobility
/// signaling on behalf of the members.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    pub id: GroupId,
    pub coordinator: EntityId,
    pub members: alloc::vec::Vec<EntityId>,
}

impl Group {
    /// Group of `n` body sensors; member 0 is the coordinating MSN.
    pub fn with_sensors(id: GroupId, n: u32) -> Self {
        let coordinator = EntityId::msn(id.0);
        let members = (0..n)
            .map(|k| {
                if k == 0 {
                    coordinator
                } else {
                    EntityId::new(crate::sim_core::Role::BodySensor, id.0 * 1_000 + k)
                }
            })
            .collect();
        Group {
            id,
            coordinator,
            members,
        }
    }

    pub fn size(&self) -> u32 {
        self.members.len() as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MessageTag {
    Ra,
    L2HoInfo,
    L2HoInit,
    L2HoComplete,
    Hi,
    HAck,
    SPbu,
    SPbAck,
    SAaaReq,
    SAaaReply,
    NdpReq,
    NdpAck,
    DeReg,
    DeRegAck,
    DataPacket,
}

impl MessageTag {
    pub const ALL: [MessageTag; 15] = [
        MessageTag::Ra,
        MessageTag::L2HoInfo,
        MessageTag::L2HoInit,
        MessageTag::L2HoComplete,
        MessageTag::Hi,
        MessageTag::HAck,
        MessageTag::SPbu,
        MessageTag::SPbAck,
        MessageTag::SAaaReq,
        MessageTag::SAaaReply,
        MessageTag::NdpReq,
        MessageTag::NdpAck,
        MessageTag::DeReg,
        MessageTag::DeRegAck,
        MessageTag::DataPacket,
    ];

    /// Wire name used in traces and reports.
    pub const fn name(self) -> &'static str {
        match self {
            MessageTag::Ra => "RA",
            MessageTag::L2HoInfo => "L2_HOInfo",
            MessageTag::L2HoInit => "L2_HOInit",
            MessageTag::L2HoComplete => "L2_HOComplete",
            MessageTag::Hi => "HI",
            MessageTag::HAck => "HAck",
            MessageTag::SPbu => "S_PBU",
            MessageTag::SPbAck => "S_PBAck",
            MessageTag::SAaaReq => "S_AAAreq",
            MessageTag::SAaaReply => "S_AAAreply",
            MessageTag::NdpReq => "NDP_Req",
            MessageTag::NdpAck => "NDP_Ack",
            MessageTag::DeReg => "DeReg",
            MessageTag::DeRegAck => "DeRegAck",
            MessageTag::DataPacket => "DataPacket",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == name)
    }

    /// Control messages that appear as arrows of the handover signaling flow
    /// and therefore count towards signaling cost.
    pub const fn is_handover_signaling(self) -> bool {
        matches!(
            self,
            MessageTag::L2HoInfo
                | MessageTag::L2HoInit
                | MessageTag::L2HoComplete
                | MessageTag::Hi
                | MessageTag::HAck
                | MessageTag::SPbu
                | MessageTag::SPbAck
                | MessageTag::SAaaReq
                | MessageTag::SAaaReply
                | MessageTag::NdpReq
        )
    }
}

impl fmt::Display for MessageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Body {
    Ra {
        hnp: NetworkPrefix,
    },
    /// L2 handover notification naming the expected new AP. `detached` is
    /// set when the group had already lost its link when the notification
    /// was raised.
    L2HoInfo {
        target_ap: EntityId,
        detached: bool,
    },
    L2HoInit {
        target_ap: EntityId,
    },
    L2HoComplete,
    Hi {
        timestamp: SimTime,
    },
    HAck,
    SPbu {
        timestamp: SimTime,
        hnp: NetworkPrefix,
        sensor: u32,
    },
    SPbAck {
        sensor: u32,
    },
    SAaaReq {
        sensor: u32,
    },
    SAaaReply {
        sensor: u32,
        accepted: bool,
    },
    NdpReq,
    NdpAck,
    DeReg,
    DeRegAck,
    DataPacket {
        seqno: u64,
        emitted_at: SimTime,
    },
}

/// A protocol PDU. `src`/`dst` are end-to-end; intermediate hops (APs
/// relaying to the MSN) forward the message unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Message {
    pub src: EntityId,
    pub dst: EntityId,
    pub group: GroupId,
    pub body: Body,
}

impl Message {
    pub fn new(src: EntityId, dst: EntityId, group: GroupId, body: Body) -> Self {
        Message {
            src,
            dst,
            group,
            body,
        }
    }

    pub fn tag(&self) -> MessageTag {
        match self.body {
            Body::Ra { .. } => MessageTag::Ra,
            Body::L2HoInfo { .. } => MessageTag::L2HoInfo,
            Body::L2HoInit { .. } => MessageTag::L2HoInit,
            Body::L2HoComplete => MessageTag::L2HoComplete,
            Body::Hi { .. } => MessageTag::Hi,
            Body::HAck => MessageTag::HAck,
            Body::SPbu { .. } => MessageTag::SPbu,
            Body::SPbAck { .. } => MessageTag::SPbAck,
            Body::SAaaReq { .. } => MessageTag::SAaaReq,
            Body::SAaaReply { .. } => MessageTag::SAaaReply,
            Body::NdpReq => MessageTag::NdpReq,
            Body::NdpAck => MessageTag::NdpAck,
            Body::DeReg => MessageTag::DeReg,
            Body::DeRegAck => MessageTag::DeRegAck,
            Body::DataPacket { .. } => MessageTag::DataPacket,
        }
    }

    pub fn seqno(&self) -> Option<u64> {
        match self.body {
            Body::DataPacket { seqno, .. } => Some(seqno),
            _ => None,
        }
    }
}

impl Traced for Message {
    fn detail(&self) -> Detail {
        Detail {
            tag: self.tag().name(),
            src: Some(self.src),
            dst: Some(self.dst),
            group: Some(self.group.0),
            seqno: self.seqno(),
            note: None,
        }
    }
}
