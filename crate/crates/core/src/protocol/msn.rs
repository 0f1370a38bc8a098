//! Coordinating mobile sensor node.

use alloc::vec;
use alloc::vec::Vec;

use super::{drop_reason, Action, Body, GroupId, Message};
use crate::sim_core::{EntityId, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsnPhase {
    Connected,
    Detached,
    Attaching,
}

/// One DataPacket received by the MSN.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Reception {
    pub at: SimTime,
    pub seqno: u64,
    pub via_ap: EntityId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MsnState {
    pub id: EntityId,
    pub group: GroupId,
    pub attached_ap: Option<EntityId>,
    pub phase: MsnPhase,
    pub last_rx_seqno: Option<u64>,
    pub received: Vec<Reception>,
    /// Set while a handover decided by this MSN is in progress.
    pub handover_target: Option<EntityId>,
}

impl MsnState {
    pub fn new(id: EntityId, group: GroupId) -> Self {
        MsnState {
            id,
            group,
            attached_ap: None,
            phase: MsnPhase::Detached,
            last_rx_seqno: None,
            received: Vec::new(),
            handover_target: None,
        }
    }

    pub fn is_connected_via(&self, ap: EntityId) -> bool {
        self.phase == MsnPhase::Connected && self.attached_ap == Some(ap)
    }

    /// Break the link to the current AP.
    pub fn detach(&mut self) -> Vec<Action> {
        self.attached_ap = None;
        self.phase = MsnPhase::Detached;
        vec![Action::state("MSN", "detached", self.group)]
    }

    /// L2 join of `ap`, owned by `smag`; asks the gateway for service.
    pub fn attach(&mut self, ap: EntityId, smag: EntityId) -> Vec<Action> {
        self.attached_ap = Some(ap);
        self.phase = MsnPhase::Attaching;
        vec![
            Action::state("MSN", "attaching", self.group),
            Action::send(ap, Message::new(self.id, smag, self.group, Body::NdpReq)),
        ]
    }

    pub fn on_ndp_ack(&mut self, from_ap: EntityId) -> Vec<Action> {
        if self.attached_ap != Some(from_ap) || self.phase != MsnPhase::Attaching {
            return Vec::new();
        }
        self.phase = MsnPhase::Connected;
        self.handover_target = None;
        vec![Action::state("MSN", "connected", self.group)]
    }

    /// Whether an L2_HOComplete relayed by `from_ap` applies to us.
    pub fn on_ho_complete(&mut self, from_ap: EntityId) -> Vec<Action> {
        if self.attached_ap == Some(from_ap) {
            self.detach()
        } else {
            Vec::new()
        }
    }

    pub fn on_data(&mut self, now: SimTime, from_ap: EntityId, msg: Message) -> Vec<Action> {
        let Body::DataPacket { seqno, .. } = msg.body else {
            return Vec::new();
        };
        if !self.is_connected_via(from_ap) {
            return vec![Action::Drop {
                msg,
                reason: drop_reason::MSN_DETACHED,
            }];
        }
        self.last_rx_seqno = Some(seqno);
        self.received.push(Reception {
            at: now,
            seqno,
            via_ap: from_ap,
        });
        Vec::new()
    }

    /// True when every received seqno is exactly one above the previous.
    pub fn gap_free(&self) -> bool {
        self.received
            .windows(2)
            .all(|w| w[1].seqno == w[0].seqno + 1)
    }
}
