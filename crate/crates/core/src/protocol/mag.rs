//! Sensor mobile access gateway (SMAG).
//!
//! One SMAG can play a different role for every group: serving it, being
//! the previous gateway of an ongoing handover, or being the new gateway
//! that registers the group and buffers its downlink traffic.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use super::{drop_reason, Action, Body, BufferCap, GroupId, Message, NetworkPrefix, ProtocolError};
use super::{ProtocolMode, SignalingMode};
use crate::sim_core::{Detail, EntityId, SimTime, TraceKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NewPhase {
    /// Registration sent, waiting for S_PBAck.
    Pending,
    /// Binding acknowledged, waiting for the MSN to attach.
    Bound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupRole {
    Serving,
    Previous,
    New(NewPhase),
    Uninvolved,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupCtx {
    pub role: GroupRole,
    pub coordinator: EntityId,
    pub size: u32,
    pub hnp: NetworkPrefix,
    /// N_SMAG while Previous, P_SMAG while New (None for initial attach).
    pub peer: Option<EntityId>,
    pub buffer: VecDeque<Message>,
    pub detached: bool,
    pub pending_ndp: bool,
    pub hack_pending: bool,
    /// Timestamp carried by every S_PBU of this registration.
    pub reg_timestamp: SimTime,
}

impl GroupCtx {
    fn new(role: GroupRole, coordinator: EntityId, size: u32, hnp: NetworkPrefix) -> Self {
        GroupCtx {
            role,
            coordinator,
            size,
            hnp,
            peer: None,
            buffer: VecDeque::new(),
            detached: false,
            pending_ndp: false,
            hack_pending: false,
            reg_timestamp: SimTime::ZERO,
        }
    }
}

/// Static per-group facts every gateway is provisioned with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupProfile {
    pub coordinator: EntityId,
    pub size: u32,
    pub hnp: NetworkPrefix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MagState {
    pub id: EntityId,
    pub ap: EntityId,
    pub slma: EntityId,
    pub protocol: ProtocolMode,
    pub mode: SignalingMode,
    pub buffer_cap: BufferCap,
    /// Neighbor AP -> the SMAG owning it.
    pub neighbor_table: BTreeMap<EntityId, EntityId>,
    pub directory: BTreeMap<GroupId, GroupProfile>,
    pub groups: BTreeMap<GroupId, GroupCtx>,
}

impl MagState {
    pub fn new(id: EntityId, ap: EntityId, slma: EntityId, protocol: ProtocolMode) -> Self {
        MagState {
            id,
            ap,
            slma,
            protocol,
            mode: SignalingMode::Aggregated,
            buffer_cap: BufferCap::Unbounded,
            neighbor_table: BTreeMap::new(),
            directory: BTreeMap::new(),
            groups: BTreeMap::new(),
        }
    }

    pub fn role_of(&self, group: GroupId) -> GroupRole {
        self.groups
            .get(&group)
            .map_or(GroupRole::Uninvolved, |c| c.role)
    }

    pub fn buffered(&self, group: GroupId) -> usize {
        self.groups.get(&group).map_or(0, |c| c.buffer.len())
    }

    fn profile(&self, group: GroupId) -> GroupProfile {
        self.directory.get(&group).copied().unwrap_or(GroupProfile {
            coordinator: EntityId::msn(group.0),
            size: 1,
            hnp: NetworkPrefix::new(core::net::Ipv6Addr::UNSPECIFIED, 64),
        })
    }

    fn spbu(&self, group: GroupId, ctx: &GroupCtx, timestamp: SimTime, sensor: u32) -> Action {
        Action::send(
            self.slma,
            Message::new(
                self.id,
                self.slma,
                group,
                Body::SPbu {
                    timestamp,
                    hnp: ctx.hnp,
                    sensor,
                },
            ),
        )
    }

    /// L2 notification that the group is about to move (or has moved) to
    /// `target_ap`. Only a serving gateway starts a handover; a repeated
    /// notification after the handover started is a no-op.
    pub fn on_l2_notification(
        &mut self,
        now: SimTime,
        group: GroupId,
        target_ap: EntityId,
        detached: bool,
    ) -> Result<Vec<Action>, ProtocolError> {
        let n_smag = {
            let ctx = self
                .groups
                .get(&group)
                .ok_or(ProtocolError::NotServing(group))?;
            match ctx.role {
                GroupRole::Previous => return Ok(Vec::new()),
                GroupRole::Serving => {}
                _ => return Err(ProtocolError::NotServing(group)),
            }
            *self
                .neighbor_table
                .get(&target_ap)
                .ok_or(ProtocolError::UnknownNeighborAp(target_ap))?
        };
        let (id, ap) = (self.id, self.ap);
        let ctx = self.groups.get_mut(&group).expect("checked above");
        ctx.role = GroupRole::Previous;
        ctx.peer = Some(n_smag);
        ctx.detached |= detached;
        Ok(vec![
            Action::state("SMAG", "previous", group),
            Action::send(
                ap,
                Message::new(id, ap, group, Body::L2HoInit { target_ap }),
            ),
            Action::send(
                n_smag,
                Message::new(id, n_smag, group, Body::Hi { timestamp: now }),
            ),
        ])
    }

    /// HI from the previous gateway: register the group at the SLMA, reusing
    /// the HI timestamp, and start holding its downlink traffic.
    pub fn on_hi(&mut self, hi: &Message) -> Result<Vec<Action>, ProtocolError> {
        let Body::Hi { timestamp } = hi.body else {
            return Err(ProtocolError::Unexpected {
                tag: hi.tag(),
                group: hi.group,
            });
        };
        let group = hi.group;
        if let Some(ctx) = self.groups.get(&group) {
            if matches!(ctx.role, GroupRole::New(_)) {
                return Err(ProtocolError::DuplicateHandover(group));
            }
        }
        let p = self.profile(group);
        let mut ctx = GroupCtx::new(
            GroupRole::New(NewPhase::Pending),
            p.coordinator,
            p.size,
            p.hnp,
        );
        ctx.peer = Some(hi.src);
        ctx.hack_pending = true;
        ctx.reg_timestamp = timestamp;
        let pbu = self.spbu(group, &ctx, timestamp, 0);
        self.groups.insert(group, ctx);
        Ok(vec![Action::state("SMAG", "new_pending", group), pbu])
    }

    /// MSN attached behind our AP and asked for service. Without prior
    /// handover signaling this is an initial (PMIPv6-style) registration.
    pub fn on_ndp_req(&mut self, now: SimTime, req: &Message) -> Vec<Action> {
        let group = req.group;
        match self.groups.get(&group).map(|c| c.role) {
            Some(GroupRole::New(NewPhase::Bound)) => self.serve(group),
            Some(GroupRole::New(NewPhase::Pending)) => {
                let ctx = self.groups.get_mut(&group).expect("present");
                ctx.pending_ndp = true;
                vec![Action::state("SMAG", "ndp_waiting_for_binding", group)]
            }
            Some(GroupRole::Serving) => {
                let ctx = &self.groups[&group];
                vec![Action::send(
                    self.ap,
                    Message::new(self.id, ctx.coordinator, group, Body::NdpAck),
                )]
            }
            _ => {
                let p = self.profile(group);
                let mut ctx = GroupCtx::new(
                    GroupRole::New(NewPhase::Pending),
                    p.coordinator,
                    p.size,
                    p.hnp,
                );
                ctx.pending_ndp = true;
                ctx.reg_timestamp = now;
                let pbu = self.spbu(group, &ctx, now, 0);
                self.groups.insert(group, ctx);
                vec![Action::state("SMAG", "initial_registration", group), pbu]
            }
        }
    }

    /// S_PBAck for `sensor`. In per-sensor mode the next sensor is
    /// registered; after the last one the binding is complete, HAck goes to
    /// the previous gateway and a waiting MSN is served.
    pub fn on_spback(&mut self, ack: &Message) -> Result<Vec<Action>, ProtocolError> {
        let group = ack.group;
        let Body::SPbAck { sensor } = ack.body else {
            return Err(ProtocolError::Unexpected {
                tag: ack.tag(),
                group,
            });
        };
        let unexpected = ProtocolError::Unexpected {
            tag: ack.tag(),
            group,
        };
        let ctx = self.groups.get(&group).ok_or(unexpected.clone())?;
        if ctx.role != GroupRole::New(NewPhase::Pending) {
            return Err(unexpected);
        }
        if self.mode == SignalingMode::PerSensor && sensor + 1 < ctx.size {
            return Ok(vec![self.spbu(group, ctx, ctx.reg_timestamp, sensor + 1)]);
        }
        let (id, protocol) = (self.id, self.protocol);
        let ctx = self.groups.get_mut(&group).expect("present");
        ctx.role = GroupRole::New(NewPhase::Bound);
        let mut out = vec![Action::state("SMAG", "new_bound", group)];
        if ctx.hack_pending {
            if let Some(p_smag) = ctx.peer {
                ctx.hack_pending = false;
                out.push(Action::send(
                    p_smag,
                    Message::new(id, p_smag, group, Body::HAck),
                ));
                if protocol == ProtocolMode::Fhpmipv6 {
                    out.push(Action::Note {
                        kind: TraceKind::BufferOp,
                        detail: Detail::tag("DataPacket")
                            .with_note("buffering_armed")
                            .with_group(group.0),
                    });
                }
            }
        }
        if ctx.pending_ndp {
            out.extend(self.serve(group));
        }
        Ok(out)
    }

    /// HAck at the previous gateway: tell the AP to move the MSN over. The
    /// SLMA redirected the group before the HAck left the new gateway, so
    /// nothing for the group arrives here afterwards and the context goes.
    pub fn on_hack(&mut self, hack: &Message) -> Result<Vec<Action>, ProtocolError> {
        let group = hack.group;
        match self.groups.get(&group) {
            Some(ctx) if ctx.role == GroupRole::Previous => {
                let coordinator = ctx.coordinator;
                self.groups.remove(&group);
                Ok(vec![
                    Action::send(
                        self.ap,
                        Message::new(self.id, coordinator, group, Body::L2HoComplete),
                    ),
                    Action::state("SMAG", "uninvolved", group),
                ])
            }
            _ => Err(ProtocolError::Unexpected {
                tag: hack.tag(),
                group,
            }),
        }
    }

    pub fn on_data(&mut self, msg: Message) -> Vec<Action> {
        let group = msg.group;
        let Some(ctx) = self.groups.get_mut(&group) else {
            return vec![Action::Drop {
                msg,
                reason: drop_reason::NO_BINDING,
            }];
        };
        match ctx.role {
            GroupRole::Serving | GroupRole::Previous => {
                if ctx.detached {
                    vec![Action::Drop {
                        msg,
                        reason: drop_reason::GROUP_DETACHED,
                    }]
                } else {
                    vec![Action::send(self.ap, msg)]
                }
            }
            GroupRole::New(_) if self.protocol == ProtocolMode::Fhpmipv6 => {
                if self.buffer_cap.admits(ctx.buffer.len()) {
                    ctx.buffer.push_back(msg);
                    vec![Action::Note {
                        kind: TraceKind::BufferOp,
                        detail: Detail {
                            note: Some("enqueue"),
                            ..msg_detail(&msg)
                        },
                    }]
                } else {
                    vec![Action::Drop {
                        msg,
                        reason: drop_reason::BUFFER_FULL,
                    }]
                }
            }
            GroupRole::New(_) => vec![Action::Drop {
                msg,
                reason: drop_reason::NO_TUNNEL,
            }],
            GroupRole::Uninvolved => vec![Action::Drop {
                msg,
                reason: drop_reason::NO_BINDING,
            }],
        }
    }

    /// DeReg from the SLMA: the group's registration through this gateway
    /// is gone. A previous gateway keeps its context until the handover
    /// signaling with the new gateway has finished.
    pub fn on_dereg(&mut self, dereg: &Message) -> Vec<Action> {
        let group = dereg.group;
        let mut out = vec![Action::send(
            self.slma,
            Message::new(self.id, self.slma, group, Body::DeRegAck),
        )];
        if self.role_of(group) == GroupRole::Serving {
            self.groups.remove(&group);
            out.push(Action::state("SMAG", "uninvolved", group));
        }
        out
    }

    fn serve(&mut self, group: GroupId) -> Vec<Action> {
        let (id, ap) = (self.id, self.ap);
        let ctx = self.groups.get_mut(&group).expect("serve needs a context");
        ctx.role = GroupRole::Serving;
        ctx.pending_ndp = false;
        ctx.peer = None;
        ctx.detached = false;
        let mut out = vec![
            Action::state("SMAG", "serving", group),
            Action::send(ap, Message::new(id, ctx.coordinator, group, Body::NdpAck)),
        ];
        while let Some(pkt) = ctx.buffer.pop_front() {
            out.push(Action::Note {
                kind: TraceKind::BufferOp,
                detail: Detail {
                    note: Some("flush"),
                    ..msg_detail(&pkt)
                },
            });
            out.push(Action::send(ap, pkt));
        }
        out
    }
}

fn msg_detail(msg: &Message) -> Detail {
    crate::sim_core::Traced::detail(msg)
}
