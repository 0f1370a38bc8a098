//! Sensor local mobility anchor (SLMA) with its binding cache, and the AAA
//! server it consults when not colocated.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use super::{drop_reason, Action, Body, GroupId, Message, NetworkPrefix, ProtocolError};
use crate::sim_core::{EntityId, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BindingState {
    Active,
    Pending,
    Deregistered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BindingCacheEntry {
    pub group: GroupId,
    /// 0 is the coordinator; per-sensor registrations use 1..n as well.
    pub sensor: u32,
    pub hnp: NetworkPrefix,
    pub serving_smag: EntityId,
    pub installed_at: SimTime,
    pub state: BindingState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlmaState {
    pub id: EntityId,
    pub aaa: EntityId,
    pub aaa_colocated: bool,
    pub cache: Vec<BindingCacheEntry>,
}

impl SlmaState {
    pub fn new(aaa_colocated: bool) -> Self {
        SlmaState {
            id: EntityId::slma(),
            aaa: EntityId::aaa(),
            aaa_colocated,
            cache: Vec::new(),
        }
    }

    pub fn active(&self, group: GroupId, sensor: u32) -> Option<&BindingCacheEntry> {
        self.cache
            .iter()
            .find(|e| e.group == group && e.sensor == sensor && e.state == BindingState::Active)
    }

    /// Gateway currently receiving the group's downlink traffic.
    pub fn route(&self, group: GroupId) -> Option<EntityId> {
        self.active(group, 0).map(|e| e.serving_smag)
    }

    pub fn on_spbu(&mut self, now: SimTime, pbu: &Message) -> Result<Vec<Action>, ProtocolError> {
        let Body::SPbu { hnp, sensor, .. } = pbu.body else {
            return Err(ProtocolError::Unexpected {
                tag: pbu.tag(),
                group: pbu.group,
            });
        };
        if !hnp.is_well_formed() {
            return Err(ProtocolError::MalformedPrefix(hnp));
        }
        let group = pbu.group;
        // A retried S_PBU replaces an older pending one for the same sensor.
        self.cache.retain(|e| {
            !(e.group == group && e.sensor == sensor && e.state == BindingState::Pending)
        });
        self.cache.push(BindingCacheEntry {
            group,
            sensor,
            hnp,
            serving_smag: pbu.src,
            installed_at: now,
            state: BindingState::Pending,
        });
        if self.aaa_colocated {
            return Ok(self.install(now, group, sensor));
        }
        Ok(vec![Action::send(
            self.aaa,
            Message::new(self.id, self.aaa, group, Body::SAaaReq { sensor }),
        )])
    }

    pub fn on_aaa_reply(
        &mut self,
        now: SimTime,
        reply: &Message,
    ) -> Result<Vec<Action>, ProtocolError> {
        let group = reply.group;
        let Body::SAaaReply { sensor, accepted } = reply.body else {
            return Err(ProtocolError::Unexpected {
                tag: reply.tag(),
                group,
            });
        };
        if !accepted {
            self.cache.retain(|e| {
                !(e.group == group && e.sensor == sensor && e.state == BindingState::Pending)
            });
            return Err(ProtocolError::AuthFailed(group));
        }
        Ok(self.install(now, group, sensor))
    }

    /// Pending entry becomes Active; the previous Active entry for the same
    /// sensor is deregistered and its gateway told so.
    fn install(&mut self, now: SimTime, group: GroupId, sensor: u32) -> Vec<Action> {
        let Some(idx) = self.cache.iter().position(|e| {
            e.group == group && e.sensor == sensor && e.state == BindingState::Pending
        }) else {
            return Vec::new();
        };
        let new_smag = self.cache[idx].serving_smag;
        let mut previous = None;
        for e in self.cache.iter_mut() {
            if e.group == group && e.sensor == sensor && e.state == BindingState::Active {
                e.state = BindingState::Deregistered;
                previous = Some(e.serving_smag);
            }
        }
        let entry = &mut self.cache[idx];
        entry.state = BindingState::Active;
        entry.installed_at = now;
        let mut out = vec![Action::state("SLMA", "binding_active", group)];
        if let Some(old) = previous.filter(|&old| old != new_smag && sensor == 0) {
            out.push(Action::send(
                old,
                Message::new(self.id, old, group, Body::DeReg),
            ));
        }
        out.push(Action::send(
            new_smag,
            Message::new(self.id, new_smag, group, Body::SPbAck { sensor }),
        ));
        out
    }

    pub fn on_data(&self, msg: Message) -> Vec<Action> {
        match self.route(msg.group) {
            Some(smag) => vec![Action::send(smag, msg)],
            None => vec![Action::Drop {
                msg,
                reason: drop_reason::NO_BINDING,
            }],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AaaState {
    pub rejected: BTreeSet<GroupId>,
}

impl AaaState {
    pub fn on_request(&self, req: &Message) -> Vec<Action> {
        let Body::SAaaReq { sensor } = req.body else {
            return Vec::new();
        };
        let accepted = !self.rejected.contains(&req.group);
        vec![Action::send(
            req.src,
            Message::new(
                req.dst,
                req.src,
                req.group,
                Body::SAaaReply { sensor, accepted },
            ),
        )]
    }
}

/// Active entries per (group, sensor).
pub fn active_counts(cache: &[BindingCacheEntry]) -> BTreeMap<(GroupId, u32), usize> {
    let mut counts = BTreeMap::new();
    for e in cache.iter().filter(|e| e.state == BindingState::Active) {
        *counts.entry((e.group, e.sensor)).or_insert(0) += 1;
    }
    counts
}
