//! Deterministic single-threaded discrete-event engine.
//!
//! The engine owns the clock, a priority queue of pending events, the
//! registered links and the trace. Events with the same timestamp are
//! processed in the order they were scheduled.

use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, Sub};

use thiserror::Error;

/// Simulation time in integer microseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_micros(us: u64) -> Self {
        SimTime(us)
    }

    pub const fn from_millis(ms: u64) -> Self {
        SimTime(ms * 1_000)
    }

    pub const fn as_micros(self) -> u64 {
        self.0
    }

    pub fn saturating_sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(rhs.0))
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}us", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Msn,
    BodySensor,
    Ap,
    Smag,
    Slma,
    Aaa,
    TrafficSource,
}

impl Role {
    pub const fn name(self) -> &'static str {
        match self {
            Role::Msn => "MSN",
            Role::BodySensor => "BodySensor",
            Role::Ap => "AP",
            Role::Smag => "SMAG",
            Role::Slma => "SLMA",
            Role::Aaa => "AAA",
            Role::TrafficSource => "TrafficSource",
        }
    }
}

/// A simulated entity. The role never changes for the lifetime of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityId {
    pub role: Role,
    pub index: u32,
}

impl EntityId {
    pub const fn new(role: Role, index: u32) -> Self {
        EntityId { role, index }
    }
    pub const fn msn(i: u32) -> Self {
        Self::new(Role::Msn, i)
    }
    pub const fn ap(i: u32) -> Self {
        Self::new(Role::Ap, i)
    }
    pub const fn smag(i: u32) -> Self {
        Self::new(Role::Smag, i)
    }
    pub const fn slma() -> Self {
        Self::new(Role::Slma, 0)
    }
    pub const fn aaa() -> Self {
        Self::new(Role::Aaa, 0)
    }
    pub const fn source() -> Self {
        Self::new(Role::TrafficSource, 0)
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.role.name(), self.index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("expected an entity name such as SMAG1 or AP0")]
pub struct EntityParseError;

impl core::str::FromStr for EntityId {
    type Err = EntityParseError;

    /// Inverse of `Display`: role name followed by a decimal index.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        const ROLES: [Role; 7] = [
            Role::TrafficSource,
            Role::BodySensor,
            Role::Smag,
            Role::Slma,
            Role::Msn,
            Role::Aaa,
            Role::Ap,
        ];
        for role in ROLES {
            if let Some(rest) = s.strip_prefix(role.name()) {
                if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
                    let index = rest.parse().map_err(|_| EntityParseError)?;
                    return Ok(EntityId::new(role, index));
                }
            }
        }
        Err(EntityParseError)
    }
}

/// A directed link with a fixed one-way delay.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Link {
    pub from: EntityId,
    pub to: EntityId,
    pub one_way_delay: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    Send,
    Deliver,
    Drop,
    StateChange,
    BufferOp,
}

impl TraceKind {
    pub const fn name(self) -> &'static str {
        match self {
            TraceKind::Send => "send",
            TraceKind::Deliver => "deliver",
            TraceKind::Drop => "drop",
            TraceKind::StateChange => "state_change",
            TraceKind::BufferOp => "buffer_op",
        }
    }
}

/// Message tag plus whatever ids are relevant to the record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Detail {
    pub tag: &'static str,
    pub src: Option<EntityId>,
    pub dst: Option<EntityId>,
    pub group: Option<u32>,
    pub seqno: Option<u64>,
    pub note: Option<&'static str>,
}

impl Detail {
    pub const fn tag(tag: &'static str) -> Self {
        Detail {
            tag,
            src: None,
            dst: None,
            group: None,
            seqno: None,
            note: None,
        }
    }

    pub const fn with_note(mut self, note: &'static str) -> Self {
        self.note = Some(note);
        self
    }

    pub const fn with_group(mut self, group: u32) -> Self {
        self.group = Some(group);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRecord {
    pub at: SimTime,
    pub kind: TraceKind,
    pub actor: EntityId,
    pub detail: Detail,
}

/// Anything carried over a link must be able to describe itself in the trace.
pub trait Traced {
    fn detail(&self) -> Detail;
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload<M, T> {
    Deliver { from: EntityId, msg: M },
    Timer(T),
}

#[derive(Debug, Clone)]
pub struct Event<M, T> {
    pub at: SimTime,
    pub seq: u64,
    pub target: EntityId,
    pub payload: Payload<M, T>,
}

// Min-heap ordering on (at, seq).
impl<M, T> Ord for Event<M, T> {
    fn cmp(&self, other: &Self) -> Ordering {
        (other.at, other.seq).cmp(&(self.at, self.seq))
    }
}

impl<M, T> PartialOrd for Event<M, T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<M, T> PartialEq for Event<M, T> {
    fn eq(&self, other: &Self) -> bool {
        self.at == other.at && self.seq == other.seq
    }
}

impl<M, T> Eq for Event<M, T> {}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("event scheduled at {at} but the clock is already at {clock}")]
    SchedulingInPast { at: SimTime, clock: SimTime },
    #[error("no link registered from {from} to {to}")]
    UnknownLink { from: EntityId, to: EntityId },
}

pub struct Engine<M, T> {
    clock: SimTime,
    next_seq: u64,
    queue: BinaryHeap<Event<M, T>>,
    links: BTreeMap<(EntityId, EntityId), SimTime>,
    trace: Vec<TraceRecord>,
}

impl<M, T> Default for Engine<M, T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<M, T> Engine<M, T> {
    pub fn new() -> Self {
        Engine {
            clock: SimTime::ZERO,
            next_seq: 0,
            queue: BinaryHeap::new(),
            links: BTreeMap::new(),
            trace: Vec::new(),
        }
    }

    pub fn now(&self) -> SimTime {
        self.clock
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    pub fn add_link(&mut self, link: Link) {
        self.links.insert((link.from, link.to), link.one_way_delay);
    }

    pub fn link_delay(&self, from: EntityId, to: EntityId) -> Option<SimTime> {
        self.links.get(&(from, to)).copied()
    }

    pub fn links(&self) -> impl Iterator<Item = Link> + '_ {
        self.links.iter().map(|(&(from, to), &one_way_delay)| Link {
            from,
            to,
            one_way_delay,
        })
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn into_trace(self) -> Vec<TraceRecord> {
        self.trace
    }

    pub fn record(&mut self, kind: TraceKind, actor: EntityId, detail: Detail) {
        self.trace.push(TraceRecord {
            at: self.clock,
            kind,
            actor,
            detail,
        });
    }

    pub fn schedule(
        &mut self,
        at: SimTime,
        target: EntityId,
        payload: Payload<M, T>,
    ) -> Result<(), SimError> {
        if at < self.clock {
            return Err(SimError::SchedulingInPast {
                at,
                clock: self.clock,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Event {
            at,
            seq,
            target,
            payload,
        });
        Ok(())
    }

    pub fn set_timer(&mut self, at: SimTime, target: EntityId, tag: T) -> Result<(), SimError> {
        self.schedule(at, target, Payload::Timer(tag))
    }

    /// Pops the next event due at or before `until`, advancing the clock.
    pub fn next_event(&mut self, until: SimTime) -> Option<Event<M, T>> {
        match self.queue.peek() {
            Some(ev) if ev.at <= until => {}
            Some(_) => {
                self.clock = self.clock.max(until);
                return None;
            }
            None => return None,
        }
        let ev = self.queue.pop()?;
        self.clock = ev.at;
        Some(ev)
    }
}

impl<M: Traced, T> Engine<M, T> {
    /// Sends `msg` over the registered link `from -> to`.
    pub fn send(&mut self, from: EntityId, to: EntityId, msg: M) -> Result<(), SimError> {
        let delay = self
            .link_delay(from, to)
            .ok_or(SimError::UnknownLink { from, to })?;
        self.record(TraceKind::Send, from, msg.detail());
        let at = self.clock + delay;
        self.schedule(at, to, Payload::Deliver { from, msg })
    }

    /// Processes every event due at or before `until`. Deliveries are traced
    /// before the handler sees them.
    pub fn run<F>(&mut self, until: SimTime, mut handler: F) -> &[TraceRecord]
    where
        F: FnMut(&mut Self, Event<M, T>),
    {
        while let Some(ev) = self.next_event(until) {
            if let Payload::Deliver { msg, .. } = &ev.payload {
                let detail = msg.detail();
                self.record(TraceKind::Deliver, ev.target, detail);
            }
            handler(self, ev);
        }
        &self.trace
    }
}
