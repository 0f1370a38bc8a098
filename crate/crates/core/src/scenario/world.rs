use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::analytics::HandoverRecord;
use crate::handover_decision::{connection_quality_decide, rssi, Advertisement, Decision};
use crate::protocol::{
    drop_reason, AaaState, Action, BindingCacheEntry, Body, GroupId, GroupProfile, MagState,
    Message, MessageTag, MsnState, ProtocolError, ProtocolMode, Reception, SignalingMode,
    SlmaState,
};
use crate::sim_core::{
    Detail, Engine, EntityId, Link, Payload, Role, SimError, SimTime, TraceKind, TraceRecord,
    Traced,
};

use super::config::{InvalidScenario, Prediction, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timer {
    TrafficEmit,
    RaTick,
    /// The previous AP raises the L2 handover notification.
    L2Trigger {
        group: GroupId,
        target_ap: EntityId,
        detached: bool,
    },
    Attach {
        group: GroupId,
        ap: EntityId,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Emission {
    pub group: GroupId,
    pub seqno: u64,
    pub at: SimTime,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(#[from] InvalidScenario),
    #[error(transparent)]
    Engine(#[from] SimError),
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub trace: Vec<TraceRecord>,
    pub records: Vec<HandoverRecord>,
    pub emissions: Vec<Emission>,
    pub receptions: BTreeMap<GroupId, Vec<Reception>>,
    /// DataPacket drops, whether or not a handover was in progress.
    pub dropped: u64,
    /// Drops that happened before the group's first handover.
    pub unattributed_loss: u64,
    pub errors: Vec<(SimTime, ProtocolError)>,
    /// SLMA binding cache when the run stopped.
    pub bindings: Vec<BindingCacheEntry>,
    pub end: SimTime,
}

impl SimOutcome {
    pub fn delivered(&self) -> u64 {
        self.receptions.values().map(|r| r.len() as u64).sum()
    }

    /// Packets neither delivered nor dropped when the run stopped.
    pub fn in_flight(&self) -> u64 {
        self.emissions.len() as u64 - self.delivered() - self.dropped
    }

    pub fn gap_free(&self) -> bool {
        self.receptions
            .values()
            .all(|r| r.windows(2).all(|w| w[1].seqno == w[0].seqno + 1))
    }
}

struct World<'a> {
    cfg: &'a ScenarioConfig,
    engine: Engine<Message, Timer>,
    mags: Vec<MagState>,
    slma: SlmaState,
    aaa: AaaState,
    msns: Vec<MsnState>,
    next_seqno: Vec<u64>,
    emissions: Vec<Emission>,
    records: Vec<HandoverRecord>,
    /// Index into `records` of each group's latest handover.
    open: BTreeMap<GroupId, usize>,
    /// AP the group is heading for in its latest handover.
    targets: BTreeMap<GroupId, EntityId>,
    dropped: u64,
    unattributed_loss: u64,
    errors: Vec<(SimTime, ProtocolError)>,
}

/// Runs `cfg` to completion.
pub fn run(cfg: &ScenarioConfig) -> Result<SimOutcome, ScenarioError> {
    cfg.validate()?;
    let mut w = World::new(cfg);
    w.start()?;
    while let Some(ev) = w.engine.next_event(cfg.duration) {
        match ev.payload {
            Payload::Deliver { from, msg } => {
                w.engine.record(TraceKind::Deliver, ev.target, msg.detail());
                w.on_deliver(ev.target, from, msg)?;
            }
            Payload::Timer(t) => w.on_timer(ev.target, t)?,
        }
    }
    let end = w.engine.now();
    let receptions = w
        .msns
        .iter()
        .map(|m| (m.group, m.received.clone()))
        .collect();
    Ok(SimOutcome {
        trace: w.engine.into_trace(),
        records: w.records,
        emissions: w.emissions,
        receptions,
        dropped: w.dropped,
        unattributed_loss: w.unattributed_loss,
        errors: w.errors,
        bindings: w.slma.cache,
        end,
    })
}

fn smag_of(ap: EntityId) -> EntityId {
    EntityId::smag(ap.index)
}

fn ap_of(smag: EntityId) -> EntityId {
    EntityId::ap(smag.index)
}

impl<'a> World<'a> {
    fn new(cfg: &'a ScenarioConfig) -> Self {
        let d = &cfg.delays;
        let p = &cfg.plumbing;
        let aps = cfg.topology.aps.len() as u32;
        let mut engine = Engine::new();
        let mut link = |from, to, one_way_delay| {
            engine.add_link(Link {
                from,
                to,
                one_way_delay,
            })
        };
        let slma = EntityId::slma();
        link(EntityId::source(), slma, p.source_delay);
        link(slma, EntityId::aaa(), d.d_s_aaareq);
        link(EntityId::aaa(), slma, d.d_s_aaareply);
        for i in 0..aps {
            let (ap, smag) = (EntityId::ap(i), EntityId::smag(i));
            link(smag, ap, d.d_smag_ap);
            link(ap, smag, d.d_l2);
            link(smag, slma, d.d_s_pbu);
            link(slma, smag, d.d_s_pback);
            for j in (0..aps).filter(|&j| j != i) {
                link(smag, EntityId::smag(j), d.d_mag_mag);
            }
            for g in 0..cfg.groups {
                link(ap, EntityId::msn(g), p.radio_delay);
                link(EntityId::msn(g), ap, p.radio_delay);
            }
        }

        let mags = (0..aps)
            .map(|i| {
                let mut m = MagState::new(EntityId::smag(i), EntityId::ap(i), slma, cfg.protocol);
                m.mode = cfg.mode;
                m.buffer_cap = cfg.buffer_cap;
                for j in (0..aps).filter(|&j| cfg.topology.are_neighbors(i, j)) {
                    m.neighbor_table.insert(EntityId::ap(j), EntityId::smag(j));
                }
                for g in 0..cfg.groups {
                    let group = GroupId(g);
                    m.directory.insert(
                        group,
                        GroupProfile {
                            coordinator: EntityId::msn(g),
                            size: cfg.n,
                            hnp: ScenarioConfig::group_prefix(group),
                        },
                    );
                }
                m
            })
            .collect();
        let msns = (0..cfg.groups)
            .map(|g| MsnState::new(EntityId::msn(g), GroupId(g)))
            .collect();
        World {
            cfg,
            engine,
            mags,
            slma: SlmaState::new(cfg.aaa_colocated),
            aaa: AaaState::default(),
            msns,
            next_seqno: alloc::vec![0; cfg.groups as usize],
            emissions: Vec::new(),
            records: Vec::new(),
            open: BTreeMap::new(),
            targets: BTreeMap::new(),
            dropped: 0,
            unattributed_loss: 0,
            errors: Vec::new(),
        }
    }

    fn start(&mut self) -> Result<(), ScenarioError> {
        let t0 = SimTime::ZERO;
        let best = self.best_ap(t0);
        for g in 0..self.cfg.groups {
            self.engine.set_timer(
                t0,
                EntityId::msn(g),
                Timer::Attach {
                    group: GroupId(g),
                    ap: best,
                },
            )?;
        }
        let ra = self.cfg.policy.ra_interval;
        if ra <= self.cfg.duration {
            self.engine.set_timer(ra, EntityId::slma(), Timer::RaTick)?;
        }
        let tr = self.cfg.traffic;
        if tr.interval != SimTime::ZERO && tr.start < tr.stop {
            self.engine
                .set_timer(tr.start, EntityId::source(), Timer::TrafficEmit)?;
        }
        Ok(())
    }

    fn signal(&self, ap: EntityId, at: SimTime) -> f64 {
        let pos = self.cfg.timeline.position_at(at);
        let ap_pos = self
            .cfg
            .timeline
            .ap_positions
            .get(&ap)
            .copied()
            .unwrap_or_default();
        rssi(&self.cfg.signal, ap, ap_pos, pos, at)
    }

    /// Strongest AP at `at`; ties go to the lower index.
    fn best_ap(&self, at: SimTime) -> EntityId {
        let mut best = EntityId::ap(0);
        let mut best_sig = self.signal(best, at);
        for i in 1..self.cfg.topology.aps.len() as u32 {
            let s = self.signal(EntityId::ap(i), at);
            if s > best_sig {
                best = EntityId::ap(i);
                best_sig = s;
            }
        }
        best
    }

    fn record_for(&mut self, group: GroupId) -> Option<&mut HandoverRecord> {
        let idx = *self.open.get(&group)?;
        self.records.get_mut(idx)
    }

    fn apply(&mut self, actor: EntityId, actions: Vec<Action>) -> Result<(), ScenarioError> {
        for a in actions {
            match a {
                Action::Send { to, msg } => {
                    let tag = msg.tag();
                    if actor == msg.src && tag.is_handover_signaling() {
                        if let Some(r) = self.record_for(msg.group) {
                            *r.signaling.entry(tag).or_insert(0) += 1;
                        }
                    }
                    self.engine.send(actor, to, msg)?;
                }
                Action::Drop { msg, reason } => {
                    let detail = Detail {
                        note: Some(reason),
                        ..msg.detail()
                    };
                    self.engine.record(TraceKind::Drop, actor, detail);
                    if msg.tag() == MessageTag::DataPacket {
                        self.dropped += 1;
                        match self.record_for(msg.group) {
                            Some(r) => r.packets_lost += 1,
                            None => self.unattributed_loss += 1,
                        }
                    }
                }
                Action::Note { kind, detail } => {
                    if kind == TraceKind::BufferOp && detail.note == Some("flush") {
                        if let Some(r) = detail.group.and_then(|g| self.record_for(GroupId(g))) {
                            r.buffered_delivered += 1;
                        }
                    }
                    self.engine.record(kind, actor, detail);
                }
            }
        }
        Ok(())
    }

    fn protocol_result(
        &mut self,
        actor: EntityId,
        result: Result<Vec<Action>, ProtocolError>,
    ) -> Result<(), ScenarioError> {
        match result {
            Ok(actions) => self.apply(actor, actions),
            Err(e) => {
                self.engine.record(
                    TraceKind::StateChange,
                    actor,
                    Detail::tag("error").with_note(error_note(&e)),
                );
                self.errors.push((self.engine.now(), e));
                Ok(())
            }
        }
    }

    fn on_timer(&mut self, target: EntityId, timer: Timer) -> Result<(), ScenarioError> {
        let now = self.engine.now();
        match timer {
            Timer::TrafficEmit => {
                for g in 0..self.cfg.groups {
                    let group = GroupId(g);
                    let seqno = self.next_seqno[g as usize];
                    self.next_seqno[g as usize] += 1;
                    self.emissions.push(Emission {
                        group,
                        seqno,
                        at: now,
                    });
                    let msg = Message::new(
                        EntityId::source(),
                        EntityId::msn(g),
                        group,
                        Body::DataPacket {
                            seqno,
                            emitted_at: now,
                        },
                    );
                    self.engine
                        .send(EntityId::source(), EntityId::slma(), msg)?;
                }
                let next = now + self.cfg.traffic.interval;
                if next < self.cfg.traffic.stop && next <= self.cfg.duration {
                    self.engine.set_timer(next, target, Timer::TrafficEmit)?;
                }
            }
            Timer::RaTick => {
                for (i, site) in self.cfg.topology.aps.iter().enumerate() {
                    let ap = EntityId::ap(i as u32);
                    for g in 0..self.cfg.groups {
                        let ra = Message::new(
                            smag_of(ap),
                            EntityId::msn(g),
                            GroupId(g),
                            Body::Ra { hnp: site.prefix },
                        );
                        self.engine.send(ap, EntityId::msn(g), ra)?;
                    }
                }
                let next = now + self.cfg.policy.ra_interval;
                if next <= self.cfg.duration {
                    self.engine.set_timer(next, target, Timer::RaTick)?;
                }
            }
            Timer::L2Trigger {
                group,
                target_ap,
                detached,
            } => {
                let info = Message::new(
                    target,
                    smag_of(target),
                    group,
                    Body::L2HoInfo {
                        target_ap,
                        detached,
                    },
                );
                self.apply(target, alloc::vec![Action::send(smag_of(target), info)])?;
            }
            Timer::Attach { group, ap } => {
                let msn = &mut self.msns[group.0 as usize];
                let actions = msn.attach(ap, smag_of(ap));
                self.apply(target, actions)?;
            }
        }
        Ok(())
    }

    fn on_deliver(
        &mut self,
        target: EntityId,
        from: EntityId,
        msg: Message,
    ) -> Result<(), ScenarioError> {
        let now = self.engine.now();
        match target.role {
            Role::Slma => {
                let result = match msg.body {
                    Body::SPbu { .. } => self.slma.on_spbu(now, &msg),
                    Body::SAaaReply { .. } => self.slma.on_aaa_reply(now, &msg),
                    Body::DataPacket { .. } => Ok(self.slma.on_data(msg)),
                    _ => Ok(Vec::new()),
                };
                self.protocol_result(target, result)
            }
            Role::Aaa => {
                let actions = self.aaa.on_request(&msg);
                self.apply(target, actions)
            }
            Role::Smag => {
                let mag = &mut self.mags[target.index as usize];
                let result = match msg.body {
                    Body::L2HoInfo {
                        target_ap,
                        detached,
                    } => mag.on_l2_notification(now, msg.group, target_ap, detached),
                    Body::Hi { .. } => mag.on_hi(&msg),
                    Body::NdpReq => Ok(mag.on_ndp_req(now, &msg)),
                    Body::SPbAck { .. } => mag.on_spback(&msg),
                    Body::HAck => mag.on_hack(&msg),
                    Body::DataPacket { .. } => Ok(mag.on_data(msg)),
                    Body::DeReg => Ok(mag.on_dereg(&msg)),
                    _ => Ok(Vec::new()),
                };
                let failed_trigger = matches!(msg.body, Body::L2HoInfo { .. }) && result.is_err();
                self.protocol_result(target, result)?;
                // Without fast-handover preparation the MSN cannot wait for
                // L2_HOComplete and simply moves.
                let still_on_previous =
                    self.msns[msg.group.0 as usize].attached_ap == Some(ap_of(target));
                if failed_trigger && still_on_previous {
                    self.break_link(msg.group)?;
                }
                Ok(())
            }
            Role::Ap => self.relay(target, msg),
            Role::Msn => self.on_msn(target, from, msg),
            Role::BodySensor | Role::TrafficSource => Ok(()),
        }
    }

    /// APs forward MSN-bound traffic over the radio and uplink traffic to
    /// their SMAG; messages addressed to the AP itself end here.
    fn relay(&mut self, ap: EntityId, msg: Message) -> Result<(), ScenarioError> {
        match msg.dst.role {
            Role::Msn => self.engine.send(ap, msg.dst, msg)?,
            Role::Smag => self.engine.send(ap, smag_of(ap), msg)?,
            _ => {}
        }
        Ok(())
    }

    fn on_msn(
        &mut self,
        me: EntityId,
        from_ap: EntityId,
        msg: Message,
    ) -> Result<(), ScenarioError> {
        let now = self.engine.now();
        let group = msg.group;
        let g = group.0 as usize;
        match msg.body {
            Body::Ra { hnp } => self.on_ra(me, from_ap, hnp),
            Body::NdpAck => {
                let actions = self.msns[g].on_ndp_ack(from_ap);
                self.apply(me, actions)
            }
            Body::L2HoComplete => {
                if self.msns[g].handover_target.is_none() {
                    return Ok(());
                }
                let actions = self.msns[g].on_ho_complete(from_ap);
                let left = !actions.is_empty();
                self.apply(me, actions)?;
                if left {
                    self.after_detach(group, now)?;
                }
                Ok(())
            }
            Body::DataPacket { .. } => {
                let actions = self.msns[g].on_data(now, from_ap, msg);
                let accepted = actions.is_empty();
                self.apply(me, actions)?;
                let via_target = self.targets.get(&group) == Some(&from_ap);
                if accepted && via_target {
                    if let Some(r) = self.record_for(group) {
                        if r.t_first_rx_new.is_none() {
                            r.t_first_rx_new = Some(now);
                        }
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn on_ra(
        &mut self,
        me: EntityId,
        from_ap: EntityId,
        hnp: crate::protocol::NetworkPrefix,
    ) -> Result<(), ScenarioError> {
        let now = self.engine.now();
        let g = me.index as usize;
        let msn = &self.msns[g];
        let Some(current) = msn.attached_ap else {
            return Ok(());
        };
        if msn.handover_target.is_some() || !msn.is_connected_via(current) || from_ap == current {
            return Ok(());
        }
        let ra = Advertisement {
            ap: from_ap,
            smag: smag_of(from_ap),
            hnp,
            arrival: now,
        };
        let decision = connection_quality_decide(
            current,
            &ra,
            &self.cfg.policy,
            self.signal(current, now),
            self.signal(from_ap, now),
        );
        match decision {
            Decision::Handover(target) => self.begin_handover(GroupId(me.index), current, target),
            Decision::Ignore => {
                self.engine.record(
                    TraceKind::StateChange,
                    me,
                    Detail::tag("RA")
                        .with_note("unregistered_prefix")
                        .with_group(me.index),
                );
                Ok(())
            }
            Decision::Stay => Ok(()),
        }
    }

    fn begin_handover(
        &mut self,
        group: GroupId,
        p_ap: EntityId,
        n_ap: EntityId,
    ) -> Result<(), ScenarioError> {
        let now = self.engine.now();
        let cfg = self.cfg;
        let me = EntityId::msn(group.0);
        self.msns[group.0 as usize].handover_target = Some(n_ap);
        let timely = cfg.protocol == ProtocolMode::Fhpmipv6 && cfg.prediction == Prediction::Timely;
        self.records.push(HandoverRecord {
            group,
            protocol: cfg.protocol,
            mode: cfg.mode,
            timely,
            aaa_colocated: cfg.aaa_colocated,
            params: cfg.analytic_params(),
            t_decision: now,
            t_detach: now,
            t_first_rx_new: None,
            packets_lost: 0,
            buffered_delivered: 0,
            signaling: BTreeMap::new(),
            downlink_delay: cfg.downlink_delay(),
        });
        self.open.insert(group, self.records.len() - 1);
        self.targets.insert(group, n_ap);
        self.engine.record(
            TraceKind::StateChange,
            me,
            Detail {
                dst: Some(n_ap),
                ..Detail::tag("handover_decision").with_group(group.0)
            },
        );
        if cfg.protocol == ProtocolMode::Pmipv6 {
            return self.break_link(group);
        }
        let per_sensor_wait = match cfg.mode {
            SignalingMode::Aggregated => SimTime::ZERO,
            SignalingMode::PerSensor => SimTime(u64::from(cfg.n - 1) * cfg.delays.d_smag_ap.0),
        };
        let lag = if timely {
            SimTime::ZERO
        } else {
            cfg.delays.t_u_pred
        };
        self.engine.set_timer(
            now + lag + per_sensor_wait,
            p_ap,
            Timer::L2Trigger {
                group,
                target_ap: n_ap,
                detached: !timely,
            },
        )?;
        if !timely {
            self.break_link(group)?;
        }
        Ok(())
    }

    /// MSN loses its current link now and heads for its target AP.
    fn break_link(&mut self, group: GroupId) -> Result<(), ScenarioError> {
        let now = self.engine.now();
        let me = EntityId::msn(group.0);
        if self.msns[group.0 as usize].attached_ap.is_none() {
            return Ok(());
        }
        let actions = self.msns[group.0 as usize].detach();
        self.apply(me, actions)?;
        self.after_detach(group, now)
    }

    fn after_detach(&mut self, group: GroupId, now: SimTime) -> Result<(), ScenarioError> {
        if let Some(r) = self.record_for(group) {
            r.t_detach = now;
        }
        let Some(target) = self.msns[group.0 as usize].handover_target else {
            return Ok(());
        };
        self.engine.set_timer(
            now + self.cfg.plumbing.attach_gap,
            EntityId::msn(group.0),
            Timer::Attach { group, ap: target },
        )?;
        Ok(())
    }
}

fn error_note(e: &ProtocolError) -> &'static str {
    match e {
        ProtocolError::UnknownNeighborAp(_) => "unknown_neighbor_ap",
        ProtocolError::DuplicateHandover(_) => "duplicate_handover",
        ProtocolError::NotServing(_) => "not_serving",
        ProtocolError::AuthFailed(_) => "auth_failed",
        ProtocolError::MalformedPrefix(_) => "malformed_prefix",
        ProtocolError::Unexpected { .. } => drop_reason::STALE_CONTROL,
    }
}
