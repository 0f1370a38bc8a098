use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::net::Ipv6Addr;

use thiserror::Error;

use crate::analytics::{AnalyticParams, TrafficPattern};
use crate::handover_decision::{HandoverPolicy, MobilityTimeline, Position, SignalModel};
use crate::protocol::{BufferCap, GroupId, NetworkPrefix, ProtocolMode, SignalingMode};
use crate::sim_core::{EntityId, SimTime};

/// Whether the L2 handover notification reaches the previous gateway
/// before the MSN loses its link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Prediction {
    /// Make-before-break: the MSN leaves only when told to.
    #[default]
    Timely,
    /// The MSN breaks at the decision; the notification lags by `t_u_pred`.
    Untimely,
}

impl Prediction {
    pub const fn name(self) -> &'static str {
        match self {
            Prediction::Timely => "timely",
            Prediction::Untimely => "untimely",
        }
    }
}

impl fmt::Display for Prediction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Delays that have no symbol in the analytical model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Plumbing {
    /// AP to MSN and MSN to AP radio hop.
    pub radio_delay: SimTime,
    /// Traffic source to SLMA.
    pub source_delay: SimTime,
    /// Time the MSN needs to move from one AP to the next.
    pub attach_gap: SimTime,
}

impl Default for Plumbing {
    fn default() -> Self {
        Plumbing {
            radio_delay: SimTime::ZERO,
            source_delay: SimTime::ZERO,
            attach_gap: SimTime::from_millis(1),
        }
    }
}

/// One access point and the SMAG behind it (AP i belongs to SMAG i).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ApSite {
    /// Prefix the SMAG advertises in its RAs.
    pub prefix: NetworkPrefix,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Topology {
    pub aps: Vec<ApSite>,
    /// Undirected neighbor pairs by AP index; `None` means every AP
    /// neighbors every other.
    pub neighbors: Option<Vec<(u32, u32)>>,
}

impl Topology {
    pub fn are_neighbors(&self, a: u32, b: u32) -> bool {
        match &self.neighbors {
            None => a != b,
            Some(pairs) => pairs
                .iter()
                .any(|&(x, y)| (x, y) == (a, b) || (y, x) == (a, b)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub protocol: ProtocolMode,
    pub mode: SignalingMode,
    /// Sensors per group.
    pub n: u32,
    pub groups: u32,
    pub aaa_colocated: bool,
    pub prediction: Prediction,
    /// Compare measured latency with the oracle as well as loss.
    pub check_latency: bool,
    pub buffer_cap: BufferCap,
    pub seed: u64,
    pub duration: SimTime,
    /// `delays.n` mirrors `n`.
    pub delays: AnalyticParams,
    pub plumbing: Plumbing,
    pub traffic: TrafficPattern,
    pub topology: Topology,
    pub policy: HandoverPolicy,
    pub signal: SignalModel,
    pub timeline: MobilityTimeline,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{field}: {reason}")]
pub struct InvalidScenario {
    pub field: &'static str,
    pub reason: &'static str,
}

fn invalid(field: &'static str, reason: &'static str) -> InvalidScenario {
    InvalidScenario { field, reason }
}

impl ScenarioConfig {
    /// Two cells 100 m apart; the patient walks from the first to the
    /// second and back within a minute, so the group hands over twice.
    pub fn corridor() -> Self {
        let ms = SimTime::from_millis;
        let prefixes: [NetworkPrefix; 2] = [
            NetworkPrefix::new(Ipv6Addr::new(0x2001, 0xdb8, 0xa, 0, 0, 0, 0, 0), 64),
            NetworkPrefix::new(Ipv6Addr::new(0x2001, 0xdb8, 0xb, 0, 0, 0, 0, 0), 64),
        ];
        let ap_positions = [
            (EntityId::ap(0), Position::new(0.0, 0.0)),
            (EntityId::ap(1), Position::new(100.0, 0.0)),
        ]
        .into_iter()
        .collect();
        ScenarioConfig {
            name: String::from("corridor"),
            protocol: ProtocolMode::Fhpmipv6,
            mode: SignalingMode::Aggregated,
            n: 3,
            groups: 1,
            aaa_colocated: false,
            prediction: Prediction::Timely,
            check_latency: false,
            buffer_cap: BufferCap::Unbounded,
            seed: 1,
            duration: ms(60_000),
            delays: AnalyticParams {
                n: 3,
                d_smag_ap: ms(2),
                d_mag_mag: ms(5),
                t_u_pred: ms(10),
                d_s_pbu: ms(4),
                d_s_pback: ms(4),
                d_s_aaareq: ms(3),
                d_s_aaareply: ms(3),
                d_l2: ms(6),
                d_dhcp: SimTime::ZERO,
            },
            plumbing: Plumbing {
                attach_gap: ms(50),
                ..Plumbing::default()
            },
            traffic: TrafficPattern {
                interval: ms(10),
                start: ms(1_000),
                stop: ms(60_000),
            },
            topology: Topology {
                aps: prefixes.iter().map(|&prefix| ApSite { prefix }).collect(),
                neighbors: None,
            },
            policy: HandoverPolicy {
                threshold_x: 3.0,
                ra_interval: ms(100),
                registered_prefixes: prefixes.into_iter().collect(),
            },
            signal: SignalModel::default(),
            timeline: MobilityTimeline {
                waypoints: alloc::vec![
                    (SimTime::ZERO, Position::new(10.0, 0.0)),
                    (ms(25_000), Position::new(90.0, 0.0)),
                    (ms(50_000), Position::new(10.0, 0.0)),
                ],
                ap_positions,
            },
        }
    }

    /// Home network prefix of a group: 2001:db8:100:<g>::/64.
    pub fn group_prefix(group: GroupId) -> NetworkPrefix {
        NetworkPrefix::new(
            Ipv6Addr::new(0x2001, 0xdb8, 0x100, group.0 as u16, 0, 0, 0, 0),
            64,
        )
    }

    /// Source to MSN through a gateway.
    pub fn downlink_delay(&self) -> SimTime {
        self.plumbing.source_delay
            + self.delays.d_s_pback
            + self.delays.d_smag_ap
            + self.plumbing.radio_delay
    }

    pub fn analytic_params(&self) -> AnalyticParams {
        AnalyticParams {
            n: self.n,
            ..self.delays
        }
    }

    pub fn validate(&self) -> Result<(), InvalidScenario> {
        if self.n == 0 {
            return Err(invalid("n", "n must be at least 1"));
        }
        if self.delays.n != self.n {
            return Err(invalid("n", "delay parameters disagree with n"));
        }
        if self.groups == 0 || self.groups > u32::from(u16::MAX) {
            return Err(invalid("groups", "need between 1 and 65535 groups"));
        }
        if self.topology.aps.is_empty() {
            return Err(invalid("aps", "at least one AP is required"));
        }
        if let Some(pairs) = &self.topology.neighbors {
            let count = self.topology.aps.len() as u32;
            if pairs
                .iter()
                .any(|&(a, b)| a >= count || b >= count || a == b)
            {
                return Err(invalid(
                    "neighbors",
                    "neighbor pair names an unknown AP or itself",
                ));
            }
        }
        let mut seen = BTreeSet::new();
        for (i, site) in self.topology.aps.iter().enumerate() {
            if !self
                .timeline
                .ap_positions
                .contains_key(&EntityId::ap(i as u32))
            {
                return Err(invalid("aps", "every AP needs a position"));
            }
            if !site.prefix.is_well_formed() {
                return Err(invalid("aps", "malformed AP prefix"));
            }
            if !seen.insert(site.prefix) {
                return Err(invalid("aps", "AP prefixes must be distinct"));
            }
        }
        if self.policy.ra_interval == SimTime::ZERO {
            return Err(invalid("ra_interval", "must be positive"));
        }
        if self.policy.threshold_x.is_nan() || self.policy.threshold_x < 0.0 {
            return Err(invalid("threshold_x", "must be a non-negative number"));
        }
        if self.timeline.waypoints.is_empty() {
            return Err(invalid("waypoints", "at least one waypoint is required"));
        }
        if self.timeline.waypoints.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(invalid(
                "waypoints",
                "waypoint times must strictly increase",
            ));
        }
        if self.traffic.interval != SimTime::ZERO && self.traffic.stop < self.traffic.start {
            return Err(invalid("traffic", "stop precedes start"));
        }
        if self.duration == SimTime::ZERO {
            return Err(invalid("duration", "must be positive"));
        }
        Ok(())
    }
}
