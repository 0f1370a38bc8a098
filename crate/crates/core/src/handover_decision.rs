//! Signal model, patient mobility and the connection-quality comparison the
//! MSN runs on each router advertisement.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::protocol::NetworkPrefix;
use crate::sim_core::{EntityId, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance(self, other: Position) -> f64 {
        libm::hypot(self.x - other.x, self.y - other.y)
    }
}

/// Log-distance path loss parameters of one AP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    pub tx_power_dbm: f64,
    pub path_loss_exponent: f64,
    pub reference_distance_m: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            tx_power_dbm: 0.0,
            path_loss_exponent: 2.0,
            reference_distance_m: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Noise {
    #[default]
    Off,
    Seeded {
        seed: u64,
        stddev_db: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SignalModel {
    pub default_params: RadioParams,
    pub per_ap: BTreeMap<EntityId, RadioParams>,
    pub noise: Noise,
}

impl SignalModel {
    pub fn params(&self, ap: EntityId) -> RadioParams {
        self.per_ap.get(&ap).copied().unwrap_or(self.default_params)
    }
}

/// Received signal strength in dBm of `ap` at `ap_pos`, measured at `pos`
/// at time `at`. Noise samples are keyed by (seed, ap, at) so they do not
/// depend on how many other samples were drawn.
pub fn rssi(
    model: &SignalModel,
    ap: EntityId,
    ap_pos: Position,
    pos: Position,
    at: SimTime,
) -> f64 {
    let p = model.params(ap);
    let d0 = p.reference_distance_m;
    let d = pos.distance(ap_pos).max(d0);
    let clean = p.tx_power_dbm - 10.0 * p.path_loss_exponent * libm::log10(d / d0);
    match model.noise {
        Noise::Off => clean,
        Noise::Seeded { seed, stddev_db } => clean + noise_sample(seed, ap, at, stddev_db),
    }
}

fn noise_sample(seed: u64, ap: EntityId, at: SimTime, stddev_db: f64) -> f64 {
    if stddev_db <= 0.0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((ap.role as u64) << 32) | u64::from(ap.index));
    rng.set_word_pos(u128::from(at.as_micros()) * 16);
    // Normal::new only fails for non-finite or negative stddev.
    match Normal::new(0.0, stddev_db) {
        Ok(n) => n.sample(&mut rng),
        Err(_) => 0.0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HandoverPolicy {
    /// Required signal advantage in dB; must be exceeded, not met.
    pub threshold_x: f64,
    pub ra_interval: SimTime,
    pub registered_prefixes: BTreeSet<NetworkPrefix>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MobilityTimeline {
    /// Strictly increasing in time.
    pub waypoints: Vec<(SimTime, Position)>,
    pub ap_positions: BTreeMap<EntityId, Position>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimelineError;

impl MobilityTimeline {
    pub fn new(
        waypoints: Vec<(SimTime, Position)>,
        ap_positions: BTreeMap<EntityId, Position>,
    ) -> Result<Self, TimelineError> {
        if waypoints.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(TimelineError);
        }
        Ok(MobilityTimeline {
            waypoints,
            ap_positions,
        })
    }

    /// Piecewise-linear position; held constant before the first and after
    /// the last waypoint.
    pub fn position_at(&self, t: SimTime) -> Position {
        let Some(&(t0, p0)) = self.waypoints.first() else {
            return Position::default();
        };
        if t <= t0 {
            return p0;
        }
        for w in self.waypoints.windows(2) {
            let ((ta, pa), (tb, pb)) = (w[0], w[1]);
            if t <= tb {
                let f = (t - ta).as_micros() as f64 / (tb - ta).as_micros() as f64;
                return Position::new(pa.x + (pb.x - pa.x) * f, pa.y + (pb.y - pa.y) * f);
            }
        }
        self.waypoints[self.waypoints.len() - 1].1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Stay,
    Handover(EntityId),
    Ignore,
}

/// A router advertisement as heard by the MSN.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Advertisement {
    pub ap: EntityId,
    pub smag: EntityId,
    pub hnp: NetworkPrefix,
    pub arrival: SimTime,
}

pub fn connection_quality_decide(
    current_ap: EntityId,
    ra: &Advertisement,
    policy: &HandoverPolicy,
    sig_current: f64,
    sig_candidate: f64,
) -> Decision {
    if !policy.registered_prefixes.contains(&ra.hnp) {
        return Decision::Ignore;
    }
    if ra.ap != current_ap && sig_candidate - sig_current > policy.threshold_x {
        Decision::Handover(ra.ap)
    } else {
        Decision::Stay
    }
}

/// First qualifying advertisement in (arrival, AP id) order, or `None` to
/// keep the current gateway. `signal` maps an AP to its current RSSI.
pub fn scan_next(
    current_ap: EntityId,
    candidates: &[Advertisement],
    policy: &HandoverPolicy,
    mut signal: impl FnMut(EntityId) -> f64,
) -> Option<Advertisement> {
    let mut order: Vec<&Advertisement> = candidates.iter().collect();
    order.sort_by_key(|ra| (ra.arrival, ra.ap));
    let current = signal(current_ap);
    order.into_iter().copied().find(|ra| {
        matches!(
            connection_quality_decide(current_ap, ra, policy, current, signal(ra.ap)),
            Decision::Handover(_)
        )
    })
}
