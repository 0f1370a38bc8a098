//! INI scenario files.
//!
//! ```text
//! [scenario]
//! protocol = fhpmipv6
//! n = 3
//! [topology]
//! ap0 = 0,0 2001:db8:a::/64
//! ap1 = 100,0 2001:db8:b::/64
//! [policy]
//! threshold_x = 3
//! ra_interval = 100ms
//! [timeline]
//! waypoint = 0s 10,0
//! waypoint = 25s 90,0
//! ```
//!
//! Durations take a `us`, `ms` or `s` suffix. Keys not listed here are
//! rejected, so typos surface as errors instead of silently falling back to
//! defaults.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use fhpmip_core::analytics::{AnalyticParams, TrafficPattern};
use fhpmip_core::handover_decision::{
    HandoverPolicy, MobilityTimeline, Noise, Position, RadioParams, SignalModel,
};
use fhpmip_core::protocol::{BufferCap, NetworkPrefix, ProtocolMode, SignalingMode};
use fhpmip_core::scenario::{ApSite, Plumbing, Prediction, ScenarioConfig, Topology};
use fhpmip_core::sim_core::{EntityId, Role, SimTime};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: {key}: {reason}")]
    Parse {
        line: usize,
        key: String,
        reason: String,
    },
    #[error("invalid scenario: {0}")]
    Validation(String),
}

fn parse_err(line: usize, key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Parse {
        line,
        key: key.to_string(),
        reason: reason.into(),
    }
}

/// Parses `250us`, `10ms`, `1.5s` or `0` into whole microseconds.
pub fn parse_duration(s: &str) -> Result<SimTime, String> {
    let s = s.trim();
    if s == "0" {
        return Ok(SimTime::ZERO);
    }
    let (num, scale) = if let Some(n) = s.strip_suffix("us") {
        (n, 1u64)
    } else if let Some(n) = s.strip_suffix("ms") {
        (n, 1_000)
    } else if let Some(n) = s.strip_suffix('s') {
        (n, 1_000_000)
    } else {
        return Err(format!("`{s}` needs a us, ms or s suffix"));
    };
    let bad = || format!("`{s}` is not a duration");
    let (whole, frac) = num.split_once('.').unwrap_or((num, ""));
    if whole.is_empty() || !whole.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    if !frac.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let whole: u64 = whole.parse().map_err(|_| bad())?;
    let mut us = whole.checked_mul(scale).ok_or_else(bad)?;
    let mut place = scale;
    for digit in frac.bytes() {
        if place % 10 != 0 {
            return Err(format!("`{s}` is finer than one microsecond"));
        }
        place /= 10;
        us = us
            .checked_add(u64::from(digit - b'0') * place)
            .ok_or_else(bad)?;
    }
    Ok(SimTime(us))
}

/// Shortest exact rendering using the largest whole unit.
pub fn format_duration(t: SimTime) -> String {
    let us = t.as_micros();
    if us.is_multiple_of(1_000_000) {
        format!("{}s", us / 1_000_000)
    } else if us.is_multiple_of(1_000) {
        format!("{}ms", us / 1_000)
    } else {
        format!("{us}us")
    }
}

struct Entry {
    line: usize,
    key: String,
    value: String,
}

/// One `[section]` with a record of which keys were consumed.
struct Section {
    name: &'static str,
    entries: Vec<Entry>,
    used: BTreeSet<usize>,
}

const SECTIONS: [&str; 6] = [
    "scenario", "delays", "topology", "policy", "traffic", "timeline",
];

fn lex(text: &str) -> Result<BTreeMap<&'static str, Section>, ConfigError> {
    let mut sections: BTreeMap<&'static str, Section> = SECTIONS
        .iter()
        .map(|&name| {
            (
                name,
                Section {
                    name,
                    entries: Vec::new(),
                    used: BTreeSet::new(),
                },
            )
        })
        .collect();
    let mut current: Option<&'static str> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| parse_err(line, content, "unterminated section header"))?
                .trim();
            let known = SECTIONS
                .iter()
                .find(|&&s| s == name)
                .ok_or_else(|| parse_err(line, name, "unknown section"))?;
            current = Some(known);
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| parse_err(line, content, "expected `key = value`"))?;
        let key = key.trim();
        let section = current.ok_or_else(|| parse_err(line, key, "key outside any section"))?;
        let sec = sections.get_mut(section).expect("known section");
        if key != "waypoint" && sec.entries.iter().any(|e| e.key == key) {
            return Err(parse_err(line, key, "duplicate key"));
        }
        sec.entries.push(Entry {
            line,
            key: key.to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(sections)
}

impl Section {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        let idx = self.entries.iter().position(|e| e.key == key)?;
        self.used.insert(idx);
        let e = &self.entries[idx];
        Some((e.line, e.value.clone()))
    }

    fn take_all(&mut self, key: &str) -> Vec<(usize, String)> {
        let mut out = Vec::new();
        for (idx, e) in self.entries.iter().enumerate() {
            if e.key == key {
                self.used.insert(idx);
                out.push((e.line, e.value.clone()));
            }
        }
        out
    }

    /// Keys of the form `<prefix><rest>` that are still unconsumed.
    fn take_prefixed(&mut self, prefix: &str) -> Vec<(usize, String, String)> {
        let mut out = Vec::new();
        for (idx, e) in self.entries.iter().enumerate() {
            if let Some(rest) = e.key.strip_prefix(prefix) {
                if !self.used.contains(&idx) {
                    self.used.insert(idx);
                    out.push((e.line, rest.to_string(), e.value.clone()));
                }
            }
        }
        out
    }

    fn get<T>(
        &mut self,
        key: &str,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<Option<T>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => parse(&v).map(Some).map_err(|r| parse_err(line, key, r)),
        }
    }

    fn require<T>(
        &mut self,
        key: &str,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<T, ConfigError> {
        let name = self.name;
        self.get(key, parse)?
            .ok_or_else(|| parse_err(0, key, format!("missing from [{name}]")))
    }

    fn finish(&self) -> Result<(), ConfigError> {
        match (0..self.entries.len()).find(|i| !self.used.contains(i)) {
            None => Ok(()),
            Some(i) => {
                let e = &self.entries[i];
                Err(parse_err(
                    e.line,
                    &e.key,
                    format!("unknown key in [{}]", self.name),
                ))
            }
        }
    }
}

fn parse_num<T: std::str::FromStr>(s: &str) -> Result<T, String> {
    s.parse()
        .map_err(|_| format!("`{s}` is not a valid number"))
}

fn parse_real(s: &str) -> Result<f64, String> {
    let v: f64 = parse_num(s)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("`{s}` is not a boolean")),
    }
}

fn parse_prefix(s: &str) -> Result<NetworkPrefix, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_position(s: &str) -> Result<Position, String> {
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| format!("`{s}` should be `x,y` in meters"))?;
    Ok(Position::new(parse_real(x.trim())?, parse_real(y.trim())?))
}

fn parse_protocol(s: &str) -> Result<ProtocolMode, String> {
    match s {
        "pmipv6" => Ok(ProtocolMode::Pmipv6),
        "fhpmipv6" => Ok(ProtocolMode::Fhpmipv6),
        _ => Err(format!("`{s}` is not pmipv6 or fhpmipv6")),
    }
}

fn parse_mode(s: &str) -> Result<SignalingMode, String> {
    match s {
        "aggregated" => Ok(SignalingMode::Aggregated),
        "per_sensor" => Ok(SignalingMode::PerSensor),
        _ => Err(format!("`{s}` is not aggregated or per_sensor")),
    }
}

fn parse_prediction(s: &str) -> Result<Prediction, String> {
    match s {
        "timely" => Ok(Prediction::Timely),
        "untimely" => Ok(Prediction::Untimely),
        _ => Err(format!("`{s}` is not timely or untimely")),
    }
}

fn parse_aaa(s: &str) -> Result<bool, String> {
    match s {
        "colocated" => Ok(true),
        "external" => Ok(false),
        _ => Err(format!("`{s}` is not colocated or external")),
    }
}

fn parse_buffer_cap(s: &str) -> Result<BufferCap, String> {
    if s == "unbounded" {
        return Ok(BufferCap::Unbounded);
    }
    parse_num(s).map(BufferCap::Packets)
}

fn ap_index(rest: &str) -> Option<u32> {
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    rest.parse().ok()
}

/// Parses and validates a scenario file.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut s = lex(text)?;
    let mut sec = |name: &str| s.remove(name).expect("all sections exist");
    let (mut sc, mut dl, mut tp, mut pl, mut tr, mut tl) = (
        sec("scenario"),
        sec("delays"),
        sec("topology"),
        sec("policy"),
        sec("traffic"),
        sec("timeline"),
    );

    let name = sc
        .get("name", |v| Ok(v.to_string()))?
        .unwrap_or_else(|| "scenario".into());
    let protocol = sc.require("protocol", parse_protocol)?;
    let mode = sc
        .get("mode", parse_mode)?
        .unwrap_or(SignalingMode::Aggregated);
    let n = sc.require("n", parse_num::<u32>)?;
    let groups = sc.get("groups", parse_num::<u32>)?.unwrap_or(1);
    let aaa_colocated = sc.get("aaa", parse_aaa)?.unwrap_or(true);
    let prediction = sc.get("prediction", parse_prediction)?.unwrap_or_default();
    let check_latency = sc.get("check_latency", parse_bool)?.unwrap_or(false);
    let buffer_cap = sc.get("buffer_cap", parse_buffer_cap)?.unwrap_or_default();
    let seed = sc.get("seed", parse_num::<u64>)?.unwrap_or(0);
    let duration = sc
        .get("duration", parse_duration)?
        .unwrap_or(SimTime::from_millis(60_000));
    sc.finish()?;

    let mut d = |key| {
        dl.get(key, parse_duration)
            .map(|v| v.unwrap_or(SimTime::ZERO))
    };
    let delays = AnalyticParams {
        n,
        d_smag_ap: d("d_smag_ap")?,
        d_mag_mag: d("d_mag_mag")?,
        t_u_pred: d("t_u_pred")?,
        d_s_pbu: d("d_s_pbu")?,
        d_s_pback: d("d_s_pback")?,
        d_s_aaareq: d("d_s_aaareq")?,
        d_s_aaareply: d("d_s_aaareply")?,
        d_l2: d("d_l2")?,
        d_dhcp: d("d_dhcp")?,
    };
    let radio_delay = d("radio_delay")?;
    let source_delay = d("source_delay")?;
    dl.finish()?;

    // [topology]
    let neighbors = tp.get("neighbors", parse_neighbors)?;
    let links = tp.take_prefixed("link.");
    let mut sites: BTreeMap<u32, (usize, Position, NetworkPrefix)> = BTreeMap::new();
    for (line, rest, value) in tp.take_prefixed("ap") {
        let key = format!("ap{rest}");
        let idx =
            ap_index(&rest).ok_or_else(|| parse_err(line, &key, "unknown key in [topology]"))?;
        let (pos, prefix) = value
            .split_once(char::is_whitespace)
            .ok_or_else(|| parse_err(line, &key, "expected `x,y prefix`"))?;
        let pos = parse_position(pos).map_err(|r| parse_err(line, &key, r))?;
        let prefix = parse_prefix(prefix.trim()).map_err(|r| parse_err(line, &key, r))?;
        sites.insert(idx, (line, pos, prefix));
    }
    tp.finish()?;
    if sites.keys().copied().ne(0..sites.len() as u32) {
        return Err(ConfigError::Validation(
            "AP indices must run contiguously from ap0".into(),
        ));
    }
    let aps: Vec<ApSite> = sites
        .values()
        .map(|&(_, _, prefix)| ApSite { prefix })
        .collect();
    let ap_positions: BTreeMap<EntityId, Position> = sites
        .iter()
        .map(|(&i, &(_, pos, _))| (EntityId::ap(i), pos))
        .collect();

    // [policy]
    let threshold_x = pl.require("threshold_x", parse_real)?;
    let ra_interval = pl.require("ra_interval", parse_duration)?;
    let registered = pl.get("registered", |v| {
        v.split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| parse_prefix(p.trim()))
            .collect::<Result<BTreeSet<_>, _>>()
    })?;
    let mut default_params = RadioParams::default();
    if let Some(v) = pl.get("tx_power_dbm", parse_real)? {
        default_params.tx_power_dbm = v;
    }
    if let Some(v) = pl.get("path_loss_exponent", parse_real)? {
        default_params.path_loss_exponent = v;
    }
    if let Some(v) = pl.get("reference_distance_m", parse_real)? {
        default_params.reference_distance_m = v;
    }
    let stddev = pl.get("noise_stddev_db", parse_real)?.unwrap_or(0.0);
    let mut per_ap: BTreeMap<EntityId, RadioParams> = BTreeMap::new();
    for (line, rest, value) in pl.take_prefixed("ap") {
        let key = format!("ap{rest}");
        let (idx, field) = rest
            .split_once('.')
            .and_then(|(i, f)| Some((ap_index(i)?, f)))
            .ok_or_else(|| parse_err(line, &key, "unknown key in [policy]"))?;
        let v = parse_real(&value).map_err(|r| parse_err(line, &key, r))?;
        let entry = per_ap.entry(EntityId::ap(idx)).or_insert(default_params);
        match field {
            "tx_power_dbm" => entry.tx_power_dbm = v,
            "path_loss_exponent" => entry.path_loss_exponent = v,
            "reference_distance_m" => entry.reference_distance_m = v,
            _ => return Err(parse_err(line, &key, "unknown radio parameter")),
        }
    }
    pl.finish()?;
    if let Some(bad) = per_ap.keys().find(|ap| !ap_positions.contains_key(ap)) {
        return Err(ConfigError::Validation(format!(
            "[policy] radio parameters for {bad}, which [topology] does not define"
        )));
    }
    let noise = if stddev > 0.0 {
        Noise::Seeded {
            seed,
            stddev_db: stddev,
        }
    } else {
        Noise::Off
    };

    // [traffic]
    let interval = tr
        .get("interval", parse_duration)?
        .unwrap_or(SimTime::from_millis(10));
    let start = tr
        .get("start", parse_duration)?
        .unwrap_or(SimTime::from_millis(1_000));
    let stop = tr.get("stop", parse_duration)?.unwrap_or(duration);
    tr.finish()?;

    // [timeline]
    let attach_gap = tl
        .get("attach_gap", parse_duration)?
        .unwrap_or(Plumbing::default().attach_gap);
    let mut waypoints = Vec::new();
    for (line, value) in tl.take_all("waypoint") {
        let (t, pos) = value
            .split_once(char::is_whitespace)
            .ok_or_else(|| parse_err(line, "waypoint", "expected `time x,y`"))?;
        let t = parse_duration(t).map_err(|r| parse_err(line, "waypoint", r))?;
        let pos = parse_position(pos.trim()).map_err(|r| parse_err(line, "waypoint", r))?;
        waypoints.push((t, pos));
    }
    tl.finish()?;

    let registered_prefixes = registered.unwrap_or_else(|| aps.iter().map(|a| a.prefix).collect());
    let cfg = ScenarioConfig {
        name,
        protocol,
        mode,
        n,
        groups,
        aaa_colocated,
        prediction,
        check_latency,
        buffer_cap,
        seed,
        duration,
        delays,
        plumbing: Plumbing {
            radio_delay,
            source_delay,
            attach_gap,
        },
        traffic: TrafficPattern {
            interval,
            start,
            stop,
        },
        topology: Topology { aps, neighbors },
        policy: HandoverPolicy {
            threshold_x,
            ra_interval,
            registered_prefixes,
        },
        signal: SignalModel {
            default_params,
            per_ap,
            noise,
        },
        timeline: MobilityTimeline {
            waypoints,
            ap_positions,
        },
    };
    cfg.validate()
        .map_err(|e| ConfigError::Validation(e.to_string()))?;
    for (line, rest, value) in links {
        check_link(&cfg, line, &rest, &value)?;
    }
    Ok(cfg)
}

fn parse_neighbors(s: &str) -> Result<Vec<(u32, u32)>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|pair| {
            let (a, b) = pair
                .trim()
                .split_once('-')
                .ok_or_else(|| format!("`{pair}` should be `i-j`"))?;
            Ok((parse_num(a.trim())?, parse_num(b.trim())?))
        })
        .collect()
}

/// A `link.FROM-TO` key restates the delay of one topology link; it must
/// name defined entities and agree with the matching `[delays]` key.
fn check_link(
    cfg: &ScenarioConfig,
    line: usize,
    rest: &str,
    value: &str,
) -> Result<(), ConfigError> {
    let key = format!("link.{rest}");
    let (from, to) = rest
        .split_once('-')
        .ok_or_else(|| parse_err(line, &key, "expected link.FROM-TO"))?;
    let from: EntityId = from
        .parse()
        .map_err(|e| parse_err(line, &key, format!("{e}")))?;
    let to: EntityId = to
        .parse()
        .map_err(|e| parse_err(line, &key, format!("{e}")))?;
    let delay = parse_duration(value).map_err(|r| parse_err(line, &key, r))?;
    for id in [from, to] {
        if !is_defined(cfg, id) {
            return Err(ConfigError::Validation(format!(
                "[topology] {key} references {id}, which is not defined"
            )));
        }
    }
    let d = &cfg.delays;
    let p = &cfg.plumbing;
    use Role::*;
    let (expected_key, expected) = match (from.role, to.role) {
        (Smag, Ap) if from.index == to.index => ("[delays] d_smag_ap", d.d_smag_ap),
        (Ap, Smag) if from.index == to.index => ("[delays] d_l2", d.d_l2),
        (Smag, Smag) if from.index != to.index => ("[delays] d_mag_mag", d.d_mag_mag),
        (Smag, Slma) => ("[delays] d_s_pbu", d.d_s_pbu),
        (Slma, Smag) => ("[delays] d_s_pback", d.d_s_pback),
        (Slma, Aaa) => ("[delays] d_s_aaareq", d.d_s_aaareq),
        (Aaa, Slma) => ("[delays] d_s_aaareply", d.d_s_aaareply),
        (Ap, Msn) | (Msn, Ap) => ("[delays] radio_delay", p.radio_delay),
        (TrafficSource, Slma) => ("[delays] source_delay", p.source_delay),
        _ => {
            return Err(ConfigError::Validation(format!(
                "[topology] {key}: there is no link from {from} to {to}"
            )))
        }
    };
    if delay != expected {
        return Err(ConfigError::Validation(format!(
            "[topology] {key} = {} disagrees with {expected_key} = {}",
            format_duration(delay),
            format_duration(expected)
        )));
    }
    Ok(())
}

fn is_defined(cfg: &ScenarioConfig, id: EntityId) -> bool {
    let aps = cfg.topology.aps.len() as u32;
    match id.role {
        Role::Ap | Role::Smag => id.index < aps,
        Role::Msn => id.index < cfg.groups,
        Role::Slma | Role::Aaa | Role::TrafficSource => id.index == 0,
        Role::BodySensor => false,
    }
}

/// Replaces the seed everywhere it is used.
pub fn set_seed(cfg: &mut ScenarioConfig, seed: u64) {
    cfg.seed = seed;
    if let Noise::Seeded { seed: s, .. } = &mut cfg.signal.noise {
        *s = seed;
    }
}

fn pos(p: Position) -> String {
    format!("{},{}", p.x, p.y)
}

/// Writes every key explicitly, so the output parses back to an equal config.
pub fn serialize_config(cfg: &ScenarioConfig) -> String {
    let mut o = String::new();
    let d = format_duration;
    let _ = writeln!(o, "[scenario]");
    let _ = writeln!(o, "name = {}", cfg.name);
    let _ = writeln!(o, "protocol = {}", cfg.protocol);
    let _ = writeln!(o, "mode = {}", cfg.mode);
    let _ = writeln!(o, "n = {}", cfg.n);
    let _ = writeln!(o, "groups = {}", cfg.groups);
    let aaa = if cfg.aaa_colocated {
        "colocated"
    } else {
        "external"
    };
    let _ = writeln!(o, "aaa = {aaa}");
    let _ = writeln!(o, "prediction = {}", cfg.prediction.name());
    let _ = writeln!(o, "check_latency = {}", cfg.check_latency);
    match cfg.buffer_cap {
        BufferCap::Unbounded => {
            let _ = writeln!(o, "buffer_cap = unbounded");
        }
        BufferCap::Packets(k) => {
            let _ = writeln!(o, "buffer_cap = {k}");
        }
    }
    let _ = writeln!(o, "seed = {}", cfg.seed);
    let _ = writeln!(o, "duration = {}", d(cfg.duration));

    let p = &cfg.delays;
    let _ = writeln!(o, "\n[delays]");
    for (k, v) in [
        ("d_smag_ap", p.d_smag_ap),
        ("d_mag_mag", p.d_mag_mag),
        ("t_u_pred", p.t_u_pred),
        ("d_s_pbu", p.d_s_pbu),
        ("d_s_pback", p.d_s_pback),
        ("d_s_aaareq", p.d_s_aaareq),
        ("d_s_aaareply", p.d_s_aaareply),
        ("d_l2", p.d_l2),
        ("d_dhcp", p.d_dhcp),
        ("radio_delay", cfg.plumbing.radio_delay),
        ("source_delay", cfg.plumbing.source_delay),
    ] {
        let _ = writeln!(o, "{k} = {}", d(v));
    }

    let _ = writeln!(o, "\n[topology]");
    for (i, site) in cfg.topology.aps.iter().enumerate() {
        let at = cfg.timeline.ap_positions[&EntityId::ap(i as u32)];
        let _ = writeln!(o, "ap{i} = {} {}", pos(at), site.prefix);
    }
    if let Some(nb) = &cfg.topology.neighbors {
        let list: Vec<String> = nb.iter().map(|(a, b)| format!("{a}-{b}")).collect();
        let _ = writeln!(o, "neighbors = {}", list.join(", "));
    }

    let _ = writeln!(o, "\n[policy]");
    let _ = writeln!(o, "threshold_x = {}", cfg.policy.threshold_x);
    let _ = writeln!(o, "ra_interval = {}", d(cfg.policy.ra_interval));
    let reg: Vec<String> = cfg
        .policy
        .registered_prefixes
        .iter()
        .map(|p| p.to_string())
        .collect();
    let _ = writeln!(o, "registered = {}", reg.join(", "));
    let rp = &cfg.signal.default_params;
    let _ = writeln!(o, "tx_power_dbm = {}", rp.tx_power_dbm);
    let _ = writeln!(o, "path_loss_exponent = {}", rp.path_loss_exponent);
    let _ = writeln!(o, "reference_distance_m = {}", rp.reference_distance_m);
    if let Noise::Seeded { stddev_db, .. } = cfg.signal.noise {
        let _ = writeln!(o, "noise_stddev_db = {stddev_db}");
    }
    for (ap, rp) in &cfg.signal.per_ap {
        let i = ap.index;
        let _ = writeln!(o, "ap{i}.tx_power_dbm = {}", rp.tx_power_dbm);
        let _ = writeln!(o, "ap{i}.path_loss_exponent = {}", rp.path_loss_exponent);
        let _ = writeln!(
            o,
            "ap{i}.reference_distance_m = {}",
            rp.reference_distance_m
        );
    }

    let t = &cfg.traffic;
    let _ = writeln!(o, "\n[traffic]");
    let _ = writeln!(o, "interval = {}", d(t.interval));
    let _ = writeln!(o, "start = {}", d(t.start));
    let _ = writeln!(o, "stop = {}", d(t.stop));

    let _ = writeln!(o, "\n[timeline]");
    let _ = writeln!(o, "attach_gap = {}", d(cfg.plumbing.attach_gap));
    for (at, p) in &cfg.timeline.waypoints {
        let _ = writeln!(o, "waypoint = {} {}", d(*at), pos(*p));
    }
    o
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn durations_parse_exactly() {
        assert_eq!(parse_duration("250us"), Ok(SimTime(250)));
        assert_eq!(parse_duration("10ms"), Ok(SimTime(10_000)));
        assert_eq!(parse_duration("1.5ms"), Ok(SimTime(1_500)));
        assert_eq!(parse_duration("2s"), Ok(SimTime(2_000_000)));
        assert_eq!(parse_duration("0"), Ok(SimTime::ZERO));
        assert!(parse_duration("0.5us").is_err());
        assert!(parse_duration("10").is_err());
        assert!(parse_duration("ms").is_err());
        assert!(parse_duration("-1ms").is_err());
    }

    #[test]
    fn durations_format_with_largest_exact_unit() {
        for us in [0, 1, 999, 1_000, 1_500, 60_000_000, 1_000_001] {
            let t = SimTime(us);
            assert_eq!(parse_duration(&format_duration(t)), Ok(t));
        }
        assert_eq!(format_duration(SimTime(15_000)), "15ms");
        assert_eq!(format_duration(SimTime(2_000_000)), "2s");
    }

    #[test]
    fn corridor_round_trips() {
        let cfg = ScenarioConfig::corridor();
        assert_eq!(parse_config(&serialize_config(&cfg)), Ok(cfg));
    }
}
