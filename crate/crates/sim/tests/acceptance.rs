//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::collections::HashSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use fhpmip_core::analytics::{avg_ho_lat, signaling_cost, AnalyticParams, HandoverRecord};
use fhpmip_core::handover_decision::{
    connection_quality_decide, Advertisement, Decision, HandoverPolicy, Noise,
};
use fhpmip_core::protocol::{MessageTag, NetworkPrefix, ProtocolMode, SignalingMode};
use fhpmip_core::scenario::{run, Prediction, ScenarioConfig, SimOutcome};
use fhpmip_core::sim_core::{EntityId, Role, SimTime, TraceKind, TraceRecord};
use fhpmip_sim::config::parse_config;
use fhpmip_sim::runner::run_scenario;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn ms(v: u64) -> SimTime {
    SimTime::from_millis(v)
}

fn corridor() -> ScenarioConfig {
    parse_config(include_str!("../scenarios/corridor.ini")).expect("shipped scenario parses")
}

fn check(cond: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    check(elapsed < limit, || {
        format!("took {elapsed:?}, limit {limit:?}")
    })
}

fn handovers(out: &SimOutcome) -> Result<&[HandoverRecord], String> {
    check(!out.records.is_empty(), || "no handover happened".into())?;
    Ok(&out.records)
}

fn sim(cfg: &ScenarioConfig) -> Result<SimOutcome, String> {
    run(cfg).map_err(|e| e.to_string())
}

/// Instants at which `msn` noted the given state change, read from the trace.
fn msn_notes(trace: &[TraceRecord], msn: EntityId, note: &str) -> Vec<SimTime> {
    trace
        .iter()
        .filter(|t| {
            t.kind == TraceKind::StateChange && t.actor == msn && t.detail.note == Some(note)
        })
        .map(|t| t.at)
        .collect()
}

fn source_sends(trace: &[TraceRecord], from: SimTime, to: SimTime) -> u64 {
    trace
        .iter()
        .filter(|t| t.kind == TraceKind::Send && t.actor.role == Role::TrafficSource)
        .filter(|t| t.at >= from && t.at < to)
        .count() as u64
}

fn zero_loss_when_timely() -> Verdict {
    let cfg = corridor();
    check(
        cfg.protocol == ProtocolMode::Fhpmipv6
            && cfg.n == 3
            && cfg.prediction == Prediction::Timely
            && cfg.traffic.interval == ms(10)
            && cfg.duration == ms(60_000),
        || "corridor scenario is not the canonical configuration".into(),
    )?;
    let start = Instant::now();
    let out = sim(&cfg)?;
    let elapsed = start.elapsed();
    let recs = handovers(&out)?;
    let lost: u64 = recs.iter().map(|r| r.packets_lost).sum();
    check(lost == 0 && out.dropped == 0, || {
        format!("{lost} lost, {} dropped", out.dropped)
    })?;
    let seqnos: Vec<u64> = out.receptions.values().flatten().map(|r| r.seqno).collect();
    let received = out.emissions.len() as u64 - out.in_flight();
    check(seqnos.iter().copied().eq(0..received), || {
        "seqno sequence has a gap".into()
    })?;
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!(
        "{} handovers, {} packets, 0 lost, {elapsed:.0?}",
        recs.len(),
        seqnos.len()
    ))
}

fn latency_regime(n: u32, d_l2: SimTime, colocated: bool) -> ScenarioConfig {
    let mut c = corridor();
    c.n = n;
    c.delays.n = n;
    c.prediction = Prediction::Untimely;
    c.mode = SignalingMode::PerSensor;
    c.aaa_colocated = colocated;
    c.delays.d_smag_ap = SimTime::ZERO;
    c.delays.d_mag_mag = SimTime::ZERO;
    c.delays.t_u_pred = SimTime::ZERO;
    c.delays.d_l2 = d_l2;
    c.plumbing.attach_gap = ms(1);
    c.traffic.interval = ms(1);
    // One handover, at 15.2 s, is enough here.
    c.duration = ms(20_000);
    c.traffic.stop = c.duration;
    c
}

/// Per-sensor registration rounds plus the layer-2 notification.
fn expected_latency(c: &ScenarioConfig) -> u64 {
    let d = &c.delays;
    let aaa = if c.aaa_colocated {
        0
    } else {
        d.d_s_aaareq.0 + d.d_s_aaareply.0
    };
    u64::from(c.n) * (d.d_s_pbu.0 + d.d_s_pback.0 + aaa) + d.d_l2.0
}

/// Detach to first packet accepted afterwards, taken from the trace alone.
fn trace_latencies(out: &SimOutcome) -> Vec<u64> {
    let msn = EntityId::msn(0);
    let dropped: HashSet<(SimTime, Option<u64>)> = out
        .trace
        .iter()
        .filter(|d| d.kind == TraceKind::Drop && d.actor == msn)
        .map(|d| (d.at, d.detail.seqno))
        .collect();
    let accepted = |t: &TraceRecord| {
        t.kind == TraceKind::Deliver
            && t.actor == msn
            && t.detail.tag == "DataPacket"
            && !dropped.contains(&(t.at, t.detail.seqno))
    };
    msn_notes(&out.trace, msn, "detached")
        .into_iter()
        .filter_map(|detach| {
            out.trace
                .iter()
                .find(|t| t.at >= detach && accepted(t))
                .map(|t| (t.at - detach).0)
        })
        .collect()
}

fn latency_matches_oracle() -> Verdict {
    let start = Instant::now();
    let mut cells = 0;
    for n in [1, 3, 5] {
        for d_l2 in [SimTime::ZERO, ms(6)] {
            for colocated in [true, false] {
                let cfg = latency_regime(n, d_l2, colocated);
                let out = sim(&cfg)?;
                let want = expected_latency(&cfg);
                let recs = handovers(&out)?;
                let from_trace = trace_latencies(&out);
                check(from_trace.len() == recs.len(), || {
                    "detach count mismatch".into()
                })?;
                for (r, seen) in recs.iter().zip(from_trace) {
                    let got = r.latency().ok_or("handover never completed")?.0;
                    check(got.abs_diff(want) <= 1 && seen == got, || {
                        format!("n={n} d_l2={d_l2} colocated={colocated}: measured {got} (trace {seen}), expected {want}")
                    })?;
                }
                cells += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(5))?;
    Ok(format!("{cells} cells within 1us, {elapsed:.0?}"))
}

fn loss_regime(t_u_pred: SimTime) -> ScenarioConfig {
    let mut c = corridor();
    c.prediction = Prediction::Untimely;
    c.mode = SignalingMode::PerSensor;
    c.aaa_colocated = true;
    c.delays.t_u_pred = t_u_pred;
    c.delays.d_l2 = SimTime::ZERO;
    c.delays.d_s_pbu = SimTime::ZERO;
    c.delays.d_s_pback = SimTime::ZERO;
    c.traffic.interval = ms(1);
    // Off the whole-millisecond delay grid, so no emission sits on a window edge.
    c.traffic.start = SimTime(1_000_250);
    c
}

fn loss_matches_window() -> Verdict {
    let mut counts = Vec::new();
    for t_u in [5, 10, 20] {
        let cfg = loss_regime(ms(t_u));
        let out = sim(&cfg)?;
        let d = &cfg.delays;
        let window = SimTime(u64::from(cfg.n) * d.d_smag_ap.0 + d.d_mag_mag.0 + d.t_u_pred.0);
        let path = cfg.plumbing.source_delay + d.d_s_pback + d.d_smag_ap + cfg.plumbing.radio_delay;
        let detaches = msn_notes(&out.trace, EntityId::msn(0), "detached");
        let recs = handovers(&out)?;
        check(detaches.len() == recs.len(), || {
            "detach count mismatch".into()
        })?;
        for (r, detach) in recs.iter().zip(detaches) {
            let from = detach - path;
            let brute = source_sends(&out.trace, from, from + window);
            check(brute > 0 && r.packets_lost == brute, || {
                format!(
                    "t_u_pred={t_u}ms: measured {} lost, {brute} emitted in window",
                    r.packets_lost
                )
            })?;
            counts.push(brute);
        }
        let trace_drops = out
            .trace
            .iter()
            .filter(|t| t.kind == TraceKind::Drop && t.detail.tag == "DataPacket")
            .count() as u64;
        check(trace_drops == out.dropped, || {
            "drop count disagrees with trace".into()
        })?;
    }
    Ok(format!("lost per handover {counts:?}, exact"))
}

fn dominance_base(n: u32, t_u: SimTime, interval: SimTime) -> ScenarioConfig {
    let mut c = corridor();
    c.n = n;
    c.delays.n = n;
    c.prediction = Prediction::Untimely;
    c.delays.t_u_pred = t_u;
    c.traffic.interval = interval;
    c.plumbing.attach_gap = ms(100);
    c
}

fn fast_handover_dominates() -> Verdict {
    let mut strict = 0;
    let mut cells = 0;
    for n in [1, 3, 5] {
        for t_u in [ms(0), ms(10), ms(20)] {
            for interval in [ms(10), ms(40)] {
                let fast = dominance_base(n, t_u, interval);
                let mut base = fast.clone();
                base.protocol = ProtocolMode::Pmipv6;
                let (f, b) = (sim(&fast)?, sim(&base)?);
                let loss = |o: &SimOutcome| o.records.iter().map(|r| r.packets_lost).sum::<u64>();
                let (lf, lb) = (loss(&f), loss(&b));
                let cell = format!("n={n} t_u={t_u} ipi={interval}");
                check(lf <= lb, || {
                    format!("{cell}: fhpmipv6 lost {lf}, pmipv6 {lb}")
                })?;
                // Emissions that would reach the MSN while the baseline is disconnected.
                let path = base.downlink_delay();
                let exposed: u64 = handovers(&b)?
                    .iter()
                    .map(|r| {
                        let back = r.t_first_rx_new.unwrap_or(b.end);
                        source_sends(
                            &b.trace,
                            r.t_detach.saturating_sub(path),
                            back.saturating_sub(path),
                        )
                    })
                    .sum();
                if exposed > 0 {
                    check(lf < lb, || {
                        format!("{cell}: {exposed} exposed but loss {lf} vs {lb}")
                    })?;
                    strict += 1;
                }
                cells += 1;
            }
        }
    }
    Ok(format!(
        "{cells} cells, {strict} with traffic in the gap, all strictly lower"
    ))
}

fn prefix(k: u16) -> NetworkPrefix {
    NetworkPrefix::new(std::net::Ipv6Addr::new(0x2001, 0xdb8, k, 0, 0, 0, 0, 0), 64)
}

fn decide(x: f64, registered: bool, cur: f64, cand: f64) -> Decision {
    let policy = HandoverPolicy {
        threshold_x: x,
        ra_interval: ms(100),
        registered_prefixes: [prefix(if registered { 1 } else { 2 })]
            .into_iter()
            .collect(),
    };
    let ra = Advertisement {
        ap: EntityId::ap(1),
        smag: EntityId::smag(1),
        hnp: prefix(1),
        arrival: SimTime::ZERO,
    };
    connection_quality_decide(EntityId::ap(0), &ra, &policy, cur, cand)
}

fn decision_properties() -> Verdict {
    // Eighth-dB grid keeps sums exact in f64.
    let db = || (-960i32..=0).prop_map(|v| f64::from(v) / 8.0);
    let x = || (0i32..=320).prop_map(|v| f64::from(v) / 8.0);
    let cases = 1000;
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    let start = Instant::now();
    let strat = (db(), db(), x(), x(), -320i32..320, any::<bool>());
    runner
        .run(&strat, |(cur, cand, x, dx, c, registered)| {
            let base = decide(x, registered, cur, cand);
            if !registered {
                prop_assert_eq!(base, Decision::Ignore);
            }
            if registered {
                prop_assert_eq!(decide(x, true, cur, cur + x), Decision::Stay);
                prop_assert_eq!(
                    decide(x, true, cur, cur + x + 0.125),
                    Decision::Handover(EntityId::ap(1))
                );
            }
            let c = f64::from(c) / 8.0;
            prop_assert_eq!(decide(x, registered, cur + c, cand + c), base);
            if base == Decision::Stay {
                prop_assert_eq!(decide(x + dx, registered, cur, cand), Decision::Stay);
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("{cases} cases, {elapsed:.0?}"))
}

/// Signaling sends per handover, counted from the trace between successive
/// handover decisions.
fn trace_signaling(out: &SimOutcome) -> Vec<u32> {
    let decisions: Vec<SimTime> = out
        .trace
        .iter()
        .filter(|t| t.detail.tag == "handover_decision")
        .map(|t| t.at)
        .collect();
    (0..decisions.len())
        .map(|i| {
            let until = decisions.get(i + 1).copied().unwrap_or(SimTime(u64::MAX));
            out.trace
                .iter()
                .filter(|t| t.kind == TraceKind::Send && t.at >= decisions[i] && t.at < until)
                .filter(|t| t.detail.src == Some(t.actor))
                .filter(|t| {
                    MessageTag::from_name(t.detail.tag).is_some_and(|m| m.is_handover_signaling())
                })
                .count() as u32
        })
        .collect()
}

fn signaling_enumeration() -> Verdict {
    use ProtocolMode::*;
    use SignalingMode::*;
    let mut cases = vec![
        (Fhpmipv6, Aggregated, true, 3, 8),
        (Fhpmipv6, Aggregated, false, 3, 10),
        (Pmipv6, Aggregated, true, 3, 3),
        (Pmipv6, Aggregated, false, 3, 5),
    ];
    for n in [1, 3, 5] {
        cases.push((Fhpmipv6, PerSensor, false, n, 6 + 4 * n));
        cases.push((Fhpmipv6, PerSensor, true, n, 6 + 2 * n));
    }
    for &(protocol, mode, colocated, n, want) in &cases {
        let mut cfg = corridor();
        cfg.protocol = protocol;
        cfg.mode = mode;
        cfg.aaa_colocated = colocated;
        cfg.n = n;
        cfg.delays.n = n;
        let out = sim(&cfg)?;
        let label = format!("{protocol}/{mode}/colocated={colocated}/n={n}");
        let table: u32 = signaling_cost(protocol, n, mode, colocated).values().sum();
        check(table == want, || {
            format!("{label}: table says {table}, expected {want}")
        })?;
        let counted = trace_signaling(&out);
        check(counted.len() == handovers(&out)?.len(), || {
            format!("{label}: decision count")
        })?;
        for (r, c) in out.records.iter().zip(counted) {
            check(r.signaling_total() == want && c == want, || {
                format!(
                    "{label}: record {} trace {c}, expected {want}",
                    r.signaling_total()
                )
            })?;
        }
    }
    Ok(format!("{} configurations", cases.len()))
}

fn determinism() -> Verdict {
    let mut cfg = parse_config(include_str!("../scenarios/corridor_untimely.ini"))
        .map_err(|e| e.to_string())?;
    cfg.signal.noise = Noise::Seeded {
        seed: 42,
        stddev_db: 2.0,
    };
    cfg.seed = 42;
    let a = run_scenario(&cfg).map_err(|e| e.to_string())?;
    let b = run_scenario(&cfg).map_err(|e| e.to_string())?;
    check(a.metrics_csv == b.metrics_csv, || {
        "metrics.csv differs".into()
    })?;
    check(a.trace_jsonl == b.trace_jsonl, || {
        "trace.jsonl differs".into()
    })?;
    Ok(format!(
        "{} trace bytes identical across runs",
        a.trace_jsonl.len()
    ))
}

fn rational_average() -> Verdict {
    let us = || 0u64..10_000_000;
    let strat = (1u32..1_000, us(), us(), us(), us(), us(), us());
    let mut runner = TestRunner::new(Config {
        cases: 100,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&strat, |(n, pbu, pback, l2, a, b, c)| {
            let p = AnalyticParams {
                n,
                d_s_pbu: SimTime(pbu),
                d_s_pback: SimTime(pback),
                d_l2: SimTime(l2),
                d_smag_ap: SimTime(a),
                d_mag_mag: SimTime(b),
                t_u_pred: SimTime(c),
                ..AnalyticParams::default()
            };
            let avg = avg_ho_lat(&p, true);
            // avg == pbu + pback + l2/n, cross-multiplied to stay in integers.
            let (num, den) = (u128::from(*avg.numer()), u128::from(*avg.denom()));
            let n = u128::from(n);
            prop_assert_eq!(
                num * n,
                (u128::from(pbu + pback) * n + u128::from(l2)) * den
            );
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("100 parameter sets, exact".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("zero loss with timely prediction", zero_loss_when_timely),
        ("handover latency matches oracle", latency_matches_oracle),
        ("packet loss matches loss window", loss_matches_window),
        ("fast handover never loses more", fast_handover_dominates),
        ("decision algorithm properties", decision_properties),
        ("signaling cost enumeration", signaling_enumeration),
        ("deterministic outputs", determinism),
        ("exact average latency algebra", rational_average),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({why})", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
