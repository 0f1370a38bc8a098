//! Closed-form handover cost model and the comparison of simulated
//! handovers against it.
//!
//! Averages are exact rationals; they are rounded to whole microseconds
//! only when a report row is produced.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_rational::Ratio;
use thiserror::Error;

use crate::protocol::{GroupId, MessageTag, ProtocolMode, SignalingMode};
use crate::sim_core::SimTime;

/// Delay symbols of the analytical model. `d_dhcp` is carried for
/// completeness and never enters any formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AnalyticParams {
    pub n: u32,
    pub d_smag_ap: SimTime,
    pub d_mag_mag: SimTime,
    pub t_u_pred: SimTime,
    pub d_s_pbu: SimTime,
    pub d_s_pback: SimTime,
    pub d_s_aaareq: SimTime,
    pub d_s_aaareply: SimTime,
    pub d_l2: SimTime,
    pub d_dhcp: SimTime,
}

impl Default for AnalyticParams {
    fn default() -> Self {
        AnalyticParams {
            n: 1,
            d_smag_ap: SimTime::ZERO,
            d_mag_mag: SimTime::ZERO,
            t_u_pred: SimTime::ZERO,
            d_s_pbu: SimTime::ZERO,
            d_s_pback: SimTime::ZERO,
            d_s_aaareq: SimTime::ZERO,
            d_s_aaareply: SimTime::ZERO,
            d_l2: SimTime::ZERO,
            d_dhcp: SimTime::ZERO,
        }
    }
}

/// Loss window of an untimely handover.
pub fn ho_pl(p: &AnalyticParams) -> SimTime {
    SimTime(u64::from(p.n) * p.d_smag_ap.0 + p.d_mag_mag.0 + p.t_u_pred.0)
}

pub fn avg_ho_pl(p: &AnalyticParams) -> Ratio<u64> {
    Ratio::new(ho_pl(p).0, u64::from(p.n.max(1)))
}

fn per_sensor_registration(p: &AnalyticParams, aaa_colocated: bool) -> u64 {
    let aaa = if aaa_colocated {
        0
    } else {
        p.d_s_aaareq.0 + p.d_s_aaareply.0
    };
    p.d_s_pbu.0 + p.d_s_pback.0 + aaa
}

pub fn ho_lat(p: &AnalyticParams, aaa_colocated: bool) -> SimTime {
    SimTime(u64::from(p.n) * per_sensor_registration(p, aaa_colocated) + p.d_l2.0)
}

pub fn avg_ho_lat(p: &AnalyticParams, aaa_colocated: bool) -> Ratio<u64> {
    Ratio::new(ho_lat(p, aaa_colocated).0, u64::from(p.n.max(1)))
}

/// Round half up to whole microseconds.
pub fn round_us(r: Ratio<u64>) -> u64 {
    (r + Ratio::new(1, 2)).floor().to_integer()
}

/// Control messages originated per handover.
pub fn signaling_cost(
    protocol: ProtocolMode,
    n: u32,
    mode: SignalingMode,
    aaa_colocated: bool,
) -> BTreeMap<MessageTag, u32> {
    let rounds = match mode {
        SignalingMode::Aggregated => 1,
        SignalingMode::PerSensor => n,
    };
    let mut m = BTreeMap::new();
    m.insert(MessageTag::SPbu, rounds);
    m.insert(MessageTag::SPbAck, rounds);
    if !aaa_colocated {
        m.insert(MessageTag::SAaaReq, rounds);
        m.insert(MessageTag::SAaaReply, rounds);
    }
    m.insert(MessageTag::NdpReq, 1);
    if protocol == ProtocolMode::Fhpmipv6 {
        for tag in [
            MessageTag::L2HoInfo,
            MessageTag::L2HoInit,
            MessageTag::Hi,
            MessageTag::HAck,
            MessageTag::L2HoComplete,
        ] {
            m.insert(tag, 1);
        }
    }
    m
}

/// Periodic downlink traffic: emissions at `start + k * interval` while
/// strictly before `stop`. An interval of zero means no traffic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrafficPattern {
    pub interval: SimTime,
    pub start: SimTime,
    pub stop: SimTime,
}

impl TrafficPattern {
    /// Number of emissions with time in `[from, to)`.
    pub fn emissions_in(&self, from: SimTime, to: SimTime) -> u64 {
        let i = self.interval.0;
        if i == 0 {
            return 0;
        }
        let lo = from.0.max(self.start.0);
        let hi = to.0.min(self.stop.0);
        if hi <= lo {
            return 0;
        }
        // First index k with start + k*i >= x.
        let first = |x: u64| (x - self.start.0).div_ceil(i);
        first(hi) - first(lo)
    }
}

/// One handover as observed by the simulator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HandoverRecord {
    pub group: GroupId,
    pub protocol: ProtocolMode,
    pub mode: SignalingMode,
    pub timely: bool,
    pub aaa_colocated: bool,
    pub params: AnalyticParams,
    pub t_decision: SimTime,
    /// Last instant packets from the previous gateway could reach the MSN.
    pub t_detach: SimTime,
    pub t_first_rx_new: Option<SimTime>,
    pub packets_lost: u64,
    pub buffered_delivered: u64,
    pub signaling: BTreeMap<MessageTag, u32>,
    /// Source-to-MSN delay through the previous gateway. A packet emitted
    /// this long before `t_detach` is the first one the detach can cost.
    pub downlink_delay: SimTime,
}

impl HandoverRecord {
    pub fn latency(&self) -> Option<SimTime> {
        self.t_first_rx_new.map(|t| t.saturating_sub(self.t_detach))
    }

    pub fn signaling_total(&self) -> u32 {
        self.signaling.values().sum()
    }

    /// Start of the emission interval whose packets are lost in an
    /// untimely handover.
    pub fn loss_anchor(&self) -> SimTime {
        self.t_detach.saturating_sub(self.downlink_delay)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompareOptions {
    pub traffic: TrafficPattern,
    /// Also require the measured latency to match within 1 µs.
    pub check_latency: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportRow {
    pub run_id: String,
    pub protocol: ProtocolMode,
    pub mode: SignalingMode,
    pub n: u32,
    pub timely: bool,
    pub sim_latency_us: Option<u64>,
    pub oracle_latency_us: u64,
    pub sim_loss: u64,
    pub oracle_window_us: u64,
    pub signaling_total: u32,
    pub pass: bool,
}

impl ReportRow {
    pub const HEADER: &'static str = "run_id,protocol,mode,n,timely,sim_latency_us,oracle_latency_us,sim_loss,oracle_window_us,signaling_total,pass";

    pub fn to_csv(&self) -> String {
        let lat = self
            .sim_latency_us
            .map_or(String::new(), |v| format!("{v}"));
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.run_id,
            self.protocol,
            self.mode,
            self.n,
            self.timely,
            lat,
            self.oracle_latency_us,
            self.sim_loss,
            self.oracle_window_us,
            self.signaling_total,
            self.pass
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalyticsError {
    #[error("handover of group {group:?} ran with delays that differ from the oracle parameters")]
    ParamMismatch { group: GroupId },
}

/// Loss the model predicts for `r`: none when timely, otherwise every
/// emission inside the loss window.
pub fn implied_loss(r: &HandoverRecord, p: &AnalyticParams, traffic: &TrafficPattern) -> u64 {
    if r.timely {
        return 0;
    }
    let from = r.loss_anchor();
    traffic.emissions_in(from, from + ho_pl(p))
}

pub fn compare(
    run_id: &str,
    records: &[HandoverRecord],
    p: &AnalyticParams,
    opts: &CompareOptions,
) -> Result<Vec<ReportRow>, AnalyticsError> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            if r.params != *p {
                return Err(AnalyticsError::ParamMismatch { group: r.group });
            }
            let oracle_latency = ho_lat(p, r.aaa_colocated).0;
            let sim_latency = r.latency().map(|l| l.0);
            let pass = match r.protocol {
                ProtocolMode::Pmipv6 => true,
                ProtocolMode::Fhpmipv6 => {
                    let loss_ok = r.packets_lost == implied_loss(r, p, &opts.traffic);
                    let lat_ok = !opts.check_latency
                        || sim_latency.is_some_and(|l| l.abs_diff(oracle_latency) <= 1);
                    loss_ok && lat_ok
                }
            };
            Ok(ReportRow {
                run_id: if records.len() == 1 {
                    String::from(run_id)
                } else {
                    format!("{run_id}#{i}")
                },
                protocol: r.protocol,
                mode: r.mode,
                n: p.n,
                timely: r.timely,
                sim_latency_us: sim_latency,
                oracle_latency_us: oracle_latency,
                sim_loss: r.packets_lost,
                oracle_window_us: if r.timely { 0 } else { ho_pl(p).0 },
                signaling_total: r.signaling_total(),
                pass,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ms(v: u64) -> SimTime {
        SimTime::from_millis(v)
    }

    #[test]
    fn loss_window_examples() {
        assert_eq!(ho_pl(&AnalyticParams::default()), SimTime::ZERO);
        let p = AnalyticParams {
            n: 3,
            d_smag_ap: SimTime(5_000),
            d_mag_mag: SimTime(20_000),
            t_u_pred: SimTime(10_000),
            ..Default::default()
        };
        assert_eq!(ho_pl(&p), SimTime(45_000));
        assert_eq!(avg_ho_pl(&p), Ratio::from_integer(15_000));
        let one = AnalyticParams { n: 1, ..p };
        assert_eq!(avg_ho_pl(&one), Ratio::from_integer(ho_pl(&one).0));
    }

    #[test]
    fn latency_examples() {
        let p = AnalyticParams {
            n: 3,
            d_s_pbu: ms(4),
            d_s_pback: ms(4),
            d_l2: ms(6),
            d_s_aaareq: ms(50),
            d_s_aaareply: ms(50),
            ..Default::default()
        };
        assert_eq!(ho_lat(&p, true), SimTime(30_000));
        assert_eq!(avg_ho_lat(&p, true), Ratio::from_integer(10_000));
        assert_eq!(ho_lat(&p, false), SimTime(330_000));
        assert_eq!(ho_lat(&AnalyticParams::default(), false), SimTime::ZERO);
    }

    #[test]
    fn dhcp_never_counts() {
        let p = AnalyticParams {
            d_dhcp: ms(500),
            ..Default::default()
        };
        assert_eq!(ho_lat(&p, false), SimTime::ZERO);
        assert_eq!(ho_pl(&p), SimTime::ZERO);
    }

    #[test]
    fn signaling_tables() {
        let total = |pr, n, m, c| signaling_cost(pr, n, m, c).values().sum::<u32>();
        use ProtocolMode::*;
        use SignalingMode::*;
        assert_eq!(total(Fhpmipv6, 1, Aggregated, true), 8);
        assert_eq!(total(Fhpmipv6, 5, Aggregated, false), 10);
        assert_eq!(total(Fhpmipv6, 3, PerSensor, false), 18);
        assert_eq!(total(Fhpmipv6, 3, PerSensor, true), 12);
        let base = signaling_cost(Pmipv6, 4, Aggregated, true);
        assert_eq!(base.len(), 3);
        assert!(base.values().all(|&c| c == 1));
        assert_eq!(total(Pmipv6, 1, Aggregated, false), 5);
    }

    #[test]
    fn emissions_counting() {
        let t = TrafficPattern {
            interval: ms(10),
            start: ms(5),
            stop: ms(100),
        };
        // 5,15,...,95
        assert_eq!(t.emissions_in(SimTime::ZERO, ms(1_000)), 10);
        assert_eq!(t.emissions_in(ms(15), ms(35)), 2);
        assert_eq!(t.emissions_in(ms(16), ms(35)), 1);
        assert_eq!(t.emissions_in(ms(35), ms(15)), 0);
        assert_eq!(TrafficPattern::default().emissions_in(ms(0), ms(9)), 0);
    }

    fn record(p: AnalyticParams, timely: bool, lost: u64) -> HandoverRecord {
        HandoverRecord {
            group: GroupId(0),
            protocol: ProtocolMode::Fhpmipv6,
            mode: SignalingMode::PerSensor,
            timely,
            aaa_colocated: true,
            params: p,
            t_decision: ms(100),
            t_detach: ms(100),
            t_first_rx_new: Some(ms(100) + ho_lat(&p, true)),
            packets_lost: lost,
            buffered_delivered: 0,
            signaling: signaling_cost(ProtocolMode::Fhpmipv6, p.n, SignalingMode::PerSensor, true),
            downlink_delay: p.d_smag_ap,
        }
    }

    #[test]
    fn compare_timely_and_mismatch() {
        let p = AnalyticParams {
            n: 2,
            d_s_pbu: ms(2),
            d_s_pback: ms(3),
            ..Default::default()
        };
        let opts = CompareOptions {
            traffic: TrafficPattern {
                interval: ms(1),
                start: SimTime::ZERO,
                stop: ms(1_000),
            },
            check_latency: true,
        };
        let rows = compare("r", &[record(p, true, 0)], &p, &opts).unwrap();
        assert!(rows[0].pass);
        assert_eq!(rows[0].oracle_window_us, 0);
        assert_eq!(rows[0].sim_latency_us, Some(10_000));
        assert!(!compare("r", &[record(p, true, 1)], &p, &opts).unwrap()[0].pass);
        let other = AnalyticParams { d_l2: ms(1), ..p };
        assert_eq!(
            compare("r", &[record(other, true, 0)], &p, &opts),
            Err(AnalyticsError::ParamMismatch { group: GroupId(0) })
        );
    }

    #[test]
    fn compare_untimely_counts_window() {
        let p = AnalyticParams {
            n: 3,
            d_smag_ap: ms(1),
            d_mag_mag: ms(2),
            t_u_pred: ms(5),
            ..Default::default()
        };
        let traffic = TrafficPattern {
            interval: ms(2),
            start: SimTime(500),
            stop: ms(1_000),
        };
        // Window [99 ms, 109 ms): emissions at 99.5 .. 107.5, five of them.
        let r = record(p, false, 5);
        assert_eq!(implied_loss(&r, &p, &traffic), 5);
        let opts = CompareOptions {
            traffic,
            check_latency: false,
        };
        assert!(compare("u", &[r], &p, &opts).unwrap()[0].pass);
    }

    #[test]
    fn report_csv_shape() {
        let row = ReportRow {
            run_id: String::from("x"),
            protocol: ProtocolMode::Pmipv6,
            mode: SignalingMode::Aggregated,
            n: 3,
            timely: false,
            sim_latency_us: None,
            oracle_latency_us: 7,
            sim_loss: 2,
            oracle_window_us: 9,
            signaling_total: 3,
            pass: true,
        };
        assert_eq!(row.to_csv(), "x,pmipv6,aggregated,3,false,,7,2,9,3,true");
        assert_eq!(
            ReportRow::HEADER.split(',').count(),
            row.to_csv().split(',').count()
        );
    }
}
