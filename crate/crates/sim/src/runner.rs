//! Single runs and parameter sweeps.

use std::collections::BTreeMap;

use fhpmip_core::analytics::{compare, AnalyticsError, CompareOptions, ReportRow};
use fhpmip_core::protocol::ProtocolMode;
use fhpmip_core::scenario::{self, ScenarioConfig, ScenarioError, SimOutcome};
use fhpmip_core::sim_core::SimTime;
use thiserror::Error;

use crate::config::{format_duration, parse_duration, ConfigError};
use crate::output::{metrics_csv, report_csv, trace_jsonl};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error("the run produced no handover to compare")]
    NoHandover,
}

/// Rendered outputs of one run plus the raw outcome they came from.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub outcome: SimOutcome,
    pub rows: Vec<ReportRow>,
    pub metrics_csv: String,
    pub trace_jsonl: String,
    pub report_csv: String,
}

impl Artifacts {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

fn compare_options(cfg: &ScenarioConfig) -> CompareOptions {
    CompareOptions {
        traffic: cfg.traffic,
        check_latency: cfg.check_latency,
    }
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Artifacts, RunError> {
    let outcome = scenario::run(cfg)?;
    let rows = compare(
        &cfg.name,
        &outcome.records,
        &cfg.analytic_params(),
        &compare_options(cfg),
    )?;
    Ok(Artifacts {
        metrics_csv: metrics_csv(&outcome.records),
        trace_jsonl: trace_jsonl(&outcome.trace),
        report_csv: report_csv(&rows),
        rows,
        outcome,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum AxisValue {
    N(u32),
    Protocol(ProtocolMode),
    TuPred(SimTime),
    ThresholdX(f64),
    Interval(SimTime),
}

impl AxisValue {
    fn label(&self) -> String {
        match self {
            AxisValue::N(n) => n.to_string(),
            AxisValue::Protocol(p) => p.to_string(),
            AxisValue::TuPred(t) | AxisValue::Interval(t) => format_duration(*t),
            AxisValue::ThresholdX(x) => x.to_string(),
        }
    }

    fn apply(&self, cfg: &mut ScenarioConfig) {
        match *self {
            AxisValue::N(n) => {
                cfg.n = n;
                cfg.delays.n = n;
            }
            AxisValue::Protocol(p) => cfg.protocol = p,
            AxisValue::TuPred(t) => cfg.delays.t_u_pred = t,
            AxisValue::ThresholdX(x) => cfg.policy.threshold_x = x,
            AxisValue::Interval(t) => cfg.traffic.interval = t,
        }
    }
}

/// A `[grid]` section: a base scenario path and one value list per axis.
///
/// ```text
/// [grid]
/// base = corridor.ini
/// n = 1, 3, 5
/// t_u_pred = 0, 10ms, 20ms
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub base: String,
    axes: BTreeMap<&'static str, Vec<AxisValue>>,
}

const AXES: [&str; 5] = ["interval", "n", "protocol", "t_u_pred", "threshold_x"];

fn parse_axis(key: &str, raw: &str) -> Result<AxisValue, String> {
    match key {
        "n" => raw
            .parse()
            .map(AxisValue::N)
            .map_err(|_| format!("`{raw}` is not a count")),
        "protocol" => match raw {
            "pmipv6" => Ok(AxisValue::Protocol(ProtocolMode::Pmipv6)),
            "fhpmipv6" => Ok(AxisValue::Protocol(ProtocolMode::Fhpmipv6)),
            _ => Err(format!("`{raw}` is not pmipv6 or fhpmipv6")),
        },
        "t_u_pred" => parse_duration(raw).map(AxisValue::TuPred),
        "interval" => parse_duration(raw).map(AxisValue::Interval),
        "threshold_x" => raw
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .map(AxisValue::ThresholdX)
            .ok_or_else(|| format!("`{raw}` is not a number")),
        _ => unreachable!("axis names are checked before parsing"),
    }
}

pub fn parse_grid(text: &str) -> Result<Grid, ConfigError> {
    let err = |line, key: &str, reason: String| ConfigError::Parse {
        line,
        key: key.to_string(),
        reason,
    };
    let mut in_grid = false;
    let mut base = None;
    let mut axes = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content.starts_with('[') {
            if content != "[grid]" {
                return Err(err(
                    line,
                    content,
                    "only a [grid] section is allowed".into(),
                ));
            }
            in_grid = true;
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(line, content, "expected `key = value`".into()))?;
        let (key, value) = (key.trim(), value.trim());
        if !in_grid {
            return Err(err(line, key, "key outside [grid]".into()));
        }
        if key == "base" {
            base = Some(value.to_string());
            continue;
        }
        let axis = AXES.iter().find(|&&a| a == key).ok_or_else(|| {
            err(
                line,
                key,
                format!("not a sweep axis (one of {})", AXES.join(", ")),
            )
        })?;
        if axes.contains_key(axis) {
            return Err(err(line, key, "duplicate axis".into()));
        }
        let values = value
            .split(',')
            .map(|v| parse_axis(key, v.trim()).map_err(|r| err(line, key, r)))
            .collect::<Result<Vec<_>, _>>()?;
        axes.insert(*axis, values);
    }
    let base = base.ok_or_else(|| err(0, "base", "missing from [grid]".into()))?;
    Ok(Grid { base, axes })
}

impl Grid {
    /// Cells in lexicographic order: axes by name, values in listed order,
    /// the last axis varying fastest.
    pub fn cells(&self) -> Vec<(String, Vec<&AxisValue>)> {
        let mut cells: Vec<(Vec<String>, Vec<&AxisValue>)> = vec![(Vec::new(), Vec::new())];
        for (name, values) in &self.axes {
            cells = cells
                .into_iter()
                .flat_map(|(id, vals)| {
                    values.iter().map(move |v| {
                        let mut id = id.clone();
                        let mut vals = vals.clone();
                        id.push(format!("{name}={}", v.label()));
                        vals.push(v);
                        (id, vals)
                    })
                })
                .collect();
        }
        cells
            .into_iter()
            .map(|(id, vals)| (id.join(";"), vals))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cell {cell}: {source}")]
pub struct SweepError {
    pub cell: String,
    pub source: RunError,
}

/// One comparison row per cell, taken from the cell's first handover.
pub fn sweep(grid: &Grid, base: &ScenarioConfig) -> Result<Vec<ReportRow>, SweepError> {
    grid.cells()
        .into_iter()
        .map(|(cell, values)| {
            let fail = |source| SweepError {
                cell: cell.clone(),
                source,
            };
            let mut cfg = base.clone();
            cfg.name = cell.clone();
            for v in values {
                v.apply(&mut cfg);
            }
            cfg.validate()
                .map_err(|e| fail(ConfigError::Validation(e.to_string()).into()))?;
            let outcome = scenario::run(&cfg).map_err(|e| fail(e.into()))?;
            let first = outcome
                .records
                .first()
                .ok_or_else(|| fail(RunError::NoHandover))?;
            let rows = compare(
                &cell,
                core::slice::from_ref(first),
                &cfg.analytic_params(),
                &compare_options(&cfg),
            )
            .map_err(|e| fail(e.into()))?;
            Ok(rows.into_iter().next().expect("one record gives one row"))
        })
        .collect()
}
