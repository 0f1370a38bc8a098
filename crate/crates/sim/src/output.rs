//! CSV and JSON-lines renderings of a run, and atomic output directories.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::Path;

use fhpmip_core::analytics::{HandoverRecord, ReportRow};
use fhpmip_core::protocol::MessageTag;
use fhpmip_core::sim_core::TraceRecord;
use serde::Serialize;
use tempfile::NamedTempFile;

#[derive(Serialize)]
struct TraceLine<'a> {
    t_us: u64,
    kind: &'static str,
    actor: String,
    detail: DetailJson<'a>,
}

#[derive(Serialize)]
struct DetailJson<'a> {
    tag: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    src: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dst: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    group: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seqno: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<&'a str>,
}

/// One JSON object per trace record, keys in the order t_us, kind, actor, detail.
pub fn trace_jsonl(trace: &[TraceRecord]) -> String {
    let mut out = String::new();
    for r in trace {
        let d = &r.detail;
        let line = TraceLine {
            t_us: r.at.as_micros(),
            kind: r.kind.name(),
            actor: r.actor.to_string(),
            detail: DetailJson {
                tag: d.tag,
                src: d.src.map(|e| e.to_string()),
                dst: d.dst.map(|e| e.to_string()),
                group: d.group,
                seqno: d.seqno,
                note: d.note,
            },
        };
        out.push_str(&serde_json::to_string(&line).expect("trace lines always serialize"));
        out.push('\n');
    }
    out
}

fn signaling_tags() -> impl Iterator<Item = MessageTag> {
    MessageTag::ALL
        .into_iter()
        .filter(|t| t.is_handover_signaling())
}

pub fn metrics_header() -> String {
    let mut h = String::from(
        "group,protocol,mode,n,timely,aaa_colocated,t_decision_us,t_detach_us,\
         t_first_rx_new_us,latency_us,packets_lost,buffered_delivered,signaling_total",
    );
    for t in signaling_tags() {
        let _ = write!(h, ",sig_{}", t.name());
    }
    h
}

/// One row per handover, in the order the handovers started.
pub fn metrics_csv(records: &[HandoverRecord]) -> String {
    let mut out = metrics_header();
    out.push('\n');
    let opt = |v: Option<u64>| v.map_or(String::new(), |v| v.to_string());
    for r in records {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.group.0,
            r.protocol,
            r.mode,
            r.params.n,
            r.timely,
            r.aaa_colocated,
            r.t_decision.as_micros(),
            r.t_detach.as_micros(),
            opt(r.t_first_rx_new.map(|t| t.as_micros())),
            opt(r.latency().map(|t| t.as_micros())),
            r.packets_lost,
            r.buffered_delivered,
            r.signaling_total(),
        );
        for t in signaling_tags() {
            let _ = write!(out, ",{}", r.signaling.get(&t).copied().unwrap_or(0));
        }
        out.push('\n');
    }
    out
}

pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(ReportRow::HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}

/// Writes every file to a temporary name inside `dir` first and renames
/// them into place only once all writes succeeded.
pub fn write_all_atomic(dir: &Path, files: &[(&str, &str)]) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut staged = Vec::with_capacity(files.len());
    for (name, contents) in files {
        let mut tmp = NamedTempFile::new_in(dir)?;
        tmp.write_all(contents.as_bytes())?;
        tmp.as_file().sync_all()?;
        staged.push((tmp, dir.join(name)));
    }
    for (tmp, path) in staged {
        tmp.persist(path).map_err(|e| e.error)?;
    }
    Ok(())
}
