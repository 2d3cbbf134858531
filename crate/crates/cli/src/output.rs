//! CSV and JSON writers. Everything is rendered to a string first and
//! written once.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;

use confmech::{Error, Trajectory};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Seventeen significant digits, enough for a bit-exact round trip.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_header(d: usize, monitors: &[String]) -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=d).map(|i| format!("q{i}")));
    cols.extend((1..=d).map(|i| format!("p{i}")));
    cols.extend(monitors.iter().cloned());
    cols.join(",")
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let d = traj.states.first().map_or(0, |s| s.dim());
    let mut out = csv_header(d, &traj.monitor_names);
    out.push('\n');
    for ((t, s), m) in traj.times.iter().zip(&traj.states).zip(&traj.monitors) {
        let row: Vec<String> = std::iter::once(*t)
            .chain(s.q.iter().copied())
            .chain(s.p.iter().copied())
            .chain(m.iter().copied())
            .map(fmt_f64)
            .collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

pub fn table_csv(columns: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = columns.join(",");
    out.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().copied().map(fmt_f64).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// Common envelope: tool version, command, seed and the resolved config.
pub fn envelope(cfg: &RunConfig, key: &str, body: impl Serialize) -> Value {
    json!({
        "tool_version": TOOL_VERSION,
        "command": cfg.command,
        "seed": cfg.seed,
        "config": cfg,
        key: body,
    })
}

pub fn trajectory_json(cfg: &RunConfig, traj: &Trajectory) -> Value {
    let d = traj.states.first().map_or(0, |s| s.dim());
    let columns: Vec<String> = csv_header(d, &traj.monitor_names).split(',').map(String::from).collect();
    let rows: Vec<Vec<f64>> = traj
        .times
        .iter()
        .zip(&traj.states)
        .zip(&traj.monitors)
        .map(|((t, s), m)| {
            std::iter::once(*t)
                .chain(s.q.iter().copied())
                .chain(s.p.iter().copied())
                .chain(m.iter().copied())
                .collect()
        })
        .collect();
    envelope(cfg, "trajectory", json!({ "columns": columns, "rows": rows }))
}

pub fn json_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Writes to `--output` or stdout.
pub fn emit(cfg: &RunConfig, text: &str) -> std::io::Result<()> {
    match &cfg.output {
        Some(path) => fs::write(path, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

/// Name and structured fields of a library error.
pub fn describe(e: &Error) -> (&'static str, Value) {
    match e {
        Error::NonFinite { what, q, p } => ("NonFinite", json!({ "what": what, "q": q, "p": p })),
        Error::SingularityApproach { last_time, distance } => {
            ("SingularityApproach", json!({ "last_time": last_time, "distance": distance }))
        }
        Error::StepUnderflow { last_time, step } => {
            ("StepUnderflow", json!({ "last_time": last_time, "step": step }))
        }
        Error::StepLimit { last_time, steps } => ("StepLimit", json!({ "last_time": last_time, "steps": steps })),
        Error::ChartSingular(_) => ("ChartSingular", json!({})),
        Error::NotHomogeneous { at_r, at_2r } => ("NotHomogeneous", json!({ "at_r": at_r, "at_2r": at_2r })),
        Error::DomainError(_) => ("DomainError", json!({})),
        Error::CollapseOnPath { time } => ("CollapseOnPath", json!({ "time": time })),
        Error::ZeroI => ("ZeroI", json!({})),
        Error::ZeroW => ("ZeroW", json!({})),
        Error::NonPositiveH(h) => ("NonPositiveH", json!({ "h": h })),
        Error::Unsupported(_) => ("Unsupported", json!({})),
        Error::InvalidInput(_) => ("InvalidInput", json!({})),
    }
}

pub fn diagnostic(command: &str, kind: &str, message: &str, details: Value) -> String {
    json_string(&json!({
        "tool_version": TOOL_VERSION,
        "command": command,
        "error": kind,
        "message": message,
        "details": details,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn header_layout() {
        let names = ["H", "D", "K", "I"].map(String::from);
        assert_eq!(csv_header(2, &names), "t,q1,q2,p1,p2,H,D,K,I");
    }
}
