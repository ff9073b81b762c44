//! Deterministic text output: CSV traces and rounded JSON.
//!
//! Every number written to a report is rounded to 6 significant digits.

use chrono::NaiveDate;
use serde_json::Value;

use crate::carbon::CdnChoice;
use crate::error::{Error, Result};
use crate::scheduler::{Aggregates, CapSweepResult, DemandWeights, PlanSettings, Schedule};
use crate::utility::QualityTier;

pub const SCHEDULE_HEADER: [&str; 7] = [
    "date",
    "ci_local",
    "ci_remote",
    "cdn",
    "tier",
    "effective_intensity",
    "budget",
];

/// Rounds to 6 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

/// 6 significant digits, trailing zeros dropped (`0.225806`, `280`, `-0.5`).
pub fn fmt_num(x: f64) -> String {
    let r = round_sig(x);
    if r == 0.0 {
        return "0".into();
    }
    format!("{r}")
}

/// Rounds every float in a JSON document to 6 significant digits.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            .and_then(|f| serde_json::Number::from_f64(round_sig(f)))
            .map_or(Value::Null, Value::Number),
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

/// Pretty JSON with rounded numbers and a trailing newline.
pub fn to_json_string<T: serde::Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)
        .map_err(|e| Error::Argument(format!("cannot serialise report: {e}")))?;
    let mut s = serde_json::to_string_pretty(&round_json(v)).expect("JSON values always serialise");
    s.push('\n');
    Ok(s)
}

/// Per-day trace for plotting.
pub fn schedule_csv(schedule: &Schedule) -> String {
    let mut out = SCHEDULE_HEADER.join(",");
    out.push('\n');
    for d in &schedule.days {
        let row = [
            d.date.to_string(),
            fmt_num(d.ci_local),
            d.ci_remote.map(fmt_num).unwrap_or_default(),
            d.cdn.to_string(),
            d.tier.clone(),
            fmt_num(d.effective_intensity),
            fmt_num(d.budget),
        ];
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// A row read back from a schedule CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleRow {
    pub date: NaiveDate,
    pub ci_local: f64,
    pub ci_remote: Option<f64>,
    pub cdn: CdnChoice,
    pub tier: String,
    pub effective_intensity: f64,
    pub budget: f64,
}

pub fn parse_schedule_csv(text: &str) -> Result<Vec<ScheduleRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    let mut header_seen = false;
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            Error::parse(e.position().map_or(0, |p| p.line() as usize), e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if !header_seen {
            if rec.iter().ne(SCHEDULE_HEADER) {
                return Err(Error::parse(line, "unexpected schedule header"));
            }
            header_seen = true;
            continue;
        }
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse()
                .map_err(|_| Error::parse(line, format!("bad number {:?}", &rec[i])))
        };
        rows.push(ScheduleRow {
            date: NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d")
                .map_err(|e| Error::parse(line, e.to_string()))?,
            ci_local: num(1)?,
            ci_remote: if rec[2].is_empty() {
                None
            } else {
                Some(num(2)?)
            },
            cdn: rec[3]
                .parse()
                .map_err(|e: Error| Error::parse(line, e.to_string()))?,
            tier: rec[4].to_string(),
            effective_intensity: num(5)?,
            budget: num(6)?,
        });
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(rows)
}

/// Recomputes aggregates from a parsed schedule trace.
pub fn reaggregate(rows: &[ScheduleRow], settings: &PlanSettings) -> Result<Aggregates> {
    let tiers = rows
        .iter()
        .map(|r| {
            settings
                .ladder
                .tier(&r.tier)
                .ok_or_else(|| Error::Argument(format!("{}: unknown tier {}", r.date, r.tier)))
        })
        .collect::<Result<Vec<&QualityTier>>>()?;
    Aggregates::compute(&tiers, settings, DemandWeights::Uniform)
}

/// One row per cap, in sweep order.
pub fn sweep_csv(sweep: &CapSweepResult) -> String {
    let mut header = vec![
        "cap".to_string(),
        "reduced_days".into(),
        "avg_bitrate_reduction".into(),
    ];
    if let Some(first) = sweep.rows.first() {
        for p in &first.profiles {
            header.push(format!("{}_total_utility_loss", p.label));
            header.push(format!("{}_avg_monthly_utility_reduction", p.label));
        }
    }
    header.push("feasible".into());
    let mut out = header.join(",");
    out.push('\n');
    for row in &sweep.rows {
        let mut cells = vec![
            fmt_num(row.cap),
            row.reduced_day_count.to_string(),
            fmt_num(row.avg_bitrate_reduction),
        ];
        for p in &row.profiles {
            cells.push(fmt_num(p.total_utility_loss));
            cells.push(fmt_num(p.avg_monthly_utility_reduction));
        }
        cells.push(row.feasible.to_string());
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
