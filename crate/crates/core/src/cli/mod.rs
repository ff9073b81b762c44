//! Command implementations behind the `greenstream` binary.
//!
//! Each command reads its inputs, writes its output files into the run's
//! output directory and reports an exit code: 0 on success, 2 when a plan is
//! infeasible. Errors (missing files, parse failures, bad arguments) are
//! returned and map to exit code 1.

mod config;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use serde::Serialize;

pub use config::{CustomSegment, Overrides, PathSpec, Run, RunConfig, SegmentRef};

use crate::carbon::{
    count_remote_days, parse_intensity_csv, selection_threshold, CarbonIntensitySeries,
    DualPathConfig,
};
use crate::report::{fmt_num, schedule_csv, sweep_csv, to_json_string};
use crate::scheduler::{plan, sweep_caps, Aggregates, ReductionStrategy};
use crate::subscription::{synthesize, TwoTierPlan};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;

pub const SCHEDULE_FILE: &str = "schedule.csv";
pub const PLAN_FILE: &str = "plan.json";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const CDN_DAYS_FILE: &str = "cdn_days.csv";

#[derive(Debug, Clone)]
pub struct Outcome {
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
    /// Human-readable summary for stdout.
    pub summary: String,
}

fn region_for(path: &Path, configured: &Option<String>) -> String {
    configured.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "local".into())
    })
}

fn load_series(path: &Path, region: String) -> anyhow::Result<CarbonIntensitySeries> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_intensity_csv(&bytes, region).with_context(|| format!("{}", path.display()))
}

fn load_local(run: &Run) -> anyhow::Result<CarbonIntensitySeries> {
    let path = run
        .local_ci
        .as_ref()
        .ok_or_else(|| anyhow!("usage error: no local carbon-intensity CSV (--local-ci)"))?;
    load_series(path, region_for(path, &run.local_region))
}

fn load_remote(run: &Run) -> anyhow::Result<Option<CarbonIntensitySeries>> {
    run.remote_ci
        .as_ref()
        .map(|p| load_series(p, region_for(p, &run.remote_region)))
        .transpose()
}

fn write(out: &Path, name: &str, contents: &str, files: &mut Vec<PathBuf>) -> anyhow::Result<()> {
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let path = out.join(name);
    fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
    files.push(path);
    Ok(())
}

#[derive(Serialize)]
struct PlanReport<'a> {
    local_region: &'a str,
    remote_region: Option<&'a str>,
    cap: f64,
    strategy: &'a ReductionStrategy,
    path: &'a DualPathConfig,
    loss_decimals: Option<u32>,
    feasible: bool,
    diagnostics: Option<String>,
    aggregates: &'a Aggregates,
    subscriptions: Vec<TwoTierPlan>,
    subscription_note: Option<String>,
}

/// Plans one period at one cap; writes `schedule.csv` and `plan.json`.
pub fn cmd_plan(run: &Run) -> anyhow::Result<Outcome> {
    let cap = match run.caps[..] {
        [cap] => cap,
        [] => bail!("usage error: plan needs exactly one --cap"),
        _ => bail!("usage error: plan takes a single cap; use `sweep` for several"),
    };
    let local = load_local(run)?;
    let remote = load_remote(run)?;
    let schedule = plan(&local, remote.as_ref(), &run.path, cap, &run.settings)?;

    let mut subscriptions = Vec::new();
    let mut note = None;
    for p in &run.settings.profiles {
        match synthesize(&schedule, p, run.reward_rate) {
            Ok(plan) => subscriptions.push(plan),
            Err(e) => {
                note = Some(e.to_string());
                break;
            }
        }
    }
    if note.is_some() {
        subscriptions.clear();
    }

    let report = PlanReport {
        local_region: local.region(),
        remote_region: remote.as_ref().map(|r| r.region()),
        cap,
        strategy: &run.settings.strategy,
        path: &run.path,
        loss_decimals: run.settings.loss_decimals,
        feasible: schedule.feasible,
        diagnostics: schedule.diagnostics(),
        aggregates: &schedule.aggregates,
        subscriptions,
        subscription_note: note,
    };

    let mut files = Vec::new();
    write(
        &run.out,
        SCHEDULE_FILE,
        &schedule_csv(&schedule),
        &mut files,
    )?;
    write(&run.out, PLAN_FILE, &to_json_string(&report)?, &mut files)?;

    let agg = &schedule.aggregates;
    let mut summary = format!(
        "{}: cap {} -> {} of {} days reduced, average bitrate reduction {}",
        local.region(),
        fmt_num(cap),
        agg.reduced_day_count,
        agg.period_days,
        fmt_num(agg.avg_bitrate_reduction)
    );
    for p in &agg.profiles {
        summary.push_str(&format!(
            "\n  {} (gamma {}): total utility loss {}",
            p.label,
            fmt_num(p.gamma),
            fmt_num(p.total_utility_loss)
        ));
    }
    let exit_code = match schedule.diagnostics() {
        Some(d) => {
            summary.push_str(&format!("\ninfeasible: {d}"));
            EXIT_INFEASIBLE
        }
        None => EXIT_OK,
    };
    Ok(Outcome {
        exit_code,
        files,
        summary,
    })
}

/// Plans once per cap; writes `sweep.csv`.
pub fn cmd_sweep(run: &Run) -> anyhow::Result<Outcome> {
    if run.caps.is_empty() {
        bail!("usage error: sweep needs at least one --cap");
    }
    let local = load_local(run)?;
    let remote = load_remote(run)?;
    let sweep = sweep_caps(&local, remote.as_ref(), &run.path, &run.caps, &run.settings)?;
    let mut files = Vec::new();
    write(&run.out, SWEEP_FILE, &sweep_csv(&sweep), &mut files)?;
    let summary = sweep
        .rows
        .iter()
        .map(|r| {
            format!(
                "cap {}: {} days reduced",
                fmt_num(r.cap),
                r.reduced_day_count
            )
        })
        .collect::<Vec<_>>()
        .join("\n");
    let exit_code = if sweep.rows.iter().all(|r| r.feasible) {
        EXIT_OK
    } else {
        EXIT_INFEASIBLE
    };
    Ok(Outcome {
        exit_code,
        files,
        summary,
    })
}

/// Counts remote-preferred days for every (local, remote) data-center pair
/// in the run's CDN grid; writes `cdn_days.csv`.
pub fn cmd_cdn_days(run: &Run) -> anyhow::Result<Outcome> {
    let local = load_local(run)?;
    let remote = load_remote(run)?.ok_or_else(|| {
        anyhow!("usage error: cdn-days needs a remote carbon-intensity CSV (--remote-ci)")
    })?;
    local.check_aligned(&remote)?;

    let mut csv = String::from("local_dc,remote_dc,threshold,remote_days,period_days\n");
    let mut summary = Vec::new();
    for (l_label, d_l) in &run.cdn_grid {
        for (r_label, d_r) in &run.cdn_grid {
            let cfg = DualPathConfig::new(run.path.access, run.path.core, *d_l, *d_r)?;
            let days = count_remote_days(&local, &remote, &cfg)?;
            csv.push_str(&format!(
                "{l_label},{r_label},{},{days},{}\n",
                fmt_num(selection_threshold(&cfg)),
                local.len()
            ));
            summary.push(format!("{l_label} / {r_label}: {days}"));
        }
    }
    let mut files = Vec::new();
    write(&run.out, CDN_DAYS_FILE, &csv, &mut files)?;
    Ok(Outcome {
        exit_code: EXIT_OK,
        files,
        summary: summary.join("\n"),
    })
}
