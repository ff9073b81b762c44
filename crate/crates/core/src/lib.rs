//! Carbon-cap planning for video streaming.
//!
//! Given daily grid carbon intensity for one or two regions, the planner
//! decides on which days a provider must stream one quality tier lower (and
//! from which data center) to keep the period's average effective carbon
//! intensity under a cap. The resulting schedule is turned into the terms of
//! a two-tier subscription: how many videos may be downgraded, the discount
//! that pays for it, and the reward points still owed to each user type.
//!
//! Modules, bottom-up:
//! - [`utility`]: MOS-based utility curves and per-tier utility losses.
//! - [`energy`]: incremental W/Mbps per delivery-path segment.
//! - [`carbon`]: carbon-intensity CSV ingestion and data-center selection.
//! - [`scheduler`]: the day-by-day budget procedure and cap sweeps.
//! - [`subscription`]: two-tier subscription synthesis.
//! - [`report`], [`cli`]: deterministic output files and the command layer.

#[cfg(test)]
macro_rules! assert_close {
    ($a:expr, $b:expr, $tol:expr) => {{
        let (a, b, tol): (f64, f64, f64) = ($a, $b, $tol);
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }};
}

pub mod carbon;
pub mod cli;
pub mod energy;
pub mod error;
pub mod report;
pub mod scheduler;
pub mod subscription;
pub mod utility;

pub use carbon::{CarbonIntensitySeries, CdnChoice, DailyIntensity, DualPathConfig};
pub use energy::{Catalog, PathProfile, SegmentKind, SegmentProfile};
pub use error::{Error, Result};
pub use scheduler::{plan, sweep_caps, PlanSettings, ReductionStrategy, Schedule};
pub use subscription::{aggregate_months, synthesize, MultiMonthPlan, TwoTierPlan};
pub use utility::{QualityLadder, QualityTier, UserProfile};
