//! Sequential carbon-budget planning.
//!
//! Walking the period day by day, the planner keeps a running budget of
//! `cap - effective intensity`. A day is streamed at full quality when that
//! keeps the budget non-negative; otherwise quality drops to the strategy's
//! tier for that day. With a remote data center available, each day first
//! picks whichever data center emits less, then makes the tier decision.
//!
//! Effective intensity is the day's emission rate divided by the local
//! full-quality energy rate `(a + c + d_l) * x_top`. For local serving this
//! reduces to `CI * x / x_top`, so single-CDN schedules do not depend on the
//! path's energy figures at all.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::carbon::{select_cdn, CarbonIntensitySeries, CdnChoice, DualPathConfig};
use crate::error::{Error, Result};
use crate::utility::{utility_loss, QualityLadder, QualityTier, UserProfile};

/// Which tier a reduced day drops to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReductionStrategy {
    /// Every reduction goes to `to`.
    SingleTier { to: QualityTier },
    /// The first `n` reduction events go to `deep`, later ones to `rest`.
    ///
    /// Counts reduction events, not calendar days.
    MixedFirstN {
        n: usize,
        deep: QualityTier,
        rest: QualityTier,
    },
}

impl ReductionStrategy {
    pub fn single(to: QualityTier) -> Self {
        ReductionStrategy::SingleTier { to }
    }

    pub fn mixed(n: usize, deep: QualityTier, rest: QualityTier) -> Self {
        ReductionStrategy::MixedFirstN { n, deep, rest }
    }

    /// Accepts `single-<tier>` / `single:<tier>` and `mixed:<n>:<deep>:<rest>`,
    /// with tier names resolved case-insensitively against `ladder`.
    pub fn parse(spec: &str, ladder: &QualityLadder) -> Result<Self> {
        let tier = |name: &str| {
            ladder
                .tier(name)
                .cloned()
                .ok_or_else(|| Error::Config(format!("strategy {spec:?}: unknown tier {name:?}")))
        };
        let strategy = if let Some(name) = spec
            .strip_prefix("single-")
            .or_else(|| spec.strip_prefix("single:"))
        {
            Self::single(tier(name)?)
        } else if let Some(rest) = spec.strip_prefix("mixed:") {
            let parts: Vec<&str> = rest.split(':').collect();
            let [n, deep, after] = parts[..] else {
                return Err(Error::Config(format!(
                    "strategy {spec:?}: expected mixed:<n>:<deep>:<rest>"
                )));
            };
            let n = n
                .parse()
                .map_err(|_| Error::Config(format!("strategy {spec:?}: bad count {n:?}")))?;
            Self::mixed(n, tier(deep)?, tier(after)?)
        } else {
            return Err(Error::Config(format!(
                "unknown strategy {spec:?} (expected single-<tier> or mixed:<n>:<deep>:<rest>)"
            )));
        };
        strategy.validate(ladder)?;
        Ok(strategy)
    }

    pub fn validate(&self, ladder: &QualityLadder) -> Result<()> {
        let targets: Vec<&QualityTier> = match self {
            ReductionStrategy::SingleTier { to } => vec![to],
            ReductionStrategy::MixedFirstN { n, deep, rest } => {
                if *n == 0 {
                    return Err(Error::Config("mixed strategy needs n >= 1".into()));
                }
                vec![deep, rest]
            }
        };
        for t in targets {
            if !ladder.contains(t) {
                return Err(Error::Config(format!(
                    "tier {} is not on the ladder",
                    t.name
                )));
            }
            if t.bitrate >= ladder.x_max() {
                return Err(Error::Config(format!(
                    "reduction target {} must be below the top tier {}",
                    t.name,
                    ladder.top().name
                )));
            }
        }
        Ok(())
    }

    /// Tier for the `event`-th (0-based) reduction of the period.
    pub fn tier_for_event(&self, event: usize) -> &QualityTier {
        match self {
            ReductionStrategy::SingleTier { to } => to,
            ReductionStrategy::MixedFirstN { n, deep, rest } => {
                if event < *n {
                    deep
                } else {
                    rest
                }
            }
        }
    }

    /// The reduced tier when every reduction uses the same one.
    pub fn single_target(&self) -> Option<&QualityTier> {
        match self {
            ReductionStrategy::SingleTier { to } => Some(to),
            ReductionStrategy::MixedFirstN { deep, rest, .. } if deep == rest => Some(deep),
            ReductionStrategy::MixedFirstN { .. } => None,
        }
    }
}

/// Everything about a plan other than the data and the cap.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanSettings {
    pub ladder: QualityLadder,
    pub strategy: ReductionStrategy,
    pub profiles: Vec<UserProfile>,
    /// Round each per-day utility loss to this many decimals before summing,
    /// matching a per-tier loss table quoted to that precision. `None` sums exact losses.
    pub loss_decimals: Option<u32>,
}

impl PlanSettings {
    pub fn new(
        ladder: QualityLadder,
        strategy: ReductionStrategy,
        profiles: Vec<UserProfile>,
    ) -> Result<Self> {
        strategy.validate(&ladder)?;
        Ok(Self {
            ladder,
            strategy,
            profiles,
            loss_decimals: None,
        })
    }

    pub fn with_loss_decimals(mut self, decimals: Option<u32>) -> Self {
        self.loss_decimals = decimals;
        self
    }

    /// Utility lost on one day streamed at `tier` instead of the top tier.
    pub fn day_loss(&self, profile: &UserProfile, tier: &QualityTier) -> Result<f64> {
        let loss = utility_loss(self.ladder.top(), tier, &self.ladder, profile)?;
        Ok(match self.loss_decimals {
            Some(d) => {
                let scale = 10f64.powi(d as i32);
                (loss * scale).round() / scale
            }
            None => loss,
        })
    }
}

/// Effective intensity (gCO2e/kWh) of one day's streaming.
///
/// `bitrate` is the tier served that day and `top_bitrate` the ladder's
/// maximum. `ci_remote` is required when `cdn` is [`CdnChoice::Remote`].
pub fn effective_intensity(
    cfg: &DualPathConfig,
    ci_local: f64,
    ci_remote: Option<f64>,
    cdn: CdnChoice,
    bitrate: f64,
    top_bitrate: f64,
) -> Result<f64> {
    let baseline = cfg.local_intensity();
    if baseline.is_nan() || baseline <= 0.0 || top_bitrate.is_nan() || top_bitrate <= 0.0 {
        return Err(Error::Degenerate(
            "local full-quality path has zero incremental power".into(),
        ));
    }
    if bitrate.is_nan() || bitrate < 0.0 {
        return Err(Error::Argument(format!(
            "bitrate must be >= 0, got {bitrate}"
        )));
    }
    let ratio = bitrate / top_bitrate;
    match cdn {
        CdnChoice::Local | CdnChoice::NotApplicable => Ok(ci_local * ratio),
        CdnChoice::Remote => {
            let ci_remote = ci_remote.ok_or_else(|| {
                Error::Argument("remote CDN chosen without a remote carbon intensity".into())
            })?;
            let weighted =
                (cfg.access + cfg.core) * ci_local + (cfg.core + cfg.remote_dc) * ci_remote;
            Ok(weighted / baseline * ratio)
        }
    }
}

/// One planned day.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DayRecord {
    pub date: NaiveDate,
    pub ci_local: f64,
    pub ci_remote: Option<f64>,
    pub cdn: CdnChoice,
    pub tier: String,
    pub bitrate: f64,
    pub effective_intensity: f64,
    /// Budget after this day, gCO2e/kWh.
    pub budget: f64,
}

/// Utility totals for one user type.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileLoss {
    pub label: String,
    pub gamma: f64,
    /// Sum of per-day utility losses (uniform demand).
    pub total_utility_loss: f64,
    /// Mean per-day utility loss over the period.
    pub avg_monthly_utility_reduction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregates {
    pub period_days: usize,
    pub reduced_day_count: usize,
    /// Demand-weighted mean of `1 - x_day / x_top`.
    pub avg_bitrate_reduction: f64,
    pub profiles: Vec<ProfileLoss>,
}

/// Per-day demand weights.
#[derive(Debug, Clone, Copy)]
pub enum DemandWeights<'a> {
    /// `1 / D` on every day.
    Uniform,
    PerDay(&'a [f64]),
}

impl Aggregates {
    /// Aggregates a sequence of served tiers.
    pub fn compute(
        tiers: &[&QualityTier],
        settings: &PlanSettings,
        weights: DemandWeights<'_>,
    ) -> Result<Self> {
        let period = tiers.len();
        if period == 0 {
            return Err(Error::EmptyInput);
        }
        let top = settings.ladder.top();
        let reduced_day_count = tiers.iter().filter(|t| t.bitrate < top.bitrate).count();
        let cut = |t: &QualityTier| 1.0 - t.bitrate / top.bitrate;

        let avg_bitrate_reduction = match weights {
            DemandWeights::Uniform => tiers.iter().map(|t| cut(t)).sum::<f64>() / period as f64,
            DemandWeights::PerDay(w) => tiers.iter().zip(w).map(|(t, w)| w * cut(t)).sum(),
        };

        let mut profiles = Vec::with_capacity(settings.profiles.len());
        for p in &settings.profiles {
            let losses = tiers
                .iter()
                .map(|t| settings.day_loss(p, t))
                .collect::<Result<Vec<f64>>>()?;
            let (total, avg) = match weights {
                DemandWeights::Uniform => {
                    let total: f64 = losses.iter().sum();
                    (total, total / period as f64)
                }
                DemandWeights::PerDay(w) => {
                    let avg: f64 = losses.iter().zip(w).map(|(l, w)| l * w).sum();
                    (avg * period as f64, avg)
                }
            };
            profiles.push(ProfileLoss {
                label: p.label().to_string(),
                gamma: p.gamma(),
                total_utility_loss: total,
                avg_monthly_utility_reduction: avg,
            });
        }
        Ok(Self {
            period_days: period,
            reduced_day_count,
            avg_bitrate_reduction,
            profiles,
        })
    }

    pub fn profile(&self, label: &str) -> Option<&ProfileLoss> {
        self.profiles.iter().find(|p| p.label == label)
    }
}

/// A planned period: per-day decisions plus aggregate metrics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    pub cap: f64,
    pub dual_cdn: bool,
    pub days: Vec<DayRecord>,
    /// False when some day ends with a negative budget even after reduction.
    pub feasible: bool,
    pub infeasible_days: Vec<NaiveDate>,
    pub aggregates: Aggregates,
    pub settings: PlanSettings,
}

impl Schedule {
    pub fn period_days(&self) -> usize {
        self.days.len()
    }

    pub fn reduced_day_count(&self) -> usize {
        self.aggregates.reduced_day_count
    }

    /// Loss totals for any profile, computed like the schedule's own aggregates.
    pub fn loss_for(&self, profile: &UserProfile) -> Result<ProfileLoss> {
        let settings = PlanSettings {
            profiles: vec![profile.clone()],
            ..self.settings.clone()
        };
        let tiers = self.served_tiers()?;
        let mut agg = Aggregates::compute(&tiers, &settings, DemandWeights::Uniform)?;
        Ok(agg.profiles.remove(0))
    }

    fn served_tiers(&self) -> Result<Vec<&QualityTier>> {
        self.days
            .iter()
            .map(|d| {
                self.settings.ladder.tier(&d.tier).ok_or_else(|| {
                    Error::Argument(format!("{}: tier {} is not on the ladder", d.date, d.tier))
                })
            })
            .collect()
    }

    pub fn diagnostics(&self) -> Option<String> {
        if self.feasible {
            return None;
        }
        let min = self
            .days
            .iter()
            .map(|d| d.budget)
            .fold(f64::INFINITY, f64::min);
        let dates: Vec<String> = self.infeasible_days.iter().map(|d| d.to_string()).collect();
        Some(format!(
            "cap {} cannot be met with the {} strategy: budget stays negative after reducing on {} (minimum {min}); a lower tier would be required",
            self.cap,
            match &self.settings.strategy {
                ReductionStrategy::SingleTier { to } => format!("single-tier {}", to.name),
                ReductionStrategy::MixedFirstN { n, deep, rest } =>
                    format!("mixed {n}x{} then {}", deep.name, rest.name),
            },
            dates.join(", ")
        ))
    }
}

fn check_cap(cap: f64) -> Result<()> {
    if !(cap.is_finite() && cap > 0.0) {
        return Err(Error::Argument(format!(
            "carbon intensity cap must be finite and > 0, got {cap}"
        )));
    }
    Ok(())
}

/// Runs the forward budget pass over `local` (and `remote`, when given).
///
/// The budget starts at zero. Days that stay negative even at the reduced
/// tier are still reduced; the negative budget carries forward and the
/// schedule is marked infeasible.
pub fn plan(
    local: &CarbonIntensitySeries,
    remote: Option<&CarbonIntensitySeries>,
    path: &DualPathConfig,
    cap: f64,
    settings: &PlanSettings,
) -> Result<Schedule> {
    if local.is_empty() {
        return Err(Error::EmptyInput);
    }
    check_cap(cap)?;
    if let Some(r) = remote {
        local.check_aligned(r)?;
    }
    settings.strategy.validate(&settings.ladder)?;
    let top = settings.ladder.top();

    let mut budget = 0.0;
    let mut events = 0;
    let mut days = Vec::with_capacity(local.len());
    let mut infeasible_days = Vec::new();

    for (i, day) in local.days().iter().enumerate() {
        let ci_remote = remote.map(|r| r.days()[i].intensity);
        let cdn = match ci_remote {
            Some(ci_r) => select_cdn(path, day.intensity, ci_r),
            None => CdnChoice::NotApplicable,
        };
        let eff = |bitrate| {
            effective_intensity(path, day.intensity, ci_remote, cdn, bitrate, top.bitrate)
        };

        let full = eff(top.bitrate)?;
        let candidate = budget + cap - full;
        let (tier, effective) = if candidate >= 0.0 {
            budget = candidate;
            (top, full)
        } else {
            let tier = settings.strategy.tier_for_event(events);
            events += 1;
            let reduced = eff(tier.bitrate)?;
            budget += cap - reduced;
            if budget < 0.0 {
                infeasible_days.push(day.date);
            }
            (tier, reduced)
        };
        days.push(DayRecord {
            date: day.date,
            ci_local: day.intensity,
            ci_remote,
            cdn,
            tier: tier.name.clone(),
            bitrate: tier.bitrate,
            effective_intensity: effective,
            budget,
        });
    }

    let tiers: Vec<&QualityTier> = days
        .iter()
        .map(|d| {
            settings
                .ladder
                .tier(&d.tier)
                .expect("planned tiers come from the ladder")
        })
        .collect();
    let aggregates = Aggregates::compute(&tiers, settings, DemandWeights::Uniform)?;

    Ok(Schedule {
        cap,
        dual_cdn: remote.is_some(),
        days,
        feasible: infeasible_days.is_empty(),
        infeasible_days,
        aggregates,
        settings: settings.clone(),
    })
}

/// Recomputes a schedule's aggregates with per-day demand weights.
pub fn plan_metrics_weighted(schedule: &Schedule, weights: &[f64]) -> Result<Aggregates> {
    if weights.len() != schedule.days.len() {
        return Err(Error::Argument(format!(
            "{} demand weights for a {}-day schedule",
            weights.len(),
            schedule.days.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::Argument(format!(
            "demand weights must be >= 0, got {w}"
        )));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Argument(format!(
            "demand weights must sum to 1, got {sum}"
        )));
    }
    let tiers = schedule.served_tiers()?;
    Aggregates::compute(&tiers, &schedule.settings, DemandWeights::PerDay(weights))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapSweepRow {
    pub cap: f64,
    pub reduced_day_count: usize,
    pub avg_bitrate_reduction: f64,
    pub profiles: Vec<ProfileLoss>,
    pub feasible: bool,
}

/// One row per cap, highest cap first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapSweepResult {
    pub rows: Vec<CapSweepRow>,
}

impl CapSweepResult {
    /// Reduced-day counts never decrease as the cap tightens.
    pub fn is_monotone(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].reduced_day_count >= w[0].reduced_day_count)
    }
}

pub fn sweep_caps(
    local: &CarbonIntensitySeries,
    remote: Option<&CarbonIntensitySeries>,
    path: &DualPathConfig,
    caps: &[f64],
    settings: &PlanSettings,
) -> Result<CapSweepResult> {
    if caps.is_empty() {
        return Err(Error::Argument("cap sweep needs at least one cap".into()));
    }
    for &c in caps {
        check_cap(c)?;
    }
    let mut ordered = caps.to_vec();
    ordered.sort_by(|a, b| b.total_cmp(a));
    let rows = ordered
        .into_iter()
        .map(|cap| {
            let s = plan(local, remote, path, cap, settings)?;
            Ok(CapSweepRow {
                cap,
                reduced_day_count: s.aggregates.reduced_day_count,
                avg_bitrate_reduction: s.aggregates.avg_bitrate_reduction,
                profiles: s.aggregates.profiles,
                feasible: s.feasible,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CapSweepResult { rows })
}
