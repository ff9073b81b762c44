//! Two-tier subscription terms derived from a schedule.
//!
//! The offer lets the provider serve up to a fixed fraction of a period's
//! videos one tier down. In exchange the user gets a discount proportional to
//! the average bitrate reduction (identical for every user type) plus carbon
//! reward points covering whatever utility loss the discount leaves over.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scheduler::Schedule;
use crate::utility::{net_utility_loss, QualityTier, UserProfile};

pub const DEFAULT_REWARD_RATE: f64 = 100.0;

/// Attached to every plan: the discount is computed from incremental energy
/// only, so it overstates what idle-dominated equipment actually saves.
pub const IDLE_ENERGY_ADVISORY: &str = "discount is proportional to the average bitrate reduction, which tracks incremental (traffic-dependent) energy only; idle consumption of network devices and data centers is unaffected, so the cost saving actually realised is smaller";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoTierPlan {
    pub profile: UserProfile,
    pub period_days: usize,
    pub reduced_days: usize,
    /// Upper bound on the fraction of videos served at `reduced_tier`.
    pub max_reduced_fraction: f64,
    pub reduced_tier: QualityTier,
    /// Fraction of the full-quality subscription price.
    pub discount_fraction: f64,
    pub total_utility_loss: f64,
    /// `total_utility_loss - discount_fraction`; negative when the discount over-compensates.
    pub net_utility_loss: f64,
    /// Points per unit of net utility loss.
    pub reward_rate: f64,
    pub rewards: f64,
    pub advisory: &'static str,
}

fn check_reward_rate(rate: f64) -> Result<()> {
    if !(rate.is_finite() && rate >= 0.0) {
        return Err(Error::Config(format!(
            "reward rate must be finite and >= 0, got {rate}"
        )));
    }
    Ok(())
}

/// Derives the subscription terms a `profile` user needs for `schedule`.
///
/// Only single-tier schedules qualify: the offer has exactly two tiers.
pub fn synthesize(
    schedule: &Schedule,
    profile: &UserProfile,
    reward_rate: f64,
) -> Result<TwoTierPlan> {
    check_reward_rate(reward_rate)?;
    if !schedule.feasible {
        return Err(Error::Argument(
            schedule
                .diagnostics()
                .unwrap_or_else(|| "schedule is infeasible".into()),
        ));
    }
    let reduced_tier = schedule
        .settings
        .strategy
        .single_target()
        .ok_or_else(|| {
            Error::Argument(
                "a two-tier subscription needs a single reduced tier; plan with a single-tier strategy (e.g. single-fhd)".into(),
            )
        })?
        .clone();

    let period_days = schedule.period_days();
    let reduced_days = schedule.reduced_day_count();
    let discount_fraction = schedule.aggregates.avg_bitrate_reduction;
    let total_utility_loss = schedule.loss_for(profile)?.total_utility_loss;
    let net = net_utility_loss(total_utility_loss, discount_fraction)?;
    Ok(TwoTierPlan {
        profile: profile.clone(),
        period_days,
        reduced_days,
        max_reduced_fraction: reduced_days as f64 / period_days as f64,
        reduced_tier,
        discount_fraction,
        total_utility_loss,
        net_utility_loss: net,
        reward_rate,
        rewards: reward_rate * net.max(0.0),
        advisory: IDLE_ENERGY_ADVISORY,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiMonthPlan {
    pub months: Vec<TwoTierPlan>,
    pub total_days: usize,
    pub reduced_days: usize,
    pub max_reduced_fraction: f64,
    /// Day-weighted mean of the monthly discounts.
    pub discount_fraction: f64,
    pub total_utility_loss: f64,
    pub total_rewards: f64,
}

/// Combines per-month plans for the same user type and reduced tier.
pub fn aggregate_months(plans: &[TwoTierPlan]) -> Result<MultiMonthPlan> {
    let first = plans
        .first()
        .ok_or_else(|| Error::Argument("no monthly plans to aggregate".into()))?;
    for p in &plans[1..] {
        if p.reduced_tier != first.reduced_tier {
            return Err(Error::Argument(format!(
                "inconsistent reduced tiers: {} and {}",
                first.reduced_tier.name, p.reduced_tier.name
            )));
        }
        if p.profile != first.profile {
            return Err(Error::Argument(format!(
                "plans are for different user types: {} and {}",
                first.profile.label(),
                p.profile.label()
            )));
        }
    }
    let total_days: usize = plans.iter().map(|p| p.period_days).sum();
    let reduced_days: usize = plans.iter().map(|p| p.reduced_days).sum();
    let discount = plans
        .iter()
        .map(|p| p.discount_fraction * p.period_days as f64)
        .sum::<f64>()
        / total_days as f64;
    Ok(MultiMonthPlan {
        months: plans.to_vec(),
        total_days,
        reduced_days,
        max_reduced_fraction: reduced_days as f64 / total_days as f64,
        discount_fraction: discount,
        total_utility_loss: plans.iter().map(|p| p.total_utility_loss).sum(),
        total_rewards: plans.iter().map(|p| p.rewards).sum(),
    })
}
