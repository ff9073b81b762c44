//! MOS-based user utility for video streaming.
//!
//! The opinion score is logarithmic in bitrate between a floor `x_min`
//! (MOS 1) and a saturation point `x_max / gamma` (MOS 5). A user's
//! greenness factor `gamma >= 1` moves the saturation point down: a green
//! user is fully satisfied at a lower bitrate than a high-quality user.
//! Scores are clamped to `[1, 5]`, so utility (MOS / 5) lives in `[0.2, 1]`.
//!
//! The logarithm base cancels in the ratio; natural log is used throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MOS_MIN: f64 = 1.0;
pub const MOS_MAX: f64 = 5.0;

/// A named resolution tier and its streaming bitrate in Mbps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityTier {
    pub name: String,
    pub bitrate: f64,
}

impl QualityTier {
    pub fn new(name: impl Into<String>, bitrate: f64) -> Result<Self> {
        let name = name.into();
        if !(bitrate.is_finite() && bitrate > 0.0) {
            return Err(Error::Config(format!(
                "tier {name}: bitrate must be finite and positive, got {bitrate}"
            )));
        }
        Ok(Self { name, bitrate })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLadder {
    tiers: Vec<QualityTier>,
    x_min: f64,
}

/// Ordered resolution tiers (highest bitrate first) plus the MOS floor bitrate.
///
/// The top tier's bitrate is `x_max`, the bitrate at which a high-quality user
/// reaches MOS 5. A smartphone ladder is simply one whose top tier is FHD.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLadder")]
pub struct QualityLadder {
    tiers: Vec<QualityTier>,
    x_min: f64,
}

impl TryFrom<RawLadder> for QualityLadder {
    type Error = Error;

    fn try_from(raw: RawLadder) -> Result<Self> {
        QualityLadder::new(raw.tiers, raw.x_min)
    }
}

impl QualityLadder {
    pub fn new(tiers: Vec<QualityTier>, x_min: f64) -> Result<Self> {
        if tiers.is_empty() {
            return Err(Error::Config("ladder has no tiers".into()));
        }
        if !(x_min.is_finite() && x_min > 0.0) {
            return Err(Error::Config(format!(
                "x_min must be finite and positive, got {x_min}"
            )));
        }
        for tier in &tiers {
            QualityTier::new(tier.name.clone(), tier.bitrate)?;
        }
        for pair in tiers.windows(2) {
            if pair[1].bitrate >= pair[0].bitrate {
                return Err(Error::Config(format!(
                    "tiers must be strictly descending in bitrate: {} ({}) then {} ({})",
                    pair[0].name, pair[0].bitrate, pair[1].name, pair[1].bitrate
                )));
            }
        }
        for (i, a) in tiers.iter().enumerate() {
            if tiers[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::Config(format!("duplicate tier name {}", a.name)));
            }
        }
        let last = &tiers[tiers.len() - 1];
        if x_min >= last.bitrate {
            return Err(Error::Config(format!(
                "x_min ({x_min}) must be below the lowest tier bitrate ({})",
                last.bitrate
            )));
        }
        Ok(Self { tiers, x_min })
    }

    /// 4K (20 Mbps), FHD (8 Mbps), HD (2.5 Mbps) with a 0.2 Mbps floor.
    pub fn uhd() -> Self {
        Self::new(
            vec![
                QualityTier::new("4K", 20.0).unwrap(),
                QualityTier::new("FHD", 8.0).unwrap(),
                QualityTier::new("HD", 2.5).unwrap(),
            ],
            0.2,
        )
        .expect("built-in ladder is valid")
    }

    pub fn tiers(&self) -> &[QualityTier] {
        &self.tiers
    }

    pub fn top(&self) -> &QualityTier {
        &self.tiers[0]
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.tiers[0].bitrate
    }

    /// Case-insensitive lookup by tier name.
    pub fn tier(&self, name: &str) -> Option<&QualityTier> {
        self.tiers
            .iter()
            .find(|t| t.name.eq_ignore_ascii_case(name))
    }

    pub fn contains(&self, tier: &QualityTier) -> bool {
        self.tiers.iter().any(|t| t == tier)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    label: String,
    gamma: f64,
}

/// A user type, characterised by its greenness factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile")]
pub struct UserProfile {
    label: String,
    gamma: f64,
}

impl TryFrom<RawProfile> for UserProfile {
    type Error = Error;

    fn try_from(raw: RawProfile) -> Result<Self> {
        UserProfile::new(raw.label, raw.gamma)
    }
}

impl UserProfile {
    pub fn new(label: impl Into<String>, gamma: f64) -> Result<Self> {
        let label = label.into();
        if !(gamma.is_finite() && gamma >= 1.0) {
            return Err(Error::Config(format!(
                "profile {label}: greenness factor must be finite and >= 1, got {gamma}"
            )));
        }
        Ok(Self { label, gamma })
    }

    pub fn high_quality() -> Self {
        Self::new("high-quality", 1.0).unwrap()
    }

    pub fn green() -> Self {
        Self::new("green", 1.5).unwrap()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// `ln(x'_max / x_min)` for this user, rejecting ladders where the shifted
/// saturation point falls to or below the floor.
fn log_span(ladder: &QualityLadder, profile: &UserProfile) -> Result<f64> {
    let saturation = ladder.x_max() / profile.gamma;
    if saturation <= ladder.x_min {
        return Err(Error::Config(format!(
            "x_max / gamma = {saturation} Mbps is not above x_min = {} Mbps",
            ladder.x_min
        )));
    }
    Ok((saturation / ladder.x_min).ln())
}

fn check_bitrate(bitrate: f64, ladder: &QualityLadder) -> Result<()> {
    if bitrate.is_nan() || bitrate < ladder.x_min {
        return Err(Error::Domain(format!(
            "bitrate {bitrate} Mbps is below the ladder minimum {} Mbps",
            ladder.x_min
        )));
    }
    Ok(())
}

/// Mean opinion score in `[1, 5]`.
pub fn mos(bitrate: f64, ladder: &QualityLadder, profile: &UserProfile) -> Result<f64> {
    check_bitrate(bitrate, ladder)?;
    let span = log_span(ladder, profile)?;
    if bitrate.is_infinite() {
        return Ok(MOS_MAX);
    }
    // 4 ln(x) / (ln x'_max - ln x_min) + (ln x'_max - 5 ln x_min) / (ln x'_max - ln x_min),
    // rearranged to 1 + 4 ln(x / x_min) / ln(x'_max / x_min).
    let raw = MOS_MIN + (MOS_MAX - MOS_MIN) * (bitrate / ladder.x_min).ln() / span;
    Ok(raw.clamp(MOS_MIN, MOS_MAX))
}

/// Normalised utility `MOS / 5`, in `[0.2, 1]`.
pub fn utility(bitrate: f64, ladder: &QualityLadder, profile: &UserProfile) -> Result<f64> {
    Ok(mos(bitrate, ladder, profile)? / MOS_MAX)
}

/// Lowest bitrate at which this user's utility reaches `target`.
///
/// Defined for `target` in `[0.2, 1]`; utility 1 is reached at `x_max / gamma`.
pub fn bitrate_for_utility(
    target: f64,
    ladder: &QualityLadder,
    profile: &UserProfile,
) -> Result<f64> {
    let lo = MOS_MIN / MOS_MAX;
    if !(lo..=1.0).contains(&target) {
        return Err(Error::Domain(format!(
            "utility {target} is outside [{lo}, 1]"
        )));
    }
    let span = log_span(ladder, profile)?;
    let t = (target * MOS_MAX - MOS_MIN) / (MOS_MAX - MOS_MIN);
    Ok(ladder.x_min * (t * span).exp())
}

/// Utility lost by stepping down from `from` to `to`.
pub fn utility_loss(
    from: &QualityTier,
    to: &QualityTier,
    ladder: &QualityLadder,
    profile: &UserProfile,
) -> Result<f64> {
    if from.bitrate < to.bitrate {
        return Err(Error::Argument(format!(
            "cannot step down from {} ({} Mbps) to a higher tier {} ({} Mbps)",
            from.name, from.bitrate, to.name, to.bitrate
        )));
    }
    let loss = utility(from.bitrate, ladder, profile)? - utility(to.bitrate, ladder, profile)?;
    Ok(loss.max(0.0))
}

/// Utility loss remaining after a discount: `delta_u - discount`.
///
/// Both sides are read on the same normalised `[0, 1]` scale. A negative
/// result means the discount more than covers the loss.
pub fn net_utility_loss(delta_u: f64, discount: f64) -> Result<f64> {
    if !(delta_u.is_finite() && delta_u >= 0.0) {
        return Err(Error::Argument(format!(
            "utility loss must be finite and >= 0, got {delta_u}"
        )));
    }
    if !(0.0..=1.0).contains(&discount) {
        return Err(Error::Argument(format!(
            "discount must be a fraction in [0, 1], got {discount}"
        )));
    }
    Ok(delta_u - discount)
}
