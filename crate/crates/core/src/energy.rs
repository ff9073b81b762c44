//! Incremental (traffic-dependent) power of the end-to-end delivery path.
//!
//! Each segment is characterised by W per Mbps. Idle power is not modelled:
//! it does not change with bitrate, so it cannot be saved by a quality
//! reduction. It does shrink the real-world discount a provider can pass on.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::utility::QualityTier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Access,
    Core,
    DataCenter,
}

impl fmt::Display for SegmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SegmentKind::Access => "access",
            SegmentKind::Core => "core",
            SegmentKind::DataCenter => "data_center",
        })
    }
}

/// One segment of a delivery path and its incremental energy intensity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentProfile {
    pub kind: SegmentKind,
    pub label: String,
    /// W per Mbps.
    pub intensity: f64,
}

impl SegmentProfile {
    pub fn new(kind: SegmentKind, label: impl Into<String>, intensity: f64) -> Result<Self> {
        let label = label.into();
        if !(intensity.is_finite() && intensity >= 0.0) {
            return Err(Error::Config(format!(
                "segment {label}: intensity must be finite and >= 0 W/Mbps, got {intensity}"
            )));
        }
        Ok(Self {
            kind,
            label,
            intensity,
        })
    }
}

/// Access, core and data-center segments of one end-to-end path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathProfile {
    access: SegmentProfile,
    core: SegmentProfile,
    data_center: SegmentProfile,
}

impl PathProfile {
    pub fn new(
        access: SegmentProfile,
        core: SegmentProfile,
        data_center: SegmentProfile,
    ) -> Result<Self> {
        for (seg, want) in [
            (&access, SegmentKind::Access),
            (&core, SegmentKind::Core),
            (&data_center, SegmentKind::DataCenter),
        ] {
            if seg.kind != want {
                return Err(Error::Config(format!(
                    "segment {} is a {} segment, expected {want}",
                    seg.label, seg.kind
                )));
            }
        }
        Ok(Self {
            access,
            core,
            data_center,
        })
    }

    pub fn access(&self) -> &SegmentProfile {
        &self.access
    }

    pub fn core(&self) -> &SegmentProfile {
        &self.core
    }

    pub fn data_center(&self) -> &SegmentProfile {
        &self.data_center
    }

    /// `a + c + d` in W/Mbps.
    pub fn intensity(&self) -> f64 {
        self.access.intensity + self.core.intensity + self.data_center.intensity
    }
}

/// Per-segment split of a power figure in W.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentBreakdown {
    pub access: f64,
    pub core: f64,
    pub data_center: f64,
}

impl SegmentBreakdown {
    pub fn total(&self) -> f64 {
        self.access + self.core + self.data_center
    }
}

/// Traffic-dependent power of the whole path at `bitrate` Mbps.
pub fn path_power(path: &PathProfile, bitrate: f64) -> Result<f64> {
    if bitrate.is_nan() || bitrate < 0.0 {
        return Err(Error::Argument(format!(
            "bitrate must be >= 0 Mbps, got {bitrate}"
        )));
    }
    Ok(path.intensity() * bitrate)
}

/// Power saved on each segment by stepping down from `from` to `to`.
pub fn energy_reduction(
    path: &PathProfile,
    from: &QualityTier,
    to: &QualityTier,
) -> Result<SegmentBreakdown> {
    if from.bitrate < to.bitrate {
        return Err(Error::Argument(format!(
            "cannot step down from {} ({} Mbps) to a higher tier {} ({} Mbps)",
            from.name, from.bitrate, to.name, to.bitrate
        )));
    }
    let delta = from.bitrate - to.bitrate;
    Ok(SegmentBreakdown {
        access: path.access.intensity * delta,
        core: path.core.intensity * delta,
        data_center: path.data_center.intensity * delta,
    })
}

/// Fraction of any bitrate-driven saving attributable to each segment.
///
/// Bitrate-independent, since power is linear in bitrate.
pub fn segment_shares(path: &PathProfile) -> Result<SegmentBreakdown> {
    let total = path.intensity();
    if total <= 0.0 {
        return Err(Error::Degenerate(
            "all path segments have zero incremental energy".into(),
        ));
    }
    Ok(SegmentBreakdown {
        access: path.access.intensity / total,
        core: path.core.intensity / total,
        data_center: path.data_center.intensity / total,
    })
}

/// Reference incremental-energy figures, keyed by a short identifier.
pub const BUILTIN_SEGMENTS: &[(&str, SegmentKind, &str, f64)] = &[
    ("core", SegmentKind::Core, "Core network", 0.03),
    ("wired", SegmentKind::Access, "Wired access", 0.02),
    (
        "4g-suburban",
        SegmentKind::Access,
        "4G access (suburban)",
        1.5,
    ),
    (
        "4g-dense-urban",
        SegmentKind::Access,
        "4G access (dense urban)",
        8.86,
    ),
    (
        "4g-wilderness-to-urban",
        SegmentKind::Access,
        "4G access (wilderness-to-urban)",
        14.9,
    ),
    (
        "5g-dense-urban",
        SegmentKind::Access,
        "5G access (dense urban)",
        4.2,
    ),
    (
        "5g-wilderness-to-urban",
        SegmentKind::Access,
        "5G access (wilderness-to-urban)",
        6.3,
    ),
    ("6g", SegmentKind::Access, "6G access", 0.42),
    (
        "cdn-very-large",
        SegmentKind::DataCenter,
        "Very large CDN",
        0.01,
    ),
    ("cdn-large", SegmentKind::DataCenter, "Large CDN", 0.025),
    ("cdn-medium", SegmentKind::DataCenter, "Medium CDN", 0.05),
    ("cdn-small", SegmentKind::DataCenter, "Small CDN", 0.09),
];

/// CDN sizes from largest to smallest.
pub const CDN_SIZES: [&str; 4] = ["cdn-very-large", "cdn-large", "cdn-medium", "cdn-small"];

/// Segment lookup by key: the built-in figures plus any user additions.
///
/// User entries shadow nothing; a key that collides with a built-in is rejected.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    custom: BTreeMap<String, SegmentProfile>,
}

impl Catalog {
    pub fn builtin() -> Self {
        Self::default()
    }

    pub fn add(&mut self, key: impl Into<String>, segment: SegmentProfile) -> Result<()> {
        let key = key.into();
        if self.get(&key).is_some() {
            return Err(Error::Config(format!(
                "segment key {key} is already defined"
            )));
        }
        self.custom.insert(key, segment);
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<SegmentProfile> {
        BUILTIN_SEGMENTS
            .iter()
            .find(|(k, ..)| *k == key)
            .map(|&(_, kind, label, w)| SegmentProfile {
                kind,
                label: label.to_string(),
                intensity: w,
            })
            .or_else(|| self.custom.get(key).cloned())
    }

    /// Like [`Catalog::get`] but also checks the segment kind.
    pub fn resolve(&self, key: &str, kind: SegmentKind) -> Result<SegmentProfile> {
        let seg = self
            .get(key)
            .ok_or_else(|| Error::Config(format!("unknown segment {key}")))?;
        if seg.kind != kind {
            return Err(Error::Config(format!(
                "segment {key} is a {} segment, expected {kind}",
                seg.kind
            )));
        }
        Ok(seg)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        BUILTIN_SEGMENTS
            .iter()
            .map(|(k, ..)| *k)
            .chain(self.custom.keys().map(String::as_str))
    }

    pub fn path(&self, access: &str, core: &str, data_center: &str) -> Result<PathProfile> {
        PathProfile::new(
            self.resolve(access, SegmentKind::Access)?,
            self.resolve(core, SegmentKind::Core)?,
            self.resolve(data_center, SegmentKind::DataCenter)?,
        )
    }
}
