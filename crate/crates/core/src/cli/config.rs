use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Deserialize;

use crate::carbon::DualPathConfig;
use crate::energy::{Catalog, SegmentKind, SegmentProfile, CDN_SIZES};
use crate::scheduler::{PlanSettings, ReductionStrategy};
use crate::subscription::DEFAULT_REWARD_RATE;
use crate::utility::{QualityLadder, UserProfile};

/// A segment given either by catalog key or as an explicit W/Mbps figure.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum SegmentRef {
    Key(String),
    Value(f64),
}

impl SegmentRef {
    fn key(k: &str) -> Self {
        SegmentRef::Key(k.to_string())
    }

    pub fn label(&self) -> String {
        match self {
            SegmentRef::Key(k) => k.clone(),
            SegmentRef::Value(v) => format!("{v}W/Mbps"),
        }
    }

    fn resolve(&self, catalog: &Catalog, kind: SegmentKind) -> anyhow::Result<f64> {
        Ok(match self {
            SegmentRef::Key(k) => catalog.resolve(k, kind)?.intensity,
            SegmentRef::Value(v) => SegmentProfile::new(kind, "explicit", *v)?.intensity,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSpec {
    #[serde(default = "default_access")]
    pub access: SegmentRef,
    #[serde(default = "default_core")]
    pub core: SegmentRef,
    #[serde(default = "default_dc")]
    pub local_dc: SegmentRef,
    #[serde(default = "default_dc")]
    pub remote_dc: SegmentRef,
}

fn default_access() -> SegmentRef {
    SegmentRef::key("wired")
}

fn default_core() -> SegmentRef {
    SegmentRef::key("core")
}

fn default_dc() -> SegmentRef {
    SegmentRef::key("cdn-small")
}

impl Default for PathSpec {
    fn default() -> Self {
        Self {
            access: default_access(),
            core: default_core(),
            local_dc: default_dc(),
            remote_dc: default_dc(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomSegment {
    pub kind: SegmentKind,
    pub intensity: f64,
    #[serde(default)]
    pub label: Option<String>,
}

/// The JSON run configuration. Every field is optional; CLI flags override.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub ladder: Option<QualityLadder>,
    /// Extra catalog entries, keyed by the name used in `path` / `cdn_grid`.
    #[serde(default)]
    pub segments: BTreeMap<String, CustomSegment>,
    #[serde(default)]
    pub path: PathSpec,
    pub profiles: Option<Vec<UserProfile>>,
    #[serde(default)]
    pub caps: Vec<f64>,
    pub strategy: Option<String>,
    pub local_ci: Option<PathBuf>,
    pub remote_ci: Option<PathBuf>,
    pub local_region: Option<String>,
    pub remote_region: Option<String>,
    pub reward_rate: Option<f64>,
    pub loss_decimals: Option<u32>,
    pub out: Option<PathBuf>,
    /// Data-center sizes crossed for `cdn-days`.
    pub cdn_grid: Option<Vec<SegmentRef>>,
}

impl RunConfig {
    /// Reads a config file; relative CSV/output paths resolve against its directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.local_ci, &mut cfg.remote_ci, &mut cfg.out]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub local_ci: Option<PathBuf>,
    pub remote_ci: Option<PathBuf>,
    pub caps: Vec<f64>,
    pub strategy: Option<String>,
    pub out: Option<PathBuf>,
}

/// A validated run, ready for any command.
#[derive(Debug, Clone)]
pub struct Run {
    pub settings: PlanSettings,
    pub catalog: Catalog,
    pub path_spec: PathSpec,
    pub path: DualPathConfig,
    pub caps: Vec<f64>,
    pub local_ci: Option<PathBuf>,
    pub remote_ci: Option<PathBuf>,
    pub local_region: Option<String>,
    pub remote_region: Option<String>,
    pub reward_rate: f64,
    pub out: PathBuf,
    pub cdn_grid: Vec<(String, f64)>,
}

impl Run {
    pub fn resolve(cfg: RunConfig, over: Overrides) -> anyhow::Result<Self> {
        let ladder = cfg.ladder.unwrap_or_else(QualityLadder::uhd);
        let mut catalog = Catalog::builtin();
        for (key, seg) in &cfg.segments {
            let label = seg.label.clone().unwrap_or_else(|| key.clone());
            catalog.add(
                key.clone(),
                SegmentProfile::new(seg.kind, label, seg.intensity)?,
            )?;
        }
        let spec = cfg.path;
        let path = DualPathConfig::new(
            spec.access.resolve(&catalog, SegmentKind::Access)?,
            spec.core.resolve(&catalog, SegmentKind::Core)?,
            spec.local_dc.resolve(&catalog, SegmentKind::DataCenter)?,
            spec.remote_dc.resolve(&catalog, SegmentKind::DataCenter)?,
        )?;

        let strategy_spec = over
            .strategy
            .or(cfg.strategy)
            .unwrap_or_else(|| "single-fhd".into());
        let strategy = ReductionStrategy::parse(&strategy_spec, &ladder)?;
        let profiles = cfg
            .profiles
            .unwrap_or_else(|| vec![UserProfile::high_quality(), UserProfile::green()]);
        for (i, p) in profiles.iter().enumerate() {
            if profiles[..i].iter().any(|q| q.label() == p.label()) {
                bail!("duplicate profile label {}", p.label());
            }
        }
        let settings =
            PlanSettings::new(ladder, strategy, profiles)?.with_loss_decimals(cfg.loss_decimals);

        let caps = if over.caps.is_empty() {
            cfg.caps
        } else {
            over.caps
        };
        if let Some(c) = caps.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
            bail!("caps must be positive, got {c}");
        }
        let reward_rate = cfg.reward_rate.unwrap_or(DEFAULT_REWARD_RATE);
        if !(reward_rate.is_finite() && reward_rate >= 0.0) {
            bail!("reward_rate must be >= 0, got {reward_rate}");
        }

        let grid = cfg
            .cdn_grid
            .unwrap_or_else(|| CDN_SIZES.iter().map(|k| SegmentRef::key(k)).collect());
        let cdn_grid = grid
            .iter()
            .map(|r| Ok((r.label(), r.resolve(&catalog, SegmentKind::DataCenter)?)))
            .collect::<anyhow::Result<Vec<_>>>()?;

        Ok(Self {
            settings,
            catalog,
            path_spec: spec,
            path,
            caps,
            local_ci: over.local_ci.or(cfg.local_ci),
            remote_ci: over.remote_ci.or(cfg.remote_ci),
            local_region: cfg.local_region,
            remote_region: cfg.remote_region,
            reward_rate,
            out: over.out.or(cfg.out).unwrap_or_else(|| PathBuf::from(".")),
            cdn_grid,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve() {
        let run = Run::resolve(RunConfig::default(), Overrides::default()).unwrap();
        assert_eq!(
            run.path,
            DualPathConfig::new(0.02, 0.03, 0.09, 0.09).unwrap()
        );
        assert_eq!(run.settings.profiles.len(), 2);
        assert_eq!(run.cdn_grid.len(), 4);
        assert_eq!(run.reward_rate, DEFAULT_REWARD_RATE);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"capz":[280]}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"path":{"acess":"wired"}}"#).is_err());
    }

    #[test]
    fn explicit_and_custom_segments() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{
                "segments": {"edge": {"kind": "data_center", "intensity": 0.07}},
                "path": {"access": 0.5, "local_dc": "edge", "remote_dc": "cdn-very-large"},
                "cdn_grid": ["edge", 0.2]
            }"#,
        )
        .unwrap();
        let run = Run::resolve(cfg, Overrides::default()).unwrap();
        assert_eq!(
            run.path,
            DualPathConfig::new(0.5, 0.03, 0.07, 0.01).unwrap()
        );
        assert_eq!(run.cdn_grid[0], ("edge".to_string(), 0.07));
        assert_eq!(run.cdn_grid[1].1, 0.2);
    }

    #[test]
    fn wrong_kind_or_bad_values() {
        let bad = |json: &str| {
            let cfg: RunConfig = serde_json::from_str(json).unwrap();
            Run::resolve(cfg, Overrides::default()).is_err()
        };
        assert!(bad(r#"{"path": {"access": "cdn-small"}}"#));
        assert!(bad(r#"{"path": {"core": -1.0}}"#));
        assert!(bad(r#"{"caps": [280, 0]}"#));
        assert!(bad(r#"{"strategy": "single-4k"}"#));
        assert!(bad(r#"{"reward_rate": -5}"#));
        assert!(bad(
            r#"{"profiles": [{"label":"a","gamma":1},{"label":"a","gamma":2}]}"#
        ));
    }

    #[test]
    fn overrides_win() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"caps": [280], "strategy": "single-hd"}"#).unwrap();
        let over = Overrides {
            caps: vec![200.0, 160.0],
            strategy: Some("mixed:2:HD:FHD".into()),
            ..Default::default()
        };
        let run = Run::resolve(cfg, over).unwrap();
        assert_eq!(run.caps, vec![200.0, 160.0]);
        assert!(run.settings.strategy.single_target().is_none());
    }
}
