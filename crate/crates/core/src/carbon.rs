//! Daily grid carbon intensity and local-vs-remote data center selection.
//!
//! Units: segment intensities in W/Mbps, bitrates in Mbps, grid carbon
//! intensity in gCO2e/kWh. `W/Mbps * Mbps = W`; dividing by 1000 gives kW,
//! and `kW * gCO2e/kWh = gCO2e/h`. All unit conversion happens here.

use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::energy::PathProfile;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 2] = ["date", "carbon_intensity_gco2eq_per_kwh"];

const W_PER_KW: f64 = 1000.0;

/// One day's average grid carbon intensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DailyIntensity {
    pub date: NaiveDate,
    /// gCO2e/kWh
    pub intensity: f64,
}

/// Contiguous per-day carbon intensity for one region.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CarbonIntensitySeries {
    region: String,
    days: Vec<DailyIntensity>,
}

impl CarbonIntensitySeries {
    /// Dates must be strictly increasing with no gaps; intensities finite and >= 0.
    pub fn new(region: impl Into<String>, days: Vec<DailyIntensity>) -> Result<Self> {
        for d in &days {
            check_intensity(d.intensity)
                .map_err(|m| Error::Argument(format!("{}: {m}", d.date)))?;
        }
        for pair in days.windows(2) {
            check_successor(pair[0].date, pair[1].date).map_err(Error::Argument)?;
        }
        Ok(Self {
            region: region.into(),
            days,
        })
    }

    pub fn region(&self) -> &str {
        &self.region
    }

    pub fn days(&self) -> &[DailyIntensity] {
        &self.days
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn intensities(&self) -> impl Iterator<Item = f64> + '_ {
        self.days.iter().map(|d| d.intensity)
    }

    /// Both series must cover exactly the same dates.
    pub fn check_aligned(&self, other: &CarbonIntensitySeries) -> Result<()> {
        if self.days.len() != other.days.len() {
            return Err(Error::Argument(format!(
                "series {} has {} days but {} has {}",
                self.region,
                self.days.len(),
                other.region,
                other.days.len()
            )));
        }
        if let Some((a, b)) = self
            .days
            .iter()
            .zip(&other.days)
            .find(|(a, b)| a.date != b.date)
        {
            return Err(Error::Argument(format!(
                "series are misaligned: {} has {} where {} has {}",
                self.region, a.date, other.region, b.date
            )));
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = CSV_HEADER.join(",");
        out.push('\n');
        for d in &self.days {
            out.push_str(&format!("{},{}\n", d.date, d.intensity));
        }
        out
    }
}

fn check_intensity(v: f64) -> std::result::Result<(), String> {
    if !v.is_finite() {
        return Err(format!("carbon intensity must be finite, got {v}"));
    }
    if v < 0.0 {
        return Err(format!("carbon intensity must be >= 0, got {v}"));
    }
    Ok(())
}

fn check_successor(prev: NaiveDate, next: NaiveDate) -> std::result::Result<(), String> {
    if next <= prev {
        return Err(format!(
            "date {next} does not follow {prev} (dates must be strictly increasing)"
        ));
    }
    if prev.succ_opt() != Some(next) {
        return Err(format!("gap in series between {prev} and {next}"));
    }
    Ok(())
}

/// Parses a `date,carbon_intensity_gco2eq_per_kwh` CSV with ISO-8601 dates,
/// one row per consecutive day.
pub fn parse_intensity_csv(
    bytes: &[u8],
    region: impl Into<String>,
) -> Result<CarbonIntensitySeries> {
    let bytes = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes);
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Err(Error::EmptyInput);
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(bytes);

    let mut days: Vec<DailyIntensity> = Vec::new();
    let mut saw_header = false;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if !saw_header {
            if record.len() != 2 || record.iter().ne(CSV_HEADER) {
                return Err(Error::parse(
                    line,
                    format!("expected header `{}`", CSV_HEADER.join(",")),
                ));
            }
            saw_header = true;
            continue;
        }
        if record.len() != 2 {
            return Err(Error::parse(
                line,
                format!("expected 2 fields, found {}", record.len()),
            ));
        }
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
            .map_err(|e| Error::parse(line, format!("invalid date {:?}: {e}", &record[0])))?;
        let intensity: f64 = record[1].parse().map_err(|_| {
            Error::parse(line, format!("invalid carbon intensity {:?}", &record[1]))
        })?;
        check_intensity(intensity).map_err(|m| Error::parse(line, m))?;
        if let Some(prev) = days.last() {
            check_successor(prev.date, date).map_err(|m| Error::parse(line, m))?;
        }
        days.push(DailyIntensity { date, intensity });
    }
    if days.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(CarbonIntensitySeries {
        region: region.into(),
        days,
    })
}

/// Incremental energy of a path that may be served locally or remotely.
///
/// Remote serving traverses the core twice: once on the user's side (local
/// grid) and once on the data center's side (remote grid).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualPathConfig {
    /// `a`, W/Mbps
    pub access: f64,
    /// `c`, W/Mbps
    pub core: f64,
    /// `d_l`, W/Mbps
    pub local_dc: f64,
    /// `d_r`, W/Mbps
    pub remote_dc: f64,
}

impl DualPathConfig {
    pub fn new(access: f64, core: f64, local_dc: f64, remote_dc: f64) -> Result<Self> {
        for (name, v) in [
            ("access", access),
            ("core", core),
            ("local_dc", local_dc),
            ("remote_dc", remote_dc),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!(
                    "{name} intensity must be finite and >= 0 W/Mbps, got {v}"
                )));
            }
        }
        Ok(Self {
            access,
            core,
            local_dc,
            remote_dc,
        })
    }

    /// Uses the path's data center as the local one.
    pub fn from_path(path: &PathProfile, remote_dc: f64) -> Result<Self> {
        Self::new(
            path.access().intensity,
            path.core().intensity,
            path.data_center().intensity,
            remote_dc,
        )
    }

    /// `a + c + d_l`: the local full path, W/Mbps.
    pub fn local_intensity(&self) -> f64 {
        self.access + self.core + self.local_dc
    }
}

fn check_non_negative(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::Argument(format!(
            "{name} must be finite and >= 0, got {v}"
        )));
    }
    Ok(())
}

/// Emission rate (gCO2e/h) when the local data center serves the stream.
pub fn local_emission_rate(cfg: &DualPathConfig, ci_local: f64, bitrate: f64) -> Result<f64> {
    check_non_negative("local carbon intensity", ci_local)?;
    check_non_negative("bitrate", bitrate)?;
    Ok(cfg.local_intensity() * bitrate * ci_local / W_PER_KW)
}

/// Emission rate (gCO2e/h) when the remote data center serves the stream.
pub fn remote_emission_rate(
    cfg: &DualPathConfig,
    ci_local: f64,
    ci_remote: f64,
    bitrate: f64,
) -> Result<f64> {
    check_non_negative("local carbon intensity", ci_local)?;
    check_non_negative("remote carbon intensity", ci_remote)?;
    check_non_negative("bitrate", bitrate)?;
    let user_side = (cfg.access + cfg.core) * ci_local;
    let dc_side = (cfg.core + cfg.remote_dc) * ci_remote;
    Ok((user_side + dc_side) * bitrate / W_PER_KW)
}

/// `d_l / (c + d_r)`: remote wins on days whose intensity ratio
/// `CI_r / CI_l` is strictly below this. Infinite when `c + d_r = 0`.
pub fn selection_threshold(cfg: &DualPathConfig) -> f64 {
    cfg.local_dc / (cfg.core + cfg.remote_dc)
}

/// True iff serving from the remote data center emits strictly less.
///
/// The access network contributes equally to both options and drops out.
/// Ties go to the local data center, as does `ci_local == 0`.
pub fn remote_preferred(cfg: &DualPathConfig, ci_local: f64, ci_remote: f64) -> bool {
    if ci_local.is_nan() || ci_local <= 0.0 {
        return false;
    }
    // CI_r / CI_l < d_l / (c + d_r), cross-multiplied to stay finite.
    (cfg.core + cfg.remote_dc) * ci_remote < cfg.local_dc * ci_local
}

/// Which data center serves a day's streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CdnChoice {
    Local,
    Remote,
    /// Single-CDN planning: there is no choice to make.
    #[serde(rename = "n/a")]
    NotApplicable,
}

impl CdnChoice {
    pub fn as_str(&self) -> &'static str {
        match self {
            CdnChoice::Local => "local",
            CdnChoice::Remote => "remote",
            CdnChoice::NotApplicable => "n/a",
        }
    }
}

impl fmt::Display for CdnChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for CdnChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "local" => Ok(CdnChoice::Local),
            "remote" => Ok(CdnChoice::Remote),
            "n/a" => Ok(CdnChoice::NotApplicable),
            other => Err(Error::Argument(format!("unknown CDN choice {other:?}"))),
        }
    }
}

pub fn select_cdn(cfg: &DualPathConfig, ci_local: f64, ci_remote: f64) -> CdnChoice {
    if remote_preferred(cfg, ci_local, ci_remote) {
        CdnChoice::Remote
    } else {
        CdnChoice::Local
    }
}

/// Number of days on which the remote data center is the lower-carbon choice.
pub fn count_remote_days(
    local: &CarbonIntensitySeries,
    remote: &CarbonIntensitySeries,
    cfg: &DualPathConfig,
) -> Result<usize> {
    local.check_aligned(remote)?;
    Ok(local
        .days
        .iter()
        .zip(&remote.days)
        .filter(|(l, r)| remote_preferred(cfg, l.intensity, r.intensity))
        .count())
}
