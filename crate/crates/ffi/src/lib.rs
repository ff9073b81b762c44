//! C ABI for the greenstream planner.
//!
//! Every fallible call returns a [`GsStatus`]; on anything but `GS_STATUS_OK` the
//! message is available from [`gs_last_error`] on the same thread. Handles
//! (`GsSeries`, `GsSchedule`) are opaque and must be released with their
//! `_free` function. Strings returned by the library are released with
//! [`gs_string_free`].
//!
//! The quality ladder is fixed to 4K (20 Mbps) / FHD (8) / HD (2.5) with a
//! 0.2 Mbps floor; tiers are named case-insensitively.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use chrono::Datelike;
use greenstream::carbon::{
    count_remote_days, parse_intensity_csv, remote_preferred, selection_threshold,
};
use greenstream::report::to_json_string;
use greenstream::scheduler::{plan, PlanSettings, ReductionStrategy};
use greenstream::subscription::synthesize;
use greenstream::utility::{utility, utility_loss};
use greenstream::{
    CarbonIntensitySeries, CdnChoice, DualPathConfig, Error, QualityLadder, Schedule, UserProfile,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Config = 3,
    Argument = 4,
    Parse = 5,
    EmptyInput = 6,
    Degenerate = 7,
    InvalidUtf8 = 8,
    Panic = 9,
}

impl From<&Error> for GsStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) => GsStatus::Domain,
            Error::Config(_) => GsStatus::Config,
            Error::Argument(_) => GsStatus::Argument,
            Error::Parse { .. } => GsStatus::Parse,
            Error::EmptyInput => GsStatus::EmptyInput,
            Error::Degenerate(_) => GsStatus::Degenerate,
        }
    }
}

/// A daily carbon-intensity series.
pub struct GsSeries(CarbonIntensitySeries);

/// A planned period.
pub struct GsSchedule(Schedule);

/// Incremental W/Mbps of each delivery-path segment.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GsPath {
    pub access: f64,
    pub core: f64,
    pub local_dc: f64,
    pub remote_dc: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsCdn {
    None = 0,
    Local = 1,
    Remote = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GsDay {
    /// `YYYYMMDD`.
    pub date: i32,
    pub ci_local: f64,
    /// NaN for single-CDN schedules.
    pub ci_remote: f64,
    pub cdn: GsCdn,
    pub bitrate: f64,
    pub effective_intensity: f64,
    pub budget: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GsSubscription {
    pub period_days: usize,
    pub reduced_days: usize,
    pub max_reduced_fraction: f64,
    pub reduced_bitrate: f64,
    pub discount_fraction: f64,
    pub total_utility_loss: f64,
    pub net_utility_loss: f64,
    pub reward_rate: f64,
    pub rewards: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Fail(GsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(GsStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(GsStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, recording any failure or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> GsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            GsStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            GsStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(GsStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

fn profile(gamma: f64) -> Result<UserProfile, Fail> {
    Ok(UserProfile::new("custom", gamma)?)
}

fn dual(p: &GsPath) -> Result<DualPathConfig, Fail> {
    Ok(DualPathConfig::new(
        p.access,
        p.core,
        p.local_dc,
        p.remote_dc,
    )?)
}

/// Message for the last failed call on this thread; empty after a success.
///
/// The pointer stays valid until the next library call on this thread.
#[no_mangle]
pub extern "C" fn gs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn gs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Normalized utility in [0.2, 1] of `bitrate` Mbps for greenness factor `gamma`.
///
/// # Safety
/// `out_utility` must be null or point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn gs_utility(bitrate: f64, gamma: f64, out_utility: *mut f64) -> GsStatus {
    guard(|| {
        let o = out(out_utility, "out_utility")?;
        *o = utility(bitrate, &QualityLadder::uhd(), &profile(gamma)?)?;
        Ok(())
    })
}

/// Utility lost stepping down from tier `from` to tier `to`.
///
/// # Safety
/// `from` and `to` must be NUL-terminated strings; `out_loss` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gs_utility_loss(
    from: *const c_char,
    to: *const c_char,
    gamma: f64,
    out_loss: *mut f64,
) -> GsStatus {
    guard(|| {
        let ladder = QualityLadder::uhd();
        let tier = |p, what| -> Result<_, Fail> {
            let name = str_arg(p, what)?;
            ladder
                .tier(name)
                .cloned()
                .ok_or_else(|| Fail(GsStatus::Argument, format!("unknown tier {name:?}")))
        };
        let (f, t) = (tier(from, "from")?, tier(to, "to")?);
        let o = out(out_loss, "out_loss")?;
        *o = utility_loss(&f, &t, &ladder, &profile(gamma)?)?;
        Ok(())
    })
}

/// Parses a `date,carbon_intensity_gco2eq_per_kwh` CSV held in memory.
///
/// # Safety
/// `data` must point to `len` readable bytes; `region` must be a NUL-terminated
/// string; `out_series` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gs_series_parse_csv(
    data: *const u8,
    len: usize,
    region: *const c_char,
    out_series: *mut *mut GsSeries,
) -> GsStatus {
    guard(|| {
        let o = out(out_series, "out_series")?;
        *o = ptr::null_mut();
        if data.is_null() {
            return Err(null("data"));
        }
        let bytes = std::slice::from_raw_parts(data, len);
        let series = parse_intensity_csv(bytes, str_arg(region, "region")?)?;
        *o = Box::into_raw(Box::new(GsSeries(series)));
        Ok(())
    })
}

/// Number of days in `series`; 0 for null.
///
/// # Safety
/// `series` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_series_len(series: *const GsSeries) -> usize {
    series.as_ref().map_or(0, |s| s.0.len())
}

/// # Safety
/// `series` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn gs_series_free(series: *mut GsSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// `local_dc / (core + remote_dc)`: the remote data center wins on days whose
/// remote/local intensity ratio is strictly below this.
///
/// # Safety
/// `path` must be readable; `out_threshold` writable.
#[no_mangle]
pub unsafe extern "C" fn gs_selection_threshold(
    path: *const GsPath,
    out_threshold: *mut f64,
) -> GsStatus {
    guard(|| {
        let cfg = dual(arg(path, "path")?)?;
        *out(out_threshold, "out_threshold")? = selection_threshold(&cfg);
        Ok(())
    })
}

/// # Safety
/// `path` must be readable; `out_remote` writable.
#[no_mangle]
pub unsafe extern "C" fn gs_remote_preferred(
    path: *const GsPath,
    ci_local: f64,
    ci_remote: f64,
    out_remote: *mut bool,
) -> GsStatus {
    guard(|| {
        let cfg = dual(arg(path, "path")?)?;
        *out(out_remote, "out_remote")? = remote_preferred(&cfg, ci_local, ci_remote);
        Ok(())
    })
}

/// # Safety
/// `local` and `remote` must be live handles; `path` readable; `out_days` writable.
#[no_mangle]
pub unsafe extern "C" fn gs_count_remote_days(
    local: *const GsSeries,
    remote: *const GsSeries,
    path: *const GsPath,
    out_days: *mut usize,
) -> GsStatus {
    guard(|| {
        let (l, r) = (arg(local, "local")?, arg(remote, "remote")?);
        let cfg = dual(arg(path, "path")?)?;
        *out(out_days, "out_days")? = count_remote_days(&l.0, &r.0, &cfg)?;
        Ok(())
    })
}

/// Plans `local` (with `remote` when non-null) under `cap`.
///
/// `strategy` is `single-<tier>` or `mixed:<n>:<deep>:<rest>`. A negative
/// `loss_decimals` sums exact per-day losses. Aggregates cover the
/// high-quality (gamma 1) and green (gamma 1.5) profiles. An infeasible plan
/// still succeeds; check [`gs_schedule_feasible`].
///
/// # Safety
/// `local` must be a live handle, `remote` null or a live handle, `path`
/// readable, `strategy` a NUL-terminated string, `out_schedule` writable.
#[no_mangle]
pub unsafe extern "C" fn gs_plan(
    local: *const GsSeries,
    remote: *const GsSeries,
    path: *const GsPath,
    cap: f64,
    strategy: *const c_char,
    loss_decimals: i32,
    out_schedule: *mut *mut GsSchedule,
) -> GsStatus {
    guard(|| {
        let o = out(out_schedule, "out_schedule")?;
        *o = ptr::null_mut();
        let l = arg(local, "local")?;
        let r = remote.as_ref();
        let cfg = dual(arg(path, "path")?)?;
        let ladder = QualityLadder::uhd();
        let strategy = ReductionStrategy::parse(str_arg(strategy, "strategy")?, &ladder)?;
        let settings = PlanSettings::new(
            ladder,
            strategy,
            vec![UserProfile::high_quality(), UserProfile::green()],
        )?
        .with_loss_decimals(u32::try_from(loss_decimals).ok());
        let s = plan(&l.0, r.map(|r| &r.0), &cfg, cap, &settings)?;
        *o = Box::into_raw(Box::new(GsSchedule(s)));
        Ok(())
    })
}

/// # Safety
/// `schedule` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn gs_schedule_free(schedule: *mut GsSchedule) {
    if !schedule.is_null() {
        drop(Box::from_raw(schedule));
    }
}

/// Days in the period; 0 for null.
///
/// # Safety
/// `schedule` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_schedule_len(schedule: *const GsSchedule) -> usize {
    schedule.as_ref().map_or(0, |s| s.0.period_days())
}

/// # Safety
/// `schedule` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_schedule_reduced_days(schedule: *const GsSchedule) -> usize {
    schedule.as_ref().map_or(0, |s| s.0.reduced_day_count())
}

/// False for null.
///
/// # Safety
/// `schedule` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_schedule_feasible(schedule: *const GsSchedule) -> bool {
    schedule.as_ref().is_some_and(|s| s.0.feasible)
}

/// NaN for null.
///
/// # Safety
/// `schedule` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_schedule_avg_bitrate_reduction(schedule: *const GsSchedule) -> f64 {
    schedule
        .as_ref()
        .map_or(f64::NAN, |s| s.0.aggregates.avg_bitrate_reduction)
}

/// # Safety
/// `schedule` must be a live handle; `out_day` writable.
#[no_mangle]
pub unsafe extern "C" fn gs_schedule_day(
    schedule: *const GsSchedule,
    index: usize,
    out_day: *mut GsDay,
) -> GsStatus {
    guard(|| {
        let s = arg(schedule, "schedule")?;
        let d = s.0.days.get(index).ok_or_else(|| {
            Fail(
                GsStatus::Argument,
                format!("day {index} out of range for {} days", s.0.period_days()),
            )
        })?;
        *out(out_day, "out_day")? = GsDay {
            date: d.date.year() * 10_000 + d.date.month() as i32 * 100 + d.date.day() as i32,
            ci_local: d.ci_local,
            ci_remote: d.ci_remote.unwrap_or(f64::NAN),
            cdn: match d.cdn {
                CdnChoice::NotApplicable => GsCdn::None,
                CdnChoice::Local => GsCdn::Local,
                CdnChoice::Remote => GsCdn::Remote,
            },
            bitrate: d.bitrate,
            effective_intensity: d.effective_intensity,
            budget: d.budget,
        };
        Ok(())
    })
}

/// The whole schedule as JSON; release with [`gs_string_free`].
///
/// # Safety
/// `schedule` must be a live handle; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn gs_schedule_to_json(
    schedule: *const GsSchedule,
    out_json: *mut *mut c_char,
) -> GsStatus {
    guard(|| {
        let o = out(out_json, "out_json")?;
        *o = ptr::null_mut();
        let s = arg(schedule, "schedule")?;
        let json = to_json_string(&s.0)?;
        *o = CString::new(json)
            .map_err(|_| Fail(GsStatus::Argument, "JSON contains a NUL byte".into()))?
            .into_raw();
        Ok(())
    })
}

/// Two-tier subscription terms for a user with greenness factor `gamma`.
///
/// Fails for infeasible schedules and mixed strategies.
///
/// # Safety
/// `schedule` must be a live handle; `out_plan` writable.
#[no_mangle]
pub unsafe extern "C" fn gs_synthesize(
    schedule: *const GsSchedule,
    gamma: f64,
    reward_rate: f64,
    out_plan: *mut GsSubscription,
) -> GsStatus {
    guard(|| {
        let s = arg(schedule, "schedule")?;
        let o = out(out_plan, "out_plan")?;
        let p = synthesize(&s.0, &profile(gamma)?, reward_rate)?;
        *o = GsSubscription {
            period_days: p.period_days,
            reduced_days: p.reduced_days,
            max_reduced_fraction: p.max_reduced_fraction,
            reduced_bitrate: p.reduced_tier.bitrate,
            discount_fraction: p.discount_fraction,
            total_utility_loss: p.total_utility_loss,
            net_utility_loss: p.net_utility_loss,
            reward_rate: p.reward_rate,
            rewards: p.rewards,
        };
        Ok(())
    })
}
