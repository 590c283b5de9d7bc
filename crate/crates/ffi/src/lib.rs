//! C ABI over the `coexist` library.
//!
//! Every object crosses the boundary as an opaque pointer created by a
//! `coex_*_new`-style constructor and released by the matching `coex_*_free`.
//! Fallible calls return a [`CoexStatus`] and write results through out
//! pointers; on failure [`coex_last_error`] describes what went wrong on the
//! calling thread.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use coexist::closedform::{build_table, l_grid, InterferenceTable};
use coexist::config::{CoexConfig as Scenario, CpRatio, Direction};
use coexist::montecarlo::{estimate, McEstimate, McPlan, TimingOffset};
use coexist::psdmodel::{build_psd_table, psd_interference};
use coexist::{CoexError, PrototypeFilter};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoexStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ConfigError = 3,
    NumericalError = 4,
    IoError = 5,
    Panic = 6,
    OutOfRange = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoexDirection {
    /// OFDM/OQAM secondary onto the CP-OFDM incumbent.
    S2i = 0,
    /// CP-OFDM incumbent onto the OFDM/OQAM secondary.
    I2s = 1,
    /// Asynchronous CP-OFDM secondary onto the CP-OFDM incumbent.
    O2o = 2,
}

impl From<CoexDirection> for Direction {
    fn from(d: CoexDirection) -> Self {
        match d {
            CoexDirection::S2i => Direction::OqamToOfdm,
            CoexDirection::I2s => Direction::OfdmToOqam,
            CoexDirection::O2o => Direction::OfdmToOfdm,
        }
    }
}

#[repr(C)]
pub enum CoexModel {
    ClosedForm = 0,
    Psd = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoexTableEntry {
    pub l: f64,
    pub power: f64,
    pub power_db: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoexMcPoint {
    pub l: f64,
    pub victim: i64,
    pub power_mean: f64,
    pub std_error: f64,
    pub windows: usize,
}

pub struct CoexFilter {
    inner: PrototypeFilter,
}

pub struct CoexConfig {
    inner: Scenario,
}

pub struct CoexTable {
    inner: InterferenceTable,
}

pub struct CoexEstimate {
    inner: McEstimate,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

struct Failure(CoexStatus, String);

impl From<CoexError> for Failure {
    fn from(e: CoexError) -> Self {
        let status = match &e {
            CoexError::InvalidConfig(_) | CoexError::ConfigFile { .. } => CoexStatus::ConfigError,
            CoexError::QuadratureNonConvergence { .. } => CoexStatus::NumericalError,
            _ => CoexStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(CoexStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CoexStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CoexStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {msg}"));
            CoexStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn get_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_box<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(Box::into_raw(Box::new(value)));
    Ok(())
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CoexStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn coex_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn coex_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// The four-tap PHYDYAS prototype.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn coex_filter_phydyas_k4(out: *mut *mut CoexFilter) -> CoexStatus {
    guard(|| put_box(out, CoexFilter { inner: PrototypeFilter::phydyas_k4() }))
}

/// Frequency-sampling prototype from `len` coefficients `G_0..G_{K-1}`.
///
/// # Safety
/// `coeffs` must point to `len` readable doubles; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn coex_filter_new(coeffs: *const f64, len: usize, out: *mut *mut CoexFilter) -> CoexStatus {
    guard(|| {
        let inner = PrototypeFilter::new(slice(coeffs, len, "coeffs")?.to_vec())?;
        put_box(out, CoexFilter { inner })
    })
}

/// # Safety
/// `filter` must be null or come from a `coex_filter_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn coex_filter_free(filter: *mut CoexFilter) {
    free(filter)
}

/// Impulse response at time `t` in units of the useful period.
///
/// # Safety
/// `filter` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn coex_filter_evaluate(filter: *const CoexFilter, t: f64, out: *mut f64) -> CoexStatus {
    guard(|| put(out, get(filter, "filter")?.inner.evaluate(t)))
}

/// Frequency response at `f` in subcarrier spacings.
///
/// # Safety
/// `filter` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn coex_filter_frequency_response(filter: *const CoexFilter, f: f64, out: *mut f64) -> CoexStatus {
    guard(|| put(out, get(filter, "filter")?.inner.frequency_response(f)))
}

/// Default scenario with the single interferer placed for `direction`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn coex_config_default(direction: CoexDirection, out: *mut *mut CoexConfig) -> CoexStatus {
    guard(|| put_box(out, CoexConfig { inner: Scenario::default_for(direction.into()) }))
}

/// Scenario parsed from TOML text.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn coex_config_from_toml(toml: *const c_char, out: *mut *mut CoexConfig) -> CoexStatus {
    guard(|| {
        let inner = Scenario::from_toml_str(text(toml, "toml")?)?;
        put_box(out, CoexConfig { inner })
    })
}

/// Scenario read from a TOML file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn coex_config_load(path: *const c_char, out: *mut *mut CoexConfig) -> CoexStatus {
    guard(|| {
        let path = text(path, "path")?;
        let body = std::fs::read_to_string(Path::new(path))
            .map_err(|e| Failure(CoexStatus::IoError, format!("{path}: {e}")))?;
        let inner = Scenario::from_toml_str(&body).map_err(|e| Failure(CoexStatus::ConfigError, format!("{path}: {e}")))?;
        put_box(out, CoexConfig { inner })
    })
}

/// # Safety
/// `config` must be null or come from a `coex_config_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn coex_config_free(config: *mut CoexConfig) {
    free(config)
}

// Mutate, validate, and roll back on failure so a handle is never left invalid.
unsafe fn update(config: *mut CoexConfig, f: impl FnOnce(&mut Scenario) -> Result<(), Failure>) -> CoexStatus {
    guard(|| {
        let cfg = get_mut(config, "config")?;
        let mut next = cfg.inner.clone();
        f(&mut next)?;
        next.validate()?;
        cfg.inner = next;
        Ok(())
    })
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn coex_config_set_subcarriers(config: *mut CoexConfig, subcarriers: usize) -> CoexStatus {
    update(config, |c| {
        c.subcarriers = subcarriers;
        Ok(())
    })
}

/// Prefix length as the fraction `num/den` of the useful period.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn coex_config_set_cp_ratio(config: *mut CoexConfig, num: u32, den: u32) -> CoexStatus {
    update(config, |c| {
        c.cp_ratio = CpRatio::new(num, den)?;
        Ok(())
    })
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn coex_config_set_variances(config: *mut CoexConfig, var_qam: f64, var_pam: f64) -> CoexStatus {
    update(config, |c| {
        c.var_qam = var_qam;
        c.var_pam = var_pam;
        Ok(())
    })
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn coex_config_set_delta_f(config: *mut CoexConfig, delta_f: f64) -> CoexStatus {
    update(config, |c| {
        c.delta_f = delta_f;
        Ok(())
    })
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn coex_config_set_seed(config: *mut CoexConfig, seed: u64) -> CoexStatus {
    update(config, |c| {
        c.seed = seed;
        Ok(())
    })
}

/// Copies the prototype; `filter` may be freed afterwards.
///
/// # Safety
/// `config` and `filter` must be live handles.
#[no_mangle]
pub unsafe extern "C" fn coex_config_set_filter(config: *mut CoexConfig, filter: *const CoexFilter) -> CoexStatus {
    update(config, |c| {
        c.filter = get(filter, "filter")?.inner.clone();
        Ok(())
    })
}

unsafe fn subcarrier_set(p: *const i64, len: usize) -> Result<BTreeSet<i64>, Failure> {
    let set: BTreeSet<i64> = slice(p, len, "subcarriers")?.iter().copied().collect();
    if set.is_empty() {
        return Err(Failure(CoexStatus::InvalidArgument, "subcarrier set is empty".into()));
    }
    Ok(set)
}

/// # Safety
/// `config` must be a live handle and `subcarriers` point to `len` readable values.
#[no_mangle]
pub unsafe extern "C" fn coex_config_set_incumbent_set(config: *mut CoexConfig, subcarriers: *const i64, len: usize) -> CoexStatus {
    update(config, |c| {
        c.incumbent_set = subcarrier_set(subcarriers, len)?;
        Ok(())
    })
}

/// # Safety
/// `config` must be a live handle and `subcarriers` point to `len` readable values.
#[no_mangle]
pub unsafe extern "C" fn coex_config_set_secondary_set(config: *mut CoexConfig, subcarriers: *const i64, len: usize) -> CoexStatus {
    update(config, |c| {
        c.secondary_set = subcarrier_set(subcarriers, len)?;
        Ok(())
    })
}

/// Closed-form interference power at spectral distance `l`.
///
/// # Safety
/// `config` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn coex_interference(direction: CoexDirection, l: f64, config: *const CoexConfig, out: *mut f64) -> CoexStatus {
    guard(|| {
        let table = build_table(direction.into(), &[l], &get(config, "config")?.inner)?;
        put(out, table.entries[0].power)
    })
}

/// Interference power predicted from the power spectral densities alone.
///
/// # Safety
/// `config` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn coex_psd_interference(direction: CoexDirection, l: f64, config: *const CoexConfig, out: *mut f64) -> CoexStatus {
    guard(|| put(out, psd_interference(direction.into(), l, &get(config, "config")?.inner)?))
}

/// Table over `l_min, l_min + step, ..., l_max`.
///
/// # Safety
/// `config` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn coex_table_build(
    direction: CoexDirection,
    model: CoexModel,
    l_min: f64,
    l_max: f64,
    step: f64,
    config: *const CoexConfig,
    out: *mut *mut CoexTable,
) -> CoexStatus {
    guard(|| {
        let cfg = &get(config, "config")?.inner;
        let grid = l_grid(l_min, l_max, step)?;
        let inner = match model {
            CoexModel::ClosedForm => build_table(direction.into(), &grid, cfg)?,
            CoexModel::Psd => build_psd_table(direction.into(), &grid, cfg)?,
        };
        put_box(out, CoexTable { inner })
    })
}

/// Number of entries; 0 for a null handle.
///
/// # Safety
/// `table` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn coex_table_len(table: *const CoexTable) -> usize {
    table.as_ref().map_or(0, |t| t.inner.entries.len())
}

/// # Safety
/// `table` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn coex_table_entry(table: *const CoexTable, index: usize, out: *mut CoexTableEntry) -> CoexStatus {
    guard(|| {
        let entries = &get(table, "table")?.inner.entries;
        let e = entries.get(index).ok_or_else(|| {
            Failure(CoexStatus::OutOfRange, format!("index {index} out of range for {} entries", entries.len()))
        })?;
        put(out, CoexTableEntry { l: e.l, power: e.power, power_db: e.power_db })
    })
}

/// # Safety
/// `table` must be null or come from [`coex_table_build`].
#[no_mangle]
pub unsafe extern "C" fn coex_table_free(table: *mut CoexTable) {
    free(table)
}

/// Monte-Carlo estimate over every victim subcarrier.
///
/// For `O2O`, a negative `fixed_offset` draws the interferer timing uniformly
/// per trial; otherwise it is the offset in samples. Other directions ignore it.
///
/// # Safety
/// `config` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn coex_simulate(
    direction: CoexDirection,
    config: *const CoexConfig,
    n_symbols: usize,
    trials: usize,
    fixed_offset: i64,
    out: *mut *mut CoexEstimate,
) -> CoexStatus {
    guard(|| {
        let cfg = &get(config, "config")?.inner;
        let timing = match usize::try_from(fixed_offset) {
            Ok(n) => TimingOffset::Fixed(n),
            Err(_) => TimingOffset::UniformRandom,
        };
        let inner = estimate(direction.into(), cfg, &McPlan::new(n_symbols, trials), timing)?;
        put_box(out, CoexEstimate { inner })
    })
}

/// Number of points; 0 for a null handle.
///
/// # Safety
/// `estimate` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn coex_estimate_len(estimate: *const CoexEstimate) -> usize {
    estimate.as_ref().map_or(0, |e| e.inner.per_l.len())
}

/// Point `index`, in increasing spectral distance.
///
/// # Safety
/// `estimate` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn coex_estimate_point(estimate: *const CoexEstimate, index: usize, out: *mut CoexMcPoint) -> CoexStatus {
    guard(|| {
        let est = &get(estimate, "estimate")?.inner;
        let p = est.per_l.get(index).ok_or_else(|| {
            Failure(CoexStatus::OutOfRange, format!("index {index} out of range for {} points", est.per_l.len()))
        })?;
        put(
            out,
            CoexMcPoint { l: p.l, victim: p.victim, power_mean: p.power_mean, std_error: p.std_error, windows: est.windows },
        )
    })
}

/// # Safety
/// `estimate` must be null or come from [`coex_simulate`].
#[no_mangle]
pub unsafe extern "C" fn coex_estimate_free(estimate: *mut CoexEstimate) {
    free(estimate)
}
