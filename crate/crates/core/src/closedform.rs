//! Closed-form mean cross-interference between CP-OFDM and OFDM/OQAM.
//!
//! Both directions reduce to power sums of truncated filter integrals
//!
//! ```text
//! W(c, [a, b], x) = int_a^b g(t - c) exp(j 2 pi x t) dt
//! ```
//!
//! with `t` in units of `T`. Expanding `g` in its Fourier series turns each
//! integral into a finite sum of shifted sinc terms, one per frequency
//! coefficient, evaluated on the overlap of the filter support with the
//! integration range.
//!
//! The CP-OFDM and OQAM symbol grids only realign after a few symbols when
//! a cyclic prefix is present, so every value is the exact average over one
//! realignment period of the victim grid.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::config::{CoexConfig, CpRatio, Direction};
use crate::error::{CoexError, Result};
use crate::filterbank::{sinc, PrototypeFilter};

/// Powers below this are clamped before conversion to dB.
pub const DB_FLOOR: f64 = 1e-15;

pub fn to_db(power: f64) -> f64 {
    10.0 * power.max(DB_FLOOR).log10()
}

/// Which estimator produced a table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    ClosedForm,
    Psd,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableEntry {
    pub l: f64,
    pub power: f64,
    pub power_db: f64,
}

impl TableEntry {
    pub fn new(l: f64, power: f64) -> Self {
        Self { l, power, power_db: to_db(power) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceTable {
    pub entries: Vec<TableEntry>,
    pub direction: Direction,
    pub model: Model,
    pub cp_ratio: CpRatio,
    /// Symbol variance of the interfering system.
    pub variance: f64,
}

/// Evenly spaced grid `l_min, l_min + step, ...` up to and including `l_max`.
pub fn l_grid(l_min: f64, l_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step.is_finite() && step > 0.0) {
        return Err(CoexError::InvalidArgument(format!("grid step must be positive, got {step}")));
    }
    if !(l_min.is_finite() && l_max.is_finite()) || l_max < l_min {
        return Err(CoexError::InvalidArgument(format!("empty grid [{l_min}, {l_max}]")));
    }
    let n = ((l_max - l_min) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| l_min + step * i as f64).collect())
}

/// `int_a^b g(t - center) exp(j 2 pi x t) dt`, exact for the truncated
/// Fourier-series filter.
pub fn window_integral(filter: &PrototypeFilter, center: f64, a: f64, b: f64, x: f64) -> Complex64 {
    let half = filter.half_support();
    let lo = a.max(center - half);
    let hi = b.min(center + half);
    if lo >= hi {
        return Complex64::new(0.0, 0.0);
    }
    let k_len = filter.overlap() as i64;
    let width = hi - lo;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in (-k_len + 1)..k_len {
        let kk = k as f64 / k_len as f64;
        let xk = kk + x;
        let amp = filter.coeff(k) / k_len as f64 * width * sinc(PI * xk * width);
        let phase = -2.0 * PI * kk * center + PI * xk * (lo + hi);
        acc += Complex64::from_polar(amp, phase);
    }
    acc
}

/// CP-OFDM receive window `n`: `[n (1 + cp), n (1 + cp) + 1]`.
pub fn ofdm_window(cp: CpRatio, n: i64) -> (f64, f64) {
    let start = n as f64 * (1.0 + cp.as_f64());
    (start, start + 1.0)
}

/// Full CP-OFDM symbol extent `n`, prefix included.
pub fn ofdm_extent(cp: CpRatio, n: i64) -> (f64, f64) {
    let (a, b) = ofdm_window(cp, n);
    (a - cp.as_f64(), b)
}

pub fn oqam_center(n: i64) -> f64 {
    n as f64 / 2.0
}

/// OQAM symbols whose filter support may overlap `[a, b]` (superset).
pub(crate) fn oqam_candidates(filter: &PrototypeFilter, a: f64, b: f64) -> std::ops::RangeInclusive<i64> {
    let k = filter.overlap() as f64;
    ((2.0 * a - k).floor() as i64 - 1)..=((2.0 * b + k).ceil() as i64 + 1)
}

/// CP-OFDM symbols whose extent may overlap the support of OQAM symbol `n_s`.
pub(crate) fn ofdm_candidates(filter: &PrototypeFilter, cp: CpRatio, n_s: i64) -> std::ops::RangeInclusive<i64> {
    let half = filter.half_support();
    let c = oqam_center(n_s);
    let period = 1.0 + cp.as_f64();
    (((c - half - 1.0) / period).floor() as i64 - 1)..=(((c + half + cp.as_f64()) / period).ceil() as i64 + 1)
}

/// Mean interference seen by CP-OFDM window `n_i` from one OQAM subcarrier at
/// spectral distance `l`.
pub fn interference_oqam_to_ofdm_window(l: f64, filter: &PrototypeFilter, cp: CpRatio, var_pam: f64, n_i: i64) -> f64 {
    let (a, b) = ofdm_window(cp, n_i);
    var_pam
        * oqam_candidates(filter, a, b)
            .map(|n_s| window_integral(filter, oqam_center(n_s), a, b, l).norm_sqr())
            .sum::<f64>()
}

/// Mean power injected by an OQAM subcarrier onto a CP-OFDM subcarrier at
/// spectral distance `l`, averaged over CP-OFDM windows.
pub fn interference_oqam_to_ofdm(l: f64, filter: &PrototypeFilter, cp: CpRatio, var_pam: f64) -> f64 {
    let period = cp.ofdm_window_period() as i64;
    (0..period).map(|n| interference_oqam_to_ofdm_window(l, filter, cp, var_pam, n)).sum::<f64>() / period as f64
}

/// Interference seen by OQAM symbol `n_s` from one CP-OFDM subcarrier.
///
/// Counts the power of both real symbols of a QAM-rate pair, i.e. twice the
/// mean squared real-part error of a single OQAM symbol.
pub fn interference_ofdm_to_oqam_symbol(l: f64, filter: &PrototypeFilter, cp: CpRatio, var_qam: f64, n_s: i64) -> f64 {
    let c = oqam_center(n_s);
    var_qam
        * ofdm_candidates(filter, cp, n_s)
            .map(|n_i| {
                let (a, b) = ofdm_extent(cp, n_i);
                window_integral(filter, c, a, b, -l).norm_sqr()
            })
            .sum::<f64>()
}

/// Mean power injected by a CP-OFDM subcarrier onto an OQAM subcarrier at
/// spectral distance `l`, averaged over OQAM symbols.
pub fn interference_ofdm_to_oqam(l: f64, filter: &PrototypeFilter, cp: CpRatio, var_qam: f64) -> f64 {
    let period = cp.oqam_window_period() as i64;
    (0..period).map(|n| interference_ofdm_to_oqam_symbol(l, filter, cp, var_qam, n)).sum::<f64>() / period as f64
}

/// `sum_{p=a}^{b-1} g((p - c)/M) exp(j 2 pi x p / M) / M` over the critically
/// sampled filter, exact via the Dirichlet kernel.
pub fn sampled_window_sum(filter: &PrototypeFilter, center: i64, a: i64, b: i64, x: f64, m: usize) -> Complex64 {
    let half = (filter.overlap() * m / 2) as i64;
    let lo = a.max(center - half);
    let hi = b.min(center + half + 1);
    if lo >= hi {
        return Complex64::new(0.0, 0.0);
    }
    let n = (hi - lo) as f64;
    let mf = m as f64;
    let k_len = filter.overlap() as i64;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in (-k_len + 1)..k_len {
        let kk = k as f64 / k_len as f64;
        let xk = kk + x;
        let s = (PI * xk / mf).sin();
        let kernel = if s.abs() < 1e-14 {
            // Limit at integer multiples of M, signed to cancel the phase below.
            n * (PI * xk * (n - 1.0) / mf).cos()
        } else {
            (PI * xk * n / mf).sin() / s
        };
        let phase = -2.0 * PI * kk * center as f64 / mf + PI * xk * (2.0 * lo as f64 + n - 1.0) / mf;
        acc += Complex64::from_polar(filter.coeff(k) / k_len as f64 * kernel / mf, phase);
    }
    acc
}

fn sample_grid(cp: CpRatio, m: usize) -> Result<(i64, i64)> {
    if m < 2 || !m.is_multiple_of(2) {
        return Err(CoexError::InvalidArgument(format!("sample count must be even and at least 2, got {m}")));
    }
    Ok((m as i64, cp.cp_samples(m)? as i64))
}

/// Discrete-time counterpart of [`interference_oqam_to_ofdm`] at `m`
/// samples per useful period.
pub fn interference_oqam_to_ofdm_sampled(l: f64, filter: &PrototypeFilter, cp: CpRatio, var_pam: f64, m: usize) -> Result<f64> {
    let (mi, ncp) = sample_grid(cp, m)?;
    let period = cp.ofdm_window_period() as i64;
    let half = filter.overlap() as i64 * mi / 2;
    let mut total = 0.0;
    for n_i in 0..period {
        let a = n_i * (mi + ncp);
        let b = a + mi;
        let first = (a - half).div_euclid(mi / 2) - 1;
        let last = (b + half).div_euclid(mi / 2) + 1;
        total += (first..=last)
            .map(|n_s| sampled_window_sum(filter, n_s * mi / 2, a, b, l, m).norm_sqr())
            .sum::<f64>();
    }
    Ok(var_pam * total / period as f64)
}

/// Discrete-time counterpart of [`interference_ofdm_to_oqam`].
pub fn interference_ofdm_to_oqam_sampled(l: f64, filter: &PrototypeFilter, cp: CpRatio, var_qam: f64, m: usize) -> Result<f64> {
    let (mi, ncp) = sample_grid(cp, m)?;
    let period = cp.oqam_window_period() as i64;
    let half = filter.overlap() as i64 * mi / 2;
    let sym = mi + ncp;
    let mut total = 0.0;
    for n_s in 0..period {
        let c = n_s * mi / 2;
        let first = (c - half).div_euclid(sym) - 1;
        let last = (c + half + ncp).div_euclid(sym) + 1;
        total += (first..=last)
            .map(|n_i| {
                let b = n_i * sym + mi;
                sampled_window_sum(filter, c, b - sym, b, -l, m).norm_sqr()
            })
            .sum::<f64>();
    }
    Ok(var_qam * total / period as f64)
}

/// Closed-form table over `l_grid` for the direction's interferer variance.
pub fn build_table(direction: Direction, l_grid: &[f64], config: &CoexConfig) -> Result<InterferenceTable> {
    if l_grid.is_empty() {
        return Err(CoexError::InvalidArgument("empty spectral-distance grid".into()));
    }
    type Form = fn(f64, &PrototypeFilter, CpRatio, f64) -> f64;
    let (variance, f): (f64, Form) = match direction {
        Direction::OqamToOfdm => (config.var_pam, interference_oqam_to_ofdm),
        Direction::OfdmToOqam => (config.var_qam, interference_ofdm_to_oqam),
        Direction::OfdmToOfdm => {
            return Err(CoexError::UnsupportedDirection("no closed form for CP-OFDM onto CP-OFDM"))
        }
    };
    let entries = l_grid
        .iter()
        .map(|&l| TableEntry::new(l, f(l, &config.filter, config.cp_ratio, variance)))
        .collect();
    Ok(InterferenceTable { entries, direction, model: Model::ClosedForm, cp_ratio: config.cp_ratio, variance })
}
