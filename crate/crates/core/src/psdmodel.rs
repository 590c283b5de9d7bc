//! Spectral-density interference estimator.
//!
//! Estimates the interference on a victim subcarrier by integrating the
//! interferer's per-subcarrier PSD over the victim band `[l - 1/2, l + 1/2]`.
//! The victim's receive processing is ignored entirely, which is exactly
//! what makes this estimator unreliable for OQAM interferers seen through a
//! rectangular CP-OFDM window.
//!
//! Both PSDs are normalized to unit total power. The OQAM PSD is
//! `|G(f)|^2`, the PSD of a cyclostationary stream of i.i.d. symbols averaged
//! over the half-symbol staggering.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::closedform::{InterferenceTable, Model, TableEntry};
use crate::config::{CoexConfig, CpRatio, Direction};
use crate::error::{CoexError, Result};
use crate::filterbank::{sinc, PrototypeFilter};
use crate::quadrature::{integrate_with_breaks, QuadOptions};

/// PSD of one CP-OFDM subcarrier at `f_norm` subcarrier spacings.
pub fn psd_ofdm_subcarrier(f_norm: f64, cp: CpRatio) -> f64 {
    let span = 1.0 + cp.as_f64();
    span * sinc(PI * f_norm * span).powi(2)
}

/// PSD of one OQAM subcarrier at `f_norm` subcarrier spacings.
pub fn psd_oqam_subcarrier(f_norm: f64, filter: &PrototypeFilter) -> f64 {
    filter.frequency_response(f_norm).powi(2) / filter.energy()
}

fn band_integral<F: Fn(f64) -> f64>(psd: F, lo: f64, hi: f64) -> Result<f64> {
    // Split at every integer so each panel holds at most one sidelobe.
    let mut points = vec![lo];
    let mut k = lo.floor() + 1.0;
    while k < hi {
        points.push(k);
        k += 1.0;
    }
    points.push(hi);
    let opts = QuadOptions { rel_tol: 1e-8, ..QuadOptions::default() };
    Ok(integrate_with_breaks(|f| Complex64::new(psd(f), 0.0), &points, &opts)?.re)
}

/// Interferer power falling into the victim band at spectral distance `l`.
///
/// OQAM interferers carry two real symbols of variance `var_pam` per useful
/// period; CP-OFDM interferers one complex symbol of variance `var_qam`.
pub fn psd_interference(direction: Direction, l: f64, config: &CoexConfig) -> Result<f64> {
    let (lo, hi) = (l - 0.5, l + 0.5);
    match direction {
        Direction::OqamToOfdm => {
            Ok(2.0 * config.var_pam * band_integral(|f| psd_oqam_subcarrier(f, &config.filter), lo, hi)?)
        }
        Direction::OfdmToOqam | Direction::OfdmToOfdm => {
            Ok(config.var_qam * band_integral(|f| psd_ofdm_subcarrier(f, config.cp_ratio), lo, hi)?)
        }
    }
}

pub fn build_psd_table(direction: Direction, l_grid: &[f64], config: &CoexConfig) -> Result<InterferenceTable> {
    if l_grid.is_empty() {
        return Err(CoexError::InvalidArgument("empty spectral-distance grid".into()));
    }
    let entries = l_grid
        .iter()
        .map(|&l| Ok(TableEntry::new(l, psd_interference(direction, l, config)?)))
        .collect::<Result<Vec<_>>>()?;
    let variance = match direction {
        Direction::OqamToOfdm => config.var_pam,
        _ => config.var_qam,
    };
    Ok(InterferenceTable { entries, direction, model: Model::Psd, cp_ratio: config.cp_ratio, variance })
}
