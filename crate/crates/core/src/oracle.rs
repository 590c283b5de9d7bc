//! Brute-force quadrature of the defining interference integrals.
//!
//! Everything here integrates the analytic filter `g` directly, splitting at
//! the support edges, and decides which symbols contribute from exact
//! integer geometry. Nothing here depends on the closed forms.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::config::{CpRatio, Direction};
use crate::error::{CoexError, Result};
use crate::filterbank::PrototypeFilter;
use crate::quadrature::{integrate_with_breaks, QuadOptions};

pub fn default_options() -> QuadOptions {
    QuadOptions { rel_tol: 1e-12, ..QuadOptions::default() }
}

/// `int_a^b g(t - center) exp(j 2 pi x t) dt` by adaptive quadrature.
pub fn window_quadrature(
    filter: &PrototypeFilter,
    center: f64,
    a: f64,
    b: f64,
    x: f64,
    opts: &QuadOptions,
) -> Result<Complex64> {
    let half = filter.half_support();
    let lo = a.max(center - half);
    let hi = b.min(center + half);
    if lo >= hi {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut points = vec![a];
    for edge in [center - half, center + half] {
        if edge > a && edge < b {
            points.push(edge);
        }
    }
    points.push(b);
    integrate_with_breaks(
        |t| Complex64::from_polar(filter.evaluate(t - center), 2.0 * PI * x * t),
        &points,
        opts,
    )
}

/// `|int_0^1 g(u - tau) exp(j 2 pi l u) du|^2`.
pub fn quadrature_term_stoi(l: f64, tau_norm: f64, filter: &PrototypeFilter) -> Result<f64> {
    Ok(window_quadrature(filter, tau_norm, 0.0, 1.0, l, &default_options())?.norm_sqr())
}

// Exact time lattice in units of T / (2 den).
struct Lattice {
    half: i64,
    ofdm: i64,
    cp: i64,
}

impl Lattice {
    fn new(cp: CpRatio) -> Self {
        let (p, q) = (cp.num() as i64, cp.den() as i64);
        Self { half: q, ofdm: 2 * (p + q), cp: 2 * p }
    }

    fn to_time(&self, units: i64) -> f64 {
        units as f64 / (2 * self.half) as f64
    }
}

/// Interferer symbols whose pulse overlaps the victim's integration range
/// with positive length, for a filter of overlapping factor `overlap`.
pub fn contributing_shifts_for_overlap(
    direction: Direction,
    n_victim: i64,
    cp: CpRatio,
    overlap: usize,
) -> Result<BTreeSet<i64>> {
    let lat = Lattice::new(cp);
    let half_support = overlap as i64 * lat.half;
    if half_support == 0 {
        return Ok(BTreeSet::new());
    }
    let overlaps = |a0: i64, a1: i64, b0: i64, b1: i64| a0.max(b0) < a1.min(b1);
    let mut out = BTreeSet::new();
    match direction {
        Direction::OqamToOfdm => {
            let (a, b) = (n_victim * lat.ofdm, n_victim * lat.ofdm + 2 * lat.half);
            let lo = (a - half_support).div_euclid(lat.half) - 2;
            let hi = (b + half_support).div_euclid(lat.half) + 2;
            for n in lo..=hi {
                let c = n * lat.half;
                if overlaps(a, b, c - half_support, c + half_support) {
                    out.insert(n);
                }
            }
        }
        Direction::OfdmToOqam => {
            let c = n_victim * lat.half;
            let lo = (c - half_support).div_euclid(lat.ofdm) - 2;
            let hi = (c + half_support).div_euclid(lat.ofdm) + 2;
            for n in lo..=hi {
                let b = n * lat.ofdm + 2 * lat.half;
                if overlaps(b - lat.ofdm, b, c - half_support, c + half_support) {
                    out.insert(n);
                }
            }
        }
        Direction::OfdmToOfdm => return Err(CoexError::UnsupportedDirection("oracle covers OQAM links only")),
    }
    Ok(out)
}

pub fn contributing_shifts(
    direction: Direction,
    n_victim: i64,
    cp: CpRatio,
    filter: &PrototypeFilter,
) -> Result<BTreeSet<i64>> {
    contributing_shifts_for_overlap(direction, n_victim, cp, filter.overlap())
}

/// Interference in one victim window (s to i) or symbol (i to s) at unit
/// variance scaled by `variance`; i to s counts both real symbols of a pair.
pub fn quadrature_interference_window(
    direction: Direction,
    l: f64,
    filter: &PrototypeFilter,
    cp: CpRatio,
    variance: f64,
    n_victim: i64,
    opts: &QuadOptions,
) -> Result<f64> {
    let lat = Lattice::new(cp);
    let mut total = 0.0;
    for n in contributing_shifts(direction, n_victim, cp, filter)? {
        let w = match direction {
            Direction::OqamToOfdm => {
                let a = lat.to_time(n_victim * lat.ofdm);
                let center = lat.to_time(n * lat.half);
                window_quadrature(filter, center, a, a + 1.0, l, opts)?
            }
            _ => {
                let b = lat.to_time(n * lat.ofdm + 2 * lat.half);
                let a = lat.to_time(n * lat.ofdm - lat.cp);
                let center = lat.to_time(n_victim * lat.half);
                window_quadrature(filter, center, a, b, -l, opts)?
            }
        };
        total += w.norm_sqr();
    }
    Ok(variance * total)
}

/// Mean interference averaged over one realignment period of the victim grid.
pub fn quadrature_interference_with(
    direction: Direction,
    l: f64,
    filter: &PrototypeFilter,
    cp: CpRatio,
    variance: f64,
    opts: &QuadOptions,
) -> Result<f64> {
    let period = match direction {
        Direction::OqamToOfdm => cp.ofdm_window_period(),
        Direction::OfdmToOqam => cp.oqam_window_period(),
        Direction::OfdmToOfdm => return Err(CoexError::UnsupportedDirection("oracle covers OQAM links only")),
    } as i64;
    let mut total = 0.0;
    for n in 0..period {
        total += quadrature_interference_window(direction, l, filter, cp, variance, n, opts)?;
    }
    Ok(total / period as f64)
}

pub fn quadrature_interference(
    direction: Direction,
    l: f64,
    filter: &PrototypeFilter,
    cp: CpRatio,
    variance: f64,
) -> Result<f64> {
    quadrature_interference_with(direction, l, filter, cp, variance, &default_options())
}

/// Relative change of [`quadrature_interference`] under a finer initial
/// subdivision. Bisection of a single panel reproduces a two-panel start
/// exactly, so the refined run starts from three panels per range.
pub fn convergence_check(direction: Direction, l: f64, filter: &PrototypeFilter, cp: CpRatio) -> Result<f64> {
    let base = quadrature_interference(direction, l, filter, cp, 1.0)?;
    let opts = QuadOptions { initial_panels: 3, ..default_options() };
    let fine = quadrature_interference_with(direction, l, filter, cp, 1.0, &opts)?;
    Ok((fine - base).abs() / base.abs().max(f64::MIN_POSITIVE))
}

/// `sum_tau int_0^1 g^2(u - tau) du` over all OQAM symbols touching the
/// window `[0, 1]`; the total power an OQAM stream of unit-variance symbols
/// deposits in one CP-OFDM window.
pub fn window_energy_total(filter: &PrototypeFilter) -> Result<f64> {
    let opts = default_options();
    let half = filter.half_support();
    let mut total = 0.0;
    for n in contributing_shifts(Direction::OqamToOfdm, 0, CpRatio::ZERO, filter)? {
        let c = n as f64 / 2.0;
        let mut points = vec![0.0];
        for edge in [c - half, c + half] {
            if edge > 0.0 && edge < 1.0 {
                points.push(edge);
            }
        }
        points.push(1.0);
        total += integrate_with_breaks(|u| Complex64::new(filter.evaluate(u - c).powi(2), 0.0), &points, &opts)?.re;
    }
    Ok(total)
}

/// `int g^2 du` over the whole support by quadrature.
pub fn filter_energy(filter: &PrototypeFilter) -> Result<f64> {
    let h = filter.half_support();
    Ok(integrate_with_breaks(|u| Complex64::new(filter.evaluate(u).powi(2), 0.0), &[-h, 0.0, h], &default_options())?.re)
}
