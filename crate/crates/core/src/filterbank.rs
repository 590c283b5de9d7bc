//! Frequency-sampled prototype filters.
//!
//! A prototype filter with overlapping factor `K` is described by `K`
//! non-negative frequency coefficients `G_0..G_{K-1}` (with `G_0 = 1`). In
//! normalized time `u = t / T` it reads
//!
//! ```text
//! g(u) = sum_{k=-K+1}^{K-1} (G_|k| / K) cos(2 pi k u / K),   |u| <= K/2
//! ```
//!
//! and vanishes outside `[-K/2, K/2]`. Because the coefficient set is
//! symmetric in `k`, `g` is real and even.

use std::f64::consts::PI;

use crate::error::{CoexError, Result};

/// Tolerance on `sum_k G_|k|^2 = K` used by [`PrototypeFilter::is_normalized`].
pub const NORMALIZATION_TOLERANCE: f64 = 1e-5;

/// Unnormalized sine cardinal, `sin(x) / x` with `sinc(0) = 1`.
#[inline]
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-9 {
        // Taylor expansion keeps full precision around the removable singularity.
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeFilter {
    coeffs: Vec<f64>,
}

impl PrototypeFilter {
    /// PHYDYAS filter with overlapping factor 4.
    pub fn phydyas_k4() -> Self {
        Self {
            coeffs: vec![1.0, 0.971960, std::f64::consts::FRAC_1_SQRT_2, 0.235147],
        }
    }

    /// Builds a filter from user-supplied coefficients `G_0..G_{K-1}`.
    ///
    /// Only structural invariants are enforced here; energy normalization is
    /// reported separately by [`PrototypeFilter::is_normalized`] so that
    /// verification tooling can inspect deliberately corrupted filters.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(CoexError::InvalidFilter("overlapping factor must be at least 1".into()));
        }
        if let Some(bad) = coeffs.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(CoexError::InvalidFilter(format!(
                "coefficients must be finite and non-negative, got {bad}"
            )));
        }
        if (coeffs[0] - 1.0).abs() > 1e-12 {
            return Err(CoexError::InvalidFilter(format!(
                "G_0 must equal 1, got {}",
                coeffs[0]
            )));
        }
        Ok(Self { coeffs })
    }

    /// Overlapping factor `K`.
    pub fn overlap(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `G_|k|`, zero outside `|k| < K`.
    pub fn coeff(&self, k: i64) -> f64 {
        self.coeffs.get(k.unsigned_abs() as usize).copied().unwrap_or(0.0)
    }

    /// Support half-width in units of `T`, i.e. `K / 2`.
    pub fn half_support(&self) -> f64 {
        self.overlap() as f64 / 2.0
    }

    /// `sum_{k=-K+1}^{K-1} G_|k|^2`.
    pub fn coefficient_energy(&self) -> f64 {
        let g0 = self.coeffs[0] * self.coeffs[0];
        g0 + 2.0 * self.coeffs[1..].iter().map(|g| g * g).sum::<f64>()
    }

    /// Time-domain energy `int g^2 du` in units of `T`, from the Fourier series.
    pub fn energy(&self) -> f64 {
        self.coefficient_energy() / self.overlap() as f64
    }

    /// Whether `sum G_|k|^2 = K` holds within [`NORMALIZATION_TOLERANCE`].
    pub fn is_normalized(&self) -> bool {
        (self.coefficient_energy() - self.overlap() as f64).abs() <= NORMALIZATION_TOLERANCE
    }

    /// Evaluates `g` at normalized time `t_norm = t / T`.
    pub fn evaluate(&self, t_norm: f64) -> f64 {
        let k_len = self.overlap() as f64;
        if t_norm.abs() > k_len / 2.0 {
            return 0.0;
        }
        let arg = 2.0 * PI * t_norm / k_len;
        let tail: f64 = self.coeffs[1..]
            .iter()
            .enumerate()
            .map(|(i, g)| 2.0 * g * (arg * (i + 1) as f64).cos())
            .sum();
        (self.coeffs[0] + tail) / k_len
    }

    /// Samples `g` at `samples_per_symbol` points per `T`.
    ///
    /// Returns `K*M + 1` taps including both support endpoints; tap `i`
    /// corresponds to `t_norm = (i - K*M/2) / M`.
    pub fn taps(&self, samples_per_symbol: usize) -> Result<Vec<f64>> {
        if samples_per_symbol < 2 {
            return Err(CoexError::InvalidArgument(format!(
                "samples per symbol must be at least 2, got {samples_per_symbol}"
            )));
        }
        let m = samples_per_symbol as f64;
        let len = self.overlap() * samples_per_symbol;
        let half = len as f64 / 2.0;
        Ok((0..=len).map(|i| self.evaluate((i as f64 - half) / m)).collect())
    }

    /// Continuous Fourier transform of `g` at `f_norm = f T`.
    ///
    /// Real because `g` is real and even; equals `G_0 = 1` at the origin.
    pub fn frequency_response(&self, f_norm: f64) -> f64 {
        let k_len = self.overlap() as i64;
        let kf = self.overlap() as f64 * f_norm;
        (-k_len + 1..k_len)
            .map(|k| self.coeff(k) * sinc(PI * (kf - k as f64)))
            .sum()
    }
}

impl Default for PrototypeFilter {
    fn default() -> Self {
        Self::phydyas_k4()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, QuadOptions};
    use num_complex::Complex64;
    use proptest::prelude::*;

    #[test]
    fn phydyas_coefficients() {
        let f = PrototypeFilter::phydyas_k4();
        assert_eq!(f.overlap(), 4);
        let expected = [1.0, 0.971960, std::f64::consts::FRAC_1_SQRT_2, 0.235147];
        for (g, e) in f.coeffs().iter().zip(expected) {
            assert!((g - e).abs() < 1e-7, "{g} vs {e}");
        }
        assert!((f.coefficient_energy() - 4.0).abs() < 1e-5);
        assert!(f.is_normalized());
    }

    #[test]
    fn evaluate_center_and_edges() {
        let f = PrototypeFilter::phydyas_k4();
        let g = f.coeffs();
        let center = (1.0 + 2.0 * (g[1] + g[2] + g[3])) / 4.0;
        assert!((f.evaluate(0.0) - center).abs() < 1e-15);
        assert!((f.evaluate(0.0) - 1.207107).abs() < 1e-6);
        assert!(f.evaluate(2.0).abs() < 1e-6);
        assert!(f.evaluate(-2.0).abs() < 1e-6);
        assert_eq!(f.evaluate(2.5), 0.0);
        assert_eq!(f.evaluate(-7.0), 0.0);
    }

    #[test]
    fn taps_layout() {
        let f = PrototypeFilter::phydyas_k4();
        let taps = f.taps(512).unwrap();
        assert_eq!(taps.len(), 2049);
        assert!((taps[1024] - 1.207107).abs() < 1e-6);
        assert!(taps[0].abs() < 1e-6 && taps[2048].abs() < 1e-6);
        for m in [2usize, 3, 8, 64] {
            let t = f.taps(m).unwrap();
            let n = t.len() - 1;
            for i in 0..=n {
                assert_eq!(t[i], t[n - i]);
            }
        }
        assert!(f.taps(0).is_err());
        assert!(f.taps(1).is_err());
    }

    #[test]
    fn frequency_response_sifts_coefficients() {
        let f = PrototypeFilter::phydyas_k4();
        assert!((f.frequency_response(0.0) - 1.0).abs() < 1e-15);
        for k in 1..4 {
            let v = f.frequency_response(k as f64 / 4.0);
            assert!((v - f.coeffs()[k]).abs() < 1e-12, "k={k}: {v}");
        }
        assert!(f.frequency_response(1.0).abs() < 1e-3);
    }

    #[test]
    fn frequency_response_matches_sampled_taps() {
        let f = PrototypeFilter::phydyas_k4();
        let m = 512usize;
        let taps = f.taps(m).unwrap();
        let half = (taps.len() - 1) as f64 / 2.0;
        for f_norm in [0.0, 0.25, 0.5, 1.0, 2.0] {
            let dft: Complex64 = taps
                .iter()
                .enumerate()
                .map(|(i, &g)| {
                    let t = (i as f64 - half) / m as f64;
                    g * Complex64::from_polar(1.0, -2.0 * PI * f_norm * t)
                })
                .sum::<Complex64>()
                / m as f64;
            let analytic = f.frequency_response(f_norm);
            assert!((dft.re - analytic).abs() < 1e-3, "f={f_norm}: {} vs {analytic}", dft.re);
            assert!(dft.im.abs() < 1e-9);
        }
    }

    #[test]
    fn energy_by_quadrature_is_unit() {
        let f = PrototypeFilter::phydyas_k4();
        let opts = QuadOptions { rel_tol: 1e-13, ..QuadOptions::default() };
        let e = integrate(|u| Complex64::new(f.evaluate(u).powi(2), 0.0), -2.0, 2.0, &opts)
            .unwrap()
            .re;
        assert!((e - f.energy()).abs() < 1e-12);
        assert!((e - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_malformed_coefficients() {
        assert!(PrototypeFilter::new(vec![]).is_err());
        assert!(PrototypeFilter::new(vec![0.9, 0.5]).is_err());
        assert!(PrototypeFilter::new(vec![1.0, -0.1]).is_err());
        assert!(PrototypeFilter::new(vec![1.0, f64::NAN]).is_err());
        let corrupted = PrototypeFilter::new(vec![1.0, 0.9, std::f64::consts::FRAC_1_SQRT_2, 0.235147]).unwrap();
        assert!(!corrupted.is_normalized());
    }

    proptest! {
        #[test]
        fn evaluate_is_even(t in -3.0f64..3.0) {
            let f = PrototypeFilter::phydyas_k4();
            prop_assert_eq!(f.evaluate(t), f.evaluate(-t));
        }

        #[test]
        fn response_is_even(x in -6.0f64..6.0) {
            let f = PrototypeFilter::phydyas_k4();
            prop_assert!((f.frequency_response(x) - f.frequency_response(-x)).abs() < 1e-14);
        }
    }
}
