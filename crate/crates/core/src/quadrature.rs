//! Globally adaptive 15-point Gauss–Kronrod quadrature for complex integrands.

use num_complex::Complex64;

use crate::error::{CoexError, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd-indexed Kronrod nodes plus the center.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Each breakpoint interval starts split into this many equal panels.
    pub initial_panels: usize,
    pub max_subdivisions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-12, abs_tol: 0.0, initial_panels: 1, max_subdivisions: 20_000 }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
    abs_value: f64,
}

fn kronrod<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = fc.norm() * WGK[7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kron += (f1 + f2) * WGK[j];
        abs_sum += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            gauss += (f1 + f2) * WG[j / 2];
        }
    }
    Panel {
        a,
        b,
        value: kron * half,
        error: ((kron - gauss) * half).norm(),
        abs_value: abs_sum * half.abs(),
    }
}

/// Integrates `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<Complex64> {
    integrate_with_breaks(f, &[a, b], opts)
}

/// Integrates `f` over `[points[0], points[last]]`, never placing a panel
/// across an interior breakpoint. Use breakpoints where the integrand has
/// kinks or jumps.
pub fn integrate_with_breaks<F: Fn(f64) -> Complex64>(
    f: F,
    points: &[f64],
    opts: &QuadOptions,
) -> Result<Complex64> {
    if points.len() < 2 {
        return Err(CoexError::InvalidArgument("quadrature needs at least two points".into()));
    }
    let mut panels = Vec::new();
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a == b {
            continue;
        }
        let n = opts.initial_panels.max(1);
        let step = (b - a) / n as f64;
        for i in 0..n {
            let lo = a + step * i as f64;
            let hi = if i + 1 == n { b } else { lo + step };
            panels.push(kronrod(&f, lo, hi));
        }
    }
    if panels.is_empty() {
        return Ok(Complex64::new(0.0, 0.0));
    }

    loop {
        let total: Complex64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        let abs_total: f64 = panels.iter().map(|p| p.abs_value).sum();
        // Below this the estimate is dominated by rounding, not truncation.
        let roundoff = 50.0 * f64::EPSILON * abs_total;
        let target = opts.abs_tol.max(opts.rel_tol * total.norm()).max(roundoff);
        if error <= target {
            return Ok(total);
        }
        if panels.len() >= opts.max_subdivisions {
            let (a, b) = (points[0], points[points.len() - 1]);
            return Err(CoexError::QuadratureNonConvergence { a, b, error });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.error > acc.1 { (i, p.error) } else { acc });
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            return Err(CoexError::QuadratureNonConvergence { a: p.a, b: p.b, error: p.error });
        }
        panels.push(kronrod(&f, p.a, mid));
        panels.push(kronrod(&f, mid, p.b));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real<F: Fn(f64) -> f64>(f: F) -> impl Fn(f64) -> Complex64 {
        move |x| Complex64::new(f(x), 0.0)
    }

    #[test]
    fn polynomials_are_exact() {
        let v = integrate(real(|x| x.powi(5) - 3.0 * x * x), -1.0, 2.0, &QuadOptions::default()).unwrap();
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0);
        assert!((v.re - exact).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_complex_exponential() {
        let l = 7.3;
        let v = integrate(
            |t| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * l * t),
            0.0,
            1.0,
            &QuadOptions::default(),
        )
        .unwrap();
        let x = 2.0 * std::f64::consts::PI * l;
        let exact = Complex64::new(x.sin() / x, (1.0 - x.cos()) / x);
        assert!((v - exact).norm() < 1e-13);
    }

    #[test]
    fn breakpoints_handle_kinks() {
        let v = integrate_with_breaks(real(|x: f64| x.abs()), &[-1.0, 0.0, 3.0], &QuadOptions::default()).unwrap();
        assert!((v.re - 5.0).abs() < 1e-14);
    }

    #[test]
    fn reports_non_convergence() {
        let opts = QuadOptions { max_subdivisions: 4, rel_tol: 1e-15, ..QuadOptions::default() };
        let r = integrate(real(|x: f64| (1.0 / x).sin()), 1e-6, 1.0, &opts);
        assert!(matches!(r, Err(CoexError::QuadratureNonConvergence { .. })));
    }

    #[test]
    fn zero_integrand_and_empty_range() {
        let z = integrate(real(|_| 0.0), 0.0, 1.0, &QuadOptions::default()).unwrap();
        assert_eq!(z, Complex64::new(0.0, 0.0));
        let e = integrate(real(|x| x), 2.0, 2.0, &QuadOptions::default()).unwrap();
        assert_eq!(e, Complex64::new(0.0, 0.0));
    }
}
