//! Scenario description shared by every module, plus its TOML file form.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{CoexError, Result};
use crate::filterbank::PrototypeFilter;

/// Which system interferes on which.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// OFDM/OQAM secondary onto the CP-OFDM incumbent (`s2i`).
    OqamToOfdm,
    /// CP-OFDM incumbent onto the OFDM/OQAM secondary (`i2s`).
    OfdmToOqam,
    /// CP-OFDM secondary onto the CP-OFDM incumbent, asynchronous (`o2o`).
    OfdmToOfdm,
}

impl Direction {
    pub fn short_name(self) -> &'static str {
        match self {
            Direction::OqamToOfdm => "s2i",
            Direction::OfdmToOqam => "i2s",
            Direction::OfdmToOfdm => "o2o",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Direction {
    type Err = CoexError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "s2i" => Ok(Direction::OqamToOfdm),
            "i2s" => Ok(Direction::OfdmToOqam),
            "o2o" => Ok(Direction::OfdmToOfdm),
            other => Err(CoexError::InvalidArgument(format!(
                "unknown direction {other:?}, expected s2i, i2s or o2o"
            ))),
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Cyclic-prefix duration relative to the useful symbol time, `T_CP / T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CpRatio {
    num: u32,
    den: u32,
}

impl CpRatio {
    pub const ZERO: CpRatio = CpRatio { num: 0, den: 1 };

    pub fn new(num: u32, den: u32) -> Result<Self> {
        if den == 0 {
            return Err(CoexError::InvalidArgument("cp ratio denominator is zero".into()));
        }
        let g = gcd(num as u64, den as u64) as u32;
        Ok(Self { num: num / g, den: den / g })
    }

    pub fn num(self) -> u32 {
        self.num
    }

    pub fn den(self) -> u32 {
        self.den
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// CP length in samples at `m` samples per useful period.
    pub fn cp_samples(self, m: usize) -> Result<usize> {
        let scaled = m as u64 * self.num as u64;
        if !scaled.is_multiple_of(self.den as u64) {
            return Err(CoexError::InvalidConfig(format!(
                "{m} * {self} is not a whole number of samples"
            )));
        }
        Ok((scaled / self.den as u64) as usize)
    }

    // Exact time lattice in units of T / (2 den): the OQAM half-period spans
    // `den` units, a CP-OFDM symbol `2 (num + den)` units.
    fn lattice(self) -> (u64, u64, u64) {
        let half = self.den as u64;
        let ofdm = 2 * (self.num as u64 + self.den as u64);
        (half, ofdm, gcd(half, ofdm))
    }

    /// Number of consecutive CP-OFDM windows after which the geometry of the
    /// OQAM symbol grid relative to a window repeats.
    pub fn ofdm_window_period(self) -> usize {
        let (half, _, g) = self.lattice();
        (half / g) as usize
    }

    /// Number of consecutive OQAM symbols after which the geometry of the
    /// CP-OFDM symbol grid relative to the OQAM receive filter repeats.
    pub fn oqam_window_period(self) -> usize {
        let (_, ofdm, g) = self.lattice();
        (ofdm / g) as usize
    }
}

impl fmt::Display for CpRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.num == 0 {
            write!(f, "0")
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for CpRatio {
    type Err = CoexError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parse = |v: &str| {
            v.trim()
                .parse::<u32>()
                .map_err(|_| CoexError::InvalidArgument(format!("bad cp ratio {s:?}, expected P/Q")))
        };
        match s.split_once('/') {
            Some((n, d)) => CpRatio::new(parse(n)?, parse(d)?),
            None => CpRatio::new(parse(s)?, 1),
        }
    }
}

/// The OQAM phase factor `theta_m[n]`.
///
/// Interference powers do not depend on the convention (every factor has unit
/// modulus); own-signal reconstruction does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseConvention {
    /// `j^(n + m)`: adjacent lattice points differ by a quarter turn.
    #[default]
    Standard,
    /// `exp(j pi/2 floor((n + m) / 2))`.
    PrintedFloor,
}

impl PhaseConvention {
    pub fn theta(self, subcarrier: i64, symbol: i64) -> Complex64 {
        let exponent = match self {
            PhaseConvention::Standard => subcarrier + symbol,
            PhaseConvention::PrintedFloor => (subcarrier + symbol).div_euclid(2),
        };
        match exponent.rem_euclid(4) {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

impl FromStr for PhaseConvention {
    type Err = CoexError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(PhaseConvention::Standard),
            "floor" => Ok(PhaseConvention::PrintedFloor),
            other => Err(CoexError::InvalidArgument(format!(
                "unknown phase convention {other:?}, expected standard or floor"
            ))),
        }
    }
}

/// Full coexistence scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct CoexConfig {
    /// Total number of subcarriers `M`; also the samples per useful period.
    pub subcarriers: usize,
    pub cp_ratio: CpRatio,
    pub incumbent_set: BTreeSet<i64>,
    pub secondary_set: BTreeSet<i64>,
    /// Variance of the incumbent QAM symbols.
    pub var_qam: f64,
    /// Variance of the secondary PAM symbols.
    pub var_pam: f64,
    /// Secondary carrier offset in subcarrier spacings.
    pub delta_f: f64,
    pub seed: u64,
    pub phase: PhaseConvention,
    pub filter: PrototypeFilter,
}

impl Default for CoexConfig {
    /// 512 subcarriers, CP of T/8, unit-energy symbols, a single OQAM
    /// interferer on subcarrier 0 and CP-OFDM victims on -20..=20.
    fn default() -> Self {
        Self {
            subcarriers: 512,
            cp_ratio: CpRatio { num: 1, den: 8 },
            incumbent_set: (-20..=20).collect(),
            secondary_set: BTreeSet::from([0]),
            var_qam: 1.0,
            var_pam: 0.5,
            delta_f: 0.0,
            seed: 1,
            phase: PhaseConvention::Standard,
            filter: PrototypeFilter::phydyas_k4(),
        }
    }
}

impl CoexConfig {
    /// Default layout with the single interfering subcarrier placed on the
    /// system that interferes in `direction`.
    pub fn default_for(direction: Direction) -> Self {
        let mut cfg = Self::default();
        if direction == Direction::OfdmToOqam {
            std::mem::swap(&mut cfg.incumbent_set, &mut cfg.secondary_set);
        }
        cfg
    }

    pub fn cp_samples(&self) -> Result<usize> {
        self.cp_ratio.cp_samples(self.subcarriers)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.subcarriers;
        if m < 8 {
            return Err(CoexError::InvalidConfig(format!("need at least 8 subcarriers, got {m}")));
        }
        self.cp_samples()?;
        let lo = -(m as i64 / 2);
        let hi = m as i64 - m as i64 / 2 - 1;
        for (name, set) in [("incumbent", &self.incumbent_set), ("secondary", &self.secondary_set)] {
            if let Some(bad) = set.iter().find(|&&s| s < lo || s > hi) {
                return Err(CoexError::InvalidConfig(format!(
                    "{name} subcarrier {bad} outside [{lo}, {hi}]"
                )));
            }
        }
        for (name, v) in [("var_qam", self.var_qam), ("var_pam", self.var_pam)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CoexError::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.delta_f > -0.5 && self.delta_f <= 0.5) {
            return Err(CoexError::InvalidConfig(format!(
                "delta_f must lie in (-0.5, 0.5], got {}",
                self.delta_f
            )));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| CoexError::InvalidConfig(e.to_string()))?;
        let cfg = file.into_config()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CoexError::ConfigFile {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml_str(&text).map_err(|e| CoexError::ConfigFile {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum SubcarrierSpec {
    List(Vec<i64>),
    Range { from: i64, to: i64 },
}

impl SubcarrierSpec {
    fn into_set(self) -> BTreeSet<i64> {
        match self {
            SubcarrierSpec::List(v) => v.into_iter().collect(),
            SubcarrierSpec::Range { from, to } => (from..=to).collect(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FilterSpec {
    coeffs: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    subcarriers: Option<usize>,
    cp_ratio: Option<String>,
    incumbent_set: Option<SubcarrierSpec>,
    secondary_set: Option<SubcarrierSpec>,
    var_qam: Option<f64>,
    var_pam: Option<f64>,
    delta_f: Option<f64>,
    seed: Option<u64>,
    phase: Option<String>,
    filter: Option<FilterSpec>,
}

impl ConfigFile {
    fn into_config(self) -> Result<CoexConfig> {
        let mut cfg = CoexConfig::default();
        if let Some(m) = self.subcarriers {
            cfg.subcarriers = m;
        }
        if let Some(cp) = self.cp_ratio {
            cfg.cp_ratio = cp.parse()?;
        }
        if let Some(s) = self.incumbent_set {
            cfg.incumbent_set = s.into_set();
        }
        if let Some(s) = self.secondary_set {
            cfg.secondary_set = s.into_set();
        }
        if let Some(v) = self.var_qam {
            cfg.var_qam = v;
        }
        if let Some(v) = self.var_pam {
            cfg.var_pam = v;
        }
        if let Some(v) = self.delta_f {
            cfg.delta_f = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(p) = self.phase {
            cfg.phase = p.parse()?;
        }
        if let Some(f) = self.filter {
            cfg.filter = PrototypeFilter::new(f.coeffs)?;
        }
        Ok(cfg)
    }
}
