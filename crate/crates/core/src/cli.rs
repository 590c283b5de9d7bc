//! Command-line front end.
//!
//! Exit codes: 0 success, 1 failed check or runtime error, 2 usage or
//! configuration error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::closedform::{
    build_table, interference_ofdm_to_oqam, interference_oqam_to_ofdm, interference_oqam_to_ofdm_sampled, l_grid,
    InterferenceTable,
};
use crate::config::{CoexConfig, CpRatio, Direction};
use crate::error::CoexError;
use crate::montecarlo::{estimate, McPlan, TimingOffset};
use crate::oracle;
use crate::psdmodel::{build_psd_table, psd_interference};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "coexist", version, about = "Cross-interference tables and simulations for OFDM/OQAM and CP-OFDM")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML scenario file; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// s2i (OQAM onto CP-OFDM), i2s (CP-OFDM onto OQAM) or o2o (CP-OFDM onto CP-OFDM).
    #[arg(long, global = true, default_value = "s2i")]
    direction: Direction,
    #[arg(long, global = true, default_value_t = -50.0, allow_negative_numbers = true)]
    lmin: f64,
    #[arg(long, global = true, default_value_t = 50.0, allow_negative_numbers = true)]
    lmax: f64,
    #[arg(long, global = true, default_value_t = 1.0, allow_negative_numbers = true)]
    lstep: f64,
    /// Interferer symbols per simulated burst.
    #[arg(long, global = true, default_value_t = 200)]
    symbols: usize,
    /// Number of independent bursts.
    #[arg(long, global = true, default_value_t = 64)]
    trials: usize,
    /// Carrier frequency offset in subcarrier spacings.
    #[arg(long = "delta-f", global = true, allow_negative_numbers = true)]
    delta_f: Option<f64>,
    /// Cyclic prefix as a fraction of the useful symbol, e.g. 1/8.
    #[arg(long = "cp-ratio", global = true)]
    cp_ratio: Option<CpRatio>,
    /// CP-OFDM interferer timing for o2o: "uniform" or a sample offset.
    #[arg(long, global = true, default_value = "uniform")]
    timing: String,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form interference table.
    Table,
    /// Monte-Carlo estimate alongside the closed-form and PSD values.
    Simulate,
    /// Cross-check closed forms against quadrature and structural identities.
    Verify,
    /// Spectral-density estimator table.
    Psd,
}

struct Failure {
    code: i32,
    message: String,
}

impl From<CoexError> for Failure {
    fn from(e: CoexError) -> Self {
        let code = match e {
            CoexError::InvalidConfig(_)
            | CoexError::ConfigFile { .. }
            | CoexError::InvalidArgument(_)
            | CoexError::UnsupportedDirection(_) => EXIT_USAGE,
            _ => EXIT_CHECK_FAILED,
        };
        Self { code, message: e.to_string() }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn load_config(cli: &Cli) -> Result<CoexConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => CoexConfig::load(path)?,
        None => CoexConfig::default_for(cli.direction),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(df) = cli.delta_f {
        cfg.delta_f = df;
    }
    if let Some(cp) = cli.cp_ratio {
        cfg.cp_ratio = cp;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(cli: &Cli, text: &str) -> Result<(), Failure> {
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure {
            code: EXIT_CHECK_FAILED,
            message: format!("cannot write {}: {e}", path.display()),
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure { code: EXIT_CHECK_FAILED, message: e.to_string() })
        }
    }
}

fn execute(cli: &Cli) -> Result<i32, Failure> {
    let cfg = load_config(cli)?;
    match cli.command {
        Command::Table => {
            let grid = l_grid(cli.lmin, cli.lmax, cli.lstep)?;
            emit(cli, &table_csv(&build_table(cli.direction, &grid, &cfg)?))?;
            Ok(EXIT_OK)
        }
        Command::Psd => {
            let grid = l_grid(cli.lmin, cli.lmax, cli.lstep)?;
            emit(cli, &table_csv(&build_psd_table(cli.direction, &grid, &cfg)?))?;
            Ok(EXIT_OK)
        }
        Command::Simulate => {
            let timing = parse_timing(&cli.timing)?;
            emit(cli, &simulate_csv(cli.direction, &cfg, &McPlan::new(cli.symbols, cli.trials), timing)?)?;
            Ok(EXIT_OK)
        }
        Command::Verify => {
            let report = verify(&cfg)?;
            let mut text = String::new();
            for c in &report {
                let _ = writeln!(text, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            let failed = report.iter().filter(|c| !c.passed).count();
            let _ = writeln!(text, "{} checks, {failed} failed", report.len());
            emit(cli, &text)?;
            Ok(if failed == 0 { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
    }
}

fn parse_timing(s: &str) -> Result<TimingOffset, Failure> {
    if s == "uniform" {
        return Ok(TimingOffset::UniformRandom);
    }
    s.parse::<usize>().map(TimingOffset::Fixed).map_err(|_| Failure {
        code: EXIT_USAGE,
        message: format!("timing must be \"uniform\" or a sample count, got {s:?}"),
    })
}

// Grid arithmetic leaves binary noise such as 0.30000000000000004.
fn fmt_l(l: f64) -> f64 {
    let r = (l * 1e9).round() / 1e9;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

pub fn table_csv(table: &InterferenceTable) -> String {
    let mut s = String::from("l,power_linear,power_db\n");
    for e in &table.entries {
        let _ = writeln!(s, "{},{:.16e},{:.6}", fmt_l(e.l), e.power, e.power_db);
    }
    s
}

fn simulate_csv(
    direction: Direction,
    cfg: &CoexConfig,
    plan: &McPlan,
    timing: TimingOffset,
) -> Result<String, CoexError> {
    let est = estimate(direction, cfg, plan, timing)?;
    let mut s = String::from("l,power_mc,std_err,power_closed,power_psd\n");
    for p in &est.per_l {
        let closed = match direction {
            Direction::OfdmToOqam => interference_ofdm_to_oqam(p.l, &cfg.filter, cfg.cp_ratio, cfg.var_qam),
            _ => interference_oqam_to_ofdm(p.l, &cfg.filter, cfg.cp_ratio, cfg.var_pam),
        };
        let psd = psd_interference(direction, p.l, cfg)?;
        let _ = writeln!(s, "{},{:.16e},{:.16e},{:.16e},{:.16e}", fmt_l(p.l), p.power_mean, p.std_error, closed, psd);
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: impl Into<String>, passed: bool, detail: String) -> Check {
    Check { name: name.into(), passed, detail }
}

// PHYDYAS K=4 values at var_pam 0.5 / var_qam 1 for cp 0 and 1/8:
// (cp num, cp den, l, s to i, i to s).
const REFERENCE: [(u32, u32, f64, f64, f64); 6] = [
    (0, 1, 0.0, 7.366849107196882e-01, 7.366849107196883e-01),
    (0, 1, 2.0, 1.446519197792073e-02, 1.446519197792073e-02),
    (1, 8, 0.0, 7.366910815280455e-01, 7.756120934300098e-01),
    (1, 8, 1.0, 9.665579704506937e-02, 8.286221367427501e-02),
    (1, 8, 3.0, 5.962026696790091e-03, 4.809978488689455e-03),
    (1, 8, 8.0, 7.977495533571684e-04, 7.494907314693622e-04),
];

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Runs every consistency check on the configured filter and CP ratio.
pub fn verify(cfg: &CoexConfig) -> Result<Vec<Check>, CoexError> {
    let f = &cfg.filter;
    let mut out = Vec::new();

    let ce = f.coefficient_energy();
    out.push(check(
        "filter normalization",
        f.is_normalized(),
        format!("sum G^2 = {ce:.9}, expected {}", f.overlap()),
    ));

    let oracle_energy = oracle::filter_energy(f)?;
    out.push(check(
        "oracle filter energy",
        (oracle_energy - 1.0).abs() < 1e-5,
        format!("int g^2 = {oracle_energy:.9}"),
    ));

    let ls = [0.0, 0.5, 1.0, 2.0, 3.0, 5.0, 8.0];
    let mut cps = vec![CpRatio::ZERO];
    if cfg.cp_ratio != CpRatio::ZERO {
        cps.push(cfg.cp_ratio);
    }
    for &cp in &cps {
        for (dir, var) in [(Direction::OqamToOfdm, cfg.var_pam), (Direction::OfdmToOqam, cfg.var_qam)] {
            let mut worst: f64 = 0.0;
            for &l in &ls {
                let q = oracle::quadrature_interference(dir, l, f, cp, var)?;
                let c = match dir {
                    Direction::OqamToOfdm => interference_oqam_to_ofdm(l, f, cp, var),
                    _ => interference_ofdm_to_oqam(l, f, cp, var),
                };
                worst = worst.max(rel(c, q));
            }
            out.push(check(
                format!("oracle equivalence {} cp={cp}", dir.short_name()),
                worst < 1e-9,
                format!("max relative deviation {worst:.3e}"),
            ));
        }
    }

    if f.overlap() == 4 {
        let mut worst: f64 = 0.0;
        for (p, q, l, s2i, i2s) in REFERENCE {
            let cp = CpRatio::new(p, q)?;
            worst = worst.max(rel(interference_oqam_to_ofdm(l, f, cp, 0.5), s2i));
            worst = worst.max(rel(interference_ofdm_to_oqam(l, f, cp, 1.0), i2s));
        }
        out.push(check(
            "reference values",
            worst < 1e-9,
            format!("max relative deviation from the PHYDYAS table {worst:.3e}"),
        ));
    }

    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let l = 0.37 * i as f64;
        worst = worst.max(rel(
            interference_oqam_to_ofdm(l, f, cfg.cp_ratio, cfg.var_pam),
            interference_oqam_to_ofdm(-l, f, cfg.cp_ratio, cfg.var_pam),
        ));
        worst = worst.max(rel(
            interference_ofdm_to_oqam(l, f, cfg.cp_ratio, cfg.var_qam),
            interference_ofdm_to_oqam(-l, f, cfg.cp_ratio, cfg.var_qam),
        ));
    }
    out.push(check("symmetry in l", worst < 1e-12, format!("max relative asymmetry {worst:.3e}")));

    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let l = -10.0 + 0.41 * i as f64;
        worst = worst.max(rel(
            interference_oqam_to_ofdm(l, f, CpRatio::ZERO, 0.5),
            interference_ofdm_to_oqam(l, f, CpRatio::ZERO, 1.0),
        ));
    }
    out.push(check("reciprocity without prefix", worst < 1e-12, format!("max relative deviation {worst:.3e}")));

    let m = cfg.subcarriers;
    let half = (m / 2) as i64;
    let mut total = 0.0;
    for l in -half..(m as i64 - half) {
        total += interference_oqam_to_ofdm_sampled(l as f64, f, cfg.cp_ratio, 1.0, m)?;
    }
    let constant = oracle::window_energy_total(f)?;
    let expected = 2.0;
    out.push(check(
        "power conservation",
        rel(total, constant) < 1e-6 && rel(constant, expected) < 1e-5,
        format!("sum over l = {total:.9}, oracle window energy = {constant:.9}, unit-energy value {expected}"),
    ));

    let mut worst: f64 = 0.0;
    for dir in [Direction::OqamToOfdm, Direction::OfdmToOqam] {
        for l in [0.0, 3.0] {
            worst = worst.max(oracle::convergence_check(dir, l, f, cfg.cp_ratio)?);
        }
    }
    out.push(check("quadrature convergence", worst < 1e-10, format!("max change on refinement {worst:.3e}")));
    Ok(out)
}
