//! Monte-Carlo estimation of mean cross-interference powers.
//!
//! Each trial synthesizes a fresh interferer-only burst, demodulates every
//! victim subcarrier over all interior windows and records `|output|^2`.
//! A window is interior when every interferer symbol overlapping it lies
//! inside the burst, so bursts have no edge effects. Interior windows are
//! further trimmed to a whole number of grid realignment periods.
//!
//! Trial `t` draws from `ChaCha8Rng::seed_from_u64(seed)` on stream `t`.
//! Trials run in parallel and are aggregated in index order, so estimates
//! are bit-identical for any number of worker threads.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::closedform::to_db;
use crate::config::{CoexConfig, Direction};
use crate::error::{CoexError, Result};
use crate::txrx::{apply_frequency_shift, oqam_modulate, synthesize_ofdm, ofdm_modulate, OfdmDemodulator, OqamDemodulator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataMode {
    Random,
    /// All symbols zero; for testing the measurement chain.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McPlan {
    /// Interferer symbols per burst.
    pub n_symbols: usize,
    pub trials: usize,
    pub data: DataMode,
}

impl McPlan {
    pub fn new(n_symbols: usize, trials: usize) -> Self {
        Self { n_symbols, trials, data: DataMode::Random }
    }
}

/// Timing of a CP-OFDM interferer relative to the victim grid, in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimingOffset {
    /// Drawn uniformly from `[0, M + N_cp)` for every trial.
    UniformRandom,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassStat {
    pub power_mean: f64,
    pub std_error: f64,
    pub windows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McPoint {
    pub l: f64,
    pub victim: i64,
    pub power_mean: f64,
    pub std_error: f64,
    /// Statistics per victim window position within the realignment period.
    pub classes: Vec<ClassStat>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub direction: Direction,
    /// Sorted by increasing `l`.
    pub per_l: Vec<McPoint>,
    pub trials: usize,
    /// Victim windows measured per subcarrier, over all trials.
    pub windows: usize,
    pub config_snapshot: CoexConfig,
    pub seed: u64,
}

impl McEstimate {
    pub fn point(&self, l: f64) -> Option<&McPoint> {
        self.per_l.iter().find(|p| (p.l - l).abs() < 1e-9)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionFloor {
    /// Mean squared symbol error relative to the symbol variance.
    pub mse: f64,
    pub mse_db: f64,
}

fn qpsk<R: Rng>(rng: &mut R, variance: f64) -> Complex64 {
    let a = (variance / 2.0).sqrt();
    Complex64::new(if rng.random() { a } else { -a }, if rng.random() { a } else { -a })
}

fn pam<R: Rng>(rng: &mut R, variance: f64) -> f64 {
    let a = variance.sqrt();
    if rng.random() {
        a
    } else {
        -a
    }
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn single(set: &std::collections::BTreeSet<i64>, system: &str) -> Result<i64> {
    match (set.len(), set.iter().next()) {
        (1, Some(&m)) => Ok(m),
        _ => Err(CoexError::InvalidConfig(format!(
            "the interfering {system} system must occupy exactly one subcarrier, got {}",
            set.len()
        ))),
    }
}

fn ceil_div(a: i64, b: i64) -> i64 {
    -(-a).div_euclid(b)
}

// Measurement plan of one trial: victim windows in order with their class.
struct Windows {
    first: i64,
    count: i64,
    period: i64,
}

impl Windows {
    fn from_interior(lo: i64, hi: i64, period: i64, n_symbols: usize) -> Result<Self> {
        let first = lo + (period - lo.rem_euclid(period)) % period;
        let count = if hi >= first { (hi - first + 1) / period * period } else { 0 };
        if count == 0 {
            return Err(CoexError::BurstTooShort { symbols: n_symbols });
        }
        Ok(Self { first, count, period })
    }

    fn iter(&self) -> impl Iterator<Item = (i64, usize)> + '_ {
        (self.first..self.first + self.count).map(move |n| (n, n.rem_euclid(self.period) as usize))
    }
}

// Per-trial sums of |output|^2 indexed [victim][class].
struct TrialSums {
    sums: Vec<Vec<f64>>,
    counts: Vec<usize>,
}

impl TrialSums {
    fn new(victims: usize, classes: usize) -> Self {
        Self { sums: vec![vec![0.0; classes]; victims], counts: vec![0; classes] }
    }
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn run_trials<F>(trials: usize, classes: usize, victims: usize, f: F) -> Result<Vec<TrialSums>>
where
    F: Fn(usize) -> Result<TrialSums> + Sync,
{
    if trials == 0 {
        return Err(CoexError::InvalidArgument("at least one trial is required".into()));
    }
    let out: Vec<TrialSums> = (0..trials).into_par_iter().map(&f).collect::<Result<_>>()?;
    debug_assert!(out.iter().all(|t| t.counts.len() == classes && t.sums.len() == victims));
    Ok(out)
}

fn aggregate(
    direction: Direction,
    config: &CoexConfig,
    ls: &[(f64, i64)],
    trials: Vec<TrialSums>,
    scale: f64,
) -> McEstimate {
    let classes = trials[0].counts.len();
    let windows: usize = trials.iter().map(|t| t.counts.iter().sum::<usize>()).sum();
    let mut per_l: Vec<McPoint> = ls
        .iter()
        .enumerate()
        .map(|(v, &(l, victim))| {
            let trial_means: Vec<f64> = trials
                .iter()
                .map(|t| t.sums[v].iter().sum::<f64>() / t.counts.iter().sum::<usize>() as f64)
                .collect();
            let total: f64 = trials.iter().map(|t| t.sums[v].iter().sum::<f64>()).sum();
            let (_, se) = mean_and_se(&trial_means);
            let class_stats = (0..classes)
                .map(|c| {
                    let n: usize = trials.iter().map(|t| t.counts[c]).sum();
                    let means: Vec<f64> = trials
                        .iter()
                        .filter(|t| t.counts[c] > 0)
                        .map(|t| t.sums[v][c] / t.counts[c] as f64)
                        .collect();
                    let s: f64 = trials.iter().map(|t| t.sums[v][c]).sum();
                    let (_, cse) = if means.is_empty() { (0.0, 0.0) } else { mean_and_se(&means) };
                    ClassStat { power_mean: scale * s / n.max(1) as f64, std_error: scale * cse, windows: n }
                })
                .collect();
            McPoint {
                l,
                victim,
                power_mean: scale * total / windows as f64,
                std_error: scale * se,
                classes: class_stats,
            }
        })
        .collect();
    per_l.sort_by(|a, b| a.l.total_cmp(&b.l));
    McEstimate { direction, per_l, trials: trials.len(), windows, config_snapshot: config.clone(), seed: config.seed }
}

/// OQAM interferer on the single secondary subcarrier, CP-OFDM victims on
/// every incumbent subcarrier.
pub fn estimate_oqam_to_ofdm(config: &CoexConfig, plan: &McPlan) -> Result<McEstimate> {
    config.validate()?;
    let m_s = single(&config.secondary_set, "secondary")?;
    let victims: Vec<i64> = config.incumbent_set.iter().copied().collect();
    let ls: Vec<(f64, i64)> = victims.iter().map(|&m| (m_s as f64 + config.delta_f - m as f64, m)).collect();

    let m = config.subcarriers as i64;
    let sym = m + config.cp_samples()? as i64;
    let half = config.filter.overlap() as i64 * m / 2;
    let n = plan.n_symbols as i64;
    // Window n_i covers samples [n_i sym, n_i sym + m).
    let lo = ceil_div(half - m / 2 + 1, sym);
    let hi = (n * (m / 2) - m - half).div_euclid(sym);
    let windows = Windows::from_interior(lo, hi, config.cp_ratio.ofdm_window_period() as i64, plan.n_symbols)?;

    let rx = OfdmDemodulator::new(config)?;
    let classes = windows.period as usize;
    let trials = run_trials(plan.trials, classes, victims.len(), |t| {
        let mut rng = trial_rng(config.seed, t);
        let symbols: Vec<f64> = match plan.data {
            DataMode::Random => (0..n).map(|_| pam(&mut rng, config.var_pam)).collect(),
            DataMode::Zero => vec![0.0; plan.n_symbols],
        };
        let burst = oqam_modulate(config, &BTreeMap::from([(m_s, symbols)]), 0..n)?;
        let burst = apply_frequency_shift(&burst, config.delta_f);
        let mut out = TrialSums::new(victims.len(), classes);
        let mut bins = Vec::with_capacity(config.subcarriers);
        for (n_i, class) in windows.iter() {
            rx.demodulate_all(&burst, n_i, &mut bins)?;
            for (v, &mv) in victims.iter().enumerate() {
                out.sums[v][class] += bins[rx.bin(mv)].norm_sqr();
            }
            out.counts[class] += 1;
        }
        Ok(out)
    })?;
    Ok(aggregate(Direction::OqamToOfdm, config, &ls, trials, 1.0))
}

/// CP-OFDM interferer on the single incumbent subcarrier, OQAM victims on
/// every secondary subcarrier. Reports twice the mean squared real-part
/// error, the power landing on a QAM-rate pair of OQAM symbols.
pub fn estimate_ofdm_to_oqam(config: &CoexConfig, plan: &McPlan) -> Result<McEstimate> {
    config.validate()?;
    let m_i = single(&config.incumbent_set, "incumbent")?;
    let victims: Vec<i64> = config.secondary_set.iter().copied().collect();
    let ls: Vec<(f64, i64)> = victims.iter().map(|&m| (m as f64 + config.delta_f - m_i as f64, m)).collect();

    let m = config.subcarriers as i64;
    let ncp = config.cp_samples()? as i64;
    let sym = m + ncp;
    let half = config.filter.overlap() as i64 * m / 2;
    let n = plan.n_symbols as i64;
    // OQAM symbol n_s spans samples [n_s m/2 - half, n_s m/2 + half].
    let lo = ceil_div(half - ncp, m / 2);
    let hi = ((n - 1) * sym + m - 1 - half).div_euclid(m / 2);
    let windows = Windows::from_interior(lo, hi, config.cp_ratio.oqam_window_period() as i64, plan.n_symbols)?;

    let rx = OqamDemodulator::new(config)?;
    let classes = windows.period as usize;
    let trials = run_trials(plan.trials, classes, victims.len(), |t| {
        let mut rng = trial_rng(config.seed, t);
        let symbols: Vec<Complex64> = match plan.data {
            DataMode::Random => (0..n).map(|_| qpsk(&mut rng, config.var_qam)).collect(),
            DataMode::Zero => vec![Complex64::new(0.0, 0.0); plan.n_symbols],
        };
        let burst = ofdm_modulate(config, &BTreeMap::from([(m_i, symbols)]), 0..n)?;
        let burst = apply_frequency_shift(&burst, -config.delta_f);
        let mut out = TrialSums::new(victims.len(), classes);
        let mut bins = Vec::with_capacity(config.subcarriers);
        for (n_s, class) in windows.iter() {
            rx.correlate_all(&burst, n_s, &mut bins)?;
            for (v, &mv) in victims.iter().enumerate() {
                out.sums[v][class] += rx.recover(bins[rx.bin(mv)], n_s, mv).powi(2);
            }
            out.counts[class] += 1;
        }
        Ok(out)
    })?;
    Ok(aggregate(Direction::OfdmToOqam, config, &ls, trials, 2.0))
}

/// Both systems CP-OFDM: the secondary runs CP-OFDM with QPSK of variance
/// `var_qam` on its single subcarrier, delayed by the timing offset.
pub fn estimate_ofdm_to_ofdm(config: &CoexConfig, plan: &McPlan, timing: TimingOffset) -> Result<McEstimate> {
    config.validate()?;
    let m_s = single(&config.secondary_set, "secondary")?;
    let victims: Vec<i64> = config.incumbent_set.iter().copied().collect();
    let ls: Vec<(f64, i64)> = victims.iter().map(|&m| (m_s as f64 + config.delta_f - m as f64, m)).collect();

    let m = config.subcarriers as i64;
    let ncp = config.cp_samples()? as i64;
    let sym = m + ncp;
    if let TimingOffset::Fixed(off) = timing {
        if off as i64 >= sym {
            return Err(CoexError::InvalidArgument(format!("timing offset {off} exceeds the symbol length {sym}")));
        }
    }
    let n = plan.n_symbols as i64;
    // For any offset in [0, sym) window n_i only sees secondary symbols
    // n_i - 1 and n_i.
    let windows = Windows::from_interior(1, n - 1, 1, plan.n_symbols)?;

    let rx = OfdmDemodulator::new(config)?;
    let trials = run_trials(plan.trials, 1, victims.len(), |t| {
        let mut rng = trial_rng(config.seed, t);
        let offset = match timing {
            TimingOffset::UniformRandom => rng.random_range(0..sym),
            TimingOffset::Fixed(off) => off as i64,
        };
        let symbols: Vec<Complex64> = match plan.data {
            DataMode::Random => (0..n).map(|_| qpsk(&mut rng, config.var_qam)).collect(),
            DataMode::Zero => vec![Complex64::new(0.0, 0.0); plan.n_symbols],
        };
        let mut burst = synthesize_ofdm(config, &BTreeMap::from([(m_s, symbols)]), 0..n)?;
        burst.origin -= offset;
        let burst = apply_frequency_shift(&burst, config.delta_f);
        let mut out = TrialSums::new(victims.len(), 1);
        let mut bins = Vec::with_capacity(config.subcarriers);
        for (n_i, class) in windows.iter() {
            rx.demodulate_all(&burst, n_i, &mut bins)?;
            for (v, &mv) in victims.iter().enumerate() {
                out.sums[v][class] += bins[rx.bin(mv)].norm_sqr();
            }
            out.counts[class] += 1;
        }
        Ok(out)
    })?;
    Ok(aggregate(Direction::OfdmToOfdm, config, &ls, trials, 1.0))
}

/// Dispatches on `direction`; `timing` only applies to CP-OFDM onto CP-OFDM.
pub fn estimate(direction: Direction, config: &CoexConfig, plan: &McPlan, timing: TimingOffset) -> Result<McEstimate> {
    match direction {
        Direction::OqamToOfdm => estimate_oqam_to_ofdm(config, plan),
        Direction::OfdmToOqam => estimate_ofdm_to_oqam(config, plan),
        Direction::OfdmToOfdm => estimate_ofdm_to_ofdm(config, plan, timing),
    }
}

/// Mean squared error of an isolated OQAM link over every secondary
/// subcarrier, measured on symbols clear of the burst edges.
pub fn self_reconstruction_floor(config: &CoexConfig, plan: &McPlan) -> Result<ReconstructionFloor> {
    config.validate()?;
    let n = plan.n_symbols as i64;
    let reach = 2 * config.filter.overlap() as i64 - 1;
    if n < 2 * reach + 1 {
        return Err(CoexError::BurstTooShort { symbols: plan.n_symbols });
    }
    let rx = OqamDemodulator::new(config)?;
    let subcarriers: Vec<i64> = config.secondary_set.iter().copied().collect();
    let trials = run_trials(plan.trials, 1, 1, |t| {
        let mut rng = trial_rng(config.seed, t);
        let data: BTreeMap<i64, Vec<f64>> = subcarriers
            .iter()
            .map(|&m| {
                let v = match plan.data {
                    DataMode::Random => (0..n).map(|_| pam(&mut rng, config.var_pam)).collect(),
                    DataMode::Zero => vec![0.0; plan.n_symbols],
                };
                (m, v)
            })
            .collect();
        let burst = oqam_modulate(config, &data, 0..n)?;
        let mut out = TrialSums::new(1, 1);
        let mut bins = Vec::with_capacity(config.subcarriers);
        for n_s in reach..n - reach {
            rx.correlate_all(&burst, n_s, &mut bins)?;
            for &m in &subcarriers {
                let e = rx.recover(bins[rx.bin(m)], n_s, m) - data[&m][n_s as usize];
                out.sums[0][0] += e * e;
                out.counts[0] += 1;
            }
        }
        Ok(out)
    })?;
    let (err, count) = trials.iter().fold((0.0, 0usize), |(e, c), t| (e + t.sums[0][0], c + t.counts[0]));
    let mse = err / count as f64 / config.var_pam;
    Ok(ReconstructionFloor { mse, mse_db: to_db(mse) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::CpRatio;
    use std::collections::BTreeSet;

    fn small(direction: Direction) -> CoexConfig {
        let mut cfg = CoexConfig {
            subcarriers: 64,
            cp_ratio: CpRatio::new(1, 8).unwrap(),
            incumbent_set: (-6..=6).collect(),
            secondary_set: BTreeSet::from([0]),
            ..CoexConfig::default()
        };
        if direction == Direction::OfdmToOqam {
            std::mem::swap(&mut cfg.incumbent_set, &mut cfg.secondary_set);
        }
        cfg
    }

    #[test]
    fn zero_data_gives_zero_power() {
        let plan = McPlan { n_symbols: 40, trials: 3, data: DataMode::Zero };
        for dir in [Direction::OqamToOfdm, Direction::OfdmToOqam, Direction::OfdmToOfdm] {
            let est = estimate(dir, &small(dir), &plan, TimingOffset::UniformRandom).unwrap();
            assert!(est.per_l.iter().all(|p| p.power_mean == 0.0 && p.std_error == 0.0), "{dir}");
        }
        let floor = self_reconstruction_floor(&small(Direction::OqamToOfdm), &plan).unwrap();
        assert_eq!(floor.mse, 0.0);
    }

    #[test]
    fn deterministic_under_any_thread_count() {
        let cfg = small(Direction::OqamToOfdm);
        let plan = McPlan::new(40, 6);
        let a = estimate_oqam_to_ofdm(&cfg, &plan).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| estimate_oqam_to_ofdm(&cfg, &plan).unwrap());
        assert_eq!(a, b);
        let other = estimate_oqam_to_ofdm(&CoexConfig { seed: 2, ..cfg }, &plan).unwrap();
        assert_ne!(a.per_l, other.per_l);
    }

    #[test]
    fn spectral_distance_labels() {
        let cfg = CoexConfig { delta_f: 0.25, ..small(Direction::OqamToOfdm) };
        let est = estimate_oqam_to_ofdm(&cfg, &McPlan::new(40, 2)).unwrap();
        assert_eq!(est.per_l.len(), 13);
        assert!((est.per_l[0].l + 5.75).abs() < 1e-12 && est.per_l[0].victim == 6);
        let cfg = CoexConfig { delta_f: 0.25, ..small(Direction::OfdmToOqam) };
        let est = estimate_ofdm_to_oqam(&cfg, &McPlan::new(20, 2)).unwrap();
        assert!((est.per_l[0].l + 5.75).abs() < 1e-12 && est.per_l[0].victim == -6);
    }

    #[test]
    fn requires_single_interferer_and_long_bursts() {
        let cfg = CoexConfig { secondary_set: BTreeSet::from([0, 1]), ..small(Direction::OqamToOfdm) };
        assert!(matches!(estimate_oqam_to_ofdm(&cfg, &McPlan::new(40, 1)), Err(CoexError::InvalidConfig(_))));
        let cfg = small(Direction::OqamToOfdm);
        assert!(matches!(estimate_oqam_to_ofdm(&cfg, &McPlan::new(12, 1)), Err(CoexError::BurstTooShort { .. })));
        assert!(estimate_oqam_to_ofdm(&cfg, &McPlan::new(40, 0)).is_err());
        assert!(estimate_ofdm_to_ofdm(&cfg, &McPlan::new(40, 1), TimingOffset::Fixed(72)).is_err());
    }

    #[test]
    fn window_classes_cover_the_period() {
        let cfg = small(Direction::OqamToOfdm);
        let est = estimate_oqam_to_ofdm(&cfg, &McPlan::new(60, 2)).unwrap();
        let p = est.point(0.0).unwrap();
        assert_eq!(p.classes.len(), 4);
        let n: usize = p.classes.iter().map(|c| c.windows).sum();
        assert_eq!(n, est.windows);
        assert!(p.classes.iter().all(|c| c.windows == n / 4));
    }

    #[test]
    fn synchronous_ofdm_is_orthogonal() {
        let cfg = small(Direction::OqamToOfdm);
        let est = estimate_ofdm_to_ofdm(&cfg, &McPlan::new(20, 2), TimingOffset::Fixed(0)).unwrap();
        for p in &est.per_l {
            if p.l == 0.0 {
                assert!((p.power_mean - cfg.var_qam).abs() < 1e-12);
            } else {
                assert!(p.power_mean < 1e-25, "l={} {}", p.l, p.power_mean);
            }
        }
    }

    #[test]
    fn floor_of_full_burst() {
        let cfg = CoexConfig { secondary_set: (-6..=6).collect(), ..small(Direction::OqamToOfdm) };
        let floor = self_reconstruction_floor(&cfg, &McPlan::new(40, 2)).unwrap();
        assert!(floor.mse_db < -50.0, "{}", floor.mse_db);
        assert!(self_reconstruction_floor(&cfg, &McPlan::new(10, 1)).is_err());
    }
}
