//! Cross-interference between OFDM/OQAM and CP-OFDM systems sharing a band.
//!
//! The crate evaluates the mean interference power that a subcarrier of one
//! system injects onto a subcarrier of the other after demodulation, as a
//! function of their spectral distance `l`:
//!
//! - [`closedform`] gives exact values from truncated-window sinc sums;
//! - [`oracle`] recomputes them by brute-force quadrature;
//! - [`montecarlo`] measures them on simulated baseband signals built by
//!   [`txrx`];
//! - [`psdmodel`] provides the spectral-density estimator for comparison.

pub mod cli;
pub mod closedform;
pub mod config;
pub mod error;
pub mod filterbank;
pub mod montecarlo;
pub mod oracle;
pub mod psdmodel;
pub mod quadrature;
pub mod txrx;

pub use closedform::{
    build_table, interference_ofdm_to_oqam, interference_oqam_to_ofdm, to_db, InterferenceTable, Model, TableEntry,
};
pub use config::{CoexConfig, CpRatio, Direction, PhaseConvention};
pub use error::{CoexError, Result};
pub use filterbank::PrototypeFilter;
pub use montecarlo::{McEstimate, McPlan, TimingOffset};
pub use txrx::DiscreteSignal;
