//! Scenario runner: SNR sweeps over the precoding modes, energy efficiency,
//! timing, initialization robustness and the subarray oracle comparison.
//!
//! Every stage draws from its own seeded stream family, and Monte Carlo
//! evaluation reuses the same channel and noise draws across SNR points and
//! modes, so curves are smooth and reruns are bit-identical.

mod config;
mod energy;
mod run;
mod studies;

pub use config::{AngleSource, Mode, Scenario};
pub use energy::{energy_efficiency, EnergyModel};
pub use run::{
    compute_curves, evaluate_checks, horizontal_gap_db, run_scenario, statistical_design, Check, Curve, CurvePoint,
    CurveSet, RunOutcome,
};
pub use studies::{
    cdf_study, empirical_cdf, oracle_study, timing_report, CdfStudy, OracleRow, OracleStudy, TimingReport, TimingRow,
    BOUND_OVER_APPROX, CDF_SPREAD_LIMIT, MC_OVER_BOUND, ORACLE_RATIO, ORACLE_SHARE, TIMING_MIN_SIGNALS,
};
