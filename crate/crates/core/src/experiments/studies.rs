//! Timing, initialization-robustness and subarray-oracle studies.

use std::fmt::Write as _;
use std::fs;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::config::Scenario;
use super::run::{stage_stream, tag, Check};
use crate::capacity::{average_mi, bound_shift, lower_bound, lower_bound_approx, noise_variance, HybridPrecoder};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::optimizer::{algorithm2, default_digital_init, project_sphere};
use crate::rng::complex_gaussian;
use crate::subarray::{algorithm1, exhaustive_oracle, DesignOptions};

/// Smallest signal set for which the timing ordering is asserted; below it every
/// evaluation takes well under a millisecond.
pub const TIMING_MIN_SIGNALS: usize = 16;
pub const MC_OVER_BOUND: f64 = 10.0;
pub const BOUND_OVER_APPROX: f64 = 5.0;
pub const CDF_SPREAD_LIMIT: f64 = 0.02;
pub const ORACLE_RATIO: f64 = 0.9;
pub const ORACLE_SHARE: f64 = 0.9;

const ORACLE_TAG: u64 = 5;
const TIMING_BATCHES: usize = 5;
const MIN_BATCH: Duration = Duration::from_millis(50);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingRow {
    pub snr_db: f64,
    /// Mean seconds per evaluation.
    pub t_mc: f64,
    pub t_lower_bound: f64,
    pub t_approx: f64,
}

#[derive(Debug, Clone)]
pub struct TimingReport {
    pub rows: Vec<TimingRow>,
    pub n_signals: usize,
}

impl TimingReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("snr_db,t_mc,t_lower_bound,t_approx\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{:.6e},{:.6e},{:.6e}", r.snr_db, r.t_mc, r.t_lower_bound, r.t_approx);
        }
        out
    }

    fn total(&self, f: impl Fn(&TimingRow) -> f64) -> f64 {
        self.rows.iter().map(f).sum()
    }

    /// Total Monte Carlo time over total lower-bound time, across the grid.
    pub fn mc_over_bound(&self) -> f64 {
        self.total(|r| r.t_mc) / self.total(|r| r.t_lower_bound)
    }

    pub fn bound_over_approx(&self) -> f64 {
        self.total(|r| r.t_lower_bound) / self.total(|r| r.t_approx)
    }

    /// Ordering checks; empty for signal sets too small to time reliably.
    pub fn checks(&self) -> Vec<Check> {
        if self.n_signals < TIMING_MIN_SIGNALS {
            return Vec::new();
        }
        let (a, b) = (self.mc_over_bound(), self.bound_over_approx());
        vec![
            Check {
                name: "mc_over_bound".into(),
                passed: a >= MC_OVER_BOUND,
                detail: format!("t_MC / t_L = {a:.1} (need {MC_OVER_BOUND})"),
            },
            Check {
                name: "bound_over_approx".into(),
                passed: b >= BOUND_OVER_APPROX,
                detail: format!("t_L / t_LA = {b:.1} (need {BOUND_OVER_APPROX})"),
            },
        ]
    }
}

/// Wall-clock seconds per call: the fastest of several batch means, each batch
/// repeating the call for a minimum duration. Taking the fastest batch filters
/// out interference from other processes.
fn time_per_call(mut f: impl FnMut() -> Result<()>) -> Result<f64> {
    f()?;
    let mut best = f64::INFINITY;
    for _ in 0..TIMING_BATCHES {
        let start = Instant::now();
        let mut reps = 0u32;
        while reps == 0 || start.elapsed() < MIN_BATCH {
            f()?;
            reps += 1;
        }
        best = best.min(start.elapsed().as_secs_f64() / f64::from(reps));
    }
    Ok(best)
}

/// Design used by the timing and cdf studies: `algorithm1` with the default digital start.
fn reference_precoder(scenario: &Scenario) -> Result<(crate::channel::StatisticalCsi, HybridPrecoder)> {
    let csi = scenario.csi(0)?;
    let mut rng = stage_stream(scenario.seed, tag::DESIGN, 0);
    let analog = algorithm1(&csi.a_t, scenario.n_rf, &mut rng, &scenario.design_options())?;
    let b0 = default_digital_init(&csi.a_t, &analog.f_bar, scenario.n_s, scenario.power)?;
    let p = HybridPrecoder::new(analog.partition, analog.phases, b0, scenario.power)?;
    Ok((csi, p))
}

/// Wall-clock time per evaluation of the Monte Carlo MI and of both bounds at each
/// SNR of the grid, for one fixed precoder. Writes `timing.csv`.
pub fn timing_report(scenario: &Scenario) -> Result<TimingReport> {
    scenario.validate()?;
    let signals = scenario.signals()?;
    let (csi, p) = reference_precoder(scenario)?;
    let mut rows = Vec::new();
    for &snr_db in &scenario.snr_db {
        let sigma2 = noise_variance(snr_db, scenario.power);
        let t_mc = time_per_call(|| {
            let mut rng = stage_stream(scenario.seed, tag::EVAL, 0);
            average_mi(&mut rng, &csi, &p, &signals, sigma2, scenario.n_channel, scenario.n_noise).map(drop)
        })?;
        let t_lower_bound = time_per_call(|| lower_bound(&csi, &p, &signals, sigma2).map(drop))?;
        let t_approx = time_per_call(|| lower_bound_approx(&csi, &p, &signals, sigma2).map(drop))?;
        rows.push(TimingRow { snr_db, t_mc, t_lower_bound, t_approx });
    }
    let report = TimingReport { rows, n_signals: signals.len() };
    let dir = scenario.scenario_dir();
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("timing.csv"), report.to_csv())?;
    Ok(report)
}

/// Sorted distinct values with the fraction of samples at or below each.
pub fn empirical_cdf(values: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        let level = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 = level,
            _ => out.push((v, level)),
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct CdfStudy {
    pub snr_db: f64,
    /// Final shifted approximate-bound objectives, sorted ascending.
    pub finals: Vec<f64>,
    pub iterations: Vec<usize>,
}

impl CdfStudy {
    /// `(max - min) / mean` of the final objectives.
    pub fn spread(&self) -> f64 {
        let n = self.finals.len() as f64;
        let mean = self.finals.iter().sum::<f64>() / n;
        (self.finals[self.finals.len() - 1] - self.finals[0]) / mean
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("objective,cdf\n");
        for (v, p) in empirical_cdf(&self.finals) {
            let _ = writeln!(out, "{v},{p}");
        }
        out
    }

    pub fn check(&self) -> Check {
        let s = self.spread();
        Check {
            name: "cdf_spread".into(),
            passed: s <= CDF_SPREAD_LIMIT,
            detail: format!("(max - min) / mean = {:.4}% over {} inits", 100.0 * s, self.finals.len()),
        }
    }
}

/// Runs the manifold ascent from `n_inits` random starts at the first SNR of the
/// grid: analog part from a single-restart `algorithm1`, digital part Gaussian and
/// scaled onto the power sphere. Writes `cdf.csv`.
pub fn cdf_study(scenario: &Scenario, n_inits: usize) -> Result<CdfStudy> {
    scenario.validate()?;
    if n_inits == 0 {
        return Err(Error::InvalidArgument("need at least one initialization".into()));
    }
    let signals = scenario.signals()?;
    let csi = scenario.csi(0)?;
    let snr_db = scenario.snr_db[0];
    let sigma2 = noise_variance(snr_db, scenario.power);
    let single = DesignOptions { restarts: 1, ..scenario.design_options() };
    let shift = bound_shift(scenario.n_r);
    let runs: Vec<(f64, usize)> = (0..n_inits)
        .into_par_iter()
        .map(|i| {
            let mut rng = stage_stream(scenario.seed, tag::INIT, i as u64);
            let analog = algorithm1(&csi.a_t, scenario.n_rf, &mut rng, &single)?;
            let b0 = CMat::from_fn(scenario.n_rf, scenario.n_s, |_, _| complex_gaussian(&mut rng, 1.0));
            let b0 = project_sphere(&b0, scenario.power)?;
            let start = HybridPrecoder::new(analog.partition, analog.phases, b0, scenario.power)?;
            let report = algorithm2(&csi, start, &signals, sigma2, &scenario.ascent_options())?;
            Ok((report.final_objective() + shift, report.iterations()))
        })
        .collect::<Result<_>>()?;
    let mut finals: Vec<f64> = runs.iter().map(|r| r.0).collect();
    finals.sort_by(f64::total_cmp);
    let study = CdfStudy { snr_db, finals, iterations: runs.iter().map(|r| r.1).collect() };
    let dir = scenario.scenario_dir();
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("cdf.csv"), study.to_csv())?;
    Ok(study)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleRow {
    pub draw: usize,
    pub design_gain: f64,
    pub oracle_gain: f64,
    /// Every restart's residual trace is non-increasing.
    pub monotone: bool,
}

impl OracleRow {
    pub fn ratio(&self) -> f64 {
        self.design_gain / self.oracle_gain
    }
}

#[derive(Debug, Clone)]
pub struct OracleStudy {
    pub rows: Vec<OracleRow>,
}

impl OracleStudy {
    pub fn share_near_optimal(&self) -> f64 {
        self.rows.iter().filter(|r| r.ratio() >= ORACLE_RATIO).count() as f64 / self.rows.len() as f64
    }

    pub fn all_monotone(&self) -> bool {
        self.rows.iter().all(|r| r.monotone)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("draw,design_gain,oracle_gain,ratio,monotone\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{}", r.draw, r.design_gain, r.oracle_gain, r.ratio(), r.monotone);
        }
        out
    }

    pub fn checks(&self) -> Vec<Check> {
        let share = self.share_near_optimal();
        vec![
            Check {
                name: "oracle_ratio".into(),
                passed: share >= ORACLE_SHARE,
                detail: format!("{:.0}% of draws reach {ORACLE_RATIO} of the optimum", 100.0 * share),
            },
            Check {
                name: "residual_monotone".into(),
                passed: self.all_monotone(),
                detail: format!(
                    "{} of {} runs with non-increasing residual",
                    self.rows.iter().filter(|r| r.monotone).count(),
                    self.rows.len()
                ),
            },
        ]
    }
}

fn non_increasing(trace: &[f64]) -> bool {
    trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12))
}

/// `algorithm1` against exhaustive search over all partitions, one row per angle
/// draw. Writes `oracle.csv`.
pub fn oracle_study(scenario: &Scenario) -> Result<OracleStudy> {
    scenario.validate()?;
    if scenario.oracle_draws == 0 {
        return Err(Error::Config("oracle_draws must be positive".into()));
    }
    let rows: Vec<OracleRow> = (0..scenario.oracle_draws)
        .into_par_iter()
        .map(|d| {
            let csi = scenario.csi(d)?;
            let mut rng = stage_stream(scenario.seed, tag::DESIGN, d as u64);
            let design = algorithm1(&csi.a_t, scenario.n_rf, &mut rng, &scenario.design_options())?;
            let oracle =
                exhaustive_oracle(&csi.a_t, scenario.n_rf, &mut stage_stream(scenario.seed, ORACLE_TAG, d as u64))?;
            Ok(OracleRow {
                draw: d,
                design_gain: design.gain,
                oracle_gain: oracle.gain,
                monotone: design.restart_traces.iter().all(|t| non_increasing(t)),
            })
        })
        .collect::<Result<_>>()?;
    let study = OracleStudy { rows };
    let dir = scenario.scenario_dir();
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("oracle.csv"), study.to_csv())?;
    Ok(study)
}
