//! SNR sweeps over the configured precoding modes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{AngleSource, Mode, Scenario};
use super::energy::{energy_efficiency, EnergyModel};
use crate::capacity::{
    average_mi, instantaneous_csi_objective, lower_bound, lower_bound_approx, mixed_csi_objective, noise_variance,
    HybridPrecoder, MiEstimate,
};
use crate::channel::{sample_path_angles, StatisticalCsi};
use crate::constellation::SignalSet;
use crate::error::{Error, Result};
use crate::linalg::RMat;
use crate::optimizer::{
    algorithm2, default_digital_init, no_precoding_baseline, unconstrained_benchmark, AscentOptions, AscentReport,
    DigitalOptions,
};
use crate::rng::{stream, SimRng};
use crate::subarray::{algorithm1, fixed_partition, optimize_partition_phases, AnalogDesign, DesignOptions, Partition};

/// Stream tags keeping the random draws of different stages independent.
pub(crate) mod tag {
    pub const ANGLES: u64 = 1;
    pub const DESIGN: u64 = 2;
    pub const EVAL: u64 = 3;
    pub const INIT: u64 = 4;
}

/// Stream `index` of the stage family `tag`.
pub(crate) fn stage_stream(seed: u64, tag: u64, index: u64) -> SimRng {
    stream(seed, (tag << 32) | index)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub snr_db: f64,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub name: String,
    pub points: Vec<CurvePoint>,
    /// Set when the curve stopped early; points before the failure are kept.
    pub failure: Option<String>,
}

impl Curve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("snr_db,value,stderr\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{},{}", p.snr_db, p.value, p.stderr);
        }
        if let Some(msg) = &self.failure {
            let _ = writeln!(out, "# failed: {}", msg.replace('\n', " "));
        }
        out
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }
}

/// Outcome of one assertion on the produced curves.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check { name: name.to_string(), passed, detail }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub curves: Vec<Curve>,
    pub checks: Vec<Check>,
}

impl RunOutcome {
    pub fn curve(&self, name: &str) -> Option<&Curve> {
        self.curves.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<(&str, &str)> {
        self.curves.iter().filter_map(|c| c.failure.as_deref().map(|f| (c.name.as_str(), f))).collect()
    }

    pub fn checks_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Per-draw quantities that do not depend on the SNR.
struct Draw {
    csi: StatisticalCsi,
    analog: AnalogDesign,
    fixed: Option<(Partition, RMat)>,
}

/// Values produced at one (SNR, draw) pair: curve name to (value, stderr), or the
/// error of the mode that produced it.
type PointValues = BTreeMap<String, std::result::Result<(f64, f64), String>>;

impl Scenario {
    pub fn signals(&self) -> Result<SignalSet> {
        SignalSet::new(self.modulation, self.n_s)
    }

    pub fn ascent_options(&self) -> AscentOptions {
        AscentOptions { epsilon: self.epsilon, max_iter: self.max_iter, ..Default::default() }
    }

    pub fn design_options(&self) -> DesignOptions {
        DesignOptions { restarts: self.restarts, ..Default::default() }
    }

    pub fn digital_options(&self) -> DigitalOptions {
        DigitalOptions {
            ascent: AscentOptions { max_iter: self.digital_iters, epsilon: self.epsilon, ..Default::default() },
            n_noise: self.digital_noise,
        }
    }

    /// Statistical CSI of angle draw `draw`.
    pub fn csi(&self, draw: usize) -> Result<StatisticalCsi> {
        let angles = match &self.angles {
            AngleSource::Fixed(a) => a.clone(),
            AngleSource::Sampled { mean_aoa, mean_aod, spread } => {
                let mut rng = stage_stream(self.seed, tag::ANGLES, draw as u64);
                sample_path_angles(&mut rng, self.paths, *mean_aoa, *mean_aod, *spread)?
            }
        };
        Ok(StatisticalCsi::new(angles, self.n_r, self.n_t))
    }

    /// Names of the curves a mode produces.
    pub fn curve_names(&self, mode: Mode) -> Vec<String> {
        let base = mode.name().to_string();
        let mut names = vec![base.clone()];
        if self.bounds && mode == Mode::Statistical {
            names.push(format!("{base}_lower_bound"));
            names.push(format!("{base}_approx"));
        }
        if self.energy {
            names.push(format!("{base}_energy"));
        }
        names
    }

    fn energy_model(&self, mode: Mode) -> Result<EnergyModel> {
        EnergyModel::with_defaults(self.power, self.n_rf, mode.phase_shifters(self.n_t, self.n_rf))
    }
}

/// Statistical-CSI design: `algorithm1` subarrays and phases, singular-vector digital
/// start, then the manifold ascent when enabled.
pub fn statistical_design(
    scenario: &Scenario,
    csi: &StatisticalCsi,
    partition: Partition,
    phases: RMat,
    signals: &SignalSet,
    sigma2: f64,
) -> Result<(HybridPrecoder, Option<AscentReport>)> {
    let f_bar = partition.analog_precoder(&phases);
    let b0 = default_digital_init(&csi.a_t, &f_bar, scenario.n_s, scenario.power)?;
    let start = HybridPrecoder::new(partition, phases, b0, scenario.power)?;
    if !scenario.ascent {
        return Ok((start, None));
    }
    let report = algorithm2(csi, start, signals, sigma2, &scenario.ascent_options())?;
    Ok((report.precoder.clone(), Some(report)))
}

fn prepare_draw(scenario: &Scenario, draw: usize) -> Result<Draw> {
    let csi = scenario.csi(draw)?;
    let mut rng = stage_stream(scenario.seed, tag::DESIGN, draw as u64);
    let analog = algorithm1(&csi.a_t, scenario.n_rf, &mut rng, &scenario.design_options())?;
    let fixed = if scenario.modes.contains(&Mode::Fixed) {
        let partition = fixed_partition(scenario.n_t, scenario.n_rf)?;
        let phases = optimize_partition_phases(&csi.a_t, &partition, &mut rng);
        Some((partition, phases))
    } else {
        None
    };
    Ok(Draw { csi, analog, fixed })
}

struct PointOutput {
    values: PointValues,
    traces: Vec<(String, String)>,
}

fn run_point(scenario: &Scenario, signals: &SignalSet, draw_index: usize, draw: &Draw, snr_db: f64) -> PointOutput {
    let sigma2 = noise_variance(snr_db, scenario.power);
    let eval = stage_stream(scenario.seed, tag::EVAL, draw_index as u64);
    let csi = &draw.csi;
    let mut values = PointValues::new();
    let mut traces = Vec::new();
    let mc = |p: &HybridPrecoder| -> Result<MiEstimate> {
        average_mi(&mut eval.clone(), csi, p, signals, sigma2, scenario.n_channel, scenario.n_noise)
    };

    let needs_statistical = scenario.modes.iter().any(|m| matches!(m, Mode::Statistical | Mode::Mixed));
    let statistical = if needs_statistical {
        statistical_design(scenario, csi, draw.analog.partition.clone(), draw.analog.phases.clone(), signals, sigma2)
    } else {
        Err(Error::InvalidArgument("statistical design not requested".into()))
    };
    if let Ok((_, Some(report))) = &statistical {
        if draw_index == 0 {
            traces.push((format!("statistical_snr{snr_db}.csv"), report.to_csv()));
        }
    }

    for &mode in &scenario.modes {
        let result: Result<Vec<(String, f64, f64)>> = (|| {
            let name = mode.name().to_string();
            let mut out = Vec::new();
            let est = match mode {
                Mode::Statistical => {
                    let (p, _) = statistical.as_ref().map_err(clone_error)?;
                    let est = mc(p)?;
                    if scenario.bounds {
                        let l = lower_bound(csi, p, signals, sigma2)?.shifted(scenario.n_r);
                        let la = lower_bound_approx(csi, p, signals, sigma2)?.shifted(scenario.n_r);
                        out.push((format!("{name}_lower_bound"), l, 0.0));
                        out.push((format!("{name}_approx"), la, 0.0));
                    }
                    est
                }
                Mode::Mixed => {
                    let (p, _) = statistical.as_ref().map_err(clone_error)?;
                    mixed_csi_objective(
                        &mut eval.clone(),
                        csi,
                        p,
                        signals,
                        sigma2,
                        scenario.n_channel,
                        scenario.n_noise,
                        &scenario.digital_options(),
                    )?
                }
                Mode::Instantaneous => instantaneous_csi_objective(
                    &mut eval.clone(),
                    csi,
                    scenario.n_rf,
                    scenario.power,
                    signals,
                    sigma2,
                    scenario.n_channel,
                    scenario.n_noise,
                    &scenario.design_options(),
                    &scenario.digital_options(),
                )?,
                Mode::Fixed => {
                    let (partition, phases) = draw.fixed.clone().expect("fixed partition prepared");
                    let (p, report) = statistical_design(scenario, csi, partition, phases, signals, sigma2)?;
                    if let (Some(r), 0) = (report, draw_index) {
                        traces.push((format!("fixed_snr{snr_db}.csv"), r.to_csv()));
                    }
                    mc(&p)?
                }
                Mode::NoPrecoding => {
                    mc(&no_precoding_baseline(scenario.n_t, scenario.n_rf, scenario.n_s, scenario.power)?)?
                }
                Mode::Unconstrained => {
                    let report =
                        unconstrained_benchmark(csi, signals, sigma2, scenario.power, &scenario.ascent_options())?;
                    mc(&report.precoder)?
                }
            };
            out.insert(0, (name.clone(), est.value, est.stderr));
            if scenario.energy {
                let model = scenario.energy_model(mode)?;
                out.push((
                    format!("{name}_energy"),
                    energy_efficiency(est.value, &model),
                    est.stderr / model.total_power(),
                ));
            }
            Ok(out)
        })();
        match result {
            Ok(rows) => {
                for (n, v, s) in rows {
                    values.insert(n, Ok((v, s)));
                }
            }
            Err(e) => {
                for n in scenario.curve_names(mode) {
                    values.insert(n, Err(e.to_string()));
                }
            }
        }
    }
    PointOutput { values, traces }
}

fn clone_error(e: &Error) -> Error {
    Error::InvalidArgument(e.to_string())
}

/// Mean over angle draws; the standard errors combine as independent estimates.
fn combine_draws(per_draw: &[(f64, f64)]) -> (f64, f64) {
    let n = per_draw.len() as f64;
    let value = per_draw.iter().map(|p| p.0).sum::<f64>() / n;
    let var = per_draw.iter().map(|p| p.1 * p.1).sum::<f64>();
    (value, var.sqrt() / n)
}

/// Curves, named trace files and the first draw's partition.
pub type CurveSet = (Vec<Curve>, Vec<(String, String)>, Option<Partition>);

/// Computes every configured curve without touching the file system.
pub fn compute_curves(scenario: &Scenario) -> Result<CurveSet> {
    scenario.validate()?;
    let signals = scenario.signals()?;
    let draws: Vec<Draw> =
        (0..scenario.csi_draws).into_par_iter().map(|d| prepare_draw(scenario, d)).collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> =
        (0..scenario.snr_db.len()).flat_map(|s| (0..draws.len()).map(move |d| (s, d))).collect();
    let outputs: Vec<PointOutput> =
        jobs.par_iter().map(|&(s, d)| run_point(scenario, &signals, d, &draws[d], scenario.snr_db[s])).collect();

    let mut curves = Vec::new();
    for &mode in &scenario.modes {
        for name in scenario.curve_names(mode) {
            let mut curve = Curve { name: name.clone(), points: Vec::new(), failure: None };
            for (s, &snr_db) in scenario.snr_db.iter().enumerate() {
                let per_draw: std::result::Result<Vec<(f64, f64)>, String> =
                    (0..draws.len()).map(|d| outputs[s * draws.len() + d].values[&name].clone()).collect();
                match per_draw {
                    Ok(v) => {
                        let (value, stderr) = combine_draws(&v);
                        curve.points.push(CurvePoint { snr_db, value, stderr });
                    }
                    Err(msg) => {
                        curve.failure = Some(format!("at {snr_db} dB: {msg}"));
                        break;
                    }
                }
            }
            curves.push(curve);
        }
    }
    let traces = outputs.into_iter().flat_map(|o| o.traces).collect();
    let partition = draws.first().map(|d| d.analog.partition.clone());
    Ok((curves, traces, partition))
}

/// Runs the scenario and writes `<outdir>/<name>/<curve>.csv`, the ascent traces of
/// the first angle draw and the `algorithm1` partition.
pub fn run_scenario(scenario: &Scenario) -> Result<RunOutcome> {
    let (curves, traces, partition) = compute_curves(scenario)?;
    let dir = scenario.scenario_dir();
    write_outputs(&dir, &curves, &traces, partition.as_ref())?;
    let checks = if scenario.checks { evaluate_checks(scenario, &curves) } else { Vec::new() };
    Ok(RunOutcome { dir, curves, checks })
}

fn write_outputs(
    dir: &Path,
    curves: &[Curve],
    traces: &[(String, String)],
    partition: Option<&Partition>,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    for c in curves {
        fs::write(dir.join(format!("{}.csv", c.name)), c.to_csv())?;
    }
    if !traces.is_empty() {
        let tdir = dir.join("traces");
        fs::create_dir_all(&tdir)?;
        for (name, body) in traces {
            fs::write(tdir.join(name), body)?;
        }
    }
    if let Some(p) = partition {
        fs::write(dir.join("partition.txt"), p.to_text())?;
    }
    Ok(())
}

/// SNR gap in dB by which `better` leads `worse`: for each point of `worse`, the
/// SNR at which `better` reaches the same value (linear interpolation), averaged
/// over the points where that SNR lies on the grid.
pub fn horizontal_gap_db(better: &Curve, worse: &Curve) -> Option<f64> {
    let gaps: Vec<f64> = worse
        .points
        .iter()
        .filter_map(|w| {
            better.points.windows(2).find_map(|seg| {
                let (a, b) = (seg[0], seg[1]);
                let (lo, hi) = if a.value <= b.value { (a.value, b.value) } else { (b.value, a.value) };
                if w.value < lo || w.value > hi || a.value == b.value {
                    return None;
                }
                let t = (w.value - a.value) / (b.value - a.value);
                Some(w.snr_db - (a.snr_db + t * (b.snr_db - a.snr_db)))
            })
        })
        .collect();
    (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64)
}

/// Qualitative assertions on the finished curves.
pub fn evaluate_checks(scenario: &Scenario, curves: &[Curve]) -> Vec<Check> {
    let find = |n: &str| curves.iter().find(|c| c.name == n && c.failure.is_none());
    let n = scenario.snr_db.len();
    let mut checks = Vec::new();

    if let (Some(mc), Some(lb), Some(la)) =
        (find("statistical"), find("statistical_lower_bound"), find("statistical_approx"))
    {
        // the shifted curve may cross the MI at mid SNR; only the unshifted bound is guaranteed
        let shift = crate::capacity::bound_shift(scenario.n_r);
        let excess: Vec<f64> = mc.points.iter().zip(&lb.points).map(|(m, l)| l.value - m.value).collect();
        let worst_excess =
            mc.points.iter().zip(&excess).map(|(m, e)| e - shift - 3.0 * m.stderr).fold(f64::NEG_INFINITY, f64::max);
        let widest = excess.iter().map(|e| e.abs()).fold(0.0, f64::max);
        checks.push(Check::new(
            "bound_below_mi",
            worst_excess <= 0.0,
            format!("max(L - MI - 3 se) = {worst_excess:.3e}, max |shifted L - MI| = {widest:.4}"),
        ));
        let worst_gap = mc
            .points
            .iter()
            .zip(&la.points)
            .map(|(m, a)| m.value - a.value - 3.0 * m.stderr)
            .fold(f64::NEG_INFINITY, f64::max);
        checks.push(Check::new(
            "approx_gap",
            worst_gap <= 0.5,
            format!("max(MI - shifted L_A - 3 se) = {worst_gap:.4} (limit 0.5)"),
        ));
    }

    if let (Some(dynamic), Some(fixed)) = (find("statistical"), find("fixed")) {
        let upper = n / 2..n;
        let mean = |c: &Curve| c.points[upper.clone()].iter().map(|p| p.value).sum::<f64>() / upper.len() as f64;
        let (d, f) = (mean(dynamic), mean(fixed));
        let gap = horizontal_gap_db(dynamic, fixed).map_or("n/a".to_string(), |g| format!("{g:.2} dB"));
        checks.push(Check::new("dynamic_vs_fixed", d >= f, format!("upper-half mean {d:.4} vs {f:.4}, SNR gap {gap}")));
    }

    if let (Some(dynamic), Some(flat)) = (find("statistical"), find("no_precoding")) {
        let worst =
            dynamic.points.iter().zip(&flat.points).map(|(d, f)| d.value - f.value).fold(f64::INFINITY, f64::min);
        checks.push(Check::new("no_precoding_below", worst > 0.0, format!("min(dynamic - no precoding) = {worst:.4}")));
    }

    if let (Some(mixed), Some(inst)) = (find("mixed"), find("instantaneous")) {
        let mid = n / 4..n - n / 4;
        let worst = mid.map(|i| (mixed.points[i].value - inst.points[i].value).abs()).fold(0.0, f64::max);
        checks.push(Check::new(
            "mixed_near_instantaneous",
            worst <= 0.3,
            format!("max |mixed - instantaneous| over mid grid = {worst:.4} (limit 0.3)"),
        ));
    }
    checks
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(name: &str, pts: &[(f64, f64)]) -> Curve {
        Curve {
            name: name.into(),
            points: pts.iter().map(|&(snr_db, value)| CurvePoint { snr_db, value, stderr: 0.0 }).collect(),
            failure: None,
        }
    }

    #[test]
    fn csv_has_header_and_failure_marker() {
        let mut c = curve("x", &[(-5.0, 1.5)]);
        c.failure = Some("boom".into());
        assert_eq!(c.to_csv(), "snr_db,value,stderr\n-5,1.5,0\n# failed: boom\n");
    }

    #[test]
    fn horizontal_gap_of_shifted_line() {
        let better = curve("b", &[(0.0, 0.0), (10.0, 1.0), (20.0, 2.0)]);
        let worse = curve("w", &[(0.0, -0.1), (10.0, 0.9), (20.0, 1.9)]);
        assert!((horizontal_gap_db(&better, &worse).unwrap() - 1.0).abs() < 1e-12);
        assert!(horizontal_gap_db(&better, &curve("w", &[(0.0, 5.0)])).is_none());
    }

    #[test]
    fn draws_combine_as_independent_estimates() {
        let (v, s) = combine_draws(&[(1.0, 0.3), (3.0, 0.4)]);
        assert_eq!(v, 2.0);
        assert!((s - 0.25).abs() < 1e-15);
    }
}
