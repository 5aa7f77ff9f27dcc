//! Monte Carlo estimators of the constellation-constrained mutual information.

use rayon::prelude::*;

use super::{check_noise, HybridPrecoder, MiEstimate};
use crate::channel::{effective_channel, sample_channel, StatisticalCsi};
use crate::constellation::SignalSet;
use crate::error::{Error, Result};
use crate::linalg::{log_sum_exp, mean_stderr, pairwise_sum, CMat, LN2};
use crate::optimizer::{digital_only_solve, instantaneous_hybrid, DigitalOptions};
use crate::rng::{complex_gaussian, fork_seed, stream, SimRng};
use crate::subarray::DesignOptions;

/// `n` columns of i.i.d. CN(0, sigma2) noise of dimension `n_r`.
pub fn draw_noise(rng: &mut SimRng, n_r: usize, sigma2: f64, n: usize) -> CMat {
    CMat::from_fn(n_r, n, |_, _| complex_gaussian(rng, sigma2))
}

/// Squared distances `||s_m - s_k||^2`, row-major.
fn output_distances(outputs: &CMat) -> Vec<f64> {
    let k = outputs.ncols();
    let mut d = vec![0.0; k * k];
    for m in 0..k {
        for j in (m + 1)..k {
            let v = (outputs.column(m) - outputs.column(j)).norm_squared();
            d[m * k + j] = v;
            d[j * k + m] = v;
        }
    }
    d
}

/// One noise draw shared by all transmitted vectors:
/// `sum_m (ln K - ln sum_k exp(-d_mk)) / (K ln 2)` with
/// `d_mk = (||s_m - s_k||^2 + 2 Re((s_m - s_k)^H n)) / sigma2`.
fn sample_value(outputs: &CMat, dist: &[f64], sigma2: f64, noise: &[nalgebra::Complex<f64>]) -> f64 {
    let k = outputs.ncols();
    let proj: Vec<f64> =
        (0..k).map(|j| outputs.column(j).iter().zip(noise).map(|(s, n)| (s.conj() * n).re).sum()).collect();
    let ln_k = ((k - 1) as f64).ln_1p(); // bitwise equal to log_sum_exp of k zeros
    let mut row = vec![0.0; k];
    let mut gaps = Vec::with_capacity(k);
    for m in 0..k {
        for j in 0..k {
            row[j] = if j == m { 0.0 } else { -(dist[m * k + j] + 2.0 * (proj[m] - proj[j])) / sigma2 };
        }
        gaps.push(ln_k - log_sum_exp(&row));
    }
    pairwise_sum(&gaps) / (k as f64 * LN2)
}

/// MI estimate of the noiseless outputs `outputs` (one column per signal vector)
/// against the given noise draws. Returns the mean and its standard error.
pub fn mi_with_noise(outputs: &CMat, sigma2: f64, noise: &CMat) -> (f64, f64) {
    let dist = output_distances(outputs);
    let values: Vec<f64> = (0..noise.ncols())
        .into_par_iter()
        .map(|i| sample_value(outputs, &dist, sigma2, noise.column(i).as_slice()))
        .collect();
    mean_stderr(&values)
}

fn transmit_outputs(effective: &CMat, signals: &SignalSet) -> Result<CMat> {
    if effective.ncols() != signals.n_streams() {
        return Err(Error::DimensionMismatch(format!(
            "effective precoded channel has {} inputs for {} streams",
            effective.ncols(),
            signals.n_streams()
        )));
    }
    Ok(effective * signals.matrix())
}

/// MI of `y = H F_bar B_bar x + n` for one channel matrix.
pub fn instantaneous_mi(
    rng: &mut SimRng,
    h: &CMat,
    precoder: &HybridPrecoder,
    signals: &SignalSet,
    sigma2: f64,
    n_noise: usize,
) -> Result<MiEstimate> {
    check_noise(sigma2)?;
    if n_noise == 0 {
        return Err(Error::InvalidArgument("need at least one noise draw".into()));
    }
    let outputs = transmit_outputs(&(effective_channel(h, precoder.analog())? * precoder.digital()), signals)?;
    let noise = draw_noise(rng, h.nrows(), sigma2, n_noise);
    let (value, stderr) = mi_with_noise(&outputs, sigma2, &noise);
    Ok(MiEstimate { value, stderr, n_noise, n_channel: 1 })
}

/// Average MI over fresh channel draws. The standard error is that of the
/// per-channel means, so it covers both Monte Carlo stages.
pub fn average_mi(
    rng: &mut SimRng,
    csi: &StatisticalCsi,
    precoder: &HybridPrecoder,
    signals: &SignalSet,
    sigma2: f64,
    n_channel: usize,
    n_noise: usize,
) -> Result<MiEstimate> {
    check_noise(sigma2)?;
    if n_channel == 0 || n_noise == 0 {
        return Err(Error::InvalidArgument("need at least one channel and one noise draw".into()));
    }
    let seed = fork_seed(rng);
    let per_channel: Vec<MiEstimate> = (0..n_channel)
        .into_par_iter()
        .map(|c| {
            let mut local = stream(seed, c as u64);
            let ch = sample_channel(&mut local, csi);
            instantaneous_mi(&mut local, &ch.h, precoder, signals, sigma2, n_noise)
        })
        .collect::<Result<_>>()?;
    Ok(combine(&per_channel, n_noise))
}

fn combine(per_channel: &[MiEstimate], n_noise: usize) -> MiEstimate {
    let values: Vec<f64> = per_channel.iter().map(|e| e.value).collect();
    let (value, stderr) = mean_stderr(&values);
    let stderr = if per_channel.len() == 1 { per_channel[0].stderr } else { stderr };
    MiEstimate { value, stderr, n_noise, n_channel: per_channel.len() }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwiseEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: usize,
}

/// Monte Carlo estimate of `2^{N_r} E_{gamma, n} exp(-||e_mk + n||^2 / sigma^2)` with
/// `e_mk = H F_bar B_bar (x_m - x_k)`. Its expectation equals the closed-form
/// pairwise factor [`super::pairwise_det_term`].
#[allow(clippy::too_many_arguments)]
pub fn pairwise_exponent_oracle(
    rng: &mut SimRng,
    csi: &StatisticalCsi,
    precoder: &HybridPrecoder,
    signals: &SignalSet,
    sigma2: f64,
    m: usize,
    k: usize,
    n_samples: usize,
) -> Result<PairwiseEstimate> {
    check_noise(sigma2)?;
    if m >= signals.len() || k >= signals.len() || n_samples == 0 {
        return Err(Error::InvalidArgument(format!("pair ({m}, {k}) or sample count {n_samples} invalid")));
    }
    let n_r = csi.n_r();
    let direction = precoder.product() * signals.difference(m, k);
    let scale = 2f64.powi(n_r as i32);
    let seed = fork_seed(rng);
    let values: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut local = stream(seed, i as u64);
            let ch = sample_channel(&mut local, csi);
            let e = &ch.h * &direction;
            let dist: f64 = e.iter().map(|z| (z + complex_gaussian(&mut local, sigma2)).norm_sqr()).sum();
            scale * (-dist / sigma2).exp()
        })
        .collect();
    let (value, stderr) = mean_stderr(&values);
    Ok(PairwiseEstimate { value, stderr, n_samples })
}

/// Average MI when the analog part follows statistical CSI and the digital part
/// is re-optimized for every channel draw from the reduced channel `H F_bar`.
///
/// Each channel gets an ascent on its own Monte Carlo objective, started from the
/// digital part of `precoder`; the result is then scored on an independent set
/// of `n_noise` noise draws.
#[allow(clippy::too_many_arguments)]
pub fn mixed_csi_objective(
    rng: &mut SimRng,
    csi: &StatisticalCsi,
    precoder: &HybridPrecoder,
    signals: &SignalSet,
    sigma2: f64,
    n_channel: usize,
    n_noise: usize,
    opts: &DigitalOptions,
) -> Result<MiEstimate> {
    check_noise(sigma2)?;
    if n_channel == 0 || n_noise == 0 {
        return Err(Error::InvalidArgument("need at least one channel and one noise draw".into()));
    }
    let seed = fork_seed(rng);
    let per_channel: Vec<MiEstimate> = (0..n_channel)
        .into_par_iter()
        .map(|c| {
            let mut local = stream(seed, c as u64);
            let ch = sample_channel(&mut local, csi);
            let h_eff = effective_channel(&ch.h, precoder.analog())?;
            let report = digital_only_solve(
                &h_eff,
                Some(precoder.digital()),
                signals,
                sigma2,
                precoder.power(),
                &mut local,
                opts,
            )?;
            let outputs = transmit_outputs(&(&h_eff * report.precoder.digital()), signals)?;
            let noise = draw_noise(&mut local, csi.n_r(), sigma2, n_noise);
            let (value, stderr) = mi_with_noise(&outputs, sigma2, &noise);
            Ok(MiEstimate { value, stderr, n_noise, n_channel: 1 })
        })
        .collect::<Result<_>>()?;
    Ok(combine(&per_channel, n_noise))
}

/// Average MI when both precoder parts are designed for every channel draw from
/// the channel matrix itself. Each design is scored on fresh noise draws.
#[allow(clippy::too_many_arguments)]
pub fn instantaneous_csi_objective(
    rng: &mut SimRng,
    csi: &StatisticalCsi,
    n_rf: usize,
    power: f64,
    signals: &SignalSet,
    sigma2: f64,
    n_channel: usize,
    n_noise: usize,
    design: &DesignOptions,
    opts: &DigitalOptions,
) -> Result<MiEstimate> {
    check_noise(sigma2)?;
    if n_channel == 0 || n_noise == 0 {
        return Err(Error::InvalidArgument("need at least one channel and one noise draw".into()));
    }
    let seed = fork_seed(rng);
    let per_channel: Vec<MiEstimate> = (0..n_channel)
        .into_par_iter()
        .map(|c| {
            let mut local = stream(seed, c as u64);
            let ch = sample_channel(&mut local, csi);
            let report = instantaneous_hybrid(&ch.h, n_rf, signals, sigma2, power, &mut local, design, opts)?;
            instantaneous_mi(&mut local, &ch.h, &report.precoder, signals, sigma2, n_noise)
        })
        .collect::<Result<_>>()?;
    Ok(combine(&per_channel, n_noise))
}
