//! Objectives for the ascent engine.

use nalgebra::Complex;
use rayon::prelude::*;

use super::AscentObjective;
use crate::capacity::{
    draw_noise, gradient_la, lower_bound_approx, mi_with_noise, transmit_gradient_to_precoder, HybridPrecoder,
};
use crate::channel::StatisticalCsi;
use crate::constellation::SignalSet;
use crate::error::{Error, Result};
use crate::linalg::{log_sum_exp, CMat, RMat, LN2};
use crate::rng::stream;

/// Approximate lower bound on the average MI (statistical CSI).
pub struct BoundObjective<'a> {
    pub csi: &'a StatisticalCsi,
    pub signals: &'a SignalSet,
    pub sigma2: f64,
}

impl AscentObjective for BoundObjective<'_> {
    fn value(&self, precoder: &HybridPrecoder) -> Result<f64> {
        Ok(lower_bound_approx(self.csi, precoder, self.signals, self.sigma2)?.value)
    }

    fn gradient(&self, precoder: &HybridPrecoder) -> Result<(RMat, CMat)> {
        let g = gradient_la(self.csi, precoder, self.signals, self.sigma2)?;
        Ok((g.grad_phi, g.grad_b))
    }
}

/// Monte Carlo MI of `y = C F_bar B_bar x + n` for a known channel `C`.
///
/// The noise draws are fixed within an iteration (common random numbers across
/// line-search probes) and redrawn from a per-iteration stream at the next one.
/// The gradient uses the MMSE relation
/// `grad_{F_bar B_bar} = C^H C F_bar B_bar E / (sigma^2 ln 2)`.
pub struct InstantaneousObjective<'a> {
    channel: &'a CMat,
    signals: &'a SignalSet,
    sigma2: f64,
    n_noise: usize,
    seed: u64,
    noise: CMat,
}

impl<'a> InstantaneousObjective<'a> {
    pub fn new(channel: &'a CMat, signals: &'a SignalSet, sigma2: f64, n_noise: usize, seed: u64) -> Result<Self> {
        crate::capacity::check_noise(sigma2)?;
        if n_noise == 0 {
            return Err(Error::InvalidArgument("need at least one noise draw".into()));
        }
        let noise = draw_noise(&mut stream(seed, 0), channel.nrows(), sigma2, n_noise);
        Ok(InstantaneousObjective { channel, signals, sigma2, n_noise, seed, noise })
    }

    fn outputs(&self, precoder: &HybridPrecoder) -> CMat {
        self.channel * precoder.product() * self.signals.matrix()
    }

    /// Monte Carlo MMSE matrix `E[(x - E[x|y])(x - E[x|y])^H]` on the current noise set.
    pub fn mmse(&self, precoder: &HybridPrecoder) -> CMat {
        let outputs = self.outputs(precoder);
        let x = self.signals.matrix();
        let k = x.ncols();
        let n_s = x.nrows();
        let dist: Vec<f64> =
            (0..k * k).map(|idx| (outputs.column(idx / k) - outputs.column(idx % k)).norm_squared()).collect();
        let partial: Vec<CMat> = (0..self.noise.ncols())
            .into_par_iter()
            .map(|i| {
                let n = self.noise.column(i);
                let proj: Vec<f64> = (0..k)
                    .map(|j| outputs.column(j).iter().zip(n.iter()).map(|(s, z)| (s.conj() * z).re).sum())
                    .collect();
                let mut acc = CMat::zeros(n_s, n_s);
                let mut row = vec![0.0; k];
                for m in 0..k {
                    for (j, r) in row.iter_mut().enumerate() {
                        *r = if j == m { 0.0 } else { -(dist[m * k + j] + 2.0 * (proj[m] - proj[j])) / self.sigma2 };
                    }
                    let lse = log_sum_exp(&row);
                    let mut err = x.column(m).into_owned();
                    for (j, r) in row.iter().enumerate() {
                        let w = (r - lse).exp();
                        if w > 0.0 {
                            err -= x.column(j) * Complex::new(w, 0.0);
                        }
                    }
                    acc += &err * err.adjoint();
                }
                acc
            })
            .collect();
        let mut e = CMat::zeros(n_s, n_s);
        for p in &partial {
            e += p;
        }
        e / Complex::new((k * self.noise.ncols()) as f64, 0.0)
    }
}

impl AscentObjective for InstantaneousObjective<'_> {
    fn begin_iteration(&mut self, k: usize) {
        self.noise = draw_noise(&mut stream(self.seed, k as u64), self.channel.nrows(), self.sigma2, self.n_noise);
    }

    fn value(&self, precoder: &HybridPrecoder) -> Result<f64> {
        Ok(mi_with_noise(&self.outputs(precoder), self.sigma2, &self.noise).0)
    }

    fn gradient(&self, precoder: &HybridPrecoder) -> Result<(RMat, CMat)> {
        let e = self.mmse(precoder);
        let gram = self.channel.adjoint() * self.channel;
        let grad_product = gram * precoder.product() * e * Complex::new(1.0 / (self.sigma2 * LN2), 0.0);
        Ok(transmit_gradient_to_precoder(&grad_product, precoder))
    }
}
