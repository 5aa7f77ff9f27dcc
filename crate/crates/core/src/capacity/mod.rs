//! Constellation-constrained mutual information: Monte Carlo estimators, the
//! closed-form lower bound, its low-complexity approximation and gradients.
//!
//! All information quantities are in bits per channel use.

mod bound;
mod monte_carlo;

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::linalg::{frobenius_sq, CMat, RMat, LN2};
use crate::subarray::Partition;

pub use bound::{
    gradient_la, lower_bound, lower_bound_approx, pairwise_det_term, transmit_gradient_to_precoder, BoundGradient,
};
pub use monte_carlo::{
    average_mi, draw_noise, instantaneous_csi_objective, instantaneous_mi, mi_with_noise, mixed_csi_objective,
    pairwise_exponent_oracle, PairwiseEstimate,
};

/// Default Monte Carlo budgets.
pub const DEFAULT_N_NOISE: usize = 200;
pub const DEFAULT_N_CHANNEL: usize = 300;

/// Constant gap `Nr (1/ln 2 - 1)` between the lower bound and the mutual information
/// at both SNR extremes.
pub fn bound_shift(n_r: usize) -> f64 {
    n_r as f64 * (1.0 / LN2 - 1.0)
}

/// `sigma^2 = P / 10^(snr/10)`.
pub fn noise_variance(snr_db: f64, power: f64) -> f64 {
    power / 10f64.powf(snr_db / 10.0)
}

pub fn snr_db(noise_variance: f64, power: f64) -> f64 {
    10.0 * (power / noise_variance).log10()
}

pub(crate) fn check_noise(sigma2: f64) -> Result<()> {
    if sigma2 > 0.0 && sigma2.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidNoise(sigma2))
    }
}

/// Partially connected hybrid precoder in whitened coordinates: phase-only analog
/// part on a partition plus a digital part under a total power budget.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridPrecoder {
    partition: Partition,
    phases: RMat,
    f_bar: CMat,
    b_bar: CMat,
    power: f64,
}

impl HybridPrecoder {
    /// Phases outside the partition support are zeroed. The digital precoder may
    /// use less than the full budget.
    pub fn new(partition: Partition, mut phases: RMat, b_bar: CMat, power: f64) -> Result<Self> {
        if phases.nrows() != partition.n_t() || phases.ncols() != partition.n_rf() {
            return Err(Error::DimensionMismatch(format!(
                "phases are {}x{}, partition needs {}x{}",
                phases.nrows(),
                phases.ncols(),
                partition.n_t(),
                partition.n_rf()
            )));
        }
        if b_bar.nrows() != partition.n_rf() || b_bar.ncols() == 0 || b_bar.ncols() > partition.n_rf() {
            return Err(Error::DimensionMismatch(format!(
                "digital precoder is {}x{} for {} RF chains",
                b_bar.nrows(),
                b_bar.ncols(),
                partition.n_rf()
            )));
        }
        if !(power > 0.0 && power.is_finite()) {
            return Err(Error::InvalidArgument(format!("power budget must be positive, got {power}")));
        }
        let used = frobenius_sq(&b_bar);
        if used > power * (1.0 + 1e-9) {
            return Err(Error::InvalidArgument(format!("digital precoder uses {used} > budget {power}")));
        }
        partition.mask_real(&mut phases);
        let f_bar = partition.analog_precoder(&phases);
        Ok(HybridPrecoder { partition, phases, f_bar, b_bar, power })
    }

    /// Same partition and digital part with new phases.
    pub fn with_phases(&self, mut phases: RMat) -> Self {
        self.partition.mask_real(&mut phases);
        let f_bar = self.partition.analog_precoder(&phases);
        HybridPrecoder { phases, f_bar, ..self.clone() }
    }

    pub fn with_digital(&self, b_bar: CMat) -> Self {
        HybridPrecoder { b_bar, ..self.clone() }
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn phases(&self) -> &RMat {
        &self.phases
    }

    /// Column-orthonormal analog precoder `F_bar`.
    pub fn analog(&self) -> &CMat {
        &self.f_bar
    }

    /// Digital precoder `B_bar`.
    pub fn digital(&self) -> &CMat {
        &self.b_bar
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn n_t(&self) -> usize {
        self.partition.n_t()
    }

    pub fn n_rf(&self) -> usize {
        self.partition.n_rf()
    }

    pub fn n_s(&self) -> usize {
        self.b_bar.ncols()
    }

    /// End-to-end precoder `F_bar B_bar`.
    pub fn product(&self) -> CMat {
        &self.f_bar * &self.b_bar
    }

    /// Hardware analog matrix with unit-modulus entries.
    pub fn raw_analog(&self) -> CMat {
        let mut f = self.f_bar.clone();
        for j in 0..f.ncols() {
            let s = Complex::new(1.0 / self.partition.amplitude(j), 0.0);
            for z in f.column_mut(j).iter_mut() {
                *z *= s;
            }
        }
        f
    }

    /// Hardware digital matrix `(F^H F)^{-1/2} B_bar`, so `raw_analog * raw_digital = F_bar B_bar`.
    pub fn raw_digital(&self) -> CMat {
        let mut b = self.b_bar.clone();
        for j in 0..b.nrows() {
            let s = Complex::new(self.partition.amplitude(j), 0.0);
            for z in b.row_mut(j).iter_mut() {
                *z *= s;
            }
        }
        b
    }
}

/// Monte Carlo mutual-information estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_noise: usize,
    pub n_channel: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    LowerBound,
    LowerBoundApprox,
}

/// Closed-form bound value. Not shifted: add [`bound_shift`] to compare with the MI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundValue {
    pub value: f64,
    pub kind: BoundKind,
}

impl BoundValue {
    pub fn shifted(&self, n_r: usize) -> f64 {
        self.value + bound_shift(n_r)
    }
}
