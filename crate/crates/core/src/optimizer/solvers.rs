//! Precoder designs built on the ascent engine.

use nalgebra::Complex;

use super::{ascend, ascend_blockwise, AscentOptions, AscentReport, BlockMode, BoundObjective, InstantaneousObjective};
use crate::capacity::HybridPrecoder;
use crate::channel::StatisticalCsi;
use crate::constellation::SignalSet;
use crate::error::{Error, Result};
use crate::linalg::{svd, CMat, CVec, RMat};
use crate::rng::{fork_seed, SimRng};
use crate::subarray::{algorithm1, fixed_partition, DesignOptions, Partition};

/// Manifold ascent on the approximate bound, moving phases and digital precoder jointly.
pub fn algorithm2(
    csi: &StatisticalCsi,
    start: HybridPrecoder,
    signals: &SignalSet,
    sigma2: f64,
    opts: &AscentOptions,
) -> Result<AscentReport> {
    let mut obj = BoundObjective { csi, signals, sigma2 };
    ascend(&mut obj, start, BlockMode::Joint, opts)
}

/// Alternating phase / digital ascent on the approximate bound.
pub fn block_coordinate_ascent(
    csi: &StatisticalCsi,
    start: HybridPrecoder,
    signals: &SignalSet,
    sigma2: f64,
    opts: &AscentOptions,
) -> Result<AscentReport> {
    let mut obj = BoundObjective { csi, signals, sigma2 };
    ascend_blockwise(&mut obj, start, opts)
}

/// Completes orthonormal columns with standard basis vectors (deterministic).
fn complete_with_standard_basis(basis: &CMat, total: usize) -> CMat {
    let n = basis.nrows();
    let mut cols: Vec<CVec> = basis.column_iter().map(|c| c.into_owned()).collect();
    let mut e = 0;
    while cols.len() < total && e < n {
        let mut v = CVec::zeros(n);
        v[e] = Complex::new(1.0, 0.0);
        for _ in 0..2 {
            for q in &cols {
                let p = q.dotc(&v);
                v -= q * p;
            }
        }
        let nrm = v.norm();
        if nrm > 1e-6 {
            cols.push(v / Complex::new(nrm, 0.0));
        }
        e += 1;
    }
    CMat::from_columns(&cols)
}

/// Right singular vectors of `A_t^H F_bar` for the `n_s` largest singular values,
/// scaled to total power `power`.
pub fn default_digital_init(a_t: &CMat, f_bar: &CMat, n_s: usize, power: f64) -> Result<CMat> {
    let n_rf = f_bar.ncols();
    if n_s == 0 || n_s > n_rf {
        return Err(Error::InvalidArgument(format!("need 1 <= n_s <= {n_rf}, got {n_s}")));
    }
    // left singular vectors of F_bar^H A_t are the right singular vectors of A_t^H F_bar
    let d = svd(&(f_bar.adjoint() * a_t))?;
    let have = d.u.ncols().min(n_s);
    let v = complete_with_standard_basis(&d.u.columns(0, have).into_owned(), n_s);
    Ok(v * Complex::new((power / n_s as f64).sqrt(), 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DigitalOptions {
    pub ascent: AscentOptions,
    /// Noise draws per iteration for the Monte Carlo objective and MMSE matrix.
    pub n_noise: usize,
}

impl Default for DigitalOptions {
    fn default() -> Self {
        DigitalOptions { ascent: AscentOptions { max_iter: 100, ..Default::default() }, n_noise: 200 }
    }
}

/// Digital precoder for a known reduced channel `h_eff = H F_bar`, maximizing the
/// Monte Carlo MI under `||B||_F^2 = power`. The default start is the leading right
/// singular vectors of `h_eff`.
pub fn digital_only_solve(
    h_eff: &CMat,
    b0: Option<&CMat>,
    signals: &SignalSet,
    sigma2: f64,
    power: f64,
    rng: &mut SimRng,
    opts: &DigitalOptions,
) -> Result<AscentReport> {
    let n_rf = h_eff.ncols();
    let n_s = signals.n_streams();
    let b0 = match b0 {
        Some(b) => b.clone(),
        None => default_digital_init(&h_eff.adjoint(), &CMat::identity(n_rf, n_rf), n_s, power)?,
    };
    let start = HybridPrecoder::new(Partition::singletons(n_rf), RMat::zeros(n_rf, n_rf), b0, power)?;
    let mut obj = InstantaneousObjective::new(h_eff, signals, sigma2, opts.n_noise, fork_seed(rng))?;
    ascend(&mut obj, start, BlockMode::DigitalOnly, &opts.ascent)
}

/// Hybrid design with the channel matrix known: subarrays from the dominant
/// right singular subspace of `h`, then joint ascent on the Monte Carlo MI.
#[allow(clippy::too_many_arguments)]
pub fn instantaneous_hybrid(
    h: &CMat,
    n_rf: usize,
    signals: &SignalSet,
    sigma2: f64,
    power: f64,
    rng: &mut SimRng,
    design: &DesignOptions,
    opts: &DigitalOptions,
) -> Result<AscentReport> {
    let h_h = h.adjoint();
    let analog = algorithm1(&h_h, n_rf, rng, design)?;
    let b0 = default_digital_init(&h_h, &analog.f_bar, signals.n_streams(), power)?;
    let start = HybridPrecoder::new(analog.partition, analog.phases, b0, power)?;
    let mut obj = InstantaneousObjective::new(h, signals, sigma2, opts.n_noise, fork_seed(rng))?;
    ascend(&mut obj, start, BlockMode::Joint, &opts.ascent)
}

/// Equal-gain blocks with identity digital precoding at full power.
pub fn no_precoding_baseline(n_t: usize, n_rf: usize, n_s: usize, power: f64) -> Result<HybridPrecoder> {
    if n_s != n_rf {
        return Err(Error::InvalidArgument(format!("baseline needs n_s == n_rf, got {n_s} and {n_rf}")));
    }
    let partition = fixed_partition(n_t, n_rf)?;
    let b = CMat::identity(n_rf, n_s) * Complex::new((power / n_s as f64).sqrt(), 0.0);
    HybridPrecoder::new(partition, RMat::zeros(n_t, n_rf), b, power)
}

/// Fully digital `N_t x N_s` precoder maximizing the approximate bound under the
/// total power constraint only.
pub fn unconstrained_benchmark(
    csi: &StatisticalCsi,
    signals: &SignalSet,
    sigma2: f64,
    power: f64,
    opts: &AscentOptions,
) -> Result<AscentReport> {
    let n_t = csi.n_t();
    let b0 = default_digital_init(&csi.a_t, &CMat::identity(n_t, n_t), signals.n_streams(), power)?;
    let start = HybridPrecoder::new(Partition::singletons(n_t), RMat::zeros(n_t, n_t), b0, power)?;
    let mut obj = BoundObjective { csi, signals, sigma2 };
    ascend(&mut obj, start, BlockMode::DigitalOnly, opts)
}
