//! Closed-form lower bound on the average mutual information and its
//! product-form approximation, both driven by the pairwise projections
//! `beta_mk = A_t^H F_bar B_bar (x_m - x_k)`.

use nalgebra::Complex;
use rayon::prelude::*;

use super::{bound_shift, check_noise, BoundKind, BoundValue, HybridPrecoder};
use crate::channel::StatisticalCsi;
use crate::constellation::SignalSet;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_log_det, log_sum_exp, pairwise_sum, CMat, RMat, C64, LN2};

/// Value and gradients of the approximate bound.
#[derive(Debug, Clone)]
pub struct BoundGradient {
    /// Unshifted approximate bound, identical to [`lower_bound_approx`].
    pub value: f64,
    /// Derivative with respect to each phase (zero off the partition support).
    pub grad_phi: RMat,
    /// Complex gradient with respect to `B_bar`, scaled so that
    /// `dR = 2 Re tr(grad_b^H dB_bar)`.
    pub grad_b: CMat,
}

fn check_dims(csi: &StatisticalCsi, precoder: &HybridPrecoder, signals: &SignalSet) -> Result<()> {
    if precoder.n_t() != csi.n_t() {
        return Err(Error::DimensionMismatch(format!(
            "precoder drives {} antennas, CSI has {}",
            precoder.n_t(),
            csi.n_t()
        )));
    }
    if precoder.n_s() != signals.n_streams() {
        return Err(Error::DimensionMismatch(format!(
            "precoder carries {} streams, signal set has {}",
            precoder.n_s(),
            signals.n_streams()
        )));
    }
    Ok(())
}

/// `N_r N_t / (2 sigma^2 L)`
fn coupling(csi: &StatisticalCsi, sigma2: f64) -> f64 {
    csi.n_r() as f64 * csi.n_t() as f64 / (2.0 * sigma2 * csi.n_paths() as f64)
}

/// `A_t^H F_bar B_bar X`, one column per signal vector.
fn projected_symbols(csi: &StatisticalCsi, precoder: &HybridPrecoder, signals: &SignalSet) -> CMat {
    csi.a_t.ad_mul(&precoder.product()) * signals.matrix()
}

/// `-sum_l ln(1 + c |y_lm - y_lk|^2)` with a single logarithm: the running
/// product minus one is updated as `e <- e + x + e x`, which keeps tiny terms exact.
fn approx_exponent(y: &CMat, c: f64, m: usize, k: usize) -> f64 {
    let l = y.nrows();
    let mut e = 0.0;
    for p in 0..l {
        let x = c * (y[(p, m)] - y[(p, k)]).norm_sqr();
        e += x + e * x;
    }
    if e.is_finite() {
        -e.ln_1p()
    } else {
        -(0..l).map(|p| (c * (y[(p, m)] - y[(p, k)]).norm_sqr()).ln_1p()).sum::<f64>()
    }
}

/// Approximate-bound exponents for one row `m`.
fn approx_row(y: &CMat, c: f64, m: usize, out: &mut [f64]) {
    for (k, t) in out.iter_mut().enumerate() {
        *t = if k == m { 0.0 } else { approx_exponent(y, c, m, k) };
    }
}

/// `-ln det(I + (A_r^H A_r)^T o W)` with `W = c v v^H`, `v = y_m - y_k`.
fn exact_term(y: &CMat, gram: &CMat, c: f64, m: usize, k: usize, buf: &mut [C64]) -> f64 {
    let l = y.nrows();
    let v: Vec<C64> = (0..l).map(|p| y[(p, m)] - y[(p, k)]).collect();
    for a in 0..l {
        for b in 0..l {
            let delta = if a == b { 1.0 } else { 0.0 };
            buf[a * l + b] = Complex::new(delta, 0.0) + gram[(b, a)] * v[a] * v[b].conj() * c;
        }
    }
    -hermitian_log_det(buf, l)
}

/// Below this many signal vectors the pair loops run on the calling thread;
/// dispatching to the pool would cost more than the work.
const PARALLEL_MIN_SIGNALS: usize = 64;

/// Rows `0..k` of a strict upper triangle, computed in parallel for large `k`.
fn upper_triangle(k: usize, row: impl Fn(usize) -> Vec<f64> + Sync + Send) -> Vec<Vec<f64>> {
    if k < PARALLEL_MIN_SIGNALS {
        (0..k).map(row).collect()
    } else {
        (0..k).into_par_iter().map(row).collect()
    }
}

/// Per-row log-sum-exp of a symmetric exponent matrix with zero diagonal, given
/// its strict upper triangle row by row.
fn symmetric_row_lse(upper: &[Vec<f64>], k: usize) -> Vec<f64> {
    let mut row = vec![0.0; k];
    (0..k)
        .map(|m| {
            for (j, t) in row.iter_mut().enumerate() {
                *t = match j.cmp(&m) {
                    std::cmp::Ordering::Equal => 0.0,
                    std::cmp::Ordering::Greater => upper[m][j - m - 1],
                    std::cmp::Ordering::Less => upper[j][m - j - 1],
                };
            }
            log_sum_exp(&row)
        })
        .collect()
}

/// `sum_m (ln K - LSE_k t_mk) / (K ln 2)` from per-row log-sum-exps.
fn bound_from_lse(lse: &[f64], k: usize) -> f64 {
    let ln_k = ((k - 1) as f64).ln_1p(); // bitwise equal to log_sum_exp of k zeros
    let gaps: Vec<f64> = lse.iter().map(|s| ln_k - s).collect();
    pairwise_sum(&gaps) / (k as f64 * LN2)
}

/// Lower bound on the average MI (unshifted).
pub fn lower_bound(
    csi: &StatisticalCsi,
    precoder: &HybridPrecoder,
    signals: &SignalSet,
    sigma2: f64,
) -> Result<BoundValue> {
    check_noise(sigma2)?;
    check_dims(csi, precoder, signals)?;
    let y = projected_symbols(csi, precoder, signals);
    let c = coupling(csi, sigma2);
    let gram = csi.receive_gram();
    let k = signals.len();
    let l = csi.n_paths();
    // upper triangle; (m, k) and (k, m) share the determinant
    let upper = upper_triangle(k, |m| {
        let mut buf = vec![Complex::new(0.0, 0.0); l * l];
        ((m + 1)..k).map(|j| exact_term(&y, &gram, c, m, j, &mut buf)).collect()
    });
    let lse = symmetric_row_lse(&upper, k);
    Ok(BoundValue { value: bound_from_lse(&lse, k) - bound_shift(csi.n_r()), kind: BoundKind::LowerBound })
}

/// Low-complexity approximation that treats the receive steering vectors as orthogonal.
pub fn lower_bound_approx(
    csi: &StatisticalCsi,
    precoder: &HybridPrecoder,
    signals: &SignalSet,
    sigma2: f64,
) -> Result<BoundValue> {
    check_noise(sigma2)?;
    check_dims(csi, precoder, signals)?;
    let y = projected_symbols(csi, precoder, signals);
    let c = coupling(csi, sigma2);
    let k = signals.len();
    // the exponent is symmetric in (m, k)
    let upper = upper_triangle(k, |m| ((m + 1)..k).map(|j| approx_exponent(&y, c, m, j)).collect());
    let lse = symmetric_row_lse(&upper, k);
    Ok(BoundValue { value: bound_from_lse(&lse, k) - bound_shift(csi.n_r()), kind: BoundKind::LowerBoundApprox })
}

/// Pairwise factor `det[I + (A_r^H A_r)^T o W_mk]^{-1}` of the lower bound.
pub fn pairwise_det_term(
    csi: &StatisticalCsi,
    precoder: &HybridPrecoder,
    signals: &SignalSet,
    sigma2: f64,
    m: usize,
    k: usize,
) -> Result<f64> {
    check_noise(sigma2)?;
    check_dims(csi, precoder, signals)?;
    if m >= signals.len() || k >= signals.len() {
        return Err(Error::InvalidArgument(format!("pair ({m}, {k}) out of range for K = {}", signals.len())));
    }
    let y = projected_symbols(csi, precoder, signals);
    let l = csi.n_paths();
    let mut buf = vec![Complex::new(0.0, 0.0); l * l];
    Ok(exact_term(&y, &csi.receive_gram(), coupling(csi, sigma2), m, k, &mut buf).exp())
}

/// Maps a gradient with respect to the end-to-end precoder `F_bar B_bar` onto the
/// phases and the digital precoder.
pub fn transmit_gradient_to_precoder(grad_product: &CMat, precoder: &HybridPrecoder) -> (RMat, CMat) {
    let f = precoder.analog();
    let grad_b = f.adjoint() * grad_product;
    let m = grad_product * precoder.digital().adjoint();
    let grad_phi = RMat::from_fn(f.nrows(), f.ncols(), |i, j| 2.0 * (m[(i, j)] * f[(i, j)].conj()).im);
    (grad_phi, grad_b)
}

/// Per-row partial sums of `sum_k zeta_mkl (x_m - x_k)(x_m - x_k)^H`, one matrix per path.
fn weighted_scatter(y: &CMat, x: &CMat, c: f64, m: usize) -> (f64, Vec<CMat>) {
    let k_total = x.ncols();
    let n_s = x.nrows();
    let l = y.nrows();
    let mut row = vec![0.0; k_total];
    approx_row(y, c, m, &mut row);
    let lse = log_sum_exp(&row);
    let inv_c = 1.0 / c;
    let xm = x.column(m);
    let mut out = vec![CMat::zeros(n_s, n_s); l];
    for (p, e) in out.iter_mut().enumerate() {
        for k in 0..k_total {
            if k == m {
                continue;
            }
            let w = (row[k] - lse).exp();
            if w == 0.0 {
                continue;
            }
            let zeta = w / (inv_c + (y[(p, m)] - y[(p, k)]).norm_sqr());
            let d = xm - x.column(k);
            for a in 0..n_s {
                for b in 0..n_s {
                    e[(a, b)] += d[a] * d[b].conj() * zeta;
                }
            }
        }
    }
    (lse, out)
}

/// Approximate bound together with its gradients in `(phases, B_bar)`.
pub fn gradient_la(
    csi: &StatisticalCsi,
    precoder: &HybridPrecoder,
    signals: &SignalSet,
    sigma2: f64,
) -> Result<BoundGradient> {
    check_noise(sigma2)?;
    check_dims(csi, precoder, signals)?;
    let t = precoder.product();
    let y = (csi.a_t.adjoint() * &t) * signals.matrix();
    let c = coupling(csi, sigma2);
    let k = signals.len();
    let n_s = signals.n_streams();
    let l = csi.n_paths();
    let parts: Vec<(f64, Vec<CMat>)> =
        (0..k).into_par_iter().map(|m| weighted_scatter(&y, signals.matrix(), c, m)).collect();
    let lse: Vec<f64> = parts.iter().map(|p| p.0).collect();
    let value = bound_from_lse(&lse, k) - bound_shift(csi.n_r());

    let scale = Complex::new(1.0 / (k as f64 * LN2), 0.0);
    let mut grad_t = CMat::zeros(csi.n_t(), n_s);
    for p in 0..l {
        let mut e = CMat::zeros(n_s, n_s);
        for part in &parts {
            e += &part.1[p];
        }
        e *= scale;
        let a = csi.a_t.column(p);
        let row = (a.adjoint() * &t) * e;
        grad_t += a * row;
    }
    let (grad_phi, grad_b) = transmit_gradient_to_precoder(&grad_t, precoder);
    Ok(BoundGradient { value, grad_phi, grad_b })
}
