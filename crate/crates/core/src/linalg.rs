//! Dense complex linear-algebra helpers shared by the estimators and designers.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::complex_gaussian;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
pub type RMat = DMatrix<f64>;

pub const LN2: f64 = std::f64::consts::LN_2;

pub fn frobenius_sq(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn frobenius_sq_real(m: &RMat) -> f64 {
    m.iter().map(|x| x * x).sum()
}

/// Real part of `tr(a^H b)`, the real inner product on complex matrices.
pub fn re_inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Numerically stable `ln(sum(exp(x)))`. Returns `-inf` for an empty slice.
///
/// The largest term is factored out and the remainder enters through `ln_1p`,
/// so tiny contributions next to a dominant term are not rounded away.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let Some((arg, &max)) = xs.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)) else {
        return f64::NEG_INFINITY;
    };
    if !max.is_finite() {
        return max;
    }
    let rest: f64 = xs.iter().enumerate().filter(|(i, _)| *i != arg).map(|(_, x)| (x - max).exp()).sum();
    max + rest.ln_1p()
}

/// Pairwise (tree) summation; the reduction order depends only on the length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n if n <= 8 => xs.iter().sum(),
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// `ln det(M)` of a Hermitian positive-definite `n x n` matrix stored row-major in `a`.
///
/// Cholesky is attempted first; when a pivot is not positive (round-off on a
/// near-singular input) the determinant is taken from an LU factorization.
/// `a` is overwritten.
pub fn hermitian_log_det(a: &mut [C64], n: usize) -> f64 {
    debug_assert_eq!(a.len(), n * n);
    let backup: Vec<C64> = a.to_vec();
    let mut log_det = 0.0;
    for j in 0..n {
        let mut d = a[j * n + j].re;
        for k in 0..j {
            d -= a[j * n + k].norm_sqr();
        }
        if d <= 0.0 || !d.is_finite() {
            return lu_log_abs_det(&backup, n);
        }
        let ljj = d.sqrt();
        a[j * n + j] = Complex::new(ljj, 0.0);
        log_det += 2.0 * ljj.ln();
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k].conj();
            }
            a[i * n + j] = s / ljj;
        }
    }
    log_det
}

fn lu_log_abs_det(a: &[C64], n: usize) -> f64 {
    let m = CMat::from_row_slice(n, n, a);
    m.lu().determinant().norm().ln()
}

/// Thin SVD `m = U diag(s) V^H` with singular values in descending order.
pub struct Svd {
    pub u: CMat,
    pub singular_values: Vec<f64>,
    pub v_t: CMat,
}

pub fn svd(m: &CMat) -> Result<Svd> {
    let svd = nalgebra::SVD::try_new(m.clone(), true, true, f64::EPSILON, 0).ok_or(Error::SvdFailure)?;
    Ok(Svd {
        u: svd.u.ok_or(Error::SvdFailure)?,
        singular_values: svd.singular_values.iter().copied().collect(),
        v_t: svd.v_t.ok_or(Error::SvdFailure)?,
    })
}

/// Haar-distributed random unitary matrix from the QR factorization of a
/// complex Gaussian matrix, with the phases of `diag(R)` absorbed into `Q`.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| complex_gaussian(rng, 1.0));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { Complex::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// Extends the orthonormal columns of `basis` to `total` orthonormal columns
/// using a random Gaussian block projected onto the orthogonal complement.
pub fn orthonormal_completion<R: Rng + ?Sized>(basis: &CMat, total: usize, rng: &mut R) -> CMat {
    let n = basis.nrows();
    let have = basis.ncols();
    assert!(total <= n, "cannot complete {total} orthonormal columns in dimension {n}");
    let mut out = CMat::zeros(n, total);
    out.columns_mut(0, have).copy_from(basis);
    let mut col = have;
    while col < total {
        let mut v = CVec::from_fn(n, |_, _| complex_gaussian(rng, 1.0));
        // two passes of Gram-Schmidt
        for _ in 0..2 {
            for j in 0..col {
                let q = out.column(j);
                let p = q.dotc(&v);
                v -= q * p;
            }
        }
        let nrm = v.norm();
        if nrm > 1e-8 {
            out.column_mut(col).copy_from(&(v / Complex::new(nrm, 0.0)));
            col += 1;
        }
    }
    out
}

/// `(M)^{-1/2}` of a Hermitian positive-definite matrix.
pub fn inv_sqrt_hermitian(m: &CMat) -> CMat {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let d = CMat::from_diagonal(&CVec::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| Complex::new(1.0 / l.max(f64::MIN_POSITIVE).sqrt(), 0.0)),
    ));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}
