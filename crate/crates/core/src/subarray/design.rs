//! Alternating rounding / orthogonal-Procrustes design of the dynamic subarrays.

use nalgebra::Complex;
use rayon::prelude::*;

use super::{effective_gain, refine_phases, Partition, SelectionMatrix};
use crate::error::{Error, Result};
use crate::linalg::{frobenius_sq, orthonormal_completion, svd, CMat, RMat};
use crate::rng::{fork_seed, stream, SimRng};

/// Rows whose largest entry is below this are treated as all-zero.
const TINY_ROW: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignOptions {
    pub restarts: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Re-align the phases of each subarray after rounding (never lowers the gain).
    pub refine_phases: bool,
}

impl Default for DesignOptions {
    fn default() -> Self {
        DesignOptions { restarts: 8, tol: 1e-8, max_iter: 200, refine_phases: true }
    }
}

/// Outcome of [`algorithm1`].
#[derive(Debug, Clone)]
pub struct AnalogDesign {
    pub f_bar: CMat,
    pub partition: Partition,
    pub phases: RMat,
    /// `||A_t^H F_bar||_F^2` of the returned design.
    pub gain: f64,
    /// Residual `||F - U_A R||_F^2` per iteration of the selected restart.
    pub residual_trace: Vec<f64>,
    pub restart_traces: Vec<Vec<f64>>,
}

/// Left singular vectors of `a_t` for the `n_rf` largest singular values,
/// completed to `n_rf` orthonormal columns when the rank is smaller.
pub fn leading_subspace(a_t: &CMat, n_rf: usize, rng: &mut SimRng) -> Result<CMat> {
    let n_t = a_t.nrows();
    if n_rf == 0 || n_rf > n_t {
        return Err(Error::InvalidArgument(format!("need 1 <= n_rf <= {n_t}, got {n_rf}")));
    }
    let d = svd(a_t)?;
    let have = d.u.ncols().min(n_rf);
    let basis = d.u.columns(0, have).into_owned();
    if have == n_rf {
        Ok(basis)
    } else {
        Ok(orthonormal_completion(&basis, n_rf, rng))
    }
}

/// `U_A R` with `R` a Haar-random unitary: a random point of the unconstrained optimum set.
pub fn unconstrained_seed(a_t: &CMat, n_rf: usize, rng: &mut SimRng) -> Result<CMat> {
    let u_a = leading_subspace(a_t, n_rf, rng)?;
    let r = crate::linalg::random_unitary(n_rf, rng);
    Ok(u_a * r)
}

fn row_argmax(m: &CMat, i: usize) -> (usize, f64) {
    let mut best = (0, m[(i, 0)].norm());
    for j in 1..m.ncols() {
        let a = m[(i, j)].norm();
        if a > best.1 {
            best = (j, a);
        }
    }
    best
}

/// Nearest selection matrix: keep the phase of the largest entry in each row.
pub fn round_to_feasible(m: &CMat) -> SelectionMatrix {
    let mut f = CMat::zeros(m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let (j, a) = row_argmax(m, i);
        if a < TINY_ROW {
            f[(i, 0)] = Complex::new(1.0, 0.0);
        } else {
            f[(i, j)] = m[(i, j)] / a;
        }
    }
    SelectionMatrix::new(f).expect("rounded rows are unit-modulus selections")
}

/// Unitary `R` minimizing `||F - U_A R||_F`.
pub fn procrustes_rotation(f: &SelectionMatrix, u_a: &CMat) -> Result<CMat> {
    let z = f.matrix().adjoint() * u_a;
    let d = svd(&z)?;
    Ok(d.v_t.adjoint() * d.u.adjoint())
}

/// Second-largest column of row `i`, ties to the smaller index.
fn second_best(m: &CMat, i: usize) -> usize {
    let mut order: Vec<usize> = (0..m.ncols()).collect();
    order.sort_by(|&a, &b| m[(i, b)].norm().total_cmp(&m[(i, a)].norm()).then(a.cmp(&b)));
    order[1]
}

/// Moves rows into empty columns so that every RF chain drives an antenna.
fn repair_empty_columns(f: &SelectionMatrix, m: &CMat) -> SelectionMatrix {
    let n_rf = m.ncols();
    let mut owner = f.assignment();
    let mut mat = f.matrix().clone();
    loop {
        let mut counts = vec![0usize; n_rf];
        for &j in &owner {
            counts[j] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else { break };
        let movable = |i: &usize| counts[owner[*i]] >= 2;
        let by_mag = |a: &usize, b: &usize| m[(*a, empty)].norm().total_cmp(&m[(*b, empty)].norm()).then(b.cmp(a));
        let preferred = (0..m.nrows()).filter(movable).filter(|&i| second_best(m, i) == empty).max_by(by_mag);
        let i = preferred
            .or_else(|| (0..m.nrows()).filter(movable).max_by(by_mag))
            .expect("n_rf <= n_t leaves a donor row");
        mat[(i, owner[i])] = Complex::new(0.0, 0.0);
        let z = m[(i, empty)];
        mat[(i, empty)] = if z.norm() < TINY_ROW { Complex::new(1.0, 0.0) } else { z / z.norm() };
        owner[i] = empty;
    }
    SelectionMatrix::new(mat).expect("repair keeps one unit entry per row")
}

struct RestartOutcome {
    selection: SelectionMatrix,
    gain: f64,
    trace: Vec<f64>,
}

fn single_run(a_t: &CMat, n_rf: usize, opts: &DesignOptions, mut rng: SimRng) -> Result<RestartOutcome> {
    let u_a = leading_subspace(a_t, n_rf, &mut rng)?;
    let mut r = crate::linalg::random_unitary(n_rf, &mut rng);
    let mut trace = Vec::new();
    let mut rotated = &u_a * &r;
    let mut f = round_to_feasible(&rotated);
    for it in 0..opts.max_iter.max(1) {
        r = procrustes_rotation(&f, &u_a)?;
        rotated = &u_a * &r;
        let res = frobenius_sq(&(f.matrix() - &rotated));
        let prev = trace.last().copied();
        trace.push(res);
        let settled = prev.is_some_and(|p: f64| (p - res).abs() <= opts.tol * p.max(f64::MIN_POSITIVE));
        if settled || it + 1 == opts.max_iter {
            break;
        }
        f = round_to_feasible(&rotated);
    }
    let mut selection = repair_empty_columns(&f, &rotated);
    if opts.refine_phases {
        let partition = selection.partition()?;
        let phases = refine_phases(a_t, &partition, &selection.phases());
        selection = SelectionMatrix::from_partition(&partition, &phases);
    }
    let gain = effective_gain(&selection.normalized()?, a_t)?;
    Ok(RestartOutcome { selection, gain, trace })
}

/// Dynamic subarray design from the transmit steering matrix.
///
/// Each restart starts from a random rotation of the leading singular subspace
/// and alternates rounding with a Procrustes update. The restart with the largest
/// `||A_t^H F_bar||_F^2` is returned.
pub fn algorithm1(a_t: &CMat, n_rf: usize, rng: &mut SimRng, opts: &DesignOptions) -> Result<AnalogDesign> {
    if opts.restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be at least 1".into()));
    }
    if n_rf == 0 || n_rf > a_t.nrows() {
        return Err(Error::InvalidArgument(format!("need 1 <= n_rf <= {}, got {n_rf}", a_t.nrows())));
    }
    let seed = fork_seed(rng);
    let runs: Vec<RestartOutcome> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| single_run(a_t, n_rf, opts, stream(seed, r as u64)))
        .collect::<Result<_>>()?;
    let best = runs
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| a.gain.total_cmp(&b.gain).then(ib.cmp(ia)))
        .map(|(i, _)| i)
        .expect("at least one restart");
    let partition = runs[best].selection.partition()?;
    let f_bar = runs[best].selection.normalized()?;
    let phases = runs[best].selection.phases();
    Ok(AnalogDesign {
        f_bar,
        partition,
        phases,
        gain: runs[best].gain,
        residual_trace: runs[best].trace.clone(),
        restart_traces: runs.into_iter().map(|r| r.trace).collect(),
    })
}
