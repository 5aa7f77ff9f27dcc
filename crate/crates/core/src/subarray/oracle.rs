//! Brute-force partition search for small arrays.

use std::collections::HashMap;

use nalgebra::Complex;
use rand::Rng;
use rayon::prelude::*;

use super::{stirling_count, Partition};
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, RMat};
use crate::rng::{fork_seed, stream, SimRng};

/// Largest number of partitions the exhaustive search will visit.
pub const ORACLE_LIMIT: u64 = 100_000;

const RANDOM_STARTS: usize = 16;

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub partition: Partition,
    pub phases: RMat,
    pub f_bar: CMat,
    pub gain: f64,
    pub visited: u64,
}

/// Calls `visit` with the chain index of every antenna, once per partition of
/// `n_t` antennas into exactly `n_rf` nonempty groups (restricted-growth order).
pub fn for_each_partition(n_t: usize, n_rf: usize, mut visit: impl FnMut(&[usize])) -> u64 {
    fn recurse(
        pos: usize,
        used: usize,
        n_rf: usize,
        owner: &mut [usize],
        visit: &mut dyn FnMut(&[usize]),
        count: &mut u64,
    ) {
        let n_t = owner.len();
        if pos == n_t {
            if used == n_rf {
                *count += 1;
                visit(owner);
            }
            return;
        }
        // not enough antennas left to open the missing groups
        if n_rf - used > n_t - pos {
            return;
        }
        let top = (used + 1).min(n_rf);
        for j in 0..top {
            owner[pos] = j;
            recurse(pos + 1, used.max(j + 1), n_rf, owner, visit, count);
        }
    }
    if n_rf == 0 || n_rf > n_t {
        return 0;
    }
    let mut owner = vec![0; n_t];
    let mut count = 0;
    recurse(0, 0, n_rf, &mut owner, &mut visit, &mut count);
    count
}

/// Maximizes `||rows^H f||^2 / |S|` over unit-modulus `f`, where `rows` holds the
/// steering-matrix rows of one subarray. Returns the gain and the phases.
///
/// Fixed-point iteration `f <- exp(j arg(Q f))` with `Q = rows rows^H` never
/// decreases the objective for positive semidefinite `Q`; it is started from the
/// phases of the dominant eigenvector and from random phases.
pub fn optimize_phases(rows: &CMat, rng: &mut SimRng, random_starts: usize) -> (f64, Vec<f64>) {
    let n = rows.nrows();
    let q = rows * rows.adjoint();
    let eig = nalgebra::SymmetricEigen::new(q.clone());
    let top = eig.eigenvalues.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap_or(0);
    let mut starts: Vec<Vec<f64>> = vec![eig.eigenvectors.column(top).iter().map(|z| z.arg()).collect()];
    for _ in 0..random_starts {
        starts.push((0..n).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect());
    }
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for start in starts {
        let (v, phases) = ascend_phases(&q, start);
        if v > best.0 {
            best = (v, phases);
        }
    }
    (best.0 / n as f64, best.1)
}

/// Fixed-point ascent of `f^H Q f` over unit-modulus `f` from the given phases.
fn ascend_phases(q: &CMat, mut phases: Vec<f64>) -> (f64, Vec<f64>) {
    let n = phases.len();
    let value = |f: &CVec| (f.adjoint() * q * f)[(0, 0)].re;
    let mut f = CVec::from_iterator(n, phases.iter().map(|&p| Complex::from_polar(1.0, p)));
    let mut current = value(&f);
    for _ in 0..1000 {
        let g = q * &f;
        for i in 0..n {
            if g[i].norm() > 1e-300 {
                phases[i] = g[i].arg();
            }
        }
        let next = CVec::from_iterator(n, phases.iter().map(|&p| Complex::from_polar(1.0, p)));
        let v = value(&next);
        f = next;
        let gained = v - current;
        current = v;
        if gained <= 1e-14 * current.abs().max(1e-300) {
            break;
        }
    }
    (current, phases)
}

/// Improves the phases of each chain on a fixed partition, starting from `phases`.
/// The per-chain gain never decreases.
pub fn refine_phases(a_t: &CMat, partition: &Partition, phases: &RMat) -> RMat {
    let mut out = RMat::zeros(partition.n_t(), partition.n_rf());
    for j in 0..partition.n_rf() {
        let set = partition.set(j);
        let rows = subset_rows(a_t, set);
        let start: Vec<f64> = set.iter().map(|&i| phases[(i, j)]).collect();
        let (_, ph) = ascend_phases(&(&rows * rows.adjoint()), start);
        for (r, &i) in set.iter().enumerate() {
            out[(i, j)] = ph[r];
        }
    }
    out
}

fn subset_rows(a_t: &CMat, set: &[usize]) -> CMat {
    CMat::from_fn(set.len(), a_t.ncols(), |r, l| a_t[(set[r], l)])
}

/// Best partition and phases of `n_rf` subarrays by enumerating every partition.
///
/// Per-subset optima are cached, so each antenna subset is phase-optimized once.
pub fn exhaustive_oracle(a_t: &CMat, n_rf: usize, rng: &mut SimRng) -> Result<OracleResult> {
    let n_t = a_t.nrows();
    let count = stirling_count(n_t, n_rf)?;
    if count > ORACLE_LIMIT.into() || n_t > 63 {
        return Err(Error::TooLarge { count: count.to_string(), limit: ORACLE_LIMIT });
    }
    let mut partitions: Vec<Vec<usize>> = Vec::new();
    let visited = for_each_partition(n_t, n_rf, |owner| partitions.push(owner.to_vec()));

    let mut masks: Vec<u64> = partitions.iter().flat_map(|owner| (0..n_rf).map(move |j| mask_of(owner, j))).collect();
    masks.sort_unstable();
    masks.dedup();
    let seed = fork_seed(rng);
    let solved: HashMap<u64, (f64, Vec<f64>)> = masks
        .par_iter()
        .map(|&mask| {
            let set: Vec<usize> = (0..n_t).filter(|i| mask >> i & 1 == 1).collect();
            let mut local = stream(seed, mask);
            (mask, optimize_phases(&subset_rows(a_t, &set), &mut local, RANDOM_STARTS))
        })
        .collect();

    let mut best: Option<(f64, &Vec<usize>)> = None;
    for owner in &partitions {
        let gain: f64 = (0..n_rf).map(|j| solved[&mask_of(owner, j)].0).sum();
        if best.is_none_or(|(g, _)| gain > g) {
            best = Some((gain, owner));
        }
    }
    let (gain, owner) = best.expect("at least one partition");
    let partition = Partition::from_assignment(owner, n_rf)?;
    let mut phases = RMat::zeros(n_t, n_rf);
    for j in 0..n_rf {
        let (_, ph) = &solved[&mask_of(owner, j)];
        for (r, &i) in partition.set(j).iter().enumerate() {
            phases[(i, j)] = ph[r];
        }
    }
    let f_bar = partition.analog_precoder(&phases);
    Ok(OracleResult { partition, phases, f_bar, gain, visited })
}

fn mask_of(owner: &[usize], j: usize) -> u64 {
    owner.iter().enumerate().filter(|(_, &o)| o == j).fold(0u64, |m, (i, _)| m | 1 << i)
}

/// Phase matrix that maximizes the per-chain gain on a fixed partition.
pub fn optimize_partition_phases(a_t: &CMat, partition: &Partition, rng: &mut SimRng) -> RMat {
    let mut phases = RMat::zeros(partition.n_t(), partition.n_rf());
    for j in 0..partition.n_rf() {
        let (_, ph) = optimize_phases(&subset_rows(a_t, partition.set(j)), rng, RANDOM_STARTS);
        for (r, &i) in partition.set(j).iter().enumerate() {
            phases[(i, j)] = ph[r];
        }
    }
    phases
}
