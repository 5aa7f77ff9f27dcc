//! Antenna-to-RF-chain partitions and the statistical-CSI subarray designer.

mod design;
mod oracle;

use std::fmt;

use nalgebra::Complex;
use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::{frobenius_sq, CMat, RMat};

pub use design::{algorithm1, procrustes_rotation, round_to_feasible, unconstrained_seed, AnalogDesign, DesignOptions};
pub use oracle::{
    exhaustive_oracle, for_each_partition, optimize_partition_phases, optimize_phases, refine_phases, OracleResult,
    ORACLE_LIMIT,
};

/// Disjoint, nonempty antenna sets, one per RF chain. Antennas are 0-based
/// internally; the text form is 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    n_t: usize,
    sets: Vec<Vec<usize>>,
    owner: Vec<usize>,
}

impl Partition {
    pub fn new(n_t: usize, mut sets: Vec<Vec<usize>>) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::InvalidPartition("no RF chains".into()));
        }
        let mut owner = vec![usize::MAX; n_t];
        for (j, set) in sets.iter_mut().enumerate() {
            if set.is_empty() {
                return Err(Error::InvalidPartition(format!("set {} is empty", j + 1)));
            }
            set.sort_unstable();
            for &i in set.iter() {
                if i >= n_t {
                    return Err(Error::InvalidPartition(format!("antenna {} out of range 1..={n_t}", i + 1)));
                }
                if owner[i] != usize::MAX {
                    return Err(Error::InvalidPartition(format!("antenna {} assigned twice", i + 1)));
                }
                owner[i] = j;
            }
        }
        if let Some(i) = owner.iter().position(|&o| o == usize::MAX) {
            return Err(Error::InvalidPartition(format!("antenna {} is not assigned", i + 1)));
        }
        Ok(Partition { n_t, sets, owner })
    }

    /// Builds the partition from a per-antenna chain index.
    pub fn from_assignment(owner: &[usize], n_rf: usize) -> Result<Self> {
        let mut sets = vec![Vec::new(); n_rf];
        for (i, &j) in owner.iter().enumerate() {
            if j >= n_rf {
                return Err(Error::InvalidPartition(format!("antenna {} mapped to chain {}", i + 1, j + 1)));
            }
            sets[j].push(i);
        }
        Partition::new(owner.len(), sets)
    }

    /// One antenna per chain: the fully digital (unconstrained) layout.
    pub fn singletons(n_t: usize) -> Self {
        Partition::new(n_t, (0..n_t).map(|i| vec![i]).collect()).expect("singletons are a valid partition")
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn n_rf(&self) -> usize {
        self.sets.len()
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    pub fn set(&self, j: usize) -> &[usize] {
        &self.sets[j]
    }

    /// Chain index driving antenna `i`.
    pub fn owner(&self, i: usize) -> usize {
        self.owner[i]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.owner
    }

    /// Per-chain amplitude `|S_j|^{-1/2}`.
    pub fn amplitude(&self, j: usize) -> f64 {
        1.0 / (self.sets[j].len() as f64).sqrt()
    }

    /// Normalized analog precoder with entries `|S_j|^{-1/2} exp(j phases_ij)` on the support.
    pub fn analog_precoder(&self, phases: &RMat) -> CMat {
        let mut f = CMat::zeros(self.n_t, self.n_rf());
        for i in 0..self.n_t {
            let j = self.owner[i];
            f[(i, j)] = Complex::from_polar(self.amplitude(j), phases[(i, j)]);
        }
        f
    }

    /// Sets every off-support entry of `m` to zero.
    pub fn mask_real(&self, m: &mut RMat) {
        for i in 0..self.n_t {
            for j in 0..self.n_rf() {
                if self.owner[i] != j {
                    m[(i, j)] = 0.0;
                }
            }
        }
    }

    /// One line per RF chain, 1-based antenna indices separated by commas.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for set in &self.sets {
            let line: Vec<String> = set.iter().map(|i| (i + 1).to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut sets = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let set = line
                .split(',')
                .map(|tok| {
                    let v: usize = tok
                        .trim()
                        .parse()
                        .map_err(|_| Error::InvalidPartition(format!("bad antenna index '{}'", tok.trim())))?;
                    v.checked_sub(1).ok_or_else(|| Error::InvalidPartition("antenna indices are 1-based".into()))
                })
                .collect::<Result<Vec<usize>>>()?;
            sets.push(set);
        }
        let n_t = sets.iter().map(Vec::len).sum();
        Partition::new(n_t, sets)
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .sets
            .iter()
            .map(|s| format!("{{{}}}", s.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(",")))
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Analog matrix with one unit-modulus entry per row and zeros elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionMatrix {
    f: CMat,
}

impl SelectionMatrix {
    pub const MODULUS_TOL: f64 = 1e-9;

    pub fn new(f: CMat) -> Result<Self> {
        for i in 0..f.nrows() {
            let mut count = 0;
            for j in 0..f.ncols() {
                let a = f[(i, j)].norm();
                if a > Self::MODULUS_TOL {
                    if (a - 1.0).abs() > Self::MODULUS_TOL {
                        return Err(Error::InvalidPartition(format!("entry ({}, {}) has modulus {a}", i + 1, j + 1)));
                    }
                    count += 1;
                }
            }
            if count != 1 {
                return Err(Error::InvalidPartition(format!("row {} has {count} nonzero entries", i + 1)));
            }
        }
        Ok(SelectionMatrix { f })
    }

    /// Unit-modulus selection matrix with the given phases on the partition support.
    pub fn from_partition(partition: &Partition, phases: &RMat) -> Self {
        let mut f = CMat::zeros(partition.n_t(), partition.n_rf());
        for i in 0..partition.n_t() {
            let j = partition.owner(i);
            f[(i, j)] = Complex::from_polar(1.0, phases[(i, j)]);
        }
        SelectionMatrix { f }
    }

    pub fn matrix(&self) -> &CMat {
        &self.f
    }

    /// Column index of the nonzero entry in each row.
    pub fn assignment(&self) -> Vec<usize> {
        (0..self.f.nrows())
            .map(|i| (0..self.f.ncols()).find(|&j| self.f[(i, j)].norm() > Self::MODULUS_TOL).unwrap_or(0))
            .collect()
    }

    /// Fails when some column is empty.
    pub fn partition(&self) -> Result<Partition> {
        Partition::from_assignment(&self.assignment(), self.f.ncols())
    }

    pub fn phases(&self) -> RMat {
        RMat::from_fn(self.f.nrows(), self.f.ncols(), |i, j| {
            let z = self.f[(i, j)];
            if z.norm() > Self::MODULUS_TOL {
                z.arg()
            } else {
                0.0
            }
        })
    }

    /// `F (F^H F)^{-1/2}`, i.e. each column scaled by `|S_j|^{-1/2}`.
    pub fn normalized(&self) -> Result<CMat> {
        let partition = self.partition()?;
        let mut f = self.f.clone();
        for j in 0..f.ncols() {
            let s = Complex::new(partition.amplitude(j), 0.0);
            for z in f.column_mut(j).iter_mut() {
                *z *= s;
            }
        }
        Ok(f)
    }
}

/// Number of ways to split `n_t` antennas into `n_rf` nonempty unlabeled groups.
pub fn stirling_count(n_t: usize, n_rf: usize) -> Result<BigUint> {
    if n_rf == 0 || n_rf > n_t {
        return Err(Error::InvalidArgument(format!("need 1 <= n_rf <= n_t, got n_t={n_t}, n_rf={n_rf}")));
    }
    let mut positive = BigUint::zero();
    let mut negative = BigUint::zero();
    let mut binom = BigUint::one();
    for k in 0..=n_rf {
        if k > 0 {
            binom = binom * BigUint::from(n_rf - k + 1) / BigUint::from(k);
        }
        let term = &binom * BigUint::from(k).pow(n_t as u32);
        if (n_rf - k).is_multiple_of(2) {
            positive += term;
        } else {
            negative += term;
        }
    }
    let factorial: BigUint = (1..=n_rf).map(BigUint::from).product();
    Ok((positive - negative) / factorial)
}

/// `||A_t^H F||_F^2 = tr(F^H A_t A_t^H F)` for a column-orthonormal analog precoder.
/// The `Nr Nt / L` channel prefactor is left out.
pub fn effective_gain(f_bar: &CMat, a_t: &CMat) -> Result<f64> {
    if f_bar.nrows() != a_t.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "analog precoder has {} rows, steering matrix has {}",
            f_bar.nrows(),
            a_t.nrows()
        )));
    }
    Ok(frobenius_sq(&(a_t.adjoint() * f_bar)))
}

/// Gain of a raw unit-modulus selection matrix after `(F^H F)^{-1/2}` whitening.
pub fn effective_gain_raw(f: &SelectionMatrix, a_t: &CMat) -> Result<f64> {
    effective_gain(&f.normalized()?, a_t)
}

/// Contiguous blocks of `n_t / n_rf` antennas.
pub fn fixed_partition(n_t: usize, n_rf: usize) -> Result<Partition> {
    if n_rf == 0 || !n_t.is_multiple_of(n_rf) {
        return Err(Error::NotDivisible { n_t, n_rf });
    }
    let q = n_t / n_rf;
    Partition::new(n_t, (0..n_rf).map(|j| (j * q..(j + 1) * q).collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::svd;
    use crate::rng::{complex_gaussian, stream};
    use proptest::prelude::*;

    #[test]
    fn stirling_values() {
        assert_eq!(stirling_count(16, 4).unwrap(), BigUint::from(171_798_901u64));
        assert_eq!(stirling_count(9, 1).unwrap(), BigUint::one());
        assert_eq!(stirling_count(4, 2).unwrap(), BigUint::from(7u32));
        assert_eq!(stirling_count(6, 2).unwrap(), BigUint::from(31u32));
        assert_eq!(stirling_count(10, 3).unwrap(), BigUint::from(9330u32));
        assert_eq!(stirling_count(5, 5).unwrap(), BigUint::one());
        assert!(stirling_count(3, 4).is_err());
        // S(64, 4) is far beyond u64 range but exact
        assert!(stirling_count(64, 4).unwrap().bits() > 64);
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn stirling_matches_recurrence() {
        // S(n, k) = k S(n-1, k) + S(n-1, k-1)
        let mut table = vec![vec![BigUint::zero(); 9]; 21];
        table[0][0] = BigUint::one();
        for n in 1..=20 {
            for k in 1..=8usize.min(n) {
                table[n][k] = BigUint::from(k) * &table[n - 1][k] + &table[n - 1][k - 1];
            }
        }
        for n in 1..=20 {
            for k in 1..=8usize.min(n) {
                assert_eq!(stirling_count(n, k).unwrap(), table[n][k], "S({n},{k})");
            }
        }
    }

    #[test]
    fn fixed_blocks() {
        let p = fixed_partition(64, 4).unwrap();
        assert_eq!(p.n_rf(), 4);
        for j in 0..4 {
            assert_eq!(p.set(j), (16 * j..16 * (j + 1)).collect::<Vec<_>>().as_slice());
        }
        let s = fixed_partition(4, 4).unwrap();
        assert!(s.sets().iter().all(|x| x.len() == 1));
        assert!(matches!(fixed_partition(6, 4), Err(Error::NotDivisible { n_t: 6, n_rf: 4 })));
    }

    #[test]
    fn partition_validation_and_text() {
        assert!(Partition::new(3, vec![vec![0, 1], vec![]]).is_err());
        assert!(Partition::new(3, vec![vec![0, 1], vec![1, 2]]).is_err());
        assert!(Partition::new(3, vec![vec![0], vec![2]]).is_err());
        let p = Partition::new(5, vec![vec![4, 0], vec![1, 2, 3]]).unwrap();
        assert_eq!(p.to_text(), "1,5\n2,3,4\n");
        assert_eq!(Partition::parse(&p.to_text()).unwrap(), p);
        assert!(Partition::parse("0,1\n").is_err());
        assert_eq!(p.to_string(), "{1,5} {2,3,4}");
    }

    #[test]
    fn analog_precoder_is_column_orthonormal() {
        let p = Partition::new(5, vec![vec![0, 3], vec![1, 2, 4]]).unwrap();
        let phases = RMat::from_fn(5, 2, |i, j| 0.3 * i as f64 - 0.7 * j as f64);
        let f = p.analog_precoder(&phases);
        assert!((f.adjoint() * &f - CMat::identity(2, 2)).norm() < 1e-12);
        assert_eq!(f[(0, 1)].norm(), 0.0);
        assert!((f[(2, 1)].norm() - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn selection_matrix_checks() {
        let mut f = CMat::zeros(3, 2);
        f[(0, 0)] = Complex::new(1.0, 0.0);
        f[(1, 1)] = Complex::from_polar(1.0, 0.4);
        assert!(SelectionMatrix::new(f.clone()).is_err());
        f[(2, 1)] = Complex::from_polar(1.0, -2.0);
        let s = SelectionMatrix::new(f.clone()).unwrap();
        assert_eq!(s.assignment(), vec![0, 1, 1]);
        f[(2, 0)] = Complex::new(1.0, 0.0);
        assert!(SelectionMatrix::new(f).is_err());
    }

    #[test]
    fn selection_form_equivalence_exhaustive() {
        // every assignment with all columns used gives a valid partition and back
        for n_t in 1..=6usize {
            for n_rf in 1..=3usize.min(n_t) {
                let total = n_rf.pow(n_t as u32);
                let mut valid = 0u64;
                for code in 0..total {
                    let owner: Vec<usize> = (0..n_t).map(|i| (code / n_rf.pow(i as u32)) % n_rf).collect();
                    let phases = RMat::from_fn(n_t, n_rf, |i, j| (i * 7 + j) as f64 * 0.37);
                    let mut f = CMat::zeros(n_t, n_rf);
                    for (i, &j) in owner.iter().enumerate() {
                        f[(i, j)] = Complex::from_polar(1.0, phases[(i, j)]);
                    }
                    let sel = SelectionMatrix::new(f).unwrap();
                    match sel.partition() {
                        Ok(p) => {
                            valid += 1;
                            assert_eq!(p.assignment(), owner.as_slice());
                            let back = SelectionMatrix::from_partition(&p, &phases);
                            assert_eq!(back, sel);
                        }
                        Err(_) => assert!((0..n_rf).any(|j| !owner.contains(&j))),
                    }
                }
                // labeled partitions = n_rf! * S(n_t, n_rf)
                let fact: u64 = (1..=n_rf as u64).product();
                let s: u64 = stirling_count(n_t, n_rf).unwrap().try_into().unwrap();
                assert_eq!(valid, fact * s);
            }
        }
    }

    #[test]
    fn gain_of_leading_singular_vectors() {
        let mut rng = stream(4, 0);
        let a_t = CMat::from_fn(8, 3, |_, _| complex_gaussian(&mut rng, 1.0));
        let d = svd(&a_t).unwrap();
        let u = d.u.columns(0, 2).into_owned();
        let expected = d.singular_values[0].powi(2) + d.singular_values[1].powi(2);
        assert!((effective_gain(&u, &a_t).unwrap() - expected).abs() < 1e-10);
        assert_eq!(effective_gain(&u, &CMat::zeros(8, 3)).unwrap(), 0.0);
        assert!(effective_gain(&u, &CMat::zeros(7, 3)).is_err());
    }

    #[test]
    fn gain_matches_naive_trace() {
        let mut rng = stream(5, 0);
        let a_t = CMat::from_fn(6, 3, |_, _| complex_gaussian(&mut rng, 1.0));
        let p = Partition::new(6, vec![vec![0, 2, 5], vec![1, 3, 4]]).unwrap();
        let phases = RMat::from_fn(6, 2, |i, j| (i + 3 * j) as f64);
        let sel = SelectionMatrix::from_partition(&p, &phases);
        let f_bar = sel.normalized().unwrap();
        let mut naive = 0.0;
        for j in 0..2 {
            for l in 0..3 {
                let mut s = Complex::new(0.0, 0.0);
                for i in 0..6 {
                    s += a_t[(i, l)].conj() * f_bar[(i, j)];
                }
                naive += s.norm_sqr();
            }
        }
        assert!((effective_gain(&f_bar, &a_t).unwrap() - naive).abs() < 1e-12);
        assert!((effective_gain_raw(&sel, &a_t).unwrap() - naive).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn gain_invariant_to_column_phase(seed in 0u64..500, r0 in -3.0f64..3.0, r1 in -3.0f64..3.0) {
            let mut rng = stream(seed, 1);
            let a_t = CMat::from_fn(6, 2, |_, _| complex_gaussian(&mut rng, 1.0));
            let p = Partition::new(6, vec![vec![0, 1, 4], vec![2, 3, 5]]).unwrap();
            let phases = RMat::from_fn(6, 2, |_, _| rand::Rng::random::<f64>(&mut rng) * 6.0);
            let f = p.analog_precoder(&phases);
            let d = CMat::from_diagonal(&crate::linalg::CVec::from_vec(vec![Complex::from_polar(1.0, r0), Complex::from_polar(1.0, r1)]));
            let g0 = effective_gain(&f, &a_t).unwrap();
            let g1 = effective_gain(&(&f * d), &a_t).unwrap();
            prop_assert!((g0 - g1).abs() < 1e-12 * g0.max(1.0));
        }
    }
}
