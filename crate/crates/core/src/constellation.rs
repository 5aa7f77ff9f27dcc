//! Finite-alphabet signal sets.
//!
//! A [`SignalSet`] holds all `K = M^Ns` equiprobable input vectors for `Ns`
//! streams drawn from an `M`-point constellation, stored as the columns of an
//! `Ns x K` matrix. Pairwise differences `x_m - x_k` are generated on demand.

use std::fmt;
use std::str::FromStr;

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64};

/// Largest number of vectors that will be materialized.
pub const ENUMERATION_CAP: u128 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modulation {
    Bpsk,
    Qpsk,
    Qam16,
}

impl Modulation {
    pub fn order(self) -> usize {
        match self {
            Modulation::Bpsk => 2,
            Modulation::Qpsk => 4,
            Modulation::Qam16 => 16,
        }
    }

    /// Unit average-energy constellation points, in symbol-index order.
    ///
    /// 16QAM is Gray mapped: bits `b3 b2` select the in-phase level and `b1 b0`
    /// the quadrature level, each through the Gray sequence `-3, -1, +1, +3`.
    pub fn points(self) -> Vec<C64> {
        match self {
            Modulation::Bpsk => vec![Complex::new(1.0, 0.0), Complex::new(-1.0, 0.0)],
            Modulation::Qpsk => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                vec![Complex::new(s, s), Complex::new(-s, s), Complex::new(-s, -s), Complex::new(s, -s)]
            }
            Modulation::Qam16 => {
                let gray = |b: usize| match b {
                    0b00 => -3.0,
                    0b01 => -1.0,
                    0b11 => 1.0,
                    _ => 3.0,
                };
                let scale = 1.0 / 10f64.sqrt();
                (0..16).map(|idx| Complex::new(gray(idx >> 2) * scale, gray(idx & 0b11) * scale)).collect()
            }
        }
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Modulation::Bpsk),
            "qpsk" => Ok(Modulation::Qpsk),
            "qam16" => Ok(Modulation::Qam16),
            other => Err(Error::Config(format!("unknown modulation '{other}'"))),
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modulation::Bpsk => "bpsk",
            Modulation::Qpsk => "qpsk",
            Modulation::Qam16 => "qam16",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SignalSet {
    modulation: Modulation,
    n_streams: usize,
    /// `Ns x K`; column `m` is `x_m`.
    vectors: CMat,
}

impl SignalSet {
    /// Enumerates every input vector. Vector `m` uses symbol index
    /// `(m / M^(Ns-1-s)) mod M` on stream `s`, i.e. lexicographic order with the
    /// first stream most significant.
    pub fn new(modulation: Modulation, n_streams: usize) -> Result<Self> {
        if n_streams == 0 {
            return Err(Error::InvalidArgument("n_streams must be at least 1".into()));
        }
        let m = modulation.order() as u128;
        let requested = (0..n_streams).try_fold(1u128, |acc, _| acc.checked_mul(m)).unwrap_or(u128::MAX);
        if requested > ENUMERATION_CAP {
            return Err(Error::BudgetExceeded { requested, cap: ENUMERATION_CAP });
        }
        let k = requested as usize;
        let points = modulation.points();
        let order = modulation.order();
        let mut vectors = CMat::zeros(n_streams, k);
        for col in 0..k {
            let mut rest = col;
            for s in (0..n_streams).rev() {
                vectors[(s, col)] = points[rest % order];
                rest /= order;
            }
        }
        Ok(SignalSet { modulation, n_streams, vectors })
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    pub fn n_streams(&self) -> usize {
        self.n_streams
    }

    /// Number of vectors `K`.
    pub fn len(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.ncols() == 0
    }

    /// `log2 K`, the saturation value of the mutual information.
    pub fn log2_size(&self) -> f64 {
        (self.len() as f64).log2()
    }

    /// All vectors as the columns of an `Ns x K` matrix.
    pub fn matrix(&self) -> &CMat {
        &self.vectors
    }

    pub fn vector(&self, m: usize) -> CVec {
        self.vectors.column(m).into_owned()
    }

    pub fn difference(&self, m: usize, k: usize) -> CVec {
        self.vectors.column(m) - self.vectors.column(k)
    }

    /// Every ordered pair `(m, k, x_m - x_k)` exactly once, `m` major.
    pub fn differences(&self) -> impl Iterator<Item = (usize, usize, CVec)> + '_ {
        let k = self.len();
        (0..k).flat_map(move |m| (0..k).map(move |j| (m, j, self.difference(m, j))))
    }
}
