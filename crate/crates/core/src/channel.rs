//! Geometric multi-path channel for half-wavelength uniform linear arrays.
//!
//! `H = sqrt(Nr Nt / L) * A_r diag(gamma) A_t^H`, with i.i.d. CN(0, 1) path gains.
//! The steering matrices `A_r`, `A_t` are the slowly varying statistical CSI.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Complex;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec};
use crate::rng::{complex_gaussian, SimRng};

/// Uniform linear array with half-wavelength spacing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArrayGeometry {
    pub n_elements: usize,
}

impl ArrayGeometry {
    pub const SPACING_OVER_WAVELENGTH: f64 = 0.5;

    pub fn new(n_elements: usize) -> Self {
        assert!(n_elements >= 1, "an array needs at least one element");
        ArrayGeometry { n_elements }
    }

    /// Unit-norm response, entry `n` = `exp(-j 2 pi (d / lambda) n sin(theta)) / sqrt(N)`.
    pub fn steering_vector(&self, angle: f64) -> CVec {
        let n = self.n_elements;
        let scale = 1.0 / (n as f64).sqrt();
        let phase_step = -2.0 * PI * Self::SPACING_OVER_WAVELENGTH * angle.sin();
        CVec::from_fn(n, |i, _| Complex::from_polar(scale, phase_step * i as f64))
    }
}

pub fn steering_vector(n_elements: usize, angle: f64) -> CVec {
    ArrayGeometry::new(n_elements).steering_vector(angle)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathAngles {
    pub aoa: Vec<f64>,
    pub aod: Vec<f64>,
}

impl PathAngles {
    pub fn new(aoa: Vec<f64>, aod: Vec<f64>) -> Result<Self> {
        if aoa.len() != aod.len() || aoa.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "need matching non-empty angle vectors, got {} AoA and {} AoD",
                aoa.len(),
                aod.len()
            )));
        }
        if aoa.iter().chain(aod.iter()).any(|a| !a.is_finite()) {
            return Err(Error::InvalidArgument("angles must be finite".into()));
        }
        Ok(PathAngles { aoa, aod })
    }

    pub fn n_paths(&self) -> usize {
        self.aoa.len()
    }
}

/// Mean angle of a Laplacian cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeanAngle {
    Fixed(f64),
    /// One mean drawn from `unif(0, 2 pi)` per call and shared by all paths.
    Uniform,
}

/// Laplacian sample by inverse CDF; `spread` is the standard deviation, so the
/// scale parameter is `spread / sqrt(2)`.
pub fn sample_laplacian<R: Rng + ?Sized>(rng: &mut R, mean: f64, spread: f64) -> f64 {
    let b = spread / std::f64::consts::SQRT_2;
    let mut u: f64 = rng.random::<f64>() - 0.5;
    // keep ln(1 - 2|u|) finite
    while u.abs() >= 0.5 {
        u = rng.random::<f64>() - 0.5;
    }
    mean - b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

pub fn sample_path_angles(
    rng: &mut SimRng,
    n_paths: usize,
    mean_aoa: MeanAngle,
    mean_aod: f64,
    spread: f64,
) -> Result<PathAngles> {
    if spread.is_nan() || spread <= 0.0 {
        return Err(Error::InvalidArgument(format!("angular spread must be positive, got {spread}")));
    }
    if n_paths == 0 {
        return Err(Error::InvalidArgument("need at least one path".into()));
    }
    let mean_r = match mean_aoa {
        MeanAngle::Fixed(a) => a,
        MeanAngle::Uniform => rng.random::<f64>() * 2.0 * PI,
    };
    let aoa = (0..n_paths).map(|_| sample_laplacian(rng, mean_r, spread)).collect();
    let aod = (0..n_paths).map(|_| sample_laplacian(rng, mean_aod, spread)).collect();
    PathAngles::new(aoa, aod)
}

/// Slowly varying channel knowledge: stacked receive and transmit steering vectors.
#[derive(Debug, Clone)]
pub struct StatisticalCsi {
    pub angles: PathAngles,
    /// `Nr x L`
    pub a_r: CMat,
    /// `Nt x L`
    pub a_t: CMat,
}

impl StatisticalCsi {
    pub fn new(angles: PathAngles, n_r: usize, n_t: usize) -> Self {
        let l = angles.n_paths();
        let rx = ArrayGeometry::new(n_r);
        let tx = ArrayGeometry::new(n_t);
        let mut a_r = CMat::zeros(n_r, l);
        let mut a_t = CMat::zeros(n_t, l);
        for p in 0..l {
            a_r.column_mut(p).copy_from(&rx.steering_vector(angles.aoa[p]));
            a_t.column_mut(p).copy_from(&tx.steering_vector(angles.aod[p]));
        }
        StatisticalCsi { angles, a_r, a_t }
    }

    pub fn n_r(&self) -> usize {
        self.a_r.nrows()
    }

    pub fn n_t(&self) -> usize {
        self.a_t.nrows()
    }

    pub fn n_paths(&self) -> usize {
        self.a_t.ncols()
    }

    /// `sqrt(Nr Nt / L)`
    pub fn scale(&self) -> f64 {
        (self.n_r() as f64 * self.n_t() as f64 / self.n_paths() as f64).sqrt()
    }

    /// Receive Gram matrix `A_r^H A_r`.
    pub fn receive_gram(&self) -> CMat {
        self.a_r.ad_mul(&self.a_r)
    }

    /// CSV dump: one row per array element, `re,im` per path column.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (name, m) in [("a_r", &self.a_r), ("a_t", &self.a_t)] {
            let _ = writeln!(out, "# {name} {}x{}", m.nrows(), m.ncols());
            for i in 0..m.nrows() {
                let row: Vec<String> = (0..m.ncols()).map(|j| format!("{},{}", m[(i, j)].re, m[(i, j)].im)).collect();
                let _ = writeln!(out, "{}", row.join(","));
            }
        }
        out
    }
}

pub fn build_statistical_csi(angles: PathAngles, n_r: usize, n_t: usize) -> StatisticalCsi {
    StatisticalCsi::new(angles, n_r, n_t)
}

/// One draw of the channel matrix with its path gains.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub gains: CVec,
    pub h: CMat,
    pub scale: f64,
}

impl ChannelRealization {
    pub fn from_gains(csi: &StatisticalCsi, gains: CVec) -> Result<Self> {
        if gains.len() != csi.n_paths() {
            return Err(Error::DimensionMismatch(format!("{} gains for {} paths", gains.len(), csi.n_paths())));
        }
        let scale = csi.scale();
        let h = assemble(csi, &gains, scale);
        Ok(ChannelRealization { gains, h, scale })
    }

    /// Recomputes `scale * A_r diag(gains) A_t^H` from the stored parts.
    pub fn reconstruct(&self, csi: &StatisticalCsi) -> CMat {
        assemble(csi, &self.gains, self.scale)
    }
}

fn assemble(csi: &StatisticalCsi, gains: &CVec, scale: f64) -> CMat {
    let mut weighted = csi.a_r.clone();
    for (p, g) in gains.iter().enumerate() {
        let f = *g * scale;
        for z in weighted.column_mut(p).iter_mut() {
            *z *= f;
        }
    }
    weighted * csi.a_t.adjoint()
}

pub fn sample_gains<R: Rng + ?Sized>(rng: &mut R, n_paths: usize) -> CVec {
    CVec::from_fn(n_paths, |_, _| complex_gaussian(rng, 1.0))
}

pub fn sample_channel<R: Rng + ?Sized>(rng: &mut R, csi: &StatisticalCsi) -> ChannelRealization {
    let gains = sample_gains(rng, csi.n_paths());
    ChannelRealization::from_gains(csi, gains).expect("gain count matches path count")
}

/// `H F`, the reduced-dimension channel seen by the digital precoder.
pub fn effective_channel(h: &CMat, f: &CMat) -> Result<CMat> {
    if h.ncols() != f.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "channel is {}x{} but analog precoder is {}x{}",
            h.nrows(),
            h.ncols(),
            f.nrows(),
            f.ncols()
        )));
    }
    Ok(h * f)
}

/// Angle realizations of the four published scenarios.
pub mod fixtures {
    use super::PathAngles;

    pub const EXAMPLE1_AOA: [f64; 6] = [0.6833, 0.5937, 0.5982, 0.5309, 0.7593, 0.7719];
    pub const EXAMPLE1_AOD: [f64; 6] = [0.7468, 0.8778, 0.8219, 0.8823, 1.0332, 1.1444];
    pub const EXAMPLE2_AOA: [f64; 6] = [4.6448, 4.7492, 4.9337, 4.8962, 5.3448, 4.4681];
    pub const EXAMPLE2_AOD: [f64; 6] = [0.8806, 1.4545, 0.8359, 1.1047, 1.2880, 0.8917];
    pub const EXAMPLE3_AOA: [f64; 8] = [3.921, 3.442, 3.550, 3.449, 3.514, 3.415, 3.314, 3.289];
    pub const EXAMPLE3_AOD: [f64; 8] = [0.760, 0.614, 0.674, 0.683, 0.916, 0.749, 0.831, 0.777];
    pub const EXAMPLE4_AOA: [f64; 5] = [0.4186, 0.5499, 0.4839, 0.3135, 0.7505];
    pub const EXAMPLE4_AOD: [f64; 5] = [0.9144, 0.7117, 0.7969, 0.8150, 0.6860];

    /// Named fixture lookup: `example1` .. `example4`.
    pub fn by_name(name: &str) -> Option<PathAngles> {
        let (r, t): (&[f64], &[f64]) = match name {
            "example1" => (&EXAMPLE1_AOA, &EXAMPLE1_AOD),
            "example2" => (&EXAMPLE2_AOA, &EXAMPLE2_AOD),
            "example3" => (&EXAMPLE3_AOA, &EXAMPLE3_AOD),
            "example4" => (&EXAMPLE4_AOA, &EXAMPLE4_AOD),
            _ => return None,
        };
        PathAngles::new(r.to_vec(), t.to_vec()).ok()
    }
}

/// Reads one angle (radians) per line; blank lines and `#` comments are skipped.
pub fn read_angle_file(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::FixtureMissing(format!("{}: {e}", path.display())))?;
    parse_angles(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn parse_angles(text: &str) -> std::result::Result<Vec<f64>, String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| l.parse::<f64>().map_err(|e| format!("bad angle '{l}': {e}")))
        .collect()
}
