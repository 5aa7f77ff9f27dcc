//! Energy efficiency of a precoding architecture.

use crate::error::{Error, Result};

/// Power budget of one transmitter: radiated power plus circuit power of the
/// RF chains and phase shifters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyModel {
    /// Radiated power in watts.
    pub p_tx: f64,
    /// Watts per RF chain.
    pub p_rf: f64,
    /// Watts per phase shifter.
    pub p_ps: f64,
    pub n_rf: usize,
    pub n_ps: usize,
}

impl EnergyModel {
    pub const DEFAULT_P_TX: f64 = 1.0;
    pub const DEFAULT_P_RF: f64 = 0.25;
    pub const DEFAULT_P_PS: f64 = 0.001;

    pub fn new(p_tx: f64, p_rf: f64, p_ps: f64, n_rf: usize, n_ps: usize) -> Result<Self> {
        let finite_pos = |x: f64| x.is_finite() && x > 0.0;
        if !(finite_pos(p_tx) && finite_pos(p_rf) && finite_pos(p_ps)) || n_rf == 0 || n_ps == 0 {
            return Err(Error::InvalidArgument(format!(
                "energy model needs positive entries, got P={p_tx}, P_rf={p_rf}, P_ps={p_ps}, N_rf={n_rf}, N_ps={n_ps}"
            )));
        }
        Ok(EnergyModel { p_tx, p_rf, p_ps, n_rf, n_ps })
    }

    /// Default circuit powers for an architecture with the given counts.
    pub fn with_defaults(p_tx: f64, n_rf: usize, n_ps: usize) -> Result<Self> {
        EnergyModel::new(p_tx, Self::DEFAULT_P_RF, Self::DEFAULT_P_PS, n_rf, n_ps)
    }

    /// One shifter per antenna.
    pub fn subarray(n_t: usize, n_rf: usize) -> Result<Self> {
        EnergyModel::with_defaults(Self::DEFAULT_P_TX, n_rf, n_t)
    }

    /// One shifter per antenna and RF chain.
    pub fn fully_connected(n_t: usize, n_rf: usize) -> Result<Self> {
        EnergyModel::with_defaults(Self::DEFAULT_P_TX, n_rf, n_t * n_rf)
    }

    /// Total consumed power in watts.
    pub fn total_power(&self) -> f64 {
        self.p_tx + self.n_rf as f64 * self.p_rf + self.n_ps as f64 * self.p_ps
    }
}

/// Spectral efficiency per consumed watt, in bits/s/Hz/W.
pub fn energy_efficiency(mi: f64, model: &EnergyModel) -> f64 {
    mi / model.total_power()
}
