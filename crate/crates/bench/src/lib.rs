//! Fixtures shared by the benchmarks.

use hybrid_precoding::capacity::noise_variance;
use hybrid_precoding::channel::fixtures;
use hybrid_precoding::optimizer::default_digital_init;
use hybrid_precoding::rng::stream;
use hybrid_precoding::subarray::{algorithm1, DesignOptions};
use hybrid_precoding::{HybridPrecoder, Modulation, SignalSet, StatisticalCsi};

/// A designed precoder on one of the named angle fixtures.
pub struct Instance {
    pub csi: StatisticalCsi,
    pub precoder: HybridPrecoder,
    pub signals: SignalSet,
    pub sigma2: f64,
}

/// `algorithm1` analog part with the singular-vector digital start, at `snr_db`.
pub fn instance(fixture: &str, n_r: usize, n_t: usize, n_rf: usize, n_s: usize, snr_db: f64) -> Instance {
    let angles = fixtures::by_name(fixture).expect("known fixture");
    let csi = StatisticalCsi::new(angles, n_r, n_t);
    let design = algorithm1(&csi.a_t, n_rf, &mut stream(7, 0), &DesignOptions::default()).expect("design");
    let b = default_digital_init(&csi.a_t, &design.f_bar, n_s, 1.0).expect("digital start");
    let precoder = HybridPrecoder::new(design.partition, design.phases, b, 1.0).expect("precoder");
    let signals = SignalSet::new(Modulation::Qpsk, n_s).expect("signal set");
    Instance { csi, precoder, signals, sigma2: noise_variance(snr_db, 1.0) }
}

/// The first example at desk scale.
pub fn example1_desk() -> Instance {
    instance("example1", 16, 32, 4, 2, -25.0)
}
