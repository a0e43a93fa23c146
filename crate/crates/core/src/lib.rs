//! Exact simulation of single-photon and path-entangled two-photon interferometry.
//!
//! States are propagated through explicit beam-splitter and phase-shifter unitaries;
//! joint detection probabilities, local marginals, reduced density operators and CHSH
//! values are all read off the propagated state.
//!
//! ```
//! use biphoton_core::{build_rto, joint_probabilities};
//!
//! let app = build_rto(std::f64::consts::FRAC_PI_3, 0.0).unwrap();
//! let d = joint_probabilities(&app);
//! assert!((d.p_same() - 0.75).abs() < 1e-12);
//! ```

pub mod bell;
pub mod error;
pub mod linalg;
pub mod optics;
pub mod state;
pub mod stats;

pub use bell::{
    chsh_statistic, chsh_statistic_sampled, correlation_at, maximize_chsh, violation_scan,
    ChshMaximum, ChshResult, ChshSettings, ScanRow, ViolationScan,
};
pub use error::{Error, Result};
pub use linalg::{ComplexAmp, Mat2};
pub use optics::{
    beam_splitter_unitary, build_mz, build_rto, calibrate_offset, phase_shifter_unitary,
    station_unitary, Apparatus, Arm, MachZehnder, OpticalElement, StationCircuit,
};
pub use state::{
    make_measurement_state, make_superposition, tensor_product, BipartiteState, DensityOperator,
    PureState, SchmidtDecomposition, Subsystem,
};
pub use stats::{
    correlation_sweep, degree_of_correlation, estimate_correlation, joint_probabilities, marginals,
    mz_sweep, no_signaling_audit, p_diff, p_same, raw_joint_probabilities, sample_trials,
    single_photon_probs, table1, CorrelationEstimate, JointDistribution, MarginalDistribution,
    NoSignalingReport, SweepConfig, SweepRow, Table1Row, TrialCounts,
};
