//! Simulation and control toolkit for pre-calibrated phase-coherence
//! compensation of a single superconducting qubit.
//!
//! The numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the bottom of this file pin the double-precision types the campaign
//! harness uses.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bloch;
pub mod control;
pub mod emulator;
pub mod error;
pub mod mitigation;
pub mod scalar;
pub mod schedule;
pub mod stats;

pub use bloch::{
    apply_rotation, free_evolution, z_expectation, Axis, BlochVector, RelaxationTimes,
};
pub use control::{
    calibrate_offset, ideal_z, objective, phase_error_proxy, run_closed_loop, sign_update,
    CalibrationResult, ClosedLoopRun, ControllerState, Grid, LoopSettings, Probe, Termination,
};
pub use emulator::{
    backend_execute, derive_seed, estimate_z, sample_counts, simulate_state, trial_seed, Backend,
    Confusion, LocalEmulator, NoiseProfile, Observation, ShotCounts,
};
pub use error::{Error, Result};
pub use mitigation::{
    readout_mitigate, readout_mitigate_probabilities, zne_extrapolate, MitigatedProbabilities,
    ZneFit, ZnePoint,
};
pub use scalar::Scalar;
pub use schedule::{
    build_circuit, total_idle, xy8_schedule, CircuitTemplate, EventKind, MitigationCondition,
    PulseEvent, Role,
};
pub use stats::{
    absolute_error, bootstrap_ci, improvement, mse, paired_t_test, sign_test, sign_test_exact,
    summarize, IntervalEstimate, MetricSummary, PairedTTest,
};

pub type Bloch = BlochVector<f64>;
pub type Relaxation = RelaxationTimes<f64>;
pub type Profile = NoiseProfile<f64>;
pub type Template = CircuitTemplate<f64>;
pub type Controller = ControllerState<f64>;
pub type Calibration = CalibrationResult<f64>;
pub type Summary = MetricSummary<f64>;
pub type Interval = IntervalEstimate<f64>;
