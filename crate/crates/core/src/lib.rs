//! Dual combination-combination multi-switching synchronization of eight
//! chaotic systems.
//!
//! Four drive systems `x1, x2, y1, y2` and four response systems
//! `z1, z2, w1, w2` are coupled through two error blocks
//! `e_b = A_b x_b + B_b y_b - C_b z_b - D_b w_b`, where each error slot may
//! read different state components (the switching assignment). The
//! controllers in [`controller`] make every error component obey
//! `de/dt = -kappa e`, which [`simulate`] and [`analysis`] check numerically.

pub mod analysis;
pub mod config;
pub mod controller;
pub mod dynamics;
pub mod error;
pub mod roles;
pub mod scheme;
pub mod simulate;

pub use analysis::{
    convergence_report, decay_residual, error_norm_series, export_report_csv, export_trace_csv,
    ConvergenceReport,
};
pub use config::{Overrides, RunSpec, Variant};
pub use controller::{
    reduced_control, split_control, synthesize_aggregate, AggregateControl, ControlVectors,
    Reduction, SplitPolicy,
};
pub use dynamics::{eval_genesio_tesi, eval_lu, Registry, StateVector, SystemDef};
pub use error::{Error, Result};
pub use roles::{Role, Roles};
pub use scheme::{
    classify_pattern, combined_signal, compute_error, enumerate_patterns, validate_assignment,
    ErrorVector, PatternCatalog, PatternClass, ScalingConfig, SwitchAssignment, SwitchTuple,
    Wiring,
};
pub use simulate::{
    rk4_step, run_closed_loop, run_uncontrolled, ClosedLoopTrace, ControlMode, SimConfig,
};
