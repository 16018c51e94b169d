//! Pseudo-spectral incompressible Navier-Stokes on the unit 3-torus with
//! diagnostics built on sharp Fourier cuts: the genuinely three-dimensional
//! part `w_N` of the velocity, mixed space-time Serrin norms of `w_N`, shell
//! energy spectra, and sampling checks of the embedding inequalities that
//! control the low-mode part.

pub mod decomposition;
pub mod error;
mod fft;
pub mod field;
pub mod grid;
pub mod inequality;
pub mod monitor;
pub mod norms;
pub mod operators;
pub mod random;
pub mod serrin;
pub mod snapshot;
pub mod solver;
pub mod spectrum;
pub mod transform;

pub use rustfft::num_complex::Complex64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use decomposition::{genuine3d_cut, low_cut, v_partition, ModeLabel, ModePartition};
pub use error::{Error, Result};
pub use field::{GradientField, PhysicalField, SpectralField};
pub use grid::GridSpec;
pub use inequality::{
    verify_fractional_embedding, verify_partition, InequalityId, InequalityParams,
    InequalityReport, PartitionCheck,
};
pub use monitor::{
    CriterionReport, SerrinMonitor, SerrinSpec, SpectrumReport, SpectrumWeightTracker,
};
pub use norms::{lq_norm, lq_norm_gradient, lq_norm_many, lq_norm_physical, sobolev_norm};
pub use operators::{gradient, leray_project, nonlinear_term, stokes_power, trilinear_b};
pub use random::random_divfree_field;
pub use serrin::{Scaling, SerrinAccumulator};
pub use snapshot::{load_snapshot, read_snapshot, save_snapshot, write_snapshot, Snapshot};
pub use solver::{
    coupled_step, init_taylor_green, run, run_with, step, ForcingSpec, Integrator, Observer,
    RunOutcome, RunReport, SolverState, TimeConfig,
};
pub use spectrum::{decay_exponent, energy_spectrum, sup_weighted_spectrum, ShellSpectrum};
pub use transform::{forward_transform, inverse_transform};
