//! Dynamics of a one-dimensional dimer (SSH) lattice with balanced gain and
//! loss: dense and momentum-space Hamiltonians, PT-breaking thresholds, the
//! topological winding number, non-unitary time evolution by three
//! independent engines, absorbed-probability statistics, and the closed-form
//! broken-phase asymptotics.
//!
//! All numerics are generic over the real scalar type through
//! [`scalar::Real`]; concrete `f64` aliases live at the crate root.

pub mod asymptotics;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod propagation;
pub mod scalar;
pub mod transitions;

pub use error::Error;
pub use lattice::{
    bloch_block, build_hamiltonian, eigenmomenta, pt_threshold, spectrum, winding_number,
    BlochBlock, Boundary, LatticeParams, ModelKind, PhaseLabel, SiteIndex, Sublattice,
    ThresholdReport,
};
pub use propagation::{
    evolve, evolve_bloch, evolve_dense, evolve_oracle, initial_state, propagator,
    sublattice_intensities, InitialSpec, Trajectory,
};
pub use scalar::{EigScalar, Real};
pub use transitions::{
    absorbed_distribution, disorder_robustness, gamma_independence_check, phase_classify_grid,
    transition_curve, Frame, QuadratureSettings, SweepCell, SweepGrid, TransitionReport,
};

/// Complex amplitude in double precision.
pub type C64 = num_complex::Complex<f64>;
/// Complex amplitude in single precision.
pub type C32 = num_complex::Complex<f32>;

pub type LatticeParams64 = lattice::LatticeParams<f64>;
pub type LatticeParams32 = lattice::LatticeParams<f32>;
pub type InitialSpec64 = propagation::InitialSpec<f64>;
pub type Trajectory64 = propagation::Trajectory<f64>;
pub type QuadratureSettings64 = transitions::QuadratureSettings<f64>;
pub type TransitionReport64 = transitions::TransitionReport<f64>;
