//! Gauge-covariant Crank–Nicolson evolution of a charged wavepacket on a 2D
//! grid with trapped flux lines, wall potentials and absorbing layers.
//!
//! Units: ℏ = 1; the charge only enters through the reduced fluxes `α`.

mod absorber;
pub mod checks;
mod detector;
mod grid;
mod params;
pub(crate) mod parallel;
mod propagate;
pub mod snapshot;
mod solver;
mod source;
mod stencil;

use thiserror::Error;

use crate::gauge::GaugeError;

pub use absorber::{absorber_reflection, Absorber, DEFAULT_ABSORBER_WIDTH};
pub use detector::{DetectorLine, DetectorReport, MassLedger, Orientation};
pub use grid::{ComplexField, Grid2D, FLUX_OFFSET_X, FLUX_OFFSET_Y, MIN_NODES};
pub use params::{EvolutionParams, SolverSettings, DT_BOUND_CONSTANT};
pub use propagate::{run_to_detector, step, Propagator, StepStats};
pub use solver::{bicgstab, SolveStats};
pub use source::{covariant_elliptic_gaussian, covariant_gaussian, init_elliptic_gaussian, init_gaussian, MIN_WIDTH_CELLS};
pub use stencil::{Hamiltonian, Link};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvolveError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field has {got} samples, grid expects {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("field contains non-finite samples")]
    NonFinite,
    #[error("field has zero norm")]
    ZeroField,
    #[error("packet width {width} is below {min_cells} grid cells")]
    PacketTooNarrow { width: f64, min_cells: f64 },
    #[error("only {inside:.3e} of the packet mass lies on the grid")]
    PacketOffGrid { inside: f64 },
    #[error("flux line {index} lies on the grid link at node ({i}, {j})")]
    FluxOnLink { index: usize, i: usize, j: usize },
    #[error("invalid evolution parameters: {0}")]
    InvalidParams(String),
    #[error("time step {dt} exceeds the bound {bound} = c·m·h²")]
    StepTooLarge { dt: f64, bound: f64 },
    #[error("linear solve stalled at relative residual {residual:e} after {iterations} iterations")]
    SolverDiverged { residual: f64, iterations: usize },
    #[error("detector line is invalid: {0}")]
    InvalidDetector(String),
    #[error(transparent)]
    Gauge(#[from] GaugeError),
}

pub type Result<T> = std::result::Result<T, EvolveError>;
