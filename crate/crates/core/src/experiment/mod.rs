//! The two-chamber noninterferometer: scenario construction, single- and
//! two-path runs, fringe fits, and the Δα sweep under both hypotheses.
//!
//! Chamber fluxes are stated relative to the circulation of each beam. The
//! lab-frame flux of chamber A is `+α_A` and that of chamber B is `−α_B`, so
//! path B picks up `exp(2πiΔα)` relative to path A with `Δα = α_B − α_A`.

mod fringe;
mod quantize;
mod scenario;
mod sweep;

use thiserror::Error;

use crate::evolve::EvolveError;
use crate::gauge::GaugeError;

pub use fringe::{fringe_fit, fringe_fit_estimate, wrap_phase, FringeFit, FringeFitOptions};
pub use quantize::{quantized_delta_alpha, Species, SpeciesChargeRule};
pub use scenario::{
    build_noninterferometer, Chamber, Mode, NodeRect, NoninterferometerParams, Openings, Rect, ScenarioConfig,
    WallBlock, CONTROL_TAG,
};
pub use sweep::{
    is_integer, predict_superseparability, profile_overlap, run_openings, sweep_delta_alpha, sweep_with_cache, Branch, FringeRecord, RunCache, RunKey,
    DEFAULT_INTEGER_TOLERANCE,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("geometry overlap: {0}")]
    GeometryOverlap(String),
    #[error("flux line of chamber {chamber} at {position} is not strictly inside its chamber")]
    FluxOutsideChamber { chamber: char, position: crate::gauge::Vec2 },
    #[error("invalid scenario parameters: {0}")]
    InvalidParams(String),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("fringe visibility {} is indistinguishable from zero (standard error {})", .0.visibility, .0.visibility_error)]
    FitDegenerate(Box<FringeFit>),
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error(transparent)]
    Evolve(#[from] EvolveError),
    #[error(transparent)]
    Gauge(#[from] GaugeError),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;
