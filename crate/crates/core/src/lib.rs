//! Numerical laboratory for a two-chamber flux-line noninterferometer: exact
//! holonomies of trapped flux lines, discrete magnetic translations and their
//! group commutators, explicit solutions of the covariant momentum eigen
//! equation, and a gauge-covariant wavepacket simulator that sweeps the flux
//! difference between two chambers.

pub mod eigen;
pub mod evolve;
pub mod experiment;
pub mod gauge;
pub mod weyl;

pub use gauge::{FluxConfig, FluxLine, Polyline, Vec2};
