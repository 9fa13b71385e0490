use serde::{Deserialize, Serialize};

use super::{Absorber, EvolveError, Grid2D, Result};
use crate::gauge::FluxConfig;

/// `dt ≤ c·m·min(dx, dy)²` with this `c`.
pub const DT_BOUND_CONSTANT: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Relative residual `‖b − Ax‖ / ‖b‖` at which the solve stops.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_iterations: 500 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionParams {
    pub mass: f64,
    pub dt: f64,
    pub cfg: FluxConfig,
    /// Real potential per grid node (walls); `None` means zero everywhere.
    pub potential: Option<Vec<f64>>,
    pub absorber: Option<Absorber>,
    pub solver: SolverSettings,
}

impl EvolutionParams {
    /// Free particle, no walls, no absorber, time step at the accuracy bound.
    pub fn free(mass: f64, grid: &Grid2D) -> Self {
        Self {
            mass,
            dt: Self::max_dt(mass, grid),
            cfg: FluxConfig::empty(),
            potential: None,
            absorber: None,
            solver: SolverSettings::default(),
        }
    }

    pub fn max_dt(mass: f64, grid: &Grid2D) -> f64 {
        let h = grid.dx.min(grid.dy);
        DT_BOUND_CONSTANT * mass * h * h
    }

    pub fn with_flux(mut self, cfg: FluxConfig) -> Self {
        self.cfg = cfg;
        self
    }

    pub fn with_potential(mut self, potential: Vec<f64>) -> Self {
        self.potential = Some(potential);
        self
    }

    pub fn with_absorber(mut self, absorber: Absorber) -> Self {
        self.absorber = Some(absorber);
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_solver(mut self, solver: SolverSettings) -> Self {
        self.solver = solver;
        self
    }

    pub fn validate(&self, grid: &Grid2D) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(EvolveError::InvalidParams(format!("mass must be positive, got {}", self.mass)));
        }
        if !(self.dt > 0.0) {
            return Err(EvolveError::InvalidParams(format!("dt must be positive, got {}", self.dt)));
        }
        let bound = Self::max_dt(self.mass, grid);
        // tolerate rounding when dt was computed from the bound itself
        if self.dt > bound * (1.0 + 1e-12) {
            return Err(EvolveError::StepTooLarge { dt: self.dt, bound });
        }
        if let Some(v) = &self.potential {
            if v.len() != grid.len() {
                return Err(EvolveError::ShapeMismatch { expected: grid.len(), got: v.len() });
            }
            if v.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                return Err(EvolveError::InvalidParams("potential must be finite and non-negative".into()));
            }
        }
        if let Some(a) = &self.absorber {
            a.validate(grid)?;
        }
        if !(self.solver.tolerance > 0.0) || self.solver.max_iterations == 0 {
            return Err(EvolveError::InvalidParams("solver settings must be positive".into()));
        }
        Ok(())
    }
}
