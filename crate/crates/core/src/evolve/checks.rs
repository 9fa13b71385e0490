//! Reference problems for the propagator: free spreading, plaquette
//! holonomy, norm conservation and convergence ladders.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{init_gaussian, ComplexField, EvolutionParams, Grid2D, Hamiltonian, Propagator, Result, SolverSettings};
use crate::gauge::{FluxConfig, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadingCheck {
    pub time: f64,
    pub width: (f64, f64),
    pub expected: f64,
    /// Largest of the two relative width errors.
    pub relative_error: f64,
}

/// A packet at rest of position width `sigma0` on an `nx × ny` unit grid,
/// evolved `steps` steps at the default time step. The continuum width is
/// `σ0·√(1 + (t/(2mσ0²))²)`.
pub fn free_spreading(nx: usize, ny: usize, sigma0: f64, steps: usize) -> Result<SpreadingCheck> {
    let grid = Grid2D::new(nx, ny, 1.0, 1.0, Vec2::ZERO)?;
    let mass = 1.0;
    let params = EvolutionParams::free(mass, &grid)
        .with_solver(SolverSettings { tolerance: 1e-12, ..SolverSettings::default() });
    let center = Vec2::new(0.5 * (nx - 1) as f64, 0.5 * (ny - 1) as f64);
    let mut field = init_gaussian(&grid, center, sigma0, Vec2::ZERO)?;
    let mut prop = Propagator::new(&params, &grid)?;
    for _ in 0..steps {
        prop.step(&mut field)?;
    }
    let time = steps as f64 * params.dt;
    let (_, _, vx, vy) = field.moments();
    let expected = sigma0 * (1.0 + (time / (2.0 * mass * sigma0 * sigma0)).powi(2)).sqrt();
    let width = (vx.sqrt(), vy.sqrt());
    let relative_error = ((width.0 - expected).abs()).max((width.1 - expected).abs()) / expected;
    Ok(SpreadingCheck { time, width, expected, relative_error })
}

/// Largest deviation of any plaquette product from `Π exp(−2πiα_k)` over the
/// flux lines inside that cell.
pub fn plaquette_holonomy_error(grid: &Grid2D, cfg: &FluxConfig) -> Result<f64> {
    let params = EvolutionParams::free(1.0, grid).with_flux(cfg.clone());
    let h = Hamiltonian::build(&params, grid)?;
    let cells: Vec<((usize, usize), f64)> = cfg
        .lines()
        .iter()
        .map(|l| {
            let (ci, cj) = grid.to_cell(l.center);
            ((ci.floor() as usize, cj.floor() as usize), l.alpha)
        })
        .collect();
    let mut worst: f64 = 0.0;
    for j in 0..grid.ny - 1 {
        for i in 0..grid.nx - 1 {
            let alpha: f64 = cells.iter().filter(|(c, _)| *c == (i, j)).map(|(_, a)| a).sum();
            let expected = Complex64::from_polar(1.0, -TAU * alpha);
            worst = worst.max((h.plaquette_phase(i, j) - expected).norm());
        }
    }
    Ok(worst)
}

/// `|‖ψ‖² − 1|` after `steps` steps with the given evolution (which should
/// carry no absorber), starting from a normalized packet.
pub fn norm_drift(initial: &ComplexField, params: &EvolutionParams, steps: usize) -> Result<f64> {
    let mut field = initial.clone();
    let start = field.norm_sq();
    let mut prop = Propagator::new(params, &field.grid)?;
    for _ in 0..steps {
        prop.step(&mut field)?;
    }
    Ok((field.norm_sq() - start).abs() / start)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceLadder {
    /// `‖ψ_k − ψ_{k+1}‖` between consecutive refinements, on shared nodes.
    pub differences: Vec<f64>,
    /// Ratios of consecutive differences; 4 for second order.
    pub ratios: Vec<f64>,
}

impl ConvergenceLadder {
    fn from_differences(differences: Vec<f64>) -> Self {
        let ratios = differences.windows(2).map(|w| w[0] / w[1]).collect();
        Self { differences, ratios }
    }
}

const LADDER_HALF_WIDTH: f64 = 16.0;
const LADDER_TIME: f64 = 4.0;
const LADDER_SIGMA: f64 = 2.0;
const LADDER_MOMENTUM: Vec2 = Vec2::new(1.0, 0.5);

fn ladder_grid(h: f64) -> Result<Grid2D> {
    let n = (2.0 * LADDER_HALF_WIDTH / h).round() as usize + 1;
    Grid2D::new(n, n, h, h, Vec2::new(-LADDER_HALF_WIDTH, -LADDER_HALF_WIDTH))
}

fn ladder_run(h: f64, steps: usize, cfg: &FluxConfig) -> Result<ComplexField> {
    let grid = ladder_grid(h)?;
    let dt = LADDER_TIME / steps as f64;
    let params = EvolutionParams::free(1.0, &grid)
        .with_flux(cfg.clone())
        .with_dt(dt)
        .with_solver(SolverSettings { tolerance: 1e-13, max_iterations: 1000 });
    let mut field = init_gaussian(&grid, Vec2::new(-4.0, -2.0), LADDER_SIGMA, LADDER_MOMENTUM)?;
    let mut prop = Propagator::new(&params, &grid)?;
    for _ in 0..steps {
        prop.step(&mut field)?;
    }
    Ok(field)
}

/// `√(Σ|a − b|² h²)` over the nodes of `coarse`, which sit on every
/// `stride`-th node of `fine`.
fn shared_node_distance(coarse: &ComplexField, fine: &ComplexField, stride: usize) -> f64 {
    let g = &coarse.grid;
    let mut acc = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            acc += (coarse.at(i, j) - fine.at(stride * i, stride * j)).norm_sqr();
        }
    }
    (acc * g.cell_area()).sqrt()
}

/// A moving packet at fixed grid spacing `h`, integrated to a fixed time with
/// `base_steps`, twice and four times as many steps.
pub fn time_step_ladder(h: f64, base_steps: usize, cfg: &FluxConfig) -> Result<ConvergenceLadder> {
    let runs = [1, 2, 4].map(|m| ladder_run(h, base_steps * m, cfg));
    let [a, b, c] = runs;
    let (a, b, c) = (a?, b?, c?);
    Ok(ConvergenceLadder::from_differences(vec![
        shared_node_distance(&a, &b, 1),
        shared_node_distance(&b, &c, 1),
    ]))
}

/// The same packet on grids of spacing `h`, `h/2` and `h/4`, all with
/// the time step of the finest grid so that only the spatial error varies.
pub fn grid_spacing_ladder(h: f64, cfg: &FluxConfig) -> Result<ConvergenceLadder> {
    let finest = h / 4.0;
    let steps = (LADDER_TIME / EvolutionParams::max_dt(1.0, &ladder_grid(finest)?)).ceil() as usize;
    let fields: Vec<ComplexField> =
        [1.0, 2.0, 4.0].iter().map(|d| ladder_run(h / d, steps, cfg)).collect::<Result<_>>()?;
    let differences = fields.windows(2).map(|w| shared_node_distance(&w[0], &w[1], 2)).collect();
    Ok(ConvergenceLadder::from_differences(differences))
}
