use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{EvolveError, Grid2D, Result};

pub const DEFAULT_ABSORBER_WIDTH: usize = 12;

/// Complex absorbing potential `−i·W` with a quartic ramp
/// `W = strength·(1 − d/width)⁴` at node distance `d < width` cells from the
/// nearest grid edge, on all four sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Absorber {
    pub width_cells: usize,
    pub strength: f64,
}

impl Absorber {
    pub fn new(width_cells: usize, strength: f64) -> Self {
        Self { width_cells, strength }
    }

    /// Strength minimising the 1D lattice reflection at normal incidence for
    /// lattice momentum `k` (per length unit).
    pub fn tuned(width_cells: usize, k: f64, mass: f64, h: f64) -> Self {
        let scale = 1.0 / (mass * h * h);
        let reflect = |log_s: f64| absorber_reflection(&Absorber::new(width_cells, scale * log_s.exp()), k, mass, h);
        // coarse scan, then golden-section refinement in log(strength)
        let (lo, hi, n) = ((1e-4f64).ln(), (10.0f64).ln(), 120);
        let mut best = lo;
        let mut best_r = f64::INFINITY;
        for i in 0..=n {
            let s = lo + (hi - lo) * i as f64 / n as f64;
            let r = reflect(s);
            if r < best_r {
                best_r = r;
                best = s;
            }
        }
        let step = (hi - lo) / n as f64;
        let (mut a, mut b) = (best - step, best + step);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        for _ in 0..60 {
            if reflect(c) < reflect(d) {
                b = d;
            } else {
                a = c;
            }
            c = b - g * (b - a);
            d = a + g * (b - a);
        }
        Absorber::new(width_cells, scale * (0.5 * (a + b)).exp())
    }

    pub fn validate(&self, grid: &Grid2D) -> Result<()> {
        if !(self.strength >= 0.0 && self.strength.is_finite()) {
            return Err(EvolveError::InvalidParams(format!(
                "absorber strength must be non-negative (absorbing), got {}",
                self.strength
            )));
        }
        if 2 * self.width_cells >= grid.nx.min(grid.ny) {
            return Err(EvolveError::InvalidParams(format!(
                "absorber width {} leaves no interior on a {}×{} grid",
                self.width_cells, grid.nx, grid.ny
            )));
        }
        Ok(())
    }

    /// `W` at a node `d` cells from the edge.
    pub fn ramp(&self, d: usize) -> f64 {
        if d >= self.width_cells {
            return 0.0;
        }
        let u = 1.0 - d as f64 / self.width_cells as f64;
        self.strength * u.powi(4)
    }

    pub fn profile(&self, grid: &Grid2D) -> Vec<f64> {
        let mut w = vec![0.0; grid.len()];
        for j in 0..grid.ny {
            let dj = j.min(grid.ny - 1 - j);
            for i in 0..grid.nx {
                let di = i.min(grid.nx - 1 - i);
                w[grid.index(i, j)] = self.ramp(di.min(dj));
            }
        }
        w
    }
}

/// Reflection probability of a plane wave with lattice momentum `k` hitting
/// the absorber at normal incidence on a 1D chain ending in a hard wall
/// (transmitted flux is reflected back through the layer and counted here).
pub fn absorber_reflection(absorber: &Absorber, k: f64, mass: f64, h: f64) -> f64 {
    let t = 1.0 / (2.0 * mass * h * h);
    let energy = 2.0 * t * (1.0 - (k * h).cos());
    let width = absorber.width_cells;
    // sites n = 0..width-1 carry W(depth); site `width` is the wall (ψ = 0).
    // Integrate (E − H)ψ = 0 backwards from the wall into the free lead.
    let w_at = |n: isize| -> f64 {
        if n < 0 {
            0.0
        } else {
            absorber.ramp(width - 1 - n as usize)
        }
    };
    let mut next = Complex64::new(0.0, 0.0); // ψ_{n+1}
    let mut cur = Complex64::new(1.0, 0.0); // ψ_n, starting at n = width-1
    let mut n = width as isize - 1;
    // march down to n = -2 so that ψ_{-1}, ψ_{-2} are in the free lead
    while n > -2 {
        let diag = Complex64::new(2.0 * t - energy, -w_at(n));
        let prev = (diag * cur - t * next) / t;
        next = cur;
        cur = prev;
        n -= 1;
    }
    // cur = ψ_{-2}, next = ψ_{-1}; ψ_m = A e^{ikhm} + B e^{-ikhm}
    let kh = k * h;
    let e = |m: f64| Complex64::from_polar(1.0, kh * m);
    let (m1, m2) = (-1.0, -2.0);
    // solve [e(m1) e(-m1); e(m2) e(-m2)] [A; B] = [ψ_{-1}; ψ_{-2}]
    let det = e(m1) * e(-m2) - e(-m1) * e(m2);
    let a = (next * e(-m2) - e(-m1) * cur) / det;
    let b = (e(m1) * cur - e(m2) * next) / det;
    (b / a).norm_sqr()
}
