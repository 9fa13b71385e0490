use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{EvolveError, Result};
use crate::gauge::Vec2;

pub const MIN_NODES: usize = 16;

/// Irrational sub-cell offsets (in cell units) that keep a flux center off
/// every grid line and every integer translation segment.
pub const FLUX_OFFSET_X: f64 = 0.5 + 0.018_471_071_557_337_65; // 0.5 + 1/√2931
pub const FLUX_OFFSET_Y: f64 = 0.5 + 0.015_619_281_095_398_016; // 0.5 + 1/√4099

/// Uniform node lattice; node `(i, j)` sits at `origin + (i·dx, j·dy)` and is
/// stored at index `j·nx + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub origin: Vec2,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64, origin: Vec2) -> Result<Self> {
        if nx < MIN_NODES || ny < MIN_NODES {
            return Err(EvolveError::InvalidGrid(format!(
                "grid must be at least {MIN_NODES}×{MIN_NODES}, got {nx}×{ny}"
            )));
        }
        if !(dx > 0.0 && dy > 0.0 && dx.is_finite() && dy.is_finite()) {
            return Err(EvolveError::InvalidGrid(format!("spacings must be positive, got {dx}, {dy}")));
        }
        if !origin.is_finite() {
            return Err(EvolveError::InvalidGrid("non-finite origin".into()));
        }
        Ok(Self { nx, ny, dx, dy, origin })
    }

    /// Grid whose cell `(nx/2, ny/2)` contains `center` at the standard
    /// irrational offset.
    pub fn centered_on_flux(nx: usize, ny: usize, dx: f64, dy: f64, center: Vec2) -> Result<Self> {
        let origin = Vec2::new(
            center.x - ((nx / 2) as f64 + FLUX_OFFSET_X) * dx,
            center.y - ((ny / 2) as f64 + FLUX_OFFSET_Y) * dy,
        );
        Self::new(nx, ny, dx, dy, origin)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.origin.x + i as f64 * self.dx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.origin.y + j as f64 * self.dy
    }

    #[inline]
    pub fn position(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(self.x(i), self.y(j))
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.nx - 1)
    }

    pub fn y_max(&self) -> f64 {
        self.y(self.ny - 1)
    }

    /// Continuous index coordinates of a point (may be fractional or out of range).
    pub fn to_cell(&self, p: Vec2) -> (f64, f64) {
        ((p.x - self.origin.x) / self.dx, (p.y - self.origin.y) / self.dy)
    }

    pub fn same_shape(&self, other: &Grid2D) -> bool {
        self.nx == other.nx && self.ny == other.ny
    }
}

/// A complex wavefunction sampled on a [`Grid2D`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub grid: Grid2D,
    pub values: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(grid: Grid2D) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_values(grid: Grid2D, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(EvolveError::ShapeMismatch { expected: grid.len(), got: values.len() });
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(EvolveError::NonFinite);
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid2D, mut f: impl FnMut(Vec2) -> Complex64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                values.push(f(grid.position(i, j)));
            }
        }
        Self { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[self.grid.index(i, j)]
    }

    /// `Σ|ψ|² dx dy`.
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `Σ conj(self)·other dx dy`.
    pub fn inner(&self, other: &ComplexField) -> Complex64 {
        debug_assert!(self.grid.same_shape(&other.grid));
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.grid.cell_area()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(EvolveError::ZeroField);
        }
        let s = 1.0 / n;
        self.values.iter_mut().for_each(|v| *v *= s);
        Ok(())
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// Position expectation and variance per axis, `(⟨x⟩, ⟨y⟩, var x, var y)`.
    pub fn moments(&self) -> (f64, f64, f64, f64) {
        let g = &self.grid;
        let (mut m0, mut mx, mut my, mut mxx, mut myy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for j in 0..g.ny {
            let y = g.y(j);
            for i in 0..g.nx {
                let x = g.x(i);
                let w = self.values[g.index(i, j)].norm_sqr();
                m0 += w;
                mx += w * x;
                my += w * y;
                mxx += w * x * x;
                myy += w * y * y;
            }
        }
        let (ex, ey) = (mx / m0, my / m0);
        (ex, ey, mxx / m0 - ex * ex, myy / m0 - ey * ey)
    }
}
