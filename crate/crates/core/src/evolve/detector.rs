use serde::{Deserialize, Serialize};

use super::{EvolveError, Grid2D, Result};
use crate::gauge::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// A column of nodes at fixed `i`; counts flux across the links `(i,j) → (i+1,j)`.
    Vertical,
    /// A row of nodes at fixed `j`; counts flux across the links `(i,j) → (i,j+1)`.
    Horizontal,
}

/// A detector segment lying on grid nodes. Arclength runs from `start` to `end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorLine {
    pub orientation: Orientation,
    /// Column index (vertical) or row index (horizontal).
    pub fixed: usize,
    pub start: usize,
    pub end: usize,
}

impl DetectorLine {
    pub fn vertical(column: usize, rows: std::ops::RangeInclusive<usize>) -> Self {
        Self { orientation: Orientation::Vertical, fixed: column, start: *rows.start(), end: *rows.end() }
    }

    pub fn horizontal(row: usize, columns: std::ops::RangeInclusive<usize>) -> Self {
        Self { orientation: Orientation::Horizontal, fixed: row, start: *columns.start(), end: *columns.end() }
    }

    /// Snaps an axis-aligned segment to the grid; both endpoints must sit on nodes.
    pub fn from_segment(grid: &Grid2D, a: Vec2, b: Vec2) -> Result<Self> {
        let snap = |p: Vec2| -> Result<(usize, usize)> {
            let (ci, cj) = grid.to_cell(p);
            let (ri, rj) = (ci.round(), cj.round());
            if (ci - ri).abs() > 1e-9 || (cj - rj).abs() > 1e-9 || ri < 0.0 || rj < 0.0 {
                return Err(EvolveError::InvalidDetector(format!("endpoint {p} is not a grid node")));
            }
            Ok((ri as usize, rj as usize))
        };
        let (ia, ja) = snap(a)?;
        let (ib, jb) = snap(b)?;
        let line = if ia == ib {
            Self::vertical(ia, ja.min(jb)..=ja.max(jb))
        } else if ja == jb {
            Self::horizontal(ja, ia.min(ib)..=ia.max(ib))
        } else {
            return Err(EvolveError::InvalidDetector("segment must be axis-aligned".into()));
        };
        line.validate(grid)?;
        Ok(line)
    }

    pub fn validate(&self, grid: &Grid2D) -> Result<()> {
        let (fixed_max, run_max) = match self.orientation {
            Orientation::Vertical => (grid.nx - 1, grid.ny),
            Orientation::Horizontal => (grid.ny - 1, grid.nx),
        };
        if self.fixed >= fixed_max || self.start > self.end || self.end >= run_max {
            return Err(EvolveError::InvalidDetector(format!("{self:?} does not fit the grid")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self, grid: &Grid2D) -> f64 {
        match self.orientation {
            Orientation::Vertical => grid.dy,
            Orientation::Horizontal => grid.dx,
        }
    }

    pub fn arclength(&self, grid: &Grid2D) -> Vec<f64> {
        let h = self.spacing(grid);
        (0..self.len()).map(|k| k as f64 * h).collect()
    }

    /// Node indices `(p, q)` of each crossing link, in arclength order.
    pub fn links(&self, grid: &Grid2D) -> Vec<(usize, usize)> {
        (self.start..=self.end)
            .map(|k| match self.orientation {
                Orientation::Vertical => (grid.index(self.fixed, k), grid.index(self.fixed + 1, k)),
                Orientation::Horizontal => (grid.index(k, self.fixed), grid.index(k, self.fixed + 1)),
            })
            .collect()
    }

    /// Whether node `(i, j)` lies on the upstream side (at or before the line).
    pub fn is_upstream(&self, i: usize, j: usize) -> bool {
        match self.orientation {
            Orientation::Vertical => i <= self.fixed,
            Orientation::Horizontal => j <= self.fixed,
        }
    }
}

/// Probability bookkeeping for the region upstream of the detector line.
/// When the detector spans the whole grid cross-section,
/// `detected + absorbed_upstream + residual_upstream = initial_upstream`
/// up to the linear-solver residual.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MassLedger {
    pub initial_upstream: f64,
    pub detected: f64,
    pub absorbed_upstream: f64,
    pub residual_upstream: f64,
}

impl MassLedger {
    pub fn imbalance(&self) -> f64 {
        self.initial_upstream - (self.detected + self.absorbed_upstream + self.residual_upstream)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorReport {
    pub arclength: Vec<f64>,
    /// Time-integrated probability crossing each detector link.
    pub intensity: Vec<f64>,
    pub initial_norm: f64,
    /// Norm left on the grid at `t_max`.
    pub residual_norm: f64,
    pub absorbed: f64,
    pub ledger: MassLedger,
    pub steps: usize,
    pub solver_iterations: usize,
    pub max_solver_residual: f64,
}
