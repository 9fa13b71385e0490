//! Discrete magnetic translations and the group commutator of the two
//! covariant-momentum exponentials around a single flux line at the origin.
//!
//! `T(axis, d)` acts as `(Tψ)(p) = exp(i∫_p^{p+d} a·dl)·ψ(p + d)`, which is
//! `exp(i d p̄)` for the covariant momentum `p̄ = −i∂ + a` along `axis`: the
//! content of the field moves by `−d`. Phases come from exact subtended
//! angles, so each operator is exactly unitary on samples that stay on the
//! grid.
//!
//! With `V_x(a) = T(X, a)` and `V_y(b) = T(Y, −b)`, the product
//! `V_x(a) V_y(b) V_x(a)⁻¹ V_y(b)⁻¹` multiplies the sample at `(x, y)` by the
//! holonomy of the rectangle `(x,y) → (x+a,y) → (x+a,y−b) → (x,y−b)`, which
//! is the loop encoded by `[ε(x) − ε(x+a)][ε(y) − ε(y−b)]`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evolve::{ComplexField, EvolveError, Grid2D};
use crate::gauge::{segment_phase_unchecked, winding_number, FluxConfig, GaugeError, Polyline, Vec2};

/// Arguments of `ε` closer than this to zero are rejected.
pub const AXIS_TOLERANCE: f64 = 1e-9;
/// Maximum probe mass allowed outside the constant-phase quadrant cell.
pub const MAX_PROBE_LEAKAGE: f64 = 1e-6;
/// Probe centers (and their rectangle images) must sit this many widths inside the grid.
pub const PROBE_GRID_MARGIN: f64 = 8.0;
/// Overlap modulus below which the empirical phase is flagged as unreliable.
pub const MIN_OVERLAP_MODULUS: f64 = 0.999;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeylError {
    #[error("displacement {displacement} is not an integer multiple of the spacing {spacing}")]
    NotGridMultiple { displacement: f64, spacing: f64 },
    #[error("translation segment from ({x}, {y}) enters the exclusion disk of flux line {index}")]
    SegmentThroughFlux { index: usize, x: f64, y: f64 },
    #[error("{which} = {value} is on an axis through the flux")]
    OnAxis { which: &'static str, value: f64 },
    #[error("probe leaks {leakage:e} of its mass across an axis (width {width})")]
    ProbeStraddlesAxis { leakage: f64, width: f64 },
    #[error("probe of width {width} at {center} does not fit on the grid")]
    ProbeOffGrid { center: Vec2, width: f64 },
    #[error("alpha must be finite")]
    NonFiniteAlpha,
    #[error(transparent)]
    Evolve(#[from] EvolveError),
    #[error(transparent)]
    Gauge(#[from] GaugeError),
}

pub type Result<T> = std::result::Result<T, WeylError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MagneticTranslation {
    pub axis: Axis,
    /// The parameter `d` of `exp(i d p̄)`; must be a whole number of grid cells.
    pub displacement: f64,
    pub cfg: FluxConfig,
}

impl MagneticTranslation {
    pub fn new(axis: Axis, displacement: f64, cfg: FluxConfig) -> Self {
        Self { axis, displacement, cfg }
    }

    pub fn inverse(&self) -> Self {
        Self { axis: self.axis, displacement: -self.displacement, cfg: self.cfg.clone() }
    }

    fn cells(&self, grid: &Grid2D) -> Result<isize> {
        let spacing = match self.axis {
            Axis::X => grid.dx,
            Axis::Y => grid.dy,
        };
        let s = self.displacement / spacing;
        let n = s.round();
        if !s.is_finite() || (s - n).abs() > 1e-9 * n.abs().max(1.0) {
            return Err(WeylError::NotGridMultiple { displacement: self.displacement, spacing });
        }
        Ok(n as isize)
    }

    pub fn apply(&self, field: &ComplexField) -> Result<ComplexField> {
        apply_magnetic_translation(field, self)
    }
}

/// `(Tψ)(p) = exp(i∫_p^{p+d} a·dl)·ψ(p + d)`; samples whose source falls off
/// the grid become zero.
pub fn apply_magnetic_translation(field: &ComplexField, t: &MagneticTranslation) -> Result<ComplexField> {
    let grid = field.grid;
    let n = t.cells(&grid)?;
    let (di, dj) = match t.axis {
        Axis::X => (n, 0),
        Axis::Y => (0, n),
    };
    let r = t.cfg.singular_radius();
    let mut out = ComplexField::zeros(grid);
    let nx = grid.nx;
    out.values
        .par_chunks_mut(nx)
        .enumerate()
        .try_for_each(|(j, row)| -> Result<()> {
            let sj = j as isize + dj;
            for (i, slot) in row.iter_mut().enumerate() {
                let si = i as isize + di;
                let p = grid.position(i, j);
                let q = Vec2::new(grid.origin.x + si as f64 * grid.dx, grid.origin.y + sj as f64 * grid.dy);
                for (index, line) in t.cfg.lines().iter().enumerate() {
                    if crate::gauge::point_segment_distance(line.center, p, q) <= r {
                        return Err(WeylError::SegmentThroughFlux { index, x: p.x, y: p.y });
                    }
                }
                if si < 0 || sj < 0 || si as usize >= nx || sj as usize >= grid.ny {
                    continue;
                }
                let src = field.values[grid.index(si as usize, sj as usize)];
                if src == Complex64::new(0.0, 0.0) {
                    continue;
                }
                *slot = Complex64::from_polar(1.0, segment_phase_unchecked(&t.cfg, p, q)) * src;
            }
            Ok(())
        })?;
    Ok(out)
}

/// `ε(t) = sign(t)`.
pub fn epsilon(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// One probe position and pair of displacements, plus the reduced flux of the
/// line at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommutatorCase {
    pub x: f64,
    pub y: f64,
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
}

impl CommutatorCase {
    pub fn new(x: f64, y: f64, a: f64, b: f64, alpha: f64) -> Result<Self> {
        let case = Self { x, y, a, b, alpha };
        case.validate()?;
        Ok(case)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() {
            return Err(WeylError::NonFiniteAlpha);
        }
        for (which, value) in self.epsilon_arguments() {
            if !(value.abs() > AXIS_TOLERANCE) {
                return Err(WeylError::OnAxis { which, value });
            }
        }
        Ok(())
    }

    pub fn with_alpha(self, alpha: f64) -> Self {
        Self { alpha, ..self }
    }

    fn epsilon_arguments(&self) -> [(&'static str, f64); 4] {
        [("x", self.x), ("x+a", self.x + self.a), ("y", self.y), ("y-b", self.y - self.b)]
    }

    /// `(x,y) → (x+a,y) → (x+a,y−b) → (x,y−b)`, closed.
    pub fn rectangle(&self) -> Polyline {
        let (x, y, a, b) = (self.x, self.y, self.a, self.b);
        Polyline::closed(vec![
            Vec2::new(x, y),
            Vec2::new(x + a, y),
            Vec2::new(x + a, y - b),
            Vec2::new(x, y - b),
        ])
        .expect("four finite vertices")
    }

    /// Winding number of [`Self::rectangle`] about the flux line at the origin.
    pub fn winding(&self) -> Result<i64> {
        Ok(winding_number(&self.rectangle(), Vec2::ZERO)?)
    }

    pub fn min_axis_distance(&self) -> f64 {
        self.epsilon_arguments().iter().map(|(_, v)| v.abs()).fold(f64::INFINITY, f64::min)
    }

    /// One eighth of the distance from the nearest `ε` argument to zero.
    pub fn default_probe_width(&self) -> f64 {
        self.min_axis_distance() / 8.0
    }

    /// Upper bound on the probe mass that crosses any of the four lines
    /// `x = 0`, `x + a = 0`, `y = 0`, `y − b = 0`.
    pub fn probe_leakage(&self, width: f64) -> f64 {
        self.epsilon_arguments()
            .iter()
            .map(|(_, d)| 0.5 * (-d * d / (2.0 * width * width)).exp())
            .sum()
    }
}

/// `[ε(x) − ε(x+a)]·[ε(y) − ε(y−b)] ∈ {0, ±4}`.
pub fn epsilon_product(case: &CommutatorCase) -> Result<i32> {
    case.validate()?;
    let fx = epsilon(case.x) - epsilon(case.x + case.a);
    let fy = epsilon(case.y) - epsilon(case.y - case.b);
    Ok((fx * fy) as i32)
}

/// `exp(i(πα/2)·[ε(x) − ε(x+a)][ε(y) − ε(y−b)])`.
pub fn commutator_phase_closed_form(case: &CommutatorCase) -> Result<Complex64> {
    let product = epsilon_product(case)?;
    // product/4 ∈ {0, ±1} enters exactly like a winding number
    Ok(winding_phase_factor(case.alpha, i64::from(product / 4)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalPhase {
    /// `⟨ψ, Wψ⟩ / |⟨ψ, Wψ⟩|`.
    pub phase: Complex64,
    /// `|⟨ψ, Wψ⟩|` for the normalized probe; should exceed [`MIN_OVERLAP_MODULUS`].
    pub raw_modulus: f64,
    pub probe_width: f64,
}

impl EmpiricalPhase {
    pub fn is_reliable(&self) -> bool {
        self.raw_modulus > MIN_OVERLAP_MODULUS
    }
}

fn probe(grid: &Grid2D, center: Vec2, width: f64) -> Result<ComplexField> {
    let inv = 1.0 / (4.0 * width * width);
    let mut f = ComplexField::from_fn(*grid, |p| Complex64::new((-(p - center).norm_sq() * inv).exp(), 0.0));
    f.normalize()?;
    Ok(f)
}

/// `⟨ψ, V_x(a)V_y(b)V_x(a)⁻¹V_y(b)⁻¹ ψ⟩` for a Gaussian probe centered at
/// `(x, y)`, with a single flux line of strength `α` at the origin.
pub fn commutator_phase_empirical(
    case: &CommutatorCase,
    probe_width: Option<f64>,
    grid: &Grid2D,
) -> Result<EmpiricalPhase> {
    case.validate()?;
    let width = probe_width.unwrap_or_else(|| case.default_probe_width());
    let leakage = case.probe_leakage(width);
    if !(leakage <= MAX_PROBE_LEAKAGE) {
        return Err(WeylError::ProbeStraddlesAxis { leakage, width });
    }
    let margin = PROBE_GRID_MARGIN * width;
    for corner in case.rectangle().vertices() {
        let inside = corner.x - margin >= grid.origin.x
            && corner.x + margin <= grid.x_max()
            && corner.y - margin >= grid.origin.y
            && corner.y + margin <= grid.y_max();
        if !inside {
            return Err(WeylError::ProbeOffGrid { center: *corner, width });
        }
    }
    let cfg = FluxConfig::single(Vec2::ZERO, case.alpha);
    let vx = MagneticTranslation::new(Axis::X, case.a, cfg.clone());
    let vy = MagneticTranslation::new(Axis::Y, -case.b, cfg);
    let psi = probe(grid, Vec2::new(case.x, case.y), width)?;
    // rightmost factor acts first
    let w = vy.inverse().apply(&psi)?;
    let w = vx.inverse().apply(&w)?;
    let w = vy.apply(&w)?;
    let w = vx.apply(&w)?;
    let overlap = psi.inner(&w);
    let raw_modulus = overlap.norm();
    Ok(EmpiricalPhase { phase: overlap / raw_modulus, raw_modulus, probe_width: width })
}

/// Angle of `a·conj(b)` in `[0, π]`.
pub fn phase_discrepancy(a: Complex64, b: Complex64) -> f64 {
    (a * b.conj()).arg().abs()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommutatorComparison {
    pub empirical: EmpiricalPhase,
    pub closed_form: Complex64,
    pub epsilon_product: i32,
    pub winding: i64,
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub case: CommutatorCase,
    pub outcome: Result<CommutatorComparison>,
}

pub fn compare_case(case: &CommutatorCase, grid: &Grid2D, probe_width: Option<f64>) -> Result<CommutatorComparison> {
    let closed_form = commutator_phase_closed_form(case)?;
    let epsilon_product = epsilon_product(case)?;
    let winding = case.winding()?;
    let empirical = commutator_phase_empirical(case, probe_width, grid)?;
    Ok(CommutatorComparison {
        discrepancy: phase_discrepancy(empirical.phase, closed_form),
        empirical,
        closed_form,
        epsilon_product,
        winding,
    })
}

/// Empirical versus closed-form phases over `alphas × geometries`. The alpha
/// stored in each geometry is ignored. Failing cases become error entries;
/// the sweep never aborts. Output order is alpha-major, independent of the
/// worker count.
pub fn commutator_sweep(
    alphas: &[f64],
    geometries: &[CommutatorCase],
    grid: &Grid2D,
    probe_width: Option<f64>,
) -> Vec<SweepEntry> {
    let cases: Vec<CommutatorCase> =
        alphas.iter().flat_map(|&alpha| geometries.iter().map(move |g| g.with_alpha(alpha))).collect();
    cases
        .par_iter()
        .map(|case| SweepEntry { case: *case, outcome: compare_case(case, grid, probe_width) })
        .collect()
}

/// Minimum corner distance from either axis, in cells, for the standard set.
pub const STANDARD_AXIS_CLEARANCE_CELLS: f64 = 12.0;

/// A deterministic set of admissible geometries around a flux at the origin:
/// probe centres on a coarse lattice, rectangles of several sizes and all
/// orientations, lengths in units of 16 cells. Cases with a corner closer
/// than `STANDARD_AXIS_CLEARANCE_CELLS` to an axis or too near the grid edge
/// are dropped. The stored alpha is 0.
pub fn standard_geometries(grid: &Grid2D) -> Vec<CommutatorCase> {
    let unit = 16.0 * grid.dx.max(grid.dy);
    let xs = [-2.25, -1.0, 1.5, 2.75];
    let ys = [-2.5, -1.25, 1.0, 2.25];
    let sides = [(-4.5, 3.75), (3.25, -4.0), (1.25, 1.75), (-5.5, -5.25), (2.0, 4.5), (-3.0, -1.5)];
    let clearance = STANDARD_AXIS_CLEARANCE_CELLS * grid.dx.max(grid.dy);
    let mut out = Vec::new();
    for &(a, b) in &sides {
        let a = (a * unit / grid.dx).round() * grid.dx;
        let b = (b * unit / grid.dy).round() * grid.dy;
        for &x in &xs {
            for &y in &ys {
                let Ok(case) = CommutatorCase::new(x * unit, y * unit, a, b, 0.0) else { continue };
                if case.min_axis_distance() < clearance {
                    continue;
                }
                let margin = PROBE_GRID_MARGIN * case.default_probe_width();
                let fits = case.rectangle().vertices().iter().all(|c| {
                    c.x - margin >= grid.origin.x
                        && c.x + margin <= grid.x_max()
                        && c.y - margin >= grid.origin.y
                        && c.y + margin <= grid.y_max()
                });
                if fits {
                    out.push(case);
                }
            }
        }
    }
    out
}

/// `exp(2πiα·w)`.
pub fn winding_phase_factor(alpha: f64, winding: i64) -> Complex64 {
    let turns = alpha * winding as f64;
    let frac = turns - turns.floor();
    if frac == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        Complex64::from_polar(1.0, TAU * frac)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::init_gaussian;

    fn grid() -> Grid2D {
        Grid2D::centered_on_flux(160, 160, 1.0 / 16.0, 1.0 / 16.0, Vec2::ZERO).unwrap()
    }

    #[test]
    fn standard_set_is_large_and_admissible() {
        let g = Grid2D::centered_on_flux(512, 512, 1.0 / 16.0, 1.0 / 16.0, Vec2::ZERO).unwrap();
        let cases = standard_geometries(&g);
        assert!(cases.len() >= 64, "{} cases", cases.len());
        let windings: std::collections::BTreeSet<i64> = cases.iter().map(|c| c.winding().unwrap()).collect();
        assert!(windings.contains(&0) && windings.contains(&1) && windings.contains(&-1), "{windings:?}");
        for c in &cases {
            assert!(c.probe_leakage(c.default_probe_width()) <= MAX_PROBE_LEAKAGE);
            assert!(epsilon_product(c).is_ok());
        }
    }

    #[test]
    fn zero_flux_translation_is_a_pure_shift() {
        let g = grid();
        let psi = init_gaussian(&g, Vec2::new(0.7, -0.4), 0.5, Vec2::new(2.0, 1.0)).unwrap();
        let t = MagneticTranslation::new(Axis::X, 5.0 / 16.0, FluxConfig::single(Vec2::ZERO, 0.0));
        let out = t.apply(&psi).unwrap();
        for j in 0..g.ny {
            for i in 0..g.nx - 5 {
                assert_eq!(out.at(i, j), psi.at(i + 5, j));
            }
        }
    }

    #[test]
    fn translation_is_unitary_with_flux() {
        let g = grid();
        let psi = init_gaussian(&g, Vec2::new(1.0, 1.0), 0.25, Vec2::ZERO).unwrap();
        let t = MagneticTranslation::new(Axis::X, -2.0, FluxConfig::single(Vec2::ZERO, 0.5));
        let out = t.apply(&psi).unwrap();
        assert!((out.norm_sq() - psi.norm_sq()).abs() < 1e-12);
        // the packet now sits around (3, 1): content moves by −d
        let (mx, my, _, _) = out.moments();
        assert!((mx - 3.0).abs() < 1e-9 && (my - 1.0).abs() < 1e-9);
    }

    #[test]
    fn inverse_restores_the_field() {
        let g = grid();
        let psi = init_gaussian(&g, Vec2::new(-1.0, 0.5), 0.2, Vec2::new(0.0, 3.0)).unwrap();
        let cfg = FluxConfig::single(Vec2::ZERO, 0.73);
        for axis in [Axis::X, Axis::Y] {
            let t = MagneticTranslation::new(axis, 1.5, cfg.clone());
            let back = t.inverse().apply(&t.apply(&psi).unwrap()).unwrap();
            for (a, b) in back.values.iter().zip(&psi.values) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn collinear_translations_compose() {
        let g = grid();
        let psi = init_gaussian(&g, Vec2::new(1.2, -0.3), 0.3, Vec2::ZERO).unwrap();
        let cfg = FluxConfig::single(Vec2::ZERO, 0.41);
        let t1 = MagneticTranslation::new(Axis::X, 1.0, cfg.clone());
        let t2 = MagneticTranslation::new(Axis::X, 1.25, cfg.clone());
        let t12 = MagneticTranslation::new(Axis::X, 2.25, cfg);
        let lhs = t1.apply(&t2.apply(&psi).unwrap()).unwrap();
        let rhs = t12.apply(&psi).unwrap();
        for (a, b) in lhs.values.iter().zip(&rhs.values) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn fractional_displacement_is_rejected() {
        let g = grid();
        let psi = ComplexField::zeros(g);
        let t = MagneticTranslation::new(Axis::Y, 0.1, FluxConfig::single(Vec2::ZERO, 0.5));
        assert!(matches!(t.apply(&psi), Err(WeylError::NotGridMultiple { .. })));
    }

    #[test]
    fn segment_through_flux_is_rejected() {
        let g = Grid2D::new(32, 32, 1.0, 1.0, Vec2::new(-10.0, -10.0)).unwrap();
        let psi = ComplexField::zeros(g);
        let t = MagneticTranslation::new(Axis::X, 3.0, FluxConfig::single(Vec2::new(0.5, 0.0), 0.5));
        assert!(matches!(t.apply(&psi), Err(WeylError::SegmentThroughFlux { .. })));
    }

    #[test]
    fn closed_form_examples() {
        let enclosing = CommutatorCase::new(1.0, 1.0, -2.0, 2.0, 0.25).unwrap();
        assert_eq!(epsilon_product(&enclosing).unwrap(), 4);
        let cf = commutator_phase_closed_form(&enclosing).unwrap();
        assert!((cf - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        let disjoint = CommutatorCase::new(1.0, 1.0, 1.0, 0.5, 0.37).unwrap();
        assert_eq!(commutator_phase_closed_form(&disjoint).unwrap(), Complex64::new(1.0, 0.0));
        let integer = CommutatorCase::new(-1.0, 0.5, 3.0, 2.0, 1.0).unwrap();
        assert_eq!(commutator_phase_closed_form(&integer).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn on_axis_cases_are_rejected() {
        assert!(matches!(CommutatorCase::new(1.0, 1.0, -1.0, 0.5, 0.5), Err(WeylError::OnAxis { which: "x+a", .. })));
        assert!(matches!(CommutatorCase::new(1.0, 0.0, -1.5, 0.5, 0.5), Err(WeylError::OnAxis { which: "y", .. })));
    }

    #[test]
    fn empirical_matches_closed_form_for_enclosing_rectangle() {
        let g = grid();
        let case = CommutatorCase::new(1.0, 1.0, -2.0, 2.0, 0.25).unwrap();
        let cmp = compare_case(&case, &g, None).unwrap();
        assert_eq!(cmp.winding, 1);
        assert!(cmp.empirical.is_reliable(), "modulus {}", cmp.empirical.raw_modulus);
        assert!(cmp.discrepancy < 1e-9, "discrepancy {}", cmp.discrepancy);
        assert!((cmp.empirical.phase - Complex64::new(0.0, 1.0)).norm() < 1e-9);
    }

    #[test]
    fn empirical_is_trivial_far_from_the_flux() {
        let g = grid();
        let case = CommutatorCase::new(3.0, 3.0, 1.0, 1.0, 0.7).unwrap();
        let cmp = compare_case(&case, &g, Some(0.1)).unwrap();
        assert!((cmp.empirical.phase - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn straddling_probe_is_rejected() {
        let g = grid();
        let case = CommutatorCase::new(0.2, 1.0, -1.0, 2.0, 0.5).unwrap();
        assert!(matches!(
            commutator_phase_empirical(&case, Some(0.2), &g),
            Err(WeylError::ProbeStraddlesAxis { .. })
        ));
    }

    #[test]
    fn sweep_keeps_going_past_bad_cases() {
        let g = grid();
        let good = CommutatorCase { x: 1.0, y: 1.0, a: -2.0, b: 2.0, alpha: 0.0 };
        let bad = CommutatorCase { x: 1.0, y: 1.0, a: -1.0, b: 2.0, alpha: 0.0 };
        let entries = commutator_sweep(&[0.0, 1.0, 2.0], &[good, bad], &g, None);
        assert_eq!(entries.len(), 6);
        for e in &entries {
            if e.case.a == -1.0 {
                assert!(matches!(e.outcome, Err(WeylError::OnAxis { .. })));
            } else {
                let c = e.outcome.as_ref().unwrap();
                assert!(c.discrepancy < 1e-9);
                assert!((c.empirical.phase - Complex64::new(1.0, 0.0)).norm() < 1e-9);
            }
        }
    }
}
