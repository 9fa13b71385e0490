//! Explicit solutions of the first-order eigen equations
//! `p_x^α φ = (−i∂_x − α y/r²) φ = λφ` and `p_y^α ψ = (−i∂_y + α x/r²) ψ = λψ`
//! for a flux line at the origin, and finite-difference checks on them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evolve::{ComplexField, Grid2D};

/// Node coordinates closer than this fraction of a spacing to the axis count
/// as touching it.
pub const AXIS_CLEARANCE: f64 = 1e-6;
/// Threshold used by the x-invariance witness unless overridden.
pub const DEFAULT_WITNESS_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EigenError {
    #[error("grid row or column at {coordinate} touches the {axis} axis")]
    GridTouchesAxis { axis: char, coordinate: f64 },
    #[error("the field vanishes identically")]
    NotAField,
    #[error("compact-support witness needs a real eigenvalue, got {0}")]
    ComplexEigenvalue(Complex64),
    #[error("grid too small for the five-point stencil ({0} nodes along the derivative)")]
    GridTooSmall(usize),
    #[error("field does not live on the given grid")]
    GridMismatch,
    #[error("non-finite spec parameter: {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = std::result::Result<T, EigenError>;

/// Which momentum component the solution diagonalises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EigenAxis {
    #[default]
    X,
    Y,
}

/// The free function `C` of the transverse coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransverseProfile {
    Gaussian { center: f64, width: f64, amplitude: Complex64 },
    Constant { value: Complex64 },
}

impl Default for TransverseProfile {
    fn default() -> Self {
        TransverseProfile::Gaussian { center: 1.0, width: 0.3, amplitude: Complex64::new(1.0, 0.0) }
    }
}

impl TransverseProfile {
    pub fn eval(&self, s: f64) -> Complex64 {
        match *self {
            TransverseProfile::Gaussian { center, width, amplitude } => {
                let u = (s - center) / width;
                amplitude * (-0.5 * u * u).exp()
            }
            TransverseProfile::Constant { value } => value,
        }
    }

    fn is_zero(&self) -> bool {
        match *self {
            TransverseProfile::Gaussian { amplitude, .. } => amplitude == Complex64::new(0.0, 0.0),
            TransverseProfile::Constant { value } => value == Complex64::new(0.0, 0.0),
        }
    }

    fn is_finite(&self) -> bool {
        match *self {
            TransverseProfile::Gaussian { center, width, amplitude } => {
                center.is_finite() && width.is_finite() && width > 0.0 && amplitude.is_finite()
            }
            TransverseProfile::Constant { value } => value.is_finite(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenSolutionSpec {
    pub alpha: f64,
    pub lambda: Complex64,
    /// `C(y)` for the x equation, `C(x)` for the y equation.
    pub y_profile: TransverseProfile,
    pub axis: EigenAxis,
}

impl Default for EigenSolutionSpec {
    fn default() -> Self {
        Self { alpha: 0.5, lambda: Complex64::new(1.0, 0.0), y_profile: TransverseProfile::default(), axis: EigenAxis::X }
    }
}

impl EigenSolutionSpec {
    pub fn new(alpha: f64, lambda: Complex64, y_profile: TransverseProfile) -> Self {
        Self { alpha, lambda, y_profile, axis: EigenAxis::X }
    }

    pub fn along(mut self, axis: EigenAxis) -> Self {
        self.axis = axis;
        self
    }

    fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() {
            return Err(EigenError::NonFinite("alpha"));
        }
        if !self.lambda.is_finite() {
            return Err(EigenError::NonFinite("lambda"));
        }
        if !self.y_profile.is_finite() {
            return Err(EigenError::NonFinite("profile"));
        }
        if self.y_profile.is_zero() {
            return Err(EigenError::NotAField);
        }
        Ok(())
    }

    /// Closed-form value at `(x, y)`; the transverse coordinate must be nonzero.
    pub fn value(&self, x: f64, y: f64) -> Complex64 {
        let i = Complex64::i();
        match self.axis {
            EigenAxis::X => self.y_profile.eval(y) * (i * (self.lambda * x + self.alpha * (x / y).atan())).exp(),
            EigenAxis::Y => self.y_profile.eval(x) * (i * (self.lambda * y - self.alpha * (y / x).atan())).exp(),
        }
    }
}

fn check_axis(spec: &EigenSolutionSpec, grid: &Grid2D) -> Result<()> {
    let (axis, n, coord, spacing): (char, usize, &dyn Fn(usize) -> f64, f64) = match spec.axis {
        EigenAxis::X => ('x', grid.ny, &|j| grid.y(j), grid.dy),
        EigenAxis::Y => ('y', grid.nx, &|i| grid.x(i), grid.dx),
    };
    for k in 0..n {
        let c = coord(k);
        if c.abs() <= AXIS_CLEARANCE * spacing {
            return Err(EigenError::GridTouchesAxis { axis, coordinate: c });
        }
    }
    Ok(())
}

/// Samples the closed-form solution. Along each grid line parallel to the
/// derivative axis the arctan term is continuous, so no branch cut is met.
pub fn sample_eigen_solution(spec: &EigenSolutionSpec, grid: &Grid2D) -> Result<ComplexField> {
    spec.validate()?;
    check_axis(spec, grid)?;
    Ok(ComplexField::from_fn(*grid, |p| spec.value(p.x, p.y)))
}

/// Relative L² residual `‖r‖ / (‖Dφ‖ + ‖(α·gauge)φ‖ + ‖λφ‖)` of the eigen
/// equation with a fourth-order central difference `D`, over nodes at least
/// two cells from the ends of each line.
pub fn residual_check(field: &ComplexField, alpha: f64, lambda: Complex64, axis: EigenAxis) -> Result<f64> {
    let grid = field.grid;
    if !(alpha.is_finite() && lambda.is_finite()) {
        return Err(EigenError::NonFinite("alpha or lambda"));
    }
    let (n_along, n_across) = match axis {
        EigenAxis::X => (grid.nx, grid.ny),
        EigenAxis::Y => (grid.ny, grid.nx),
    };
    if n_along < 5 {
        return Err(EigenError::GridTooSmall(n_along));
    }
    let probe = EigenSolutionSpec { axis, ..EigenSolutionSpec::default() };
    check_axis(&probe, &grid)?;
    if field.values.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
        return Err(EigenError::NotAField);
    }
    let h = match axis {
        EigenAxis::X => grid.dx,
        EigenAxis::Y => grid.dy,
    };
    let at = |along: usize, across: usize| match axis {
        EigenAxis::X => (field.at(along, across), grid.x(along), grid.y(across)),
        EigenAxis::Y => (field.at(across, along), grid.x(across), grid.y(along)),
    };
    let i = Complex64::i();
    let (mut r2, mut d2, mut g2, mut l2) = (0.0, 0.0, 0.0, 0.0);
    for c in 0..n_across {
        for a in 2..n_along - 2 {
            let (f, x, y) = at(a, c);
            let deriv = (at(a - 2, c).0 - 8.0 * at(a - 1, c).0 + 8.0 * at(a + 1, c).0 - at(a + 2, c).0) / (12.0 * h);
            let r_sq = x * x + y * y;
            let gauge = match axis {
                EigenAxis::X => -alpha * y / r_sq,
                EigenAxis::Y => alpha * x / r_sq,
            };
            let p = -i * deriv;
            let res = p + gauge * f - lambda * f;
            r2 += res.norm_sqr();
            d2 += p.norm_sqr();
            g2 += (gauge * f).norm_sqr();
            l2 += (lambda * f).norm_sqr();
        }
    }
    let scale = d2.sqrt() + g2.sqrt() + l2.sqrt();
    if r2 == 0.0 {
        return Ok(0.0);
    }
    if scale == 0.0 {
        return Err(EigenError::NotAField);
    }
    Ok(r2.sqrt() / scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompactSupportWitness {
    /// True when `|φ|` is x-invariant to within the threshold, which rules out
    /// compact support in x for a nonzero `C`.
    pub holds: bool,
    /// `max | |φ(x, y)| − |C(y)| |` over the grid.
    pub deviation: f64,
    pub threshold: f64,
}

pub fn compact_support_witness(
    spec: &EigenSolutionSpec,
    grid: &Grid2D,
    threshold: f64,
) -> Result<CompactSupportWitness> {
    if spec.lambda.im != 0.0 {
        return Err(EigenError::ComplexEigenvalue(spec.lambda));
    }
    let field = sample_eigen_solution(spec, grid)?;
    let mut deviation: f64 = 0.0;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let transverse = match spec.axis {
                EigenAxis::X => grid.y(j),
                EigenAxis::Y => grid.x(i),
            };
            let d = (field.at(i, j).norm() - spec.y_profile.eval(transverse).norm()).abs();
            deviation = deviation.max(d);
        }
    }
    Ok(CompactSupportWitness { holds: deviation < threshold, deviation, threshold })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::Vec2;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, TAU};

    fn strip(points_per_unit: usize) -> Grid2D {
        // x ∈ [−2, 2], y ∈ [0.4, 2.4]; rows never reach y = 0
        let h = 1.0 / points_per_unit as f64;
        let nx = 4 * points_per_unit + 1;
        let ny = 2 * points_per_unit + 1;
        Grid2D::new(nx, ny, h, h, Vec2::new(-2.0, 0.4)).unwrap()
    }

    #[test]
    fn plane_wave_without_flux() {
        let spec = EigenSolutionSpec::new(0.0, Complex64::new(3.0, 0.0), TransverseProfile::default());
        let g = strip(16);
        let f = sample_eigen_solution(&spec, &g).unwrap();
        for (i, j) in [(0, 0), (17, 5), (40, 12)] {
            let (x, y) = (g.x(i), g.y(j));
            let expect = spec.y_profile.eval(y) * Complex64::from_polar(1.0, 3.0 * x);
            assert!((f.at(i, j) - expect).norm() < 1e-15);
        }
    }

    #[test]
    fn integer_flux_at_zero_eigenvalue_keeps_the_modulus() {
        let spec = EigenSolutionSpec::new(1.0, Complex64::new(0.0, 0.0), TransverseProfile::default());
        let g = strip(32);
        let f = sample_eigen_solution(&spec, &g).unwrap();
        for j in 0..g.ny {
            let c = spec.y_profile.eval(g.y(j)).norm();
            for i in 0..g.nx {
                assert!((f.at(i, j).norm() - c).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn imaginary_eigenvalue_grows_towards_negative_x() {
        let spec = EigenSolutionSpec::new(0.3, Complex64::new(0.0, 1.0), TransverseProfile::default());
        let g = strip(16);
        let f = sample_eigen_solution(&spec, &g).unwrap();
        for (i, j) in [(0, 3), (20, 9), (64, 15)] {
            let (x, y) = (g.x(i), g.y(j));
            let expect = spec.y_profile.eval(y).norm() * (-x).exp();
            assert!((f.at(i, j).norm() - expect).abs() < 1e-12 * expect.max(1.0));
        }
        assert!(f.at(0, 8).norm() > f.at(g.nx - 1, 8).norm() * 50.0);
    }

    #[test]
    fn fourth_order_convergence() {
        let spec = EigenSolutionSpec::new(0.5, Complex64::new(1.0, 0.0), TransverseProfile::default());
        let coarse = sample_eigen_solution(&spec, &strip(16)).unwrap();
        let fine = sample_eigen_solution(&spec, &strip(32)).unwrap();
        let rc = residual_check(&coarse, 0.5, spec.lambda, EigenAxis::X).unwrap();
        let rf = residual_check(&fine, 0.5, spec.lambda, EigenAxis::X).unwrap();
        let ratio = rc / rf;
        assert!((ratio - 16.0).abs() < 0.3 * 16.0, "ratio {ratio}");
    }

    #[test]
    fn plane_wave_residual_matches_the_dispersion_bound() {
        // 64 points per wavelength: θ = k h = 2π/64
        let k = TAU;
        let spec = EigenSolutionSpec::new(0.0, Complex64::new(k, 0.0), TransverseProfile::default());
        let g = strip(64);
        let f = sample_eigen_solution(&spec, &g).unwrap();
        let r = residual_check(&f, 0.0, spec.lambda, EigenAxis::X).unwrap();
        let theta = k * g.dx;
        let symbol = (8.0 * theta.sin() - (2.0 * theta).sin()) / (6.0 * theta);
        // residual over (‖Dφ‖ + ‖λφ‖) for a pure plane wave
        let bound = (1.0 - symbol) / (1.0 + symbol);
        assert!((r / bound - 1.0).abs() < 1e-6, "r {r} bound {bound}");
        assert!(r < 2e-6);
    }

    #[test]
    fn integer_flux_is_a_gauge_phase_of_the_free_solution() {
        let g = strip(24);
        for n in [-2i32, 1, 3] {
            let lambda = Complex64::new(1.7, 0.0);
            let with = sample_eigen_solution(&EigenSolutionSpec::new(n as f64, lambda, TransverseProfile::default()), &g)
                .unwrap();
            let without =
                sample_eigen_solution(&EigenSolutionSpec::new(0.0, lambda, TransverseProfile::default()), &g).unwrap();
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let (x, y) = (g.x(i), g.y(j));
                    // single-valued gauge function e^{−inθ} with θ the polar angle
                    let gauge = Complex64::from_polar(1.0, -(n as f64) * y.atan2(x) + (n as f64) * FRAC_PI_2);
                    let diff = with.at(i, j) - gauge * without.at(i, j);
                    assert!(diff.norm() < 1e-12, "n {n} at ({x}, {y})");
                }
            }
        }
    }

    #[test]
    fn y_equation_is_the_mirror_image() {
        let profile = TransverseProfile::Gaussian { center: -0.9, width: 0.25, amplitude: Complex64::new(0.5, 0.2) };
        let lambda = Complex64::new(2.0, 0.0);
        let spec_y = EigenSolutionSpec::new(0.35, lambda, profile).along(EigenAxis::Y);
        let spec_x = EigenSolutionSpec::new(-0.35, lambda, profile);
        let h = 1.0 / 32.0;
        let gy = Grid2D::new(41, 129, h, h, Vec2::new(-1.6, -2.0)).unwrap();
        let fy = sample_eigen_solution(&spec_y, &gy).unwrap();
        for j in (0..gy.ny).step_by(7) {
            for i in (0..gy.nx).step_by(5) {
                let (x, y) = (gy.x(i), gy.y(j));
                assert!((fy.at(i, j) - spec_x.value(y, x)).norm() < 1e-14);
            }
        }
        let r = residual_check(&fy, 0.35, lambda, EigenAxis::Y).unwrap();
        assert!(r < 1e-5, "residual {r}");
    }

    #[test]
    fn axis_and_zero_field_are_rejected() {
        let g = Grid2D::new(17, 17, 0.25, 0.25, Vec2::new(-2.0, -2.0)).unwrap();
        assert!(matches!(
            sample_eigen_solution(&EigenSolutionSpec::default(), &g),
            Err(EigenError::GridTouchesAxis { axis: 'x', .. })
        ));
        let zero = TransverseProfile::Constant { value: Complex64::new(0.0, 0.0) };
        let s = strip(8);
        assert_eq!(
            sample_eigen_solution(&EigenSolutionSpec::new(0.5, Complex64::new(1.0, 0.0), zero), &s),
            Err(EigenError::NotAField)
        );
        assert_eq!(
            compact_support_witness(&EigenSolutionSpec::new(0.5, Complex64::new(1.0, 0.0), zero), &s, 1e-12),
            Err(EigenError::NotAField)
        );
        let field = ComplexField::zeros(s);
        assert_eq!(residual_check(&field, 0.5, Complex64::new(1.0, 0.0), EigenAxis::X), Err(EigenError::NotAField));
    }

    #[test]
    fn default_spec_has_no_compact_support() {
        let w = compact_support_witness(&EigenSolutionSpec::default(), &strip(16), DEFAULT_WITNESS_THRESHOLD).unwrap();
        assert!(w.holds && w.deviation < 1e-12);
        let complex = EigenSolutionSpec { lambda: Complex64::new(1.0, 0.5), ..EigenSolutionSpec::default() };
        assert!(matches!(
            compact_support_witness(&complex, &strip(8), 1e-12),
            Err(EigenError::ComplexEigenvalue(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn modulus_is_x_invariant_for_real_eigenvalues(
            alpha in -3.0f64..3.0,
            lambda in -5.0f64..5.0,
            center in 0.5f64..1.5,
            width in 0.1f64..1.0,
            re in -2.0f64..2.0,
            im in -2.0f64..2.0,
        ) {
            prop_assume!(re.abs() + im.abs() > 1e-3);
            let profile = TransverseProfile::Gaussian { center, width, amplitude: Complex64::new(re, im) };
            let spec = EigenSolutionSpec::new(alpha, Complex64::new(lambda, 0.0), profile);
            let w = compact_support_witness(&spec, &strip(8), DEFAULT_WITNESS_THRESHOLD).unwrap();
            prop_assert!(w.holds, "deviation {}", w.deviation);
        }
    }
}
