use num_complex::Complex64;
use statrs::function::erf::erf;

use super::{ComplexField, EvolveError, Grid2D, Result};
use crate::gauge::{segment_phase_unchecked, FluxConfig, Vec2};

/// Packets narrower than this many cells are rejected.
pub const MIN_WIDTH_CELLS: f64 = 3.0;

const MIN_MASS_ON_GRID: f64 = 1.0 - 1e-9;

/// Fraction of the continuum Gaussian `|ψ|²` (position std `wx`, `wy`) that
/// lies inside the grid rectangle.
fn mass_inside(grid: &Grid2D, center: Vec2, wx: f64, wy: f64) -> f64 {
    let sq2 = std::f64::consts::SQRT_2;
    // extend by half a cell so each node owns its cell
    let frac = |lo: f64, hi: f64, c: f64, w: f64| 0.5 * (erf((hi - c) / (w * sq2)) - erf((lo - c) / (w * sq2)));
    frac(grid.origin.x - 0.5 * grid.dx, grid.x_max() + 0.5 * grid.dx, center.x, wx)
        * frac(grid.origin.y - 0.5 * grid.dy, grid.y_max() + 0.5 * grid.dy, center.y, wy)
}

/// Normalized Gaussian `exp(−|r−c|²/4w² + i k·r)`; `width` is the position
/// standard deviation of `|ψ|²`.
pub fn init_gaussian(grid: &Grid2D, center: Vec2, width: f64, momentum: Vec2) -> Result<ComplexField> {
    init_elliptic_gaussian(grid, center, (width, width), momentum)
}

/// [`init_gaussian`] with separate widths along x and y.
pub fn init_elliptic_gaussian(
    grid: &Grid2D,
    center: Vec2,
    widths: (f64, f64),
    momentum: Vec2,
) -> Result<ComplexField> {
    let (wx, wy) = widths;
    let min = MIN_WIDTH_CELLS * grid.dx.max(grid.dy);
    for w in [wx, wy] {
        if !(w >= min) {
            return Err(EvolveError::PacketTooNarrow { width: w, min_cells: MIN_WIDTH_CELLS });
        }
    }
    let inside = mass_inside(grid, center, wx, wy);
    if inside < MIN_MASS_ON_GRID {
        return Err(EvolveError::PacketOffGrid { inside });
    }
    let (ax, ay) = (1.0 / (4.0 * wx * wx), 1.0 / (4.0 * wy * wy));
    let mut field = ComplexField::from_fn(*grid, |p| {
        let d = p - center;
        Complex64::from_polar((-(d.x * d.x * ax + d.y * d.y * ay)).exp(), momentum.dot(p))
    });
    field.normalize()?;
    Ok(field)
}

/// [`init_gaussian`] multiplied by `exp(−i ∫_c^p a·dl)` (straight segment
/// from the packet center), so that its kinetic momentum is `momentum` in
/// the presence of the flux lines and shifting any `α` by an integer maps the
/// packet by the same gauge transformation as the Hamiltonian.
pub fn covariant_gaussian(
    grid: &Grid2D,
    center: Vec2,
    width: f64,
    momentum: Vec2,
    cfg: &FluxConfig,
) -> Result<ComplexField> {
    covariant_elliptic_gaussian(grid, center, (width, width), momentum, cfg)
}

pub fn covariant_elliptic_gaussian(
    grid: &Grid2D,
    center: Vec2,
    widths: (f64, f64),
    momentum: Vec2,
    cfg: &FluxConfig,
) -> Result<ComplexField> {
    let mut field = init_elliptic_gaussian(grid, center, widths, momentum)?;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let p = grid.position(i, j);
            // nodes diametrically behind a flux line carry ~e^{-r²} weight; the
            // angle there is still well defined by atan2
            let phase = segment_phase_unchecked(cfg, center, p);
            field.values[grid.index(i, j)] *= Complex64::from_polar(1.0, -phase);
        }
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn grid64() -> Grid2D {
        Grid2D::new(64, 64, 1.0, 1.0, Vec2::new(-31.5, -31.5)).unwrap()
    }

    #[test]
    fn real_positive_and_normalized_at_rest() {
        let g = grid64();
        let f = init_gaussian(&g, Vec2::ZERO, 4.0, Vec2::ZERO).unwrap();
        assert!((f.norm_sq() - 1.0).abs() < 1e-12);
        assert!(f.values.iter().all(|v| v.im == 0.0 && v.re > 0.0));
    }

    #[test]
    fn too_narrow_and_off_grid() {
        let g = grid64();
        assert!(matches!(
            init_gaussian(&g, Vec2::ZERO, 2.9, Vec2::ZERO),
            Err(EvolveError::PacketTooNarrow { .. })
        ));
        assert!(matches!(
            init_gaussian(&g, Vec2::new(25.0, 0.0), 5.0, Vec2::ZERO),
            Err(EvolveError::PacketOffGrid { .. })
        ));
    }

    /// Mean lattice momentum from a direct DFT along x of every row.
    fn spectral_mean_kx(f: &ComplexField) -> f64 {
        let g = f.grid;
        let n = g.nx;
        let (mut num, mut den) = (0.0, 0.0);
        for j in 0..g.ny {
            for m in 0..n {
                let k = if m < n / 2 { m as f64 } else { m as f64 - n as f64 } * TAU / (n as f64 * g.dx);
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..n {
                    acc += f.at(i, j) * Complex64::from_polar(1.0, -TAU * (m * i) as f64 / n as f64);
                }
                num += k * acc.norm_sqr();
                den += acc.norm_sqr();
            }
        }
        num / den
    }

    #[test]
    fn carries_the_requested_momentum() {
        let g = grid64();
        for k in [0.3, 0.6, -0.45] {
            let f = init_gaussian(&g, Vec2::ZERO, 5.0, Vec2::new(k, 0.0)).unwrap();
            let mean = spectral_mean_kx(&f);
            assert!((mean - k).abs() < 0.01 * k.abs(), "k = {k}: spectral mean {mean}");
        }
    }

    #[test]
    fn covariant_packet_is_gauge_shifted_by_integer_flux() {
        let g = grid64();
        let flux = Vec2::new(-10.21, 3.37);
        let a = covariant_gaussian(&g, Vec2::new(-4.0, 0.0), 4.0, Vec2::new(0.5, 0.0), &FluxConfig::single(flux, 0.3)).unwrap();
        let b = covariant_gaussian(&g, Vec2::new(-4.0, 0.0), 4.0, Vec2::new(0.5, 0.0), &FluxConfig::single(flux, 1.3)).unwrap();
        // b / a = e^{-i(θ(p) − θ(c))} with θ the polar angle around the flux
        let theta = |p: Vec2| (p.y - flux.y).atan2(p.x - flux.x);
        let t0 = theta(Vec2::new(-4.0, 0.0));
        for j in 0..g.ny {
            for i in 0..g.nx {
                let (va, vb) = (a.at(i, j), b.at(i, j));
                if va.norm() < 1e-200 {
                    continue;
                }
                let expected = va * Complex64::from_polar(1.0, -(theta(g.position(i, j)) - t0));
                assert!((vb - expected).norm() <= 1e-12 * va.norm().max(1e-300) + 1e-300);
            }
        }
    }
}
