//! Five-point Peierls stencil for `H = (−i∇ + a)²/2m + V − iW`.
//!
//! The hop from node `p` to node `q` carries the link phase
//! `exp(−i ∫_p^q a·dl)`, computed exactly from subtended angles, so the
//! ordered product of link phases around any plaquette equals
//! `exp(−2πi Σ α_k [k inside])` to rounding.

use num_complex::Complex64;
use rayon::prelude::*;

use super::{EvolutionParams, EvolveError, Grid2D, Result};
use crate::gauge::{segment_phase_unchecked, point_segment_distance, FluxConfig};

const ROWS_PER_TASK: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    East,
    North,
}

#[derive(Debug, Clone)]
pub struct Hamiltonian {
    grid: Grid2D,
    /// Hopping amplitudes `−1/(2m dx²)`, `−1/(2m dy²)`.
    tx: f64,
    ty: f64,
    /// Kinetic diagonal plus `V − iW`.
    diag: Vec<Complex64>,
    /// Phase for the hop `(i,j) → (i+1,j)`; zero on the last column.
    east: Vec<Complex64>,
    /// Phase for the hop `(i,j) → (i,j+1)`; zero on the last row.
    north: Vec<Complex64>,
    absorber: Vec<f64>,
}

fn link_phases(cfg: &FluxConfig, grid: &Grid2D) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let zero = Complex64::new(0.0, 0.0);
    let mut east = vec![zero; grid.len()];
    let mut north = vec![zero; grid.len()];
    let r = cfg.singular_radius();
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let p = grid.position(i, j);
            let idx = grid.index(i, j);
            if i + 1 < grid.nx {
                let q = grid.position(i + 1, j);
                for (index, line) in cfg.lines().iter().enumerate() {
                    if point_segment_distance(line.center, p, q) <= r {
                        return Err(EvolveError::FluxOnLink { index, i, j });
                    }
                }
                east[idx] = Complex64::from_polar(1.0, -segment_phase_unchecked(cfg, p, q));
            }
            if j + 1 < grid.ny {
                let q = grid.position(i, j + 1);
                for (index, line) in cfg.lines().iter().enumerate() {
                    if point_segment_distance(line.center, p, q) <= r {
                        return Err(EvolveError::FluxOnLink { index, i, j });
                    }
                }
                north[idx] = Complex64::from_polar(1.0, -segment_phase_unchecked(cfg, p, q));
            }
        }
    }
    Ok((east, north))
}

impl Hamiltonian {
    pub fn build(params: &EvolutionParams, grid: &Grid2D) -> Result<Self> {
        params.validate(grid)?;
        let (east, north) = link_phases(&params.cfg, grid)?;
        let tx = -1.0 / (2.0 * params.mass * grid.dx * grid.dx);
        let ty = -1.0 / (2.0 * params.mass * grid.dy * grid.dy);
        let absorber = params
            .absorber
            .map(|a| a.profile(grid))
            .unwrap_or_else(|| vec![0.0; grid.len()]);
        let kinetic = -2.0 * (tx + ty);
        let diag = (0..grid.len())
            .map(|p| {
                let v = params.potential.as_ref().map_or(0.0, |v| v[p]);
                Complex64::new(kinetic + v, -absorber[p])
            })
            .collect();
        Ok(Self { grid: *grid, tx, ty, diag, east, north, absorber })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn diag(&self) -> &[Complex64] {
        &self.diag
    }

    pub fn absorber(&self) -> &[f64] {
        &self.absorber
    }

    /// Phase factor for the hop leaving node `(i, j)` along `link`.
    pub fn link_phase(&self, i: usize, j: usize, link: Link) -> Complex64 {
        let idx = self.grid.index(i, j);
        match link {
            Link::East => self.east[idx],
            Link::North => self.north[idx],
        }
    }

    /// Matrix element `H[p][q]` for `q` the east/north neighbour of `p`.
    pub fn hopping_to(&self, i: usize, j: usize, link: Link) -> Complex64 {
        // H[p][q] = t·conj(phase of the hop p → q)
        match link {
            Link::East => self.tx * self.link_phase(i, j, link).conj(),
            Link::North => self.ty * self.link_phase(i, j, link).conj(),
        }
    }

    /// Ordered product of link phases around the CCW plaquette with lower-left node `(i, j)`.
    pub fn plaquette_phase(&self, i: usize, j: usize) -> Complex64 {
        self.link_phase(i, j, Link::East)
            * self.link_phase(i + 1, j, Link::North)
            * self.link_phase(i, j + 1, Link::East).conj()
            * self.link_phase(i, j, Link::North).conj()
    }

    /// `out = shift·x + scale·H·x`.
    pub fn apply_affine(&self, shift: Complex64, scale: Complex64, x: &[Complex64], out: &mut [Complex64]) {
        let nx = self.grid.nx;
        let ny = self.grid.ny;
        out.par_chunks_mut(nx * ROWS_PER_TASK).enumerate().for_each(|(block, chunk)| {
            let j0 = block * ROWS_PER_TASK;
            for (r, row) in chunk.chunks_mut(nx).enumerate() {
                self.apply_row(j0 + r, nx, ny, shift, scale, x, row);
            }
        });
    }

    #[inline(always)]
    #[allow(clippy::too_many_arguments)]
    fn apply_row(
        &self,
        j: usize,
        nx: usize,
        ny: usize,
        shift: Complex64,
        scale: Complex64,
        x: &[Complex64],
        row: &mut [Complex64],
    ) {
        let base = j * nx;
        let xr = &x[base..base + nx];
        let dr = &self.diag[base..base + nx];
        let er = &self.east[base..base + nx];
        let (tx, ty) = (self.tx, self.ty);
        let below = (j > 0).then(|| (&x[base - nx..base], &self.north[base - nx..base]));
        let above = (j + 1 < ny).then(|| (&x[base + nx..base + 2 * nx], &self.north[base..base + nx]));
        let node = |i: usize| {
            let mut hop = Complex64::new(0.0, 0.0);
            if i > 0 {
                hop += er[i - 1] * xr[i - 1];
            }
            if i + 1 < nx {
                hop += er[i].conj() * xr[i + 1];
            }
            let mut vert = Complex64::new(0.0, 0.0);
            if let Some((xb, nb)) = below {
                vert += nb[i] * xb[i];
            }
            if let Some((xa, na)) = above {
                vert += na[i].conj() * xa[i];
            }
            shift * xr[i] + scale * (dr[i] * xr[i] + hop * tx + vert * ty)
        };
        match (below, above) {
            (Some((xb, nb)), Some((xa, na))) => {
                row[0] = node(0);
                row[nx - 1] = node(nx - 1);
                // branch-free interior, same arithmetic as `node`
                let m = nx - 2;
                let (xw, xc, xe) = (&xr[..m], &xr[1..=m], &xr[2..m + 2]);
                let (ew, ec) = (&er[..m], &er[1..=m]);
                let (d, xb, nb, xa, na) = (&dr[1..=m], &xb[1..=m], &nb[1..=m], &xa[1..=m], &na[1..=m]);
                let out = &mut row[1..=m];
                for k in 0..m {
                    let hop = ew[k] * xw[k] + ec[k].conj() * xe[k];
                    let vert = nb[k] * xb[k] + na[k].conj() * xa[k];
                    out[k] = shift * xc[k] + scale * (d[k] * xc[k] + hop * tx + vert * ty);
                }
            }
            _ => {
                for (i, out) in row.iter_mut().enumerate() {
                    *out = node(i);
                }
            }
        }
    }

    pub fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        self.apply_affine(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), x, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::{Absorber, ComplexField};
    use crate::gauge::Vec2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn random_field(grid: Grid2D, seed: u64) -> ComplexField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ComplexField::from_fn(grid, |_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn flux_grid() -> (Grid2D, Vec2) {
        let center = Vec2::new(0.0, 0.0);
        (Grid2D::centered_on_flux(24, 20, 0.5, 0.5, center).unwrap(), center)
    }

    #[test]
    fn zero_flux_gives_unit_link_phases() {
        let (grid, c) = flux_grid();
        let params = EvolutionParams::free(1.0, &grid).with_flux(FluxConfig::single(c, 0.0));
        let h = Hamiltonian::build(&params, &grid).unwrap();
        for j in 0..grid.ny - 1 {
            for i in 0..grid.nx - 1 {
                assert_eq!(h.link_phase(i, j, Link::East), Complex64::new(1.0, 0.0));
                assert_eq!(h.link_phase(i, j, Link::North), Complex64::new(1.0, 0.0));
            }
        }
    }

    #[test]
    fn plaquette_holonomy_matches_enclosed_flux() {
        let (grid, c) = flux_grid();
        let alpha = 0.37;
        let params = EvolutionParams::free(1.0, &grid).with_flux(FluxConfig::single(c, alpha));
        let h = Hamiltonian::build(&params, &grid).unwrap();
        let (ci, cj) = grid.to_cell(c);
        let (fi, fj) = (ci.floor() as usize, cj.floor() as usize);
        for j in 0..grid.ny - 1 {
            for i in 0..grid.nx - 1 {
                let expected = if (i, j) == (fi, fj) {
                    Complex64::from_polar(1.0, -TAU * alpha)
                } else {
                    Complex64::new(1.0, 0.0)
                };
                let got = h.plaquette_phase(i, j);
                assert!((got - expected).norm() < 1e-12, "plaquette ({i},{j}): {got} vs {expected}");
            }
        }
    }

    #[test]
    fn hermitian_without_absorber() {
        let (grid, c) = flux_grid();
        let potential = (0..grid.len()).map(|p| (p % 7) as f64 * 0.3).collect();
        let params = EvolutionParams::free(1.3, &grid)
            .with_flux(FluxConfig::single(c, 0.61))
            .with_potential(potential);
        let h = Hamiltonian::build(&params, &grid).unwrap();
        let phi = random_field(grid, 1);
        let psi = random_field(grid, 2);
        let mut h_psi = ComplexField::zeros(grid);
        let mut h_phi = ComplexField::zeros(grid);
        h.apply(&psi.values, &mut h_psi.values);
        h.apply(&phi.values, &mut h_phi.values);
        let lhs = phi.inner(&h_psi);
        let rhs = psi.inner(&h_phi).conj();
        assert!((lhs - rhs).norm() < 1e-12 * lhs.norm().max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn absorber_breaks_hermiticity_towards_decay() {
        let (grid, _) = flux_grid();
        let params = EvolutionParams::free(1.0, &grid).with_absorber(Absorber::new(4, 0.5));
        let h = Hamiltonian::build(&params, &grid).unwrap();
        let psi = random_field(grid, 3);
        let mut h_psi = ComplexField::zeros(grid);
        h.apply(&psi.values, &mut h_psi.values);
        assert!(psi.inner(&h_psi).im < 0.0);
    }

    #[test]
    fn flux_on_a_link_is_rejected() {
        let grid = Grid2D::new(16, 16, 1.0, 1.0, Vec2::new(0.0, 0.0)).unwrap();
        let cfg = FluxConfig::single(Vec2::new(3.5, 4.0), 0.5);
        let params = EvolutionParams::free(1.0, &grid).with_flux(cfg);
        assert!(matches!(Hamiltonian::build(&params, &grid), Err(EvolveError::FluxOnLink { .. })));
    }

    #[test]
    fn zero_flux_stencil_is_the_discrete_laplacian() {
        let grid = Grid2D::new(16, 16, 0.5, 0.25, Vec2::new(0.0, 0.0)).unwrap();
        let h = Hamiltonian::build(&EvolutionParams::free(2.0, &grid), &grid).unwrap();
        let psi = random_field(grid, 4);
        let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
        h.apply(&psi.values, &mut out);
        let (i, j) = (5, 7);
        let f = |i: usize, j: usize| psi.at(i, j);
        let lap = (f(i + 1, j) - f(i, j) * 2.0 + f(i - 1, j)) / (0.25)
            + (f(i, j + 1) - f(i, j) * 2.0 + f(i, j - 1)) / (0.0625);
        let expected = -lap / 4.0;
        assert!((out[grid.index(i, j)] - expected).norm() < 1e-12);
    }
}
