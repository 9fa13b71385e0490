use num_complex::Complex64;
use rayon::prelude::*;

use super::parallel::{self, BLOCK};
use super::{EvolveError, Result, SolverSettings};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Scratch vectors for [`bicgstab`], reused across solves.
#[derive(Debug, Clone, Default)]
pub(crate) struct Workspace {
    r: Vec<Complex64>,
    r_hat: Vec<Complex64>,
    p: Vec<Complex64>,
    v: Vec<Complex64>,
    s: Vec<Complex64>,
    t: Vec<Complex64>,
    z: Vec<Complex64>,
}

impl Workspace {
    pub(crate) fn new(n: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); n];
        Self { r: z.clone(), r_hat: z.clone(), p: z.clone(), v: z.clone(), s: z.clone(), t: z.clone(), z }
    }
}

/// Right-preconditioned BiCGSTAB for `A x = b`, where `apply(u, out)` writes
/// `A u` and `inv_diag` is the Jacobi preconditioner. `x` holds the initial
/// guess on entry.
pub fn bicgstab<F>(
    apply: F,
    inv_diag: &[Complex64],
    b: &[Complex64],
    x: &mut [Complex64],
    settings: &SolverSettings,
) -> Result<SolveStats>
where
    F: Fn(&[Complex64], &mut [Complex64]),
{
    let mut ws = Workspace::new(b.len());
    bicgstab_with(apply, inv_diag, b, x, settings, &mut ws)
}

pub(crate) fn bicgstab_with<F>(
    apply: F,
    inv_diag: &[Complex64],
    b: &[Complex64],
    x: &mut [Complex64],
    settings: &SolverSettings,
    ws: &mut Workspace,
) -> Result<SolveStats>
where
    F: Fn(&[Complex64], &mut [Complex64]),
{
    let b_norm = parallel::norm_sq(b).sqrt();
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        return Ok(SolveStats { iterations: 0, relative_residual: 0.0 });
    }
    let target = settings.tolerance * b_norm;
    let Workspace { r, r_hat, p, v, s, t, z } = ws;

    apply(x, v);
    r.par_chunks_mut(BLOCK).zip(b.par_chunks(BLOCK)).zip(v.par_chunks(BLOCK)).for_each(|((r, b), v)| {
        for ((r, b), v) in r.iter_mut().zip(b).zip(v) {
            *r = b - v;
        }
    });
    let mut res = parallel::norm_sq(r).sqrt();
    if res <= target {
        return Ok(SolveStats { iterations: 0, relative_residual: res / b_norm });
    }
    r_hat.copy_from_slice(r);
    p.iter_mut().for_each(|e| *e = Complex64::new(0.0, 0.0));
    v.iter_mut().for_each(|e| *e = Complex64::new(0.0, 0.0));
    let one = Complex64::new(1.0, 0.0);
    let (mut rho, mut alpha, mut omega) = (one, one, one);

    for it in 1..=settings.max_iterations {
        let rho_new = parallel::dot(r_hat, r);
        if rho_new.norm() == 0.0 {
            return Err(EvolveError::SolverDiverged { residual: res / b_norm, iterations: it });
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        // p = r + β(p − ωv);  z = M⁻¹p
        p.par_chunks_mut(BLOCK)
            .zip(z.par_chunks_mut(BLOCK))
            .zip(r.par_chunks(BLOCK))
            .zip(v.par_chunks(BLOCK))
            .zip(inv_diag.par_chunks(BLOCK))
            .for_each(|((((p, z), r), v), m)| {
                for ((((p, z), r), v), m) in p.iter_mut().zip(z.iter_mut()).zip(r).zip(v).zip(m) {
                    *p = r + beta * (*p - omega * v);
                    *z = m * *p;
                }
            });
        apply(z, v);
        alpha = rho / parallel::dot(r_hat, v);
        // x += α z;  s = r − α v
        x.par_chunks_mut(BLOCK)
            .zip(s.par_chunks_mut(BLOCK))
            .zip(z.par_chunks(BLOCK))
            .zip(r.par_chunks(BLOCK))
            .zip(v.par_chunks(BLOCK))
            .for_each(|((((x, s), z), r), v)| {
                for ((((x, s), z), r), v) in x.iter_mut().zip(s.iter_mut()).zip(z).zip(r).zip(v) {
                    *x += alpha * z;
                    *s = r - alpha * v;
                }
            });
        let s_norm = parallel::norm_sq(s).sqrt();
        if s_norm <= target {
            return Ok(SolveStats { iterations: it, relative_residual: s_norm / b_norm });
        }
        // z = M⁻¹s; t = A z
        z.par_chunks_mut(BLOCK).zip(s.par_chunks(BLOCK)).zip(inv_diag.par_chunks(BLOCK)).for_each(
            |((z, s), m)| {
                for ((z, s), m) in z.iter_mut().zip(s).zip(m) {
                    *z = m * s;
                }
            },
        );
        apply(z, t);
        let tt = parallel::norm_sq(t);
        if tt == 0.0 {
            return Err(EvolveError::SolverDiverged { residual: s_norm / b_norm, iterations: it });
        }
        omega = parallel::dot(t, s) / tt;
        x.par_chunks_mut(BLOCK)
            .zip(r.par_chunks_mut(BLOCK))
            .zip(z.par_chunks(BLOCK))
            .zip(s.par_chunks(BLOCK))
            .zip(t.par_chunks(BLOCK))
            .for_each(|((((x, r), z), s), t)| {
                for ((((x, r), z), s), t) in x.iter_mut().zip(r.iter_mut()).zip(z).zip(s).zip(t) {
                    *x += omega * z;
                    *r = s - omega * t;
                }
            });
        res = parallel::norm_sq(r).sqrt();
        if res <= target {
            return Ok(SolveStats { iterations: it, relative_residual: res / b_norm });
        }
        if !res.is_finite() || omega.norm() == 0.0 {
            break;
        }
    }
    Err(EvolveError::SolverDiverged { residual: res / b_norm, iterations: settings.max_iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_a_small_nonsymmetric_system() {
        // tridiagonal, complex, diagonally dominant
        let n = 50;
        let apply = |u: &[Complex64], out: &mut [Complex64]| {
            for k in 0..n {
                let mut acc = Complex64::new(4.0, 1.0) * u[k];
                if k > 0 {
                    acc += Complex64::new(-1.0, 0.3) * u[k - 1];
                }
                if k + 1 < n {
                    acc += Complex64::new(-0.7, -0.2) * u[k + 1];
                }
                out[k] = acc;
            }
        };
        let truth: Vec<Complex64> = (0..n).map(|k| Complex64::new((k as f64).sin(), 0.1 * k as f64)).collect();
        let mut b = vec![Complex64::new(0.0, 0.0); n];
        apply(&truth, &mut b);
        let inv = vec![Complex64::new(4.0, 1.0).inv(); n];
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        let stats = bicgstab(apply, &inv, &b, &mut x, &SolverSettings { tolerance: 1e-13, max_iterations: 200 }).unwrap();
        assert!(stats.relative_residual <= 1e-13);
        for (a, b) in x.iter().zip(&truth) {
            assert!((a - b).norm() < 1e-11);
        }
    }

    #[test]
    fn reports_divergence_when_iterations_run_out() {
        let n = 40;
        let apply = |u: &[Complex64], out: &mut [Complex64]| {
            for k in 0..n {
                out[k] = u[k] * (1.0 + k as f64) + if k > 0 { u[k - 1] * 30.0 } else { Complex64::new(0.0, 0.0) };
            }
        };
        let b = vec![Complex64::new(1.0, 0.0); n];
        let inv = vec![Complex64::new(1.0, 0.0); n];
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        let err = bicgstab(apply, &inv, &b, &mut x, &SolverSettings { tolerance: 1e-14, max_iterations: 2 });
        assert!(matches!(err, Err(EvolveError::SolverDiverged { .. })));
    }
}
