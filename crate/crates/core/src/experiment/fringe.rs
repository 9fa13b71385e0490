use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ExperimentError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeFitOptions {
    /// Degree of the envelope polynomial `I₀(s)`.
    pub poly_degree: usize,
    /// Lower bound on the number of fringe periods searched across the window.
    pub min_periods: f64,
    /// Upper bound on the fringe wavenumber, as samples per period.
    pub min_samples_per_period: f64,
    pub max_iterations: usize,
}

impl Default for FringeFitOptions {
    fn default() -> Self {
        Self { poly_degree: 4, min_periods: 3.0, min_samples_per_period: 4.0, max_iterations: 200 }
    }
}

/// Result of fitting `I(s) = I₀(s)·(1 + V·cos(k·s + φ))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    /// `φ ∈ (−π, π]`, referred to `s = 0`.
    pub phase: f64,
    pub visibility: f64,
    /// `‖I − model‖₂ / ‖I‖₂`.
    pub residual: f64,
    pub wavenumber: f64,
    /// Standard error of the visibility from the fit covariance.
    pub visibility_error: f64,
    /// Envelope coefficients in the Legendre basis of the rescaled window.
    pub envelope: Vec<f64>,
    pub iterations: usize,
}

impl FringeFit {
    pub fn is_degenerate(&self) -> bool {
        !(self.visibility > 3.0 * self.visibility_error)
    }
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    let mut y = x.rem_euclid(TAU);
    if y > PI {
        y -= TAU;
    }
    y
}

fn legendre(u: f64, degree: usize, out: &mut [f64]) {
    out[0] = 1.0;
    if degree >= 1 {
        out[1] = u;
    }
    for n in 1..degree {
        let nf = n as f64;
        out[n + 1] = ((2.0 * nf + 1.0) * u * out[n] - nf * out[n - 1]) / (nf + 1.0);
    }
}

struct Problem<'a> {
    s: &'a [f64],
    y: &'a [f64],
    basis: DMatrix<f64>,
    degree: usize,
}

impl Problem<'_> {
    fn n_params(&self) -> usize {
        self.degree + 4
    }

    fn envelope(&self, theta: &DVector<f64>, i: usize) -> f64 {
        (0..=self.degree).map(|j| theta[j] * self.basis[(i, j)]).sum()
    }

    fn residuals(&self, theta: &DVector<f64>) -> DVector<f64> {
        let d = self.degree;
        let (c, sn, k) = (theta[d + 1], theta[d + 2], theta[d + 3]);
        DVector::from_iterator(
            self.s.len(),
            (0..self.s.len()).map(|i| {
                let (sin, cos) = (k * self.s[i]).sin_cos();
                self.envelope(theta, i) * (1.0 + c * cos + sn * sin) - self.y[i]
            }),
        )
    }

    fn jacobian(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        let d = self.degree;
        let (c, sn, k) = (theta[d + 1], theta[d + 2], theta[d + 3]);
        let mut jac = DMatrix::zeros(self.s.len(), self.n_params());
        for i in 0..self.s.len() {
            let s = self.s[i];
            let (sin, cos) = (k * s).sin_cos();
            let f = 1.0 + c * cos + sn * sin;
            let p = self.envelope(theta, i);
            for j in 0..=d {
                jac[(i, j)] = self.basis[(i, j)] * f;
            }
            jac[(i, d + 1)] = p * cos;
            jac[(i, d + 2)] = p * sin;
            jac[(i, d + 3)] = p * s * (sn * cos - c * sin);
        }
        jac
    }
}

fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    a.clone().svd(true, true).solve(b, 1e-13).ok()
}

/// Least-squares fringe fit on samples `(s, intensity)`.
///
/// The wavenumber is seeded from a periodogram of the envelope-normalized
/// profile over the band allowed by `options`, then all parameters are
/// refined together by Levenberg–Marquardt. When the visibility is not
/// distinguishable from zero the estimate is still returned, inside
/// [`ExperimentError::FitDegenerate`].
pub fn fringe_fit(s: &[f64], intensity: &[f64], options: &FringeFitOptions) -> Result<FringeFit> {
    let n = s.len();
    let d = options.poly_degree;
    if n != intensity.len() {
        return Err(ExperimentError::InvalidProfile(format!("{} positions but {} samples", n, intensity.len())));
    }
    if n < 2 * (d + 4) {
        return Err(ExperimentError::InvalidProfile(format!("{n} samples are too few for the fit")));
    }
    if s.iter().chain(intensity).any(|v| !v.is_finite()) {
        return Err(ExperimentError::InvalidProfile("non-finite sample".into()));
    }
    let (s_min, s_max) = s.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = s_max - s_min;
    if !(span > 0.0) {
        return Err(ExperimentError::InvalidProfile("degenerate arclength".into()));
    }
    let scale = intensity.iter().map(|v| v.abs()).sum::<f64>() / n as f64;
    if !(scale > 0.0) {
        return Err(ExperimentError::InvalidProfile("profile is identically zero".into()));
    }
    let y: Vec<f64> = intensity.iter().map(|v| v / scale).collect();

    let centre = 0.5 * (s_min + s_max);
    let half = 0.5 * span;
    let mut basis = DMatrix::zeros(n, d + 1);
    let mut row = vec![0.0; d + 1];
    for i in 0..n {
        legendre((s[i] - centre) / half, d, &mut row);
        for j in 0..=d {
            basis[(i, j)] = row[j];
        }
    }
    let y_vec = DVector::from_column_slice(&y);
    let p0 = least_squares(&basis, &y_vec)
        .ok_or_else(|| ExperimentError::InvalidProfile("envelope fit failed".into()))?;
    let env0 = &basis * &p0;

    let mean_ds = span / (n - 1) as f64;
    let k_lo = TAU * options.min_periods / span;
    let k_hi = TAU / (options.min_samples_per_period * mean_ds);
    if !(k_hi > k_lo) {
        return Err(ExperimentError::InvalidProfile("window too short for the requested fringe band".into()));
    }

    // periodogram of y/I₀ − 1
    let ratio: Vec<f64> = (0..n).map(|i| if env0[i].abs() > 0.0 { y[i] / env0[i] - 1.0 } else { 0.0 }).collect();
    let dk = TAU / (16.0 * span);
    let steps = ((k_hi - k_lo) / dk).ceil() as usize;
    let mut best = (k_lo, -1.0);
    for m in 0..=steps {
        let k = (k_lo + m as f64 * dk).min(k_hi);
        let (mut re, mut im) = (0.0, 0.0);
        for i in 0..n {
            let (sin, cos) = (k * s[i]).sin_cos();
            re += ratio[i] * cos;
            im += ratio[i] * sin;
        }
        let power = re * re + im * im;
        if power > best.1 {
            best = (k, power);
        }
    }
    let k0 = best.0;

    // linear seed for C, S at fixed k
    let mut design = DMatrix::zeros(n, 2);
    for i in 0..n {
        let (sin, cos) = (k0 * s[i]).sin_cos();
        design[(i, 0)] = env0[i] * cos;
        design[(i, 1)] = env0[i] * sin;
    }
    let cs = least_squares(&design, &(&y_vec - &env0)).unwrap_or_else(|| DVector::zeros(2));

    let problem = Problem { s, y: &y, basis, degree: d };
    let mut theta = DVector::zeros(problem.n_params());
    theta.rows_mut(0, d + 1).copy_from(&p0);
    theta[d + 1] = cs[0];
    theta[d + 2] = cs[1];
    theta[d + 3] = k0;

    let mut r = problem.residuals(&theta);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut iterations = 0;
    for it in 1..=options.max_iterations {
        iterations = it;
        let jac = problem.jacobian(&theta);
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for j in 0..a.nrows() {
                a[(j, j)] += lambda * jtj[(j, j)].max(1e-300);
            }
            let Some(step) = a.lu().solve(&(-&g)) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = &theta + &step;
            trial[d + 3] = trial[d + 3].clamp(k_lo, k_hi);
            let r_trial = problem.residuals(&trial);
            let c_trial = r_trial.norm_squared();
            if c_trial < cost {
                let rel = (cost - c_trial) / cost.max(1e-300);
                theta = trial;
                r = r_trial;
                cost = c_trial;
                lambda = (lambda / 10.0).max(1e-15);
                improved = true;
                if rel < 1e-15 {
                    lambda = -1.0;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved || lambda < 0.0 {
            break;
        }
    }

    let (c, sn, k) = (theta[d + 1], theta[d + 2], theta[d + 3]);
    let visibility_raw = c.hypot(sn);
    let dof = n.saturating_sub(problem.n_params()).max(1) as f64;
    let sigma2 = cost / dof;
    let jac = problem.jacobian(&theta);
    let cov = (jac.transpose() * &jac).try_inverse().map(|m| m * sigma2);
    let visibility_error = cov
        .map(|m| {
            let (vc, vs) = (m[(d + 1, d + 1)].max(0.0), m[(d + 2, d + 2)].max(0.0));
            if visibility_raw > 0.0 {
                ((c * c * vc + sn * sn * vs) / (visibility_raw * visibility_raw)).sqrt()
            } else {
                vc.max(vs).sqrt()
            }
        })
        .unwrap_or(f64::INFINITY);
    let fit = FringeFit {
        phase: wrap_phase((-sn).atan2(c)),
        visibility: visibility_raw.min(1.0),
        residual: cost.sqrt() / y_vec.norm(),
        wavenumber: k,
        visibility_error,
        envelope: theta.rows(0, d + 1).iter().map(|v| v * scale).collect(),
        iterations,
    };
    if fit.is_degenerate() {
        return Err(ExperimentError::FitDegenerate(Box::new(fit)));
    }
    Ok(fit)
}

/// Like [`fringe_fit`], but a degenerate fit is returned as a value.
pub fn fringe_fit_estimate(s: &[f64], intensity: &[f64], options: &FringeFitOptions) -> Result<FringeFit> {
    match fringe_fit(s, intensity, options) {
        Err(ExperimentError::FitDegenerate(fit)) => Ok(*fit),
        other => other,
    }
}
