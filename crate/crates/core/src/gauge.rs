//! Flux lines on the punctured plane, the reduced vector potential
//! `a = Σ α_k ê_k / r_k` in the azimuthal gauge, and its line integrals.
//!
//! Orientation convention: counter-clockwise circulation is positive, so a
//! CCW loop around a single line of strength `α` picks up the phase `2πα`.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default exclusion radius around each flux center (length units).
pub const DEFAULT_SINGULAR_RADIUS: f64 = 1e-6;

/// A point closer than this to a polyline segment is considered on the path.
pub const ON_PATH_TOLERANCE: f64 = 1e-9;

/// Relative tolerance (in units of 2π) for accepting an accumulated angle as an integer winding.
pub const WINDING_INTEGER_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaugeError {
    #[error("point ({x}, {y}) lies within the exclusion radius of flux line {index}")]
    SingularPoint { x: f64, y: f64, index: usize },
    #[error("quadrature error estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    StepTooCoarse { estimate: f64, tolerance: f64 },
    #[error("point ({x}, {y}) lies on the path (distance {distance:e})")]
    PointOnPath { x: f64, y: f64, distance: f64 },
    #[error("winding number requires a closed path")]
    OpenPath,
    #[error("accumulated angle {turns} turns is not an integer")]
    NonIntegerWinding { turns: f64 },
    #[error("invalid flux configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid path: {0}")]
    InvalidPath(String),
}

pub type Result<T> = std::result::Result<T, GaugeError>;

/// A point or displacement in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(v: [f64; 2]) -> Self {
        Vec2::new(v[0], v[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl fmt::Display for Vec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// A trapped flux line perpendicular to the plane; `alpha` is the reduced
/// flux `qΦ/2π` (charge and flux never appear separately).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxLine {
    pub center: Vec2,
    pub alpha: f64,
}

impl FluxLine {
    pub fn new(center: Vec2, alpha: f64) -> Self {
        Self { center, alpha }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxConfig {
    lines: Vec<FluxLine>,
    singular_radius: f64,
}

impl FluxConfig {
    pub fn new(lines: Vec<FluxLine>, singular_radius: f64) -> Result<Self> {
        if !(singular_radius > 0.0 && singular_radius.is_finite()) {
            return Err(GaugeError::InvalidConfig(format!(
                "singular_radius must be positive, got {singular_radius}"
            )));
        }
        for (i, line) in lines.iter().enumerate() {
            if !line.center.is_finite() || !line.alpha.is_finite() {
                return Err(GaugeError::InvalidConfig(format!(
                    "flux line {i} has a non-finite center or strength"
                )));
            }
        }
        for i in 0..lines.len() {
            for j in (i + 1)..lines.len() {
                let sep = (lines[i].center - lines[j].center).norm();
                if sep <= 2.0 * singular_radius {
                    return Err(GaugeError::InvalidConfig(format!(
                        "flux lines {i} and {j} are {sep} apart, closer than twice the singular radius"
                    )));
                }
            }
        }
        Ok(Self { lines, singular_radius })
    }

    pub fn single(center: Vec2, alpha: f64) -> Self {
        Self::new(vec![FluxLine::new(center, alpha)], DEFAULT_SINGULAR_RADIUS)
            .expect("a single finite flux line is always valid")
    }

    pub fn empty() -> Self {
        Self { lines: Vec::new(), singular_radius: DEFAULT_SINGULAR_RADIUS }
    }

    pub fn lines(&self) -> &[FluxLine] {
        &self.lines
    }

    pub fn singular_radius(&self) -> f64 {
        self.singular_radius
    }

    pub fn with_singular_radius(mut self, radius: f64) -> Result<Self> {
        let lines = std::mem::take(&mut self.lines);
        Self::new(lines, radius)
    }

    pub fn total_alpha(&self) -> f64 {
        self.lines.iter().map(|l| l.alpha).sum()
    }

    fn check_point(&self, p: Vec2) -> Result<()> {
        for (index, line) in self.lines.iter().enumerate() {
            if (p - line.center).norm() <= self.singular_radius {
                return Err(GaugeError::SingularPoint { x: p.x, y: p.y, index });
            }
        }
        Ok(())
    }

    /// Errors if the straight segment `from → to` enters any exclusion disk.
    pub fn check_segment(&self, from: Vec2, to: Vec2) -> Result<()> {
        for (index, line) in self.lines.iter().enumerate() {
            if point_segment_distance(line.center, from, to) <= self.singular_radius {
                let c = closest_point_on_segment(line.center, from, to);
                return Err(GaugeError::SingularPoint { x: c.x, y: c.y, index });
            }
        }
        Ok(())
    }
}

/// `a(p) = Σ α_k (−(y−y_k), x−x_k) / r_k²`.
pub fn reduced_vector_potential(cfg: &FluxConfig, point: Vec2) -> Result<Vec2> {
    cfg.check_point(point)?;
    let mut acc = Vec2::ZERO;
    for line in &cfg.lines {
        let d = point - line.center;
        let r2 = d.norm_sq();
        acc = acc + Vec2::new(-d.y, d.x) * (line.alpha / r2);
    }
    Ok(acc)
}

/// Signed angle swept by the ray from `center` as a point moves in a straight
/// line from `from` to `to`. Lies in (−π, π]; the segment must not pass
/// through `center`.
pub fn subtended_angle(center: Vec2, from: Vec2, to: Vec2) -> f64 {
    let u = from - center;
    let v = to - center;
    u.cross(v).atan2(u.dot(v))
}

/// `∫ a·dl` along one straight segment, computed exactly as a sum of
/// subtended angles.
pub fn segment_phase(cfg: &FluxConfig, from: Vec2, to: Vec2) -> Result<f64> {
    cfg.check_segment(from, to)?;
    Ok(segment_phase_unchecked(cfg, from, to))
}

/// Same as [`segment_phase`] without the exclusion check. Callers guarantee
/// the segment stays clear of every center.
pub fn segment_phase_unchecked(cfg: &FluxConfig, from: Vec2, to: Vec2) -> f64 {
    cfg.lines
        .iter()
        .map(|l| l.alpha * subtended_angle(l.center, from, to))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    vertices: Vec<Vec2>,
    closed: bool,
}

impl Polyline {
    pub fn new(vertices: Vec<Vec2>, closed: bool) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(GaugeError::InvalidPath(format!(
                "need at least 2 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(GaugeError::InvalidPath("non-finite vertex".into()));
        }
        Ok(Self { vertices, closed })
    }

    pub fn open(vertices: Vec<Vec2>) -> Result<Self> {
        Self::new(vertices, false)
    }

    pub fn closed(vertices: Vec<Vec2>) -> Result<Self> {
        Self::new(vertices, true)
    }

    /// Axis-aligned rectangle traversed `corner → corner+(w,0) → corner+(w,h) → corner+(0,h)`.
    pub fn rectangle(corner: Vec2, w: f64, h: f64) -> Result<Self> {
        Self::closed(vec![
            corner,
            corner + Vec2::new(w, 0.0),
            corner + Vec2::new(w, h),
            corner + Vec2::new(0.0, h),
        ])
    }

    /// Regular polygon approximating a circle, traversed `laps` times
    /// (negative laps run clockwise).
    pub fn circle(center: Vec2, radius: f64, sides: usize, laps: i32) -> Result<Self> {
        let sides = sides.max(3);
        let n = sides * laps.unsigned_abs() as usize;
        let sign = if laps < 0 { -1.0 } else { 1.0 };
        let vertices = (0..n.max(1))
            .map(|k| {
                let t = sign * TAU * k as f64 / sides as f64;
                center + Vec2::new(t.cos(), t.sin()) * radius
            })
            .collect();
        Self::closed(vertices)
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn reversed(&self) -> Self {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        Self { vertices, closed: self.closed }
    }

    /// Appends `other`, dropping its first vertex when it coincides with our last.
    pub fn concat(&self, other: &Polyline, closed: bool) -> Result<Self> {
        let mut vertices = self.vertices.clone();
        let skip = usize::from(
            vertices.last().copied() == other.vertices.first().copied(),
        );
        vertices.extend(other.vertices.iter().skip(skip).copied());
        if closed && vertices.len() > 2 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        Self::new(vertices, closed)
    }

    /// Straight segments in traversal order, including the closing one.
    pub fn segments(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.vertices.len();
        let count = if self.closed { n } else { n - 1 };
        (0..count).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| (b - a).norm()).sum()
    }
}

/// Holonomy phase `∫_path a·dl` in radians, integrated exactly segment by segment.
///
/// `quadrature_step` is only validated here; use [`quadrature_phase`] for the
/// numerical cross-check at that step.
pub fn line_integral_phase(cfg: &FluxConfig, path: &Polyline, quadrature_step: f64) -> Result<f64> {
    if !(quadrature_step > 0.0) {
        return Err(GaugeError::InvalidPath(format!(
            "quadrature step must be positive, got {quadrature_step}"
        )));
    }
    let mut total = 0.0;
    for (a, b) in path.segments() {
        total += segment_phase(cfg, a, b)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureEstimate {
    pub value: f64,
    pub error_estimate: f64,
}

// 4-point Gauss-Legendre on [-1, 1].
const GL4_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GL4_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

fn composite_gauss(cfg: &FluxConfig, path: &Polyline, step: f64) -> Result<f64> {
    let mut total = 0.0;
    for (a, b) in path.segments() {
        cfg.check_segment(a, b)?;
        let d = b - a;
        let len = d.norm();
        if len == 0.0 {
            continue;
        }
        let pieces = (len / step).ceil().max(1.0) as usize;
        for k in 0..pieces {
            let t0 = k as f64 / pieces as f64;
            let t1 = (k + 1) as f64 / pieces as f64;
            let mid = 0.5 * (t0 + t1);
            let half = 0.5 * (t1 - t0);
            for (node, w) in GL4_NODES.iter().zip(GL4_WEIGHTS) {
                let p = a + d * (mid + half * node);
                let field = reduced_vector_potential(cfg, p)?;
                total += w * half * field.dot(d);
            }
        }
    }
    Ok(total)
}

/// Composite 4-point Gauss–Legendre estimate of `∫ a·dl` with sub-intervals no
/// longer than `step`; the error estimate is the difference to the estimate
/// at `step / 2`.
pub fn quadrature_phase(
    cfg: &FluxConfig,
    path: &Polyline,
    step: f64,
    tolerance: f64,
) -> Result<QuadratureEstimate> {
    if !(step > 0.0) {
        return Err(GaugeError::InvalidPath(format!("quadrature step must be positive, got {step}")));
    }
    let coarse = composite_gauss(cfg, path, step)?;
    let fine = composite_gauss(cfg, path, 0.5 * step)?;
    let error_estimate = (fine - coarse).abs();
    if error_estimate > tolerance {
        return Err(GaugeError::StepTooCoarse { estimate: error_estimate, tolerance });
    }
    Ok(QuadratureEstimate { value: fine, error_estimate })
}

pub fn closest_point_on_segment(p: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let d = b - a;
    let len2 = d.norm_sq();
    if len2 == 0.0 {
        return a;
    }
    let t = ((p - a).dot(d) / len2).clamp(0.0, 1.0);
    a + d * t
}

pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    (p - closest_point_on_segment(p, a, b)).norm()
}

/// Signed winding count of a closed path around `point` from accumulated
/// subtended angles.
pub fn winding_number(path: &Polyline, point: Vec2) -> Result<i64> {
    if !path.is_closed() {
        return Err(GaugeError::OpenPath);
    }
    let mut angle = 0.0;
    for (a, b) in path.segments() {
        let distance = point_segment_distance(point, a, b);
        if distance < ON_PATH_TOLERANCE {
            return Err(GaugeError::PointOnPath { x: point.x, y: point.y, distance });
        }
        angle += subtended_angle(point, a, b);
    }
    let turns = angle / TAU;
    let rounded = turns.round();
    if (turns - rounded).abs() > WINDING_INTEGER_TOLERANCE {
        return Err(GaugeError::NonIntegerWinding { turns });
    }
    Ok(rounded as i64)
}

/// `Σ_k 2π α_k · winding(path, center_k)`: the holonomy predicted from winding numbers alone.
pub fn winding_phase(cfg: &FluxConfig, path: &Polyline) -> Result<f64> {
    cfg.lines
        .iter()
        .map(|l| winding_number(path, l.center).map(|w| 2.0 * PI * l.alpha * w as f64))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn potential_of_unit_flux_at_origin() {
        let cfg = FluxConfig::single(Vec2::ZERO, 1.0);
        let a = reduced_vector_potential(&cfg, Vec2::new(1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(a.x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a.y, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_flux_gives_zero_potential() {
        let cfg = FluxConfig::single(Vec2::ZERO, 0.0);
        for p in [Vec2::new(0.3, -2.0), Vec2::new(-5.0, 1e-3), Vec2::new(7.0, 7.0)] {
            assert_eq!(reduced_vector_potential(&cfg, p).unwrap(), Vec2::ZERO);
        }
    }

    #[test]
    fn two_fluxes_superpose() {
        let left = FluxLine::new(Vec2::new(-1.0, 0.0), 0.5);
        let right = FluxLine::new(Vec2::new(1.0, 0.0), 0.5);
        let both = FluxConfig::new(vec![left, right], DEFAULT_SINGULAR_RADIUS).unwrap();
        let p = Vec2::new(0.0, 1.0);
        let sum = reduced_vector_potential(&FluxConfig::single(left.center, 0.5), p).unwrap()
            + reduced_vector_potential(&FluxConfig::single(right.center, 0.5), p).unwrap();
        let a = reduced_vector_potential(&both, p).unwrap();
        assert_abs_diff_eq!(a.x, sum.x, epsilon = 1e-15);
        assert_abs_diff_eq!(a.y, sum.y, epsilon = 1e-15);
        // by hand: each term is 0.5·(−1, ±1)/2
        assert_abs_diff_eq!(a.x, -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(a.y, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn potential_inside_exclusion_disk_is_an_error() {
        let cfg = FluxConfig::single(Vec2::new(2.0, 2.0), 0.3);
        let err = reduced_vector_potential(&cfg, Vec2::new(2.0, 2.0 + 1e-7)).unwrap_err();
        assert!(matches!(err, GaugeError::SingularPoint { index: 0, .. }));
    }

    #[test]
    fn potential_is_odd_under_reflection_through_center() {
        let c = Vec2::new(0.4, -1.3);
        let cfg = FluxConfig::single(c, 0.77);
        for d in [Vec2::new(1.0, 0.5), Vec2::new(-0.2, 3.0), Vec2::new(1e-3, -1e-3)] {
            let a = reduced_vector_potential(&cfg, c + d).unwrap();
            let b = reduced_vector_potential(&cfg, c - d).unwrap();
            assert_abs_diff_eq!(a.x, -b.x, epsilon = 1e-12);
            assert_abs_diff_eq!(a.y, -b.y, epsilon = 1e-12);
        }
    }

    #[test]
    fn config_rejects_bad_input() {
        assert!(FluxConfig::new(vec![], 0.0).is_err());
        let l = FluxLine::new(Vec2::ZERO, 1.0);
        assert!(FluxConfig::new(vec![l, l], 1e-6).is_err());
        assert!(FluxConfig::new(vec![FluxLine::new(Vec2::ZERO, f64::NAN)], 1e-6).is_err());
    }

    #[test]
    fn closed_circle_around_flux() {
        let cfg = FluxConfig::single(Vec2::ZERO, 0.3);
        let circle = Polyline::circle(Vec2::ZERO, 1.0, 64, 1).unwrap();
        let phase = line_integral_phase(&cfg, &circle, 0.01).unwrap();
        assert_abs_diff_eq!(phase, TAU * 0.3, epsilon = 1e-12);
        assert_eq!(winding_number(&circle, Vec2::ZERO).unwrap(), 1);
    }

    #[test]
    fn radial_segment_has_no_phase() {
        let cfg = FluxConfig::single(Vec2::ZERO, 0.9);
        let seg = Polyline::open(vec![Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0)]).unwrap();
        assert_eq!(line_integral_phase(&cfg, &seg, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn square_not_containing_flux() {
        let cfg = FluxConfig::single(Vec2::ZERO, 0.45);
        let sq = Polyline::rectangle(Vec2::new(2.0, 1.0), 1.5, 1.5).unwrap();
        assert_abs_diff_eq!(line_integral_phase(&cfg, &sq, 0.01).unwrap(), 0.0, epsilon = 1e-14);
        assert_eq!(winding_number(&sq, Vec2::ZERO).unwrap(), 0);
    }

    #[test]
    fn winding_examples() {
        let sq = Polyline::rectangle(Vec2::new(-1.0, -1.0), 2.0, 2.0).unwrap();
        assert_eq!(winding_number(&sq, Vec2::ZERO).unwrap(), 1);
        assert_eq!(winding_number(&sq.reversed(), Vec2::ZERO).unwrap(), -1);
        assert_eq!(winding_number(&sq, Vec2::new(5.0, 5.0)).unwrap(), 0);
        let twice = Polyline::circle(Vec2::ZERO, 1.0, 40, 2).unwrap();
        assert_eq!(winding_number(&twice, Vec2::new(0.1, -0.2)).unwrap(), 2);
    }

    #[test]
    fn winding_errors() {
        let sq = Polyline::rectangle(Vec2::new(-1.0, -1.0), 2.0, 2.0).unwrap();
        assert!(matches!(
            winding_number(&sq, Vec2::new(1.0, 0.3)),
            Err(GaugeError::PointOnPath { .. })
        ));
        let open = Polyline::open(vec![Vec2::ZERO, Vec2::new(1.0, 1.0)]).unwrap();
        assert_eq!(winding_number(&open, Vec2::new(3.0, 0.0)), Err(GaugeError::OpenPath));
    }

    #[test]
    fn quadrature_agrees_with_exact_segments() {
        let cfg = FluxConfig::single(Vec2::new(0.1, 0.2), 0.6);
        let path = Polyline::rectangle(Vec2::new(-2.0, -1.5), 4.0, 3.0).unwrap();
        let exact = line_integral_phase(&cfg, &path, 0.05).unwrap();
        let quad = quadrature_phase(&cfg, &path, 0.05, 1e-9).unwrap();
        assert_abs_diff_eq!(exact, TAU * 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(quad.value, exact, epsilon = 1e-9);
    }

    #[test]
    fn quadrature_flags_coarse_steps_near_the_puncture() {
        let cfg = FluxConfig::single(Vec2::new(0.0, 1e-3), 1.0);
        let seg = Polyline::open(vec![Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0)]).unwrap();
        let err = quadrature_phase(&cfg, &seg, 0.5, 1e-8).unwrap_err();
        assert!(matches!(err, GaugeError::StepTooCoarse { .. }));
    }

    #[test]
    fn polyline_needs_two_vertices() {
        assert!(Polyline::open(vec![Vec2::ZERO]).is_err());
    }
}
