use serde::{Deserialize, Serialize};

use super::{ExperimentError, Result};
use crate::evolve::{
    covariant_elliptic_gaussian, Absorber, ComplexField, DetectorLine, EvolutionParams, EvolveError, Grid2D,
    SolverSettings, FLUX_OFFSET_X, FLUX_OFFSET_Y,
};
use crate::gauge::{winding_number, FluxConfig, FluxLine, Polyline, Vec2, DEFAULT_SINGULAR_RADIUS};

pub const CONTROL_TAG: &str = "standard AB control";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "standard_qm")]
    StandardQM,
    #[serde(rename = "superseparability")]
    Superseparability,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::StandardQM => "standard_qm",
            Mode::Superseparability => "superseparability",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "standard" | "standard_qm" | "standardqm" => Ok(Mode::StandardQM),
            "superseparability" => Ok(Mode::Superseparability),
            other => Err(format!("unknown mode {other:?}; expected standard_qm or superseparability")),
        }
    }
}

/// Which slits are open for a run. Closed slits are filled with wall potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Openings {
    Both,
    OnlyA,
    OnlyB,
    Neither,
}

/// Inclusive block of grid nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeRect {
    pub i0: usize,
    pub i1: usize,
    pub j0: usize,
    pub j1: usize,
}

impl NodeRect {
    pub fn contains(&self, i: usize, j: usize) -> bool {
        (self.i0..=self.i1).contains(&i) && (self.j0..=self.j1).contains(&j)
    }

    /// The area owned by these nodes, half a cell beyond the outer nodes.
    pub fn region(&self, grid: &Grid2D) -> Rect {
        Rect {
            min: Vec2::new(grid.x(self.i0) - 0.5 * grid.dx, grid.y(self.j0) - 0.5 * grid.dy),
            max: Vec2::new(grid.x(self.i1) + 0.5 * grid.dx, grid.y(self.j1) + 0.5 * grid.dy),
        }
    }
}

/// Axis-aligned rectangle in physical coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub fn contains_strictly(&self, p: Vec2) -> bool {
        p.x > self.min.x && p.x < self.max.x && p.y > self.min.y && p.y < self.max.y
    }

    pub fn interiors_overlap(&self, other: &Rect) -> bool {
        self.min.x < other.max.x && other.min.x < self.max.x && self.min.y < other.max.y && other.min.y < self.max.y
    }

    pub fn polygon(&self) -> Polyline {
        Polyline::rectangle(self.min, self.max.x - self.min.x, self.max.y - self.min.y)
            .expect("finite rectangle")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallBlock {
    pub label: String,
    pub nodes: NodeRect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chamber {
    pub name: char,
    /// The chamber polygon: its slit channel plus the adjoining half of the splitter.
    pub region: Rect,
    pub slit: NodeRect,
    /// Position and strength relative to this chamber's beam.
    pub flux: FluxLine,
    /// Sign taking the relative strength to the lab-frame one.
    pub orientation: i8,
}

impl Chamber {
    pub fn lab_flux(&self, alpha: f64) -> FluxLine {
        FluxLine::new(self.flux.center, f64::from(self.orientation) * alpha)
    }
}

/// Defaults give a 256 × 432 desk-scale layout with over four fringes across
/// the fit window. Lengths are physical (`spacing` per cell); column and row
/// counts are in nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoninterferometerParams {
    pub nx: usize,
    pub ny: usize,
    pub spacing: f64,
    pub mass: f64,
    /// Beam wavenumber along +x.
    pub momentum: f64,
    pub source_x: f64,
    pub source_sigma_x: f64,
    pub source_sigma_y: f64,
    pub barrier_column: usize,
    pub barrier_thickness: usize,
    pub slit_width: usize,
    /// Centre-to-centre slit distance, in cells.
    pub slit_separation: usize,
    pub flux_a: Vec2,
    pub flux_b: Vec2,
    pub alpha_a: f64,
    pub alpha_b: f64,
    pub detector_column: usize,
    /// Half-width of the fringe-fit window around the axis, in cells.
    pub fit_half_width: f64,
    pub absorber_width: usize,
    /// `None` tunes the strength at `absorber_tuning_momentum`.
    pub absorber_strength: Option<f64>,
    /// Normal momentum the layer is tuned for. Diffracted waves meet the side
    /// layers at shallow angles, so this sits well below the beam momentum.
    pub absorber_tuning_momentum: f64,
    /// Wall height in units of the kinetic scale `1/(m h²)`.
    pub wall_factor: f64,
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
    pub solver_tolerance: f64,
    pub poly_degree: usize,
    pub mode: Mode,
}

impl Default for NoninterferometerParams {
    fn default() -> Self {
        Self {
            nx: 432,
            ny: 256,
            spacing: 1.0,
            mass: 1.0,
            momentum: 1.5,
            source_x: 72.0,
            source_sigma_x: 9.0,
            source_sigma_y: 18.0,
            barrier_column: 112,
            barrier_thickness: 12,
            slit_width: 6,
            slit_separation: 42,
            flux_a: Vec2::new(117.0 + FLUX_OFFSET_X, 136.0 + FLUX_OFFSET_Y),
            flux_b: Vec2::new(117.0 + FLUX_OFFSET_X, 118.0 + FLUX_OFFSET_Y),
            alpha_a: 0.0,
            alpha_b: 0.0,
            detector_column: 396,
            fit_half_width: 90.0,
            absorber_width: 32,
            absorber_strength: None,
            absorber_tuning_momentum: 0.5,
            wall_factor: 1e4,
            dt: None,
            t_max: None,
            solver_tolerance: 1e-10,
            poly_degree: 4,
            mode: Mode::StandardQM,
        }
    }
}

impl NoninterferometerParams {
    /// A 160 × 240 layout with the same topology, for quick checks.
    pub fn small() -> Self {
        Self {
            nx: 240,
            ny: 160,
            source_x: 50.0,
            source_sigma_x: 5.0,
            source_sigma_y: 10.0,
            barrier_column: 72,
            barrier_thickness: 8,
            slit_width: 4,
            slit_separation: 32,
            flux_a: Vec2::new(75.0 + FLUX_OFFSET_X, 84.0 + FLUX_OFFSET_Y),
            flux_b: Vec2::new(75.0 + FLUX_OFFSET_X, 74.0 + FLUX_OFFSET_Y),
            detector_column: 210,
            fit_half_width: 44.0,
            absorber_width: 24,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub params: NoninterferometerParams,
    pub grid: Grid2D,
    pub walls: Vec<WallBlock>,
    pub chamber_a: Chamber,
    pub chamber_b: Chamber,
    pub source_center: Vec2,
    pub source_widths: (f64, f64),
    pub detector: DetectorLine,
    /// Inclusive range of detector samples used for the fringe fit.
    pub fit_window: (usize, usize),
    /// Arclength of the detector axis point; fitted phases refer to it.
    pub fit_origin: f64,
    /// Evolution for both slits open at the template fluxes.
    pub evolution: EvolutionParams,
    pub t_max: f64,
    pub mode: Mode,
    pub tags: Vec<String>,
}

fn geometry(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::GeometryOverlap(msg.into())
}

fn check_offset_rule(grid: &Grid2D, centre: Vec2, index: usize) -> Result<()> {
    let (ci, cj) = grid.to_cell(centre);
    let tol = DEFAULT_SINGULAR_RADIUS / grid.dx.min(grid.dy);
    let near = |c: f64| (c - c.round()).abs() <= tol;
    if near(ci) || near(cj) {
        let i = ci.floor().max(0.0) as usize;
        let j = cj.floor().max(0.0) as usize;
        return Err(EvolveError::FluxOnLink { index, i, j }.into());
    }
    Ok(())
}

/// Lays out the source, the two-slit barrier whose slit channels form chambers
/// A (upper) and B (lower), the splitter wall holding both flux lines, and a
/// full-height detector column.
pub fn build_noninterferometer(params: &NoninterferometerParams) -> Result<ScenarioConfig> {
    let p = params;
    let invalid = |m: String| Err(ExperimentError::InvalidParams(m));
    if !(p.spacing > 0.0 && p.spacing.is_finite()) {
        return invalid(format!("spacing must be positive, got {}", p.spacing));
    }
    if !(p.mass > 0.0 && p.mass.is_finite()) {
        return invalid(format!("mass must be positive, got {}", p.mass));
    }
    if !(p.momentum > 0.0 && p.momentum * p.spacing < std::f64::consts::PI) {
        return invalid(format!("momentum {} must lie in (0, π/h)", p.momentum));
    }
    if !(p.source_sigma_x > 0.0 && p.source_sigma_y > 0.0 && p.source_x.is_finite()) {
        return invalid("source widths must be positive".into());
    }
    if !(p.alpha_a.is_finite() && p.alpha_b.is_finite()) {
        return invalid("fluxes must be finite".into());
    }
    if !(p.wall_factor > 0.0 && p.wall_factor.is_finite()) {
        return invalid(format!("wall factor must be positive, got {}", p.wall_factor));
    }
    if p.slit_width == 0 || p.barrier_thickness == 0 {
        return invalid("slit width and barrier thickness must be at least one cell".into());
    }
    if p.slit_separation < p.slit_width + 2 {
        return Err(geometry(format!(
            "slits of width {} at separation {} leave no splitter between them",
            p.slit_width, p.slit_separation
        )));
    }
    if !(p.absorber_tuning_momentum > 0.0 && p.absorber_tuning_momentum * p.spacing < std::f64::consts::PI) {
        return invalid(format!("absorber tuning momentum {} must lie in (0, π/h)", p.absorber_tuning_momentum));
    }
    if !(p.solver_tolerance > 0.0) {
        return invalid("solver tolerance must be positive".into());
    }
    let h = p.spacing;
    let grid = Grid2D::new(p.nx, p.ny, h, h, Vec2::ZERO)?;
    let (nx, ny, aw) = (p.nx, p.ny, p.absorber_width);
    let mid = (ny - 1) as f64 / 2.0;

    // slits, mirror images about the axis
    let a_hi = (mid + 0.5 * p.slit_separation as f64 + 0.5 * (p.slit_width - 1) as f64).round() as isize;
    let a_lo = a_hi - (p.slit_width as isize - 1);
    let (b_lo, b_hi) = (ny as isize - 1 - a_hi, ny as isize - 1 - a_lo);
    if b_lo < aw as isize || a_hi > (ny - 1 - aw) as isize {
        return Err(geometry("a slit reaches into the absorbing layer"));
    }
    let (a_lo, a_hi, b_lo, b_hi) = (a_lo as usize, a_hi as usize, b_lo as usize, b_hi as usize);
    let b0 = p.barrier_column;
    let b1 = b0 + p.barrier_thickness - 1;
    if b0 <= aw || b1 >= p.detector_column {
        return Err(geometry(format!(
            "barrier columns {b0}..={b1} must lie between the absorber and the detector"
        )));
    }
    if p.detector_column + 1 >= nx.saturating_sub(aw) {
        return Err(geometry(format!("detector column {} reaches into the absorbing layer", p.detector_column)));
    }

    let slit_a = NodeRect { i0: b0, i1: b1, j0: a_lo, j1: a_hi };
    let slit_b = NodeRect { i0: b0, i1: b1, j0: b_lo, j1: b_hi };
    let walls = vec![
        WallBlock { label: "upper collimator".into(), nodes: NodeRect { i0: b0, i1: b1, j0: a_hi + 1, j1: ny - 1 } },
        WallBlock { label: "splitter".into(), nodes: NodeRect { i0: b0, i1: b1, j0: b_hi + 1, j1: a_lo - 1 } },
        WallBlock { label: "lower collimator".into(), nodes: NodeRect { i0: b0, i1: b1, j0: 0, j1: b_lo - 1 } },
    ];

    let x0 = grid.x(b0) - 0.5 * h;
    let x1 = grid.x(b1) + 0.5 * h;
    let y_mid = mid * h;
    let reach = p.slit_separation as f64 * h;
    let region_a = Rect { min: Vec2::new(x0, y_mid), max: Vec2::new(x1, (y_mid + reach).min(grid.y_max())) };
    let region_b = Rect { min: Vec2::new(x0, (y_mid - reach).max(0.0)), max: Vec2::new(x1, y_mid) };
    if region_a.interiors_overlap(&region_b) {
        return Err(geometry("chambers A and B overlap"));
    }
    let chamber_a = Chamber { name: 'A', region: region_a, slit: slit_a, flux: FluxLine::new(p.flux_a, p.alpha_a), orientation: 1 };
    let chamber_b = Chamber { name: 'B', region: region_b, slit: slit_b, flux: FluxLine::new(p.flux_b, p.alpha_b), orientation: -1 };
    for (own, other) in [(&chamber_a, &chamber_b), (&chamber_b, &chamber_a)] {
        let c = own.flux.center;
        if !own.region.contains_strictly(c) || other.region.contains_strictly(c) {
            return Err(ExperimentError::FluxOutsideChamber { chamber: own.name, position: c });
        }
    }
    check_offset_rule(&grid, p.flux_a, 0)?;
    check_offset_rule(&grid, p.flux_b, 1)?;

    let source_center = Vec2::new(p.source_x, y_mid);
    if p.source_x + 4.0 * p.source_sigma_x >= x0 {
        return Err(geometry("source packet reaches the barrier"));
    }
    let edge = aw as f64 * h;
    if p.source_x - 4.0 * p.source_sigma_x < edge
        || y_mid - 4.0 * p.source_sigma_y < edge
        || y_mid + 4.0 * p.source_sigma_y > grid.y_max() - edge
    {
        return Err(geometry("source packet reaches the absorbing layer"));
    }
    for region in [&region_a, &region_b] {
        if region.contains_strictly(source_center) {
            return Err(geometry("source lies inside a chamber"));
        }
    }
    let detector_x = grid.x(p.detector_column);
    if detector_x <= x1 {
        return Err(geometry("detector lies inside the barrier"));
    }
    let detector = DetectorLine::vertical(p.detector_column, 0..=ny - 1);

    let lo = (mid - p.fit_half_width).ceil().max(0.0) as usize;
    let hi = (mid + p.fit_half_width).floor() as usize;
    if !(p.fit_half_width > 0.0) || lo < aw || hi > ny - 1 - aw || hi < lo + 16 {
        return Err(geometry(format!("fit window rows {lo}..={hi} must avoid the absorbing layer")));
    }

    let strength = match p.absorber_strength {
        Some(s) => s,
        None => Absorber::tuned(aw, p.absorber_tuning_momentum, p.mass, h).strength,
    };
    let dt = p.dt.unwrap_or_else(|| EvolutionParams::max_dt(p.mass, &grid));
    let group_velocity = (p.momentum * h).sin() / (p.mass * h);
    let t_max = p
        .t_max
        .unwrap_or((detector_x - p.source_x + 6.0 * p.source_sigma_x + 40.0 * h) / group_velocity);
    if !(t_max > 0.0) {
        return invalid(format!("t_max must be positive, got {t_max}"));
    }

    let mut scenario = ScenarioConfig {
        params: p.clone(),
        grid,
        walls,
        chamber_a,
        chamber_b,
        source_center,
        source_widths: (p.source_sigma_x, p.source_sigma_y),
        detector,
        fit_window: (lo - detector.start, hi - detector.start),
        fit_origin: (mid - detector.start as f64) * h,
        evolution: EvolutionParams::free(p.mass, &grid)
            .with_dt(dt)
            .with_absorber(Absorber::new(aw, strength))
            .with_solver(SolverSettings { tolerance: p.solver_tolerance, ..SolverSettings::default() }),
        t_max,
        mode: p.mode,
        tags: Vec::new(),
    };
    scenario.evolution = scenario.evolution_for(Openings::Both, p.alpha_a, p.alpha_b)?;
    scenario.evolution.validate(&grid)?;
    scenario.tags = scenario.tags_for(p.alpha_a, p.alpha_b);
    Ok(scenario)
}

impl ScenarioConfig {
    pub fn alpha_a(&self) -> f64 {
        self.chamber_a.flux.alpha
    }

    pub fn alpha_b(&self) -> f64 {
        self.chamber_b.flux.alpha
    }

    pub fn delta_alpha(&self) -> f64 {
        self.alpha_b() - self.alpha_a()
    }

    fn tags_for(&self, alpha_a: f64, alpha_b: f64) -> Vec<String> {
        if alpha_a == alpha_b && alpha_a != 0.0 {
            vec![CONTROL_TAG.to_string()]
        } else {
            Vec::new()
        }
    }

    pub fn is_control(&self) -> bool {
        self.tags.iter().any(|t| t == CONTROL_TAG)
    }

    /// The same layout with new chamber fluxes.
    pub fn with_alphas(&self, alpha_a: f64, alpha_b: f64) -> Result<Self> {
        let mut params = self.params.clone();
        params.alpha_a = alpha_a;
        params.alpha_b = alpha_b;
        let mut out = self.clone();
        out.params = params;
        out.chamber_a.flux.alpha = alpha_a;
        out.chamber_b.flux.alpha = alpha_b;
        out.evolution = self.evolution_for(Openings::Both, alpha_a, alpha_b)?;
        out.tags = out.tags_for(alpha_a, alpha_b);
        Ok(out)
    }

    pub fn lab_flux_config(&self, alpha_a: f64, alpha_b: f64) -> Result<FluxConfig> {
        Ok(FluxConfig::new(
            vec![self.chamber_a.lab_flux(alpha_a), self.chamber_b.lab_flux(alpha_b)],
            DEFAULT_SINGULAR_RADIUS,
        )?)
    }

    pub fn wall_height(&self) -> f64 {
        self.params.wall_factor / (self.params.mass * self.grid.dx * self.grid.dy)
    }

    pub fn potential(&self, openings: Openings) -> Vec<f64> {
        let g = &self.grid;
        let v = self.wall_height();
        let mut blocks: Vec<NodeRect> = self.walls.iter().map(|w| w.nodes).collect();
        if matches!(openings, Openings::OnlyB | Openings::Neither) {
            blocks.push(self.chamber_a.slit);
        }
        if matches!(openings, Openings::OnlyA | Openings::Neither) {
            blocks.push(self.chamber_b.slit);
        }
        let mut pot = vec![0.0; g.len()];
        for b in blocks {
            for j in b.j0..=b.j1 {
                for i in b.i0..=b.i1 {
                    pot[g.index(i, j)] = v;
                }
            }
        }
        pot
    }

    pub fn evolution_for(&self, openings: Openings, alpha_a: f64, alpha_b: f64) -> Result<EvolutionParams> {
        Ok(self
            .evolution
            .clone()
            .with_flux(self.lab_flux_config(alpha_a, alpha_b)?)
            .with_potential(self.potential(openings)))
    }

    /// Covariant Gaussian beam packet moving along +x.
    pub fn initial_field(&self, alpha_a: f64, alpha_b: f64) -> Result<ComplexField> {
        Ok(covariant_elliptic_gaussian(
            &self.grid,
            self.source_center,
            self.source_widths,
            Vec2::new(self.params.momentum, 0.0),
            &self.lab_flux_config(alpha_a, alpha_b)?,
        )?)
    }

    fn slit_centre(&self, chamber: &Chamber) -> f64 {
        0.5 * (self.grid.y(chamber.slit.j0) + self.grid.y(chamber.slit.j1))
    }

    /// Source → slit channel → detector axis point, for chamber A and B.
    pub fn beam_paths(&self) -> (Polyline, Polyline) {
        let x0 = self.chamber_a.region.min.x - self.grid.dx;
        let x1 = self.chamber_a.region.max.x + self.grid.dx;
        let end = Vec2::new(self.grid.x(self.detector.fixed), self.source_center.y);
        let path = |c: &Chamber| {
            let y = self.slit_centre(c);
            Polyline::open(vec![self.source_center, Vec2::new(x0, y), Vec2::new(x1, y), end]).expect("finite path")
        };
        (path(&self.chamber_a), path(&self.chamber_b))
    }

    /// Closed reference loops: straight from the source to the detector axis
    /// point along the axis, then back along the beam path.
    pub fn reference_loops(&self) -> (Polyline, Polyline) {
        let (a, b) = self.beam_paths();
        let close = |p: &Polyline| {
            let back = p.reversed();
            let mut v = vec![self.source_center];
            v.extend(back.vertices().iter().copied());
            v.pop();
            Polyline::closed(v).expect("finite loop")
        };
        (close(&a), close(&b))
    }

    /// Windings of the reference loops about (flux A, flux B), each measured
    /// in its chamber's orientation. Rows: loop A, loop B.
    pub fn reference_windings(&self) -> Result<[[i64; 2]; 2]> {
        let (la, lb) = self.reference_loops();
        let mut out = [[0; 2]; 2];
        for (row, lp) in [la, lb].iter().enumerate() {
            for (col, ch) in [&self.chamber_a, &self.chamber_b].iter().enumerate() {
                out[row][col] = winding_number(lp, ch.flux.center)? * i64::from(ch.orientation);
            }
        }
        Ok(out)
    }

    /// Positions (relative to [`Self::fit_origin`]) and values of the fit window.
    pub fn fit_samples(&self, arclength: &[f64], profile: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (lo, hi) = self.fit_window;
        let s = arclength[lo..=hi].iter().map(|s| s - self.fit_origin).collect();
        (s, profile[lo..=hi].to_vec())
    }

    /// Far-field fringe period on the detector under the lattice dispersion
    /// `cos(k_x h) + cos(k_y h) = 1 + cos(k h)`, taking the transverse
    /// wavenumber whose group velocity points from a slit to the axis point.
    pub fn expected_fringe_period(&self) -> f64 {
        let h = self.grid.dx;
        let sa = &self.chamber_a.slit;
        let sb = &self.chamber_b.slit;
        let d = 0.5 * ((sa.j0 + sa.j1) as f64 - (sb.j0 + sb.j1) as f64) * h;
        let l = self.grid.x(self.detector.fixed) - self.chamber_a.region.max.x;
        let tan = 0.5 * d / l;
        let c = 1.0 + (self.params.momentum * h).cos();
        let slope = |ky: f64| ky.sin() / (c - ky.cos()).acos().sin() - tan;
        let (mut lo, mut hi) = (0.0, self.params.momentum * h);
        for _ in 0..100 {
            let m = 0.5 * (lo + hi);
            if slope(m) > 0.0 {
                hi = m;
            } else {
                lo = m;
            }
        }
        std::f64::consts::PI * h / (0.5 * (lo + hi))
    }
}
