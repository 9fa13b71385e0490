//! Sectioned TOML run configuration. Every field is optional; resolvers fill
//! defaults and record each substitution in a [`RunLog`].

use std::fmt::Display;

use abnoninterf::eigen::{EigenAxis, TransverseProfile};
use abnoninterf::evolve::{Grid2D, FLUX_OFFSET_X, FLUX_OFFSET_Y};
use abnoninterf::experiment::{build_noninterferometer, Mode, NoninterferometerParams, ScenarioConfig, Species};
use abnoninterf::gauge::{FluxConfig, FluxLine, Polyline, DEFAULT_SINGULAR_RADIUS};
use abnoninterf::weyl::{standard_geometries, CommutatorCase};
use abnoninterf::Vec2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{from_evolve, from_experiment, from_gauge, from_weyl, CliError};
use crate::number::Number;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fluxes: Option<FluxSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometrySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolution: Option<EvolutionSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<ModeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holonomy: Option<HolonomySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub commutator: Option<CommutatorSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigen: Option<EigenSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantize: Option<QuantizeSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nx: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxLineSpec {
    pub center: [f64; 2],
    pub alpha: Number,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub singular_radius: Option<f64>,
    /// Chamber fluxes of the noninterferometer.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_a: Option<Number>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_b: Option<Number>,
    /// Free flux lines for `holonomy`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lines: Option<Vec<FluxLineSpec>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub momentum: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source_x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source_sigma_x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source_sigma_y: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub barrier_column: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub barrier_thickness: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slit_width: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slit_separation: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flux_a: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flux_b: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detector_column: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_half_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub poly_degree: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver_tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub absorber_width: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub absorber_strength: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub absorber_tuning_momentum: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_alpha: Option<Vec<Number>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    StandardQm,
    Superseparability,
    Both,
}

impl Hypothesis {
    pub fn modes(self) -> Vec<Mode> {
        match self {
            Hypothesis::StandardQm => vec![Mode::StandardQM],
            Hypothesis::Superseparability => vec![Mode::Superseparability],
            Hypothesis::Both => vec![Mode::StandardQM, Mode::Superseparability],
        }
    }
}

impl std::str::FromStr for Hypothesis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "standard_qm" | "standard" => Ok(Hypothesis::StandardQm),
            "superseparability" => Ok(Hypothesis::Superseparability),
            "both" => Ok(Hypothesis::Both),
            other => Err(format!("unknown mode {other:?}; expected standard_qm, superseparability or both")),
        }
    }
}

impl Display for Hypothesis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Hypothesis::StandardQm => "standard_qm",
            Hypothesis::Superseparability => "superseparability",
            Hypothesis::Both => "both",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hypothesis: Option<Hypothesis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopSpec {
    pub vertices: Vec<[f64; 2]>,
    #[serde(default = "yes")]
    pub closed: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolonomySection {
    /// Random loops over random one- to three-flux configurations, used when
    /// no explicit loops are given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random_loops: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrature_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loops: Option<Vec<LoopSpec>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseSpec {
    pub x: f64,
    pub y: f64,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommutatorSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<Number>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cases: Option<Vec<CaseSpec>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Number>,
    /// `[re, im]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis: Option<EigenAxis>,
    /// Points per unit length, coarse to fine.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ladder: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub along_range: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub across_range: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random_specs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dump_field: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<TransverseProfile>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantizeSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub species: Option<Species>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_a: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_b: Option<i64>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

pub fn parse_config(text: &str) -> Result<ConfigFile, CliError> {
    toml::from_str(text).map_err(|e| CliError::Schema {
        message: e.message().to_string(),
        line: e.span().map(|s| line_of(text, s.start)),
        field: None,
    })
}

pub fn emit_config(cfg: &ConfigFile) -> Result<String, CliError> {
    toml::to_string(cfg).map_err(|e| CliError::Runtime(format!("config does not serialize: {e}")))
}

/// TOML integers are signed, so seeds stop at `i64::MAX`.
pub const MAX_SEED: u64 = i64::MAX as u64;

/// Default substitutions and warnings, in the order they were made.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunLog {
    pub defaults: Vec<String>,
    pub warnings: Vec<String>,
}

impl RunLog {
    pub fn pick<T: Clone + std::fmt::Debug>(&mut self, key: &str, given: Option<&T>, default: T) -> T {
        match given {
            Some(v) => v.clone(),
            None => {
                self.defaults.push(format!("{key} = {default:?} (default)"));
                default
            }
        }
    }

    pub fn number(&mut self, key: &str, given: Option<&Number>, default: Number) -> Number {
        let n = match given {
            Some(v) => *v,
            None => {
                self.defaults.push(format!("{key} = \"{default}\" (default)"));
                default
            }
        };
        self.warn_float(key, &n);
        n
    }

    pub fn warn_float(&mut self, key: &str, n: &Number) {
        if let Number::Float(v) = n {
            self.warnings.push(format!(
                "{key} = {v:?} given as a float; write it as a rational string (e.g. \"1/2\") to keep it exact"
            ));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RunSettings {
    pub seed: u64,
    pub workers: usize,
}

pub const DEFAULT_SWEEP: [(i64, i64); 6] = [(0, 1), (1, 4), (1, 2), (3, 4), (1, 1), (5, 4)];

pub fn default_sweep() -> Vec<Number> {
    DEFAULT_SWEEP.iter().map(|&(n, d)| Number::Exact(num_rational::Ratio::new(n, d))).collect()
}

pub fn default_commutator_alphas() -> Vec<Number> {
    [(0, 1), (1, 4), (1, 2), (1, 1), (13, 10), (2, 1)]
        .iter()
        .map(|&(n, d)| Number::Exact(num_rational::Ratio::new(n, d)))
        .collect()
}

fn check_positive(field: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::range(field, format!("must be positive and finite, got {v}")))
    }
}

impl ConfigFile {
    pub fn run_settings(&self, log: &mut RunLog, seed: Option<u64>, workers: Option<usize>) -> Result<RunSettings, CliError> {
        let run = self.run.clone().unwrap_or_default();
        let default_workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
        let seed = seed.unwrap_or_else(|| log.pick("run.seed", run.seed.as_ref(), 0));
        let workers = workers.unwrap_or_else(|| log.pick("run.workers", run.workers.as_ref(), default_workers));
        if seed > MAX_SEED {
            return Err(CliError::range("run.seed", format!("must not exceed {MAX_SEED}, got {seed}")));
        }
        if workers == 0 {
            return Err(CliError::range("run.workers", "must be at least 1"));
        }
        Ok(RunSettings { seed, workers })
    }

    pub fn scenario_params(&self, log: &mut RunLog) -> Result<NoninterferometerParams, CliError> {
        let d = NoninterferometerParams::default();
        let g = self.grid.clone().unwrap_or_default();
        let geo = self.geometry.clone().unwrap_or_default();
        let ev = self.evolution.clone().unwrap_or_default();
        let fl = self.fluxes.clone().unwrap_or_default();
        let v2 = |p: Vec2| [p.x, p.y];
        let flux_a = log.pick("geometry.flux_a", geo.flux_a.as_ref(), v2(d.flux_a));
        let flux_b = log.pick("geometry.flux_b", geo.flux_b.as_ref(), v2(d.flux_b));
        let p = NoninterferometerParams {
            nx: log.pick("grid.nx", g.nx.as_ref(), d.nx),
            ny: log.pick("grid.ny", g.ny.as_ref(), d.ny),
            spacing: log.pick("grid.spacing", g.spacing.as_ref(), d.spacing),
            mass: log.pick("geometry.mass", geo.mass.as_ref(), d.mass),
            momentum: log.pick("geometry.momentum", geo.momentum.as_ref(), d.momentum),
            source_x: log.pick("geometry.source_x", geo.source_x.as_ref(), d.source_x),
            source_sigma_x: log.pick("geometry.source_sigma_x", geo.source_sigma_x.as_ref(), d.source_sigma_x),
            source_sigma_y: log.pick("geometry.source_sigma_y", geo.source_sigma_y.as_ref(), d.source_sigma_y),
            barrier_column: log.pick("geometry.barrier_column", geo.barrier_column.as_ref(), d.barrier_column),
            barrier_thickness: log.pick("geometry.barrier_thickness", geo.barrier_thickness.as_ref(), d.barrier_thickness),
            slit_width: log.pick("geometry.slit_width", geo.slit_width.as_ref(), d.slit_width),
            slit_separation: log.pick("geometry.slit_separation", geo.slit_separation.as_ref(), d.slit_separation),
            flux_a: Vec2::new(flux_a[0], flux_a[1]),
            flux_b: Vec2::new(flux_b[0], flux_b[1]),
            alpha_a: log.number("fluxes.alpha_a", fl.alpha_a.as_ref(), Number::integer(0)).value(),
            alpha_b: log.number("fluxes.alpha_b", fl.alpha_b.as_ref(), Number::integer(0)).value(),
            detector_column: log.pick("geometry.detector_column", geo.detector_column.as_ref(), d.detector_column),
            fit_half_width: log.pick("geometry.fit_half_width", geo.fit_half_width.as_ref(), d.fit_half_width),
            absorber_width: log.pick("evolution.absorber_width", ev.absorber_width.as_ref(), d.absorber_width),
            absorber_strength: ev.absorber_strength.or(d.absorber_strength),
            absorber_tuning_momentum: log.pick(
                "evolution.absorber_tuning_momentum",
                ev.absorber_tuning_momentum.as_ref(),
                d.absorber_tuning_momentum,
            ),
            wall_factor: log.pick("evolution.wall_factor", ev.wall_factor.as_ref(), d.wall_factor),
            dt: ev.dt.or(d.dt),
            t_max: ev.t_max.or(d.t_max),
            solver_tolerance: log.pick("evolution.solver_tolerance", ev.solver_tolerance.as_ref(), d.solver_tolerance),
            poly_degree: log.pick("geometry.poly_degree", geo.poly_degree.as_ref(), d.poly_degree),
            mode: self.hypothesis(log, None)?.modes()[0],
        };
        if ev.absorber_strength.is_none() {
            log.defaults.push("evolution.absorber_strength tuned at absorber_tuning_momentum (default)".into());
        }
        if ev.dt.is_none() {
            log.defaults.push("evolution.dt = accuracy bound c·m·h² (default)".into());
        }
        if ev.t_max.is_none() {
            log.defaults.push("evolution.t_max = transit time to the detector plus tail (default)".into());
        }
        Ok(p)
    }

    pub fn scenario(&self, log: &mut RunLog) -> Result<ScenarioConfig, CliError> {
        let p = self.scenario_params(log)?;
        build_noninterferometer(&p).map_err(|e| from_experiment("geometry", e))
    }

    pub fn hypothesis(&self, log: &mut RunLog, cli: Option<Hypothesis>) -> Result<Hypothesis, CliError> {
        if let Some(h) = cli {
            return Ok(h);
        }
        let m = self.mode.clone().unwrap_or_default();
        Ok(log.pick("mode.hypothesis", m.hypothesis.as_ref(), Hypothesis::StandardQm))
    }

    pub fn sweep_values(&self, log: &mut RunLog, cli: Option<Vec<Number>>) -> Result<Vec<Number>, CliError> {
        let values = match cli {
            Some(v) => v,
            None => {
                let s = self.sweep.clone().unwrap_or_default();
                log.pick("sweep.delta_alpha", s.delta_alpha.as_ref(), default_sweep())
            }
        };
        if values.is_empty() {
            return Err(CliError::range("sweep.delta_alpha", "needs at least one value"));
        }
        for (i, v) in values.iter().enumerate() {
            log.warn_float(&format!("sweep.delta_alpha[{i}]"), v);
        }
        Ok(values)
    }

    pub fn singular_radius(&self, log: &mut RunLog) -> Result<f64, CliError> {
        let fl = self.fluxes.clone().unwrap_or_default();
        check_positive(
            "fluxes.singular_radius",
            log.pick("fluxes.singular_radius", fl.singular_radius.as_ref(), DEFAULT_SINGULAR_RADIUS),
        )
    }

    /// The configured free flux lines, or `None` when the section lists none.
    pub fn flux_lines(&self, log: &mut RunLog) -> Result<Option<FluxConfig>, CliError> {
        let radius = self.singular_radius(log)?;
        let Some(lines) = self.fluxes.as_ref().and_then(|f| f.lines.as_ref()) else { return Ok(None) };
        let mut out = Vec::with_capacity(lines.len());
        for (i, l) in lines.iter().enumerate() {
            log.warn_float(&format!("fluxes.lines[{i}].alpha"), &l.alpha);
            out.push(FluxLine::new(Vec2::new(l.center[0], l.center[1]), l.alpha.value()));
        }
        FluxConfig::new(out, radius).map(Some).map_err(|e| from_gauge("fluxes.lines", e))
    }

    pub fn loops(&self) -> Result<Option<Vec<Polyline>>, CliError> {
        let Some(loops) = self.holonomy.as_ref().and_then(|h| h.loops.as_ref()) else { return Ok(None) };
        loops
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let v = l.vertices.iter().map(|p| Vec2::new(p[0], p[1])).collect();
                Polyline::new(v, l.closed).map_err(|e| from_gauge(&format!("holonomy.loops[{i}]"), e))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    pub fn holonomy_settings(&self, log: &mut RunLog) -> Result<(usize, f64), CliError> {
        let h = self.holonomy.clone().unwrap_or_default();
        let n = log.pick("holonomy.random_loops", h.random_loops.as_ref(), 500);
        let step = check_positive(
            "holonomy.quadrature_step",
            log.pick("holonomy.quadrature_step", h.quadrature_step.as_ref(), 0.05),
        )?;
        Ok((n, step))
    }

    /// Grid for flux-centred commands: `[grid]` values over the given
    /// defaults, with the flux at the origin at the standard cell offset.
    pub fn flux_grid(&self, log: &mut RunLog, nx: usize, ny: usize, spacing: f64) -> Result<Grid2D, CliError> {
        let g = self.grid.clone().unwrap_or_default();
        let nx = log.pick("grid.nx", g.nx.as_ref(), nx);
        let ny = log.pick("grid.ny", g.ny.as_ref(), ny);
        let h = check_positive("grid.spacing", log.pick("grid.spacing", g.spacing.as_ref(), spacing))?;
        Grid2D::centered_on_flux(nx, ny, h, h, Vec2::ZERO).map_err(|e| from_evolve("grid", e))
    }

    pub fn commutator_settings(
        &self,
        log: &mut RunLog,
        grid: &Grid2D,
    ) -> Result<(Vec<Number>, Vec<CommutatorCase>, Option<f64>), CliError> {
        let c = self.commutator.clone().unwrap_or_default();
        let alphas = log.pick("commutator.alphas", c.alphas.as_ref(), default_commutator_alphas());
        for (i, a) in alphas.iter().enumerate() {
            log.warn_float(&format!("commutator.alphas[{i}]"), a);
        }
        let cases = match &c.cases {
            Some(list) => list
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    CommutatorCase::new(s.x, s.y, s.a, s.b, 0.0)
                        .map_err(|e| from_weyl(&format!("commutator.cases[{i}]"), e))
                })
                .collect::<Result<Vec<_>, _>>()?,
            None => {
                log.defaults.push("commutator.cases = standard geometry set (default)".into());
                standard_geometries(grid)
            }
        };
        if let Some(w) = c.probe_width {
            check_positive("commutator.probe_width", w)?;
        }
        Ok((alphas, cases, c.probe_width))
    }

    pub fn eigen_settings(&self, log: &mut RunLog) -> Result<EigenSettings, CliError> {
        let e = self.eigen.clone().unwrap_or_default();
        let alpha = log.number("eigen.alpha", e.alpha.as_ref(), Number::Exact(num_rational::Ratio::new(1, 2)));
        let lambda = log.pick("eigen.lambda", e.lambda.as_ref(), [10.0, 0.0]);
        let s = EigenSettings {
            alpha: alpha.value(),
            lambda: Complex64::new(lambda[0], lambda[1]),
            axis: log.pick("eigen.axis", e.axis.as_ref(), EigenAxis::X),
            ladder: log.pick("eigen.ladder", e.ladder.as_ref(), vec![64, 128, 256, 512, 1024]),
            along_range: log.pick("eigen.along_range", e.along_range.as_ref(), [-1.0, 1.0]),
            across_range: log.pick("eigen.across_range", e.across_range.as_ref(), [0.5, 1.0]),
            random_specs: log.pick("eigen.random_specs", e.random_specs.as_ref(), 50),
            witness_threshold: log.pick("eigen.witness_threshold", e.witness_threshold.as_ref(), 1e-12),
            dump_field: log.pick("eigen.dump_field", e.dump_field.as_ref(), false),
            profile: log.pick(
                "eigen.profile",
                e.profile.as_ref(),
                TransverseProfile::Gaussian { center: 0.75, width: 0.2, amplitude: Complex64::new(1.0, 0.0) },
            ),
        };
        if s.ladder.is_empty() || s.ladder.iter().any(|&n| n < 4) {
            return Err(CliError::range("eigen.ladder", "needs at least one resolution of 4 or more points per unit"));
        }
        for (name, r) in [("eigen.along_range", s.along_range), ("eigen.across_range", s.across_range)] {
            if !(r[0] < r[1] && r[0].is_finite() && r[1].is_finite()) {
                return Err(CliError::range(name, format!("needs min < max, got {r:?}")));
            }
        }
        if s.across_range[0] <= 0.0 && s.across_range[1] >= 0.0 {
            return Err(CliError::range(
                "eigen.across_range",
                "must not contain 0: the grid would touch the axis through the flux",
            ));
        }
        check_positive("eigen.witness_threshold", s.witness_threshold)?;
        Ok(s)
    }

    pub fn quantize_settings(
        &self,
        log: &mut RunLog,
        species: Option<Species>,
        n_a: Option<i64>,
        n_b: Option<i64>,
    ) -> (Species, i64, i64) {
        let q = self.quantize.clone().unwrap_or_default();
        let species = species.unwrap_or_else(|| log.pick("quantize.species", q.species.as_ref(), Species::Deuteron));
        let n_a = n_a.unwrap_or_else(|| log.pick("quantize.n_a", q.n_a.as_ref(), 0));
        let n_b = n_b.unwrap_or_else(|| log.pick("quantize.n_b", q.n_b.as_ref(), 1));
        (species, n_a, n_b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenSettings {
    pub alpha: f64,
    pub lambda: Complex64,
    pub axis: EigenAxis,
    pub ladder: Vec<usize>,
    pub along_range: [f64; 2],
    pub across_range: [f64; 2],
    pub random_specs: usize,
    pub witness_threshold: f64,
    pub dump_field: bool,
    pub profile: TransverseProfile,
}

/// The commented example configuration shipped with the crate.
pub fn example_text() -> String {
    include_str!("../../../configs/example.toml").to_string()
}

/// Default chamber flux positions in lab coordinates, for the example file.
pub fn default_flux_positions() -> ([f64; 2], [f64; 2]) {
    let d = NoninterferometerParams::default();
    ([d.flux_a.x, d.flux_a.y], [d.flux_b.x, d.flux_b.y])
}

/// Node-aligned position plus the standard sub-cell offset.
pub fn offset_position(i: usize, j: usize, spacing: f64) -> [f64; 2] {
    [(i as f64 + FLUX_OFFSET_X) * spacing, (j as f64 + FLUX_OFFSET_Y) * spacing]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let text = "[grid]\nnx = 64\nny = 64\nspacing = 0.25\n\n[[fluxes.lines]]\ncenter = [0.1, 0.2]\nalpha = \"1/2\"\n";
        let cfg = parse_config(text).unwrap();
        let mut log = RunLog::default();
        let flux = cfg.flux_lines(&mut log).unwrap().unwrap();
        assert_eq!(flux.lines()[0].alpha, 0.5);
        let grid = cfg.flux_grid(&mut log, 512, 512, 1.0 / 16.0).unwrap();
        assert_eq!((grid.nx, grid.dx), (64, 0.25));
        cfg.holonomy_settings(&mut log).unwrap();
        assert!(log.defaults.iter().any(|d| d.starts_with("holonomy.random_loops")));
        assert!(log.defaults.iter().any(|d| d.starts_with("fluxes.singular_radius")));
        assert!(log.warnings.is_empty());
    }

    #[test]
    fn rational_alpha_is_exact() {
        let cfg = parse_config("[fluxes]\nalpha_a = \"1/2\"\nalpha_b = 0.75\n").unwrap();
        let f = cfg.fluxes.as_ref().unwrap();
        assert_eq!(f.alpha_a, Some(Number::Exact(num_rational::Ratio::new(1, 2))));
        let mut log = RunLog::default();
        let p = cfg.scenario_params(&mut log).unwrap();
        assert_eq!((p.alpha_a, p.alpha_b), (0.5, 0.75));
        assert_eq!(log.warnings.len(), 1);
        assert!(log.warnings[0].contains("fluxes.alpha_b"));
    }

    #[test]
    fn flux_on_grid_line_is_a_range_error_citing_the_offset_rule() {
        let cfg = parse_config("[geometry]\nflux_a = [117.0, 136.5]\n").unwrap();
        let err = cfg.scenario(&mut RunLog::default()).unwrap_err();
        match &err {
            CliError::Range { field, message } => {
                assert_eq!(field, "geometry.flux_a");
                assert!(message.contains("offset rule"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn schema_errors_carry_the_line() {
        let err = parse_config("[grid]\nnx = 64\nwidth = 3\n").unwrap_err();
        match err {
            CliError::Schema { line, message, .. } => {
                assert_eq!(line, Some(3));
                assert!(message.contains("width"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_config("[grid]\nnx = \"many\"\n"), Err(CliError::Schema { line: Some(2), .. })));
    }

    #[test]
    fn default_scenario_builds() {
        let mut log = RunLog::default();
        let s = ConfigFile::default().scenario(&mut log).unwrap();
        assert_eq!(s.params, NoninterferometerParams::default());
        assert!(log.defaults.len() > 10);
    }

    #[test]
    fn example_config_parses_and_builds() {
        let text = include_str!("../../../configs/example.toml");
        let cfg = parse_config(text).unwrap();
        let mut log = RunLog::default();
        cfg.scenario(&mut log).unwrap();
        cfg.flux_lines(&mut log).unwrap().unwrap();
        cfg.eigen_settings(&mut log).unwrap();
        assert!(log.warnings.is_empty(), "{:?}", log.warnings);
        assert_eq!(parse_config(&emit_config(&cfg).unwrap()).unwrap(), cfg);
    }

    fn number() -> impl Strategy<Value = Number> {
        prop_oneof![
            (-50i64..50, 1i64..12).prop_map(|(n, d)| Number::Exact(num_rational::Ratio::new(n, d))),
            (-5.0f64..5.0).prop_map(Number::Float),
        ]
    }

    proptest! {
        #[test]
        fn emit_then_parse_is_identity(
            nx in proptest::option::of(16usize..1024),
            spacing in proptest::option::of(0.01f64..2.0),
            alpha_a in proptest::option::of(number()),
            sweep in proptest::option::of(proptest::collection::vec(number(), 1..6)),
            seed in proptest::option::of(0..=MAX_SEED),
            lines in proptest::option::of(proptest::collection::vec(((-5.0f64..5.0), (-5.0f64..5.0), number()), 0..3)),
            hyp in proptest::option::of(prop_oneof![Just(Hypothesis::StandardQm), Just(Hypothesis::Both)]),
            ladder in proptest::option::of(proptest::collection::vec(4usize..2048, 1..5)),
        ) {
            let cfg = ConfigFile {
                run: seed.map(|s| RunSection { seed: Some(s), workers: None }),
                grid: Some(GridSection { nx, ny: None, spacing }),
                fluxes: Some(FluxSection {
                    singular_radius: None,
                    alpha_a,
                    alpha_b: None,
                    lines: lines.map(|v| v.into_iter().map(|(x, y, a)| FluxLineSpec { center: [x, y], alpha: a }).collect()),
                }),
                sweep: sweep.map(|v| SweepSection { delta_alpha: Some(v) }),
                mode: hyp.map(|h| ModeSection { hypothesis: Some(h) }),
                eigen: ladder.map(|l| EigenSection { ladder: Some(l), ..Default::default() }),
                ..Default::default()
            };
            let text = emit_config(&cfg).unwrap();
            prop_assert_eq!(parse_config(&text).unwrap(), cfg);
        }
    }
}
