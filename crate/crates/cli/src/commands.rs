use std::f64::consts::TAU;
use std::time::Instant;

use abnoninterf::eigen::{
    compact_support_witness, residual_check, sample_eigen_solution, EigenAxis, EigenSolutionSpec, TransverseProfile,
};
use abnoninterf::evolve::snapshot::{density_bytes, header_text};
use abnoninterf::evolve::{absorber_reflection, Absorber, Grid2D};
use abnoninterf::experiment::{
    quantized_delta_alpha, run_openings, sweep_with_cache, Openings, RunCache, Species, SpeciesChargeRule,
};
use abnoninterf::gauge::{line_integral_phase, point_segment_distance, winding_number, FluxConfig, FluxLine, Polyline};
use abnoninterf::weyl::{commutator_sweep, MIN_OVERLAP_MODULUS};
use abnoninterf::Vec2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ConfigFile, Hypothesis, RunLog, RunSettings};
use crate::error::{from_eigen, from_evolve, from_experiment, from_gauge, CliError};
use crate::number::Number;
use crate::output::{num, Artifacts};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// What a command produced, before anything touches the disk.
#[derive(Debug, Default)]
pub struct Outcome {
    pub stdout: String,
    pub artifacts: Artifacts,
    pub diagnostics: Value,
}

fn header(command: &str, cfg: &ConfigFile, run: &RunSettings, log: &RunLog) -> Value {
    json!({
        "command": command,
        "version": VERSION,
        "seed": run.seed,
        "workers": run.workers,
        "config": crate::config::emit_config(cfg).unwrap_or_default(),
        "defaults": log.defaults,
        "warnings": log.warnings,
    })
}

// ---- holonomy ----

#[derive(Debug, Clone, PartialEq)]
pub struct HolonomyCase {
    pub flux: FluxConfig,
    pub path: Polyline,
    pub laps: u32,
}

/// Minimum distance from any flux centre to a loop edge in random cases.
pub const RANDOM_LOOP_CLEARANCE: f64 = 1e-3;

fn random_flux(rng: &mut ChaCha8Rng, radius: f64) -> FluxConfig {
    loop {
        let n = rng.gen_range(1..=3);
        let lines: Vec<FluxLine> = (0..n)
            .map(|_| {
                let c = Vec2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
                FluxLine::new(c, rng.gen_range(-2.5..2.5))
            })
            .collect();
        let separated = lines.iter().enumerate().all(|(i, a)| lines[i + 1..].iter().all(|b| (a.center - b.center).norm() > 0.25));
        if separated {
            if let Ok(cfg) = FluxConfig::new(lines, radius) {
                return cfg;
            }
        }
    }
}

/// Star-shaped polygon, possibly reversed and traversed more than once.
fn random_loop(rng: &mut ChaCha8Rng, flux: &FluxConfig) -> (Polyline, u32) {
    loop {
        let center = Vec2::new(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
        let n = rng.gen_range(3..=12);
        let mut angles: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..TAU)).collect();
        angles.sort_by(f64::total_cmp);
        let mut vertices: Vec<Vec2> = angles
            .iter()
            .map(|&t| {
                let r = rng.gen_range(0.5..6.0);
                center + Vec2::new(r * t.cos(), r * t.sin())
            })
            .collect();
        if rng.gen_bool(0.5) {
            vertices.reverse();
        }
        let laps = rng.gen_range(1..=2u32);
        let once = vertices.clone();
        for _ in 1..laps {
            vertices.extend_from_slice(&once);
        }
        let Ok(path) = Polyline::closed(vertices) else { continue };
        let clear = flux.lines().iter().all(|l| {
            path.segments().all(|(a, b)| point_segment_distance(l.center, a, b) > RANDOM_LOOP_CLEARANCE)
        });
        if clear {
            return (path, laps);
        }
    }
}

pub fn random_holonomy_cases(seed: u64, count: usize, singular_radius: f64, fixed: Option<&FluxConfig>) -> Vec<HolonomyCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let flux = match fixed {
                Some(f) => f.clone(),
                None => random_flux(&mut rng, singular_radius),
            };
            let (path, laps) = random_loop(&mut rng, &flux);
            HolonomyCase { flux, path, laps }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolonomyResult {
    pub phase: f64,
    pub winding_phase: f64,
    pub discrepancy: f64,
}

/// Line integral against `Σ 2π α_k w_k` with windings from the crossing oracle.
pub fn check_holonomy(case: &HolonomyCase, quadrature_step: f64) -> Result<HolonomyResult, CliError> {
    let phase = line_integral_phase(&case.flux, &case.path, quadrature_step).map_err(|e| from_gauge("holonomy", e))?;
    let mut winding_phase = 0.0;
    for l in case.flux.lines() {
        let w = winding_number(&case.path, l.center).map_err(|e| from_gauge("holonomy", e))?;
        winding_phase += TAU * l.alpha * w as f64;
    }
    Ok(HolonomyResult { phase, winding_phase, discrepancy: (phase - winding_phase).abs() })
}

fn describe_flux(cfg: &FluxConfig) -> String {
    cfg.lines().iter().map(|l| format!("{} {} {}", num(l.center.x), num(l.center.y), num(l.alpha))).collect::<Vec<_>>().join("; ")
}

fn describe_path(p: &Polyline) -> String {
    p.vertices().iter().map(|v| format!("{} {}", num(v.x), num(v.y))).collect::<Vec<_>>().join("; ")
}

pub fn holonomy(cfg: &ConfigFile, run: &RunSettings, log: &mut RunLog) -> Result<Outcome, CliError> {
    let radius = cfg.singular_radius(log)?;
    let (count, step) = cfg.holonomy_settings(log)?;
    let fixed = cfg.flux_lines(log)?;
    let cases = match cfg.loops()? {
        Some(loops) => {
            let flux = fixed.clone().ok_or_else(|| CliError::range("fluxes.lines", "explicit loops need flux lines"))?;
            loops.into_iter().map(|path| HolonomyCase { flux: flux.clone(), path, laps: 1 }).collect()
        }
        None => random_holonomy_cases(run.seed, count, radius, fixed.as_ref()),
    };
    let start = Instant::now();
    let mut rows = Vec::with_capacity(cases.len());
    let mut worst: f64 = 0.0;
    for (i, c) in cases.iter().enumerate() {
        let r = check_holonomy(c, step).map_err(|e| match e {
            CliError::Range { message, .. } => CliError::range(format!("holonomy.loops[{i}]"), message),
            other => other,
        })?;
        worst = worst.max(r.discrepancy);
        rows.push(vec![
            run.seed.to_string(),
            i.to_string(),
            c.flux.lines().len().to_string(),
            c.laps.to_string(),
            num(r.phase),
            num(r.winding_phase),
            num(r.discrepancy),
            describe_flux(&c.flux),
            describe_path(&c.path),
        ]);
    }
    let mut artifacts = Artifacts::new();
    artifacts.add_csv(
        "holonomy.csv",
        &[
            "seed",
            "loop",
            "fluxes",
            "laps",
            "phase_line [rad]",
            "phase_winding [rad]",
            "discrepancy [rad]",
            "flux_lines [x y alpha]",
            "vertices [x y]",
        ],
        &rows,
    )?;
    let diagnostics = json!({ "loops": cases.len(), "max_discrepancy_rad": worst, "elapsed_s": start.elapsed().as_secs_f64() });
    let mut summary = header("holonomy", cfg, run, log);
    summary["loops"] = json!(cases.len());
    summary["max_discrepancy_rad"] = json!(worst);
    artifacts.add_json("holonomy_summary.json", &summary);
    Ok(Outcome { stdout: format!("holonomy: {} loops, max discrepancy {worst:e} rad\n", cases.len()), artifacts, diagnostics })
}

// ---- commutator ----

pub fn commutator(cfg: &ConfigFile, run: &RunSettings, log: &mut RunLog) -> Result<Outcome, CliError> {
    let grid = cfg.flux_grid(log, 512, 512, 1.0 / 16.0)?;
    let (alphas, cases, probe_width) = cfg.commutator_settings(log, &grid)?;
    let values: Vec<f64> = alphas.iter().map(Number::value).collect();
    let start = Instant::now();
    let entries = commutator_sweep(&values, &cases, &grid, probe_width);
    let elapsed = start.elapsed().as_secs_f64();

    let mut rows = Vec::with_capacity(entries.len());
    let (mut worst, mut min_overlap, mut failures) = (0.0f64, f64::INFINITY, 0usize);
    for (k, e) in entries.iter().enumerate() {
        let alpha_text = alphas[k / cases.len().max(1)].to_string();
        let c = &e.case;
        let mut row = vec![alpha_text, num(c.x), num(c.y), num(c.a), num(c.b)];
        match &e.outcome {
            Ok(cmp) => {
                worst = worst.max(cmp.discrepancy);
                min_overlap = min_overlap.min(cmp.empirical.raw_modulus);
                let status = if cmp.empirical.is_reliable() { "ok" } else { "low_overlap" };
                row.extend([
                    num(cmp.empirical.phase.re),
                    num(cmp.empirical.phase.im),
                    num(cmp.closed_form.re),
                    num(cmp.closed_form.im),
                    num(cmp.discrepancy),
                    cmp.winding.to_string(),
                    cmp.epsilon_product.to_string(),
                    num(cmp.empirical.raw_modulus),
                    num(cmp.empirical.probe_width),
                    status.to_string(),
                ]);
            }
            Err(err) => {
                failures += 1;
                row.extend(std::iter::repeat_n(String::new(), 9));
                row.push(format!("error: {err}"));
            }
        }
        row.push(run.seed.to_string());
        rows.push(row);
    }
    let mut artifacts = Artifacts::new();
    artifacts.add_csv(
        "commutator.csv",
        &[
            "alpha [flux quanta]",
            "x [length]",
            "y [length]",
            "a [length]",
            "b [length]",
            "phase_emp_re [1]",
            "phase_emp_im [1]",
            "phase_cf_re [1]",
            "phase_cf_im [1]",
            "discrepancy [rad]",
            "winding [turns]",
            "epsilon_product [1]",
            "overlap [1]",
            "probe_width [length]",
            "status",
            "seed",
        ],
        &rows,
    )?;
    let mut summary = header("commutator", cfg, run, log);
    summary["grid"] = json!({ "nx": grid.nx, "ny": grid.ny, "spacing": grid.dx });
    summary["cases"] = json!(entries.len());
    summary["failures"] = json!(failures);
    summary["max_discrepancy_rad"] = json!(worst);
    summary["min_overlap"] = json!(min_overlap);
    summary["min_overlap_required"] = json!(MIN_OVERLAP_MODULUS);
    artifacts.add_json("commutator_summary.json", &summary);
    Ok(Outcome {
        stdout: format!(
            "commutator: {} cases ({failures} failed), max discrepancy {worst:e} rad, min overlap {min_overlap}\n",
            entries.len()
        ),
        artifacts,
        diagnostics: json!({ "elapsed_s": elapsed, "min_overlap": min_overlap, "max_discrepancy_rad": worst }),
    })
}

// ---- evolve ----

fn absorber_diagnostics(p: &abnoninterf::experiment::NoninterferometerParams) -> Value {
    let absorber = match p.absorber_strength {
        Some(s) => Absorber::new(p.absorber_width, s),
        None => Absorber::tuned(p.absorber_width, p.absorber_tuning_momentum, p.mass, p.spacing),
    };
    let r = |k: f64| absorber_reflection(&absorber, k, p.mass, p.spacing);
    json!({
        "reflection_at_beam_momentum": r(p.momentum),
        "reflection_at_tuning_momentum": r(p.absorber_tuning_momentum),
    })
}

pub fn evolve(
    cfg: &ConfigFile,
    run: &RunSettings,
    log: &mut RunLog,
    openings: Openings,
    snapshot: bool,
) -> Result<Outcome, CliError> {
    let scenario = cfg.scenario(log)?;
    let start = Instant::now();
    let report = run_openings(&scenario, openings, scenario.alpha_a(), scenario.alpha_b())
        .map_err(|e| from_experiment("evolution", e))?;
    let elapsed = start.elapsed().as_secs_f64();
    let mut artifacts = Artifacts::new();
    let rows: Vec<Vec<String>> = report
        .arclength
        .iter()
        .zip(&report.intensity)
        .map(|(s, i)| vec![num(*s), num(*i), run.seed.to_string()])
        .collect();
    artifacts.add_csv("detector.csv", &["arclength [length]", "intensity [probability]", "seed"], &rows)?;
    if snapshot {
        let field = scenario
            .initial_field(scenario.alpha_a(), scenario.alpha_b())
            .map_err(|e| from_experiment("evolution", e))?;
        artifacts.add_bytes("initial_density.f64", density_bytes(&field));
        artifacts.add_text("initial_density.f64.hdr", header_text(&field, "initial packet"));
    }
    let absorber = absorber_diagnostics(&scenario.params);
    let mut summary = header("evolve", cfg, run, log);
    summary["openings"] = json!(openings);
    summary["params"] = json!(scenario.params);
    summary["dt"] = json!(scenario.evolution.dt);
    summary["t_max"] = json!(scenario.t_max);
    summary["steps"] = json!(report.steps);
    summary["detected"] = json!(report.ledger.detected);
    summary["ledger"] = json!(report.ledger);
    summary["ledger_imbalance"] = json!(report.ledger.imbalance());
    summary["absorbed"] = json!(report.absorbed);
    summary["residual_norm"] = json!(report.residual_norm);
    summary["solver_iterations"] = json!(report.solver_iterations);
    summary["max_solver_residual"] = json!(report.max_solver_residual);
    summary["absorber"] = absorber.clone();
    artifacts.add_json("evolve_summary.json", &summary);
    Ok(Outcome {
        stdout: format!(
            "evolve: {} steps, detected {:.6}, ledger imbalance {:e}\n",
            report.steps,
            report.ledger.detected,
            report.ledger.imbalance()
        ),
        artifacts,
        diagnostics: json!({ "elapsed_s": elapsed, "absorber": absorber }),
    })
}

// ---- sweep ----

pub fn sweep(
    cfg: &ConfigFile,
    run: &RunSettings,
    log: &mut RunLog,
    hypothesis: Option<Hypothesis>,
    values: Option<Vec<Number>>,
) -> Result<Outcome, CliError> {
    let hypothesis = cfg.hypothesis(log, hypothesis)?;
    let values = cfg.sweep_values(log, values)?;
    let scenario = cfg.scenario(log)?;
    let deltas: Vec<f64> = values.iter().map(Number::value).collect();
    let mut cache = RunCache::new();
    let mut artifacts = Artifacts::new();
    let mut stdout = String::new();
    let mut timings = serde_json::Map::new();

    for mode in hypothesis.modes() {
        let start = Instant::now();
        let records =
            sweep_with_cache(&scenario, &deltas, mode, &mut cache).map_err(|e| from_experiment("sweep", e))?;
        timings.insert(mode.to_string(), json!(start.elapsed().as_secs_f64()));
        let mut rows = Vec::with_capacity(records.len());
        let mut points = Vec::with_capacity(records.len());
        for (idx, (r, exact)) in records.iter().zip(&values).enumerate() {
            let profile_name = format!("profiles/{mode}/point_{idx:02}.csv");
            let profile_rows: Vec<Vec<String>> = r
                .arclength
                .iter()
                .zip(&r.profile)
                .map(|(s, i)| vec![num(*s), num(*i), run.seed.to_string()])
                .collect();
            artifacts.add_csv(&profile_name, &["arclength [length]", "intensity [probability]", "seed"], &profile_rows)?;
            rows.push(vec![
                num(r.delta_alpha),
                exact.to_string(),
                num(r.alpha_a),
                num(r.alpha_b),
                mode.to_string(),
                serde_json::to_value(r.branch).unwrap().as_str().unwrap_or_default().to_string(),
                num(r.fitted_phase),
                num(r.visibility),
                num(r.fit_residual),
                num(r.wavenumber),
                num(r.visibility_error),
                r.degenerate.to_string(),
                num(r.detected),
                num(r.ledger_imbalance),
                r.path_overlap.map(num).unwrap_or_default(),
                profile_name.clone(),
                run.seed.to_string(),
            ]);
            points.push(json!({
                "delta_alpha": exact.to_string(),
                "alpha_a": r.alpha_a,
                "alpha_b": r.alpha_b,
                "branch": r.branch,
                "fitted_phase": r.fitted_phase,
                "visibility": r.visibility,
                "fit_residual": r.fit_residual,
                "wavenumber": r.wavenumber,
                "visibility_error": r.visibility_error,
                "degenerate": r.degenerate,
                "detected": r.detected,
                "ledger_imbalance": r.ledger_imbalance,
                "path_overlap": r.path_overlap,
                "tags": r.tags,
                "profile": profile_name,
            }));
            stdout.push_str(&format!(
                "{mode} Δα={exact}: phase {:.6} rad, visibility {:.6}\n",
                r.fitted_phase, r.visibility
            ));
        }
        let csv_name = format!("sweep_{mode}.csv");
        artifacts.add_csv(
            &csv_name,
            &[
                "delta_alpha [flux quanta]",
                "delta_alpha_exact [flux quanta]",
                "alpha_a [flux quanta]",
                "alpha_b [flux quanta]",
                "mode",
                "branch",
                "fitted_phase [rad]",
                "visibility [1]",
                "fit_residual [1]",
                "wavenumber [rad/length]",
                "visibility_error [1]",
                "degenerate",
                "detected [probability]",
                "ledger_imbalance [probability]",
                "path_overlap [1]",
                "profile_file",
                "seed",
            ],
            &rows,
        )?;
        let mut summary = header("sweep", cfg, run, log);
        summary["mode"] = json!(mode);
        summary["params"] = json!(scenario.params);
        summary["expected_fringe_period"] = json!(scenario.expected_fringe_period());
        summary["absorber"] = absorber_diagnostics(&scenario.params);
        summary["points"] = Value::Array(points);
        let prefix = format!("profiles/{mode}/");
        summary["manifest"] = json!(artifacts
            .manifest()
            .into_iter()
            .filter(|m| m.name == csv_name || m.name.starts_with(&prefix))
            .collect::<Vec<_>>());
        artifacts.add_json(format!("summary_{mode}.json"), &summary);
    }
    Ok(Outcome {
        stdout,
        artifacts,
        diagnostics: json!({ "elapsed_s": timings, "detector_runs": cache.len() }),
    })
}

// ---- eigen-check ----

fn eigen_grid(
    points_per_unit: usize,
    along: [f64; 2],
    across: [f64; 2],
    axis: EigenAxis,
) -> Result<Grid2D, CliError> {
    let h = 1.0 / points_per_unit as f64;
    let n = |r: [f64; 2]| ((r[1] - r[0]) * points_per_unit as f64).round() as usize + 1;
    let (nx, ny, origin) = match axis {
        EigenAxis::X => (n(along), n(across), Vec2::new(along[0], across[0])),
        EigenAxis::Y => (n(across), n(along), Vec2::new(across[0], along[0])),
    };
    Grid2D::new(nx, ny, h, h, origin).map_err(|e| from_evolve("eigen.ladder", e))
}

pub fn eigen_check(cfg: &ConfigFile, run: &RunSettings, log: &mut RunLog) -> Result<Outcome, CliError> {
    let s = cfg.eigen_settings(log)?;
    let spec = EigenSolutionSpec::new(s.alpha, s.lambda, s.profile).along(s.axis);
    let mut artifacts = Artifacts::new();
    let start = Instant::now();

    let mut ladder = Vec::with_capacity(s.ladder.len());
    let mut rows = Vec::with_capacity(s.ladder.len());
    let mut prev: Option<f64> = None;
    for (k, &ppu) in s.ladder.iter().enumerate() {
        let grid = eigen_grid(ppu, s.along_range, s.across_range, s.axis)?;
        let field = sample_eigen_solution(&spec, &grid).map_err(|e| from_eigen("eigen", e))?;
        let residual = residual_check(&field, s.alpha, s.lambda, s.axis).map_err(|e| from_eigen("eigen", e))?;
        let ratio = prev.map(|p| p / residual);
        prev = Some(residual);
        if s.dump_field && k == 0 {
            artifacts.add_bytes("eigen_density.f64", density_bytes(&field));
            artifacts.add_text("eigen_density.f64.hdr", header_text(&field, "closed-form eigenfunction"));
        }
        rows.push(vec![
            ppu.to_string(),
            num(grid.dx),
            num(residual),
            ratio.map(num).unwrap_or_default(),
            run.seed.to_string(),
        ]);
        ladder.push(json!({ "points_per_unit": ppu, "residual": residual, "ratio": ratio }));
    }
    artifacts.add_csv(
        "eigen_ladder.csv",
        &["points_per_unit [1/length]", "spacing [length]", "residual [1]", "ratio [1]", "seed"],
        &rows,
    )?;

    let witness_grid = eigen_grid(32, s.along_range, s.across_range, s.axis)?;
    let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
    let mut wrows = Vec::with_capacity(s.random_specs);
    let mut worst: f64 = 0.0;
    let mut all_hold = true;
    for i in 0..s.random_specs {
        let alpha = rng.gen_range(-3.0..3.0);
        let lambda = rng.gen_range(-20.0..20.0);
        let center = rng.gen_range(s.across_range[0]..s.across_range[1]);
        let width = rng.gen_range(0.05..0.5);
        let amp = Complex64::from_polar(rng.gen_range(0.1..2.0), rng.gen_range(0.0..TAU));
        let profile = TransverseProfile::Gaussian { center, width, amplitude: amp };
        let spec = EigenSolutionSpec::new(alpha, Complex64::new(lambda, 0.0), profile).along(s.axis);
        let w = compact_support_witness(&spec, &witness_grid, s.witness_threshold)
            .map_err(|e| from_eigen("eigen", e))?;
        worst = worst.max(w.deviation);
        all_hold &= w.holds;
        wrows.push(vec![
            i.to_string(),
            num(alpha),
            num(lambda),
            num(center),
            num(width),
            num(amp.re),
            num(amp.im),
            num(w.deviation),
            w.holds.to_string(),
            run.seed.to_string(),
        ]);
    }
    artifacts.add_csv(
        "eigen_witness.csv",
        &[
            "spec",
            "alpha [flux quanta]",
            "lambda [1/length]",
            "profile_center [length]",
            "profile_width [length]",
            "amplitude_re [1]",
            "amplitude_im [1]",
            "deviation [1]",
            "holds",
            "seed",
        ],
        &wrows,
    )?;
    let mut summary = header("eigen-check", cfg, run, log);
    summary["settings"] = json!(s);
    summary["ladder"] = Value::Array(ladder);
    summary["witness_max_deviation"] = json!(worst);
    summary["witness_all_hold"] = json!(all_hold);
    artifacts.add_json("eigen_summary.json", &summary);
    let finest = prev.unwrap_or(f64::NAN);
    Ok(Outcome {
        stdout: format!("eigen-check: finest residual {finest:e}, witness max deviation {worst:e}\n"),
        artifacts,
        diagnostics: json!({ "elapsed_s": start.elapsed().as_secs_f64() }),
    })
}

// ---- quantize ----

pub fn quantize(
    cfg: &ConfigFile,
    run: &RunSettings,
    log: &mut RunLog,
    species: Option<Species>,
    n_a: Option<i64>,
    n_b: Option<i64>,
) -> Result<Outcome, CliError> {
    let (species, n_a, n_b) = cfg.quantize_settings(log, species, n_a, n_b);
    let d = quantized_delta_alpha(n_a, n_b, SpeciesChargeRule::new(species));
    let mut artifacts = Artifacts::new();
    let mut summary = header("quantize", cfg, run, log);
    summary["species"] = json!(species);
    summary["n_a"] = json!(n_a);
    summary["n_b"] = json!(n_b);
    summary["delta_alpha"] = json!(d.to_string());
    summary["integer"] = json!(d.is_integer());
    artifacts.add_json("quantize.json", &summary);
    Ok(Outcome { stdout: format!("{d}\n"), artifacts, diagnostics: json!({}) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_cases_are_reproducible_and_admissible() {
        let a = random_holonomy_cases(7, 40, 1e-6, None);
        let b = random_holonomy_cases(7, 40, 1e-6, None);
        assert_eq!(a, b);
        assert_ne!(a, random_holonomy_cases(8, 40, 1e-6, None));
        assert!(a.iter().any(|c| c.flux.lines().len() == 3));
        assert!(a.iter().any(|c| c.laps == 2));
        for c in &a {
            let r = check_holonomy(c, 0.05).unwrap();
            assert!(r.discrepancy < 1e-9, "{r:?}");
        }
    }

    #[test]
    fn some_random_loops_enclose_flux() {
        let cases = random_holonomy_cases(3, 60, 1e-6, None);
        let enclosing = cases
            .iter()
            .filter(|c| c.flux.lines().iter().any(|l| winding_number(&c.path, l.center).unwrap() != 0))
            .count();
        assert!(enclosing > 10, "{enclosing}");
    }

    #[test]
    fn eigen_grid_spans_the_ranges() {
        let g = eigen_grid(64, [-1.0, 1.0], [0.5, 1.0], EigenAxis::X).unwrap();
        assert_eq!((g.nx, g.ny), (129, 33));
        assert!((g.x_max() - 1.0).abs() < 1e-12 && (g.y_max() - 1.0).abs() < 1e-12);
        let g = eigen_grid(64, [-1.0, 1.0], [0.5, 1.0], EigenAxis::Y).unwrap();
        assert_eq!((g.nx, g.ny), (33, 129));
    }
}
