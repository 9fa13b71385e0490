use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fringe::{fringe_fit_estimate, FringeFitOptions};
use super::scenario::{Mode, NoninterferometerParams, Openings, ScenarioConfig};
use super::{ExperimentError, Result};
use crate::evolve::{run_to_detector, DetectorReport};

/// Guards float ingestion of `Δα` only; exact inputs land on integers exactly.
pub const DEFAULT_INTEGER_TOLERANCE: f64 = 1e-9;

pub fn is_integer(x: f64, tolerance: f64) -> bool {
    (x - x.round()).abs() <= tolerance
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Both beams evolved together.
    Coherent,
    /// Sum of the two single-path intensities.
    Incoherent,
}

/// The superseparability prediction: the coherent profile when `Δα` is an
/// integer, otherwise `I_A + I_B`.
pub fn predict_superseparability(
    coherent: Option<&[f64]>,
    path_a: &[f64],
    path_b: &[f64],
    delta_alpha: f64,
    integer_tolerance: f64,
) -> Result<Vec<f64>> {
    if !delta_alpha.is_finite() {
        return Err(ExperimentError::InvalidSweep(format!("Δα = {delta_alpha} is not finite")));
    }
    if is_integer(delta_alpha, integer_tolerance) {
        return coherent.map(<[f64]>::to_vec).ok_or_else(|| {
            ExperimentError::InvalidProfile(format!("Δα = {delta_alpha} is an integer but no coherent profile was given"))
        });
    }
    if path_a.len() != path_b.len() {
        return Err(ExperimentError::InvalidProfile(format!(
            "single-path profiles differ in length ({} vs {})",
            path_a.len(),
            path_b.len()
        )));
    }
    Ok(path_a.iter().zip(path_b).map(|(a, b)| a + b).collect())
}

/// `Σ√(a b) / √(Σa Σb)`: 1 for proportional profiles, 0 for disjoint ones.
pub fn profile_overlap(a: &[f64], b: &[f64]) -> f64 {
    let cross: f64 = a.iter().zip(b).map(|(x, y)| (x.max(0.0) * y.max(0.0)).sqrt()).sum();
    let norm = (a.iter().sum::<f64>() * b.iter().sum::<f64>()).sqrt();
    if norm > 0.0 {
        cross / norm
    } else {
        0.0
    }
}

/// One detector run, identified by the open slits and the chamber fluxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RunKey {
    pub openings: Openings,
    alpha_a_bits: u64,
    alpha_b_bits: u64,
}

impl RunKey {
    pub fn new(openings: Openings, alpha_a: f64, alpha_b: f64) -> Self {
        Self { openings, alpha_a_bits: alpha_a.to_bits(), alpha_b_bits: alpha_b.to_bits() }
    }

    pub fn alpha_a(&self) -> f64 {
        f64::from_bits(self.alpha_a_bits)
    }

    pub fn alpha_b(&self) -> f64 {
        f64::from_bits(self.alpha_b_bits)
    }
}

pub fn run_openings(scenario: &ScenarioConfig, openings: Openings, alpha_a: f64, alpha_b: f64) -> Result<DetectorReport> {
    let params = scenario.evolution_for(openings, alpha_a, alpha_b)?;
    let initial = scenario.initial_field(alpha_a, alpha_b)?;
    Ok(run_to_detector(&initial, &params, &scenario.detector, scenario.t_max)?)
}

fn layout_key(params: &NoninterferometerParams) -> NoninterferometerParams {
    NoninterferometerParams { alpha_a: 0.0, alpha_b: 0.0, mode: Mode::StandardQM, ..params.clone() }
}

/// Detector runs for one layout, shared between sweep points and modes.
#[derive(Debug, Clone, Default)]
pub struct RunCache {
    layout: Option<NoninterferometerParams>,
    runs: BTreeMap<RunKey, DetectorReport>,
}

impl RunCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.runs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn get(&self, key: &RunKey) -> Option<&DetectorReport> {
        self.runs.get(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &RunKey> {
        self.runs.keys()
    }

    /// Runs every missing key, in parallel, in key order.
    pub fn ensure(&mut self, scenario: &ScenarioConfig, keys: &[RunKey]) -> Result<()> {
        let layout = layout_key(&scenario.params);
        match &self.layout {
            Some(l) if *l != layout => {
                return Err(ExperimentError::InvalidSweep("run cache belongs to a different layout".into()))
            }
            Some(_) => {}
            None => self.layout = Some(layout),
        }
        let mut missing: Vec<RunKey> = keys.iter().filter(|k| !self.runs.contains_key(k)).copied().collect();
        missing.sort();
        missing.dedup();
        let results: Vec<Result<DetectorReport>> =
            missing.par_iter().map(|k| run_openings(scenario, k.openings, k.alpha_a(), k.alpha_b())).collect();
        for (key, report) in missing.into_iter().zip(results) {
            self.runs.insert(key, report?);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeRecord {
    pub delta_alpha: f64,
    pub alpha_a: f64,
    pub alpha_b: f64,
    pub mode: Mode,
    pub branch: Branch,
    pub arclength: Vec<f64>,
    pub profile: Vec<f64>,
    /// Radians, referred to the detector axis point.
    pub fitted_phase: f64,
    pub visibility: f64,
    pub fit_residual: f64,
    pub wavenumber: f64,
    pub visibility_error: f64,
    pub degenerate: bool,
    /// Total probability collected by the detector line.
    pub detected: f64,
    /// Largest mass-ledger imbalance among the contributing runs.
    pub ledger_imbalance: f64,
    /// Bhattacharyya overlap of the two single-path profiles, when used.
    pub path_overlap: Option<f64>,
    pub tags: Vec<String>,
}

fn needed_runs(mode: Mode, delta_alpha: f64, alpha_a: f64, alpha_b: f64) -> Vec<RunKey> {
    match mode {
        Mode::Superseparability if !is_integer(delta_alpha, DEFAULT_INTEGER_TOLERANCE) => {
            vec![RunKey::new(Openings::OnlyA, alpha_a, alpha_b), RunKey::new(Openings::OnlyB, alpha_a, alpha_b)]
        }
        _ => vec![RunKey::new(Openings::Both, alpha_a, alpha_b)],
    }
}

/// One record per `Δα`, in input order, with `α_B = α_A + Δα` and `α_A`
/// taken from the template. Runs already in `cache` are reused.
pub fn sweep_with_cache(
    template: &ScenarioConfig,
    values: &[f64],
    mode: Mode,
    cache: &mut RunCache,
) -> Result<Vec<FringeRecord>> {
    if values.is_empty() {
        return Err(ExperimentError::InvalidSweep("no Δα values".into()));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(ExperimentError::InvalidSweep(format!("Δα = {v} is not finite")));
    }
    let alpha_a = template.alpha_a();
    let points: Vec<(f64, f64)> = values.iter().map(|&d| (d, alpha_a + d)).collect();
    let keys: Vec<RunKey> = points.iter().flat_map(|&(d, b)| needed_runs(mode, d, alpha_a, b)).collect();
    cache.ensure(template, &keys)?;

    let options = FringeFitOptions { poly_degree: template.params.poly_degree, ..FringeFitOptions::default() };
    points
        .iter()
        .map(|&(delta_alpha, alpha_b)| {
            let keys = needed_runs(mode, delta_alpha, alpha_a, alpha_b);
            let reports: Vec<&DetectorReport> = keys.iter().map(|k| cache.get(k).expect("ensured")).collect();
            let (branch, profile, path_overlap) = if reports.len() == 1 {
                (Branch::Coherent, reports[0].intensity.clone(), None)
            } else {
                let p = predict_superseparability(
                    None,
                    &reports[0].intensity,
                    &reports[1].intensity,
                    delta_alpha,
                    DEFAULT_INTEGER_TOLERANCE,
                )?;
                (Branch::Incoherent, p, Some(profile_overlap(&reports[0].intensity, &reports[1].intensity)))
            };
            let arclength = reports[0].arclength.clone();
            let (s, y) = template.fit_samples(&arclength, &profile);
            let fit = fringe_fit_estimate(&s, &y, &options)?;
            let degenerate = fit.is_degenerate();
            let scenario = template.with_alphas(alpha_a, alpha_b)?;
            Ok(FringeRecord {
                delta_alpha,
                alpha_a,
                alpha_b,
                mode,
                branch,
                detected: profile.iter().sum(),
                ledger_imbalance: reports.iter().map(|r| r.ledger.imbalance().abs()).fold(0.0, f64::max),
                path_overlap,
                arclength,
                profile,
                fitted_phase: fit.phase,
                visibility: fit.visibility,
                fit_residual: fit.residual,
                wavenumber: fit.wavenumber,
                visibility_error: fit.visibility_error,
                degenerate,
                tags: scenario.tags,
            })
        })
        .collect()
}

/// Sweeps `Δα` in the template's mode with a fresh run cache.
pub fn sweep_delta_alpha(template: &ScenarioConfig, values: &[f64]) -> Result<Vec<FringeRecord>> {
    sweep_with_cache(template, values, template.mode, &mut RunCache::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_delta_alpha_returns_the_coherent_profile() {
        let coherent = [1.0, 2.0, 3.0];
        let out = predict_superseparability(Some(&coherent), &[0.1; 3], &[0.2; 3], 2.0, 1e-9).unwrap();
        assert_eq!(out, coherent);
        assert!(predict_superseparability(None, &[0.1; 3], &[0.2; 3], -1.0, 1e-9).is_err());
    }

    #[test]
    fn fractional_delta_alpha_adds_intensities() {
        let out = predict_superseparability(None, &[1.0, 2.0], &[0.5, 0.25], 0.5, 1e-9).unwrap();
        assert_eq!(out, vec![1.5, 2.25]);
        assert!(predict_superseparability(None, &[1.0], &[0.5, 0.25], 0.5, 1e-9).is_err());
    }

    #[test]
    fn run_selection_follows_the_mode() {
        assert_eq!(needed_runs(Mode::StandardQM, 0.5, 0.0, 0.5).len(), 1);
        assert_eq!(needed_runs(Mode::Superseparability, 0.5, 0.0, 0.5).len(), 2);
        assert_eq!(needed_runs(Mode::Superseparability, 1.0, 0.0, 1.0), vec![RunKey::new(Openings::Both, 0.0, 1.0)]);
    }

    #[test]
    fn overlap_limits() {
        assert!((profile_overlap(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 1.0).abs() < 1e-15);
        assert_eq!(profile_overlap(&[1.0, 0.0], &[0.0, 1.0]), 0.0);
        assert_eq!(profile_overlap(&[0.0], &[0.0]), 0.0);
    }

    #[test]
    fn integer_tolerance() {
        assert!(is_integer(3.0 + 1e-12, DEFAULT_INTEGER_TOLERANCE));
        assert!(!is_integer(0.5, DEFAULT_INTEGER_TOLERANCE));
        assert!(is_integer(-2.0, 0.0));
    }
}
