use abnoninterf::evolve::checks::{
    free_spreading, grid_spacing_ladder, norm_drift, plaquette_holonomy_error, time_step_ladder,
};
use abnoninterf::evolve::{
    covariant_gaussian, EvolutionParams, Grid2D, SolverSettings, FLUX_OFFSET_X, FLUX_OFFSET_Y,
};
use abnoninterf::{FluxConfig, FluxLine, Vec2};

fn walled_channel() -> (Grid2D, FluxConfig, Vec<f64>) {
    let g = Grid2D::new(512, 256, 1.0, 1.0, Vec2::ZERO).unwrap();
    let mut pot = vec![0.0; g.len()];
    for j in 0..g.ny {
        for i in 200..210 {
            if !(100..110).contains(&j) && !(146..156).contains(&j) {
                pot[g.index(i, j)] = 1e4;
            }
        }
    }
    let cfg = FluxConfig::new(
        vec![
            FluxLine::new(Vec2::new(205.0 + FLUX_OFFSET_X, 128.0 + FLUX_OFFSET_Y), 0.5),
            FluxLine::new(Vec2::new(330.0 + FLUX_OFFSET_X, 40.0 + FLUX_OFFSET_Y), -1.25),
        ],
        1e-6,
    )
    .unwrap();
    (g, cfg, pot)
}

#[test]
fn free_packet_spreads_like_the_continuum() {
    let c = free_spreading(512, 256, 10.0, 1200).unwrap();
    assert!(c.relative_error < 5e-3, "{c:?}");
    // the packet must actually have spread
    assert!(c.expected > 1.7 * 10.0);
}

#[test]
fn plaquettes_carry_exactly_the_enclosed_flux() {
    let grid = Grid2D::new(40, 30, 0.5, 0.5, Vec2::new(-10.0, -7.5)).unwrap();
    let at = |i: f64, j: f64| Vec2::new(-10.0 + (i + FLUX_OFFSET_X) * 0.5, -7.5 + (j + FLUX_OFFSET_Y) * 0.5);
    let cfg = FluxConfig::new(
        vec![FluxLine::new(at(5.0, 7.0), 0.37), FluxLine::new(at(20.0, 14.0), -2.5), FluxLine::new(at(33.0, 3.0), 1.0 / 3.0)],
        1e-6,
    )
    .unwrap();
    assert!(plaquette_holonomy_error(&grid, &cfg).unwrap() < 1e-12);
}

#[test]
fn norm_is_conserved_without_absorber() {
    let (g, cfg, pot) = walled_channel();
    let params = EvolutionParams::free(1.0, &g).with_flux(cfg.clone()).with_potential(pot);
    assert_eq!(params.solver, SolverSettings::default());
    let f = covariant_gaussian(&g, Vec2::new(120.0, 128.0), 16.0, Vec2::new(1.0, 0.0), &cfg).unwrap();
    let drift = norm_drift(&f, &params, 1000).unwrap();
    assert!(drift < 1e-10, "drift {drift:e}");
}

#[test]
fn second_order_in_time() {
    let far = FluxConfig::single(Vec2::new(10.0 + 0.25 * FLUX_OFFSET_X, 10.0 + 0.25 * FLUX_OFFSET_Y), 0.5);
    let l = time_step_ladder(0.25, 256, &far).unwrap();
    assert!((l.ratios[0] - 4.0).abs() < 0.4, "{l:?}");
}

#[test]
fn second_order_in_space() {
    let l = grid_spacing_ladder(0.5, &FluxConfig::empty()).unwrap();
    assert!((l.ratios[0] - 4.0).abs() < 0.4, "{l:?}");
    assert!(l.differences[1] < l.differences[0]);
}
