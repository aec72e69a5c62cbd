mod common;

use std::f64::consts::PI;

use broadbeam::convex::{design_v1, ConvexDesignSpec};
use broadbeam::filter::FilterBank;
use broadbeam::iterative::{
    compute_gamma_pb, iterate_step, linearize, run_two_step, IterationSamples, IterativeSpec, StepBounds,
};
use broadbeam::presets::Example;
use broadbeam::response::group_delay;
use broadbeam::sampling::{GridConfig, GridMode};
use broadbeam::units::db_to_amplitude;
use broadbeam_socp::Settings;
use common::*;
use rand::Rng;

fn small_convex(ex: Example, taps: usize) -> ConvexDesignSpec {
    let tau_d = if ex.tau_d() > 0.0 { (taps as f64 - 1.0) / 2.0 } else { 0.0 };
    let mut s = ConvexDesignSpec::new(Example::geometry(), ex.band().unwrap(), taps, db_to_amplitude(-6.0), 1.0, tau_d);
    s.grid_freqs = 12;
    s.grid_angles = 12;
    s
}

fn small_iterative(ex: Example, taps: usize) -> IterativeSpec {
    let mut s = IterativeSpec::new(small_convex(ex, taps));
    s.grid = GridConfig { virtual_freqs: 40, virtual_angles: 60, freq_blocks: 6, angle_blocks: 8, edge_points: 2, mode: GridMode::Nonuniform };
    s.max_iters = 10;
    s.verify_factor = 2;
    s
}

/// Every design-grid point of `spec` as linearization samples.
fn grid_samples(spec: &ConvexDesignSpec) -> IterationSamples {
    let g = spec.grid().unwrap();
    let tensor = |angles: &[f64]| g.freqs.iter().flat_map(|&w| angles.iter().map(move |&t| (w, t))).collect::<Vec<_>>();
    IterationSamples {
        group_delay: tensor(&g.passband),
        magnitude: tensor(&g.passband),
        stopband: tensor(&g.stopband),
        wng: g.freqs.clone(),
    }
}

fn bounds(radius: f64, gamma_pb: f64, spec: &ConvexDesignSpec) -> StepBounds {
    StepBounds { radius, gamma_pb, gamma_sb: spec.stopband_ceiling, slack_weight: 1000.0 }
}

#[test]
fn trust_region_is_honoured_every_iteration() {
    let spec = small_iterative(Example::Two, 8);
    let d = run_two_step(&spec).unwrap();
    assert_eq!(d.paths.len(), 2);
    for r in d.trace() {
        assert!(r.step_norm <= r.radius + r.slack + 1e-8, "{r:?}");
        assert!(r.radius == spec.schedule.radius(r.k) || r.retried);
    }
    let best = d.paths.iter().map(|p| p.sigma_tau).fold(f64::INFINITY, f64::min);
    assert_eq!(d.chosen_path().sigma_tau, best);
    for p in &d.paths {
        let running = p.records.iter().map(|r| r.objective).fold(f64::INFINITY, f64::min);
        assert_eq!(p.best_objective, running);
        assert!(p.iterations <= spec.max_iters);
    }
}

#[test]
fn iterations_reduce_the_group_delay_spread() {
    let spec = small_iterative(Example::One, 8);
    let d = run_two_step(&spec).unwrap();
    for p in &d.paths {
        let grid = spec.convex.grid().unwrap();
        let start = broadbeam::metrics::group_delay_stats(&spec.convex.geometry, &p.start.filters, &grid.freqs, &grid.passband);
        assert!(p.sigma_tau < start.spread(), "{:?}: {} vs {}", p.path, p.sigma_tau, start.spread());
    }
}

#[test]
fn symmetric_iterations_give_mirrored_beampatterns() {
    let mut spec = small_iterative(Example::One, 6);
    spec.symmetric_iterations = true;
    spec.b_path = false;
    let d = run_two_step(&spec).unwrap();
    let x = &d.filters;
    for n in 0..6 {
        for l in 0..6 {
            assert!((x.get(n, l) - x.get(6 - n, l)).abs() < 1e-12);
        }
    }
    for i in 0..20 {
        let w = 0.1 + 3.0 * i as f64 / 19.0;
        for j in 0..20 {
            let th = PI * j as f64 / 19.0;
            let diff = direct_response(&spec.convex.geometry, x, w, th) - direct_response(&spec.convex.geometry, x, w, PI - th);
            assert!(diff.norm() < 1e-9);
        }
    }
}

#[test]
fn linearization_matches_direct_evaluation() {
    let spec = small_convex(Example::Two, 8);
    let mut r = rng(51);
    let x = random_bank(&mut r, 7, 8);
    let samples = grid_samples(&spec);
    let lin = linearize(&spec.geometry, &x, 0.0, spec.band.theta_d, 1.0, &samples).unwrap();
    for (i, &(w, th)) in samples.magnitude.iter().enumerate() {
        assert!((lin.f[i] - (direct_response(&spec.geometry, &x, w, th).norm_sqr() - 1.0)).abs() < 1e-12);
    }
    for (i, &(w, th)) in samples.group_delay.iter().enumerate() {
        if direct_response(&spec.geometry, &x, w, th).norm_sqr() > 1e-2 * x.norm().powi(2) {
            let want = phase_derivative_delay(&spec.geometry, &x, w, th);
            assert!((lin.d[i] - want).abs() <= 1e-6 * (1.0 + want.abs()));
        }
    }
    for (i, &w) in samples.wng.iter().enumerate() {
        assert!((lin.h[i] - (direct_wng(&spec.geometry, &x, w, spec.band.theta_d) - 1.0)).abs() < 1e-12);
    }
    // the magnitude model is exact to second order
    let u: Vec<f64> = (0..x.len()).map(|_| r.gen_range(-1.0..1.0)).collect();
    let (w, th) = samples.magnitude[5];
    let remainder = |t: f64| {
        let y = FilterBank::from_flat(7, 8, x.as_flat().iter().zip(&u).map(|(a, b)| a + t * b).collect()).unwrap();
        let pred = lin.f[5] + t * lin.dm[5].iter().zip(&u).map(|(a, b)| a * b).sum::<f64>();
        (direct_response(&spec.geometry, &y, w, th).norm_sqr() - 1.0 - pred).abs()
    };
    let ratio = remainder(1e-3) / remainder(5e-4);
    assert!((ratio - 4.0).abs() < 0.05, "remainder ratio {ratio}");
}

#[test]
fn feasible_start_needs_no_slack() {
    let spec = small_convex(Example::One, 8);
    let x = design_v1(&spec).unwrap().filters;
    let gamma_pb = compute_gamma_pb(&spec.geometry, &x, &spec.grid().unwrap(), 0.0);
    let samples = grid_samples(&spec);
    let lin = linearize(&spec.geometry, &x, 0.0, spec.band.theta_d, 1.0 - 1e-6, &samples).unwrap();
    let step = iterate_step(&x, &lin, &bounds(0.05, gamma_pb + 1e-9, &spec), false, &Settings::default()).unwrap();
    assert!(step.slack <= 1e-8, "slack {}", step.slack);
    assert!(step.delta.iter().map(|v| v * v).sum::<f64>().sqrt() <= 0.05 + 1e-8);
}

#[test]
fn exact_linear_phase_start_is_a_fixed_point() {
    let mut spec = small_convex(Example::Three, 6);
    spec.linear_phase = true;
    let x = design_v1(&spec).unwrap().filters;
    let samples = grid_samples(&spec);
    let lin = linearize(&spec.geometry, &x, 2.5, spec.band.theta_d, 1e-3, &samples).unwrap();
    assert!(lin.d.iter().all(|v| v.abs() < 1e-9));
    let mut b = bounds(0.01, 1.0, &spec);
    b.gamma_sb = 10.0;
    let step = iterate_step(&x, &lin, &b, false, &Settings::default()).unwrap();
    assert!(step.objective < 1e-7, "objective {}", step.objective);
}

#[test]
fn one_step_from_a_perturbed_linear_phase_design_improves_the_delay() {
    let mut spec = small_convex(Example::Three, 6);
    spec.linear_phase = true;
    let x0 = design_v1(&spec).unwrap().filters;
    let mut r = rng(52);
    let x = FilterBank::from_flat(7, 6, x0.as_flat().iter().map(|v| v + 2e-3 * r.gen_range(-1.0..1.0)).collect()).unwrap();
    let samples = grid_samples(&spec);
    let worst = |y: &FilterBank| {
        samples
            .group_delay
            .iter()
            .map(|&(w, th)| (group_delay(&spec.geometry, y, w, th).unwrap() - 2.5).abs())
            .fold(0.0, f64::max)
    };
    let lin = linearize(&spec.geometry, &x, 2.5, spec.band.theta_d, 1e-3, &samples).unwrap();
    let step = iterate_step(&x, &lin, &bounds(0.01, 1.0, &spec), false, &Settings::default()).unwrap();
    let y = FilterBank::from_flat(7, 6, x.as_flat().iter().zip(&step.delta).map(|(a, b)| a + b).collect()).unwrap();
    assert!(worst(&y) < worst(&x), "{} vs {}", worst(&y), worst(&x));
}

#[test]
fn step_program_rows_follow_the_sample_counts() {
    let spec = small_convex(Example::One, 5);
    let x = random_bank(&mut rng(53), 7, 5);
    let samples = IterationSamples {
        group_delay: vec![(1.5, 1.5), (1.6, 1.5), (1.7, 1.6)],
        magnitude: vec![(1.5, 1.5); 4],
        stopband: vec![(1.5, 0.2); 5],
        wng: vec![1.3, 2.0],
    };
    let lin = linearize(&spec.geometry, &x, 0.0, spec.band.theta_d, 1.0, &samples).unwrap();
    let prog = broadbeam::iterative::build_step_program(&x, &lin, &bounds(0.1, 0.1, &spec), false).unwrap();
    // 2 per delay row, 2 per magnitude row, 1 per WNG row, 3 per stopband
    // cone, the trust cone over δ and the slack sign row
    assert_eq!(prog.num_rows(), 2 * 3 + 2 * 4 + 2 + 3 * 5 + (35 + 1) + 1);
}

#[test]
fn iterative_spec_validation() {
    let mut s = small_iterative(Example::One, 6);
    s.slack_weight = 0.0;
    s.max_iters = 0;
    let err = run_two_step(&s).unwrap_err().to_string();
    assert!(err.contains("slack weight") && err.contains("max_iters"), "{err}");
}
