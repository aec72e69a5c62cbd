mod common;

use broadbeam::convex::passband_error;
use broadbeam::filter::FilterBank;
use broadbeam::metrics::{beampattern, evaluate, group_delay_stats, wng_curve, CostKind};
use broadbeam::presets::Example;
use broadbeam::sampling::UniformGrid;
use common::*;

fn instance(seed: u64) -> (broadbeam::geometry::ArrayGeometry, FilterBank, UniformGrid) {
    let geom = Example::geometry();
    let x = random_bank(&mut rng(seed), 7, 10);
    let grid = UniformGrid::new(&Example::Two.band().unwrap(), 15, 15).unwrap();
    (geom, x, grid)
}

#[test]
fn group_delay_spread_agrees_with_phase_derivative_route() {
    let (geom, x, grid) = instance(61);
    let stats = group_delay_stats(&geom, &x, &grid.freqs, &grid.passband);
    assert_eq!(stats.skipped, 0);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut per_angle = vec![f64::NEG_INFINITY; grid.passband.len()];
    for &w in &grid.freqs {
        for (j, &th) in grid.passband.iter().enumerate() {
            let t = phase_derivative_delay(&geom, &x, w, th);
            lo = lo.min(t);
            hi = hi.max(t);
            per_angle[j] = per_angle[j].max(t);
        }
    }
    assert!((stats.spread() - (hi - lo)).abs() < 1e-5 * (1.0 + hi - lo));
    for (a, b) in stats.per_angle_deviation().iter().zip(&per_angle) {
        assert!((a - (b - lo)).abs() < 1e-5 * (1.0 + b.abs()));
    }
    // the beampattern route reports the same delays
    let pattern = beampattern(&geom, &x, &grid.freqs, &grid.passband);
    let delays: Vec<f64> = pattern.iter().map(|p| p.group_delay.unwrap()).collect();
    let spread = delays.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - delays.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!((spread - stats.spread()).abs() < 1e-12);
}

#[test]
fn ripple_attenuation_and_cost_match_brute_force() {
    let (geom, x, grid) = instance(62);
    let rep = evaluate(&geom, &x, &grid, CostKind::Convex { tau_d: 1.5 }).unwrap();
    let pb: Vec<f64> = grid.freqs.iter().flat_map(|&w| grid.passband.iter().map(move |&t| (w, t))).map(|(w, t)| direct_response(&geom, &x, w, t).norm()).collect();
    let sb = grid.freqs.iter().flat_map(|&w| grid.stopband.iter().map(move |&t| (w, t))).map(|(w, t)| direct_response(&geom, &x, w, t).norm()).fold(0.0, f64::max);
    let (mn, mx) = (pb.iter().cloned().fold(f64::INFINITY, f64::min), pb.iter().cloned().fold(0.0, f64::max));
    let m = rep.metrics;
    assert!((m.passband_ripple_db - 20.0 * (mx / mn).log10()).abs() < 1e-10);
    assert!((m.stopband_attenuation_db + 20.0 * sb.log10()).abs() < 1e-10);
    assert!((m.j_sol - passband_error(&geom, &x, &grid, 1.5)).abs() < 1e-12);
    let wmin = grid.freqs.iter().map(|&w| direct_wng(&geom, &x, w, grid.theta_d)).fold(f64::INFINITY, f64::min);
    assert!((m.min_wng_db - 10.0 * wmin.log10()).abs() < 1e-10);
    let gd = group_delay_stats(&geom, &x, &grid.freqs, &grid.passband);
    assert!((m.tau_avg - 0.5 * (gd.tau_max + gd.tau_min)).abs() < 1e-12);

    let it = evaluate(&geom, &x, &grid, CostKind::Iterative).unwrap().metrics;
    let want = pb.iter().map(|b| (b * b - 1.0).abs()).fold(0.0, f64::max);
    assert!((it.j_sol - want).abs() < 1e-12);
}

#[test]
fn delay_and_sum_reference_values() {
    let geom = Example::geometry();
    let mut x = FilterBank::zeros(7, 20);
    (0..7).for_each(|n| x.set(n, 4, 1.0 / 7.0));
    let grid = UniformGrid::new(&Example::One.band().unwrap(), 9, 9).unwrap();
    let rep = evaluate(&geom, &x, &grid, CostKind::Convex { tau_d: 4.0 }).unwrap();
    assert!((rep.metrics.min_wng_db - 10.0 * 7f64.log10()).abs() < 1e-10);
    let broadside = rep.passband_angles.iter().position(|t| (t - std::f64::consts::FRAC_PI_2).abs() < 1e-12).unwrap();
    assert!(rep.sigma_tau_theta[broadside] < 1e-12);
    assert!(rep.wng.iter().all(|&(_, g)| (g - 7.0).abs() < 1e-10));
}

#[test]
fn per_angle_deviation_uses_the_global_minimum() {
    let (geom, x, grid) = instance(63);
    let s = group_delay_stats(&geom, &x, &grid.freqs, &grid.passband);
    let dev = s.per_angle_deviation();
    assert!(dev.iter().all(|&d| d >= 0.0));
    assert!((dev.iter().cloned().fold(0.0, f64::max) - s.spread()).abs() < 1e-12);
}

#[test]
fn wng_curve_rejects_silent_filters() {
    let geom = Example::geometry();
    assert!(wng_curve(&geom, &FilterBank::zeros(7, 4), &[1.0], 1.0).is_err());
}
