//! Independent oracles shared by the property tests and the acceptance run.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::f64::consts::PI;

use broadbeam::convex::{build_v1_program, ConvexDesignSpec};
use broadbeam::filter::FilterBank;
use broadbeam::geometry::ArrayGeometry;
use broadbeam::reduced::{reduced_steering_linear_phase, reduced_steering_symmetric, Parameterization, Reduction};
use broadbeam::response::{
    group_delay, group_delay_gradient, magsq_error_gradient, steering_vector, white_noise_gain,
    white_noise_gain_matrix_form, wng_error_gradient,
};
use broadbeam::sampling::{select_nonuniform, GridConfig, GridMode};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_bank(rng: &mut ChaCha8Rng, mics: usize, taps: usize) -> FilterBank {
    let flat = (0..mics * taps).map(|_| rng.gen_range(-1.0..1.0)).collect();
    FilterBank::from_flat(mics, taps, flat).unwrap()
}

/// Random array with 2 to 7 elements on a 10 cm aperture.
pub fn random_geometry(rng: &mut ChaCha8Rng) -> ArrayGeometry {
    let n = rng.gen_range(2..8);
    let pos = (0..n).map(|i| -0.05 + 0.1 * i as f64 / (n - 1) as f64 + rng.gen_range(-0.004..0.004)).collect();
    ArrayGeometry::new(pos, 8000.0, 340.0).unwrap()
}

/// Random geometry with a random filter bank of 1 to 20 taps.
pub fn random_instance(rng: &mut ChaCha8Rng) -> (ArrayGeometry, FilterBank) {
    let geom = random_geometry(rng);
    let taps = rng.gen_range(1..21);
    let x = random_bank(rng, geom.num_mics(), taps);
    (geom, x)
}

/// `Σ_n Σ_l x_{n,l} exp(jω(-f_s d_n cos θ / c - l))` term by term.
pub fn direct_response(geom: &ArrayGeometry, x: &FilterBank, omega: f64, theta: f64) -> Complex64 {
    let mut b = Complex64::new(0.0, 0.0);
    for (n, d) in geom.positions().iter().enumerate() {
        let lead = -geom.sample_rate() * d * theta.cos() / geom.sound_speed();
        for l in 0..x.num_taps() {
            b += x.get(n, l) * Complex64::from_polar(1.0, omega * (lead - l as f64));
        }
    }
    b
}

/// `|B(θ_d)|² / Σ_n |Σ_l x_{n,l} e^{-jωl}|²`.
pub fn direct_wng(geom: &ArrayGeometry, x: &FilterBank, omega: f64, theta_d: f64) -> f64 {
    let den: f64 = (0..x.num_mics())
        .map(|n| {
            (0..x.num_taps())
                .map(|l| x.get(n, l) * Complex64::from_polar(1.0, -omega * l as f64))
                .sum::<Complex64>()
                .norm_sqr()
        })
        .sum();
    direct_response(geom, x, omega, theta_d).norm_sqr() / den
}

/// `-d arg B / dω` by a central difference of the unwrapped phase.
pub fn phase_derivative_delay(geom: &ArrayGeometry, x: &FilterBank, omega: f64, theta: f64) -> f64 {
    let h = 1e-5;
    let lo = direct_response(geom, x, omega - h, theta);
    let hi = direct_response(geom, x, omega + h, theta);
    -(hi * lo.conj()).arg() / (2.0 * h)
}

fn perturbed(x: &FilterBank, i: usize, h: f64) -> FilterBank {
    let mut flat = x.as_flat().to_vec();
    flat[i] += h;
    FilterBank::from_flat(x.num_mics(), x.num_taps(), flat).unwrap()
}

fn fd_gradient(x: &FilterBank, f: impl Fn(&FilterBank) -> f64) -> Vec<f64> {
    let h = 1e-6;
    (0..x.len()).map(|i| (f(&perturbed(x, i, h)) - f(&perturbed(x, i, -h))) / (2.0 * h)).collect()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
    let scale = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    diff / scale
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gradient {
    GroupDelay,
    MagnitudeError,
    WngError,
}

/// Largest relative gap between the analytic gradient and central
/// differences over `instances` random points. Points whose response is
/// within 1% of a null are redrawn.
pub fn gradient_check(kind: Gradient, instances: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < instances {
        let (geom, x) = random_instance(&mut r);
        let omega = r.gen_range(0.1..PI - 0.1);
        let theta = r.gen_range(0.0..PI);
        if direct_response(&geom, &x, omega, theta).norm_sqr() < 1e-2 * x.norm().powi(2) {
            continue;
        }
        let err = match kind {
            Gradient::GroupDelay => {
                let g = group_delay_gradient(&geom, &x, omega, theta).unwrap();
                rel_err(&g, &fd_gradient(&x, |y| group_delay(&geom, y, omega, theta).unwrap()))
            }
            Gradient::MagnitudeError => {
                let (_, g) = magsq_error_gradient(&geom, &x, omega, theta, 1.0);
                rel_err(&g, &fd_gradient(&x, |y| direct_response(&geom, y, omega, theta).norm_sqr() - 1.0))
            }
            Gradient::WngError => {
                let (_, g) = wng_error_gradient(&geom, &x, omega, theta, 1.0).unwrap();
                rel_err(&g, &fd_gradient(&x, |y| direct_wng(&geom, y, omega, theta) - 1.0))
            }
        };
        worst = worst.max(err);
        done += 1;
    }
    worst
}

/// Largest relative disagreement among the two library WNG forms and the
/// direct ratio.
pub fn wng_form_disagreement(instances: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let (geom, x) = random_instance(&mut r);
        let omega = r.gen_range(0.05..PI);
        let theta = r.gen_range(0.0..PI);
        let a = white_noise_gain(&geom, &x, omega, theta).unwrap();
        let b = white_noise_gain_matrix_form(&geom, &x, omega, theta).unwrap();
        let c = direct_wng(&geom, &x, omega, theta);
        worst = worst.max((a - b).abs() / c).max((a - c).abs() / c);
    }
    worst
}

/// Builds the full coefficients from reduced ones by the tie rule alone.
pub fn tie_expand(kind: Parameterization, mics: usize, taps: usize, reduced: &[f64]) -> FilterBank {
    let mut x = FilterBank::zeros(mics, taps);
    let mut k = 0;
    let mut set = vec![false; mics * taps];
    for n in 0..mics {
        for l in 0..taps {
            if set[n * taps + l] {
                continue;
            }
            let (pn, pl) = match kind {
                Parameterization::Full => (n, l),
                Parameterization::Symmetric => (mics - 1 - n, l),
                Parameterization::LinearPhase => (mics - 1 - n, taps - 1 - l),
            };
            x.set(n, l, reduced[k]);
            x.set(pn, pl, reduced[k]);
            set[n * taps + l] = true;
            set[pn * taps + pl] = true;
            k += 1;
        }
    }
    assert_eq!(k, reduced.len());
    x
}

/// Largest gap, relative to `Σ|x|`, between the full response of the
/// expanded coefficients and the closed-form reduced steering vectors on a
/// `grid × grid` tensor over `(0, π] × [0, π]`.
pub fn expansion_disagreement(kind: Parameterization, mics: usize, taps: usize, grid: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let geom = ArrayGeometry::uniform(mics, 0.04, 8000.0, 340.0).unwrap();
    let red = Reduction::new(kind, mics, taps);
    let xr: Vec<f64> = (0..red.num_vars()).map(|_| r.gen_range(-1.0..1.0)).collect();
    let x = red.expand(&xr).unwrap();
    assert_eq!(x, tie_expand(kind, mics, taps, &xr), "expansion does not follow the tie rule");
    let scale: f64 = x.as_flat().iter().map(|v| v.abs()).sum();
    let mut worst = 0.0f64;
    for i in 0..grid {
        let omega = PI * (i + 1) as f64 / grid as f64;
        for j in 0..grid {
            let theta = PI * j as f64 / (grid - 1) as f64;
            let full = direct_response(&geom, &x, omega, theta);
            let closed = match kind {
                Parameterization::Symmetric => reduced_steering_symmetric(&geom, taps, omega, theta).unwrap(),
                Parameterization::LinearPhase => reduced_steering_linear_phase(&geom, taps, omega, theta).unwrap(),
                Parameterization::Full => steering_vector(&geom, taps, omega, theta),
            };
            let via_closed: Complex64 = closed.iter().zip(&xr).map(|(g, v)| g * v).sum();
            let via_rows: Complex64 = red
                .reduce_row(&steering_vector(&geom, taps, omega, theta))
                .iter()
                .zip(&xr)
                .map(|(g, v)| g * v)
                .sum();
            worst = worst.max((full - via_closed).norm() / scale).max((full - via_rows).norm() / scale);
        }
    }
    worst
}

/// Per-block argmax by sorting candidates: largest value first, lowest
/// flattened index on ties.
fn oracle_argmax(s: &[f64], cols: usize, rows: std::ops::Range<usize>, colr: std::ops::Range<usize>) -> (usize, usize) {
    let mut cand: Vec<(usize, usize)> = rows.flat_map(|p| colr.clone().map(move |q| (p, q))).collect();
    cand.sort_by(|a, b| s[b.0 * cols + b.1].total_cmp(&s[a.0 * cols + a.1]).then(a.cmp(b)));
    cand[0]
}

fn oracle_bounds(total: usize, blocks: usize) -> Vec<usize> {
    (0..=blocks).map(|i| (i as f64 * total as f64 / blocks as f64).round() as usize).collect()
}

/// Exhaustive block selection with edge strips on a single angular segment.
pub fn oracle_selection(s: &[f64], p: usize, q: usize, m: usize, k: usize, edge: usize) -> BTreeSet<(usize, usize)> {
    let (fb, ab) = (oracle_bounds(p, m), oracle_bounds(q, k));
    let mut out = BTreeSet::new();
    for i in 0..m {
        for j in 0..k {
            out.insert(oracle_argmax(s, q, fb[i]..fb[i + 1], ab[j]..ab[j + 1]));
        }
    }
    let rows: BTreeSet<usize> = (0..edge).chain(p - edge..p).collect();
    let cols: BTreeSet<usize> = (0..edge).chain(q - edge..q).collect();
    for &r in &rows {
        for j in 0..k {
            out.insert(oracle_argmax(s, q, r..r + 1, ab[j]..ab[j + 1]));
        }
    }
    for &c in &cols {
        for i in 0..m {
            out.insert(oracle_argmax(s, q, fb[i]..fb[i + 1], c..c + 1));
        }
    }
    out
}

/// Number of random `20 × 20` surfaces (`4 × 4` blocks) on which the
/// library selection differs from the exhaustive oracle. Half the surfaces
/// are integer-valued so that ties occur.
pub fn selection_mismatches(trials: usize, edge: usize, seed: u64) -> usize {
    let mut r = rng(seed);
    let cfg = GridConfig { virtual_freqs: 20, virtual_angles: 20, freq_blocks: 4, angle_blocks: 4, edge_points: edge, mode: GridMode::Nonuniform };
    (0..trials)
        .filter(|t| {
            let s: Vec<f64> = (0..400)
                .map(|_| if t % 2 == 0 { r.gen_range(0.0..1.0) } else { r.gen_range(0..4) as f64 })
                .collect();
            let got: BTreeSet<_> = select_nonuniform(&s, 20, 20, &[0..20], &cfg).unwrap().into_iter().collect();
            got != oracle_selection(&s, 20, 20, 4, 4, edge)
        })
        .count()
}

/// Compares the cone violation of a small V1 program with the largest
/// violation of the original complex inequalities at random points. Returns
/// the largest gap and the number of feasibility disagreements.
pub fn cone_soundness(spec: &ConvexDesignSpec, instances: usize, seed: u64) -> (f64, usize) {
    let (prog, layout) = build_v1_program(spec).unwrap();
    let grid = spec.grid().unwrap();
    let geom = &spec.geometry;
    let mut r = rng(seed);
    let (mut gap, mut flips) = (0.0f64, 0);
    for _ in 0..instances {
        let scale = r.gen_range(0.01..0.3);
        let mut z: Vec<f64> = (0..layout.num_vars).map(|_| scale * r.gen_range(-1.0..1.0)).collect();
        z[layout.t] = r.gen_range(0.0..3.0);
        let x = layout.filters(&z).unwrap();
        let mut worst = 0.0f64;
        for (m, &w) in grid.freqs.iter().enumerate() {
            let d = Complex64::from_polar(1.0, -w * spec.tau_d);
            for &th in &grid.passband {
                worst = worst.max((direct_response(geom, &x, w, th) - d).norm() - z[layout.t]);
            }
            for &th in &grid.stopband {
                worst = worst.max(direct_response(geom, &x, w, th).norm() - spec.stopband_ceiling);
            }
            let energy: f64 = (0..x.num_mics())
                .map(|n| {
                    (0..x.num_taps())
                        .map(|l| x.get(n, l) * Complex64::from_polar(1.0, -w * l as f64))
                        .sum::<Complex64>()
                        .norm_sqr()
                })
                .sum();
            let look = (direct_response(geom, &x, w, grid.theta_d) * d.conj()).re;
            worst = worst.max(spec.wng_floor.at(m).sqrt() * energy.sqrt() - look);
        }
        let direct = worst.max(0.0);
        let cone = prog.cone_violation(&z);
        gap = gap.max((direct - cone).abs());
        if (direct > 1e-9) != (cone > 1e-9) {
            flips += 1;
        }
    }
    (gap, flips)
}
