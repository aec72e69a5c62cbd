mod common;

use std::f64::consts::PI;

use broadbeam::presets::Example;
use broadbeam::sampling::{block_bounds, select_nonuniform, GridConfig, GridMode, UniformGrid, VirtualGrid};
use common::*;
use rand::Rng;

fn cfg(p: usize, q: usize, m: usize, k: usize, e: usize) -> GridConfig {
    GridConfig { virtual_freqs: p, virtual_angles: q, freq_blocks: m, angle_blocks: k, edge_points: e, mode: GridMode::Nonuniform }
}

#[test]
fn selection_equals_exhaustive_block_maxima() {
    assert_eq!(selection_mismatches(200, 0, 31), 0);
}

#[test]
fn selection_with_edge_strips_equals_exhaustive_oracle() {
    assert_eq!(selection_mismatches(200, 2, 32), 0);
}

#[test]
fn blocks_cover_every_virtual_point_once() {
    for (total, blocks) in [(200, 22), (500, 52), (20, 4), (7, 3), (10, 10)] {
        let b = block_bounds(total, blocks);
        let mut owner = vec![0usize; total];
        for w in b.windows(2) {
            (w[0]..w[1]).for_each(|i| owner[i] += 1);
        }
        assert!(owner.iter().all(|&c| c == 1), "{total}/{blocks}");
    }
}

#[test]
fn global_maximum_is_always_selected() {
    let mut r = rng(33);
    let c = cfg(40, 60, 6, 7, 3);
    for _ in 0..50 {
        let s: Vec<f64> = (0..2400).map(|_| r.gen_range(0.0..1.0)).collect();
        let top = (0..2400).max_by(|&a, &b| s[a].total_cmp(&s[b])).unwrap();
        let got = select_nonuniform(&s, 40, 60, &[0..30, 30..60], &c).unwrap();
        assert!(got.contains(&(top / 60, top % 60)));
    }
}

#[test]
fn edge_points_are_always_present() {
    let c = cfg(40, 60, 4, 5, 3);
    let s = vec![0.0; 2400];
    let got = select_nonuniform(&s, 40, 60, &[0..25, 25..60], &c).unwrap();
    // every edge row and every segment-edge column appears at least once
    for p in [0, 1, 2, 37, 38, 39] {
        assert!(got.iter().any(|&(a, _)| a == p), "row {p}");
    }
    for q in [0, 1, 2, 22, 23, 24, 25, 26, 27, 57, 58, 59] {
        assert!(got.iter().any(|&(_, b)| b == q), "column {q}");
    }
}

#[test]
fn virtual_grids_span_the_bands() {
    let band = Example::Two.band().unwrap();
    let c = GridConfig::default();
    let pb = VirtualGrid::passband(&band, &c);
    let sb = VirtualGrid::stopband(&band, &c);
    assert_eq!((pb.freqs.len(), pb.angles.len(), sb.angles.len()), (200, 500, 500));
    assert_eq!(pb.angles[0], band.passband.lo);
    assert_eq!(*pb.angles.last().unwrap(), band.passband.hi);
    assert!(sb.angles.iter().all(|&t| band.stopband.iter().any(|i| i.contains(t))));
    assert_eq!(sb.segments.len(), 2);
}

#[test]
fn odd_uniform_grids_are_symmetric_about_the_band_centre() {
    let band = Example::One.band().unwrap();
    let g = UniformGrid::new(&band, 21, 21).unwrap();
    let mid = 0.5 * (band.omega_lo + band.omega_hi);
    for (a, b) in g.freqs.iter().zip(g.freqs.iter().rev()) {
        assert!((a + b - 2.0 * mid).abs() < 1e-14);
    }
    for (a, b) in g.passband.iter().zip(g.passband.iter().rev()) {
        assert!((a + b - PI).abs() < 1e-14);
    }
}
