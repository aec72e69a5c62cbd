//! Figures of merit for a designed beamformer.
//!
//! All metrics are taken on one uniform grid: the passband ripple
//! `A_p = 20 log10(M_max / M_min)`, the stopband attenuation
//! `A_a = -20 log10(M_max)`, the passband group-delay extrema and the white
//! noise gain toward the steering angle.

use log::warn;
use num_complex::Complex64;

use crate::error::BeamError;
use crate::filter::FilterBank;
use crate::geometry::ArrayGeometry;
use crate::response::{white_noise_gain, FrequencySlice};
use crate::sampling::UniformGrid;
use crate::units::{amplitude_to_db, power_to_db};

/// How the cost at the solution is measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostKind {
    /// `‖U_pb x - d_pb‖_∞` with `d = e^{-jωτ_d}`.
    Convex { tau_d: f64 },
    /// `‖|U_pb x|² - 1‖_∞`.
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub passband_ripple_db: f64,
    pub stopband_attenuation_db: f64,
    pub tau_avg: f64,
    pub sigma_tau: f64,
    pub j_sol: f64,
    pub min_wng_db: f64,
    /// Passband points left out of the group-delay extrema (response null).
    pub skipped_points: usize,
}

/// Passband group-delay extrema over a tensor grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupDelayStats {
    pub tau_min: f64,
    pub tau_max: f64,
    /// `τ_max(θ)` for every angle.
    pub per_angle_max: Vec<f64>,
    pub skipped: usize,
}

impl GroupDelayStats {
    pub fn spread(&self) -> f64 {
        self.tau_max - self.tau_min
    }

    /// `σ_τ(θ) = τ_max(θ) - τ_min`, with the global minimum.
    pub fn per_angle_deviation(&self) -> Vec<f64> {
        self.per_angle_max.iter().map(|t| t - self.tau_min).collect()
    }
}

pub fn group_delay_stats(geom: &ArrayGeometry, x: &FilterBank, freqs: &[f64], angles: &[f64]) -> GroupDelayStats {
    let delays: Vec<Vec<f64>> = angles.iter().map(|&t| geom.element_delays(t)).collect();
    let xx = x.norm().powi(2);
    let mut per_angle_max = vec![f64::NEG_INFINITY; angles.len()];
    let mut tau_min = f64::INFINITY;
    let mut skipped = 0;
    for &w in freqs {
        let slice = FrequencySlice::new(x, w);
        for (a, tmax) in delays.iter().zip(per_angle_max.iter_mut()) {
            match slice.at(a).group_delay(xx) {
                Ok(t) => {
                    *tmax = tmax.max(t);
                    tau_min = tau_min.min(t);
                }
                Err(_) => skipped += 1,
            }
        }
    }
    if skipped > 0 {
        warn!("{skipped} passband points have a near-zero response and were left out of the group delay");
    }
    let tau_max = per_angle_max.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    GroupDelayStats { tau_min, tau_max, per_angle_max, skipped }
}

/// One beampattern grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternPoint {
    pub omega: f64,
    pub theta: f64,
    pub mag_db: f64,
    pub phase: f64,
    /// `None` at response nulls.
    pub group_delay: Option<f64>,
}

pub fn beampattern(geom: &ArrayGeometry, x: &FilterBank, freqs: &[f64], angles: &[f64]) -> Vec<PatternPoint> {
    let delays: Vec<Vec<f64>> = angles.iter().map(|&t| geom.element_delays(t)).collect();
    let xx = x.norm().powi(2);
    let mut out = Vec::with_capacity(freqs.len() * angles.len());
    for &w in freqs {
        let slice = FrequencySlice::new(x, w);
        for (a, &theta) in delays.iter().zip(angles) {
            let r = slice.at(a);
            out.push(PatternPoint {
                omega: w,
                theta,
                mag_db: amplitude_to_db(r.b.norm()),
                phase: r.b.arg(),
                group_delay: r.group_delay(xx).ok(),
            });
        }
    }
    out
}

/// `(ω, WNG)` pairs toward `theta_d` (linear power ratio).
pub fn wng_curve(geom: &ArrayGeometry, x: &FilterBank, freqs: &[f64], theta_d: f64) -> Result<Vec<(f64, f64)>, BeamError> {
    freqs.iter().map(|&w| Ok((w, white_noise_gain(geom, x, w, theta_d)?))).collect()
}

/// Metrics together with the curves they are derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignReport {
    pub metrics: Metrics,
    pub passband_angles: Vec<f64>,
    pub sigma_tau_theta: Vec<f64>,
    pub wng: Vec<(f64, f64)>,
}

fn magnitude_extrema(geom: &ArrayGeometry, x: &FilterBank, freqs: &[f64], angles: &[f64], mut f: impl FnMut(f64, Complex64)) {
    let delays: Vec<Vec<f64>> = angles.iter().map(|&t| geom.element_delays(t)).collect();
    for &w in freqs {
        let slice = FrequencySlice::new(x, w);
        for a in &delays {
            f(w, slice.at(a).b);
        }
    }
}

pub fn evaluate(geom: &ArrayGeometry, x: &FilterBank, grid: &UniformGrid, cost: CostKind) -> Result<DesignReport, BeamError> {
    let (mut mmin, mut mmax, mut j) = (f64::INFINITY, 0.0f64, 0.0f64);
    magnitude_extrema(geom, x, &grid.freqs, &grid.passband, |w, b| {
        let m = b.norm();
        mmin = mmin.min(m);
        mmax = mmax.max(m);
        let e = match cost {
            CostKind::Convex { tau_d } => (b - Complex64::from_polar(1.0, -w * tau_d)).norm(),
            CostKind::Iterative => (b.norm_sqr() - 1.0).abs(),
        };
        j = j.max(e);
    });
    let mut sb_max = 0.0f64;
    magnitude_extrema(geom, x, &grid.freqs, &grid.stopband, |_, b| sb_max = sb_max.max(b.norm()));
    let gd = group_delay_stats(geom, x, &grid.freqs, &grid.passband);
    let wng = wng_curve(geom, x, &grid.freqs, grid.theta_d)?;
    let min_wng = wng.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let metrics = Metrics {
        passband_ripple_db: amplitude_to_db(mmax / mmin),
        stopband_attenuation_db: -amplitude_to_db(sb_max),
        tau_avg: 0.5 * (gd.tau_max + gd.tau_min),
        sigma_tau: gd.spread(),
        j_sol: j,
        min_wng_db: power_to_db(min_wng),
        skipped_points: gd.skipped,
    };
    Ok(DesignReport {
        metrics,
        passband_angles: grid.passband.clone(),
        sigma_tau_theta: gd.per_angle_deviation(),
        wng,
    })
}
