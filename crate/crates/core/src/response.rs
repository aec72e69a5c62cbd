//! Beamformer response model.
//!
//! For a far-field source at angle `θ` the beamformer output is
//! `B(ω, θ) = gᵀx` with `g_{n,l} = exp(jω k_{nl})` and
//! `k_{nl} = -f_s d_n cos(θ)/c - l`. Frequencies are in rad/sample and all
//! delays are in samples.

use num_complex::Complex64;

use crate::error::BeamError;
use crate::filter::FilterBank;
use crate::geometry::ArrayGeometry;

/// Responses with `|B|² < GUARD · ‖x‖²` have no usable phase.
pub const GROUP_DELAY_GUARD: f64 = 1e-12;

/// Filter energies at or below this value make the WNG undefined.
pub const ENERGY_FLOOR: f64 = 1e-300;

/// Phase slopes `k_{nl}` for every flattened coefficient.
pub fn phase_slopes(geom: &ArrayGeometry, taps: usize, theta: f64) -> Vec<f64> {
    let delays = geom.element_delays(theta);
    let mut k = Vec::with_capacity(delays.len() * taps);
    for a in delays {
        for l in 0..taps {
            k.push(-a - l as f64);
        }
    }
    k
}

/// Steering vector `g(ω, θ)` in flattened filter-bank order.
pub fn steering_vector(geom: &ArrayGeometry, taps: usize, omega: f64, theta: f64) -> Vec<Complex64> {
    phase_slopes(geom, taps, theta)
        .into_iter()
        .map(|k| Complex64::from_polar(1.0, omega * k))
        .collect()
}

/// `A(ω) = I_N ⊗ a(ω)ᵀ` with `a_l = exp(-jωl)`, row-major `N × NL`.
pub fn filter_dft_matrix(mics: usize, taps: usize, omega: f64) -> Vec<Complex64> {
    let nl = mics * taps;
    let mut a = vec![Complex64::new(0.0, 0.0); mics * nl];
    for n in 0..mics {
        for l in 0..taps {
            a[n * nl + n * taps + l] = Complex64::from_polar(1.0, -omega * l as f64);
        }
    }
    a
}

/// Per-filter transforms at a single frequency, reused across angles.
///
/// With `X_n = Σ_l x_{n,l} e^{-jωl}` and `Y_n = Σ_l l x_{n,l} e^{-jωl}`, the
/// response at any angle costs `O(N)`:
/// `B = Σ_n e^{-jω a_n} X_n` where `a_n` is the element delay.
#[derive(Debug, Clone)]
pub struct FrequencySlice {
    pub omega: f64,
    x: Vec<Complex64>,
    y: Vec<Complex64>,
}

/// Response value and the auxiliary sum needed for the group delay.
#[derive(Debug, Clone, Copy)]
pub struct PointResponse {
    /// `B = α₁ + jβ₁`.
    pub b: Complex64,
    /// `Σ x k e^{jωk} = α₂ + jβ₂`.
    pub s: Complex64,
}

impl PointResponse {
    /// Group delay `-(α₁α₂ + β₁β₂)/(α₁² + β₁²)` without the guard check.
    pub fn group_delay_unchecked(&self) -> f64 {
        -(self.b.re * self.s.re + self.b.im * self.s.im) / self.b.norm_sqr()
    }

    pub fn group_delay(&self, x_norm_sq: f64) -> Result<f64, BeamError> {
        let q = self.b.norm_sqr();
        if q < GROUP_DELAY_GUARD * x_norm_sq || q == 0.0 {
            return Err(BeamError::NearZeroResponse);
        }
        Ok(self.group_delay_unchecked())
    }
}

impl FrequencySlice {
    pub fn new(x: &FilterBank, omega: f64) -> Self {
        let taps = x.num_taps();
        let rot: Vec<Complex64> = (0..taps).map(|l| Complex64::from_polar(1.0, -omega * l as f64)).collect();
        let mut xs = Vec::with_capacity(x.num_mics());
        let mut ys = Vec::with_capacity(x.num_mics());
        for n in 0..x.num_mics() {
            let row = x.row(n);
            let mut sx = Complex64::new(0.0, 0.0);
            let mut sy = Complex64::new(0.0, 0.0);
            for (l, (c, r)) in row.iter().zip(&rot).enumerate() {
                sx += r * c;
                sy += r * (c * l as f64);
            }
            xs.push(sx);
            ys.push(sy);
        }
        Self { omega, x: xs, y: ys }
    }

    /// Filter transforms `X_n(ω)`, i.e. `A(ω) x`.
    pub fn filter_dft(&self) -> &[Complex64] {
        &self.x
    }

    /// `‖A(ω) x‖²`.
    pub fn filter_energy(&self) -> f64 {
        self.x.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Response at an angle given its element delays `a_n` (samples).
    pub fn at(&self, delays: &[f64]) -> PointResponse {
        let mut b = Complex64::new(0.0, 0.0);
        let mut s = Complex64::new(0.0, 0.0);
        for ((a, xn), yn) in delays.iter().zip(&self.x).zip(&self.y) {
            let e = Complex64::from_polar(1.0, -self.omega * a);
            b += e * xn;
            // k = -a - l, so Σ_l x k e^{jωk} = e^{-jωa}(-a X_n - Y_n)
            s += e * (-a * xn - yn);
        }
        PointResponse { b, s }
    }
}

/// Complex response `B(x, ω, θ)`.
pub fn response(geom: &ArrayGeometry, x: &FilterBank, omega: f64, theta: f64) -> Complex64 {
    FrequencySlice::new(x, omega).at(&geom.element_delays(theta)).b
}

/// White noise gain `|B(ω, θ_d)|² / ‖A(ω)x‖²` from per-filter transforms.
pub fn white_noise_gain(geom: &ArrayGeometry, x: &FilterBank, omega: f64, theta_d: f64) -> Result<f64, BeamError> {
    let slice = FrequencySlice::new(x, omega);
    let energy = slice.filter_energy();
    if energy <= ENERGY_FLOOR {
        return Err(BeamError::ZeroFilterEnergy);
    }
    Ok(slice.at(&geom.element_delays(theta_d)).b.norm_sqr() / energy)
}

/// White noise gain evaluated with the explicit `g` and `A(ω)` matrices.
pub fn white_noise_gain_matrix_form(
    geom: &ArrayGeometry,
    x: &FilterBank,
    omega: f64,
    theta_d: f64,
) -> Result<f64, BeamError> {
    let (mics, taps) = (x.num_mics(), x.num_taps());
    let flat = x.as_flat();
    let g = steering_vector(geom, taps, omega, theta_d);
    let b: Complex64 = g.iter().zip(flat).map(|(gi, xi)| gi * xi).sum();
    let a = filter_dft_matrix(mics, taps, omega);
    let energy: f64 = a
        .chunks(mics * taps)
        .map(|row| row.iter().zip(flat).map(|(ai, xi)| ai * xi).sum::<Complex64>().norm_sqr())
        .sum();
    if energy <= ENERGY_FLOOR {
        return Err(BeamError::ZeroFilterEnergy);
    }
    Ok(b.norm_sqr() / energy)
}

/// Group delay of the beamformer in samples.
pub fn group_delay(geom: &ArrayGeometry, x: &FilterBank, omega: f64, theta: f64) -> Result<f64, BeamError> {
    let p = FrequencySlice::new(x, omega).at(&geom.element_delays(theta));
    p.group_delay(x.as_flat().iter().map(|v| v * v).sum())
}

/// Partial derivatives of `α₁, β₁, α₂, β₂` are `cos(ωk)`, `sin(ωk)`,
/// `k cos(ωk)` and `k sin(ωk)`; this holds the four sums and the slopes.
struct Trig {
    k: Vec<f64>,
    cos: Vec<f64>,
    sin: Vec<f64>,
    a1: f64,
    b1: f64,
    a2: f64,
    b2: f64,
}

impl Trig {
    fn new(geom: &ArrayGeometry, x: &FilterBank, omega: f64, theta: f64) -> Self {
        let k = phase_slopes(geom, x.num_taps(), theta);
        let (mut cos, mut sin) = (Vec::with_capacity(k.len()), Vec::with_capacity(k.len()));
        let (mut a1, mut b1, mut a2, mut b2) = (0.0, 0.0, 0.0, 0.0);
        for (ki, xi) in k.iter().zip(x.as_flat()) {
            let (s, c) = (omega * ki).sin_cos();
            a1 += xi * c;
            b1 += xi * s;
            a2 += xi * ki * c;
            b2 += xi * ki * s;
            cos.push(c);
            sin.push(s);
        }
        Self { k, cos, sin, a1, b1, a2, b2 }
    }
}

/// Group delay and its gradient with respect to the flattened coefficients.
pub fn group_delay_with_gradient(
    geom: &ArrayGeometry,
    x: &FilterBank,
    omega: f64,
    theta: f64,
) -> Result<(f64, Vec<f64>), BeamError> {
    let t = Trig::new(geom, x, omega, theta);
    let q = t.a1 * t.a1 + t.b1 * t.b1;
    let xx: f64 = x.as_flat().iter().map(|v| v * v).sum();
    if q < GROUP_DELAY_GUARD * xx || q == 0.0 {
        return Err(BeamError::NearZeroResponse);
    }
    let p = t.a1 * t.a2 + t.b1 * t.b2;
    let tau = -p / q;
    // τ = -P/Q  ⇒  ∇τ = (P ∇Q - Q ∇P) / Q²
    let grad = (0..t.k.len())
        .map(|i| {
            let (c, s, k) = (t.cos[i], t.sin[i], t.k[i]);
            let dp = t.a2 * c + t.a1 * k * c + t.b2 * s + t.b1 * k * s;
            let dq = 2.0 * (t.a1 * c + t.b1 * s);
            (p * dq - q * dp) / (q * q)
        })
        .collect();
    Ok((tau, grad))
}

pub fn group_delay_gradient(geom: &ArrayGeometry, x: &FilterBank, omega: f64, theta: f64) -> Result<Vec<f64>, BeamError> {
    group_delay_with_gradient(geom, x, omega, theta).map(|(_, g)| g)
}

/// `e_r = |B|² - bd_magsq` and its gradient `2(Re B ∇Re B + Im B ∇Im B)`.
pub fn magsq_error_gradient(
    geom: &ArrayGeometry,
    x: &FilterBank,
    omega: f64,
    theta: f64,
    bd_magsq: f64,
) -> (f64, Vec<f64>) {
    let t = Trig::new(geom, x, omega, theta);
    let e = t.a1 * t.a1 + t.b1 * t.b1 - bd_magsq;
    let grad = t.cos.iter().zip(&t.sin).map(|(c, s)| 2.0 * (t.a1 * c + t.b1 * s)).collect();
    (e, grad)
}

/// `e_w = WNG - floor` and its gradient (quotient rule on `|B|² / ‖A x‖²`).
pub fn wng_error_gradient(
    geom: &ArrayGeometry,
    x: &FilterBank,
    omega: f64,
    theta_d: f64,
    floor: f64,
) -> Result<(f64, Vec<f64>), BeamError> {
    let t = Trig::new(geom, x, omega, theta_d);
    let slice = FrequencySlice::new(x, omega);
    let den = slice.filter_energy();
    if den <= ENERGY_FLOOR {
        return Err(BeamError::ZeroFilterEnergy);
    }
    let num = t.a1 * t.a1 + t.b1 * t.b1;
    let taps = x.num_taps();
    let trig_l: Vec<(f64, f64)> = (0..taps).map(|l| (omega * l as f64).sin_cos()).collect();
    let mut grad = Vec::with_capacity(t.k.len());
    for (n, xn) in slice.filter_dft().iter().enumerate() {
        for (l, (s, c)) in trig_l.iter().enumerate() {
            let i = n * taps + l;
            let dnum = 2.0 * (t.a1 * t.cos[i] + t.b1 * t.sin[i]);
            // ∂|X_n|²/∂x = 2 Re(conj(X_n) e^{-jωl})
            let dden = 2.0 * (xn.re * c - xn.im * s);
            grad.push((dnum * den - num * dden) / (den * den));
        }
    }
    Ok((num / den - floor, grad))
}
