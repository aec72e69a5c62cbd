//! Reduced parameterizations for symmetric arrays.
//!
//! A symmetric beamformer ties `x_{n,l} = x_{N-1-n,l}`; a linear-phase one
//! ties `x_{n,l} = x_{N-1-n,L-1-l}`. Each tied pair becomes one reduced
//! variable and the full coefficients are recovered as `x = T x̂`. Reduced
//! variables are ordered by the smallest flattened index of their pair, and
//! an element or tap that is its own partner (odd `N` or odd `L`) keeps
//! weight one.

use num_complex::Complex64;

use crate::error::BeamError;
use crate::filter::FilterBank;
use crate::geometry::ArrayGeometry;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parameterization {
    Full,
    Symmetric,
    LinearPhase,
}

/// Mapping between full and reduced coefficient vectors.
#[derive(Debug, Clone)]
pub struct Reduction {
    kind: Parameterization,
    mics: usize,
    taps: usize,
    classes: Vec<Vec<usize>>,
}

impl Reduction {
    pub fn new(kind: Parameterization, mics: usize, taps: usize) -> Self {
        let total = mics * taps;
        let partner = |i: usize| -> usize {
            let (n, l) = (i / taps, i % taps);
            match kind {
                Parameterization::Full => i,
                Parameterization::Symmetric => (mics - 1 - n) * taps + l,
                Parameterization::LinearPhase => (mics - 1 - n) * taps + (taps - 1 - l),
            }
        };
        let mut seen = vec![false; total];
        let mut classes = Vec::new();
        for i in 0..total {
            if seen[i] {
                continue;
            }
            let j = partner(i);
            seen[i] = true;
            seen[j] = true;
            classes.push(if j == i { vec![i] } else { vec![i, j] });
        }
        Self { kind, mics, taps, classes }
    }

    /// Reduction for `geom`, rejecting tied parameterizations on asymmetric
    /// arrays.
    pub fn for_geometry(kind: Parameterization, geom: &ArrayGeometry, taps: usize) -> Result<Self, BeamError> {
        if kind != Parameterization::Full && !geom.is_symmetric() {
            return Err(BeamError::AsymmetricGeometry);
        }
        Ok(Self::new(kind, geom.num_mics(), taps))
    }

    pub fn kind(&self) -> Parameterization {
        self.kind
    }

    pub fn num_vars(&self) -> usize {
        self.classes.len()
    }

    pub fn num_full(&self) -> usize {
        self.mics * self.taps
    }

    /// Flattened full indices tied to each reduced variable.
    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    /// `x = T x̂`.
    pub fn expand(&self, reduced: &[f64]) -> Result<FilterBank, BeamError> {
        if reduced.len() != self.num_vars() {
            return Err(BeamError::ShapeMismatch { expected: self.num_vars(), found: reduced.len() });
        }
        let mut x = vec![0.0; self.num_full()];
        for (v, class) in reduced.iter().zip(&self.classes) {
            for &i in class {
                x[i] = *v;
            }
        }
        FilterBank::from_flat(self.mics, self.taps, x)
    }

    /// Least-squares inverse of `T` (average over each tied pair).
    pub fn project(&self, x: &FilterBank) -> Vec<f64> {
        let flat = x.as_flat();
        self.classes
            .iter()
            .map(|c| c.iter().map(|&i| flat[i]).sum::<f64>() / c.len() as f64)
            .collect()
    }

    /// `Tᵀ u` for a complex row over the full coefficients.
    pub fn reduce_row(&self, row: &[Complex64]) -> Vec<Complex64> {
        self.classes.iter().map(|c| c.iter().map(|&i| row[i]).sum()).collect()
    }

    pub fn reduce_real_row(&self, row: &[f64]) -> Vec<f64> {
        self.classes.iter().map(|c| c.iter().map(|&i| row[i]).sum()).collect()
    }

    /// Square roots of the pair sizes: `‖T x̂‖₂ = ‖diag(√w) x̂‖₂`.
    pub fn norm_weights(&self) -> Vec<f64> {
        self.classes.iter().map(|c| (c.len() as f64).sqrt()).collect()
    }

    /// Rows `e_i - e_j` expressing the ties as explicit equalities on the
    /// full coefficient vector.
    pub fn tie_rows(&self) -> Vec<Vec<f64>> {
        self.classes
            .iter()
            .filter(|c| c.len() == 2)
            .map(|c| {
                let mut r = vec![0.0; self.num_full()];
                r[c[0]] = 1.0;
                r[c[1]] = -1.0;
                r
            })
            .collect()
    }
}

/// Steering vector of the symmetric reduction:
/// `ḡ_{n,l} = 2 cos(ω f_s d_n cos θ / c) e^{-jωl}` for `n < N/2`.
pub fn reduced_steering_symmetric(
    geom: &ArrayGeometry,
    taps: usize,
    omega: f64,
    theta: f64,
) -> Result<Vec<Complex64>, BeamError> {
    if !geom.is_symmetric() {
        return Err(BeamError::AsymmetricGeometry);
    }
    let delays = geom.element_delays(theta);
    let n = delays.len();
    let mut g = Vec::with_capacity(n.div_ceil(2) * taps);
    for (i, a) in delays.iter().enumerate().take(n.div_ceil(2)) {
        let w = if 2 * i + 1 == n { 1.0 } else { 2.0 * (omega * a).cos() };
        for l in 0..taps {
            g.push(Complex64::from_polar(w, -omega * l as f64));
        }
    }
    Ok(g)
}

/// Steering vector of the linear-phase reduction:
/// `ĝ_{n,l} = 2 cos[ω(f_s d_n cos θ / c - (L-1)/2 + l)] e^{-jω(L-1)/2}`.
pub fn reduced_steering_linear_phase(
    geom: &ArrayGeometry,
    taps: usize,
    omega: f64,
    theta: f64,
) -> Result<Vec<Complex64>, BeamError> {
    if !geom.is_symmetric() {
        return Err(BeamError::AsymmetricGeometry);
    }
    let delays = geom.element_delays(theta);
    let n = delays.len();
    let half = (taps as f64 - 1.0) / 2.0;
    let phase = Complex64::from_polar(1.0, -omega * half);
    let mut g = Vec::new();
    for a in delays.iter().take(n / 2) {
        for l in 0..taps {
            g.push(phase * 2.0 * (omega * (a - half + l as f64)).cos());
        }
    }
    if n % 2 == 1 {
        // the center element is at the origin and pairs its own taps
        for l in 0..taps.div_ceil(2) {
            let w = if 2 * l + 1 == taps { 1.0 } else { 2.0 * (omega * (l as f64 - half)).cos() };
            g.push(phase * w);
        }
    }
    Ok(g)
}
