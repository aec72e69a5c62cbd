use crate::error::BeamError;

/// `N × L` real FIR coefficients, one row per microphone.
///
/// The flattened layout is `[x_0ᵀ x_1ᵀ … x_{N-1}ᵀ]` with
/// `x_n = [x_{n,0} … x_{n,L-1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    mics: usize,
    taps: usize,
    coeffs: Vec<f64>,
}

impl FilterBank {
    pub fn zeros(mics: usize, taps: usize) -> Self {
        Self { mics, taps, coeffs: vec![0.0; mics * taps] }
    }

    pub fn from_flat(mics: usize, taps: usize, coeffs: Vec<f64>) -> Result<Self, BeamError> {
        if coeffs.len() != mics * taps {
            return Err(BeamError::ShapeMismatch { expected: mics * taps, found: coeffs.len() });
        }
        Ok(Self { mics, taps, coeffs })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, BeamError> {
        let taps = rows.first().map_or(0, |r| r.len());
        if let Some(bad) = rows.iter().find(|r| r.len() != taps) {
            return Err(BeamError::ShapeMismatch { expected: taps, found: bad.len() });
        }
        Ok(Self { mics: rows.len(), taps, coeffs: rows.concat() })
    }

    pub fn num_mics(&self) -> usize {
        self.mics
    }

    pub fn num_taps(&self) -> usize {
        self.taps
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn get(&self, n: usize, l: usize) -> f64 {
        self.coeffs[n * self.taps + l]
    }

    pub fn set(&mut self, n: usize, l: usize, value: f64) {
        self.coeffs[n * self.taps + l] = value;
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.coeffs[n * self.taps..(n + 1) * self.taps]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.coeffs.chunks(self.taps).map(|r| r.to_vec()).collect()
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}
