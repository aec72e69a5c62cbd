use crate::error::BeamError;

/// Linear microphone array: element positions along the array axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    positions: Vec<f64>,
    sample_rate: f64,
    sound_speed: f64,
}

impl ArrayGeometry {
    /// `positions` are signed distances from the origin in meters and must be
    /// strictly increasing.
    pub fn new(positions: Vec<f64>, sample_rate: f64, sound_speed: f64) -> Result<Self, BeamError> {
        if positions.len() < 2 {
            return Err(BeamError::InvalidGeometry(format!(
                "need at least 2 microphones, got {}",
                positions.len()
            )));
        }
        if positions.iter().any(|p| !p.is_finite()) {
            return Err(BeamError::InvalidGeometry("positions must be finite".into()));
        }
        if let Some(i) = positions.windows(2).position(|w| w[1] <= w[0]) {
            return Err(BeamError::InvalidGeometry(format!(
                "positions must be strictly increasing (index {})",
                i + 1
            )));
        }
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(BeamError::InvalidGeometry(format!("sample rate must be positive, got {sample_rate}")));
        }
        if !(sound_speed > 0.0 && sound_speed.is_finite()) {
            return Err(BeamError::InvalidGeometry(format!("sound speed must be positive, got {sound_speed}")));
        }
        Ok(Self { positions, sample_rate, sound_speed })
    }

    /// Uniform array of `count` elements with the given spacing, centered on
    /// the origin.
    pub fn uniform(count: usize, spacing: f64, sample_rate: f64, sound_speed: f64) -> Result<Self, BeamError> {
        let mid = (count as f64 - 1.0) / 2.0;
        let pos = (0..count).map(|n| (n as f64 - mid) * spacing).collect();
        Self::new(pos, sample_rate, sound_speed)
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn num_mics(&self) -> usize {
        self.positions.len()
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn sound_speed(&self) -> f64 {
        self.sound_speed
    }

    /// True when `d[N-1-n] = -d[n]` for every element (to 1e-12 m).
    pub fn is_symmetric(&self) -> bool {
        let n = self.positions.len();
        (0..n).all(|i| (self.positions[n - 1 - i] + self.positions[i]).abs() <= 1e-12)
    }

    /// Propagation delay of each element relative to the origin for a plane
    /// wave from `theta`, in samples: `f_s d_n cos(theta) / c`.
    pub fn element_delays(&self, theta: f64) -> Vec<f64> {
        let k = self.sample_rate * theta.cos() / self.sound_speed;
        self.positions.iter().map(|d| k * d).collect()
    }
}
