//! Conversions between interface units (Hz, degrees, dB) and the internal
//! ones (rad/sample, rad, linear).

use std::f64::consts::PI;

/// Hz to normalized angular frequency in rad/sample.
pub fn hz_to_omega(freq_hz: f64, sample_rate: f64) -> f64 {
    2.0 * PI * freq_hz / sample_rate
}

pub fn omega_to_hz(omega: f64, sample_rate: f64) -> f64 {
    omega * sample_rate / (2.0 * PI)
}

/// Amplitude ratio in dB (`20 log10`).
pub fn amplitude_to_db(a: f64) -> f64 {
    20.0 * a.log10()
}

pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// Power ratio in dB (`10 log10`).
pub fn power_to_db(p: f64) -> f64 {
    10.0 * p.log10()
}

pub fn db_to_power(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for v in [1e-6, 0.03, 1.0, 7.0, 1234.5] {
            assert!((db_to_amplitude(amplitude_to_db(v)) - v).abs() <= 1e-12 * v);
            assert!((db_to_power(power_to_db(v)) - v).abs() <= 1e-12 * v);
        }
        assert!((omega_to_hz(hz_to_omega(1500.0, 8000.0), 8000.0) - 1500.0).abs() < 1e-9);
        assert!((amplitude_to_db(0.5) + 6.0206).abs() < 1e-4);
    }
}
