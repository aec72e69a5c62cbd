//! Reference design problems on a 7-element, 4 cm array with 20-tap
//! filters at 8 kHz.

use crate::convex::ConvexDesignSpec;
use crate::error::BeamError;
use crate::geometry::ArrayGeometry;
use crate::sampling::{BandSpec, Interval};
use crate::units::{db_to_amplitude, db_to_power, hz_to_omega};

pub const MICS: usize = 7;
pub const SPACING: f64 = 0.04;
pub const TAPS: usize = 20;
pub const SAMPLE_RATE: f64 = 8000.0;
pub const SOUND_SPEED: f64 = 340.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Example {
    /// Broadside passband, zero delay.
    One,
    /// Off-broadside passband, zero delay.
    Two,
    /// Broadside passband, half-length delay.
    Three,
    /// Off-broadside passband, half-length delay.
    Four,
}

impl Example {
    pub const ALL: [Example; 4] = [Example::One, Example::Two, Example::Three, Example::Four];

    /// Passband, stopband intervals and steering angle in degrees.
    pub fn angles_deg(self) -> ((f64, f64), Vec<(f64, f64)>, f64) {
        match self {
            Example::One | Example::Three => ((80.0, 100.0), vec![(0.0, 60.0), (120.0, 180.0)], 90.0),
            Example::Two | Example::Four => ((110.0, 130.0), vec![(0.0, 90.0), (150.0, 180.0)], 120.0),
        }
    }

    /// Stopband attenuation used as the design ceiling (dB).
    pub fn stopband_target_db(self) -> f64 {
        match self {
            Example::One | Example::Two => 6.0,
            Example::Three | Example::Four => 10.0,
        }
    }

    pub fn tau_d(self) -> f64 {
        match self {
            Example::One | Example::Two => 0.0,
            Example::Three | Example::Four => (TAPS as f64 - 1.0) / 2.0,
        }
    }

    pub fn geometry() -> ArrayGeometry {
        ArrayGeometry::uniform(MICS, SPACING, SAMPLE_RATE, SOUND_SPEED).expect("reference array is valid")
    }

    pub fn band(self) -> Result<BandSpec, BeamError> {
        let rad = |d: f64| d.to_radians();
        let ((plo, phi), stop, td) = self.angles_deg();
        BandSpec::new(
            hz_to_omega(1500.0, SAMPLE_RATE),
            hz_to_omega(3500.0, SAMPLE_RATE),
            Interval::new(rad(plo), rad(phi)),
            stop.into_iter().map(|(a, b)| Interval::new(rad(a), rad(b))).collect(),
            rad(td),
        )
    }

    /// Unregularized, untied convex spec on the default 200 × 200 grid.
    pub fn convex_spec(self) -> ConvexDesignSpec {
        ConvexDesignSpec::new(
            Self::geometry(),
            self.band().expect("reference bands are valid"),
            TAPS,
            db_to_amplitude(-self.stopband_target_db()),
            db_to_power(0.0),
            self.tau_d(),
        )
    }
}
