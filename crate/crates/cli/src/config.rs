//! Run configuration read from TOML.
//!
//! Interface units are Hz, degrees and dB. [`RunConfig::resolve`] converts
//! them once into the internal units and reports every invalid field.

use std::path::{Path, PathBuf};

use broadbeam::convex::{ConvexDesignSpec, TieMode};
use broadbeam::geometry::ArrayGeometry;
use broadbeam::iterative::{IterativeSpec, TrustSchedule};
use broadbeam::sampling::{BandSpec, GridConfig, GridMode, Interval, UniformGrid};
use broadbeam::units::{db_to_amplitude, db_to_power, hz_to_omega};
use broadbeam_socp::Settings;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DesignKind {
    #[serde(rename = "v1")]
    V1,
    #[serde(rename = "v1-sym")]
    V1Sym,
    #[serde(rename = "v1-lp")]
    V1Lp,
    #[serde(rename = "v2")]
    V2,
    #[serde(rename = "c-a")]
    CA,
    #[serde(rename = "c-a-sym")]
    CASym,
    #[serde(rename = "c-b")]
    CB,
}

impl DesignKind {
    pub fn name(self) -> &'static str {
        match self {
            DesignKind::V1 => "v1",
            DesignKind::V1Sym => "v1-sym",
            DesignKind::V1Lp => "v1-lp",
            DesignKind::V2 => "v2",
            DesignKind::CA => "c-a",
            DesignKind::CASym => "c-a-sym",
            DesignKind::CB => "c-b",
        }
    }

    pub fn is_c(self) -> bool {
        matches!(self, DesignKind::CA | DesignKind::CASym | DesignKind::CB)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DelayKeyword {
    Zero,
    Half,
    Quarter,
}

/// Prescribed group delay: samples or a keyword relative to the filter length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupDelay {
    Samples(f64),
    Keyword(DelayKeyword),
}

impl GroupDelay {
    pub fn samples(self, taps: usize) -> f64 {
        let span = taps as f64 - 1.0;
        match self {
            GroupDelay::Samples(v) => v,
            GroupDelay::Keyword(DelayKeyword::Zero) => 0.0,
            GroupDelay::Keyword(DelayKeyword::Half) => span / 2.0,
            GroupDelay::Keyword(DelayKeyword::Quarter) => span / 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSection {
    pub kind: DesignKind,
    /// Regularization weight of one-shot V1 designs.
    #[serde(default)]
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySection {
    /// Uniform array: element count and spacing, centered on the origin.
    pub elements: Option<usize>,
    pub spacing_m: Option<f64>,
    /// Explicit element positions; excludes `elements` and `spacing_m`.
    pub positions_m: Option<Vec<f64>>,
    pub sample_rate_hz: f64,
    pub sound_speed_mps: f64,
    pub taps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandSection {
    pub freq_lo_hz: f64,
    pub freq_hi_hz: f64,
    pub passband_deg: [f64; 2],
    pub stopband_deg: Vec<[f64; 2]>,
    pub steering_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSection {
    /// Design ceiling for the stopband, as attenuation in dB.
    pub stopband_attenuation_db: f64,
    pub min_wng_db: f64,
    pub group_delay: GroupDelay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    /// Uniform design grid of the one-shot designs and step 1.
    pub freqs: usize,
    pub angles: usize,
    /// Uniform grid on which metrics are reported.
    pub eval_freqs: usize,
    pub eval_angles: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { freqs: 200, angles: 200, eval_freqs: 200, eval_angles: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = Settings::default();
        Self { tol: s.tol, max_iter: s.max_iter }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IterativeSection {
    pub lambda_a: f64,
    pub slack_weight: f64,
    pub eps_f: f64,
    pub max_iters: usize,
    pub patience: usize,
    pub b_path: bool,
    pub symmetric: bool,
    pub virtual_freqs: usize,
    pub virtual_angles: usize,
    pub freq_blocks: usize,
    pub angle_blocks: usize,
    pub edge_points: usize,
    pub trust_first: f64,
    pub trust_last: f64,
    pub trust_horizon: usize,
    pub trust_small: f64,
    pub verify_factor: usize,
}

impl Default for IterativeSection {
    fn default() -> Self {
        let g = GridConfig::default();
        let t = TrustSchedule::default();
        Self {
            lambda_a: 0.01,
            slack_weight: 1000.0,
            eps_f: 0.0,
            max_iters: 50,
            patience: 5,
            b_path: true,
            symmetric: false,
            virtual_freqs: g.virtual_freqs,
            virtual_angles: g.virtual_angles,
            freq_blocks: g.freq_blocks,
            angle_blocks: g.angle_blocks,
            edge_points: g.edge_points,
            trust_first: t.first,
            trust_last: t.last,
            trust_horizon: t.horizon,
            trust_small: t.small,
            verify_factor: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub design: DesignSection,
    pub array: ArraySection,
    pub band: BandSection,
    pub thresholds: ThresholdSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub iterative: IterativeSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// A config in internal units, ready to run.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub kind: DesignKind,
    pub convex: ConvexDesignSpec,
    pub iterative: IterativeSpec,
    pub eval_grid: UniformGrid,
}

#[derive(Debug)]
pub enum ConfigError {
    Io(PathBuf, std::io::Error),
    Parse(String),
    /// One message per violated field.
    Invalid(Vec<String>),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Io(p, e) => write!(f, "cannot read {}: {e}", p.display()),
            ConfigError::Parse(m) => write!(f, "malformed config: {m}"),
            ConfigError::Invalid(v) => {
                writeln!(f, "invalid config:")?;
                for m in v {
                    writeln!(f, "  {m}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for ConfigError {}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.to_path_buf(), e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    fn geometry(&self, errs: &mut Vec<String>) -> Option<ArrayGeometry> {
        let a = &self.array;
        let (fs, c) = (a.sample_rate_hz, a.sound_speed_mps);
        if !(fs > 0.0) {
            errs.push(format!("array.sample_rate_hz: must be positive, got {fs}"));
        }
        if !(c > 0.0) {
            errs.push(format!("array.sound_speed_mps: must be positive, got {c}"));
        }
        if a.taps == 0 {
            errs.push("array.taps: must be positive".into());
        }
        let geom = match (&a.positions_m, a.elements, a.spacing_m) {
            (Some(p), None, None) => ArrayGeometry::new(p.clone(), fs, c),
            (None, Some(n), Some(d)) => {
                if n == 0 {
                    errs.push("array.elements: must be positive".into());
                }
                if !(d > 0.0) {
                    errs.push(format!("array.spacing_m: must be positive, got {d}"));
                }
                ArrayGeometry::uniform(n, d, fs, c)
            }
            _ => {
                errs.push("array: give either positions_m or both elements and spacing_m".into());
                return None;
            }
        };
        match geom {
            Ok(g) => Some(g),
            Err(e) => {
                if !(fs > 0.0 && c > 0.0) {
                    return None;
                }
                errs.push(format!("array: {e}"));
                None
            }
        }
    }

    fn band(&self, errs: &mut Vec<String>) -> Option<BandSpec> {
        let b = &self.band;
        let fs = self.array.sample_rate_hz;
        let before = errs.len();
        if !(b.freq_lo_hz > 0.0) {
            errs.push(format!("band.freq_lo_hz: must be positive, got {}", b.freq_lo_hz));
        }
        if !(b.freq_hi_hz > b.freq_lo_hz) {
            errs.push(format!("band.freq_hi_hz: must exceed freq_lo_hz ({} ≤ {})", b.freq_hi_hz, b.freq_lo_hz));
        }
        if fs > 0.0 && !(b.freq_hi_hz < fs / 2.0) {
            errs.push(format!("band.freq_hi_hz: must be below Nyquist ({} Hz)", fs / 2.0));
        }
        let in_range = |v: f64| (0.0..=180.0).contains(&v);
        let [plo, phi] = b.passband_deg;
        if !(in_range(plo) && in_range(phi) && plo < phi) {
            errs.push(format!("band.passband_deg: need 0 ≤ low < high ≤ 180, got [{plo}, {phi}]"));
        }
        if b.stopband_deg.is_empty() {
            errs.push("band.stopband_deg: needs at least one interval".into());
        }
        for (i, [lo, hi]) in b.stopband_deg.iter().enumerate() {
            if !(in_range(*lo) && in_range(*hi) && lo <= hi) {
                errs.push(format!("band.stopband_deg[{i}]: need 0 ≤ low ≤ high ≤ 180, got [{lo}, {hi}]"));
            } else if *lo <= phi && plo <= *hi {
                errs.push(format!("band.stopband_deg[{i}]: overlaps the passband"));
            }
        }
        if !(plo..=phi).contains(&b.steering_deg) {
            errs.push(format!("band.steering_deg: {} lies outside the passband", b.steering_deg));
        }
        if errs.len() > before || !(fs > 0.0) {
            return None;
        }
        let rad = f64::to_radians;
        BandSpec::new(
            hz_to_omega(b.freq_lo_hz, fs),
            hz_to_omega(b.freq_hi_hz, fs),
            Interval::new(rad(plo), rad(phi)),
            b.stopband_deg.iter().map(|[lo, hi]| Interval::new(rad(*lo), rad(*hi))).collect(),
            rad(b.steering_deg),
        )
        .map_err(|e| errs.push(format!("band: {e}")))
        .ok()
    }

    /// Converts to internal units, listing every invalid field on failure.
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let mut errs = Vec::new();
        let geom = self.geometry(&mut errs);
        let band = self.band(&mut errs);
        let t = &self.thresholds;
        if !t.stopband_attenuation_db.is_finite() {
            errs.push("thresholds.stopband_attenuation_db: must be finite".into());
        }
        if !t.min_wng_db.is_finite() {
            errs.push("thresholds.min_wng_db: must be finite".into());
        }
        if let GroupDelay::Samples(v) = t.group_delay {
            if !v.is_finite() {
                errs.push("thresholds.group_delay: must be finite".into());
            }
        }
        let g = &self.grid;
        for (name, v) in [("freqs", g.freqs), ("angles", g.angles), ("eval_freqs", g.eval_freqs), ("eval_angles", g.eval_angles)] {
            if v < 2 {
                errs.push(format!("grid.{name}: must be at least 2, got {v}"));
            }
        }
        if !(self.solver.tol > 0.0) {
            errs.push(format!("solver.tol: must be positive, got {}", self.solver.tol));
        }
        if self.solver.max_iter == 0 {
            errs.push("solver.max_iter: must be positive".into());
        }
        if !(self.design.lambda >= 0.0) {
            errs.push(format!("design.lambda: must be nonnegative, got {}", self.design.lambda));
        }
        if self.design.lambda > 0.0 && self.design.kind.is_c() {
            errs.push("design.lambda: design C takes no regularization".into());
        }
        let taps = self.array.taps;
        let tau_d = t.group_delay.samples(taps);
        let kind = self.design.kind;
        if matches!(kind, DesignKind::V1Lp | DesignKind::CB) && (tau_d - (taps as f64 - 1.0) / 2.0).abs() > 1e-12 {
            errs.push(format!("thresholds.group_delay: linear-phase designs need half the filter span ({})", (taps as f64 - 1.0) / 2.0));
        }
        if let Some(geom) = &geom {
            let tied = matches!(kind, DesignKind::V1Sym | DesignKind::V1Lp | DesignKind::CASym | DesignKind::CB)
                || (kind == DesignKind::V2 && self.iterative.symmetric);
            if tied && !geom.is_symmetric() {
                errs.push(format!("design.kind: {} needs an array symmetric about its center", kind.name()));
            }
        }
        let it = &self.iterative;
        let grid_cfg = GridConfig {
            virtual_freqs: it.virtual_freqs,
            virtual_angles: it.virtual_angles,
            freq_blocks: it.freq_blocks,
            angle_blocks: it.angle_blocks,
            edge_points: it.edge_points,
            mode: GridMode::Nonuniform,
        };
        let (Some(geom), Some(band)) = (geom, band) else {
            return Err(ConfigError::Invalid(errs));
        };
        let mut convex = ConvexDesignSpec::new(
            geom,
            band.clone(),
            taps,
            db_to_amplitude(-t.stopband_attenuation_db),
            db_to_power(t.min_wng_db),
            tau_d,
        );
        convex.lambda = if kind == DesignKind::V2 { 0.0 } else { self.design.lambda };
        convex.symmetry = matches!(kind, DesignKind::V1Sym | DesignKind::CASym);
        convex.linear_phase = matches!(kind, DesignKind::V1Lp | DesignKind::CB);
        convex.tie_mode = TieMode::Reduced;
        convex.grid_freqs = g.freqs;
        convex.grid_angles = g.angles;
        convex.solver = Settings { tol: self.solver.tol, max_iter: self.solver.max_iter, ..Settings::default() };
        let iterative = IterativeSpec {
            lambda_a: it.lambda_a,
            schedule: TrustSchedule { first: it.trust_first, last: it.trust_last, horizon: it.trust_horizon, small: it.trust_small },
            slack_weight: it.slack_weight,
            eps_f: it.eps_f,
            grid: grid_cfg,
            max_iters: it.max_iters,
            patience: it.patience,
            b_path: it.b_path,
            symmetric_iterations: it.symmetric,
            verify_factor: it.verify_factor,
            ..IterativeSpec::new(convex.clone())
        };
        if kind == DesignKind::V2 {
            if let Err(e) = iterative.validate() {
                errs.push(format!("iterative: {e}"));
            }
        }
        let eval_grid = UniformGrid::new(&band, g.eval_freqs.max(2), g.eval_angles.max(2));
        if !errs.is_empty() {
            return Err(ConfigError::Invalid(errs));
        }
        Ok(Resolved { kind, convex, iterative, eval_grid: eval_grid.map_err(|e| ConfigError::Invalid(vec![format!("grid: {e}")]))? })
    }
}
