//! Frequency-angle sampling grids.

use std::ops::Range;

use crate::error::BeamError;

/// Closed angular interval in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }
}

/// Frequency band and angular pass/stop regions of a design.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSpec {
    /// Band edges in rad/sample.
    pub omega_lo: f64,
    pub omega_hi: f64,
    pub passband: Interval,
    pub stopband: Vec<Interval>,
    /// Steering (look) direction in radians.
    pub theta_d: f64,
}

impl BandSpec {
    pub fn new(
        omega_lo: f64,
        omega_hi: f64,
        passband: Interval,
        stopband: Vec<Interval>,
        theta_d: f64,
    ) -> Result<Self, BeamError> {
        let b = Self { omega_lo, omega_hi, passband, stopband, theta_d };
        let problems = b.violations();
        if problems.is_empty() {
            Ok(b)
        } else {
            Err(BeamError::InvalidBand(problems.join("; ")))
        }
    }

    /// Every violated invariant, one message each.
    pub fn violations(&self) -> Vec<String> {
        let pi = std::f64::consts::PI;
        let mut v = Vec::new();
        if !(self.omega_lo > 0.0 && self.omega_lo < self.omega_hi && self.omega_hi < pi) {
            v.push(format!(
                "frequency band must satisfy 0 < low < high < Nyquist (got {} to {} rad/sample)",
                self.omega_lo, self.omega_hi
            ));
        }
        let in_range = |i: &Interval| i.lo >= 0.0 && i.hi <= pi && i.lo <= i.hi;
        if !(in_range(&self.passband) && self.passband.lo < self.passband.hi) {
            v.push("passband must be a nonempty interval within [0, 180] degrees".to_string());
        }
        if self.stopband.is_empty() {
            v.push("stopband needs at least one interval".to_string());
        }
        for (i, s) in self.stopband.iter().enumerate() {
            if !in_range(s) {
                v.push(format!("stopband interval {i} must be ordered and within [0, 180] degrees"));
            }
            if s.lo <= self.passband.hi && self.passband.lo <= s.hi {
                v.push(format!("stopband interval {i} overlaps the passband"));
            }
        }
        if !self.passband.contains(self.theta_d) {
            v.push("steering angle must lie in the passband".to_string());
        }
        v
    }
}

/// `count` equally spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..count)
            .map(|i| if i + 1 == count { hi } else { lo + (hi - lo) * i as f64 / (count - 1) as f64 })
            .collect(),
    }
}

/// Split `total` points across intervals in proportion to their widths
/// (largest remainder; ties go to the earlier interval).
pub fn proportional_counts(widths: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = widths.iter().sum();
    if widths.is_empty() {
        return Vec::new();
    }
    if sum <= 0.0 {
        let mut c = vec![total / widths.len(); widths.len()];
        for slot in c.iter_mut().take(total % widths.len()) {
            *slot += 1;
        }
        return c;
    }
    let exact: Vec<f64> = widths.iter().map(|w| w / sum * total as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut rest = total - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..widths.len()).collect();
    order.sort_by(|&a, &b| {
        let (fa, fb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        fb.partial_cmp(&fa).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if rest == 0 {
            break;
        }
        counts[i] += 1;
        rest -= 1;
    }
    counts
}

/// Angles covering a union of intervals, `total` points split by width and
/// each interval sampled end to end. Also returns each interval's index range.
pub fn sample_intervals(intervals: &[Interval], total: usize) -> (Vec<f64>, Vec<Range<usize>>) {
    let widths: Vec<f64> = intervals.iter().map(|i| i.width()).collect();
    let counts = proportional_counts(&widths, total);
    let mut angles = Vec::with_capacity(total);
    let mut ranges = Vec::with_capacity(intervals.len());
    for (iv, &c) in intervals.iter().zip(&counts) {
        let start = angles.len();
        angles.extend(linspace(iv.lo, iv.hi, c));
        ranges.push(start..angles.len());
    }
    (angles, ranges)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Passband,
    Stopband,
    /// WNG constraint frequency; the angle is the steering direction.
    Wng,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePoint {
    pub omega: f64,
    pub theta: f64,
    pub role: Role,
    /// Quadrature weight (1 for all L∞ designs).
    pub weight: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleSet {
    pub points: Vec<SamplePoint>,
}

impl SampleSet {
    pub fn with_role(&self, role: Role) -> impl Iterator<Item = &SamplePoint> {
        self.points.iter().filter(move |p| p.role == role)
    }

    pub fn count(&self, role: Role) -> usize {
        self.with_role(role).count()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Tensor-product grid: frequencies shared by passband, stopband and WNG rows.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformGrid {
    pub freqs: Vec<f64>,
    pub passband: Vec<f64>,
    pub stopband: Vec<f64>,
    pub stopband_ranges: Vec<Range<usize>>,
    pub theta_d: f64,
}

impl UniformGrid {
    /// `m` frequencies, `k` passband angles and `k` stopband angles in total.
    pub fn new(band: &BandSpec, m: usize, k: usize) -> Result<Self, BeamError> {
        if m < 2 || k < 2 {
            return Err(BeamError::InvalidSettings(format!("grid needs at least 2×2 points, got {m}×{k}")));
        }
        let (stopband, stopband_ranges) = sample_intervals(&band.stopband, k);
        Ok(Self {
            freqs: linspace(band.omega_lo, band.omega_hi, m),
            passband: linspace(band.passband.lo, band.passband.hi, k),
            stopband,
            stopband_ranges,
            theta_d: band.theta_d,
        })
    }

    pub fn to_sample_set(&self) -> SampleSet {
        let mut points = Vec::new();
        for &w in &self.freqs {
            points.extend(self.passband.iter().map(|&t| SamplePoint { omega: w, theta: t, role: Role::Passband, weight: 1.0 }));
            points.extend(self.stopband.iter().map(|&t| SamplePoint { omega: w, theta: t, role: Role::Stopband, weight: 1.0 }));
            points.push(SamplePoint { omega: w, theta: self.theta_d, role: Role::Wng, weight: 1.0 });
        }
        SampleSet { points }
    }
}

/// Uniform sample set with `m` frequencies and `k` angles per angular band.
pub fn uniform_grid(band: &BandSpec, m: usize, k: usize) -> Result<SampleSet, BeamError> {
    Ok(UniformGrid::new(band, m, k)?.to_sample_set())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridMode {
    Uniform,
    Nonuniform,
}

/// Virtual and actual sample counts for block-maximum selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridConfig {
    pub virtual_freqs: usize,
    pub virtual_angles: usize,
    pub freq_blocks: usize,
    pub angle_blocks: usize,
    /// Virtual points kept at every band edge.
    pub edge_points: usize,
    pub mode: GridMode,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { virtual_freqs: 200, virtual_angles: 500, freq_blocks: 22, angle_blocks: 52, edge_points: 3, mode: GridMode::Nonuniform }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<(), BeamError> {
        let mut v = Vec::new();
        if self.freq_blocks < 2 || self.virtual_freqs < self.freq_blocks {
            v.push(format!("need virtual_freqs ≥ freq_blocks ≥ 2 (got {} and {})", self.virtual_freqs, self.freq_blocks));
        }
        if self.angle_blocks < 2 || self.virtual_angles < self.angle_blocks {
            v.push(format!("need virtual_angles ≥ angle_blocks ≥ 2 (got {} and {})", self.virtual_angles, self.angle_blocks));
        }
        let min_width = (self.virtual_freqs / self.freq_blocks.max(1)).min(self.virtual_angles / self.angle_blocks.max(1));
        if self.edge_points > min_width {
            v.push(format!("edge_points {} exceeds the smallest block width {min_width}", self.edge_points));
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(BeamError::InvalidSettings(v.join("; ")))
        }
    }
}

/// Block boundaries `round(i · total / blocks)` for `i = 0..=blocks`.
pub fn block_bounds(total: usize, blocks: usize) -> Vec<usize> {
    (0..=blocks).map(|i| ((i * total) as f64 / blocks as f64).round() as usize).collect()
}

/// Index of the largest value in the sub-rectangle, lowest flattened index
/// on ties. NaN entries are skipped; `None` if every entry is NaN.
fn block_argmax(surface: &[f64], cols: usize, rows: Range<usize>, colr: Range<usize>) -> Option<(usize, usize)> {
    let mut best: Option<((usize, usize), f64)> = None;
    for p in rows {
        for q in colr.clone() {
            let v = surface[p * cols + q];
            if v.is_nan() {
                continue;
            }
            if best.is_none_or(|(_, b)| v > b) {
                best = Some(((p, q), v));
            }
        }
    }
    best.map(|(i, _)| i)
}

/// Block-maximum selection on a `P × Q` error surface (row-major, rows are
/// frequencies). The grid is cut into `M × K` blocks and each contributes
/// its largest entry. The first and last `edge_points` rows, and the first
/// and last `edge_points` columns of every entry in `segments`, are added as
/// unit-width strips cut by the other dimension's blocks. Returned indices
/// are sorted and unique.
pub fn select_nonuniform(
    surface: &[f64],
    rows: usize,
    cols: usize,
    segments: &[Range<usize>],
    cfg: &GridConfig,
) -> Result<Vec<(usize, usize)>, BeamError> {
    if surface.len() != rows * cols || rows != cfg.virtual_freqs || cols != cfg.virtual_angles {
        return Err(BeamError::ShapeMismatch { expected: cfg.virtual_freqs * cfg.virtual_angles, found: surface.len() });
    }
    cfg.validate()?;
    let fb = block_bounds(rows, cfg.freq_blocks);
    let ab = block_bounds(cols, cfg.angle_blocks);
    let mut picked = Vec::new();
    for i in 0..cfg.freq_blocks {
        for j in 0..cfg.angle_blocks {
            picked.extend(block_argmax(surface, cols, fb[i]..fb[i + 1], ab[j]..ab[j + 1]));
        }
    }
    let e = cfg.edge_points;
    if e > 0 {
        let mut edge_rows: Vec<usize> = (0..e.min(rows)).chain(rows.saturating_sub(e)..rows).collect();
        edge_rows.dedup();
        for p in edge_rows {
            for j in 0..cfg.angle_blocks {
                picked.extend(block_argmax(surface, cols, p..p + 1, ab[j]..ab[j + 1]));
            }
        }
        let whole = [0..cols];
        let segs = if segments.is_empty() { &whole[..] } else { segments };
        let mut edge_cols: Vec<usize> = Vec::new();
        for s in segs {
            let w = s.end - s.start;
            edge_cols.extend(s.start..s.start + e.min(w));
            edge_cols.extend(s.end.saturating_sub(e).max(s.start)..s.end);
        }
        edge_cols.sort_unstable();
        edge_cols.dedup();
        for q in edge_cols {
            for i in 0..cfg.freq_blocks {
                picked.extend(block_argmax(surface, cols, fb[i]..fb[i + 1], q..q + 1));
            }
        }
    }
    picked.sort_unstable();
    picked.dedup();
    Ok(picked)
}

/// Dense virtual grid of one angular region over the frequency band.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualGrid {
    pub freqs: Vec<f64>,
    pub angles: Vec<f64>,
    pub segments: Vec<Range<usize>>,
    pub role: Role,
}

impl VirtualGrid {
    pub fn passband(band: &BandSpec, cfg: &GridConfig) -> Self {
        Self {
            freqs: linspace(band.omega_lo, band.omega_hi, cfg.virtual_freqs),
            angles: linspace(band.passband.lo, band.passband.hi, cfg.virtual_angles),
            segments: vec![0..cfg.virtual_angles],
            role: Role::Passband,
        }
    }

    pub fn stopband(band: &BandSpec, cfg: &GridConfig) -> Self {
        let (angles, segments) = sample_intervals(&band.stopband, cfg.virtual_angles);
        Self { freqs: linspace(band.omega_lo, band.omega_hi, cfg.virtual_freqs), angles, segments, role: Role::Stopband }
    }

    /// Select from an error surface evaluated on this grid.
    pub fn select(&self, surface: &[f64], cfg: &GridConfig) -> Result<SampleSet, BeamError> {
        let idx = select_nonuniform(surface, self.freqs.len(), self.angles.len(), &self.segments, cfg)?;
        Ok(SampleSet {
            points: idx
                .into_iter()
                .map(|(p, q)| SamplePoint { omega: self.freqs[p], theta: self.angles[q], role: self.role, weight: 1.0 })
                .collect(),
        })
    }
}
