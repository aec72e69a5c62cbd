//! Two-step design that drives the passband group delay toward a constant.
//!
//! Step 1 solves a one-shot V1 design. Step 2 linearizes the group delay,
//! the passband magnitude and the white noise gain around the current
//! iterate and solves a trust-region cone program for the update
//! `x_{k+1} = x_k + δ`. A slack `δ_rlx`, penalized by `W`, keeps every
//! linearized program feasible. Sample points are re-selected from dense
//! virtual grids at the start of each iteration.

use broadbeam_socp::{add_complex_linf_epigraph, solve_with, Affine, Bound, ConeProgram, Settings, Status};
use log::{debug, info, warn};
use num_complex::Complex64;

use crate::convex::{design_v1, ConvexDesign, ConvexDesignSpec, WngFloor};
use crate::error::BeamError;
use crate::filter::FilterBank;
use crate::geometry::ArrayGeometry;
use crate::metrics::group_delay_stats;
use crate::reduced::{Parameterization, Reduction};
use crate::response::{
    group_delay_with_gradient, magsq_error_gradient, steering_vector, white_noise_gain, wng_error_gradient,
    FrequencySlice,
};
use crate::sampling::{linspace, GridConfig, UniformGrid, VirtualGrid};

/// Trust-region radius per iteration: linear from `first` at `k = 1` with
/// slope `(first - last)/(horizon - 1)` while `k < horizon`, then `small`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustSchedule {
    pub first: f64,
    pub last: f64,
    pub horizon: usize,
    pub small: f64,
}

impl Default for TrustSchedule {
    fn default() -> Self {
        Self { first: 0.5, last: 0.001, horizon: 20, small: 0.001 }
    }
}

impl TrustSchedule {
    /// Radius for iteration `k ≥ 1`.
    pub fn radius(&self, k: usize) -> f64 {
        if k < self.horizon {
            let t = (k.max(1) - 1) as f64 / (self.horizon - 1) as f64;
            self.first - (self.first - self.last) * t
        } else {
            self.small
        }
    }

    fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.small > 0.0 && self.first > self.small) {
            v.push(format!("trust radii need first > small > 0 (got {} and {})", self.first, self.small));
        }
        if !(self.last > 0.0 && self.last <= self.first) {
            v.push(format!("trust radius `last` must lie in (0, first], got {}", self.last));
        }
        if self.horizon < 2 {
            v.push("trust horizon must be at least 2".into());
        }
        // the interpolated radius just before the horizon must not fall below `small`
        if self.horizon >= 2 && self.radius(self.horizon - 1) < self.small {
            v.push("trust schedule would increase at the horizon".into());
        }
        v
    }
}

#[derive(Debug, Clone)]
pub struct IterativeSpec {
    /// Step-1 design; its `lambda` is overridden per path.
    pub convex: ConvexDesignSpec,
    /// Regularization weight of the A path.
    pub lambda_a: f64,
    pub schedule: TrustSchedule,
    /// Slack penalty `W`.
    pub slack_weight: f64,
    /// Signed offset added to the passband magnitude tolerance.
    pub eps_f: f64,
    pub grid: GridConfig,
    pub max_iters: usize,
    /// Stop once this many consecutive iterations fail to improve.
    pub patience: usize,
    pub b_path: bool,
    /// Keep every iterate symmetric about broadside.
    pub symmetric_iterations: bool,
    /// The final check runs on a uniform grid this many times denser than
    /// the step-1 grid in each dimension.
    pub verify_factor: usize,
}

impl IterativeSpec {
    pub fn new(convex: ConvexDesignSpec) -> Self {
        Self {
            convex,
            lambda_a: 0.01,
            schedule: TrustSchedule::default(),
            slack_weight: 1000.0,
            eps_f: 0.0,
            grid: GridConfig::default(),
            max_iters: 50,
            patience: 5,
            b_path: true,
            symmetric_iterations: false,
            verify_factor: 5,
        }
    }

    pub fn validate(&self) -> Result<(), BeamError> {
        let mut v = Vec::new();
        if let Err(BeamError::InvalidSettings(s)) = self.convex.validate() {
            v.push(s);
        }
        if let Err(BeamError::InvalidSettings(s)) = self.grid.validate() {
            v.push(s);
        }
        v.extend(self.schedule.violations());
        if !matches!(self.convex.wng_floor, WngFloor::Constant(_)) {
            v.push("iterative designs need a constant WNG floor".into());
        }
        if !(self.lambda_a >= 0.0) {
            v.push(format!("lambda_a must be nonnegative, got {}", self.lambda_a));
        }
        if !(self.slack_weight > 0.0) {
            v.push(format!("slack weight must be positive, got {}", self.slack_weight));
        }
        if !self.eps_f.is_finite() {
            v.push("eps_f must be finite".into());
        }
        if self.max_iters == 0 || self.patience == 0 {
            v.push("max_iters and patience must be positive".into());
        }
        if self.verify_factor == 0 {
            v.push("verify_factor must be positive".into());
        }
        if self.symmetric_iterations && !self.convex.geometry.is_symmetric() {
            v.push("symmetric iterations need a symmetric array".into());
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(BeamError::InvalidSettings(v.join("; ")))
        }
    }

    fn wng_floor(&self) -> f64 {
        match &self.convex.wng_floor {
            WngFloor::Constant(v) => *v,
            WngFloor::PerFrequency(v) => v.iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }
}

/// Points at which one iteration is linearized.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationSamples {
    /// `(ω, θ)` pairs for group-delay rows.
    pub group_delay: Vec<(f64, f64)>,
    /// `(ω, θ)` pairs for passband magnitude rows.
    pub magnitude: Vec<(f64, f64)>,
    /// `(ω, θ)` pairs for stopband rows.
    pub stopband: Vec<(f64, f64)>,
    /// Frequencies of the WNG rows.
    pub wng: Vec<f64>,
}

/// First-order models around `x_k`: `e_g ≈ Cδ + d`, `e_r ≈ Dδ + f`,
/// `e_w ≈ Qδ + h`. Rows are gradients over the flattened coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Linearization {
    pub c: Vec<Vec<f64>>,
    pub d: Vec<f64>,
    pub dm: Vec<Vec<f64>>,
    pub f: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    pub h: Vec<f64>,
    /// Stopband steering rows `g(ω, θ)`.
    pub stopband: Vec<Vec<Complex64>>,
}

pub fn linearize(
    geom: &ArrayGeometry,
    x: &FilterBank,
    tau_d: f64,
    theta_d: f64,
    wng_floor: f64,
    samples: &IterationSamples,
) -> Result<Linearization, BeamError> {
    let mut lin = Linearization { c: vec![], d: vec![], dm: vec![], f: vec![], q: vec![], h: vec![], stopband: vec![] };
    for &(w, th) in &samples.group_delay {
        let (tau, grad) = group_delay_with_gradient(geom, x, w, th)?;
        lin.d.push(tau - tau_d);
        lin.c.push(grad);
    }
    for &(w, th) in &samples.magnitude {
        let (e, grad) = magsq_error_gradient(geom, x, w, th, 1.0);
        lin.f.push(e);
        lin.dm.push(grad);
    }
    for &w in &samples.wng {
        let (e, grad) = wng_error_gradient(geom, x, w, theta_d, wng_floor)?;
        lin.h.push(e);
        lin.q.push(grad);
    }
    lin.stopband = samples.stopband.iter().map(|&(w, th)| steering_vector(geom, x.num_taps(), w, th)).collect();
    Ok(lin)
}

/// `‖|U_pb x|² - 1‖_∞ + ε_f` on a uniform grid.
pub fn compute_gamma_pb(geom: &ArrayGeometry, x: &FilterBank, grid: &UniformGrid, eps_f: f64) -> f64 {
    let delays: Vec<Vec<f64>> = grid.passband.iter().map(|&t| geom.element_delays(t)).collect();
    let mut worst = 0.0f64;
    for &w in &grid.freqs {
        let slice = FrequencySlice::new(x, w);
        for a in &delays {
            worst = worst.max((slice.at(a).b.norm_sqr() - 1.0).abs());
        }
    }
    worst + eps_f
}

/// Bounds of one linearized program.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepBounds {
    pub radius: f64,
    pub gamma_pb: f64,
    pub gamma_sb: f64,
    pub slack_weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub delta: Vec<f64>,
    pub slack: f64,
    /// `‖Cδ + d‖_∞`.
    pub gd_linf: f64,
    /// `‖Cδ + d‖_∞ + W δ_rlx`.
    pub objective: f64,
    pub rows: usize,
}

/// Builds the linearized program over `(δ, δ_rlx, t)`.
pub fn build_step_program(x: &FilterBank, lin: &Linearization, b: &StepBounds, tie_symmetric: bool) -> Result<ConeProgram, BeamError> {
    let nl = x.len();
    let (rlx, t) = (nl, nl + 1);
    let nv = nl + 2;
    let mut prog = ConeProgram::new(nv);
    prog.set_objective_coeff(t, 1.0)?;
    prog.set_objective_coeff(rlx, b.slack_weight)?;

    let mut row = vec![0.0; nv];
    prog.set_tag("group-delay");
    for (c, d) in lin.c.iter().zip(&lin.d) {
        // t - (cδ + d) ≥ 0 and t + cδ + d ≥ 0
        row[..nl].iter_mut().zip(c).for_each(|(r, v)| *r = -v);
        row[rlx] = 0.0;
        row[t] = 1.0;
        prog.add_nonneg(Affine::new(&row, -d))?;
        row[..nl].copy_from_slice(c);
        prog.add_nonneg(Affine::new(&row, *d))?;
    }
    prog.set_tag("passband");
    for (g, f) in lin.dm.iter().zip(&lin.f) {
        row[..nl].iter_mut().zip(g).for_each(|(r, v)| *r = -v);
        row[rlx] = 1.0;
        row[t] = 0.0;
        prog.add_nonneg(Affine::new(&row, b.gamma_pb - f))?;
        row[..nl].copy_from_slice(g);
        prog.add_nonneg(Affine::new(&row, b.gamma_pb + f))?;
    }
    prog.set_tag("wng");
    for (q, h) in lin.q.iter().zip(&lin.h) {
        row[..nl].copy_from_slice(q);
        row[rlx] = 1.0;
        row[t] = 0.0;
        prog.add_nonneg(Affine::new(&row, *h))?;
    }
    if !lin.stopband.is_empty() {
        prog.set_tag("stopband");
        let zero = Complex64::new(0.0, 0.0);
        let mut rows = Vec::with_capacity(lin.stopband.len() * nv);
        let mut rhs = Vec::with_capacity(lin.stopband.len());
        for g in &lin.stopband {
            rows.extend_from_slice(g);
            rows.extend([zero, zero]);
            let bx: Complex64 = g.iter().zip(x.as_flat()).map(|(gi, xi)| gi * xi).sum();
            rhs.push(-bx);
        }
        add_complex_linf_epigraph(&mut prog, &rows, &rhs, Bound::var_plus(rlx, b.gamma_sb))?;
    }
    prog.set_tag("trust-region");
    let mut head = vec![0.0; nv];
    head[rlx] = 1.0;
    let units: Vec<Vec<f64>> = (0..nl)
        .map(|i| {
            let mut r = vec![0.0; nv];
            r[i] = 1.0;
            r
        })
        .collect();
    let mut exprs = vec![Affine::new(&head, b.radius)];
    exprs.extend(units.iter().map(|r| Affine::new(r, 0.0)));
    prog.add_soc(&exprs)?;
    prog.set_tag("slack");
    prog.add_nonneg(Affine::new(&head, 0.0))?;

    if tie_symmetric {
        // (x + δ)_i = (x + δ)_j for every mirrored pair
        let red = Reduction::new(Parameterization::Symmetric, x.num_mics(), x.num_taps());
        let flat = x.as_flat();
        for class in red.classes().iter().filter(|c| c.len() == 2) {
            let mut r = vec![0.0; nv];
            r[class[0]] = 1.0;
            r[class[1]] = -1.0;
            prog.add_equality(&r, flat[class[1]] - flat[class[0]])?;
        }
    }
    Ok(prog)
}

/// Solves one linearized program.
pub fn iterate_step(
    x: &FilterBank,
    lin: &Linearization,
    bounds: &StepBounds,
    tie_symmetric: bool,
    settings: &Settings,
) -> Result<StepResult, BeamError> {
    let prog = build_step_program(x, lin, bounds, tie_symmetric)?;
    let out = solve_with(&prog, settings);
    if out.status != Status::Optimal {
        return Err(BeamError::NumericalFailure(format!(
            "linearized program ended with {:?} after {} iterations (primal residual {:.2e}, dual residual {:.2e}, gap {:.2e})",
            out.status, out.iterations, out.primal_residual, out.dual_residual, out.gap
        )));
    }
    let nl = x.len();
    let delta = out.x[..nl].to_vec();
    let slack = out.x[nl].max(0.0);
    let gd_linf = lin
        .c
        .iter()
        .zip(&lin.d)
        .map(|(c, d)| (c.iter().zip(&delta).map(|(a, b)| a * b).sum::<f64>() + d).abs())
        .fold(0.0, f64::max);
    Ok(StepResult { objective: gd_linf + bounds.slack_weight * slack, delta, slack, gd_linf, rows: prog.num_rows() })
}

/// Which step-1 start a run used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Path {
    /// Regularized start.
    A,
    /// Unregularized start.
    B,
}

/// Trace entry for one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub path: Path,
    pub k: usize,
    /// Value used by the termination rule.
    pub objective: f64,
    pub gd_linf: f64,
    pub slack: f64,
    pub step_norm: f64,
    pub radius: f64,
    /// Passband group-delay spread of `x_{k+1}` on the virtual grid.
    pub sigma_tau_estimate: f64,
    pub rows: usize,
    pub retried: bool,
}

/// Final feasibility re-check on a dense uniform grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verification {
    pub freqs: usize,
    pub angles: usize,
    pub stopband_peak: f64,
    pub stopband_ceiling: f64,
    pub magnitude_error: f64,
    pub gamma_pb: f64,
    pub min_wng: f64,
    pub wng_floor: f64,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.stopband_peak <= self.stopband_ceiling * (1.0 + 1e-4)
            && self.magnitude_error <= self.gamma_pb * (1.0 + 1e-4)
            && self.min_wng >= self.wng_floor * (1.0 - 1e-4)
    }
}

#[derive(Debug, Clone)]
pub struct PathResult {
    pub path: Path,
    pub start: ConvexDesign,
    pub gamma_pb: f64,
    /// Iterate with the smallest monitored objective.
    pub filters: FilterBank,
    pub best_objective: f64,
    pub iterations: usize,
    pub records: Vec<IterationRecord>,
    /// Group-delay spread on the step-1 grid.
    pub sigma_tau: f64,
}

#[derive(Debug, Clone)]
pub struct IterativeDesign {
    pub filters: FilterBank,
    pub chosen: Path,
    pub paths: Vec<PathResult>,
    pub verification: Verification,
}

impl IterativeDesign {
    pub fn chosen_path(&self) -> &PathResult {
        self.paths.iter().find(|p| p.path == self.chosen).expect("chosen path is always recorded")
    }

    pub fn trace(&self) -> impl Iterator<Item = &IterationRecord> {
        self.paths.iter().flat_map(|p| &p.records)
    }
}

/// Error surfaces of one iterate on the virtual grids, row-major by frequency.
struct Surfaces {
    group_delay: Vec<f64>,
    magnitude: Vec<f64>,
    stopband: Vec<f64>,
    tau_spread: f64,
}

struct Virtual {
    pb: VirtualGrid,
    sb: VirtualGrid,
    pb_delays: Vec<Vec<f64>>,
    sb_delays: Vec<Vec<f64>>,
    wng_freqs: Vec<f64>,
}

impl Virtual {
    fn new(spec: &IterativeSpec) -> Self {
        let band = &spec.convex.band;
        let pb = VirtualGrid::passband(band, &spec.grid);
        let sb = VirtualGrid::stopband(band, &spec.grid);
        let geom = &spec.convex.geometry;
        Self {
            pb_delays: pb.angles.iter().map(|&t| geom.element_delays(t)).collect(),
            sb_delays: sb.angles.iter().map(|&t| geom.element_delays(t)).collect(),
            wng_freqs: linspace(band.omega_lo, band.omega_hi, spec.grid.freq_blocks),
            pb,
            sb,
        }
    }

    fn surfaces(&self, x: &FilterBank, tau_d: f64) -> Surfaces {
        let xx = x.norm().powi(2);
        let n = self.pb.freqs.len() * self.pb.angles.len();
        let (mut gd, mut mag) = (Vec::with_capacity(n), Vec::with_capacity(n));
        let mut sb = Vec::with_capacity(self.sb.freqs.len() * self.sb.angles.len());
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut skipped = 0;
        for &w in &self.pb.freqs {
            let slice = FrequencySlice::new(x, w);
            for a in &self.pb_delays {
                let r = slice.at(a);
                mag.push((r.b.norm_sqr() - 1.0).abs());
                match r.group_delay(xx) {
                    Ok(t) => {
                        lo = lo.min(t);
                        hi = hi.max(t);
                        gd.push((t - tau_d).abs());
                    }
                    Err(_) => {
                        skipped += 1;
                        gd.push(f64::NAN);
                    }
                }
            }
            for a in &self.sb_delays {
                sb.push(slice.at(a).b.norm());
            }
        }
        if skipped > 0 {
            warn!("{skipped} virtual passband points sit at response nulls and are not sampled");
        }
        Surfaces { group_delay: gd, magnitude: mag, stopband: sb, tau_spread: hi - lo }
    }

    fn samples(&self, s: &Surfaces, cfg: &GridConfig) -> Result<IterationSamples, BeamError> {
        let pairs = |set: crate::sampling::SampleSet| set.points.iter().map(|p| (p.omega, p.theta)).collect();
        Ok(IterationSamples {
            group_delay: pairs(self.pb.select(&s.group_delay, cfg)?),
            magnitude: pairs(self.pb.select(&s.magnitude, cfg)?),
            stopband: pairs(self.sb.select(&s.stopband, cfg)?),
            wng: self.wng_freqs.clone(),
        })
    }
}

/// `true` once none of the last `patience` values beat the minimum before them.
fn stalled(history: &[f64], patience: usize) -> bool {
    if history.len() <= patience {
        return false;
    }
    let split = history.len() - patience;
    let before = history[..split].iter().cloned().fold(f64::INFINITY, f64::min);
    history[split..].iter().all(|v| *v >= before)
}

fn add_scaled(x: &FilterBank, delta: &[f64]) -> Result<FilterBank, BeamError> {
    let flat = x.as_flat().iter().zip(delta).map(|(a, b)| a + b).collect();
    FilterBank::from_flat(x.num_mics(), x.num_taps(), flat)
}

/// Runs step 2 from `start` until the objective stops improving.
pub fn refine(spec: &IterativeSpec, path: Path, start: &FilterBank, gamma_pb: f64) -> Result<(FilterBank, f64, Vec<IterationRecord>), BeamError> {
    let geom = &spec.convex.geometry;
    let tau_d = spec.convex.tau_d;
    let theta_d = spec.convex.band.theta_d;
    let virt = Virtual::new(spec);
    let mut x = start.clone();
    let mut surf = virt.surfaces(&x, tau_d);
    let mut best = (x.clone(), f64::INFINITY);
    let mut history = Vec::new();
    let mut records = Vec::new();
    for k in 1..=spec.max_iters {
        let samples = virt.samples(&surf, &spec.grid)?;
        let lin = linearize(geom, &x, tau_d, theta_d, spec.wng_floor(), &samples)?;
        let mut bounds = StepBounds {
            radius: spec.schedule.radius(k),
            gamma_pb,
            gamma_sb: spec.convex.stopband_ceiling,
            slack_weight: spec.slack_weight,
        };
        let mut retried = false;
        let step = match iterate_step(&x, &lin, &bounds, spec.symmetric_iterations, &spec.convex.solver) {
            Ok(s) => s,
            Err(BeamError::NumericalFailure(msg)) => {
                warn!("iteration {k}: {msg}; retrying with half the trust radius");
                bounds.radius *= 0.5;
                retried = true;
                iterate_step(&x, &lin, &bounds, spec.symmetric_iterations, &spec.convex.solver).map_err(|e| {
                    BeamError::NumericalFailure(format!(
                        "path {path:?} iteration {k}: {e}; state: radius {:.3e}, ‖x‖ {:.6e}, {} group-delay, {} magnitude, {} stopband and {} WNG rows, best objective {:.6e}",
                        bounds.radius,
                        x.norm(),
                        lin.c.len(),
                        lin.dm.len(),
                        lin.stopband.len(),
                        lin.q.len(),
                        best.1
                    ))
                })?
            }
            Err(e) => return Err(e),
        };
        x = add_scaled(&x, &step.delta)?;
        surf = virt.surfaces(&x, tau_d);
        let monitored = if step.slack < 1e-8 { step.gd_linf } else { step.objective };
        let step_norm = step.delta.iter().map(|v| v * v).sum::<f64>().sqrt();
        let rec = IterationRecord {
            path,
            k,
            objective: monitored,
            gd_linf: step.gd_linf,
            slack: step.slack,
            step_norm,
            radius: bounds.radius,
            sigma_tau_estimate: surf.tau_spread,
            rows: step.rows,
            retried,
        };
        debug!("{rec:?}");
        info!(
            "path {path:?} iteration {k}: objective {monitored:.6e}, slack {:.2e}, ‖δ‖ {step_norm:.3e}, spread {:.4e}",
            step.slack, surf.tau_spread
        );
        records.push(rec);
        if monitored < best.1 {
            best = (x.clone(), monitored);
        }
        history.push(monitored);
        if stalled(&history, spec.patience) {
            break;
        }
    }
    Ok((best.0, best.1, records))
}

/// Dense uniform re-check of the constraints that step 2 only imposes at
/// selected points.
pub fn verify(spec: &IterativeSpec, x: &FilterBank, gamma_pb: f64) -> Result<Verification, BeamError> {
    let geom = &spec.convex.geometry;
    let m = spec.convex.grid_freqs * spec.verify_factor;
    let k = spec.convex.grid_angles * spec.verify_factor;
    let grid = UniformGrid::new(&spec.convex.band, m, k)?;
    let magnitude_error = compute_gamma_pb(geom, x, &grid, 0.0);
    let sb_delays: Vec<Vec<f64>> = grid.stopband.iter().map(|&t| geom.element_delays(t)).collect();
    let mut stopband_peak = 0.0f64;
    let mut min_wng = f64::INFINITY;
    for &w in &grid.freqs {
        let slice = FrequencySlice::new(x, w);
        for a in &sb_delays {
            stopband_peak = stopband_peak.max(slice.at(a).b.norm());
        }
        min_wng = min_wng.min(white_noise_gain(geom, x, w, grid.theta_d)?);
    }
    Ok(Verification {
        freqs: m,
        angles: k,
        stopband_peak,
        stopband_ceiling: spec.convex.stopband_ceiling,
        magnitude_error,
        gamma_pb,
        min_wng,
        wng_floor: spec.wng_floor(),
    })
}

fn run_path(spec: &IterativeSpec, path: Path) -> Result<PathResult, BeamError> {
    let lambda = match path {
        Path::A => spec.lambda_a,
        Path::B => 0.0,
    };
    let step1 = ConvexDesignSpec { lambda, ..spec.convex.clone() };
    let start = design_v1(&step1)?;
    let grid = spec.convex.grid()?;
    let gamma_pb = compute_gamma_pb(&spec.convex.geometry, &start.filters, &grid, spec.eps_f);
    info!("path {path:?}: step 1 J = {:.6e}, Γ_pb = {gamma_pb:.6e}", start.j_sol);
    let (filters, best_objective, records) = refine(spec, path, &start.filters, gamma_pb)?;
    let sigma_tau = group_delay_stats(&spec.convex.geometry, &filters, &grid.freqs, &grid.passband).spread();
    Ok(PathResult { path, start, gamma_pb, filters, best_objective, iterations: records.len(), records, sigma_tau })
}

/// Steps A-1 through C: refine a regularized and (optionally) an
/// unregularized start and keep the one with the smaller group-delay
/// spread, preferring A on ties within `1e-6`.
pub fn run_two_step(spec: &IterativeSpec) -> Result<IterativeDesign, BeamError> {
    spec.validate()?;
    let mut order = vec![Path::A];
    if spec.b_path {
        order.push(Path::B);
    }
    let mut paths = Vec::new();
    let mut first_err = None;
    for p in order {
        match run_path(spec, p) {
            Ok(r) => paths.push(r),
            Err(e @ BeamError::Infeasible { .. }) => {
                warn!("path {p:?}: {e}");
                first_err.get_or_insert(e);
            }
            Err(e) => return Err(e),
        }
    }
    let Some(best) = paths.iter().fold(None::<&PathResult>, |acc, p| match acc {
        Some(a) if a.sigma_tau <= p.sigma_tau + 1e-6 => Some(a),
        _ => Some(p),
    }) else {
        return Err(first_err.unwrap_or(BeamError::Infeasible { family: None }));
    };
    let chosen = best.path;
    let filters = best.filters.clone();
    let verification = verify(spec, &filters, best.gamma_pb)?;
    if !verification.passed() {
        warn!("dense re-check is outside tolerance: {verification:?}");
    }
    Ok(IterativeDesign { filters, chosen, paths, verification })
}
