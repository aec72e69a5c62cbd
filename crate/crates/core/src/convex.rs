//! One-shot minimax designs solved as a single second-order cone program.
//!
//! `design_v1` minimizes the passband L∞ error against the delayed unit
//! response subject to a stopband ceiling and one white-noise-gain cone per
//! frequency. `design_c` is the competing formulation that pins the look
//! direction response with equalities and caps the filter energy instead.

use broadbeam_socp::{
    add_complex_linf_epigraph, add_wng_cone, solve_with, Affine, Bound, ConeProgram, EqualityMode, Settings,
    SolveOutcome, Status,
};
use log::{info, warn};
use num_complex::Complex64;

use crate::error::BeamError;
use crate::filter::FilterBank;
use crate::geometry::ArrayGeometry;
use crate::reduced::{Parameterization, Reduction};
use crate::response::{filter_dft_matrix, steering_vector, FrequencySlice};
use crate::sampling::{BandSpec, UniformGrid};

/// Lower bound on the white noise gain (linear power ratio).
#[derive(Debug, Clone, PartialEq)]
pub enum WngFloor {
    Constant(f64),
    /// One value per design frequency.
    PerFrequency(Vec<f64>),
}

impl WngFloor {
    pub fn at(&self, m: usize) -> f64 {
        match self {
            WngFloor::Constant(v) => *v,
            WngFloor::PerFrequency(v) => v[m],
        }
    }

    fn min(&self) -> f64 {
        match self {
            WngFloor::Constant(v) => *v,
            WngFloor::PerFrequency(v) => v.iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }
}

/// How coefficient ties (symmetry, linear phase) enter the program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieMode {
    /// Optimize over one variable per tied pair.
    Reduced,
    /// Keep all coefficients and add `x_i = x_j` equality rows.
    Equalities,
}

#[derive(Debug, Clone)]
pub struct ConvexDesignSpec {
    pub geometry: ArrayGeometry,
    pub band: BandSpec,
    pub taps: usize,
    /// Stopband magnitude ceiling `Γ_sb` (linear).
    pub stopband_ceiling: f64,
    pub wng_floor: WngFloor,
    /// Prescribed group delay in samples.
    pub tau_d: f64,
    /// Weight of the `‖x‖₂` regularizer (0 disables it).
    pub lambda: f64,
    pub symmetry: bool,
    pub linear_phase: bool,
    pub tie_mode: TieMode,
    pub grid_freqs: usize,
    pub grid_angles: usize,
    pub solver: Settings,
}

impl ConvexDesignSpec {
    /// Defaults: uniform 200 × 200 grid, no regularization, no ties.
    pub fn new(geometry: ArrayGeometry, band: BandSpec, taps: usize, stopband_ceiling: f64, wng_floor: f64, tau_d: f64) -> Self {
        Self {
            geometry,
            band,
            taps,
            stopband_ceiling,
            wng_floor: WngFloor::Constant(wng_floor),
            tau_d,
            lambda: 0.0,
            symmetry: false,
            linear_phase: false,
            tie_mode: TieMode::Reduced,
            grid_freqs: 200,
            grid_angles: 200,
            solver: Settings::default(),
        }
    }

    pub fn parameterization(&self) -> Parameterization {
        if self.linear_phase {
            Parameterization::LinearPhase
        } else if self.symmetry {
            Parameterization::Symmetric
        } else {
            Parameterization::Full
        }
    }

    pub fn validate(&self) -> Result<(), BeamError> {
        let mut v = self.band.violations();
        if self.taps == 0 {
            v.push("filter length must be positive".into());
        }
        if !(self.stopband_ceiling > 0.0) {
            v.push(format!("stopband ceiling must be positive, got {}", self.stopband_ceiling));
        }
        if !(self.wng_floor.min() > 0.0) {
            v.push("WNG floor must be positive".into());
        }
        if let WngFloor::PerFrequency(f) = &self.wng_floor {
            if f.len() != self.grid_freqs {
                v.push(format!("per-frequency WNG floor has {} values for {} frequencies", f.len(), self.grid_freqs));
            }
        }
        if !(self.lambda >= 0.0) {
            v.push(format!("regularization weight must be nonnegative, got {}", self.lambda));
        }
        if (self.symmetry || self.linear_phase) && !self.geometry.is_symmetric() {
            v.push("symmetric and linear-phase designs need a symmetric array".into());
        }
        if self.linear_phase && (self.tau_d - (self.taps as f64 - 1.0) / 2.0).abs() > 1e-12 {
            v.push(format!("linear-phase designs need tau_d = (L-1)/2 = {}", (self.taps as f64 - 1.0) / 2.0));
        }
        if self.grid_freqs < 2 || self.grid_angles < 2 {
            v.push("design grid needs at least 2 frequencies and 2 angles".into());
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(BeamError::InvalidSettings(v.join("; ")))
        }
    }

    pub fn grid(&self) -> Result<UniformGrid, BeamError> {
        UniformGrid::new(&self.band, self.grid_freqs, self.grid_angles)
    }
}

/// Desired passband samples `e^{-jω τ_d}`, frequency-major.
pub fn build_desired_passband(grid: &UniformGrid, tau_d: f64) -> Vec<Complex64> {
    let mut d = Vec::with_capacity(grid.freqs.len() * grid.passband.len());
    for &w in &grid.freqs {
        let v = Complex64::from_polar(1.0, -w * tau_d);
        d.extend(std::iter::repeat_n(v, grid.passband.len()));
    }
    d
}

/// `‖U_pb x - d_pb‖_∞` on a uniform grid.
pub fn passband_error(geom: &ArrayGeometry, x: &FilterBank, grid: &UniformGrid, tau_d: f64) -> f64 {
    let delays: Vec<Vec<f64>> = grid.passband.iter().map(|&t| geom.element_delays(t)).collect();
    let mut worst = 0.0f64;
    for &w in &grid.freqs {
        let slice = FrequencySlice::new(x, w);
        let d = Complex64::from_polar(1.0, -w * tau_d);
        for a in &delays {
            worst = worst.max((slice.at(a).b - d).norm());
        }
    }
    worst
}

/// `‖U_sb x‖_∞` on a uniform grid.
pub fn stopband_peak(geom: &ArrayGeometry, x: &FilterBank, grid: &UniformGrid) -> f64 {
    let delays: Vec<Vec<f64>> = grid.stopband.iter().map(|&t| geom.element_delays(t)).collect();
    let mut worst = 0.0f64;
    for &w in &grid.freqs {
        let slice = FrequencySlice::new(x, w);
        for a in &delays {
            worst = worst.max(slice.at(a).b.norm());
        }
    }
    worst
}

/// Where the filter coefficients and auxiliary scalars live in a program.
#[derive(Debug, Clone)]
pub struct Layout {
    pub reduction: Reduction,
    /// Passband error bound.
    pub t: usize,
    /// Regularizer epigraph variable.
    pub rho: Option<usize>,
    pub num_vars: usize,
}

impl Layout {
    fn new(spec: &ConvexDesignSpec) -> Self {
        let kind = match spec.tie_mode {
            TieMode::Reduced => spec.parameterization(),
            TieMode::Equalities => Parameterization::Full,
        };
        let reduction = Reduction::new(kind, spec.geometry.num_mics(), spec.taps);
        let r = reduction.num_vars();
        let rho = (spec.lambda > 0.0).then_some(r + 1);
        Self { reduction, t: r, rho, num_vars: r + 1 + usize::from(spec.lambda > 0.0) }
    }

    /// Full complex row reduced and zero-padded to the program width.
    fn row(&self, full: &[Complex64]) -> Vec<Complex64> {
        let mut r = self.reduction.reduce_row(full);
        r.resize(self.num_vars, Complex64::new(0.0, 0.0));
        r
    }

    pub fn filters(&self, x: &[f64]) -> Result<FilterBank, BeamError> {
        self.reduction.expand(&x[..self.reduction.num_vars()])
    }
}

fn add_ties(prog: &mut ConeProgram, spec: &ConvexDesignSpec, layout: &Layout) -> Result<(), BeamError> {
    if spec.tie_mode != TieMode::Equalities || spec.parameterization() == Parameterization::Full {
        return Ok(());
    }
    let tied = Reduction::new(spec.parameterization(), spec.geometry.num_mics(), spec.taps);
    for mut row in tied.tie_rows() {
        row.resize(layout.num_vars, 0.0);
        prog.add_equality(&row, 0.0)?;
    }
    Ok(())
}

/// Objective `t (+ λ ρ)`, passband epigraph rows and the stopband ceiling.
fn add_common(prog: &mut ConeProgram, spec: &ConvexDesignSpec, grid: &UniformGrid, layout: &Layout) -> Result<(), BeamError> {
    let geom = &spec.geometry;
    prog.set_objective_coeff(layout.t, 1.0)?;
    let zero = Complex64::new(0.0, 0.0);
    for &w in &grid.freqs {
        prog.set_tag("passband");
        let mut rows = Vec::with_capacity(grid.passband.len() * layout.num_vars);
        for &th in &grid.passband {
            rows.extend(layout.row(&steering_vector(geom, spec.taps, w, th)));
        }
        let d = vec![Complex64::from_polar(1.0, -w * spec.tau_d); grid.passband.len()];
        add_complex_linf_epigraph(prog, &rows, &d, Bound::var(layout.t))?;

        prog.set_tag("stopband");
        let mut rows = Vec::with_capacity(grid.stopband.len() * layout.num_vars);
        for &th in &grid.stopband {
            rows.extend(layout.row(&steering_vector(geom, spec.taps, w, th)));
        }
        let d = vec![zero; grid.stopband.len()];
        add_complex_linf_epigraph(prog, &rows, &d, Bound::constant(spec.stopband_ceiling))?;
    }
    if let Some(rho) = layout.rho {
        prog.set_tag("regularization");
        prog.set_objective_coeff(rho, spec.lambda)?;
        let mut head = vec![0.0; layout.num_vars];
        head[rho] = 1.0;
        let weights = layout.reduction.norm_weights();
        let rows: Vec<Vec<f64>> = weights
            .iter()
            .enumerate()
            .map(|(i, wt)| {
                let mut r = vec![0.0; layout.num_vars];
                r[i] = *wt;
                r
            })
            .collect();
        let mut exprs = vec![Affine::new(&head, 0.0)];
        exprs.extend(rows.iter().map(|r| Affine::new(r, 0.0)));
        prog.add_soc(&exprs)?;
    }
    add_ties(prog, spec, layout)
}

/// A(ω) rows reduced and padded, row-major `N × num_vars`.
fn dft_rows(spec: &ConvexDesignSpec, layout: &Layout, omega: f64) -> Vec<Complex64> {
    let nl = spec.geometry.num_mics() * spec.taps;
    filter_dft_matrix(spec.geometry.num_mics(), spec.taps, omega)
        .chunks(nl)
        .flat_map(|r| layout.row(r))
        .collect()
}

/// Conic program of the V1 design (optionally regularized).
pub fn build_v1_program(spec: &ConvexDesignSpec) -> Result<(ConeProgram, Layout), BeamError> {
    spec.validate()?;
    let grid = spec.grid()?;
    let layout = Layout::new(spec);
    let mut prog = ConeProgram::new(layout.num_vars);
    add_common(&mut prog, spec, &grid, &layout)?;
    prog.set_tag("wng");
    for (m, &w) in grid.freqs.iter().enumerate() {
        let a = dft_rows(spec, &layout, w);
        let g = layout.row(&steering_vector(&spec.geometry, spec.taps, w, grid.theta_d));
        add_wng_cone(&mut prog, &a, &g, spec.tau_d, w, spec.wng_floor.at(m))?;
    }
    Ok((prog, layout))
}

/// Conic program of design C: look-direction equalities and energy caps
/// `‖A(ω)x‖₂ ≤ √(1/Γ_wng(ω))`.
pub fn build_c_program(spec: &ConvexDesignSpec) -> Result<(ConeProgram, Layout), BeamError> {
    spec.validate()?;
    if spec.lambda > 0.0 {
        return Err(BeamError::InvalidSettings("design C takes no regularization".into()));
    }
    let grid = spec.grid()?;
    let layout = Layout::new(spec);
    let mut prog = ConeProgram::new(layout.num_vars);
    add_common(&mut prog, spec, &grid, &layout)?;
    prog.set_tag("energy-cap");
    for (m, &w) in grid.freqs.iter().enumerate() {
        let cap = (1.0 / spec.wng_floor.at(m)).sqrt();
        let a = dft_rows(spec, &layout, w);
        let zeros = vec![0.0; layout.num_vars];
        let parts: Vec<Vec<f64>> = a
            .chunks(layout.num_vars)
            .flat_map(|r| [r.iter().map(|c| c.re).collect(), r.iter().map(|c| c.im).collect()])
            .collect();
        let mut exprs = vec![Affine::new(&zeros, cap)];
        exprs.extend(parts.iter().map(|r| Affine::new(r, 0.0)));
        prog.add_soc(&exprs)?;

        let g = layout.row(&steering_vector(&spec.geometry, spec.taps, w, grid.theta_d));
        let d = Complex64::from_polar(1.0, -w * spec.tau_d);
        let re: Vec<f64> = g.iter().map(|c| c.re).collect();
        let im: Vec<f64> = g.iter().map(|c| c.im).collect();
        prog.add_equality(&re, d.re)?;
        prog.add_equality(&im, d.im)?;
    }
    Ok((prog, layout))
}

/// Result of a one-shot convex design.
#[derive(Debug, Clone)]
pub struct ConvexDesign {
    pub filters: FilterBank,
    /// `‖U_pb x - d_pb‖_∞` on the design grid (regularizer excluded).
    pub j_sol: f64,
    pub outcome: SolveOutcome,
    pub num_rows: usize,
    pub num_vars: usize,
}

fn check_outcome(outcome: &SolveOutcome) -> Result<(), BeamError> {
    match outcome.status {
        Status::Optimal => Ok(()),
        Status::Infeasible => Err(BeamError::Infeasible {
            family: outcome.certificate.as_ref().and_then(|c| c.dominant_family().map(str::to_string)),
        }),
        other => Err(BeamError::NumericalFailure(format!(
            "{other:?} after {} iterations (primal residual {:.2e}, dual residual {:.2e}, gap {:.2e})",
            outcome.iterations, outcome.primal_residual, outcome.dual_residual, outcome.gap
        ))),
    }
}

fn finish(spec: &ConvexDesignSpec, prog: &ConeProgram, layout: &Layout, settings: &Settings) -> Result<ConvexDesign, BeamError> {
    info!("solving {} rows × {} variables", prog.num_rows(), prog.num_vars());
    let outcome = solve_with(prog, settings);
    info!(
        "solver finished: {:?} in {} iterations, objective {:.6e}",
        outcome.status, outcome.iterations, outcome.objective
    );
    check_outcome(&outcome)?;
    if outcome.equality_residual > 1e-6 {
        warn!("look-direction equalities hold only in the least-squares sense (residual {:.3e})", outcome.equality_residual);
    }
    let filters = layout.filters(&outcome.x)?;
    let j_sol = passband_error(&spec.geometry, &filters, &spec.grid()?, spec.tau_d);
    Ok(ConvexDesign { filters, j_sol, num_rows: prog.num_rows(), num_vars: prog.num_vars(), outcome })
}

/// V1 design (regularized when `spec.lambda > 0`).
pub fn design_v1(spec: &ConvexDesignSpec) -> Result<ConvexDesign, BeamError> {
    let (prog, layout) = build_v1_program(spec)?;
    finish(spec, &prog, &layout, &spec.solver)
}

/// Design C. The look-direction equalities are enforced in the
/// least-squares-consistent sense: when the sampled system has no exact
/// solution the program keeps the affine set of its least-squares solutions.
pub fn design_c(spec: &ConvexDesignSpec) -> Result<ConvexDesign, BeamError> {
    let (prog, layout) = build_c_program(spec)?;
    let settings = Settings { equality: EqualityMode::LeastSquares, ..spec.solver.clone() };
    finish(spec, &prog, &layout, &settings)
}
