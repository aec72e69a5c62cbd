//! Files written by a run: coefficients, report and evaluation curves.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use broadbeam::filter::FilterBank;
use broadbeam::geometry::ArrayGeometry;
use broadbeam::iterative::{IterationRecord, IterativeDesign};
use broadbeam::metrics::{beampattern, DesignReport, Metrics};
use broadbeam::sampling::{linspace, UniformGrid};
use broadbeam::units::{omega_to_hz, power_to_db};
use broadbeam_socp::SolveOutcome;
use serde::Serialize;

use crate::config::RunConfig;
use crate::run::{Design, Finished};

#[derive(Debug)]
pub enum OutputError {
    Io(PathBuf, std::io::Error),
    Csv(PathBuf, String),
}

impl std::fmt::Display for OutputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OutputError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            OutputError::Csv(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl std::error::Error for OutputError {}

fn create(path: &Path) -> Result<BufWriter<File>, OutputError> {
    File::create(path).map(BufWriter::new).map_err(|e| OutputError::Io(path.to_path_buf(), e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, OutputError> {
    Ok(csv::Writer::from_writer(create(path)?))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> OutputError + '_ {
    move |e| OutputError::Csv(path.to_path_buf(), e.to_string())
}

/// One row per microphone, one column per tap, 17 significant digits.
pub fn write_coefficients(path: &Path, x: &FilterBank) -> Result<(), OutputError> {
    let mut w = csv_writer(path)?;
    for row in x.rows() {
        w.write_record(row.iter().map(|v| format!("{v:.16e}"))).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| OutputError::Io(path.to_path_buf(), e))
}

pub fn read_coefficients(path: &Path) -> Result<FilterBank, OutputError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err(path))?;
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| OutputError::Csv(path.to_path_buf(), format!("row {}: {f:?}: {e}", i + 1))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    FilterBank::from_rows(&rows).map_err(|e| OutputError::Csv(path.to_path_buf(), e.to_string()))
}

/// Magnitude, phase and group delay over the evaluation frequencies and the full angle range.
pub fn write_beampattern(path: &Path, geom: &ArrayGeometry, x: &FilterBank, grid: &UniformGrid, angles: usize) -> Result<(), OutputError> {
    let mut w = csv_writer(path)?;
    let e = csv_err(path);
    w.write_record(["freq_hz", "theta_deg", "mag_db", "phase_rad", "group_delay_samples"]).map_err(&e)?;
    let thetas = linspace(0.0, std::f64::consts::PI, angles);
    for p in beampattern(geom, x, &grid.freqs, &thetas) {
        w.write_record([
            format!("{}", omega_to_hz(p.omega, geom.sample_rate())),
            format!("{}", p.theta.to_degrees()),
            format!("{}", p.mag_db),
            format!("{}", p.phase),
            p.group_delay.map(|t| t.to_string()).unwrap_or_else(|| "nan".into()),
        ])
        .map_err(&e)?;
    }
    w.flush().map_err(|e| OutputError::Io(path.to_path_buf(), e))
}

pub fn write_wng(path: &Path, fs: f64, report: &DesignReport) -> Result<(), OutputError> {
    let mut w = csv_writer(path)?;
    let e = csv_err(path);
    w.write_record(["freq_hz", "wng_db"]).map_err(&e)?;
    for &(om, g) in &report.wng {
        w.write_record([omega_to_hz(om, fs).to_string(), power_to_db(g).to_string()]).map_err(&e)?;
    }
    w.flush().map_err(|e| OutputError::Io(path.to_path_buf(), e))
}

/// Per-angle maximum group-delay deviation over the passband.
pub fn write_group_delay(path: &Path, report: &DesignReport) -> Result<(), OutputError> {
    let mut w = csv_writer(path)?;
    let e = csv_err(path);
    w.write_record(["theta_deg", "sigma_tau_samples"]).map_err(&e)?;
    for (th, s) in report.passband_angles.iter().zip(&report.sigma_tau_theta) {
        w.write_record([th.to_degrees().to_string(), s.to_string()]).map_err(&e)?;
    }
    w.flush().map_err(|e| OutputError::Io(path.to_path_buf(), e))
}

#[derive(Serialize)]
struct TraceLine {
    path: String,
    k: usize,
    objective: f64,
    gd_linf: f64,
    slack: f64,
    step_norm: f64,
    radius: f64,
    sigma_tau_estimate: f64,
    rows: usize,
    retried: bool,
}

impl From<&IterationRecord> for TraceLine {
    fn from(r: &IterationRecord) -> Self {
        Self {
            path: format!("{:?}", r.path),
            k: r.k,
            objective: r.objective,
            gd_linf: r.gd_linf,
            slack: r.slack,
            step_norm: r.step_norm,
            radius: r.radius,
            sigma_tau_estimate: r.sigma_tau_estimate,
            rows: r.rows,
            retried: r.retried,
        }
    }
}

pub fn write_trace(path: &Path, d: &IterativeDesign) -> Result<(), OutputError> {
    let mut w = create(path)?;
    let io = |e| OutputError::Io(path.to_path_buf(), e);
    for r in d.trace() {
        let line = serde_json::to_string(&TraceLine::from(r)).expect("trace records serialize");
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

#[derive(Serialize)]
pub struct RunSection {
    pub design: String,
    pub status: String,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub seed: u64,
    pub elapsed_s: f64,
}

#[derive(Serialize)]
pub struct MetricsSection {
    pub passband_ripple_db: f64,
    pub stopband_attenuation_db: f64,
    pub tau_avg_samples: f64,
    pub sigma_tau_samples: f64,
    /// Cost on the design grid.
    pub j_sol: f64,
    /// Cost on the evaluation grid.
    pub j_eval: f64,
    pub min_wng_db: f64,
    pub skipped_points: usize,
}

impl MetricsSection {
    pub fn new(m: &Metrics, j_sol: f64) -> Self {
        Self {
            passband_ripple_db: m.passband_ripple_db,
            stopband_attenuation_db: m.stopband_attenuation_db,
            tau_avg_samples: m.tau_avg,
            sigma_tau_samples: m.sigma_tau,
            j_sol,
            j_eval: m.j_sol,
            min_wng_db: m.min_wng_db,
            skipped_points: m.skipped_points,
        }
    }
}

#[derive(Serialize)]
pub struct SolverSection {
    pub status: String,
    pub iterations: usize,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub cone_violation: f64,
    pub equality_residual: f64,
    pub rows: usize,
    pub variables: usize,
}

impl SolverSection {
    fn new(o: &SolveOutcome, rows: usize, variables: usize) -> Self {
        Self {
            status: format!("{:?}", o.status),
            iterations: o.iterations,
            objective: o.objective,
            primal_residual: o.primal_residual,
            dual_residual: o.dual_residual,
            gap: o.gap,
            cone_violation: o.cone_violation,
            equality_residual: o.equality_residual,
            rows,
            variables,
        }
    }
}

#[derive(Serialize)]
pub struct PathSection {
    pub path: String,
    pub iterations: usize,
    pub sigma_tau_samples: f64,
    pub best_objective: f64,
    pub gamma_pb: f64,
    pub max_rows: usize,
}

#[derive(Serialize)]
pub struct VerificationSection {
    pub passed: bool,
    pub freqs: usize,
    pub angles: usize,
    pub stopband_peak: f64,
    pub stopband_ceiling: f64,
    pub magnitude_error: f64,
    pub gamma_pb: f64,
    pub min_wng: f64,
    pub wng_floor: f64,
}

#[derive(Serialize)]
pub struct IterativeSection {
    pub chosen: String,
    pub paths: Vec<PathSection>,
    pub verification: VerificationSection,
}

impl IterativeSection {
    fn new(d: &IterativeDesign) -> Self {
        let v = &d.verification;
        Self {
            chosen: format!("{:?}", d.chosen),
            paths: d
                .paths
                .iter()
                .map(|p| PathSection {
                    path: format!("{:?}", p.path),
                    iterations: p.iterations,
                    sigma_tau_samples: p.sigma_tau,
                    best_objective: p.best_objective,
                    gamma_pb: p.gamma_pb,
                    max_rows: p.records.iter().map(|r| r.rows).max().unwrap_or(0),
                })
                .collect(),
            verification: VerificationSection {
                passed: v.passed(),
                freqs: v.freqs,
                angles: v.angles,
                stopband_peak: v.stopband_peak,
                stopband_ceiling: v.stopband_ceiling,
                magnitude_error: v.magnitude_error,
                gamma_pb: v.gamma_pb,
                min_wng: v.min_wng,
                wng_floor: v.wng_floor,
            },
        }
    }
}

/// `report.toml`: run status, metrics, solver statistics and the effective config.
#[derive(Serialize)]
pub struct Report<'a> {
    pub run: RunSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsSection>,
    /// Outcome of the design program; for V2 the step-1 program of the chosen path.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterative: Option<IterativeSection>,
    pub config: &'a RunConfig,
}

impl<'a> Report<'a> {
    pub fn finished(run: RunSection, f: &Finished, config: &'a RunConfig) -> Self {
        let (solver, iterative) = match &f.design {
            Design::Convex(d) => (Some(SolverSection::new(&d.outcome, d.num_rows, d.num_vars)), None),
            Design::Iterative(d) => {
                let s = &d.chosen_path().start;
                (Some(SolverSection::new(&s.outcome, s.num_rows, s.num_vars)), Some(IterativeSection::new(d)))
            }
        };
        Self { run, metrics: Some(MetricsSection::new(&f.report.metrics, f.j_sol)), solver, iterative, config }
    }

    pub fn write(&self, path: &Path) -> Result<(), OutputError> {
        let text = toml::to_string(self).expect("report serializes");
        std::fs::write(path, text).map_err(|e| OutputError::Io(path.to_path_buf(), e))
    }
}

/// Writes every artifact of a finished run into `dir`.
pub fn write_all(dir: &Path, f: &Finished, geom: &ArrayGeometry, grid: &UniformGrid, angles: usize) -> Result<(), OutputError> {
    let x = f.design.filters();
    write_coefficients(&dir.join("coefficients.csv"), x)?;
    write_beampattern(&dir.join("beampattern.csv"), geom, x, grid, angles)?;
    write_wng(&dir.join("wng.csv"), geom.sample_rate(), &f.report)?;
    write_group_delay(&dir.join("group_delay.csv"), &f.report)?;
    if let Design::Iterative(d) = &f.design {
        write_trace(&dir.join("trace.jsonl"), d)?;
    }
    Ok(())
}
