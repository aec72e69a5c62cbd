//! Runs one resolved config through the matching design routine.

use std::time::{Duration, Instant};

use broadbeam::convex::{build_c_program, build_v1_program, design_c, design_v1, ConvexDesign};
use broadbeam::error::BeamError;
use broadbeam::filter::FilterBank;
use broadbeam::iterative::{run_two_step, IterativeDesign};
use broadbeam::metrics::{evaluate, CostKind, DesignReport};
use broadbeam_socp::ConeProgram;

use crate::config::{DesignKind, Resolved};
use crate::exit;

pub enum Design {
    Convex(ConvexDesign),
    Iterative(IterativeDesign),
}

impl Design {
    pub fn filters(&self) -> &FilterBank {
        match self {
            Design::Convex(d) => &d.filters,
            Design::Iterative(d) => &d.filters,
        }
    }
}

pub struct Finished {
    pub design: Design,
    pub report: DesignReport,
    /// Cost on the design grid.
    pub j_sol: f64,
    pub elapsed: Duration,
}

pub fn cost_kind(r: &Resolved) -> CostKind {
    match r.kind {
        DesignKind::V2 => CostKind::Iterative,
        _ => CostKind::Convex { tau_d: r.convex.tau_d },
    }
}

pub fn run(r: &Resolved) -> Result<Finished, BeamError> {
    let t0 = Instant::now();
    let design = match r.kind {
        DesignKind::V1 | DesignKind::V1Sym | DesignKind::V1Lp => Design::Convex(design_v1(&r.convex)?),
        DesignKind::CA | DesignKind::CASym | DesignKind::CB => Design::Convex(design_c(&r.convex)?),
        DesignKind::V2 => Design::Iterative(run_two_step(&r.iterative)?),
    };
    let elapsed = t0.elapsed();
    let report = evaluate(&r.convex.geometry, design.filters(), &r.eval_grid, cost_kind(r))?;
    let j_sol = match &design {
        Design::Convex(d) => d.j_sol,
        Design::Iterative(d) => evaluate(&r.convex.geometry, &d.filters, &r.convex.grid()?, CostKind::Iterative)?.metrics.j_sol,
    };
    Ok(Finished { design, report, j_sol, elapsed })
}

/// The conic program a run starts from. For V2 this is the regularized step-1 program.
pub fn program(r: &Resolved) -> Result<ConeProgram, BeamError> {
    match r.kind {
        DesignKind::CA | DesignKind::CASym | DesignKind::CB => Ok(build_c_program(&r.convex)?.0),
        DesignKind::V2 => {
            let mut spec = r.convex.clone();
            spec.lambda = r.iterative.lambda_a;
            Ok(build_v1_program(&spec)?.0)
        }
        _ => Ok(build_v1_program(&r.convex)?.0),
    }
}

pub fn status_name(e: &BeamError) -> &'static str {
    match e {
        BeamError::Infeasible { .. } => "infeasible",
        BeamError::NumericalFailure(_) | BeamError::NearZeroResponse | BeamError::ZeroFilterEnergy | BeamError::Program(_) => {
            "numerical_failure"
        }
        _ => "invalid",
    }
}

pub fn exit_code(e: &BeamError) -> i32 {
    match status_name(e) {
        "infeasible" => exit::INFEASIBLE,
        "numerical_failure" => exit::NUMERICAL,
        _ => exit::CONFIG,
    }
}
