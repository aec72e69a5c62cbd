//! Second-order cone programs for minimax beamformer design.
//!
//! [`ConeProgram`] is a solver-agnostic container for
//! `min cᵀx  s.t.  Ax = b,  h − Gx ∈ K` with `K` a product of nonnegative
//! orthants and second-order cones. [`solve`] runs a homogeneous
//! self-dual interior-point method on it. The [`complex`] helpers split
//! complex modulus constraints into real cone blocks.

pub mod complex;
pub mod cones;
mod error;
mod program;
mod solver;

pub use complex::{add_complex_linf_epigraph, add_wng_cone, Bound};
pub use error::SocpError;
pub use program::{Affine, Block, Cone, ConeProgram};
pub use solver::{solve, solve_with, Certificate, EqualityMode, Settings, SolveOutcome, Status};
