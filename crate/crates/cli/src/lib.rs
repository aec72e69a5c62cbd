//! Batch front end: configs in, coefficients and reports out.

pub mod config;
pub mod output;
pub mod reproduce;
pub mod run;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 1;
    pub const INFEASIBLE: i32 = 2;
    pub const NUMERICAL: i32 = 3;
}
