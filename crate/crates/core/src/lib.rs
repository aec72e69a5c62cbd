pub mod error;
pub mod filter;
pub mod geometry;
pub mod reduced;
pub mod response;
pub mod units;
pub mod sampling;
pub mod convex;
pub mod iterative;
pub mod metrics;
pub mod presets;
