//! Numerical laboratory for a dam-type free-boundary problem: a projected
//! fixed-point solver for the pressure/saturation pair, barrier-function
//! construction with measured constants, free-boundary extraction, and
//! porosity plus box-counting diagnostics of the extracted boundary.

pub mod barrier;
pub mod config;
pub mod domain;
pub mod error;
pub mod expr;
pub mod free_boundary;
pub mod grid;
pub mod linsolve;
pub mod pipeline;
pub mod porosity;
pub mod report;
pub mod solver;

pub use domain::{
    flatten_point, transform_coefficients, unflatten_point, validate_assumptions,
    CoefficientField, DomainSpec, GammaProfile, ValidationReport,
};
pub use error::{Error, Result};
pub use grid::{Grid, GridField, MatrixField};
pub use solver::{
    residual_report, solve_linear_stage, solve_vi, update_chi, BoundaryData, Solution,
    SolverParams,
};
