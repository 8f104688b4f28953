//! Solvers and diagnostics for the 1D scalar advection equation
//! `phi_t + s * zeta(x, t, phi) * phi_x = 0`.
//!
//! * [`expr`]: text expressions for the velocity law and initial data.
//! * [`domain`]: grids and solution rows.
//! * [`schemes`]: explicit finite-difference steppers and boundary policies.
//! * [`oracle`]: exact translation, characteristic tracing and shock timing.
//! * [`analysis`]: Courant numbers, von Neumann factors, norms, convergence.
//! * [`sim`], [`config`], [`output`]: runs, their configuration and files.

pub mod analysis;
pub mod config;
pub mod domain;
pub mod expr;
pub mod oracle;
pub mod output;
pub mod schemes;
pub mod sim;

pub use analysis::{
    amplification_factor, cfl_number, convergence_order, empirical_growth, error_norms, stability_sweep,
    total_variation, AmplificationFactor, AnalysisError, ConvergenceStudy, CourantReport, ErrorReport,
    GrowthMeasurement, StabilityRow,
};
pub use config::{ConfigError, Method, RunConfig};
pub use domain::{
    build_grid, build_time_grid, sample_initial, DomainError, Grid1D, InitialCondition, TimeGrid, WaveField,
};
pub use expr::{parse_expr, DependenceClass, EvalError, ParseError, VelocityExpr};
pub use oracle::{
    detect_shock, eval_traveling, implicit_state_solution, oracle_field, trace_characteristic, CharacteristicTrace,
    OracleError, ShockReport, TravelingWave,
};
pub use output::{write_comparison, write_outputs, OutputError};
pub use schemes::{apply_boundary, step, BoundaryPolicy, SchemeId, SignConvention, StepContext, StepError};
pub use sim::{compare, run, run_exact, run_oracle, Comparison, Drift, Manifest, RunError, RunResult};

use thiserror::Error;

/// Any error the library can produce.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Output(#[from] OutputError),
}
