//! Scenario fixtures shared by the benchmarks.

use advect_core::{BoundaryPolicy, Method, RunConfig, SchemeId, SignConvention};
use std::f64::consts::PI;

/// `sin(x^2)` carried by `x + t` on `[0, 4 pi]`, forward-biased scheme.
pub fn forward_replica(nt: usize) -> RunConfig {
    RunConfig::new(
        (0.0, 4.0 * PI, 100),
        (5.0, nt),
        "sin(x^2)",
        "x + t",
        Method::Scheme(SchemeId::ForwardBiased),
        BoundaryPolicy::DegenerateStencil,
        SignConvention::PaperFaithful,
    )
}

/// Smooth periodic transport at unit speed.
pub fn periodic_sine(scheme: SchemeId, nx: usize) -> RunConfig {
    let mut cfg = RunConfig::new(
        (0.0, 2.0 * PI, nx),
        (PI, nx),
        "sin(x)",
        "1",
        Method::Scheme(scheme),
        BoundaryPolicy::Periodic,
        SignConvention::Standard,
    );
    cfg.snapshot_every = nx;
    cfg
}
