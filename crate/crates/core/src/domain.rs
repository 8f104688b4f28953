//! Discretization geometry and the discrete solution row.

use thiserror::Error;

use crate::expr::{DependenceClass, EvalError, VelocityExpr};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("interval [{a}, {b}] is empty or reversed")]
    EmptyInterval { a: f64, b: f64 },
    #[error("need at least 3 subintervals, got {0}")]
    TooFewCells(usize),
    #[error("total time must be positive and finite, got {0}")]
    NonPositiveTime(f64),
    #[error("need at least one time step")]
    NoSteps,
    #[error("initial condition may depend on x only: {0}")]
    InitialNotSpatial(String),
    #[error("field has {got} values, grid needs {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("initial condition failed at x = {x}: {source}")]
    Eval { x: f64, source: EvalError },
}

/// Uniform partition of `[a, b]` into `nx` cells (`nx + 1` points).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid1D {
    a: f64,
    b: f64,
    nx: usize,
    dx: f64,
}

impl Grid1D {
    pub fn new(a: f64, b: f64, nx: usize) -> Result<Self, DomainError> {
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(DomainError::EmptyInterval { a, b });
        }
        if nx < 3 {
            return Err(DomainError::TooFewCells(nx));
        }
        let dx = (b - a) / nx as f64;
        Ok(Self { a, b, nx, dx })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn len(&self) -> usize {
        self.nx + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of point `i`, computed directly rather than accumulated.
    pub fn x(&self, i: usize) -> f64 {
        self.a + i as f64 * self.dx
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.x(i))
    }
}

pub fn build_grid(a: f64, b: f64, nx: usize) -> Result<Grid1D, DomainError> {
    Grid1D::new(a, b, nx)
}

/// Uniform partition of `[0, t_end]` into `nt` steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    t_end: f64,
    nt: usize,
    dt: f64,
}

impl TimeGrid {
    pub fn new(t_end: f64, nt: usize) -> Result<Self, DomainError> {
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(DomainError::NonPositiveTime(t_end));
        }
        if nt == 0 {
            return Err(DomainError::NoSteps);
        }
        Ok(Self {
            t_end,
            nt,
            dt: t_end / nt as f64,
        })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Time of level `j`.
    pub fn t(&self, j: usize) -> f64 {
        j as f64 * self.dt
    }
}

pub fn build_time_grid(t_end: f64, nt: usize) -> Result<TimeGrid, DomainError> {
    TimeGrid::new(t_end, nt)
}

/// One time level of the discrete solution.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveField {
    grid: Grid1D,
    time: f64,
    values: Vec<f64>,
    blown_up: bool,
}

impl WaveField {
    pub fn new(grid: Grid1D, time: f64, values: Vec<f64>) -> Result<Self, DomainError> {
        if values.len() != grid.len() {
            return Err(DomainError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self {
            grid,
            time,
            values,
            blown_up: false,
        })
    }

    pub fn from_fn(grid: Grid1D, time: f64, mut f: impl FnMut(f64) -> f64) -> Self {
        let values = grid.points().map(&mut f).collect();
        Self {
            grid,
            time,
            values,
            blown_up: false,
        }
    }

    /// Same values, relabelled as level `time`.
    pub fn retimed(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_blown_up(&self) -> bool {
        self.blown_up
    }

    /// Flags the field as diverged. Only the simulation loop calls this.
    pub fn mark_blown_up(&mut self) {
        self.blown_up = true;
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// Initial profile `f(x)`; an expression in `x` alone.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialCondition {
    expr: VelocityExpr,
}

impl InitialCondition {
    pub fn new(expr: VelocityExpr) -> Result<Self, DomainError> {
        match expr.classify() {
            DependenceClass::Constant | DependenceClass::SpaceOnly => Ok(Self { expr }),
            _ => Err(DomainError::InitialNotSpatial(expr.to_string())),
        }
    }

    pub fn parse(src: &str) -> Result<Self, crate::Error> {
        Ok(Self::new(VelocityExpr::parse(src)?)?)
    }

    pub fn expr(&self) -> &VelocityExpr {
        &self.expr
    }

    pub fn eval(&self, x: f64) -> Result<f64, EvalError> {
        self.expr.eval(x, 0.0, 0.0)
    }
}

pub fn sample_initial(grid: &Grid1D, f: &InitialCondition) -> Result<WaveField, DomainError> {
    let values = grid
        .points()
        .map(|x| f.eval(x).map_err(|source| DomainError::Eval { x, source }))
        .collect::<Result<Vec<_>, _>>()?;
    WaveField::new(*grid, 0.0, values)
}
