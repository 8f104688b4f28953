//! Reference solutions that involve no spatial discretization.
//!
//! * constant velocity: exact translation of the initial profile;
//! * `zeta(x, t)`: characteristics traced back to `t = 0` with classical RK4,
//!   then the analytic initial profile is evaluated at the foot point;
//! * `zeta(u)`: the implicit relation `x = x0 + s * zeta(f(x0)) * t`, valid
//!   until characteristics cross.

use thiserror::Error;

use crate::domain::{Grid1D, InitialCondition, WaveField};
use crate::expr::{EvalError, Var, VelocityExpr};
use crate::schemes::SignConvention;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("velocity depends on u; no characteristic oracle for it")]
    StateDependent,
    #[error("speed law must depend on u only")]
    NotStateOnly,
    #[error("integration step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("evaluation failed at x = {x}, t = {t}: {source}")]
    Eval { x: f64, t: f64, source: EvalError },
    #[error("characteristic through x = {x}, t = {t} left the representable range")]
    NonFiniteTrajectory { x: f64, t: f64 },
    #[error("no sign change found when solving for the foot of x = {x}, t = {t}")]
    NoBracket { x: f64, t: f64 },
    #[error("t = {t} is not before the breaking time {shock_time}")]
    PostShock { t: f64, shock_time: f64 },
}

/// `f_right(x - c0 t) + f_left(x + c0 t)` under the standard convention.
#[derive(Clone, Debug, PartialEq)]
pub struct TravelingWave {
    pub f_right: InitialCondition,
    pub f_left: Option<InitialCondition>,
    pub c0: f64,
}

impl TravelingWave {
    pub fn single(f: InitialCondition, c0: f64) -> Self {
        Self {
            f_right: f,
            f_left: None,
            c0,
        }
    }
}

pub fn eval_traveling(w: &TravelingWave, x: f64, t: f64, sign: SignConvention) -> Result<f64, EvalError> {
    let shift = sign.factor() * w.c0 * t;
    let mut value = w.f_right.eval(x - shift)?;
    if let Some(g) = &w.f_left {
        value += g.eval(x + shift)?;
    }
    Ok(value)
}

/// A characteristic followed from `(arrival, t)` back to `(foot, 0)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CharacteristicTrace {
    pub foot: f64,
    pub arrival: f64,
    pub steps: usize,
    /// Step actually used; `t / steps`, at most the requested step.
    pub rk_dt: f64,
}

/// Integrates `dx/dtau = s * zeta(x, tau)` from `(x, t_from)` to `t_to` (either
/// direction) with classical RK4 and a uniform step no longer than `rk_dt`.
/// Returns the end point and the number of steps taken.
pub fn integrate_characteristic(
    zeta: &VelocityExpr,
    x: f64,
    t_from: f64,
    t_to: f64,
    sign: SignConvention,
    rk_dt: f64,
) -> Result<(f64, usize), OracleError> {
    if zeta.depends_on(Var::U) {
        return Err(OracleError::StateDependent);
    }
    if !(rk_dt.is_finite() && rk_dt > 0.0) {
        return Err(OracleError::InvalidStep(rk_dt));
    }
    let span = t_to - t_from;
    let steps = (span.abs() / rk_dt).ceil() as usize;
    if steps == 0 {
        return Ok((x, 0));
    }
    let h = span / steps as f64;
    let s = sign.factor();
    let velocity = |x: f64, tau: f64| -> Result<f64, OracleError> {
        match zeta.eval(x, tau, 0.0) {
            Ok(z) => Ok(s * z),
            Err(EvalError::NonFinite) => Err(OracleError::NonFiniteTrajectory { x, t: tau }),
            Err(source) => Err(OracleError::Eval { x, t: tau, source }),
        }
    };

    let mut pos = x;
    for k in 0..steps {
        let tau = t_from + k as f64 * h;
        let half = tau + h / 2.0;
        let k1 = velocity(pos, tau)?;
        let k2 = velocity(pos + h / 2.0 * k1, half)?;
        let k3 = velocity(pos + h / 2.0 * k2, half)?;
        let k4 = velocity(pos + h * k3, t_from + (k + 1) as f64 * h)?;
        pos += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !pos.is_finite() {
            return Err(OracleError::NonFiniteTrajectory { x, t: t_from });
        }
    }
    Ok((pos, steps))
}

pub fn trace_characteristic(
    zeta: &VelocityExpr,
    x: f64,
    t: f64,
    sign: SignConvention,
    rk_dt: f64,
) -> Result<CharacteristicTrace, OracleError> {
    let (foot, steps) = integrate_characteristic(zeta, x, t, 0.0, sign, rk_dt)?;
    let used = if steps == 0 { rk_dt } else { t / steps as f64 };
    Ok(CharacteristicTrace {
        foot,
        arrival: x,
        steps,
        rk_dt: used,
    })
}

/// Solution of the linear problem at time `t`: `f` evaluated at the foot of
/// each grid point's characteristic. No interpolation is involved.
pub fn oracle_field(
    grid: &Grid1D,
    t: f64,
    f: &InitialCondition,
    zeta: &VelocityExpr,
    sign: SignConvention,
    rk_dt: f64,
) -> Result<WaveField, OracleError> {
    let values = grid
        .points()
        .map(|x| {
            let trace = trace_characteristic(zeta, x, t, sign, rk_dt)?;
            f.eval(trace.foot).map_err(|source| OracleError::Eval {
                x: trace.foot,
                t: 0.0,
                source,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(WaveField::new(*grid, t, values).expect("one value per grid point"))
}

/// First time at which characteristics of `zeta(u)` cross.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShockReport {
    /// `+inf` when no characteristics converge.
    pub shock_time: f64,
    /// Grid point of steepest convergence.
    pub location_hint: f64,
}

fn require_state_only(speed: &VelocityExpr) -> Result<(), OracleError> {
    if speed.depends_on(Var::X) || speed.depends_on(Var::T) {
        Err(OracleError::NotStateOnly)
    } else {
        Ok(())
    }
}

fn characteristic_speed(f: &InitialCondition, speed: &VelocityExpr, s: f64, x: f64) -> Result<f64, OracleError> {
    let wrap = |source| OracleError::Eval { x, t: 0.0, source };
    let u = f.eval(x).map_err(wrap)?;
    Ok(s * speed.eval(x, 0.0, u).map_err(wrap)?)
}

/// Breaking time `-1 / min_i D_i`, with `D_i` the centered difference of
/// `s * speed(f(x))` at interior grid points.
pub fn detect_shock(
    f: &InitialCondition,
    speed: &VelocityExpr,
    grid: &Grid1D,
    sign: SignConvention,
) -> Result<ShockReport, OracleError> {
    require_state_only(speed)?;
    let s = sign.factor();
    let w = grid
        .points()
        .map(|x| characteristic_speed(f, speed, s, x))
        .collect::<Result<Vec<_>, _>>()?;
    let two_dx = 2.0 * grid.dx();
    let (i_min, d_min) = (1..grid.nx())
        .map(|i| (i, (w[i + 1] - w[i - 1]) / two_dx))
        .fold((1, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    let shock_time = if d_min < 0.0 { -1.0 / d_min } else { f64::INFINITY };
    Ok(ShockReport {
        shock_time,
        location_hint: grid.x(i_min),
    })
}

/// Value at `(x, t)` of the solution transported with state-dependent speed,
/// found by bracketing and bisecting `x0 + s * speed(f(x0)) * t = x`.
pub fn implicit_state_solution(
    f: &InitialCondition,
    speed: &VelocityExpr,
    x: f64,
    t: f64,
    sign: SignConvention,
    shock: &ShockReport,
) -> Result<f64, OracleError> {
    require_state_only(speed)?;
    if t >= shock.shock_time {
        return Err(OracleError::PostShock {
            t,
            shock_time: shock.shock_time,
        });
    }
    let wrap = |source| OracleError::Eval { x, t, source };
    if t == 0.0 {
        return f.eval(x).map_err(wrap);
    }
    let s = sign.factor();
    let residual = |x0: f64| -> Result<f64, OracleError> { Ok(x0 + characteristic_speed(f, speed, s, x0)? * t - x) };

    let guess = x - characteristic_speed(f, speed, s, x)? * t;
    let mut width = 1.0 + (guess - x).abs();
    let (mut lo, mut hi);
    let mut attempts = 0;
    loop {
        lo = guess - width;
        hi = guess + width;
        if residual(lo)? <= 0.0 && residual(hi)? >= 0.0 {
            break;
        }
        attempts += 1;
        if attempts > 60 || !width.is_finite() {
            return Err(OracleError::NoBracket { x, t });
        }
        width *= 2.0;
    }

    while hi - lo > 1e-12 {
        let mid = lo + (hi - lo) / 2.0;
        if mid <= lo || mid >= hi {
            break;
        }
        if residual(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    f.eval(lo + (hi - lo) / 2.0).map_err(wrap)
}
