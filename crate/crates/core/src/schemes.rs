//! Explicit one-step updates for `phi_t + s * zeta * phi_x = 0`.
//!
//! Every stepper evaluates a local Courant number `nu_i = zeta(x_i, t, phi_i) * dt / dx`
//! per point and feeds the signed value `c_i = s * nu_i` to a pointwise kernel in
//! [`stencil`]. `s` is fixed by the [`SignConvention`].

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::domain::WaveField;
use crate::expr::{EvalError, VelocityExpr};

/// Which way the velocity term enters the equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SignConvention {
    /// `phi_t - zeta * phi_x = 0`: the update written as
    /// `new = old + dt * zeta * D_x phi`. Transport velocity is `-zeta`.
    PaperFaithful,
    /// `phi_t + zeta * phi_x = 0`. Transport velocity is `+zeta`.
    Standard,
}

impl SignConvention {
    /// `+1` for [`Standard`](Self::Standard), `-1` for [`PaperFaithful`](Self::PaperFaithful).
    pub fn factor(self) -> f64 {
        match self {
            SignConvention::PaperFaithful => -1.0,
            SignConvention::Standard => 1.0,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            SignConvention::PaperFaithful => "paper",
            SignConvention::Standard => "standard",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SchemeId {
    /// Forward time, centered space. Three-point update of the original code.
    FtcsCentered,
    /// Two-point forward difference of the original code.
    ForwardBiased,
    Upwind,
    LaxFriedrichs,
    LaxWendroff,
    /// Two-level centered scheme; needs the previous time level.
    Leapfrog,
}

impl SchemeId {
    pub const ALL: [SchemeId; 6] = [
        SchemeId::FtcsCentered,
        SchemeId::ForwardBiased,
        SchemeId::Upwind,
        SchemeId::LaxFriedrichs,
        SchemeId::LaxWendroff,
        SchemeId::Leapfrog,
    ];

    pub fn token(self) -> &'static str {
        match self {
            SchemeId::FtcsCentered => "ftcs",
            SchemeId::ForwardBiased => "forward",
            SchemeId::Upwind => "upwind",
            SchemeId::LaxFriedrichs => "lax_friedrichs",
            SchemeId::LaxWendroff => "lax_wendroff",
            SchemeId::Leapfrog => "leapfrog",
        }
    }
}

/// How endpoint values are produced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundaryPolicy {
    /// Endpoint takes the freshly updated value of its neighbour.
    CopyNeighbor,
    /// Endpoints are updated by the stencil with the missing neighbour
    /// replaced by the endpoint itself.
    DegenerateStencil,
    /// Point `nx` is identified with point 0.
    Periodic,
    Fixed {
        left: f64,
        right: f64,
    },
}

impl BoundaryPolicy {
    pub fn token(&self) -> String {
        match self {
            BoundaryPolicy::CopyNeighbor => "copy".to_string(),
            BoundaryPolicy::DegenerateStencil => "one_sided".to_string(),
            BoundaryPolicy::Periodic => "periodic".to_string(),
            BoundaryPolicy::Fixed { left, right } => format!("fixed:{left},{right}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("unknown {kind} token '{token}'")]
pub struct TokenError {
    pub kind: &'static str,
    pub token: String,
}

impl FromStr for SignConvention {
    type Err = TokenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(SignConvention::PaperFaithful),
            "standard" => Ok(SignConvention::Standard),
            _ => Err(TokenError {
                kind: "sign",
                token: s.to_string(),
            }),
        }
    }
}

impl FromStr for SchemeId {
    type Err = TokenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SchemeId::ALL
            .into_iter()
            .find(|id| id.token() == s)
            .ok_or_else(|| TokenError {
                kind: "scheme",
                token: s.to_string(),
            })
    }
}

impl FromStr for BoundaryPolicy {
    type Err = TokenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || TokenError {
            kind: "boundary",
            token: s.to_string(),
        };
        match s {
            "copy" => Ok(BoundaryPolicy::CopyNeighbor),
            "one_sided" => Ok(BoundaryPolicy::DegenerateStencil),
            "periodic" => Ok(BoundaryPolicy::Periodic),
            _ => {
                let rest = s.strip_prefix("fixed:").ok_or_else(err)?;
                let (l, r) = rest.split_once(',').ok_or_else(err)?;
                let left: f64 = l.trim().parse().map_err(|_| err())?;
                let right: f64 = r.trim().parse().map_err(|_| err())?;
                if !(left.is_finite() && right.is_finite()) {
                    return Err(err());
                }
                Ok(BoundaryPolicy::Fixed { left, right })
            }
        }
    }
}

impl fmt::Display for SignConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl fmt::Display for BoundaryPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.token())
    }
}

/// Everything a step needs besides the field itself.
#[derive(Clone, Copy, Debug)]
pub struct StepContext<'a> {
    pub zeta: &'a VelocityExpr,
    pub sign: SignConvention,
    pub boundary: BoundaryPolicy,
    pub dt: f64,
    /// Level `t - dt`; required by [`SchemeId::Leapfrog`] only.
    pub previous: Option<&'a WaveField>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    #[error("leapfrog needs the previous time level")]
    MissingPreviousLevel,
    #[error("previous level does not match the field being advanced")]
    PreviousLevelMismatch,
    #[error("cannot advance a blown-up field")]
    BlownUp,
    #[error("velocity evaluation failed at x = {x}, t = {t}: {source}")]
    Eval { x: f64, t: f64, source: EvalError },
}

/// Pointwise update kernels. `c` is the signed Courant number `s * nu`;
/// `left`, `center`, `right` are `phi_{i-1}`, `phi_i`, `phi_{i+1}`.
///
/// One-sided and second-order kernels are written relative to the nearest
/// upstream point once `|c| >= 1/2`, so that `|c| = 1` collapses to an exact
/// copy and constant data stays an exact fixed point.
pub mod stencil {
    pub fn ftcs_centered(left: f64, center: f64, right: f64, c: f64) -> f64 {
        center - c * (right - left) / 2.0
    }

    pub fn forward_biased(center: f64, right: f64, c: f64) -> f64 {
        if c <= -0.5 {
            right - (1.0 + c) * (right - center)
        } else {
            center - c * (right - center)
        }
    }

    /// Backward difference for `c > 0`, forward for `c < 0`, identity at `c = 0`.
    pub fn upwind(left: f64, center: f64, right: f64, c: f64) -> f64 {
        if c > 0.0 {
            if c >= 0.5 {
                left + (1.0 - c) * (center - left)
            } else {
                center - c * (center - left)
            }
        } else if c < 0.0 {
            forward_biased(center, right, c)
        } else {
            center
        }
    }

    /// Not the identity at `c = 0`: averages the neighbours.
    pub fn lax_friedrichs(left: f64, _center: f64, right: f64, c: f64) -> f64 {
        (right + left) / 2.0 - c * (right - left) / 2.0
    }

    pub fn lax_wendroff(left: f64, center: f64, right: f64, c: f64) -> f64 {
        let back = c * (1.0 + c) / 2.0;
        let fwd = c * (1.0 - c) / 2.0;
        let d_back = center - left;
        let d_fwd = right - center;
        if c >= 0.5 {
            left + (1.0 - back) * d_back - fwd * d_fwd
        } else if c <= -0.5 {
            right - (1.0 + fwd) * d_fwd - back * d_back
        } else {
            center - back * d_back - fwd * d_fwd
        }
    }

    pub fn leapfrog(previous: f64, left: f64, right: f64, c: f64) -> f64 {
        previous - c * (right - left)
    }
}

/// Fills endpoint values of a row whose interior is already computed.
pub fn apply_boundary(row: &mut [f64], policy: BoundaryPolicy) {
    let last = row.len() - 1;
    match policy {
        BoundaryPolicy::CopyNeighbor => {
            row[0] = row[1];
            row[last] = row[last - 1];
        }
        BoundaryPolicy::Fixed { left, right } => {
            row[0] = left;
            row[last] = right;
        }
        BoundaryPolicy::Periodic => row[last] = row[0],
        BoundaryPolicy::DegenerateStencil => {}
    }
}

/// Advances `field` by `ctx.dt`.
pub fn step(field: &WaveField, ctx: &StepContext<'_>, scheme: SchemeId) -> Result<WaveField, StepError> {
    if field.is_blown_up() {
        return Err(StepError::BlownUp);
    }
    let previous = match (scheme, ctx.previous) {
        (SchemeId::Leapfrog, None) => return Err(StepError::MissingPreviousLevel),
        (SchemeId::Leapfrog, Some(prev)) => {
            if prev.values().len() != field.values().len() {
                return Err(StepError::PreviousLevelMismatch);
            }
            Some(prev.values())
        }
        _ => None,
    };

    let grid = field.grid();
    let nx = grid.nx();
    let t = field.time();
    let phi = field.values();
    let s = ctx.sign.factor();
    let courant = |i: usize| -> Result<f64, StepError> {
        let x = grid.x(i);
        let z = ctx
            .zeta
            .eval(x, t, phi[i])
            .map_err(|source| StepError::Eval { x, t, source })?;
        Ok(s * z * ctx.dt / grid.dx())
    };
    let kernel = |i: usize, l: usize, r: usize, c: f64| -> f64 {
        let (left, center, right) = (phi[l], phi[i], phi[r]);
        match scheme {
            SchemeId::FtcsCentered => stencil::ftcs_centered(left, center, right, c),
            SchemeId::ForwardBiased => stencil::forward_biased(center, right, c),
            SchemeId::Upwind => stencil::upwind(left, center, right, c),
            SchemeId::LaxFriedrichs => stencil::lax_friedrichs(left, center, right, c),
            SchemeId::LaxWendroff => stencil::lax_wendroff(left, center, right, c),
            SchemeId::Leapfrog => stencil::leapfrog(previous.expect("checked above")[i], left, right, c),
        }
    };

    // Points computed from the stencil; the rest come from `apply_boundary`.
    let computed = match ctx.boundary {
        BoundaryPolicy::Periodic => 0..nx,
        BoundaryPolicy::DegenerateStencil => 0..nx + 1,
        BoundaryPolicy::CopyNeighbor | BoundaryPolicy::Fixed { .. } => 1..nx,
    };
    let mut next = vec![0.0; nx + 1];
    for (i, slot) in next.iter_mut().enumerate().take(computed.end).skip(computed.start) {
        let (l, r) = if ctx.boundary == BoundaryPolicy::Periodic {
            ((i + nx - 1) % nx, (i + 1) % nx)
        } else {
            // Clamping only bites at the ends, i.e. for the degenerate stencil.
            (i.saturating_sub(1), (i + 1).min(nx))
        };
        *slot = kernel(i, l, r, courant(i)?);
    }
    apply_boundary(&mut next, ctx.boundary);

    Ok(WaveField::new(*grid, t + ctx.dt, next).expect("row length matches grid"))
}
