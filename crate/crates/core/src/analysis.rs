//! Stability and accuracy diagnostics.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::config::RunConfig;
use crate::domain::{Grid1D, TimeGrid, WaveField};
use crate::expr::{EvalError, VelocityExpr};
use crate::schemes::{self, BoundaryPolicy, SchemeId, SignConvention, StepContext};
use crate::sim::{self, RunError};

/// Fields whose discrete L2 norm passes this are treated as diverged.
pub const GROWTH_BLOW_UP_NORM: f64 = 1e10;

/// Errors at or below this level carry no convergence information.
pub const NOISE_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("theta = {theta} is not a multiple of 2*pi/{grid_size}")]
    UnresolvableMode { theta: f64, grid_size: usize },
    #[error("need at least {min} {what}, got {got}")]
    TooFew { what: &'static str, min: usize, got: usize },
    #[error("refinement level with nx = {nx} blew up")]
    UnstableRun { nx: usize },
    #[error("no oracle available for this configuration")]
    NoOracle,
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Run(#[from] RunError),
}

/// Largest Courant number over the run's space-time box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CourantReport {
    pub nu_max: f64,
    /// `(x, t)` of the sample that attained `nu_max`.
    pub attained_at: (f64, f64),
}

impl CourantReport {
    /// True past the classical explicit limit `nu <= 1`.
    pub fn exceeds_unit(&self) -> bool {
        self.nu_max > 1.0
    }
}

pub fn cfl_number(
    zeta: &VelocityExpr,
    grid: &Grid1D,
    time: &TimeGrid,
    u_range: (f64, f64),
    samples: usize,
) -> Result<CourantReport, EvalError> {
    let m = zeta.argmax_abs_on_box((grid.a(), grid.b()), (0.0, time.t_end()), u_range, samples)?;
    Ok(CourantReport {
        nu_max: m.value * time.dt() / grid.dx(),
        attained_at: (m.x, m.t),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmplificationFactor {
    pub scheme: SchemeId,
    pub nu: f64,
    pub theta: f64,
    pub g: Complex64,
}

impl AmplificationFactor {
    pub fn magnitude(&self) -> f64 {
        self.g.norm()
    }
}

/// Per-step multiplier of the mode `exp(i theta j)` for constant `nu`.
///
/// For leapfrog this is the larger-magnitude root of
/// `g^2 + 2 i c sin(theta) g - 1 = 0`.
///
/// Panics if `theta` lies outside `[0, pi]`.
pub fn amplification_factor(scheme: SchemeId, nu: f64, theta: f64, sign: SignConvention) -> AmplificationFactor {
    assert!((0.0..=PI).contains(&theta), "theta must lie in [0, pi]");
    let c = sign.factor() * nu;
    let i = Complex64::i();
    let one = Complex64::new(1.0, 0.0);
    let (sin, cos) = theta.sin_cos();
    let e_plus = Complex64::from_polar(1.0, theta);
    let e_minus = Complex64::from_polar(1.0, -theta);
    let forward = |c: f64| one - c * (e_plus - one);
    let g = match scheme {
        SchemeId::FtcsCentered => one - i * c * sin,
        SchemeId::ForwardBiased => forward(c),
        SchemeId::Upwind if c >= 0.0 => one - c * (one - e_minus),
        SchemeId::Upwind => forward(c),
        SchemeId::LaxFriedrichs => Complex64::new(cos, -c * sin),
        SchemeId::LaxWendroff => one - i * c * sin - c * c * (1.0 - cos),
        SchemeId::Leapfrog => {
            let b = i * c * sin;
            let root = (one + b * b).sqrt();
            let (r1, r2) = (-b + root, -b - root);
            if r1.norm() >= r2.norm() {
                r1
            } else {
                r2
            }
        }
    };
    AmplificationFactor { scheme, nu, theta, g }
}

/// Measured per-step growth of a single Fourier mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthMeasurement {
    /// Geometric mean of the per-step ratio of the mode's Fourier coefficient.
    pub growth: f64,
    pub steps_taken: usize,
    /// The row's L2 norm passed [`GROWTH_BLOW_UP_NORM`]; `growth` covers the
    /// steps before that.
    pub blown_up: bool,
}

/// Runs `steps` periodic steps on the mode `cos(theta j)` with constant
/// velocity chosen so the Courant number is exactly `nu`, and returns the
/// geometric-mean growth of that mode.
///
/// Growth is read off the mode's discrete Fourier coefficient rather than the
/// row norm: rounding seeds every other mode too, and in an unstable scheme a
/// faster-growing one would otherwise swamp the measurement. A mode that
/// decays below [`NOISE_FLOOR`] of its initial size ends the measurement early,
/// just as blow-up does for a growing one.
///
/// Leapfrog's second level is seeded with the dominant discrete mode
/// `Re(g exp(i theta j))`; the measured growth then checks that the stencil
/// sustains it.
pub fn empirical_growth(
    scheme: SchemeId,
    nu: f64,
    theta: f64,
    steps: usize,
    grid_size: usize,
    sign: SignConvention,
) -> Result<GrowthMeasurement, AnalysisError> {
    if steps == 0 {
        return Err(AnalysisError::TooFew {
            what: "steps",
            min: 1,
            got: 0,
        });
    }
    let wavenumber = theta * grid_size as f64 / (2.0 * PI);
    let m = wavenumber.round();
    if (wavenumber - m).abs() > 1e-9 || !(0.0..=PI).contains(&theta) {
        return Err(AnalysisError::UnresolvableMode { theta, grid_size });
    }
    let grid = Grid1D::new(0.0, grid_size as f64, grid_size).map_err(|_| AnalysisError::TooFew {
        what: "grid cells",
        min: 3,
        got: grid_size,
    })?;
    let n = grid_size as u64;
    let m = m as u64;
    let phase = |j: u64| 2.0 * PI * ((m * j) % n) as f64 / n as f64;
    let basis: Vec<Complex64> = (0..n).map(|j| Complex64::from_polar(1.0, -phase(j))).collect();

    let zeta = VelocityExpr::constant(nu);
    let norm = |f: &WaveField| f.values()[..grid_size].iter().map(|v| v * v).sum::<f64>().sqrt();
    let coefficient = |f: &WaveField| {
        f.values()
            .iter()
            .zip(&basis)
            .map(|(v, b)| b * v)
            .sum::<Complex64>()
            .norm()
    };

    let mut current =
        WaveField::new(grid, 0.0, (0..=n).map(|j| phase(j).cos()).collect()).expect("mode fills the grid");
    let mut previous = None;
    if scheme == SchemeId::Leapfrog {
        let g = amplification_factor(scheme, nu, theta, sign).g;
        let seeded = (0..=n).map(|j| (g * Complex64::from_polar(1.0, phase(j))).re).collect();
        let next = WaveField::new(grid, 1.0, seeded).expect("mode fills the grid");
        previous = Some(std::mem::replace(&mut current, next));
    }

    let start = coefficient(&current);
    let mut last = start;
    let mut taken = 0;
    let mut blown_up = false;
    for _ in 0..steps {
        let ctx = StepContext {
            zeta: &zeta,
            sign,
            boundary: BoundaryPolicy::Periodic,
            dt: 1.0,
            previous: previous.as_ref(),
        };
        let next = schemes::step(&current, &ctx, scheme).map_err(RunError::from)?;
        let size = norm(&next);
        if !size.is_finite() || size > GROWTH_BLOW_UP_NORM {
            blown_up = true;
            break;
        }
        last = coefficient(&next);
        taken += 1;
        if last <= start * NOISE_FLOOR {
            // Decayed into rounding; further ratios would measure noise.
            break;
        }
        previous = Some(std::mem::replace(&mut current, next));
    }
    let growth = if taken == 0 {
        f64::NAN
    } else {
        (last / start).powf(1.0 / taken as f64)
    };
    Ok(GrowthMeasurement {
        growth,
        steps_taken: taken,
        blown_up,
    })
}

/// One row of a von Neumann sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilityRow {
    pub scheme: SchemeId,
    pub nu: f64,
    pub theta: f64,
    pub analytic_mag: f64,
    pub empirical_mag: f64,
    pub rel_err: f64,
}

/// Compares analytic and measured growth at `theta = k pi / theta_samples`,
/// `k = 0..=theta_samples`.
pub fn stability_sweep(
    scheme: SchemeId,
    nu: f64,
    theta_samples: usize,
    steps: usize,
    sign: SignConvention,
) -> Result<Vec<StabilityRow>, AnalysisError> {
    if theta_samples == 0 {
        return Err(AnalysisError::TooFew {
            what: "theta samples",
            min: 1,
            got: 0,
        });
    }
    // theta = k pi / K is resolvable on any multiple of 2K cells.
    let grid_size = 2 * theta_samples * 32usize.div_ceil(theta_samples);
    (0..=theta_samples)
        .map(|k| {
            let theta = if k == theta_samples {
                PI
            } else {
                PI * k as f64 / theta_samples as f64
            };
            let analytic_mag = amplification_factor(scheme, nu, theta, sign).magnitude();
            let empirical_mag = empirical_growth(scheme, nu, theta, steps, grid_size, sign)?.growth;
            Ok(StabilityRow {
                scheme,
                nu,
                theta,
                analytic_mag,
                empirical_mag,
                rel_err: relative_error(empirical_mag, analytic_mag),
            })
        })
        .collect()
}

/// Relative difference, falling back to absolute when the reference is at or
/// below [`NOISE_FLOOR`] (a mode the scheme annihilates has `|g|` of order
/// rounding, not exactly zero).
pub fn relative_error(measured: f64, reference: f64) -> f64 {
    let diff = (measured - reference).abs();
    if reference.abs() <= NOISE_FLOOR {
        diff
    } else {
        diff / reference.abs()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorReport {
    /// `sqrt(sum (phi - ref)^2 * dx)`.
    pub l2: f64,
    pub linf: f64,
    /// Total variation of the field itself.
    pub tv: f64,
}

pub fn error_norms(field: &WaveField, reference: &WaveField) -> Result<ErrorReport, AnalysisError> {
    if field.grid() != reference.grid() {
        return Err(AnalysisError::GridMismatch);
    }
    let (sq, linf) = field
        .values()
        .iter()
        .zip(reference.values())
        .fold((0.0, 0.0f64), |(sq, mx), (a, b)| {
            let d = a - b;
            (sq + d * d, mx.max(d.abs()))
        });
    Ok(ErrorReport {
        l2: (sq * field.grid().dx()).sqrt(),
        linf,
        tv: total_variation(field.values()),
    })
}

pub fn total_variation(values: &[f64]) -> f64 {
    values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefinementLevel {
    pub nx: usize,
    pub nt: usize,
    pub dx: f64,
    pub l2: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceStudy {
    pub levels: Vec<RefinementLevel>,
    /// Least-squares slope of `ln l2` against `ln dx`; `None` when every
    /// error sits at or below [`NOISE_FLOOR`].
    pub order: Option<f64>,
}

/// Doubles `nx` and `nt` together `levels - 1` times and fits the observed
/// order of the final-time L2 error against the oracle.
pub fn convergence_order(base: &RunConfig, levels: usize) -> Result<ConvergenceStudy, AnalysisError> {
    if levels < 3 {
        return Err(AnalysisError::TooFew {
            what: "refinement levels",
            min: 3,
            got: levels,
        });
    }
    let mut out = Vec::with_capacity(levels);
    for k in 0..levels {
        let mut cfg = base.clone();
        cfg.nx = base.nx << k;
        cfg.nt = base.nt << k;
        cfg.snapshot_every = cfg.nt;
        let result = sim::run(&cfg)?;
        if result.manifest.blown_up {
            return Err(AnalysisError::UnstableRun { nx: cfg.nx });
        }
        let last = result.manifest.snapshots.last().expect("final row is always recorded");
        let l2 = last.l2_vs_oracle.ok_or(AnalysisError::NoOracle)?;
        let dx = result.snapshots[0].grid().dx();
        out.push(RefinementLevel {
            nx: cfg.nx,
            nt: cfg.nt,
            dx,
            l2,
        });
    }
    let order = if out.iter().all(|l| l.l2 > NOISE_FLOOR) {
        Some(least_squares_slope(
            &out.iter().map(|l| l.dx.ln()).collect::<Vec<_>>(),
            &out.iter().map(|l| l.l2.ln()).collect::<Vec<_>>(),
        ))
    } else {
        None
    };
    Ok(ConvergenceStudy { levels: out, order })
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (num, den) = xs.iter().zip(ys).fold((0.0, 0.0), |(num, den), (x, y)| {
        (num + (x - mx) * (y - my), den + (x - mx) * (x - mx))
    });
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_grid, build_time_grid};

    #[test]
    fn courant_numbers() {
        let g = build_grid(0.0, 4.0 * PI, 100).unwrap();
        let r = cfl_number(
            &VelocityExpr::constant(1.0),
            &g,
            &build_time_grid(15.0, 5000).unwrap(),
            (0.0, 0.0),
            5,
        )
        .unwrap();
        assert!((r.nu_max - 0.003 / g.dx()).abs() < 1e-15);
        assert!((r.nu_max - 0.02387).abs() < 1e-5);
        assert!(!r.exceeds_unit());

        let zeta = VelocityExpr::parse("x + t").unwrap();
        let r = cfl_number(&zeta, &g, &build_time_grid(5.0, 5000).unwrap(), (-1.0, 1.0), 5).unwrap();
        assert!((r.nu_max - 0.1398).abs() < 1e-4);
        assert_eq!(r.attained_at, (g.b(), 5.0));

        let g = build_grid(-PI / 2.0, PI / 2.0, 100).unwrap();
        let zeta = VelocityExpr::parse("t^2").unwrap();
        let r = cfl_number(&zeta, &g, &build_time_grid(100.0, 5000).unwrap(), (-1.0, 1.0), 5).unwrap();
        assert!((r.nu_max - 10000.0 * 0.02 / (PI / 100.0)).abs() < 1e-9);
        assert!((r.nu_max - 6366.0).abs() < 1.0);
        assert!(r.exceeds_unit());
    }

    #[test]
    fn amplification_at_zero_courant() {
        for theta in [0.0, 0.3, PI / 2.0, PI] {
            for scheme in [
                SchemeId::FtcsCentered,
                SchemeId::Upwind,
                SchemeId::LaxWendroff,
                SchemeId::ForwardBiased,
                SchemeId::Leapfrog,
            ] {
                let a = amplification_factor(scheme, 0.0, theta, SignConvention::Standard);
                assert!((a.magnitude() - 1.0).abs() < 1e-15);
            }
            let a = amplification_factor(SchemeId::LaxFriedrichs, 0.0, theta, SignConvention::Standard);
            assert!((a.magnitude() - theta.cos().abs()).abs() < 1e-15);
        }
    }

    #[test]
    fn amplification_examples() {
        let a = amplification_factor(SchemeId::FtcsCentered, 0.5, PI / 2.0, SignConvention::Standard);
        assert!((a.magnitude() - 1.25f64.sqrt()).abs() < 1e-15);
        let a = amplification_factor(SchemeId::Upwind, 0.5, PI / 2.0, SignConvention::Standard);
        assert!((a.magnitude() - 0.5f64.sqrt()).abs() < 1e-15);
        let a = amplification_factor(SchemeId::Upwind, 0.5, PI / 2.0, SignConvention::PaperFaithful);
        assert!((a.magnitude() - 0.5f64.sqrt()).abs() < 1e-15);
        // Leapfrog is neutral inside its stability limit.
        let a = amplification_factor(SchemeId::Leapfrog, 0.9, PI / 2.0, SignConvention::Standard);
        assert!((a.magnitude() - 1.0).abs() < 1e-15);
        let a = amplification_factor(SchemeId::Leapfrog, 1.1, PI / 2.0, SignConvention::Standard);
        assert!((a.magnitude() - (1.1 + 0.21f64.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn growth_examples() {
        for theta in [PI / 4.0, PI / 2.0, PI] {
            let m = empirical_growth(SchemeId::Upwind, 1.0, theta, 50, 16, SignConvention::Standard).unwrap();
            assert!((m.growth - 1.0).abs() < 1e-12);
        }
        let m = empirical_growth(SchemeId::FtcsCentered, 0.5, PI / 2.0, 100, 64, SignConvention::Standard).unwrap();
        assert!(relative_error(m.growth, 1.25f64.sqrt()) < 0.02);
        let m = empirical_growth(SchemeId::Upwind, 1.1, PI, 100, 64, SignConvention::Standard).unwrap();
        assert!(m.growth > 1.0);
    }

    #[test]
    fn growth_reports_blow_up() {
        let m = empirical_growth(SchemeId::ForwardBiased, 1.1, PI, 100, 64, SignConvention::Standard).unwrap();
        assert!(m.blown_up);
        assert!(m.steps_taken < 100);
        assert!(relative_error(m.growth, 3.2) < 1e-9);
    }

    #[test]
    fn growth_rejects_unresolvable_mode() {
        assert!(matches!(
            empirical_growth(SchemeId::Upwind, 0.5, 1.0, 10, 64, SignConvention::Standard),
            Err(AnalysisError::UnresolvableMode { .. })
        ));
    }

    #[test]
    fn norms_and_variation() {
        let g = build_grid(0.0, 3.0, 3).unwrap();
        let f = WaveField::new(g, 0.0, vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        let z = WaveField::new(g, 0.0, vec![0.0; 4]).unwrap();
        assert_eq!(
            error_norms(&f, &z).unwrap(),
            ErrorReport {
                l2: 1.0,
                linf: 1.0,
                tv: 2.0
            }
        );
        let same = error_norms(&f, &f).unwrap();
        assert_eq!((same.l2, same.linf), (0.0, 0.0));

        let other = WaveField::new(build_grid(0.0, 4.0, 3).unwrap(), 0.0, vec![0.0; 4]).unwrap();
        assert!(matches!(error_norms(&f, &other), Err(AnalysisError::GridMismatch)));

        assert_eq!(total_variation(&[3.0; 7]), 0.0);
        assert_eq!(total_variation(&[0.0, 1.0, 0.0]), 2.0);
        assert_eq!(total_variation(&[-2.0, -1.0, 0.5, 4.0]), 6.0);
    }

    #[test]
    fn slope_fit() {
        let xs = [0.0f64, 1.0, 2.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        assert!((least_squares_slope(&xs, &ys) - 2.0).abs() < 1e-15);
    }
}
