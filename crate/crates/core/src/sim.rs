//! The time loop: sample, step, watch for divergence, record snapshots and
//! diagnostics.

use thiserror::Error;

use crate::analysis::{self, cfl_number, error_norms};
use crate::config::{ConfigError, Method, Prepared, RunConfig};
use crate::domain::{sample_initial, DomainError, WaveField};
use crate::expr::{DependenceClass, EvalError, Var};
use crate::oracle::{self, OracleError, ShockReport, TravelingWave};
use crate::schemes::{self, SchemeId, StepContext, StepError};

/// A row whose magnitude passes this is considered blown up.
pub const BLOW_UP_THRESHOLD: f64 = 1e10;

/// Samples per axis when bounding the Courant number.
pub const CFL_SAMPLES: usize = 21;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("evaluation failed at x = {x}, t = {t}: {source}")]
    Eval { x: f64, t: f64, source: EvalError },
    #[error(transparent)]
    Step(StepError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl From<StepError> for RunError {
    fn from(e: StepError) -> Self {
        match e {
            StepError::Eval { x, t, source } => RunError::Eval { x, t, source },
            other => RunError::Step(other),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Drift {
    Left,
    Right,
    None,
}

impl Drift {
    pub fn token(self) -> &'static str {
        match self {
            Drift::Left => "left",
            Drift::Right => "right",
            Drift::None => "none",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotRecord {
    pub step: usize,
    pub time: f64,
    pub tv: f64,
    pub l2_vs_oracle: Option<f64>,
    pub linf_vs_oracle: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub config: RunConfig,
    pub nu_max: f64,
    pub snapshots: Vec<SnapshotRecord>,
    pub blown_up: bool,
    pub final_time_reached: f64,
    pub drift_direction: Drift,
}

/// Persisted rows, aligned index-for-index with `manifest.snapshots`.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub snapshots: Vec<WaveField>,
    pub manifest: Manifest,
}

impl RunResult {
    pub fn final_field(&self) -> &WaveField {
        self.snapshots.last().expect("initial row is always recorded")
    }

    pub fn final_record(&self) -> &SnapshotRecord {
        self.manifest.snapshots.last().expect("initial row is always recorded")
    }
}

/// Reference solution matched to the velocity law.
enum Reference {
    Translation(TravelingWave),
    Characteristics { rk_dt: f64 },
    Implicit(ShockReport),
    Unavailable,
}

impl Reference {
    fn select(cfg: &RunConfig, p: &Prepared) -> Result<Self, RunError> {
        let zeta = &p.velocity;
        Ok(match zeta.classify() {
            DependenceClass::Constant => {
                let c0 = zeta
                    .eval(0.0, 0.0, 0.0)
                    .map_err(|source| RunError::Eval { x: 0.0, t: 0.0, source })?;
                Reference::Translation(TravelingWave::single(p.initial.clone(), c0))
            }
            DependenceClass::StateDependent if !zeta.depends_on(Var::X) && !zeta.depends_on(Var::T) => {
                Reference::Implicit(oracle::detect_shock(&p.initial, zeta, &p.grid, cfg.sign)?)
            }
            DependenceClass::StateDependent => Reference::Unavailable,
            _ => Reference::Characteristics {
                rk_dt: p.time.dt() / cfg.rk_dt_divisor as f64,
            },
        })
    }

    fn is_available(&self) -> bool {
        !matches!(self, Reference::Unavailable)
    }

    /// `Ok(None)` when no reference exists at this time (past breaking, an
    /// escaping characteristic, or an overflowing profile).
    fn field(&self, cfg: &RunConfig, p: &Prepared, t: f64) -> Result<Option<WaveField>, RunError> {
        let grid = p.grid;
        let values: Result<Vec<f64>, OracleError> = match self {
            Reference::Unavailable => return Ok(None),
            Reference::Translation(w) => grid
                .points()
                .map(|x| oracle::eval_traveling(w, x, t, cfg.sign).map_err(|source| OracleError::Eval { x, t, source }))
                .collect(),
            Reference::Characteristics { rk_dt } => {
                return match oracle::oracle_field(&grid, t, &p.initial, &p.velocity, cfg.sign, *rk_dt) {
                    Ok(f) => Ok(Some(f)),
                    Err(e) if no_reference(&e) => Ok(None),
                    Err(e) => Err(e.into()),
                }
            }
            Reference::Implicit(shock) => {
                if t >= shock.shock_time {
                    return Ok(None);
                }
                grid.points()
                    .map(|x| oracle::implicit_state_solution(&p.initial, &p.velocity, x, t, cfg.sign, shock))
                    .collect()
            }
        };
        match values {
            Ok(v) => Ok(Some(WaveField::new(grid, t, v)?)),
            Err(e) if no_reference(&e) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }
}

/// Failures that mean "no exact value here" rather than a bad configuration:
/// escaping characteristics, a profile overflowing at the foot point, or a
/// state equation without a root.
fn no_reference(e: &OracleError) -> bool {
    matches!(
        e,
        OracleError::NonFiniteTrajectory { .. }
            | OracleError::NoBracket { .. }
            | OracleError::Eval {
                source: EvalError::NonFinite,
                ..
            }
    )
}

/// True when a reference solution exists for the configuration's velocity law.
pub fn oracle_available(cfg: &RunConfig) -> Result<bool, RunError> {
    let p = cfg.prepare()?;
    Ok(Reference::select(cfg, &p)?.is_available())
}

fn record(
    cfg: &RunConfig,
    p: &Prepared,
    reference: &Reference,
    step: usize,
    field: &WaveField,
) -> Result<SnapshotRecord, RunError> {
    let tv = analysis::total_variation(field.values());
    let (l2, linf) = match reference.field(cfg, p, field.time())? {
        Some(exact) => {
            let r = error_norms(field, &exact).expect("same grid");
            (Some(r.l2), Some(r.linf))
        }
        None => (None, None),
    };
    Ok(SnapshotRecord {
        step,
        time: field.time(),
        tv,
        l2_vs_oracle: l2,
        linf_vs_oracle: linf,
    })
}

/// Energy-weighted centroid, `sum x phi^2 / sum phi^2`.
fn centroid(field: &WaveField) -> Option<f64> {
    let (num, den) = field
        .grid()
        .points()
        .zip(field.values())
        .fold((0.0, 0.0), |(n, d), (x, v)| (n + x * v * v, d + v * v));
    (den > 0.0).then(|| num / den)
}

fn drift(first: &WaveField, last: &WaveField) -> Drift {
    let tol = 1e-9 * (first.grid().b() - first.grid().a());
    match (centroid(first), centroid(last)) {
        (Some(a), Some(b)) if b - a > tol => Drift::Right,
        (Some(a), Some(b)) if a - b > tol => Drift::Left,
        _ => Drift::None,
    }
}

fn courant(cfg: &RunConfig, p: &Prepared, initial: &WaveField) -> Result<f64, RunError> {
    let (lo, hi) = initial.min_max();
    let report = cfl_number(&p.velocity, &p.grid, &p.time, (lo, hi), CFL_SAMPLES).map_err(|source| RunError::Eval {
        x: cfg.a,
        t: 0.0,
        source,
    })?;
    Ok(report.nu_max)
}

fn is_snapshot_step(cfg: &RunConfig, step: usize) -> bool {
    step.is_multiple_of(cfg.snapshot_every) || step == cfg.nt
}

/// Runs the configured scheme (or exact translation) from `t = 0` to `t_end`.
pub fn run(cfg: &RunConfig) -> Result<RunResult, RunError> {
    let scheme = match cfg.method {
        Method::Exact => return run_exact(cfg),
        Method::Scheme(id) => id,
    };
    let p = cfg.prepare()?;
    let reference = Reference::select(cfg, &p)?;
    let mut current = sample_initial(&p.grid, &p.initial)?;
    let nu_max = courant(cfg, &p, &current)?;

    let mut snapshots = vec![current.clone()];
    let mut records = vec![record(cfg, &p, &reference, 0, &current)?];
    let mut previous: Option<WaveField> = None;
    let mut blown_up = false;
    let mut reached = 0;

    for j in 0..cfg.nt {
        let ctx = StepContext {
            zeta: &p.velocity,
            sign: cfg.sign,
            boundary: cfg.boundary,
            dt: p.time.dt(),
            previous: previous.as_ref(),
        };
        let this_step = if scheme == SchemeId::Leapfrog && previous.is_none() {
            SchemeId::Upwind
        } else {
            scheme
        };
        let next = schemes::step(&current, &ctx, this_step)?.retimed(p.time.t(j + 1));
        if !next.all_finite() || next.max_abs() > BLOW_UP_THRESHOLD {
            blown_up = true;
            break;
        }
        reached = j + 1;
        if is_snapshot_step(cfg, reached) {
            records.push(record(cfg, &p, &reference, reached, &next)?);
            snapshots.push(next.clone());
        }
        if scheme == SchemeId::Leapfrog {
            previous = Some(std::mem::replace(&mut current, next));
        } else {
            current = next;
        }
    }

    if blown_up && records.last().map(|r| r.step) != Some(reached) {
        records.push(record(cfg, &p, &reference, reached, &current)?);
        snapshots.push(current.clone());
    }
    if blown_up {
        if let Some(last) = snapshots.last_mut() {
            last.mark_blown_up();
        }
    }

    let manifest = Manifest {
        config: cfg.clone(),
        nu_max,
        drift_direction: drift(&snapshots[0], snapshots.last().expect("non-empty")),
        final_time_reached: snapshots.last().expect("non-empty").time(),
        snapshots: records,
        blown_up,
    };
    Ok(RunResult { snapshots, manifest })
}

/// Exact translation for constant velocity; no stepping error by construction.
pub fn run_exact(cfg: &RunConfig) -> Result<RunResult, RunError> {
    let p = cfg.prepare()?;
    if p.velocity.classify() != DependenceClass::Constant {
        return Err(ConfigError::Invalid("exact translation needs a constant velocity".to_string()).into());
    }
    let reference = Reference::select(cfg, &p)?;
    let Reference::Translation(wave) = &reference else {
        unreachable!("constant velocity")
    };
    let initial = sample_initial(&p.grid, &p.initial)?;
    let nu_max = courant(cfg, &p, &initial)?;

    let mut snapshots = Vec::new();
    let mut records = Vec::new();
    for step in (0..=cfg.nt).filter(|&s| is_snapshot_step(cfg, s)) {
        let t = p.time.t(step);
        let values = p
            .grid
            .points()
            .map(|x| oracle::eval_traveling(wave, x, t, cfg.sign).map_err(|source| RunError::Eval { x, t, source }))
            .collect::<Result<Vec<_>, _>>()?;
        let field = WaveField::new(p.grid, t, values)?;
        records.push(record(cfg, &p, &reference, step, &field)?);
        snapshots.push(field);
    }
    let manifest = Manifest {
        config: cfg.clone(),
        nu_max,
        drift_direction: drift(&snapshots[0], snapshots.last().expect("non-empty")),
        final_time_reached: p.time.t_end(),
        snapshots: records,
        blown_up: false,
    };
    Ok(RunResult { snapshots, manifest })
}

/// Reference solution sampled at the configuration's snapshot steps.
pub fn run_oracle(cfg: &RunConfig) -> Result<RunResult, RunError> {
    let p = cfg.prepare()?;
    let reference = Reference::select(cfg, &p)?;
    if !reference.is_available() {
        return Err(ConfigError::Invalid(
            "no oracle available for a velocity depending on u and on x or t".to_string(),
        )
        .into());
    }
    let initial = sample_initial(&p.grid, &p.initial)?;
    let nu_max = courant(cfg, &p, &initial)?;
    let mut snapshots = Vec::new();
    let mut records = Vec::new();
    for step in (0..=cfg.nt).filter(|&s| is_snapshot_step(cfg, s)) {
        let t = p.time.t(step);
        let Some(field) = reference.field(cfg, &p, t)? else {
            break;
        };
        records.push(SnapshotRecord {
            step,
            time: t,
            tv: analysis::total_variation(field.values()),
            l2_vs_oracle: Some(0.0),
            linf_vs_oracle: Some(0.0),
        });
        snapshots.push(field);
    }
    let last = snapshots.last().expect("t = 0 always has a reference");
    let manifest = Manifest {
        config: cfg.clone(),
        nu_max,
        drift_direction: drift(&snapshots[0], last),
        final_time_reached: last.time(),
        snapshots: records,
        blown_up: false,
    };
    Ok(RunResult { snapshots, manifest })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComparisonRow {
    pub step: usize,
    pub time: f64,
    pub tv_a: f64,
    pub tv_b: f64,
    /// `sqrt(sum (a - b)^2 * dx)`.
    pub l2_diff: f64,
    pub l2_oracle_a: Option<f64>,
    pub l2_oracle_b: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Comparison {
    pub a: RunResult,
    pub b: RunResult,
    /// One row per step persisted by both runs.
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    pub fn final_row(&self) -> Option<&ComparisonRow> {
        self.rows.last()
    }
}

/// Runs two configurations of the same problem and lines up their snapshots.
pub fn compare(cfg_a: &RunConfig, cfg_b: &RunConfig) -> Result<Comparison, RunError> {
    if !cfg_a.same_problem(cfg_b) {
        return Err(
            ConfigError::Invalid("compared runs must share grid, time, initial data and velocity".to_string()).into(),
        );
    }
    let a = run(cfg_a)?;
    let b = run(cfg_b)?;
    let mut rows = Vec::new();
    for (ra, fa) in a.manifest.snapshots.iter().zip(&a.snapshots) {
        let Some(k) = b.manifest.snapshots.iter().position(|rb| rb.step == ra.step) else {
            continue;
        };
        let (rb, fb) = (&b.manifest.snapshots[k], &b.snapshots[k]);
        rows.push(ComparisonRow {
            step: ra.step,
            time: ra.time,
            tv_a: ra.tv,
            tv_b: rb.tv,
            l2_diff: error_norms(fa, fb).expect("same grid").l2,
            l2_oracle_a: ra.l2_vs_oracle,
            l2_oracle_b: rb.l2_vs_oracle,
        });
    }
    Ok(Comparison { a, b, rows })
}
