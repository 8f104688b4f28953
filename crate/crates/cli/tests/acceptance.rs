//! Acceptance suite: one PASS/FAIL line per criterion, then a single verdict.
//!
//! Run with `cargo test -p advect-cli --test acceptance -- --nocapture` to see
//! the report.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use advect_core::analysis::relative_error;
use advect_core::{
    amplification_factor, build_grid, compare, convergence_order, detect_shock, empirical_growth, eval_traveling,
    implicit_state_solution, oracle_field, run_exact, step, total_variation, BoundaryPolicy, Grid1D, InitialCondition,
    RunConfig, SchemeId, SignConvention, StepContext, TravelingWave, VelocityExpr, WaveField,
};
use rand::rngs::StdRng;
use rand::{RngExt as _, SeedableRng};

/// Final TV of the centered replica on the sin(x^2) problem over its initial TV
/// (the run diverges at step 4148; the ratio is taken at the last finite row).
const GOLDEN_TP1_TV_FACTOR: f64 = 1_095_350_218.249_963_5;
/// Step at which the centered replica passes the blow-up threshold.
const GOLDEN_TP1_BLOW_UP_STEP: usize = 4148;
/// Centered replica TV at the last snapshot both replicas reach (step 4100).
const GOLDEN_TP1_TV_AT_COMMON: f64 = 58_376_253_395.102_33;
/// Agreement required of the pinned values; the centered run amplifies
/// rounding, so allow for a different libm.
const GOLDEN_RTOL: f64 = 1e-6;

const TIME_LIMIT: Duration = Duration::from_secs(60);
const TRIALS: usize = 200;

type Outcome = Result<String, String>;
type Law = (&'static str, fn(f64, f64) -> f64);
type Profile = (&'static str, fn(f64) -> f64);
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn load(name: &str) -> RunConfig {
    fs::read_to_string(config_path(name)).unwrap().parse().unwrap()
}

fn advect(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_advect"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn exact_linear_propagation() -> Outcome {
    let mut worst = 0.0f64;
    for sign in [SignConvention::Standard, SignConvention::PaperFaithful] {
        let mut cfg = load("linear_exact.cfg");
        cfg.sign = sign;
        let result = run_exact(&cfg).map_err(|e| e.to_string())?;
        ensure!(result.snapshots.last().unwrap().time() == 10.0, "did not reach t = 10");
        for f in &result.snapshots {
            for (x, v) in f.grid().points().zip(f.values()) {
                worst = worst.max((v - (x - sign.factor() * f.time()).sin()).abs());
            }
        }
    }
    ensure!(worst <= 1e-12, "max deviation {worst:e}");
    Ok(format!("max deviation {worst:.1e} over both conventions"))
}

fn oracle_cross_validation() -> Outcome {
    let grid = build_grid(0.0, 4.0 * PI, 100).unwrap();
    let sine = InitialCondition::parse("sin(x)").unwrap();
    let mut worst = 0.0f64;
    for c0 in [-2.0, -0.5, 1.0, 3.0] {
        for t in [0.5, 3.0, 10.0] {
            for sign in [SignConvention::Standard, SignConvention::PaperFaithful] {
                let traced = oracle_field(&grid, t, &sine, &VelocityExpr::constant(c0), sign, 0.01).unwrap();
                let wave = TravelingWave::single(sine.clone(), c0);
                for (x, v) in grid.points().zip(traced.values()) {
                    worst = worst.max((v - eval_traveling(&wave, x, t, sign).unwrap()).abs());
                }
            }
        }
    }
    ensure!(worst <= 1e-10, "translation mismatch {worst:e}");

    let f = InitialCondition::parse("sin(x^2)").unwrap();
    let zeta = VelocityExpr::parse("x + t").unwrap();
    let at = |h: f64| {
        oracle_field(&grid, 1.0, &f, &zeta, SignConvention::PaperFaithful, h)
            .unwrap()
            .into_values()
    };
    let (a, b, c) = (at(0.1), at(0.05), at(0.025));
    let gap = |p: &[f64], q: &[f64]| p.iter().zip(q).fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
    let ratio = gap(&a, &b) / gap(&b, &c);
    ensure!((12.0..=20.0).contains(&ratio), "RK4 self-convergence ratio {ratio}");
    Ok(format!("translation error {worst:.1e}, RK4 ratio {ratio:.2}"))
}

fn von_neumann_agreement() -> Outcome {
    let mut worst = (0.0f64, String::new());
    let mut cases = 0;
    for scheme in SchemeId::ALL {
        for nu in [0.25, 0.5, 0.9, 1.0, 1.1] {
            for theta in [PI / 8.0, PI / 4.0, PI / 2.0, PI] {
                let sign = SignConvention::Standard;
                let analytic = amplification_factor(scheme, nu, theta, sign).magnitude();
                let measured = empirical_growth(scheme, nu, theta, 100, 64, sign).map_err(|e| e.to_string())?;
                let err = relative_error(measured.growth, analytic);
                if err > worst.0 {
                    worst = (err, format!("{scheme} nu={nu} theta={theta:.4}"));
                }
                cases += 1;
            }
        }
    }
    ensure!(worst.0 <= 0.02, "{}: relative error {:.3}", worst.1, worst.0);
    Ok(format!(
        "{cases} cases, worst relative error {:.1e} ({})",
        worst.0, worst.1
    ))
}

fn centered_replica_degrades() -> Outcome {
    let tp1 = load("ftcs_sin_x2.cfg");
    let tp2 = load("forward_sin_x2.cfg");
    let cmp = compare(&tp1, &tp2).map_err(|e| e.to_string())?;
    let last = cmp.final_row().ok_or("no common snapshot")?;
    ensure!(
        last.tv_a > last.tv_b,
        "tp1 TV {} not above tp2 TV {} at step {}",
        last.tv_a,
        last.tv_b,
        last.step
    );
    ensure!(
        relative_error(last.tv_a, GOLDEN_TP1_TV_AT_COMMON) <= GOLDEN_RTOL,
        "tp1 TV at step {} is {}, pinned {}",
        last.step,
        last.tv_a,
        GOLDEN_TP1_TV_AT_COMMON
    );

    let records = &cmp.a.manifest.snapshots;
    let factor = records.last().unwrap().tv / records[0].tv;
    let blow_up_step = records.last().unwrap().step;
    ensure!(
        blow_up_step == GOLDEN_TP1_BLOW_UP_STEP,
        "tp1 stopped at step {blow_up_step}"
    );
    ensure!(
        relative_error(factor, GOLDEN_TP1_TV_FACTOR) <= GOLDEN_RTOL,
        "tp1 TV factor {factor}, pinned {GOLDEN_TP1_TV_FACTOR}"
    );
    ensure!(!cmp.b.manifest.blown_up, "tp2 replica blew up");
    Ok(format!(
        "at step {}: tv(tp1) = {:.3e} > tv(tp2) = {:.1e}; tp1 TV grew {:.4e}x before diverging at step {}",
        last.step, last.tv_a, last.tv_b, factor, blow_up_step
    ))
}

fn cfl_blow_up() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let read_manifest = |sub: &str| -> serde_json::Value {
        serde_json::from_str(&fs::read_to_string(dir.path().join(sub).join("manifest.json")).unwrap()).unwrap()
    };

    let long = config_path("cos_t2_long.cfg");
    let out = advect(&[
        "run",
        long.to_str().unwrap(),
        "--out",
        dir.path().join("long").to_str().unwrap(),
    ]);
    ensure!(
        out.status.code() == Some(2),
        "t_end = 100 exit code {:?}",
        out.status.code()
    );
    let m = read_manifest("long");
    let nu_max = m["nu_max"].as_f64().unwrap();
    let reached = m["final_time_reached"].as_f64().unwrap();
    ensure!(m["blown_up"] == true, "t_end = 100 did not blow up");
    ensure!(nu_max > 1000.0, "nu_max {nu_max}");
    ensure!(reached < 100.0, "final time {reached}");

    let short = config_path("cos_t2_short.cfg");
    let out = advect(&[
        "run",
        short.to_str().unwrap(),
        "--out",
        dir.path().join("short").to_str().unwrap(),
    ]);
    ensure!(
        out.status.code() == Some(0),
        "t_end = 15 exit code {:?}",
        out.status.code()
    );
    ensure!(read_manifest("short")["blown_up"] == false, "t_end = 15 blew up");
    Ok(format!(
        "t_end=100: nu_max {nu_max:.1}, blew up at t = {reached}, exit 2; t_end=15 completes"
    ))
}

fn convergence_orders() -> Outcome {
    let mut report = Vec::new();
    for (name, expected) in [("upwind_sine.cfg", 1.0), ("lax_wendroff_sine.cfg", 2.0)] {
        let cfg = load(name);
        let dx = (cfg.b - cfg.a) / cfg.nx as f64;
        let nu = (cfg.t_end / cfg.nt as f64) / dx;
        ensure!((nu - 0.5).abs() < 1e-12, "{name}: Courant number {nu}");
        let study = convergence_order(&cfg, 4).map_err(|e| e.to_string())?;
        let order = study.order.ok_or(format!("{name}: errors below noise floor"))?;
        ensure!((order - expected).abs() <= 0.25, "{name}: order {order}");
        report.push(format!("{} {order:.3}", cfg.method.token()));
    }
    Ok(report.join(", "))
}

fn random_row(rng: &mut StdRng, nx: usize, periodic: bool) -> Vec<f64> {
    let mut v: Vec<f64> = (0..=nx).map(|_| rng.random_range(-10.0..10.0)).collect();
    if periodic {
        v[nx] = v[0];
    }
    v
}

fn unit_step(values: &[f64], prev: &[f64], nu: f64, scheme: SchemeId, boundary: BoundaryPolicy) -> Vec<f64> {
    let grid = Grid1D::new(0.0, (values.len() - 1) as f64, values.len() - 1).unwrap();
    let zeta = VelocityExpr::constant(nu);
    let current = WaveField::new(grid, 0.0, values.to_vec()).unwrap();
    let previous = WaveField::new(grid, 0.0, prev.to_vec()).unwrap();
    let ctx = StepContext {
        zeta: &zeta,
        sign: SignConvention::Standard,
        boundary,
        dt: 1.0,
        previous: Some(&previous),
    };
    step(&current, &ctx, scheme).unwrap().into_values()
}

fn scheme_algebra() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let boundaries = [
        BoundaryPolicy::CopyNeighbor,
        BoundaryPolicy::DegenerateStencil,
        BoundaryPolicy::Periodic,
    ];
    let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for trial in 0..TRIALS {
        let nx = rng.random_range(3..64);
        let nu = rng.random_range(0.0..1.0);
        let boundary = boundaries[trial % 3];
        for scheme in SchemeId::ALL {
            let c = rng.random_range(-100.0..100.0);
            let flat = vec![c; nx + 1];
            let next = unit_step(&flat, &flat, nu, scheme, boundary);
            ensure!(
                next.iter().all(|v| v.to_bits() == f64::to_bits(c)),
                "{scheme}: constant row moved"
            );

            let (u, v, w) = (
                random_row(&mut rng, nx, false),
                random_row(&mut rng, nx, false),
                random_row(&mut rng, nx, false),
            );
            let (a, b) = (rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0));
            let mix = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(x, y)| a * x + b * y).collect::<Vec<_>>();
            let lhs = unit_step(&mix(&u, &v), &mix(&w, &u), nu, scheme, boundary);
            let rhs = mix(
                &unit_step(&u, &w, nu, scheme, boundary),
                &unit_step(&v, &u, nu, scheme, boundary),
            );
            let tol = 8.0 * f64::EPSILON * (a.abs() + b.abs()) * 10.0;
            ensure!(
                lhs.iter().zip(&rhs).all(|(l, r)| (l - r).abs() <= tol),
                "{scheme}: not linear within 8 ulp"
            );

            let p = random_row(&mut rng, nx, true);
            let next = unit_step(&p, &p, nu, scheme, BoundaryPolicy::Periodic);
            let mass = |r: &[f64]| r[..nx].iter().sum::<f64>();
            ensure!(
                (mass(&next) - mass(&p)).abs() <= 1e-12 * nx as f64 * max_abs(&p),
                "{scheme}: mass drifted"
            );
        }
        for scheme in [SchemeId::Upwind, SchemeId::LaxWendroff] {
            let p = random_row(&mut rng, nx, true);
            let next = unit_step(&p, &p, 1.0, scheme, BoundaryPolicy::Periodic);
            ensure!(
                (0..nx).all(|i| next[i].to_bits() == p[(i + nx - 1) % nx].to_bits()),
                "{scheme}: not a shift"
            );
        }
        let p = random_row(&mut rng, nx, boundary == BoundaryPolicy::Periodic);
        let next = unit_step(&p, &p, nu, SchemeId::Upwind, boundary);
        ensure!(
            total_variation(&next) <= total_variation(&p) * (1.0 + 1e-12),
            "upwind TV increased"
        );
    }
    Ok(format!("{TRIALS} randomized trials per property"))
}

fn shock_detection() -> Outcome {
    let grid = build_grid(-1.0, 1.0, 1000).unwrap();
    let f = InitialCondition::parse("-x").unwrap();
    let speed = VelocityExpr::parse("u").unwrap();
    let shock = detect_shock(&f, &speed, &grid, SignConvention::Standard).map_err(|e| e.to_string())?;
    ensure!((shock.shock_time - 1.0).abs() <= 1e-3, "t* = {}", shock.shock_time);
    let mut rng = StdRng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let x = rng.random_range(-1.0..1.0);
        let t = rng.random_range(0.0..0.99);
        let v =
            implicit_state_solution(&f, &speed, x, t, SignConvention::Standard, &shock).map_err(|e| e.to_string())?;
        worst = worst.max((v + x / (1.0 - t)).abs());
    }
    ensure!(worst <= 1e-9, "implicit solution error {worst:e}");
    Ok(format!("t* = {}, implicit error {worst:.1e}", shock.shock_time))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_path("forward_sin_x2.cfg");
    let outs: Vec<PathBuf> = ["first", "second"].iter().map(|d| dir.path().join(d)).collect();
    for out in &outs {
        let status = advect(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).status;
        ensure!(status.code() == Some(0), "run exited with {:?}", status.code());
    }
    let mut names: Vec<_> = fs::read_dir(&outs[0])
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    for name in &names {
        let (a, b) = (
            fs::read(outs[0].join(name)).unwrap(),
            fs::read(outs[1].join(name)).unwrap(),
        );
        ensure!(a == b, "{} differs", name.to_string_lossy());
    }
    let second = fs::read_dir(&outs[1]).unwrap().count();
    ensure!(second == names.len(), "file sets differ");
    Ok(format!("{} files byte-identical", names.len()))
}

fn parser_suite() -> Outcome {
    let laws: [Law; 6] = [
        ("1", |_, _| 1.0),
        ("x + t", |x, t| x + t),
        ("t^2", |_, t| t * t),
        ("x^2", |x, _| x * x),
        ("x^2 + t^2", |x, t| x * x + t * t),
        ("x", |x, _| x),
    ];
    let profiles: [Profile; 4] = [
        ("sin(x)", f64::sin),
        ("sin(x^2)", |x| (x * x).sin()),
        ("cos(x)", f64::cos),
        ("exp(x)", f64::exp),
    ];
    let mut rng = StdRng::seed_from_u64(3);
    for (src, direct) in laws {
        let e = VelocityExpr::parse(src).map_err(|e| e.to_string())?;
        let again = VelocityExpr::parse(&e.to_string()).map_err(|e| e.to_string())?;
        ensure!(again == e, "{src} did not round-trip");
        for _ in 0..100 {
            let (x, t) = (rng.random_range(-4.0 * PI..4.0 * PI), rng.random_range(0.0..100.0));
            ensure!(again.eval(x, t, 0.0) == Ok(direct(x, t)), "{src} at ({x}, {t})");
        }
    }
    for (src, direct) in profiles {
        let f = InitialCondition::parse(src).map_err(|e| e.to_string())?;
        let again = InitialCondition::parse(&f.expr().to_string()).map_err(|e| e.to_string())?;
        ensure!(again == f, "{src} did not round-trip");
        for _ in 0..100 {
            let x = rng.random_range(-PI / 2.0..4.0 * PI);
            ensure!(again.eval(x) == Ok(direct(x)), "{src} at {x}");
        }
    }
    Ok("6 laws and 4 profiles, 100 points each".to_string())
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 10] = [
        ("exact linear propagation", exact_linear_propagation),
        ("oracle cross-validation", oracle_cross_validation),
        ("von Neumann agreement", von_neumann_agreement),
        (
            "centered replica degrades, forward replica stays healthy",
            centered_replica_degrades,
        ),
        ("CFL blow-up replication", cfl_blow_up),
        ("convergence orders", convergence_orders),
        ("scheme algebra", scheme_algebra),
        ("shock detection", shock_detection),
        ("determinism", determinism),
        ("parser suite", parser_suite),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut outcome = check();
        let elapsed = start.elapsed();
        if outcome.is_ok() && elapsed > TIME_LIMIT {
            outcome = Err(format!("took {elapsed:.1?}"));
        }
        match &outcome {
            Ok(detail) => println!("criterion {:>2}: PASS  {name} ({detail}; {elapsed:.1?})", i + 1),
            Err(why) => {
                println!("criterion {:>2}: FAIL  {name} ({why}; {elapsed:.1?})", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
