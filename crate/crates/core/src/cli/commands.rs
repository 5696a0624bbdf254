use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::{
    exit_code, write_atomic, Args, Command, RunConfig, EXIT_OK, EXIT_SINGULAR, EXIT_VIOLATION,
};
use crate::assembly::{
    assemble, estimate_trace_norm, s_resolvent_apply, sc_form_value, solve_weak, BoundaryCoeff,
    BoundaryCondition, FormOperator, FormSpec, Side,
};
use crate::clifford::Paravector;
use crate::error::{Error, Result};
use crate::fields::{BoxDomain, Geometry, Grid, GridFunction, PolyField};
use crate::operators::{identity_suite, SuiteOptions};
use crate::regions::{
    classify_spherical_geometry, region_sample, RegionKind, RegionParams, RobinCoeffMode,
};

/// Tolerance for the exact a priori bounds.
pub const BOUND_TOLERANCE: f64 = 1e-8;
/// Allowance for the finite-difference application of T in the S-resolvent.
pub const RESOLVENT_SLACK: f64 = 1.05;

pub struct Outcome {
    pub code: i32,
    pub status: &'static str,
    pub report: Value,
    pub message: Option<String>,
}

impl Outcome {
    fn ok(report: Value) -> Outcome {
        Outcome {
            code: EXIT_OK,
            status: "ok",
            report,
            message: None,
        }
    }

    fn checked(report: Value, violated: bool) -> Outcome {
        if violated {
            Outcome {
                code: EXIT_VIOLATION,
                status: "bound_violated",
                report,
                message: Some("error: a certified bound was violated".into()),
            }
        } else {
            Outcome::ok(report)
        }
    }

    fn failed(e: Error) -> Outcome {
        let code = exit_code(&e);
        let (status, report) = match &e {
            Error::Singular { pivot_ratio } => (
                "singular",
                json!({ "pivot_ratio": pivot_ratio, "note": "possible S-spectrum proximity" }),
            ),
            Error::NoConvergence { iterations, last } => (
                "no_convergence",
                json!({ "iterations": iterations, "last": last }),
            ),
            _ => ("invalid_input", Value::Null),
        };
        debug_assert!(code == EXIT_SINGULAR || status == "invalid_input");
        Outcome {
            code,
            status,
            report,
            message: Some(format!("error: {e}")),
        }
    }
}

pub fn dispatch(cmd: &Command, args: &Args, cfg: &mut RunConfig) -> Outcome {
    let result = match cmd {
        Command::Identities(_) => identities(args, cfg),
        Command::Region(_) => region(args, cfg),
        Command::Solve(_) => solve(cfg),
        Command::Coercivity(_) => coercivity(cfg),
        Command::Resolvent(_) => resolvent(cfg),
        Command::TraceNorm(_) => trace_norm(cfg),
    };
    result.unwrap_or_else(Outcome::failed)
}

fn identities(args: &Args, cfg: &mut RunConfig) -> Result<Outcome> {
    let n_list = cfg.list::<usize>("n_list")?.unwrap_or_else(|| {
        cfg.record("n_list", "2,3,4");
        vec![2, 3, 4]
    });
    let trials: usize = cfg.get_or("trials", 200)?;
    let seed: u64 = cfg.get_or("seed", 0)?;
    cfg.record("flip_beta_sign", args.flip_beta_sign);
    let results = identity_suite(
        &n_list,
        trials,
        seed,
        SuiteOptions {
            flip_beta_sign: args.flip_beta_sign,
        },
    )?;
    let results: Vec<_> = if trials == 0 { Vec::new() } else { results };
    let short: Vec<Value> = results
        .iter()
        .filter(|r| r.expect_failure)
        .map(|r| json!({ "n": r.n, "residual": r.max_relative_residual }))
        .collect();
    let violated = results.iter().any(|r| !r.passed);
    Ok(Outcome::checked(
        json!({ "results": results, "short_variant_residuals": short }),
        violated,
    ))
}

fn geometry_of(kind: RegionKind) -> Geometry {
    match kind {
        RegionKind::SphericalDirichlet | RegionKind::SphericalRobin => Geometry::Spherical,
        _ => Geometry::Hyperbolic,
    }
}

/// Box from `lo`/`hi` when both are given.
fn optional_box(cfg: &mut RunConfig, geometry: Geometry) -> Result<Option<BoxDomain>> {
    match (cfg.list::<f64>("lo")?, cfg.list::<f64>("hi")?) {
        (Some(lo), Some(hi)) => Ok(Some(BoxDomain::new(lo, hi, geometry)?)),
        (None, None) => Ok(None),
        _ => Err(Error::Config("lo and hi must be given together".into())),
    }
}

fn require_box(cfg: &mut RunConfig, geometry: Geometry) -> Result<BoxDomain> {
    let dom = optional_box(cfg, geometry)?
        .ok_or_else(|| Error::Config("missing required keys 'lo' and 'hi'".into()))?;
    if let Some(n) = cfg.get::<usize>("n")? {
        if n != dom.n() {
            return Err(Error::Mismatch(format!(
                "n = {n} but the box has {} axes",
                dom.n()
            )));
        }
    }
    Ok(dom)
}

fn grid_for(cfg: &mut RunConfig, dom: BoxDomain) -> Result<Grid> {
    let res: usize = cfg.get_or("res", 32)?;
    Grid::uniform(dom, res)
}

/// `estimate` or `estimate*k` runs the discrete estimator on the given grid.
fn trace_norm_value(cfg: &mut RunConfig, grid: Option<&Grid>) -> Result<Option<f64>> {
    let Some(raw) = cfg.raw("trace_norm").map(str::to_string) else {
        return Ok(None);
    };
    let value = if let Some(rest) = raw.strip_prefix("estimate") {
        let factor = match rest.strip_prefix('*') {
            Some(k) => k
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("trace_norm = '{raw}'")))?,
            None if rest.is_empty() => 1.0,
            None => return Err(Error::Config(format!("trace_norm = '{raw}'"))),
        };
        let grid =
            grid.ok_or_else(|| Error::Config("trace_norm = estimate needs lo, hi and res".into()))?;
        let t = factor * estimate_trace_norm(grid)?;
        cfg.record("trace_norm_value", t);
        t
    } else {
        raw.parse()
            .map_err(|_| Error::Config(format!("cannot parse trace_norm = '{raw}'")))?
    };
    cfg.record("trace_norm", &raw);
    Ok(Some(value))
}

/// `auto` uses the box formula.
fn c_p_value(cfg: &mut RunConfig, dom: Option<&BoxDomain>) -> Result<Option<f64>> {
    let Some(raw) = cfg.raw("c_p").map(str::to_string) else {
        return Ok(None);
    };
    let value = if raw == "auto" {
        let dom = dom.ok_or_else(|| Error::Config("c_p = auto needs lo and hi".into()))?;
        let c = dom.poincare_constant();
        cfg.record("c_p_value", c);
        c
    } else {
        raw.parse()
            .map_err(|_| Error::Config(format!("cannot parse c_p = '{raw}'")))?
    };
    cfg.record("c_p", &raw);
    Ok(Some(value))
}

fn robin_mode(cfg: &mut RunConfig) -> Result<RobinCoeffMode> {
    let raw: String = cfg.get_or("robin_coeff_mode", "proof".to_string())?;
    raw.parse()
}

fn region(args: &Args, cfg: &mut RunConfig) -> Result<Outcome> {
    let kind: RegionKind = cfg.require::<String>("kind")?.parse()?;
    let geometry = geometry_of(kind);
    let dom = optional_box(cfg, geometry)?;
    let (m, big_m) = match (cfg.get::<f64>("m")?, cfg.get::<f64>("M")?) {
        (Some(m), Some(big)) => (m, big),
        (None, None) => {
            let d = dom
                .as_ref()
                .ok_or_else(|| Error::Config("give m and M, or lo and hi".into()))?;
            let (m, big) = d.extrema();
            cfg.record("m", m);
            cfg.record("M", big);
            (m, big)
        }
        _ => return Err(Error::Config("m and M must be given together".into())),
    };
    let n = match (cfg.get::<usize>("n")?, &dom) {
        (Some(n), _) => n,
        (None, Some(d)) => d.n(),
        (None, None) => return Err(Error::Config("missing required key 'n'".into())),
    };
    let grid = match &dom {
        Some(d)
            if cfg
                .raw("trace_norm")
                .is_some_and(|t| t.starts_with("estimate")) =>
        {
            Some(grid_for(cfg, d.clone())?)
        }
        _ => None,
    };
    let params = RegionParams {
        n,
        m,
        big_m,
        b_norm: cfg.get_or("b_norm", 0.0)?,
        trace_norm: trace_norm_value(cfg, grid.as_ref())?,
        c_p: c_p_value(cfg, dom.as_ref())?,
        robin_coeff_mode: robin_mode(cfg)?,
    };
    params.validate()?;
    let s0 = (cfg.get_or("s0_min", -10.0)?, cfg.get_or("s0_max", 10.0)?);
    let s1 = (cfg.get_or("s1_min", 0.0)?, cfg.get_or("s1_max", 20.0)?);
    let res = (
        cfg.get_or("s0_res", 200usize)?,
        cfg.get_or("s1_res", 200usize)?,
    );
    let out = PathBuf::from(cfg.get_or("out", "region.csv".to_string())?);
    let map = region_sample(kind, &params, s0, s1, res)?;
    write_atomic(&out, map.to_csv().as_bytes())?;
    let mut plot = Value::Null;
    if args.emit_plot_script {
        let path = out.with_extension("gp");
        write_atomic(&path, plot_script(&out, kind).as_bytes())?;
        plot = json!(path.display().to_string());
    }
    let range = map.admissible_constant_range();
    let geometry_check = if geometry == Geometry::Spherical {
        let check_res: usize = cfg.get_or("check_res", 400)?;
        serde_json::to_value(classify_spherical_geometry(&params, check_res)?)
            .unwrap_or(Value::Null)
    } else {
        Value::Null
    };
    let report = json!({
        "kind": kind,
        "points": map.verdicts.len(),
        "admissible_fraction": map.admissible_fraction(),
        "constant_min": range.map(|r| r.0),
        "constant_max": range.map(|r| r.1),
        "near_excluded_circle": map.near_excluded_circle.iter().filter(|&&b| b).count(),
        "csv": out.display().to_string(),
        "plot_script": plot,
        "spherical_geometry": geometry_check,
    });
    Ok(Outcome::ok(report))
}

fn plot_script(csv: &std::path::Path, kind: RegionKind) -> String {
    let name = csv
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    format!(
        "# gnuplot script for {kind}\n\
         set datafile separator ','\n\
         set xlabel 's0'\n\
         set ylabel '|s_vec|'\n\
         set title 'admissible points ({kind})'\n\
         set palette defined (0 'white', 1 'navy')\n\
         unset colorbox\n\
         plot '{name}' every ::1 using 1:2:3 with points pt 5 ps 0.4 palette notitle\n\
         pause -1\n"
    )
}

/// Grid, operator and right-hand side shared by `solve`, `coercivity` and `resolvent`.
struct Problem {
    op: FormOperator,
    seed: u64,
}

fn problem(cfg: &mut RunConfig) -> Result<Problem> {
    let geometry: Geometry = cfg.require::<String>("geometry")?.parse()?;
    let bc: BoundaryCondition = cfg.get_or("bc", "dirichlet".to_string())?.parse()?;
    let dom = require_box(cfg, geometry)?;
    let grid = grid_for(cfg, dom.clone())?;
    let n = grid.n();
    let s = Paravector::from_s0_s1(n, cfg.get_or("s0", 0.0)?, cfg.require("s1")?);
    let mut spec = match bc {
        BoundaryCondition::Dirichlet => FormSpec::dirichlet(geometry, s),
        BoundaryCondition::Robin => {
            let b_norm: f64 = cfg.get_or("b_norm", 0.0)?;
            if !(b_norm.is_finite() && b_norm >= 0.0) {
                return Err(Error::InvalidParams(format!("b_norm = {b_norm}")));
            }
            let b: f64 = cfg.get_or("b", -b_norm)?;
            if b.abs() > b_norm {
                return Err(Error::InvalidParams(format!(
                    "|b| = {} exceeds b_norm = {b_norm}",
                    b.abs()
                )));
            }
            let mut spec = FormSpec::robin(geometry, s, BoundaryCoeff::Constant(b));
            spec.trace_norm = trace_norm_value(cfg, Some(&grid))?;
            spec
        }
    };
    if geometry == Geometry::Hyperbolic && bc == BoundaryCondition::Dirichlet {
        spec.c_p = c_p_value(cfg, Some(&dom))?;
    }
    spec.robin_coeff_mode = robin_mode(cfg)?;
    let seed = cfg.get_or("seed", 0u64)?;
    let op = assemble(&grid, &spec)?;
    if let BoundaryCondition::Robin = bc {
        // report the coefficient bound the constants are computed with
        cfg.record(
            "b",
            spec.b.as_ref().map_or(0.0, |b| match b {
                BoundaryCoeff::Constant(v) => *v,
                BoundaryCoeff::PerFace(_) => f64::NAN,
            }),
        );
    }
    Ok(Problem { op, seed })
}

fn rhs(cfg: &mut RunConfig, grid: &Grid, rng: &mut ChaCha8Rng) -> Result<GridFunction> {
    let source: String = cfg.get_or("f", "random".to_string())?;
    match source.as_str() {
        "random" => Ok(GridFunction::random(grid, false, rng)),
        "poly" => {
            let degree: u32 = cfg.get_or("degree", 3)?;
            GridFunction::sample_poly(&PolyField::random(grid.n(), degree, rng), grid)
        }
        path => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read f = {path}: {e}")))?;
            GridFunction::from_csv(grid, &text)
        }
    }
}

fn solve(cfg: &mut RunConfig) -> Result<Outcome> {
    let p = problem(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let f = rhs(cfg, p.op.grid(), &mut rng)?;
    let out = cfg.get::<String>("out")?;
    let (sol, report) = solve_weak(&p.op, &f)?;
    if let Some(path) = &out {
        write_atomic(std::path::Path::new(path), sol.to_csv().as_bytes())?;
    }
    let violated = [report.ratio_l2, report.ratio_d]
        .iter()
        .flatten()
        .any(|r| *r > 1.0 + BOUND_TOLERANCE);
    Ok(Outcome::checked(
        serde_json::to_value(&report).unwrap_or(Value::Null),
        violated,
    ))
}

fn coercivity(cfg: &mut RunConfig) -> Result<Outcome> {
    let p = problem(cfg)?;
    let trials: usize = cfg.get_or("trials", 100)?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let verdict = p.op.verdict().ok();
    let constant = verdict
        .as_ref()
        .filter(|v| v.admissible)
        .map(|v| v.constant);
    let dirichlet = p.op.spec().bc == BoundaryCondition::Dirichlet;
    let mut min_rayleigh = f64::INFINITY;
    for _ in 0..trials {
        let f = GridFunction::random(p.op.grid(), dirichlet, &mut rng);
        let h1 = f.seminorm_d().powi(2) + f.norm_l2().powi(2);
        min_rayleigh = min_rayleigh.min(sc_form_value(&p.op, &f, &f)? / h1);
    }
    let min_slack = constant
        .filter(|_| trials > 0)
        .map(|k| min_rayleigh / k - 1.0);
    let violated = min_slack.is_some_and(|s| s < -BOUND_TOLERANCE);
    let report = json!({
        "s0": p.op.spec().s_point().s0,
        "s1": p.op.spec().s_point().s1,
        "region_kind": p.op.region_kind(),
        "admissible": constant.is_some(),
        "constant": constant,
        "trials": trials,
        "min_rayleigh_quotient": if trials > 0 { Some(min_rayleigh) } else { None },
        "min_slack": min_slack,
    });
    Ok(Outcome::checked(report, violated))
}

fn resolvent(cfg: &mut RunConfig) -> Result<Outcome> {
    let side: Side = cfg.get_or("side", "right".to_string())?.parse()?;
    let p = problem(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let f = rhs(cfg, p.op.grid(), &mut rng)?;
    let out = cfg.get::<String>("out")?;
    let (result, report) = s_resolvent_apply(side, &p.op, &f)?;
    if let Some(path) = &out {
        write_atomic(std::path::Path::new(path), result.to_csv().as_bytes())?;
    }
    let violated = report.ratio.is_some_and(|r| r > RESOLVENT_SLACK);
    Ok(Outcome::checked(
        serde_json::to_value(&report).unwrap_or(Value::Null),
        violated,
    ))
}

fn trace_norm(cfg: &mut RunConfig) -> Result<Outcome> {
    let dom = require_box(cfg, Geometry::Euclidean)?;
    let grid = grid_for(cfg, dom)?;
    let estimate = estimate_trace_norm(&grid)?;
    Ok(Outcome::ok(
        json!({ "estimate": estimate, "nodes": grid.n_nodes() }),
    ))
}
