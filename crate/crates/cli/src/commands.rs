use std::io::Write;
use std::path::Path;

use shapereg::refmodels::{
    fit_ridge_poly, fit_unconstrained_poly, gpr_fit, LengthscalePolicy, RefModelError, GPR_NOISE,
};
use shapereg::shapeops::{
    eval_grid_constant, monotonic_projection_grid_with, rearrangement_1d, GridFunction,
    ProjectionOptions,
};
use shapereg::sip::{reference_grid_check, FitError, FitOptions};
use shapereg::globalopt::MultistartOptions;
use shapereg::{dataset, fit as fit_model, Dataset, FitStatus, ShapeConstraintSpec, Sign};

use crate::config::{format_constraints, parse_constraints, RunConfig};
use crate::error::CliError;
use crate::formats::{
    self, read_dataset, read_model, read_points, read_source, write_dataset, write_grid,
    write_model, write_table, GridFile, ModelFile, Predictor, ReportSummary, Source,
};
use crate::synth::{self, Scenario, SynthParams};
use crate::{
    EvalGridArgs, FitArgs, FitSettings, Method, PredictArgs, ProjectArgs, RearrangeArgs,
    SweepArgs, SynthArgs,
};

const DEFAULT_LAMBDA: f64 = 1e-3;
const DEFAULT_EVAL_RESOLUTION: usize = 20;

fn say(out: &mut dyn Write, text: std::fmt::Arguments<'_>) -> Result<(), CliError> {
    out.write_fmt(text)
        .and_then(|_| out.write_all(b"\n"))
        .map_err(|e| CliError::io("<stdout>", e))
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => { say($out, format_args!($($arg)*)) };
}

fn fit_error(e: FitError) -> CliError {
    match e {
        FitError::Qp(_) | FitError::GlobalOpt(_) => CliError::Numerical(e.to_string()),
        other => CliError::validation(other),
    }
}

fn ref_error(e: RefModelError) -> CliError {
    match e {
        RefModelError::Factorization | RefModelError::Svd | RefModelError::GlobalOpt(_) => {
            CliError::Numerical(e.to_string())
        }
        other => CliError::validation(other),
    }
}

fn at_least_two(name: &str, value: Option<usize>) -> Result<Option<usize>, CliError> {
    match value {
        Some(v) if v < 2 => Err(CliError::validation(format!("{name} must be at least 2, got {v}"))),
        other => Ok(other),
    }
}

/// Degree, constraint spec and loop options from flags over the config file.
struct Resolved {
    degree: u32,
    spec: ShapeConstraintSpec,
    options: FitOptions,
}

fn resolve(settings: &FitSettings, cfg: &RunConfig, data: &Dataset) -> Result<Resolved, CliError> {
    let degree = settings
        .degree
        .or(cfg.degree)
        .ok_or_else(|| CliError::validation("missing --degree"))?;
    let spec = match settings.constraints.as_ref().or(cfg.constraints.as_ref()) {
        Some(text) => parse_constraints(text)?,
        None => ShapeConstraintSpec::unconstrained(),
    };
    spec.validate_dim(data.dim()).map_err(CliError::validation)?;
    let mut options = FitOptions {
        initial_grid: at_least_two("--init-grid", settings.init_grid.or(cfg.init_grid))?,
        ..FitOptions::default()
    };
    if let Some(r) = at_least_two("--ref-grid", settings.ref_grid.or(cfg.ref_grid))? {
        options.reference_grid = r;
    }
    if let Some(n) = settings.restarts.or(cfg.restarts) {
        if n == 0 {
            return Err(CliError::validation("--restarts must be positive"));
        }
        options.multistart = Some(MultistartOptions {
            restarts: n,
            ..MultistartOptions::for_dim(data.dim())
        });
    }
    if let Some(k) = settings.max_iter.or(cfg.max_iter) {
        options.max_iterations = k;
    }
    if let Some(eps) = settings.epsilon.clone().or_else(|| cfg.epsilon.clone()) {
        if eps.len() != spec.len() {
            return Err(CliError::validation(format!(
                "{} tolerances given for {} constraint entries",
                eps.len(),
                spec.len()
            )));
        }
        if eps.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return Err(CliError::validation("tolerances must be nonnegative numbers"));
        }
        options.epsilon = Some(eps);
    }
    Ok(Resolved {
        degree,
        spec,
        options,
    })
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Constrained => "constrained",
        Method::Poly => "poly",
        Method::Ridge => "ridge",
        Method::Gpr => "gpr",
    }
}

fn parse_method(text: &str) -> Result<Method, CliError> {
    match text {
        "constrained" => Ok(Method::Constrained),
        "poly" => Ok(Method::Poly),
        "ridge" => Ok(Method::Ridge),
        "gpr" => Ok(Method::Gpr),
        other => Err(CliError::validation(format!("unknown method {other:?}"))),
    }
}

fn predictor_rmse(model: &Predictor, data: &Dataset) -> Result<f64, CliError> {
    let pred = data
        .inputs()
        .iter()
        .map(|x| model.predict(x))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(dataset::rmse(&pred, data.targets()))
}

pub fn fit(args: &FitArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = RunConfig::load(args.settings.config.as_deref())?;
    let data = read_dataset(&args.data)?;
    let method = match (args.method, cfg.method.as_deref()) {
        (Some(m), _) => m,
        (None, Some(text)) => parse_method(text)?,
        (None, None) => Method::Constrained,
    };
    let r = resolve(&args.settings, &cfg, &data)?;
    say!(out, "method: {}", method_name(method))?;
    say!(out, "data: {} points, {} inputs", data.len(), data.dim())?;
    say!(out, "constraints: {}", format_constraints(&r.spec))?;

    if method != Method::Constrained {
        let model = match method {
            Method::Poly => Predictor::Polynomial(
                fit_unconstrained_poly(&data, r.degree).map_err(ref_error)?,
            ),
            Method::Ridge => {
                let lambda = args.lambda.or(cfg.lambda).unwrap_or(DEFAULT_LAMBDA);
                say!(out, "lambda: {lambda}")?;
                Predictor::Polynomial(fit_ridge_poly(&data, r.degree, lambda).map_err(ref_error)?)
            }
            _ => Predictor::Gpr(
                gpr_fit(&data, GPR_NOISE, &LengthscalePolicy::MaximizeLikelihood)
                    .map_err(ref_error)?,
            ),
        };
        if let Predictor::Polynomial(m) = &model {
            say!(out, "degree: {} ({} coefficients)", m.degree(), m.coefficients().len())?;
        }
        if let Predictor::Gpr(m) = &model {
            say!(out, "length scales: {:?}", m.kernel().lengthscales)?;
            say!(out, "signal variance: {}", m.kernel().signal_variance)?;
        }
        let rmse = predictor_rmse(&model, &data)?;
        say!(out, "training rmse: {rmse}")?;
        let summary = ReportSummary {
            method: method_name(method).into(),
            status: "unconstrained".into(),
            iterations: 0,
            total_constraints: 0,
            added_points: Vec::new(),
            rmse,
            tolerances: Vec::new(),
        };
        return write_model(&args.out, &ModelFile::new(model, r.spec, summary));
    }

    let outcome = fit_model(&data, &r.spec, r.degree, &r.options).map_err(fit_error)?;
    let report = &outcome.report;
    let tolerances: Vec<f64> = report.tolerances.iter().map(|t| t.raw).collect();
    let violations = reference_grid_check(
        &outcome.model,
        &r.spec,
        &tolerances,
        r.options.reference_grid,
        r.options.execution,
    )
    .map_err(fit_error)?;
    say!(
        out,
        "degree: {} ({} coefficients)",
        r.degree,
        outcome.model.coefficients().len()
    )?;
    match report.status {
        FitStatus::Converged => say!(
            out,
            "status: converged in iteration {} with {} final constraints",
            report.iterations,
            report.total_constraints
        )?,
        FitStatus::MaxIterations => say!(
            out,
            "status: iteration cap reached at iteration {} with {} constraints (including unresolved violators)",
            report.iterations,
            report.total_constraints
        )?,
    }
    say!(out, "adaptive points per entry: {:?}", report.added_points)?;
    say!(out, "tolerances: {tolerances:?}")?;
    say!(
        out,
        "reference-grid violations ({} per input): {}",
        r.options.reference_grid,
        violations.len()
    )?;
    for v in &violations {
        say!(
            out,
            "  {} at {:?}: {}",
            r.spec.entries()[v.entry],
            v.point,
            v.value
        )?;
    }
    say!(out, "training rmse: {}", report.rmse)?;
    let summary = ReportSummary {
        method: method_name(method).into(),
        status: match report.status {
            FitStatus::Converged => "converged".into(),
            FitStatus::MaxIterations => "max-iterations".into(),
        },
        iterations: report.iterations,
        total_constraints: report.total_constraints,
        added_points: report.added_points.clone(),
        rmse: report.rmse,
        tolerances,
    };
    write_model(
        &args.out,
        &ModelFile::new(Predictor::Polynomial(outcome.model), r.spec, summary),
    )?;
    match report.status {
        FitStatus::Converged => Ok(()),
        FitStatus::MaxIterations => Err(CliError::NotConverged {
            iterations: report.iterations,
        }),
    }
}

pub fn predict(args: &PredictArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let file = read_model(&args.model)?;
    let points = read_points(&args.data, file.model.dim())?;
    let rows = points
        .iter()
        .map(|x| file.model.predict(x).map(|y| vec![y]))
        .collect::<Result<Vec<_>, _>>()?;
    let header = vec!["prediction".to_string()];
    match &args.out {
        Some(path) => write_table(path, &header, &rows),
        None => out
            .write_all(&formats::table_bytes(&header, &rows))
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}

fn sample_model(model: &Predictor, resolution: usize) -> Result<GridFunction, CliError> {
    let (lo, hi) = model.raw_bounds();
    let axes = GridFunction::uniform_axes(&lo, &hi, resolution);
    let total: usize = axes.iter().map(Vec::len).product();
    let shell = GridFunction::new(axes, vec![0.0; total]).map_err(CliError::validation)?;
    let values = (0..total)
        .map(|i| model.predict(&shell.point(i)))
        .collect::<Result<Vec<_>, _>>()?;
    GridFunction::new(shell.axes().to_vec(), values).map_err(CliError::validation)
}

fn default_resolution(dim: usize) -> usize {
    if dim == 1 {
        80
    } else {
        40
    }
}

/// Loads a grid directly or samples a model; also returns the model's constraints.
fn load_grid(
    path: &Path,
    resolution: Option<usize>,
) -> Result<(GridFunction, Option<ShapeConstraintSpec>), CliError> {
    match read_source(path)? {
        Source::Grid(g) => Ok((g, None)),
        Source::Model(m) => {
            let res = at_least_two("--resolution", resolution)?
                .unwrap_or_else(|| default_resolution(m.model.dim()));
            Ok((sample_model(&m.model, res)?, Some(m.constraints)))
        }
    }
}

fn grid_rmse(grid: &GridFunction, data: &Dataset) -> Result<f64, CliError> {
    let pred = data
        .inputs()
        .iter()
        .map(|x| eval_grid_constant(grid, x).map_err(CliError::validation))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(dataset::rmse(&pred, data.targets()))
}

pub fn project(args: &ProjectArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = RunConfig::load(args.config.as_deref())?;
    let (grid, stored) = load_grid(&args.model, args.resolution.or(cfg.resolution))?;
    let spec = match (args.constraints.as_ref().or(cfg.constraints.as_ref()), stored) {
        (Some(text), _) => parse_constraints(text)?,
        (None, Some(spec)) => spec,
        (None, None) => {
            return Err(CliError::validation("--constraints is required for grid inputs"))
        }
    };
    spec.validate_dim(grid.dim()).map_err(CliError::validation)?;
    let result = monotonic_projection_grid_with(&grid, &spec, &ProjectionOptions::default())
        .map_err(|e| match e {
            shapereg::shapeops::ShapeOpsError::NotConverged { .. } => {
                CliError::Numerical(e.to_string())
            }
            other => CliError::validation(other),
        })?;
    let shape: Vec<String> = grid.shape().iter().map(|n| n.to_string()).collect();
    say!(out, "grid: {} points ({})", grid.len(), shape.join(" x "))?;
    say!(out, "constraints: {}", format_constraints(&spec))?;
    say!(out, "sweeps: {}", result.sweeps)?;
    say!(out, "kkt residual: {:e}", result.kkt_residual)?;
    say!(out, "min adjacent slack: {:e}", result.grid.min_monotone_slack(&spec))?;
    if let Some(path) = &args.data {
        let data = read_dataset(path)?;
        say!(out, "grid-constant rmse: {}", grid_rmse(&result.grid, &data)?)?;
    }
    write_grid(&args.out, &GridFile::new(result.grid))
}

pub fn rearrange(args: &RearrangeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = RunConfig::load(args.config.as_deref())?;
    let sign = match args.sign.trim() {
        "+1" | "1" | "+" => Sign::Positive,
        "-1" | "-" => Sign::Negative,
        other => return Err(CliError::validation(format!("--sign must be +1 or -1, got {other:?}"))),
    };
    let (grid, _) = load_grid(&args.model, args.resolution.or(cfg.resolution))?;
    if grid.dim() != 1 {
        return Err(CliError::validation(
            "rearrangement is only supported for one input: in several dimensions it does not guarantee monotonicity",
        ));
    }
    let sorted = rearrangement_1d(&grid, sign).map_err(CliError::validation)?;
    say!(out, "grid: {} points", sorted.len())?;
    if let Some(path) = &args.data {
        let data = read_dataset(path)?;
        say!(out, "grid-constant rmse: {}", grid_rmse(&sorted, &data)?)?;
    }
    write_grid(&args.out, &GridFile::new(sorted))
}

pub fn synth(args: &SynthArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = RunConfig::load(args.config.as_deref())?;
    let scenario: Scenario = args
        .scenario
        .as_ref()
        .or(cfg.scenario.as_ref())
        .ok_or_else(|| CliError::validation("missing --scenario"))?
        .parse()?;
    let seed = args
        .seed
        .or(cfg.seed)
        .ok_or_else(|| CliError::validation("missing --seed"))?;
    let params = SynthParams {
        scenario,
        seed,
        size: args.size.or(cfg.size),
        noise: args.noise.or(cfg.noise).unwrap_or(0.0),
        bump: args.bump.or(cfg.bump).unwrap_or(0.0),
    };
    let data = synth::generate(&params)?;
    say!(
        out,
        "{scenario}: {} points, {} inputs, seed {seed}, noise {}, bump {}",
        data.len(),
        data.dim(),
        params.noise,
        params.bump
    )?;
    write_dataset(&args.out, &data)
}

pub fn eval_grid(args: &EvalGridArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = RunConfig::load(args.config.as_deref())?;
    let file = read_model(&args.model)?;
    let res = at_least_two("--resolution", args.resolution.or(cfg.resolution))?
        .unwrap_or(DEFAULT_EVAL_RESOLUTION);
    let spec = match args.constraints.as_ref().or(cfg.constraints.as_ref()) {
        Some(text) => parse_constraints(text)?,
        None => file.constraints.clone(),
    };
    let dim = file.model.dim();
    spec.validate_dim(dim).map_err(CliError::validation)?;
    let poly = match &file.model {
        Predictor::Polynomial(p) => Some(p),
        Predictor::Gpr(_) if spec.is_empty() => None,
        Predictor::Gpr(_) => {
            return Err(CliError::validation(
                "derivative columns are only available for polynomial models",
            ))
        }
    };
    let grid = sample_model(&file.model, res)?;
    let mut header: Vec<String> = (1..=dim).map(|j| format!("x{j}")).collect();
    header.push("prediction".into());
    for e in spec.entries() {
        header.push(format!("d{}_x{}", e.order, e.direction + 1));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for (i, &y) in grid.values().iter().enumerate() {
        let x = grid.point(i);
        let mut row = x.clone();
        row.push(y);
        if let Some(p) = poly {
            for e in spec.entries() {
                row.push(p.derivative(&x, e.direction, e.order).map_err(CliError::validation)?);
            }
        }
        rows.push(row);
    }
    say!(out, "grid: {} points, {} derivative columns", rows.len(), spec.len())?;
    write_table(&args.out, &header, &rows)
}

fn parse_degrees(text: &str) -> Result<Vec<u32>, CliError> {
    let bad = || CliError::validation(format!("bad degree list {text:?}"));
    if let Some((a, b)) = text.split_once("..") {
        let a: u32 = a.trim().parse().map_err(|_| bad())?;
        let b: u32 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    text.split(',')
        .map(|t| t.trim().parse().map_err(|_| bad()))
        .collect()
}

pub fn sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = RunConfig::load(args.settings.config.as_deref())?;
    let data = read_dataset(&args.data)?;
    let degrees = parse_degrees(&args.degrees)?;
    let mut settings = args.settings.clone();
    let mut rows = Vec::new();
    say!(out, "degree,coefficients,status,iterations,constraints,rmse")?;
    for &m in &degrees {
        settings.degree = Some(m);
        let r = resolve(&settings, &cfg, &data)?;
        let o = fit_model(&data, &r.spec, m, &r.options).map_err(fit_error)?;
        let converged = o.report.status == FitStatus::Converged;
        say!(
            out,
            "{m},{},{},{},{},{}",
            o.model.coefficients().len(),
            if converged { "converged" } else { "max-iterations" },
            o.report.iterations,
            o.report.total_constraints,
            o.report.rmse
        )?;
        rows.push(vec![
            m as f64,
            o.model.coefficients().len() as f64,
            if converged { 1.0 } else { 0.0 },
            o.report.iterations as f64,
            o.report.total_constraints as f64,
            o.report.rmse,
        ]);
    }
    if let Some(path) = &args.out {
        let header: Vec<String> = ["degree", "coefficients", "converged", "iterations", "constraints", "rmse"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        write_table(path, &header, &rows)?;
    }
    Ok(())
}
