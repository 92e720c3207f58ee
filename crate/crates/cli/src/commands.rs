use num_complex::Complex64;
use serde::Deserialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ves_core::algebra::{homogeneity_check, StructureSource, StructureSpec};
use ves_core::burgers::{burgers_field, resolve_seed, BurgersOptions, BurgersProvider, BurgersSolution, Seed};
use ves_core::canonical::{
    build_chart, invert_xi, jacobian_check, phi_definition_fd, phi_factored, scan_chart, NewtonOptions,
};
use ves_core::io::{read_complex_csv, write_complex_csv, write_json, write_real_csv};
use ves_core::poincare::{cayley, self_dilatation_residual};
use ves_core::seedlang::{parse_constant, parse_params, Params};
use ves_core::spectral::{lambda_from_structure, rigidity_tolerance, transport_residual, LambdaProvider, SpectralField};
use ves_core::vekua::{
    coefficient_bound_report, reduce, reduced_residual, sample_expression, wirtinger_in_xi, PassengerField,
    PassengerKind, VekuaProblem,
};
use ves_core::verify::{run_suite, Fault, SeedConfig, VerifyConfig};
use ves_core::{ComplexGridField, Error, GridSpec, StencilOrder};

use crate::args::{BurgersArgs, FaultArg, Format, GlobalArgs, InvertArgs, ReduceArgs, SourceArgs, UniformizeArgs, VerifyArgs};
use crate::output::{emit, print_out};

/// Outcome classes, mapped to exit codes 1, 2 and 3.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Check(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NotRigid { .. } => Failure::Check(e.to_string()),
            e if e.is_numerical() => Failure::Numerical(e.to_string()),
            e => Failure::Usage(e.to_string()),
        }
    }
}

impl From<ves_core::seedlang::SeedError> for Failure {
    fn from(e: ves_core::seedlang::SeedError) -> Self {
        Error::from(e).into()
    }
}

pub type CmdResult = Result<(), Failure>;

pub struct Context {
    pub grid: GridSpec,
    pub order: StencilOrder,
    pub tol: f64,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl Context {
    pub fn new(g: &GlobalArgs) -> Result<Self, Failure> {
        let grid = GridSpec::parse(&g.grid)?;
        let order = StencilOrder::try_from(g.order)?;
        if !(g.tol > 0.0) || !g.tol.is_finite() {
            return Err(Failure::Usage(format!("--tol must be positive, got {}", g.tol)));
        }
        if let Some(dir) = &g.out {
            std::fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))?;
        }
        Ok(Self {
            grid,
            order,
            tol: g.tol,
            out: g.out.clone(),
            format: g.format,
        })
    }

    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    fn file(&self, name: &str) -> PathBuf {
        self.out_dir().join(name)
    }

    fn burgers_options(&self, max_iter: usize) -> BurgersOptions {
        BurgersOptions {
            tol: self.tol,
            max_iter,
            ..Default::default()
        }
    }

    /// Prints the report and, with `--out`, saves it as report.json.
    fn finish(&self, report: &Value) -> CmdResult {
        if let Some(dir) = &self.out {
            write_json(&dir.join("report.json"), report)?;
        }
        emit(report, self.format);
        Ok(())
    }
}

fn finite(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn params(text: &str) -> Result<Params, Failure> {
    Ok(parse_params(text)?)
}

pub fn verify(ctx: &Context, args: &VerifyArgs) -> CmdResult {
    let seed = match &args.seed {
        Some(text) => Some(SeedConfig {
            text: text.clone(),
            params: params(&args.params)?,
        }),
        None => None,
    };
    let config = VerifyConfig {
        grid: ctx.grid,
        order: ctx.order,
        deltas: args.deltas.clone(),
        seed,
        fault: args.fault.map(|f| match f {
            FaultArg::CorruptPhiFactorization => Fault::CorruptPhiFactorization,
        }),
        samples: args.samples,
        ..Default::default()
    };
    let report = run_suite(&config)?;
    if let Some(dir) = &ctx.out {
        write_json(&dir.join("report.json"), &report)?;
    }
    match ctx.format {
        Format::Json => print_out(&format!("{}\n", serde_json::to_string_pretty(&report).expect("serializable"))),
        Format::Table => print_out(&report.table()),
    }
    if report.passed {
        Ok(())
    } else {
        let names: Vec<&str> = report.failed().map(|c| c.name.as_str()).collect();
        Err(Failure::Check(format!("failed checks: {}", names.join(", "))))
    }
}

/// The spectral field of a structure or Burgers seed, with the Burgers
/// solution when there is one.
struct Source {
    description: String,
    lambda: SpectralField,
    burgers: Option<BurgersSolution>,
    structure: Option<StructureSource>,
}

fn structure_spec(args: &SourceArgs, name: &str) -> Result<StructureSpec, Failure> {
    let mut map = BTreeMap::new();
    for item in args.params.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("bad parameter binding `{item}`")))?;
        map.insert(k.trim().to_string(), Value::String(v.trim().to_string()));
    }
    if let Some(l) = &args.lambda {
        map.insert("lambda".into(), Value::String(l.clone()));
    }
    Ok(StructureSpec::Named {
        name: name.to_string(),
        params: map,
    })
}

fn load_structure(args: &SourceArgs, text: &str) -> Result<StructureSource, Failure> {
    let path = Path::new(text);
    if text.ends_with(".json") || path.is_file() {
        let raw = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let spec: StructureSpec =
            serde_json::from_str(&raw).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Ok(spec.resolve(base)?)
    } else {
        Ok(structure_spec(args, text)?.resolve(Path::new("."))?)
    }
}

fn load_source(ctx: &Context, args: &SourceArgs) -> Result<Source, Failure> {
    match (&args.structure, &args.seed) {
        (Some(text), None) => {
            let s = load_structure(args, text)?;
            let lambda = lambda_from_structure(&s.sample(&ctx.grid)?)?;
            Ok(Source {
                description: s.description(),
                lambda,
                burgers: None,
                structure: Some(s),
            })
        }
        (None, Some(text)) => {
            let seed = resolve_seed(text, &params(&args.params)?)?;
            let sol = burgers_field(seed.as_ref(), &ctx.grid, &ctx.burgers_options(50))?;
            Ok(Source {
                description: format!("burgers({})", seed.describe()),
                lambda: sol.spectral()?,
                burgers: Some(sol),
                structure: None,
            })
        }
        _ => Err(Failure::Usage("give exactly one of --structure or --seed".into())),
    }
}

pub fn diagnose(ctx: &Context, args: &SourceArgs) -> CmdResult {
    let src = load_source(ctx, args)?;
    let t = transport_residual(&src.lambda, ctx.order)?;
    let (_, sd) = self_dilatation_residual(&cayley(&src.lambda)?, ctx.order)?;
    let tol = rigidity_tolerance(&ctx.grid);
    let mut report = json!({
        "source": src.description,
        "max_rho_T": finite(t.max_rho_t),
        "rms_rho_T": finite(t.rms_rho_t),
        "rigid_verdict": t.rigid,
        "tolerance": t.tolerance,
        "self_dilatation": {
            "max": finite(sd.max),
            "rms": finite(sd.rms),
            "rigid_verdict": sd.max < tol,
        },
        "analytic_partials": src.lambda.analytic_partials().is_some(),
    });
    if let Some(s) = &src.structure {
        let h = homogeneity_check(&s.sample(&ctx.grid)?, ctx.order)?;
        report["homogeneity"] = serde_json::to_value(h).expect("serializable");
    }
    if let Some(dir) = &ctx.out {
        let rho = t.rho_t.clone();
        write_real_csv(&dir.join("rho_t.csv"), &rho)?;
    }
    ctx.finish(&report)
}

pub fn uniformize(ctx: &Context, args: &UniformizeArgs) -> CmdResult {
    let src = load_source(ctx, &args.source)?;
    let chart = build_chart(&src.lambda, ctx.order)?;
    let factored = phi_factored(&src.lambda, ctx.order)?;
    let fd = phi_definition_fd(&chart, ctx.order)?;
    let fd_gap = fd.zip_map(&chart.phi, |a, b| a - b)?.norms(0)?;
    let check = jacobian_check(&chart, ctx.order, src.burgers.as_ref().map(|b| &b.j))?;
    let injectivity = scan_chart(&chart, args.bucket_tol)?;
    let dir = ctx.out_dir();
    std::fs::create_dir_all(&dir).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))?;
    write_real_csv(&ctx.file("p.csv"), &chart.p)?;
    write_real_csv(&ctx.file("q.csv"), &chart.q)?;
    write_complex_csv(&ctx.file("phi.csv"), &chart.phi)?;
    write_real_csv(&ctx.file("jacdet.csv"), &chart.jac_det)?;
    write_complex_csv(&ctx.file("lambda.csv"), src.lambda.lambda())?;
    let report = json!({
        "source": src.description,
        "files": ["p.csv", "q.csv", "phi.csv", "jacdet.csv", "lambda.csv"],
        "phi_definition_fd_vs_analytic": {"max": finite(fd_gap.max), "rms": finite(fd_gap.rms)},
        "phi_factored": {
            "max_rho_T": finite(factored.max_rho_t),
            "warning": factored.warning,
        },
        "jacobian": check.report,
        "injectivity": {
            "verdict": injectivity.verdict,
            "bucket_tol": injectivity.bucket_tol,
            "total_collisions": injectivity.total_collisions,
            "first_collisions": injectivity.collisions.iter().take(10).collect::<Vec<_>>(),
        },
    });
    ctx.finish(&report)
}

fn pair(text: &str, what: &str) -> Result<(f64, f64), Failure> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(Failure::Usage(format!("{what} must be two comma-separated numbers, got `{text}`")));
    }
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|e| Failure::Usage(format!("{what}: `{s}`: {e}")))
    };
    Ok((num(parts[0])?, num(parts[1])?))
}

pub fn invert(ctx: &Context, args: &InvertArgs) -> CmdResult {
    let (re, im) = pair(&args.target, "--target")?;
    let guess = pair(&args.guess, "--guess")?;
    let target = Complex64::new(re, im);
    let options = NewtonOptions {
        tol: ctx.tol,
        max_iter: args.max_iter,
    };
    let src = &args.source;
    let (description, result) = match (&src.structure, &src.seed) {
        (Some(text), None) => {
            let s = load_structure(src, text)?;
            let named = s
                .named()
                .ok_or_else(|| Failure::Usage("inversion needs a closed-form structure, not sampled files".into()))?;
            (s.description(), invert_xi(named, target, guess, options)?)
        }
        (None, Some(text)) => {
            let seed = resolve_seed(text, &params(&src.params)?)?;
            let provider = BurgersProvider::new(seed.as_ref(), ctx.burgers_options(50));
            let d = format!("burgers({})", seed.describe());
            (d, invert_xi(&provider as &dyn LambdaProvider, target, guess, options)?)
        }
        _ => return Err(Failure::Usage("give exactly one of --structure or --seed".into())),
    };
    let report = json!({
        "source": description,
        "target": [re, im],
        "x": result.x,
        "y": result.y,
        "iterations": result.iterations,
        "residual": result.residual,
    });
    ctx.finish(&report)
}

pub fn burgers(ctx: &Context, args: &BurgersArgs) -> CmdResult {
    let seed = resolve_seed(&args.seed, &params(&args.params)?)?;
    let opts = ctx.burgers_options(args.max_iter);
    let sol = burgers_field(seed.as_ref(), &ctx.grid, &opts)?;
    let certification = sol.self_certification(seed.as_ref())?;
    let t = transport_residual(&sol.spectral()?, ctx.order)?;
    let dir = ctx.out_dir();
    std::fs::create_dir_all(&dir).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))?;
    write_complex_csv(&ctx.file("lambda.csv"), &sol.lambda)?;
    write_complex_csv(&ctx.file("J.csv"), &sol.j)?;
    let iters: Vec<usize> = sol.iterations.iter().copied().filter(|&n| n > 0).collect();
    let report = json!({
        "seed": seed.describe(),
        "files": ["lambda.csv", "J.csv"],
        "newton_tol": opts.tol,
        "self_certified_residual": certification,
        "self_certified": certification <= opts.tol,
        "j_consistency": finite(sol.j_consistency(seed.as_ref())?),
        "unmasked": sol.lambda.valid_count(),
        "total": ctx.grid.len(),
        "mask_reasons": sol.reason_counts(),
        "max_newton_iterations": iters.iter().max().copied().unwrap_or(0),
        "rigidity": t.summary(),
    });
    ctx.finish(&report)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    structure: Option<StructureSpec>,
    seed: Option<SeedSpec>,
    grid: Option<String>,
    #[serde(default)]
    params: BTreeMap<String, Value>,
    a: Option<Coefficient>,
    b: Option<Coefficient>,
    f: Option<Coefficient>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeedSpec {
    text: String,
    #[serde(default)]
    params: BTreeMap<String, Value>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Coefficient {
    Expression(String),
    Number(f64),
    Csv { csv: PathBuf },
}

fn json_params(map: &BTreeMap<String, Value>) -> Result<Params, Failure> {
    let mut out = Params::new();
    for (k, v) in map {
        let c = match v {
            Value::Number(n) => Complex64::new(n.as_f64().unwrap_or(f64::NAN), 0.0),
            Value::String(s) => parse_constant(s)?,
            other => return Err(Failure::Usage(format!("parameter `{k}` has unsupported value {other}"))),
        };
        out.insert(k.clone(), c);
    }
    Ok(out)
}

fn coefficient(c: &Option<Coefficient>, params: &Params, grid: &GridSpec, base: &Path) -> Result<ComplexGridField, Failure> {
    Ok(match c {
        None => ComplexGridField::constant(*grid, Complex64::default()),
        Some(Coefficient::Number(v)) => ComplexGridField::constant(*grid, Complex64::new(*v, 0.0)),
        Some(Coefficient::Expression(text)) => sample_expression(text, params, grid)?,
        Some(Coefficient::Csv { csv }) => {
            let path = if csv.is_absolute() { csv.clone() } else { base.join(csv) };
            let f = read_complex_csv(&path)?;
            f.check_same_grid(grid)?;
            f
        }
    })
}

pub fn reduce_cmd(ctx: &Context, args: &ReduceArgs) -> CmdResult {
    let raw = std::fs::read_to_string(&args.problem)
        .map_err(|e| Failure::Usage(format!("{}: {e}", args.problem.display())))?;
    let problem: ProblemFile =
        serde_json::from_str(&raw).map_err(|e| Failure::Usage(format!("{}: {e}", args.problem.display())))?;
    let base = args.problem.parent().unwrap_or(Path::new(".")).to_path_buf();
    let grid = match &problem.grid {
        Some(g) => GridSpec::parse(g)?,
        None => ctx.grid,
    };
    let (description, lambda, j) = match (&problem.structure, &problem.seed) {
        (Some(spec), None) => {
            let s = spec.resolve(&base)?;
            (s.description(), lambda_from_structure(&s.sample(&grid)?)?, None)
        }
        (None, Some(seed)) => {
            let h = resolve_seed(&seed.text, &json_params(&seed.params)?)?;
            let sol = burgers_field(h.as_ref(), &grid, &ctx.burgers_options(50))?;
            (format!("burgers({})", h.describe()), sol.spectral()?, Some(sol.j))
        }
        _ => return Err(Failure::Usage("the problem needs exactly one of `structure` or `seed`".into())),
    };
    let p = json_params(&problem.params)?;
    let vp = VekuaProblem::new(
        lambda.clone(),
        coefficient(&problem.a, &p, &grid, &base)?,
        coefficient(&problem.b, &p, &grid, &base)?,
        coefficient(&problem.f, &p, &grid, &base)?,
    )?;
    let chart = build_chart(&lambda, ctx.order)?;
    let reduced = reduce(&vp, &chart, ctx.order)?;
    let dir = ctx.out_dir();
    std::fs::create_dir_all(&dir).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))?;
    write_complex_csv(&ctx.file("Aprime.csv"), &reduced.a_prime)?;
    write_complex_csv(&ctx.file("Bprime.csv"), &reduced.b_prime)?;
    write_complex_csv(&ctx.file("Fprime.csv"), &reduced.f_prime)?;
    let reasons: BTreeMap<String, usize> = reduced
        .reason_counts()
        .into_iter()
        .map(|(k, v)| (serde_json::to_value(k).expect("serializable").as_str().unwrap_or("?").to_string(), v))
        .collect();
    let bound = coefficient_bound_report(&reduced, 2, j.as_ref()).ok();
    let mut report = json!({
        "source": description,
        "files": ["Aprime.csv", "Bprime.csv", "Fprime.csv"],
        "rigidity": reduced.rigidity,
        "division_residual": reduced.division_residual(),
        "unmasked": reduced.a_prime.valid_count(),
        "mask_reasons": reasons,
        "coefficient_bound": bound,
    });
    if let Some(spec) = &args.check {
        let f = passenger(spec, &chart)?;
        let n = reduced_residual(&f.f, &reduced, ctx.order)?;
        let (_, fxibar) = wirtinger_in_xi(&f.f, &chart, ctx.order)?;
        report["check"] = json!({
            "f": spec,
            "reduced_residual": {"max": finite(n.max), "rms": finite(n.rms), "points": n.count},
            "max_f_xibar": finite(fxibar.norms(0)?.max),
        });
    }
    ctx.finish(&report)
}

fn passenger(spec: &str, chart: &ves_core::canonical::CanonicalChart) -> Result<PassengerField, Failure> {
    let (kind, text) = match spec.split_once(':') {
        Some(("holomorphic", t)) => (PassengerKind::Holomorphic, t),
        Some(("antiholomorphic", t)) => (PassengerKind::Antiholomorphic, t),
        _ if spec.ends_with(".csv") => {
            let f = read_complex_csv(Path::new(spec))?;
            f.check_same_grid(chart.spec())?;
            return Ok(PassengerField::sampled(f));
        }
        _ => (PassengerKind::Holomorphic, spec),
    };
    let g: Arc<dyn Seed> = Arc::from(resolve_seed(text, &Params::new())?);
    Ok(PassengerField::from_generator(g, kind, chart)?)
}
