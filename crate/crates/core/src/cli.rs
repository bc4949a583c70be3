//! Command-line entry point: build the Young function, domain, and named
//! functions from a config file or inline flags, dispatch the subcommand,
//! write JSON/CSV reports plus an artifact index, and print a one-line
//! verdict per command.
//!
//! Exit status: 0 when every verdict passes or is informational, 1 on any
//! failed verdict, 2 on configuration errors.

use crate::config::{CommandSpec, RunConfig, Tolerances};
use crate::expr::{EvalContext, Expr};
use crate::experiments::{
    run_kr_counterexample, run_modular_vs_norm_equivalence_with, run_mollifier_convergence,
    run_sandwich_and_duality_suite, run_translation_continuity, run_truncation_density,
    standard_corpus, EquivalenceMode, ExperimentReport, TruncationOpts, Verdict,
};
use crate::geometry::{BoxRegion, Point};
use crate::grid::{modular, Domain, GridFunction};
use crate::norms::{luxemburg_norm_with, NormStatus};
use crate::operators::mollify;
use crate::phi::{make_phi, validate_axioms, PhiFunction, PhiSpec, ProbeGrid};
use crate::sig9;
use clap::{Args, Parser, Subcommand};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(
    name = "mokit",
    version,
    about = "Numerical toolkit for Musielak-Orlicz function spaces"
)]
struct Cli {
    /// Config file (sectioned text or JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for reports (default: from config, else ./mokit-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Pin the report timestamp for byte-reproducible artifacts.
    #[arg(long, global = true)]
    timestamp: Option<String>,
    /// Seed override for randomized corpora.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default, Clone)]
struct PhiArgs {
    /// Family: m1, m2, m3, m4, m5, or custom.
    #[arg(long)]
    phi: Option<String>,
    /// Exponent expression p(x) (m1/m2/m3/m5) or scalar p (m4).
    #[arg(long)]
    p: Option<String>,
    /// Scalar q (m4).
    #[arg(long)]
    q: Option<String>,
    /// Weight expression a(x) (m4).
    #[arg(long)]
    weight: Option<String>,
    /// Custom evaluation expression in (x, y, s).
    #[arg(long)]
    expr: Option<String>,
    /// Custom density expression in (x, y, s).
    #[arg(long)]
    density: Option<String>,
}

#[derive(Args, Debug, Default, Clone)]
struct DomainArgs {
    /// Domain as "lo,hi,res" (1-d) or "lox,hix,loy,hiy,res" (2-d).
    #[arg(long)]
    domain: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Luxemburg norm of a function.
    Norm {
        #[command(flatten)]
        phi: PhiArgs,
        #[command(flatten)]
        domain: DomainArgs,
        /// Function expression or a [functions] name.
        #[arg(long)]
        u: Option<String>,
        /// Relative tolerance on lambda.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Complementary-function value at a point.
    Conjugate {
        #[command(flatten)]
        phi: PhiArgs,
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long, default_value_t = 0.5)]
        x: f64,
        #[arg(long, default_value_t = 0.0)]
        y: f64,
        #[arg(long)]
        s: f64,
    },
    /// Modular of a function at a given lambda.
    Modular {
        #[command(flatten)]
        phi: PhiArgs,
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long)]
        u: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long)]
        refinements: Option<usize>,
    },
    /// Mollify a function and export it as CSV.
    Mollify {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long)]
        u: Option<String>,
        #[arg(long)]
        epsilon: f64,
    },
    /// Run a named experiment: translation, kr, mollifier, truncation,
    /// modular-vs-norm, or sandwich.
    Experiment {
        name: Option<String>,
        #[command(flatten)]
        phi: PhiArgs,
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long)]
        u: Option<String>,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        h: Option<f64>,
        /// Comma-separated h sweep for the translation experiment.
        #[arg(long)]
        hs: Option<String>,
        /// Comma-separated eps sweep for the mollifier experiment.
        #[arg(long)]
        eps: Option<String>,
        /// Comma-separated j sweep for the truncation experiment.
        #[arg(long)]
        js: Option<String>,
        #[arg(long)]
        lambda: Option<f64>,
        /// delta2 or non-delta2 for modular-vs-norm.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Probe the Young-function axioms and report violations.
    ValidatePhi {
        #[command(flatten)]
        phi: PhiArgs,
        #[command(flatten)]
        domain: DomainArgs,
    },
}

/// Everything a command needs, resolved from config plus flag overrides.
struct Context {
    phi_spec: Option<PhiSpec>,
    domain_spec: Option<(BoxRegion, usize)>,
    functions: BTreeMap<String, String>,
    tolerances: Tolerances,
    out_dir: PathBuf,
    timestamp: String,
    #[allow(dead_code)]
    seed: u64,
}

#[derive(Debug)]
struct CliError {
    message: String,
    exit: i32,
}

fn config_error(message: impl Into<String>) -> CliError {
    CliError { message: message.into(), exit: 2 }
}

impl Context {
    fn phi(&self) -> Result<PhiFunction, CliError> {
        let spec = self
            .phi_spec
            .as_ref()
            .ok_or_else(|| config_error("no Young function given (use --phi or [phi])"))?;
        let region = self
            .domain_spec
            .map(|(b, _)| b)
            .unwrap_or_else(|| BoxRegion::one_d(0.0, 1.0));
        make_phi(spec, &region).map_err(|e| config_error(e.to_string()))
    }

    fn domain(&self) -> Result<Domain, CliError> {
        let (bounds, resolution) = self
            .domain_spec
            .ok_or_else(|| config_error("no domain given (use --domain or [domain])"))?;
        Domain::new(bounds, resolution).map_err(|e| config_error(e.to_string()))
    }

    /// Resolve `u` as a [functions] name or an inline expression and sample
    /// it on the domain, inferring a support hint from the samples.
    fn grid_function(&self, text: &str) -> Result<GridFunction, CliError> {
        let source = self.functions.get(text).map(String::as_str).unwrap_or(text);
        let expr = Expr::parse(source)
            .map_err(|e| config_error(format!("function `{text}`: {e}")))?;
        if expr.uses_s() {
            return Err(config_error(format!("function `{text}` must not depend on s")));
        }
        let domain = self.domain()?;
        let g = GridFunction::sample(domain, move |p: Point| {
            expr.eval(&EvalContext { x: p.x(), y: p.y(), s: 0.0 })
        })
        .map_err(|e| config_error(format!("function `{text}`: {e}")))?;
        Ok(g.with_inferred_support())
    }

    fn phi_tag(&self) -> String {
        self.phi_spec
            .as_ref()
            .map(|s| s.family.to_ascii_lowercase())
            .filter(|s| !s.is_empty())
            .unwrap_or_else(|| "none".into())
    }
}

/// Outcome of one executed command: the printed line, whether it failed,
/// and any artifacts to write (file stem, JSON body, optional CSV body).
struct Outcome {
    line: String,
    failed: bool,
    artifacts: Vec<(String, String, Option<String>)>,
}

fn parse_domain_arg(text: &str) -> Result<(BoxRegion, usize), CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let nums: Result<Vec<f64>, _> = parts.iter().map(|s| s.parse::<f64>()).collect();
    let nums = nums.map_err(|_| config_error(format!("bad --domain `{text}`")))?;
    match nums.len() {
        3 => Ok((BoxRegion::one_d(nums[0], nums[1]), nums[2] as usize)),
        5 => Ok((BoxRegion::two_d(nums[0], nums[1], nums[2], nums[3]), nums[4] as usize)),
        _ => Err(config_error(format!(
            "--domain `{text}` needs lo,hi,res or lox,hix,loy,hiy,res"
        ))),
    }
}

fn parse_f64_list(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| config_error(format!("bad number `{}` in {what}", s.trim())))
        })
        .collect()
}

fn merge_phi(spec: Option<PhiSpec>, args: &PhiArgs) -> Option<PhiSpec> {
    let mut spec = spec;
    if let Some(family) = &args.phi {
        let s = spec.get_or_insert_with(PhiSpec::default);
        s.family = family.clone();
    }
    if let Some(s) = spec.as_mut() {
        if args.p.is_some() {
            s.p = args.p.clone();
        }
        if args.q.is_some() {
            s.q = args.q.clone();
        }
        if args.weight.is_some() {
            s.weight = args.weight.clone();
        }
        if args.expr.is_some() {
            s.expr = args.expr.clone();
        }
        if args.density.is_some() {
            s.density = args.density.clone();
        }
    }
    spec
}

/// Entry point used by `main` and by tests; returns the process exit code.
pub fn run_cli<I>(argv: I) -> i32
where
    I: IntoIterator<Item = String>,
{
    init_thread_pool();
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(failed) => {
            if failed {
                1
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.exit
        }
    }
}

/// Cap internal parallelism with MOKIT_THREADS.
fn init_thread_pool() {
    if let Ok(v) = std::env::var("MOKIT_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| config_error(format!("{}: {e}", path.display())))?;
            RunConfig::parse(&text).map_err(|e| config_error(e.to_string()))?
        }
        None => RunConfig::default(),
    };

    let timestamp = cli
        .timestamp
        .clone()
        .unwrap_or_else(|| chrono::Utc::now().format("%Y%m%dT%H%M%SZ").to_string());
    let out_dir = cli
        .out
        .clone()
        .or_else(|| config.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("mokit-out"));

    let (phi_args, domain_args) = command_args(&cli.command);
    let domain_spec = match &domain_args.domain {
        Some(text) => Some(parse_domain_arg(text)?),
        None => match &config.domain {
            Some(d) => Some(domain_from_config(d)?),
            None => None,
        },
    };
    let ctx = Context {
        phi_spec: merge_phi(config.phi.clone(), &phi_args),
        domain_spec,
        functions: config.functions.clone(),
        tolerances: config.tolerances,
        out_dir,
        timestamp,
        seed: cli.seed.unwrap_or(config.seed),
    };

    // Config [command] blocks matching this subcommand run first (with flag
    // overrides); without any, the flags alone define a single command.
    let op_name = op_of(&cli.command);
    let blocks: Vec<&CommandSpec> =
        config.commands.iter().filter(|c| c.op == op_name).collect();
    let runs: Vec<BTreeMap<String, String>> = if blocks.is_empty() {
        vec![BTreeMap::new()]
    } else {
        blocks.iter().map(|b| b.params.clone()).collect()
    };

    let mut failed = false;
    let mut artifacts = Vec::new();
    for params in runs {
        let outcome = dispatch(&cli.command, &ctx, &params)?;
        println!("{}", outcome.line);
        failed |= outcome.failed;
        for (stem, json, csv) in outcome.artifacts {
            let base = format!("{stem}-{}", ctx.timestamp);
            write_artifact(&ctx.out_dir, &format!("{base}.json"), &json)?;
            artifacts.push(format!("{base}.json"));
            if let Some(csv) = csv {
                write_artifact(&ctx.out_dir, &format!("{base}.csv"), &csv)?;
                artifacts.push(format!("{base}.csv"));
            }
        }
    }
    if !artifacts.is_empty() {
        artifacts.sort();
        let index = serde_json::json!({
            "timestamp": ctx.timestamp,
            "artifacts": artifacts,
        });
        write_artifact(
            &ctx.out_dir,
            "index.json",
            &format!("{}\n", serde_json::to_string_pretty(&index).expect("index")),
        )?;
    }
    Ok(failed)
}

fn domain_from_config(d: &crate::config::DomainSpec) -> Result<(BoxRegion, usize), CliError> {
    match d.bounds.len() {
        2 => Ok((BoxRegion::one_d(d.bounds[0], d.bounds[1]), d.resolution)),
        4 => Ok((
            BoxRegion::two_d(d.bounds[0], d.bounds[1], d.bounds[2], d.bounds[3]),
            d.resolution,
        )),
        n => Err(config_error(format!("[domain] bounds needs 2 or 4 numbers, got {n}"))),
    }
}

fn command_args(cmd: &Command) -> (PhiArgs, DomainArgs) {
    match cmd {
        Command::Norm { phi, domain, .. }
        | Command::Conjugate { phi, domain, .. }
        | Command::Modular { phi, domain, .. }
        | Command::Experiment { phi, domain, .. }
        | Command::ValidatePhi { phi, domain } => (phi.clone(), domain.clone()),
        Command::Mollify { domain, .. } => (PhiArgs::default(), domain.clone()),
    }
}

fn op_of(cmd: &Command) -> &'static str {
    match cmd {
        Command::Norm { .. } => "norm",
        Command::Conjugate { .. } => "conjugate",
        Command::Modular { .. } => "modular",
        Command::Mollify { .. } => "mollify",
        Command::Experiment { .. } => "experiment",
        Command::ValidatePhi { .. } => "validate-phi",
    }
}

/// Flag value if present, else the [command] parameter, else the default.
fn pick<T: Clone>(
    flag: &Option<T>,
    params: &BTreeMap<String, String>,
    key: &str,
    parse: impl Fn(&str) -> Result<T, CliError>,
) -> Result<Option<T>, CliError> {
    if let Some(v) = flag {
        return Ok(Some(v.clone()));
    }
    match params.get(key) {
        Some(text) => Ok(Some(parse(text)?)),
        None => Ok(None),
    }
}

fn parse_num(what: &'static str) -> impl Fn(&str) -> Result<f64, CliError> {
    move |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| config_error(format!("bad number `{s}` for {what}")))
    }
}

fn dispatch(
    cmd: &Command,
    ctx: &Context,
    params: &BTreeMap<String, String>,
) -> Result<Outcome, CliError> {
    match cmd {
        Command::Norm { u, tol, .. } => {
            let phi = ctx.phi()?;
            let u_text = pick(u, params, "u", |s| Ok(s.to_string()))?
                .ok_or_else(|| config_error("norm needs --u"))?;
            let tol = pick(tol, params, "tol", parse_num("tol"))?
                .unwrap_or(ctx.tolerances.norm_tol);
            let g = ctx.grid_function(&u_text)?;
            let n = luxemburg_norm_with(&phi, &g, tol, ctx.tolerances.norm_refinements);
            let line = match n.status {
                NormStatus::Converged => format!(
                    "norm[{u_text}]: value {} (converged, {} iterations)",
                    sig9(n.value),
                    n.iterations
                ),
                NormStatus::ZeroFunction => format!("norm[{u_text}]: value 0 (zero function)"),
                NormStatus::NoFiniteLambda => {
                    format!("norm[{u_text}]: no finite lambda (outside the space at this resolution)")
                }
            };
            let json = serde_json::json!({
                "op": "norm",
                "phi": phi.to_string(),
                "u": u_text,
                "result": n,
            });
            Ok(Outcome {
                line,
                failed: false,
                artifacts: vec![(
                    format!("norm-{}", ctx.phi_tag()),
                    format!("{}\n", serde_json::to_string_pretty(&json).expect("json")),
                    None,
                )],
            })
        }
        Command::Conjugate { x, y, s, .. } => {
            let phi = ctx.phi()?;
            let point = if ctx.domain_spec.map(|(b, _)| b.dim) == Some(2) {
                Point::two_d(*x, *y)
            } else {
                Point::one_d(*x)
            };
            let r = crate::conjugate::conjugate_eval(&phi, point, *s);
            let line = if r.unbounded {
                format!("conjugate[x={x}, s={s}]: unbounded")
            } else {
                format!(
                    "conjugate[x={x}, s={s}]: value {} at t = {}",
                    sig9(r.value),
                    sig9(r.argmax_t)
                )
            };
            let json = serde_json::json!({
                "op": "conjugate",
                "phi": phi.to_string(),
                "x": point,
                "s": s,
                "result": r,
            });
            Ok(Outcome {
                line,
                failed: false,
                artifacts: vec![(
                    format!("conjugate-{}", ctx.phi_tag()),
                    format!("{}\n", serde_json::to_string_pretty(&json).expect("json")),
                    None,
                )],
            })
        }
        Command::Modular { u, lambda, refinements, .. } => {
            let phi = ctx.phi()?;
            let u_text = pick(u, params, "u", |s| Ok(s.to_string()))?
                .ok_or_else(|| config_error("modular needs --u"))?;
            let lambda = pick(&Some(*lambda), params, "lambda", parse_num("lambda"))?
                .expect("default set");
            let refinements = refinements.unwrap_or(ctx.tolerances.refinements);
            if lambda <= 0.0 {
                return Err(config_error("lambda must be positive"));
            }
            let g = ctx.grid_function(&u_text)?;
            let m = modular(&phi, &g, lambda, refinements);
            let line = if m.overflow_at.is_some() {
                format!("modular[{u_text}, lambda={lambda}]: overflow (divergent)")
            } else if m.divergent {
                format!(
                    "modular[{u_text}, lambda={lambda}]: divergent (last estimate {})",
                    sig9(m.value)
                )
            } else {
                format!("modular[{u_text}, lambda={lambda}]: value {}", sig9(m.value))
            };
            let json = serde_json::json!({
                "op": "modular",
                "phi": phi.to_string(),
                "u": u_text,
                "result": m,
            });
            Ok(Outcome {
                line,
                failed: false,
                artifacts: vec![(
                    format!("modular-{}", ctx.phi_tag()),
                    format!("{}\n", serde_json::to_string_pretty(&json).expect("json")),
                    None,
                )],
            })
        }
        Command::Mollify { u, epsilon, .. } => {
            let u_text = pick(u, params, "u", |s| Ok(s.to_string()))?
                .ok_or_else(|| config_error("mollify needs --u"))?;
            if *epsilon <= 0.0 {
                return Err(config_error("epsilon must be positive"));
            }
            let g = ctx.grid_function(&u_text)?;
            let m = mollify(&g, *epsilon);
            let line = format!(
                "mollify[{u_text}, eps={epsilon}]: sup {} (smooth-support guarantee: {})",
                sig9(m.function.sup_abs()),
                m.smooth_compact_guarantee
            );
            let json = serde_json::json!({
                "op": "mollify",
                "u": u_text,
                "epsilon": epsilon,
                "sup": m.function.sup_abs(),
                "smooth_compact_guarantee": m.smooth_compact_guarantee,
            });
            Ok(Outcome {
                line,
                failed: false,
                artifacts: vec![(
                    "mollify".to_string(),
                    format!("{}\n", serde_json::to_string_pretty(&json).expect("json")),
                    Some(m.function.to_csv()),
                )],
            })
        }
        Command::Experiment {
            name,
            u,
            r,
            s,
            h,
            hs,
            eps,
            js,
            lambda,
            mode,
            threshold,
            ..
        } => {
            let name = match (name, params.get("name")) {
                (Some(n), _) => n.clone(),
                (None, Some(n)) => n.clone(),
                (None, None) => return Err(config_error("experiment needs a name")),
            };
            let report = match name.as_str() {
                "kr" => {
                    let r = pick(r, params, "r", parse_num("r"))?.unwrap_or(2.0);
                    let s = pick(s, params, "s", parse_num("s"))?.unwrap_or(4.0);
                    let h = pick(h, params, "h", parse_num("h"))?.unwrap_or(0.1);
                    run_kr_counterexample(r, s, h)
                        .map_err(|e| config_error(e.to_string()))?
                }
                "translation" => {
                    let phi = ctx.phi()?;
                    let u_text = pick(u, params, "u", |s| Ok(s.to_string()))?
                        .ok_or_else(|| config_error("translation needs --u"))?;
                    let g = ctx.grid_function(&u_text)?;
                    let hs_text = pick(hs, params, "hs", |s| Ok(s.to_string()))?
                        .unwrap_or_else(|| "0.1,0.05,0.025,0.0125".into());
                    let hs = parse_f64_list(&hs_text, "--hs")?;
                    let threshold = pick(threshold, params, "threshold", parse_num("threshold"))?;
                    run_translation_continuity(&phi, &g, &hs, threshold)
                        .map_err(|e| config_error(e.to_string()))?
                }
                "mollifier" => {
                    let phi = ctx.phi()?;
                    let u_text = pick(u, params, "u", |s| Ok(s.to_string()))?
                        .ok_or_else(|| config_error("mollifier needs --u"))?;
                    let g = ctx.grid_function(&u_text)?;
                    let eps_text = pick(eps, params, "eps", |s| Ok(s.to_string()))?
                        .unwrap_or_else(|| "0.1,0.05,0.025".into());
                    let eps = parse_f64_list(&eps_text, "--eps")?;
                    let threshold = pick(threshold, params, "threshold", parse_num("threshold"))?;
                    run_mollifier_convergence(&phi, &g, &eps, threshold)
                        .map_err(|e| config_error(e.to_string()))?
                }
                "truncation" => {
                    let phi = ctx.phi()?;
                    let u_text = pick(u, params, "u", |s| Ok(s.to_string()))?
                        .ok_or_else(|| config_error("truncation needs --u"))?;
                    let g = ctx.grid_function(&u_text)?;
                    let lambda = pick(lambda, params, "lambda", parse_num("lambda"))?
                        .unwrap_or(1.0);
                    let js_text = pick(js, params, "js", |s| Ok(s.to_string()))?
                        .unwrap_or_else(|| "1,2,4,8,16".into());
                    let js: Vec<u32> = parse_f64_list(&js_text, "--js")?
                        .into_iter()
                        .map(|v| v as u32)
                        .collect();
                    run_truncation_density(&phi, &g, lambda, &js, &TruncationOpts::default())
                        .map_err(|e| config_error(e.to_string()))?
                }
                "modular-vs-norm" => {
                    let mode_text = pick(mode, params, "mode", |s| Ok(s.to_string()))?
                        .ok_or_else(|| config_error("modular-vs-norm needs --mode"))?;
                    let mode = match mode_text.as_str() {
                        "delta2" => EquivalenceMode::Delta2,
                        "non-delta2" | "non_delta2" => EquivalenceMode::NonDelta2,
                        other => {
                            return Err(config_error(format!(
                                "unknown mode `{other}` (delta2 | non-delta2)"
                            )))
                        }
                    };
                    let ns: Vec<u32> = match params.get("ns") {
                        Some(text) => parse_f64_list(text, "ns")?
                            .into_iter()
                            .map(|v| v as u32)
                            .collect(),
                        None => match mode {
                            EquivalenceMode::Delta2 => vec![1, 2, 4, 8, 16],
                            EquivalenceMode::NonDelta2 => vec![4, 6, 8, 10],
                        },
                    };
                    run_modular_vs_norm_equivalence_with(mode, &ns)
                }
                "sandwich" => {
                    let phi = ctx.phi()?;
                    let domain = ctx.domain()?;
                    let mut corpus = standard_corpus(domain);
                    for name in ctx.functions.keys() {
                        corpus.push(ctx.grid_function(name)?);
                    }
                    run_sandwich_and_duality_suite(&phi, &corpus)
                        .map_err(|e| config_error(e.to_string()))?
                }
                other => {
                    return Err(config_error(format!(
                        "unknown experiment `{other}` (translation | kr | mollifier | \
                         truncation | modular-vs-norm | sandwich)"
                    )))
                }
            };
            Ok(experiment_outcome(report, ctx))
        }
        Command::ValidatePhi { .. } => {
            let phi = ctx.phi()?;
            let region = ctx
                .domain_spec
                .map(|(b, _)| b)
                .unwrap_or_else(|| BoxRegion::one_d(0.0, 1.0));
            let report = validate_axioms(&phi, &ProbeGrid::for_box(&region));
            let mut line = String::new();
            let failed = !report.is_clean();
            if failed {
                write!(line, "validate-phi[{phi}]: FAIL").unwrap();
                if let Some(v) = report.convexity_violations.first() {
                    write!(
                        line,
                        "; convexity violation at x = {}, s1 = {}, s2 = {}, gap = {}",
                        v.x,
                        v.s1,
                        v.s2,
                        sig9(v.gap)
                    )
                    .unwrap();
                }
                if let Some(v) = report.monotonicity_violations.first() {
                    write!(
                        line,
                        "; monotonicity violation at x = {} between s = {} and {}",
                        v.x, v.s_lo, v.s_hi
                    )
                    .unwrap();
                }
                if !report.zero_at_zero {
                    write!(line, "; M(x, 0) != 0").unwrap();
                }
            } else {
                write!(
                    line,
                    "validate-phi[{phi}]: pass ({} probe points, {} overflow entries)",
                    report.checked_points,
                    report.overflow_points.len()
                )
                .unwrap();
            }
            let json = serde_json::json!({
                "op": "validate-phi",
                "phi": phi.to_string(),
                "report": report,
            });
            Ok(Outcome {
                line,
                failed,
                artifacts: vec![(
                    format!("validate-phi-{}", ctx.phi_tag()),
                    format!("{}\n", serde_json::to_string_pretty(&json).expect("json")),
                    None,
                )],
            })
        }
    }
}

fn experiment_outcome(report: ExperimentReport, _ctx: &Context) -> Outcome {
    let verdict = match report.verdict {
        Verdict::Pass => "pass",
        Verdict::Fail => "FAIL",
        Verdict::Inconclusive => "inconclusive",
    };
    let mut line = format!("experiment {}: {verdict}", report.name);
    for note in report.notes.iter().take(2) {
        write!(line, "; {note}").unwrap();
    }
    // File tag from the report's own function config, e.g. "m1[p = 2]" -> m1.
    let family = report
        .phi_config
        .split('[')
        .next()
        .filter(|s| !s.is_empty())
        .unwrap_or("none")
        .to_string();
    Outcome {
        line,
        failed: report.verdict == Verdict::Fail,
        artifacts: vec![(
            format!("{}-{family}", report.name),
            report.to_json(),
            Some(report.to_csv()),
        )],
    }
}

fn write_artifact(dir: &PathBuf, name: &str, body: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| config_error(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|e| config_error(format!("{}: {e}", path.display())))
}
