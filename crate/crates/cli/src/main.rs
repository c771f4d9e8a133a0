//! Batch front door for the kernel-product experiments. Every command
//! reads an optional JSON run configuration plus flag overrides, derives
//! all randomness from one master seed, and writes machine-readable
//! artifacts into the output directory. Column meanings are documented in
//! the subcommand help texts and in docs/formats.md.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

use kernprod::asymptotics::roles;
use kernprod::*;

/// Stream role for check-suite windows, disjoint from the estimator roles.
const ROLE_CHECKS: u64 = 7;
/// Stream role for the oscillation trajectory.
const ROLE_TRAJECTORY: u64 = 8;

#[derive(Parser)]
#[command(
    name = "kernprod",
    version,
    about = "Experiments with products of random positive kernels",
    after_help = "Exit codes: 0 success, 1 assumption/certificate failure, 2 invalid config or IO."
)]
struct Cli {
    /// JSON run configuration; explicit flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Environment spec JSON (variant-tagged kernels + master_seed).
    #[arg(long, global = true)]
    env: Option<PathBuf>,
    /// Master seed override; every random draw derives from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Replica count for Monte Carlo commands.
    #[arg(long, global = true)]
    replicas: Option<usize>,
    /// Worker threads (results are identical for any value).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory for artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Tabular output format.
    #[arg(long, global = true, value_enum)]
    format: Option<OutFormat>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sequential, Kingman, and integral Lyapunov estimates with a
    /// cross-estimator consistency verdict.
    ///
    /// Writes trajectory.{csv,jsonl} with columns: n (step), log_norm_increment
    /// (cocycle increment log ||mu_n M_n||), running_lambda (partial-sum
    /// estimate S_n/n), tv_to_previous (TV step of the projective chain);
    /// and lyapunov.json with the three estimates.
    Lyapunov {
        /// Trajectory/estimate length.
        #[arg(long)]
        n: Option<usize>,
        /// Kingman horizon cap.
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Stationary projective-law samples by time reversal (i.i.d. only).
    ///
    /// Writes samples.jsonl, one record per replica: weights (probability
    /// vector), depth (coupling depth used), tv_increment (last TV step);
    /// and stationary.json with the invariance diagnostic.
    Stationary {
        /// Coupling tolerance for the backward product.
        #[arg(long)]
        tol: Option<f64>,
        /// Maximum backward depth.
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Best admissible triplet scan and per-step coupling series on a
    /// realized window.
    ///
    /// Writes triplet.json {nu, c, d, gamma, horizon_certified, provenance}
    /// and gamma_series.json {gammas, eps, gamma_bar, contraction_factor}.
    Doeblin {
        /// Window length.
        #[arg(long)]
        n: Option<usize>,
        /// Horizon cap for the d certificate.
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Batch verification of the minoration, projective contraction,
    /// growth-ratio, and sandwich inequalities on realized windows.
    ///
    /// Writes checks.jsonl, one record per check: {check, params, lhs, rhs,
    /// slack, pass}.
    ContractCheck {
        /// Number of realized windows.
        #[arg(long)]
        instances: Option<usize>,
        /// Window length.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Audit of the sufficient conditions for Leslie environments.
    ///
    /// Writes audit.json (per-condition booleans plus the empirical
    /// gamma-positivity probability).
    LeslieAudit {
        /// Horizon for the d'' certificate.
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Builds and verifies the gamma = 0 Leslie counterexample.
    ///
    /// Writes counterexample.{csv,jsonl} with columns: n (depth),
    /// lhs_log_ratio (log of ||m_{0,n}||_inf / m_{0,n}(0)), rhs_log_bound
    /// (n log(a^{1-alpha}(1-c)/2)); and counterexample.json.
    Counterexample {
        /// Fertility boost factor (a > 1).
        #[arg(long)]
        a: Option<f64>,
        /// Fertility fraction of the row mass (delta in (0,1)).
        #[arg(long)]
        delta: Option<f64>,
        /// Truncation dimension K.
        #[arg(long)]
        truncation: Option<usize>,
        /// Horizon for the d-decay curve.
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Centers the environment at the estimated Lyapunov exponent and runs
    /// the oscillation and (NH) diagnostics.
    ///
    /// Writes critical.json {lambda_hat, se, osc: {max, min, crossed_up,
    /// crossed_down}, nh: {verdict, spread_exponent}}.
    Critical {
        /// Oscillation trajectory length.
        #[arg(long)]
        n: Option<usize>,
        /// Excursion threshold for the crossing verdict.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Coupling-vs-Birkhoff comparison table on random entrywise-positive
    /// instances.
    ///
    /// Writes comparison.{csv,jsonl} with columns: instance_id, gamma
    /// (best scanned coupling constant), one_minus_gamma (TV bound),
    /// tau_birkhoff (external-standard Hilbert bound), observed_tv_factor,
    /// observed_hilbert_factor (worst one-step factors over sampled pairs).
    HilbertCompare {
        /// Number of random instances.
        #[arg(long)]
        instances: Option<usize>,
        /// Instance dimension.
        #[arg(long)]
        p: Option<usize>,
        /// Random measure pairs per instance.
        #[arg(long)]
        pairs: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum OutFormat {
    Csv,
    Jsonl,
}

/// JSON run configuration; every field optional, flags take precedence.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RunConfig {
    env: Option<PathBuf>,
    seed: Option<u64>,
    replicas: Option<usize>,
    n: Option<usize>,
    n_max: Option<usize>,
    tol: Option<f64>,
    threshold: Option<f64>,
    a: Option<f64>,
    delta: Option<f64>,
    truncation: Option<usize>,
    instances: Option<usize>,
    p: Option<usize>,
    pairs: Option<usize>,
    out: Option<PathBuf>,
    format: Option<OutFormat>,
    threads: Option<usize>,
}

enum CliError {
    /// Exit 2: bad configuration or IO.
    Config(String),
    /// Exit 1: a mathematical assumption or certificate failed.
    Domain(String),
}

impl From<kernprod::Error> for CliError {
    fn from(err: kernprod::Error) -> CliError {
        match err {
            Error::InvalidSpec(_) | Error::Io(_) | Error::Json(_) => {
                CliError::Config(err.to_string())
            }
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> CliError {
        CliError::Config(err.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// 17 significant digits: enough to make byte-identical reruns meaningful.
fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn cell_to_csv(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::Number(n) => match n.as_u64() {
            Some(u) => u.to_string(),
            None => fmt_f(n.as_f64().unwrap_or(f64::NAN)),
        },
        other => other.to_string(),
    }
}

/// Writes rows either as CSV (with header) or as JSONL objects.
fn write_table(
    dir: &Path,
    stem: &str,
    format: OutFormat,
    columns: &[&str],
    rows: &[Vec<serde_json::Value>],
) -> CliResult<PathBuf> {
    let path = dir.join(format!(
        "{stem}.{}",
        match format {
            OutFormat::Csv => "csv",
            OutFormat::Jsonl => "jsonl",
        }
    ));
    let mut out = String::new();
    match format {
        OutFormat::Csv => {
            out.push_str(&columns.join(","));
            out.push('\n');
            for row in rows {
                let cells: Vec<String> = row.iter().map(cell_to_csv).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
        }
        OutFormat::Jsonl => {
            for row in rows {
                let obj: serde_json::Map<String, serde_json::Value> = columns
                    .iter()
                    .map(|c| c.to_string())
                    .zip(row.iter().cloned())
                    .collect();
                out.push_str(&serde_json::Value::Object(obj).to_string());
                out.push('\n');
            }
        }
    }
    fs::write(&path, out)?;
    Ok(path)
}

fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> CliResult<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, format!("{:#}\n", value))?;
    Ok(path)
}

fn num(x: f64) -> serde_json::Value {
    json!(x)
}

struct Ctx {
    spec: Option<EnvironmentSpec>,
    seed: u64,
    replicas: usize,
    out: PathBuf,
    format: OutFormat,
    cfg: RunConfig,
}

impl Ctx {
    fn spec(&self) -> CliResult<&EnvironmentSpec> {
        self.spec
            .as_ref()
            .ok_or_else(|| CliError::Config("this command needs --env".into()))
    }
}

fn load_ctx(cli: &Cli) -> CliResult<Ctx> {
    let cfg: RunConfig = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    let threads = cli.threads.or(cfg.threads);
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let env_path = cli.env.clone().or(cfg.env.clone());
    let seed = cli.seed.or(cfg.seed);
    let spec = match env_path {
        Some(path) => {
            let text = fs::read_to_string(&path)
                .map_err(|e| CliError::Config(format!("env {}: {e}", path.display())))?;
            let mut spec: EnvironmentSpec = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("env {}: {e}", path.display())))?;
            if let Some(s) = seed {
                spec.master_seed = s;
            }
            spec.validate()?;
            Some(spec)
        }
        None => None,
    };
    let out = cli.out.clone().or(cfg.out.clone()).unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out)?;
    Ok(Ctx {
        spec,
        seed: seed.unwrap_or(0),
        replicas: cli.replicas.or(cfg.replicas).unwrap_or(0),
        out,
        format: cli.format.or(cfg.format).unwrap_or(OutFormat::Csv),
        cfg,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = match load_ctx(&cli) {
        Ok(ctx) => ctx,
        Err(CliError::Config(msg)) | Err(CliError::Domain(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    match dispatch(&cli.command, &ctx) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verdict: certificate/assumption check failed (see artifacts)");
            ExitCode::from(1)
        }
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Domain(msg)) => {
            eprintln!("assumption failure: {msg}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: &Command, ctx: &Ctx) -> CliResult<bool> {
    match command {
        Command::Lyapunov { n, n_max } => cmd_lyapunov(ctx, *n, *n_max),
        Command::Stationary { tol, n_max } => cmd_stationary(ctx, *tol, *n_max),
        Command::Doeblin { n, n_max } => cmd_doeblin(ctx, *n, *n_max),
        Command::ContractCheck { instances, n } => cmd_contract_check(ctx, *instances, *n),
        Command::LeslieAudit { n_max } => cmd_leslie_audit(ctx, *n_max),
        Command::Counterexample {
            a,
            delta,
            truncation,
            n_max,
        } => cmd_counterexample(ctx, *a, *delta, *truncation, *n_max),
        Command::Critical { n, threshold } => cmd_critical(ctx, *n, *threshold),
        Command::HilbertCompare {
            instances,
            p,
            pairs,
        } => cmd_hilbert_compare(ctx, *instances, *p, *pairs),
    }
}

fn cmd_lyapunov(ctx: &Ctx, n: Option<usize>, n_max: Option<usize>) -> CliResult<bool> {
    let spec = ctx.spec()?;
    let n = n.or(ctx.cfg.n).unwrap_or(10_000);
    let n_max = n_max.or(ctx.cfg.n_max).unwrap_or(30);
    let replicas = if ctx.replicas > 0 { ctx.replicas } else { 8 };
    let mu = SignedMeasure::uniform(spec.dim());
    // per-step trajectory on replica 0
    let mut stream = spec.replica_stream(0, roles::SEQUENTIAL);
    let (mut pi, _) = mu.normalize()?;
    let mut total = 0.0;
    let mut rows = Vec::with_capacity(n);
    for step in 1..=n {
        let m = stream.next_operator()?;
        let (next, inc) = projective_step(&pi, &m)?;
        let tv = tv_distance(&next, &pi)?;
        pi = next;
        total += inc;
        rows.push(vec![
            json!(step),
            num(inc),
            num(total / step as f64),
            num(tv),
        ]);
    }
    let trajectory = write_table(
        &ctx.out,
        "trajectory",
        ctx.format,
        &["n", "log_norm_increment", "running_lambda", "tv_to_previous"],
        &rows,
    )?;
    let seq = lyapunov_sequential_replicated(spec, &mu, n, replicas)?;
    let king = lyapunov_kingman(spec, n_max, replicas.max(16))?;
    let (integral, consistent) = if spec.is_iid() {
        let samples = sample_stationary(spec, 1e-10, 400, 2000)?;
        let int = lyapunov_integral(spec, &samples)?;
        let combined = (seq.std_error.unwrap_or(0.0).powi(2)
            + int.std_error.unwrap_or(0.0).powi(2))
        .sqrt()
        .max(1e-12);
        let ok = (seq.lambda - int.lambda).abs() <= 3.0 * combined;
        (Some(int), ok)
    } else {
        (None, true)
    };
    let summary = json!({
        "sequential": seq,
        "kingman": king,
        "integral": integral,
        "consistent": consistent,
    });
    write_json(&ctx.out, "lyapunov.json", &summary)?;
    println!("lambda_sequential  {}", fmt_f(seq.lambda));
    println!("lambda_kingman     {}", fmt_f(king.lambda));
    if let Some(int) = &integral {
        println!("lambda_integral    {}", fmt_f(int.lambda));
    }
    println!("consistent         {consistent}");
    println!("trajectory         {}", trajectory.display());
    Ok(consistent)
}

fn cmd_stationary(ctx: &Ctx, tol: Option<f64>, n_max: Option<usize>) -> CliResult<bool> {
    let spec = ctx.spec()?;
    let tol = tol.or(ctx.cfg.tol).unwrap_or(1e-8);
    let n_max = n_max.or(ctx.cfg.n_max).unwrap_or(500);
    let replicas = if ctx.replicas > 0 { ctx.replicas } else { 1000 };
    let samples = sample_stationary(spec, tol, n_max, replicas)?;
    let path = ctx.out.join("samples.jsonl");
    let mut out = String::new();
    for s in &samples {
        out.push_str(
            &json!({
                "weights": s.measure.weights(),
                "depth": s.depth,
                "tv_increment": s.tv_increment,
            })
            .to_string(),
        );
        out.push('\n');
    }
    fs::write(&path, out)?;
    let inv = invariance_check(spec, &samples, 200, 200)?;
    let mean_depth =
        samples.iter().map(|s| s.depth as f64).sum::<f64>() / samples.len() as f64;
    write_json(
        &ctx.out,
        "stationary.json",
        &json!({
            "replicas": samples.len(),
            "mean_depth": mean_depth,
            "invariance": inv,
        }),
    )?;
    println!("samples        {}", path.display());
    println!("mean_depth     {}", fmt_f(mean_depth));
    println!("invariance_p   {}", fmt_f(inv.p_value));
    Ok(inv.p_value > 0.01)
}

fn cmd_doeblin(ctx: &Ctx, n: Option<usize>, n_max: Option<usize>) -> CliResult<bool> {
    let spec = ctx.spec()?;
    let n = n.or(ctx.cfg.n).unwrap_or(12);
    let n_max = n_max.or(ctx.cfg.n_max).unwrap_or(n);
    let window = spec.stream().take_window(n)?;
    let triplet = best_triplet(&window, 0, n_max)?;
    let cert = triplet.certify(&window, 0)?;
    let series = GammaSeries::from_window(&window, n, n_max)?;
    write_json(
        &ctx.out,
        "triplet.json",
        &json!({
            "nu": triplet.nu.weights(),
            "c": triplet.c,
            "d": triplet.d,
            "gamma": triplet.gamma(),
            "horizon_certified": triplet.horizon_certified,
            "provenance": triplet.provenance,
            "certificate": cert,
        }),
    )?;
    write_json(
        &ctx.out,
        "gamma_series.json",
        &json!({
            "gammas": series.gammas,
            "eps": series.eps,
            "gamma_bar": series.gamma_bar().ok(),
            "contraction_factor": series.contraction_factor(0, n),
        }),
    )?;
    println!("c          {}", fmt_f(triplet.c));
    println!("d          {}", fmt_f(triplet.d));
    println!("gamma      {}", fmt_f(triplet.gamma()));
    println!("certified  {}", cert.passes(1e-12));
    Ok(cert.passes(1e-12) && triplet.gamma() > 0.0)
}

fn cmd_contract_check(ctx: &Ctx, instances: Option<usize>, n: Option<usize>) -> CliResult<bool> {
    let spec = ctx.spec()?;
    let instances = instances.or(ctx.cfg.instances).unwrap_or(50);
    let n = n.or(ctx.cfg.n).unwrap_or(6);
    let p = spec.dim();
    let mut records: Vec<serde_json::Value> = Vec::new();
    let mut all_pass = true;
    for i in 0..instances {
        let mut stream = spec.replica_stream(i as u64, ROLE_CHECKS);
        let window = stream.take_window(n)?;
        let series = GammaSeries::from_window(&window, n, n)?;
        let triplet = best_triplet(&window, 0, n)?;
        let mu1 = SignedMeasure::dirac(p, 0);
        let mu2 = SignedMeasure::dirac(p, p - 1);
        let mino = check_doeblin_minoration(&window, 0, n, &triplet.nu, triplet.gamma(), 1e-12)?;
        let proj = projective_contraction_check(&window, &mu1, &mu2, 0, n, &series.gammas)?;
        let mid = (n / 2).max(1);
        let growth = growth_ratio_check(&window, &mu1, &mu2, 0, mid, n, &series.gammas)?;
        let sand = sandwich_gamma_check(&window, &mu1, 0, n, series.gammas[0])?;
        for rec in [&mino, &proj, &growth] {
            all_pass &= rec.pass;
            let mut v = serde_json::to_value(rec).map_err(kernprod::Error::from)?;
            v["params"]["instance"] = json!(i);
            records.push(v);
        }
        all_pass &= sand.pass;
        records.push(json!({
            "check": "sandwich_gamma",
            "params": {"instance": i, "k": 0, "n": n},
            "lhs": sand.log_lower,
            "rhs": sand.log_upper,
            "slack": sand.log_mid - sand.log_lower,
            "pass": sand.pass,
        }));
    }
    let path = ctx.out.join("checks.jsonl");
    let mut out = String::new();
    for rec in &records {
        out.push_str(&rec.to_string());
        out.push('\n');
    }
    fs::write(&path, out)?;
    println!("checks     {}", records.len());
    println!("all_pass   {all_pass}");
    println!("artifacts  {}", path.display());
    Ok(all_pass)
}

fn cmd_leslie_audit(ctx: &Ctx, n_max: Option<usize>) -> CliResult<bool> {
    let spec = ctx.spec()?;
    let n_max = n_max.or(ctx.cfg.n_max).unwrap_or(10);
    let report = audit_conditions(spec, n_max)?;
    write_json(
        &ctx.out,
        "audit.json",
        &serde_json::to_value(&report).map_err(kernprod::Error::from)?,
    )?;
    println!("positivity        {}", report.positivity);
    println!("ratio_bound       {:?}", report.fertility_ratio_bound);
    println!("gamma_pos_prob    {}", fmt_f(report.gamma_pos_prob));
    println!("gamma_zero_suspect {}", report.gamma_zero_suspect);
    println!("all_pass          {}", report.all_pass());
    Ok(report.all_pass())
}

fn cmd_counterexample(
    ctx: &Ctx,
    a: Option<f64>,
    delta: Option<f64>,
    truncation: Option<usize>,
    n_max: Option<usize>,
) -> CliResult<bool> {
    let a = a.or(ctx.cfg.a).unwrap_or(9.0);
    let delta = delta.or(ctx.cfg.delta).unwrap_or(0.1);
    let truncation = truncation.or(ctx.cfg.truncation).unwrap_or(3200);
    let n_max = n_max.or(ctx.cfg.n_max).unwrap_or(60);
    let (_, report) = build_counterexample(a, delta, &BlockRule::SquareGap, truncation, n_max)?;
    let rows: Vec<Vec<serde_json::Value>> = report
        .rows
        .iter()
        .map(|r| vec![json!(r.n), num(r.lhs_log_ratio), num(r.rhs_log_bound)])
        .collect();
    let table = write_table(
        &ctx.out,
        "counterexample",
        ctx.format,
        &["n", "lhs_log_ratio", "rhs_log_bound"],
        &rows,
    )?;
    write_json(
        &ctx.out,
        "counterexample.json",
        &serde_json::to_value(&report).map_err(kernprod::Error::from)?,
    )?;
    let growth_ok = report
        .rows
        .iter()
        .all(|r| r.lhs_log_ratio >= r.rhs_log_bound - 1e-9);
    println!("criterion_value  {}", fmt_f(report.criterion_value));
    println!("criterion_met    {}", report.criterion_met);
    println!("run              start {} len {}", report.run_start, report.run_len);
    println!("growth_verified  {growth_ok}");
    println!("table            {}", table.display());
    Ok(report.criterion_met && growth_ok)
}

fn cmd_critical(ctx: &Ctx, n: Option<usize>, threshold: Option<f64>) -> CliResult<bool> {
    let spec = ctx.spec()?;
    let n = n.or(ctx.cfg.n).unwrap_or(10_000);
    let threshold = threshold.or(ctx.cfg.threshold).unwrap_or(5.0);
    let replicas = if ctx.replicas > 0 { ctx.replicas } else { 20 };
    let mu = SignedMeasure::uniform(spec.dim());
    let est = lyapunov_sequential_replicated(spec, &mu, (n / 5).max(1000), replicas)?;
    let centered = center_environment(spec, est.lambda)?;
    let mut stream = centered.replica_stream(0, ROLE_TRAJECTORY);
    let osc = oscillation_stats(&mut stream, &mu, n, threshold)?;
    let nh = if centered.is_iid() {
        Some(nh_diagnostic(&centered, replicas.max(32), n / 5, 1e-3)?)
    } else {
        None
    };
    let verdict = json!({
        "lambda_hat": est.lambda,
        "se": est.std_error,
        "osc": {
            "max": osc.max_s - osc.s_start,
            "min": osc.min_s - osc.s_start,
            "crossed_up": osc.first_up,
            "crossed_down": osc.first_down,
            "verdict": osc.verdict,
        },
        "nh": nh.as_ref().map(|r| json!({
            "verdict": r.verdict,
            "spread_exponent": r.spread_exponent,
        })),
    });
    write_json(&ctx.out, "critical.json", &verdict)?;
    println!("lambda_hat  {}", fmt_f(est.lambda));
    println!("osc         {:?}", osc.verdict);
    if let Some(r) = &nh {
        println!("nh          {:?}", r.verdict);
    }
    Ok(true)
}

fn cmd_hilbert_compare(
    ctx: &Ctx,
    instances: Option<usize>,
    p: Option<usize>,
    pairs: Option<usize>,
) -> CliResult<bool> {
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    let instances = instances.or(ctx.cfg.instances).unwrap_or(200);
    let p = p.or(ctx.cfg.p).unwrap_or(4);
    let pairs = pairs.or(ctx.cfg.pairs).unwrap_or(8);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let kernels: Vec<PositiveKernel> = (0..instances)
        .map(|_| {
            let entries = (0..p * p).map(|_| rng.random_range(0.05..2.0)).collect();
            PositiveKernel::dense(p, entries)
        })
        .collect::<kernprod::Result<_>>()?;
    let rows = compare_contractions(&kernels, pairs, ctx.seed)?;
    let table_rows: Vec<Vec<serde_json::Value>> = rows
        .iter()
        .map(|r| {
            vec![
                json!(r.instance_id),
                num(r.gamma),
                num(r.one_minus_gamma),
                num(r.tau_birkhoff),
                num(r.observed_tv_factor),
                num(r.observed_hilbert_factor),
            ]
        })
        .collect();
    let table = write_table(
        &ctx.out,
        "comparison",
        ctx.format,
        &[
            "instance_id",
            "gamma",
            "one_minus_gamma",
            "tau_birkhoff",
            "observed_tv_factor",
            "observed_hilbert_factor",
        ],
        &table_rows,
    )?;
    let ok = rows.iter().all(|r| {
        r.observed_tv_factor <= r.one_minus_gamma + 1e-9
            && r.observed_hilbert_factor <= r.tau_birkhoff + 1e-9
    });
    println!("instances  {}", rows.len());
    println!("bounds_ok  {ok}");
    println!("table      {}", table.display());
    Ok(ok)
}
