//! Command-line driver: instance ingestion, solver dispatch, and artifact
//! emission with reproducibility metadata.
//!
//! Every run prints a JSON envelope `{meta, result}` to stdout; `meta` embeds
//! the version, the canonicalized run configuration, the rng seed, and the
//! wall time. The `result` member is byte-deterministic for a fixed
//! configuration and seed; only `meta.wall_ms` varies between runs.
//!
//! Exit codes: 0 success, 1 failed certificate verdicts (verify), 2 usage or
//! input errors, 3 solver non-convergence.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use cheeger_core::cheeger::{cheeger_dinkelbach, cheeger_enumerate, DEFAULT_DINKELBACH_TOL};
use cheeger_core::eigen::{lambda_1p, EigenOptions};
use cheeger_core::error::Error;
use cheeger_core::experiments::{
    sweep_p, sweep_phi, verify_certificates, write_csv, SweepOptions, SweepReport,
};
use cheeger_core::graph::DirichletGraph;
use cheeger_core::io::{chamber_map_pgm, load_instance, parse_labels_json};
use cheeger_core::partition::{
    brute_force, report_for_labeling, solve_h, solve_lp, ObjectiveKind, SolveHOptions,
    SolveLpOptions, SolveReport,
};
use cheeger_core::phi::PhiSpec;

#[derive(Parser)]
#[command(name = "cheeger", version, about = "Cheeger partitions and p-spectra on weighted graphs")]
struct Cli {
    /// Worker thread cap; overrides the CHEEGER_THREADS variable (0 = auto).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct InstanceArgs {
    /// Instance file: .json (vertex-edge or grid schema) or .pgm mask.
    instance: PathBuf,
    /// Mesh size for PGM masks (ignored for JSON instances).
    #[arg(long)]
    mesh: Option<f64>,
}

#[derive(Args, Clone)]
struct OutputArgs {
    /// Also write the primary artifact to this path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Artifact format for --out: the JSON envelope, sweep CSV, or a PGM
    /// chamber map (grid clusterings only).
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Pgm,
}

impl Format {
    fn name(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Pgm => "pgm",
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Objective {
    /// Perimeter/volume ratios composed by the reference function.
    H,
    /// Per-chamber Cheeger constants.
    L11,
    /// Per-chamber first p-eigenvalues.
    Lp,
}

impl Objective {
    fn name(self) -> &'static str {
        match self {
            Objective::H => "h",
            Objective::L11 => "l11",
            Objective::Lp => "lp",
        }
    }

    fn kind(self, p: Option<f64>) -> Result<ObjectiveKind, CliError> {
        match (self, p) {
            (Objective::H, None) => Ok(ObjectiveKind::H),
            (Objective::L11, None) => Ok(ObjectiveKind::L11),
            (Objective::Lp, Some(p)) => Ok(ObjectiveKind::Lp { p }),
            (Objective::Lp, None) => Err(CliError::usage("--objective lp requires --p")),
            (_, Some(_)) => Err(CliError::usage("--p only applies to --objective lp")),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Exact Cheeger constant of the whole domain.
    SolveH {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Enumerate all vertex subsets instead of running Dinkelbach.
        #[arg(long)]
        exact_enum: bool,
        #[arg(long, default_value_t = DEFAULT_DINKELBACH_TOL)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Heuristic N-chamber minimization of a reference-function objective.
    SolveCluster {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long)]
        n: u32,
        /// Reference function, e.g. pnorm:2, pnorm:inf, wsum:1,1, maxonly.
        #[arg(long)]
        phi: String,
        #[arg(long, value_enum, default_value_t = Objective::H)]
        objective: Objective,
        /// Exponent for the spectral objective.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 16)]
        restarts: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Exhaustive global minimizer (instances under the enumeration cap).
    Oracle {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        phi: String,
        #[arg(long, value_enum, default_value_t = Objective::H)]
        objective: Objective,
        #[arg(long)]
        p: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// First p-eigenpair of the domain or of one chamber of a labeling.
    Eigen {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long)]
        p: f64,
        /// Labeling JSON restricting the solve to one chamber.
        #[arg(long, requires = "chamber")]
        chamber_file: Option<PathBuf>,
        /// Chamber index within --chamber-file (1-based).
        #[arg(long, requires = "chamber_file")]
        chamber: Option<u32>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Include the eigenfunction in the output.
        #[arg(long)]
        with_u: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Spectral sweep toward p = 1 against the ratio-objective reference.
    SweepP {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        phi: String,
        /// Strictly decreasing exponents, e.g. 2,1.5,1.2,1.1,1.05.
        #[arg(long)]
        p_list: String,
        #[arg(long, default_value_t = 8)]
        restarts: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Ratio-objective sweep across the q-norm family, ending at inf.
    SweepPhi {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long)]
        n: u32,
        /// Strictly increasing norms ending at inf, e.g. 1,2,4,8,64,inf.
        #[arg(long)]
        q_list: String,
        #[arg(long, default_value_t = 8)]
        restarts: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Recompute and judge every certificate of a solve report.
    Verify {
        /// Solve report JSON produced by solve-cluster or oracle.
        report: PathBuf,
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
}

/// Canonicalized run configuration; recorded verbatim in every artifact.
struct RunConfig {
    command: &'static str,
    instance: String,
    n: u32,
    phi: String,
    objective: String,
    p: Option<f64>,
    list: Vec<f64>,
    restarts: u32,
    seed: u64,
    tol: f64,
    out: Option<String>,
    format: Format,
}

impl RunConfig {
    fn new(command: &'static str, instance: &InstanceArgs, output: &OutputArgs) -> Self {
        Self {
            command,
            instance: instance.instance.display().to_string(),
            n: 0,
            phi: "-".into(),
            objective: "-".into(),
            p: None,
            list: Vec::new(),
            restarts: 0,
            seed: 0,
            tol: 0.0,
            out: output.out.as_ref().map(|p| p.display().to_string()),
            format: output.format,
        }
    }

    fn canonical(&self) -> String {
        let fmt_f64 = |x: f64| {
            if x == f64::INFINITY {
                "inf".to_string()
            } else {
                format!("{x}")
            }
        };
        let mut s = format!("command={} instance={}", self.command, self.instance);
        let _ = write!(s, " n={} phi={} objective={}", self.n, self.phi, self.objective);
        let _ = write!(s, " p={}", self.p.map_or("-".into(), fmt_f64));
        let list = if self.list.is_empty() {
            "-".to_string()
        } else {
            self.list.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(",")
        };
        let _ = write!(s, " list={list}");
        let _ = write!(s, " restarts={} seed={} tol={}", self.restarts, self.seed, fmt_f64(self.tol));
        let _ = write!(s, " out={}", self.out.as_deref().unwrap_or("-"));
        let _ = write!(s, " format={}", self.format.name());
        s
    }
}

#[derive(Debug)]
struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self { message: message.into(), code: 2 }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonConvergence { .. } => 3,
            _ => 2,
        };
        Self { message: e.to_string(), code }
    }
}

fn main() {
    let cli = Cli::parse();
    configure_threads(cli.threads);
    let started = Instant::now();
    match run(cli.command, started) {
        Ok(code) => std::process::exit(i32::from(code)),
        Err(e) => {
            eprintln!("error: {}", e.message);
            std::process::exit(i32::from(e.code));
        }
    }
}

/// Thread cap: the --threads flag, else CHEEGER_THREADS, else auto. 0 = auto.
fn configure_threads(flag: Option<usize>) {
    let cap = flag.or_else(|| {
        std::env::var("CHEEGER_THREADS").ok().and_then(|v| v.parse().ok())
    });
    if let Some(k) = cap {
        if k > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
        }
    }
}

fn parse_list(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|tok| {
            let tok = tok.trim();
            if tok.eq_ignore_ascii_case("inf") || tok.eq_ignore_ascii_case("infinity") {
                Ok(f64::INFINITY)
            } else {
                tok.parse::<f64>()
                    .map_err(|_| CliError::usage(format!("bad list entry {tok:?}")))
            }
        })
        .collect()
}

fn load(args: &InstanceArgs) -> Result<DirichletGraph, CliError> {
    Ok(load_instance(&args.instance, args.mesh)?)
}

fn parse_phi(text: &str, n: u32) -> Result<PhiSpec, CliError> {
    Ok(PhiSpec::parse(text, n)?)
}

/// Emits the envelope to stdout and the requested artifact to --out, then
/// returns the exit code.
fn emit(
    config: &RunConfig,
    started: Instant,
    result: serde_json::Value,
    artifact: Option<Vec<u8>>,
    exit: u8,
) -> Result<u8, CliError> {
    let envelope = json!({
        "meta": {
            "version": env!("CARGO_PKG_VERSION"),
            "config": config.canonical(),
            "seed": config.seed,
            "wall_ms": started.elapsed().as_millis() as u64,
        },
        "result": result,
    });
    let text = serde_json::to_string_pretty(&envelope).map_err(Error::from)?;
    println!("{text}");
    if let Some(path) = &config.out {
        let bytes = match (config.format, artifact) {
            (Format::Json, _) => text.into_bytes(),
            (_, Some(bytes)) => bytes,
            (other, None) => {
                return Err(CliError::usage(format!(
                    "--format {} is not available for this command",
                    other.name()
                )))
            }
        };
        fs::write(path, bytes).map_err(Error::from)?;
    }
    Ok(exit)
}

fn cheeger_result_json(g: &DirichletGraph, h: f64, set: &[bool], iterations: usize) -> serde_json::Value {
    let ids: Vec<u64> = set
        .iter()
        .enumerate()
        .filter_map(|(v, &inside)| inside.then(|| g.ids()[v]))
        .collect();
    json!({ "h": h, "set": ids, "iterations": iterations })
}

fn report_artifact(
    g: &DirichletGraph,
    report: &SolveReport,
    format: Format,
) -> Result<Option<Vec<u8>>, CliError> {
    match format {
        Format::Json => Ok(None),
        Format::Pgm => Ok(Some(chamber_map_pgm(g, &report.labeling)?)),
        Format::Csv => Err(CliError::usage("--format csv only applies to sweep commands")),
    }
}

fn sweep_result(
    config: &RunConfig,
    started: Instant,
    report: &SweepReport,
) -> Result<u8, CliError> {
    let mut csv_bytes = Vec::new();
    write_csv(&report.rows, &mut csv_bytes)?;
    let artifact = match config.format {
        Format::Csv => Some(csv_bytes),
        Format::Json => None,
        Format::Pgm => return Err(CliError::usage("--format pgm does not apply to sweeps")),
    };
    let result = serde_json::to_value(report).map_err(Error::from)?;
    emit(config, started, result, artifact, 0)
}

fn run(command: Command, started: Instant) -> Result<u8, CliError> {
    match command {
        Command::SolveH { instance, exact_enum, tol, output } => {
            let mut config = RunConfig::new("solve-h", &instance, &output);
            config.tol = tol;
            config.objective = if exact_enum { "enumerate".into() } else { "dinkelbach".into() };
            let g = load(&instance)?;
            let r = if exact_enum {
                cheeger_enumerate(&g)?
            } else {
                cheeger_dinkelbach(&g, tol)?
            };
            let result = cheeger_result_json(&g, r.h, &r.set, r.iterations);
            emit(&config, started, result, None, 0)
        }
        Command::SolveCluster { instance, n, phi, objective, p, restarts, seed, tol, output } => {
            let mut config = RunConfig::new("solve-cluster", &instance, &output);
            config.n = n;
            config.phi = phi.clone();
            config.objective = objective.name().into();
            config.p = p;
            config.restarts = restarts;
            config.seed = seed;
            config.tol = tol;
            let g = load(&instance)?;
            let phi = parse_phi(&phi, n)?;
            let kind = objective.kind(p)?;
            let report = match kind {
                ObjectiveKind::H => {
                    let opts = SolveHOptions { restarts, seed, tol, ..SolveHOptions::default() };
                    solve_h(&g, n, &phi, &opts)?
                }
                ObjectiveKind::L11 => {
                    // The ratio solver drives the search; the report rescores
                    // its clustering by per-chamber Cheeger constants.
                    let opts = SolveHOptions { restarts, seed, tol, ..SolveHOptions::default() };
                    let base = solve_h(&g, n, &phi, &opts)?;
                    report_for_labeling(
                        &g,
                        &base.labeling,
                        ObjectiveKind::L11,
                        &phi,
                        &EigenOptions::default(),
                        seed,
                    )?
                }
                ObjectiveKind::Lp { p } | ObjectiveKind::LambdaP { p } => {
                    let opts = SolveLpOptions {
                        restarts: restarts.min(8),
                        tol,
                        seed,
                        ..SolveLpOptions::default()
                    };
                    solve_lp(&g, n, p, &phi, &opts)?
                }
            };
            let artifact = report_artifact(&g, &report, config.format)?;
            let exit = if report.converged { 0 } else { 3 };
            let result = serde_json::to_value(&report).map_err(Error::from)?;
            emit(&config, started, result, artifact, exit)
        }
        Command::Oracle { instance, n, phi, objective, p, output } => {
            let mut config = RunConfig::new("oracle", &instance, &output);
            config.n = n;
            config.phi = phi.clone();
            config.objective = objective.name().into();
            config.p = p;
            let g = load(&instance)?;
            let phi = parse_phi(&phi, n)?;
            let kind = objective.kind(p)?;
            let report = brute_force(&g, n, &phi, kind)?;
            let artifact = report_artifact(&g, &report, config.format)?;
            let result = serde_json::to_value(&report).map_err(Error::from)?;
            emit(&config, started, result, artifact, 0)
        }
        Command::Eigen { instance, p, chamber_file, chamber, tol, with_u, output } => {
            let mut config = RunConfig::new("eigen", &instance, &output);
            config.p = Some(p);
            config.tol = tol;
            let g = load(&instance)?;
            let opts = EigenOptions { tol, ..EigenOptions::default() };
            let (pair, u_full) = match (chamber_file, chamber) {
                (Some(path), Some(index)) => {
                    let labels = parse_labels_json(&fs::read_to_string(&path).map_err(Error::from)?, &g)?;
                    let members = labels.chamber_members(index);
                    if !members.iter().any(|&x| x) {
                        return Err(CliError::usage(format!("chamber {index} is empty")));
                    }
                    let sub = g.restrict(&members)?;
                    let pair = lambda_1p(&sub.graph, p, &opts)?;
                    let mut u = vec![0.0; g.len()];
                    for (i, &parent) in sub.parent_index.iter().enumerate() {
                        u[parent] = pair.u[i];
                    }
                    (pair, u)
                }
                _ => {
                    let pair = lambda_1p(&g, p, &opts)?;
                    let u = pair.u.clone();
                    (pair, u)
                }
            };
            let mut result = json!({
                "lambda": pair.lambda,
                "residual": pair.residual_inf,
                "iterations": pair.iterations,
                "converged": pair.converged,
            });
            if with_u {
                result["u"] = serde_json::to_value(&u_full).map_err(Error::from)?;
            }
            let exit = if pair.converged { 0 } else { 3 };
            emit(&config, started, result, None, exit)
        }
        Command::SweepP { instance, n, phi, p_list, restarts, seed, tol, output } => {
            let mut config = RunConfig::new("sweep-p", &instance, &output);
            config.n = n;
            config.phi = phi.clone();
            config.objective = "lp".into();
            config.list = parse_list(&p_list)?;
            config.restarts = restarts;
            config.seed = seed;
            config.tol = tol;
            let g = load(&instance)?;
            let phi = parse_phi(&phi, n)?;
            let opts = SweepOptions { seed, restarts, tol };
            let report = sweep_p(&g, n, &phi, &config.list, &opts)?;
            sweep_result(&config, started, &report)
        }
        Command::SweepPhi { instance, n, q_list, restarts, seed, tol, output } => {
            let mut config = RunConfig::new("sweep-phi", &instance, &output);
            config.n = n;
            config.objective = "h".into();
            config.list = parse_list(&q_list)?;
            config.restarts = restarts;
            config.seed = seed;
            config.tol = tol;
            let g = load(&instance)?;
            let opts = SweepOptions { seed, restarts, tol };
            let report = sweep_phi(&g, n, &config.list, &opts)?;
            sweep_result(&config, started, &report)
        }
        Command::Verify { report, instance, output } => {
            let mut config = RunConfig::new("verify", &instance, &output);
            config.phi = report.display().to_string();
            let g = load(&instance)?;
            let text = fs::read_to_string(&report).map_err(Error::from)?;
            // Accept either a bare report or a full output envelope.
            let mut value: serde_json::Value = serde_json::from_str(&text).map_err(Error::from)?;
            if let Some(inner) = value.get_mut("result") {
                value = inner.take();
            }
            let report: SolveReport = serde_json::from_value(value).map_err(Error::from)?;
            let summary = verify_certificates(&g, &report)?;
            let exit = u8::from(!summary.passed);
            let result = serde_json::to_value(&summary).map_err(Error::from)?;
            emit(&config, started, result, None, exit)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_config_is_stable_and_complete() {
        let cli = Cli::try_parse_from([
            "cheeger", "solve-cluster", "inst.json", "--n", "2", "--phi", "pnorm:inf",
            "--restarts", "16", "--seed", "7", "--tol", "1e-9",
        ])
        .unwrap();
        let Command::SolveCluster { instance, n, phi, objective, p, restarts, seed, tol, output } =
            cli.command
        else {
            panic!("wrong command");
        };
        let mut config = RunConfig::new("solve-cluster", &instance, &output);
        config.n = n;
        config.phi = phi;
        config.objective = objective.name().into();
        config.p = p;
        config.restarts = restarts;
        config.seed = seed;
        config.tol = tol;
        assert_eq!(
            config.canonical(),
            "command=solve-cluster instance=inst.json n=2 phi=pnorm:inf objective=h \
             p=- list=- restarts=16 seed=7 tol=0.000000001 out=- format=json"
        );
    }

    #[test]
    fn list_parsing_handles_inf() {
        assert_eq!(parse_list("1,2,inf").unwrap(), vec![1.0, 2.0, f64::INFINITY]);
        assert!(parse_list("1,x").is_err());
    }

    #[test]
    fn lp_objective_requires_p() {
        assert!(Objective::Lp.kind(None).is_err());
        assert!(Objective::H.kind(Some(2.0)).is_err());
        assert_eq!(Objective::H.kind(None).unwrap(), ObjectiveKind::H);
    }
}
