//! `nonmp`: bounds, searches and certificates for non-m-positive dimensions.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nonmp_core::bounds::{default_x_grid, lemma_bound_scan_with, lemma_bound_with};
use nonmp_core::multipartite::{
    decomposable_witness_with, npt_certificate, npt_subspace_basis, three_qubit_example,
};
use nonmp_core::reproduce::{run_checks, CheckStatus};
use nonmp_core::sdp::{diamond_norm_with, SdpSettings};
use nonmp_core::search::search_nu_lower;
use nonmp_core::{catalog_map, DimVec, Error, HPMap, HermOp};
use serde::Serialize;
use serde_json::{json, Value};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug, Serialize)]
#[command(name = "nonmp", version, about = "Bounds and certificates for the non-m-positive dimension of positive maps")]
struct Cli {
    /// Relative tolerance for the interior-point solver.
    #[arg(long, global = true, default_value_t = 1e-8)]
    sdp_tol: f64,
    /// Iteration cap for the interior-point solver.
    #[arg(long, global = true, default_value_t = 150)]
    sdp_max_iter: usize,
    /// Emit the full JSON document instead of a summary line.
    #[arg(long, global = true)]
    json: bool,
    /// Write the JSON document to this file.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Upper bound on ν_m of the adjoint of a map.
    Bound(BoundArgs),
    /// Random search for a lower bound on the negative-eigenvalue count.
    Search(SearchArgs),
    /// Diamond norm of a map, or the diamond distance between two maps.
    Diamond(DiamondArgs),
    /// NPT subspaces and certificates.
    #[command(subcommand)]
    Npt(NptCommand),
    /// Decomposable witness with the most negative eigenvalues.
    Witness(WitnessArgs),
    /// Run every reproduction check and report pass/fail.
    Reproduce(ReproduceArgs),
}

#[derive(Args, Debug, Serialize)]
struct BoundArgs {
    /// Catalog label (`name[:param=value,...]`, `*` for the adjoint) or a map JSON file.
    #[arg(long)]
    map: String,
    #[arg(long)]
    m: usize,
    /// Evaluate the bound at a single x.
    #[arg(long, conflicts_with = "scan")]
    x: Option<f64>,
    /// Minimize over a grid of x (the default when --x is absent).
    #[arg(long)]
    scan: bool,
    /// Comma-separated grid for --scan.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
}

#[derive(Args, Debug, Serialize)]
struct SearchArgs {
    #[arg(long)]
    map: String,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    /// Comma-separated ranks cycled over trials.
    #[arg(long, value_delimiter = ',')]
    ranks: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "NONMP_THREADS")]
    threads: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
struct DiamondArgs {
    #[arg(long)]
    map: String,
    /// Second map; the distance `map - to` is measured.
    #[arg(long)]
    to: Option<String>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum NptCommand {
    /// Orthonormal basis of the NPT subspace.
    Subspace {
        #[arg(long, value_parser = parse_dims)]
        dims: DimVec,
    },
    /// Determinant certificate for a state supported on the NPT subspace.
    Certify {
        #[arg(long, value_parser = parse_dims)]
        dims: DimVec,
        /// State JSON file (`{"dims":..,"re":..,"im":..}`).
        #[arg(long)]
        state: PathBuf,
    },
}

#[derive(Args, Debug, Serialize)]
struct WitnessArgs {
    #[arg(long, value_parser = parse_dims, required_unless_present = "paper_example", conflicts_with = "paper_example")]
    dims: Option<DimVec>,
    /// The fixed three-qubit example.
    #[arg(long)]
    paper_example: bool,
}

#[derive(Args, Debug, Serialize)]
struct ReproduceArgs {
    /// Run only checks whose id, tag or title matches.
    #[arg(long)]
    only: Option<String>,
}

fn parse_dims(s: &str) -> Result<DimVec, String> {
    let dims = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|_| format!("`{p}` is not a dimension")))
        .collect::<Result<Vec<_>, _>>()?;
    DimVec::new(dims).map_err(|e| e.to_string())
}

enum Failure {
    Validation(String),
    Solver(String),
    Checks(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Solver { .. } | Error::NumericalFailure(_) => Failure::Solver(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

fn load_map(label: &str) -> Result<HPMap, Failure> {
    if label.ends_with(".json") {
        let text = fs::read_to_string(label).map_err(|e| Failure::Validation(format!("{label}: {e}")))?;
        return serde_json::from_str(&text).map_err(|e| Failure::Validation(format!("{label}: {e}")));
    }
    Ok(catalog_map(label)?)
}

/// Result payload plus a one-line human summary.
struct Output {
    result: Value,
    summary: String,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn cmd_bound(args: &BoundArgs, settings: &SdpSettings) -> Result<Output, Failure> {
    let map = load_map(&args.map)?;
    let report = match args.x {
        Some(x) => lemma_bound_with(&map, args.m, x, settings)?,
        None => {
            let grid = args.grid.clone().unwrap_or_else(|| default_x_grid(map.n_in()));
            lemma_bound_scan_with(&map, args.m, &grid, settings)?
        }
    };
    let summary = format!("{} m={}: bound {} ({:?})", report.map, report.m, report.bound, report.method);
    Ok(Output { result: to_value(&report), summary })
}

fn cmd_search(args: &SearchArgs) -> Result<Output, Failure> {
    let map = load_map(&args.map)?;
    let report = search_nu_lower(&map, args.m, args.trials, args.ranks.as_deref(), args.seed, args.threads)?;
    let summary = format!(
        "{} m={}: best {} at trial {} of {}",
        report.map, report.m, report.best_neg_count, report.best_trial, report.trials
    );
    Ok(Output { result: to_value(&report), summary })
}

fn cmd_diamond(args: &DiamondArgs, settings: &SdpSettings) -> Result<Output, Failure> {
    let mut map = load_map(&args.map)?;
    if let Some(other) = &args.to {
        map = map.combine(1.0, &load_map(other)?, -1.0)?;
    }
    let res = diamond_norm_with(&map, settings)?;
    let summary = format!("diamond norm {:.10} ({})", res.objective, res.status);
    Ok(Output { result: to_value(&res), summary })
}

fn cmd_npt(cmd: &NptCommand) -> Result<Output, Failure> {
    match cmd {
        NptCommand::Subspace { dims } => {
            let basis = npt_subspace_basis(dims)?;
            let summary = format!("NPT subspace of {:?}: dimension {}", dims.as_slice(), basis.dim());
            Ok(Output { result: json!({ "dimension": basis.dim(), "basis": basis }), summary })
        }
        NptCommand::Certify { dims, state } => {
            let text = fs::read_to_string(state).map_err(|e| Failure::Validation(format!("{}: {e}", state.display())))?;
            let rho: HermOp = serde_json::from_str(&text).map_err(|e| Failure::Validation(e.to_string()))?;
            if rho.dims() != dims {
                return Err(Failure::Validation(format!(
                    "state has dims {:?}, expected {:?}",
                    rho.dims().as_slice(),
                    dims.as_slice()
                )));
            }
            let cert = npt_certificate(&rho)?;
            let summary = format!("NPT across subsystem {} (det {:.3e})", cert.subsystem, cert.determinant);
            Ok(Output { result: to_value(&cert), summary })
        }
    }
}

fn cmd_witness(args: &WitnessArgs, settings: &SdpSettings) -> Result<Output, Failure> {
    if args.paper_example {
        let ex = three_qubit_example()?;
        let eigs = ex.witness.eigenvalues()?;
        let summary = format!("eigenvalues {eigs:?}");
        return Ok(Output { result: json!({ "witness": ex.witness, "eigenvalues": eigs }), summary });
    }
    let dims = args.dims.as_ref().expect("clap requires --dims");
    let res = decomposable_witness_with(dims, settings)?;
    let summary = format!("c_opt {:.8}, {} negative eigenvalues", res.c_opt, res.neg_count);
    Ok(Output { result: to_value(&res), summary })
}

fn cmd_reproduce(args: &ReproduceArgs) -> Result<Output, Failure> {
    let outcomes = run_checks(args.only.as_deref());
    if outcomes.is_empty() {
        return Err(Failure::Validation(format!("no check matches `{}`", args.only.as_deref().unwrap_or(""))));
    }
    let lines: Vec<String> = outcomes.iter().map(|o| o.line()).collect();
    let failed: Vec<&str> = outcomes.iter().filter(|o| o.status == CheckStatus::Fail).map(|o| o.id.as_str()).collect();
    let result = json!({ "checks": outcomes, "failed": failed });
    if failed.is_empty() {
        Ok(Output { result, summary: lines.join("\n") })
    } else {
        Err(Failure::Checks(format!("{}\nfailed checks: {failed:?}", lines.join("\n"))))
    }
}

fn run(cli: &Cli) -> Result<Output, Failure> {
    if !(cli.sdp_tol > 0.0) || cli.sdp_max_iter == 0 {
        return Err(Failure::Validation("--sdp-tol and --sdp-max-iter must be positive".into()));
    }
    let settings = SdpSettings { tol: cli.sdp_tol, max_iter: cli.sdp_max_iter };
    match &cli.command {
        Command::Bound(a) => cmd_bound(a, &settings),
        Command::Search(a) => cmd_search(a),
        Command::Diamond(a) => cmd_diamond(a, &settings),
        Command::Npt(c) => cmd_npt(c),
        Command::Witness(a) => cmd_witness(a, &settings),
        Command::Reproduce(a) => cmd_reproduce(a),
    }
}

fn emit(cli: &Cli, out: &Output) -> Result<(), Failure> {
    let doc = json!({ "version": VERSION, "config": cli, "result": out.result });
    let text = serde_json::to_string_pretty(&doc).expect("JSON document");
    if let Some(path) = &cli.output {
        fs::write(path, &text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
    }
    if cli.json {
        println!("{text}");
    } else {
        println!("{}", out.summary);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli).and_then(|out| emit(&cli, &out)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Checks(msg)) => {
            println!("{msg}");
            ExitCode::from(1)
        }
    }
}
