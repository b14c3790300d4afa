use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use lattice_spectra::eigen::{default_tol_eig, full_spectrum, spectral_checks, Spectrum};
use lattice_spectra::inequalities::{full_report, InequalityId, InequalityRecord};
use lattice_spectra::operator::DirichletOperator;
use lattice_spectra::proof::proof_records;
use lattice_spectra::region::{
    ball_region, box_region, random_connected_region, Metric, Point, Region,
};
use lattice_spectra::report::{records_csv, records_json, RunManifest, Summary, Tagged};
use lattice_spectra::search::{anneal, sweep_family, Family, SearchConfig, SearchError};

#[derive(Parser)]
#[command(
    name = "lattice-spectra",
    version,
    about = "Dirichlet Laplacian spectra on finite lattice regions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a region file.
    Gen(GenArgs),
    /// Check every inequality on a region and write a report.
    Verify(VerifyArgs),
    /// Anneal over connected regions to minimize one slack.
    Search(SearchArgs),
    /// Report on a family of regions over a range of sizes.
    Sweep(SweepArgs),
    /// Dump eigenvalues (and optionally eigenvectors) as JSON.
    Spectrum(SpectrumArgs),
    /// Dump the operator matrix in coordinate format.
    DumpMatrix(DumpArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    Box,
    Ball,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    L1,
    Linf,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    shape: Shape,
    #[arg(long)]
    n: usize,
    /// Box side lengths, comma separated.
    #[arg(long, value_delimiter = ',')]
    dims: Vec<usize>,
    #[arg(long)]
    radius: Option<u32>,
    #[arg(long, value_enum, default_value = "l1")]
    metric: MetricArg,
    /// Ball center, comma separated; defaults to the origin.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    center: Vec<i32>,
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    region: PathBuf,
    /// CSV report path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also check the intermediate identities of the gap proofs.
    #[arg(long)]
    proof_internals: bool,
    /// Largest k for the proof identities.
    #[arg(long, default_value_t = 10)]
    k_max: usize,
    /// Also write a JSON mirror next to the CSV.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    ineq: InequalityId,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    size: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    steps: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long, default_value_t = 0.995)]
    decay: f64,
    #[arg(long, default_value = "trace.csv")]
    out: PathBuf,
    /// Where to write the best region found.
    #[arg(long)]
    best_out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    family: Family,
    #[arg(long)]
    n: usize,
    /// Inclusive range `a..b`.
    #[arg(long)]
    sizes: String,
    /// Restrict to these inequalities, comma separated.
    #[arg(long, value_delimiter = ',')]
    ineq: Vec<InequalityId>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long)]
    region: PathBuf,
    #[arg(long)]
    vectors: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DumpArgs {
    #[arg(long)]
    region: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    /// Exit 1: some check did not hold.
    Check,
    /// Exit 2: bad input, bad flags or I/O.
    Usage(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = std::env::var("LATTICE_SPECTRA_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        // ignore failure: the pool can only be configured once per process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build_global();
    }
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Verify(a) => verify(a),
        Command::Search(a) => search(a),
        Command::Sweep(a) => sweep(a),
        Command::Spectrum(a) => spectrum(a),
        Command::DumpMatrix(a) => dump_matrix(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn usage<T>(msg: &str) -> Result<T, Failure> {
    Err(Failure::Usage(msg.to_string()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(Failure::from),
    }
}

fn read_region(path: &Path) -> Result<Region, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    Region::from_json(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn solve(region: Region) -> Result<(DirichletOperator, Spectrum), Failure> {
    let op = DirichletOperator::assemble(region)?;
    let spec = full_spectrum(&op)?;
    Ok((op, spec))
}

fn gen(a: GenArgs) -> Outcome {
    let region = match a.shape {
        Shape::Box => {
            if a.dims.len() != a.n {
                return usage("--dims needs one extent per dimension");
            }
            box_region(&a.dims)?
        }
        Shape::Ball => {
            let Some(radius) = a.radius else {
                return usage("--shape ball needs --radius");
            };
            let center = if a.center.is_empty() {
                Point::origin(a.n)
            } else {
                Point::new(a.center.clone())
            };
            let metric = match a.metric {
                MetricArg::L1 => Metric::L1,
                MetricArg::Linf => Metric::LInf,
            };
            ball_region(a.n, radius, &center, metric)?
        }
        Shape::Random => {
            let (Some(size), Some(seed)) = (a.size, a.seed) else {
                return usage("--shape random needs --size and --seed");
            };
            random_connected_region(a.n, size, seed)?
        }
    };
    emit(a.out.as_deref(), &region.to_json())?;
    if let Some(out) = a.out {
        let mut m = RunManifest::new(
            "gen",
            json!({ "n": a.n, "dims": a.dims, "radius": a.radius, "center": a.center, "size": a.size }),
        );
        m.seeds.extend(a.seed);
        m.outputs.push(out);
        m.write_sidecar()?;
    }
    Ok(())
}

fn verify(a: VerifyArgs) -> Outcome {
    if a.json && a.out.is_none() {
        return usage("--json needs --out");
    }
    let region = read_region(&a.region)?;
    let connected = region.is_connected();
    let (op, spec) = solve(region)?;
    let diag = spectral_checks(&spec, &op);
    if diag.max_residual > default_tol_eig(&op) || diag.max_orthonormality_defect > 1e-10 {
        eprintln!(
            "warning: eigen residual {:e}, orthonormality defect {:e}",
            diag.max_residual, diag.max_orthonormality_defect
        );
    }
    let mut records = full_report(spec.values(), connected);
    if a.proof_internals {
        records.extend(proof_records(&spec, a.k_max)?);
    }

    let region_id = a
        .region
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let rows: Vec<Tagged> = records
        .iter()
        .map(|r| Tagged {
            region_id: &region_id,
            record: r,
        })
        .collect();
    let mut outputs = Vec::new();
    if let Some(out) = &a.out {
        emit(Some(out), &records_csv(&rows))?;
        outputs.push(out.clone());
        if a.json {
            let path = out.with_extension("json");
            emit(Some(&path), &records_json(&rows))?;
            outputs.push(path);
        }
        let mut m = RunManifest::new(
            "verify",
            json!({ "proof_internals": a.proof_internals, "k_max": a.k_max }),
        );
        m.inputs.push(a.region.clone());
        m.outputs = outputs;
        m.write_sidecar()?;
    }

    println!("N {} fingerprint {:016x}", spec.len(), spec.fingerprint());
    let failing: Vec<Tagged> = rows.iter().copied().filter(|t| !t.record.pass).collect();
    if !failing.is_empty() {
        print!("{}", records_csv(&failing));
    }
    let summary = Summary::of(&records);
    println!("{}", summary.line());
    if summary.all_pass() {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn search(a: SearchArgs) -> Outcome {
    let mut config = SearchConfig::new(a.n, a.size, a.ineq, a.k, a.steps, a.seed);
    config.initial_temperature = a.t0;
    config.decay = a.decay;
    let trace = match anneal(&config) {
        Ok(t) => t,
        Err(
            e @ (SearchError::Config(_)
            | SearchError::InadmissibleK { .. }
            | SearchError::Unsupported(_)),
        ) => return usage(&e.to_string()),
        Err(e) => return Err(e.into()),
    };
    emit(Some(&a.out), &trace.to_csv())?;
    let mut m = RunManifest::new("search", serde_json::to_value(&config)?);
    m.seeds.push(a.seed);
    m.outputs.push(a.out.clone());
    if let Some(best) = &a.best_out {
        emit(Some(best), &trace.best_region.to_json())?;
        m.outputs.push(best.clone());
    }
    m.write_sidecar()?;
    println!("best slack {}", trace.best_slack);
    for (step, slack) in &trace.violations {
        eprintln!(
            "CRITICAL: {} at k = {} has slack {slack:e} at step {step}",
            a.ineq, a.k
        );
    }
    if trace.violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn parse_range(s: &str) -> Result<std::ops::RangeInclusive<usize>, Failure> {
    let bad = || Failure::Usage(format!("--sizes expects `a..b`, got `{s}`"));
    let (lo, hi) = s.split_once("..").ok_or_else(bad)?;
    let hi = hi.strip_prefix('=').unwrap_or(hi);
    Ok(lo.trim().parse().map_err(|_| bad())?..=hi.trim().parse().map_err(|_| bad())?)
}

fn sweep(a: SweepArgs) -> Outcome {
    let sizes = parse_range(&a.sizes)?;
    let filter = (!a.ineq.is_empty()).then_some(a.ineq.as_slice());
    let blocks = sweep_family(a.family, a.n, sizes, filter)?;
    let rows: Vec<Tagged> = blocks
        .iter()
        .flat_map(|b| {
            b.records.iter().map(move |r| Tagged {
                region_id: &b.region_id,
                record: r,
            })
        })
        .collect();
    emit(Some(&a.out), &records_csv(&rows))?;
    let ineqs: Vec<String> = a.ineq.iter().map(|i| i.to_string()).collect();
    let mut m = RunManifest::new(
        "sweep",
        json!({ "family": a.family.as_str(), "n": a.n, "sizes": a.sizes, "ineq": ineqs }),
    );
    m.outputs.push(a.out.clone());
    m.write_sidecar()?;
    let all: Vec<&InequalityRecord> = rows.iter().map(|t| t.record).collect();
    let summary = Summary::of(all);
    println!("{} blocks, {}", blocks.len(), summary.line());
    if summary.all_pass() {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn spectrum(a: SpectrumArgs) -> Outcome {
    let (_, spec) = solve(read_region(&a.region)?)?;
    emit(a.out.as_deref(), &spec.to_json(a.vectors))
}

fn dump_matrix(a: DumpArgs) -> Outcome {
    let op = DirichletOperator::assemble(read_region(&a.region)?)?;
    let mut buf = Vec::new();
    op.write_coo(&mut buf)?;
    emit(a.out.as_deref(), &String::from_utf8_lossy(&buf))
}
