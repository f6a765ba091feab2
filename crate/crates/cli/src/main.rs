use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use clarklab::asymptotics::{power_sweep, DEFAULT_N_SWEEP};
use clarklab::blaschke::{BlaschkeJson, FiniteBlaschke};
use clarklab::linalg::C64;
use clarklab::measure::{AtomicMeasure, MeasureJson, UnitPoint};
use clarklab::operators::{OperatorJson, OperatorMatrix};
use clarklab::scenarios::{
    example_clark_weight, example_crofoot, random_instance, verify_instance, Instance, InstanceJson, Kind, Suite,
    VerifyOptions, VerifyReport,
};

/// Clark measures, model-space multipliers and power-norm certificates for
/// rank-one perturbations of unitaries. Angles are fractions of a turn.
#[derive(Parser)]
#[command(name = "clarklab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clark measure of a Blaschke product at c.
    Clark {
        #[arg(long)]
        theta: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        c: f64,
        #[command(flatten)]
        out: Out,
    },
    /// Blaschke product whose Clark measure at 1 is the given measure.
    FromMeasure {
        #[arg(long)]
        mu: PathBuf,
        #[command(flatten)]
        out: Out,
    },
    /// Worked multiplier constructions.
    Example {
        #[command(subcommand)]
        which: ExampleCmd,
    },
    /// Run a verification suite on one instance or on a manifest of seeds.
    Verify(VerifyArgs),
    /// Sweep ‖Tⁿ‖ and ‖T⁻ⁿ‖.
    Sweep {
        /// Operator JSON, or an instance JSON (its T is used).
        #[arg(long)]
        operator: PathBuf,
        #[arg(long, default_value_t = DEFAULT_N_SWEEP)]
        n: usize,
        /// Where to write the (n, ‖Tⁿ‖, ‖T⁻ⁿ‖) table.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        out: Out,
    },
    /// Seeded random instance.
    Random {
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        kind: String,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        out: Out,
    },
}

#[derive(Subcommand)]
enum ExampleCmd {
    /// g = 1/k_λ between K_θ and K_ω, ω = z k*_λ / k_λ.
    Crofoot {
        #[command(flatten)]
        theta: ThetaArg,
        #[arg(long, allow_hyphen_values = true)]
        lambda_re: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        lambda_im: f64,
        #[arg(long, default_value_t = 0.0)]
        c: f64,
        #[command(flatten)]
        out: Out,
    },
    /// Multiplier carrying the weight |φ|⁻² on the Clark measure σ_c.
    ClarkWeight {
        #[command(flatten)]
        theta: ThetaArg,
        #[arg(long)]
        c: f64,
        /// Value of φ at the next atom of σ_c, as `re,im` or `re`; repeat per atom.
        #[arg(long, allow_hyphen_values = true)]
        phi: Vec<String>,
        #[command(flatten)]
        out: Out,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ThetaArg {
    /// Blaschke product JSON.
    #[arg(long)]
    theta: Option<PathBuf>,
    /// Use θ = zⁿ.
    #[arg(long)]
    z_power: Option<usize>,
}

#[derive(Args)]
struct Out {
    /// Write JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, conflicts_with = "manifest", required_unless_present = "manifest")]
    instance: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = DEFAULT_N_SWEEP)]
    n_sweep: usize,
    /// Quadrature nodes for L² norms on the circle (default: from the degrees).
    #[arg(long)]
    quad: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for manifests; the report does not depend on it.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    out: Out,
}

/// A seed list with the expected outcome of each entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    entries: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ManifestEntry {
    kind: String,
    degree: usize,
    seed: u64,
    expect_pass: bool,
}

#[derive(Debug, Serialize)]
struct ManifestOutcome {
    entry: ManifestEntry,
    matches_expectation: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<VerifyReport>,
}

#[derive(Debug, Serialize)]
struct ManifestReport {
    suite: Suite,
    pass: bool,
    first_failure: Option<String>,
    outcomes: Vec<ManifestOutcome>,
}

enum Failure {
    /// Bad input: exit 2.
    Input(String),
    /// A requested check failed: exit 1.
    Check(String),
}

impl From<clarklab::Error> for Failure {
    fn from(e: clarklab::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: malformed JSON: {e}", path.display())))
}

fn emit<T: Serialize>(value: &T, out: &Out) -> CmdResult {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Input(e.to_string()))?;
    text.push('\n');
    match &out.out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Input(e.to_string())),
    }
}

fn load_theta(arg: &ThetaArg) -> Result<FiniteBlaschke, Failure> {
    match (&arg.theta, arg.z_power) {
        (Some(p), _) => Ok(FiniteBlaschke::try_from(read_json::<BlaschkeJson>(p)?)?),
        (None, Some(n)) => Ok(FiniteBlaschke::z_power(n)?),
        (None, None) => Err(Failure::Input("give --theta or --z-power".into())),
    }
}

fn parse_complex(s: &str) -> Result<C64, Failure> {
    let bad = || Failure::Input(format!("cannot read {s:?} as re,im"));
    let mut parts = s.split(',').map(|p| p.trim().parse::<f64>());
    let re = parts.next().ok_or_else(bad)?.map_err(|_| bad())?;
    let im = match parts.next() {
        Some(p) => p.map_err(|_| bad())?,
        None => 0.0,
    };
    if parts.next().is_some() {
        return Err(bad());
    }
    Ok(C64::new(re, im))
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Clark { theta, c, out } => {
            let theta = FiniteBlaschke::try_from(read_json::<BlaschkeJson>(&theta)?)?;
            let mu = theta.clark_measure(UnitPoint::from_turns(c))?;
            emit(&MeasureJson::from(&mu), &out)
        }
        Command::FromMeasure { mu, out } => {
            let mu = AtomicMeasure::try_from(read_json::<MeasureJson>(&mu)?)?;
            let theta = FiniteBlaschke::from_clark_measure(&mu)?;
            emit(&BlaschkeJson::from(&theta), &out)
        }
        Command::Example { which } => match which {
            ExampleCmd::Crofoot { theta, lambda_re, lambda_im, c, out } => {
                let theta = load_theta(&theta)?;
                let m = example_crofoot(&theta, C64::new(lambda_re, lambda_im), UnitPoint::from_turns(c))?;
                emit(&Instance::Multiplier(m).to_json(), &out)
            }
            ExampleCmd::ClarkWeight { theta, c, phi, out } => {
                let theta = load_theta(&theta)?;
                let phi = phi.iter().map(|s| parse_complex(s)).collect::<Result<Vec<_>, _>>()?;
                let m = example_clark_weight(&theta, UnitPoint::from_turns(c), &phi)?;
                emit(&Instance::Multiplier(m).to_json(), &out)
            }
        },
        Command::Verify(args) => verify(args),
        Command::Sweep { operator, n, csv, out } => {
            let t = load_operator(&operator)?;
            let report = power_sweep(&t.matrix, n)?;
            if let Some(p) = csv {
                fs::write(&p, report.to_csv()).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
            }
            emit(&report, &out)
        }
        Command::Random { degree, kind, seed, out } => {
            let kind: Kind = kind.parse()?;
            emit(&random_instance(degree, kind, seed)?.to_json(), &out)
        }
    }
}

fn load_operator(path: &Path) -> Result<OperatorMatrix, Failure> {
    let value: serde_json::Value = read_json(path)?;
    if value.get("kind").is_some() {
        let inst: InstanceJson = serde_json::from_value(value)
            .map_err(|e| Failure::Input(format!("{}: malformed instance: {e}", path.display())))?;
        return Ok(match Instance::from_json(&inst)? {
            Instance::Multiplier(m) => m.t,
            Instance::Triangular(t) => OperatorMatrix::euclidean(t.t()),
        });
    }
    let j: OperatorJson = serde_json::from_value(value)
        .map_err(|e| Failure::Input(format!("{}: malformed operator: {e}", path.display())))?;
    Ok(OperatorMatrix::from_json(j)?)
}

fn summary(report: &VerifyReport) {
    let passed = report.checks.iter().filter(|c| c.pass).count();
    eprintln!(
        "{}: {}/{} checks pass{}",
        report.provenance,
        passed,
        report.checks.len(),
        report.first_failure.as_ref().map(|f| format!(", first failure: {f}")).unwrap_or_default()
    );
}

fn verify(args: VerifyArgs) -> CmdResult {
    let suite: Suite = args.suite.parse()?;
    let opts = VerifyOptions { n_sweep: args.n_sweep, quad: args.quad, seed: args.seed };
    if let Some(path) = &args.instance {
        let j: InstanceJson = read_json(path)?;
        let inst = Instance::from_json(&j)?;
        let report = verify_instance(&inst, suite, &opts);
        summary(&report);
        emit(&report, &args.out)?;
        return match &report.first_failure {
            None => Ok(()),
            Some(name) => Err(Failure::Check(name.clone())),
        };
    }
    let path = args.manifest.as_ref().ok_or_else(|| Failure::Input("give --instance or --manifest".into()))?;
    let manifest: Manifest = read_json(path)?;
    let mut kinds = Vec::with_capacity(manifest.entries.len());
    for e in &manifest.entries {
        kinds.push(e.kind.parse::<Kind>()?);
    }
    let outcomes = run_entries(&manifest.entries, &kinds, suite, &opts, args.jobs.max(1));
    for o in &outcomes {
        match (&o.report, &o.error) {
            (Some(r), _) => summary(r),
            (None, Some(e)) => eprintln!("{} degree {} seed {}: {e}", o.entry.kind, o.entry.degree, o.entry.seed),
            _ => {}
        }
    }
    let first_failure = outcomes.iter().find(|o| !o.matches_expectation).map(|o| {
        let inner = o
            .report
            .as_ref()
            .and_then(|r| r.first_failure.clone())
            .or_else(|| o.error.clone())
            .unwrap_or_else(|| "unexpected pass".into());
        format!("{}:{}:{}: {inner}", o.entry.kind, o.entry.degree, o.entry.seed)
    });
    let report = ManifestReport { suite, pass: first_failure.is_none(), first_failure: first_failure.clone(), outcomes };
    emit(&report, &args.out)?;
    match first_failure {
        None => Ok(()),
        Some(f) => Err(Failure::Check(f)),
    }
}

fn run_entry(entry: &ManifestEntry, kind: Kind, suite: Suite, opts: &VerifyOptions) -> ManifestOutcome {
    match random_instance(entry.degree, kind, entry.seed) {
        Ok(inst) => {
            let report = verify_instance(&inst, suite, opts);
            ManifestOutcome {
                entry: entry.clone(),
                matches_expectation: report.pass == entry.expect_pass,
                error: None,
                report: Some(report),
            }
        }
        Err(e) => ManifestOutcome {
            entry: entry.clone(),
            matches_expectation: !entry.expect_pass,
            error: Some(e.to_string()),
            report: None,
        },
    }
}

/// Entries are split into contiguous chunks, one per worker, and merged
/// back in manifest order.
fn run_entries(entries: &[ManifestEntry], kinds: &[Kind], suite: Suite, opts: &VerifyOptions, jobs: usize) -> Vec<ManifestOutcome> {
    if jobs == 1 || entries.len() < 2 {
        return entries.iter().zip(kinds).map(|(e, &k)| run_entry(e, k, suite, opts)).collect();
    }
    let chunk = entries.len().div_ceil(jobs);
    std::thread::scope(|s| {
        let handles: Vec<_> = entries
            .chunks(chunk)
            .zip(kinds.chunks(chunk))
            .map(|(es, ks)| s.spawn(move || es.iter().zip(ks).map(|(e, &k)| run_entry(e, k, suite, opts)).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(name)) => {
            eprintln!("check failed: {name}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
