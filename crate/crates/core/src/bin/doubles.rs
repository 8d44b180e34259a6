use clap::{Args, Parser, Subcommand, ValueEnum};
use lie_doubles::brackets::{bracket, BracketKind};
use lie_doubles::config::{install_tolerances, Tolerances};
use lie_doubles::conserved::{drift_report, ConservedKind};
use lie_doubles::doubles::{PhasePoint, Space};
use lie_doubles::flows::{integrate, simulate_exact, Family, FlowSpec, ReducedSystem, Trajectory};
use lie_doubles::lie::{LieData, Variant};
use lie_doubles::observables::{make_trace_observable, WordSpec};
use lie_doubles::sample;
use lie_doubles::verify::{run_suite, Suite};
use lie_doubles::{Error, Result};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "doubles", version, about = "Master systems on the classical doubles of SU(n)")]
struct Cli {
    /// Tolerance overrides as JSON; takes precedence over LIE_DOUBLES_TOLERANCES.
    #[arg(long, global = true)]
    tolerances: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate an exact or reduced flow and write the trajectory.
    Simulate(SimulateArgs),
    /// Run a property suite and write its report.
    Verify(VerifyArgs),
    /// Evaluate a bracket of two trace words at a point.
    Bracket(BracketArgs),
    /// Drift of the conserved maps along a trajectory file.
    Invariants(InvariantsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormArg {
    Unreduced,
    Reduced,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    space: String,
    #[arg(long, value_enum, default_value = "unreduced")]
    form: FormArg,
    #[arg(long)]
    family: String,
    /// Word spec JSON, inline or @file.
    #[arg(long)]
    hamiltonian: String,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value = "su")]
    variant: String,
    #[arg(long, default_value_t = 1.0)]
    t_max: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Reduced equation set when a slice carries more than one.
    #[arg(long)]
    system: Option<String>,
    /// Initial point JSON; sampled from the seed when absent.
    #[arg(long)]
    initial: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Scalar diagnostics as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BracketArgs {
    #[arg(long)]
    kind: String,
    /// Word spec JSON, inline or @file.
    #[arg(long)]
    f: String,
    #[arg(long)]
    h: String,
    /// Point JSON, inline or @file.
    #[arg(long)]
    point: String,
    #[arg(long, default_value = "su")]
    variant: String,
}

#[derive(Args)]
struct InvariantsArgs {
    #[arg(long)]
    trajectory: PathBuf,
    /// Conserved map; every map defined on the trajectory's space when absent.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Inline JSON, or the contents of a file when prefixed with '@'.
fn json_arg(text: &str) -> Result<String> {
    match text.strip_prefix('@') {
        Some(path) => read(Path::new(path)),
        None => Ok(text.to_string()),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(what: &str, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Schema(format!("{what}: {e}")))
}

fn emit(value: &impl serde::Serialize, out: Option<&Path>) -> Result<()> {
    let sorted = serde_json::to_value(value).map_err(|e| Error::Contract(e.to_string()))?;
    let text = serde_json::to_string_pretty(&sorted).map_err(|e| Error::Contract(e.to_string()))? + "\n";
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Usage(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn simulate(a: &SimulateArgs) -> Result<bool> {
    let space: Space = a.space.parse()?;
    let family: Family = a.family.parse()?;
    let lie = LieData::new(a.n, a.variant.parse::<Variant>()?)?;
    let spec_json = json_arg(&a.hamiltonian)?;
    let word: WordSpec = parse_json("hamiltonian", &spec_json)?;
    let target = match a.form {
        FormArg::Unreduced => space,
        FormArg::Reduced => space.parent(),
    };
    let h = make_trace_observable(target, &word)?;
    let mut spec = FlowSpec::new(space, family, h, a.t_max, a.dt);
    spec.stride = a.stride;
    spec.seed = a.seed;
    spec.system = a.system.as_deref().map(str::parse::<ReducedSystem>).transpose()?;
    match a.form {
        FormArg::Unreduced if space.is_reduced() => return Err(Error::Schema(format!("{space} is a slice; use --form reduced"))),
        FormArg::Reduced if !space.is_reduced() => return Err(Error::Schema(format!("{space} is not a slice; use --form unreduced"))),
        FormArg::Reduced => {
            spec.reduced_system()?;
        }
        FormArg::Unreduced => {}
    }
    spec.steps()?;
    let p0 = match (&a.initial, a.seed) {
        (Some(path), _) => parse_json::<PhasePoint>("initial point", &read(path)?)?,
        (None, Some(seed)) => sample::point(&mut sample::rng(seed), &lie, space, 0.5, 0.3),
        (None, None) => return Err(Error::Schema("either --initial or --seed is required".into())),
    };
    let traj: Trajectory = match a.form {
        FormArg::Unreduced => simulate_exact(&lie, &spec, &p0)?,
        FormArg::Reduced => integrate(&lie, &spec, &p0)?,
    };
    if let Some(path) = &a.csv {
        std::fs::write(path, traj.diagnostics_csv()).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))?;
    }
    if let Some(abort) = &traj.abort {
        eprintln!("integration stopped at t = {}: {}", abort.t, abort.reason);
    }
    emit(&traj, a.out.as_deref())?;
    Ok(traj.abort.is_none())
}

fn verify(a: &VerifyArgs) -> Result<bool> {
    let suite: Suite = a.suite.parse()?;
    let report = run_suite(suite, a.seed);
    for r in report.failures() {
        eprintln!("FAIL {}: residual {:e} vs tolerance {:e}{}", r.name, r.max_residual, r.tolerance, r.error.as_deref().map(|e| format!(" ({e})")).unwrap_or_default());
    }
    emit(&report, a.out.as_deref())?;
    Ok(report.passed)
}

fn bracket_cmd(a: &BracketArgs) -> Result<bool> {
    let kind: BracketKind = a.kind.parse()?;
    let p: PhasePoint = parse_json("point", &json_arg(&a.point)?)?;
    if p.components.is_empty() {
        return Err(Error::Schema("point has no components".into()));
    }
    let lie = LieData::new(p.n(), a.variant.parse::<Variant>()?)?;
    p.expect(kind.space())?;
    let f = make_trace_observable(kind.space(), &parse_json("f", &json_arg(&a.f)?)?)?;
    let h = make_trace_observable(kind.space(), &parse_json("h", &json_arg(&a.h)?)?)?;
    let value = bracket(&lie, kind, &f, &h, &p)?;
    let reversed = bracket(&lie, kind, &h, &f, &p)?;
    let out = json!({
        "kind": kind.tag(),
        "value": value,
        "residuals": {
            "antisymmetry": (value + reversed).abs(),
            "structure": p.structure_defect(&lie),
        },
    });
    emit(&out, None)?;
    Ok(true)
}

fn invariants(a: &InvariantsArgs) -> Result<bool> {
    let traj: Trajectory = parse_json("trajectory", &read(&a.trajectory)?)?;
    let space = traj.points.first().map(|p| p.space).ok_or_else(|| Error::Schema("trajectory has no samples".into()))?;
    let kinds = match &a.kind {
        Some(k) => vec![k.parse::<ConservedKind>()?],
        None => ConservedKind::for_space(space),
    };
    if kinds.is_empty() {
        return Err(Error::Schema(format!("no conserved map is defined on {space}")));
    }
    let reports = kinds.into_iter().map(|k| drift_report(k, &traj.times, &traj.points)).collect::<Result<Vec<_>>>()?;
    emit(&reports, a.out.as_deref())?;
    Ok(true)
}

fn run(cli: &Cli) -> Result<bool> {
    if let Some(path) = &cli.tolerances {
        let t = Tolerances::from_json(&read(path)?).map_err(|e| Error::Schema(format!("tolerances: {e}")))?;
        install_tolerances(t);
    }
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Verify(a) => verify(a),
        Command::Bracket(a) => bracket_cmd(a),
        Command::Invariants(a) => invariants(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Schema(_) | Error::Usage(_) | Error::WrongSpace { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
