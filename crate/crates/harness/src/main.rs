use std::path::PathBuf;
use std::process::ExitCode;

use census_core::aggregation::AggregateKind;
use census_core::protocol::Variant;
use census_harness::scenario::{builtin, MobilityKind, Scenario, ScenarioFile, SpeedRange, TokenRule, BUILTINS};
use census_harness::theory::{render, Table, TableParams};
use census_harness::{report, run_scenario, HarnessError, RunManifest};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "census", version, about = "Token-walk census simulator and experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a builtin scenario, a scenario file, a manifest, or a single configuration.
    Run(RunArgs),
    /// Run a single configuration over a list of values for one parameter.
    Sweep(SweepArgs),
    /// Print closed-form tables as CSV.
    Theory(TheoryArgs),
    /// Summarize a results directory into one line per grid cell.
    Report {
        dir: PathBuf,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Worker threads; 1 runs sequentially. Defaults to one per core.
    #[arg(long)]
    threads: Option<usize>,
    /// Seed base; trial r of every grid cell uses base + r.
    #[arg(long, env = "CENSUS_SEED")]
    seed: Option<u64>,
}

#[derive(Args, Clone)]
struct Single {
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value = "gradient")]
    variant: String,
    /// Fixed count, `sqrt`, `log2`, or a per-size list `a/b/c`.
    #[arg(long, default_value = "1")]
    tokens: String,
    #[arg(long, default_value_t = 10.0)]
    density: f64,
    #[arg(long, default_value = "rw2d")]
    mobility: String,
    /// Speed range in m/s, `min:max`.
    #[arg(long, default_value = "2:4")]
    speed: String,
    #[arg(long, default_value_t = 0.0)]
    loss: f64,
    #[arg(long)]
    reliable: bool,
    #[arg(long, default_value_t = 10)]
    repetitions: u32,
    /// Stop trials at this coverage fraction.
    #[arg(long)]
    partial: Option<f64>,
    #[arg(long, default_value = "count")]
    aggregate: String,
    /// Record coverage and transfer timelines.
    #[arg(long)]
    timeline: bool,
    /// Flood the final aggregate to every node after each trial.
    #[arg(long)]
    exfiltrate: bool,
}

impl Single {
    fn scenario(&self, name: &str) -> Result<Scenario, HarnessError> {
        let mut s = Scenario::single(name, self.variant.parse::<Variant>()?, self.n);
        s.tokens = self.tokens.parse::<TokenRule>()?;
        s.densities = vec![self.density];
        s.mobility = vec![self.mobility.parse::<MobilityKind>()?];
        s.speeds = vec![self.speed.parse::<SpeedRange>()?];
        s.losses = vec![self.loss];
        s.reliable = self.reliable;
        s.repetitions = self.repetitions;
        s.partial_stop = self.partial;
        s.aggregate = self.aggregate.parse::<AggregateKind>()?;
        s.timeline = self.timeline;
        s.exfiltrate = self.exfiltrate;
        Ok(s)
    }
}

#[derive(Args)]
struct RunArgs {
    /// Builtin scenario name.
    #[arg(long, conflicts_with_all = ["config", "manifest"])]
    scenario: Option<String>,
    /// Flat key = value scenario file.
    #[arg(long, conflicts_with = "manifest")]
    config: Option<PathBuf>,
    /// Re-run the scenario recorded in a manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Include the 2000 and 4000 node sizes in builtins.
    #[arg(long)]
    full: bool,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    single: Single,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepParam {
    N,
    Tokens,
    Density,
    Speed,
    Loss,
    Mobility,
    Variant,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    param: SweepParam,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<String>,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    single: Single,
}

#[derive(Args)]
struct TheoryArgs {
    #[arg(long, value_enum)]
    table: Table,
    #[arg(long, default_value_t = 0.95)]
    p: f64,
    #[arg(long, default_value_t = 10.0)]
    d: f64,
    #[arg(long, value_delimiter = ',', default_value = "125,250,500,1000,2000,4000")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    tokens: usize,
    #[arg(long, default_value_t = 0.6)]
    partial: f64,
    #[arg(long, default_value_t = 5)]
    trials: u32,
}

fn parse_all<T: std::str::FromStr>(values: &[String]) -> Result<Vec<T>, HarnessError>
where
    HarnessError: From<T::Err>,
{
    values.iter().map(|v| Ok(v.trim().parse::<T>()?)).collect()
}

fn parse_numbers<T: std::str::FromStr>(values: &[String], what: &str) -> Result<Vec<T>, HarnessError> {
    values
        .iter()
        .map(|v| {
            v.trim().parse().map_err(|_| HarnessError::InvalidScenario {
                field: "values",
                reason: format!("`{v}` is not {what}"),
            })
        })
        .collect()
}

fn sweep_scenario(args: &SweepArgs) -> Result<Scenario, HarnessError> {
    let mut s = args.single.scenario("sweep")?;
    let values = &args.values;
    match args.param {
        SweepParam::N => s.sizes = parse_numbers(values, "a size")?,
        SweepParam::Tokens => {
            let ks: Vec<usize> = parse_numbers(values, "a token count")?;
            s.sizes = vec![args.single.n; ks.len()];
            s.tokens = TokenRule::PerSize(ks);
        }
        SweepParam::Density => s.densities = parse_numbers(values, "a density")?,
        SweepParam::Loss => s.losses = parse_numbers(values, "a probability")?,
        SweepParam::Speed => s.speeds = parse_all(values)?,
        SweepParam::Mobility => s.mobility = parse_all(values)?,
        SweepParam::Variant => s.variants = parse_all(values)?,
    }
    Ok(s)
}

fn run_command(args: &RunArgs) -> Result<Scenario, HarnessError> {
    if let Some(name) = &args.scenario {
        return builtin(name, args.full);
    }
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.clone(), source })?;
        return ScenarioFile::parse(&text)?.build();
    }
    if let Some(path) = &args.manifest {
        return RunManifest::read(path)?.scenario.build();
    }
    args.single.scenario("single")
}

fn execute(mut scenario: Scenario, common: &Common) -> Result<(), HarnessError> {
    if let Some(seed) = common.seed {
        scenario.seed_base = seed;
    }
    let manifest = run_scenario(&scenario, &common.out, common.threads)?;
    println!(
        "{}: {} trials -> {}",
        scenario.name,
        manifest.seeds.len(),
        common.out.display()
    );
    for f in &manifest.outputs {
        println!("  {} ({} rows, sha256 {})", f.name, f.rows, f.sha256);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run_command(args).and_then(|s| execute(s, &args.common)),
        Command::Sweep(args) => sweep_scenario(args).and_then(|s| execute(s, &args.common)),
        Command::Theory(t) => {
            let params = TableParams {
                p: t.p,
                d: t.d,
                sizes: t.sizes.clone(),
                tokens: t.tokens,
                partial: t.partial,
                trials: t.trials,
            };
            render(t.table, &params).map(|text| print!("{text}"))
        }
        Command::Report { dir } => report::report(dir).map(|text| print!("{text}")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let HarnessError::UnknownScenario(_) = e {
                eprintln!("builtin scenarios: {}", BUILTINS.join(", "));
            }
            ExitCode::from(2)
        }
    }
}
