use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use postmarkov_cli::{
    coefficient_table, compare_scenarios, parse_scenario, run_scenario, write_table, CliError, Method, Preset, ScenarioConfig,
};

/// Post-Markovian master-equation solver.
#[derive(Parser)]
#[command(name = "postmarkov", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write its trajectory as CSV.
    Simulate {
        scenario: PathBuf,
        /// Overrides the scenario's output path; `-` means stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one scenario under several methods side by side.
    Compare {
        scenario: PathBuf,
        /// Comma-separated: markov, post_markov, post_markov_asymptotic, exact.
        #[arg(long, value_delimiter = ',', required = true)]
        methods: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate the kernel's memory coefficients.
    Coeffs {
        scenario: PathBuf,
        #[arg(long)]
        t_max: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a built-in scenario: fig1 (damped atom) or fig2 (spin-boson positivity).
    Preset {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(parse_scenario(&text)?)
}

/// `--out` wins over the scenario's own path; `-` forces stdout.
fn destination(out: Option<PathBuf>, cfg: Option<&ScenarioConfig>) -> Option<PathBuf> {
    match out {
        Some(p) if p.as_os_str() == "-" => None,
        Some(p) => Some(p),
        None => cfg.and_then(|c| c.output.as_ref()).map(PathBuf::from),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { scenario, out } => {
            let cfg = load(&scenario)?;
            let (_, table) = run_scenario(&cfg)?;
            write_table(&table, destination(out, Some(&cfg)).as_deref())
        }
        Command::Compare { scenario, methods, out } => {
            let cfg = load(&scenario)?;
            let methods = methods
                .iter()
                .map(|m| Method::parse(m.trim()).ok_or_else(|| CliError::Usage(format!("unknown method `{m}`"))))
                .collect::<Result<Vec<_>, _>>()?;
            let table = compare_scenarios(&cfg, &methods)?;
            write_table(&table, destination(out, Some(&cfg)).as_deref())
        }
        Command::Coeffs { scenario, t_max, out } => {
            let cfg = load(&scenario)?;
            let table = coefficient_table(&cfg, t_max)?;
            write_table(&table, destination(out, Some(&cfg)).as_deref())
        }
        Command::Preset { name, out } => {
            let preset = Preset::parse(&name).ok_or_else(|| CliError::Usage(format!("unknown preset `{name}`")))?;
            write_table(&preset.run()?, destination(out, None).as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("postmarkov: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
