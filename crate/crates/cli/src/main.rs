use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cli::{
    cmd_cliffs, cmd_compare, cmd_pseudo_inspect, cmd_train, run_dir, selftest, write_inspect_csv, CliError,
    ExperimentConfig, RUN_ROOT_ENV,
};
use datasets::{CliffThresholds, ColumnMap};

#[derive(Parser)]
#[command(name = "semimol", version, about = "Semi-supervised molecular property training")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one strategy and write a run directory.
    Train {
        config: PathBuf,
        /// Overrides such as `train.gamma=0.85` or `strategy=supervised`.
        overrides: Vec<String>,
        /// Run directory; defaults to <run root>/<run name>.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, env = RUN_ROOT_ENV, default_value = "runs")]
        run_root: PathBuf,
    },
    /// Tabulate test scores of finished runs with per-strategy medians.
    Compare {
        #[arg(required = true, num_args = 1..)]
        runs: Vec<PathBuf>,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// List activity-cliff pairs in a labeled CSV.
    Cliffs {
        data: PathBuf,
        #[arg(long, default_value_t = CliffThresholds::default().similarity)]
        similarity: f64,
        #[arg(long, default_value_t = CliffThresholds::default().potency)]
        potency: f64,
        #[arg(long, default_value = "smiles")]
        smiles_column: String,
        #[arg(long, default_value = "label")]
        label_column: String,
        #[arg(long, default_value_t = 2)]
        radius: usize,
        #[arg(long, default_value_t = 1024)]
        width: usize,
        /// Pair report CSV; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the pseudo pool of a dumped epoch as CSV.
    PseudoInspect {
        run: PathBuf,
        #[arg(long)]
        epoch: usize,
    },
    /// Run the built-in invariant checks.
    Selftest,
}

fn create(path: &PathBuf) -> Result<File, CliError> {
    File::create(path).map_err(CliError::io(path))
}

fn run(args: Args) -> Result<(), CliError> {
    match args.command {
        Command::Train {
            config,
            overrides,
            out,
            run_root,
        } => {
            let cfg = ExperimentConfig::load(&config, &overrides)?;
            let dir = out.unwrap_or_else(|| run_dir(&cfg, &run_root));
            let m = cmd_train(&cfg, &dir)?;
            let (overall, cliff) = m.headline();
            let show = |v: Option<f64>| v.map_or_else(|| "-".into(), |v| format!("{v:.4}"));
            println!("{}", dir.display());
            println!(
                "{} seed {}: test {} {} (cliff {}), gamma_final {}",
                m.strategy,
                m.seed,
                format!("{:?}", m.metric).to_lowercase(),
                show(overall),
                show(cliff),
                show(m.gamma_final)
            );
        }
        Command::Compare { runs, csv } => {
            let c = cmd_compare(&runs)?;
            print!("{}", c.to_text());
            if let Some(path) = csv {
                c.write_csv(create(&path)?)?;
            }
        }
        Command::Cliffs {
            data,
            similarity,
            potency,
            smiles_column,
            label_column,
            radius,
            width,
            out,
        } => {
            let columns = ColumnMap {
                smiles: smiles_column,
                label: label_column,
                split: None,
            };
            let report = cmd_cliffs(&data, &columns, CliffThresholds { similarity, potency }, radius, width)?;
            match out {
                Some(path) => {
                    report.write_csv(create(&path)?)?;
                    print!("{}", report.summary());
                }
                None => {
                    eprint!("{}", report.summary());
                    report.write_csv(std::io::stdout().lock())?;
                }
            }
        }
        Command::PseudoInspect { run, epoch } => {
            let rows = cmd_pseudo_inspect(&run, epoch)?;
            write_inspect_csv(&rows, std::io::stdout().lock())?;
        }
        Command::Selftest => {
            let checks = selftest::run_all();
            let mut failed = Vec::new();
            let mut stdout = std::io::stdout().lock();
            for c in &checks {
                let (tag, detail) = match &c.outcome {
                    Ok(d) => ("ok  ", d),
                    Err(d) => ("FAIL", d),
                };
                let _ = writeln!(stdout, "{tag} {:<26} {detail}", c.name);
                if c.outcome.is_err() {
                    failed.push(c.name);
                }
            }
            if !failed.is_empty() {
                return Err(CliError::SelfTest(failed.join(", ")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
