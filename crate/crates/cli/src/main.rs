use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use jaywalk::config::{self, ConfigError, SweepSpec};
use jaywalk::sweep::{self, SummaryTable, SweepError, SweepOutput};

/// Perception-limited jaywalking simulator and experiment harness.
#[derive(Debug, Parser)]
#[command(name = "jaywalk", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a single scenario (a config without swept axes) for each seed.
    Run(RunArgs),
    /// Run every point of a sweep for each seed.
    Sweep(RunArgs),
    /// Rebuild the summary table from an existing raw CSV.
    Report {
        /// Raw per-run CSV written by `run` or `sweep`.
        raw: PathBuf,
        #[arg(long, env = "JAYWALK_OUT_DIR")]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, env = "JAYWALK_OUT_DIR", default_value = "out")]
    out: PathBuf,
    /// Seeds overriding the config, e.g. `1..5` or `1,4,9`.
    #[arg(long, value_parser = parse_seed_list)]
    seeds: Option<SeedList>,
    /// Write per-tick JSON-lines traces.
    #[arg(long)]
    trace: bool,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Debug, Clone)]
struct SeedList(Vec<u64>);

fn parse_seed_list(s: &str) -> Result<SeedList, String> {
    config::parse_seeds(s).map(SeedList)
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid sweep: {0}")]
    Invalid(String),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(ConfigError::Io { .. }) => 2,
            CliError::Config(_) | CliError::Invalid(_) => 1,
            CliError::Sweep(SweepError::Invalid(_)) => 1,
            CliError::Sweep(_) | CliError::Io { .. } => 2,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn load_spec(args: &RunArgs) -> Result<SweepSpec, CliError> {
    let mut spec = config::load(&args.config)?;
    if let Some(seeds) = &args.seeds {
        spec = spec.with_seeds(seeds.0.clone());
        spec.validate().map_err(|e| CliError::Invalid(e.0.join("; ")))?;
    }
    Ok(spec)
}

fn write_outputs(out_dir: &Path, output: &SweepOutput, spec: &SweepSpec) -> Result<(), CliError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let raw = out_dir.join("raw.csv");
    sweep::write_raw_csv(&output.records, create(&raw)?)?;
    write_summary(out_dir, &output.table)?;
    let cfg = out_dir.join("config.ini");
    fs::write(&cfg, spec.to_config()).map_err(io_err(&cfg))?;
    if output.traces.iter().any(Option::is_some) {
        let dir = out_dir.join("traces");
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        for (rec, lines) in output.records.iter().zip(&output.traces) {
            let Some(lines) = lines else { continue };
            let path = dir.join(format!("point{}_seed{}.jsonl", rec.point.index, rec.seed));
            let mut w = create(&path)?;
            for l in lines {
                writeln!(w, "{l}").map_err(io_err(&path))?;
            }
            w.flush().map_err(io_err(&path))?;
        }
    }
    Ok(())
}

fn write_summary(out_dir: &Path, table: &SummaryTable) -> Result<(), CliError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let csv_path = out_dir.join("summary.csv");
    table.write_csv(create(&csv_path)?)?;
    let txt = out_dir.join("summary.txt");
    let text = table.render();
    fs::write(&txt, &text).map_err(io_err(&txt))?;
    print!("{text}");
    Ok(())
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            let spec = load_spec(&args)?;
            let points = spec.points().len();
            if points != 1 {
                return Err(CliError::Invalid(format!(
                    "`run` takes a single scenario but the config sweeps {points} points; use `sweep`"
                )));
            }
            let output = sweep::run_sweep(&spec, args.jobs, args.trace)?;
            write_outputs(&args.out, &output, &spec)
        }
        Command::Sweep(args) => {
            let spec = load_spec(&args)?;
            eprintln!("{} points x {} seeds", spec.points().len(), spec.seeds.len());
            let output = sweep::run_sweep(&spec, args.jobs, args.trace)?;
            write_outputs(&args.out, &output, &spec)
        }
        Command::Report { raw, out } => {
            let file = File::open(&raw).map_err(io_err(&raw))?;
            let records = sweep::read_raw_csv(file)?;
            let table = SummaryTable::from_records(&records);
            match out {
                Some(dir) => write_summary(&dir, &table),
                None => {
                    print!("{}", table.render());
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
