use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qframes::scenario::{corpus, load_scenario, Format, Kind, RunOptions, DEFAULT_SEED};

#[derive(Parser)]
#[command(name = "qframes", version, about = "Run quantum reference frame scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Overrides the scenario tolerance.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Also write the report to this file.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Json)]
    format: OutFormat,
    /// Record per-check wall time (reports are then not reproducible).
    #[arg(long, global = true)]
    timing: bool,
    /// Run checks one at a time.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Load a scenario and run its checks.
    Check { file: PathBuf },
    /// Load a scenario without running it.
    Validate { file: PathBuf },
    /// Run every bundled scenario against its expected outcome.
    Corpus,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Text,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Json => Format::Json,
            OutFormat::Text => Format::Text,
        }
    }
}

fn write_out(bytes: &[u8], report: Option<&PathBuf>) -> Result<(), ExitCode> {
    use std::io::Write;
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(bytes);
    let _ = stdout.write_all(b"\n");
    if let Some(path) = report {
        if let Err(e) = std::fs::write(path, bytes) {
            eprintln!("cannot write {}: {e}", path.display());
            return Err(ExitCode::from(2));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let options = RunOptions {
        tolerance: cli.tolerance,
        seed: cli.seed,
        parallel: !cli.sequential,
        timing: cli.timing,
    };
    let format: Format = cli.format.into();
    match cli.command {
        Command::Check { file } => {
            let scenario = match load_scenario(&file) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("load error: {e}");
                    return ExitCode::from(2);
                }
            };
            let report = scenario.run(&options);
            if let Err(code) = write_out(&report.emit(format), cli.report.as_ref()) {
                return code;
            }
            if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::Validate { file } => match load_scenario(&file) {
            Ok(s) => {
                let counts: Vec<String> = Kind::ALL
                    .iter()
                    .filter(|&&k| s.count(k) > 0)
                    .map(|&k| format!("{} {}", s.count(k), k.key()))
                    .collect();
                println!("ok: {} ({}; {} checks)", s.name, counts.join(", "), s.checks.len());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("load error: {e}");
                ExitCode::from(2)
            }
        },
        Command::Corpus => {
            let results = corpus::run_corpus(&options);
            let mut all = true;
            let mut reports = serde_json::Map::new();
            for r in &results {
                all &= r.met;
                let what = match &r.outcome {
                    Ok(rep) => {
                        let s = rep.summary();
                        reports.insert(r.file.to_string(), rep.to_json());
                        format!("{} pass, {} fail", s.pass, s.fail)
                    }
                    Err(e) => {
                        reports.insert(r.file.to_string(), serde_json::json!({ "load_error": e.to_string() }));
                        format!("load error: {e}")
                    }
                };
                let verdict = if r.met { "ok" } else { "MISMATCH" };
                eprintln!("{verdict:<8} {:<32} {what} {}", r.file, r.note);
            }
            let bytes = match format {
                Format::Json => serde_json::to_vec(&serde_json::Value::Object(reports)).expect("JSON values serialize"),
                Format::Text => Vec::new(),
            };
            if !bytes.is_empty() {
                if let Err(code) = write_out(&bytes, cli.report.as_ref()) {
                    return code;
                }
            }
            if all {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
