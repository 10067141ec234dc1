use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use itflow::dsl::FactoryRegistry;
use itflow::harness::{cmd_run, validate_world_file, HarnessError, RunConfig, DEFAULT_DT};

#[derive(Parser)]
#[command(name = "itflow", version, about = "Run interaction-technique dataflow worlds headlessly")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a world file and print its diagnostics.
    Validate { world: PathBuf },
    /// Step a world with a scripted input and write a trace.
    Run {
        world: PathBuf,
        #[arg(long)]
        script: PathBuf,
        #[arg(long)]
        steps: u64,
        #[arg(long, default_value_t = DEFAULT_DT)]
        dt: f64,
        /// Trace output; standard output when omitted.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn report(e: &HarnessError) {
    for line in e.lines() {
        eprintln!("{line}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let reg = FactoryRegistry::with_builtins();
    match cli.command {
        Command::Validate { world } => match validate_world_file(&world, &reg) {
            Ok(_) => ExitCode::SUCCESS,
            Err(e) => {
                report(&e);
                let code = match e {
                    HarnessError::Read { .. } => 2,
                    ref other => other.exit_code(),
                };
                ExitCode::from(code as u8)
            }
        },
        Command::Run {
            world,
            script,
            steps,
            dt,
            trace,
            seed,
        } => {
            if !(dt > 0.0 && dt.is_finite()) {
                eprintln!("--dt must be positive, got {dt}");
                return ExitCode::from(1);
            }
            let cfg = RunConfig {
                world_path: world,
                script_path: script,
                steps,
                dt,
                trace_path: trace,
                seed,
            };
            match cmd_run(&cfg, &reg) {
                Ok(out) => {
                    if cfg.trace_path.is_none() {
                        print!("{}", out.trace);
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    report(&e);
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}
