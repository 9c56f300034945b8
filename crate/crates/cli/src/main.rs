//! `permcycle`: solve, verify and generate assignment/TSP instances.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use permcycle::instance::{gen_instance, parse_matrix, render_matrix};
use permcycle::oracle::{held_karp_tsp, hungarian_ap};
use permcycle::solve::{solve, Phases, SolveConfig, SolveReport};
use permcycle::trace::TraceEvent;
use permcycle::{example2, CostMatrix};

const EXIT_MISMATCH: u8 = 1;
const EXIT_INPUT: u8 = 2;

#[derive(Parser)]
#[command(name = "permcycle", version, about = "Permutation-cycle solver for the assignment problem and the TSP")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TraceFormat {
    Text,
    Json,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(clap::Args)]
struct SolveArgs {
    /// Phases to run: 1, 12 or 123.
    #[arg(long, default_value = "123")]
    phases: Phases,
    /// Seed for the random restart tours.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of Phase 1 runs; the first starts from the tour 1 -> 2 -> ... -> n.
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    /// Keep alternative equal-valued paths in the negative-path tables.
    #[arg(long)]
    keep_equal_paths: bool,
    /// Largest patching budget (default: three times the mean reduced entry).
    #[arg(long)]
    budget_cap: Option<i64>,
}

impl SolveArgs {
    fn config(&self, trace: bool, timings: bool) -> SolveConfig {
        SolveConfig {
            phases: self.phases,
            seed: self.seed,
            restarts: self.restarts,
            keep_equal_paths: self.keep_equal_paths,
            budget_cap: self.budget_cap,
            trace,
            timings,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance file.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        args: SolveArgs,
        /// Trace events on standard error.
        #[arg(long, value_enum, default_value = "off")]
        trace: TraceFormat,
        /// Report format on standard output.
        #[arg(long, value_enum, default_value = "text")]
        format: ReportFormat,
        /// Also write the JSON report to this file.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Include wall-clock timings (makes reports non-reproducible).
        #[arg(long)]
        timings: bool,
    },
    /// Solve an instance and compare against the exact oracles.
    Verify {
        file: PathBuf,
        #[command(flatten)]
        args: SolveArgs,
    },
    /// Generate a random instance with costs uniform in 1..=max.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        max: i64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Solve the bundled 20-vertex example with the full trace.
    ReplayExample2 {
        /// Trace and report format.
        #[arg(long, value_enum, default_value = "text")]
        format: ReportFormat,
    },
}

/// Failure that maps to a specific exit code.
struct Exit(u8, anyhow::Error);

fn input<E: Into<anyhow::Error>>(e: E) -> Exit {
    Exit(EXIT_INPUT, e.into())
}

fn failure<E: Into<anyhow::Error>>(e: E) -> Exit {
    Exit(EXIT_MISMATCH, e.into())
}

fn load(path: &Path) -> Result<CostMatrix, Exit> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(input)?;
    parse_matrix(&text)
        .with_context(|| format!("invalid instance {}", path.display()))
        .map_err(input)
}

fn json_report(report: &SolveReport) -> String {
    serde_json::to_string_pretty(report).expect("reports serialize")
}

fn print_trace(events: &[TraceEvent], format: TraceFormat, out: &mut dyn Write) -> Result<()> {
    for e in events {
        match format {
            TraceFormat::Text => writeln!(out, "{e}")?,
            TraceFormat::Json => writeln!(out, "{}", serde_json::to_string(e)?)?,
            TraceFormat::Off => {}
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Exit> {
    match cli.command {
        Command::Solve {
            file,
            args,
            trace,
            format,
            report,
            timings,
        } => {
            let m = load(&file)?;
            let tracing = !matches!(trace, TraceFormat::Off);
            let out = solve(&m, &args.config(tracing, timings)).map_err(failure)?;
            print_trace(&out.trace, trace, &mut std::io::stderr()).map_err(failure)?;
            match format {
                ReportFormat::Text => print!("{}", out.report),
                ReportFormat::Json => println!("{}", json_report(&out.report)),
            }
            if let Some(path) = report {
                fs::write(&path, json_report(&out.report) + "\n")
                    .with_context(|| format!("cannot write {}", path.display()))
                    .map_err(input)?;
            }
            Ok(())
        }
        Command::Verify { file, args } => {
            let m = load(&file)?;
            let cfg = args.config(false, false);
            let (solved, ap, tsp) = std::thread::scope(|s| {
                let solver = s.spawn(|| solve(&m, &cfg));
                let ap = s.spawn(|| hungarian_ap(&m));
                let tsp = s.spawn(|| held_karp_tsp(&m));
                (
                    solver.join().expect("solver thread"),
                    ap.join().expect("assignment oracle thread"),
                    tsp.join().expect("tour oracle thread"),
                )
            });
            let report = solved.map_err(failure)?.report;
            let (ap, _) = ap.map_err(input)?;
            let (tsp, _) = tsp.map_err(input)?;
            let mut ok = true;
            if let Some(v) = report.ap_value {
                let same = v == ap;
                ok &= same;
                println!("ap: solver {v} {} oracle {ap}", if same { "==" } else { "!=" });
            }
            match report.tour_value {
                Some(v) => {
                    let same = v == tsp;
                    ok &= same;
                    println!("tsp: solver {v} {} oracle {tsp}", if same { "==" } else { "!=" });
                }
                None => {
                    ok = false;
                    println!("tsp: solver found no tour, oracle {tsp}");
                }
            }
            if ok {
                println!("solver == oracle");
                Ok(())
            } else {
                println!("solver != oracle");
                Err(Exit(EXIT_MISMATCH, anyhow::anyhow!("verification mismatch")))
            }
        }
        Command::Gen {
            n,
            max,
            seed,
            output,
        } => {
            if n < 2 {
                return Err(input(anyhow::anyhow!("--n must be at least 2")));
            }
            if max < 1 {
                return Err(input(anyhow::anyhow!("--max must be at least 1")));
            }
            let text = render_matrix(&gen_instance(n, max, seed));
            match output {
                Some(path) => fs::write(&path, text)
                    .with_context(|| format!("cannot write {}", path.display()))
                    .map_err(input)?,
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::ReplayExample2 { format } => {
            let cfg = SolveConfig {
                trace: true,
                ..SolveConfig::default()
            };
            let out = solve(&example2(), &cfg).map_err(failure)?;
            let mut stdout = std::io::stdout().lock();
            match format {
                ReportFormat::Text => {
                    print_trace(&out.trace, TraceFormat::Text, &mut stdout).map_err(failure)?;
                    write!(stdout, "{}", out.report).map_err(failure)?;
                }
                ReportFormat::Json => {
                    print_trace(&out.trace, TraceFormat::Json, &mut stdout).map_err(failure)?;
                    writeln!(stdout, "{}", serde_json::to_string(&out.report).map_err(failure)?)
                        .map_err(failure)?;
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Exit(code, e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
