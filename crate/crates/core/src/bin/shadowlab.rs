use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use shadowlab::plot::{emit_plot, PlotKind};
use shadowlab::scenario::{builtin, list_scenarios, resolve_output_root, run_many, ScenarioConfig, Verdict};
use shadowlab::Error;

const EX_USAGE: u8 = 64;
const EX_SOFTWARE: u8 = 70;

#[derive(Parser)]
#[command(name = "shadowlab", version, about = "Topological shadowing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a built-in scenario, `all`, or a JSON config file.
    Run {
        target: String,
        /// Symmetric window [-N, N].
        #[arg(long)]
        window: Option<i64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run several scenarios concurrently.
        #[arg(long)]
        parallel: bool,
    },
    /// List built-in scenarios.
    List {
        #[arg(long)]
        json: bool,
    },
    /// Render an SVG from a CSV artifact.
    Plot {
        csv: PathBuf,
        #[arg(long)]
        kind: String,
    },
}

fn exit_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::InvalidParameter(_) | Error::DegenerateMargin { .. } | Error::GridTooLarge(_) => {
            EX_USAGE
        }
        _ => EX_SOFTWARE,
    }
}

fn load_targets(target: &str) -> Result<Vec<ScenarioConfig>, Error> {
    if target == "all" {
        return list_scenarios().iter().map(|s| builtin(s.name)).collect();
    }
    let path = Path::new(target);
    if target.ends_with(".json") || path.is_file() {
        return Ok(vec![ScenarioConfig::load(path)?]);
    }
    Ok(vec![builtin(target)?])
}

fn run(target: &str, window: Option<i64>, seed: Option<u64>, out: Option<PathBuf>, parallel: bool) -> Result<u8, Error> {
    let mut configs = load_targets(target)?;
    for c in &mut configs {
        if let Some(n) = window {
            c.set_window(n)?;
        }
        if let Some(s) = seed {
            c.seed = s;
        }
    }
    let mut worst = Verdict::MatchesPaper;
    let mut failure: Option<Error> = None;
    let roots: Vec<PathBuf> = configs.iter().map(|c| resolve_output_root(out.as_deref(), c)).collect();
    // Scenarios with different roots run one group at a time.
    let reports = if roots.windows(2).all(|w| w[0] == w[1]) && !roots.is_empty() {
        run_many(&configs, &roots[0], parallel)
    } else {
        configs
            .iter()
            .zip(&roots)
            .map(|(c, r)| run_many(std::slice::from_ref(c), r, false).remove(0))
            .collect()
    };
    for (c, r) in configs.iter().zip(reports) {
        match r {
            Ok(rep) => {
                println!(
                    "{:<26} {:<18} {:>8.2}s  {}",
                    rep.scenario,
                    rep.verdict.name(),
                    rep.wall_time.as_secs_f64(),
                    rep.summary
                );
                println!("{:<26} artifacts: {}", "", rep.output_dir.display());
                worst = worst.and(rep.verdict);
            }
            Err(e) => {
                eprintln!("{:<26} error: {e}", c.name);
                if failure.as_ref().is_none_or(|f| exit_for(f) < exit_for(&e)) {
                    failure = Some(e);
                }
            }
        }
    }
    if let Some(e) = failure {
        return Ok(exit_for(&e));
    }
    Ok(worst.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EX_USAGE),
            };
        }
    };
    let result = match cli.command {
        Command::Run {
            target,
            window,
            seed,
            out,
            parallel,
        } => run(&target, window, seed, out, parallel),
        Command::List { json } => {
            let list = list_scenarios();
            if json {
                println!("{}", serde_json::to_string_pretty(&list).expect("catalog serializes"));
            } else {
                for s in list {
                    println!("{:<26} {}", s.name, s.description);
                }
            }
            Ok(0)
        }
        Command::Plot { csv, kind } => kind
            .parse::<PlotKind>()
            .and_then(|k| emit_plot(&csv, k))
            .map(|p| {
                println!("{}", p.display());
                0
            }),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("shadowlab: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
