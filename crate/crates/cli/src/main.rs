use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use semisub_cli::report::EXIT_SCENE;
use semisub_cli::{resolve, run, RunOptions, PRESETS};
use semisub_core::Check;

/// Numerical checks for conformal semi-invariant submersions.
#[derive(Parser)]
#[command(name = "semisub", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checkers on a scene file or a built-in preset.
    Check(CheckArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Canonical,
}

#[derive(Args)]
struct CheckArgs {
    /// Scene file path or preset name.
    #[arg(required_unless_present = "list_presets")]
    scene: Option<String>,
    /// Comma-separated checker names.
    #[arg(long, value_delimiter = ',')]
    only: Vec<String>,
    /// Number of sample points (overrides the scene).
    #[arg(long)]
    points: Option<usize>,
    /// Sampling seed (overrides the scene).
    #[arg(long)]
    seed: Option<u64>,
    /// Theorem residual tolerance (overrides the scene).
    #[arg(long, env = "SEMISUB_TOL")]
    tol: Option<f64>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    /// List built-in presets and checkers, then exit.
    #[arg(long)]
    list_presets: bool,
    /// Exit 0 instead of 5 when the only problem is an unmet Kähler hypothesis.
    #[arg(long)]
    allow_warnings: bool,
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_SCENE as u8)
}

fn main() -> ExitCode {
    let Command::Check(args) = Cli::parse().command;
    if args.list_presets {
        for p in PRESETS {
            println!("{:<12} {}", p.name, p.summary);
        }
        println!();
        for c in Check::ALL {
            println!("{}", c.name());
        }
        return ExitCode::SUCCESS;
    }
    let target = args.scene.expect("clap enforces a scene");
    let scene = match resolve(&target) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let only = if args.only.is_empty() {
        None
    } else {
        let mut checks = Vec::new();
        for name in &args.only {
            match Check::from_name(name.trim()) {
                Some(c) => checks.push(c),
                None => return fail(format!("unknown checker `{name}` (see --list-presets)")),
            }
        }
        Some(checks)
    };
    if let Some(t) = args.tol {
        if !(t > 0.0 && t.is_finite()) {
            return fail(format!("tolerance must be positive, got {t}"));
        }
    }
    if args.points == Some(0) {
        return fail("--points must be positive");
    }
    if args.seed == Some(0) {
        return fail("--seed must be positive");
    }
    let opts = RunOptions {
        only,
        points: args.points,
        seed: args.seed,
        tol: args.tol,
        allow_warnings: args.allow_warnings,
    };
    let report = run(&scene, &opts);
    match args.format {
        Format::Table => print!("{}", report.to_table()),
        Format::Canonical => print!("{}", report.to_canonical()),
    }
    for c in report.checks.iter().filter(|c| !c.all_pass()) {
        let i = c.disagreements[0];
        eprintln!(
            "disagreement: {} at point {i} {:?}",
            c.name, report.points[i].x
        );
    }
    for f in &report.structure.failures {
        eprintln!("structural: {f}");
    }
    ExitCode::from(report.exit_code as u8)
}
