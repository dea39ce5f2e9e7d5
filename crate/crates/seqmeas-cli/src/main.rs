//! Command-line front end.
//!
//! Exit codes: 0 success (solve converged, check ACCEPT), 1 usage, parse or
//! validation error, 2 solve did not converge, 3 check REJECT, 4 check INCONCLUSIVE.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use seqmeas::examples::{
    builtin, duopoly_pure_profile, ex2_off_path_profile, ex3_signal_ignoring, first_mover_check, DuopolyParams,
    ExampleParams,
};
use seqmeas::format::{parse_profile, parse_spec, write_profile, write_spec};
use seqmeas::game::{validate_game, ValidatedGame};
use seqmeas::measure::Profile;
use seqmeas::play::{fold_densities, play_distribution};
use seqmeas::relevance::assert_full_support_reach;
use seqmeas::solver::{check_sequential, default_schedule, sequential_equilibrium, CheckOptions, NashOptions, SeqOptions};

const EXIT_ERROR: u8 = 1;
const EXIT_NON_CONVERGENCE: u8 = 2;

#[derive(Parser)]
#[command(name = "seqmeas", version, about = "Sequential equilibria of multistage games with noisy signals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a sequential equilibrium and write its certificate.
    Solve(SolveArgs),
    /// Test whether a profile is a sequential equilibrium.
    Check(CheckArgs),
    /// Write the equivalent game with uninformative signals.
    Transform(GameOut),
    /// Write a game spec or one of the builtin profiles.
    Emit(EmitArgs),
    /// List the atomic relevant sets with their reach under the uniform profile.
    Relevance(GameOut),
}

#[derive(Args, Clone)]
struct GameArgs {
    /// Game spec file.
    #[arg(long, conflicts_with = "example", required_unless_present = "example")]
    spec: Option<PathBuf>,
    /// Builtin game: ex1, ex2, ex3, ex4, ex5 or duopoly.
    #[arg(long)]
    example: Option<String>,
    /// Signal accuracy of ex3.
    #[arg(long, default_value_t = 0.9)]
    c: f64,
    /// Grid resolution 1/k of ex1, ex2 and ex5.
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Duopoly demand intercept.
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Duopoly demand slope.
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    /// Duopoly unit cost.
    #[arg(long, default_value_t = 0.0)]
    cost: f64,
    /// Duopoly noise half-width.
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Duopoly grid points for quantities and signals.
    #[arg(long, default_value_t = 101)]
    grid: usize,
}

impl GameArgs {
    fn example_params(&self) -> ExampleParams {
        ExampleParams {
            c: self.c,
            k: self.k,
            ..ExampleParams::default()
        }
    }

    fn duopoly_params(&self) -> DuopolyParams {
        DuopolyParams {
            a: self.a,
            b: self.b,
            cost: self.cost,
            delta: self.delta,
            grid: self.grid,
        }
    }

    fn load(&self) -> Result<ValidatedGame> {
        let spec = match (&self.spec, &self.example) {
            (Some(path), _) => {
                let text = read(path)?;
                parse_spec(&text).with_context(|| format!("reading {}", path.display()))?
            }
            (None, Some(name)) => builtin(name, &self.example_params(), &self.duopoly_params())?,
            (None, None) => bail!("give --spec or --example"),
        };
        Ok(validate_game(spec)?)
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    game: GameArgs,
    /// Comma-separated increasing levels n.
    #[arg(long, value_delimiter = ',')]
    schedule: Option<Vec<u64>>,
    /// Target for every conditional gap.
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    /// Tolerance of each restricted equilibrium.
    #[arg(long, default_value_t = 1e-9)]
    nash_tol: f64,
    /// Total-variation distance between successive levels that counts as converged.
    #[arg(long, default_value_t = 1e-4)]
    conv_tol: f64,
    /// Round budget of each restricted equilibrium.
    #[arg(long, default_value_t = 400)]
    max_rounds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Slack for the duopoly first-mover check.
    #[arg(long, default_value_t = 0.02)]
    first_mover_eps: f64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    game: GameArgs,
    /// Profile file with one [measure i] or [strategy i] section per player.
    #[arg(long)]
    profile: PathBuf,
    /// Comma-separated eps levels to witness.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.01,0.001")]
    eps: Vec<f64>,
    /// Largest per-player total-variation distance from the candidate.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    /// Witness constructions allowed.
    #[arg(long, default_value_t = 16)]
    budget: usize,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Evidence file; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GameOut {
    #[command(flatten)]
    game: GameArgs,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EmitWhat {
    /// The game spec.
    Spec,
    /// Every player uniform over available actions.
    Uniform,
    /// The builtin negative profile: ex3 Bob ignores his signal, ex2 off-path
    /// punishment with threshold --theta, duopoly pure Cournot profile.
    Negative,
}

#[derive(Args)]
struct EmitArgs {
    #[command(flatten)]
    game: GameArgs,
    #[arg(long, value_enum, default_value = "spec")]
    what: EmitWhat,
    /// Threshold of the ex2 off-path profile.
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn solve(a: &SolveArgs) -> Result<u8> {
    let game = a.game.load()?;
    let opts = SeqOptions {
        schedule: a.schedule.clone().unwrap_or_else(default_schedule),
        eps_target: a.eps,
        conv_tol: a.conv_tol,
        nash: NashOptions {
            tol: a.nash_tol,
            max_rounds: a.max_rounds,
            seed: a.seed,
            workers: a.workers,
        },
    };
    let cert = sequential_equilibrium(&game, &opts)?;
    fs::create_dir_all(&a.out).with_context(|| format!("cannot create {}", a.out.display()))?;
    let mut report = cert.report(&game);
    if a.game.example.as_deref() == Some("duopoly") {
        let fm = first_mover_check(&cert, &game, &a.game.duopoly_params(), a.first_mover_eps)?;
        report.push('\n');
        report.push_str(&fm.text);
        write(&a.out.join("first_mover.txt"), &fm.text)?;
    }
    write(&a.out.join("report.txt"), &report)?;
    write(&a.out.join("gaps.csv"), &cert.gaps_csv())?;
    write(&a.out.join("profile.txt"), &write_profile(&cert.limit))?;
    write(&a.out.join("plays.csv"), &play_distribution(&game, &cert.limit)?.to_csv(&game))?;
    let status = if cert.converged { "CONVERGED" } else { "NON_CONVERGENCE" };
    println!("{status}: {}", cert.detail);
    println!("artifacts in {}", a.out.display());
    info!("max conditional gap at the last level: {:e}", cert.last().max_gap);
    Ok(if cert.converged { 0 } else { EXIT_NON_CONVERGENCE })
}

fn check(a: &CheckArgs) -> Result<u8> {
    let game = a.game.load()?;
    let text = read(&a.profile)?;
    let candidate = parse_profile(&game, &text).with_context(|| format!("reading {}", a.profile.display()))?;
    let opts = CheckOptions {
        eps_schedule: a.eps.clone(),
        tol: a.tol,
        budget: a.budget,
        workers: a.workers,
        ..CheckOptions::default()
    };
    let r = check_sequential(&game, &candidate, &opts)?;
    match &a.out {
        Some(p) => {
            write(p, &r.evidence)?;
            println!("{}", r.verdict.name());
            if let Some(v) = &r.violation {
                if r.verdict.exit_code() == 3 {
                    println!("violated set {} [{}], gap lower bound {:e}", v.set.id(), v.label, v.lower_bound);
                }
            }
        }
        None => print!("{}", r.evidence),
    }
    Ok(r.verdict.exit_code() as u8)
}

fn emit_cmd(a: &EmitArgs) -> Result<u8> {
    let game = a.game.load()?;
    let text = match a.what {
        EmitWhat::Spec => write_spec(game.spec()),
        EmitWhat::Uniform => write_profile(&Profile::uniform(&game)),
        EmitWhat::Negative => {
            let p = match a.game.example.as_deref() {
                Some("ex3") => ex3_signal_ignoring(&game)?,
                Some("ex2") => ex2_off_path_profile(&game, a.theta)?,
                Some("duopoly") => duopoly_pure_profile(&game, &a.game.duopoly_params())?,
                _ => return Err(anyhow!("negative profiles exist for ex2, ex3 and duopoly only")),
            };
            write_profile(&p)
        }
    };
    emit(&a.out, &text)?;
    Ok(0)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Solve(a) => solve(&a),
        Command::Check(a) => check(&a),
        Command::Transform(a) => {
            let game = a.game.load()?;
            let folded = fold_densities(&game)?;
            emit(&a.out, &write_spec(folded.spec()))?;
            Ok(0)
        }
        Command::Emit(a) => emit_cmd(&a),
        Command::Relevance(a) => {
            let game = a.game.load()?;
            let report = assert_full_support_reach(&game);
            emit(&a.out, &report.to_csv())?;
            Ok(if report.failures.is_empty() { 0 } else { EXIT_ERROR })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SEQMEAS_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
