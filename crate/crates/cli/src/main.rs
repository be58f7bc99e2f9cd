//! `secgame`: validate, solve, simulate and inspect security games on
//! influence networks.

mod matrix;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{debug, info};
use secgame_core::config::example_3node_source;
use secgame_core::report::{simulation_table, strategy_table, value_table, SimulateDocument, SolveDocument};
use secgame_core::{
    simulate_states, solve, solve_matrix_game, Action, ActionMode, Error, GameConfig, NetworkState,
    SolveOptions, StochasticGame,
};

const EXIT_OTHER: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_INVALID: u8 = 3;
const EXIT_NOT_CONVERGED: u8 = 4;

/// Name accepted in place of a config path for the bundled 3-node example.
const BUNDLED_EXAMPLE: &str = "example-3node";

#[derive(Parser)]
#[command(name = "secgame", version, about = "Security games on linear influence networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a config and print its derived quantities.
    Validate {
        /// Config file, or `example-3node` for the bundled example.
        config: String,
    },
    /// Solve the game by value iteration and print strategy and value tables.
    Solve {
        config: String,
        #[command(flatten)]
        solver: SolverFlags,
        /// Write the machine-readable solution here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the game dump here (`-` for stdout).
        #[arg(long)]
        dump_game: Option<PathBuf>,
    },
    /// Monte Carlo simulation of a strategy profile.
    Simulate {
        config: String,
        #[command(flatten)]
        solver: SolverFlags,
        #[arg(long, default_value_t = 100_000)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// One-based state index or bit pattern such as `(1,0,0)`; all states if omitted.
        #[arg(long)]
        start_state: Option<String>,
        /// `optimal`, `uniform`, `do-nothing`, or a solution file written by `solve --out`.
        #[arg(long, default_value = "optimal")]
        strategies: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the state space and optionally dump the full game.
    Describe {
        config: String,
        #[arg(long)]
        action_mode: Option<ActionMode>,
        /// Write the game dump here (`-` for stdout).
        #[arg(long)]
        dump_game: Option<PathBuf>,
    },
    /// Zero-sum matrix game tools.
    Matgame {
        #[command(subcommand)]
        command: MatgameCommand,
    },
}

#[derive(Subcommand)]
enum MatgameCommand {
    /// Solve the matrix game in a file (JSON array of rows, or whitespace/comma separated rows).
    Solve { matrix: PathBuf },
}

#[derive(Args)]
struct SolverFlags {
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    action_mode: Option<ActionMode>,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse(_) => EXIT_PARSE,
            Error::Invalid(_) | Error::StrategyMismatch { .. } | Error::Capacity { .. } => EXIT_INVALID,
            Error::NotConverged { .. } => EXIT_NOT_CONVERGED,
            _ => EXIT_OTHER,
        };
        let message = match e {
            Error::Invalid(violations) => {
                let mut m = format!("validation failed with {} violation(s):", violations.len());
                for v in violations {
                    let _ = write!(m, "\n  {v}");
                }
                m
            }
            Error::NotConverged {
                iterations,
                residual,
                last_values,
            } => format!(
                "value iteration did not converge after {iterations} iterations\n  residual {residual:e}\n  last iterate {last_values:?}"
            ),
            other => other.to_string(),
        };
        Failure { code, message }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_OTHER,
        message: format!("{}: {e}", path.display()),
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Validate { config } => cmd_validate(&config),
        Command::Solve {
            config,
            solver,
            out,
            dump_game,
        } => cmd_solve(&config, &solver, out.as_deref(), dump_game.as_deref()),
        Command::Simulate {
            config,
            solver,
            episodes,
            seed,
            start_state,
            strategies,
            out,
        } => cmd_simulate(
            &config,
            &solver,
            episodes,
            seed,
            start_state.as_deref(),
            &strategies,
            out.as_deref(),
        ),
        Command::Describe {
            config,
            action_mode,
            dump_game,
        } => cmd_describe(&config, action_mode, dump_game.as_deref()),
        Command::Matgame {
            command: MatgameCommand::Solve { matrix },
        } => cmd_matgame(&matrix),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_config(source: &str) -> Result<GameConfig, Failure> {
    let path = Path::new(source);
    if source == BUNDLED_EXAMPLE && !path.exists() {
        debug!("using bundled {BUNDLED_EXAMPLE}");
        return Ok(GameConfig::from_json(example_3node_source())?);
    }
    info!("loading {}", path.display());
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    Ok(GameConfig::from_json(&text)?)
}

fn write_output(path: &Path, text: &str) -> CmdResult {
    if path == Path::new("-") {
        println!("{text}");
        return Ok(());
    }
    fs::write(path, text).map_err(|e| io_failure(path, e))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("documents always serialize")
}

fn format_row(values: impl IntoIterator<Item = f64>) -> String {
    values
        .into_iter()
        .map(|x| format!("{x:>9.4}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn cmd_validate(source: &str) -> CmdResult {
    let config = load_config(source)?;
    let net = config.network()?;
    // restart parameters and the state-space cap are checked here too
    let space = config.state_space()?;
    let n = net.node_count();

    println!("nodes: {n}");
    for (i, node) in config.nodes.iter().enumerate() {
        let p = &node.probs;
        println!(
            "  {} {:<12} s = {:<8} p_d1 {} p_n1 {} p_d0 {} p_n0 {}",
            i + 1,
            node.name,
            node.independent_asset,
            p.p_d1,
            p.p_n1,
            p.p_d0,
            p.p_n0
        );
    }
    println!("influence matrix (column j spreads node j's asset):");
    for i in 0..n {
        println!("  {}", format_row(net.influence().row(i).iter().copied()));
    }
    println!("support matrix:");
    for i in 0..n {
        println!("  {}", format_row(net.support_matrix().row(i).iter().copied()));
    }
    println!("effective assets: {}", format_row(net.effective_assets()));
    println!("supports:         {}", format_row(net.supports()));

    let column_error = (0..n)
        .map(|j| (net.influence().column(j).sum() - 1.0).abs())
        .fold(0.0, f64::max);
    let support_max = (0..n)
        .map(|j| net.support_matrix().column(j).sum())
        .fold(0.0, f64::max);
    let total_in: f64 = net.independent_assets().iter().sum();
    let total_out: f64 = net.effective_assets().iter().sum();
    println!("checks:");
    println!("  ok  influence columns sum to 1 (max deviation {column_error:.1e})");
    println!("  ok  influence and support entries are nonnegative");
    println!("  ok  support column sums at most 1 (max {support_max:.4})");
    println!("  ok  p_d1 < p_n1 and p_d0 < p_n0 for every node");
    println!("  ok  total asset conserved ({total_in} -> {total_out:.6})");
    println!("  ok  restart probabilities valid for all {} states", space.len());
    println!(
        "model: asset_reduction {}, action_mode {}",
        config.asset_reduction(),
        config.solver.action_mode
    );
    Ok(())
}

fn build_game(config: &GameConfig, mode: Option<ActionMode>) -> Result<StochasticGame, Failure> {
    let mode = mode.unwrap_or(config.solver.action_mode);
    let game = config.game_with_mode(mode)?;
    info!("built {} game elements ({mode} actions)", game.len());
    Ok(game)
}

fn solve_options(config: &GameConfig, flags: &SolverFlags) -> SolveOptions {
    let mut options = config.solve_options();
    if let Some(tol) = flags.tol {
        options.tolerance = tol;
    }
    if let Some(max_iters) = flags.max_iters {
        options.max_iters = max_iters;
    }
    options
}

fn cmd_solve(source: &str, flags: &SolverFlags, out: Option<&Path>, dump_game: Option<&Path>) -> CmdResult {
    let config = load_config(source)?;
    let game = build_game(&config, flags.action_mode)?;
    if let Some(path) = dump_game {
        write_output(path, &to_json(&game.dump()))?;
    }
    let options = solve_options(&config, flags);
    let result = solve(&game, options)?;

    println!("Attacker strategies");
    print!("{}", strategy_table(&game, &result.attacker_strategies, true));
    println!();
    println!("Defender strategies");
    print!("{}", strategy_table(&game, &result.defender_strategies, false));
    println!();
    println!("Values");
    print!("{}", value_table(&game, &result.values));
    println!();
    println!(
        "converged in {} iterations (residual {:.3e}, tolerance {:e})",
        result.iterations, result.residual, options.tolerance
    );

    if let Some(path) = out {
        let doc = SolveDocument::new(&game, &result, options.tolerance, config.name.clone());
        write_output(path, &to_json(&doc))?;
    }
    Ok(())
}

fn pure(game: &StochasticGame, pick: impl Fn(&[Action]) -> usize, attacker: bool) -> Vec<Vec<f64>> {
    game.elements()
        .iter()
        .map(|e| {
            let actions = if attacker { &e.actions.attacker } else { &e.actions.defender };
            let mut p = vec![0.0; actions.len()];
            p[pick(actions)] = 1.0;
            p
        })
        .collect()
}

fn uniform(game: &StochasticGame, attacker: bool) -> Vec<Vec<f64>> {
    game.elements()
        .iter()
        .map(|e| {
            let m = if attacker { e.rows() } else { e.cols() };
            vec![1.0 / m as f64; m]
        })
        .collect()
}

fn parse_start(game: &StochasticGame, text: &str) -> Result<usize, Failure> {
    let n = game.space().node_count();
    let invalid = || -> Failure {
        Error::invalid(
            "--start-state",
            format!("{text:?} is neither a state index 1..={} nor a {n}-node bit pattern", game.len()),
        )
        .into()
    };
    if let Ok(k) = text.trim().parse::<usize>() {
        if (1..=game.len()).contains(&k) {
            return Ok(k - 1);
        }
        return Err(invalid());
    }
    let state = NetworkState::from_bits(text).map_err(|_| invalid())?;
    if state.node_count() != n {
        return Err(invalid());
    }
    Ok(game.space().index_of(state))
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    source: &str,
    flags: &SolverFlags,
    episodes: usize,
    seed: u64,
    start_state: Option<&str>,
    strategies: &str,
    out: Option<&Path>,
) -> CmdResult {
    let config = load_config(source)?;
    let game = build_game(&config, flags.action_mode)?;
    let starts = start_state.map(|s| parse_start(&game, s)).transpose()?;

    let (attacker, defender) = match strategies {
        "optimal" => {
            let result = solve(&game, solve_options(&config, flags))?;
            info!("solved in {} iterations", result.iterations);
            (result.attacker_strategies, result.defender_strategies)
        }
        "uniform" => (uniform(&game, true), uniform(&game, false)),
        "do-nothing" => {
            let nothing = |actions: &[Action]| {
                actions
                    .iter()
                    .position(|a| *a == Action::Nothing)
                    .expect("every state offers doing nothing")
            };
            (pure(&game, nothing, true), pure(&game, nothing, false))
        }
        file => {
            let path = Path::new(file);
            let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
            SolveDocument::from_json(&text)?.profiles_for(&game)?
        }
    };

    let report = simulate_states(
        &game,
        &attacker,
        &defender,
        starts.as_ref().map(std::slice::from_ref),
        episodes,
        seed,
    )?;
    println!("strategies: {strategies}, episodes: {episodes}, seed: {seed}");
    print!("{}", simulation_table(&report));
    if let Some(path) = out {
        write_output(path, &to_json(&SimulateDocument::new(strategies, report)))?;
    }
    Ok(())
}

fn cmd_describe(source: &str, mode: Option<ActionMode>, dump_game: Option<&Path>) -> CmdResult {
    let config = load_config(source)?;
    let game = build_game(&config, mode)?;
    let space = game.space();
    println!(
        "{} nodes, {} states, action_mode {}, asset_reduction {}",
        space.node_count(),
        game.len(),
        game.action_mode(),
        space.asset_reduction()
    );
    println!(
        "contraction modulus {:.6} (minimum end probability {:.6})",
        game.contraction_modulus(),
        game.min_end_probability()
    );
    for (k, e) in game.elements().iter().enumerate() {
        let r = space.reduction(k);
        let restart = space.restart(k);
        println!("{}", space.state(k));
        println!("  alive nodes:      {:?}", r.alive.iter().map(|i| i + 1).collect::<Vec<_>>());
        println!("  effective assets: {}", format_row(r.effective_assets.iter().copied()));
        println!("  supports:         {}", format_row(r.supports.iter().copied()));
        println!(
            "  actions:          {} x {}; restart p_r {} p_e {}, nothing p_r {} p_e {}",
            e.rows(),
            e.cols(),
            restart.p_r,
            restart.p_e,
            restart.p_nothing_r,
            restart.p_nothing_e
        );
    }
    if let Some(path) = dump_game {
        write_output(path, &to_json(&game.dump()))?;
    }
    Ok(())
}

fn cmd_matgame(path: &Path) -> CmdResult {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    let payoff = matrix::parse(&text)?;
    let solution = solve_matrix_game(&payoff)?;
    let (lower, upper) = solution.guarantees(&payoff);
    println!("value: {:.6}", solution.value);
    println!("row strategy:    {}", format_row(solution.row_strategy.iter().copied()));
    println!("column strategy: {}", format_row(solution.col_strategy.iter().copied()));
    println!("guarantees: [{lower:.6}, {upper:.6}]");
    Ok(())
}
