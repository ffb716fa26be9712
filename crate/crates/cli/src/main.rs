//! Thin argument layer over [`neuro_l2l_cli::cmd`]. Exit codes: 0 success,
//! 2 configuration or usage problems, 3 runtime failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use neuro_l2l_cli::cmd;
use neuro_l2l_cli::cmd::curves::Policy;

#[derive(Parser)]
#[command(
    name = "neuro-l2l",
    version,
    about = "Meta-optimization experiments for an emulated spiking reinforcement learner"
)]
struct Cli {
    /// Worker threads for candidate evaluation; results are identical for
    /// any value (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the nested optimization loop from a JSON experiment config.
    RunL2l {
        /// Experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's output_dir; default ".").
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Override the config's generation count; 0 evaluates the initial
        /// candidate without optimizing.
        #[arg(long)]
        generations: Option<usize>,
        /// Print wall-clock throughput of the outer loop.
        #[arg(long)]
        bench: bool,
    },
    /// Evaluate a saved hyperparameter vector on fresh held-out tasks.
    EvalAgent {
        /// Experiment config (JSON) defining family, rule, and horizon.
        #[arg(long)]
        config: PathBuf,
        /// best_theta.json from a previous run.
        #[arg(long)]
        theta: PathBuf,
        /// Held-out task count (default: the config's holdout count).
        #[arg(long)]
        tasks: Option<usize>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Score reference policies (random, optimal, Gittins) on the family.
    Baselines {
        /// Experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Task count (default: 50 for MDPs, 1000 for bandits).
        #[arg(long)]
        tasks: Option<usize>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run several optimizers with equal budgets and compare final fitness.
    CompareOptimizers {
        /// Comparison config (JSON) with an optimizer list and a budget.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Per-step running normalized score of a policy over fresh tasks.
    LearningCurves {
        /// Experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// best_theta.json (required for the default "theta" policy).
        #[arg(long)]
        theta: Option<PathBuf>,
        /// theta, oracle, gittins, or random.
        #[arg(long, default_value = "theta")]
        policy: String,
        /// Evaluation task count (default: 50 for MDPs, 1000 for bandits).
        #[arg(long)]
        eval_tasks: Option<usize>,
        /// Also write learning_curves.svg.
        #[arg(long)]
        svg: bool,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Variance decomposition and update curves of a learned MLP rule.
    Analyze {
        /// Experiment config (JSON) with rule "ann".
        #[arg(long)]
        config: PathBuf,
        /// best_theta.json holding the learned rule.
        #[arg(long)]
        theta: PathBuf,
        /// Monte-Carlo samples for the variance decomposition.
        #[arg(long, default_value_t = 20000)]
        samples: usize,
        /// Grid points for the update curves.
        #[arg(long, default_value_t = 33)]
        grid: usize,
        /// Marginalization draws per grid point.
        #[arg(long, default_value_t = 512)]
        marginal: usize,
        /// Also write analyze.svg.
        #[arg(long)]
        svg: bool,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
        if let Err(e) = pool {
            eprintln!("error: cannot size the worker pool: {e}");
            return ExitCode::from(3);
        }
    }
    let result = match cli.command {
        Command::RunL2l {
            config,
            out_dir,
            generations,
            bench,
        } => cmd::run::execute(&cmd::run::Args {
            config,
            out_dir,
            generations,
            bench,
        })
        .map(|_| ()),
        Command::EvalAgent {
            config,
            theta,
            tasks,
            out_dir,
        } => cmd::eval::execute(&cmd::eval::Args {
            config,
            theta,
            tasks,
            out_dir,
        })
        .map(|_| ()),
        Command::Baselines {
            config,
            tasks,
            out_dir,
        } => cmd::baselines::execute(&cmd::baselines::Args {
            config,
            tasks,
            out_dir,
        })
        .map(|_| ()),
        Command::CompareOptimizers { config, out_dir } => {
            cmd::compare::execute(&cmd::compare::Args { config, out_dir }).map(|_| ())
        }
        Command::LearningCurves {
            config,
            theta,
            policy,
            eval_tasks,
            svg,
            out_dir,
        } => Policy::parse(&policy).and_then(|policy| {
            cmd::curves::execute(&cmd::curves::Args {
                config,
                theta,
                policy,
                eval_tasks,
                svg,
                out_dir,
            })
            .map(|_| ())
        }),
        Command::Analyze {
            config,
            theta,
            samples,
            grid,
            marginal,
            svg,
            out_dir,
        } => cmd::analyze::execute(&cmd::analyze::Args {
            config,
            theta,
            samples,
            grid,
            marginal,
            svg,
            out_dir,
        })
        .map(|_| ()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
