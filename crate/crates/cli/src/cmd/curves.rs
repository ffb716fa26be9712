//! `learning-curves`: running normalized score per step, averaged over
//! fresh evaluation tasks.
//!
//! For each task the cumulative discounted return after step t is scored
//! against the exact per-step random/optimal reference curves, giving a
//! trajectory of "how much of the achievable return has been collected so
//! far". Early steps are intrinsically noisy (the reference span grows with
//! t), which the reported standard error makes visible. Steps whose
//! reference span is numerically zero are skipped; the `n_tasks` column
//! records how many tasks entered each step's mean.
//!
//! Policies: `theta` (a saved artifact; the default), `oracle` (best arm /
//! value-iteration greedy), `gittins` (bandits only), `random`.
//!
//! Writes `learning_curves.csv`
//! (`config_hash,step,mean_score,sem,n_tasks`) and optionally
//! `learning_curves.svg` with a mean line and a 95% band.

use std::path::PathBuf;

use neuro_l2l_core::baselines::{
    run_best_arm, run_gittins, run_random_policy, run_vi_greedy, GittinsTable,
};
use neuro_l2l_core::config::config_hash;
use neuro_l2l_core::env::Task;
use neuro_l2l_core::plasticity::run_trial;
use neuro_l2l_core::seed::{stream, StreamRole};
use neuro_l2l_core::{Error, Result};

use crate::cmd::baselines::default_eval_tasks;
use crate::plot::{line_chart, Series};
use crate::table::{num, write_csv};
use crate::{load_experiment_config, load_json, resolve_out_dir, write_text, ThetaArtifact};

const GITTINS_BETA: f64 = 0.9;
const VI_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    Theta,
    Oracle,
    Gittins,
    Random,
}

impl Policy {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "theta" => Ok(Policy::Theta),
            "oracle" => Ok(Policy::Oracle),
            "gittins" => Ok(Policy::Gittins),
            "random" => Ok(Policy::Random),
            other => Err(Error::Config(format!(
                "unknown policy {other:?}; expected theta, oracle, gittins, or random"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Args {
    pub config: PathBuf,
    pub theta: Option<PathBuf>,
    pub policy: Policy,
    /// Evaluation task count; defaults to 50 for MDP families and 1000 for
    /// bandit families.
    pub eval_tasks: Option<usize>,
    pub svg: bool,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct StepStat {
    pub step: usize,
    pub mean: f64,
    pub sem: f64,
    pub n_tasks: usize,
}

#[derive(Debug, Clone)]
pub struct Summary {
    pub config_hash: String,
    pub steps: Vec<StepStat>,
}

pub fn execute(args: &Args) -> Result<Summary> {
    let cfg = load_experiment_config(&args.config)?;
    let hash = config_hash(&cfg)?;
    let exp = cfg.to_experiment()?;
    let n_tasks = args
        .eval_tasks
        .unwrap_or_else(|| default_eval_tasks(&cfg.family));
    if n_tasks == 0 {
        return Err(Error::Config("learning curves need at least 1 task".into()));
    }
    println!("config hash {hash}");

    let agent = match args.policy {
        Policy::Theta => {
            let path = args.theta.as_ref().ok_or_else(|| {
                Error::Config("policy \"theta\" needs --theta <best_theta.json>".into())
            })?;
            let artifact: ThetaArtifact = load_json(path)?;
            if artifact.encoded.len() != exp.space.dim() {
                return Err(Error::Config(format!(
                    "theta artifact has {} dims but the config's search space has {}",
                    artifact.encoded.len(),
                    exp.space.dim()
                )));
            }
            Some(exp.agent(&artifact.encoded)?)
        }
        _ => None,
    };
    let gittins = match (args.policy, &cfg.family) {
        (Policy::Gittins, neuro_l2l_core::outer::FamilySpec::Mab { .. }) => {
            Some(GittinsTable::build(cfg.horizon, GITTINS_BETA)?)
        }
        (Policy::Gittins, _) => {
            return Err(Error::Config(
                "the gittins policy only applies to bandit families".into(),
            ))
        }
        _ => None,
    };

    // Per-step accumulators over tasks.
    let mut sums = vec![0.0f64; exp.horizon];
    let mut sumsqs = vec![0.0f64; exp.horizon];
    let mut counts = vec![0usize; exp.horizon];
    for ti in 0..n_tasks as u64 {
        let (task, _, _) = exp.sample_scoreable_task(StreamRole::Analysis, &[0, ti])?;
        let (rand_curve, opt_curve) = exp.reference_curves(&task)?;
        let mut rng = stream(exp.master_seed, StreamRole::Analysis, &[1, ti]);
        let traj = match (args.policy, &task) {
            (Policy::Theta, t) => {
                let a = agent.as_ref().expect("decoded above");
                run_trial(t, &a.rule, a.emu.clone(), a.xi, a.zeta, exp.horizon, &mut rng)?
            }
            (Policy::Random, t) => run_random_policy(t, exp.horizon, &mut rng)?,
            (Policy::Oracle, Task::Mab(m)) => run_best_arm(m, exp.horizon, &mut rng)?,
            (Policy::Oracle, Task::Mdp(m)) => run_vi_greedy(m, exp.horizon, VI_TOL, &mut rng)?,
            (Policy::Gittins, Task::Mab(m)) => run_gittins(
                m,
                exp.horizon,
                gittins.as_ref().expect("table built above"),
                &mut rng,
            )?,
            (Policy::Gittins, Task::Mdp(_)) => unreachable!("rejected above"),
        };
        let gamma = task.gamma_env();
        let mut cum = 0.0;
        let mut factor = 1.0;
        for (t, step) in traj.steps.iter().enumerate() {
            cum += factor * step.reward;
            factor *= gamma;
            let span = opt_curve[t] - rand_curve[t];
            if span.abs() <= 1e-9 {
                continue;
            }
            let score = (cum - rand_curve[t]) / span;
            sums[t] += score;
            sumsqs[t] += score * score;
            counts[t] += 1;
        }
    }

    let mut steps = Vec::with_capacity(exp.horizon);
    for t in 0..exp.horizon {
        let n = counts[t];
        if n == 0 {
            continue;
        }
        let mean = sums[t] / n as f64;
        let sem = if n > 1 {
            let var = (sumsqs[t] - sums[t] * sums[t] / n as f64) / (n as f64 - 1.0);
            (var.max(0.0) / n as f64).sqrt()
        } else {
            0.0
        };
        steps.push(StepStat {
            step: t + 1,
            mean,
            sem,
            n_tasks: n,
        });
    }

    let out_dir = resolve_out_dir(args.out_dir.as_deref(), cfg.output_dir.as_deref())?;
    let csv_path = out_dir.join("learning_curves.csv");
    let header: Vec<String> = ["config_hash", "step", "mean_score", "sem", "n_tasks"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<String>> = steps
        .iter()
        .map(|s| {
            vec![
                hash.clone(),
                s.step.to_string(),
                num(s.mean),
                num(s.sem),
                s.n_tasks.to_string(),
            ]
        })
        .collect();
    write_csv(&csv_path, &header, &rows)?;
    println!("curves {}", csv_path.display());
    if let Some(last) = steps.last() {
        println!(
            "final step {}: {:.4} +/- {:.4} over {} tasks",
            last.step, last.mean, last.sem, last.n_tasks
        );
    }

    if args.svg {
        let xs: Vec<f64> = steps.iter().map(|s| s.step as f64).collect();
        let ys: Vec<f64> = steps.iter().map(|s| s.mean).collect();
        let lo: Vec<f64> = steps.iter().map(|s| s.mean - 1.96 * s.sem).collect();
        let hi: Vec<f64> = steps.iter().map(|s| s.mean + 1.96 * s.sem).collect();
        let svg = line_chart(
            "running normalized score",
            "step",
            "score",
            &[Series {
                name: "mean (95% band)".into(),
                xs,
                ys,
                band: Some((lo, hi)),
            }],
        );
        let svg_path = out_dir.join("learning_curves.svg");
        write_text(&svg_path, &svg)?;
        println!("plot {}", svg_path.display());
    }

    Ok(Summary {
        config_hash: hash,
        steps,
    })
}
