//! `baselines`: reference-policy scores on the config's task family.
//!
//! MDP families report the uniform-random policy and the value-iteration
//! greedy policy; bandit families report random, the clairvoyant best arm,
//! and the Gittins index policy (posterior from a uniform prior, discount
//! 0.9). Scores use the config's normalization, so random lands near 0 and
//! the optimal reference near 1 by construction.
//!
//! Writes `baselines.csv`: `config_hash,policy,mean_score,sem,n_tasks`.

use std::path::PathBuf;

use neuro_l2l_core::baselines::{
    run_best_arm, run_gittins, run_random_policy, run_vi_greedy, GittinsTable,
};
use neuro_l2l_core::config::config_hash;
use neuro_l2l_core::env::{normalized_score, Task};
use neuro_l2l_core::outer::FamilySpec;
use neuro_l2l_core::seed::{stream, StreamRole};
use neuro_l2l_core::{Error, Result};

use crate::table::{num, write_csv};
use crate::{load_experiment_config, mean_sem, resolve_out_dir};

/// Discount used to build the Gittins table, matching the policy the
/// emulated agents are compared against.
const GITTINS_BETA: f64 = 0.9;
/// Value-iteration tolerance for the greedy reference rollout.
const VI_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Args {
    pub config: PathBuf,
    /// Evaluation task count; defaults to 50 for MDP families and 1000 for
    /// bandit families.
    pub tasks: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct PolicyRow {
    pub policy: &'static str,
    pub mean: f64,
    pub sem: f64,
}

#[derive(Debug, Clone)]
pub struct Summary {
    pub config_hash: String,
    pub rows: Vec<PolicyRow>,
    pub n_tasks: usize,
}

pub fn default_eval_tasks(family: &FamilySpec) -> usize {
    match family {
        FamilySpec::Mdp { .. } => 50,
        FamilySpec::Mab { .. } => 1000,
    }
}

pub fn execute(args: &Args) -> Result<Summary> {
    let cfg = load_experiment_config(&args.config)?;
    let hash = config_hash(&cfg)?;
    let exp = cfg.to_experiment()?;
    let n_tasks = args.tasks.unwrap_or_else(|| default_eval_tasks(&cfg.family));
    if n_tasks == 0 {
        return Err(Error::Config("baselines need at least 1 task".into()));
    }
    println!("config hash {hash}");

    let policies: &[&'static str] = match cfg.family {
        FamilySpec::Mdp { .. } => &["random", "vi_greedy"],
        FamilySpec::Mab { .. } => &["random", "best_arm", "gittins"],
    };
    let gittins = match cfg.family {
        FamilySpec::Mab { .. } => Some(GittinsTable::build(cfg.horizon, GITTINS_BETA)?),
        FamilySpec::Mdp { .. } => None,
    };

    let mut scores: Vec<Vec<f64>> = vec![Vec::with_capacity(n_tasks); policies.len()];
    for ti in 0..n_tasks as u64 {
        let (task, rand_ref, opt_ref) =
            exp.sample_scoreable_task(StreamRole::Analysis, &[0, ti])?;
        for (p, name) in policies.iter().enumerate() {
            let mut rng = stream(exp.master_seed, StreamRole::Analysis, &[3, p as u64, ti]);
            let traj = match (*name, &task) {
                ("random", t) => run_random_policy(t, exp.horizon, &mut rng)?,
                ("vi_greedy", Task::Mdp(m)) => run_vi_greedy(m, exp.horizon, VI_TOL, &mut rng)?,
                ("best_arm", Task::Mab(m)) => run_best_arm(m, exp.horizon, &mut rng)?,
                ("gittins", Task::Mab(m)) => run_gittins(
                    m,
                    exp.horizon,
                    gittins.as_ref().expect("table built for bandit families"),
                    &mut rng,
                )?,
                _ => unreachable!("policy list matches the family"),
            };
            let score = if exp.normalize {
                normalized_score(traj.raw_return, rand_ref, opt_ref)?
            } else {
                traj.raw_return
            };
            scores[p].push(score);
        }
    }

    let out_dir = resolve_out_dir(args.out_dir.as_deref(), cfg.output_dir.as_deref())?;
    let path = out_dir.join("baselines.csv");
    let header: Vec<String> = ["config_hash", "policy", "mean_score", "sem", "n_tasks"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut rows = Vec::new();
    let mut out_rows = Vec::new();
    for (p, name) in policies.iter().enumerate() {
        let (mean, sem) = mean_sem(&scores[p]);
        out_rows.push(vec![
            hash.clone(),
            name.to_string(),
            num(mean),
            num(sem),
            n_tasks.to_string(),
        ]);
        println!("{name:>9}: {mean:.4} +/- {sem:.4}");
        rows.push(PolicyRow {
            policy: name,
            mean,
            sem,
        });
    }
    write_csv(&path, &header, &out_rows)?;
    println!("baselines {}", path.display());

    Ok(Summary {
        config_hash: hash,
        rows,
        n_tasks,
    })
}
