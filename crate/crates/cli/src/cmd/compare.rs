//! `compare-optimizers`: run each configured optimizer on the same problem
//! with equal evaluation budgets and the same master seed, then score each
//! final incumbent on a shared held-out batch.
//!
//! The incumbent, not the best-ever candidate, is what gets scored: the
//! question here is where each optimizer ends up, and re-evaluating lucky
//! outliers would blur exactly the failure mode (divergence on a noisy
//! landscape) this comparison exists to expose. Holdout task and trial
//! streams are shared, so listing the same optimizer twice yields identical
//! rows, and a budget of 0 reports every optimizer's initial candidate.
//!
//! Writes `compare.csv`:
//! `config_hash,optimizer,generations,holdout_mean,ci_lo,ci_hi` with a
//! percentile-bootstrap 95% interval over per-task scores.

use std::path::PathBuf;

use neuro_l2l_core::config::config_hash;
use neuro_l2l_core::outer::{build_optimizer, Candidate};
use neuro_l2l_core::seed::{stream, StreamRole};
use neuro_l2l_core::Result;

use crate::table::{num, write_csv};
use crate::{bootstrap_mean_ci, load_compare_config, resolve_out_dir};

const N_BOOT: usize = 2000;

#[derive(Debug, Clone)]
pub struct Args {
    pub config: PathBuf,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct OptimizerRow {
    pub optimizer: &'static str,
    pub generations: usize,
    pub holdout_mean: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone)]
pub struct Summary {
    pub config_hash: String,
    pub rows: Vec<OptimizerRow>,
}

pub fn execute(args: &Args) -> Result<Summary> {
    let cfg = load_compare_config(&args.config)?;
    let hash = config_hash(&cfg)?;
    let runs = cfg.to_runs()?;
    println!("config hash {hash}");

    let mut rows = Vec::new();
    let mut out_rows = Vec::new();
    for (spec, run) in &runs {
        let exp = &run.experiment;
        let mut opt =
            build_optimizer(spec, exp.space.clone(), exp.master_seed, run.generations)?;
        for gen in 0..run.generations as u64 {
            let candidates = opt.ask()?;
            let records = exp.evaluate_generation(gen, &candidates)?;
            opt.tell(&records)?;
        }
        let incumbent = Candidate::new(opt.best_encoded());
        let record = &exp.evaluate_holdout(
            run.generations as u64,
            &[incumbent],
            run.holdout_tasks,
        )?[0];
        // A fresh stream per row keeps rows for identical optimizers
        // identical and pairs the resample indices across optimizers.
        let mut boot_rng = stream(exp.master_seed, StreamRole::Analysis, &[2]);
        let (ci_lo, ci_hi) = bootstrap_mean_ci(&record.per_task_scores, N_BOOT, &mut boot_rng);
        println!(
            "{:>2}: holdout mean {:.4} ci [{:.4}, {:.4}] ({} generations)",
            spec.name(),
            record.mean_fitness,
            ci_lo,
            ci_hi,
            run.generations
        );
        out_rows.push(vec![
            hash.clone(),
            spec.name().to_string(),
            run.generations.to_string(),
            num(record.mean_fitness),
            num(ci_lo),
            num(ci_hi),
        ]);
        rows.push(OptimizerRow {
            optimizer: spec.name(),
            generations: run.generations,
            holdout_mean: record.mean_fitness,
            ci_lo,
            ci_hi,
        });
    }

    let out_dir = resolve_out_dir(args.out_dir.as_deref(), cfg.output_dir.as_deref())?;
    let path = out_dir.join("compare.csv");
    let header: Vec<String> = [
        "config_hash",
        "optimizer",
        "generations",
        "holdout_mean",
        "ci_lo",
        "ci_hi",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    write_csv(&path, &header, &out_rows)?;
    println!("comparison {}", path.display());

    Ok(Summary {
        config_hash: hash,
        rows,
    })
}
