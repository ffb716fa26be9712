//! `run-l2l`: the full nested loop from a JSON experiment config.
//!
//! Artifacts, all stamped with the config hash:
//!
//! - `history.csv`: one row per evaluated candidate, appended and flushed
//!   generation by generation, so an interrupted run keeps its progress.
//!   Header: `config_hash,generation,candidate,mean_fitness,<dim names...>`
//!   with decoded hyperparameter values per dimension.
//! - `best_theta.json`: the holdout winner as a [`ThetaArtifact`].
//! - `eval_report.csv`: per-task held-out scores of every finalist.
//!   Header: `config_hash,finalist,winner,task,score`.

use std::path::PathBuf;
use std::time::Instant;

use neuro_l2l_core::config::config_hash;
use neuro_l2l_core::outer::run_l2l;
use neuro_l2l_core::Result;

use crate::table::{num, CsvWriter};
use crate::{load_experiment_config, resolve_out_dir, write_text, ThetaArtifact};

#[derive(Debug, Clone)]
pub struct Args {
    pub config: PathBuf,
    pub out_dir: Option<PathBuf>,
    /// Overrides the config's generation count; 0 is a valid no-op loop that
    /// still evaluates and reports the optimizer's initial candidate.
    pub generations: Option<usize>,
    /// Print wall-clock timing of the outer loop.
    pub bench: bool,
}

#[derive(Debug, Clone)]
pub struct Summary {
    pub config_hash: String,
    pub out_dir: PathBuf,
    pub generations: usize,
    pub history_rows: usize,
    pub holdout_mean: f64,
}

pub fn execute(args: &Args) -> Result<Summary> {
    let mut cfg = load_experiment_config(&args.config)?;
    if let Some(generations) = args.generations {
        cfg.generations = generations;
    }
    let hash = config_hash(&cfg)?;
    let run = cfg.to_run()?;
    let out_dir = resolve_out_dir(args.out_dir.as_deref(), cfg.output_dir.as_deref())?;
    println!("config hash {hash}");

    let history_path = out_dir.join("history.csv");
    let mut header: Vec<String> = ["config_hash", "generation", "candidate", "mean_fitness"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(run.experiment.space.names().iter().map(|n| n.to_string()));
    let mut history = CsvWriter::create(&history_path, &header)?;

    let started = Instant::now();
    let outcome = run_l2l(&run, |gen, records| {
        for rec in records {
            let mut row = vec![
                hash.clone(),
                gen.to_string(),
                rec.candidate_id.to_string(),
                num(rec.mean_fitness),
            ];
            row.extend(rec.decoded.iter().map(|v| num(*v)));
            history.write_row(&row)?;
        }
        Ok(())
    })?;
    let elapsed = started.elapsed().as_secs_f64();

    let artifact = ThetaArtifact {
        config_hash: hash.clone(),
        master_seed: cfg.master_seed,
        holdout_mean: outcome.best.holdout_mean,
        names: outcome.best.names.clone(),
        encoded: outcome.best.encoded.clone(),
        decoded: outcome.best.decoded.clone(),
    };
    let theta_path = out_dir.join("best_theta.json");
    write_text(
        &theta_path,
        &format!("{}\n", serde_json::to_string_pretty(&artifact)?),
    )?;

    let report_path = out_dir.join("eval_report.csv");
    let report_header: Vec<String> = ["config_hash", "finalist", "winner", "task", "score"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut report = CsvWriter::create(&report_path, &report_header)?;
    for (i, rec) in outcome.holdout.iter().enumerate() {
        let winner = if i == outcome.best_index { "1" } else { "0" };
        for (task, score) in rec.per_task_scores.iter().enumerate() {
            report.write_row(&[
                hash.clone(),
                i.to_string(),
                winner.to_string(),
                task.to_string(),
                num(*score),
            ])?;
        }
    }

    println!(
        "history {} ({} rows over {} generations)",
        history_path.display(),
        history.rows(),
        run.generations
    );
    println!(
        "best theta {} (holdout mean {:.4} over {} tasks)",
        theta_path.display(),
        outcome.best.holdout_mean,
        run.holdout_tasks
    );
    println!("eval report {}", report_path.display());
    if args.bench {
        let evals = run.generations * run.optimizer.gen_cost(run.experiment.space.dim());
        println!(
            "bench: {} candidate evaluations in {elapsed:.2}s ({:.1} evals/s)",
            evals,
            evals as f64 / elapsed.max(1e-9)
        );
    }

    Ok(Summary {
        config_hash: hash,
        out_dir,
        generations: run.generations,
        history_rows: history.rows(),
        holdout_mean: outcome.best.holdout_mean,
    })
}
