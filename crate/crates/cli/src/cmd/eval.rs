//! `eval-agent`: score a saved hyperparameter vector on fresh held-out
//! tasks of the config's family.
//!
//! Writes `eval_report.csv` (`config_hash,finalist,winner,task,score`, one
//! finalist) and prints the mean with its standard error.

use std::path::PathBuf;

use neuro_l2l_core::config::config_hash;
use neuro_l2l_core::outer::Candidate;
use neuro_l2l_core::{Error, Result};

use crate::table::{num, CsvWriter};
use crate::{load_experiment_config, load_json, mean_sem, resolve_out_dir, ThetaArtifact};

#[derive(Debug, Clone)]
pub struct Args {
    pub config: PathBuf,
    pub theta: PathBuf,
    /// Held-out task count; the config's holdout default otherwise.
    pub tasks: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Summary {
    pub config_hash: String,
    pub mean: f64,
    pub sem: f64,
    pub n_tasks: usize,
}

pub fn execute(args: &Args) -> Result<Summary> {
    let cfg = load_experiment_config(&args.config)?;
    let hash = config_hash(&cfg)?;
    let exp = cfg.to_experiment()?;
    let artifact: ThetaArtifact = load_json(&args.theta)?;
    if artifact.encoded.len() != exp.space.dim() {
        return Err(Error::Config(format!(
            "theta artifact has {} dims but the config's search space has {}",
            artifact.encoded.len(),
            exp.space.dim()
        )));
    }
    println!("config hash {hash}");
    if artifact.config_hash != hash {
        println!(
            "note: theta artifact came from config {}, evaluating under {hash}",
            artifact.config_hash
        );
    }

    let n_tasks = args.tasks.unwrap_or_else(|| cfg.holdout_tasks());
    let candidate = Candidate::new(artifact.encoded.clone());
    let records = exp.evaluate_holdout(0, &[candidate], n_tasks)?;
    let record = &records[0];
    let (mean, sem) = mean_sem(&record.per_task_scores);

    let out_dir = resolve_out_dir(args.out_dir.as_deref(), cfg.output_dir.as_deref())?;
    let report_path = out_dir.join("eval_report.csv");
    let header: Vec<String> = ["config_hash", "finalist", "winner", "task", "score"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut report = CsvWriter::create(&report_path, &header)?;
    for (task, score) in record.per_task_scores.iter().enumerate() {
        report.write_row(&[
            hash.clone(),
            "0".to_string(),
            "1".to_string(),
            task.to_string(),
            num(*score),
        ])?;
    }

    println!("eval report {}", report_path.display());
    println!("mean score {mean:.4} +/- {sem:.4} over {n_tasks} tasks");
    Ok(Summary {
        config_hash: hash,
        mean,
        sem,
        n_tasks,
    })
}
