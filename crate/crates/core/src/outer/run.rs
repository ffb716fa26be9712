//! The outer optimization loop: drive an optimizer over generations of
//! fitness batches, then pick the final hyperparameters by re-evaluating the
//! optimizer's finalists on a held-out task batch. The training batches are
//! fresh every generation, so the training argmax alone would be biased
//! toward lucky noise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::outer::experiment::{Candidate, Experiment, FitnessRecord};
use crate::outer::optim::{build_optimizer, OptimizerSpec};
use crate::seed::{stream, StreamRole};

/// One full outer-loop run specification.
#[derive(Debug, Clone, PartialEq)]
pub struct L2lRun {
    pub experiment: Experiment,
    pub optimizer: OptimizerSpec,
    pub generations: usize,
    /// Held-out tasks for final candidate selection.
    pub holdout_tasks: usize,
}

/// The selected hyperparameters, in both coordinate systems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestTheta {
    pub names: Vec<String>,
    pub encoded: Vec<f64>,
    pub decoded: Vec<f64>,
    /// Mean normalized score on the held-out batch.
    pub holdout_mean: f64,
}

/// Everything a finished run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct L2lOutcome {
    /// Every fitness record of every generation, in evaluation order.
    pub history: Vec<FitnessRecord>,
    /// Finalists' records on the shared held-out batch.
    pub holdout: Vec<FitnessRecord>,
    /// Index of the winning finalist within `holdout`.
    pub best_index: usize,
    pub best: BestTheta,
}

/// Runs the loop, invoking `on_generation` after each generation's records
/// are in (for incremental artifact flushing).
pub fn run_l2l(
    run: &L2lRun,
    mut on_generation: impl FnMut(u64, &[FitnessRecord]) -> Result<()>,
) -> Result<L2lOutcome> {
    let exp = &run.experiment;
    let mut opt = build_optimizer(
        &run.optimizer,
        exp.space.clone(),
        exp.master_seed,
        run.generations,
    )?;
    let mut history = Vec::new();
    for gen in 0..run.generations as u64 {
        let candidates = opt.ask()?;
        let records = exp.evaluate_generation(gen, &candidates)?;
        opt.tell(&records)?;
        on_generation(gen, &records)?;
        history.extend(records);
    }
    // With zero generations the finalists are the optimizer's untouched
    // starting point, so this still emits a meaningful evaluation.
    let finalists = opt.finalists();
    let holdout = exp.evaluate_holdout(run.generations as u64, &finalists, run.holdout_tasks)?;
    let best_index = holdout
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| {
            a.mean_fitness
                .partial_cmp(&b.mean_fitness)
                .expect("holdout fitness must not be NaN")
        })
        .map(|(i, _)| i)
        .ok_or_else(|| Error::Runtime("no finalists to select from".into()))?;
    let winner = &holdout[best_index];
    let best = BestTheta {
        names: exp.space.names().iter().map(|s| s.to_string()).collect(),
        encoded: winner.encoded.clone(),
        decoded: winner.decoded.clone(),
        holdout_mean: winner.mean_fitness,
    };
    Ok(L2lOutcome {
        history,
        holdout,
        best_index,
        best,
    })
}

/// Held-out performance of `n_candidates` hyperparameter vectors drawn from
/// the init distribution, on the same held-out tasks the run's finalists
/// see. The returned records are the reference point for "did optimization
/// beat random search".
pub fn random_theta_baseline(
    exp: &Experiment,
    n_candidates: usize,
    holdout_tasks: usize,
) -> Result<Vec<FitnessRecord>> {
    if n_candidates == 0 {
        return Err(Error::Config("baseline needs at least 1 candidate".into()));
    }
    let candidates: Vec<Candidate> = (0..n_candidates)
        .map(|i| {
            let mut rng = stream(exp.master_seed, StreamRole::Baseline, &[i as u64]);
            Candidate::new(exp.space.sample_init(&mut rng))
        })
        .collect();
    exp.evaluate_holdout(0, &candidates, holdout_tasks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emulator::QuantMode;
    use crate::env::MabFamily;
    use crate::outer::experiment::{FamilySpec, RuleSpec};

    fn tiny_run(seed: u64, generations: usize) -> L2lRun {
        let experiment = Experiment::new(
            FamilySpec::Mab {
                family: MabFamily::Structured,
            },
            RuleSpec::Td1,
            3,
            30,
            QuantMode::Bits(6),
            seed,
        )
        .unwrap();
        L2lRun {
            experiment,
            optimizer: OptimizerSpec::Ce {
                pop: 8,
                elite_frac: 0.5,
                diag_cov: false,
            },
            generations,
            holdout_tasks: 5,
        }
    }

    #[test]
    fn zero_generations_is_a_no_op_evaluation() {
        let run = tiny_run(5, 0);
        let out = run_l2l(&run, |_, _| Ok(())).unwrap();
        assert!(out.history.is_empty());
        assert!(!out.holdout.is_empty());
        // The winner is the untouched initial incumbent: the init-box center.
        assert_eq!(out.best.encoded, run.experiment.space.init_center());
    }

    #[test]
    fn history_shape_and_callback_order() {
        let run = tiny_run(6, 3);
        let mut seen = Vec::new();
        let out = run_l2l(&run, |gen, recs| {
            seen.push((gen, recs.len()));
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, vec![(0, 8), (1, 8), (2, 8)]);
        assert_eq!(out.history.len(), 24);
        for (i, rec) in out.history.iter().enumerate() {
            assert_eq!(rec.generation, (i / 8) as u64);
            assert_eq!(rec.candidate_id, i % 8);
        }
    }

    #[test]
    fn same_seed_reproduces_everything() {
        let run = tiny_run(7, 2);
        let a = run_l2l(&run, |_, _| Ok(())).unwrap();
        let b = run_l2l(&run, |_, _| Ok(())).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.holdout, b.holdout);
        assert_eq!(a.best, b.best);
    }

    #[test]
    fn winner_is_the_holdout_argmax() {
        let run = tiny_run(8, 2);
        let out = run_l2l(&run, |_, _| Ok(())).unwrap();
        let max = out
            .holdout
            .iter()
            .map(|r| r.mean_fitness)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(out.holdout[out.best_index].mean_fitness, max);
        assert_eq!(out.best.holdout_mean, max);
        assert_eq!(out.best.names, vec!["alpha0", "alpha_decay", "xi", "zeta"]);
    }

    #[test]
    fn callback_errors_abort_the_run() {
        let run = tiny_run(9, 2);
        let res = run_l2l(&run, |gen, _| {
            if gen == 1 {
                Err(Error::Runtime("disk full".into()))
            } else {
                Ok(())
            }
        });
        assert!(res.is_err());
    }

    #[test]
    fn baseline_shares_the_holdout_tasks() {
        let run = tiny_run(10, 1);
        let base = random_theta_baseline(&run.experiment, 4, 5).unwrap();
        assert_eq!(base.len(), 4);
        assert!(base.iter().all(|r| r.per_task_scores.len() == 5));
        let again = random_theta_baseline(&run.experiment, 4, 5).unwrap();
        assert_eq!(base, again);
        // Different draws per candidate.
        assert_ne!(base[0].encoded, base[1].encoded);
    }
}
