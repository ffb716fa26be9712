//! Fitness of a hyperparameter vector on a task family: decode the vector
//! into an agent, run one learning trial per sampled task, normalize each
//! return against the random and optimal baselines, and average.
//!
//! Every random draw comes from a stream keyed by (master seed, role,
//! generation, candidate, task), so batches evaluate to the same records no
//! matter how many workers run them or in what order.

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{greedy_policy, value_iteration};
use crate::emulator::{Crossbar, EmulatorConfig, QuantMode};
use crate::env::{
    mab_reference, mab_reference_curves, mdp_expected_return_policy, mdp_expected_return_uniform,
    mdp_return_curve_policy, mdp_return_curve_uniform, normalized_score, sample_mab, sample_mdp,
    MabFamily, Task,
};
use crate::error::{Error, Result};
use crate::outer::space::SearchSpace;
use crate::plasticity::{run_trial, AnnRule, Rule, TdParams, ANN_THETA_DIM};
use crate::seed::{stream, StreamRole};

/// Accuracy of the value-iteration ceiling used for score normalization.
const VI_REF_TOL: f64 = 1e-8;

/// A sampled task whose baselines are too close to score cannot rank agents;
/// retry with a salted stream this many times before giving up.
const MAX_TASK_RESAMPLES: u64 = 16;

/// Upper bound on the standard deviation of one trial's return: per-step
/// rewards have variance at most 1/4 (Bernoulli arms, uniform MDP rewards),
/// discounted and summed over the horizon. A task whose optimal-vs-random
/// span falls below this floor cannot be resolved by a single trial, and its
/// normalized score is numerically explosive, so such tasks are resampled.
fn return_noise_floor(gamma_env: f64, horizon: usize) -> f64 {
    let var_sum = if gamma_env >= 1.0 {
        horizon as f64
    } else {
        let g2 = gamma_env * gamma_env;
        (1.0 - g2.powi(horizon as i32)) / (1.0 - g2)
    };
    0.5 * var_sum.sqrt()
}

/// Which task distribution the outer loop optimizes over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FamilySpec {
    Mdp {
        n_states: usize,
        n_actions: usize,
        gamma: f64,
    },
    Mab {
        family: MabFamily,
    },
}

impl FamilySpec {
    pub fn n_states(&self) -> usize {
        match self {
            FamilySpec::Mdp { n_states, .. } => *n_states,
            FamilySpec::Mab { .. } => 1,
        }
    }

    pub fn n_actions(&self) -> usize {
        match self {
            FamilySpec::Mdp { n_actions, .. } => *n_actions,
            FamilySpec::Mab { .. } => 2,
        }
    }
}

/// Which learning rule the candidate vector parameterizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleSpec {
    TdLambda,
    Td1,
    Ann,
}

/// One point in the search space, in encoded (optimizer) coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub encoded: Vec<f64>,
}

impl Candidate {
    pub fn new(encoded: Vec<f64>) -> Self {
        Candidate { encoded }
    }
}

/// Fitness of one candidate on one task batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitnessRecord {
    pub generation: u64,
    pub candidate_id: usize,
    pub encoded: Vec<f64>,
    pub decoded: Vec<f64>,
    pub per_task_scores: Vec<f64>,
    pub mean_fitness: f64,
}

/// A candidate decoded into something that can learn: rule, selection gains,
/// and the crossbar configuration it runs on.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedAgent {
    pub rule: Rule,
    pub xi: f64,
    pub zeta: f64,
    pub emu: EmulatorConfig,
}

/// One outer-loop problem: a family, a rule, a search space over the rule's
/// hyperparameters, and the batch geometry used to estimate fitness.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub family: FamilySpec,
    pub rule: RuleSpec,
    pub space: SearchSpace,
    /// Tasks per fitness estimate (N).
    pub n_tasks: usize,
    /// Steps per learning trial (T).
    pub horizon: usize,
    pub quant: QuantMode,
    pub master_seed: u64,
    /// Score trials as normalized (0 = random, 1 = optimal) rather than raw
    /// discounted return.
    pub normalize: bool,
    /// Template emulator configuration; candidates overwrite the fields they
    /// optimize (rescale range and period for the tabular MDP rule).
    pub emu_base: EmulatorConfig,
}

impl Experiment {
    pub fn new(
        family: FamilySpec,
        rule: RuleSpec,
        n_tasks: usize,
        horizon: usize,
        quant: QuantMode,
        master_seed: u64,
    ) -> Result<Self> {
        if n_tasks == 0 {
            return Err(Error::Config("n_tasks must be at least 1".into()));
        }
        if horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        match (family, rule) {
            (FamilySpec::Mdp { gamma, .. }, RuleSpec::TdLambda) => {
                if !(0.0..1.0).contains(&gamma) {
                    return Err(Error::Config(format!(
                        "mdp family gamma must lie in [0,1), got {gamma}"
                    )));
                }
            }
            (FamilySpec::Mab { .. }, RuleSpec::Td1) => {}
            (FamilySpec::Mab { family }, RuleSpec::Ann) => {
                if family != MabFamily::Structured {
                    return Err(Error::Config(
                        "the learned ann rule is only defined on structured bandits".into(),
                    ));
                }
            }
            (f, r) => {
                return Err(Error::Config(format!(
                    "rule {r:?} does not apply to family {f:?}"
                )));
            }
        }
        Crossbar::check_dims(family.n_states(), family.n_actions(), quant)
            .map_err(|e| Error::Config(e.to_string()))?;
        let space = match rule {
            RuleSpec::TdLambda => SearchSpace::mdp_td_lambda(horizon),
            RuleSpec::Td1 => SearchSpace::mab_td1(),
            RuleSpec::Ann => SearchSpace::mab_ann(),
        };
        Ok(Experiment {
            family,
            rule,
            space,
            n_tasks,
            horizon,
            quant,
            master_seed,
            normalize: true,
            emu_base: EmulatorConfig {
                quant,
                ..EmulatorConfig::default()
            },
        })
    }

    /// Replaces the emulator template (electrical constants, timing, default
    /// weight handling). The experiment's weight storage mode wins over
    /// whatever the template says.
    pub fn with_emulator_base(mut self, mut base: EmulatorConfig) -> Result<Self> {
        base.quant = self.quant;
        base.validate()?;
        self.emu_base = base;
        Ok(self)
    }

    /// Decodes an encoded candidate into a runnable agent.
    pub fn agent(&self, encoded: &[f64]) -> Result<DecodedAgent> {
        if encoded.len() != self.space.dim() {
            return Err(Error::InvalidArgument(format!(
                "candidate has {} dims, experiment needs {}",
                encoded.len(),
                self.space.dim()
            )));
        }
        self.agent_from_decoded(&self.space.decode(encoded))
    }

    /// Builds the agent from already-decoded values (same order as the
    /// space's dims).
    pub fn agent_from_decoded(&self, d: &[f64]) -> Result<DecodedAgent> {
        if d.len() != self.space.dim() {
            return Err(Error::InvalidArgument(format!(
                "decoded vector has {} dims, experiment needs {}",
                d.len(),
                self.space.dim()
            )));
        }
        let agent = match self.rule {
            RuleSpec::TdLambda => {
                let period = (d[5].round() as u64).clamp(1, self.horizon as u64);
                DecodedAgent {
                    rule: Rule::TdLambda(TdParams {
                        alpha0: d[0],
                        alpha_decay: 1.0,
                        gamma: d[1],
                        lambda: d[2],
                    }),
                    xi: d[3],
                    zeta: d[4],
                    emu: EmulatorConfig {
                        w_max: d[6],
                        w_min: d[7],
                        rescale_period: Some(period),
                        ..self.emu_base.clone()
                    },
                }
            }
            RuleSpec::Td1 => DecodedAgent {
                rule: Rule::Td1(TdParams {
                    alpha0: d[0],
                    // Squashed coordinates can touch 0.0 in floats; the rule
                    // requires a positive decay.
                    alpha_decay: d[1].max(f64::MIN_POSITIVE),
                    gamma: 1.0,
                    lambda: 0.0,
                }),
                xi: d[2],
                zeta: d[3],
                emu: self.emu_base.clone(),
            },
            RuleSpec::Ann => DecodedAgent {
                rule: Rule::Ann(AnnRule::new(d[..ANN_THETA_DIM].to_vec(), 1.0)?),
                xi: d[ANN_THETA_DIM],
                zeta: d[ANN_THETA_DIM + 1],
                emu: self.emu_base.clone(),
            },
        };
        agent.rule.validate()?;
        Ok(agent)
    }

    fn sample_task(&self, rng: &mut ChaCha8Rng) -> Result<Task> {
        match self.family {
            FamilySpec::Mdp {
                n_states,
                n_actions,
                gamma,
            } => Ok(Task::Mdp(sample_mdp(n_states, n_actions, gamma, rng)?)),
            FamilySpec::Mab { family } => Ok(Task::Mab(sample_mab(family, rng))),
        }
    }

    /// Random-policy and optimal baselines for one task, used as the 0 and 1
    /// anchors of the normalized score.
    pub fn references(&self, task: &Task) -> Result<(f64, f64)> {
        match task {
            Task::Mdp(m) => {
                let rand_ref = mdp_expected_return_uniform(m, self.horizon, m.gamma);
                let (q, _) = value_iteration(m, VI_REF_TOL)?;
                let policy = greedy_policy(&q);
                let opt_ref = mdp_expected_return_policy(m, &policy, self.horizon, m.gamma);
                Ok((rand_ref, opt_ref))
            }
            Task::Mab(m) => Ok(mab_reference(m, self.horizon)),
        }
    }

    /// Per-step versions of [`Self::references`]: expected cumulative return
    /// of the random and optimal baselines after each step. Entry t covers
    /// the first t+1 steps; the last entries equal `references`.
    pub fn reference_curves(&self, task: &Task) -> Result<(Vec<f64>, Vec<f64>)> {
        match task {
            Task::Mdp(m) => {
                let rand_curve = mdp_return_curve_uniform(m, self.horizon, m.gamma);
                let (q, _) = value_iteration(m, VI_REF_TOL)?;
                let policy = greedy_policy(&q);
                let opt_curve = mdp_return_curve_policy(m, &policy, self.horizon, m.gamma);
                Ok((rand_curve, opt_curve))
            }
            Task::Mab(m) => Ok(mab_reference_curves(m, self.horizon)),
        }
    }

    /// Samples a task whose baselines are far enough apart to score against,
    /// salting the stream on each retry. Coordinates identify the task slot;
    /// the salt keeps retries reproducible.
    pub fn sample_scoreable_task(
        &self,
        role: StreamRole,
        slot: &[u64],
    ) -> Result<(Task, f64, f64)> {
        let mut coords = slot.to_vec();
        for attempt in 0..MAX_TASK_RESAMPLES {
            coords.push(attempt);
            let mut rng = stream(self.master_seed, role, &coords);
            coords.pop();
            let task = self.sample_task(&mut rng)?;
            let (rand_ref, opt_ref) = self.references(&task)?;
            let span = opt_ref - rand_ref;
            let floor = return_noise_floor(task.gamma_env(), self.horizon);
            if self.normalize && span.abs() <= floor {
                continue;
            }
            return Ok((task, rand_ref, opt_ref));
        }
        Err(Error::Runtime(format!(
            "no scoreable task for slot {slot:?} after {MAX_TASK_RESAMPLES} attempts"
        )))
    }

    /// Runs one learning trial of `agent` on `task` and scores it.
    pub fn task_fitness(
        &self,
        agent: &DecodedAgent,
        task: &Task,
        rand_ref: f64,
        opt_ref: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<f64> {
        let traj = run_trial(
            task,
            &agent.rule,
            agent.emu.clone(),
            agent.xi,
            agent.zeta,
            self.horizon,
            rng,
        )?;
        if self.normalize {
            normalized_score(traj.raw_return, rand_ref, opt_ref)
        } else {
            Ok(traj.raw_return)
        }
    }

    fn generation_task_score(
        &self,
        agent: &DecodedAgent,
        generation: u64,
        candidate_id: usize,
        task_idx: usize,
    ) -> Result<f64> {
        let slot = [generation, candidate_id as u64, task_idx as u64];
        let (task, rand_ref, opt_ref) = self.sample_scoreable_task(StreamRole::TaskSample, &slot)?;
        let mut trial_rng = stream(self.master_seed, StreamRole::Trial, &slot);
        self.task_fitness(agent, &task, rand_ref, opt_ref, &mut trial_rng)
    }

    fn record(
        &self,
        generation: u64,
        candidate_id: usize,
        encoded: &[f64],
        per_task_scores: Vec<f64>,
    ) -> FitnessRecord {
        let mean_fitness = per_task_scores.iter().sum::<f64>() / per_task_scores.len() as f64;
        FitnessRecord {
            generation,
            candidate_id,
            encoded: encoded.to_vec(),
            decoded: self.space.decode(encoded),
            per_task_scores,
            mean_fitness,
        }
    }

    /// Fitness of a single candidate on its own generation-keyed task batch.
    pub fn evaluate(
        &self,
        generation: u64,
        candidate_id: usize,
        encoded: &[f64],
    ) -> Result<FitnessRecord> {
        let agent = self.agent(encoded)?;
        let scores = (0..self.n_tasks)
            .into_par_iter()
            .map(|ti| self.generation_task_score(&agent, generation, candidate_id, ti))
            .collect::<Result<Vec<f64>>>()?;
        Ok(self.record(generation, candidate_id, encoded, scores))
    }

    /// Evaluates a whole generation, parallelizing over candidate x task
    /// pairs. Records come back in candidate order.
    pub fn evaluate_generation(
        &self,
        generation: u64,
        candidates: &[Candidate],
    ) -> Result<Vec<FitnessRecord>> {
        let agents = candidates
            .iter()
            .map(|c| self.agent(&c.encoded))
            .collect::<Result<Vec<_>>>()?;
        let pairs: Vec<(usize, usize)> = (0..candidates.len())
            .flat_map(|c| (0..self.n_tasks).map(move |t| (c, t)))
            .collect();
        let scores = pairs
            .into_par_iter()
            .map(|(c, t)| self.generation_task_score(&agents[c], generation, c, t))
            .collect::<Result<Vec<f64>>>()?;
        Ok(candidates
            .iter()
            .enumerate()
            .map(|(c, cand)| {
                let per = scores[c * self.n_tasks..(c + 1) * self.n_tasks].to_vec();
                self.record(generation, c, &cand.encoded, per)
            })
            .collect())
    }

    /// Evaluates finalists on a shared held-out task batch (every finalist
    /// sees the same tasks; trial noise stays per-finalist). Used to pick the
    /// best candidate without trusting its own training-batch score.
    pub fn evaluate_holdout(
        &self,
        generation: u64,
        finalists: &[Candidate],
        n_holdout_tasks: usize,
    ) -> Result<Vec<FitnessRecord>> {
        if n_holdout_tasks == 0 {
            return Err(Error::Config("holdout batch must be at least 1 task".into()));
        }
        let agents = finalists
            .iter()
            .map(|c| self.agent(&c.encoded))
            .collect::<Result<Vec<_>>>()?;
        let tasks = (0..n_holdout_tasks)
            .into_par_iter()
            .map(|ti| self.sample_scoreable_task(StreamRole::HoldoutTask, &[ti as u64]))
            .collect::<Result<Vec<_>>>()?;
        let pairs: Vec<(usize, usize)> = (0..finalists.len())
            .flat_map(|f| (0..n_holdout_tasks).map(move |t| (f, t)))
            .collect();
        let scores = pairs
            .into_par_iter()
            .map(|(f, t)| {
                let (task, rand_ref, opt_ref) = &tasks[t];
                let mut rng =
                    stream(self.master_seed, StreamRole::HoldoutTrial, &[f as u64, t as u64]);
                self.task_fitness(&agents[f], task, *rand_ref, *opt_ref, &mut rng)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(finalists
            .iter()
            .enumerate()
            .map(|(f, cand)| {
                let per = scores[f * n_holdout_tasks..(f + 1) * n_holdout_tasks].to_vec();
                self.record(generation, f, &cand.encoded, per)
            })
            .collect())
    }
}
