//! Experiment configuration files: the JSON schema runs are launched from,
//! cross-field validation, and the config hash stamped into every artifact
//! so results can be traced back to exact settings.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::emulator::{EmulatorConfig, QuantMode};
use crate::error::{Error, Result};
use crate::outer::experiment::{Experiment, FamilySpec, RuleSpec};
use crate::outer::optim::OptimizerSpec;
use crate::outer::run::L2lRun;
use crate::outer::space::SearchSpace;

/// Whether trials respect the chip's weight storage (quantized, capacity
/// capped) or run with unbounded real weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    HardwareFidelity,
    Ideal,
}

fn default_true() -> bool {
    true
}

/// One outer-loop run, as read from a JSON recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: FamilySpec,
    pub rule: RuleSpec,
    pub optimizer: OptimizerSpec,
    /// Tasks per fitness estimate (N).
    pub n_tasks: usize,
    /// Steps per learning trial (T).
    pub horizon: usize,
    pub generations: usize,
    pub master_seed: u64,
    pub mode: Mode,
    /// Held-out tasks for final candidate selection; defaults to n_tasks.
    #[serde(default)]
    pub holdout_tasks: Option<usize>,
    /// Electrical and timing constants; quantization follows `mode`.
    #[serde(default)]
    pub emulator: EmulatorConfig,
    #[serde(default = "default_true")]
    pub normalize: bool,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// The weight storage the mode dictates: hardware fidelity quantizes
    /// (honoring a custom bit depth from the emulator block), ideal mode
    /// stores raw reals.
    pub fn quant(&self) -> QuantMode {
        match self.mode {
            Mode::HardwareFidelity => match self.emulator.quant {
                QuantMode::Bits(b) => QuantMode::Bits(b),
                QuantMode::Ideal => QuantMode::Bits(6),
            },
            Mode::Ideal => QuantMode::Ideal,
        }
    }

    pub fn holdout_tasks(&self) -> usize {
        self.holdout_tasks.unwrap_or(self.n_tasks)
    }

    pub fn validate(&self) -> Result<()> {
        self.to_run().map(|_| ())
    }

    /// Builds the runnable experiment, checking every cross-field rule.
    pub fn to_experiment(&self) -> Result<Experiment> {
        let exp = Experiment::new(
            self.family,
            self.rule,
            self.n_tasks,
            self.horizon,
            self.quant(),
            self.master_seed,
        )?;
        let mut exp = exp
            .with_emulator_base(self.emulator.clone())
            .map_err(|e| Error::Config(e.to_string()))?;
        exp.normalize = self.normalize;
        Ok(exp)
    }

    pub fn to_run(&self) -> Result<L2lRun> {
        self.optimizer.validate()?;
        if self.holdout_tasks() == 0 {
            return Err(Error::Config("holdout_tasks must be at least 1".into()));
        }
        Ok(L2lRun {
            experiment: self.to_experiment()?,
            optimizer: self.optimizer,
            generations: self.generations,
            holdout_tasks: self.holdout_tasks(),
        })
    }
}

/// A same-budget optimizer comparison, as read from a JSON recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub family: FamilySpec,
    pub rule: RuleSpec,
    pub optimizers: Vec<OptimizerSpec>,
    /// Total fitness evaluations granted to each optimizer.
    pub budget: usize,
    pub n_tasks: usize,
    pub horizon: usize,
    pub master_seed: u64,
    pub mode: Mode,
    #[serde(default)]
    pub holdout_tasks: Option<usize>,
    #[serde(default)]
    pub emulator: EmulatorConfig,
    #[serde(default = "default_true")]
    pub normalize: bool,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl CompareConfig {
    fn experiment_config(&self, optimizer: OptimizerSpec, generations: usize) -> ExperimentConfig {
        ExperimentConfig {
            family: self.family,
            rule: self.rule,
            optimizer,
            n_tasks: self.n_tasks,
            horizon: self.horizon,
            generations,
            master_seed: self.master_seed,
            mode: self.mode,
            holdout_tasks: self.holdout_tasks,
            emulator: self.emulator.clone(),
            normalize: self.normalize,
            output_dir: self.output_dir.clone(),
        }
    }

    /// Checks the shared-budget arithmetic and expands into one run per
    /// optimizer, each granted budget/gen_cost generations.
    pub fn to_runs(&self) -> Result<Vec<(OptimizerSpec, L2lRun)>> {
        if self.optimizers.len() < 2 {
            return Err(Error::Config(format!(
                "optimizer comparison needs at least 2 entries, got {}",
                self.optimizers.len()
            )));
        }
        let dim = space_for_rule(self.rule, self.horizon).dim();
        let mut runs = Vec::with_capacity(self.optimizers.len());
        for opt in &self.optimizers {
            opt.validate()?;
            let cost = opt.gen_cost(dim);
            if self.budget % cost != 0 {
                return Err(Error::Config(format!(
                    "budget {} is not a whole number of {} generations (cost {cost})",
                    self.budget,
                    opt.name()
                )));
            }
            let generations = self.budget / cost;
            runs.push((*opt, self.experiment_config(*opt, generations).to_run()?));
        }
        Ok(runs)
    }
}

/// The search space a rule is optimized over (the MDP rule's space depends
/// on the trial length through the rescale-period bounds).
pub fn space_for_rule(rule: RuleSpec, horizon: usize) -> SearchSpace {
    match rule {
        RuleSpec::TdLambda => SearchSpace::mdp_td_lambda(horizon),
        RuleSpec::Td1 => SearchSpace::mab_td1(),
        RuleSpec::Ann => SearchSpace::mab_ann(),
    }
}

/// FNV-1a of the canonical JSON serialization, as 16 hex digits. Stable
/// across runs and platforms for identical settings, and cheap enough to
/// stamp into every artifact row.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    let json = serde_json::to_string(value)?;
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in json.as_bytes() {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    Ok(format!("{hash:016x}"))
}
