//! Post-hoc analysis of learned update rules: how much each input drives the
//! output (first-order variance fractions), what the update looks like as a
//! function of the synapse's own weight, and paired transfer comparisons
//! between two hyperparameter vectors.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::outer::experiment::Experiment;
use crate::plasticity::{AnnRule, ANN_INPUT_DIM, ANN_THETA_DIM};
use crate::seed::{stream, StreamRole};

/// Input coordinates of the learned rule, in forward() order.
pub const ANN_INPUT_NAMES: [&str; ANN_INPUT_DIM] = ["t", "flag", "r", "w_self", "w_other"];

/// Inner-loop size of the double-loop variance estimator; the outer loop
/// gets whatever remains of the sample budget.
const SOBOL_INNER: usize = 32;

/// Total output variance below this is treated as a constant rule.
const DEGENERATE_VAR: f64 = 1e-18;

/// Where the rule's inputs come from when marginalizing.
#[derive(Debug, Clone, PartialEq)]
pub enum InputDist {
    /// t, w_self, w_other uniform on [0,1]; flag and r fair coin flips.
    Idealized,
    /// Rows of recorded (t, flag, r, w_self, w_other) observations; draws
    /// resample whole rows, preserving their dependence.
    Empirical(Vec<[f64; ANN_INPUT_DIM]>),
}

impl InputDist {
    fn joint(&self, rng: &mut ChaCha8Rng) -> Result<[f64; ANN_INPUT_DIM]> {
        match self {
            InputDist::Idealized => {
                let t = rng.random::<f64>();
                let flag = if rng.random::<f64>() < 0.5 { 1.0 } else { 0.0 };
                let r = if rng.random::<f64>() < 0.5 { 1.0 } else { 0.0 };
                let w_self = rng.random::<f64>();
                let w_other = rng.random::<f64>();
                Ok([t, flag, r, w_self, w_other])
            }
            InputDist::Empirical(rows) => {
                if rows.is_empty() {
                    return Err(Error::Config("empirical input set is empty".into()));
                }
                Ok(rows[rng.random_range(0..rows.len())])
            }
        }
    }

    fn marginal(&self, k: usize, rng: &mut ChaCha8Rng) -> Result<f64> {
        Ok(self.joint(rng)?[k])
    }
}

/// First-order variance fractions of the rule output per input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    /// Fraction of output variance per input, `ANN_INPUT_NAMES` order,
    /// clamped at 0.
    pub fractions: Vec<f64>,
    /// 1 minus the sum of the raw (unclamped) first-order fractions:
    /// variance left to input interactions, up to Monte-Carlo noise.
    pub residual_interactions: f64,
    pub n_samples: usize,
    /// The rule output had (numerically) no variance; fractions are
    /// meaningless and reported as zero.
    pub degenerate: bool,
}

impl ImportanceReport {
    pub fn fraction(&self, name: &str) -> Option<f64> {
        ANN_INPUT_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| self.fractions[i])
    }
}

fn mean_and_sample_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// First-order Sobol fractions by double-loop Monte Carlo directly on the
/// rule: for each input, freeze it at sampled values and measure how much
/// the conditional means vary relative to the total output variance. The
/// inner-loop noise inflates that variance, so its expected contribution is
/// subtracted back out.
pub fn input_importance(
    rule: &AnnRule,
    dist: &InputDist,
    n_samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<ImportanceReport> {
    if n_samples < 1000 {
        return Err(Error::Config(format!(
            "importance needs at least 1000 samples, got {n_samples}"
        )));
    }
    let joint_values: Vec<f64> = (0..n_samples)
        .map(|_| Ok(rule.forward(&dist.joint(rng)?)))
        .collect::<Result<_>>()?;
    let (_, total_var) = mean_and_sample_var(&joint_values);
    if total_var < DEGENERATE_VAR {
        return Ok(ImportanceReport {
            fractions: vec![0.0; ANN_INPUT_DIM],
            residual_interactions: 0.0,
            n_samples,
            degenerate: true,
        });
    }
    let n_outer = n_samples / SOBOL_INNER;
    let mut fractions = Vec::with_capacity(ANN_INPUT_DIM);
    let mut raw_sum = 0.0;
    for k in 0..ANN_INPUT_DIM {
        let mut cond_means = Vec::with_capacity(n_outer);
        let mut inner_vars = Vec::with_capacity(n_outer);
        for _ in 0..n_outer {
            let pinned = dist.marginal(k, rng)?;
            let inner: Vec<f64> = (0..SOBOL_INNER)
                .map(|_| {
                    let mut x = dist.joint(rng)?;
                    x[k] = pinned;
                    Ok(rule.forward(&x))
                })
                .collect::<Result<_>>()?;
            let (m, v) = mean_and_sample_var(&inner);
            cond_means.push(m);
            inner_vars.push(v);
        }
        let (_, var_of_means) = mean_and_sample_var(&cond_means);
        let noise = inner_vars.iter().sum::<f64>() / inner_vars.len() as f64 / SOBOL_INNER as f64;
        let raw = (var_of_means - noise) / total_var;
        raw_sum += raw;
        fractions.push(raw.max(0.0));
    }
    Ok(ImportanceReport {
        fractions,
        residual_interactions: 1.0 - raw_sum,
        n_samples,
        degenerate: false,
    })
}

/// Mean update and decile band as a function of the synapse's own weight,
/// with action flag and reward pinned to one of their four joint cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateCurve {
    pub flag: u8,
    pub reward: u8,
    pub grid: Vec<f64>,
    pub mean_dw: Vec<f64>,
    pub p10: Vec<f64>,
    pub p90: Vec<f64>,
}

/// Value at quantile `q` of already-sorted data, linearly interpolated.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Sweeps w_self over a uniform grid for each (flag, reward) case,
/// marginalizing t and w_other with `n_marginal` uniform draws per grid
/// point. Case order: (0,0), (0,1), (1,0), (1,1).
pub fn update_curves(
    rule: &AnnRule,
    grid_size: usize,
    n_marginal: usize,
    rng: &mut ChaCha8Rng,
) -> Result<[UpdateCurve; 4]> {
    if grid_size < 2 {
        return Err(Error::Config(format!(
            "curve grid needs at least 2 points, got {grid_size}"
        )));
    }
    if n_marginal < 2 {
        return Err(Error::Config(format!(
            "curve marginalization needs at least 2 draws, got {n_marginal}"
        )));
    }
    let grid: Vec<f64> = (0..grid_size)
        .map(|i| i as f64 / (grid_size - 1) as f64)
        .collect();
    let mut curves = Vec::with_capacity(4);
    for (flag, reward) in [(0u8, 0u8), (0, 1), (1, 0), (1, 1)] {
        let mut mean_dw = Vec::with_capacity(grid_size);
        let mut p10 = Vec::with_capacity(grid_size);
        let mut p90 = Vec::with_capacity(grid_size);
        for &w in &grid {
            let mut dw: Vec<f64> = (0..n_marginal)
                .map(|_| {
                    let t = rng.random::<f64>();
                    let w_other = rng.random::<f64>();
                    rule.forward(&[t, flag as f64, reward as f64, w, w_other])
                })
                .collect();
            mean_dw.push(dw.iter().sum::<f64>() / dw.len() as f64);
            dw.sort_by(|a, b| a.partial_cmp(b).expect("updates must not be NaN"));
            p10.push(percentile(&dw, 0.10));
            p90.push(percentile(&dw, 0.90));
        }
        curves.push(UpdateCurve {
            flag,
            reward,
            grid: grid.clone(),
            mean_dw,
            p10,
            p90,
        });
    }
    Ok(curves.try_into().expect("exactly four cases"))
}

/// Paired comparison of two hyperparameter vectors on fresh tasks of the
/// experiment's family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub n_tasks: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    /// mean_a - mean_b.
    pub mean_diff: f64,
    /// Bootstrap 95% interval of the mean difference.
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub per_task_diff: Vec<f64>,
}

/// Evaluates two encoded candidates on the same fresh task batch with shared
/// trial streams (paired design), and bootstraps the mean score difference.
pub fn transfer_report(
    exp: &Experiment,
    theta_a: &[f64],
    theta_b: &[f64],
    n_tasks: usize,
    n_boot: usize,
    rng_boot_seed: u64,
) -> Result<TransferReport> {
    if n_tasks == 0 {
        return Err(Error::Config("transfer needs at least 1 task".into()));
    }
    let agent_a = exp.agent(theta_a)?;
    let agent_b = exp.agent(theta_b)?;
    let mut score_a = Vec::with_capacity(n_tasks);
    let mut score_b = Vec::with_capacity(n_tasks);
    for ti in 0..n_tasks as u64 {
        let (task, rand_ref, opt_ref) =
            exp.sample_scoreable_task(StreamRole::Analysis, &[0, ti])?;
        // Both candidates face identical environment and selection noise.
        let mut rng = stream(exp.master_seed, StreamRole::Analysis, &[1, ti]);
        score_a.push(exp.task_fitness(&agent_a, &task, rand_ref, opt_ref, &mut rng)?);
        let mut rng = stream(exp.master_seed, StreamRole::Analysis, &[1, ti]);
        score_b.push(exp.task_fitness(&agent_b, &task, rand_ref, opt_ref, &mut rng)?);
    }
    let per_task_diff: Vec<f64> = score_a
        .iter()
        .zip(&score_b)
        .map(|(a, b)| a - b)
        .collect();
    let mean_a = score_a.iter().sum::<f64>() / n_tasks as f64;
    let mean_b = score_b.iter().sum::<f64>() / n_tasks as f64;
    let mean_diff = per_task_diff.iter().sum::<f64>() / n_tasks as f64;
    let mut rng = stream(rng_boot_seed, StreamRole::Analysis, &[2]);
    let mut boot_means = Vec::with_capacity(n_boot);
    for _ in 0..n_boot {
        let total: f64 = (0..n_tasks)
            .map(|_| per_task_diff[rng.random_range(0..n_tasks)])
            .sum();
        boot_means.push(total / n_tasks as f64);
    }
    boot_means.sort_by(|a, b| a.partial_cmp(b).expect("scores must not be NaN"));
    let (ci_lo, ci_hi) = if boot_means.is_empty() {
        (mean_diff, mean_diff)
    } else {
        (percentile(&boot_means, 0.025), percentile(&boot_means, 0.975))
    };
    Ok(TransferReport {
        n_tasks,
        mean_a,
        mean_b,
        mean_diff,
        ci_lo,
        ci_hi,
        per_task_diff,
    })
}

/// Rule parameters whose output depends only on the reward bit:
/// dw = sigmoid(4r - 2). Used as a ground-truth case for the importance
/// estimator.
pub fn reward_only_theta() -> Vec<f64> {
    let mut theta = vec![0.0; ANN_THETA_DIM];
    theta[2] = 4.0; // hidden 0 reads the reward input
    theta[35] = -2.0; // centred so both r values land on sigmoid's steep part
    theta[42] = 1.0; // output reads hidden 0 alone
    theta
}

/// Rule parameters approximating dw = gain * (r - w_self) for small gains:
/// a single hidden unit in its linear regime, scaled by 4 at the output.
pub fn linear_rule_theta(gain: f64) -> Vec<f64> {
    let mut theta = vec![0.0; ANN_THETA_DIM];
    theta[2] = gain; // + gain * r
    theta[3] = -gain; // - gain * w_self
    theta[42] = 4.0; // undo the factor-4 flattening of sigmoid at 0
    theta[49] = -2.0; // subtract 4 * sigmoid(0)
    theta
}
