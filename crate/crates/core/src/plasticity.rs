//! Synaptic learning rules and the trial loop that applies them.
//!
//! Three rules: one-step TD with a decaying learning rate, TD(lambda) with
//! accumulating eligibility traces, and a learned rule — a small MLP mapping
//! per-synapse observations to a weight update. Rules read and write shadow
//! weights; the spiking selection sees only the quantized view.

use crate::emulator::{Crossbar, EmulatorConfig};
use crate::env::{discounted_return, Task, TrajStep, Trajectory};
use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Learning-rate schedule and targets of the TD rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TdParams {
    pub alpha0: f64,
    /// Per-step multiplicative decay: alpha(t) = alpha0 * alpha_decay^t.
    #[serde(default = "one")]
    pub alpha_decay: f64,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default)]
    pub lambda: f64,
}

fn one() -> f64 {
    1.0
}

impl TdParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0 >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha0 must be non-negative, got {}",
                self.alpha0
            )));
        }
        if !(self.alpha_decay > 0.0 && self.alpha_decay <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha_decay must lie in (0,1], got {}",
                self.alpha_decay
            )));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidArgument(format!(
                "gamma must lie in [0,1], got {}",
                self.gamma
            )));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidArgument(format!(
                "lambda must lie in [0,1], got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn alpha_at(&self, t: usize) -> f64 {
        self.alpha0 * self.alpha_decay.powi(t as i32)
    }
}

/// Per-synapse memory of recent visits, same shape as the weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EligibilityTraces {
    pub n_states: usize,
    pub n_actions: usize,
    e: Vec<f64>,
}

impl EligibilityTraces {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        EligibilityTraces {
            n_states,
            n_actions,
            e: vec![0.0; n_states * n_actions],
        }
    }

    #[inline]
    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.e[s * self.n_actions + a]
    }

    /// One step of the trace schedule: everything decays by gamma*lambda,
    /// then the visited pair gains 1.
    pub fn decay_and_bump(&mut self, s: usize, a: usize, gamma: f64, lambda: f64) {
        let gl = gamma * lambda;
        for e in &mut self.e {
            *e *= gl;
        }
        self.e[s * self.n_actions + a] += 1.0;
    }
}

fn max_row_shadow(bar: &Crossbar, s: usize) -> f64 {
    (0..bar.n_actions)
        .map(|a| bar.shadow(s, a))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// One-step TD update of the visited synapse only:
/// w[s][a] += alpha(t) * (r + gamma * max_k w[s_next][k] - w[s][a]).
pub fn td1_update(
    bar: &mut Crossbar,
    s: usize,
    a: usize,
    r: f64,
    s_next: usize,
    params: &TdParams,
    t: usize,
) {
    let alpha = params.alpha_at(t);
    let delta = r + params.gamma * max_row_shadow(bar, s_next) - bar.shadow(s, a);
    bar.apply_update(s, a, alpha * delta);
}

/// TD(lambda): decay/bump the traces, then credit the shared error to every
/// synapse in proportion to its trace. With lambda = 0 the trace matrix is 1
/// on the visited pair and 0 elsewhere, and the arithmetic reduces bit-for-bit
/// to `td1_update`.
pub fn td_lambda_update(
    bar: &mut Crossbar,
    traces: &mut EligibilityTraces,
    s: usize,
    a: usize,
    r: f64,
    s_next: usize,
    params: &TdParams,
    t: usize,
) {
    traces.decay_and_bump(s, a, params.gamma, params.lambda);
    let alpha = params.alpha_at(t);
    let delta = r + params.gamma * max_row_shadow(bar, s_next) - bar.shadow(s, a);
    for s2 in 0..bar.n_states {
        for a2 in 0..bar.n_actions {
            let e = traces.get(s2, a2);
            if e == 0.0 {
                continue;
            }
            bar.apply_update(s2, a2, alpha * delta * e);
        }
    }
}

pub const ANN_INPUT_DIM: usize = 5;
pub const ANN_HIDDEN_DIM: usize = 7;
/// 5*7 input weights + 7 hidden biases + 7 output weights + 1 output bias.
pub const ANN_THETA_DIM: usize = 50;

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Learned synaptic rule: a 5-input, 7-sigmoid-hidden, 1-linear-output MLP.
/// Inputs, in order: normalized time t/T, acted flag, reward, own weight,
/// other arm's weight (weights normalized to [0,1] by the rescale range).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnRule {
    theta: Vec<f64>,
    #[serde(default = "one")]
    pub out_scale: f64,
}

impl AnnRule {
    pub fn new(theta: Vec<f64>, out_scale: f64) -> Result<Self> {
        if theta.len() != ANN_THETA_DIM {
            return Err(Error::InvalidArgument(format!(
                "rule network needs exactly {ANN_THETA_DIM} parameters, got {}",
                theta.len()
            )));
        }
        if !(out_scale > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "out_scale must be positive, got {out_scale}"
            )));
        }
        Ok(AnnRule { theta, out_scale })
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.theta.clone(), self.out_scale).map(|_| ())
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    #[inline]
    fn w1(&self, h: usize, i: usize) -> f64 {
        self.theta[h * ANN_INPUT_DIM + i]
    }

    #[inline]
    fn b1(&self, h: usize) -> f64 {
        self.theta[ANN_HIDDEN_DIM * ANN_INPUT_DIM + h]
    }

    #[inline]
    fn w2(&self, h: usize) -> f64 {
        self.theta[ANN_HIDDEN_DIM * ANN_INPUT_DIM + ANN_HIDDEN_DIM + h]
    }

    #[inline]
    fn b2(&self) -> f64 {
        self.theta[ANN_THETA_DIM - 1]
    }

    /// Proposed weight update for one synapse's observation vector.
    pub fn forward(&self, inputs: &[f64; ANN_INPUT_DIM]) -> f64 {
        let mut out = self.b2();
        for h in 0..ANN_HIDDEN_DIM {
            let mut z = self.b1(h);
            for (i, x) in inputs.iter().enumerate() {
                z += self.w1(h, i) * x;
            }
            out += self.w2(h) * sigmoid(z);
        }
        self.out_scale * out
    }

    /// Hard bound on |forward|: sigmoids are confined to (0,1).
    pub fn output_bound(&self) -> f64 {
        let sum_w2: f64 = (0..ANN_HIDDEN_DIM).map(|h| self.w2(h).abs()).sum();
        self.out_scale * (sum_w2 + self.b2().abs())
    }
}

/// Applies the learned rule to both arms of a two-armed bandit crossbar.
/// Both updates are computed from the pre-update weights, so arm order is
/// immaterial.
pub fn ann_update_all(
    bar: &mut Crossbar,
    t: usize,
    horizon: usize,
    action: usize,
    r: f64,
    rule: &AnnRule,
) -> Result<()> {
    if bar.n_states != 1 || bar.n_actions != 2 {
        return Err(Error::InvalidArgument(format!(
            "the learned rule drives a 1-state 2-arm crossbar, got {}x{}",
            bar.n_states, bar.n_actions
        )));
    }
    let span = bar.config.w_max - bar.config.w_min;
    let norm = |w: f64| (w - bar.config.w_min) / span;
    let t_norm = if horizon > 0 {
        t as f64 / horizon as f64
    } else {
        0.0
    };
    let w = [bar.shadow(0, 0), bar.shadow(0, 1)];
    let mut deltas = [0.0; 2];
    for arm in 0..2 {
        let flag = if action == arm { 1.0 } else { 0.0 };
        let inputs = [t_norm, flag, r, norm(w[arm]), norm(w[1 - arm])];
        deltas[arm] = rule.forward(&inputs);
    }
    for arm in 0..2 {
        bar.apply_update(0, arm, deltas[arm]);
    }
    Ok(())
}

/// A learning rule a trial can run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum Rule {
    Td1(TdParams),
    TdLambda(TdParams),
    Ann(AnnRule),
}

impl Rule {
    pub fn validate(&self) -> Result<()> {
        match self {
            Rule::Td1(p) | Rule::TdLambda(p) => p.validate(),
            Rule::Ann(a) => a.validate(),
        }
    }
}

/// Runs one learning trial from an existing crossbar. Per step:
/// spike-race selection, environment transition, plasticity on the shadow
/// weights, then a rescale whenever the configured period divides the step
/// count. An observer sees the crossbar after each step (for dumps).
pub fn run_trial_observed<R: Rng>(
    bar: &mut Crossbar,
    task: &Task,
    rule: &Rule,
    xi: f64,
    zeta: f64,
    horizon: usize,
    rng: &mut R,
    mut observer: impl FnMut(&Crossbar, &TrajStep),
) -> Result<Trajectory> {
    let mut traces = match rule {
        Rule::TdLambda(_) => Some(EligibilityTraces::zeros(bar.n_states, bar.n_actions)),
        _ => None,
    };
    let mut steps = Vec::with_capacity(horizon);
    let mut s = 0usize;
    for t in 0..horizon {
        let sel = bar.select_action(s, xi, zeta, rng)?;
        let (s_next, r) = task.step(s, sel.action, rng)?;
        match rule {
            Rule::Td1(p) => td1_update(bar, s, sel.action, r, s_next, p, t),
            Rule::TdLambda(p) => {
                let traces = traces.as_mut().expect("traces exist for this rule");
                td_lambda_update(bar, traces, s, sel.action, r, s_next, p, t);
            }
            Rule::Ann(rule) => ann_update_all(bar, t, horizon, sel.action, r, rule)?,
        }
        if let Some(period) = bar.config.rescale_period {
            if period > 0 && (t as u64 + 1) % period == 0 {
                bar.rescale();
            }
        }
        let step = TrajStep {
            t,
            state: s,
            action: sel.action,
            reward: r,
            next_state: s_next,
            selection_case: Some(sel.case),
        };
        observer(bar, &step);
        steps.push(step);
        s = s_next;
    }
    let mut traj = Trajectory {
        steps,
        raw_return: 0.0,
        horizon,
    };
    traj.raw_return = discounted_return(&traj, task.gamma_env());
    Ok(traj)
}

/// `run_trial_observed` without the observer.
pub fn run_trial_from<R: Rng>(
    bar: &mut Crossbar,
    task: &Task,
    rule: &Rule,
    xi: f64,
    zeta: f64,
    horizon: usize,
    rng: &mut R,
) -> Result<Trajectory> {
    run_trial_observed(bar, task, rule, xi, zeta, horizon, rng, |_, _| {})
}

/// Full trial from freshly initialized weights.
pub fn run_trial<R: Rng>(
    task: &Task,
    rule: &Rule,
    config: EmulatorConfig,
    xi: f64,
    zeta: f64,
    horizon: usize,
    rng: &mut R,
) -> Result<Trajectory> {
    let mut bar = Crossbar::new(task.n_states(), task.n_actions(), config, rng)?;
    run_trial_from(&mut bar, task, rule, xi, zeta, horizon, rng)
}
