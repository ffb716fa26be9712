//! Task families: random finite MDPs and two-armed Bernoulli bandits.
//!
//! Tasks are identified by (family descriptor, 64-bit seed) and regenerated
//! from the seed on demand rather than stored. Scores are normalized so a
//! uniform-random policy maps to 0 and the optimal reference maps to 1.

use crate::emulator::SelectionCase;
use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Finite MDP with dense per-transition rewards in [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct Mdp {
    pub n_states: usize,
    pub n_actions: usize,
    /// Transition probabilities, row-major [s][a][s2]; each (s,a) row sums to 1.
    p: Vec<f64>,
    /// Rewards attached to transitions, same layout as `p`.
    r: Vec<f64>,
    pub gamma: f64,
}

impl Mdp {
    /// Validates tensors: row sums within 1e-9 of 1, all entries in [0,1].
    pub fn from_tensors(
        n_states: usize,
        n_actions: usize,
        p: Vec<f64>,
        r: Vec<f64>,
        gamma: f64,
    ) -> Result<Self> {
        let len = n_states * n_actions * n_states;
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidArgument(
                "mdp needs at least one state and one action".into(),
            ));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidArgument(format!(
                "mdp gamma must lie in [0,1), got {gamma}"
            )));
        }
        if p.len() != len || r.len() != len {
            return Err(Error::InvalidArgument(format!(
                "tensor length {} does not match {n_states}x{n_actions}x{n_states}",
                p.len().max(r.len())
            )));
        }
        if p.iter().chain(r.iter()).any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument(
                "probabilities and rewards must lie in [0,1]".into(),
            ));
        }
        let mdp = Mdp {
            n_states,
            n_actions,
            p,
            r,
            gamma,
        };
        for s in 0..n_states {
            for a in 0..n_actions {
                let sum: f64 = (0..n_states).map(|s2| mdp.p(s, a, s2)).sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidArgument(format!(
                        "transition row ({s},{a}) sums to {sum}, expected 1"
                    )));
                }
            }
        }
        Ok(mdp)
    }

    #[inline]
    fn idx(&self, s: usize, a: usize, s2: usize) -> usize {
        (s * self.n_actions + a) * self.n_states + s2
    }

    #[inline]
    pub fn p(&self, s: usize, a: usize, s2: usize) -> f64 {
        self.p[self.idx(s, a, s2)]
    }

    #[inline]
    pub fn r(&self, s: usize, a: usize, s2: usize) -> f64 {
        self.r[self.idx(s, a, s2)]
    }

    /// Expected one-step reward for (s, a).
    pub fn expected_reward(&self, s: usize, a: usize) -> f64 {
        (0..self.n_states)
            .map(|s2| self.p(s, a, s2) * self.r(s, a, s2))
            .sum()
    }
}

/// Draws transition and reward tensors uniformly, then normalizes each
/// outgoing transition row to sum to 1. Deterministic given the rng state.
pub fn sample_mdp<R: Rng>(
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    rng: &mut R,
) -> Result<Mdp> {
    if n_states == 0 || n_actions == 0 {
        return Err(Error::InvalidArgument(
            "mdp needs at least one state and one action".into(),
        ));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidArgument(format!(
            "mdp gamma must lie in [0,1), got {gamma}"
        )));
    }
    let len = n_states * n_actions * n_states;
    // Draw order is part of the determinism contract: p fully, then r fully.
    let mut p: Vec<f64> = (0..len).map(|_| rng.random::<f64>()).collect();
    let r: Vec<f64> = (0..len).map(|_| rng.random::<f64>()).collect();
    for row in p.chunks_mut(n_states) {
        let sum: f64 = row.iter().sum();
        if sum > 0.0 {
            row.iter_mut().for_each(|v| *v /= sum);
        } else {
            row.iter_mut().for_each(|v| *v = 1.0 / n_states as f64);
        }
    }
    Mdp::from_tensors(n_states, n_actions, p, r, gamma)
}

/// Samples the next state from p[s][a][.] and returns the attached reward.
pub fn mdp_step<R: Rng>(mdp: &Mdp, s: usize, a: usize, rng: &mut R) -> Result<(usize, f64)> {
    if s >= mdp.n_states || a >= mdp.n_actions {
        return Err(Error::IndexOutOfRange(format!(
            "mdp_step state {s} action {a} in {}x{} mdp",
            mdp.n_states, mdp.n_actions
        )));
    }
    let u = rng.random::<f64>();
    let mut cum = 0.0;
    for s2 in 0..mdp.n_states {
        cum += mdp.p(s, a, s2);
        if u < cum {
            return Ok((s2, mdp.r(s, a, s2)));
        }
    }
    // Guard against row sums rounding a hair below 1.
    let last = mdp.n_states - 1;
    Ok((last, mdp.r(s, a, last)))
}

/// Whether the two arm probabilities are coupled or independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MabFamily {
    Unstructured,
    Structured,
}

/// Two-armed Bernoulli bandit.
#[derive(Debug, Clone, PartialEq)]
pub struct Mab {
    pub p_arm: [f64; 2],
    pub family: MabFamily,
}

/// Unstructured: both arm probabilities independent uniform.
/// Structured: p2 is exactly 1 - p1.
pub fn sample_mab<R: Rng>(family: MabFamily, rng: &mut R) -> Mab {
    let p1 = rng.random::<f64>();
    let p2 = match family {
        MabFamily::Unstructured => rng.random::<f64>(),
        MabFamily::Structured => 1.0 - p1,
    };
    Mab {
        p_arm: [p1, p2],
        family,
    }
}

/// Bernoulli reward draw for one arm; 1.0 with probability p_arm[arm].
pub fn mab_pull<R: Rng>(mab: &Mab, arm: usize, rng: &mut R) -> Result<f64> {
    if arm >= 2 {
        return Err(Error::IndexOutOfRange(format!(
            "mab_pull arm {arm}, bandit has 2 arms"
        )));
    }
    Ok(if rng.random::<f64>() < mab.p_arm[arm] {
        1.0
    } else {
        0.0
    })
}

/// One recorded agent step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajStep {
    pub t: usize,
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
    /// How the action was selected; None for non-spiking baseline policies.
    pub selection_case: Option<SelectionCase>,
}

/// Full record of one inner-loop trial.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<TrajStep>,
    pub raw_return: f64,
    pub horizon: usize,
}

/// Sum of gamma^t * r(t) over the trajectory. gamma = 1 gives the plain
/// cumulative reward.
pub fn discounted_return(traj: &Trajectory, gamma: f64) -> f64 {
    let mut factor = 1.0;
    let mut total = 0.0;
    for step in &traj.steps {
        total += factor * step.reward;
        factor *= gamma;
    }
    total
}

/// Affine rescaling of a raw return so random_ref maps to 0 and optimal_ref
/// maps to 1. Single noisy runs may land outside [0,1].
pub fn normalized_score(raw: f64, random_ref: f64, optimal_ref: f64) -> Result<f64> {
    let span = optimal_ref - random_ref;
    if span.abs() <= 1e-12 * optimal_ref.abs().max(1.0) {
        return Err(Error::NotNormalizable(optimal_ref));
    }
    Ok((raw - random_ref) / span)
}

/// A task instance the emulator can run.
#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    Mdp(Mdp),
    Mab(Mab),
}

impl Task {
    pub fn n_states(&self) -> usize {
        match self {
            Task::Mdp(m) => m.n_states,
            Task::Mab(_) => 1,
        }
    }

    pub fn n_actions(&self) -> usize {
        match self {
            Task::Mdp(m) => m.n_actions,
            Task::Mab(_) => 2,
        }
    }

    /// Discount used when scoring returns; bandit returns are undiscounted.
    pub fn gamma_env(&self) -> f64 {
        match self {
            Task::Mdp(m) => m.gamma,
            Task::Mab(_) => 1.0,
        }
    }

    pub fn step<R: Rng>(&self, s: usize, a: usize, rng: &mut R) -> Result<(usize, f64)> {
        match self {
            Task::Mdp(m) => mdp_step(m, s, a, rng),
            Task::Mab(m) => Ok((0, mab_pull(m, a, rng)?)),
        }
    }
}

/// Per-state action distribution used by the exact return recursions.
enum PolicyKind<'a> {
    Uniform,
    Deterministic(&'a [usize]),
}

/// Exact expected discounted return accumulated after each step, computed by
/// forward recursion of the state distribution from state 0. Entry t is the
/// expected return of the first t+1 steps; no Monte-Carlo noise.
fn mdp_return_curve(mdp: &Mdp, policy: PolicyKind, horizon: usize, gamma: f64) -> Vec<f64> {
    let n = mdp.n_states;
    let mut dist = vec![0.0; n];
    dist[0] = 1.0;
    let mut curve = Vec::with_capacity(horizon);
    let mut factor = 1.0;
    let mut total = 0.0;
    for _ in 0..horizon {
        let mut next = vec![0.0; n];
        let mut step_reward = 0.0;
        for s in 0..n {
            if dist[s] == 0.0 {
                continue;
            }
            match &policy {
                PolicyKind::Uniform => {
                    let w = dist[s] / mdp.n_actions as f64;
                    for a in 0..mdp.n_actions {
                        step_reward += w * mdp.expected_reward(s, a);
                        for s2 in 0..n {
                            next[s2] += w * mdp.p(s, a, s2);
                        }
                    }
                }
                PolicyKind::Deterministic(actions) => {
                    let a = actions[s];
                    step_reward += dist[s] * mdp.expected_reward(s, a);
                    for s2 in 0..n {
                        next[s2] += dist[s] * mdp.p(s, a, s2);
                    }
                }
            }
        }
        total += factor * step_reward;
        factor *= gamma;
        dist = next;
        curve.push(total);
    }
    curve
}

/// Per-step expected return of the uniform-random policy.
pub fn mdp_return_curve_uniform(mdp: &Mdp, horizon: usize, gamma: f64) -> Vec<f64> {
    mdp_return_curve(mdp, PolicyKind::Uniform, horizon, gamma)
}

/// Per-step expected return of a deterministic policy (action per state).
pub fn mdp_return_curve_policy(
    mdp: &Mdp,
    actions: &[usize],
    horizon: usize,
    gamma: f64,
) -> Vec<f64> {
    mdp_return_curve(mdp, PolicyKind::Deterministic(actions), horizon, gamma)
}

/// Exact expected discounted return of the uniform-random policy over horizon
/// steps from state 0.
pub fn mdp_expected_return_uniform(mdp: &Mdp, horizon: usize, gamma: f64) -> f64 {
    mdp_return_curve_uniform(mdp, horizon, gamma)
        .last()
        .copied()
        .unwrap_or(0.0)
}

/// Exact expected discounted return of a deterministic policy over horizon
/// steps from state 0.
pub fn mdp_expected_return_policy(mdp: &Mdp, actions: &[usize], horizon: usize, gamma: f64) -> f64 {
    mdp_return_curve_policy(mdp, actions, horizon, gamma)
        .last()
        .copied()
        .unwrap_or(0.0)
}

/// Closed-form bandit references: random plays each arm half the time, the
/// oracle always plays the better arm.
pub fn mab_reference(mab: &Mab, horizon: usize) -> (f64, f64) {
    let t = horizon as f64;
    let mean = 0.5 * (mab.p_arm[0] + mab.p_arm[1]);
    let best = mab.p_arm[0].max(mab.p_arm[1]);
    (t * mean, t * best)
}

/// Per-step versions of the closed-form bandit references.
pub fn mab_reference_curves(mab: &Mab, horizon: usize) -> (Vec<f64>, Vec<f64>) {
    let mean = 0.5 * (mab.p_arm[0] + mab.p_arm[1]);
    let best = mab.p_arm[0].max(mab.p_arm[1]);
    let random = (1..=horizon).map(|t| t as f64 * mean).collect();
    let optimal = (1..=horizon).map(|t| t as f64 * best).collect();
    (random, optimal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::{stream, StreamRole};

    fn traj_from_rewards(rewards: &[f64]) -> Trajectory {
        let steps = rewards
            .iter()
            .enumerate()
            .map(|(t, &reward)| TrajStep {
                t,
                state: 0,
                action: 0,
                reward,
                next_state: 0,
                selection_case: None,
            })
            .collect();
        Trajectory {
            steps,
            raw_return: 0.0,
            horizon: rewards.len(),
        }
    }

    #[test]
    fn single_destination_normalization_forces_certainty() {
        let mut rng = stream(7, StreamRole::TaskSample, &[0]);
        let mdp = sample_mdp(1, 1, 0.9, &mut rng).unwrap();
        assert_eq!(mdp.p(0, 0, 0), 1.0);
    }

    #[test]
    fn transition_rows_sum_to_one() {
        let mut rng = stream(42, StreamRole::TaskSample, &[1]);
        let mdp = sample_mdp(2, 4, 0.9, &mut rng).unwrap();
        for s in 0..2 {
            for a in 0..4 {
                let sum: f64 = (0..2).map(|s2| mdp.p(s, a, s2)).sum();
                assert!((sum - 1.0).abs() < 1e-9, "row ({s},{a}) sums to {sum}");
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_given_the_seed() {
        let mut a = stream(5, StreamRole::TaskSample, &[3]);
        let mut b = stream(5, StreamRole::TaskSample, &[3]);
        let m1 = sample_mdp(6, 8, 0.9, &mut a).unwrap();
        let m2 = sample_mdp(6, 8, 0.9, &mut b).unwrap();
        assert_eq!(m1, m2);
    }

    #[test]
    fn deterministic_transition_returns_attached_reward() {
        // One action, certain hop 0 -> 1 carrying reward 0.5.
        let p = vec![0.0, 1.0, 0.5, 0.5, 0.0, 1.0, 0.5, 0.5];
        let r = vec![0.1, 0.5, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8];
        let mdp = Mdp::from_tensors(2, 2, p, r, 0.9).unwrap();
        let mut rng = stream(1, StreamRole::Trial, &[0]);
        let (s2, reward) = mdp_step(&mdp, 0, 0, &mut rng).unwrap();
        assert_eq!(s2, 1);
        assert_eq!(reward, 0.5);
    }

    #[test]
    fn chain_hop_with_zero_reward() {
        // Two-state chain: action 1 in state 0 hops to state 1 with certainty
        // and zero reward; action 0 loops in place. idx = (s*2 + a)*2 + s2.
        let mut p = vec![0.0; 8];
        let mut r = vec![0.0; 8];
        p[(0 * 2 + 0) * 2 + 0] = 1.0;
        p[(0 * 2 + 1) * 2 + 1] = 1.0;
        p[(1 * 2 + 0) * 2 + 1] = 1.0;
        p[(1 * 2 + 1) * 2 + 0] = 1.0;
        r[(1 * 2 + 0) * 2 + 1] = 0.9;
        let mdp = Mdp::from_tensors(2, 2, p, r, 0.9).unwrap();
        let mut rng = stream(2, StreamRole::Trial, &[0]);
        let (s2, reward) = mdp_step(&mdp, 0, 1, &mut rng).unwrap();
        assert_eq!((s2, reward), (1, 0.0));
    }

    #[test]
    fn step_frequencies_match_transition_probabilities() {
        let p = vec![0.3, 0.7, 0.5, 0.5, 1.0, 0.0, 1.0, 0.0];
        let r = vec![0.0; 8];
        let mdp = Mdp::from_tensors(2, 2, p, r, 0.9).unwrap();
        let mut rng = stream(11, StreamRole::Trial, &[0]);
        let n = 100_000;
        let mut hits = 0usize;
        for _ in 0..n {
            let (s2, _) = mdp_step(&mdp, 0, 0, &mut rng).unwrap();
            if s2 == 1 {
                hits += 1;
            }
        }
        let freq = hits as f64 / n as f64;
        assert!((freq - 0.7).abs() < 0.01, "frequency {freq}");
    }

    #[test]
    fn structured_arms_are_complements() {
        let mut rng = stream(3, StreamRole::TaskSample, &[0]);
        for _ in 0..1000 {
            let mab = sample_mab(MabFamily::Structured, &mut rng);
            assert_eq!(mab.p_arm[1], 1.0 - mab.p_arm[0]);
        }
    }

    #[test]
    fn unstructured_arms_are_uncorrelated() {
        let mut rng = stream(4, StreamRole::TaskSample, &[0]);
        let n = 10_000;
        let samples: Vec<Mab> = (0..n)
            .map(|_| sample_mab(MabFamily::Unstructured, &mut rng))
            .collect();
        let mean = |f: &dyn Fn(&Mab) -> f64| samples.iter().map(|m| f(m)).sum::<f64>() / n as f64;
        let m1 = mean(&|m| m.p_arm[0]);
        let m2 = mean(&|m| m.p_arm[1]);
        let cov = mean(&|m| (m.p_arm[0] - m1) * (m.p_arm[1] - m2));
        let v1 = mean(&|m| (m.p_arm[0] - m1).powi(2));
        let v2 = mean(&|m| (m.p_arm[1] - m2).powi(2));
        let corr = cov / (v1 * v2).sqrt();
        assert!(corr.abs() < 0.05, "correlation {corr}");
    }

    #[test]
    fn certain_arms_pay_deterministically() {
        let mab = Mab {
            p_arm: [1.0, 0.0],
            family: MabFamily::Unstructured,
        };
        let mut rng = stream(5, StreamRole::Trial, &[0]);
        for _ in 0..100 {
            assert_eq!(mab_pull(&mab, 0, &mut rng).unwrap(), 1.0);
            assert_eq!(mab_pull(&mab, 1, &mut rng).unwrap(), 0.0);
        }
    }

    #[test]
    fn bernoulli_mean_matches_probability() {
        let mab = Mab {
            p_arm: [0.7, 0.2],
            family: MabFamily::Unstructured,
        };
        let mut rng = stream(6, StreamRole::Trial, &[0]);
        let n = 100_000;
        let total: f64 = (0..n).map(|_| mab_pull(&mab, 0, &mut rng).unwrap()).sum();
        let mean = total / n as f64;
        assert!((mean - 0.7).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn discounted_return_worked_cases() {
        assert_eq!(discounted_return(&traj_from_rewards(&[1.0, 1.0, 1.0]), 0.0), 1.0);
        let two = discounted_return(&traj_from_rewards(&[1.0, 1.0]), 0.9);
        assert!((two - 1.9).abs() < 1e-12);
        assert_eq!(discounted_return(&traj_from_rewards(&[0.0, 0.0]), 0.9), 0.0);
    }

    #[test]
    fn normalized_score_endpoints_and_midpoint() {
        assert_eq!(normalized_score(50.0, 50.0, 70.0).unwrap(), 0.0);
        assert_eq!(normalized_score(70.0, 50.0, 70.0).unwrap(), 1.0);
        // Closed-form bandit references for p = (0.3, 0.7), T = 100.
        let mab = Mab {
            p_arm: [0.3, 0.7],
            family: MabFamily::Unstructured,
        };
        let (random_ref, optimal_ref) = mab_reference(&mab, 100);
        assert_eq!((random_ref, optimal_ref), (50.0, 70.0));
        assert_eq!(normalized_score(60.0, random_ref, optimal_ref).unwrap(), 0.5);
    }

    #[test]
    fn normalized_score_rejects_degenerate_references() {
        assert!(matches!(
            normalized_score(1.0, 5.0, 5.0),
            Err(Error::NotNormalizable(_))
        ));
    }

    #[test]
    fn normalized_score_is_affine() {
        let (a, b, lam) = (61.3, 47.2, 0.37);
        let mix = lam * a + (1.0 - lam) * b;
        let ns = |x: f64| normalized_score(x, 50.0, 70.0).unwrap();
        assert!((ns(mix) - (lam * ns(a) + (1.0 - lam) * ns(b))).abs() < 1e-12);
    }

    #[test]
    fn uniform_curve_matches_hand_rolled_expectation() {
        // Single state, two actions with expected rewards 0.2 and 0.6; the
        // uniform policy earns 0.4 per step, discounted geometrically.
        let p = vec![1.0, 1.0];
        let r = vec![0.2, 0.6];
        let mdp = Mdp::from_tensors(1, 2, p, r, 0.5).unwrap();
        let curve = mdp_return_curve_uniform(&mdp, 3, 0.5);
        let expect = [0.4, 0.4 + 0.2, 0.4 + 0.2 + 0.1];
        for (got, want) in curve.iter().zip(expect.iter()) {
            assert!((got - want).abs() < 1e-12);
        }
    }
}
