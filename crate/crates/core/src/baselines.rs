//! Classical reference policies: value iteration for MDPs, Gittins indices
//! for Bernoulli bandits, plus random and oracle rollout helpers.

use crate::env::{discounted_return, mab_pull, Mab, Mdp, Task, TrajStep, Trajectory};
use crate::error::{Error, Result};
use rand::Rng;
use rayon::prelude::*;

/// Dense state-action value table.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    pub n_states: usize,
    pub n_actions: usize,
    q: Vec<f64>,
}

impl QTable {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        QTable {
            n_states,
            n_actions,
            q: vec![0.0; n_states * n_actions],
        }
    }

    #[inline]
    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.q[s * self.n_actions + a]
    }

    #[inline]
    pub fn set(&mut self, s: usize, a: usize, v: f64) {
        self.q[s * self.n_actions + a] = v;
    }

    /// Greedy action for a state; ties break toward the lowest index.
    pub fn argmax_action(&self, s: usize) -> usize {
        let row = &self.q[s * self.n_actions..(s + 1) * self.n_actions];
        let mut best = 0;
        for (a, &v) in row.iter().enumerate().skip(1) {
            if v > row[best] {
                best = a;
            }
        }
        best
    }

    pub fn state_value(&self, s: usize) -> f64 {
        self.get(s, self.argmax_action(s))
    }
}

/// Synchronous value iteration on Q. Stops once the sweep sup-norm change is
/// below tol * (1 - gamma) / gamma, which bounds the sup distance to the
/// fixed point by tol; gamma = 0 is exact after a single sweep.
pub fn value_iteration(mdp: &Mdp, tol: f64) -> Result<(QTable, usize)> {
    if tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "value iteration tol must be positive, got {tol}"
        )));
    }
    let threshold = if mdp.gamma == 0.0 {
        f64::INFINITY
    } else {
        tol * (1.0 - mdp.gamma) / mdp.gamma
    };
    let mut q = QTable::zeros(mdp.n_states, mdp.n_actions);
    let mut sweeps = 0;
    loop {
        let mut diff: f64 = 0.0;
        let prev = q.clone();
        for s in 0..mdp.n_states {
            for a in 0..mdp.n_actions {
                let mut v = 0.0;
                for s2 in 0..mdp.n_states {
                    let p = mdp.p(s, a, s2);
                    if p > 0.0 {
                        v += p * (mdp.r(s, a, s2) + mdp.gamma * prev.state_value(s2));
                    }
                }
                diff = diff.max((v - prev.get(s, a)).abs());
                q.set(s, a, v);
            }
        }
        sweeps += 1;
        if diff < threshold {
            return Ok((q, sweeps));
        }
    }
}

/// Deterministic greedy policy extracted from a Q table.
pub fn greedy_policy(q: &QTable) -> Vec<usize> {
    (0..q.n_states).map(|s| q.argmax_action(s)).collect()
}

/// Discount used throughout the Gittins computation.
pub const GITTINS_BETA: f64 = 0.9;
/// Backward-induction truncation depth; beta^200 / (1 - beta) ~ 7e-9 bounds
/// the truncation error well below the bisection tolerance.
const GITTINS_DEPTH: usize = 200;
const GITTINS_TOL: f64 = 1e-6;

/// Precomputed Gittins indices for Beta(a, b) posteriors with a, b >= 1 and
/// a + b <= horizon + 2, enough for a horizon-length run from a uniform prior.
#[derive(Debug, Clone)]
pub struct GittinsTable {
    pub beta: f64,
    pub horizon: usize,
    max_sum: usize,
    idx: Vec<f64>,
}

impl GittinsTable {
    /// Builds the whole triangle in parallel; entries are independent.
    pub fn build(horizon: usize, beta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::InvalidArgument(format!(
                "gittins beta must lie in [0,1), got {beta}"
            )));
        }
        let max_sum = horizon + 2;
        let mut pairs = Vec::new();
        for sum in 2..=max_sum {
            for a in 1..sum {
                pairs.push((a, sum - a));
            }
        }
        let idx: Vec<f64> = pairs
            .par_iter()
            .map(|&(a, b)| gittins_index(a, b, beta))
            .collect();
        Ok(GittinsTable {
            beta,
            horizon,
            max_sum,
            idx,
        })
    }

    #[inline]
    fn offset(a: usize, b: usize) -> usize {
        let sum = a + b;
        (sum - 2) * (sum - 1) / 2 + (a - 1)
    }

    pub fn index(&self, a: usize, b: usize) -> Result<f64> {
        if a < 1 || b < 1 || a + b > self.max_sum {
            return Err(Error::GittinsOutOfRange { a, b });
        }
        Ok(self.idx[Self::offset(a, b)])
    }
}

/// Expected value of continuing from (a, b) when a retirement perpetuity of
/// lam per step is available, by layered backward induction over the posterior
/// triangle. Returns the root's continue value without the retirement max so
/// the calibration below sees a signed crossing.
fn gittins_continue_value(a: usize, b: usize, beta: f64, lam: f64) -> f64 {
    let retire = lam / (1.0 - beta);
    // Depth d holds states (a + i, b + d - i); a success raises i.
    let mut next: Vec<f64> = (0..=GITTINS_DEPTH)
        .map(|i| {
            let mu = (a + i) as f64 / (a + b + GITTINS_DEPTH) as f64;
            mu.max(lam) / (1.0 - beta)
        })
        .collect();
    for d in (1..GITTINS_DEPTH).rev() {
        let mut layer = Vec::with_capacity(d + 1);
        for i in 0..=d {
            let mu = (a + i) as f64 / (a + b + d) as f64;
            let cont = mu + beta * (mu * next[i + 1] + (1.0 - mu) * next[i]);
            layer.push(cont.max(retire));
        }
        next = layer;
    }
    let mu = a as f64 / (a + b) as f64;
    mu + beta * (mu * next[1] + (1.0 - mu) * next[0])
}

/// Gittins index by bisection on the retirement rate: the index is the lam at
/// which retiring and continuing are equally attractive.
fn gittins_index(a: usize, b: usize, beta: f64) -> f64 {
    let mut lo = a as f64 / (a + b) as f64;
    let mut hi = 1.0;
    while hi - lo > GITTINS_TOL {
        let mid = 0.5 * (lo + hi);
        let cont = gittins_continue_value(a, b, beta, mid);
        if cont > mid / (1.0 - beta) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn finish_trajectory(task: &Task, steps: Vec<TrajStep>, horizon: usize) -> Trajectory {
    let mut traj = Trajectory {
        steps,
        raw_return: 0.0,
        horizon,
    };
    traj.raw_return = discounted_return(&traj, task.gamma_env());
    traj
}

/// Uniform-random policy rollout from state 0.
pub fn run_random_policy<R: Rng>(task: &Task, horizon: usize, rng: &mut R) -> Result<Trajectory> {
    let n_actions = task.n_actions();
    let mut s = 0usize;
    let mut steps = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let a = rng.random_range(0..n_actions);
        let (s2, reward) = task.step(s, a, rng)?;
        steps.push(TrajStep {
            t,
            state: s,
            action: a,
            reward,
            next_state: s2,
            selection_case: None,
        });
        s = s2;
    }
    Ok(finish_trajectory(task, steps, horizon))
}

/// Plans with value iteration, then rolls out the greedy policy.
pub fn run_vi_greedy<R: Rng>(
    mdp: &Mdp,
    horizon: usize,
    tol: f64,
    rng: &mut R,
) -> Result<Trajectory> {
    let (q, _) = value_iteration(mdp, tol)?;
    let policy = greedy_policy(&q);
    let task = Task::Mdp(mdp.clone());
    let mut s = 0usize;
    let mut steps = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let a = policy[s];
        let (s2, reward) = task.step(s, a, rng)?;
        steps.push(TrajStep {
            t,
            state: s,
            action: a,
            reward,
            next_state: s2,
            selection_case: None,
        });
        s = s2;
    }
    Ok(finish_trajectory(&task, steps, horizon))
}

/// Bayes-optimal-style bandit play: track Beta posteriors from a uniform
/// prior and always pull the arm with the larger Gittins index.
pub fn run_gittins<R: Rng>(
    mab: &Mab,
    horizon: usize,
    table: &GittinsTable,
    rng: &mut R,
) -> Result<Trajectory> {
    let mut counts = [[1usize, 1usize]; 2];
    let mut steps = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let i0 = table.index(counts[0][0], counts[0][1])?;
        let i1 = table.index(counts[1][0], counts[1][1])?;
        let a = if i1 > i0 { 1 } else { 0 };
        let reward = mab_pull(mab, a, rng)?;
        if reward > 0.0 {
            counts[a][0] += 1;
        } else {
            counts[a][1] += 1;
        }
        steps.push(TrajStep {
            t,
            state: 0,
            action: a,
            reward,
            next_state: 0,
            selection_case: None,
        });
    }
    Ok(finish_trajectory(&Task::Mab(mab.clone()), steps, horizon))
}

/// Clairvoyant bandit oracle: always pulls the truly better arm.
pub fn run_best_arm<R: Rng>(mab: &Mab, horizon: usize, rng: &mut R) -> Result<Trajectory> {
    let a = if mab.p_arm[1] > mab.p_arm[0] { 1 } else { 0 };
    let mut steps = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let reward = mab_pull(mab, a, rng)?;
        steps.push(TrajStep {
            t,
            state: 0,
            action: a,
            reward,
            next_state: 0,
            selection_case: None,
        });
    }
    Ok(finish_trajectory(&Task::Mab(mab.clone()), steps, horizon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{
        mdp_expected_return_policy, mdp_expected_return_uniform, sample_mdp, MabFamily,
    };
    use crate::seed::{stream, StreamRole};

    #[test]
    fn one_state_mdp_has_closed_form_q() {
        // Single state, expected rewards 0.2 and 0.6, gamma 0.5:
        // V = 0.6 / (1 - 0.5) = 1.2, Q = r + 0.5 * 1.2.
        let p = vec![1.0, 1.0];
        let r = vec![0.2, 0.6];
        let mdp = Mdp::from_tensors(1, 2, p, r, 0.5).unwrap();
        let (q, _) = value_iteration(&mdp, 1e-10).unwrap();
        assert!((q.get(0, 0) - 0.8).abs() < 1e-9);
        assert!((q.get(0, 1) - 1.2).abs() < 1e-9);
        assert_eq!(greedy_policy(&q), vec![1]);
    }

    #[test]
    fn zero_gamma_takes_exactly_one_sweep() {
        let mut rng = stream(9, StreamRole::TaskSample, &[0]);
        let mdp = sample_mdp(3, 2, 0.0, &mut rng).unwrap();
        let (q, sweeps) = value_iteration(&mdp, 1e-8).unwrap();
        assert_eq!(sweeps, 1);
        for s in 0..3 {
            for a in 0..2 {
                assert!((q.get(s, a) - mdp.expected_reward(s, a)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn value_iteration_prefers_delayed_reward() {
        // State 0: action 0 loops for 0.3/step, action 1 hops (no reward) to
        // state 1 which pays 1.0/step forever. gamma 0.9 favors the hop.
        let mut p = vec![0.0; 8];
        let mut r = vec![0.0; 8];
        p[(0 * 2 + 0) * 2 + 0] = 1.0;
        r[(0 * 2 + 0) * 2 + 0] = 0.3;
        p[(0 * 2 + 1) * 2 + 1] = 1.0;
        p[(1 * 2 + 0) * 2 + 1] = 1.0;
        r[(1 * 2 + 0) * 2 + 1] = 1.0;
        p[(1 * 2 + 1) * 2 + 1] = 1.0;
        r[(1 * 2 + 1) * 2 + 1] = 1.0;
        let mdp = Mdp::from_tensors(2, 2, p, r, 0.9).unwrap();
        let (q, _) = value_iteration(&mdp, 1e-9).unwrap();
        assert_eq!(greedy_policy(&q)[0], 1);
        // V(1) = 10, Q(0,1) = 9, Q(0,0) = 0.3 + 0.9 * 9 = 8.4.
        assert!((q.get(0, 1) - 9.0).abs() < 1e-6);
        assert!((q.get(0, 0) - 8.4).abs() < 1e-6);
    }

    #[test]
    fn greedy_beats_uniform_on_sampled_mdps() {
        for k in 0..10u64 {
            let mut rng = stream(20, StreamRole::TaskSample, &[k]);
            let mdp = sample_mdp(4, 3, 0.9, &mut rng).unwrap();
            let (q, _) = value_iteration(&mdp, 1e-8).unwrap();
            let policy = greedy_policy(&q);
            let greedy = mdp_expected_return_policy(&mdp, &policy, 100, 0.9);
            let uniform = mdp_expected_return_uniform(&mdp, 100, 0.9);
            assert!(
                greedy >= uniform - 1e-9,
                "task {k}: greedy {greedy} < uniform {uniform}"
            );
        }
    }

    #[test]
    fn argmax_ties_break_low() {
        let mut q = QTable::zeros(1, 3);
        q.set(0, 0, 1.0);
        q.set(0, 2, 1.0);
        assert_eq!(q.argmax_action(0), 0);
    }

    #[test]
    fn uniform_prior_index_matches_known_value() {
        let table = GittinsTable::build(8, GITTINS_BETA).unwrap();
        let idx = table.index(1, 1).unwrap();
        assert!((0.69..=0.71).contains(&idx), "index(1,1) = {idx}");
    }

    #[test]
    fn indices_are_monotone_in_evidence() {
        let table = GittinsTable::build(18, GITTINS_BETA).unwrap();
        for sum in 2..=19usize {
            for a in 1..sum {
                let b = sum - a;
                let here = table.index(a, b).unwrap();
                assert!(
                    table.index(a + 1, b).unwrap() > here,
                    "success at ({a},{b}) did not raise the index"
                );
                assert!(
                    table.index(a, b + 1).unwrap() < here,
                    "failure at ({a},{b}) did not lower the index"
                );
            }
        }
    }

    #[test]
    fn index_exceeds_posterior_mean() {
        // Continuation value of exploration keeps the index above myopic.
        let table = GittinsTable::build(10, GITTINS_BETA).unwrap();
        for (a, b) in [(1, 1), (2, 3), (5, 5), (1, 9)] {
            let idx = table.index(a, b).unwrap();
            let mean = a as f64 / (a + b) as f64;
            assert!(idx > mean, "index({a},{b}) = {idx} <= mean {mean}");
        }
    }

    #[test]
    fn out_of_range_lookup_is_an_error() {
        let table = GittinsTable::build(4, GITTINS_BETA).unwrap();
        assert!(matches!(
            table.index(7, 1),
            Err(Error::GittinsOutOfRange { a: 7, b: 1 })
        ));
        assert!(matches!(
            table.index(0, 3),
            Err(Error::GittinsOutOfRange { .. })
        ));
    }

    #[test]
    fn gittins_play_tracks_the_good_arm() {
        let mab = Mab {
            p_arm: [0.8, 0.2],
            family: MabFamily::Unstructured,
        };
        let table = GittinsTable::build(100, GITTINS_BETA).unwrap();
        let mut rng = stream(30, StreamRole::Baseline, &[0]);
        let mut total = 0.0;
        let trials = 50;
        for _ in 0..trials {
            let traj = run_gittins(&mab, 100, &table, &mut rng).unwrap();
            total += traj.raw_return;
        }
        let mean = total / trials as f64;
        // Random earns 50 per trial; the index player should be near 80.
        assert!(mean > 70.0, "gittins mean return {mean}");
    }

    #[test]
    fn oracle_always_pulls_the_better_arm() {
        let mab = Mab {
            p_arm: [0.3, 0.7],
            family: MabFamily::Structured,
        };
        let mut rng = stream(31, StreamRole::Baseline, &[0]);
        let traj = run_best_arm(&mab, 200, &mut rng).unwrap();
        assert!(traj.steps.iter().all(|s| s.action == 1));
    }

    #[test]
    fn random_rollout_has_expected_length_and_return_near_mean() {
        let mab = Mab {
            p_arm: [0.3, 0.7],
            family: MabFamily::Structured,
        };
        let task = Task::Mab(mab);
        let mut rng = stream(32, StreamRole::Baseline, &[0]);
        let mut total = 0.0;
        let trials = 200;
        for _ in 0..trials {
            let traj = run_random_policy(&task, 100, &mut rng).unwrap();
            assert_eq!(traj.steps.len(), 100);
            total += traj.raw_return;
        }
        let mean = total / trials as f64;
        assert!((mean - 50.0).abs() < 2.0, "random mean return {mean}");
    }
}
