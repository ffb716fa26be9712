//! Gradient-free optimizers over encoded hyperparameter vectors, behind a
//! common generation-synchronous ask/tell interface.
//!
//! `ask` emits the candidates to evaluate, `tell` consumes their fitness
//! records in the same order. All randomness is drawn single-threaded inside
//! ask/tell from seeded streams, so runs reproduce exactly regardless of how
//! the evaluations in between were parallelized.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::outer::experiment::{Candidate, FitnessRecord};
use crate::outer::space::SearchSpace;
use crate::seed::{stream, StreamRole};

/// Probability that simulated annealing accepts a move with fitness change
/// `delta` at temperature `temp` (maximization: improving moves always pass).
pub fn sa_acceptance(delta: f64, temp: f64) -> f64 {
    (delta / temp).exp().min(1.0)
}

/// Optimizer choice plus its knobs, as read from experiment configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algo", rename_all = "lowercase")]
pub enum OptimizerSpec {
    Ce {
        #[serde(default = "default_pop")]
        pop: usize,
        #[serde(default = "default_elite_frac")]
        elite_frac: f64,
        /// Fit only per-dimension variances instead of the dense covariance.
        #[serde(default)]
        diag_cov: bool,
    },
    Es {
        #[serde(default = "default_pop")]
        pop: usize,
        #[serde(default = "default_sigma")]
        sigma: f64,
        #[serde(default = "default_learn_rate")]
        learn_rate: f64,
    },
    Sa {
        #[serde(default = "default_chains")]
        chains: usize,
        #[serde(default = "default_t0")]
        t0: f64,
        #[serde(default = "default_t_end")]
        t_end: f64,
        #[serde(default = "default_sa_noise")]
        noise: f64,
    },
    Gd {
        #[serde(default = "default_probe_eps")]
        probe_eps: f64,
        #[serde(default = "default_step_size")]
        step_size: f64,
    },
}

fn default_pop() -> usize {
    32
}
fn default_elite_frac() -> f64 {
    0.25
}
fn default_sigma() -> f64 {
    0.1
}
fn default_learn_rate() -> f64 {
    0.05
}
fn default_chains() -> usize {
    8
}
fn default_t0() -> f64 {
    0.1
}
fn default_t_end() -> f64 {
    0.001
}
fn default_sa_noise() -> f64 {
    0.3
}
fn default_probe_eps() -> f64 {
    0.01
}
fn default_step_size() -> f64 {
    0.5
}

impl OptimizerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            OptimizerSpec::Ce { .. } => "ce",
            OptimizerSpec::Es { .. } => "es",
            OptimizerSpec::Sa { .. } => "sa",
            OptimizerSpec::Gd { .. } => "gd",
        }
    }

    /// Fitness evaluations one generation costs, for budget accounting.
    pub fn gen_cost(&self, dim: usize) -> usize {
        match self {
            OptimizerSpec::Ce { pop, .. } | OptimizerSpec::Es { pop, .. } => *pop,
            OptimizerSpec::Sa { chains, .. } => *chains,
            OptimizerSpec::Gd { .. } => 2 * dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            OptimizerSpec::Ce {
                pop, elite_frac, ..
            } => {
                if pop < 2 {
                    return Err(Error::Config(format!("ce pop must be >= 2, got {pop}")));
                }
                if !(0.0 < elite_frac && elite_frac <= 1.0) {
                    return Err(Error::Config(format!(
                        "ce elite_frac must lie in (0,1], got {elite_frac}"
                    )));
                }
                if n_elite(pop, elite_frac) < 2 {
                    return Err(Error::Config(format!(
                        "ce needs at least 2 elites, pop {pop} x elite_frac {elite_frac} gives {}",
                        n_elite(pop, elite_frac)
                    )));
                }
            }
            OptimizerSpec::Es {
                pop,
                sigma,
                learn_rate,
            } => {
                if pop < 2 || pop % 2 != 0 {
                    return Err(Error::Config(format!(
                        "es pop must be even and >= 2 for mirrored sampling, got {pop}"
                    )));
                }
                if !(sigma > 0.0) || !(learn_rate > 0.0) {
                    return Err(Error::Config(format!(
                        "es sigma and learn_rate must be positive, got {sigma} and {learn_rate}"
                    )));
                }
            }
            OptimizerSpec::Sa {
                chains,
                t0,
                t_end,
                noise,
            } => {
                if chains == 0 {
                    return Err(Error::Config("sa needs at least 1 chain".into()));
                }
                if !(t0 > 0.0) || !(t_end > 0.0) || t_end > t0 {
                    return Err(Error::Config(format!(
                        "sa temperatures need 0 < t_end <= t0, got t0 {t0}, t_end {t_end}"
                    )));
                }
                if !(noise > 0.0) {
                    return Err(Error::Config(format!(
                        "sa noise must be positive, got {noise}"
                    )));
                }
            }
            OptimizerSpec::Gd {
                probe_eps,
                step_size,
            } => {
                if !(probe_eps > 0.0) {
                    return Err(Error::Config(format!(
                        "gd probe_eps must be positive, got {probe_eps}"
                    )));
                }
                if !(step_size >= 0.0) {
                    return Err(Error::Config(format!(
                        "gd step_size must be non-negative, got {step_size}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Generation-synchronous optimizer: alternate `ask` and `tell`, then read
/// the incumbent. `tell` must receive the records of the last `ask` in the
/// same order.
pub trait Optimizer {
    fn name(&self) -> &'static str;
    /// Candidates to evaluate this generation.
    fn ask(&mut self) -> Result<Vec<Candidate>>;
    /// Fitness results for the last `ask`, in the same order.
    fn tell(&mut self, records: &[FitnessRecord]) -> Result<()>;
    /// Current incumbent in encoded coordinates.
    fn best_encoded(&self) -> Vec<f64>;
    /// Candidates worth re-evaluating on held-out tasks for final selection.
    fn finalists(&self) -> Vec<Candidate>;
    /// Fitness evaluations per generation.
    fn gen_cost(&self) -> usize;
}

pub fn build_optimizer(
    spec: &OptimizerSpec,
    space: SearchSpace,
    master_seed: u64,
    generations: usize,
) -> Result<Box<dyn Optimizer>> {
    spec.validate()?;
    if space.dim() == 0 {
        return Err(Error::Config("search space has no dimensions".into()));
    }
    Ok(match *spec {
        OptimizerSpec::Ce {
            pop,
            elite_frac,
            diag_cov,
        } => Box::new(CrossEntropy::new(space, pop, elite_frac, diag_cov, master_seed)),
        OptimizerSpec::Es {
            pop,
            sigma,
            learn_rate,
        } => Box::new(EvolutionStrategies::new(
            space,
            pop,
            sigma,
            learn_rate,
            master_seed,
        )),
        OptimizerSpec::Sa {
            chains,
            t0,
            t_end,
            noise,
        } => Box::new(SimulatedAnnealing::new(
            space,
            chains,
            t0,
            t_end,
            noise,
            master_seed,
            generations,
        )),
        OptimizerSpec::Gd {
            probe_eps,
            step_size,
        } => Box::new(GradientDescent::new(space, probe_eps, step_size, master_seed)),
    })
}

fn n_elite(pop: usize, elite_frac: f64) -> usize {
    ((elite_frac * pop as f64).ceil() as usize).min(pop)
}

/// Best candidate seen so far by raw training fitness; candidates for the
/// held-out re-evaluation include it so a lucky sample is not lost.
#[derive(Debug, Clone)]
struct BestSeen {
    encoded: Option<Vec<f64>>,
    fitness: f64,
}

impl BestSeen {
    fn new() -> Self {
        BestSeen {
            encoded: None,
            fitness: f64::NEG_INFINITY,
        }
    }

    fn observe(&mut self, records: &[FitnessRecord]) {
        for r in records {
            if r.mean_fitness > self.fitness {
                self.fitness = r.mean_fitness;
                self.encoded = Some(r.encoded.clone());
            }
        }
    }

    fn candidate(&self) -> Option<Candidate> {
        self.encoded.clone().map(Candidate::new)
    }
}

/// Average-rank transform mapped to [-0.5, 0.5]; equal fitnesses share a
/// rank, so a flat landscape maps to all zeros.
fn centered_ranks(fitness: &[f64]) -> Vec<f64> {
    let n = fitness.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        fitness[a]
            .partial_cmp(&fitness[b])
            .expect("fitness must not be NaN")
    });
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && fitness[order[j + 1]] == fitness[order[i]] {
            j += 1;
        }
        let shared = (i + j) as f64 / 2.0;
        for &k in &order[i..=j] {
            out[k] = shared / (n as f64 - 1.0) - 0.5;
        }
        i = j + 1;
    }
    out
}

/// Lower-triangular Cholesky factor of a symmetric matrix, row-major; None
/// if the matrix is not positive definite.
fn cholesky(a: &[f64], d: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut sum = a[i * d + j];
            for k in 0..j {
                sum -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i * d + i] = sum.sqrt();
            } else {
                l[i * d + j] = sum / l[j * d + j];
            }
        }
    }
    Some(l)
}

/// Cross-entropy method: fit a Gaussian to the elite fraction, sample the
/// next population from it.
struct CrossEntropy {
    space: SearchSpace,
    pop: usize,
    elite_frac: f64,
    diag_cov: bool,
    mean: Vec<f64>,
    /// Dense row-major covariance; only the diagonal is used in diag mode.
    cov: Vec<f64>,
    fitted: bool,
    init_rng: ChaCha8Rng,
    step_rng: ChaCha8Rng,
    best: BestSeen,
    asked: bool,
}

impl CrossEntropy {
    fn new(space: SearchSpace, pop: usize, elite_frac: f64, diag_cov: bool, seed: u64) -> Self {
        let d = space.dim();
        let mean = space.init_center();
        CrossEntropy {
            space,
            pop,
            elite_frac,
            diag_cov,
            mean,
            cov: vec![0.0; d * d],
            fitted: false,
            init_rng: stream(seed, StreamRole::OptimizerInit, &[]),
            step_rng: stream(seed, StreamRole::OptimizerStep, &[]),
            best: BestSeen::new(),
            asked: false,
        }
    }

    fn sample_fitted(&mut self) -> Vec<Candidate> {
        let d = self.space.dim();
        let normal = Normal::new(0.0, 1.0).unwrap();
        let scale: Vec<f64> = if self.diag_cov {
            (0..d).map(|i| self.cov[i * d + i].sqrt()).collect()
        } else {
            match cholesky(&self.cov, d) {
                Some(l) => l,
                // Numerically indefinite despite regularization: fall back
                // to the diagonal.
                None => {
                    let mut l = vec![0.0; d * d];
                    for i in 0..d {
                        l[i * d + i] = self.cov[i * d + i].max(0.0).sqrt();
                    }
                    l
                }
            }
        };
        (0..self.pop)
            .map(|_| {
                let z: Vec<f64> = (0..d).map(|_| normal.sample(&mut self.step_rng)).collect();
                let mut x = self.mean.clone();
                if self.diag_cov {
                    for i in 0..d {
                        x[i] += scale[i] * z[i];
                    }
                } else {
                    for i in 0..d {
                        for k in 0..=i {
                            x[i] += scale[i * d + k] * z[k];
                        }
                    }
                }
                self.space.clamp(&mut x);
                Candidate::new(x)
            })
            .collect()
    }
}

/// Maximum-likelihood Gaussian fit of a set of encoded vectors, with eps on
/// the covariance diagonal to keep it positive definite.
fn fit_gaussian(elites: &[&[f64]], d: usize, eps: f64) -> (Vec<f64>, Vec<f64>) {
    let n = elites.len() as f64;
    let mut mean = vec![0.0; d];
    for e in elites {
        for i in 0..d {
            mean[i] += e[i];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    // Bessel-corrected sample covariance: with elite counts this small the
    // unbiased estimate keeps the search from collapsing prematurely.
    let denom = (n - 1.0).max(1.0);
    let mut cov = vec![0.0; d * d];
    for e in elites {
        for i in 0..d {
            let di = e[i] - mean[i];
            for j in 0..=i {
                cov[i * d + j] += di * (e[j] - mean[j]) / denom;
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            cov[j * d + i] = cov[i * d + j];
        }
        cov[i * d + i] += eps;
    }
    (mean, cov)
}

const CE_COV_EPS: f64 = 1e-6;

impl Optimizer for CrossEntropy {
    fn name(&self) -> &'static str {
        "ce"
    }

    fn ask(&mut self) -> Result<Vec<Candidate>> {
        if self.asked {
            return Err(Error::Runtime("ask called twice without tell".into()));
        }
        self.asked = true;
        if !self.fitted {
            // First generation explores the init distribution directly.
            return Ok((0..self.pop)
                .map(|_| Candidate::new(self.space.sample_init(&mut self.init_rng)))
                .collect());
        }
        Ok(self.sample_fitted())
    }

    fn tell(&mut self, records: &[FitnessRecord]) -> Result<()> {
        if !self.asked {
            return Err(Error::Runtime("tell called without ask".into()));
        }
        self.asked = false;
        if records.len() != self.pop {
            return Err(Error::Runtime(format!(
                "ce told {} records for a population of {}",
                records.len(),
                self.pop
            )));
        }
        self.best.observe(records);
        let mut order: Vec<usize> = (0..records.len()).collect();
        order.sort_by(|&a, &b| {
            records[b]
                .mean_fitness
                .partial_cmp(&records[a].mean_fitness)
                .expect("fitness must not be NaN")
        });
        let keep = n_elite(self.pop, self.elite_frac);
        if keep < 2 {
            return Err(Error::Config(format!(
                "ce needs at least 2 elites, got {keep}"
            )));
        }
        let elites: Vec<&[f64]> = order[..keep]
            .iter()
            .map(|&i| records[i].encoded.as_slice())
            .collect();
        let (mean, cov) = fit_gaussian(&elites, self.space.dim(), CE_COV_EPS);
        self.mean = mean;
        self.cov = cov;
        self.fitted = true;
        Ok(())
    }

    fn best_encoded(&self) -> Vec<f64> {
        self.mean.clone()
    }

    fn finalists(&self) -> Vec<Candidate> {
        let mut out = vec![Candidate::new(self.mean.clone())];
        out.extend(self.best.candidate());
        out
    }

    fn gen_cost(&self) -> usize {
        self.pop
    }
}

/// Antithetic evolution strategies: rank-weight mirrored perturbations of a
/// single base point and step along the weighted sum.
struct EvolutionStrategies {
    space: SearchSpace,
    pop: usize,
    sigma: f64,
    learn_rate: f64,
    base: Vec<f64>,
    /// Signed perturbations of the pending generation, one per candidate.
    pending: Option<Vec<Vec<f64>>>,
    step_rng: ChaCha8Rng,
    best: BestSeen,
}

impl EvolutionStrategies {
    fn new(space: SearchSpace, pop: usize, sigma: f64, learn_rate: f64, seed: u64) -> Self {
        let mut init_rng = stream(seed, StreamRole::OptimizerInit, &[]);
        let base = space.sample_init(&mut init_rng);
        EvolutionStrategies {
            space,
            pop,
            sigma,
            learn_rate,
            base,
            pending: None,
            step_rng: stream(seed, StreamRole::OptimizerStep, &[]),
            best: BestSeen::new(),
        }
    }
}

impl Optimizer for EvolutionStrategies {
    fn name(&self) -> &'static str {
        "es"
    }

    fn ask(&mut self) -> Result<Vec<Candidate>> {
        if self.pending.is_some() {
            return Err(Error::Runtime("ask called twice without tell".into()));
        }
        let d = self.space.dim();
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut eps = Vec::with_capacity(self.pop);
        for _ in 0..self.pop / 2 {
            let e: Vec<f64> = (0..d).map(|_| normal.sample(&mut self.step_rng)).collect();
            let neg: Vec<f64> = e.iter().map(|v| -v).collect();
            eps.push(e);
            eps.push(neg);
        }
        let cands = eps
            .iter()
            .map(|e| {
                Candidate::new(
                    self.base
                        .iter()
                        .zip(e)
                        .map(|(b, v)| b + self.sigma * v)
                        .collect(),
                )
            })
            .collect();
        self.pending = Some(eps);
        Ok(cands)
    }

    fn tell(&mut self, records: &[FitnessRecord]) -> Result<()> {
        let eps = self
            .pending
            .take()
            .ok_or_else(|| Error::Runtime("tell called without ask".into()))?;
        if records.len() != eps.len() {
            return Err(Error::Runtime(format!(
                "es told {} records for {} perturbations",
                records.len(),
                eps.len()
            )));
        }
        self.best.observe(records);
        let fitness: Vec<f64> = records.iter().map(|r| r.mean_fitness).collect();
        let weights = centered_ranks(&fitness);
        let d = self.space.dim();
        let scale = self.learn_rate / (records.len() as f64 * self.sigma);
        for i in 0..d {
            let g: f64 = weights.iter().zip(&eps).map(|(w, e)| w * e[i]).sum();
            self.base[i] += scale * g;
        }
        self.space.clamp(&mut self.base);
        Ok(())
    }

    fn best_encoded(&self) -> Vec<f64> {
        self.base.clone()
    }

    fn finalists(&self) -> Vec<Candidate> {
        let mut out = vec![Candidate::new(self.base.clone())];
        out.extend(self.best.candidate());
        out
    }

    fn gen_cost(&self) -> usize {
        self.pop
    }
}

/// Parallel simulated annealing chains under a linear temperature decay.
struct SimulatedAnnealing {
    space: SearchSpace,
    t0: f64,
    t_end: f64,
    noise: f64,
    chains: Vec<Vec<f64>>,
    chain_fitness: Vec<f64>,
    /// None before the initial fitnesses arrive.
    evaluated: bool,
    /// Proposal rounds completed; drives the temperature schedule.
    round: usize,
    /// Proposal rounds the whole run will perform (generations - 1).
    total_rounds: usize,
    pending: Option<Vec<Vec<f64>>>,
    step_rng: ChaCha8Rng,
    best: BestSeen,
}

impl SimulatedAnnealing {
    #[allow(clippy::too_many_arguments)]
    fn new(
        space: SearchSpace,
        chains: usize,
        t0: f64,
        t_end: f64,
        noise: f64,
        seed: u64,
        generations: usize,
    ) -> Self {
        let mut init_rng = stream(seed, StreamRole::OptimizerInit, &[]);
        let starts: Vec<Vec<f64>> = (0..chains).map(|_| space.sample_init(&mut init_rng)).collect();
        SimulatedAnnealing {
            space,
            t0,
            t_end,
            noise,
            chain_fitness: vec![f64::NEG_INFINITY; starts.len()],
            chains: starts,
            evaluated: false,
            round: 0,
            total_rounds: generations.saturating_sub(1),
            pending: None,
            step_rng: stream(seed, StreamRole::OptimizerStep, &[]),
            best: BestSeen::new(),
        }
    }

    /// Linear decay from t0 (first proposal round) to t_end (last round).
    fn temperature(&self, round: usize) -> f64 {
        if self.total_rounds <= 1 {
            return self.t0;
        }
        let frac = round.min(self.total_rounds - 1) as f64 / (self.total_rounds - 1) as f64;
        self.t0 + (self.t_end - self.t0) * frac
    }
}

impl Optimizer for SimulatedAnnealing {
    fn name(&self) -> &'static str {
        "sa"
    }

    fn ask(&mut self) -> Result<Vec<Candidate>> {
        if self.pending.is_some() {
            return Err(Error::Runtime("ask called twice without tell".into()));
        }
        if !self.evaluated {
            // First generation evaluates the chain starting points.
            let starts = self.chains.clone();
            self.pending = Some(starts.clone());
            return Ok(starts.into_iter().map(Candidate::new).collect());
        }
        let temp = self.temperature(self.round);
        // Proposal width shrinks with the temperature.
        let sd = self.noise * temp / self.t0;
        let normal = Normal::new(0.0, sd).unwrap();
        let proposals: Vec<Vec<f64>> = self
            .chains
            .iter()
            .map(|c| {
                let mut p: Vec<f64> =
                    c.iter().map(|v| v + normal.sample(&mut self.step_rng)).collect();
                self.space.clamp(&mut p);
                p
            })
            .collect();
        self.pending = Some(proposals.clone());
        Ok(proposals.into_iter().map(Candidate::new).collect())
    }

    fn tell(&mut self, records: &[FitnessRecord]) -> Result<()> {
        let proposals = self
            .pending
            .take()
            .ok_or_else(|| Error::Runtime("tell called without ask".into()))?;
        if records.len() != self.chains.len() {
            return Err(Error::Runtime(format!(
                "sa told {} records for {} chains",
                records.len(),
                self.chains.len()
            )));
        }
        self.best.observe(records);
        if !self.evaluated {
            for (i, r) in records.iter().enumerate() {
                self.chain_fitness[i] = r.mean_fitness;
            }
            self.evaluated = true;
            return Ok(());
        }
        let temp = self.temperature(self.round);
        for (i, r) in records.iter().enumerate() {
            let delta = r.mean_fitness - self.chain_fitness[i];
            // Improving moves skip the coin entirely; only downhill moves
            // draw, so chains consume randomness identically across worker
            // counts but not across landscapes.
            let accept = delta >= 0.0 || {
                let u = self.step_rng.random::<f64>();
                u < sa_acceptance(delta, temp)
            };
            if accept {
                self.chains[i] = proposals[i].clone();
                self.chain_fitness[i] = r.mean_fitness;
            }
        }
        self.round += 1;
        Ok(())
    }

    fn best_encoded(&self) -> Vec<f64> {
        match self.best.encoded.clone() {
            Some(e) => e,
            None => self.chains[0].clone(),
        }
    }

    fn finalists(&self) -> Vec<Candidate> {
        let mut out: Vec<Candidate> = self.chains.iter().cloned().map(Candidate::new).collect();
        out.extend(self.best.candidate());
        out
    }

    fn gen_cost(&self) -> usize {
        self.chains.len()
    }
}

/// Numerical gradient ascent via central differences on each coordinate.
struct GradientDescent {
    space: SearchSpace,
    probe_eps: f64,
    step_size: f64,
    theta: Vec<f64>,
    asked: bool,
    best: BestSeen,
}

impl GradientDescent {
    fn new(space: SearchSpace, probe_eps: f64, step_size: f64, seed: u64) -> Self {
        let mut init_rng = stream(seed, StreamRole::OptimizerInit, &[]);
        let theta = space.sample_init(&mut init_rng);
        GradientDescent {
            space,
            probe_eps,
            step_size,
            theta,
            asked: false,
            best: BestSeen::new(),
        }
    }
}

impl Optimizer for GradientDescent {
    fn name(&self) -> &'static str {
        "gd"
    }

    fn ask(&mut self) -> Result<Vec<Candidate>> {
        if self.asked {
            return Err(Error::Runtime("ask called twice without tell".into()));
        }
        self.asked = true;
        // Probe order is a contract: [+e0, -e0, +e1, -e1, ...].
        let mut probes = Vec::with_capacity(2 * self.theta.len());
        for i in 0..self.theta.len() {
            let mut plus = self.theta.clone();
            plus[i] += self.probe_eps;
            let mut minus = self.theta.clone();
            minus[i] -= self.probe_eps;
            probes.push(Candidate::new(plus));
            probes.push(Candidate::new(minus));
        }
        Ok(probes)
    }

    fn tell(&mut self, records: &[FitnessRecord]) -> Result<()> {
        if !self.asked {
            return Err(Error::Runtime("tell called without ask".into()));
        }
        self.asked = false;
        if records.len() != 2 * self.theta.len() {
            return Err(Error::Runtime(format!(
                "gd told {} records for {} probes",
                records.len(),
                2 * self.theta.len()
            )));
        }
        self.best.observe(records);
        for i in 0..self.theta.len() {
            let grad = (records[2 * i].mean_fitness - records[2 * i + 1].mean_fitness)
                / (2.0 * self.probe_eps);
            self.theta[i] += self.step_size * grad;
        }
        self.space.clamp(&mut self.theta);
        Ok(())
    }

    fn best_encoded(&self) -> Vec<f64> {
        self.theta.clone()
    }

    fn finalists(&self) -> Vec<Candidate> {
        let mut out = vec![Candidate::new(self.theta.clone())];
        out.extend(self.best.candidate());
        out
    }

    fn gen_cost(&self) -> usize {
        2 * self.space.dim()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::outer::space::{DimSpec, Encoding};

    fn free_space(d: usize) -> SearchSpace {
        SearchSpace {
            dims: (0..d)
                .map(|i| DimSpec::new(&format!("x{i}"), 0.0, 0.0, Encoding::Free))
                .collect(),
        }
    }

    fn rec(candidate_id: usize, encoded: Vec<f64>, fitness: f64) -> FitnessRecord {
        FitnessRecord {
            generation: 0,
            candidate_id,
            decoded: encoded.clone(),
            encoded,
            per_task_scores: vec![fitness],
            mean_fitness: fitness,
        }
    }

    fn drive<F: Fn(&[f64]) -> f64>(
        opt: &mut dyn Optimizer,
        f: F,
        generations: usize,
    ) -> Vec<f64> {
        for _ in 0..generations {
            let cands = opt.ask().unwrap();
            let records: Vec<FitnessRecord> = cands
                .iter()
                .enumerate()
                .map(|(i, c)| rec(i, c.encoded.clone(), f(&c.encoded)))
                .collect();
            opt.tell(&records).unwrap();
        }
        opt.best_encoded()
    }

    #[test]
    fn elite_fit_recovers_mean_and_covariance() {
        let elites: Vec<&[f64]> = vec![&[0.0, 0.0], &[2.0, 2.0]];
        let (mean, cov) = fit_gaussian(&elites, 2, 1e-6);
        assert_eq!(mean, vec![1.0, 1.0]);
        // Deviations are (+-1, +-1), n-1 = 1: every covariance entry is 2.
        assert!((cov[0] - (2.0 + 1e-6)).abs() < 1e-12);
        assert!((cov[1] - 2.0).abs() < 1e-12);
        assert!((cov[2] - 2.0).abs() < 1e-12);
        assert!((cov[3] - (2.0 + 1e-6)).abs() < 1e-12);
    }

    #[test]
    fn cholesky_reconstructs_the_matrix() {
        let a = vec![4.0, 2.0, 2.0, 3.0];
        let l = cholesky(&a, 2).unwrap();
        // L = [[2, 0], [1, sqrt(2)]]
        assert!((l[0] - 2.0).abs() < 1e-12);
        assert!((l[2] - 1.0).abs() < 1e-12);
        assert!((l[3] - 2.0f64.sqrt()).abs() < 1e-12);
        assert!(cholesky(&[1.0, 2.0, 2.0, 1.0], 2).is_none());
    }

    #[test]
    fn too_small_elite_pool_is_rejected() {
        let spec = OptimizerSpec::Ce {
            pop: 4,
            elite_frac: 0.1,
            diag_cov: false,
        };
        assert!(spec.validate().is_err());
        let spec = OptimizerSpec::Ce {
            pop: 8,
            elite_frac: 0.25,
            diag_cov: false,
        };
        assert!(spec.validate().is_ok());
    }

    #[test]
    fn ce_walks_into_a_quadratic_optimum() {
        let target = [0.3, -0.2];
        let spec = OptimizerSpec::Ce {
            pop: 32,
            elite_frac: 0.25,
            diag_cov: false,
        };
        let mut opt = build_optimizer(&spec, free_space(2), 99, 30).unwrap();
        let best = drive(
            opt.as_mut(),
            |x| -x.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(),
            30,
        );
        let dist = best
            .iter()
            .zip(&target)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(dist <= 0.05, "ce mean {best:?} missed target {target:?} by {dist}");
    }

    #[test]
    fn ce_diag_mode_also_converges() {
        let target = [0.4, -0.6];
        let spec = OptimizerSpec::Ce {
            pop: 32,
            elite_frac: 0.25,
            diag_cov: true,
        };
        let mut opt = build_optimizer(&spec, free_space(2), 7, 30).unwrap();
        let best = drive(
            opt.as_mut(),
            |x| -x.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(),
            30,
        );
        for (b, t) in best.iter().zip(&target) {
            assert!((b - t).abs() <= 0.05);
        }
    }

    #[test]
    fn flat_fitness_leaves_es_in_place() {
        let spec = OptimizerSpec::Es {
            pop: 16,
            sigma: 0.1,
            learn_rate: 0.05,
        };
        let mut opt = build_optimizer(&spec, free_space(3), 5, 10).unwrap();
        let before = opt.best_encoded();
        drive(opt.as_mut(), |_| 1.23, 3);
        assert_eq!(opt.best_encoded(), before);
    }

    #[test]
    fn constant_fitness_shift_does_not_change_the_es_step() {
        let spec = OptimizerSpec::Es {
            pop: 16,
            sigma: 0.1,
            learn_rate: 0.05,
        };
        let f = |x: &[f64]| x[0] * 2.0 - x[1];
        let mut a = build_optimizer(&spec, free_space(2), 31, 10).unwrap();
        let mut b = build_optimizer(&spec, free_space(2), 31, 10).unwrap();
        drive(a.as_mut(), f, 4);
        drive(b.as_mut(), |x| f(x) + 1e6, 4);
        assert_eq!(a.best_encoded(), b.best_encoded());
    }

    #[test]
    fn es_step_aligns_with_a_linear_gradient() {
        let c = [1.0, -2.0, 0.5, 3.0, -1.5];
        let spec = OptimizerSpec::Es {
            pop: 512,
            sigma: 0.1,
            learn_rate: 0.05,
        };
        let mut opt = build_optimizer(&spec, free_space(5), 12, 10).unwrap();
        let before = opt.best_encoded();
        drive(opt.as_mut(), |x| x.iter().zip(&c).map(|(a, b)| a * b).sum(), 1);
        let after = opt.best_encoded();
        let step: Vec<f64> = after.iter().zip(&before).map(|(a, b)| a - b).collect();
        let dot: f64 = step.iter().zip(&c).map(|(a, b)| a * b).sum();
        let ns = step.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nc = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        let cosine = dot / (ns * nc);
        assert!(cosine > 0.9, "cosine {cosine}");
    }

    #[test]
    fn mirrored_pairs_come_out_adjacent() {
        let spec = OptimizerSpec::Es {
            pop: 8,
            sigma: 0.1,
            learn_rate: 0.05,
        };
        let mut opt = build_optimizer(&spec, free_space(3), 44, 10).unwrap();
        let base = opt.best_encoded();
        let cands = opt.ask().unwrap();
        assert_eq!(cands.len(), 8);
        for pair in cands.chunks(2) {
            for i in 0..3 {
                let dplus = pair[0].encoded[i] - base[i];
                let dminus = pair[1].encoded[i] - base[i];
                assert!((dplus + dminus).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn acceptance_probability_worked_examples() {
        assert_eq!(sa_acceptance(0.2, 0.05), 1.0);
        assert_eq!(sa_acceptance(0.0, 0.05), 1.0);
        let p = sa_acceptance(-(0.07 * std::f64::consts::LN_2), 0.07);
        assert!((p - 0.5).abs() < 1e-12, "p = {p}");
        assert!(sa_acceptance(-1.0, 1e-9) < 1e-100);
    }

    #[test]
    fn sa_finds_a_one_dim_optimum() {
        let spec = OptimizerSpec::Sa {
            chains: 8,
            t0: 0.1,
            t_end: 0.001,
            noise: 0.3,
        };
        let mut opt = build_optimizer(&spec, free_space(1), 3, 40).unwrap();
        drive(opt.as_mut(), |x| -(x[0] - 0.4) * (x[0] - 0.4), 40);
        let best = opt.best_encoded();
        assert!(
            (best[0] - 0.4).abs() < 0.1,
            "sa best {best:?} should be near 0.4"
        );
    }

    #[test]
    fn improving_sa_moves_always_replace_the_chain() {
        let spec = OptimizerSpec::Sa {
            chains: 4,
            t0: 0.1,
            t_end: 0.001,
            noise: 0.3,
        };
        let mut opt = build_optimizer(&spec, free_space(2), 21, 10).unwrap();
        // Strictly increasing fitness per round: every proposal improves on
        // its chain, so every proposal must be accepted.
        let mut round = 0.0;
        for _ in 0..6 {
            let cands = opt.ask().unwrap();
            round += 1.0;
            let records: Vec<FitnessRecord> = cands
                .iter()
                .enumerate()
                .map(|(i, c)| rec(i, c.encoded.clone(), round))
                .collect();
            opt.tell(&records).unwrap();
            let last = cands.last().unwrap().encoded.clone();
            let finals = opt.finalists();
            assert_eq!(finals[cands.len() - 1].encoded, last);
        }
    }

    #[test]
    fn gd_recovers_a_linear_gradient_exactly() {
        let c = [1.5, -0.75, 2.0];
        let spec = OptimizerSpec::Gd {
            probe_eps: 0.01,
            step_size: 0.5,
        };
        let mut opt = build_optimizer(&spec, free_space(3), 8, 10).unwrap();
        let before = opt.best_encoded();
        drive(opt.as_mut(), |x| x.iter().zip(&c).map(|(a, b)| a * b).sum(), 1);
        let after = opt.best_encoded();
        for i in 0..3 {
            let grad = (after[i] - before[i]) / 0.5;
            assert!(
                (grad - c[i]).abs() <= 1e-8,
                "dim {i}: estimated {grad}, true {}",
                c[i]
            );
        }
    }

    #[test]
    fn zero_step_size_freezes_gd() {
        let spec = OptimizerSpec::Gd {
            probe_eps: 0.01,
            step_size: 0.0,
        };
        let mut opt = build_optimizer(&spec, free_space(2), 8, 10).unwrap();
        let before = opt.best_encoded();
        drive(opt.as_mut(), |x| x[0] + x[1], 3);
        assert_eq!(opt.best_encoded(), before);
    }

    #[test]
    fn rank_transform_centers_and_handles_ties() {
        let r = centered_ranks(&[3.0, 1.0, 2.0]);
        assert_eq!(r, vec![0.5, -0.5, 0.0]);
        let r = centered_ranks(&[1.0, 1.0]);
        assert_eq!(r, vec![0.0, 0.0]);
        let r = centered_ranks(&[2.0, 1.0, 2.0]);
        // Tied top pair shares rank 1.5 of 0..2.
        assert_eq!(r, vec![0.25, -0.5, 0.25]);
    }

    #[test]
    fn same_seed_reproduces_the_ask_sequence() {
        for spec in [
            OptimizerSpec::Ce {
                pop: 8,
                elite_frac: 0.5,
                diag_cov: false,
            },
            OptimizerSpec::Es {
                pop: 8,
                sigma: 0.1,
                learn_rate: 0.05,
            },
            OptimizerSpec::Sa {
                chains: 4,
                t0: 0.1,
                t_end: 0.001,
                noise: 0.3,
            },
            OptimizerSpec::Gd {
                probe_eps: 0.01,
                step_size: 0.5,
            },
        ] {
            let f = |x: &[f64]| -x.iter().map(|v| v * v).sum::<f64>();
            let mut a = build_optimizer(&spec, free_space(3), 77, 5).unwrap();
            let mut b = build_optimizer(&spec, free_space(3), 77, 5).unwrap();
            for _ in 0..5 {
                let ca = a.ask().unwrap();
                let cb = b.ask().unwrap();
                assert_eq!(ca, cb, "{} diverged", spec.name());
                let recs: Vec<FitnessRecord> = ca
                    .iter()
                    .enumerate()
                    .map(|(i, c)| rec(i, c.encoded.clone(), f(&c.encoded)))
                    .collect();
                a.tell(&recs).unwrap();
                b.tell(&recs).unwrap();
            }
            assert_eq!(a.best_encoded(), b.best_encoded());
        }
    }

    #[test]
    fn misuse_of_the_ask_tell_protocol_errors() {
        let spec = OptimizerSpec::Gd {
            probe_eps: 0.01,
            step_size: 0.5,
        };
        let mut opt = build_optimizer(&spec, free_space(2), 8, 10).unwrap();
        assert!(opt.tell(&[]).is_err());
        let cands = opt.ask().unwrap();
        assert!(opt.ask().is_err());
        let recs: Vec<FitnessRecord> = cands
            .iter()
            .enumerate()
            .map(|(i, c)| rec(i, c.encoded.clone(), 0.0))
            .collect();
        opt.tell(&recs).unwrap();
        assert!(opt.ask().is_ok());
    }

    #[test]
    fn budget_costs_match_population_shapes() {
        let dim = 6;
        assert_eq!(
            OptimizerSpec::Ce {
                pop: 32,
                elite_frac: 0.25,
                diag_cov: false
            }
            .gen_cost(dim),
            32
        );
        assert_eq!(
            OptimizerSpec::Sa {
                chains: 8,
                t0: 0.1,
                t_end: 0.001,
                noise: 0.3
            }
            .gen_cost(dim),
            8
        );
        assert_eq!(
            OptimizerSpec::Gd {
                probe_eps: 0.01,
                step_size: 0.5
            }
            .gen_cost(dim),
            12
        );
    }
}
