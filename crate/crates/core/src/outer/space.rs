//! Per-dimension encodings between the optimizer's working space and the
//! hyperparameter values the agent consumes.
//!
//! Box encodings (`Linear`, `Log`) work on a unit coordinate that is clamped
//! into [0,1], so any real vector decodes to an in-bounds value. `Sigmoid`
//! squashes an unbounded coordinate into its range, and `Free` passes the
//! coordinate through untouched (used for the learned rule's raw parameters).

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Encoding {
    /// value = lo + u * (hi - lo), u clamped to [0,1].
    Linear,
    /// value = exp(ln lo + u * (ln hi - ln lo)), u clamped to [0,1]; lo > 0.
    Log,
    /// value = lo + (hi - lo) * logistic(x), x unbounded.
    Sigmoid,
    /// value = x, unbounded; bounds are ignored.
    Free,
}

/// One optimized dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimSpec {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub encoding: Encoding,
}

impl DimSpec {
    pub fn new(name: &str, lo: f64, hi: f64, encoding: Encoding) -> Self {
        DimSpec {
            name: name.to_string(),
            lo,
            hi,
            encoding,
        }
    }

    /// Whether the encoded coordinate lives in the [0,1] box.
    pub fn is_boxed(&self) -> bool {
        matches!(self.encoding, Encoding::Linear | Encoding::Log)
    }

    pub fn decode(&self, x: f64) -> f64 {
        match self.encoding {
            Encoding::Linear => {
                let u = x.clamp(0.0, 1.0);
                self.lo + u * (self.hi - self.lo)
            }
            Encoding::Log => {
                let u = x.clamp(0.0, 1.0);
                (self.lo.ln() + u * (self.hi.ln() - self.lo.ln())).exp()
            }
            Encoding::Sigmoid => {
                self.lo + (self.hi - self.lo) * crate::plasticity::sigmoid(x)
            }
            Encoding::Free => x,
        }
    }

    /// Draw an encoded starting coordinate. Box dims start uniform; sigmoid
    /// dims start wide so the squashed value covers its range; free dims
    /// start near zero.
    pub fn sample_init<R: Rng>(&self, rng: &mut R) -> f64 {
        match self.encoding {
            Encoding::Linear | Encoding::Log => rng.random::<f64>(),
            Encoding::Sigmoid => Normal::new(0.0, 2.0).unwrap().sample(rng),
            Encoding::Free => Normal::new(0.0, 0.5).unwrap().sample(rng),
        }
    }

    /// Center of the initial distribution, used as the pre-optimization
    /// incumbent.
    pub fn init_center(&self) -> f64 {
        match self.encoding {
            Encoding::Linear | Encoding::Log => 0.5,
            Encoding::Sigmoid | Encoding::Free => 0.0,
        }
    }
}

/// Ordered collection of dimensions defining one experiment's search space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub dims: Vec<DimSpec>,
}

impl SearchSpace {
    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn names(&self) -> Vec<&str> {
        self.dims.iter().map(|d| d.name.as_str()).collect()
    }

    pub fn decode(&self, encoded: &[f64]) -> Vec<f64> {
        assert_eq!(encoded.len(), self.dim(), "encoded vector length mismatch");
        self.dims
            .iter()
            .zip(encoded)
            .map(|(d, &x)| d.decode(x))
            .collect()
    }

    /// Clamp box coordinates into [0,1]; unbounded encodings pass through.
    pub fn clamp(&self, encoded: &mut [f64]) {
        for (d, x) in self.dims.iter().zip(encoded.iter_mut()) {
            if d.is_boxed() {
                *x = x.clamp(0.0, 1.0);
            }
        }
    }

    pub fn sample_init<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.dims.iter().map(|d| d.sample_init(rng)).collect()
    }

    pub fn init_center(&self) -> Vec<f64> {
        self.dims.iter().map(|d| d.init_center()).collect()
    }

    /// Hyperparameters of the tabular TD(lambda) agent on MDP tasks. The
    /// rescale period is searched on a log scale over [1, horizon]; its
    /// decoded value is rounded to the nearest step count by the consumer.
    pub fn mdp_td_lambda(horizon: usize) -> Self {
        SearchSpace {
            dims: vec![
                DimSpec::new("alpha", 1e-3, 1.0, Encoding::Log),
                DimSpec::new("gamma", 0.0, 1.0, Encoding::Sigmoid),
                DimSpec::new("lambda", 0.0, 1.0, Encoding::Sigmoid),
                DimSpec::new("xi", 0.0, 63.0, Encoding::Linear),
                DimSpec::new("zeta", 0.0, 63.0, Encoding::Linear),
                DimSpec::new("rescale_period", 1.0, horizon as f64, Encoding::Log),
                DimSpec::new("w_max", 33.0, 63.0, Encoding::Linear),
                DimSpec::new("w_min", 0.0, 30.0, Encoding::Linear),
            ],
        }
    }

    /// Hyperparameters of the decaying-rate TD(1) agent on bandit tasks
    /// (discounting is fixed at 1 there).
    pub fn mab_td1() -> Self {
        SearchSpace {
            dims: vec![
                DimSpec::new("alpha0", 1e-3, 10.0, Encoding::Log),
                DimSpec::new("alpha_decay", 0.0, 1.0, Encoding::Sigmoid),
                DimSpec::new("xi", 0.0, 63.0, Encoding::Linear),
                DimSpec::new("zeta", 0.0, 63.0, Encoding::Linear),
            ],
        }
    }

    /// Raw parameters of the learned update network plus the two selection
    /// knobs: 50 free weights followed by xi and zeta.
    pub fn mab_ann() -> Self {
        let mut dims: Vec<DimSpec> = (0..crate::plasticity::ANN_THETA_DIM)
            .map(|i| DimSpec::new(&format!("theta_{i:02}"), 0.0, 0.0, Encoding::Free))
            .collect();
        dims.push(DimSpec::new("xi", 0.0, 63.0, Encoding::Linear));
        dims.push(DimSpec::new("zeta", 0.0, 63.0, Encoding::Linear));
        SearchSpace { dims }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::{stream, StreamRole};

    #[test]
    fn linear_decoding_interpolates_and_clamps() {
        let d = DimSpec::new("xi", 0.0, 63.0, Encoding::Linear);
        assert_eq!(d.decode(0.0), 0.0);
        assert_eq!(d.decode(1.0), 63.0);
        assert_eq!(d.decode(0.5), 31.5);
        assert_eq!(d.decode(-3.0), 0.0);
        assert_eq!(d.decode(7.0), 63.0);
    }

    #[test]
    fn log_decoding_is_geometric() {
        let d = DimSpec::new("alpha", 1e-3, 10.0, Encoding::Log);
        assert!((d.decode(0.0) - 1e-3).abs() < 1e-12);
        assert!((d.decode(1.0) - 10.0).abs() < 1e-10);
        // Midpoint of the exponent range: sqrt(1e-3 * 10) = 0.1.
        assert!((d.decode(0.5) - 0.1).abs() < 1e-10);
    }

    #[test]
    fn sigmoid_decoding_stays_inside_the_open_range() {
        let d = DimSpec::new("gamma", 0.0, 1.0, Encoding::Sigmoid);
        assert_eq!(d.decode(0.0), 0.5);
        for x in [-50.0, -3.0, 0.7, 40.0] {
            let v = d.decode(x);
            assert!((0.0..=1.0).contains(&v), "decode({x}) = {v}");
        }
        assert!(d.decode(100.0) > 0.999);
        assert!(d.decode(-100.0) < 0.001);
    }

    #[test]
    fn free_decoding_is_identity() {
        let d = DimSpec::new("theta_0", 0.0, 0.0, Encoding::Free);
        assert_eq!(d.decode(-7.25), -7.25);
    }

    #[test]
    fn every_init_sample_decodes_in_bounds() {
        let space = SearchSpace {
            dims: vec![
                DimSpec::new("alpha", 1e-3, 10.0, Encoding::Log),
                DimSpec::new("decay", 0.0, 1.0, Encoding::Sigmoid),
                DimSpec::new("xi", 0.0, 63.0, Encoding::Linear),
            ],
        };
        let mut rng = stream(50, StreamRole::OptimizerInit, &[0]);
        for _ in 0..1000 {
            let enc = space.sample_init(&mut rng);
            let dec = space.decode(&enc);
            assert!((1e-3..=10.0).contains(&dec[0]));
            assert!((0.0..=1.0).contains(&dec[1]));
            assert!((0.0..=63.0).contains(&dec[2]));
        }
    }

    #[test]
    fn clamp_only_touches_boxed_dims() {
        let space = SearchSpace {
            dims: vec![
                DimSpec::new("u", 0.0, 1.0, Encoding::Linear),
                DimSpec::new("x", 0.0, 1.0, Encoding::Sigmoid),
            ],
        };
        let mut enc = vec![1.7, -9.0];
        space.clamp(&mut enc);
        assert_eq!(enc, vec![1.0, -9.0]);
    }

    #[test]
    fn experiment_spaces_have_the_agreed_shapes() {
        let mdp = SearchSpace::mdp_td_lambda(200);
        assert_eq!(mdp.dim(), 8);
        assert_eq!(
            mdp.names(),
            vec![
                "alpha",
                "gamma",
                "lambda",
                "xi",
                "zeta",
                "rescale_period",
                "w_max",
                "w_min"
            ]
        );
        // Period decodes across the full horizon on a log scale.
        let period = &mdp.dims[5];
        assert!((period.decode(0.0) - 1.0).abs() < 1e-12);
        assert!((period.decode(1.0) - 200.0).abs() < 1e-9);

        let td1 = SearchSpace::mab_td1();
        assert_eq!(td1.dim(), 4);
        assert_eq!(td1.names(), vec!["alpha0", "alpha_decay", "xi", "zeta"]);

        let ann = SearchSpace::mab_ann();
        assert_eq!(ann.dim(), 52);
        assert_eq!(ann.dims[0].name, "theta_00");
        assert_eq!(ann.dims[49].name, "theta_49");
        assert_eq!(ann.dims[50].name, "xi");
        assert_eq!(ann.dims[51].name, "zeta");
        assert!(ann.dims[..50].iter().all(|d| d.encoding == Encoding::Free));
    }
}
