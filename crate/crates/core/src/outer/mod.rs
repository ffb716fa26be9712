//! The meta-optimization layer: encoded hyperparameter spaces, fitness
//! evaluation over task batches, four gradient-free optimizers, and the
//! generation loop that ties them together.

pub mod experiment;
pub mod optim;
pub mod run;
pub mod space;

pub use experiment::{Candidate, DecodedAgent, Experiment, FamilySpec, FitnessRecord, RuleSpec};
pub use optim::{build_optimizer, sa_acceptance, Optimizer, OptimizerSpec};
pub use run::{random_theta_baseline, run_l2l, BestTheta, L2lOutcome, L2lRun};
pub use space::{DimSpec, Encoding, SearchSpace};
