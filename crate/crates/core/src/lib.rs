//! Online learners with an optional contraction-based step multiplier,
//! plus the simulation harness used to compare them against their
//! unscaled baselines.

pub mod bench;
pub mod contraction;
pub mod error;
pub mod kernel;
pub mod learner;
pub mod linear;
pub mod neural;
pub mod numeric;
pub mod rng;
pub mod sparse;

pub use contraction::{FactorMode, FactorPolicy};
pub use error::{Error, Result};
pub use learner::{CurveRow, LearningCurve, OnlineLearner, StepOutcome};
pub use numeric::{Dataset, LabeledSample};
pub use rng::RngStream;
