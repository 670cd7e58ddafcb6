//! Camera model, analytic depth recovery from 2D joints plus per-bone
//! labels, synthetic pose generation and a simulated FBI predictor.

mod camera;
mod lift;
mod simulate;
mod synth;

use thiserror::Error;

pub use camera::{estimate_scale, project, ScaledOrthoCamera};
pub use lift::{
    enumerate_lifts, lift, LiftOptions, LiftResult, SpineSign, UncertainPolicy, DEFAULT_MAX_UNCERTAIN,
};
pub use simulate::{simulate_fbi_probabilities, FbiProbabilities, PredictorNoise, ProbabilityRows};
pub use synth::{generate_synthetic_pose, Range, SynthConfig, DEFAULT_BONE_LENGTHS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LiftError {
    #[error("scale is zero or undefined (all 2D joints coincide?)")]
    ZeroScale,
    #[error("{found} ambiguous edges exceed the enumeration cap of {max}")]
    TooManyAmbiguous { found: usize, max: usize },
}
