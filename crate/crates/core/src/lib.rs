//! Learning with chain-of-thought supervision over finite hypothesis classes.
//!
//! The crate computes the CoT information curve of a class relative to a
//! target, evaluates the sample-complexity bounds built on it, and runs the
//! learning experiments that compare end-to-end and CoT supervision.

pub mod bounds;
pub mod cotinfo;
pub mod dfa;
pub mod error;
pub mod harness;
pub mod linthresh;
pub mod model;
pub mod rules;
pub mod synthetic;

pub use error::{Error, Result};
pub use model::{
    cot_risk, e2e_risk, empirical_risks, joint_risks, ClassMeta, CotDataset, CotHypothesis, CotOutput, Example,
    ExtReal, FiniteDistribution, HypothesisClass, InputSeq, JointDistribution, StateId, Symbol, Token,
};
