//! Empirical estimates and theoretical bounds for the recovery constants:
//! LRIP (uniform and anchored), boundedness, instance-optimality checks,
//! the concentration function and the failure-probability calculators.
//!
//! Every sampled unit (pair, trial, operator draw) gets its own seed derived
//! from the caller's seed and its index, and results are reduced in index
//! order, so reports do not depend on the number of worker threads.

mod bounds;
mod bp;
mod concentration;
mod iop;
mod lrip;

pub use bounds::{
    prop1_failure_bound, prop2_failure_bound, recommend_m, MRecommendation, Prop1Bound, Prop2Bound,
};
pub use bp::{estimate_bp, BpEstimate, BpOptions};
pub use concentration::{
    estimate_concentration, fit_concentration_slope, wilson_upper, ConcentrationEstimate,
    SlopeFit, SlopePoint,
};
pub use iop::{
    check_iop_inequality, lrip_from_iop_witness, InducedLrip, IopConstants, IopOptions,
    IopTrial, IopWitness,
};
pub use lrip::{estimate_lrip, LripEstimate, LripMode, LripOptions, PairRecord};

use serde::{Deserialize, Serialize};

/// Whether a number was measured on samples or computed from a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateKind {
    Empirical,
    TheoreticalBound,
}

/// Common envelope for estimator output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport<C, W, E> {
    pub mode: CertificateKind,
    pub constants: C,
    pub pairs_tested: usize,
    pub worst_cases: Vec<W>,
    pub seed: u64,
    pub config_echo: E,
}
