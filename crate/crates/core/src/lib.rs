//! Recovery guarantees for signals in a union of subspaces measured by linear
//! Gaussian maps or reweighted random Fourier features: model sets, metrics,
//! operators, the ideal decoder and estimators of the LRIP, boundedness,
//! instance-optimality and concentration constants.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix `f64`, with `f32` variants under [`single`].

// `!(x > 0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certifier;
pub mod decoder;
pub mod error;
pub mod linalg;
pub mod model;
pub mod operators;
pub mod rng;
mod scalar;
pub mod serde_ext;
pub mod spaces;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type SignalVector = spaces::SignalVector<f64>;
pub type MeasurementVector = spaces::MeasurementVector<f64>;
pub type Pseudometric = spaces::Pseudometric<f64>;
pub type UnionOfSubspaces = model::UnionOfSubspaces<f64>;
pub type LinearGaussianOperator = operators::LinearGaussianOperator<f64>;
pub type RandomFourierOperator = operators::RandomFourierOperator<f64>;
pub type Operator = operators::Operator<f64>;
pub type DecodeResult = decoder::DecodeResult<f64>;
pub type DecoderOptions = decoder::DecoderOptions<f64>;

/// Single-precision aliases.
pub mod single {
    pub type SignalVector = crate::spaces::SignalVector<f32>;
    pub type MeasurementVector = crate::spaces::MeasurementVector<f32>;
    pub type Pseudometric = crate::spaces::Pseudometric<f32>;
    pub type UnionOfSubspaces = crate::model::UnionOfSubspaces<f32>;
    pub type LinearGaussianOperator = crate::operators::LinearGaussianOperator<f32>;
    pub type RandomFourierOperator = crate::operators::RandomFourierOperator<f32>;
    pub type Operator = crate::operators::Operator<f32>;
    pub type DecodeResult = crate::decoder::DecodeResult<f32>;
    pub type DecoderOptions = crate::decoder::DecoderOptions<f32>;
}
