//! Measurement maps `Psi: R^d -> C^m`.

mod fourier;
mod linear;

pub use fourier::{
    sample_lambda, weight_f, GammaMoments, LambdaSampler, NonlinearLripHypotheses,
    RandomFourierOperator,
};
pub use linear::LinearGaussianOperator;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::spaces::{MeasurementVector, SignalVector};
use crate::Scalar;

pub trait MeasurementOperator<T: Scalar>: Send + Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn apply(&self, x: &SignalVector<T>) -> Result<MeasurementVector<T>>;
}

/// Operators with a linearization `D_Psi(x)` at every point.
pub trait Differentiable<T: Scalar>: MeasurementOperator<T> {
    fn jacobian(&self, x: &SignalVector<T>) -> Result<ComplexMatrix<T>>;
}

impl<T: Scalar, O: MeasurementOperator<T> + ?Sized> MeasurementOperator<T> for &O {
    fn input_dim(&self) -> usize {
        (**self).input_dim()
    }
    fn output_dim(&self) -> usize {
        (**self).output_dim()
    }
    fn apply(&self, x: &SignalVector<T>) -> Result<MeasurementVector<T>> {
        (**self).apply(x)
    }
}

/// Row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> ComplexMatrix<T> {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        Error::check_dim("complex matrix data", rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(m: &Matrix<T>) -> Self {
        Self {
            rows: m.rows(),
            cols: m.cols(),
            data: m
                .as_slice()
                .iter()
                .map(|&v| Complex::new(v, T::zero()))
                .collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Complex<T> {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[Complex<T>] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Product with a real vector.
    pub fn mul_real(&self, h: &[T]) -> Result<MeasurementVector<T>> {
        Error::check_dim("jacobian product", self.cols, h.len())?;
        Ok(MeasurementVector::from_vec(
            (0..self.rows)
                .map(|r| {
                    self.row(r)
                        .iter()
                        .zip(h)
                        .fold(Complex::new(T::zero(), T::zero()), |acc, (a, &b)| acc + a * b)
                })
                .collect(),
        ))
    }

    /// Columns of `self * B` for a column-major `cols x s` real basis, each
    /// stacked as `[re; im]` (length `2 rows`).
    pub fn stacked_columns_times(&self, basis: &[T], s: usize) -> Vec<Vec<T>> {
        (0..s)
            .map(|k| {
                let col = &basis[k * self.cols..(k + 1) * self.cols];
                let prod: Vec<Complex<T>> = (0..self.rows)
                    .map(|r| {
                        self.row(r)
                            .iter()
                            .zip(col)
                            .fold(Complex::new(T::zero(), T::zero()), |acc, (a, &b)| acc + a * b)
                    })
                    .collect();
                prod.iter()
                    .map(|c| c.re)
                    .chain(prod.iter().map(|c| c.im))
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorKind {
    LinearGaussian,
    RandomFourier,
}

/// Wire format of an operator. When the explicit arrays are omitted the
/// seed regenerates them deterministically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct OperatorSpec<T> {
    pub kind: OperatorKind,
    pub m: usize,
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Frequency rows `omega_j` (random Fourier only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omegas: Option<Vec<Vec<T>>>,
    /// Matrix rows (linear only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<T>>>,
}

impl<T: Scalar> OperatorSpec<T> {
    pub fn build(&self) -> Result<Operator<T>> {
        if self.m == 0 || self.d == 0 {
            return Err(Error::invalid("operator needs m >= 1 and d >= 1"));
        }
        let need_seed = || {
            self.seed
                .ok_or_else(|| Error::invalid("operator spec needs a seed or explicit arrays"))
        };
        match self.kind {
            OperatorKind::LinearGaussian => {
                let op = match &self.matrix {
                    Some(rows) => {
                        let mat = Matrix::from_rows(rows)?;
                        Error::check_dim("operator rows m", self.m, mat.rows())?;
                        Error::check_dim("operator cols d", self.d, mat.cols())?;
                        LinearGaussianOperator::from_matrix(mat, self.seed)
                    }
                    None => LinearGaussianOperator::sample(self.m, self.d, need_seed()?),
                };
                Ok(Operator::Linear(op))
            }
            OperatorKind::RandomFourier => {
                let sigma = self
                    .sigma
                    .ok_or_else(|| Error::invalid("random Fourier operator needs sigma"))?;
                let op = match &self.omegas {
                    Some(rows) => {
                        let mat = Matrix::from_rows(rows)?;
                        Error::check_dim("operator rows m", self.m, mat.rows())?;
                        Error::check_dim("operator cols d", self.d, mat.cols())?;
                        RandomFourierOperator::from_frequencies(mat, sigma, self.seed)?
                    }
                    None => RandomFourierOperator::sample(self.m, self.d, sigma, need_seed()?)?,
                };
                Ok(Operator::Fourier(op))
            }
        }
    }
}

/// Either supported operator, dispatched at runtime.
#[derive(Debug, Clone, PartialEq)]
pub enum Operator<T: Scalar> {
    Linear(LinearGaussianOperator<T>),
    Fourier(RandomFourierOperator<T>),
}

impl<T: Scalar> Operator<T> {
    pub fn kind(&self) -> OperatorKind {
        match self {
            Self::Linear(_) => OperatorKind::LinearGaussian,
            Self::Fourier(_) => OperatorKind::RandomFourier,
        }
    }

    /// Spec with explicit arrays when `explicit` is set, seed-only otherwise
    /// (falls back to explicit arrays when the operator has no seed).
    pub fn to_spec(&self, explicit: bool) -> OperatorSpec<T> {
        match self {
            Self::Linear(op) => {
                let explicit = explicit || op.seed().is_none();
                OperatorSpec {
                    kind: OperatorKind::LinearGaussian,
                    m: op.output_dim(),
                    d: op.input_dim(),
                    sigma: None,
                    seed: op.seed(),
                    omegas: None,
                    matrix: explicit.then(|| op.matrix().to_rows()),
                }
            }
            Self::Fourier(op) => {
                let explicit = explicit || op.seed().is_none();
                OperatorSpec {
                    kind: OperatorKind::RandomFourier,
                    m: op.output_dim(),
                    d: op.input_dim(),
                    sigma: Some(op.sigma()),
                    seed: op.seed(),
                    omegas: explicit.then(|| op.frequencies().to_rows()),
                    matrix: None,
                }
            }
        }
    }
}

impl<T: Scalar> MeasurementOperator<T> for Operator<T> {
    fn input_dim(&self) -> usize {
        match self {
            Self::Linear(op) => op.input_dim(),
            Self::Fourier(op) => op.input_dim(),
        }
    }

    fn output_dim(&self) -> usize {
        match self {
            Self::Linear(op) => op.output_dim(),
            Self::Fourier(op) => op.output_dim(),
        }
    }

    fn apply(&self, x: &SignalVector<T>) -> Result<MeasurementVector<T>> {
        match self {
            Self::Linear(op) => op.apply(x),
            Self::Fourier(op) => op.apply(x),
        }
    }
}

impl<T: Scalar> Differentiable<T> for Operator<T> {
    fn jacobian(&self, x: &SignalVector<T>) -> Result<ComplexMatrix<T>> {
        match self {
            Self::Linear(op) => op.jacobian(x),
            Self::Fourier(op) => op.jacobian(x),
        }
    }
}

/// Applies `op` to a signal and checks dimensions.
pub fn apply<T: Scalar, O: MeasurementOperator<T> + ?Sized>(
    op: &O,
    x: &SignalVector<T>,
) -> Result<MeasurementVector<T>> {
    op.apply(x)
}
