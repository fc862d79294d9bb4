use num_complex::Complex;

use super::{ComplexMatrix, Differentiable, MeasurementOperator};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::{self, rng_from_seed};
use crate::spaces::{MeasurementVector, SignalVector};
use crate::Scalar;

/// Real `m x d` matrix acting on signals. Sampled matrices have i.i.d.
/// `N(0, 1/m)` entries, so `E |A x|^2 = |x|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGaussianOperator<T: Scalar> {
    matrix: Matrix<T>,
    seed: Option<u64>,
}

impl<T: Scalar> LinearGaussianOperator<T> {
    pub fn sample(m: usize, d: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let scale = T::one() / T::from_usize_lossy(m).sqrt();
        let data = (0..m * d)
            .map(|_| rng::standard_normal::<T, _>(&mut rng) * scale)
            .collect();
        Self {
            matrix: Matrix::from_row_major(m, d, data).expect("shape matches"),
            seed: Some(seed),
        }
    }

    pub fn from_matrix(matrix: Matrix<T>, seed: Option<u64>) -> Self {
        Self { matrix, seed }
    }

    pub fn identity(d: usize) -> Self {
        Self::from_matrix(Matrix::identity(d), None)
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Real-valued `A x`.
    pub fn apply_real(&self, x: &[T]) -> Result<Vec<T>> {
        Error::check_dim("linear operator input", self.matrix.cols(), x.len())?;
        Ok(self.matrix.mul_vec(x))
    }
}

impl<T: Scalar> MeasurementOperator<T> for LinearGaussianOperator<T> {
    fn input_dim(&self) -> usize {
        self.matrix.cols()
    }

    fn output_dim(&self) -> usize {
        self.matrix.rows()
    }

    fn apply(&self, x: &SignalVector<T>) -> Result<MeasurementVector<T>> {
        let y = self.apply_real(x.as_slice())?;
        Ok(MeasurementVector::from_vec(
            y.into_iter().map(|v| Complex::new(v, T::zero())).collect(),
        ))
    }
}

impl<T: Scalar> Differentiable<T> for LinearGaussianOperator<T> {
    fn jacobian(&self, x: &SignalVector<T>) -> Result<ComplexMatrix<T>> {
        Error::check_dim("linear operator input", self.matrix.cols(), x.dim())?;
        Ok(ComplexMatrix::from_real(&self.matrix))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_fixture() {
        let op = LinearGaussianOperator::<f64>::identity(2);
        let y = op.apply(&SignalVector::new(vec![1.0, 2.0]).unwrap()).unwrap();
        assert_eq!(y.stacked(), vec![1.0, 2.0, 0.0, 0.0]);
        assert!(op.apply(&SignalVector::zeros(3)).is_err());
    }

    #[test]
    fn sampled_entries_have_variance_one_over_m() {
        let op = LinearGaussianOperator::<f64>::sample(200, 50, 4);
        let data = op.matrix().as_slice();
        let n = data.len() as f64;
        let mean = data.iter().sum::<f64>() / n;
        let var = data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!((var * 200.0 - 1.0).abs() < 0.03, "{var}");
        assert_eq!(LinearGaussianOperator::<f64>::sample(200, 50, 4), op);
    }

    proptest! {
        #[test]
        fn linearity(a in -3.0f64..3.0, b in -3.0f64..3.0, seed in 0u64..1000,
                     x in prop::collection::vec(-2.0f64..2.0, 4),
                     y in prop::collection::vec(-2.0f64..2.0, 4)) {
            let op = LinearGaussianOperator::<f64>::sample(6, 4, seed);
            let xs = SignalVector::new(x).unwrap();
            let ys = SignalVector::new(y).unwrap();
            let combo = xs.scaled(a).add(&ys.scaled(b)).unwrap();
            let lhs = op.apply(&combo).unwrap();
            let rhs = op.apply(&xs).unwrap().scaled(Complex::new(a, 0.0))
                .add(&op.apply(&ys).unwrap().scaled(Complex::new(b, 0.0))).unwrap();
            prop_assert!(lhs.distance(&rhs).unwrap() <= 1e-12);
        }
    }
}
