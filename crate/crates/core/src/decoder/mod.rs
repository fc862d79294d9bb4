//! The ideal decoder `argmin_{x in model} |Psi(x) - y|`.
//!
//! Linear operators are decoded exactly: one norm-constrained least-squares
//! problem per subspace. Nonlinear operators use multi-start projected
//! Levenberg-Marquardt per subspace; the achieved residual is reported so the
//! optimizer's gap can be charged to the instance-optimality slack.

mod grid;
mod multistart;

pub use grid::{grid_minimum, GridMinimum};
pub use multistart::decode_nonlinear;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, clip_to_ball, Svd};
use crate::model::UnionOfSubspaces;
use crate::operators::{
    LinearGaussianOperator, MeasurementOperator, Operator, RandomFourierOperator,
};
use crate::spaces::{MeasurementVector, SignalVector};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GridOracleOptions<T> {
    pub enabled: bool,
    pub resolution: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound = "T: Scalar")]
pub struct DecoderOptions<T> {
    /// Starts per subspace (>= 1).
    pub restarts: usize,
    pub max_iters: usize,
    /// Tolerance on the projected gradient of `|Psi(x) - y|^2 / 2`.
    pub gtol: T,
    pub seed: u64,
    pub grid_oracle: GridOracleOptions<T>,
}

impl<T: Scalar> Default for DecoderOptions<T> {
    fn default() -> Self {
        Self {
            restarts: 8,
            max_iters: 500,
            gtol: T::lit(1e-10),
            seed: 0,
            grid_oracle: GridOracleOptions {
                enabled: false,
                resolution: T::lit(1e-3),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecodeMethod {
    ExactLinear,
    MultiStart,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DecodeResult<T: Scalar> {
    pub xhat: SignalVector<T>,
    /// `|Psi(xhat) - y|`.
    pub residual: T,
    pub subspace_index: usize,
    pub optimizer_iters: usize,
    pub restarts_used: usize,
    pub converged: bool,
    pub method: DecodeMethod,
}

/// Operators that know how to decode their own measurements.
pub trait Decoder<T: Scalar>: MeasurementOperator<T> {
    fn decode(
        &self,
        model: &UnionOfSubspaces<T>,
        y: &MeasurementVector<T>,
        opts: &DecoderOptions<T>,
        warm_start: Option<&SignalVector<T>>,
    ) -> Result<DecodeResult<T>>;
}

impl<T: Scalar> Decoder<T> for LinearGaussianOperator<T> {
    fn decode(
        &self,
        model: &UnionOfSubspaces<T>,
        y: &MeasurementVector<T>,
        _opts: &DecoderOptions<T>,
        _warm_start: Option<&SignalVector<T>>,
    ) -> Result<DecodeResult<T>> {
        decode_linear(self, model, y)
    }
}

impl<T: Scalar> Decoder<T> for RandomFourierOperator<T> {
    fn decode(
        &self,
        model: &UnionOfSubspaces<T>,
        y: &MeasurementVector<T>,
        opts: &DecoderOptions<T>,
        warm_start: Option<&SignalVector<T>>,
    ) -> Result<DecodeResult<T>> {
        decode_nonlinear(self, model, y, opts, warm_start)
    }
}

impl<T: Scalar> Decoder<T> for Operator<T> {
    fn decode(
        &self,
        model: &UnionOfSubspaces<T>,
        y: &MeasurementVector<T>,
        opts: &DecoderOptions<T>,
        warm_start: Option<&SignalVector<T>>,
    ) -> Result<DecodeResult<T>> {
        match self {
            Operator::Linear(op) => op.decode(model, y, opts, warm_start),
            Operator::Fourier(op) => op.decode(model, y, opts, warm_start),
        }
    }
}

pub(crate) fn check_shapes<T: Scalar, O: MeasurementOperator<T> + ?Sized>(
    op: &O,
    model: &UnionOfSubspaces<T>,
    y: &MeasurementVector<T>,
) -> Result<()> {
    Error::check_dim("decoder: model vs operator input", op.input_dim(), model.dim())?;
    Error::check_dim("decoder: measurement length", op.output_dim(), y.dim())
}

/// Minimizes `|A B z - y|` over `|z| <= M` for one orthonormal basis `B`.
/// Returns the coefficients and the number of bisection steps used.
fn constrained_least_squares<T: Scalar>(columns: Vec<Vec<T>>, b: &[T], radius: T) -> (Vec<T>, usize) {
    if radius == T::zero() {
        return (vec![T::zero(); columns.len()], 0);
    }
    let svd = Svd::new(columns);
    let proj = svd.project(b);
    let mut z = svd.solve_projected(&proj, T::zero());
    if linalg::norm(&z) <= radius {
        return (z, 0);
    }
    // The minimizer sits on the sphere: find mu > 0 with |z(mu)| = M.
    // |z(mu)| is decreasing and |z(mu)| <= |proj| / mu.
    let mut lo = T::zero();
    let mut hi = linalg::norm(&proj) / radius;
    let mut iters = 0;
    let tol = T::lit(1e-12).max(T::epsilon() * T::lit(8.0));
    while iters < 200 {
        iters += 1;
        let mid = T::lit(0.5) * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        let n = linalg::norm(&svd.solve_projected(&proj, mid));
        if n > radius {
            lo = mid;
        } else {
            hi = mid;
            if radius - n <= tol * radius {
                break;
            }
        }
    }
    // The constrained minimizer lies on the sphere.
    z = svd.solve_projected(&proj, hi);
    let n = linalg::norm(&z);
    if n > T::zero() {
        z.iter_mut().for_each(|v| *v = *v * (radius / n));
    }
    clip_to_ball(&mut z, radius);
    (z, iters)
}

/// Exact decoder for a linear operator on a union of subspaces.
///
/// The real part of `y` is fitted; its imaginary part (if any) is outside the
/// range of a real operator and only contributes to the residual. Rank
/// deficient `A B_i` is handled through the minimum-norm solution. Ties
/// between subspaces go to the lowest index.
pub fn decode_linear<T: Scalar>(
    op: &LinearGaussianOperator<T>,
    model: &UnionOfSubspaces<T>,
    y: &MeasurementVector<T>,
) -> Result<DecodeResult<T>> {
    check_shapes(op, model, y)?;
    let b: Vec<T> = y.as_slice().iter().map(|c| c.re).collect();
    let mut best: Option<DecodeResult<T>> = None;
    for i in 0..model.num_subspaces() {
        let columns: Vec<Vec<T>> = (0..model.subspace_dim())
            .map(|k| op.matrix().mul_vec(model.basis_column(i, k)))
            .collect();
        let (z, iters) = constrained_least_squares(columns, &b, model.norm_bound());
        let mut x = model.embed(i, &z);
        clip_to_ball(&mut x, model.norm_bound());
        let xhat = SignalVector::from_vec(x);
        let residual = op.apply(&xhat)?.distance(y)?;
        if best.as_ref().is_none_or(|r| residual < r.residual) {
            best = Some(DecodeResult {
                xhat,
                residual,
                subspace_index: i,
                optimizer_iters: iters,
                restarts_used: 1,
                converged: true,
                method: DecodeMethod::ExactLinear,
            });
        }
    }
    Ok(best.expect("model has at least one subspace"))
}

/// Optimizer error to be added to the instance-optimality slack:
/// `residual - (best available lower bound on the optimal residual)`.
///
/// Exact decodes have zero gap. With a grid oracle (subspace dimension at
/// most 2) the grid minimum stands in for the optimum, so the gap may be
/// slightly negative, by at most the residual's variation across one grid
/// cell. Otherwise the only lower bound is 0. A non-converged result has
/// unknown gap, reported as `+inf`.
pub fn residual_certificate<T: Scalar, O: MeasurementOperator<T> + ?Sized>(
    result: &DecodeResult<T>,
    op: &O,
    model: &UnionOfSubspaces<T>,
    y: &MeasurementVector<T>,
    grid_resolution: Option<T>,
) -> Result<T> {
    if !result.converged {
        return Ok(T::infinity());
    }
    if result.method == DecodeMethod::ExactLinear {
        return Ok(T::zero());
    }
    match grid_resolution {
        Some(res) if model.subspace_dim() <= 2 => {
            Ok(result.residual - grid_minimum(op, model, y, res)?.residual)
        }
        _ => Ok(result.residual),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn x_axis() -> UnionOfSubspaces<f64> {
        UnionOfSubspaces::new(2, 1, vec![vec![1.0, 0.0]], 1.0).unwrap()
    }

    fn y(v: &[f64]) -> MeasurementVector<f64> {
        MeasurementVector::from_real(v).unwrap()
    }

    #[test]
    fn identity_examples() {
        let op = LinearGaussianOperator::identity(2);
        let r = decode_linear(&op, &x_axis(), &y(&[0.5, 0.0])).unwrap();
        assert_eq!(r.xhat.as_slice(), &[0.5, 0.0]);
        assert_eq!(r.residual, 0.0);

        let r = decode_linear(&op, &x_axis(), &y(&[0.3, 0.4])).unwrap();
        assert!((r.xhat[0] - 0.3).abs() < 1e-15 && r.xhat[1] == 0.0);
        assert!((r.residual - 0.4).abs() < 1e-15);

        let r = decode_linear(&op, &x_axis(), &y(&[2.0, 0.0])).unwrap();
        assert!((r.xhat[0] - 1.0).abs() < 1e-12 && r.xhat.norm() <= 1.0);
        assert!((r.residual - 1.0).abs() < 1e-12);
        assert_eq!(residual_certificate(&r, &op, &x_axis(), &y(&[2.0, 0.0]), None).unwrap(), 0.0);
    }

    #[test]
    fn clipped_solution_matches_scan() {
        // Non-identity operator where the unconstrained optimum leaves the ball.
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![0.5, -1.0], vec![1.0, 1.0]]).unwrap();
        let op = LinearGaussianOperator::from_matrix(a, None);
        let model = UnionOfSubspaces::from_spanning(2, &[vec![vec![1.0, 1.0]]], 0.8).unwrap();
        let target = y(&[5.0, -1.0, 3.0]);
        let r = decode_linear(&op, &model, &target).unwrap();
        let b = model.basis(0).to_vec();
        let mut best = f64::INFINITY;
        for k in -8000..=8000 {
            let t = 0.8 * k as f64 / 8000.0;
            let x = SignalVector::new(vec![b[0] * t, b[1] * t]).unwrap();
            best = best.min(op.apply(&x).unwrap().distance(&target).unwrap());
        }
        assert!((r.residual - best).abs() < 1e-6, "{} vs {}", r.residual, best);
        assert!((r.xhat.norm() - 0.8).abs() < 1e-10);
    }

    #[test]
    fn rank_deficient_operator_is_not_an_error() {
        let op = LinearGaussianOperator::from_matrix(Matrix::zeros(2, 2), None);
        let r = decode_linear(&op, &x_axis(), &y(&[1.0, 1.0])).unwrap();
        assert_eq!(r.xhat.as_slice(), &[0.0, 0.0]);
        assert!((r.residual - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn imaginary_part_only_adds_to_residual() {
        use num_complex::Complex;
        let op = LinearGaussianOperator::identity(2);
        let yc = MeasurementVector::new(vec![Complex::new(0.5, 0.3), Complex::new(0.0, 0.4)]).unwrap();
        let r = decode_linear(&op, &x_axis(), &yc).unwrap();
        assert_eq!(r.xhat.as_slice(), &[0.5, 0.0]);
        assert!((r.residual - 0.5).abs() < 1e-15);
    }

    #[test]
    fn shape_errors() {
        let op = LinearGaussianOperator::identity(3);
        assert!(decode_linear(&op, &x_axis(), &y(&[1.0, 0.0, 0.0])).is_err());
        let op = LinearGaussianOperator::identity(2);
        assert!(decode_linear(&op, &x_axis(), &y(&[1.0])).is_err());
    }

    #[test]
    fn ties_go_to_lowest_subspace() {
        let op = LinearGaussianOperator::identity(2);
        let axes = UnionOfSubspaces::k_sparse(2, 1, 1.0).unwrap();
        let r = decode_linear(&op, &axes, &y(&[0.5, 0.5])).unwrap();
        assert_eq!(r.subspace_index, 0);
    }
}
