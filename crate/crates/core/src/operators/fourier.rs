use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ComplexMatrix, Differentiable, MeasurementOperator};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::model::UnionOfSubspaces;
use crate::rng::{self, rng_from_seed};
use crate::spaces::{kernel_norm_equivalence, MeasurementVector, Pseudometric, SignalVector};
use crate::Scalar;

/// Moments `gamma_l = E |omega|^l` for `omega ~ N(0, sigma^-2 I_d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GammaMoments<T> {
    pub gamma0: T,
    pub gamma2: T,
    pub gamma4: T,
}

impl<T: Scalar> GammaMoments<T> {
    pub fn new(d: usize, sigma: T) -> Self {
        let d = T::from_usize_lossy(d);
        let s2 = sigma * sigma;
        Self {
            gamma0: T::one(),
            gamma2: d / s2,
            gamma4: d * (d + T::lit(2.0)) / (s2 * s2),
        }
    }
}

/// Reweighting `f(omega) = sqrt((1 + |w|^2/gamma2 + |w|^4/gamma4) / 3)`.
pub fn weight_f<T: Scalar>(omega: &[T], moments: &GammaMoments<T>) -> T {
    let r2 = linalg::norm_sq(omega);
    ((moments.gamma0 + r2 / moments.gamma2 + r2 * r2 / moments.gamma4) / T::lit(3.0)).sqrt()
}

/// Exact sampler for `Lambda = f(omega)^2 N(0, sigma^-2 I)`.
///
/// `Lambda` is the equal-weight mixture of the three tilted laws
/// `|omega|^{2l} N(0, sigma^-2 I) / gamma_{2l}`, `l = 0, 1, 2`. Tilting a
/// radial law by `r^{2l}` adds `2l` degrees of freedom to its radius, so
/// component `l` has a uniform direction and radius `|z| / sigma` with `z` a
/// standard Gaussian in dimension `d + 2l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaSampler<T> {
    sigma: T,
    d: usize,
}

impl<T: Scalar> LambdaSampler<T> {
    pub fn new(sigma: T, d: usize) -> Result<Self> {
        if !(sigma > T::zero()) {
            return Err(Error::invalid("sigma must be positive"));
        }
        if d == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        Ok(Self { sigma, d })
    }

    pub fn sample_component<R: Rng + ?Sized>(&self, component: usize, rng: &mut R) -> Vec<T> {
        let dir = rng::unit_sphere::<T, R>(rng, self.d);
        let z = rng::gaussian_vec::<T, R>(rng, self.d + 2 * component);
        let radius = linalg::norm(&z) / self.sigma;
        linalg::scale(&dir, radius)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        let component = rng.random_range(0..3);
        self.sample_component(component, rng)
    }
}

/// `count x d` matrix of i.i.d. frequency rows drawn from `Lambda`.
pub fn sample_lambda<T: Scalar>(sigma: T, d: usize, count: usize, seed: u64) -> Result<Matrix<T>> {
    if count == 0 {
        return Err(Error::invalid("need at least one frequency"));
    }
    let sampler = LambdaSampler::new(sigma, d)?;
    let mut rng = rng_from_seed(seed);
    let data = (0..count).flat_map(|_| sampler.sample(&mut rng)).collect();
    Matrix::from_row_major(count, d, data)
}

/// Constants of the nonlinear LRIP hypotheses for one operator draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct NonlinearLripHypotheses<T> {
    /// Lipschitz constant of `Psi` on the model w.r.t. the kernel metric.
    pub c1: T,
    /// Taylor remainder constant.
    pub c2: T,
    /// Bound on the linearization over normalized secants.
    pub c3: T,
    /// Metric diameter of the model.
    pub model_diameter: T,
    /// Radius below which the linearization hypothesis holds.
    #[serde(with = "crate::serde_ext")]
    pub eps0: T,
}

/// Reweighted random Fourier features
/// `Psi(x)_j = exp(i omega_j . x) / (sqrt(m) f(omega_j))`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomFourierOperator<T: Scalar> {
    omegas: Matrix<T>,
    weights: Vec<T>,
    sigma: T,
    seed: Option<u64>,
    moments: GammaMoments<T>,
}

impl<T: Scalar> RandomFourierOperator<T> {
    pub fn sample(m: usize, d: usize, sigma: T, seed: u64) -> Result<Self> {
        let omegas = sample_lambda(sigma, d, m, seed)?;
        Self::from_frequencies(omegas, sigma, Some(seed))
    }

    pub fn from_frequencies(omegas: Matrix<T>, sigma: T, seed: Option<u64>) -> Result<Self> {
        if omegas.rows() == 0 || omegas.cols() == 0 {
            return Err(Error::invalid("need m >= 1 frequencies in d >= 1 dimensions"));
        }
        if !(sigma > T::zero()) {
            return Err(Error::invalid("sigma must be positive"));
        }
        if omegas.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("frequencies"));
        }
        let moments = GammaMoments::new(omegas.cols(), sigma);
        let weights = (0..omegas.rows())
            .map(|j| weight_f(omegas.row(j), &moments))
            .collect();
        Ok(Self {
            omegas,
            weights,
            sigma,
            seed,
            moments,
        })
    }

    pub fn frequencies(&self) -> &Matrix<T> {
        &self.omegas
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn moments(&self) -> &GammaMoments<T> {
        &self.moments
    }

    pub fn metric(&self) -> Pseudometric<T> {
        Pseudometric::GaussianKernel { sigma: self.sigma }
    }

    fn row_scale(&self, j: usize) -> T {
        T::one() / (T::from_usize_lossy(self.omegas.rows()).sqrt() * self.weights[j])
    }

    /// `sqrt(sum_j |omega_j|^p / (m f(omega_j)^2))` for `p = 2` or `4`.
    pub fn weighted_frequency_moment(&self, power: i32) -> T {
        let m = T::from_usize_lossy(self.omegas.rows());
        (0..self.omegas.rows())
            .map(|j| {
                let r2 = linalg::norm_sq(self.omegas.row(j));
                r2.powi(power / 2) / (m * self.weights[j] * self.weights[j])
            })
            .sum::<T>()
            .sqrt()
    }

    /// Per-draw constants `C1 = sqrt(sum |w|^2/(m f^2)) / l`, `C2 = C1`,
    /// `C3 = sqrt(sum |w|^4/(m f^2)) / l^2`, the model diameter, and an
    /// unbounded `eps0` (the Taylor bound holds globally).
    pub fn hypothesis_constants(
        &self,
        model: &UnionOfSubspaces<T>,
    ) -> Result<NonlinearLripHypotheses<T>> {
        Error::check_dim("model vs operator dimension", self.input_dim(), model.dim())?;
        let (lower, _) = kernel_norm_equivalence(model.norm_bound(), self.sigma)?;
        let c1 = self.weighted_frequency_moment(2) / lower;
        let c3 = self.weighted_frequency_moment(4) / (lower * lower);
        Ok(NonlinearLripHypotheses {
            c1,
            c2: c1,
            c3,
            model_diameter: model.diameter(&self.metric()),
            eps0: T::infinity(),
        })
    }
}

impl<T: Scalar> MeasurementOperator<T> for RandomFourierOperator<T> {
    fn input_dim(&self) -> usize {
        self.omegas.cols()
    }

    fn output_dim(&self) -> usize {
        self.omegas.rows()
    }

    fn apply(&self, x: &SignalVector<T>) -> Result<MeasurementVector<T>> {
        Error::check_dim("fourier operator input", self.input_dim(), x.dim())?;
        Ok(MeasurementVector::from_vec(
            (0..self.omegas.rows())
                .map(|j| {
                    let phase = linalg::dot(self.omegas.row(j), x.as_slice());
                    let (s, c) = phase.sin_cos();
                    Complex::new(c, s) * self.row_scale(j)
                })
                .collect(),
        ))
    }
}

impl<T: Scalar> Differentiable<T> for RandomFourierOperator<T> {
    /// Row `j` is `i omega_j^T exp(i omega_j . x) / (sqrt(m) f(omega_j))`.
    fn jacobian(&self, x: &SignalVector<T>) -> Result<ComplexMatrix<T>> {
        Error::check_dim("fourier operator input", self.input_dim(), x.dim())?;
        let (m, d) = (self.omegas.rows(), self.omegas.cols());
        let mut data = Vec::with_capacity(m * d);
        for j in 0..m {
            let row = self.omegas.row(j);
            let phase = linalg::dot(row, x.as_slice());
            let (s, c) = phase.sin_cos();
            // i * e^{i phase} = -sin + i cos
            let unit = Complex::new(-s, c) * self.row_scale(j);
            data.extend(row.iter().map(|&w| unit * w));
        }
        ComplexMatrix::from_row_major(m, d, data)
    }
}
