//! Signal space `R^d`, measurement space `C^m`, and the pseudometrics on
//! signals.

use std::ops::Index;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::Scalar;

/// A point of the signal space `R^d` with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent, bound = "T: Scalar")]
pub struct SignalVector<T>(Vec<T>);

impl<T: Scalar> SignalVector<T> {
    pub fn new(coords: Vec<T>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("signal vector"));
        }
        Ok(Self(coords))
    }

    /// Wraps coordinates that are finite by construction.
    pub(crate) fn from_vec(coords: Vec<T>) -> Self {
        debug_assert!(coords.iter().all(|c| c.is_finite()));
        Self(coords)
    }

    pub fn zeros(d: usize) -> Self {
        Self(vec![T::zero(); d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }

    pub fn norm(&self) -> T {
        linalg::norm(&self.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Error::check_dim("signal difference", self.dim(), other.dim())?;
        Ok(Self(linalg::sub(&self.0, &other.0)))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Error::check_dim("signal sum", self.dim(), other.dim())?;
        Ok(Self(linalg::add(&self.0, &other.0)))
    }

    pub fn scaled(&self, k: T) -> Self {
        Self(linalg::scale(&self.0, k))
    }

    pub fn euclidean_distance(&self, other: &Self) -> Result<T> {
        Error::check_dim("euclidean distance", self.dim(), other.dim())?;
        Ok(gap(&self.0, &other.0))
    }
}

impl<T> Index<usize> for SignalVector<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T: Scalar> TryFrom<Vec<T>> for SignalVector<T> {
    type Error = Error;
    fn try_from(v: Vec<T>) -> Result<Self> {
        Self::new(v)
    }
}

fn gap<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
        .sqrt()
}

/// A point of the measurement space `C^m`. Serializes as `[[re, im], ...]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent, bound = "T: Scalar")]
pub struct MeasurementVector<T>(Vec<Complex<T>>);

impl<T: Scalar> MeasurementVector<T> {
    pub fn new(coords: Vec<Complex<T>>) -> Result<Self> {
        if coords.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("measurement vector"));
        }
        Ok(Self(coords))
    }

    pub(crate) fn from_vec(coords: Vec<Complex<T>>) -> Self {
        Self(coords)
    }

    pub fn from_real(coords: &[T]) -> Result<Self> {
        Self::new(coords.iter().map(|&r| Complex::new(r, T::zero())).collect())
    }

    pub fn zeros(m: usize) -> Self {
        Self(vec![Complex::new(T::zero(), T::zero()); m])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.0
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Error::check_dim("measurement difference", self.dim(), other.dim())?;
        Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Error::check_dim("measurement sum", self.dim(), other.dim())?;
        Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect()))
    }

    pub fn scaled(&self, k: Complex<T>) -> Self {
        Self(self.0.iter().map(|a| a * k).collect())
    }

    /// Real and imaginary parts stacked: `[re_1..re_m, im_1..im_m]`.
    pub fn stacked(&self) -> Vec<T> {
        self.0
            .iter()
            .map(|c| c.re)
            .chain(self.0.iter().map(|c| c.im))
            .collect()
    }

    pub fn norm(&self) -> T {
        meas_norm(self)
    }

    pub fn distance(&self, other: &Self) -> Result<T> {
        Error::check_dim("measurement distance", self.dim(), other.dim())?;
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<T>()
            .sqrt())
    }
}

/// Complex Euclidean norm on `C^m`.
pub fn meas_norm<T: Scalar>(v: &MeasurementVector<T>) -> T {
    v.0.iter().map(|c| c.norm_sqr()).sum::<T>().sqrt()
}

/// Distance functional on the signal space.
///
/// `GaussianKernel` is the metric induced by the Gaussian kernel
/// `k(x, x') = exp(-|x - x'|^2 / (2 sigma^2))`, i.e. the feature-space distance
/// `sqrt(2 (1 - k(x, x')))`. Both variants are radial: they depend on
/// `|x - x'|` only, through a nondecreasing profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", bound = "T: Scalar")]
pub enum Pseudometric<T> {
    Euclidean,
    GaussianKernel { sigma: T },
}

impl<T: Scalar> Pseudometric<T> {
    pub fn gaussian_kernel(sigma: T) -> Result<Self> {
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(Error::invalid("kernel bandwidth sigma must be positive"));
        }
        Ok(Self::GaussianKernel { sigma })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Euclidean => Ok(()),
            Self::GaussianKernel { sigma } => Self::gaussian_kernel(sigma).map(|_| ()),
        }
    }

    pub fn dist(&self, x: &SignalVector<T>, x2: &SignalVector<T>) -> Result<T> {
        Error::check_dim("metric distance", x.dim(), x2.dim())?;
        Ok(self.profile(gap(x.as_slice(), x2.as_slice())))
    }

    pub(crate) fn dist_slices(&self, x: &[T], x2: &[T]) -> T {
        self.profile(gap(x, x2))
    }

    /// Metric value as a function of the Euclidean gap `|x - x'|`.
    pub fn profile(&self, gap: T) -> T {
        match *self {
            Self::Euclidean => gap,
            Self::GaussianKernel { sigma } => {
                let a = gap * gap / (T::lit(2.0) * sigma * sigma);
                (-T::lit(2.0) * (-a).exp_m1()).sqrt()
            }
        }
    }

    /// Euclidean gap at which the metric reaches `value`, or `None` when the
    /// value is above the supremum of the profile.
    pub fn inverse_profile(&self, value: T) -> Option<T> {
        match *self {
            Self::Euclidean => Some(value.max(T::zero())),
            Self::GaussianKernel { sigma } => {
                let h = value * value / T::lit(2.0);
                if h >= T::one() {
                    None
                } else {
                    Some(sigma * (-T::lit(2.0) * (-h).ln_1p()).sqrt())
                }
            }
        }
    }

    /// Constants `(l, L)` with `l |x - x'| <= dist(x, x') <= L |x - x'|` on the
    /// ball of radius `norm_bound`.
    pub fn norm_equivalence(&self, norm_bound: T) -> Result<(T, T)> {
        match *self {
            Self::Euclidean => Ok((T::one(), T::one())),
            Self::GaussianKernel { sigma } => kernel_norm_equivalence(norm_bound, sigma),
        }
    }

    /// Diameter of the Euclidean ball of radius `norm_bound` in this metric.
    pub fn ball_diameter(&self, norm_bound: T) -> T {
        self.profile(T::lit(2.0) * norm_bound)
    }
}

/// Sandwich constants `(l, L)` for the Gaussian-kernel metric on the ball
/// `|x| <= norm_bound`.
///
/// `dist / |x - x'|` is decreasing in the gap, from `1/sigma` at zero gap to its
/// value at the largest gap `2 M`; hence `L = 1/sigma` and
/// `l = sqrt(2 (1 - exp(-2 M^2 / sigma^2))) / (2 M)`.
pub fn kernel_norm_equivalence<T: Scalar>(norm_bound: T, sigma: T) -> Result<(T, T)> {
    if !(norm_bound > T::zero()) || !norm_bound.is_finite() {
        return Err(Error::invalid("norm bound M must be positive"));
    }
    let metric = Pseudometric::gaussian_kernel(sigma)?;
    let diameter_gap = T::lit(2.0) * norm_bound;
    let lower = metric.profile(diameter_gap) / diameter_gap;
    Ok((lower, T::one() / sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sv(v: &[f64]) -> SignalVector<f64> {
        SignalVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn euclidean_pythagorean() {
        let d = Pseudometric::Euclidean.dist(&sv(&[3.0, 0.0]), &sv(&[0.0, 4.0])).unwrap();
        assert_eq!(d, 5.0);
    }

    #[test]
    fn kernel_identity_and_closed_forms() {
        let k = Pseudometric::gaussian_kernel(1.0).unwrap();
        let x = sv(&[0.3, -0.7]);
        assert_eq!(k.dist(&x, &x).unwrap(), 0.0);
        // gap 2: sqrt(2 (1 - e^-2))
        let d2 = k.dist(&sv(&[0.0, 0.0]), &sv(&[2.0, 0.0])).unwrap();
        assert!((d2 - 1.315_039_707_965_799).abs() < 1e-12, "{d2}");
        // gap sqrt(2 ln 2): 2 (1 - e^{-ln 2}) = 1
        let g = (2.0 * 2f64.ln()).sqrt();
        let d1 = k.dist(&sv(&[0.0]), &sv(&[g])).unwrap();
        assert!((d1 - 1.0).abs() < 1e-14);
        assert_eq!(k.inverse_profile(1.0).map(|u| (u - g).abs() < 1e-14), Some(true));
        assert_eq!(k.inverse_profile(1.5), None);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let err = Pseudometric::Euclidean.dist(&sv(&[1.0]), &sv(&[1.0, 2.0]));
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn non_finite_inputs_rejected() {
        assert!(SignalVector::new(vec![1.0, f64::NAN]).is_err());
        assert!(MeasurementVector::new(vec![Complex::new(f64::INFINITY, 0.0)]).is_err());
        assert!(Pseudometric::gaussian_kernel(0.0).is_err());
    }

    #[test]
    fn measurement_norm_examples() {
        assert_eq!(MeasurementVector::<f64>::zeros(3).norm(), 0.0);
        let v = MeasurementVector::new(vec![Complex::new(3.0, 4.0)]).unwrap();
        assert_eq!(meas_norm(&v), 5.0);
        let w = MeasurementVector::new(vec![Complex::new(1.0, 0.0), Complex::new(0.0, 1.0)]).unwrap();
        assert!((meas_norm(&w) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn measurement_serializes_as_pairs() {
        let v = MeasurementVector::new(vec![Complex::new(1.0, -2.0)]).unwrap();
        assert_eq!(serde_json::to_string(&v).unwrap(), "[[1.0,-2.0]]");
        let back: MeasurementVector<f64> = serde_json::from_str("[[1.0,-2.0]]").unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn norm_equivalence_values() {
        let (l, big_l) = kernel_norm_equivalence(1.0f64, 1.0).unwrap();
        assert!((l - 0.657_519_853_982_900).abs() < 1e-12, "{l}");
        assert_eq!(big_l, 1.0);
        let (_, big_l2) = kernel_norm_equivalence(2.0, 0.5).unwrap();
        assert_eq!(big_l2, 2.0);
        assert!(kernel_norm_equivalence(0.0, 1.0).is_err());
        assert!(kernel_norm_equivalence(1.0, -1.0).is_err());
        // Small-ball limit: l -> 1/sigma from below.
        let (l_small, big_l_small) = kernel_norm_equivalence(1e-6, 1.0).unwrap();
        assert!(l_small <= big_l_small && (big_l_small - l_small) < 1e-8);
    }

    proptest! {
        #[test]
        fn metric_axioms(a in prop::collection::vec(-3.0f64..3.0, 3),
                         b in prop::collection::vec(-3.0f64..3.0, 3),
                         c in prop::collection::vec(-3.0f64..3.0, 3),
                         sigma in 0.2f64..3.0) {
            let (x, y, z) = (sv(&a), sv(&b), sv(&c));
            for m in [Pseudometric::Euclidean, Pseudometric::gaussian_kernel(sigma).unwrap()] {
                let dxy = m.dist(&x, &y).unwrap();
                prop_assert_eq!(dxy, m.dist(&y, &x).unwrap());
                prop_assert_eq!(m.dist(&x, &x).unwrap(), 0.0);
                prop_assert!(dxy <= m.dist(&x, &z).unwrap() + m.dist(&z, &y).unwrap() + 1e-12);
            }
            let k = Pseudometric::gaussian_kernel(sigma).unwrap();
            prop_assert!(k.dist(&x, &y).unwrap() <= 2f64.sqrt());
        }

        #[test]
        fn kernel_profile_monotone(u in 0.0f64..10.0, du in 1e-6f64..1.0, sigma in 0.1f64..5.0) {
            let k = Pseudometric::gaussian_kernel(sigma).unwrap();
            prop_assert!(k.profile(u) <= k.profile(u + du));
        }

        #[test]
        fn meas_norm_homogeneous_and_subadditive(
            a in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 4),
            b in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 4),
            cr in -3.0f64..3.0, ci in -3.0f64..3.0,
        ) {
            let u = MeasurementVector::new(a.iter().map(|&(r, i)| Complex::new(r, i)).collect()).unwrap();
            let v = MeasurementVector::new(b.iter().map(|&(r, i)| Complex::new(r, i)).collect()).unwrap();
            let c = Complex::new(cr, ci);
            let lhs = meas_norm(&u.scaled(c));
            prop_assert!((lhs - c.norm() * meas_norm(&u)).abs() <= 1e-12 * (1.0 + lhs));
            prop_assert!(meas_norm(&u.add(&v).unwrap()) <= meas_norm(&u) + meas_norm(&v) + 1e-12);
        }
    }
}
