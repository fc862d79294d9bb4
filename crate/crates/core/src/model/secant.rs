use rand::Rng;

use super::UnionOfSubspaces;
use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::{self, rng_from_seed};
use crate::spaces::{Pseudometric, SignalVector};
use crate::Scalar;

/// One element `(x - x') / d(x, x')` of the normalized secant set, with the
/// model points that produced it. The first endpoint is the anchor when one
/// is fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct SecantSample<T: Scalar> {
    pub direction: SignalVector<T>,
    pub endpoints: (SignalVector<T>, SignalVector<T>),
    pub gap: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecantSamplerOptions<T> {
    pub max_attempts: usize,
    /// Factor applied to the proposal radius after each rejection.
    pub shrink: T,
}

impl<T: Scalar> Default for SecantSamplerOptions<T> {
    fn default() -> Self {
        Self {
            max_attempts: 100_000,
            shrink: T::lit(0.9),
        }
    }
}

#[derive(Debug, Clone)]
struct NearCenter<T> {
    subspace: usize,
    coeffs: Vec<T>,
}

/// Draws from the normalized secant set, or from its restriction `S_eps` to
/// pairs with `0 < d(x, x') <= eps` when `eps` is set. Near pairs are found by
/// rejection sampling around the clipped projections of `x` on the subspaces
/// that come within `eps` of it, with a shrinking proposal radius.
#[derive(Debug, Clone)]
pub struct SecantSampler<'a, T: Scalar> {
    model: &'a UnionOfSubspaces<T>,
    metric: Pseudometric<T>,
    eps: Option<T>,
    anchor: Option<(SignalVector<T>, Vec<NearCenter<T>>)>,
    options: SecantSamplerOptions<T>,
}

impl<'a, T: Scalar> SecantSampler<'a, T> {
    pub fn new(
        model: &'a UnionOfSubspaces<T>,
        metric: Pseudometric<T>,
        eps: Option<T>,
        anchor: Option<&SignalVector<T>>,
        options: SecantSamplerOptions<T>,
    ) -> Result<Self> {
        metric.validate()?;
        if let Some(e) = eps {
            if !(e > T::zero()) {
                return Err(Error::invalid("secant radius eps must be positive"));
            }
        }
        let anchor = match anchor {
            Some(a) => {
                let tol = T::lit(1e-9).max(T::epsilon() * T::lit(64.0));
                if !model.contains(a, tol) {
                    return Err(Error::invalid("secant anchor must lie in the model"));
                }
                let centers = eps.map_or_else(Vec::new, |e| near_centers(model, &metric, a, e));
                Some((a.clone(), centers))
            }
            None => None,
        };
        Ok(Self {
            model,
            metric,
            eps,
            anchor,
            options,
        })
    }

    pub fn eps(&self) -> Option<T> {
        self.eps
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SecantSample<T>> {
        let (x, fresh_centers);
        let centers = match &self.anchor {
            Some((a, c)) => {
                x = a.clone();
                c
            }
            None => {
                x = self.model.sample_with(rng).1;
                fresh_centers = self
                    .eps
                    .map_or_else(Vec::new, |e| near_centers(self.model, &self.metric, &x, e));
                &fresh_centers
            }
        };
        let x_prime = match self.eps {
            Some(eps) => self.near_partner(&x, centers, eps, rng)?,
            None => self.far_partner(&x, rng)?,
        };
        let gap = self.metric.dist_slices(x.as_slice(), x_prime.as_slice());
        let diff = linalg::sub(x.as_slice(), x_prime.as_slice());
        let direction = SignalVector::from_vec(linalg::scale(&diff, T::one() / gap));
        Ok(SecantSample {
            direction,
            endpoints: (x, x_prime),
            gap,
        })
    }

    fn far_partner<R: Rng + ?Sized>(
        &self,
        x: &SignalVector<T>,
        rng: &mut R,
    ) -> Result<SignalVector<T>> {
        for _ in 0..self.options.max_attempts {
            let (_, xp) = self.model.sample_with(rng);
            let gap = self.metric.dist_slices(x.as_slice(), xp.as_slice());
            if gap > T::zero() && (T::one() / gap).is_finite() {
                return Ok(xp);
            }
        }
        Err(Error::Sampling {
            attempts: self.options.max_attempts,
            reason: "every sampled pair coincided".into(),
        })
    }

    fn near_partner<R: Rng + ?Sized>(
        &self,
        x: &SignalVector<T>,
        centers: &[NearCenter<T>],
        eps: T,
        rng: &mut R,
    ) -> Result<SignalVector<T>> {
        let m = self.model.norm_bound();
        let two_m = T::lit(2.0) * m;
        let mut radius = self
            .metric
            .inverse_profile(eps)
            .map_or(two_m, |r| r.min(two_m));
        let s = self.model.subspace_dim();
        for _ in 0..self.options.max_attempts {
            if centers.is_empty() {
                break;
            }
            let c = &centers[rng.random_range(0..centers.len())];
            let u = rng::unit_sphere::<T, R>(rng, s);
            let r = radius * rng::uniform_open0::<T, R>(rng);
            let z: Vec<T> = c.coeffs.iter().zip(&u).map(|(&a, &b)| a + r * b).collect();
            if linalg::norm(&z) <= m {
                let xp = self.model.embed(c.subspace, &z);
                let gap = self.metric.dist_slices(x.as_slice(), &xp);
                if gap > T::zero() && gap <= eps && (T::one() / gap).is_finite() {
                    return Ok(SignalVector::from_vec(xp));
                }
            }
            radius = radius * self.options.shrink;
        }
        Err(Error::Sampling {
            attempts: self.options.max_attempts,
            reason: format!("no model point found within eps={eps} of the anchor"),
        })
    }
}

fn near_centers<T: Scalar>(
    model: &UnionOfSubspaces<T>,
    metric: &Pseudometric<T>,
    x: &SignalVector<T>,
    eps: T,
) -> Vec<NearCenter<T>> {
    (0..model.num_subspaces())
        .filter_map(|i| {
            let coeffs = model.project_coefficients(i, x.as_slice());
            let p = model.embed(i, &coeffs);
            (metric.dist_slices(x.as_slice(), &p) < eps).then_some(NearCenter {
                subspace: i,
                coeffs,
            })
        })
        .collect()
}

/// Single draw from the (restricted) normalized secant set.
pub fn sample_secant<T: Scalar>(
    model: &UnionOfSubspaces<T>,
    metric: &Pseudometric<T>,
    eps: Option<T>,
    anchor: Option<&SignalVector<T>>,
    seed: u64,
) -> Result<SecantSample<T>> {
    SecantSampler::new(model, *metric, eps, anchor, SecantSamplerOptions::default())?
        .sample(&mut rng_from_seed(seed))
}
