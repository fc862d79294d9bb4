use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PairRecord;
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::UnionOfSubspaces;
use crate::operators::MeasurementOperator;
use crate::rng::{derive_seed, rng_from_seed, unit_sphere};
use crate::spaces::{Pseudometric, SignalVector};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct BpOptions<T> {
    pub pairs: usize,
    /// Largest perturbation norm. Norms are log-uniform on
    /// `[1e-4 scale, scale]` so both the local and the global regime are seen.
    pub scale: T,
    pub seed: u64,
}

impl<T: Scalar> Default for BpOptions<T> {
    fn default() -> Self {
        Self {
            pairs: 1000,
            scale: T::one(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct BpEstimate<T: Scalar> {
    /// Max over pairs of `|Psi x - Psi x_S| / d_G(x, x_S)`.
    pub beta_hat: T,
    pub pairs_tested: usize,
    /// Pairs with `d_G = 0`, left out of the maximum.
    pub skipped: usize,
    pub metric_g: Pseudometric<T>,
    /// `x` is the ambient point, `x_prime` the model point.
    pub worst_pair: Option<PairRecord<T>>,
}

/// Empirical boundedness constant: `x_S` is a model point and
/// `x = x_S + r u` with `u` uniform on the sphere.
pub fn estimate_bp<T: Scalar, O: MeasurementOperator<T> + ?Sized>(
    op: &O,
    model: &UnionOfSubspaces<T>,
    metric_g: &Pseudometric<T>,
    opts: &BpOptions<T>,
) -> Result<BpEstimate<T>> {
    if opts.pairs == 0 {
        return Err(Error::invalid("estimate_bp needs at least one pair"));
    }
    if !(opts.scale > T::zero()) || !opts.scale.is_finite() {
        return Err(Error::invalid("bp perturbation scale must be positive"));
    }
    Error::check_dim("estimate_bp: operator vs model", op.input_dim(), model.dim())?;
    metric_g.validate()?;
    let records: Vec<Option<PairRecord<T>>> = (0..opts.pairs)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_from_seed(derive_seed(opts.seed, k as u64));
            let (_, xs) = model.sample_with(&mut rng);
            let u: Vec<T> = unit_sphere(&mut rng, model.dim());
            let e: T = T::lit(-4.0 * rng.random::<f64>());
            let r = opts.scale * T::lit(10.0).powf(e);
            let x = SignalVector::new(linalg::add(xs.as_slice(), &linalg::scale(&u, r)))?;
            let dg = metric_g.dist(&x, &xs)?;
            if !(dg > T::zero()) {
                return Ok(None);
            }
            let gap = op.apply(&x)?.distance(&op.apply(&xs)?)?;
            Ok(Some(PairRecord {
                index: k,
                x,
                x_prime: xs,
                distance: dg,
                measurement_gap: gap,
                ratio: gap / dg,
                near: false,
            }))
        })
        .collect::<Result<_>>()?;
    let skipped = records.iter().filter(|r| r.is_none()).count();
    let mut worst: Option<PairRecord<T>> = None;
    for r in records.into_iter().flatten() {
        if worst.as_ref().is_none_or(|w| r.ratio > w.ratio) {
            worst = Some(r);
        }
    }
    Ok(BpEstimate {
        beta_hat: worst.as_ref().map_or(T::zero(), |w| w.ratio),
        pairs_tested: opts.pairs,
        skipped,
        metric_g: *metric_g,
        worst_pair: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::LinearGaussianOperator;

    #[test]
    fn identity_has_unit_constant() {
        let model = UnionOfSubspaces::<f64>::random(3, 1, 2, 1.0, 1).unwrap();
        let op = LinearGaussianOperator::identity(3);
        let est = estimate_bp(&op, &model, &Pseudometric::Euclidean, &BpOptions::default()).unwrap();
        assert!((est.beta_hat - 1.0).abs() < 1e-12);
        assert_eq!(est.skipped, 0);
    }

    #[test]
    fn scaling_the_operator_doubles_beta() {
        let model = UnionOfSubspaces::<f64>::random(3, 1, 2, 1.0, 1).unwrap();
        let op = LinearGaussianOperator::<f64>::sample(4, 3, 8);
        let op2 = LinearGaussianOperator::from_matrix(op.matrix().scaled(2.0), None);
        let o = BpOptions { pairs: 200, ..BpOptions::default() };
        let a = estimate_bp(&op, &model, &Pseudometric::Euclidean, &o).unwrap();
        let b = estimate_bp(&op2, &model, &Pseudometric::Euclidean, &o).unwrap();
        assert!((b.beta_hat - 2.0 * a.beta_hat).abs() <= 1e-12 * b.beta_hat);
    }
}
