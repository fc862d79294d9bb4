use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{SecantSampler, SecantSamplerOptions, UnionOfSubspaces};
use crate::operators::MeasurementOperator;
use crate::rng::{derive_seed, rng_from_seed};
use crate::spaces::{Pseudometric, SignalVector};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LripMode {
    Uniform,
    NonUniformAnchor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LripOptions<T: Scalar> {
    pub pairs: usize,
    pub eta: T,
    /// Fixed first point for the non-uniform estimate.
    pub anchor: Option<SignalVector<T>>,
    /// Gap bound for the near stratum. `None` samples all pairs freely.
    pub near_eps: Option<T>,
    pub seed: u64,
}

impl<T: Scalar> Default for LripOptions<T> {
    fn default() -> Self {
        Self {
            pairs: 1000,
            eta: T::zero(),
            anchor: None,
            near_eps: Some(T::lit(0.1)),
            seed: 0,
        }
    }
}

/// A sampled pair with its distance, measurement gap and ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PairRecord<T: Scalar> {
    pub index: usize,
    pub x: SignalVector<T>,
    pub x_prime: SignalVector<T>,
    pub distance: T,
    pub measurement_gap: T,
    #[serde(with = "crate::serde_ext")]
    pub ratio: T,
    pub near: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LripEstimate<T: Scalar> {
    /// Max over pairs of `(d - eta)_+ / |Psi x - Psi x'|`; `+inf` if some
    /// pair with `d > eta` is collapsed.
    #[serde(with = "crate::serde_ext")]
    pub alpha_hat: T,
    pub eta: T,
    /// `1 - 1/alpha_hat`.
    #[serde(with = "crate::serde_ext")]
    pub t_hat: T,
    pub pairs_tested: usize,
    pub near_pairs: usize,
    /// Collapsed pairs (`Psi x = Psi x'` with `d > eta`).
    pub violations: usize,
    pub worst_pair: Option<PairRecord<T>>,
    pub mode: LripMode,
}

/// Ratio `(d - eta)_+ / gap`, infinite when the gap vanishes but `d > eta`.
pub(crate) fn lrip_ratio<T: Scalar>(distance: T, gap: T, eta: T) -> T {
    let num = (distance - eta).max(T::zero());
    if gap > T::zero() {
        num / gap
    } else if num > T::zero() {
        T::infinity()
    } else {
        T::zero()
    }
}

/// Draws pair `index`: even indices come from the near stratum when
/// `near_eps` is set, odd ones are independent model points.
pub(crate) fn sample_pair<T: Scalar>(
    model: &UnionOfSubspaces<T>,
    metric: &Pseudometric<T>,
    near_eps: Option<T>,
    anchored: Option<&SecantSampler<'_, T>>,
    anchor: Option<&SignalVector<T>>,
    index: usize,
    seed: u64,
) -> Result<(SignalVector<T>, SignalVector<T>, bool)> {
    let mut rng = rng_from_seed(derive_seed(seed, index as u64));
    let near = near_eps.is_some() && index.is_multiple_of(2);
    let x = match anchor {
        Some(a) => a.clone(),
        None => model.sample_with(&mut rng).1,
    };
    if near {
        let sample = match anchored {
            Some(sampler) => sampler.sample(&mut rng)?,
            None => SecantSampler::new(
                model,
                *metric,
                near_eps,
                Some(&x),
                SecantSamplerOptions::default(),
            )?
            .sample(&mut rng)?,
        };
        Ok((sample.endpoints.0, sample.endpoints.1, true))
    } else {
        // Keep the stream position independent of the stratum.
        let _: u64 = rng.random();
        Ok((x, model.sample_with(&mut rng).1, false))
    }
}

/// Empirical LRIP constant over sampled model pairs.
///
/// Uniform mode draws both points; anchored mode fixes the first point at
/// `opts.anchor` and draws the second. Half of the pairs (even indices) come
/// from the near stratum `0 < d(x, x') <= near_eps` when it is set.
pub fn estimate_lrip<T: Scalar, O: MeasurementOperator<T> + ?Sized>(
    op: &O,
    model: &UnionOfSubspaces<T>,
    metric: &Pseudometric<T>,
    opts: &LripOptions<T>,
) -> Result<LripEstimate<T>> {
    if opts.pairs == 0 {
        return Err(Error::invalid("estimate_lrip needs at least one pair"));
    }
    if !(opts.eta >= T::zero()) {
        return Err(Error::invalid("eta must be nonnegative"));
    }
    Error::check_dim("estimate_lrip: operator vs model", op.input_dim(), model.dim())?;
    metric.validate()?;
    let anchored = match &opts.anchor {
        Some(a) => Some(SecantSampler::new(
            model,
            *metric,
            opts.near_eps,
            Some(a),
            SecantSamplerOptions::default(),
        )?),
        None => None,
    };
    let records: Vec<PairRecord<T>> = (0..opts.pairs)
        .into_par_iter()
        .map(|k| {
            let (x, xp, near) = sample_pair(
                model,
                metric,
                opts.near_eps,
                anchored.as_ref(),
                opts.anchor.as_ref(),
                k,
                opts.seed,
            )?;
            let distance = metric.dist(&x, &xp)?;
            let gap = op.apply(&x)?.distance(&op.apply(&xp)?)?;
            Ok(PairRecord {
                index: k,
                ratio: lrip_ratio(distance, gap, opts.eta),
                x,
                x_prime: xp,
                distance,
                measurement_gap: gap,
                near,
            })
        })
        .collect::<Result<_>>()?;
    Ok(summarize(records, opts.eta, if opts.anchor.is_some() {
        LripMode::NonUniformAnchor
    } else {
        LripMode::Uniform
    }))
}

pub(crate) fn summarize<T: Scalar>(records: Vec<PairRecord<T>>, eta: T, mode: LripMode) -> LripEstimate<T> {
    let pairs_tested = records.len();
    let near_pairs = records.iter().filter(|r| r.near).count();
    let violations = records.iter().filter(|r| r.ratio == T::infinity()).count();
    let mut worst: Option<PairRecord<T>> = None;
    for r in records {
        if worst.as_ref().is_none_or(|w| r.ratio > w.ratio) {
            worst = Some(r);
        }
    }
    let alpha_hat = worst.as_ref().map_or(T::zero(), |w| w.ratio);
    LripEstimate {
        alpha_hat,
        eta,
        t_hat: T::one() - T::one() / alpha_hat,
        pairs_tested,
        near_pairs,
        violations,
        worst_pair: worst,
        mode,
    }
}
