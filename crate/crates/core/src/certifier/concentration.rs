use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::MeasurementOperator;
use crate::rng::derive_seed;
use crate::spaces::{Pseudometric, SignalVector};
use crate::Scalar;

/// Empirical lower-tail probabilities of `|Psi x - Psi x'| / d(x, x')` over
/// operator draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ConcentrationEstimate<T: Scalar> {
    pub t_grid: Vec<T>,
    /// Fraction of draws with `ratio - 1 <= -t`.
    pub p_hat: Vec<T>,
    /// `-ln p_hat`, `+inf` when no failure was observed.
    #[serde(with = "crate::serde_ext::vec")]
    pub c_hat: Vec<T>,
    /// `-ln` of the Wilson upper bound on `p` (95%), finite even at zero failures.
    pub c_lower: Vec<T>,
    /// Running maximum of `c_hat` along the grid.
    #[serde(with = "crate::serde_ext::vec")]
    pub c_monotone: Vec<T>,
    /// Whether the running maximum changed any entry.
    pub regularized: bool,
    pub draws: usize,
    pub m: usize,
    pub ratio_mean: T,
}

/// Wilson score upper bound on a binomial proportion.
pub fn wilson_upper<T: Scalar>(failures: usize, n: usize, z: T) -> T {
    let n_t = T::from_usize_lossy(n);
    let p = T::from_usize_lossy(failures) / n_t;
    let z2 = z * z;
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let center = p + z2 / (two * n_t);
    let spread = z * (p * (T::one() - p) / n_t + z2 / (four * n_t * n_t)).sqrt();
    ((center + spread) / (T::one() + z2 / n_t)).min(T::one())
}

/// Estimates `P(ratio - 1 <= -t)` for each `t` from `draws` operators built
/// by `factory(derive_seed(seed, k))`.
pub fn estimate_concentration<T, O, F>(
    factory: F,
    x: &SignalVector<T>,
    x_prime: &SignalVector<T>,
    metric: &Pseudometric<T>,
    draws: usize,
    t_grid: &[T],
    seed: u64,
) -> Result<ConcentrationEstimate<T>>
where
    T: Scalar,
    O: MeasurementOperator<T>,
    F: Fn(u64) -> Result<O> + Sync,
{
    if draws < 100 {
        return Err(Error::invalid(format!("concentration needs >= 100 draws, got {draws}")));
    }
    let distance = metric.dist(x, x_prime)?;
    if !(distance > T::zero()) {
        return Err(Error::invalid("concentration pair must have positive distance"));
    }
    let draws_out: Vec<(T, usize)> = (0..draws)
        .into_par_iter()
        .map(|k| {
            let op = factory(derive_seed(seed, k as u64))?;
            let gap = op.apply(x)?.distance(&op.apply(x_prime)?)?;
            Ok((gap / distance, op.output_dim()))
        })
        .collect::<Result<_>>()?;
    let m = draws_out[0].1;
    let n = T::from_usize_lossy(draws);
    let ratio_mean = draws_out.iter().map(|r| r.0).sum::<T>() / n;
    let z = T::lit(1.96);
    let mut p_hat = Vec::with_capacity(t_grid.len());
    let mut c_hat = Vec::with_capacity(t_grid.len());
    let mut c_lower = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let failures = draws_out.iter().filter(|r| r.0 - T::one() <= -t).count();
        let p = T::from_usize_lossy(failures) / n;
        p_hat.push(p);
        c_hat.push(-p.ln());
        c_lower.push(-wilson_upper(failures, draws, z).ln());
    }
    let mut c_monotone = c_hat.clone();
    let mut regularized = false;
    for i in 1..c_monotone.len() {
        if c_monotone[i] < c_monotone[i - 1] {
            c_monotone[i] = c_monotone[i - 1];
            regularized = true;
        }
    }
    Ok(ConcentrationEstimate {
        t_grid: t_grid.to_vec(),
        p_hat,
        c_hat,
        c_lower,
        c_monotone,
        regularized,
        draws,
        m,
        ratio_mean,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SlopePoint<T> {
    pub m: usize,
    pub t: T,
    #[serde(with = "crate::serde_ext")]
    pub c: T,
}

impl<T: Scalar> SlopePoint<T> {
    /// `m t^2 / (1 + t)`.
    pub fn abscissa(&self) -> T {
        T::from_usize_lossy(self.m) * self.t * self.t / (T::one() + self.t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SlopeFit<T: Scalar> {
    /// Least-squares `k` in `c = k m t^2 / (1 + t)` over finite points.
    pub slope: T,
    pub points: Vec<SlopePoint<T>>,
    /// Every finite point lies in `[k/2, 2k] * abscissa`.
    pub within_factor_two: bool,
    pub finite_points: usize,
}

/// Fits the proportionality `c(t) ~ k m t^2/(1+t)` through the origin.
/// Infinite `c` (no observed failure) carries no slope information and is
/// left out of the fit.
pub fn fit_concentration_slope<T: Scalar>(points: &[SlopePoint<T>]) -> Result<SlopeFit<T>> {
    let finite: Vec<&SlopePoint<T>> = points.iter().filter(|p| p.c.is_finite()).collect();
    if finite.is_empty() {
        return Err(Error::invalid("slope fit needs at least one finite c"));
    }
    let sxx: T = finite.iter().map(|p| p.abscissa() * p.abscissa()).sum();
    let sxy: T = finite.iter().map(|p| p.abscissa() * p.c).sum();
    if !(sxx > T::zero()) {
        return Err(Error::invalid("slope fit needs a point with t > 0"));
    }
    let slope = sxy / sxx;
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let within_factor_two = finite.iter().all(|p| {
        let x = p.abscissa();
        p.c >= half * slope * x && p.c <= two * slope * x
    });
    Ok(SlopeFit {
        slope,
        points: points.to_vec(),
        within_factor_two,
        finite_points: finite.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::LinearGaussianOperator;

    #[test]
    fn wilson_values() {
        // Zero failures in 100 draws: upper bound z^2 / (n + z^2).
        let u: f64 = wilson_upper(0, 100, 1.96);
        assert!((u - 1.96f64.powi(2) / (100.0 + 1.96f64.powi(2))).abs() < 1e-12);
        assert!((wilson_upper::<f64>(100, 100, 1.96) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn c_hat_is_monotone_and_sentinel_at_zero() {
        let x = SignalVector::new(vec![0.5, 0.0, 0.0]).unwrap();
        let xp = SignalVector::new(vec![0.0, 0.5, 0.0]).unwrap();
        let est = estimate_concentration(
            |s| Ok(LinearGaussianOperator::<f64>::sample(8, 3, s)),
            &x,
            &xp,
            &Pseudometric::Euclidean,
            200,
            &[0.0, 0.2, 0.5, 1.0],
            5,
        )
        .unwrap();
        assert_eq!(est.m, 8);
        assert!(est.p_hat.windows(2).all(|w| w[1] <= w[0]));
        assert!(!est.regularized);
        // ratio <= 0 never happens for a Gaussian map.
        assert_eq!(est.p_hat[3], 0.0);
        assert_eq!(est.c_hat[3], f64::INFINITY);
        assert!(est.c_lower[3].is_finite());
    }

    #[test]
    fn rejects_small_or_degenerate_input() {
        let x = SignalVector::new(vec![0.5, 0.0]).unwrap();
        let f = |s| Ok(LinearGaussianOperator::<f64>::sample(4, 2, s));
        assert!(estimate_concentration(f, &x, &x, &Pseudometric::Euclidean, 100, &[0.1], 0).is_err());
        let y = SignalVector::zeros(2);
        assert!(estimate_concentration(f, &x, &y, &Pseudometric::Euclidean, 99, &[0.1], 0).is_err());
    }

    #[test]
    fn exact_line_fits_in_band() {
        let pts: Vec<SlopePoint<f64>> = [16, 64, 256]
            .iter()
            .map(|&m| SlopePoint { m, t: 0.3, c: 0.05 * m as f64 * 0.09 / 1.3 })
            .collect();
        let fit = fit_concentration_slope(&pts).unwrap();
        assert!((fit.slope - 0.05).abs() < 1e-12);
        assert!(fit.within_factor_two);
        let mut bad = pts.clone();
        bad[0].c *= 3.0;
        assert!(!fit_concentration_slope(&bad).unwrap().within_factor_two);
    }
}
