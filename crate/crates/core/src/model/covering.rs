use serde::{Deserialize, Serialize};

use super::UnionOfSubspaces;
use crate::error::{Error, Result};
use crate::spaces::{Pseudometric, SignalVector};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoveringMethod {
    TheoreticalUoS,
    TheoreticalSecant,
    GreedyOracle,
}

/// Upper bound on the number of `radius`-balls needed to cover a set,
/// stored on log scale since the counts overflow quickly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CoveringBound<T> {
    pub radius: T,
    pub log_count: T,
    pub method: CoveringMethod,
}

impl<T: Scalar> CoveringBound<T> {
    pub fn count(&self) -> T {
        self.log_count.exp()
    }

    /// Bound with a given count, for calculators fed by external numbers.
    pub fn from_log_count(radius: T, log_count: T, method: CoveringMethod) -> Self {
        Self {
            radius,
            log_count: log_count.max(T::zero()),
            method,
        }
    }
}

fn check_radius<T: Scalar>(delta: T) -> Result<()> {
    if delta > T::zero() {
        Ok(())
    } else {
        Err(Error::invalid("covering radius delta must be positive"))
    }
}

/// `N(model, d, delta) <= N (c0 L M / delta)^s`: a union bound over the
/// subspaces, each ball `S_i ∩ B_M` covered in the Euclidean norm at radius
/// `delta / L`.
pub fn covering_bound_model<T: Scalar>(
    model: &UnionOfSubspaces<T>,
    metric: &Pseudometric<T>,
    delta: T,
    c0: T,
) -> Result<CoveringBound<T>> {
    check_radius(delta)?;
    let m = model.norm_bound();
    let log_count = if delta >= model.diameter(metric) {
        T::zero()
    } else {
        let (_, lip) = metric.norm_equivalence(m)?;
        let n = T::from_usize_lossy(model.num_subspaces());
        n.ln() + T::from_usize_lossy(model.subspace_dim()) * (c0 * lip * m / delta).ln()
    };
    Ok(CoveringBound::from_log_count(
        delta,
        log_count,
        CoveringMethod::TheoreticalUoS,
    ))
}

/// `N(S_eps, d, delta) <= N^2 (c0 L / (l delta))^{2s}`: normalized secants lie
/// in the `N^2` sums `S_i + S_j` (dimension at most `2s`) and have Euclidean
/// norm at most `1 / l`.
pub fn covering_bound_secant<T: Scalar>(
    model: &UnionOfSubspaces<T>,
    metric: &Pseudometric<T>,
    delta: T,
    c0: T,
) -> Result<CoveringBound<T>> {
    check_radius(delta)?;
    let (lower, lip) = metric.norm_equivalence(model.norm_bound())?;
    let radius = T::one() / lower;
    let log_count = if delta >= metric.ball_diameter(radius) {
        T::zero()
    } else {
        let n = T::from_usize_lossy(model.num_subspaces());
        let two_s = T::lit(2.0) * T::from_usize_lossy(model.subspace_dim());
        T::lit(2.0) * n.ln() + two_s * (c0 * lip * radius / delta).ln()
    };
    Ok(CoveringBound::from_log_count(
        delta,
        log_count,
        CoveringMethod::TheoreticalSecant,
    ))
}

/// Farthest-point cover of a finite sample.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyCover<T> {
    /// Indices into the input, in selection order.
    pub centers: Vec<usize>,
    pub bound: CoveringBound<T>,
    /// Largest distance from a point to its nearest center.
    pub achieved_radius: T,
}

/// Farthest-point traversal: repeatedly promote the point farthest from the
/// current centers until every point is within `delta`. Centers are pairwise
/// more than `delta` apart, so the count is within a factor of the optimal
/// cover of the sample at radius `delta / 2`.
pub fn greedy_cover<T: Scalar>(
    points: &[SignalVector<T>],
    metric: &Pseudometric<T>,
    delta: T,
) -> Result<GreedyCover<T>> {
    check_radius(delta)?;
    let first = points
        .first()
        .ok_or_else(|| Error::invalid("greedy cover needs at least one point"))?;
    for p in points {
        Error::check_dim("greedy cover point", first.dim(), p.dim())?;
    }
    let mut centers = vec![0usize];
    let mut nearest: Vec<T> = points
        .iter()
        .map(|p| metric.dist_slices(p.as_slice(), first.as_slice()))
        .collect();
    loop {
        let (far, &far_dist) = nearest
            .iter()
            .enumerate()
            .fold((0, &T::neg_infinity()), |acc, (i, d)| if *d > *acc.1 { (i, d) } else { acc });
        if far_dist <= delta {
            break;
        }
        centers.push(far);
        let c = points[far].as_slice();
        for (p, best) in points.iter().zip(nearest.iter_mut()) {
            *best = best.min(metric.dist_slices(p.as_slice(), c));
        }
    }
    let achieved_radius = nearest.iter().copied().fold(T::zero(), T::max);
    Ok(GreedyCover {
        bound: CoveringBound::from_log_count(
            delta,
            T::from_usize_lossy(centers.len()).ln(),
            CoveringMethod::GreedyOracle,
        ),
        centers,
        achieved_radius,
    })
}
