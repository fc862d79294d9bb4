//! Union-of-subspaces model sets, secant sampling and covering numbers.

mod covering;
mod secant;

pub use covering::{
    covering_bound_model, covering_bound_secant, greedy_cover, CoveringBound, CoveringMethod,
    GreedyCover,
};
pub use secant::{sample_secant, SecantSample, SecantSampler, SecantSamplerOptions};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, clip_to_ball};
use crate::rng::{self, rng_from_seed};
use crate::spaces::{Pseudometric, SignalVector};
use crate::Scalar;

/// `N` subspaces of dimension `s` in `R^d`, each intersected with the
/// Euclidean ball of radius `M`. Bases are stored column-major with
/// orthonormal columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "ModelRepr<T>",
    into = "ModelRepr<T>",
    bound = "T: Scalar"
)]
pub struct UnionOfSubspaces<T: Scalar> {
    d: usize,
    s: usize,
    bases: Vec<Vec<T>>,
    norm_bound: T,
}

/// Wire format: `{d, s, N, M, bases: [[column-major reals]]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct ModelRepr<T> {
    d: usize,
    s: usize,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "M")]
    m: T,
    bases: Vec<Vec<T>>,
}

impl<T: Scalar> TryFrom<ModelRepr<T>> for UnionOfSubspaces<T> {
    type Error = Error;
    fn try_from(r: ModelRepr<T>) -> Result<Self> {
        Error::check_dim("model N", r.n, r.bases.len())?;
        Self::new(r.d, r.s, r.bases, r.m)
    }
}

impl<T: Scalar> From<UnionOfSubspaces<T>> for ModelRepr<T> {
    fn from(m: UnionOfSubspaces<T>) -> Self {
        ModelRepr {
            d: m.d,
            s: m.s,
            n: m.bases.len(),
            m: m.norm_bound,
            bases: m.bases,
        }
    }
}

/// Nearest model point to a signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection<T: Scalar> {
    pub point: SignalVector<T>,
    pub subspace: usize,
    pub distance: T,
}

fn orthonormality_tolerance<T: Scalar>() -> T {
    T::lit(1e-10).max(T::epsilon() * T::lit(64.0))
}

impl<T: Scalar> UnionOfSubspaces<T> {
    /// Validates column-major orthonormal bases (`B^T B = I` within 1e-10).
    pub fn new(d: usize, s: usize, bases: Vec<Vec<T>>, norm_bound: T) -> Result<Self> {
        if bases.is_empty() {
            return Err(Error::invalid("model needs at least one subspace"));
        }
        if s == 0 || s > d {
            return Err(Error::invalid(format!(
                "subspace dimension s={s} must satisfy 1 <= s <= d={d}"
            )));
        }
        // M = 0 is allowed: the model is the single point {0}.
        if !(norm_bound >= T::zero()) || !norm_bound.is_finite() {
            return Err(Error::invalid("norm bound M must be nonnegative and finite"));
        }
        let tol = orthonormality_tolerance::<T>();
        for (i, b) in bases.iter().enumerate() {
            Error::check_dim("basis length d*s", d * s, b.len())?;
            if b.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("model basis"));
            }
            for p in 0..s {
                for q in p..s {
                    let g = linalg::dot(&b[p * d..(p + 1) * d], &b[q * d..(q + 1) * d]);
                    let target = if p == q { T::one() } else { T::zero() };
                    if (g - target).abs() > tol {
                        return Err(Error::invalid(format!(
                            "basis {i} is not orthonormal (entry ({p},{q}) of B^T B = {g})"
                        )));
                    }
                }
            }
        }
        Ok(Self {
            d,
            s,
            bases,
            norm_bound,
        })
    }

    /// Orthonormalizes each list of spanning columns.
    pub fn from_spanning(d: usize, spanning: &[Vec<Vec<T>>], norm_bound: T) -> Result<Self> {
        let s = spanning.first().map_or(0, Vec::len);
        let mut bases = Vec::with_capacity(spanning.len());
        for cols in spanning {
            Error::check_dim("spanning set size", s, cols.len())?;
            for c in cols {
                Error::check_dim("spanning column", d, c.len())?;
            }
            bases.push(linalg::orthonormalize(cols)?.concat());
        }
        Self::new(d, s, bases, norm_bound)
    }

    /// `n` subspaces spanned by i.i.d. Gaussian columns.
    pub fn random(d: usize, s: usize, n: usize, norm_bound: T, seed: u64) -> Result<Self> {
        let mut rng = rng_from_seed(seed);
        let spanning: Vec<Vec<Vec<T>>> = (0..n)
            .map(|_| (0..s).map(|_| rng::gaussian_vec(&mut rng, d)).collect())
            .collect();
        Self::from_spanning(d, &spanning, norm_bound)
    }

    /// All `k`-sparse vectors of `R^d` in the ball: one coordinate subspace per support.
    pub fn k_sparse(d: usize, k: usize, norm_bound: T) -> Result<Self> {
        if k == 0 || k > d {
            return Err(Error::invalid("sparsity must satisfy 1 <= k <= d"));
        }
        let mut bases = Vec::new();
        let mut support: Vec<usize> = (0..k).collect();
        loop {
            let mut b = vec![T::zero(); d * k];
            for (col, &idx) in support.iter().enumerate() {
                b[col * d + idx] = T::one();
            }
            bases.push(b);
            // next combination in lexicographic order
            let mut i = k;
            while i > 0 && support[i - 1] == d - k + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            support[i - 1] += 1;
            for j in i..k {
                support[j] = support[j - 1] + 1;
            }
        }
        Self::new(d, k, bases, norm_bound)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn subspace_dim(&self) -> usize {
        self.s
    }

    pub fn num_subspaces(&self) -> usize {
        self.bases.len()
    }

    pub fn norm_bound(&self) -> T {
        self.norm_bound
    }

    /// Column-major `d x s` basis of subspace `i`.
    pub fn basis(&self, i: usize) -> &[T] {
        &self.bases[i]
    }

    pub fn basis_column(&self, i: usize, k: usize) -> &[T] {
        &self.bases[i][k * self.d..(k + 1) * self.d]
    }

    /// `B_i^T x`.
    pub fn coefficients(&self, i: usize, x: &[T]) -> Vec<T> {
        (0..self.s)
            .map(|k| linalg::dot(self.basis_column(i, k), x))
            .collect()
    }

    /// `B_i z`.
    pub fn embed(&self, i: usize, z: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.d];
        for (k, &zk) in z.iter().enumerate() {
            out.iter_mut()
                .zip(self.basis_column(i, k))
                .for_each(|(o, &b)| *o = *o + zk * b);
        }
        out
    }

    /// Uniform point of `S_i ∩ B_M`.
    pub fn sample_in_subspace<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> SignalVector<T> {
        let z = rng::uniform_ball(rng, self.s, self.norm_bound);
        let mut x = self.embed(i, &z);
        clip_to_ball(&mut x, self.norm_bound);
        SignalVector::from_vec(x)
    }

    /// Uniform subspace index, then a uniform point of that subspace's ball.
    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, SignalVector<T>) {
        let i = rng.random_range(0..self.bases.len());
        (i, self.sample_in_subspace(i, rng))
    }

    pub fn sample_point(&self, seed: u64) -> SignalVector<T> {
        self.sample_with(&mut rng_from_seed(seed)).1
    }

    /// `min_i |x - B_i B_i^T x|`.
    pub fn membership_residual(&self, x: &SignalVector<T>) -> Result<T> {
        Error::check_dim("model membership", self.d, x.dim())?;
        Ok((0..self.bases.len())
            .map(|i| {
                let p = self.embed(i, &self.coefficients(i, x.as_slice()));
                linalg::norm(&linalg::sub(x.as_slice(), &p))
            })
            .fold(T::infinity(), T::min))
    }

    pub fn contains(&self, x: &SignalVector<T>, tol: T) -> bool {
        x.dim() == self.d
            && x.norm() <= self.norm_bound + tol
            && self.membership_residual(x).is_ok_and(|r| r <= tol)
    }

    /// Clipped orthogonal projection on `S_i ∩ B_M`, as coefficients.
    pub(crate) fn project_coefficients(&self, i: usize, x: &[T]) -> Vec<T> {
        let mut z = self.coefficients(i, x);
        clip_to_ball(&mut z, self.norm_bound);
        z
    }

    /// Best clipped orthogonal projection over subspaces, ties to the lowest
    /// index. Both metrics are nondecreasing in the Euclidean gap, so the
    /// Euclidean projection on each `S_i ∩ B_M` is also metric-optimal.
    pub fn project(&self, x: &SignalVector<T>, metric: &Pseudometric<T>) -> Result<Projection<T>> {
        Error::check_dim("model projection", self.d, x.dim())?;
        let mut best: Option<Projection<T>> = None;
        for i in 0..self.bases.len() {
            let mut p = self.embed(i, &self.project_coefficients(i, x.as_slice()));
            clip_to_ball(&mut p, self.norm_bound);
            let distance = metric.dist_slices(x.as_slice(), &p);
            if best.as_ref().is_none_or(|b| distance < b.distance) {
                best = Some(Projection {
                    point: SignalVector::from_vec(p),
                    subspace: i,
                    distance,
                });
            }
        }
        Ok(best.expect("model has at least one subspace"))
    }

    /// Largest metric distance between two model points. Every subspace
    /// contains antipodal points of norm `M`, so this is the ball diameter.
    pub fn diameter(&self, metric: &Pseudometric<T>) -> T {
        metric.ball_diameter(self.norm_bound)
    }
}

pub fn sample_model_point<T: Scalar>(model: &UnionOfSubspaces<T>, seed: u64) -> SignalVector<T> {
    model.sample_point(seed)
}

pub fn project_to_model<T: Scalar>(
    model: &UnionOfSubspaces<T>,
    x: &SignalVector<T>,
    metric: &Pseudometric<T>,
) -> Result<SignalVector<T>> {
    model.project(x, metric).map(|p| p.point)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axes2() -> UnionOfSubspaces<f64> {
        UnionOfSubspaces::k_sparse(2, 1, 1.0).unwrap()
    }

    fn sv(v: &[f64]) -> SignalVector<f64> {
        SignalVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn construction_validates() {
        assert!(UnionOfSubspaces::new(2, 1, vec![vec![1.0, 1.0]], 1.0).is_err());
        assert!(UnionOfSubspaces::<f64>::new(2, 1, vec![], 1.0).is_err());
        assert!(UnionOfSubspaces::new(2, 3, vec![vec![0.0; 6]], 1.0).is_err());
        assert!(UnionOfSubspaces::new(2, 1, vec![vec![1.0, 0.0]], -1.0).is_err());
        assert!(UnionOfSubspaces::new(2, 1, vec![vec![1.0, 0.0]], 0.0).is_ok());
        let m = UnionOfSubspaces::<f64>::random(5, 2, 3, 1.0, 9).unwrap();
        assert_eq!((m.dim(), m.subspace_dim(), m.num_subspaces()), (5, 2, 3));
    }

    #[test]
    fn k_sparse_enumerates_supports() {
        let m = UnionOfSubspaces::<f64>::k_sparse(5, 2, 1.0).unwrap();
        assert_eq!(m.num_subspaces(), 10);
    }

    #[test]
    fn x_axis_samples_lie_on_axis_inside_ball() {
        let m = UnionOfSubspaces::<f64>::new(2, 1, vec![vec![1.0, 0.0]], 1.0).unwrap();
        let mut rng = rng_from_seed(11);
        for _ in 0..10_000 {
            let (_, p) = m.sample_with(&mut rng);
            assert_eq!(p[1], 0.0);
            assert!(p[0].abs() <= 1.0);
        }
    }

    #[test]
    fn samples_are_members() {
        let m = UnionOfSubspaces::<f64>::random(6, 2, 4, 1.5, 1).unwrap();
        let mut rng = rng_from_seed(2);
        let mut max_norm: f64 = 0.0;
        for _ in 0..10_000 {
            let (_, p) = m.sample_with(&mut rng);
            assert!(m.membership_residual(&p).unwrap() <= 1e-10);
            max_norm = max_norm.max(p.norm());
        }
        assert!(max_norm <= 1.5);
    }

    #[test]
    fn projection_examples() {
        let m = axes2();
        let e = Pseudometric::Euclidean;
        let p = m.project(&sv(&[0.3, 0.4]), &e).unwrap();
        assert_eq!(p.point, sv(&[0.0, 0.4]));
        assert_eq!(p.subspace, 1);
        let x_axis = UnionOfSubspaces::new(2, 1, vec![vec![1.0, 0.0]], 1.0).unwrap();
        assert_eq!(project_to_model(&x_axis, &sv(&[2.0, 0.0]), &e).unwrap(), sv(&[1.0, 0.0]));
        let inside = sv(&[0.0, -0.25]);
        assert_eq!(project_to_model(&m, &inside, &e).unwrap(), inside);
    }

    #[test]
    fn projection_ties_go_to_lowest_index() {
        let p = axes2().project(&sv(&[0.5, 0.5]), &Pseudometric::Euclidean).unwrap();
        assert_eq!(p.subspace, 0);
        assert_eq!(p.point, sv(&[0.5, 0.0]));
    }

    #[test]
    fn model_json_roundtrip() {
        let m = UnionOfSubspaces::<f64>::random(3, 2, 2, 1.0, 5).unwrap();
        let js = serde_json::to_value(&m).unwrap();
        assert_eq!(js["N"], 2);
        assert_eq!(js["bases"][0].as_array().unwrap().len(), 6);
        let back: UnionOfSubspaces<f64> = serde_json::from_value(js).unwrap();
        assert_eq!(back, m);
        let bad = serde_json::json!({"d": 2, "s": 1, "N": 2, "M": 1.0, "bases": [[1.0, 0.0]]});
        assert!(serde_json::from_value::<UnionOfSubspaces<f64>>(bad).is_err());
    }
}
