//! Small dense helpers. Problem sizes here are desk scale (d and s in the
//! tens at most), so everything is plain `Vec` storage.

use crate::error::{Error, Result};
use crate::Scalar;

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub fn norm_sq<T: Scalar>(a: &[T]) -> T {
    dot(a, a)
}

#[inline]
pub fn norm<T: Scalar>(a: &[T]) -> T {
    norm_sq(a).sqrt()
}

pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn add<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

pub fn scale<T: Scalar>(a: &[T], k: T) -> Vec<T> {
    a.iter().map(|&x| x * k).collect()
}

/// Scales `v` into the closed ball of radius `radius` so that `norm(v) <= radius`
/// holds exactly in floating point.
pub fn clip_to_ball<T: Scalar>(v: &mut [T], radius: T) {
    let mut n = norm(v);
    if n <= radius {
        return;
    }
    let mut k = radius / n;
    loop {
        v.iter_mut().for_each(|c| *c = *c * k);
        n = norm(v);
        if n <= radius {
            return;
        }
        k = T::one() - T::epsilon() * T::lit(4.0);
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        Error::check_dim("matrix data", rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            Error::check_dim("matrix row", c, row.len())?;
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: r,
            cols: c,
            data,
        })
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.cols.max(1)).map(<[T]>::to_vec).collect()
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.rows).map(|r| dot(self.row(r), v)).collect()
    }

    pub fn scaled(&self, k: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * k).collect(),
        }
    }
}

/// Modified Gram-Schmidt with one reorthogonalization pass. Fails when the
/// columns are numerically dependent.
pub fn orthonormalize<T: Scalar>(cols: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
    let mut out: Vec<Vec<T>> = Vec::with_capacity(cols.len());
    for col in cols {
        let mut v = col.clone();
        let original = norm(&v);
        for _ in 0..2 {
            for q in &out {
                let p = dot(q, &v);
                v.iter_mut().zip(q).for_each(|(a, &b)| *a = *a - p * b);
            }
        }
        let n = norm(&v);
        if !(n > T::lit(1e-8) * original.max(T::min_positive_value())) {
            return Err(Error::invalid("basis columns are linearly dependent"));
        }
        v.iter_mut().for_each(|a| *a = *a / n);
        out.push(v);
    }
    Ok(out)
}

/// Thin SVD `G = U diag(sigma) V^T` by one-sided (Hestenes) Jacobi rotations,
/// stored as the rotated columns `G V = U diag(sigma)` together with `V`.
///
/// Solves the damped least-squares family `min ||G z - b||^2 + mu ||z||^2`,
/// whose solution is `z(mu) = sum_k (g_k . b) / (sigma_k^2 + mu) v_k`.
/// Directions with `sigma_k` below the rank cutoff are dropped, which yields
/// the minimum-norm solution at `mu = 0`.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    rotated: Vec<Vec<T>>,
    sigma: Vec<T>,
    v: Vec<Vec<T>>,
    cutoff: T,
}

impl<T: Scalar> Svd<T> {
    /// `columns[k]` is the k-th column of `G` (all of equal length).
    pub fn new(columns: Vec<Vec<T>>) -> Self {
        let c = columns.len();
        let r = columns.first().map_or(0, Vec::len);
        let mut g = columns;
        let mut v: Vec<Vec<T>> = (0..c)
            .map(|k| {
                let mut e = vec![T::zero(); c];
                e[k] = T::one();
                e
            })
            .collect();
        let tol = T::epsilon();
        for _sweep in 0..80 {
            let mut rotated = false;
            for p in 0..c {
                for q in (p + 1)..c {
                    let alpha = norm_sq(&g[p]);
                    let beta = norm_sq(&g[q]);
                    let gamma = dot(&g[p], &g[q]);
                    if gamma == T::zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                    let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                    let cs = T::one() / (T::one() + t * t).sqrt();
                    let sn = cs * t;
                    rotate(&mut g, p, q, cs, sn);
                    rotate(&mut v, p, q, cs, sn);
                }
            }
            if !rotated {
                break;
            }
        }
        let sigma: Vec<T> = g.iter().map(|col| norm(col)).collect();
        let smax = sigma.iter().copied().fold(T::zero(), T::max);
        let cutoff = smax * T::epsilon() * T::from_usize_lossy(r.max(c).max(1)) * T::lit(16.0);
        Self {
            rotated: g,
            sigma,
            v,
            cutoff,
        }
    }

    pub fn singular_values(&self) -> &[T] {
        &self.sigma
    }

    /// Projections `g_k . b` of the right-hand side on the rotated columns.
    pub fn project(&self, b: &[T]) -> Vec<T> {
        self.rotated.iter().map(|g| dot(g, b)).collect()
    }

    pub fn solve_projected(&self, proj: &[T], mu: T) -> Vec<T> {
        let c = self.v.len();
        let mut z = vec![T::zero(); c];
        for k in 0..c {
            if self.sigma[k] <= self.cutoff {
                continue;
            }
            let w = proj[k] / (self.sigma[k] * self.sigma[k] + mu);
            z.iter_mut().zip(&self.v[k]).for_each(|(a, &b)| *a = *a + w * b);
        }
        z
    }

    pub fn solve(&self, b: &[T], mu: T) -> Vec<T> {
        self.solve_projected(&self.project(b), mu)
    }
}

fn rotate<T: Scalar>(cols: &mut [Vec<T>], p: usize, q: usize, cs: T, sn: T) {
    let (lo, hi) = cols.split_at_mut(q);
    let (a, b) = (&mut lo[p], &mut hi[0]);
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xp, yq) = (*x, *y);
        *x = cs * xp - sn * yq;
        *y = sn * xp + cs * yq;
    }
}
