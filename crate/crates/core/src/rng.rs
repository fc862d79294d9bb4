//! Seed lineage and sampling helpers.
//!
//! Every random quantity is drawn from a ChaCha8 stream whose 64-bit seed is
//! derived from a parent seed with a splitmix64 counter:
//!
//! `child(parent, i) = mix(parent + (i + 1) * 0x9E3779B97F4A7C15)`
//!
//! where `mix` is the splitmix64 finalizer. Work items keyed by index therefore
//! draw from disjoint, reproducible streams regardless of the order in which
//! they are evaluated.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::Scalar;

pub type SeedRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Human-readable description of [`derive_seed`], echoed into reports.
pub const SEED_DERIVATION: &str =
    "splitmix64 counter: child = mix(parent + (index + 1) * 0x9E3779B97F4A7C15)";

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `index`-th child stream of `parent`.
#[inline]
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    mix(parent.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Seed of a named child stream (FNV-1a of the label, then [`derive_seed`]).
pub fn derive_labeled(parent: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    derive_seed(parent, h)
}

pub fn rng_from_seed(seed: u64) -> SeedRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[inline]
pub fn standard_normal<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> T {
    let z: f64 = rng.sample(StandardNormal);
    T::lit(z)
}

/// Uniform draw from the half-open interval (0, 1].
#[inline]
pub fn uniform_open0<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> T {
    let u: f64 = rng.random::<f64>();
    T::lit(1.0 - u)
}

pub fn gaussian_vec<T: Scalar, R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<T> {
    (0..n).map(|_| standard_normal(rng)).collect()
}

/// Uniformly distributed unit vector in `R^n` (n >= 1).
pub fn unit_sphere<T: Scalar, R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<T> {
    loop {
        let mut v = gaussian_vec::<T, R>(rng, n);
        let norm = crate::linalg::norm(&v);
        if norm > T::zero() && norm.is_finite() {
            v.iter_mut().for_each(|c| *c = *c / norm);
            return v;
        }
    }
}

/// Uniform point in the Euclidean ball of radius `radius` in `R^n`.
pub fn uniform_ball<T: Scalar, R: Rng + ?Sized>(rng: &mut R, n: usize, radius: T) -> Vec<T> {
    let mut v = unit_sphere::<T, R>(rng, n);
    let u: T = uniform_open0(rng);
    let r = radius * u.powf(T::one() / T::from_usize_lossy(n));
    v.iter_mut().for_each(|c| *c = *c * r);
    v
}
