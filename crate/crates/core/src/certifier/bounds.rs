use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{covering_bound_model, covering_bound_secant, CoveringBound, UnionOfSubspaces};
use crate::operators::NonlinearLripHypotheses;
use crate::spaces::Pseudometric;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Prop1Bound<T> {
    pub rho: T,
    /// Cover radius `t / (2C)` the bound presumes.
    pub delta: T,
}

fn check_c<T: Scalar>(c: T) -> Result<()> {
    if c >= T::zero() {
        Ok(())
    } else {
        Err(Error::invalid("concentration value c must be nonnegative"))
    }
}

fn check_t<T: Scalar>(t: T) -> Result<()> {
    if t > T::zero() && t < T::one() {
        Ok(())
    } else {
        Err(Error::invalid(format!("t must lie in (0, 1), got {t}")))
    }
}

/// Uniform LRIP failure probability `min(1, N(S, d, delta) e^{-c(t/2)})`,
/// with `C` the Lipschitz constant of `Psi` on the secant set.
pub fn prop1_failure_bound<T: Scalar>(
    cover: &CoveringBound<T>,
    c_of_half_t: T,
    t: T,
    lipschitz: T,
) -> Result<Prop1Bound<T>> {
    check_c(c_of_half_t)?;
    if !(lipschitz > T::zero()) {
        return Err(Error::invalid("Lipschitz constant C must be positive"));
    }
    Ok(Prop1Bound {
        rho: (cover.log_count - c_of_half_t).exp().min(T::one()),
        delta: t / (T::lit(2.0) * lipschitz),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Prop2Bound<T> {
    pub rho: T,
    pub eps: T,
    pub delta: T,
    pub delta_prime: T,
    pub model_cover: CoveringBound<T>,
    pub secant_cover: CoveringBound<T>,
}

/// Non-uniform LRIP failure probability
/// `min(1, (N(S, d, delta) + N(S_eps, d, delta')) e^{-c(t/2)})` with the radii
/// at their caps `eps = min(eps0, t/(8 C2))`, `delta' = t/(4 C3)` and
/// `delta = (t eps^2 / (4 C1)) / (eps + M_S)`.
pub fn prop2_failure_bound<T: Scalar>(
    model: &UnionOfSubspaces<T>,
    metric: &Pseudometric<T>,
    c0: T,
    c_of_half_t: T,
    constants: &NonlinearLripHypotheses<T>,
    t: T,
) -> Result<Prop2Bound<T>> {
    check_t(t)?;
    check_c(c_of_half_t)?;
    let k = constants;
    if !(k.c1 > T::zero() && k.c2 > T::zero() && k.c3 > T::zero()) || !(k.eps0 > T::zero()) {
        return Err(Error::invalid("hypothesis constants must be positive"));
    }
    let eps = k.eps0.min(t / (T::lit(8.0) * k.c2));
    let delta_prime = t / (T::lit(4.0) * k.c3);
    let delta = (t * eps * eps / (T::lit(4.0) * k.c1)) / (eps + k.model_diameter);
    let model_cover = covering_bound_model(model, metric, delta, c0)?;
    let secant_cover = covering_bound_secant(model, metric, delta_prime, c0)?;
    let (a, b) = (model_cover.log_count, secant_cover.log_count);
    let hi = a.max(b);
    let log_total = hi + ((a - hi).exp() + (b - hi).exp()).ln();
    Ok(Prop2Bound {
        rho: (log_total - c_of_half_t).exp().min(T::one()),
        eps,
        delta,
        delta_prime,
        model_cover,
        secant_cover,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MRecommendation<T> {
    pub m: u64,
    /// Unrounded `c0 t^-2 (s ln(M d/(sigma t)) + ln N + ln(1/rho))`.
    pub value: T,
    /// `M d / (sigma t) <= 1`: the logarithm was clipped at 0.
    pub log_term_clipped: bool,
}

/// Measurement count `ceil(c0 t^-2 (s ln(M d/(sigma t)) + ln N + ln(1/rho)))`.
#[allow(clippy::too_many_arguments)]
pub fn recommend_m<T: Scalar>(
    t: T,
    s: usize,
    n: usize,
    norm_bound: T,
    d: usize,
    sigma: T,
    rho: T,
    c0: T,
) -> Result<MRecommendation<T>> {
    check_t(t)?;
    if !(rho > T::zero() && rho < T::one()) {
        return Err(Error::invalid(format!("rho must lie in (0, 1), got {rho}")));
    }
    if n == 0 || s == 0 || d == 0 {
        return Err(Error::invalid("s, N and d must be positive"));
    }
    if !(sigma > T::zero()) || !(c0 > T::zero()) || !(norm_bound > T::zero()) {
        return Err(Error::invalid("sigma, c0 and M must be positive"));
    }
    let arg = norm_bound * T::from_usize_lossy(d) / (sigma * t);
    let log_term_clipped = arg <= T::one();
    let log_term = arg.ln().max(T::zero());
    let value = c0 / (t * t)
        * (T::from_usize_lossy(s) * log_term + T::from_usize_lossy(n).ln() - rho.ln());
    let m = value
        .ceil()
        .to_u64()
        .ok_or(Error::NonFinite("recommended m"))?
        .max(1);
    Ok(MRecommendation {
        m,
        value,
        log_term_clipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CoveringMethod;

    #[test]
    fn prop1_examples() {
        let cover = CoveringBound::from_log_count(0.1, 1000f64.ln(), CoveringMethod::TheoreticalUoS);
        let b = prop1_failure_bound(&cover, 20.0, 0.5, 2.0).unwrap();
        assert!((b.rho - 2.061_153_622_438_558e-6).abs() < 1e-10);
        assert_eq!(b.delta, 0.125);
        assert_eq!(prop1_failure_bound(&cover, 0.0, 0.5, 1.0).unwrap().rho, 1.0);
        let one = CoveringBound::from_log_count(0.1, 0.0, CoveringMethod::TheoreticalUoS);
        assert_eq!(prop1_failure_bound(&one, 0.0, 0.5, 1.0).unwrap().rho, 1.0);
        assert!(prop1_failure_bound(&one, -1.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn recommend_m_examples() {
        let r = recommend_m::<f64>(0.5, 2, 5, 1.0, 20, 1.0, 0.01, 1.0).unwrap();
        assert_eq!(r.m, 55);
        assert!((r.value - 54.37).abs() < 0.01, "{}", r.value);
        assert!(!r.log_term_clipped);
        let tighter = recommend_m(0.5, 2, 5, 1.0, 20, 1.0, 0.001, 1.0).unwrap();
        assert!((tighter.value - r.value - 4.0 * 10f64.ln()).abs() < 1e-9);
        let clipped = recommend_m(0.5, 1, 1, 0.01, 2, 1.0, 0.5, 1.0).unwrap();
        assert!(clipped.log_term_clipped);
        assert!(recommend_m(1.0, 2, 5, 1.0, 20, 1.0, 0.01, 1.0).is_err());
        assert!(recommend_m(0.5, 2, 5, 1.0, 20, 1.0, 1.0, 1.0).is_err());
    }
}
