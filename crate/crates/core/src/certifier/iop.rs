use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lrip::{lrip_ratio, sample_pair, summarize, LripEstimate, LripMode, PairRecord};
use crate::decoder::{residual_certificate, Decoder, DecoderOptions};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::UnionOfSubspaces;
use crate::rng::{derive_seed, gaussian_vec, rng_from_seed};
use crate::spaces::{MeasurementVector, Pseudometric, SignalVector};
use crate::Scalar;

/// Constants `(A, B, lambda)` of `d(x*, xhat) <= A d'(x*, S) + B |e| + lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct IopConstants<T> {
    pub a: T,
    pub b: T,
    pub lambda: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound = "T: Scalar")]
pub struct IopOptions<T> {
    pub trials: usize,
    /// `|e|` for every trial.
    pub noise_scale: T,
    /// Expected norm of the off-model perturbation of `x*`.
    pub model_error_scale: T,
    /// Uniform mode takes `d'` as the minimum over the projection, the
    /// decoded point and `candidates` random model points; non-uniform mode
    /// uses the projection only.
    pub uniform: bool,
    pub candidates: usize,
    /// Grid oracle resolution for the optimizer gap (subspace dim <= 2).
    pub grid_resolution: Option<T>,
    pub seed: u64,
}

impl<T: Scalar> Default for IopOptions<T> {
    fn default() -> Self {
        Self {
            trials: 100,
            noise_scale: T::zero(),
            model_error_scale: T::zero(),
            uniform: false,
            candidates: 16,
            grid_resolution: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct IopTrial<T: Scalar> {
    pub index: usize,
    pub x_true: SignalVector<T>,
    pub noise_norm: T,
    #[serde(with = "crate::serde_ext")]
    pub decode_dist: T,
    /// `d'(x*, S) = min d(x*, z) + B |Psi x* - Psi z|` over the candidates.
    pub model_dist: T,
    /// Upper bound on `|Psi xhat - y| - min |Psi z - y|` used in the slack.
    #[serde(with = "crate::serde_ext")]
    pub optimizer_gap: T,
    /// Floating-point allowance added to the right-hand side.
    pub roundoff: T,
    /// `lambda + (B/2) optimizer_gap + roundoff`.
    #[serde(with = "crate::serde_ext")]
    pub lambda_effective: T,
    pub decoder_converged: bool,
    pub satisfied: bool,
    pub reason: Option<String>,
}

impl<T: Scalar> IopTrial<T> {
    pub fn bound(&self, c: &IopConstants<T>) -> T {
        c.a * self.model_dist + c.b * self.noise_norm + self.lambda_effective
    }

    pub fn recheck(&self, c: &IopConstants<T>) -> bool {
        self.decode_dist <= self.bound(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct IopWitness<T: Scalar> {
    pub constants: IopConstants<T>,
    pub trials: Vec<IopTrial<T>>,
    pub satisfied: usize,
}

impl<T: Scalar> IopWitness<T> {
    pub fn all_satisfied(&self) -> bool {
        self.satisfied == self.trials.len()
    }
}

fn check_constants<T: Scalar>(c: &IopConstants<T>) -> Result<()> {
    if c.a >= T::zero() && c.b >= T::zero() && c.lambda >= T::zero() {
        Ok(())
    } else {
        Err(Error::invalid("IOP constants must be nonnegative"))
    }
}

fn roundoff<T: Scalar>(scale: T) -> T {
    T::epsilon() * T::lit(1024.0) * (T::one() + scale)
}

/// Decoder optimizer gap as an upper bound usable in the slack.
///
/// The certificate is `+inf` for non-converged runs; the residual itself is
/// still a valid upper bound on the gap there, since the optimum is >= 0.
fn usable_gap<T: Scalar, O: Decoder<T> + ?Sized>(
    result: &crate::decoder::DecodeResult<T>,
    op: &O,
    model: &UnionOfSubspaces<T>,
    y: &MeasurementVector<T>,
    grid: Option<T>,
) -> Result<T> {
    let g = residual_certificate(result, op, model, y, grid)?;
    Ok(if g.is_finite() { g.max(T::zero()) } else { result.residual })
}

/// Runs the decoder on `y = Psi(x*) + e` and checks the instance-optimality
/// inequality per trial, with `d'(x, z) = d(x, z) + B |Psi x - Psi z|`.
///
/// The slack is `lambda + (B/2) gap`: the triangle-inequality argument that
/// gives `A = 1, B = 2 alpha` charges `alpha` per unit of excess residual.
pub fn check_iop_inequality<T: Scalar, O: Decoder<T> + ?Sized>(
    op: &O,
    model: &UnionOfSubspaces<T>,
    metric: &Pseudometric<T>,
    decoder_opts: &DecoderOptions<T>,
    constants: IopConstants<T>,
    opts: &IopOptions<T>,
) -> Result<IopWitness<T>> {
    check_constants(&constants)?;
    if !(opts.noise_scale >= T::zero()) || !(opts.model_error_scale >= T::zero()) {
        return Err(Error::invalid("noise and model error scales must be nonnegative"));
    }
    Error::check_dim("check_iop: operator vs model", op.input_dim(), model.dim())?;
    metric.validate()?;
    let d = model.dim();
    let m = op.output_dim();
    let trials: Vec<IopTrial<T>> = (0..opts.trials)
        .into_par_iter()
        .map(|k| -> Result<IopTrial<T>> {
            let seed = derive_seed(opts.seed, k as u64);
            let mut rng = rng_from_seed(seed);
            let (_, base) = model.sample_with(&mut rng);
            let pert: Vec<T> = gaussian_vec(&mut rng, d);
            let pert = linalg::scale(&pert, opts.model_error_scale / T::from_usize_lossy(d).sqrt());
            let x_true = SignalVector::new(linalg::add(base.as_slice(), &pert))?;
            let raw: Vec<T> = gaussian_vec(&mut rng, 2 * m);
            let raw_norm = linalg::norm(&raw);
            let k_noise = if raw_norm > T::zero() { opts.noise_scale / raw_norm } else { T::zero() };
            let noise = MeasurementVector::new(
                (0..m).map(|j| Complex::new(raw[j] * k_noise, raw[m + j] * k_noise)).collect(),
            )?;
            let noise_norm = noise.norm();
            let psi_true = op.apply(&x_true)?;
            let y = psi_true.add(&noise)?;

            let d_prime = |z: &SignalVector<T>| -> Result<T> {
                Ok(metric.dist(&x_true, z)? + constants.b * psi_true.distance(&op.apply(z)?)?)
            };
            let projection = model.project(&x_true, metric)?.point;
            let mut model_dist = d_prime(&projection)?;

            let dec_opts = DecoderOptions { seed: derive_seed(seed, 1), ..*decoder_opts };
            let decoded = op.decode(model, &y, &dec_opts, None);
            let mut trial = IopTrial {
                index: k,
                x_true: x_true.clone(),
                noise_norm,
                decode_dist: T::infinity(),
                model_dist,
                optimizer_gap: T::infinity(),
                roundoff: T::zero(),
                lambda_effective: constants.lambda,
                decoder_converged: false,
                satisfied: false,
                reason: None,
            };
            let result = match decoded {
                Ok(r) => r,
                Err(e) => {
                    trial.reason = Some(format!("decoder failed: {e}"));
                    return Ok(trial);
                }
            };
            if opts.uniform {
                model_dist = model_dist.min(d_prime(&result.xhat)?);
                for c in 0..opts.candidates {
                    let z = model.sample_point(derive_seed(seed, 2 + c as u64));
                    model_dist = model_dist.min(d_prime(&z)?);
                }
            }
            let gap = usable_gap(&result, op, model, &y, opts.grid_resolution)?;
            trial.model_dist = model_dist;
            trial.decode_dist = metric.dist(&x_true, &result.xhat)?;
            trial.optimizer_gap = gap;
            trial.decoder_converged = result.converged;
            let base_bound = constants.a * model_dist + constants.b * noise_norm + constants.lambda;
            trial.roundoff = roundoff(base_bound + trial.decode_dist);
            trial.lambda_effective = constants.lambda + constants.b * T::lit(0.5) * gap + trial.roundoff;
            trial.satisfied = trial.recheck(&constants);
            if !result.converged {
                trial.reason = Some("decoder not converged; residual used as gap bound".into());
            }
            Ok(trial)
        })
        .collect::<Result<_>>()?;
    let satisfied = trials.iter().filter(|t| t.satisfied).count();
    Ok(IopWitness { constants, trials, satisfied })
}

/// LRIP induced by an instance-optimal decoder, checked by running the
/// decoder on `y = Psi(x')` for sampled model pairs `(x, x')`. With noise
/// `e = Psi x' - Psi x` the IOP gives `d(x, xhat) <= B |Psi x - Psi x'| +
/// lambda` and with `e = 0` it gives `d(x', xhat) <= lambda`, hence
/// `d(x, x') <= B |Psi x - Psi x'| + 2 lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct InducedLrip<T: Scalar> {
    /// Empirical LRIP over the same pairs with `eta = 2 lambda`.
    pub estimate: LripEstimate<T>,
    pub b: T,
    pub eta: T,
    /// Pairs with `d(x, x') > B |Psi x - Psi x'| + 2 lambda_eff`.
    pub lrip_violations: Vec<PairRecord<T>>,
    /// Pairs where one of the two IOP inequalities failed.
    pub iop_violations: usize,
}

#[allow(clippy::too_many_arguments)]
pub fn lrip_from_iop_witness<T: Scalar, O: Decoder<T> + ?Sized>(
    op: &O,
    model: &UnionOfSubspaces<T>,
    metric: &Pseudometric<T>,
    decoder_opts: &DecoderOptions<T>,
    b: T,
    lambda: T,
    pairs: usize,
    near_eps: Option<T>,
    seed: u64,
) -> Result<InducedLrip<T>> {
    check_constants(&IopConstants { a: T::one(), b, lambda })?;
    if pairs == 0 {
        return Err(Error::invalid("lrip_from_iop_witness needs at least one pair"));
    }
    Error::check_dim("lrip_from_iop: operator vs model", op.input_dim(), model.dim())?;
    metric.validate()?;
    let eta = T::lit(2.0) * lambda;
    let rows: Vec<(PairRecord<T>, bool, bool)> = (0..pairs)
        .into_par_iter()
        .map(|k| -> Result<_> {
            let (x, xp, near) = sample_pair(model, metric, near_eps, None, None, k, seed)?;
            let px = op.apply(&x)?;
            let y = op.apply(&xp)?;
            let gap_xx = px.distance(&y)?;
            let distance = metric.dist(&x, &xp)?;
            let dec_opts = DecoderOptions { seed: derive_seed(derive_seed(seed, k as u64), 1), ..*decoder_opts };
            let result = op.decode(model, &y, &dec_opts, None)?;
            let opt_gap = usable_gap(&result, op, model, &y, None)?;
            let lam = lambda + b * T::lit(0.5) * opt_gap + roundoff(distance + b * gap_xx + lambda);
            let iop_ok = metric.dist(&x, &result.xhat)? <= b * gap_xx + lam
                && metric.dist(&xp, &result.xhat)? <= lam;
            let lrip_ok = distance <= b * gap_xx + T::lit(2.0) * lam;
            let record = PairRecord {
                index: k,
                ratio: lrip_ratio(distance, gap_xx, eta),
                x,
                x_prime: xp,
                distance,
                measurement_gap: gap_xx,
                near,
            };
            Ok((record, iop_ok, lrip_ok))
        })
        .collect::<Result<_>>()?;
    let iop_violations = rows.iter().filter(|r| !r.1).count();
    let lrip_violations = rows.iter().filter(|r| !r.2).map(|r| r.0.clone()).collect();
    let estimate = summarize(rows.into_iter().map(|r| r.0).collect(), eta, LripMode::Uniform);
    Ok(InducedLrip {
        estimate,
        b,
        eta,
        lrip_violations,
        iop_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{LinearGaussianOperator, MeasurementOperator};

    fn x_axis() -> UnionOfSubspaces<f64> {
        UnionOfSubspaces::new(2, 1, vec![vec![1.0, 0.0]], 1.0).unwrap()
    }

    #[test]
    fn noiseless_exact_decode_needs_no_slack() {
        let op = LinearGaussianOperator::identity(2);
        let c = IopConstants { a: 0.0, b: 0.0, lambda: 0.0 };
        let w = check_iop_inequality(&op, &x_axis(), &Pseudometric::Euclidean, &DecoderOptions::default(), c, &IopOptions { trials: 20, ..IopOptions::default() }).unwrap();
        assert!(w.all_satisfied());
        assert!(w.trials.iter().all(|t| t.decode_dist == 0.0 && t.recheck(&c)));
    }

    #[test]
    fn off_model_point_example() {
        // x* = (0.3, 0.4): xhat = projection (0.3, 0), d' = 0.4 + 2 * 0.4.
        let op = LinearGaussianOperator::identity(2);
        let x = SignalVector::new(vec![0.3, 0.4]).unwrap();
        let y = op.apply(&x).unwrap();
        let r = op.decode(&x_axis(), &y, &DecoderOptions::default(), None).unwrap();
        let decode_dist = x.euclidean_distance(&r.xhat).unwrap();
        let proj = x_axis().project(&x, &Pseudometric::Euclidean).unwrap().point;
        let d_prime = x.euclidean_distance(&proj).unwrap()
            + 2.0 * y.distance(&op.apply(&proj).unwrap()).unwrap();
        assert!((decode_dist - 0.4).abs() < 1e-15);
        assert!((d_prime - 1.2).abs() < 1e-15);
    }

    #[test]
    fn perturbed_trials_satisfy_equivalence_constants() {
        let op = LinearGaussianOperator::identity(2);
        let c = IopConstants { a: 1.0, b: 2.0, lambda: 0.0 };
        let opts = IopOptions { trials: 50, noise_scale: 0.1, model_error_scale: 0.3, ..IopOptions::default() };
        let w = check_iop_inequality(&op, &x_axis(), &Pseudometric::Euclidean, &DecoderOptions::default(), c, &opts).unwrap();
        assert!(w.all_satisfied());
        assert!(w.trials.iter().all(|t| (t.noise_norm - 0.1).abs() < 1e-15));
    }

    #[test]
    fn single_point_model_has_no_violations() {
        let op = LinearGaussianOperator::identity(2);
        let point = UnionOfSubspaces::new(2, 1, vec![vec![1.0, 0.0]], 0.0).unwrap();
        let r = lrip_from_iop_witness(&op, &point, &Pseudometric::Euclidean, &DecoderOptions::default(), 1.0, 0.0, 50, None, 3).unwrap();
        assert!(r.lrip_violations.is_empty());
        assert_eq!(r.iop_violations, 0);
    }
}
