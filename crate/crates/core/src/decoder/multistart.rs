use rayon::prelude::*;

use super::{check_shapes, DecodeMethod, DecodeResult, DecoderOptions};
use crate::error::{Error, Result};
use crate::linalg::{self, clip_to_ball, Svd};
use crate::model::UnionOfSubspaces;
use crate::operators::Differentiable;
use crate::rng::{derive_seed, rng_from_seed, uniform_ball};
use crate::spaces::{MeasurementVector, Pseudometric, SignalVector};
use crate::Scalar;

struct LocalFit<T> {
    z: Vec<T>,
    residual: T,
    iters: usize,
    converged: bool,
}

/// Multi-start projected Levenberg-Marquardt decoder.
///
/// Each subspace is searched independently in its coefficient ball. Start 0
/// is the constrained Gauss-Newton step from the origin, start 1 the
/// projection of `warm_start` (when given), the rest are uniform in the ball
/// from seeds derived from `(opts.seed, subspace, start)`. Starts are added in
/// a fixed order and a later start only wins on a strictly smaller residual,
/// so the best residual is nonincreasing in `opts.restarts`.
pub fn decode_nonlinear<T: Scalar, O: Differentiable<T> + ?Sized>(
    op: &O,
    model: &UnionOfSubspaces<T>,
    y: &MeasurementVector<T>,
    opts: &DecoderOptions<T>,
    warm_start: Option<&SignalVector<T>>,
) -> Result<DecodeResult<T>> {
    check_shapes(op, model, y)?;
    if opts.restarts == 0 {
        return Err(Error::invalid("decoder needs at least one start"));
    }
    if let Some(w) = warm_start {
        Error::check_dim("decoder warm start", model.dim(), w.dim())?;
    }
    let target = y.stacked();
    let per_subspace: Vec<Result<(LocalFit<T>, usize)>> = (0..model.num_subspaces())
        .into_par_iter()
        .map(|i| best_in_subspace(op, model, i, y, &target, opts, warm_start))
        .collect();

    let mut best: Option<DecodeResult<T>> = None;
    for (i, fit) in per_subspace.into_iter().enumerate() {
        let (fit, starts) = fit?;
        if best.as_ref().is_none_or(|b| fit.residual < b.residual) {
            let mut x = model.embed(i, &fit.z);
            clip_to_ball(&mut x, model.norm_bound());
            best = Some(DecodeResult {
                xhat: SignalVector::from_vec(x),
                residual: fit.residual,
                subspace_index: i,
                optimizer_iters: fit.iters,
                restarts_used: starts,
                converged: fit.converged,
                method: DecodeMethod::MultiStart,
            });
        }
    }
    let out = best.expect("model has at least one subspace");
    if !out.residual.is_finite() {
        return Err(Error::NonFinite("decoder residual"));
    }
    Ok(out)
}

fn best_in_subspace<T: Scalar, O: Differentiable<T> + ?Sized>(
    op: &O,
    model: &UnionOfSubspaces<T>,
    i: usize,
    y: &MeasurementVector<T>,
    target: &[T],
    opts: &DecoderOptions<T>,
    warm_start: Option<&SignalVector<T>>,
) -> Result<(LocalFit<T>, usize)> {
    let s = model.subspace_dim();
    let radius = model.norm_bound();
    let sub_seed = derive_seed(opts.seed, i as u64);
    let mut best: Option<LocalFit<T>> = None;
    for k in 0..opts.restarts {
        let z0 = match (k, warm_start) {
            (0, _) => gauss_newton_from_origin(op, model, i, target)?,
            (1, Some(w)) => {
                let p = model.project(w, &Pseudometric::Euclidean)?;
                let mut z = model.coefficients(i, p.point.as_slice());
                clip_to_ball(&mut z, radius);
                z
            }
            _ => {
                let mut rng = rng_from_seed(derive_seed(sub_seed, k as u64));
                uniform_ball(&mut rng, s, radius)
            }
        };
        let fit = refine(op, model, i, y, target, z0, opts)?;
        if best.as_ref().is_none_or(|b| fit.residual < b.residual) {
            best = Some(fit);
        }
    }
    Ok((best.expect("restarts >= 1"), opts.restarts))
}

fn eval<T: Scalar, O: Differentiable<T> + ?Sized>(
    op: &O,
    model: &UnionOfSubspaces<T>,
    i: usize,
    target: &[T],
    z: &[T],
) -> Result<(SignalVector<T>, Vec<T>)> {
    let mut x = model.embed(i, z);
    clip_to_ball(&mut x, model.norm_bound());
    let x = SignalVector::from_vec(x);
    let r = linalg::sub(&op.apply(&x)?.stacked(), target);
    Ok((x, r))
}

fn gauss_newton_from_origin<T: Scalar, O: Differentiable<T> + ?Sized>(
    op: &O,
    model: &UnionOfSubspaces<T>,
    i: usize,
    target: &[T],
) -> Result<Vec<T>> {
    let s = model.subspace_dim();
    let (x0, r0) = eval(op, model, i, target, &vec![T::zero(); s])?;
    let g = op.jacobian(&x0)?.stacked_columns_times(model.basis(i), s);
    let mut z: Vec<T> = Svd::new(g).solve(&r0, T::zero()).iter().map(|&v| -v).collect();
    clip_to_ball(&mut z, model.norm_bound());
    Ok(z)
}

fn projected_gradient<T: Scalar, O: Differentiable<T> + ?Sized>(
    op: &O,
    model: &UnionOfSubspaces<T>,
    i: usize,
    x: &SignalVector<T>,
    z: &[T],
    r: &[T],
) -> Result<(T, Vec<Vec<T>>)> {
    let g_cols = op.jacobian(x)?.stacked_columns_times(model.basis(i), model.subspace_dim());
    let grad: Vec<T> = g_cols.iter().map(|c| linalg::dot(c, r)).collect();
    let mut stepped = linalg::sub(z, &grad);
    clip_to_ball(&mut stepped, model.norm_bound());
    let pg = linalg::norm(&linalg::sub(z, &stepped));
    if !pg.is_finite() {
        return Err(Error::NonFinite("decoder gradient"));
    }
    Ok((pg, g_cols))
}

/// Projected Levenberg-Marquardt on `|Psi(B z) - y|^2 / 2` over `|z| <= M`.
///
/// Near a minimum with nonzero residual the cost change drops below its
/// rounding error; there a step is also accepted if the cost does not rise
/// beyond rounding and the projected gradient shrinks.
fn refine<T: Scalar, O: Differentiable<T> + ?Sized>(
    op: &O,
    model: &UnionOfSubspaces<T>,
    i: usize,
    y: &MeasurementVector<T>,
    target: &[T],
    mut z: Vec<T>,
    opts: &DecoderOptions<T>,
) -> Result<LocalFit<T>> {
    let radius = model.norm_bound();
    let half = T::lit(0.5);
    let rounding = T::epsilon() * T::from_usize_lossy(4 * target.len().max(1));
    clip_to_ball(&mut z, radius);
    let (mut x, mut r) = eval(op, model, i, target, &z)?;
    let mut cost = half * linalg::norm_sq(&r);
    let (mut pg, mut g_cols) = projected_gradient(op, model, i, &x, &z, &r)?;
    let mut mu: Option<T> = None;
    let mut iters = 0;
    let mut converged = false;
    loop {
        if pg <= opts.gtol {
            converged = true;
            break;
        }
        if iters >= opts.max_iters {
            break;
        }
        iters += 1;
        let svd = Svd::new(std::mem::take(&mut g_cols));
        let smax = svd.singular_values().iter().copied().fold(T::zero(), T::max);
        let scale = (smax * smax).max(T::min_positive_value());
        let mut damp = mu.unwrap_or(scale * T::lit(1e-8));
        let proj = svd.project(&r);
        let mut accepted = false;
        while damp <= scale * T::lit(1e16) {
            let delta = svd.solve_projected(&proj, damp);
            let mut z_new = linalg::sub(&z, &delta);
            clip_to_ball(&mut z_new, radius);
            let (x_new, r_new) = eval(op, model, i, target, &z_new)?;
            let cost_new = half * linalg::norm_sq(&r_new);
            let take = if cost_new < cost {
                Some(projected_gradient(op, model, i, &x_new, &z_new, &r_new)?)
            } else if cost_new <= cost + rounding * cost && z_new != z {
                let (pg_new, cols) = projected_gradient(op, model, i, &x_new, &z_new, &r_new)?;
                (pg_new < pg).then_some((pg_new, cols))
            } else {
                None
            };
            if let Some((pg_new, cols)) = take {
                z = z_new;
                x = x_new;
                r = r_new;
                cost = cost_new;
                pg = pg_new;
                g_cols = cols;
                damp = (damp / T::lit(3.0)).max(scale * T::epsilon());
                accepted = true;
                break;
            }
            damp = damp * T::lit(4.0);
        }
        mu = Some(damp);
        if !accepted {
            break;
        }
    }
    Ok(LocalFit {
        residual: op.apply(&x)?.distance(y)?,
        z,
        iters,
        converged,
    })
}
