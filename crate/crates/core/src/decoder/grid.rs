use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::check_shapes;
use crate::error::{Error, Result};
use crate::linalg::clip_to_ball;
use crate::model::UnionOfSubspaces;
use crate::operators::MeasurementOperator;
use crate::spaces::{MeasurementVector, SignalVector};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GridMinimum<T: Scalar> {
    pub point: SignalVector<T>,
    pub residual: T,
    pub subspace: usize,
    pub evaluations: usize,
}

/// Brute-force `min |Psi(x) - y|` over a coefficient grid of spacing
/// `resolution` in every `S_i ∩ B_M`. Only for subspace dimension 1 or 2.
pub fn grid_minimum<T: Scalar, O: MeasurementOperator<T> + ?Sized>(
    op: &O,
    model: &UnionOfSubspaces<T>,
    y: &MeasurementVector<T>,
    resolution: T,
) -> Result<GridMinimum<T>> {
    check_shapes(op, model, y)?;
    let s = model.subspace_dim();
    if s > 2 {
        return Err(Error::invalid(format!(
            "grid oracle supports subspace dimension <= 2, got {s}"
        )));
    }
    if !(resolution > T::zero()) || !resolution.is_finite() {
        return Err(Error::invalid("grid resolution must be positive"));
    }
    let radius = model.norm_bound();
    let steps = (radius / resolution).floor().to_i64().unwrap_or(0);
    let mut coeffs: Vec<Vec<T>> = Vec::new();
    let at = |k: i64| T::from_i64(k).expect("grid index") * resolution;
    if s == 1 {
        coeffs.extend((-steps..=steps).map(|k| vec![at(k)]));
        coeffs.push(vec![-radius]);
        coeffs.push(vec![radius]);
    } else {
        for a in -steps..=steps {
            for b in -steps..=steps {
                let z = vec![at(a), at(b)];
                if z[0] * z[0] + z[1] * z[1] <= radius * radius {
                    coeffs.push(z);
                }
            }
        }
        // Boundary circle at the same spacing.
        let n = (T::lit(2.0) * T::PI() * radius / resolution).ceil().to_usize().unwrap_or(0).max(8);
        for k in 0..n {
            let th = T::lit(2.0) * T::PI() * T::from_usize_lossy(k) / T::from_usize_lossy(n);
            coeffs.push(vec![radius * th.cos(), radius * th.sin()]);
        }
    }

    let mut best: Option<GridMinimum<T>> = None;
    let mut evaluations = 0;
    for i in 0..model.num_subspaces() {
        let found = coeffs
            .par_iter()
            .enumerate()
            .map(|(idx, z)| -> Result<(T, usize)> {
                let mut x = model.embed(i, z);
                clip_to_ball(&mut x, radius);
                Ok((op.apply(&SignalVector::from_vec(x))?.distance(y)?, idx))
            })
            .try_reduce_with(|a, b| Ok(if (b.0, b.1) < (a.0, a.1) { b } else { a }))
            .expect("grid is nonempty")?;
        evaluations += coeffs.len();
        if best.as_ref().is_none_or(|b| found.0 < b.residual) {
            let mut x = model.embed(i, &coeffs[found.1]);
            clip_to_ball(&mut x, radius);
            best = Some(GridMinimum {
                point: SignalVector::from_vec(x),
                residual: found.0,
                subspace: i,
                evaluations: 0,
            });
        }
    }
    let mut best = best.expect("model has at least one subspace");
    best.evaluations = evaluations;
    Ok(best)
}
