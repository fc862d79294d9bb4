use std::collections::BTreeMap;

use lrip_core::certifier::{
    check_iop_inequality, estimate_bp, estimate_concentration, estimate_lrip,
    fit_concentration_slope, lrip_from_iop_witness, recommend_m, BpOptions, IopConstants,
    IopOptions, LripOptions, SlopePoint,
};
use lrip_core::decoder::{residual_certificate, Decoder, DecoderOptions};
use lrip_core::linalg;
use lrip_core::model::UnionOfSubspaces;
use num_complex::Complex;
use lrip_core::operators::{
    LinearGaussianOperator, MeasurementOperator, Operator, RandomFourierOperator,
};
use lrip_core::rng::{derive_labeled, derive_seed, gaussian_vec, rng_from_seed, SEED_DERIVATION};
use lrip_core::spaces::{MeasurementVector, SignalVector};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{AnchorMode, Experiment, ExperimentConfig, ModelKind, OperatorChoice};
use crate::error::LabResult;
use crate::report::Series;

/// Seeds used by a run, derived from the master seed by label.
pub(crate) struct Lineage {
    experiment: u64,
    pub seeds: BTreeMap<String, u64>,
}

impl Lineage {
    fn new(cfg: &ExperimentConfig) -> Self {
        let experiment = derive_labeled(cfg.master_seed, cfg.experiment.name());
        let mut seeds = BTreeMap::new();
        seeds.insert("experiment".to_string(), experiment);
        Self { experiment, seeds }
    }

    /// Seed for `label`, unless the config pins it.
    fn seed(&mut self, label: &str, pinned: Option<u64>) -> u64 {
        let s = pinned.unwrap_or_else(|| derive_labeled(self.experiment, label));
        self.seeds.insert(label.to_string(), s);
        s
    }
}

pub(crate) struct Outcome {
    pub results: Value,
    pub series: BTreeMap<String, Series>,
}

fn build_model(cfg: &ExperimentConfig, seed: u64) -> LabResult<UnionOfSubspaces<f64>> {
    let m = &cfg.model;
    Ok(match m.kind {
        ModelKind::Random => UnionOfSubspaces::random(m.d, m.s, m.n, m.norm_bound, seed)?,
        ModelKind::KSparse => UnionOfSubspaces::k_sparse(m.d, m.s, m.norm_bound)?,
    })
}

/// Operator of size `m` for draw `draw`: seed `derive_seed(derive_seed(base, m), draw)`.
fn build_operator(cfg: &ExperimentConfig, m: usize, base: u64, draw: u64) -> LabResult<Operator<f64>> {
    let seed = derive_seed(derive_seed(base, m as u64), draw);
    let d = cfg.model.d;
    Ok(match cfg.operator.kind {
        OperatorChoice::LinearGaussian => Operator::Linear(LinearGaussianOperator::sample(m, d, seed)),
        OperatorChoice::RandomFourier => {
            Operator::Fourier(RandomFourierOperator::sample(m, d, cfg.sigma(), seed)?)
        }
        OperatorChoice::Identity => Operator::Linear(LinearGaussianOperator::identity(d)),
    })
}

fn operator_seed(cfg: &ExperimentConfig, m: usize, base: u64, draw: u64) -> Option<u64> {
    (cfg.operator.kind != OperatorChoice::Identity).then(|| derive_seed(derive_seed(base, m as u64), draw))
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn json_f64(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        json!("nan")
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn anchor(cfg: &ExperimentConfig, model: &UnionOfSubspaces<f64>, lineage: &mut Lineage) -> Option<SignalVector<f64>> {
    match cfg.certifier.anchor_mode {
        AnchorMode::Uniform => None,
        AnchorMode::Anchored => Some(model.sample_point(lineage.seed("anchor", None))),
    }
}

pub(crate) fn run_experiment(cfg: &ExperimentConfig) -> LabResult<(Outcome, BTreeMap<String, u64>)> {
    let mut lineage = Lineage::new(cfg);
    let outcome = match cfg.experiment {
        Experiment::Certify => certify(cfg, &mut lineage)?,
        Experiment::Decode => decode(cfg, &mut lineage)?,
        Experiment::IopExperiment => iop_experiment(cfg, &mut lineage)?,
        Experiment::RecommendM => recommend(cfg)?,
        Experiment::ConcentrationSweep => concentration_sweep(cfg, &mut lineage)?,
    };
    Ok((outcome, lineage.seeds))
}

pub(crate) fn seed_derivation() -> &'static str {
    SEED_DERIVATION
}

fn certify_at(
    cfg: &ExperimentConfig,
    model: &UnionOfSubspaces<f64>,
    anchor: Option<&SignalVector<f64>>,
    m: usize,
    seeds: (u64, u64, u64),
) -> LabResult<Value> {
    let c = &cfg.certifier;
    let metric = cfg.metric();
    let (op_base, lrip_seed, bp_seed) = seeds;
    let mut draws = Vec::new();
    let (mut alphas, mut betas) = (Vec::new(), Vec::new());
    for k in 0..c.operator_draws as u64 {
        let op = build_operator(cfg, m, op_base, k)?;
        let lrip = estimate_lrip(&op, model, &metric, &LripOptions {
            pairs: c.pairs,
            eta: c.eta,
            anchor: anchor.cloned(),
            near_eps: c.eps_near,
            seed: derive_seed(lrip_seed, k),
        })?;
        let bp = estimate_bp(&op, model, &metric, &BpOptions {
            pairs: c.bp_pairs.unwrap_or(c.pairs),
            scale: c.bp_scale,
            seed: derive_seed(bp_seed, k),
        })?;
        let hypotheses = match &op {
            Operator::Fourier(f) => Some(f.hypothesis_constants(model)?),
            Operator::Linear(_) => None,
        };
        alphas.push(lrip.alpha_hat);
        betas.push(bp.beta_hat);
        draws.push(json!({
            "draw": k,
            "operator_seed": operator_seed(cfg, m, op_base, k),
            "lrip": lrip,
            "bp": bp,
            "hypotheses": hypotheses,
        }));
    }
    let count = |v: &[f64], th: Option<f64>| th.map(|t| v.iter().filter(|&&a| a <= t).count());
    Ok(json!({
        "m": m,
        "draws": draws,
        "alpha_hat_median": json_f64(median(&alphas)),
        "alpha_hat_max": json_f64(alphas.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        "beta_hat_median": json_f64(median(&betas)),
        "beta_hat_max": json_f64(betas.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        "alpha_within_threshold": count(&alphas, c.alpha_threshold),
        "beta_within_threshold": count(&betas, c.beta_threshold),
        "alpha_hat": alphas.iter().map(|&a| json_f64(a)).collect::<Vec<_>>(),
        "beta_hat": betas.to_vec(),
    }))
}

fn certify(cfg: &ExperimentConfig, lineage: &mut Lineage) -> LabResult<Outcome> {
    let model = build_model(cfg, lineage.seed("model", cfg.model.seed))?;
    let seeds = (
        lineage.seed("operator", cfg.operator.seed),
        lineage.seed("lrip", None),
        lineage.seed("bp", None),
    );
    let anchor = anchor(cfg, &model, lineage);
    let base = certify_at(cfg, &model, anchor.as_ref(), cfg.m(), seeds)?;
    let mut series = BTreeMap::new();
    let mut per_draw_a = Series::new("draw", "alpha_hat");
    let mut per_draw_b = Series::new("draw", "beta_hat");
    for (k, d) in base["draws"].as_array().into_iter().flatten().enumerate() {
        per_draw_a.push(k as f64, value_f64(&d["lrip"]["alpha_hat"]));
        per_draw_b.push(k as f64, value_f64(&d["bp"]["beta_hat"]));
    }
    series.insert("alpha_hat_vs_draw".into(), per_draw_a);
    series.insert("beta_hat_vs_draw".into(), per_draw_b);
    let mut sweep = Vec::new();
    let mut sa = Series::new("m", "alpha_hat_median");
    let mut sb = Series::new("m", "beta_hat_median");
    for &m in &cfg.certifier.m_sweep {
        let r = certify_at(cfg, &model, anchor.as_ref(), m, seeds)?;
        sa.push(m as f64, value_f64(&r["alpha_hat_median"]));
        sb.push(m as f64, value_f64(&r["beta_hat_median"]));
        sweep.push(r);
    }
    series.insert("alpha_hat_vs_m".into(), sa);
    series.insert("beta_hat_vs_m".into(), sb);
    Ok(Outcome {
        results: json!({
            "certificate": "empirical",
            "mode": cfg.certifier.anchor_mode,
            "metric": cfg.metric(),
            "anchor": anchor,
            "base": base,
            "sweep": sweep,
        }),
        series,
    })
}

fn value_f64(v: &Value) -> f64 {
    match v {
        Value::Number(n) => n.as_f64().unwrap_or(f64::NAN),
        Value::String(s) if s == "inf" => f64::INFINITY,
        Value::String(s) if s == "-inf" => f64::NEG_INFINITY,
        _ => f64::NAN,
    }
}

/// `x* = model point + perturbation`, `e` complex with `|e| = noise_scale`.
fn draw_instance(
    cfg: &ExperimentConfig,
    model: &UnionOfSubspaces<f64>,
    m: usize,
    seed: u64,
) -> LabResult<(SignalVector<f64>, MeasurementVector<f64>)> {
    let c = &cfg.certifier;
    let d = model.dim();
    let mut rng = rng_from_seed(seed);
    let (_, base) = model.sample_with(&mut rng);
    let pert: Vec<f64> = gaussian_vec(&mut rng, d);
    let pert = linalg::scale(&pert, c.model_error_scale / (d as f64).sqrt());
    let x = SignalVector::new(linalg::add(base.as_slice(), &pert))?;
    let raw: Vec<f64> = gaussian_vec(&mut rng, 2 * m);
    let n = linalg::norm(&raw);
    let k = if n > 0.0 { c.noise_scale / n } else { 0.0 };
    let e = MeasurementVector::new((0..m).map(|j| Complex::new(raw[j] * k, raw[m + j] * k)).collect())?;
    Ok((x, e))
}

fn grid(cfg: &ExperimentConfig) -> Option<f64> {
    cfg.decoder.grid_oracle.enabled.then_some(cfg.decoder.grid_oracle.resolution)
}

fn decode(cfg: &ExperimentConfig, lineage: &mut Lineage) -> LabResult<Outcome> {
    let model = build_model(cfg, lineage.seed("model", cfg.model.seed))?;
    let op_base = lineage.seed("operator", cfg.operator.seed);
    let trial_seed = lineage.seed("decode", None);
    let m = cfg.m();
    let op = build_operator(cfg, m, op_base, 0)?;
    let metric = cfg.metric();
    let trials: Vec<Value> = (0..cfg.certifier.trials)
        .into_par_iter()
        .map(|k| -> LabResult<Value> {
            let seed = derive_seed(trial_seed, k as u64);
            let (x, e) = draw_instance(cfg, &model, m, seed)?;
            let y = op.apply(&x)?.add(&e)?;
            let opts = DecoderOptions { seed: derive_seed(seed, 1), ..cfg.decoder };
            let r = op.decode(&model, &y, &opts, None)?;
            let gap = residual_certificate(&r, &op, &model, &y, grid(cfg))?;
            Ok(json!({
                "trial": k,
                "x_true": x,
                "noise_norm": e.norm(),
                "decode_dist": metric.dist(&x, &r.xhat)?,
                "euclidean_error": x.euclidean_distance(&r.xhat)?,
                "optimizer_gap": json_f64(gap),
                "result": r,
            }))
        })
        .collect::<LabResult<_>>()?;
    let mut dist = Series::new("trial", "decode_dist");
    let mut res = Series::new("trial", "residual");
    for (k, t) in trials.iter().enumerate() {
        dist.push(k as f64, value_f64(&t["decode_dist"]));
        res.push(k as f64, value_f64(&t["result"]["residual"]));
    }
    let converged = trials.iter().filter(|t| t["result"]["converged"] == json!(true)).count();
    let mut series = BTreeMap::new();
    series.insert("decode_dist_vs_trial".into(), dist);
    series.insert("residual_vs_trial".into(), res);
    Ok(Outcome {
        results: json!({
            "operator_seed": operator_seed(cfg, m, op_base, 0),
            "converged": converged,
            "trials": trials,
        }),
        series,
    })
}

fn iop_experiment(cfg: &ExperimentConfig, lineage: &mut Lineage) -> LabResult<Outcome> {
    let c = &cfg.certifier;
    let model = build_model(cfg, lineage.seed("model", cfg.model.seed))?;
    let op_base = lineage.seed("operator", cfg.operator.seed);
    let lrip_seed = lineage.seed("lrip", None);
    let iop_seed = lineage.seed("iop", None);
    let induced_seed = lineage.seed("induced", None);
    let anchor = anchor(cfg, &model, lineage);
    let m = cfg.m();
    let op = build_operator(cfg, m, op_base, 0)?;
    let metric = cfg.metric();
    let lrip = estimate_lrip(&op, &model, &metric, &LripOptions {
        pairs: c.pairs,
        eta: c.eta,
        anchor,
        near_eps: c.eps_near,
        seed: lrip_seed,
    })?;
    let mut series = BTreeMap::new();
    let mut margin = Series::new("trial", "bound_minus_decode_dist");
    if !lrip.alpha_hat.is_finite() {
        series.insert("iop_margin_vs_trial".into(), margin);
        return Ok(Outcome {
            results: json!({
                "operator_seed": operator_seed(cfg, m, op_base, 0),
                "lrip": lrip,
                "skipped": "alpha_hat is infinite: the LRIP fails on a sampled pair, so no finite B exists",
            }),
            series,
        });
    }
    let constants = IopConstants { a: 1.0, b: 2.0 * lrip.alpha_hat, lambda: c.lambda };
    let witness = check_iop_inequality(&op, &model, &metric, &cfg.decoder, constants, &IopOptions {
        trials: c.trials,
        noise_scale: c.noise_scale,
        model_error_scale: c.model_error_scale,
        uniform: c.uniform_iop,
        candidates: 16,
        grid_resolution: grid(cfg),
        seed: iop_seed,
    })?;
    for t in &witness.trials {
        margin.push(t.index as f64, t.bound(&constants) - t.decode_dist);
    }
    series.insert("iop_margin_vs_trial".into(), margin);
    let induced = if c.induced_pairs > 0 {
        Some(lrip_from_iop_witness(&op, &model, &metric, &cfg.decoder, constants.b, c.lambda, c.induced_pairs, c.eps_near, induced_seed)?)
    } else {
        None
    };
    Ok(Outcome {
        results: json!({
            "operator_seed": operator_seed(cfg, m, op_base, 0),
            "lrip": lrip,
            "constants": constants,
            "satisfied": witness.satisfied,
            "trials_total": witness.trials.len(),
            "all_satisfied": witness.all_satisfied(),
            "witness": witness,
            "induced": induced,
        }),
        series,
    })
}

fn recommend(cfg: &ExperimentConfig) -> LabResult<Outcome> {
    let (c, m) = (&cfg.certifier, &cfg.model);
    let r = recommend_m(c.t, m.s, m.n, m.norm_bound, m.d, cfg.sigma(), c.rho, c.c0)?;
    Ok(Outcome {
        results: json!({
            "certificate": "theoretical-bound",
            "m": r.m,
            "value": r.value,
            "log_term_clipped": r.log_term_clipped,
            "inputs": {"t": c.t, "s": m.s, "N": m.n, "M": m.norm_bound, "d": m.d, "sigma": cfg.sigma(), "rho": c.rho, "c0": c.c0},
        }),
        series: BTreeMap::new(),
    })
}

fn concentration_sweep(cfg: &ExperimentConfig, lineage: &mut Lineage) -> LabResult<Outcome> {
    let c = &cfg.certifier;
    let metric = cfg.metric();
    let op_base = lineage.seed("operator", cfg.operator.seed);
    let conc_seed = lineage.seed("concentration", None);
    let (x, xp) = match &c.pair {
        Some((a, b)) => (SignalVector::new(a.clone())?, SignalVector::new(b.clone())?),
        None => {
            let model = build_model(cfg, lineage.seed("model", cfg.model.seed))?;
            let pair_seed = lineage.seed("pair", None);
            (model.sample_point(derive_seed(pair_seed, 0)), model.sample_point(derive_seed(pair_seed, 1)))
        }
    };
    let ms = if c.m_sweep.is_empty() { vec![cfg.m()] } else { c.m_sweep.clone() };
    let mut per_m = Vec::new();
    let mut medians_p: Vec<Vec<f64>> = Vec::new();
    let mut medians_c: Vec<Vec<f64>> = Vec::new();
    let mut series = BTreeMap::new();
    for &m in &ms {
        let mut reps = Vec::new();
        for r in 0..c.repetitions as u64 {
            let factory = |seed: u64| -> lrip_core::Result<Operator<f64>> {
                build_operator(cfg, m, op_base, seed).map_err(|e| lrip_core::Error::InvalidInput(e.to_string()))
            };
            let seed = derive_seed(derive_seed(conc_seed, m as u64), r);
            reps.push(estimate_concentration(factory, &x, &xp, &metric, c.draws, &c.t_grid, seed)?);
        }
        let p_med: Vec<f64> = (0..c.t_grid.len()).map(|i| median(&reps.iter().map(|e| e.p_hat[i]).collect::<Vec<_>>())).collect();
        let c_med: Vec<f64> = (0..c.t_grid.len()).map(|i| median(&reps.iter().map(|e| e.c_hat[i]).collect::<Vec<_>>())).collect();
        let c_low: Vec<f64> = (0..c.t_grid.len()).map(|i| median(&reps.iter().map(|e| e.c_lower[i]).collect::<Vec<_>>())).collect();
        let mut s = Series::new("t", "c_hat_median");
        for (i, &t) in c.t_grid.iter().enumerate() {
            s.push(t, c_med[i]);
        }
        if per_m.is_empty() {
            series.insert("c_hat_vs_t".into(), s.clone());
        }
        series.insert(format!("c_hat_vs_t@m={m}"), s);
        per_m.push(json!({
            "m": m,
            "p_hat_median": p_med,
            "c_hat_median": c_med.iter().map(|&v| json_f64(v)).collect::<Vec<_>>(),
            "c_lower_median": c_low,
            "repetitions": reps,
        }));
        medians_p.push(p_med);
        medians_c.push(c_med);
    }
    let mut monotone = Vec::new();
    for (i, &t) in c.t_grid.iter().enumerate() {
        let col: Vec<f64> = medians_p.iter().map(|p| p[i]).collect();
        let mut s = Series::new("m", "p_hat_median");
        for (j, &m) in ms.iter().enumerate() {
            s.push(m as f64, col[j]);
        }
        series.insert(format!("p_hat_vs_m@t={t}"), s.clone());
        if t == c.t {
            series.insert("p_hat_vs_m".into(), s);
        }
        monotone.push(json!({
            "t": t,
            "strictly_decreasing": col.windows(2).all(|w| w[1] < w[0]),
            "nonincreasing": col.windows(2).all(|w| w[1] <= w[0]),
        }));
    }
    let points: Vec<SlopePoint<f64>> = ms
        .iter()
        .enumerate()
        .flat_map(|(j, &m)| {
            let cm = &medians_c[j];
            c.t_grid.iter().enumerate().filter(|(_, &t)| t > 0.0).map(move |(i, &t)| SlopePoint { m, t, c: cm[i] })
        })
        .collect();
    let slope = fit_concentration_slope(&points).ok();
    Ok(Outcome {
        results: json!({
            "certificate": "empirical",
            "pair": [x, xp],
            "distance": metric.dist(&x, &xp)?,
            "metric": metric,
            "per_m": per_m,
            "monotone_in_m": monotone,
            "slope_fit": slope,
        }),
        series,
    })
}
