//! Registry of runnable experiments: default parameters, default
//! thresholds, and the code that runs each one and judges its report.

use anyhow::{anyhow, Context, Result};
use maxlab_core::counterexample_suite::{
    bounded_sum_probe, cauchy_increment, measure_modulated_divergence, measure_sharpness_rates, BoundedSumConfig, BoundedSumReport,
    GrowthReport, ModulatedFamilySpec, SharpnessFamilySpec,
};
use maxlab_core::inequality_lab::{
    check_embedding, check_fefferman_stein, check_franke, check_lemma_pointwise, check_local_maximal, check_multiplier,
    check_peetre_majorization, check_sub_inequality, fefferman_stein_violation, lemma_epsilon_probe, EmbeddingConfig,
    FeffermanSteinConfig, FrankeConfig, LocalConfig, LocalOperator, MultiplierConfig, PointwiseConfig, RatioReport, SubConfig,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const VERIFY_CHECKS: &[&str] = &[
    "fefferman-stein",
    "fefferman-stein-violation",
    "peetre-majorization",
    "lemma-pointwise",
    "lemma-epsilon",
    "local-scale-limited",
    "local-peetre",
    "embedding",
    "franke",
    "sub-inequality",
    "multiplier",
];

pub const COUNTEREXAMPLES: &[&str] = &["bounded-sum", "modulated", "sharpness"];

/// One threshold comparison recorded in a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCheck {
    pub name: String,
    pub value: f64,
    pub relation: String,
    pub limit: f64,
    pub pass: bool,
}

impl ThresholdCheck {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, relation: "<=".into(), limit, pass: value <= limit }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, relation: ">=".into(), limit, pass: value >= limit }
    }
}

/// Result of one experiment before it is written out.
pub struct Outcome {
    pub report: Value,
    pub csv: Vec<(String, String)>,
    pub checks: Vec<ThresholdCheck>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("configs serialize")
}

/// Default `(params, thresholds)` of an experiment.
pub fn defaults(name: &str) -> Option<(Value, Value)> {
    let slope = json!({ "max_abs_slope": 0.05 });
    Some(match name {
        "fefferman-stein" => (to_value(&FeffermanSteinConfig::default()), slope),
        "fefferman-stein-violation" => {
            (to_value(&FeffermanSteinConfig { r: 4.0, ..Default::default() }), json!({ "min_slope": 0.1 }))
        }
        "peetre-majorization" | "lemma-pointwise" => (to_value(&PointwiseConfig::default()), slope),
        "lemma-epsilon" => (
            json!({ "pointwise": to_value(&PointwiseConfig::default()), "factors": [1.0, 2.0], "log2_distances": (2..=12).collect::<Vec<i32>>() }),
            json!({ "bounded_factor": 1.0, "max_ratio": 10.0, "growing_factor": 2.0, "min_slope": 0.2 }),
        ),
        "local-scale-limited" | "local-peetre" => (to_value(&LocalConfig::default()), json!({ "max_spread": 2.0 })),
        "embedding" => (to_value(&EmbeddingConfig::default()), json!({ "max_ratio": 100.0 })),
        "franke" => (to_value(&FrankeConfig::default()), json!({ "max_ratio": 100.0 })),
        "sub-inequality" => (to_value(&SubConfig::default()), json!({ "max_ratio": 100.0, "max_abs_slope": 0.05 })),
        "multiplier" => (to_value(&MultiplierConfig::default()), json!({ "max_ratio": 10.0 })),
        "bounded-sum" => (
            to_value(&BoundedSumConfig::default()),
            json!({ "max_sup": 1e3, "flat_slope": 0.05, "growth_slope": 0.1 }),
        ),
        "modulated" => (
            to_value(&ModulatedFamilySpec::default()),
            json!({ "max_rhs_increase": 0.05, "rhs_from": 64, "min_r2": 0.98, "doubled_cauchy": 1e-3 }),
        ),
        "sharpness" => (
            to_value(&SharpnessFamilySpec::default()),
            json!({ "upper_from": 4, "max_upper_spread": 1.10, "exponent_rel_tol": 0.15, "bounded_slope": 0.05, "growth_slope": 0.1 }),
        ),
        _ => return None,
    })
}

/// Maps a short command line flag to a parameter key of `name`.
pub fn flag_key(name: &str, flag: &str) -> String {
    match (name, flag) {
        ("lemma-epsilon", "trials") => "pointwise.family.count".into(),
        ("lemma-epsilon", "seed") => "pointwise.family.seed".into(),
        ("lemma-epsilon", other) => format!("pointwise.{other}"),
        (_, "trials") => "family.count".into(),
        (_, "seed") => "family.seed".into(),
        (_, "K") => "ladder".into(),
        (_, other) => other.into(),
    }
}

/// Truncation ladder `16, 32, ..` up to `k`, with `k` itself last.
pub fn ladder_to(k: u32) -> Vec<u32> {
    let mut v: Vec<u32> = (4..31).map(|e| 1u32 << e).take_while(|&x| x < k).collect();
    v.push(k);
    v
}

fn parse<T: DeserializeOwned>(v: &Value, what: &str) -> Result<T> {
    serde_json::from_value(v.clone()).with_context(|| format!("invalid {what}"))
}

fn num(t: &Value, key: &str) -> Result<f64> {
    t.get(key).and_then(Value::as_f64).ok_or_else(|| anyhow!("threshold `{key}` must be a number"))
}

fn ratio_outcome(report: RatioReport) -> Result<Outcome> {
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    Ok(Outcome { report: to_value(&report), csv: vec![(String::new(), String::from_utf8(csv)?)], checks: Vec::new() })
}

fn growth_csv(report: &GrowthReport) -> Result<String> {
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    Ok(String::from_utf8(csv)?)
}

fn slope_checks(report: &RatioReport, limit: f64) -> Vec<ThresholdCheck> {
    report
        .series
        .iter()
        .map(|s| {
            let slope = s.trend.as_ref().map_or(f64::NAN, |t| t.slope.abs());
            ThresholdCheck::at_most(format!("{}: |trend slope|", s.series), slope, limit)
        })
        .collect()
}

fn cap_checks(report: &RatioReport, limit: f64) -> Vec<ThresholdCheck> {
    report.series.iter().map(|s| ThresholdCheck::at_most(format!("{}: max ratio", s.series), s.max_ratio, limit)).collect()
}

fn bound_checks(report: &RatioReport) -> Vec<ThresholdCheck> {
    report
        .series
        .iter()
        .filter_map(|s| s.bound.map(|b| ThresholdCheck::at_most(format!("{}: max ratio against bound", s.series), s.max_ratio, b * (1.0 + 1e-12))))
        .collect()
}

/// Runs experiment `name`; validation problems come back as errors.
pub fn execute(name: &str, params: &Value, thresholds: &Value) -> Result<Outcome> {
    let t = thresholds;
    match name {
        "fefferman-stein" => {
            let rep = check_fefferman_stein(&parse(params, "parameters")?)?;
            let checks = slope_checks(&rep, num(t, "max_abs_slope")?);
            Ok(Outcome { checks, ..ratio_outcome(rep)? })
        }
        "fefferman-stein-violation" => {
            let rep = fefferman_stein_violation(&parse(params, "parameters")?)?;
            let min = num(t, "min_slope")?;
            let checks = rep
                .series
                .iter()
                .map(|s| ThresholdCheck::at_least(format!("{}: trend slope", s.series), s.trend.as_ref().map_or(f64::NAN, |f| f.slope), min))
                .collect();
            Ok(Outcome { checks, ..ratio_outcome(rep)? })
        }
        "peetre-majorization" | "lemma-pointwise" => {
            let cfg: PointwiseConfig = parse(params, "parameters")?;
            let rep = if name == "peetre-majorization" { check_peetre_majorization(&cfg)? } else { check_lemma_pointwise(&cfg)? };
            let checks = slope_checks(&rep, num(t, "max_abs_slope")?);
            Ok(Outcome { checks, ..ratio_outcome(rep)? })
        }
        "lemma-epsilon" => {
            let cfg: PointwiseConfig = parse(&params["pointwise"], "pointwise parameters")?;
            let factors: Vec<f64> = parse(&params["factors"], "factors")?;
            let distances: Vec<i32> = parse(&params["log2_distances"], "log2_distances")?;
            let rep = lemma_epsilon_probe(&cfg, &factors, &distances)?;
            let mut checks = Vec::new();
            let bounded = format!("factor={}", num(t, "bounded_factor")?);
            let growing = format!("factor={}", num(t, "growing_factor")?);
            let find = |s: &str| rep.series(s).ok_or_else(|| anyhow!("series `{s}` not in the probe; add its factor"));
            checks.push(ThresholdCheck::at_most(format!("{bounded}: max ratio"), find(&bounded)?.max_ratio, num(t, "max_ratio")?));
            let slope = find(&growing)?.trend.as_ref().map_or(f64::NAN, |f| f.slope);
            checks.push(ThresholdCheck::at_least(format!("{growing}: trend slope"), slope, num(t, "min_slope")?));
            Ok(Outcome { checks, ..ratio_outcome(rep)? })
        }
        "local-scale-limited" | "local-peetre" => {
            let op = if name == "local-peetre" { LocalOperator::Peetre } else { LocalOperator::ScaleLimited };
            let rep = check_local_maximal(&parse::<LocalConfig>(params, "parameters")?, op)?;
            let limit = num(t, "max_spread")?;
            let checks = rep.series.iter().map(|s| ThresholdCheck::at_most(format!("{}: spread over mu", s.series), s.spread, limit)).collect();
            Ok(Outcome { checks, ..ratio_outcome(rep)? })
        }
        "embedding" | "franke" | "multiplier" => {
            let rep = match name {
                "embedding" => check_embedding(&parse::<EmbeddingConfig>(params, "parameters")?)?,
                "franke" => check_franke(&parse::<FrankeConfig>(params, "parameters")?)?,
                _ => check_multiplier(&parse::<MultiplierConfig>(params, "parameters")?)?,
            };
            let mut checks = cap_checks(&rep, num(t, "max_ratio")?);
            checks.extend(bound_checks(&rep));
            Ok(Outcome { checks, ..ratio_outcome(rep)? })
        }
        "sub-inequality" => {
            let rep = check_sub_inequality(&parse(params, "parameters")?)?;
            let mut checks = cap_checks(&rep, num(t, "max_ratio")?);
            checks.extend(slope_checks(&rep, num(t, "max_abs_slope")?));
            Ok(Outcome { checks, ..ratio_outcome(rep)? })
        }
        "bounded-sum" => bounded_sum(&parse(params, "parameters")?, t),
        "modulated" => modulated(&parse(params, "parameters")?, t),
        "sharpness" => sharpness(&parse(params, "parameters")?, t),
        other => Err(anyhow!("unknown experiment `{other}`")),
    }
}

fn bounded_sum(cfg: &BoundedSumConfig, t: &Value) -> Result<Outcome> {
    let rep: BoundedSumReport = bounded_sum_probe(cfg)?;
    let mut checks = vec![ThresholdCheck::at_most("sup of the scaled series", rep.sup, num(t, "max_sup")?)];
    if let Some(fit) = &rep.contrast_trend {
        // the unscaled series stays bounded only for alpha >= 1
        if cfg.alpha >= 1.0 {
            checks.push(ThresholdCheck::at_most("contrast: |log-log slope|", fit.slope.abs(), num(t, "flat_slope")?));
        } else {
            checks.push(ThresholdCheck::at_least("contrast: log-log slope", fit.slope, num(t, "growth_slope")?));
        }
    }
    let mut csv = String::from("series,x,value\n");
    for p in &rep.profile {
        csv.push_str(&format!("profile,{},{}\n", p[0], p[1]));
    }
    for p in &rep.contrast {
        csv.push_str(&format!("contrast_sup,{},{}\n", p[0], p[1]));
    }
    Ok(Outcome { report: to_value(&rep), csv: vec![(String::new(), csv)], checks })
}

fn modulated(spec: &ModulatedFamilySpec, t: &Value) -> Result<Outcome> {
    let rep = measure_modulated_divergence(spec)?;
    let doubled = measure_modulated_divergence(&spec.doubled())?;
    let mut checks = Vec::new();
    let from = num(t, "rhs_from")?;
    let rows = rep.series("truncated");
    let base = rows.iter().filter(|r| r.x <= from).map(|r| r.rhs).fold(f64::NAN, f64::max);
    let top = rows.iter().map(|r| r.rhs).fold(f64::NAN, f64::max);
    checks.push(ThresholdCheck::at_most(format!("bounded side: relative increase from K = {from}"), top / base - 1.0, num(t, "max_rhs_increase")?));
    let r2 = rep.fit("truncated", "lhs_q_vs_ln_k").map_or(f64::NAN, |f| f.r2);
    checks.push(ThresholdCheck::at_least("maximal side: R^2 of q-th power against ln K", r2, num(t, "min_r2")?));
    let inc = cauchy_increment(&doubled).unwrap_or(f64::NAN);
    checks.push(ThresholdCheck::at_most("doubled alpha: last increment", inc, num(t, "doubled_cauchy")?));
    let csv = vec![(String::new(), growth_csv(&rep)?), ("doubled".into(), growth_csv(&doubled)?)];
    Ok(Outcome { report: json!({ "family": to_value(&rep), "doubled_alpha": to_value(&doubled) }), csv, checks })
}

fn sharpness(spec: &SharpnessFamilySpec, t: &Value) -> Result<Outcome> {
    let rep = measure_sharpness_rates(spec)?;
    let mut checks = Vec::new();
    let from = num(t, "upper_from")?;
    let upper: Vec<f64> = rep.series("upper").iter().filter(|r| r.x >= from).map(|r| r.lhs).collect();
    let spread = upper.iter().copied().fold(f64::NAN, f64::max) / upper.iter().copied().fold(f64::NAN, f64::min);
    checks.push(ThresholdCheck::at_most(format!("upper: max over min for N >= {from}"), spread, num(t, "max_upper_spread")?));
    let tol = num(t, "exponent_rel_tol")?;
    for model in ["offset_log_power", "offset_cell_power"] {
        for fit in rep.fits.iter().filter(|f| f.model == model) {
            let err = fit.relative_error().unwrap_or(f64::NAN);
            checks.push(ThresholdCheck::at_most(format!("{}: relative exponent error", fit.series), err, tol));
        }
    }
    // sigma = 1 / r above 1 / q keeps the ratio bounded, otherwise it grows
    let d = 1.0;
    for fit in rep.fits.iter().filter(|f| f.model == "log2_ratio_vs_n") {
        let r: f64 = fit.series.trim_start_matches("peetre_r=").parse()?;
        if d / r > d / spec.q {
            checks.push(ThresholdCheck::at_most(format!("{}: |log2 slope|", fit.series), fit.exponent.abs(), num(t, "bounded_slope")?));
        } else {
            checks.push(ThresholdCheck::at_least(format!("{}: log2 slope", fit.series), fit.exponent, num(t, "growth_slope")?));
        }
    }
    Ok(Outcome { report: to_value(&rep), csv: vec![(String::new(), growth_csv(&rep)?)], checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_experiment_has_defaults() {
        for name in VERIFY_CHECKS.iter().chain(COUNTEREXAMPLES) {
            assert!(defaults(name).is_some(), "{name}");
        }
        assert!(defaults("nope").is_none());
    }

    #[test]
    fn ladders() {
        assert_eq!(ladder_to(512), vec![16, 32, 64, 128, 256, 512]);
        assert_eq!(ladder_to(100), vec![16, 32, 64, 100]);
        assert_eq!(ladder_to(8), vec![8]);
    }

    #[test]
    fn threshold_relations() {
        assert!(ThresholdCheck::at_most("a", 1.0, 1.0).pass);
        assert!(!ThresholdCheck::at_least("a", f64::NAN, 0.0).pass);
        assert!(!ThresholdCheck::at_most("a", f64::NAN, 0.0).pass);
    }
}
