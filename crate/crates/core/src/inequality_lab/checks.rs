//! Randomised ratio experiments for the vector-valued and local maximal
//! inequalities and the embeddings built on them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::family::{random_band_field, random_raw_field, random_sequence, stream_rng, RandomFamilySpec};
use super::report::{RatioReport, TrialRow};
use crate::bump_factory::make_gamma;
use crate::dyadic_norms::{besov_norm, f_norm, v_norm, ShellRange};
use crate::error::{Error, Result};
use crate::lp_decomposition::{inhomog_project, project};
use crate::maximal_operators::{hl_maximal, peetre_maximal, peetre_maximal_at, scale_limited_at, scale_limited_maximal, WindowLadder};
use crate::real::{extended_float, pow2};
use crate::sample_grid::{lp_norm_of, GridSpec, SampledField};

fn hypothesis(msg: String) -> Error {
    Error::HypothesisViolated(msg)
}

fn grid(dim: usize, log2_side: i32, log2_n: i32) -> Result<GridSpec> {
    if !(1..=24).contains(&log2_n) {
        return Err(Error::InvalidGrid(format!("log2 N = {log2_n} out of range")));
    }
    GridSpec::new(dim, log2_side, 1usize << log2_n)
}

fn trials(spec: &RandomFamilySpec) -> Result<Vec<usize>> {
    if spec.count == 0 {
        return Err(Error::InvalidParameter("family needs at least one trial".into()));
    }
    Ok((0..spec.count).collect())
}

// Sum over k of v_k^q, then the q-th root; q = inf takes the max.
fn lq_combine(parts: &[Vec<f64>], q: f64) -> Vec<f64> {
    let n = parts[0].len();
    (0..n)
        .map(|i| {
            if q.is_infinite() {
                parts.iter().fold(0.0f64, |m, p| m.max(p[i]))
            } else {
                parts.iter().map(|p| p[i].powf(q)).sum::<f64>().powf(1.0 / q)
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeffermanSteinConfig {
    #[serde(with = "extended_float")]
    pub p: f64,
    #[serde(with = "extended_float")]
    pub q: f64,
    pub r: f64,
    pub dim: usize,
    pub log2_side: i32,
    pub log2_n: Vec<i32>,
    pub family: RandomFamilySpec,
}

impl Default for FeffermanSteinConfig {
    fn default() -> Self {
        Self { p: 2.0, q: 2.0, r: 1.0, dim: 1, log2_side: 0, log2_n: (8..=12).collect(), family: RandomFamilySpec::default() }
    }
}

/// Both sides of the vector-valued maximal inequality for one sequence.
pub fn fefferman_stein_sides(fields: &[SampledField<f64>], p: f64, q: f64, r: f64) -> Result<(f64, f64)> {
    let g = fields.first().ok_or_else(|| Error::InvalidParameter("empty sequence".into()))?.grid();
    let maxed = fields.iter().map(|f| Ok(hl_maximal(f, r)?.values)).collect::<Result<Vec<_>>>()?;
    let plain: Vec<Vec<f64>> = fields.iter().map(|f| f.abs()).collect();
    Ok((lp_norm_of(&lq_combine(&maxed, q), g, p), lp_norm_of(&lq_combine(&plain, q), g, p)))
}

/// Ratio of the two sides of the vector-valued maximal inequality over
/// random sequences, swept over the grid size.
pub fn check_fefferman_stein(cfg: &FeffermanSteinConfig) -> Result<RatioReport> {
    if !cfg.p.is_finite() {
        return Err(hypothesis("p must be finite".into()));
    }
    if !(cfg.r > 0.0 && cfg.r < cfg.p.min(cfg.q)) {
        return Err(hypothesis(format!("need 0 < r < min(p, q), got r = {}", cfg.r)));
    }
    let mut rows = Vec::new();
    for &ln in &cfg.log2_n {
        let g = grid(cfg.dim, cfg.log2_side, ln)?;
        let (k_lo, k_hi) = (g.coarsest_level(), g.max_shell());
        let got = trials(&cfg.family)?
            .into_par_iter()
            .map(|t| {
                let seq = random_sequence(g, &cfg.family, t, k_lo, k_hi)?;
                let fields: Vec<SampledField<f64>> = seq.iter().map(|(_, f)| f.clone()).collect();
                let (lhs, rhs) = fefferman_stein_sides(&fields, cfg.p, cfg.q, cfg.r)?;
                Ok(TrialRow::new("ratio", ln as f64, t, lhs, rhs))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.extend(got);
    }
    RatioReport::build("fefferman_stein", cfg, "log2_n", rows)
}

/// With `r >= p` the inequality fails; a band-limited spike shows the ratio
/// growing with resolution.
pub fn fefferman_stein_violation(cfg: &FeffermanSteinConfig) -> Result<RatioReport> {
    if cfg.r < cfg.p {
        return Err(hypothesis(format!("the violation probe needs r >= p, got r = {} < p = {}", cfg.r, cfg.p)));
    }
    let mut rows = Vec::new();
    for &ln in &cfg.log2_n {
        let g = grid(cfg.dim, cfg.log2_side, ln)?;
        let mut spike = SampledField::<f64>::zeros(g).into_values();
        spike[0].re = 1.0;
        let f = project(&SampledField::new(g, spike)?, g.max_shell())?;
        let (lhs, rhs) = fefferman_stein_sides(&[f], cfg.p, cfg.q, cfg.r)?;
        rows.push(TrialRow::new("spike", ln as f64, 0, lhs, rhs));
    }
    RatioReport::build("fefferman_stein_violation", cfg, "log2_n", rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PointwiseConfig {
    pub dim: usize,
    pub k_list: Vec<i32>,
    /// The torus holds `2^cells_log2` cubes of side `2^-k` per axis.
    pub cells_log2: i32,
    /// Samples per cube side, `2^oversample_log2`.
    pub oversample_log2: i32,
    pub r: f64,
    pub t: f64,
    pub family: RandomFamilySpec,
}

impl Default for PointwiseConfig {
    fn default() -> Self {
        Self { dim: 1, k_list: (-2..=6).collect(), cells_log2: 6, oversample_log2: 4, r: 1.0, t: 2.0, family: RandomFamilySpec::default() }
    }
}

impl PointwiseConfig {
    /// Torus of side `2^(cells - k)`, so every scale sees the same number of cubes.
    pub fn grid_for(&self, k: i32) -> Result<GridSpec> {
        if self.oversample_log2 < 2 {
            return Err(Error::InvalidParameter("need at least 4 samples per cube side".into()));
        }
        grid(self.dim, self.cells_log2 - k, self.cells_log2 + self.oversample_log2)
    }
}

fn pointwise_rows<F>(cfg: &PointwiseConfig, series: &str, ratio_at: F) -> Result<Vec<TrialRow>>
where
    F: Fn(&SampledField<f64>, i32) -> Result<(Vec<f64>, Vec<f64>)> + Sync,
{
    let mut rows = Vec::new();
    for &k in &cfg.k_list {
        let g = cfg.grid_for(k)?;
        let got = trials(&cfg.family)?
            .into_par_iter()
            .map(|t| {
                let mut rng = stream_rng(cfg.family.seed, &[t as i64, k as i64]);
                let f = random_band_field(g, k, 2.0, cfg.family.envelope, &mut rng)?;
                let (num, den) = ratio_at(&f, k)?;
                // report the sample with the largest ratio
                let mut best = (0.0, 0.0, -1.0);
                for (a, b) in num.iter().zip(&den) {
                    if *b > 0.0 && a / b > best.2 {
                        best = (*a, *b, a / b);
                    }
                }
                Ok(TrialRow::new(series, k as f64, t, best.0, best.1))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.extend(got);
    }
    Ok(rows)
}

/// `max_x P_(d/r, 2^k) f / M_r f` for random `f` in `E(2^k)`, swept over `k`.
pub fn check_peetre_majorization(cfg: &PointwiseConfig) -> Result<RatioReport> {
    if !(cfg.r > 0.0) {
        return Err(Error::InvalidParameter("r must be positive".into()));
    }
    let sigma = cfg.dim as f64 / cfg.r;
    let rows = pointwise_rows(cfg, "peetre_over_hl", |f, k| {
        Ok((peetre_maximal(f, sigma, k)?.values, hl_maximal(f, cfg.r)?.values))
    })?;
    RatioReport::build("peetre_majorization", cfg, "k", rows)
}

/// `max_x P_(d/r, 2^k) f / M_t^(k, eps) f` with `eps = d (1/r - 1/t)`.
pub fn check_lemma_pointwise(cfg: &PointwiseConfig) -> Result<RatioReport> {
    if !(cfg.r > 0.0 && cfg.r < cfg.t) {
        return Err(hypothesis(format!("need 0 < r < t, got r = {}, t = {}", cfg.r, cfg.t)));
    }
    let d = cfg.dim as f64;
    let eps = d * (1.0 / cfg.r - 1.0 / cfg.t);
    let sigma = d / cfg.r;
    let rows = pointwise_rows(cfg, "peetre_over_scale_limited", |f, k| {
        Ok((peetre_maximal(f, sigma, k)?.values, scale_limited_maximal(f, cfg.t, k, eps)?.values))
    })?;
    Ok(RatioReport::build("lemma_pointwise", cfg, "k", rows)?.with_note(format!("eps = {eps}")))
}

/// Ratio at the origin for a unit-scale bump translated by `2^j`, with the
/// penalty exponent `factor * d (1/r - 1/t)`. Factor 1 stays bounded, larger
/// factors grow like a power of the distance.
pub fn lemma_epsilon_probe(cfg: &PointwiseConfig, factors: &[f64], log2_distances: &[i32]) -> Result<RatioReport> {
    if !(cfg.r > 0.0 && cfg.r < cfg.t) {
        return Err(hypothesis(format!("need 0 < r < t, got r = {}, t = {}", cfg.r, cfg.t)));
    }
    let far = log2_distances.iter().copied().max().unwrap_or(0);
    let g = grid(cfg.dim, far + 3, far + 3 + 2)?;
    let d = cfg.dim as f64;
    let eps = d * (1.0 / cfg.r - 1.0 / cfg.t);
    let gamma = make_gamma();
    let mut rows = Vec::new();
    for &j in log2_distances {
        let center = [pow2(j), if cfg.dim == 2 { pow2(j) } else { 0.0 }];
        let f = gamma.realize::<f64>(g, center, 0)?;
        let ladder = WindowLadder::new(&f, cfg.t)?;
        let num = peetre_maximal_at(&f, d / cfg.r, 0, &[0])?[0];
        for &factor in factors {
            let den = scale_limited_at(&ladder, 0, factor * eps, &[0])?[0];
            rows.push(TrialRow::new(format!("factor={factor}"), j as f64, 0, num, den));
        }
    }
    Ok(RatioReport::build("lemma_epsilon_probe", &(cfg, factors, log2_distances), "log2_distance", rows)?
        .with_note(format!("eps = {eps}")))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalOperator {
    ScaleLimited,
    Peetre,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalConfig {
    pub dim: usize,
    pub log2_side: i32,
    pub log2_n: i32,
    pub k_lo: i32,
    pub k_hi: i32,
    pub mu_list: Vec<i32>,
    pub r: f64,
    pub q: f64,
    pub eps_list: Vec<f64>,
    /// Take the right side over every cube of side at most `2^-mu` instead
    /// of cubes of side exactly `2^-mu`. This is the weaker form.
    pub rhs_all_levels: bool,
    pub family: RandomFamilySpec,
}

impl Default for LocalConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            log2_side: 3,
            log2_n: 11,
            k_lo: -2,
            k_hi: 6,
            mu_list: (-2..=2).collect(),
            r: 1.0,
            q: 2.0,
            eps_list: vec![0.25, 0.5, 1.0],
            rhs_all_levels: false,
            family: RandomFamilySpec { count: 50, ..RandomFamilySpec::default() },
        }
    }
}

// Largest cube average of per-sample values at one level, then the q-th root.
fn max_cube_average(g: GridSpec, vals: &[f64], level: i32, q: f64) -> f64 {
    let shift = g.finest_level() - level;
    let per_axis = 1usize << (level - g.coarsest_level());
    let cubes = per_axis.pow(g.dim() as u32);
    let mut sums = vec![0.0; cubes];
    for (i, v) in vals.iter().enumerate() {
        let m = g.multi_index(i);
        let c = if g.dim() == 1 { m[0] >> shift } else { (m[0] >> shift) * per_axis + (m[1] >> shift) };
        sums[c] += v;
    }
    let vol = pow2(-level * g.dim() as i32);
    let h = g.cell_volume();
    sums.iter().map(|s| (s * h / vol).powf(1.0 / q)).fold(0.0, f64::max)
}

/// Local vector-valued inequality: for each `mu`, the largest cube
/// average of `sum_(k >= mu) (T_k f_k)^q` over the largest cube average of
/// `sum_(k >= mu) |f_k|^q`, cubes of side `2^-mu`.
pub fn check_local_maximal(cfg: &LocalConfig, op: LocalOperator) -> Result<RatioReport> {
    if !(cfg.r > 0.0 && cfg.r < cfg.q) {
        return Err(hypothesis(format!("need 0 < r < q, got r = {}, q = {}", cfg.r, cfg.q)));
    }
    let g = grid(cfg.dim, cfg.log2_side, cfg.log2_n)?;
    if cfg.k_lo < g.coarsest_level() || cfg.k_hi > g.max_shell() || cfg.k_lo > cfg.k_hi {
        return Err(Error::InvalidParameter(format!(
            "scales {}..={} outside {}..={}",
            cfg.k_lo,
            cfg.k_hi,
            g.coarsest_level(),
            g.max_shell()
        )));
    }
    if cfg.mu_list.iter().any(|&m| m < cfg.k_lo || m > cfg.k_hi) {
        return Err(Error::InvalidParameter("every mu must lie in the scale range".into()));
    }
    let series: Vec<(String, Option<f64>)> = match op {
        LocalOperator::ScaleLimited => {
            if cfg.eps_list.iter().any(|&e| !(e > 0.0)) {
                return Err(hypothesis("eps must be positive".into()));
            }
            cfg.eps_list.iter().map(|&e| (format!("eps={e}"), Some(e))).collect()
        }
        LocalOperator::Peetre => vec![("peetre".to_string(), None)],
    };
    let sigma = cfg.dim as f64 / cfg.r;
    let per_trial = trials(&cfg.family)?
        .into_par_iter()
        .map(|t| {
            let seq = random_sequence(g, &cfg.family, t, cfg.k_lo, cfg.k_hi)?;
            let mut plain = vec![0.0; g.len()];
            let mut lifted = vec![vec![0.0; g.len()]; series.len()];
            let mut rows = Vec::new();
            let mut finer = 0.0f64;
            for k in (cfg.k_lo..=cfg.k_hi).rev() {
                let f = seq.get(k).unwrap();
                for (acc, c) in plain.iter_mut().zip(f.values()) {
                    *acc += c.norm().powf(cfg.q);
                }
                let exact = if cfg.rhs_all_levels || cfg.mu_list.contains(&k) { max_cube_average(g, &plain, k, cfg.q) } else { 0.0 };
                finer = finer.max(exact);
                for ((_, eps), acc) in series.iter().zip(lifted.iter_mut()) {
                    let m = match eps {
                        Some(e) => scale_limited_maximal(f, cfg.r, k, *e)?.values,
                        None => peetre_maximal(f, sigma, k)?.values,
                    };
                    for (a, v) in acc.iter_mut().zip(m) {
                        *a += v.powf(cfg.q);
                    }
                }
                if cfg.mu_list.contains(&k) {
                    let rhs = if cfg.rhs_all_levels { finer } else { exact };
                    for ((name, _), acc) in series.iter().zip(&lifted) {
                        let lhs = max_cube_average(g, acc, k, cfg.q);
                        rows.push(TrialRow::new(name.clone(), k as f64, t, lhs, rhs));
                    }
                }
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<TrialRow> = per_trial.into_iter().flatten().collect();
    rows.sort_by(|a, b| (a.series.clone(), a.x as i64, a.trial).cmp(&(b.series.clone(), b.x as i64, b.trial)));
    let name = match op {
        LocalOperator::ScaleLimited => "local_scale_limited",
        LocalOperator::Peetre => "local_peetre",
    };
    RatioReport::build(name, &(cfg, op), "mu", rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingConfig {
    pub dim: usize,
    pub log2_side: i32,
    pub log2_n: i32,
    pub k_lo: i32,
    pub k_hi: i32,
    pub mu_list: Vec<i32>,
    pub q1: f64,
    pub q2: f64,
    pub sigma_list: Vec<f64>,
    /// Trials on which the Peetre oscillation is measured.
    pub oscillation_trials: usize,
    pub family: RandomFamilySpec,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            log2_side: 2,
            log2_n: 11,
            k_lo: -2,
            k_hi: 7,
            mu_list: (-2..=2).collect(),
            q1: 1.0,
            q2: 4.0,
            sigma_list: vec![1.0, 2.0],
            oscillation_trials: 5,
            family: RandomFamilySpec { count: 30, ..RandomFamilySpec::default() },
        }
    }
}

/// Largest over smallest value of `v` on each cube of `level`, maximised over cubes.
pub fn cube_oscillation(g: GridSpec, v: &[f64], level: i32) -> f64 {
    let shift = g.finest_level() - level;
    let per_axis = 1usize << (level - g.coarsest_level());
    let cubes = per_axis.pow(g.dim() as u32);
    let mut hi = vec![0.0f64; cubes];
    let mut lo = vec![f64::INFINITY; cubes];
    for (i, &x) in v.iter().enumerate() {
        let m = g.multi_index(i);
        let c = if g.dim() == 1 { m[0] >> shift } else { (m[0] >> shift) * per_axis + (m[1] >> shift) };
        hi[c] = hi[c].max(x);
        lo[c] = lo[c].min(x);
    }
    hi.iter().zip(&lo).map(|(a, b)| if *b > 0.0 { a / b } else { f64::INFINITY }).fold(0.0, f64::max)
}

/// Embeddings between the local norms: monotonicity in `q`, domination of
/// the sup norm, and the oscillation of the Peetre function on cubes.
pub fn check_embedding(cfg: &EmbeddingConfig) -> Result<RatioReport> {
    if !(cfg.q1 > 0.0 && cfg.q1 <= cfg.q2 && cfg.q2.is_finite()) {
        return Err(hypothesis(format!("need 0 < q1 <= q2 < inf, got {} and {}", cfg.q1, cfg.q2)));
    }
    let g = grid(cfg.dim, cfg.log2_side, cfg.log2_n)?;
    if cfg.k_lo < g.coarsest_level() || cfg.k_hi > g.max_shell() || cfg.k_lo > cfg.k_hi {
        return Err(Error::InvalidParameter("scale range does not fit the grid".into()));
    }
    let per_trial = trials(&cfg.family)?
        .into_par_iter()
        .map(|t| {
            let seq = random_sequence(g, &cfg.family, t, cfg.k_lo, cfg.k_hi)?;
            let mut rows = Vec::new();
            for &mu in &cfg.mu_list {
                let tail = seq.tail(mu)?;
                let v1 = v_norm(&tail, mu, cfg.q1)?.value;
                let v2 = v_norm(&tail, mu, cfg.q2)?.value;
                let sup = tail.iter().map(|(_, f)| f.max_abs()).fold(0.0, f64::max);
                let x = mu as f64;
                rows.push(TrialRow::new("v_q2_over_v_q1", x, t, v2, v1));
                rows.push(TrialRow::new("sup_over_v_q1", x, t, sup, v1));
                rows.push(TrialRow::new("sup_over_v_q2", x, t, sup, v2));
            }
            if t < cfg.oscillation_trials {
                for &sigma in &cfg.sigma_list {
                    for (k, f) in seq.iter() {
                        let p = peetre_maximal(f, sigma, k)?;
                        let level = k.min(g.finest_level());
                        let osc = cube_oscillation(g, &p.values, level);
                        rows.push(TrialRow::new(format!("oscillation_sigma={sigma}"), k as f64, t, osc, 1.0));
                    }
                }
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<TrialRow> = per_trial.into_iter().flatten().collect();
    rows.sort_by(|a, b| a.series.cmp(&b.series).then(a.x.partial_cmp(&b.x).unwrap()).then(a.trial.cmp(&b.trial)));
    let mut report = RatioReport::build("embedding", cfg, "scale", rows)?;
    for &sigma in &cfg.sigma_list {
        let bound = (1.0 + (cfg.dim as f64).sqrt()).powf(sigma);
        report = report.with_bound(&format!("oscillation_sigma={sigma}"), bound);
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrankeConfig {
    pub dim: usize,
    pub log2_side: i32,
    pub log2_n: Vec<i32>,
    pub p0: f64,
    pub s0: f64,
    #[serde(with = "extended_float")]
    pub q: f64,
    pub family: RandomFamilySpec,
}

impl Default for FrankeConfig {
    fn default() -> Self {
        Self { dim: 1, log2_side: 0, log2_n: (8..=11).collect(), p0: 2.0, s0: 1.0, q: 1.0, family: RandomFamilySpec::default() }
    }
}

/// `(1 - 2^(-d q / p0))^(-1/q)`, valid when `q < p0`.
pub fn franke_cube_bound(dim: usize, p0: f64, q: f64) -> f64 {
    (1.0 - 2f64.powf(-(dim as f64) * q / p0)).powf(-1.0 / q)
}

/// Both sides of the Besov into Triebel-Lizorkin embedding for one field,
/// plus the part of the left side coming from cubes of side below 1.
pub fn franke_sides(f: &SampledField<f64>, p0: f64, s0: f64, q: f64) -> Result<(f64, f64, f64)> {
    let g = f.grid();
    let s = s0 - g.dim() as f64 / p0;
    let range = ShellRange::full(g, false);
    let lhs = f_norm(f, s, f64::INFINITY, q, false, range)?.value;
    let rhs = besov_norm(f, s0, p0, f64::INFINITY, false, range)?.value;
    let base = inhomog_project(f, 0)?.max_abs();
    Ok((lhs, rhs, lhs - base))
}

/// Ratio of the smoothness-lowered sup-type norm to the Besov norm.
pub fn check_franke(cfg: &FrankeConfig) -> Result<RatioReport> {
    if !(cfg.p0 > 0.0 && cfg.p0.is_finite() && cfg.q > 0.0) {
        return Err(Error::InvalidParameter("need finite p0 > 0 and q > 0".into()));
    }
    if cfg.q.is_infinite() {
        return Err(Error::InvalidParameter("q must be finite for the local sup norm".into()));
    }
    let decay = cfg.s0 + cfg.dim as f64 / 2.0;
    let mut rows = Vec::new();
    for &ln in &cfg.log2_n {
        let g = grid(cfg.dim, cfg.log2_side, ln)?;
        let got = trials(&cfg.family)?
            .into_par_iter()
            .map(|t| {
                let mut rng = stream_rng(cfg.family.seed, &[t as i64, ln as i64]);
                let f = random_raw_field(g, decay, &mut rng);
                let (lhs, rhs, cubes) = franke_sides(&f, cfg.p0, cfg.s0, cfg.q)?;
                Ok(vec![TrialRow::new("full", ln as f64, t, lhs, rhs), TrialRow::new("cube_part", ln as f64, t, cubes, rhs)])
            })
            .collect::<Result<Vec<_>>>()?;
        rows.extend(got.into_iter().flatten());
    }
    rows.sort_by(|a, b| a.series.cmp(&b.series).then(a.x.partial_cmp(&b.x).unwrap()).then(a.trial.cmp(&b.trial)));
    let report = RatioReport::build("franke", cfg, "log2_n", rows)?;
    Ok(if cfg.q < cfg.p0 { report.with_bound("cube_part", franke_cube_bound(cfg.dim, cfg.p0, cfg.q)) } else { report })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SubConfig {
    pub dim: usize,
    pub log2_side: i32,
    pub log2_n: i32,
    pub k_list: Vec<i32>,
    pub q: f64,
    pub family: RandomFamilySpec,
}

impl Default for SubConfig {
    fn default() -> Self {
        Self { dim: 1, log2_side: 0, log2_n: 10, k_list: (2..=8).collect(), q: 1.0, family: RandomFamilySpec::default() }
    }
}

/// Largest ratio over dyadic cubes `P` of side at least `2^-k` of the
/// lattice sum `(sum_(Q in D_k(P)) |f(x_Q)|^q)^(1/q)` to
/// `(2^k l(P))^(d/q)` times the largest `L^q` average over cubes of side `l(P)`.
/// Returns `(lhs, rhs)` at the maximising cube.
pub fn sub_inequality_sides(f: &SampledField<f64>, k: i32, q: f64) -> Result<(f64, f64)> {
    let g = f.grid();
    let band = f.band().ok_or(Error::Uncertified)?;
    if band.radius() > pow2(k - 1) * (1.0 + 1e-12) {
        return Err(hypothesis(format!("band radius {} exceeds 2^(k-1)", band.radius())));
    }
    if k > g.finest_level() || k < g.coarsest_level() {
        return Err(Error::InvalidParameter(format!("scale {k} not resolved by the grid")));
    }
    let d = g.dim() as i32;
    let step = 1usize << (g.finest_level() - k);
    let powq: Vec<f64> = f.values().iter().map(|c| c.norm().powf(q)).collect();
    let corners: Vec<f64> = powq
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let m = g.multi_index(i);
            if m[0] % step == 0 && m[1] % step == 0 {
                *v
            } else {
                0.0
            }
        })
        .collect();
    let mut best = (0.0, 1.0, -1.0);
    for level in g.coarsest_level()..=k {
        let shift = g.finest_level() - level;
        let per_axis = 1usize << (level - g.coarsest_level());
        let cubes = per_axis.pow(d as u32);
        let mut csum = vec![0.0; cubes];
        let mut asum = vec![0.0; cubes];
        for i in 0..g.len() {
            let m = g.multi_index(i);
            let c = if d == 1 { m[0] >> shift } else { (m[0] >> shift) * per_axis + (m[1] >> shift) };
            csum[c] += corners[i];
            asum[c] += powq[i];
        }
        let vol = pow2(-level * d);
        let avg = asum.iter().map(|s| (s * g.cell_volume() / vol).powf(1.0 / q)).fold(0.0, f64::max);
        let rhs = pow2(k - level).powf(d as f64 / q) * avg;
        for &c in &csum {
            let lhs = c.powf(1.0 / q);
            if rhs > 0.0 && lhs / rhs > best.2 {
                best = (lhs, rhs, lhs / rhs);
            }
        }
    }
    Ok((best.0, best.1))
}

pub fn check_sub_inequality(cfg: &SubConfig) -> Result<RatioReport> {
    if !(cfg.q > 0.0 && cfg.q.is_finite()) {
        return Err(Error::InvalidParameter("q must be positive and finite".into()));
    }
    let g = grid(cfg.dim, cfg.log2_side, cfg.log2_n)?;
    let mut rows = Vec::new();
    for &k in &cfg.k_list {
        let got = trials(&cfg.family)?
            .into_par_iter()
            .map(|t| {
                let mut rng = stream_rng(cfg.family.seed, &[t as i64, k as i64]);
                let f = random_band_field(g, k - 2, 2.0, cfg.family.envelope, &mut rng)?;
                let (lhs, rhs) = sub_inequality_sides(&f, k, cfg.q)?;
                Ok(TrialRow::new("ratio", k as f64, t, lhs, rhs))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.extend(got);
    }
    RatioReport::build("sub_inequality", cfg, "k", rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    #[test]
    fn constant_sequence_has_unit_ratio() {
        let g = GridSpec::new(1, 0, 64).unwrap();
        let one = SampledField::<f64>::from_fn(g, |_| Complex::new(1.0, 0.0));
        let (l, r) = fefferman_stein_sides(&[one], 2.0, 2.0, 1.0).unwrap();
        assert!((l / r - 1.0).abs() < 1e-14);
    }

    #[test]
    fn fefferman_stein_rejects_bad_exponents() {
        let cfg = FeffermanSteinConfig { r: 2.0, ..Default::default() };
        assert!(matches!(check_fefferman_stein(&cfg), Err(Error::HypothesisViolated(_))));
        assert!(fefferman_stein_violation(&FeffermanSteinConfig::default()).is_err());
    }

    #[test]
    fn small_fefferman_stein_run() {
        let cfg = FeffermanSteinConfig {
            log2_n: vec![6, 7],
            family: RandomFamilySpec { count: 3, ..Default::default() },
            ..Default::default()
        };
        let rep = check_fefferman_stein(&cfg).unwrap();
        assert_eq!(rep.rows.len(), 6);
        assert!(rep.max_ratio >= 1.0 && rep.max_ratio < 10.0);
    }

    #[test]
    fn lemma_requires_r_below_t() {
        let cfg = PointwiseConfig { r: 2.0, t: 2.0, ..Default::default() };
        assert!(check_lemma_pointwise(&cfg).is_err());
    }

    #[test]
    fn zero_field_is_degenerate_in_franke() {
        let g = GridSpec::new(1, 0, 256).unwrap();
        let (l, r, _) = franke_sides(&SampledField::zeros(g), 2.0, 1.0, 1.0).unwrap();
        let row = TrialRow::new("x", 0.0, 0, l, r);
        assert!(row.degenerate);
    }

    #[test]
    fn franke_single_shell_matches_direct_computation() {
        // one shell: lhs is the sup over cubes of that shell alone
        let g = GridSpec::new(1, 0, 256).unwrap();
        let mut rng = stream_rng(3, &[0]);
        let raw = random_raw_field(g, 0.0, &mut rng);
        let f = project(&project(&raw, 4).unwrap(), 4).unwrap().drop_band();
        let (p0, s0, q) = (2.0, 1.0, 1.0);
        let (lhs, rhs, _) = franke_sides(&f, p0, s0, q).unwrap();
        let s = s0 - 1.0 / p0;
        let range = ShellRange::full(g, false);
        let want_rhs = (0..=range.k_hi)
            .map(|k| 2f64.powf(s0 * k as f64) * inhomog_project(&f, k).unwrap().lp_norm(p0))
            .fold(0.0, f64::max);
        assert!((rhs - want_rhs).abs() <= 1e-12 * want_rhs);
        assert!(lhs > 0.0 && lhs.is_finite());
        let _ = s;
    }

    #[test]
    fn oscillation_of_constant_is_one() {
        let g = GridSpec::new(1, 0, 32).unwrap();
        assert_eq!(cube_oscillation(g, &vec![2.0; 32], 2), 1.0);
    }
}
