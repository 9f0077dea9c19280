//! Discrete maximal operators on sampled tori.
//!
//! Windows are axis-parallel cubes made of `2^j` consecutive samples per
//! axis (side `2^j h`, `0 <= j <= log2 N`), wrapped periodically. A window
//! contains a sample when the sample is one of its points. Window sums are
//! built by doubling, `S_(j+1)(a) = S_j(a) + S_j(a + 2^j)` per axis, which
//! keeps every sum a balanced tree of nonnegative terms.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::{pow2, Real};
use crate::sample_grid::{GridSpec, SampledField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    HardyLittlewood,
    ScaleLimited,
    Peetre,
}

/// Parameters an operator output was produced with.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub kind: OperatorKind,
    pub r: Option<f64>,
    pub k: Option<i32>,
    pub eps: Option<f64>,
    pub sigma: Option<f64>,
}

/// Nonnegative operator output on the input grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MaximalField<T: Real> {
    pub grid: GridSpec,
    pub values: Vec<T>,
    pub provenance: Provenance,
}

impl<T: Real> MaximalField<T> {
    pub fn max(&self) -> T {
        self.values.iter().fold(T::zero(), |m, &v| m.max(v))
    }
}

fn check_exponent(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::InvalidParameter(format!("{name} = {v} must be positive and finite")));
    }
    Ok(())
}

fn warn_uncertified<T: Real>(f: &SampledField<T>) {
    if !f.is_certified() {
        log::warn!("Peetre maximal function of a field without band certificate");
    }
}

fn abs_pow<T: Real>(f: &SampledField<T>, r: f64) -> Vec<T> {
    let rt = T::of(r);
    f.values()
        .iter()
        .map(|c| {
            let a = c.norm();
            if r == 1.0 {
                a
            } else {
                a.powf(rt)
            }
        })
        .collect()
}

fn root<T: Real>(v: T, r: f64) -> T {
    if r == 1.0 {
        v
    } else {
        v.powf(T::of(1.0 / r))
    }
}

/// Doubling table of window sums of `|f|^r`.
#[derive(Clone, Debug)]
pub struct WindowLadder<T: Real> {
    grid: GridSpec,
    r: f64,
    sums: Vec<Vec<T>>,
}

impl<T: Real> WindowLadder<T> {
    pub fn new(f: &SampledField<T>, r: f64) -> Result<Self> {
        check_exponent("r", r)?;
        let grid = f.grid();
        let n = grid.n();
        let mut sums = vec![abs_pow(f, r)];
        for j in 0..grid.log2_n() as usize {
            let prev = &sums[j];
            let s = 1usize << j;
            let next: Vec<T> = if grid.dim() == 1 {
                (0..n).map(|a| prev[a] + prev[(a + s) % n]).collect()
            } else {
                (0..n * n)
                    .map(|idx| {
                        let (a0, a1) = (idx / n, idx % n);
                        let b0 = (a0 + s) % n;
                        let b1 = (a1 + s) % n;
                        (prev[idx] + prev[a0 * n + b1]) + (prev[b0 * n + a1] + prev[b0 * n + b1])
                    })
                    .collect()
            };
            sums.push(next);
        }
        Ok(Self { grid, r, sums })
    }

    pub fn levels(&self) -> usize {
        self.sums.len()
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    fn inv_count(&self, j: usize) -> T {
        T::of(pow2(-((j * self.grid.dim()) as i32)))
    }

    /// Average of `|f|^r` over the window of level `j` starting at sample `start`.
    pub fn average(&self, j: usize, start: usize) -> T {
        self.sums[j][start] * self.inv_count(j)
    }

    /// For every sample, the largest level-`j` average over windows containing it.
    pub fn sliding_max(&self, j: usize) -> Vec<T> {
        let n = self.grid.n();
        let w = 1usize << j;
        let inv = self.inv_count(j);
        let avg: Vec<T> = self.sums[j].iter().map(|&s| s * inv).collect();
        if self.grid.dim() == 1 {
            return sliding_max_periodic(&avg, w);
        }
        let mut rows = vec![T::zero(); n * n];
        for r in 0..n {
            let m = sliding_max_periodic(&avg[r * n..(r + 1) * n], w);
            rows[r * n..(r + 1) * n].copy_from_slice(&m);
        }
        let mut out = vec![T::zero(); n * n];
        let mut col = vec![T::zero(); n];
        for c in 0..n {
            for r in 0..n {
                col[r] = rows[r * n + c];
            }
            let m = sliding_max_periodic(&col, w);
            for r in 0..n {
                out[r * n + c] = m[r];
            }
        }
        out
    }

    /// Largest level-`j` average over windows containing sample `idx`.
    pub fn max_containing(&self, j: usize, idx: usize) -> T {
        let n = self.grid.n();
        let w = 1usize << j;
        let m = self.grid.multi_index(idx);
        let mut best = T::zero();
        if self.grid.dim() == 1 {
            for t in 0..w {
                best = best.max(self.sums[j][(m[0] + n - t) % n]);
            }
        } else {
            for t0 in 0..w {
                let a0 = (m[0] + n - t0) % n;
                for t1 in 0..w {
                    best = best.max(self.sums[j][a0 * n + (m[1] + n - t1) % n]);
                }
            }
        }
        best * self.inv_count(j)
    }
}

/// `out[x] = max(src[x - w + 1 ..= x])`, indices mod `len`.
fn sliding_max_periodic<T: Real>(src: &[T], w: usize) -> Vec<T> {
    let n = src.len();
    let w = w.min(n);
    let mut out = vec![T::zero(); n];
    let mut dq: VecDeque<usize> = VecDeque::with_capacity(w + 1);
    // extended positions e = 0 .. n + w - 1 map to src[(e + n - (w - 1)) % n]
    let total = n + w - 1;
    for e in 0..total {
        let v = src[(e + n - (w - 1)) % n];
        while let Some(&b) = dq.back() {
            if src[(b + n - (w - 1)) % n] <= v {
                dq.pop_back();
            } else {
                break;
            }
        }
        dq.push_back(e);
        if e + 1 >= w {
            let first = e + 1 - w;
            while dq.front().is_some_and(|&f| f < first) {
                dq.pop_front();
            }
            out[e + 1 - w] = src[(dq[0] + n - (w - 1)) % n];
        }
    }
    out
}

/// Hardy-Littlewood maximal function `M_r f = (M |f|^r)^(1/r)`.
pub fn hl_maximal<T: Real>(f: &SampledField<T>, r: f64) -> Result<MaximalField<T>> {
    let ladder = WindowLadder::new(f, r)?;
    let mut best = vec![T::zero(); f.grid().len()];
    for j in 0..ladder.levels() {
        for (b, v) in best.iter_mut().zip(ladder.sliding_max(j)) {
            *b = b.max(v);
        }
    }
    Ok(MaximalField {
        grid: f.grid(),
        values: best.into_iter().map(|v| root(v, r)).collect(),
        provenance: Provenance { kind: OperatorKind::HardyLittlewood, r: Some(r), k: None, eps: None, sigma: None },
    })
}

/// `M_r f` at selected samples only.
pub fn hl_maximal_at<T: Real>(ladder: &WindowLadder<T>, points: &[usize]) -> Vec<T> {
    points
        .iter()
        .map(|&idx| {
            let m = (0..ladder.levels()).fold(T::zero(), |m, j| m.max(ladder.max_containing(j, idx)));
            root(m, ladder.r)
        })
        .collect()
}

fn small_window_levels(grid: GridSpec, k: i32) -> Result<usize> {
    if k < grid.coarsest_level() || k > grid.finest_level() {
        return Err(Error::InvalidParameter(format!(
            "scale 2^{} outside [h, L] = [2^{}, 2^{}]",
            -k,
            -grid.finest_level(),
            grid.log2_side()
        )));
    }
    Ok((grid.finest_level() - k) as usize)
}

fn penalty<T: Real>(eps: f64, excess: usize) -> T {
    T::of(2f64.powf(-eps * excess as f64))
}

/// Scale-limited maximal function: the plain supremum over windows of side
/// at most `2^-k` plus the supremum over larger windows damped by `(2^k w)^-eps`.
pub fn scale_limited_maximal<T: Real>(f: &SampledField<T>, r: f64, k: i32, eps: f64) -> Result<MaximalField<T>> {
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must be nonnegative")));
    }
    let jk = small_window_levels(f.grid(), k)?;
    let ladder = WindowLadder::new(f, r)?;
    let n = f.grid().len();
    let mut small = vec![T::zero(); n];
    let mut large = vec![T::zero(); n];
    for j in 0..ladder.levels() {
        let m = ladder.sliding_max(j);
        if j <= jk {
            for (s, v) in small.iter_mut().zip(m) {
                *s = s.max(v);
            }
        } else {
            let p = penalty::<T>(eps, j - jk);
            for (l, v) in large.iter_mut().zip(m) {
                *l = l.max(p * root(v, r));
            }
        }
    }
    Ok(MaximalField {
        grid: f.grid(),
        values: small.into_iter().zip(large).map(|(s, l)| root(s, r) + l).collect(),
        provenance: Provenance { kind: OperatorKind::ScaleLimited, r: Some(r), k: Some(k), eps: Some(eps), sigma: None },
    })
}

/// Scale-limited maximal function at selected samples only.
pub fn scale_limited_at<T: Real>(ladder: &WindowLadder<T>, k: i32, eps: f64, points: &[usize]) -> Result<Vec<T>> {
    let jk = small_window_levels(ladder.grid, k)?;
    Ok(points
        .iter()
        .map(|&idx| {
            let mut small = T::zero();
            let mut large = T::zero();
            for j in 0..ladder.levels() {
                let v = ladder.max_containing(j, idx);
                if j <= jk {
                    small = small.max(v);
                } else {
                    large = large.max(penalty::<T>(eps, j - jk) * root(v, ladder.r));
                }
            }
            root(small, ladder.r) + large
        })
        .collect())
}

/// `(1 + 2^k |y|)^sigma` for every periodic offset `y` (torus distance).
pub fn peetre_denominators<T: Real>(grid: GridSpec, sigma: f64, k: i32) -> Vec<T> {
    let n = grid.n();
    let h = grid.spacing();
    let scale = pow2(k);
    let axis = |o: usize| -> f64 { o.min(n - o) as f64 * h };
    (0..grid.len())
        .map(|o| {
            let m = grid.multi_index(o);
            let d0 = axis(m[0]);
            let d1 = if grid.dim() == 2 { axis(m[1]) } else { 0.0 };
            let y = (d0 * d0 + d1 * d1).sqrt();
            T::of((1.0 + scale * y).powf(sigma))
        })
        .collect()
}

fn shifted(grid: GridSpec, x: usize, o: usize) -> usize {
    let n = grid.n();
    if grid.dim() == 1 {
        (x + n - o) % n
    } else {
        let (x0, x1) = (x / n, x % n);
        let (o0, o1) = (o / n, o % n);
        ((x0 + n - o0) % n) * n + (x1 + n - o1) % n
    }
}

fn check_peetre<T: Real>(f: &SampledField<T>, sigma: f64) -> Result<()> {
    warn_uncertified(f);
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!("sigma = {sigma} must be nonnegative")));
    }
    Ok(())
}

fn peetre_provenance(sigma: f64, k: i32) -> Provenance {
    Provenance { kind: OperatorKind::Peetre, r: None, k: Some(k), eps: None, sigma: Some(sigma) }
}

/// Peetre maximal function `sup_y |f(x - y)| / (1 + 2^k |y|)^sigma`.
///
/// Offsets are visited by increasing weight and the scan stops once no
/// remaining offset can beat the current maximum, so the result equals
/// [`peetre_maximal_direct`] exactly.
pub fn peetre_maximal<T: Real>(f: &SampledField<T>, sigma: f64, k: i32) -> Result<MaximalField<T>> {
    check_peetre(f, sigma)?;
    let grid = f.grid();
    let abs = f.abs();
    let denom = peetre_denominators::<T>(grid, sigma, k);
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| denom[a].partial_cmp(&denom[b]).unwrap().then(a.cmp(&b)));
    let top = abs.iter().fold(T::zero(), |m, &v| m.max(v));
    let values = (0..grid.len())
        .map(|x| {
            let mut best = T::zero();
            if top == T::zero() {
                return best;
            }
            for &o in &order {
                if top / denom[o] < best {
                    break;
                }
                let q = abs[shifted(grid, x, o)] / denom[o];
                if q > best {
                    best = q;
                }
            }
            best
        })
        .collect();
    Ok(MaximalField { grid, values, provenance: peetre_provenance(sigma, k) })
}

/// Peetre maximal function at selected sample indices only.
pub fn peetre_maximal_at<T: Real>(f: &SampledField<T>, sigma: f64, k: i32, points: &[usize]) -> Result<Vec<T>> {
    check_peetre(f, sigma)?;
    let grid = f.grid();
    let abs = f.abs();
    let denom = peetre_denominators::<T>(grid, sigma, k);
    Ok(points
        .iter()
        .map(|&x| (0..grid.len()).fold(T::zero(), |best, o| best.max(abs[shifted(grid, x, o)] / denom[o])))
        .collect())
}

/// Peetre maximal function by exhaustive scan of all offsets.
pub fn peetre_maximal_direct<T: Real>(f: &SampledField<T>, sigma: f64, k: i32) -> Result<MaximalField<T>> {
    check_peetre(f, sigma)?;
    let grid = f.grid();
    let abs = f.abs();
    let denom = peetre_denominators::<T>(grid, sigma, k);
    let values = (0..grid.len())
        .map(|x| {
            (0..grid.len()).fold(T::zero(), |best, o| {
                let q = abs[shifted(grid, x, o)] / denom[o];
                if q > best {
                    q
                } else {
                    best
                }
            })
        })
        .collect();
    Ok(MaximalField { grid, values, provenance: peetre_provenance(sigma, k) })
}

/// Reference implementations that enumerate every window explicitly.
pub mod brute {
    use super::*;

    // sum over the window by repeated halving, matching the doubling tree
    fn window_sum<T: Real>(vals: &[T], grid: GridSpec, j: usize, start: [usize; 2]) -> T {
        let n = grid.n();
        if j == 0 {
            return vals[grid.flat(start)];
        }
        let s = 1usize << (j - 1);
        let a = start;
        if grid.dim() == 1 {
            window_sum(vals, grid, j - 1, a) + window_sum(vals, grid, j - 1, [(a[0] + s) % n, 0])
        } else {
            let b0 = (a[0] + s) % n;
            let b1 = (a[1] + s) % n;
            (window_sum(vals, grid, j - 1, a) + window_sum(vals, grid, j - 1, [a[0], b1]))
                + (window_sum(vals, grid, j - 1, [b0, a[1]]) + window_sum(vals, grid, j - 1, [b0, b1]))
        }
    }

    /// Sequential left-to-right window sum, for checks on general data.
    pub fn sequential_window_sum<T: Real>(vals: &[T], grid: GridSpec, j: usize, start: [usize; 2]) -> T {
        let n = grid.n();
        let w = 1usize << j;
        let mut s = T::zero();
        if grid.dim() == 1 {
            for t in 0..w {
                s = s + vals[(start[0] + t) % n];
            }
        } else {
            for t0 in 0..w {
                for t1 in 0..w {
                    s = s + vals[((start[0] + t0) % n) * n + (start[1] + t1) % n];
                }
            }
        }
        s
    }

    /// Level-`j` averages of every window containing each sample, maximised.
    fn level_max<T: Real>(vals: &[T], grid: GridSpec, j: usize, x: usize, sequential: bool) -> T {
        let n = grid.n();
        let w = 1usize << j;
        let m = grid.multi_index(x);
        let count = T::of(pow2((j * grid.dim()) as i32));
        let mut best = T::zero();
        let t1max = if grid.dim() == 2 { w } else { 1 };
        for t0 in 0..w {
            for t1 in 0..t1max {
                let start = [(m[0] + n - t0) % n, if grid.dim() == 2 { (m[1] + n - t1) % n } else { 0 }];
                let s = if sequential {
                    sequential_window_sum(vals, grid, j, start)
                } else {
                    window_sum(vals, grid, j, start)
                };
                best = best.max(s / count);
            }
        }
        best
    }

    /// Hardy-Littlewood maximal function by enumeration. With `sequential`
    /// the window sums are accumulated left to right instead of pairwise.
    pub fn hl_maximal<T: Real>(f: &SampledField<T>, r: f64, sequential: bool) -> Vec<T> {
        let grid = f.grid();
        let vals = abs_pow(f, r);
        (0..grid.len())
            .map(|x| {
                let m = (0..=grid.log2_n() as usize).fold(T::zero(), |m, j| m.max(level_max(&vals, grid, j, x, sequential)));
                root(m, r)
            })
            .collect()
    }

    pub fn scale_limited_maximal<T: Real>(f: &SampledField<T>, r: f64, k: i32, eps: f64, sequential: bool) -> Result<Vec<T>> {
        let grid = f.grid();
        let jk = small_window_levels(grid, k)?;
        let vals = abs_pow(f, r);
        Ok((0..grid.len())
            .map(|x| {
                let mut small = T::zero();
                let mut large = T::zero();
                for j in 0..=grid.log2_n() as usize {
                    let v = level_max(&vals, grid, j, x, sequential);
                    if j <= jk {
                        small = small.max(v);
                    } else {
                        large = large.max(penalty::<T>(eps, j - jk) * root(v, r));
                    }
                }
                root(small, r) + large
            })
            .collect())
    }
}
