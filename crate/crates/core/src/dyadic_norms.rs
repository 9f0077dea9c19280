//! Dyadic cubes, local shell averages and the sequence-space norms built
//! from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp_decomposition::{Decomposer, ScaleSequence};
use crate::real::{extended_float, pow2, Real};
use crate::sample_grid::{lp_norm_of, GridSpec, SampledField};

/// The cube `2^-level (index + [0, 1)^d)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    pub level: i32,
    pub index: [i64; 2],
    pub dim: u8,
}

impl DyadicCube {
    pub fn new(dim: usize, level: i32, index: [i64; 2]) -> Self {
        Self { level, index: if dim == 1 { [index[0], 0] } else { index }, dim: dim as u8 }
    }

    pub fn side(&self) -> f64 {
        pow2(-self.level)
    }

    pub fn volume(&self) -> f64 {
        self.side().powi(self.dim as i32)
    }

    pub fn corner(&self) -> [f64; 2] {
        [self.index[0] as f64 * self.side(), self.index[1] as f64 * self.side()]
    }

    pub fn parent(&self) -> Self {
        Self { level: self.level - 1, index: [self.index[0] >> 1, self.index[1] >> 1], dim: self.dim }
    }

    /// True when `other` lies inside `self`.
    pub fn contains(&self, other: &DyadicCube) -> bool {
        if other.level < self.level || other.dim != self.dim {
            return false;
        }
        let shift = other.level - self.level;
        (other.index[0] >> shift) == self.index[0] && (other.index[1] >> shift) == self.index[1]
    }

    /// The cube of this level containing sample `idx` of `grid`.
    pub fn containing(grid: GridSpec, level: i32, idx: usize) -> Self {
        let m = grid.multi_index(idx);
        let shift = grid.finest_level() - level;
        Self::new(grid.dim(), level, [(m[0] >> shift) as i64, (m[1] >> shift) as i64])
    }

    /// Cubes of `level` tiling the torus of `grid`, row-major.
    pub fn tiling(grid: GridSpec, level: i32) -> Result<Vec<Self>> {
        check_level(grid, level)?;
        let per_axis = 1i64 << (level - grid.coarsest_level());
        let mut out = Vec::new();
        for a in 0..per_axis {
            if grid.dim() == 1 {
                out.push(Self::new(1, level, [a, 0]));
            } else {
                for b in 0..per_axis {
                    out.push(Self::new(2, level, [a, b]));
                }
            }
        }
        Ok(out)
    }

    /// Flat sample indices inside the cube.
    pub fn samples(&self, grid: GridSpec) -> Result<Vec<usize>> {
        check_level(grid, self.level)?;
        let per_axis = 1i64 << (self.level - grid.coarsest_level());
        if self.index.iter().take(grid.dim()).any(|&i| i < 0 || i >= per_axis) {
            return Err(Error::InvalidParameter(format!("cube {self:?} lies outside the torus")));
        }
        let w = 1usize << (grid.finest_level() - self.level);
        let s0 = self.index[0] as usize * w;
        let s1 = self.index[1] as usize * w;
        let mut out = Vec::with_capacity(w.pow(grid.dim() as u32));
        for a in 0..w {
            if grid.dim() == 1 {
                out.push(s0 + a);
            } else {
                for b in 0..w {
                    out.push(grid.flat([s0 + a, s1 + b]));
                }
            }
        }
        Ok(out)
    }
}

fn check_level(grid: GridSpec, level: i32) -> Result<()> {
    if level < grid.coarsest_level() || level > grid.finest_level() {
        return Err(Error::InvalidParameter(format!(
            "cube level {level} outside [{}, {}]",
            grid.coarsest_level(),
            grid.finest_level()
        )));
    }
    Ok(())
}

fn check_exponent(name: &str, v: f64, allow_inf: bool) -> Result<()> {
    if v > 0.0 && (v.is_finite() || allow_inf) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {v} out of range")))
    }
}

/// `(|P|^-1 int_P sum_(k >= level P) 2^(s k q) |f_k|^q)^(1/q)`.
pub fn local_avg<T: Real>(cube: &DyadicCube, seq: &ScaleSequence<T>, q: f64, s: f64) -> Result<T> {
    check_exponent("q", q, false)?;
    if cube.level < seq.base() {
        return Err(Error::InvalidParameter(format!(
            "cube level {} is coarser than the first scale {}",
            cube.level,
            seq.base()
        )));
    }
    let grid = seq.grid();
    let idx = cube.samples(grid)?;
    let qt = T::of(q);
    let mut acc = T::zero();
    for (k, f) in seq.iter() {
        if k < cube.level {
            continue;
        }
        let w = T::of(2f64.powf(s * k as f64 * q));
        let vals = f.values();
        let mut part = T::zero();
        for &i in &idx {
            part = part + vals[i].norm().powf(qt);
        }
        acc = acc + w * part;
    }
    let integral = acc * T::of(grid.cell_volume());
    Ok((integral / T::of(cube.volume())).powf(T::one() / qt))
}

/// Which norm a report describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    LocalSup,
    TriebelLizorkin,
    Besov,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub kind: NormKind,
    pub s: f64,
    #[serde(with = "extended_float")]
    pub p: f64,
    #[serde(with = "extended_float")]
    pub q: f64,
    pub homogeneous: bool,
    pub k_lo: i32,
    pub k_hi: i32,
    pub mu: Option<i32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeValue {
    pub cube: DyadicCube,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub value: f64,
    pub maximizer: Option<DyadicCube>,
    pub params: NormParams,
    pub table: Option<Vec<CubeValue>>,
}

impl NormReport {
    pub fn csv_header() -> &'static str {
        "kind,s,p,q,homogeneous,k_lo,k_hi,value"
    }

    pub fn csv_row(&self) -> String {
        let p = &self.params;
        format!(
            "{:?},{},{},{},{},{},{},{}",
            p.kind, p.s, p.p, p.q, p.homogeneous, p.k_lo, p.k_hi, self.value
        )
    }
}

/// Per-sample contributions `w_k |f_k|^q h^d` of one shell.
struct Contribution<T> {
    k: i32,
    vals: Vec<T>,
}

struct CubeScan<T> {
    best: T,
    arg: Option<DyadicCube>,
    table: Vec<CubeValue>,
}

// Sums children pairwise, first axis slowest, so each parent is
// (c00 + c01) + (c10 + c11).
fn coarsen<T: Real>(vals: &[T], dim: usize, side: usize) -> Vec<T> {
    let half = side / 2;
    if dim == 1 {
        (0..half).map(|a| vals[2 * a] + vals[2 * a + 1]).collect()
    } else {
        let mut out = Vec::with_capacity(half * half);
        for a in 0..half {
            for b in 0..half {
                let r0 = 2 * a * side;
                let r1 = (2 * a + 1) * side;
                out.push((vals[r0 + 2 * b] + vals[r0 + 2 * b + 1]) + (vals[r1 + 2 * b] + vals[r1 + 2 * b + 1]));
            }
        }
        out
    }
}

// Aggregates from samples up to the cube level, bottom-up.
fn aggregate<T: Real>(vals: &[T], grid: GridSpec, level: i32) -> Vec<T> {
    let mut cur = vals.to_vec();
    let mut side = grid.n();
    for _ in level..grid.finest_level() {
        cur = coarsen(&cur, grid.dim(), side);
        side /= 2;
    }
    cur
}

/// Sup over cubes of levels `min_level ..= finest` of
/// `(|P|^-1 sum_(k >= level P) contributions)^(1/q)`.
fn scan_cubes<T: Real>(grid: GridSpec, shells: &[Contribution<T>], min_level: i32, q: f64, keep: bool) -> Result<CubeScan<T>> {
    check_level(grid, min_level)?;
    let top = grid.finest_level();
    let dim = grid.dim();
    let mut acc = vec![T::zero(); grid.len()];
    let mut side = grid.n();
    let mut scan = CubeScan { best: T::zero(), arg: None, table: Vec::new() };
    let inv_q = T::one() / T::of(q);
    for level in (min_level..=top).rev() {
        if level < top {
            acc = coarsen(&acc, dim, side);
            side /= 2;
        }
        for c in shells {
            let lands_here = if level == top { c.k >= top } else { c.k == level };
            if lands_here {
                for (a, v) in acc.iter_mut().zip(aggregate(&c.vals, grid, level)) {
                    *a = *a + v;
                }
            }
        }
        let vol = T::of(pow2(-level * dim as i32));
        for (i, &a) in acc.iter().enumerate() {
            let v = (a / vol).powf(inv_q);
            let cube = if dim == 1 {
                DyadicCube::new(1, level, [i as i64, 0])
            } else {
                DyadicCube::new(2, level, [(i / side) as i64, (i % side) as i64])
            };
            if keep {
                scan.table.push(CubeValue { cube, value: v.f64() });
            }
            if v > scan.best || scan.arg.is_none() {
                scan.best = v;
                scan.arg = Some(cube);
            }
        }
    }
    Ok(scan)
}

fn contributions<T: Real>(shells: &[(i32, &SampledField<T>)], q: f64, s: f64, grid: GridSpec) -> Vec<Contribution<T>> {
    let qt = T::of(q);
    let h = grid.cell_volume();
    shells
        .iter()
        .map(|(k, f)| {
            let w = T::of(2f64.powf(s * *k as f64 * q) * h);
            Contribution { k: *k, vals: f.values().iter().map(|c| w * c.norm().powf(qt)).collect() }
        })
        .collect()
}

/// `sup_(l(P) <= 2^-mu)` of the local averages of `seq` (no smoothness weight).
pub fn v_norm<T: Real>(seq: &ScaleSequence<T>, mu: i32, q: f64) -> Result<NormReport> {
    v_norm_impl(seq, mu, q, false)
}

/// Same as [`v_norm`] with the value of every cube kept in `table`.
pub fn v_norm_with_table<T: Real>(seq: &ScaleSequence<T>, mu: i32, q: f64) -> Result<NormReport> {
    v_norm_impl(seq, mu, q, true)
}

fn v_norm_impl<T: Real>(seq: &ScaleSequence<T>, mu: i32, q: f64, keep: bool) -> Result<NormReport> {
    check_exponent("q", q, false)?;
    if mu < seq.base() {
        return Err(Error::InvalidParameter(format!("mu = {mu} below the first scale {}", seq.base())));
    }
    let grid = seq.grid();
    let shells: Vec<(i32, &SampledField<T>)> = seq.iter().filter(|(k, _)| *k >= mu).collect();
    let scan = scan_cubes(grid, &contributions(&shells, q, 0.0, grid), mu, q, keep)?;
    Ok(NormReport {
        value: scan.best.f64(),
        maximizer: scan.arg,
        params: NormParams {
            kind: NormKind::LocalSup,
            s: 0.0,
            p: f64::INFINITY,
            q,
            homogeneous: true,
            k_lo: mu,
            k_hi: seq.top(),
            mu: Some(mu),
        },
        table: keep.then_some(scan.table),
    })
}

/// Inclusive range of Littlewood-Paley shells entering a norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShellRange {
    pub k_lo: i32,
    pub k_hi: i32,
}

impl ShellRange {
    /// Every shell the grid resolves: from the torus scale (or 0) up to `log2(N / 4L)`.
    pub fn full(grid: GridSpec, homogeneous: bool) -> Self {
        let k_lo = if homogeneous { grid.coarsest_level() } else { 0 };
        Self { k_lo, k_hi: grid.max_shell() }
    }
}

fn shells_of<T: Real>(f: &SampledField<T>, homogeneous: bool, range: ShellRange) -> Result<Vec<(i32, SampledField<T>)>> {
    if range.k_hi < range.k_lo {
        return Err(Error::InvalidParameter(format!("empty shell range {range:?}")));
    }
    if !homogeneous && range.k_lo < 0 {
        return Err(Error::InvalidParameter("inhomogeneous shells start at 0".into()));
    }
    let dec = Decomposer::new(f);
    (range.k_lo..=range.k_hi)
        .map(|k| {
            let piece = if homogeneous { dec.shell(k)? } else { dec.inhomog_shell(k)? };
            Ok((k, piece))
        })
        .collect()
}

/// Triebel-Lizorkin type norm of `f` over the shells in `range`.
///
/// For `p < inf` this is the `L^p` norm of the pointwise `l^q` sum. For
/// `p = inf` and `q < inf` it is the supremum of local averages over dyadic
/// cubes (inhomogeneous: `|Lambda_0 f|_inf` plus cubes of side below 1).
pub fn f_norm<T: Real>(f: &SampledField<T>, s: f64, p: f64, q: f64, homogeneous: bool, range: ShellRange) -> Result<NormReport> {
    check_exponent("p", p, true)?;
    check_exponent("q", q, true)?;
    let grid = f.grid();
    let shells = shells_of(f, homogeneous, range)?;
    let params = NormParams { kind: NormKind::TriebelLizorkin, s, p, q, homogeneous, k_lo: range.k_lo, k_hi: range.k_hi, mu: None };
    let weight = |k: i32| 2f64.powf(s * k as f64);

    if p.is_finite() || q.is_infinite() {
        let mut g = vec![T::zero(); grid.len()];
        for (k, piece) in &shells {
            let w = T::of(weight(*k));
            for (acc, c) in g.iter_mut().zip(piece.values()) {
                let v = w * c.norm();
                *acc = if q.is_infinite() { acc.max(v) } else { *acc + v.powf(T::of(q)) };
            }
        }
        if q.is_finite() {
            let inv = T::one() / T::of(q);
            for v in &mut g {
                *v = v.powf(inv);
            }
        }
        let value = lp_norm_of(&g, grid, p).f64();
        return Ok(NormReport { value, maximizer: None, params, table: None });
    }

    let refs: Vec<(i32, &SampledField<T>)> = shells.iter().map(|(k, f)| (*k, f)).collect();
    if homogeneous {
        let scan = scan_cubes(grid, &contributions(&refs, q, s, grid), grid.coarsest_level(), q, false)?;
        return Ok(NormReport { value: scan.best.f64(), maximizer: scan.arg, params, table: None });
    }
    if grid.finest_level() < 1 {
        return Err(Error::InvalidParameter("grid has no cubes of side below 1".into()));
    }
    let base = shells[0].1.max_abs().f64();
    let upper: Vec<(i32, &SampledField<T>)> = refs.into_iter().filter(|(k, _)| *k >= 1).collect();
    let scan = scan_cubes(grid, &contributions(&upper, q, s, grid), 1, q, false)?;
    Ok(NormReport { value: base + scan.best.f64(), maximizer: scan.arg, params, table: None })
}

/// Besov type norm: `l^q` over shells of `2^(sk) |f_k|_p`.
pub fn besov_norm<T: Real>(f: &SampledField<T>, s: f64, p: f64, q: f64, homogeneous: bool, range: ShellRange) -> Result<NormReport> {
    check_exponent("p", p, true)?;
    check_exponent("q", q, true)?;
    let shells = shells_of(f, homogeneous, range)?;
    let terms: Vec<f64> = shells.iter().map(|(k, piece)| 2f64.powf(s * *k as f64) * piece.lp_norm(p).f64()).collect();
    let value = if q.is_infinite() {
        terms.iter().copied().fold(0.0, f64::max)
    } else {
        terms.iter().map(|t| t.powf(q)).sum::<f64>().powf(1.0 / q)
    };
    Ok(NormReport {
        value,
        maximizer: None,
        params: NormParams { kind: NormKind::Besov, s, p, q, homogeneous, k_lo: range.k_lo, k_hi: range.k_hi, mu: None },
        table: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp_decomposition::project;
    use num_complex::Complex;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sequence(grid: GridSpec, base: i32, top: i32, seed: u64) -> ScaleSequence<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = SampledField::from_fn(grid, |_| {
            Complex::new(rng.sample(rand_distr::StandardNormal), rng.sample(rand_distr::StandardNormal))
        });
        let fields = (base..=top).map(|k| project(&raw, k).unwrap()).collect();
        ScaleSequence::new(base, 1.0, fields).unwrap()
    }

    #[test]
    fn cube_geometry() {
        let g = GridSpec::new(2, 1, 16).unwrap();
        let c = DyadicCube::new(2, 1, [2, 3]);
        assert_eq!(c.side(), 0.5);
        assert!(c.parent().contains(&c));
        assert!(!c.contains(&c.parent()));
        assert_eq!(c.samples(g).unwrap().len(), 16);
        assert_eq!(DyadicCube::tiling(g, -1).unwrap().len(), 1);
        assert_eq!(DyadicCube::containing(g, 1, g.flat([9, 14])), c);
    }

    #[test]
    fn v_norm_matches_enumeration() {
        for dim in [1, 2] {
            let n = if dim == 1 { 256 } else { 32 };
            let g = GridSpec::new(dim, 0, n).unwrap();
            let seq = random_sequence(g, 0, g.max_shell(), 4);
            for q in [1.0, 2.5] {
                for mu in [0, 1, 2] {
                    let rep = v_norm_with_table(&seq, mu, q).unwrap();
                    let mut best: f64 = 0.0;
                    for entry in rep.table.as_ref().unwrap() {
                        let direct = local_avg(&entry.cube, &seq, q, 0.0).unwrap();
                        assert!((direct - entry.value).abs() <= 1e-12 * direct.max(1e-300), "{:?}", entry.cube);
                        best = best.max(direct);
                    }
                    assert!((best - rep.value).abs() <= 1e-12 * best);
                }
            }
        }
    }

    #[test]
    fn v_norm_rejects_coarse_mu() {
        let g = GridSpec::new(1, 0, 64).unwrap();
        let seq = random_sequence(g, 1, 3, 1);
        assert!(v_norm(&seq, 0, 2.0).is_err());
        assert!(local_avg(&DyadicCube::new(1, 0, [0, 0]), &seq, 2.0, 0.0).is_err());
    }

    #[test]
    fn f_norm_p_inf_q_inf_is_shell_sup() {
        let g = GridSpec::new(1, 0, 128).unwrap();
        let f = random_sequence(g, 3, 3, 2).get(3).unwrap().clone();
        let range = ShellRange::full(g, true);
        let rep = f_norm(&f, 0.0, f64::INFINITY, f64::INFINITY, true, range).unwrap();
        let dec = Decomposer::new(&f);
        let want = (range.k_lo..=range.k_hi).map(|k| dec.shell(k).unwrap().max_abs()).fold(0.0, f64::max);
        assert_eq!(rep.value, want);
    }

    #[test]
    fn f_and_b_agree_when_p_equals_q() {
        let g = GridSpec::new(1, 0, 256).unwrap();
        let f = random_sequence(g, 0, 0, 3).get(0).unwrap().clone();
        let f = SampledField::new(g, f.values().to_vec()).unwrap();
        let range = ShellRange::full(g, false);
        let a = f_norm(&f, 0.5, 2.0, 2.0, false, range).unwrap().value;
        let b = besov_norm(&f, 0.5, 2.0, 2.0, false, range).unwrap().value;
        assert!((a - b).abs() <= 1e-12 * b);
    }

    #[test]
    fn inhomogeneous_sup_needs_fine_cubes() {
        let g = GridSpec::new(1, 3, 8).unwrap();
        let f = SampledField::<f64>::zeros(g);
        assert!(f_norm(&f, 0.0, f64::INFINITY, 2.0, false, ShellRange { k_lo: 0, k_hi: 0 }).is_err());
    }
}
