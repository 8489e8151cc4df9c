//! One-sided and tolerant testers built on block partitions.
//!
//! Grid testers see `f : [n]^d -> {0, 1}` as a query closure returning
//! `true` for 1. Distribution-free testers see `f : R^d -> {-1, +1}` and read
//! `+1` as 1. Every tester whose class contains `f` accepts on every seed.

use std::cell::Cell;
use std::collections::HashSet;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bbs::{min_r_for_epsilon, ResolutionRule};
use crate::blockgrid::{
    induce_augmented_partition, induce_partition, round_up_to_multiple, CellKind, ExtremeView, Partition,
};
use crate::concepts::BooleanFn;
use crate::error::{param, Error, Result};
use crate::geometry::{hull_2d_vertices, Hull};
use crate::grid::GridShape;
use crate::learners::uniform_grid_size;
use crate::product_dist::{augment, sample_point, ProductDistribution};
use crate::rng::Stream;
use crate::stats::ceil_usize;

/// Outcome of one sub-test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubTest {
    pub name: String,
    pub accept: bool,
    pub queries: usize,
    pub samples: usize,
    /// Failure probability the sub-test is sized for.
    pub fail_prob: f64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestVerdict {
    pub accept: bool,
    /// Queries to `f`.
    pub queries: usize,
    /// Draws from the distribution, grid samples included.
    pub samples: usize,
    pub subtests: Vec<SubTest>,
    /// Seed of the stream the tester ran on, when the caller knows it.
    pub seed: Option<u64>,
    /// Query log, filled when recording is enabled.
    pub log: Vec<String>,
}

impl TestVerdict {
    fn from_subtests(subtests: Vec<SubTest>, extra_samples: usize, log: Vec<String>) -> Self {
        TestVerdict {
            accept: subtests.iter().all(|s| s.accept),
            queries: subtests.iter().map(|s| s.queries).sum(),
            samples: extra_samples + subtests.iter().map(|s| s.samples).sum::<usize>(),
            subtests,
            seed: None,
            log,
        }
    }

    /// Line-oriented transcript: queries first, then sub-tests, then the verdict.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(s) = self.seed {
            let _ = writeln!(out, "seed {s}");
        }
        for l in &self.log {
            let _ = writeln!(out, "query {l}");
        }
        for s in &self.subtests {
            let _ = writeln!(
                out,
                "subtest {} {} queries={} samples={} fail_prob={} {}",
                s.name,
                if s.accept { "accept" } else { "reject" },
                s.queries,
                s.samples,
                s.fail_prob,
                s.note
            );
        }
        let _ = writeln!(
            out,
            "verdict {} queries={} samples={}",
            if self.accept { "accept" } else { "reject" },
            self.queries,
            self.samples
        );
        out
    }
}

/// Counts queries and optionally logs them.
struct Recorder {
    queries: Cell<usize>,
    log: Option<std::cell::RefCell<Vec<String>>>,
}

impl Recorder {
    fn new(record: bool) -> Self {
        Recorder {
            queries: Cell::new(0),
            log: record.then(|| std::cell::RefCell::new(Vec::new())),
        }
    }

    fn note(&self, what: impl FnOnce() -> String) {
        self.queries.set(self.queries.get() + 1);
        if let Some(l) = &self.log {
            l.borrow_mut().push(what());
        }
    }

    fn take(&self) -> usize {
        self.queries.replace(0)
    }

    fn into_log(self) -> Vec<String> {
        self.log.map(|l| l.into_inner()).unwrap_or_default()
    }
}

/// Leading constants of the testers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TesterConstants {
    /// Identity test samples: `c ln 6 / eps_sub`.
    pub identity_const: f64,
    /// Comparable pairs for the monotonicity subroutine: `c d r / eps_sub`.
    pub pair_const: f64,
    /// Grid-uniformity constant for induced partitions.
    pub grid_const: f64,
    /// Draws allowed per accepted sample when conditioning on interior cells.
    pub rejection_cap: usize,
    pub record_queries: bool,
}

impl Default for TesterConstants {
    fn default() -> Self {
        TesterConstants {
            identity_const: 1.0,
            pair_const: 1.0,
            grid_const: 1.0,
            rejection_cap: 10,
            record_queries: false,
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return param(format!("epsilon must lie in (0, 1), got {eps}"));
    }
    Ok(())
}

/// `k = ceil(log2(4 / eps))` rounds with `p_i` anchor points and `q_i` points per diagonal.
pub fn diagonal_schedule(eps: f64) -> Vec<(usize, usize)> {
    let k = ceil_usize((4.0 / eps).log2()).max(1);
    (1..=k)
        .map(|i| {
            let p = ceil_usize(k as f64 / (eps * 2f64.powi(i as i32 - 2)) * 6f64.ln());
            let q = ceil_usize(2f64.powi(i as i32 + 2) * 12f64.ln());
            (p, q)
        })
        .collect()
}

fn diagonal_core(f: &dyn Fn(&[usize]) -> bool, n: usize, d: usize, eps: f64, rng: &mut Stream) -> (bool, usize, String) {
    let mut draws = 0;
    let mut x = vec![0usize; d];
    let mut y = vec![0usize; d];
    for (round, (p, q)) in diagonal_schedule(eps).into_iter().enumerate() {
        for _ in 0..p {
            for xi in x.iter_mut() {
                *xi = rng.random_range(0..n);
            }
            draws += 1;
            let lo = *x.iter().min().unwrap();
            let hi = *x.iter().max().unwrap();
            // x + lambda 1 stays in the grid for lambda in [-lo, n - 1 - hi]
            let span = lo + (n - 1 - hi);
            let mut ones: HashSet<usize> = HashSet::new();
            for _ in 0..q {
                let shift = rng.random_range(0..=span);
                for (yi, xi) in y.iter_mut().zip(&x) {
                    *yi = xi + shift - lo;
                }
                if f(&y) {
                    ones.insert(shift);
                    if ones.len() >= 2 {
                        return (false, draws, format!("round {} diagonal of {:?}", round + 1, x));
                    }
                }
            }
        }
    }
    (true, draws, String::new())
}

/// One-sided tester for diagonal functions: at most one 1 on every diagonal `{x + lambda 1}`.
pub fn diagonal_test(f: &dyn Fn(&[usize]) -> bool, n: usize, d: usize, eps: f64, rng: &mut Stream) -> Result<TestVerdict> {
    check_eps(eps)?;
    if n == 0 || d == 0 {
        return param("diagonal test needs n, d > 0");
    }
    let rec = Recorder::new(false);
    let g = |x: &[usize]| {
        rec.note(String::new);
        f(x)
    };
    let (accept, draws, note) = diagonal_core(&g, n, d, eps, rng);
    let sub = SubTest {
        name: "diagonal".into(),
        accept,
        queries: rec.take(),
        samples: draws,
        fail_prob: 1.0 / 3.0,
        note,
    };
    Ok(TestVerdict::from_subtests(vec![sub], 0, vec![]))
}

/// Pair tester for monotonicity of `h` on `[r]^d`: samples comparable pairs
/// `u <= v`, half along one axis and half in general position, and rejects
/// on `h(u) = 1, h(v) = 0`.
fn pair_monotonicity(h: &dyn Fn(&[usize]) -> bool, r: usize, d: usize, pairs: usize, rng: &mut Stream) -> (bool, String) {
    let mut u = vec![0usize; d];
    let mut v = vec![0usize; d];
    for t in 0..pairs {
        for ui in u.iter_mut() {
            *ui = rng.random_range(0..r);
        }
        v.copy_from_slice(&u);
        if t % 2 == 0 {
            let i = rng.random_range(0..d);
            v[i] = rng.random_range(u[i]..r);
        } else {
            for (vi, &ui) in v.iter_mut().zip(&u) {
                *vi = rng.random_range(ui..r);
            }
        }
        if u != v && h(&u) && !h(&v) {
            return (false, format!("violation {u:?} <= {v:?}"));
        }
    }
    (true, String::new())
}

pub fn pair_count(c: f64, d: usize, r: usize, eps: f64) -> usize {
    ceil_usize(c * d as f64 * r as f64 / eps).max(1)
}

pub fn identity_samples(c: f64, eps: f64) -> usize {
    ceil_usize(c * 6f64.ln() / eps).max(1)
}

/// Monotonicity tester on `[n]^d`. `f` must be non-decreasing in every
/// coordinate to be accepted; `n` is padded to a multiple of `r` by clamping.
pub fn grid_monotonicity_test(
    f: &dyn Fn(&[usize]) -> bool,
    n: usize,
    d: usize,
    eps: f64,
    c: &TesterConstants,
    rng: &mut Stream,
) -> Result<TestVerdict> {
    check_eps(eps)?;
    if n == 0 || d == 0 {
        return param("monotonicity test needs n, d > 0");
    }
    let r = min_r_for_epsilon(ResolutionRule::GridMonotonicity, d, 1, eps)?;
    let np = round_up_to_multiple(n, r);
    let s = np / r;
    let rec = Recorder::new(c.record_queries);
    let fq = |x: &[usize]| {
        let xc: Vec<usize> = x.iter().map(|&v| v.min(n - 1)).collect();
        let out = f(&xc);
        rec.note(|| format!("{xc:?} -> {}", out as u8));
        out
    };
    let corner = |v: &[usize], up: bool| -> Vec<usize> { v.iter().map(|&vi| vi * s + if up { s - 1 } else { 0 }).collect() };
    let fblock = |v: &[usize]| fq(&corner(v, false));
    let boundary = |v: &[usize]| fq(&corner(v, false)) != fq(&corner(v, true));
    let mut subs = Vec::new();

    // (i) f = g on [n']^d
    let m = identity_samples(c.identity_const, eps / 4.0);
    let mut ok = true;
    let mut note = String::new();
    let mut x = vec![0usize; d];
    for _ in 0..m {
        for xi in x.iter_mut() {
            *xi = rng.random_range(0..np);
        }
        let v: Vec<usize> = x.iter().map(|&xi| xi / s).collect();
        let lo = fq(&corner(&v, false));
        let hi = fq(&corner(&v, true));
        if lo == hi && fq(&x) != lo {
            ok = false;
            note = format!("f{x:?} differs from its block corners");
            break;
        }
    }
    subs.push(SubTest {
        name: "identity".into(),
        accept: ok,
        queries: rec.take(),
        samples: m,
        fail_prob: 1.0 / 6.0,
        note,
    });

    // (ii) boundary indicator is diagonal
    let (ok, draws, note) = diagonal_core(&|v: &[usize]| boundary(v), r, d, eps / 4.0, rng);
    subs.push(SubTest {
        name: "diagonal".into(),
        accept: ok,
        queries: rec.take(),
        samples: draws,
        fail_prob: 1.0 / 3.0,
        note,
    });

    // (iii) h is monotone
    let pairs = pair_count(c.pair_const, d, r, eps / 4.0);
    let h = |v: &[usize]| !boundary(v) && fblock(v);
    let (ok, note) = pair_monotonicity(&h, r, d, pairs, rng);
    subs.push(SubTest {
        name: "pairs".into(),
        accept: ok,
        queries: rec.take(),
        samples: pairs,
        fail_prob: 1.0 / 3.0,
        note,
    });
    Ok(TestVerdict::from_subtests(subs, 0, rec.into_log()))
}

/// Grid size for the distribution-free monotonicity tester: uniformity
/// `eps / 8` of the `(r + 2)`-partition with probability 5/6.
pub fn df_grid_size(d: usize, eps: f64, c: &TesterConstants) -> Result<usize> {
    let r = min_r_for_epsilon(ResolutionRule::DfMonotonicity, d, 1, eps)?;
    Ok(uniform_grid_size(r + 2, d, eps / 8.0, 1.0 / 6.0, c.grid_const))
}

fn induce_for(dist: &ProductDistribution, m: usize, r: usize, rng: &mut Stream) -> Result<Partition> {
    let pts: Vec<Vec<f64>> = (0..m).map(|_| sample_point(dist, rng)).collect();
    if dist.has_finite() {
        let aug: Vec<_> = pts.iter().map(|x| augment(x, rng)).collect();
        Ok(induce_augmented_partition(&aug, r, rng)?.into())
    } else {
        Ok(induce_partition(&pts, r, rng)?.into())
    }
}

/// Distribution-free monotonicity tester under a product distribution.
/// Finite components are handled through an augmented partition.
/// `grid_m` overrides the grid size (rounded up to a multiple of `r + 2`).
pub fn df_monotonicity_test(
    f: &dyn BooleanFn,
    dist: &ProductDistribution,
    eps: f64,
    grid_m: Option<usize>,
    c: &TesterConstants,
    rng: &mut Stream,
) -> Result<TestVerdict> {
    check_eps(eps)?;
    dist.validate()?;
    let d = dist.dims();
    let r = min_r_for_epsilon(ResolutionRule::DfMonotonicity, d, 1, eps)?;
    let big = r + 2;
    let m = match grid_m {
        Some(m) => round_up_to_multiple(m.max(big), big),
        None => df_grid_size(d, eps, c)?,
    };
    let p = induce_for(dist, m, big, rng)?;
    let view = ExtremeView::new(&p)?;
    let rec = Recorder::new(c.record_queries);
    let fq = |x: &[f64]| {
        let out = f.eval(x) > 0;
        rec.note(|| format!("{x:?} -> {}", out as u8));
        out
    };
    let corner_vals = |v: &[usize]| {
        let (lo, hi) = view.corners(v);
        (fq(&lo), fq(&hi))
    };
    let mut subs = Vec::new();

    // (i) f = g on interior cells, by rejection sampling
    let want = identity_samples(c.identity_const, eps / 8.0);
    let cap = want * c.rejection_cap;
    let (mut accepted, mut drawn) = (0, 0);
    let mut ok = true;
    let mut note = String::new();
    let mut tag = vec![0.0; d];
    while accepted < want && ok {
        if drawn == cap {
            return Err(Error::Exhausted { drawn, accepted });
        }
        drawn += 1;
        let x = sample_point(dist, rng);
        let cell = if p.is_augmented() {
            for t in tag.iter_mut() {
                *t = rng.random::<f64>();
            }
            p.locate(&x, Some(&tag))?
        } else {
            p.locate(&x, None)?
        };
        let CellKind::Interior(v) = view.classify(&cell) else {
            continue;
        };
        accepted += 1;
        let (lo, hi) = corner_vals(&v);
        if lo == hi && fq(&x) != lo {
            ok = false;
            note = format!("f{x:?} differs from its block corners");
        }
    }
    subs.push(SubTest {
        name: "identity".into(),
        accept: ok,
        queries: rec.take(),
        samples: drawn,
        fail_prob: 1.0 / 6.0,
        note: if note.is_empty() {
            format!("accepted {accepted} of {drawn} draws")
        } else {
            note
        },
    });

    let boundary = |v: &[usize]| {
        let (lo, hi) = corner_vals(v);
        lo != hi
    };
    let (ok, draws, note) = diagonal_core(&|v: &[usize]| boundary(v), r, d, eps / 16.0, rng);
    subs.push(SubTest {
        name: "diagonal".into(),
        accept: ok,
        queries: rec.take(),
        samples: draws,
        fail_prob: 1.0 / 3.0,
        note,
    });

    let pairs = pair_count(c.pair_const, d, r, eps / 8.0);
    let h = |v: &[usize]| {
        let (lo, hi) = corner_vals(v);
        lo == hi && lo
    };
    let (ok, note) = pair_monotonicity(&h, r, d, pairs, rng);
    subs.push(SubTest {
        name: "pairs".into(),
        accept: ok,
        queries: rec.take(),
        samples: pairs,
        fail_prob: 1.0 / 3.0,
        note,
    });
    Ok(TestVerdict::from_subtests(subs, m, rec.into_log()))
}

/// Query-sample size from `(3e/eps)^(eps r^d / 3) (1 - eps/9)^q <= 1/6`:
/// `q = 3 r^d + 9 ln 6 / eps`.
pub fn convex_query_count(r: usize, d: usize, eps: f64) -> usize {
    ceil_usize(3.0 * (r as f64).powi(d as i32) + 9.0 * 6f64.ln() / eps)
}

/// Grid size for the convex tester: uniformity `eps / 9` with probability 5/6.
pub fn convex_grid_size(d: usize, eps: f64, c: &TesterConstants) -> Result<usize> {
    let r = min_r_for_epsilon(ResolutionRule::ConvexTester, d, 1, eps)?;
    Ok(uniform_grid_size(r, d, eps / 9.0, 1.0 / 6.0, c.grid_const))
}

/// Sample-based one-sided convexity tester for `d <= 3`.
///
/// Takes the hull of the positive query samples and rejects iff some
/// negative sample lies in a bounded cell whose closed box sits strictly
/// inside that hull. Cells meeting the hull boundary are exempt.
pub fn convex_onesided_test(
    oracle: &dyn Fn(&mut Stream) -> (Vec<f64>, i8),
    d: usize,
    eps: f64,
    grid_m: Option<usize>,
    queries: Option<usize>,
    c: &TesterConstants,
    rng: &mut Stream,
) -> Result<TestVerdict> {
    check_eps(eps)?;
    if d == 0 || d > 3 {
        return param(format!("convex tester supports 1 <= d <= 3, got d = {d}"));
    }
    let r = min_r_for_epsilon(ResolutionRule::ConvexTester, d, 1, eps)?;
    let m = match grid_m {
        Some(m) => round_up_to_multiple(m.max(r), r),
        None => convex_grid_size(d, eps, c)?,
    };
    let grid: Vec<Vec<f64>> = (0..m).map(|_| oracle(rng).0).collect();
    let p = induce_partition(&grid, r, rng)?;
    let q = queries.unwrap_or_else(|| convex_query_count(r, d, eps));
    let sample: Vec<(Vec<f64>, i8)> = (0..q).map(|_| oracle(rng)).collect();
    let positives: Vec<Vec<f64>> = sample.iter().filter(|s| s.1 > 0).map(|s| s.0.clone()).collect();
    let hull = if positives.len() > d {
        Hull::build(&positives)?
    } else {
        Hull { d, facets: vec![] }
    };
    let scale = p.cuts.iter().flatten().fold(1.0f64, |a, v| a.max(v.abs()));
    let margin = 1e-9 * scale;
    let mut ok = true;
    let mut note = format!("{} positives, {} hull facets", positives.len(), hull.facets.len());
    if !hull.is_degenerate() {
        let mut checked: HashSet<usize> = HashSet::new();
        for (x, b) in &sample {
            if *b > 0 {
                continue;
            }
            let v = p.block_of(x);
            if v.iter().any(|&j| j == 0 || j + 1 == r) {
                continue;
            }
            let idx = p.shape().index(&v);
            // a cell already checked was exempt
            if !checked.insert(idx) {
                continue;
            }
            let inside = (0..1usize << d).all(|mask| {
                let corner: Vec<f64> = (0..d)
                    .map(|i| {
                        let (lo, hi) = p.cell_bounds(i, v[i]);
                        if mask >> i & 1 == 1 {
                            hi
                        } else {
                            lo
                        }
                    })
                    .collect();
                hull.strictly_inside(&corner, margin)
            });
            if inside {
                ok = false;
                note = format!("negative {x:?} in interior cell {v:?}");
                break;
            }
        }
    }
    let sub = SubTest {
        name: "hull".into(),
        accept: ok,
        queries: q,
        samples: q,
        fail_prob: 1.0 / 6.0,
        note,
    };
    Ok(TestVerdict::from_subtests(vec![sub], m, vec![]))
}

/// Grid classes with structured enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CoverClass {
    /// Non-decreasing in every coordinate.
    Monotone,
    /// At most `k` value changes along every increasing chain.
    KAlternating { k: usize },
    /// `f^{-1}(1)` equals the lattice points of its convex hull (d <= 2).
    Convex,
}

impl std::str::FromStr for CoverClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if let Some(k) = s.strip_prefix("k-alternating:") {
            let k = k.parse().map_err(|_| Error::Parameter(format!("bad k in {s}")))?;
            return Ok(CoverClass::KAlternating { k });
        }
        match s {
            "monotone" => Ok(CoverClass::Monotone),
            "convex" => Ok(CoverClass::Convex),
            _ => Err(Error::Parameter(format!("unknown cover class {s}"))),
        }
    }
}

/// Grid functions forming a cover of a class on `[r]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverSet {
    pub class: CoverClass,
    pub shape: GridShape,
    pub members: Vec<Vec<i8>>,
    /// True when the members are the whole class on the grid.
    pub complete: bool,
}

/// Largest grid enumerated by filtering all `2^(r^d)` tables.
pub const EXHAUSTIVE_CELLS: usize = 20;

/// Largest cover built.
pub const COVER_BUDGET: usize = 1 << 20;

/// Class membership of a table on `[r]^d`.
pub fn is_member(class: CoverClass, shape: GridShape, values: &[i8]) -> bool {
    match class {
        CoverClass::Monotone => (0..shape.len()).all(|i| {
            let v = shape.cell(i);
            (0..shape.dims).all(|j| v[j] == 0 || values[i - shape.stride(j)] <= values[i])
        }),
        CoverClass::KAlternating { k } => alternations(shape, values).iter().all(|&a| a <= k),
        CoverClass::Convex => lattice_convex(shape, values),
    }
}

/// Most value changes along an increasing chain ending at each cell.
fn alternations(shape: GridShape, values: &[i8]) -> Vec<usize> {
    let mut best = vec![0usize; shape.len()];
    for i in 0..shape.len() {
        let v = shape.cell(i);
        best[i] = (0..shape.dims)
            .filter(|&j| v[j] > 0)
            .map(|j| {
                let u = i - shape.stride(j);
                best[u] + (values[u] != values[i]) as usize
            })
            .max()
            .unwrap_or(0);
    }
    best
}

fn lattice_convex(shape: GridShape, values: &[i8]) -> bool {
    let ones: Vec<Vec<f64>> = (0..shape.len())
        .filter(|&i| values[i] > 0)
        .map(|i| shape.cell(i).iter().map(|&c| c as f64).collect())
        .collect();
    if ones.len() <= 1 {
        return true;
    }
    match shape.dims {
        1 => {
            let lo = ones.iter().map(|p| p[0] as usize).min().unwrap();
            let hi = ones.iter().map(|p| p[0] as usize).max().unwrap();
            (lo..=hi).all(|i| values[i] > 0)
        }
        2 => {
            let hull = hull_2d_vertices(&ones);
            (0..shape.len()).all(|i| values[i] > 0 || !in_closed_polygon(&hull, &shape.cell(i)))
        }
        _ => false,
    }
}

/// Closed containment of a lattice point in a ccw hull (possibly a segment or point).
fn in_closed_polygon(hull: &[[f64; 2]], c: &[usize]) -> bool {
    let p = [c[0] as f64, c[1] as f64];
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    match hull.len() {
        0 => false,
        1 => hull[0] == p,
        2 => {
            let (a, b) = (hull[0], hull[1]);
            cross(a, b, p) == 0.0
                && p[0] >= a[0].min(b[0])
                && p[0] <= a[0].max(b[0])
                && p[1] >= a[1].min(b[1])
                && p[1] <= a[1].max(b[1])
        }
        n => (0..n).all(|k| cross(hull[k], hull[(k + 1) % n], p) >= 0.0),
    }
}

/// Builds the cover. Grids with at most 20 cells are enumerated exhaustively;
/// larger ones use backtracking with class-specific pruning.
pub fn build_cover(class: CoverClass, r: usize, d: usize) -> Result<CoverSet> {
    if r == 0 || d == 0 {
        return param("cover needs r, d > 0");
    }
    if class == CoverClass::Convex && d > 2 {
        return param("convex covers are implemented for d <= 2");
    }
    let shape = GridShape::new(r, d);
    let cells = shape.ensure_within(64, "cover grid")?;
    let mut members = Vec::new();
    if cells <= EXHAUSTIVE_CELLS {
        for bits in 0u64..1 << cells {
            let t: Vec<i8> = (0..cells).map(|i| if bits >> i & 1 == 1 { 1 } else { -1 }).collect();
            if is_member(class, shape, &t) {
                members.push(t);
            }
        }
    } else {
        let mut t = vec![-1i8; cells];
        let mut alt = vec![0usize; cells];
        backtrack(class, shape, 0, &mut t, &mut alt, &mut members)?;
    }
    Ok(CoverSet {
        class,
        shape,
        members,
        complete: true,
    })
}

fn backtrack(
    class: CoverClass,
    shape: GridShape,
    i: usize,
    t: &mut Vec<i8>,
    alt: &mut Vec<usize>,
    out: &mut Vec<Vec<i8>>,
) -> Result<()> {
    if i == t.len() {
        if is_member(class, shape, t) {
            if out.len() == COVER_BUDGET {
                return Err(Error::Budget {
                    what: "cover members",
                    needed: COVER_BUDGET as u128 + 1,
                    budget: COVER_BUDGET as u128,
                });
            }
            out.push(t.clone());
        }
        return Ok(());
    }
    let v = shape.cell(i);
    for val in [-1i8, 1] {
        t[i] = val;
        let ok = match class {
            CoverClass::Monotone => (0..shape.dims).all(|j| v[j] == 0 || t[i - shape.stride(j)] <= val),
            CoverClass::KAlternating { k } => {
                let a = (0..shape.dims)
                    .filter(|&j| v[j] > 0)
                    .map(|j| {
                        let u = i - shape.stride(j);
                        alt[u] + (t[u] != val) as usize
                    })
                    .max()
                    .unwrap_or(0);
                alt[i] = a;
                a <= k
            }
            // rows of a lattice-convex set are intervals: prune a 1 after a gap
            CoverClass::Convex => {
                let row_start = i - v[0];
                !(val > 0 && v[0] >= 2 && {
                    let row = &t[row_start..i];
                    let first = row.iter().position(|&x| x > 0);
                    first.is_some_and(|f| row[f..].iter().any(|&x| x < 0))
                })
            }
        };
        if ok {
            backtrack(class, shape, i + 1, t, alt, out)?;
        }
    }
    Ok(())
}

/// Cell masses of a product of per-dimension masses, in grid index order.
pub fn cell_mass_table(masses: &[Vec<f64>]) -> Vec<f64> {
    let d = masses.len();
    let r = masses.first().map_or(0, Vec::len);
    let shape = GridShape::new(r, d);
    (0..shape.len())
        .map(|i| shape.cell(i).iter().enumerate().map(|(j, &c)| masses[j][c]).product())
        .collect()
}

/// Exact distance from `f` to the nearest cover member, where
/// `positive_mass[v]` is the mass of `{f = 1}` inside cell `v`.
pub fn exact_distance(positive_mass: &[f64], cell_mass: &[f64], cover: &CoverSet) -> (f64, usize) {
    cover
        .members
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let dist: f64 = m
                .iter()
                .zip(positive_mass.iter().zip(cell_mass))
                .map(|(&val, (&pos, &cell))| if val > 0 { cell - pos } else { pos })
                .sum();
            (dist, k)
        })
        .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a })
}

/// Samples for `|estimate - distance| <= eps` with probability 5/6 over a cover of `size` members.
pub fn distance_sample_size(size: usize, eps: f64) -> usize {
    ceil_usize((12.0 * size.max(1) as f64).ln() / (2.0 * eps * eps))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceEstimate {
    pub value: f64,
    /// Index of the minimizing member.
    pub argmin: usize,
    pub samples: usize,
}

/// Minimum empirical disagreement between the labeled cells and the cover members.
pub fn distance_from_cells(cells: &[(usize, i8)], cover: &CoverSet) -> Result<DistanceEstimate> {
    if cells.is_empty() || cover.members.is_empty() {
        return param("distance estimate needs samples and a nonempty cover");
    }
    let n = cover.shape.len();
    // per-cell label counts make each member cost O(r^d)
    let mut pos = vec![0usize; n];
    let mut neg = vec![0usize; n];
    for &(c, b) in cells {
        if b > 0 {
            pos[c] += 1;
        } else {
            neg[c] += 1;
        }
    }
    let (best, argmin) = cover
        .members
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let e: usize = (0..n).map(|v| if m[v] > 0 { neg[v] } else { pos[v] }).sum();
            (e, k)
        })
        .min()
        .unwrap();
    Ok(DistanceEstimate {
        value: best as f64 / cells.len() as f64,
        argmin,
        samples: cells.len(),
    })
}

/// Locates labeled points in the partition, drawing tags for augmented partitions.
pub fn locate_samples(samples: &[(Vec<f64>, i8)], p: &Partition, rng: &mut Stream) -> Result<Vec<(usize, i8)>> {
    let d = p.d();
    let mut tag = vec![0.0; d];
    samples
        .iter()
        .map(|(x, b)| {
            let c = if p.is_augmented() {
                for t in tag.iter_mut() {
                    *t = rng.random::<f64>();
                }
                p.locate_index(x, Some(&tag))?
            } else {
                p.locate_index(x, None)?
            };
            Ok((c, *b))
        })
        .collect()
}

pub fn distance_approximate(
    samples: &[(Vec<f64>, i8)],
    cover: &CoverSet,
    p: &Partition,
    rng: &mut Stream,
) -> Result<DistanceEstimate> {
    if p.shape() != cover.shape {
        return param("cover and partition grids differ");
    }
    distance_from_cells(&locate_samples(samples, p, rng)?, cover)
}

/// `(eps1, eps2)`-tolerant test: accept iff the estimated distance is below
/// `eps1 + tau` with `tau = (eps2 - eps1) / 2`.
pub fn tolerant_test(
    samples: &[(Vec<f64>, i8)],
    cover: &CoverSet,
    p: &Partition,
    eps1: f64,
    eps2: f64,
    rng: &mut Stream,
) -> Result<TestVerdict> {
    if !(eps2 > eps1 && eps1 >= 0.0) {
        return param("tolerant test needs 0 <= eps1 < eps2");
    }
    let est = distance_approximate(samples, cover, p, rng)?;
    let tau = (eps2 - eps1) / 2.0;
    let sub = SubTest {
        name: "distance".into(),
        accept: est.value < eps1 + tau,
        queries: samples.len(),
        samples: samples.len(),
        fail_prob: 1.0 / 6.0,
        note: format!("estimate {} threshold {}", est.value, eps1 + tau),
    };
    Ok(TestVerdict::from_subtests(vec![sub], 0, vec![]))
}

/// Samples for the tolerant tester: accuracy `tau / 2` over the cover.
pub fn tolerant_sample_size(size: usize, eps1: f64, eps2: f64) -> usize {
    distance_sample_size(size, (eps2 - eps1) / 4.0)
}
