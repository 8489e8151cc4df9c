//! Induced block partitions of R^d, block / blockpoint maps, coarse
//! functions and distances between distributions on the grid.
//!
//! Cells are 0-based: cell `j` of dimension `i` is `(cuts[i][j-1], cuts[i][j]]`
//! with `cuts[i][-1] = -inf` and `cuts[i][r-1] = +inf`.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::concepts::BooleanFn;
use crate::error::{param, Error, Result};
use crate::grid::GridShape;
use crate::product_dist::{sample_point, AugCoord, AugmentedPoint, ProductDistribution};
use crate::rng::Stream;
use crate::stats::Estimate;

pub const PARTITION_FORMAT_VERSION: u32 = 1;

/// Largest grid for which the TV distance is computed by full enumeration.
pub const EXACT_TV_BUDGET: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockPartition {
    pub r: usize,
    pub d: usize,
    /// `r - 1` strictly increasing cuts per dimension.
    pub cuts: Vec<Vec<f64>>,
    /// `r` representatives per dimension, `reps[i][j]` in cell `j`.
    pub reps: Vec<Vec<f64>>,
    /// Smallest and largest sampled coordinate per dimension.
    pub span: Vec<(f64, f64)>,
    /// Number of coordinates nudged to break exact ties.
    pub perturbed: usize,
}

impl BlockPartition {
    /// Builds a partition from explicit cuts and representatives.
    pub fn from_cuts(cuts: Vec<Vec<f64>>, reps: Vec<Vec<f64>>) -> Result<Self> {
        let d = cuts.len();
        if d == 0 || reps.len() != d {
            return param("cuts and reps need one entry per dimension");
        }
        let r = cuts[0].len() + 1;
        let mut span = Vec::with_capacity(d);
        for i in 0..d {
            if cuts[i].len() != r - 1 || reps[i].len() != r {
                return param("every dimension needs r - 1 cuts and r reps");
            }
            if cuts[i].windows(2).any(|w| !(w[0] < w[1])) {
                return param(format!("cuts of dimension {i} are not strictly increasing"));
            }
            let lo = reps[i].iter().chain(&cuts[i]).cloned().fold(f64::INFINITY, f64::min);
            let hi = reps[i].iter().chain(&cuts[i]).cloned().fold(f64::NEG_INFINITY, f64::max);
            span.push((lo, hi));
        }
        let p = BlockPartition {
            r,
            d,
            cuts,
            reps,
            span,
            perturbed: 0,
        };
        for i in 0..d {
            for j in 0..r {
                if p.cell_of_coord(i, p.reps[i][j]) != j {
                    return param(format!("rep {j} of dimension {i} lies outside its cell"));
                }
            }
        }
        Ok(p)
    }

    /// The partition of `[0,1]^d` into `r` equal intervals per axis with
    /// midpoint representatives.
    pub fn uniform_unit(r: usize, d: usize) -> Self {
        let cuts: Vec<f64> = (1..r).map(|j| j as f64 / r as f64).collect();
        let reps: Vec<f64> = (0..r).map(|j| (j as f64 + 0.5) / r as f64).collect();
        let mut p = Self::from_cuts(vec![cuts; d], vec![reps; d]).expect("valid uniform partition");
        p.span = vec![(0.0, 1.0); d];
        p
    }

    pub fn shape(&self) -> GridShape {
        GridShape::new(self.r, self.d)
    }

    #[inline]
    pub fn cell_of_coord(&self, i: usize, x: f64) -> usize {
        self.cuts[i].partition_point(|&a| a < x)
    }

    pub fn block_of(&self, x: &[f64]) -> Vec<usize> {
        (0..self.d).map(|i| self.cell_of_coord(i, x[i])).collect()
    }

    pub fn block_index(&self, x: &[f64]) -> usize {
        (0..self.d).rev().fold(0, |acc, i| acc * self.r + self.cell_of_coord(i, x[i]))
    }

    pub fn blockpoint_of(&self, v: &[usize]) -> Result<Vec<f64>> {
        if !self.shape().contains(v) {
            return Err(Error::CellOutOfRange { cell: v.to_vec(), r: self.r });
        }
        Ok(v.iter().enumerate().map(|(i, &j)| self.reps[i][j]).collect())
    }

    /// Closed hull of cell `j` in dimension `i`, with infinite ends.
    pub fn cell_bounds(&self, i: usize, j: usize) -> (f64, f64) {
        let lo = if j == 0 { f64::NEG_INFINITY } else { self.cuts[i][j - 1] };
        let hi = if j + 1 == self.r { f64::INFINITY } else { self.cuts[i][j] };
        (lo, hi)
    }

    /// Cell bounds with the unbounded ends replaced by the data span
    /// extended by its own width on either side.
    pub fn probe_bounds(&self, i: usize, j: usize) -> (f64, f64) {
        let (lo, hi) = self.cell_bounds(i, j);
        let (smin, smax) = self.span[i];
        let width = if smax > smin { smax - smin } else { 1.0 };
        let lo = if lo.is_finite() { lo } else { smin.min(hi) - width };
        let hi = if hi.is_finite() { hi } else { smax.max(lo) + width };
        (lo, hi)
    }

    /// Per-dimension cell masses under `dist`.
    pub fn cell_masses(&self, dist: &ProductDistribution) -> Vec<Vec<f64>> {
        (0..self.d)
            .map(|i| {
                let c = &dist.components[i];
                let mut prev = 0.0;
                let mut out = Vec::with_capacity(self.r);
                for j in 0..self.r {
                    let next = if j + 1 == self.r { 1.0 } else { c.cdf(self.cuts[i][j]) };
                    out.push((next - prev).max(0.0));
                    prev = next;
                }
                out
            })
            .collect()
    }
}

/// An r-block partition under the lexicographic order on `R x [0,1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedBlockPartition {
    pub r: usize,
    pub d: usize,
    pub cuts: Vec<Vec<AugCoord>>,
    pub reps: Vec<Vec<AugCoord>>,
}

impl AugmentedBlockPartition {
    pub fn shape(&self) -> GridShape {
        GridShape::new(self.r, self.d)
    }

    #[inline]
    pub fn cell_of_coord(&self, i: usize, x: AugCoord) -> usize {
        self.cuts[i].partition_point(|a| *a < x)
    }

    pub fn block_of(&self, x: &AugmentedPoint) -> Vec<usize> {
        (0..self.d).map(|i| self.cell_of_coord(i, x.coord(i))).collect()
    }

    pub fn blockpoint_of(&self, v: &[usize]) -> Result<Vec<f64>> {
        if !self.shape().contains(v) {
            return Err(Error::CellOutOfRange { cell: v.to_vec(), r: self.r });
        }
        Ok(v.iter().enumerate().map(|(i, &j)| self.reps[i][j].base).collect())
    }

    /// Lower and upper augmented cut of cell `j` in dimension `i`.
    pub fn cell_bounds(&self, i: usize, j: usize) -> (AugCoord, AugCoord) {
        let lo = if j == 0 { AugCoord::LOWEST } else { self.cuts[i][j - 1] };
        let hi = if j + 1 == self.r { AugCoord::HIGHEST } else { self.cuts[i][j] };
        (lo, hi)
    }

    /// Per-dimension cell masses under `dist x unif([0,1]^d)`.
    pub fn cell_masses(&self, dist: &ProductDistribution) -> Vec<Vec<f64>> {
        (0..self.d)
            .map(|i| {
                let c = &dist.components[i];
                let mut prev = 0.0;
                let mut out = Vec::with_capacity(self.r);
                for j in 0..self.r {
                    let next = if j + 1 == self.r {
                        1.0
                    } else {
                        let a = self.cuts[i][j];
                        c.augmented_cdf(a.base, a.tag)
                    };
                    out.push((next - prev).max(0.0));
                    prev = next;
                }
                out
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Partition {
    Plain(BlockPartition),
    Augmented(AugmentedBlockPartition),
}

impl Partition {
    pub fn r(&self) -> usize {
        match self {
            Partition::Plain(p) => p.r,
            Partition::Augmented(p) => p.r,
        }
    }

    pub fn d(&self) -> usize {
        match self {
            Partition::Plain(p) => p.d,
            Partition::Augmented(p) => p.d,
        }
    }

    pub fn shape(&self) -> GridShape {
        GridShape::new(self.r(), self.d())
    }

    pub fn is_augmented(&self) -> bool {
        matches!(self, Partition::Augmented(_))
    }

    pub fn blockpoint_of(&self, v: &[usize]) -> Result<Vec<f64>> {
        match self {
            Partition::Plain(p) => p.blockpoint_of(v),
            Partition::Augmented(p) => p.blockpoint_of(v),
        }
    }

    /// The cell of `x`, or of `(x, tag)` for augmented partitions.
    pub fn locate(&self, x: &[f64], tag: Option<&[f64]>) -> Result<Vec<usize>> {
        match self {
            Partition::Plain(p) => Ok(p.block_of(x)),
            Partition::Augmented(p) => {
                let z = tag.ok_or(Error::MissingTag)?;
                Ok(p.block_of(&AugmentedPoint::with_tag(x, z)))
            }
        }
    }

    pub fn locate_index(&self, x: &[f64], tag: Option<&[f64]>) -> Result<usize> {
        match self {
            Partition::Plain(p) => Ok(p.block_index(x)),
            _ => Ok(self.shape().index(&self.locate(x, tag)?)),
        }
    }

    /// Per-dimension masses of `block(mu)` (augmented for augmented partitions).
    pub fn cell_masses(&self, dist: &ProductDistribution) -> Vec<Vec<f64>> {
        match self {
            Partition::Plain(p) => p.cell_masses(dist),
            Partition::Augmented(p) => p.cell_masses(dist),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct File<'a> {
            version: u32,
            partition: &'a Partition,
        }
        Ok(serde_json::to_string(&File {
            version: PARTITION_FORMAT_VERSION,
            partition: self,
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct File {
            version: u32,
            partition: Partition,
        }
        let f: File = serde_json::from_str(s)?;
        if f.version != PARTITION_FORMAT_VERSION {
            return Err(Error::Serde(format!("unsupported partition version {}", f.version)));
        }
        Ok(f.partition)
    }
}

impl From<BlockPartition> for Partition {
    fn from(p: BlockPartition) -> Self {
        Partition::Plain(p)
    }
}

impl From<AugmentedBlockPartition> for Partition {
    fn from(p: AugmentedBlockPartition) -> Self {
        Partition::Augmented(p)
    }
}

fn check_divisible(m: usize, r: usize) -> Result<()> {
    if r == 0 || m == 0 || m % r != 0 {
        return param(format!("r = {r} must be positive and divide the sample size m = {m}"));
    }
    Ok(())
}

/// Rounds `m` up to the next multiple of `r`.
pub fn round_up_to_multiple(m: usize, r: usize) -> usize {
    m.div_ceil(r).max(1) * r
}

/// The r-block partition induced by `samples`: cut `j` of dimension `i` is
/// the `(m j / r)`-th order statistic of the `i`-th coordinates, and each
/// representative is a uniformly chosen sampled coordinate in its cell.
pub fn induce_partition(samples: &[Vec<f64>], r: usize, rng: &mut Stream) -> Result<BlockPartition> {
    let m = samples.len();
    check_divisible(m, r)?;
    let d = samples[0].len();
    let per = m / r;
    let mut cuts = Vec::with_capacity(d);
    let mut reps = Vec::with_capacity(d);
    let mut span = Vec::with_capacity(d);
    let mut perturbed = 0;
    for i in 0..d {
        let mut xs: Vec<f64> = samples.iter().map(|s| s[i]).collect();
        if xs.iter().any(|x| !x.is_finite()) {
            return param(format!("non-finite coordinate in dimension {i}"));
        }
        xs.sort_by(f64::total_cmp);
        perturbed += break_ties(&mut xs, i, r, rng)?;
        span.push((xs[0], xs[m - 1]));
        cuts.push((1..r).map(|j| xs[j * per - 1]).collect());
        reps.push((0..r).map(|j| xs[j * per + rng.random_range(0..per)]).collect());
    }
    Ok(BlockPartition {
        r,
        d,
        cuts,
        reps,
        span,
        perturbed,
    })
}

/// Makes sorted `xs` strictly increasing by nudging repeated values upward by
/// about 1e-12 of the coordinate scale. Returns the number of nudged values.
fn break_ties(xs: &mut [f64], dim: usize, r: usize, rng: &mut Stream) -> Result<usize> {
    let distinct = 1 + xs.windows(2).filter(|w| w[0] < w[1]).count();
    if distinct < r {
        return Err(Error::Degenerate {
            dim,
            distinct,
            cells: r,
        });
    }
    if distinct == xs.len() {
        return Ok(0);
    }
    let scale = xs.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
    let mut nudged = 0;
    for attempt in 0..16 {
        let step = scale * 1e-12 * (1u64 << attempt) as f64;
        for k in 1..xs.len() {
            if xs[k] <= xs[k - 1] {
                xs[k] = xs[k - 1] + step * (0.5 + rng.random::<f64>());
                nudged += 1;
            }
        }
        xs.sort_by(f64::total_cmp);
        if xs.windows(2).all(|w| w[0] < w[1]) {
            return Ok(nudged);
        }
    }
    Err(Error::Degenerate {
        dim,
        distinct,
        cells: r,
    })
}

/// The augmented r-block partition induced by augmented samples.
pub fn induce_augmented_partition(
    samples: &[AugmentedPoint],
    r: usize,
    rng: &mut Stream,
) -> Result<AugmentedBlockPartition> {
    let m = samples.len();
    check_divisible(m, r)?;
    let d = samples[0].dims();
    let per = m / r;
    let mut cuts = Vec::with_capacity(d);
    let mut reps = Vec::with_capacity(d);
    for i in 0..d {
        let mut xs: Vec<AugCoord> = samples.iter().map(|s| s.coord(i)).collect();
        xs.sort();
        if xs.windows(2).any(|w| w[0] == w[1]) {
            let distinct = 1 + xs.windows(2).filter(|w| w[0] < w[1]).count();
            return Err(Error::Degenerate {
                dim: i,
                distinct,
                cells: r,
            });
        }
        cuts.push((1..r).map(|j| xs[j * per - 1]).collect());
        reps.push((0..r).map(|j| xs[j * per + rng.random_range(0..per)]).collect());
    }
    Ok(AugmentedBlockPartition { r, d, cuts, reps })
}

/// Total variation between `block(mu)` and the uniform distribution on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvEstimate {
    pub value: f64,
    pub stderr: f64,
    pub exact: bool,
}

/// TV distance of the product of per-dimension cell masses to uniform, by
/// enumerating the grid. `None` when the grid exceeds `budget`.
pub fn tv_from_masses(masses: &[Vec<f64>], budget: usize) -> Option<f64> {
    let r = masses[0].len();
    let n = GridShape::new(r, masses.len()).checked_len().filter(|&n| n <= budget)?;
    let u = 1.0 / n as f64;
    // products built dimension by dimension; dimension 0 varies fastest
    let mut prod = vec![1.0];
    for m in masses {
        let mut next = Vec::with_capacity(prod.len() * r);
        for &p in &prod {
            for &q in m {
                next.push(p * q);
            }
        }
        prod = next;
    }
    Some(0.5 * prod.iter().map(|p| (p - u).abs()).sum::<f64>())
}

/// Monte Carlo TV using `TV = E_{v ~ P}[max(0, 1 - u / P(v))]`.
pub fn tv_monte_carlo(masses: &[Vec<f64>], n: usize, rng: &mut Stream) -> TvEstimate {
    let r = masses[0].len();
    let log_u = -(masses.len() as f64) * (r as f64).ln();
    let cumulative: Vec<Vec<f64>> = masses
        .iter()
        .map(|m| {
            m.iter()
                .scan(0.0, |acc, p| {
                    *acc += p;
                    Some(*acc)
                })
                .collect()
        })
        .collect();
    let vals: Vec<f64> = (0..n.max(1))
        .map(|_| {
            let mut log_p = 0.0;
            for (m, cum) in masses.iter().zip(&cumulative) {
                let u: f64 = rng.random::<f64>() * cum[r - 1];
                let j = cum.partition_point(|&c| c <= u).min(r - 1);
                log_p += m[j].ln();
            }
            (1.0 - (log_u - log_p).exp()).max(0.0)
        })
        .collect();
    let e = Estimate::from_values(&vals);
    TvEstimate {
        value: e.value,
        stderr: e.stderr,
        exact: false,
    }
}

/// Distance of `block(mu)` to uniform on `[r]^d`. Exact from CDF masses when
/// the grid is at most [`EXACT_TV_BUDGET`] cells, else a Monte Carlo plug-in
/// estimate from `n` draws.
pub fn estimate_tv_to_uniform(p: &Partition, dist: &ProductDistribution, n: usize, rng: &mut Stream) -> TvEstimate {
    let masses = p.cell_masses(dist);
    match tv_from_masses(&masses, EXACT_TV_BUDGET) {
        Some(v) => TvEstimate {
            value: v,
            stderr: 0.0,
            exact: true,
        },
        None => tv_monte_carlo(&masses, n, rng),
    }
}

/// A total function `[r]^d -> {-1, +1}`.
#[derive(Clone)]
pub enum GridFunction {
    Dense { shape: GridShape, values: Vec<i8> },
    Lazy { shape: GridShape, f: Arc<dyn Fn(&[usize]) -> i8 + Send + Sync> },
}

impl std::fmt::Debug for GridFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GridFunction::Dense { shape, values } => f
                .debug_struct("Dense")
                .field("shape", shape)
                .field("values", values)
                .finish(),
            GridFunction::Lazy { shape, .. } => f.debug_struct("Lazy").field("shape", shape).finish(),
        }
    }
}

impl GridFunction {
    pub fn dense(shape: GridShape, values: Vec<i8>) -> Result<Self> {
        if values.len() != shape.len() || values.iter().any(|v| v.abs() != 1) {
            return param("dense grid function needs r^d values in {-1, +1}");
        }
        Ok(GridFunction::Dense { shape, values })
    }

    pub fn from_fn(shape: GridShape, f: impl Fn(&[usize]) -> i8) -> Self {
        let values = shape.cells().map(|c| f(&c)).collect();
        GridFunction::Dense { shape, values }
    }

    pub fn shape(&self) -> GridShape {
        match self {
            GridFunction::Dense { shape, .. } | GridFunction::Lazy { shape, .. } => *shape,
        }
    }

    pub fn eval(&self, v: &[usize]) -> i8 {
        match self {
            GridFunction::Dense { shape, values } => values[shape.index(v)],
            GridFunction::Lazy { f, .. } => f(v),
        }
    }

    pub fn eval_index(&self, i: usize) -> i8 {
        match self {
            GridFunction::Dense { values, .. } => values[i],
            GridFunction::Lazy { shape, f } => f(&shape.cell(i)),
        }
    }

    pub fn values(&self) -> Option<&[i8]> {
        match self {
            GridFunction::Dense { values, .. } => Some(values),
            GridFunction::Lazy { .. } => None,
        }
    }

    pub fn to_dense(&self, budget: usize) -> Result<Vec<i8>> {
        let shape = self.shape();
        let n = shape.ensure_within(budget, "grid function cells")?;
        Ok((0..n).map(|i| self.eval_index(i)).collect())
    }
}

/// `f^block = f o blockpoint`, tabulated when `r^d <= budget`.
pub fn block_function(f: Arc<dyn BooleanFn>, p: &Partition, budget: usize) -> GridFunction {
    let shape = p.shape();
    match shape.checked_len() {
        Some(n) if n <= budget => {
            let values = (0..n)
                .map(|i| f.eval(&p.blockpoint_of(&shape.cell(i)).expect("cell in range")))
                .collect();
            GridFunction::Dense { shape, values }
        }
        _ => {
            let p = p.clone();
            GridFunction::Lazy {
                shape,
                f: Arc::new(move |v: &[usize]| f.eval(&p.blockpoint_of(v).expect("cell in range"))),
            }
        }
    }
}

/// `g(block(x))`, or `g(block(x, z))` on augmented partitions.
pub fn coarse_eval(g: &GridFunction, p: &Partition, x: &[f64], z: Option<&[f64]>) -> Result<i8> {
    Ok(g.eval(&p.locate(x, z)?))
}

/// Fraction of `n` draws from `dist` on which `f` and `g` differ.
pub fn empirical_distance(
    f: &dyn BooleanFn,
    g: &dyn BooleanFn,
    dist: &ProductDistribution,
    n: usize,
    rng: &mut Stream,
) -> Estimate {
    let hits = (0..n)
        .filter(|_| {
            let x = sample_point(dist, rng);
            f.eval(&x) != g.eval(&x)
        })
        .count();
    Estimate::from_hits(hits, n)
}

/// Where a cell of an `(r+2)`-partition sits relative to the interior `[r]^d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CellKind {
    /// Interior cell, re-indexed to `0..r` per dimension.
    Interior(Vec<usize>),
    /// Some coordinate is in the top cell.
    Upper,
    /// Some coordinate is in the bottom cell and none in the top cell.
    Lower,
}

/// Reads an `(r+2)`-partition as an `r`-grid flanked by extreme cells.
#[derive(Debug, Clone, Copy)]
pub struct ExtremeView<'a> {
    pub partition: &'a Partition,
}

impl<'a> ExtremeView<'a> {
    pub fn new(partition: &'a Partition) -> Result<Self> {
        if partition.r() < 3 {
            return param("an extreme view needs at least 3 cells per dimension");
        }
        Ok(ExtremeView { partition })
    }

    /// Side of the interior grid.
    pub fn inner_r(&self) -> usize {
        self.partition.r() - 2
    }

    pub fn classify(&self, cell: &[usize]) -> CellKind {
        let top = self.partition.r() - 1;
        if cell.iter().any(|&c| c == top) {
            CellKind::Upper
        } else if cell.contains(&0) {
            CellKind::Lower
        } else {
            CellKind::Interior(cell.iter().map(|&c| c - 1).collect())
        }
    }

    /// Closed lower and upper corners of interior cell `v` (0-based in `[r]^d`),
    /// as base points.
    pub fn corners(&self, v: &[usize]) -> (Vec<f64>, Vec<f64>) {
        match self.partition {
            Partition::Plain(p) => (
                v.iter().enumerate().map(|(i, &j)| p.cuts[i][j]).collect(),
                v.iter().enumerate().map(|(i, &j)| p.cuts[i][j + 1]).collect(),
            ),
            Partition::Augmented(p) => (
                v.iter().enumerate().map(|(i, &j)| p.cuts[i][j].base).collect(),
                v.iter().enumerate().map(|(i, &j)| p.cuts[i][j + 1].base).collect(),
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::product_dist::augment;
    use crate::rng::stream;

    fn pts1(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn order_statistic_cuts() {
        let p = induce_partition(&pts1(&[3.0, 1.0, 4.0, 2.0]), 2, &mut stream(0)).unwrap();
        assert_eq!(p.cuts, vec![vec![2.0]]);
        assert_eq!(p.block_of(&[2.0]), vec![0]);
        assert_eq!(p.block_of(&[2.0000001]), vec![1]);
        assert_eq!(p.block_of(&[-1e9]), vec![0]);
        assert_eq!(p.block_of(&[1e9]), vec![1]);
        let s: Vec<Vec<f64>> = (1..=6).map(|i| vec![i as f64, (7 - i) as f64]).collect();
        let p = induce_partition(&s, 3, &mut stream(0)).unwrap();
        assert_eq!(p.cuts, vec![vec![2.0, 4.0], vec![2.0, 4.0]]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            induce_partition(&pts1(&[1.0, 2.0, 3.0]), 2, &mut stream(0)),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            induce_partition(&pts1(&[1.0, 1.0, 1.0, 2.0]), 4, &mut stream(0)),
            Err(Error::Degenerate { .. })
        ));
        let p = BlockPartition::uniform_unit(2, 1);
        assert!(p.blockpoint_of(&[2]).is_err());
    }

    #[test]
    fn ties_are_perturbed() {
        let p = induce_partition(&pts1(&[1.0, 1.0, 2.0, 3.0]), 2, &mut stream(5)).unwrap();
        assert_eq!(p.perturbed, 1);
        assert!(p.cuts[0][0] > 1.0 && p.cuts[0][0] < 1.0 + 1e-9);
    }

    #[test]
    fn tv_examples() {
        assert!((tv_from_masses(&[vec![0.6, 0.4]], 100).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(tv_from_masses(&[vec![0.5, 0.5]], 100), Some(0.0));
        let mut rng = stream(1);
        let masses = vec![vec![0.3, 0.7], vec![0.4, 0.6]];
        let exact = tv_from_masses(&masses, 100).unwrap();
        let mc = tv_monte_carlo(&masses, 200_000, &mut rng);
        assert!((mc.value - exact).abs() < 4.0 * mc.stderr + 1e-3);
    }

    #[test]
    fn median_cut_has_zero_tv() {
        let p = BlockPartition::from_cuts(vec![vec![0.0]], vec![vec![-1.0, 1.0]]).unwrap();
        let tv = estimate_tv_to_uniform(&p.into(), &ProductDistribution::gaussian(1), 10, &mut stream(0));
        assert!(tv.exact && tv.value.abs() < 1e-15);
    }

    #[test]
    fn augmented_single_atom() {
        let mut rng = stream(2);
        let xs: Vec<AugmentedPoint> = (0..8).map(|_| augment(&[3.0], &mut rng)).collect();
        let p = induce_augmented_partition(&xs, 4, &mut rng).unwrap();
        let mut seen = [0usize; 4];
        for x in &xs {
            seen[p.block_of(x)[0]] += 1;
        }
        assert_eq!(seen, [2, 2, 2, 2]);
        let cut = p.cuts[0][1];
        let lo = AugmentedPoint::with_tag(&[3.0], &[0.0]);
        let hi = AugmentedPoint::with_tag(&[3.0], &[1.0]);
        assert!(p.block_of(&lo)[0] <= 1 && p.block_of(&hi)[0] >= 2);
        assert!(cut.tag > 0.0 && cut.tag < 1.0);
    }

    #[test]
    fn partition_json_round_trip() {
        let mut rng = stream(8);
        let s: Vec<Vec<f64>> = (0..40).map(|_| sample_point(&ProductDistribution::gaussian(2), &mut rng)).collect();
        let p: Partition = induce_partition(&s, 4, &mut rng).unwrap().into();
        let back = Partition::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(p, back);
        let xs: Vec<AugmentedPoint> = s.iter().map(|x| augment(x, &mut rng)).collect();
        let p: Partition = induce_augmented_partition(&xs, 4, &mut rng).unwrap().into();
        assert_eq!(p, Partition::from_json(&p.to_json().unwrap()).unwrap());
    }

    #[test]
    fn missing_tag_is_an_error() {
        let mut rng = stream(3);
        let xs: Vec<AugmentedPoint> = (0..8).map(|i| augment(&[i as f64], &mut rng)).collect();
        let p: Partition = induce_augmented_partition(&xs, 2, &mut rng).unwrap().into();
        let g = GridFunction::from_fn(p.shape(), |_| 1);
        assert_eq!(coarse_eval(&g, &p, &[1.0], None), Err(Error::MissingTag));
        assert_eq!(coarse_eval(&g, &p, &[1.0], Some(&[0.5])), Ok(1));
    }
}
