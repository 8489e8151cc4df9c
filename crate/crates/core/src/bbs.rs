//! Counting the blocks on which a function is non-constant, and closed-form
//! block-boundary bounds per function class.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::blockgrid::{AugmentedBlockPartition, BlockPartition};
use crate::concepts::{BooleanFn, Concept};
use crate::error::{param, Error, Result};
use crate::grid::GridShape;
use crate::product_dist::{Component, ProductDistribution};
use crate::rng::{derive_seed, stream, Stream};
use crate::stats::ceil_usize;

/// Largest grid whose cells are enumerated by the counters.
pub const COUNT_BUDGET: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountMethod {
    Probe,
    CornerOracle,
    Analytic,
    /// Exact count of cells whose atoms carry both values (finite `mu`).
    AtomMass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonconstantCount {
    pub count: usize,
    pub method: CountMethod,
    pub probes_per_block: usize,
    /// Linear indices of the flagged cells, ascending.
    pub cells: Vec<usize>,
}

/// Lower bound on the number of non-constant blocks: a block counts once two
/// of `probes` uniform points inside it disagree. Unbounded cells are probed
/// inside the data span widened by its own width on both sides. Each cell's
/// probes come from a stream keyed by the cell, so more probes never lowers
/// the count.
pub fn count_nonconstant_blocks(
    f: &dyn BooleanFn,
    p: &BlockPartition,
    probes: usize,
    rng: &mut Stream,
) -> Result<NonconstantCount> {
    if probes < 2 {
        return param("at least two probes per block are needed");
    }
    let shape = p.shape();
    let n = shape.ensure_within(COUNT_BUDGET, "probed cells")?;
    let base: u64 = rng.random();
    let mut cells = Vec::new();
    let mut cell = vec![0; p.d];
    let mut x = vec![0.0; p.d];
    for idx in 0..n {
        shape.cell_into(idx, &mut cell);
        let bounds: Vec<(f64, f64)> = (0..p.d).map(|i| p.probe_bounds(i, cell[i])).collect();
        let mut local = stream(derive_seed(base, idx as u64));
        let mut first = 0i8;
        for k in 0..probes {
            for i in 0..p.d {
                let (lo, hi) = bounds[i];
                x[i] = lo + (hi - lo) * local.random::<f64>();
            }
            let v = f.eval(&x);
            if k == 0 {
                first = v;
            } else if v != first {
                cells.push(idx);
                break;
            }
        }
    }
    Ok(NonconstantCount {
        count: cells.len(),
        method: CountMethod::Probe,
        probes_per_block: probes,
        cells,
    })
}

/// Flags a block when `f` differs at its infimal and supremal corners. The
/// infimal corner is the first float above the lower cut; unbounded ends use
/// the widened data span. Exact for monotone `f`, a lower bound otherwise.
pub fn corner_oracle_nonconstant(f: &dyn BooleanFn, p: &BlockPartition) -> Result<NonconstantCount> {
    let shape = p.shape();
    let n = shape.ensure_within(COUNT_BUDGET, "corner-tested cells")?;
    let mut cells = Vec::new();
    let mut cell = vec![0; p.d];
    let mut lo = vec![0.0; p.d];
    let mut hi = vec![0.0; p.d];
    for idx in 0..n {
        shape.cell_into(idx, &mut cell);
        for i in 0..p.d {
            let (a, b) = p.cell_bounds(i, cell[i]);
            let (pa, pb) = p.probe_bounds(i, cell[i]);
            lo[i] = if a.is_finite() { a.next_up() } else { pa };
            hi[i] = if b.is_finite() { b } else { pb };
        }
        if f.eval(&lo) != f.eval(&hi) {
            cells.push(idx);
        }
    }
    Ok(NonconstantCount {
        count: cells.len(),
        method: CountMethod::CornerOracle,
        probes_per_block: 2,
        cells,
    })
}

/// Exact Lebesgue non-constancy for halfspaces, balls and convex polygons.
/// Returns `None` for other concepts.
pub fn analytic_nonconstant(c: &Concept, p: &BlockPartition) -> Result<Option<NonconstantCount>> {
    let test: Box<dyn Fn(&[(f64, f64)]) -> bool> = match c {
        Concept::Halfspace { w, b } => {
            let (w, b) = (w.clone(), *b);
            Box::new(move |bx| halfspace_straddles(&w, b, bx))
        }
        Concept::Ball { center, radius } => {
            let (c, r) = (center.clone(), *radius);
            Box::new(move |bx| ball_straddles(&c, r, bx))
        }
        Concept::ConvexPolygon { vertices } if p.d == 2 => {
            let v = vertices.clone();
            Box::new(move |bx| polygon_straddles(&v, bx))
        }
        _ => return Ok(None),
    };
    let shape = p.shape();
    let n = shape.ensure_within(COUNT_BUDGET, "analytic cells")?;
    let mut cells = Vec::new();
    let mut cell = vec![0; p.d];
    for idx in 0..n {
        shape.cell_into(idx, &mut cell);
        let bx: Vec<(f64, f64)> = (0..p.d).map(|i| p.cell_bounds(i, cell[i])).collect();
        if test(&bx) {
            cells.push(idx);
        }
    }
    Ok(Some(NonconstantCount {
        count: cells.len(),
        method: CountMethod::Analytic,
        probes_per_block: 0,
        cells,
    }))
}

/// `w.x - b` takes both signs on sets of positive volume inside the box.
pub fn halfspace_straddles(w: &[f64], b: f64, bx: &[(f64, f64)]) -> bool {
    let mut lo = -b;
    let mut hi = -b;
    for (wi, &(l, h)) in w.iter().zip(bx) {
        if *wi > 0.0 {
            lo += wi * l;
            hi += wi * h;
        } else if *wi < 0.0 {
            lo += wi * h;
            hi += wi * l;
        }
    }
    lo < 0.0 && hi > 0.0
}

/// The sphere cuts the box into two parts of positive volume.
pub fn ball_straddles(center: &[f64], radius: f64, bx: &[(f64, f64)]) -> bool {
    let mut near = 0.0;
    let mut far = 0.0;
    for (c, &(l, h)) in center.iter().zip(bx) {
        let q = c.clamp(l, h);
        near += (q - c) * (q - c);
        let f = (c - l).abs().max((h - c).abs());
        far += f * f;
    }
    near < radius * radius && far > radius * radius
}

/// The polygon meets the box in positive area without covering it.
pub fn polygon_straddles(vertices: &[[f64; 2]], bx: &[(f64, f64)]) -> bool {
    let (x0, x1) = bx[0];
    let (y0, y1) = bx[1];
    let mut poly: Vec<[f64; 2]> = vertices.to_vec();
    // Sutherland-Hodgman against the four box sides; infinite sides are no-ops
    let clips: [(usize, f64, bool); 4] = [(0, x0, true), (0, x1, false), (1, y0, true), (1, y1, false)];
    for (axis, v, keep_above) in clips {
        if !v.is_finite() {
            continue;
        }
        let inside = |p: &[f64; 2]| if keep_above { p[axis] >= v } else { p[axis] <= v };
        let mut out = Vec::with_capacity(poly.len() + 2);
        for k in 0..poly.len() {
            let a = poly[k];
            let b = poly[(k + 1) % poly.len()];
            let (ia, ib) = (inside(&a), inside(&b));
            if ia {
                out.push(a);
            }
            if ia != ib {
                let t = (v - a[axis]) / (b[axis] - a[axis]);
                out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
            }
        }
        poly = out;
        if poly.is_empty() {
            return false;
        }
    }
    let area = polygon_area(&poly);
    let box_area = (x1 - x0) * (y1 - y0);
    let tol = 1e-12 * box_area.min(1.0).max(1e-300);
    area > tol && (!box_area.is_finite() || area < box_area - tol)
}

pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    0.5 * (0..n)
        .map(|k| {
            let a = poly[k];
            let b = poly[(k + 1) % n];
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
        .abs()
}

/// Exact count on an augmented partition for an all-finite `mu`: a cell is
/// non-constant iff `f` takes both values on the atoms of positive mass in
/// it. Per-cell atom products larger than `atom_budget` are an error.
pub fn augmented_nonconstant(
    f: &dyn BooleanFn,
    p: &AugmentedBlockPartition,
    dist: &ProductDistribution,
    atom_budget: usize,
) -> Result<NonconstantCount> {
    let shape = p.shape();
    let n = shape.ensure_within(COUNT_BUDGET, "augmented cells")?;
    // atoms[i][j]: support points of dimension i with positive mass in cell j
    let mut atoms: Vec<Vec<Vec<f64>>> = Vec::with_capacity(p.d);
    for i in 0..p.d {
        let Component::Finite(fin) = &dist.components[i] else {
            return Err(Error::Distribution("atom counting needs finite components".into()));
        };
        let mut per_cell = Vec::with_capacity(p.r);
        for j in 0..p.r {
            let (lo, hi) = p.cell_bounds(i, j);
            let mut list = Vec::new();
            for (s, w) in fin.support.iter().zip(&fin.weights) {
                if *w <= 0.0 {
                    continue;
                }
                // mass of atom s inside (lo, hi]
                let lo_t = if lo.base < *s { 0.0 } else if lo.base > *s { 1.0 } else { lo.tag };
                let hi_t = if hi.base < *s { 0.0 } else if hi.base > *s { 1.0 } else { hi.tag };
                if hi_t > lo_t {
                    list.push(*s);
                }
            }
            per_cell.push(list);
        }
        atoms.push(per_cell);
    }
    let mut cells = Vec::new();
    let mut cell = vec![0; p.d];
    for idx in 0..n {
        shape.cell_into(idx, &mut cell);
        let lists: Vec<&Vec<f64>> = (0..p.d).map(|i| &atoms[i][cell[i]]).collect();
        let size: usize = lists.iter().map(|l| l.len()).product();
        if size > atom_budget {
            return Err(Error::Budget {
                what: "atoms per cell",
                needed: size as u128,
                budget: atom_budget as u128,
            });
        }
        if size == 0 {
            continue;
        }
        let mut seen = 0i8;
        let mut both = false;
        let mut pick = vec![0usize; p.d];
        let mut x = vec![0.0; p.d];
        'outer: loop {
            for i in 0..p.d {
                x[i] = lists[i][pick[i]];
            }
            let v = f.eval(&x);
            if seen == 0 {
                seen = v;
            } else if v != seen {
                both = true;
                break 'outer;
            }
            let mut i = 0;
            while i < p.d {
                pick[i] += 1;
                if pick[i] < lists[i].len() {
                    break;
                }
                pick[i] = 0;
                i += 1;
            }
            if i == p.d {
                break;
            }
        }
        if both {
            cells.push(idx);
        }
    }
    Ok(NonconstantCount {
        count: cells.len(),
        method: CountMethod::AtomMass,
        probes_per_block: 0,
        cells,
    })
}

/// Function classes with closed-form block-boundary bounds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ClassId {
    Monotone,
    KAlternating,
    /// Functions of `k` convex sets.
    Convex,
    /// Functions of `k` halfspaces.
    Halfspace,
    /// Degree-`k` polynomial threshold functions.
    Ptf,
    /// Any function of `k` members of `inner`.
    Composed { k: usize, inner: Box<ClassId> },
}

impl std::str::FromStr for ClassId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "monotone" => Ok(ClassId::Monotone),
            "k-alternating" => Ok(ClassId::KAlternating),
            "convex" => Ok(ClassId::Convex),
            "halfspace" | "halfspaces" => Ok(ClassId::Halfspace),
            "ptf" => Ok(ClassId::Ptf),
            _ => Err(Error::Parameter(format!("unknown class '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BbsBound {
    pub class: ClassId,
    /// Upper bound on the number of non-constant blocks.
    pub max_nonconstant: f64,
    /// The bound as a fraction of all `r^d` blocks.
    pub epsilon: f64,
}

/// Closed-form bound on `bbs(class, r)` in dimension `d`. For PTFs the bound
/// is stated through `epsilon = 3 sqrt(24) d k / r`.
pub fn bbs_bound(class: &ClassId, r: usize, d: usize, k: usize) -> Result<BbsBound> {
    if r == 0 || d == 0 || k == 0 {
        return param("r, d and k must be positive");
    }
    let (r_f, d_f, k_f) = (r as f64, d as f64, k as f64);
    let cells = r_f.powi(d as i32);
    let face = r_f.powi(d as i32 - 1);
    let max = match class {
        ClassId::Monotone => d_f * face,
        ClassId::KAlternating => k_f * d_f * face,
        ClassId::Convex => 2.0 * d_f * k_f * face,
        ClassId::Halfspace => d_f * k_f * face,
        ClassId::Ptf => {
            let eps = 3.0 * 24f64.sqrt() * d_f * k_f / r_f;
            return Ok(BbsBound {
                class: class.clone(),
                max_nonconstant: eps * cells,
                epsilon: eps,
            });
        }
        ClassId::Composed { k, inner } => *k as f64 * bbs_bound(inner, r, d, 1)?.max_nonconstant,
    };
    Ok(BbsBound {
        class: class.clone(),
        max_nonconstant: max,
        epsilon: max / cells,
    })
}

/// The resolution rule each algorithm uses to pick `r` from `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResolutionRule {
    /// Functions of `k` convex sets: `2dk / eps`.
    Convex,
    /// One-sided convex tester: `6d / eps`.
    ConvexTester,
    /// Convex distance approximator: `3dk / eps`.
    ConvexDistance,
    /// Distribution-free monotonicity tester: `16d / eps`.
    DfMonotonicity,
    /// Hypergrid monotonicity tester: `4d / eps`.
    GridMonotonicity,
    /// Functions of `k` halfspaces: `dk / eps`.
    Halfspace,
    /// Degree-`k` PTFs: `9dk / eps`.
    Ptf,
    /// k-alternating functions: `dk / eps`.
    KAlternating,
}

impl std::str::FromStr for ResolutionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "convex" => ResolutionRule::Convex,
            "convex-tester" => ResolutionRule::ConvexTester,
            "convex-distance" => ResolutionRule::ConvexDistance,
            "df-monotonicity" => ResolutionRule::DfMonotonicity,
            "grid-monotonicity" => ResolutionRule::GridMonotonicity,
            "halfspace" | "halfspaces" => ResolutionRule::Halfspace,
            "ptf" => ResolutionRule::Ptf,
            "k-alternating" | "monotone" => ResolutionRule::KAlternating,
            _ => return Err(Error::Parameter(format!("unknown resolution rule '{s}'"))),
        })
    }
}

pub fn min_r_for_epsilon(rule: ResolutionRule, d: usize, k: usize, eps: f64) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0) {
        return param("epsilon must lie in (0, 1)");
    }
    if d == 0 || k == 0 {
        return param("d and k must be positive");
    }
    let (d, k) = (d as f64, k as f64);
    let x = match rule {
        ResolutionRule::Convex => 2.0 * d * k / eps,
        ResolutionRule::ConvexTester => 6.0 * d / eps,
        ResolutionRule::ConvexDistance => 3.0 * d * k / eps,
        ResolutionRule::DfMonotonicity => 16.0 * d / eps,
        ResolutionRule::GridMonotonicity => 4.0 * d / eps,
        ResolutionRule::Halfspace | ResolutionRule::KAlternating => d * k / eps,
        ResolutionRule::Ptf => 9.0 * d * k / eps,
    };
    Ok(ceil_usize(x).max(1))
}

/// Number of grid cells a halfspace `w.x = b` can cross inside `[0,1]^d`
/// split into `r` equal parts, by direct enumeration. Used by tests.
pub fn halfspace_cells_unit(w: &[f64], b: f64, r: usize) -> usize {
    let d = w.len();
    let shape = GridShape::new(r, d);
    shape
        .cells()
        .filter(|c| {
            let bx: Vec<(f64, f64)> = c.iter().map(|&j| (j as f64 / r as f64, (j + 1) as f64 / r as f64)).collect();
            halfspace_straddles(w, b, &bx)
        })
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concepts::generate;
    use crate::rng::stream;

    #[test]
    fn bound_examples() {
        assert_eq!(bbs_bound(&ClassId::Monotone, 16, 2, 1).unwrap().max_nonconstant, 32.0);
        assert_eq!(bbs_bound(&ClassId::Convex, 16, 2, 1).unwrap().max_nonconstant, 64.0);
        assert_eq!(bbs_bound(&ClassId::Halfspace, 16, 2, 3).unwrap().max_nonconstant, 96.0);
        let c = ClassId::Composed {
            k: 3,
            inner: Box::new(ClassId::Halfspace),
        };
        assert_eq!(bbs_bound(&c, 16, 2, 1).unwrap().max_nonconstant, 96.0);
        let ptf = bbs_bound(&ClassId::Ptf, 588, 2, 2).unwrap();
        assert!((ptf.epsilon - 12.0 * 24f64.sqrt() / 588.0).abs() < 1e-15);
        assert!("circle".parse::<ClassId>().is_err());
    }

    #[test]
    fn resolution_examples() {
        assert_eq!(min_r_for_epsilon(ResolutionRule::Convex, 2, 1, 0.25).unwrap(), 16);
        assert_eq!(min_r_for_epsilon(ResolutionRule::DfMonotonicity, 3, 1, 0.5).unwrap(), 96);
        assert_eq!(min_r_for_epsilon(ResolutionRule::Halfspace, 2, 1, 0.1).unwrap(), 20);
        assert_eq!(min_r_for_epsilon(ResolutionRule::Ptf, 1, 2, 0.25).unwrap(), 72);
        assert!(min_r_for_epsilon(ResolutionRule::Ptf, 1, 2, 1.0).is_err());
    }

    #[test]
    fn constant_and_threshold_counts() {
        let p = BlockPartition::uniform_unit(8, 1);
        let one = Concept::Constant { value: 1 };
        assert_eq!(count_nonconstant_blocks(&one, &p, 16, &mut stream(0)).unwrap().count, 0);
        assert_eq!(corner_oracle_nonconstant(&one, &p).unwrap().count, 0);
        let t = Concept::halfspace(vec![1.0], 0.33);
        assert!(count_nonconstant_blocks(&t, &p, 64, &mut stream(0)).unwrap().count <= 1);
        assert_eq!(corner_oracle_nonconstant(&t, &p).unwrap().count, 1);
    }

    #[test]
    fn probes_are_monotone() {
        let p = BlockPartition::uniform_unit(16, 2);
        let disk = generate::disk(2, &mut stream(2));
        let a = count_nonconstant_blocks(&disk, &p, 8, &mut stream(7)).unwrap();
        let b = count_nonconstant_blocks(&disk, &p, 64, &mut stream(7)).unwrap();
        assert!(a.count <= b.count);
        assert!(a.cells.iter().all(|c| b.cells.contains(c)));
        let exact = analytic_nonconstant(&disk, &p).unwrap().unwrap();
        assert!(b.count <= exact.count);
    }

    #[test]
    fn polygon_clip() {
        let tri = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(polygon_straddles(&tri, &[(0.4, 0.6), (0.4, 0.6)]));
        assert!(!polygon_straddles(&tri, &[(0.0, 0.1), (0.0, 0.1)]));
        assert!(!polygon_straddles(&tri, &[(0.8, 0.9), (0.8, 0.9)]));
        assert!(polygon_straddles(&tri, &[(f64::NEG_INFINITY, 0.1), (0.0, 0.1)]));
    }
}
