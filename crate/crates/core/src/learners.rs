//! Agnostic learners over induced block partitions.
//!
//! Two grid learners are provided: per-cell majority over all of `[r]^d`
//! (brute force) and least-squares regression onto low-degree Walsh
//! features followed by threshold rounding. Both run on continuous product
//! distributions through a plain partition and on finite ones through an
//! augmented partition, where a hypothesis averages over a stored tag set.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bbs::{min_r_for_epsilon, ClassId, ResolutionRule};
use crate::blockgrid::{
    induce_augmented_partition, induce_partition, round_up_to_multiple, Partition, TvEstimate,
};
use crate::concepts::{sign, BooleanFn};
use crate::error::{param, Error, Result};
use crate::grid::GridShape;
use crate::product_dist::{augment, sample_labeled, sample_point, LabeledOracle, ProductDistribution};
use crate::rng::Stream;
use crate::stats::{ceil_usize, Estimate};
use crate::walsh::{
    fwht_axes, low_degree_features, mask_dims, max_degree_within_budget, project_index, psi, support_mask,
    WalshExpansion,
};

pub const HYPOTHESIS_FORMAT_VERSION: u32 = 1;

/// Largest `r^d` for brute-force tables.
pub const TABLE_BUDGET: usize = 1 << 22;

/// Largest sub-grid histogram used when building the normal equations.
const SUBGRID_BUDGET: usize = 1 << 22;

/// Largest finite support enumerated for exact error evaluation.
pub const SUPPORT_BUDGET: usize = 1 << 16;

/// Sample size that makes an induced `r`-partition `tv`-close to uniform
/// with probability `1 - fail`, from
/// `P[TV > tv] <= 4 r d exp(-tv^2 m / (c r d^2))`, rounded up to a multiple of `r`.
pub fn uniform_grid_size(r: usize, d: usize, tv: f64, fail: f64, c: f64) -> usize {
    let (rf, df) = (r as f64, d as f64);
    let m = c * rf * df * df / (tv * tv) * (4.0 * rf * df / fail).ln();
    round_up_to_multiple(ceil_usize(m), r)
}

/// Leading constants for every sample-size expression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Constants {
    /// Denominator constant of the grid-uniformity exponent.
    pub grid_const: f64,
    /// Target TV distance of the induced grid, as a fraction of epsilon.
    pub grid_tv_fraction: f64,
    /// Failure probability allowed for grid induction.
    pub grid_fail: f64,
    /// Regression samples per feature, times `1 / eps^2`.
    pub regression_const: f64,
    /// Rounding samples: `c ln 12 / eps^2`.
    pub rounding_const: f64,
    /// `delta = c eps^4 / k^2` for halfspaces and `c eps^(2^(k+1))` for PTFs.
    pub noise_const: f64,
    /// `t = ceil(c k sqrt(d) / eps^2)` for k-alternating functions.
    pub k_alternating_const: f64,
    /// Cap on the number of Walsh features.
    pub feature_budget: usize,
    /// Failure probability for the tag set of the finite pipeline.
    pub tag_fail: f64,
    pub ridge: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            grid_const: 18.0,
            grid_tv_fraction: 1.0 / 3.0,
            grid_fail: 1.0 / 6.0,
            regression_const: 8.0,
            rounding_const: 32.0,
            noise_const: 1.0,
            k_alternating_const: 2.0,
            feature_budget: 4096,
            tag_fail: 1.0 / 6.0,
            ridge: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    BruteForce,
    Regression,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub class: ClassId,
    pub d: usize,
    pub k: usize,
    pub epsilon: f64,
    pub mode: Mode,
    pub finite_mode: bool,
    /// Resolution from the class rule, before any power-of-two rounding.
    pub r_raw: usize,
    /// Resolution actually used for the partition.
    pub r: usize,
    /// Walsh degree bound: features have fewer than `t` nonzero entries.
    pub t: usize,
    /// Degree bound before the feature budget was applied.
    pub t_requested: usize,
    pub t_clamped: bool,
    pub grid_m: usize,
    /// Labeled samples for the grid learner.
    pub samples: usize,
    pub rounding_samples: usize,
    pub tag_count: usize,
    pub ridge: f64,
    pub feature_budget: usize,
    /// Reweighting rounds toward an L1 fit; 0 keeps least squares.
    #[serde(default)]
    pub l1_iterations: usize,
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return param("epsilon must lie in (0, 1)");
        }
        if self.r < 2 || self.grid_m % self.r != 0 || self.grid_m == 0 {
            return param(format!("grid_m = {} must be a positive multiple of r = {}", self.grid_m, self.r));
        }
        if self.mode == Mode::Regression && !self.r.is_power_of_two() {
            return param("regression needs r to be a power of two");
        }
        if self.samples == 0 || self.t == 0 {
            return param("samples and t must be positive");
        }
        if self.finite_mode && self.tag_count == 0 {
            return param("finite mode needs a nonempty tag set");
        }
        Ok(())
    }

    /// Tag-set size `2 d ln(r) ln(1 / fail) / eps^2`.
    pub fn default_tag_count(d: usize, r: usize, eps: f64, fail: f64) -> usize {
        ceil_usize(2.0 * d as f64 * (r as f64).ln() * (1.0 / fail).ln() / (eps * eps)).max(1)
    }
}

/// Samples for learning an arbitrary function on `[r]^d` to error `eps`:
/// `2 (r^d ln 2 + ln 12) / eps^2`.
pub fn brute_force_samples(r: usize, d: usize, eps: f64) -> usize {
    let cells = (r as f64).powi(d as i32);
    ceil_usize(2.0 * (cells * 2f64.ln() + 12f64.ln()) / (eps * eps))
}

/// Parameter bundle for a class at accuracy `eps`.
pub fn preset(class: &ClassId, d: usize, k: usize, eps: f64, c: &Constants) -> Result<LearnerConfig> {
    if !(eps > 0.0 && eps < 1.0) {
        return param("epsilon must lie in (0, 1)");
    }
    let mut cfg = LearnerConfig {
        class: class.clone(),
        d,
        k,
        epsilon: eps,
        mode: Mode::Regression,
        finite_mode: false,
        r_raw: 0,
        r: 0,
        t: 1,
        t_requested: 1,
        t_clamped: false,
        grid_m: 0,
        samples: 0,
        rounding_samples: ceil_usize(c.rounding_const * 12f64.ln() / (eps * eps)),
        tag_count: 0,
        ridge: c.ridge,
        feature_budget: c.feature_budget,
        l1_iterations: 0,
    };
    let (kf, df) = (k as f64, d as f64);
    let t_requested = match class {
        ClassId::Convex => {
            cfg.mode = Mode::BruteForce;
            cfg.r_raw = min_r_for_epsilon(ResolutionRule::Convex, d, k, eps)?;
            cfg.r = cfg.r_raw;
            cfg.samples = brute_force_samples(cfg.r, d, eps / 3.0);
            cfg.grid_m = uniform_grid_size(cfg.r, d, eps / 3.0, c.grid_fail, c.grid_const);
            cfg.tag_count = LearnerConfig::default_tag_count(d, cfg.r, eps, c.tag_fail);
            return Ok(cfg);
        }
        ClassId::Halfspace => {
            cfg.r_raw = min_r_for_epsilon(ResolutionRule::Halfspace, d, k, eps)?;
            let delta = c.noise_const * eps.powi(4) / (kf * kf);
            ceil_usize(2.0 / delta)
        }
        ClassId::Ptf => {
            cfg.r_raw = min_r_for_epsilon(ResolutionRule::Ptf, d, k, eps)?;
            let delta = c.noise_const * eps.powf(2f64.powi(k as i32 + 1));
            let t = 2.0 / delta;
            if t.is_finite() {
                ceil_usize(t)
            } else {
                usize::MAX
            }
        }
        ClassId::Monotone | ClassId::KAlternating => {
            let k = if *class == ClassId::Monotone { 1 } else { k };
            cfg.r_raw = min_r_for_epsilon(ResolutionRule::KAlternating, d, k, eps)?;
            ceil_usize(c.k_alternating_const * k as f64 * df.sqrt() / (eps * eps))
        }
        ClassId::Composed { .. } => return param("composed classes have no learner preset"),
    };
    cfg.r = cfg.r_raw.next_power_of_two().max(2);
    cfg.t_requested = t_requested;
    cfg.t = max_degree_within_budget(cfg.r, d, t_requested, c.feature_budget);
    cfg.t_clamped = cfg.t < t_requested.min(d + 1);
    let features = crate::walsh::feature_count(cfg.r, d, cfg.t) as f64;
    cfg.samples = ceil_usize(c.regression_const * features / (eps * eps));
    cfg.grid_m = uniform_grid_size(cfg.r, d, c.grid_tv_fraction * eps, c.grid_fail, c.grid_const);
    cfg.tag_count = LearnerConfig::default_tag_count(d, cfg.r, eps, c.tag_fail);
    Ok(cfg)
}

/// Real values on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GridValues {
    Table { values: Vec<f64> },
    Walsh { expansion: WalshExpansion },
}

/// `x -> sign(gamma(x) - threshold)` where `gamma(x)` is the grid value at
/// `block(x)`, or its mean over the tag set for augmented partitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub partition: Partition,
    pub values: GridValues,
    pub threshold: f64,
    pub tags: Option<Vec<Vec<f64>>>,
}

impl Hypothesis {
    pub fn grid_value(&self, cell: &[usize]) -> f64 {
        let v = match &self.values {
            GridValues::Table { values } => values[self.partition.shape().index(cell)],
            GridValues::Walsh { expansion } => expansion.eval(cell),
        };
        v.clamp(-1.0, 1.0)
    }

    pub fn gamma(&self, x: &[f64]) -> f64 {
        match &self.tags {
            None => self.grid_value(&self.partition.locate(x, None).expect("plain partition")),
            Some(tags) => {
                let s: f64 = tags
                    .iter()
                    .map(|z| self.grid_value(&self.partition.locate(x, Some(z)).expect("tag given")))
                    .sum();
                s / tags.len() as f64
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> i8 {
        sign(self.gamma(x) - self.threshold)
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct File<'a> {
            version: u32,
            hypothesis: &'a Hypothesis,
        }
        Ok(serde_json::to_string(&File {
            version: HYPOTHESIS_FORMAT_VERSION,
            hypothesis: self,
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct File {
            version: u32,
            hypothesis: Hypothesis,
        }
        let f: File = serde_json::from_str(s)?;
        if f.version != HYPOTHESIS_FORMAT_VERSION {
            return Err(Error::Serde(format!("unsupported hypothesis version {}", f.version)));
        }
        Ok(f.hypothesis)
    }
}

impl BooleanFn for Hypothesis {
    fn eval(&self, x: &[f64]) -> i8 {
        self.predict(x)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearnOutcome {
    pub hypothesis: Hypothesis,
    pub grid_m: usize,
    pub samples: usize,
    pub rounding_samples: usize,
    pub features: usize,
}

fn draw_tags(count: usize, d: usize, rng: &mut Stream) -> Vec<Vec<f64>> {
    (0..count).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect()
}

fn build_partition(dist: &ProductDistribution, m: usize, r: usize, finite: bool, rng: &mut Stream) -> Result<Partition> {
    let pts: Vec<Vec<f64>> = (0..m).map(|_| sample_point(dist, rng)).collect();
    if finite {
        let aug: Vec<_> = pts.iter().map(|x| augment(x, rng)).collect();
        Ok(induce_augmented_partition(&aug, r, rng)?.into())
    } else {
        Ok(induce_partition(&pts, r, rng)?.into())
    }
}

/// Draws `n` labeled samples of `D^block`: the cell of each (augmented) point.
fn block_samples(oracle: &LabeledOracle, p: &Partition, n: usize, rng: &mut Stream) -> Vec<(usize, i8)> {
    let d = oracle.dims();
    (0..n)
        .map(|_| {
            let (x, b) = sample_labeled(oracle, rng);
            let cell = if p.is_augmented() {
                let z: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
                p.locate_index(&x, Some(&z))
            } else {
                p.locate_index(&x, None)
            }
            .expect("tag supplied for augmented partitions");
            (cell, b)
        })
        .collect()
}

/// Per-cell majority over `[r]^d`; empty cells take the global majority and
/// ties go to `+1`.
pub fn majority_table(samples: &[(usize, i8)], cells: usize) -> Vec<f64> {
    let mut sums = vec![0i64; cells];
    let mut seen = vec![false; cells];
    let mut total = 0i64;
    for &(c, b) in samples {
        sums[c] += b as i64;
        seen[c] = true;
        total += b as i64;
    }
    let global = if total >= 0 { 1.0 } else { -1.0 };
    sums.iter()
        .zip(&seen)
        .map(|(&s, &hit)| if !hit { global } else if s >= 0 { 1.0 } else { -1.0 })
        .collect()
}

/// Brute-force agnostic learner over all functions on `[r]^d`.
pub fn brute_force_learn(cfg: &LearnerConfig, oracle: &LabeledOracle, rng: &mut Stream) -> Result<LearnOutcome> {
    cfg.validate()?;
    let d = oracle.dims();
    let cells = GridShape::new(cfg.r, d).ensure_within(TABLE_BUDGET, "brute-force table")?;
    let p = build_partition(&oracle.marginal, cfg.grid_m, cfg.r, cfg.finite_mode, rng)?;
    let samples = block_samples(oracle, &p, cfg.samples, rng);
    let values = majority_table(&samples, cells);
    let tags = cfg.finite_mode.then(|| draw_tags(cfg.tag_count, d, rng));
    Ok(LearnOutcome {
        hypothesis: Hypothesis {
            partition: p,
            values: GridValues::Table { values },
            threshold: 0.0,
            tags,
        },
        grid_m: cfg.grid_m,
        samples: cfg.samples,
        rounding_samples: 0,
        features: cells,
    })
}

/// Least squares onto `span(features)` over the sampled cells of `[n]^d`,
/// solving `(X'X / N + ridge I) c = X'y / N` by Cholesky.
///
/// `X'X[a, b] = sum_x count(x) psi_{a xor b}(x)` depends only on the
/// projection of the sample onto `supp(a) | supp(b)`, so the Gram matrix is
/// read off Walsh transforms of projected histograms when those are small.
pub fn regression_fit(
    features: &[Vec<usize>],
    samples: &[(usize, i8)],
    n: usize,
    d: usize,
    ridge: f64,
) -> Result<WalshExpansion> {
    if samples.is_empty() || features.is_empty() {
        return param("regression needs samples and features");
    }
    let shape = GridShape::new(n, d);
    let mut agg: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    for &(c, b) in samples {
        let e = agg.entry(c).or_insert((0.0, 0.0));
        e.0 += 1.0;
        e.1 += b as f64;
    }
    let cells: Vec<(Vec<usize>, f64, f64)> = agg.iter().map(|(&c, &(k, l))| (shape.cell(c), k, l)).collect();
    fit_weighted(features, &cells, samples.len() as f64, n, d, ridge)
}

/// L1 regression by iteratively reweighted least squares, started from the
/// L2 fit. Samples sharing a cell and label share a weight.
pub fn regression_fit_l1(
    features: &[Vec<usize>],
    samples: &[(usize, i8)],
    n: usize,
    d: usize,
    ridge: f64,
    iterations: usize,
) -> Result<WalshExpansion> {
    let mut fit = regression_fit(features, samples, n, d, ridge)?;
    let shape = GridShape::new(n, d);
    let mut groups: BTreeMap<(usize, i8), f64> = BTreeMap::new();
    for &(c, b) in samples {
        *groups.entry((c, b)).or_insert(0.0) += 1.0;
    }
    let groups: Vec<(Vec<usize>, i8, f64)> = groups.into_iter().map(|((c, b), k)| (shape.cell(c), b, k)).collect();
    for _ in 0..iterations {
        let mut agg: BTreeMap<Vec<usize>, (f64, f64)> = BTreeMap::new();
        let mut total = 0.0;
        for (x, b, k) in &groups {
            // floor keeps the weights finite on interpolated cells
            let w = k / (fit.eval(x) - *b as f64).abs().max(1e-3);
            let e = agg.entry(x.clone()).or_insert((0.0, 0.0));
            e.0 += w;
            e.1 += w * *b as f64;
            total += w;
        }
        let cells: Vec<(Vec<usize>, f64, f64)> = agg.into_iter().map(|(x, (w, l))| (x, w, l)).collect();
        fit = fit_weighted(features, &cells, total, n, d, ridge)?;
    }
    Ok(fit)
}

/// Solves the weighted normal equations for cells `(x, weight, weight * label)`.
fn fit_weighted(
    features: &[Vec<usize>],
    cells: &[(Vec<usize>, f64, f64)],
    total: f64,
    n: usize,
    d: usize,
    ridge: f64,
) -> Result<WalshExpansion> {
    let f = features.len();
    let masks: Vec<u64> = features.iter().map(|a| support_mask(a)).collect();
    let widest = masks
        .iter()
        .flat_map(|a| masks.iter().map(move |b| (a | b).count_ones()))
        .max()
        .unwrap_or(0) as usize;
    let use_subgrids = GridShape::new(n, widest).checked_len().is_some_and(|s| s <= SUBGRID_BUDGET);

    let mut gram = DMatrix::<f64>::zeros(f, f);
    let mut rhs = DVector::<f64>::zeros(f);
    if use_subgrids {
        let mut count_tables: HashMap<u64, (Vec<usize>, Vec<f64>)> = HashMap::new();
        let mut label_tables: HashMap<u64, (Vec<usize>, Vec<f64>)> = HashMap::new();
        let table = |mask: u64, weight: &dyn Fn(&(Vec<usize>, f64, f64)) -> f64| {
            let dims = mask_dims(mask);
            let mut h = vec![0.0; GridShape::new(n, dims.len()).len()];
            for c in cells {
                h[project_index(&c.0, &dims, n)] += weight(c);
            }
            fwht_axes(&mut h, n, dims.len());
            (dims, h)
        };
        for a in 0..f {
            let lt = label_tables.entry(masks[a]).or_insert_with(|| table(masks[a], &|c| c.2));
            rhs[a] = lt.1[project_index(&features[a], &lt.0, n)];
            for b in a..f {
                let u = masks[a] | masks[b];
                let ct = count_tables.entry(u).or_insert_with(|| table(u, &|c| c.1));
                let xor: Vec<usize> = features[a].iter().zip(&features[b]).map(|(x, y)| x ^ y).collect();
                let v = ct.1[project_index(&xor, &ct.0, n)];
                gram[(a, b)] = v;
                gram[(b, a)] = v;
            }
        }
    } else {
        let mut phi = vec![0.0; f];
        for (x, k, l) in cells {
            for (a, alpha) in features.iter().enumerate() {
                phi[a] = alpha.iter().zip(x).map(|(&ai, &xi)| psi(ai, xi) as f64).product();
            }
            for a in 0..f {
                rhs[a] += l * phi[a];
                let w = k * phi[a];
                for b in a..f {
                    gram[(a, b)] += w * phi[b];
                }
            }
        }
        for a in 0..f {
            for b in 0..a {
                gram[(a, b)] = gram[(b, a)];
            }
        }
    }
    gram /= total;
    rhs /= total;
    for a in 0..f {
        gram[(a, a)] += ridge;
    }
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Singular(format!("normal equations with {f} features are not positive definite")))?;
    let coeffs = chol.solve(&rhs);
    Ok(WalshExpansion::new(n, d, features.to_vec(), coeffs.iter().cloned().collect()))
}

/// Threshold minimizing the empirical error of `sign(gamma - t)`. Candidates
/// are the smallest value, midpoints between consecutive distinct values and
/// a point above the largest value; the first minimizer wins.
pub fn round_to_threshold(gammas: &[f64], labels: &[i8]) -> f64 {
    assert_eq!(gammas.len(), labels.len());
    if gammas.is_empty() {
        return 0.0;
    }
    let mut pairs: Vec<(f64, i8)> = gammas.iter().cloned().zip(labels.iter().cloned()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // threshold at the smallest value: everything predicted +1
    let mut errors = pairs.iter().filter(|p| p.1 < 0).count() as i64;
    let mut best = (errors, pairs[0].0);
    let mut i = 0;
    while i < pairs.len() {
        let v = pairs[i].0;
        while i < pairs.len() && pairs[i].0 == v {
            // moving past v flips this point to -1
            errors += if pairs[i].1 > 0 { 1 } else { -1 };
            i += 1;
        }
        let t = if i < pairs.len() {
            0.5 * (v + pairs[i].0)
        } else {
            v + 1.0
        };
        if errors < best.0 {
            best = (errors, t);
        }
    }
    best.1
}

/// Draws `n` labeled samples and returns the empirical-risk-minimizing threshold for `gamma`.
pub fn round_with_oracle(gamma: &dyn Fn(&[f64]) -> f64, oracle: &LabeledOracle, n: usize, rng: &mut Stream) -> f64 {
    let mut gs = Vec::with_capacity(n);
    let mut ls = Vec::with_capacity(n);
    for _ in 0..n {
        let (x, b) = sample_labeled(oracle, rng);
        gs.push(gamma(&x));
        ls.push(b);
    }
    round_to_threshold(&gs, &ls)
}

fn point_key(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| v.to_bits()).collect()
}

/// The regression pipeline: induce a partition, regress block samples onto
/// low-degree Walsh features, then round.
pub fn downsample_learn(cfg: &LearnerConfig, oracle: &LabeledOracle, rng: &mut Stream) -> Result<LearnOutcome> {
    cfg.validate()?;
    if cfg.mode == Mode::BruteForce {
        return brute_force_learn(cfg, oracle, rng);
    }
    let d = oracle.dims();
    let p = build_partition(&oracle.marginal, cfg.grid_m, cfg.r, cfg.finite_mode, rng)?;
    let samples = block_samples(oracle, &p, cfg.samples, rng);
    let features = low_degree_features(cfg.r, d, cfg.t, cfg.feature_budget)?;
    let expansion = if cfg.l1_iterations > 0 {
        regression_fit_l1(&features, &samples, cfg.r, d, cfg.ridge, cfg.l1_iterations)?
    } else {
        regression_fit(&features, &samples, cfg.r, d, cfg.ridge)?
    };
    let tags = cfg.finite_mode.then(|| draw_tags(cfg.tag_count, d, rng));
    let mut h = Hypothesis {
        partition: p,
        values: GridValues::Walsh { expansion },
        threshold: 0.0,
        tags,
    };
    // finite supports repeat points, so cache gamma per point
    let mut cache: HashMap<Vec<u64>, f64> = HashMap::new();
    let mut gs = Vec::with_capacity(cfg.rounding_samples);
    let mut ls = Vec::with_capacity(cfg.rounding_samples);
    for _ in 0..cfg.rounding_samples {
        let (x, b) = sample_labeled(oracle, rng);
        let g = if h.tags.is_some() {
            *cache.entry(point_key(&x)).or_insert_with(|| h.gamma(&x))
        } else {
            h.gamma(&x)
        };
        gs.push(g);
        ls.push(b);
    }
    h.threshold = round_to_threshold(&gs, &ls);
    Ok(LearnOutcome {
        hypothesis: h,
        grid_m: cfg.grid_m,
        samples: cfg.samples,
        rounding_samples: cfg.rounding_samples,
        features: features.len(),
    })
}

/// Error of a hypothesis against the oracle, averaging the exact conditional
/// error `Pr[b != h(x) | x]`. Exact when the marginal has a small finite
/// support, otherwise a Monte Carlo mean over `n` points.
pub fn test_error(h: &dyn Fn(&[f64]) -> i8, oracle: &LabeledOracle, n: usize, rng: &mut Stream) -> Estimate {
    if let Some(support) = oracle.marginal.enumerate_support(SUPPORT_BUDGET) {
        return Estimate::exact(support.iter().map(|(x, w)| w * oracle.conditional_error(x, h(x))).sum());
    }
    let vals: Vec<f64> = (0..n)
        .map(|_| {
            let x = sample_point(&oracle.marginal, rng);
            oracle.conditional_error(&x, h(&x))
        })
        .collect();
    Estimate::from_values(&vals)
}

/// Bayes error `E[min(p(x), 1 - p(x))]`: the optimum over all functions, and
/// the class optimum whenever the Bayes classifier lies in the class.
pub fn bayes_error(oracle: &LabeledOracle, n: usize, rng: &mut Stream) -> Estimate {
    let e = |x: &[f64]| {
        let p = oracle.prob_positive(x);
        p.min(1.0 - p)
    };
    if let crate::product_dist::LabelRule::Target { flip_prob, .. } = &oracle.label_rule {
        return Estimate::exact(*flip_prob);
    }
    if let Some(support) = oracle.marginal.enumerate_support(SUPPORT_BUDGET) {
        return Estimate::exact(support.iter().map(|(x, w)| w * e(x)).sum());
    }
    let vals: Vec<f64> = (0..n).map(|_| e(&sample_point(&oracle.marginal, rng))).collect();
    Estimate::from_values(&vals)
}

/// Both sides of the rounding inequality for a hypothesis:
/// `Pr[sign(gamma - t) != b]` and `1/2 E|gamma - b|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundingCheck {
    pub error: f64,
    pub half_l1: f64,
    /// Standard error of `error - half_l1` (0 when exact).
    pub stderr: f64,
}

pub fn rounding_check(h: &Hypothesis, oracle: &LabeledOracle, n: usize, rng: &mut Stream) -> RoundingCheck {
    let row = |x: &[f64], g: f64| {
        let p = oracle.prob_positive(x);
        let pred = sign(g - h.threshold);
        let err = if pred > 0 { 1.0 - p } else { p };
        let l1 = 0.5 * (p * (g - 1.0).abs() + (1.0 - p) * (g + 1.0).abs());
        (err, l1)
    };
    if let Some(support) = oracle.marginal.enumerate_support(SUPPORT_BUDGET) {
        let (mut e, mut l) = (0.0, 0.0);
        for (x, w) in &support {
            let (a, b) = row(x, h.gamma(x));
            e += w * a;
            l += w * b;
        }
        return RoundingCheck {
            error: e,
            half_l1: l,
            stderr: 0.0,
        };
    }
    let rows: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let x = sample_point(&oracle.marginal, rng);
            row(&x, h.gamma(&x))
        })
        .collect();
    let diff: Vec<f64> = rows.iter().map(|(a, b)| a - b).collect();
    let n = rows.len().max(1) as f64;
    RoundingCheck {
        error: rows.iter().map(|r| r.0).sum::<f64>() / n,
        half_l1: rows.iter().map(|r| r.1).sum::<f64>() / n,
        stderr: Estimate::from_values(&diff).stderr,
    }
}

/// TV of the hypothesis partition to uniform, for reporting.
pub fn hypothesis_tv(h: &Hypothesis, dist: &ProductDistribution, n: usize, rng: &mut Stream) -> TvEstimate {
    crate::blockgrid::estimate_tv_to_uniform(&h.partition, dist, n, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walsh::walsh_eval;

    #[test]
    fn single_feature_is_recovered() {
        let features = low_degree_features(4, 2, 3, 100).unwrap();
        let target = vec![2, 3];
        let shape = GridShape::new(4, 2);
        let samples: Vec<(usize, i8)> = (0..shape.len())
            .flat_map(|i| {
                let v = walsh_eval(&target, &shape.cell(i), 4).unwrap();
                std::iter::repeat_n((i, v), 3)
            })
            .collect();
        let e = regression_fit(&features, &samples, 4, 2, 1e-8).unwrap();
        for (a, c) in features.iter().zip(&e.coeffs) {
            if *a == target {
                assert!((c - 1.0).abs() < 1e-6);
            } else {
                assert!(c.abs() < 1e-8, "{a:?} {c}");
            }
        }
    }

    #[test]
    fn constant_labels() {
        let features = low_degree_features(4, 1, 2, 100).unwrap();
        let samples: Vec<(usize, i8)> = (0..20).map(|i| (i % 4, 1)).collect();
        let e = regression_fit(&features, &samples, 4, 1, 1e-8).unwrap();
        assert!((e.coeffs[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn full_basis_interpolates() {
        let features = low_degree_features(4, 1, 4, 100).unwrap();
        let labels = [1i8, -1, -1, 1];
        let samples: Vec<(usize, i8)> = labels.iter().enumerate().map(|(i, &b)| (i, b)).collect();
        let e = regression_fit(&features, &samples, 4, 1, 1e-8).unwrap();
        for (i, &b) in labels.iter().enumerate() {
            assert!((e.eval(&[i]) - b as f64).abs() < 1e-6);
        }
    }

    #[test]
    fn l1_resists_an_outlier() {
        let features = low_degree_features(2, 1, 1, 10).unwrap();
        // nine +1 labels and one -1: the L1 constant is the median
        let samples: Vec<(usize, i8)> = (0..10).map(|i| (i % 2, if i == 0 { -1 } else { 1 })).collect();
        let l2 = regression_fit(&features, &samples, 2, 1, 1e-8).unwrap();
        let l1 = regression_fit_l1(&features, &samples, 2, 1, 1e-8, 30).unwrap();
        assert!((l2.coeffs[0] - 0.8).abs() < 1e-6);
        assert!((l1.coeffs[0] - 1.0).abs() < 0.01, "{}", l1.coeffs[0]);
    }

    #[test]
    fn threshold_erm() {
        assert_eq!(round_to_threshold(&[-1.0, 1.0], &[-1, 1]), 0.0);
        let t = round_to_threshold(&[0.1, 0.2, 0.3], &[1, 1, 1]);
        assert!(t <= 0.1);
        let t = round_to_threshold(&[0.1, 0.2, 0.3], &[-1, -1, -1]);
        assert!(t > 0.3);
        let t = round_to_threshold(&[0.1, 0.2, 0.3, 0.4], &[-1, -1, 1, 1]);
        assert_eq!(t, 0.25);
    }

    #[test]
    fn presets() {
        let c = Constants::default();
        let h = preset(&ClassId::Halfspace, 2, 1, 0.1, &c).unwrap();
        assert_eq!(h.r_raw, 20);
        assert_eq!(h.r, 32);
        assert_eq!(h.t_requested, 20_000);
        assert_eq!(h.t, 3);
        assert!(!h.t_clamped);
        let cv = preset(&ClassId::Convex, 2, 1, 0.25, &c).unwrap();
        assert_eq!(cv.mode, Mode::BruteForce);
        assert_eq!(cv.r, 16);
        let p = preset(&ClassId::Ptf, 1, 2, 0.25, &c).unwrap();
        assert_eq!((p.r_raw, p.r), (72, 128));
    }

    #[test]
    fn grid_size_formula() {
        // 18 r d^2 / eps^2 ln(24 r d) at r = 8, d = 2, eps = 0.1
        let m = uniform_grid_size(8, 2, 0.1, 1.0 / 6.0, 18.0);
        let expect = 18.0 * 8.0 * 4.0 / 0.01 * (384f64).ln();
        assert!(m as f64 >= expect && (m as f64) < expect + 9.0);
        assert_eq!(m % 8, 0);
    }
}
