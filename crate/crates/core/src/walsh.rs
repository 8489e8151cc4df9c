//! Walsh basis on `[n]^d` for `n` a power of two.
//!
//! Points and indices are 0-based: `psi_a(z) = (-1)^popcount(a & z)` and
//! `psi_alpha(x) = prod_i psi_{alpha_i}(x_i)`. The transform is normalized so
//! that `fhat(alpha) = E_{x ~ [n]^d}[f(x) psi_alpha(x)]`.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::grid::GridShape;
use crate::rng::Stream;
use crate::stats::Estimate;

/// Largest table handled by the dense transforms.
pub const TRANSFORM_BUDGET: usize = 1 << 24;

/// Largest per-support lookup table built by [`WalshExpansion`].
pub const SUPPORT_TABLE_BUDGET: usize = 1 << 20;

fn check_n(n: usize) -> Result<()> {
    if n < 2 || !n.is_power_of_two() {
        return param(format!("n = {n} must be a power of two and at least 2"));
    }
    Ok(())
}

#[inline]
pub fn psi(a: usize, z: usize) -> i8 {
    if (a & z).count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// `psi_alpha(x)` with 0-based `x`.
pub fn walsh_eval(alpha: &[usize], x: &[usize], n: usize) -> Result<i8> {
    check_n(n)?;
    if alpha.len() != x.len() || alpha.iter().chain(x).any(|&v| v >= n) {
        return param("alpha and x must have equal length with entries below n");
    }
    Ok(alpha.iter().zip(x).map(|(&a, &z)| psi(a, z)).product())
}

/// `|alpha|`: the number of nonzero entries.
pub fn degree(alpha: &[usize]) -> usize {
    alpha.iter().filter(|&&a| a != 0).count()
}

/// In-place unnormalized Walsh-Hadamard butterflies along every axis of an
/// `n^d` table (dimension 0 fastest).
pub fn fwht_axes(data: &mut [f64], n: usize, d: usize) {
    let mut stride = 1;
    for _ in 0..d {
        let block = stride * n;
        let mut h = 1;
        while h < n {
            for base in (0..data.len()).step_by(block) {
                for off in 0..stride {
                    let row = base + off;
                    let mut i = 0;
                    while i < n {
                        for j in i..i + h {
                            let a = row + j * stride;
                            let b = row + (j + h) * stride;
                            let (x, y) = (data[a], data[b]);
                            data[a] = x + y;
                            data[b] = x - y;
                        }
                        i += 2 * h;
                    }
                }
            }
            h *= 2;
        }
        stride = block;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalshSpectrum {
    pub n: usize,
    pub d: usize,
    /// `fhat` indexed like the grid `[n]^d`.
    pub coeffs: Vec<f64>,
}

impl WalshSpectrum {
    pub fn shape(&self) -> GridShape {
        GridShape::new(self.n, self.d)
    }

    pub fn coeff(&self, alpha: &[usize]) -> f64 {
        self.coeffs[self.shape().index(alpha)]
    }

    /// Total squared weight on each level `|alpha| = 0..=d`.
    pub fn level_weights(&self) -> Vec<f64> {
        let shape = self.shape();
        let mut out = vec![0.0; self.d + 1];
        let mut cell = vec![0; self.d];
        for (i, c) in self.coeffs.iter().enumerate() {
            shape.cell_into(i, &mut cell);
            out[degree(&cell)] += c * c;
        }
        out
    }
}

pub fn transform(table: &[f64], n: usize, d: usize) -> Result<WalshSpectrum> {
    check_n(n)?;
    let len = GridShape::new(n, d).ensure_within(TRANSFORM_BUDGET, "Walsh transform")?;
    if table.len() != len {
        return param("table length must be n^d");
    }
    let mut coeffs = table.to_vec();
    fwht_axes(&mut coeffs, n, d);
    let scale = 1.0 / len as f64;
    coeffs.iter_mut().for_each(|c| *c *= scale);
    Ok(WalshSpectrum { n, d, coeffs })
}

pub fn inverse_transform(spec: &WalshSpectrum) -> Result<Vec<f64>> {
    check_n(spec.n)?;
    spec.shape().ensure_within(TRANSFORM_BUDGET, "Walsh transform")?;
    let mut out = spec.coeffs.clone();
    fwht_axes(&mut out, spec.n, spec.d);
    Ok(out)
}

/// `delta` is the per-coordinate resampling probability and
/// `rho = 1 - n delta / (n - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub n: usize,
    pub delta: f64,
    pub rho: f64,
}

impl NoiseParams {
    pub fn new(n: usize, delta: f64) -> Result<Self> {
        check_n(n)?;
        if !(0.0..=1.0).contains(&delta) {
            return param("delta must lie in [0, 1]");
        }
        Ok(NoiseParams {
            n,
            delta,
            rho: 1.0 - n as f64 * delta / (n as f64 - 1.0),
        })
    }
}

/// `stab_rho(f) = sum_alpha rho^|alpha| fhat(alpha)^2`.
pub fn stability(spec: &WalshSpectrum, rho: f64) -> f64 {
    spec.level_weights()
        .iter()
        .enumerate()
        .map(|(k, w)| rho.powi(k as i32) * w)
        .sum()
}

/// `ns_{n,delta}(f) = 1/2 - 1/2 stab_rho(f)`.
pub fn noise_sensitivity_exact(spec: &WalshSpectrum, delta: f64) -> Result<f64> {
    let p = NoiseParams::new(spec.n, delta)?;
    Ok(0.5 - 0.5 * stability(spec, p.rho))
}

/// Monte Carlo `Pr[f(u) != f(v)]`: `u` uniform, each `v_i` equal to `u_i`
/// with probability `1 - delta` and otherwise uniform on `[n] \ {u_i}`.
pub fn noise_sensitivity_mc(
    f: &dyn Fn(&[usize]) -> i8,
    n: usize,
    d: usize,
    delta: f64,
    trials: usize,
    rng: &mut Stream,
) -> Result<Estimate> {
    NoiseParams::new(n, delta)?;
    let mut u = vec![0usize; d];
    let mut v = vec![0usize; d];
    let mut hits = 0;
    for _ in 0..trials {
        for i in 0..d {
            u[i] = rng.random_range(0..n);
            v[i] = if rng.random::<f64>() < delta {
                let w = rng.random_range(0..n - 1);
                if w >= u[i] {
                    w + 1
                } else {
                    w
                }
            } else {
                u[i]
            };
        }
        if f(&u) != f(&v) {
            hits += 1;
        }
    }
    Ok(Estimate::from_hits(hits, trials))
}

/// `sum_{|alpha| >= t} fhat(alpha)^2`.
pub fn tail_weight(spec: &WalshSpectrum, t: usize) -> f64 {
    spec.level_weights().iter().skip(t).sum()
}

/// `T_rho f` evaluated in the time domain: each axis applies
/// `rho I + (1 - rho) J / n`, the transition of one noisy coordinate.
pub fn noise_operator_time_domain(table: &[f64], n: usize, d: usize, rho: f64) -> Vec<f64> {
    let mut data = table.to_vec();
    let mut stride = 1;
    for _ in 0..d {
        let block = stride * n;
        for base in (0..data.len()).step_by(block) {
            for off in 0..stride {
                let row = base + off;
                let mean = (0..n).map(|j| data[row + j * stride]).sum::<f64>() / n as f64;
                for j in 0..n {
                    let k = row + j * stride;
                    data[k] = rho * data[k] + (1.0 - rho) * mean;
                }
            }
        }
        stride = block;
    }
    data
}

fn binom(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// `sum_{j < t} C(d, j) (n - 1)^j`.
pub fn feature_count(n: usize, d: usize, t: usize) -> u128 {
    (0..t.min(d + 1))
        .map(|j| binom(d, j).saturating_mul(((n - 1) as u128).saturating_pow(j as u32)))
        .fold(0u128, |a, b| a.saturating_add(b))
}

/// The largest `t <= t_max` whose feature set fits in `budget`, at least 1.
pub fn max_degree_within_budget(n: usize, d: usize, t_max: usize, budget: usize) -> usize {
    let mut t = t_max.min(d + 1).max(1);
    while t > 1 && feature_count(n, d, t) > budget as u128 {
        t -= 1;
    }
    t
}

/// All `alpha` with fewer than `t` nonzero entries, by degree then support.
pub fn low_degree_features(n: usize, d: usize, t: usize, budget: usize) -> Result<Vec<Vec<usize>>> {
    check_n(n)?;
    if t == 0 {
        return param("t must be at least 1");
    }
    let count = feature_count(n, d, t);
    if count > budget as u128 {
        return Err(Error::Budget {
            what: "low-degree features",
            needed: count,
            budget: budget as u128,
        });
    }
    let mut out = Vec::with_capacity(count as usize);
    for j in 0..t.min(d + 1) {
        for support in combinations(d, j) {
            let mut vals = vec![1usize; j];
            loop {
                let mut alpha = vec![0usize; d];
                for (k, &i) in support.iter().enumerate() {
                    alpha[i] = vals[k];
                }
                out.push(alpha);
                let mut k = 0;
                while k < j {
                    vals[k] += 1;
                    if vals[k] < n {
                        break;
                    }
                    vals[k] = 1;
                    k += 1;
                }
                if k == j {
                    break;
                }
            }
        }
    }
    Ok(out)
}

fn combinations(d: usize, j: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(j);
    fn rec(start: usize, d: usize, j: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == j {
            out.push(cur.clone());
            return;
        }
        for i in start..d {
            cur.push(i);
            rec(i + 1, d, j, cur, out);
            cur.pop();
        }
    }
    rec(0, d, j, &mut cur, &mut out);
    out
}

/// Bitmask of the nonzero coordinates of `alpha`.
pub fn support_mask(alpha: &[usize]) -> u64 {
    alpha
        .iter()
        .enumerate()
        .filter(|(_, &a)| a != 0)
        .fold(0u64, |m, (i, _)| m | (1 << i))
}

pub fn mask_dims(mask: u64) -> Vec<usize> {
    (0..64).filter(|i| mask >> i & 1 == 1).collect()
}

/// Index of `x` restricted to `dims` in the sub-grid `[n]^|dims|`.
#[inline]
pub fn project_index(x: &[usize], dims: &[usize], n: usize) -> usize {
    dims.iter().rev().fold(0, |acc, &i| acc * n + x[i])
}

#[derive(Debug, Clone)]
struct SupportTable {
    dims: Vec<usize>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ExpansionRepr {
    n: usize,
    d: usize,
    features: Vec<Vec<usize>>,
    coeffs: Vec<f64>,
}

/// A sparse expansion `sum_alpha c_alpha psi_alpha`.
///
/// Features are grouped by support; each group is tabulated over its
/// support's sub-grid so evaluation is one lookup per support.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "ExpansionRepr", into = "ExpansionRepr")]
pub struct WalshExpansion {
    pub n: usize,
    pub d: usize,
    pub features: Vec<Vec<usize>>,
    pub coeffs: Vec<f64>,
    tables: Vec<SupportTable>,
    /// Features whose support table would exceed the budget.
    direct: Vec<usize>,
}

impl PartialEq for WalshExpansion {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.d == other.d && self.features == other.features && self.coeffs == other.coeffs
    }
}

impl From<ExpansionRepr> for WalshExpansion {
    fn from(r: ExpansionRepr) -> Self {
        WalshExpansion::new(r.n, r.d, r.features, r.coeffs)
    }
}

impl From<WalshExpansion> for ExpansionRepr {
    fn from(w: WalshExpansion) -> Self {
        ExpansionRepr {
            n: w.n,
            d: w.d,
            features: w.features,
            coeffs: w.coeffs,
        }
    }
}

impl WalshExpansion {
    pub fn new(n: usize, d: usize, features: Vec<Vec<usize>>, coeffs: Vec<f64>) -> Self {
        assert_eq!(features.len(), coeffs.len());
        let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for (k, a) in features.iter().enumerate() {
            groups.entry(support_mask(a)).or_default().push(k);
        }
        let mut tables = Vec::new();
        let mut direct = Vec::new();
        for (mask, members) in groups {
            let dims = mask_dims(mask);
            let size = GridShape::new(n, dims.len()).checked_len();
            match size {
                Some(size) if size <= SUPPORT_TABLE_BUDGET => {
                    let mut values = vec![0.0; size];
                    for &k in &members {
                        values[project_index(&features[k], &dims, n)] += coeffs[k];
                    }
                    fwht_axes(&mut values, n, dims.len());
                    tables.push(SupportTable { dims, values });
                }
                _ => direct.extend(members),
            }
        }
        WalshExpansion {
            n,
            d,
            features,
            coeffs,
            tables,
            direct,
        }
    }

    pub fn eval(&self, x: &[usize]) -> f64 {
        let mut s: f64 = self
            .tables
            .iter()
            .map(|t| t.values[project_index(x, &t.dims, self.n)])
            .sum();
        for &k in &self.direct {
            let a = &self.features[k];
            s += self.coeffs[k] * a.iter().zip(x).map(|(&ai, &xi)| psi(ai, xi) as f64).product::<f64>();
        }
        s
    }
}
