//! Product distributions on R^d, labeled-example oracles and augmented points.

use std::cmp::Ordering;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF, Exp, Normal};

use crate::concepts::BooleanFn;
use crate::error::{Error, Result};
use crate::rng::Stream;

/// A continuous one-dimensional preset. Sampling is by inverse CDF except for
/// `Beta`, which uses rejection from the uniform proposal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Continuous {
    Uniform { lo: f64, hi: f64 },
    Gaussian { mean: f64, std: f64 },
    Exponential { rate: f64 },
    /// Requires `a >= 1` and `b >= 1` so the density is bounded.
    Beta { a: f64, b: f64 },
}

impl Continuous {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Continuous::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            Continuous::Gaussian { mean, std } => mean.is_finite() && std > 0.0 && std.is_finite(),
            Continuous::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            Continuous::Beta { a, b } => a >= 1.0 && b >= 1.0 && a.is_finite() && b.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Distribution(format!("bad parameters for {self:?}")))
        }
    }

    pub fn sample(&self, rng: &mut Stream) -> f64 {
        match *self {
            Continuous::Uniform { lo, hi } => {
                let u: f64 = rng.random();
                lo + (hi - lo) * u
            }
            Continuous::Gaussian { mean, std } => {
                // open interval keeps the inverse CDF finite
                let u = open_unit(rng);
                Normal::new(mean, std).unwrap().inverse_cdf(u)
            }
            Continuous::Exponential { rate } => -(1.0 - rng.random::<f64>()).ln() / rate,
            Continuous::Beta { a, b } => {
                let mode = if a == 1.0 && b == 1.0 {
                    0.5
                } else {
                    (a - 1.0) / (a + b - 2.0)
                };
                let log_peak = beta_log_kernel(mode, a, b);
                loop {
                    let x: f64 = rng.random();
                    let u = open_unit(rng);
                    if u.ln() <= beta_log_kernel(x, a, b) - log_peak {
                        return x;
                    }
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Continuous::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Continuous::Gaussian { mean, std } => Normal::new(mean, std).unwrap().cdf(x),
            Continuous::Exponential { rate } => Exp::new(rate).unwrap().cdf(x),
            Continuous::Beta { a, b } => Beta::new(a, b).unwrap().cdf(x.clamp(0.0, 1.0)),
        }
    }

    pub fn inverse_cdf(&self, p: f64) -> f64 {
        match *self {
            Continuous::Uniform { lo, hi } => lo + (hi - lo) * p,
            Continuous::Gaussian { mean, std } => Normal::new(mean, std).unwrap().inverse_cdf(p),
            Continuous::Exponential { rate } => -(1.0 - p).ln() / rate,
            Continuous::Beta { a, b } => Beta::new(a, b).unwrap().inverse_cdf(p),
        }
    }
}

fn beta_log_kernel(x: f64, a: f64, b: f64) -> f64 {
    let la = if a == 1.0 { 0.0 } else { (a - 1.0) * x.ln() };
    let lb = if b == 1.0 { 0.0 } else { (b - 1.0) * (1.0 - x).ln() };
    la + lb
}

fn open_unit(rng: &mut Stream) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// A distribution on finitely many points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Finite {
    pub support: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Finite {
    pub fn new(support: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let f = Finite { support, weights };
        f.validate()?;
        Ok(f)
    }

    /// The uniform distribution on {-1, +1}.
    pub fn rademacher() -> Self {
        Finite {
            support: vec![-1.0, 1.0],
            weights: vec![0.5, 0.5],
        }
    }

    fn validate(&self) -> Result<()> {
        if self.support.is_empty() || self.support.len() != self.weights.len() {
            return Err(Error::Distribution("support and weights must be nonempty and of equal length".into()));
        }
        if self.support.windows(2).any(|w| !(w[0] < w[1])) || self.support.iter().any(|s| !s.is_finite()) {
            return Err(Error::Distribution("support points must be finite and strictly increasing".into()));
        }
        if self.weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::Distribution("weights must be nonnegative".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Distribution(format!("weights sum to {total}, not 1")));
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut Stream) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (s, w) in self.support.iter().zip(&self.weights) {
            acc += w;
            if u < acc {
                return *s;
            }
        }
        // rounding slack: return the last atom with positive weight
        let last = self.weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
        self.support[last]
    }

    /// Pr[X <= x].
    pub fn cdf(&self, x: f64) -> f64 {
        let k = self.support.partition_point(|&s| s <= x);
        self.weights[..k].iter().sum::<f64>().min(1.0)
    }

    /// Pr[X < x].
    pub fn cdf_left(&self, x: f64) -> f64 {
        let k = self.support.partition_point(|&s| s < x);
        self.weights[..k].iter().sum::<f64>().min(1.0)
    }

    /// Pr[X = x].
    pub fn atom(&self, x: f64) -> f64 {
        match self.support.binary_search_by(|s| s.total_cmp(&x)) {
            Ok(i) => self.weights[i],
            Err(_) => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Component {
    Continuous(Continuous),
    Finite(Finite),
}

impl Component {
    pub fn sample(&self, rng: &mut Stream) -> f64 {
        match self {
            Component::Continuous(c) => c.sample(rng),
            Component::Finite(f) => f.sample(rng),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Component::Continuous(c) => c.cdf(x),
            Component::Finite(f) => f.cdf(x),
        }
    }

    /// CDF of the augmented marginal `mu x unif[0,1]` at `(x, t)` under the
    /// lexicographic order. Equals the plain CDF for continuous components.
    pub fn augmented_cdf(&self, x: f64, t: f64) -> f64 {
        if x == f64::INFINITY {
            return 1.0;
        }
        if x == f64::NEG_INFINITY {
            return 0.0;
        }
        match self {
            Component::Continuous(c) => c.cdf(x),
            Component::Finite(f) => f.cdf_left(x) + f.atom(x) * t.clamp(0.0, 1.0),
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Component::Finite(_))
    }

    fn validate(&self) -> Result<()> {
        match self {
            Component::Continuous(c) => c.validate(),
            Component::Finite(f) => f.validate(),
        }
    }
}

/// `mu = mu_1 x ... x mu_d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductDistribution {
    pub components: Vec<Component>,
}

impl ProductDistribution {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        let p = ProductDistribution { components };
        p.validate()?;
        Ok(p)
    }

    pub fn iid(component: Component, d: usize) -> Result<Self> {
        Self::new(vec![component; d])
    }

    pub fn uniform_cube(d: usize) -> Self {
        Self::iid(Component::Continuous(Continuous::Uniform { lo: 0.0, hi: 1.0 }), d).unwrap()
    }

    pub fn gaussian(d: usize) -> Self {
        Self::iid(Component::Continuous(Continuous::Gaussian { mean: 0.0, std: 1.0 }), d).unwrap()
    }

    pub fn hypercube(d: usize) -> Self {
        Self::iid(Component::Finite(Finite::rademacher()), d).unwrap()
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::Distribution("at least one dimension is required".into()));
        }
        self.components.iter().try_for_each(Component::validate)
    }

    pub fn dims(&self) -> usize {
        self.components.len()
    }

    pub fn has_finite(&self) -> bool {
        self.components.iter().any(Component::is_finite)
    }

    /// Support points with their probabilities when every component is
    /// finite and the product support has at most `budget` points.
    pub fn enumerate_support(&self, budget: usize) -> Option<Vec<(Vec<f64>, f64)>> {
        let mut size: usize = 1;
        for c in &self.components {
            match c {
                Component::Finite(f) => size = size.checked_mul(f.support.len())?,
                Component::Continuous(_) => return None,
            }
        }
        if size > budget {
            return None;
        }
        let mut out = vec![(Vec::with_capacity(self.dims()), 1.0)];
        for c in &self.components {
            let Component::Finite(f) = c else { unreachable!() };
            let mut next = Vec::with_capacity(out.len() * f.support.len());
            for (p, w) in &out {
                for (s, sw) in f.support.iter().zip(&f.weights) {
                    if *sw > 0.0 {
                        let mut q = p.clone();
                        q.push(*s);
                        next.push((q, w * sw));
                    }
                }
            }
            out = next;
        }
        Some(out)
    }
}

pub fn sample_point(dist: &ProductDistribution, rng: &mut Stream) -> Vec<f64> {
    dist.components.iter().map(|c| c.sample(rng)).collect()
}

pub fn sample_points(dist: &ProductDistribution, m: usize, rng: &mut Stream) -> Vec<Vec<f64>> {
    (0..m).map(|_| sample_point(dist, rng)).collect()
}

/// How labels are attached to points.
#[derive(Clone)]
pub enum LabelRule {
    /// Label `f(x)`, flipped independently with probability `flip_prob`.
    Target { f: Arc<dyn BooleanFn>, flip_prob: f64 },
    /// Label `+1` with probability `p(x)`.
    Conditional(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for LabelRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LabelRule::Target { flip_prob, .. } => write!(f, "Target {{ flip_prob: {flip_prob} }}"),
            LabelRule::Conditional(_) => write!(f, "Conditional"),
        }
    }
}

/// A distribution over `R^d x {-1, +1}` with a product marginal.
#[derive(Debug, Clone)]
pub struct LabeledOracle {
    pub marginal: ProductDistribution,
    pub label_rule: LabelRule,
}

impl LabeledOracle {
    pub fn new(marginal: ProductDistribution, label_rule: LabelRule) -> Result<Self> {
        marginal.validate()?;
        if let LabelRule::Target { flip_prob, .. } = &label_rule {
            if !(0.0..0.5).contains(flip_prob) {
                return Err(Error::Parameter(format!("flip probability {flip_prob} must lie in [0, 1/2)")));
            }
        }
        Ok(LabeledOracle { marginal, label_rule })
    }

    pub fn target(marginal: ProductDistribution, f: Arc<dyn BooleanFn>, flip_prob: f64) -> Result<Self> {
        Self::new(marginal, LabelRule::Target { f, flip_prob })
    }

    pub fn dims(&self) -> usize {
        self.marginal.dims()
    }

    /// Pr[label = +1 | x].
    pub fn prob_positive(&self, x: &[f64]) -> f64 {
        match &self.label_rule {
            LabelRule::Target { f, flip_prob } => {
                if f.eval(x) > 0 {
                    1.0 - flip_prob
                } else {
                    *flip_prob
                }
            }
            LabelRule::Conditional(p) => p(x).clamp(0.0, 1.0),
        }
    }

    /// Pr[label != h | x] for a prediction `h`.
    pub fn conditional_error(&self, x: &[f64], h: i8) -> f64 {
        let p = self.prob_positive(x);
        if h > 0 {
            1.0 - p
        } else {
            p
        }
    }

    pub fn sample_label(&self, x: &[f64], rng: &mut Stream) -> i8 {
        match &self.label_rule {
            LabelRule::Target { f, flip_prob } => {
                let y = f.eval(x);
                if *flip_prob > 0.0 && rng.random::<f64>() < *flip_prob {
                    -y
                } else {
                    y
                }
            }
            LabelRule::Conditional(p) => {
                if rng.random::<f64>() < p(x).clamp(0.0, 1.0) {
                    1
                } else {
                    -1
                }
            }
        }
    }
}

pub fn sample_labeled(oracle: &LabeledOracle, rng: &mut Stream) -> (Vec<f64>, i8) {
    let x = sample_point(&oracle.marginal, rng);
    let y = oracle.sample_label(&x, rng);
    (x, y)
}

/// One augmented coordinate `(base, tag)` with a random tie-breaker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugCoord {
    pub base: f64,
    pub tag: f64,
    pub tie: u64,
}

impl AugCoord {
    pub fn new(base: f64, tag: f64, tie: u64) -> Self {
        AugCoord { base, tag, tie }
    }

    pub const LOWEST: AugCoord = AugCoord {
        base: f64::NEG_INFINITY,
        tag: 0.0,
        tie: 0,
    };
    pub const HIGHEST: AugCoord = AugCoord {
        base: f64::INFINITY,
        tag: 1.0,
        tie: u64::MAX,
    };
}

impl Eq for AugCoord {}

impl PartialOrd for AugCoord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for AugCoord {
    fn cmp(&self, other: &Self) -> Ordering {
        self.base
            .total_cmp(&other.base)
            .then(self.tag.total_cmp(&other.tag))
            .then(self.tie.cmp(&other.tie))
    }
}

/// A point of `R^d` with a uniform tag in `[0,1]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedPoint {
    pub base: Vec<f64>,
    pub tag: Vec<f64>,
    pub tie: Vec<u64>,
}

impl AugmentedPoint {
    /// Pairs a point with a given tag; the tie-breaker is set to the middle
    /// of its range.
    pub fn with_tag(base: &[f64], tag: &[f64]) -> Self {
        AugmentedPoint {
            base: base.to_vec(),
            tag: tag.to_vec(),
            tie: vec![u64::MAX / 2; base.len()],
        }
    }

    pub fn coord(&self, i: usize) -> AugCoord {
        AugCoord::new(self.base[i], self.tag[i], self.tie[i])
    }

    pub fn dims(&self) -> usize {
        self.base.len()
    }
}

pub fn augment(point: &[f64], rng: &mut Stream) -> AugmentedPoint {
    let tag = (0..point.len()).map(|_| rng.random::<f64>()).collect();
    let tie = (0..point.len()).map(|_| rng.random::<u64>()).collect();
    AugmentedPoint {
        base: point.to_vec(),
        tag,
        tie,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn finite_cdfs() {
        let f = Finite::new(vec![-1.0, 0.0, 2.0], vec![0.25, 0.25, 0.5]).unwrap();
        assert_eq!(f.cdf(0.0), 0.5);
        assert_eq!(f.cdf_left(0.0), 0.25);
        assert_eq!(f.atom(2.0), 0.5);
        assert_eq!(f.atom(1.0), 0.0);
        let c = Component::Finite(f);
        assert!((c.augmented_cdf(0.0, 0.5) - 0.375).abs() < 1e-15);
        assert_eq!(c.augmented_cdf(f64::INFINITY, 1.0), 1.0);
    }

    #[test]
    fn invalid_finite_rejected() {
        assert!(Finite::new(vec![1.0, 0.0], vec![0.5, 0.5]).is_err());
        assert!(Finite::new(vec![0.0, 1.0], vec![0.5, 0.6]).is_err());
        assert!(Finite::new(vec![0.0], vec![1.0 + 1e-13]).is_ok());
        assert!(ProductDistribution::new(vec![]).is_err());
    }

    #[test]
    fn beta_rejection_in_range() {
        let c = Continuous::Beta { a: 2.0, b: 5.0 };
        let mut rng = stream(3);
        let xs: Vec<f64> = (0..20_000).map(|_| c.sample(&mut rng)).collect();
        assert!(xs.iter().all(|x| (0.0..=1.0).contains(x)));
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((mean - 2.0 / 7.0).abs() < 0.01, "{mean}");
    }

    #[test]
    fn aug_order_is_lexicographic() {
        let a = AugCoord::new(1.0, 0.2, 5);
        let b = AugCoord::new(1.0, 0.3, 0);
        let c = AugCoord::new(1.5, 0.0, 0);
        assert!(a < b && b < c);
        assert!(AugCoord::LOWEST < a && c < AugCoord::HIGHEST);
    }

    #[test]
    fn enumerate_hypercube() {
        let p = ProductDistribution::hypercube(3);
        let s = p.enumerate_support(100).unwrap();
        assert_eq!(s.len(), 8);
        assert!((s.iter().map(|x| x.1).sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(ProductDistribution::gaussian(2).enumerate_support(100).is_none());
    }
}
