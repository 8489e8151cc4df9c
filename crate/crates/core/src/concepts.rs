//! Boolean functions on R^d and a serializable catalogue of concrete ones.
//!
//! Values are `+1` / `-1` as `i8`. Every threshold uses `sign(0) = +1`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::rng::Stream;

pub trait BooleanFn: Send + Sync {
    fn eval(&self, x: &[f64]) -> i8;
}

impl<F> BooleanFn for F
where
    F: Fn(&[f64]) -> i8 + Send + Sync,
{
    fn eval(&self, x: &[f64]) -> i8 {
        self(x)
    }
}

#[inline]
pub fn sign(v: f64) -> i8 {
    if v >= 0.0 {
        1
    } else {
        -1
    }
}

/// Combines the values of inner concepts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Gate {
    And,
    Or,
    Xor,
    Majority,
    /// Output for each input pattern; bit `i` of the index is set when inner
    /// concept `i` is `+1`.
    Table { outputs: Vec<i8> },
}

impl Gate {
    pub fn apply(&self, inputs: &[i8]) -> i8 {
        match self {
            Gate::And => {
                if inputs.iter().all(|&v| v > 0) {
                    1
                } else {
                    -1
                }
            }
            Gate::Or => {
                if inputs.iter().any(|&v| v > 0) {
                    1
                } else {
                    -1
                }
            }
            Gate::Xor => {
                if inputs.iter().filter(|&&v| v > 0).count() % 2 == 1 {
                    1
                } else {
                    -1
                }
            }
            Gate::Majority => sign(inputs.iter().map(|&v| v as f64).sum()),
            Gate::Table { outputs } => {
                let idx = inputs
                    .iter()
                    .enumerate()
                    .fold(0usize, |acc, (i, &v)| if v > 0 { acc | (1 << i) } else { acc });
                outputs[idx]
            }
        }
    }
}

/// A monomial coefficient with one exponent per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub coef: f64,
    pub exponents: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Concept {
    Constant { value: i8 },
    /// `sign(w . x - b)`.
    Halfspace { w: Vec<f64>, b: f64 },
    /// `+1` on the closed ball.
    Ball { center: Vec<f64>, radius: f64 },
    /// `+1` on a closed convex polygon given counter-clockwise.
    ConvexPolygon { vertices: Vec<[f64; 2]> },
    /// `sign(p(x))`.
    Ptf { terms: Vec<Monomial> },
    Compose { gate: Gate, inner: Vec<Concept> },
    /// Alternates at each threshold of `w . x`, starting from `start` below
    /// the first one. Monotone in every coordinate direction with `w >= 0`,
    /// so it is `thresholds.len()`-alternating.
    Staircase { w: Vec<f64>, thresholds: Vec<f64>, start: i8 },
    /// `(-1)^(sum_i floor((x_i - origin_i) / cell))`.
    Checkerboard { cell: f64, origin: Vec<f64> },
    /// `+1` on the union of closed boxes.
    BoxUnion { boxes: Vec<(Vec<f64>, Vec<f64>)> },
    /// `+1` iff some term has `x_i >= t` for all its `(i, t)`.
    MonotoneDnf { terms: Vec<Vec<(usize, f64)>> },
    Negate { inner: Box<Concept> },
}

impl Concept {
    pub fn halfspace(w: Vec<f64>, b: f64) -> Self {
        Concept::Halfspace { w, b }
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        Concept::Ball { center, radius }
    }

    pub fn negate(self) -> Self {
        Concept::Negate { inner: Box::new(self) }
    }

    /// Majority of coordinate signs: `sign(sum x_i)`.
    pub fn majority(d: usize) -> Self {
        Concept::Halfspace { w: vec![1.0; d], b: 0.0 }
    }

    /// Number of inner concepts for compositions, 1 otherwise.
    pub fn arity(&self) -> usize {
        match self {
            Concept::Compose { inner, .. } => inner.len(),
            _ => 1,
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            Concept::Constant { value } if *value != 1 && *value != -1 => param("constant must be +1 or -1"),
            Concept::Halfspace { w, .. } if w.len() != d => param("halfspace weight length differs from d"),
            Concept::Ball { center, radius } if center.len() != d || !(*radius >= 0.0) => {
                param("ball center length differs from d or radius negative")
            }
            Concept::ConvexPolygon { vertices } if d != 2 || vertices.len() < 3 => {
                param("polygons need d = 2 and at least three vertices")
            }
            Concept::Ptf { terms } if terms.iter().any(|t| t.exponents.len() != d) => {
                param("monomial exponent length differs from d")
            }
            Concept::Compose { gate, inner } => {
                if let Gate::Table { outputs } = gate {
                    if outputs.len() != 1 << inner.len() {
                        return param("gate table must have 2^k entries");
                    }
                }
                inner.iter().try_for_each(|c| c.validate(d))
            }
            Concept::Staircase { w, thresholds, start } => {
                if w.len() != d || thresholds.windows(2).any(|t| t[0] >= t[1]) || start.abs() != 1 {
                    param("staircase needs |w| = d, increasing thresholds and start = +-1")
                } else {
                    Ok(())
                }
            }
            Concept::Checkerboard { cell, origin } if origin.len() != d || !(*cell > 0.0) => {
                param("checkerboard needs |origin| = d and a positive cell")
            }
            Concept::BoxUnion { boxes } if boxes.iter().any(|(lo, hi)| lo.len() != d || hi.len() != d) => {
                param("box corners must have length d")
            }
            Concept::MonotoneDnf { terms } if terms.iter().flatten().any(|(i, _)| *i >= d) => {
                param("dnf literal refers to a missing coordinate")
            }
            Concept::Negate { inner } => inner.validate(d),
            _ => Ok(()),
        }
    }
}

impl BooleanFn for Concept {
    fn eval(&self, x: &[f64]) -> i8 {
        match self {
            Concept::Constant { value } => *value,
            Concept::Halfspace { w, b } => sign(dot(w, x) - b),
            Concept::Ball { center, radius } => {
                let r2: f64 = center.iter().zip(x).map(|(c, v)| (v - c) * (v - c)).sum();
                if r2 <= radius * radius {
                    1
                } else {
                    -1
                }
            }
            Concept::ConvexPolygon { vertices } => {
                let n = vertices.len();
                let inside = (0..n).all(|i| {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    (b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0]) >= 0.0
                });
                if inside {
                    1
                } else {
                    -1
                }
            }
            Concept::Ptf { terms } => {
                let v: f64 = terms
                    .iter()
                    .map(|t| t.coef * t.exponents.iter().zip(x).map(|(&e, &xi)| xi.powi(e as i32)).product::<f64>())
                    .sum();
                sign(v)
            }
            Concept::Compose { gate, inner } => {
                let vals: Vec<i8> = inner.iter().map(|c| c.eval(x)).collect();
                gate.apply(&vals)
            }
            Concept::Staircase { w, thresholds, start } => {
                let s = dot(w, x);
                let crossed = thresholds.partition_point(|&t| t <= s);
                if crossed % 2 == 0 {
                    *start
                } else {
                    -*start
                }
            }
            Concept::Checkerboard { cell, origin } => {
                let k: i64 = x.iter().zip(origin).map(|(v, o)| ((v - o) / cell).floor() as i64).sum();
                if k.rem_euclid(2) == 0 {
                    1
                } else {
                    -1
                }
            }
            Concept::BoxUnion { boxes } => {
                let hit = boxes
                    .iter()
                    .any(|(lo, hi)| x.iter().zip(lo.iter().zip(hi)).all(|(v, (l, h))| *l <= *v && *v <= *h));
                if hit {
                    1
                } else {
                    -1
                }
            }
            Concept::MonotoneDnf { terms } => {
                if terms.iter().any(|t| t.iter().all(|&(i, th)| x[i] >= th)) {
                    1
                } else {
                    -1
                }
            }
            Concept::Negate { inner } => -inner.eval(x),
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Random instances of each family, drawn inside the unit cube unless noted.
pub mod generate {
    use super::*;

    fn unit_normal(d: usize, rng: &mut Stream) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let n = dot(&v, &v).sqrt();
            if n > 1e-3 && n <= 1.0 {
                return v.into_iter().map(|x| x / n).collect();
            }
        }
    }

    /// A halfspace through a uniform point of `[0.2, 0.8]^d`.
    pub fn halfspace(d: usize, rng: &mut Stream) -> Concept {
        let w = unit_normal(d, rng);
        let p: Vec<f64> = (0..d).map(|_| rng.random_range(0.2..0.8)).collect();
        Concept::Halfspace { b: dot(&w, &p), w }
    }

    /// A monotone halfspace (nonnegative weights).
    pub fn monotone_halfspace(d: usize, rng: &mut Stream) -> Concept {
        let w: Vec<f64> = unit_normal(d, rng).into_iter().map(f64::abs).collect();
        let p: Vec<f64> = (0..d).map(|_| rng.random_range(0.2..0.8)).collect();
        Concept::Halfspace { b: dot(&w, &p), w }
    }

    pub fn disk(d: usize, rng: &mut Stream) -> Concept {
        let radius = rng.random_range(0.1..0.4);
        let center = (0..d).map(|_| rng.random_range(0.1..0.9)).collect();
        Concept::Ball { center, radius }
    }

    /// A triangle with vertices in the unit square, oriented counter-clockwise.
    pub fn triangle(rng: &mut Stream) -> Concept {
        loop {
            let mut v: Vec<[f64; 2]> = (0..3).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
            let area2 = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[1][1] - v[0][1]) * (v[2][0] - v[0][0]);
            if area2.abs() < 1e-3 {
                continue;
            }
            if area2 < 0.0 {
                v.swap(1, 2);
            }
            return Concept::ConvexPolygon { vertices: v };
        }
    }

    /// A monotone DNF with `terms` terms of up to `d` literals.
    pub fn monotone_dnf(d: usize, terms: usize, rng: &mut Stream) -> Concept {
        let terms = (0..terms)
            .map(|_| {
                let mut lits = Vec::new();
                for i in 0..d {
                    if rng.random::<f64>() < 0.7 {
                        lits.push((i, rng.random_range(0.1..0.9)));
                    }
                }
                if lits.is_empty() {
                    lits.push((rng.random_range(0..d), rng.random_range(0.1..0.9)));
                }
                lits
            })
            .collect();
        Concept::MonotoneDnf { terms }
    }

    /// A random gate over `k` inputs, given as a truth table.
    pub fn gate(k: usize, rng: &mut Stream) -> Gate {
        Gate::Table {
            outputs: (0..1usize << k).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect(),
        }
    }

    pub fn composed_halfspaces(d: usize, k: usize, rng: &mut Stream) -> Concept {
        let inner = (0..k).map(|_| halfspace(d, rng)).collect();
        Concept::Compose { gate: gate(k, rng), inner }
    }

    /// A degree-`k` polynomial threshold with random coefficients centred at
    /// a point of the unit cube.
    pub fn ptf(d: usize, k: usize, rng: &mut Stream) -> Concept {
        let mut terms = Vec::new();
        let mut exps = vec![0u32; d];
        loop {
            let total: u32 = exps.iter().sum();
            if total as usize <= k {
                terms.push(Monomial {
                    coef: rng.random_range(-1.0..1.0),
                    exponents: exps.clone(),
                });
            }
            let mut i = 0;
            while i < d {
                exps[i] += 1;
                if exps[i] as usize <= k {
                    break;
                }
                exps[i] = 0;
                i += 1;
            }
            if i == d {
                break;
            }
        }
        Concept::Ptf { terms }
    }

    /// An alternating staircase along `x_1 + ... + x_d` with `k` thresholds
    /// spread over `(0, d)`.
    pub fn staircase(d: usize, k: usize, rng: &mut Stream) -> Concept {
        let mut thresholds: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..0.95) * d as f64).collect();
        thresholds.sort_by(f64::total_cmp);
        thresholds.dedup();
        Concept::Staircase {
            w: vec![1.0; d],
            thresholds,
            start: if rng.random::<bool>() { 1 } else { -1 },
        }
    }

    pub fn checkerboard(d: usize, cell: f64) -> Concept {
        Concept::Checkerboard { cell, origin: vec![0.0; d] }
    }

    /// Two axis-aligned squares of side `side` in opposite corners of the unit square.
    pub fn two_squares(side: f64) -> Concept {
        Concept::BoxUnion {
            boxes: vec![(vec![0.0, 0.0], vec![side, side]), (vec![1.0 - side, 1.0 - side], vec![1.0, 1.0])],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn basic_values() {
        let h = Concept::halfspace(vec![1.0, 1.0], 1.0);
        assert_eq!(h.eval(&[0.5, 0.5]), 1);
        assert_eq!(h.eval(&[0.2, 0.5]), -1);
        let b = Concept::ball(vec![0.0, 0.0], 1.0);
        assert_eq!(b.eval(&[1.0, 0.0]), 1);
        assert_eq!(b.eval(&[1.0, 0.1]), -1);
        let sq = Concept::ConvexPolygon {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        };
        assert_eq!(sq.eval(&[0.5, 0.5]), 1);
        assert_eq!(sq.eval(&[1.5, 0.5]), -1);
        assert_eq!(h.clone().negate().eval(&[0.5, 0.5]), -1);
    }

    #[test]
    fn staircase_alternates_exactly_k_times() {
        let s = generate::staircase(1, 3, &mut stream(1));
        let Concept::Staircase { thresholds, .. } = &s else { panic!() };
        assert_eq!(thresholds.len(), 3);
        let mut changes = 0;
        let mut prev = s.eval(&[-1.0]);
        for i in 0..=2000 {
            let v = s.eval(&[i as f64 / 2000.0]);
            if v != prev {
                changes += 1;
            }
            prev = v;
        }
        assert_eq!(changes, 3);
    }

    #[test]
    fn gates() {
        assert_eq!(Gate::And.apply(&[1, -1]), -1);
        assert_eq!(Gate::Or.apply(&[1, -1]), 1);
        assert_eq!(Gate::Xor.apply(&[1, 1]), -1);
        assert_eq!(Gate::Majority.apply(&[1, -1]), 1);
        let t = Gate::Table { outputs: vec![-1, 1, 1, -1] };
        assert_eq!(t.apply(&[1, -1]), 1);
        assert_eq!(t.apply(&[1, 1]), -1);
    }

    #[test]
    fn ptf_generator_degree() {
        let Concept::Ptf { terms } = generate::ptf(2, 2, &mut stream(4)) else { panic!() };
        // monomials of total degree <= 2 in 2 variables
        assert_eq!(terms.len(), 6);
        assert!(terms.iter().all(|t| t.exponents.iter().sum::<u32>() <= 2));
    }

    #[test]
    fn concept_json_round_trip() {
        let c = generate::composed_halfspaces(2, 2, &mut stream(9));
        let s = serde_json::to_string(&c).unwrap();
        let back: Concept = serde_json::from_str(&s).unwrap();
        assert_eq!(c, back);
    }
}
