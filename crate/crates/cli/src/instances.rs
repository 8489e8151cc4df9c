//! Compact text descriptors for distributions and target concepts.
//!
//! A distribution is a `*`-separated product of factors `name[(args)][^k]`,
//! e.g. `gaussian^2`, `exponential(1)*uniform`, `rademacher^8`.
//! A target is `kind[:key=value,...]`, with list values separated by `/`,
//! e.g. `disk:d=2`, `halfspace:w=-1/-1,b=-1`, `file:instances/h.json`.
//! Kinds with free parameters draw a fresh instance from the trial stream.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use downsample::concepts::{generate, Concept, Gate};
use downsample::product_dist::{Component, Continuous, Finite, ProductDistribution};
use downsample::rng::Stream;

pub fn parse_dist(s: &str) -> Result<ProductDistribution> {
    let mut comps = Vec::new();
    for factor in s.split('*') {
        let factor = factor.trim();
        let (body, power) = match factor.rsplit_once('^') {
            Some((b, p)) => (b, p.trim().parse::<usize>().with_context(|| format!("bad power in '{factor}'"))?),
            None => (factor, 1),
        };
        let (name, args) = match body.split_once('(') {
            Some((n, rest)) => {
                let inner = rest.strip_suffix(')').ok_or_else(|| anyhow!("unclosed '(' in '{factor}'"))?;
                let args: Vec<f64> = inner
                    .split(',')
                    .map(|a| a.trim().parse::<f64>().with_context(|| format!("bad number in '{factor}'")))
                    .collect::<Result<_>>()?;
                (n.trim(), args)
            }
            None => (body.trim(), Vec::new()),
        };
        let arg = |i: usize, default: f64| args.get(i).copied().unwrap_or(default);
        let comp = match name {
            "uniform" => Component::Continuous(Continuous::Uniform { lo: arg(0, 0.0), hi: arg(1, 1.0) }),
            "gaussian" | "normal" => Component::Continuous(Continuous::Gaussian {
                mean: arg(0, 0.0),
                std: arg(1, 1.0),
            }),
            "exponential" | "exp" => Component::Continuous(Continuous::Exponential { rate: arg(0, 1.0) }),
            "beta" => Component::Continuous(Continuous::Beta { a: arg(0, 2.0), b: arg(1, 2.0) }),
            "rademacher" | "hypercube" => Component::Finite(Finite::rademacher()),
            "bernoulli" => {
                let p = arg(0, 0.5);
                Component::Finite(Finite::new(vec![0.0, 1.0], vec![1.0 - p, p])?)
            }
            "discrete" => {
                let k = arg(0, 2.0) as usize;
                if k == 0 {
                    bail!("discrete needs at least one point");
                }
                Component::Finite(Finite::new((0..k).map(|i| i as f64).collect(), vec![1.0 / k as f64; k])?)
            }
            _ => bail!("unknown distribution factor '{name}'"),
        };
        comps.extend(std::iter::repeat_n(comp, power));
    }
    Ok(ProductDistribution::new(comps)?)
}

/// A parsed target descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    pub kind: String,
    pub args: BTreeMap<String, String>,
    /// Fixed instance loaded from a file.
    pub fixed: Option<Concept>,
}

impl TargetSpec {
    /// Parses a descriptor; `file:` paths resolve against `base`.
    pub fn parse(s: &str, base: &Path) -> Result<Self> {
        let s = s.trim();
        if let Some(path) = s.strip_prefix("file:") {
            let p = base.join(path);
            let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
            let c: Concept = serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
            return Ok(TargetSpec {
                kind: "file".into(),
                args: BTreeMap::new(),
                fixed: Some(c),
            });
        }
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut args = BTreeMap::new();
        for kv in rest.split(',').filter(|kv| !kv.trim().is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| anyhow!("expected key=value in '{kv}'"))?;
            args.insert(k.trim().to_string(), v.trim().to_string());
        }
        let spec = TargetSpec {
            kind: kind.trim().to_string(),
            args,
            fixed: None,
        };
        // surface unknown kinds and bad arguments at parse time
        spec.instantiate(&mut downsample::rng::stream(0))?;
        Ok(spec)
    }

    fn num(&self, key: &str) -> Result<Option<f64>> {
        self.args
            .get(key)
            .map(|v| v.parse::<f64>().with_context(|| format!("bad number for '{key}' in target '{}'", self.kind)))
            .transpose()
    }

    fn int(&self, key: &str, default: usize) -> Result<usize> {
        match self.args.get(key) {
            None => Ok(default),
            Some(v) => v.parse().with_context(|| format!("bad integer for '{key}' in target '{}'", self.kind)),
        }
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.args
            .get(key)
            .map(|v| {
                v.split('/')
                    .map(|x| x.trim().parse::<f64>().with_context(|| format!("bad list for '{key}'")))
                    .collect()
            })
            .transpose()
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for k in self.args.keys() {
            if !allowed.contains(&k.as_str()) {
                bail!("unknown argument '{k}' for target '{}'", self.kind);
            }
        }
        Ok(())
    }

    /// Builds the concept; random kinds consume `rng`.
    pub fn instantiate(&self, rng: &mut Stream) -> Result<Concept> {
        if let Some(c) = &self.fixed {
            return Ok(c.clone());
        }
        let d = self.int("d", 2)?;
        let k = self.int("k", 2)?;
        let c = match self.kind.as_str() {
            "constant" => {
                self.check_keys(&["value"])?;
                let v = self.num("value")?.unwrap_or(1.0);
                Concept::Constant {
                    value: if v >= 0.0 { 1 } else { -1 },
                }
            }
            "halfspace" => {
                self.check_keys(&["d", "w", "b"])?;
                match self.list("w")? {
                    Some(w) => Concept::halfspace(w, self.num("b")?.unwrap_or(0.0)),
                    None => generate::halfspace(d, rng),
                }
            }
            "monotone-halfspace" => {
                self.check_keys(&["d"])?;
                generate::monotone_halfspace(d, rng)
            }
            "disk" | "ball" => {
                self.check_keys(&["d", "center", "radius"])?;
                match self.list("center")? {
                    Some(center) => Concept::ball(center, self.num("radius")?.unwrap_or(0.3)),
                    None => generate::disk(d, rng),
                }
            }
            "triangle" | "polygon" => {
                self.check_keys(&[])?;
                generate::triangle(rng)
            }
            "monotone-dnf" => {
                self.check_keys(&["d", "terms"])?;
                generate::monotone_dnf(d, self.int("terms", 3)?, rng)
            }
            "composed-halfspaces" => {
                self.check_keys(&["d", "k"])?;
                generate::composed_halfspaces(d, k, rng)
            }
            "and-halfspaces" => {
                self.check_keys(&["d", "k"])?;
                Concept::Compose {
                    gate: Gate::And,
                    inner: (0..k).map(|_| generate::halfspace(d, rng)).collect(),
                }
            }
            "ptf" => {
                self.check_keys(&["d", "k"])?;
                generate::ptf(d, k, rng)
            }
            "staircase" | "k-alternating" => {
                self.check_keys(&["d", "k"])?;
                generate::staircase(d, k, rng)
            }
            "checkerboard" => {
                self.check_keys(&["d", "cell"])?;
                generate::checkerboard(d, self.num("cell")?.unwrap_or(0.125))
            }
            "two-squares" => {
                self.check_keys(&["side"])?;
                generate::two_squares(self.num("side")?.unwrap_or(0.45))
            }
            "majority" => {
                self.check_keys(&["d"])?;
                Concept::majority(d)
            }
            "axes" => {
                // points of [0,1]^d with some coordinate below `width`
                self.check_keys(&["d", "width"])?;
                let w = self.num("width")?.unwrap_or(0.0625);
                Concept::BoxUnion {
                    boxes: (0..d)
                        .map(|i| {
                            let hi: Vec<f64> = (0..d).map(|j| if j == i { w } else { 1.0 }).collect();
                            (vec![0.0; d], hi)
                        })
                        .collect(),
                }
            }
            other => bail!("unknown target kind '{other}'"),
        };
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distributions() {
        assert_eq!(parse_dist("gaussian^2").unwrap(), ProductDistribution::gaussian(2));
        assert_eq!(parse_dist("rademacher^8").unwrap(), ProductDistribution::hypercube(8));
        let p = parse_dist("exponential(2) * uniform(0, 3)").unwrap();
        assert_eq!(p.dims(), 2);
        assert!(parse_dist("cauchy").is_err());
        assert!(parse_dist("uniform(1,0)").is_err());
        assert!(parse_dist("gaussian^x").is_err());
    }

    #[test]
    fn targets() {
        let base = Path::new(".");
        let h = TargetSpec::parse("halfspace:w=-1/-1,b=-1", base).unwrap();
        assert_eq!(h.instantiate(&mut downsample::rng::stream(1)).unwrap(), Concept::halfspace(vec![-1.0, -1.0], -1.0));
        assert!(TargetSpec::parse("disk:q=1", base).is_err());
        assert!(TargetSpec::parse("blob", base).is_err());
        let a = TargetSpec::parse("disk:d=2", base).unwrap();
        let x = a.instantiate(&mut downsample::rng::stream(5)).unwrap();
        let y = a.instantiate(&mut downsample::rng::stream(5)).unwrap();
        assert_eq!(x, y);
    }
}
