//! Trial bodies for every scenario kind, and the seeded trial farm.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, bail, Result};
use downsample::bbs::{analytic_nonconstant, bbs_bound, corner_oracle_nonconstant, count_nonconstant_blocks, ClassId};
use downsample::blockgrid::{
    block_function, coarse_eval, estimate_tv_to_uniform, induce_augmented_partition, induce_partition, round_up_to_multiple,
    BlockPartition, Partition,
};
use downsample::concepts::{BooleanFn, Concept};
use downsample::grid::GridShape;
use downsample::learners::{
    bayes_error, brute_force_samples, downsample_learn, preset, rounding_check, test_error, uniform_grid_size, LearnerConfig, Mode,
};
use downsample::product_dist::{augment, sample_point, sample_points, LabeledOracle, ProductDistribution};
use downsample::rng::{derive_seed, stream, Stream};
use downsample::stats::Estimate;
use downsample::testers::{
    build_cover, convex_onesided_test, df_monotonicity_test, diagonal_test, distance_approximate, distance_sample_size,
    exact_distance, grid_monotonicity_test, tolerant_sample_size, tolerant_test, CoverClass, CoverSet, TestVerdict,
};
use downsample::walsh::{
    degree, inverse_transform, noise_operator_time_domain, noise_sensitivity_exact, tail_weight, transform, walsh_eval,
    WalshSpectrum,
};
use rand::Rng;
use rayon::prelude::*;

use crate::config::*;
use crate::instances::{parse_dist, TargetSpec};
use crate::report::{to_csv, Row, Timing};

/// One measured check inside a trial.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub bound: f64,
    pub samples: usize,
    pub queries: usize,
    pub detail: String,
}

impl Check {
    /// Passes when `value <= bound`.
    fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            pass: value <= bound,
            value,
            bound,
            samples: 0,
            queries: 0,
            detail: String::new(),
        }
    }

    fn samples(mut self, s: usize) -> Self {
        self.samples = s;
        self
    }

    fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = d.into();
        self
    }
}

type TrialFn = Box<dyn Fn(&mut Stream) -> Result<Vec<Check>> + Send + Sync>;

pub struct Outcome {
    pub rows: Vec<Row>,
    pub timings: Vec<Timing>,
    pub seconds: f64,
}

fn cfg_err(sc: &Scenario, e: impl std::fmt::Display) -> anyhow::Error {
    ConfigError(format!("scenario '{}': {e}", sc.name)).into()
}

/// Runs every trial of a scenario; row order follows the trial index.
pub fn run_scenario(sc: &Scenario, base: &Path) -> Result<Outcome> {
    let start = Instant::now();
    if sc.kind == Kind::Determinism {
        let rows = determinism(sc, base)?;
        let seconds = start.elapsed().as_secs_f64();
        return Ok(Outcome {
            timings: vec![Timing {
                scenario: sc.name.clone(),
                trial: 0,
                seconds,
            }],
            rows,
            seconds,
        });
    }
    let trial = prepare(sc, base)?;
    let results: Vec<(Vec<Row>, Timing)> = (0..sc.trials)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(sc.seed, i as u64);
            let t0 = Instant::now();
            let checks = trial(&mut stream(seed)).unwrap_or_else(|e| {
                // budget exhaustion and similar per-trial failures are data
                vec![Check {
                    name: "error".into(),
                    pass: false,
                    value: f64::NAN,
                    bound: f64::NAN,
                    samples: 0,
                    queries: 0,
                    detail: format!("{e:#}"),
                }]
            });
            let rows = checks
                .into_iter()
                .map(|c| Row {
                    scenario: sc.name.clone(),
                    check: c.name,
                    trial: i,
                    seed,
                    pass: c.pass,
                    value: c.value,
                    bound: c.bound,
                    samples: c.samples,
                    queries: c.queries,
                    detail: c.detail,
                })
                .collect();
            let timing = Timing {
                scenario: sc.name.clone(),
                trial: i,
                seconds: t0.elapsed().as_secs_f64(),
            };
            (rows, timing)
        })
        .collect();
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for (r, t) in results {
        rows.extend(r);
        timings.push(t);
    }
    Ok(Outcome {
        rows,
        timings,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn prepare(sc: &Scenario, base: &Path) -> Result<TrialFn> {
    let dist = |s: &str| parse_dist(s).map_err(|e| cfg_err(sc, e));
    let target = |s: &str| TargetSpec::parse(s, base).map_err(|e| cfg_err(sc, e));
    Ok(match sc.kind {
        Kind::WalshValidate => {
            let p: WalshParams = sc.params()?;
            Box::new(move |rng| walsh_trial(&p, rng))
        }
        Kind::TailNoise => {
            let p: TailParams = sc.params()?;
            Box::new(move |rng| tail_trial(&p, rng))
        }
        Kind::GridUniformity => {
            let p: GridParams = sc.params()?;
            let mu = dist(&p.dist)?;
            let d = mu.dims();
            let m = match p.grid_m {
                Some(m) => round_up_to_multiple(m, p.r),
                None => uniform_grid_size(p.r, d, p.tv, p.fail, p.grid_const),
            };
            Box::new(move |rng| {
                let part = induce(&mu, m, p.r, rng)?;
                let tv = estimate_tv_to_uniform(&part, &mu, p.mc_samples, rng);
                Ok(vec![Check::at_most("tv", tv.value, p.tv)
                    .samples(m)
                    .detail(if tv.exact { "exact" } else { "monte-carlo" })])
            })
        }
        Kind::CoarseDistance => {
            let p: CoarseParams = sc.params()?;
            let mu = dist(&p.dist)?;
            if mu.has_finite() {
                return Err(cfg_err(sc, "coarse-distance needs a continuous distribution"));
            }
            let t = target(&p.target)?;
            Box::new(move |rng| coarse_trial(&p, &mu, &t, rng))
        }
        Kind::Bbs => {
            let p: BbsParams = sc.params()?;
            let t = target(&p.target)?;
            let class: ClassId = p.class.parse().map_err(|e| cfg_err(sc, e))?;
            let mu = match (&p.partition, &p.dist) {
                (PartitionName::Induced, Some(s)) => Some(dist(s)?),
                (PartitionName::Induced, None) => return Err(cfg_err(sc, "induced partitions need a dist")),
                _ => None,
            };
            Box::new(move |rng| bbs_trial(&p, &class, mu.as_ref(), &t, rng))
        }
        Kind::Test => {
            let p: TestParams = sc.params()?;
            let t = target(&p.target)?;
            let mu = p.dist.as_deref().map(dist).transpose()?;
            match p.tester {
                TesterName::Diagonal | TesterName::GridMonotonicity if p.n.is_none() || p.d.is_none() => {
                    return Err(cfg_err(sc, "grid testers need n and d"));
                }
                TesterName::DfMonotonicity | TesterName::Convex if mu.is_none() => {
                    return Err(cfg_err(sc, "sample-based testers need a dist"));
                }
                _ => {}
            }
            Box::new(move |rng| test_trial(&p, mu.as_ref(), &t, rng))
        }
        Kind::Learn => {
            let p: LearnParams = sc.params()?;
            let mu = dist(&p.dist)?;
            let t = target(&p.target)?;
            let cfg = learner_config(&p, &mu).map_err(|e| cfg_err(sc, e))?;
            Box::new(move |rng| learn_trial(&p, &cfg, &mu, &t, rng))
        }
        Kind::Tolerant => {
            let p: TolerantParams = sc.params()?;
            let class: CoverClass = p.cover.parse().map_err(|e| cfg_err(sc, e))?;
            if !(p.eps1 >= 0.0 && p.eps2 > p.eps1) {
                return Err(cfg_err(sc, "need 0 <= eps1 < eps2"));
            }
            let cover = build_cover(class, p.r, p.d).map_err(|e| cfg_err(sc, e))?;
            Box::new(move |rng| tolerant_trial(&p, &cover, rng))
        }
        Kind::Determinism => unreachable!("handled by run_scenario"),
    })
}

fn induce(mu: &ProductDistribution, m: usize, r: usize, rng: &mut Stream) -> Result<Partition> {
    let pts = sample_points(mu, m, rng);
    Ok(if mu.has_finite() {
        let aug: Vec<_> = pts.iter().map(|x| augment(x, rng)).collect();
        induce_augmented_partition(&aug, r, rng)?.into()
    } else {
        induce_partition(&pts, r, rng)?.into()
    })
}

fn walsh_trial(p: &WalshParams, rng: &mut Stream) -> Result<Vec<Check>> {
    let n = p.n;
    let mut out = Vec::new();
    for &d in &p.dims {
        let shape = GridShape::new(n, d);
        let len = shape.len();
        let cells: Vec<Vec<usize>> = shape.cells().collect();
        let psi: Vec<Vec<f64>> = cells
            .iter()
            .map(|a| cells.iter().map(|x| walsh_eval(a, x, n).map(f64::from)).collect::<Result<_, _>>())
            .collect::<Result<_, _>>()?;
        let mut ortho: f64 = 0.0;
        for a in 0..len {
            for b in 0..len {
                let ip: f64 = (0..len).map(|x| psi[a][x] * psi[b][x]).sum::<f64>() / len as f64;
                ortho = ortho.max((ip - if a == b { 1.0 } else { 0.0 }).abs());
            }
        }
        let table: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let spec = transform(&table, n, d)?;
        let brute = (0..len)
            .map(|a| ((0..len).map(|x| table[x] * psi[a][x]).sum::<f64>() / len as f64 - spec.coeffs[a]).abs())
            .fold(0.0, f64::max);
        let energy = table.iter().map(|v| v * v).sum::<f64>() / len as f64;
        let parseval = (energy - spec.coeffs.iter().map(|c| c * c).sum::<f64>()).abs();
        let back = inverse_transform(&spec)?;
        let inverse = back.iter().zip(&table).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scaled = WalshSpectrum {
            n,
            d,
            coeffs: spec
                .coeffs
                .iter()
                .zip(&cells)
                .map(|(c, a)| c * p.rho.powi(degree(a) as i32))
                .collect(),
        };
        let spectral = inverse_transform(&scaled)?;
        let direct = noise_operator_time_domain(&table, n, d, p.rho);
        let eigen = spectral.iter().zip(&direct).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        for (name, v) in [
            ("orthonormality", ortho),
            ("transform-vs-brute-force", brute),
            ("parseval", parseval),
            ("inverse", inverse),
            ("noise-eigenrelation", eigen),
        ] {
            out.push(Check::at_most(name, v, p.tolerance).detail(format!("n={n} d={d}")));
        }
    }
    Ok(out)
}

fn tail_trial(p: &TailParams, rng: &mut Stream) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for &[n, d] in &p.shapes {
        let len = GridShape::new(n, d).len();
        let table: Vec<f64> = (0..len).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
        let spec = transform(&table, n, d)?;
        for &delta in &p.deltas {
            let t = (2.0 / delta).ceil() as usize;
            let tail = tail_weight(&spec, t);
            let ns = noise_sensitivity_exact(&spec, delta)?;
            let bound = p.factor * ns;
            out.push(Check {
                name: format!("tail-n{n}-d{d}-delta{delta}"),
                pass: tail <= bound + 1e-12,
                value: tail,
                bound,
                samples: 0,
                queries: 0,
                detail: format!("t={t} ns={ns}"),
            });
        }
    }
    Ok(out)
}

fn coarse_trial(p: &CoarseParams, mu: &ProductDistribution, t: &TargetSpec, rng: &mut Stream) -> Result<Vec<Check>> {
    let f = t.instantiate(rng)?;
    let d = mu.dims();
    let m = round_up_to_multiple(p.grid_m, p.r);
    let pts = sample_points(mu, m, rng);
    let bp = induce_partition(&pts, p.r, rng)?;
    let count = match analytic_nonconstant(&f, &bp)? {
        Some(c) => c,
        None => count_nonconstant_blocks(&f, &bp, p.probes, rng)?,
    };
    let part = Partition::Plain(bp);
    let tv = estimate_tv_to_uniform(&part, mu, 100_000, rng);
    let f: Arc<dyn BooleanFn> = Arc::new(f);
    let g = block_function(f.clone(), &part, 1 << 22);
    let mut hits = 0usize;
    for _ in 0..p.eval_samples {
        let x = sample_point(mu, rng);
        hits += (f.eval(&x) != coarse_eval(&g, &part, &x, None)?) as usize;
    }
    let est = Estimate::from_hits(hits, p.eval_samples);
    let cells = (p.r as f64).powi(d as i32);
    let bound = count.count as f64 / cells + tv.value + 3.0 * (est.stderr + tv.stderr);
    Ok(vec![Check::at_most("coarse-disagreement", est.value, bound)
        .samples(m + p.eval_samples)
        .detail(format!("nonconstant={} ({:?}) tv={}", count.count, count.method, tv.value))])
}

fn bbs_trial(
    p: &BbsParams,
    class: &ClassId,
    mu: Option<&ProductDistribution>,
    t: &TargetSpec,
    rng: &mut Stream,
) -> Result<Vec<Check>> {
    let f = t.instantiate(rng)?;
    let part = match mu {
        None => BlockPartition::uniform_unit(p.r, p.d),
        Some(mu) => {
            let m = round_up_to_multiple(p.grid_m.unwrap_or(50 * p.r), p.r);
            induce_partition(&sample_points(mu, m, rng), p.r, rng)?
        }
    };
    let bound = bbs_bound(class, p.r, p.d, p.k)?.max_nonconstant;
    let analytic = |c: &Concept| -> Result<usize> {
        analytic_nonconstant(c, &part)?
            .map(|c| c.count)
            .ok_or_else(|| anyhow!("no analytic count for this target"))
    };
    let check = match p.method {
        CountMethodName::Corner => {
            let c = corner_oracle_nonconstant(&f, &part)?.count;
            Check::at_most("corner-count", c as f64, bound)
        }
        CountMethodName::Analytic => Check::at_most("analytic-count", analytic(&f)? as f64, bound),
        CountMethodName::Probe => {
            let c = count_nonconstant_blocks(&f, &part, p.probes, rng)?.count;
            Check::at_most("probe-count", c as f64, bound)
        }
        CountMethodName::Composition => {
            let Concept::Compose { inner, .. } = &f else {
                bail!("composition counts need a composed target");
            };
            let parts: usize = inner.iter().map(|h| analytic(h)).sum::<Result<usize>>()?;
            let whole = count_nonconstant_blocks(&f, &part, p.probes, rng)?.count;
            Check::at_most("subadditivity", whole as f64, parts as f64)
                .detail(format!("class bound {bound}"))
        }
    };
    Ok(vec![check])
}

fn grid_fn(c: &Concept, n: usize) -> impl Fn(&[usize]) -> bool + '_ {
    move |x: &[usize]| {
        let p: Vec<f64> = x.iter().map(|&v| (v as f64 + 0.5) / n as f64).collect();
        c.eval(&p) > 0
    }
}

fn test_trial(p: &TestParams, mu: Option<&ProductDistribution>, t: &TargetSpec, rng: &mut Stream) -> Result<Vec<Check>> {
    let f = t.instantiate(rng)?;
    let v: TestVerdict = match p.tester {
        TesterName::Diagonal => diagonal_test(&grid_fn(&f, p.n.unwrap()), p.n.unwrap(), p.d.unwrap(), p.eps, rng)?,
        TesterName::GridMonotonicity => {
            grid_monotonicity_test(&grid_fn(&f, p.n.unwrap()), p.n.unwrap(), p.d.unwrap(), p.eps, &p.constants, rng)?
        }
        TesterName::DfMonotonicity => df_monotonicity_test(&f, mu.unwrap(), p.eps, p.grid_m, &p.constants, rng)?,
        TesterName::Convex => {
            let mu = mu.unwrap();
            let oracle = |r: &mut Stream| {
                let x = sample_point(mu, r);
                let y = f.eval(&x);
                (x, y)
            };
            convex_onesided_test(&oracle, mu.dims(), p.eps, p.grid_m, p.queries, &p.constants, rng)?
        }
    };
    let want = p.expect == Expect::Accept;
    let failed: Vec<&str> = v.subtests.iter().filter(|s| !s.accept).map(|s| s.name.as_str()).collect();
    Ok(vec![Check {
        name: "verdict".into(),
        pass: v.accept == want,
        value: v.accept as u8 as f64,
        bound: want as u8 as f64,
        samples: v.samples,
        queries: v.queries,
        detail: if failed.is_empty() {
            "accept".into()
        } else {
            format!("rejected by {}", failed.join("+"))
        },
    }])
}

/// Preset for the class, then the explicit overrides; derived sizes are
/// recomputed from the overridden `r` and `t` unless given.
pub fn learner_config(p: &LearnParams, mu: &ProductDistribution) -> Result<LearnerConfig> {
    let d = mu.dims();
    let class: ClassId = p.class.parse()?;
    let c = &p.constants;
    let mut cfg = preset(&class, d, p.k, p.eps, c)?;
    if let Some(m) = p.mode {
        cfg.mode = m;
    }
    if let Some(r) = p.r {
        cfg.r_raw = r;
        cfg.r = r;
    }
    if let Some(t) = p.t {
        cfg.t = t;
        cfg.t_clamped = t < cfg.t_requested.min(d + 1);
    }
    cfg.finite_mode = p.finite_mode.unwrap_or(mu.has_finite());
    let brute = cfg.mode == Mode::BruteForce;
    let tv = if brute { p.eps / 3.0 } else { c.grid_tv_fraction * p.eps };
    cfg.grid_m = match p.grid_m {
        Some(m) => round_up_to_multiple(m, cfg.r),
        None => uniform_grid_size(cfg.r, d, tv, c.grid_fail, c.grid_const),
    };
    cfg.samples = match p.samples {
        Some(s) => s,
        None if brute => brute_force_samples(cfg.r, d, p.eps / 3.0),
        None => {
            let feats = downsample::walsh::feature_count(cfg.r, d, cfg.t) as f64;
            (c.regression_const * feats / (p.eps * p.eps)).ceil() as usize
        }
    };
    if let Some(n) = p.rounding_samples {
        cfg.rounding_samples = n;
    }
    cfg.tag_count = p
        .tag_count
        .unwrap_or_else(|| LearnerConfig::default_tag_count(d, cfg.r, p.eps, c.tag_fail));
    if let Some(i) = p.l1_iterations {
        cfg.l1_iterations = i;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn learn_trial(
    p: &LearnParams,
    cfg: &LearnerConfig,
    mu: &ProductDistribution,
    t: &TargetSpec,
    rng: &mut Stream,
) -> Result<Vec<Check>> {
    let f: Arc<dyn BooleanFn> = Arc::new(t.instantiate(rng)?);
    let oracle = LabeledOracle::target(mu.clone(), f, p.noise)?;
    let out = downsample_learn(cfg, &oracle, rng)?;
    let h = &out.hypothesis;
    let err = test_error(&|x| h.predict(x), &oracle, p.eval_samples, rng);
    let opt = bayes_error(&oracle, p.eval_samples, rng);
    let slack = 3.0 * (err.stderr + opt.stderr);
    let used = out.grid_m + out.samples + out.rounding_samples;
    let mut checks = vec![Check::at_most("excess-error", err.value, opt.value + p.eps + slack)
        .samples(used)
        .detail(format!("opt={} features={} r={} t={}", opt.value, out.features, cfg.r, cfg.t))];
    if p.rounding_check {
        let rc = rounding_check(h, &oracle, p.eval_samples, rng);
        checks.push(
            Check::at_most("rounding", rc.error, rc.half_l1 + p.eps + 3.0 * rc.stderr)
                .samples(used)
                .detail(format!("half_l1={} threshold={}", rc.half_l1, h.threshold)),
        );
    }
    Ok(checks)
}

fn tolerant_trial(p: &TolerantParams, cover: &CoverSet, rng: &mut Stream) -> Result<Vec<Check>> {
    let shape = cover.shape;
    let cells = shape.len();
    let table: Vec<i8> = match p.target {
        TolerantTarget::Random => (0..cells).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect(),
        TolerantTarget::Member => cover.members[rng.random_range(0..cover.members.len())].clone(),
    };
    let part = Partition::Plain(BlockPartition::uniform_unit(p.r, p.d));
    let mass = 1.0 / cells as f64;
    let pos: Vec<f64> = table.iter().map(|&v| if v > 0 { mass } else { 0.0 }).collect();
    let (exact, _) = exact_distance(&pos, &vec![mass; cells], cover);
    let size = cover.members.len();
    let q = p.samples.unwrap_or_else(|| {
        distance_sample_size(size, p.eps).max(tolerant_sample_size(size, p.eps1, p.eps2))
    });
    let samples: Vec<(Vec<f64>, i8)> = (0..q)
        .map(|_| {
            let x: Vec<f64> = (0..p.d).map(|_| rng.random::<f64>()).collect();
            let v: Vec<usize> = x.iter().map(|&xi| ((xi * p.r as f64) as usize).min(p.r - 1)).collect();
            let y = table[shape.index(&v)];
            (x, y)
        })
        .collect();
    let est = distance_approximate(&samples, cover, &part, rng)?;
    let verdict = tolerant_test(&samples, cover, &part, p.eps1, p.eps2, rng)?;
    let threshold = p.eps1 + (p.eps2 - p.eps1) / 2.0;
    let ideal = exact < threshold;
    Ok(vec![
        Check::at_most("distance", (est.value - exact).abs(), p.eps)
            .samples(q)
            .detail(format!("estimate={} exact={exact}", est.value)),
        Check {
            name: "decision".into(),
            pass: verdict.accept == ideal,
            value: verdict.accept as u8 as f64,
            bound: ideal as u8 as f64,
            samples: q,
            queries: 0,
            detail: format!("exact={exact} threshold={threshold}"),
        },
    ])
}

/// Runs each referenced config twice in-process and compares CSV bytes.
fn determinism(sc: &Scenario, base: &Path) -> Result<Vec<Row>> {
    let p: DeterminismParams = sc.params()?;
    let mut rows = Vec::new();
    for (i, rel) in p.configs.iter().enumerate() {
        let loaded = load(&base.join(rel))?;
        let pick: Vec<&Scenario> = loaded
            .config
            .scenarios
            .iter()
            .filter(|s| p.scenarios.as_ref().is_none_or(|names| names.contains(&s.name)))
            .collect();
        if pick.iter().any(|s| s.kind == Kind::Determinism) {
            return Err(cfg_err(sc, format!("{rel} nests a determinism scenario")));
        }
        let mut bytes = Vec::new();
        for _ in 0..2 {
            let mut all = Vec::new();
            for s in &pick {
                all.extend(run_scenario(s, &loaded.base)?.rows);
            }
            bytes.push(to_csv(&all)?);
        }
        let same = bytes[0] == bytes[1];
        rows.push(Row {
            scenario: sc.name.clone(),
            check: "identical-csv".into(),
            trial: i,
            seed: sc.seed,
            pass: same,
            value: same as u8 as f64,
            bound: 1.0,
            samples: bytes[0].len(),
            queries: 0,
            detail: rel.clone(),
        });
    }
    Ok(rows)
}
