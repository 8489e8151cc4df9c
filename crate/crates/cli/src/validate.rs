//! `validate`: Walsh identities at n=4, d=1..3 and JSON/TOML round trips.

use std::path::Path;
use std::sync::Arc;

use anyhow::Result;
use downsample::blockgrid::{induce_augmented_partition, induce_partition, Partition};
use downsample::concepts::BooleanFn;
use downsample::learners::{downsample_learn, preset, Constants, Hypothesis};
use downsample::product_dist::{augment, sample_points, LabeledOracle, ProductDistribution};
use downsample::rng::stream;

use crate::config::{parse, Config, Kind, Scenario};
use crate::instances::TargetSpec;
use crate::scenarios::run_scenario;

const TARGETS: &[&str] = &[
    "constant:value=-1",
    "halfspace:d=3",
    "monotone-halfspace:d=2",
    "disk:d=2",
    "triangle",
    "monotone-dnf:d=4,terms=3",
    "composed-halfspaces:d=2,k=3",
    "and-halfspaces:d=2,k=2",
    "ptf:d=2,k=3",
    "staircase:d=1,k=3",
    "checkerboard:d=2,cell=0.125",
    "two-squares:side=0.45",
    "majority:d=8",
    "axes:d=2,width=0.0625",
];

fn line(ok: bool, what: &str) -> bool {
    println!("{} {what}", if ok { "PASS" } else { "FAIL" });
    ok
}

pub fn run() -> Result<bool> {
    let mut all = true;

    let walsh: Scenario = toml::from_str(
        r#"
name = "walsh"
kind = "walsh-validate"
seed = 1
trials = 3
params = { n = 4, dims = [1, 2, 3], tolerance = 1e-10 }
"#,
    )?;
    let o = run_scenario(&walsh, Path::new("."))?;
    for name in ["orthonormality", "transform-vs-brute-force", "parseval", "inverse", "noise-eigenrelation"] {
        let rows: Vec<_> = o.rows.iter().filter(|r| r.check == name).collect();
        let worst = rows.iter().map(|r| r.value).fold(0.0, f64::max);
        all &= line(
            !rows.is_empty() && rows.iter().all(|r| r.pass),
            &format!("walsh {name} (max error {worst:.2e})"),
        );
    }

    let base = Path::new(".");
    let mut concepts_ok = true;
    for t in TARGETS {
        let c = TargetSpec::parse(t, base)?.instantiate(&mut stream(7))?;
        let back = serde_json::from_str(&serde_json::to_string(&c)?)?;
        concepts_ok &= c == back;
    }
    all &= line(concepts_ok, &format!("concept json round trip ({} kinds)", TARGETS.len()));

    let mut rng = stream(11);
    let g = ProductDistribution::gaussian(2);
    let plain: Partition = induce_partition(&sample_points(&g, 400, &mut rng), 8, &mut rng)?.into();
    let h = ProductDistribution::hypercube(3);
    let pts: Vec<_> = sample_points(&h, 400, &mut rng).iter().map(|x| augment(x, &mut rng)).collect();
    let aug: Partition = induce_augmented_partition(&pts, 4, &mut rng)?.into();
    let parts_ok = [plain, aug].iter().all(|p| Partition::from_json(&p.to_json().unwrap()).ok().as_ref() == Some(p));
    all &= line(parts_ok, "partition json round trip (plain and augmented)");

    let f: Arc<dyn BooleanFn> = Arc::new(downsample::concepts::Concept::majority(2));
    let oracle = LabeledOracle::target(g, f, 0.1)?;
    let mut cfg = preset(&"halfspace".parse()?, 2, 1, 0.3, &Constants::default())?;
    cfg.r = 4;
    cfg.t = 2;
    cfg.grid_m = 400;
    cfg.samples = 2000;
    let hyp = downsample_learn(&cfg, &oracle, &mut rng)?.hypothesis;
    let hyp_ok = Hypothesis::from_json(&hyp.to_json()?).ok().as_ref() == Some(&hyp);
    all &= line(hyp_ok, "hypothesis json round trip");

    let cfg = Config {
        version: 1,
        description: "round trip".into(),
        scenarios: vec![walsh.clone(), Scenario { name: "w2".into(), kind: Kind::TailNoise, ..walsh }],
    };
    let text = toml::to_string(&cfg)?;
    all &= line(parse(&text, "generated").ok() == Some(cfg), "config toml round trip");

    println!("{}", if all { "ALL VALIDATIONS PASSED" } else { "VALIDATION FAILED" });
    Ok(all)
}
