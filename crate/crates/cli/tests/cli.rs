use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use downsample::concepts::{BooleanFn, Concept};
use downsample::grid::GridShape;
use downsample::testers::{build_cover, exact_distance, CoverClass};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_downsample")).args(args).output().expect("spawning downsample")
}

fn scratch(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("downsample-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn gen(spec: &str, seed: u64) -> Concept {
    let o = bin(&["gen", spec, "--seed", &seed.to_string()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn gen_is_deterministic() {
    let dir = scratch("gen");
    let (a, b) = (dir.join("a.json"), dir.join("b.json"));
    for p in [&a, &b] {
        let o = bin(&["gen", "halfspace:d=2", "--seed", "7", "--out", p.to_str().unwrap()]);
        assert!(o.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_ne!(gen("halfspace:d=2", 7), gen("halfspace:d=2", 8));
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn checkerboard_is_far_from_monotone() {
    let c = gen("checkerboard:d=2,cell=0.125", 1);
    let shape = GridShape::new(8, 2);
    let pos: Vec<f64> = shape
        .cells()
        .map(|v| {
            let x: Vec<f64> = v.iter().map(|&i| (i as f64 + 0.5) / 8.0).collect();
            if c.eval(&x) > 0 {
                1.0 / 64.0
            } else {
                0.0
            }
        })
        .collect();
    let cover = build_cover(CoverClass::Monotone, 8, 2).unwrap();
    assert!(cover.complete);
    let (dist, _) = exact_distance(&pos, &[1.0 / 64.0; 64], &cover);
    assert!(dist >= 0.4, "distance {dist}");
}

#[test]
fn staircase_alternates_exactly_k_times() {
    for seed in 0..10 {
        let c = gen("staircase:d=1,k=3", seed);
        let vals: Vec<i8> = (0..=100_000).map(|i| c.eval(&[i as f64 / 100_000.0])).collect();
        let flips = vals.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(flips, 3, "seed {seed}");
    }
}

#[test]
fn generated_file_is_loadable() {
    let dir = scratch("load");
    let f = dir.join("disk.json");
    assert!(bin(&["gen", "disk:d=2", "--seed", "3", "--out", f.to_str().unwrap()]).status.success());
    let cfg = dir.join("bbs.toml");
    std::fs::write(
        &cfg,
        "version = 1\n[[scenario]]\nname = \"fixed\"\nkind = \"bbs\"\nseed = 1\ntrials = 3\n\
         [scenario.params]\ntarget = \"file:disk.json\"\nclass = \"convex\"\nd = 2\nr = 8\n\
         method = \"analytic\"\npartition = \"uniform\"\n",
    )
    .unwrap();
    let o = bin(&["run", cfg.to_str().unwrap(), "--out", dir.join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.join("out/bbs.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "scenario,check,trial,seed,pass,value,bound,samples,queries,detail");
    assert_eq!(csv.lines().count(), 4);
    assert!(dir.join("out/bbs.timings.csv").exists());
    let r = bin(&["report", dir.join("out/bbs.csv").to_str().unwrap()]);
    assert!(r.status.success());
    assert!(dir.join("out/bbs.dat").exists());
    std::fs::remove_dir_all(dir).ok();
}

fn exit_code_for(dir: &Path, name: &str, text: &str) -> Option<i32> {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    bin(&["run", p.to_str().unwrap(), "--out", dir.join("out").to_str().unwrap()]).status.code()
}

const GOOD: &str = "version = 1\n[[scenario]]\nname = \"w\"\nkind = \"walsh-validate\"\nseed = 1\ntrials = 1\n\
                    [scenario.params]\nn = 4\ndims = [1]\ntolerance = 1e-10\n";

#[test]
fn exit_codes() {
    let dir = scratch("exit");
    assert_eq!(exit_code_for(&dir, "good.toml", GOOD), Some(0));
    assert_eq!(exit_code_for(&dir, "typo.toml", &GOOD.replace("trials", "trails")), Some(2));
    assert_eq!(exit_code_for(&dir, "version.toml", &GOOD.replace("version = 1", "version = 9")), Some(2));
    assert_eq!(exit_code_for(&dir, "param.toml", &GOOD.replace("tolerance", "tol")), Some(2));
    // an unmeetable threshold is a failure, not a config error
    assert_eq!(exit_code_for(&dir, "fail.toml", &GOOD.replace("1e-10", "-1.0")), Some(1));
    let bad_target = "version = 1\n[[scenario]]\nname = \"b\"\nkind = \"bbs\"\nseed = 1\ntrials = 1\n\
                      [scenario.params]\ntarget = \"blob\"\nclass = \"convex\"\nd = 2\nr = 8\n\
                      method = \"analytic\"\npartition = \"uniform\"\n";
    assert_eq!(exit_code_for(&dir, "target.toml", bad_target), Some(2));
    assert_eq!(bin(&["gen", "blob", "--seed", "1"]).status.code(), Some(2));
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn validate_passes() {
    let o = bin(&["validate"]);
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{out}");
    assert!(!out.contains("FAIL"));
}
