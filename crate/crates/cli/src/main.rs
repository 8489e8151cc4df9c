//! `downsample`: run scenario configs, generate instances, validate, report.
//!
//! Exit codes: 0 when every declared threshold is met, 1 when one is not,
//! 2 for configuration errors. `DOWNSAMPLE_WORKERS` sets the trial pool size.

mod config;
mod instances;
mod report;
mod scenarios;
mod validate;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::{load, ConfigError, Loaded};
use report::{gnuplot_dat, read_csv, summarize, summary_line, timings_csv, to_csv};

#[derive(Parser)]
#[command(name = "downsample", version, about = "Seeded experiment harness for the downsample library")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Run config files, or `all` for every config in --configs.
    Run {
        #[arg(required = true)]
        configs: Vec<String>,
        #[arg(long, default_value = "configs")]
        config_dir: PathBuf,
        /// Directory for `<stem>.csv` and `<stem>.timings.csv`.
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Write a target instance as JSON, e.g. `gen halfspace:d=2 --seed 7`.
    Gen {
        spec: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Walsh identities plus serialization round trips.
    Validate,
    /// Summaries and gnuplot data for result CSVs.
    Report {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(w) = std::env::var("DOWNSAMPLE_WORKERS") {
        let n = match w.parse::<usize>() {
            Ok(n) if n > 0 => n,
            _ => {
                eprintln!("error: DOWNSAMPLE_WORKERS must be a positive integer, got '{w}'");
                return ExitCode::from(2);
            }
        };
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let res = match cli.verb {
        Verb::Run { configs, config_dir, out } => run(&configs, &config_dir, &out),
        Verb::Gen { spec, seed, out } => gen(&spec, seed, out.as_deref()).map(|_| true),
        Verb::Validate => validate::run(),
        Verb::Report { csv } => report(&csv).map(|_| true),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn config_paths(args: &[String], dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for a in args {
        if a == "all" {
            let mut found: Vec<PathBuf> = std::fs::read_dir(dir)
                .map_err(|e| ConfigError(format!("{}: {e}", dir.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "toml"))
                .collect();
            found.sort();
            if found.is_empty() {
                return Err(ConfigError(format!("no .toml configs in {}", dir.display())).into());
            }
            out.extend(found);
        } else {
            out.push(PathBuf::from(a));
        }
    }
    Ok(out)
}

fn run(args: &[String], dir: &Path, out: &Path) -> Result<bool> {
    // parse everything first so a bad file fails before any trial runs
    let loaded: Vec<Loaded> = config_paths(args, dir)?.iter().map(|p| load(p)).collect::<Result<_, _>>()?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut all_ok = true;
    for l in &loaded {
        let stem = l.path.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
        println!("== {} ({})", l.path.display(), l.config.description);
        let mut rows = Vec::new();
        let mut timings = Vec::new();
        for sc in &l.config.scenarios {
            let o = scenarios::run_scenario(sc, &l.base)?;
            for s in summarize(&o.rows) {
                let req = sc.required(&s.check);
                all_ok &= s.fraction() + 1e-12 >= req;
                println!("{}", summary_line(&s, Some(req)));
            }
            if let Some(max) = sc.max_seconds {
                let ok = o.seconds <= max;
                all_ok &= ok;
                println!(
                    "{:<32} {:<22} {:.2}s  limit {max}s  {}",
                    sc.name,
                    "wall-time",
                    o.seconds,
                    if ok { "ok" } else { "FAILED" }
                );
            }
            rows.extend(o.rows);
            timings.extend(o.timings);
        }
        let csv = out.join(format!("{stem}.csv"));
        std::fs::write(&csv, to_csv(&rows)?).with_context(|| format!("writing {}", csv.display()))?;
        let side = out.join(format!("{stem}.timings.csv"));
        std::fs::write(&side, timings_csv(&timings)?).with_context(|| format!("writing {}", side.display()))?;
    }
    println!("{}", if all_ok { "ALL THRESHOLDS MET" } else { "THRESHOLDS NOT MET" });
    Ok(all_ok)
}

fn gen(spec: &str, seed: u64, out: Option<&Path>) -> Result<()> {
    let cwd = std::env::current_dir()?;
    let t = instances::TargetSpec::parse(spec, &cwd).map_err(|e| ConfigError(format!("{e:#}")))?;
    let c = t.instantiate(&mut downsample::rng::stream(seed))?;
    let mut json = serde_json::to_string_pretty(&c)?;
    json.push('\n');
    match out {
        Some(p) => std::fs::write(p, json).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{json}"),
    }
    Ok(())
}

fn report(paths: &[PathBuf]) -> Result<()> {
    for p in paths {
        let rows = read_csv(p)?;
        let s = summarize(&rows);
        let dat = p.with_extension("dat");
        std::fs::write(&dat, gnuplot_dat(&s)).with_context(|| format!("writing {}", dat.display()))?;
        println!("== {}", p.display());
        for x in &s {
            println!("{}", summary_line(x, None));
        }
    }
    Ok(())
}
