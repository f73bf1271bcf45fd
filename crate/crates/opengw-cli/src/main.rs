use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use opengw::io::{parse_atoms, parse_closed, parse_open, parse_target};
use opengw::pipeline::{run, Inputs, Pipeline, RunConfig};
use opengw::ring::parse_q;

/// Run the enumeration, recursion and verification pipelines on declared inputs.
#[derive(Parser, Debug)]
#[command(name = "opengw", version)]
struct Args {
    #[arg(long)]
    target: Option<PathBuf>,
    #[arg(long)]
    atoms: Option<PathBuf>,
    #[arg(long = "closed-gw")]
    closed_gw: Option<PathBuf>,
    #[arg(long)]
    seeds: Option<PathBuf>,
    /// enumerate, bb-recursion, welschinger, wdvv-solve or verify-all.
    #[arg(long, default_value = "verify-all")]
    pipeline: String,
    /// Largest area of the degrees the open relations are imposed in, as "p" or "p/q".
    #[arg(long = "area-bound", default_value = "1")]
    area_bound: String,
    /// Largest multi-disk whose spanning trees are listed one by one.
    #[arg(long = "cap-trees", default_value_t = 7)]
    cap_trees: usize,
    /// Longest insertion list in the open relations.
    #[arg(long = "max-insertions", default_value_t = 5)]
    max_insertions: usize,
    /// Synthetic instances per property suite in verify-all.
    #[arg(long = "suite-size", default_value_t = 25)]
    suite_size: usize,
    /// Directory for the tables and reports; the report also goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn read(p: &Path) -> Result<String, String> {
    fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))
}

fn at<T, E: std::fmt::Display>(p: &Path, r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| format!("{}: {e}", p.display()))
}

fn load(a: &Args) -> Result<Inputs, String> {
    let mut inputs = Inputs::default();
    if let Some(p) = &a.target {
        inputs.target = Some(at(p, parse_target(&read(p)?))?);
    }
    if let Some(p) = &a.atoms {
        inputs.atoms = Some(at(p, parse_atoms(&read(p)?))?);
    }
    let wdvv = || {
        inputs
            .target
            .as_ref()
            .and_then(|t| t.wdvv.as_ref())
            .ok_or_else(|| "--closed-gw and --seeds need a target with cohomology data".to_string())
    };
    let closed = match &a.closed_gw {
        Some(p) => Some(at(p, parse_closed(&read(p)?, &wdvv()?.model))?),
        None => None,
    };
    let seeds = match &a.seeds {
        Some(p) => Some(at(p, parse_open(&read(p)?, wdvv()?))?),
        None => None,
    };
    inputs.closed = closed;
    inputs.seeds = seeds;
    Ok(inputs)
}

fn config(a: &Args) -> Result<RunConfig, String> {
    let pipeline: Pipeline = a.pipeline.parse().map_err(|e| format!("--pipeline: {e}"))?;
    let area_bound = parse_q(&a.area_bound).ok_or_else(|| format!("--area-bound: not a rational: {:?}", a.area_bound))?;
    Ok(RunConfig {
        pipeline,
        area_bound,
        cap_trees: a.cap_trees,
        max_insertions: a.max_insertions,
        seed: a.seed,
        suite_size: a.suite_size,
    })
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = config(&args).and_then(|cfg| {
        let inputs = load(&args)?;
        run(&cfg, &inputs).map_err(|e| e.to_string())
    });
    let out = match result {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(dir) = &args.out {
        if let Err(e) = fs::create_dir_all(dir) {
            eprintln!("error: {}: {e}", dir.display());
            return ExitCode::from(2);
        }
        for (name, body) in &out.artifacts {
            let p = dir.join(name);
            if let Err(e) = fs::write(&p, body) {
                eprintln!("error: {}: {e}", p.display());
                return ExitCode::from(2);
            }
        }
    }
    print!("{}", out.artifacts["report.txt"]);
    if out.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
