use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use ihall::config::{parse_weights, RunConfig};
use ihall::report::Report;
use ihall::{dump_generator, suites};
use ihall_core::verifier::tally;

/// Exact verification of Drinfeld-type relations in iHall algebras of
/// weighted projective lines.
#[derive(Parser, Debug)]
#[command(name = "ihall", version)]
struct Cli {
    /// TOML run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// suite to run: relations[:star|:tube|:cross], lemmas, theorem-b, oracles, associativity, negative, all
    #[arg(long)]
    suite: Option<String>,
    #[arg(long, global = true)]
    q: Option<u32>,
    /// comma separated weights, e.g. 2,2
    #[arg(long, global = true)]
    weights: Option<String>,
    /// bound on the generator indices swept by the suites
    #[arg(long)]
    max_index: Option<i64>,
    /// write the JSON report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// also run the brute-force cross-checks
    #[arg(long)]
    oracle: bool,
    /// seed for the random associativity triples
    #[arg(long)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Option<Cmd>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Print one generator, one term per line: coefficient ; class ; K
    Dump {
        /// `star` or `[i,j]`
        vertex: String,
        /// B, Theta or H
        kind: String,
        #[arg(allow_hyphen_values = true)]
        index: i64,
    },
}

fn config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(w) = &cli.weights {
        cfg.weights = parse_weights(w)?;
    }
    if let Some(q) = cli.q {
        cfg.q = q;
    }
    if let Some(s) = &cli.suite {
        cfg.suite = s.clone();
    }
    if let Some(n) = cli.max_index {
        cfg.caps.max_index = n;
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.oracle |= cli.oracle;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool> {
    let cfg = config(&cli)?;
    let g = cfg.generators()?;
    if let Some(Cmd::Dump { vertex, kind, index }) = &cli.cmd {
        print!("{}", dump_generator(&g, vertex, kind, *index)?);
        return Ok(true);
    }
    let start = Instant::now();
    let results = suites::run_config(&cfg, &g)?;
    for r in &results {
        let t = tally(&r.entries);
        eprintln!(
            "{}: {} holds, {} fails, {} skipped, {} consumed, {} errors",
            r.suite, t.holds, t.fails, t.skipped, t.consumed, t.errors
        );
    }
    eprintln!("elapsed {:.1}s", start.elapsed().as_secs_f64());
    let report = Report::build(&cfg, &g.engine().w().lambda, &results);
    let json = report.to_json();
    match &cfg.out {
        Some(p) => std::fs::write(p, json + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => println!("{json}"),
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
