use anyhow::{bail, Result};
use ihall_core::generators::{GeneratorSet, Vertex};
use ihall_core::verifier::{self as v, Entry, Grid, RelationInstance};
use ihall_core::CohClass;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;

pub const SUITES: [&str; 10] = [
    "relations",
    "relations:star",
    "relations:tube",
    "relations:cross",
    "lemmas",
    "theorem-b",
    "oracles",
    "associativity",
    "negative",
    "all",
];

/// Entries produced by one suite.
pub struct SuiteResult {
    pub suite: String,
    pub entries: Vec<Entry>,
}

pub fn grid(max_index: i64) -> Grid {
    let k = max_index.max(1);
    Grid { m_max: k, l_abs: k, k_abs: k, serre_k: (-k..=k).collect(), serre_l: (-k..=k).collect() }
}

fn same_branch(a: Vertex, b: Vertex) -> bool {
    matches!((a, b), (Vertex::Branch(i, _), Vertex::Branch(j, _)) if i == j)
}

/// Relation instances over the vertex pairs selected by `filter`.
pub fn relation_instances(g: &GeneratorSet, grid: &Grid, filter: &str) -> Vec<RelationInstance> {
    v::full_grid(g, grid)
        .into_iter()
        .filter(|i| match filter {
            "star" => i.mu == Vertex::Star && i.nu == Vertex::Star,
            "tube" => same_branch(i.mu, i.nu),
            "cross" => !(i.mu == Vertex::Star && i.nu == Vertex::Star) && !same_branch(i.mu, i.nu),
            _ => true,
        })
        .collect()
}

fn branches(g: &GeneratorSet) -> Vec<usize> {
    let w = g.engine().w();
    (1..=w.t()).filter(|&i| w.weight(i) >= 2).collect()
}

pub fn lemmas(g: &GeneratorSet, n: i64) -> Vec<Entry> {
    let ls = [0, 1];
    let mut out = v::lemma_middle_ending(g, &ls, n);
    out.extend(v::lemma_pi_plus_one(g, &ls));
    for i in branches(g) {
        out.extend(v::lemma_four_term(g, i, n));
    }
    out.extend(v::lemma_hxm(g, n as u32));
    out.extend(v::lemma_twist(g, n as u32, &[0, 1]));
    for vx in g.vertices() {
        out.extend(v::lemma_series(g, vx, n as u32));
    }
    out.extend(v::lemma_pi_star(g, &ls, n));
    out.extend(v::lemma_theta_pm(g, n));
    out.extend(v::lemma_l0(g, n as u32));
    out
}

pub fn theorem_b(g: &GeneratorSet, r: u32) -> Vec<Entry> {
    let mut out = Vec::new();
    for i in branches(g) {
        out.extend(v::tube_closed_forms(g, i));
        out.extend(v::theorem_b(g, i, r));
    }
    out
}

pub fn oracles(q: u32) -> Result<Vec<Entry>> {
    let mut out = v::oracle_coprime(q, 4)?;
    out.extend(v::oracle_aut(q, 3, &[q], 4)?);
    out.extend(v::oracle_hall(q, 2, 4)?);
    out.extend(v::oracle_hall(q, 3, 4)?);
    out.extend(v::phi_psi_table(q, 2, 3)?);
    Ok(out)
}

/// `n` triples drawn uniformly from `pool` with a seeded generator.
pub fn random_triples(pool: &[CohClass], n: usize, seed: u64) -> Vec<(CohClass, CohClass, CohClass)> {
    if pool.is_empty() {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pick = || pool[rng.gen_range(0..pool.len())].clone();
    (0..n).map(|_| (pick(), pick(), pick())).collect()
}

pub fn associativity(g: &GeneratorSet, max_index: i64, n: usize, seed: u64) -> Result<Vec<Entry>> {
    let pool = v::generator_supports(g, max_index.max(1))?;
    Ok(v::associativity(g.engine(), &random_triples(&pool, n, seed)))
}

/// Runs one named suite. `all` expands to every suite.
pub fn run(cfg: &RunConfig, g: &GeneratorSet, name: &str) -> Result<Vec<SuiteResult>> {
    let n = cfg.caps.max_index;
    let one = |entries: Vec<Entry>| Ok(vec![SuiteResult { suite: name.to_string(), entries }]);
    match name {
        "relations" | "relations:star" | "relations:tube" | "relations:cross" => {
            let filter = name.strip_prefix("relations:").unwrap_or("all");
            let insts = relation_instances(g, &grid(n), filter);
            let mut entries = v::check_all(g, &insts);
            if cfg.oracle && filter != "tube" && filter != "cross" {
                entries.extend(v::star_p1_agreement(g, n.max(1))?);
            }
            one(entries)
        }
        "lemmas" => one(lemmas(g, n.max(1))),
        "theorem-b" => one(theorem_b(g, n.max(1) as u32)),
        "oracles" => one(oracles(cfg.q)?),
        "associativity" => one(associativity(g, 1, cfg.triples, cfg.seed)?),
        "negative" => {
            let insts = relation_instances(g, &grid(1), "all");
            one(v::negative_control(g, &insts))
        }
        "all" => {
            let mut out = Vec::new();
            for s in ["relations", "lemmas", "theorem-b", "oracles", "associativity", "negative"] {
                out.extend(run(cfg, g, s)?);
            }
            Ok(out)
        }
        other => bail!("unknown suite {other:?}; expected one of {}", SUITES.join(", ")),
    }
}

/// Runs the configured suite, adding the oracle suite when `oracle` is set.
pub fn run_config(cfg: &RunConfig, g: &GeneratorSet) -> Result<Vec<SuiteResult>> {
    let mut out = run(cfg, g, &cfg.suite)?;
    if cfg.oracle && cfg.suite != "oracles" && cfg.suite != "all" {
        out.extend(run(cfg, g, "oracles")?);
    }
    Ok(out)
}
