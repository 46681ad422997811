use std::collections::BTreeMap;
use std::process::ExitCode;
use std::rc::Rc;
use std::time::{Duration, Instant};

use ihall::suites::random_triples;
use ihall_core::generators::{GeneratorSet, Vertex};
use ihall_core::groundfield::Gf;
use ihall_core::ihallcore::Caps;
use ihall_core::lattice::WeightData;
use ihall_core::verifier::{self as v, tally, Entry, Grid, RelationInstance, Status};
use ihall_core::Engine;

type Outcome = Result<Vec<Entry>, String>;
type Criterion = (u32, &'static str, fn() -> Outcome, u64);

fn gens_with(q: u32, p: &[u32], caps: Caps) -> GeneratorSet {
    let gf = Gf::ground(q).unwrap();
    let w = WeightData::new(&gf, p).unwrap();
    GeneratorSet::new(Rc::new(Engine::with_caps(gf, w, caps).unwrap()))
}

fn gens(q: u32, p: &[u32]) -> GeneratorSet {
    gens_with(q, p, Caps::default())
}

fn ok<E: std::fmt::Display>(r: Result<Vec<Entry>, E>) -> Outcome {
    r.map_err(|e| e.to_string())
}

fn pick(g: &GeneratorSet, id: &'static str, mu: Vertex, nu: Vertex, grid: &Grid) -> Vec<RelationInstance> {
    v::instances(g, id, mu, nu, grid)
}

fn nonneg(insts: Vec<RelationInstance>) -> Vec<RelationInstance> {
    insts.into_iter().filter(|i| i.params.iter().all(|&x| x >= 0)).collect()
}

fn c1() -> Outcome {
    let mut out = ok(v::oracle_coprime(2, 4))?;
    out.extend(ok(v::oracle_coprime(3, 4))?);
    Ok(out)
}

fn c2() -> Outcome {
    ok(v::oracle_aut(2, 3, &[2, 3], 4))
}

fn c3() -> Outcome {
    let mut out = ok(v::oracle_hall(2, 2, 4))?;
    out.extend(ok(v::oracle_hall(2, 3, 4))?);
    Ok(out)
}

fn c4() -> Outcome {
    let g = gens(3, &[2, 2]);
    let pool = v::generator_supports(&g, 1).map_err(|e| e.to_string())?;
    Ok(v::associativity(g.engine(), &random_triples(&pool, 200, 20240601)))
}

fn c5() -> Outcome {
    let caps = Caps { max_torsion: 16, ..Caps::default() };
    let single = Grid { m_max: 2, l_abs: 2, k_abs: 1, serre_k: vec![], serre_l: vec![] };
    let pair = Grid { m_max: 0, l_abs: 0, k_abs: 1, serre_k: vec![0, 1], serre_l: vec![0, 1] };
    let mut out = Vec::new();
    for q in [2, 3] {
        for n in [2u32, 3] {
            let g = gens_with(q, &[n, 1], caps.clone());
            let mut insts = Vec::new();
            for j in 1..n as usize {
                let x = Vertex::Branch(1, j);
                for id in ["iDR1b", "iDR2", "iDR3b"] {
                    insts.extend(pick(&g, id, x, x, &single));
                }
            }
            if n == 3 {
                let (a, b) = (Vertex::Branch(1, 1), Vertex::Branch(1, 2));
                for (mu, nu) in [(a, b), (b, a)] {
                    insts.extend(nonneg(pick(&g, "iDR3a", mu, nu, &pair)));
                    insts.extend(pick(&g, "iDR5", mu, nu, &pair));
                }
            }
            out.extend(v::check_all(&g, &insts));
            out.extend(v::tube_closed_forms(&g, 1));
        }
        // commuting vertices first occur in C_4
        let g = gens_with(q, &[4, 1], caps.clone());
        let (a, b) = (Vertex::Branch(1, 1), Vertex::Branch(1, 3));
        for (mu, nu) in [(a, b), (b, a)] {
            out.extend(v::check_all(&g, &nonneg(pick(&g, "iDR4", mu, nu, &pair))));
        }
    }
    Ok(out)
}

fn c6() -> Outcome {
    let g = gens(2, &[1, 1]);
    let grid = Grid { m_max: 2, l_abs: 1, k_abs: 1, serre_k: vec![], serre_l: vec![] };
    let s = Vertex::Star;
    let mut insts = pick(&g, "iDR2", s, s, &grid);
    insts.extend(pick(&g, "iDR3b", s, s, &grid));
    Ok(v::check_all(&g, &insts))
}

fn c7() -> Outcome {
    let g = gens(3, &[2, 2]);
    let s = Vertex::Star;
    let (b1, b2) = (Vertex::Branch(1, 1), Vertex::Branch(2, 1));
    let grid = Grid { m_max: 2, l_abs: 1, k_abs: 1, serre_k: vec![0, 1], serre_l: vec![-1, 0] };
    let mut insts = Vec::new();
    for (mu, nu) in [(b1, b2), (b2, b1), (s, b1), (b1, s), (s, b2), (b2, s)] {
        insts.extend(pick(&g, "iDR4", mu, nu, &grid));
    }
    for b in [b1, b2] {
        for (mu, nu) in [(s, b), (b, s)] {
            insts.extend(pick(&g, "iDR3a", mu, nu, &grid));
            insts.extend(pick(&g, "iDR2", mu, nu, &grid));
            insts.extend(pick(&g, "iDR5", mu, nu, &grid));
        }
    }
    Ok(v::check_all(&g, &insts))
}

fn c8() -> Outcome {
    let mut out = Vec::new();
    let g = gens(3, &[2, 2]);
    for i in [1, 2] {
        out.extend(v::theorem_b(&g, i, 2));
    }
    for n in [2u32, 3] {
        let g = gens(3, &[n, 1]);
        out.extend(v::theorem_b(&g, 1, 2));
    }
    Ok(out)
}

fn c9() -> Outcome {
    ok(v::phi_psi_table(2, 2, 3))
}

fn c10() -> Outcome {
    let mut out = Vec::new();
    // four-term at r = n = 3 reaches S_0^(9)
    let caps = Caps { max_torsion: 12, ..Caps::default() };
    for (q, p) in [(2, [2u32, 3]), (3, [2, 2])] {
        let g = gens_with(q, &p, caps.clone());
        out.extend(v::lemma_middle_ending(&g, &[0, 1], 2));
        out.extend(v::lemma_pi_plus_one(&g, &[0, 1]));
        for i in [1, 2] {
            out.extend(v::lemma_four_term(&g, i, 3));
        }
        out.extend(v::lemma_hxm(&g, 2));
        out.extend(v::lemma_twist(&g, 3, &[0, 1]));
    }
    Ok(out)
}

fn c11() -> Outcome {
    let g = gens(2, &[2, 2]);
    let grid = Grid { m_max: 1, l_abs: 1, k_abs: 1, serre_k: vec![0, 1], serre_l: vec![0] };
    let insts = v::full_grid(&g, &grid);
    let out = v::negative_control(&g, &insts);
    for id in v::RELATIONS {
        let want = format!("perturbed-{id}");
        if !out.iter().any(|e| e.id == want) {
            return Err(format!("no instance of {id} in the control grid"));
        }
    }
    Ok(out)
}

fn detail(entries: &[Entry]) -> String {
    let t = tally(entries);
    let mut modes = BTreeMap::new();
    for e in entries {
        *modes.entry(e.transport.name()).or_insert(0usize) += 1;
    }
    let modes: Vec<String> = modes.iter().map(|(k, n)| format!("{k}={n}")).collect();
    format!(
        "{} entries: {} hold, {} consumed, {} fail, {} skipped, {} error; transport {}",
        entries.len(),
        t.holds,
        t.consumed,
        t.fails,
        t.skipped,
        t.errors,
        modes.join(" ")
    )
}

fn first_problem(entries: &[Entry]) -> Option<String> {
    entries.iter().find(|e| e.status.is_failure() || matches!(e.status, Status::Skipped(_))).map(|e| {
        let mu = e.mu.map(|x| x.to_string()).unwrap_or_default();
        let nu = e.nu.map(|x| x.to_string()).unwrap_or_default();
        format!("{} {mu} {nu} {:?}: {}", e.id, e.params, e.status.name())
    })
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        (1, "coprime counts", c1, 1),
        (2, "automorphism orders", c2, 30),
        (3, "Hall numbers vs Riedtmann-Peng", c3, 120),
        (4, "associativity, 200 triples", c4, 300),
        (5, "tube relations and closed forms", c5, 600),
        (6, "star relations on P1", c6, 600),
        (7, "weight (2,2) relation suite", c7, 3600),
        (8, "root-set closed forms", c8, 600),
        (9, "phi/psi table", c9, 60),
        (10, "lemma suite", c10, 900),
        (11, "negative control", c11, 60),
    ];
    let mut failed = 0;
    for (n, name, f, limit) in criteria {
        let start = Instant::now();
        let res = f();
        let dt = start.elapsed();
        let limit = Duration::from_secs(limit);
        let (pass, msg) = match &res {
            Err(e) => (false, format!("error: {e}")),
            Ok(es) if es.is_empty() => (false, "no entries".to_string()),
            Ok(es) => {
                let good = v::all_hold(es);
                let mut m = detail(es);
                if let Some(p) = first_problem(es) {
                    m.push_str(&format!("; first problem {p}"));
                }
                (good, m)
            }
        };
        let in_time = dt <= limit;
        let pass = pass && in_time;
        if !pass {
            failed += 1;
        }
        let timing = format!("{:.2}s of {}s{}", dt.as_secs_f64(), limit.as_secs(), if in_time { "" } else { " EXCEEDED" });
        println!("criterion {n:>2} {}: {name} [{timing}] {msg}", if pass { "PASS" } else { "FAIL" });
    }
    println!("{} of 11 criteria pass", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
