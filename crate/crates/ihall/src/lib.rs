pub mod config;
pub mod report;
pub mod suites;

use anyhow::{bail, Result};
use ihall_core::generators::{GeneratorSet, Vertex};

/// Text dump of one generator: `kind` is `B`, `Theta` or `H`.
pub fn dump_generator(g: &GeneratorSet, vertex: &str, kind: &str, index: i64) -> Result<String> {
    let v = Vertex::parse(vertex)?;
    g.check_vertex(v)?;
    let x = match kind.to_ascii_lowercase().as_str() {
        "b" => g.b(v, index)?,
        "theta" | "th" => g.theta(v, index)?,
        "h" => g.h(v, index)?,
        other => bail!("unknown generator kind {other:?}; expected B, Theta or H"),
    };
    Ok(x.dump())
}
