use std::path::{Path, PathBuf};
use std::rc::Rc;

use anyhow::{bail, Context, Result};
use ihall_core::generators::GeneratorSet;
use ihall_core::groundfield::{Gf, Lambda};
use ihall_core::ihallcore::Caps;
use ihall_core::lattice::WeightData;
use ihall_core::Engine;
use serde::{Deserialize, Serialize};

/// A marked-point parameter as written in a config file: `"inf"` or the
/// index of an element of `F_q`.
#[derive(Clone, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum LambdaEntry {
    Elem(u16),
    Name(String),
}

impl LambdaEntry {
    fn resolve(&self, q: u32) -> Result<Lambda> {
        match self {
            LambdaEntry::Name(s) if s == "inf" || s == "infinity" => Ok(None),
            LambdaEntry::Name(s) => bail!("lambda: unknown entry {s:?} (expected \"inf\" or a field element)"),
            LambdaEntry::Elem(x) if (*x as u32) < q => Ok(Some(*x)),
            LambdaEntry::Elem(x) => bail!("lambda: {x} is not an element of F_{q}"),
        }
    }

    pub fn render(l: &Lambda) -> String {
        match l {
            None => "inf".into(),
            Some(x) => x.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapsConfig {
    pub max_torsion: u32,
    pub max_lines: usize,
    /// bound on generator indices swept by the suites
    pub max_index: i64,
    pub hom_budget: u64,
}

impl Default for CapsConfig {
    fn default() -> Self {
        let c = Caps::default();
        CapsConfig { max_torsion: c.max_torsion, max_lines: c.max_lines, max_index: 2, hom_budget: c.hom_budget }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub weights: Vec<u32>,
    pub lambda: Option<Vec<LambdaEntry>>,
    pub q: u32,
    pub caps: CapsConfig,
    pub suite: String,
    pub out: Option<PathBuf>,
    /// also run the brute-force oracles
    pub oracle: bool,
    pub seed: u64,
    /// number of random associativity triples
    pub triples: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            weights: Vec::new(),
            lambda: None,
            q: 0,
            caps: CapsConfig::default(),
            suite: "all".into(),
            out: None,
            oracle: false,
            seed: 0,
            triples: 200,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn caps(&self) -> Caps {
        Caps { hom_budget: self.caps.hom_budget, max_lines: self.caps.max_lines, max_torsion: self.caps.max_torsion }
    }

    /// Checks the config and resolves the marked-point parameters.
    pub fn validate(&self) -> Result<(Gf, WeightData)> {
        let t = self.weights.len();
        if t < 2 {
            bail!("weights: need at least two marked points (t >= 2), got {t}");
        }
        if self.weights.contains(&0) {
            bail!("weights: every weight must be positive");
        }
        if self.q == 0 {
            bail!("q: missing");
        }
        let gf = Gf::ground(self.q)?;
        if t >= 3 && t as u32 > self.q {
            bail!("weights: {t} marked points need q >= {t}");
        }
        if self.caps.max_index < 0 {
            bail!("caps.max_index must be nonnegative");
        }
        let w = match &self.lambda {
            None => WeightData::new(&gf, &self.weights)?,
            Some(ls) => {
                if ls.len() != t {
                    bail!("lambda: expected {t} entries, got {}", ls.len());
                }
                let lam = ls.iter().map(|l| l.resolve(self.q)).collect::<Result<Vec<_>>>()?;
                WeightData::with_lambda(&self.weights, lam)?
            }
        };
        Ok((gf, w))
    }

    pub fn generators(&self) -> Result<GeneratorSet> {
        let (gf, w) = self.validate()?;
        let eng = Engine::with_caps(gf, w, self.caps())?;
        Ok(GeneratorSet::new(Rc::new(eng)))
    }
}

/// Parses `a,b,c`.
pub fn parse_weights(s: &str) -> Result<Vec<u32>> {
    s.split(',')
        .map(|x| x.trim().parse::<u32>().with_context(|| format!("bad weight {x:?}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_keys() {
        let c = RunConfig::from_toml(
            r#"
weights = [2, 2, 2]
lambda = ["inf", 0, 1]
q = 3
suite = "relations"
[caps]
max_index = 1
max_torsion = 10
"#,
        )
        .unwrap();
        assert_eq!(c.weights, vec![2, 2, 2]);
        assert_eq!(c.caps.max_torsion, 10);
        assert_eq!(c.caps.max_lines, 3);
        let (_, w) = c.validate().unwrap();
        assert_eq!(w.lambda, vec![None, Some(0), Some(1)]);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(RunConfig::from_toml("weights = [1,1]\nq = 2\nbogus = 1\n").is_err());
    }

    #[test]
    fn validation() {
        let mut c = RunConfig { weights: vec![4], q: 2, ..Default::default() };
        assert!(c.validate().unwrap_err().to_string().contains("t >= 2"));
        c.weights = vec![1, 1];
        c.q = 4;
        assert!(c.validate().is_err());
        c.q = 6;
        assert!(c.validate().is_err());
        c.q = 2;
        assert!(c.validate().is_ok());
        c.weights = vec![2, 2, 2];
        assert!(c.validate().is_err());
        c.q = 3;
        assert!(c.validate().is_ok());
        c.lambda = Some(vec![LambdaEntry::Elem(0), LambdaEntry::Name("inf".into()), LambdaEntry::Elem(1)]);
        assert!(c.validate().is_err());
        c.lambda = Some(vec![LambdaEntry::Name("inf".into()), LambdaEntry::Elem(0), LambdaEntry::Elem(5)]);
        assert!(c.validate().is_err());
    }

    #[test]
    fn weights_flag() {
        assert_eq!(parse_weights("2, 3,4").unwrap(), vec![2, 3, 4]);
        assert!(parse_weights("2,x").is_err());
    }
}
