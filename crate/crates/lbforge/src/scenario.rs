//! Scenario files and the settings shared by the `simulate` and `forge`
//! commands.
//!
//! A scenario file holds one `key = value` pair per line; `#` starts a
//! comment. A relative `graph` path is resolved against the file's
//! directory. Command-line flags override file values.
//!
//! ```text
//! graph = diamond.txt
//! f = 1
//! epsilon = 0.01
//! inputs = split
//! victim = naive
//! seed = 7
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use lbforge_core::graph::{Graph, NodeId, NodeSet};
use lbforge_core::protocols::{ByzantineStrategy, ProtocolConfig};

use crate::victims::VictimKind;

#[derive(Debug, Clone, PartialEq)]
pub enum InputSpec {
    Explicit(Vec<f64>),
    UnanimousLower,
    UnanimousUpper,
    /// Lower half of the ids get `L`, the rest `U`.
    Split,
}

impl FromStr for InputSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "unanimous-L" | "unanimous-l" => Ok(InputSpec::UnanimousLower),
            "unanimous-U" | "unanimous-u" => Ok(InputSpec::UnanimousUpper),
            "split" => Ok(InputSpec::Split),
            list => list
                .split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|_| anyhow!("bad input value `{}`", x.trim())))
                .collect::<Result<Vec<_>>>()
                .map(InputSpec::Explicit),
        }
    }
}

impl InputSpec {
    pub fn values(&self, n: usize, lower: f64, upper: f64) -> Vec<f64> {
        match self {
            InputSpec::Explicit(v) => v.clone(),
            InputSpec::UnanimousLower => vec![lower; n],
            InputSpec::UnanimousUpper => vec![upper; n],
            InputSpec::Split => (0..n).map(|u| if u < n / 2 { lower } else { upper }).collect(),
        }
    }
}

/// Every setting, before validation against the graph.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub graph: Option<PathBuf>,
    pub f: usize,
    pub epsilon: f64,
    pub lower: f64,
    pub upper: f64,
    pub inputs: InputSpec,
    pub faulty: NodeSet,
    pub strategy: ByzantineStrategy,
    pub victim: Option<VictimKind>,
    /// Round count for the naive victim; defaults to the protocol's.
    pub rounds: Option<u16>,
    pub seed: u64,
    pub max_steps: u64,
    pub out: Option<PathBuf>,
    pub theorem: Option<u8>,
    pub mirror_auto: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            graph: None,
            f: 1,
            epsilon: 0.01,
            lower: 0.0,
            upper: 1.0,
            inputs: InputSpec::Split,
            faulty: NodeSet::new(),
            strategy: ByzantineStrategy::ConstantExtreme(ByzantineStrategy::DEFAULT_EXTREME),
            victim: None,
            rounds: None,
            seed: 0,
            max_steps: 2_000_000,
            out: None,
            theorem: None,
            mirror_auto: true,
        }
    }
}

pub fn parse_node_set(s: &str) -> Result<NodeSet> {
    s.split(',')
        .map(str::trim)
        .filter(|w| !w.is_empty())
        .map(|w| w.parse::<NodeId>().map_err(|_| anyhow!("bad node id `{w}`")))
        .collect()
}

pub fn parse_bool(s: &str) -> Result<bool> {
    match s.trim() {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        other => bail!("expected true or false, got `{other}`"),
    }
}

impl ScenarioConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let num = |what: &str| anyhow!("bad {what} `{v}`");
        match key.trim() {
            "graph" => self.graph = Some(PathBuf::from(v)),
            "f" => self.f = v.parse().map_err(|_| num("f"))?,
            "epsilon" => self.epsilon = v.parse().map_err(|_| num("epsilon"))?,
            "lower" => self.lower = v.parse().map_err(|_| num("lower bound"))?,
            "upper" => self.upper = v.parse().map_err(|_| num("upper bound"))?,
            "inputs" => self.inputs = v.parse()?,
            "faulty" => self.faulty = parse_node_set(v)?,
            "strategy" => self.strategy = v.parse().map_err(|_| anyhow!("unknown strategy `{v}`"))?,
            "victim" => self.victim = Some(v.parse()?),
            "rounds" => self.rounds = Some(v.parse().map_err(|_| num("round count"))?),
            "seed" => self.seed = v.parse().map_err(|_| num("seed"))?,
            "max_steps" | "max-steps" => self.max_steps = v.parse().map_err(|_| num("step budget"))?,
            "out" => self.out = Some(PathBuf::from(v)),
            "theorem" => self.theorem = Some(v.parse().map_err(|_| num("theorem"))?),
            "mirror_auto" | "mirror-auto" => self.mirror_auto = parse_bool(v)?,
            other => bail!("unknown scenario key `{other}`"),
        }
        Ok(())
    }

    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut cfg = ScenarioConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| anyhow!("line {}: expected `key = value`", i + 1))?;
            cfg.set(key, value).with_context(|| format!("line {}", i + 1))?;
        }
        if let (Some(base), Some(graph)) = (base, &cfg.graph) {
            if graph.is_relative() {
                cfg.graph = Some(base.join(graph));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text, path.parent()).with_context(|| format!("in {}", path.display()))
    }

    pub fn load_graph(&self) -> Result<Graph> {
        let path = self.graph.as_ref().ok_or_else(|| anyhow!("no graph given (use --graph)"))?;
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        crate::formats::parse_graph(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn protocol_config(&self, n: usize) -> Result<ProtocolConfig> {
        ProtocolConfig::new(self.epsilon, self.lower, self.upper, n, self.f).map_err(|e| anyhow!("{e}"))
    }

    /// Checks the run-specific invariants and returns the input vector.
    pub fn validated_inputs(&self, g: &Graph) -> Result<Vec<f64>> {
        let n = g.node_count();
        if self.f == 0 || self.f >= n {
            bail!("f = {} must be between 1 and n - 1 = {}", self.f, n - 1);
        }
        if self.faulty.len() > self.f {
            bail!("{} faulty nodes exceed f = {}", self.faulty.len(), self.f);
        }
        if let Some(&u) = self.faulty.iter().find(|&&u| u as usize >= n) {
            bail!("faulty node {u} is not in the graph");
        }
        let inputs = self.inputs.values(n, self.lower, self.upper);
        if inputs.len() != n {
            bail!("{} inputs given for {} nodes", inputs.len(), n);
        }
        if let Some(x) = inputs.iter().find(|x| !(self.lower..=self.upper).contains(*x)) {
            bail!("input {x} outside [{}, {}]", self.lower, self.upper);
        }
        Ok(inputs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_resolves_graph_path() {
        let text = "# demo\ngraph = g.txt\nf = 1\nepsilon=0.05\ninputs = 0, 0.5,1\nfaulty = 3\nstrategy = random-in-range\nvictim = naive\nseed = 9\nmirror_auto = off\n";
        let cfg = ScenarioConfig::parse(text, Some(Path::new("/tmp/s"))).unwrap();
        assert_eq!(cfg.graph, Some(PathBuf::from("/tmp/s/g.txt")));
        assert_eq!(cfg.epsilon, 0.05);
        assert_eq!(cfg.inputs, InputSpec::Explicit(vec![0.0, 0.5, 1.0]));
        assert_eq!(cfg.faulty, NodeSet::from([3]));
        assert_eq!(cfg.strategy, ByzantineStrategy::RandomInRange);
        assert_eq!(cfg.victim, Some(VictimKind::Naive));
        assert_eq!(cfg.seed, 9);
        assert!(!cfg.mirror_auto);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(ScenarioConfig::parse("f 1\n", None).is_err());
        assert!(ScenarioConfig::parse("colour = red\n", None).is_err());
        assert!(ScenarioConfig::parse("f = -1\n", None).is_err());
    }

    #[test]
    fn named_input_patterns() {
        assert_eq!(InputSpec::Split.values(5, 0.0, 1.0), vec![0.0, 0.0, 1.0, 1.0, 1.0]);
        assert_eq!("unanimous-L".parse::<InputSpec>().unwrap().values(2, -1.0, 1.0), vec![-1.0, -1.0]);
        assert_eq!("unanimous-U".parse::<InputSpec>().unwrap().values(1, -1.0, 1.0), vec![1.0]);
    }

    #[test]
    fn validation() {
        let g = Graph::complete(4);
        let mut cfg = ScenarioConfig { faulty: NodeSet::from([0, 1]), ..Default::default() };
        assert!(cfg.validated_inputs(&g).is_err());
        cfg.faulty = NodeSet::from([3]);
        assert!(cfg.validated_inputs(&g).is_ok());
        cfg.inputs = InputSpec::Explicit(vec![0.0, 2.0, 0.0, 0.0]);
        assert!(cfg.validated_inputs(&g).is_err());
        cfg.inputs = InputSpec::Explicit(vec![0.0]);
        assert!(cfg.validated_inputs(&g).is_err());
    }
}
