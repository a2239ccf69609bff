//! JSON experiment files.
//!
//! A file mirrors [`SimConfig`] plus an optional sweep grid, named run
//! variants and an output directory. Unknown keys are rejected everywhere.
//! Overrides use dotted keys (`protocol.bits=8`) and are applied to the JSON
//! document before it is checked again, so they go through the same schema.

use std::path::{Path, PathBuf};

use ppacdc_core::protocol::ZoomInRule;
use ppacdc_core::sim::sweep::SweepGrid;
use ppacdc_core::sim::{GraphSpec, InitialStates};
use ppacdc_core::{Digraph, ProtocolParams, SimConfig};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::edgelist;
use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub graph: GraphConfig,
    #[serde(default)]
    pub x0: InitialConfig,
    #[serde(default)]
    pub protocol: ProtocolConfig,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_conv_tolerance")]
    pub conv_tolerance: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub exact_mode: bool,
    /// Named variants, each a set of dotted-key overrides on this file.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub runs: Vec<RunVariant>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_max_iters() -> usize {
    20_000
}

fn default_conv_tolerance() -> f64 {
    1e-8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphConfig {
    Ring { n: usize },
    Complete { n: usize },
    Random {
        n: usize,
        extra_edge_prob: f64,
        #[serde(default)]
        seed: u64,
    },
    /// Edge-list file; relative paths resolve against the config file.
    EdgeList { path: PathBuf },
    /// Inline `[receiver, sender]` pairs.
    Edges { n: usize, edges: Vec<[usize; 2]> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    Uniform { lo: f64, hi: f64 },
    Values { values: Vec<f64> },
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig::Uniform { lo: 0.0, hi: 1000.0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleConfig {
    #[default]
    Centered,
    Literal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    pub gamma: f64,
    pub alpha: f64,
    pub d_bar: usize,
    pub bits: u32,
    pub delta0: f64,
    pub sigma0: f64,
    pub zoom_in_rule: RuleConfig,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        let p = ProtocolParams::default();
        Self {
            gamma: p.gamma,
            alpha: p.alpha,
            d_bar: p.d_bar,
            bits: p.bits,
            delta0: p.delta0,
            sigma0: p.sigma0,
            zoom_in_rule: RuleConfig::Centered,
        }
    }
}

impl From<&ProtocolConfig> for ProtocolParams {
    fn from(p: &ProtocolConfig) -> Self {
        ProtocolParams {
            gamma: p.gamma,
            alpha: p.alpha,
            d_bar: p.d_bar,
            bits: p.bits,
            delta0: p.delta0,
            sigma0: p.sigma0,
            zoom_in_rule: match p.zoom_in_rule {
                RuleConfig::Centered => ZoomInRule::Centered,
                RuleConfig::Literal => ZoomInRule::Literal,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunVariant {
    pub name: String,
    #[serde(default)]
    pub set: Map<String, Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub alphas: Vec<f64>,
    pub bits: Vec<u32>,
    pub n_seeds: usize,
    #[serde(default)]
    pub resample_topology: bool,
}

impl From<&SweepConfig> for SweepGrid {
    fn from(s: &SweepConfig) -> Self {
        SweepGrid {
            alphas: s.alphas.clone(),
            bits: s.bits.clone(),
            n_seeds: s.n_seeds,
            resample_topology: s.resample_topology,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

/// A parsed experiment together with the directory its relative paths use.
#[derive(Clone, Debug, PartialEq)]
pub struct Experiment {
    pub file: ExperimentFile,
    pub origin: String,
    pub base_dir: PathBuf,
}

impl Experiment {
    pub fn parse(text: &str, origin: &str, base_dir: &Path) -> Result<Self> {
        let file = serde_json::from_str(text).map_err(|e| CliError::json(origin, &e))?;
        Ok(Self {
            file,
            origin: origin.to_owned(),
            base_dir: base_dir.to_owned(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, &path.display().to_string(), base)
    }

    /// Applies `key=value` overrides. Values that are not valid JSON are
    /// taken as strings.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self> {
        let pairs = overrides
            .iter()
            .map(|o| {
                let (key, raw) = o
                    .split_once('=')
                    .ok_or_else(|| CliError::Config(format!("override {o:?} is not key=value")))?;
                let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
                Ok((key.trim().to_owned(), value))
            })
            .collect::<Result<Vec<_>>>()?;
        self.with_values(pairs.iter().map(|(k, v)| (k.as_str(), v)))
    }

    fn with_values<'a>(&self, pairs: impl IntoIterator<Item = (&'a str, &'a Value)>) -> Result<Self> {
        let mut doc = serde_json::to_value(&self.file).expect("experiment serializes");
        let mut touched = false;
        for (key, value) in pairs {
            set_dotted(&mut doc, key, value.clone())?;
            touched = true;
        }
        if !touched {
            return Ok(self.clone());
        }
        let file = serde_json::from_value(doc)
            .map_err(|e| CliError::Config(format!("{}: after overrides: {e}", self.origin)))?;
        Ok(Self {
            file,
            origin: self.origin.clone(),
            base_dir: self.base_dir.clone(),
        })
    }

    /// One `(name, config)` per variant, or a single unnamed run.
    pub fn run_configs(&self) -> Result<Vec<(Option<String>, SimConfig)>> {
        if self.file.runs.is_empty() {
            return Ok(vec![(None, self.sim_config()?)]);
        }
        self.file
            .runs
            .iter()
            .map(|v| {
                let exp = self.with_values(v.set.iter().map(|(k, val)| (k.as_str(), val)))?;
                Ok((Some(v.name.clone()), exp.sim_config()?))
            })
            .collect()
    }

    pub fn graph(&self) -> Result<Digraph> {
        self.graph_spec()?.build().map_err(Into::into)
    }

    fn graph_spec(&self) -> Result<GraphSpec> {
        Ok(match &self.file.graph {
            GraphConfig::Ring { n } => GraphSpec::Ring { n: *n },
            GraphConfig::Complete { n } => GraphSpec::Complete { n: *n },
            GraphConfig::Random {
                n,
                extra_edge_prob,
                seed,
            } => GraphSpec::Random {
                n: *n,
                extra_edge_prob: *extra_edge_prob,
                seed: *seed,
            },
            GraphConfig::EdgeList { path } => {
                GraphSpec::Explicit(edgelist::load(&self.base_dir.join(path))?)
            }
            GraphConfig::Edges { n, edges } => {
                let pairs = edges.iter().map(|&[j, i]| (j, i));
                GraphSpec::Explicit(Digraph::from_edges(*n, pairs)?)
            }
        })
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        let f = &self.file;
        Ok(SimConfig {
            graph: self.graph_spec()?,
            x0: match &f.x0 {
                InitialConfig::Uniform { lo, hi } => InitialStates::Uniform { lo: *lo, hi: *hi },
                InitialConfig::Values { values } => InitialStates::Values(values.clone()),
            },
            protocol: (&f.protocol).into(),
            max_iters: f.max_iters,
            conv_tolerance: f.conv_tolerance,
            seed: f.seed,
            exact_mode: f.exact_mode,
            record_trace: true,
        })
    }

    pub fn sweep_grid(&self) -> Result<SweepGrid> {
        self.file
            .sweep
            .as_ref()
            .map(SweepGrid::from)
            .ok_or_else(|| CliError::Config(format!("{}: no `sweep` section", self.origin)))
    }
}

fn set_dotted(doc: &mut Value, key: &str, value: Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("bad override key {key:?}")));
    }
    let (last, path) = parts.split_last().expect("split yields one part");
    let mut node = doc;
    for part in path {
        let map = node
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("override {key:?}: {part:?} is not inside an object")))?;
        node = map
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
    node.as_object_mut()
        .ok_or_else(|| CliError::Config(format!("override {key:?}: parent is not an object")))?
        .insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp(text: &str) -> Result<Experiment> {
        Experiment::parse(text, "test.json", Path::new("."))
    }

    #[test]
    fn minimal_file_gets_defaults() {
        let e = exp(r#"{"graph": {"kind": "ring", "n": 5}}"#).unwrap();
        let c = e.sim_config().unwrap();
        let d = SimConfig::default();
        assert_eq!(c, d);
    }

    #[test]
    fn unknown_keys_rejected_with_position() {
        let err = exp("{\n  \"graph\": {\"kind\": \"ring\", \"n\": 5},\n  \"max_iter\": 3\n}").unwrap_err();
        match err {
            CliError::Json { line, .. } => assert_eq!(line, 3),
            other => panic!("{other}"),
        }
        assert!(exp(r#"{"graph": {"kind": "ring", "n": 5, "m": 1}}"#).is_err());
        assert!(exp(r#"{"graph": {"kind": "ring", "n": 5}, "protocol": {"beta": 1}}"#).is_err());
    }

    #[test]
    fn malformed_json_reports_line_and_column() {
        let err = exp("{\n  \"graph\": \n}").unwrap_err();
        let CliError::Json { line, column, .. } = err else { panic!() };
        assert_eq!((line, column), (3, 1));
    }

    #[test]
    fn overrides_are_typed_and_checked() {
        let e = exp(r#"{"graph": {"kind": "ring", "n": 5}}"#).unwrap();
        let o = e
            .with_overrides(&["protocol.bits=3".into(), "protocol.zoom_in_rule=literal".into()])
            .unwrap();
        assert_eq!(o.file.protocol.bits, 3);
        assert_eq!(o.file.protocol.zoom_in_rule, RuleConfig::Literal);
        assert!(e.with_overrides(&["protocol.bitz=3".into()]).is_err());
        assert!(e.with_overrides(&["protocol.bits=x".into()]).is_err());
        assert!(e.with_overrides(&["noequals".into()]).is_err());
        assert!(e.with_overrides(&["seed.x=1".into()]).is_err());
    }

    #[test]
    fn variants_expand() {
        let e = exp(
            r#"{"graph": {"kind": "ring", "n": 5},
                "runs": [{"name": "b3", "set": {"protocol.bits": 3}},
                         {"name": "b8", "set": {"protocol.bits": 8}}]}"#,
        )
        .unwrap();
        let runs = e.run_configs().unwrap();
        let bits: Vec<_> = runs.iter().map(|(n, c)| (n.clone().unwrap(), c.protocol.bits)).collect();
        assert_eq!(bits, [("b3".to_string(), 3), ("b8".to_string(), 8)]);
    }

    #[test]
    fn inline_edges() {
        let e = exp(r#"{"graph": {"kind": "edges", "n": 3, "edges": [[1,0],[2,1],[0,2]]}}"#).unwrap();
        assert_eq!(e.graph().unwrap(), Digraph::ring(3).unwrap());
        let bad = exp(r#"{"graph": {"kind": "edges", "n": 3, "edges": [[1,0]]}}"#).unwrap();
        assert!(!bad.graph().unwrap().is_strongly_connected());
    }
}
