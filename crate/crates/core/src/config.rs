//! JSON configuration: network, commission, prior and optional scenarios.
//!
//! Node ids must be `0..n` in any order. The shock node is moved to index 0
//! internally; the remaining nodes keep ascending id order. Scenario
//! directions are indexed by id. The shock node may carry a `market_size`
//! only when scenarios are present, where it is the base intercept.

use std::path::Path;

use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use crate::model::{Edge, ModelError, Network, Node, Prior, PriorKind};
use crate::optimizer::Scenario;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("{0}")]
    Schema(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    id: usize,
    mass: f64,
    beta: f64,
    #[serde(default)]
    market_size: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEdge {
    u: usize,
    v: usize,
    cost: f64,
}

/// Prior description: `kind`, kind-specific `params`, and the `[lo, hi]` support.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    pub kind: PriorKind,
    #[serde(default)]
    pub params: Option<Value>,
    pub support: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GaussianParams {
    mean: f64,
    std: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Component {
    weight: f64,
    lo: f64,
    hi: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MixtureParams {
    components: Vec<Component>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CdfParams {
    points: Vec<(f64, f64)>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    probability: f64,
    direction: Vec<f64>,
    prior: PriorConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    nodes: Vec<RawNode>,
    edges: Vec<RawEdge>,
    shock_node: usize,
    commission: f64,
    prior: PriorConfig,
    #[serde(default)]
    scenarios: Option<Vec<RawScenario>>,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct Config {
    pub network: Network,
    pub prior: Prior,
    pub scenarios: Option<Vec<Scenario>>,
    /// Config id of each internal node index.
    pub labels: Vec<usize>,
}

fn params<T: for<'de> Deserialize<'de>>(prior: &PriorConfig, what: &str) -> Result<T, ConfigError> {
    let value = prior
        .params
        .clone()
        .ok_or_else(|| ConfigError::Schema(format!("prior kind {what} needs params")))?;
    serde_json::from_value(value).map_err(|e| ConfigError::Schema(format!("prior params: {e}")))
}

fn same_support(prior: &Prior, support: [f64; 2]) -> Result<(), ConfigError> {
    let tol = 1e-12 * (1.0 + support[0].abs().max(support[1].abs()));
    if (prior.lo() - support[0]).abs() > tol || (prior.hi() - support[1]).abs() > tol {
        return Err(ConfigError::Schema(format!(
            "support [{}, {}] does not match the prior's range [{}, {}]",
            support[0],
            support[1],
            prior.lo(),
            prior.hi()
        )));
    }
    Ok(())
}

impl PriorConfig {
    pub fn build(&self) -> Result<Prior, ConfigError> {
        let [lo, hi] = self.support;
        let prior = match self.kind {
            PriorKind::Uniform => {
                match &self.params {
                    None => {}
                    Some(Value::Object(map)) if map.is_empty() => {}
                    Some(_) => return Err(ConfigError::Schema("uniform prior takes no params".into())),
                }
                Prior::uniform(lo, hi)?
            }
            PriorKind::TruncatedGaussian => {
                let p: GaussianParams = params(self, "truncated-gaussian")?;
                Prior::truncated_gaussian(p.mean, p.std, lo, hi)?
            }
            PriorKind::MixtureOfUniforms => {
                let p: MixtureParams = params(self, "mixture-of-uniforms")?;
                let comps: Vec<(f64, f64, f64)> = p.components.iter().map(|c| (c.weight, c.lo, c.hi)).collect();
                let prior = Prior::mixture_of_uniforms(&comps)?;
                same_support(&prior, self.support)?;
                prior
            }
            PriorKind::PiecewiseLinearCdf => {
                let p: CdfParams = params(self, "piecewise-linear-cdf")?;
                let prior = Prior::piecewise_linear_cdf(&p.points)?;
                same_support(&prior, self.support)?;
                prior
            }
        };
        Ok(prior)
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: RawConfig) -> Result<Self, ConfigError> {
        let n = raw.nodes.len();
        let mut by_id: Vec<Option<&RawNode>> = vec![None; n];
        for node in &raw.nodes {
            match by_id.get_mut(node.id) {
                Some(slot @ None) => *slot = Some(node),
                Some(Some(_)) => return Err(ConfigError::Schema(format!("duplicate node id {}", node.id))),
                None => return Err(ConfigError::Schema(format!("node ids must be 0..{n}, found {}", node.id))),
            }
        }
        if raw.shock_node >= n {
            return Err(ConfigError::Schema(format!("shock_node {} is not a node id", raw.shock_node)));
        }
        let mut labels = vec![raw.shock_node];
        labels.extend((0..n).filter(|&id| id != raw.shock_node));
        let mut index_of = vec![0; n];
        for (idx, &id) in labels.iter().enumerate() {
            index_of[id] = idx;
        }

        let mut nodes = Vec::with_capacity(n);
        for &id in &labels {
            let raw_node = by_id[id].expect("every id was filled");
            let market_size = match (id == raw.shock_node, raw_node.market_size) {
                (true, None) => 0.0,
                (true, Some(s)) if raw.scenarios.is_some() => s,
                (true, Some(_)) => {
                    return Err(ConfigError::Schema(format!(
                        "shock node {id} sets market_size but the config has no scenarios"
                    )))
                }
                (false, Some(s)) => s,
                (false, None) => return Err(ConfigError::Schema(format!("node {id} is missing market_size"))),
            };
            nodes.push(Node { mass: raw_node.mass, beta: raw_node.beta, market_size });
        }
        let mut edges = Vec::with_capacity(raw.edges.len());
        for e in &raw.edges {
            if e.u >= n || e.v >= n {
                return Err(ConfigError::Schema(format!("edge ({}, {}) names an unknown node", e.u, e.v)));
            }
            edges.push(Edge { u: index_of[e.u], v: index_of[e.v], cost: e.cost });
        }
        let network = Network::new(nodes, edges, raw.commission)?;
        let prior = raw.prior.build()?;

        let scenarios = match raw.scenarios {
            None => None,
            Some(list) => {
                let mut out = Vec::with_capacity(list.len());
                for s in list {
                    if s.direction.len() != n {
                        return Err(ConfigError::Schema(format!(
                            "scenario direction has {} entries for {n} nodes",
                            s.direction.len()
                        )));
                    }
                    let direction = labels.iter().map(|&id| s.direction[id]).collect();
                    out.push(Scenario { probability: s.probability, direction, prior: s.prior.build()? });
                }
                Some(out)
            }
        };
        Ok(Config { network, prior, scenarios, labels })
    }
}
