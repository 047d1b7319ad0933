use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ExperimentError;
use crate::corruption::{CorruptionAssignment, CorruptionModel};
use crate::dim_sim::{DimSystem, NoiseSpec, TransferFunction};
use crate::graphs::{NodeSet, UndirectedGraph};
use crate::mrf::{DiscreteMrf, Factor, GaussianNetworkModel, GaussianPerturbation, PerturbFactor};
use crate::spectral::{SupportConfig, WelchConfig};

/// Node reference in a config: a label, written either as a string or as an
/// integer (`2` and `"2"` name the same node).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeRef {
    Int(i64),
    Label(String),
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeRef::Int(i) => write!(f, "{i}"),
            NodeRef::Label(s) => f.write_str(s),
        }
    }
}

/// Either a node count (labels `1..=n`) or an explicit label list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Nodes {
    Count(usize),
    Labels(Vec<String>),
}

impl Nodes {
    pub fn labels(&self) -> Vec<String> {
        match self {
            Nodes::Count(n) => (1..=*n).map(|i| i.to_string()).collect(),
            Nodes::Labels(l) => l.clone(),
        }
    }
}

fn resolve(labels: &[String], r: &NodeRef) -> Result<usize, ExperimentError> {
    let key = r.to_string();
    labels
        .iter()
        .position(|l| *l == key)
        .ok_or_else(|| ExperimentError::Config(format!("unknown node `{key}`")))
}

fn check_labels(labels: &[String]) -> Result<(), ExperimentError> {
    if labels.is_empty() {
        return Err(ExperimentError::Config("at least one node required".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    for l in labels {
        if !seen.insert(l) {
            return Err(ExperimentError::Config(format!("duplicate label `{l}`")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArcSpec {
    pub from: NodeRef,
    pub to: NodeRef,
    pub num: Vec<f64>,
    #[serde(default = "one")]
    pub den: Vec<f64>,
}

fn one() -> Vec<f64> {
    vec![1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseEntry {
    pub node: NodeRef,
    pub variance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shaping: Option<TransferFunction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub nodes: Nodes,
    #[serde(default)]
    pub arcs: Vec<ArcSpec>,
    /// Nodes not listed get unit white noise.
    #[serde(default)]
    pub noise: Vec<NoiseEntry>,
}

impl SystemSpec {
    pub fn build(&self) -> Result<(Vec<String>, DimSystem), ExperimentError> {
        let labels = self.nodes.labels();
        check_labels(&labels)?;
        let mut sys = DimSystem::new(labels.len());
        for a in &self.arcs {
            let (from, to) = (resolve(&labels, &a.from)?, resolve(&labels, &a.to)?);
            if sys.entry(to, from).is_some() {
                return Err(ExperimentError::Config(format!("arc {} -> {} given twice", a.from, a.to)));
            }
            sys.set_arc(from, to, TransferFunction::new(a.num.clone(), a.den.clone())?)?;
        }
        for e in &self.noise {
            let i = resolve(&labels, &e.node)?;
            let spec = match &e.shaping {
                None => NoiseSpec::white(e.variance),
                Some(s) => NoiseSpec::colored(e.variance, s.clone()),
            };
            sys.set_noise(i, spec)?;
        }
        Ok((labels, sys))
    }
}

/// `node = ...` plus the fields of a [`CorruptionModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionEntry {
    pub node: NodeRef,
    #[serde(flatten)]
    pub model: CorruptionModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    /// Samples kept per trial.
    pub samples: usize,
    pub trials: usize,
    /// Samples discarded before the kept window (network and corruption states warm up together).
    pub burn_in: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self { samples: 10_000, trials: 100, burn_in: 1000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticConfig {
    pub grid_points: usize,
    /// Relative support threshold for exact inverses.
    pub threshold: f64,
    pub autocorr_grid: usize,
    pub max_lag: usize,
}

impl Default for AnalyticConfig {
    fn default() -> Self {
        Self { grid_points: 256, threshold: 1e-7, autocorr_grid: 4096, max_lag: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianArc {
    pub from: NodeRef,
    pub to: NodeRef,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianPertSpec {
    pub node: NodeRef,
    pub c: f64,
    pub noise_var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSpec {
    pub nodes: Vec<NodeRef>,
    pub table: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbSpec {
    pub node: NodeRef,
    #[serde(default = "two")]
    pub card: usize,
    pub table: Vec<f64>,
}

fn two() -> usize {
    2
}

fn default_rel_tol() -> f64 {
    1e-9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MrfSpec {
    Gaussian {
        nodes: Nodes,
        #[serde(default)]
        arcs: Vec<GaussianArc>,
        /// Per-node noise variances; all ones when omitted.
        #[serde(default)]
        noise_var: Vec<f64>,
        #[serde(default)]
        perturbations: Vec<GaussianPertSpec>,
        /// Relative support threshold on the observed precision.
        #[serde(default = "default_rel_tol")]
        threshold: f64,
    },
    Discrete {
        nodes: Nodes,
        /// Alphabet sizes; all binary when omitted.
        #[serde(default)]
        cards: Vec<usize>,
        /// Extra declared edges beyond the factor scopes.
        #[serde(default)]
        edges: Vec<[NodeRef; 2]>,
        factors: Vec<FactorSpec>,
        #[serde(default)]
        perturbations: Vec<PerturbSpec>,
    },
}

pub enum BuiltMrf {
    Gaussian { labels: Vec<String>, model: GaussianNetworkModel, perts: Vec<GaussianPerturbation>, threshold: f64 },
    Discrete { labels: Vec<String>, mrf: DiscreteMrf, perts: Vec<PerturbFactor> },
}

impl MrfSpec {
    pub fn build(&self) -> Result<BuiltMrf, ExperimentError> {
        match self {
            MrfSpec::Gaussian { nodes, arcs, noise_var, perturbations, threshold } => {
                let labels = nodes.labels();
                check_labels(&labels)?;
                let n = labels.len();
                let arcs = arcs
                    .iter()
                    .map(|a| Ok((resolve(&labels, &a.from)?, resolve(&labels, &a.to)?, a.weight)))
                    .collect::<Result<Vec<_>, ExperimentError>>()?;
                let var = if noise_var.is_empty() { vec![1.0; n] } else { noise_var.clone() };
                let model = GaussianNetworkModel::from_arcs(n, &arcs, var)?;
                let perts = perturbations
                    .iter()
                    .map(|p| {
                        Ok(GaussianPerturbation { node: resolve(&labels, &p.node)?, c: p.c, noise_var: p.noise_var })
                    })
                    .collect::<Result<Vec<_>, ExperimentError>>()?;
                Ok(BuiltMrf::Gaussian { labels, model, perts, threshold: *threshold })
            }
            MrfSpec::Discrete { nodes, cards, edges, factors, perturbations } => {
                let labels = nodes.labels();
                check_labels(&labels)?;
                let n = labels.len();
                let cards = if cards.is_empty() { vec![2; n] } else { cards.clone() };
                let factors = factors
                    .iter()
                    .map(|f| {
                        Ok(Factor {
                            nodes: f.nodes.iter().map(|r| resolve(&labels, r)).collect::<Result<_, _>>()?,
                            table: f.table.clone(),
                        })
                    })
                    .collect::<Result<Vec<_>, ExperimentError>>()?;
                let mut g = UndirectedGraph::new(n);
                for [a, b] in edges {
                    g.add_edge(resolve(&labels, a)?, resolve(&labels, b)?)?;
                }
                for f in &factors {
                    for (k, &i) in f.nodes.iter().enumerate() {
                        for &j in &f.nodes[k + 1..] {
                            if i != j {
                                g.add_edge(i, j)?;
                            }
                        }
                    }
                }
                let mrf = DiscreteMrf::new(cards, g, factors)?;
                let perts = perturbations
                    .iter()
                    .map(|p| Ok(PerturbFactor { node: resolve(&labels, &p.node)?, card_u: p.card, table: p.table.clone() }))
                    .collect::<Result<Vec<_>, ExperimentError>>()?;
                Ok(BuiltMrf::Discrete { labels, mrf, perts })
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

/// Top-level experiment description (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSpec>,
    #[serde(default)]
    pub corruption: Vec<CorruptionEntry>,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub welch: WelchConfig,
    #[serde(default)]
    pub support: SupportConfig,
    #[serde(default)]
    pub analytic: AnalyticConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mrf: Option<MrfSpec>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// The network, its labels and the corruption assignment.
pub struct BuiltSystem {
    pub labels: Vec<String>,
    pub system: DimSystem,
    pub assignment: CorruptionAssignment,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ExperimentError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String, ExperimentError> {
        toml::to_string(self).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }

    pub fn build_system(&self) -> Result<BuiltSystem, ExperimentError> {
        let spec = self.system.as_ref().ok_or_else(|| ExperimentError::Config("missing [system] section".into()))?;
        let (labels, system) = spec.build()?;
        let mut assignment = CorruptionAssignment::new(labels.len());
        for c in &self.corruption {
            assignment.insert(resolve(&labels, &c.node)?, c.model.clone())?;
        }
        Ok(BuiltSystem { labels, system, assignment })
    }

    /// Full validation of whichever sections are present.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.system.is_none() && self.mrf.is_none() {
            return Err(ExperimentError::Config("need a [system] or an [mrf] section".into()));
        }
        if self.system.is_some() {
            let b = self.build_system()?;
            if !crate::dim_sim::check_stability(&b.system) {
                return Err(ExperimentError::Config("system is not stable".into()));
            }
        } else if !self.corruption.is_empty() {
            return Err(ExperimentError::Config("[[corruption]] needs a [system] section".into()));
        }
        if let Some(m) = &self.mrf {
            m.build()?;
        }
        let s = &self.simulation;
        if s.samples == 0 || s.trials == 0 {
            return Err(ExperimentError::Config("samples and trials must be positive".into()));
        }
        self.welch.validate()?;
        self.support.validate()?;
        let a = &self.analytic;
        if a.grid_points < 2 || !(a.threshold > 0.0) || a.autocorr_grid < 2 * a.max_lag + 2 {
            return Err(ExperimentError::Config("analytic grid/threshold/max_lag out of range".into()));
        }
        Ok(())
    }

    /// Node labels of whichever model is configured.
    pub fn labels(&self) -> Vec<String> {
        if let Some(s) = &self.system {
            s.nodes.labels()
        } else {
            match &self.mrf {
                Some(MrfSpec::Gaussian { nodes, .. }) | Some(MrfSpec::Discrete { nodes, .. }) => nodes.labels(),
                None => Vec::new(),
            }
        }
    }

    /// Nodes named by the corruption list.
    pub fn corrupted(&self) -> Result<NodeSet, ExperimentError> {
        Ok(self.build_system()?.assignment.perturbed_set())
    }
}
