//! TOML experiment configuration.

use std::f64::consts::PI;
use std::path::PathBuf;

use dvqls_core::optimizer::{BetaGradient, OptimizerConfig, RunSetup, Variant};
use dvqls_core::problems::{self, LinearSystem, SplitRule};
use dvqls_core::{AnsatzConfig, Circuit, EstimatorMode, LcuOperator, NeighborGraph, ProblemInstance, Topology};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// A full experiment description. Every key has a default, so an empty
/// file describes a small Ising run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub num_trials: usize,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// When false the `wall_time_s` column is written as zero, which makes
    /// repeated runs byte-identical.
    #[serde(default = "default_true")]
    pub record_wall_time: bool,
    #[serde(default)]
    pub problem: ProblemConfig,
    #[serde(default)]
    pub partition: PartitionConfig,
    #[serde(default)]
    pub ansatz: AnsatzSection,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub estimator: EstimatorSection,
}

fn default_seed() -> u64 {
    1
}

fn default_trials() -> usize {
    10
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_true() -> bool {
    true
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        toml::from_str("").expect("defaults parse")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    /// `(1/ζ)(Σ X + κ Σ ZZ + λ I)` with `b = H^{⊗n}|0⟩`; `λ, ζ` tuned to
    /// the condition number.
    Ising {
        #[serde(default = "default_ising_qubits")]
        num_qubits: usize,
        #[serde(default = "default_kappa")]
        kappa: f64,
        #[serde(default = "default_ising_condition")]
        condition: f64,
    },
    /// Perturbed cluster-state system. `c1` and `c2` are tuned to the
    /// condition number unless both are given.
    Cluster {
        #[serde(default = "default_cluster_qubits")]
        num_qubits: usize,
        #[serde(default = "default_spacing")]
        spacing: usize,
        #[serde(default = "default_eps")]
        eps_perturb: f64,
        #[serde(default = "default_cluster_condition")]
        condition: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c1: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c2: Option<f64>,
    },
    /// Pauli-sum text plus gate lines for `b`.
    Inline { operator: String, b_circuit: String },
}

fn default_ising_qubits() -> usize {
    4
}
fn default_kappa() -> f64 {
    0.1
}
fn default_ising_condition() -> f64 {
    50.0
}
fn default_cluster_qubits() -> usize {
    13
}
fn default_spacing() -> usize {
    problems::CLUSTER_SPACING
}
fn default_eps() -> f64 {
    0.1
}
fn default_cluster_condition() -> f64 {
    20.0
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig::Ising { num_qubits: default_ising_qubits(), kappa: default_kappa(), condition: default_ising_condition() }
    }
}

impl ProblemConfig {
    pub fn build(&self) -> Result<LinearSystem> {
        let ctx = |e| HarnessError::field("problem", e);
        match *self {
            ProblemConfig::Ising { num_qubits, kappa, condition } => Ok(problems::ising_system(num_qubits, kappa, condition).map_err(ctx)?.0),
            ProblemConfig::Cluster { num_qubits, spacing, eps_perturb, condition, c1, c2 } => {
                let (c1, c2) = match (c1, c2) {
                    (Some(c1), Some(c2)) => (c1, c2),
                    (None, None) => {
                        let t = problems::tune_cluster(num_qubits, spacing, eps_perturb, condition).map_err(ctx)?;
                        (t.c1, t.c2)
                    }
                    _ => return Err(HarnessError::config("problem", "give both c1 and c2 or neither")),
                };
                problems::scaled_cluster_system(num_qubits, spacing, c1, c2, eps_perturb).map_err(ctx)
            }
            ProblemConfig::Inline { ref operator, ref b_circuit } => {
                let op = LcuOperator::parse(operator).map_err(|e| HarnessError::field("problem.operator", e))?;
                let b_circuit = Circuit::parse(op.num_qubits(), b_circuit).map_err(|e| HarnessError::field("problem.b_circuit", e))?;
                Ok(LinearSystem { op, b_circuit })
            }
        }
    }
}

/// A named topology or an explicit edge list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphConfig {
    Named(String),
    Edges { edges: Vec<[usize; 2]> },
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig::Named("path".into())
    }
}

impl GraphConfig {
    pub fn build(&self, m: usize, field: &str) -> Result<NeighborGraph> {
        let g = match self {
            GraphConfig::Named(name) => {
                let kind: Topology = name.parse().map_err(|e| HarnessError::field(field, e))?;
                NeighborGraph::make(kind, m)
            }
            GraphConfig::Edges { edges } => NeighborGraph::from_edges(m, &edges.iter().map(|&[a, b]| (a, b)).collect::<Vec<_>>()),
        };
        g.map_err(|e| HarnessError::field(field, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionConfig {
    /// Qubits per block; `None` means one block (a single agent).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_qubits: Option<usize>,
    #[serde(default)]
    pub row_graph: GraphConfig,
    #[serde(default)]
    pub col_graph: GraphConfig,
    #[serde(default = "default_split")]
    pub split: String,
}

fn default_split() -> String {
    SplitRule::Uniform.to_string()
}

impl Default for PartitionConfig {
    fn default() -> Self {
        Self { block_qubits: None, row_graph: GraphConfig::default(), col_graph: GraphConfig::default(), split: default_split() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzSection {
    #[serde(default = "default_layers")]
    pub layers: usize,
    #[serde(default)]
    pub initial_hadamard: bool,
    /// Angles start uniform in this range.
    #[serde(default = "default_init_range")]
    pub init_range: [f64; 2],
}

fn default_layers() -> usize {
    3
}

fn default_init_range() -> [f64; 2] {
    [-PI, PI]
}

impl Default for AnsatzSection {
    fn default() -> Self {
        Self { layers: default_layers(), initial_hadamard: false, init_range: default_init_range() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    #[serde(default = "default_gamma1")]
    pub gamma1: f64,
    #[serde(default = "default_gamma2")]
    pub gamma2: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub eps_stop: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_variant")]
    pub variant: String,
    /// `received` (default) or `literal`.
    #[serde(default = "default_beta_gradient")]
    pub beta_gradient: String,
}

fn default_gamma1() -> f64 {
    0.9
}
fn default_gamma2() -> f64 {
    0.999
}
fn default_eta() -> f64 {
    0.01
}
fn default_epsilon() -> f64 {
    1e-8
}
fn default_max_iters() -> usize {
    1000
}
fn default_variant() -> String {
    Variant::Proposed.key().into()
}
fn default_beta_gradient() -> String {
    BetaGradient::Received.to_string()
}

impl Default for OptimizerSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults parse")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSection {
    /// `exact` or `shots`.
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default = "default_shots")]
    pub shots: u64,
    /// Mixed into every shot-noise sub-seed.
    #[serde(default)]
    pub seed: u64,
}

fn default_mode() -> String {
    "exact".into()
}

fn default_shots() -> u64 {
    10_000
}

impl Default for EstimatorSection {
    fn default() -> Self {
        Self { mode: default_mode(), shots: default_shots(), seed: 0 }
    }
}

impl EstimatorSection {
    pub fn mode(&self) -> Result<EstimatorMode> {
        match self.mode.as_str() {
            "exact" => Ok(EstimatorMode::Exact),
            "shots" if self.shots >= 1 => Ok(EstimatorMode::Shots { shots: self.shots, seed: self.seed }),
            "shots" => Err(HarnessError::config("estimator.shots", "must be at least 1")),
            other => Err(HarnessError::config("estimator.mode", format!("unknown mode `{other}` (expected exact or shots)"))),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn optimizer_config(&self) -> Result<OptimizerConfig> {
        let o = &self.optimizer;
        let cfg = OptimizerConfig {
            gamma1: o.gamma1,
            gamma2: o.gamma2,
            eta: o.eta,
            epsilon: o.epsilon,
            eps_stop: o.eps_stop,
            max_iters: o.max_iters,
            variant: o.variant.parse().map_err(|e| HarnessError::field("optimizer.variant", e))?,
            beta_gradient: o.beta_gradient.parse().map_err(|e| HarnessError::field("optimizer.beta_gradient", e))?,
        };
        cfg.validate().map_err(|e| HarnessError::field("optimizer", e))?;
        Ok(cfg)
    }

    /// Checks every section and builds the partitioned problem and run setup.
    pub fn build(&self) -> Result<(ProblemInstance, RunSetup)> {
        if self.num_trials == 0 {
            return Err(HarnessError::config("num_trials", "must be at least 1"));
        }
        let system = self.problem.build()?;
        let n = system.num_qubits();
        let q = self.partition.block_qubits.unwrap_or(n);
        if q == 0 || q > n {
            return Err(HarnessError::config("partition.block_qubits", format!("must lie in 1..={n}")));
        }
        let m = 1usize << (n - q);
        let row = self.partition.row_graph.build(m, "partition.row_graph")?;
        let col = self.partition.col_graph.build(m, "partition.col_graph")?;
        let split: SplitRule = self.partition.split.parse().map_err(|e| HarnessError::field("partition.split", e))?;
        let problem = problems::partition(&system, q, split, row, col).map_err(|e| HarnessError::field("partition", e))?;

        let ansatz = AnsatzConfig::new(q, self.ansatz.layers, self.ansatz.initial_hadamard).map_err(|e| HarnessError::field("ansatz.layers", e))?;
        let [lo, hi] = self.ansatz.init_range;
        let setup = RunSetup { ansatz, init_range: (lo, hi), mode: self.estimator.mode()?, optimizer: self.optimizer_config()? };
        setup.validate().map_err(|e| HarnessError::field("ansatz.init_range", e))?;
        Ok((problem, setup))
    }
}
