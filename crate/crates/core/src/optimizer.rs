//! Agent states and the two-round gradient-tracking Adam iteration.
//!
//! Agent `(i, j)` owns `α̃_ij = [α; ρ]` (its estimate of solution slice `j`)
//! and `β̃_ij = [β; σ]` (its auxiliary `z` state). One step runs:
//!
//! 1. transmission 1: `α̃` and `y` to column neighbors, `β̃` to row neighbors;
//! 2. Adam moments from `y(t)`, local gradients at `α̃(t)` and the received
//!    `β̃(t)`, Metropolis mixing of `α̃`, and the tracker update
//!    `y(t+1) = Σ w y(t) + ∇C(t) − ∇C(t−1)`;
//! 3. transmission 2: `∇_{β̃_ik} C_ij` to row neighbor `k`;
//! 4. Adam on `β̃` driven by the assembled cross gradients.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
// Float math for no_std builds; std's inherent methods shadow it otherwise.
#[allow(unused_imports)]
use num_traits::Float;

use crate::ansatz::{AnsatzConfig, AugmentedParams};
use crate::error::{Error, Result};
use crate::estimator::{grad_cost, EstimatorMode, LocalCostInputs, LocalGradient};
use crate::mailbox::Mailbox;
use crate::metrics::{self, RunRecord};
use crate::problems::ProblemInstance;
use crate::seed;

/// Smallest value kept for the norm scales `ρ` and `σ`.
pub const NORM_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    /// Gradient tracking with Adam on both `α̃` and `β̃`.
    #[default]
    Proposed,
    /// Plain tracked gradient step on `α̃`.
    TrackAdamZ,
    /// Plain gradient step on `β̃`.
    TrackAdamX,
    /// No tracker; Adam on `α̃` is fed the local gradient.
    ConsensusAdamXAdamZ,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Proposed, Variant::TrackAdamZ, Variant::TrackAdamX, Variant::ConsensusAdamXAdamZ];

    /// Label used in comparison tables.
    pub fn label(self) -> &'static str {
        match self {
            Variant::Proposed => "Track+AdamX+AdamZ",
            Variant::TrackAdamZ => "Track+AdamZ",
            Variant::TrackAdamX => "Track+AdamX",
            Variant::ConsensusAdamXAdamZ => "Consensus+AdamX+AdamZ",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Variant::Proposed => "proposed",
            Variant::TrackAdamZ => "track_adamz",
            Variant::TrackAdamX => "track_adamx",
            Variant::ConsensusAdamXAdamZ => "consensus_adamx_adamz",
        }
    }

    fn tracks(self) -> bool {
        self != Variant::ConsensusAdamXAdamZ
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.key() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown variant `{s}`")))
    }
}

/// Which gradient drives the `β̃_ij` update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BetaGradient {
    /// `Σ_{k∈N} ∇_{β̃_ij} C_ik`, built from the cross gradients received in
    /// the second transmission.
    #[default]
    Received,
    /// `Σ_{k∈N} ∇_{β̃_ik} C_ij`, the agent's own cross gradients.
    Literal,
}

impl FromStr for BetaGradient {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "received" => Ok(BetaGradient::Received),
            "literal" => Ok(BetaGradient::Literal),
            other => Err(Error::InvalidConfig(format!("unknown beta gradient rule `{other}`"))),
        }
    }
}

impl fmt::Display for BetaGradient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BetaGradient::Received => "received",
            BetaGradient::Literal => "literal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub gamma1: f64,
    pub gamma2: f64,
    pub eta: f64,
    pub epsilon: f64,
    /// Stop once the global residual is at most this value.
    pub eps_stop: f64,
    pub max_iters: usize,
    pub variant: Variant,
    pub beta_gradient: BetaGradient,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            gamma1: 0.9,
            gamma2: 0.999,
            eta: 0.01,
            epsilon: 1e-8,
            eps_stop: 0.0,
            max_iters: 1000,
            variant: Variant::Proposed,
            beta_gradient: BetaGradient::Received,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(format!("optimizer.{what}")));
        if !(0.0..1.0).contains(&self.gamma1) {
            return bad("gamma1 must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.gamma2) {
            return bad("gamma2 must lie in [0, 1)");
        }
        if !(self.eta > 0.0) {
            return bad("eta must be positive");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(self.eps_stop >= 0.0) {
            return bad("eps_stop must be nonnegative");
        }
        Ok(())
    }

    /// `η(t+1) = η √(1 − γ₂^{t+1}) / (1 − γ₁^{t+1})`.
    pub fn stepsize(&self, t: usize) -> f64 {
        let k = (t + 1) as i32;
        self.eta * (1.0 - self.gamma2.powi(k)).sqrt() / (1.0 - self.gamma1.powi(k))
    }
}

/// Everything besides the problem and the seed that fixes a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSetup {
    pub ansatz: AnsatzConfig,
    /// Angles start uniform in `[lo, hi]`.
    pub init_range: (f64, f64),
    pub mode: EstimatorMode,
    pub optimizer: OptimizerConfig,
}

impl RunSetup {
    pub fn validate(&self) -> Result<()> {
        self.optimizer.validate()?;
        self.mode.validate()?;
        let (lo, hi) = self.init_range;
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidConfig(format!("init range [{lo}, {hi}] is empty or unbounded")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub row: usize,
    pub col: usize,
    pub alpha_tilde: AugmentedParams,
    pub beta_tilde: AugmentedParams,
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
    pub mu_p: Vec<f64>,
    pub nu_p: Vec<f64>,
    /// Gradient tracker; absent for the consensus variant.
    pub y: Option<Vec<f64>>,
    pub prev_alpha_grad: Vec<f64>,
}

/// The `m × m` agent grid, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    grid_size: usize,
    agents: Vec<AgentState>,
    setup: RunSetup,
    seed: u64,
    iteration: usize,
}

/// One agent's contribution from the first update round.
struct FirstRound {
    alpha_tilde: Vec<f64>,
    mu: Vec<f64>,
    nu: Vec<f64>,
    y: Option<Vec<f64>>,
    prev: Vec<f64>,
    cross: BTreeMap<usize, Vec<f64>>,
}

impl Network {
    /// Draws initial angles, exchanges `β̃(0)` and sets `y(0) = ∇_{α̃} C(0)`.
    pub fn initialize(problem: &ProblemInstance, setup: &RunSetup, seed: u64) -> Result<Self> {
        setup.validate()?;
        if setup.ansatz.num_qubits != problem.block_qubits {
            return Err(Error::DimensionMismatch { expected: problem.block_qubits, found: setup.ansatz.num_qubits });
        }
        let m = problem.grid_size;
        let p = setup.ansatz.num_params();
        let (lo, hi) = setup.init_range;
        let mut agents = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(&[seed, (i * m + j) as u64]));
                let mut draw = || -> Vec<f64> { (0..p).map(|_| if lo == hi { lo } else { rng.random_range(lo..=hi) }).collect() };
                let alpha = draw();
                let beta = draw();
                agents.push(AgentState {
                    row: i,
                    col: j,
                    alpha_tilde: AugmentedParams::new(alpha, 1.0)?,
                    beta_tilde: AugmentedParams::new(beta, 1.0)?,
                    mu: alloc::vec![0.0; p + 1],
                    nu: alloc::vec![0.0; p + 1],
                    mu_p: alloc::vec![0.0; p + 1],
                    nu_p: alloc::vec![0.0; p + 1],
                    y: None,
                    prev_alpha_grad: Vec::new(),
                });
            }
        }
        let mut net = Self { grid_size: m, agents, setup: *setup, seed, iteration: 0 };

        let allowed = net.row_link(problem);
        let mut row_box = Mailbox::new("beta", m * m, &allowed);
        for (a, agent) in net.agents.iter().enumerate() {
            row_box.post(a, agent.beta_tilde.clone())?;
        }
        for a in 0..m * m {
            let grad = net.local_gradient(problem, a, &net.agents[a].alpha_tilde, &row_box, 0)?;
            let agent = &mut net.agents[a];
            if setup.optimizer.variant.tracks() {
                agent.y = Some(grad.alpha_tilde.clone());
            }
            agent.prev_alpha_grad = grad.alpha_tilde;
        }
        Ok(net)
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    /// Direct access for tests and synthetic snapshots.
    pub fn agents_mut(&mut self) -> &mut [AgentState] {
        &mut self.agents
    }

    pub fn agent(&self, row: usize, col: usize) -> &AgentState {
        &self.agents[row * self.grid_size + col]
    }

    pub fn setup(&self) -> &RunSetup {
        &self.setup
    }

    /// Number of completed steps.
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    fn check_problem(&self, problem: &ProblemInstance) -> Result<()> {
        if problem.grid_size != self.grid_size {
            return Err(Error::InvalidGraph(format!("network has a {0}x{0} grid, problem has {1}x{1}", self.grid_size, problem.grid_size)));
        }
        Ok(())
    }

    fn row_link<'p>(&self, problem: &'p ProblemInstance) -> impl Fn(usize, usize) -> bool + 'p {
        let m = self.grid_size;
        move |reader, sender| reader / m == sender / m && problem.row_graph.contains(reader % m, sender % m)
    }

    fn col_link<'p>(&self, problem: &'p ProblemInstance) -> impl Fn(usize, usize) -> bool + 'p {
        let m = self.grid_size;
        move |reader, sender| reader % m == sender % m && problem.col_graph.contains(reader / m, sender / m)
    }

    /// `∇C_ij` at `alpha` with the row neighbors' `β̃` from `row_box`.
    fn local_gradient(
        &self,
        problem: &ProblemInstance,
        agent: usize,
        alpha: &AugmentedParams,
        row_box: &Mailbox<'_, AugmentedParams>,
        tag: u64,
    ) -> Result<LocalGradient> {
        let m = self.grid_size;
        let (i, j) = (agent / m, agent % m);
        let mut neighbor_z = BTreeMap::new();
        for k in problem.row_graph.closed_neighbors(j) {
            neighbor_z.insert(k, row_box.read(agent, i * m + k)?.clone());
        }
        let slice = &problem.b_slices[i][j];
        let inputs = LocalCostInputs {
            block: &problem.blocks[i][j],
            b_prep: &slice.prep,
            b_norm: slice.norm,
            ansatz: self.setup.ansatz,
            own_index: j,
            own_x: alpha.clone(),
            neighbor_z,
        };
        grad_cost(&inputs, self.setup.mode.reseeded(&[self.seed, agent as u64, tag]))
    }

    /// Agent `(row, col)`'s local cost inputs at the current iterate, with
    /// the row neighbors' `β̃` read directly from their states.
    pub fn local_inputs<'p>(&self, problem: &'p ProblemInstance, row: usize, col: usize) -> Result<LocalCostInputs<'p>> {
        self.check_problem(problem)?;
        let m = self.grid_size;
        if row >= m || col >= m {
            return Err(Error::BlockIndex { row, col, grid: m });
        }
        let neighbor_z = problem.row_graph.closed_neighbors(col).into_iter().map(|k| (k, self.agents[row * m + k].beta_tilde.clone())).collect();
        let slice = &problem.b_slices[row][col];
        Ok(LocalCostInputs {
            block: &problem.blocks[row][col],
            b_prep: &slice.prep,
            b_norm: slice.norm,
            ansatz: self.setup.ansatz,
            own_index: col,
            own_x: self.agents[row * m + col].alpha_tilde.clone(),
            neighbor_z,
        })
    }

    /// One full iteration `t → t+1`.
    pub fn step(&mut self, problem: &ProblemInstance) -> Result<()> {
        self.check_problem(problem)?;
        let m = self.grid_size;
        let n_agents = m * m;
        let t = self.iteration;
        let cfg = self.setup.optimizer;
        let eta_t = cfg.stepsize(t);
        let w = problem.col_graph.metropolis_weights();

        let col_allowed = self.col_link(problem);
        let row_allowed = self.row_link(problem);
        let mut col_box = Mailbox::new("alpha,y", n_agents, &col_allowed);
        let mut row_box = Mailbox::new("beta", n_agents, &row_allowed);
        for (a, agent) in self.agents.iter().enumerate() {
            col_box.post(a, (agent.alpha_tilde.to_vec(), agent.y.clone()))?;
            row_box.post(a, agent.beta_tilde.clone())?;
        }

        let mut first = Vec::with_capacity(n_agents);
        for a in 0..n_agents {
            first.push(self.first_update(problem, a, &w, &col_box, &row_box, eta_t, t)?);
        }

        let mut cross_box = Mailbox::new("cross-gradient", n_agents, &row_allowed);
        for (a, round) in first.iter().enumerate() {
            cross_box.post(a, round.cross.clone())?;
        }
        for a in 0..n_agents {
            let (i, j) = (a / m, a % m);
            let dim = self.agents[a].beta_tilde.dim();
            let mut g = alloc::vec![0.0; dim];
            for k in problem.row_graph.closed_neighbors(j) {
                let part = match cfg.beta_gradient {
                    BetaGradient::Received => &cross_box.read(a, i * m + k)?[&j],
                    BetaGradient::Literal => &first[a].cross[&k],
                };
                g.iter_mut().zip(part).for_each(|(acc, v)| *acc += v);
            }
            let agent = &mut self.agents[a];
            let mut beta = agent.beta_tilde.to_vec();
            if cfg.variant == Variant::TrackAdamX {
                beta.iter_mut().zip(&g).for_each(|(b, gi)| *b -= cfg.eta * gi);
            } else {
                adam(&mut agent.mu_p, &mut agent.nu_p, &g, &cfg);
                for ((b, mu), nu) in beta.iter_mut().zip(&agent.mu_p).zip(&agent.nu_p) {
                    *b -= eta_t * mu / (nu.sqrt() + cfg.epsilon);
                }
            }
            agent.beta_tilde = floored(&beta, "sigma", a);
        }

        for (agent, round) in self.agents.iter_mut().zip(first) {
            agent.alpha_tilde = floored(&round.alpha_tilde, "rho", agent.row * m + agent.col);
            agent.mu = round.mu;
            agent.nu = round.nu;
            agent.y = round.y;
            agent.prev_alpha_grad = round.prev;
        }
        self.iteration += 1;
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn first_update(
        &self,
        problem: &ProblemInstance,
        a: usize,
        w: &nalgebra::DMatrix<f64>,
        col_box: &Mailbox<'_, (Vec<f64>, Option<Vec<f64>>)>,
        row_box: &Mailbox<'_, AugmentedParams>,
        eta_t: f64,
        t: usize,
    ) -> Result<FirstRound> {
        let m = self.grid_size;
        let cfg = self.setup.optimizer;
        let agent = &self.agents[a];
        let (i, j) = (agent.row, agent.col);
        let grad = self.local_gradient(problem, a, &agent.alpha_tilde, row_box, t as u64 + 1)?;

        let dim = agent.alpha_tilde.dim();
        let mut mix = alloc::vec![0.0; dim];
        let mut y_mix = alloc::vec![0.0; dim];
        for k in problem.col_graph.closed_neighbors(i) {
            let (alpha_k, y_k) = col_box.read(a, k * m + j)?;
            let wk = w[(i, k)];
            mix.iter_mut().zip(alpha_k).for_each(|(acc, v)| *acc += wk * v);
            if let Some(y_k) = y_k {
                y_mix.iter_mut().zip(y_k).for_each(|(acc, v)| *acc += wk * v);
            }
        }

        let mut mu = agent.mu.clone();
        let mut nu = agent.nu.clone();
        let mut alpha = mix;
        match (cfg.variant, &agent.y) {
            (Variant::TrackAdamZ, Some(y)) => {
                alpha.iter_mut().zip(y).for_each(|(x, yi)| *x -= cfg.eta * yi);
            }
            (Variant::ConsensusAdamXAdamZ, _) => {
                adam(&mut mu, &mut nu, &grad.alpha_tilde, &cfg);
                step_adam(&mut alpha, &mu, &nu, eta_t, cfg.epsilon);
            }
            (_, Some(y)) => {
                adam(&mut mu, &mut nu, y, &cfg);
                step_adam(&mut alpha, &mu, &nu, eta_t, cfg.epsilon);
            }
            (_, None) => unreachable!("tracking variants keep y"),
        }

        let y = agent.y.as_ref().map(|_| {
            y_mix.iter().zip(&grad.alpha_tilde).zip(&agent.prev_alpha_grad).map(|((ym, g), p)| ym + g - p).collect()
        });
        Ok(FirstRound { alpha_tilde: alpha, mu, nu, y, prev: grad.alpha_tilde, cross: grad.beta_tilde })
    }

    /// Per column `j`, `Σ_i y_ij − Σ_i ∇C_ij(t−1)`, largest entry in
    /// magnitude. Zero up to rounding when mixing is doubly stochastic.
    pub fn tracker_drift(&self) -> f64 {
        let m = self.grid_size;
        let mut worst: f64 = 0.0;
        for j in 0..m {
            let dim = self.agent(0, j).prev_alpha_grad.len();
            for c in 0..dim {
                let mut s = 0.0;
                for i in 0..m {
                    let agent = self.agent(i, j);
                    if let Some(y) = &agent.y {
                        s += y[c] - agent.prev_alpha_grad[c];
                    }
                }
                worst = worst.max(s.abs());
            }
        }
        worst
    }
}

fn adam(mu: &mut [f64], nu: &mut [f64], g: &[f64], cfg: &OptimizerConfig) {
    for ((m, v), gi) in mu.iter_mut().zip(nu.iter_mut()).zip(g) {
        *m = cfg.gamma1 * *m + (1.0 - cfg.gamma1) * gi;
        *v = cfg.gamma2 * *v + (1.0 - cfg.gamma2) * gi * gi;
    }
}

fn step_adam(x: &mut [f64], mu: &[f64], nu: &[f64], eta: f64, epsilon: f64) {
    for ((xi, m), v) in x.iter_mut().zip(mu).zip(nu) {
        *xi -= eta * m / (v.sqrt() + epsilon);
    }
}

fn floored(values: &[f64], name: &str, agent: usize) -> AugmentedParams {
    let mut p = AugmentedParams::from_slice(values);
    if !(p.norm_scale >= NORM_FLOOR) {
        log::warn!("agent {agent}: {name} = {} raised to {NORM_FLOOR}", p.norm_scale);
        p.norm_scale = NORM_FLOOR;
    }
    p
}

/// Initializes and iterates until the residual after a step is at most
/// `eps_stop` or `max_iters` steps have run. Record 0 describes the initial
/// state; `clock` supplies elapsed seconds for each record.
pub fn run_with_clock(problem: &ProblemInstance, setup: &RunSetup, seed: u64, clock: &mut dyn FnMut() -> f64) -> Result<Vec<RunRecord>> {
    let mut net = Network::initialize(problem, setup, seed)?;
    let mut records = alloc::vec![metrics::record(problem, &net, seed, clock())?];
    while net.iteration() < setup.optimizer.max_iters {
        net.step(problem)?;
        let rec = metrics::record(problem, &net, seed, clock())?;
        let done = rec.residual <= setup.optimizer.eps_stop;
        records.push(rec);
        if done {
            break;
        }
    }
    Ok(records)
}

/// [`run_with_clock`] with every wall time reported as zero.
pub fn run(problem: &ProblemInstance, setup: &RunSetup, seed: u64) -> Result<Vec<RunRecord>> {
    run_with_clock(problem, setup, seed, &mut || 0.0)
}
