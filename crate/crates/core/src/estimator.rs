//! Local cost and gradient evaluation from state overlaps.
//!
//! Every quantity is assembled from five overlap kinds:
//! `⟨x|A†A|x⟩`, `⟨x|A†|z⟩`, `⟨z|z'⟩`, `⟨b|A|x⟩` and `⟨b|z⟩`. In exact mode
//! they come from statevector arithmetic. In shot mode each one is expanded
//! over the LCU terms and every real part is sampled from a simulated
//! ancilla Hadamard test.
//!
//! Angle derivatives use the parameter-shift rule. An Ry angle enters a
//! linear overlap as `a·cos(θ/2) + b·sin(θ/2)`, so a ±π/2 shift difference
//! carries a factor `1/(2√2)`; quadratic expectations such as `⟨x|A†A|x⟩`
//! carry the usual `1/2`. Norm-scale derivatives are closed-form.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::SQRT_2;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::ansatz::{AnsatzConfig, AugmentedParams};
use crate::circuit::StatePrep;
use crate::error::{Error, Result};
use crate::pauli::{LcuOperator, PauliString};
use crate::seed;
use crate::statevector::{self, Statevector};

/// How overlaps are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorMode {
    Exact,
    Shots { shots: u64, seed: u64 },
}

impl EstimatorMode {
    pub fn validate(&self) -> Result<()> {
        match self {
            EstimatorMode::Shots { shots: 0, .. } => Err(Error::InvalidConfig("shot count must be at least 1".into())),
            _ => Ok(()),
        }
    }

    /// Same mode with the seed replaced by one derived from `path`.
    pub fn reseeded(&self, path: &[u64]) -> Self {
        match *self {
            EstimatorMode::Exact => EstimatorMode::Exact,
            EstimatorMode::Shots { shots, seed: base } => {
                let mut full = Vec::with_capacity(path.len() + 1);
                full.push(base);
                full.extend_from_slice(path);
                EstimatorMode::Shots { shots, seed: seed::derive(&full) }
            }
        }
    }
}

/// One arm of a Hadamard test: a state preparation, optionally followed by
/// a phased Pauli string.
#[derive(Debug, Clone, Copy)]
pub struct Branch<'a> {
    pub prep: &'a StatePrep,
    pub pauli: Option<(Complex64, &'a PauliString)>,
}

impl<'a> Branch<'a> {
    pub fn new(prep: &'a StatePrep) -> Self {
        Self { prep, pauli: None }
    }

    pub fn then(prep: &'a StatePrep, phase: Complex64, pauli: &'a PauliString) -> Self {
        Self { prep, pauli: Some((phase, pauli)) }
    }

    fn num_qubits(&self) -> usize {
        self.prep.num_qubits()
    }

    fn run_controlled(&self, half: &mut [Complex64]) {
        self.prep.prepare_in_place(half);
        if let Some((phase, pauli)) = self.pauli {
            let out = statevector::pauli_product(half, pauli, phase);
            half.copy_from_slice(&out);
        }
    }
}

/// Ancilla circuit estimating `Re⟨0|L† R|0⟩`: H on the ancilla, `L`
/// controlled on ancilla 0, `R` controlled on ancilla 1, H, measure.
#[derive(Debug, Clone, Copy)]
pub struct HadamardTest<'a> {
    pub left: Branch<'a>,
    pub right: Branch<'a>,
}

impl<'a> HadamardTest<'a> {
    pub fn new(left: Branch<'a>, right: Branch<'a>) -> Self {
        Self { left, right }
    }

    /// `P(ancilla = 0) = (1 + Re⟨0|L†R|0⟩)/2` from the simulated register.
    pub fn zero_probability(&self) -> Result<f64> {
        let q = self.left.num_qubits();
        if self.right.num_qubits() != q {
            return Err(Error::DimensionMismatch { expected: q, found: self.right.num_qubits() });
        }
        // The ancilla is qubit 0, so its two branches are the two halves.
        let mut reg = Statevector::zero_state(q + 1)?;
        reg.apply_h(0)?;
        {
            let (lower, upper) = reg.amplitudes_mut().split_at_mut(1 << q);
            self.left.run_controlled(lower);
            self.right.run_controlled(upper);
        }
        reg.apply_h(0)?;
        let p0: f64 = reg.amplitudes()[..1 << q].iter().map(|a| a.norm_sqr()).sum();
        Ok(p0.clamp(0.0, 1.0))
    }

    pub fn exact_value(&self) -> Result<f64> {
        Ok(2.0 * self.zero_probability()? - 1.0)
    }

    /// Unbiased shot estimate `2·freq(0) − 1`.
    pub fn sample(&self, shots: u64, seed: u64) -> Result<f64> {
        if shots == 0 {
            return Err(Error::InvalidConfig("shot count must be at least 1".into()));
        }
        let p0 = self.zero_probability()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let zeros = Binomial::new(shots, p0).map_err(|_| Error::InvalidConfig("invalid outcome probability".into()))?.sample(&mut rng);
        Ok(2.0 * zeros as f64 / shots as f64 - 1.0)
    }
}

pub fn hadamard_sample(test: &HadamardTest<'_>, num_shots: u64, seed: u64) -> Result<f64> {
    test.sample(num_shots, seed)
}

/// A prepared variational state. `image` caches `A|x⟩` in exact mode.
#[derive(Debug, Clone)]
pub(crate) struct Ket {
    prep: StatePrep,
    state: Statevector,
    image: Option<Statevector>,
}

pub(crate) trait OverlapSource {
    fn x_ket(&self, angles: &[f64]) -> Result<Ket>;
    fn z_ket(&self, angles: &[f64]) -> Result<Ket>;
    fn aa(&mut self, x: &Ket) -> Result<f64>;
    fn ax_z(&mut self, x: &Ket, z: &Ket) -> Result<f64>;
    fn zz(&mut self, a: &Ket, b: &Ket) -> Result<f64>;
    fn b_ax(&mut self, x: &Ket) -> Result<f64>;
    fn b_z(&mut self, z: &Ket) -> Result<f64>;
}

fn plain_ket(config: &AnsatzConfig, angles: &[f64]) -> Result<Ket> {
    let circuit = config.circuit(angles)?;
    let state = circuit.run();
    Ok(Ket { prep: StatePrep::Circuit(circuit), state, image: None })
}

struct ExactSource<'a> {
    block: &'a LcuOperator,
    b_state: Statevector,
    config: AnsatzConfig,
}

impl OverlapSource for ExactSource<'_> {
    fn x_ket(&self, angles: &[f64]) -> Result<Ket> {
        let mut ket = plain_ket(&self.config, angles)?;
        ket.image = Some(self.block.apply(&ket.state)?);
        Ok(ket)
    }

    fn z_ket(&self, angles: &[f64]) -> Result<Ket> {
        plain_ket(&self.config, angles)
    }

    fn aa(&mut self, x: &Ket) -> Result<f64> {
        Ok(x.image.as_ref().expect("x kets carry their image").norm_sqr())
    }

    fn ax_z(&mut self, x: &Ket, z: &Ket) -> Result<f64> {
        x.image.as_ref().expect("x kets carry their image").real_overlap(&z.state)
    }

    fn zz(&mut self, a: &Ket, b: &Ket) -> Result<f64> {
        a.state.real_overlap(&b.state)
    }

    fn b_ax(&mut self, x: &Ket) -> Result<f64> {
        self.b_state.real_overlap(x.image.as_ref().expect("x kets carry their image"))
    }

    fn b_z(&mut self, z: &Ket) -> Result<f64> {
        self.b_state.real_overlap(&z.state)
    }
}

struct ShotSource<'a> {
    block: &'a LcuOperator,
    b_prep: &'a StatePrep,
    config: AnsatzConfig,
    shots: u64,
    seed: u64,
    counter: u64,
}

impl ShotSource<'_> {
    fn estimate(&mut self, test: HadamardTest<'_>) -> Result<f64> {
        let sub = seed::derive(&[self.seed, self.counter]);
        self.counter += 1;
        test.sample(self.shots, sub)
    }
}

impl OverlapSource for ShotSource<'_> {
    fn x_ket(&self, angles: &[f64]) -> Result<Ket> {
        plain_ket(&self.config, angles)
    }

    fn z_ket(&self, angles: &[f64]) -> Result<Ket> {
        plain_ket(&self.config, angles)
    }

    fn aa(&mut self, x: &Ket) -> Result<f64> {
        // Σ_{h,h'} c_h c_h' Re⟨x|P_h P_h'|x⟩ with P_h² = I on the diagonal and
        // each product collapsed to one phased string.
        let terms = self.block.terms();
        let mut total = 0.0;
        for (h, th) in terms.iter().enumerate() {
            total += th.coefficient * th.coefficient;
            for th2 in &terms[h + 1..] {
                let (phase, string) = th.string.product(&th2.string)?;
                let v = self.estimate(HadamardTest::new(Branch::new(&x.prep), Branch::then(&x.prep, phase, &string)))?;
                total += 2.0 * th.coefficient * th2.coefficient * v;
            }
        }
        Ok(total)
    }

    fn ax_z(&mut self, x: &Ket, z: &Ket) -> Result<f64> {
        let one = Complex64::new(1.0, 0.0);
        let mut total = 0.0;
        for t in self.block.terms() {
            total += t.coefficient * self.estimate(HadamardTest::new(Branch::then(&x.prep, one, &t.string), Branch::new(&z.prep)))?;
        }
        Ok(total)
    }

    fn zz(&mut self, a: &Ket, b: &Ket) -> Result<f64> {
        self.estimate(HadamardTest::new(Branch::new(&a.prep), Branch::new(&b.prep)))
    }

    fn b_ax(&mut self, x: &Ket) -> Result<f64> {
        let one = Complex64::new(1.0, 0.0);
        let mut total = 0.0;
        let b_prep = self.b_prep;
        for t in self.block.terms() {
            total += t.coefficient * self.estimate(HadamardTest::new(Branch::new(b_prep), Branch::then(&x.prep, one, &t.string)))?;
        }
        Ok(total)
    }

    fn b_z(&mut self, z: &Ket) -> Result<f64> {
        let b_prep = self.b_prep;
        self.estimate(HadamardTest::new(Branch::new(b_prep), Branch::new(&z.prep)))
    }
}

fn source<'a>(block: &'a LcuOperator, b_prep: &'a StatePrep, config: &AnsatzConfig, mode: EstimatorMode) -> Result<Box<dyn OverlapSource + 'a>> {
    mode.validate()?;
    for found in [block.num_qubits(), b_prep.num_qubits()] {
        if found != config.num_qubits {
            return Err(Error::DimensionMismatch { expected: config.num_qubits, found });
        }
    }
    Ok(match mode {
        EstimatorMode::Exact => Box::new(ExactSource { block, b_state: b_prep.state(), config: *config }),
        EstimatorMode::Shots { shots, seed } => Box::new(ShotSource { block, b_prep, config: *config, shots, seed, counter: 0 }),
    })
}

/// `⟨x|A†A|x⟩`.
pub fn overlap_aa(block: &LcuOperator, config: &AnsatzConfig, x_angles: &[f64], mode: EstimatorMode) -> Result<f64> {
    let b = StatePrep::Circuit(crate::circuit::Circuit::empty(config.num_qubits)?);
    let mut src = source(block, &b, config, mode)?;
    let x = src.x_ket(x_angles)?;
    src.aa(&x)
}

/// `Re⟨x|A†|z⟩`.
pub fn overlap_ax_z(block: &LcuOperator, config: &AnsatzConfig, x_angles: &[f64], z_angles: &[f64], mode: EstimatorMode) -> Result<f64> {
    let b = StatePrep::Circuit(crate::circuit::Circuit::empty(config.num_qubits)?);
    let mut src = source(block, &b, config, mode)?;
    let x = src.x_ket(x_angles)?;
    let z = src.z_ket(z_angles)?;
    src.ax_z(&x, &z)
}

/// `⟨z|z'⟩`.
pub fn overlap_zz(config: &AnsatzConfig, z_angles: &[f64], other_angles: &[f64], mode: EstimatorMode) -> Result<f64> {
    let block = LcuOperator::zero(config.num_qubits);
    let b = StatePrep::Circuit(crate::circuit::Circuit::empty(config.num_qubits)?);
    let mut src = source(&block, &b, config, mode)?;
    let a = src.z_ket(z_angles)?;
    let c = src.z_ket(other_angles)?;
    src.zz(&a, &c)
}

/// `Re⟨b|A|x⟩`.
pub fn overlap_b_ax(b_prep: &StatePrep, block: &LcuOperator, config: &AnsatzConfig, x_angles: &[f64], mode: EstimatorMode) -> Result<f64> {
    let mut src = source(block, b_prep, config, mode)?;
    let x = src.x_ket(x_angles)?;
    src.b_ax(&x)
}

/// `⟨b|z⟩`.
pub fn overlap_b_z(b_prep: &StatePrep, config: &AnsatzConfig, z_angles: &[f64], mode: EstimatorMode) -> Result<f64> {
    let block = LcuOperator::zero(config.num_qubits);
    let mut src = source(&block, b_prep, config, mode)?;
    let z = src.z_ket(z_angles)?;
    src.b_z(&z)
}

/// Everything agent `(i, j)` needs to evaluate
/// `C_ij = ‖ρ A|x⟩ − b − Σ_{k∈N} (σ_j|z_j⟩ − σ_k|z_k⟩)‖²`.
#[derive(Debug, Clone)]
pub struct LocalCostInputs<'a> {
    pub block: &'a LcuOperator,
    pub b_prep: &'a StatePrep,
    pub b_norm: f64,
    pub ansatz: AnsatzConfig,
    /// Column index `j` of the evaluating agent within its block row.
    pub own_index: usize,
    pub own_x: AugmentedParams,
    /// Row-neighbor `z` parameters keyed by column index, self included.
    pub neighbor_z: BTreeMap<usize, AugmentedParams>,
}

impl LocalCostInputs<'_> {
    pub fn own_z(&self) -> Option<&AugmentedParams> {
        self.neighbor_z.get(&self.own_index)
    }

    fn validate(&self) -> Result<()> {
        if self.own_z().is_none() {
            return Err(Error::InvalidConfig("row-neighbor set must contain the agent itself".into()));
        }
        let p = self.ansatz.num_params();
        for params in core::iter::once(&self.own_x).chain(self.neighbor_z.values()) {
            if params.angles.len() != p {
                return Err(Error::ParameterCount { expected: p, found: params.angles.len() });
            }
        }
        if !(self.b_norm >= 0.0) {
            return Err(Error::InvalidConfig("b norm must be nonnegative".into()));
        }
        Ok(())
    }

    /// Coefficients `c_k` with `Σ_k (σ_j z_j − σ_k z_k) = Σ_k c_k z_k`, in
    /// neighbor order, plus `∂c_k/∂σ_k`.
    fn z_coefficients(&self) -> Vec<(f64, f64)> {
        let d = self.neighbor_z.len() as f64;
        self.neighbor_z
            .iter()
            .map(|(&k, p)| if k == self.own_index { ((d - 1.0) * p.norm_scale, d - 1.0) } else { (-p.norm_scale, -1.0) })
            .collect()
    }
}

/// Gradient of one local cost.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalGradient {
    /// `∂C/∂α` per angle, then `∂C/∂ρ`.
    pub alpha_tilde: Vec<f64>,
    /// Per row-neighbor `k`: `∂C/∂β_k` per angle, then `∂C/∂σ_k`.
    pub beta_tilde: BTreeMap<usize, Vec<f64>>,
}

impl LocalGradient {
    pub fn component_count(&self) -> usize {
        self.alpha_tilde.len() + self.beta_tilde.values().map(Vec::len).sum::<usize>()
    }

    /// All components in `[α̃, β̃_k for k ascending]` order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = self.alpha_tilde.clone();
        for g in self.beta_tilde.values() {
            v.extend_from_slice(g);
        }
        v
    }
}

pub fn local_cost(inputs: &LocalCostInputs<'_>, mode: EstimatorMode) -> Result<f64> {
    inputs.validate()?;
    let mut src = source(inputs.block, inputs.b_prep, &inputs.ansatz, mode)?;
    cost_from(src.as_mut(), inputs)
}

fn cost_from(src: &mut dyn OverlapSource, inputs: &LocalCostInputs<'_>) -> Result<f64> {
    let coeffs = inputs.z_coefficients();
    let rho = inputs.own_x.norm_scale;
    let b_norm = inputs.b_norm;
    let x = src.x_ket(&inputs.own_x.angles)?;
    let zs = inputs.neighbor_z.values().map(|p| src.z_ket(&p.angles)).collect::<Result<Vec<_>>>()?;

    let mut ss = rho * rho * src.aa(&x)?;
    for (z, &(c, _)) in zs.iter().zip(&coeffs) {
        ss -= 2.0 * rho * c * src.ax_z(&x, z)?;
    }
    for a in 0..zs.len() {
        for b in a..zs.len() {
            let weight = if a == b { 1.0 } else { 2.0 };
            ss += weight * coeffs[a].0 * coeffs[b].0 * src.zz(&zs[a], &zs[b])?;
        }
    }
    let mut bs = 0.0;
    if b_norm > 0.0 {
        bs = rho * src.b_ax(&x)?;
        for (z, &(c, _)) in zs.iter().zip(&coeffs) {
            bs -= c * src.b_z(z)?;
        }
    }
    Ok(ss + b_norm * b_norm - 2.0 * b_norm * bs)
}

pub fn grad_cost(inputs: &LocalCostInputs<'_>, mode: EstimatorMode) -> Result<LocalGradient> {
    inputs.validate()?;
    let mut src = source(inputs.block, inputs.b_prep, &inputs.ansatz, mode)?;
    gradient_from(src.as_mut(), inputs)
}

fn gradient_from(src: &mut dyn OverlapSource, inputs: &LocalCostInputs<'_>) -> Result<LocalGradient> {
    let shift_linear = 1.0 / (2.0 * SQRT_2);
    let cfg = &inputs.ansatz;
    let coeffs = inputs.z_coefficients();
    let rho = inputs.own_x.norm_scale;
    let b_norm = inputs.b_norm;
    let has_b = b_norm > 0.0;
    let alpha = &inputs.own_x.angles;

    let x = src.x_ket(alpha)?;
    let neighbors: Vec<(&usize, &AugmentedParams)> = inputs.neighbor_z.iter().collect();
    let zs = neighbors.iter().map(|(_, p)| src.z_ket(&p.angles)).collect::<Result<Vec<_>>>()?;
    let d = zs.len();

    let aa0 = src.aa(&x)?;
    let axz0 = zs.iter().map(|z| src.ax_z(&x, z)).collect::<Result<Vec<_>>>()?;
    let bax0 = if has_b { src.b_ax(&x)? } else { 0.0 };
    let bz0 = if has_b { zs.iter().map(|z| src.b_z(z)).collect::<Result<Vec<_>>>()? } else { alloc::vec![0.0; d] };
    let mut zz0 = alloc::vec![alloc::vec![0.0; d]; d];
    for a in 0..d {
        for b in a..d {
            let v = src.zz(&zs[a], &zs[b])?;
            zz0[a][b] = v;
            zz0[b][a] = v;
        }
    }

    let mut alpha_tilde = Vec::with_capacity(alpha.len() + 1);
    for h in 0..alpha.len() {
        let xp = src.x_ket(&cfg.shifted_angles(alpha, h, 1.0)?)?;
        let xm = src.x_ket(&cfg.shifted_angles(alpha, h, -1.0)?)?;
        let mut g = rho * rho * (src.aa(&xp)? - src.aa(&xm)?) / 2.0;
        for (z, &(c, _)) in zs.iter().zip(&coeffs) {
            if c != 0.0 {
                g -= 2.0 * rho * c * (src.ax_z(&xp, z)? - src.ax_z(&xm, z)?) * shift_linear;
            }
        }
        if has_b {
            g -= 2.0 * b_norm * rho * (src.b_ax(&xp)? - src.b_ax(&xm)?) * shift_linear;
        }
        alpha_tilde.push(g);
    }
    let mut d_rho = 2.0 * rho * aa0 - 2.0 * b_norm * bax0;
    for (&(c, _), v) in coeffs.iter().zip(&axz0) {
        d_rho -= 2.0 * c * v;
    }
    alpha_tilde.push(d_rho);

    let mut beta_tilde = BTreeMap::new();
    for (a, (&k, params)) in neighbors.iter().enumerate() {
        let (c, dc) = coeffs[a];
        let mut g = Vec::with_capacity(params.angles.len() + 1);
        for h in 0..params.angles.len() {
            if c == 0.0 {
                g.push(0.0);
                continue;
            }
            let zp = src.z_ket(&cfg.shifted_angles(&params.angles, h, 1.0)?)?;
            let zm = src.z_ket(&cfg.shifted_angles(&params.angles, h, -1.0)?)?;
            let mut v = -2.0 * rho * c * (src.ax_z(&x, &zp)? - src.ax_z(&x, &zm)?) * shift_linear;
            for b in (0..d).filter(|&b| b != a) {
                if coeffs[b].0 != 0.0 {
                    v += 2.0 * c * coeffs[b].0 * (src.zz(&zp, &zs[b])? - src.zz(&zm, &zs[b])?) * shift_linear;
                }
            }
            if has_b {
                v += 2.0 * b_norm * c * (src.b_z(&zp)? - src.b_z(&zm)?) * shift_linear;
            }
            g.push(v);
        }
        let mut inner = -2.0 * rho * axz0[a] + 2.0 * b_norm * bz0[a];
        for b in 0..d {
            inner += 2.0 * coeffs[b].0 * zz0[a][b];
        }
        g.push(dc * inner);
        beta_tilde.insert(k, g);
    }

    Ok(LocalGradient { alpha_tilde, beta_tilde })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Circuit, Gate};
    use crate::pauli::{Pauli, PauliTerm};
    use alloc::vec;
    use proptest::prelude::*;
    use rand::Rng;

    fn lcu(text: &str) -> LcuOperator {
        LcuOperator::parse(text).unwrap()
    }

    fn zero_prep(q: usize) -> StatePrep {
        StatePrep::Circuit(Circuit::empty(q).unwrap())
    }

    fn random_lcu(rng: &mut ChaCha8Rng, q: usize, terms: usize) -> LcuOperator {
        let letters = [Pauli::I, Pauli::X, Pauli::Z];
        let terms = (0..terms)
            .map(|_| {
                let s = PauliString::new((0..q).map(|_| letters[rng.random_range(0..3)]).collect());
                PauliTerm::new(rng.random_range(-1.0..1.0), s)
            })
            .collect();
        LcuOperator::new(q, terms).unwrap()
    }

    fn random_params(rng: &mut ChaCha8Rng, p: usize) -> AugmentedParams {
        AugmentedParams::new((0..p).map(|_| rng.random_range(-3.0..3.0)).collect(), rng.random_range(0.3..1.7)).unwrap()
    }

    struct Instance {
        block: LcuOperator,
        b_prep: StatePrep,
        b_norm: f64,
        ansatz: AnsatzConfig,
        own: usize,
        x: AugmentedParams,
        z: BTreeMap<usize, AugmentedParams>,
    }

    impl Instance {
        fn random(seed: u64, q: usize) -> Self {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ansatz = AnsatzConfig::new(q, 2, rng.random_bool(0.5)).unwrap();
            let p = ansatz.num_params();
            let block = random_lcu(&mut rng, q, 3);
            let b_prep = StatePrep::Circuit(ansatz.circuit(&random_params(&mut rng, p).angles).unwrap());
            let degree = rng.random_range(1..4usize);
            let own = rng.random_range(0..degree);
            let z = (0..degree).map(|k| (k, random_params(&mut rng, p))).collect();
            Self { block, b_prep, b_norm: rng.random_range(0.0..1.5), ansatz, own, x: random_params(&mut rng, p), z }
        }

        fn inputs(&self) -> LocalCostInputs<'_> {
            LocalCostInputs {
                block: &self.block,
                b_prep: &self.b_prep,
                b_norm: self.b_norm,
                ansatz: self.ansatz,
                own_index: self.own,
                own_x: self.x.clone(),
                neighbor_z: self.z.clone(),
            }
        }
    }

    /// ‖ρ A|x⟩ − ‖b‖|b⟩ − Σ_k (σ_j|z_j⟩ − σ_k|z_k⟩)‖² by plain vector arithmetic.
    fn classical_cost(inputs: &LocalCostInputs<'_>) -> f64 {
        let cfg = &inputs.ansatz;
        let a = inputs.block.to_dense().unwrap();
        let x = cfg.prepare_state(&inputs.own_x.angles).unwrap().real_parts();
        let b = inputs.b_prep.state().real_parts();
        let own = inputs.own_z().unwrap();
        let zj = cfg.prepare_state(&own.angles).unwrap().real_parts();
        let mut s: Vec<f64> = (0..x.len())
            .map(|r| inputs.own_x.norm_scale * (0..x.len()).map(|c| a[(r, c)] * x[c]).sum::<f64>() - inputs.b_norm * b[r])
            .collect();
        for p in inputs.neighbor_z.values() {
            let zk = cfg.prepare_state(&p.angles).unwrap().real_parts();
            for r in 0..s.len() {
                s[r] -= own.norm_scale * zj[r] - p.norm_scale * zk[r];
            }
        }
        s.iter().map(|v| v * v).sum()
    }

    fn finite_difference(inst: &Instance) -> LocalGradient {
        let h = 1e-5;
        let cost = |x: &AugmentedParams, z: &BTreeMap<usize, AugmentedParams>| {
            let mut i = inst.inputs();
            i.own_x = x.clone();
            i.neighbor_z = z.clone();
            local_cost(&i, EstimatorMode::Exact).unwrap()
        };
        let diff = |v: &[f64], k: usize, f: &dyn Fn(&[f64]) -> f64| {
            let (mut p, mut m) = (v.to_vec(), v.to_vec());
            p[k] += h;
            m[k] -= h;
            (f(&p) - f(&m)) / (2.0 * h)
        };
        let xv = inst.x.to_vec();
        let alpha_tilde = (0..xv.len()).map(|k| diff(&xv, k, &|v| cost(&AugmentedParams::from_slice(v), &inst.z))).collect();
        let mut beta_tilde = BTreeMap::new();
        for (&n, params) in &inst.z {
            let zv = params.to_vec();
            let g = (0..zv.len())
                .map(|k| {
                    diff(&zv, k, &|v| {
                        let mut z = inst.z.clone();
                        z.insert(n, AugmentedParams::from_slice(v));
                        cost(&inst.x, &z)
                    })
                })
                .collect();
            beta_tilde.insert(n, g);
        }
        LocalGradient { alpha_tilde, beta_tilde }
    }

    #[test]
    fn hadamard_test_examples() {
        let empty = zero_prep(1);
        let z = PauliString::single(1, 0, Pauli::Z);
        let one = Complex64::new(1.0, 0.0);
        let id = HadamardTest::new(Branch::new(&empty), Branch::new(&empty));
        assert_eq!(id.sample(1000, 3).unwrap(), 1.0);
        let zt = HadamardTest::new(Branch::new(&empty), Branch::then(&empty, one, &z));
        assert_eq!(zt.sample(1000, 3).unwrap(), 1.0);
        let h = StatePrep::Circuit(Circuit::new(1, vec![Gate::H(0)]).unwrap());
        let ht = HadamardTest::new(Branch::new(&empty), Branch::new(&h));
        assert!((ht.exact_value().unwrap() - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
        let v = hadamard_sample(&ht, 100_000, 11).unwrap();
        assert!((v - core::f64::consts::FRAC_1_SQRT_2).abs() < 3.0 / 100_000f64.sqrt());
        assert!(ht.sample(0, 1).is_err());
    }

    #[test]
    fn phased_branch_reaches_real_part_only() {
        // A complex-phased branch still yields the real part of the dense overlap.
        let plus = StatePrep::Circuit(Circuit::new(1, vec![Gate::Ry(0, 0.9)]).unwrap());
        let y = PauliString::single(1, 0, Pauli::Y);
        let t = HadamardTest::new(Branch::new(&plus), Branch::then(&plus, Complex64::new(0.0, 1.0), &y));
        let s = plus.state();
        let mut w = s.clone();
        w.apply_pauli_string(&y, Complex64::new(0.0, 1.0)).unwrap();
        assert!((t.exact_value().unwrap() - s.inner_product(&w).unwrap().re).abs() < 1e-14);
    }

    #[test]
    fn overlap_examples() {
        let c1 = AnsatzConfig::new(1, 1, false).unwrap();
        let ex = EstimatorMode::Exact;
        assert!((overlap_aa(&lcu("1 I"), &c1, &[0.4], ex).unwrap() - 1.0).abs() < 1e-14);
        assert!((overlap_aa(&lcu("2 Z"), &c1, &[0.0], ex).unwrap() - 4.0).abs() < 1e-14);
        assert!((overlap_ax_z(&lcu("1 I"), &c1, &[0.4], &[0.4], ex).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(overlap_ax_z(&LcuOperator::zero(1), &c1, &[0.4], &[0.1], ex).unwrap(), 0.0);
        assert!((overlap_zz(&c1, &[0.7], &[0.7], ex).unwrap() - 1.0).abs() < 1e-14);
        assert!(overlap_zz(&c1, &[0.0], &[core::f64::consts::PI], ex).unwrap().abs() < 1e-15);
        let b = zero_prep(1);
        assert!((overlap_b_ax(&b, &lcu("1 Z"), &c1, &[0.0], ex).unwrap() - 1.0).abs() < 1e-14);
        let xprep = StatePrep::Circuit(c1.circuit(&[1.1]).unwrap());
        assert!((overlap_b_ax(&xprep, &lcu("1 I"), &c1, &[1.1], ex).unwrap() - 1.0).abs() < 1e-14);
        assert!((overlap_b_z(&b, &c1, &[0.0], ex).unwrap() - 1.0).abs() < 1e-14);
        assert!(overlap_b_z(&b, &c1, &[core::f64::consts::PI], ex).unwrap().abs() < 1e-15);

        let c2 = AnsatzConfig::new(2, 1, false).unwrap();
        assert!(matches!(overlap_aa(&lcu("1 I"), &c2, &[0.0, 0.0], ex), Err(Error::DimensionMismatch { .. })));
        assert!(overlap_aa(&lcu("1 I"), &c1, &[0.0], EstimatorMode::Shots { shots: 0, seed: 0 }).is_err());
    }

    #[test]
    fn exact_overlaps_match_dense_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cfg = AnsatzConfig::new(3, 2, true).unwrap();
        let block = random_lcu(&mut rng, 3, 4);
        let a = block.to_dense().unwrap();
        let x = random_params(&mut rng, 6).angles;
        let z = random_params(&mut rng, 6).angles;
        let bp = StatePrep::Circuit(cfg.circuit(&random_params(&mut rng, 6).angles).unwrap());
        let xv = nalgebra::DVector::from_vec(cfg.prepare_state(&x).unwrap().real_parts());
        let zv = nalgebra::DVector::from_vec(cfg.prepare_state(&z).unwrap().real_parts());
        let bv = nalgebra::DVector::from_vec(bp.state().real_parts());
        let ax = &a * &xv;
        let ex = EstimatorMode::Exact;
        assert!((overlap_aa(&block, &cfg, &x, ex).unwrap() - ax.norm_squared()).abs() < 1e-12);
        assert!((overlap_ax_z(&block, &cfg, &x, &z, ex).unwrap() - ax.dot(&zv)).abs() < 1e-12);
        assert!((overlap_zz(&cfg, &x, &z, ex).unwrap() - xv.dot(&zv)).abs() < 1e-12);
        assert!((overlap_b_ax(&bp, &block, &cfg, &x, ex).unwrap() - bv.dot(&ax)).abs() < 1e-12);
        assert!((overlap_b_z(&bp, &cfg, &z, ex).unwrap() - bv.dot(&zv)).abs() < 1e-12);
    }

    #[test]
    fn shot_overlaps_concentrate() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cfg = AnsatzConfig::new(2, 2, false).unwrap();
        let block = random_lcu(&mut rng, 2, 3);
        let x = random_params(&mut rng, 4).angles;
        let z = random_params(&mut rng, 4).angles;
        let bp = StatePrep::Circuit(Circuit::hadamard_layer(2).unwrap());
        let shots = EstimatorMode::Shots { shots: 200_000, seed: 4 };
        let l1: f64 = block.terms().iter().map(|t| t.coefficient.abs()).sum();
        let tol = 5.0 * l1 * l1 / 200_000f64.sqrt();
        let pairs = [
            (overlap_aa(&block, &cfg, &x, shots).unwrap(), overlap_aa(&block, &cfg, &x, EstimatorMode::Exact).unwrap()),
            (overlap_ax_z(&block, &cfg, &x, &z, shots).unwrap(), overlap_ax_z(&block, &cfg, &x, &z, EstimatorMode::Exact).unwrap()),
            (overlap_zz(&cfg, &x, &z, shots).unwrap(), overlap_zz(&cfg, &x, &z, EstimatorMode::Exact).unwrap()),
            (overlap_b_ax(&bp, &block, &cfg, &x, shots).unwrap(), overlap_b_ax(&bp, &block, &cfg, &x, EstimatorMode::Exact).unwrap()),
            (overlap_b_z(&bp, &cfg, &z, shots).unwrap(), overlap_b_z(&bp, &cfg, &z, EstimatorMode::Exact).unwrap()),
        ];
        for (s, e) in pairs {
            assert!((s - e).abs() < tol, "{s} vs {e}");
        }
    }

    #[test]
    fn zero_cost_configuration() {
        let cfg = AnsatzConfig::new(1, 1, false).unwrap();
        let block = lcu("1 I");
        let b = zero_prep(1);
        let same = AugmentedParams::new(vec![0.0], 1.0).unwrap();
        let mut z = BTreeMap::new();
        z.insert(0, same.clone());
        z.insert(1, same.clone());
        let inputs = LocalCostInputs { block: &block, b_prep: &b, b_norm: 1.0, ansatz: cfg, own_index: 0, own_x: same.clone(), neighbor_z: z };
        assert!(local_cost(&inputs, EstimatorMode::Exact).unwrap().abs() < 1e-14);
        let g = grad_cost(&inputs, EstimatorMode::Exact).unwrap();
        assert!(g.flatten().iter().all(|v| v.abs() < 1e-8));
        assert_eq!(g.component_count(), 1 + 1 + 2 * (1 + 1));
    }

    #[test]
    fn identical_neighbors_remove_sigma_dependence() {
        let inst = Instance::random(1, 2);
        let mut a = inst.inputs();
        let mut b = inst.inputs();
        for (scale, inputs) in [(0.5, &mut a), (1.5, &mut b)] {
            let p = AugmentedParams::new(inputs.neighbor_z[&inputs.own_index].angles.clone(), scale).unwrap();
            for v in inputs.neighbor_z.values_mut() {
                *v = p.clone();
            }
        }
        let ca = local_cost(&a, EstimatorMode::Exact).unwrap();
        let cb = local_cost(&b, EstimatorMode::Exact).unwrap();
        assert!((ca - cb).abs() < 1e-12);
    }

    #[test]
    fn empty_block_leaves_rho_free() {
        let mut inst = Instance::random(2, 2);
        inst.block = LcuOperator::zero(2);
        let g = grad_cost(&inst.inputs(), EstimatorMode::Exact).unwrap();
        assert!(g.alpha_tilde.last().unwrap().abs() < 1e-14);
    }

    #[test]
    fn missing_self_is_rejected() {
        let inst = Instance::random(3, 2);
        let mut inputs = inst.inputs();
        inputs.own_index = 7;
        assert!(matches!(local_cost(&inputs, EstimatorMode::Exact), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn shots_cost_tracks_exact_cost() {
        let inst = Instance::random(4, 2);
        let exact = local_cost(&inst.inputs(), EstimatorMode::Exact).unwrap();
        let shots = local_cost(&inst.inputs(), EstimatorMode::Shots { shots: 1_000_000, seed: 2 }).unwrap();
        assert!((exact - shots).abs() < 0.1 * (1.0 + exact), "{exact} vs {shots}");
    }

    #[test]
    fn shots_are_reproducible() {
        let inst = Instance::random(6, 2);
        let mode = EstimatorMode::Shots { shots: 500, seed: 77 };
        assert_eq!(grad_cost(&inst.inputs(), mode).unwrap(), grad_cost(&inst.inputs(), mode).unwrap());
        assert_ne!(mode.reseeded(&[1]), mode.reseeded(&[2]));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn exact_cost_matches_vector_oracle(seed in any::<u64>(), q in 1usize..4) {
            let inst = Instance::random(seed, q);
            let inputs = inst.inputs();
            let c = local_cost(&inputs, EstimatorMode::Exact).unwrap();
            prop_assert!(c >= -1e-12);
            prop_assert!((c - classical_cost(&inputs)).abs() < 1e-10);
        }

        #[test]
        fn shift_gradients_match_finite_differences(seed in any::<u64>()) {
            let inst = Instance::random(seed, 2);
            let g = grad_cost(&inst.inputs(), EstimatorMode::Exact).unwrap();
            let fd = finite_difference(&inst);
            prop_assert_eq!(g.component_count(), 1 + inst.ansatz.num_params() + inst.z.len() * (1 + inst.ansatz.num_params()));
            for (a, b) in g.flatten().iter().zip(fd.flatten()) {
                prop_assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0), "{} vs {}", a, b);
            }
        }
    }
}
