//! Generator and Discriminator cost functions.
//!
//! With known states `s_0 … s_n`, generated state `ρ_g = G(θ)|0⟩⟨0|G(θ)†`
//! and `P0(ρ) = Tr[P_0 D(φ)(ρ ⊗ |0⟩⟨0|)D(φ)†]` the ancilla-zero probability
//! of the Discriminator:
//!
//! ```text
//! C_gen(θ)  = ⟨0|G(θ)† H G(θ)|0⟩ + γ · P0(ρ_g)
//! C_disc(φ) = P0(ρ_g) − Σ_i P0(ρ_{s_i})
//! ```
//!
//! Both are blocks of one joint value function, so alternating minimization
//! decreases it monotonically in exact mode. The generated state ends at the
//! next eigenstate when `γ` exceeds the gap to it.

use serde::{Deserialize, Serialize};

use crate::ansatz::{build_discriminator, build_generator, AnsatzSpec};
use crate::mitigation::{
    marginal_zero_probability, mitigate, ConfusionMatrix, MitigationOptions, ReadoutNoise,
};
use crate::optim::OptimizerConfig;
use crate::oracle::{amplitudes_in_eigenbasis, exact_spectrum, Spectrum};
use crate::pauli::{PauliSum, Readout};
use crate::seed;
use crate::simulator::{Circuit, StateVector};
use crate::{Error, Result};

/// How cost terms are estimated.
#[derive(Clone, Debug)]
pub enum EvaluationMode {
    /// Exact expectation values from the statevector.
    Exact,
    /// Finite-shot estimates through an optional readout channel.
    Sampled(Sampler),
}

/// Shot-based estimation settings.
#[derive(Clone, Debug)]
pub struct Sampler {
    /// Shots per Pauli term and per ancilla readout.
    pub shots: usize,
    pub noise: Option<ReadoutNoise>,
    /// Confusion matrices keyed by register size (system, system + ancilla).
    pub calibrations: Vec<ConfusionMatrix>,
    pub mitigation: MitigationOptions,
}

impl Sampler {
    pub fn new(shots: usize) -> Self {
        Self {
            shots,
            noise: None,
            calibrations: Vec::new(),
            mitigation: MitigationOptions::default(),
        }
    }

    pub fn with_noise(mut self, noise: ReadoutNoise) -> Self {
        self.noise = Some(noise);
        self
    }

    pub fn with_calibration(mut self, m: ConfusionMatrix) -> Self {
        self.calibrations
            .retain(|c| c.qubit_count() != m.qubit_count());
        self.calibrations.push(m);
        self
    }

    pub fn with_shots(&self, shots: usize) -> Self {
        Self {
            shots,
            ..self.clone()
        }
    }

    fn readout(&self, qubit_count: usize) -> Readout<'_> {
        Readout {
            noise: self.noise.as_ref(),
            mitigation: self
                .calibrations
                .iter()
                .find(|c| c.qubit_count() == qubit_count)
                .map(|c| (c, self.mitigation)),
        }
    }
}

impl EvaluationMode {
    pub fn is_exact(&self) -> bool {
        matches!(self, EvaluationMode::Exact)
    }

    /// `⟨ψ|H|ψ⟩`, exact or estimated.
    pub fn energy(&self, h: &PauliSum, state: &StateVector, seed: u64) -> Result<f64> {
        match self {
            EvaluationMode::Exact => h.expectation(state),
            EvaluationMode::Sampled(s) => Ok(h
                .expectation_sampled(state, s.shots, s.readout(state.qubit_count()), seed)?
                .value),
        }
    }

    /// Ancilla-zero probability of `disc(params)` applied to `input ⊗ |0⟩`.
    /// Sampled mode reads out the whole register and marginalizes the
    /// (optionally mitigated) histogram onto the ancilla.
    pub fn acceptance(
        &self,
        disc: &Circuit,
        params: &[f64],
        input: &StateVector,
        seed: u64,
    ) -> Result<f64> {
        match self {
            EvaluationMode::Exact => disc.ancilla_zero_probability(params, input),
            EvaluationMode::Sampled(s) => {
                let mut state = input.with_ancilla();
                disc.apply(params, &mut state)?;
                let n = state.qubit_count();
                let readout = s.readout(n);
                let hist = state.sample(s.shots, readout.noise, seed)?;
                let weights: Vec<f64> = match readout.mitigation {
                    Some((m, options)) => mitigate(&hist, m, options)?,
                    None => hist.counts().iter().map(|&c| c as f64).collect(),
                };
                Ok(marginal_zero_probability(&weights, n, n - 1))
            }
        }
    }
}

/// One converged rung of the excitation ladder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderLevel {
    pub theta: Vec<f64>,
    pub energy: f64,
    pub generator: AnsatzSpec,
}

/// Converged Generator parameters for eigenstates `s_0 … s_n`.
#[derive(Clone, Debug)]
pub struct Ladder {
    pub hamiltonian: PauliSum,
    pub levels: Vec<LadderLevel>,
}

impl Ladder {
    pub fn new(hamiltonian: PauliSum) -> Self {
        Self {
            hamiltonian,
            levels: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy).collect()
    }

    /// Statevectors of every known level.
    pub fn known_states(&self) -> Result<Vec<StateVector>> {
        self.levels
            .iter()
            .map(|l| build_generator(&l.generator)?.run(&l.theta))
            .collect()
    }

    /// Indices `i` where `E_{i+1} < E_i − tol`.
    pub fn monotonicity_violations(&self, tol: f64) -> Vec<usize> {
        self.levels
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1].energy < w[0].energy - tol)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Presentation weights of the known and generated states; equal by
/// construction. Only used to scale diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixingRule {
    pub known_states: usize,
}

impl MixingRule {
    /// `p(g) = p(s_i) = 1 / (n + 1)` for `n + 1` known states.
    pub fn weight(&self) -> f64 {
        1.0 / self.known_states as f64
    }
}

/// Convergence diagnostics of the Discriminator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorDiagnostics {
    /// Presentation weight times the ancilla-zero probability of each known
    /// state.
    #[serde(rename = "K")]
    pub k_known: Vec<f64>,
    /// `|k_i|` for every eigenstate `i` of the Hamiltonian: the magnitude of
    /// the cross terms between `α_i |s_i⟩` and the rest of the generated
    /// state after the Discriminator.
    pub k_cross: Vec<f64>,
    /// `|α_i|²` of the generated state.
    pub alpha: Vec<f64>,
}

/// The pair of costs for one excitation level.
#[derive(Clone, Debug)]
pub struct ExcitedObjective<'a> {
    hamiltonian: &'a PauliSum,
    generator: Circuit,
    discriminator: Circuit,
    known: Vec<StateVector>,
    gamma: f64,
}

impl<'a> ExcitedObjective<'a> {
    /// Builds circuits from specs and prepares every known state of `ladder`.
    pub fn new(
        ladder: &'a Ladder,
        generator: &AnsatzSpec,
        discriminator: &AnsatzSpec,
        gamma: f64,
    ) -> Result<Self> {
        Self::from_parts(
            &ladder.hamiltonian,
            build_generator(generator)?,
            build_discriminator(discriminator)?,
            ladder.known_states()?,
            gamma,
        )
    }

    pub fn from_parts(
        hamiltonian: &'a PauliSum,
        generator: Circuit,
        discriminator: Circuit,
        known: Vec<StateVector>,
        gamma: f64,
    ) -> Result<Self> {
        let n = hamiltonian.qubit_count();
        if generator.qubit_count() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: generator.qubit_count(),
            });
        }
        if discriminator.qubit_count() != n + 1 {
            return Err(Error::DimensionMismatch {
                expected: n + 1,
                actual: discriminator.qubit_count(),
            });
        }
        if let Some(s) = known.iter().find(|s| s.qubit_count() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: s.qubit_count(),
            });
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidValue(format!(
                "γ = {gamma} must be finite and non-negative"
            )));
        }
        Ok(Self {
            hamiltonian,
            generator,
            discriminator,
            known,
            gamma,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn generator(&self) -> &Circuit {
        &self.generator
    }

    pub fn discriminator(&self) -> &Circuit {
        &self.discriminator
    }

    pub fn known_states(&self) -> &[StateVector] {
        &self.known
    }

    pub fn hamiltonian(&self) -> &'a PauliSum {
        self.hamiltonian
    }

    pub fn generated_state(&self, theta: &[f64]) -> Result<StateVector> {
        self.generator.run(theta)
    }

    /// Energy of the generated state.
    pub fn energy(&self, theta: &[f64], mode: &EvaluationMode, seed: u64) -> Result<f64> {
        mode.energy(self.hamiltonian, &self.generator.run(theta)?, seed)
    }

    /// `P0(ρ)` for an arbitrary system state.
    pub fn acceptance(
        &self,
        phi: &[f64],
        input: &StateVector,
        mode: &EvaluationMode,
        seed: u64,
    ) -> Result<f64> {
        mode.acceptance(&self.discriminator, phi, input, seed)
    }

    /// `C_gen(θ)` for a fixed Discriminator.
    pub fn c_gen(
        &self,
        theta: &[f64],
        phi: &[f64],
        mode: &EvaluationMode,
        seed: u64,
    ) -> Result<f64> {
        let g = self.generator.run(theta)?;
        let energy = mode.energy(self.hamiltonian, &g, seed::derive(seed, &[0]))?;
        if self.gamma == 0.0 {
            return Ok(energy);
        }
        let p0 = self.acceptance(phi, &g, mode, seed::derive(seed, &[1]))?;
        Ok(energy + self.gamma * p0)
    }

    /// `C_disc(φ)` for a fixed Generator.
    pub fn c_disc(
        &self,
        phi: &[f64],
        theta_g: &[f64],
        mode: &EvaluationMode,
        seed: u64,
    ) -> Result<f64> {
        self.c_disc_for_state(phi, &self.generator.run(theta_g)?, mode, seed)
    }

    /// `C_disc(φ)` with the generated state already prepared.
    pub fn c_disc_for_state(
        &self,
        phi: &[f64],
        generated: &StateVector,
        mode: &EvaluationMode,
        seed: u64,
    ) -> Result<f64> {
        if self.known.is_empty() {
            return Err(Error::EmptyLadder);
        }
        let mut value = self.acceptance(phi, generated, mode, seed::derive(seed, &[1]))?;
        for (i, s) in self.known.iter().enumerate() {
            value -= self.acceptance(phi, s, mode, seed::derive(seed, &[2 + i as u64]))?;
        }
        Ok(value)
    }

    /// Smallest `C_disc` any Discriminator unitary reaches for `generated`:
    /// the sum of the negative eigenvalues of `|g⟩⟨g| − Σ_i |s_i⟩⟨s_i|`.
    /// It is `−n` for orthogonal states and rises with their overlap.
    pub fn c_disc_floor(&self, generated: &StateVector) -> Result<f64> {
        if self.known.is_empty() {
            return Err(Error::EmptyLadder);
        }
        let d = generated.dimension();
        let mut rho = nalgebra::DMatrix::<num_complex::Complex64>::zeros(d, d);
        let mut add = |v: &StateVector, w: f64| {
            let a = v.amplitudes();
            for j in 0..d {
                for i in 0..d {
                    rho[(i, j)] += a[i] * a[j].conj() * w;
                }
            }
        };
        add(generated, 1.0);
        for s in &self.known {
            add(s, -1.0);
        }
        Ok(rho
            .symmetric_eigenvalues()
            .iter()
            .filter(|e| **e < 0.0)
            .sum())
    }

    /// `K_i` for the known states and `|k_i|` over the oracle eigenbasis.
    /// Cross terms are not observable from measurement statistics, so this is
    /// refused outside exact mode.
    pub fn diagnostics(
        &self,
        phi: &[f64],
        theta_g: &[f64],
        mode: &EvaluationMode,
        spectrum: &Spectrum,
    ) -> Result<DiscriminatorDiagnostics> {
        if !mode.is_exact() {
            return Err(Error::RequiresExact("discriminator diagnostics"));
        }
        if self.known.is_empty() {
            return Err(Error::EmptyLadder);
        }
        let weight = MixingRule {
            known_states: self.known.len(),
        }
        .weight();
        let k_known = self
            .known
            .iter()
            .map(|s| Ok(weight * self.discriminator.ancilla_zero_probability(phi, s)?))
            .collect::<Result<Vec<_>>>()?;

        let psi = self.generator.run(theta_g)?;
        let alpha = amplitudes_in_eigenbasis(&psi, spectrum);
        let ancilla = self.discriminator.qubit_count() - 1;
        let project = |v: &StateVector| -> Vec<num_complex::Complex64> {
            let mask = crate::simulator::qubit_mask(v.qubit_count(), ancilla);
            v.amplitudes()
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    if i & mask == 0 {
                        *a
                    } else {
                        num_complex::Complex64::new(0.0, 0.0)
                    }
                })
                .collect()
        };
        let mut u = psi.with_ancilla();
        self.discriminator.apply(phi, &mut u)?;
        let u0 = project(&u);
        let mut k_cross = Vec::with_capacity(spectrum.dimension());
        for (i, a_i) in alpha.iter().enumerate() {
            let mut v = spectrum.eigenstate(i).with_ancilla();
            self.discriminator.apply(phi, &mut v)?;
            let v0 = project(&v);
            // ⟨u|P0|v_i⟩ − α_i* ⟨v_i|P0|v_i⟩ = Σ_{j≠i} α_j* ⟨v_j|P0|v_i⟩
            let full: num_complex::Complex64 = u0.iter().zip(&v0).map(|(x, y)| x.conj() * y).sum();
            let diag: f64 = v0.iter().map(|x| x.norm_sqr()).sum();
            let cross = full - a_i.conj() * diag;
            k_cross.push((weight * a_i * cross).norm());
        }
        Ok(DiscriminatorDiagnostics {
            k_known,
            k_cross,
            alpha: alpha.iter().map(|a| a.norm_sqr()).collect(),
        })
    }
}

/// How the spectral range is estimated for choosing `γ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SpectralRangeMethod {
    /// Dense diagonalization.
    Exact,
    /// VQE on `H` and on `−H`.
    InverseVqe {
        ansatz: AnsatzSpec,
        #[serde(default)]
        optimizer: OptimizerConfig,
        #[serde(default = "default_inverse_iterations")]
        max_iterations: usize,
        #[serde(default)]
        seed: u64,
    },
}

fn default_inverse_iterations() -> usize {
    200
}

/// `(E_min, E_max)` of `h`.
pub fn spectral_bounds(h: &PauliSum, method: &SpectralRangeMethod) -> Result<(f64, f64)> {
    match method {
        SpectralRangeMethod::Exact => {
            let s = exact_spectrum(h)?;
            Ok((s.ground_energy(), s.max_energy()))
        }
        SpectralRangeMethod::InverseVqe {
            ansatz,
            optimizer,
            max_iterations,
            seed,
        } => {
            let mut settings = crate::driver::DvqeSettings {
                optimizer: *optimizer,
                ..Default::default()
            };
            settings.schedule.ground_max_iters = *max_iterations;
            settings.schedule.convergence_tol = 1e-10;
            let exact = EvaluationMode::Exact;
            let low = crate::driver::solve_ground(h, ansatz, None, &settings, &exact, *seed)?;
            let high = crate::driver::solve_ground(
                &h.negated(),
                ansatz,
                None,
                &settings,
                &exact,
                seed::derive(*seed, &[1]),
            )?;
            Ok((low.energy, -high.energy))
        }
    }
}

/// `γ = safety · (level + 1) · (E_max − E_min)`. The spectral range bounds
/// `E_{level} − E_0`, so this always satisfies `γ > (n + 1)(E_{n+1} − E_0)`.
pub fn select_gamma(
    h: &PauliSum,
    level: usize,
    method: &SpectralRangeMethod,
    safety: f64,
) -> Result<f64> {
    if level == 0 {
        return Err(Error::InvalidValue(
            "γ is only needed for excited levels".into(),
        ));
    }
    if !(safety >= 1.0) {
        return Err(Error::InvalidValue(format!(
            "γ safety factor {safety} must be ≥ 1"
        )));
    }
    let (lo, hi) = spectral_bounds(h, method)?;
    Ok(safety * (level as f64 + 1.0) * (hi - lo))
}
