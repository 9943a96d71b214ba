//! Dense statevector simulation of parametrized circuits.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::mitigation::{ReadoutNoise, ShotHistogram};
use crate::{Error, Result};

/// Largest register the simulator will allocate.
pub const MAX_SIMULATED_QUBITS: usize = 24;

/// Bit mask of qubit `q` in an `n`-qubit basis index.
#[inline]
pub(crate) fn qubit_mask(qubit_count: usize, qubit: usize) -> usize {
    1 << (qubit_count - 1 - qubit)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "X",
            Axis::Y => "Y",
            Axis::Z => "Z",
        })
    }
}

/// Two-qubit gate used for the entangling ladder.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Entangler {
    #[default]
    Cz,
    Cnot,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    /// `exp(-i θ σ_axis / 2)` with `θ = params[parameter]`.
    Rotation {
        axis: Axis,
        qubit: usize,
        parameter: usize,
    },
    Entangler {
        kind: Entangler,
        control: usize,
        target: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    qubit_count: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `qubit_count` qubits.
    pub fn zero(qubit_count: usize) -> Self {
        assert!(
            qubit_count <= MAX_SIMULATED_QUBITS,
            "{qubit_count} qubits exceeds the simulator limit"
        );
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << qubit_count];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Self {
            qubit_count,
            amplitudes,
        }
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(qubit_count: usize, index: usize) -> Result<Self> {
        let mut state = Self::zero(qubit_count);
        if index >= state.dimension() {
            return Err(Error::DimensionMismatch {
                expected: state.dimension(),
                actual: index,
            });
        }
        state.amplitudes[0] = Complex64::new(0.0, 0.0);
        state.amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(state)
    }

    /// Wraps raw amplitudes. The length must be a power of two and the vector
    /// must have unit norm.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::InvalidValue(format!(
                "state length {len} is not a power of two"
            )));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidValue(format!(
                "state norm² is {norm}, expected 1"
            )));
        }
        Ok(Self {
            qubit_count: len.trailing_zeros() as usize,
            amplitudes,
        })
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.dimension() != other.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                actual: other.dimension(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `|self⟩ ⊗ |0⟩` with the new qubit appended as the highest index.
    pub fn with_ancilla(&self) -> StateVector {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); self.dimension() * 2];
        for (i, a) in self.amplitudes.iter().enumerate() {
            amplitudes[i << 1] = *a;
        }
        StateVector {
            qubit_count: self.qubit_count + 1,
            amplitudes,
        }
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.qubit_count {
            return Err(Error::QubitOutOfRange {
                index: qubit,
                qubit_count: self.qubit_count,
            });
        }
        Ok(())
    }

    /// Applies a 2×2 unitary `[[a, b], [c, d]]` to one qubit.
    pub(crate) fn apply_single(&mut self, qubit: usize, m: [[Complex64; 2]; 2]) {
        let mask = qubit_mask(self.qubit_count, qubit);
        let dim = self.dimension();
        let mut base = 0;
        while base < dim {
            for i0 in base..base + mask {
                let i1 = i0 | mask;
                let a0 = self.amplitudes[i0];
                let a1 = self.amplitudes[i1];
                self.amplitudes[i0] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[i1] = m[1][0] * a0 + m[1][1] * a1;
            }
            base += mask << 1;
        }
    }

    pub fn apply_rotation(&mut self, axis: Axis, qubit: usize, angle: f64) -> Result<()> {
        self.check_qubit(qubit)?;
        self.apply_single(qubit, rotation_matrix(axis, angle));
        Ok(())
    }

    pub fn apply_x(&mut self, qubit: usize) -> Result<()> {
        self.check_qubit(qubit)?;
        let mask = qubit_mask(self.qubit_count, qubit);
        for i in 0..self.dimension() {
            if i & mask == 0 {
                self.amplitudes.swap(i, i | mask);
            }
        }
        Ok(())
    }

    pub fn apply_entangler(
        &mut self,
        kind: Entangler,
        control: usize,
        target: usize,
    ) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::InvalidCircuit(format!(
                "entangler control and target are both qubit {control}"
            )));
        }
        let cm = qubit_mask(self.qubit_count, control);
        let tm = qubit_mask(self.qubit_count, target);
        match kind {
            Entangler::Cz => {
                for (i, a) in self.amplitudes.iter_mut().enumerate() {
                    if i & cm != 0 && i & tm != 0 {
                        *a = -*a;
                    }
                }
            }
            Entangler::Cnot => {
                for i in 0..self.dimension() {
                    if i & cm != 0 && i & tm == 0 {
                        self.amplitudes.swap(i, i | tm);
                    }
                }
            }
        }
        Ok(())
    }

    /// Probability that measuring `qubit` yields 0, i.e. `Tr[P_0 ρ]`.
    pub fn ancilla_zero_probability(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let mask = qubit_mask(self.qubit_count, qubit);
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask == 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    pub fn ancilla_one_probability(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let mask = qubit_mask(self.qubit_count, qubit);
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Draws `shots` basis states from `|amplitude|²`, optionally passing each
    /// measured bit through a readout-flip channel.
    pub fn sample(
        &self,
        shots: usize,
        noise: Option<&ReadoutNoise>,
        seed: u64,
    ) -> Result<ShotHistogram> {
        if shots == 0 {
            return Err(Error::InvalidValue("shot count must be at least 1".into()));
        }
        if let Some(noise) = noise {
            if noise.qubit_count() < self.qubit_count {
                return Err(Error::DimensionMismatch {
                    expected: self.qubit_count,
                    actual: noise.qubit_count(),
                });
            }
        }
        let mut cumulative = Vec::with_capacity(self.dimension());
        let mut acc = 0.0;
        for a in &self.amplitudes {
            acc += a.norm_sqr();
            cumulative.push(acc);
        }
        let total = acc;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts = vec![0u64; self.dimension()];
        let last = self.dimension() - 1;
        for _ in 0..shots {
            let u: f64 = rng.random::<f64>() * total;
            // u < total, so the first cumulative entry above u always exists
            // and belongs to a state with non-zero probability.
            let mut index = cumulative.partition_point(|&c| c <= u).min(last);
            if let Some(noise) = noise {
                index = noise.corrupt(index, self.qubit_count, &mut rng);
            }
            counts[index] += 1;
        }
        ShotHistogram::from_counts(self.qubit_count, counts)
    }
}

/// `exp(-i θ σ / 2)` as a 2×2 matrix.
pub fn rotation_matrix(axis: Axis, angle: f64) -> [[Complex64; 2]; 2] {
    let c = (angle / 2.0).cos();
    let s = (angle / 2.0).sin();
    let zero = Complex64::new(0.0, 0.0);
    match axis {
        Axis::X => [
            [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
            [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
        ],
        Axis::Y => [
            [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
            [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
        ],
        Axis::Z => [[Complex64::new(c, -s), zero], [zero, Complex64::new(c, s)]],
    }
}

/// Samples `shots` bitstrings from `state`. See [`StateVector::sample`].
pub fn sample_bitstrings(
    state: &StateVector,
    shots: usize,
    noise: Option<&ReadoutNoise>,
    seed: u64,
) -> Result<ShotHistogram> {
    state.sample(shots, noise, seed)
}

/// An ordered gate list over a fixed register with a flat parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    qubit_count: usize,
    gates: Vec<Gate>,
    parameter_count: usize,
}

impl Circuit {
    /// Validates qubit indices and that every parameter index in
    /// `0..parameter_count` is used by exactly one rotation.
    pub fn new(qubit_count: usize, parameter_count: usize, gates: Vec<Gate>) -> Result<Self> {
        if qubit_count == 0 || qubit_count > MAX_SIMULATED_QUBITS {
            return Err(Error::InvalidCircuit(format!(
                "qubit count {qubit_count} outside 1..={MAX_SIMULATED_QUBITS}"
            )));
        }
        let mut used = vec![false; parameter_count];
        for gate in &gates {
            match *gate {
                Gate::Rotation {
                    qubit, parameter, ..
                } => {
                    if qubit >= qubit_count {
                        return Err(Error::QubitOutOfRange {
                            index: qubit,
                            qubit_count,
                        });
                    }
                    match used.get_mut(parameter) {
                        None => {
                            return Err(Error::InvalidCircuit(format!(
                                "parameter index {parameter} >= parameter count {parameter_count}"
                            )))
                        }
                        Some(true) => {
                            return Err(Error::InvalidCircuit(format!(
                                "parameter {parameter} drives more than one rotation"
                            )))
                        }
                        Some(slot) => *slot = true,
                    }
                }
                Gate::Entangler {
                    control, target, ..
                } => {
                    for q in [control, target] {
                        if q >= qubit_count {
                            return Err(Error::QubitOutOfRange {
                                index: q,
                                qubit_count,
                            });
                        }
                    }
                    if control == target {
                        return Err(Error::InvalidCircuit(format!(
                            "entangler control and target are both qubit {control}"
                        )));
                    }
                }
            }
        }
        if let Some(unused) = used.iter().position(|u| !u) {
            return Err(Error::InvalidCircuit(format!(
                "parameter {unused} is not used by any rotation"
            )));
        }
        Ok(Self {
            qubit_count,
            gates,
            parameter_count,
        })
    }

    /// Circuit with no gates.
    pub fn empty(qubit_count: usize) -> Self {
        Self::new(qubit_count, 0, Vec::new()).expect("empty circuit is valid")
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn parameter_count(&self) -> usize {
        self.parameter_count
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.parameter_count {
            return Err(Error::ParameterCount {
                expected: self.parameter_count,
                actual: params.len(),
            });
        }
        Ok(())
    }

    /// Applies the circuit in place to an arbitrary input state.
    pub fn apply(&self, params: &[f64], state: &mut StateVector) -> Result<()> {
        self.check_params(params)?;
        if state.qubit_count() != self.qubit_count {
            return Err(Error::DimensionMismatch {
                expected: self.qubit_count,
                actual: state.qubit_count(),
            });
        }
        for gate in &self.gates {
            match *gate {
                Gate::Rotation {
                    axis,
                    qubit,
                    parameter,
                } => state.apply_single(qubit, rotation_matrix(axis, params[parameter])),
                Gate::Entangler {
                    kind,
                    control,
                    target,
                } => state.apply_entangler(kind, control, target)?,
            }
        }
        Ok(())
    }

    /// Runs the circuit on `|0…0⟩`.
    pub fn run(&self, params: &[f64]) -> Result<StateVector> {
        let mut state = StateVector::zero(self.qubit_count);
        self.apply(params, &mut state)?;
        Ok(state)
    }

    /// Runs the circuit on `input ⊗ |0⟩_ancilla` and returns the probability
    /// that the ancilla (highest-index qubit) reads 0.
    pub fn ancilla_zero_probability(&self, params: &[f64], input: &StateVector) -> Result<f64> {
        let mut state = input.with_ancilla();
        self.apply(params, &mut state)?;
        state.ancilla_zero_probability(self.qubit_count - 1)
    }
}

/// Runs `circuit` with `params` on `|0…0⟩`.
pub fn run_circuit(circuit: &Circuit, params: &[f64]) -> Result<StateVector> {
    circuit.run(params)
}

/// Probability that `ancilla_qubit` of `state` reads 0.
pub fn ancilla_zero_probability(state: &StateVector, ancilla_qubit: usize) -> Result<f64> {
    state.ancilla_zero_probability(ancilla_qubit)
}
