//! Weighted Pauli-string Hamiltonians `H = Σ c_k P_k`.
//!
//! The text format is one term per line, `<coefficient> <axes>`, where the
//! axes word spells one of `I`, `X`, `Y`, `Z` per qubit starting at qubit 0.
//! `#` starts a comment and blank lines are ignored.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::mitigation::{mitigate, ConfusionMatrix, MitigationOptions, ReadoutNoise};
use crate::seed;
use crate::simulator::{qubit_mask, Axis, StateVector};
use crate::{Error, Result};

/// Largest register for which dense operators are materialized.
pub const MAX_DENSE_QUBITS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PauliTerm {
    coefficient: f64,
    axes: Vec<Pauli>,
}

/// Bit-mask form of a Pauli string: `P|i⟩ = i^y (-1)^{|i & z|} |i ⊕ x⟩`.
#[derive(Clone, Copy, Debug)]
struct Masks {
    x: usize,
    z: usize,
    y_count: u32,
}

impl Masks {
    #[inline]
    fn phase(&self, index: usize) -> Complex64 {
        let sign = if (index & self.z).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        match self.y_count % 4 {
            0 => Complex64::new(sign, 0.0),
            1 => Complex64::new(0.0, sign),
            2 => Complex64::new(-sign, 0.0),
            _ => Complex64::new(0.0, -sign),
        }
    }
}

impl PauliTerm {
    pub fn new(coefficient: f64, axes: Vec<Pauli>) -> Result<Self> {
        if !coefficient.is_finite() {
            return Err(Error::InvalidValue(format!(
                "coefficient {coefficient} is not finite"
            )));
        }
        if axes.is_empty() {
            return Err(Error::InvalidValue("Pauli string has no qubits".into()));
        }
        Ok(Self { coefficient, axes })
    }

    /// Parses an axes word such as `"XIZ"`.
    pub fn from_word(coefficient: f64, word: &str) -> Result<Self> {
        let axes = word
            .chars()
            .map(|c| {
                Pauli::from_char(c)
                    .ok_or_else(|| Error::InvalidValue(format!("illegal axis letter '{c}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(coefficient, axes)
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn axes(&self) -> &[Pauli] {
        &self.axes
    }

    pub fn qubit_count(&self) -> usize {
        self.axes.len()
    }

    pub fn is_identity(&self) -> bool {
        self.axes.iter().all(|&a| a == Pauli::I)
    }

    /// Qubits on which the string acts non-trivially.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.axes
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != Pauli::I)
            .map(|(q, _)| q)
    }

    pub fn word(&self) -> String {
        self.axes.iter().map(|a| a.as_char()).collect()
    }

    fn masks(&self) -> Masks {
        let n = self.axes.len();
        let mut m = Masks {
            x: 0,
            z: 0,
            y_count: 0,
        };
        for (q, a) in self.axes.iter().enumerate() {
            let bit = qubit_mask(n, q);
            match a {
                Pauli::I => {}
                Pauli::X => m.x |= bit,
                Pauli::Z => m.z |= bit,
                Pauli::Y => {
                    m.x |= bit;
                    m.z |= bit;
                    m.y_count += 1;
                }
            }
        }
        m
    }

    /// `⟨ψ|P|ψ⟩` for the bare string (coefficient not applied).
    fn string_expectation(&self, state: &StateVector) -> Complex64 {
        let m = self.masks();
        state
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(i, a)| state.amplitudes()[i ^ m.x].conj() * m.phase(i) * a)
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    qubit_count: usize,
    terms: Vec<PauliTerm>,
}

/// Result of a shot-based expectation estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampledEstimate {
    pub value: f64,
    /// Total shots consumed across all measured terms.
    pub shots: usize,
}

/// Readout channel applied to every sampled histogram.
#[derive(Clone, Copy, Debug, Default)]
pub struct Readout<'a> {
    pub noise: Option<&'a ReadoutNoise>,
    pub mitigation: Option<(&'a ConfusionMatrix, MitigationOptions)>,
}

impl PauliSum {
    pub fn new(qubit_count: usize, terms: Vec<PauliTerm>) -> Result<Self> {
        if qubit_count == 0 {
            return Err(Error::InvalidValue("qubit count must be at least 1".into()));
        }
        if let Some(bad) = terms.iter().find(|t| t.qubit_count() != qubit_count) {
            return Err(Error::DimensionMismatch {
                expected: qubit_count,
                actual: bad.qubit_count(),
            });
        }
        Ok(Self { qubit_count, terms })
    }

    /// Parses the line-oriented Hamiltonian format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut qubit_count = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let mut fields = line.split_whitespace();
            let (coef, word) = match (fields.next(), fields.next(), fields.next()) {
                (Some(c), Some(w), None) => (c, w),
                _ => {
                    return Err(err(format!(
                        "expected `<coefficient> <axes>`, found `{line}`"
                    )))
                }
            };
            let coefficient: f64 = coef
                .parse()
                .map_err(|_| err(format!("malformed coefficient `{coef}`")))?;
            let term = PauliTerm::from_word(coefficient, word).map_err(|e| err(e.to_string()))?;
            match qubit_count {
                None => qubit_count = Some(term.qubit_count()),
                Some(n) if n != term.qubit_count() => {
                    return Err(err(format!(
                        "axes `{word}` has {} qubits, earlier terms have {n}",
                        term.qubit_count()
                    )))
                }
                Some(_) => {}
            }
            terms.push(term);
        }
        match qubit_count {
            None => Err(Error::EmptyDocument),
            Some(n) => Self::new(n, terms),
        }
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    /// `-H`, used to estimate the top of the spectrum variationally.
    pub fn negated(&self) -> PauliSum {
        PauliSum {
            qubit_count: self.qubit_count,
            terms: self
                .terms
                .iter()
                .map(|t| PauliTerm {
                    coefficient: -t.coefficient,
                    axes: t.axes.clone(),
                })
                .collect(),
        }
    }

    /// `Σ|c_k|`, an upper bound on the spectral radius.
    pub fn coefficient_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.coefficient.abs()).sum()
    }

    fn check_state(&self, state: &StateVector) -> Result<()> {
        if state.qubit_count() != self.qubit_count {
            return Err(Error::DimensionMismatch {
                expected: self.qubit_count,
                actual: state.qubit_count(),
            });
        }
        Ok(())
    }

    /// Dense `2^n × 2^n` matrix of the operator.
    pub fn dense_matrix(&self) -> Result<DMatrix<Complex64>> {
        if self.qubit_count > MAX_DENSE_QUBITS {
            return Err(Error::QubitLimit {
                qubits: self.qubit_count,
                limit: MAX_DENSE_QUBITS,
            });
        }
        let dim = 1usize << self.qubit_count;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for term in &self.terms {
            let masks = term.masks();
            for i in 0..dim {
                m[(i ^ masks.x, i)] += masks.phase(i) * term.coefficient;
            }
        }
        Ok(m)
    }

    /// `⟨ψ|H|ψ⟩`, computed term by term.
    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        self.check_state(state)?;
        let total: Complex64 = self
            .terms
            .iter()
            .map(|t| t.string_expectation(state) * t.coefficient)
            .sum();
        debug_assert!(total.im.abs() < 1e-9, "imaginary residue {}", total.im);
        Ok(total.re)
    }

    /// Shot-based estimate of `⟨ψ|H|ψ⟩`.
    ///
    /// Each non-identity term is measured on its own: qubits in its support
    /// are rotated so that the term's axis maps to Z, `shots_per_term`
    /// bitstrings are drawn through the readout channel, and the parity over
    /// the support is averaged. Identity terms contribute their coefficient
    /// without consuming shots.
    pub fn expectation_sampled(
        &self,
        state: &StateVector,
        shots_per_term: usize,
        readout: Readout<'_>,
        seed: u64,
    ) -> Result<SampledEstimate> {
        self.check_state(state)?;
        if shots_per_term == 0 {
            return Err(Error::InvalidValue(
                "shots per term must be at least 1".into(),
            ));
        }
        let mut value = 0.0;
        let mut shots = 0;
        for (k, term) in self.terms.iter().enumerate() {
            if term.is_identity() {
                value += term.coefficient;
                continue;
            }
            let mut rotated = state.clone();
            let mut support = 0usize;
            for q in term.support() {
                support |= qubit_mask(self.qubit_count, q);
                match term.axes[q] {
                    Pauli::X => rotated.apply_rotation(Axis::Y, q, -FRAC_PI_2)?,
                    Pauli::Y => rotated.apply_rotation(Axis::X, q, FRAC_PI_2)?,
                    _ => {}
                }
            }
            let histogram = rotated.sample(
                shots_per_term,
                readout.noise,
                seed::derive(seed, &[k as u64]),
            )?;
            let weights: Vec<f64> = match readout.mitigation {
                Some((m, options)) => mitigate(&histogram, m, options)?,
                None => histogram.counts().iter().map(|&c| c as f64).collect(),
            };
            let total: f64 = weights.iter().sum();
            let parity: f64 = weights
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    if (i & support).count_ones().is_multiple_of(2) {
                        *w
                    } else {
                        -*w
                    }
                })
                .sum();
            value += term.coefficient * parity / total;
            shots += shots_per_term;
        }
        Ok(SampledEstimate { value, shots })
    }
}

impl FromStr for PauliSum {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.terms {
            writeln!(f, "{} {}", t.coefficient, t.word())?;
        }
        Ok(())
    }
}

/// `Σ_k c_k ⟨ψ|P_k|ψ⟩`.
pub fn expectation_exact(state: &StateVector, h: &PauliSum) -> Result<f64> {
    h.expectation(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mitigation::ReadoutNoise;

    #[test]
    fn parse_single_term() {
        let h: PauliSum = "1.0 ZZ".parse().unwrap();
        assert_eq!(h.qubit_count(), 2);
        assert_eq!(h.terms().len(), 1);
        assert_eq!(h.terms()[0].coefficient(), 1.0);
        assert_eq!(h.terms()[0].axes(), &[Pauli::Z, Pauli::Z]);
    }

    #[test]
    fn parse_signs_and_lines() {
        let h = PauliSum::parse("0.5 ZI\n-0.5 IZ").unwrap();
        assert_eq!(h.qubit_count(), 2);
        assert_eq!(h.terms()[1].coefficient(), -0.5);
        assert_eq!(h.terms()[1].word(), "IZ");
    }

    #[test]
    fn parse_comments_and_blank_lines() {
        let h = PauliSum::parse("# header\n\n  0.25 XY  # trailing\n\n-1e-3 ZI\n").unwrap();
        assert_eq!(h.terms().len(), 2);
        assert_eq!(h.terms()[1].coefficient(), -1e-3);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match PauliSum::parse("1.0 ZZZ\n1.0 ZZ") {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        match PauliSum::parse("# c\nabc ZZ") {
            Err(Error::Parse { line: 2, message }) => assert!(message.contains("abc")),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            PauliSum::parse("1.0 ZQ"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            PauliSum::parse("1.0 ZZ extra"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            PauliSum::parse("inf Z"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            PauliSum::parse("# only\n\n"),
            Err(Error::EmptyDocument)
        ));
    }

    #[test]
    fn display_round_trips() {
        let h = PauliSum::parse("0.5 XI\n-0.125 YZ\n2 II").unwrap();
        assert_eq!(PauliSum::parse(&h.to_string()).unwrap(), h);
    }

    #[test]
    fn dense_single_qubit_paulis() {
        let z = PauliSum::parse("1.0 Z").unwrap().dense_matrix().unwrap();
        assert_eq!(z[(0, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(z[(1, 1)], Complex64::new(-1.0, 0.0));
        assert_eq!(z[(0, 1)], Complex64::new(0.0, 0.0));
        let x = PauliSum::parse("1.0 X").unwrap().dense_matrix().unwrap();
        assert_eq!(x[(0, 1)], Complex64::new(1.0, 0.0));
        assert_eq!(x[(1, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(x[(0, 0)], Complex64::new(0.0, 0.0));
        let y = PauliSum::parse("1.0 Y").unwrap().dense_matrix().unwrap();
        assert_eq!(y[(0, 1)], Complex64::new(0.0, -1.0));
        assert_eq!(y[(1, 0)], Complex64::new(0.0, 1.0));
    }

    #[test]
    fn dense_guard() {
        let word = "Z".repeat(MAX_DENSE_QUBITS + 1);
        let h = PauliSum::parse(&format!("1.0 {word}")).unwrap();
        assert!(matches!(h.dense_matrix(), Err(Error::QubitLimit { .. })));
    }

    #[test]
    fn exact_expectation_on_zero_state() {
        let zero = StateVector::zero(2);
        let zz = PauliSum::parse("1.0 ZZ").unwrap();
        assert_eq!(expectation_exact(&zero, &zz).unwrap(), 1.0);
        let xi = PauliSum::parse("1.0 XI").unwrap();
        assert_eq!(expectation_exact(&zero, &xi).unwrap(), 0.0);
        assert!(matches!(
            expectation_exact(&StateVector::zero(3), &zz),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sampled_zero_variance_outcome() {
        let zero = StateVector::zero(2);
        let zz = PauliSum::parse("1.0 ZZ").unwrap();
        for shots in [1, 17, 1000] {
            let est = zz
                .expectation_sampled(&zero, shots, Readout::default(), 5)
                .unwrap();
            assert_eq!(est.value, 1.0);
            assert_eq!(est.shots, shots);
        }
    }

    #[test]
    fn sampled_identity_consumes_no_shots() {
        let h = PauliSum::parse("1.0 II").unwrap();
        let est = h
            .expectation_sampled(&StateVector::zero(2), 100, Readout::default(), 1)
            .unwrap();
        assert_eq!(est.value, 1.0);
        assert_eq!(est.shots, 0);
    }

    #[test]
    fn sampled_is_reproducible_with_noise() {
        let noise = ReadoutNoise::uniform(2, 0.05, 0.03).unwrap();
        let h = PauliSum::parse("0.3 XZ\n-0.7 YY\n0.2 ZI").unwrap();
        let mut s = StateVector::zero(2);
        s.apply_rotation(Axis::Y, 0, 0.4).unwrap();
        s.apply_rotation(Axis::X, 1, 1.1).unwrap();
        let readout = Readout {
            noise: Some(&noise),
            mitigation: None,
        };
        let a = h.expectation_sampled(&s, 256, readout, 77).unwrap();
        let b = h.expectation_sampled(&s, 256, readout, 77).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }
}
