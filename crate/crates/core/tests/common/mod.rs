//! Independent dense oracles and Hamiltonian families shared by the
//! integration tests. Nothing here calls the library's own matrix or
//! statevector code.

#![allow(dead_code)]

use dvqe::ansatz::{build_discriminator, AnsatzSpec};
use dvqe::mitigation::{calibrate, ReadoutNoise};
use dvqe::objective::{EvaluationMode, Sampler};
use dvqe::pauli::{PauliSum, PauliTerm};
use dvqe::simulator::{Axis, Circuit, Entangler, Gate, StateVector};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Matrix = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn pauli(letter: char) -> Matrix {
    let m = |a: [Complex64; 4]| Matrix::from_row_slice(2, 2, &a);
    match letter {
        'I' => m([c(1., 0.), c(0., 0.), c(0., 0.), c(1., 0.)]),
        'X' => m([c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
        'Y' => m([c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
        'Z' => m([c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
        _ => panic!("not a Pauli letter: {letter}"),
    }
}

/// Kronecker product in qubit order: qubit 0 is the leftmost factor.
pub fn kron_all(factors: &[Matrix]) -> Matrix {
    factors[1..]
        .iter()
        .fold(factors[0].clone(), |acc, f| acc.kronecker(f))
}

pub fn word_matrix(word: &str) -> Matrix {
    let factors: Vec<Matrix> = word.chars().map(pauli).collect();
    kron_all(&factors)
}

/// `Σ c_k P_k` from `(coefficient, word)` pairs.
pub fn hamiltonian_matrix(terms: &[(f64, String)]) -> Matrix {
    let d = 1 << terms[0].1.len();
    terms.iter().fold(Matrix::zeros(d, d), |acc, (coef, w)| {
        acc + word_matrix(w) * c(*coef, 0.0)
    })
}

pub fn pauli_sum(terms: &[(f64, String)]) -> PauliSum {
    let n = terms[0].1.len();
    PauliSum::new(
        n,
        terms
            .iter()
            .map(|(cf, w)| PauliTerm::from_word(*cf, w).unwrap())
            .collect(),
    )
    .unwrap()
}

/// All `4^n` Pauli words with coefficients from `U[−1, 1]`.
pub fn random_full_terms(n: usize, seed: u64) -> Vec<(f64, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let letters = ['I', 'X', 'Y', 'Z'];
    (0..1usize << (2 * n))
        .map(|k| {
            let w: String = (0..n)
                .map(|q| letters[(k >> (2 * (n - 1 - q))) & 3])
                .collect();
            (rng.random_range(-1.0..1.0), w)
        })
        .collect()
}

/// `count` random words (repeats allowed) with coefficients from `U[−1, 1]`.
pub fn random_sparse_terms(n: usize, count: usize, seed: u64) -> Vec<(f64, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let letters = ['I', 'X', 'Y', 'Z'];
    (0..count)
        .map(|_| {
            let w: String = (0..n).map(|_| letters[rng.random_range(0..4)]).collect();
            (rng.random_range(-1.0..1.0), w)
        })
        .collect()
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn eigenvalues(m: &Matrix) -> Vec<f64> {
    let mut v: Vec<f64> = m
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Ascending eigenpairs of a Hermitian matrix.
pub fn eigenpairs(m: &Matrix) -> Vec<(f64, DVector<Complex64>)> {
    let e = m.clone().symmetric_eigen();
    let mut pairs: Vec<(f64, DVector<Complex64>)> = (0..m.nrows())
        .map(|i| (e.eigenvalues[i], e.eigenvectors.column(i).into_owned()))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pairs
}

/// `exp(−iθσ/2) = cos(θ/2) I − i sin(θ/2) σ`.
pub fn rotation(axis: Axis, theta: f64) -> Matrix {
    let letter = match axis {
        Axis::X => 'X',
        Axis::Y => 'Y',
        Axis::Z => 'Z',
    };
    pauli('I') * c((theta / 2.0).cos(), 0.0) - pauli(letter) * c(0.0, (theta / 2.0).sin())
}

fn embed_single(n: usize, qubit: usize, u: &Matrix) -> Matrix {
    let factors: Vec<Matrix> = (0..n)
        .map(|q| if q == qubit { u.clone() } else { pauli('I') })
        .collect();
    kron_all(&factors)
}

fn controlled(n: usize, control: usize, target: usize, u: &Matrix) -> Matrix {
    let p0 = (pauli('I') + pauli('Z')) * c(0.5, 0.0);
    let p1 = (pauli('I') - pauli('Z')) * c(0.5, 0.0);
    let idle: Vec<Matrix> = (0..n)
        .map(|q| if q == control { p0.clone() } else { pauli('I') })
        .collect();
    let act: Vec<Matrix> = (0..n)
        .map(|q| {
            if q == control {
                p1.clone()
            } else if q == target {
                u.clone()
            } else {
                pauli('I')
            }
        })
        .collect();
    kron_all(&idle) + kron_all(&act)
}

/// Full-register unitary of `circuit` at `params`, built gate by gate.
pub fn circuit_unitary(circuit: &Circuit, params: &[f64]) -> Matrix {
    let n = circuit.qubit_count();
    let d = 1 << n;
    circuit
        .gates()
        .iter()
        .fold(Matrix::identity(d, d), |acc, g| {
            let u = match *g {
                Gate::Rotation {
                    axis,
                    qubit,
                    parameter,
                } => embed_single(n, qubit, &rotation(axis, params[parameter])),
                Gate::Entangler {
                    kind: Entangler::Cz,
                    control,
                    target,
                } => controlled(n, control, target, &pauli('Z')),
                Gate::Entangler {
                    kind: Entangler::Cnot,
                    control,
                    target,
                } => controlled(n, control, target, &pauli('X')),
            };
            u * acc
        })
}

pub fn basis_zero(n: usize) -> DVector<Complex64> {
    let mut v = DVector::zeros(1 << n);
    v[0] = c(1.0, 0.0);
    v
}

pub fn to_vector(s: &StateVector) -> DVector<Complex64> {
    DVector::from_column_slice(s.amplitudes())
}

pub fn to_state(v: &DVector<Complex64>) -> StateVector {
    StateVector::from_amplitudes(v.iter().copied().collect()).unwrap()
}

/// Probability that the last qubit reads 0.
pub fn last_qubit_zero(v: &DVector<Complex64>) -> f64 {
    v.iter()
        .enumerate()
        .filter(|(i, _)| i % 2 == 0)
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

/// `⟨v|H|v⟩` with a dense `H`.
pub fn expectation(h: &Matrix, v: &DVector<Complex64>) -> f64 {
    (v.adjoint() * h * v)[(0, 0)].re
}

/// `|⟨a|b⟩|²`.
pub fn overlap(a: &DVector<Complex64>, b: &DVector<Complex64>) -> f64 {
    (a.adjoint() * b)[(0, 0)].norm_sqr()
}

pub fn random_angles(count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect()
}

/// Repository `data/` directory.
pub fn data_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// `(coefficient, word)` pairs from a Hamiltonian text file.
pub fn read_terms(path: &std::path::Path) -> Vec<(f64, String)> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let mut it = l.split_whitespace();
            (
                it.next().unwrap().parse().unwrap(),
                it.next().unwrap().to_string(),
            )
        })
        .collect()
}

/// Mean absolute bias of the 8000-shot ancilla-zero estimate over 20 random
/// 3-qubit circuits at 2% flips, raw and mitigated. Each bias is measured by
/// averaging `repeats` independent estimates, which removes shot noise that
/// no readout correction can touch.
pub fn efficacy_errors(repeats: u64) -> (f64, f64) {
    let noise = ReadoutNoise::uniform(3, 0.02, 0.02).unwrap();
    let cal = calibrate(3, 8000, &noise, 99).unwrap();
    let raw = EvaluationMode::Sampled(Sampler::new(8000).with_noise(noise.clone()));
    let fixed = EvaluationMode::Sampled(Sampler::new(8000).with_noise(noise).with_calibration(cal));
    let disc =
        build_discriminator(&AnsatzSpec::new(3, 3, vec![Axis::Y, Axis::X], Entangler::Cz).unwrap())
            .unwrap();
    let input = StateVector::zero(2);
    let (mut e_raw, mut e_fixed) = (0.0, 0.0);
    for k in 0..20u64 {
        let phi = random_angles(disc.parameter_count(), 1000 + k);
        let exact = disc.ancilla_zero_probability(&phi, &input).unwrap();
        let (mut a, mut b) = (0.0, 0.0);
        for r in 0..repeats {
            let seed = k * repeats + r;
            a += raw.acceptance(&disc, &phi, &input, seed).unwrap() / repeats as f64;
            b += fixed.acceptance(&disc, &phi, &input, seed).unwrap() / repeats as f64;
        }
        e_raw += (a - exact).abs() / 20.0;
        e_fixed += (b - exact).abs() / 20.0;
    }
    (e_raw, e_fixed)
}
