//! Exact Rotosolve sweeps on dense operators.
//!
//! For registers small enough to hold `2^n × 2^n` matrices, the cost
//! `Tr[O U(θ) ρ U(θ)†]` restricted to one rotation angle is read off the
//! observable evolved back through the gates after that rotation and the
//! input evolved forward through the gates before it. A sweep then costs a
//! few matrix conjugations per gate instead of three circuit executions per
//! parameter, and lands on the same minimizers as the three-probe update.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::optim::{wrap_angle, CallCounter, Optimizer, RotosolveState, RotosolveUpdate};
use crate::seed::SeedStream;
use crate::simulator::{qubit_mask, rotation_matrix, Axis, Circuit, Entangler, Gate, StateVector};

/// Largest register swept densely.
pub(crate) const MAX_QUBITS: usize = 7;

pub(crate) type Operator = DMatrix<Complex64>;

type Unitary2 = [[Complex64; 2]; 2];

/// Small enough, and every parameter drives exactly one rotation, met in
/// ascending parameter order.
pub(crate) fn supports(circuit: &Circuit) -> bool {
    if circuit.qubit_count() > MAX_QUBITS {
        return false;
    }
    let mut next = 0;
    for g in circuit.gates() {
        if let Gate::Rotation { parameter, .. } = *g {
            if parameter != next {
                return false;
            }
            next += 1;
        }
    }
    next == circuit.parameter_count()
}

/// `|ψ⟩⟨ψ|`.
pub(crate) fn projector(state: &StateVector) -> Operator {
    let a = state.amplitudes();
    Operator::from_fn(a.len(), a.len(), |i, j| a[i] * a[j].conj())
}

/// `Σ_k w_k |x_k ⊗ 0⟩⟨x_k ⊗ 0|` with the ancilla as the lowest bit.
pub(crate) fn with_ancilla_density(inputs: &[(f64, &StateVector)]) -> Operator {
    let dim = 2 * inputs[0].1.dimension();
    let mut rho = Operator::zeros(dim, dim);
    for &(w, x) in inputs {
        let a = x.amplitudes();
        for j in 0..a.len() {
            for i in 0..a.len() {
                rho[(2 * i, 2 * j)] += a[i] * a[j].conj() * w;
            }
        }
    }
    rho
}

/// Projector onto ancilla `|0⟩`, the lowest bit.
pub(crate) fn ancilla_zero_projector(qubit_count: usize) -> Operator {
    let dim = 1usize << qubit_count;
    Operator::from_diagonal(&nalgebra::DVector::from_fn(dim, |i, _| {
        Complex64::new(if i % 2 == 0 { 1.0 } else { 0.0 }, 0.0)
    }))
}

/// `M` with `P0(D(φ)(x ⊗ |0⟩)) = ⟨x|M|x⟩` for every system state `x`.
pub(crate) fn acceptance_operator(disc: &Circuit, phi: &[f64]) -> Operator {
    let n = disc.qubit_count();
    let mut o = ancilla_zero_projector(n);
    for g in disc.gates().iter().rev() {
        conjugate(&mut o, n, g, phi, true);
    }
    let dim = 1usize << (n - 1);
    Operator::from_fn(dim, dim, |i, j| o[(2 * i, 2 * j)])
}

fn adjoint(u: Unitary2) -> Unitary2 {
    [
        [u[0][0].conj(), u[1][0].conj()],
        [u[0][1].conj(), u[1][1].conj()],
    ]
}

/// `m ← G m G†`, or `m ← G† m G` when `heisenberg`.
fn conjugate(m: &mut Operator, qubits: usize, gate: &Gate, params: &[f64], heisenberg: bool) {
    match *gate {
        Gate::Rotation {
            axis,
            qubit,
            parameter,
        } => {
            let u = rotation_matrix(axis, params[parameter]);
            let u = if heisenberg { adjoint(u) } else { u };
            conjugate_single(m, qubit_mask(qubits, qubit), u);
        }
        // Both entanglers are Hermitian and self-inverse.
        Gate::Entangler {
            kind,
            control,
            target,
        } => {
            let cm = qubit_mask(qubits, control);
            let tm = qubit_mask(qubits, target);
            conjugate_entangler(m, kind, cm, tm);
        }
    }
}

fn conjugate_single(m: &mut Operator, mask: usize, u: Unitary2) {
    let dim = m.nrows();
    let data = m.as_mut_slice();
    // Left factor acts on each (contiguous) column.
    for col in data.chunks_exact_mut(dim) {
        let mut base = 0;
        while base < dim {
            for i0 in base..base + mask {
                let i1 = i0 | mask;
                let (x0, x1) = (col[i0], col[i1]);
                col[i0] = u[0][0] * x0 + u[0][1] * x1;
                col[i1] = u[1][0] * x0 + u[1][1] * x1;
            }
            base += mask << 1;
        }
    }
    // Right factor U† mixes column pairs with conj(U).
    let c = [
        [u[0][0].conj(), u[0][1].conj()],
        [u[1][0].conj(), u[1][1].conj()],
    ];
    for j0 in (0..dim).filter(|j| j & mask == 0) {
        let j1 = j0 | mask;
        let (lo, hi) = data.split_at_mut(j1 * dim);
        let c0 = &mut lo[j0 * dim..(j0 + 1) * dim];
        let c1 = &mut hi[..dim];
        for (x0, x1) in c0.iter_mut().zip(c1.iter_mut()) {
            let (a, b) = (*x0, *x1);
            *x0 = c[0][0] * a + c[0][1] * b;
            *x1 = c[1][0] * a + c[1][1] * b;
        }
    }
}

fn conjugate_entangler(m: &mut Operator, kind: Entangler, cm: usize, tm: usize) {
    let dim = m.nrows();
    match kind {
        Entangler::Cz => {
            let odd = |i: usize| i & cm != 0 && i & tm != 0;
            for j in 0..dim {
                for i in 0..dim {
                    if odd(i) != odd(j) {
                        m[(i, j)] = -m[(i, j)];
                    }
                }
            }
        }
        Entangler::Cnot => {
            let p = |i: usize| if i & cm != 0 { i ^ tm } else { i };
            let src = m.clone();
            for j in 0..dim {
                for i in 0..dim {
                    m[(i, j)] = src[(p(i), p(j))];
                }
            }
        }
    }
}

/// `f(a) = offset + alpha·cos a + beta·sin a`.
#[derive(Clone, Copy, Debug)]
struct Sinusoid {
    offset: f64,
    alpha: f64,
    beta: f64,
}

impl Sinusoid {
    /// `Tr[O R(a) ρ R(a)†]` for `R(a) = cos(a/2) − i sin(a/2) σ` on `mask`,
    /// with `O` and `ρ` Hermitian.
    fn of(o: &Operator, rho: &Operator, axis: Axis, mask: usize) -> Self {
        let dim = o.nrows();
        // σ has its single non-zero entry of row i at column i ^ flip.
        let flip = if axis == Axis::Z { 0 } else { mask };
        let phase: Vec<Complex64> = (0..dim)
            .map(|i| {
                let low = i & mask == 0;
                match axis {
                    Axis::X => Complex64::new(1.0, 0.0),
                    Axis::Y => Complex64::new(0.0, if low { -1.0 } else { 1.0 }),
                    Axis::Z => Complex64::new(if low { 1.0 } else { -1.0 }, 0.0),
                }
            })
            .collect();
        let (od, rd) = (o.as_slice(), rho.as_slice());
        let (mut a, mut b, mut d) = (
            Complex64::default(),
            Complex64::default(),
            Complex64::default(),
        );
        for j in 0..dim {
            let jf = j ^ flip;
            let pj = phase[jf];
            for i in 0..dim {
                let ifl = i ^ flip;
                let oji = od[i + j * dim].conj();
                a += oji * rd[i + j * dim];
                b += oji * phase[i] * pj * rd[ifl + jf * dim];
                d += oji * (rd[i + jf * dim] * pj - phase[i] * rd[ifl + j * dim]);
            }
        }
        Sinusoid {
            offset: (a.re + b.re) / 2.0,
            alpha: (a.re - b.re) / 2.0,
            beta: -d.im / 2.0,
        }
    }

    fn at(&self, a: f64) -> f64 {
        self.offset + self.alpha * a.cos() + self.beta * a.sin()
    }

    fn amplitude(&self) -> f64 {
        self.alpha.hypot(self.beta)
    }
}

/// One Rotosolve sweep over every parameter of `circuit` minimizing
/// `Tr[observable U(θ) rho U(θ)†]`.
pub(crate) fn rotosolve_sweep(
    circuit: &Circuit,
    params: &mut [f64],
    mut rho: Operator,
    observable: &Operator,
) -> Vec<RotosolveUpdate> {
    let n = circuit.qubit_count();
    let mut o = observable.clone();
    for g in circuit.gates().iter().rev() {
        conjugate(&mut o, n, g, params, true);
    }
    let mut updates = Vec::with_capacity(circuit.parameter_count());
    for g in circuit.gates() {
        // Drop this gate from the back-propagated observable.
        conjugate(&mut o, n, g, params, false);
        if let Gate::Rotation {
            axis,
            qubit,
            parameter,
        } = *g
        {
            let s = Sinusoid::of(&o, &rho, axis, qubit_mask(n, qubit));
            let theta = params[parameter];
            // A flat direction keeps its angle.
            let updated = if s.amplitude() <= 1e-15 * (1.0 + s.offset.abs()) {
                theta
            } else {
                wrap_angle((-s.beta).atan2(-s.alpha))
            };
            params[parameter] = updated;
            updates.push(RotosolveUpdate {
                index: parameter,
                previous: theta,
                updated,
                probes: [
                    s.at(theta),
                    s.at(theta + FRAC_PI_2),
                    s.at(theta - FRAC_PI_2),
                ],
                predicted: s.offset - s.amplitude(),
            });
        }
        conjugate(&mut rho, n, g, params, false);
    }
    updates
}

/// One Rotosolve iteration through the dense sweep. `None` when the optimizer
/// is not a plain ascending Rotosolve or the circuit is not supported, so the
/// caller falls back to probing the cost.
pub(crate) fn iterate(
    optimizer: &Optimizer,
    circuit: &Circuit,
    params: &mut [f64],
    rho: Operator,
    observable: &Operator,
    seeds: &mut SeedStream,
) -> Option<CallCounter> {
    match optimizer {
        Optimizer::Rotosolve(state) if state.order.is_empty() && supports(circuit) => {
            let n = rotosolve_sweep(circuit, params, rho, observable).len() as u64;
            // Keep the seed stream in step with the probing sweep.
            for _ in 0..n * RotosolveState::EVALUATIONS_PER_UPDATE {
                seeds.next_seed();
            }
            Some(CallCounter {
                requests: n,
                evaluations: n * RotosolveState::EVALUATIONS_PER_UPDATE,
            })
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::ansatz::{build_discriminator, build_generator, AnsatzSpec};
    use crate::optim::{rotosolve_sweep as probing_sweep, RotosolveState};
    use crate::pauli::PauliSum;

    fn random_angles(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-3.0..3.0)).collect()
    }

    fn random_state(qubits: usize, rng: &mut ChaCha8Rng) -> StateVector {
        let v: Vec<Complex64> = (0..1 << qubits)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        StateVector::from_amplitudes(v.into_iter().map(|a| a / norm).collect()).unwrap()
    }

    #[test]
    fn energy_sweep_matches_probing_sweep() {
        let h = PauliSum::parse("0.4 XZY\n-0.7 ZZI\n0.3 YIX\n0.2 IXX").unwrap();
        let dense_h = h.dense_matrix().unwrap();
        for entangler in [Entangler::Cz, Entangler::Cnot] {
            let spec = AnsatzSpec::new(3, 2, vec![Axis::Y, Axis::X, Axis::Z], entangler).unwrap();
            let g = build_generator(&spec).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let start = random_angles(g.parameter_count(), &mut rng);
            let cost = |p: &[f64], _: u64| h.expectation(&g.run(p).unwrap()).unwrap();
            let mut a = start.clone();
            let (probed, _) = probing_sweep(
                &cost,
                &mut a,
                &RotosolveState::default(),
                &mut SeedStream::new(0),
            );
            let mut b = start;
            let swept = rotosolve_sweep(&g, &mut b, projector(&StateVector::zero(3)), &dense_h);
            for (x, y) in probed.iter().zip(&swept) {
                for k in 0..3 {
                    assert!((x.probes[k] - y.probes[k]).abs() < 1e-10);
                }
                assert!((x.predicted - y.predicted).abs() < 1e-10);
            }
            assert!((cost(&a, 0) - cost(&b, 0)).abs() < 1e-10);
        }
    }

    #[test]
    fn discriminator_sweep_matches_probing_sweep() {
        let spec = AnsatzSpec::new(3, 3, vec![Axis::Y, Axis::X], Entangler::Cz).unwrap();
        let d = build_discriminator(&spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = random_state(2, &mut rng);
        let known = [random_state(2, &mut rng), random_state(2, &mut rng)];
        let start = random_angles(d.parameter_count(), &mut rng);
        let cost = |p: &[f64], _: u64| {
            d.ancilla_zero_probability(p, &g).unwrap()
                - known
                    .iter()
                    .map(|s| d.ancilla_zero_probability(p, s).unwrap())
                    .sum::<f64>()
        };
        let mut a = start.clone();
        probing_sweep(
            &cost,
            &mut a,
            &RotosolveState::default(),
            &mut SeedStream::new(0),
        );
        let rho = with_ancilla_density(&[(1.0, &g), (-1.0, &known[0]), (-1.0, &known[1])]);
        let mut b = start;
        rotosolve_sweep(&d, &mut b, rho, &ancilla_zero_projector(3));
        assert!((cost(&a, 0) - cost(&b, 0)).abs() < 1e-10);
    }

    #[test]
    fn acceptance_operator_reproduces_probabilities() {
        let spec = AnsatzSpec::new(3, 2, vec![Axis::Y, Axis::X], Entangler::Cz).unwrap();
        let d = build_discriminator(&spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let phi = random_angles(d.parameter_count(), &mut rng);
        let m = acceptance_operator(&d, &phi);
        for _ in 0..5 {
            let x = random_state(2, &mut rng);
            let v = nalgebra::DVector::from_column_slice(x.amplitudes());
            let quad = (v.adjoint() * &m * &v)[(0, 0)].re;
            assert!((quad - d.ancilla_zero_probability(&phi, &x).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn support_rules() {
        let spec = AnsatzSpec::new(2, 2, vec![Axis::Y], Entangler::Cz).unwrap();
        assert!(supports(&build_generator(&spec).unwrap()));
        assert!(!supports(
            &build_generator(&spec.with_qubits(MAX_QUBITS + 1)).unwrap()
        ));
        let reversed = Circuit::new(
            1,
            2,
            vec![
                Gate::Rotation {
                    axis: Axis::Y,
                    qubit: 0,
                    parameter: 1,
                },
                Gate::Rotation {
                    axis: Axis::X,
                    qubit: 0,
                    parameter: 0,
                },
            ],
        )
        .unwrap();
        assert!(!supports(&reversed));
    }
}
