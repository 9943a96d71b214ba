//! Exact reference results from dense diagonalization.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::pauli::PauliSum;
use crate::simulator::{Circuit, StateVector};
use crate::{Error, Result};

/// Eigenvalues in ascending order with matching orthonormal eigenvectors
/// stored as columns.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<Complex64>,
}

impl Spectrum {
    pub fn dimension(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_energy(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    pub fn spectral_range(&self) -> f64 {
        self.max_energy() - self.ground_energy()
    }

    /// Eigenvector `i` as a state.
    pub fn eigenstate(&self, i: usize) -> StateVector {
        StateVector::from_amplitudes(self.eigenvectors.column(i).iter().copied().collect())
            .expect("eigenvectors are normalized")
    }

    /// Indices of eigenvalues within `tol` of eigenvalue `i`.
    pub fn degenerate_block(&self, i: usize, tol: f64) -> Vec<usize> {
        let e = self.eigenvalues[i];
        (0..self.dimension())
            .filter(|&j| (self.eigenvalues[j] - e).abs() <= tol)
            .collect()
    }

    /// Weight of `state` inside the eigenspace spanned by `block`.
    pub fn block_weight(&self, state: &StateVector, block: &[usize]) -> Result<f64> {
        let alpha = alpha_decomposition(state, self)?;
        Ok(block.iter().map(|&j| alpha[j]).sum())
    }
}

/// Full eigendecomposition of the dense Hamiltonian.
pub fn exact_spectrum(h: &PauliSum) -> Result<Spectrum> {
    let dense = h.dense_matrix()?;
    let eig = dense.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// `|⟨a|b⟩|²`.
pub fn state_overlap(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

/// `|⟨0|G(θ_i)† G(θ_j)|0⟩|²` for two parameter vectors of one generator.
pub fn overlaps(theta_i: &[f64], theta_j: &[f64], generator: &Circuit) -> Result<f64> {
    state_overlap(&generator.run(theta_i)?, &generator.run(theta_j)?)
}

/// `|α_i|² = |⟨s_i|ψ⟩|²` over the oracle eigenbasis.
pub fn alpha_decomposition(state: &StateVector, spectrum: &Spectrum) -> Result<Vec<f64>> {
    if state.dimension() != spectrum.dimension() {
        return Err(Error::DimensionMismatch {
            expected: spectrum.dimension(),
            actual: state.dimension(),
        });
    }
    Ok(amplitudes_in_eigenbasis(state, spectrum)
        .iter()
        .map(|a| a.norm_sqr())
        .collect())
}

/// Complex `α_i = ⟨s_i|ψ⟩`.
pub(crate) fn amplitudes_in_eigenbasis(state: &StateVector, spectrum: &Spectrum) -> Vec<Complex64> {
    spectrum
        .eigenvectors
        .column_iter()
        .map(|v| {
            v.iter()
                .zip(state.amplitudes())
                .map(|(e, a)| e.conj() * a)
                .sum()
        })
        .collect()
}
