//! Readout-error calibration and unfolding.
//!
//! A [`ConfusionMatrix`] is estimated by preparing every computational basis
//! state with X gates and recording what the noisy readout reports. Raw
//! histograms are then corrected by the sum-constrained least-squares solve
//! `x = argmin |y - M x|²` subject to `Σ x = Σ y`.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seed;
use crate::simulator::{qubit_mask, StateVector};
use crate::{Error, Result};

/// Independent readout flip probabilities of one qubit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BitFlip {
    /// `p(read 1 | prepared 0)`.
    pub p1_given_0: f64,
    /// `p(read 0 | prepared 1)`.
    pub p0_given_1: f64,
}

impl BitFlip {
    pub fn new(p1_given_0: f64, p0_given_1: f64) -> Result<Self> {
        for p in [p1_given_0, p0_given_1] {
            if !(0.0..0.5).contains(&p) {
                return Err(Error::InvalidValue(format!(
                    "readout flip probability {p} outside [0, 0.5)"
                )));
            }
        }
        Ok(Self {
            p1_given_0,
            p0_given_1,
        })
    }
}

/// Per-qubit readout noise; qubit `q` uses `flips[q]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutNoise {
    flips: Vec<BitFlip>,
}

impl ReadoutNoise {
    pub fn new(flips: Vec<BitFlip>) -> Result<Self> {
        for f in &flips {
            BitFlip::new(f.p1_given_0, f.p0_given_1)?;
        }
        Ok(Self { flips })
    }

    pub fn uniform(qubit_count: usize, p1_given_0: f64, p0_given_1: f64) -> Result<Self> {
        Ok(Self {
            flips: vec![BitFlip::new(p1_given_0, p0_given_1)?; qubit_count],
        })
    }

    pub fn qubit_count(&self) -> usize {
        self.flips.len()
    }

    pub fn flips(&self) -> &[BitFlip] {
        &self.flips
    }

    /// Passes the measured basis index of an `n`-qubit register through the
    /// flip channel.
    pub(crate) fn corrupt<R: Rng>(&self, index: usize, qubit_count: usize, rng: &mut R) -> usize {
        let mut out = index;
        for (q, flip) in self.flips.iter().take(qubit_count).enumerate() {
            let mask = qubit_mask(qubit_count, q);
            let p = if index & mask == 0 {
                flip.p1_given_0
            } else {
                flip.p0_given_1
            };
            if p > 0.0 && rng.random::<f64>() < p {
                out ^= mask;
            }
        }
        out
    }
}

/// Bitstring counts over a register.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShotHistogram {
    qubit_count: usize,
    counts: Vec<u64>,
    total: u64,
}

impl ShotHistogram {
    /// Builds a histogram from dense counts indexed by basis state.
    pub fn from_counts(qubit_count: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != 1 << qubit_count {
            return Err(Error::DimensionMismatch {
                expected: 1 << qubit_count,
                actual: counts.len(),
            });
        }
        let total = counts.iter().sum();
        Ok(Self {
            qubit_count,
            counts,
            total,
        })
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, index: usize) -> u64 {
        self.counts.get(index).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Bitstring label of a basis index, qubit 0 first.
    pub fn bitstring(&self, index: usize) -> String {
        (0..self.qubit_count)
            .map(|q| {
                if index & qubit_mask(self.qubit_count, q) != 0 {
                    '1'
                } else {
                    '0'
                }
            })
            .collect()
    }

    /// Non-zero counts keyed by bitstring.
    pub fn to_map(&self) -> BTreeMap<String, u64> {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (self.bitstring(i), c))
            .collect()
    }
}

/// `M[i][j] = p(measured i | prepared j)`; columns sum to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    qubit_count: usize,
    shots: usize,
    /// Column-major: `columns[j][i] = M[i][j]`.
    columns: Vec<Vec<f64>>,
}

impl ConfusionMatrix {
    /// Builds a matrix from explicit columns, checking shape and stochasticity.
    pub fn from_columns(qubit_count: usize, shots: usize, columns: Vec<Vec<f64>>) -> Result<Self> {
        let dim = 1 << qubit_count;
        if columns.len() != dim || columns.iter().any(|c| c.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: columns.len(),
            });
        }
        for (j, col) in columns.iter().enumerate() {
            let sum: f64 = col.iter().sum();
            if col.iter().any(|&v| v < 0.0) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidValue(format!(
                    "confusion column {j} is not a probability distribution"
                )));
            }
        }
        Ok(Self {
            qubit_count,
            shots,
            columns,
        })
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn dimension(&self) -> usize {
        1 << self.qubit_count
    }

    /// Calibration shots per column.
    pub fn shots(&self) -> usize {
        self.shots
    }

    pub fn get(&self, measured: usize, prepared: usize) -> f64 {
        self.columns[prepared][measured]
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let d = self.dimension();
        DMatrix::from_fn(d, d, |i, j| self.columns[j][i])
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let m: ConfusionMatrix = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Self::from_columns(m.qubit_count, m.shots, m.columns)
    }
}

/// Estimates the confusion matrix by preparing each basis state with X gates
/// and sampling `shots` readouts through `noise`.
pub fn calibrate(
    qubit_count: usize,
    shots: usize,
    noise: &ReadoutNoise,
    rng_seed: u64,
) -> Result<ConfusionMatrix> {
    let dim = 1usize << qubit_count;
    let mut columns = Vec::with_capacity(dim);
    for prepared in 0..dim {
        let mut state = StateVector::zero(qubit_count);
        for q in 0..qubit_count {
            if prepared & qubit_mask(qubit_count, q) != 0 {
                state.apply_x(q)?;
            }
        }
        let hist = state.sample(
            shots,
            Some(noise),
            seed::derive(rng_seed, &[prepared as u64]),
        )?;
        columns.push(
            hist.counts()
                .iter()
                .map(|&c| c as f64 / shots as f64)
                .collect(),
        );
    }
    Ok(ConfusionMatrix {
        qubit_count,
        shots,
        columns,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MitigationOptions {
    /// Clip negative pseudo-counts to zero and rescale to the raw total.
    pub clip_negative: bool,
    /// Relative singular-value floor below which the solve is regularized.
    pub condition_floor: f64,
}

impl Default for MitigationOptions {
    fn default() -> Self {
        Self {
            clip_negative: true,
            condition_floor: 1e-10,
        }
    }
}

/// Corrects a raw histogram with the sum-constrained least-squares solve.
/// Returns pseudo-counts indexed by basis state whose sum equals the raw
/// total.
pub fn mitigate(
    y: &ShotHistogram,
    m: &ConfusionMatrix,
    options: MitigationOptions,
) -> Result<Vec<f64>> {
    if y.qubit_count() != m.qubit_count() {
        return Err(Error::DimensionMismatch {
            expected: m.qubit_count(),
            actual: y.qubit_count(),
        });
    }
    let d = m.dimension();
    let mm = m.to_matrix();
    let yv = DVector::from_iterator(d, y.counts().iter().map(|&c| c as f64));
    let total = y.total() as f64;

    let mut gram = mm.transpose() * &mm;
    let sv = mm.singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if smax == 0.0 || smin / smax < options.condition_floor {
        let ridge = options.condition_floor * smax.max(1.0) * smax.max(1.0);
        log::warn!(
            "confusion matrix is ill-conditioned (σ_min/σ_max = {:e}); regularizing with ridge {:e}",
            if smax > 0.0 { smin / smax } else { 0.0 },
            ridge
        );
        for i in 0..d {
            gram[(i, i)] += ridge;
        }
    }

    // KKT system of min |y - Mx|² s.t. 1ᵀx = total.
    let mut kkt = DMatrix::<f64>::zeros(d + 1, d + 1);
    kkt.view_mut((0, 0), (d, d)).copy_from(&(gram * 2.0));
    for i in 0..d {
        kkt[(i, d)] = 1.0;
        kkt[(d, i)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(d + 1);
    rhs.rows_mut(0, d).copy_from(&(mm.transpose() * &yv * 2.0));
    rhs[d] = total;
    let solution = kkt
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidValue("mitigation system is singular".into()))?;
    let mut x: Vec<f64> = solution.rows(0, d).iter().copied().collect();

    if options.clip_negative && x.iter().any(|&v| v < 0.0) {
        log::debug!("clipping negative mitigated pseudo-counts");
        for v in &mut x {
            *v = v.max(0.0);
        }
        let s: f64 = x.iter().sum();
        if s > 0.0 {
            for v in &mut x {
                *v *= total / s;
            }
        }
    }
    Ok(x)
}

/// Probability that `qubit` reads 0 under a (possibly corrected) distribution
/// of pseudo-counts over an `n`-qubit register.
pub fn marginal_zero_probability(weights: &[f64], qubit_count: usize, qubit: usize) -> f64 {
    let mask = qubit_mask(qubit_count, qubit);
    let total: f64 = weights.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    weights
        .iter()
        .enumerate()
        .filter(|(i, _)| i & mask == 0)
        .map(|(_, w)| w)
        .sum::<f64>()
        / total
}
