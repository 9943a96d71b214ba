//! Parameter optimizers for rotation-angle circuits.
//!
//! Every cost handed to these routines is a sum of terms of the form
//! `Tr[A U(θ) ρ U(θ)†]` with rotations `exp(-i θ σ / 2)`, so its restriction
//! to a single angle is a sinusoid with period 2π. Rotosolve minimizes that
//! sinusoid exactly from three probes, and the parameter-shift rule gives
//! exact derivatives for Rprop.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::seed::SeedStream;

/// A cost function of a parameter vector. `seed` drives shot sampling and is
/// ignored by exact evaluations.
pub trait Cost: Sync {
    fn evaluate(&self, params: &[f64], seed: u64) -> f64;
}

impl<F> Cost for F
where
    F: Fn(&[f64], u64) -> f64 + Sync,
{
    fn evaluate(&self, params: &[f64], seed: u64) -> f64 {
        self(params, seed)
    }
}

/// Bookkeeping of optimizer work. A request is one unit of hardware work:
/// a Rotosolve parameter update (three cost estimates) or one gradient
/// component (two cost estimates).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallCounter {
    pub requests: u64,
    pub evaluations: u64,
}

impl std::ops::AddAssign for CallCounter {
    fn add_assign(&mut self, rhs: Self) {
        self.requests += rhs.requests;
        self.evaluations += rhs.evaluations;
    }
}

/// Wraps an angle to `(-π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// `(C(θ + π/2 e_i) − C(θ − π/2 e_i)) / 2`.
pub fn parameter_shift_gradient<C: Cost + ?Sized>(
    cost: &C,
    params: &[f64],
    index: usize,
    seeds: &mut SeedStream,
) -> f64 {
    let (sp, sm) = (seeds.next_seed(), seeds.next_seed());
    shift_pair(cost, params, index, sp, sm)
}

fn shift_pair<C: Cost + ?Sized>(cost: &C, params: &[f64], index: usize, sp: u64, sm: u64) -> f64 {
    let mut shifted = params.to_vec();
    shifted[index] = params[index] + FRAC_PI_2;
    let plus = cost.evaluate(&shifted, sp);
    shifted[index] = params[index] - FRAC_PI_2;
    let minus = cost.evaluate(&shifted, sm);
    (plus - minus) / 2.0
}

/// Full gradient by the parameter-shift rule, components in parallel.
pub fn parameter_shift_gradient_all<C: Cost + ?Sized>(
    cost: &C,
    params: &[f64],
    seeds: &mut SeedStream,
) -> Vec<f64> {
    let pairs: Vec<(u64, u64)> = (0..params.len())
        .map(|_| (seeds.next_seed(), seeds.next_seed()))
        .collect();
    pairs
        .par_iter()
        .enumerate()
        .map(|(i, &(sp, sm))| shift_pair(cost, params, i, sp, sm))
        .collect()
}

/// Outcome of one Rotosolve coordinate update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotosolveUpdate {
    pub index: usize,
    pub previous: f64,
    pub updated: f64,
    /// `C(θ_i)`, `C(θ_i + π/2)`, `C(θ_i − π/2)`.
    pub probes: [f64; 3],
    /// Minimum of the sinusoid fitted through the probes.
    pub predicted: f64,
}

/// Moves parameter `index` to the minimizer of the sinusoid through three
/// probes at `θ_i`, `θ_i ± π/2`.
pub fn rotosolve_update<C: Cost + ?Sized>(
    cost: &C,
    params: &mut [f64],
    index: usize,
    seeds: &mut SeedStream,
) -> RotosolveUpdate {
    let theta = params[index];
    let c0 = cost.evaluate(params, seeds.next_seed());
    params[index] = theta + FRAC_PI_2;
    let cp = cost.evaluate(params, seeds.next_seed());
    params[index] = theta - FRAC_PI_2;
    let cm = cost.evaluate(params, seeds.next_seed());

    let updated = wrap_angle(theta - FRAC_PI_2 - (2.0 * c0 - cp - cm).atan2(cp - cm));
    params[index] = updated;

    let offset = (cp + cm) / 2.0;
    let amplitude = (c0 - offset).hypot((cp - cm) / 2.0);
    RotosolveUpdate {
        index,
        previous: theta,
        updated,
        probes: [c0, cp, cm],
        predicted: offset - amplitude,
    }
}

/// Sweep bookkeeping for Rotosolve.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RotosolveState {
    /// Parameter visiting order; empty means ascending index.
    #[serde(default)]
    pub order: Vec<usize>,
}

impl RotosolveState {
    pub const EVALUATIONS_PER_UPDATE: u64 = 3;
}

/// One pass of coordinate updates over every parameter.
pub fn rotosolve_sweep<C: Cost + ?Sized>(
    cost: &C,
    params: &mut [f64],
    state: &RotosolveState,
    seeds: &mut SeedStream,
) -> (Vec<RotosolveUpdate>, CallCounter) {
    let order: Vec<usize> = if state.order.is_empty() {
        (0..params.len()).collect()
    } else {
        state.order.clone()
    };
    let updates: Vec<_> = order
        .into_iter()
        .map(|i| rotosolve_update(cost, params, i, seeds))
        .collect();
    let n = updates.len() as u64;
    (
        updates,
        CallCounter {
            requests: n,
            evaluations: n * RotosolveState::EVALUATIONS_PER_UPDATE,
        },
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RpropConfig {
    pub eta_plus: f64,
    pub eta_minus: f64,
    pub delta_init: f64,
    pub delta_min: f64,
    pub delta_max: f64,
}

impl Default for RpropConfig {
    fn default() -> Self {
        Self {
            eta_plus: 1.2,
            eta_minus: 0.5,
            delta_init: 0.1,
            delta_min: 1e-6,
            delta_max: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RpropState {
    pub config: RpropConfig,
    pub steps: Vec<f64>,
    pub previous_gradient: Vec<f64>,
}

impl RpropState {
    pub fn new(config: RpropConfig, parameter_count: usize) -> Self {
        Self {
            config,
            steps: vec![config.delta_init; parameter_count],
            previous_gradient: vec![0.0; parameter_count],
        }
    }
}

/// Sign-based update from a precomputed gradient.
///
/// Same sign as last step grows the step by `η+`; a sign flip shrinks it by
/// `η−` and clears the remembered gradient so the next step does not grow.
pub fn rprop_apply(params: &mut [f64], gradient: &[f64], state: &mut RpropState) {
    let c = state.config;
    for i in 0..params.len() {
        let g = gradient[i];
        let prod = g * state.previous_gradient[i];
        if prod > 0.0 {
            state.steps[i] = (state.steps[i] * c.eta_plus).min(c.delta_max);
            state.previous_gradient[i] = g;
        } else if prod < 0.0 {
            state.steps[i] = (state.steps[i] * c.eta_minus).max(c.delta_min);
            state.previous_gradient[i] = 0.0;
        } else {
            state.previous_gradient[i] = g;
        }
        if g != 0.0 {
            params[i] -= g.signum() * state.steps[i];
        }
    }
}

/// One Rprop step using parameter-shift gradients.
pub fn rprop_step<C: Cost + ?Sized>(
    cost: &C,
    params: &mut [f64],
    state: &mut RpropState,
    seeds: &mut SeedStream,
) -> CallCounter {
    let gradient = parameter_shift_gradient_all(cost, params, seeds);
    rprop_apply(params, &gradient, state);
    let n = params.len() as u64;
    CallCounter {
        requests: n,
        evaluations: 2 * n,
    }
}

/// Optimizer selection.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimizerConfig {
    #[default]
    Rotosolve,
    Rprop(RpropConfig),
}

/// Per-parameter-vector optimizer state; one `iterate` is a full Rotosolve
/// sweep or one Rprop step.
#[derive(Clone, Debug)]
pub enum Optimizer {
    Rotosolve(RotosolveState),
    Rprop(RpropState),
}

impl Optimizer {
    pub fn new(config: &OptimizerConfig, parameter_count: usize) -> Self {
        match config {
            OptimizerConfig::Rotosolve => Optimizer::Rotosolve(RotosolveState::default()),
            OptimizerConfig::Rprop(c) => Optimizer::Rprop(RpropState::new(*c, parameter_count)),
        }
    }

    pub fn iterate<C: Cost + ?Sized>(
        &mut self,
        cost: &C,
        params: &mut [f64],
        seeds: &mut SeedStream,
    ) -> CallCounter {
        match self {
            Optimizer::Rotosolve(state) => rotosolve_sweep(cost, params, state, seeds).1,
            Optimizer::Rprop(state) => rprop_step(cost, params, state, seeds),
        }
    }
}
