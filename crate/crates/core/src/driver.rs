//! VQE for the ground state, alternating Generator/Discriminator training
//! for excited levels, and warm-started dissociation sweeps.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::{build_generator, pad_parameters, AnsatzSpec, DepthSchedule};
use crate::dense;
use crate::objective::{
    spectral_bounds, DiscriminatorDiagnostics, EvaluationMode, ExcitedObjective, Ladder,
    LadderLevel, SpectralRangeMethod,
};
use crate::optim::{CallCounter, Cost, Optimizer, OptimizerConfig};
use crate::oracle::{exact_spectrum, Spectrum};
use crate::pauli::{PauliSum, MAX_DENSE_QUBITS};
use crate::seed::{self, SeedStream};
use crate::simulator::{Axis, Circuit, Entangler, StateVector};
use crate::{Error, Result};

/// Iteration counts and stopping rule. One iteration is a full Rotosolve
/// sweep or one Rprop step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Schedule {
    pub disc_iters_per_cycle: usize,
    pub gen_iters_per_cycle: usize,
    /// Maximum number of outer cycles per excited level.
    pub outer_cycles: usize,
    pub convergence_tol: f64,
    pub convergence_window: usize,
    /// Maximum optimizer iterations for the ground-state VQE.
    pub ground_max_iters: usize,
    /// Stop as soon as the convergence rule holds; when false every level
    /// runs exactly `outer_cycles` cycles.
    pub early_stop: bool,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            disc_iters_per_cycle: 2,
            gen_iters_per_cycle: 2,
            outer_cycles: 400,
            convergence_tol: 1e-6,
            convergence_window: 2,
            ground_max_iters: 400,
            early_stop: true,
        }
    }
}

impl Schedule {
    /// Two-qubit hardware preset: 2 ground sweeps, then 4 cycles of 2
    /// Discriminator and 2 Generator sweeps per level, no early stop.
    pub fn h2_hardware() -> Self {
        Self {
            outer_cycles: 4,
            ground_max_iters: 2,
            early_stop: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.disc_iters_per_cycle == 0
            || self.gen_iters_per_cycle == 0
            || self.outer_cycles == 0
            || self.convergence_window == 0
            || self.ground_max_iters == 0
        {
            return Err(Error::InvalidValue(
                "schedule counts must be at least 1".into(),
            ));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::InvalidValue(
                "convergence_tol must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Shots per estimate in sampled mode, ramped over outer cycles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShotSchedule {
    pub shots_per_outer_cycle: Vec<usize>,
    pub final_shots: usize,
    pub final_repeats: usize,
}

impl Default for ShotSchedule {
    fn default() -> Self {
        Self {
            shots_per_outer_cycle: vec![256, 1024, 4096, 8000],
            final_shots: 8000,
            final_repeats: 5,
        }
    }
}

impl ShotSchedule {
    pub fn validate(&self) -> Result<()> {
        let v = &self.shots_per_outer_cycle;
        if v.is_empty() || v.contains(&0) || self.final_shots == 0 || self.final_repeats == 0 {
            return Err(Error::InvalidValue("shot counts must be positive".into()));
        }
        if v.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidValue(
                "shot schedule must be non-decreasing".into(),
            ));
        }
        Ok(())
    }

    /// Shots for cycle (or ground iteration) `index`; the last entry repeats.
    pub fn shots_for(&self, index: usize) -> usize {
        let v = &self.shots_per_outer_cycle;
        v[index.min(v.len() - 1)]
    }
}

/// How `γ` is chosen for each excited level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GammaConfig {
    pub method: SpectralRangeMethod,
    pub rule: GammaRule,
    pub safety: f64,
    /// In sampled mode, cap `γ` at `safety · (E_max − E_min)`.
    pub cap_when_sampled: bool,
    /// Use this value for every level instead of the rule.
    pub fixed: Option<f64>,
}

/// How `γ` grows with the level being solved.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaRule {
    /// `safety · (level + 1) · range`.
    #[default]
    LevelScaled,
    /// `safety · 2 · range` at every level. With unit weights on the known
    /// states, a generated state leaking `ε` of a lower eigenstate pays about
    /// `γε/2` in separation and gains at most `ε(E_{n+1} − E_0)` in energy,
    /// so any `γ > 2(E_{n+1} − E_0)` keeps the target stable. Smaller `γ`
    /// converges in fewer cycles.
    TwiceRange,
}

impl GammaRule {
    fn factor(self, level: usize) -> f64 {
        match self {
            GammaRule::LevelScaled => level as f64 + 1.0,
            GammaRule::TwiceRange => 2.0,
        }
    }
}

impl Default for GammaConfig {
    fn default() -> Self {
        Self {
            method: SpectralRangeMethod::Exact,
            rule: GammaRule::LevelScaled,
            safety: 1.2,
            cap_when_sampled: true,
            fixed: None,
        }
    }
}

/// Everything that shapes a ladder solve except the Hamiltonian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DvqeSettings {
    pub axes: Vec<Axis>,
    pub entangler: Entangler,
    pub depths: DepthSchedule,
    pub optimizer: OptimizerConfig,
    pub schedule: Schedule,
    pub shots: ShotSchedule,
    pub gamma: GammaConfig,
    /// Fresh parameters are drawn from `U[−init_scale, init_scale]`.
    pub init_scale: f64,
    /// Uniform noise added to the inherited Generator angles of an excited
    /// level.
    pub generator_jitter: f64,
    /// Start each excited level's Discriminator from fresh random angles
    /// instead of the previous level's.
    pub fresh_discriminator: bool,
    /// Largest acceptable separation shortfall for a converged level.
    pub separation_tol: f64,
    /// Extra attempts for an excited level that stalls or fails to converge.
    pub restarts: usize,
    /// Restarts perturb the inherited Generator angles and draw fresh
    /// Discriminator angles uniformly in `[−restart_scale, restart_scale]`.
    pub restart_scale: f64,
}

impl Default for DvqeSettings {
    fn default() -> Self {
        Self {
            axes: vec![Axis::Y, Axis::X],
            entangler: Entangler::Cz,
            depths: DepthSchedule::h2(),
            optimizer: OptimizerConfig::Rotosolve,
            schedule: Schedule::default(),
            shots: ShotSchedule::default(),
            gamma: GammaConfig::default(),
            init_scale: 0.1,
            generator_jitter: 0.5,
            fresh_discriminator: false,
            separation_tol: 1e-4,
            restarts: 4,
            restart_scale: std::f64::consts::PI,
        }
    }
}

impl DvqeSettings {
    /// Hydrogen layout with the default schedule.
    pub fn h2() -> Self {
        Self::default()
    }

    /// Hydrogen layout on the short hardware schedule: a fixed 4 cycles of
    /// 2 + 2 sweeps and no restarts, 208 requests per excited level.
    pub fn h2_hardware() -> Self {
        Self {
            schedule: Schedule::h2_hardware(),
            restarts: 0,
            ..Self::default()
        }
    }

    /// Deeper circuits for arbitrary two-qubit Hamiltonians.
    pub fn two_qubit() -> Self {
        Self {
            depths: DepthSchedule::two_qubit(),
            ..Self::default()
        }
    }

    /// Seven levels of an arbitrary four-qubit Hamiltonian.
    pub fn four_qubit() -> Self {
        Self {
            axes: vec![Axis::Y, Axis::X, Axis::Z],
            depths: DepthSchedule::four_qubit(),
            schedule: Schedule {
                gen_iters_per_cycle: 5,
                outer_cycles: 1500,
                convergence_tol: 1e-4,
                ..Schedule::default()
            },
            gamma: GammaConfig {
                rule: GammaRule::TwiceRange,
                ..GammaConfig::default()
            },
            ..Self::default()
        }
    }

    /// Lithium hydride: the four-qubit layout stopped at a tighter
    /// tolerance, since its low gaps are a few hundredths of a Hartree.
    pub fn lih() -> Self {
        let mut s = Self::four_qubit();
        s.schedule.convergence_tol = 1e-6;
        s
    }

    pub fn validate(&self) -> Result<()> {
        self.depths.validate()?;
        self.schedule.validate()?;
        self.shots.validate()?;
        if !(self.gamma.safety >= 1.0) {
            return Err(Error::InvalidValue("γ safety factor must be ≥ 1".into()));
        }
        if let Some(g) = self.gamma.fixed {
            if !(g.is_finite() && g >= 0.0) {
                return Err(Error::InvalidValue(format!(
                    "fixed γ {g} must be finite and non-negative"
                )));
            }
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return Err(Error::InvalidValue(
                "init_scale must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// `(generator, discriminator)` specs for `level` on `qubits` system qubits.
    pub fn specs_for_level(&self, qubits: usize, level: usize) -> Result<(AnsatzSpec, AnsatzSpec)> {
        let (g, d) = self.depths.depth_for_level(level);
        Ok((
            AnsatzSpec::new(qubits, g, self.axes.clone(), self.entangler)?,
            AnsatzSpec::new(qubits + 1, d, self.axes.clone(), self.entangler)?,
        ))
    }
}

/// Per-cycle record of an excited-level run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle: usize,
    pub shots: Option<usize>,
    pub energy: f64,
    pub c_disc: f64,
    pub c_gen: f64,
}

/// Result of one rung of the ladder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    pub level: usize,
    pub energy: f64,
    pub converged: bool,
    pub theta: Vec<f64>,
    pub generator: AnsatzSpec,
    pub phi: Option<Vec<f64>>,
    pub discriminator: Option<AnsatzSpec>,
    pub gamma: Option<f64>,
    /// Energy after every ground iteration or excited cycle.
    pub energy_trace: Vec<f64>,
    pub cycles: Vec<CycleRecord>,
    /// Sampled-mode estimates averaged into `energy`.
    pub final_estimates: Vec<f64>,
    pub calls: CallCounter,
    pub call_log: String,
    /// Set when a frozen warm-started Discriminator had to be retrained.
    pub retrained: bool,
    /// Final `C_disc + n + 1` for `n + 1` known states; zero when the
    /// Discriminator separates the generated state from every known one.
    pub separation: Option<f64>,
    /// Training runs spent on this level, restarts included.
    pub attempts: usize,
    pub diagnostics: Option<DiscriminatorDiagnostics>,
    pub warnings: Vec<String>,
}

impl LevelResult {
    pub fn ladder_level(&self) -> LadderLevel {
        LadderLevel {
            theta: self.theta.clone(),
            energy: self.energy,
            generator: self.generator.clone(),
        }
    }
}

/// Every level of one Hamiltonian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderReport {
    pub qubit_count: usize,
    pub levels: Vec<LevelResult>,
    pub calls: CallCounter,
}

impl LadderReport {
    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy).collect()
    }

    pub fn converged(&self) -> bool {
        self.levels.iter().all(|l| l.converged)
    }

    pub fn to_ladder(&self, hamiltonian: PauliSum) -> Ladder {
        Ladder {
            hamiltonian,
            levels: self.levels.iter().map(LevelResult::ladder_level).collect(),
        }
    }
}

fn random_parameters(count: usize, scale: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| rng.random_range(-scale..=scale))
        .collect()
}

/// True when each of the last `window` consecutive changes is below `tol`
/// and the geometric tail projected from the last two changes is too.
///
/// Alternating training contracts linearly, with a rate that approaches one
/// as `γ` nears its threshold, so small steps alone can stop a run well short
/// of its fixed point.
pub fn window_converged(trace: &[f64], tol: f64, window: usize) -> bool {
    if trace.len() <= window {
        return false;
    }
    let steps: Vec<f64> = trace[trace.len() - window - 1..]
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .collect();
    if steps.iter().any(|&d| d >= tol) {
        return false;
    }
    let last = steps[steps.len() - 1];
    let prev = match trace.len() {
        n if n >= 3 => (trace[n - 2] - trace[n - 3]).abs(),
        _ => return true,
    };
    if last <= tol * 1e-3 {
        return true;
    }
    let rate = last / prev;
    rate < 1.0 && last * rate / (1.0 - rate) < tol
}

/// Whether the whole convergence window up to `index` was measured at the
/// final shot count; always true in exact mode.
fn ramp_done(settings: &DvqeSettings, mode: &EvaluationMode, index: usize) -> bool {
    mode.is_exact()
        || index + 1
            >= settings.shots.shots_per_outer_cycle.len() + settings.schedule.convergence_window
}

/// `tol` in exact mode. Sampled mode adds three standard errors of the
/// difference of two energy estimates, using `Σ c_i² / shots` as the
/// per-estimate variance bound, so a trace settled to shot noise stops.
fn stopping_tol(tol: f64, mode: &EvaluationMode, h: &PauliSum) -> f64 {
    match mode {
        EvaluationMode::Exact => tol,
        EvaluationMode::Sampled(s) => {
            let variance: f64 = h
                .terms()
                .iter()
                .filter(|t| !t.is_identity())
                .map(|t| t.coefficient().powi(2))
                .sum::<f64>()
                / s.shots as f64;
            tol + 3.0 * (2.0 * variance).sqrt()
        }
    }
}

fn mode_with_shots(mode: &EvaluationMode, shots: usize) -> EvaluationMode {
    match mode {
        EvaluationMode::Exact => EvaluationMode::Exact,
        EvaluationMode::Sampled(s) => EvaluationMode::Sampled(s.with_shots(shots)),
    }
}

fn shots_of(mode: &EvaluationMode) -> Option<usize> {
    match mode {
        EvaluationMode::Exact => None,
        EvaluationMode::Sampled(s) => Some(s.shots),
    }
}

/// Final energy: exact, or the mean of `final_repeats` estimates.
fn final_energy(
    h: &PauliSum,
    state: &crate::simulator::StateVector,
    settings: &DvqeSettings,
    mode: &EvaluationMode,
    seed: u64,
) -> Result<(f64, Vec<f64>)> {
    if mode.is_exact() {
        return Ok((mode.energy(h, state, 0)?, Vec::new()));
    }
    let m = mode_with_shots(mode, settings.shots.final_shots);
    let estimates = (0..settings.shots.final_repeats)
        .map(|r| m.energy(h, state, seed::derive(seed, &[r as u64])))
        .collect::<Result<Vec<_>>>()?;
    Ok((
        estimates.iter().sum::<f64>() / estimates.len() as f64,
        estimates,
    ))
}

/// Dense `H` when exact-mode sweeps can run on dense operators.
fn dense_hamiltonian(
    h: &PauliSum,
    generator: &Circuit,
    mode: &EvaluationMode,
) -> Result<Option<dense::Operator>> {
    if mode.is_exact() && dense::supports(generator) {
        Ok(Some(h.dense_matrix()?))
    } else {
        Ok(None)
    }
}

fn dense_zero(qubits: usize) -> dense::Operator {
    dense::projector(&StateVector::zero(qubits))
}

/// One Discriminator iteration, on dense operators when `dense` allows.
fn disc_iterate<C: Cost>(
    objective: &ExcitedObjective,
    optimizer: &mut Optimizer,
    cost: &C,
    dense: bool,
    generated: &StateVector,
    phi: &mut [f64],
    seeds: &mut SeedStream,
) -> CallCounter {
    if dense {
        let mut inputs = vec![(1.0, generated)];
        inputs.extend(objective.known_states().iter().map(|s| (-1.0, s)));
        let rho = dense::with_ancilla_density(&inputs);
        let n = objective.discriminator().qubit_count();
        if let Some(c) = dense::iterate(
            optimizer,
            objective.discriminator(),
            phi,
            rho,
            &dense::ancilla_zero_projector(n),
            seeds,
        ) {
            return c;
        }
    }
    optimizer.iterate(cost, phi, seeds)
}

/// Minimizes `⟨0|G†HG|0⟩`. `init` of `None` starts from small random angles.
/// Non-convergence is reported in the result, not as an error.
pub fn solve_ground(
    h: &PauliSum,
    spec: &AnsatzSpec,
    init: Option<&[f64]>,
    settings: &DvqeSettings,
    mode: &EvaluationMode,
    seed: u64,
) -> Result<LevelResult> {
    if spec.qubit_count != h.qubit_count() {
        return Err(Error::DimensionMismatch {
            expected: h.qubit_count(),
            actual: spec.qubit_count,
        });
    }
    let generator = build_generator(spec)?;
    let mut theta = match init {
        Some(t) if t.len() != spec.parameter_count() => {
            return Err(Error::ParameterCount {
                expected: spec.parameter_count(),
                actual: t.len(),
            })
        }
        Some(t) => t.to_vec(),
        None => random_parameters(
            spec.parameter_count(),
            settings.init_scale,
            seed::derive(seed, &[0]),
        ),
    };
    let sched = &settings.schedule;
    let mut optimizer = Optimizer::new(&settings.optimizer, theta.len());
    let dense_h = dense_hamiltonian(h, &generator, mode)?;
    let mut calls = CallCounter::default();
    let mut trace = Vec::new();
    let mut converged = false;
    for it in 0..sched.ground_max_iters {
        let m = mode_with_shots(mode, settings.shots.shots_for(it));
        let cost = |p: &[f64], s: u64| {
            generator
                .run(p)
                .and_then(|st| m.energy(h, &st, s))
                .expect("circuit and Hamiltonian shapes checked")
        };
        let mut seeds = SeedStream::new(seed::derive(seed, &[1, it as u64]));
        let swept = dense_h.as_ref().and_then(|hd| {
            dense::iterate(
                &optimizer,
                &generator,
                &mut theta,
                dense_zero(h.qubit_count()),
                hd,
                &mut seeds,
            )
        });
        calls += match swept {
            Some(c) => c,
            None => optimizer.iterate(&cost, &mut theta, &mut seeds),
        };
        trace.push(m.energy(
            h,
            &generator.run(&theta)?,
            seed::derive(seed, &[2, it as u64]),
        )?);
        if ramp_done(settings, mode, it)
            && window_converged(
                &trace,
                stopping_tol(sched.convergence_tol, &m, h),
                sched.convergence_window,
            )
        {
            converged = true;
            if sched.early_stop {
                break;
            }
        }
    }
    let (energy, final_estimates) = final_energy(
        h,
        &generator.run(&theta)?,
        settings,
        mode,
        seed::derive(seed, &[3]),
    )?;
    let call_log = format!(
        "{} iterations × {} parameters = {} requests",
        trace.len(),
        theta.len(),
        calls.requests
    );
    Ok(LevelResult {
        level: 0,
        energy,
        converged,
        theta,
        generator: spec.clone(),
        phi: None,
        discriminator: None,
        gamma: None,
        energy_trace: trace,
        cycles: Vec::new(),
        final_estimates,
        calls,
        call_log,
        retrained: false,
        separation: None,
        attempts: 1,
        diagnostics: None,
        warnings: Vec::new(),
    })
}

/// Starting point of an excited-level run.
#[derive(Clone, Debug)]
pub struct ExcitedStart {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    /// Train the Generator alone first and only retrain the Discriminator if
    /// one Discriminator iteration still improves its cost.
    pub frozen_discriminator: bool,
}

/// Trains level `ladder.len()` by alternating Discriminator and Generator
/// iterations.
#[allow(clippy::too_many_arguments)]
pub fn solve_excited(
    ladder: &Ladder,
    generator: &AnsatzSpec,
    discriminator: &AnsatzSpec,
    gamma: f64,
    start: ExcitedStart,
    settings: &DvqeSettings,
    mode: &EvaluationMode,
    spectrum: Option<&Spectrum>,
    seed: u64,
) -> Result<LevelResult> {
    let level = ladder.len();
    if level == 0 {
        return Err(Error::EmptyLadder);
    }
    let objective = ExcitedObjective::new(ladder, generator, discriminator, gamma)?;
    let ExcitedStart {
        mut theta,
        mut phi,
        frozen_discriminator,
    } = start;
    if theta.len() != generator.parameter_count() {
        return Err(Error::ParameterCount {
            expected: generator.parameter_count(),
            actual: theta.len(),
        });
    }
    if phi.len() != discriminator.parameter_count() {
        return Err(Error::ParameterCount {
            expected: discriminator.parameter_count(),
            actual: phi.len(),
        });
    }
    let sched = &settings.schedule;
    let n = objective.hamiltonian().qubit_count();
    let dense_h = match dense::supports(objective.discriminator()) {
        true => dense_hamiltonian(objective.hamiltonian(), objective.generator(), mode)?,
        false => None,
    };
    let mut gen_opt = Optimizer::new(&settings.optimizer, theta.len());
    let mut disc_opt = Optimizer::new(&settings.optimizer, phi.len());
    let mut disc_calls = CallCounter::default();
    let mut gen_calls = CallCounter::default();
    let mut disc_iters = 0usize;
    let mut gen_iters = 0usize;
    let mut cycles = Vec::new();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut retrained = false;
    let mut train_disc = !frozen_discriminator;
    let mut cycle = 0usize;
    let mut stalled = false;

    while cycle < sched.outer_cycles {
        if !train_disc && cycle >= sched.outer_cycles / 2 {
            log::info!("level {level}: frozen discriminator did not converge, retraining");
            retrained = true;
            train_disc = true;
            trace.clear();
        }
        let m = mode_with_shots(mode, settings.shots.shots_for(cycle));
        let cycle_seed = seed::derive(seed, &[cycle as u64]);
        if train_disc {
            let generated = objective.generated_state(&theta)?;
            let cost = |p: &[f64], s: u64| {
                objective
                    .c_disc_for_state(p, &generated, &m, s)
                    .expect("discriminator shapes checked")
            };
            let mut seeds = SeedStream::new(seed::derive(cycle_seed, &[1]));
            for _ in 0..sched.disc_iters_per_cycle {
                disc_calls += disc_iterate(
                    &objective,
                    &mut disc_opt,
                    &cost,
                    dense_h.is_some(),
                    &generated,
                    &mut phi,
                    &mut seeds,
                );
                disc_iters += 1;
            }
        }
        {
            let cost = |p: &[f64], s: u64| {
                objective
                    .c_gen(p, &phi, &m, s)
                    .expect("generator shapes checked")
            };
            let mut seeds = SeedStream::new(seed::derive(cycle_seed, &[2]));
            // The Discriminator is fixed here, so its acceptance folds into
            // one operator.
            let observable = dense_h.as_ref().map(|hd| {
                hd + dense::acceptance_operator(objective.discriminator(), &phi)
                    * Complex64::from(gamma)
            });
            for _ in 0..sched.gen_iters_per_cycle {
                let swept = observable.as_ref().and_then(|o| {
                    dense::iterate(
                        &gen_opt,
                        objective.generator(),
                        &mut theta,
                        dense_zero(n),
                        o,
                        &mut seeds,
                    )
                });
                gen_calls += match swept {
                    Some(c) => c,
                    None => gen_opt.iterate(&cost, &mut theta, &mut seeds),
                };
                gen_iters += 1;
            }
        }
        let record_seed = seed::derive(cycle_seed, &[3]);
        let energy = objective.energy(&theta, &m, seed::derive(record_seed, &[0]))?;
        cycles.push(CycleRecord {
            cycle,
            shots: shots_of(&m),
            energy,
            c_disc: objective.c_disc(&phi, &theta, &m, seed::derive(record_seed, &[1]))?,
            c_gen: objective.c_gen(&theta, &phi, &m, seed::derive(record_seed, &[2]))?,
        });
        trace.push(energy);
        cycle += 1;

        if ramp_done(settings, mode, cycle - 1)
            && window_converged(
                &trace,
                stopping_tol(sched.convergence_tol, &m, objective.hamiltonian()),
                sched.convergence_window,
            )
        {
            if !train_disc {
                // Check the frozen Discriminator with one extra iteration.
                let generated = objective.generated_state(&theta)?;
                let cost = |p: &[f64], s: u64| {
                    objective
                        .c_disc_for_state(p, &generated, &m, s)
                        .expect("discriminator shapes checked")
                };
                let before = cost(&phi, seed::derive(cycle_seed, &[4]));
                let mut seeds = SeedStream::new(seed::derive(cycle_seed, &[5]));
                disc_calls += disc_iterate(
                    &objective,
                    &mut disc_opt,
                    &cost,
                    dense_h.is_some(),
                    &generated,
                    &mut phi,
                    &mut seeds,
                );
                disc_iters += 1;
                let after = cost(&phi, seed::derive(cycle_seed, &[6]));
                if before - after > sched.convergence_tol {
                    log::info!("level {level}: warm-started discriminator is stale, retraining");
                    retrained = true;
                    train_disc = true;
                    trace.clear();
                    continue;
                }
            }
            let shortfall = separation_shortfall(&objective, &theta, cycles.last(), mode, level)?;
            if shortfall > separation_tolerance(settings, mode, level) {
                // Settled without separating the generated state from the
                // known ones: a saddle of the joint value, not a solution.
                log::info!("level {level}: stalled with separation shortfall {shortfall}");
                stalled = true;
                break;
            }
            converged = true;
            if sched.early_stop {
                break;
            }
        }
    }

    let (energy, final_estimates) = final_energy(
        objective.hamiltonian(),
        &objective.generated_state(&theta)?,
        settings,
        mode,
        seed::derive(seed, &[u64::MAX]),
    )?;
    let diagnostics = match spectrum {
        Some(s) if mode.is_exact() => Some(objective.diagnostics(&phi, &theta, mode, s)?),
        _ => None,
    };
    let mut calls = disc_calls;
    calls += gen_calls;
    let call_log = format!(
        "{} cycles: discriminator {} iterations ({} requests, {} parameters) + generator {} iterations ({} requests, {} parameters) = {} requests",
        cycles.len(),
        disc_iters,
        disc_calls.requests,
        phi.len(),
        gen_iters,
        gen_calls.requests,
        theta.len(),
        calls.requests
    );
    if !converged && !stalled {
        log::warn!(
            "level {level} did not converge within {} cycles",
            sched.outer_cycles
        );
    }
    let separation = match cycles.last() {
        Some(c) => Some(separation_shortfall(
            &objective,
            &theta,
            Some(c),
            mode,
            level,
        )?),
        None => None,
    };
    Ok(LevelResult {
        level,
        energy,
        converged,
        theta,
        generator: generator.clone(),
        phi: Some(phi),
        discriminator: Some(discriminator.clone()),
        gamma: Some(gamma),
        energy_trace: trace,
        cycles,
        final_estimates,
        calls,
        call_log,
        retrained,
        separation,
        attempts: 1,
        diagnostics,
        warnings: Vec::new(),
    })
}

/// How far the last recorded `C_disc` sits above the best any Discriminator
/// could do. Exact mode measures from the floor set by the actual overlaps
/// of the generated and known states, sampled mode from `−level`.
fn separation_shortfall(
    objective: &ExcitedObjective,
    theta: &[f64],
    last: Option<&CycleRecord>,
    mode: &EvaluationMode,
    level: usize,
) -> Result<f64> {
    let Some(c) = last else {
        return Ok(f64::INFINITY);
    };
    let floor = match mode {
        EvaluationMode::Exact => objective.c_disc_floor(&objective.generated_state(theta)?)?,
        EvaluationMode::Sampled(_) => -(level as f64),
    };
    Ok(c.c_disc - floor)
}

fn separation_key(r: &LevelResult) -> f64 {
    r.separation.unwrap_or(f64::INFINITY)
}

/// A level is kept when it converged (exact mode), separates the generated
/// state from the known ones, and does not undercut the level below it.
fn acceptable_level(
    r: &LevelResult,
    previous_energy: f64,
    settings: &DvqeSettings,
    mode: &EvaluationMode,
) -> bool {
    let separated = r
        .separation
        .is_some_and(|s| s <= separation_tolerance(settings, mode, r.level));
    match mode {
        EvaluationMode::Exact => {
            r.converged
                && separated
                && r.energy >= previous_energy - 2.0 * settings.schedule.convergence_tol
        }
        EvaluationMode::Sampled(_) => separated,
    }
}

/// `separation_tol`, widened in sampled mode by four standard errors of a
/// sum of `level + 1` ancilla estimates at the final shot count.
fn separation_tolerance(settings: &DvqeSettings, mode: &EvaluationMode, level: usize) -> f64 {
    match mode {
        EvaluationMode::Exact => settings.separation_tol,
        EvaluationMode::Sampled(_) => {
            let shots = settings.shots.shots_for(usize::MAX) as f64;
            settings.separation_tol + 4.0 * ((level as f64 + 1.0) / (4.0 * shots)).sqrt()
        }
    }
}

/// `γ = safety · factor · range` with the factor from the rule, capped at
/// `safety · range` in sampled mode when configured.
pub fn gamma_for_level(config: &GammaConfig, level: usize, range: f64, sampled: bool) -> f64 {
    if let Some(g) = config.fixed {
        return g;
    }
    let g = config.safety * config.rule.factor(level) * range;
    if sampled && config.cap_when_sampled {
        g.min(config.safety * range)
    } else {
        g
    }
}

/// Solves `levels` rungs (ground state included). `warm` seeds each level's
/// parameters from a neighbouring solution and freezes its Discriminator.
pub fn solve_ladder(
    h: &PauliSum,
    levels: usize,
    settings: &DvqeSettings,
    mode: &EvaluationMode,
    seed: u64,
    warm: Option<&LadderReport>,
) -> Result<LadderReport> {
    settings.validate()?;
    if levels == 0 {
        return Err(Error::InvalidValue("at least one level is required".into()));
    }
    let n = h.qubit_count();
    if levels > 1 << n {
        return Err(Error::InvalidValue(format!(
            "{levels} levels requested but the Hilbert space has dimension {}",
            1usize << n
        )));
    }
    if let Some(w) = warm {
        if w.qubit_count != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: w.qubit_count,
            });
        }
    }
    let spectrum = if mode.is_exact() && n <= 8 {
        Some(exact_spectrum(h)?)
    } else {
        None
    };
    let range = if levels > 1 && settings.gamma.fixed.is_none() {
        let (lo, hi) = spectral_bounds(h, &settings.gamma.method)?;
        hi - lo
    } else {
        0.0
    };

    let mut report = LadderReport {
        qubit_count: n,
        levels: Vec::with_capacity(levels),
        calls: CallCounter::default(),
    };
    let mut ladder = Ladder::new(h.clone());
    let warm_level = |l: usize| warm.and_then(|w| w.levels.get(l));
    let tol = settings.schedule.convergence_tol;

    for level in 0..levels {
        let level_seed = seed::derive(seed, &[level as u64]);
        let (gen_spec, disc_spec) = settings.specs_for_level(n, level)?;
        let mut result = if level == 0 {
            let init = match warm_level(0) {
                Some(w) => Some(pad_parameters(&w.theta, &w.generator, &gen_spec)?),
                None => None,
            };
            solve_ground(h, &gen_spec, init.as_deref(), settings, mode, level_seed)?
        } else {
            let prev = &report.levels[level - 1];
            let (base_theta, base_phi, frozen) = match warm_level(level) {
                Some(w) if w.phi.is_some() && w.discriminator.is_some() => (
                    pad_parameters(&w.theta, &w.generator, &gen_spec)?,
                    Some(pad_parameters(
                        w.phi.as_ref().expect("checked"),
                        w.discriminator.as_ref().expect("checked"),
                        &disc_spec,
                    )?),
                    true,
                ),
                _ => {
                    let theta = pad_parameters(&prev.theta, &prev.generator, &gen_spec)?;
                    let phi = match (&prev.phi, &prev.discriminator) {
                        (Some(p), Some(s)) if !settings.fresh_discriminator => {
                            Some(pad_parameters(p, s, &disc_spec)?)
                        }
                        _ => None,
                    };
                    (theta, phi, false)
                }
            };
            let gamma = gamma_for_level(&settings.gamma, level, range, !mode.is_exact());
            let mut best: Option<LevelResult> = None;
            let mut spent = CallCounter::default();
            let mut attempts = 0;
            for attempt in 0..=settings.restarts {
                let (jitter, disc_scale) = if attempt == 0 {
                    (settings.generator_jitter, settings.init_scale)
                } else {
                    (settings.restart_scale, settings.restart_scale)
                };
                let attempt_seed = seed::derive(level_seed, &[attempt as u64]);
                let mut theta = base_theta.clone();
                let noise =
                    random_parameters(theta.len(), jitter, seed::derive(attempt_seed, &[0]));
                theta.iter_mut().zip(noise).for_each(|(t, j)| *t += j);
                let phi = match (&base_phi, attempt) {
                    (Some(p), 0) => p.clone(),
                    _ => random_parameters(
                        disc_spec.parameter_count(),
                        disc_scale,
                        seed::derive(attempt_seed, &[1]),
                    ),
                };
                let result = solve_excited(
                    &ladder,
                    &gen_spec,
                    &disc_spec,
                    gamma,
                    ExcitedStart {
                        theta,
                        phi,
                        frozen_discriminator: frozen && attempt == 0,
                    },
                    settings,
                    mode,
                    spectrum.as_ref(),
                    seed::derive(attempt_seed, &[2]),
                )?;
                spent += result.calls;
                attempts += 1;
                let acceptable = acceptable_level(&result, prev.energy, settings, mode);
                let better = match &best {
                    None => true,
                    Some(b) => separation_key(&result) < separation_key(b),
                };
                if acceptable || better {
                    best = Some(result);
                }
                if acceptable {
                    break;
                }
                log::info!("level {level}: attempt {attempt} rejected, restarting");
            }
            let mut result = best.expect("at least one attempt runs");
            result.calls = spent;
            result.attempts = attempts;
            result
        };
        if let Some(prev) = report.levels.last() {
            if result.energy < prev.energy - 2.0 * tol {
                let msg = format!(
                    "level {level} energy {} is below level {} energy {}",
                    result.energy,
                    level - 1,
                    prev.energy
                );
                log::warn!("{msg}");
                result.warnings.push(msg);
            }
        }
        report.calls += result.calls;
        ladder.levels.push(result.ladder_level());
        report.levels.push(result);
    }
    Ok(report)
}

/// Bond distances and their Hamiltonian files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub bond_distances: Vec<f64>,
    pub anchor_distance: f64,
    /// Distance (as written in `bond_distances`) to Hamiltonian file path,
    /// relative paths resolved against the plan's directory.
    pub hamiltonian_files: BTreeMap<String, PathBuf>,
    pub levels: usize,
}

impl SweepPlan {
    pub fn load(path: &Path) -> Result<(Self, Vec<SweepPoint>)> {
        let text = std::fs::read_to_string(path)?;
        let plan: SweepPlan = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let points = plan.resolve(base)?;
        Ok((plan, points))
    }

    pub fn validate(&self) -> Result<()> {
        if self.bond_distances.is_empty() {
            return Err(Error::InvalidValue(
                "sweep plan lists no bond distances".into(),
            ));
        }
        if self.bond_distances.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidValue(
                "bond distances must be strictly increasing".into(),
            ));
        }
        if !self.bond_distances.contains(&self.anchor_distance) {
            return Err(Error::InvalidValue(format!(
                "anchor distance {} is not among the bond distances",
                self.anchor_distance
            )));
        }
        if self.levels == 0 {
            return Err(Error::InvalidValue("sweep needs at least one level".into()));
        }
        Ok(())
    }

    fn file_for(&self, distance: f64) -> Result<&PathBuf> {
        self.hamiltonian_files
            .iter()
            .find(|(k, _)| k.trim().parse::<f64>().is_ok_and(|v| v == distance))
            .map(|(_, p)| p)
            .ok_or_else(|| {
                Error::InvalidValue(format!("no Hamiltonian file for distance {distance}"))
            })
    }

    /// Reads every Hamiltonian.
    pub fn resolve(&self, base: &Path) -> Result<Vec<SweepPoint>> {
        self.validate()?;
        self.bond_distances
            .iter()
            .map(|&d| {
                let rel = self.file_for(d)?;
                let path = if rel.is_absolute() {
                    rel.clone()
                } else {
                    base.join(rel)
                };
                let text = std::fs::read_to_string(&path)?;
                let hamiltonian = text.parse::<PauliSum>().map_err(|e| match e {
                    Error::Parse { line, message } => Error::Parse {
                        line,
                        message: format!("{}: {message}", path.display()),
                    },
                    other => other,
                })?;
                Ok(SweepPoint {
                    distance: d,
                    hamiltonian,
                })
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub distance: f64,
    pub hamiltonian: PauliSum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPointReport {
    pub distance: f64,
    pub anchor: bool,
    /// Distance whose parameters seeded this point.
    pub warm_start_from: Option<f64>,
    pub ladder: Option<LadderReport>,
    /// Oracle eigenvalues for the solved levels, when diagonalization fits.
    pub oracle: Option<Vec<f64>>,
    pub error: Option<String>,
}

impl SweepPointReport {
    pub fn failed(&self) -> bool {
        self.error.is_some() || self.ladder.as_ref().is_some_and(|l| !l.converged())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub levels: usize,
    pub points: Vec<SweepPointReport>,
}

fn oracle_energies(h: &PauliSum, levels: usize) -> Option<Vec<f64>> {
    if h.qubit_count() > MAX_DENSE_QUBITS {
        return None;
    }
    exact_spectrum(h)
        .ok()
        .map(|s| s.eigenvalues.into_iter().take(levels).collect())
}

fn solve_point(
    point: &SweepPoint,
    levels: usize,
    settings: &DvqeSettings,
    mode: &EvaluationMode,
    seed: u64,
    warm: Option<(f64, &LadderReport)>,
    anchor: bool,
) -> SweepPointReport {
    let result = solve_ladder(
        &point.hamiltonian,
        levels,
        settings,
        mode,
        seed,
        warm.map(|w| w.1),
    );
    let (ladder, error) = match result {
        Ok(l) => (Some(l), None),
        Err(e) => {
            log::error!("sweep point {}: {e}", point.distance);
            (None, Some(e.to_string()))
        }
    };
    SweepPointReport {
        distance: point.distance,
        anchor,
        warm_start_from: warm.map(|w| w.0),
        ladder,
        oracle: oracle_energies(&point.hamiltonian, levels),
        error,
    }
}

/// Solves one side of the sweep in order, each point seeded from the
/// previous one (or the anchor for the first).
fn sweep_side(
    points: &[(usize, &SweepPoint)],
    anchor: &SweepPointReport,
    levels: usize,
    settings: &DvqeSettings,
    mode: &EvaluationMode,
    seed: u64,
) -> Vec<SweepPointReport> {
    let mut out: Vec<SweepPointReport> = Vec::with_capacity(points.len());
    for &(index, point) in points {
        let neighbour = out
            .iter()
            .rev()
            .chain(std::iter::once(anchor))
            .find(|r| r.ladder.is_some())
            .map(|r| (r.distance, r.ladder.as_ref().expect("filtered")));
        let report = solve_point(
            point,
            levels,
            settings,
            mode,
            seed::derive(seed, &[index as u64 + 1]),
            neighbour,
            false,
        );
        out.push(report);
    }
    out
}

/// Solves the anchor first, then walks outward in both directions, warm
/// starting every point from its nearest solved neighbour. The anchor uses
/// the root seed itself, so a single-point sweep reproduces a plain solve.
pub fn sweep(
    points: &[SweepPoint],
    anchor_distance: f64,
    levels: usize,
    settings: &DvqeSettings,
    mode: &EvaluationMode,
    seed: u64,
) -> Result<SweepReport> {
    let anchor_index = points
        .iter()
        .position(|p| p.distance == anchor_distance)
        .ok_or_else(|| Error::InvalidValue(format!("anchor {anchor_distance} not in sweep")))?;
    let anchor = solve_point(
        &points[anchor_index],
        levels,
        settings,
        mode,
        seed,
        None,
        true,
    );
    let below: Vec<(usize, &SweepPoint)> =
        (0..anchor_index).rev().map(|i| (i, &points[i])).collect();
    let above: Vec<(usize, &SweepPoint)> = (anchor_index + 1..points.len())
        .map(|i| (i, &points[i]))
        .collect();
    let (mut low, high) = rayon::join(
        || sweep_side(&below, &anchor, levels, settings, mode, seed),
        || sweep_side(&above, &anchor, levels, settings, mode, seed),
    );
    low.reverse();
    let mut all = low;
    all.push(anchor);
    all.extend(high);
    Ok(SweepReport {
        levels,
        points: all,
    })
}

/// `distance,level,energy,oracle,abs_error,converged` per solved level;
/// failed points get a row per level with empty numeric fields.
pub fn sweep_csv(report: &SweepReport) -> String {
    let mut out = String::from("distance,level,energy,oracle,abs_error,status\n");
    for p in &report.points {
        for level in 0..report.levels {
            let oracle = p.oracle.as_ref().and_then(|o| o.get(level).copied());
            match p.ladder.as_ref().and_then(|l| l.levels.get(level)) {
                Some(r) => {
                    let status = if r.converged { "ok" } else { "unconverged" };
                    let _ = match oracle {
                        Some(o) => writeln!(
                            out,
                            "{},{},{},{},{},{}",
                            p.distance,
                            level,
                            r.energy,
                            o,
                            (r.energy - o).abs(),
                            status
                        ),
                        None => writeln!(out, "{},{},{},,,{}", p.distance, level, r.energy, status),
                    };
                }
                None => {
                    let _ = writeln!(out, "{},{},,,,failed", p.distance, level);
                }
            }
        }
    }
    out
}

/// Mean and max absolute error per level over all solved points.
pub fn errors_by_level_csv(report: &SweepReport) -> String {
    let mut out = String::from("level,points,mean_abs_error,max_abs_error\n");
    for level in 0..report.levels {
        let errors: Vec<f64> = report
            .points
            .iter()
            .filter_map(|p| {
                let e = p.ladder.as_ref()?.levels.get(level)?.energy;
                let o = *p.oracle.as_ref()?.get(level)?;
                Some((e - o).abs())
            })
            .collect();
        if errors.is_empty() {
            let _ = writeln!(out, "{level},0,,");
        } else {
            let mean = errors.iter().sum::<f64>() / errors.len() as f64;
            let max = errors.iter().cloned().fold(0.0, f64::max);
            let _ = writeln!(out, "{level},{},{mean},{max}", errors.len());
        }
    }
    out
}

/// `level,energy,converged,gamma,requests` for one ladder.
pub fn ladder_csv(report: &LadderReport) -> String {
    let mut out = String::from("level,energy,converged,gamma,requests\n");
    for l in &report.levels {
        let gamma = l.gamma.map(|g| g.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            l.level, l.energy, l.converged, gamma, l.calls.requests
        );
    }
    out
}
