//! Hardware-efficient Generator and Discriminator circuits.
//!
//! A layer is a rotation about each configured axis on every qubit followed
//! by a nearest-neighbour entangler ladder `(0,1), (1,2), …`. Parameters are
//! numbered layer-major, then by qubit, then by axis.

use serde::{Deserialize, Serialize};

use crate::simulator::{Axis, Circuit, Entangler, Gate};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub qubit_count: usize,
    pub layers: usize,
    pub axes: Vec<Axis>,
    #[serde(default)]
    pub entangler: Entangler,
}

impl AnsatzSpec {
    pub fn new(
        qubit_count: usize,
        layers: usize,
        axes: Vec<Axis>,
        entangler: Entangler,
    ) -> Result<Self> {
        let spec = Self {
            qubit_count,
            layers,
            axes,
            entangler,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.qubit_count == 0 {
            return Err(Error::InvalidValue(
                "ansatz needs at least one qubit".into(),
            ));
        }
        if self.layers == 0 {
            return Err(Error::InvalidValue(
                "ansatz needs at least one layer".into(),
            ));
        }
        if self.axes.is_empty() {
            return Err(Error::InvalidValue(
                "ansatz needs at least one rotation axis".into(),
            ));
        }
        for (i, a) in self.axes.iter().enumerate() {
            if self.axes[..i].contains(a) {
                return Err(Error::InvalidValue(format!("rotation axis {a} repeated")));
            }
        }
        Ok(())
    }

    pub fn parameter_count(&self) -> usize {
        self.layers * self.qubit_count * self.axes.len()
    }

    pub fn parameters_per_layer(&self) -> usize {
        self.qubit_count * self.axes.len()
    }

    pub fn with_layers(&self, layers: usize) -> Self {
        Self {
            layers,
            ..self.clone()
        }
    }

    pub fn with_qubits(&self, qubit_count: usize) -> Self {
        Self {
            qubit_count,
            ..self.clone()
        }
    }
}

fn build_layers(spec: &AnsatzSpec) -> Result<Circuit> {
    spec.validate()?;
    let n = spec.qubit_count;
    let mut gates = Vec::with_capacity(spec.parameter_count() + spec.layers * n.saturating_sub(1));
    let mut parameter = 0;
    for _ in 0..spec.layers {
        for qubit in 0..n {
            for &axis in &spec.axes {
                gates.push(Gate::Rotation {
                    axis,
                    qubit,
                    parameter,
                });
                parameter += 1;
            }
        }
        for q in 0..n.saturating_sub(1) {
            gates.push(Gate::Entangler {
                kind: spec.entangler,
                control: q,
                target: q + 1,
            });
        }
    }
    Circuit::new(n, parameter, gates)
}

/// Generator `G(θ)` on the system register.
pub fn build_generator(spec: &AnsatzSpec) -> Result<Circuit> {
    build_layers(spec)
}

/// Discriminator `D(φ)` on system qubits plus one ancilla, which is the
/// highest-index qubit and takes part in every layer.
pub fn build_discriminator(spec: &AnsatzSpec) -> Result<Circuit> {
    if spec.qubit_count < 2 {
        return Err(Error::InvalidValue(
            "discriminator needs at least one system qubit and the ancilla".into(),
        ));
    }
    build_layers(spec)
}

/// Extends a parameter vector trained on `from` to the deeper `to` by
/// appending zero-angle layers. With a CZ ladder every pair of appended
/// layers multiplies to the identity.
pub fn pad_parameters(params: &[f64], from: &AnsatzSpec, to: &AnsatzSpec) -> Result<Vec<f64>> {
    if from.qubit_count != to.qubit_count || from.axes != to.axes {
        return Err(Error::InvalidValue(
            "warm start requires matching qubit count and rotation axes".into(),
        ));
    }
    if params.len() != from.parameter_count() {
        return Err(Error::ParameterCount {
            expected: from.parameter_count(),
            actual: params.len(),
        });
    }
    let mut out = params.to_vec();
    out.resize(to.parameter_count(), 0.0);
    Ok(out)
}

/// Layer counts per excitation level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepthSchedule {
    pub generator_layers: Vec<usize>,
    pub discriminator_layers: Vec<usize>,
}

impl DepthSchedule {
    pub fn new(generator_layers: Vec<usize>, discriminator_layers: Vec<usize>) -> Result<Self> {
        let s = Self {
            generator_layers,
            discriminator_layers,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("generator", &self.generator_layers),
            ("discriminator", &self.discriminator_layers),
        ] {
            if v.is_empty() || v.contains(&0) {
                return Err(Error::InvalidValue(format!(
                    "{name} depth schedule needs positive entries"
                )));
            }
            if v.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::InvalidValue(format!(
                    "{name} depth schedule must be non-decreasing"
                )));
            }
        }
        Ok(())
    }

    /// The same depths for the first `levels` levels.
    pub fn constant(generator: usize, discriminator: usize, levels: usize) -> Self {
        Self {
            generator_layers: vec![generator; levels.max(1)],
            discriminator_layers: vec![discriminator; levels.max(1)],
        }
    }

    /// Two-qubit hydrogen layout: 2 generator layers, 3 discriminator layers
    /// for the first excited state, 4 for the second and 6 for the third.
    pub fn h2() -> Self {
        Self {
            generator_layers: vec![2, 2, 2, 2],
            discriminator_layers: vec![3, 3, 4, 6],
        }
    }

    /// Four-qubit lithium-hydride layout: generator depth 4 and
    /// discriminator depth 6 then 8 through the third excited state.
    pub fn lih() -> Self {
        Self {
            generator_layers: vec![4, 4, 4, 4],
            discriminator_layers: vec![6, 6, 8, 8],
        }
    }

    /// Two-qubit layout for arbitrary complex Hamiltonians. A Discriminator
    /// that separates `K` known states from the generated one needs about
    /// `2·2^n·(K+1)` angles; these depths leave some slack.
    pub fn two_qubit() -> Self {
        Self {
            generator_layers: vec![3, 3, 3, 3],
            discriminator_layers: vec![4, 4, 5, 6],
        }
    }

    /// Four-qubit layout for seven levels with `Y, X, Z` rotations.
    pub fn four_qubit() -> Self {
        Self {
            generator_layers: vec![6; 7],
            discriminator_layers: vec![8, 8, 10, 12, 14, 16, 18],
        }
    }

    /// `(generator_layers, discriminator_layers)` for `level`. Levels past
    /// the last explicit entry grow both circuits by two layers per level.
    pub fn depth_for_level(&self, level: usize) -> (usize, usize) {
        (
            extrapolate(&self.generator_layers, level),
            extrapolate(&self.discriminator_layers, level),
        )
    }
}

fn extrapolate(v: &[usize], level: usize) -> usize {
    match v.get(level) {
        Some(&d) => d,
        None => v[v.len() - 1] + 2 * (level + 1 - v.len()),
    }
}

/// Free-function form of [`DepthSchedule::depth_for_level`].
pub fn depth_for_level(schedule: &DepthSchedule, level: usize) -> (usize, usize) {
    schedule.depth_for_level(level)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn yx() -> Vec<Axis> {
        vec![Axis::Y, Axis::X]
    }

    #[test]
    fn generator_parameter_counts() {
        let s = AnsatzSpec::new(2, 2, yx(), Entangler::Cz).unwrap();
        assert_eq!(build_generator(&s).unwrap().parameter_count(), 8);
        let s = AnsatzSpec::new(3, 3, yx(), Entangler::Cz).unwrap();
        assert_eq!(build_generator(&s).unwrap().parameter_count(), 18);
    }

    #[test]
    fn single_qubit_has_no_entangler() {
        let s = AnsatzSpec::new(1, 1, vec![Axis::Y], Entangler::Cz).unwrap();
        let c = build_generator(&s).unwrap();
        assert_eq!(c.gates().len(), 1);
        assert!(matches!(c.gates()[0], Gate::Rotation { axis: Axis::Y, .. }));
    }

    #[test]
    fn discriminator_parameter_counts() {
        let s = AnsatzSpec::new(3, 3, yx(), Entangler::Cz).unwrap();
        assert_eq!(build_discriminator(&s).unwrap().parameter_count(), 18);
        let s = AnsatzSpec::new(3, 4, yx(), Entangler::Cz).unwrap();
        assert_eq!(build_discriminator(&s).unwrap().parameter_count(), 24);
        let s = AnsatzSpec::new(2, 1, vec![Axis::Y], Entangler::Cz).unwrap();
        let c = build_discriminator(&s).unwrap();
        assert_eq!(c.parameter_count(), 2);
        let cz: Vec<_> = c
            .gates()
            .iter()
            .filter(|g| matches!(g, Gate::Entangler { .. }))
            .collect();
        assert_eq!(cz.len(), 1);
        assert!(build_discriminator(&s.with_qubits(1)).is_err());
    }

    #[test]
    fn parameter_order_is_layer_qubit_axis() {
        let s = AnsatzSpec::new(2, 2, yx(), Entangler::Cz).unwrap();
        let c = build_generator(&s).unwrap();
        let rot: Vec<_> = c
            .gates()
            .iter()
            .filter_map(|g| match *g {
                Gate::Rotation {
                    axis,
                    qubit,
                    parameter,
                } => Some((parameter, qubit, axis)),
                _ => None,
            })
            .collect();
        assert_eq!(rot[0], (0, 0, Axis::Y));
        assert_eq!(rot[1], (1, 0, Axis::X));
        assert_eq!(rot[2], (2, 1, Axis::Y));
        assert_eq!(rot[4], (4, 0, Axis::Y));
    }

    #[test]
    fn invalid_specs() {
        assert!(AnsatzSpec::new(0, 1, yx(), Entangler::Cz).is_err());
        assert!(AnsatzSpec::new(2, 0, yx(), Entangler::Cz).is_err());
        assert!(AnsatzSpec::new(2, 1, vec![], Entangler::Cz).is_err());
        assert!(AnsatzSpec::new(2, 1, vec![Axis::Y, Axis::Y], Entangler::Cz).is_err());
    }

    #[test]
    fn presets() {
        assert_eq!(DepthSchedule::h2().depth_for_level(1), (2, 3));
        assert_eq!(DepthSchedule::h2().depth_for_level(2), (2, 4));
        let (g, d) = DepthSchedule::lih().depth_for_level(2);
        assert_eq!(g, 4);
        assert!((6..=8).contains(&d));
        let (g3, d3) = DepthSchedule::lih().depth_for_level(3);
        assert_eq!(depth_for_level(&DepthSchedule::lih(), 5), (g3 + 4, d3 + 4));
        assert_eq!(DepthSchedule::lih().depth_for_level(4), (6, 10));
    }

    #[test]
    fn schedule_validation() {
        assert!(DepthSchedule::new(vec![2, 1], vec![3]).is_err());
        assert!(DepthSchedule::new(vec![], vec![3]).is_err());
        assert!(DepthSchedule::new(vec![2, 2], vec![0]).is_err());
    }

    #[test]
    fn padding_appends_zero_layers() {
        let a = AnsatzSpec::new(2, 1, yx(), Entangler::Cz).unwrap();
        let b = a.with_layers(3);
        let p = pad_parameters(&[1.0, 2.0, 3.0, 4.0], &a, &b).unwrap();
        assert_eq!(p.len(), 12);
        assert_eq!(&p[..4], &[1.0, 2.0, 3.0, 4.0]);
        assert!(p[4..].iter().all(|&v| v == 0.0));
        assert!(pad_parameters(&[1.0], &a, &b).is_err());
    }
}
