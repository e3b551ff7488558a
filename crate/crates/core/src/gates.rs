//! Elementary ion-trap operations: standing-wave pulses, controlled-NOT
//! gates and the ancilla-mediated complementing transformation.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{check_ion, ion_mask, Matrix2, StateVector, C64};

/// Population threshold used to call an ion "in |0>" or "in |1>".
pub const ANCILLA_TOL: f64 = 1e-9;

/// Standing-wave pulse of area `k` and laser phase `phi` on one ion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub ion: usize,
    #[serde(rename = "k")]
    pub area_k: f64,
    #[serde(rename = "phi")]
    pub phase_phi: f64,
}

impl PulseSpec {
    pub fn new(ion: usize, area_k: f64, phase_phi: f64) -> Self {
        Self { ion, area_k, phase_phi }
    }

    /// `V^{pi/2}(-pi/2)`: maps `|0> -> |0~>`, `|1> -> -|1~>`.
    pub fn half_pi(ion: usize) -> Self {
        Self::new(ion, FRAC_PI_2, -FRAC_PI_2)
    }

    /// `V^{pi}(-pi/2)`: maps `|0> -> |1>`, `|1> -> -|0>`.
    pub fn pi(ion: usize) -> Self {
        Self::new(ion, PI, -FRAC_PI_2)
    }

    pub fn matrix(&self) -> Matrix2 {
        pulse_matrix(self.area_k, self.phase_phi)
    }

    pub fn inverse(&self) -> Self {
        Self { area_k: -self.area_k, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CircuitStep {
    Pulse(PulseSpec),
    /// Controlled-NOT in the computational basis: flips `target` when
    /// `control` is excited.
    Cnot { control: usize, target: usize },
}

impl CircuitStep {
    pub fn pulse(ion: usize, area_k: f64, phase_phi: f64) -> Self {
        CircuitStep::Pulse(PulseSpec::new(ion, area_k, phase_phi))
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        CircuitStep::Cnot { control, target }
    }

    pub fn inverse(&self) -> Self {
        match self {
            CircuitStep::Pulse(p) => CircuitStep::Pulse(p.inverse()),
            cnot => *cnot,
        }
    }

    pub fn validate(&self, n_ions: usize) -> Result<()> {
        match *self {
            CircuitStep::Pulse(p) => {
                check_ion(p.ion, n_ions)?;
                if !p.area_k.is_finite() || !p.phase_phi.is_finite() {
                    return Err(Error::InvalidStep(format!("non-finite pulse {p:?}")));
                }
                Ok(())
            }
            CircuitStep::Cnot { control, target } => {
                check_ion(control, n_ions)?;
                check_ion(target, n_ions)?;
                if control == target {
                    return Err(Error::InvalidStep(format!("cnot with control = target = {control}")));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCount {
    pub rotations: usize,
    pub cnots: usize,
}

impl GateCount {
    pub fn new(rotations: usize, cnots: usize) -> Self {
        Self { rotations, cnots }
    }

    pub fn of(steps: &[CircuitStep]) -> Self {
        let mut count = Self::default();
        for step in steps {
            count.record(step);
        }
        count
    }

    fn record(&mut self, step: &CircuitStep) {
        match step {
            CircuitStep::Pulse(p) if p.area_k != 0.0 => self.rotations += 1,
            CircuitStep::Pulse(_) => {}
            CircuitStep::Cnot { .. } => self.cnots += 1,
        }
    }
}

impl std::ops::Add for GateCount {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self::new(self.rotations + rhs.rotations, self.cnots + rhs.cnots)
    }
}

/// `V^k(phi) = exp[-i k/2 (|1><0| e^{-i phi} + |0><1| e^{i phi})]`.
///
/// The generator squares to the identity, so the exponential is
/// `cos(k/2) I - i sin(k/2) G`.
pub fn pulse_matrix(area_k: f64, phase_phi: f64) -> Matrix2 {
    let (s, c) = (area_k / 2.0).sin_cos();
    let minus_i_s = C64::new(0.0, -s);
    [
        [C64::new(c, 0.0), minus_i_s * C64::from_polar(1.0, phase_phi)],
        [minus_i_s * C64::from_polar(1.0, -phase_phi), C64::new(c, 0.0)],
    ]
}

pub(crate) fn cnot_in_place(state: &mut StateVector, control: usize, target: usize) {
    let cm = ion_mask(control);
    let tm = ion_mask(target);
    let amps = state.amplitudes_mut();
    for k in 0..amps.len() {
        if k & cm != 0 && k & tm == 0 {
            amps.swap(k, k | tm);
        }
    }
}

pub fn apply_cnot(state: &StateVector, control: usize, target: usize) -> Result<StateVector> {
    CircuitStep::cnot(control, target).validate(state.n_ions())?;
    let mut out = state.clone();
    cnot_in_place(&mut out, control, target);
    Ok(out)
}

pub fn apply_step(state: &mut StateVector, step: &CircuitStep) -> Result<()> {
    step.validate(state.n_ions())?;
    match *step {
        CircuitStep::Pulse(p) => state.transform_ion(p.ion, &p.matrix()),
        CircuitStep::Cnot { control, target } => cnot_in_place(state, control, target),
    }
    Ok(())
}

/// Applies `steps` in order. Pulses of nonzero area count as rotations.
pub fn run_circuit(state: &StateVector, steps: &[CircuitStep]) -> Result<(StateVector, GateCount)> {
    for step in steps {
        step.validate(state.n_ions())?;
    }
    let mut out = state.clone();
    let mut count = GateCount::default();
    for step in steps {
        apply_step(&mut out, step)?;
        count.record(step);
    }
    Ok((out, count))
}

pub fn invert_circuit(steps: &[CircuitStep]) -> Vec<CircuitStep> {
    steps.iter().rev().map(CircuitStep::inverse).collect()
}

/// Gate sequence of the complementing transformation: ancilla prepared in
/// `(|0> + |1>)/sqrt(2)`, one CNOT from the ancilla onto every data ion,
/// then one CNOT from `disentangle_control` back onto the ancilla.
pub fn complement_steps(data_ions: &[usize], ancilla: usize, disentangle_control: usize) -> Vec<CircuitStep> {
    let mut steps = Vec::with_capacity(data_ions.len() + 2);
    steps.push(CircuitStep::Pulse(PulseSpec::half_pi(ancilla)));
    steps.extend(data_ions.iter().map(|&j| CircuitStep::cnot(ancilla, j)));
    steps.push(CircuitStep::cnot(disentangle_control, ancilla));
    steps
}

pub(crate) fn check_complement_args(
    state: &StateVector,
    data_ions: &[usize],
    ancilla: usize,
    disentangle_control: usize,
) -> Result<()> {
    check_ion(ancilla, state.n_ions())?;
    for &j in data_ions {
        check_ion(j, state.n_ions())?;
    }
    if data_ions.contains(&ancilla) {
        return Err(Error::Precondition(format!("ancilla {ancilla} is also a data ion")));
    }
    if !data_ions.contains(&disentangle_control) {
        return Err(Error::Precondition(format!(
            "disentangling control {disentangle_control} is not a data ion"
        )));
    }
    let excited = state.excited_population(ancilla);
    if excited > ANCILLA_TOL {
        return Err(Error::Precondition(format!(
            "ancilla {ancilla} not in |0> (excited population {excited:e})"
        )));
    }
    Ok(())
}

/// Maps every data basis state `|k>` to `(|k> + |k-bar>)/sqrt(2)`, leaving
/// the ancilla in `|1>`. Requires every populated data state to have the
/// disentangling control excited; otherwise the ancilla stays entangled and
/// [`Error::AncillaEntangled`] is returned.
pub fn complement_register(
    state: &StateVector,
    data_ions: &[usize],
    ancilla: usize,
    disentangle_control: usize,
) -> Result<StateVector> {
    check_complement_args(state, data_ions, ancilla, disentangle_control)?;
    let (out, _) = run_circuit(state, &complement_steps(data_ions, ancilla, disentangle_control))?;
    let excited = out.excited_population(ancilla);
    if excited < 1.0 - ANCILLA_TOL {
        return Err(Error::AncillaEntangled { ion: ancilla, excited });
    }
    Ok(out)
}
