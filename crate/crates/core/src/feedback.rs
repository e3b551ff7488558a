//! Coherent-feedback correction circuits, one per codeword family.
//!
//! A plan depends only on the scheme and on which ion emitted; it never
//! looks at the logical amplitudes. Plans for every ion of a scheme are
//! built once in a [`FeedbackTable`] and looked up when a jump is detected.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::codes::{codeword_report, CodeScheme, SchemeKind};
use crate::error::{Error, Result};
use crate::gates::{complement_steps, run_circuit, CircuitStep, GateCount, PulseSpec, ANCILLA_TOL};
use crate::state::StateVector;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeedbackPlan {
    pub scheme: CodeScheme,
    pub decayed_ion: usize,
    pub steps: Vec<CircuitStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum CorrectionFailure {
    /// The complementing ancilla did not end in `|1>`.
    AncillaEntangled { excited: f64 },
    /// The corrected register is not a codeword.
    OutsideCodeSpace { deficit: f64 },
    /// The emitting ion has no correction (ancilla or idle ion).
    NoPlan,
}

#[derive(Debug, Clone)]
pub struct CorrectionOutcome {
    pub state: StateVector,
    pub failure: Option<CorrectionFailure>,
}

fn check_decayed(scheme: &CodeScheme, decayed: usize, kind: SchemeKind) -> Result<()> {
    scheme.validate()?;
    if scheme.kind != kind {
        return Err(Error::Precondition(format!("plan for {kind:?} requested on a {:?} scheme", scheme.kind)));
    }
    if !scheme.code_ions().contains(&decayed) {
        return Err(Error::Precondition(format!("ion {decayed} is not a codeword ion")));
    }
    Ok(())
}

/// Three-step recovery of the two-ion codeword after a jump on `decayed`:
/// `V^{pi/2}(pi/2)` on the decayed ion, `U` with the decayed ion as
/// computational-basis control, then `V^{pi}(-pi/2)` on the decayed ion.
pub fn plan_fourier_pair(scheme: &CodeScheme, decayed: usize) -> Result<FeedbackPlan> {
    check_decayed(scheme, decayed, SchemeKind::FourierPair)?;
    let other = if decayed == scheme.data_ions[0] { scheme.data_ions[1] } else { scheme.data_ions[0] };
    Ok(FeedbackPlan {
        scheme: scheme.clone(),
        decayed_ion: decayed,
        steps: vec![
            CircuitStep::pulse(decayed, FRAC_PI_2, FRAC_PI_2),
            CircuitStep::cnot(decayed, other),
            CircuitStep::Pulse(PulseSpec::pi(decayed)),
        ],
    })
}

fn pulse_then_complement(scheme: &CodeScheme, decayed: usize) -> FeedbackPlan {
    let ancilla = scheme.ancilla.expect("validated scheme has an ancilla");
    let mut steps = vec![CircuitStep::Pulse(PulseSpec::pi(decayed))];
    steps.extend(complement_steps(&scheme.code_ions(), ancilla, decayed));
    FeedbackPlan {
        scheme: scheme.clone(),
        decayed_ion: decayed,
        steps,
    }
}

/// `V^{pi}(-pi/2)` on the decayed ion, then complement all four ions with
/// the decayed ion disentangling the ancilla.
pub fn plan_fourier_symmetrized(scheme: &CodeScheme, decayed: usize) -> Result<FeedbackPlan> {
    check_decayed(scheme, decayed, SchemeKind::FourierSymmetrized)?;
    Ok(pulse_then_complement(scheme, decayed))
}

/// Same recovery for both number-state families; the symmetrized one
/// complements all `2N` ions.
pub fn plan_number_state(scheme: &CodeScheme, decayed: usize) -> Result<FeedbackPlan> {
    let kind = match scheme.kind {
        SchemeKind::NumberStateSymmetrized => SchemeKind::NumberStateSymmetrized,
        _ => SchemeKind::NumberState,
    };
    check_decayed(scheme, decayed, kind)?;
    Ok(pulse_then_complement(scheme, decayed))
}

pub fn plan_for(scheme: &CodeScheme, decayed: usize) -> Result<FeedbackPlan> {
    match scheme.kind {
        SchemeKind::FourierPair => plan_fourier_pair(scheme, decayed),
        SchemeKind::FourierSymmetrized => plan_fourier_symmetrized(scheme, decayed),
        SchemeKind::NumberState | SchemeKind::NumberStateSymmetrized => plan_number_state(scheme, decayed),
    }
}

/// Gate counts as printed in the gate-count table for `n_logical` logical
/// qubits. The two-ion scheme has no entry.
pub fn table_one_formula(kind: SchemeKind, n_logical: usize) -> Option<GateCount> {
    match kind {
        SchemeKind::FourierPair => None,
        SchemeKind::FourierSymmetrized => Some(GateCount::new(2, 5)),
        SchemeKind::NumberState | SchemeKind::NumberStateSymmetrized => {
            Some(GateCount::new(2, 2 * n_logical + 1))
        }
    }
}

impl FeedbackPlan {
    /// Correction gates only; the ancilla reset is bookkeeping and not counted.
    pub fn gate_count(&self) -> GateCount {
        GateCount::of(&self.steps)
    }

    pub fn uses_ancilla(&self) -> bool {
        self.scheme.kind != SchemeKind::FourierPair
    }

    /// Returns the ancilla from `|1>` to `|0>` after a complement.
    pub fn reset_steps(&self) -> Vec<CircuitStep> {
        match (self.uses_ancilla(), self.scheme.ancilla) {
            (true, Some(x)) => vec![CircuitStep::Pulse(PulseSpec::pi(x))],
            _ => vec![],
        }
    }

    /// Applies the plan and the ancilla reset, then checks that the
    /// ancilla disentangled and the register is back in the code space.
    /// The gates are applied even when a check fails.
    pub fn apply(&self, state: &StateVector) -> Result<CorrectionOutcome> {
        let (mut out, _) = run_circuit(state, &self.steps)?;
        let mut failure = None;
        if self.uses_ancilla() {
            let x = self.scheme.ancilla.expect("validated scheme has an ancilla");
            let excited = out.excited_population(x) / out.norm_sqr();
            if excited < 1.0 - ANCILLA_TOL {
                failure = Some(CorrectionFailure::AncillaEntangled { excited });
            }
            out = run_circuit(&out, &self.reset_steps())?.0;
        }
        if failure.is_none() {
            let report = codeword_report(&out, &self.scheme)?;
            if !report.in_code_space {
                failure = Some(CorrectionFailure::OutsideCodeSpace {
                    deficit: report.projection_deficit,
                });
            }
        }
        Ok(CorrectionOutcome { state: out, failure })
    }
}

/// Plans for every codeword ion of one scheme, indexed by ion.
#[derive(Debug, Clone)]
pub struct FeedbackTable {
    scheme: CodeScheme,
    plans: Vec<Option<FeedbackPlan>>,
}

impl FeedbackTable {
    pub fn new(scheme: &CodeScheme) -> Result<Self> {
        scheme.validate()?;
        let mut plans = vec![None; scheme.n_ions() + 1];
        for ion in scheme.code_ions() {
            plans[ion] = Some(plan_for(scheme, ion)?);
        }
        Ok(Self {
            scheme: scheme.clone(),
            plans,
        })
    }

    pub fn scheme(&self) -> &CodeScheme {
        &self.scheme
    }

    pub fn plan(&self, ion: usize) -> Option<&FeedbackPlan> {
        self.plans.get(ion).and_then(Option::as_ref)
    }

    pub fn plans(&self) -> impl Iterator<Item = &FeedbackPlan> {
        self.plans.iter().flatten()
    }

    pub fn correct(&self, state: &StateVector, ion: usize) -> Result<CorrectionOutcome> {
        match self.plan(ion) {
            Some(plan) => plan.apply(state),
            None => Ok(CorrectionOutcome {
                state: state.clone(),
                failure: Some(CorrectionFailure::NoPlan),
            }),
        }
    }
}
