//! Named property suites run by the `verify` subcommand.
//!
//! Each check compares the simulator against an independent expectation:
//! hand-expanded amplitudes, closed-form codewords, analytic decay curves
//! or the master-equation integrator.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codes::{codeword_report, CodeScheme, LogicalState, SchemeKind};
use crate::error::{Error, Result};
use crate::feedback::{table_one_formula, FeedbackTable};
use crate::gates::{apply_cnot, invert_circuit, pulse_matrix, run_circuit, CircuitStep, GateCount, PulseSpec};
use crate::state::{fidelity, pure_to_density, unitarity_deviation, StateVector, C64};
use crate::trajectory::{
    apply_jump, conditional_evolve, ensemble_density, master_equation_evolve, run_trajectory, trajectory_rng,
    DecayModel, DetectionModel, FeedbackPolicy, TrajectoryOptions,
};

use super::{decoherence_time, feedback_wall_time, TimingModel};

const EXACT_TOL: f64 = 1e-12;
const RECOVERY_TOL: f64 = 1e-10;
const SIGMA_LIMIT: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Algebra,
    Codewords,
    Recovery,
    Invariance,
    Oracle,
    Counts,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Algebra,
        Suite::Codewords,
        Suite::Recovery,
        Suite::Invariance,
        Suite::Oracle,
        Suite::Counts,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Algebra => "algebra",
            Suite::Codewords => "codewords",
            Suite::Recovery => "recovery",
            Suite::Invariance => "invariance",
            Suite::Oracle => "oracle",
            Suite::Counts => "counts",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CheckStatus {
    Pass,
    /// Expected disagreement that is reported but does not fail the suite.
    Warn,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub passed: bool,
    pub checks: Vec<Check>,
}

/// Suite parameters. `trajectories` only affects the oracle suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyOptions {
    pub seed: u64,
    pub trajectories: usize,
    pub random_states: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 2024,
            trajectories: 10_000,
            random_states: 100,
        }
    }
}

pub fn verify(suite: Suite, opts: &VerifyOptions) -> Result<SuiteReport> {
    let checks = match suite {
        Suite::Algebra => algebra(opts)?,
        Suite::Codewords => codewords(opts)?,
        Suite::Recovery => recovery(opts)?,
        Suite::Invariance => invariance(opts)?,
        Suite::Oracle => oracle(opts)?,
        Suite::Counts => counts()?,
    };
    Ok(SuiteReport {
        suite,
        passed: checks.iter().all(|c| c.status != CheckStatus::Fail),
        checks,
    })
}

/// Schemes exercised by the state-level suites, one per family.
pub fn sample_schemes() -> Vec<CodeScheme> {
    vec![
        CodeScheme::fourier_pair(),
        CodeScheme::fourier_symmetrized(),
        CodeScheme::number_state(2),
        CodeScheme::number_symmetrized(2),
    ]
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn one_ion(v: [C64; 2]) -> StateVector {
    StateVector::from_amplitudes(1, v.to_vec()).expect("two amplitudes")
}

fn algebra(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let r = FRAC_1_SQRT_2;
    let tilde = [[c(r), c(r)], [c(r), c(-r)]];
    let neg = |v: [C64; 2]| [-v[0], -v[1]];
    let mut checks = Vec::new();

    let cases: [(&str, PulseSpec, [C64; 2], [C64; 2]); 4] = [
        ("half_pi |0> -> |0~>", PulseSpec::half_pi(1), [c(1.0), c(0.0)], tilde[0]),
        ("half_pi |1> -> -|1~>", PulseSpec::half_pi(1), [c(0.0), c(1.0)], neg(tilde[1])),
        ("pi |0~> -> -|1~>", PulseSpec::pi(1), tilde[0], neg(tilde[1])),
        ("pi |1~> -> |0~>", PulseSpec::pi(1), tilde[1], tilde[0]),
    ];
    for (name, pulse, input, expected) in cases {
        let (out, _) = run_circuit(&one_ion(input), &[CircuitStep::Pulse(pulse)])?;
        let err = max_diff(out.amplitudes(), &expected);
        checks.push(Check::new(name, err < EXACT_TOL, format!("max error {err:.1e}")));
    }

    // computational CNOT(1 -> 2) on tilde products: |x~ (+) y~>_1 |y~>_2
    let mut worst: f64 = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            let product = |a: usize, b: usize| -> Vec<C64> {
                (0..4).map(|k| tilde[a][k & 1] * tilde[b][k >> 1]).collect()
            };
            let input = StateVector::from_amplitudes(2, product(x, y))?;
            let out = apply_cnot(&input, 1, 2)?;
            worst = worst.max(max_diff(out.amplitudes(), &product(x ^ y, y)));
        }
    }
    checks.push(Check::new(
        "CNOT acts on the tilde basis with control and target swapped",
        worst < EXACT_TOL,
        format!("max error {worst:.1e}"),
    ));

    let mut rng = trajectory_rng(opts.seed, 0);
    let (mut unitarity, mut inverse): (f64, f64) = (0.0, 0.0);
    for _ in 0..opts.random_states {
        let (k, phi) = (rng.random_range(-4.0 * PI..4.0 * PI), rng.random_range(-PI..PI));
        unitarity = unitarity.max(unitarity_deviation(&pulse_matrix(k, phi)));
        let steps = random_circuit(3, 12, &mut rng);
        let psi = random_state(3, &mut rng);
        let (there, _) = run_circuit(&psi, &steps)?;
        let (back, _) = run_circuit(&there, &invert_circuit(&steps))?;
        inverse = inverse.max(psi.max_abs_diff(&back));
    }
    checks.push(Check::new(
        "random pulses are unitary",
        unitarity < 1e-10,
        format!("max deviation {unitarity:.1e}"),
    ));
    checks.push(Check::new(
        "random circuits undo exactly",
        inverse < EXACT_TOL,
        format!("max error {inverse:.1e}"),
    ));
    Ok(checks)
}

pub fn random_state<R: Rng + ?Sized>(n_ions: usize, rng: &mut R) -> StateVector {
    let l = LogicalState::random(n_ions, rng);
    StateVector::from_amplitudes(n_ions, l.amplitudes().to_vec()).expect("sized to the register")
}

pub fn random_circuit<R: Rng + ?Sized>(n_ions: usize, len: usize, rng: &mut R) -> Vec<CircuitStep> {
    (0..len)
        .map(|_| {
            let a = rng.random_range(1..=n_ions);
            if n_ions > 1 && rng.random::<bool>() {
                let b = (a % n_ions) + 1;
                CircuitStep::cnot(a, b)
            } else {
                CircuitStep::pulse(a, rng.random_range(-2.0 * PI..2.0 * PI), rng.random_range(-PI..PI))
            }
        })
        .collect()
}

fn codewords(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut rng = trajectory_rng(opts.seed, 1);
    let mut checks = Vec::new();
    let decay = DecayModel::uniform(1.0);
    for scheme in sample_schemes() {
        let (mut encode_err, mut decode_err): (f64, f64) = (0.0, 0.0);
        let mut weights_ok = true;
        let mut invariance: f64 = 0.0;
        let expected_weight = match scheme.kind {
            SchemeKind::FourierSymmetrized => Some(2),
            SchemeKind::NumberStateSymmetrized => Some(scheme.data_ions.len() as u32),
            _ => None,
        };
        for _ in 0..opts.random_states {
            let logical = LogicalState::random(scheme.n_logical(), &mut rng);
            let encoded = scheme.encode(&logical)?;
            encode_err = encode_err.max(1.0 - fidelity(&encoded, &scheme.codeword(&logical)?)?);
            decode_err = decode_err.max(1.0 - scheme.decode(&encoded)?.fidelity(&logical));
            if let Some(w) = expected_weight {
                weights_ok &= codeword_report(&encoded, &scheme)?.excitation_weights == [w];
                for _ in 0..20 {
                    let t = rng.random_range(0.0..5.0);
                    let (evolved, _) = conditional_evolve(&encoded, t, &decay);
                    invariance = invariance.max(1.0 - fidelity(&encoded, &evolved.normalized()?)?);
                }
            }
        }
        let kind = format!("{:?}", scheme.kind);
        checks.push(Check::new(
            format!("{kind}: gate encoding equals the closed-form codeword"),
            encode_err < EXACT_TOL,
            format!("max infidelity {encode_err:.1e}"),
        ));
        checks.push(Check::new(
            format!("{kind}: decode inverts encode"),
            decode_err < EXACT_TOL,
            format!("max infidelity {decode_err:.1e}"),
        ));
        if expected_weight.is_some() {
            checks.push(Check::new(
                format!("{kind}: single excitation weight"),
                weights_ok,
                format!("expected weight {expected_weight:?}"),
            ));
            checks.push(Check::new(
                format!("{kind}: invariant under no-jump evolution"),
                invariance < EXACT_TOL,
                format!("max infidelity {invariance:.1e}"),
            ));
        }
    }

    // |000> + |111> keeps its shape only if both kets decay alike
    let scheme = CodeScheme::number_state(2);
    let logical = LogicalState::basis(2, 0)?;
    let encoded = scheme.encode(&logical)?;
    let (evolved, _) = conditional_evolve(&encoded, 1.0, &decay);
    let f = fidelity(&encoded, &evolved.normalized()?)?;
    let e = (-1.5f64).exp();
    let expected = (1.0 + e).powi(2) / (2.0 * (1.0 + e * e));
    checks.push(Check::new(
        "3-ion codeword distorts under no-jump evolution",
        f < 1.0 - 1e-3 && (f - expected).abs() < EXACT_TOL,
        format!("fidelity {f:.6} at t = 1, closed form {expected:.6}"),
    ));
    Ok(checks)
}

fn recovery(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut rng = trajectory_rng(opts.seed, 2);
    let mut checks = Vec::new();
    for scheme in sample_schemes() {
        let table = FeedbackTable::new(&scheme)?;
        let mut worst: f64 = 0.0;
        let mut failures = 0;
        for ion in scheme.code_ions() {
            for _ in 0..opts.random_states {
                let logical = LogicalState::random(scheme.n_logical(), &mut rng);
                let codeword = scheme.codeword(&logical)?;
                let jumped = apply_jump(&codeword, ion)?;
                let out = table.correct(&jumped, ion)?;
                failures += usize::from(out.failure.is_some());
                worst = worst.max(1.0 - fidelity(&codeword, &out.state)?);
            }
        }
        checks.push(Check::new(
            format!("{:?}: every ion recovers", scheme.kind),
            worst < RECOVERY_TOL && failures == 0,
            format!("max infidelity {worst:.1e}, {failures} flagged corrections"),
        ));
    }

    // a, b, c = ions 1, 2, 3 and the ancilla is ion 4 (bit 3)
    let scheme = CodeScheme::number_state(2);
    let table = FeedbackTable::new(&scheme)?;
    let (mut shape, mut worst): (f64, f64) = (0.0, 0.0);
    for _ in 0..opts.random_states {
        let logical = LogicalState::random(2, &mut rng);
        let cs = logical.amplitudes();
        let codeword = scheme.codeword(&logical)?;
        let jumped = apply_jump(&codeword, 2)?;
        let mut expected = vec![c(0.0); 16];
        for (k, amp) in [(0, cs[2]), (1, cs[3]), (4, cs[1]), (5, cs[0])] {
            expected[k] = amp;
        }
        let expected = StateVector::from_amplitudes(4, expected)?.normalized()?;
        shape = shape.max(jumped.max_abs_diff(&expected));
        worst = worst.max(1.0 - fidelity(&codeword, &table.correct(&jumped, 2)?.state)?);
    }
    checks.push(Check::new(
        "3-ion jump on b gives c2|0> + c3|1> + c1|4> + c0|5>",
        shape < EXACT_TOL,
        format!("max amplitude error {shape:.1e}"),
    ));
    checks.push(Check::new(
        "3-ion jump on b recovers",
        worst < RECOVERY_TOL,
        format!("max infidelity {worst:.1e}"),
    ));
    Ok(checks)
}

fn invariance(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut rng = trajectory_rng(opts.seed, 3);
    let mut checks = Vec::new();
    for scheme in sample_schemes() {
        let table = FeedbackTable::new(&scheme)?;
        let ions = scheme.code_ions();
        let mut worst: f64 = 0.0;
        for _ in 0..10 {
            let codeword = scheme.codeword(&LogicalState::random(scheme.n_logical(), &mut rng))?;
            let mut state = codeword.clone();
            for _ in 0..20 {
                let ion = ions[rng.random_range(0..ions.len())];
                state = table.correct(&apply_jump(&state, ion)?, ion)?.state.normalized()?;
            }
            worst = worst.max(1.0 - fidelity(&codeword, &state)?);
        }
        checks.push(Check::new(
            format!("{:?}: 20 jump-correct rounds", scheme.kind),
            worst < 1e-9,
            format!("max infidelity {worst:.1e}"),
        ));
    }

    let decay = DecayModel {
        gamma: 1.0,
        per_ion_gamma: Some(vec![0.5, 1.0, 2.0]),
    };
    let (mut split, mut monotone) = (0.0f64, true);
    for _ in 0..opts.random_states {
        let psi = random_state(3, &mut rng);
        let (t1, t2) = (rng.random_range(0.0..3.0), rng.random_range(0.0..3.0));
        let (whole, s) = conditional_evolve(&psi, t1 + t2, &decay);
        let (half, s1) = conditional_evolve(&psi, t1, &decay);
        let (parts, _) = conditional_evolve(&half, t2, &decay);
        split = split.max(whole.max_abs_diff(&parts));
        monotone &= s <= s1;
    }
    checks.push(Check::new(
        "no-jump evolution composes over split intervals",
        split < EXACT_TOL,
        format!("max amplitude error {split:.1e}"),
    ));
    checks.push(Check::new("survival never increases", monotone, ""));

    let scheme = CodeScheme::fourier_symmetrized();
    let table = FeedbackTable::new(&scheme)?;
    let initial = scheme.encode(&LogicalState::random(1, &mut rng))?;
    let options = TrajectoryOptions {
        t_max: 10.0,
        grid: 11,
        record_states: false,
    };
    let run = |index| {
        run_trajectory(
            &initial,
            Some(&scheme),
            &DecayModel::uniform(1.0),
            &DetectionModel::default(),
            FeedbackPolicy::Coherent(&table),
            &options,
            &mut trajectory_rng(opts.seed, index),
        )
    };
    let (a, b) = (run(7)?, run(7)?);
    checks.push(Check::new(
        "identical seeds give identical jump records",
        a.jumps == b.jumps && a.fidelity_timeline == b.fidelity_timeline,
        format!("{} jumps", a.jumps.len()),
    ));
    Ok(checks)
}

fn oracle(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut rng = trajectory_rng(opts.seed, 4);
    let times = [0.5, 1.0, 2.0];
    let decay = DecayModel::uniform(1.0);
    let mut checks = Vec::new();
    let registers = [
        ("1 ion", random_state(1, &mut rng)),
        ("2 ions", random_state(2, &mut rng)),
    ];
    for (label, psi) in registers {
        let estimates = ensemble_density(&psi, &decay, &times, opts.trajectories, opts.seed)?;
        let rho0 = pure_to_density(&psi);
        for (est, &t) in estimates.iter().zip(&times) {
            let exact = master_equation_evolve(&rho0, &decay, t)?;
            let sigma = est.worst_sigma(&exact);
            checks.push(Check::new(
                format!("{label}: trajectory average matches master equation at t = {t}"),
                sigma <= SIGMA_LIMIT,
                format!("worst entry {sigma:.2} standard errors over {} trajectories", opts.trajectories),
            ));
        }
    }
    let rho0 = pure_to_density(&StateVector::basis_state(1, 1)?);
    let mut worst: f64 = 0.0;
    for &t in &times {
        let rho = master_equation_evolve(&rho0, &decay, t)?;
        worst = worst.max((rho.get(1, 1).re - (-t).exp()).abs());
    }
    checks.push(Check::new(
        "excited population decays as exp(-t)",
        worst < 1e-9,
        format!("max error {worst:.1e}"),
    ));
    Ok(checks)
}

fn counts() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let fourier = CodeScheme::fourier_symmetrized();
    let table = FeedbackTable::new(&fourier)?;
    let formula = table_one_formula(SchemeKind::FourierSymmetrized, 1);
    let all_match = table.plans().all(|p| Some(p.gate_count()) == formula);
    checks.push(Check::new(
        "FourierSymmetrized: every plan uses 2 rotations and 5 CNOTs",
        all_match && formula == Some(GateCount::new(2, 5)),
        format!("formula {formula:?}"),
    ));

    for (kind, max_logical) in [
        (SchemeKind::NumberState, 12),
        (SchemeKind::NumberStateSymmetrized, 5),
    ] {
        for m in 1..=max_logical {
            let scheme = CodeScheme::default_for(kind, m);
            let ladder = GateCount::new(2, scheme.code_ions().len() + 1);
            let table = FeedbackTable::new(&scheme)?;
            let constructed = table.plans().all(|p| p.gate_count() == ladder);
            checks.push(Check::new(
                format!("{kind:?} with {m} logical qubits: plans match the ladder {ladder:?}"),
                constructed,
                "",
            ));
            let formula = table_one_formula(kind, m).expect("number-state formula exists");
            checks.push(Check {
                name: format!("{kind:?} with {m} logical qubits: ladder vs printed formula"),
                status: if formula == ladder { CheckStatus::Pass } else { CheckStatus::Warn },
                detail: format!(
                    "constructed {} CNOTs on {} ions, formula 2N+1 = {}",
                    ladder.cnots,
                    scheme.n_ions(),
                    formula.cnots
                ),
            });
        }
    }

    let timing = TimingModel::default();
    let tau_d = decoherence_time(13, timing.tau_q)?;
    checks.push(Check::new(
        "13-ion register decoherence time",
        (4.5..=5.0).contains(&tau_d),
        format!("{tau_d:.3} s"),
    ));
    let fourier_time = feedback_wall_time(table.plan(1).expect("ion 1 is a codeword ion"), &timing);
    checks.push(Check::new(
        "FourierSymmetrized feedback wall time",
        (fourier_time - 530e-6).abs() < 1e-15,
        format!("{:.1} us", fourier_time * 1e6),
    ));
    let mut slope_err: f64 = 0.0;
    let mut previous: Option<f64> = None;
    for data in 3..=12 {
        let scheme = CodeScheme::number_state(data - 1);
        let plan = crate::feedback::plan_for(&scheme, 1)?;
        let t = feedback_wall_time(&plan, &timing);
        if let Some(p) = previous {
            slope_err = slope_err.max((t - p - timing.tau_cnot).abs());
        }
        previous = Some(t);
    }
    checks.push(Check::new(
        "number-state feedback time grows by one CNOT per data ion",
        slope_err < 1e-15,
        format!("max slope error {slope_err:.1e} s over 3..12 data ions"),
    ));
    Ok(checks)
}
