//! Codeword families, their encoding circuits and code-space checks.
//!
//! Four families are supported:
//!
//! * `FourierPair`: one logical qubit `c0|0~0~> + c1|1~1~>` on ions `a, b`.
//! * `FourierSymmetrized`: the pair extended by complementary partners
//!   `c, d`, so every basis ket carries exactly two excitations.
//! * `NumberState`: `M` logical qubits on `N = M + 1` data ions,
//!   `sum_k c_k (|k> + |k-bar>)/sqrt(2)` for `k < 2^M`.
//! * `NumberStateSymmetrized`: the number-state codeword paired with a
//!   complementary second set of `N` ions, every ket of weight `N`.
//!
//! Logical amplitudes are labeled in the tilde basis for the Fourier
//! families and in the number-state basis for the others.

use std::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{run_circuit, CircuitStep, GateCount, PulseSpec, ANCILLA_TOL};
use crate::state::{check_ion, ion_mask, StateVector, C64, MAX_IONS, NORM_TOL};

/// Projection deficit below which a register counts as a codeword.
pub const CODE_SPACE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SchemeKind {
    FourierPair,
    FourierSymmetrized,
    NumberState,
    NumberStateSymmetrized,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [
        SchemeKind::FourierPair,
        SchemeKind::FourierSymmetrized,
        SchemeKind::NumberState,
        SchemeKind::NumberStateSymmetrized,
    ];

    pub fn is_symmetrized(self) -> bool {
        matches!(self, SchemeKind::FourierSymmetrized | SchemeKind::NumberStateSymmetrized)
    }
}

/// Codeword family plus the role of every ion it touches.
///
/// For the number-state families the last data ion is the one added in
/// the ground state during encoding. Ions not named here idle in `|0>`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeScheme {
    pub kind: SchemeKind,
    pub data_ions: Vec<usize>,
    #[serde(default)]
    pub partner_ions: Vec<usize>,
    #[serde(default)]
    pub ancilla: Option<usize>,
}

impl CodeScheme {
    pub fn fourier_pair() -> Self {
        Self {
            kind: SchemeKind::FourierPair,
            data_ions: vec![1, 2],
            partner_ions: vec![],
            ancilla: None,
        }
    }

    pub fn fourier_symmetrized() -> Self {
        Self {
            kind: SchemeKind::FourierSymmetrized,
            data_ions: vec![1, 2],
            partner_ions: vec![3, 4],
            ancilla: Some(5),
        }
    }

    /// `n_logical` qubits on `n_logical + 1` data ions plus one ancilla.
    pub fn number_state(n_logical: usize) -> Self {
        let n = n_logical + 1;
        Self {
            kind: SchemeKind::NumberState,
            data_ions: (1..=n).collect(),
            partner_ions: vec![],
            ancilla: Some(n + 1),
        }
    }

    /// `n_logical` qubits on `2 (n_logical + 1) + 1` ions.
    pub fn number_symmetrized(n_logical: usize) -> Self {
        let n = n_logical + 1;
        Self {
            kind: SchemeKind::NumberStateSymmetrized,
            data_ions: (1..=n).collect(),
            partner_ions: (n + 1..=2 * n).collect(),
            ancilla: Some(2 * n + 1),
        }
    }

    pub fn default_for(kind: SchemeKind, n_logical: usize) -> Self {
        match kind {
            SchemeKind::FourierPair => Self::fourier_pair(),
            SchemeKind::FourierSymmetrized => Self::fourier_symmetrized(),
            SchemeKind::NumberState => Self::number_state(n_logical),
            SchemeKind::NumberStateSymmetrized => Self::number_symmetrized(n_logical),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("{:?} scheme: {msg}", self.kind)));
        let (d, p) = (self.data_ions.len(), self.partner_ions.len());
        match self.kind {
            SchemeKind::FourierPair if d != 2 || p != 0 => {
                return bad("needs 2 data ions and no partners".into())
            }
            SchemeKind::FourierSymmetrized if d != 2 || p != 2 => {
                return bad("needs 2 data ions and 2 partner ions".into())
            }
            SchemeKind::NumberState if d == 0 || p != 0 => {
                return bad("needs at least 1 data ion and no partners".into())
            }
            SchemeKind::NumberStateSymmetrized if d == 0 || p != d => {
                return bad("needs as many partner ions as data ions".into())
            }
            _ => {}
        }
        if self.kind != SchemeKind::FourierPair && self.ancilla.is_none() {
            return bad("needs an ancilla ion".into());
        }
        let mut all = self.all_ions();
        if all.contains(&0) {
            return bad("ion indices are 1-based".into());
        }
        let max = *all.iter().max().expect("at least one data ion");
        if max > MAX_IONS {
            return Err(Error::TooManyIons(max));
        }
        all.sort_unstable();
        if all.windows(2).any(|w| w[0] == w[1]) {
            return bad("ion roles overlap".into());
        }
        Ok(())
    }

    pub fn all_ions(&self) -> Vec<usize> {
        let mut v = self.code_ions();
        v.extend(self.ancilla);
        v
    }

    /// Data and partner ions: everything the codeword lives on.
    pub fn code_ions(&self) -> Vec<usize> {
        let mut v = self.data_ions.clone();
        v.extend_from_slice(&self.partner_ions);
        v
    }

    pub fn n_ions(&self) -> usize {
        self.all_ions().into_iter().max().unwrap_or(0)
    }

    pub fn n_logical(&self) -> usize {
        match self.kind {
            SchemeKind::FourierPair | SchemeKind::FourierSymmetrized => 1,
            SchemeKind::NumberState | SchemeKind::NumberStateSymmetrized => self.data_ions.len() - 1,
        }
    }

    pub fn logical_dim(&self) -> usize {
        1 << self.n_logical()
    }

    /// Ions carrying the logical amplitudes before encoding.
    pub fn logical_ions(&self) -> &[usize] {
        match self.kind {
            SchemeKind::FourierPair | SchemeKind::FourierSymmetrized => &self.data_ions[..1],
            _ => &self.data_ions[..self.data_ions.len() - 1],
        }
    }

    /// Gates that turn the loaded logical state into the codeword.
    pub fn encoding_steps(&self) -> Vec<CircuitStep> {
        match self.kind {
            SchemeKind::FourierPair => fourier_pair_steps(self.data_ions[0], self.data_ions[1]),
            SchemeKind::FourierSymmetrized => {
                let (a, b) = (self.data_ions[0], self.data_ions[1]);
                let mut s = fourier_pair_steps(a, b);
                s.extend(partner_steps(&self.data_ions, &self.partner_ions));
                s
            }
            SchemeKind::NumberState => number_state_steps(&self.data_ions, self.ancilla.unwrap()),
            SchemeKind::NumberStateSymmetrized => {
                let mut s = number_state_steps(&self.data_ions, self.ancilla.unwrap());
                s.extend(partner_steps(&self.data_ions, &self.partner_ions));
                s
            }
        }
    }

    /// Gates spent on encoding, reported apart from correction costs.
    pub fn preparation_count(&self) -> GateCount {
        GateCount::of(&self.encoding_steps())
    }

    /// Register index of logical label `k` in the loaded (pre-encoding) state.
    fn loaded_index(&self, k: usize) -> usize {
        scatter(k, self.logical_ions())
    }

    /// Ground register with the logical amplitudes written onto the logical
    /// ions. The Fourier families load `c0|0> - c1|1>` so that the basis
    /// change pulse yields `c0|0~> + c1|1~>`.
    pub fn load(&self, logical: &LogicalState) -> Result<StateVector> {
        self.validate()?;
        self.check_logical(logical)?;
        let mut amps = vec![C64::new(0.0, 0.0); 1 << self.n_ions()];
        for (k, &c) in logical.amplitudes().iter().enumerate() {
            amps[self.loaded_index(k)] = if self.is_fourier() && k == 1 { -c } else { c };
        }
        StateVector::from_amplitudes(self.n_ions(), amps)
    }

    fn is_fourier(&self) -> bool {
        matches!(self.kind, SchemeKind::FourierPair | SchemeKind::FourierSymmetrized)
    }

    fn check_logical(&self, logical: &LogicalState) -> Result<()> {
        if logical.n_qubits() != self.n_logical() {
            return Err(Error::Precondition(format!(
                "{:?} scheme stores {} logical qubits, got {}",
                self.kind,
                self.n_logical(),
                logical.n_qubits()
            )));
        }
        Ok(())
    }

    fn check_register(&self, register: &StateVector) -> Result<()> {
        self.validate()?;
        if register.n_ions() != self.n_ions() {
            return Err(Error::DimensionMismatch(self.n_ions(), register.n_ions()));
        }
        Ok(())
    }

    /// Encodes from the ground register through the scheme's gate sequence.
    pub fn encode(&self, logical: &LogicalState) -> Result<StateVector> {
        let loaded = self.load(logical)?;
        let (out, _) = run_circuit(&loaded, &self.encoding_steps())?;
        if let Some(x) = self.ancilla {
            let excited = out.excited_population(x);
            if excited > ANCILLA_TOL {
                return Err(Error::AncillaEntangled { ion: x, excited });
            }
        }
        Ok(out)
    }

    /// Runs the encoding circuit backwards and reads the logical amplitudes
    /// off the logical ions.
    pub fn decode(&self, register: &StateVector) -> Result<LogicalState> {
        self.check_register(register)?;
        let report = codeword_report(register, self)?;
        if !report.in_code_space {
            return Err(Error::OutsideCodeSpace(report.projection_deficit));
        }
        let inverse = crate::gates::invert_circuit(&self.encoding_steps());
        let (unwound, _) = run_circuit(register, &inverse)?;
        let mut amps: Vec<C64> = (0..self.logical_dim())
            .map(|k| unwound.amplitude(self.loaded_index(k)))
            .collect();
        if self.is_fourier() {
            amps[1] = -amps[1];
        }
        let captured: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        let deficit = 1.0 - captured / unwound.norm_sqr();
        if deficit >= CODE_SPACE_TOL {
            return Err(Error::OutsideCodeSpace(deficit));
        }
        LogicalState::new(amps).and_then(LogicalState::normalized)
    }

    /// Closed-form codeword of logical basis state `m`, built directly from
    /// the codeword formulas rather than from the gate sequence.
    pub fn codeword_basis_vector(&self, m: usize) -> Result<StateVector> {
        self.validate()?;
        let mut amps = vec![C64::new(0.0, 0.0); 1 << self.n_ions()];
        for (k, a) in self.codeword_support(m) {
            amps[k] += a;
        }
        StateVector::from_amplitudes(self.n_ions(), amps)
    }

    /// Nonzero entries `(index, amplitude)` of the closed-form codeword of
    /// logical basis state `m`. Assumes a validated scheme.
    fn codeword_support(&self, m: usize) -> Vec<(usize, C64)> {
        let code = self.code_ions();
        let r = C64::new(FRAC_1_SQRT_2, 0.0);
        match self.kind {
            SchemeKind::FourierPair | SchemeKind::FourierSymmetrized => {
                // |m~>_a |m~>_b expanded in the computational basis, each
                // product optionally paired with its complement on c, d.
                let mut v = Vec::with_capacity(4);
                for sa in 0..2 {
                    for sb in 0..2 {
                        let sign = if m == 1 && (sa + sb) % 2 == 1 { -1.0 } else { 1.0 };
                        let mut bits = sa | (sb << 1);
                        if self.kind == SchemeKind::FourierSymmetrized {
                            bits |= ((sa ^ 1) << 2) | ((sb ^ 1) << 3);
                        }
                        v.push((scatter(bits, &code), C64::new(0.5 * sign, 0.0)));
                    }
                }
                v
            }
            SchemeKind::NumberState => {
                let full = (1 << self.data_ions.len()) - 1;
                vec![(scatter(m, &code), r), (scatter(full ^ m, &code), r)]
            }
            SchemeKind::NumberStateSymmetrized => {
                let w = self.data_ions.len();
                let bar = ((1 << w) - 1) ^ m;
                vec![(scatter(m | (bar << w), &code), r), (scatter(bar | (m << w), &code), r)]
            }
        }
    }

    /// Closed-form codeword `sum_m c_m |e_m>`.
    pub fn codeword(&self, logical: &LogicalState) -> Result<StateVector> {
        self.validate()?;
        self.check_logical(logical)?;
        let mut amps = vec![C64::new(0.0, 0.0); 1 << self.n_ions()];
        for (m, &c) in logical.amplitudes().iter().enumerate() {
            for (k, a) in self.codeword_support(m) {
                amps[k] += c * a;
            }
        }
        StateVector::from_amplitudes(self.n_ions(), amps)
    }
}

/// Writes bit `i` of `bits` onto ion `ions[i]`.
pub fn scatter(bits: usize, ions: &[usize]) -> usize {
    ions.iter()
        .enumerate()
        .filter(|(i, _)| bits >> i & 1 == 1)
        .fold(0, |acc, (_, &ion)| acc | ion_mask(ion))
}

fn fourier_pair_steps(a: usize, b: usize) -> Vec<CircuitStep> {
    vec![
        CircuitStep::Pulse(PulseSpec::half_pi(a)),
        CircuitStep::Pulse(PulseSpec::half_pi(b)),
        // computational-basis U_ba; in the tilde basis ion a controls
        CircuitStep::cnot(b, a),
    ]
}

fn partner_steps(data: &[usize], partners: &[usize]) -> Vec<CircuitStep> {
    let mut s: Vec<CircuitStep> = partners.iter().map(|&p| CircuitStep::Pulse(PulseSpec::pi(p))).collect();
    s.extend(data.iter().zip(partners).map(|(&d, &p)| CircuitStep::cnot(d, p)));
    s
}

/// Complementing circuit used for encoding. The fresh ion is `|0>` in every
/// ket and excited in every complement, so a plain CNOT from it returns the
/// ancilla to `|0>`.
fn number_state_steps(data: &[usize], ancilla: usize) -> Vec<CircuitStep> {
    let fresh = *data.last().expect("validated scheme");
    crate::gates::complement_steps(data, ancilla, fresh)
}

/// Normalized logical amplitudes over `M` qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct LogicalState {
    amps: Vec<C64>,
}

impl TryFrom<Vec<[f64; 2]>> for LogicalState {
    type Error = Error;

    fn try_from(v: Vec<[f64; 2]>) -> Result<Self> {
        let s = Self::new(v.into_iter().map(|[re, im]| C64::new(re, im)).collect())?;
        if (s.norm_sqr() - 1.0).abs() > NORM_TOL {
            return Err(Error::Precondition(format!(
                "logical state has squared norm {}",
                s.norm_sqr()
            )));
        }
        Ok(s)
    }
}

impl From<LogicalState> for Vec<[f64; 2]> {
    fn from(s: LogicalState) -> Self {
        s.amps.iter().map(|a| [a.re, a.im]).collect()
    }
}

impl LogicalState {
    /// Amplitude count must be a power of two; normalization is the caller's.
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() || !amps.len().is_power_of_two() {
            return Err(Error::Precondition(format!(
                "logical state needs a power-of-two amplitude count, got {}",
                amps.len()
            )));
        }
        Ok(Self { amps })
    }

    pub fn basis(n_qubits: usize, k: usize) -> Result<Self> {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n_qubits];
        *amps
            .get_mut(k)
            .ok_or(Error::IndexOutOfRange { index: k, n_ions: n_qubits })? = C64::new(1.0, 0.0);
        Self::new(amps)
    }

    pub fn qubit(c0: C64, c1: C64) -> Result<Self> {
        Self::new(vec![c0, c1])?.normalized()
    }

    /// Haar-random state from normalized complex Gaussians.
    pub fn random<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Self {
        loop {
            let amps: Vec<C64> = (0..1usize << n_qubits)
                .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            if let Ok(s) = (Self { amps }).normalized() {
                return s;
            }
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.amps.len().trailing_zeros() as usize
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm_sqr();
        if n < crate::state::ANNIHILATION_NORM {
            return Err(Error::Annihilated(n));
        }
        let s = 1.0 / n.sqrt();
        self.amps.iter_mut().for_each(|a| *a *= s);
        Ok(self)
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            .norm_sqr()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CodewordReport {
    pub in_code_space: bool,
    pub excitation_weights: Vec<u32>,
    pub projection_deficit: f64,
}

/// Projects `register` onto the scheme's code space.
pub fn codeword_report(register: &StateVector, scheme: &CodeScheme) -> Result<CodewordReport> {
    scheme.check_register(register)?;
    let norm = register.norm_sqr();
    let mut captured = 0.0;
    let amps = register.amplitudes();
    for m in 0..scheme.logical_dim() {
        let overlap: C64 = scheme.codeword_support(m).iter().map(|&(k, a)| a.conj() * amps[k]).sum();
        captured += overlap.norm_sqr();
    }
    let deficit = (1.0 - captured / norm).max(0.0);
    Ok(CodewordReport {
        in_code_space: deficit < CODE_SPACE_TOL,
        excitation_weights: register.excitation_weights(1e-24),
        projection_deficit: deficit,
    })
}

fn require_ground(register: &StateVector, ion: usize, what: &str) -> Result<()> {
    check_ion(ion, register.n_ions())?;
    let excited = register.excited_population(ion);
    if excited > ANCILLA_TOL {
        return Err(Error::Precondition(format!(
            "{what} ion {ion} not in |0> (excited population {excited:e})"
        )));
    }
    Ok(())
}

/// Writes `c0|0~> + c1|1~>` onto ion `a` and entangles it with ion `b`,
/// giving `c0|0~>_a|0~>_b + c1|1~>_a|1~>_b`. Both ions must start in `|0>`.
pub fn encode_fourier_pair(register: &StateVector, c0: C64, c1: C64, a: usize, b: usize) -> Result<StateVector> {
    require_ground(register, a, "data")?;
    require_ground(register, b, "partner")?;
    if a == b {
        return Err(Error::Precondition("ions a and b coincide".into()));
    }
    if ((c0.norm_sqr() + c1.norm_sqr()) - 1.0).abs() > NORM_TOL {
        return Err(Error::Precondition("|c0|^2 + |c1|^2 != 1".into()));
    }
    // unitary whose first column is (c0, -c1)
    let prep = [[c0, c1.conj()], [-c1, c0.conj()]];
    let loaded = register.apply_single_ion(a, &prep)?;
    Ok(run_circuit(&loaded, &fourier_pair_steps(a, b))?.0)
}

/// Disentangles ion `b` from a pair codeword, leaving `c0|0~> + c1|1~>` on
/// ion `a` and `|0~>` on ion `b`.
pub fn decode_fourier_pair(register: &StateVector, a: usize, b: usize) -> Result<StateVector> {
    let (out, _) = run_circuit(register, &[CircuitStep::cnot(b, a)])?;
    let (probe, _) = run_circuit(&out, &[CircuitStep::Pulse(PulseSpec::half_pi(b).inverse())])?;
    let deficit = probe.excited_population(b) / probe.norm_sqr();
    if deficit >= CODE_SPACE_TOL {
        return Err(Error::OutsideCodeSpace(deficit));
    }
    Ok(out)
}

/// Prepares partners `c, d` in `|1>|1>` and applies `U_ac U_bd`.
pub fn encode_fourier_symmetrized(
    register: &StateVector,
    [a, b, c, d]: [usize; 4],
) -> Result<StateVector> {
    require_ground(register, c, "partner")?;
    require_ground(register, d, "partner")?;
    Ok(run_circuit(register, &partner_steps(&[a, b], &[c, d]))?.0)
}

/// Complements every number state of `data_ions`, whose last entry must be
/// a fresh ion in `|0>`. The logical state sits on the other data ions.
pub fn encode_number_state(register: &StateVector, data_ions: &[usize], ancilla: usize) -> Result<StateVector> {
    let fresh = *data_ions
        .last()
        .ok_or_else(|| Error::Precondition("no data ions".into()))?;
    require_ground(register, fresh, "fresh")?;
    require_ground(register, ancilla, "ancilla")?;
    crate::gates::check_complement_args(register, data_ions, ancilla, fresh)?;
    let (out, _) = run_circuit(register, &number_state_steps(data_ions, ancilla))?;
    let excited = out.excited_population(ancilla);
    if excited > ANCILLA_TOL {
        return Err(Error::AncillaEntangled { ion: ancilla, excited });
    }
    Ok(out)
}

/// Sets the partner set to `|2^N - 1>` and applies one CNOT per pair.
pub fn encode_number_symmetrized(
    register: &StateVector,
    data_ions: &[usize],
    partner_ions: &[usize],
) -> Result<StateVector> {
    if data_ions.len() != partner_ions.len() {
        return Err(Error::Precondition("partner set size differs from data set".into()));
    }
    for &p in partner_ions {
        require_ground(register, p, "partner")?;
    }
    Ok(run_circuit(register, &partner_steps(data_ions, partner_ions))?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::fidelity;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn assert_same(a: &StateVector, b: &StateVector, tol: f64) {
        let f = fidelity(a, b).unwrap();
        assert!((f - 1.0).abs() < tol, "fidelity {f}");
    }

    #[test]
    fn fourier_pair_examples() {
        let reg = StateVector::ground(2).unwrap();
        let out = encode_fourier_pair(&reg, c(1.0), c(0.0), 1, 2).unwrap();
        for k in 0..4 {
            assert!((out.amplitude(k) - 0.5).norm() < 1e-12);
        }
        let out = encode_fourier_pair(&reg, c(0.0), c(1.0), 1, 2).unwrap();
        // |1~1~> = (|00> - |01> - |10> + |11>)/2
        let expected = [0.5, -0.5, -0.5, 0.5];
        for k in 0..4 {
            assert!((out.amplitude(k) - expected[k]).norm() < 1e-12);
        }

        let r = FRAC_1_SQRT_2;
        let enc = encode_fourier_pair(&reg, c(r), c(r), 1, 2).unwrap();
        let scheme = CodeScheme::fourier_pair();
        let back = scheme.decode(&enc).unwrap();
        assert!((back.fidelity(&LogicalState::qubit(c(r), c(r)).unwrap()) - 1.0).abs() < 1e-12);

        let excited_b = StateVector::basis_state(2, 2).unwrap();
        assert!(matches!(
            encode_fourier_pair(&excited_b, c(1.0), c(0.0), 1, 2),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn decode_fourier_pair_rejects_non_codeword() {
        // c0|0~0~> + c1|1~0~>: ion a flipped without its partner
        let (c0, c1) = (0.6, 0.8);
        let t0 = [FRAC_1_SQRT_2, FRAC_1_SQRT_2];
        let t1 = [FRAC_1_SQRT_2, -FRAC_1_SQRT_2];
        let amps = (0..4)
            .map(|k| {
                let (sa, sb) = (k & 1, k >> 1);
                c(c0 * t0[sa] * t0[sb] + c1 * t1[sa] * t0[sb])
            })
            .collect();
        let bad = StateVector::from_amplitudes(2, amps).unwrap();
        assert!(matches!(decode_fourier_pair(&bad, 1, 2), Err(Error::OutsideCodeSpace(_))));
        assert!(matches!(CodeScheme::fourier_pair().decode(&bad), Err(Error::OutsideCodeSpace(_))));

        let good = CodeScheme::fourier_pair()
            .encode(&LogicalState::qubit(c(c0), c(c1)).unwrap())
            .unwrap();
        let out = decode_fourier_pair(&good, 1, 2).unwrap();
        // a = c0|0~> + c1|1~>, b = |0~>
        let a = [c0 * t0[0] + c1 * t1[0], c0 * t0[1] + c1 * t1[1]];
        for k in 0..4 {
            let expected = a[k & 1] * t0[k >> 1];
            assert!((out.amplitude(k) - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn fourier_symmetrized_displayed_codeword() {
        let scheme = CodeScheme::fourier_symmetrized();
        // index = S_a + 2 S_b + 4 S_c + 8 S_d
        let idx = |sa: usize, sb: usize, sc: usize, sd: usize| sa | sb << 1 | sc << 2 | sd << 3;
        let c0_kets = [(idx(0, 0, 1, 1), 0.5), (idx(0, 1, 1, 0), 0.5), (idx(1, 0, 0, 1), 0.5), (idx(1, 1, 0, 0), 0.5)];
        let c1_kets = [(idx(0, 0, 1, 1), 0.5), (idx(0, 1, 1, 0), -0.5), (idx(1, 0, 0, 1), -0.5), (idx(1, 1, 0, 0), 0.5)];
        for (m, kets) in [(0, c0_kets), (1, c1_kets)] {
            let enc = scheme.encode(&LogicalState::basis(1, m).unwrap()).unwrap();
            let mut expected = vec![c(0.0); 32];
            for (k, a) in kets {
                expected[k] = c(a);
            }
            let expected = StateVector::from_amplitudes(5, expected).unwrap();
            assert!(enc.max_abs_diff(&expected) < 1e-12, "m = {m}");
            assert_eq!(codeword_report(&enc, &scheme).unwrap().excitation_weights, vec![2]);
        }
    }

    #[test]
    fn number_state_three_ion_codeword() {
        let scheme = CodeScheme::number_state(2);
        let cs = [c(0.1), C64::new(0.2, 0.3), c(-0.4), C64::new(0.5, -0.1)];
        let logical = LogicalState::new(cs.to_vec()).unwrap().normalized().unwrap();
        let cs = logical.amplitudes();
        let enc = scheme.encode(&logical).unwrap();
        let order = [0, 1, 2, 3, 3, 2, 1, 0];
        let mut expected = vec![c(0.0); 16];
        for (k, &ci) in order.iter().enumerate() {
            expected[k] = cs[ci] * FRAC_1_SQRT_2;
        }
        let expected = StateVector::from_amplitudes(4, expected).unwrap();
        assert!(enc.max_abs_diff(&expected) < 1e-12);
        let report = codeword_report(&enc, &scheme).unwrap();
        assert_eq!(report.excitation_weights, vec![0, 1, 2, 3]);
        assert!(report.in_code_space);
        for k in 0..8 {
            assert!((enc.amplitude(k) - enc.amplitude(7 - k)).norm() < 1e-12);
        }
    }

    #[test]
    fn number_state_bell_base_case() {
        let scheme = CodeScheme::number_state(1);
        let enc = scheme.encode(&LogicalState::basis(1, 0).unwrap()).unwrap();
        let mut expected = vec![c(0.0); 8];
        expected[0] = c(FRAC_1_SQRT_2);
        expected[3] = c(FRAC_1_SQRT_2);
        assert!(enc.max_abs_diff(&StateVector::from_amplitudes(3, expected).unwrap()) < 1e-12);
    }

    #[test]
    fn number_symmetrized_smallest_case() {
        // one data ion and one partner: (|0>_1|1>_2 + |1>_1|0>_2)/sqrt(2)
        let scheme = CodeScheme::number_symmetrized(0);
        assert_eq!(scheme.n_ions(), 3);
        let enc = scheme.encode(&LogicalState::basis(0, 0).unwrap()).unwrap();
        let mut expected = vec![c(0.0); 8];
        expected[0b10] = c(FRAC_1_SQRT_2);
        expected[0b01] = c(FRAC_1_SQRT_2);
        assert!(enc.max_abs_diff(&StateVector::from_amplitudes(3, expected).unwrap()) < 1e-12);
    }

    #[test]
    fn number_symmetrized_matches_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let scheme = CodeScheme::number_symmetrized(2);
        let logical = LogicalState::random(2, &mut rng);
        let enc = scheme.encode(&logical).unwrap();
        // sum_{k<4} c_k/sqrt2 (|k>_1|k-bar>_2 + |k-bar>_1|k>_2), sets of 3 ions
        let mut expected = vec![c(0.0); 128];
        for (k, &ck) in logical.amplitudes().iter().enumerate() {
            let bar = 7 ^ k;
            expected[k | bar << 3] += ck * FRAC_1_SQRT_2;
            expected[bar | k << 3] += ck * FRAC_1_SQRT_2;
        }
        let expected = StateVector::from_amplitudes(7, expected).unwrap();
        assert!(enc.max_abs_diff(&expected) < 1e-12);
        assert_eq!(codeword_report(&enc, &scheme).unwrap().excitation_weights, vec![3]);
    }

    #[test]
    fn circuit_encoders_agree_with_closed_forms_and_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let schemes = [
            CodeScheme::fourier_pair(),
            CodeScheme::fourier_symmetrized(),
            CodeScheme::number_state(2),
            CodeScheme::number_symmetrized(2),
        ];
        for scheme in &schemes {
            for _ in 0..100 {
                let logical = LogicalState::random(scheme.n_logical(), &mut rng);
                let enc = scheme.encode(&logical).unwrap();
                assert!(enc.max_abs_diff(&scheme.codeword(&logical).unwrap()) < 1e-12);
                let back = scheme.decode(&enc).unwrap();
                assert!((back.fidelity(&logical) - 1.0).abs() < 1e-12, "{:?}", scheme.kind);
            }
        }
    }

    #[test]
    fn spec_level_encoders_compose_to_scheme_encoders() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let logical = LogicalState::random(1, &mut rng);
        let (c0, c1) = (logical.amplitudes()[0], logical.amplitudes()[1]);
        let reg = StateVector::ground(5).unwrap();
        let pair = encode_fourier_pair(&reg, c0, c1, 1, 2).unwrap();
        let sym = encode_fourier_symmetrized(&pair, [1, 2, 3, 4]).unwrap();
        assert_same(&sym, &CodeScheme::fourier_symmetrized().encode(&logical).unwrap(), 1e-12);

        let logical = LogicalState::random(2, &mut rng);
        let scheme = CodeScheme::number_symmetrized(2);
        let loaded = scheme.load(&logical).unwrap();
        let num = encode_number_state(&loaded, &[1, 2, 3], 7).unwrap();
        let sym = encode_number_symmetrized(&num, &[1, 2, 3], &[4, 5, 6]).unwrap();
        assert_same(&sym, &scheme.encode(&logical).unwrap(), 1e-12);

        // fresh ion excited
        let bad = StateVector::basis_state(4, 4).unwrap();
        assert!(matches!(encode_number_state(&bad, &[1, 2, 3], 4), Err(Error::Precondition(_))));
    }

    #[test]
    fn scheme_validation() {
        assert!(CodeScheme::number_symmetrized(5).validate().is_ok());
        assert_eq!(CodeScheme::number_symmetrized(5).n_ions(), 13);
        assert!(matches!(CodeScheme::number_symmetrized(6).validate(), Err(Error::TooManyIons(15))));
        let mut s = CodeScheme::fourier_symmetrized();
        s.partner_ions = vec![2, 3];
        assert!(matches!(s.validate(), Err(Error::Config(_))));
        s.partner_ions = vec![3];
        assert!(s.validate().is_err());
        let mut s = CodeScheme::number_state(2);
        s.ancilla = None;
        assert!(s.validate().is_err());
    }

    #[test]
    fn scheme_json() {
        let s: CodeScheme = serde_json::from_str(
            r#"{"kind": "NumberState", "data_ions": [1, 2, 3], "partner_ions": [], "ancilla": 4}"#,
        )
        .unwrap();
        assert_eq!(s, CodeScheme::number_state(2));
        let back: CodeScheme = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<LogicalState>("[[1.0, 0.0], [1.0, 0.0]]").is_err());
        assert!(serde_json::from_str::<LogicalState>("[[0.6, 0.0], [0.0, 0.8]]").is_ok());
    }
}
