//! Dense pure and mixed states over registers of two-level ions.
//!
//! Ion `j` (1-based) occupies bit `j - 1` of a basis index, so the index of
//! a product state reads `k = S_N 2^(N-1) + ... + S_1 2^0`. All ion
//! arguments in this crate are 1-based.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Row-major 2x2 complex matrix acting on one ion, `m[row][col]`.
pub type Matrix2 = [[C64; 2]; 2];

pub const MAX_IONS: usize = 14;
pub const NORM_TOL: f64 = 1e-12;
pub const UNITARY_TOL: f64 = 1e-10;
/// Squared norms below this are treated as an annihilated state.
pub const ANNIHILATION_NORM: f64 = 1e-300;

pub const IDENTITY: Matrix2 = [
    [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
    [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
];

/// `|0><1|`, the lowering operator of a single ion.
pub const LOWERING: Matrix2 = [
    [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
    [C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
];

pub const BIT_FLIP: Matrix2 = [
    [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
    [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
];

fn check_size(n_ions: usize) -> Result<()> {
    if n_ions == 0 {
        Err(Error::EmptyRegister)
    } else if n_ions > MAX_IONS {
        Err(Error::TooManyIons(n_ions))
    } else {
        Ok(())
    }
}

/// Bit mask of a 1-based ion index.
#[inline]
pub fn ion_mask(ion: usize) -> usize {
    1 << (ion - 1)
}

pub fn check_ion(ion: usize, n_ions: usize) -> Result<()> {
    if ion == 0 || ion > n_ions {
        Err(Error::IonOutOfRange { ion, n_ions })
    } else {
        Ok(())
    }
}

/// Largest deviation of `u^dagger u` from the identity.
pub fn unitarity_deviation(u: &Matrix2) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = C64::new(0.0, 0.0);
            for r in 0..2 {
                acc += u[r][i].conj() * u[r][j];
            }
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((acc - target).norm());
        }
    }
    worst
}

pub fn matmul2(a: &Matrix2, b: &Matrix2) -> Matrix2 {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// A computational basis label of an `n_ions` register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisIndex {
    value: usize,
    n_ions: usize,
}

impl BasisIndex {
    pub fn new(value: usize, n_ions: usize) -> Result<Self> {
        check_size(n_ions)?;
        if value >= 1 << n_ions {
            return Err(Error::IndexOutOfRange { index: value, n_ions });
        }
        Ok(Self { value, n_ions })
    }

    pub fn value(self) -> usize {
        self.value
    }

    pub fn n_ions(self) -> usize {
        self.n_ions
    }

    /// Bitwise complement modulo `2^n`.
    pub fn complement(self) -> Self {
        Self {
            value: ((1 << self.n_ions) - 1) ^ self.value,
            n_ions: self.n_ions,
        }
    }

    /// Level of the given 1-based ion, 0 or 1.
    pub fn level(self, ion: usize) -> u8 {
        ((self.value >> (ion - 1)) & 1) as u8
    }

    pub fn hamming_weight(self) -> u32 {
        self.value.count_ones()
    }

    /// The bit string `S_N ... S_1`.
    pub fn bit_string(self) -> String {
        (1..=self.n_ions)
            .rev()
            .map(|ion| if self.level(ion) == 1 { '1' } else { '0' })
            .collect()
    }
}

/// Pure state of an `n_ions` register. Not necessarily normalized: the
/// non-unitary operations return un-normalized vectors on purpose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateSnapshot", into = "StateSnapshot")]
pub struct StateVector {
    n_ions: usize,
    amps: Vec<C64>,
}

/// Wire form of a [`StateVector`]: amplitudes as `[re, im]` pairs, index ascending.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub n_ions: usize,
    pub amplitudes: Vec<[f64; 2]>,
}

impl TryFrom<StateSnapshot> for StateVector {
    type Error = Error;

    fn try_from(s: StateSnapshot) -> Result<Self> {
        let amps = s.amplitudes.iter().map(|&[re, im]| C64::new(re, im)).collect();
        StateVector::from_amplitudes(s.n_ions, amps)
    }
}

impl From<StateVector> for StateSnapshot {
    fn from(s: StateVector) -> Self {
        StateSnapshot {
            n_ions: s.n_ions,
            amplitudes: s.amps.iter().map(|a| [a.re, a.im]).collect(),
        }
    }
}

impl StateVector {
    pub fn from_amplitudes(n_ions: usize, amps: Vec<C64>) -> Result<Self> {
        check_size(n_ions)?;
        if amps.len() != 1 << n_ions {
            return Err(Error::Precondition(format!(
                "expected {} amplitudes for {n_ions} ions, got {}",
                1usize << n_ions,
                amps.len()
            )));
        }
        Ok(Self { n_ions, amps })
    }

    /// All ions in `|0>`.
    pub fn ground(n_ions: usize) -> Result<Self> {
        Self::basis_state(n_ions, 0)
    }

    pub fn basis_state(n_ions: usize, k: usize) -> Result<Self> {
        let k = BasisIndex::new(k, n_ions)?;
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n_ions];
        amps[k.value()] = C64::new(1.0, 0.0);
        Ok(Self { n_ions, amps })
    }

    pub fn n_ions(&self) -> usize {
        self.n_ions
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitude(&self, k: usize) -> C64 {
        self.amps[k]
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() < NORM_TOL
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm_sqr();
        if n < ANNIHILATION_NORM {
            return Err(Error::Annihilated(n));
        }
        let s = 1.0 / n.sqrt();
        self.amps.iter_mut().for_each(|a| *a *= s);
        Ok(())
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    pub fn scale(&mut self, factor: C64) {
        self.amps.iter_mut().for_each(|a| *a *= factor);
    }

    /// Population of `|1>` on one ion.
    pub fn excited_population(&self, ion: usize) -> f64 {
        let mask = ion_mask(ion);
        self.amps
            .iter()
            .enumerate()
            .filter(|(k, _)| k & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Hamming weights of basis states whose probability exceeds `tol`.
    pub fn excitation_weights(&self, tol: f64) -> Vec<u32> {
        let mut w: Vec<u32> = self
            .amps
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm_sqr() > tol)
            .map(|(k, _)| k.count_ones())
            .collect();
        w.sort_unstable();
        w.dedup();
        w
    }

    /// In-place action of an arbitrary 2x2 matrix on one ion.
    pub(crate) fn transform_ion(&mut self, ion: usize, m: &Matrix2) {
        let mask = ion_mask(ion);
        for k in 0..self.amps.len() {
            if k & mask == 0 {
                let a0 = self.amps[k];
                let a1 = self.amps[k | mask];
                self.amps[k] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[k | mask] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    pub fn apply_single_ion(&self, ion: usize, u: &Matrix2) -> Result<Self> {
        check_ion(ion, self.n_ions)?;
        let dev = unitarity_deviation(u);
        if dev > UNITARY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        let mut out = self.clone();
        out.transform_ion(ion, u);
        Ok(out)
    }

    /// Applies `m` without renormalizing and returns the squared norm of
    /// the result alongside it.
    pub fn apply_nonunitary_single_ion(&self, ion: usize, m: &Matrix2) -> Result<(Self, f64)> {
        check_ion(ion, self.n_ions)?;
        let mut out = self.clone();
        out.transform_ion(ion, m);
        let norm = out.norm_sqr();
        if norm < ANNIHILATION_NORM {
            return Err(Error::Annihilated(norm));
        }
        Ok((out, norm))
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.n_ions != other.n_ions {
            return Err(Error::DimensionMismatch(self.n_ions, other.n_ions));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Largest amplitude-wise distance to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// `|<a|b>|^2`, clamped to `[0, 1]`.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr().clamp(0.0, 1.0))
}

/// Dense density matrix. Only the master-equation oracle and ensemble
/// averaging use it.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_ions: usize,
    entries: Vec<C64>,
}

impl DensityMatrix {
    pub fn zeros(n_ions: usize) -> Result<Self> {
        check_size(n_ions)?;
        let d = 1 << n_ions;
        Ok(Self {
            n_ions,
            entries: vec![C64::new(0.0, 0.0); d * d],
        })
    }

    pub fn from_entries(n_ions: usize, entries: Vec<C64>) -> Result<Self> {
        check_size(n_ions)?;
        let d = 1usize << n_ions;
        if entries.len() != d * d {
            return Err(Error::Precondition(format!(
                "expected {} entries, got {}",
                d * d,
                entries.len()
            )));
        }
        Ok(Self { n_ions, entries })
    }

    pub fn n_ions(&self) -> usize {
        self.n_ions
    }

    pub fn dim(&self) -> usize {
        1 << self.n_ions
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim() + col]
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let d = self.dim();
        let m = DMatrix::from_fn(d, d, |i, j| self.get(i, j));
        m.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Checks Hermiticity, unit trace and positivity.
    pub fn validate(&self) -> Result<()> {
        let h = self.hermiticity_deviation();
        if h > 1e-12 {
            return Err(Error::Precondition(format!("not Hermitian (deviation {h:e})")));
        }
        let tr = self.trace();
        if (tr - 1.0).norm() > 1e-12 {
            return Err(Error::Precondition(format!("trace {tr} != 1")));
        }
        let ev = self.min_eigenvalue();
        if ev < -1e-10 {
            return Err(Error::Precondition(format!("negative eigenvalue {ev:e}")));
        }
        Ok(())
    }

    /// `<psi|rho|psi>`.
    pub fn expectation(&self, psi: &StateVector) -> Result<f64> {
        if psi.n_ions() != self.n_ions {
            return Err(Error::DimensionMismatch(self.n_ions, psi.n_ions()));
        }
        let d = self.dim();
        let a = psi.amplitudes();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..d {
            if a[i] == C64::new(0.0, 0.0) {
                continue;
            }
            let row: C64 = (0..d).map(|j| self.get(i, j) * a[j]).sum();
            acc += a[i].conj() * row;
        }
        Ok(acc.re)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Adds `weight |s><s|` in place.
    pub(crate) fn add_outer(&mut self, weight: f64, s: &StateVector) {
        let d = self.dim();
        let a = s.amplitudes();
        for i in 0..d {
            let wi = a[i] * weight;
            for j in 0..d {
                self.entries[i * d + j] += wi * a[j].conj();
            }
        }
    }
}

pub fn pure_to_density(s: &StateVector) -> DensityMatrix {
    let mut rho = DensityMatrix::zeros(s.n_ions()).expect("state has a valid size");
    rho.add_outer(1.0, s);
    rho
}

/// Convex combination `sum_i w_i |s_i><s_i|`.
pub fn mix(states: &[(f64, StateVector)]) -> Result<DensityMatrix> {
    let first = states
        .first()
        .ok_or_else(|| Error::InvalidWeights("empty mixture".into()))?;
    let n = first.1.n_ions();
    let mut total = 0.0;
    for (w, s) in states {
        if *w < 0.0 || !w.is_finite() {
            return Err(Error::InvalidWeights(format!("weight {w} is negative")));
        }
        if s.n_ions() != n {
            return Err(Error::DimensionMismatch(n, s.n_ions()));
        }
        total += w;
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidWeights(format!("weights sum to {total}")));
    }
    let mut rho = DensityMatrix::zeros(n)?;
    for (w, s) in states {
        rho.add_outer(*w, s);
    }
    Ok(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn basis_state_layout() {
        let s = StateVector::basis_state(1, 0).unwrap();
        assert_eq!(s.amplitudes(), &[c(1.0), c(0.0)]);

        let k = BasisIndex::new(5, 3).unwrap();
        assert_eq!(k.bit_string(), "101");
        assert_eq!((k.level(1), k.level(2), k.level(3)), (1, 0, 1));

        let s = StateVector::basis_state(2, 3).unwrap();
        assert_eq!(s.excitation_weights(0.0), vec![2]);

        assert!(matches!(
            StateVector::basis_state(2, 4),
            Err(Error::IndexOutOfRange { index: 4, n_ions: 2 })
        ));
        assert!(matches!(StateVector::ground(15), Err(Error::TooManyIons(15))));
    }

    #[test]
    fn complement_is_involution() {
        for n in 1..=MAX_IONS {
            for k in [0, 1, (1 << n) - 1, (1 << n) / 3] {
                let b = BasisIndex::new(k, n).unwrap();
                assert_eq!(b.complement().complement(), b);
                assert_eq!(b.complement().value() + k, (1 << n) - 1);
            }
        }
    }

    #[test]
    fn single_ion_application() {
        let s = StateVector::ground(2).unwrap();
        assert_eq!(s.apply_single_ion(2, &IDENTITY).unwrap(), s);
        let flipped = s.apply_single_ion(1, &BIT_FLIP).unwrap();
        assert_eq!(flipped.amplitude(1), c(1.0));

        let bad = [[c(1.0), c(1.0)], [c(0.0), c(1.0)]];
        assert!(matches!(s.apply_single_ion(1, &bad), Err(Error::NotUnitary(_))));
        assert!(matches!(
            s.apply_single_ion(3, &IDENTITY),
            Err(Error::IonOutOfRange { ion: 3, .. })
        ));
    }

    #[test]
    fn lowering_operator() {
        let one = StateVector::basis_state(1, 1).unwrap();
        let (out, norm) = one.apply_nonunitary_single_ion(1, &LOWERING).unwrap();
        assert_eq!(out.amplitude(0), c(1.0));
        assert_eq!(norm, 1.0);

        let zero = StateVector::ground(1).unwrap();
        assert!(matches!(
            zero.apply_nonunitary_single_ion(1, &LOWERING),
            Err(Error::Annihilated(_))
        ));
    }

    #[test]
    fn fidelity_examples() {
        let zero = StateVector::ground(1).unwrap();
        let one = StateVector::basis_state(1, 1).unwrap();
        let plus = StateVector::from_amplitudes(1, vec![c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)]).unwrap();
        assert!((fidelity(&plus, &plus).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(fidelity(&zero, &one).unwrap(), 0.0);
        assert!((fidelity(&zero, &plus).unwrap() - 0.5).abs() < 1e-15);
        let two = StateVector::ground(2).unwrap();
        assert!(matches!(fidelity(&zero, &two), Err(Error::DimensionMismatch(1, 2))));
    }

    #[test]
    fn density_construction() {
        let zero = StateVector::ground(1).unwrap();
        let one = StateVector::basis_state(1, 1).unwrap();
        let rho = pure_to_density(&zero);
        assert_eq!(rho.entries(), &[c(1.0), c(0.0), c(0.0), c(0.0)]);
        rho.validate().unwrap();

        let m = mix(&[(0.5, zero.clone()), (0.5, one.clone())]).unwrap();
        assert_eq!(m.entries(), &[c(0.5), c(0.0), c(0.0), c(0.5)]);
        m.validate().unwrap();

        assert!(matches!(
            mix(&[(0.5, zero.clone()), (0.4, one)]),
            Err(Error::InvalidWeights(_))
        ));
        assert!(matches!(mix(&[(1.1, zero.clone()), (-0.1, zero)]), Err(Error::InvalidWeights(_))));
    }

    #[test]
    fn decay_branches_mix_to_exponential_population() {
        // One ion prepared in (|0> + |1>)/sqrt(2), observed at time t. With
        // probability 1 - p_excited(t) a jump has taken it to |0>;
        // otherwise it sits in the renormalized no-jump state. The mixture
        // reproduces rho_11(t) = rho_11(0) e^{-t} and rho_01(t) = rho_01(0) e^{-t/2}.
        let gamma_t: f64 = 0.7;
        let survive = 0.5 + 0.5 * (-gamma_t).exp();
        let no_jump = StateVector::from_amplitudes(
            1,
            vec![c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2 * (-gamma_t / 2.0).exp())],
        )
        .unwrap()
        .normalized()
        .unwrap();
        let jumped = StateVector::ground(1).unwrap();
        let rho = mix(&[(survive, no_jump), (1.0 - survive, jumped)]).unwrap();
        assert!((rho.get(1, 1).re - 0.5 * (-gamma_t).exp()).abs() < 1e-14);
        assert!((rho.get(0, 1).re - 0.5 * (-gamma_t / 2.0).exp()).abs() < 1e-14);
    }

    #[test]
    fn snapshot_json_shape() {
        let s = StateVector::basis_state(1, 1).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"n_ions":1,"amplitudes":[[0.0,0.0],[1.0,0.0]]}"#);
        let back: StateVector = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<StateVector>(r#"{"n_ions":2,"amplitudes":[[1.0,0.0]]}"#).is_err());
    }
}
