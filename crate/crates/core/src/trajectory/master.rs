//! Brute-force Lindblad integration for small registers.
//!
//! `d rho/dt = sum_j gamma_j (L_j rho L_j^+ - 1/2 {L_j^+ L_j, rho})` with
//! `L_j = |0><1|_j`, integrated by classical RK4 with step doubling.

use crate::error::{Error, Result};
use crate::state::{ion_mask, DensityMatrix, C64};

use super::DecayModel;

pub const ORACLE_MAX_IONS: usize = 6;
/// Local error target per step, relative to the unit trace.
pub const ORACLE_RTOL: f64 = 1e-9;

fn generator(rho: &[C64], out: &mut [C64], n_ions: usize, gammas: &[f64], totals: &[f64]) {
    let d = 1usize << n_ions;
    for a in 0..d {
        for b in 0..d {
            let mut v = -0.5 * (totals[a] + totals[b]) * rho[a * d + b];
            for (j, &g) in gammas.iter().enumerate() {
                let m = ion_mask(j + 1);
                if a & m == 0 && b & m == 0 {
                    v += g * rho[(a | m) * d + (b | m)];
                }
            }
            out[a * d + b] = v;
        }
    }
}

struct Integrator<'a> {
    n_ions: usize,
    gammas: &'a [f64],
    totals: &'a [f64],
    k: [Vec<C64>; 4],
    tmp: Vec<C64>,
}

impl Integrator<'_> {
    fn rk4(&mut self, y: &[C64], h: f64) -> Vec<C64> {
        let len = y.len();
        let (n, g, t) = (self.n_ions, self.gammas, self.totals);
        generator(y, &mut self.k[0], n, g, t);
        for i in 0..len {
            self.tmp[i] = y[i] + self.k[0][i] * (0.5 * h);
        }
        generator(&self.tmp, &mut self.k[1], n, g, t);
        for i in 0..len {
            self.tmp[i] = y[i] + self.k[1][i] * (0.5 * h);
        }
        generator(&self.tmp, &mut self.k[2], n, g, t);
        for i in 0..len {
            self.tmp[i] = y[i] + self.k[2][i] * h;
        }
        generator(&self.tmp, &mut self.k[3], n, g, t);
        (0..len)
            .map(|i| y[i] + (self.k[0][i] + self.k[1][i] * 2.0 + self.k[2][i] * 2.0 + self.k[3][i]) * (h / 6.0))
            .collect()
    }
}

/// Exact (to `ORACLE_RTOL`) evolution of `rho0` over time `t`.
pub fn master_equation_evolve(rho0: &DensityMatrix, decay: &DecayModel, t: f64) -> Result<DensityMatrix> {
    let n = rho0.n_ions();
    if n > ORACLE_MAX_IONS {
        return Err(Error::OracleTooLarge(n));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Precondition(format!("evolution time {t} must be finite and >= 0")));
    }
    decay.validate(n)?;
    if t == 0.0 {
        return Ok(rho0.clone());
    }
    let gammas: Vec<f64> = (1..=n).map(|j| decay.rate(j)).collect();
    let totals = decay.total_rates(n);
    let len = rho0.entries().len();
    let mut integ = Integrator {
        n_ions: n,
        gammas: &gammas,
        totals: &totals,
        k: std::array::from_fn(|_| vec![C64::new(0.0, 0.0); len]),
        tmp: vec![C64::new(0.0, 0.0); len],
    };

    let fastest = totals.iter().cloned().fold(0.0, f64::max);
    let mut h = (0.1 / fastest).min(t);
    let mut y = rho0.entries().to_vec();
    let mut now = 0.0;
    while now < t {
        h = h.min(t - now);
        let full = integ.rk4(&y, h);
        let half = integ.rk4(&y, 0.5 * h);
        let two_halves = integ.rk4(&half, 0.5 * h);
        let err = full
            .iter()
            .zip(&two_halves)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
            / 15.0;
        if err <= ORACLE_RTOL || h < 1e-12 {
            // Richardson-extrapolated step
            y = two_halves
                .iter()
                .zip(&full)
                .map(|(b, a)| b + (b - a) / 15.0)
                .collect();
            now += h;
        }
        let factor = if err == 0.0 { 2.0 } else { (0.9 * (ORACLE_RTOL / err).powf(0.2)).clamp(0.2, 2.0) };
        h *= factor;
    }
    DensityMatrix::from_entries(n, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{pure_to_density, StateVector};

    #[test]
    fn single_emitter_closed_form() {
        let s = StateVector::from_amplitudes(1, vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]).unwrap();
        let rho0 = pure_to_density(&s);
        let model = DecayModel::uniform(1.3);
        for t in [0.1, 0.5, 1.0, 2.0, 5.0] {
            let rho = master_equation_evolve(&rho0, &model, t).unwrap();
            let e = (-1.3 * t).exp();
            assert!((rho.get(1, 1).re - 0.64 * e).abs() < 1e-9);
            assert!((rho.get(0, 1) - rho0.get(0, 1) * (-0.65 * t).exp()).norm() < 1e-9);
            rho.validate().unwrap();
        }
    }

    #[test]
    fn zero_time_and_size_limit() {
        let rho0 = pure_to_density(&StateVector::basis_state(2, 3).unwrap());
        assert_eq!(master_equation_evolve(&rho0, &DecayModel::uniform(1.0), 0.0).unwrap(), rho0);
        let big = DensityMatrix::zeros(7).unwrap();
        assert!(matches!(
            master_equation_evolve(&big, &DecayModel::uniform(1.0), 1.0),
            Err(Error::OracleTooLarge(7))
        ));
    }

    #[test]
    fn two_independent_emitters_factorize() {
        // |11> decays as a product of two single-ion solutions
        let rho0 = pure_to_density(&StateVector::basis_state(2, 3).unwrap());
        let model = DecayModel { gamma: 1.0, per_ion_gamma: Some(vec![0.7, 1.9]) };
        let t = 0.8;
        let rho = master_equation_evolve(&rho0, &model, t).unwrap();
        let (p1, p2) = ((-0.7 * t).exp(), (-1.9 * t).exp());
        let expected = [(1.0 - p1) * (1.0 - p2), p1 * (1.0 - p2), (1.0 - p1) * p2, p1 * p2];
        for k in 0..4 {
            assert!((rho.get(k, k).re - expected[k]).abs() < 1e-9);
        }
    }
}
