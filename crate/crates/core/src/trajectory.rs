//! Quantum-jump (Monte-Carlo wave-function) evolution of a register under
//! spontaneous emission, with optional coherent feedback.
//!
//! Between jumps the register follows the diagonal conditional evolution
//! `exp(-t/2 sum_j gamma_j |1><1|_j)`, so the no-jump probability has a
//! closed form and waiting times are found by bisection on it rather than
//! by time stepping. The dense master-equation integrator in [`master`]
//! is the reference the ensemble averages are checked against.

pub mod master;

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codes::CodeScheme;
use crate::error::{Error, Result};
use crate::feedback::{CorrectionFailure, FeedbackTable};
use crate::state::{fidelity, ion_mask, StateVector, C64, LOWERING};

pub use master::{master_equation_evolve, ORACLE_MAX_IONS};

/// Relative tolerance of the waiting-time bisection.
pub const WAIT_TIME_RTOL: f64 = 1e-10;
pub const DEFAULT_GRID: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayModel {
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_ion_gamma: Option<Vec<f64>>,
}

impl DecayModel {
    pub fn uniform(gamma: f64) -> Self {
        Self { gamma, per_ion_gamma: None }
    }

    pub fn validate(&self, n_ions: usize) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("decay rate must be positive, got {}", self.gamma)));
        }
        if let Some(rates) = &self.per_ion_gamma {
            if rates.len() != n_ions {
                return Err(Error::Config(format!(
                    "{} per-ion rates for a {n_ions}-ion register",
                    rates.len()
                )));
            }
            if rates.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
                return Err(Error::Config("per-ion rates must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn rate(&self, ion: usize) -> f64 {
        match &self.per_ion_gamma {
            Some(rates) => rates[ion - 1],
            None => self.gamma,
        }
    }

    /// Total emission rate of every basis state, indexed by `k`.
    pub fn total_rates(&self, n_ions: usize) -> Vec<f64> {
        let per_ion: Vec<f64> = (1..=n_ions).map(|j| self.rate(j)).collect();
        (0..1usize << n_ions)
            .map(|k| (0..n_ions).filter(|j| k >> j & 1 == 1).map(|j| per_ion[j]).sum())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionModel {
    pub efficiency: f64,
    pub feedback_latency: f64,
}

impl Default for DetectionModel {
    fn default() -> Self {
        Self {
            efficiency: 1.0,
            feedback_latency: 0.0,
        }
    }
}

impl DetectionModel {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::Config(format!("efficiency {} outside [0, 1]", self.efficiency)));
        }
        if !(self.feedback_latency >= 0.0 && self.feedback_latency.is_finite()) {
            return Err(Error::Config(format!("latency {} must be >= 0", self.feedback_latency)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    pub ion: usize,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureRecord {
    pub ion: usize,
    pub time: f64,
    pub failure: CorrectionFailure,
}

#[derive(Debug, Clone)]
pub struct TrajectoryResult {
    pub jumps: Vec<JumpRecord>,
    pub missed_jumps: Vec<JumpRecord>,
    pub corrections: usize,
    pub correction_failures: Vec<FailureRecord>,
    /// `(time, fidelity with the initial state)` on the sampling grid.
    pub fidelity_timeline: Vec<(f64, f64)>,
    /// Normalized states on the grid, kept only when requested.
    pub grid_states: Vec<StateVector>,
    pub final_state: StateVector,
}

/// Un-normalized `U_c(dt)|psi>` and its squared norm, the no-jump
/// probability over `dt`.
pub fn conditional_evolve(state: &StateVector, dt: f64, model: &DecayModel) -> (StateVector, f64) {
    let rates = model.total_rates(state.n_ions());
    evolve_with_rates(state, dt, &rates)
}

fn evolve_with_rates(state: &StateVector, dt: f64, rates: &[f64]) -> (StateVector, f64) {
    let mut out = state.clone();
    if dt != 0.0 {
        for (a, &r) in out.amplitudes_mut().iter_mut().zip(rates) {
            *a *= (-0.5 * r * dt).exp();
        }
    }
    let survival = out.norm_sqr();
    (out, survival)
}

/// Removes one excitation from `ion` and renormalizes.
pub fn apply_jump(state: &StateVector, ion: usize) -> Result<StateVector> {
    let (out, _) = state.apply_nonunitary_single_ion(ion, &LOWERING)?;
    out.normalized()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JumpSample {
    Jump { wait: f64, ion: usize },
    NoJumpBefore(f64),
}

/// Populations grouped by total emission rate; survival is a short sum of
/// exponentials.
struct SurvivalProfile {
    terms: Vec<(f64, f64)>,
}

impl SurvivalProfile {
    fn new(state: &StateVector, rates: &[f64]) -> Self {
        let norm = state.norm_sqr();
        let mut terms: Vec<(f64, f64)> = Vec::new();
        for (a, &r) in state.amplitudes().iter().zip(rates) {
            let p = a.norm_sqr() / norm;
            if p == 0.0 {
                continue;
            }
            match terms.iter_mut().find(|(rate, _)| *rate == r) {
                Some(t) => t.1 += p,
                None => terms.push((r, p)),
            }
        }
        terms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { terms }
    }

    fn survival(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(r, p)| if r == 0.0 { p } else { p * (-r * t).exp() })
            .sum()
    }
}

/// Draws the next emission from a normalized state, looking no further
/// than `t_max` ahead.
pub fn sample_jump<R: Rng + ?Sized>(state: &StateVector, model: &DecayModel, t_max: f64, rng: &mut R) -> JumpSample {
    let rates = model.total_rates(state.n_ions());
    sample_jump_with_rates(state, model, &rates, t_max, rng)
}

fn sample_jump_with_rates<R: Rng + ?Sized>(
    state: &StateVector,
    model: &DecayModel,
    rates: &[f64],
    t_max: f64,
    rng: &mut R,
) -> JumpSample {
    let r: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
    let profile = SurvivalProfile::new(state, rates);
    if profile.survival(t_max) >= r {
        return JumpSample::NoJumpBefore(t_max);
    }
    let (mut lo, mut hi) = (0.0, t_max);
    if !hi.is_finite() {
        // bracket the crossing; survival tends to the ground population < r
        let fastest = profile.terms.last().map_or(1.0, |&(rate, _)| rate);
        hi = 1.0 / fastest;
        while profile.survival(hi) > r {
            lo = hi;
            hi *= 2.0;
        }
    }
    while hi - lo > WAIT_TIME_RTOL * hi {
        let mid = 0.5 * (lo + hi);
        if profile.survival(mid) > r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let wait = 0.5 * (lo + hi);

    let (evolved, _) = evolve_with_rates(state, wait, rates);
    let n = state.n_ions();
    let weights: Vec<f64> = (1..=n)
        .map(|j| model.rate(j) * evolved_excited(&evolved, j))
        .collect();
    let total: f64 = weights.iter().sum();
    let mut pick = rng.random::<f64>() * total;
    let mut ion = n;
    for (j, w) in weights.iter().enumerate() {
        if *w > 0.0 {
            ion = j + 1;
            if pick < *w {
                break;
            }
            pick -= w;
        }
    }
    JumpSample::Jump { wait, ion }
}

fn evolved_excited(state: &StateVector, ion: usize) -> f64 {
    let mask = ion_mask(ion);
    state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(k, _)| k & mask != 0)
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

/// Uniform sampling grid over `[0, t_max]`, endpoints included.
pub fn time_grid(t_max: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..points).map(|i| t_max * i as f64 / (points - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, Copy)]
pub enum FeedbackPolicy<'a> {
    /// Jumps are detected but nothing is done about them.
    None,
    Coherent(&'a FeedbackTable),
}

#[derive(Debug, Clone)]
pub struct TrajectoryOptions {
    pub t_max: f64,
    pub grid: usize,
    pub record_states: bool,
}

/// The deterministic random stream of trajectory `index` under `seed`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Evolves `initial` to `options.t_max`, sampling jumps and applying
/// feedback to detected ones after the configured latency. Jumps during a
/// pending correction are queued; corrections are applied one at a time.
pub fn run_trajectory<R: Rng + ?Sized>(
    initial: &StateVector,
    scheme: Option<&CodeScheme>,
    decay: &DecayModel,
    detection: &DetectionModel,
    policy: FeedbackPolicy<'_>,
    options: &TrajectoryOptions,
    rng: &mut R,
) -> Result<TrajectoryResult> {
    let n = initial.n_ions();
    decay.validate(n)?;
    detection.validate()?;
    if let Some(s) = scheme {
        s.validate()?;
        if s.n_ions() != n {
            return Err(Error::DimensionMismatch(s.n_ions(), n));
        }
    }
    if !(options.t_max >= 0.0 && options.t_max.is_finite()) {
        return Err(Error::Config(format!("t_max {} must be finite and >= 0", options.t_max)));
    }
    let reference = initial.clone().normalized()?;
    let rates = decay.total_rates(n);
    let grid = time_grid(options.t_max, options.grid);

    let mut out = TrajectoryResult {
        jumps: Vec::new(),
        missed_jumps: Vec::new(),
        corrections: 0,
        correction_failures: Vec::new(),
        fidelity_timeline: Vec::with_capacity(grid.len()),
        grid_states: Vec::new(),
        final_state: reference.clone(),
    };
    let record = |out: &mut TrajectoryResult, t: f64, s: &StateVector| -> Result<()> {
        out.fidelity_timeline.push((t, fidelity(&reference, s)?));
        if options.record_states {
            out.grid_states.push(s.clone());
        }
        Ok(())
    };

    let mut state = reference.clone();
    let mut t = 0.0;
    let mut next_grid = 0;
    let mut pending: VecDeque<JumpRecord> = VecDeque::new();

    loop {
        let horizon = pending
            .front()
            .map_or(options.t_max, |p| (p.time).min(options.t_max));
        let sample = sample_jump_with_rates(&state, decay, &rates, horizon - t, rng);
        let seg_end = match sample {
            JumpSample::Jump { wait, .. } => t + wait,
            JumpSample::NoJumpBefore(_) => horizon,
        };
        while next_grid < grid.len() && grid[next_grid] < seg_end {
            let (s, _) = evolve_with_rates(&state, grid[next_grid] - t, &rates);
            record(&mut out, grid[next_grid], &s.normalized()?)?;
            next_grid += 1;
        }
        state = evolve_with_rates(&state, seg_end - t, &rates).0.normalized()?;
        t = seg_end;

        match sample {
            JumpSample::Jump { ion, .. } => {
                state = apply_jump(&state, ion)?;
                let jump = JumpRecord { ion, time: t };
                out.jumps.push(jump);
                let detected = detection.efficiency >= 1.0 || rng.random::<f64>() < detection.efficiency;
                match policy {
                    FeedbackPolicy::Coherent(_) if detected => pending.push_back(JumpRecord {
                        ion,
                        time: t + detection.feedback_latency,
                    }),
                    FeedbackPolicy::Coherent(_) => out.missed_jumps.push(jump),
                    FeedbackPolicy::None => {}
                }
            }
            JumpSample::NoJumpBefore(_) => {
                if let (Some(due), FeedbackPolicy::Coherent(table)) = (pending.front().copied(), policy) {
                    if due.time <= t {
                        pending.pop_front();
                        let outcome = table.correct(&state, due.ion)?;
                        state = outcome.state.normalized()?;
                        out.corrections += 1;
                        if let Some(failure) = outcome.failure {
                            out.correction_failures.push(FailureRecord {
                                ion: due.ion,
                                time: t,
                                failure,
                            });
                        }
                        continue;
                    }
                }
                if t >= options.t_max {
                    break;
                }
            }
        }
    }
    while next_grid < grid.len() {
        record(&mut out, grid[next_grid], &state)?;
        next_grid += 1;
    }
    out.final_state = state;
    Ok(out)
}

/// Ensemble estimate of a density matrix: entrywise mean and standard error.
#[derive(Debug, Clone)]
pub struct DensityEstimate {
    pub mean: crate::state::DensityMatrix,
    pub stderr_re: Vec<f64>,
    pub stderr_im: Vec<f64>,
}

impl DensityEstimate {
    /// Largest entrywise deviation from `exact` measured in standard errors.
    /// Entries with zero spread must agree to `1e-12`.
    pub fn worst_sigma(&self, exact: &crate::state::DensityMatrix) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, (&m, &e)) in self.mean.entries().iter().zip(exact.entries()).enumerate() {
            for (diff, se) in [((m.re - e.re).abs(), self.stderr_re[i]), ((m.im - e.im).abs(), self.stderr_im[i])] {
                let z = if diff <= 1e-12 {
                    0.0
                } else if se > 0.0 {
                    diff / se
                } else {
                    f64::INFINITY
                };
                worst = worst.max(z);
            }
        }
        worst
    }
}

/// Averages `|psi><psi|` over `trajectories` unfed trajectories at the
/// requested times. Trajectory `i` uses stream `i` of `seed`.
pub fn ensemble_density(
    initial: &StateVector,
    decay: &DecayModel,
    times: &[f64],
    trajectories: usize,
    seed: u64,
) -> Result<Vec<DensityEstimate>> {
    use rayon::prelude::*;

    let n = initial.n_ions();
    let d = 1usize << n;
    let per_traj: Vec<Vec<StateVector>> = (0..trajectories)
        .into_par_iter()
        .map(|i| -> Result<Vec<StateVector>> {
            let mut rng = trajectory_rng(seed, i as u64);
            let mut states = Vec::with_capacity(times.len());
            let mut state = initial.clone().normalized()?;
            let mut t0 = 0.0;
            for &t in times {
                let opts = TrajectoryOptions {
                    t_max: t - t0,
                    grid: 0,
                    record_states: false,
                };
                let r = run_trajectory(
                    &state,
                    None,
                    decay,
                    &DetectionModel::default(),
                    FeedbackPolicy::None,
                    &opts,
                    &mut rng,
                )?;
                state = r.final_state;
                states.push(state.clone());
                t0 = t;
            }
            Ok(states)
        })
        .collect::<Result<_>>()?;

    let mut estimates = Vec::with_capacity(times.len());
    let count = trajectories as f64;
    for ti in 0..times.len() {
        let mut sum = vec![C64::new(0.0, 0.0); d * d];
        let mut sum_sq_re = vec![0.0; d * d];
        let mut sum_sq_im = vec![0.0; d * d];
        for states in &per_traj {
            let a = states[ti].amplitudes();
            for i in 0..d {
                for j in 0..d {
                    let v = a[i] * a[j].conj();
                    sum[i * d + j] += v;
                    sum_sq_re[i * d + j] += v.re * v.re;
                    sum_sq_im[i * d + j] += v.im * v.im;
                }
            }
        }
        let mean: Vec<C64> = sum.iter().map(|s| s / count).collect();
        let se = |sq: &[f64], pick: fn(C64) -> f64| -> Vec<f64> {
            mean.iter()
                .zip(sq)
                .map(|(&m, &s2)| {
                    let mu = pick(m);
                    let var = (s2 / count - mu * mu).max(0.0) * count / (count - 1.0).max(1.0);
                    (var / count).sqrt()
                })
                .collect()
        };
        let stderr_re = se(&sum_sq_re, |z| z.re);
        let stderr_im = se(&sum_sq_im, |z| z.im);
        estimates.push(DensityEstimate {
            mean: crate::state::DensityMatrix::from_entries(n, mean)?,
            stderr_re,
            stderr_im,
        });
    }
    Ok(estimates)
}
