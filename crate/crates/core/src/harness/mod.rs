//! Experiment driver: cost model, storage experiments and the verification
//! suites behind the command-line tool.
//!
//! Dynamics run in units of the user-supplied decay rate. The
//! [`TimingModel`] is in seconds and only feeds wall-clock cost reports.

pub mod verify;

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codes::{CodeScheme, LogicalState, SchemeKind};
use crate::error::{Error, Result};
use crate::feedback::{table_one_formula, FeedbackPlan, FeedbackTable};
use crate::gates::{CircuitStep, GateCount};
use crate::state::MAX_IONS;
use crate::trajectory::{
    run_trajectory, time_grid, trajectory_rng, DecayModel, DetectionModel, FeedbackPolicy, TrajectoryOptions,
    DEFAULT_GRID,
};

pub use verify::{verify, Check, CheckStatus, Suite, SuiteReport};

pub const DEFAULT_THRESHOLD: f64 = 0.9;

/// Stream index reserved for drawing a random logical state, far away from
/// the per-trajectory streams.
const LOGICAL_STREAM: u64 = u64::MAX;

const AREA_TOL: f64 = 1e-9;

/// Gate durations and single-ion coherence time, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimingModel {
    pub tau_cnot: f64,
    pub tau_pi: f64,
    pub tau_half_pi: f64,
    pub tau_q: f64,
}

impl Default for TimingModel {
    fn default() -> Self {
        Self {
            tau_cnot: 100e-6,
            tau_pi: 20e-6,
            tau_half_pi: 10e-6,
            tau_q: 60.0,
        }
    }
}

impl TimingModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tau_cnot", self.tau_cnot),
            ("tau_pi", self.tau_pi),
            ("tau_half_pi", self.tau_half_pi),
            ("tau_q", self.tau_q),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Duration of one pulse. Areas other than pi/2 and pi scale linearly
    /// from the pi-pulse duration.
    pub fn pulse_time(&self, area_k: f64) -> f64 {
        let k = area_k.abs();
        if (k - FRAC_PI_2).abs() < AREA_TOL {
            self.tau_half_pi
        } else if (k - PI).abs() < AREA_TOL {
            self.tau_pi
        } else {
            self.tau_pi * k / PI
        }
    }
}

/// `tau_q / n`: coherence time of an `n`-qubit register whose qubits
/// decohere independently.
pub fn decoherence_time(n_qubits: usize, tau_q: f64) -> Result<f64> {
    if n_qubits == 0 {
        return Err(Error::Precondition("decoherence time needs at least one qubit".into()));
    }
    Ok(tau_q / n_qubits as f64)
}

pub fn circuit_wall_time(steps: &[CircuitStep], timing: &TimingModel) -> f64 {
    steps
        .iter()
        .map(|s| match s {
            CircuitStep::Pulse(p) => timing.pulse_time(p.area_k),
            CircuitStep::Cnot { .. } => timing.tau_cnot,
        })
        .sum()
}

/// Serial execution time of the correction gates (the ancilla reset is
/// not included, matching [`FeedbackPlan::gate_count`]).
pub fn feedback_wall_time(plan: &FeedbackPlan, timing: &TimingModel) -> f64 {
    circuit_wall_time(&plan.steps, timing)
}

/// Scheme given either by family name, expanded with the default layout,
/// or by an explicit ion assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SchemeSpec {
    Kind(SchemeKind),
    Layout(CodeScheme),
}

impl SchemeSpec {
    pub fn resolve(&self, n_logical: usize) -> Result<CodeScheme> {
        let scheme = match self {
            SchemeSpec::Kind(kind) => {
                let ions = match kind {
                    SchemeKind::FourierPair => 2,
                    SchemeKind::FourierSymmetrized => 5,
                    SchemeKind::NumberState => n_logical + 2,
                    SchemeKind::NumberStateSymmetrized => 2 * (n_logical + 1) + 1,
                };
                if ions > MAX_IONS {
                    return Err(Error::TooManyIons(ions));
                }
                CodeScheme::default_for(*kind, n_logical)
            }
            SchemeSpec::Layout(s) => s.clone(),
        };
        scheme.validate()?;
        Ok(scheme)
    }
}

fn default_n_logical() -> usize {
    1
}

fn default_gamma() -> f64 {
    1.0
}

fn default_efficiency() -> f64 {
    1.0
}

fn default_grid() -> usize {
    DEFAULT_GRID
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

/// Storage-experiment configuration as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scheme: SchemeSpec,
    #[serde(default = "default_n_logical")]
    pub n_logical: usize,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub per_ion_gamma: Option<Vec<f64>>,
    pub t_max: f64,
    pub trajectories: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_efficiency")]
    pub efficiency: f64,
    #[serde(default)]
    pub latency: f64,
    #[serde(default = "default_grid")]
    pub grid: usize,
    /// Logical amplitudes as `[re, im]` pairs; random from the seed if absent.
    #[serde(default)]
    pub logical: Option<LogicalState>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub timing: TimingModel,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn decay(&self) -> DecayModel {
        DecayModel {
            gamma: self.gamma,
            per_ion_gamma: self.per_ion_gamma.clone(),
        }
    }

    pub fn detection(&self) -> DetectionModel {
        DetectionModel {
            efficiency: self.efficiency,
            feedback_latency: self.latency,
        }
    }

    pub fn code_scheme(&self) -> Result<CodeScheme> {
        self.scheme.resolve(self.n_logical)
    }

    /// Checks everything that can be checked before any trajectory runs.
    /// Every problem is reported as [`Error::Config`].
    pub fn validate(&self) -> Result<()> {
        self.check().map_err(|e| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        })
    }

    fn check(&self) -> Result<()> {
        let scheme = self.code_scheme()?;
        self.decay().validate(scheme.n_ions())?;
        self.detection().validate()?;
        self.timing.validate()?;
        if self.trajectories == 0 {
            return Err(Error::Config("trajectories must be >= 1".into()));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::Config(format!("t_max must be positive, got {}", self.t_max)));
        }
        if self.grid < 2 {
            return Err(Error::Config("grid needs at least 2 points".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Config(format!("threshold must lie in (0, 1), got {}", self.threshold)));
        }
        if let Some(l) = &self.logical {
            if l.n_qubits() != scheme.n_logical() {
                return Err(Error::Config(format!(
                    "logical state has {} qubits, scheme stores {}",
                    l.n_qubits(),
                    scheme.n_logical()
                )));
            }
        }
        Ok(())
    }

    pub fn logical_state(&self) -> Result<LogicalState> {
        match &self.logical {
            Some(l) => Ok(l.clone()),
            None => {
                let n = self.code_scheme()?.n_logical();
                Ok(LogicalState::random(n, &mut trajectory_rng(self.seed, LOGICAL_STREAM)))
            }
        }
    }
}

/// One row of a fidelity timeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimelinePoint {
    pub time: f64,
    pub mean_fidelity: f64,
    pub stderr_fidelity: f64,
    /// Jumps per trajectory per unit time in the interval ending here.
    pub jump_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub trajectories: usize,
    pub total_jumps: usize,
    pub missed_jumps: usize,
    pub corrections: usize,
    pub correction_failures: usize,
    pub min_mean_fidelity: f64,
    /// First grid time with mean fidelity below the threshold.
    pub time_to_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub timeline: Vec<TimelinePoint>,
    pub summary: EnsembleSummary,
}

struct TrajectoryTally {
    fidelities: Vec<f64>,
    jump_times: Vec<f64>,
    missed: usize,
    corrections: usize,
    failures: usize,
}

/// Runs `trajectories` trajectories from `initial`; trajectory `i` draws
/// from stream `i` of `seed` whatever the policy, so corrected and
/// uncorrected ensembles built from the same seed are matched.
#[allow(clippy::too_many_arguments)]
pub fn run_ensemble(
    scheme: &CodeScheme,
    initial: &crate::state::StateVector,
    decay: &DecayModel,
    detection: &DetectionModel,
    policy: FeedbackPolicy<'_>,
    t_max: f64,
    grid: usize,
    trajectories: usize,
    seed: u64,
    threshold: f64,
) -> Result<EnsembleResult> {
    let times = time_grid(t_max, grid);
    let options = TrajectoryOptions {
        t_max,
        grid,
        record_states: false,
    };
    let tallies: Vec<TrajectoryTally> = (0..trajectories)
        .into_par_iter()
        .map(|i| {
            let mut rng = trajectory_rng(seed, i as u64);
            let r = run_trajectory(initial, Some(scheme), decay, detection, policy, &options, &mut rng)?;
            Ok(TrajectoryTally {
                fidelities: r.fidelity_timeline.iter().map(|&(_, f)| f).collect(),
                jump_times: r.jumps.iter().map(|j| j.time).collect(),
                missed: r.missed_jumps.len(),
                corrections: r.corrections,
                failures: r.correction_failures.len(),
            })
        })
        .collect::<Result<_>>()?;

    // sequential, index-ordered aggregation keeps the output bitwise stable
    let n = trajectories as f64;
    let mut jumps_per_bin = vec![0usize; times.len()];
    for tally in &tallies {
        for &t in &tally.jump_times {
            let bin = times.partition_point(|&g| g < t).min(times.len() - 1);
            jumps_per_bin[bin] += 1;
        }
    }
    let mut timeline = Vec::with_capacity(times.len());
    for (gi, &time) in times.iter().enumerate() {
        let mean = tallies.iter().map(|t| t.fidelities[gi]).sum::<f64>() / n;
        let stderr = if trajectories > 1 {
            let var = tallies.iter().map(|t| (t.fidelities[gi] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        let jump_rate = if gi == 0 {
            0.0
        } else {
            jumps_per_bin[gi] as f64 / (n * (time - times[gi - 1]))
        };
        timeline.push(TimelinePoint {
            time,
            mean_fidelity: mean,
            stderr_fidelity: stderr,
            jump_rate,
        });
    }
    let summary = EnsembleSummary {
        trajectories,
        total_jumps: tallies.iter().map(|t| t.jump_times.len()).sum(),
        missed_jumps: tallies.iter().map(|t| t.missed).sum(),
        corrections: tallies.iter().map(|t| t.corrections).sum(),
        correction_failures: tallies.iter().map(|t| t.failures).sum(),
        min_mean_fidelity: timeline.iter().map(|p| p.mean_fidelity).fold(f64::INFINITY, f64::min),
        time_to_threshold: timeline.iter().find(|p| p.mean_fidelity < threshold).map(|p| p.time),
    };
    Ok(EnsembleResult { timeline, summary })
}

pub fn timeline_csv(timeline: &[TimelinePoint]) -> String {
    let mut out = String::from("time,mean_fidelity,stderr_fidelity,jump_rate\n");
    for p in timeline {
        let row = [p.time, p.mean_fidelity, p.stderr_fidelity, p.jump_rate].map(csv_number);
        writeln!(out, "{}", row.join(",")).unwrap();
    }
    out
}

/// Shortest round-trip form, with an exponent for very small or large values.
fn csv_number(x: f64) -> String {
    serde_json::to_string(&x).unwrap_or_else(|_| x.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanCost {
    pub decayed_ion: usize,
    pub rotations: usize,
    pub cnots: usize,
    pub wall_time_s: f64,
}

/// Constructed correction costs next to the tabulated formula.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostReport {
    pub n_ions: usize,
    pub n_logical: usize,
    pub preparation: GateCount,
    pub plans: Vec<PlanCost>,
    pub formula: Option<GateCount>,
    pub matches_formula: Option<bool>,
    pub decoherence_time_s: f64,
    pub worst_feedback_time_s: f64,
    pub quoted_estimates: QuotedEstimates,
}

/// Wall-clock feedback estimates quoted in the literature for this design.
/// They do not follow from the gate durations and are reported for
/// comparison only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuotedEstimates {
    pub fourier_feedback_s: f64,
    pub thirteen_ion_feedback_s: f64,
    pub reproducible: bool,
}

pub const QUOTED_ESTIMATES: QuotedEstimates = QuotedEstimates {
    fourier_feedback_s: 0.5,
    thirteen_ion_feedback_s: 1.1,
    reproducible: false,
};

pub fn cost_report(scheme: &CodeScheme, timing: &TimingModel) -> Result<CostReport> {
    let table = FeedbackTable::new(scheme)?;
    let plans: Vec<PlanCost> = table
        .plans()
        .map(|p| {
            let c = p.gate_count();
            PlanCost {
                decayed_ion: p.decayed_ion,
                rotations: c.rotations,
                cnots: c.cnots,
                wall_time_s: feedback_wall_time(p, timing),
            }
        })
        .collect();
    let formula = table_one_formula(scheme.kind, scheme.n_logical());
    let matches_formula =
        formula.map(|f| plans.iter().all(|p| GateCount::new(p.rotations, p.cnots) == f));
    Ok(CostReport {
        n_ions: scheme.n_ions(),
        n_logical: scheme.n_logical(),
        preparation: scheme.preparation_count(),
        worst_feedback_time_s: plans.iter().map(|p| p.wall_time_s).fold(0.0, f64::max),
        plans,
        formula,
        matches_formula,
        decoherence_time_s: decoherence_time(scheme.n_ions(), timing.tau_q)?,
        quoted_estimates: QUOTED_ESTIMATES,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StorageSummary {
    pub trajectories: usize,
    pub total_jumps: usize,
    pub missed_jumps: usize,
    pub correction_failures: usize,
    pub threshold: f64,
    pub corrected: EnsembleSummary,
    pub uncorrected: EnsembleSummary,
    /// Corrected over uncorrected time to threshold, when both cross.
    pub storage_time_ratio: Option<f64>,
    /// `t_max` over the uncorrected time when only the uncorrected
    /// ensemble crosses.
    pub storage_time_ratio_lower_bound: Option<f64>,
    pub costs: CostReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StorageOutput {
    pub corrected: EnsembleResult,
    pub uncorrected: EnsembleResult,
    pub summary: StorageSummary,
    pub initial: crate::state::StateVector,
}

/// Matched corrected and uncorrected ensembles from the same codeword and seed.
pub fn storage_experiment(config: &ExperimentConfig) -> Result<StorageOutput> {
    config.validate()?;
    let scheme = config.code_scheme()?;
    let logical = config.logical_state()?;
    let initial = scheme.encode(&logical)?;
    let table = FeedbackTable::new(&scheme)?;
    let (decay, detection) = (config.decay(), config.detection());
    let run = |policy| {
        run_ensemble(
            &scheme,
            &initial,
            &decay,
            &detection,
            policy,
            config.t_max,
            config.grid,
            config.trajectories,
            config.seed,
            config.threshold,
        )
    };
    let corrected = run(FeedbackPolicy::Coherent(&table))?;
    let uncorrected = run(FeedbackPolicy::None)?;
    let (tc, tu) = (corrected.summary.time_to_threshold, uncorrected.summary.time_to_threshold);
    let summary = StorageSummary {
        trajectories: config.trajectories,
        total_jumps: corrected.summary.total_jumps,
        missed_jumps: corrected.summary.missed_jumps,
        correction_failures: corrected.summary.correction_failures,
        threshold: config.threshold,
        storage_time_ratio: match (tc, tu) {
            (Some(c), Some(u)) if u > 0.0 => Some(c / u),
            _ => None,
        },
        storage_time_ratio_lower_bound: match (tc, tu) {
            (None, Some(u)) if u > 0.0 => Some(config.t_max / u),
            _ => None,
        },
        corrected: corrected.summary.clone(),
        uncorrected: uncorrected.summary.clone(),
        costs: cost_report(&scheme, &config.timing)?,
    };
    Ok(StorageOutput {
        corrected,
        uncorrected,
        summary,
        initial,
    })
}

/// Writes `config.json`, both timelines and `summary.json` into `dir`.
pub fn write_storage_outputs(dir: &Path, config: &ExperimentConfig, out: &StorageOutput) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_json(&dir.join("config.json"), config)?;
    fs::write(dir.join("timeline_corrected.csv"), timeline_csv(&out.corrected.timeline))?;
    fs::write(dir.join("timeline_uncorrected.csv"), timeline_csv(&out.uncorrected.timeline))?;
    write_json(&dir.join("summary.json"), &out.summary)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
