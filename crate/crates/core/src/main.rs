use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use ionqec::codes::{codeword_report, CodeScheme, CodewordReport, LogicalState};
use ionqec::error::Error;
use ionqec::feedback::{FeedbackPlan, FeedbackTable};
use ionqec::gates::{run_circuit, CircuitStep, GateCount};
use ionqec::harness::verify::VerifyOptions;
use ionqec::harness::{
    cost_report, feedback_wall_time, storage_experiment, verify, write_json, write_storage_outputs,
    ExperimentConfig, SchemeSpec, Suite, SuiteReport, TimingModel,
};
use ionqec::state::StateVector;
use ionqec::trajectory::trajectory_rng;

#[derive(Parser)]
#[command(name = "ionqec", version, about = "Trapped-ion error correction against spontaneous emission")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the seed in the configuration
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the resulting register state to state.json
    #[arg(long)]
    dump_state: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a logical state into a codeword
    Encode(Common),
    /// Print the feedback plans of a scheme with their costs
    Plan(Common),
    /// Run a circuit on a register state
    RunCircuit(Common),
    /// Corrected vs uncorrected storage of a codeword
    StorageExperiment {
        #[command(flatten)]
        common: Common,
        /// Fidelity defining the storage time
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Run a property suite, or all of them
    Verify {
        #[command(flatten)]
        common: Common,
        /// algebra, codewords, recovery, invariance, oracle, counts or all
        #[arg(long)]
        suite: Option<String>,
    },
}

enum Failure {
    Config(String),
    Property(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Json(_) => Failure::Config(e.to_string()),
            other => Failure::Property(other.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn config_error(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

fn read_config<T: for<'de> Deserialize<'de>>(path: Option<&Path>) -> Result<T, Failure> {
    let path = path.ok_or_else(|| config_error("--config is required"))?;
    let text = fs::read_to_string(path).map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))
}

fn emit<T: Serialize>(common: &Common, file: &str, value: &T) -> Outcome {
    println!("{}", serde_json::to_string_pretty(value).map_err(Error::from)?);
    if let Some(dir) = &common.out {
        fs::create_dir_all(dir).map_err(Error::from)?;
        write_json(&dir.join(file), value)?;
    }
    Ok(())
}

fn dump_state(common: &Common, state: &StateVector) -> Outcome {
    if common.dump_state {
        let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&dir).map_err(Error::from)?;
        write_json(&dir.join("state.json"), state)?;
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemeConfig {
    scheme: SchemeSpec,
    #[serde(default = "one")]
    n_logical: usize,
    #[serde(default)]
    logical: Option<LogicalState>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    decayed_ion: Option<usize>,
    #[serde(default)]
    timing: TimingModel,
}

fn one() -> usize {
    1
}

#[derive(Serialize)]
struct EncodeReport {
    scheme: CodeScheme,
    n_ions: usize,
    logical: LogicalState,
    steps: Vec<CircuitStep>,
    preparation: GateCount,
    codeword: CodewordReport,
}

fn encode(common: &Common) -> Outcome {
    let cfg: SchemeConfig = read_config(common.config.as_deref())?;
    let scheme = cfg.scheme.resolve(cfg.n_logical).map_err(config_error)?;
    let logical = match cfg.logical {
        Some(l) if l.n_qubits() != scheme.n_logical() => {
            return Err(config_error(format!("scheme stores {} logical qubits", scheme.n_logical())))
        }
        Some(l) => l,
        None => LogicalState::random(scheme.n_logical(), &mut trajectory_rng(common.seed.unwrap_or(cfg.seed), u64::MAX)),
    };
    let state = scheme.encode(&logical)?;
    let report = EncodeReport {
        n_ions: scheme.n_ions(),
        steps: scheme.encoding_steps(),
        preparation: scheme.preparation_count(),
        codeword: codeword_report(&state, &scheme)?,
        logical,
        scheme,
    };
    emit(common, "encode.json", &report)?;
    dump_state(common, &state)?;
    if !report.codeword.in_code_space {
        return Err(Failure::Property("encoded register left the code space".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct PlanReport<'a> {
    decayed_ion: usize,
    steps: &'a [CircuitStep],
    gate_count: GateCount,
    wall_time_s: f64,
}

fn plan(common: &Common) -> Outcome {
    let cfg: SchemeConfig = read_config(common.config.as_deref())?;
    let scheme = cfg.scheme.resolve(cfg.n_logical).map_err(config_error)?;
    cfg.timing.validate()?;
    let table = FeedbackTable::new(&scheme)?;
    let plans: Vec<&FeedbackPlan> = match cfg.decayed_ion {
        Some(ion) => vec![table
            .plan(ion)
            .ok_or_else(|| config_error(format!("ion {ion} has no correction")))?],
        None => table.plans().collect(),
    };
    let reports: Vec<PlanReport> = plans
        .iter()
        .map(|p| PlanReport {
            decayed_ion: p.decayed_ion,
            steps: &p.steps,
            gate_count: p.gate_count(),
            wall_time_s: feedback_wall_time(p, &cfg.timing),
        })
        .collect();
    #[derive(Serialize)]
    struct Out<'a> {
        plans: Vec<PlanReport<'a>>,
        costs: ionqec::harness::CostReport,
    }
    emit(
        common,
        "plan.json",
        &Out {
            plans: reports,
            costs: cost_report(&scheme, &cfg.timing)?,
        },
    )
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CircuitConfig {
    /// Explicit initial state; otherwise basis state `basis` of `n_ions`.
    #[serde(default)]
    initial: Option<StateVector>,
    #[serde(default)]
    n_ions: Option<usize>,
    #[serde(default)]
    basis: usize,
    steps: Vec<CircuitStep>,
}

#[derive(Serialize)]
struct CircuitReport {
    n_ions: usize,
    gate_count: GateCount,
    norm_sqr: f64,
    state: StateVector,
}

fn run_circuit_cmd(common: &Common) -> Outcome {
    let cfg: CircuitConfig = read_config(common.config.as_deref())?;
    let initial = match (cfg.initial, cfg.n_ions) {
        (Some(s), _) => s,
        (None, Some(n)) => StateVector::basis_state(n, cfg.basis).map_err(config_error)?,
        (None, None) => return Err(config_error("give either initial or n_ions")),
    };
    for step in &cfg.steps {
        step.validate(initial.n_ions()).map_err(config_error)?;
    }
    let (state, gate_count) = run_circuit(&initial, &cfg.steps)?;
    let report = CircuitReport {
        n_ions: state.n_ions(),
        gate_count,
        norm_sqr: state.norm_sqr(),
        state,
    };
    emit(common, "circuit.json", &report)?;
    dump_state(common, &report.state)
}

fn storage(common: &Common, threshold: Option<f64>) -> Outcome {
    let path = common.config.as_deref().ok_or_else(|| config_error("--config is required"))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(t) = threshold {
        cfg.threshold = t;
    }
    cfg.validate()?;
    let dir = common.out.as_deref().ok_or_else(|| config_error("--out is required"))?;
    let out = storage_experiment(&cfg)?;
    write_storage_outputs(dir, &cfg, &out)?;
    println!("{}", serde_json::to_string_pretty(&out.summary).map_err(Error::from)?);
    if common.dump_state {
        write_json(&dir.join("state.json"), &out.initial)?;
    }
    Ok(())
}

#[derive(Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct VerifyConfig {
    suite: Option<String>,
    seed: Option<u64>,
    trajectories: Option<usize>,
    random_states: Option<usize>,
}

fn verify_cmd(common: &Common, suite: Option<String>) -> Outcome {
    let cfg: VerifyConfig = match &common.config {
        Some(p) => read_config(Some(p))?,
        None => VerifyConfig::default(),
    };
    let mut opts = VerifyOptions::default();
    opts.seed = common.seed.or(cfg.seed).unwrap_or(opts.seed);
    opts.trajectories = cfg.trajectories.unwrap_or(opts.trajectories);
    opts.random_states = cfg.random_states.unwrap_or(opts.random_states);
    if opts.trajectories < 2 || opts.random_states == 0 {
        return Err(config_error("verify needs trajectories >= 2 and random_states >= 1"));
    }
    let name = suite.or(cfg.suite).unwrap_or_else(|| "all".into());
    let suites: Vec<Suite> = if name == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![name.parse().map_err(config_error)?]
    };
    let reports: Vec<SuiteReport> = suites.iter().map(|&s| verify(s, &opts)).collect::<Result<_, _>>()?;
    for r in &reports {
        for c in &r.checks {
            eprintln!("{:?} [{}] {}: {}", c.status, r.suite, c.name, c.detail);
        }
    }
    emit(common, "verify.json", &reports)?;
    if reports.iter().all(|r| r.passed) {
        Ok(())
    } else {
        Err(Failure::Property("verification failed".into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Encode(c) => encode(c),
        Command::Plan(c) => plan(c),
        Command::RunCircuit(c) => run_circuit_cmd(c),
        Command::StorageExperiment { common, threshold } => storage(common, *threshold),
        Command::Verify { common, suite } => verify_cmd(common, suite.clone()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Property(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
    }
}
