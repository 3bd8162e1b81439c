//! `markov-cover` command line.
//!
//! Exit codes: 0 success (an infinite cover time is a successful answer),
//! 1 usage or parse error, 2 domain error, 3 state budget exceeded.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::aux::{
    aux_cover_time, build_aux_chain_with_budget, export_dot, AuxError, CoverTime, WalkVector,
};
use crate::chain::ChainError;
use crate::hitting::{hitting_times, HittingError};
use crate::rational::{render_decimal, render_rational};
use crate::simulate::{simulate_cover, simulate_hitting, SimConfig, SimError, SimSummary};
use crate::state_set::{StateId, StateSet};
use crate::{parse_chain_json, MarkovChain, Rational, DEFAULT_STATE_BUDGET};

const DECIMAL_DIGITS: u32 = 12;

#[derive(Debug, Parser)]
#[command(
    name = "markov-cover",
    version,
    about = "Exact hitting and cover times of rational Markov chains"
)]
struct Cli {
    /// Emit one JSON object instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a chain file and check that it is a stochastic rational chain.
    Validate { chain: PathBuf },
    /// Exact expected hitting time of a target set.
    Hit(HitArgs),
    /// Exact expected cover time of k walks.
    Cover(CoverArgs),
    /// Write the auxiliary chain as Graphviz DOT.
    AuxExport {
        #[command(flatten)]
        walks: CoverArgs,
        /// Output path for the DOT file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo estimates.
    Simulate {
        #[command(subcommand)]
        what: SimulateCommand,
    },
}

#[derive(Debug, Args)]
struct HitArgs {
    /// Chain file (JSON).
    chain: PathBuf,
    /// Starting state label.
    #[arg(long)]
    from: String,
    /// Comma-separated target labels.
    #[arg(long, value_delimiter = ',', required = true)]
    targets: Vec<String>,
}

#[derive(Debug, Args)]
struct CoverArgs {
    /// Chain file (JSON).
    chain: PathBuf,
    /// Number of independent walks.
    #[arg(long)]
    k: usize,
    /// Comma-separated start labels, one per walk.
    #[arg(long, value_delimiter = ',', required = true)]
    start: Vec<String>,
    /// Maximum number of auxiliary states to build.
    #[arg(long, default_value_t = DEFAULT_STATE_BUDGET)]
    budget: usize,
}

#[derive(Debug, Args)]
struct SimArgs {
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Steps after which a trial counts as truncated.
    #[arg(long, default_value_t = 1_000_000)]
    max_steps: u64,
}

#[derive(Debug, Subcommand)]
enum SimulateCommand {
    /// Estimate the cover time of k walks.
    Cover {
        chain: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        start: Vec<String>,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Estimate a hitting time.
    Hit {
        #[command(flatten)]
        query: HitArgs,
        #[command(flatten)]
        sim: SimArgs,
    },
}

/// What a process should print and return.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Domain(String),
    Budget(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Domain(_) => 2,
            Failure::Budget(_) => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Failure::Usage(_) => "usage",
            Failure::Domain(_) => "domain",
            Failure::Budget(_) => "budget",
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Domain(m) | Failure::Budget(m) => m,
        }
    }
}

impl From<ChainError> for Failure {
    fn from(e: ChainError) -> Self {
        if e.is_syntax() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Domain(e.to_string())
        }
    }
}

impl From<HittingError> for Failure {
    fn from(e: HittingError) -> Self {
        Failure::Domain(e.to_string())
    }
}

impl From<AuxError> for Failure {
    fn from(e: AuxError) -> Self {
        match e {
            AuxError::StateSpaceBudgetExceeded { .. } => Failure::Budget(e.to_string()),
            AuxError::NoWalks | AuxError::WalkCountMismatch { .. } | AuxError::UnknownStart(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Domain(e.to_string()),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidConfig | SimError::InvalidStart => Failure::Usage(e.to_string()),
            _ => Failure::Domain(e.to_string()),
        }
    }
}

/// Text lines plus the JSON `result` object of a successful command.
struct Report {
    text: String,
    result: Map<String, Value>,
}

impl Report {
    fn new(rational: Option<&Rational>, infinite: bool) -> Self {
        let mut result = Map::new();
        result.insert(
            "rational".into(),
            rational.map_or(Value::Null, |r| Value::String(render_rational(r))),
        );
        result.insert(
            "decimal".into(),
            rational.map_or(Value::Null, |r| {
                Value::String(render_decimal(r, DECIMAL_DIGITS))
            }),
        );
        result.insert("infinite".into(), Value::Bool(infinite));
        Self {
            text: String::new(),
            result,
        }
    }

    fn line(&mut self, line: impl AsRef<str>) {
        self.text.push_str(line.as_ref());
        self.text.push('\n');
    }

    fn field(&mut self, key: &str, value: Value) {
        self.result.insert(key.into(), value);
    }
}

pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                Outcome {
                    code: 1,
                    stdout: String::new(),
                    stderr: rendered,
                }
            } else {
                Outcome {
                    code: 0,
                    stdout: rendered,
                    stderr: String::new(),
                }
            };
        }
    };
    let name = command_name(&cli.command);
    match execute(&cli.command) {
        Ok(report) => {
            let stdout = if cli.json {
                let obj = json!({"command": name, "result": Value::Object(report.result)});
                format!("{obj}\n")
            } else {
                report.text
            };
            Outcome {
                code: 0,
                stdout,
                stderr: String::new(),
            }
        }
        Err(failure) => {
            let (stdout, stderr) = if cli.json {
                let obj = json!({
                    "command": name,
                    "error": {"kind": failure.kind(), "message": failure.message()},
                });
                (format!("{obj}\n"), String::new())
            } else {
                (String::new(), format!("error: {}\n", failure.message()))
            };
            Outcome {
                code: failure.code(),
                stdout,
                stderr,
            }
        }
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Validate { .. } => "validate",
        Command::Hit(_) => "hit",
        Command::Cover(_) => "cover",
        Command::AuxExport { .. } => "aux-export",
        Command::Simulate {
            what: SimulateCommand::Cover { .. },
        } => "simulate cover",
        Command::Simulate {
            what: SimulateCommand::Hit { .. },
        } => "simulate hit",
    }
}

fn load_chain(path: &Path) -> Result<MarkovChain, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(parse_chain_json(&text)?)
}

fn lookup(chain: &MarkovChain, label: &str) -> Result<StateId, Failure> {
    chain
        .id_of(label)
        .ok_or_else(|| Failure::Usage(format!("unknown state `{label}`")))
}

fn target_set(chain: &MarkovChain, labels: &[String]) -> Result<StateSet, Failure> {
    let mut set = chain.empty_set();
    for l in labels {
        set.insert(lookup(chain, l)?);
    }
    Ok(set)
}

fn walk_vector(chain: &MarkovChain, k: usize, labels: &[String]) -> Result<WalkVector, Failure> {
    if labels.len() != k {
        return Err(Failure::Usage(format!(
            "--k {k} needs exactly {k} start states, got {}",
            labels.len()
        )));
    }
    let ids = labels
        .iter()
        .map(|l| lookup(chain, l))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(WalkVector::new(ids)?)
}

fn labels_of(chain: &MarkovChain, set: &StateSet) -> Value {
    Value::Array(
        set.iter()
            .map(|s| Value::String(chain.label(s).to_string()))
            .collect(),
    )
}

fn execute(cmd: &Command) -> Result<Report, Failure> {
    match cmd {
        Command::Validate { chain } => {
            let chain = load_chain(chain)?;
            let mut r = Report::new(None, false);
            r.line(format!(
                "valid chain: {} states, {} transitions",
                chain.len(),
                chain.transition_count()
            ));
            r.line(format!("states: {}", chain.labels().join(", ")));
            r.line("every row sums to exactly 1");
            r.field("states", json!(chain.labels()));
            r.field("transitions", json!(chain.transition_count()));
            Ok(r)
        }
        Command::Hit(args) => {
            let chain = load_chain(&args.chain)?;
            let from = lookup(&chain, &args.from)?;
            let targets = target_set(&chain, &args.targets)?;
            let solution = hitting_times(&chain, &targets)?;
            let time = solution.time(from);
            let mut r = Report::new(time, time.is_none());
            let set_name = chain.format_set(&targets);
            match time {
                Some(t) => {
                    r.line(format!("{} ∈ B({set_name})", args.from));
                    r.line(render_rational(t));
                    r.line(render_decimal(t, DECIMAL_DIGITS));
                }
                None => r.line(format!("{} ∉ B({set_name})", args.from)),
            }
            r.field("from", json!(args.from));
            r.field("targets", labels_of(&chain, &targets));
            r.field("in_finite_set", json!(time.is_some()));
            r.field("finite_set", labels_of(&chain, solution.finite_set()));
            Ok(r)
        }
        Command::Cover(args) => {
            let chain = load_chain(&args.chain)?;
            let start = walk_vector(&chain, args.k, &args.start)?;
            let aux = build_aux_chain_with_budget(&chain, args.k, &start, args.budget)?;
            let time = aux_cover_time(&aux)?;
            let mut r = match &time {
                CoverTime::Finite(t) => {
                    let mut r = Report::new(Some(t), false);
                    r.line(render_rational(t));
                    r.line(render_decimal(t, DECIMAL_DIGITS));
                    r
                }
                CoverTime::Infinite => {
                    let mut r = Report::new(None, true);
                    r.line("infinite");
                    r
                }
            };
            r.field("k", json!(args.k));
            r.field("start", json!(args.start));
            r.field("aux_states", json!(aux.len()));
            Ok(r)
        }
        Command::AuxExport { walks, out } => {
            let chain = load_chain(&walks.chain)?;
            let start = walk_vector(&chain, walks.k, &walks.start)?;
            let aux = build_aux_chain_with_budget(&chain, walks.k, &start, walks.budget)?;
            std::fs::write(out, export_dot(&aux))
                .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", out.display())))?;
            let mut r = Report::new(None, false);
            r.line(format!(
                "wrote {} auxiliary states ({} covering) to {}",
                aux.len(),
                aux.target_set().len(),
                out.display()
            ));
            r.field("states", json!(aux.len()));
            r.field("targets", json!(aux.target_set().len()));
            r.field("out", json!(out.display().to_string()));
            Ok(r)
        }
        Command::Simulate { what } => {
            let (summary, sim) = match what {
                SimulateCommand::Cover {
                    chain,
                    k,
                    start,
                    sim,
                } => {
                    let chain = load_chain(chain)?;
                    let start = walk_vector(&chain, *k, start)?;
                    let cfg = SimConfig::new(sim.trials, sim.seed, sim.max_steps)?;
                    (simulate_cover(&chain, *k, &start, &cfg)?, sim)
                }
                SimulateCommand::Hit { query, sim } => {
                    let chain = load_chain(&query.chain)?;
                    let from = lookup(&chain, &query.from)?;
                    let targets = target_set(&chain, &query.targets)?;
                    let cfg = SimConfig::new(sim.trials, sim.seed, sim.max_steps)?;
                    (simulate_hitting(&chain, from, &targets, &cfg)?, sim)
                }
            };
            Ok(sim_report(&summary, sim))
        }
    }
}

fn sim_report(s: &SimSummary, sim: &SimArgs) -> Report {
    let mut r = Report::new(None, false);
    r.line(format!(
        "samples={} completed={} truncated={}",
        s.samples,
        s.completed(),
        s.truncated
    ));
    r.line(format!("mean={:.6} std_error={:.6}", s.mean, s.std_error));
    r.field("samples", json!(s.samples));
    r.field("truncated", json!(s.truncated));
    r.field("mean", json!(s.mean));
    r.field("std_error", json!(s.std_error));
    r.field("seed", json!(sim.seed));
    r.field("max_steps", json!(sim.max_steps));
    r
}
