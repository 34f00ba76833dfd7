//! Command-line front end.

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::Parser;
use serde_json::json;

use crate::config::{
    parse_grid, ChannelModelArg, ConfigError, ExperimentKind, ExperimentSpec, Mode, Reward,
};
use crate::experiments::run_experiment;
use crate::output::write_outputs;
use crate::sweep::with_threads;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Bandit-driven antenna state selection for three-user interference alignment.
///
/// Flags override values from `--config`; anything left unset takes the
/// default shown.
#[derive(Debug, Parser)]
#[command(name = "iabandit", version)]
pub struct Args {
    /// TOML configuration file used as the base.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Experiment to run [default: regret_vs_n].
    #[arg(long)]
    pub experiment: Option<ExperimentKind>,

    /// Policy to run; repeat for several. One of oracle, klucb[:a=X][:bernoulli],
    /// ucb1, random, conventional, fixed:P [default: depends on the experiment].
    #[arg(long = "policy", value_name = "POLICY")]
    pub policies: Vec<String>,

    /// Antenna states per receiver, P [default: 4].
    #[arg(long, value_name = "P")]
    pub states: Option<usize>,

    /// Horizon in slots [default: 10000].
    #[arg(long, value_name = "N")]
    pub slots: Option<usize>,

    /// Independent runs averaged per point [default: 100].
    #[arg(long, value_name = "R")]
    pub runs: Option<usize>,

    /// Master seed [default: 42].
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,

    /// Transmit power in dB: a grid `a:b:step` for the power sweeps, or a
    /// single value, which also sets the operating point of the other
    /// experiments [default: 0:30:5, operating point 20].
    #[arg(long = "snr-db", value_name = "A:B:STEP", allow_hyphen_values = true)]
    pub snr_db: Option<String>,

    /// Selection mode [default: combinational].
    #[arg(long)]
    pub mode: Option<Mode>,

    /// Bandit reward [default: chordal for chordal_cdf and
    /// distributed_vs_combinational, sumrate otherwise].
    #[arg(long)]
    pub reward: Option<Reward>,

    /// Channel pool model [default: independent].
    #[arg(long = "channel-model")]
    pub channel_model: Option<ChannelModelArg>,

    /// Output directory [default: out].
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Worker threads, 0 for all cores; outputs do not depend on it [default: 0].
    #[arg(long, value_name = "T")]
    pub threads: Option<usize>,
}

#[derive(Debug)]
enum Failure {
    Usage(String, Vec<String>),
    Runtime(String),
}

impl Failure {
    fn report(&self) -> i32 {
        let (code, record) = match self {
            Failure::Usage(kind, messages) => {
                (EXIT_USAGE, json!({"error": kind, "messages": messages}))
            }
            Failure::Runtime(message) => (
                EXIT_RUNTIME,
                json!({"error": "runtime", "messages": [message]}),
            ),
        };
        eprintln!("{record}");
        code
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Validation(list) => Failure::Usage("validation".into(), list),
            ConfigError::Parse(p) => Failure::Usage("parse".into(), vec![p.to_string()]),
            io @ ConfigError::Io { .. } => Failure::Usage("config".into(), vec![io.to_string()]),
        }
    }
}

/// Builds the spec from the optional base file and the flag overrides.
pub fn resolve(args: &Args) -> Result<ExperimentSpec, ConfigError> {
    let mut spec = match &args.config {
        Some(path) => ExperimentSpec::load(path)?,
        None => ExperimentSpec::default(),
    };
    if let Some(e) = args.experiment {
        spec.experiment = e;
    }
    if !args.policies.is_empty() {
        spec.policies = Some(args.policies.clone());
    }
    if let Some(p) = args.states {
        spec.states = p;
    }
    if let Some(n) = args.slots {
        spec.slots = n;
    }
    if let Some(r) = args.runs {
        spec.runs = r;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if let Some(g) = &args.snr_db {
        let grid =
            parse_grid(g).map_err(|e| ConfigError::Validation(vec![format!("snr-db: {e}")]))?;
        if grid.len() == 1 {
            spec.snr_db = grid[0];
        }
        spec.power_db = grid;
    }
    if let Some(m) = args.mode {
        spec.mode = m;
    }
    if let Some(r) = args.reward {
        spec.reward = Some(r);
    }
    if let Some(c) = args.channel_model {
        spec.channel_model = c;
    }
    if let Some(o) = &args.out {
        spec.out = o.clone();
    }
    if let Some(t) = args.threads {
        spec.threads = t;
    }
    spec.validate()?;
    Ok(spec)
}

fn execute(spec: &ExperimentSpec) -> Result<(), Failure> {
    let start = Instant::now();
    let out = with_threads(spec.threads, || run_experiment(spec))
        .and_then(|r| r)
        .map_err(|e| Failure::Runtime(format!("{e:#}")))?;
    let paths = write_outputs(&spec.out, spec, &out, start.elapsed().as_secs_f64())
        .map_err(|e| Failure::Runtime(format!("{e:#}")))?;
    for p in paths {
        println!("{}", p.display());
    }
    Ok(())
}

/// Parses `argv`, runs the experiment and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = resolve(&args)
        .map_err(Failure::from)
        .and_then(|spec| execute(&spec));
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => f.report(),
    }
}
