use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use decay_erw::{Checkpoints, ModelParams};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Moments,
    Phase,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

/// `geom:COUNT` (geometric from 100, or 1 when `n < 100`, to `n`) or a comma-separated list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckpointSpec {
    Geometric(usize),
    List(Vec<u64>),
}

impl Default for CheckpointSpec {
    fn default() -> Self {
        CheckpointSpec::Geometric(20)
    }
}

impl fmt::Display for CheckpointSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckpointSpec::Geometric(c) => write!(f, "geom:{c}"),
            CheckpointSpec::List(v) => {
                let parts: Vec<String> = v.iter().map(u64::to_string).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

impl FromStr for CheckpointSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if let Some(count) = s.strip_prefix("geom:") {
            let count = count
                .parse()
                .map_err(|_| format!("bad geometric checkpoint count `{count}`"))?;
            return Ok(CheckpointSpec::Geometric(count));
        }
        s.split(',')
            .map(|p| p.trim().parse::<u64>().map_err(|_| format!("bad checkpoint `{p}`")))
            .collect::<Result<_, _>>()
            .map(CheckpointSpec::List)
    }
}

impl CheckpointSpec {
    pub fn resolve(&self, n: u64) -> Result<Vec<u64>, CliError> {
        let cps = match self {
            CheckpointSpec::Geometric(count) => Checkpoints::geometric(*count, if n < 100 { 1 } else { 100 }, n),
            CheckpointSpec::List(v) => Checkpoints::new(v.clone()),
        }
        .map_err(|e| CliError::Usage(e.to_string()))?;
        if cps.last().is_some_and(|l| l > n) {
            return Err(CliError::Usage(format!("checkpoints must not exceed n = {n}")));
        }
        Ok(cps.as_slice().to_vec())
    }
}

/// Fully resolved settings of one invocation.
///
/// Serialises to the same flat `key=value` form that `--config` reads.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub n: u64,
    pub trials: u64,
    pub checkpoints: CheckpointSpec,
    pub seed: Option<u64>,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub quick: bool,
    /// Target accuracy of the `E[S_∞]` series.
    pub tol: f64,
    /// On-curve width for `phase`; the sweep defaults to half its γ spacing.
    pub eps: Option<f64>,
    pub sweep: bool,
    /// Fail unless `E[S_∞]` exists.
    pub limit: bool,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            alpha: 0.0,
            beta: 0.0,
            gamma: 0.5,
            n: 10_000,
            trials: 1_000,
            checkpoints: CheckpointSpec::default(),
            seed: None,
            format: Format::Csv,
            out: None,
            threads: None,
            quick: false,
            tol: 1e-10,
            eps: None,
            sweep: false,
            limit: false,
        }
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        ModelParams::new(self.alpha, self.beta, self.gamma).map_err(|e| CliError::Usage(e.to_string()))
    }

    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
            value
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("invalid value `{value}` for `{key}`")))
        }
        let value = value.trim();
        match key.trim() {
            "command" => {
                self.command = match value {
                    "simulate" => Command::Simulate,
                    "moments" => Command::Moments,
                    "phase" => Command::Phase,
                    "verify" => Command::Verify,
                    _ => return Err(CliError::Usage(format!("unknown command `{value}`"))),
                }
            }
            "alpha" => self.alpha = parse(key, value)?,
            "beta" => self.beta = parse(key, value)?,
            "gamma" => self.gamma = parse(key, value)?,
            "n" => self.n = parse(key, value)?,
            "trials" => self.trials = parse(key, value)?,
            "checkpoints" => self.checkpoints = value.parse().map_err(CliError::Usage)?,
            "seed" => self.seed = optional(key, value)?,
            "format" => {
                self.format = match value {
                    "csv" => Format::Csv,
                    "jsonl" => Format::Jsonl,
                    _ => return Err(CliError::Usage(format!("unknown format `{value}`"))),
                }
            }
            "out" => self.out = (!value.is_empty()).then(|| PathBuf::from(value)),
            "threads" => self.threads = optional(key, value)?,
            "quick" => self.quick = parse(key, value)?,
            "tol" => self.tol = parse(key, value)?,
            "eps" => self.eps = optional(key, value)?,
            "sweep" => self.sweep = parse(key, value)?,
            "limit" => self.limit = parse(key, value)?,
            other => return Err(CliError::Usage(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Reads `key=value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", i + 1)))?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    pub fn to_text(&self) -> String {
        let command = match self.command {
            Command::Simulate => "simulate",
            Command::Moments => "moments",
            Command::Phase => "phase",
            Command::Verify => "verify",
        };
        let opt = |v: Option<String>| v.unwrap_or_default();
        let format = match self.format {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        };
        [
            ("command", command.to_string()),
            ("alpha", self.alpha.to_string()),
            ("beta", self.beta.to_string()),
            ("gamma", self.gamma.to_string()),
            ("n", self.n.to_string()),
            ("trials", self.trials.to_string()),
            ("checkpoints", self.checkpoints.to_string()),
            ("seed", opt(self.seed.map(|s| s.to_string()))),
            ("format", format.to_string()),
            ("out", opt(self.out.as_ref().map(|p| p.display().to_string()))),
            ("threads", opt(self.threads.map(|t| t.to_string()))),
            ("quick", self.quick.to_string()),
            ("tol", self.tol.to_string()),
            ("eps", opt(self.eps.map(|e| e.to_string()))),
            ("sweep", self.sweep.to_string()),
            ("limit", self.limit.to_string()),
        ]
        .iter()
        .map(|(k, v)| format!("{k}={v}\n"))
        .collect()
    }

}

fn optional<T: FromStr>(key: &str, value: &str) -> Result<Option<T>, CliError> {
    if value.is_empty() {
        return Ok(None);
    }
    value
        .parse()
        .map(Some)
        .map_err(|_| CliError::Usage(format!("invalid value `{value}` for `{key}`")))
}
