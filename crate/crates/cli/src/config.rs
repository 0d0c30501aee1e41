//! Experiment configuration: a TOML file, overridden field by field by flags.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use sysnc::codecs::Scheme;
use sysnc::gf2::DEFAULT_MAX_GENERATION;
use sysnc::simulator::DecoderKind;

use crate::CliError;

pub const DEFAULT_TRIALS: u64 = 100_000;
pub const DEFAULT_REPETITIONS: u64 = 100;
pub const DEFAULT_PAYLOAD_LEN: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Analyze,
    Simulate,
    Metrics,
    Bench,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Option<Mode>,
    #[serde(default, with = "names")]
    pub scheme: Vec<Scheme>,
    #[serde(default)]
    pub k: Vec<u64>,
    /// Recovery thresholds; empty means `M = K`.
    #[serde(default)]
    pub m: Vec<u64>,
    pub n_min: Option<u64>,
    pub n_max: Option<u64>,
    #[serde(default)]
    pub p: Vec<f64>,
    #[serde(default = "default_q")]
    pub q: u64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    pub seed: Option<u64>,
    pub p_hat: Option<f64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    #[serde(default = "default_repetitions")]
    pub repetitions: u64,
    #[serde(default = "default_payload_len")]
    pub payload_len: usize,
    #[serde(default = "default_decoders", with = "decoder_names")]
    pub decoders: Vec<DecoderKind>,
}

fn default_q() -> u64 {
    2
}
fn default_trials() -> u64 {
    DEFAULT_TRIALS
}
fn default_repetitions() -> u64 {
    DEFAULT_REPETITIONS
}
fn default_payload_len() -> usize {
    DEFAULT_PAYLOAD_LEN
}
fn default_decoders() -> Vec<DecoderKind> {
    vec![DecoderKind::Ge, DecoderKind::GePd]
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: None,
            scheme: Vec::new(),
            k: Vec::new(),
            m: Vec::new(),
            n_min: None,
            n_max: None,
            p: Vec::new(),
            q: default_q(),
            trials: default_trials(),
            seed: None,
            p_hat: None,
            out: None,
            threads: None,
            repetitions: default_repetitions(),
            payload_len: default_payload_len(),
            decoders: default_decoders(),
        }
    }
}

mod names {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};
    use sysnc::codecs::Scheme;

    pub fn serialize<S: Serializer>(v: &[Scheme], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| x.name()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Scheme>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| s.parse().map_err(D::Error::custom))
            .collect()
    }
}

mod decoder_names {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};
    use sysnc::simulator::DecoderKind;

    pub fn serialize<S: Serializer>(v: &[DecoderKind], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| x.name()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<DecoderKind>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| super::parse_decoder(s).map_err(D::Error::custom))
            .collect()
    }
}

pub fn parse_decoder(s: &str) -> Result<DecoderKind, String> {
    match s.trim() {
        "ge" => Ok(DecoderKind::Ge),
        "gepd" | "ge-pd" => Ok(DecoderKind::GePd),
        other => Err(format!("unknown decoder `{other}` (expected ge or gepd)")),
    }
}

/// Integers given on the command line as one argument.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntList(pub Vec<u64>);

fn int_list_arg(s: &str) -> Result<IntList, String> {
    parse_int_list(s).map(IntList)
}

/// Parses `5`, `1..30` (inclusive) or comma-separated mixes of both.
pub fn parse_int_list(s: &str) -> Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let int = |x: &str| x.trim().parse::<u64>().map_err(|e| format!("`{x}`: {e}"));
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b) = (int(a)?, int(b.trim_start_matches('='))?);
                if a > b {
                    return Err(format!("empty range `{part}`"));
                }
                out.extend(a..=b);
            }
            None => out.push(int(part)?),
        }
    }
    Ok(out)
}

/// Command-line overrides; every field left unset keeps the file's value.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// TOML file with the same keys as the flags (underscores for dashes).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Transmission schemes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub scheme: Vec<Scheme>,
    /// Generation sizes: `20`, `1..30` or a comma list.
    #[arg(long, value_parser = int_list_arg)]
    pub k: Option<IntList>,
    /// Recovery thresholds, same syntax as `--k`; defaults to K.
    #[arg(long, value_parser = int_list_arg)]
    pub m: Option<IntList>,
    /// Single N; shorthand for `--n-min N --n-max N`.
    #[arg(long, conflicts_with_all = ["n_min", "n_max"])]
    pub n: Option<u64>,
    #[arg(long)]
    pub n_min: Option<u64>,
    /// Last N evaluated; for metrics, the search cap for N̂.
    #[arg(long)]
    pub n_max: Option<u64>,
    /// Erasure probabilities, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub p: Vec<f64>,
    #[arg(long)]
    pub q: Option<u64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub p_hat: Option<f64>,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for simulation.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Timed repetitions per decoder and K.
    #[arg(long)]
    pub repetitions: Option<u64>,
    /// Payload bytes per packet in benchmarks.
    #[arg(long)]
    pub payload_len: Option<usize>,
    /// Decoders to benchmark, comma separated (ge, gepd).
    #[arg(long, value_delimiter = ',', value_parser = parse_decoder)]
    pub decoders: Vec<DecoderKind>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config file: {}", e.message())))
    }

    /// TOML integers are signed, so a seed above `i64::MAX` has no file form.
    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self)
            .map_err(|e| CliError::Config(format!("config not representable in TOML: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Io(std::io::Error::new(
                e.kind(),
                format!("cannot read config {}: {e}", path.display()),
            ))
        })?;
        Self::from_toml(&text)
    }

    /// File config (if any) with the flags laid over it.
    pub fn resolve(mode: Mode, flags: Flags) -> Result<Self, CliError> {
        let mut cfg = match &flags.config {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        cfg.mode = Some(mode);
        if !flags.scheme.is_empty() {
            cfg.scheme = flags.scheme;
        }
        if let Some(IntList(k)) = flags.k {
            cfg.k = k;
        }
        if let Some(IntList(m)) = flags.m {
            cfg.m = m;
        }
        if let Some(n) = flags.n {
            cfg.n_min = Some(n);
            cfg.n_max = Some(n);
        }
        cfg.n_min = flags.n_min.or(cfg.n_min);
        cfg.n_max = flags.n_max.or(cfg.n_max);
        if !flags.p.is_empty() {
            cfg.p = flags.p;
        }
        cfg.q = flags.q.unwrap_or(cfg.q);
        cfg.trials = flags.trials.unwrap_or(cfg.trials);
        cfg.seed = flags.seed.or(cfg.seed);
        cfg.p_hat = flags.p_hat.or(cfg.p_hat);
        cfg.out = flags.out.or(cfg.out);
        cfg.threads = flags.threads.or(cfg.threads);
        cfg.repetitions = flags.repetitions.unwrap_or(cfg.repetitions);
        cfg.payload_len = flags.payload_len.unwrap_or(cfg.payload_len);
        if !flags.decoders.is_empty() {
            cfg.decoders = flags.decoders;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn mode(&self) -> Result<Mode, CliError> {
        self.mode.ok_or_else(|| config_err("mode is not set"))
    }

    /// Thresholds to evaluate for generation size `k`.
    pub fn thresholds(&self, k: u64) -> Vec<u64> {
        if self.m.is_empty() {
            vec![k]
        } else {
            self.m.clone()
        }
    }

    fn max_k(&self) -> u64 {
        self.k.iter().copied().max().unwrap_or(0)
    }

    /// First and last N; the default range is `1..=2K`.
    pub fn n_range(&self) -> (u64, u64) {
        (
            self.n_min.unwrap_or(1),
            self.n_max.unwrap_or(2 * self.max_k()),
        )
    }

    /// Search cap for N̂; defaults to `8K`.
    pub fn search_cap(&self, k: u64) -> u64 {
        self.n_max.unwrap_or(8 * k)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let mode = self.mode()?;
        if self.k.is_empty() {
            return Err(config_err("K is not set"));
        }
        for &k in &self.k {
            if k == 0 {
                return Err(config_err("K must be at least 1"));
            }
            if k > DEFAULT_MAX_GENERATION as u64 {
                return Err(config_err(&format!(
                    "K exceeds the maximum generation size {DEFAULT_MAX_GENERATION} (K={k})"
                )));
            }
            for &m in &self.m {
                if m == 0 {
                    return Err(config_err("M must be at least 1"));
                }
                if m > k {
                    return Err(config_err(&format!("M exceeds K (M={m}, K={k})")));
                }
            }
        }
        if mode == Mode::Bench {
            if self.repetitions == 0 {
                return Err(config_err("repetitions must be at least 1"));
            }
            if self.payload_len == 0 {
                return Err(config_err("payload length must be at least 1"));
            }
            if self.decoders.is_empty() {
                return Err(config_err("no decoders selected"));
            }
            return Ok(());
        }
        if self.scheme.is_empty() {
            return Err(config_err("scheme is not set"));
        }
        if self.p.is_empty() {
            return Err(config_err("p is not set"));
        }
        if let Some(p) = self.p.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(config_err(&format!("p must lie in [0, 1] (p={p})")));
        }
        if self.q < 2 {
            return Err(config_err(&format!("q must be at least 2 (q={})", self.q)));
        }
        let (n_min, n_max) = self.n_range();
        if mode != Mode::Metrics {
            if n_min == 0 {
                return Err(config_err("N must be at least 1"));
            }
            if n_min > n_max {
                return Err(config_err(&format!(
                    "N range is empty (n_min={n_min}, n_max={n_max})"
                )));
            }
        }
        if matches!(mode, Mode::Simulate | Mode::Metrics) && self.trials == 0 {
            return Err(config_err("trials must be at least 1"));
        }
        if mode == Mode::Simulate && self.seed.is_none() {
            return Err(config_err("seed is required for simulate"));
        }
        if mode == Mode::Metrics {
            match self.p_hat {
                None => return Err(config_err("p_hat is required for metrics")),
                Some(t) if !(t > 0.0 && t <= 1.0) => {
                    return Err(config_err(&format!("p_hat must lie in (0, 1] (p_hat={t})")))
                }
                _ => {}
            }
            if self.needs_simulation() && self.seed.is_none() {
                return Err(config_err(
                    "seed is required for straightforward partial recovery, which is simulated",
                ));
            }
            for &k in &self.k {
                if self.search_cap(k) < k {
                    return Err(config_err(&format!(
                        "N_max below K (N_max={}, K={k})",
                        self.search_cap(k)
                    )));
                }
            }
        }
        Ok(())
    }

    /// Metrics has no closed form for straightforward coding with `M < K`.
    pub fn needs_simulation(&self) -> bool {
        self.scheme.contains(&Scheme::Straightforward)
            && self
                .k
                .iter()
                .any(|&k| self.thresholds(k).iter().any(|&m| m < k))
    }
}

fn config_err(msg: &str) -> CliError {
    CliError::Config(msg.to_string())
}
