//! The subcommands. Each returns its complete CSV text.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write;

use sysnc::analysis::{
    n_hat, ou_p_partial, p_full, p_partial_approx, sf_p_full, EstimateKind, TargetMetrics,
};
use sysnc::codecs::Scheme;
use sysnc::simulator::{bench_decode, run_trials, BenchConfig, ChannelConfig, EmpiricalCurve};

use crate::{CliError, ExperimentConfig};

pub const ANALYZE_HEADER: &str = "scheme,K,M,N,p,q,prob,kind";
pub const SIMULATE_HEADER: &str = "scheme,K,M,N,p,trials,seed,prob_sim,stderr";
pub const METRICS_HEADER: &str = "scheme,K,M,p,P_hat,N_hat_partial,N_hat_full,delta_N";
pub const BENCH_HEADER: &str = "decoder,K,median_ns,p25_ns,p75_ns,repetitions";
pub const BENCH_COMMENT: &str =
    "# wall-clock times are hardware-relative; compare decoders only within one run";

/// `v` rounded to 12 significant digits, in plain decimal notation.
pub fn sig12(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(0) as usize;
    let s = format!("{v:.decimals$}");
    // Rounding can carry into a new leading digit, e.g. 9.99…→10.0.
    if s.trim_start_matches(['-', '0', '.']).replace('.', "").len() > 12 && decimals > 0 {
        let decimals = decimals - 1;
        return format!("{v:.decimals$}");
    }
    s
}

/// Sort key shared by the analysis and simulation tables.
#[derive(Debug, Clone, PartialEq)]
struct Key {
    scheme: &'static str,
    k: u64,
    m: u64,
    n: u64,
    p: f64,
}

impl Key {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.scheme, self.k, self.m, self.n)
            .cmp(&(other.scheme, other.k, other.m, other.n))
            .then(self.p.total_cmp(&other.p))
    }
}

fn table(header: &str, mut rows: Vec<(Key, String)>) -> String {
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(header);
    out.push('\n');
    for (_, line) in rows {
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Closed-form probabilities. Systematic coding uses the exact full-recovery
/// probability at `M = K` and the systematic-packet approximation below it;
/// straightforward coding only has a closed form for `M = K`.
pub fn analyze(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let (n_lo, n_hi) = cfg.n_range();
    let q = cfg.q;
    let mut rows = Vec::new();
    for &scheme in &cfg.scheme {
        let mut warned = false;
        for &k in &cfg.k {
            for m in cfg.thresholds(k) {
                if scheme == Scheme::Straightforward && m < k {
                    if !warned {
                        eprintln!(
                            "sysnc: warning: no closed form for straightforward coding with M < K; rows skipped"
                        );
                        warned = true;
                    }
                    continue;
                }
                // Below these N the operations are undefined or trivially zero.
                let first = match scheme {
                    Scheme::OrderedUncoded => n_lo,
                    _ => n_lo.max(m),
                };
                for n in first..=n_hi {
                    for &p in &cfg.p {
                        let (prob, kind) = match scheme {
                            Scheme::Systematic if m == k => {
                                (p_full::<f64>(k, n, &p, q)?, EstimateKind::Exact)
                            }
                            Scheme::Systematic => {
                                let e = p_partial_approx::<f64>(k, m, n, &p)?;
                                (e.value, e.kind)
                            }
                            Scheme::Straightforward => {
                                (sf_p_full::<f64>(k, n, &p, q)?, EstimateKind::Exact)
                            }
                            Scheme::OrderedUncoded => {
                                (ou_p_partial::<f64>(k, m, n, &p)?, EstimateKind::Exact)
                            }
                        };
                        if kind == EstimateKind::Unreachable {
                            return Err(CliError::Invariant(format!(
                                "unreachable estimate at K={k} M={m} N={n}"
                            )));
                        }
                        let key = Key {
                            scheme: scheme.name(),
                            k,
                            m,
                            n,
                            p,
                        };
                        let line = format!(
                            "{},{k},{m},{n},{p},{q},{},{}",
                            scheme.name(),
                            sig12(prob),
                            kind.as_str()
                        );
                        rows.push((key, line));
                    }
                }
            }
        }
    }
    Ok(table(ANALYZE_HEADER, rows))
}

fn curves(
    scheme: Scheme,
    k: u64,
    m: &[u64],
    n: (u64, u64),
    p: f64,
    seed: u64,
    trials: u64,
) -> Result<Vec<EmpiricalCurve>, CliError> {
    let ch = ChannelConfig::new(p, seed)?;
    Ok(run_trials(scheme, k, m, n.0..=n.1, &ch, trials)?)
}

/// Monte Carlo estimates with the progressive decoder.
pub fn simulate(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let seed = cfg
        .seed
        .ok_or_else(|| CliError::Config("seed is required for simulate".into()))?;
    let n = cfg.n_range();
    let mut rows = Vec::new();
    for &scheme in &cfg.scheme {
        for &k in &cfg.k {
            for &p in &cfg.p {
                for curve in curves(scheme, k, &cfg.thresholds(k), n, p, seed, cfg.trials)? {
                    for pt in &curve.points {
                        let key = Key {
                            scheme: scheme.name(),
                            k,
                            m: curve.m,
                            n: pt.n,
                            p,
                        };
                        let line = format!(
                            "{},{k},{},{},{p},{},{seed},{},{}",
                            scheme.name(),
                            curve.m,
                            pt.n,
                            pt.trials,
                            sig12(pt.prob()),
                            sig12(pt.stderr()),
                        );
                        rows.push((key, line));
                    }
                }
            }
        }
    }
    Ok(table(SIMULATE_HEADER, rows))
}

fn cell(v: Option<u64>) -> String {
    v.map_or_else(|| "unreachable".to_string(), |n| n.to_string())
}

/// N̂ for partial and full recovery and their difference.
pub fn metrics(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let p_hat = cfg
        .p_hat
        .ok_or_else(|| CliError::Config("p_hat is required for metrics".into()))?;
    let q = cfg.q;
    let mut rows = Vec::new();
    for &scheme in &cfg.scheme {
        for &k in &cfg.k {
            let cap = cfg.search_cap(k);
            let thresholds = cfg.thresholds(k);
            for &p in &cfg.p {
                let full = match scheme {
                    Scheme::Systematic => n_hat(|n| p_full(k, n, &p, q), p_hat, k, cap)?,
                    Scheme::Straightforward => n_hat(|n| sf_p_full(k, n, &p, q), p_hat, k, cap)?,
                    Scheme::OrderedUncoded => n_hat(|n| ou_p_partial(k, k, n, &p), p_hat, k, cap)?,
                };
                // Straightforward partial recovery has no closed form.
                let simulated: BTreeMap<u64, EmpiricalCurve> = if scheme == Scheme::Straightforward
                {
                    let partial: Vec<u64> = thresholds.iter().copied().filter(|&m| m < k).collect();
                    if partial.is_empty() {
                        BTreeMap::new()
                    } else {
                        let seed = cfg.seed.ok_or_else(|| {
                            CliError::Config(
                                "seed is required for straightforward partial recovery".into(),
                            )
                        })?;
                        curves(scheme, k, &partial, (1, cap), p, seed, cfg.trials)?
                            .into_iter()
                            .map(|c| (c.m, c))
                            .collect()
                    }
                } else {
                    BTreeMap::new()
                };
                for &m in &thresholds {
                    let partial = if m == k {
                        full
                    } else {
                        match scheme {
                            Scheme::Systematic => {
                                n_hat(|n| Ok(p_partial_approx(k, m, n, &p)?.value), p_hat, m, cap)?
                            }
                            Scheme::OrderedUncoded => {
                                n_hat(|n| ou_p_partial(k, m, n, &p), p_hat, m, cap)?
                            }
                            Scheme::Straightforward => simulated[&m]
                                .points
                                .iter()
                                .find(|pt| pt.n >= m && pt.prob() >= p_hat)
                                .map(|pt| pt.n),
                        }
                    };
                    let t = TargetMetrics {
                        p_hat,
                        n_hat_partial: partial,
                        n_hat_full: full,
                    };
                    let delta = t.delta_n()?;
                    let key = Key {
                        scheme: scheme.name(),
                        k,
                        m,
                        n: 0,
                        p,
                    };
                    let line = format!(
                        "{},{k},{m},{p},{p_hat},{},{},{}",
                        scheme.name(),
                        cell(partial),
                        cell(full),
                        cell(delta)
                    );
                    rows.push((key, line));
                }
            }
        }
    }
    Ok(table(METRICS_HEADER, rows))
}

/// Decoder timings, decoder-major then by K.
pub fn bench(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let bc = BenchConfig {
        repetitions: cfg.repetitions,
        payload_len: cfg.payload_len,
        seed: cfg.seed.unwrap_or(0),
        ..BenchConfig::default()
    };
    let mut out = String::new();
    writeln!(out, "{BENCH_COMMENT}").unwrap();
    writeln!(out, "{BENCH_HEADER}").unwrap();
    let mut decoders = cfg.decoders.clone();
    decoders.sort();
    decoders.dedup();
    let mut ks = cfg.k.clone();
    ks.sort_unstable();
    ks.dedup();
    for &decoder in &decoders {
        for &k in &ks {
            for row in bench_decode(k..=k, &[decoder], &bc)? {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    row.decoder.name(),
                    row.k,
                    row.median_ns,
                    row.p25_ns,
                    row.p75_ns,
                    row.repetitions
                )
                .unwrap();
            }
        }
    }
    Ok(out)
}
