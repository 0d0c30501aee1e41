//! Monte Carlo harness over a packet erasure channel, and the decoder timing
//! benchmark.
//!
//! Every trial owns its random streams. They are derived from the master seed,
//! the trial index, the scheme and a stream tag by [`derive_seed`], so the
//! result of a trial does not depend on which thread runs it or in what
//! order. The encoder and the channel draw from separate streams: changing
//! the erasure probability leaves the coded coefficients of a trial
//! untouched.

use std::ops::RangeInclusive;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::codecs::{
    encode_straightforward, ge_full_rank_decode, CodecError, DecoderState, Scheme, SourceMessage,
    TransmittedPacket,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("erasure probability {0} is outside [0, 1]")]
    InvalidErasure(f64),
    #[error("trial count must be at least 1")]
    NoTrials,
    #[error("repetition count must be at least 1")]
    NoRepetitions,
    #[error("N range {start}..={end} is empty or starts at 0")]
    InvalidRange { start: u64, end: u64 },
    #[error("M={m} must satisfy 1 <= M <= K={k}")]
    ThresholdOutOfRange { m: u64, k: u64 },
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// Stream tags mixed into [`derive_seed`].
pub const STREAM_ENCODER: u64 = 1;
pub const STREAM_CHANNEL: u64 = 2;
pub const STREAM_BENCH: u64 = 3;

/// Scheme id used for streams that do not depend on the scheme.
const ANY_SCHEME: u64 = 0;

/// Payload bytes per source packet in simulated sessions.
pub const SIM_PAYLOAD_LEN: usize = 1;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one random stream:
/// `splitmix64(splitmix64(splitmix64(master ^ splitmix64(trial)) ^ scheme) ^ stream)`.
pub fn derive_seed(master: u64, trial: u64, scheme: u64, stream: u64) -> u64 {
    let a = splitmix64(master ^ splitmix64(trial));
    let b = splitmix64(a ^ scheme);
    splitmix64(b ^ stream)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub p: f64,
    pub seed: u64,
}

impl ChannelConfig {
    pub fn new(p: f64, seed: u64) -> Result<Self, SimError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(SimError::InvalidErasure(p));
        }
        Ok(Self { p, seed })
    }

    /// Per-trial loss process; independent of the scheme.
    pub fn channel(&self, trial: u64) -> Channel {
        Channel {
            p: self.p,
            rng: ChaCha8Rng::seed_from_u64(derive_seed(
                self.seed,
                trial,
                ANY_SCHEME,
                STREAM_CHANNEL,
            )),
        }
    }
}

/// Independent losses with probability `p`, one uniform draw per packet.
pub struct Channel {
    p: f64,
    rng: ChaCha8Rng,
}

impl Channel {
    /// Whether the next packet gets through.
    pub fn delivers(&mut self) -> bool {
        self.rng.random::<f64>() >= self.p
    }
}

/// The packets of `schedule` that survive the channel in trial `trial`, in order.
pub fn erase(
    schedule: &[TransmittedPacket],
    cfg: &ChannelConfig,
    trial: u64,
) -> Vec<TransmittedPacket> {
    let mut ch = cfg.channel(trial);
    schedule.iter().filter(|_| ch.delivers()).cloned().collect()
}

/// Source message used by simulated sessions; the payload content does not
/// affect decodability.
fn sim_message(k: usize) -> Result<SourceMessage, CodecError> {
    SourceMessage::new((0..k).map(|i| vec![i as u8; SIM_PAYLOAD_LEN]).collect())
}

/// Decoded counts of one trial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialResult {
    /// Entry `n - 1` is the number of source packets decoded once the first
    /// `n` packets have been transmitted.
    pub decoded_count_by_n: Vec<u32>,
}

impl TrialResult {
    pub fn decoded_after(&self, n: u64) -> u32 {
        match n {
            0 => 0,
            n => self.decoded_count_by_n[n as usize - 1],
        }
    }
}

/// Runs one session of `n_max` transmissions through the channel and the
/// progressive decoder.
pub fn simulate_trial(
    scheme: Scheme,
    k: usize,
    n_max: u64,
    cfg: &ChannelConfig,
    trial: u64,
) -> Result<TrialResult, SimError> {
    let msg = sim_message(k)?;
    simulate_trial_with(&msg, scheme, n_max, cfg, trial)
}

fn simulate_trial_with(
    msg: &SourceMessage,
    scheme: Scheme,
    n_max: u64,
    cfg: &ChannelConfig,
    trial: u64,
) -> Result<TrialResult, SimError> {
    let k = msg.k();
    let mut encoder =
        ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, trial, scheme.id(), STREAM_ENCODER));
    let mut channel = cfg.channel(trial);
    let mut decoder = DecoderState::new(k, msg.payload_len())?;
    let mut counts = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max as usize {
        if decoder.is_complete() {
            counts.resize(n_max as usize, k as u32);
            break;
        }
        let pkt = scheme.encode(msg, n, &mut encoder)?;
        if channel.delivers() {
            decoder.receive(&pkt)?;
        }
        counts.push(decoder.decoded_count() as u32);
    }
    Ok(TrialResult {
        decoded_count_by_n: counts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub n: u64,
    pub successes: u64,
    pub trials: u64,
}

impl CurvePoint {
    pub fn prob(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }

    /// Binomial standard error of the estimate, `sqrt(p̂(1-p̂)/trials)`.
    pub fn stderr(&self) -> f64 {
        let p = self.prob();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Estimated probability of decoding at least `m` packets versus `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCurve {
    pub scheme: Scheme,
    pub k: u64,
    pub m: u64,
    pub p: f64,
    pub seed: u64,
    pub points: Vec<CurvePoint>,
}

/// Runs `trials` independent sessions and pools, for every `M` in `m_list`
/// and `N` in `n_range`, the fraction of sessions with at least `M` packets
/// decoded after `N` transmissions. Trials run on the current rayon pool;
/// the pooled counts are integer sums, so the result does not depend on the
/// number of threads.
pub fn run_trials(
    scheme: Scheme,
    k: u64,
    m_list: &[u64],
    n_range: RangeInclusive<u64>,
    cfg: &ChannelConfig,
    trials: u64,
) -> Result<Vec<EmpiricalCurve>, SimError> {
    if trials == 0 {
        return Err(SimError::NoTrials);
    }
    let (n_lo, n_hi) = (*n_range.start(), *n_range.end());
    if n_lo == 0 || n_lo > n_hi {
        return Err(SimError::InvalidRange {
            start: n_lo,
            end: n_hi,
        });
    }
    if let Some(&m) = m_list.iter().find(|&&m| m == 0 || m > k) {
        return Err(SimError::ThresholdOutOfRange { m, k });
    }
    ChannelConfig::new(cfg.p, cfg.seed)?;
    let msg = sim_message(k as usize)?;
    let width = (n_hi - n_lo + 1) as usize;
    let cells = m_list.len() * width;

    let tally = (0..trials)
        .into_par_iter()
        .try_fold(
            || vec![0u64; cells],
            |mut acc, trial| {
                let res = simulate_trial_with(&msg, scheme, n_hi, cfg, trial)?;
                for (mi, &m) in m_list.iter().enumerate() {
                    let row = &mut acc[mi * width..(mi + 1) * width];
                    for (slot, n) in row.iter_mut().zip(n_lo..=n_hi) {
                        if u64::from(res.decoded_after(n)) >= m {
                            *slot += 1;
                        }
                    }
                }
                Ok::<_, SimError>(acc)
            },
        )
        .try_reduce(
            || vec![0u64; cells],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )?;

    Ok(m_list
        .iter()
        .enumerate()
        .map(|(mi, &m)| EmpiricalCurve {
            scheme,
            k,
            m,
            p: cfg.p,
            seed: cfg.seed,
            points: (n_lo..=n_hi)
                .zip(&tally[mi * width..(mi + 1) * width])
                .map(|(n, &successes)| CurvePoint {
                    n,
                    successes,
                    trials,
                })
                .collect(),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DecoderKind {
    /// Batch elimination, retried on every arrival once `K` packets are in.
    Ge,
    /// Progressive decoder, one pass per arrival.
    GePd,
}

impl DecoderKind {
    pub fn name(self) -> &'static str {
        match self {
            DecoderKind::Ge => "ge",
            DecoderKind::GePd => "gepd",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub decoder: DecoderKind,
    pub k: u64,
    pub median_ns: u64,
    pub p25_ns: u64,
    pub p75_ns: u64,
    pub repetitions: u64,
    pub samples: Vec<u64>,
}

#[derive(Debug, Clone, Copy)]
pub struct BenchConfig {
    pub repetitions: u64,
    pub warmup: u64,
    pub payload_len: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            repetitions: 100,
            warmup: 5,
            payload_len: 1024,
            seed: 0,
        }
    }
}

/// Straightforward-coded packets, no losses, enough to reach full rank.
fn bench_stream(
    msg: &SourceMessage,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<TransmittedPacket>, SimError> {
    let k = msg.k();
    let mut packets = Vec::with_capacity(k + 8);
    let mut dec = DecoderState::new(k, 1)?;
    let mut n = 0;
    while !dec.is_complete() {
        n += 1;
        let p = encode_straightforward(msg, n, rng)?;
        dec.receive(&TransmittedPacket {
            coding_vector: p.coding_vector.clone(),
            payload: vec![0],
            sequence_index: n,
        })?;
        packets.push(p);
    }
    Ok(packets)
}

fn time_decode(
    kind: DecoderKind,
    msg: &SourceMessage,
    packets: &[TransmittedPacket],
) -> Result<u64, SimError> {
    let k = msg.k();
    let start = Instant::now();
    match kind {
        DecoderKind::GePd => {
            let mut dec = DecoderState::new(k, msg.payload_len())?;
            for p in packets {
                dec.receive(p)?;
                if dec.is_complete() {
                    break;
                }
            }
            std::hint::black_box(&dec);
        }
        DecoderKind::Ge => {
            for end in k..=packets.len() {
                let out = ge_full_rank_decode(&packets[..end], k)?;
                if out.is_recovered() {
                    std::hint::black_box(&out);
                    break;
                }
            }
        }
    }
    Ok(start.elapsed().as_nanos() as u64)
}

fn quantile(sorted: &[u64], q: f64) -> u64 {
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[idx]
}

/// Wall time for each decoder to recover all `K` packets of a
/// straightforward-coded stream with no losses. Times depend on the machine;
/// only the relative ordering of decoders is meaningful.
pub fn bench_decode(
    k_range: RangeInclusive<u64>,
    decoders: &[DecoderKind],
    cfg: &BenchConfig,
) -> Result<Vec<TimingRow>, SimError> {
    if cfg.repetitions == 0 {
        return Err(SimError::NoRepetitions);
    }
    // samples[d][k] for decoder d and the k-th generation size in range.
    let ks: Vec<u64> = k_range.filter(|&k| k > 0).collect();
    let mut samples =
        vec![vec![Vec::with_capacity(cfg.repetitions as usize); ks.len()]; decoders.len()];
    for (ki, &k) in ks.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, k, ANY_SCHEME, STREAM_BENCH));
        let msg = SourceMessage::random(k as usize, cfg.payload_len, &mut rng)?;
        // Decoders take turns on each stream so drift in machine load hits all alike.
        for rep in 0..cfg.warmup + cfg.repetitions {
            let packets = bench_stream(&msg, &mut rng)?;
            for (di, &kind) in decoders.iter().enumerate() {
                let ns = time_decode(kind, &msg, &packets)?;
                if rep >= cfg.warmup {
                    samples[di][ki].push(ns);
                }
            }
        }
    }
    let mut rows = Vec::with_capacity(decoders.len() * ks.len());
    for (di, &kind) in decoders.iter().enumerate() {
        for (ki, &k) in ks.iter().enumerate() {
            let samples = std::mem::take(&mut samples[di][ki]);
            let mut sorted = samples.clone();
            sorted.sort_unstable();
            rows.push(TimingRow {
                decoder: kind,
                k,
                median_ns: quantile(&sorted, 0.5),
                p25_ns: quantile(&sorted, 0.25),
                p75_ns: quantile(&sorted, 0.75),
                repetitions: cfg.repetitions,
                samples,
            });
        }
    }
    Ok(rows)
}
