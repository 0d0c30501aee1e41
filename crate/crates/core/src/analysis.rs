//! Closed-form decoding probabilities for systematic, straightforward and
//! ordered uncoded transmission over a packet erasure channel, plus the
//! delay metrics built on top of them.
//!
//! Every probability is generic over [`Probability`], so the same code runs
//! in `f64` for large generations and in exact [`Rational`](crate::Rational)
//! arithmetic for oracle-sized ones.
//!
//! Notation: `k` source packets, `n` transmitted, `r` received of which `h`
//! are systematic, erasure probability `p`, field size `q`.

use thiserror::Error;

use crate::scalar::Probability;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("received count r={r} must satisfy K={k} <= r <= N={n}")]
    ReceivedOutOfRange { k: u64, r: u64, n: u64 },
    #[error("N={n} is smaller than K={k}")]
    TooFewTransmissions { k: u64, n: u64 },
    #[error("M={m} must satisfy 1 <= M <= K={k}")]
    ThresholdOutOfRange { m: u64, k: u64 },
    #[error("K must be at least 1")]
    EmptyGeneration,
    #[error("N must be at least 1")]
    NoTransmissions,
    #[error("erasure probability {0} is outside [0, 1]")]
    InvalidErasure(String),
    #[error("target probability {0} is outside (0, 1]")]
    InvalidTarget(String),
    #[error("field size q={0} must be at least 2")]
    InvalidFieldSize(u64),
    #[error("binomial C({n}, {k}) is undefined")]
    BinomialDomain { n: u64, k: u64 },
    #[error("h={h} outside [{h_min}, {h_max}]")]
    SystematicCountOutOfRange { h: u64, h_min: u64, h_max: u64 },
    #[error("internal invariant violated: {0}")]
    Invariant(&'static str),
}

fn check_q(q: u64) -> Result<(), AnalysisError> {
    if q < 2 {
        Err(AnalysisError::InvalidFieldSize(q))
    } else {
        Ok(())
    }
}

fn check_p<T: Probability>(p: &T) -> Result<(), AnalysisError> {
    if p.is_probability() {
        Ok(())
    } else {
        Err(AnalysisError::InvalidErasure(format!("{p:?}")))
    }
}

/// Natural log of `C(n, k)`.
pub fn log_binomial(n: u64, k: u64) -> Result<f64, AnalysisError> {
    if k > n {
        return Err(AnalysisError::BinomialDomain { n, k });
    }
    Ok(crate::scalar::ln_binomial(n, k))
}

/// Counts observed by a receiver: `r` packets received, `h` of them systematic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReceptionProfile {
    pub r: u64,
    pub h: u64,
}

impl ReceptionProfile {
    /// Validates `max(0, r-N+K) <= h <= min(K, r)` and `r <= N`.
    pub fn new(k: u64, n: u64, r: u64, h: u64) -> Result<Self, AnalysisError> {
        if r > n {
            return Err(AnalysisError::ReceivedOutOfRange { k, r, n });
        }
        let h_min = h_min(k, n, r);
        let h_max = k.min(r);
        if h < h_min || h > h_max {
            return Err(AnalysisError::SystematicCountOutOfRange { h, h_min, h_max });
        }
        Ok(Self { r, h })
    }
}

/// Smallest possible number of received systematic packets:
/// `max(0, r - (N - K))`.
pub fn h_min(k: u64, n: u64, r: u64) -> u64 {
    (r + k).saturating_sub(n)
}

/// Parameters shared by the channel-level probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisParams<T> {
    pub k: u64,
    pub n: u64,
    pub m: u64,
    pub p: T,
    pub q: u64,
}

impl<T: Probability> AnalysisParams<T> {
    pub fn new(k: u64, n: u64, m: u64, p: T, q: u64) -> Result<Self, AnalysisError> {
        let params = Self { k, n, m, p, q };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        if self.k == 0 {
            return Err(AnalysisError::EmptyGeneration);
        }
        if self.n == 0 {
            return Err(AnalysisError::NoTransmissions);
        }
        if self.m == 0 || self.m > self.k {
            return Err(AnalysisError::ThresholdOutOfRange {
                m: self.m,
                k: self.k,
            });
        }
        check_q(self.q)?;
        check_p(&self.p)
    }

    /// Number of systematic packets actually sent, `min(K, N)`.
    pub fn n_min(&self) -> u64 {
        self.k.min(self.n)
    }
}

/// Probability that `r` uniformly random coded packets over GF(q) span a
/// `k`-dimensional space: `∏_{j=0}^{k-1} (1 - q^{j-r})`, zero for `r < k`.
pub fn w_prob<T: Probability>(k: u64, r: u64, q: u64) -> T {
    if r < k {
        return T::zero();
    }
    (0..k).fold(T::one(), |acc, j| acc * (T::one() - T::inv_pow(q, r - j)))
}

/// Probability that systematic network coding recovers all `k` source packets
/// given that `r` of the `n` transmitted packets arrived.
///
/// Sums over the number `h` of received systematic packets: all `k` arrived,
/// or `h < k` arrived and the `r - h` coded packets supply the missing rank.
pub fn f_full<T: Probability>(k: u64, r: u64, n: u64, q: u64) -> Result<T, AnalysisError> {
    check_q(q)?;
    if k == 0 {
        return Err(AnalysisError::EmptyGeneration);
    }
    if r < k || r > n {
        return Err(AnalysisError::ReceivedOutOfRange { k, r, n });
    }
    let coded = n - k;
    let mut total = T::binomial_ratio(&[(coded, r - k)], (n, r));
    // w(k-h, r-h) = ∏_{m=r-k+1}^{r-h} (1 - q^{-m}); grow it as h falls.
    let mut rank_prob = T::one();
    for h in (h_min(k, n, r)..k).rev() {
        rank_prob = rank_prob * (T::one() - T::inv_pow(q, r - h));
        total = total + T::binomial_ratio(&[(k, h), (coded, r - h)], (n, r)) * rank_prob.clone();
    }
    Ok(total)
}

/// Probability that systematic network coding recovers all `k` packets after
/// `n` transmissions over an erasure channel with loss probability `p`.
pub fn p_full<T: Probability>(k: u64, n: u64, p: &T, q: u64) -> Result<T, AnalysisError> {
    check_p(p)?;
    check_q(q)?;
    if k == 0 {
        return Err(AnalysisError::EmptyGeneration);
    }
    if n < k {
        return Err(AnalysisError::TooFewTransmissions { k, n });
    }
    let success = T::one() - p.clone();
    (k..=n).try_fold(T::zero(), |acc, r| {
        let weight = T::binomial_pmf(n, r, &success, p);
        if weight.is_zero() {
            return Ok(acc);
        }
        Ok(acc + weight * f_full::<T>(k, r, n, q)?)
    })
}

/// Straightforward network coding counterpart of [`p_full`]: every received
/// packet is a uniformly random combination.
pub fn sf_p_full<T: Probability>(k: u64, n: u64, p: &T, q: u64) -> Result<T, AnalysisError> {
    check_p(p)?;
    check_q(q)?;
    if k == 0 {
        return Err(AnalysisError::EmptyGeneration);
    }
    if n < k {
        return Err(AnalysisError::TooFewTransmissions { k, n });
    }
    let success = T::one() - p.clone();
    Ok((k..=n).fold(T::zero(), |acc, r| {
        acc + T::binomial_pmf(n, r, &success, p) * w_prob::<T>(k, r, q)
    }))
}

/// How a probability was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EstimateKind {
    Exact,
    Approx,
    /// The threshold cannot be met under the approximation; the value is 0.
    Unreachable,
}

impl EstimateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimateKind::Exact => "exact",
            EstimateKind::Approx => "approx",
            EstimateKind::Unreachable => "unreachable",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub kind: EstimateKind,
}

/// Probability of recovering at least `m` of `k` packets under systematic
/// network coding, approximated by the probability that at least `m` of the
/// `min(k, n)` systematic packets arrive. For `m = k` the exact [`p_full`] is
/// returned instead.
pub fn p_partial_approx<T: Probability>(
    k: u64,
    m: u64,
    n: u64,
    p: &T,
) -> Result<Estimate<T>, AnalysisError> {
    check_p(p)?;
    if k == 0 {
        return Err(AnalysisError::EmptyGeneration);
    }
    if m == 0 || m > k {
        return Err(AnalysisError::ThresholdOutOfRange { m, k });
    }
    let n_min = k.min(n);
    if m > n_min {
        return Ok(Estimate {
            value: T::zero(),
            kind: EstimateKind::Unreachable,
        });
    }
    if m == k {
        return Ok(Estimate {
            value: p_full(k, n, p, 2)?,
            kind: EstimateKind::Exact,
        });
    }
    let success = T::one() - p.clone();
    let value = (m..=n_min).fold(T::zero(), |acc, r| {
        acc + T::binomial_pmf(n_min, r, &success, p)
    });
    Ok(Estimate {
        value,
        kind: EstimateKind::Approx,
    })
}

/// Number of times source packet `i` (1-based) goes out in the first `n`
/// slots of ordered uncoded transmission.
pub fn ou_transmissions(k: u64, n: u64, i: u64) -> u64 {
    if i == 0 || i > n {
        0
    } else {
        (n - i) / k + 1
    }
}

/// Exact probability that ordered uncoded transmission delivers at least `m`
/// distinct source packets within `n` slots. Packet `i` survives with
/// probability `1 - p^{n_i}`, independently of the others; the count of
/// survivors follows a Poisson-binomial law evaluated by dynamic programming.
pub fn ou_p_partial<T: Probability>(k: u64, m: u64, n: u64, p: &T) -> Result<T, AnalysisError> {
    check_p(p)?;
    if k == 0 {
        return Err(AnalysisError::EmptyGeneration);
    }
    if m == 0 || m > k {
        return Err(AnalysisError::ThresholdOutOfRange { m, k });
    }
    if n == 0 {
        return Err(AnalysisError::NoTransmissions);
    }
    // dist[j] = P(exactly j of the packets seen so far survive)
    let mut dist = vec![T::zero(); k as usize + 1];
    dist[0] = T::one();
    for i in 1..=k {
        let sends = ou_transmissions(k, n, i);
        let survive = if sends == 0 {
            T::zero()
        } else {
            T::one() - p.powu(sends)
        };
        let lost = T::one() - survive.clone();
        for j in (0..=i as usize).rev() {
            let stay = dist[j].clone() * lost.clone();
            let up = if j > 0 {
                dist[j - 1].clone() * survive.clone()
            } else {
                T::zero()
            };
            dist[j] = stay + up;
        }
    }
    Ok(dist[m as usize..]
        .iter()
        .cloned()
        .fold(T::zero(), |a, b| a + b))
}

/// `f_full(k, r, n, q) / w_prob(k, r, q)`; at least one for every valid input.
pub fn decoding_ratio<T: Probability>(k: u64, r: u64, n: u64, q: u64) -> Result<T, AnalysisError> {
    let f = f_full::<T>(k, r, n, q)?;
    let w = w_prob::<T>(k, r, q);
    if w.is_zero() {
        return Err(AnalysisError::Invariant("w_prob vanished for r >= K"));
    }
    Ok(f / w)
}

/// Smallest `N` in `n_start..=n_max` with `prob(N) >= p_hat`, or `None` when
/// the target is not reached within the cap.
pub fn n_hat<F>(
    mut prob: F,
    p_hat: f64,
    n_start: u64,
    n_max: u64,
) -> Result<Option<u64>, AnalysisError>
where
    F: FnMut(u64) -> Result<f64, AnalysisError>,
{
    if !(p_hat > 0.0 && p_hat <= 1.0) {
        return Err(AnalysisError::InvalidTarget(p_hat.to_string()));
    }
    for n in n_start..=n_max {
        if prob(n)? >= p_hat {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

/// Transmissions needed to reach `p_hat` for partial (`M`) and full (`K`)
/// recovery under one scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetMetrics {
    pub p_hat: f64,
    pub n_hat_partial: Option<u64>,
    pub n_hat_full: Option<u64>,
}

impl TargetMetrics {
    pub fn delta_n(&self) -> Result<Option<u64>, AnalysisError> {
        delta_n(self)
    }
}

/// Extra transmissions from partial to full recovery; `None` when either
/// count is unreachable.
pub fn delta_n(metrics: &TargetMetrics) -> Result<Option<u64>, AnalysisError> {
    match (metrics.n_hat_partial, metrics.n_hat_full) {
        (Some(partial), Some(full)) => {
            full.checked_sub(partial)
                .map(Some)
                .ok_or(AnalysisError::Invariant(
                    "full recovery needs fewer packets than partial",
                ))
        }
        _ => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{ratio, Rational};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn w_prob_examples() {
        assert_eq!(w_prob::<f64>(0, 5, 2), 1.0);
        assert_eq!(w_prob::<f64>(1, 1, 2), 0.5);
        // 6 of the 16 binary 2x2 matrices are invertible.
        assert_eq!(w_prob::<Rational>(2, 2, 2), ratio(6, 16));
        // 42 of the 64 binary 3x2 matrices have rank 2.
        assert_eq!(w_prob::<Rational>(2, 3, 2), ratio(42, 64));
        assert_eq!(w_prob::<f64>(3, 2, 2), 0.0);
    }

    #[test]
    fn f_full_examples() {
        for k in 1..6 {
            for q in [2, 3, 5] {
                assert_eq!(f_full::<Rational>(k, k, k, q).unwrap(), ratio(1, 1));
                assert_eq!(f_full::<f64>(k, k, k, q).unwrap(), 1.0);
            }
        }
        assert_eq!(f_full::<Rational>(1, 1, 2, 2).unwrap(), ratio(3, 4));
        assert_eq!(f_full::<Rational>(2, 2, 3, 2).unwrap(), ratio(2, 3));
        assert!(close(f_full::<f64>(2, 2, 3, 2).unwrap(), 2.0 / 3.0, 1e-15));
    }

    #[test]
    fn f_full_domain() {
        assert_eq!(
            f_full::<f64>(3, 2, 5, 2),
            Err(AnalysisError::ReceivedOutOfRange { k: 3, r: 2, n: 5 })
        );
        assert!(f_full::<f64>(3, 6, 5, 2).is_err());
        assert!(f_full::<f64>(3, 3, 5, 1).is_err());
    }

    #[test]
    fn f_full_decomposition() {
        // Expand the h-sum term by term and compare with the running product.
        for (k, r, n) in [(3u64, 4u64, 6u64), (4, 5, 9), (5, 7, 7), (2, 3, 8)] {
            let mut expect = Rational::binomial_ratio(&[(n - k, r - k)], (n, r));
            for h in h_min(k, n, r)..k {
                expect = expect
                    + Rational::binomial_ratio(&[(k, h), (n - k, r - h)], (n, r))
                        * w_prob::<Rational>(k - h, r - h, 2);
            }
            assert_eq!(f_full::<Rational>(k, r, n, 2).unwrap(), expect);
        }
    }

    #[test]
    fn p_full_examples() {
        assert_eq!(p_full::<f64>(5, 5, &0.0, 2).unwrap(), 1.0);
        for p in [0.0, 0.1, 0.5, 0.9] {
            assert!(close(p_full::<f64>(1, 1, &p, 2).unwrap(), 1.0 - p, 1e-15));
        }
        assert_eq!(
            p_full::<Rational>(2, 3, &ratio(1, 10), 2).unwrap(),
            ratio(891, 1000)
        );
        assert!(close(p_full::<f64>(2, 3, &0.1, 2).unwrap(), 0.891, 1e-14));
        assert_eq!(
            p_full::<f64>(3, 2, &0.1, 2),
            Err(AnalysisError::TooFewTransmissions { k: 3, n: 2 })
        );
        assert!(p_full::<f64>(3, 4, &1.5, 2).is_err());
    }

    #[test]
    fn p_partial_examples() {
        let e = p_partial_approx::<f64>(10, 4, 12, &0.0).unwrap();
        assert_eq!((e.value, e.kind), (1.0, EstimateKind::Approx));
        let e = p_partial_approx::<Rational>(4, 2, 4, &ratio(1, 2)).unwrap();
        assert_eq!(e.value, ratio(11, 16));
        for p in [0.05, 0.3] {
            let e = p_partial_approx::<f64>(4, 2, 2, &p).unwrap();
            assert!(close(e.value, (1.0 - p) * (1.0 - p), 1e-15));
        }
        let e = p_partial_approx::<f64>(4, 3, 2, &0.1).unwrap();
        assert_eq!((e.value, e.kind), (0.0, EstimateKind::Unreachable));
        let e = p_partial_approx::<f64>(4, 4, 6, &0.1).unwrap();
        assert_eq!(e.kind, EstimateKind::Exact);
        assert_eq!(e.value, p_full::<f64>(4, 6, &0.1, 2).unwrap());
        assert!(p_partial_approx::<f64>(4, 5, 6, &0.1).is_err());
    }

    #[test]
    fn sf_examples() {
        assert_eq!(sf_p_full::<f64>(1, 1, &0.0, 2).unwrap(), 0.5);
        assert_eq!(
            sf_p_full::<Rational>(2, 2, &ratio(0, 1), 2).unwrap(),
            ratio(3, 8)
        );
        assert_eq!(sf_p_full::<f64>(4, 9, &1.0, 2).unwrap(), 0.0);
        assert!(sf_p_full::<f64>(4, 3, &0.1, 2).is_err());
    }

    #[test]
    fn ou_examples() {
        for p in [0.0, 0.2, 0.7] {
            assert!(close(
                ou_p_partial::<f64>(2, 2, 2, &p).unwrap(),
                (1.0 - p) * (1.0 - p),
                1e-15
            ));
        }
        assert_eq!(
            ou_p_partial::<Rational>(2, 1, 2, &ratio(1, 2)).unwrap(),
            ratio(3, 4)
        );
        assert_eq!(
            ou_p_partial::<Rational>(2, 2, 4, &ratio(1, 2)).unwrap(),
            ratio(9, 16)
        );
        // Packets never sent cannot be recovered.
        assert_eq!(ou_p_partial::<f64>(5, 4, 3, &0.0).unwrap(), 0.0);
        assert_eq!(ou_transmissions(3, 7, 1), 3);
        assert_eq!(ou_transmissions(3, 7, 2), 2);
        assert_eq!(ou_transmissions(3, 2, 3), 0);
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(
            decoding_ratio::<Rational>(2, 2, 3, 2).unwrap(),
            ratio(16, 9)
        );
        assert_eq!(decoding_ratio::<Rational>(1, 1, 1, 2).unwrap(), ratio(2, 1));
        // Tends to one as N - K grows with r = K + 5.
        for n in 40..60 {
            let ratio = decoding_ratio::<f64>(5, 10, n, 2).unwrap();
            assert!(ratio > 1.0 && ratio < 1.05, "N={n}: {ratio}");
        }
    }

    #[test]
    fn n_hat_and_delta() {
        assert_eq!(n_hat(|_| Ok(1.0), 0.7, 3, 10).unwrap(), Some(3));
        assert_eq!(n_hat(|_| Ok(0.5), 0.7, 3, 10).unwrap(), None);
        assert!(n_hat(|_| Ok(1.0), 0.0, 3, 10).is_err());
        // Ordered uncoded, K=20, p=0.1, full recovery.
        let full = n_hat(|n| ou_p_partial::<f64>(20, 20, n, &0.1), 0.7, 1, 160).unwrap();
        assert_eq!(full, Some(39));
        let m = TargetMetrics {
            p_hat: 0.7,
            n_hat_partial: Some(11),
            n_hat_full: Some(39),
        };
        assert_eq!(m.delta_n().unwrap(), Some(28));
        let m = TargetMetrics {
            p_hat: 0.7,
            n_hat_partial: Some(24),
            n_hat_full: None,
        };
        assert_eq!(delta_n(&m).unwrap(), None);
        let m = TargetMetrics {
            p_hat: 0.7,
            n_hat_partial: Some(30),
            n_hat_full: Some(30),
        };
        assert_eq!(delta_n(&m).unwrap(), Some(0));
        let m = TargetMetrics {
            p_hat: 0.7,
            n_hat_partial: Some(31),
            n_hat_full: Some(30),
        };
        assert!(delta_n(&m).is_err());
    }

    #[test]
    fn reception_profile_bounds() {
        assert!(ReceptionProfile::new(4, 6, 5, 3).is_ok());
        // r - (N - K) = 3 systematic packets at least.
        assert!(ReceptionProfile::new(4, 6, 5, 2).is_err());
        assert!(ReceptionProfile::new(4, 6, 5, 5).is_err());
        assert!(ReceptionProfile::new(4, 6, 7, 4).is_err());
        assert_eq!(h_min(4, 10, 5), 0);
    }

    #[test]
    fn params_validation() {
        assert!(AnalysisParams::new(20, 30, 10, 0.1, 2).is_ok());
        assert_eq!(AnalysisParams::new(20, 10, 10, 0.1, 2).unwrap().n_min(), 10);
        assert!(AnalysisParams::new(2, 3, 3, 0.1, 2).is_err());
        assert!(AnalysisParams::new(2, 3, 0, 0.1, 2).is_err());
        assert!(AnalysisParams::new(2, 3, 1, -0.1, 2).is_err());
        assert!(AnalysisParams::new(2, 3, 1, 0.1, 1).is_err());
        assert!(AnalysisParams::new(0, 3, 1, 0.1, 2).is_err());
    }

    #[test]
    fn log_binomial_domain() {
        assert_eq!(log_binomial(7, 0).unwrap(), 0.0);
        assert!(log_binomial(3, 4).is_err());
    }

    #[test]
    fn single_precision_path() {
        let a = p_full::<f32>(10, 14, &0.1, 2).unwrap() as f64;
        let b = p_full::<f64>(10, 14, &0.1, 2).unwrap();
        assert!(close(a, b, 1e-5));
    }

    #[test]
    fn large_generation_stays_finite() {
        let v = p_full::<f64>(1024, 1200, &0.1, 2).unwrap();
        assert!(v.is_finite() && (0.0..=1.0).contains(&v));
        let v = sf_p_full::<f64>(1024, 1200, &0.1, 2).unwrap();
        assert!(v.is_finite() && (0.0..=1.0).contains(&v));
    }
}
