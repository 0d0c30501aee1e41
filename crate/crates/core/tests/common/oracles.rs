//! Brute-force references for the decoding probabilities. Independent of the
//! library's formulas: everything here is counting over small GF(2) systems.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Rank over GF(2) of rows given as bit masks.
pub fn rank(rows: &[u64]) -> usize {
    let mut basis = [0u64; 64];
    let mut rank = 0;
    for &row in rows {
        let mut x = row;
        while x != 0 {
            let top = 63 - x.leading_zeros() as usize;
            if basis[top] == 0 {
                basis[top] = x;
                rank += 1;
                break;
            }
            x ^= basis[top];
        }
    }
    rank
}

fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// For systematic coding with `k` sources and `n` transmitted packets,
/// `counts[r]` is the number of (reception pattern with `r` packets, coded
/// coefficient assignment) pairs whose received rows have rank `k`. All
/// `C(n, r)` patterns and all `2^{k(n-k)}` assignments are enumerated.
pub fn systematic_decodable_counts(k: usize, n: usize) -> Vec<u64> {
    assert!(k <= 8 && n <= 16 && k <= n);
    let coded = n - k;
    let assignments = 1u64 << (k * coded);
    let mask = (1u64 << k) - 1;
    let mut counts = vec![0u64; n + 1];
    let mut rows = vec![0u64; n];
    for i in 0..k {
        rows[i] = 1 << i;
    }
    let mut picked = Vec::with_capacity(n);
    for a in 0..assignments {
        for c in 0..coded {
            rows[k + c] = (a >> (k * c)) & mask;
        }
        for pattern in 0u32..(1 << n) {
            let r = pattern.count_ones() as usize;
            if r < k {
                continue;
            }
            picked.clear();
            picked.extend((0..n).filter(|i| pattern >> i & 1 == 1).map(|i| rows[i]));
            if rank(&picked) == k {
                counts[r] += 1;
            }
        }
    }
    counts
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    (0..k.min(n - k)).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Exact probability of full recovery given `r` received out of `n`,
/// by enumeration.
pub fn enumerate_f_full(k: usize, r: usize, n: usize) -> BigRational {
    let counts = systematic_decodable_counts(k, n);
    let total = binomial(n as u64, r as u64) << (k * (n - k));
    ratio(counts[r], total)
}

/// Exact probability of full recovery after `n` transmissions with erasure
/// probability `p`, by enumeration of erasure patterns and coefficients.
pub fn enumerate_p_full(k: usize, n: usize, p: &BigRational) -> BigRational {
    let counts = systematic_decodable_counts(k, n);
    let assignments = BigRational::from_integer(BigInt::from(1u64 << (k * (n - k))));
    let keep = BigRational::one() - p.clone();
    let mut total = BigRational::zero();
    for (r, &c) in counts.iter().enumerate() {
        let weight = pow(&keep, r) * pow(p, n - r);
        total += weight * BigRational::from_integer(BigInt::from(c)) / assignments.clone();
    }
    total
}

pub fn pow(x: &BigRational, e: usize) -> BigRational {
    (0..e).fold(BigRational::one(), |acc, _| acc * x.clone())
}

/// Fraction of binary `r × k` matrices with rank `k`.
pub fn enumerate_w(k: usize, r: usize) -> BigRational {
    let mask = (1u64 << k) - 1;
    let total = 1u64 << (k * r);
    let full = (0..total)
        .filter(|a| {
            let rows: Vec<u64> = (0..r).map(|i| (a >> (k * i)) & mask).collect();
            rank(&rows) == k
        })
        .count() as u64;
    ratio(full, total)
}

/// Exact probability that ordered uncoded transmission delivers at least `m`
/// distinct packets in `n` slots, by enumerating erasure patterns.
pub fn enumerate_ou(k: usize, m: usize, n: usize, p: &BigRational) -> BigRational {
    let keep = BigRational::one() - p.clone();
    let mut total = BigRational::zero();
    for pattern in 0u32..(1 << n) {
        let mut seen = 0u64;
        for slot in 0..n {
            if pattern >> slot & 1 == 1 {
                seen |= 1 << (slot % k);
            }
        }
        if seen.count_ones() as usize >= m {
            let r = pattern.count_ones() as usize;
            total += pow(&keep, r) * pow(p, n - r);
        }
    }
    total
}
