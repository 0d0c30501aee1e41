mod common;

use common::oracles;
use num_bigint::BigUint;
use num_traits::{One, Zero};
use proptest::prelude::*;
use sysnc::analysis::{
    decoding_ratio, f_full, h_min, ou_p_partial, p_full, p_partial_approx, sf_p_full, w_prob,
};
use sysnc::scalar::{binomial_exact, ratio};
use sysnc::{Probability, Rational};

#[test]
fn f_full_matches_enumeration() {
    for k in 1..=3usize {
        for n in k..=7 {
            for r in k..=n {
                let exact = f_full::<Rational>(k as u64, r as u64, n as u64, 2).unwrap();
                assert_eq!(
                    exact,
                    oracles::enumerate_f_full(k, r, n),
                    "K={k} r={r} N={n}"
                );
            }
        }
    }
}

#[test]
fn p_full_matches_enumeration() {
    let p = ratio(1, 5);
    for k in 1..=3usize {
        for n in k..=6 {
            let exact = p_full::<Rational>(k as u64, n as u64, &p, 2).unwrap();
            assert_eq!(exact, oracles::enumerate_p_full(k, n, &p), "K={k} N={n}");
        }
    }
}

#[test]
fn w_prob_matches_enumeration() {
    for k in 1..=3usize {
        for r in k..=5 {
            assert_eq!(
                w_prob::<Rational>(k as u64, r as u64, 2),
                oracles::enumerate_w(k, r)
            );
        }
    }
}

#[test]
fn ou_matches_enumeration() {
    let p = ratio(3, 10);
    for k in 1..=4usize {
        for m in 1..=k {
            for n in 1..=10 {
                let exact = ou_p_partial::<Rational>(k as u64, m as u64, n as u64, &p).unwrap();
                assert_eq!(
                    exact,
                    oracles::enumerate_ou(k, m, n, &p),
                    "K={k} M={m} N={n}"
                );
            }
        }
    }
}

#[test]
fn vandermonde_over_reception_profiles() {
    for k in 1..=20u64 {
        for n in k..=k + 20 {
            for r in 0..=n {
                let lo = r.saturating_sub(n - k);
                let hi = r.min(k);
                let sum = (lo..=hi).fold(BigUint::zero(), |acc, h| {
                    acc + binomial_exact(k, h) * binomial_exact(n - k, r - h)
                });
                assert_eq!(sum, binomial_exact(n, r), "K={k} N={n} r={r}");
                if r >= k {
                    assert_eq!(lo, h_min(k, n, r));
                }
            }
        }
    }
}

#[test]
fn full_recovery_needs_at_least_k_arrivals() {
    assert_eq!(
        p_partial_approx::<f64>(4, 4, 9, &0.0).unwrap().value,
        p_full::<f64>(4, 9, &0.0, 2).unwrap()
    );
    assert_eq!(
        p_full::<Rational>(3, 3, &Rational::zero(), 2).unwrap(),
        Rational::one()
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn systematic_dominates_random_coding(k in 1u64..=12, extra in 0u64..=12, r_off in 0u64..=12, q in 2u64..=4) {
        let n = k + extra;
        let r = k + r_off.min(extra);
        let f = f_full::<f64>(k, r, n, q).unwrap();
        let w = w_prob::<f64>(k, r, q);
        prop_assert!(f >= w - 1e-12);
        prop_assert!(decoding_ratio::<f64>(k, r, n, q).unwrap() >= 1.0 - 1e-12);
        prop_assert!(f_full::<Rational>(k, r, n, q).unwrap() > w_prob::<Rational>(k, r, q));
    }

    #[test]
    fn probabilities_stay_in_unit_interval(k in 1u64..=30, extra in 0u64..=40, m_off in 0u64..30, p in 0.0f64..1.0) {
        let n = k + extra;
        let m = 1 + m_off % k;
        for v in [
            p_full::<f64>(k, n, &p, 2).unwrap(),
            sf_p_full::<f64>(k, n, &p, 2).unwrap(),
            p_partial_approx::<f64>(k, m, n, &p).unwrap().value,
            ou_p_partial::<f64>(k, m, n, &p).unwrap(),
        ] {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&v), "{v}");
        }
    }

    #[test]
    fn curves_are_monotone(k in 1u64..=20, n in 1u64..=60, p in 0.0f64..0.95) {
        let n = n.max(k);
        let eps = 1e-12;
        prop_assert!(p_full::<f64>(k, n + 1, &p, 2).unwrap() >= p_full::<f64>(k, n, &p, 2).unwrap() - eps);
        prop_assert!(sf_p_full::<f64>(k, n + 1, &p, 2).unwrap() >= sf_p_full::<f64>(k, n, &p, 2).unwrap() - eps);
        prop_assert!(p_full::<f64>(k, n, &p, 2).unwrap() >= sf_p_full::<f64>(k, n, &p, 2).unwrap() - eps);
        for m in 1..k {
            // M = K switches to the exact full-recovery formula, which also
            // counts coded packets; the ordering holds among the approximations.
            if m + 1 < k {
                let a = p_partial_approx::<f64>(k, m, n, &p).unwrap().value;
                let b = p_partial_approx::<f64>(k, m + 1, n, &p).unwrap().value;
                prop_assert!(a >= b - eps);
            }
            let a = ou_p_partial::<f64>(k, m, n, &p).unwrap();
            let b = ou_p_partial::<f64>(k, m + 1, n, &p).unwrap();
            prop_assert!(a >= b - eps);
        }
        let p_hi = (p + 0.04).min(1.0);
        prop_assert!(p_full::<f64>(k, n, &p, 2).unwrap() >= p_full::<f64>(k, n, &p_hi, 2).unwrap() - eps);
    }

    #[test]
    fn float_tracks_exact(k in 1u64..=10, extra in 0u64..=10, num in 0u64..=20) {
        let n = k + extra;
        let exact = p_full::<Rational>(k, n, &ratio(num, 20), 2).unwrap();
        let float = p_full::<f64>(k, n, &(num as f64 / 20.0), 2).unwrap();
        prop_assert!((Probability::to_f64(&exact) - float).abs() < 1e-12);
    }
}
