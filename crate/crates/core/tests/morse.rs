use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use sbc_core::morse::*;
use sbc_core::solver::census;
use sbc_core::{MassVector, SbcError, SpectrumS};

fn big(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

/// Plain convolution of the linear factors `(1 + k z)` for `k` in `ks`.
fn product_oracle(ks: impl Iterator<Item = usize>) -> Vec<BigInt> {
    let mut p = vec![BigInt::one()];
    for k in ks {
        let factor = [BigInt::one(), BigInt::from(k)];
        let mut out = vec![BigInt::zero(); p.len() + 1];
        for (i, a) in p.iter().enumerate() {
            for (j, b) in factor.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        p = out;
    }
    p
}

/// Elementary symmetric sum of the products of all `k`-subsets, by brute force.
fn subset_product_sum(values: &[usize], k: usize) -> BigInt {
    let mut total = BigInt::zero();
    for mask in 0u32..(1 << values.len()) {
        if mask.count_ones() as usize == k {
            let p = (0..values.len()).filter(|i| mask >> i & 1 == 1).fold(BigInt::one(), |a, i| a * values[i]);
            total += p;
        }
    }
    total
}

#[test]
fn four_body_coefficients() {
    let t = poincare_coeffs(4).unwrap();
    assert_eq!(t.c, big(&[1, 6, 11, 6]));
    assert_eq!(t.c, product_oracle(1..4));
    assert_eq!(t.sum(), BigInt::from(24));
    let eleven = BigRational::from_integer(6.into()) * harmonic(3);
    assert_eq!(BigRational::from_integer(t.c[2].clone()), eleven);
}

#[test]
fn five_body_coefficients() {
    let t = poincare_coeffs(5).unwrap();
    assert_eq!(t.c, big(&[1, 10, 35, 50, 24]));
    assert_eq!(t.sum(), BigInt::from(120));
}

#[test]
fn coefficients_are_elementary_symmetric_sums() {
    let values: Vec<usize> = (1..9).collect();
    let t = poincare_coeffs(9).unwrap();
    for j in 0..9 {
        assert_eq!(t.c[j], subset_product_sum(&values, j));
    }
}

#[test]
fn coefficients_past_twenty_one_bodies() {
    let t = poincare_coeffs(25).unwrap();
    assert_eq!(t.c, product_oracle(1..25));
    assert_eq!(t.sum(), factorial(25));
    assert!(t.c[24] > BigInt::from(u64::MAX));
}

#[test]
fn xi_table_matches_multiplication() {
    for n in 2..=15 {
        let xi = xi_coeffs(n).unwrap();
        assert_eq!(xi.xi, product_oracle(2..n), "n={n}");
        assert_eq!(xi.sum() * 2, factorial(n));
    }
    let four = xi_coeffs(4).unwrap();
    assert_eq!(four.weighted_sum(), BigInt::from(7));
    assert_eq!(BigRational::from_integer(7.into()), BigRational::from_integer(12.into()) * h(4));
}

#[test]
fn xi_splits_coefficients() {
    for n in 2..=15 {
        let c = poincare_coeffs(n).unwrap();
        let xi = xi_coeffs(n).unwrap();
        for j in 0..n as isize {
            assert_eq!(c.c[j as usize], xi.get(j) + xi.get(j - 1));
        }
    }
}

#[test]
fn identity_suite_passes() {
    let rep = coefficient_identity_suite(30).unwrap();
    assert_eq!(rep.rows.len(), 30);
    let four = &rep.rows[3];
    assert_eq!(four.max_coefficient, BigInt::from(11));
    assert_eq!(four.half_factorial, BigInt::from(12));
    assert!(four.strict);
    assert!(!rep.rows[2].strict);
    let fixed_one = rep.sequences.iter().find(|s| s.label == "c_1 / n!").unwrap();
    assert_eq!(fixed_one.n.first(), Some(&4));
    assert_eq!(fixed_one.n.last(), Some(&30));
    assert!(fixed_one.decreasing);
    assert!(rep.sequences.iter().filter(|s| s.asserted).all(|s| s.decreasing));
}

#[test]
fn identity_suite_rejects_tiny_range() {
    assert!(matches!(coefficient_identity_suite(3), Err(SbcError::InvalidInput(_))));
}

#[test]
fn top_coefficient_tracks_logarithm() {
    let rep = coefficient_identity_suite(60).unwrap();
    let s = rep.sequences.iter().find(|s| s.label.starts_with("c_(n-2) / ((gamma")).unwrap();
    let last = *s.values.last().unwrap();
    assert!((last - 1.0).abs() < 0.01, "{last}");
}

#[test]
fn a_recursion_gives_inverse_factorials() {
    let a = a_sequence(20);
    assert_eq!(a.len(), 21);
    assert_eq!(a[2], BigRational::new(1.into(), 2.into()));
    for (j, x) in a.iter().enumerate() {
        assert_eq!(*x, BigRational::new(1.into(), factorial(j)), "j={j}");
    }
}

#[test]
fn log_integral_unit_case() {
    let r = iterated_log_integral(std::f64::consts::E, 1, 1e-12).unwrap();
    assert!((r.numeric - 1.0).abs() < 1e-12);
    assert!((r.closed_form - 1.0).abs() < 1e-15);
}

#[test]
fn log_integral_depth_three() {
    let r = iterated_log_integral(100.0, 3, 1e-10).unwrap();
    assert!(r.relative_error() < 1e-6);
}

/// Brute-force midpoint rule in the original variable for a two-fold integral.
#[test]
fn log_integral_against_midpoint_rule() {
    let n = 20.0f64;
    let steps = 200_000;
    let h = (n - 1.0) / steps as f64;
    let mut total = 0.0;
    for a in 0..steps {
        let x = 1.0 + (a as f64 + 0.5) * h;
        total += (n.ln() - x.ln()) / x * h;
    }
    let r = iterated_log_integral(n, 2, 1e-12).unwrap();
    assert!((r.numeric - total).abs() < 1e-6);
}

#[test]
fn log_integral_input_checks() {
    assert!(iterated_log_integral(1.5, 2, 1e-8).is_err());
    assert!(iterated_log_integral(10.0, 7, 1e-8).is_err());
    assert!(iterated_log_integral(10.0, 0, 1e-8).is_err());
}

#[test]
fn equal_mass_regimes() {
    let r = bounds_main1(3, Regime::BelowEta1).unwrap();
    assert_eq!(r.entries[0].total, Some(14.into()));
    assert_eq!(r.entries[0].non_collinear, Some(2.into()));
    let r = bounds_main1(4, Regime::BelowEta1).unwrap();
    assert_eq!(r.entries[0].total, Some(60.into()));
    assert_eq!(r.entries[0].non_collinear, Some(12.into()));
    let r = bounds_main1(3, Regime::AboveEtak).unwrap();
    assert_eq!(r.entries[0].total, Some(24.into()));
    assert_eq!(r.entries[0].non_collinear, Some(12.into()));
    let r = bounds_main1(4, Regime::Between).unwrap();
    assert_eq!(r.entries[0].total, Some((4 * 24 - 12).into()));
    assert_eq!(r.residual_bounds, vec![(0, 23.into()), (1, 18.into())]);
    assert_eq!(r.regime, "between");
}

#[test]
fn general_bounds() {
    let r = bounds_general(4, 4).unwrap();
    assert_eq!(r.entry("coordinate_planes").unwrap().non_collinear, Some(72.into()));
    let gap = r.entry("index_gaps_one").unwrap();
    assert_eq!(gap.total, Some(102.into()));
    assert!(gap.hypothetical);
    assert_eq!(r.entry("quotient_betti_sum").unwrap().total, Some(32.into()));
    assert_eq!(r.entry("quotient_beyond_planar_cc").unwrap().total, Some(13.into()));
    let r = bounds_general(3, 2).unwrap();
    assert_eq!(r.entry("coordinate_planes").unwrap().non_collinear, Some(2.into()));
    assert_eq!(r.entry("planar_above_all_thresholds").unwrap().non_collinear, Some(12.into()));
    assert!(bounds_general(2, 2).is_err());
}

proptest! {
    #[test]
    fn bounds_are_nonnegative(n in 3usize..14, d in 2usize..7) {
        let r = bounds_general(n, d).unwrap();
        for e in &r.entries {
            for v in [&e.total, &e.non_collinear].into_iter().flatten() {
                prop_assert!(*v >= BigInt::zero());
            }
        }
    }

    #[test]
    fn poincare_sum_is_factorial(n in 1usize..40) {
        prop_assert_eq!(poincare_coeffs(n).unwrap().sum(), factorial(n));
    }
}

#[test]
fn quotient_betti_numbers() {
    let b = betti_quotient(4).unwrap();
    assert_eq!(b.betti, big(&[1, 0, 7, 0, 18, 6]));
    assert_eq!(b.total, BigInt::from(32));
    assert_eq!(b.xi_weighted_sum, BigInt::from(7));
    assert_eq!(b.mccord, BigInt::from(19));
    assert_eq!(b.surplus, BigInt::from(13));
    for n in 4..=12 {
        let b = betti_quotient(n).unwrap();
        assert_eq!(b.total, b.closed_form);
        let direct: BigInt = factorial(n - 1)
            + (0..=n - 2).map(|k| poincare_coeffs(n).unwrap().c[..=k].iter().sum::<BigInt>()).sum::<BigInt>();
        assert_eq!(b.total, direct);
    }
}

#[test]
fn quotient_betti_rejects_three_bodies() {
    assert!(matches!(betti_quotient(3), Err(SbcError::UnsupportedCase(_))));
}

#[test]
fn remainder_of_exact_poincare() {
    let p = poincare_coeffs(4).unwrap().c;
    let chk = morse_remainder(&p, 4, 2).unwrap();
    assert!(chk.consistent());
    assert!(chk.remainder.iter().all(|r| r.is_zero()));
    let spatial = poincare_coeffs(4).unwrap().in_degree(3);
    assert!(morse_remainder(&spatial, 4, 3).unwrap().remainder.iter().all(|r| r.is_zero()));
}

#[test]
fn missing_minimum_is_flagged() {
    // Three-body counts with remainder 11 + 4t, then one minimum removed.
    let full = big(&[12, 18, 6]);
    let chk = morse_remainder(&full, 3, 2).unwrap();
    assert_eq!(chk.remainder, big(&[11, 4]));
    let short = big(&[11, 18, 6]);
    assert!(!morse_remainder(&short, 3, 2).unwrap().consistent());
    // A remainder that divides but goes negative.
    let chk = morse_remainder(&big(&[0, 2, 2]), 3, 2).unwrap();
    assert!(chk.exact && !chk.nonnegative);
}

#[test]
fn census_satisfies_morse_inequalities() {
    let c = census(&MassVector::equal(3).unwrap(), &SpectrumS::planar(1.5).unwrap(), 800, 7).unwrap();
    let chk = morse_inequality_check(&c, 3, 2).unwrap();
    assert!(chk.consistent(), "{:?}", chk);
    assert!(matches!(morse_inequality_check(&c, 4, 2), Err(SbcError::InvalidInput(_))));
}

#[test]
fn degenerate_census_is_refused() {
    let mut c = census(&MassVector::equal(3).unwrap(), &SpectrumS::planar(1.5).unwrap(), 50, 7).unwrap();
    c.solutions[0].triple.nullity = 1;
    assert!(matches!(morse_inequality_check(&c, 3, 2), Err(SbcError::DegenerateCensus { count: 1 })));
}
