use super::big;
use super::coeffs::{factorial, h, poincare_coeffs, xi_coeffs};
use crate::error::{Result, SbcError};
use crate::solver::Census;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

/// Position of the first-axis weight relative to the second-axis degeneracy thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Below the smallest threshold: second-axis collinear points have index n-2.
    BelowEta1,
    /// Past the smallest threshold but not the largest.
    Between,
    /// Past every threshold: second-axis collinear points are minima.
    AboveEtak,
}

impl std::str::FromStr for Regime {
    type Err = SbcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "below_eta1" => Ok(Regime::BelowEta1),
            "between" => Ok(Regime::Between),
            "above_etak" => Ok(Regime::AboveEtak),
            _ => Err(SbcError::InvalidInput(format!("unknown regime {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundEntry {
    pub label: String,
    #[serde(serialize_with = "big::opt")]
    pub total: Option<BigInt>,
    #[serde(serialize_with = "big::opt")]
    pub non_collinear: Option<BigInt>,
    /// The bound rests on an assumption about index gaps that is not checked here.
    pub hypothetical: bool,
}

impl BoundEntry {
    fn new(label: &str, total: Option<BigInt>, non_collinear: Option<BigInt>, hypothetical: bool) -> Self {
        BoundEntry { label: label.into(), total, non_collinear, hypothetical }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub n: usize,
    pub d: usize,
    pub regime: String,
    pub entries: Vec<BoundEntry>,
    /// For the intermediate regime: `(j, n! - c_j)`, the exact lower bound on
    /// `r_{j-1} + r_j` when the second-axis points have index `j`.
    #[serde(serialize_with = "pairs")]
    pub residual_bounds: Vec<(usize, BigInt)>,
}

fn pairs<S: serde::Serializer>(xs: &[(usize, BigInt)], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for (j, v) in xs {
        seq.serialize_element(&(j, v.to_string()))?;
    }
    seq.end()
}

impl BoundsReport {
    pub fn entry(&self, label: &str) -> Option<&BoundEntry> {
        self.entries.iter().find(|e| e.label == label)
    }

    fn check(self) -> Result<Self> {
        for e in &self.entries {
            for v in [&e.total, &e.non_collinear].into_iter().flatten() {
                if v.is_negative() {
                    return Err(SbcError::IdentityViolation(format!("negative bound {v} for {}", e.label)));
                }
            }
        }
        Ok(self)
    }
}

fn int(k: usize) -> BigInt {
    BigInt::from(k)
}

/// Planar lower bounds for equal masses in each spectral regime.
pub fn bounds_main1(n: usize, regime: Regime) -> Result<BoundsReport> {
    if n < 3 {
        return Err(SbcError::InvalidInput("bounds need n >= 3".into()));
    }
    let f = factorial(n);
    let g = factorial(n - 1);
    let collinear = int(2) * &f;
    let non_collinear = match regime {
        Regime::BelowEta1 => &f - int(2) * &g,
        Regime::Between => int(2) * &f - int(2) * &g,
        Regime::AboveEtak => int(3) * &f - int(2) * &g - 2,
    };
    let mut residual_bounds = Vec::new();
    if regime == Regime::Between {
        let c = poincare_coeffs(n)?;
        residual_bounds = (0..=n - 3).map(|j| (j, &f - c.get(j))).collect();
    }
    let label = serde_json::to_value(regime)?.as_str().unwrap_or_default().to_string();
    BoundsReport {
        n,
        d: 2,
        regime: label,
        entries: vec![BoundEntry::new("equal_masses", Some(&non_collinear + collinear), Some(non_collinear), false)],
        residual_bounds,
    }
    .check()
}

/// Bounds that do not need equal masses, the index-gap cases for equal masses
/// in dimension `d`, the coordinate-plane count and, for `d = 4`, the
/// quotient-manifold counts.
pub fn bounds_general(n: usize, d: usize) -> Result<BoundsReport> {
    if n < 3 || d < 2 {
        return Err(SbcError::InvalidInput("bounds need n >= 3 and d >= 2".into()));
    }
    let f = factorial(n);
    let g = factorial(n - 1);
    let two_g = int(2) * &g;
    let dd = int(d);
    let plane = |nc: BigInt| (Some(&nc + int(2) * &f), Some(nc));
    let mut entries = Vec::new();

    let (t, nc) = plane(int(3) * &f - &two_g - 2);
    entries.push(BoundEntry::new("planar_above_all_thresholds", t, nc, false));
    let (t, nc) = plane(&f - &two_g);
    entries.push(BoundEntry::new("planar_otherwise", t, nc, false));

    // (d + 1/2) n! - (n-1)! is an integer since n! is even.
    let total = &dd * &f + &f / 2 - &g;
    entries.push(BoundEntry::new("index_gaps_one", Some(total), Some(&f / 2 - &g), true));
    let total = (&dd + 2) * &f - &two_g;
    entries.push(BoundEntry::new("index_gaps_two", Some(total), Some(int(2) * &f - &two_g), true));
    let total = (int(2) * &dd + 1) * &f - &two_g;
    entries.push(BoundEntry::new("index_gaps_two_off_multiples", Some(total), Some((&dd + 1) * &f - &two_g), true));

    let planes = int(d * (d - 1) / 2) * (&f - &two_g);
    entries.push(BoundEntry::new("coordinate_planes", None, Some(planes), false));

    if d == 4 && n >= 4 {
        let b = betti_quotient(n)?;
        entries.push(BoundEntry::new("quotient_betti_sum", Some(b.total.clone()), None, false));
        entries.push(BoundEntry::new("quotient_beyond_planar_cc", Some(b.surplus.clone()), None, false));
    }
    BoundsReport { n, d, regime: "general".into(), entries, residual_bounds: Vec::new() }.check()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BettiReport {
    pub n: usize,
    /// Betti numbers by degree, `0 ..= 2n-3`.
    #[serde(serialize_with = "big::vec")]
    pub betti: Vec<BigInt>,
    #[serde(rename = "sum", serialize_with = "big::one")]
    pub total: BigInt,
    /// `n! (h(n) + 1/2 + 1/n)`.
    #[serde(serialize_with = "big::one")]
    pub closed_form: BigInt,
    /// `Σ ξ_j (n-2-j)`, equal to `(n!/2) h(n)`.
    #[serde(serialize_with = "big::one")]
    pub xi_weighted_sum: BigInt,
    /// Planar central configurations counted by McCord: `(n!/2)(h(n) + 1)`.
    #[serde(serialize_with = "big::one")]
    pub mccord: BigInt,
    /// `n! (h(n)/2 + 1/n)`.
    #[serde(serialize_with = "big::one")]
    pub surplus: BigInt,
}

fn exact_integer(x: BigRational, what: &str) -> Result<BigInt> {
    if !x.is_integer() {
        return Err(SbcError::IdentityViolation(format!("{what} = {x} is not an integer")));
    }
    Ok(x.to_integer())
}

/// Betti numbers of the quotient of the collision-free sphere by the circle
/// action in four dimensions with weights `(s, s, 1, 1)`.
pub fn betti_quotient(n: usize) -> Result<BettiReport> {
    if n < 4 {
        return Err(SbcError::UnsupportedCase(format!("quotient Betti numbers are only known for n >= 4, got {n}")));
    }
    let c = poincare_coeffs(n)?;
    let mut betti = vec![BigInt::zero(); 2 * n - 2];
    let mut partial = BigInt::zero();
    for k in 0..=n - 2 {
        partial += c.get(k);
        betti[2 * k] = partial.clone();
    }
    betti[2 * n - 3] = factorial(n - 1);
    let total: BigInt = betti.iter().sum();

    let f = BigRational::from_integer(factorial(n));
    let hn = h(n);
    let inv_n = BigRational::new(BigInt::from(1), BigInt::from(n));
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    let closed_form = exact_integer(&f * (&hn + &half + &inv_n), "closed form")?;
    if closed_form != total {
        return Err(SbcError::IdentityViolation(format!("n={n}: Betti sum {total} != closed form {closed_form}")));
    }
    let xi = xi_coeffs(n)?;
    let xi_weighted_sum = xi.weighted_sum();
    let want = exact_integer(&f * &half * &hn, "(n!/2) h(n)")?;
    if xi_weighted_sum != want || xi.sum() * 2 != factorial(n) {
        return Err(SbcError::IdentityViolation(format!("n={n}: xi weighted sum {xi_weighted_sum} != {want}")));
    }
    let mccord = exact_integer(&f * &half * (&hn + BigRational::from_integer(1.into())), "McCord count")?;
    let surplus = exact_integer(&f * (&hn * &half + &inv_n), "surplus")?;
    Ok(BettiReport { n, betti, total, closed_form, xi_weighted_sum, mccord, surplus })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MorseCheck {
    /// Critical points by Morse index.
    #[serde(serialize_with = "big::vec")]
    pub morse: Vec<BigInt>,
    /// Betti numbers of the collision-free sphere by degree.
    #[serde(serialize_with = "big::vec")]
    pub poincare: Vec<BigInt>,
    /// Quotient of `M - P` by `1 + t`.
    #[serde(serialize_with = "big::vec")]
    pub remainder: Vec<BigInt>,
    /// Value left over by the synthetic division; zero when `1 + t` divides `M - P`.
    #[serde(serialize_with = "big::one")]
    pub division_remainder: BigInt,
    pub exact: bool,
    pub nonnegative: bool,
}

impl MorseCheck {
    /// Necessary condition for the census to be complete.
    pub fn consistent(&self) -> bool {
        self.exact && self.nonnegative
    }
}

/// `R = (M - P) / (1 + t)` for Morse counts `morse` against `P = p_n(t^(d-1))`.
pub fn morse_remainder(morse: &[BigInt], n: usize, d: usize) -> Result<MorseCheck> {
    if n < 2 || d < 2 {
        return Err(SbcError::InvalidInput("need n >= 2 and d >= 2".into()));
    }
    let poincare = poincare_coeffs(n)?.in_degree(d);
    let len = morse.len().max(poincare.len());
    let diff: Vec<BigInt> = (0..len)
        .map(|k| morse.get(k).cloned().unwrap_or_default() - poincare.get(k).cloned().unwrap_or_default())
        .collect();
    // Divide from the top: r_{k-1} = diff_k - r_k.
    let mut remainder = vec![BigInt::zero(); len.saturating_sub(1)];
    let mut carry = BigInt::zero();
    for k in (1..len).rev() {
        carry = &diff[k] - &carry;
        remainder[k - 1] = carry.clone();
    }
    let division_remainder = &diff[0] - &carry;
    let exact = division_remainder.is_zero();
    let nonnegative = remainder.iter().all(|r| !r.is_negative());
    Ok(MorseCheck { morse: morse.to_vec(), poincare, remainder, division_remainder, exact, nonnegative })
}

/// Morse inequalities for a census of nondegenerate critical points.
pub fn morse_inequality_check(census: &Census, n: usize, d: usize) -> Result<MorseCheck> {
    if census.masses.n() != n || census.spectrum.d() != d {
        return Err(SbcError::InvalidInput(format!(
            "census has n={} d={}, expected n={n} d={d}",
            census.masses.n(),
            census.spectrum.d()
        )));
    }
    let degenerate = census.solutions.iter().filter(|s| s.triple.nullity > 0).count();
    if degenerate > 0 {
        return Err(SbcError::DegenerateCensus { count: degenerate });
    }
    let counts: Vec<BigInt> = census.morse_counts().into_iter().map(BigInt::from).collect();
    morse_remainder(&counts, n, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn division_by_one_plus_t() {
        // M - P = (1 + t)(2 + 3t)
        let p = poincare_coeffs(3).unwrap().c;
        let m: Vec<BigInt> = p.iter().zip(big(&[2, 5, 3])).map(|(a, b)| a + b).collect();
        let chk = morse_remainder(&m, 3, 2).unwrap();
        assert_eq!(chk.remainder, big(&[2, 3]));
        assert!(chk.consistent());
        let chk = morse_remainder(&big(&[1, 3, 3]), 3, 2).unwrap();
        assert!(!chk.exact);
    }

    #[test]
    fn regime_names() {
        assert_eq!("between".parse::<Regime>().unwrap(), Regime::Between);
        assert!("sideways".parse::<Regime>().is_err());
    }
}
