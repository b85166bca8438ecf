use super::big;
use crate::error::{Result, SbcError};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Coefficients of `p_n(z) = (1+z)(1+2z)…(1+(n-1)z)`, lowest degree first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PoincareTable {
    pub n: usize,
    #[serde(serialize_with = "big::vec")]
    pub c: Vec<BigInt>,
}

impl PoincareTable {
    /// `c_j`, zero past the top degree.
    pub fn get(&self, j: usize) -> BigInt {
        self.c.get(j).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn sum(&self) -> BigInt {
        self.c.iter().sum()
    }

    /// Coefficients of `p_n(t^(d-1))` indexed by the degree in `t`.
    pub fn in_degree(&self, d: usize) -> Vec<BigInt> {
        let k = d.saturating_sub(1).max(1);
        let mut out = vec![BigInt::zero(); (self.n - 1) * k + 1];
        for (j, c) in self.c.iter().enumerate() {
            out[j * k] += c;
        }
        out
    }
}

/// Coefficients of `(1+2t)(1+3t)…(1+(n-1)t)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct XiTable {
    pub n: usize,
    #[serde(serialize_with = "big::vec")]
    pub xi: Vec<BigInt>,
}

impl XiTable {
    pub fn get(&self, j: isize) -> BigInt {
        if j < 0 {
            return BigInt::zero();
        }
        self.xi.get(j as usize).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn sum(&self) -> BigInt {
        self.xi.iter().sum()
    }

    /// `Σ_{j ≤ n-3} ξ_j (n-2-j)`.
    pub fn weighted_sum(&self) -> BigInt {
        self.xi.iter().enumerate().take(self.n.saturating_sub(2)).map(|(j, x)| x * BigInt::from(self.n - 2 - j)).sum()
    }
}

pub fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

fn ratio(a: usize, b: usize) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

/// `H_n = 1 + 1/2 + … + 1/n`.
pub fn harmonic(n: usize) -> BigRational {
    (1..=n).map(|i| ratio(1, i)).fold(BigRational::zero(), |a, b| a + b)
}

/// `h(n) = 1/3 + 1/4 + … + 1/n`.
pub fn h(n: usize) -> BigRational {
    (3..=n).map(|i| ratio(1, i)).fold(BigRational::zero(), |a, b| a + b)
}

/// Multiplies the coefficient list by `(1 + k z)`: `c'_j = c_j + k c_{j-1}`.
fn times_linear(c: &[BigInt], k: usize) -> Vec<BigInt> {
    let k = BigInt::from(k);
    let mut out = Vec::with_capacity(c.len() + 1);
    for j in 0..=c.len() {
        let mut v = c.get(j).cloned().unwrap_or_else(BigInt::zero);
        if j > 0 {
            v += &k * &c[j - 1];
        }
        out.push(v);
    }
    out
}

pub fn poincare_coeffs(n: usize) -> Result<PoincareTable> {
    if n == 0 {
        return Err(SbcError::InvalidInput("need at least one body".into()));
    }
    let c = (1..n).fold(vec![BigInt::one()], |c, k| times_linear(&c, k));
    Ok(PoincareTable { n, c })
}

pub fn xi_coeffs(n: usize) -> Result<XiTable> {
    if n < 2 {
        return Err(SbcError::InvalidInput("the xi table needs n >= 2".into()));
    }
    let xi = (2..n).fold(vec![BigInt::one()], |x, k| times_linear(&x, k));
    Ok(XiTable { n, xi })
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityRow {
    pub n: usize,
    #[serde(serialize_with = "big::one")]
    pub sum: BigInt,
    #[serde(serialize_with = "big::one")]
    pub max_coefficient: BigInt,
    #[serde(serialize_with = "big::one")]
    pub half_factorial: BigInt,
    /// `max c_j < n!/2`.
    pub strict: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioSequence {
    pub label: String,
    pub n: Vec<usize>,
    pub values: Vec<f64>,
    pub decreasing: bool,
    /// Whether a failure to decrease counts as a violation.
    pub asserted: bool,
}

impl RatioSequence {
    fn new(label: impl Into<String>, asserted: bool, samples: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let (n, values): (Vec<_>, Vec<_>) = samples.into_iter().unzip();
        let decreasing = values.windows(2).all(|w| w[1] < w[0]);
        RatioSequence { label: label.into(), n, values, decreasing, asserted }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub n_max: usize,
    pub rows: Vec<IdentityRow>,
    pub sequences: Vec<RatioSequence>,
}

fn to_f64(num: &BigInt, den: &BigInt) -> f64 {
    BigRational::new(num.clone(), den.clone()).to_f64().unwrap_or(f64::NAN)
}

/// Exact checks of the coefficient identities for every `n ≤ n_max`, plus
/// sampled ratio sequences standing in for the limit statements.
pub fn coefficient_identity_suite(n_max: usize) -> Result<IdentityReport> {
    if n_max < 4 {
        return Err(SbcError::InvalidInput("n_max must be at least 4".into()));
    }
    let violation = |msg: String| Err(SbcError::IdentityViolation(msg));
    let tables: Vec<PoincareTable> = (1..=n_max).map(poincare_coeffs).collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(n_max);
    for t in &tables {
        let n = t.n;
        let fact = factorial(n);
        let sum = t.sum();
        if sum != fact {
            return violation(format!("n={n}: sum of coefficients {sum} != {fact}"));
        }
        if t.c[0] != BigInt::one() || t.c[n - 1] != factorial(n - 1) {
            return violation(format!("n={n}: end coefficients {} and {}", t.c[0], t.c[n - 1]));
        }
        let max = t.c.iter().max().cloned().unwrap_or_default();
        let half = &fact / 2;
        if n >= 2 {
            if max > half {
                return violation(format!("n={n}: coefficient {max} exceeds n!/2 = {half}"));
            }
            let lhs = BigRational::from_integer(t.c[n - 2].clone());
            let rhs = BigRational::from_integer(factorial(n - 1)) * harmonic(n - 1);
            if lhs != rhs {
                return violation(format!("n={n}: c_(n-2) = {} but (n-1)! H_(n-1) = {rhs}", t.c[n - 2]));
            }
            let xi = xi_coeffs(n)?;
            for j in 0..n {
                if t.c[j] != xi.get(j as isize) + xi.get(j as isize - 1) {
                    return violation(format!("n={n}: c_{j} != xi_{j} + xi_{}", j as isize - 1));
                }
            }
        }
        let strict = max < half;
        if n >= 4 && !strict {
            return violation(format!("n={n}: coefficient {max} is not below n!/2"));
        }
        rows.push(IdentityRow { n, sum, max_coefficient: max, half_factorial: half, strict });
    }

    let table = |n: usize| &tables[n - 1];
    let mut sequences = Vec::new();
    for j in 0..3 {
        let samples = (4..=n_max).map(|n| (n, to_f64(&table(n).get(j), &factorial(n))));
        sequences.push(RatioSequence::new(format!("c_{j} / n!"), true, samples));
    }
    for k in 1..3 {
        let samples = (4..=n_max).map(|n| (n, to_f64(&table(n).get(n - k), &factorial(n))));
        sequences.push(RatioSequence::new(format!("c_(n-{k}) / n!"), true, samples));
    }
    let samples = (4..=n_max).map(|n| {
        let r = to_f64(&table(n).get(n - 2), &factorial(n - 1));
        (n, r / (EULER_GAMMA + (n as f64).ln()))
    });
    sequences.push(RatioSequence::new("c_(n-2) / ((gamma + ln n) (n-1)!)", false, samples));

    // Index n/2 - 1 along even n, i.e. a divergent gap n - n/2 below the top degree.
    let even = || (8..=n_max).step_by(2);
    let mid = |n: usize| table(n).get(n / 2 - 1);
    let samples = even().map(|n| (n, to_f64(&mid(n), &factorial(n - 1)) / (n as f64).sqrt()));
    sequences.push(RatioSequence::new("c_(n/2-1) / (n^(1/2) (n-1)!)", true, samples));
    let samples = even().map(|n| (n, to_f64(&mid(n), &factorial(n - 1))));
    sequences.push(RatioSequence::new("c_(n/2-1) / (n-1)!", true, samples));
    let samples = even().map(|n| (n, to_f64(&mid(n), &factorial(n - 2))));
    sequences.push(RatioSequence::new("c_(n/2-1) / (n-2)!", true, samples));

    if let Some(bad) = sequences.iter().find(|s| s.asserted && !s.decreasing) {
        let at = bad.values.windows(2).position(|w| w[1] >= w[0]).map(|i| bad.n[i + 1]).unwrap_or(0);
        return violation(format!("{} does not decrease at n={at}", bad.label));
    }
    Ok(IdentityReport { n_max, rows, sequences })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_tables() {
        let big = |v: &[u64]| v.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>();
        assert_eq!(poincare_coeffs(1).unwrap().c, big(&[1]));
        assert_eq!(poincare_coeffs(3).unwrap().c, big(&[1, 3, 2]));
        assert_eq!(xi_coeffs(4).unwrap().xi, big(&[1, 5, 6]));
        assert_eq!(poincare_coeffs(3).unwrap().in_degree(3), big(&[1, 0, 3, 0, 2]));
    }

    #[test]
    fn harmonic_values() {
        assert_eq!(harmonic(3), ratio(11, 6));
        assert_eq!(h(4), ratio(7, 12));
        assert_eq!(h(2), BigRational::zero());
    }
}
