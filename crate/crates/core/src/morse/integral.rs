use crate::error::{Result, SbcError};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights at XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

const MAX_DEPTH: usize = 30;
pub const DEFAULT_BUDGET: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogIntegral {
    pub numeric: f64,
    pub closed_form: f64,
    /// Integrand evaluations spent over all nesting levels.
    pub evaluations: usize,
}

impl LogIntegral {
    pub fn relative_error(&self) -> f64 {
        (self.numeric - self.closed_form).abs() / self.closed_form.abs()
    }
}

/// The nested integral written in `u = ln i`, where every level becomes
/// `F_k(u0) = ∫_{u0}^{ln n} F_{k+1}(u) du` with `F_j = 1`.
struct Nested {
    depth: usize,
    upper: f64,
    tol: f64,
    budget: usize,
    used: usize,
}

impl Nested {
    fn value(&mut self, level: usize, u0: f64) -> Result<f64> {
        self.used += 1;
        if self.used > self.budget {
            return Err(SbcError::QuadratureBudgetExceeded { budget: self.budget });
        }
        if level == self.depth {
            return Ok(1.0);
        }
        self.adaptive(level + 1, u0, self.upper, self.tol, 0)
    }

    fn kronrod(&mut self, level: usize, a: f64, b: f64) -> Result<(f64, f64)> {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        let mut k = WGK[7] * self.value(level, c)?;
        let mut g = WG[3] * self.value(level, c)?;
        for i in 0..7 {
            let f = self.value(level, c - h * XGK[i])? + self.value(level, c + h * XGK[i])?;
            k += WGK[i] * f;
            if i % 2 == 1 {
                g += WG[i / 2] * f;
            }
        }
        Ok((k * h, (k - g).abs() * h))
    }

    fn adaptive(&mut self, level: usize, a: f64, b: f64, tol: f64, depth: usize) -> Result<f64> {
        let (est, err) = self.kronrod(level, a, b)?;
        if err <= tol.max(f64::EPSILON * est.abs()) || depth >= MAX_DEPTH {
            return Ok(est);
        }
        let m = 0.5 * (a + b);
        Ok(self.adaptive(level, a, m, 0.5 * tol, depth + 1)? + self.adaptive(level, m, b, 0.5 * tol, depth + 1)?)
    }
}

/// `∫_1^n (1/i_1) ∫_{i_1}^n (1/i_2) … ∫_{i_{j-1}}^n (1/i_j) di_j … di_1`, numerically and in closed form `ln^j(n)/j!`.
pub fn iterated_log_integral(n: f64, j: usize, quad_tol: f64) -> Result<LogIntegral> {
    iterated_log_integral_with(n, j, quad_tol, DEFAULT_BUDGET)
}

pub fn iterated_log_integral_with(n: f64, j: usize, quad_tol: f64, budget: usize) -> Result<LogIntegral> {
    if !(n >= 2.0) || !n.is_finite() {
        return Err(SbcError::InvalidInput(format!("upper limit {n} must be at least 2")));
    }
    if !(1..=6).contains(&j) {
        return Err(SbcError::InvalidInput(format!("nesting depth {j} outside 1..=6")));
    }
    if !(quad_tol > 0.0) {
        return Err(SbcError::InvalidInput("quadrature tolerance must be positive".into()));
    }
    let upper = n.ln();
    let mut nested = Nested { depth: j, upper, tol: quad_tol, budget, used: 0 };
    let numeric = nested.adaptive(1, 0.0, upper, quad_tol, 0)?;
    let closed_form = upper.powi(j as i32) / (1..=j).map(|k| k as f64).product::<f64>();
    Ok(LogIntegral { numeric, closed_form, evaluations: nested.used })
}

/// `a_0 = a_1 = 1`, `a_{j+1} = Σ_{k=0}^{j} (-1)^k a_{j-k} / (k+1)!`, computed exactly up to `a_{j_max}`.
pub fn a_sequence(j_max: usize) -> Vec<BigRational> {
    let mut a = vec![BigRational::one(); j_max.min(1) + 1];
    let mut fact = vec![BigInt::one()];
    for k in 1..=j_max + 1 {
        let next = &fact[k - 1] * BigInt::from(k);
        fact.push(next);
    }
    for j in 1..j_max {
        let mut next = BigRational::zero();
        for k in 0..=j {
            let term = &a[j - k] / BigRational::from_integer(fact[k + 1].clone());
            if k % 2 == 0 {
                next += term;
            } else {
                next -= term;
            }
        }
        a.push(next);
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a_sequence_lengths() {
        assert_eq!(a_sequence(0).len(), 1);
        assert_eq!(a_sequence(1).len(), 2);
        assert_eq!(a_sequence(5).len(), 6);
    }

    #[test]
    fn budget_is_enforced() {
        assert!(matches!(
            iterated_log_integral_with(50.0, 4, 1e-10, 1000),
            Err(SbcError::QuadratureBudgetExceeded { budget: 1000 })
        ));
    }
}
