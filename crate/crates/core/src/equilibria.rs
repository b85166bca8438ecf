//! Relative equilibria in four dimensions generated by planar S-balanced
//! configurations with `S = diag(s, 1)`.
//!
//! Body `i` at `(x_i, y_i)` moves as
//! `(x_i cos ω₁t, x_i sin ω₁t, y_i cos ω₂t, y_i sin ω₂t)` with
//! `ω₁ = √(λs)` and `ω₂ = √λ`. Pairwise distances never change.

use crate::config::{Configuration, MassVector, SpectrumS, Tolerances};
use crate::error::{Result, SbcError};
use crate::potential::{gradient_unchecked, potential_unchecked, sbc_residual};
use crate::solver::SBCSolution;
use serde::Serialize;
use std::f64::consts::TAU;
use std::io::Write;

#[derive(Debug, Clone, PartialEq)]
pub struct RelativeEquilibriumOrbit {
    /// Planar configuration at `t = 0`.
    pub base: Configuration,
    pub s: f64,
    pub lambda: f64,
    /// `(√(λs), √λ)`.
    pub omega: (f64, f64),
}

/// Lifts a planar solution for weights `(s, 1)`.
pub fn lift(base: &SBCSolution, s: f64) -> Result<RelativeEquilibriumOrbit> {
    let q = &base.config;
    if q.d() != 2 {
        return Err(SbcError::NotPlanar { d: q.d() });
    }
    let spectrum = SpectrumS::new(vec![s, 1.0], false)?;
    if base.spectrum.weights() != spectrum.weights() {
        return Err(SbcError::InvalidInput(format!(
            "solution has weights {:?}, not ({s}, 1)",
            base.spectrum.weights()
        )));
    }
    let res = sbc_residual(q, &spectrum)?;
    let tol = Tolerances::default().res * res.potential;
    if !(res.norm() < tol) {
        return Err(SbcError::NotCritical { residual: res.norm(), tol });
    }
    Ok(RelativeEquilibriumOrbit::from_configuration_unchecked(q, s))
}

impl RelativeEquilibriumOrbit {
    /// Same construction with `λ = U / I_S`, without checking criticality.
    pub fn from_configuration_unchecked(q: &Configuration, s: f64) -> Self {
        let m = q.masses();
        let i_s: f64 = (0..q.n()).map(|i| m[i] * (s * q.point(i)[0].powi(2) + q.point(i)[1].powi(2))).sum();
        let lambda = potential_unchecked(q) / i_s;
        RelativeEquilibriumOrbit { base: q.clone(), s, lambda, omega: ((lambda * s).sqrt(), lambda.sqrt()) }
    }

    pub fn masses(&self) -> &MassVector {
        self.base.masses()
    }

    /// Applies `f(x, y, cos ω₁t, sin ω₁t, cos ω₂t, sin ω₂t)` to every body.
    fn map(&self, t: f64, f: impl Fn(f64, f64, f64, f64, f64, f64) -> [f64; 4]) -> Vec<f64> {
        let (c1, s1) = ((self.omega.0 * t).cos(), (self.omega.0 * t).sin());
        let (c2, s2) = ((self.omega.1 * t).cos(), (self.omega.1 * t).sin());
        (0..self.base.n())
            .flat_map(|i| {
                let p = self.base.point(i);
                f(p[0], p[1], c1, s1, c2, s2)
            })
            .collect()
    }

    pub fn position(&self, t: f64) -> Configuration {
        let q = self.map(t, |x, y, c1, s1, c2, s2| [x * c1, x * s1, y * c2, y * s2]);
        Configuration::new(self.masses().clone(), 4, q).expect("rotation of a valid configuration")
    }

    pub fn velocity(&self, t: f64) -> Vec<f64> {
        let (w1, w2) = self.omega;
        self.map(t, |x, y, c1, s1, c2, s2| [-w1 * x * s1, w1 * x * c1, -w2 * y * s2, w2 * y * c2])
    }

    pub fn acceleration(&self, t: f64) -> Vec<f64> {
        let (a1, a2) = (self.omega.0 * self.omega.0, self.omega.1 * self.omega.1);
        self.map(t, |x, y, c1, s1, c2, s2| [-a1 * x * c1, -a1 * x * s1, -a2 * y * c2, -a2 * y * s2])
    }

    /// Angular momentum in the first and in the second rotation plane.
    pub fn angular_momenta(&self, t: f64) -> (f64, f64) {
        let q = self.position(t);
        let v = self.velocity(t);
        let m = self.masses();
        let (mut l1, mut l2) = (0.0, 0.0);
        for i in 0..q.n() {
            let (p, w) = (q.point(i), &v[4 * i..4 * i + 4]);
            l1 += m[i] * (p[0] * w[1] - p[1] * w[0]);
            l2 += m[i] * (p[2] * w[3] - p[3] * w[2]);
        }
        (l1, l2)
    }

    /// Weights `(s, s, 1, 1)` of the four-dimensional problem.
    pub fn spectrum_4d(&self) -> SpectrumS {
        SpectrumS::new(vec![self.s, self.s, 1.0, 1.0], false).unwrap_or_else(|_| SpectrumS::identity(4))
    }

    /// One row per time: `t` followed by the `4n` coordinates.
    pub fn write_csv<W: Write>(&self, times: &[f64], w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        for i in 0..self.base.n() {
            header.extend((1..=4).map(|k| format!("q{}_{k}", i + 1)));
        }
        out.write_record(&header)?;
        for &t in times {
            let mut row = vec![t.to_string()];
            row.extend(self.position(t).coords().iter().map(|x| x.to_string()));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Largest `‖q̈ − M⁻¹∇U(q)‖ / ‖M⁻¹∇U(q)‖` over the sample times.
pub fn newton_residual(orbit: &RelativeEquilibriumOrbit, t_samples: &[f64]) -> f64 {
    let m = orbit.masses();
    t_samples
        .iter()
        .map(|&t| {
            let q = orbit.position(t);
            let acc = orbit.acceleration(t);
            let force: Vec<f64> = gradient_unchecked(&q).iter().enumerate().map(|(k, g)| g / m[k / 4]).collect();
            let num = acc.iter().zip(&force).map(|(a, f)| (a - f) * (a - f)).sum::<f64>().sqrt();
            num / force.iter().map(|f| f * f).sum::<f64>().sqrt()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Periodicity {
    Periodic {
        /// `ω₁/ω₂ = p/q`.
        p: u64,
        q: u64,
        period: f64,
        /// `‖q(T) − q(0)‖`.
        closure: f64,
    },
    QuasiPeriodic {
        ratio: f64,
    },
}

/// Continued-fraction convergents `p/q` of `x` with `q ≤ max_den`.
fn convergents(x: f64, max_den: u64) -> Vec<(u64, u64)> {
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut rest = x;
    let mut out = Vec::new();
    for _ in 0..64 {
        let a = rest.floor();
        if a > 1e15 {
            break;
        }
        let a = a as u64;
        let (p, q) = (a.saturating_mul(p1).saturating_add(p0), a.saturating_mul(q1).saturating_add(q0));
        if q > max_den {
            break;
        }
        out.push((p, q));
        (p0, q0, p1, q1) = (p1, q1, p, q);
        let frac = rest - a as f64;
        if frac < 1e-15 {
            break;
        }
        rest = 1.0 / frac;
    }
    out
}

/// Periodic when `√s` lies within `rational_tol` of a fraction with
/// denominator at most `max_den`; the closure of the orbit is then measured.
pub fn classify_periodicity(orbit: &RelativeEquilibriumOrbit, rational_tol: f64, max_den: u64) -> Periodicity {
    let ratio = orbit.s.sqrt();
    let hit =
        convergents(ratio, max_den).into_iter().find(|&(p, q)| (ratio - p as f64 / q as f64).abs() <= rational_tol);
    match hit {
        Some((p, q)) => {
            let period = TAU * q as f64 / orbit.omega.1;
            let a = orbit.position(0.0);
            let b = orbit.position(period);
            let closure = a.coords().iter().zip(b.coords()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            Periodicity::Periodic { p, q, period, closure }
        }
        None => Periodicity::QuasiPeriodic { ratio },
    }
}

pub const DEFAULT_RATIONAL_TOL: f64 = 1e-13;
pub const DEFAULT_MAX_DEN: u64 = 1_000_000;
