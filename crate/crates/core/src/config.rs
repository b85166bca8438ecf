use crate::error::{Result, SbcError};
use serde::{Deserialize, Serialize};

/// Numerical thresholds shared by the solution-facing operations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Criticality: residual norm below `res * U`.
    pub res: f64,
    /// Nullity band: eigenvalues within `null * U` of zero.
    pub null: f64,
    /// Collision guard relative to the configuration scale.
    pub col: f64,
    /// Centre-of-mass tolerance relative to the configuration scale.
    pub com: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { res: 1e-10, null: 1e-6, col: 1e-8, com: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MassVector(Vec<f64>);

impl MassVector {
    pub fn new(m: Vec<f64>) -> Result<Self> {
        if m.len() < 2 {
            return Err(SbcError::InvalidInput(format!("need at least 2 masses, got {}", m.len())));
        }
        if let Some(bad) = m.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(SbcError::InvalidInput(format!("masses must be positive, got {bad}")));
        }
        Ok(MassVector(m))
    }

    pub fn equal(n: usize) -> Result<Self> {
        Self::new(vec![1.0; n])
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

impl std::ops::Index<usize> for MassVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for MassVector {
    type Error = SbcError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        MassVector::new(v)
    }
}

impl From<MassVector> for Vec<f64> {
    fn from(m: MassVector) -> Vec<f64> {
        m.0
    }
}

/// Diagonal weights `S = diag(s_1, ..., s_d)`.
///
/// With `h1_mode` the weights must be strictly decreasing and end at 1,
/// which removes every rotational symmetry of the equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumS {
    s: Vec<f64>,
    h1_mode: bool,
}

impl SpectrumS {
    pub fn new(s: Vec<f64>, h1_mode: bool) -> Result<Self> {
        if s.is_empty() {
            return Err(SbcError::InvalidInput("empty weight list".into()));
        }
        if s.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(SbcError::InvalidInput(format!("weights must be positive: {s:?}")));
        }
        if s.windows(2).any(|w| w[0] < w[1]) {
            return Err(SbcError::InvalidInput(format!("weights must be nonincreasing: {s:?}")));
        }
        if h1_mode {
            if s.windows(2).any(|w| w[0] <= w[1]) {
                return Err(SbcError::InvalidInput(format!("h1 weights must strictly decrease: {s:?}")));
            }
            if s[s.len() - 1] != 1.0 {
                return Err(SbcError::InvalidInput(format!("h1 weights must end at 1: {s:?}")));
            }
        }
        Ok(SpectrumS { s, h1_mode })
    }

    /// Strictly decreasing weights ending at 1.
    pub fn h1(s: Vec<f64>) -> Result<Self> {
        Self::new(s, true)
    }

    /// `diag(s, 1)`.
    pub fn planar(s: f64) -> Result<Self> {
        Self::h1(vec![s, 1.0])
    }

    pub fn identity(d: usize) -> Self {
        SpectrumS { s: vec![1.0; d.max(1)], h1_mode: false }
    }

    /// Builds weights from the leading entries, appending the trailing 1.
    pub fn from_leading(leading: &[f64], h1_mode: bool) -> Result<Self> {
        let mut s = leading.to_vec();
        s.push(1.0);
        Self::new(s, h1_mode)
    }

    pub fn d(&self) -> usize {
        self.s.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.s
    }

    pub fn get(&self, k: usize) -> f64 {
        self.s[k]
    }

    pub fn h1_mode(&self) -> bool {
        self.h1_mode
    }

    pub fn is_identity(&self) -> bool {
        self.s.iter().all(|&x| x == 1.0)
    }

    /// Linear interpolation `(1 - t) a + t b`, keeping the h1 flag of both ends.
    pub fn lerp(a: &SpectrumS, b: &SpectrumS, t: f64) -> Result<SpectrumS> {
        if a.d() != b.d() {
            return Err(SbcError::InvalidInput("weight lists differ in length".into()));
        }
        let s = a.s.iter().zip(&b.s).map(|(x, y)| (1.0 - t) * x + t * y).collect();
        SpectrumS::new(s, a.h1_mode && b.h1_mode)
    }
}

/// `n` labelled points in `R^d`, stored row-major, centre of mass at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    masses: MassVector,
    d: usize,
    q: Vec<f64>,
}

impl Configuration {
    /// Builds a configuration, re-centring it explicitly.
    pub fn new(masses: MassVector, d: usize, q: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(SbcError::InvalidInput("dimension must be positive".into()));
        }
        if q.len() != masses.n() * d {
            return Err(SbcError::InvalidInput(format!("expected {} coordinates, got {}", masses.n() * d, q.len())));
        }
        if q.iter().any(|x| !x.is_finite()) {
            return Err(SbcError::InvalidInput("non-finite coordinate".into()));
        }
        let mut c = Configuration { masses, d, q };
        c.recenter();
        Ok(c)
    }

    pub fn from_rows(masses: MassVector, rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.iter().any(|r| r.len() != d) {
            return Err(SbcError::InvalidInput("ragged coordinate rows".into()));
        }
        Self::new(masses, d, rows.concat())
    }

    /// Same masses and dimension, new coordinates (re-centred).
    pub fn with_coords(&self, q: Vec<f64>) -> Result<Self> {
        Self::new(self.masses.clone(), self.d, q)
    }

    pub fn n(&self) -> usize {
        self.masses.n()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn masses(&self) -> &MassVector {
        &self.masses
    }

    pub fn coords(&self) -> &[f64] {
        &self.q
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.q[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.q.chunks(self.d).map(|c| c.to_vec()).collect()
    }

    fn recenter(&mut self) {
        let mt = self.masses.total();
        for k in 0..self.d {
            let c: f64 = (0..self.n()).map(|i| self.masses[i] * self.q[i * self.d + k]).sum::<f64>() / mt;
            for i in 0..self.n() {
                self.q[i * self.d + k] -= c;
            }
        }
    }

    /// Largest distance of a body from the origin.
    pub fn scale(&self) -> f64 {
        (0..self.n()).map(|i| self.point(i).iter().map(|x| x * x).sum::<f64>().sqrt()).fold(0.0, f64::max)
    }

    /// `max_k |Σ m_i q_ik|`.
    pub fn center_of_mass_error(&self) -> f64 {
        (0..self.d)
            .map(|k| (0..self.n()).map(|i| self.masses[i] * self.q[i * self.d + k]).sum::<f64>().abs())
            .fold(0.0, f64::max)
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.point(i).iter().zip(self.point(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    /// Distance to the collision set, measured as the minimal pair separation.
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.n() {
            for j in i + 1..self.n() {
                best = best.min(self.distance(i, j));
            }
        }
        best
    }

    pub fn collision_guard(&self, tol: &Tolerances) -> f64 {
        tol.col * self.scale()
    }

    pub fn check_collision_free(&self, tol: &Tolerances) -> Result<()> {
        let guard = self.collision_guard(tol);
        let min_sep = self.min_separation();
        if !(min_sep > guard) {
            return Err(SbcError::Collision { min_sep, guard });
        }
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> Configuration {
        Configuration { masses: self.masses.clone(), d: self.d, q: self.q.iter().map(|x| c * x).collect() }
    }

    /// Rescales to `I_S = 1`.
    pub fn normalized(&self, s: &SpectrumS) -> Configuration {
        self.scaled(1.0 / crate::potential::moment_of_inertia_s(self, s).sqrt())
    }

    /// Flips the sign of coordinate axis `k`.
    pub fn reflected(&self, k: usize) -> Configuration {
        let mut q = self.q.clone();
        for i in 0..self.n() {
            q[i * self.d + k] = -q[i * self.d + k];
        }
        Configuration { masses: self.masses.clone(), d: self.d, q }
    }

    /// `sqrt(Σ m_i |q_i - p_i|²)`.
    pub fn mass_distance(&self, other: &Configuration) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n() {
            for k in 0..self.d {
                let diff = self.q[i * self.d + k] - other.q[i * self.d + k];
                acc += self.masses[i] * diff * diff;
            }
        }
        acc.sqrt()
    }

    /// Largest `|q_ik|` over bodies, for each axis `k`.
    pub fn axis_extent(&self) -> Vec<f64> {
        (0..self.d).map(|k| (0..self.n()).map(|i| self.q[i * self.d + k].abs()).fold(0.0, f64::max)).collect()
    }

    pub fn to_document(&self, s: &SpectrumS) -> ConfigDocument {
        ConfigDocument {
            n: self.n(),
            d: self.d,
            masses: self.masses.as_slice().to_vec(),
            q: self.rows(),
            s: s.weights().to_vec(),
        }
    }
}

/// Shared JSON form of a configuration together with its weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigDocument {
    pub n: usize,
    pub d: usize,
    pub masses: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    #[serde(rename = "S")]
    pub s: Vec<f64>,
}

impl ConfigDocument {
    pub fn into_parts(self) -> Result<(Configuration, SpectrumS)> {
        if self.masses.len() != self.n || self.q.len() != self.n {
            return Err(SbcError::InvalidInput("document sizes disagree with n".into()));
        }
        if self.s.len() != self.d {
            return Err(SbcError::InvalidInput("weight list length disagrees with d".into()));
        }
        let masses = MassVector::new(self.masses)?;
        let config = Configuration::from_rows(masses, &self.q)?;
        if config.d() != self.d {
            return Err(SbcError::InvalidInput("row length disagrees with d".into()));
        }
        let h1 = SpectrumS::h1(self.s.clone()).is_ok();
        Ok((config, SpectrumS::new(self.s, h1)?))
    }
}
