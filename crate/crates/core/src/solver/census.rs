use super::search::{search, Classification, FailureCause, SBCSolution, SolverOptions};
use crate::collinear::enumerate_csbc_with;
use crate::config::{Configuration, MassVector, SpectrumS};
use crate::error::{Result, SbcError};
use crate::inertia::{sorted_symmetric_eigen, tangent_hessian, InertiaTriple};
use crate::potential::{moment_of_inertia_s, potential_unchecked, sbc_residual_unchecked};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CensusOptions {
    pub solver: SolverOptions,
    /// Solutions closer than this in the mass norm are identified.
    pub dedup_tol: f64,
    /// Also start searches along the negative eigendirections of every collinear solution.
    pub saddle_follow: bool,
}

impl Default for CensusOptions {
    fn default() -> Self {
        CensusOptions { solver: SolverOptions::default(), dedup_tol: 1e-6, saddle_follow: false }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureTally {
    pub collision: usize,
    pub max_iter: usize,
    pub stalled: usize,
}

impl FailureTally {
    fn add(&mut self, cause: FailureCause) {
        match cause {
            FailureCause::Collision => self.collision += 1,
            FailureCause::MaxIter => self.max_iter += 1,
            FailureCause::Stalled => self.stalled += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.collision + self.max_iter + self.stalled
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Census {
    pub masses: MassVector,
    pub spectrum: SpectrumS,
    pub restarts: usize,
    pub seed: u64,
    /// Distinct solutions in the order they were first found.
    pub solutions: Vec<SBCSolution>,
    pub failures: FailureTally,
    pub saddle_seeds: usize,
    /// Set when the weights leave a continuous symmetry that the count does not fully quotient.
    pub symmetry_caveat: Option<String>,
}

impl Census {
    pub fn collinear_count(&self) -> usize {
        self.solutions.iter().filter(|s| s.classification.is_collinear()).count()
    }

    pub fn non_collinear_count(&self) -> usize {
        self.solutions.len() - self.collinear_count()
    }

    /// Number of solutions of each Morse index, indexed by index.
    pub fn morse_counts(&self) -> Vec<usize> {
        let mut gamma = Vec::new();
        for s in &self.solutions {
            if gamma.len() <= s.triple.index {
                gamma.resize(s.triple.index + 1, 0);
            }
            gamma[s.triple.index] += 1;
        }
        gamma
    }
}

/// Uniform point on the sphere `I_S = 1` (Gaussian coordinates, centred, rescaled).
pub fn random_sphere_point(masses: &MassVector, s: &SpectrumS, rng: &mut ChaCha8Rng, guard: f64) -> Configuration {
    let d = s.d();
    loop {
        let x: Vec<f64> = (0..masses.n() * d).map(|_| StandardNormal.sample(&mut *rng)).collect();
        let Ok(q) = Configuration::new(masses.clone(), d, x) else { continue };
        let q = q.normalized(s);
        if q.min_separation() > 10.0 * guard * q.scale() {
            return q;
        }
    }
}

/// Does `S` commute with every rotation of the `(e1, e2)` plane (`d = 2`, equal weights)?
fn planar_rotation_symmetric(s: &SpectrumS) -> bool {
    s.d() == 2 && s.get(0) == s.get(1)
}

/// Mass-norm distance after the best rotation of `q` in the plane.
pub fn rotation_distance(q: &Configuration, p: &Configuration) -> f64 {
    let m = q.masses();
    let (mut cross, mut dot) = (0.0, 0.0);
    for i in 0..q.n() {
        let (a, b) = (q.point(i), p.point(i));
        cross += m[i] * (a[0] * b[1] - a[1] * b[0]);
        dot += m[i] * (a[0] * b[0] + a[1] * b[1]);
    }
    let th = cross.atan2(dot);
    let (sn, cs) = th.sin_cos();
    let rotated: Vec<f64> = (0..q.n())
        .flat_map(|i| {
            let a = q.point(i);
            [cs * a[0] - sn * a[1], sn * a[0] + cs * a[1]]
        })
        .collect();
    q.with_coords(rotated).map(|r| r.mass_distance(p)).unwrap_or(f64::INFINITY)
}

/// Runs `restarts` searches from random sphere points and collects the distinct solutions.
///
/// Restart `i` draws its start from a generator seeded with `seed ^ i`, so
/// results do not depend on the thread count and a longer run extends a
/// shorter one.
pub fn census(masses: &MassVector, s: &SpectrumS, restarts: usize, seed: u64) -> Result<Census> {
    census_with(masses, s, restarts, seed, &CensusOptions::default())
}

pub fn census_with(
    masses: &MassVector,
    s: &SpectrumS,
    restarts: usize,
    seed: u64,
    opts: &CensusOptions,
) -> Result<Census> {
    let solver = opts.solver;
    let mut starts: Vec<Configuration> = (0..restarts)
        .into_par_iter()
        .map(|i| random_sphere_point(masses, s, &mut ChaCha8Rng::seed_from_u64(seed ^ i as u64), solver.tol.col))
        .collect();
    let mut saddle_seeds = 0;
    if opts.saddle_follow && s.h1_mode() {
        let extra = saddle_starts(masses, s, &solver)?;
        saddle_seeds = extra.len();
        starts.extend(extra);
    }
    let outcomes: Vec<Result<std::result::Result<Configuration, _>>> =
        starts.par_iter().map(|q0| search(q0, s, &solver)).collect();
    let rotations = planar_rotation_symmetric(s);
    let mut solutions: Vec<SBCSolution> = Vec::new();
    let mut failures = FailureTally::default();
    for outcome in outcomes {
        match outcome? {
            Err(f) => failures.add(f.cause),
            Ok(q) => {
                let dup = solutions.iter().any(|old| {
                    let dist =
                        if rotations { rotation_distance(&q, &old.config) } else { q.mass_distance(&old.config) };
                    dist < opts.dedup_tol
                });
                if !dup {
                    solutions.push(SBCSolution::from_config(&q, s, &solver)?);
                }
            }
        }
    }
    let symmetry_caveat = if rotations {
        Some("weights are rotation invariant in the plane: solutions are counted once per rotation orbit (reflections remain distinct)".into())
    } else if !s.h1_mode() {
        Some(
            "weights have repeated values: solutions come in continuous families and the count is not a quotient"
                .into(),
        )
    } else {
        None
    };
    Ok(Census {
        masses: masses.clone(),
        spectrum: s.clone(),
        restarts,
        seed,
        solutions,
        failures,
        saddle_seeds,
        symmetry_caveat,
    })
}

/// Starting points obtained by leaving each collinear solution along its unstable directions
/// and descending `U` until the gradient is small.
fn saddle_starts(masses: &MassVector, s: &SpectrumS, opts: &SolverOptions) -> Result<Vec<Configuration>> {
    let records = enumerate_csbc_with(masses, s, &opts.tol)?;
    let mut starts = Vec::new();
    for r in records {
        let h = tangent_hessian(&r.config, s)?;
        let (vals, vecs) = sorted_symmetric_eigen(&h.matrix);
        for (k, mu) in vals.iter().enumerate() {
            if *mu >= -opts.tol.null * h.potential {
                continue;
            }
            let v: DVector<f64> = h.lift(&vecs.column(k).into_owned());
            for sign in [1.0, -1.0] {
                let x: Vec<f64> = r.config.coords().iter().zip(v.iter()).map(|(a, b)| a + sign * 0.05 * b).collect();
                if let Some(q) = descend(&r.config.with_coords(x)?.normalized(s), s, opts, 300) {
                    starts.push(q);
                }
            }
        }
    }
    Ok(starts)
}

/// Riemannian steepest descent of `U` on the sphere with Armijo backtracking.
fn descend(q0: &Configuration, s: &SpectrumS, opts: &SolverOptions, steps: usize) -> Option<Configuration> {
    let d = s.d();
    let mut q = q0.clone();
    let mut u = potential_unchecked(&q);
    for _ in 0..steps {
        let r = sbc_residual_unchecked(&q, s);
        let g: Vec<f64> = (0..q.n() * d).map(|idx| r.residual[idx] / (q.masses()[idx / d] * s.get(idx % d))).collect();
        let g2: f64 = g.iter().zip(&r.residual).map(|(a, b)| a * b).sum();
        if g2.sqrt() < 1e-3 * u {
            break;
        }
        let mut t = 0.1 / g2.sqrt().max(1e-300);
        let mut moved = false;
        for _ in 0..30 {
            let x: Vec<f64> = q.coords().iter().zip(&g).map(|(a, b)| a - t * b).collect();
            if let Ok(p) = q.with_coords(x) {
                let p = p.scaled(1.0 / moment_of_inertia_s(&p, s).sqrt());
                if p.check_collision_free(&opts.tol).is_ok() {
                    let up = potential_unchecked(&p);
                    if up < u - 1e-4 * t * g2 {
                        q = p;
                        u = up;
                        moved = true;
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Some(q)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub id: usize,
    pub q: Vec<Vec<f64>>,
    pub lambda: f64,
    pub potential: f64,
    pub residual_norm: f64,
    pub triple: InertiaTriple,
    pub classification: Classification,
    pub is_cc: bool,
    pub cc_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusSummary {
    pub distinct: usize,
    pub collinear: usize,
    pub non_collinear: usize,
    /// Number of solutions of Morse index 0, 1, 2, ...
    pub morse_counts: Vec<usize>,
}

/// JSON form of a census.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusReport {
    pub n: usize,
    pub d: usize,
    pub masses: Vec<f64>,
    #[serde(rename = "S")]
    pub s: Vec<f64>,
    pub h1_mode: bool,
    pub restarts: usize,
    pub seed: u64,
    pub saddle_seeds: usize,
    pub summary: CensusSummary,
    pub failures: FailureTally,
    pub symmetry_caveat: Option<String>,
    pub solutions: Vec<SolutionRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

impl Census {
    pub fn report(&self) -> CensusReport {
        CensusReport {
            n: self.masses.n(),
            d: self.spectrum.d(),
            masses: self.masses.as_slice().to_vec(),
            s: self.spectrum.weights().to_vec(),
            h1_mode: self.spectrum.h1_mode(),
            restarts: self.restarts,
            seed: self.seed,
            saddle_seeds: self.saddle_seeds,
            summary: CensusSummary {
                distinct: self.solutions.len(),
                collinear: self.collinear_count(),
                non_collinear: self.non_collinear_count(),
                morse_counts: self.morse_counts(),
            },
            failures: self.failures,
            symmetry_caveat: self.symmetry_caveat.clone(),
            solutions: self
                .solutions
                .iter()
                .enumerate()
                .map(|(id, s)| SolutionRecord {
                    id,
                    q: s.config.rows(),
                    lambda: s.lambda,
                    potential: s.potential,
                    residual_norm: s.residual_norm,
                    triple: s.triple,
                    classification: s.classification,
                    is_cc: s.is_cc,
                    cc_residual: s.cc_residual,
                })
                .collect(),
            wall_clock_seconds: None,
        }
    }
}

impl CensusReport {
    /// Rebuilds the census, re-verifying every stored solution.
    pub fn into_census(self, opts: &SolverOptions) -> Result<Census> {
        let masses = MassVector::new(self.masses)?;
        let spectrum = SpectrumS::new(self.s, self.h1_mode)?;
        if spectrum.d() != self.d || masses.n() != self.n {
            return Err(SbcError::InvalidInput("census report sizes are inconsistent".into()));
        }
        let solutions = self
            .solutions
            .iter()
            .map(|r| {
                let q = Configuration::from_rows(masses.clone(), &r.q)?;
                SBCSolution::from_config(&q, &spectrum, opts)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Census {
            masses,
            spectrum,
            restarts: self.restarts,
            seed: self.seed,
            solutions,
            failures: self.failures,
            saddle_seeds: self.saddle_seeds,
            symmetry_caveat: self.symmetry_caveat,
        })
    }
}
