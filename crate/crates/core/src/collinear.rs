//! Collinear S-balanced configurations on the coordinate axes.

use crate::config::{Configuration, MassVector, SpectrumS, Tolerances};
use crate::error::{Result, SbcError};
use crate::inertia::{inertia_indices, sorted_symmetric_eigen, InertiaTriple};
use crate::potential::{potential_unchecked, sbc_residual};
use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Non-trivial eigenvalues of `M⁻¹B(q̂)` at a collinear central configuration.
///
/// `eta` is strictly decreasing and lies below `-u_hat`; the simple
/// eigenvalues `0` and `-U(q̂)` are not stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    pub eta: Vec<f64>,
    pub alpha: Vec<usize>,
    pub u_hat: f64,
}

impl SpectralData {
    /// Critical weights `-η_j / U(q̂)`, increasing.
    pub fn thresholds(&self) -> Vec<f64> {
        self.eta.iter().map(|e| -e / self.u_hat).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CSBCRecord {
    /// `ordering[p]` is the body at position `p` counted along the positive axis.
    pub ordering: Vec<usize>,
    pub axis: usize,
    /// Weight `s_axis`; the central configuration is `sqrt(s_axis) * config`.
    pub weight: f64,
    pub config: Configuration,
    pub spectral: SpectralData,
    /// `None` where no closed-form rule is available (`d > 2`, axis other than the first).
    pub predicted: Option<InertiaTriple>,
    pub computed: InertiaTriple,
    pub potential: f64,
    pub lambda: f64,
    pub residual_norm: f64,
}

impl CSBCRecord {
    /// The rescaled central configuration `q̂ = sqrt(s_axis) q`.
    pub fn ccc(&self) -> Configuration {
        self.config.scaled(self.weight.sqrt())
    }
}

fn check_ordering(ordering: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if ordering.len() != n {
        return Err(SbcError::InvalidInput(format!("ordering has {} entries, expected {n}", ordering.len())));
    }
    for &b in ordering {
        if b >= n || seen[b] {
            return Err(SbcError::InvalidInput(format!("not a permutation: {ordering:?}")));
        }
        seen[b] = true;
    }
    Ok(())
}

fn positions(gaps: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0];
    for g in gaps {
        x.push(x[x.len() - 1] + g);
    }
    x
}

/// Gap equations `a_{p+1} - a_p + g_p = 0` (central configuration with `λ = 1`) and their Jacobian.
fn gap_system(mu: &[f64], gaps: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    let n = mu.len();
    let x = positions(gaps);
    let mut acc = vec![0.0; n];
    let mut dacc = DMatrix::<f64>::zeros(n, n - 1);
    for p in 0..n {
        for r in 0..n {
            if r == p {
                continue;
            }
            let dist = (x[r] - x[p]).abs();
            let sign = (x[r] - x[p]).signum();
            acc[p] += mu[r] * sign / (dist * dist);
            let deriv = -2.0 * mu[r] * sign / (dist * dist * dist);
            for k in p.min(r)..p.max(r) {
                dacc[(p, k)] += deriv;
            }
        }
    }
    let mut f = DVector::zeros(n - 1);
    let mut jac = DMatrix::<f64>::zeros(n - 1, n - 1);
    for p in 0..n - 1 {
        f[p] = acc[p + 1] - acc[p] + gaps[p];
        for k in 0..n - 1 {
            jac[(p, k)] = dacc[(p + 1, k)] - dacc[(p, k)];
        }
        jac[(p, p)] += 1.0;
    }
    (f, jac)
}

/// Gaps of the collinear central configuration with `λ = 1` for masses listed along the line.
fn moulton_gaps(mu: &[f64]) -> Result<Vec<f64>> {
    let n = mu.len();
    let unit = positions(&vec![1.0; n - 1]);
    let mt: f64 = mu.iter().sum();
    let c: f64 = mu.iter().zip(&unit).map(|(m, x)| m * x).sum::<f64>() / mt;
    let i1: f64 = mu.iter().zip(&unit).map(|(m, x)| m * (x - c) * (x - c)).sum();
    let mut u1 = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            u1 += mu[a] * mu[b] / (unit[b] - unit[a]);
        }
    }
    let mut gaps = vec![(u1 / i1).cbrt(); n - 1];
    let (mut f, mut jac) = gap_system(mu, &gaps);
    for _ in 0..200 {
        let fnorm = f.amax();
        if fnorm < 1e-13 {
            return Ok(gaps);
        }
        let step =
            jac.clone().lu().solve(&(-&f)).ok_or_else(|| SbcError::NoConvergence("singular gap Jacobian".into()))?;
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = gaps.iter().zip(step.iter()).map(|(g, s)| g + t * s).collect();
            if trial.iter().all(|&g| g > 0.0) {
                let (ft, jt) = gap_system(mu, &trial);
                if ft.amax() < fnorm || t < 1e-3 {
                    gaps = trial;
                    f = ft;
                    jac = jt;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(SbcError::NoConvergence(format!("line search failed at residual {fnorm:.3e}")));
            }
        }
    }
    Err(SbcError::NoConvergence(format!("gap residual {:.3e} after 200 iterations", f.amax())))
}

/// Collinear configuration on `axis` for the given ordering, normalized to `I_S = 1`.
fn collinear_configuration(
    masses: &MassVector,
    ordering: &[usize],
    axis: usize,
    s: &SpectrumS,
) -> Result<Configuration> {
    let n = masses.n();
    let d = s.d();
    let mu: Vec<f64> = ordering.iter().map(|&b| masses[b]).collect();
    let x = positions(&moulton_gaps(&mu)?);
    let mut q = vec![0.0; n * d];
    for (p, &b) in ordering.iter().enumerate() {
        q[b * d + axis] = x[p];
    }
    let hat = Configuration::new(masses.clone(), d, q)?;
    let hat = hat.scaled(1.0 / crate::potential::moment_of_inertia(&hat).sqrt());
    Ok(hat.scaled(1.0 / s.get(axis).sqrt()))
}

/// Solves for the collinear S-balanced configuration on `axis` with bodies in `ordering` (0-based).
pub fn moulton_solve(masses: &MassVector, ordering: &[usize], axis: usize, s: &SpectrumS) -> Result<CSBCRecord> {
    moulton_solve_with(masses, ordering, axis, s, &Tolerances::default())
}

pub fn moulton_solve_with(
    masses: &MassVector,
    ordering: &[usize],
    axis: usize,
    s: &SpectrumS,
    tol: &Tolerances,
) -> Result<CSBCRecord> {
    if !s.h1_mode() {
        return Err(SbcError::InvalidInput("collinear solve requires strictly decreasing weights".into()));
    }
    check_ordering(ordering, masses.n())?;
    if axis >= s.d() {
        return Err(SbcError::InvalidInput(format!("axis {axis} out of range for d = {}", s.d())));
    }
    let config = collinear_configuration(masses, ordering, axis, s)?;
    let res = sbc_residual(&config, s)?;
    let spectral = spectrum_of_ccc(&config.scaled(s.get(axis).sqrt()))?;
    let predicted = match predicted_indices_with(&spectral, s, axis, masses.n(), tol.null) {
        Ok(t) => Some(t),
        Err(SbcError::UnsupportedCase(_)) => None,
        Err(e) => return Err(e),
    };
    let computed = inertia_indices(&config, s, tol.null)?;
    Ok(CSBCRecord {
        ordering: ordering.to_vec(),
        axis,
        weight: s.get(axis),
        config,
        spectral,
        predicted,
        computed,
        potential: res.potential,
        lambda: res.lambda,
        residual_norm: res.norm(),
    })
}

/// The axis carrying a collinear configuration, after checking every other coordinate vanishes.
pub fn collinear_axis(q: &Configuration) -> Result<usize> {
    let ext = q.axis_extent();
    let axis = (0..q.d()).max_by(|&a, &b| ext[a].total_cmp(&ext[b])).unwrap_or(0);
    let offset = (0..q.d()).filter(|&k| k != axis).map(|k| ext[k]).fold(0.0, f64::max);
    if offset >= 1e-12 * q.scale().max(1e-300) {
        return Err(SbcError::NotCollinear { offset });
    }
    Ok(axis)
}

/// `B(q)` with `b_ij = m_i m_j / r_ij³` and zero row sums.
pub fn b_matrix(q: &Configuration) -> Result<DMatrix<f64>> {
    collinear_axis(q)?;
    q.check_collision_free(&Tolerances::default())?;
    let n = q.n();
    let m = q.masses();
    let mut b = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let r = q.distance(i, j);
            let v = m[i] * m[j] / (r * r * r);
            b[(i, j)] = v;
            b[(j, i)] = v;
            b[(i, i)] -= v;
            b[(j, j)] -= v;
        }
    }
    Ok(b)
}

/// Eigenvalues of `M⁻¹B(q)`, ascending, via the symmetric form `M^{-1/2} B M^{-1/2}`.
pub fn mb_eigenvalues(q: &Configuration) -> Result<Vec<f64>> {
    let b = b_matrix(q)?;
    let m = q.masses();
    let sym = DMatrix::from_fn(q.n(), q.n(), |i, j| b[(i, j)] / (m[i] * m[j]).sqrt());
    Ok(sorted_symmetric_eigen(&sym).0)
}

fn spectrum_of_ccc(hat: &Configuration) -> Result<SpectralData> {
    let u_hat = potential_unchecked(hat);
    let group_tol = 1e-8 * u_hat;
    let mut eig = mb_eigenvalues(hat)?;
    for (target, name) in [(0.0, "0"), (-u_hat, "-U")] {
        let pos = eig
            .iter()
            .position(|e| (e - target).abs() < group_tol)
            .ok_or_else(|| SbcError::SpectrumAnomaly(format!("eigenvalue {name} missing from {eig:?}")))?;
        eig.remove(pos);
    }
    eig.reverse();
    let mut eta: Vec<f64> = Vec::new();
    let mut alpha: Vec<usize> = Vec::new();
    for e in eig {
        if !(e < -u_hat - group_tol) {
            return Err(SbcError::SpectrumAnomaly(format!("eigenvalue {e} not below -U = {}", -u_hat)));
        }
        match eta.last() {
            Some(&last) if (last - e).abs() < group_tol => *alpha.last_mut().unwrap() += 1,
            _ => {
                eta.push(e);
                alpha.push(1);
            }
        }
    }
    Ok(SpectralData { eta, alpha, u_hat })
}

/// Spectrum of `M⁻¹B` at the central configuration `sqrt(s_axis) q` underlying a record.
pub fn ccc_spectrum(record: &CSBCRecord) -> Result<SpectralData> {
    spectrum_of_ccc(&record.ccc())
}

/// Inertia triple predicted by the spectral rules.
pub fn predicted_indices(spectral: &SpectralData, s: &SpectrumS, axis: usize, n: usize) -> Result<InertiaTriple> {
    predicted_indices_with(spectral, s, axis, n, Tolerances::default().null)
}

/// On the first axis the index is `(d-1)(n-1)` for every weight choice.
/// For `d = 2` on the second axis the triple depends on where `s_1 U(q̂)`
/// falls among the values `-η_j`; equality (within `null_tol`) is degenerate.
pub fn predicted_indices_with(
    spectral: &SpectralData,
    s: &SpectrumS,
    axis: usize,
    n: usize,
    null_tol: f64,
) -> Result<InertiaTriple> {
    let d = s.d();
    if axis == 0 {
        return Ok(InertiaTriple::new((d - 1) * (n - 1), 0, n - 2));
    }
    if d != 2 || axis != 1 {
        return Err(SbcError::UnsupportedCase(format!("no closed-form index rule for axis {} with d = {d}", axis + 1)));
    }
    let s1 = s.get(0);
    let x = s1 * spectral.u_hat;
    let band = null_tol * spectral.u_hat * s1;
    let (mut index, mut nullity, mut above) = (0, 0, 0);
    for (eta, alpha) in spectral.eta.iter().zip(&spectral.alpha) {
        let gap = x + eta;
        if gap.abs() <= band {
            nullity += alpha;
        } else if gap < 0.0 {
            index += alpha;
        } else {
            above += alpha;
        }
    }
    Ok(InertiaTriple::new(index, nullity, n - 1 + above))
}

fn orderings(n: usize) -> Vec<Vec<usize>> {
    (0..n).permutations(n).collect()
}

/// All `d · n!` collinear configurations, sorted by ordering then axis.
pub fn enumerate_csbc(masses: &MassVector, s: &SpectrumS) -> Result<Vec<CSBCRecord>> {
    enumerate_csbc_with(masses, s, &Tolerances::default())
}

pub fn enumerate_csbc_with(masses: &MassVector, s: &SpectrumS, tol: &Tolerances) -> Result<Vec<CSBCRecord>> {
    let jobs: Vec<(Vec<usize>, usize)> =
        orderings(masses.n()).into_iter().flat_map(|o| (0..s.d()).map(move |a| (o.clone(), a))).collect();
    jobs.into_par_iter()
        .map(|(o, a)| {
            moulton_solve_with(masses, &o, a, s, tol).map_err(|e| match e {
                SbcError::NoConvergence(msg) => SbcError::NoConvergence(format!("ordering {o:?}, axis {a}: {msg}")),
                other => other,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingThresholds {
    pub ordering: Vec<usize>,
    pub thresholds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyThresholds {
    pub per_ordering: Vec<OrderingThresholds>,
    pub min: f64,
    pub max: f64,
}

/// Critical values of `s_1` for the second-axis configurations, per ordering.
pub fn degeneracy_thresholds(masses: &MassVector) -> Result<DegeneracyThresholds> {
    let n = masses.n();
    if n < 3 {
        return Err(SbcError::InvalidInput("thresholds need at least 3 bodies".into()));
    }
    let per_ordering: Vec<OrderingThresholds> = orderings(n)
        .into_par_iter()
        .map(|o| {
            let mu: Vec<f64> = o.iter().map(|&b| masses[b]).collect();
            let x = positions(&moulton_gaps(&mu)?);
            let mut q = vec![0.0; n];
            for (p, &b) in o.iter().enumerate() {
                q[b] = x[p];
            }
            let hat = Configuration::new(masses.clone(), 1, q)?;
            let hat = hat.scaled(1.0 / crate::potential::moment_of_inertia(&hat).sqrt());
            Ok(OrderingThresholds { ordering: o, thresholds: spectrum_of_ccc(&hat)?.thresholds() })
        })
        .collect::<Result<_>>()?;
    let all = per_ordering.iter().flat_map(|o| o.thresholds.iter().copied());
    let (min, max) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| (lo.min(t), hi.max(t)));
    Ok(DegeneracyThresholds { per_ordering, min, max })
}

fn join<T: ToString>(v: impl IntoIterator<Item = T>) -> String {
    v.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn triple_str(t: &Option<InertiaTriple>) -> String {
    t.map(|t| format!("{};{};{}", t.index, t.nullity, t.coindex)).unwrap_or_default()
}

/// CSV rows: ordering (1-based), axis (1-based), positions, U, λ, η list, predicted and computed triples.
pub fn write_records_csv<W: std::io::Write>(records: &[CSBCRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["ordering", "axis", "positions", "U", "lambda", "eta", "predicted", "computed"])?;
    for r in records {
        let pos: Vec<f64> = (0..r.config.n()).map(|i| r.config.point(i)[r.axis]).collect();
        w.write_record([
            join(r.ordering.iter().map(|b| b + 1)),
            (r.axis + 1).to_string(),
            join(pos),
            r.potential.to_string(),
            r.lambda.to_string(),
            join(&r.spectral.eta),
            triple_str(&r.predicted),
            triple_str(&Some(r.computed)),
        ])?;
    }
    w.flush()?;
    Ok(())
}
