mod common;

use common::equilateral;
use sbc_core::collinear::{enumerate_csbc, moulton_solve};
use sbc_core::solver::*;
use sbc_core::*;

fn planar(s: f64) -> SpectrumS {
    SpectrumS::planar(s).unwrap()
}

fn equal(n: usize) -> MassVector {
    MassVector::equal(n).unwrap()
}

#[test]
fn perturbed_equilateral_converges_with_identity_weights() {
    let s = SpectrumS::identity(2);
    let tri = equilateral(1.0);
    let x: Vec<f64> = tri.coords().iter().enumerate().map(|(k, v)| v + 0.01 * ((k as f64) * 1.7).sin()).collect();
    let sol = find_critical_point(&tri.with_coords(x).unwrap(), &s, &SolverOptions::default()).unwrap();
    let d01 = sol.config.distance(0, 1);
    assert!((sol.config.distance(1, 2) - d01).abs() < 1e-9 && (sol.config.distance(0, 2) - d01).abs() < 1e-9);
    assert!(sol.is_cc);
    assert_eq!(sol.triple, InertiaTriple::new(0, 1, 2));
    assert!((moment_of_inertia_s(&sol.config, &s) - 1.0).abs() < 1e-12);
}

#[test]
fn start_near_collinear_record_recovers_it() {
    let s = planar(1.5);
    let m = MassVector::new(vec![1.0, 2.0, 3.0]).unwrap();
    let rec = moulton_solve(&m, &[2, 0, 1], 1, &s).unwrap();
    let x: Vec<f64> = rec.config.coords().iter().enumerate().map(|(k, v)| v + 1e-3 * (k as f64).cos()).collect();
    let sol = find_critical_point(&rec.config.with_coords(x).unwrap(), &s, &SolverOptions::default()).unwrap();
    assert!(sol.config.mass_distance(&rec.config) < 1e-10);
    assert_eq!(sol.classification, Classification::Collinear { axis: Some(1) });
    assert_eq!(sol.triple, rec.computed);
}

#[test]
fn random_starts_reach_collinear_or_isosceles() {
    let s = planar(1.5);
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(11);
    for _ in 0..40 {
        let q0 = random_sphere_point(&equal(3), &s, &mut rng, 1e-8);
        let Ok(sol) = find_critical_point(&q0, &s, &SolverOptions::default()) else { continue };
        assert!(sol.residual_norm < 1e-10 * sol.potential);
        if !sol.classification.is_collinear() {
            let r = [sol.config.distance(0, 1), sol.config.distance(1, 2), sol.config.distance(0, 2)];
            let iso = (r[0] - r[1]).abs() < 1e-8 || (r[1] - r[2]).abs() < 1e-8 || (r[0] - r[2]).abs() < 1e-8;
            let equi = (r[0] - r[1]).abs() < 1e-8 && (r[1] - r[2]).abs() < 1e-8;
            assert!(iso && !equi, "{r:?}");
            assert!(!sol.is_cc);
        }
    }
}

#[test]
fn census_of_three_bodies() {
    let s = planar(1.5);
    let c = census(&equal(3), &s, 2000, 7).unwrap();
    assert!(c.solutions.len() >= 14);
    assert_eq!(c.collinear_count(), 12);
    let records = enumerate_csbc(&equal(3), &s).unwrap();
    for sol in c.solutions.iter().filter(|x| x.classification.is_collinear()) {
        assert!(records.iter().any(|r| r.config.mass_distance(&sol.config) < 1e-10));
    }
    for sol in &c.solutions {
        assert!(sol.residual_norm < 1e-10 * sol.potential);
        assert!((moment_of_inertia_s(&sol.config, &s) - 1.0).abs() < 1e-12);
        assert_eq!(sol.is_cc, sol.classification.is_collinear(), "{}", sol.classification.label());
        if !sol.classification.is_collinear() {
            assert!(sol.cc_residual > 1e-3);
        }
    }
    for (a, x) in c.solutions.iter().enumerate() {
        for y in &c.solutions[a + 1..] {
            assert!(x.config.mass_distance(&y.config) >= 1e-6);
        }
    }
}

#[test]
fn census_is_closed_under_reflections() {
    let c = census(&equal(3), &planar(1.5), 600, 3).unwrap();
    for sol in &c.solutions {
        for axis in 0..2 {
            let r = sol.config.reflected(axis);
            assert!(c.solutions.iter().any(|x| x.config.mass_distance(&r) < 1e-6));
        }
    }
}

#[test]
fn census_counts_grow_with_restarts() {
    let m = equal(4);
    let s = planar(1.5);
    let short = census(&m, &s, 100, 5).unwrap();
    let long = census(&m, &s, 300, 5).unwrap();
    assert!(long.solutions.len() >= short.solutions.len());
    assert_eq!(&long.solutions[..short.solutions.len()], &short.solutions[..]);
}

#[test]
fn census_does_not_depend_on_thread_count() {
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| serde_json::to_string(&census(&equal(3), &planar(1.7), 200, 9).unwrap().report()).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn identity_weights_give_rotation_orbits() {
    let c = census(&equal(3), &SpectrumS::identity(2), 400, 7).unwrap();
    assert!(c.symmetry_caveat.is_some());
    assert_eq!(c.collinear_count(), 3);
    assert_eq!(c.non_collinear_count(), 2);
    assert!(c.solutions.iter().all(|s| s.is_cc));
}

#[test]
fn report_roundtrip() {
    let c = census(&equal(3), &planar(1.5), 150, 1).unwrap();
    let json = serde_json::to_string(&c.report()).unwrap();
    let back: CensusReport = serde_json::from_str(&json).unwrap();
    let c2 = back.into_census(&SolverOptions::default()).unwrap();
    assert_eq!(c2.solutions.len(), c.solutions.len());
    for (a, b) in c.solutions.iter().zip(&c2.solutions) {
        assert_eq!(a.triple, b.triple);
        assert_eq!(a.classification, b.classification);
        assert!(a.config.mass_distance(&b.config) < 1e-15);
    }
}

fn path(from: f64, to: f64, step: f64) -> Vec<SpectrumS> {
    let k = ((to - from) / step).round() as usize;
    (0..=k).map(|i| planar(from + step * i as f64)).collect()
}

#[test]
fn minimum_persists_under_continuation() {
    let c = census(&equal(3), &planar(1.2), 300, 2).unwrap();
    let min = c.solutions.iter().find(|s| s.triple.index == 0).unwrap();
    let out = continue_in_s(min, &path(1.2, 2.3, 0.1), &ContinuationOptions::default()).unwrap();
    assert!(out.degeneracy.is_none());
    assert_eq!(out.branch.len(), 12);
    for w in out.branch.windows(2) {
        assert_eq!(w[1].triple.index, 0);
        assert!(!w[1].classification.is_collinear());
        assert!(w[0].config.mass_distance(&w[1].config) < 0.1);
    }
    assert!((out.branch.last().unwrap().spectrum.get(0) - 2.3).abs() < 1e-12);
}

fn second_axis_start(s: f64) -> SBCSolution {
    let rec = moulton_solve(&equal(3), &[0, 1, 2], 1, &planar(s)).unwrap();
    SBCSolution::from_config(&rec.config, &planar(s), &SolverOptions::default()).unwrap()
}

#[test]
fn second_axis_degeneracy_bracketed_by_continuation() {
    let sol = second_axis_start(2.05);
    assert_eq!(sol.triple, InertiaTriple::new(1, 0, 2));
    let out = continue_in_s(&sol, &path(2.05, 3.05, 0.1), &ContinuationOptions::default()).unwrap();
    let deg = out.degeneracy.expect("degeneracy");
    assert!((deg.spectrum.get(0) - 2.4).abs() < 1e-4, "{}", deg.spectrum.get(0));
    assert_eq!(deg.solution.triple.nullity, 1);
    assert_eq!(deg.before, InertiaTriple::new(1, 0, 2));
    assert_eq!(deg.after, Some(InertiaTriple::new(0, 0, 3)));
    assert_eq!(out.branch.len(), 4);
}

#[test]
fn second_axis_degeneracy_hit_on_a_path_point() {
    let out = continue_in_s(&second_axis_start(2.0), &path(2.0, 3.0, 0.1), &ContinuationOptions::default()).unwrap();
    let deg = out.degeneracy.expect("degeneracy");
    assert!((deg.spectrum.get(0) - 2.4).abs() < 1e-12);
    assert_eq!(deg.solution.triple, InertiaTriple::new(0, 1, 2));
}

#[test]
fn constant_path_returns_copies() {
    let c = census(&equal(3), &planar(1.5), 50, 4).unwrap();
    let sol = &c.solutions[0];
    let out = continue_in_s(sol, &vec![planar(1.5); 3], &ContinuationOptions::default()).unwrap();
    assert_eq!(out.branch.len(), 3);
    for b in &out.branch {
        assert!(b.config.mass_distance(&sol.config) < 1e-14);
        assert_eq!(b.triple, sol.triple);
    }
}

#[test]
fn degenerate_start_is_rejected() {
    let rec = moulton_solve(&equal(3), &[0, 1, 2], 1, &planar(2.4)).unwrap();
    let sol = SBCSolution::from_config(&rec.config, &planar(2.4), &SolverOptions::default()).unwrap();
    assert_eq!(sol.triple.nullity, 1);
    assert!(continue_in_s(&sol, &[planar(2.5)], &ContinuationOptions::default()).is_err());
}

#[test]
fn classification_of_spatial_configurations() {
    let m = equal(4);
    let q =
        Configuration::new(m.clone(), 3, vec![1.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
    assert_eq!(classify(&q, 1e-8), Classification::FullDimensional);
    let q =
        Configuration::new(m.clone(), 3, vec![1.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, -1.0]).unwrap();
    assert_eq!(classify(&q, 1e-8), Classification::Planar { axes: Some((0, 2)) });
    let q = Configuration::new(m, 3, vec![1.0, 1.0, 0.0, -1.0, -1.0, 0.0, 2.0, 2.0, 0.0, 3.0, 3.0, 0.0]).unwrap();
    assert_eq!(classify(&q, 1e-8), Classification::Collinear { axis: None });
}
