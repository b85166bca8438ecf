use sbc_core::collinear::moulton_solve;
use sbc_core::equilibria::*;
use sbc_core::potential::moment_of_inertia;
use sbc_core::solver::{census, SBCSolution, SolverOptions};
use sbc_core::*;

fn planar(s: f64) -> SpectrumS {
    SpectrumS::planar(s).unwrap()
}

fn samples(count: usize, t_max: f64) -> Vec<f64> {
    (0..count).map(|k| t_max * k as f64 / (count - 1) as f64).collect()
}

fn solutions(s: f64) -> Vec<SBCSolution> {
    census(&MassVector::equal(3).unwrap(), &planar(s), 300, 5).unwrap().solutions
}

#[test]
fn lifted_census_obeys_newton() {
    let sols = solutions(4.0);
    assert!(sols.len() >= 14);
    let ts = samples(1000, 20.0);
    for sol in &sols {
        let orbit = lift(sol, 4.0).unwrap();
        assert!((orbit.omega.0 / orbit.omega.1 - 2.0).abs() < 1e-14);
        assert!(newton_residual(&orbit, &ts) < 1e-8);
        match classify_periodicity(&orbit, DEFAULT_RATIONAL_TOL, DEFAULT_MAX_DEN) {
            Periodicity::Periodic { p, q, period, closure } => {
                assert_eq!((p, q), (2, 1));
                assert!((period - std::f64::consts::TAU / orbit.omega.1).abs() < 1e-12);
                assert!(closure < 1e-6);
            }
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn rational_and_irrational_ratios() {
    let m = MassVector::equal(3).unwrap();
    let classify = |s: f64| {
        let rec = moulton_solve(&m, &[0, 1, 2], 1, &planar(s)).unwrap();
        let sol = SBCSolution::from_config(&rec.config, &planar(s), &SolverOptions::default()).unwrap();
        classify_periodicity(&lift(&sol, s).unwrap(), DEFAULT_RATIONAL_TOL, DEFAULT_MAX_DEN)
    };
    assert!(matches!(classify(2.25), Periodicity::Periodic { p: 3, q: 2, .. }));
    assert!(matches!(classify(2.0), Periodicity::QuasiPeriodic { .. }));
    assert!(matches!(classify(3.0), Periodicity::QuasiPeriodic { .. }));
    if let Periodicity::Periodic { closure, .. } = classify(2.25) {
        assert!(closure < 1e-6);
    }
}

#[test]
fn isosceles_family_is_quasi_periodic() {
    let sols = solutions(2.0);
    let iso: Vec<_> = sols.iter().filter(|s| !s.classification.is_collinear()).collect();
    assert!(!iso.is_empty());
    for sol in iso {
        let orbit = lift(sol, 2.0).unwrap();
        assert!(newton_residual(&orbit, &samples(200, 50.0)) < 1e-8);
        assert!(matches!(
            classify_periodicity(&orbit, DEFAULT_RATIONAL_TOL, DEFAULT_MAX_DEN),
            Periodicity::QuasiPeriodic { .. }
        ));
    }
}

#[test]
fn first_axis_solution_rotates_in_one_plane() {
    let s = 1.7;
    let rec = moulton_solve(&MassVector::new(vec![1.0, 2.0, 3.0]).unwrap(), &[1, 2, 0], 0, &planar(s)).unwrap();
    let sol = SBCSolution::from_config(&rec.config, &planar(s), &SolverOptions::default()).unwrap();
    let orbit = lift(&sol, s).unwrap();
    for t in samples(50, 10.0) {
        let q = orbit.position(t);
        for i in 0..3 {
            assert_eq!(&q.point(i)[2..], &[0.0, 0.0]);
        }
    }
    assert_eq!(orbit.angular_momenta(3.0).1, 0.0);
}

#[test]
fn identity_weights_give_one_frequency() {
    let c = census(&MassVector::equal(3).unwrap(), &SpectrumS::identity(2), 100, 3).unwrap();
    let tri = c.solutions.iter().find(|s| !s.classification.is_collinear()).unwrap();
    let orbit = lift(tri, 1.0).unwrap();
    assert_eq!(orbit.omega.0, orbit.omega.1);
    assert!(newton_residual(&orbit, &samples(100, 10.0)) < 1e-8);
    assert!(matches!(
        classify_periodicity(&orbit, DEFAULT_RATIONAL_TOL, DEFAULT_MAX_DEN),
        Periodicity::Periodic { p: 1, q: 1, .. }
    ));
}

#[test]
fn conserved_quantities() {
    for sol in solutions(2.0) {
        let orbit = lift(&sol, 2.0).unwrap();
        let s4 = orbit.spectrum_4d();
        let q0 = orbit.position(0.0);
        let (u0, i0, is0) = (potential(&q0).unwrap(), moment_of_inertia(&q0), moment_of_inertia_s(&q0, &s4));
        let l0 = orbit.angular_momenta(0.0);
        for t in samples(100, 30.0) {
            let q = orbit.position(t);
            assert!((potential(&q).unwrap() - u0).abs() < 1e-10 * u0);
            assert!((moment_of_inertia(&q) - i0).abs() < 1e-10);
            assert!((moment_of_inertia_s(&q, &s4) - is0).abs() < 1e-10);
            let l = orbit.angular_momenta(t);
            assert!((l.0 - l0.0).abs() < 1e-10 && (l.1 - l0.1).abs() < 1e-10);
        }
    }
}

#[test]
fn residual_is_time_shift_invariant() {
    let orbit = lift(&solutions(1.5)[0], 1.5).unwrap();
    let base = samples(50, 5.0);
    let shifted: Vec<f64> = base.iter().map(|t| t + 17.3).collect();
    let (a, b) = (newton_residual(&orbit, &base), newton_residual(&orbit, &shifted));
    assert!((a - b).abs() < 1e-12);
}

#[test]
fn non_critical_configuration_fails_newton() {
    let m = MassVector::new(vec![1.0, 2.0, 0.5]).unwrap();
    let q = Configuration::new(m, 2, vec![0.3, -0.2, -0.1, 0.5, 0.4, 0.1]).unwrap().normalized(&planar(2.0));
    let orbit = RelativeEquilibriumOrbit::from_configuration_unchecked(&q, 2.0);
    assert!(newton_residual(&orbit, &samples(100, 10.0)) > 0.1);
    let fake = SBCSolution {
        config: q.clone(),
        spectrum: planar(2.0),
        lambda: orbit.lambda,
        potential: potential(&q).unwrap(),
        residual_norm: 0.0,
        triple: InertiaTriple::new(0, 0, 3),
        classification: sbc_core::solver::Classification::FullDimensional,
        is_cc: false,
        cc_residual: 0.0,
    };
    assert!(matches!(lift(&fake, 2.0), Err(SbcError::NotCritical { .. })));
}

#[test]
fn newton_residual_tracks_sbc_residual() {
    let s = 2.0;
    let m = MassVector::equal(4).unwrap();
    let mut battery = Vec::new();
    for sol in census(&m, &planar(s), 80, 2).unwrap().solutions.iter().take(8) {
        battery.push(sol.config.clone());
        let nudged: Vec<f64> =
            sol.config.coords().iter().enumerate().map(|(k, x)| x + 1e-4 * ((k * 7) as f64).sin()).collect();
        battery.push(sol.config.with_coords(nudged).unwrap().normalized(&planar(s)));
    }
    for q in &battery {
        let res = sbc_residual(q, &planar(s)).unwrap();
        let critical = res.norm() < 1e-9 * res.potential;
        let orbit = RelativeEquilibriumOrbit::from_configuration_unchecked(q, s);
        let newton_ok = newton_residual(&orbit, &samples(50, 10.0)) < 1e-8;
        assert_eq!(critical, newton_ok);
    }
}

#[test]
fn spatial_solution_is_not_lifted() {
    let s3 = SpectrumS::h1(vec![3.0, 2.0, 1.0]).unwrap();
    let rec = moulton_solve(&MassVector::equal(3).unwrap(), &[0, 1, 2], 0, &s3).unwrap();
    let sol = SBCSolution::from_config(&rec.config, &s3, &SolverOptions::default()).unwrap();
    assert!(matches!(lift(&sol, 3.0), Err(SbcError::NotPlanar { d: 3 })));
}

#[test]
fn orbit_csv_layout() {
    let orbit = lift(&solutions(4.0)[0], 4.0).unwrap();
    let mut buf = Vec::new();
    orbit.write_csv(&samples(11, 1.0), &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 12);
    assert_eq!(text.lines().next().unwrap().split(',').count(), 13);
}
