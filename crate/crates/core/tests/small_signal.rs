mod common;

use dabsig::dab::interval_map;
use dabsig::small_signal::{
    build_half_cycle, delta_h, delta_h_dual, h_fix, h_sc, resolvent_similarity_residual, verify_surface_equivalence,
};
use dabsig::{Complex64, DabParams, DabSchedule, Matrix, Polarity, Surface, SurfaceLabel, SurfacePair, SymmetryConstants,
    Tolerances, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit_circle(n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    (0..n).map(|_| Complex64::from_polar(1.0, rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))).collect()
}

/// Rectified end state of the raw two-segment map with perturbed durations.
fn rectified_end(dab: &DabSchedule, s: Surface, x: &Vector, ta: f64, tb: f64) -> Vector {
    let ma = interval_map(dab, s.a, ta).unwrap();
    let mb = interval_map(dab, s.b, tb).unwrap();
    SymmetryConstants::d_r() * mb.apply(&ma.apply(x))
}

#[test]
fn eta_matches_central_differences() {
    let delta = 1e-9;
    for p in common::random_params(20, 11) {
        let dab = DabSchedule::build(p).unwrap();
        for label in SurfaceLabel::ALL {
            let s = Surface::new(label);
            let m = build_half_cycle(&dab, s).unwrap();
            let (ta, tb) = (dab.segment(s.a).duration, dab.segment(s.b).duration);
            let fd_a = (rectified_end(&dab, s, &m.x_star, ta + delta, tb)
                - rectified_end(&dab, s, &m.x_star, ta - delta, tb))
                / (2.0 * delta);
            let fd_b = (rectified_end(&dab, s, &m.x_star, ta, tb + delta)
                - rectified_end(&dab, s, &m.x_star, ta, tb - delta))
                / (2.0 * delta);
            assert!((&fd_a - &m.eta_a).norm() <= 1e-4 * m.eta_a.norm(), "{label} eta_a {p:?}");
            assert!((&fd_b - &m.eta_b).norm() <= 1e-4 * m.eta_b.norm(), "{label} eta_b {p:?}");
        }
    }
}

#[test]
fn timing_law_enters_with_opposite_signs() {
    let dab = DabSchedule::build(DabParams::reference()).unwrap();
    for label in SurfaceLabel::ALL {
        let m = build_half_cycle(&dab, Surface::new(label)).unwrap();
        let rk = m.surface.rho.sign() * m.kappa;
        assert!((&m.beta_minus / rk - &m.eta_a).norm() <= 1e-15 * m.eta_a.norm());
        assert!((&m.beta_plus / rk + &m.eta_b).norm() <= 1e-15 * m.eta_b.norm());
    }
}

#[test]
fn delta_h_dual_paths_and_bound() {
    let dab = DabSchedule::build(DabParams::reference()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let zs = unit_circle(100, &mut rng);
    for label in SurfaceLabel::ALL {
        let m = build_half_cycle(&dab, Surface::new(label)).unwrap();
        for &z in &zs {
            let e = delta_h_dual(&m, &dab.c_phys, z, 1e-14).unwrap();
            assert!(e.residual <= 1e-12, "{label} {z} {}", e.residual);
            assert!(e.closed_form.norm() <= e.bound * (1.0 + 1e-12));
        }
        let dh1 = delta_h(&m, &dab.c_phys, Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(dh1.norm(), 0.0);
    }
}

#[test]
fn delta_h_is_first_order_in_frequency() {
    let dab = DabSchedule::build(DabParams::reference()).unwrap();
    let m = build_half_cycle(&dab, Surface::new(SurfaceLabel::PrimaryPlus)).unwrap();
    let wth: f64 = 0.01;
    let z = Complex64::from_polar(1.0, wth);
    let dh = delta_h(&m, &dab.c_phys, z).unwrap().norm();
    let constant = dabsig::small_signal::spectral_norm(&dabsig::small_signal::to_complex_matrix(&dab.c_phys))
        * dabsig::small_signal::spectral_norm(&m.resolvent(z).unwrap())
        * m.beta_plus.norm();
    assert!(dh <= wth * constant);
    // halving ωT_h roughly halves ‖ΔH‖ once the resolvent is flat
    let small = delta_h(&m, &dab.c_phys, Complex64::from_polar(1.0, 1e-6)).unwrap().norm();
    let smaller = delta_h(&m, &dab.c_phys, Complex64::from_polar(1.0, 0.5e-6)).unwrap().norm();
    assert!((small / smaller - 2.0).abs() < 1e-3);
}

#[test]
fn fix_minus_sc_equals_closed_form_on_unit_circle() {
    let dab = DabSchedule::build(DabParams::reference()).unwrap();
    let m = build_half_cycle(&dab, Surface::new(SurfaceLabel::SecondaryMinus)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for z in unit_circle(20, &mut rng) {
        let fix = h_fix(&m, &dab.c_phys, z).unwrap();
        let sc = h_sc(&m, &dab.c_phys, z).unwrap();
        let closed = delta_h(&m, &dab.c_phys, z).unwrap();
        assert!((&fix - &sc - &closed).norm() <= 1e-12 * fix.norm());
    }
}

#[test]
fn resolvent_similarity_on_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let n = rng.gen_range(2..5);
        let t = Matrix::from_fn(n, n, |i, j| rng.gen_range(-1.0..1.0) + if i == j { 2.0 } else { 0.0 });
        let a = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let z = Complex64::from_polar(rng.gen_range(1.5..3.0), rng.gen_range(0.0..6.28));
        assert!(resolvent_similarity_residual(&t, &a, z).unwrap() <= 1e-12);
    }
}

#[test]
fn phi_similarity_holds_on_both_pairs() {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let zs = unit_circle(16, &mut rng);
    for p in common::random_params(10, 21) {
        let dab = DabSchedule::build(p).unwrap();
        for pair in [SurfacePair::Plus, SurfacePair::Minus] {
            let r = verify_surface_equivalence(&dab, pair, &zs, &tol, None).unwrap();
            assert!(r.checks[0].passed(), "{:?}", r.checks[0]);
        }
    }
}

#[test]
fn same_polarity_flips_secondary_input_vector() {
    let dab = DabSchedule::build(DabParams::reference()).unwrap();
    let s = Surface::new(SurfaceLabel::SecondaryPlus);
    let right = build_half_cycle(&dab, s).unwrap();
    let wrong = build_half_cycle(&dab, s.with_polarity_override(Polarity::Negative)).unwrap();
    let z = Complex64::from_polar(1.0, 0.3);
    assert_eq!(wrong.input_vector(z), -right.input_vector(z));

    let tol = Tolerances::default();
    let r = verify_surface_equivalence(&dab, SurfacePair::Plus, &[z], &tol, Some(Polarity::Negative)).unwrap();
    assert!(!r.checks[1].passed());
    assert_eq!(r.secondary_rho, Polarity::Negative);
}

/// P- is the D_r image of P+: Φ^(34) = D_r Φ^(12) D_r and b^(34) = D_r b^(12).
#[test]
fn opposite_half_cycle_surfaces_are_dr_conjugate() {
    let dab = DabSchedule::build(DabParams::reference()).unwrap();
    let dr = SymmetryConstants::d_r();
    let p = build_half_cycle(&dab, Surface::new(SurfaceLabel::PrimaryPlus)).unwrap();
    let q = build_half_cycle(&dab, Surface::new(SurfaceLabel::PrimaryMinus)).unwrap();
    assert!((&q.phi_ab - &dr * &p.phi_ab * &dr).norm() <= 1e-13);
    assert!((&q.x_star - &dr * &p.x_star).norm() <= 1e-10 * p.x_star.norm());
    assert!((&q.beta_minus - &dr * &p.beta_minus).norm() <= 1e-10 * p.beta_minus.norm());
    assert!((&q.beta_plus - &dr * &p.beta_plus).norm() <= 1e-10 * p.beta_plus.norm());
}
