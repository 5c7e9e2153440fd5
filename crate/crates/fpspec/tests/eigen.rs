use fpspec::basis_eta::{basis_eta, weight};
use fpspec::eigen::{
    constraint_b, default_phi, linear_fit, logspace_desc, make_phi, oracle_mu, scan, solve_mu, solve_penalized, SolveOptions,
    NYSTROM_DX,
};
use fpspec::make_params;
use num_complex::Complex64 as C64;

/// Re mu(1e-3) at beta = 3 from the Richardson-extrapolated finite-difference oracle (n = 4000, 8000).
const MU_BETA3_ETA1E3: f64 = 3.730_015_68e-5;

#[test]
fn agrees_with_the_finite_difference_oracle() {
    let p = make_params(3.0).unwrap();
    let r = solve_mu(1e-3, &p, &default_phi(&p).unwrap(), SolveOptions { with_oracle: true, ..Default::default() }).unwrap();
    assert!(r.rel_gap.unwrap() <= 1e-6, "{:?}", r.rel_gap);
    assert!((r.mu.re / MU_BETA3_ETA1E3 - 1.0).abs() < 1e-6, "{}", r.mu);
    assert!(r.mu.im.abs() <= 1e-10 * r.mu.re);
    assert!(r.eigen_defect < 1e-6, "{}", r.eigen_defect);
    assert!(r.b_residual <= p.tol.root * p.m_norm_sq());
}

#[test]
fn oracle_refinement_is_consistent() {
    let p = make_params(3.0).unwrap();
    let o = oracle_mu(1e-3, &p, 120.0, 4000).unwrap();
    assert!((o.mu.re / MU_BETA3_ETA1E3 - 1.0).abs() < 1e-7);
    assert!((o.coarse - o.fine).norm() < 1e-3 * o.mu.norm());
    assert!(o.separation >= 10.0);
    assert!(oracle_mu(1e-3, &p, 120.0, 100).is_err());
}

#[test]
fn negative_eta_gives_the_conjugate() {
    let p = make_params(3.0).unwrap();
    let plus = oracle_mu(1e-3, &p, 120.0, 4000).unwrap().mu;
    let minus = oracle_mu(-1e-3, &p, 120.0, 4000).unwrap().mu;
    assert!((plus - minus.conj()).norm() <= 1e-8 * plus.norm());
    let phi = default_phi(&p).unwrap();
    let a = solve_mu(2e-3, &p, &phi, SolveOptions::default()).unwrap();
    let b = solve_mu(-2e-3, &p, &phi, SolveOptions::default()).unwrap();
    assert_eq!(a.mu, b.mu.conj());
}

#[test]
fn eigenfunction_approaches_the_equilibrium() {
    let p = make_params(3.0).unwrap();
    let phi = default_phi(&p).unwrap();
    let gaps: Vec<f64> = [1e-2, 1e-3, 1e-4].iter().map(|&e| solve_mu(e, &p, &phi, SolveOptions::default()).unwrap().l2_gap).collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
    assert!(gaps[2] <= 0.05, "{gaps:?}");
}

#[test]
fn penalty_choice_does_not_move_the_eigenvalue() {
    let p = make_params(3.0).unwrap();
    let w = weight(&p, C64::new(0.0, 0.0), 0.0, 1.0).unwrap();
    let a = solve_mu(1e-3, &p, &make_phi(&p, &w, 1.0, 3.0).unwrap(), SolveOptions::default()).unwrap().mu;
    let b = solve_mu(1e-3, &p, &make_phi(&p, &w, 2.0, 6.0).unwrap(), SolveOptions::default()).unwrap().mu;
    assert!((a - b).norm() <= 5e-3 * a.norm(), "{a} vs {b}");
    assert!(make_phi(&p, &w, 1.0, 50.0).is_err());
}

#[test]
fn penalized_solution_reproduces_its_penalty_weight() {
    let p = make_params(3.0).unwrap();
    let phi = default_phi(&p).unwrap();
    let lam = C64::new(0.0373, 0.0);
    let b = basis_eta(&p, lam, 1e-3).unwrap();
    let sol = solve_penalized(&p, &b, &phi, NYSTROM_DX).unwrap();
    let k = constraint_b(&sol, &p);
    assert!((k.value - k.from_penalty).norm() <= 1e-6 * (1.0 + k.value.norm()), "{} vs {}", k.value, k.from_penalty);
    assert!(sol.residual < 1e-6);
}

#[test]
fn scan_results_do_not_depend_on_threads() {
    let p = make_params(4.0).unwrap();
    let phi = default_phi(&p).unwrap();
    let etas = [1e-2, 3e-3, 1e-3];
    let a = scan(&etas, &p, &phi, 1, false).unwrap();
    let b = scan(&etas, &p, &phi, 3, false).unwrap();
    for (x, y) in a.points.iter().zip(&b.points) {
        assert_eq!(x.eta, y.eta);
        assert_eq!(x.result.as_ref().unwrap().mu, y.result.as_ref().unwrap().mu);
    }
    assert!((a.slope - p.alpha).abs() < 0.1, "{}", a.slope);
    assert!(scan(&[], &p, &phi, 1, false).is_err());
}

#[test]
fn rejects_eta_outside_the_box() {
    let p = make_params(3.0).unwrap();
    let phi = default_phi(&p).unwrap();
    assert!(solve_mu(0.0, &p, &phi, SolveOptions::default()).is_err());
    assert!(solve_mu(0.2, &p, &phi, SolveOptions::default()).is_err());
}

#[test]
fn helpers() {
    let xs = logspace_desc(1e-4, 1e-2, 5);
    assert!((xs[0] - 1e-2).abs() < 1e-17 && (xs[4] - 1e-4).abs() < 1e-19);
    let (s, i) = linear_fit(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]);
    assert!((s - 2.0).abs() < 1e-15 && (i - 1.0).abs() < 1e-15);
}
