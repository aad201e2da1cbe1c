use hughes_core::model::{symmetric_eigenvalues_3x3, ModelParams};
use nalgebra::Matrix3;
use proptest::prelude::*;

fn params(beta: f64) -> ModelParams {
    ModelParams::new(beta, 1.0, 0.01).unwrap()
}

/// Written out independently of the library.
fn oracle_hamiltonian(beta: f64, rho_max: f64, rho: f64, p: [f64; 2]) -> f64 {
    let f = (rho_max - rho).max(0.0);
    let pow = |e: f64| if e == 0.0 { 1.0 } else { f.powf(e) };
    0.5 * pow(beta) * (p[0] * p[0] + p[1] * p[1]) - 0.5 * pow(2.0 - beta)
}

/// Fourth-order central difference.
fn d5(g: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-g(x + 2.0 * h) + 8.0 * g(x + h) - 8.0 * g(x - h) + g(x - 2.0 * h)) / (12.0 * h)
}

fn nalgebra_min_eigenvalue(m: [[f64; 3]; 3]) -> f64 {
    let a = Matrix3::from_fn(|i, j| m[i][j]);
    a.symmetric_eigen().eigenvalues.min()
}

proptest! {
    #[test]
    fn hamiltonian_matches_closed_form(beta in 0.0..=2.0f64, rho in 0.0..1.2f64, px in -10.0..10.0f64, py in -10.0..10.0f64) {
        let got = params(beta).hamiltonian(rho, [px, py]);
        let want = oracle_hamiltonian(beta, 1.0, rho, [px, py]);
        prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
    }

    #[test]
    fn legendre_pairing_identity(beta in 0.0..=2.0f64, rho in 0.0..0.99f64, px in -10.0..10.0f64, py in -10.0..10.0f64) {
        let m = params(beta);
        let p = [px, py];
        let q = m.hamiltonian_p(rho, p);
        let lhs = m.lagrangian(rho, q);
        let rhs = q[0] * p[0] + q[1] * p[1] - m.hamiltonian(rho, p);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
    }

    #[test]
    fn hamiltonian_is_convex_in_p(beta in 0.0..=2.0f64, rho in 0.0..1.0f64) {
        prop_assert!(params(beta).hamiltonian_pp(rho) >= 0.0);
    }

    #[test]
    fn derivatives_match_difference_quotients(beta in 0.0..=2.0f64, rho in 0.05..0.95f64, px in -5.0..5.0f64, py in -5.0..5.0f64) {
        let m = params(beta);
        let p = [px, py];
        let h = 1e-3 * rho.min(1.0 - rho);
        let fd_rho = d5(|r| oracle_hamiltonian(beta, 1.0, r, p), rho, h);
        let scale = m.hamiltonian_rho(rho, p).abs().max(1.0);
        prop_assert!((fd_rho - m.hamiltonian_rho(rho, p)).abs() <= 1e-6 * scale);
        let fd_p = d5(|x| oracle_hamiltonian(beta, 1.0, rho, [x, py]), px, 1e-3);
        prop_assert!((fd_p - m.hamiltonian_p(rho, p)[0]).abs() <= 1e-6 * fd_p.abs().max(1.0));
        let fd_rp = d5(|r| m.hamiltonian_p(r, p)[1], rho, h);
        prop_assert!((fd_rp - m.hamiltonian_rho_p(rho, p)[1]).abs() <= 1e-6 * fd_rp.abs().max(1.0));
    }

    #[test]
    fn beta_two_is_monotone_below_half_capacity(rho in 1e-3..=0.5f64, px in -10.0..10.0f64, py in -10.0..10.0f64) {
        let m = params(2.0).monotonicity_matrix(rho, [px, py]).unwrap();
        prop_assert!(nalgebra_min_eigenvalue(m.entries) >= -1e-12);
        prop_assert!(m.is_psd(1e-12));
    }

    #[test]
    fn beta_zero_is_never_monotone(rho in 1e-3..0.999f64, px in -10.0..10.0f64, py in -10.0..10.0f64) {
        let m = params(0.0).monotonicity_matrix(rho, [px, py]).unwrap();
        prop_assert!(m.quadratic_form([1.0, 0.0, 0.0]) < 0.0);
        prop_assert!(!m.is_psd(1e-12));
    }

    #[test]
    fn eigenvalues_agree_with_nalgebra(a in prop::array::uniform6(-50.0..50.0f64)) {
        let m = [[a[0], a[1], a[2]], [a[1], a[3], a[4]], [a[2], a[4], a[5]]];
        let ours = symmetric_eigenvalues_3x3(&m);
        let mut theirs: Vec<f64> = Matrix3::from_fn(|i, j| m[i][j]).symmetric_eigen().eigenvalues.iter().copied().collect();
        theirs.sort_by(f64::total_cmp);
        for (x, y) in ours.iter().zip(&theirs) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + y.abs()), "{ours:?} vs {theirs:?}");
        }
    }

    #[test]
    fn saturation_is_nonnegative_and_decreasing(rho in -1.0..3.0f64, d in 0.0..1.0f64) {
        let m = params(1.0);
        prop_assert!(m.saturation(rho) >= 0.0);
        prop_assert!(m.saturation(rho + d) <= m.saturation(rho));
    }
}

#[test]
fn optimal_speed_on_eikonal_solution_is_free_speed() {
    for beta in [0.0, 0.5, 1.0, 1.5, 2.0] {
        let m = params(beta);
        for rho in [0.1, 0.5, 0.9] {
            let g = m.eikonal_speed(rho);
            let u = m.optimal_velocity(rho, [g * 0.6, -g * 0.8]);
            let speed = (u[0] * u[0] + u[1] * u[1]).sqrt();
            assert!((speed - (1.0 - rho)).abs() < 1e-14, "beta {beta} rho {rho}");
        }
    }
}
