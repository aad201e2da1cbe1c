use hughes_core::coupling::corridor_boundaries;
use hughes_core::grid::integrate;
use hughes_core::particles::{estimate_density, step_particles, ParticleEnsemble};
use hughes_core::{Boundaries, BoundarySpec, EdgeCondition, Grid2D, ModelParams, ScalarField};
use proptest::prelude::*;

fn mean_var(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

#[test]
fn brownian_spread_matches_two_sigma_t() {
    // Flat potential: no drift, pure diffusion on a torus large enough that
    // nobody wraps.
    let (sigma, dt, steps, n) = (0.05, 0.1, 10, 100_000);
    let params = ModelParams::new(1.0, 1.0, sigma).unwrap();
    let g = Grid2D::new(8, 8, 40.0, 40.0).unwrap();
    let rho = ScalarField::constant(g, 0.5);
    let phi = ScalarField::zeros(g);
    let mut ens = ParticleEnsemble::new(vec![[20.0, 20.0]; n], 11).unwrap();
    for _ in 0..steps {
        ens = step_particles(&ens, &phi, &rho, dt, &params, &Boundaries::torus()).unwrap();
    }
    let expected = 2.0 * sigma * dt * steps as f64;
    let se = expected * (2.0 / n as f64).sqrt();
    for axis in 0..2 {
        let (mean, var) = mean_var(ens.positions.iter().map(|p| p[axis]));
        assert!(
            (var - expected).abs() < 3.0 * se,
            "axis {axis}: {var} vs {expected}"
        );
        assert!((mean - 20.0).abs() < 3.0 * (expected / n as f64).sqrt());
    }
}

#[test]
fn drift_moves_the_mean_at_the_model_velocity() {
    let (sigma, dt, steps, n) = (0.01, 0.05, 8, 50_000);
    let params = ModelParams::new(2.0, 1.0, sigma).unwrap();
    let g = Grid2D::new(40, 20, 4.0, 2.0).unwrap();
    let rho = ScalarField::constant(g, 0.4);
    let slope = 0.8;
    let phi = ScalarField::from_fn(g, |x, _| slope * (4.0 - x));
    // u = −f^β ∇φ with f = 0.6.
    let u = 0.6f64.powi(2) * slope;
    let mut ens = ParticleEnsemble::new(vec![[1.0, 1.0]; n], 5).unwrap();
    for _ in 0..steps {
        ens = step_particles(&ens, &phi, &rho, dt, &params, &Boundaries::torus()).unwrap();
    }
    let t = dt * steps as f64;
    let (mx, vx) = mean_var(ens.positions.iter().map(|p| p[0]));
    let (my, _) = mean_var(ens.positions.iter().map(|p| p[1]));
    let se = (vx / n as f64).sqrt();
    assert!(
        (mx - (1.0 + u * t)).abs() < 3.0 * se,
        "{mx} vs {}",
        1.0 + u * t
    );
    assert!((my - 1.0).abs() < 3.0 * se);
}

#[test]
fn uniform_sample_gives_flat_histogram() {
    let g = Grid2D::new(10, 5, 2.0, 1.0).unwrap();
    let rho = ScalarField::constant(g, 0.3);
    let n = 200_000;
    let ens = ParticleEnsemble::sample(&rho, n, 3).unwrap();
    let mass = integrate(&rho);
    let est = estimate_density(&ens, g, mass, 0, &BoundarySpec::walls());
    // Binomial cell counts: relative spread sqrt((1−p)/(np)) per cell.
    let p = 1.0 / g.len() as f64;
    let rel = ((1.0 - p) / (n as f64 * p)).sqrt();
    for v in &est.values {
        assert!((v / 0.3 - 1.0).abs() < 5.0 * rel, "{v}");
    }
    // Summing 2·10⁵ weights of 1/n leaves relative rounding near 1e-12.
    assert!((integrate(&est) / mass - 1.0).abs() < 1e-10);
}

#[test]
fn single_cell_density_samples_inside_that_cell() {
    let g = Grid2D::new(8, 4, 4.0, 2.0).unwrap();
    let mut rho = ScalarField::zeros(g);
    rho.values[g.idx(5, 2)] = 1.0;
    let ens = ParticleEnsemble::sample(&rho, 2000, 8).unwrap();
    for p in &ens.positions {
        assert_eq!(g.locate(p[0], p[1]), (5, 2));
    }
    let est = estimate_density(&ens, g, integrate(&rho), 0, &BoundarySpec::walls());
    for (a, b) in est.values.iter().zip(&rho.values) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn exits_only_ever_remove_particles() {
    let params = ModelParams::new(2.0, 1.0, 0.05).unwrap();
    let g = Grid2D::new(20, 10, 2.0, 1.0).unwrap();
    let rho = ScalarField::constant(g, 0.2);
    let phi = ScalarField::from_fn(g, |x, _| 2.0 - x);
    let mut bcs = corridor_boundaries(EdgeCondition::Wall);
    bcs.density = BoundarySpec {
        left: EdgeCondition::Wall,
        right: EdgeCondition::Exit,
        ..BoundarySpec::walls()
    };
    let mut ens = ParticleEnsemble::sample(&rho, 4000, 21).unwrap();
    let mut alive = ens.alive_count();
    for _ in 0..60 {
        ens = step_particles(&ens, &phi, &rho, 0.05, &params, &bcs).unwrap();
        let now = ens.alive_count();
        assert!(now <= alive);
        alive = now;
    }
    assert!(alive < ens.len());
    let est = estimate_density(&ens, g, 1.0, 1, &bcs.density);
    assert!(
        (integrate(&est) - ens.alive_fraction()).abs() < 1e-12,
        "{} {}",
        integrate(&est),
        ens.alive_fraction()
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn walls_keep_particles_inside(
        seed in any::<u64>(),
        ax in -3.0f64..3.0,
        ay in -3.0f64..3.0,
        sigma in 0.0f64..0.2,
        beta in 0.0f64..=2.0,
    ) {
        let params = ModelParams::new(beta, 1.0, sigma).unwrap();
        let g = Grid2D::new(12, 6, 2.0, 1.0).unwrap();
        let rho = ScalarField::from_fn(g, |x, y| 0.1 + 0.4 * (x * y).sin().abs());
        let phi = ScalarField::from_fn(g, |x, y| ax * x + ay * y);
        let bcs = Boundaries::same(BoundarySpec::walls());
        let mut ens = ParticleEnsemble::sample(&rho, 500, seed).unwrap();
        for _ in 0..10 {
            ens = step_particles(&ens, &phi, &rho, 0.1, &params, &bcs).unwrap();
        }
        prop_assert_eq!(ens.alive_count(), ens.len());
        for p in &ens.positions {
            prop_assert!((0.0..=g.lx).contains(&p[0]) && (0.0..=g.ly).contains(&p[1]), "{:?}", p);
        }
    }

    #[test]
    fn estimate_keeps_mass_for_any_smoothing(
        seed in any::<u64>(),
        smoothing in 0usize..4,
        periodic in any::<bool>(),
        mass in 0.1f64..10.0,
    ) {
        let g = Grid2D::new(9, 7, 3.0, 2.0).unwrap();
        let rho = ScalarField::from_fn(g, |x, y| 1.0 + (x - y).cos());
        let ens = ParticleEnsemble::sample(&rho, 700, seed).unwrap();
        let spec = if periodic { BoundarySpec::periodic() } else { BoundarySpec::walls() };
        let est = estimate_density(&ens, g, mass, smoothing, &spec);
        prop_assert!((integrate(&est) - mass).abs() < 1e-12 * mass.max(1.0));
        prop_assert!(est.values.iter().all(|v| *v >= 0.0));
    }
}
