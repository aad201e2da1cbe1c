use hughes_core::coupling::corridor_boundaries;
use hughes_core::fp::{advance_fp, DiffusionMode, FluxForm, FpStepConfig};
use hughes_core::grid::integrate;
use hughes_core::hjb::{
    eikonal_rhs, godunov_gradient_norm, solve_eikonal_sweeping, SweepingConfig,
};
use hughes_core::{Boundaries, BoundarySpec, EdgeCondition, Grid2D, ModelParams, ScalarField};
use proptest::prelude::*;

fn field(grid: Grid2D, vals: &[f64]) -> ScalarField {
    ScalarField::from_values(grid, vals.to_vec()).unwrap()
}

fn config(flux_form: FluxForm, diffusion_mode: DiffusionMode) -> FpStepConfig {
    FpStepConfig {
        diffusion_mode,
        cfl_safety: 0.9,
        flux_form,
    }
}

const N: usize = 8;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_domains_conserve_mass_and_bounds(
        rho in prop::collection::vec(0.0..1.0f64, N * N),
        phi in prop::collection::vec(-2.0..2.0f64, N * N),
        beta in 0.0..=2.0f64,
        sigma in 0.0..0.05f64,
        periodic in any::<bool>(),
        eikonal in any::<bool>(),
        explicit in any::<bool>(),
    ) {
        let g = Grid2D::new(N, N, 1.0, 1.0).unwrap();
        let params = ModelParams::new(beta, 1.0, sigma).unwrap();
        let spec = if periodic { BoundarySpec::periodic() } else { BoundarySpec::walls() };
        let bcs = Boundaries::same(spec);
        let form = if eikonal { FluxForm::Eikonal } else { FluxForm::Mobility };
        let mode = if explicit { DiffusionMode::Explicit } else { DiffusionMode::Implicit };
        let rho0 = field(g, &rho);
        let next = advance_fp(&rho0, &field(g, &phi), 0.02, &params, &bcs, &config(form, mode)).unwrap();
        let (m0, m1) = (integrate(&rho0), integrate(&next));
        prop_assert!((m1 - m0).abs() <= 1e-12 * m0.max(1.0), "mass {m0} -> {m1}");
        prop_assert!(next.min() >= 0.0, "min {}", next.min());
        prop_assert!(next.max() <= 1.0 + 1e-8, "max {}", next.max());
    }

    #[test]
    fn sweeping_solves_its_own_discretization(speed in prop::collection::vec(0.2..3.0f64, 12 * 10)) {
        let g = Grid2D::new(12, 10, 1.2, 1.0).unwrap();
        let f = field(g, &speed);
        let spec = corridor_boundaries(EdgeCondition::Wall).potential;
        let phi = solve_eikonal_sweeping(&f, &spec, &SweepingConfig::default()).unwrap();
        let norm = godunov_gradient_norm(&phi, &spec).unwrap();
        for (a, b) in norm.values.iter().zip(&f.values) {
            prop_assert!((a - b).abs() <= 1e-9 * b, "{a} vs {b}");
        }
        prop_assert!(phi.min() > 0.0);
    }

    #[test]
    fn beta_one_potential_ignores_density(rho in prop::collection::vec(0.0..1.0f64, 16 * 8)) {
        let g = Grid2D::new(16, 8, 4.0, 2.0).unwrap();
        let params = ModelParams::new(1.0, 1.0, 0.01).unwrap();
        let spec = corridor_boundaries(EdgeCondition::Wall).potential;
        let cfg = SweepingConfig::default();
        let a = solve_eikonal_sweeping(&eikonal_rhs(&field(g, &rho), &params), &spec, &cfg).unwrap();
        let b = solve_eikonal_sweeping(&eikonal_rhs(&ScalarField::constant(g, 0.5), &params), &spec, &cfg).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn uniform_corridor_potential_is_linear() {
    let h = 1.0 / 20.0;
    let g = Grid2D::with_spacing(4.0, 2.0, h).unwrap();
    let spec = corridor_boundaries(EdgeCondition::Wall).potential;
    for beta in [0.0, 1.0, 2.0] {
        let params = ModelParams::new(beta, 1.0, 0.0).unwrap();
        let s = params.eikonal_speed(0.5);
        let phi = solve_eikonal_sweeping(
            &eikonal_rhs(&ScalarField::constant(g, 0.5), &params),
            &spec,
            &SweepingConfig::default(),
        )
        .unwrap();
        let exact = ScalarField::from_fn(g, |x, _| s * (4.0 - x));
        let err = phi
            .values
            .iter()
            .zip(&exact.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-12, "beta {beta}: {err}");
    }
}

#[test]
fn exit_edge_only_loses_mass() {
    let g = Grid2D::new(10, 6, 2.0, 1.0).unwrap();
    let params = ModelParams::new(2.0, 1.0, 0.01).unwrap();
    let bcs = corridor_boundaries(EdgeCondition::Wall);
    let bcs = Boundaries {
        density: BoundarySpec {
            left: EdgeCondition::Wall,
            right: EdgeCondition::Exit,
            ..bcs.density
        },
        potential: bcs.potential,
    };
    let phi = ScalarField::from_fn(g, |x, _| 2.0 - x);
    let mut rho = ScalarField::constant(g, 0.4);
    let mut mass = integrate(&rho);
    for _ in 0..20 {
        rho = advance_fp(&rho, &phi, 0.05, &params, &bcs, &FpStepConfig::default()).unwrap();
        let m = integrate(&rho);
        assert!(m <= mass + 1e-14);
        mass = m;
    }
    assert!(mass < 0.4 * 2.0 * 0.9);
}
