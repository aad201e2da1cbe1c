//! Value-function solvers: stationary eikonal by fast sweeping, stationary
//! viscous HJB by damped Picard iteration, and one backward step of the
//! time-dependent viscous HJB with a Lax–Friedrichs Hamiltonian.

use crate::error::SolverError;
use crate::grid::{fill_ghosts, BoundarySpec, EdgeCondition, Grid2D, Quantity, ScalarField};
use crate::linsolve::DiffusionOperator;
use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepingConfig {
    /// Stop once a full round of four sweeps changes no value by more than this.
    pub tolerance: f64,
    pub max_sweep_rounds: usize,
    /// Initial value; `None` picks `10·(lx+ly)·max F`.
    pub large_value: Option<f64>,
}

impl Default for SweepingConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            max_sweep_rounds: 200,
            large_value: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryHjbConfig {
    pub picard_damping: f64,
    pub residual_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for StationaryHjbConfig {
    fn default() -> Self {
        Self {
            picard_damping: 0.5,
            residual_tolerance: 1e-6,
            max_iterations: 5000,
        }
    }
}

/// Pointwise right-hand side `F = f^{1−β}(ρ)` of `|∇φ| = F`.
pub fn eikonal_rhs(rho: &ScalarField, params: &ModelParams) -> ScalarField {
    rho.map(|r| params.eikonal_speed(r))
}

/// Neighbour value and distance across one side of a cell, or `None` when the
/// side carries no information (wall).
#[inline]
fn side(
    phi: &[f64],
    interior: Option<usize>,
    cond: EdgeCondition,
    wrap: usize,
    h: f64,
) -> Option<(f64, f64)> {
    match interior {
        Some(n) => Some((phi[n], h)),
        None => match cond {
            EdgeCondition::Periodic => Some((phi[wrap], h)),
            EdgeCondition::Wall => None,
            c => c.face_value(Quantity::Potential).map(|v| (v, 0.5 * h)),
        },
    }
}

/// Pick the side that allows the smaller arrival value `a + F·h`.
#[inline]
fn upwind(a: Option<(f64, f64)>, b: Option<(f64, f64)>, f: f64) -> Option<(f64, f64)> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if x.0 + f * x.1 <= y.0 + f * y.1 { x } else { y }),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Relative tolerance under which the two-sided update counts as one-sided.
/// The two formulas agree to first order there.
const TIE_SLACK: f64 = 1e-12;

/// Godunov update: smallest `φ` with `Σ ((φ − a_k)₊ / h_k)² = F²`.
#[inline]
fn godunov(x: Option<(f64, f64)>, y: Option<(f64, f64)>, f: f64) -> f64 {
    match (x, y) {
        (None, None) => f64::INFINITY,
        (Some((a, h)), None) | (None, Some((a, h))) => a + f * h,
        (Some((a, ha)), Some((b, hb))) => {
            // The slack sends near-ties to the one-sided update, so rows (or
            // columns) with equal data get bitwise equal values.
            if ha == hb {
                let fh = f * ha;
                if (a - b).abs() >= fh * (1.0 - TIE_SLACK) {
                    a.min(b) + fh
                } else {
                    0.5 * (a + b + (2.0 * fh * fh - (a - b) * (a - b)).sqrt())
                }
            } else {
                let one_sided = (a + f * ha).min(b + f * hb);
                if one_sided <= a.max(b) + TIE_SLACK * f * ha.min(hb) {
                    return one_sided;
                }
                let (wa, wb) = (1.0 / (ha * ha), 1.0 / (hb * hb));
                let qa = wa + wb;
                let qb = -2.0 * (a * wa + b * wb);
                let qc = a * a * wa + b * b * wb - f * f;
                let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
                (-qb + disc.sqrt()) / (2.0 * qa)
            }
        }
    }
}

/// Solves `|∇φ| = F` with φ pinned on exit/inflow faces, walls acting as
/// homogeneous Neumann and periodic edges wrapping. Gauss–Seidel sweeps run in
/// the four diagonal orderings until a round moves no value by more than the
/// tolerance.
pub fn solve_eikonal_sweeping(
    speed: &ScalarField,
    spec: &BoundarySpec,
    config: &SweepingConfig,
) -> Result<ScalarField, SolverError> {
    spec.validate()?;
    if !spec.has_dirichlet() {
        return Err(SolverError::NoAnchor);
    }
    if let Some((index, &value)) = speed
        .values
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v > 0.0 && v.is_finite()))
    {
        return Err(SolverError::NonPositiveSpeed { index, value });
    }
    let g = speed.grid;
    let (nx, ny) = (g.nx, g.ny);
    let (dx, dy) = (g.dx(), g.dy());
    let f_max = speed.max();
    let large = config.large_value.unwrap_or(10.0 * (g.lx + g.ly) * f_max);
    let mut phi = vec![large; g.len()];

    let orders: [(bool, bool); 4] = [(false, false), (true, false), (true, true), (false, true)];
    for round in 0..config.max_sweep_rounds {
        let mut max_change = 0.0_f64;
        for (rev_i, rev_j) in orders {
            for jj in 0..ny {
                let j = if rev_j { ny - 1 - jj } else { jj };
                for ii in 0..nx {
                    let i = if rev_i { nx - 1 - ii } else { ii };
                    let k = j * nx + i;
                    let f = speed.values[k];
                    let west = side(&phi, (i > 0).then(|| k - 1), spec.left, j * nx + nx - 1, dx);
                    let east = side(&phi, (i + 1 < nx).then(|| k + 1), spec.right, j * nx, dx);
                    let south = side(
                        &phi,
                        (j > 0).then(|| k - nx),
                        spec.bottom,
                        (ny - 1) * nx + i,
                        dy,
                    );
                    let north = side(&phi, (j + 1 < ny).then(|| k + nx), spec.top, i, dy);
                    let cand = godunov(upwind(west, east, f), upwind(south, north, f), f);
                    if cand < phi[k] {
                        max_change = max_change.max(phi[k] - cand);
                        phi[k] = cand;
                    }
                }
            }
        }
        if max_change < config.tolerance && round > 0 {
            return Ok(ScalarField {
                grid: g,
                values: phi,
            });
        }
    }
    Err(SolverError::NotConverged {
        what: "fast sweeping",
        iterations: config.max_sweep_rounds,
        residual: f64::NAN,
    })
}

/// Upwind gradient magnitude of the Godunov discretization, for checking a
/// sweeping solution against its right-hand side.
pub fn godunov_gradient_norm(
    phi: &ScalarField,
    spec: &BoundarySpec,
) -> Result<ScalarField, SolverError> {
    let g = phi.grid;
    let gh = fill_ghosts(phi, spec, Quantity::Potential)?;
    let (dx, dy) = (g.dx(), g.dy());
    let mut out = ScalarField::zeros(g);
    for j in 0..g.ny as isize {
        for i in 0..g.nx as isize {
            let c = gh.get(i, j);
            let ax = gh.get(i - 1, j).min(gh.get(i + 1, j));
            let ay = gh.get(i, j - 1).min(gh.get(i, j + 1));
            let gx = ((c - ax) / dx).max(0.0);
            let gy = ((c - ay) / dy).max(0.0);
            out.values[g.idx(i as usize, j as usize)] = (gx * gx + gy * gy).sqrt();
        }
    }
    Ok(out)
}

/// Pointwise residual `½f^β|∇φ|² − σΔφ − ½f^{2−β}` with central differences.
pub fn stationary_residual(
    phi: &ScalarField,
    rho: &ScalarField,
    params: &ModelParams,
    spec: &BoundarySpec,
) -> Result<ScalarField, SolverError> {
    phi.same_grid(rho)?;
    let grad = crate::grid::gradient_central(phi, spec, Quantity::Potential)?;
    let lap = crate::grid::laplacian(phi, spec, Quantity::Potential)?;
    let mut out = ScalarField::zeros(phi.grid);
    for k in 0..phi.values.len() {
        out.values[k] =
            params.hamiltonian(rho.values[k], grad.at(k)) - params.sigma * lap.values[k];
    }
    Ok(out)
}

/// Quasi-stationary viscous HJB `½f^β|∇φ|² − σΔφ − ½f^{2−β} = 0` by damped
/// Picard iteration with lagged gradient:
/// `−σΔφ̃ = ½f^{2−β} − ½f^β|∇φ^k|²`, `φ^{k+1} = (1−θ)φ^k + θφ̃`.
pub fn solve_viscous_stationary_hjb(
    rho: &ScalarField,
    params: &ModelParams,
    spec: &BoundarySpec,
    config: &StationaryHjbConfig,
    phi_init: &ScalarField,
) -> Result<ScalarField, SolverError> {
    rho.same_grid(phi_init)?;
    if !(params.sigma > 0.0) {
        return Err(SolverError::Invalid(
            "viscous stationary HJB needs sigma > 0".into(),
        ));
    }
    if !(config.picard_damping > 0.0 && config.picard_damping <= 1.0) {
        return Err(SolverError::Invalid(
            "Picard damping must lie in (0,1]".into(),
        ));
    }
    let op = DiffusionOperator::new(rho.grid, *spec, Quantity::Potential, 0.0, params.sigma)?;
    let theta = config.picard_damping;
    let mut phi = phi_init.clone();
    let mut residual = f64::INFINITY;
    for _ in 0..config.max_iterations {
        residual = crate::grid::linf(&stationary_residual(&phi, rho, params, spec)?);
        if !residual.is_finite() {
            break;
        }
        if residual < config.residual_tolerance {
            return Ok(phi);
        }
        let grad = crate::grid::gradient_central(&phi, spec, Quantity::Potential)?;
        let rhs: Vec<f64> = (0..phi.values.len())
            .map(|k| {
                let r = rho.values[k];
                0.5 * params.saturation_pow(r, 2.0 - params.beta)
                    - 0.5
                        * params.saturation_pow(r, params.beta)
                        * crate::model::norm_sq(grad.at(k))
            })
            .collect();
        let next = op.solve(&rhs, Some(&phi.values), 1e-12)?;
        for (p, n) in phi.values.iter_mut().zip(&next.values) {
            *p = (1.0 - theta) * *p + theta * n;
        }
    }
    Err(SolverError::NotConverged {
        what: "stationary HJB Picard iteration (try a smaller damping)",
        iterations: config.max_iterations,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpwindHjbConfig {
    /// Stop once a round of four sweeps changes no value by more than this.
    pub tolerance: f64,
    pub max_sweep_rounds: usize,
    /// Required L∞ norm of [`upwind_stationary_residual`] at the returned φ.
    pub residual_tolerance: f64,
}

impl Default for UpwindHjbConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-11,
            max_sweep_rounds: 20_000,
            residual_tolerance: 1e-6,
        }
    }
}

/// Residual of the monotone upwind discretization
/// `½f^β|∇⁺φ|² − σΔ_hφ − ½f^{2−β}`, where `|∇⁺φ|` is the Godunov gradient
/// magnitude used by the eikonal solver.
pub fn upwind_stationary_residual(
    phi: &ScalarField,
    rho: &ScalarField,
    params: &ModelParams,
    spec: &BoundarySpec,
) -> Result<ScalarField, SolverError> {
    phi.same_grid(rho)?;
    let grad = godunov_gradient_norm(phi, spec)?;
    let lap = crate::grid::laplacian(phi, spec, Quantity::Potential)?;
    let mut out = ScalarField::zeros(phi.grid);
    for k in 0..phi.values.len() {
        let r = rho.values[k];
        let g = grad.values[k];
        out.values[k] = 0.5 * params.hamiltonian_pp(r) * g * g
            - params.sigma * lap.values[k]
            - 0.5 * params.saturation_pow(r, 2.0 - params.beta);
    }
    Ok(out)
}

/// Root of the single-cell equation of the upwind viscous scheme. `x`/`y`
/// hold the available neighbours `(value, distance)` per axis with the axis
/// spacing; the left-hand side is convex and increasing in the cell value.
#[allow(clippy::too_many_arguments)]
fn local_viscous_root(
    x: &[(f64, f64)],
    y: &[(f64, f64)],
    hx: f64,
    hy: f64,
    a: f64,
    c: f64,
    sigma: f64,
    start: f64,
) -> f64 {
    let eval = |u: f64| -> (f64, f64) {
        let mut val = -0.5 * c;
        let mut der = 0.0;
        for (nbs, h) in [(x, hx), (y, hy)] {
            let mut gmax = 0.0;
            let mut dg = 0.0;
            for &(v, d) in nbs {
                let g = (u - v) / d;
                if g > gmax {
                    gmax = g;
                    dg = 1.0 / d;
                }
                let w = sigma / (h * d);
                val += w * (u - v);
                der += w;
            }
            val += 0.5 * a * gmax * gmax;
            der += a * gmax * dg;
        }
        (val, der)
    };
    let mut hi = start;
    let mut step = 1e-3 + c.abs() * hx.max(hy);
    for _ in 0..200 {
        if eval(hi).0 >= 0.0 {
            break;
        }
        hi += step;
        step *= 2.0;
    }
    let mut u = hi;
    for _ in 0..100 {
        let (v, d) = eval(u);
        if v <= 0.0 || d <= 0.0 {
            break;
        }
        let next = u - v / d;
        if !(next < u) {
            break;
        }
        u = next;
    }
    u
}

/// Quasi-stationary viscous HJB on the monotone upwind discretization, by
/// nonlinear Gauss–Seidel in the four sweep orderings (each cell solves its
/// own convex scalar equation). At σ = 0 the scheme is the Godunov eikonal
/// discretization of [`solve_eikonal_sweeping`].
pub fn solve_viscous_stationary_upwind(
    rho: &ScalarField,
    params: &ModelParams,
    spec: &BoundarySpec,
    config: &UpwindHjbConfig,
    phi_init: &ScalarField,
) -> Result<ScalarField, SolverError> {
    rho.same_grid(phi_init)?;
    spec.validate()?;
    if !spec.has_dirichlet() {
        return Err(SolverError::NoAnchor);
    }
    if params.sigma < 0.0 {
        return Err(SolverError::Invalid("sigma must be nonnegative".into()));
    }
    let g = rho.grid;
    let (nx, ny) = (g.nx, g.ny);
    let (dx, dy) = (g.dx(), g.dy());
    let a: Vec<f64> = rho
        .values
        .iter()
        .map(|&r| params.hamiltonian_pp(r))
        .collect();
    let c: Vec<f64> = rho
        .values
        .iter()
        .map(|&r| params.saturation_pow(r, 2.0 - params.beta))
        .collect();
    let mut phi = phi_init.values.clone();
    let orders: [(bool, bool); 4] = [(false, false), (true, false), (true, true), (false, true)];
    let mut converged = false;
    for round in 0..config.max_sweep_rounds {
        let mut max_change = 0.0_f64;
        for (rev_i, rev_j) in orders {
            for jj in 0..ny {
                let j = if rev_j { ny - 1 - jj } else { jj };
                for ii in 0..nx {
                    let i = if rev_i { nx - 1 - ii } else { ii };
                    let k = j * nx + i;
                    let xs: Vec<(f64, f64)> = [
                        side(&phi, (i > 0).then(|| k - 1), spec.left, j * nx + nx - 1, dx),
                        side(&phi, (i + 1 < nx).then(|| k + 1), spec.right, j * nx, dx),
                    ]
                    .into_iter()
                    .flatten()
                    .collect();
                    let ys: Vec<(f64, f64)> = [
                        side(
                            &phi,
                            (j > 0).then(|| k - nx),
                            spec.bottom,
                            (ny - 1) * nx + i,
                            dy,
                        ),
                        side(&phi, (j + 1 < ny).then(|| k + nx), spec.top, i, dy),
                    ]
                    .into_iter()
                    .flatten()
                    .collect();
                    let u = local_viscous_root(&xs, &ys, dx, dy, a[k], c[k], params.sigma, phi[k]);
                    max_change = max_change.max((u - phi[k]).abs());
                    phi[k] = u;
                }
            }
        }
        if !max_change.is_finite() {
            break;
        }
        if max_change < config.tolerance && round > 0 {
            converged = true;
            break;
        }
    }
    let out = ScalarField {
        grid: g,
        values: phi,
    };
    let residual = crate::grid::linf(&upwind_stationary_residual(&out, rho, params, spec)?);
    if converged && residual < config.residual_tolerance {
        Ok(out)
    } else {
        Err(SolverError::NotConverged {
            what: "upwind viscous HJB sweeping",
            iterations: config.max_sweep_rounds,
            residual,
        })
    }
}

/// Lax–Friedrichs Hamiltonian `H(ρ, D_cφ) − α_x(D⁺ₓφ−D⁻ₓφ)/2 − α_y(D⁺_yφ−D⁻_yφ)/2`
/// with `α` the global maximum of `|∂H/∂p|` per axis. Returns the field and `α`.
pub fn lax_friedrichs_hamiltonian(
    phi: &ScalarField,
    rho: &ScalarField,
    params: &ModelParams,
    spec: &BoundarySpec,
) -> Result<(ScalarField, [f64; 2]), SolverError> {
    phi.same_grid(rho)?;
    let g = phi.grid;
    let gh = fill_ghosts(phi, spec, Quantity::Potential)?;
    let (dx, dy) = (g.dx(), g.dy());
    let n = g.len();
    let mut dpx = vec![0.0; n];
    let mut dmx = vec![0.0; n];
    let mut dpy = vec![0.0; n];
    let mut dmy = vec![0.0; n];
    let mut alpha = [0.0_f64; 2];
    for j in 0..g.ny as isize {
        for i in 0..g.nx as isize {
            let k = g.idx(i as usize, j as usize);
            let c = gh.get(i, j);
            dpx[k] = (gh.get(i + 1, j) - c) / dx;
            dmx[k] = (c - gh.get(i - 1, j)) / dx;
            dpy[k] = (gh.get(i, j + 1) - c) / dy;
            dmy[k] = (c - gh.get(i, j - 1)) / dy;
            let fb = params.hamiltonian_pp(rho.values[k]);
            alpha[0] = alpha[0].max(fb * dpx[k].abs().max(dmx[k].abs()));
            alpha[1] = alpha[1].max(fb * dpy[k].abs().max(dmy[k].abs()));
        }
    }
    let mut out = ScalarField::zeros(g);
    for k in 0..n {
        let p = [0.5 * (dpx[k] + dmx[k]), 0.5 * (dpy[k] + dmy[k])];
        out.values[k] = params.hamiltonian(rho.values[k], p)
            - 0.5 * alpha[0] * (dpx[k] - dmx[k])
            - 0.5 * alpha[1] * (dpy[k] - dmy[k]);
    }
    Ok((out, alpha))
}

/// One backward step of `−∂_tφ + H(ρ,∇φ) − σΔφ = 0`: the Hamiltonian is
/// explicit in `φ_next`, diffusion implicit,
/// `(I − dt·σΔ)φ_now = φ_next − dt·H_LF(ρ, Dφ_next)`.
pub fn step_backward_hjb(
    phi_next: &ScalarField,
    rho: &ScalarField,
    dt: f64,
    params: &ModelParams,
    spec: &BoundarySpec,
) -> Result<ScalarField, SolverError> {
    if !(dt > 0.0) {
        return Err(SolverError::Invalid(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let (h_lf, _) = lax_friedrichs_hamiltonian(phi_next, rho, params, spec)?;
    let rhs: Vec<f64> = phi_next
        .values
        .iter()
        .zip(&h_lf.values)
        .map(|(p, h)| p - dt * h)
        .collect();
    if params.sigma == 0.0 {
        return Ok(ScalarField {
            grid: phi_next.grid,
            values: rhs,
        });
    }
    let op = DiffusionOperator::new(
        phi_next.grid,
        *spec,
        Quantity::Potential,
        1.0,
        dt * params.sigma,
    )?;
    op.solve(&rhs, Some(&phi_next.values), 1e-14)
}

/// Largest stable step of the explicit backward scheme,
/// `min(h/(2α), h²/(8σ))` over both axes.
pub fn explicit_hjb_max_dt(grid: &Grid2D, alpha: [f64; 2], sigma: f64) -> f64 {
    let h = grid.dx().min(grid.dy());
    let mut dt = f64::INFINITY;
    let a = alpha[0].max(alpha[1]);
    if a > 0.0 {
        dt = dt.min(h / (2.0 * a));
    }
    if sigma > 0.0 {
        dt = dt.min(h * h / (8.0 * sigma));
    }
    dt
}

/// Fully explicit backward step; rejects steps beyond [`explicit_hjb_max_dt`].
pub fn step_backward_hjb_explicit(
    phi_next: &ScalarField,
    rho: &ScalarField,
    dt: f64,
    params: &ModelParams,
    spec: &BoundarySpec,
) -> Result<ScalarField, SolverError> {
    let (h_lf, alpha) = lax_friedrichs_hamiltonian(phi_next, rho, params, spec)?;
    let max_dt = explicit_hjb_max_dt(&phi_next.grid, alpha, params.sigma);
    if dt > max_dt {
        return Err(SolverError::Cfl { dt, max_dt });
    }
    let lap = crate::grid::laplacian(phi_next, spec, Quantity::Potential)?;
    let mut out = phi_next.clone();
    for k in 0..out.values.len() {
        out.values[k] += -dt * h_lf.values[k] + dt * params.sigma * lap.values[k];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2D;

    fn exit_right() -> BoundarySpec {
        BoundarySpec {
            right: EdgeCondition::Exit,
            ..BoundarySpec::walls()
        }
    }

    #[test]
    fn rows_with_equal_data_stay_bitwise_equal() {
        let g = Grid2D::new(37, 23, 4.0, 2.0).unwrap();
        let speed = ScalarField::from_fn(g, |x, _| 0.3 + 0.2 * (3.0 * x).sin().abs());
        let phi =
            solve_eikonal_sweeping(&speed, &exit_right(), &SweepingConfig::default()).unwrap();
        for j in 1..g.ny {
            for i in 0..g.nx {
                assert_eq!(phi.at(i, j).to_bits(), phi.at(i, 0).to_bits(), "({i},{j})");
            }
        }
    }

    #[test]
    fn eikonal_rhs_values() {
        let g = Grid2D::new(4, 4, 1.0, 1.0).unwrap();
        let rho = ScalarField::from_fn(g, |x, y| 0.1 + 0.8 * x * y);
        let one = eikonal_rhs(&rho, &ModelParams::new(1.0, 1.0, 0.0).unwrap());
        assert!(one.values.iter().all(|v| *v == 1.0));
        let half = ScalarField::constant(g, 0.5);
        let two = eikonal_rhs(&half, &ModelParams::new(2.0, 1.0, 0.0).unwrap());
        assert!(two.values.iter().all(|v| (*v - 2.0).abs() < 1e-15));
        let zero = eikonal_rhs(&half, &ModelParams::new(0.0, 1.0, 0.0).unwrap());
        assert!(zero.values.iter().all(|v| (*v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn godunov_closed_form_matches_general_quadratic() {
        // Same spacing: closed form; split spacing into the general branch.
        let (a, b, f, h) = (1.0, 1.02, 1.0, 0.05);
        let closed = godunov(Some((a, h)), Some((b, h)), f);
        let residual = ((closed - a) / h).powi(2) + ((closed - b) / h).powi(2) - f * f;
        assert!(residual.abs() < 1e-9);
        let general = godunov(Some((a, h)), Some((b, h * (1.0 + 1e-15))), f);
        assert!((closed - general).abs() < 1e-10);
    }

    #[test]
    fn sweeping_rejects_bad_input() {
        let g = Grid2D::new(8, 4, 4.0, 2.0).unwrap();
        let f = ScalarField::constant(g, 1.0);
        assert!(matches!(
            solve_eikonal_sweeping(&f, &BoundarySpec::walls(), &SweepingConfig::default()),
            Err(SolverError::NoAnchor)
        ));
        let mut bad = f.clone();
        bad.values[3] = 0.0;
        assert!(matches!(
            solve_eikonal_sweeping(&bad, &exit_right(), &SweepingConfig::default()),
            Err(SolverError::NonPositiveSpeed { index: 3, .. })
        ));
    }

    #[test]
    fn sweeping_distance_to_straight_exit() {
        let g = Grid2D::with_spacing(4.0, 2.0, 1.0 / 20.0).unwrap();
        let f = ScalarField::constant(g, 1.0);
        let phi = solve_eikonal_sweeping(&f, &exit_right(), &SweepingConfig::default()).unwrap();
        let h = g.dx();
        for j in 0..g.ny {
            for i in 0..g.nx {
                let (x, _) = g.center(i, j);
                assert!((phi.at(i, j) - (4.0 - x)).abs() <= 2.0 * h);
            }
        }
        assert!(phi.min() >= 0.0);
    }

    #[test]
    fn saturated_density_freezes_backward_step() {
        let g = Grid2D::new(8, 8, 1.0, 1.0).unwrap();
        let params = ModelParams::new(1.5, 1.0, 0.0).unwrap();
        let rho = ScalarField::constant(g, 1.0);
        // β=1.5 at f=0: H = ½·0·|p|² − ½·0^{0.5} = 0.
        let phi = ScalarField::from_fn(g, |x, y| (6.0 * x).sin() + y);
        let out = step_backward_hjb(&phi, &rho, 0.1, &params, &BoundarySpec::periodic()).unwrap();
        assert_eq!(out, phi);
    }

    #[test]
    fn constant_potential_grows_backward_by_half_dt() {
        let g = Grid2D::new(8, 8, 1.0, 1.0).unwrap();
        let params = ModelParams::new(2.0, 1.0, 0.05).unwrap();
        let rho = ScalarField::constant(g, 0.5);
        let phi = ScalarField::constant(g, 3.0);
        let out = step_backward_hjb(&phi, &rho, 0.1, &params, &BoundarySpec::periodic()).unwrap();
        for v in &out.values {
            assert!((v - 3.05).abs() < 1e-13);
        }
    }

    #[test]
    fn explicit_step_checks_cfl() {
        let g = Grid2D::new(8, 8, 1.0, 1.0).unwrap();
        let params = ModelParams::new(2.0, 1.0, 0.1).unwrap();
        let rho = ScalarField::constant(g, 0.5);
        let phi = ScalarField::from_fn(g, |x, _| (2.0 * std::f64::consts::PI * x).sin());
        let spec = BoundarySpec::periodic();
        // h²/(8σ) = 0.0195
        assert!(matches!(
            step_backward_hjb_explicit(&phi, &rho, 0.05, &params, &spec),
            Err(SolverError::Cfl { .. })
        ));
        assert!(step_backward_hjb_explicit(&phi, &rho, 0.01, &params, &spec).is_ok());
    }
}
