//! Finite-volume advance of `∂_tρ − div(ρ f^β(ρ)∇φ) − σΔρ = 0`.
//!
//! Face velocities are `b = −f^β(ρ_up)·∂_nφ` with `ρ_up` the upwind cell.
//! The advective flux through a face with frozen slope `s = −∂_nφ` is the
//! Godunov flux of `s·q(ρ)`, `q(ρ) = ρ f^β(ρ)`: `s·min(D(ρ_up), S(ρ_down))`
//! with demand `D(ρ) = q(min(ρ, ρ*))`, supply `S(ρ) = q(max(ρ, ρ*))` and
//! `ρ* = ρ_m/(1+β)` the maximizer of `q`. Below `ρ*` this is the donor-cell
//! flux `ρ_up·b`; saturated cells accept no inflow.

use crate::error::SolverError;
use crate::grid::{
    fill_ghosts, Boundaries, BoundarySpec, EdgeCondition, FaceField, GhostField, Quantity,
    ScalarField,
};
use crate::hjb::godunov_gradient_norm;
use crate::linsolve::DiffusionOperator;
use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffusionMode {
    Explicit,
    Implicit,
}

/// How the advective flux is assembled from φ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluxForm {
    /// Godunov flux of `s·q(ρ)` with mobility `q(ρ) = ρ f^β(ρ)` and frozen
    /// face slope `s = −∂_nφ`. Valid for any φ.
    Mobility,
    /// For φ solving `|∇φ| = f^{1−β}(ρ)` the velocity `−f^β∇φ` equals
    /// `f(ρ)ν` with `ν = −∇φ/|∇φ|`; the flux is `ν_n` times the Godunov flux
    /// of `ρ f(ρ)`, with `|∇φ|` taken as the upwind gradient magnitude of the
    /// upwind cell.
    Eikonal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FpStepConfig {
    pub diffusion_mode: DiffusionMode,
    pub cfl_safety: f64,
    pub flux_form: FluxForm,
}

impl Default for FpStepConfig {
    fn default() -> Self {
        Self {
            diffusion_mode: DiffusionMode::Implicit,
            cfl_safety: 0.9,
            flux_form: FluxForm::Mobility,
        }
    }
}

/// Face velocities, advective fluxes and the characteristic rates
/// `|s|·Lip(q)` that bound the stable step.
#[derive(Debug, Clone)]
pub struct Transport {
    pub velocity: FaceField,
    pub flux: FaceField,
    pub rate: FaceField,
}

impl Transport {
    pub fn advective_flux(&self) -> FaceField {
        self.flux.clone()
    }
}

/// `q(ρ) = ρ f^β(ρ)`.
#[inline]
pub fn flux_density(params: &ModelParams, rho: f64) -> f64 {
    rho * params.hamiltonian_pp(rho)
}

/// Maximizer of `q` on `[0, ρ_m]`; infinite when `q` is increasing (β = 0).
#[inline]
pub fn critical_density(params: &ModelParams) -> f64 {
    if params.beta > 0.0 {
        params.rho_max / (1.0 + params.beta)
    } else {
        f64::INFINITY
    }
}

#[inline]
fn demand(params: &ModelParams, rho: f64) -> f64 {
    flux_density(params, rho.min(critical_density(params)))
}

#[inline]
fn supply(params: &ModelParams, rho: f64) -> f64 {
    let c = critical_density(params);
    if c.is_infinite() {
        f64::INFINITY
    } else {
        flux_density(params, rho.max(c))
    }
}

/// Rate bound for a face whose larger state is `ρ`. For `β ≥ 1` this bounds
/// `|q'|` on `[0, ρ]`. For `β < 1` the slope blows up at `ρ_m`, so only the
/// demand branch is bounded (`q' ≤ ρ_m^β` there); that keeps outflows
/// positive, and the capacity limiter in the step keeps inflows below `ρ_m`.
fn flux_lipschitz(params: &ModelParams, rho: f64) -> f64 {
    let (b, rm) = (params.beta, params.rho_max);
    if b < 1.0 {
        return rm.powf(b);
    }
    let r = rho.clamp(0.0, rm);
    rm.powf(b) + b * r * rm.powf(b - 1.0)
}

/// Godunov flux of `ρ f(ρ)` from `up` into `down`.
#[inline]
fn lwr_flux(params: &ModelParams, up: f64, down: f64) -> f64 {
    let q = |r: f64| r * params.saturation(r);
    let c = 0.5 * params.rho_max;
    q(up.min(c)).min(q(down.max(c)))
}

/// Velocity, Godunov flux and rate on one face given the normal derivative of
/// φ and the `(ρ, |∇φ|)` states on either side (`lo` below/left, `hi`
/// above/right). A NaN gradient magnitude marks an exterior state.
#[inline]
fn face(
    params: &ModelParams,
    form: FluxForm,
    dphi: f64,
    lo: (f64, f64),
    hi: (f64, f64),
) -> (f64, f64, f64) {
    let s = -dphi;
    let (up, down) = if dphi <= 0.0 { (lo, hi) } else { (hi, lo) };
    let velocity = params.hamiltonian_pp(up.0) * s;
    match form {
        FluxForm::Mobility => {
            let flux = s * demand(params, up.0).min(supply(params, down.0));
            (
                velocity,
                flux,
                s.abs() * flux_lipschitz(params, lo.0.max(hi.0)),
            )
        }
        FluxForm::Eikonal => {
            let norm = if up.1.is_nan() {
                s.abs()
            } else {
                up.1.max(s.abs())
            };
            let nu = if norm > 0.0 { s / norm } else { 0.0 };
            let flux = nu * lwr_flux(params, up.0, down.0);
            (velocity, flux, nu.abs() * params.rho_max)
        }
    }
}

/// Normal derivative of φ on the two boundary faces of one axis, in the
/// direction of increasing index, using the potential ghost layer.
fn boundary_slopes(
    phi_gh: &GhostField,
    first: (isize, isize),
    last: (isize, isize),
    step: (isize, isize),
    h: f64,
) -> (f64, f64) {
    let lo = (phi_gh.get(first.0, first.1) - phi_gh.get(first.0 - step.0, first.1 - step.1)) / h;
    let hi = (phi_gh.get(last.0 + step.0, last.1 + step.1) - phi_gh.get(last.0, last.1)) / h;
    (lo, hi)
}

/// Face velocities `b = −f^β(ρ_up)∇φ·n̂`, fluxes and rates.
///
/// On an axis where ρ is periodic but φ is not, the shared face takes the
/// one-sided boundary slope of φ on the anchored (exit or inflow) edge, or the
/// average of both when both edges are anchored.
pub fn transport(
    rho: &ScalarField,
    phi: &ScalarField,
    bcs: &Boundaries,
    params: &ModelParams,
) -> Result<Transport, SolverError> {
    transport_with(rho, phi, bcs, params, FluxForm::Mobility)
}

/// [`transport`] with an explicit flux form.
pub fn transport_with(
    rho: &ScalarField,
    phi: &ScalarField,
    bcs: &Boundaries,
    params: &ModelParams,
    form: FluxForm,
) -> Result<Transport, SolverError> {
    rho.same_grid(phi)?;
    bcs.validate()?;
    let g = rho.grid;
    let (nx, ny) = (g.nx, g.ny);
    let (dx, dy) = (g.dx(), g.dy());
    let pg = fill_ghosts(phi, &bcs.potential, Quantity::Potential)?;
    let gn = match form {
        FluxForm::Mobility => ScalarField::zeros(g),
        FluxForm::Eikonal => godunov_gradient_norm(phi, &bcs.potential)?,
    };
    let cell = |i: usize, j: usize| (rho.at(i, j), gn.at(i, j));
    let mut vel = FaceField::zeros(g);
    let mut flux = FaceField::zeros(g);
    let mut rate = FaceField::zeros(g);
    let dens = &bcs.density;

    for j in 0..ny {
        for i in 1..nx {
            let dphi = (phi.at(i, j) - phi.at(i - 1, j)) / dx;
            let k = vel.ix(i, j);
            (vel.fx[k], flux.fx[k], rate.fx[k]) =
                face(params, form, dphi, cell(i - 1, j), cell(i, j));
        }
        let (lo_slope, hi_slope) = boundary_slopes(
            &pg,
            (0, j as isize),
            (nx as isize - 1, j as isize),
            (1, 0),
            dx,
        );
        let (k0, kn) = (vel.ix(0, j), vel.ix(nx, j));
        if dens.periodic_x() {
            let dphi = if bcs.potential.periodic_x() {
                (phi.at(0, j) - phi.at(nx - 1, j)) / dx
            } else {
                wrap_slope(bcs.potential.left, bcs.potential.right, lo_slope, hi_slope)
            };
            let fv = face(params, form, dphi, cell(nx - 1, j), cell(0, j));
            (vel.fx[k0], flux.fx[k0], rate.fx[k0]) = fv;
            (vel.fx[kn], flux.fx[kn], rate.fx[kn]) = fv;
        } else {
            (vel.fx[k0], flux.fx[k0], rate.fx[k0]) =
                edge_face(params, form, dens.left, lo_slope, None, Some(cell(0, j)));
            (vel.fx[kn], flux.fx[kn], rate.fx[kn]) = edge_face(
                params,
                form,
                dens.right,
                hi_slope,
                Some(cell(nx - 1, j)),
                None,
            );
        }
    }

    for i in 0..nx {
        for j in 1..ny {
            let dphi = (phi.at(i, j) - phi.at(i, j - 1)) / dy;
            let k = vel.iy(i, j);
            (vel.fy[k], flux.fy[k], rate.fy[k]) =
                face(params, form, dphi, cell(i, j - 1), cell(i, j));
        }
        let (lo_slope, hi_slope) = boundary_slopes(
            &pg,
            (i as isize, 0),
            (i as isize, ny as isize - 1),
            (0, 1),
            dy,
        );
        let (k0, kn) = (vel.iy(i, 0), vel.iy(i, ny));
        if dens.periodic_y() {
            let dphi = if bcs.potential.periodic_y() {
                (phi.at(i, 0) - phi.at(i, ny - 1)) / dy
            } else {
                wrap_slope(bcs.potential.bottom, bcs.potential.top, lo_slope, hi_slope)
            };
            let fv = face(params, form, dphi, cell(i, ny - 1), cell(i, 0));
            (vel.fy[k0], flux.fy[k0], rate.fy[k0]) = fv;
            (vel.fy[kn], flux.fy[kn], rate.fy[kn]) = fv;
        } else {
            (vel.fy[k0], flux.fy[k0], rate.fy[k0]) =
                edge_face(params, form, dens.bottom, lo_slope, None, Some(cell(i, 0)));
            (vel.fy[kn], flux.fy[kn], rate.fy[kn]) = edge_face(
                params,
                form,
                dens.top,
                hi_slope,
                Some(cell(i, ny - 1)),
                None,
            );
        }
    }
    Ok(Transport {
        velocity: vel,
        flux,
        rate,
    })
}

fn wrap_slope(lo: EdgeCondition, hi: EdgeCondition, lo_slope: f64, hi_slope: f64) -> f64 {
    match (lo.is_dirichlet(), hi.is_dirichlet()) {
        (true, true) => 0.5 * (lo_slope + hi_slope),
        (true, false) => lo_slope,
        (false, true) => hi_slope,
        (false, false) => 0.0,
    }
}

/// Face on a non-periodic density edge. Exactly one of `lo`/`hi` is the
/// interior cell; the other side is the exterior state.
fn edge_face(
    params: &ModelParams,
    form: FluxForm,
    cond: EdgeCondition,
    dphi: f64,
    lo: Option<(f64, f64)>,
    hi: Option<(f64, f64)>,
) -> (f64, f64, f64) {
    match cond {
        EdgeCondition::Wall | EdgeCondition::Periodic => (0.0, 0.0, 0.0),
        c => {
            let outside = c.face_value(Quantity::Density).unwrap_or(0.0);
            let outside = (outside, f64::NAN);
            face(
                params,
                form,
                dphi,
                lo.unwrap_or(outside),
                hi.unwrap_or(outside),
            )
        }
    }
}

/// Face velocities only.
pub fn transport_velocity(
    rho: &ScalarField,
    phi: &ScalarField,
    bcs: &Boundaries,
    params: &ModelParams,
) -> Result<FaceField, SolverError> {
    Ok(transport(rho, phi, bcs, params)?.velocity)
}

/// Largest step keeping the update a convex combination:
/// `safety / max_cells(Σ outgoing |b|/h + [explicit] 2σ(1/dx² + 1/dy²))`.
/// Returns `f64::INFINITY` when nothing moves.
pub fn cfl_max_dt(velocities: &FaceField, sigma: f64, mode: DiffusionMode, safety: f64) -> f64 {
    let g = velocities.grid;
    let (dx, dy) = (g.dx(), g.dy());
    let mut rate = 0.0_f64;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let out = (-velocities.fx[velocities.ix(i, j)]).max(0.0) / dx
                + velocities.fx[velocities.ix(i + 1, j)].max(0.0) / dx
                + (-velocities.fy[velocities.iy(i, j)]).max(0.0) / dy
                + velocities.fy[velocities.iy(i, j + 1)].max(0.0) / dy;
            rate = rate.max(out);
        }
    }
    if mode == DiffusionMode::Explicit {
        rate += 2.0 * sigma * (1.0 / (dx * dx) + 1.0 / (dy * dy));
    }
    if rate == 0.0 {
        f64::INFINITY
    } else {
        safety / rate
    }
}

/// Stable step for the Godunov update: besides [`cfl_max_dt`], every cell
/// must satisfy `dt·Σ_faces rate/h ≤ safety` (inflow and outflow faces both
/// count, since the flux depends on the densities on both sides).
pub fn transport_max_dt(tr: &Transport, sigma: f64, mode: DiffusionMode, safety: f64) -> f64 {
    let r = &tr.rate;
    let g = r.grid;
    let (dx, dy) = (g.dx(), g.dy());
    let mut rate = 0.0_f64;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let c = (r.fx[r.ix(i, j)] + r.fx[r.ix(i + 1, j)]) / dx
                + (r.fy[r.iy(i, j)] + r.fy[r.iy(i, j + 1)]) / dy;
            rate = rate.max(c);
        }
    }
    if mode == DiffusionMode::Explicit {
        rate += 2.0 * sigma * (1.0 / (dx * dx) + 1.0 / (dy * dy));
    }
    let godunov = if rate == 0.0 {
        f64::INFINITY
    } else {
        safety / rate
    };
    godunov.min(cfl_max_dt(&tr.velocity, sigma, mode, safety))
}

fn diffusive_flux(
    rho: &ScalarField,
    bcs: &Boundaries,
    sigma: f64,
) -> Result<FaceField, SolverError> {
    let g = rho.grid;
    let gh = fill_ghosts(rho, &bcs.density, Quantity::Density)?;
    let (dx, dy) = (g.dx(), g.dy());
    let mut out = FaceField::zeros(g);
    for j in 0..g.ny {
        for i in 0..=g.nx {
            let k = out.ix(i, j);
            let (ii, jj) = (i as isize, j as isize);
            out.fx[k] = -sigma * (gh.get(ii, jj) - gh.get(ii - 1, jj)) / dx;
        }
    }
    for j in 0..=g.ny {
        for i in 0..g.nx {
            let k = out.iy(i, j);
            let (ii, jj) = (i as isize, j as isize);
            out.fy[k] = -sigma * (gh.get(ii, jj) - gh.get(ii, jj - 1)) / dy;
        }
    }
    // Walls carry zero total flux.
    let d = &bcs.density;
    for j in 0..g.ny {
        if d.left == EdgeCondition::Wall {
            let k = out.ix(0, j);
            out.fx[k] = 0.0;
        }
        if d.right == EdgeCondition::Wall {
            let k = out.ix(g.nx, j);
            out.fx[k] = 0.0;
        }
    }
    for i in 0..g.nx {
        if d.bottom == EdgeCondition::Wall {
            let k = out.iy(i, 0);
            out.fy[k] = 0.0;
        }
        if d.top == EdgeCondition::Wall {
            let k = out.iy(i, g.ny);
            out.fy[k] = 0.0;
        }
    }
    Ok(out)
}

/// Scales every face flux entering a cell by that cell's share of its free
/// capacity, so no cell is pushed past `ρ_m` within the step. A face feeds at
/// most one cell, so the scaled field stays conservative, and lowering an
/// outflow only raises its upstream cell by what that cell's own limited
/// inflow allows.
fn limit_inflow(
    rho: &ScalarField,
    flux: &mut FaceField,
    dt: f64,
    rho_max: f64,
    spec: &BoundarySpec,
) {
    let g = rho.grid;
    let (dx, dy) = (g.dx(), g.dy());
    let mut theta = vec![1.0; g.len()];
    let mut limited = false;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let inflow = flux.fx[flux.ix(i, j)].max(0.0) / dx
                + (-flux.fx[flux.ix(i + 1, j)]).max(0.0) / dx
                + flux.fy[flux.iy(i, j)].max(0.0) / dy
                + (-flux.fy[flux.iy(i, j + 1)]).max(0.0) / dy;
            let room = (rho_max - rho.at(i, j)).max(0.0);
            if dt * inflow > room {
                theta[g.idx(i, j)] = room / (dt * inflow);
                limited = true;
            }
        }
    }
    if !limited {
        return;
    }
    // Cell receiving a flux `f` through face `k` of an axis with `n` cells.
    let receiver = |k: usize, f: f64, n: usize, periodic: bool| -> Option<usize> {
        if f > 0.0 {
            if k < n {
                Some(k)
            } else {
                periodic.then_some(0)
            }
        } else if k > 0 {
            Some(k - 1)
        } else {
            periodic.then_some(n - 1)
        }
    };
    let (px, py) = (spec.periodic_x(), spec.periodic_y());
    for j in 0..g.ny {
        for i in 0..=g.nx {
            let k = flux.ix(i, j);
            if let Some(r) = receiver(i, flux.fx[k], g.nx, px) {
                flux.fx[k] *= theta[g.idx(r, j)];
            }
        }
    }
    for j in 0..=g.ny {
        for i in 0..g.nx {
            let k = flux.iy(i, j);
            if let Some(r) = receiver(j, flux.fy[k], g.ny, py) {
                flux.fy[k] *= theta[g.idx(i, r)];
            }
        }
    }
}

fn apply_flux(rho: &ScalarField, flux: &FaceField, dt: f64) -> ScalarField {
    let div = flux.divergence();
    let mut out = rho.clone();
    for (v, d) in out.values.iter_mut().zip(&div.values) {
        *v -= dt * d;
    }
    out
}

fn check_sign(rho: &mut ScalarField) -> Result<(), SolverError> {
    for (index, v) in rho.values.iter_mut().enumerate() {
        if *v < 0.0 {
            if *v < -1e-12 {
                return Err(SolverError::NegativeDensity { index, value: *v });
            }
            *v = 0.0;
        }
    }
    Ok(())
}

/// One forward step of the density equation.
pub fn step_fp(
    rho_n: &ScalarField,
    phi: &ScalarField,
    dt: f64,
    params: &ModelParams,
    bcs: &Boundaries,
    config: &FpStepConfig,
) -> Result<ScalarField, SolverError> {
    let tr = transport_with(rho_n, phi, bcs, params, config.flux_form)?;
    step_fp_with(rho_n, &tr, dt, params, bcs, config)
}

/// Forward step reusing precomputed face transport.
pub fn step_fp_with(
    rho_n: &ScalarField,
    tr: &Transport,
    dt: f64,
    params: &ModelParams,
    bcs: &Boundaries,
    config: &FpStepConfig,
) -> Result<ScalarField, SolverError> {
    if !(dt > 0.0) {
        return Err(SolverError::Invalid(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let max_dt = transport_max_dt(tr, params.sigma, config.diffusion_mode, config.cfl_safety);
    if dt > max_dt * (1.0 + 1e-12) {
        return Err(SolverError::Cfl { dt, max_dt });
    }
    let mut flux = tr.advective_flux();
    let mut out = match config.diffusion_mode {
        DiffusionMode::Explicit => {
            if params.sigma > 0.0 {
                let d = diffusive_flux(rho_n, bcs, params.sigma)?;
                for (f, df) in flux.fx.iter_mut().zip(&d.fx) {
                    *f += df;
                }
                for (f, df) in flux.fy.iter_mut().zip(&d.fy) {
                    *f += df;
                }
            }
            limit_inflow(rho_n, &mut flux, dt, params.rho_max, &bcs.density);
            apply_flux(rho_n, &flux, dt)
        }
        DiffusionMode::Implicit => {
            limit_inflow(rho_n, &mut flux, dt, params.rho_max, &bcs.density);
            let advected = apply_flux(rho_n, &flux, dt);
            if params.sigma > 0.0 {
                let op = DiffusionOperator::new(
                    rho_n.grid,
                    bcs.density,
                    Quantity::Density,
                    1.0,
                    dt * params.sigma,
                )?;
                op.solve(&advected.values, Some(&advected.values), 1e-15)?
            } else {
                advected
            }
        }
    };
    check_sign(&mut out)?;
    Ok(out)
}

/// Number of equal substeps needed so each respects the CFL bound.
pub fn substeps(dt: f64, max_dt: f64) -> usize {
    if max_dt.is_infinite() || dt <= max_dt {
        1
    } else {
        (dt / max_dt).ceil() as usize
    }
}

/// Advances by `dt` with `φ` frozen, splitting into CFL-compliant substeps.
pub fn advance_fp(
    rho: &ScalarField,
    phi: &ScalarField,
    dt: f64,
    params: &ModelParams,
    bcs: &Boundaries,
    config: &FpStepConfig,
) -> Result<ScalarField, SolverError> {
    let mut cur = rho.clone();
    let mut remaining = dt;
    let mut n_left = {
        let tr = transport_with(&cur, phi, bcs, params, config.flux_form)?;
        substeps(
            dt,
            transport_max_dt(&tr, params.sigma, config.diffusion_mode, config.cfl_safety),
        )
    };
    while n_left > 0 {
        let tr = transport_with(&cur, phi, bcs, params, config.flux_form)?;
        let max_dt = transport_max_dt(&tr, params.sigma, config.diffusion_mode, config.cfl_safety);
        // Velocities depend on ρ, so the bound is rechecked at every substep.
        n_left = n_left.max(substeps(remaining, max_dt));
        let h = remaining / n_left as f64;
        cur = step_fp_with(&cur, &tr, h, params, bcs, config)?;
        remaining -= h;
        n_left -= 1;
    }
    Ok(cur)
}
