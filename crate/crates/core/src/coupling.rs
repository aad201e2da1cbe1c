//! Orchestration: quasi-stationary evolution, the forward–backward MFG fixed
//! point on the torus, energy diagnostics and parameter sweeps.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::error::SolverError;
use crate::fp::{step_fp_with, substeps, transport_max_dt, transport_with, FluxForm, FpStepConfig};
use crate::grid::{
    gradient_central, integrate, l1_distance, variance, Boundaries, BoundarySpec, EdgeCondition,
    Grid2D, Quantity, ScalarField,
};
use crate::hjb::{
    eikonal_rhs, solve_eikonal_sweeping, solve_viscous_stationary_hjb,
    solve_viscous_stationary_upwind, step_backward_hjb, StationaryHjbConfig, SweepingConfig,
    UpwindHjbConfig,
};
use crate::model::{norm_sq, ModelParams};

/// One row of per-step diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub mass: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub variance: f64,
    /// `∫ρ f^β |∇φ|²`
    pub kinetic: f64,
    /// `∫ρ f^{2−β}`
    pub potential: f64,
    /// `∫f^β |∇φ|²`
    pub grad_energy: f64,
}

impl DiagnosticsRow {
    pub fn compute(
        t: f64,
        rho: &ScalarField,
        phi: &ScalarField,
        params: &ModelParams,
        potential_spec: &BoundarySpec,
    ) -> Result<Self, SolverError> {
        let grad = gradient_central(phi, potential_spec, Quantity::Potential)?;
        let da = rho.grid.cell_area();
        let (mut kinetic, mut pot, mut ge) = (0.0, 0.0, 0.0);
        for (k, &r) in rho.values.iter().enumerate() {
            let fb = params.hamiltonian_pp(r);
            let g2 = norm_sq(grad.at(k));
            kinetic += r * fb * g2;
            pot += r * params.saturation_pow(r, 2.0 - params.beta);
            ge += fb * g2;
        }
        Ok(Self {
            t,
            mass: integrate(rho),
            rho_min: rho.min(),
            rho_max: rho.max(),
            variance: variance(rho),
            kinetic: kinetic * da,
            potential: pot * da,
            grad_energy: ge * da,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub rho: ScalarField,
    pub phi: ScalarField,
}

/// Snapshots at the configured cadence plus one diagnostics row per step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub diagnostics: Vec<DiagnosticsRow>,
}

/// How the value function is obtained from the current density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialSolver {
    /// Inviscid eikonal `|∇φ| = f^{1−β}` by fast sweeping (σ_HJB = 0).
    Sweeping(SweepingConfig),
    /// Viscous stationary HJB with σ_HJB = σ by lagged-gradient Picard.
    Viscous(StationaryHjbConfig),
    /// Viscous stationary HJB with σ_HJB = σ on the monotone upwind
    /// discretization, solved by nonlinear sweeping.
    ViscousUpwind(UpwindHjbConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuasiStationaryRun {
    pub params: ModelParams,
    pub grid: Grid2D,
    pub bcs: Boundaries,
    pub rho0: ScalarField,
    pub t_end: f64,
    pub dt: f64,
    pub snapshot_every: usize,
    pub fp: FpStepConfig,
    pub potential_solver: PotentialSolver,
    /// When set, every potential inflow edge is re-anchored to
    /// `φ_b = f^{1−β}(ρ̄)·(extent across the domain)` for this ρ̄, so the
    /// linear profile `f^{1−β}(ρ̄)(L − x)` stays an exact solution.
    pub inflow_reference_density: Option<f64>,
    /// Abort once `max ρ` exceeds this.
    pub density_bound: f64,
    /// Re-solve φ before every CFL substep of the density update instead of
    /// holding it fixed over the whole step.
    pub refresh_potential: bool,
    /// Upper bound on the substep length, on top of the stability limit.
    pub max_substep: Option<f64>,
}

impl QuasiStationaryRun {
    /// Corridor `[0,4]×[0,2]`, ρ periodic in x with walls in y, φ = 0 on the
    /// right edge and reflecting elsewhere; initial density
    /// `0.5 + 0.2·exp(−10|x − (1,1)|²)`, σ = 0.01, dt = 0.05.
    ///
    /// Substeps are capped at `h/10` with φ refreshed before each one. A φ
    /// held fixed over a full step lets density lanes grow along the
    /// potential's ridges.
    pub fn corridor(beta: f64, spacing: f64, t_end: f64) -> Result<Self, SolverError> {
        let params = ModelParams::new(beta, 1.0, 0.01)?;
        let grid = Grid2D::with_spacing(4.0, 2.0, spacing)?;
        let rho0 = gaussian_bump(grid, 0.5, 0.2, (1.0, 1.0), 10.0);
        let mut run = Self {
            params,
            grid,
            bcs: corridor_boundaries(EdgeCondition::Wall),
            rho0,
            t_end,
            dt: 0.05,
            snapshot_every: 20,
            fp: FpStepConfig {
                flux_form: FluxForm::Eikonal,
                ..FpStepConfig::default()
            },
            potential_solver: PotentialSolver::Sweeping(SweepingConfig::default()),
            inflow_reference_density: Some(0.5),
            density_bound: params.rho_max + 1e-8,
            refresh_potential: true,
            max_substep: Some(0.1 * spacing),
        };
        run.reanchor();
        Ok(run)
    }

    /// Replaces the reflecting left potential edge with a Dirichlet anchor
    /// at `f^{1−β}(0.5)·L`. The linear profile is still exact for uniform
    /// 0.5, but the anchor bends characteristics near the left edge once the
    /// density is not uniform.
    pub fn anchored(mut self) -> Self {
        self.bcs.potential.left = EdgeCondition::Inflow {
            rho_b: 0.5,
            phi_b: 0.0,
        };
        self.inflow_reference_density = Some(0.5);
        self.reanchor();
        self
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        self.params.validate()?;
        self.bcs.validate()?;
        if self.rho0.grid != self.grid {
            return Err(SolverError::MeshMismatch(
                "rho0 is not on the run grid".into(),
            ));
        }
        if !(self.dt > 0.0 && self.t_end >= 0.0) {
            return Err(SolverError::Invalid("need dt > 0 and t_end >= 0".into()));
        }
        if self.snapshot_every == 0 {
            return Err(SolverError::Invalid("snapshot_every must be >= 1".into()));
        }
        let report = check_assumptions(
            &self.rho0,
            &[],
            &self.params,
            AssumptionMode::QuasiStationary,
        );
        if !report.pass {
            return Err(SolverError::Invalid(format!(
                "initial density outside [0, rho_max] at {} cells",
                report.violations.len()
            )));
        }
        Ok(())
    }

    /// Recomputes inflow anchors from `inflow_reference_density`.
    pub fn reanchor(&mut self) {
        if let Some(rho_bar) = self.inflow_reference_density {
            let s = self.params.eikonal_speed(rho_bar);
            let p = &mut self.bcs.potential;
            for (edge, extent) in [
                (&mut p.left, self.grid.lx),
                (&mut p.right, self.grid.lx),
                (&mut p.bottom, self.grid.ly),
                (&mut p.top, self.grid.ly),
            ] {
                if let EdgeCondition::Inflow { rho_b, .. } = *edge {
                    *edge = EdgeCondition::Inflow {
                        rho_b,
                        phi_b: s * extent,
                    };
                }
            }
        }
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        let mut run = self.clone();
        run.params = run.params.with_beta(beta);
        run.reanchor();
        run
    }

    pub fn with_sigma(&self, sigma: f64) -> Self {
        let mut run = self.clone();
        run.params = run.params.with_sigma(sigma);
        run
    }

    /// Value function for the density `rho`.
    pub fn solve_potential(
        &self,
        rho: &ScalarField,
        warm_start: Option<&ScalarField>,
    ) -> Result<ScalarField, SolverError> {
        let eikonal = || {
            solve_eikonal_sweeping(
                &eikonal_rhs(rho, &self.params),
                &self.bcs.potential,
                &SweepingConfig::default(),
            )
        };
        match self.potential_solver {
            PotentialSolver::Sweeping(cfg) => {
                solve_eikonal_sweeping(&eikonal_rhs(rho, &self.params), &self.bcs.potential, &cfg)
            }
            PotentialSolver::Viscous(cfg) => {
                let init = match warm_start {
                    Some(phi) => phi.clone(),
                    None => eikonal()?,
                };
                solve_viscous_stationary_hjb(rho, &self.params, &self.bcs.potential, &cfg, &init)
            }
            PotentialSolver::ViscousUpwind(cfg) => {
                let init = match warm_start {
                    Some(phi) => phi.clone(),
                    None => eikonal()?,
                };
                solve_viscous_stationary_upwind(rho, &self.params, &self.bcs.potential, &cfg, &init)
            }
        }
    }

    /// Density after one macroscopic step, split into CFL substeps. `phi`
    /// is the value function for `rho`; with `refresh_potential` it is
    /// re-solved for the current density before each later substep.
    pub fn advance_density(
        &self,
        rho: &ScalarField,
        phi: &ScalarField,
    ) -> Result<ScalarField, SolverError> {
        let cfg = &self.fp;
        let mut cur = rho.clone();
        let mut cur_phi = phi.clone();
        let mut remaining = self.dt;
        let mut first = true;
        while remaining > 0.0 {
            if !first && self.refresh_potential {
                cur_phi = self.solve_potential(&cur, Some(&cur_phi))?;
            }
            first = false;
            let tr = transport_with(&cur, &cur_phi, &self.bcs, &self.params, cfg.flux_form)?;
            let max_dt =
                transport_max_dt(&tr, self.params.sigma, cfg.diffusion_mode, cfg.cfl_safety)
                    .min(self.max_substep.unwrap_or(f64::INFINITY));
            let n = substeps(remaining, max_dt);
            let h = if n == 1 {
                remaining
            } else {
                remaining / n as f64
            };
            cur = step_fp_with(&cur, &tr, h, &self.params, &self.bcs, cfg)?;
            remaining = if n == 1 { 0.0 } else { remaining - h };
        }
        Ok(cur)
    }
}

/// ρ periodic in x with walls in y; φ has an exit on the right and `left`
/// on the left.
pub fn corridor_boundaries(left: EdgeCondition) -> Boundaries {
    Boundaries {
        density: BoundarySpec {
            left: EdgeCondition::Periodic,
            right: EdgeCondition::Periodic,
            bottom: EdgeCondition::Wall,
            top: EdgeCondition::Wall,
        },
        potential: BoundarySpec {
            left,
            right: EdgeCondition::Exit,
            bottom: EdgeCondition::Wall,
            top: EdgeCondition::Wall,
        },
    }
}

/// `background + amplitude·exp(−rate·|x − center|²)` at cell centers.
pub fn gaussian_bump(
    grid: Grid2D,
    background: f64,
    amplitude: f64,
    center: (f64, f64),
    rate: f64,
) -> ScalarField {
    ScalarField::from_fn(grid, |x, y| {
        background + amplitude * (-rate * ((x - center.0).powi(2) + (y - center.1).powi(2))).exp()
    })
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid run: {0}")]
    Invalid(SolverError),
    #[error("solver failure at step {step}: {source}")]
    Solver {
        step: usize,
        #[source]
        source: SolverError,
        partial: Box<Trajectory>,
    },
    #[error("density bound violated at step {step}: max rho = {value}")]
    DensityBound {
        step: usize,
        value: f64,
        partial: Box<Trajectory>,
    },
}

impl RunError {
    pub fn partial(&self) -> Option<&Trajectory> {
        match self {
            Self::Invalid(_) => None,
            Self::Solver { partial, .. } | Self::DensityBound { partial, .. } => Some(partial),
        }
    }
}

/// Quasi-stationary evolution: at each step solve the stationary value
/// equation for the current density, record diagnostics, then advance the
/// density by one step. Rows are recorded at `t_0 … t_N`.
pub fn run_quasi_stationary(run: &QuasiStationaryRun) -> Result<Trajectory, RunError> {
    run_quasi_stationary_with(run, |_, _, _| Ok(()))
}

/// Same loop with a hook called as `(step, rho, phi)` before each density
/// advance (and once at the final time).
pub fn run_quasi_stationary_with<F>(
    run: &QuasiStationaryRun,
    mut hook: F,
) -> Result<Trajectory, RunError>
where
    F: FnMut(usize, &ScalarField, &ScalarField) -> Result<(), SolverError>,
{
    run.validate().map_err(RunError::Invalid)?;
    let mut traj = Trajectory::default();
    let mut rho = run.rho0.clone();
    let mut phi: Option<ScalarField> = None;
    let n = run.steps();
    for step in 0..=n {
        let t = step as f64 * run.dt;
        let fail = |traj: &Trajectory, source| RunError::Solver {
            step,
            source,
            partial: Box::new(traj.clone()),
        };
        let new_phi = match run.solve_potential(&rho, phi.as_ref()) {
            Ok(p) => p,
            Err(e) => return Err(fail(&traj, e)),
        };
        match DiagnosticsRow::compute(t, &rho, &new_phi, &run.params, &run.bcs.potential) {
            Ok(row) => traj.diagnostics.push(row),
            Err(e) => return Err(fail(&traj, e)),
        }
        if step % run.snapshot_every == 0 || step == n {
            traj.snapshots.push(Snapshot {
                step,
                t,
                rho: rho.clone(),
                phi: new_phi.clone(),
            });
        }
        if let Err(e) = hook(step, &rho, &new_phi) {
            return Err(fail(&traj, e));
        }
        if step == n {
            break;
        }
        rho = match run.advance_density(&rho, &new_phi) {
            Ok(r) => r,
            Err(e) => return Err(fail(&traj, e)),
        };
        let max = rho.max();
        if max > run.density_bound {
            return Err(RunError::DensityBound {
                step: step + 1,
                value: max,
                partial: Box::new(traj),
            });
        }
        phi = Some(new_phi);
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardConfig {
    pub damping: f64,
    pub tolerance: f64,
    pub max_outer: usize,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            damping: 0.5,
            tolerance: 1e-6,
            max_outer: 200,
        }
    }
}

/// Time-dependent MFG on the flat torus with terminal cost `phi_terminal`.
#[derive(Debug, Clone, PartialEq)]
pub struct MfgProblem {
    pub params: ModelParams,
    pub grid: Grid2D,
    pub rho0: ScalarField,
    pub phi_terminal: ScalarField,
    pub t_end: f64,
    pub dt: f64,
    pub picard: PicardConfig,
    pub fp: FpStepConfig,
}

impl MfgProblem {
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn bcs(&self) -> Boundaries {
        Boundaries::torus()
    }

    /// `32×16` torus over `[0,4]×[0,2]` (scaled by `refine`), β = 2, σ = 0.05,
    /// Gaussian initial density, `φ_T = 0.25(1 − cos(2πx/4))`, T = 1,
    /// dt = 0.02/refine, θ = 0.5.
    pub fn benchmark(refine: usize) -> Result<Self, SolverError> {
        let grid = Grid2D::new(32 * refine, 16 * refine, 4.0, 2.0)?;
        Ok(Self {
            params: ModelParams::new(2.0, 1.0, 0.05)?,
            grid,
            rho0: gaussian_bump(grid, 0.5, 0.2, (1.0, 1.0), 10.0),
            phi_terminal: cosine_terminal_cost(grid, 0.25),
            t_end: 1.0,
            dt: 0.02 / refine as f64,
            picard: PicardConfig::default(),
            fp: FpStepConfig::default(),
        })
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        self.params.validate()?;
        if self.rho0.grid != self.grid || self.phi_terminal.grid != self.grid {
            return Err(SolverError::MeshMismatch(
                "initial/terminal data grid".into(),
            ));
        }
        if !(self.dt > 0.0 && self.t_end > 0.0) {
            return Err(SolverError::Invalid("need dt > 0 and t_end > 0".into()));
        }
        let p = &self.picard;
        if !(p.damping > 0.0 && p.damping <= 1.0 && p.tolerance > 0.0 && p.max_outer > 0) {
            return Err(SolverError::Invalid("invalid Picard settings".into()));
        }
        let report = check_assumptions(
            &self.rho0,
            &self.phi_terminal.values,
            &self.params,
            AssumptionMode::Mfg,
        );
        if !report.pass {
            return Err(SolverError::Invalid(format!(
                "initial density must lie strictly inside (0, rho_max); {} violating cells",
                report.violations.len()
            )));
        }
        Ok(())
    }
}

/// `amplitude·(1 − cos(2πx/lx))`.
pub fn cosine_terminal_cost(grid: Grid2D, amplitude: f64) -> ScalarField {
    let lx = grid.lx;
    ScalarField::from_fn(grid, |x, _| {
        amplitude * (1.0 - (2.0 * std::f64::consts::PI * x / lx).cos())
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MfgSolution {
    pub dt: f64,
    /// Density at `t_0 … t_N`, forward-solved from the returned φ.
    pub rho: Vec<ScalarField>,
    /// Value function at `t_0 … t_N`, backward-solved from the previous iterate.
    pub phi: Vec<ScalarField>,
    pub outer_residuals: Vec<f64>,
}

impl MfgSolution {
    pub fn times(&self) -> Vec<f64> {
        (0..self.rho.len()).map(|n| n as f64 * self.dt).collect()
    }
}

#[derive(Debug, Error)]
pub enum MfgError {
    #[error("invalid MFG problem: {0}")]
    Invalid(SolverError),
    #[error("solver failure in outer iteration {iteration}: {source}")]
    Solver {
        iteration: usize,
        #[source]
        source: SolverError,
    },
    #[error("Picard iteration did not converge in {} outer iterations (last residual {:e})", .residuals.len(), .residuals.last().copied().unwrap_or(f64::NAN))]
    NotConverged { residuals: Vec<f64> },
}

fn backward_pass(
    problem: &MfgProblem,
    rho_path: &[ScalarField],
) -> Result<Vec<ScalarField>, SolverError> {
    let n = problem.steps();
    let spec = problem.bcs().potential;
    let mut phi = vec![problem.phi_terminal.clone(); n + 1];
    for k in (0..n).rev() {
        phi[k] = step_backward_hjb(
            &phi[k + 1],
            &rho_path[k + 1],
            problem.dt,
            &problem.params,
            &spec,
        )?;
    }
    Ok(phi)
}

fn forward_pass(
    problem: &MfgProblem,
    phi_path: &[ScalarField],
) -> Result<Vec<ScalarField>, SolverError> {
    let n = problem.steps();
    let bcs = problem.bcs();
    let mut rho = Vec::with_capacity(n + 1);
    rho.push(problem.rho0.clone());
    for k in 0..n {
        let next = crate::fp::advance_fp(
            &rho[k],
            &phi_path[k],
            problem.dt,
            &problem.params,
            &bcs,
            &problem.fp,
        )?;
        rho.push(next);
    }
    Ok(rho)
}

/// Damped fixed point: march φ backward from `φ_T` against the current density
/// path, march ρ forward from `ρ_0` with that φ, then relax
/// `ρ ← (1−θ)ρ + θρ_new` in space-time until `max_t ‖Δρ_t‖_{L¹} < tol`.
pub fn solve_mfg_picard(problem: &MfgProblem) -> Result<MfgSolution, MfgError> {
    problem.validate().map_err(MfgError::Invalid)?;
    let n = problem.steps();
    let theta = problem.picard.damping;
    let mut rho_path = vec![problem.rho0.clone(); n + 1];
    let mut residuals = Vec::new();
    for iteration in 0..problem.picard.max_outer {
        let wrap = |source| MfgError::Solver { iteration, source };
        let phi_path = backward_pass(problem, &rho_path).map_err(wrap)?;
        let rho_new = forward_pass(problem, &phi_path).map_err(wrap)?;
        let mut residual = 0.0_f64;
        for (cur, new) in rho_path.iter_mut().zip(&rho_new) {
            let mut relaxed = cur.clone();
            for (r, v) in relaxed.values.iter_mut().zip(&new.values) {
                *r = (1.0 - theta) * *r + theta * v;
            }
            residual = residual.max(l1_distance(&relaxed, cur).map_err(|e| wrap(e.into()))?);
            *cur = relaxed;
        }
        residuals.push(residual);
        if residual < problem.picard.tolerance {
            return Ok(MfgSolution {
                dt: problem.dt,
                rho: rho_new,
                phi: phi_path,
                outer_residuals: residuals,
            });
        }
    }
    Err(MfgError::NotConverged { residuals })
}

/// Terms of `⟨φ(0),ρ₀⟩ = ⟨ρ(T),φ_T⟩ + ∫∫ρ(H_p·∇φ − H)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBalance {
    pub initial_pairing: f64,
    pub terminal_pairing: f64,
    /// Left-endpoint time quadrature of `∫ρ(H_p·∇φ − H)`; nonnegative.
    pub dissipation: f64,
    pub residual: f64,
}

/// Residual of the energy identity on a common space-time mesh.
pub fn energy_identity_residual(
    rho_traj: &[ScalarField],
    phi_traj: &[ScalarField],
    rho0: &ScalarField,
    phi_terminal: &ScalarField,
    params: &ModelParams,
    dt: f64,
    potential_spec: &BoundarySpec,
) -> Result<EnergyBalance, SolverError> {
    if rho_traj.len() != phi_traj.len() || rho_traj.is_empty() {
        return Err(SolverError::MeshMismatch(format!(
            "{} density vs {} potential time levels",
            rho_traj.len(),
            phi_traj.len()
        )));
    }
    let grid = rho0.grid;
    if rho_traj
        .iter()
        .chain(phi_traj)
        .chain([phi_terminal])
        .any(|f| f.grid != grid)
    {
        return Err(SolverError::MeshMismatch(
            "fields on different grids".into(),
        ));
    }
    let da = grid.cell_area();
    let pair = |a: &ScalarField, b: &ScalarField| -> f64 {
        a.values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| x * y)
            .sum::<f64>()
            * da
    };
    let initial_pairing = pair(&phi_traj[0], rho0);
    let terminal_pairing = pair(&rho_traj[rho_traj.len() - 1], phi_terminal);
    let mut dissipation = 0.0;
    for (rho, phi) in rho_traj.iter().zip(phi_traj).take(rho_traj.len() - 1) {
        let grad = gradient_central(phi, potential_spec, Quantity::Potential)?;
        let mut s = 0.0;
        for (k, &r) in rho.values.iter().enumerate() {
            let p = grad.at(k);
            let integrand =
                crate::model::dot(params.hamiltonian_p(r, p), p) - params.hamiltonian(r, p);
            debug_assert!(integrand >= -1e-12 || r > params.rho_max);
            s += r * integrand;
        }
        dissipation += dt * s * da;
    }
    if dissipation < 0.0 {
        return Err(SolverError::Invalid(format!(
            "accumulated energy integrand is negative: {dissipation}"
        )));
    }
    Ok(EnergyBalance {
        initial_pairing,
        terminal_pairing,
        dissipation,
        residual: initial_pairing - terminal_pairing - dissipation,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViscosityDistance {
    pub sigma_from: f64,
    pub sigma_to: f64,
    pub rho_l1: f64,
    pub phi_l1: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ViscositySweep {
    pub distances: Vec<ViscosityDistance>,
    pub failures: Vec<(f64, String)>,
}

impl ViscositySweep {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("sigma_from,sigma_to,rho_l1,phi_l1\n");
        for d in &self.distances {
            s.push_str(&format!(
                "{},{},{},{}\n",
                crate::io::fmt15(d.sigma_from),
                crate::io::fmt15(d.sigma_to),
                crate::io::fmt15(d.rho_l1),
                crate::io::fmt15(d.phi_l1)
            ));
        }
        s
    }
}

fn max_snapshot_distance(a: &Trajectory, b: &Trajectory) -> Result<(f64, f64), SolverError> {
    if a.snapshots.len() != b.snapshots.len() {
        return Err(SolverError::MeshMismatch("snapshot counts differ".into()));
    }
    let mut out = (0.0_f64, 0.0_f64);
    for (sa, sb) in a.snapshots.iter().zip(&b.snapshots) {
        out.0 = out.0.max(l1_distance(&sa.rho, &sb.rho)?);
        out.1 = out.1.max(l1_distance(&sa.phi, &sb.phi)?);
    }
    Ok(out)
}

/// Runs the same problem for each σ (in parallel) and reports
/// `d_i = max_t ‖ρ^{σ_i}_t − ρ^{σ_{i+1}}_t‖_{L¹}` and the same for φ over
/// common snapshot times. Failed members are recorded and skipped.
pub fn vanishing_viscosity_sweep(
    base: &QuasiStationaryRun,
    sigmas: &[f64],
) -> Result<ViscositySweep, SolverError> {
    if sigmas.iter().any(|s| !(*s > 0.0)) {
        return Err(SolverError::Invalid("sigma values must be positive".into()));
    }
    if sigmas.windows(2).any(|w| w[1] > w[0]) {
        return Err(SolverError::Invalid("sigma list must be decreasing".into()));
    }
    let runs: Vec<Result<Trajectory, RunError>> = sigmas
        .par_iter()
        .map(|&s| run_quasi_stationary(&base.with_sigma(s)))
        .collect();
    let mut sweep = ViscositySweep::default();
    for (s, r) in sigmas.iter().zip(&runs) {
        if let Err(e) = r {
            sweep.failures.push((*s, e.to_string()));
        }
    }
    for i in 0..sigmas.len().saturating_sub(1) {
        if let (Ok(a), Ok(b)) = (&runs[i], &runs[i + 1]) {
            let (rho_l1, phi_l1) = max_snapshot_distance(a, b)?;
            sweep.distances.push(ViscosityDistance {
                sigma_from: sigmas[i],
                sigma_to: sigmas[i + 1],
                rho_l1,
                phi_l1,
            });
        }
    }
    Ok(sweep)
}

#[derive(Debug)]
pub struct BetaSweep {
    pub runs: Vec<(f64, Result<Trajectory, RunError>)>,
}

impl BetaSweep {
    /// Variance and max-density series side by side, one column pair per β.
    pub fn comparison_csv(&self) -> String {
        let mut s = String::from("t");
        for (beta, _) in &self.runs {
            s.push_str(&format!(",variance_beta_{beta},rho_max_beta_{beta}"));
        }
        s.push('\n');
        let rows = |r: &Result<Trajectory, RunError>| -> Vec<DiagnosticsRow> {
            match r {
                Ok(t) => t.diagnostics.clone(),
                Err(e) => e
                    .partial()
                    .map(|t| t.diagnostics.clone())
                    .unwrap_or_default(),
            }
        };
        let all: Vec<Vec<DiagnosticsRow>> = self.runs.iter().map(|(_, r)| rows(r)).collect();
        let n = all.iter().map(Vec::len).max().unwrap_or(0);
        for k in 0..n {
            let t = all
                .iter()
                .find_map(|r| r.get(k).map(|row| row.t))
                .unwrap_or(f64::NAN);
            s.push_str(&crate::io::fmt15(t));
            for r in &all {
                match r.get(k) {
                    Some(row) => s.push_str(&format!(
                        ",{},{}",
                        crate::io::fmt15(row.variance),
                        crate::io::fmt15(row.rho_max)
                    )),
                    None => s.push_str(",,"),
                }
            }
            s.push('\n');
        }
        s
    }
}

/// Runs the quasi-stationary problem for each β with shared ρ₀ and σ.
pub fn beta_sweep(base: &QuasiStationaryRun, betas: &[f64]) -> BetaSweep {
    let runs = betas
        .par_iter()
        .map(|&b| (b, run_quasi_stationary(&base.with_beta(b))))
        .collect();
    BetaSweep { runs }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssumptionMode {
    /// `0 ≤ ρ₀ ≤ ρ_m`.
    QuasiStationary,
    /// `0 < ρ₀ < ρ_m`.
    Mfg,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub pass: bool,
    /// Lower bound `c₀ = min φ` of the supplied potential data (`None` if empty).
    pub c0: Option<f64>,
    /// `(i, j, ρ₀)` of every violating cell.
    pub violations: Vec<(usize, usize, f64)>,
}

/// Checks the bounds on `ρ₀` and records `c₀ = min φ_data`.
pub fn check_assumptions(
    rho0: &ScalarField,
    phi_data: &[f64],
    params: &ModelParams,
    mode: AssumptionMode,
) -> AssumptionReport {
    let g = rho0.grid;
    let rm = params.rho_max;
    let mut violations = Vec::new();
    for j in 0..g.ny {
        for i in 0..g.nx {
            let r = rho0.at(i, j);
            let ok = match mode {
                AssumptionMode::QuasiStationary => (0.0..=rm).contains(&r),
                AssumptionMode::Mfg => r > 0.0 && r < rm,
            };
            if !ok {
                violations.push((i, j, r));
            }
        }
    }
    let c0 = phi_data.iter().copied().reduce(f64::min);
    let finite_phi = phi_data.iter().all(|v| v.is_finite());
    AssumptionReport {
        pass: violations.is_empty() && finite_phi,
        c0,
        violations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MonotonicityReport {
    pub sampled: usize,
    pub psd: usize,
    pub not_psd: usize,
    /// Cells skipped because ρ = 0 there.
    pub skipped: usize,
}

/// Samples `n` cells (seeded) and tests the monotonicity matrix at
/// `(ρ, ∇φ)` there.
pub fn monotonicity_flags(
    rho: &ScalarField,
    phi: &ScalarField,
    params: &ModelParams,
    potential_spec: &BoundarySpec,
    n: usize,
    seed: u64,
) -> Result<MonotonicityReport, SolverError> {
    let grad = gradient_central(phi, potential_spec, Quantity::Potential)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = MonotonicityReport::default();
    let len = rho.values.len() as u64;
    for _ in 0..n {
        let k = (rng.next_u64() % len) as usize;
        let r = rho.values[k];
        if r <= 0.0 {
            report.skipped += 1;
            continue;
        }
        report.sampled += 1;
        if params.monotonicity_matrix(r, grad.at(k))?.is_psd(1e-12) {
            report.psd += 1;
        } else {
            report.not_psd += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assumption_report_lists_violations() {
        let g = Grid2D::new(4, 4, 1.0, 1.0).unwrap();
        let params = ModelParams::new(2.0, 1.0, 0.01).unwrap();
        let mut rho = ScalarField::constant(g, 0.5);
        let ok = check_assumptions(&rho, &[0.0, 8.0], &params, AssumptionMode::Mfg);
        assert!(ok.pass && ok.violations.is_empty());
        assert_eq!(ok.c0, Some(0.0));
        rho.values[5] = 1.0;
        let strict = check_assumptions(&rho, &[], &params, AssumptionMode::Mfg);
        assert!(!strict.pass);
        assert_eq!(strict.violations, vec![(1, 1, 1.0)]);
        let loose = check_assumptions(&rho, &[], &params, AssumptionMode::QuasiStationary);
        assert!(loose.pass && loose.violations.is_empty());
    }

    #[test]
    fn corridor_anchor_tracks_beta() {
        let run = QuasiStationaryRun::corridor(2.0, 0.1, 1.0).unwrap();
        assert_eq!(run.bcs.potential.left, EdgeCondition::Wall);
        let run = run.anchored();
        assert_eq!(
            run.bcs.potential.left,
            EdgeCondition::Inflow {
                rho_b: 0.5,
                phi_b: 8.0
            }
        );
        let run0 = run.with_beta(0.0);
        assert_eq!(
            run0.bcs.potential.left,
            EdgeCondition::Inflow {
                rho_b: 0.5,
                phi_b: 2.0
            }
        );
    }

    #[test]
    fn sweep_input_validation() {
        let run = QuasiStationaryRun::corridor(2.0, 0.25, 0.1).unwrap();
        assert!(vanishing_viscosity_sweep(&run, &[0.01, 0.02]).is_err());
        assert!(vanishing_viscosity_sweep(&run, &[0.01, 0.0]).is_err());
        let single = vanishing_viscosity_sweep(&run, &[0.01]).unwrap();
        assert!(single.distances.is_empty());
        let same = vanishing_viscosity_sweep(&run, &[0.01, 0.01]).unwrap();
        assert_eq!(same.distances[0].rho_l1, 0.0);
        assert_eq!(same.distances[0].phi_l1, 0.0);
    }

    #[test]
    fn energy_identity_rejects_mesh_mismatch() {
        let g = Grid2D::new(4, 4, 1.0, 1.0).unwrap();
        let params = ModelParams::new(2.0, 1.0, 0.01).unwrap();
        let f = ScalarField::constant(g, 0.5);
        let err = energy_identity_residual(
            &[f.clone(), f.clone()],
            std::slice::from_ref(&f),
            &f,
            &f,
            &params,
            0.1,
            &BoundarySpec::periodic(),
        );
        assert!(matches!(err, Err(SolverError::MeshMismatch(_))));
    }

    #[test]
    fn zero_mass_energy_terms_vanish() {
        let g = Grid2D::new(8, 4, 2.0, 1.0).unwrap();
        let params = ModelParams::new(1.0, 1.0, 0.01).unwrap();
        let zero = ScalarField::zeros(g);
        let phi = cosine_terminal_cost(g, 0.3);
        let e = energy_identity_residual(
            &[zero.clone(), zero.clone()],
            &[phi.clone(), phi.clone()],
            &zero,
            &phi,
            &params,
            0.1,
            &BoundarySpec::periodic(),
        )
        .unwrap();
        assert_eq!(
            (
                e.initial_pairing,
                e.terminal_pairing,
                e.dissipation,
                e.residual
            ),
            (0.0, 0.0, 0.0, 0.0)
        );
    }
}
