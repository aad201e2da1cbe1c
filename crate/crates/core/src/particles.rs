//! Microscopic agents: Euler–Maruyama integration of `dx = u dt + √(2σ) dW`
//! under the feedback `u = −f^β(ρ)∇φ`, histogram density estimates and Monte
//! Carlo cost evaluation.
//!
//! Every particle draws from its own ChaCha8 stream (`set_stream(index)`)
//! positioned by the step counter, so results do not depend on how rayon
//! schedules the work.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::coupling::{run_quasi_stationary_with, QuasiStationaryRun, RunError};
use crate::error::SolverError;
use crate::grid::{
    gradient_central, integrate, l1_distance, Boundaries, BoundarySpec, EdgeCondition, Grid2D,
    Quantity, ScalarField, VectorField,
};
use crate::model::ModelParams;

/// Words reserved per (particle, step) in a stream; far more than two
/// normals ever consume.
const STEP_STRIDE: u128 = 1 << 16;
/// Particles per histogram partial. Fixed so the merge order never depends on
/// the thread count.
const HIST_CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    pub positions: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub alive: Vec<bool>,
    pub rng_seed: u64,
    /// Number of steps taken; selects the position in each stream.
    pub step: u64,
}

impl ParticleEnsemble {
    /// Uniform weights `1/N`, all alive.
    pub fn new(positions: Vec<[f64; 2]>, rng_seed: u64) -> Result<Self, SolverError> {
        if positions.is_empty() {
            return Err(SolverError::Invalid(
                "ensemble needs at least one particle".into(),
            ));
        }
        if let Some(index) = positions
            .iter()
            .position(|p| !(p[0].is_finite() && p[1].is_finite()))
        {
            return Err(SolverError::NonFiniteParticle { index });
        }
        let n = positions.len();
        Ok(Self {
            positions,
            weights: vec![1.0 / n as f64; n],
            alive: vec![true; n],
            rng_seed,
            step: 0,
        })
    }

    /// `n` particles drawn from the piecewise-constant density `rho`: a cell
    /// is picked with probability proportional to its mass, then a uniform
    /// point inside it.
    pub fn sample(rho: &ScalarField, n: usize, seed: u64) -> Result<Self, SolverError> {
        let total: f64 = rho.values.iter().map(|v| v.max(0.0)).sum();
        if !(total > 0.0) || n == 0 {
            return Err(SolverError::Invalid(
                "sampling needs positive mass and n >= 1".into(),
            ));
        }
        let mut cdf = Vec::with_capacity(rho.values.len());
        let mut acc = 0.0;
        for v in &rho.values {
            acc += v.max(0.0) / total;
            cdf.push(acc);
        }
        let g = rho.grid;
        let key = stream_key(seed);
        let positions = (0..n)
            .into_par_iter()
            .map(|p| {
                // Stream offset by one past any stepping stream.
                let mut rng = particle_rng(&key, p as u64, u64::MAX);
                let u: f64 = rng.random();
                let k = cdf.partition_point(|&c| c < u).min(cdf.len() - 1);
                let (i, j) = (k % g.nx, k / g.nx);
                let (ox, oy): (f64, f64) = (rng.random(), rng.random());
                [(i as f64 + ox) * g.dx(), (j as f64 + oy) * g.dy()]
            })
            .collect();
        Self::new(positions, seed)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn alive_count(&self) -> usize {
        self.alive.iter().filter(|a| **a).count()
    }

    /// Fraction of the total weight still inside the domain.
    pub fn alive_fraction(&self) -> f64 {
        let total: f64 = self.weights.iter().sum();
        let alive: f64 = self
            .weights
            .iter()
            .zip(&self.alive)
            .filter(|(_, a)| **a)
            .map(|(w, _)| w)
            .sum();
        alive / total
    }

    /// CSV with columns `x,y,alive`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,alive\n");
        for (p, a) in self.positions.iter().zip(&self.alive) {
            s.push_str(&format!(
                "{},{},{}\n",
                crate::io::fmt15(p[0]),
                crate::io::fmt15(p[1]),
                u8::from(*a)
            ));
        }
        s
    }
}

fn stream_key(seed: u64) -> [u8; 32] {
    ChaCha8Rng::seed_from_u64(seed).get_seed()
}

fn particle_rng(key: &[u8; 32], index: u64, step: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::from_seed(*key);
    rng.set_stream(index);
    rng.set_word_pos(step as u128 * STEP_STRIDE);
    rng
}

/// Bilinear interpolation between cell centers. Periodic axes wrap; other
/// axes hold the value of the outermost center.
#[derive(Debug, Clone, Copy)]
struct Interp {
    grid: Grid2D,
    periodic: [bool; 2],
}

impl Interp {
    fn new(grid: Grid2D, spec: &BoundarySpec) -> Self {
        Self {
            grid,
            periodic: [spec.periodic_x(), spec.periodic_y()],
        }
    }

    fn axis(s: f64, n: usize, periodic: bool) -> (usize, usize, f64) {
        let u = s - 0.5;
        if periodic {
            let lo = u.floor();
            let w = u - lo;
            let i0 = (lo as i64).rem_euclid(n as i64) as usize;
            (i0, (i0 + 1) % n, w)
        } else if u <= 0.0 {
            (0, 0, 0.0)
        } else if u >= (n - 1) as f64 {
            (n - 1, n - 1, 0.0)
        } else {
            let lo = u.floor();
            (lo as usize, lo as usize + 1, u - lo)
        }
    }

    /// Four `(cell index, weight)` pairs.
    fn stencil(&self, p: [f64; 2]) -> [(usize, f64); 4] {
        let g = &self.grid;
        let (i0, i1, wx) = Self::axis(p[0] / g.dx(), g.nx, self.periodic[0]);
        let (j0, j1, wy) = Self::axis(p[1] / g.dy(), g.ny, self.periodic[1]);
        [
            (g.idx(i0, j0), (1.0 - wx) * (1.0 - wy)),
            (g.idx(i1, j0), wx * (1.0 - wy)),
            (g.idx(i0, j1), (1.0 - wx) * wy),
            (g.idx(i1, j1), wx * wy),
        ]
    }

    fn eval(&self, values: &[f64], p: [f64; 2]) -> f64 {
        self.stencil(p).iter().map(|&(k, w)| w * values[k]).sum()
    }
}

/// Fields sampled by the particles during one step.
struct Drift<'a> {
    interp: Interp,
    rho: &'a ScalarField,
    grad: VectorField,
    params: &'a ModelParams,
}

impl<'a> Drift<'a> {
    fn new(
        phi: &ScalarField,
        rho: &'a ScalarField,
        params: &'a ModelParams,
        bcs: &Boundaries,
    ) -> Result<Self, SolverError> {
        phi.same_grid(rho)?;
        Ok(Self {
            interp: Interp::new(rho.grid, &bcs.density),
            rho,
            grad: gradient_central(phi, &bcs.potential, Quantity::Potential)?,
            params,
        })
    }

    /// `(ρ(x), u(x))`.
    fn at(&self, p: [f64; 2]) -> (f64, [f64; 2]) {
        let r = self.interp.eval(&self.rho.values, p);
        let g = [
            self.interp.eval(&self.grad.x, p),
            self.interp.eval(&self.grad.y, p),
        ];
        (r, self.params.optimal_velocity(r, g))
    }
}

enum Fate {
    Inside(f64),
    Absorbed(f64),
}

/// Maps a coordinate back into `[0, len]`: wrap on periodic axes, mirror at
/// walls, absorb at exit and inflow edges.
fn resolve_axis(mut s: f64, len: f64, lo: EdgeCondition, hi: EdgeCondition) -> Fate {
    if lo == EdgeCondition::Periodic {
        let w = s.rem_euclid(len);
        // rem_euclid can round up to `len` for tiny negative input.
        return Fate::Inside(if w >= len { 0.0 } else { w });
    }
    loop {
        if s < 0.0 {
            match lo {
                EdgeCondition::Wall => s = -s,
                _ => return Fate::Absorbed(0.0),
            }
        } else if s > len {
            match hi {
                EdgeCondition::Wall => s = 2.0 * len - s,
                _ => return Fate::Absorbed(len),
            }
        } else {
            return Fate::Inside(s);
        }
    }
}

/// One Euler–Maruyama step `x ← x + u dt + √(2σdt) ξ` for every live particle.
/// Particles follow the density boundary conditions.
pub fn step_particles(
    ensemble: &ParticleEnsemble,
    phi: &ScalarField,
    rho: &ScalarField,
    dt: f64,
    params: &ModelParams,
    bcs: &Boundaries,
) -> Result<ParticleEnsemble, SolverError> {
    if !(dt > 0.0) {
        return Err(SolverError::Invalid(format!(
            "particle step needs dt > 0, got {dt}"
        )));
    }
    let drift = Drift::new(phi, rho, params, bcs)?;
    let g = rho.grid;
    let spec = bcs.density;
    let key = stream_key(ensemble.rng_seed);
    let noise = (2.0 * params.sigma * dt).sqrt();
    let step = ensemble.step;
    let moved: Vec<([f64; 2], bool)> = ensemble
        .positions
        .par_iter()
        .zip(&ensemble.alive)
        .enumerate()
        .map(|(idx, (&p, &alive))| {
            if !alive {
                return (p, false);
            }
            let (_, u) = drift.at(p);
            let mut q = [p[0] + u[0] * dt, p[1] + u[1] * dt];
            if noise > 0.0 {
                let mut rng = particle_rng(&key, idx as u64, step);
                q[0] += noise * rng.sample::<f64, _>(StandardNormal);
                q[1] += noise * rng.sample::<f64, _>(StandardNormal);
            }
            if !(q[0].is_finite() && q[1].is_finite()) {
                return (q, true);
            }
            let mut alive = true;
            for (axis, len, lo, hi) in [
                (0, g.lx, spec.left, spec.right),
                (1, g.ly, spec.bottom, spec.top),
            ] {
                match resolve_axis(q[axis], len, lo, hi) {
                    Fate::Inside(s) => q[axis] = s,
                    Fate::Absorbed(s) => {
                        q[axis] = s;
                        alive = false;
                    }
                }
            }
            if !alive {
                q = [q[0].clamp(0.0, g.lx), q[1].clamp(0.0, g.ly)];
            }
            (q, alive)
        })
        .collect();
    if let Some(index) = moved
        .iter()
        .position(|(q, _)| !(q[0].is_finite() && q[1].is_finite()))
    {
        return Err(SolverError::NonFiniteParticle { index });
    }
    let (positions, alive) = moved.into_iter().unzip();
    Ok(ParticleEnsemble {
        positions,
        weights: ensemble.weights.clone(),
        alive,
        rng_seed: ensemble.rng_seed,
        step: step + 1,
    })
}

/// Histogram of live particles scaled so that it integrates to
/// `total_mass × alive fraction`, then a box filter of `smoothing` cells in
/// each direction. The filter wraps on periodic axes of `spec` and
/// renormalizes near other edges, so it keeps the integral.
pub fn estimate_density(
    ensemble: &ParticleEnsemble,
    grid: Grid2D,
    total_mass: f64,
    smoothing: usize,
    spec: &BoundarySpec,
) -> ScalarField {
    let total_weight: f64 = ensemble.weights.iter().sum();
    let partials: Vec<Vec<f64>> = ensemble
        .positions
        .par_chunks(HIST_CHUNK)
        .zip(ensemble.weights.par_chunks(HIST_CHUNK))
        .zip(ensemble.alive.par_chunks(HIST_CHUNK))
        .map(|((pos, w), alive)| {
            let mut h = vec![0.0; grid.len()];
            for ((p, w), a) in pos.iter().zip(w).zip(alive) {
                if *a {
                    let (i, j) = grid.locate(p[0], p[1]);
                    h[grid.idx(i, j)] += w;
                }
            }
            h
        })
        .collect();
    let mut mass = vec![0.0; grid.len()];
    for h in &partials {
        for (m, v) in mass.iter_mut().zip(h) {
            *m += v;
        }
    }
    let scale = total_mass / total_weight;
    for m in &mut mass {
        *m *= scale;
    }
    if smoothing > 0 {
        mass = box_spread(
            &mass,
            grid,
            smoothing,
            [spec.periodic_x(), spec.periodic_y()],
        );
    }
    let da = grid.cell_area();
    ScalarField {
        grid,
        values: mass.into_iter().map(|m| m / da).collect(),
    }
}

/// Spreads each cell's mass evenly over the in-domain cells of its window.
fn box_spread(mass: &[f64], grid: Grid2D, k: usize, periodic: [bool; 2]) -> Vec<f64> {
    let k = k as isize;
    let window = |c: isize, n: usize, periodic: bool| -> Vec<usize> {
        (c - k..=c + k)
            .filter_map(|t| {
                if periodic {
                    Some(t.rem_euclid(n as isize) as usize)
                } else if (0..n as isize).contains(&t) {
                    Some(t as usize)
                } else {
                    None
                }
            })
            .collect()
    };
    let mut out = vec![0.0; mass.len()];
    for j in 0..grid.ny {
        let wy = window(j as isize, grid.ny, periodic[1]);
        for i in 0..grid.nx {
            let m = mass[grid.idx(i, j)];
            if m == 0.0 {
                continue;
            }
            let wx = window(i as isize, grid.nx, periodic[0]);
            let share = m / (wx.len() * wy.len()) as f64;
            for &jj in &wy {
                for &ii in &wx {
                    out[grid.idx(ii, jj)] += share;
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub t: f64,
    pub l1_distance: f64,
    pub alive_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldComparison {
    pub rows: Vec<ComparisonRow>,
    pub final_ensemble: ParticleEnsemble,
}

impl MeanFieldComparison {
    pub fn worst(&self) -> f64 {
        self.rows.iter().map(|r| r.l1_distance).fold(0.0, f64::max)
    }

    /// CSV with columns `t,l1_distance,alive_fraction`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,l1_distance,alive_fraction\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{}\n",
                crate::io::fmt15(r.t),
                crate::io::fmt15(r.l1_distance),
                crate::io::fmt15(r.alive_fraction)
            ));
        }
        s
    }
}

/// Co-evolves the PDE run and `n` particles sampled from `ρ_0`. Each
/// macroscopic step the particles take one Euler–Maruyama step driven by the
/// freshly solved φ and the current ρ; at snapshot steps the L¹ distance
/// between the smoothed histogram and ρ is recorded.
pub fn run_mean_field_comparison(
    run: &QuasiStationaryRun,
    n: usize,
    seed: u64,
    smoothing: usize,
) -> Result<MeanFieldComparison, RunError> {
    let total_mass = integrate(&run.rho0);
    let mut ensemble = ParticleEnsemble::sample(&run.rho0, n, seed).map_err(RunError::Invalid)?;
    let mut rows = Vec::new();
    let last = run.steps();
    run_quasi_stationary_with(run, |step, rho, phi| {
        if step % run.snapshot_every == 0 || step == last {
            let est =
                estimate_density(&ensemble, run.grid, total_mass, smoothing, &run.bcs.density);
            rows.push(ComparisonRow {
                t: step as f64 * run.dt,
                l1_distance: l1_distance(&est, rho)?,
                alive_fraction: ensemble.alive_fraction(),
            });
        }
        if step < last {
            ensemble = step_particles(&ensemble, phi, rho, run.dt, &run.params, &run.bcs)?;
        }
        Ok(())
    })?;
    Ok(MeanFieldComparison {
        rows,
        final_ensemble: ensemble,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McCostEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Value and density paths on a common time mesh `t_k = k·dt`, with the
/// terminal cost applied at the last level.
#[derive(Debug, Clone, Copy)]
pub struct ControlledPaths<'a> {
    pub phi: &'a [ScalarField],
    pub rho: &'a [ScalarField],
    pub dt: f64,
    pub phi_terminal: &'a ScalarField,
    pub bcs: &'a Boundaries,
}

/// Monte Carlo estimate of the cost `J(t_start, x) = E[Σ dt·L(ρ, u) + φ_T(x_T)]`
/// along the feedback `u = −f^β∇φ`, with left-endpoint quadrature on the
/// path mesh.
pub fn mc_cost_estimate(
    start_point: [f64; 2],
    t_start: f64,
    paths: ControlledPaths<'_>,
    params: &ModelParams,
    n_samples: usize,
    seed: u64,
) -> Result<McCostEstimate, SolverError> {
    if paths.phi.len() != paths.rho.len() || paths.phi.is_empty() {
        return Err(SolverError::MeshMismatch(
            "value and density paths differ in length".into(),
        ));
    }
    if n_samples == 0 {
        return Err(SolverError::Invalid("n_samples must be >= 1".into()));
    }
    let levels = paths.phi.len() - 1;
    let k0 = (t_start / paths.dt).round();
    if !(k0 >= 0.0 && k0 as usize <= levels) {
        return Err(SolverError::Invalid(format!(
            "t_start {t_start} outside the path"
        )));
    }
    let k0 = k0 as usize;
    let drifts = (k0..levels)
        .map(|k| Drift::new(&paths.phi[k], &paths.rho[k], params, paths.bcs))
        .collect::<Result<Vec<_>, _>>()?;
    let grid = paths.phi_terminal.grid;
    let terminal = Interp::new(grid, &paths.bcs.density);
    let spec = paths.bcs.density;
    let key = stream_key(seed);
    let noise = (2.0 * params.sigma * paths.dt).sqrt();
    let costs: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = particle_rng(&key, s as u64, 0);
            let mut x = start_point;
            let mut cost = 0.0;
            for d in &drifts {
                let (r, u) = d.at(x);
                cost += paths.dt * params.lagrangian(r, u);
                x[0] += u[0] * paths.dt;
                x[1] += u[1] * paths.dt;
                if noise > 0.0 {
                    x[0] += noise * rng.sample::<f64, _>(StandardNormal);
                    x[1] += noise * rng.sample::<f64, _>(StandardNormal);
                }
                for (axis, len, lo, hi) in [
                    (0, grid.lx, spec.left, spec.right),
                    (1, grid.ly, spec.bottom, spec.top),
                ] {
                    let (Fate::Inside(v) | Fate::Absorbed(v)) = resolve_axis(x[axis], len, lo, hi);
                    x[axis] = v;
                }
            }
            cost + terminal.eval(&paths.phi_terminal.values, x)
        })
        .collect();
    let n = n_samples as f64;
    let mean = costs.iter().sum::<f64>() / n;
    let std_error = if n_samples > 1 {
        let var = costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(McCostEstimate {
        mean,
        std_error,
        samples: n_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corridor_bcs() -> Boundaries {
        crate::coupling::corridor_boundaries(EdgeCondition::Wall)
    }

    #[test]
    fn uniform_flow_moves_particles_at_free_speed() {
        let params = ModelParams::new(2.0, 1.0, 0.0).unwrap();
        let g = Grid2D::new(40, 20, 4.0, 2.0).unwrap();
        let rho = ScalarField::constant(g, 0.5);
        let s = params.eikonal_speed(0.5);
        let phi = ScalarField::from_fn(g, |x, _| s * (4.0 - x));
        let start = vec![[1.0, 0.7], [2.25, 1.3], [0.33, 0.05]];
        let mut ens = ParticleEnsemble::new(start.clone(), 7).unwrap();
        for _ in 0..10 {
            ens = step_particles(&ens, &phi, &rho, 0.05, &params, &corridor_bcs()).unwrap();
        }
        for (p, q) in start.iter().zip(&ens.positions) {
            assert!((q[0] - p[0] - 0.5 * 0.5).abs() < 1e-12, "{q:?}");
            assert_eq!(q[1], p[1]);
        }
    }

    #[test]
    fn saturated_particle_only_diffuses() {
        let params = ModelParams::new(1.0, 1.0, 0.0).unwrap();
        let g = Grid2D::new(8, 8, 1.0, 1.0).unwrap();
        let rho = ScalarField::constant(g, 1.0);
        let phi = ScalarField::from_fn(g, |x, y| x * x + y);
        let ens = ParticleEnsemble::new(vec![[0.4, 0.6]], 1).unwrap();
        let next = step_particles(&ens, &phi, &rho, 0.1, &params, &Boundaries::torus()).unwrap();
        assert_eq!(next.positions, ens.positions);
    }

    #[test]
    fn walls_reflect_and_exits_absorb() {
        assert!(
            matches!(resolve_axis(-0.25, 2.0, EdgeCondition::Wall, EdgeCondition::Wall), Fate::Inside(s) if s == 0.25)
        );
        assert!(
            matches!(resolve_axis(4.5, 2.0, EdgeCondition::Wall, EdgeCondition::Wall), Fate::Inside(s) if s == 0.5)
        );
        assert!(
            matches!(resolve_axis(2.1, 2.0, EdgeCondition::Wall, EdgeCondition::Exit), Fate::Absorbed(s) if s == 2.0)
        );
        assert!(
            matches!(resolve_axis(-1e-20, 2.0, EdgeCondition::Periodic, EdgeCondition::Periodic), Fate::Inside(s) if (0.0..2.0).contains(&s))
        );
    }

    #[test]
    fn stepping_is_independent_of_thread_count() {
        let params = ModelParams::new(2.0, 1.0, 0.02).unwrap();
        let g = Grid2D::new(20, 10, 4.0, 2.0).unwrap();
        let rho = crate::coupling::gaussian_bump(g, 0.5, 0.2, (1.0, 1.0), 10.0);
        let phi = ScalarField::from_fn(g, |x, y| (4.0 - x) + 0.1 * y);
        let ens = ParticleEnsemble::sample(&rho, 5000, 99).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    step_particles(&ens, &phi, &rho, 0.05, &params, &corridor_bcs()).unwrap()
                })
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn histogram_keeps_mass_with_smoothing() {
        let g = Grid2D::new(10, 6, 2.0, 1.0).unwrap();
        let ens = ParticleEnsemble::new(vec![[0.05, 0.05]; 30], 0).unwrap();
        for smoothing in [0, 1, 3] {
            for spec in [BoundarySpec::walls(), BoundarySpec::periodic()] {
                let d = estimate_density(&ens, g, 2.5, smoothing, &spec);
                assert!((integrate(&d) - 2.5).abs() < 1e-12);
            }
        }
        let mut dead = ens.clone();
        dead.alive.iter_mut().for_each(|a| *a = false);
        assert!(estimate_density(&dead, g, 2.5, 1, &BoundarySpec::walls())
            .values
            .iter()
            .all(|v| *v == 0.0));
    }

    #[test]
    fn single_deterministic_sample_has_zero_error() {
        let params = ModelParams::new(2.0, 1.0, 0.0).unwrap();
        let g = Grid2D::new(8, 4, 4.0, 2.0).unwrap();
        let rho = vec![ScalarField::constant(g, 0.5); 3];
        let phi = vec![ScalarField::zeros(g); 3];
        let terminal = ScalarField::zeros(g);
        let bcs = Boundaries::torus();
        let paths = ControlledPaths {
            phi: &phi,
            rho: &rho,
            dt: 0.1,
            phi_terminal: &terminal,
            bcs: &bcs,
        };
        let est = mc_cost_estimate([1.0, 1.0], 0.0, paths, &params, 1, 3).unwrap();
        assert_eq!(est.std_error, 0.0);
        assert!((est.mean - 0.2 * 0.5 * params.saturation_pow(0.5, 0.0)).abs() < 1e-15);
    }
}
