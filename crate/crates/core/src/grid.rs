//! Uniform cell-centered mesh, boundary specifications and the discrete
//! operators shared by the solvers.
//!
//! Cell `(i, j)` has center `((i+½)dx, (j+½)dy)` and flat index `j·nx + i`.
//! Boundary conditions act through one layer of ghost cells; Dirichlet faces
//! are realized by mirroring so the face average equals the prescribed value.

use crate::error::GridError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self, GridError> {
        if nx < 4 || ny < 4 {
            return Err(GridError::InvalidGrid(format!(
                "need at least 4 cells per axis, got {nx}x{ny}"
            )));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(GridError::InvalidGrid(format!(
                "extents must be positive, got {lx}x{ly}"
            )));
        }
        Ok(Self { nx, ny, lx, ly })
    }

    /// Grid with spacing `h` in both directions; extents must be multiples of `h`.
    pub fn with_spacing(lx: f64, ly: f64, h: f64) -> Result<Self, GridError> {
        let nx = (lx / h).round() as usize;
        let ny = (ly / h).round() as usize;
        Self::new(nx, ny, lx, ly)
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    #[inline]
    pub fn dy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.dx(), (j as f64 + 0.5) * self.dy())
    }

    /// Cell containing the point, clamped to the grid.
    pub fn locate(&self, x: f64, y: f64) -> (usize, usize) {
        let i = ((x / self.dx()).floor().max(0.0) as usize).min(self.nx - 1);
        let j = ((y / self.dy()).floor().max(0.0) as usize).min(self.ny - 1);
        (i, j)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeCondition {
    Periodic,
    /// Σ: ρ = 0 and φ = 0 at the face.
    Exit,
    /// Γ: face values ρ = `rho_b`, φ = `phi_b`.
    Inflow {
        rho_b: f64,
        phi_b: f64,
    },
    /// Γ_a: no flux for ρ, homogeneous Neumann for φ.
    Wall,
}

impl EdgeCondition {
    pub fn is_dirichlet(&self) -> bool {
        matches!(self, Self::Exit | Self::Inflow { .. })
    }

    /// Prescribed face value for a Dirichlet edge.
    pub fn face_value(&self, kind: Quantity) -> Option<f64> {
        match (self, kind) {
            (Self::Exit, _) => Some(0.0),
            (Self::Inflow { rho_b, .. }, Quantity::Density) => Some(*rho_b),
            (Self::Inflow { phi_b, .. }, Quantity::Potential) => Some(*phi_b),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    Left,
    Right,
    Bottom,
    Top,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Density,
    Potential,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySpec {
    pub left: EdgeCondition,
    pub right: EdgeCondition,
    pub bottom: EdgeCondition,
    pub top: EdgeCondition,
}

impl BoundarySpec {
    pub fn uniform(c: EdgeCondition) -> Self {
        Self {
            left: c,
            right: c,
            bottom: c,
            top: c,
        }
    }

    pub fn periodic() -> Self {
        Self::uniform(EdgeCondition::Periodic)
    }

    pub fn walls() -> Self {
        Self::uniform(EdgeCondition::Wall)
    }

    pub fn edge(&self, e: Edge) -> EdgeCondition {
        match e {
            Edge::Left => self.left,
            Edge::Right => self.right,
            Edge::Bottom => self.bottom,
            Edge::Top => self.top,
        }
    }

    pub fn edges(&self) -> [(Edge, EdgeCondition); 4] {
        [
            (Edge::Left, self.left),
            (Edge::Right, self.right),
            (Edge::Bottom, self.bottom),
            (Edge::Top, self.top),
        ]
    }

    pub fn periodic_x(&self) -> bool {
        self.left == EdgeCondition::Periodic
    }

    pub fn periodic_y(&self) -> bool {
        self.bottom == EdgeCondition::Periodic
    }

    pub fn validate(&self) -> Result<(), GridError> {
        let px = (self.left == EdgeCondition::Periodic) as u8
            + (self.right == EdgeCondition::Periodic) as u8;
        if px == 1 {
            return Err(GridError::PeriodicMismatch { axis: "x" });
        }
        let py = (self.bottom == EdgeCondition::Periodic) as u8
            + (self.top == EdgeCondition::Periodic) as u8;
        if py == 1 {
            return Err(GridError::PeriodicMismatch { axis: "y" });
        }
        for (_, c) in self.edges() {
            if let EdgeCondition::Inflow { rho_b, phi_b } = c {
                if !(rho_b.is_finite() && phi_b.is_finite()) {
                    return Err(GridError::InvalidGrid(
                        "inflow boundary values must be finite".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// True when some edge pins the value (exit or inflow).
    pub fn has_dirichlet(&self) -> bool {
        self.edges().iter().any(|(_, c)| c.is_dirichlet())
    }

    pub fn all_periodic(&self) -> bool {
        self.periodic_x() && self.periodic_y()
    }

    /// Every non-periodic edge is a wall: mass is conserved.
    pub fn is_closed(&self) -> bool {
        self.edges()
            .iter()
            .all(|(_, c)| matches!(c, EdgeCondition::Periodic | EdgeCondition::Wall))
    }
}

/// Boundary data for the two unknowns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boundaries {
    pub density: BoundarySpec,
    pub potential: BoundarySpec,
}

impl Boundaries {
    pub fn same(spec: BoundarySpec) -> Self {
        Self {
            density: spec,
            potential: spec,
        }
    }

    pub fn torus() -> Self {
        Self::same(BoundarySpec::periodic())
    }

    pub fn spec(&self, kind: Quantity) -> &BoundarySpec {
        match kind {
            Quantity::Density => &self.density,
            Quantity::Potential => &self.potential,
        }
    }

    pub fn validate(&self) -> Result<(), GridError> {
        self.density.validate()?;
        self.potential.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid2D,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid2D) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid2D, v: f64) -> Self {
        Self {
            grid,
            values: vec![v; grid.len()],
        }
    }

    pub fn from_values(grid: Grid2D, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x, y)` at cell centers.
    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.center(i, j);
                values.push(f(x, y));
            }
        }
        Self { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn same_grid(&self, other: &Self) -> Result<(), GridError> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(GridError::GridMismatch)
        }
    }

    pub fn check_finite(&self) -> Result<(), GridError> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(GridError::NonFinite { index }),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: Grid2D,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl VectorField {
    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            x: vec![0.0; grid.len()],
            y: vec![0.0; grid.len()],
        }
    }

    #[inline]
    pub fn at(&self, k: usize) -> [f64; 2] {
        [self.x[k], self.y[k]]
    }
}

/// Normal components on cell faces. `fx[j·(nx+1) + i]` sits on the face left
/// of cell `i` (so `i = nx` is the right boundary); `fy[j·nx + i]` sits below
/// cell row `j`. On periodic axes the two boundary faces are the same face and
/// hold equal values.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceField {
    pub grid: Grid2D,
    pub fx: Vec<f64>,
    pub fy: Vec<f64>,
}

impl FaceField {
    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            fx: vec![0.0; (grid.nx + 1) * grid.ny],
            fy: vec![0.0; grid.nx * (grid.ny + 1)],
        }
    }

    #[inline]
    pub fn ix(&self, i: usize, j: usize) -> usize {
        j * (self.grid.nx + 1) + i
    }

    #[inline]
    pub fn iy(&self, i: usize, j: usize) -> usize {
        j * self.grid.nx + i
    }

    /// Cell-wise divergence `(F_{i+½} − F_{i−½})/dx + (G_{j+½} − G_{j−½})/dy`.
    pub fn divergence(&self) -> ScalarField {
        let g = self.grid;
        let (dx, dy) = (g.dx(), g.dy());
        let mut out = ScalarField::zeros(g);
        for j in 0..g.ny {
            for i in 0..g.nx {
                out.values[g.idx(i, j)] = (self.fx[self.ix(i + 1, j)] - self.fx[self.ix(i, j)])
                    / dx
                    + (self.fy[self.iy(i, j + 1)] - self.fy[self.iy(i, j)]) / dy;
            }
        }
        out
    }

    /// Net outward flux through the domain boundary.
    pub fn net_boundary_flux(&self) -> f64 {
        let g = self.grid;
        let mut total = 0.0;
        for j in 0..g.ny {
            total += (self.fx[self.ix(g.nx, j)] - self.fx[self.ix(0, j)]) * g.dy();
        }
        for i in 0..g.nx {
            total += (self.fy[self.iy(i, g.ny)] - self.fy[self.iy(i, 0)]) * g.dx();
        }
        total
    }

    pub fn max_abs(&self) -> (f64, f64) {
        let m = |v: &[f64]| v.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
        (m(&self.fx), m(&self.fy))
    }
}

/// Field extended by one ghost layer, indexed with `i, j ∈ [-1, n]`.
#[derive(Debug, Clone)]
pub struct GhostField {
    pub grid: Grid2D,
    data: Vec<f64>,
}

impl GhostField {
    #[inline]
    fn slot(&self, i: isize, j: isize) -> usize {
        (j + 1) as usize * (self.grid.nx + 2) + (i + 1) as usize
    }

    #[inline]
    pub fn get(&self, i: isize, j: isize) -> f64 {
        self.data[self.slot(i, j)]
    }
}

fn ghost_value(c: EdgeCondition, kind: Quantity, adjacent: f64, opposite: f64) -> f64 {
    match c {
        EdgeCondition::Periodic => opposite,
        EdgeCondition::Wall => adjacent,
        EdgeCondition::Exit | EdgeCondition::Inflow { .. } => {
            let b = c.face_value(kind).unwrap_or(0.0);
            2.0 * b - adjacent
        }
    }
}

/// Populates one ghost layer according to `spec`.
pub fn fill_ghosts(
    field: &ScalarField,
    spec: &BoundarySpec,
    kind: Quantity,
) -> Result<GhostField, GridError> {
    spec.validate()?;
    let g = field.grid;
    let (nx, ny) = (g.nx as isize, g.ny as isize);
    let mut out = GhostField {
        grid: g,
        data: vec![0.0; (g.nx + 2) * (g.ny + 2)],
    };
    for j in 0..g.ny {
        for i in 0..g.nx {
            let s = out.slot(i as isize, j as isize);
            out.data[s] = field.at(i, j);
        }
    }
    for j in 0..g.ny {
        let first = field.at(0, j);
        let last = field.at(g.nx - 1, j);
        let s = out.slot(-1, j as isize);
        out.data[s] = ghost_value(spec.left, kind, first, last);
        let s = out.slot(nx, j as isize);
        out.data[s] = ghost_value(spec.right, kind, last, first);
    }
    for i in 0..g.nx {
        let first = field.at(i, 0);
        let last = field.at(i, g.ny - 1);
        let s = out.slot(i as isize, -1);
        out.data[s] = ghost_value(spec.bottom, kind, first, last);
        let s = out.slot(i as isize, ny);
        out.data[s] = ghost_value(spec.top, kind, last, first);
    }
    // Corners are never read by the 5-point stencils; keep them finite.
    for (ci, cj, si, sj) in [
        (-1, -1, 0, 0),
        (nx, -1, nx - 1, 0),
        (-1, ny, 0, ny - 1),
        (nx, ny, nx - 1, ny - 1),
    ] {
        let s = out.slot(ci, cj);
        out.data[s] = field.at(si as usize, sj as usize);
    }
    Ok(out)
}

/// Central-difference gradient at cell centers.
pub fn gradient_central(
    field: &ScalarField,
    spec: &BoundarySpec,
    kind: Quantity,
) -> Result<VectorField, GridError> {
    let g = field.grid;
    let gh = fill_ghosts(field, spec, kind)?;
    let (dx2, dy2) = (2.0 * g.dx(), 2.0 * g.dy());
    let mut out = VectorField::zeros(g);
    for j in 0..g.ny as isize {
        for i in 0..g.nx as isize {
            let k = g.idx(i as usize, j as usize);
            out.x[k] = (gh.get(i + 1, j) - gh.get(i - 1, j)) / dx2;
            out.y[k] = (gh.get(i, j + 1) - gh.get(i, j - 1)) / dy2;
        }
    }
    Ok(out)
}

/// Five-point Laplacian.
pub fn laplacian(
    field: &ScalarField,
    spec: &BoundarySpec,
    kind: Quantity,
) -> Result<ScalarField, GridError> {
    let g = field.grid;
    let gh = fill_ghosts(field, spec, kind)?;
    let (idx2, idy2) = (1.0 / (g.dx() * g.dx()), 1.0 / (g.dy() * g.dy()));
    let mut out = ScalarField::zeros(g);
    for j in 0..g.ny as isize {
        for i in 0..g.nx as isize {
            let c = gh.get(i, j);
            out.values[g.idx(i as usize, j as usize)] =
                (gh.get(i + 1, j) - 2.0 * c + gh.get(i - 1, j)) * idx2
                    + (gh.get(i, j + 1) - 2.0 * c + gh.get(i, j - 1)) * idy2;
        }
    }
    Ok(out)
}

/// Midpoint-rule integral.
pub fn integrate(field: &ScalarField) -> f64 {
    field.values.iter().sum::<f64>() * field.grid.cell_area()
}

pub fn l1_distance(f: &ScalarField, g: &ScalarField) -> Result<f64, GridError> {
    f.same_grid(g)?;
    Ok(f.values
        .iter()
        .zip(&g.values)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        * f.grid.cell_area())
}

pub fn linf(f: &ScalarField) -> f64 {
    f.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Area-weighted variance of the field values about their mean,
/// `(1/|Ω|)∫(ρ − ρ̄)²`.
pub fn variance(f: &ScalarField) -> f64 {
    let n = f.values.len() as f64;
    let mean = f.values.iter().sum::<f64>() / n;
    f.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
}
