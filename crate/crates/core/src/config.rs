//! Flat `key = value` run configuration with `[section]` headers and `#`
//! comments. Parsing reports every problem at once, each with its line.

use std::collections::BTreeMap;
use std::fmt;

use crate::coupling::{
    cosine_terminal_cost, gaussian_bump, MfgProblem, PicardConfig, PotentialSolver,
    QuasiStationaryRun,
};
use crate::error::SolverError;
use crate::fp::{DiffusionMode, FluxForm, FpStepConfig};
use crate::grid::{Boundaries, BoundarySpec, EdgeCondition, Grid2D};
use crate::hjb::{StationaryHjbConfig, SweepingConfig, UpwindHjbConfig};
use crate::io::SnapshotFormat;
use crate::model::ModelParams;

const SECTIONS: [&str; 7] = [
    "model",
    "grid",
    "boundary",
    "run",
    "mfg",
    "particles",
    "output",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// 1-based line, `None` for missing keys.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, e) in self.0.iter().enumerate() {
            if n > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Sweeping,
    Viscous,
    ViscousUpwind,
}

/// `background + amplitude·exp(−rate·|x − center|²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialDensity {
    pub background: f64,
    pub amplitude: f64,
    pub center: (f64, f64),
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub t_end: f64,
    pub dt: f64,
    pub snapshot_every: usize,
    pub potential_solver: SolverKind,
    pub flux_form: FluxForm,
    pub diffusion: DiffusionMode,
    pub cfl_safety: f64,
    pub max_substep: Option<f64>,
    pub refresh_potential: bool,
    pub inflow_reference_density: Option<f64>,
    pub initial: InitialDensity,
    pub sweep_sigmas: Vec<f64>,
    pub sweep_betas: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfgSettings {
    pub t_end: f64,
    pub dt: f64,
    /// `φ_T = amplitude·(1 − cos(2πx/lx))`.
    pub terminal_amplitude: f64,
    pub picard: PicardConfig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleSettings {
    pub count: usize,
    /// Box-filter half-width, in cells, for the density estimate.
    pub smoothing: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSettings {
    pub dir: String,
    pub format: SnapshotFormat,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub grid: Grid2D,
    pub boundaries: Boundaries,
    pub run: RunSettings,
    pub mfg: MfgSettings,
    pub particles: ParticleSettings,
    pub output: OutputSettings,
}

struct Entry {
    value: String,
    line: usize,
    used: bool,
}

/// Pulls typed values out of the parsed `section.key` table, collecting
/// errors instead of stopping at the first.
struct Reader {
    entries: BTreeMap<String, Entry>,
    errors: Vec<ConfigError>,
}

impl Reader {
    fn err(&mut self, line: Option<usize>, message: String) {
        self.errors.push(ConfigError { line, message });
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|e| e.line)
    }

    /// Raw value; records a missing-key error when there is no default.
    fn raw(&mut self, key: &str, required: bool) -> Option<(String, usize)> {
        match self.entries.get_mut(key) {
            Some(e) => {
                e.used = true;
                Some((e.value.clone(), e.line))
            }
            None => {
                if required {
                    let (section, name) = key.split_once('.').unwrap_or(("", key));
                    self.err(
                        None,
                        format!("missing required key `{name}` in [{section}]"),
                    );
                }
                None
            }
        }
    }

    /// Parsed value, else `default` (which is `None` only for required keys).
    fn parsed<T: Clone>(
        &mut self,
        key: &str,
        default: Option<T>,
        what: &str,
        parse: impl Fn(&str) -> Option<T>,
    ) -> Option<T> {
        let Some((v, line)) = self.raw(key, default.is_none()) else {
            return default;
        };
        match parse(&v) {
            Some(x) => Some(x),
            None => {
                self.err(Some(line), format!("`{key}`: expected {what}, got `{v}`"));
                default
            }
        }
    }

    fn f64(&mut self, key: &str, default: Option<f64>) -> f64 {
        self.parsed(key, default, "a number", parse_f64)
            .unwrap_or(0.0)
    }

    fn opt_f64(&mut self, key: &str, default: Option<f64>) -> Option<f64> {
        self.parsed(key, Some(default), "a number or `none`", |s| {
            if s == "none" {
                Some(None)
            } else {
                parse_f64(s).map(Some)
            }
        })
        .flatten()
    }

    fn usize(&mut self, key: &str, default: Option<usize>) -> usize {
        self.parsed(key, default, "a non-negative integer", |s| s.parse().ok())
            .unwrap_or(0)
    }

    fn list(&mut self, key: &str, default: Vec<f64>) -> Vec<f64> {
        self.parsed(
            key,
            Some(default),
            "a comma-separated list of numbers",
            |s| s.split(',').map(|t| parse_f64(t.trim())).collect(),
        )
        .unwrap_or_default()
    }

    fn edge(&mut self, key: &str, default: EdgeCondition) -> EdgeCondition {
        self.parsed(
            key,
            Some(default),
            "periodic, wall, exit or `inflow <rho_b> <phi_b>`",
            parse_edge,
        )
        .unwrap_or(default)
    }

    fn choice<T: Copy>(&mut self, key: &str, default: T, options: &[(&str, T)]) -> T {
        let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
        let what = format!("one of {}", names.join(", "));
        self.parsed(key, Some(default), &what, |s| {
            options.iter().find(|(n, _)| *n == s).map(|(_, v)| *v)
        })
        .unwrap_or(default)
    }

    fn check(&mut self, ok: bool, key: &str, message: impl Into<String>) {
        if !ok {
            let line = self.line(key);
            self.err(line, message.into());
        }
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_edge(s: &str) -> Option<EdgeCondition> {
    let mut it = s.split_whitespace();
    let edge = match it.next()? {
        "periodic" => EdgeCondition::Periodic,
        "wall" => EdgeCondition::Wall,
        "exit" => EdgeCondition::Exit,
        "inflow" => {
            let rho_b = parse_f64(it.next()?)?;
            let phi_b = parse_f64(it.next()?)?;
            EdgeCondition::Inflow { rho_b, phi_b }
        }
        _ => return None,
    };
    it.next().is_none().then_some(edge)
}

fn edge_text(e: EdgeCondition) -> String {
    match e {
        EdgeCondition::Periodic => "periodic".into(),
        EdgeCondition::Wall => "wall".into(),
        EdgeCondition::Exit => "exit".into(),
        EdgeCondition::Inflow { rho_b, phi_b } => format!("inflow {rho_b:?} {phi_b:?}"),
    }
}

const SOLVERS: [(&str, SolverKind); 3] = [
    ("sweeping", SolverKind::Sweeping),
    ("viscous", SolverKind::Viscous),
    ("viscous_upwind", SolverKind::ViscousUpwind),
];
const FLUX_FORMS: [(&str, FluxForm); 2] = [
    ("eikonal", FluxForm::Eikonal),
    ("mobility", FluxForm::Mobility),
];
const DIFFUSION: [(&str, DiffusionMode); 2] = [
    ("implicit", DiffusionMode::Implicit),
    ("explicit", DiffusionMode::Explicit),
];
const FORMATS: [(&str, SnapshotFormat); 2] = [
    ("text", SnapshotFormat::Text),
    ("binary", SnapshotFormat::Binary),
];

fn name_of<T: PartialEq + Copy>(options: &[(&'static str, T)], v: T) -> &'static str {
    options
        .iter()
        .find(|(_, o)| *o == v)
        .map(|(n, _)| *n)
        .expect("every variant is listed")
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let mut r = Reader {
        entries: BTreeMap::new(),
        errors: Vec::new(),
    };
    let mut section: Option<String> = None;
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim();
            if SECTIONS.contains(&name) {
                section = Some(name.to_string());
            } else {
                r.err(Some(line), format!("unknown section [{name}]"));
                section = None;
            }
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            r.err(
                Some(line),
                format!("expected `key = value`, got `{content}`"),
            );
            continue;
        };
        let Some(sec) = &section else {
            r.err(
                Some(line),
                format!("key `{}` outside a known section", key.trim()),
            );
            continue;
        };
        let full = format!("{sec}.{}", key.trim());
        if let Some(prev) = r.entries.get(&full) {
            let msg = format!("duplicate key `{full}` (first on line {})", prev.line);
            r.err(Some(line), msg);
            continue;
        }
        r.entries.insert(
            full,
            Entry {
                value: value.trim().to_string(),
                line,
                used: false,
            },
        );
    }

    let beta = r.f64("model.beta", None);
    let rho_max = r.f64("model.rho_max", None);
    let sigma = r.f64("model.sigma", None);
    let f_floor = r.opt_f64("model.f_floor", None);

    let lx = r.f64("grid.lx", None);
    let ly = r.f64("grid.ly", None);
    let nx = r.usize("grid.nx", None);
    let ny = r.usize("grid.ny", None);

    let corridor = crate::coupling::corridor_boundaries(EdgeCondition::Wall);
    let d = corridor.density;
    let p = corridor.potential;
    let density = BoundarySpec {
        left: r.edge("boundary.density_left", d.left),
        right: r.edge("boundary.density_right", d.right),
        bottom: r.edge("boundary.density_bottom", d.bottom),
        top: r.edge("boundary.density_top", d.top),
    };
    let potential = BoundarySpec {
        left: r.edge("boundary.potential_left", p.left),
        right: r.edge("boundary.potential_right", p.right),
        bottom: r.edge("boundary.potential_bottom", p.bottom),
        top: r.edge("boundary.potential_top", p.top),
    };

    let run = RunSettings {
        t_end: r.f64("run.t_end", None),
        dt: r.f64("run.dt", None),
        snapshot_every: r.usize("run.snapshot_every", Some(20)),
        potential_solver: r.choice("run.potential_solver", SolverKind::Sweeping, &SOLVERS),
        flux_form: r.choice("run.flux_form", FluxForm::Eikonal, &FLUX_FORMS),
        diffusion: r.choice("run.diffusion", DiffusionMode::Implicit, &DIFFUSION),
        cfl_safety: r.f64("run.cfl_safety", Some(0.9)),
        max_substep: r.opt_f64("run.max_substep", None),
        refresh_potential: r.choice(
            "run.refresh_potential",
            true,
            &[("true", true), ("false", false)],
        ),
        inflow_reference_density: r.opt_f64("run.inflow_reference_density", None),
        initial: InitialDensity {
            background: r.f64("run.init_background", Some(0.5)),
            amplitude: r.f64("run.init_amplitude", Some(0.2)),
            center: (
                r.f64("run.init_center_x", Some(1.0)),
                r.f64("run.init_center_y", Some(1.0)),
            ),
            rate: r.f64("run.init_rate", Some(10.0)),
        },
        sweep_sigmas: r.list("run.sweep_sigmas", vec![0.04, 0.02, 0.01, 0.005]),
        sweep_betas: r.list("run.sweep_betas", vec![0.0, 1.0, 2.0]),
    };
    let pic = PicardConfig::default();
    let mfg = MfgSettings {
        t_end: r.f64("mfg.t_end", Some(1.0)),
        dt: r.f64("mfg.dt", Some(0.02)),
        terminal_amplitude: r.f64("mfg.terminal_amplitude", Some(0.25)),
        picard: PicardConfig {
            damping: r.f64("mfg.picard_damping", Some(pic.damping)),
            tolerance: r.f64("mfg.picard_tolerance", Some(pic.tolerance)),
            max_outer: r.usize("mfg.picard_max_outer", Some(pic.max_outer)),
        },
    };
    let particles = ParticleSettings {
        count: r.usize("particles.count", Some(20_000)),
        smoothing: r.usize("particles.smoothing", Some(1)),
    };
    let output = OutputSettings {
        dir: r
            .parsed("output.dir", Some("out".to_string()), "a path", |s| {
                (!s.is_empty()).then(|| s.to_string())
            })
            .unwrap_or_default(),
        format: r.choice("output.format", SnapshotFormat::Text, &FORMATS),
        seed: r
            .parsed(
                "output.seed",
                Some(0u64),
                "an unsigned 64-bit integer",
                |s| s.parse().ok(),
            )
            .unwrap_or(0),
    };

    let leftovers: Vec<(usize, String)> = r
        .entries
        .iter()
        .filter(|(_, e)| !e.used)
        .map(|(k, e)| (e.line, k.clone()))
        .collect();
    for (line, key) in leftovers {
        r.err(Some(line), format!("unknown key `{key}`"));
    }

    // Invariants. Only checked for keys that parsed; a missing or malformed
    // key has already produced its own error.
    let parsed_ok = |r: &Reader, key: &str| {
        r.line(key)
            .is_some_and(|l| !r.errors.iter().any(|e| e.line == Some(l)))
    };
    if parsed_ok(&r, "model.beta") {
        r.check(
            (0.0..=2.0).contains(&beta),
            "model.beta",
            format!("beta out of [0,2]: {beta}"),
        );
    }
    if parsed_ok(&r, "model.rho_max") {
        r.check(
            rho_max > 0.0,
            "model.rho_max",
            format!("rho_max must be positive, got {rho_max}"),
        );
    }
    if parsed_ok(&r, "model.sigma") {
        r.check(
            sigma >= 0.0,
            "model.sigma",
            format!("sigma must be >= 0, got {sigma}"),
        );
    }
    if let Some(fl) = f_floor {
        r.check(
            fl > 0.0 && fl < rho_max,
            "model.f_floor",
            format!("f_floor must lie in (0, rho_max), got {fl}"),
        );
    }
    for (key, v) in [("grid.lx", lx), ("grid.ly", ly)] {
        if parsed_ok(&r, key) {
            r.check(v > 0.0, key, format!("{key} must be positive, got {v}"));
        }
    }
    for (key, v) in [("grid.nx", nx), ("grid.ny", ny)] {
        if parsed_ok(&r, key) {
            r.check(v >= 1, key, format!("{key} must be >= 1"));
        }
    }
    for (spec, prefix) in [(&density, "density"), (&potential, "potential")] {
        let (left_key, bottom_key) = (
            format!("boundary.{prefix}_left"),
            format!("boundary.{prefix}_bottom"),
        );
        let px = (spec.left == EdgeCondition::Periodic) == (spec.right == EdgeCondition::Periodic);
        let py = (spec.bottom == EdgeCondition::Periodic) == (spec.top == EdgeCondition::Periodic);
        let lx_line = r
            .line(&left_key)
            .or(r.line(&format!("boundary.{prefix}_right")));
        let ly_line = r
            .line(&bottom_key)
            .or(r.line(&format!("boundary.{prefix}_top")));
        if !px {
            r.err(
                lx_line,
                format!("{prefix}: periodic boundary declared on only one x edge"),
            );
        }
        if !py {
            r.err(
                ly_line,
                format!("{prefix}: periodic boundary declared on only one y edge"),
            );
        }
    }
    if parsed_ok(&r, "run.dt") {
        r.check(
            run.dt > 0.0,
            "run.dt",
            format!("dt must be positive, got {}", run.dt),
        );
    }
    if parsed_ok(&r, "run.t_end") {
        r.check(
            run.t_end >= 0.0,
            "run.t_end",
            format!("t_end must be >= 0, got {}", run.t_end),
        );
    }
    r.check(
        run.snapshot_every >= 1,
        "run.snapshot_every",
        "snapshot_every must be >= 1",
    );
    r.check(
        run.cfl_safety > 0.0 && run.cfl_safety <= 1.0,
        "run.cfl_safety",
        format!("cfl_safety must lie in (0, 1], got {}", run.cfl_safety),
    );
    if let Some(m) = run.max_substep {
        r.check(
            m > 0.0,
            "run.max_substep",
            format!("max_substep must be positive, got {m}"),
        );
    }
    if let Some(rb) = run.inflow_reference_density {
        r.check(
            rb >= 0.0 && rb <= rho_max,
            "run.inflow_reference_density",
            format!("inflow reference density {rb} outside [0, rho_max]"),
        );
    }
    r.check(
        run.initial.rate >= 0.0,
        "run.init_rate",
        "init_rate must be >= 0",
    );
    r.check(
        run.sweep_sigmas.iter().all(|s| *s > 0.0)
            && run.sweep_sigmas.windows(2).all(|w| w[1] <= w[0]),
        "run.sweep_sigmas",
        "sweep_sigmas must be positive and decreasing",
    );
    r.check(
        run.sweep_betas.iter().all(|b| (0.0..=2.0).contains(b)),
        "run.sweep_betas",
        "sweep_betas must lie in [0,2]",
    );
    r.check(
        mfg.dt > 0.0,
        "mfg.dt",
        format!("mfg dt must be positive, got {}", mfg.dt),
    );
    r.check(
        mfg.t_end > 0.0,
        "mfg.t_end",
        format!("mfg t_end must be positive, got {}", mfg.t_end),
    );
    r.check(
        mfg.picard.damping > 0.0 && mfg.picard.damping <= 1.0,
        "mfg.picard_damping",
        "picard_damping must lie in (0, 1]",
    );
    r.check(
        mfg.picard.tolerance > 0.0,
        "mfg.picard_tolerance",
        "picard_tolerance must be positive",
    );
    r.check(
        mfg.picard.max_outer >= 1,
        "mfg.picard_max_outer",
        "picard_max_outer must be >= 1",
    );
    r.check(
        particles.count >= 1,
        "particles.count",
        "particle count must be >= 1",
    );

    if !r.errors.is_empty() {
        r.errors.sort_by_key(|e| e.line.unwrap_or(0));
        return Err(ConfigErrors(r.errors));
    }
    let params = match f_floor {
        Some(fl) => ModelParams::with_floor(beta, rho_max, sigma, fl),
        None => ModelParams::new(beta, rho_max, sigma),
    }
    .map_err(|e| {
        ConfigErrors(vec![ConfigError {
            line: None,
            message: e.to_string(),
        }])
    })?;
    let grid = Grid2D::new(nx, ny, lx, ly).map_err(|e| {
        ConfigErrors(vec![ConfigError {
            line: None,
            message: e.to_string(),
        }])
    })?;
    Ok(RunConfig {
        params,
        grid,
        boundaries: Boundaries { density, potential },
        run,
        mfg,
        particles,
        output,
    })
}

/// Writes every key. Floats use the shortest exact representation, so
/// `parse_config(&serialize_config(c)) == Ok(c)`.
pub fn serialize_config(c: &RunConfig) -> String {
    let opt = |v: Option<f64>| v.map_or("none".to_string(), |x| format!("{x:?}"));
    let list = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:?}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let p = &c.params;
    let (d, q) = (&c.boundaries.density, &c.boundaries.potential);
    let run = &c.run;
    let init = &run.initial;
    let m = &c.mfg;
    let mut s = String::new();
    s.push_str(&format!(
        "[model]\nbeta = {:?}\nrho_max = {:?}\nsigma = {:?}\nf_floor = {:?}\n\n",
        p.beta, p.rho_max, p.sigma, p.f_floor
    ));
    s.push_str(&format!(
        "[grid]\nlx = {:?}\nly = {:?}\nnx = {}\nny = {}\n\n",
        c.grid.lx, c.grid.ly, c.grid.nx, c.grid.ny
    ));
    s.push_str("[boundary]\n");
    for (prefix, spec) in [("density", d), ("potential", q)] {
        for (side, e) in [
            ("left", spec.left),
            ("right", spec.right),
            ("bottom", spec.bottom),
            ("top", spec.top),
        ] {
            s.push_str(&format!("{prefix}_{side} = {}\n", edge_text(e)));
        }
    }
    s.push_str(&format!(
        "\n[run]\nt_end = {:?}\ndt = {:?}\nsnapshot_every = {}\npotential_solver = {}\nflux_form = {}\n\
         diffusion = {}\ncfl_safety = {:?}\nmax_substep = {}\nrefresh_potential = {}\n\
         inflow_reference_density = {}\ninit_background = {:?}\ninit_amplitude = {:?}\n\
         init_center_x = {:?}\ninit_center_y = {:?}\ninit_rate = {:?}\nsweep_sigmas = {}\nsweep_betas = {}\n\n",
        run.t_end,
        run.dt,
        run.snapshot_every,
        name_of(&SOLVERS, run.potential_solver),
        name_of(&FLUX_FORMS, run.flux_form),
        name_of(&DIFFUSION, run.diffusion),
        run.cfl_safety,
        opt(run.max_substep),
        run.refresh_potential,
        opt(run.inflow_reference_density),
        init.background,
        init.amplitude,
        init.center.0,
        init.center.1,
        init.rate,
        list(&run.sweep_sigmas),
        list(&run.sweep_betas),
    ));
    s.push_str(&format!(
        "[mfg]\nt_end = {:?}\ndt = {:?}\nterminal_amplitude = {:?}\npicard_damping = {:?}\n\
         picard_tolerance = {:?}\npicard_max_outer = {}\n\n",
        m.t_end,
        m.dt,
        m.terminal_amplitude,
        m.picard.damping,
        m.picard.tolerance,
        m.picard.max_outer
    ));
    s.push_str(&format!(
        "[particles]\ncount = {}\nsmoothing = {}\n\n",
        c.particles.count, c.particles.smoothing
    ));
    s.push_str(&format!(
        "[output]\ndir = {}\nformat = {}\nseed = {}\n",
        c.output.dir,
        name_of(&FORMATS, c.output.format),
        c.output.seed
    ));
    s
}

impl RunConfig {
    pub fn initial_density(&self) -> crate::grid::ScalarField {
        let i = &self.run.initial;
        gaussian_bump(self.grid, i.background, i.amplitude, i.center, i.rate)
    }

    pub fn quasi_stationary_run(&self) -> QuasiStationaryRun {
        let mut run = QuasiStationaryRun {
            params: self.params,
            grid: self.grid,
            bcs: self.boundaries,
            rho0: self.initial_density(),
            t_end: self.run.t_end,
            dt: self.run.dt,
            snapshot_every: self.run.snapshot_every,
            fp: FpStepConfig {
                diffusion_mode: self.run.diffusion,
                cfl_safety: self.run.cfl_safety,
                flux_form: self.run.flux_form,
            },
            potential_solver: match self.run.potential_solver {
                SolverKind::Sweeping => PotentialSolver::Sweeping(SweepingConfig::default()),
                SolverKind::Viscous => PotentialSolver::Viscous(StationaryHjbConfig::default()),
                SolverKind::ViscousUpwind => {
                    PotentialSolver::ViscousUpwind(UpwindHjbConfig::default())
                }
            },
            inflow_reference_density: self.run.inflow_reference_density,
            density_bound: self.params.rho_max + 1e-8,
            refresh_potential: self.run.refresh_potential,
            max_substep: self.run.max_substep,
        };
        run.reanchor();
        run
    }

    /// The MFG problem always lives on the flat torus; boundary keys are
    /// ignored here.
    pub fn mfg_problem(&self) -> MfgProblem {
        MfgProblem {
            params: self.params,
            grid: self.grid,
            rho0: self.initial_density(),
            phi_terminal: cosine_terminal_cost(self.grid, self.mfg.terminal_amplitude),
            t_end: self.mfg.t_end,
            dt: self.mfg.dt,
            picard: self.mfg.picard,
            fp: FpStepConfig {
                diffusion_mode: self.run.diffusion,
                cfl_safety: self.run.cfl_safety,
                flux_form: FluxForm::Mobility,
            },
        }
    }

    /// Fails if the run cannot start: parameters, boundaries and grids are
    /// re-checked by the run itself.
    pub fn validate_run(&self) -> Result<(), SolverError> {
        self.quasi_stationary_run().validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[model]\nbeta = 2\nrho_max = 1\nsigma = 0.01\n[grid]\nlx = 4\nly = 2\nnx = 80\nny = 40\n[run]\nt_end = 1\ndt = 0.05\n";

    #[test]
    fn minimal_config_gets_corridor_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.grid.nx, 80);
        assert_eq!(c.boundaries.potential.left, EdgeCondition::Wall);
        assert_eq!(c.boundaries.potential.right, EdgeCondition::Exit);
        assert_eq!(c.run.flux_form, FluxForm::Eikonal);
    }

    #[test]
    fn beta_out_of_range_names_its_line() {
        let text = MINIMAL.replace("beta = 2", "beta = 3");
        let errs = parse_config(&text).unwrap_err();
        assert_eq!(errs.0.len(), 1);
        assert_eq!(errs.0[0].line, Some(2));
        assert!(errs.0[0].message.contains("beta out of [0,2]"));
    }

    #[test]
    fn empty_file_lists_every_required_key() {
        let errs = parse_config("").unwrap_err();
        let missing: Vec<&str> = errs.0.iter().map(|e| e.message.as_str()).collect();
        assert_eq!(missing.len(), 9, "{missing:?}");
        for key in [
            "beta", "rho_max", "sigma", "lx", "ly", "nx", "ny", "t_end", "dt",
        ] {
            assert!(
                missing.iter().any(|m| m.contains(&format!("`{key}`"))),
                "{key}"
            );
        }
    }

    #[test]
    fn collects_all_errors_with_lines() {
        let text = format!("{MINIMAL}bogus = 1\n[particles]\ncount = many\n[nowhere]\nx = 1\n");
        let errs = parse_config(&text).unwrap_err();
        let lines: Vec<Option<usize>> = errs.0.iter().map(|e| e.line).collect();
        assert_eq!(lines, vec![Some(13), Some(15), Some(16), Some(17)]);
    }

    #[test]
    fn inflow_edges_round_trip() {
        let text = format!("{MINIMAL}[boundary]\npotential_left = inflow 0.5 8.0\n");
        let c = parse_config(&text).unwrap();
        assert_eq!(
            c.boundaries.potential.left,
            EdgeCondition::Inflow {
                rho_b: 0.5,
                phi_b: 8.0
            }
        );
        assert_eq!(parse_config(&serialize_config(&c)).unwrap(), c);
    }

    #[test]
    fn one_sided_periodic_is_rejected() {
        let text = format!("{MINIMAL}[boundary]\ndensity_left = wall\n");
        let errs = parse_config(&text).unwrap_err();
        assert_eq!(errs.0[0].line, Some(14));
    }
}
