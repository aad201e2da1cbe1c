use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hughes_core::config::{parse_config, serialize_config, RunConfig};
use hughes_core::coupling::{
    beta_sweep, check_assumptions, energy_identity_residual, run_quasi_stationary,
    solve_mfg_picard, vanishing_viscosity_sweep, AssumptionMode, MfgError, RunError, Trajectory,
};
use hughes_core::io::{
    diagnostics_csv, read_snapshot, snapshot_to_bytes, snapshot_to_text, SnapshotFormat,
};
use hughes_core::particles::run_mean_field_comparison;
use hughes_core::render::{arrow_csv, heatmap_ppm};
use hughes_core::{ScalarField, SolverError};

mod checks;

#[derive(Parser)]
#[command(
    name = "hughes",
    version,
    about = "Generalized Hughes crowd model experiments"
)]
struct Cli {
    /// Worker threads for parallel sections.
    #[arg(long, global = true, env = "GH_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Configuration file (may also be given with --config).
    #[arg(value_name = "CONFIG")]
    config_pos: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `[output] seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Quasi-stationary evolution: diagnostics CSV and field snapshots.
    Simulate(RunArgs),
    /// Forward-backward MFG on the torus by damped Picard iteration.
    Mfg(RunArgs),
    /// Particle ensemble co-evolved with the PDE.
    Particles(RunArgs),
    /// Vanishing-viscosity sweep over `[run] sweep_sigmas`.
    SweepSigma(RunArgs),
    /// Regime comparison over `[run] sweep_betas`.
    SweepBeta(RunArgs),
    /// Initial-data assumptions plus model invariants.
    Check(RunArgs),
    /// Heatmap (PPM) of a snapshot plus an arrow-field CSV.
    Render(RenderArgs),
}

#[derive(Args)]
struct RenderArgs {
    snapshot: PathBuf,
    /// Matching potential snapshot; defaults to the `phi_` sibling of a `rho_` file.
    #[arg(long)]
    phi: Option<PathBuf>,
    /// Model parameters for the velocity field and the default color range.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    min: Option<f64>,
    #[arg(long)]
    max: Option<f64>,
    /// Arrow subsampling stride in cells.
    #[arg(long, default_value_t = 4)]
    every: usize,
    /// Output directory; defaults to the snapshot's directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Exit status plus message.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    fn solver(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::invalid(format!("i/o error: {e}"))
    }
}

fn run_failure(e: &RunError) -> Failure {
    match e {
        RunError::Invalid(_) => Failure::invalid(e.to_string()),
        _ => Failure::solver(e.to_string()),
    }
}

/// Output directory that remembers what was written to it.
struct RunDir {
    root: PathBuf,
    artifacts: Vec<String>,
}

impl RunDir {
    fn create(root: PathBuf) -> Result<Self, Failure> {
        fs::create_dir_all(&root)?;
        Ok(Self {
            root,
            artifacts: Vec::new(),
        })
    }

    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), Failure> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, bytes)?;
        self.artifacts.push(rel.to_string());
        Ok(())
    }

    fn snapshot(
        &mut self,
        name: &str,
        field: &ScalarField,
        t: f64,
        format: SnapshotFormat,
    ) -> Result<(), Failure> {
        let rel = format!("snapshots/{name}.{}", format.extension());
        let bytes = match format {
            SnapshotFormat::Text => snapshot_to_text(field, t).into_bytes(),
            SnapshotFormat::Binary => snapshot_to_bytes(field, t),
        };
        self.write(&rel, &bytes)
    }

    /// Writes `config.cfg` and `manifest.txt`.
    fn finish(mut self, command: &str, config: &str) -> Result<(), Failure> {
        self.write("config.cfg", config.as_bytes())?;
        let mut m = format!("command = {command}\n[artifacts]\n");
        for a in &self.artifacts {
            m.push_str(a);
            m.push('\n');
        }
        m.push_str("[config]\n");
        m.push_str(config);
        fs::write(self.root.join("manifest.txt"), m)?;
        Ok(())
    }
}

struct Loaded {
    config: RunConfig,
    text: String,
    dir: RunDir,
}

fn load(args: &RunArgs) -> Result<Loaded, Failure> {
    let path = args
        .config
        .as_ref()
        .or(args.config_pos.as_ref())
        .ok_or_else(|| Failure::invalid("no configuration given (pass CONFIG or --config)"))?;
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
    let mut config =
        parse_config(&text).map_err(|e| Failure::invalid(format!("{}:\n{e}", path.display())))?;
    if let Some(out) = &args.out {
        config.output.dir = out.display().to_string();
    }
    if let Some(seed) = args.seed {
        config.output.seed = seed;
    }
    let text = serialize_config(&config);
    let dir = RunDir::create(PathBuf::from(&config.output.dir))?;
    Ok(Loaded { config, text, dir })
}

fn write_trajectory(
    dir: &mut RunDir,
    traj: &Trajectory,
    format: SnapshotFormat,
) -> Result<(), Failure> {
    dir.write(
        "diagnostics.csv",
        diagnostics_csv(&traj.diagnostics).as_bytes(),
    )?;
    for s in &traj.snapshots {
        dir.snapshot(&format!("rho_{:06}", s.step), &s.rho, s.t, format)?;
        dir.snapshot(&format!("phi_{:06}", s.step), &s.phi, s.t, format)?;
    }
    Ok(())
}

fn simulate(args: &RunArgs) -> Result<(), Failure> {
    let Loaded {
        config,
        text,
        mut dir,
    } = load(args)?;
    let run = config.quasi_stationary_run();
    let result = run_quasi_stationary(&run);
    let traj = match &result {
        Ok(t) => Some(t),
        Err(e) => e.partial(),
    };
    if let Some(traj) = traj {
        write_trajectory(&mut dir, traj, config.output.format)?;
    }
    dir.finish("simulate", &text)?;
    result.map(|_| ()).map_err(|e| run_failure(&e))
}

fn mfg(args: &RunArgs) -> Result<(), Failure> {
    let Loaded {
        config,
        text,
        mut dir,
    } = load(args)?;
    let problem = config.mfg_problem();
    let residual_csv = |res: &[f64]| {
        let mut s = String::from("iteration,residual\n");
        for (k, r) in res.iter().enumerate() {
            s.push_str(&format!("{},{}\n", k + 1, hughes_core::io::fmt15(*r)));
        }
        s
    };
    let solution = match solve_mfg_picard(&problem) {
        Ok(s) => s,
        Err(e) => {
            let failure = match &e {
                MfgError::Invalid(_) => Failure::invalid(e.to_string()),
                MfgError::NotConverged { residuals } => {
                    dir.write("picard_residuals.csv", residual_csv(residuals).as_bytes())?;
                    Failure::solver(e.to_string())
                }
                MfgError::Solver { .. } => Failure::solver(e.to_string()),
            };
            dir.finish("mfg", &text)?;
            return Err(failure);
        }
    };
    dir.write(
        "picard_residuals.csv",
        residual_csv(&solution.outer_residuals).as_bytes(),
    )?;
    let bcs = problem.bcs();
    let e = energy_identity_residual(
        &solution.rho,
        &solution.phi,
        &problem.rho0,
        &problem.phi_terminal,
        &problem.params,
        problem.dt,
        &bcs.potential,
    )
    .map_err(|e| Failure::solver(e.to_string()))?;
    let f = hughes_core::io::fmt15;
    let energy = format!(
        "initial_pairing,terminal_pairing,dissipation,residual\n{},{},{},{}\n",
        f(e.initial_pairing),
        f(e.terminal_pairing),
        f(e.dissipation),
        f(e.residual)
    );
    dir.write("energy.csv", energy.as_bytes())?;
    let last = solution.rho.len() - 1;
    for (k, t) in solution.times().into_iter().enumerate() {
        if k % config.run.snapshot_every == 0 || k == last {
            dir.snapshot(
                &format!("rho_{k:06}"),
                &solution.rho[k],
                t,
                config.output.format,
            )?;
            dir.snapshot(
                &format!("phi_{k:06}"),
                &solution.phi[k],
                t,
                config.output.format,
            )?;
        }
    }
    dir.finish("mfg", &text)
}

fn particles(args: &RunArgs) -> Result<(), Failure> {
    let Loaded {
        config,
        text,
        mut dir,
    } = load(args)?;
    let run = config.quasi_stationary_run();
    let p = config.particles;
    let result = run_mean_field_comparison(&run, p.count, config.output.seed, p.smoothing);
    match result {
        Ok(c) => {
            dir.write("comparison.csv", c.to_csv().as_bytes())?;
            dir.write("ensemble.csv", c.final_ensemble.to_csv().as_bytes())?;
            dir.finish("particles", &text)
        }
        Err(e) => {
            dir.finish("particles", &text)?;
            Err(run_failure(&e))
        }
    }
}

fn sweep_sigma(args: &RunArgs) -> Result<(), Failure> {
    let Loaded {
        config,
        text,
        mut dir,
    } = load(args)?;
    let run = config.quasi_stationary_run();
    let sweep = vanishing_viscosity_sweep(&run, &config.run.sweep_sigmas).map_err(|e| match e {
        SolverError::Invalid(_) => Failure::invalid(e.to_string()),
        _ => Failure::solver(e.to_string()),
    })?;
    dir.write("sigma_sweep.csv", sweep.to_csv().as_bytes())?;
    dir.finish("sweep-sigma", &text)?;
    if sweep.failures.is_empty() {
        Ok(())
    } else {
        let lines: Vec<String> = sweep
            .failures
            .iter()
            .map(|(s, e)| format!("sigma {s}: {e}"))
            .collect();
        Err(Failure::solver(lines.join("\n")))
    }
}

fn sweep_beta(args: &RunArgs) -> Result<(), Failure> {
    let Loaded {
        config,
        text,
        mut dir,
    } = load(args)?;
    let run = config.quasi_stationary_run();
    let sweep = beta_sweep(&run, &config.run.sweep_betas);
    dir.write("beta_sweep.csv", sweep.comparison_csv().as_bytes())?;
    let mut failures = Vec::new();
    for (beta, r) in &sweep.runs {
        let traj = match r {
            Ok(t) => Some(t),
            Err(e) => {
                failures.push((run_failure(e), format!("beta {beta}: {e}")));
                e.partial()
            }
        };
        if let Some(t) = traj {
            dir.write(
                &format!("diagnostics_beta_{beta}.csv"),
                diagnostics_csv(&t.diagnostics).as_bytes(),
            )?;
        }
    }
    dir.finish("sweep-beta", &text)?;
    if failures.is_empty() {
        return Ok(());
    }
    let code = failures.iter().map(|(f, _)| f.code).max().unwrap_or(2);
    let message = failures
        .into_iter()
        .map(|(_, m)| m)
        .collect::<Vec<_>>()
        .join("\n");
    Err(Failure { code, message })
}

fn check(args: &RunArgs) -> Result<(), Failure> {
    let Loaded {
        config,
        text,
        mut dir,
    } = load(args)?;
    let rho0 = config.initial_density();
    let report = check_assumptions(&rho0, &[], &config.params, AssumptionMode::QuasiStationary);
    let mut out = String::new();
    out.push_str(&format!(
        "initial density in [0, rho_max]: {} ({} violating cells)\n",
        if report.pass { "ok" } else { "FAIL" },
        report.violations.len()
    ));
    for (i, j, r) in &report.violations {
        out.push_str(&format!("  cell ({i}, {j}): rho0 = {r}\n"));
    }
    let invariants = checks::invariant_suite(&config.params, 200, config.output.seed);
    for c in &invariants {
        out.push_str(&format!(
            "{}: {} ({})\n",
            c.name,
            if c.pass { "ok" } else { "FAIL" },
            c.detail
        ));
    }
    print!("{out}");
    dir.write("check.txt", out.as_bytes())?;
    dir.finish("check", &text)?;
    if report.pass && invariants.iter().all(|c| c.pass) {
        Ok(())
    } else {
        Err(Failure::invalid("check failed"))
    }
}

fn phi_sibling(snapshot: &Path) -> Option<PathBuf> {
    let name = snapshot.file_name()?.to_str()?;
    let rest = name.strip_prefix("rho_")?;
    let candidate = snapshot.with_file_name(format!("phi_{rest}"));
    candidate.exists().then_some(candidate)
}

fn render(args: &RenderArgs) -> Result<(), Failure> {
    let (rho, _) = read_snapshot(&args.snapshot)
        .map_err(|e| Failure::invalid(format!("{}: {e}", args.snapshot.display())))?;
    let config = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p)?;
            Some(
                parse_config(&text)
                    .map_err(|e| Failure::invalid(format!("{}:\n{e}", p.display())))?,
            )
        }
        None => None,
    };
    let rho_max = config.as_ref().map_or(1.0, |c| c.params.rho_max);
    let (min, max) = (args.min.unwrap_or(0.0), args.max.unwrap_or(rho_max));
    let out_dir = match &args.out {
        Some(d) => d.clone(),
        None => args
            .snapshot
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default(),
    };
    fs::create_dir_all(&out_dir)?;
    let stem = args
        .snapshot
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("snapshot")
        .to_string();
    fs::write(
        out_dir.join(format!("{stem}.ppm")),
        heatmap_ppm(&rho, min, max),
    )?;
    let phi_path = args.phi.clone().or_else(|| phi_sibling(&args.snapshot));
    if let Some(phi_path) = phi_path {
        let Some(config) = &config else {
            return Err(Failure::invalid(
                "arrow field needs --config for the model parameters",
            ));
        };
        let (phi, _) = read_snapshot(&phi_path)
            .map_err(|e| Failure::invalid(format!("{}: {e}", phi_path.display())))?;
        let csv = arrow_csv(
            &rho,
            &phi,
            &config.params,
            &config.boundaries.potential,
            args.every,
        )
        .map_err(|e| Failure::invalid(e.to_string()))?;
        fs::write(out_dir.join(format!("{stem}_arrows.csv")), csv)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Mfg(a) => mfg(a),
        Command::Particles(a) => particles(a),
        Command::SweepSigma(a) => sweep_sigma(a),
        Command::SweepBeta(a) => sweep_beta(a),
        Command::Check(a) => check(a),
        Command::Render(a) => render(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
