//! Command-line driver: mesh generation and checking, the discrete
//! calculus verification suite, conservation runs, and the dispersion
//! analysis. Emits plot-ready CSV; no interactive steering.
//!
//! Exit codes: 0 ok, 1 check failure, 2 usage/config error, 3 solver
//! failure.

mod config;

use clap::{Parser, Subcommand};
use config::Config;
use dualswe::dynamics::Scheme;
use dualswe::elliptic::{Diagnostics, PhysicsConfig, State};
use dualswe::fields::CellField;
use dualswe::mesh::{build_periodic_quad_mesh, build_perturbed_lattice_mesh, DualMesh};
use dualswe::rng::Lcg64;
use dualswe::timeloop::{self, Integrator, RunConfig, SnapshotSink};
use dualswe::{dispersion, verify, Error};
use std::io::Write as _;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "dualswe",
    about = "Conservative shallow water solvers on orthogonal dual meshes",
    version
)]
struct Cli {
    /// Configuration file (flat key = value with [sections]).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for meshes, CSV series and snapshots.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for all reproducible random fields.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Override [time].dt.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Override [time].steps.
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Override [time].scheme (energy | energy-enstrophy).
    #[arg(long, global = true)]
    scheme: Option<String>,
    /// Override [solver].tol.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a mesh from the [mesh] section and save it.
    MeshGen,
    /// Validate a mesh and print the invariant report.
    MeshCheck,
    /// Run the discrete vector calculus identity suite.
    VerifyCalculus,
    /// Advance the shallow water equations and record conservation series.
    Run,
    /// Compare the linearized spectrum against the Z-grid relation.
    Dispersion,
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::SolverFailure { .. } => 3,
        Error::InvalidArgument(_)
        | Error::Parse { .. }
        | Error::Config(_)
        | Error::MeshQuality(_)
        | Error::Unsupported(_) => 2,
        Error::State(_) => 1,
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    };
    std::process::exit(code);
}

fn dispatch(cli: &Cli) -> dualswe::Result<i32> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(dt) = cli.dt {
        cfg.set("time.dt", format!("{dt}"));
    }
    if let Some(steps) = cli.steps {
        cfg.set("time.steps", format!("{steps}"));
    }
    if let Some(scheme) = &cli.scheme {
        cfg.set("time.scheme", scheme.clone());
    }
    if let Some(tol) = cli.tol {
        cfg.set("solver.tol", format!("{tol:e}"));
    }

    print_header(cli, &cfg);

    match cli.command {
        Command::MeshGen => cmd_mesh_gen(cli, &cfg),
        Command::MeshCheck => cmd_mesh_check(&cfg),
        Command::VerifyCalculus => cmd_verify_calculus(cli, &cfg),
        Command::Run => cmd_run(cli, &cfg),
        Command::Dispersion => cmd_dispersion(cli, &cfg),
    }
}

fn print_header(cli: &Cli, cfg: &Config) {
    println!("# reproducibility");
    println!("#   seed = {}", cli.seed);
    match &cli.config {
        Some(p) => println!("#   config = {}", p.display()),
        None => println!("#   config = (defaults)"),
    }
    for (key, value) in cfg.entries() {
        println!("#   {key} = {value}");
    }
}

fn build_mesh(cfg: &Config) -> dualswe::Result<DualMesh> {
    match cfg.str_or("mesh.type", "periodic-quad") {
        "periodic-quad" => build_periodic_quad_mesh(
            cfg.usize_or("mesh.nx", 8)?,
            cfg.usize_or("mesh.ny", 8)?,
            cfg.f64_or("mesh.lx", 1.0)?,
            cfg.f64_or("mesh.ly", 1.0)?,
        ),
        "lattice-voronoi" => build_perturbed_lattice_mesh(
            cfg.usize_or("mesh.nx", 6)?,
            cfg.usize_or("mesh.ny", 6)?,
            cfg.f64_or("mesh.jitter", 0.1)?,
            cfg.u64_or("mesh.mesh_seed", 7)?,
        ),
        "file" => {
            let path = cfg
                .get("mesh.path")
                .ok_or_else(|| Error::Config("mesh.type = file needs mesh.path".into()))?;
            DualMesh::load(Path::new(path))
        }
        other => Err(Error::Config(format!(
            "unknown mesh.type {other:?} (periodic-quad | lattice-voronoi | file)"
        ))),
    }
}

fn physics(cfg: &Config, mesh: &DualMesh) -> dualswe::Result<PhysicsConfig> {
    Ok(PhysicsConfig::f_plane(
        cfg.f64_or("physics.gravity", 1.0)?,
        cfg.f64_or("physics.f0", 1.0)?,
        mesh,
    ))
}

fn ensure_out_dir(dir: &Path) -> dualswe::Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("creating {dir:?}: {e}")))
}

fn cmd_mesh_gen(cli: &Cli, cfg: &Config) -> dualswe::Result<i32> {
    let mesh = build_mesh(cfg)?;
    let report = mesh.validate();
    print!("{}", report.to_table());
    ensure_out_dir(&cli.out)?;
    let path = cli.out.join("mesh.txt");
    mesh.save(&path)?;
    println!(
        "wrote {} ({} cells, {} edges, {} vertices)",
        path.display(),
        mesh.num_cells(),
        mesh.num_edges(),
        mesh.num_vertices()
    );
    Ok(if report.all_passed() { 0 } else { 1 })
}

fn cmd_mesh_check(cfg: &Config) -> dualswe::Result<i32> {
    let mesh = build_mesh(cfg)?;
    let report = mesh.validate();
    print!("{}", report.to_table());
    if report.all_passed() {
        println!("mesh OK");
        Ok(0)
    } else {
        println!("mesh check FAILED");
        Ok(1)
    }
}

fn cmd_verify_calculus(cli: &Cli, cfg: &Config) -> dualswe::Result<i32> {
    let mesh = build_mesh(cfg)?;
    let report = verify::run_calculus_suite(&mesh, cli.seed, 20)?;
    println!(
        "# identity suite: {} field sets, seed {}, {} mesh ({} cells)",
        report.field_sets,
        report.seed,
        if mesh.is_periodic() {
            "periodic"
        } else {
            "bounded"
        },
        mesh.num_cells()
    );
    print!("{}", report.to_table());
    if report.all_passed() {
        println!("all identities within tolerance");
        Ok(0)
    } else {
        let names: Vec<&str> = report.failures().map(|r| r.name).collect();
        println!("failing identities: {}", names.join(", "));
        Ok(1)
    }
}

/// Initial state from seeded random potentials, consistent by
/// construction (ζ, γ are the operator images of ψ₀, χ₀).
fn initial_state(cfg: &Config, seed: u64, mesh: &DualMesh) -> dualswe::Result<State> {
    let phi_mean = cfg.f64_or("physics.phi_mean", 1.0)?;
    let psi_amp = cfg.f64_or("physics.psi_amp", 0.05)?;
    let chi_amp = cfg.f64_or("physics.chi_amp", 0.01)?;
    let phi_amp = cfg.f64_or("physics.phi_amp", 0.1)?;
    if !(phi_mean > 0.0 && phi_amp.abs() < phi_mean) {
        return Err(Error::Config(format!(
            "need 0 < |phi_amp| < phi_mean, got {phi_amp} vs {phi_mean}"
        )));
    }
    let mut rng = Lcg64::new(seed);
    let n = mesh.num_cells();
    let mut psi0 = CellField::new(rng.fill(n)).scale(psi_amp);
    let chi0 = CellField::new(rng.fill(n)).scale(chi_amp);
    let phi0 = CellField::new(rng.fill(n).iter().map(|u| phi_mean + phi_amp * u).collect());
    // Homogeneous Dirichlet streamfunction data on bounded domains.
    for i in mesh.boundary_cells() {
        psi0.values[i] = 0.0;
    }
    timeloop::initialize_from_velocity_potentials(&psi0, &chi0, &phi0, mesh)
}

fn cmd_run(cli: &Cli, cfg: &Config) -> dualswe::Result<i32> {
    let mesh = build_mesh(cfg)?;
    let physics = physics(cfg, &mesh)?;
    let scheme: Scheme = cfg.str_or("time.scheme", "energy-enstrophy").parse()?;
    let integrator: Integrator = cfg.str_or("time.integrator", "rk4").parse()?;
    let run_config = RunConfig {
        scheme,
        dt: cfg.f64_or("time.dt", 1e-3)?,
        n_steps: cfg.usize_or("time.steps", 100)?,
        integrator,
        solver_tol: cfg.f64_or("solver.tol", dualswe::elliptic::DEFAULT_SOLVER_TOL)?,
        output_every: cfg.usize_or("output.every", 10)?,
        physics,
    };
    run_config.validate()?;

    let state = initial_state(cfg, cli.seed, &mesh)?;
    let dt_limit = timeloop::cfl_dt_limit(&state, run_config.physics.gravity, &mesh);
    if run_config.dt > dt_limit {
        eprintln!(
            "warning: dt = {} exceeds the advisory stability limit {dt_limit:.3e}",
            run_config.dt
        );
    }

    ensure_out_dir(&cli.out)?;
    let mut sink = FullCsvSink {
        dir: cli.out.clone(),
        centers: mesh.cells.iter().map(|c| c.center).collect(),
    };
    let (_, series) = timeloop::run(&state, &run_config, &mesh, &mut sink)?;

    let series_path = cli.out.join("series.csv");
    let mut out = String::from("t,mass,circulation,energy,enstrophy,iters,residual\n");
    for s in &series.samples {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e}\n",
            s.time,
            s.mass,
            s.circulation,
            s.energy,
            s.potential_enstrophy,
            s.solver_iterations,
            s.solver_residual
        ));
    }
    std::fs::write(&series_path, out)
        .map_err(|e| Error::Config(format!("writing {series_path:?}: {e}")))?;

    let drift =
        |pick: fn(&timeloop::ConservationSample) -> f64| series.relative_drift(pick).unwrap_or(0.0);
    let summary = format!
        ("{{\n  \"steps\": {},\n  \"dt\": {:e},\n  \"scheme\": \"{}\",\n  \"integrator\": \"{}\",\n  \"mass_drift\": {:e},\n  \"circulation_drift\": {:e},\n  \"energy_drift\": {:e},\n  \"enstrophy_drift\": {:e}\n}}\n",
        run_config.n_steps,
        run_config.dt,
        cfg.str_or("time.scheme", "energy-enstrophy"),
        cfg.str_or("time.integrator", "rk4"),
        drift(|s| s.mass),
        drift(|s| s.circulation),
        drift(|s| s.energy),
        drift(|s| s.potential_enstrophy),
    );
    print!("{summary}");
    let summary_path = cli.out.join("summary.txt");
    let mut file = std::fs::File::create(&summary_path)
        .map_err(|e| Error::Config(format!("creating {summary_path:?}: {e}")))?;
    writeln!(file, "# dualswe run, seed {}", cli.seed)
        .and_then(|_| file.write_all(summary.as_bytes()))
        .map_err(|e| Error::Config(format!("writing {summary_path:?}: {e}")))?;
    println!("wrote {}", series_path.display());
    Ok(0)
}

struct FullCsvSink {
    dir: PathBuf,
    centers: Vec<[f64; 2]>,
}

impl SnapshotSink for FullCsvSink {
    fn on_snapshot(
        &mut self,
        step: usize,
        _time: f64,
        state: &State,
        diag: &Diagnostics,
    ) -> dualswe::Result<()> {
        let path = self.dir.join(format!("snapshot_{step:06}.csv"));
        let mut out = String::from("cell_id,x,y,phi,zeta,gamma,psi,chi\n");
        for i in 0..state.phi.len() {
            out.push_str(&format!(
                "{i},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                self.centers[i][0],
                self.centers[i][1],
                state.phi.values[i],
                state.zeta.values[i],
                state.gamma.values[i],
                diag.psi.values[i],
                diag.chi.values[i],
            ));
        }
        std::fs::write(&path, out).map_err(|e| Error::Config(format!("writing {path:?}: {e}")))
    }
}

fn cmd_dispersion(cli: &Cli, cfg: &Config) -> dualswe::Result<i32> {
    let mesh = build_mesh(cfg)?;
    let sys = dispersion::LinearizedSystem {
        f0: cfg.f64_or("physics.f0", 1.0)?,
        phibar: cfg.f64_or("physics.phi_mean", 1.0)?,
        gravity: cfg.f64_or("physics.gravity", 1.0)?,
    };
    let analysis = dispersion::analyze(&sys, &mesh)?;

    ensure_out_dir(&cli.out)?;
    let path = cli.out.join("dispersion.csv");
    let mut out = String::from("mode,lambda,omega_numeric,omega_zgrid,abs_err\n");
    for m in &analysis.modes {
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            m.mode, m.laplacian_eigenvalue, m.omega_numeric, m.omega_zgrid, m.abs_err
        ));
    }
    std::fs::write(&path, out).map_err(|e| Error::Config(format!("writing {path:?}: {e}")))?;

    println!(
        "max |omega^2 - (f0^2 + g*phibar*lambda)| = {:.3e} over {} mode pairs",
        analysis.max_abs_err,
        analysis.modes.len()
    );
    println!(
        "zero-frequency modes: {} (expected {}), max |Re| = {:.3e}",
        analysis.zero_modes, analysis.expected_zero_modes, analysis.max_real_part
    );
    println!("wrote {}", path.display());
    let ok = analysis.max_abs_err < 1e-9 && analysis.zero_modes == analysis.expected_zero_modes;
    Ok(if ok { 0 } else { 1 })
}
