use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use davydov::ansatz::trajectory_spectrum;
use davydov::cli::{self, find_preset, CliError, RunConfig, PRESETS};
use davydov::dynamics::{read_trajectory, SweepOptions, Trajectory};

#[derive(Parser)]
#[command(name = "davydov", version, about = "Multi-D2 dynamics of a qubit between two thermal baths")]
struct Cli {
    /// Worker threads for sweeps and matrix–vector products (0 = all cores).
    #[arg(long, global = true, env = "DAVYDOV_WORKERS", default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Discretize both baths and write their mode tables.
    Bath(ConfigArgs),
    /// Run the full pipeline for one configuration.
    Run(ConfigArgs),
    /// Two-stage convergence sweep over multiplicity and mode count.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Multiplicities, e.g. `10,15,18,20`.
        #[arg(long = "M", value_delimiter = ',', required = true)]
        m_list: Vec<usize>,
        /// Mode counts per bath (log: modes, ID: cap); default: configured.
        #[arg(long = "N", value_delimiter = ',')]
        n_list: Vec<usize>,
        /// Absolute σ_z agreement tolerance (default: 1 % of the σ_z range).
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Exact truncated-Fock reference for the configured Hamiltonian.
    Oracle(ConfigArgs),
    /// Compare σ_z of two trajectory files.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Divergence threshold for the first-crossing time.
        #[arg(long, default_value_t = 1e-2)]
        threshold: f64,
    },
    /// Amplitude spectrum of σ_z(t) from a trajectory file.
    Spectrum {
        trajectory: PathBuf,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the regime presets, or write them as configuration files.
    Presets {
        /// Directory to write `<name>.toml` files into.
        #[arg(long)]
        write: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// Configuration file.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Named preset instead of a file (see `presets`).
    #[arg(long)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override `ansatz.multiplicity`.
    #[arg(long)]
    multiplicity: Option<usize>,
    /// Override `ansatz.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Override `ansatz.noise`.
    #[arg(long)]
    noise: Option<f64>,
    /// Override `integrator.dt`.
    #[arg(long)]
    dt: Option<f64>,
    /// Override `integrator.t_final`.
    #[arg(long)]
    t_final: Option<f64>,
    /// Override `discretization.modes`.
    #[arg(long)]
    modes: Option<usize>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => RunConfig::from_file(path).map_err(|e| match e {
                CliError::Config { line, key, message } => {
                    CliError::Config { line, key, message: format!("{message} [{}]", path.display()) }
                }
                other => other,
            })?,
            (None, Some(name)) => find_preset(name)
                .ok_or_else(|| CliError::Config { line: None, key: "preset".into(), message: format!("unknown preset `{name}`") })?
                .config(),
            (None, None) => unreachable!("clap requires --config or --preset"),
        };
        if let Some(m) = self.multiplicity {
            cfg.ansatz.multiplicity = m;
        }
        if let Some(s) = self.seed {
            cfg.ansatz.seed = s;
        }
        if let Some(n) = self.noise {
            cfg.ansatz.noise = n;
        }
        if let Some(dt) = self.dt {
            cfg.integrator.dt = dt;
        }
        if let Some(t) = self.t_final {
            cfg.integrator.t_final = t;
        }
        if self.modes.is_some() {
            cfg.discretization.modes = self.modes;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn read_traj(path: &Path) -> Result<Trajectory, CliError> {
    Ok(read_trajectory(BufReader::new(File::open(path)?))?)
}

fn execute(cli: Cli, sink: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Bath(args) => {
            let cfg = args.load()?;
            let setup = cli::run_bath_stage(&cfg, &args.out)?;
            for d in &setup.descriptors {
                writeln!(sink, "{d}")?;
            }
        }
        Command::Run(args) => {
            let cfg = args.load()?;
            let out = cli::run(&cfg, &args.out)?;
            let s = &out.summary;
            writeln!(sink, 
                "regime {} | max σ² {:.3e} | converged {} | norm dev {:.2e} | energy drift {:.2e} | {:.1} s",
                s.regime, s.max_sigma2, s.converged, s.max_norm_deviation, s.relative_energy_drift, s.timings.dynamics_s
            )?;
            writeln!(sink, "outputs in {}", args.out.display())?;
        }
        Command::Sweep { config, m_list, n_list, tol } => {
            let cfg = config.load()?;
            let opts = SweepOptions {
                tol_conv: tol,
                sigma2_threshold: cfg.convergence.sigma2_threshold,
                workers: cli.workers,
            };
            let report = cli::sweep(&cfg, &m_list, &n_list, &opts, Some(&config.out))?;
            for e in &report.entries {
                writeln!(sink, 
                    "{:?} M={} N={} max σ²={:.3e} completed={} Δσ_z={}",
                    e.stage,
                    e.multiplicity,
                    e.modes,
                    e.max_sigma2,
                    e.completed,
                    e.diff_to_next.map(|d| format!("{d:.3e}")).unwrap_or_else(|| "-".into())
                )?;
            }
            writeln!(sink, 
                "converged M = {} N = {}",
                report.converged_multiplicity.map(|m| m.to_string()).unwrap_or_else(|| "none".into()),
                report.converged_modes.map(|m| m.to_string()).unwrap_or_else(|| "none".into())
            )?;
        }
        Command::Oracle(args) => {
            let cfg = args.load()?;
            let setup = cli::run_bath_stage(&cfg, &args.out)?;
            let res = cli::run_oracle(&cfg, &setup.hamiltonian)?;
            let mut w = BufWriter::new(File::create(args.out.join("exact.dat"))?);
            davydov::dynamics::write_trajectory(&mut w, &res.trajectory)?;
            w.flush()?;
            if !res.certified {
                eprintln!("warning: cutoff not certified (n_max = {}, max|Δσ_z| = {:.3e})", res.n_max, res.bound);
            }
            writeln!(sink, "n_max {} certified {} bound {:.3e}", res.n_max, res.certified, res.bound)?;
        }
        Command::Compare { a, b, threshold } => {
            let m = cli::compare_trajectories(&read_traj(&a)?, &read_traj(&b)?, threshold)?;
            writeln!(sink, "max_abs = {:.6e}", m.max_abs)?;
            writeln!(sink, "rms = {:.6e}", m.rms)?;
            match m.first_crossing {
                Some(t) => writeln!(sink, "first_crossing = {t}")?,
                None => writeln!(sink, "first_crossing = none")?,
            }
            writeln!(sink, "samples = {}", m.samples)?;
        }
        Command::Spectrum { trajectory, out: path } => {
            let s = trajectory_spectrum(&read_traj(&trajectory)?)?;
            let mut file;
            let w: &mut dyn Write = match path {
                Some(p) => {
                    file = BufWriter::new(File::create(p)?);
                    &mut file
                }
                None => sink,
            };
            writeln!(w, "# omega amplitude")?;
            for (o, a) in s.omegas.iter().zip(&s.amplitudes) {
                writeln!(w, "{o:.10e} {a:.10e}")?;
            }
            if let Some(d) = s.dominant_omega() {
                eprintln!("dominant ω = {d:.6} (resolution {:.3e})", s.resolution());
            }
        }
        Command::Presets { write } => {
            if let Some(dir) = &write {
                std::fs::create_dir_all(dir)?;
            }
            for p in &PRESETS {
                writeln!(sink, "{:<26} α={:<5} ω_c={:<5} T={:<5} M={:<3} {}", p.name, p.alpha, p.omega_c, p.temperature, p.multiplicity, p.description)?;
                if let Some(dir) = &write {
                    std::fs::write(dir.join(format!("{}.toml", p.name)), p.config().to_toml_string()?)?;
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.workers > 0 {
        // Only fails if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build_global();
    }
    let mut stdout = std::io::stdout().lock();
    match execute(cli, &mut stdout).and_then(|()| Ok(stdout.flush()?)) {
        Ok(()) => ExitCode::SUCCESS,
        // The reader went away (e.g. `| head`); nothing left to report.
        Err(CliError::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
