use clap::{Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use teng_bc::formats::{self, samples_csv, spectral_bytes, write_atomic};
use teng_bc::{compare_runs, parse_config, presets, verify, ExperimentConfig, Failure};
use teng_bc_core::geometry::SampleSet;
use teng_bc_core::reference::spectral::sample_grid;
use teng_bc_core::reference::{burgers_initial, burgers_spectral, SpectralConfig};

#[derive(Parser)]
#[command(name = "teng-bc", version, about = "Boundary-aware time-evolving neural PDE solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a config file or a built-in preset name.
    Run {
        config: String,
        /// Also write the collocation points to `samples.csv`.
        #[arg(long)]
        dump_samples: bool,
    },
    /// Tabulate the errors of finished runs by scheme.
    Compare {
        summaries: Vec<PathBuf>,
        /// Write CSV instead of an aligned table.
        #[arg(long)]
        csv: bool,
    },
    /// Run the oracle suite; exits 3 if any check fails.
    Verify,
    /// Precompute a reference field cache.
    Reference {
        #[arg(long, value_enum)]
        equation: RefEquation,
        #[arg(long, default_value_t = 256)]
        modes: usize,
        #[arg(long, default_value_t = 1e-3)]
        nu: f64,
        #[arg(long, default_value_t = 1e-4)]
        dt: f64,
        #[arg(long, default_value_t = 4.0)]
        t_final: f64,
        /// Spacing of stored output times.
        #[arg(long, default_value_t = 0.1)]
        every: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// List the built-in presets.
    Presets,
}

#[derive(Clone, Copy, ValueEnum)]
enum RefEquation {
    Burgers,
}

fn load_config(arg: &str) -> Result<ExperimentConfig, Failure> {
    let path = Path::new(arg);
    if !path.exists() {
        if let Some(parsed) = presets::preset(arg) {
            return parsed.map_err(|e| Failure::Config(format!("preset {arg}: {e}")));
        }
    }
    let bytes = formats::read_file(path)?;
    let text = String::from_utf8(bytes).map_err(|_| Failure::Config(format!("{arg}: not UTF-8")))?;
    parse_config(&text).map_err(|e| Failure::Config(format!("{arg}: {e}")))
}

fn run(config: &str, dump_samples: bool) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    if dump_samples {
        let samples = SampleSet::new(cfg.domain(), cfg.n_interior, cfg.n_boundary)?;
        std::fs::create_dir_all(&cfg.output_dir).map_err(|e| Failure::Io(format!("{}: {e}", cfg.output_dir.display())))?;
        write_atomic(&cfg.output_dir.join("samples.csv"), samples_csv(&samples).as_bytes())?;
    }
    let out = teng_bc::run_experiment(&cfg)?;
    let s = &out.summary;
    let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.3e}"));
    println!(
        "{} {} {}: {} steps to t = {}, final rel-L2 {}, full-range rel-L2 {}",
        s.equation,
        s.boundary,
        s.scheme,
        s.steps,
        s.t_final,
        fmt(s.final_rel_l2),
        fmt(s.full_range_rel_l2)
    );
    println!("wrote {}", out.output_dir.display());
    Ok(())
}

fn reference(modes: usize, nu: f64, dt: f64, t_final: f64, every: f64, out: &Path) -> Result<(), Failure> {
    if !(every > 0.0 && t_final >= 0.0) {
        return Err(Failure::Config("--every must be positive and --t-final non-negative".into()));
    }
    let count = (t_final / every).round() as usize;
    let times: Vec<f64> = (0..=count).map(|k| k as f64 * every).collect();
    let cfg = SpectralConfig {
        modes,
        nu,
        dt,
        ..SpectralConfig::default()
    };
    cfg.validate()?;
    let u0 = sample_grid(cfg.grid_size(), burgers_initial);
    let sol = burgers_spectral(&u0, cfg, &times)?;
    write_atomic(out, &spectral_bytes(&sol))?;
    println!("wrote {} fields on a {}x{} grid to {}", sol.times.len(), sol.n, sol.n, out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, dump_samples } => run(&config, dump_samples),
        Command::Compare { summaries, csv } => compare_runs(&summaries).map(|c| {
            print!("{}", if csv { c.to_csv() } else { c.to_text() });
        }),
        Command::Verify => {
            let checks = verify::run_all();
            for c in &checks {
                println!("{c}");
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            if failed == 0 {
                Ok(())
            } else {
                Err(Failure::Acceptance(format!("{failed} of {} checks failed", checks.len())))
            }
        }
        Command::Reference {
            equation: RefEquation::Burgers,
            modes,
            nu,
            dt,
            t_final,
            every,
            out,
        } => reference(modes, nu, dt, t_final, every, &out),
        Command::Presets => {
            for (group, list) in [("desk", presets::DESK), ("full", presets::FULL)] {
                for (name, _) in list {
                    println!("{group}\t{name}");
                }
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("teng-bc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
