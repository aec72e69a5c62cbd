use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use broadbeam_cli::config::RunConfig;
use broadbeam_cli::output::{self, MetricsSection, Report, RunSection};
use broadbeam_cli::reproduce::{format_rows, reproduce, Table};
use broadbeam_cli::run::{self, exit_code, status_name};
use broadbeam_cli::exit;
use clap::{Parser, Subcommand, ValueEnum};
use log::{error, info, warn};

#[derive(Parser)]
#[command(name = "broadbeam", version, about = "Broadband filter-and-sum beamformer design")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Design a beamformer and write coefficients, report and curves.
    Design {
        config: PathBuf,
        /// Output directory (overrides `output.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also run the unregularized start of the iterative design.
        #[arg(long, value_enum)]
        b_path: Option<OnOff>,
        #[arg(long)]
        max_iters: Option<usize>,
        /// Recorded in the report; every design routine is deterministic.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Evaluate a coefficient file against the bands of a config.
    Evaluate {
        coefficients: PathBuf,
        config: PathBuf,
        /// Also write beampattern, WNG and group-delay curves here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rerun a reference comparison table (II, IV, VI or VIII).
    Reproduce {
        table: Table,
        /// Coarser design grid as FREQSxANGLES, for quick runs.
        #[arg(long, value_parser = parse_grid)]
        grid: Option<(usize, usize)>,
    },
    /// Write the conic program of a config in sparse text form.
    DumpProgram {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (m, k) = s.split_once(['x', 'X']).ok_or("expected FREQSxANGLES")?;
    Ok((m.trim().parse().map_err(|e| format!("{e}"))?, k.trim().parse().map_err(|e| format!("{e}"))?))
}

fn load(path: &Path) -> Result<RunConfig, i32> {
    RunConfig::load(path).map_err(|e| {
        error!("{e}");
        exit::CONFIG
    })
}

fn mkdir(dir: &Path) -> Result<(), i32> {
    std::fs::create_dir_all(dir).map_err(|e| {
        error!("cannot create {}: {e}", dir.display());
        exit::CONFIG
    })
}

fn design(config: &Path, out: Option<PathBuf>, b_path: Option<OnOff>, max_iters: Option<usize>, seed: u64) -> Result<i32, i32> {
    let mut cfg = load(config)?;
    if let Some(b) = b_path {
        cfg.iterative.b_path = matches!(b, OnOff::On);
    }
    if let Some(n) = max_iters {
        cfg.iterative.max_iters = n;
    }
    if let Some(dir) = out {
        cfg.output.dir = dir;
    }
    let resolved = cfg.resolve().map_err(|e| {
        error!("{e}");
        exit::CONFIG
    })?;
    let dir = cfg.output.dir.clone();
    mkdir(&dir)?;
    info!("designing {} into {}", cfg.design.kind.name(), dir.display());
    let t0 = std::time::Instant::now();
    let io_err = |e: output::OutputError| {
        error!("{e}");
        exit::CONFIG
    };
    match run::run(&resolved) {
        Ok(f) => {
            if let run::Design::Iterative(d) = &f.design {
                if !d.verification.passed() {
                    warn!("dense-grid verification failed; see [iterative.verification] in the report");
                }
            }
            output::write_all(&dir, &f, &resolved.convex.geometry, &resolved.eval_grid, cfg.grid.eval_angles).map_err(io_err)?;
            let run = RunSection {
                design: cfg.design.kind.name().into(),
                status: "optimal".into(),
                exit_code: exit::OK,
                message: None,
                seed,
                elapsed_s: f.elapsed.as_secs_f64(),
            };
            Report::finished(run, &f, &cfg).write(&dir.join("report.toml")).map_err(io_err)?;
            let m = &f.report.metrics;
            println!(
                "{}: J_sol {:.5}, A_p {:.3} dB, A_a {:.3} dB, sigma_tau {:.3e}, min WNG {:.3} dB",
                cfg.design.kind.name(),
                f.j_sol,
                m.passband_ripple_db,
                m.stopband_attenuation_db,
                m.sigma_tau,
                m.min_wng_db
            );
            Ok(exit::OK)
        }
        Err(e) => {
            let code = exit_code(&e);
            error!("{e}");
            let run = RunSection {
                design: cfg.design.kind.name().into(),
                status: status_name(&e).into(),
                exit_code: code,
                message: Some(e.to_string()),
                seed,
                elapsed_s: t0.elapsed().as_secs_f64(),
            };
            let report = Report { run, metrics: None, solver: None, iterative: None, config: &cfg };
            report.write(&dir.join("report.toml")).map_err(io_err)?;
            println!("{}: {}", cfg.design.kind.name(), status_name(&e));
            Ok(code)
        }
    }
}

fn evaluate(coefficients: &Path, config: &Path, out: Option<PathBuf>) -> Result<i32, i32> {
    let cfg = load(config)?;
    let resolved = cfg.resolve().map_err(|e| {
        error!("{e}");
        exit::CONFIG
    })?;
    let io_err = |e: output::OutputError| {
        error!("{e}");
        exit::CONFIG
    };
    let x = output::read_coefficients(coefficients).map_err(io_err)?;
    if x.num_mics() != resolved.convex.geometry.num_mics() || x.num_taps() != resolved.convex.taps {
        error!(
            "{} holds {}×{} coefficients, config expects {}×{}",
            coefficients.display(),
            x.num_mics(),
            x.num_taps(),
            resolved.convex.geometry.num_mics(),
            resolved.convex.taps
        );
        return Err(exit::CONFIG);
    }
    let geom = &resolved.convex.geometry;
    let report = broadbeam::metrics::evaluate(geom, &x, &resolved.eval_grid, run::cost_kind(&resolved)).map_err(|e| {
        error!("{e}");
        exit_code(&e)
    })?;
    #[derive(serde::Serialize)]
    struct Eval {
        metrics: MetricsSection,
    }
    let j = report.metrics.j_sol;
    print!("{}", toml::to_string(&Eval { metrics: MetricsSection::new(&report.metrics, j) }).expect("metrics serialize"));
    if let Some(dir) = out {
        mkdir(&dir)?;
        output::write_beampattern(&dir.join("beampattern.csv"), geom, &x, &resolved.eval_grid, cfg.grid.eval_angles).map_err(io_err)?;
        output::write_wng(&dir.join("wng.csv"), geom.sample_rate(), &report).map_err(io_err)?;
        output::write_group_delay(&dir.join("group_delay.csv"), &report).map_err(io_err)?;
    }
    Ok(exit::OK)
}

fn dump_program(config: &Path, out: Option<PathBuf>) -> Result<i32, i32> {
    let cfg = load(config)?;
    let resolved = cfg.resolve().map_err(|e| {
        error!("{e}");
        exit::CONFIG
    })?;
    let prog = run::program(&resolved).map_err(|e| {
        error!("{e}");
        exit_code(&e)
    })?;
    let written = match &out {
        Some(p) => std::fs::File::create(p).and_then(|f| prog.write_sparse(std::io::BufWriter::new(f))),
        None => prog.write_sparse(std::io::stdout().lock()),
    };
    written.map_err(|e| {
        error!("cannot write program: {e}");
        exit::CONFIG
    })?;
    Ok(exit::OK)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Design { config, out, b_path, max_iters, seed } => design(&config, out, b_path, max_iters, seed),
        Command::Evaluate { coefficients, config, out } => evaluate(&coefficients, &config, out),
        Command::Reproduce { table, grid } => {
            let rows = reproduce(table, grid);
            print!("{}", format_rows(table, &rows));
            std::io::stdout().flush().ok();
            Ok(exit::OK)
        }
        Command::DumpProgram { config, out } => dump_program(&config, out),
    };
    let code = result.unwrap_or_else(|c| c);
    ExitCode::from(code as u8)
}
