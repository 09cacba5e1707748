use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use layerpot_harness::config::RunConfig;
use layerpot_harness::experiments::laplace::{self, LaplaceCase};
use layerpot_harness::experiments::stokes::{self, StokesCase};
use layerpot_harness::experiments::{cauchy, example4, write_convergence_csv, Check};

#[derive(Parser)]
#[command(name = "layerpot", version, about = "Close-evaluation experiments: convergence tables, error grids and heatmaps")]
struct Cli {
    /// Directory for CSV and PPM output.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Run on a single thread.
    #[arg(long, global = true)]
    serial: bool,
    /// Exit with status 2 if any acceptance threshold is violated.
    #[arg(long, global = true)]
    check: bool,
    /// JSON run configuration; missing fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Barycentric Cauchy value and derivative versus distance to a node.
    Cauchy,
    /// Laplace BVP convergence table over a grid.
    LaplaceTable,
    /// Stokes examples 1-4.
    Stokes {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        example: u8,
    },
    /// Error field heatmaps for one BVP, close and native.
    Grid {
        #[arg(long, value_enum, default_value = "slp-ext")]
        case: GridCase,
        /// Node count (default from the config).
        #[arg(long)]
        n: Option<usize>,
    },
    /// Print the default configuration as JSON.
    DefaultConfig,
}

#[derive(Clone, Copy, ValueEnum)]
enum GridCase {
    DlpInt,
    DlpExt,
    SlpInt,
    SlpExt,
    StokesExtDirichlet,
    StokesIntDirichlet,
    StokesExtNeumann,
    StokesIntNeumann,
}

fn report(title: &str, checks: &[Check]) -> bool {
    let mut ok = true;
    for c in checks {
        println!("[{}] {title}: {} ({})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        ok &= c.pass;
    }
    ok
}

fn run(cli: &Cli, cfg: &RunConfig) -> Result<bool> {
    let out = &cli.out;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let start = Instant::now();
    let ok = match &cli.command {
        Command::DefaultConfig => {
            println!("{}", serde_json::to_string_pretty(&RunConfig::default())?);
            return Ok(true);
        }
        Command::Cauchy => {
            let rows = cauchy::run(&cfg.cauchy)?;
            cauchy::write_csv(&rows, &out.join("cauchy.csv"))?;
            let a = report("cauchy", &cauchy::check_value(&rows));
            report("cauchy", &cauchy::check_derivative(&rows)) && a
        }
        Command::LaplaceTable => {
            let rows = laplace::run_table(&cfg.laplace)?;
            write_convergence_csv(&rows, &out.join("laplace_table.csv"))?;
            let n = *cfg.laplace.ns.iter().max().unwrap_or(&250);
            report("laplace-table", &laplace::check_table(&rows, n, 10.0))
        }
        Command::Stokes { example } => match example {
            1 => {
                let rows = stokes::run_example1(&cfg.example1)?;
                write_convergence_csv(&rows, &out.join("example1.csv"))?;
                report("example 1", &stokes::check_example1(&rows, &cfg.example1))
            }
            2 => {
                let rows = stokes::run_example2(&cfg.example2)?;
                write_convergence_csv(&rows, &out.join("example2.csv"))?;
                report("example 2", &stokes::check_example2(&rows, &cfg.example2))
            }
            3 => {
                let rows = stokes::run_example3(&cfg.example3)?;
                write_convergence_csv(&rows, &out.join("example3.csv"))?;
                let curve = cfg.example3.curve.build()?;
                let reference = cfg.example3.reference(StokesCase::ExtNeumann);
                let sol = stokes::solve_stokes_case(StokesCase::ExtNeumann, &curve, reference, cfg.example3.beta)?;
                let g = sol.error_grid(cfg.example3.grid, reference)?;
                g.write_csv(&out.join("example3_ext_neumann_grid.csv"))?;
                g.write_ppm(out, "example3_ext_neumann", -16.0, -10.0)?;
                report("example 3", &stokes::check_example3(&rows, &cfg.example3))
            }
            _ => {
                let runs = example4::run(&cfg.example4)?;
                write_convergence_csv(&example4::rows(&runs), &out.join("example4.csv"))?;
                let last = runs.last().context("no node counts configured")?;
                last.grid.write_csv(&out.join("example4_grid.csv"))?;
                last.grid.write_ppm(out, "example4", -16.0, -8.0)?;
                report("example 4", &example4::check(last, &cfg.example4))
            }
        },
        Command::Grid { case, n } => grid(cfg, *case, *n, out)?,
    };
    log::info!("wall clock {:.2} s", start.elapsed().as_secs_f64());
    Ok(ok)
}

fn grid(cfg: &RunConfig, case: GridCase, n: Option<usize>, out: &Path) -> Result<bool> {
    let lap = match case {
        GridCase::DlpInt => Some(LaplaceCase::DlpInt),
        GridCase::DlpExt => Some(LaplaceCase::DlpExt),
        GridCase::SlpInt => Some(LaplaceCase::SlpInt),
        GridCase::SlpExt => Some(LaplaceCase::SlpExt),
        _ => None,
    };
    if let Some(lc) = lap {
        if lc == LaplaceCase::SlpExt {
            let mut c = cfg.exterior_slp.clone();
            if let Some(n) = n {
                c.curve = c.curve.with_n(n);
            }
            let r = laplace::run_exterior_slp(&c)?;
            for (name, g, hi) in [
                ("slp_ext_close_u", &r.close_u, -10.0),
                ("slp_ext_close_grad", &r.close_grad, -8.0),
                ("slp_ext_native_u", &r.native_u, 0.0),
                ("slp_ext_native_grad", &r.native_grad, 0.0),
            ] {
                g.write_csv(&out.join(format!("{name}.csv")))?;
                g.write_ppm(out, name, -16.0, hi)?;
            }
            return Ok(report("grid", &laplace::check_exterior_slp(&r)));
        }
        let curve = cfg.laplace.curve.with_n(n.unwrap_or(cfg.laplace.curve.n())).build()?;
        let reference = cfg.laplace.reference(lc);
        let sol = laplace::solve_case(lc, &curve, reference)?;
        let stem = lc.name().replace(' ', "_").to_lowercase();
        for native in [false, true] {
            let (u, g) = sol.error_grids(cfg.laplace.grid, reference, native)?;
            let kind = if native { "native" } else { "close" };
            for (q, grid) in [("u", &u), ("grad", &g)] {
                let name = format!("{stem}_{kind}_{q}");
                grid.write_csv(&out.join(format!("{name}.csv")))?;
                grid.write_ppm(out, &name, -16.0, if native { 0.0 } else { -8.0 })?;
            }
        }
        return Ok(true);
    }
    let sc = match case {
        GridCase::StokesExtDirichlet => StokesCase::ExtDirichlet,
        GridCase::StokesIntDirichlet => StokesCase::IntDirichlet,
        GridCase::StokesExtNeumann => StokesCase::ExtNeumann,
        _ => StokesCase::IntNeumann,
    };
    let curve = cfg.example3.curve.with_n(n.unwrap_or(cfg.example3.curve.n())).build()?;
    let reference = cfg.example3.reference(sc);
    let sol = stokes::solve_stokes_case(sc, &curve, reference, cfg.example3.beta)?;
    let g = sol.error_grid(cfg.example3.grid, reference)?;
    let name = format!("stokes_{}", sc.name().replace(' ', "_").to_lowercase());
    g.write_csv(&out.join(format!("{name}.csv")))?;
    g.write_ppm(out, &name, -16.0, -8.0)?;
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let threads = if cli.serial { Some(1) } else { cli.threads };
    if let Some(t) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            log::error!("thread pool: {e}");
            return ExitCode::FAILURE;
        }
    }
    let cfg = match cli.config.as_deref().map(RunConfig::load).transpose() {
        Ok(c) => c.unwrap_or_default(),
        Err(e) => {
            log::error!("{e:#}");
            return ExitCode::FAILURE;
        }
    };
    match run(&cli, &cfg) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) if cli.check => ExitCode::from(2),
        Ok(false) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::FAILURE
        }
    }
}
