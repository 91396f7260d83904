//! `zib`: run zero-inflated bandit experiments and Monte Carlo checks.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use zib_core::harness::{
    bound_comparison, default_cases, fmt_f64, parse_grid, run_experiment, run_suite, size_proxy_check,
    write_aggregate_csv, write_trace_csv, BoundParams, CoverageStatus, ExperimentConfig, Suite,
};
use zib_core::ZibError;

#[derive(Parser)]
#[command(name = "zib", version, about = "Zero-inflated bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a regret experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `master_seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compare upper confidence bounds on one simulated stream.
    Bounds {
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        sigma2: f64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        delta: f64,
        /// `lo:hi:log:count`, `lo:hi:lin:count` or `n1,n2,...`.
        #[arg(long = "n-grid")]
        n_grid: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        resamples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Monte Carlo violation rates of the confidence bounds.
    Coverage {
        #[arg(long)]
        suite: SuiteArg,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compare a numerical routine against a brute-force oracle.
    Oracle {
        #[arg(long)]
        check: CheckArg,
        #[arg(long, default_value_t = 100)]
        inputs: usize,
        #[arg(long, default_value_t = 100_000)]
        points: usize,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Light,
    Heavy,
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckArg {
    SizeProxy,
}

enum Failure {
    /// Bad input: exit code 2.
    Usage(String),
    /// Runtime or check failure: exit code 1.
    Runtime(String),
}

impl From<ZibError> for Failure {
    fn from(e: ZibError) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn io_err(path: &Path) -> impl Fn(io::Error) -> Failure + '_ {
    move |e| Failure::Runtime(format!("{}: {e}", path.display()))
}

fn threads_from_env() -> Result<Option<usize>, Failure> {
    match std::env::var("ZIB_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure::Usage(format!("ZIB_THREADS must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(None),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn cmd_run(config: &Path, out: &Path, seed: Option<u64>) -> Result<(), Failure> {
    let text = fs::read_to_string(config).map_err(io_err(config))?;
    let mut cfg = ExperimentConfig::parse(&text)
        .map_err(|e| Failure::Usage(format!("{}: {e}", config.display())))?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    let result = run_experiment(&cfg, threads_from_env()?)?;
    fs::create_dir_all(out).map_err(io_err(out))?;
    let trace_path = out.join("trace.csv");
    let mut w = create(&trace_path)?;
    write_trace_csv(&mut w, &result.traces).and_then(|_| w.flush()).map_err(io_err(&trace_path))?;
    let agg_path = out.join("aggregate.csv");
    let mut w = create(&agg_path)?;
    write_aggregate_csv(&mut w, &result.aggregate).and_then(|_| w.flush()).map_err(io_err(&agg_path))?;
    let manifest = out.join("manifest.txt");
    fs::write(&manifest, format!("# master_seed = {}\n{}", cfg.master_seed, cfg.to_text())).map_err(io_err(&manifest))?;
    for label in cfg.policies.iter().map(|p| &p.label) {
        if let Some(m) = result.final_mean(label) {
            println!("{label}: mean cumulative regret at T = {} is {m:.4}", cfg.horizon);
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_bounds(
    mu: f64,
    sigma2: f64,
    p: f64,
    delta: f64,
    grid: &str,
    out: &Path,
    resamples: usize,
    seed: u64,
) -> Result<(), Failure> {
    let grid = parse_grid(grid)?;
    let mut params = BoundParams::new(mu, sigma2, p, delta, grid);
    params.resamples = resamples;
    params.seed = seed;
    let table = bound_comparison(&params)?;
    let mut w = create(out)?;
    let write = |w: &mut BufWriter<File>| -> io::Result<()> {
        writeln!(w, "n,method,value")?;
        for r in &table.rows {
            writeln!(w, "{},{},{}", r.n, r.method.name(), fmt_f64(r.value))?;
        }
        w.flush()
    };
    write(&mut w).map_err(io_err(out))?;
    println!("wrote {} rows; validity threshold n >= {}", table.rows.len(), table.validity_threshold);
    Ok(())
}

fn cmd_coverage(suite: SuiteArg, out: Option<&Path>, trials: Option<usize>, seed: u64) -> Result<(), Failure> {
    let suite = match suite {
        SuiteArg::Light => Suite::Light,
        SuiteArg::Heavy => Suite::Heavy,
    };
    let mut cases = default_cases(suite);
    if let Some(t) = trials {
        if t == 0 {
            return Err(Failure::Usage("--trials must be positive".into()));
        }
        cases.iter_mut().for_each(|c| c.trials = t);
    }
    let rows = run_suite(suite, &cases, seed)?;
    let header = "suite,bound,mu,p,n,delta,trials,violations,rate,tolerance,status";
    let lines: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{},{},{},{},{},{}",
                suite.name(),
                r.bound,
                fmt_f64(r.case.mu),
                fmt_f64(r.case.p),
                r.case.n,
                fmt_f64(r.case.delta),
                r.case.trials,
                r.violations,
                fmt_f64(r.rate),
                fmt_f64(r.tolerance),
                r.status.name()
            )
        })
        .collect();
    println!("{:<20} {:>6} {:>6} {:>6} {:>10} {:>10}  status", "bound", "n", "p", "delta", "rate", "tolerance");
    for r in &rows {
        println!(
            "{:<20} {:>6} {:>6} {:>6} {:>10.5} {:>10.5}  {}",
            r.bound,
            r.case.n,
            r.case.p,
            r.case.delta,
            r.rate,
            r.tolerance,
            r.status.name()
        );
    }
    if let Some(path) = out {
        let mut w = create(path)?;
        let write = |w: &mut BufWriter<File>| -> io::Result<()> {
            writeln!(w, "{header}")?;
            for l in &lines {
                writeln!(w, "{l}")?;
            }
            w.flush()
        };
        write(&mut w).map_err(io_err(path))?;
    }
    let failed = rows.iter().filter(|r| r.status == CoverageStatus::Fail).count();
    if failed > 0 {
        return Err(Failure::Runtime(format!("{failed} coverage row(s) exceeded tolerance")));
    }
    Ok(())
}

fn cmd_oracle(inputs: usize, points: usize, tolerance: f64, out: Option<&Path>, seed: u64) -> Result<(), Failure> {
    if inputs == 0 || points < 2 {
        return Err(Failure::Usage("need --inputs >= 1 and --points >= 2".into()));
    }
    let checks = size_proxy_check(inputs, points, seed)?;
    let worst = checks.iter().map(|c| c.relative_gap).fold(0.0, f64::max);
    println!("size proxy: {inputs} inputs, {points} grid points per sign, max relative gap {worst:.3e}");
    if let Some(path) = out {
        let mut w = create(path)?;
        let write = |w: &mut BufWriter<File>| -> io::Result<()> {
            writeln!(w, "mu,p,sigma2,solver,grid,relative_gap")?;
            for c in &checks {
                let vals = [c.mu, c.p, c.sigma2, c.solver, c.grid, c.relative_gap].map(fmt_f64);
                writeln!(w, "{}", vals.join(","))?;
            }
            w.flush()
        };
        write(&mut w).map_err(io_err(path))?;
    }
    if worst > tolerance {
        return Err(Failure::Runtime(format!("max relative gap {worst:.3e} exceeds {tolerance:.1e}")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, out, seed } => cmd_run(&config, &out, seed),
        Command::Bounds { mu, sigma2, p, delta, n_grid, out, resamples, seed } => {
            cmd_bounds(mu, sigma2, p, delta, &n_grid, &out, resamples, seed)
        }
        Command::Coverage { suite, out, trials, seed } => cmd_coverage(suite, out.as_deref(), trials, seed),
        Command::Oracle { check: CheckArg::SizeProxy, inputs, points, tolerance, out, seed } => {
            cmd_oracle(inputs, points, tolerance, out.as_deref(), seed)
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
