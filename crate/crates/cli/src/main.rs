use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::SystemTime;

use birot::io::{convergence, emit_artifacts, report, CheckTolerances, Scenario};
use birot::kernel::{KernelEvaluator, KernelParams};
use birot::transport::Simulation;
use birot::{QuadrantPoint, SymmetryConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "birot",
    version,
    about = "Swirl-free bi-rotational Euler patches in the quadrant"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Output directory, overriding the scenario.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Seed for the sampled direct-backend check points.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Record every N steps.
    #[arg(long, global = true)]
    cadence: Option<usize>,
    /// Direct-backend check every K steps (0 disables).
    #[arg(long, global = true)]
    direct_check_every: Option<usize>,
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario and write its artifacts.
    Run { scenario: PathBuf },
    /// Parse and validate a scenario.
    Validate { scenario: PathBuf },
    /// Print M, K_psi, K^r and K^s for one pair of points.
    KernelProbe {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        m: u32,
        /// Target point as `r,s`.
        #[arg(long, value_parser = parse_point)]
        p: QuadrantPoint,
        /// Source point as `r,s`.
        #[arg(long, value_parser = parse_point)]
        q: QuadrantPoint,
        #[arg(long, default_value_t = 16)]
        nq: usize,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
    },
    /// Refinement study at h, h/2, h/4.
    Convergence {
        scenario: PathBuf,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        /// Shorter horizon for the transport runs.
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Recompute diagnostics of a finished run and re-check its assertions.
    Report { dir: PathBuf },
}

fn parse_point(text: &str) -> Result<QuadrantPoint, String> {
    let (r, s) = text
        .split_once(',')
        .ok_or_else(|| format!("expected r,s (got {text})"))?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v}: {e}"));
    Ok(QuadrantPoint {
        r: num(r)?,
        s: num(s)?,
    })
}

fn load(path: &Path, g: &Global) -> birot::Result<Scenario> {
    let mut sc = Scenario::load(path)?;
    if let Some(dir) = &g.output {
        sc.output.dir = dir.clone();
    }
    if let Some(seed) = g.seed {
        sc.output.seed = seed;
    }
    if let Some(c) = g.cadence {
        sc.output.cadence = c;
    }
    if let Some(k) = g.direct_check_every {
        sc.time.direct_check_every = k;
    }
    sc.validate()?;
    Ok(sc)
}

fn run(path: &Path, g: &Global) -> birot::Result<ExitCode> {
    let sc = load(path, g)?;
    let started = SystemTime::now();
    let mut sim = Simulation::new(&sc)?;
    let out = sim.run()?;
    let manifest = emit_artifacts(&sc.output.dir, &sc, &out, started, SystemTime::now())?;
    if !g.quiet {
        println!("halt: {}", out.halt);
        if let Some(d) = &out.halt_detail {
            println!("detail: {d}");
        }
        let last = out.final_record();
        println!("steps: {}  t: {}", out.last.step, last.t);
        println!("L: {} -> {}", out.history[0].l, last.l);
        println!("P^r: {} -> {}", out.history[0].pr, last.pr);
        println!("P^s: {} -> {}", out.history[0].ps, last.ps);
        if let Some((step, t)) = out.marker_crossing {
            println!("boundary markers first crossed at step {step} (t = {t})");
        }
        if let Some(d) = manifest.direct_check_max {
            println!("direct check max relative difference: {d:.3e}");
        }
        println!(
            "wrote {} files to {}",
            manifest.files.len() + 1,
            sc.output.dir.display()
        );
    }
    Ok(if out.completed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn kernel_probe(
    n: u32,
    m: u32,
    p: QuadrantPoint,
    q: QuadrantPoint,
    nq: usize,
    delta: f64,
) -> birot::Result<()> {
    let cfg = SymmetryConfig::new(n as i64, m as i64)?;
    let params = KernelParams {
        nq,
        delta,
        ..Default::default()
    };
    let mut ev = KernelEvaluator::new(cfg, params)?;
    let e = cfg.d() as f64 / 2.0 - 1.0;
    println!("{:e}", ev.angular_moment(e, 0, 0, p, q)?);
    println!("{:e}", ev.psi_kernel(p, q)?);
    let (kr, ks) = ev.velocity_kernel(p, q)?;
    println!("{kr:e}");
    println!("{ks:e}");
    Ok(())
}

fn dispatch(cli: Cli) -> birot::Result<ExitCode> {
    let g = &cli.global;
    match cli.command {
        Command::Run { scenario } => run(&scenario, g),
        Command::Validate { scenario } => {
            load(&scenario, g)?;
            if !g.quiet {
                println!("ok");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::KernelProbe {
            n,
            m,
            p,
            q,
            nq,
            delta,
        } => {
            kernel_probe(n, m, p, q, nq, delta)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Convergence {
            scenario,
            levels,
            t_end,
        } => {
            let mut sc = load(&scenario, g)?;
            if let Some(t) = t_end {
                sc.time.t_end = t;
            }
            for line in convergence(&sc, levels)?.lines() {
                println!("{line}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { dir } => {
            let rep = report(&dir, CheckTolerances::default())?;
            for a in &rep.assertions {
                println!(
                    "{} {}: {}",
                    if a.pass { "PASS" } else { "FAIL" },
                    a.name,
                    a.detail
                );
            }
            Ok(if rep.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = birot::parallel::configure_threads();
    if !cli.global.quiet
        && matches!(
            cli.command,
            Command::Run { .. } | Command::Convergence { .. }
        )
    {
        eprintln!("workers: {threads}");
    }
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
