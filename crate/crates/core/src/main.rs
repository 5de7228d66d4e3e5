use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use qstat::sweeps::verify::{run_battery, Battery};
use qstat::sweeps::{
    figures::run_figure_with, region_spec, run_region, run_sweep, write_outputs, Assertion, Config, Dataset,
    Evaluation, FigureId, Manifest, SweepKind,
};
use qstat::Error;

#[derive(Parser)]
#[command(name = "qstat", version, about = "Work output of collective quantum Otto engines")]
struct Cli {
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "QSTAT_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form leading-order work and enhancement ratio.
    Analytic(RunArgs),
    /// Exact propagation over one cycle.
    Evolve(RunArgs),
    /// λ tables for fermionic engines in a trap.
    Fermi(RunArgs),
    /// Enhancement map over Δ/Ω(0), ωT and N.
    Region(RunArgs),
    /// Regenerate one figure's data and check it.
    Figure {
        /// fig2a, fig2b, fig3a, fig3b, fig4even, fig4odd or figS1.
        id: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Oracle and inequality battery plus every figure check.
    Verify {
        /// Skip the figures that need time evolution.
        #[arg(long)]
        quick: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args, Clone)]
struct RunArgs {
    /// JSON run document or a manifest from a previous run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; CSV goes to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// analytic, numerical or both.
    #[arg(long)]
    method: Option<Evaluation>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of engines.
    #[arg(long = "N", value_name = "N")]
    n: Option<u32>,
    /// Override one parameter, `name=value`; repeatable.
    #[arg(long = "set", value_name = "NAME=VALUE")]
    set: Vec<String>,
}

enum Failure {
    Usage(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Usage(e.to_string()),
            other => Failure::Run(other.to_string()),
        }
    }
}

impl RunArgs {
    fn resolve(&self, base: Config) -> Result<Config, Failure> {
        let mut c = match &self.config {
            Some(p) => Config::load(p)?,
            None => base,
        };
        if let Some(m) = self.method {
            c.sweep.method = m;
        }
        if let Some(s) = self.seed {
            c.sweep.seed = s;
        }
        if let Some(n) = self.n {
            c.set("n", n as f64)?;
        }
        for s in &self.set {
            c.assign(s)?;
        }
        c.validate()?;
        Ok(c)
    }
}

fn emit(command: &str, args: &RunArgs, config: &Config, data: &Dataset, started: Instant, assertions: Vec<Assertion>) -> Result<bool, Failure> {
    for a in &assertions {
        eprintln!("{a}");
    }
    let ok = assertions.iter().all(|a| a.pass) && !data.failed_too_many();
    if data.failed > 0 {
        eprintln!("{} of {} cells failed", data.failed, data.cells);
    }
    match &args.out {
        Some(dir) => {
            let mut m = Manifest::new(command, config, data, started);
            m.assertions = assertions;
            write_outputs(dir, data, &m)?;
        }
        None => print!("{}", data.to_csv()),
    }
    Ok(ok)
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let started = Instant::now();
    match cli.command {
        Command::Analytic(args) => {
            let mut base = Config::default();
            base.sweep.method = Evaluation::Analytic;
            let c = args.resolve(base)?;
            let data = run_sweep(&c, SweepKind::Work)?;
            emit("analytic", &args, &c, &data, started, Vec::new())
        }
        Command::Evolve(args) => {
            let mut base = Config::default();
            base.sweep.method = Evaluation::Numerical;
            base.propagator.record_trace = true;
            let c = args.resolve(base)?;
            let data = run_sweep(&c, SweepKind::Work)?;
            emit("evolve", &args, &c, &data, started, Vec::new())
        }
        Command::Fermi(args) => {
            let c = args.resolve(Config::default())?;
            let data = run_sweep(&c, SweepKind::Fermi)?;
            emit("fermi", &args, &c, &data, started, Vec::new())
        }
        Command::Region(args) => {
            let c = args.resolve(FigureId::FigS1.preset())?;
            let data = run_region(&region_spec(&c)?)?;
            emit("region", &args, &c, &data, started, Vec::new())
        }
        Command::Figure { id, run } => {
            let id: FigureId = id.parse()?;
            let c = run.resolve(id.preset())?;
            let out = run_figure_with(id, c)?;
            emit(&format!("figure {}", id.as_str()), &run, &out.config, &out.data, started, out.assertions)
        }
        Command::Verify { quick, seed } => {
            let mut b = Battery {
                numerical_figures: !quick,
                ..Battery::default()
            };
            if let Some(s) = seed {
                b.seed = s;
            }
            let results = run_battery(b);
            for a in &results {
                println!("{a}");
            }
            let failed = results.iter().filter(|a| !a.pass).count();
            println!(
                "{} checks, {failed} failed, {:.1} s",
                results.len(),
                started.elapsed().as_secs_f64()
            );
            Ok(failed == 0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("qstat: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("qstat: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Run(m)) => {
            eprintln!("qstat: {m}");
            ExitCode::from(1)
        }
    }
}
