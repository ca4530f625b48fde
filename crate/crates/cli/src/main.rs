mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nlam::experiment::{ExperimentConfig, Mode};
use nlam::Error;

/// Simulate the nonlinear Anderson lattice, run its normal form and
/// estimate small-divisor measures.
///
/// Settings come from an optional `key = value` config file, then `--set`
/// overrides, then the subcommand's own flags.
#[derive(Debug, Parser)]
#[command(name = "nlam", version)]
struct Cli {
    /// Config file in `key = value` form.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,

    /// Override any config key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,

    /// Directory for traces, reports and plots.
    #[arg(long, short, global = true)]
    output_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one trajectory per seed and write seed-keyed traces.
    Simulate(SimulateArgs),
    /// Run the iterative normal form on one potential.
    NormalForm(NormalFormArgs),
    /// Monte-Carlo census of resonant divisor classes.
    Measure(MeasureArgs),
    /// Fit D(t) ~ t^kappa to traces on disk and report tail rates.
    Fit(FitArgs),
    /// Check the tame inequality on random tail states.
    TameCheck(TameArgs),
    /// Aggregate traces into a plot-ready table and script.
    Plot(PlotArgs),
    /// Print the resolved configuration.
    ShowConfig,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Window radius W (sites -W..=W).
    #[arg(long)]
    radius: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    /// `a..b` or `a,b,c`.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    tail_j0: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct NormalFormArgs {
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    j0: Option<u64>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Potential radius; 0 picks j0 + ceil(2 ln j0) + 2.
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    degree_cap: Option<u32>,
    /// `paper` or `desk`.
    #[arg(long)]
    profile: Option<String>,
    /// `enforce` or `record`.
    #[arg(long)]
    policy: Option<String>,
    /// Use this seed; otherwise scan upward from the first configured seed
    /// for one without resonances.
    #[arg(long)]
    seed: Option<u64>,
    /// Seeds to try when scanning.
    #[arg(long, default_value_t = 1000)]
    attempts: u64,
    /// Write D, Z, R and the generator after every step here.
    #[arg(long)]
    dump_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MeasureArgs {
    #[arg(long)]
    j0: Option<u64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    samples: Option<u64>,
    /// Monte-Carlo seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    tail_tolerance: Option<f64>,
    #[arg(long)]
    profile: Option<String>,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Trace directory (defaults to the output directory).
    #[arg(long)]
    dir: Option<PathBuf>,
    #[arg(long)]
    t_min: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    /// kappa for the j0^(-3/kappa) tail-rate comparison.
    #[arg(long)]
    kappa: Option<f64>,
}

#[derive(Debug, Args)]
struct TameArgs {
    #[arg(long)]
    j0: Option<u64>,
    #[arg(long)]
    states: Option<usize>,
    /// Sobolev index s >= 1.
    #[arg(long)]
    s: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[arg(long)]
    dir: Option<PathBuf>,
    #[arg(long)]
    t_min: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    /// Run the bundled script with python3 to produce the image.
    #[arg(long)]
    render: bool,
}

/// 2 configuration, 3 numerical abort, 4 I/O.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => 4,
        Error::InsufficientData(_) => 3,
        e if e.is_numerical() => 3,
        _ => 2,
    }
}

fn apply(cfg: &mut ExperimentConfig, pairs: &[(&str, Option<String>)]) -> Result<(), Error> {
    for (key, value) in pairs {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    Ok(())
}

fn s<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(T::to_string)
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load_unvalidated(path)?,
        None => ExperimentConfig::default(),
    };
    for item in &cli.set {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("--set expects KEY=VALUE, got '{item}'")))?;
        cfg.set(k, v)?;
    }
    if let Some(dir) = &cli.output_dir {
        cfg.output_dir = dir.clone();
    }
    let mode = match &cli.command {
        Command::Simulate(a) => {
            apply(
                &mut cfg,
                &[
                    ("epsilon", s(&a.epsilon)),
                    ("delta", s(&a.delta)),
                    ("radius", s(&a.radius)),
                    ("dt", s(&a.dt)),
                    ("seeds", a.seeds.clone()),
                    ("t_final", s(&a.t_final)),
                    ("tail_j0", s(&a.tail_j0)),
                    ("workers", s(&a.workers)),
                ],
            )?;
            Some(Mode::Simulate)
        }
        Command::NormalForm(a) => {
            apply(
                &mut cfg,
                &[
                    ("epsilon", s(&a.epsilon)),
                    ("tau", s(&a.tau)),
                    ("j0", s(&a.j0)),
                    ("kappa", s(&a.kappa)),
                    ("nf_radius", s(&a.window)),
                    ("degree_cap", s(&a.degree_cap)),
                    ("profile", a.profile.clone()),
                    ("policy", a.policy.clone()),
                ],
            )?;
            Some(Mode::NormalForm)
        }
        Command::Measure(a) => {
            apply(
                &mut cfg,
                &[
                    ("j0", s(&a.j0)),
                    ("epsilon", s(&a.epsilon)),
                    ("kappa", s(&a.kappa)),
                    ("tau", s(&a.tau)),
                    ("samples", s(&a.samples)),
                    ("tail_tolerance", s(&a.tail_tolerance)),
                    ("profile", a.profile.clone()),
                ],
            )?;
            Some(Mode::Measure)
        }
        Command::Fit(a) => {
            apply(
                &mut cfg,
                &[
                    ("fit_t_min", s(&a.t_min)),
                    ("fit_t_max", s(&a.t_max)),
                    ("kappa", s(&a.kappa)),
                ],
            )?;
            Some(Mode::Fit)
        }
        Command::TameCheck(a) => {
            apply(
                &mut cfg,
                &[("j0", s(&a.j0)), ("tame_states", s(&a.states)), ("tame_s", s(&a.s))],
            )?;
            Some(Mode::TameCheck)
        }
        Command::Plot(a) => {
            apply(&mut cfg, &[("fit_t_min", s(&a.t_min)), ("fit_t_max", s(&a.t_max))])?;
            None
        }
        Command::ShowConfig => None,
    };
    if let Some(mode) = mode {
        cfg.mode = mode;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Error> {
    let cfg = resolve(cli)?;
    match &cli.command {
        Command::Simulate(_) => commands::simulate(&cfg),
        Command::NormalForm(a) => commands::normal_form(&cfg, a.seed, a.attempts, a.dump_dir.as_deref()),
        Command::Measure(a) => commands::measure(&cfg, a.seed),
        Command::Fit(a) => commands::fit(&cfg, a.dir.as_deref()),
        Command::TameCheck(a) => commands::tame_check(&cfg, a.seed),
        Command::Plot(a) => commands::plot(&cfg, a.dir.as_deref(), a.render),
        Command::ShowConfig => {
            print!("{}", cfg.to_text());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
