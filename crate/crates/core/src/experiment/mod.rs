//! Configuration, seed ensembles, power-law fits, the tail-rate diagnostic
//! and plot output.

mod config;
mod ensemble;
mod fit;
mod plots;
mod tail;
mod tame;

pub use config::{ExperimentConfig, Mode, SeedSpec, CONFIG_KEYS};
pub use ensemble::{
    bootstrap_kappa, load_traces, quantile, run_ensemble, run_seed, trace_stem, BootstrapKappa, EnsembleRun,
    EnsembleStats, SeedFailure,
};
pub use fit::{fit_power_law, PowerLawFit, MIN_FIT_POINTS};
pub use plots::{emit_plots, render_plots, PlotOutput, AGGREGATE_CSV, PLOT_IMAGE, PLOT_SCRIPT};
pub use tail::{tail_rate_check, TailRate};
pub use tame::{random_tail_state, tame_suite, TameCase, TameSuite, TAME_MAX_RADIUS};
