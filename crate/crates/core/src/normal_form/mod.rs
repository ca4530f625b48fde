//! Birkhoff normal form on finite truncations: the `ε_s`/`δ_s`/`N_s`
//! schedule, homological solves, Lie transforms and the iterative lemma.

mod homological;
mod lie;
mod schedule;
mod step;

pub use homological::{
    divisor, first_resonance, frequency, homological_residual, select_removable, solve_homological, window_norm,
    HomologicalResidual,
};
pub use lie::{lie_transform, LieOptions, LieStats};
pub use schedule::{
    delta_limit, delta_s, epsilon_threshold, window_width, NormalFormSchedule, ScheduleProfile, ScheduleStep,
    MAX_SCHEDULE_STEPS,
};
pub use step::{
    decay_bound, entry_checks, final_checks, find_nonresonant_seed, normal_form_step, per_monomial_check,
    run_normal_form, run_normal_form_with, BoundCheck, BoundPolicy, NormalFormConfig, NormalFormState, RunReport,
    StepReport, BOUND_SLACK,
};
