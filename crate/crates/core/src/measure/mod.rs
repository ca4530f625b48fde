//! Resonant-set measure: enumeration of divisor classes, Monte-Carlo
//! estimates on shared random potentials and the closed-form bounds they are
//! compared against.

mod bounds;
mod census;
mod enumerate;
mod sampling;

pub use bounds::{
    dyadic_check, dyadic_ln_epsilon_threshold, dyadic_success, dyadic_trials, frequency_jacobian_defect,
    jacobian_bound, DyadicCheck, JacobianCheck,
};
pub use census::{
    nonresonant_lower_bound, nonresonant_measure, resonance_census, union_bound, union_measure_bound, CensusCell,
    McConfig, ResonanceCensus, SiteSummary, UnionEstimate, SIGMA_SLACK,
};
pub use enumerate::{
    class_cutoffs, class_groups, enumerate_classes, enumerate_constrained, enumerate_group, in_measure_window,
    measure_window, split_classes, ClassGroup, ClassSplit,
};
pub use sampling::{
    resonant_probability_mc, single_site_resonant_measure, union_probability_mc, McEstimate, UnionMc, MIN_SAMPLES,
};
