//! Constrained-search functionals over the density pair.

pub mod phase;
pub mod search;
pub mod yn;

pub use phase::{n1_closed_form, n1_closed_form_with, phase_from_current, phase_from_current_with, PhaseOptions, PhaseSolution, CURL_TOL};
pub use search::{
    csearch_minimize, Certificate, ConstraintResidual, CsearchProblem, CsearchResult, CsearchSummary, Minimizer, Objective,
    SearchSpace,
};
pub use yn::{validate_pair, yn_check, yn_check_with, YnOptions, YnReport, NORMALIZATION_TOL};
