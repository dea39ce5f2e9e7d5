//! Sequential equilibria through restricted strategy spaces.

pub mod analysis;
pub mod check;
pub mod lemke;
pub mod nash;
pub mod restricted;
pub mod sequential;

pub use analysis::{
    analyze_profile, backward, best_continuation, epsilon_optimal_at, Backward, PlayerAnalysis, Policy, StepGaps,
};
pub use lemke::{bimatrix_regret, lemke_howson};
pub use nash::{restricted_nash, solve_restricted, Method, NashOptions, RestrictedEquilibrium, WarmStart};
pub use restricted::{restricted_spaces, Component, RestrictedSpace};
pub use sequential::{
    default_schedule, level_gaps, sequential_equilibrium, LevelRecord, SeqEqCertificate, SeqOptions, SetGap,
};
pub use check::{check_sequential, CheckOptions, CheckResult, Verdict, Violation, Witness};
