//! Critical-point search on the weighted sphere, census and continuation in the weights.

mod census;
mod continuation;
mod search;

pub use census::{
    census, census_with, random_sphere_point, rotation_distance, Census, CensusOptions, CensusReport, CensusSummary,
    FailureTally, SolutionRecord,
};
pub use continuation::{continue_in_s, Continuation, ContinuationOptions, Degeneracy};
pub use search::{
    classify, find_critical_point, search, Classification, Failure, FailureCause, SBCSolution, SolverOptions,
};
