//! Benchmark problems and macro-replication studies.

mod problems;
mod study;

pub use problems::{ackley, griewank, levy, paper1d, schwefel, standard_suite, sun_function, Kind, Problem, PROBLEM_NAMES};
pub use study::{macro_study, quantile, RunRecord, StudyConfig, StudyResult, Variant, VariantSummary};
