//! Linear queries, accuracy, generalization checks and the monitor experiments.

mod accuracy;
mod expectation;
mod monitor;
mod query;
mod sampling;

pub use accuracy::{accuracy_certify, accuracy_certify_run, accuracy_monte_carlo, AccuracyMode, AccuracyReport};
pub use expectation::{
    expectation_corollary_check, expectation_generalization_check, loss_assessment_overfit_check,
    loss_assessment_query, loss_assessment_world, ExpectationReport, OverfitReport, QueryValuedWorld,
};
pub use monitor::{
    assess_views, monitor_bounds, monitor_exact, monitor_run, necessity_check, second_monitor_run, CopyRecord,
    MonitorConfig, MonitorExact, MonitorReport, NecessityReport, QueryAnalyst, ReconstructThenOverfit,
    SecondMonitorReport, ViewAssessment,
};
pub use query::{query_value_on_sample, query_value_on_world, LinearQuery};
pub use sampling::{Answerer, Estimate};
