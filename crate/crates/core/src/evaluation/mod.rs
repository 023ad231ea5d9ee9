//! Nested subject-independent evaluation: folds, tuning, voting, metrics.

pub mod folds;
pub mod metrics;
pub mod nested;
pub mod search;
pub mod vote;

pub use folds::{plan_folds, FoldPlan, OuterFold, SubjectSplit, INNER_FOLDS, MIN_SUBJECTS};
pub use metrics::{compute_metrics, confusion, normal_ci, weighted_f1, ClassRow, Estimate, MetricsReport};
pub use nested::{
    run_nested, write_predictions_csv, Access, EvalConfig, FoldOutcome, LeakageGuard, NestedRun, PredictionRecord,
    ReportFile, ReportMetadata, Stage,
};
pub use search::{tune, FloatRange, ForestSpace, GbtSpace, IntRange, PreparedFold, SearchSpace, TrialRecord, TuneResult};
pub use vote::{majority_vote, vote_combined, vote_video, TieBreak, VideoPrediction, WindowPrediction};
