//! Fold-ensemble inference, classification metrics and leaderboard tables.

mod ensemble;
mod metrics;
mod predictions;
mod report;

pub use ensemble::{ensemble_predict, ensemble_probs, label_at, order_free_mean, threshold_label, PredictionRecord, DEFAULT_THRESHOLD};
pub use metrics::{compute_metrics, confusion, score_labels, ClassMetrics, ConfusionMatrix, Metrics};
pub use predictions::{predictions_csv, read_labels, read_predictions, score_external, score_pairs, write_predictions, ExternalScore};
pub use report::{emit_report, load_runs, Leaderboard, ReportFormat, ReportOptions, RunRecord};
