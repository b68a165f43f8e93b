//! The evaluation protocol: task suites, 1-NN L1 classification, feature
//! caches, aggregation and reports.

mod cache;
mod classify;
mod config;
mod eval;
mod pipeline;
mod report;
mod tasks;

pub use cache::{CacheEntry, FeatureCache};
pub use classify::{classify_1nn, l1, l1_slices, nearest_rows};
pub use config::{BenchConfig, CorpusConfig};
pub use eval::{evaluate, evaluate_split, EvalResult, PatchSplit, SubsetResult};
pub use pipeline::{descriptor_by_name, evaluate_all, extract_features, synthetic_corpus};
pub use report::{
    class_rows, delta_curves, format_avg_min, read_results_csv, result_rows, summarize, summary_csv,
    summary_table, write_csv, ClassRow, DeltaCurve, ResultRow, Summary, SummaryCell,
};
pub use tasks::{build_tasks, Subset, Task, TaskSuite};
