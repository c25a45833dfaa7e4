//! Experiment orchestration: cross-validation, dimension and sensitivity
//! sweeps, online learning curves and grid search.
//!
//! Cells (learner x fold x sweep point) are independent jobs. They run on
//! the worker pool and are merged by cell position, never by completion
//! order. Every stochastic input is seeded from the master seed through
//! [`derive_seed`](crate::rng::derive_seed):
//!
//! | stream | component | index |
//! |---|---|---|
//! | lexicon | `lexicon` | sweep point |
//! | objects | `objects` | sweep point |
//! | folds | `folds` | sweep point |
//! | learner view noise | `view` | sweep point |
//! | learner | `learner` | `point << 40 \| learner << 20 \| fold` |
//!
//! SIM-DEVELOP prefixes the data components with `develop.`.

pub mod baseline;
pub mod dataset;
pub mod frequency;
pub mod output;
pub mod record;
pub mod run;
pub mod spec;

pub use baseline::{most_frequent_words, random_subsets};
pub use dataset::{build_dataset, PreparedData};
pub use frequency::{frequency_report, FrequencyReport, WordFrequencyRow};
pub use output::{write_outputs, RunMetadata};
pub use record::{
    read_results_csv, read_results_jsonl, render_summary, summarize, write_results_csv, write_results_jsonl,
    CellStatus, ResultRecord, SeedSet, SummaryRow,
};
pub use run::{
    run_dims_sweep, run_experiment, run_grid_search, run_online, run_sensitivity_sweep, run_xval, tuned_config,
    ExperimentOutput, GridBest, GridCellResult, BASELINE,
};
pub use spec::{
    Checkpoint, DataSource, DatasetConfig, ExperimentKind, ExperimentSpec, GridSpec, TutorConfig, MAX_GRID_CELLS,
};
