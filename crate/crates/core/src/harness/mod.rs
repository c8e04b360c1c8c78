//! Experiment grid, metrics and on-disk formats.

mod io;
mod metrics;
mod record;
mod report;
mod runner;

pub use io::{read_batch, read_trajectory, trajectory_header, write_batch, write_trajectory};
pub use metrics::{
    compute_metrics, cumulative_average, normalize_losses, BatchMetrics, NormalizedLoss,
};
pub use record::{cell_stem, RunRecord};
pub use report::{
    export_plot_data, load_records, normalized_csv, records_csv, region_snapshots_csv,
    sort_records, write_report, ReportFiles, RECORD_COLUMNS,
};
pub use runner::{
    run_cell, run_experiment, run_grid, select, Algorithm, Cell, CellOutput, ExperimentConfig,
    BATCH_DIR, RECORD_DIR, REGION_DIR, TRAJECTORY_DIR,
};
