//! Experiment driver: sweep specifications, the parallel cell runner,
//! CSV and weight-directory I/O, and SVG figures.

mod experiment;
mod io;
mod plot;

pub use experiment::{
    run_cell, run_experiment, sort_rows, worker_count, ExperimentSpec, ResultRow, Sweep, WORKERS_ENV,
};
pub use io::{
    fmt_num, load_policy, read_results_csv, read_reward_curve, save_policy, write_results_csv,
    write_stats_csv, write_trace_csv, Manifest, RESULT_HEADER,
};
pub use plot::{axis_range, emit_plots, line_chart, scheme_series, smooth, Series};
