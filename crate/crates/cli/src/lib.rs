//! File formats and command-line front end for `damt-core`.

mod cli;
pub mod io;
pub mod report;

pub use cli::{run, sweep_point, CliError, SweepRow};
pub use io::{load_dataset, load_treatment_file, write_dataset, write_dataset_transposed, InputSpec, LoadError, TreatmentColumn};
pub use report::{emit_plot_data, emit_report, format_g, Format, REPORT_COLUMNS};
