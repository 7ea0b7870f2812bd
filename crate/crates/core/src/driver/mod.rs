//! Adaptive runs: configuration, the SOLVE-ESTIMATE-MARK-REFINE loop and
//! output files.

mod config;
mod export;
mod run;

pub use config::{FluxChoice, IndicatorChoice, RunConfig, SolutionKind};
pub use export::{
    export_run, read_convergence_csv, write_solution, CsvStream, DirectoryExporter, IterationData, CSV_HEADER,
};
pub use run::{initial_mesh, run_adaptive, ConvergenceRow, Observer, Snapshot};
