//! Experiment harness for the layered power control simulations: TOML
//! experiment documents, embedded figure presets and CSV results.

pub mod error;
pub mod run;
pub mod scheme;
pub mod spec;
pub mod table;

pub use error::{CliError, Result};
pub use run::{prepare_experiment, run_experiment};
pub use scheme::{DpcDesign, PreparedScheme, SchemeDescriptor};
pub use spec::{apply_overrides, load_document, ExperimentSpec, Metric, Receivers, SweepScale, SweepVariable, PRESETS};
pub use table::{emit_csv, parse_csv, ResultTable, Row, CSV_HEADER};
