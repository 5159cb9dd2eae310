//! Yes/no QA evaluation: datasets, logit providers, method presets, the
//! evaluation loop and report writers.

mod dataset;
mod eval;
mod methods;
mod mock;
mod provider;
pub mod report;

pub use self::dataset::{derive_edit_instruction, load_dataset, parse_dataset, write_dataset, QaItem};
pub use self::eval::{
    column_of, overlap_matrix, run_eval, EvalOptions, EvalReport, Histograms, MethodSummary, OverlapMatrix,
    HISTOGRAM_BINS, STANDARD_COLUMNS,
};
pub use self::methods::{Method, VariantPlan, TABLE_METHODS};
pub use self::mock::{mock_logits, MockConfig, MockProvider, SampleScript, VariantKnobs};
pub use self::provider::{LogitProvider, ReplayProvider};
pub use self::report::write_report_dir;
