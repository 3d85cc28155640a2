//! End-to-end verification suite shared by the CLI and the acceptance tests.

pub mod criteria;
pub use criteria::{
    artifact_bundle, run_all, CriterionResult, SelftestConfig, SelftestReport,
};
