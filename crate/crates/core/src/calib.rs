//! Force calibration: sweep datasets, regression models, cross-validated
//! model selection and holdout tolerance reports.

pub mod cv;
pub mod dataset;
pub mod gp;
pub mod kernel;
pub mod linalg;
pub mod linear;
pub mod model;
pub mod report;
pub mod tree;

pub use cv::{cross_validate, cross_validate_with, select_model, select_model_with, RankRow, Selection};
pub use dataset::{
    generate_dataset, generate_dataset_with, split_dataset, CalibrationDataset, CalibrationSample, Provenance,
    SweepProtocol,
};
pub use kernel::{GpHyper, Kernel};
pub use model::{predict, train_model, train_model_with, ModelKind, ModelSpec, ModelState, RegressionModel, Standardization};
pub use report::{tolerance_report, CalibrationReport, ToleranceReport, TOLERANCE_THRESHOLDS};
pub use tree::TreeParams;
