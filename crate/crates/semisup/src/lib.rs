//! Semi-supervised training of molecular property models: an instructor
//! scores pseudo-labels, a self-adaptive threshold decides which of them the
//! target model trains on. Supervised, π-model, fixed-threshold and
//! percentile baselines share the same engine.

pub mod config;
pub mod curriculum;
pub mod data;
pub mod error;
pub mod hybrid;
pub mod log;
pub mod losses;
pub mod train;

pub use config::{LossKind, Metric, Strategy, Task, TrainConfig};
pub use curriculum::{curriculum_step, CurriculumState};
pub use data::{LabeledSet, TrainData};
pub use error::{Result, TrainError};
pub use hybrid::{
    assign_pseudo_labels, build_hybrid_set, percentile_admission, percentile_fraction, pseudo_label, HybridSet,
    PseudoPool, PseudoSample,
};
pub use log::EpochLog;
pub use losses::{batch_loss, class_weights, instructor_loss, per_sample_loss, target_loss, RMSE_EPS};
pub use train::{
    build_d_prime, evaluate, fit_instructor, score_confidences, train, train_baseline, train_semimol, DPrime,
    PseudoDump, RunOutput,
};
