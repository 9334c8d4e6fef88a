//! The target model f (GIN or fingerprint MLP) and the instructor g that
//! scores how trustworthy a (molecule, label) pair looks.

pub mod checkpoint;
pub mod error;
pub mod input;
pub mod instructor;
pub mod layers;
pub mod spec;
pub mod target;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use error::{ModelError, Result};
pub use input::{Batch, GraphBatch, MolInput, Needs};
pub use instructor::{FeatureScaler, Instructor, HF_CLAMP};
pub use layers::{Encoder, GinEncoder, Linear, Mlp};
pub use spec::{EncoderSpec, InstructorSpec, Pooling, TargetSpec};
pub use target::{TargetModel, EVAL_CHUNK};
