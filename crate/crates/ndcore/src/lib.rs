//! Small dense tensors with tape-based reverse-mode differentiation, an
//! Adam optimizer and finite-difference gradient checking.

pub mod error;
pub mod gradcheck;
pub mod optim;
pub mod params;
pub mod rng;
pub mod tape;
pub mod tensor;

pub use error::{NdError, Result};
pub use gradcheck::{grad_check, GradCheckReport};
pub use optim::Adam;
pub use params::{BoundParams, ParamId, ParamStore};
pub use rng::{fnv1a, he_uniform, RngStreams};
pub use tape::{bce_logit_term, sigmoid, Adjacency, Gradients, Segments, Tape, Var, PROB_EPS};
pub use tensor::Tensor;
