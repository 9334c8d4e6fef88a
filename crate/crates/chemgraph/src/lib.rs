//! Molecular graph frontend: SMILES parsing, featurization, Morgan-style
//! fingerprints and the similarity measures used for activity-cliff
//! detection.
//!
//! Everything here is a pure function over immutable inputs.

pub mod error;
pub mod features;
pub mod fingerprint;
pub mod graph;
pub mod similarity;
pub mod smiles;
pub mod writer;

pub use error::{GraphError, ParseError, ParseErrorKind, WidthMismatch};
pub use features::{featurize, FeatureMatrices, EDGE_DIM, NODE_DIM};
pub use fingerprint::{morgan_fingerprint, tanimoto, Fingerprint, DEFAULT_RADIUS, DEFAULT_WIDTH};
pub use graph::{Atom, AtomSpec, Bond, BondOrder, Element, GraphBuilder, MolecularGraph};
pub use similarity::{smiles_similarity, string_similarity};
pub use smiles::{parse_smiles, MAX_SMILES_LEN};
pub use writer::{write_random_smiles, write_smiles};
