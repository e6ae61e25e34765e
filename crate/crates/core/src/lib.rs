//! Convolutional rule neural network (CR2N).
//!
//! A binary neural network whose weights translate one-to-one into a
//! classification rule over categorical sequences:
//!
//! - [`model`]: StackedOR, AND and OR layers slid over the sequence as a
//!   convolution, followed by a ConvOR layer (local or global patterns).
//! - [`tape`]: relaxed train-mode forward pass and its backward pass.
//! - [`training`]: loss, Adam, dynamic magnitude pruning, model selection.
//! - [`rule`]: rule syntax tree, extraction from weights, printing, parsing.
//! - [`interpreter`]: evaluates rules on raw sequences, independently of
//!   the network.
//! - [`data`]: synthetic generators, peptides ingestion, balancing, splits.

pub mod checkpoint;
pub mod data;
pub mod error;
pub mod experiment;
pub mod hard_concrete;
pub mod interpreter;
pub mod layers;
pub mod model;
pub mod penalty;
pub mod rule;
pub mod sequence;
pub mod tape;
pub mod training;
pub mod weights;

pub use error::{Error, Result};
pub use hard_concrete::HardConcreteParams;
pub use model::{BinarizedModel, Cr2nModel, EncodedSequence, Mode, ModelConfig, WeightValues};
pub use rule::{extract_rule, parse_rule, Rule};
pub use sequence::{Alphabet, Schema, Sequence};
pub use weights::BinaryWeightMatrix;
