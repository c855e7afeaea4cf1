//! Linear-chain conditional random field: path scoring, forward–backward
//! marginals, constrained Viterbi decoding, and L1-regularized training via
//! an orthant-wise limited-memory quasi-Newton optimizer.
//!
//! All dynamic programming runs in log space with max-shifted
//! log-sum-exp. Transition validity (the BILOU/BIO grammar plus begin/end
//! constraints) is enforced both at decode and at training time, so decoded
//! sequences always convert to spans without repair.

mod inference;
mod io;
mod model;
mod objective;
mod owlqn;
mod train;

pub use inference::{forward_backward, sequence_score, viterbi, Marginals};
pub use io::{load_model, save_model};
pub(crate) use io::format_weight;
pub use model::{CrfModel, LabelInventory, TransitionRules};
pub use objective::{objective_and_gradient, TrainingInstance, WeightGradient};
pub use train::{train, train_custom, TrainConfig, TrainOutcome};

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CrfError {
    #[error("attribute value for {key:?} must be finite, got {value}")]
    InvalidAttribute { key: String, value: f64 },
    #[error("attribute keys must be non-empty and free of tabs/newlines: {0:?}")]
    InvalidAttributeKey(String),
    #[error("label inventory must be non-empty with unique, tab-free names")]
    InvalidInventory,
    #[error("sequence must be non-empty")]
    EmptySequence,
    #[error("attribute sequence length {attrs} does not match label sequence length {labels}")]
    LengthMismatch { attrs: usize, labels: usize },
    #[error("label {0:?} is not in the model inventory")]
    UnknownLabel(String),
    #[error("no unmasked path exists for this input")]
    NoValidPath,
    #[error("gold path is masked in instance {instance:?} at position {position}")]
    GoldPathMasked { instance: String, position: usize },
    #[error("training dataset is empty")]
    EmptyDataset,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("objective became non-finite during optimization ({diagnostic})")]
    NonFiniteObjective { diagnostic: String },
    #[error("model file: {0}")]
    ModelFormat(String),
    #[error("model file version mismatch: expected {expected:?}, found {found:?}")]
    VersionMismatch { expected: String, found: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Sparse attribute map of one token: attribute key → real value.
pub type AttributeMap = BTreeMap<String, f64>;

/// Per-token sparse attribute sets fed to the CRF; the observation side of
/// one sentence.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AttributeSequence {
    maps: Vec<AttributeMap>,
}

impl AttributeSequence {
    /// Validates that every key is non-empty (and serializable) and every
    /// value finite.
    pub fn new(maps: Vec<AttributeMap>) -> Result<Self, CrfError> {
        for map in &maps {
            for (key, value) in map {
                if key.is_empty() || key.contains('\t') || key.contains('\n') {
                    return Err(CrfError::InvalidAttributeKey(key.clone()));
                }
                if !value.is_finite() {
                    return Err(CrfError::InvalidAttribute {
                        key: key.clone(),
                        value: *value,
                    });
                }
            }
        }
        Ok(Self { maps })
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn maps(&self) -> &[AttributeMap] {
        &self.maps
    }

    pub fn map(&self, position: usize) -> &AttributeMap {
        &self.maps[position]
    }
}
