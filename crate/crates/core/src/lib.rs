//! Knowledge-augmented named-entity recognition toolkit.
//!
//! The crate is organized around a linear-chain CRF sequence labeler
//! ([`crf`]) whose feature set is split into four cumulative knowledge
//! categories ([`features`]): text-only *agnostic* features, *name-based*
//! features drawn from a list of entity names, *KB-based* features drawn
//! from typed gazetteers and probability tables compiled out of a knowledge
//! base ([`resources`]), and per-document *entity-based* features produced
//! by a two-pass tag→link→retag flow ([`pipeline`]). Mention- and
//! span-level F1 plus a timing harness live in [`eval`], CoNLL-style corpus
//! I/O and BILOU/BIO label handling in [`corpus`], and deterministic
//! synthetic corpora for experiments in [`synth`].

pub mod corpus;
pub mod crf;
pub mod eval;
pub mod features;
pub mod pipeline;
pub mod resources;
pub mod synth;

pub use corpus::{Document, LabelScheme, MentionSpan, SchemeKind, Sentence, Token};
pub use crf::{AttributeSequence, CrfModel, TrainConfig};
pub use features::{Category, FeatureConfig};
pub use pipeline::{Linker, LinkerMode, ModelBundle, PipelineConfig};
pub use resources::KnowledgeResources;
