//! The four cumulative knowledge-category feature extractors.
//!
//! Each extractor turns a sentence (plus compiled resources) into per-token
//! sparse attribute maps. Categories are cumulative: extracting at category
//! X emits the attributes of every lighter category too, in disjoint key
//! namespaces (`a:` agnostic, `n:` name-based, `kb:` KB-based, `e:`
//! entity-based). Extraction is pure: identical inputs yield identical
//! attribute maps.

mod agnostic;
mod entity;
mod kb;
mod matching;
mod name;

pub use agnostic::{extract_agnostic, word_shape, WordShape};
pub use entity::{
    build_document_gazetteer, entity_attribute_keys, extract_entity, DocumentGazetteer,
};
pub use kb::extract_kb;
pub use name::extract_name;

use std::fmt;

use thiserror::Error;

use crate::corpus::Sentence;
use crate::crf::{AttributeSequence, CrfError};
use crate::resources::KnowledgeResources;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("token {index} ({token:?}) has no POS tag, required by the active features")]
    MissingPos { token: String, index: usize },
    #[error("category {0} requires compiled knowledge resources")]
    MissingResources(Category),
    #[error("document gazetteer references unknown entity {0:?}")]
    UnknownEntity(String),
    #[error("attribute key namespaces collided on {0:?}; this is a bug")]
    NamespaceCollision(String),
    #[error(transparent)]
    Attr(#[from] CrfError),
}

/// Knowledge depth, ordered: each category includes all lighter ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Category {
    Agnostic,
    Name,
    Kb,
    Entity,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Agnostic,
        Category::Name,
        Category::Kb,
        Category::Entity,
    ];

    pub fn includes(self, other: Category) -> bool {
        other <= self
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Category::Agnostic => "agnostic",
            Category::Name => "name",
            Category::Kb => "kb",
            Category::Entity => "entity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "agnostic" => Some(Category::Agnostic),
            "name" => Some(Category::Name),
            "kb" => Some(Category::Kb),
            "entity" => Some(Category::Entity),
            _ => None,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Extractor settings. Prefix lengths {3,4} and suffix lengths {1..4} are
/// fixed; windows and POS usage are configurable.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureConfig {
    pub category: Category,
    /// Word/shape/POS window radius.
    pub window_word: usize,
    /// Radius for the repeated-word check.
    pub window_presence: usize,
    /// Emit POS-window attributes and match POS sequences; when set, every
    /// token must carry a POS tag.
    pub use_pos: bool,
}

pub(crate) const PREFIX_LENGTHS: [usize; 2] = [3, 4];
pub(crate) const SUFFIX_LENGTHS: [usize; 4] = [1, 2, 3, 4];

impl FeatureConfig {
    pub fn new(category: Category) -> Self {
        Self {
            category,
            window_word: 2,
            window_presence: 4,
            use_pos: true,
        }
    }
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self::new(Category::Agnostic)
    }
}

/// Extracts the union of all categories at or below `config.category`.
///
/// `resources` is required from [`Category::Name`] upward. The document
/// gazetteer ([`DocumentGazetteer`]) only matters at [`Category::Entity`];
/// `None` means an empty one. `entity_types` fixes the entity-attribute key
/// space (the label scheme's types).
pub fn extract(
    sentence: &Sentence,
    config: &FeatureConfig,
    resources: Option<&KnowledgeResources>,
    doc_gazetteer: Option<&DocumentGazetteer>,
    entity_types: &[String],
) -> Result<AttributeSequence, FeatureError> {
    let mut combined = extract_agnostic(sentence, config)?.maps().to_vec();
    if config.category.includes(Category::Name) {
        let resources = resources.ok_or(FeatureError::MissingResources(config.category))?;
        merge(
            &mut combined,
            extract_name(sentence, &resources.name_stats, config.use_pos)?,
        )?;
        if config.category.includes(Category::Kb) {
            merge(&mut combined, extract_kb(sentence, resources)?)?;
        }
        if config.category.includes(Category::Entity) {
            let empty = DocumentGazetteer::empty();
            let gaz = doc_gazetteer.unwrap_or(&empty);
            merge(&mut combined, extract_entity(sentence, gaz, entity_types)?)?;
        }
    }
    Ok(AttributeSequence::new(combined)?)
}

fn merge(
    into: &mut [crate::crf::AttributeMap],
    from: AttributeSequence,
) -> Result<(), FeatureError> {
    for (target, map) in into.iter_mut().zip(from.maps().iter().cloned()) {
        for (key, value) in map {
            if target.insert(key.clone(), value).is_some() {
                return Err(FeatureError::NamespaceCollision(key));
            }
        }
    }
    Ok(())
}

/// Line-oriented debug dump: one line per token, `token TAB key=value`
/// pairs with keys sorted; stable across runs for diffing.
pub fn dump_attributes(sentence: &Sentence, attrs: &AttributeSequence) -> String {
    let mut out = String::new();
    for (token, map) in sentence.tokens().iter().zip(attrs.maps()) {
        out.push_str(token.text());
        for (key, value) in map {
            out.push('\t');
            out.push_str(key);
            out.push('=');
            out.push_str(&value.to_string());
        }
        out.push('\n');
    }
    out
}
