//! Entity-based (document-specific) features: binary type–position flags
//! driven by a per-document gazetteer of linked-entity surface forms.

use std::collections::{BTreeMap, BTreeSet};

use crate::corpus::Sentence;
use crate::crf::{AttributeMap, AttributeSequence};
use crate::resources::{AliasDictionary, BilouPosition};

use super::FeatureError;

/// Token → set of (type, BILOU position) pairs harvested from the aliases
/// of entities identified in the enclosing document. Keys are lowercased.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DocumentGazetteer {
    map: BTreeMap<String, BTreeSet<(BilouPosition, String)>>,
}

impl DocumentGazetteer {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn entry(&self, token_lower: &str) -> Option<&BTreeSet<(BilouPosition, String)>> {
        self.map.get(token_lower)
    }

    /// Number of distinct tokens.
    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// True when every entry of `other` is present here too.
    pub fn contains_all(&self, other: &DocumentGazetteer) -> bool {
        other.map.iter().all(|(token, positions)| {
            self.map
                .get(token)
                .is_some_and(|mine| positions.is_subset(mine))
        })
    }
}

/// Builds the document gazetteer for a set of identified entities: every
/// alias of every entity is tokenized and each token keyed by the entity's
/// type and its BILOU position within the alias.
pub fn build_document_gazetteer<'a, I>(
    entity_ids: I,
    aliases: &AliasDictionary,
) -> Result<DocumentGazetteer, FeatureError>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut gazetteer = DocumentGazetteer::default();
    for id in entity_ids {
        let entry = aliases
            .entity(id)
            .ok_or_else(|| FeatureError::UnknownEntity(id.to_string()))?;
        for surface in &entry.surfaces {
            let tokens: Vec<String> = surface
                .split_whitespace()
                .map(str::to_lowercase)
                .collect();
            let len = tokens.len();
            for (i, token) in tokens.into_iter().enumerate() {
                gazetteer
                    .map
                    .entry(token)
                    .or_default()
                    .insert((BilouPosition::of(i, len), entry.entity_type.clone()));
            }
        }
    }
    Ok(gazetteer)
}

/// The full entity-attribute key space for a type inventory: one
/// `e:<pos>-<type>` per BILU position and type, plus `e:O` — `4n + 1` keys.
pub fn entity_attribute_keys(entity_types: &[String]) -> Vec<String> {
    let mut keys = Vec::with_capacity(4 * entity_types.len() + 1);
    for ty in entity_types {
        for pos in [
            BilouPosition::B,
            BilouPosition::I,
            BilouPosition::L,
            BilouPosition::U,
        ] {
            keys.push(format!("e:{}-{ty}", pos.as_str()));
        }
    }
    keys.push("e:O".to_string());
    keys
}

/// Emits the binary type–position attributes: for each token, every
/// in-inventory (position, type) pair of its gazetteer entry fires, and
/// `e:O` fires exactly for tokens with no entry.
pub fn extract_entity(
    sentence: &Sentence,
    gazetteer: &DocumentGazetteer,
    entity_types: &[String],
) -> Result<AttributeSequence, FeatureError> {
    let maps = sentence
        .tokens()
        .iter()
        .map(|token| {
            let mut map = AttributeMap::new();
            match gazetteer.entry(&token.text().to_lowercase()) {
                Some(positions) => {
                    for (pos, ty) in positions {
                        if entity_types.contains(ty) {
                            map.insert(format!("e:{}-{ty}", pos.as_str()), 1.0);
                        }
                    }
                }
                None => {
                    map.insert("e:O".to_string(), 1.0);
                }
            }
            map
        })
        .collect();
    Ok(AttributeSequence::new(maps)?)
}
