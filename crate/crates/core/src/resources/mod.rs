//! Knowledge resources: compiling raw inputs (name lists, KB dumps,
//! link-annotated corpora, alias tables) into the lookup tables the feature
//! extractors consume, plus their on-disk TSV form.
//!
//! Compilation is streaming and deterministic: every table iterates in
//! sorted order, so recompiling identical inputs produces byte-identical
//! files.

mod compile;
mod pos;
mod store;

pub use compile::{
    compile_gazetteers, compile_link_prob, compile_name_stats, compile_type_prob, parse_kb,
    parse_gazetteer_spec, GazetteerSpec, KbDump,
};
pub use pos::{PosTagger, RuleTagger};
pub use store::{load_resources, save_resources};

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ResourceError {
    #[error("{file} line {line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("name list is empty")]
    EmptyNameList,
    #[error("alias references unknown entity {entity:?} (line {line})")]
    UnknownEntity { entity: String, line: usize },
    #[error("entity {0:?} has more than one type row")]
    DuplicateEntityType(String),
    #[error("{0} absent")]
    MissingTable(String),
    #[error("{file}: version mismatch, found header {found:?}")]
    VersionMismatch { file: String, found: String },
    #[error("invalid gazetteer name {0:?} (use letters, digits, '_', '-')")]
    InvalidGazetteerName(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// BILOU position of a token inside a multi-token surface form (no `O`; a
/// gazetteer entry has no outside).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BilouPosition {
    B,
    I,
    L,
    U,
}

impl BilouPosition {
    /// Position of token `index` within a surface form of `len` tokens.
    pub fn of(index: usize, len: usize) -> Self {
        if len == 1 {
            BilouPosition::U
        } else if index == 0 {
            BilouPosition::B
        } else if index + 1 == len {
            BilouPosition::L
        } else {
            BilouPosition::I
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            BilouPosition::B => "B",
            BilouPosition::I => "I",
            BilouPosition::L => "L",
            BilouPosition::U => "U",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "B" => Some(BilouPosition::B),
            "I" => Some(BilouPosition::I),
            "L" => Some(BilouPosition::L),
            "U" => Some(BilouPosition::U),
            _ => None,
        }
    }
}

/// Statistics over a list of entity names: normalized per-token frequency
/// and the most frequent POS-tag sequences of whole names.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NameStatistics {
    pub(crate) token_weight: BTreeMap<String, f64>,
    pub(crate) top_pos_sequences: Vec<Vec<String>>,
}

impl NameStatistics {
    /// Normalized frequency of a (lowercased) token; 0 when absent.
    pub fn token_weight(&self, token_lower: &str) -> f64 {
        self.token_weight.get(token_lower).copied().unwrap_or(0.0)
    }

    /// Ranked POS-tag sequences, most frequent first, at most 100.
    pub fn top_pos_sequences(&self) -> &[Vec<String>] {
        &self.top_pos_sequences
    }
}

/// A named dictionary of lowercased token sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct Gazetteer {
    name: String,
    entries: BTreeSet<Vec<String>>,
    max_len: usize,
}

impl Gazetteer {
    pub fn new(
        name: impl Into<String>,
        entries: BTreeSet<Vec<String>>,
    ) -> Result<Self, ResourceError> {
        let name = name.into();
        if name.is_empty()
            || !name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(ResourceError::InvalidGazetteerName(name));
        }
        let max_len = entries.iter().map(Vec::len).max().unwrap_or(0);
        debug_assert!(entries.iter().all(|e| !e.is_empty()));
        Ok(Self {
            name,
            entries,
            max_len,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn entries(&self) -> &BTreeSet<Vec<String>> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Longest entry length in tokens; bounds the matcher's lookahead.
    pub fn max_entry_len(&self) -> usize {
        self.max_len
    }

    pub fn contains(&self, tokens: &[String]) -> bool {
        self.entries.contains(tokens)
    }
}

/// Per-token probability of participating in an entity link (Eq. form:
/// linked-document count over present-document count).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinkProbTable {
    pub(crate) probs: BTreeMap<String, f64>,
}

impl LinkProbTable {
    /// 0 for tokens never seen in the annotated corpus.
    pub fn prob(&self, token_lower: &str) -> f64 {
        self.probs.get(token_lower).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// P(type | token) tables estimated from KB alias statistics, in a plain
/// and a BILOU-position-conditioned variant. Per token, each variant's
/// values sum to 1.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TypeProbTable {
    pub(crate) unconditioned: BTreeMap<String, BTreeMap<String, f64>>,
    pub(crate) positioned: BTreeMap<String, BTreeMap<(BilouPosition, String), f64>>,
}

impl TypeProbTable {
    pub fn type_prob(&self, token_lower: &str, entity_type: &str) -> f64 {
        self.unconditioned
            .get(token_lower)
            .and_then(|row| row.get(entity_type))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn type_probs(&self, token_lower: &str) -> Option<&BTreeMap<String, f64>> {
        self.unconditioned.get(token_lower)
    }

    pub fn positioned_probs(
        &self,
        token_lower: &str,
    ) -> Option<&BTreeMap<(BilouPosition, String), f64>> {
        self.positioned.get(token_lower)
    }

    pub fn contains_token(&self, token_lower: &str) -> bool {
        self.unconditioned.contains_key(token_lower)
    }
}

/// Surface forms and the coarse type of each KB entity.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AliasDictionary {
    pub(crate) entries: BTreeMap<String, AliasEntry>,
    /// lowercased surface → entity ids carrying it
    pub(crate) by_surface: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AliasEntry {
    pub entity_type: String,
    pub surfaces: BTreeSet<String>,
}

impl AliasDictionary {
    pub(crate) fn build(entries: BTreeMap<String, AliasEntry>) -> Self {
        let mut by_surface: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (id, entry) in &entries {
            for surface in &entry.surfaces {
                by_surface
                    .entry(surface.to_lowercase())
                    .or_default()
                    .push(id.clone());
            }
        }
        Self { entries, by_surface }
    }

    pub fn entity(&self, id: &str) -> Option<&AliasEntry> {
        self.entries.get(id)
    }

    /// Entity ids whose surface forms match, case-insensitively.
    pub fn entities_with_surface(&self, text: &str) -> &[String] {
        self.by_surface
            .get(&text.to_lowercase())
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn entities(&self) -> impl Iterator<Item = (&str, &AliasEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Everything the feature extractors look up, compiled and immutable.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KnowledgeResources {
    pub name_stats: NameStatistics,
    pub gazetteers: Vec<Gazetteer>,
    pub link_prob: LinkProbTable,
    pub type_prob: TypeProbTable,
    pub aliases: AliasDictionary,
}

impl KnowledgeResources {
    /// Degenerate resources: every table empty.
    pub fn empty() -> Self {
        Self::default()
    }
}
