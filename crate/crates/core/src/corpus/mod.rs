//! Corpus data model: tokenized documents, gold mention spans, label
//! schemes, and CoNLL-style text I/O.
//!
//! All types are immutable after construction and validate their invariants
//! in the constructor, so downstream modules can assume well-formed input.

mod conll;
mod labels;

pub use conll::{read_conll, write_conll, ColumnSpec};
pub use labels::{labels_to_spans, spans_to_labels, TagPrefix};

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("token text must be non-empty and contain no whitespace: {0:?}")]
    InvalidToken(String),
    #[error("sentence must contain at least one token")]
    EmptySentence,
    #[error("token index {found} does not match its position {expected}")]
    TokenIndexMismatch { expected: usize, found: usize },
    #[error("span {0} is out of bounds for a sentence of length {1}")]
    SpanOutOfBounds(MentionSpan, usize),
    #[error("span {0} references sentence {1}, but the document has {2} sentences")]
    SpanSentenceOutOfBounds(MentionSpan, usize, usize),
    #[error("spans {0} and {1} overlap")]
    OverlappingSpans(MentionSpan, MentionSpan),
    #[error("mention span requires start < end, got ({start}, {end})")]
    EmptySpan { start: usize, end: usize },
    #[error("label scheme requires at least one entity type")]
    NoTypes,
    #[error("invalid entity type {0:?}: must be non-empty without whitespace")]
    InvalidType(String),
    #[error("duplicate entity type {0:?}")]
    DuplicateType(String),
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("label sequence must be non-empty")]
    EmptyLabelSequence,
    #[error("line {line}: expected at least {needed} columns, found {found}")]
    ColumnCount { line: usize, needed: usize, found: usize },
    #[error("line {line}: invalid label {label:?}")]
    InvalidLabel { line: usize, label: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// A single token of a pre-tokenized sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    text: String,
    pos: Option<String>,
    index: usize,
}

impl Token {
    pub fn new(
        text: impl Into<String>,
        pos: Option<String>,
        index: usize,
    ) -> Result<Self, CorpusError> {
        let text = text.into();
        if text.is_empty() || text.chars().any(char::is_whitespace) {
            return Err(CorpusError::InvalidToken(text));
        }
        Ok(Self { text, pos, index })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn pos(&self) -> Option<&str> {
        self.pos.as_deref()
    }

    /// Position within the owning sentence.
    pub fn index(&self) -> usize {
        self.index
    }
}

/// An ordered, non-empty sequence of tokens; the CRF observation unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    tokens: Vec<Token>,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>) -> Result<Self, CorpusError> {
        if tokens.is_empty() {
            return Err(CorpusError::EmptySentence);
        }
        for (expected, token) in tokens.iter().enumerate() {
            if token.index != expected {
                return Err(CorpusError::TokenIndexMismatch {
                    expected,
                    found: token.index,
                });
            }
        }
        Ok(Self { tokens })
    }

    /// Builds a sentence from bare words, assigning indices; no POS tags.
    pub fn from_words<I, S>(words: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens = words
            .into_iter()
            .enumerate()
            .map(|(i, w)| Token::new(w, None, i))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(tokens)
    }

    /// Builds a sentence from (word, pos) pairs.
    pub fn from_tagged<I, S, P>(pairs: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = (S, P)>,
        S: Into<String>,
        P: Into<String>,
    {
        let tokens = pairs
            .into_iter()
            .enumerate()
            .map(|(i, (w, p))| Token::new(w, Some(p.into()), i))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(tokens)
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: non-empty
    }

    /// Space-joined text of the token range `[start, end)`.
    pub fn span_text(&self, start: usize, end: usize) -> String {
        self.tokens[start..end]
            .iter()
            .map(Token::text)
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// A contiguous token range holding one entity mention; the unit of
/// evaluation for both metrics.
///
/// `start` is inclusive and `end` exclusive, both token offsets within the
/// sentence at `sentence_index`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MentionSpan {
    pub sentence_index: usize,
    pub start: usize,
    pub end: usize,
    pub entity_type: String,
}

impl MentionSpan {
    pub fn new(
        sentence_index: usize,
        start: usize,
        end: usize,
        entity_type: impl Into<String>,
    ) -> Result<Self, CorpusError> {
        if start >= end {
            return Err(CorpusError::EmptySpan { start, end });
        }
        Ok(Self {
            sentence_index,
            start,
            end,
            entity_type: entity_type.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: start < end
    }

    fn overlaps(&self, other: &MentionSpan) -> bool {
        self.sentence_index == other.sentence_index
            && self.start < other.end
            && other.start < self.end
    }
}

impl fmt::Display for MentionSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}..{}, {})",
            self.sentence_index, self.start, self.end, self.entity_type
        )
    }
}

/// A tokenized document with optional gold mention annotations.
///
/// `gold_mentions` is `None` for unannotated input and `Some` (possibly
/// empty) when a label column was present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    id: String,
    sentences: Vec<Sentence>,
    gold_mentions: Option<Vec<MentionSpan>>,
}

impl Document {
    pub fn new(
        id: impl Into<String>,
        sentences: Vec<Sentence>,
        gold_mentions: Option<Vec<MentionSpan>>,
    ) -> Result<Self, CorpusError> {
        if let Some(spans) = &gold_mentions {
            for (i, span) in spans.iter().enumerate() {
                let Some(sentence) = sentences.get(span.sentence_index) else {
                    return Err(CorpusError::SpanSentenceOutOfBounds(
                        span.clone(),
                        span.sentence_index,
                        sentences.len(),
                    ));
                };
                if span.end > sentence.len() {
                    return Err(CorpusError::SpanOutOfBounds(span.clone(), sentence.len()));
                }
                for other in &spans[i + 1..] {
                    if span.overlaps(other) {
                        return Err(CorpusError::OverlappingSpans(span.clone(), other.clone()));
                    }
                }
            }
        }
        let mut gold_mentions = gold_mentions;
        if let Some(spans) = &mut gold_mentions {
            spans.sort();
        }
        Ok(Self {
            id: id.into(),
            sentences,
            gold_mentions,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn gold_mentions(&self) -> Option<&[MentionSpan]> {
        self.gold_mentions.as_deref()
    }

    /// Gold spans of one sentence, empty when unannotated.
    pub fn gold_in_sentence(&self, sentence_index: usize) -> Vec<MentionSpan> {
        self.gold_mentions
            .iter()
            .flatten()
            .filter(|s| s.sentence_index == sentence_index)
            .cloned()
            .collect()
    }
}

/// Positional tagging scheme flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Bilou,
    Bio,
}

impl SchemeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SchemeKind::Bilou => "bilou",
            SchemeKind::Bio => "bio",
        }
    }
}

/// A tagging scheme over an ordered set of entity types.
///
/// The label inventory always places `O` at index 0, followed by the
/// positional labels of each type in order (`B-t I-t L-t U-t` for BILOU,
/// `B-t I-t` for BIO), so the inventory size is `4n + 1` respectively
/// `2n + 1` for `n` types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelScheme {
    kind: SchemeKind,
    types: Vec<String>,
    labels: Vec<String>,
}

impl LabelScheme {
    pub fn new(kind: SchemeKind, types: Vec<String>) -> Result<Self, CorpusError> {
        if types.is_empty() {
            return Err(CorpusError::NoTypes);
        }
        for (i, t) in types.iter().enumerate() {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(CorpusError::InvalidType(t.clone()));
            }
            if types[..i].contains(t) {
                return Err(CorpusError::DuplicateType(t.clone()));
            }
        }
        let mut labels = vec!["O".to_string()];
        for t in &types {
            match kind {
                SchemeKind::Bilou => {
                    for p in ["B", "I", "L", "U"] {
                        labels.push(format!("{p}-{t}"));
                    }
                }
                SchemeKind::Bio => {
                    for p in ["B", "I"] {
                        labels.push(format!("{p}-{t}"));
                    }
                }
            }
        }
        Ok(Self { kind, types, labels })
    }

    pub fn bilou(types: Vec<String>) -> Result<Self, CorpusError> {
        Self::new(SchemeKind::Bilou, types)
    }

    pub fn bio(types: Vec<String>) -> Result<Self, CorpusError> {
        Self::new(SchemeKind::Bio, types)
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn types(&self) -> &[String] {
        &self.types
    }

    /// Full label inventory, `O` first.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_count(&self) -> usize {
        self.labels.len()
    }

    pub fn contains_label(&self, label: &str) -> bool {
        self.labels.iter().any(|l| l == label)
    }

    pub fn contains_type(&self, entity_type: &str) -> bool {
        self.types.iter().any(|t| t == entity_type)
    }
}
