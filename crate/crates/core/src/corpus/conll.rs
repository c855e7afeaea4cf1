//! CoNLL-style column-format reader and writer.
//!
//! One token per line, whitespace/tab-separated columns, blank line between
//! sentences, and a line whose first column is `-DOCSTART-` between
//! documents. `-DOCSTART-` rows are consumed, never returned as tokens.
//!
//! The writer emits the normalized form this crate reads back
//! byte-identically: token, POS (`-` when absent), BILOU label, tab
//! separated, LF line endings.

use std::io::{BufRead, Write};

use super::labels::{decode_tags, parse_tag, spans_to_labels, RawTag};
use super::{CorpusError, Document, LabelScheme, MentionSpan, Sentence, Token};

const DOCSTART: &str = "-DOCSTART-";

/// Which columns to read. Column indices are zero-based positions among the
/// whitespace-separated fields of a line.
#[derive(Debug, Clone, Copy)]
pub struct ColumnSpec {
    pub token: usize,
    pub pos: Option<usize>,
    pub label: Option<usize>,
}

impl ColumnSpec {
    /// The normalized three-column layout produced by [`write_conll`].
    pub fn normalized() -> Self {
        Self {
            token: 0,
            pos: Some(1),
            label: Some(2),
        }
    }

    /// The CoNLL 2003 four-column layout (token, POS, chunk, NE label).
    pub fn conll2003() -> Self {
        Self {
            token: 0,
            pos: Some(1),
            label: Some(3),
        }
    }

    fn max_index(&self) -> usize {
        self.token
            .max(self.pos.unwrap_or(0))
            .max(self.label.unwrap_or(0))
    }
}

impl Default for ColumnSpec {
    fn default() -> Self {
        Self::normalized()
    }
}

struct DocBuilder {
    next_id: usize,
    sentences: Vec<Sentence>,
    mentions: Vec<MentionSpan>,
    // current sentence under construction
    tokens: Vec<Token>,
    tags: Vec<RawTag>,
    docs: Vec<Document>,
    has_labels: bool,
}

impl DocBuilder {
    fn flush_sentence(&mut self) -> Result<(), CorpusError> {
        if self.tokens.is_empty() {
            return Ok(());
        }
        let sentence_index = self.sentences.len();
        let sentence = Sentence::new(std::mem::take(&mut self.tokens))?;
        if self.has_labels {
            self.mentions
                .extend(decode_tags(&std::mem::take(&mut self.tags), sentence_index));
        } else {
            self.tags.clear();
        }
        self.sentences.push(sentence);
        Ok(())
    }

    fn flush_document(&mut self) -> Result<(), CorpusError> {
        self.flush_sentence()?;
        if self.sentences.is_empty() {
            return Ok(());
        }
        let id = format!("d{:04}", self.next_id);
        self.next_id += 1;
        let gold = self.has_labels.then(|| std::mem::take(&mut self.mentions));
        self.mentions.clear();
        self.docs
            .push(Document::new(id, std::mem::take(&mut self.sentences), gold)?);
        Ok(())
    }
}

/// Reads a CoNLL-style stream into documents.
///
/// Gold mentions are decoded from the label column when `spec.label` is
/// set; both BIO and BILOU tags are accepted. A POS field of `-` is read
/// as "no tag". Errors carry the 1-based line number.
pub fn read_conll<R: BufRead>(reader: R, spec: ColumnSpec) -> Result<Vec<Document>, CorpusError> {
    let mut b = DocBuilder {
        next_id: 0,
        sentences: Vec::new(),
        mentions: Vec::new(),
        tokens: Vec::new(),
        tags: Vec::new(),
        docs: Vec::new(),
        has_labels: spec.label.is_some(),
    };
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            b.flush_sentence()?;
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols[0] == DOCSTART {
            b.flush_document()?;
            continue;
        }
        if cols.len() <= spec.max_index() {
            return Err(CorpusError::ColumnCount {
                line: lineno,
                needed: spec.max_index() + 1,
                found: cols.len(),
            });
        }
        let pos = spec
            .pos
            .map(|i| cols[i])
            .filter(|p| *p != "-")
            .map(str::to_string);
        let token = Token::new(cols[spec.token], pos, b.tokens.len())?;
        if let Some(label_col) = spec.label {
            let tag = parse_tag(cols[label_col]).map_err(|_| CorpusError::InvalidLabel {
                line: lineno,
                label: cols[label_col].to_string(),
            })?;
            b.tags.push(tag);
        }
        b.tokens.push(token);
    }
    b.flush_document()?;
    Ok(b.docs)
}

/// Writes documents in the normalized three-column layout.
///
/// Every document is preceded by a `-DOCSTART-` row; gold mentions are
/// encoded with the given scheme (unannotated documents get all-`O`).
pub fn write_conll<W: Write>(
    writer: &mut W,
    docs: &[Document],
    scheme: &LabelScheme,
) -> Result<(), CorpusError> {
    for doc in docs {
        writeln!(writer, "{DOCSTART}\t-\tO")?;
        writeln!(writer)?;
        for (si, sentence) in doc.sentences().iter().enumerate() {
            let spans = doc.gold_in_sentence(si);
            let labels = spans_to_labels(sentence.len(), &spans, scheme)?;
            for (token, label) in sentence.tokens().iter().zip(&labels) {
                writeln!(
                    writer,
                    "{}\t{}\t{}",
                    token.text(),
                    token.pos().unwrap_or("-"),
                    label
                )?;
            }
            writeln!(writer)?;
        }
    }
    Ok(())
}
