//! Conversions between mention spans and positional tag sequences.

use super::{CorpusError, LabelScheme, MentionSpan, SchemeKind};

/// Positional prefix of a tag: Begin, Inside, Last, Outside, Unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TagPrefix {
    O,
    B,
    I,
    L,
    U,
}

/// A structurally parsed tag; the type is `None` exactly for `O`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct RawTag {
    pub prefix: TagPrefix,
    pub entity_type: Option<String>,
}

/// Parses `O` / `B-x` / `I-x` / `L-x` / `U-x`; anything else is rejected.
pub(crate) fn parse_tag(label: &str) -> Result<RawTag, CorpusError> {
    if label == "O" {
        return Ok(RawTag {
            prefix: TagPrefix::O,
            entity_type: None,
        });
    }
    let mut chars = label.chars();
    let prefix = match chars.next() {
        Some('B') => TagPrefix::B,
        Some('I') => TagPrefix::I,
        Some('L') => TagPrefix::L,
        Some('U') => TagPrefix::U,
        _ => return Err(CorpusError::UnknownLabel(label.to_string())),
    };
    if chars.next() != Some('-') {
        return Err(CorpusError::UnknownLabel(label.to_string()));
    }
    let entity_type: String = chars.collect();
    if entity_type.is_empty() || entity_type.chars().any(char::is_whitespace) {
        return Err(CorpusError::UnknownLabel(label.to_string()));
    }
    Ok(RawTag {
        prefix,
        entity_type: Some(entity_type),
    })
}

/// Encodes non-overlapping spans as a tag sequence of length `sentence_len`.
///
/// Tokens outside all spans get `O`; a single-token span gets `U-type`
/// under BILOU and `B-type` under BIO; a multi-token span gets `B`, `I`...,
/// `L` (BILOU) or `B`, `I`... (BIO).
pub fn spans_to_labels(
    sentence_len: usize,
    spans: &[MentionSpan],
    scheme: &LabelScheme,
) -> Result<Vec<String>, CorpusError> {
    let mut sorted: Vec<&MentionSpan> = spans.iter().collect();
    sorted.sort();
    for pair in sorted.windows(2) {
        if pair[0].start < pair[1].end && pair[1].start < pair[0].end {
            return Err(CorpusError::OverlappingSpans(
                pair[0].clone(),
                pair[1].clone(),
            ));
        }
    }
    let mut labels = vec!["O".to_string(); sentence_len];
    for span in sorted {
        if span.end > sentence_len {
            return Err(CorpusError::SpanOutOfBounds(span.clone(), sentence_len));
        }
        if !scheme.contains_type(&span.entity_type) {
            return Err(CorpusError::InvalidType(span.entity_type.clone()));
        }
        let t = &span.entity_type;
        match scheme.kind() {
            SchemeKind::Bilou => {
                if span.len() == 1 {
                    labels[span.start] = format!("U-{t}");
                } else {
                    labels[span.start] = format!("B-{t}");
                    for i in span.start + 1..span.end - 1 {
                        labels[i] = format!("I-{t}");
                    }
                    labels[span.end - 1] = format!("L-{t}");
                }
            }
            SchemeKind::Bio => {
                labels[span.start] = format!("B-{t}");
                for i in span.start + 1..span.end {
                    labels[i] = format!("I-{t}");
                }
            }
        }
    }
    Ok(labels)
}

/// Decodes a tag sequence back into spans.
///
/// Exact inverse of [`spans_to_labels`] on well-formed sequences. Malformed
/// sequences are repaired instead of rejected: an out-of-place `I-x`/`L-x`
/// (no open span of type `x`) opens a new span as if it were `B-x`. Labels
/// outside the scheme's inventory are an error.
pub fn labels_to_spans(
    labels: &[String],
    scheme: &LabelScheme,
    sentence_index: usize,
) -> Result<Vec<MentionSpan>, CorpusError> {
    if labels.is_empty() {
        return Err(CorpusError::EmptyLabelSequence);
    }
    let mut tags = Vec::with_capacity(labels.len());
    for label in labels {
        if !scheme.contains_label(label) {
            return Err(CorpusError::UnknownLabel(label.clone()));
        }
        tags.push(parse_tag(label)?);
    }
    Ok(decode_tags(&tags, sentence_index))
}

/// Repair-decoding over parsed tags; shared by [`labels_to_spans`] and the
/// CoNLL reader (which has no scheme to validate against).
pub(crate) fn decode_tags(tags: &[RawTag], sentence_index: usize) -> Vec<MentionSpan> {
    let mut spans = Vec::new();
    // (start, type) of the currently open span
    let mut open: Option<(usize, String)> = None;
    for (pos, tag) in tags.iter().enumerate() {
        match tag.prefix {
            TagPrefix::O => {
                if let Some((start, ty)) = open.take() {
                    spans.push(MentionSpan::new(sentence_index, start, pos, ty).unwrap());
                }
            }
            TagPrefix::B => {
                if let Some((start, ty)) = open.take() {
                    spans.push(MentionSpan::new(sentence_index, start, pos, ty).unwrap());
                }
                open = Some((pos, tag.entity_type.clone().unwrap()));
            }
            TagPrefix::I => {
                let ty = tag.entity_type.clone().unwrap();
                match &open {
                    Some((_, open_ty)) if *open_ty == ty => {}
                    _ => {
                        // out-of-place I: close whatever was open, reopen as B
                        if let Some((start, old)) = open.take() {
                            spans.push(MentionSpan::new(sentence_index, start, pos, old).unwrap());
                        }
                        open = Some((pos, ty));
                    }
                }
            }
            TagPrefix::L => {
                let ty = tag.entity_type.clone().unwrap();
                match open.take() {
                    Some((start, open_ty)) if open_ty == ty => {
                        spans.push(MentionSpan::new(sentence_index, start, pos + 1, ty).unwrap());
                    }
                    other => {
                        // out-of-place L: close the mismatched span, treat as B
                        if let Some((start, old)) = other {
                            spans.push(MentionSpan::new(sentence_index, start, pos, old).unwrap());
                        }
                        open = Some((pos, ty));
                    }
                }
            }
            TagPrefix::U => {
                if let Some((start, ty)) = open.take() {
                    spans.push(MentionSpan::new(sentence_index, start, pos, ty).unwrap());
                }
                let ty = tag.entity_type.clone().unwrap();
                spans.push(MentionSpan::new(sentence_index, pos, pos + 1, ty).unwrap());
            }
        }
    }
    if let Some((start, ty)) = open {
        spans.push(MentionSpan::new(sentence_index, start, tags.len(), ty).unwrap());
    }
    spans
}
