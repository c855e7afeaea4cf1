//! Name-based features: per-token mention frequency and membership in a
//! frequent POS-tag sequence.

use crate::corpus::Sentence;
use crate::crf::{AttributeMap, AttributeSequence};
use crate::resources::NameStatistics;

use super::matching::mark_leftmost_longest;
use super::FeatureError;

/// Emits `n:freq` (normalized mention-token frequency, 0 when the token
/// never occurs in the name list) for every token, and `n:posseq` for
/// tokens inside a leftmost-longest match of one of the top POS sequences.
///
/// POS-sequence matching needs a tag on every token; pass
/// `use_pos = false` to skip it.
pub fn extract_name(
    sentence: &Sentence,
    stats: &NameStatistics,
    use_pos: bool,
) -> Result<AttributeSequence, FeatureError> {
    let n = sentence.len();
    let mut maps: Vec<AttributeMap> = sentence
        .tokens()
        .iter()
        .map(|token| {
            let mut map = AttributeMap::new();
            let weight = stats.token_weight(&token.text().to_lowercase());
            map.insert("n:freq".to_string(), weight);
            map
        })
        .collect();

    if use_pos {
        let mut tags: Vec<&str> = Vec::with_capacity(n);
        for token in sentence.tokens() {
            match token.pos() {
                Some(tag) => tags.push(tag),
                None => {
                    return Err(FeatureError::MissingPos {
                        token: token.text().to_string(),
                        index: token.index(),
                    })
                }
            }
        }
        let inside = mark_leftmost_longest(n, |i| {
            stats
                .top_pos_sequences()
                .iter()
                .filter(|seq| {
                    seq.len() <= n - i
                        && seq.iter().zip(&tags[i..]).all(|(a, b)| a == b)
                })
                .map(Vec::len)
                .max()
                .unwrap_or(0)
        });
        for (map, flag) in maps.iter_mut().zip(inside) {
            if flag {
                map.insert("n:posseq".to_string(), 1.0);
            }
        }
    }
    Ok(AttributeSequence::new(maps)?)
}
