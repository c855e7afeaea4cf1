//! KB-based features: typed gazetteer matches, link probability, and the
//! plain and position-conditioned type-probability lookups.

use crate::corpus::Sentence;
use crate::crf::{AttributeMap, AttributeSequence};
use crate::resources::{Gazetteer, KnowledgeResources};

use super::matching::mark_leftmost_longest;
use super::FeatureError;

/// Emits, per token: one `kb:gaz:<name>` flag per gazetteer the token
/// matches into (leftmost-longest, case-insensitive, each gazetteer matched
/// independently); `kb:linkp` with the link probability (0 when unseen);
/// `kb:typep:<type>` for every type in the token's probability row; and the
/// position-conditioned `kb:postypep:<pos>-<type>` row, with
/// `kb:postypep:O = 1` for tokens absent from that table.
pub fn extract_kb(
    sentence: &Sentence,
    resources: &KnowledgeResources,
) -> Result<AttributeSequence, FeatureError> {
    let n = sentence.len();
    let lowered: Vec<String> = sentence
        .tokens()
        .iter()
        .map(|t| t.text().to_lowercase())
        .collect();

    let mut maps = vec![AttributeMap::new(); n];
    for gazetteer in &resources.gazetteers {
        let inside = match_gazetteer(gazetteer, &lowered);
        let key = format!("kb:gaz:{}", gazetteer.name());
        for (map, flag) in maps.iter_mut().zip(inside) {
            if flag {
                map.insert(key.clone(), 1.0);
            }
        }
    }
    for (map, token) in maps.iter_mut().zip(&lowered) {
        map.insert("kb:linkp".to_string(), resources.link_prob.prob(token));
        if let Some(row) = resources.type_prob.type_probs(token) {
            for (ty, p) in row {
                map.insert(format!("kb:typep:{ty}"), *p);
            }
        }
        match resources.type_prob.positioned_probs(token) {
            Some(row) => {
                for ((pos, ty), p) in row {
                    map.insert(format!("kb:postypep:{}-{ty}", pos.as_str()), *p);
                }
            }
            None => {
                map.insert("kb:postypep:O".to_string(), 1.0);
            }
        }
    }
    Ok(AttributeSequence::new(maps)?)
}

/// Per-token mask of leftmost-longest matches of one gazetteer over the
/// lowercased token sequence.
pub(crate) fn match_gazetteer(gazetteer: &Gazetteer, lowered: &[String]) -> Vec<bool> {
    let max_len = gazetteer.max_entry_len();
    mark_leftmost_longest(lowered.len(), |i| {
        let cap = max_len.min(lowered.len() - i);
        (1..=cap)
            .rev()
            .find(|&l| gazetteer.entries().contains(&lowered[i..i + l]))
            .unwrap_or(0)
    })
}
