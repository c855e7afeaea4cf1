//! Knowledge-agnostic ("local") features: words, shapes, and POS tags in a
//! window, affixes, word recurrence, and sentence begin.

use crate::corpus::Sentence;
use crate::crf::{AttributeMap, AttributeSequence};

use super::{FeatureConfig, FeatureError, PREFIX_LENGTHS, SUFFIX_LENGTHS};

/// Sentinels for window slots before the first / after the last token.
const BOS: &str = "<s>";
const EOS: &str = "</s>";

/// Character-class rendering of a word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordShape {
    /// One class character per input character: uppercase→`X`,
    /// lowercase→`x`, digit→`d`, anything else verbatim.
    pub full: String,
    /// `full` with maximal runs of the same class collapsed to one char.
    pub collapsed: String,
}

pub fn word_shape(word: &str) -> WordShape {
    let full: String = word
        .chars()
        .map(|c| {
            if c.is_uppercase() {
                'X'
            } else if c.is_lowercase() {
                'x'
            } else if c.is_numeric() {
                'd'
            } else {
                c
            }
        })
        .collect();
    let mut collapsed = String::new();
    for c in full.chars() {
        if collapsed.chars().last() != Some(c) {
            collapsed.push(c);
        }
    }
    WordShape { full, collapsed }
}

/// Emits the six agnostic feature families for every token.
///
/// Out-of-range window slots emit boundary sentinel attributes, so the
/// model can learn sentence-edge behavior. Raw word attributes keep the
/// original casing (shapes capture it); affixes are lowercased. POS window
/// attributes require a POS tag on every token.
pub fn extract_agnostic(
    sentence: &Sentence,
    config: &FeatureConfig,
) -> Result<AttributeSequence, FeatureError> {
    let n = sentence.len();
    let words: Vec<&str> = sentence.tokens().iter().map(|t| t.text()).collect();
    let lowered: Vec<String> = words.iter().map(|w| w.to_lowercase()).collect();
    let shapes: Vec<WordShape> = words.iter().map(|w| word_shape(w)).collect();
    let pos: Option<Vec<&str>> = if config.use_pos {
        let mut tags = Vec::with_capacity(n);
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
        Some(tags)
    } else {
        None
    };

    let window = config.window_word as isize;
    let mut maps = Vec::with_capacity(n);
    for t in 0..n {
        let mut map = AttributeMap::new();
        for off in -window..=window {
            let slot = t as isize + off;
            let in_range = (0..n as isize).contains(&slot);
            let (word, shape_full, shape_collapsed, tag) = if in_range {
                let i = slot as usize;
                (
                    words[i],
                    shapes[i].full.as_str(),
                    shapes[i].collapsed.as_str(),
                    pos.as_ref().map(|p| p[i]),
                )
            } else {
                let s = if slot < 0 { BOS } else { EOS };
                (s, s, s, pos.as_ref().map(|_| s))
            };
            map.insert(format!("a:w[{off}]={word}"), 1.0);
            map.insert(format!("a:shape[{off}]={shape_full}"), 1.0);
            map.insert(format!("a:shapec[{off}]={shape_collapsed}"), 1.0);
            if let Some(tag) = tag {
                map.insert(format!("a:pos[{off}]={tag}"), 1.0);
            }
        }
        let chars: Vec<char> = lowered[t].chars().collect();
        for k in PREFIX_LENGTHS {
            if chars.len() >= k {
                let prefix: String = chars[..k].iter().collect();
                map.insert(format!("a:prefix{k}={prefix}"), 1.0);
            }
        }
        for k in SUFFIX_LENGTHS {
            if chars.len() >= k {
                let suffix: String = chars[chars.len() - k..].iter().collect();
                map.insert(format!("a:suffix{k}={suffix}"), 1.0);
            }
        }
        let wp = config.window_presence;
        let lo = t.saturating_sub(wp);
        let hi = (t + wp).min(n - 1);
        if (lo..=hi).any(|j| j != t && lowered[j] == lowered[t]) {
            map.insert("a:rep".to_string(), 1.0);
        }
        if t == 0 {
            map.insert("a:bos".to_string(), 1.0);
        }
        maps.push(map);
    }
    Ok(AttributeSequence::new(maps)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Category;

    #[test]
    fn shapes_match_the_classic_examples() {
        assert_eq!(word_shape("John"), WordShape { full: "Xxxx".into(), collapsed: "Xx".into() });
        assert_eq!(word_shape("EU-27"), WordShape { full: "XX-dd".into(), collapsed: "X-d".into() });
        assert_eq!(word_shape("a"), WordShape { full: "x".into(), collapsed: "x".into() });
    }

    fn config() -> FeatureConfig {
        FeatureConfig::new(Category::Agnostic)
    }

    #[test]
    fn single_token_sentence_gets_sentinels_and_affixes() {
        let s = Sentence::from_tagged([("Obama", "NNP")]).unwrap();
        let attrs = extract_agnostic(&s, &config()).unwrap();
        let map = attrs.map(0);
        assert_eq!(map.get("a:w[0]=Obama"), Some(&1.0));
        assert_eq!(map.get("a:shape[0]=Xxxxx"), Some(&1.0));
        assert_eq!(map.get("a:shapec[0]=Xx"), Some(&1.0));
        assert_eq!(map.get("a:pos[0]=NNP"), Some(&1.0));
        assert_eq!(map.get("a:prefix3=oba"), Some(&1.0));
        assert_eq!(map.get("a:prefix4=obam"), Some(&1.0));
        assert_eq!(map.get("a:suffix1=a"), Some(&1.0));
        assert_eq!(map.get("a:suffix4=bama"), Some(&1.0));
        assert_eq!(map.get("a:bos"), Some(&1.0));
        for off in [-2, -1] {
            assert_eq!(map.get(&format!("a:w[{off}]=<s>")), Some(&1.0));
        }
        for off in [1, 2] {
            assert_eq!(map.get(&format!("a:w[{off}]=</s>")), Some(&1.0));
        }
        assert!(!map.contains_key("a:rep"));
    }

    #[test]
    fn repeated_word_fires_within_the_presence_window() {
        let s = Sentence::from_tagged([
            ("To", "TO"),
            ("be", "VB"),
            ("or", "CC"),
            ("not", "RB"),
            ("to", "TO"),
            ("be", "VB"),
        ])
        .unwrap();
        let attrs = extract_agnostic(&s, &config()).unwrap();
        // both "to" tokens recur within ±4 (case-insensitively), as do both "be"
        for t in [0, 1, 4, 5] {
            assert_eq!(attrs.map(t).get("a:rep"), Some(&1.0), "token {t}");
        }
        for t in [2, 3] {
            assert!(!attrs.map(t).contains_key("a:rep"), "token {t}");
        }
    }

    #[test]
    fn shared_suffixes_surface_as_attributes() {
        let s = Sentence::from_tagged([("Freiburg", "NNP"), ("Marburg", "NNP")]).unwrap();
        let attrs = extract_agnostic(&s, &config()).unwrap();
        assert_eq!(attrs.map(0).get("a:suffix4=burg"), Some(&1.0));
        assert_eq!(attrs.map(1).get("a:suffix4=burg"), Some(&1.0));
    }

    #[test]
    fn short_words_skip_long_affixes() {
        let s = Sentence::from_tagged([("ab", "NN")]).unwrap();
        let attrs = extract_agnostic(&s, &config()).unwrap();
        let map = attrs.map(0);
        assert!(map.contains_key("a:suffix1=b"));
        assert!(map.contains_key("a:suffix2=ab"));
        assert!(!map.keys().any(|k| k.starts_with("a:suffix3")));
        assert!(!map.keys().any(|k| k.starts_with("a:prefix")));
    }

    #[test]
    fn missing_pos_is_an_error_only_when_pos_is_enabled() {
        let s = Sentence::from_words(["hello"]).unwrap();
        assert!(matches!(
            extract_agnostic(&s, &config()),
            Err(FeatureError::MissingPos { .. })
        ));
        let mut no_pos = config();
        no_pos.use_pos = false;
        let attrs = extract_agnostic(&s, &no_pos).unwrap();
        assert!(!attrs.map(0).keys().any(|k| k.starts_with("a:pos")));
    }

    #[test]
    fn neighboring_window_attributes_line_up() {
        let s = Sentence::from_tagged([("New", "NNP"), ("York", "NNP"), ("wins", "VBZ")]).unwrap();
        let attrs = extract_agnostic(&s, &config()).unwrap();
        assert_eq!(attrs.map(1).get("a:w[-1]=New"), Some(&1.0));
        assert_eq!(attrs.map(1).get("a:w[1]=wins"), Some(&1.0));
        assert_eq!(attrs.map(2).get("a:w[-2]=New"), Some(&1.0));
        assert_eq!(attrs.map(0).get("a:pos[1]=NNP"), Some(&1.0));
    }
}
