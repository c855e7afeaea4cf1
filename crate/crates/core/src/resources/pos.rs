//! Pluggable POS tagging.
//!
//! Name-statistics compilation needs a tagger to derive POS sequences for
//! entity names; full statistical taggers are out of scope, so the crate
//! ships a deterministic lexicon-plus-suffix-rules tagger and keeps the
//! interface open for real ones.

pub trait PosTagger: Send + Sync {
    /// Tags a token sequence; the output has the same length as the input.
    fn tag(&self, tokens: &[String]) -> Vec<String>;
}

/// Deterministic rule-based tagger: a small closed-class lexicon, digit and
/// capitalization checks, then suffix rules, falling back to `NN`.
#[derive(Debug, Default, Clone)]
pub struct RuleTagger;

impl RuleTagger {
    pub fn new() -> Self {
        Self
    }

    fn lexicon(word: &str) -> Option<&'static str> {
        Some(match word {
            "the" | "a" | "an" => "DT",
            "of" | "in" | "on" | "at" | "by" | "for" | "with" | "from" | "into" | "under"
            | "over" => "IN",
            "to" => "TO",
            "and" | "or" | "but" => "CC",
            "is" | "has" | "says" => "VBZ",
            "was" | "were" | "had" | "said" => "VBD",
            "are" | "have" => "VBP",
            "be" => "VB",
            "he" | "she" | "it" | "they" | "we" | "i" | "you" => "PRP",
            "here" | "there" | "now" | "not" | "very" => "RB",
            "." | "!" | "?" => ".",
            "," => ",",
            ":" | ";" => ":",
            _ => return None,
        })
    }
}

impl PosTagger for RuleTagger {
    fn tag(&self, tokens: &[String]) -> Vec<String> {
        tokens
            .iter()
            .map(|token| {
                let lower = token.to_lowercase();
                if let Some(tag) = Self::lexicon(&lower) {
                    return tag.to_string();
                }
                if token.chars().all(|c| c.is_ascii_digit() || c == '.' || c == ',')
                    && token.chars().any(|c| c.is_ascii_digit())
                {
                    return "CD".to_string();
                }
                if token.chars().next().is_some_and(char::is_uppercase) {
                    return "NNP".to_string();
                }
                let tag = if lower.ends_with("ly") {
                    "RB"
                } else if lower.ends_with("ing") && lower.len() > 4 {
                    "VBG"
                } else if lower.ends_with("ed") && lower.len() > 3 {
                    "VBD"
                } else if lower.ends_with("tion")
                    || lower.ends_with("ment")
                    || lower.ends_with("ness")
                    || lower.ends_with("ity")
                {
                    "NN"
                } else if lower.ends_with('s')
                    && !lower.ends_with("ss")
                    && !lower.ends_with("us")
                    && !lower.ends_with("is")
                    && lower.len() > 3
                {
                    "NNS"
                } else {
                    "NN"
                };
                tag.to_string()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tag_all(words: &[&str]) -> Vec<String> {
        let tokens: Vec<String> = words.iter().map(|s| s.to_string()).collect();
        RuleTagger::new().tag(&tokens)
    }

    #[test]
    fn tags_a_multiword_organization_name() {
        assert_eq!(
            tag_all(&["Organization", "of", "American", "States"]),
            ["NNP", "IN", "NNP", "NNP"]
        );
    }

    #[test]
    fn closed_class_and_shape_rules() {
        assert_eq!(
            tag_all(&["The", "union", "is", "here", ".", "1990"]),
            ["DT", "NN", "VBZ", "RB", ".", "CD"]
        );
        assert_eq!(tag_all(&["quickly", "running", "walked"]), ["RB", "VBG", "VBD"]);
        assert_eq!(tag_all(&["stations"]), ["NNS"]);
    }

    #[test]
    fn output_length_matches_input() {
        let words: Vec<String> = ["a"; 7].iter().map(|s| s.to_string()).collect();
        assert_eq!(RuleTagger::new().tag(&words).len(), 7);
    }
}
