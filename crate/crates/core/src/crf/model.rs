//! Model parameters and the transition-validity rules.

use std::collections::BTreeMap;

use super::CrfError;
use crate::corpus::{LabelScheme, SchemeKind, TagPrefix};

/// The label set a model is defined over: either derived from a
/// [`LabelScheme`] (which also fixes the transition grammar) or a custom
/// list of names with permissive transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelInventory {
    names: Vec<String>,
    scheme: Option<LabelScheme>,
}

impl LabelInventory {
    pub fn from_scheme(scheme: LabelScheme) -> Self {
        Self {
            names: scheme.labels().to_vec(),
            scheme: Some(scheme),
        }
    }

    pub fn custom(names: Vec<String>) -> Result<Self, CrfError> {
        if names.is_empty() {
            return Err(CrfError::InvalidInventory);
        }
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() || n.contains('\t') || n.contains(char::is_whitespace) {
                return Err(CrfError::InvalidInventory);
            }
            if names[..i].contains(n) {
                return Err(CrfError::InvalidInventory);
            }
        }
        Ok(Self { names, scheme: None })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.names.iter().position(|n| n == label)
    }

    pub fn scheme(&self) -> Option<&LabelScheme> {
        self.scheme.as_ref()
    }
}

/// Which label configurations a path may use: start labels, end labels, and
/// label-pair transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRules {
    n: usize,
    start: Vec<bool>,
    end: Vec<bool>,
    pair: Vec<bool>, // n*n row-major, [from*n + to]
}

impl TransitionRules {
    /// Everything allowed; used with custom label inventories.
    pub fn permissive(n: usize) -> Self {
        Self {
            n,
            start: vec![true; n],
            end: vec![true; n],
            pair: vec![true; n * n],
        }
    }

    pub fn new(start: Vec<bool>, end: Vec<bool>, pair: Vec<bool>) -> Result<Self, CrfError> {
        let n = start.len();
        if end.len() != n || pair.len() != n * n || n == 0 {
            return Err(CrfError::InvalidInventory);
        }
        Ok(Self { n, start, end, pair })
    }

    /// Encodes the positional-tag grammar of a scheme.
    ///
    /// BILOU: sequences may start only with `O`, `B-x`, `U-x` and end only
    /// with `O`, `L-x`, `U-x`; an open mention (`B-x`, `I-x`) may only be
    /// followed by `I-x` or `L-x`, and a closed state (`O`, `L-x`, `U-x`)
    /// only by `O`, `B-y`, `U-y`. BIO: starts are `O`/`B-x`, all ends are
    /// valid, and `I-x` must follow `B-x` or `I-x`.
    pub fn for_scheme(scheme: &LabelScheme) -> Self {
        #[derive(Clone, Copy, PartialEq)]
        struct Parsed {
            prefix: TagPrefix,
            type_id: usize,
        }
        let parsed: Vec<Parsed> = scheme
            .labels()
            .iter()
            .map(|label| {
                if label == "O" {
                    return Parsed {
                        prefix: TagPrefix::O,
                        type_id: usize::MAX,
                    };
                }
                let (p, t) = label.split_once('-').expect("scheme labels are O or P-type");
                let prefix = match p {
                    "B" => TagPrefix::B,
                    "I" => TagPrefix::I,
                    "L" => TagPrefix::L,
                    "U" => TagPrefix::U,
                    _ => unreachable!("scheme generates only BILOU prefixes"),
                };
                let type_id = scheme.types().iter().position(|ty| ty == t).unwrap();
                Parsed { prefix, type_id }
            })
            .collect();
        let n = parsed.len();
        let mut start = vec![false; n];
        let mut end = vec![false; n];
        let mut pair = vec![false; n * n];
        for (i, a) in parsed.iter().enumerate() {
            start[i] = match a.prefix {
                TagPrefix::O | TagPrefix::B | TagPrefix::U => true,
                TagPrefix::I | TagPrefix::L => false,
            };
            end[i] = match scheme.kind() {
                SchemeKind::Bilou => matches!(a.prefix, TagPrefix::O | TagPrefix::L | TagPrefix::U),
                SchemeKind::Bio => true,
            };
            for (j, b) in parsed.iter().enumerate() {
                pair[i * n + j] = match scheme.kind() {
                    SchemeKind::Bilou => match a.prefix {
                        // inside an open mention: must continue or close it
                        TagPrefix::B | TagPrefix::I => {
                            matches!(b.prefix, TagPrefix::I | TagPrefix::L)
                                && b.type_id == a.type_id
                        }
                        // closed: anything that starts fresh
                        TagPrefix::O | TagPrefix::L | TagPrefix::U => {
                            matches!(b.prefix, TagPrefix::O | TagPrefix::B | TagPrefix::U)
                        }
                    },
                    SchemeKind::Bio => match b.prefix {
                        TagPrefix::O | TagPrefix::B => true,
                        TagPrefix::I => {
                            matches!(a.prefix, TagPrefix::B | TagPrefix::I)
                                && a.type_id == b.type_id
                        }
                        _ => unreachable!(),
                    },
                };
            }
        }
        Self { n, start, end, pair }
    }

    pub fn label_count(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn start_ok(&self, label: usize) -> bool {
        self.start[label]
    }

    #[inline]
    pub fn end_ok(&self, label: usize) -> bool {
        self.end[label]
    }

    #[inline]
    pub fn pair_ok(&self, from: usize, to: usize) -> bool {
        self.pair[from * self.n + to]
    }
}

/// A trained (or under-construction) linear-chain CRF.
///
/// State weights are kept per attribute key as a dense row over labels;
/// transition weights as a dense label×label matrix. All weights are finite
/// by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfModel {
    inventory: LabelInventory,
    rules: TransitionRules,
    state: BTreeMap<String, Vec<f64>>,
    trans: Vec<f64>,
}

impl CrfModel {
    /// Zero-weight model over the given inventory and rules.
    pub fn zeroed(inventory: LabelInventory, rules: TransitionRules) -> Self {
        assert_eq!(inventory.len(), rules.label_count());
        let n = inventory.len();
        Self {
            inventory,
            rules,
            state: BTreeMap::new(),
            trans: vec![0.0; n * n],
        }
    }

    /// Zero-weight model with scheme-derived labels and transition grammar.
    pub fn for_scheme(scheme: LabelScheme) -> Self {
        let rules = TransitionRules::for_scheme(&scheme);
        Self::zeroed(LabelInventory::from_scheme(scheme), rules)
    }

    pub fn inventory(&self) -> &LabelInventory {
        &self.inventory
    }

    pub fn rules(&self) -> &TransitionRules {
        &self.rules
    }

    pub fn label_count(&self) -> usize {
        self.inventory.len()
    }

    pub fn state_weight(&self, key: &str, label: usize) -> f64 {
        self.state.get(key).map_or(0.0, |row| row[label])
    }

    pub fn set_state_weight(&mut self, key: &str, label: usize, weight: f64) {
        assert!(weight.is_finite(), "weights must be finite");
        let n = self.inventory.len();
        let row = self
            .state
            .entry(key.to_string())
            .or_insert_with(|| vec![0.0; n]);
        row[label] = weight;
    }

    pub fn transition_weight(&self, from: usize, to: usize) -> f64 {
        self.trans[from * self.inventory.len() + to]
    }

    pub fn set_transition_weight(&mut self, from: usize, to: usize, weight: f64) {
        assert!(weight.is_finite(), "weights must be finite");
        let n = self.inventory.len();
        self.trans[from * n + to] = weight;
    }

    /// Attribute keys that carry at least one weight row.
    pub fn state_keys(&self) -> impl Iterator<Item = &str> {
        self.state.keys().map(String::as_str)
    }

    pub(crate) fn state_rows(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.state
    }

    pub(crate) fn transitions(&self) -> &[f64] {
        &self.trans
    }

    /// Number of stored nonzero weights (state plus transition).
    pub fn nonzero_weight_count(&self) -> usize {
        let state: usize = self
            .state
            .values()
            .map(|row| row.iter().filter(|w| **w != 0.0).count())
            .sum();
        state + self.trans.iter().filter(|w| **w != 0.0).count()
    }

    /// Drops attribute rows whose weights are all exactly zero.
    pub fn prune_zero_rows(&mut self) {
        self.state.retain(|_, row| row.iter().any(|w| *w != 0.0));
    }
}
