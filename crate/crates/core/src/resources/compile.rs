//! Table compilers over the raw TSV inputs.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use log::warn;

use super::pos::PosTagger;
use super::{
    AliasDictionary, AliasEntry, BilouPosition, Gazetteer, LinkProbTable, NameStatistics,
    ResourceError, TypeProbTable,
};

const TOP_POS_SEQUENCES: usize = 100;

fn parse_error(file: &str, line: usize, message: impl Into<String>) -> ResourceError {
    ResourceError::Parse {
        file: file.to_string(),
        line,
        message: message.into(),
    }
}

/// A parsed minimal KB dump: one coarse type row per entity plus its
/// surface forms.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KbDump {
    pub(crate) types: BTreeMap<String, String>,
    pub(crate) aliases: BTreeMap<String, BTreeSet<String>>,
}

impl KbDump {
    pub fn entity_count(&self) -> usize {
        self.types.len()
    }

    pub fn entity_type(&self, id: &str) -> Option<&str> {
        self.types.get(id).map(String::as_str)
    }

    pub fn surfaces(&self, id: &str) -> Option<&BTreeSet<String>> {
        self.aliases.get(id)
    }

    /// The compiled alias dictionary view: every entity with at least one
    /// surface form, carrying its coarse type.
    pub fn alias_dictionary(&self) -> AliasDictionary {
        let entries = self
            .aliases
            .iter()
            .map(|(id, surfaces)| {
                (
                    id.clone(),
                    AliasEntry {
                        entity_type: self.types[id].clone(),
                        surfaces: surfaces.clone(),
                    },
                )
            })
            .collect();
        AliasDictionary::build(entries)
    }
}

/// Parses the two KB streams: `kb_types` rows are `entity TAB type`,
/// `aliases` rows are `entity TAB surface form`. Every aliased entity must
/// have exactly one type row.
pub fn parse_kb<R1: BufRead, R2: BufRead>(
    kb_types: R1,
    aliases: R2,
) -> Result<KbDump, ResourceError> {
    let mut dump = KbDump::default();
    for (lineno, line) in kb_types.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (entity, ty) = line
            .split_once('\t')
            .ok_or_else(|| parse_error("kb_types.tsv", lineno + 1, "expected entity TAB type"))?;
        let (entity, ty) = (entity.trim(), ty.trim());
        if entity.is_empty() || ty.is_empty() {
            return Err(parse_error("kb_types.tsv", lineno + 1, "empty field"));
        }
        if let Some(existing) = dump.types.get(entity) {
            if existing != ty {
                return Err(ResourceError::DuplicateEntityType(entity.to_string()));
            }
        }
        dump.types.insert(entity.to_string(), ty.to_string());
    }
    for (lineno, line) in aliases.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (entity, surface) = line.split_once('\t').ok_or_else(|| {
            parse_error("aliases.tsv", lineno + 1, "expected entity TAB surface form")
        })?;
        let (entity, surface) = (entity.trim(), surface.trim());
        if !dump.types.contains_key(entity) {
            return Err(ResourceError::UnknownEntity {
                entity: entity.to_string(),
                line: lineno + 1,
            });
        }
        if surface.is_empty() {
            return Err(parse_error("aliases.tsv", lineno + 1, "empty surface form"));
        }
        dump.aliases
            .entry(entity.to_string())
            .or_default()
            .insert(surface.to_string());
    }
    Ok(dump)
}

/// Compiles per-token frequencies and top POS sequences from a name list
/// (one name per line).
///
/// Token weights are counts over lowercased whitespace tokens, divided by
/// the maximum count. POS sequences come from tagging each name embedded in
/// the fixed carrier sentence `<name> is here .` and slicing out the name
/// span; the 100 most frequent sequences are kept (ties broken
/// lexicographically).
pub fn compile_name_stats<R: BufRead>(
    names: R,
    tagger: &dyn PosTagger,
) -> Result<NameStatistics, ResourceError> {
    let mut token_counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut seq_counts: BTreeMap<Vec<String>, u64> = BTreeMap::new();
    let mut any = false;
    for line in names.lines() {
        let line = line?;
        let name = line.trim();
        if name.is_empty() {
            continue;
        }
        any = true;
        let tokens: Vec<String> = name.split_whitespace().map(String::from).collect();
        for token in &tokens {
            *token_counts.entry(token.to_lowercase()).or_default() += 1;
        }
        let mut carrier = tokens.clone();
        carrier.extend(["is", "here", "."].map(String::from));
        let tags = tagger.tag(&carrier);
        *seq_counts
            .entry(tags[..tokens.len()].to_vec())
            .or_default() += 1;
    }
    if !any {
        return Err(ResourceError::EmptyNameList);
    }
    let max = *token_counts.values().max().unwrap() as f64;
    let token_weight = token_counts
        .into_iter()
        .map(|(t, c)| (t, c as f64 / max))
        .collect();
    let mut ranked: Vec<(Vec<String>, u64)> = seq_counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(TOP_POS_SEQUENCES);
    Ok(NameStatistics {
        token_weight,
        top_pos_sequences: ranked.into_iter().map(|(s, _)| s).collect(),
    })
}

/// Compiles the link-probability table from rows
/// `document TAB token TAB 0|1`.
///
/// A token counts as linked in a document if it is flagged on any of that
/// document's rows; the probability is linked-document count over
/// present-document count. Tokens are lowercased.
pub fn compile_link_prob<R: BufRead>(rows: R) -> Result<LinkProbTable, ResourceError> {
    let mut present: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut linked: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (lineno, line) in rows.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(parse_error(
                "links.tsv",
                lineno + 1,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        let doc = fields[0].trim();
        let token = fields[1].trim().to_lowercase();
        if doc.is_empty() || token.is_empty() {
            return Err(parse_error("links.tsv", lineno + 1, "empty field"));
        }
        let flag = match fields[2].trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(parse_error(
                    "links.tsv",
                    lineno + 1,
                    format!("linked flag must be 0 or 1, found {other:?}"),
                ))
            }
        };
        present.entry(token.clone()).or_default().insert(doc.to_string());
        if flag {
            linked.entry(token).or_default().insert(doc.to_string());
        }
    }
    let probs = present
        .into_iter()
        .map(|(token, docs)| {
            let linked_count = linked.get(&token).map_or(0, BTreeSet::len);
            let p = linked_count as f64 / docs.len() as f64;
            (token, p)
        })
        .collect();
    Ok(LinkProbTable { probs })
}

/// Compiles both type-probability tables from the KB dump.
///
/// Each (entity, alias) pair counts once: for every token of the tokenized,
/// lowercased surface form, the entity's type gets one count (and, in the
/// positioned variant, one count under the token's BILOU position within
/// the surface form). Probabilities divide by the token's total occurrence
/// count, so each token's row sums to 1 in both variants.
pub fn compile_type_prob(kb: &KbDump) -> Result<TypeProbTable, ResourceError> {
    let mut type_counts: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    let mut pos_counts: BTreeMap<String, BTreeMap<(BilouPosition, String), u64>> = BTreeMap::new();
    let mut totals: BTreeMap<String, u64> = BTreeMap::new();
    for (entity, surfaces) in &kb.aliases {
        let ty = &kb.types[entity];
        for surface in surfaces {
            let tokens: Vec<String> = surface
                .split_whitespace()
                .map(str::to_lowercase)
                .collect();
            let len = tokens.len();
            for (i, token) in tokens.into_iter().enumerate() {
                *type_counts
                    .entry(token.clone())
                    .or_default()
                    .entry(ty.clone())
                    .or_default() += 1;
                *pos_counts
                    .entry(token.clone())
                    .or_default()
                    .entry((BilouPosition::of(i, len), ty.clone()))
                    .or_default() += 1;
                *totals.entry(token).or_default() += 1;
            }
        }
    }
    let unconditioned = type_counts
        .into_iter()
        .map(|(token, row)| {
            let total = totals[&token] as f64;
            let row = row
                .into_iter()
                .map(|(ty, c)| (ty, c as f64 / total))
                .collect();
            (token, row)
        })
        .collect();
    let positioned = pos_counts
        .into_iter()
        .map(|(token, row)| {
            let total = totals[&token] as f64;
            let row = row
                .into_iter()
                .map(|(key, c)| (key, c as f64 / total))
                .collect();
            (token, row)
        })
        .collect();
    Ok(TypeProbTable {
        unconditioned,
        positioned,
    })
}

/// Gazetteer build spec: each entry maps a gazetteer name to the set of KB
/// type labels whose entities' surface forms it should contain.
pub type GazetteerSpec = Vec<(String, BTreeSet<String>)>;

/// Parses spec rows `name TAB comma-separated types`.
pub fn parse_gazetteer_spec<R: BufRead>(rows: R) -> Result<GazetteerSpec, ResourceError> {
    let mut spec = Vec::new();
    for (lineno, line) in rows.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (name, types) = line.split_once('\t').ok_or_else(|| {
            parse_error("gazetteer spec", lineno + 1, "expected name TAB types")
        })?;
        let types: BTreeSet<String> = types
            .split(',')
            .map(|t| t.trim().to_string())
            .filter(|t| !t.is_empty())
            .collect();
        if types.is_empty() {
            return Err(parse_error("gazetteer spec", lineno + 1, "no types listed"));
        }
        spec.push((name.trim().to_string(), types));
    }
    Ok(spec)
}

/// Builds one gazetteer per spec entry from the surface forms of every
/// entity whose KB type is in the mapped set. Types no entity carries are
/// warned about and contribute nothing.
pub fn compile_gazetteers(
    kb: &KbDump,
    spec: &GazetteerSpec,
) -> Result<Vec<Gazetteer>, ResourceError> {
    let known_types: BTreeSet<&str> = kb.types.values().map(String::as_str).collect();
    let mut gazetteers = Vec::with_capacity(spec.len());
    for (name, types) in spec {
        for ty in types {
            if !known_types.contains(ty.as_str()) {
                warn!("gazetteer {name:?}: no entity has type {ty:?}");
            }
        }
        let mut entries = BTreeSet::new();
        for (entity, surfaces) in &kb.aliases {
            if !types.contains(&kb.types[entity]) {
                continue;
            }
            for surface in surfaces {
                let tokens: Vec<String> = surface
                    .split_whitespace()
                    .map(str::to_lowercase)
                    .collect();
                if !tokens.is_empty() {
                    entries.insert(tokens);
                }
            }
        }
        gazetteers.push(Gazetteer::new(name.clone(), entries)?);
    }
    Ok(gazetteers)
}
