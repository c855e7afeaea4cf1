//! Deterministic synthetic corpora with aligned knowledge resources, for
//! experiments, benchmarks, and the acceptance suite.
//!
//! The trend corpus realizes the incremental-knowledge setup: test-side
//! entities never occur in the training text but are present in the
//! gazetteers and probability tables, and every document mentions an
//! organization by its full name first and by a short alias later — the
//! short alias is only reachable through the alias dictionary, so it
//! rewards the two-pass entity category.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::corpus::{Document, MentionSpan, Sentence, Token};
use crate::resources::{
    compile_gazetteers, compile_link_prob, compile_name_stats, compile_type_prob,
    parse_gazetteer_spec, parse_kb, Gazetteer, KnowledgeResources, PosTagger, RuleTagger,
};

const PER_FIRST: [&str; 20] = [
    "alda", "brin", "cora", "dunn", "elio", "fay", "gil", "hana", "ivo", "jude", "kira", "lior",
    "mara", "nils", "orin", "pia", "quin", "rena", "sol", "tova",
];
const PER_LAST: [&str; 20] = [
    "varga", "keller", "osei", "tanaka", "ruiz", "novak", "haddad", "smit", "larsen", "okafor",
    "petrov", "mbeki", "duarte", "silva", "weber", "ito", "moreau", "gupta", "kovac", "brandt",
];
const LOC_BASE: [&str; 20] = [
    "maribel", "ulvera", "kotori", "sandmoor", "elvine", "tarnow", "veska", "brentik", "calvero",
    "drumlin", "fenwick", "galmere", "hollis", "ithmar", "jesper", "korvale", "lumo", "mireno",
    "norvik", "ostel",
];
const LOC_GEO: [&str; 5] = ["bay", "falls", "valley", "harbor", "heights"];
const ORG_ADJ: [&str; 12] = [
    "nordic", "baltic", "alpine", "coastal", "eastern", "western", "northern", "southern",
    "united", "central", "federal", "global",
];
const ORG_DOMAIN: [&str; 10] = [
    "timber", "grain", "steel", "textile", "shipping", "mining", "energy", "transit",
    "fisheries", "banking",
];
const ORG_SUFFIX: [&str; 4] = ["council", "unions", "alliance", "bureau"];
const MISC_THEME: [&str; 10] = [
    "harvest", "solstice", "equinox", "lantern", "ember", "frost", "meadow", "tide", "aurora",
    "cinder",
];
const MISC_KIND: [&str; 4] = ["festival", "accord", "charter", "pact"];

const ENTITY_TEMPLATES: [&[&str]; 6] = [
    &["the", "minister", "visited", "E", "yesterday", "."],
    &["delegates", "welcomed", "E", "during", "the", "summit", "."],
    &["E", "issued", "a", "statement", "on", "friday", "."],
    &["officials", "spoke", "about", "E", "after", "the", "vote", "."],
    &["a", "report", "about", "E", "was", "published", "."],
    &["sources", "confirmed", "the", "statement", "by", "E", "."],
];
const FILLER_TEMPLATES: [&[&str]; 3] = [
    &["the", "committee", "discussed", "trade", "plans", "yesterday", "."],
    &["members", "signed", "the", "deal", "after", "talks", "."],
    &["officials", "welcomed", "the", "report", "during", "the", "meeting", "."],
];

#[derive(Debug, Clone)]
struct SynthEntity {
    id: String,
    entity_type: &'static str,
    full: Vec<String>,
    short: Option<String>,
}

/// Train/test entity inventories with disjoint token pools, so test
/// surface forms share no tokens with training text.
struct EntityInventory {
    train: Vec<SynthEntity>,
    test: Vec<SynthEntity>,
}

fn build_inventory(rng: &mut ChaCha8Rng, per_side: usize) -> EntityInventory {
    let mut sides = Vec::new();
    for side in 0..2 {
        let mut entities = Vec::new();
        let half = |len: usize| {
            let mid = len / 2;
            if side == 0 {
                0..mid
            } else {
                mid..len
            }
        };
        // persons: first + last name
        let firsts: Vec<&str> = half(PER_FIRST.len()).map(|i| PER_FIRST[i]).collect();
        let lasts: Vec<&str> = half(PER_LAST.len()).map(|i| PER_LAST[i]).collect();
        let mut combos: Vec<(usize, usize)> = (0..firsts.len())
            .flat_map(|i| (0..lasts.len()).map(move |j| (i, j)))
            .collect();
        combos.shuffle(rng);
        for (i, j) in combos.into_iter().take(per_side) {
            entities.push(SynthEntity {
                id: format!("per:{}_{}", firsts[i], lasts[j]),
                entity_type: "PER",
                full: vec![firsts[i].to_string(), lasts[j].to_string()],
                short: None,
            });
        }
        // locations: base name, sometimes with a geographic noun
        let bases: Vec<&str> = half(LOC_BASE.len()).map(|i| LOC_BASE[i]).collect();
        for (k, base) in bases.iter().enumerate().take(per_side) {
            let full = if k % 2 == 0 {
                vec![base.to_string()]
            } else {
                vec![base.to_string(), LOC_GEO[k % LOC_GEO.len()].to_string()]
            };
            entities.push(SynthEntity {
                id: format!("loc:{base}"),
                entity_type: "LOC",
                full,
                short: None,
            });
        }
        // organizations: adjective + domain + suffix, short alias = acronym
        let adjs: Vec<&str> = half(ORG_ADJ.len()).map(|i| ORG_ADJ[i]).collect();
        let domains: Vec<&str> = half(ORG_DOMAIN.len()).map(|i| ORG_DOMAIN[i]).collect();
        let mut triples: Vec<(usize, usize, usize)> = (0..adjs.len())
            .flat_map(|a| {
                (0..domains.len())
                    .flat_map(move |d| (0..ORG_SUFFIX.len()).map(move |s| (a, d, s)))
            })
            .collect();
        triples.shuffle(rng);
        let mut used_acronyms = BTreeSet::new();
        let mut taken = 0;
        for (a, d, s) in triples {
            if taken == per_side {
                break;
            }
            let full = vec![
                adjs[a].to_string(),
                domains[d].to_string(),
                ORG_SUFFIX[s].to_string(),
            ];
            let acronym: String = full.iter().filter_map(|w| w.chars().next()).collect();
            if !used_acronyms.insert(acronym.clone()) {
                continue;
            }
            entities.push(SynthEntity {
                id: format!("org:{}", full.join("_")),
                entity_type: "ORG",
                full,
                short: Some(acronym),
            });
            taken += 1;
        }
        // miscellaneous: theme + kind, with a three-letter code alias so
        // short mentions are not type-separable by shape alone
        let themes: Vec<&str> = half(MISC_THEME.len()).map(|i| MISC_THEME[i]).collect();
        for (k, theme) in themes.iter().enumerate().take(per_side) {
            let kind = MISC_KIND[k % MISC_KIND.len()];
            let code: String = theme.chars().take(2).chain(kind.chars().take(1)).collect();
            entities.push(SynthEntity {
                id: format!("misc:{theme}"),
                entity_type: "MISC",
                full: vec![theme.to_string(), kind.to_string()],
                short: Some(code),
            });
        }
        sides.push(entities);
    }
    let test = sides.pop().unwrap();
    let train = sides.pop().unwrap();
    EntityInventory { train, test }
}

fn tagged_sentence(words: &[String], tagger: &RuleTagger) -> Sentence {
    let tags = tagger.tag(words);
    let tokens = words
        .iter()
        .zip(tags)
        .enumerate()
        .map(|(i, (w, t))| Token::new(w.clone(), Some(t), i).expect("synth words are wordlike"))
        .collect();
    Sentence::new(tokens).expect("templates are non-empty")
}

/// Instantiates a template; returns the words and the entity span bounds.
fn fill_template(
    template: &[&str],
    mention: Option<&[String]>,
) -> (Vec<String>, Option<(usize, usize)>) {
    let mut words = Vec::with_capacity(template.len() + 2);
    let mut span = None;
    for part in template {
        if *part == "E" {
            let mention = mention.expect("entity template needs a mention");
            span = Some((words.len(), words.len() + mention.len()));
            words.extend(mention.iter().cloned());
        } else {
            words.push(part.to_string());
        }
    }
    (words, span)
}

fn make_document(
    id: String,
    rng: &mut ChaCha8Rng,
    pool: &[SynthEntity],
    abbreviated: &[SynthEntity],
    tagger: &RuleTagger,
) -> Document {
    let paired = abbreviated[rng.gen_range(0..abbreviated.len())].clone();
    let mut sentences = Vec::new();
    let mut gold = Vec::new();
    let push_entity_sentence =
        |rng: &mut ChaCha8Rng, sentences: &mut Vec<Sentence>, gold: &mut Vec<MentionSpan>,
         mention: &[String], entity_type: &str| {
            let template = ENTITY_TEMPLATES[rng.gen_range(0..ENTITY_TEMPLATES.len())];
            let (words, span) = fill_template(template, Some(mention));
            let (start, end) = span.unwrap();
            gold.push(MentionSpan::new(sentences.len(), start, end, entity_type).unwrap());
            sentences.push(tagged_sentence(&words, tagger));
        };

    // the paired entity appears by full name first...
    push_entity_sentence(rng, &mut sentences, &mut gold, &paired.full, paired.entity_type);
    for _ in 0..rng.gen_range(1..=3) {
        if rng.gen_bool(0.6) {
            let entity = &pool[rng.gen_range(0..pool.len())];
            push_entity_sentence(rng, &mut sentences, &mut gold, &entity.full, entity.entity_type);
        } else {
            let template = FILLER_TEMPLATES[rng.gen_range(0..FILLER_TEMPLATES.len())];
            let (words, _) = fill_template(template, None);
            sentences.push(tagged_sentence(&words, tagger));
        }
    }
    // ...and by its short alias later in the document
    let short = vec![paired.short.clone().expect("paired entities carry a short alias")];
    push_entity_sentence(rng, &mut sentences, &mut gold, &short, paired.entity_type);

    Document::new(id, sentences, Some(gold)).expect("synth gold spans are valid")
}

/// A corpus pair plus resources for the incremental-knowledge experiment.
pub struct TrendCorpus {
    pub train: Vec<Document>,
    pub test: Vec<Document>,
    pub resources: KnowledgeResources,
}

/// Builds the incremental-knowledge corpus.
///
/// Gazetteers, type probabilities, and link probabilities are compiled from
/// the entities' full surface forms only; the alias dictionary additionally
/// knows the organizations' short aliases (the paper's gazetteer sources
/// and alias source are likewise independent), so short-alias mentions are
/// invisible to the KB category but recoverable by the entity category.
pub fn trend_corpus(seed: u64, train_docs: usize, test_docs: usize) -> TrendCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tagger = RuleTagger::new();
    let inventory = build_inventory(&mut rng, 8);
    let all: Vec<&SynthEntity> = inventory.train.iter().chain(&inventory.test).collect();

    let mut names = String::new();
    let mut kb_types = String::new();
    let mut aliases_full = String::new();
    let mut aliases_ext = String::new();
    let mut links = String::new();
    for entity in &all {
        let full = entity.full.join(" ");
        let _ = writeln!(names, "{full}");
        let _ = writeln!(kb_types, "{}\t{}", entity.id, entity.entity_type);
        let _ = writeln!(aliases_full, "{}\t{full}", entity.id);
        let _ = writeln!(aliases_ext, "{}\t{full}", entity.id);
        if let Some(short) = &entity.short {
            let _ = writeln!(aliases_ext, "{}\t{short}", entity.id);
        }
    }
    // a small link-annotated corpus: entity tokens linked, filler not
    for (i, entity) in all.iter().enumerate() {
        for d in 0..2 {
            for token in &entity.full {
                let _ = writeln!(links, "w{:03}_{d}\t{token}\t1", i);
            }
        }
    }
    for (i, filler) in ["the", "report", "statement", "summit", "plans"].iter().enumerate() {
        for d in 0..3 {
            let _ = writeln!(links, "f{:02}_{d}\t{filler}\t0", i);
        }
    }
    let spec = parse_gazetteer_spec(
        "people\tPER\nplaces\tLOC\norganizations\tORG\nmiscellany\tMISC\n".as_bytes(),
    )
    .expect("static spec parses");
    let kb_tables = parse_kb(kb_types.as_bytes(), aliases_full.as_bytes())
        .expect("generated KB parses");
    let kb_aliases = parse_kb(kb_types.as_bytes(), aliases_ext.as_bytes())
        .expect("generated KB parses");
    let resources = KnowledgeResources {
        name_stats: compile_name_stats(names.as_bytes(), &tagger).expect("names are non-empty"),
        gazetteers: compile_gazetteers(&kb_tables, &spec).expect("spec names are valid"),
        link_prob: compile_link_prob(links.as_bytes()).expect("generated links parse"),
        type_prob: compile_type_prob(&kb_tables).expect("generated KB compiles"),
        aliases: kb_aliases.alias_dictionary(),
    };

    let train_abbrev: Vec<SynthEntity> = inventory
        .train
        .iter()
        .filter(|e| e.short.is_some())
        .cloned()
        .collect();
    let test_abbrev: Vec<SynthEntity> = inventory
        .test
        .iter()
        .filter(|e| e.short.is_some())
        .cloned()
        .collect();
    let train = (0..train_docs)
        .map(|i| {
            make_document(
                format!("t{i:04}"),
                &mut rng,
                &inventory.train,
                &train_abbrev,
                &tagger,
            )
        })
        .collect();
    let test = (0..test_docs)
        .map(|i| {
            make_document(
                format!("q{i:04}"),
                &mut rng,
                &inventory.test,
                &test_abbrev,
                &tagger,
            )
        })
        .collect();
    TrendCorpus {
        train,
        test,
        resources,
    }
}

/// A linearly separable fixture: per-type gazetteers exactly mark the
/// entity tokens, so a model trained with gazetteer features can reach
/// mention F1 = 1.0 on held-out copies of the training sentences.
pub struct SeparableCorpus {
    pub train: Vec<Document>,
    pub held_out: Vec<Document>,
    pub resources: KnowledgeResources,
}

pub fn separable_corpus(seed: u64, documents: usize) -> SeparableCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tagger = RuleTagger::new();
    let people: Vec<Vec<String>> = PER_FIRST
        .iter()
        .zip(PER_LAST)
        .take(10)
        .map(|(f, l)| vec![f.to_string(), l.to_string()])
        .collect();
    let places: Vec<Vec<String>> = LOC_BASE
        .iter()
        .take(10)
        .map(|b| vec![b.to_string()])
        .collect();

    let people_gaz = Gazetteer::new(
        "people",
        people.iter().cloned().collect::<BTreeSet<_>>(),
    )
    .expect("valid name");
    let places_gaz = Gazetteer::new(
        "places",
        places.iter().cloned().collect::<BTreeSet<_>>(),
    )
    .expect("valid name");
    let resources = KnowledgeResources {
        gazetteers: vec![people_gaz, places_gaz],
        ..KnowledgeResources::empty()
    };

    let mut train = Vec::with_capacity(documents);
    let mut held_out = Vec::with_capacity(documents);
    for i in 0..documents {
        let mut sentences = Vec::new();
        let mut gold = Vec::new();
        for _ in 0..rng.gen_range(2..=3) {
            let si = sentences.len();
            match rng.gen_range(0..3) {
                0 => {
                    let person = &people[rng.gen_range(0..people.len())];
                    let (words, span) = fill_template(
                        ENTITY_TEMPLATES[rng.gen_range(0..ENTITY_TEMPLATES.len())],
                        Some(person),
                    );
                    let (start, end) = span.unwrap();
                    gold.push(MentionSpan::new(si, start, end, "PER").unwrap());
                    sentences.push(tagged_sentence(&words, &tagger));
                }
                1 => {
                    let place = &places[rng.gen_range(0..places.len())];
                    let (words, span) = fill_template(
                        ENTITY_TEMPLATES[rng.gen_range(0..ENTITY_TEMPLATES.len())],
                        Some(place),
                    );
                    let (start, end) = span.unwrap();
                    gold.push(MentionSpan::new(si, start, end, "LOC").unwrap());
                    sentences.push(tagged_sentence(&words, &tagger));
                }
                _ => {
                    let (words, _) = fill_template(
                        FILLER_TEMPLATES[rng.gen_range(0..FILLER_TEMPLATES.len())],
                        None,
                    );
                    sentences.push(tagged_sentence(&words, &tagger));
                }
            }
        }
        let train_doc =
            Document::new(format!("t{i:04}"), sentences.clone(), Some(gold.clone()))
                .expect("synth spans are valid");
        let held_doc = Document::new(format!("h{i:04}"), sentences, Some(gold))
            .expect("synth spans are valid");
        train.push(train_doc);
        held_out.push(held_doc);
    }
    SeparableCorpus {
        train,
        held_out,
        resources,
    }
}

/// Raw compiler inputs (the TSV streams) for a synthetic KB of at least
/// `entities` entities, exercising multi-token aliases and repeated link
/// flags.
pub struct CompilerInputs {
    pub names: String,
    pub kb_types: String,
    pub aliases: String,
    pub links: String,
    pub gazetteer_spec: String,
}

pub fn compiler_inputs(seed: u64, entities: usize) -> CompilerInputs {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let syllables = [
        "ka", "ro", "vi", "tan", "mel", "su", "dor", "lin", "fa", "gu", "ne", "bo",
    ];
    let word = |rng: &mut ChaCha8Rng| -> String {
        (0..rng.gen_range(2..=3))
            .map(|_| syllables[rng.gen_range(0..syllables.len())])
            .collect()
    };
    let types = ["PER", "LOC", "ORG", "MISC"];
    let mut names = String::new();
    let mut kb_types = String::new();
    let mut aliases = String::new();
    let mut links = String::new();
    let mut all_tokens = Vec::new();
    for i in 0..entities {
        let id = format!("e{i:04}");
        let ty = types[i % types.len()];
        let _ = writeln!(kb_types, "{id}\t{ty}");
        let n_aliases = rng.gen_range(1..=3);
        for _ in 0..n_aliases {
            let n_tokens = rng.gen_range(1..=3);
            let tokens: Vec<String> = (0..n_tokens).map(|_| word(&mut rng)).collect();
            let surface = tokens.join(" ");
            let _ = writeln!(names, "{surface}");
            let _ = writeln!(aliases, "{id}\t{surface}");
            all_tokens.extend(tokens);
        }
    }
    // link rows with deliberate within-document repeats
    for d in 0..entities.max(40) / 2 {
        let doc = format!("doc{d:04}");
        for _ in 0..rng.gen_range(2..=6) {
            let token = &all_tokens[rng.gen_range(0..all_tokens.len())];
            let flag = rng.gen_range(0..=1);
            let _ = writeln!(links, "{doc}\t{token}\t{flag}");
        }
    }
    CompilerInputs {
        names,
        kb_types,
        aliases,
        links,
        gazetteer_spec: "people\tPER\nplaces\tLOC\norganizations\tORG,MISC\n".to_string(),
    }
}
