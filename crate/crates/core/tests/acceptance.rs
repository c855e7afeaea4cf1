//! Acceptance suite: one test per criterion, each checked against an
//! independent oracle (exhaustive enumeration, finite differences, exact
//! rational recounts, or a naive quadratic matcher) at its stated
//! tolerance. Each test prints one `[PASS]` line on success.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nerkit::corpus::{
    labels_to_spans, read_conll, spans_to_labels, write_conll, ColumnSpec, Document, LabelScheme,
    MentionSpan, Sentence,
};
use nerkit::crf::{
    forward_backward, objective_and_gradient, sequence_score, viterbi, AttributeSequence,
    CrfModel, LabelInventory, TrainingInstance, TransitionRules,
};
use nerkit::eval::{benchmark, mention_f1, span_f1, Counts};
use nerkit::features::{entity_attribute_keys, extract_entity, DocumentGazetteer};
use nerkit::pipeline::{tag_corpus, train_pipeline, LinkerMode, PipelineConfig};
use nerkit::resources::{
    compile_link_prob, compile_type_prob, load_resources, parse_kb, save_resources,
    BilouPosition,
};
use nerkit::synth::{compiler_inputs, separable_corpus, trend_corpus};
use nerkit::{Category, FeatureConfig, TrainConfig};

// ---------------------------------------------------------------- helpers

fn random_model(
    rng: &mut ChaCha8Rng,
    labels: usize,
    rules: TransitionRules,
    keys: &[&str],
    quantized: bool,
) -> CrfModel {
    let names: Vec<String> = (0..labels).map(|i| format!("L{i}")).collect();
    let inventory = LabelInventory::custom(names).unwrap();
    let mut model = CrfModel::zeroed(inventory, rules);
    let draw = |rng: &mut ChaCha8Rng| -> f64 {
        if quantized {
            [-0.5, 0.0, 0.5][rng.gen_range(0..3)]
        } else {
            rng.gen_range(-2.0..2.0)
        }
    };
    for key in keys {
        for y in 0..labels {
            model.set_state_weight(key, y, draw(rng));
        }
    }
    for i in 0..labels {
        for j in 0..labels {
            model.set_transition_weight(i, j, draw(rng));
        }
    }
    model
}

fn random_attrs(
    rng: &mut ChaCha8Rng,
    tokens: usize,
    keys: &[&str],
    quantized: bool,
) -> AttributeSequence {
    let maps = (0..tokens)
        .map(|_| {
            let mut map = BTreeMap::new();
            for key in keys {
                if rng.gen_bool(0.7) {
                    let v = if quantized { 1.0 } else { rng.gen_range(0.1..1.5) };
                    map.insert(key.to_string(), v);
                }
            }
            map
        })
        .collect();
    AttributeSequence::new(maps).unwrap()
}

/// All `labels^tokens` paths as label-index vectors.
fn all_paths(labels: usize, tokens: usize) -> Vec<Vec<usize>> {
    let mut paths = vec![vec![]];
    for _ in 0..tokens {
        paths = paths
            .into_iter()
            .flat_map(|p| {
                (0..labels).map(move |y| {
                    let mut q = p.clone();
                    q.push(y);
                    q
                })
            })
            .collect();
    }
    paths
}

/// Exhaustive-enumeration oracle over all unmasked paths, built solely on
/// the public `sequence_score`.
struct BruteForce {
    log_z: f64,
    unary: Vec<Vec<f64>>,
    pairwise: Vec<Vec<Vec<f64>>>,
    best_path: Vec<usize>,
    path_prob_sum: f64,
}

fn brute_force(model: &CrfModel, attrs: &AttributeSequence) -> Option<BruteForce> {
    let l = model.label_count();
    let n = attrs.len();
    let mut scored: Vec<(Vec<usize>, f64)> = Vec::new();
    for path in all_paths(l, n) {
        let labels: Vec<String> = path
            .iter()
            .map(|&y| model.inventory().name(y).to_string())
            .collect();
        let score = sequence_score(model, attrs, &labels).unwrap();
        if score != f64::NEG_INFINITY {
            scored.push((path, score));
        }
    }
    if scored.is_empty() {
        return None;
    }
    // independent max-shifted log-sum-exp
    let max = scored.iter().map(|(_, s)| *s).fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = scored.iter().map(|(_, s)| (s - max).exp()).sum();
    let log_z = max + sum.ln();
    let mut unary = vec![vec![0.0; l]; n];
    let mut pairwise = vec![vec![vec![0.0; l]; l]; n.saturating_sub(1)];
    let mut path_prob_sum = 0.0;
    for (path, score) in &scored {
        let p = (score - log_z).exp();
        path_prob_sum += p;
        for (t, &y) in path.iter().enumerate() {
            unary[t][y] += p;
            if t > 0 {
                pairwise[t - 1][path[t - 1]][y] += p;
            }
        }
    }
    let best_score = scored.iter().map(|(_, s)| *s).fold(f64::NEG_INFINITY, f64::max);
    let best_path = scored
        .iter()
        .filter(|(_, s)| *s == best_score)
        .map(|(p, _)| p.clone())
        .min()
        .unwrap();
    Some(BruteForce {
        log_z,
        unary,
        pairwise,
        best_path,
        path_prob_sum,
    })
}

fn random_rules(rng: &mut ChaCha8Rng, labels: usize) -> TransitionRules {
    let start = (0..labels).map(|_| rng.gen_bool(0.8)).collect();
    let end = (0..labels).map(|_| rng.gen_bool(0.8)).collect();
    let pair = (0..labels * labels).map(|_| rng.gen_bool(0.75)).collect();
    TransitionRules::new(start, end, pair).unwrap()
}

// --------------------------------------------------------------- criteria

/// Criterion 1: smooth-part gradient vs central finite differences on 50
/// random instances (≤5 tokens, 3 labels), relative error ≤ 1e-4, < 10 s.
#[test]
fn criterion_01_gradient_matches_finite_differences() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let keys = ["k0", "k1", "k2", "k3", "k4"];
    let h = 1e-4;
    for round in 0..50 {
        let model = random_model(&mut rng, 3, TransitionRules::permissive(3), &keys, false);
        let tokens = rng.gen_range(1..=5);
        let attrs = random_attrs(&mut rng, tokens, &keys, false);
        let labels: Vec<String> = (0..tokens)
            .map(|_| format!("L{}", rng.gen_range(0..3)))
            .collect();
        let instance = TrainingInstance::new(format!("r{round}"), attrs, labels);
        let dataset = [instance];
        let (_, grad) = objective_and_gradient(&model, &dataset, 0.0).unwrap();
        let check = |plus: CrfModel, minus: CrfModel, analytic: f64, slot: String| {
            let (fp, _) = objective_and_gradient(&plus, &dataset, 0.0).unwrap();
            let (fm, _) = objective_and_gradient(&minus, &dataset, 0.0).unwrap();
            let numeric = (fp - fm) / (2.0 * h);
            let scale = analytic.abs().max(numeric.abs()).max(1.0);
            assert!(
                (analytic - numeric).abs() / scale <= 1e-4,
                "round {round} {slot}: analytic {analytic} vs numeric {numeric}"
            );
        };
        for key in &keys {
            for y in 0..3 {
                let w = model.state_weight(key, y);
                let mut plus = model.clone();
                plus.set_state_weight(key, y, w + h);
                let mut minus = model.clone();
                minus.set_state_weight(key, y, w - h);
                check(plus, minus, grad.state(key, y), format!("state({key},{y})"));
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                let w = model.transition_weight(i, j);
                let mut plus = model.clone();
                plus.set_transition_weight(i, j, w + h);
                let mut minus = model.clone();
                minus.set_transition_weight(i, j, w - h);
                check(plus, minus, grad.transition(i, j), format!("trans({i},{j})"));
            }
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 10, "took {elapsed:?}, budget 10 s");
    println!("[PASS] criterion 1: gradient matches finite differences (rel err <= 1e-4, {elapsed:?})");
}

/// Criterion 2: viterbi equals exhaustive argmax and forward–backward
/// equals exhaustive sums (≤ 1e-9) on 100 random instances (≤6 tokens,
/// ≤4 labels), < 30 s.
#[test]
fn criterion_02_decoding_matches_exhaustive_enumeration() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let keys = ["f0", "f1", "f2"];
    let mut done = 0;
    while done < 100 {
        let labels = rng.gen_range(2..=4);
        let tokens = rng.gen_range(1..=6);
        let masked = done % 2 == 1;
        let quantized = done % 5 == 0; // force score ties to exercise the tie-break
        let rules = if masked {
            random_rules(&mut rng, labels)
        } else {
            TransitionRules::permissive(labels)
        };
        let model = random_model(&mut rng, labels, rules, &keys, quantized);
        let attrs = random_attrs(&mut rng, tokens, &keys, quantized);
        let Some(oracle) = brute_force(&model, &attrs) else {
            continue; // mask killed every path; draw again
        };
        let fb = forward_backward(&model, &attrs).unwrap();
        assert!(
            (fb.log_partition() - oracle.log_z).abs() <= 1e-9,
            "log partition {} vs oracle {}",
            fb.log_partition(),
            oracle.log_z
        );
        assert!((oracle.path_prob_sum - 1.0).abs() <= 1e-9);
        for t in 0..tokens {
            let mut row_sum = 0.0;
            for y in 0..labels {
                row_sum += fb.unary(t, y);
                assert!(
                    (fb.unary(t, y) - oracle.unary[t][y]).abs() <= 1e-9,
                    "unary({t},{y})"
                );
            }
            assert!((row_sum - 1.0).abs() <= 1e-9, "marginals at {t} sum to {row_sum}");
        }
        for t in 0..tokens.saturating_sub(1) {
            for i in 0..labels {
                let mut marginalized = 0.0;
                for j in 0..labels {
                    marginalized += fb.pairwise(t, i, j);
                    assert!(
                        (fb.pairwise(t, i, j) - oracle.pairwise[t][i][j]).abs() <= 1e-9,
                        "pairwise({t},{i},{j})"
                    );
                }
                assert!(
                    (marginalized - fb.unary(t, i)).abs() <= 1e-9,
                    "pairwise must marginalize to unary at ({t},{i})"
                );
            }
        }
        let decoded = viterbi(&model, &attrs).unwrap();
        let expected: Vec<String> = oracle
            .best_path
            .iter()
            .map(|&y| model.inventory().name(y).to_string())
            .collect();
        assert_eq!(decoded, expected, "instance {done}");
        done += 1;
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 30, "took {elapsed:?}, budget 30 s");
    println!("[PASS] criterion 2: decoding and marginals match exhaustive enumeration ({elapsed:?})");
}

/// Criterion 3: compiled link- and type-probability tables equal an
/// independent naive recount under exact rational arithmetic on a
/// 220-entity fixture KB, including the positioned variant.
#[test]
fn criterion_03_probability_tables_match_rational_recount() {
    let inputs = compiler_inputs(303, 220);

    // --- link probability: independent recount from the raw rows
    let mut present: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut linked: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for line in inputs.links.lines() {
        let mut fields = line.split('\t');
        let doc = fields.next().unwrap().to_string();
        let token = fields.next().unwrap().to_lowercase();
        let flag = fields.next().unwrap() == "1";
        present.entry(token.clone()).or_default().insert(doc.clone());
        if flag {
            linked.entry(token).or_default().insert(doc);
        }
    }
    let table = compile_link_prob(inputs.links.as_bytes()).unwrap();
    assert!(!present.is_empty());
    for (token, docs) in &present {
        let num = linked.get(token).map_or(0, BTreeSet::len) as i64;
        let den = docs.len() as i64;
        let exact = Ratio::new(num, den);
        let expected = *exact.numer() as f64 / *exact.denom() as f64;
        assert_eq!(table.prob(token), expected, "link prob of {token:?}");
    }

    // --- type probability: recount Eq-style triple sums with rationals
    let mut entity_type: BTreeMap<String, String> = BTreeMap::new();
    for line in inputs.kb_types.lines() {
        let (id, ty) = line.split_once('\t').unwrap();
        entity_type.insert(id.to_string(), ty.to_string());
    }
    let mut type_counts: BTreeMap<String, BTreeMap<String, i64>> = BTreeMap::new();
    let mut pos_counts: BTreeMap<String, BTreeMap<(BilouPosition, String), i64>> = BTreeMap::new();
    let mut totals: BTreeMap<String, i64> = BTreeMap::new();
    let mut seen_pairs: BTreeSet<(String, String)> = BTreeSet::new();
    for line in inputs.aliases.lines() {
        let (id, surface) = line.split_once('\t').unwrap();
        if !seen_pairs.insert((id.to_string(), surface.to_string())) {
            continue; // each (entity, alias) pair counts once
        }
        let ty = &entity_type[id];
        let tokens: Vec<String> = surface.split_whitespace().map(str::to_lowercase).collect();
        let len = tokens.len();
        for (i, token) in tokens.into_iter().enumerate() {
            let pos = if len == 1 {
                BilouPosition::U
            } else if i == 0 {
                BilouPosition::B
            } else if i + 1 == len {
                BilouPosition::L
            } else {
                BilouPosition::I
            };
            *type_counts.entry(token.clone()).or_default().entry(ty.clone()).or_default() += 1;
            *pos_counts
                .entry(token.clone())
                .or_default()
                .entry((pos, ty.clone()))
                .or_default() += 1;
            *totals.entry(token).or_default() += 1;
        }
    }
    let kb = parse_kb(inputs.kb_types.as_bytes(), inputs.aliases.as_bytes()).unwrap();
    assert_eq!(kb.entity_count(), 220);
    let compiled = compile_type_prob(&kb).unwrap();
    for (token, row) in &type_counts {
        let total = totals[token];
        let mut rational_sum = Ratio::new(0, 1);
        for (ty, count) in row {
            let exact = Ratio::new(*count, total);
            rational_sum += exact;
            let expected = *exact.numer() as f64 / *exact.denom() as f64;
            assert_eq!(compiled.type_prob(token, ty), expected, "P({ty}|{token})");
        }
        assert_eq!(rational_sum, Ratio::new(1, 1), "row of {token:?} must sum to 1");
        assert_eq!(compiled.type_probs(token).unwrap().len(), row.len());
    }
    for (token, row) in &pos_counts {
        let total = totals[token];
        let compiled_row = compiled.positioned_probs(token).unwrap();
        assert_eq!(compiled_row.len(), row.len());
        let mut rational_sum = Ratio::new(0, 1);
        for (key, count) in row {
            let exact = Ratio::new(*count, total);
            rational_sum += exact;
            let expected = *exact.numer() as f64 / *exact.denom() as f64;
            assert_eq!(compiled_row[key], expected, "positioned {key:?} of {token:?}");
        }
        assert_eq!(rational_sum, Ratio::new(1, 1));
    }
    println!("[PASS] criterion 3: probability tables equal the exact rational recount (220 entities)");
}

/// Criterion 4: span↔label round trip on exhaustive span sets for
/// sentences of up to 8 tokens with 2 types.
#[test]
fn criterion_04_bilou_round_trip_exhaustive() {
    fn enumerate(pos: usize, len: usize, types: &[&str]) -> Vec<Vec<MentionSpan>> {
        if pos == len {
            return vec![vec![]];
        }
        let mut out = enumerate(pos + 1, len, types);
        for end in pos + 1..=len {
            for ty in types {
                for rest in enumerate(end, len, types) {
                    let mut set = vec![MentionSpan::new(0, pos, end, *ty).unwrap()];
                    set.extend(rest);
                    out.push(set);
                }
            }
        }
        out
    }
    let types = ["PER", "LOC"];
    let bilou = LabelScheme::bilou(types.iter().map(|t| t.to_string()).collect()).unwrap();
    let bio = LabelScheme::bio(types.iter().map(|t| t.to_string()).collect()).unwrap();
    let mut total = 0u64;
    for len in 1..=8 {
        for spans in enumerate(0, len, &types) {
            for scheme in [&bilou, &bio] {
                let labels = spans_to_labels(len, &spans, scheme).unwrap();
                let mut back = labels_to_spans(&labels, scheme, 0).unwrap();
                back.sort();
                let mut expected = spans.clone();
                expected.sort();
                assert_eq!(back, expected, "len {len} spans {spans:?}");
            }
            total += 1;
        }
    }
    assert_eq!(total, 3 + 11 + 41 + 153 + 571 + 2131 + 7953 + 29681);
    println!("[PASS] criterion 4: BILOU/BIO round trip on all {total} span sets up to 8 tokens");
}

/// Criterion 5: training on the separable gazetteer fixture reaches
/// mention F1 = 1.0 on held-out copies within 300 iterations (defaults).
#[test]
fn criterion_05_separable_corpus_converges_to_perfect_f1() {
    let fixture = separable_corpus(505, 12);
    let config = PipelineConfig {
        features: FeatureConfig::new(Category::Kb),
        train: TrainConfig::default(), // l1 = 1.0, 300 iterations, tol 1e-5
        linker_mode: LinkerMode::Dictionary,
    };
    let bundle = train_pipeline(&fixture.train, &config, Some(&fixture.resources)).unwrap();
    let predictions = tag_corpus(&bundle, &fixture.held_out, Some(&fixture.resources)).unwrap();
    let report = mention_f1(&fixture.held_out, &predictions).unwrap();
    assert_eq!(
        report.mention().f1,
        1.0,
        "expected perfect mention F1, report:\n{}",
        report.render_text()
    );
    println!("[PASS] criterion 5: separable fixture reaches mention F1 = 1.0 on held-out copies");
}

/// Criterion 6: on the trend corpus (test entities unseen in training
/// text), KB beats agnostic by ≥ 10 mention-F1 points and the gold-linked
/// entity category is at least as good as KB.
#[test]
fn criterion_06_incremental_knowledge_trend() {
    let corpus = trend_corpus(606, 40, 25);
    let mut scores = BTreeMap::new();
    for (category, mode) in [
        (Category::Agnostic, LinkerMode::Dictionary),
        (Category::Kb, LinkerMode::Dictionary),
        (Category::Entity, LinkerMode::Gold),
    ] {
        let config = PipelineConfig {
            features: FeatureConfig::new(category),
            train: TrainConfig::default(),
            linker_mode: mode,
        };
        let bundle = train_pipeline(&corpus.train, &config, Some(&corpus.resources)).unwrap();
        let predictions = tag_corpus(&bundle, &corpus.test, Some(&corpus.resources)).unwrap();
        let report = mention_f1(&corpus.test, &predictions).unwrap();
        scores.insert(category, report.mention().f1);
    }
    let (agnostic, kb, entity) = (
        scores[&Category::Agnostic],
        scores[&Category::Kb],
        scores[&Category::Entity],
    );
    assert!(
        kb - agnostic >= 0.10,
        "KB must beat agnostic by >= 10 points: agnostic {agnostic:.4}, kb {kb:.4}"
    );
    assert!(
        entity >= kb,
        "gold-linked entity category must not fall below KB: kb {kb:.4}, entity {entity:.4}"
    );
    println!(
        "[PASS] criterion 6: mention F1 agnostic {agnostic:.4} -> kb {kb:.4} -> entity {entity:.4}"
    );
}

/// Criterion 7: exactly 17 entity-attribute keys for a 4-type scheme.
#[test]
fn criterion_07_entity_feature_arity() {
    let types: Vec<String> = ["LOC", "MISC", "ORG", "PER"].map(String::from).into();
    let keys = entity_attribute_keys(&types);
    assert_eq!(keys.len(), 17);
    assert_eq!(keys.iter().collect::<BTreeSet<_>>().len(), 17);
    // emitted attributes stay inside the inventory regardless of input
    let sentence = Sentence::from_tagged([("eu", "NNP"), ("x", "NN")]).unwrap();
    let attrs = extract_entity(&sentence, &DocumentGazetteer::empty(), &types).unwrap();
    for map in attrs.maps() {
        for key in map.keys() {
            assert!(keys.contains(key));
        }
    }
    println!("[PASS] criterion 7: entity feature arity is 17 for four types");
}

/// Criterion 8: entity-category wall time ≥ 1.5× KB on a 100-document
/// synthetic corpus (two decodes plus linking).
#[test]
fn criterion_08_two_pass_timing() {
    let corpus = trend_corpus(808, 20, 100);
    let quick = TrainConfig {
        max_iterations: 60,
        convergence_tolerance: 1e-3,
        ..TrainConfig::default()
    };
    let kb = train_pipeline(
        &corpus.train,
        &PipelineConfig {
            features: FeatureConfig::new(Category::Kb),
            train: quick.clone(),
            linker_mode: LinkerMode::Dictionary,
        },
        Some(&corpus.resources),
    )
    .unwrap();
    let entity = train_pipeline(
        &corpus.train,
        &PipelineConfig {
            features: FeatureConfig::new(Category::Entity),
            train: quick,
            linker_mode: LinkerMode::Dictionary,
        },
        Some(&corpus.resources),
    )
    .unwrap();
    let report = benchmark(&[&kb, &entity], &corpus.test, Some(&corpus.resources), 5).unwrap();
    let kb_row = report.row(Category::Kb).unwrap();
    let entity_row = report.row(Category::Entity).unwrap();
    assert_eq!(kb_row.documents, 100);
    assert!(
        entity_row.total_ms >= 1.5 * kb_row.total_ms,
        "entity {:.3} ms vs kb {:.3} ms",
        entity_row.total_ms,
        kb_row.total_ms
    );
    println!(
        "[PASS] criterion 8: entity {:.2} ms/doc >= 1.5x kb {:.2} ms/doc over {} documents",
        entity_row.mean_ms_per_doc, kb_row.mean_ms_per_doc, kb_row.documents
    );
}

/// Criterion 9: evaluator agrees with a naive quadratic matcher on 100
/// random gold/prediction sets, and span F1 never falls below mention F1.
#[test]
fn criterion_09_evaluator_matches_naive_matcher() {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let types = ["PER", "LOC", "ORG"];
    for round in 0..100 {
        // random gold documents with non-overlapping spans
        let mut docs = Vec::new();
        let mut predictions: BTreeMap<String, Vec<MentionSpan>> = BTreeMap::new();
        for d in 0..rng.gen_range(1..=3) {
            let sentences: Vec<Sentence> = (0..rng.gen_range(1..=3))
                .map(|_| {
                    let len = rng.gen_range(4..=10);
                    Sentence::from_words((0..len).map(|i| format!("w{i}"))).unwrap()
                })
                .collect();
            let mut gold: Vec<MentionSpan> = Vec::new();
            let mut pred: Vec<MentionSpan> = Vec::new();
            for (si, sentence) in sentences.iter().enumerate() {
                for _ in 0..rng.gen_range(0..=3) {
                    let start = rng.gen_range(0..sentence.len());
                    let end = (start + rng.gen_range(1..=3)).min(sentence.len());
                    let span =
                        MentionSpan::new(si, start, end, types[rng.gen_range(0..types.len())])
                            .unwrap();
                    if gold
                        .iter()
                        .all(|s| s.sentence_index != si || s.start >= end || start >= s.end)
                    {
                        gold.push(span);
                    }
                }
                // predictions perturb gold: keep / retype / shift / invent
                for span in gold.iter().filter(|s| s.sentence_index == si) {
                    match rng.gen_range(0..4) {
                        0 => pred.push(span.clone()),
                        1 => pred.push(
                            MentionSpan::new(
                                si,
                                span.start,
                                span.end,
                                types[rng.gen_range(0..types.len())],
                            )
                            .unwrap(),
                        ),
                        2 => {
                            if span.end < sentence.len() {
                                pred.push(
                                    MentionSpan::new(si, span.start + 1, span.end + 1, &span.entity_type)
                                        .unwrap(),
                                );
                            }
                        }
                        _ => {}
                    }
                }
                if rng.gen_bool(0.4) {
                    let start = rng.gen_range(0..sentence.len());
                    pred.push(
                        MentionSpan::new(si, start, start + 1, types[rng.gen_range(0..types.len())])
                            .unwrap(),
                    );
                }
            }
            let id = format!("d{round:03}_{d}");
            predictions.insert(id.clone(), pred);
            docs.push(Document::new(id, sentences, Some(gold)).unwrap());
        }

        // naive quadratic matcher over deduplicated span lists
        let mut naive_mention = Counts::default();
        let mut naive_span = Counts::default();
        for doc in &docs {
            let dedupe = |spans: &[MentionSpan]| -> Vec<MentionSpan> {
                let mut out: Vec<MentionSpan> = Vec::new();
                for s in spans {
                    if !out.contains(s) {
                        out.push(s.clone());
                    }
                }
                out
            };
            let gold = dedupe(doc.gold_mentions().unwrap());
            let pred = dedupe(&predictions[doc.id()]);
            naive_mention.gold += gold.len();
            naive_mention.predicted += pred.len();
            for p in &pred {
                if gold.iter().any(|g| g == p) {
                    naive_mention.correct += 1;
                }
            }
            let blind = |s: &MentionSpan| (s.sentence_index, s.start, s.end);
            let gold_b: Vec<_> = {
                let mut v: Vec<_> = gold.iter().map(blind).collect();
                v.dedup_by(|a, b| a == b);
                let mut out = Vec::new();
                for x in v {
                    if !out.contains(&x) {
                        out.push(x);
                    }
                }
                out
            };
            let pred_b: Vec<_> = {
                let mut out = Vec::new();
                for x in pred.iter().map(blind) {
                    if !out.contains(&x) {
                        out.push(x);
                    }
                }
                out
            };
            naive_span.gold += gold_b.len();
            naive_span.predicted += pred_b.len();
            for p in &pred_b {
                if gold_b.iter().any(|g| g == p) {
                    naive_span.correct += 1;
                }
            }
        }

        let report = mention_f1(&docs, &predictions).unwrap();
        assert_eq!(report.mention_counts(), naive_mention, "round {round}");
        assert_eq!(report.span_counts(), naive_span, "round {round}");
        let span = span_f1(&docs, &predictions).unwrap();
        assert!(
            span.f1 >= report.mention().f1 - 1e-12,
            "round {round}: span F1 {} below mention F1 {}",
            span.f1,
            report.mention().f1
        );
    }
    println!("[PASS] criterion 9: evaluator agrees with the quadratic matcher; span F1 >= mention F1");
}

/// Criterion 10: the full pipeline (compile → train with deterministic
/// reduction → tag → eval) is byte-reproducible across two runs.
#[test]
fn criterion_10_full_pipeline_is_byte_reproducible() {
    fn run() -> Vec<(String, Vec<u8>)> {
        let corpus = trend_corpus(1010, 15, 8);
        let mut artifacts = Vec::new();

        // compile: write the resource tables
        let res_dir = tempfile::tempdir().unwrap();
        save_resources(&corpus.resources, res_dir.path()).unwrap();
        let mut files: Vec<_> = std::fs::read_dir(res_dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        files.sort();
        for file in files {
            artifacts.push((
                format!("res/{file}"),
                std::fs::read(res_dir.path().join(&file)).unwrap(),
            ));
        }
        let resources = load_resources(res_dir.path()).unwrap();

        // train
        let config = PipelineConfig {
            features: FeatureConfig::new(Category::Entity),
            train: TrainConfig::default(),
            linker_mode: LinkerMode::Dictionary,
        };
        let bundle = train_pipeline(&corpus.train, &config, Some(&resources)).unwrap();
        let bundle_dir = tempfile::tempdir().unwrap();
        bundle.save(bundle_dir.path()).unwrap();
        for file in ["manifest.txt", "first_pass.model", "second_pass.model"] {
            artifacts.push((
                format!("bundle/{file}"),
                std::fs::read(bundle_dir.path().join(file)).unwrap(),
            ));
        }

        // tag: serialize predictions as normalized CoNLL
        let predictions = tag_corpus(&bundle, &corpus.test, Some(&resources)).unwrap();
        let tagged: Vec<Document> = corpus
            .test
            .iter()
            .map(|doc| {
                Document::new(
                    doc.id(),
                    doc.sentences().to_vec(),
                    Some(predictions[doc.id()].clone()),
                )
                .unwrap()
            })
            .collect();
        let mut conll = Vec::new();
        write_conll(&mut conll, &tagged, bundle.scheme()).unwrap();
        // the output must parse back to the same predictions
        let reread = read_conll(&conll[..], ColumnSpec::normalized()).unwrap();
        assert_eq!(reread.len(), tagged.len());
        artifacts.push(("tagged.conll".to_string(), conll));

        // eval
        let report = mention_f1(&corpus.test, &predictions).unwrap();
        artifacts.push(("report.tsv".to_string(), report.render_tsv().into_bytes()));
        artifacts
    }

    let first = run();
    let second = run();
    assert_eq!(first.len(), second.len());
    for ((name_a, bytes_a), (name_b, bytes_b)) in first.iter().zip(&second) {
        assert_eq!(name_a, name_b);
        assert_eq!(bytes_a, bytes_b, "artifact {name_a} differs between runs");
    }
    println!(
        "[PASS] criterion 10: {} pipeline artifacts byte-identical across two runs",
        first.len()
    );
}
