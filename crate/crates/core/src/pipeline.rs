//! End-to-end orchestration: feature stacking by category, training
//! bundles, and the two-pass tag→link→retag flow with a pluggable linker.
//!
//! Categories up to KB train and decode a single model. The entity
//! category first trains a KB model, runs it (or the gold annotations) plus
//! a linker over each document to harvest a document gazetteer, and trains
//! a second model on KB features plus the entity features; tagging then
//! performs exactly two decodes per document.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use log::warn;
use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{
    labels_to_spans, spans_to_labels, CorpusError, Document, LabelScheme, MentionSpan,
};
use crate::crf::{
    load_model, save_model, train, viterbi, CrfError, CrfModel, TrainConfig, TrainingInstance,
};
use crate::features::{
    build_document_gazetteer, extract, Category, DocumentGazetteer, FeatureConfig, FeatureError,
};
use crate::resources::{AliasDictionary, KnowledgeResources, ResourceError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("corpus has no gold mentions to train on")]
    NoGoldMentions,
    #[error("duplicate document id {0:?}")]
    DuplicateDocumentId(String),
    #[error("bundle: {0}")]
    BundleFormat(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Crf(#[from] CrfError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Resource(#[from] ResourceError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// How the entity category resolves mentions to KB entities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkerMode {
    /// Link the document's gold mention spans (knowledge-impact upper
    /// bound; expects gold annotations at tag time too).
    Gold,
    /// Link the first-pass decoded spans through the alias dictionary.
    Dictionary,
}

impl LinkerMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            LinkerMode::Gold => "gold",
            LinkerMode::Dictionary => "dictionary",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "gold" => Some(LinkerMode::Gold),
            "dictionary" => Some(LinkerMode::Dictionary),
            _ => None,
        }
    }
}

impl fmt::Display for LinkerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything needed to train one system variant.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub features: FeatureConfig,
    pub train: TrainConfig,
    pub linker_mode: LinkerMode,
}

impl PipelineConfig {
    pub fn new(category: Category) -> Self {
        Self {
            features: FeatureConfig::new(category),
            train: TrainConfig::default(),
            linker_mode: LinkerMode::Dictionary,
        }
    }
}

/// A mention resolved to a KB entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityAnnotation {
    pub span: MentionSpan,
    pub entity_id: String,
}

#[derive(Debug, Clone)]
pub struct LinkerError(pub String);

impl fmt::Display for LinkerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Resolves mention spans of one document to entity ids.
///
/// A failing linker does not abort the pipeline: the document falls back to
/// an empty gazetteer with a logged warning. Implementations that are not
/// safe for concurrent per-document calls must say so via
/// [`Linker::is_concurrent`].
pub trait Linker: Sync {
    fn link(
        &self,
        document: &Document,
        spans: &[MentionSpan],
    ) -> Result<Vec<EntityAnnotation>, LinkerError>;

    /// Whether per-document calls may run concurrently.
    fn is_concurrent(&self) -> bool {
        true
    }
}

/// Exact, case-insensitive surface-form lookup of each span's text.
///
/// Ambiguity is resolved toward the entity with the most aliases, ties by
/// lexicographically smallest entity id; spans with no dictionary entry are
/// dropped.
pub fn dictionary_link(
    document: &Document,
    spans: &[MentionSpan],
    aliases: &AliasDictionary,
) -> Vec<EntityAnnotation> {
    let mut annotations = Vec::new();
    for span in spans {
        let Some(sentence) = document.sentences().get(span.sentence_index) else {
            continue;
        };
        if span.end > sentence.len() {
            continue;
        }
        let text = sentence.span_text(span.start, span.end);
        let mut best: Option<(&str, usize)> = None;
        for id in aliases.entities_with_surface(&text) {
            let count = aliases.entity(id).map_or(0, |e| e.surfaces.len());
            // candidates arrive in ascending id order, so strict `>` keeps
            // the smallest id among equal alias counts
            if best.is_none() || count > best.unwrap().1 {
                best = Some((id, count));
            }
        }
        if let Some((id, _)) = best {
            annotations.push(EntityAnnotation {
                span: span.clone(),
                entity_id: id.to_string(),
            });
        }
    }
    annotations
}

/// [`LinkerMode::Dictionary`]: links whatever spans it is given.
pub struct DictionaryLinker<'a> {
    pub aliases: &'a AliasDictionary,
}

impl Linker for DictionaryLinker<'_> {
    fn link(
        &self,
        document: &Document,
        spans: &[MentionSpan],
    ) -> Result<Vec<EntityAnnotation>, LinkerError> {
        Ok(dictionary_link(document, spans, self.aliases))
    }
}

/// [`LinkerMode::Gold`]: ignores the passed spans and resolves the
/// document's gold mentions instead.
pub struct GoldLinker<'a> {
    pub aliases: &'a AliasDictionary,
}

impl Linker for GoldLinker<'_> {
    fn link(
        &self,
        document: &Document,
        _spans: &[MentionSpan],
    ) -> Result<Vec<EntityAnnotation>, LinkerError> {
        let gold = document.gold_mentions().unwrap_or(&[]);
        Ok(dictionary_link(document, gold, self.aliases))
    }
}

/// A trained system: feature settings, the first-pass model, and (for the
/// entity category) the second-pass model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    config: FeatureConfig,
    linker_mode: LinkerMode,
    first_pass: CrfModel,
    second_pass: Option<CrfModel>,
}

impl ModelBundle {
    fn assemble(
        config: FeatureConfig,
        linker_mode: LinkerMode,
        first_pass: CrfModel,
        second_pass: Option<CrfModel>,
    ) -> Result<Self, PipelineError> {
        if first_pass.inventory().scheme().is_none() {
            return Err(PipelineError::BundleFormat(
                "bundle models must carry a label scheme".into(),
            ));
        }
        if (config.category == Category::Entity) != second_pass.is_some() {
            return Err(PipelineError::BundleFormat(
                "second-pass model must be present exactly for the entity category".into(),
            ));
        }
        Ok(Self {
            config,
            linker_mode,
            first_pass,
            second_pass,
        })
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn category(&self) -> Category {
        self.config.category
    }

    pub fn linker_mode(&self) -> LinkerMode {
        self.linker_mode
    }

    pub fn first_pass(&self) -> &CrfModel {
        &self.first_pass
    }

    pub fn second_pass(&self) -> Option<&CrfModel> {
        self.second_pass.as_ref()
    }

    pub fn scheme(&self) -> &LabelScheme {
        self.first_pass
            .inventory()
            .scheme()
            .expect("validated at construction")
    }

    /// Whether tagging needs compiled resources.
    pub fn needs_resources(&self) -> bool {
        self.config.category >= Category::Name
    }

    /// Serializes as a directory: `manifest.txt` plus the model files.
    pub fn save(&self, dir: &Path) -> Result<(), PipelineError> {
        fs::create_dir_all(dir)?;
        let mut manifest = String::from("nerkit-bundle 1\n");
        manifest.push_str(&format!("category = {}\n", self.config.category));
        manifest.push_str(&format!("linker_mode = {}\n", self.linker_mode));
        manifest.push_str(&format!("window_word = {}\n", self.config.window_word));
        manifest.push_str(&format!(
            "window_presence = {}\n",
            self.config.window_presence
        ));
        manifest.push_str(&format!("use_pos = {}\n", self.config.use_pos));
        fs::write(dir.join("manifest.txt"), manifest)?;
        let mut w = BufWriter::new(fs::File::create(dir.join("first_pass.model"))?);
        save_model(&mut w, &self.first_pass)?;
        if let Some(second) = &self.second_pass {
            let mut w = BufWriter::new(fs::File::create(dir.join("second_pass.model"))?);
            save_model(&mut w, second)?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, PipelineError> {
        let manifest = fs::read_to_string(dir.join("manifest.txt"))
            .map_err(|_| PipelineError::BundleFormat("manifest.txt absent".into()))?;
        let mut lines = manifest.lines();
        if lines.next() != Some("nerkit-bundle 1") {
            return Err(PipelineError::BundleFormat(
                "unsupported bundle version".into(),
            ));
        }
        let mut config = FeatureConfig::default();
        let mut linker_mode = LinkerMode::Dictionary;
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                PipelineError::BundleFormat(format!("bad manifest line {line:?}"))
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "category" => {
                    config.category = Category::parse(value).ok_or_else(|| {
                        PipelineError::BundleFormat(format!("unknown category {value:?}"))
                    })?
                }
                "linker_mode" => {
                    linker_mode = LinkerMode::parse(value).ok_or_else(|| {
                        PipelineError::BundleFormat(format!("unknown linker mode {value:?}"))
                    })?
                }
                "window_word" => {
                    config.window_word = value.parse().map_err(|_| {
                        PipelineError::BundleFormat(format!("bad window_word {value:?}"))
                    })?
                }
                "window_presence" => {
                    config.window_presence = value.parse().map_err(|_| {
                        PipelineError::BundleFormat(format!("bad window_presence {value:?}"))
                    })?
                }
                "use_pos" => {
                    config.use_pos = value.parse().map_err(|_| {
                        PipelineError::BundleFormat(format!("bad use_pos {value:?}"))
                    })?
                }
                other => {
                    return Err(PipelineError::BundleFormat(format!(
                        "unknown manifest key {other:?}"
                    )))
                }
            }
        }
        let first_pass = load_model(BufReader::new(fs::File::open(
            dir.join("first_pass.model"),
        )?))?;
        let second_path = dir.join("second_pass.model");
        let second_pass = if second_path.exists() {
            Some(load_model(BufReader::new(fs::File::open(second_path)?))?)
        } else {
            None
        };
        Self::assemble(config, linker_mode, first_pass, second_pass)
    }
}

/// Derives the BILOU scheme from the distinct gold mention types of a
/// corpus, sorted.
pub fn scheme_from_corpus(corpus: &[Document]) -> Result<LabelScheme, PipelineError> {
    let mut types: Vec<String> = corpus
        .iter()
        .flat_map(|d| d.gold_mentions().into_iter().flatten())
        .map(|s| s.entity_type.clone())
        .collect();
    types.sort();
    types.dedup();
    if types.is_empty() {
        return Err(PipelineError::NoGoldMentions);
    }
    Ok(LabelScheme::bilou(types)?)
}

fn first_pass_category(category: Category) -> Category {
    category.min(Category::Kb)
}

fn build_instances(
    corpus: &[Document],
    scheme: &LabelScheme,
    config: &FeatureConfig,
    resources: Option<&KnowledgeResources>,
    gazetteers: Option<&BTreeMap<String, DocumentGazetteer>>,
) -> Result<Vec<TrainingInstance>, PipelineError> {
    let mut instances = Vec::new();
    for doc in corpus {
        let doc_gaz = gazetteers.and_then(|m| m.get(doc.id()));
        for (si, sentence) in doc.sentences().iter().enumerate() {
            let attrs = extract(sentence, config, resources, doc_gaz, scheme.types())?;
            let labels = spans_to_labels(sentence.len(), &doc.gold_in_sentence(si), scheme)?;
            instances.push(TrainingInstance::new(
                format!("{}/s{si}", doc.id()),
                attrs,
                labels,
            ));
        }
    }
    Ok(instances)
}

fn decode_document(
    model: &CrfModel,
    scheme: &LabelScheme,
    document: &Document,
    config: &FeatureConfig,
    resources: Option<&KnowledgeResources>,
    doc_gaz: Option<&DocumentGazetteer>,
) -> Result<Vec<MentionSpan>, PipelineError> {
    let mut spans = Vec::new();
    for (si, sentence) in document.sentences().iter().enumerate() {
        let attrs = extract(sentence, config, resources, doc_gaz, scheme.types())?;
        let labels = viterbi(model, &attrs)?;
        spans.extend(labels_to_spans(&labels, scheme, si)?);
    }
    Ok(spans)
}

/// Harvests one document's gazetteer: link the chosen spans, then expand
/// the identified entities' aliases. Linker failure degrades to an empty
/// gazetteer with a warning.
fn document_gazetteer_for(
    document: &Document,
    spans: &[MentionSpan],
    linker: &dyn Linker,
    aliases: &AliasDictionary,
) -> Result<DocumentGazetteer, PipelineError> {
    let annotations = match linker.link(document, spans) {
        Ok(annotations) => annotations,
        Err(err) => {
            warn!(
                "linker failed on document {:?}: {err}; using an empty gazetteer",
                document.id()
            );
            return Ok(DocumentGazetteer::empty());
        }
    };
    let ids: std::collections::BTreeSet<&str> =
        annotations.iter().map(|a| a.entity_id.as_str()).collect();
    Ok(build_document_gazetteer(ids, aliases)?)
}

/// Trains a bundle with the built-in linker for `config.linker_mode`.
pub fn train_pipeline(
    corpus: &[Document],
    config: &PipelineConfig,
    resources: Option<&KnowledgeResources>,
) -> Result<ModelBundle, PipelineError> {
    if config.features.category != Category::Entity {
        return train_pipeline_with_linker(corpus, config, resources, &NeverLinks);
    }
    let resources = resources.ok_or(FeatureError::MissingResources(Category::Entity))?;
    match config.linker_mode {
        LinkerMode::Gold => {
            let linker = GoldLinker {
                aliases: &resources.aliases,
            };
            train_pipeline_with_linker(corpus, config, Some(resources), &linker)
        }
        LinkerMode::Dictionary => {
            let linker = DictionaryLinker {
                aliases: &resources.aliases,
            };
            train_pipeline_with_linker(corpus, config, Some(resources), &linker)
        }
    }
}

struct NeverLinks;

impl Linker for NeverLinks {
    fn link(
        &self,
        _document: &Document,
        _spans: &[MentionSpan],
    ) -> Result<Vec<EntityAnnotation>, LinkerError> {
        Ok(Vec::new())
    }
}

/// Trains a bundle with a caller-supplied linker (only consulted at the
/// entity category; lighter categories never link).
pub fn train_pipeline_with_linker(
    corpus: &[Document],
    config: &PipelineConfig,
    resources: Option<&KnowledgeResources>,
    linker: &dyn Linker,
) -> Result<ModelBundle, PipelineError> {
    let scheme = scheme_from_corpus(corpus)?;
    let first_config = FeatureConfig {
        category: first_pass_category(config.features.category),
        ..config.features.clone()
    };
    let first_instances = build_instances(corpus, &scheme, &first_config, resources, None)?;
    let first_pass = train(&first_instances, &scheme, &config.train)?.model;

    if config.features.category != Category::Entity {
        return ModelBundle::assemble(
            config.features.clone(),
            config.linker_mode,
            first_pass,
            None,
        );
    }

    let resources = resources.ok_or(FeatureError::MissingResources(Category::Entity))?;
    let mut gazetteers = BTreeMap::new();
    for doc in corpus {
        // gold mode builds training gazetteers from the gold spans; the
        // dictionary mode mirrors the deployed flow and uses first-pass
        // predictions
        let spans = match config.linker_mode {
            LinkerMode::Gold => doc.gold_mentions().unwrap_or(&[]).to_vec(),
            LinkerMode::Dictionary => decode_document(
                &first_pass,
                &scheme,
                doc,
                &first_config,
                Some(resources),
                None,
            )?,
        };
        let gaz = document_gazetteer_for(doc, &spans, linker, &resources.aliases)?;
        if gazetteers.insert(doc.id().to_string(), gaz).is_some() {
            return Err(PipelineError::DuplicateDocumentId(doc.id().to_string()));
        }
    }
    let second_instances = build_instances(
        corpus,
        &scheme,
        &config.features,
        Some(resources),
        Some(&gazetteers),
    )?;
    let second_pass = train(&second_instances, &scheme, &config.train)?.model;
    ModelBundle::assemble(
        config.features.clone(),
        config.linker_mode,
        first_pass,
        Some(second_pass),
    )
}

/// Per-document tagging instrumentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TagStats {
    /// Full CRF decode passes over the document.
    pub decode_passes: usize,
}

/// Tags one document with the bundle's built-in linker.
pub fn tag_document(
    bundle: &ModelBundle,
    document: &Document,
    resources: Option<&KnowledgeResources>,
) -> Result<Vec<MentionSpan>, PipelineError> {
    Ok(tag_document_with_stats(bundle, document, resources, None)?.0)
}

/// Tags one document, optionally with a caller-supplied linker, and reports
/// instrumentation counters.
pub fn tag_document_with_stats(
    bundle: &ModelBundle,
    document: &Document,
    resources: Option<&KnowledgeResources>,
    linker: Option<&dyn Linker>,
) -> Result<(Vec<MentionSpan>, TagStats), PipelineError> {
    let mut stats = TagStats::default();
    if document.sentences().is_empty() {
        return Ok((Vec::new(), stats));
    }
    if bundle.needs_resources() && resources.is_none() {
        return Err(FeatureError::MissingResources(bundle.category()).into());
    }
    let scheme = bundle.scheme();
    let first_config = FeatureConfig {
        category: first_pass_category(bundle.category()),
        ..bundle.config.clone()
    };
    let first_spans = decode_document(
        &bundle.first_pass,
        scheme,
        document,
        &first_config,
        resources,
        None,
    )?;
    stats.decode_passes += 1;
    if bundle.category() != Category::Entity {
        return Ok((first_spans, stats));
    }

    let resources = resources.expect("checked above");
    let gaz = match linker {
        Some(linker) => {
            document_gazetteer_for(document, &first_spans, linker, &resources.aliases)?
        }
        None => {
            let gold;
            let dict;
            let built_in: &dyn Linker = match bundle.linker_mode {
                LinkerMode::Gold => {
                    gold = GoldLinker {
                        aliases: &resources.aliases,
                    };
                    &gold
                }
                LinkerMode::Dictionary => {
                    dict = DictionaryLinker {
                        aliases: &resources.aliases,
                    };
                    &dict
                }
            };
            document_gazetteer_for(document, &first_spans, built_in, &resources.aliases)?
        }
    };
    let second = bundle.second_pass().expect("entity bundles carry one");
    let spans = decode_document(
        second,
        scheme,
        document,
        &bundle.config,
        Some(resources),
        Some(&gaz),
    )?;
    stats.decode_passes += 1;
    Ok((spans, stats))
}

/// Tags a corpus and keys the results by document id. Documents run in
/// parallel when the bundle's linker allows it (the built-in linkers do).
pub fn tag_corpus(
    bundle: &ModelBundle,
    corpus: &[Document],
    resources: Option<&KnowledgeResources>,
) -> Result<BTreeMap<String, Vec<MentionSpan>>, PipelineError> {
    let tagged: Vec<Result<(String, Vec<MentionSpan>), PipelineError>> = corpus
        .par_iter()
        .map(|doc| {
            let spans = tag_document(bundle, doc, resources)?;
            Ok((doc.id().to_string(), spans))
        })
        .collect();
    let mut out = BTreeMap::new();
    for item in tagged {
        let (id, spans) = item?;
        if out.insert(id.clone(), spans).is_some() {
            return Err(PipelineError::DuplicateDocumentId(id));
        }
    }
    Ok(out)
}
