//! Training driver: indexes the dataset into dense weight slots, evaluates
//! the smooth objective in parallel with a fixed reduction order (training
//! is bit-reproducible regardless of thread count), and runs OWL-QN.

use rayon::prelude::*;

use super::inference::ChainPotentials;
use super::model::{CrfModel, LabelInventory, TransitionRules};
use super::objective::TrainingInstance;
use super::owlqn::{self, OwlqnParams};
use super::CrfError;
use crate::corpus::LabelScheme;

/// Optimizer settings. Defaults follow the training recipe this crate
/// reproduces: L1 coefficient 1, limited memory 6, at most 300 iterations,
/// stopping at a relative objective change of 1e-5.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub l1_coefficient: f64,
    pub max_iterations: usize,
    pub convergence_tolerance: f64,
    pub memory: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            l1_coefficient: 1.0,
            max_iterations: 300,
            convergence_tolerance: 1e-5,
            memory: 6,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), CrfError> {
        if !(self.l1_coefficient >= 0.0 && self.l1_coefficient.is_finite()) {
            return Err(CrfError::InvalidConfig(
                "l1_coefficient must be finite and >= 0".into(),
            ));
        }
        if self.max_iterations == 0 {
            return Err(CrfError::InvalidConfig("max_iterations must be >= 1".into()));
        }
        if !(self.convergence_tolerance > 0.0) {
            return Err(CrfError::InvalidConfig(
                "convergence_tolerance must be > 0".into(),
            ));
        }
        if self.memory == 0 {
            return Err(CrfError::InvalidConfig("memory must be >= 1".into()));
        }
        Ok(())
    }
}

/// A trained model plus optimizer bookkeeping for the harness.
#[derive(Debug)]
pub struct TrainOutcome {
    pub model: CrfModel,
    /// Objective at the zero model and after every accepted step; strictly
    /// decreasing.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Trains a model over a scheme-derived label inventory with the scheme's
/// transition grammar enforced.
pub fn train(
    dataset: &[TrainingInstance],
    scheme: &LabelScheme,
    config: &TrainConfig,
) -> Result<TrainOutcome, CrfError> {
    let rules = TransitionRules::for_scheme(scheme);
    train_custom(dataset, LabelInventory::from_scheme(scheme.clone()), rules, config)
}

/// Trains over an arbitrary inventory and transition rules.
pub fn train_custom(
    dataset: &[TrainingInstance],
    inventory: LabelInventory,
    rules: TransitionRules,
    config: &TrainConfig,
) -> Result<TrainOutcome, CrfError> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(CrfError::EmptyDataset);
    }
    let indexed = IndexedDataset::build(dataset, &inventory, &rules)?;
    let n_weights = indexed.weight_count();
    let diagnose = |index: usize| indexed.describe_slot(&inventory, index);
    let params = OwlqnParams {
        c1: config.l1_coefficient,
        memory: config.memory,
        max_iterations: config.max_iterations,
        tolerance: config.convergence_tolerance,
    };
    let outcome = owlqn::minimize(
        |w, g| indexed.smooth_eval(w, g),
        n_weights,
        &params,
        &diagnose,
    )?;

    let l = inventory.len();
    let mut model = CrfModel::zeroed(inventory, rules);
    for (a, key) in indexed.attr_keys.iter().enumerate() {
        let row = &outcome.x[a * l..(a + 1) * l];
        if row.iter().any(|w| *w != 0.0) {
            for (y, &w) in row.iter().enumerate() {
                if w != 0.0 {
                    model.set_state_weight(key, y, w);
                }
            }
        }
    }
    let trans_base = indexed.attr_keys.len() * l;
    for i in 0..l {
        for j in 0..l {
            let w = outcome.x[trans_base + i * l + j];
            if w != 0.0 {
                model.set_transition_weight(i, j, w);
            }
        }
    }
    Ok(TrainOutcome {
        model,
        objective_trace: outcome.trace,
        iterations: outcome.iterations,
        converged: outcome.converged,
    })
}

struct IndexedInstance {
    /// Per token: (attribute slot, value).
    attrs: Vec<Vec<(u32, f64)>>,
    labels: Vec<u32>,
}

struct IndexedDataset {
    attr_keys: Vec<String>,
    instances: Vec<IndexedInstance>,
    l: usize,
    rules: TransitionRules,
}

/// Fixed chunk count for the parallel objective; partial results are summed
/// in chunk order, so the reduction is independent of thread scheduling.
const REDUCTION_CHUNKS: usize = 16;

impl IndexedDataset {
    fn build(
        dataset: &[TrainingInstance],
        inventory: &LabelInventory,
        rules: &TransitionRules,
    ) -> Result<Self, CrfError> {
        let mut keys: std::collections::BTreeSet<&str> = std::collections::BTreeSet::new();
        for instance in dataset {
            for map in instance.attrs.maps() {
                keys.extend(map.keys().map(String::as_str));
            }
        }
        let attr_keys: Vec<String> = keys.into_iter().map(String::from).collect();
        let slot_of: std::collections::HashMap<&str, u32> = attr_keys
            .iter()
            .enumerate()
            .map(|(i, k)| (k.as_str(), i as u32))
            .collect();

        let mut instances = Vec::with_capacity(dataset.len());
        for instance in dataset {
            if instance.attrs.len() != instance.labels.len() {
                return Err(CrfError::LengthMismatch {
                    attrs: instance.attrs.len(),
                    labels: instance.labels.len(),
                });
            }
            if instance.labels.is_empty() {
                return Err(CrfError::EmptySequence);
            }
            let labels = instance
                .labels
                .iter()
                .map(|name| {
                    inventory
                        .index_of(name)
                        .map(|i| i as u32)
                        .ok_or_else(|| CrfError::UnknownLabel(name.clone()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            // fail fast on gold paths the grammar cannot produce
            if !rules.start_ok(labels[0] as usize) {
                return Err(CrfError::GoldPathMasked {
                    instance: instance.tag.clone(),
                    position: 0,
                });
            }
            for t in 1..labels.len() {
                if !rules.pair_ok(labels[t - 1] as usize, labels[t] as usize) {
                    return Err(CrfError::GoldPathMasked {
                        instance: instance.tag.clone(),
                        position: t,
                    });
                }
            }
            if !rules.end_ok(*labels.last().unwrap() as usize) {
                return Err(CrfError::GoldPathMasked {
                    instance: instance.tag.clone(),
                    position: labels.len() - 1,
                });
            }
            let attrs = instance
                .attrs
                .maps()
                .iter()
                .map(|map| {
                    map.iter()
                        .map(|(k, v)| (slot_of[k.as_str()], *v))
                        .collect()
                })
                .collect();
            instances.push(IndexedInstance { attrs, labels });
        }
        Ok(Self {
            attr_keys,
            instances,
            l: inventory.len(),
            rules: rules.clone(),
        })
    }

    fn weight_count(&self) -> usize {
        self.attr_keys.len() * self.l + self.l * self.l
    }

    fn trans_base(&self) -> usize {
        self.attr_keys.len() * self.l
    }

    fn describe_slot(&self, inventory: &LabelInventory, index: usize) -> String {
        let l = self.l;
        if index < self.trans_base() {
            format!(
                "state weight ({:?}, {})",
                self.attr_keys[index / l],
                inventory.name(index % l)
            )
        } else {
            let off = index - self.trans_base();
            format!(
                "transition weight ({}, {})",
                inventory.name(off / l),
                inventory.name(off % l)
            )
        }
    }

    /// Negative log-likelihood of the dataset and its gradient, written
    /// into `grad`.
    fn smooth_eval(&self, w: &[f64], grad: &mut [f64]) -> Result<f64, CrfError> {
        grad.fill(0.0);
        let chunk_size = self.instances.len().div_ceil(REDUCTION_CHUNKS).max(1);
        let partials: Vec<Result<(f64, Vec<f64>), CrfError>> = self
            .instances
            .par_chunks(chunk_size)
            .map(|chunk| {
                let mut g = vec![0.0; w.len()];
                let mut loss = 0.0;
                for instance in chunk {
                    loss += self.instance_loss(instance, w, &mut g)?;
                }
                Ok((loss, g))
            })
            .collect();
        let mut total = 0.0;
        for partial in partials {
            let (loss, g) = partial?;
            total += loss;
            for (acc, v) in grad.iter_mut().zip(&g) {
                *acc += v;
            }
        }
        Ok(total)
    }

    fn instance_loss(
        &self,
        instance: &IndexedInstance,
        w: &[f64],
        grad: &mut [f64],
    ) -> Result<f64, CrfError> {
        let l = self.l;
        let n = instance.labels.len();
        let trans = &w[self.trans_base()..];
        let mut emit = vec![0.0; n * l];
        for (t, attrs) in instance.attrs.iter().enumerate() {
            for &(a, v) in attrs {
                let row = &w[a as usize * l..(a as usize + 1) * l];
                for (y, wy) in row.iter().enumerate() {
                    emit[t * l + y] += v * wy;
                }
            }
        }
        let chain = ChainPotentials {
            emit: &emit,
            trans,
            rules: &self.rules,
            n,
            l,
        };
        let (alpha, log_z) = chain.forward();
        if !log_z.is_finite() {
            return Err(CrfError::NoValidPath);
        }
        let beta = chain.backward();

        let mut gold_score = 0.0;
        for t in 0..n {
            gold_score += emit[t * l + instance.labels[t] as usize];
            if t > 0 {
                gold_score +=
                    trans[instance.labels[t - 1] as usize * l + instance.labels[t] as usize];
            }
        }

        // expected minus empirical state counts
        for (t, attrs) in instance.attrs.iter().enumerate() {
            for &(a, v) in attrs {
                let base = a as usize * l;
                for y in 0..l {
                    let p = (alpha[t * l + y] + beta[t * l + y] - log_z).exp();
                    grad[base + y] += v * p;
                }
                grad[base + instance.labels[t] as usize] -= v;
            }
        }
        // expected minus empirical transition counts
        let gbase = self.trans_base();
        for t in 0..n - 1 {
            for from in 0..l {
                let a = alpha[t * l + from];
                if a == f64::NEG_INFINITY {
                    continue;
                }
                for to in 0..l {
                    if !self.rules.pair_ok(from, to) {
                        continue;
                    }
                    let p =
                        (a + trans[from * l + to] + emit[(t + 1) * l + to] + beta[(t + 1) * l + to]
                            - log_z)
                            .exp();
                    grad[gbase + from * l + to] += p;
                }
            }
            grad[gbase
                + instance.labels[t] as usize * l
                + instance.labels[t + 1] as usize] -= 1.0;
        }
        Ok(log_z - gold_score)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crf::AttributeSequence;
    use std::collections::BTreeMap;

    fn gaz_instance(tag: &str, words: &[(&str, bool)], scheme: &LabelScheme) -> TrainingInstance {
        // one attribute per token: "w=<word>", plus "isgaz" on flagged tokens
        let mut maps = Vec::new();
        let mut labels = Vec::new();
        for (word, is_entity) in words {
            let mut m = BTreeMap::new();
            m.insert(format!("w={word}"), 1.0);
            if *is_entity {
                m.insert("isgaz".to_string(), 1.0);
            }
            maps.push(m);
            labels.push(if *is_entity { "U-PER".to_string() } else { "O".to_string() });
        }
        let _ = scheme;
        TrainingInstance::new(tag, AttributeSequence::new(maps).unwrap(), labels)
    }

    #[test]
    fn separable_corpus_reaches_perfect_accuracy() {
        let scheme = LabelScheme::bilou(vec!["PER".into()]).unwrap();
        let sentences: Vec<Vec<(&str, bool)>> = vec![
            vec![("the", false), ("alice", true), ("spoke", false)],
            vec![("bob", true), ("ran", false)],
            vec![("a", false), ("dog", false), ("saw", false), ("carol", true)],
            vec![("dave", true), ("met", false), ("erin", true)],
        ];
        let dataset: Vec<TrainingInstance> = sentences
            .iter()
            .enumerate()
            .map(|(i, s)| gaz_instance(&format!("s{i}"), s, &scheme))
            .collect();
        let out = train(&dataset, &scheme, &TrainConfig::default()).unwrap();
        assert!(out.converged, "training should converge on separable data");
        // held-out copies decode exactly
        for (i, s) in sentences.iter().enumerate() {
            let inst = gaz_instance(&format!("h{i}"), s, &scheme);
            let decoded = crate::crf::viterbi(&out.model, &inst.attrs).unwrap();
            assert_eq!(decoded, inst.labels, "sentence {i}");
        }
        // objective never worse than the zero model's
        assert!(out.objective_trace.last().unwrap() <= &out.objective_trace[0]);
    }

    #[test]
    fn huge_penalty_yields_the_zero_model() {
        let scheme = LabelScheme::bilou(vec!["PER".into()]).unwrap();
        let dataset = vec![gaz_instance(
            "s0",
            &[("x", false), ("alice", true)],
            &scheme,
        )];
        let config = TrainConfig {
            l1_coefficient: 1e6,
            ..TrainConfig::default()
        };
        let out = train(&dataset, &scheme, &config).unwrap();
        assert_eq!(out.model.nonzero_weight_count(), 0);
        // zero model decodes to the tie-break path: all O (index 0)
        let inst = gaz_instance("h", &[("x", false), ("y", false)], &scheme);
        let decoded = crate::crf::viterbi(&out.model, &inst.attrs).unwrap();
        assert_eq!(decoded, vec!["O".to_string(), "O".to_string()]);
    }

    #[test]
    fn objective_trace_is_monotone() {
        let scheme = LabelScheme::bilou(vec!["PER".into()]).unwrap();
        let dataset = vec![
            gaz_instance("s0", &[("the", false), ("alice", true)], &scheme),
            gaz_instance("s1", &[("bob", true), ("ran", false)], &scheme),
        ];
        let out = train(&dataset, &scheme, &TrainConfig::default()).unwrap();
        for pair in out.objective_trace.windows(2) {
            assert!(pair[1] < pair[0], "objective must decrease: {pair:?}");
        }
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let scheme = LabelScheme::bilou(vec!["PER".into()]).unwrap();
        assert!(matches!(
            train(&[], &scheme, &TrainConfig::default()),
            Err(CrfError::EmptyDataset)
        ));
    }

    #[test]
    fn training_is_bit_reproducible() {
        let scheme = LabelScheme::bilou(vec!["PER".into()]).unwrap();
        let dataset = vec![
            gaz_instance("s0", &[("the", false), ("alice", true), ("ran", false)], &scheme),
            gaz_instance("s1", &[("bob", true), ("slept", false)], &scheme),
            gaz_instance("s2", &[("a", false), ("b", false)], &scheme),
        ];
        let a = train(&dataset, &scheme, &TrainConfig::default()).unwrap();
        let b = train(&dataset, &scheme, &TrainConfig::default()).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.objective_trace, b.objective_trace);
    }
}
