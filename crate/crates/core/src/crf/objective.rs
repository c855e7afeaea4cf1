//! Training objective: negative log-likelihood plus L1 penalty, and its
//! smooth-part gradient (model-expected minus empirical feature counts).

use std::collections::BTreeMap;

use super::inference::forward_backward;
use super::model::CrfModel;
use super::{AttributeSequence, CrfError};

/// One labeled sentence, tagged with a caller-chosen identifier used in
/// diagnostics (e.g. `"d0003/s2"`).
#[derive(Debug, Clone)]
pub struct TrainingInstance {
    pub tag: String,
    pub attrs: AttributeSequence,
    pub labels: Vec<String>,
}

impl TrainingInstance {
    pub fn new(tag: impl Into<String>, attrs: AttributeSequence, labels: Vec<String>) -> Self {
        Self {
            tag: tag.into(),
            attrs,
            labels,
        }
    }
}

/// Gradient over a model's weight slots, mirroring the model layout.
#[derive(Debug, Clone)]
pub struct WeightGradient {
    state: BTreeMap<String, Vec<f64>>,
    trans: Vec<f64>,
    label_count: usize,
}

impl WeightGradient {
    pub fn state(&self, key: &str, label: usize) -> f64 {
        self.state.get(key).map_or(0.0, |row| row[label])
    }

    pub fn transition(&self, from: usize, to: usize) -> f64 {
        self.trans[from * self.label_count + to]
    }

    pub fn max_abs(&self) -> f64 {
        self.state
            .values()
            .flatten()
            .chain(self.trans.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Evaluates the minimization objective
/// `-Σ log p(y|x) + c1·Σ|w|`
/// over the dataset, together with the gradient of its smooth part with
/// respect to every weight slot of `model`. The non-smooth L1 term
/// contributes to the value only; its subgradient is the optimizer's
/// business.
pub fn objective_and_gradient(
    model: &CrfModel,
    dataset: &[TrainingInstance],
    l1_coefficient: f64,
) -> Result<(f64, WeightGradient), CrfError> {
    let l = model.label_count();
    let mut grad_state: BTreeMap<String, Vec<f64>> = model
        .state_rows()
        .keys()
        .map(|k| (k.clone(), vec![0.0; l]))
        .collect();
    let mut grad_trans = vec![0.0; l * l];
    let mut neg_log_lik = 0.0;

    for instance in dataset {
        let path = resolve_path(model, instance)?;
        let fb = forward_backward(model, &instance.attrs)?;
        // smooth loss: log Z - score(gold), both over the same potentials
        let mut gold_score = 0.0;
        for (t, &y) in path.iter().enumerate() {
            for (key, value) in instance.attrs.map(t) {
                gold_score += value * model.state_weight(key, y);
            }
            if t > 0 {
                gold_score += model.transition_weight(path[t - 1], y);
            }
        }
        neg_log_lik += fb.log_partition() - gold_score;
        // expected minus empirical state counts, restricted to model slots
        for (t, map) in instance.attrs.maps().iter().enumerate() {
            for (key, value) in map {
                if let Some(row) = grad_state.get_mut(key) {
                    for (y, g) in row.iter_mut().enumerate() {
                        *g += value * fb.unary(t, y);
                    }
                    row[path[t]] -= value;
                }
            }
        }
        for t in 0..path.len().saturating_sub(1) {
            for from in 0..l {
                for to in 0..l {
                    grad_trans[from * l + to] += fb.pairwise(t, from, to);
                }
            }
            grad_trans[path[t] * l + path[t + 1]] -= 1.0;
        }
    }

    let l1: f64 = model
        .state_rows()
        .values()
        .flatten()
        .chain(model.transitions().iter())
        .map(|w| w.abs())
        .sum();
    Ok((
        neg_log_lik + l1_coefficient * l1,
        WeightGradient {
            state: grad_state,
            trans: grad_trans,
            label_count: l,
        },
    ))
}

/// Resolves an instance's gold labels to indices and checks the path is
/// legal under the model's transition rules.
fn resolve_path(model: &CrfModel, instance: &TrainingInstance) -> Result<Vec<usize>, CrfError> {
    if instance.attrs.len() != instance.labels.len() {
        return Err(CrfError::LengthMismatch {
            attrs: instance.attrs.len(),
            labels: instance.labels.len(),
        });
    }
    if instance.labels.is_empty() {
        return Err(CrfError::EmptySequence);
    }
    let path = instance
        .labels
        .iter()
        .map(|name| {
            model
                .inventory()
                .index_of(name)
                .ok_or_else(|| CrfError::UnknownLabel(name.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let rules = model.rules();
    if !rules.start_ok(path[0]) {
        return Err(CrfError::GoldPathMasked {
            instance: instance.tag.clone(),
            position: 0,
        });
    }
    for t in 1..path.len() {
        if !rules.pair_ok(path[t - 1], path[t]) {
            return Err(CrfError::GoldPathMasked {
                instance: instance.tag.clone(),
                position: t,
            });
        }
    }
    if !rules.end_ok(*path.last().unwrap()) {
        return Err(CrfError::GoldPathMasked {
            instance: instance.tag.clone(),
            position: path.len() - 1,
        });
    }
    Ok(path)
}
