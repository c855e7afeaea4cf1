//! Scoring, forward–backward, and constrained Viterbi over one chain.
//!
//! The DP core works on a flattened emission matrix plus a transition
//! matrix so the trainer can reuse it on raw weight vectors without
//! materializing a model.

use super::model::{CrfModel, TransitionRules};
use super::{AttributeSequence, CrfError};

/// Log-sum-exp with max shift; `-inf` when no finite term exists.
pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - m).exp()).sum();
    m + sum.ln()
}

/// One chain's potentials: `emit` is `n*l` row-major, `trans` is `l*l`.
pub(crate) struct ChainPotentials<'a> {
    pub emit: &'a [f64],
    pub trans: &'a [f64],
    pub rules: &'a TransitionRules,
    pub n: usize,
    pub l: usize,
}

impl ChainPotentials<'_> {
    /// Forward recursion; returns (alpha, log partition).
    pub fn forward(&self) -> (Vec<f64>, f64) {
        let (n, l) = (self.n, self.l);
        let mut alpha = vec![f64::NEG_INFINITY; n * l];
        for y in 0..l {
            if self.rules.start_ok(y) {
                alpha[y] = self.emit[y];
            }
        }
        let mut scratch = vec![f64::NEG_INFINITY; l];
        for t in 1..n {
            for y in 0..l {
                for (p, s) in scratch.iter_mut().enumerate() {
                    *s = if self.rules.pair_ok(p, y) {
                        alpha[(t - 1) * l + p] + self.trans[p * l + y]
                    } else {
                        f64::NEG_INFINITY
                    };
                }
                let inc = log_sum_exp(&scratch);
                alpha[t * l + y] = if inc == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else {
                    self.emit[t * l + y] + inc
                };
            }
        }
        let mut finals = vec![f64::NEG_INFINITY; l];
        for y in 0..l {
            if self.rules.end_ok(y) {
                finals[y] = alpha[(n - 1) * l + y];
            }
        }
        (alpha, log_sum_exp(&finals))
    }

    /// Backward recursion.
    pub fn backward(&self) -> Vec<f64> {
        let (n, l) = (self.n, self.l);
        let mut beta = vec![f64::NEG_INFINITY; n * l];
        for y in 0..l {
            if self.rules.end_ok(y) {
                beta[(n - 1) * l + y] = 0.0;
            }
        }
        let mut scratch = vec![f64::NEG_INFINITY; l];
        for t in (0..n - 1).rev() {
            for y in 0..l {
                for (q, s) in scratch.iter_mut().enumerate() {
                    *s = if self.rules.pair_ok(y, q) {
                        self.trans[y * l + q] + self.emit[(t + 1) * l + q] + beta[(t + 1) * l + q]
                    } else {
                        f64::NEG_INFINITY
                    };
                }
                beta[t * l + y] = log_sum_exp(&scratch);
            }
        }
        beta
    }
}

/// Builds the dense emission matrix for a model over one attribute
/// sequence; unknown attribute keys contribute nothing.
pub(crate) fn emissions(model: &CrfModel, attrs: &AttributeSequence) -> Vec<f64> {
    let l = model.label_count();
    let mut emit = vec![0.0; attrs.len() * l];
    for (t, map) in attrs.maps().iter().enumerate() {
        for (key, value) in map {
            if let Some(row) = model.state_rows().get(key) {
                for (y, w) in row.iter().enumerate() {
                    emit[t * l + y] += value * w;
                }
            }
        }
    }
    emit
}

/// Unnormalized log-potential of one labeled path.
///
/// Returns `-inf` when the path uses a masked transition or violates the
/// begin/end constraints; such paths carry zero probability mass.
pub fn sequence_score(
    model: &CrfModel,
    attrs: &AttributeSequence,
    labels: &[String],
) -> Result<f64, CrfError> {
    if attrs.len() != labels.len() {
        return Err(CrfError::LengthMismatch {
            attrs: attrs.len(),
            labels: labels.len(),
        });
    }
    let path = labels
        .iter()
        .map(|name| {
            model
                .inventory()
                .index_of(name)
                .ok_or_else(|| CrfError::UnknownLabel(name.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if path.is_empty() {
        return Ok(0.0);
    }
    let rules = model.rules();
    if !rules.start_ok(path[0]) || !rules.end_ok(*path.last().unwrap()) {
        return Ok(f64::NEG_INFINITY);
    }
    let mut score = 0.0;
    for (t, &y) in path.iter().enumerate() {
        for (key, value) in attrs.map(t) {
            score += value * model.state_weight(key, y);
        }
        if t > 0 {
            let prev = path[t - 1];
            if !rules.pair_ok(prev, y) {
                return Ok(f64::NEG_INFINITY);
            }
            score += model.transition_weight(prev, y);
        }
    }
    Ok(score)
}

/// Posterior quantities from one forward–backward pass.
#[derive(Debug, Clone)]
pub struct Marginals {
    log_partition: f64,
    n: usize,
    l: usize,
    unary: Vec<f64>,
    pairwise: Vec<f64>,
}

impl Marginals {
    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn label_count(&self) -> usize {
        self.l
    }

    /// P(y_t = label | x).
    pub fn unary(&self, position: usize, label: usize) -> f64 {
        self.unary[position * self.l + label]
    }

    /// P(y_t = from, y_{t+1} = to | x), defined for `position < len - 1`.
    pub fn pairwise(&self, position: usize, from: usize, to: usize) -> f64 {
        self.pairwise[(position * self.l + from) * self.l + to]
    }
}

/// Forward–backward over all unmasked paths, in log space.
pub fn forward_backward(
    model: &CrfModel,
    attrs: &AttributeSequence,
) -> Result<Marginals, CrfError> {
    if attrs.is_empty() {
        return Err(CrfError::EmptySequence);
    }
    let (n, l) = (attrs.len(), model.label_count());
    let emit = emissions(model, attrs);
    let chain = ChainPotentials {
        emit: &emit,
        trans: model.transitions(),
        rules: model.rules(),
        n,
        l,
    };
    let (alpha, log_z) = chain.forward();
    if !log_z.is_finite() {
        return Err(CrfError::NoValidPath);
    }
    let beta = chain.backward();
    let mut unary = vec![0.0; n * l];
    for t in 0..n {
        for y in 0..l {
            unary[t * l + y] = (alpha[t * l + y] + beta[t * l + y] - log_z).exp();
        }
    }
    let mut pairwise = vec![0.0; n.saturating_sub(1) * l * l];
    for t in 0..n - 1 {
        for from in 0..l {
            if alpha[t * l + from] == f64::NEG_INFINITY {
                continue;
            }
            for to in 0..l {
                if !model.rules().pair_ok(from, to) {
                    continue;
                }
                let log_p = alpha[t * l + from]
                    + model.transitions()[from * l + to]
                    + emit[(t + 1) * l + to]
                    + beta[(t + 1) * l + to]
                    - log_z;
                pairwise[(t * l + from) * l + to] = log_p.exp();
            }
        }
    }
    Ok(Marginals {
        log_partition: log_z,
        n,
        l,
        unary,
        pairwise,
    })
}

/// Highest-scoring unmasked path.
///
/// Ties are broken deterministically: among all maximizing paths, the one
/// whose label-index sequence is lexicographically smallest (lowest label
/// index at the earliest differing position) is returned. This is achieved
/// by running the max recursion backward over suffixes and then selecting
/// labels greedily from the front.
pub fn viterbi(model: &CrfModel, attrs: &AttributeSequence) -> Result<Vec<String>, CrfError> {
    let path = viterbi_indices(
        &emissions(model, attrs),
        model.transitions(),
        model.rules(),
        attrs.len(),
        model.label_count(),
    )?;
    Ok(path
        .into_iter()
        .map(|y| model.inventory().name(y).to_string())
        .collect())
}

pub(crate) fn viterbi_indices(
    emit: &[f64],
    trans: &[f64],
    rules: &TransitionRules,
    n: usize,
    l: usize,
) -> Result<Vec<usize>, CrfError> {
    if n == 0 {
        return Err(CrfError::EmptySequence);
    }
    // suffix[t*l + y]: best score of a valid path over positions t..n that
    // starts with label y; best_next holds the inner max before emit is
    // added, so the greedy front pass can re-derive choices bit-exactly.
    let mut suffix = vec![f64::NEG_INFINITY; n * l];
    let mut best_next = vec![f64::NEG_INFINITY; n.saturating_sub(1) * l];
    for y in 0..l {
        if rules.end_ok(y) {
            suffix[(n - 1) * l + y] = emit[(n - 1) * l + y];
        }
    }
    for t in (0..n.saturating_sub(1)).rev() {
        for y in 0..l {
            let mut best = f64::NEG_INFINITY;
            for q in 0..l {
                if rules.pair_ok(y, q) {
                    let v = trans[y * l + q] + suffix[(t + 1) * l + q];
                    if v > best {
                        best = v;
                    }
                }
            }
            best_next[t * l + y] = best;
            suffix[t * l + y] = if best == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                emit[t * l + y] + best
            };
        }
    }
    let mut total = f64::NEG_INFINITY;
    for y in 0..l {
        if rules.start_ok(y) && suffix[y] > total {
            total = suffix[y];
        }
    }
    if total == f64::NEG_INFINITY {
        return Err(CrfError::NoValidPath);
    }
    let mut path = Vec::with_capacity(n);
    let first = (0..l)
        .find(|&y| rules.start_ok(y) && suffix[y] == total)
        .expect("the maximum was taken over these values");
    path.push(first);
    for t in 1..n {
        let prev = path[t - 1];
        let target = best_next[(t - 1) * l + prev];
        let next = (0..l)
            .find(|&y| rules.pair_ok(prev, y) && trans[prev * l + y] + suffix[t * l + y] == target)
            .expect("the maximum was taken over these values");
        path.push(next);
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crf::model::LabelInventory;
    use std::collections::BTreeMap;

    fn attr(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn two_label_model() -> CrfModel {
        let inv = LabelInventory::custom(vec!["A".into(), "B".into()]).unwrap();
        CrfModel::zeroed(inv, TransitionRules::permissive(2))
    }

    fn seq(maps: Vec<BTreeMap<String, f64>>) -> AttributeSequence {
        AttributeSequence::new(maps).unwrap()
    }

    #[test]
    fn zero_weights_score_zero() {
        let model = two_label_model();
        let attrs = seq(vec![attr(&[("f", 1.0)]), attr(&[("g", 2.0)])]);
        let labels: Vec<String> = ["A", "B"].map(String::from).into();
        assert_eq!(sequence_score(&model, &attrs, &labels).unwrap(), 0.0);
    }

    #[test]
    fn score_sums_three_weight_lookups() {
        // state(f0, A) = 1.0 at token 0, transition(A, B) = 0.25,
        // state(f1, B) = 1.0 with value 0.5 at token 1: 1.0 + 0.5 + 0.25.
        let mut model = two_label_model();
        model.set_state_weight("f0", 0, 1.0);
        model.set_state_weight("f1", 1, 1.0);
        model.set_transition_weight(0, 1, 0.25);
        let attrs = seq(vec![attr(&[("f0", 1.0)]), attr(&[("f1", 0.5)])]);
        let labels: Vec<String> = ["A", "B"].map(String::from).into();
        assert_eq!(sequence_score(&model, &attrs, &labels).unwrap(), 1.75);
    }

    #[test]
    fn masked_transition_scores_neg_infinity() {
        let inv = LabelInventory::custom(vec!["A".into(), "B".into()]).unwrap();
        let rules = TransitionRules::new(
            vec![true, true],
            vec![true, true],
            vec![true, false, true, true], // A->B masked
        )
        .unwrap();
        let model = CrfModel::zeroed(inv, rules);
        let attrs = seq(vec![attr(&[("f", 1.0)]), attr(&[("f", 1.0)])]);
        let labels: Vec<String> = ["A", "B"].map(String::from).into();
        assert_eq!(
            sequence_score(&model, &attrs, &labels).unwrap(),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let model = two_label_model();
        let attrs = seq(vec![attr(&[("f", 1.0)])]);
        let labels: Vec<String> = ["A", "B"].map(String::from).into();
        assert!(matches!(
            sequence_score(&model, &attrs, &labels),
            Err(CrfError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn single_token_partition_is_log_sum_of_exp_scores() {
        let mut model = two_label_model();
        model.set_state_weight("f", 0, 0.7);
        model.set_state_weight("f", 1, -0.3);
        let attrs = seq(vec![attr(&[("f", 1.0)])]);
        let fb = forward_backward(&model, &attrs).unwrap();
        let expected = (0.7f64.exp() + (-0.3f64).exp()).ln();
        assert!((fb.log_partition() - expected).abs() < 1e-12);
        let softmax_a = 0.7f64.exp() / (0.7f64.exp() + (-0.3f64).exp());
        assert!((fb.unary(0, 0) - softmax_a).abs() < 1e-12);
        assert!((fb.unary(0, 0) + fb.unary(0, 1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_zero_weights_count_paths() {
        let model = two_label_model();
        let attrs = seq(vec![attr(&[]), attr(&[]), attr(&[])]);
        let fb = forward_backward(&model, &attrs).unwrap();
        // 2^3 equally weighted paths
        assert!((fb.log_partition() - 8.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn single_token_argmax() {
        let mut model = two_label_model();
        model.set_state_weight("f", 0, 1.0);
        model.set_state_weight("f", 1, 0.5);
        let attrs = seq(vec![attr(&[("f", 1.0)])]);
        assert_eq!(viterbi(&model, &attrs).unwrap(), vec!["A".to_string()]);
    }

    #[test]
    fn zero_weights_tie_break_picks_lowest_indices() {
        let model = two_label_model();
        let attrs = seq(vec![attr(&[]), attr(&[])]);
        assert_eq!(
            viterbi(&model, &attrs).unwrap(),
            vec!["A".to_string(), "A".to_string()]
        );
    }

    #[test]
    fn empty_sequence_is_an_error() {
        let model = two_label_model();
        let attrs = seq(vec![]);
        assert!(matches!(
            forward_backward(&model, &attrs),
            Err(CrfError::EmptySequence)
        ));
        assert!(matches!(
            viterbi(&model, &attrs),
            Err(CrfError::EmptySequence)
        ));
    }

    #[test]
    fn tie_break_prefers_earliest_position() {
        // Two maximizing paths: (A,B) and (B,A) — both score 1.0. The
        // lexicographically smaller one starts with A even though a final
        // tie-break on the last label would pick (B,A).
        let mut model = two_label_model();
        model.set_transition_weight(0, 1, 1.0); // A->B
        model.set_transition_weight(1, 0, 1.0); // B->A
        let attrs = seq(vec![attr(&[]), attr(&[])]);
        assert_eq!(
            viterbi(&model, &attrs).unwrap(),
            vec!["A".to_string(), "B".to_string()]
        );
    }
}
