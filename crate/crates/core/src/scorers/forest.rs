//! Bagged CART regression forest over marker features.
//!
//! Intentionally plain: axis-aligned variance-reduction splits, leaf = mean
//! label, bootstrap resampling per tree, every feature considered at every
//! split (bagging without per-split feature subsampling keeps results easily
//! reproducible and is plenty for a few hundred features). All randomness
//! comes from a ChaCha8 generator derived from the configured seed, so equal
//! inputs and params always yield bitwise-equal models.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{extract_features, FeatureVector};
use super::lexicon::MarkerLexicon;
use super::{AssertivenessScore, ScorerError};
use crate::scale::Scale;

/// Persistence format version for [`ForestModel`] JSON dumps.
const MODEL_FORMAT_VERSION: u32 = 1;

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    /// Number of bagged trees.
    pub n_trees: usize,
    /// Maximum tree depth (root is depth 0).
    pub max_depth: usize,
    /// Minimum samples in each child of a split.
    pub min_leaf: usize,
    /// Seed for bootstrap resampling.
    pub seed: u64,
}

impl Default for ForestParams {
    /// Desk-scale defaults: deterministic, sub-second training on a corpus
    /// of hundreds of samples.
    fn default() -> Self {
        ForestParams {
            n_trees: 200,
            max_depth: 8,
            min_leaf: 3,
            seed: 0,
        }
    }
}

/// One node of a regression tree, stored in an arena (`Vec<Node>`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Node {
    Split {
        feature: usize,
        threshold: f64,
        /// Arena index taken when `x[feature] <= threshold`.
        left: usize,
        /// Arena index taken otherwise.
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// A single regression tree (arena layout, root at index 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

/// A trained, immutable random-forest regressor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    format_version: u32,
    pub params: ForestParams,
    /// Lexicon version the training features were extracted with; enforced
    /// at prediction time.
    pub lexicon_version: String,
    /// Dense feature-vector length the model expects.
    pub n_features: usize,
    /// Scale the training labels were expressed on (raw prediction scale).
    pub label_scale: Scale,
    /// Observed label range; every leaf value lies inside it.
    pub label_min: f64,
    pub label_max: f64,
    trees: Vec<Tree>,
}

/// Train a bagged regression forest on extracted features and 0–10 labels.
///
/// Features must all come from the same lexicon version. Constant features
/// with varying labels are not an error: no split improves the variance, so
/// trees collapse to label-mean leaves.
pub fn train_forest(
    features: &[FeatureVector],
    labels: &[f64],
    params: &ForestParams,
) -> Result<ForestModel, ScorerError> {
    if features.len() != labels.len() {
        return Err(ScorerError::TrainingDataInvalid {
            detail: format!(
                "feature/label count mismatch: {} vs {}",
                features.len(),
                labels.len()
            ),
        });
    }
    if features.is_empty() || features.len() < params.min_leaf {
        return Err(ScorerError::TrainingDataInvalid {
            detail: format!(
                "need at least min_leaf = {} samples, found {}",
                params.min_leaf,
                features.len()
            ),
        });
    }
    if params.n_trees == 0 || params.min_leaf == 0 {
        return Err(ScorerError::TrainingDataInvalid {
            detail: "n_trees and min_leaf must be positive".into(),
        });
    }
    let scale = Scale::ZeroToTen;
    for (i, &label) in labels.iter().enumerate() {
        if !scale.contains(label) {
            return Err(ScorerError::TrainingDataInvalid {
                detail: format!("label #{i} = {label} is outside [0, 10]"),
            });
        }
    }
    let version = &features[0].lexicon_version;
    if let Some(bad) = features.iter().find(|f| &f.lexicon_version != version) {
        return Err(ScorerError::TrainingDataInvalid {
            detail: format!(
                "mixed lexicon versions in training features: {version:?} vs {:?}",
                bad.lexicon_version
            ),
        });
    }
    let dense: Vec<Vec<f64>> = features.iter().map(FeatureVector::dense).collect();
    let n_features = dense[0].len();
    if let Some(bad) = dense.iter().find(|d| d.len() != n_features) {
        return Err(ScorerError::FeatureShapeMismatch {
            expected: n_features,
            found: bad.len(),
        });
    }

    let label_min = labels.iter().copied().fold(f64::INFINITY, f64::min);
    let label_max = labels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = dense.len();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let trees: Vec<Tree> = (0..params.n_trees)
        .map(|_| {
            let bag: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            grow_tree(&dense, labels, bag, params)
        })
        .collect();

    Ok(ForestModel {
        format_version: MODEL_FORMAT_VERSION,
        params: params.clone(),
        lexicon_version: version.clone(),
        n_features,
        label_scale: scale,
        label_min,
        label_max,
        trees,
    })
}

/// Grow one CART tree on a bootstrap bag of row indices.
fn grow_tree(xs: &[Vec<f64>], ys: &[f64], bag: Vec<usize>, params: &ForestParams) -> Tree {
    let mut nodes = Vec::new();
    grow_node(xs, ys, bag, 0, params, &mut nodes);
    Tree { nodes }
}

/// Recursively grow the subtree for `rows`, returning its arena index.
fn grow_node(
    xs: &[Vec<f64>],
    ys: &[f64],
    rows: Vec<usize>,
    depth: usize,
    params: &ForestParams,
    nodes: &mut Vec<Node>,
) -> usize {
    let n = rows.len();
    let sum: f64 = rows.iter().map(|&r| ys[r]).sum();
    let mean = sum / n as f64;

    let make_leaf = |nodes: &mut Vec<Node>| {
        let idx = nodes.len();
        nodes.push(Node::Leaf { value: mean });
        idx
    };

    if depth >= params.max_depth || n < 2 * params.min_leaf {
        return make_leaf(nodes);
    }
    let node_sse: f64 = rows.iter().map(|&r| (ys[r] - mean).powi(2)).sum();
    if node_sse <= 1e-12 {
        return make_leaf(nodes); // already pure
    }

    // Exhaustive scan: for each feature, sort the rows and sweep every
    // boundary between distinct values, tracking the split with the lowest
    // total child SSE. Ties keep the first (lowest feature index, lowest
    // threshold), which makes training order-deterministic.
    let n_features = xs[rows[0]].len();
    let mut best: Option<(f64, usize, f64)> = None; // (sse, feature, threshold)
    let mut scratch: Vec<(f64, f64)> = Vec::with_capacity(n);
    // The index is the feature id recorded in the split, so a range loop is
    // the honest shape here.
    #[allow(clippy::needless_range_loop)]
    for feature in 0..n_features {
        scratch.clear();
        scratch.extend(rows.iter().map(|&r| (xs[r][feature], ys[r])));
        scratch.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite features"));
        if scratch[0].0 == scratch[n - 1].0 {
            continue; // constant feature in this node
        }
        // Prefix sums over the sorted order let each candidate split be
        // scored in O(1): SSE = Σy² − (Σy)²/n per side.
        let mut left_sum = 0.0;
        let mut left_sq = 0.0;
        let total_sum: f64 = scratch.iter().map(|p| p.1).sum();
        let total_sq: f64 = scratch.iter().map(|p| p.1 * p.1).sum();
        for k in 1..n {
            left_sum += scratch[k - 1].1;
            left_sq += scratch[k - 1].1 * scratch[k - 1].1;
            if scratch[k - 1].0 == scratch[k].0 {
                continue; // not a boundary between distinct values
            }
            if k < params.min_leaf || n - k < params.min_leaf {
                continue;
            }
            let right_sum = total_sum - left_sum;
            let right_sq = total_sq - left_sq;
            let sse = (left_sq - left_sum * left_sum / k as f64)
                + (right_sq - right_sum * right_sum / (n - k) as f64);
            if best.is_none_or(|(b, _, _)| sse < b) {
                let threshold = (scratch[k - 1].0 + scratch[k].0) / 2.0;
                best = Some((sse, feature, threshold));
            }
        }
    }

    let Some((_, feature, threshold)) = best else {
        return make_leaf(nodes);
    };
    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
        rows.into_iter().partition(|&r| xs[r][feature] <= threshold);
    // Reserve this node's slot before growing children so the arena index
    // is stable.
    let idx = nodes.len();
    nodes.push(Node::Leaf { value: mean }); // placeholder
    let left = grow_node(xs, ys, left_rows, depth + 1, params, nodes);
    let right = grow_node(xs, ys, right_rows, depth + 1, params, nodes);
    nodes[idx] = Node::Split {
        feature,
        threshold,
        left,
        right,
    };
    idx
}

impl ForestModel {
    /// Predict from an already-dense feature vector, on the raw 0–10 scale.
    pub fn predict_dense(&self, x: &[f64]) -> Result<f64, ScorerError> {
        if x.len() != self.n_features {
            return Err(ScorerError::FeatureShapeMismatch {
                expected: self.n_features,
                found: x.len(),
            });
        }
        let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        let raw = sum / self.trees.len() as f64;
        // Leaves are means of training labels, so raw already lies in
        // [label_min, label_max]; the clamp only absorbs float dust.
        Ok(raw.clamp(self.label_min, self.label_max))
    }

    /// Number of trees (equals `params.n_trees`).
    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }

    /// Serialise to the versioned JSON dump format.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serialises")
    }

    /// Parse a model from its JSON dump, rejecting unknown format versions.
    pub fn from_json(json: &str) -> Result<ForestModel, ScorerError> {
        let model: ForestModel =
            serde_json::from_str(json).map_err(|e| ScorerError::ModelFormat {
                detail: e.to_string(),
            })?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(ScorerError::ModelFormat {
                detail: format!(
                    "unsupported model format version {} (supported: {})",
                    model.format_version, MODEL_FORMAT_VERSION
                ),
            });
        }
        Ok(model)
    }

    /// Write the JSON dump to a file.
    pub fn save(&self, path: &Path) -> Result<(), ScorerError> {
        std::fs::write(path, self.to_json()).map_err(|e| ScorerError::ModelFormat {
            detail: format!("{}: {e}", path.display()),
        })
    }

    /// Load a JSON dump from a file.
    pub fn load(path: &Path) -> Result<ForestModel, ScorerError> {
        let body = std::fs::read_to_string(path).map_err(|e| ScorerError::ModelFormat {
            detail: format!("{}: {e}", path.display()),
        })?;
        Self::from_json(&body)
    }
}

/// Score a text with a trained forest: extract features with `lexicon`,
/// verify the version matches training, and average the trees.
pub fn predict_forest(
    model: &ForestModel,
    text: &str,
    lexicon: &MarkerLexicon,
) -> Result<AssertivenessScore, ScorerError> {
    if lexicon.version() != model.lexicon_version {
        return Err(ScorerError::LexiconVersionMismatch {
            model: model.lexicon_version.clone(),
            lexicon: lexicon.version().to_string(),
        });
    }
    let features = extract_features(text, lexicon)?;
    let raw = model.predict_dense(&features.dense())?;
    let value = model.label_scale.to_unit(raw).clamp(0.0, 1.0);
    Ok(AssertivenessScore {
        value,
        raw_value: raw,
        scorer_id: "forest".to_string(),
        clamped: false,
        retries_used: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn lexicon() -> MarkerLexicon {
        MarkerLexicon::new(
            "test-v1",
            ["might", "possibly", "perhaps", "unclear"]
                .map(String::from)
                .to_vec(),
            ["certainly", "definitely", "clearly", "undeniable"]
                .map(String::from)
                .to_vec(),
        )
        .unwrap()
    }

    /// Synthetic text with the requested number of hedge/booster/neutral
    /// tokens, cycling through the test lexicon.
    fn synthetic_text(hedges: usize, boosters: usize, neutral: usize) -> String {
        let h = ["might", "possibly", "perhaps", "unclear"];
        let b = ["certainly", "definitely", "clearly", "undeniable"];
        let n = ["the", "data", "report", "shows", "value"];
        let mut words = Vec::new();
        for i in 0..hedges {
            words.push(h[i % h.len()]);
        }
        for i in 0..boosters {
            words.push(b[i % b.len()]);
        }
        for i in 0..neutral {
            words.push(n[i % n.len()]);
        }
        words.join(" ")
    }

    #[test]
    fn constant_labels_predict_the_constant() {
        let lex = lexicon();
        let features: Vec<FeatureVector> = (0..10)
            .map(|i| extract_features(&synthetic_text(i % 3, (i + 1) % 4, 5), &lex).unwrap())
            .collect();
        let labels = vec![7.0; 10];
        let model = train_forest(&features, &labels, &ForestParams::default()).unwrap();
        for text in ["anything at all", "might might might", "certainly so"] {
            let score = predict_forest(&model, text, &lex).unwrap();
            assert_abs_diff_eq!(score.raw_value, 7.0, epsilon = 1e-12);
            assert_abs_diff_eq!(score.value, 0.7, epsilon = 1e-12);
        }
    }

    #[test]
    fn learns_booster_hedge_signal_beating_mean_predictor() {
        // label = 5 + 4·booster_rate − 4·hedge_rate + noise(σ=0.3), which a
        // variance-split forest should recover far better than the mean
        // predictor whose MSE equals the label variance.
        let lex = lexicon();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut make_set = |count: usize| {
            let mut feats = Vec::new();
            let mut labels = Vec::new();
            let mut texts = Vec::new();
            for _ in 0..count {
                let hedges = rng.random_range(0..8usize);
                let boosters = rng.random_range(0..8usize);
                let neutral = rng.random_range(4..10usize);
                let text = synthetic_text(hedges, boosters, neutral);
                let f = extract_features(&text, &lex).unwrap();
                let noise: f64 = rng.random_range(-0.3..0.3);
                let label =
                    (5.0 + 4.0 * f.booster_rate - 4.0 * f.hedge_rate + noise).clamp(0.0, 10.0);
                feats.push(f);
                labels.push(label);
                texts.push(text);
            }
            (feats, labels, texts)
        };
        let (train_f, train_y, _) = make_set(300);
        let (test_f, test_y, _) = make_set(120);
        let model = train_forest(&train_f, &train_y, &ForestParams::default()).unwrap();

        let preds: Vec<f64> = test_f
            .iter()
            .map(|f| model.predict_dense(&f.dense()).unwrap())
            .collect();
        let mse = preds
            .iter()
            .zip(&test_y)
            .map(|(p, y)| (p - y) * (p - y))
            .sum::<f64>()
            / preds.len() as f64;
        let var = crate::stats::population_variance(&test_y);
        assert!(
            mse <= 0.5 * var,
            "forest should halve the mean-predictor MSE: mse={mse:.4}, label var={var:.4}"
        );
    }

    #[test]
    fn same_seed_gives_bitwise_identical_predictions() {
        let lex = lexicon();
        let feats: Vec<FeatureVector> = (0..30)
            .map(|i| {
                extract_features(&synthetic_text(i % 5, (i * 3) % 5, 3 + i % 4), &lex).unwrap()
            })
            .collect();
        let labels: Vec<f64> = (0..30).map(|i| (i % 11) as f64).collect();
        let params = ForestParams {
            n_trees: 50,
            ..ForestParams::default()
        };
        let m1 = train_forest(&feats, &labels, &params).unwrap();
        let m2 = train_forest(&feats, &labels, &params).unwrap();
        assert_eq!(m1, m2);
        for i in 0..10 {
            let text = synthetic_text(i, 10 - i, 5);
            let p1 = predict_forest(&m1, &text, &lex).unwrap();
            let p2 = predict_forest(&m2, &text, &lex).unwrap();
            assert_eq!(p1.raw_value.to_bits(), p2.raw_value.to_bits());
        }
        // A different seed must change at least one prediction.
        let m3 = train_forest(
            &feats,
            &labels,
            &ForestParams {
                seed: 1,
                ..params.clone()
            },
        )
        .unwrap();
        assert_ne!(m1, m3);
    }

    #[test]
    fn prediction_is_mean_of_tree_traversals() {
        // Single-tree oracle: traverse each tree by hand and average.
        let lex = lexicon();
        let feats: Vec<FeatureVector> = (0..40)
            .map(|i| {
                extract_features(&synthetic_text(i % 6, (i * 2) % 6, 4), &lex).unwrap()
            })
            .collect();
        let labels: Vec<f64> = (0..40).map(|i| ((i * 7) % 11) as f64).collect();
        let params = ForestParams {
            n_trees: 7,
            max_depth: 4,
            ..ForestParams::default()
        };
        let model = train_forest(&feats, &labels, &params).unwrap();
        let probe = extract_features(&synthetic_text(2, 3, 5), &lex).unwrap();
        let x = probe.dense();
        // Oracle: walk the serialised tree dump independently.
        let dump: serde_json::Value = serde_json::from_str(&model.to_json()).unwrap();
        let mut sum = 0.0;
        let trees = dump["trees"].as_array().unwrap();
        assert_eq!(trees.len(), 7);
        for tree in trees {
            let nodes = tree["nodes"].as_array().unwrap();
            let mut idx = 0usize;
            loop {
                let node = &nodes[idx];
                match node["kind"].as_str().unwrap() {
                    "leaf" => {
                        sum += node["value"].as_f64().unwrap();
                        break;
                    }
                    "split" => {
                        let f = node["feature"].as_u64().unwrap() as usize;
                        let t = node["threshold"].as_f64().unwrap();
                        idx = if x[f] <= t {
                            node["left"].as_u64().unwrap() as usize
                        } else {
                            node["right"].as_u64().unwrap() as usize
                        };
                    }
                    other => panic!("unknown node kind {other}"),
                }
            }
        }
        let oracle = sum / 7.0;
        let ours = model.predict_dense(&x).unwrap();
        assert_abs_diff_eq!(ours, oracle, epsilon = 1e-12);
    }

    #[test]
    fn leaves_stay_within_label_range_and_trees_match_params() {
        let lex = lexicon();
        let feats: Vec<FeatureVector> = (0..25)
            .map(|i| extract_features(&synthetic_text(i % 4, i % 3, 5), &lex).unwrap())
            .collect();
        let labels: Vec<f64> = (0..25).map(|i| 2.0 + (i % 7) as f64).collect();
        let model = train_forest(&feats, &labels, &ForestParams::default()).unwrap();
        assert_eq!(model.tree_count(), model.params.n_trees);
        for tree in &model.trees {
            for node in &tree.nodes {
                if let Node::Leaf { value } = node {
                    assert!(
                        (model.label_min..=model.label_max).contains(value),
                        "leaf {value} outside [{}, {}]",
                        model.label_min,
                        model.label_max
                    );
                }
            }
        }
    }

    #[test]
    fn constant_features_with_varying_labels_degrade_to_mean() {
        // No feature separates the rows, so every tree is a single leaf
        // holding the mean of its bootstrap bag; the forest average is a
        // bagged estimate of the label mean (standard error σ/√(n·trees),
        // here ≈ 0.06 — assert a comfortable 5-sigma band).
        let lex = lexicon();
        let feats: Vec<FeatureVector> = (0..12)
            .map(|_| extract_features("the data report shows value", &lex).unwrap())
            .collect();
        let labels: Vec<f64> = (0..12).map(|i| (i % 10) as f64).collect();
        let model = train_forest(&feats, &labels, &ForestParams::default()).unwrap();
        let pred = model.predict_dense(&feats[0].dense()).unwrap();
        assert_abs_diff_eq!(pred, crate::stats::mean(&labels), epsilon = 0.3);
        // And every tree individually must be a bare leaf.
        for tree in &model.trees {
            assert_eq!(tree.nodes.len(), 1, "constant features must not split");
        }
    }

    #[test]
    fn lexicon_version_mismatch_is_rejected() {
        let lex = lexicon();
        let feats: Vec<FeatureVector> = (0..10)
            .map(|i| extract_features(&synthetic_text(i % 3, i % 2, 4), &lex).unwrap())
            .collect();
        let labels = vec![5.0; 10];
        let model = train_forest(&feats, &labels, &ForestParams::default()).unwrap();
        let other = MarkerLexicon::new(
            "other-v9",
            vec!["might".to_string()],
            vec!["certainly".to_string()],
        )
        .unwrap();
        assert!(matches!(
            predict_forest(&model, "might rain", &other),
            Err(ScorerError::LexiconVersionMismatch { .. })
        ));
    }

    #[test]
    fn training_validates_inputs() {
        let lex = lexicon();
        let f = extract_features("some words here", &lex).unwrap();
        assert!(matches!(
            train_forest(std::slice::from_ref(&f), &[1.0, 2.0], &ForestParams::default()),
            Err(ScorerError::TrainingDataInvalid { .. })
        ));
        assert!(matches!(
            train_forest(
                &[f.clone(), f.clone(), f.clone()],
                &[1.0, 2.0, 11.0],
                &ForestParams::default()
            ),
            Err(ScorerError::TrainingDataInvalid { .. })
        ));
        assert!(matches!(
            train_forest(std::slice::from_ref(&f), &[1.0], &ForestParams::default()),
            Err(ScorerError::TrainingDataInvalid { .. }) // below min_leaf
        ));
    }

    #[test]
    fn model_json_round_trips_and_rejects_future_versions() {
        let lex = lexicon();
        let feats: Vec<FeatureVector> = (0..10)
            .map(|i| extract_features(&synthetic_text(i % 3, i % 4, 4), &lex).unwrap())
            .collect();
        let labels: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let params = ForestParams {
            n_trees: 5,
            ..ForestParams::default()
        };
        let model = train_forest(&feats, &labels, &params).unwrap();
        let back = ForestModel::from_json(&model.to_json()).unwrap();
        assert_eq!(model, back);

        let mut doc: serde_json::Value = serde_json::from_str(&model.to_json()).unwrap();
        doc["format_version"] = serde_json::json!(99);
        assert!(matches!(
            ForestModel::from_json(&doc.to_string()),
            Err(ScorerError::ModelFormat { .. })
        ));
    }

    #[test]
    fn prediction_invariant_under_tree_permutation() {
        let lex = lexicon();
        let feats: Vec<FeatureVector> = (0..20)
            .map(|i| extract_features(&synthetic_text(i % 5, (i * 3) % 4, 5), &lex).unwrap())
            .collect();
        let labels: Vec<f64> = (0..20).map(|i| ((i * 3) % 11) as f64).collect();
        let mut model = train_forest(
            &feats,
            &labels,
            &ForestParams {
                n_trees: 9,
                ..ForestParams::default()
            },
        )
        .unwrap();
        let x = feats[3].dense();
        let before = model.predict_dense(&x).unwrap();
        model.trees.reverse();
        model.trees.swap(0, 4);
        let after = model.predict_dense(&x).unwrap();
        assert_abs_diff_eq!(before, after, epsilon = 1e-12);
    }
}
