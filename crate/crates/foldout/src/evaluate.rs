//! The disposable baseline model and confusion-matrix skill scoring.
//!
//! The baseline is a one-rule decision stump: the single feature rule with
//! the lowest training error. It exists only to produce per-fold skill
//! scores; it is never persisted, and only its descriptor string survives in
//! the manifest. A [`Learner`] trait is exposed so callers can substitute
//! their own model.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnKind, Dataset, FeatureValue, Record};
use crate::error::{Error, Result};
use crate::partition::{Disposition, PartitionPlan};

pub trait Model {
    fn predict(&self, record: &Record) -> Result<String>;
}

pub trait Learner {
    fn fit(&self, train: &[&Record], kinds: &[ColumnKind]) -> Result<Box<dyn Model>>;
    fn descriptor(&self) -> String;
}

/// Majority class; ties broken by lexicographically smallest label.
fn majority<'a, I: IntoIterator<Item = &'a str>>(labels: I) -> Option<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(a.0)))
        .map(|(l, _)| l.to_string())
}

#[derive(Debug, Clone, PartialEq)]
enum StumpRule {
    Numeric {
        feature: usize,
        threshold: f64,
        below: String,
        above: String,
    },
    Categorical {
        feature: usize,
        class_of: BTreeMap<String, String>,
    },
    Constant,
}

/// Single-feature rule plus a global-majority fallback class.
#[derive(Debug, Clone, PartialEq)]
pub struct StumpModel {
    rule: StumpRule,
    fallback: String,
    n_features: usize,
    /// Set when training was degenerate (single class or no usable feature).
    pub degenerate: bool,
    training_error: usize,
}

impl StumpModel {
    pub fn describe(&self) -> String {
        match &self.rule {
            StumpRule::Numeric {
                feature, threshold, ..
            } => format!("stump(feature={feature}, threshold={threshold})"),
            StumpRule::Categorical { feature, .. } => format!("stump(feature={feature}, categorical)"),
            StumpRule::Constant => format!("stump(constant={})", self.fallback),
        }
    }
}

impl Model for StumpModel {
    fn predict(&self, record: &Record) -> Result<String> {
        if record.features.len() != self.n_features {
            return Err(Error::SchemaMismatch(format!(
                "expected {} features, found {}",
                self.n_features,
                record.features.len()
            )));
        }
        Ok(match &self.rule {
            StumpRule::Numeric {
                feature,
                threshold,
                below,
                above,
            } => match &record.features[*feature] {
                FeatureValue::Numeric(v) => {
                    if *v <= *threshold {
                        below.clone()
                    } else {
                        above.clone()
                    }
                }
                FeatureValue::Categorical(_) => {
                    return Err(Error::SchemaMismatch(format!(
                        "feature {feature} is categorical, expected numeric"
                    )));
                }
            },
            StumpRule::Categorical { feature, class_of } => match &record.features[*feature] {
                FeatureValue::Categorical(c) => class_of
                    .get(c)
                    .cloned()
                    .unwrap_or_else(|| self.fallback.clone()),
                FeatureValue::Numeric(_) => {
                    return Err(Error::SchemaMismatch(format!(
                        "feature {feature} is numeric, expected categorical"
                    )));
                }
            },
            StumpRule::Constant => self.fallback.clone(),
        })
    }
}

struct Candidate {
    rule: StumpRule,
    error: usize,
}

fn best_numeric_rule(feature: usize, train: &[&Record]) -> Option<Candidate> {
    let mut pairs: Vec<(f64, &str)> = train
        .iter()
        .map(|r| match &r.features[feature] {
            FeatureValue::Numeric(v) => (*v, r.label.as_str()),
            FeatureValue::Categorical(_) => unreachable!("kind checked by caller"),
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(b.1)));

    let classes: Vec<&str> = {
        let mut c: Vec<&str> = pairs.iter().map(|p| p.1).collect::<HashSet<_>>().into_iter().collect();
        c.sort();
        c
    };
    let class_idx = |l: &str| classes.iter().position(|&c| c == l).unwrap();
    let mut total = vec![0usize; classes.len()];
    for p in &pairs {
        total[class_idx(p.1)] += 1;
    }

    let n = pairs.len();
    let mut best: Option<(f64, usize)> = None; // (threshold, error)
    let mut below = vec![0usize; classes.len()];
    let mut i = 0;
    while i < n {
        // Advance over a run of equal values.
        let value = pairs[i].0;
        while i < n && pairs[i].0 == value {
            below[class_idx(pairs[i].1)] += 1;
            i += 1;
        }
        if i == n {
            break; // no next distinct value, so no midpoint
        }
        let threshold = (value + pairs[i].0) / 2.0;
        let n_below: usize = below.iter().sum();
        let max_below = *below.iter().max().unwrap();
        let max_above = classes
            .iter()
            .enumerate()
            .map(|(c, _)| total[c] - below[c])
            .max()
            .unwrap();
        let error = (n_below - max_below) + (n - n_below - max_above);
        // Strict comparison keeps the lowest qualifying threshold on ties.
        if best.map_or(true, |(_, e)| error < e) {
            best = Some((threshold, error));
        }
    }

    best.map(|(threshold, error)| {
        let below_labels: Vec<&str> = pairs
            .iter()
            .filter(|p| p.0 <= threshold)
            .map(|p| p.1)
            .collect();
        let above_labels: Vec<&str> = pairs
            .iter()
            .filter(|p| p.0 > threshold)
            .map(|p| p.1)
            .collect();
        Candidate {
            rule: StumpRule::Numeric {
                feature,
                threshold,
                below: majority(below_labels).unwrap(),
                above: majority(above_labels).unwrap(),
            },
            error,
        }
    })
}

fn categorical_rule(feature: usize, train: &[&Record]) -> Candidate {
    let mut by_cat: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for r in train {
        match &r.features[feature] {
            FeatureValue::Categorical(c) => {
                by_cat.entry(c.as_str()).or_default().push(r.label.as_str())
            }
            FeatureValue::Numeric(_) => unreachable!("kind checked by caller"),
        };
    }
    let mut class_of = BTreeMap::new();
    let mut error = 0;
    for (cat, labels) in &by_cat {
        let pick = majority(labels.iter().copied()).unwrap();
        error += labels.iter().filter(|&&l| l != pick).count();
        class_of.insert(cat.to_string(), pick);
    }
    Candidate {
        rule: StumpRule::Categorical {
            feature,
            class_of,
        },
        error,
    }
}

/// Fit the one-rule stump: the best single-feature rule by training error,
/// ties broken by lowest feature index, then lowest threshold.
pub fn train_stump(train: &[&Record], kinds: &[ColumnKind]) -> Result<StumpModel> {
    if train.is_empty() {
        return Err(Error::DegenerateTraining);
    }
    let fallback = majority(train.iter().map(|r| r.label.as_str())).unwrap();
    let n_features = kinds.len();
    let single_class = train.iter().all(|r| r.label == train[0].label);
    if single_class {
        return Ok(StumpModel {
            rule: StumpRule::Constant,
            fallback,
            n_features,
            degenerate: true,
            training_error: 0,
        });
    }

    let mut best: Option<Candidate> = None;
    for (feature, kind) in kinds.iter().enumerate() {
        let candidate = match kind {
            ColumnKind::Numeric => best_numeric_rule(feature, train),
            ColumnKind::Categorical => Some(categorical_rule(feature, train)),
        };
        if let Some(c) = candidate {
            if best.as_ref().map_or(true, |b| c.error < b.error) {
                best = Some(c);
            }
        }
    }
    match best {
        Some(c) => Ok(StumpModel {
            rule: c.rule,
            fallback,
            n_features,
            degenerate: false,
            training_error: c.error,
        }),
        // Every feature was constant: fall back to the majority class.
        None => Ok(StumpModel {
            rule: StumpRule::Constant,
            fallback: fallback.clone(),
            n_features,
            degenerate: true,
            training_error: train.iter().filter(|r| r.label != fallback).count(),
        }),
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StumpLearner;

impl Learner for StumpLearner {
    fn fit(&self, train: &[&Record], kinds: &[ColumnKind]) -> Result<Box<dyn Model>> {
        Ok(Box::new(train_stump(train, kinds)?))
    }

    fn descriptor(&self) -> String {
        "one-rule-decision-stump".to_string()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// Sorted union of the classes seen in truths and predictions.
    pub classes: Vec<String>,
    /// counts[t][p] = records with true class t predicted as p.
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn from_pairs(truth: &[String], predicted: &[String]) -> ConfusionMatrix {
        let mut classes: Vec<String> = truth
            .iter()
            .chain(predicted.iter())
            .cloned()
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        classes.sort();
        let idx = |c: &String| classes.iter().position(|x| x == c).unwrap();
        let mut counts = vec![vec![0usize; classes.len()]; classes.len()];
        for (t, p) in truth.iter().zip(predicted) {
            counts[idx(t)][idx(p)] += 1;
        }
        ConfusionMatrix { classes, counts }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    fn one_vs_rest(&self, class: &str) -> (usize, usize, usize) {
        let Some(c) = self.classes.iter().position(|x| x == class) else {
            return (0, 0, 0);
        };
        let tp = self.counts[c][c];
        let fp = (0..self.classes.len())
            .filter(|&t| t != c)
            .map(|t| self.counts[t][c])
            .sum();
        let fn_ = (0..self.classes.len())
            .filter(|&p| p != c)
            .map(|p| self.counts[c][p])
            .sum();
        (tp, fp, fn_)
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 { 0.0 } else { num / den }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scores {
    pub confusion: ConfusionMatrix,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub error_rate: f64,
}

fn prf(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64) {
    let precision = ratio(tp as f64, (tp + fp) as f64);
    let recall = ratio(tp as f64, (tp + fn_) as f64);
    let f1 = ratio(2.0 * precision * recall, precision + recall);
    (precision, recall, f1)
}

/// Confusion-matrix skill scores. With a positive class, binary
/// precision/recall/F1 for that class; without one, macro averages over the
/// one-vs-rest scores of every class. Any 0/0 quotient is defined as 0.
pub fn score(
    truth: &[String],
    predicted: &[String],
    positive_class: Option<&str>,
) -> Result<Scores> {
    if truth.len() != predicted.len() {
        return Err(Error::LengthMismatch(truth.len(), predicted.len()));
    }
    if truth.is_empty() {
        return Err(Error::EmptyInput);
    }
    let confusion = ConfusionMatrix::from_pairs(truth, predicted);
    let misses = truth
        .iter()
        .zip(predicted)
        .filter(|(t, p)| t != p)
        .count();
    let error_rate = misses as f64 / truth.len() as f64;

    let (precision, recall, f1) = match positive_class {
        Some(pos) => {
            let (tp, fp, fn_) = confusion.one_vs_rest(pos);
            prf(tp, fp, fn_)
        }
        None => {
            let mut sums = (0.0, 0.0, 0.0);
            for class in &confusion.classes {
                let (tp, fp, fn_) = confusion.one_vs_rest(class);
                let (p, r, f) = prf(tp, fp, fn_);
                sums = (sums.0 + p, sums.1 + r, sums.2 + f);
            }
            let c = confusion.classes.len() as f64;
            (sums.0 / c, sums.1 / c, sums.2 / c)
        }
    };
    Ok(Scores {
        confusion,
        f1,
        precision,
        recall,
        error_rate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FoldScore {
    pub fold: usize,
    pub iteration: u32,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub error_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkillReport {
    pub per_fold: Vec<FoldScore>,
    pub mean_f1: f64,
    pub mean_error: f64,
    pub model_descriptor: String,
}

fn eval_one(
    dataset: &Dataset,
    plan: &PartitionPlan,
    learner: &dyn Learner,
    positive_class: Option<&str>,
) -> Result<FoldScore> {
    let kinds = dataset.feature_kinds();
    let mut train: Vec<&Record> = Vec::new();
    let mut test: Vec<&Record> = Vec::new();
    for (i, r) in dataset.records.iter().enumerate() {
        match plan.role_of_record(i) {
            Disposition::Train => train.push(r),
            Disposition::Test => test.push(r),
            Disposition::Holdout => {}
        }
    }
    // No record stamped as holdout may reach the evaluation path, even if
    // the plan's role map was corrupted after labeling.
    let stamped_holdouts: HashSet<&str> = dataset
        .records
        .iter()
        .filter(|r| r.disposition == Some(Disposition::Holdout))
        .map(|r| r.record_id.as_str())
        .collect();
    for r in train.iter().chain(test.iter()) {
        if stamped_holdouts.contains(r.record_id.as_str()) {
            return Err(Error::HoldoutLeak(r.record_id.clone()));
        }
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::InsufficientData(
            "empty train or test fold".to_string(),
        ));
    }
    let model = learner.fit(&train, &kinds)?;
    let truth: Vec<String> = test.iter().map(|r| r.label.clone()).collect();
    let predicted: Vec<String> = test
        .iter()
        .map(|r| model.predict(r))
        .collect::<Result<_>>()?;
    let scores = score(&truth, &predicted, positive_class)?;
    Ok(FoldScore {
        fold: plan.test_fold(),
        iteration: plan.iteration,
        f1: scores.f1,
        precision: scores.precision,
        recall: scores.recall,
        error_rate: scores.error_rate,
    })
}

/// Train on TRAIN, score on TEST, discard the model. With `sweep`, the test
/// role is rotated through every non-holdout fold and a score is reported
/// per fold; results are ordered by fold index regardless of rotation order.
pub fn evaluate_plan(
    dataset: &Dataset,
    plan: &PartitionPlan,
    learner: &dyn Learner,
    positive_class: Option<&str>,
    sweep: bool,
) -> Result<SkillReport> {
    let mut per_fold = Vec::new();
    if sweep {
        let rotations = plan.num_folds() - 1;
        let mut working = plan.clone();
        for _ in 0..rotations {
            per_fold.push(eval_one(dataset, &working, learner, positive_class)?);
            working.rotate_unchecked();
        }
        per_fold.sort_by_key(|f| f.fold);
    } else {
        per_fold.push(eval_one(dataset, plan, learner, positive_class)?);
    }
    let mean_f1 = per_fold.iter().map(|f| f.f1).sum::<f64>() / per_fold.len() as f64;
    let mean_error = per_fold.iter().map(|f| f.error_rate).sum::<f64>() / per_fold.len() as f64;
    Ok(SkillReport {
        per_fold,
        mean_f1,
        mean_error,
        model_descriptor: learner.descriptor(),
    })
}
