//! Choosing k: the 5x2cv paired t-test, the fixed k=10 rule, LOOCV, and
//! .632+ bootstrap balancing.
//!
//! The t-test and the bootstrap are driven by error rate (1 - accuracy);
//! F1 drives the balance check. The t critical value for 5 degrees of
//! freedom at two-sided alpha 0.05 is compiled in rather than pulled from a
//! statistics library, so it can be checked against any t-table.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::dataset::{ColumnKind, Dataset, Record};
use crate::error::{Error, Result};
use crate::evaluate::{evaluate_plan, Learner, Model, SkillReport};
use crate::partition::{build_plan, PlanMode, PlanRequest, SplitMix64};

/// Two-sided t critical value, 5 degrees of freedom, alpha = 0.05.
pub const T_CRITICAL_5DF: f64 = 2.571;

/// Default number of bootstrap resamples.
pub const DEFAULT_BOOTSTRAP_B: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Replication {
    pub p1: f64,
    pub p2: f64,
    pub pbar: f64,
    pub s2: f64,
}

/// Outcome of a 5x2cv paired t-test. When every replication has zero
/// variance but a nonzero first difference the statistic is undefined;
/// `zero_variance` marks that outcome instead of crashing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiveByTwoResult {
    pub per_replication: Vec<Replication>,
    pub t_stat: Option<f64>,
    pub significant: bool,
    pub zero_variance: bool,
}

/// The t statistic from the five per-replication difference pairs:
/// t = p1 of replication 1 over sqrt(mean of the five variances), with the
/// 0/0 case defined as 0.
pub fn five_by_two_statistic(diffs: &[(f64, f64); 5]) -> FiveByTwoResult {
    let per_replication: Vec<Replication> = diffs
        .iter()
        .map(|&(p1, p2)| {
            let pbar = (p1 + p2) / 2.0;
            let s2 = (p1 - pbar).powi(2) + (p2 - pbar).powi(2);
            Replication { p1, p2, pbar, s2 }
        })
        .collect();
    let mean_s2: f64 = per_replication.iter().map(|r| r.s2).sum::<f64>() / 5.0;
    let first = diffs[0].0;
    if mean_s2 == 0.0 {
        if first == 0.0 {
            return FiveByTwoResult {
                per_replication,
                t_stat: Some(0.0),
                significant: false,
                zero_variance: false,
            };
        }
        return FiveByTwoResult {
            per_replication,
            t_stat: None,
            significant: false,
            zero_variance: true,
        };
    }
    let t = first / mean_s2.sqrt();
    FiveByTwoResult {
        per_replication,
        t_stat: Some(t),
        significant: t.abs() > T_CRITICAL_5DF,
        zero_variance: false,
    }
}

fn error_rate_of(
    learner: &dyn Learner,
    train: &[&Record],
    test: &[&Record],
    kinds: &[ColumnKind],
) -> Result<f64> {
    let model = learner.fit(train, kinds)?;
    let mut misses = 0usize;
    for r in test {
        if model.predict(r)? != r.label {
            misses += 1;
        }
    }
    Ok(misses as f64 / test.len() as f64)
}

/// 5x2cv paired t-test between two configurations: five seeded replications
/// of a 50/50 split, each half trained and tested both ways, comparing the
/// per-half error differences.
pub fn five_by_two_ttest(
    records: &[&Record],
    kinds: &[ColumnKind],
    config_a: &dyn Learner,
    config_b: &dyn Learner,
    seed: u64,
) -> Result<FiveByTwoResult> {
    let n = records.len();
    if n < 10 {
        return Err(Error::InsufficientData(format!(
            "5x2cv needs at least 10 records, got {n}"
        )));
    }
    let mut master = SplitMix64::new(seed);
    let mut diffs = [(0.0, 0.0); 5];
    for diff in &mut diffs {
        let rep_seed = master.next_u64();
        let perm = crate::partition::shuffle(n, rep_seed);
        let half1: Vec<&Record> = perm[..n / 2].iter().map(|&i| records[i]).collect();
        let half2: Vec<&Record> = perm[n / 2..].iter().map(|&i| records[i]).collect();
        let p1 = error_rate_of(config_a, &half1, &half2, kinds)?
            - error_rate_of(config_b, &half1, &half2, kinds)?;
        let p2 = error_rate_of(config_a, &half2, &half1, kinds)?
            - error_rate_of(config_b, &half2, &half1, kinds)?;
        *diff = (p1, p2);
    }
    Ok(five_by_two_statistic(&diffs))
}

/// No-information error rate: sum over classes of p_c * (1 - q_c), where
/// p_c is the class proportion among truths and q_c the proportion of
/// predictions equal to that class.
pub fn no_information_error(truth: &[String], predicted: &[String]) -> f64 {
    let n = truth.len() as f64;
    let mut p: BTreeMap<&str, f64> = BTreeMap::new();
    let mut q: BTreeMap<&str, f64> = BTreeMap::new();
    for t in truth {
        *p.entry(t.as_str()).or_default() += 1.0 / n;
    }
    for pr in predicted {
        *q.entry(pr.as_str()).or_default() += 1.0 / n;
    }
    p.iter()
        .map(|(class, &pc)| pc * (1.0 - q.get(class).copied().unwrap_or(0.0)))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bootstrap632Report {
    pub err_train: f64,
    pub err_boot: f64,
    pub gamma: f64,
    pub relative_overfit: f64,
    pub weight: f64,
    pub err_632plus: f64,
    pub resamples: usize,
}

/// The .632+ combination rule. R is clipped to [0, 1] and forced to 0 when
/// the bootstrap error does not exceed the resubstitution error or the
/// no-information rate does not exceed it.
pub fn combine_632_plus(err_train: f64, err_boot: f64, gamma: f64) -> (f64, f64, f64) {
    let r = if err_boot <= err_train || gamma <= err_train {
        0.0
    } else {
        ((err_boot - err_train) / (gamma - err_train)).clamp(0.0, 1.0)
    };
    let w = 0.632 / (1.0 - 0.368 * r);
    let err = (1.0 - w) * err_train + w * err_boot;
    (r, w, err)
}

/// Leave-out bootstrap plus resubstitution, blended by the .632+ rule.
/// Resamples with no out-of-bag records are redrawn.
pub fn bootstrap_632_plus(
    records: &[&Record],
    kinds: &[ColumnKind],
    learner: &dyn Learner,
    resamples: usize,
    seed: u64,
) -> Result<Bootstrap632Report> {
    let n = records.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "bootstrap needs at least 2 records, got {n}"
        )));
    }
    if resamples == 0 {
        return Err(Error::InsufficientData("B must be at least 1".into()));
    }

    let full_model = learner.fit(records, kinds)?;
    let truth: Vec<String> = records.iter().map(|r| r.label.clone()).collect();
    let predicted: Vec<String> = records
        .iter()
        .map(|r| full_model.predict(r))
        .collect::<Result<_>>()?;
    let err_train = truth
        .iter()
        .zip(&predicted)
        .filter(|(t, p)| t != p)
        .count() as f64
        / n as f64;
    let gamma = no_information_error(&truth, &predicted);

    let mut rng = SplitMix64::new(seed);
    let mut total = 0.0;
    for _ in 0..resamples {
        let (sample, oob) = loop {
            let mut chosen = vec![false; n];
            let mut sample = Vec::with_capacity(n);
            for _ in 0..n {
                let i = (rng.next_u64() % n as u64) as usize;
                chosen[i] = true;
                sample.push(records[i]);
            }
            let oob: Vec<&Record> = (0..n).filter(|&i| !chosen[i]).map(|i| records[i]).collect();
            if !oob.is_empty() {
                break (sample, oob);
            }
        };
        total += error_rate_of(learner, &sample, &oob, kinds)?;
    }
    let err_boot = total / resamples as f64;
    let (relative_overfit, weight, err_632plus) = combine_632_plus(err_train, err_boot, gamma);
    Ok(Bootstrap632Report {
        err_train,
        err_boot,
        gamma,
        relative_overfit,
        weight,
        err_632plus,
        resamples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Strategy {
    Representative,
    Fixed10,
    Loocv,
    BootstrapBalanced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KCandidate {
    pub k: usize,
    pub mean_error: f64,
    pub mean_f1: f64,
    pub f1_spread: Option<f64>,
    pub err_632plus: Option<f64>,
    pub t_vs_best: Option<f64>,
    pub significant: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KSelectionReport {
    pub strategy: Strategy,
    pub candidates: Vec<KCandidate>,
    pub chosen_k: usize,
    pub rationale: String,
}

/// A learner that trains on a seeded subsample of whatever training set it
/// is handed. Stands in for the training-set fraction implied by a candidate
/// k: a k-fold split trains on (k-2)/k of the non-holdout data.
pub struct SubsampleLearner<'a> {
    pub base: &'a dyn Learner,
    pub fraction: f64,
    pub seed: u64,
}

impl Learner for SubsampleLearner<'_> {
    fn fit(&self, train: &[&Record], kinds: &[ColumnKind]) -> Result<Box<dyn Model>> {
        if self.fraction >= 1.0 {
            return self.base.fit(train, kinds);
        }
        let m = ((train.len() as f64 * self.fraction).ceil() as usize).max(1);
        let perm = crate::partition::shuffle(train.len(), self.seed ^ train.len() as u64);
        let subset: Vec<&Record> = perm[..m].iter().map(|&i| train[i]).collect();
        self.base.fit(&subset, kinds)
    }

    fn descriptor(&self) -> String {
        format!("{}@frac={:.4}", self.base.descriptor(), self.fraction)
    }
}

fn train_fraction(k: usize) -> f64 {
    (k as f64 - 2.0) / k as f64
}

/// Records available for k selection: the non-holdout pool when the dataset
/// is already labeled (the holdout stays analysis-naive), everything
/// otherwise.
fn selection_pool(dataset: &Dataset) -> Dataset {
    let mut pool = dataset.clone();
    if pool.records.iter().any(|r| r.is_labeled()) {
        pool.records.retain(|r| {
            r.disposition != Some(crate::partition::Disposition::Holdout)
        });
    }
    for r in &mut pool.records {
        r.disposition = None;
        r.hash_key = None;
    }
    pool
}

struct SweepOutcome {
    mean_error: f64,
    mean_f1: f64,
    f1_spread: f64,
}

fn sweep_candidate(
    pool: &Dataset,
    k: usize,
    learner: &dyn Learner,
    positive_class: Option<&str>,
    seed: u64,
) -> Result<SweepOutcome> {
    let mut working = pool.clone();
    let (plan, _) = build_plan(&mut working, &PlanRequest::kfold("kselect", seed, k))?;
    let report = evaluate_plan(&working, &plan, learner, positive_class, true)?;
    let (min, max) = report.per_fold.iter().fold((f64::MAX, f64::MIN), |(lo, hi), f| {
        (lo.min(f.f1), hi.max(f.f1))
    });
    Ok(SweepOutcome {
        mean_error: report.mean_error,
        mean_f1: report.mean_f1,
        f1_spread: max - min,
    })
}

/// Inputs for [`select_k`].
pub struct KSelectionConfig<'a> {
    pub strategy: Strategy,
    pub candidates: Vec<usize>,
    pub resamples: usize,
    pub seed: u64,
    pub holdout_frac: f64,
    pub positive_class: Option<&'a str>,
}

pub fn select_k(
    dataset: &Dataset,
    learner: &dyn Learner,
    config: &KSelectionConfig,
) -> Result<KSelectionReport> {
    let pool = selection_pool(dataset);
    let n = pool.len();
    let kinds = pool.feature_kinds();
    let refs: Vec<&Record> = pool.records.iter().collect();

    match config.strategy {
        Strategy::Fixed10 => {
            let mut rationale = String::from("k fixed to 10");
            let k = if n < 10 {
                rationale = format!("k fixed to 10, clamped to n={n} (warning: fewer than 10 records)");
                n
            } else {
                10
            };
            if k < 3 {
                return Err(Error::InsufficientData(format!(
                    "n={n} cannot host a three-way split"
                )));
            }
            let sweep = sweep_candidate(&pool, k, learner, config.positive_class, config.seed)?;
            Ok(KSelectionReport {
                strategy: Strategy::Fixed10,
                candidates: vec![KCandidate {
                    k,
                    mean_error: sweep.mean_error,
                    mean_f1: sweep.mean_f1,
                    f1_spread: Some(sweep.f1_spread),
                    err_632plus: None,
                    t_vs_best: None,
                    significant: None,
                }],
                chosen_k: k,
                rationale,
            })
        }
        Strategy::Loocv => {
            let total = dataset.len();
            let labeled = dataset.records.iter().any(|r| r.is_labeled());
            let (working, plan) = if labeled {
                // Keep the established holdout; each pool record becomes its
                // own singleton fold, in seeded shuffled order.
                let pool_indices: Vec<usize> = dataset
                    .records
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| {
                        r.disposition != Some(crate::partition::Disposition::Holdout)
                    })
                    .map(|(i, _)| i)
                    .collect();
                let k = pool_indices.len();
                if k < 2 {
                    return Err(Error::InsufficientData(format!(
                        "LOOCV needs at least 2 non-holdout records, got {k}"
                    )));
                }
                let perm = crate::partition::shuffle(k, config.seed);
                let mut fold_of_record = vec![0usize; total];
                for (slot, &p) in perm.iter().enumerate() {
                    fold_of_record[pool_indices[p]] = slot + 1;
                }
                let plan = crate::partition::PartitionPlan {
                    study_id: "kselect".into(),
                    seed: config.seed,
                    k,
                    mode: PlanMode::Loocv,
                    stratify: false,
                    holdout_frac: Some((total - k) as f64 / total as f64),
                    iteration: 0,
                    role_of_fold: crate::partition::assign_dispositions(k + 1)?,
                    fold_of_record,
                };
                (dataset.clone(), plan)
            } else {
                let mut working = dataset.clone();
                let (plan, _) = build_plan(
                    &mut working,
                    &PlanRequest::loocv("kselect", config.seed, config.holdout_frac),
                )?;
                (working, plan)
            };
            let holdout = total - plan.k;
            let k = plan.k;
            let report = evaluate_plan(&working, &plan, learner, config.positive_class, true)?;
            Ok(KSelectionReport {
                strategy: Strategy::Loocv,
                candidates: vec![KCandidate {
                    k: plan.k,
                    mean_error: report.mean_error,
                    mean_f1: report.mean_f1,
                    f1_spread: None,
                    err_632plus: None,
                    t_vs_best: None,
                    significant: None,
                }],
                chosen_k: k,
                rationale: format!(
                    "leave-one-out: k = n - holdout = {total} - {holdout} = {k}"
                ),
            })
        }
        Strategy::Representative | Strategy::BootstrapBalanced => {
            if config.candidates.is_empty() {
                return Err(Error::InsufficientData(
                    "candidate list must be non-empty".into(),
                ));
            }
            for &k in &config.candidates {
                if k < 3 || k > n {
                    return Err(Error::InvalidCandidate(k));
                }
            }
            let mut sweeps = Vec::with_capacity(config.candidates.len());
            for &k in &config.candidates {
                sweeps.push(sweep_candidate(
                    &pool,
                    k,
                    learner,
                    config.positive_class,
                    config.seed,
                )?);
            }

            if config.strategy == Strategy::Representative {
                let best_pos = (0..sweeps.len())
                    .min_by(|&a, &b| {
                        sweeps[a]
                            .mean_error
                            .partial_cmp(&sweeps[b].mean_error)
                            .unwrap()
                            .then(config.candidates[a].cmp(&config.candidates[b]))
                    })
                    .unwrap();
                let best_k = config.candidates[best_pos];
                let best_config = SubsampleLearner {
                    base: learner,
                    fraction: train_fraction(best_k),
                    seed: config.seed,
                };
                let mut candidates = Vec::new();
                let mut indistinct = Vec::new();
                for (i, &k) in config.candidates.iter().enumerate() {
                    let (t, sig) = if i == best_pos {
                        (None, None)
                    } else {
                        let alt = SubsampleLearner {
                            base: learner,
                            fraction: train_fraction(k),
                            seed: config.seed,
                        };
                        let result = five_by_two_ttest(
                            &refs,
                            &kinds,
                            &alt,
                            &best_config,
                            config.seed.wrapping_add(k as u64),
                        )?;
                        if !result.significant && !result.zero_variance {
                            indistinct.push(k);
                        }
                        (result.t_stat, Some(result.significant))
                    };
                    candidates.push(KCandidate {
                        k,
                        mean_error: sweeps[i].mean_error,
                        mean_f1: sweeps[i].mean_f1,
                        f1_spread: Some(sweeps[i].f1_spread),
                        err_632plus: None,
                        t_vs_best: t,
                        significant: sig,
                    });
                }
                let ties = config
                    .candidates
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| {
                        i != best_pos && sweeps[i].mean_error == sweeps[best_pos].mean_error
                    })
                    .map(|(_, &k)| k)
                    .collect::<Vec<_>>();
                let mut rationale = format!("lowest mean rotated-CV error at k={best_k}");
                if !ties.is_empty() {
                    rationale.push_str(&format!(
                        "; error tied with k={ties:?}, smallest k wins"
                    ));
                }
                if !indistinct.is_empty() {
                    rationale.push_str(&format!(
                        "; statistically indistinguishable alternatives (5x2cv): {indistinct:?}"
                    ));
                }
                Ok(KSelectionReport {
                    strategy: Strategy::Representative,
                    candidates,
                    chosen_k: best_k,
                    rationale,
                })
            } else {
                let mut candidates = Vec::new();
                for (i, &k) in config.candidates.iter().enumerate() {
                    let configured = SubsampleLearner {
                        base: learner,
                        fraction: train_fraction(k),
                        seed: config.seed,
                    };
                    let boot = bootstrap_632_plus(
                        &refs,
                        &kinds,
                        &configured,
                        config.resamples,
                        config.seed.wrapping_add(k as u64),
                    )?;
                    candidates.push(KCandidate {
                        k,
                        mean_error: sweeps[i].mean_error,
                        mean_f1: sweeps[i].mean_f1,
                        f1_spread: Some(sweeps[i].f1_spread),
                        err_632plus: Some(boot.err_632plus),
                        t_vs_best: None,
                        significant: None,
                    });
                }
                let chosen = candidates
                    .iter()
                    .min_by(|a, b| {
                        a.f1_spread
                            .unwrap()
                            .partial_cmp(&b.f1_spread.unwrap())
                            .unwrap()
                            .then(
                                a.err_632plus
                                    .unwrap()
                                    .partial_cmp(&b.err_632plus.unwrap())
                                    .unwrap(),
                            )
                            .then(a.k.cmp(&b.k))
                    })
                    .unwrap()
                    .k;
                Ok(KSelectionReport {
                    strategy: Strategy::BootstrapBalanced,
                    candidates,
                    chosen_k: chosen,
                    rationale: format!(
                        "most equivalent per-fold skill (smallest F1 spread) at k={chosen}, ties broken by err_632plus then smallest k"
                    ),
                })
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BalanceReport {
    pub balanced: bool,
    pub f1_spread: f64,
    /// Per-fold deviation of F1 from the mean.
    pub deviations: Vec<(usize, f64)>,
    pub sizes_balanced: bool,
}

impl BalanceReport {
    pub fn pass(&self) -> bool {
        self.balanced && self.sizes_balanced
    }
}

/// True when the per-fold F1 spread stays within tolerance; fold sizes are
/// checked for the at-most-one rule alongside.
pub fn balance_check(skill: &SkillReport, fold_sizes: &[usize], tolerance: f64) -> BalanceReport {
    assert!(skill.per_fold.len() >= 2, "balance check needs >= 2 folds");
    let (min, max) = skill
        .per_fold
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), f| (lo.min(f.f1), hi.max(f.f1)));
    let spread = max - min;
    let deviations = skill
        .per_fold
        .iter()
        .map(|f| (f.fold, f.f1 - skill.mean_f1))
        .collect();
    let sizes_balanced = match (fold_sizes.iter().max(), fold_sizes.iter().min()) {
        (Some(&hi), Some(&lo)) => hi - lo <= 1,
        _ => true,
    };
    BalanceReport {
        balanced: spread <= tolerance,
        f1_spread: spread,
        deviations,
        sizes_balanced,
    }
}
