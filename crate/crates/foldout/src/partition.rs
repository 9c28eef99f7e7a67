//! Deterministic shuffling, fold construction, role assignment, and
//! disposition hash keys.
//!
//! The shuffle is Fisher-Yates driven by SplitMix64 with a modulo draw,
//! pinned so a partition can be reproduced bit-exactly in any language from
//! `(n, seed)` alone. The modulo bias is negligible for n far below 2^64 and
//! is accepted in exchange for an exactly specified procedure.
//!
//! Fold 0 in shuffled order is the holdout, fold 1 the test set, and the
//! remaining folds are training data. Rotating the test fold never touches
//! fold 0, so the holdout stays analysis-naive across iterations.

use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Disposition {
    Holdout,
    Test,
    Train,
}

impl Disposition {
    pub fn as_str(self) -> &'static str {
        match self {
            Disposition::Holdout => "holdout",
            Disposition::Test => "test",
            Disposition::Train => "train",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PlanMode {
    Kfold,
    Loocv,
}

/// SplitMix64 pseudo-random generator (Steele, Lea & Flood's finalizer).
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> SplitMix64 {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

/// Fisher-Yates permutation of `[0, n)`: for i from n-1 down to 1,
/// j = next_u64() mod (i+1), swap.
pub fn shuffle(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = SplitMix64::new(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        perm.swap(i, j);
    }
    perm
}

/// Shuffle a slice in place with the given generator (same draw rule).
fn shuffle_with<T>(items: &mut [T], rng: &mut SplitMix64) {
    for i in (1..items.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        items.swap(i, j);
    }
}

/// Split `[0, n)` into k contiguous ranges: the first `n mod k` folds get
/// `ceil(n/k)` entries, the rest `floor(n/k)`.
pub fn make_folds(n: usize, k: usize) -> Result<Vec<Range<usize>>> {
    if k < 2 || k > n {
        return Err(Error::InvalidK(format!("k={k} outside [2, n={n}]")));
    }
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        folds.push(start..start + len);
        start += len;
    }
    Ok(folds)
}

/// Role map over fold indices: fold 0 holdout, fold 1 test, the rest train.
pub fn assign_dispositions(num_folds: usize) -> Result<Vec<Disposition>> {
    if num_folds < 3 {
        return Err(Error::InvalidK(format!(
            "{num_folds} folds cannot host holdout, test, and train"
        )));
    }
    let mut roles = vec![Disposition::Train; num_folds];
    roles[0] = Disposition::Holdout;
    roles[1] = Disposition::Test;
    Ok(roles)
}

/// SHA-256 of `study_id|record_id|role|seed` as 64 lowercase hex chars.
pub fn hash_key(study_id: &str, record_id: &str, role: Disposition, seed: u64) -> String {
    let preimage = format!("{study_id}|{record_id}|{}|{seed}", role.as_str());
    let digest = Sha256::digest(preimage.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

mod seed_string {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(seed)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Reproducible description of one split.
///
/// In KFOLD mode there are exactly `k` folds. In LOOCV mode `k` is the
/// cross-validation fold count over the non-holdout records (each a
/// singleton), and the holdout occupies one extra leading group, so
/// `role_of_fold` has `k + 1` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionPlan {
    pub study_id: String,
    /// Serialized as a decimal string so JSON consumers with 53-bit numbers
    /// cannot truncate it.
    #[serde(with = "seed_string")]
    pub seed: u64,
    pub k: usize,
    pub mode: PlanMode,
    pub stratify: bool,
    pub holdout_frac: Option<f64>,
    pub iteration: u32,
    pub role_of_fold: Vec<Disposition>,
    /// Fold index per record, aligned to file order.
    pub fold_of_record: Vec<usize>,
}

impl PartitionPlan {
    pub fn num_folds(&self) -> usize {
        self.role_of_fold.len()
    }

    pub fn holdout_fold(&self) -> usize {
        self.role_of_fold
            .iter()
            .position(|&r| r == Disposition::Holdout)
            .expect("plan has a holdout fold")
    }

    pub fn test_fold(&self) -> usize {
        self.role_of_fold
            .iter()
            .position(|&r| r == Disposition::Test)
            .expect("plan has a test fold")
    }

    pub fn role_of_record(&self, index: usize) -> Disposition {
        self.role_of_fold[self.fold_of_record[index]]
    }

    /// Record indices (file order) belonging to the given fold.
    pub fn fold_members(&self, fold: usize) -> Vec<usize> {
        self.fold_of_record
            .iter()
            .enumerate()
            .filter(|&(_, &f)| f == fold)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn role_counts(&self) -> RoleCounts {
        let mut counts = RoleCounts::default();
        for &fold in &self.fold_of_record {
            match self.role_of_fold[fold] {
                Disposition::Holdout => counts.holdout += 1,
                Disposition::Test => counts.test += 1,
                Disposition::Train => counts.train += 1,
            }
        }
        counts
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.num_folds()];
        for &fold in &self.fold_of_record {
            sizes[fold] += 1;
        }
        sizes
    }

    /// Advance the test role to the next non-holdout fold without the public
    /// precondition check; used by evaluation sweeps.
    pub(crate) fn rotate_unchecked(&mut self) {
        let holdout = self.holdout_fold();
        let test = self.test_fold();
        let n = self.num_folds();
        let mut next = (test + 1) % n;
        if next == holdout {
            next = (next + 1) % n;
        }
        self.role_of_fold[test] = Disposition::Train;
        self.role_of_fold[next] = Disposition::Test;
        self.iteration += 1;
    }
}

/// What to build: mode, seed, fold count, and options.
#[derive(Debug, Clone)]
pub struct PlanRequest {
    pub study_id: String,
    pub seed: u64,
    pub mode: PlanMode,
    /// KFOLD fold count; ignored in LOOCV mode.
    pub k: usize,
    pub stratify: bool,
    /// LOOCV holdout fraction; ignored in KFOLD mode.
    pub holdout_frac: f64,
}

impl PlanRequest {
    pub fn kfold(study_id: &str, seed: u64, k: usize) -> PlanRequest {
        PlanRequest {
            study_id: study_id.to_string(),
            seed,
            mode: PlanMode::Kfold,
            k,
            stratify: false,
            holdout_frac: 0.0,
        }
    }

    pub fn loocv(study_id: &str, seed: u64, holdout_frac: f64) -> PlanRequest {
        PlanRequest {
            study_id: study_id.to_string(),
            seed,
            mode: PlanMode::Loocv,
            k: 0,
            stratify: false,
            holdout_frac,
        }
    }

    pub fn with_stratify(mut self, on: bool) -> PlanRequest {
        self.stratify = on;
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RoleCounts {
    pub holdout: usize,
    pub test: usize,
    pub train: usize,
}

fn kfold_assignment(dataset: &Dataset, req: &PlanRequest) -> Result<Vec<usize>> {
    let n = dataset.len();
    let k = req.k;
    let mut fold_of_record = vec![0usize; n];
    if req.stratify {
        // Per-class shuffling, then one global round-robin deal so fold
        // sizes still differ by at most one.
        let mut by_class: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, r) in dataset.records.iter().enumerate() {
            by_class.entry(r.label.as_str()).or_default().push(i);
        }
        let mut classes: Vec<&str> = by_class.keys().copied().collect();
        classes.sort();
        let mut rng = SplitMix64::new(req.seed);
        let mut dealt = 0usize;
        for class in classes {
            let members = by_class.get_mut(class).unwrap();
            shuffle_with(members, &mut rng);
            for &idx in members.iter() {
                fold_of_record[idx] = dealt % k;
                dealt += 1;
            }
        }
    } else {
        let perm = shuffle(n, req.seed);
        let folds = make_folds(n, k)?;
        for (fold, range) in folds.iter().enumerate() {
            for pos in range.clone() {
                fold_of_record[perm[pos]] = fold;
            }
        }
    }
    Ok(fold_of_record)
}

/// Shuffle, split, assign roles, and stamp every record with its disposition
/// and hash key. The dataset is labeled in place; the returned plan fully
/// reproduces the labeling from `(fingerprint, study_id, seed, k, mode)`.
pub fn build_plan(dataset: &mut Dataset, req: &PlanRequest) -> Result<(PartitionPlan, RoleCounts)> {
    let n = dataset.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let (k, fold_of_record, role_of_fold) = match req.mode {
        PlanMode::Kfold => {
            if req.k < 3 || req.k > n {
                return Err(Error::InvalidK(format!(
                    "k={} outside [3, n={n}] for a three-way split",
                    req.k
                )));
            }
            let assignment = kfold_assignment(dataset, req)?;
            (req.k, assignment, assign_dispositions(req.k)?)
        }
        PlanMode::Loocv => {
            if !(req.holdout_frac > 0.0 && req.holdout_frac < 1.0) {
                return Err(Error::InvalidK(format!(
                    "holdout fraction {} outside (0, 1)",
                    req.holdout_frac
                )));
            }
            let h = ((n as f64) * req.holdout_frac).round().max(1.0) as usize;
            if n < h + 2 {
                return Err(Error::InsufficientData(format!(
                    "n={n} leaves fewer than 2 records after a holdout of {h}"
                )));
            }
            let k = n - h;
            let perm = shuffle(n, req.seed);
            let mut fold_of_record = vec![0usize; n];
            for (pos, &idx) in perm.iter().enumerate() {
                // Group 0 is the holdout block; each remaining record is its
                // own singleton fold.
                fold_of_record[idx] = if pos < h { 0 } else { pos - h + 1 };
            }
            (k, fold_of_record, assign_dispositions(k + 1)?)
        }
    };
    let plan = PartitionPlan {
        study_id: req.study_id.clone(),
        seed: req.seed,
        k,
        mode: req.mode,
        stratify: req.stratify,
        holdout_frac: match req.mode {
            PlanMode::Loocv => Some(req.holdout_frac),
            PlanMode::Kfold => None,
        },
        iteration: 0,
        role_of_fold,
        fold_of_record,
    };
    stamp(dataset, &plan);
    let counts = plan.role_counts();
    Ok((plan, counts))
}

/// Write each record's disposition and hash key from the plan.
pub fn stamp(dataset: &mut Dataset, plan: &PartitionPlan) {
    for (i, record) in dataset.records.iter_mut().enumerate() {
        let role = plan.role_of_fold[plan.fold_of_record[i]];
        record.disposition = Some(role);
        record.hash_key = Some(hash_key(&plan.study_id, &record.record_id, role, plan.seed));
    }
}

/// Advance the test role to the next non-holdout fold (cyclic), leaving the
/// holdout untouched and fold membership unchanged.
pub fn rotate_test_fold(plan: &PartitionPlan) -> Result<PartitionPlan> {
    match plan.mode {
        PlanMode::Kfold if plan.k < 4 => {
            return Err(Error::InvalidK(format!(
                "rotation needs k >= 4 to keep a training fold, got k={}",
                plan.k
            )));
        }
        PlanMode::Loocv if plan.k < 2 => {
            return Err(Error::InvalidK(
                "rotation needs at least 2 non-holdout folds".into(),
            ));
        }
        _ => {}
    }
    let mut next = plan.clone();
    next.rotate_unchecked();
    Ok(next)
}

#[derive(Debug, Clone, Serialize)]
pub struct Discrepancy {
    pub record_id: String,
    pub field: String,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub fingerprint_match: bool,
    pub expected_fingerprint: String,
    pub found_fingerprint: String,
    pub discrepancies: Vec<Discrepancy>,
}

impl VerificationReport {
    pub fn pass(&self) -> bool {
        self.fingerprint_match && self.discrepancies.is_empty()
    }
}

/// Recompute the plan from the manifest's parameters and compare every
/// stored disposition and hash key against the recomputation. Findings are
/// report content; nothing here fails.
pub fn verify_partition(
    dataset: &Dataset,
    manifest: &crate::dataset::Manifest,
) -> VerificationReport {
    let plan = &manifest.plan;
    let mut report = VerificationReport {
        fingerprint_match: dataset.fingerprint == manifest.dataset_fingerprint,
        expected_fingerprint: manifest.dataset_fingerprint.clone(),
        found_fingerprint: dataset.fingerprint.clone(),
        discrepancies: Vec::new(),
    };

    let req = PlanRequest {
        study_id: plan.study_id.clone(),
        seed: plan.seed,
        mode: plan.mode,
        k: plan.k,
        stratify: plan.stratify,
        holdout_frac: plan.holdout_frac.unwrap_or(0.1),
    };
    let mut clean = dataset.clone();
    for r in &mut clean.records {
        r.disposition = None;
        r.hash_key = None;
    }
    let rebuilt = match build_plan(&mut clean, &req) {
        Ok((mut p, _)) => {
            for _ in 0..plan.iteration {
                p.rotate_unchecked();
            }
            stamp(&mut clean, &p);
            Some(p)
        }
        Err(e) => {
            report.discrepancies.push(Discrepancy {
                record_id: String::new(),
                field: "plan".into(),
                expected: "reconstructible plan".into(),
                found: e.to_string(),
            });
            None
        }
    };

    if rebuilt.is_some() {
        for (stored, recomputed) in dataset.records.iter().zip(&clean.records) {
            let want_role = recomputed.disposition.unwrap();
            match stored.disposition {
                Some(role) if role == want_role => {}
                other => report.discrepancies.push(Discrepancy {
                    record_id: stored.record_id.clone(),
                    field: "disposition".into(),
                    expected: want_role.as_str().into(),
                    found: other.map_or("<missing>".into(), |r| r.as_str().into()),
                }),
            }
            let want_key = recomputed.hash_key.clone().unwrap();
            match &stored.hash_key {
                Some(key) if *key == want_key => {}
                other => report.discrepancies.push(Discrepancy {
                    record_id: stored.record_id.clone(),
                    field: "hash_key".into(),
                    expected: want_key,
                    found: other.clone().unwrap_or_else(|| "<missing>".into()),
                }),
            }
        }
    }
    report
}
