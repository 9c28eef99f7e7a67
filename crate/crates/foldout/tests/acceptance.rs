//! Acceptance gate: one test per release criterion, each printing a
//! pass/fail line. Tolerances are pinned in the assertions.

use std::collections::HashSet;
use std::io::Write;
use std::process::{Command, Stdio};
use std::time::Instant;

use foldout::dataset::{load_csv, read_manifest};
use foldout::evaluate::{evaluate_plan, score, train_stump, Model, StumpLearner};
use foldout::kselect::{combine_632_plus, five_by_two_statistic, no_information_error};
use foldout::partition::{
    build_plan, rotate_test_fold, Disposition, PlanRequest, SplitMix64,
};
use foldout::synth;

fn pass(criterion: &str) {
    println!("PASS: {criterion}");
}

#[test]
fn criterion_1_three_way_partition_property() {
    let start = Instant::now();
    let mut rng = SplitMix64::new(0xACCE97);
    for _ in 0..200 {
        let n = 3 + (rng.next_u64() % 400) as usize;
        let kmax = n.min(30);
        let k = 3 + (rng.next_u64() % (kmax as u64 - 2)) as usize;
        let seed = rng.next_u64();
        let mut d = synth::numeric_dataset(n, 2, seed);
        let (plan, counts) = build_plan(&mut d, &PlanRequest::kfold("acc1", seed, k)).unwrap();

        assert_eq!(counts.holdout + counts.test + counts.train, n);
        let mut seen: HashSet<&str> = HashSet::new();
        for r in &d.records {
            assert!(r.disposition.is_some() && r.hash_key.is_some());
            assert!(seen.insert(&r.record_id));
        }
        let sizes = plan.fold_sizes();
        assert_eq!(sizes.len(), k);
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        let holdouts = plan
            .role_of_fold
            .iter()
            .filter(|&&r| r == Disposition::Holdout)
            .count();
        let tests = plan
            .role_of_fold
            .iter()
            .filter(|&&r| r == Disposition::Test)
            .count();
        assert_eq!((holdouts, tests), (1, 1));
    }
    assert!(start.elapsed().as_secs() < 5, "criterion 1 exceeded 5 s");
    pass("criterion 1: three-way partition property over 200 random (n, k, seed) triples");
}

#[test]
fn criterion_2_determinism_across_runs_and_threads() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("data.csv");
    std::fs::write(&input, synth::to_csv(&synth::binary_dataset(150, 77, 0.1))).unwrap();

    let mut outputs: Vec<Vec<u8>> = Vec::new();
    for run in 0..3 {
        let out = dir.path().join(format!("labeled{run}.csv"));
        let mut d = load_csv(&input, "id", "label").unwrap();
        build_plan(&mut d, &PlanRequest::kfold("acc2", 42, 5)).unwrap();
        foldout::dataset::write_labeled_csv(&d, &out).unwrap();
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);

    // Concurrent builds must agree with the serial result.
    let reference = outputs[0].clone();
    let handles: Vec<_> = (0..4)
        .map(|i| {
            let input = input.clone();
            let dir = dir.path().to_path_buf();
            std::thread::spawn(move || {
                let out = dir.join(format!("thread{i}.csv"));
                let mut d = load_csv(&input, "id", "label").unwrap();
                build_plan(&mut d, &PlanRequest::kfold("acc2", 42, 5)).unwrap();
                foldout::dataset::write_labeled_csv(&d, &out).unwrap();
                std::fs::read(&out).unwrap()
            })
        })
        .collect();
    for h in handles {
        assert_eq!(h.join().unwrap(), reference);
    }
    assert!(start.elapsed().as_secs() < 5, "criterion 2 exceeded 5 s");
    pass("criterion 2: byte-identical labeled CSV across 3 runs and 4 threads");
}

#[test]
fn criterion_3_holdout_immutability_under_rotation() {
    let start = Instant::now();
    for k in [4usize, 5, 7, 10] {
        let mut d = synth::numeric_dataset(10 * k, 2, k as u64);
        let (plan, _) = build_plan(&mut d, &PlanRequest::kfold("acc3", 17, k)).unwrap();
        let holdout_ids: HashSet<String> = d
            .records
            .iter()
            .filter(|r| r.disposition == Some(Disposition::Holdout))
            .map(|r| r.record_id.clone())
            .collect();

        let mut p = plan.clone();
        for step in 1..=3 * (k - 1) {
            p = rotate_test_fold(&p).unwrap();
            let mut rotated = d.clone();
            foldout::partition::stamp(&mut rotated, &p);
            let ids: HashSet<String> = rotated
                .records
                .iter()
                .filter(|r| r.disposition == Some(Disposition::Holdout))
                .map(|r| r.record_id.clone())
                .collect();
            assert_eq!(ids, holdout_ids, "k={k} rotation {step} moved the holdout");
            if step == k - 1 {
                assert_eq!(p.role_of_fold, plan.role_of_fold, "k={k}: cycle did not close");
            }
        }
    }
    assert!(start.elapsed().as_secs() < 5, "criterion 3 exceeded 5 s");
    pass("criterion 3: holdout set invariant under 1..3(k-1) rotations; cycle closes at k-1");
}

/// Hash the given preimages with an external SHA-256 implementation
/// (python hashlib), one hex digest per line.
fn external_sha256(preimages: &[String]) -> Vec<String> {
    let mut child = Command::new("python3")
        .args([
            "-c",
            "import sys,hashlib\nfor line in sys.stdin.read().split('\\n'):\n    if line:\n        print(hashlib.sha256(line.encode()).hexdigest())",
        ])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .expect("python3 available");
    child
        .stdin
        .take()
        .unwrap()
        .write_all(preimages.join("\n").as_bytes())
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_foldout"))
}

#[test]
fn criterion_4_hash_keys_verified_externally_and_tamper_detected() {
    let start = Instant::now();
    let mut d = synth::numeric_dataset(1000, 2, 0x5EED);
    build_plan(&mut d, &PlanRequest::kfold("acc4", 99, 10)).unwrap();

    let preimages: Vec<String> = d
        .records
        .iter()
        .map(|r| {
            format!(
                "acc4|{}|{}|99",
                r.record_id,
                r.disposition.unwrap().as_str()
            )
        })
        .collect();
    let expected = external_sha256(&preimages);
    assert_eq!(expected.len(), 1000);
    for (r, want) in d.records.iter().zip(&expected) {
        assert_eq!(r.hash_key.as_deref(), Some(want.as_str()));
    }

    // A single injected tamper must make `verify` exit 3.
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("data.csv");
    let labeled = dir.path().join("labeled.csv");
    let manifest = dir.path().join("manifest.json");
    std::fs::write(&input, synth::to_csv(&synth::binary_dataset(100, 4, 0.1))).unwrap();
    let status = bin()
        .args([
            "split", "--in", input.to_str().unwrap(), "--out", labeled.to_str().unwrap(),
            "--manifest", manifest.to_str().unwrap(), "--study", "acc4", "--seed", "99",
            "--k", "5",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let clean = bin()
        .args(["verify", "--in", labeled.to_str().unwrap(), "--manifest", manifest.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(clean.code(), Some(0));

    let text = std::fs::read_to_string(&labeled).unwrap();
    let tampered = text.replacen(",train,", ",test,", 1);
    assert_ne!(text, tampered);
    std::fs::write(&labeled, tampered).unwrap();
    let verify = bin()
        .args(["verify", "--in", labeled.to_str().unwrap(), "--manifest", manifest.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(verify.code(), Some(3));
    assert!(start.elapsed().as_secs() < 5, "criterion 4 exceeded 5 s");
    pass("criterion 4: 1,000 hash keys match external SHA-256; tamper detected with exit 3");
}

#[test]
fn criterion_5_score_oracle_on_500_random_instances() {
    let mut rng = SplitMix64::new(0x04AC1E);
    for _ in 0..500 {
        let n = 1 + (rng.next_u64() % 50) as usize;
        let classes = 2 + (rng.next_u64() % 3) as usize;
        let truth: Vec<String> = (0..n)
            .map(|_| format!("c{}", rng.next_u64() % classes as u64))
            .collect();
        let predicted: Vec<String> = (0..n)
            .map(|_| format!("c{}", rng.next_u64() % classes as u64))
            .collect();
        let positive = format!("c{}", rng.next_u64() % classes as u64);

        // Brute-force confusion oracle.
        let tp = truth.iter().zip(&predicted).filter(|(t, p)| **t == positive && **p == positive).count() as f64;
        let fp = truth.iter().zip(&predicted).filter(|(t, p)| **t != positive && **p == positive).count() as f64;
        let fn_ = truth.iter().zip(&predicted).filter(|(t, p)| **t == positive && **p != positive).count() as f64;
        let precision = if tp + fp == 0.0 { 0.0 } else { tp / (tp + fp) };
        let recall = if tp + fn_ == 0.0 { 0.0 } else { tp / (tp + fn_) };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };

        let s = score(&truth, &predicted, Some(&positive)).unwrap();
        assert!((s.precision - precision).abs() < 1e-12);
        assert!((s.recall - recall).abs() < 1e-12);
        assert!((s.f1 - f1).abs() < 1e-12);
    }
    pass("criterion 5: F1/precision/recall match the brute-force oracle on 500 instances (1e-12)");
}

#[test]
fn criterion_6_bootstrap_632_identities() {
    // err_boot = err_train leaves the estimate at err_train exactly.
    let (_, w, err) = combine_632_plus(0.3, 0.3, 0.7);
    assert_eq!(w, 0.632);
    assert!((err - 0.3).abs() < 1e-15);

    // (0, 0.5, 0.5) forces full weight on the bootstrap error.
    let (r, w, err) = combine_632_plus(0.0, 0.5, 0.5);
    assert_eq!(r, 1.0);
    assert!((w - 1.0).abs() < 1e-12);
    assert!((err - 0.5).abs() < 1e-12);

    let mut rng = SplitMix64::new(0x632);
    let unit = |r: &mut SplitMix64| (r.next_u64() % 1_000_001) as f64 / 1_000_000.0;
    for _ in 0..1000 {
        let err_train = unit(&mut rng);
        let err_boot = err_train + unit(&mut rng) * (1.0 - err_train);
        let gamma = unit(&mut rng);
        let (_, _, err) = combine_632_plus(err_train, err_boot, gamma);
        assert!(
            err >= err_train - 1e-12 && err <= err_boot + 1e-12,
            "err_632plus {err} outside [{err_train}, {err_boot}]"
        );
    }
    pass("criterion 6: .632+ identities and range over 1,000 random valid triples");
}

#[test]
fn criterion_7_gamma_matches_random_baseline() {
    let start = Instant::now();
    for c in [2usize, 3, 4] {
        let n = 10_000;
        let truth: Vec<String> = (0..n).map(|i| format!("c{}", i % c)).collect();
        let mut rng = SplitMix64::new(0x6A44A + c as u64);
        let predicted: Vec<String> = (0..n)
            .map(|_| format!("c{}", rng.next_u64() % c as u64))
            .collect();
        let gamma = no_information_error(&truth, &predicted);
        let expect = (c as f64 - 1.0) / c as f64;
        assert!(
            (gamma - expect).abs() <= 0.03,
            "c={c}: gamma {gamma} vs (c-1)/c = {expect}"
        );
    }
    assert!(start.elapsed().as_secs() < 10, "criterion 7 exceeded 10 s");
    pass("criterion 7: gamma within 0.03 of (c-1)/c for c in {2,3,4} at n = 10,000");
}

#[test]
fn criterion_8_five_by_two_statistic_oracle() {
    // Fixed difference arrays; expected value pre-computed independently.
    let diffs = [(0.1, 0.0), (0.2, 0.1), (0.0, 0.1), (0.1, 0.2), (0.1, 0.1)];
    let r = five_by_two_statistic(&diffs);
    assert!((r.t_stat.unwrap() - 1.5811388300841895).abs() < 1e-9);

    // Self-comparison: identical configurations give t = 0, not significant.
    let d = synth::binary_dataset(40, 8, 0.2);
    let refs: Vec<&foldout::dataset::Record> = d.records.iter().collect();
    let self_cmp = foldout::kselect::five_by_two_ttest(
        &refs,
        &d.feature_kinds(),
        &StumpLearner,
        &StumpLearner,
        5,
    )
    .unwrap();
    assert_eq!(self_cmp.t_stat, Some(0.0));
    assert!(!self_cmp.significant);

    // Constant nonzero differences: the zero-variance outcome.
    let constant = five_by_two_statistic(&[(0.3, 0.3); 5]);
    assert!(constant.zero_variance);
    assert_eq!(constant.t_stat, None);
    pass("criterion 8: 5x2cv t statistic matches the independent oracle (1e-9); degenerate outcomes");
}

#[test]
fn criterion_9_loocv_equivalence() {
    let start = Instant::now();
    let mut d = synth::binary_dataset(30, 0x100CF, 0.2);
    let (plan, _) = build_plan(&mut d, &PlanRequest::loocv("acc9", 13, 0.1)).unwrap();
    assert_eq!(plan.k, 27);

    // Route 1: the generic rotated-fold evaluation over the 27 singleton folds.
    let report = evaluate_plan(&d, &plan, &StumpLearner, Some("pos"), true).unwrap();
    assert_eq!(report.per_fold.len(), 27);
    let mut by_record: Vec<(String, f64)> = report
        .per_fold
        .iter()
        .map(|f| {
            let members = plan.fold_members(f.fold);
            assert_eq!(members.len(), 1);
            (d.records[members[0]].record_id.clone(), f.error_rate)
        })
        .collect();
    by_record.sort_by(|a, b| a.0.cmp(&b.0));

    // Route 2: a hand-rolled leave-one-out loop, independent of the plan
    // and rotation machinery.
    let pool: Vec<usize> = (0..d.len())
        .filter(|&i| d.records[i].disposition != Some(Disposition::Holdout))
        .collect();
    assert_eq!(pool.len(), 27);
    let kinds = d.feature_kinds();
    let mut oracle: Vec<(String, f64)> = pool
        .iter()
        .map(|&held| {
            let train: Vec<&foldout::dataset::Record> = pool
                .iter()
                .filter(|&&i| i != held)
                .map(|&i| &d.records[i])
                .collect();
            let model = train_stump(&train, &kinds).unwrap();
            let hit = model.predict(&d.records[held]).unwrap() == d.records[held].label;
            (
                d.records[held].record_id.clone(),
                if hit { 0.0 } else { 1.0 },
            )
        })
        .collect();
    oracle.sort_by(|a, b| a.0.cmp(&b.0));
    assert_eq!(by_record, oracle);
    assert!(start.elapsed().as_secs() < 5, "criterion 9 exceeded 5 s");
    pass("criterion 9: LOOCV scores identical record-for-record to the independent leave-one-out loop");
}

#[test]
fn criterion_10_end_to_end_workflow() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("cohort.csv");
    let labeled = dir.path().join("labeled.csv");
    let manifest_path = dir.path().join("manifest.json");
    let report_json = dir.path().join("kselect.json");
    std::fs::write(&input, synth::to_csv(&synth::binary_dataset(1000, 2024, 0.25))).unwrap();

    let run = |args: &[&str]| {
        let status = bin().args(args).status().unwrap();
        assert_eq!(status.code(), Some(0), "step failed: {args:?}");
    };
    run(&[
        "split", "--in", input.to_str().unwrap(), "--out", labeled.to_str().unwrap(),
        "--manifest", manifest_path.to_str().unwrap(), "--study", "acc10",
        "--seed", "2024", "--k", "10",
    ]);
    run(&[
        "evaluate", "--in", labeled.to_str().unwrap(), "--manifest",
        manifest_path.to_str().unwrap(), "--positive-class", "pos",
    ]);
    run(&[
        "select-k", "--in", labeled.to_str().unwrap(), "--strategy", "representative",
        "--candidates", "5,10,20", "--seed", "2024", "--positive-class", "pos",
        "--report-json", report_json.to_str().unwrap(),
        "--manifest", manifest_path.to_str().unwrap(),
    ]);
    run(&[
        "rotate", "--in", labeled.to_str().unwrap(), "--manifest",
        manifest_path.to_str().unwrap(),
    ]);
    run(&[
        "verify", "--in", labeled.to_str().unwrap(), "--manifest",
        manifest_path.to_str().unwrap(),
    ]);

    let manifest = read_manifest(&manifest_path).unwrap();
    assert_eq!(manifest.plan.k, 10);
    assert_eq!(manifest.plan.iteration, 1);
    let skill = manifest.skill.expect("per-fold skill recorded");
    assert_eq!(skill.per_fold.len(), 9);
    let selection = manifest.k_selection.expect("selection report recorded");
    assert!(selection.candidates.len() == 3);
    assert!(report_json.exists());

    // The discard mandate: nothing but the expected artifacts on disk.
    let files: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    let mut sorted = files.clone();
    sorted.sort();
    assert_eq!(
        sorted,
        vec!["cohort.csv", "kselect.json", "labeled.csv", "manifest.json"],
        "unexpected artifact on disk: {files:?}"
    );
    assert!(
        start.elapsed().as_secs() < 60,
        "criterion 10 exceeded 60 s"
    );
    pass("criterion 10: split -> evaluate -> select-k -> rotate -> verify, exit 0 throughout, no model artifact");
}
