//! Partition a dataset, record the plan in a manifest, and verify the
//! stamped records against it — including what a tampered record looks like.

use foldout::dataset::{write_manifest, Manifest};
use foldout::partition::{build_plan, verify_partition, Disposition, PlanRequest};
use foldout::synth;

fn main() -> foldout::Result<()> {
    let mut dataset = synth::binary_dataset(100, 42, 0.1);
    let request = PlanRequest::kfold("demo-study", 42, 5);
    let (plan, counts) = build_plan(&mut dataset, &request)?;

    println!("k = {}  folds = {:?}", plan.k, plan.fold_sizes());
    println!(
        "holdout = {}  test = {}  train = {}",
        counts.holdout, counts.test, counts.train
    );
    for r in dataset.records.iter().take(3) {
        println!(
            "{}  {}  {}",
            r.record_id,
            r.disposition.unwrap().as_str(),
            r.hash_key.as_deref().unwrap()
        );
    }

    let manifest = Manifest::new("demo-study", &dataset.fingerprint, plan);
    let dir = std::env::temp_dir();
    let path = dir.join("split_and_verify_manifest.json");
    write_manifest(&manifest, &path)?;
    println!("manifest written to {}", path.display());

    let report = verify_partition(&dataset, &manifest);
    println!("clean verify: pass = {}", report.pass());

    // Flip one disposition and watch the verifier catch it.
    dataset.records[0].disposition = Some(match dataset.records[0].disposition.unwrap() {
        Disposition::Train => Disposition::Test,
        _ => Disposition::Train,
    });
    let report = verify_partition(&dataset, &manifest);
    println!(
        "after tamper: pass = {}, discrepancies = {}",
        report.pass(),
        report.discrepancies.len()
    );
    std::fs::remove_file(&path)?;
    Ok(())
}
