//! Leave-one-out partitioning for a small cohort: a fixed holdout block
//! plus one singleton fold per remaining record.

use foldout::evaluate::{evaluate_plan, StumpLearner};
use foldout::partition::{build_plan, PlanRequest};
use foldout::synth;

fn main() -> foldout::Result<()> {
    let mut dataset = synth::binary_dataset(30, 21, 0.1);
    let (plan, counts) = build_plan(&mut dataset, &PlanRequest::loocv("loocv-demo", 21, 0.1))?;
    println!(
        "n = {}  holdout = {}  singleton folds = {}",
        dataset.len(),
        counts.holdout,
        plan.k
    );

    let report = evaluate_plan(&dataset, &plan, &StumpLearner, Some("pos"), true)?;
    let misses = report
        .per_fold
        .iter()
        .filter(|f| f.error_rate > 0.0)
        .count();
    println!(
        "leave-one-out: {} of {} records misclassified (mean error {:.3})",
        misses,
        report.per_fold.len(),
        report.mean_error
    );
    Ok(())
}
