//! Score the baseline stump over every rotated test fold and check that
//! skill is spread evenly across folds.

use foldout::evaluate::{evaluate_plan, StumpLearner};
use foldout::kselect::balance_check;
use foldout::partition::{build_plan, PlanRequest};
use foldout::synth;

fn main() -> foldout::Result<()> {
    let mut dataset = synth::binary_dataset(300, 11, 0.15);
    let (plan, _) = build_plan(&mut dataset, &PlanRequest::kfold("skill-demo", 11, 6))?;

    let report = evaluate_plan(&dataset, &plan, &StumpLearner, Some("pos"), true)?;
    for fold in &report.per_fold {
        println!(
            "fold {} (iteration {}): f1 = {:.3}  precision = {:.3}  recall = {:.3}  error = {:.3}",
            fold.fold, fold.iteration, fold.f1, fold.precision, fold.recall, fold.error_rate
        );
    }
    println!(
        "mean f1 = {:.3}  mean error = {:.3}  ({})",
        report.mean_f1, report.mean_error, report.model_descriptor
    );

    let balance = balance_check(&report, &plan.fold_sizes(), 0.2);
    println!(
        "f1 spread = {:.3}  balanced = {}",
        balance.f1_spread,
        balance.pass()
    );
    Ok(())
}
