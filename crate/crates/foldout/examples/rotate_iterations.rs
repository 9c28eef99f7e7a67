//! Walk the test fold through every non-holdout position. The holdout fold
//! never moves; after k-1 rotations the layout returns to the start.

use foldout::partition::{build_plan, rotate_test_fold, PlanRequest};
use foldout::synth;

fn main() -> foldout::Result<()> {
    let mut dataset = synth::numeric_dataset(60, 2, 7);
    let (plan, _) = build_plan(&mut dataset, &PlanRequest::kfold("rotation-demo", 7, 6))?;

    let mut current = plan.clone();
    println!("iteration 0: roles = {:?}", current.role_of_fold);
    for _ in 0..plan.k - 1 {
        current = rotate_test_fold(&current)?;
        println!(
            "iteration {}: test fold = {}, holdout fold = {}",
            current.iteration,
            current.test_fold(),
            current.holdout_fold()
        );
    }
    assert_eq!(current.role_of_fold, plan.role_of_fold);
    println!("cycle closed after {} rotations", plan.k - 1);
    Ok(())
}
