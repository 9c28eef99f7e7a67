//! The .632+ bootstrap estimate on its own: resubstitution error,
//! out-of-bootstrap error, the no-information rate, and their combination.

use foldout::evaluate::StumpLearner;
use foldout::kselect::bootstrap_632_plus;
use foldout::synth;

fn main() -> foldout::Result<()> {
    for noise in [0.0, 0.2, 0.5] {
        let dataset = synth::binary_dataset(200, 9, noise);
        let refs: Vec<_> = dataset.records.iter().collect();
        let report = bootstrap_632_plus(&refs, &dataset.feature_kinds(), &StumpLearner, 200, 9)?;
        println!("label noise {noise}:");
        println!(
            "  err_train = {:.4}  err_boot = {:.4}  gamma = {:.4}",
            report.err_train, report.err_boot, report.gamma
        );
        println!(
            "  overfit R = {:.4}  weight = {:.4}  err_632+ = {:.4}",
            report.relative_overfit, report.weight, report.err_632plus
        );
    }
    Ok(())
}
