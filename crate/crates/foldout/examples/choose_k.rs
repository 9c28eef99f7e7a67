//! Compare the k-selection tactics on one dataset: pick a representative k
//! from candidates, take the fixed k = 10, and balance skill with the
//! .632+ bootstrap.

use foldout::evaluate::StumpLearner;
use foldout::kselect::{select_k, KSelectionConfig, Strategy};
use foldout::synth;

fn main() -> foldout::Result<()> {
    let dataset = synth::binary_dataset(400, 3, 0.2);

    for strategy in [
        Strategy::Representative,
        Strategy::Fixed10,
        Strategy::BootstrapBalanced,
    ] {
        let config = KSelectionConfig {
            strategy,
            candidates: vec![5, 10, 20],
            resamples: 50,
            seed: 3,
            holdout_frac: 0.1,
            positive_class: Some("pos"),
        };
        let report = select_k(&dataset, &StumpLearner, &config)?;
        println!("strategy {:?}", strategy);
        for c in &report.candidates {
            println!(
                "  k = {:>2}  mean error = {:.4}  mean f1 = {:.4}  spread = {}",
                c.k,
                c.mean_error,
                c.mean_f1,
                c.f1_spread
                    .map_or("-".to_string(), |s| format!("{s:.4}"))
            );
        }
        println!("  chosen k = {}  ({})\n", report.chosen_k, report.rationale);
    }
    Ok(())
}
