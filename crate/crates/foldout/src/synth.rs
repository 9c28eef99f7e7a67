//! In-memory synthetic datasets for examples and tests.
//!
//! Generation is driven by the same SplitMix64 generator the partitioner
//! uses, so every dataset here is reproducible from its seed.

use crate::dataset::{ColumnKind, Dataset, FeatureValue, Record, fingerprint_rows};
use crate::partition::SplitMix64;

fn uniform(rng: &mut SplitMix64) -> f64 {
    (rng.next_u64() % 1_000_000) as f64 / 1_000_000.0
}

fn assemble(header: Vec<String>, rows: Vec<Vec<String>>, kinds: Vec<ColumnKind>) -> Dataset {
    let fingerprint = fingerprint_rows(&header, &rows);
    let feature_columns: Vec<usize> = (1..header.len() - 1).collect();
    let records = rows
        .iter()
        .map(|row| Record {
            record_id: row[0].clone(),
            raw: row.clone(),
            features: feature_columns
                .iter()
                .map(|&c| match kinds[c] {
                    ColumnKind::Numeric => FeatureValue::Numeric(row[c].parse().unwrap()),
                    ColumnKind::Categorical => FeatureValue::Categorical(row[c].clone()),
                })
                .collect(),
            label: row[header.len() - 1].clone(),
            disposition: None,
            hash_key: None,
        })
        .collect();
    Dataset {
        records,
        schema: header.into_iter().zip(kinds).collect(),
        id_column: "id".into(),
        label_column: "label".into(),
        fingerprint,
        feature_columns,
    }
}

/// Numeric features in [0, 1); label `b` when feature 0 exceeds 0.5, else `a`.
/// Separable on feature 0 by construction.
pub fn numeric_dataset(n: usize, n_features: usize, seed: u64) -> Dataset {
    let mut rng = SplitMix64::new(seed);
    let mut header = vec!["id".to_string()];
    for f in 0..n_features {
        header.push(format!("x{f}"));
    }
    header.push("label".into());
    let rows = (0..n)
        .map(|i| {
            let mut row = vec![format!("r{i:05}")];
            let x0 = uniform(&mut rng);
            row.push(format!("{x0}"));
            for _ in 1..n_features {
                row.push(format!("{}", uniform(&mut rng)));
            }
            row.push(if x0 > 0.5 { "b".into() } else { "a".into() });
            row
        })
        .collect();
    let mut kinds = vec![ColumnKind::Categorical];
    kinds.extend(std::iter::repeat(ColumnKind::Numeric).take(n_features));
    kinds.push(ColumnKind::Categorical);
    assemble(header, rows, kinds)
}

/// One numeric feature; label `pos` when the feature exceeds 0.5, with each
/// label independently flipped with probability `noise`. `noise = 0.5` makes
/// labels independent of the feature. A margin around 0.5 keeps the
/// noise-free case separable out of sample, not just in sample.
pub fn binary_dataset(n: usize, seed: u64, noise: f64) -> Dataset {
    let mut rng = SplitMix64::new(seed);
    let header: Vec<String> = vec!["id".into(), "x".into(), "label".into()];
    let rows = (0..n)
        .map(|i| {
            let mut x = uniform(&mut rng);
            if (0.45..=0.55).contains(&x) {
                x += if x > 0.5 { 0.1 } else { -0.1 };
            }
            let mut positive = x > 0.5;
            if uniform(&mut rng) < noise {
                positive = !positive;
            }
            vec![
                format!("r{i:05}"),
                format!("{x}"),
                if positive { "pos".into() } else { "neg".into() },
            ]
        })
        .collect();
    assemble(
        header,
        rows,
        vec![
            ColumnKind::Categorical,
            ColumnKind::Numeric,
            ColumnKind::Categorical,
        ],
    )
}

/// One noise feature and an explicit label per record.
pub fn labeled_dataset(labels: &[&str], seed: u64) -> Dataset {
    let mut rng = SplitMix64::new(seed);
    let header: Vec<String> = vec!["id".into(), "x".into(), "label".into()];
    let rows = labels
        .iter()
        .enumerate()
        .map(|(i, lab)| {
            vec![
                format!("r{i:05}"),
                format!("{}", uniform(&mut rng)),
                lab.to_string(),
            ]
        })
        .collect();
    assemble(
        header,
        rows,
        vec![
            ColumnKind::Categorical,
            ColumnKind::Numeric,
            ColumnKind::Categorical,
        ],
    )
}

/// Balanced `c`-class dataset, label `c0..c{c-1}` in rotation, one noise
/// feature.
pub fn multiclass_dataset(n: usize, classes: usize, seed: u64) -> Dataset {
    let labels: Vec<String> = (0..n).map(|i| format!("c{}", i % classes)).collect();
    let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    labeled_dataset(&refs, seed)
}

/// Render a dataset back to unlabeled CSV text (for writing fixture files).
pub fn to_csv(dataset: &Dataset) -> String {
    let mut out = String::new();
    let header: Vec<&str> = dataset.schema.iter().map(|(n, _)| n.as_str()).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for r in &dataset.records {
        out.push_str(&r.raw.join(","));
        out.push('\n');
    }
    out
}
