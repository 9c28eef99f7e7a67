//! CSV ingestion, dataset fingerprinting, and the audit manifest.
//!
//! A [`Dataset`] is loaded from an RFC-4180 CSV file with a header row. The
//! fingerprint is a SHA-256 digest of the canonical serialization of the file
//! (header plus data rows in file order, minimally quoted), so it can be
//! recomputed with standard command-line tools. Loading a previously labeled
//! file (one whose last two columns are `disposition` and `hash_key`) restores
//! dispositions and hash keys and fingerprints only the original columns.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evaluate::SkillReport;
use crate::kselect::KSelectionReport;
use crate::partition::{Disposition, PartitionPlan, PlanMode};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Column names appended by [`write_labeled_csv`].
pub const DISPOSITION_COLUMN: &str = "disposition";
pub const HASH_KEY_COLUMN: &str = "hash_key";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureValue {
    Numeric(f64),
    Categorical(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub record_id: String,
    /// Original cells in file column order (id and label included).
    pub raw: Vec<String>,
    /// Typed feature values, excluding the id and label columns.
    pub features: Vec<FeatureValue>,
    pub label: String,
    pub disposition: Option<Disposition>,
    pub hash_key: Option<String>,
}

impl Record {
    pub fn is_labeled(&self) -> bool {
        self.disposition.is_some() && self.hash_key.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub records: Vec<Record>,
    /// (column name, inferred kind) for every original column, in file order.
    pub schema: Vec<(String, ColumnKind)>,
    pub id_column: String,
    pub label_column: String,
    /// SHA-256 of the canonical serialization of the original columns.
    pub fingerprint: String,
    /// Indices into `schema` of the feature columns (everything except id and label).
    pub feature_columns: Vec<usize>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Kinds of the feature columns, in feature order.
    pub fn feature_kinds(&self) -> Vec<ColumnKind> {
        self.feature_columns
            .iter()
            .map(|&i| self.schema[i].1)
            .collect()
    }

    pub fn class_labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = self
            .records
            .iter()
            .map(|r| r.label.clone())
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        labels.sort();
        labels
    }
}

/// Quote a cell per RFC 4180, only when the content requires it.
fn canonical_cell(cell: &str) -> String {
    if cell.contains(',') || cell.contains('"') || cell.contains('\r') || cell.contains('\n') {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

fn canonical_row(cells: &[String]) -> String {
    cells
        .iter()
        .map(|c| canonical_cell(c))
        .collect::<Vec<_>>()
        .join(",")
}

/// SHA-256 over `header line + data rows` joined by `\n`, in file order.
pub fn fingerprint_rows(header: &[String], rows: &[Vec<String>]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(canonical_row(header).as_bytes());
    for row in rows {
        hasher.update(b"\n");
        hasher.update(canonical_row(row).as_bytes());
    }
    hex::encode(hasher.finalize())
}

mod hex {
    pub fn encode(bytes: impl AsRef<[u8]>) -> String {
        bytes
            .as_ref()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

enum CellClass {
    Empty,
    Finite,
    NonFinite,
    Text,
}

fn classify_cell(cell: &str) -> CellClass {
    if cell.is_empty() {
        return CellClass::Empty;
    }
    match cell.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => CellClass::Finite,
        Ok(_) => CellClass::NonFinite,
        Err(_) => CellClass::Text,
    }
}

fn parse_disposition(s: &str) -> Result<Disposition> {
    match s {
        "holdout" => Ok(Disposition::Holdout),
        "test" => Ok(Disposition::Test),
        "train" => Ok(Disposition::Train),
        other => Err(Error::SchemaViolation(format!(
            "unknown disposition `{other}`"
        ))),
    }
}

fn valid_hash_key(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| b.is_ascii_hexdigit() && !b.is_ascii_uppercase())
}

/// Load a CSV file into a [`Dataset`].
///
/// Column kinds are inferred: numeric when at least one cell parses as a
/// finite real and every non-empty cell does, categorical otherwise. Cells
/// parsing to NaN or infinity are rejected. Empty cells in a numeric column
/// are rejected (no imputation).
pub fn load_csv(path: &Path, id_column: &str, label_column: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();

    let labeled = header.len() >= 2
        && header[header.len() - 2] == DISPOSITION_COLUMN
        && header[header.len() - 1] == HASH_KEY_COLUMN;
    let base_len = if labeled { header.len() - 2 } else { header.len() };
    let base_header = header[..base_len].to_vec();

    let id_idx = base_header
        .iter()
        .position(|c| c == id_column)
        .ok_or_else(|| Error::MissingColumn(id_column.to_string()))?;
    let label_idx = base_header
        .iter()
        .position(|c| c == label_column)
        .ok_or_else(|| Error::MissingColumn(label_column.to_string()))?;

    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut marks: Vec<(Disposition, String)> = Vec::new();
    for (i, result) in reader.records().enumerate() {
        let row_no = i + 2; // 1-based, after the header
        let rec = result?;
        if rec.len() != header.len() {
            return Err(Error::RaggedRow {
                row: row_no,
                expected: header.len(),
                found: rec.len(),
            });
        }
        let cells: Vec<String> = rec.iter().map(str::to_string).collect();
        if labeled {
            let disp = parse_disposition(&cells[base_len])?;
            let key = cells[base_len + 1].clone();
            if !valid_hash_key(&key) {
                return Err(Error::SchemaViolation(format!(
                    "row {row_no}: hash_key is not 64 lowercase hex chars"
                )));
            }
            marks.push((disp, key));
        }
        rows.push(cells[..base_len].to_vec());
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }

    // Infer column kinds, rejecting non-finite numerics on the way.
    let mut kinds = Vec::with_capacity(base_len);
    for col in 0..base_len {
        let mut any_finite = false;
        let mut all_numeric = true;
        for (i, row) in rows.iter().enumerate() {
            match classify_cell(&row[col]) {
                CellClass::Finite => any_finite = true,
                CellClass::Text => all_numeric = false,
                CellClass::Empty => {}
                CellClass::NonFinite => {
                    return Err(Error::NumericOverflow {
                        row: i + 2,
                        column: base_header[col].clone(),
                        value: row[col].clone(),
                    });
                }
            }
        }
        kinds.push(if any_finite && all_numeric {
            ColumnKind::Numeric
        } else {
            ColumnKind::Categorical
        });
    }
    for col in 0..base_len {
        if kinds[col] == ColumnKind::Numeric {
            for (i, row) in rows.iter().enumerate() {
                if row[col].is_empty() {
                    return Err(Error::MissingValue {
                        row: i + 2,
                        column: base_header[col].clone(),
                    });
                }
            }
        }
    }

    let feature_columns: Vec<usize> = (0..base_len)
        .filter(|&c| c != id_idx && c != label_idx)
        .collect();

    let mut seen = HashSet::new();
    let mut records = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let id = row[id_idx].clone();
        if id.is_empty() {
            return Err(Error::MissingValue {
                row: i + 2,
                column: base_header[id_idx].clone(),
            });
        }
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        let features = feature_columns
            .iter()
            .map(|&c| match kinds[c] {
                ColumnKind::Numeric => {
                    FeatureValue::Numeric(row[c].trim().parse::<f64>().expect("checked above"))
                }
                ColumnKind::Categorical => FeatureValue::Categorical(row[c].clone()),
            })
            .collect();
        let (disposition, hash_key) = if labeled {
            let (d, h) = marks[i].clone();
            (Some(d), Some(h))
        } else {
            (None, None)
        };
        records.push(Record {
            record_id: id,
            raw: row.clone(),
            features,
            label: row[label_idx].clone(),
            disposition,
            hash_key,
        });
    }

    let fingerprint = fingerprint_rows(&base_header, &rows);
    let schema = base_header.into_iter().zip(kinds).collect();
    Ok(Dataset {
        records,
        schema,
        id_column: id_column.to_string(),
        label_column: label_column.to_string(),
        fingerprint,
        feature_columns,
    })
}

/// Write the dataset with its original columns plus `disposition` and
/// `hash_key`, rows in original file order.
pub fn write_labeled_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    for r in &dataset.records {
        if !r.is_labeled() {
            return Err(Error::UnlabeledRecord(r.record_id.clone()));
        }
    }
    let mut out = String::new();
    let mut header: Vec<String> = dataset.schema.iter().map(|(n, _)| n.clone()).collect();
    header.push(DISPOSITION_COLUMN.to_string());
    header.push(HASH_KEY_COLUMN.to_string());
    out.push_str(&canonical_row(&header));
    out.push('\n');
    for r in &dataset.records {
        let mut row = r.raw.clone();
        row.push(r.disposition.unwrap().as_str().to_string());
        row.push(r.hash_key.clone().unwrap());
        out.push_str(&canonical_row(&row));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub study_id: String,
    pub dataset_fingerprint: String,
    pub plan: PartitionPlan,
    pub skill: Option<SkillReport>,
    pub k_selection: Option<KSelectionReport>,
    pub created_at: DateTime<Utc>,
    pub tool_version: String,
}

impl Manifest {
    pub fn new(study_id: &str, fingerprint: &str, plan: PartitionPlan) -> Manifest {
        Manifest {
            study_id: study_id.to_string(),
            dataset_fingerprint: fingerprint.to_string(),
            plan,
            skill: None,
            k_selection: None,
            created_at: Utc::now(),
            tool_version: TOOL_VERSION.to_string(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.plan.mode == PlanMode::Kfold && self.plan.k < 3 {
            return Err(Error::SchemaViolation(format!(
                "plan.k = {} but three roles require at least three folds",
                self.plan.k
            )));
        }
        if self.study_id != self.plan.study_id {
            return Err(Error::SchemaViolation(
                "manifest study_id disagrees with plan".into(),
            ));
        }
        Ok(())
    }

    /// Field-wise equality ignoring `created_at`.
    pub fn content_eq(&self, other: &Manifest) -> bool {
        let strip = |m: &Manifest| {
            let mut v = serde_json::to_value(m).expect("manifest serializes");
            v.as_object_mut().unwrap().remove("created_at");
            v
        };
        strip(self) == strip(other)
    }
}

impl fmt::Display for Manifest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", to_canonical_json(self))
    }
}

/// Canonical serialized form: struct-declaration key order, pretty-printed,
/// trailing newline. Equal manifests serialize to identical bytes.
pub fn to_canonical_json(manifest: &Manifest) -> String {
    let mut s = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    s.push('\n');
    s
}

pub fn write_manifest(manifest: &Manifest, path: &Path) -> Result<()> {
    manifest.validate()?;
    fs::write(path, to_canonical_json(manifest))?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path)?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::SchemaViolation(e.to_string()))?;
    manifest.validate()?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition;
    use std::io::Write;
    use tempfile::NamedTempFile;

    fn write_temp(content: &str) -> NamedTempFile {
        let mut f = NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_small_file_and_infers_kinds() {
        let f = write_temp("id,x,y,label\np1,1,2,a\np2,3,4,b\np3,5,6,a\np4,7,8,b\n");
        let d = load_csv(f.path(), "id", "label").unwrap();
        assert_eq!(d.len(), 4);
        assert_eq!(d.schema[1], ("x".to_string(), ColumnKind::Numeric));
        assert_eq!(d.schema[2], ("y".to_string(), ColumnKind::Numeric));
        assert_eq!(d.schema[3], ("label".to_string(), ColumnKind::Categorical));
        assert_eq!(d.feature_columns, vec![1, 2]);
    }

    #[test]
    fn fingerprint_is_stable_and_content_sensitive() {
        let content = "id,x,y,label\np1,1,2,a\np2,3,4,b\np3,5,6,a\np4,7,8,b\n";
        let f1 = write_temp(content);
        let f2 = write_temp(content);
        let d1 = load_csv(f1.path(), "id", "label").unwrap();
        let d2 = load_csv(f2.path(), "id", "label").unwrap();
        assert_eq!(d1.fingerprint, d2.fingerprint);
        // Oracle: sha256 of the canonical text, computed with an external tool.
        assert_eq!(
            d1.fingerprint,
            "24804659079bb275b0e641aae11947d81eac69e80244733e729121aa9af39333"
        );
        let f3 = write_temp("id,x,y,label\np1,1,2,a\np2,3,4,b\np3,5,7,a\np4,7,8,b\n");
        let d3 = load_csv(f3.path(), "id", "label").unwrap();
        assert_ne!(d1.fingerprint, d3.fingerprint);
    }

    #[test]
    fn fingerprint_bound_to_file_order() {
        let f = write_temp("id,x,label\np1,1,a\np2,2,b\n");
        let mut d = load_csv(f.path(), "id", "label").unwrap();
        let before = d.fingerprint.clone();
        d.records.reverse();
        assert_eq!(d.fingerprint, before);
    }

    #[test]
    fn duplicate_id_rejected() {
        let f = write_temp("id,x,label\np1,1,a\np1,2,b\n");
        assert!(matches!(
            load_csv(f.path(), "id", "label"),
            Err(Error::DuplicateId(id)) if id == "p1"
        ));
    }

    #[test]
    fn ragged_row_reports_row_number() {
        let f = write_temp("id,x,label\np1,1,a\np2,2\n");
        assert!(matches!(
            load_csv(f.path(), "id", "label"),
            Err(Error::RaggedRow { row: 3, .. })
        ));
    }

    #[test]
    fn empty_and_missing_columns_rejected() {
        let f = write_temp("id,x,label\n");
        assert!(matches!(
            load_csv(f.path(), "id", "label"),
            Err(Error::EmptyDataset)
        ));
        let f = write_temp("id,x,label\np1,1,a\n");
        assert!(matches!(
            load_csv(f.path(), "id", "outcome"),
            Err(Error::MissingColumn(c)) if c == "outcome"
        ));
    }

    #[test]
    fn non_finite_numeric_rejected() {
        let f = write_temp("id,x,label\np1,1e999,a\np2,2,b\n");
        assert!(matches!(
            load_csv(f.path(), "id", "label"),
            Err(Error::NumericOverflow { row: 2, .. })
        ));
    }

    #[test]
    fn empty_cell_in_numeric_column_rejected() {
        let f = write_temp("id,x,label\np1,1,a\np2,,b\n");
        assert!(matches!(
            load_csv(f.path(), "id", "label"),
            Err(Error::MissingValue { row: 3, .. })
        ));
    }

    #[test]
    fn mixed_column_is_categorical() {
        let f = write_temp("id,x,label\np1,1,a\np2,low,b\n");
        let d = load_csv(f.path(), "id", "label").unwrap();
        assert_eq!(d.schema[1].1, ColumnKind::Categorical);
    }

    #[test]
    fn labeled_round_trip_preserves_everything() {
        let f = write_temp("id,x,y,label\np1,1,2,a\np2,3,4,b\np3,5,6,a\np4,7,8,b\n");
        let mut d = load_csv(f.path(), "id", "label").unwrap();
        let (plan, _) = partition::build_plan(
            &mut d,
            &partition::PlanRequest::kfold("s1", 42, 3),
        )
        .unwrap();
        let out = NamedTempFile::new().unwrap();
        write_labeled_csv(&d, out.path()).unwrap();
        let d2 = load_csv(out.path(), "id", "label").unwrap();
        assert_eq!(d2.fingerprint, d.fingerprint);
        assert_eq!(d2.records, d.records);
        assert_eq!(plan.fold_of_record.len(), 4);
    }

    #[test]
    fn unlabeled_record_rejected_on_write() {
        let f = write_temp("id,x,label\np1,1,a\np2,2,b\n");
        let d = load_csv(f.path(), "id", "label").unwrap();
        let out = NamedTempFile::new().unwrap();
        assert!(matches!(
            write_labeled_csv(&d, out.path()),
            Err(Error::UnlabeledRecord(_))
        ));
    }

    #[test]
    fn manifest_round_trip_and_byte_stability() {
        let f = write_temp("id,x,label\np1,1,a\np2,2,b\np3,3,a\n");
        let mut d = load_csv(f.path(), "id", "label").unwrap();
        let (plan, _) =
            partition::build_plan(&mut d, &partition::PlanRequest::kfold("s1", 7, 3)).unwrap();
        let m = Manifest::new("s1", &d.fingerprint, plan);
        let p1 = NamedTempFile::new().unwrap();
        let p2 = NamedTempFile::new().unwrap();
        write_manifest(&m, p1.path()).unwrap();
        write_manifest(&m, p2.path()).unwrap();
        assert_eq!(
            fs::read(p1.path()).unwrap(),
            fs::read(p2.path()).unwrap()
        );
        let back = read_manifest(p1.path()).unwrap();
        assert!(back.content_eq(&m));
        assert_eq!(back.created_at, m.created_at);
    }

    #[test]
    fn truncated_manifest_is_schema_violation() {
        let f = write_temp("{\"study_id\": \"s1\"");
        assert!(matches!(
            read_manifest(f.path()),
            Err(Error::SchemaViolation(_))
        ));
    }

    #[test]
    fn quoted_cells_round_trip() {
        let f = write_temp("id,note,label\np1,\"a,b\",x\np2,\"say \"\"hi\"\"\",y\np3,plain,x\n");
        let mut d = load_csv(f.path(), "id", "label").unwrap();
        assert_eq!(d.records[0].raw[1], "a,b");
        let (_, _) =
            partition::build_plan(&mut d, &partition::PlanRequest::kfold("s1", 1, 3)).unwrap();
        let out = NamedTempFile::new().unwrap();
        write_labeled_csv(&d, out.path()).unwrap();
        let d2 = load_csv(out.path(), "id", "label").unwrap();
        assert_eq!(d2.records[0].raw[1], "a,b");
        assert_eq!(d2.records[1].raw[1], "say \"hi\"");
        assert_eq!(d2.fingerprint, d.fingerprint);
    }
}
