//! Command-line surface: `split`, `select-k`, `evaluate`, `rotate`, `verify`.
//!
//! Exit codes are a stable contract: 0 success, 1 I/O, 2 usage or
//! validation, 3 verification failure. Seeds are mandatory everywhere
//! randomness is involved; nothing is ever drawn from ambient entropy.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dataset::{
    load_csv, read_manifest, write_labeled_csv, write_manifest, Dataset, Manifest,
};
use crate::error::Error;
use crate::evaluate::{evaluate_plan, SkillReport, StumpLearner};
use crate::kselect::{select_k, KSelectionConfig, KSelectionReport, Strategy, DEFAULT_BOOTSTRAP_B};
use crate::partition::{build_plan, rotate_test_fold, verify_partition, PlanRequest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "foldout", version, about = "Three-way k-fold partitioning with analysis-naive holdouts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StrategyArg {
    Representative,
    Fixed10,
    Loocv,
    Bootstrap,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Strategy {
        match s {
            StrategyArg::Representative => Strategy::Representative,
            StrategyArg::Fixed10 => Strategy::Fixed10,
            StrategyArg::Loocv => Strategy::Loocv,
            StrategyArg::Bootstrap => Strategy::BootstrapBalanced,
        }
    }
}

#[derive(Debug, Args)]
pub struct IoArgs {
    /// Input CSV file
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Record id column name
    #[arg(long, default_value = "id")]
    pub id_column: String,
    /// Class label column name
    #[arg(long, default_value = "label")]
    pub label_column: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Shuffle, split into k folds, label holdout/test/train, stamp hash keys
    Split {
        #[command(flatten)]
        io: IoArgs,
        /// Labeled CSV output path
        #[arg(long)]
        out: PathBuf,
        /// Manifest output path
        #[arg(long)]
        manifest: PathBuf,
        /// Study identifier
        #[arg(long)]
        study: String,
        /// Shuffle seed (required; reproducibility is the product)
        #[arg(long)]
        seed: u64,
        /// Fold count (three-way split needs k >= 3)
        #[arg(long, conflicts_with = "loocv")]
        k: Option<usize>,
        /// Leave-one-out mode: singleton folds over the non-holdout records
        #[arg(long)]
        loocv: bool,
        /// Holdout fraction for LOOCV mode
        #[arg(long, default_value_t = 0.1)]
        holdout_frac: f64,
        /// Stratify fold assignment by class
        #[arg(long)]
        stratify: bool,
        /// Overwrite an existing manifest
        #[arg(long)]
        force: bool,
    },
    /// Choose k: representative (5x2cv), fixed10, loocv, or bootstrap balancing
    SelectK {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long)]
        strategy: StrategyArg,
        /// Candidate k values, comma separated (representative/bootstrap)
        #[arg(long, value_delimiter = ',')]
        candidates: Vec<usize>,
        #[arg(long)]
        seed: u64,
        /// Bootstrap resample count
        #[arg(long, default_value_t = DEFAULT_BOOTSTRAP_B)]
        bootstrap_b: usize,
        #[arg(long, default_value_t = 0.1)]
        holdout_frac: f64,
        #[arg(long)]
        positive_class: Option<String>,
        /// Write the selection report as JSON
        #[arg(long)]
        report_json: Option<PathBuf>,
        /// Record the selection into an existing manifest
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Train the disposable baseline on TRAIN, score TEST, keep only scores
    Evaluate {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        positive_class: Option<String>,
        /// Score only the current test fold instead of sweeping all folds
        #[arg(long)]
        no_sweep: bool,
        /// Write per-fold scores as CSV
        #[arg(long)]
        scores_csv: Option<PathBuf>,
        /// Balance tolerance on the per-fold F1 spread
        #[arg(long, default_value_t = 0.1)]
        tolerance: f64,
    },
    /// Advance the test fold to the next non-holdout fold
    Rotate {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long)]
        manifest: PathBuf,
        /// Rewritten labeled CSV (defaults to --in)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute the plan and every hash key; report any tampering
    Verify {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long)]
        manifest: PathBuf,
    },
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Io(_) | Error::Csv(_) => EXIT_IO,
        _ => EXIT_USAGE,
    }
}

fn load(io: &IoArgs) -> crate::error::Result<Dataset> {
    load_csv(&io.input, &io.id_column, &io.label_column)
}

fn print_selection_table(report: &KSelectionReport) {
    println!(
        "{:>6} {:>12} {:>10} {:>12} {:>10} {:>12}",
        "k", "mean_error", "mean_F1", "err_632plus", "t_vs_best", "significant"
    );
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6}"));
    for c in &report.candidates {
        println!(
            "{:>6} {:>12.6} {:>10.6} {:>12} {:>10} {:>12}",
            c.k,
            c.mean_error,
            c.mean_f1,
            opt(c.err_632plus),
            opt(c.t_vs_best),
            c.significant.map_or("-".to_string(), |s| s.to_string()),
        );
    }
    println!("chosen k: {}", report.chosen_k);
    println!("rationale: {}", report.rationale);
}

fn write_scores_csv(report: &SkillReport, path: &Path) -> crate::error::Result<()> {
    let mut out = String::from("fold,role_iteration,f1,precision,recall,error_rate\n");
    for f in &report.per_fold {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            f.fold, f.iteration, f.f1, f.precision, f.recall, f.error_rate
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

fn cmd_split(
    io: &IoArgs,
    out: &Path,
    manifest_path: &Path,
    study: &str,
    seed: u64,
    k: Option<usize>,
    loocv: bool,
    holdout_frac: f64,
    stratify: bool,
    force: bool,
) -> crate::error::Result<i32> {
    if manifest_path.exists() && !force {
        return Err(Error::SchemaViolation(format!(
            "manifest {} already exists; an established holdout must not be re-randomized (use --force to override)",
            manifest_path.display()
        )));
    }
    let request = if loocv {
        PlanRequest::loocv(study, seed, holdout_frac)
    } else {
        let k = k.ok_or_else(|| Error::InvalidK("--k is required unless --loocv".into()))?;
        PlanRequest::kfold(study, seed, k).with_stratify(stratify)
    };
    let mut dataset = load(io)?;
    let (plan, counts) = build_plan(&mut dataset, &request)?;
    write_labeled_csv(&dataset, out)?;
    let manifest = Manifest::new(study, &dataset.fingerprint, plan.clone());
    write_manifest(&manifest, manifest_path)?;
    println!(
        "n={} k={} folds={:?} holdout={} test={} train={}",
        dataset.len(),
        plan.k,
        plan.fold_sizes(),
        counts.holdout,
        counts.test,
        counts.train
    );
    Ok(EXIT_OK)
}

fn cmd_select_k(
    io: &IoArgs,
    strategy: StrategyArg,
    candidates: &[usize],
    seed: u64,
    bootstrap_b: usize,
    holdout_frac: f64,
    positive_class: Option<&str>,
    report_json: Option<&Path>,
    manifest_path: Option<&Path>,
) -> crate::error::Result<i32> {
    let dataset = load(io)?;
    let report = select_k(
        &dataset,
        &StumpLearner,
        &KSelectionConfig {
            strategy: strategy.into(),
            candidates: candidates.to_vec(),
            resamples: bootstrap_b,
            seed,
            holdout_frac,
            positive_class,
        },
    )?;
    print_selection_table(&report);
    if let Some(path) = report_json {
        let json = serde_json::to_string_pretty(&report)
            .map_err(|e| Error::SchemaViolation(e.to_string()))?;
        fs::write(path, json + "\n")?;
    }
    if let Some(path) = manifest_path {
        let mut manifest = read_manifest(path)?;
        manifest.k_selection = Some(report);
        write_manifest(&manifest, path)?;
    }
    Ok(EXIT_OK)
}

fn cmd_evaluate(
    io: &IoArgs,
    manifest_path: &Path,
    positive_class: Option<&str>,
    sweep: bool,
    scores_csv: Option<&Path>,
    tolerance: f64,
) -> crate::error::Result<i32> {
    let dataset = load(io)?;
    let mut manifest = read_manifest(manifest_path)?;
    if manifest.dataset_fingerprint != dataset.fingerprint {
        return Err(Error::SchemaViolation(
            "dataset fingerprint does not match the manifest".into(),
        ));
    }
    let report = evaluate_plan(
        &dataset,
        &manifest.plan,
        &StumpLearner,
        positive_class,
        sweep,
    )?;
    for f in &report.per_fold {
        println!(
            "fold {} (iteration {}): f1={:.6} precision={:.6} recall={:.6} error={:.6}",
            f.fold, f.iteration, f.f1, f.precision, f.recall, f.error_rate
        );
    }
    println!("mean f1: {:.6}  mean error: {:.6}", report.mean_f1, report.mean_error);
    if report.per_fold.len() >= 2 {
        let balance =
            crate::kselect::balance_check(&report, &manifest.plan.fold_sizes(), tolerance);
        println!(
            "fold balance: f1 spread {:.6} (tolerance {tolerance}), {}",
            balance.f1_spread,
            if balance.pass() { "balanced" } else { "imbalanced" }
        );
    }
    if let Some(path) = scores_csv {
        write_scores_csv(&report, path)?;
    }
    manifest.skill = Some(report);
    write_manifest(&manifest, manifest_path)?;
    Ok(EXIT_OK)
}

fn cmd_rotate(io: &IoArgs, manifest_path: &Path, out: Option<&Path>) -> crate::error::Result<i32> {
    let mut dataset = load(io)?;
    let mut manifest = read_manifest(manifest_path)?;
    if manifest.dataset_fingerprint != dataset.fingerprint {
        return Err(Error::SchemaViolation(
            "dataset fingerprint does not match the manifest".into(),
        ));
    }
    let rotated = rotate_test_fold(&manifest.plan)?;
    crate::partition::stamp(&mut dataset, &rotated);
    manifest.plan = rotated;
    let out = out.unwrap_or(&io.input);
    write_labeled_csv(&dataset, out)?;
    write_manifest(&manifest, manifest_path)?;
    println!(
        "iteration {}: test fold is now {}",
        manifest.plan.iteration,
        manifest.plan.test_fold()
    );
    Ok(EXIT_OK)
}

fn cmd_verify(io: &IoArgs, manifest_path: &Path) -> crate::error::Result<i32> {
    let dataset = load(io)?;
    let manifest = read_manifest(manifest_path)?;
    let report = verify_partition(&dataset, &manifest);
    if report.pass() {
        println!("PASS: 0 discrepancies, fingerprint matches");
        return Ok(EXIT_OK);
    }
    if !report.fingerprint_match {
        eprintln!(
            "fingerprint mismatch: manifest {} vs dataset {}",
            report.expected_fingerprint, report.found_fingerprint
        );
    }
    for d in &report.discrepancies {
        eprintln!(
            "record {}: {} expected {} found {}",
            d.record_id, d.field, d.expected, d.found
        );
    }
    eprintln!("FAIL: {} discrepancies", report.discrepancies.len());
    Ok(EXIT_VERIFY)
}

/// Run a parsed command; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let outcome = match &cli.command {
        Command::Split {
            io,
            out,
            manifest,
            study,
            seed,
            k,
            loocv,
            holdout_frac,
            stratify,
            force,
        } => cmd_split(
            io,
            out,
            manifest,
            study,
            *seed,
            *k,
            *loocv,
            *holdout_frac,
            *stratify,
            *force,
        ),
        Command::SelectK {
            io,
            strategy,
            candidates,
            seed,
            bootstrap_b,
            holdout_frac,
            positive_class,
            report_json,
            manifest,
        } => cmd_select_k(
            io,
            *strategy,
            candidates,
            *seed,
            *bootstrap_b,
            *holdout_frac,
            positive_class.as_deref(),
            report_json.as_deref(),
            manifest.as_deref(),
        ),
        Command::Evaluate {
            io,
            manifest,
            positive_class,
            no_sweep,
            scores_csv,
            tolerance,
        } => cmd_evaluate(
            io,
            manifest,
            positive_class.as_deref(),
            !no_sweep,
            scores_csv.as_deref(),
            *tolerance,
        ),
        Command::Rotate { io, manifest, out } => cmd_rotate(io, manifest, out.as_deref()),
        Command::Verify { io, manifest } => cmd_verify(io, manifest),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

/// Parse arguments (after the program name) and run.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let mut full: Vec<std::ffi::OsString> = vec!["foldout".into()];
    full.extend(args.into_iter().map(Into::into));
    match Cli::try_parse_from(full) {
        Ok(cli) => run(cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}
