//! Shared plumbing: dataset flags, algorithm selection, metrics rows, and
//! run manifests.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};

use dplinear::{binarize, load_csv_features, load_idx_pair, LabeledDataset, RunManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Dpsgd,
    Dpsgdf,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Dpsgd => "dpsgd",
            Algo::Dpsgdf => "dpsgdf",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossKind {
    Hinge,
    Logistic,
}

/// Where the training (and optional test) data comes from.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// IDX image file (paired with --labels).
    #[arg(long, requires = "labels")]
    pub images: Option<PathBuf>,
    /// IDX label file (paired with --images).
    #[arg(long, requires = "images")]
    pub labels: Option<PathBuf>,
    /// Numeric CSV with a label column (alternative to --images/--labels).
    #[arg(long, conflicts_with = "images")]
    pub csv: Option<PathBuf>,
    /// Label column index in the CSV; defaults to the last column.
    #[arg(long)]
    pub label_col: Option<usize>,
    /// Divide IDX pixel values by 255.
    #[arg(long, default_value_t = true)]
    pub normalize_pixels: bool,
    /// Scale every feature row to this ℓ2 norm before anything else.
    #[arg(long)]
    pub row_normalize: Option<f64>,
    /// Collapse labels to ±1 with these classes as +1 (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub positive: Vec<usize>,

    /// Test-set IDX image file.
    #[arg(long, requires = "test_labels")]
    pub test_images: Option<PathBuf>,
    /// Test-set IDX label file.
    #[arg(long, requires = "test_images")]
    pub test_labels: Option<PathBuf>,
    /// Test-set CSV.
    #[arg(long)]
    pub test_csv: Option<PathBuf>,
}

impl DataArgs {
    fn load_one(
        &self,
        images: &Option<PathBuf>,
        labels: &Option<PathBuf>,
        csv: &Option<PathBuf>,
    ) -> Result<Option<(LabeledDataset, String)>> {
        let (raw, name) = if let (Some(img), Some(lab)) = (images, labels) {
            (
                load_idx_pair(img, lab, self.normalize_pixels)?,
                img.display().to_string(),
            )
        } else if let Some(path) = csv {
            (
                load_csv_features(path, self.label_col)?,
                path.display().to_string(),
            )
        } else {
            return Ok(None);
        };

        let mut ds = raw;
        if let Some(r) = self.row_normalize {
            ds = ds.normalized_rows(r)?;
        }
        if !self.positive.is_empty() {
            let positive: BTreeSet<usize> = self.positive.iter().copied().collect();
            ds = binarize(&ds, &positive)?;
        }
        Ok(Some((ds, name)))
    }

    pub fn load_train(&self) -> Result<(LabeledDataset, String)> {
        self.load_one(&self.images, &self.labels, &self.csv)?
            .context("no training data: pass --images/--labels or --csv")
    }

    pub fn load_test(&self) -> Result<Option<(LabeledDataset, String)>> {
        self.load_one(&self.test_images, &self.test_labels, &self.test_csv)
    }
}

pub const METRICS_HEADER: &str =
    "algo,dataset,epsilon,delta,eps_f,batch,lr,epochs,clip,seed,train_loss,test_accuracy,wall_ms,manifest_hash";

/// One metrics row; `eps_f` is empty for the plain trainer.
#[derive(Debug, Clone)]
pub struct MetricsRow {
    pub algo: String,
    pub dataset: String,
    pub epsilon: f64,
    pub delta: f64,
    pub eps_f: Option<f64>,
    pub batch: usize,
    pub lr: f64,
    pub epochs: f64,
    pub clip: f64,
    pub seed: u64,
    pub train_loss: f64,
    pub test_accuracy: f64,
    pub wall_ms: u128,
    pub manifest_hash: String,
}

impl MetricsRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.algo,
            self.dataset,
            self.epsilon,
            self.delta,
            self.eps_f.map(|v| v.to_string()).unwrap_or_default(),
            self.batch,
            self.lr,
            self.epochs,
            self.clip,
            self.seed,
            self.train_loss,
            self.test_accuracy,
            self.wall_ms,
            self.manifest_hash
        )
    }
}

/// Append rows to a metrics CSV, writing the header when the file is new.
pub fn append_metrics(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    let exists = path.exists() && fs::metadata(path)?.len() > 0;
    let mut file = fs::OpenOptions::new().create(true).append(true).open(path)?;
    if !exists {
        writeln!(file, "{METRICS_HEADER}")?;
    }
    for row in rows {
        writeln!(file, "{}", row.to_csv())?;
    }
    Ok(())
}

pub fn validate_privacy(epsilon: f64, delta: f64) -> Result<()> {
    if !(epsilon > 0.0) {
        bail!("epsilon must be positive, got {epsilon}");
    }
    if !(delta > 0.0 && delta < 1.0) {
        bail!("delta must lie in (0, 1), got {delta}");
    }
    Ok(())
}

/// Steps for an epoch count: `ceil(epochs·n/B)`.
pub fn epochs_to_steps(epochs: f64, n: usize, batch: usize) -> usize {
    ((epochs * n as f64) / batch as f64).ceil().max(1.0) as usize
}

/// Write the manifest next to the metrics and return its hash.
pub fn persist_manifest(dir: &Path, manifest: &RunManifest) -> Result<String> {
    fs::create_dir_all(dir)?;
    let hash = manifest.checksum();
    let path = dir.join(format!("manifest-{}.txt", &hash[..12]));
    dplinear::write_manifest(&path, manifest)?;
    Ok(hash)
}
