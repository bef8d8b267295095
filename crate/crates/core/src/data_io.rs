//! Dataset generation, CSV ingestion, standardization and detection metrics.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::outlier::{outlier_indices, Dataset, Label, OutlierParams, Subspace};

/// Inliers from `N(0, I)`, planted outliers from `N(mu, diag(var))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub name: String,
    pub n_inliers: usize,
    pub n_outliers: usize,
    pub d: usize,
    pub outlier_mean: Vec<f64>,
    pub outlier_var: Vec<f64>,
    pub seed: u64,
}

impl SyntheticSpec {
    /// 45 inliers and 5 outliers in 2-d, outliers around (20, 20) with variance 100.
    pub fn synthetic1(seed: u64) -> Self {
        Self {
            name: "synthetic1".into(),
            n_inliers: 45,
            n_outliers: 5,
            d: 2,
            outlier_mean: vec![20.0, 20.0],
            outlier_var: vec![100.0, 100.0],
            seed,
        }
    }

    /// 490 inliers and 10 outliers in 10-d; outliers are shifted only in the
    /// first two attributes.
    pub fn synthetic2(seed: u64) -> Self {
        let mut outlier_mean = vec![0.0; 10];
        let mut outlier_var = vec![1.0; 10];
        outlier_mean[..2].fill(20.0);
        outlier_var[..2].fill(100.0);
        Self {
            name: "synthetic2".into(),
            n_inliers: 490,
            n_outliers: 10,
            d: 10,
            outlier_mean,
            outlier_var,
            seed,
        }
    }

    /// Stand-in for a 7-attribute census subset: 45 inliers and 5 outliers
    /// shifted by 3 with variance 4 in every attribute.
    pub fn adult1_like(seed: u64) -> Self {
        Self {
            name: "adult1-like".into(),
            n_inliers: 45,
            n_outliers: 5,
            d: 7,
            outlier_mean: vec![3.0; 7],
            outlier_var: vec![4.0; 7],
            seed,
        }
    }

    pub fn preset(name: &str, seed: u64) -> Result<Self> {
        match name {
            "synthetic1" => Ok(Self::synthetic1(seed)),
            "synthetic2" => Ok(Self::synthetic2(seed)),
            "adult1-like" => Ok(Self::adult1_like(seed)),
            other => Err(Error::Config(format!(
                "unknown synthetic preset '{other}' (expected synthetic1, synthetic2 or adult1-like)"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.n_inliers + self.n_outliers == 0 {
            return Err(Error::InvalidArgument("synthetic data needs d >= 1 and N >= 1".into()));
        }
        if self.outlier_mean.len() != self.d || self.outlier_var.len() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "outlier mean/variance must have dimension {}",
                self.d
            )));
        }
        if self.outlier_var.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidArgument("outlier variances must be positive".into()));
        }
        Ok(())
    }
}

/// Inliers first, then outliers; reproducible from `spec.seed`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut records = Vec::with_capacity(spec.n_inliers + spec.n_outliers);
    let mut labels = Vec::with_capacity(records.capacity());
    for _ in 0..spec.n_inliers {
        records.push((0..spec.d).map(|_| StandardNormal.sample(&mut rng)).collect());
        labels.push(Label::Inlier);
    }
    for _ in 0..spec.n_outliers {
        let row = (0..spec.d)
            .map(|j| {
                let z: f64 = StandardNormal.sample(&mut rng);
                spec.outlier_mean[j] + spec.outlier_var[j].sqrt() * z
            })
            .collect();
        records.push(row);
        labels.push(Label::Outlier);
    }
    Dataset::new(spec.name.clone(), records)?.with_labels(labels)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CsvOptions {
    pub label_column: Option<String>,
    #[serde(default)]
    pub drop_columns: Vec<String>,
    /// Label value treated as the inlier (majority) class; every other value
    /// marks an outlier.
    pub positive_label: Option<String>,
}

/// Reads a comma-separated file with a header row. Every column that is not
/// dropped and is not the label column must parse as a decimal float.
pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();

    for dropped in &opts.drop_columns {
        if !headers.contains(dropped) {
            return Err(Error::Config(format!("drop column '{dropped}' not found in {}", path.display())));
        }
    }
    let label_idx = match &opts.label_column {
        Some(name) => Some(headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::Config(format!("label column '{name}' not found in {}", path.display()))
        })?),
        None => None,
    };
    if label_idx.is_some() && opts.positive_label.is_none() {
        return Err(Error::Config("a label column needs a positive_label".into()));
    }
    let feature_idx: Vec<usize> = (0..headers.len())
        .filter(|&j| Some(j) != label_idx && !opts.drop_columns.contains(&headers[j]))
        .collect();
    if feature_idx.is_empty() {
        return Err(Error::Config("no numeric columns left after dropping".into()));
    }

    let mut records = Vec::new();
    let mut labels = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        let values = feature_idx
            .iter()
            .map(|&j| {
                let cell = rec.get(j).unwrap_or("").trim();
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        row: line,
                        column: headers[j].clone(),
                        message: format!("'{cell}' is not a number"),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        records.push(values);
        if let (Some(j), Some(pos)) = (label_idx, &opts.positive_label) {
            let cell = rec.get(j).unwrap_or("").trim();
            labels.push(if cell == pos { Label::Inlier } else { Label::Outlier });
        }
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let names = feature_idx.iter().map(|&j| headers[j].clone()).collect();
    let ds = Dataset::new(name, records)?.with_attribute_names(names)?;
    if label_idx.is_some() {
        ds.with_labels(labels)
    } else {
        Ok(ds)
    }
}

/// Seeded random selection of `n_inliers` inliers and `n_outliers` outliers
/// from a labeled dataset, inliers first.
pub fn subset_by_label(x: &Dataset, n_inliers: usize, n_outliers: usize, seed: u64) -> Result<Dataset> {
    let labels = x
        .labels()
        .ok_or_else(|| Error::Config("subsetting by class needs labels".into()))?;
    let mut inliers: Vec<usize> = (0..x.len()).filter(|&i| labels[i] == Label::Inlier).collect();
    let mut outliers: Vec<usize> = (0..x.len()).filter(|&i| labels[i] == Label::Outlier).collect();
    if inliers.len() < n_inliers || outliers.len() < n_outliers {
        return Err(Error::Config(format!(
            "asked for {n_inliers} inliers and {n_outliers} outliers, data has {} and {}",
            inliers.len(),
            outliers.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    inliers.shuffle(&mut rng);
    outliers.shuffle(&mut rng);
    let mut pick: Vec<usize> = inliers[..n_inliers].to_vec();
    pick.sort_unstable();
    let mut out_pick: Vec<usize> = outliers[..n_outliers].to_vec();
    out_pick.sort_unstable();
    pick.extend(out_pick);
    let records = pick.iter().map(|&i| x.record(i).to_vec()).collect();
    let new_labels = pick.iter().map(|&i| labels[i]).collect();
    Dataset::new(x.name(), records)?
        .with_attribute_names(x.attribute_names().to_vec())?
        .with_labels(new_labels)
}

/// Per-attribute mean 0 and population variance 1.
pub fn standardize(x: &Dataset) -> Result<Dataset> {
    let n = x.len() as f64;
    let d = x.dim();
    let mut mean = vec![0.0; d];
    for rec in x.records() {
        for (m, v) in mean.iter_mut().zip(rec) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for rec in x.records() {
        for j in 0..d {
            var[j] += (rec[j] - mean[j]).powi(2);
        }
    }
    var.iter_mut().for_each(|v| *v /= n);
    if let Some(j) = (0..d).find(|&j| !(var[j] > 0.0)) {
        return Err(Error::ZeroVariance(x.attribute_names()[j].clone()));
    }
    let sd: Vec<f64> = var.iter().map(|v| v.sqrt()).collect();
    let records = x
        .records()
        .iter()
        .map(|rec| (0..d).map(|j| (rec[j] - mean[j]) / sd[j]).collect())
        .collect();
    let out = Dataset::new(x.name(), records)?.with_attribute_names(x.attribute_names().to_vec())?;
    match x.labels() {
        Some(l) => out.with_labels(l.to_vec()),
        None => Ok(out),
    }
}

/// Confusion counts with "outlier" as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub accuracy: f64,
    /// 0 when nothing was predicted positive; see `precision_defined`.
    pub precision: f64,
    /// 0 when there are no true positives to find; see `recall_defined`.
    pub recall: f64,
    pub precision_defined: bool,
    pub recall_defined: bool,
}

impl MetricsReport {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let total = tp + fp + fn_ + tn;
        let ratio = |a: usize, b: usize| if b > 0 { a as f64 / b as f64 } else { 0.0 };
        Self {
            tp,
            fp,
            fn_,
            tn,
            accuracy: ratio(tp + tn, total),
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, tp + fn_),
            precision_defined: tp + fp > 0,
            recall_defined: tp + fn_ > 0,
        }
    }
}

pub fn evaluate_detection(predicted: &[usize], labels: &[Label]) -> Result<MetricsReport> {
    let predicted: HashSet<usize> = predicted.iter().copied().collect();
    if let Some(&bad) = predicted.iter().find(|&&i| i >= labels.len()) {
        return Err(Error::InvalidArgument(format!(
            "predicted index {bad} out of range for {} labels",
            labels.len()
        )));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (i, label) in labels.iter().enumerate() {
        match (predicted.contains(&i), label) {
            (true, Label::Outlier) => tp += 1,
            (true, Label::Inlier) => fp += 1,
            (false, Label::Outlier) => fn_ += 1,
            (false, Label::Inlier) => tn += 1,
        }
    }
    Ok(MetricsReport::from_counts(tp, fp, fn_, tn))
}

/// The grid radius whose outlier set best matches the labels by accuracy;
/// ties go to the smaller radius.
pub fn tune_radius(x: &Dataset, s: &Subspace, k: usize, grid: &[f64]) -> Result<f64> {
    let labels = x
        .labels()
        .ok_or_else(|| Error::Config("radius tuning needs labels".into()))?;
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty radius grid".into()));
    }
    let mut best: Option<(f64, f64)> = None;
    for &r in grid {
        let p = OutlierParams::new(k, r)?;
        let acc = evaluate_detection(&outlier_indices(x, s, &p)?, labels)?.accuracy;
        best = match best {
            Some((br, bacc)) if bacc > acc || (bacc == acc && br <= r) => Some((br, bacc)),
            _ => Some((r, acc)),
        };
    }
    Ok(best.expect("grid is nonempty").0)
}
