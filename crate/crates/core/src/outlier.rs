//! Distance-based outliers in attribute subspaces.
//!
//! A record is an outlier in subspace `S` when fewer than `k` other records
//! lie within radius `r` of it under the `|S|`-normalized Euclidean metric
//!
//! ```text
//! dist_S(x, y) = sqrt( sum_{i in S} (x_i - y_i)^2 / |S| )
//! ```
//!
//! Neighborhoods are closed: a record at distance exactly `r` is a neighbor.
//! Coincident records are distinct records and count as neighbors of each
//! other.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ground-truth class of a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Inlier,
    Outlier,
}

/// An ordered collection of equal-length real vectors, optionally labeled.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    records: Vec<Vec<f64>>,
    labels: Option<Vec<Label>>,
    attribute_names: Vec<String>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, records: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = records.first() else {
            return Err(Error::InvalidArgument("a dataset needs at least one record".into()));
        };
        let d = first.len();
        if d == 0 {
            return Err(Error::InvalidArgument("records must have dimension >= 1".into()));
        }
        if let Some((i, r)) = records.iter().enumerate().find(|(_, r)| r.len() != d) {
            return Err(Error::DimensionMismatch(format!(
                "record {i} has dimension {} but record 0 has dimension {d}",
                r.len()
            )));
        }
        if let Some(i) = records.iter().position(|r| r.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidArgument(format!("record {i} has a non-finite value")));
        }
        let attribute_names = (1..=d).map(|j| format!("x{j}")).collect();
        Ok(Self {
            name: name.into(),
            records,
            labels: None,
            attribute_names,
        })
    }

    pub fn with_labels(mut self, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != self.records.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} records",
                labels.len(),
                self.records.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_attribute_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} attribute names for dimension {}",
                names.len(),
                self.dim()
            )));
        }
        self.attribute_names = names;
        Ok(self)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    /// Always false: construction rejects empty datasets.
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.records[0].len()
    }

    pub fn records(&self) -> &[Vec<f64>] {
        &self.records
    }

    pub fn record(&self, i: usize) -> &[f64] {
        &self.records[i]
    }

    pub fn labels(&self) -> Option<&[Label]> {
        self.labels.as_deref()
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    /// Number of records labeled as outliers, if labels are present.
    pub fn labeled_outliers(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|l| l.iter().filter(|&&x| x == Label::Outlier).count())
    }

    /// The neighbor dataset obtained by replacing record `i` with `value`.
    pub fn with_record_replaced(&self, i: usize, value: Vec<f64>) -> Result<Self> {
        if i >= self.len() {
            return Err(Error::InvalidArgument(format!(
                "record index {i} out of range for N = {}",
                self.len()
            )));
        }
        if value.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "replacement has dimension {} but the dataset has {}",
                value.len(),
                self.dim()
            )));
        }
        let mut out = self.clone();
        out.records[i] = value;
        Ok(out)
    }
}

/// A nonempty set of attribute indices, stored zero-based and sorted.
///
/// Displayed one-based, e.g. `{1,2}`. The derived ordering is lexicographic
/// on the sorted indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Subspace(Vec<usize>);

impl Subspace {
    /// Builds a subspace from zero-based attribute indices.
    pub fn new(dims: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut dims: Vec<usize> = dims.into_iter().collect();
        if dims.is_empty() {
            return Err(Error::InvalidArgument("a subspace needs at least one attribute".into()));
        }
        dims.sort_unstable();
        if dims.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(format!(
                "duplicate attribute index in subspace {:?}",
                dims
            )));
        }
        Ok(Self(dims))
    }

    /// Builds a subspace from one-based attribute indices.
    pub fn from_one_based(dims: impl IntoIterator<Item = usize>) -> Result<Self> {
        let dims: Vec<usize> = dims.into_iter().collect();
        if dims.contains(&0) {
            return Err(Error::InvalidArgument("one-based attribute index 0".into()));
        }
        Self::new(dims.into_iter().map(|i| i - 1))
    }

    pub fn full(d: usize) -> Result<Self> {
        Self::new(0..d)
    }

    /// All `c`-element subspaces of `{0..d}` in lexicographic order.
    pub fn combinations(d: usize, c: usize) -> Result<Vec<Self>> {
        if c == 0 || c > d {
            return Err(Error::InvalidArgument(format!(
                "subspace size {c} must be in 1..={d}"
            )));
        }
        let mut out = Vec::new();
        let mut idx: Vec<usize> = (0..c).collect();
        loop {
            out.push(Self(idx.clone()));
            // advance to the next combination
            let mut pos = c;
            while pos > 0 && idx[pos - 1] == d - c + pos - 1 {
                pos -= 1;
            }
            if pos == 0 {
                return Ok(out);
            }
            idx[pos - 1] += 1;
            for j in pos..c {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks every index against a data dimension.
    pub fn check(&self, d: usize) -> Result<()> {
        match self.0.last() {
            Some(&max) if max < d => Ok(()),
            _ => Err(Error::DimensionMismatch(format!(
                "subspace {self} needs dimension >= {} but the data has {d}",
                self.0.last().map_or(0, |m| m + 1)
            ))),
        }
    }

    /// Coordinates of `x` in this subspace scaled by `1/sqrt(|S|)`, so that
    /// plain Euclidean distance between embedded points equals `dist_S`.
    pub fn embed(&self, x: &[f64]) -> Vec<f64> {
        let scale = (self.0.len() as f64).sqrt().recip();
        self.0.iter().map(|&i| x[i] * scale).collect()
    }
}

impl fmt::Display for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, i) in self.0.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "}}")
    }
}

/// Neighbor threshold `k` and radius `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierParams {
    pub k: usize,
    pub r: f64,
}

impl OutlierParams {
    pub fn new(k: usize, r: f64) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidArgument("threshold k must be >= 1".into()));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
        }
        Ok(Self { k, r })
    }
}

pub fn subspace_distance(a: &[f64], b: &[f64], s: &Subspace) -> Result<f64> {
    s.check(a.len().min(b.len()))?;
    Ok(distance_unchecked(a, b, s))
}

#[inline]
pub(crate) fn distance_unchecked(a: &[f64], b: &[f64], s: &Subspace) -> f64 {
    let sum: f64 = s.dims().iter().map(|&i| (a[i] - b[i]).powi(2)).sum();
    (sum / s.len() as f64).sqrt()
}

/// Per-record neighbor counts and the level sets `V(j) = {i : deg(i) = j}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeProfile {
    degrees: Vec<usize>,
    level_sets: BTreeMap<usize, Vec<usize>>,
}

impl DegreeProfile {
    pub fn from_degrees(degrees: Vec<usize>) -> Self {
        let mut level_sets: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &deg) in degrees.iter().enumerate() {
            level_sets.entry(deg).or_default().push(i);
        }
        Self { degrees, level_sets }
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn level_sets(&self) -> &BTreeMap<usize, Vec<usize>> {
        &self.level_sets
    }

    /// Record indices with degree exactly `deg`; empty when there are none.
    pub fn level(&self, deg: usize) -> &[usize] {
        self.level_sets.get(&deg).map_or(&[], Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    pub fn outliers(&self, k: usize) -> Vec<usize> {
        (0..self.degrees.len()).filter(|&i| self.degrees[i] < k).collect()
    }

    pub fn outlier_count(&self, k: usize) -> usize {
        self.degrees.iter().filter(|&&d| d < k).count()
    }
}

pub fn degree_profile(x: &Dataset, s: &Subspace, p: &OutlierParams) -> Result<DegreeProfile> {
    s.check(x.dim())?;
    let n = x.len();
    let mut degrees = vec![0usize; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if distance_unchecked(x.record(i), x.record(j), s) <= p.r {
                degrees[i] += 1;
                degrees[j] += 1;
            }
        }
    }
    Ok(DegreeProfile::from_degrees(degrees))
}

pub fn count_outliers(x: &Dataset, s: &Subspace, p: &OutlierParams) -> Result<usize> {
    Ok(degree_profile(x, s, p)?.outlier_count(p.k))
}

pub fn outlier_indices(x: &Dataset, s: &Subspace, p: &OutlierParams) -> Result<Vec<usize>> {
    Ok(degree_profile(x, s, p)?.outliers(p.k))
}

/// Exact (non-private) ranking by outlier count, descending; equal counts are
/// ordered lexicographically by attribute indices.
pub fn rank_subspaces(
    x: &Dataset,
    candidates: &[Subspace],
    p: &OutlierParams,
) -> Result<Vec<(Subspace, usize)>> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidate subspaces".into()));
    }
    let mut ranked = candidates
        .iter()
        .map(|s| Ok((s.clone(), count_outliers(x, s, p)?)))
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|(sa, ca), (sb, cb)| cb.cmp(ca).then_with(|| sa.cmp(sb)));
    Ok(ranked)
}
