//! Run configuration, read from a TOML document.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use dpoutlier_core::data_io::{self, CsvOptions, SyntheticSpec};
use dpoutlier_core::{Dataset, OutlierParams, SearchConfig, Subspace};

use crate::CliError;

pub const DEFAULT_SEED: u64 = 2024;
/// Largest candidate family the top-h scenario will enumerate.
pub const MAX_CANDIDATES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Count,
    TopH,
    Bounds,
    Verify,
    TuneRadius,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Count => "count",
            Scenario::TopH => "top-h",
            Scenario::Bounds => "bounds",
            Scenario::Verify => "verify",
            Scenario::TuneRadius => "tune-radius",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatasetSource {
    Synthetic {
        preset: String,
        /// Defaults to the run seed.
        seed: Option<u64>,
        n_inliers: Option<usize>,
        n_outliers: Option<usize>,
        #[serde(default)]
        standardize: bool,
    },
    Csv {
        path: PathBuf,
        label_column: Option<String>,
        positive_label: Option<String>,
        #[serde(default)]
        drop_columns: Vec<String>,
        /// Class-stratified subset: inliers and outliers to keep.
        inliers: Option<usize>,
        outliers: Option<usize>,
        subset_seed: Option<u64>,
        #[serde(default = "yes")]
        standardize: bool,
    },
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub dims: Vec<usize>,
    pub ks: Vec<usize>,
    pub n: usize,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self {
            dims: (1..=10).collect(),
            ks: (1..=10).collect(),
            n: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub pools: usize,
    pub smooth_instances: usize,
    pub local_instances: usize,
    pub ls_t_instances: usize,
    pub seb_instances: usize,
    pub recount_instances: usize,
    pub dp_pairs: usize,
    pub dp_draws: usize,
    pub dp_epsilon: f64,
    /// Name of a check whose optimized value is deliberately perturbed.
    pub inject_failure: Option<String>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            pools: 200,
            smooth_instances: 50,
            local_instances: 100,
            ls_t_instances: 10,
            seb_instances: 200,
            recount_instances: 50,
            dp_pairs: 3,
            dp_draws: 200_000,
            dp_epsilon: 0.5,
            inject_failure: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub name: Option<String>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "one")]
    pub reps: usize,
    pub out: Option<PathBuf>,
    pub dataset: Option<DatasetSource>,
    pub k: Option<usize>,
    pub r: Option<f64>,
    pub tune_grid: Option<Vec<f64>>,
    /// One-based attribute indices; defaults to all attributes.
    pub subspace: Option<Vec<usize>>,
    pub epsilons: Option<Vec<f64>>,
    pub delta: Option<f64>,
    pub h: Option<usize>,
    pub c: Option<usize>,
    /// One-based attribute sets treated as the true top-h answers.
    pub true_subspaces: Option<Vec<Vec<usize>>>,
    pub pool_cap: Option<usize>,
    pub bounds: Option<BoundsConfig>,
    pub verify: Option<VerifyConfig>,
    /// Directory that relative paths in the document are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn one() -> usize {
    1
}

impl RunConfig {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            name: None,
            seed: DEFAULT_SEED,
            reps: 1,
            out: None,
            dataset: None,
            k: None,
            r: None,
            tune_grid: None,
            subspace: None,
            epsilons: None,
            delta: None,
            h: None,
            c: None,
            true_subspaces: None,
            pool_cap: None,
            bounds: None,
            verify: None,
            base_dir: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        cfg.out = cfg.out.as_deref().map(|p| cfg.resolve(p));
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.reps < 1 {
            return bad("reps must be >= 1".into());
        }
        if let Some(k) = self.k {
            if k < 1 {
                return bad("k must be >= 1".into());
            }
        }
        if let Some(eps) = &self.epsilons {
            if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
                return bad("epsilons must be a nonempty list of positive numbers".into());
            }
        }
        if let Some(delta) = self.delta {
            if !(delta > 0.0 && delta < 1.0) {
                return bad(format!("delta must be in (0, 1), got {delta}"));
            }
        }
        let needs_data = matches!(self.scenario, Scenario::Count | Scenario::TopH | Scenario::TuneRadius);
        if needs_data && self.dataset.is_none() {
            return bad(format!("scenario '{}' needs a [dataset] section", self.scenario.name()));
        }
        match self.scenario {
            Scenario::Count | Scenario::TopH => {
                if self.k.is_none() || (self.r.is_none() && self.tune_grid.is_none()) {
                    return bad("set k and either r or tune_grid".into());
                }
                if self.epsilons.is_none() || self.delta.is_none() {
                    return bad("set epsilons and delta".into());
                }
                if self.scenario == Scenario::TopH && (self.h.is_none() || self.c.is_none()) {
                    return bad("the top-h scenario needs h and c".into());
                }
            }
            Scenario::TuneRadius => {
                if self.k.is_none() || self.tune_grid.is_none() {
                    return bad("radius tuning needs k and tune_grid".into());
                }
            }
            Scenario::Bounds | Scenario::Verify => {}
        }
        Ok(())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        match &self.base_dir {
            Some(base) if path.is_relative() => base.join(path),
            _ => path.to_path_buf(),
        }
    }

    pub fn search_config(&self) -> SearchConfig {
        let mut cfg = SearchConfig::default();
        if let Some(cap) = self.pool_cap {
            cfg.pool_cap = cap;
        }
        cfg
    }

    pub fn load_dataset(&self) -> Result<Dataset, CliError> {
        let source = self
            .dataset
            .as_ref()
            .ok_or_else(|| CliError::Config("no [dataset] section".into()))?;
        let ds = match source {
            DatasetSource::Synthetic {
                preset,
                seed,
                n_inliers,
                n_outliers,
                standardize,
            } => {
                let mut spec = SyntheticSpec::preset(preset, seed.unwrap_or(self.seed))?;
                if let Some(n) = n_inliers {
                    spec.n_inliers = *n;
                }
                if let Some(n) = n_outliers {
                    spec.n_outliers = *n;
                }
                let ds = data_io::generate_synthetic(&spec)?;
                if *standardize {
                    data_io::standardize(&ds)?
                } else {
                    ds
                }
            }
            DatasetSource::Csv {
                path,
                label_column,
                positive_label,
                drop_columns,
                inliers,
                outliers,
                subset_seed,
                standardize,
            } => {
                let opts = CsvOptions {
                    label_column: label_column.clone(),
                    drop_columns: drop_columns.clone(),
                    positive_label: positive_label.clone(),
                };
                let mut ds = data_io::load_csv(self.resolve(path), &opts)?;
                match (inliers, outliers) {
                    (Some(i), Some(o)) => {
                        ds = data_io::subset_by_label(&ds, *i, *o, subset_seed.unwrap_or(self.seed))?;
                    }
                    (None, None) => {}
                    _ => return Err(CliError::Config("set both inliers and outliers, or neither".into())),
                }
                if *standardize {
                    data_io::standardize(&ds)?
                } else {
                    ds
                }
            }
        };
        Ok(match &self.name {
            Some(name) => ds.with_name(name.clone()),
            None => ds,
        })
    }

    pub fn subspace_for(&self, ds: &Dataset) -> Result<Subspace, CliError> {
        let s = match &self.subspace {
            Some(dims) => Subspace::from_one_based(dims.iter().copied())?,
            None => Subspace::full(ds.dim())?,
        };
        s.check(ds.dim())?;
        Ok(s)
    }

    /// Outlier parameters; with only a tune grid, the radius is tuned on the
    /// labels first.
    pub fn outlier_params(&self, ds: &Dataset, s: &Subspace) -> Result<OutlierParams, CliError> {
        let k = self.k.ok_or_else(|| CliError::Config("k is not set".into()))?;
        let r = match (self.r, &self.tune_grid) {
            (Some(r), _) => r,
            (None, Some(grid)) => data_io::tune_radius(ds, s, k, grid)?,
            (None, None) => return Err(CliError::Config("set r or tune_grid".into())),
        };
        Ok(OutlierParams::new(k, r)?)
    }

    pub fn epsilons(&self) -> &[f64] {
        self.epsilons.as_deref().unwrap_or(&[])
    }

    pub fn delta(&self) -> Result<f64, CliError> {
        self.delta.ok_or_else(|| CliError::Config("delta is not set".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const COUNT: &str = r#"
scenario = "count"
seed = 7
k = 3
r = 1.1
epsilons = [0.1, 0.5]
delta = 0.01

[dataset]
source = "synthetic"
preset = "synthetic1"
"#;

    #[test]
    fn parses_count_config() {
        let cfg = RunConfig::from_toml(COUNT).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.scenario, Scenario::Count);
        assert_eq!(cfg.reps, 1);
        let ds = cfg.load_dataset().unwrap();
        assert_eq!((ds.len(), ds.dim()), (50, 2));
        let s = cfg.subspace_for(&ds).unwrap();
        assert_eq!(cfg.outlier_params(&ds, &s).unwrap().r, 1.1);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(RunConfig::from_toml("scenario = \"count\"\nbogus = 1\n").is_err());
        assert!(RunConfig::from_toml("scenario = \"nope\"\n").is_err());
        let no_reps = COUNT.replace("seed = 7", "seed = 7\nreps = 0");
        assert!(RunConfig::from_toml(&no_reps).unwrap().validate().is_err());
        let no_delta = COUNT.replace("delta = 0.01", "");
        assert!(RunConfig::from_toml(&no_delta).unwrap().validate().is_err());
        let bad_eps = COUNT.replace("[0.1, 0.5]", "[0.1, -1.0]");
        assert!(RunConfig::from_toml(&bad_eps).unwrap().validate().is_err());
        let bad_preset = COUNT.replace("synthetic1", "census");
        assert!(RunConfig::from_toml(&bad_preset).unwrap().load_dataset().is_err());
    }

    #[test]
    fn relative_paths_follow_the_config() {
        let mut cfg = RunConfig::new(Scenario::Count);
        cfg.base_dir = Some(PathBuf::from("/etc/runs"));
        assert_eq!(cfg.resolve(Path::new("data.csv")), PathBuf::from("/etc/runs/data.csv"));
        assert_eq!(cfg.resolve(Path::new("/abs.csv")), PathBuf::from("/abs.csv"));
    }
}
