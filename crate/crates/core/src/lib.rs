//! Differentially private counting of distance-based outliers and private
//! discovery of the attribute subspaces that hold the most outliers.
//!
//! The count query is released with Gaussian noise calibrated either to a
//! kissing-number bound on the global sensitivity or to a smooth upper bound
//! on the local sensitivity; subspaces are selected with the exponential
//! mechanism.

pub mod data_io;
pub mod error;
pub mod kissing;
pub mod ledger;
pub mod mechanisms;
pub mod oracle;
pub mod outlier;
pub mod seb;
pub mod sensitivity;

pub use error::{Error, Result};
pub use kissing::KissingNumberTable;
pub use ledger::{BudgetLedger, LedgerEntry};
pub use mechanisms::{NoiseScale, NoiseSource, PrivacyParams, Release};
pub use outlier::{count_outliers, degree_profile, Dataset, DegreeProfile, Label, OutlierParams, Subspace};
pub use sensitivity::{BoundKind, SearchConfig, SensitivityBound, SensitivityContext, SmoothParams};
