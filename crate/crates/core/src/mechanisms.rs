//! Private release mechanisms.
//!
//! * Gaussian noise calibrated to the global sensitivity:
//!   `sigma = GS * sqrt(2 ln(2/delta)) / epsilon`.
//! * Gaussian noise calibrated to a beta-smooth upper bound `S`:
//!   `q(X) + (S / alpha) * Y`, `Y ~ N(0, 1)`, with
//!   `alpha = epsilon / (5 sqrt(2 ln(2/delta)))` and
//!   `beta = epsilon / (4 (p + ln(2/delta)))`.
//! * The exponential mechanism, `Pr[t] ~ exp(epsilon * u(X, t))`, with the
//!   subspace utility `q_count / GS_upper(|S|)` and iterated top-h selection.
//!
//! Privacy accounting note: the exponential mechanism is accounted as
//! `2 * epsilon * delta_u`-DP, so a top-h call run at parameter `epsilon`
//! (that is `epsilon / h` per selection) is recorded as `2 * epsilon`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kissing::KissingNumberTable;
use crate::ledger::BudgetLedger;
use crate::outlier::{count_outliers, Dataset, OutlierParams, Subspace};
use crate::sensitivity::{global_sensitivity_bounds, BoundKind, SensitivityBound};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    pub epsilon: f64,
    pub delta: f64,
    /// Output dimension; 1 for counts.
    pub p: usize,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, delta: f64, p: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!("epsilon must be > 0, got {epsilon}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidArgument(format!("delta must be in (0, 1), got {delta}")));
        }
        if p < 1 {
            return Err(Error::InvalidArgument("output dimension p must be >= 1".into()));
        }
        Ok(Self { epsilon, delta, p })
    }

    pub fn for_count(epsilon: f64, delta: f64) -> Result<Self> {
        Self::new(epsilon, delta, 1)
    }

    fn log_term(&self) -> f64 {
        (2.0 / self.delta).ln()
    }

    pub fn alpha(&self) -> f64 {
        self.epsilon / (5.0 * (2.0 * self.log_term()).sqrt())
    }

    pub fn beta(&self) -> f64 {
        self.epsilon / (4.0 * (self.p as f64 + self.log_term()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum NoiseSource {
    Global,
    Smooth { alpha: f64, beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseScale {
    pub sigma: f64,
    pub source: NoiseSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Release {
    pub value: f64,
    pub scale: NoiseScale,
}

pub fn global_noise_scale(gs: usize, pp: &PrivacyParams) -> Result<NoiseScale> {
    if gs < 1 {
        return Err(Error::InvalidArgument("global sensitivity must be >= 1".into()));
    }
    Ok(NoiseScale {
        sigma: gs as f64 * (2.0 * pp.log_term()).sqrt() / pp.epsilon,
        source: NoiseSource::Global,
    })
}

pub fn smooth_noise_scale(bound: &SensitivityBound, pp: &PrivacyParams) -> Result<NoiseScale> {
    if bound.kind != BoundKind::SmoothUpper {
        return Err(Error::Consistency(format!(
            "smooth-sensitivity noise needs a smooth upper bound, got {:?}",
            bound.kind
        )));
    }
    let beta = pp.beta();
    match bound.params.beta {
        Some(b) if (b - beta).abs() <= 1e-12 * beta => {}
        other => {
            return Err(Error::Consistency(format!(
                "bound computed with beta = {other:?}, but (epsilon, delta, p) = ({}, {}, {}) requires beta = {beta}",
                pp.epsilon, pp.delta, pp.p
            )));
        }
    }
    if !(bound.value > 0.0 && bound.value.is_finite()) {
        return Err(Error::InvalidArgument(format!("smooth bound must be positive, got {}", bound.value)));
    }
    let alpha = pp.alpha();
    Ok(NoiseScale {
        sigma: bound.value / alpha,
        source: NoiseSource::Smooth { alpha, beta },
    })
}

pub fn gaussian_by_global<R: Rng + ?Sized>(
    count: usize,
    gs_upper: usize,
    pp: &PrivacyParams,
    rng: &mut R,
) -> Result<Release> {
    let scale = global_noise_scale(gs_upper, pp)?;
    let y: f64 = rng.sample(StandardNormal);
    Ok(Release {
        value: count as f64 + scale.sigma * y,
        scale,
    })
}

pub fn gaussian_by_smooth<R: Rng + ?Sized>(
    count: usize,
    smooth_bound: &SensitivityBound,
    pp: &PrivacyParams,
    rng: &mut R,
) -> Result<Release> {
    let scale = smooth_noise_scale(smooth_bound, pp)?;
    let y: f64 = rng.sample(StandardNormal);
    Ok(Release {
        value: count as f64 + scale.sigma * y,
        scale,
    })
}

/// Selection probabilities `exp(eps u_i) / sum_j exp(eps u_j)`, computed after
/// shifting by the largest utility.
pub fn exponential_probabilities(utilities: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    if utilities.is_empty() {
        return Err(Error::InvalidArgument("exponential mechanism needs a candidate".into()));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon must be > 0, got {epsilon}")));
    }
    if utilities.iter().any(|u| !u.is_finite()) {
        return Err(Error::InvalidArgument("utilities must be finite".into()));
    }
    let top = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = utilities.iter().map(|u| (epsilon * (u - top)).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Index of the sampled candidate.
pub fn exponential_choice<R: Rng + ?Sized>(utilities: &[f64], epsilon: f64, rng: &mut R) -> Result<usize> {
    let probs = exponential_probabilities(utilities, epsilon)?;
    let dist = WeightedIndex::new(&probs)
        .map_err(|e| Error::InvalidArgument(format!("selection weights: {e}")))?;
    Ok(dist.sample(rng))
}

pub fn subspace_utility(
    x: &Dataset,
    s: &Subspace,
    p: &OutlierParams,
    table: &KissingNumberTable,
) -> Result<f64> {
    let (_, gs_upper) = global_sensitivity_bounds(x.len(), s.len(), p.k, table)?;
    let count = count_outliers(x, s, p)?;
    Ok(count as f64 / gs_upper as f64)
}

/// `h` distinct indices, each drawn by the exponential mechanism at
/// `epsilon / h` among the candidates not yet selected.
pub fn top_h_from_utilities<R: Rng + ?Sized>(
    utilities: &[f64],
    h: usize,
    epsilon: f64,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if h < 1 || h > utilities.len() {
        return Err(Error::InvalidArgument(format!(
            "h = {h} must be in 1..={}",
            utilities.len()
        )));
    }
    let per_round = epsilon / h as f64;
    let mut remaining: Vec<usize> = (0..utilities.len()).collect();
    let mut chosen = Vec::with_capacity(h);
    for _ in 0..h {
        let u: Vec<f64> = remaining.iter().map(|&i| utilities[i]).collect();
        let pick = exponential_choice(&u, per_round, rng)?;
        chosen.push(remaining.remove(pick));
    }
    Ok(chosen)
}

/// Private top-h subspace discovery. Records `2 * epsilon` in the ledger.
#[allow(clippy::too_many_arguments)]
pub fn top_h_subspaces<R: Rng + ?Sized>(
    x: &Dataset,
    candidates: &[Subspace],
    p: &OutlierParams,
    h: usize,
    epsilon: f64,
    table: &KissingNumberTable,
    rng: &mut R,
    ledger: &mut BudgetLedger,
) -> Result<Vec<Subspace>> {
    if h < 1 || h > candidates.len() {
        return Err(Error::InvalidArgument(format!(
            "h = {h} must be in 1..={}",
            candidates.len()
        )));
    }
    let utilities = candidates
        .iter()
        .map(|s| subspace_utility(x, s, p, table))
        .collect::<Result<Vec<_>>>()?;
    top_h_select(candidates, &utilities, h, epsilon, rng, ledger)
}

/// [`top_h_subspaces`] with the utilities already computed, for repeated
/// runs on the same data. Records `2 * epsilon` in the ledger.
pub fn top_h_select<R: Rng + ?Sized>(
    candidates: &[Subspace],
    utilities: &[f64],
    h: usize,
    epsilon: f64,
    rng: &mut R,
    ledger: &mut BudgetLedger,
) -> Result<Vec<Subspace>> {
    if utilities.len() != candidates.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} utilities for {} candidates",
            utilities.len(),
            candidates.len()
        )));
    }
    let picks = top_h_from_utilities(utilities, h, epsilon, rng)?;
    ledger.record_spend(
        format!("top-{h} subspace discovery over {} candidates", candidates.len()),
        2.0 * epsilon,
        0.0,
    )?;
    Ok(picks.into_iter().map(|i| candidates[i].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensitivity::BoundParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn smooth(value: f64, beta: f64) -> SensitivityBound {
        SensitivityBound {
            kind: BoundKind::SmoothUpper,
            value,
            params: BoundParams {
                n: 50,
                dim: 2,
                k: 3,
                r: Some(1.1),
                beta: Some(beta),
                t: None,
            },
        }
    }

    #[test]
    fn privacy_params_validation() {
        assert!(PrivacyParams::new(0.0, 0.01, 1).is_err());
        assert!(PrivacyParams::new(1.0, 0.0, 1).is_err());
        assert!(PrivacyParams::new(1.0, 1.0, 1).is_err());
        assert!(PrivacyParams::new(1.0, 0.01, 0).is_err());
        assert!(PrivacyParams::new(f64::INFINITY, 0.01, 1).is_err());
    }

    #[test]
    fn global_sigma_example() {
        let pp = PrivacyParams::for_count(1.0, 0.01).unwrap();
        let s = global_noise_scale(7, &pp).unwrap();
        assert!((s.sigma * s.sigma - 49.0 * 2.0 * 200f64.ln()).abs() < 1e-9);
        assert!((s.sigma * s.sigma - 519.23).abs() < 0.01);
        assert!((s.sigma - 22.79).abs() < 0.01);
        assert!(global_noise_scale(0, &pp).is_err());
    }

    #[test]
    fn smooth_params_example() {
        let pp = PrivacyParams::for_count(0.7, 0.01).unwrap();
        assert!((pp.alpha() - 0.04301).abs() < 1e-5);
        assert!((pp.beta() - 0.02779).abs() < 1e-5);
        let s = smooth_noise_scale(&smooth(1.0, pp.beta()), &pp).unwrap();
        assert!((s.sigma - 23.25).abs() < 0.01);
        assert_eq!(
            s.source,
            NoiseSource::Smooth {
                alpha: pp.alpha(),
                beta: pp.beta()
            }
        );
    }

    #[test]
    fn smooth_rejects_mismatched_beta() {
        let pp = PrivacyParams::for_count(0.7, 0.01).unwrap();
        let wrong = PrivacyParams::for_count(0.5, 0.01).unwrap().beta();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err = gaussian_by_smooth(3, &smooth(2.0, wrong), &pp, &mut rng).unwrap_err();
        assert!(matches!(err, Error::Consistency(_)));
        let mut no_beta = smooth(2.0, pp.beta());
        no_beta.params.beta = None;
        assert!(matches!(smooth_noise_scale(&no_beta, &pp), Err(Error::Consistency(_))));
        let mut local = smooth(2.0, pp.beta());
        local.kind = BoundKind::LocalUpper;
        assert!(matches!(smooth_noise_scale(&local, &pp), Err(Error::Consistency(_))));
    }

    #[test]
    fn releases_are_seed_deterministic() {
        let pp = PrivacyParams::for_count(0.5, 0.01).unwrap();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (
                gaussian_by_global(5, 7, &pp, &mut rng).unwrap().value,
                gaussian_by_smooth(5, &smooth(1.5, pp.beta()), &pp, &mut rng).unwrap().value,
            )
        };
        assert_eq!(run(9), run(9));
        assert_ne!(run(9), run(10));
    }

    #[test]
    fn exponential_probabilities_two_point() {
        let p = exponential_probabilities(&[1.0, 0.0], 3f64.ln()).unwrap();
        assert!((p[0] - 0.75).abs() < 1e-12);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_probabilities_do_not_overflow() {
        let p = exponential_probabilities(&[1e6, 1e6 - 1.0, 0.0], 1e3).unwrap();
        assert!(p.iter().all(|v| v.is_finite()));
        assert!((p[0] - 1.0).abs() < 1e-12);
        let shifted = exponential_probabilities(&[1.0, 0.5, 0.0], 2.0).unwrap();
        let base = exponential_probabilities(&[101.0, 100.5, 100.0], 2.0).unwrap();
        for (a, b) in shifted.iter().zip(&base) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn exponential_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(exponential_choice(&[], 1.0, &mut rng).is_err());
        assert!(exponential_choice(&[f64::NAN], 1.0, &mut rng).is_err());
        assert!(exponential_choice(&[1.0], 0.0, &mut rng).is_err());
    }

    #[test]
    fn top_h_exhausts_candidates() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut picks = top_h_from_utilities(&[0.3, 0.1, 0.9, 0.0], 4, 1.0, &mut rng).unwrap();
        picks.sort_unstable();
        assert_eq!(picks, vec![0, 1, 2, 3]);
        assert!(top_h_from_utilities(&[0.3], 2, 1.0, &mut rng).is_err());
        assert!(top_h_from_utilities(&[0.3], 0, 1.0, &mut rng).is_err());
    }

    #[test]
    fn top_h_records_double_epsilon() {
        let x = Dataset::new(
            "t",
            vec![vec![0.0, 0.0], vec![9.0, 0.1], vec![18.0, 0.2], vec![27.0, 0.3]],
        )
        .unwrap();
        let p = OutlierParams::new(1, 1.0).unwrap();
        let cands = Subspace::combinations(2, 1).unwrap();
        let mut ledger = BudgetLedger::new();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let table = KissingNumberTable::default();
        let out = top_h_subspaces(&x, &cands, &p, 2, 0.8, &table, &mut rng, &mut ledger).unwrap();
        assert_eq!(out.len(), 2);
        assert_ne!(out[0], out[1]);
        assert_eq!(ledger.entries().len(), 1);
        assert!((ledger.total_epsilon() - 1.6).abs() < 1e-12);
        assert_eq!(ledger.total_delta(), 0.0);
        let err = top_h_subspaces(&x, &cands, &p, 3, 0.8, &table, &mut rng, &mut ledger);
        assert!(err.is_err());
        assert_eq!(ledger.entries().len(), 1);
    }

    #[test]
    fn subspace_utility_examples() {
        let table = KissingNumberTable::default();
        // seven isolated points on attribute 1, k = 3: count 7, GS upper 3*2+1 = 7
        let rows: Vec<Vec<f64>> = (0..7).map(|i| vec![10.0 * i as f64, 0.0]).collect();
        let x = Dataset::new("t", rows).unwrap();
        let p = OutlierParams::new(3, 1.0).unwrap();
        let s1 = Subspace::from_one_based([1]).unwrap();
        assert_eq!(subspace_utility(&x, &s1, &p, &table).unwrap(), 1.0);
        // attribute 2 is constant: no outliers
        let p1 = OutlierParams::new(1, 1.0).unwrap();
        let s2 = Subspace::from_one_based([2]).unwrap();
        assert_eq!(subspace_utility(&x, &s2, &p1, &table).unwrap(), 0.0);
    }
}
