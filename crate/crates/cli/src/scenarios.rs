//! Scenario drivers. Each returns its table; `emit_rows` writes it as CSV.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use dpoutlier_core::data_io::evaluate_detection;
use dpoutlier_core::mechanisms::{self, PrivacyParams};
use dpoutlier_core::outlier::{count_outliers, outlier_indices};
use dpoutlier_core::sensitivity::{global_sensitivity_bounds, SensitivityBound, SensitivityContext, SmoothParams};
use dpoutlier_core::{BudgetLedger, Dataset, KissingNumberTable, Label, OutlierParams, Subspace};

use crate::config::{BoundsConfig, RunConfig, Scenario, MAX_CANDIDATES};
use crate::{derive_seed, CliError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountRow {
    pub dataset: String,
    pub eps: f64,
    pub delta: f64,
    pub true_count: usize,
    pub sigma_global: f64,
    pub sigma_smooth: f64,
    pub noisy_global: f64,
    pub noisy_smooth: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopHRow {
    pub dataset: String,
    pub eps: f64,
    pub delta: f64,
    pub h: usize,
    pub c: usize,
    pub reps: usize,
    pub precision: f64,
    pub recall: f64,
    /// Budget spent per repetition: discovery plus the follow-up counts.
    pub ledger_epsilon: f64,
    pub ledger_delta: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BoundsRow {
    pub d: usize,
    pub k: usize,
    pub lower: usize,
    pub upper: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneRow {
    pub r: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub selected: bool,
}

fn expect_scenario(cfg: &RunConfig, want: Scenario) -> Result<(), CliError> {
    if cfg.scenario != want {
        return Err(CliError::Config(format!(
            "config is for scenario '{}', not '{}'",
            cfg.scenario.name(),
            want.name()
        )));
    }
    cfg.validate()
}

fn smooth_bound_for(
    x: &Dataset,
    s: &Subspace,
    p: OutlierParams,
    pp: &PrivacyParams,
    cfg: &RunConfig,
) -> Result<SensitivityBound, CliError> {
    let ctx = SensitivityContext::new(x, s, p, cfg.search_config())?;
    Ok(ctx.smooth_bound(&SmoothParams::new(pp.beta())?)?)
}

/// Scenario 1: one private count per epsilon (and repetition), released
/// both with global-bound noise (using the lower bound on GS) and with
/// smooth-sensitivity noise.
pub fn run_scenario1(cfg: &RunConfig) -> Result<Vec<CountRow>, CliError> {
    expect_scenario(cfg, Scenario::Count)?;
    let x = cfg.load_dataset()?;
    let s = cfg.subspace_for(&x)?;
    let p = cfg.outlier_params(&x, &s)?;
    let delta = cfg.delta()?;
    let table = KissingNumberTable::default();
    let (gs_lower, _) = global_sensitivity_bounds(x.len(), s.len(), p.k, &table)?;
    let true_count = count_outliers(&x, &s, &p)?;
    let ctx = SensitivityContext::new(&x, &s, p, cfg.search_config())?;

    let mut rows = Vec::new();
    for (ei, &eps) in cfg.epsilons().iter().enumerate() {
        let pp = PrivacyParams::for_count(eps, delta)?;
        let bound = ctx.smooth_bound(&SmoothParams::new(pp.beta())?)?;
        for rep in 0..cfg.reps {
            let seed = derive_seed(cfg.seed, ei as u64, rep as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let global = mechanisms::gaussian_by_global(true_count, gs_lower, &pp, &mut rng)?;
            let smooth = mechanisms::gaussian_by_smooth(true_count, &bound, &pp, &mut rng)?;
            rows.push(CountRow {
                dataset: x.name().to_string(),
                eps,
                delta,
                true_count,
                sigma_global: global.scale.sigma,
                sigma_smooth: smooth.scale.sigma,
                noisy_global: global.value,
                noisy_smooth: smooth.value,
                seed,
            });
        }
    }
    Ok(rows)
}

/// Subspaces counted as correct answers: the configured list, or else every
/// candidate in which at least half of the labeled outliers are detected.
pub fn true_subspaces(
    cfg: &RunConfig,
    x: &Dataset,
    candidates: &[Subspace],
    p: &OutlierParams,
) -> Result<Vec<bool>, CliError> {
    if let Some(list) = &cfg.true_subspaces {
        let truth = list
            .iter()
            .map(|dims| Subspace::from_one_based(dims.iter().copied()))
            .collect::<Result<Vec<_>, _>>()?;
        return Ok(candidates.iter().map(|s| truth.contains(s)).collect());
    }
    let labels = x.labels().ok_or_else(|| {
        CliError::Config("top-h evaluation needs labeled data or an explicit true_subspaces list".into())
    })?;
    let planted = labels.iter().filter(|&&l| l == Label::Outlier).count();
    candidates
        .iter()
        .map(|s| {
            let found = outlier_indices(x, s, p)?
                .into_iter()
                .filter(|&i| labels[i] == Label::Outlier)
                .count();
            Ok(planted > 0 && 2 * found >= planted)
        })
        .collect()
}

/// Scenario 2: per epsilon, `reps` runs of private top-h discovery followed
/// by a private count for each discovered subspace.
///
/// Budget split per run: discovery gets `eps / 2` (the mechanism runs at
/// `eps / 4` and is accounted at twice that), each of the `h` follow-up
/// counts gets `eps / (2h)` and `delta / h`.
pub fn run_scenario2(cfg: &RunConfig) -> Result<Vec<TopHRow>, CliError> {
    expect_scenario(cfg, Scenario::TopH)?;
    let x = cfg.load_dataset()?;
    let h = cfg.h.expect("validated");
    let c = cfg.c.expect("validated");
    if c < 1 || c > x.dim() {
        return Err(CliError::Config(format!("c = {c} must be in 1..={}", x.dim())));
    }
    let family = binomial(x.dim(), c);
    if family > MAX_CANDIDATES as u128 {
        return Err(CliError::Config(format!(
            "{family} candidate subspaces exceed the limit of {MAX_CANDIDATES}; lower c"
        )));
    }
    let candidates = Subspace::combinations(x.dim(), c)?;
    if h < 1 || h > candidates.len() {
        return Err(CliError::Config(format!("h = {h} must be in 1..={}", candidates.len())));
    }
    let s_full = Subspace::full(x.dim())?;
    let p = cfg.outlier_params(&x, &s_full)?;
    let delta = cfg.delta()?;
    let table = KissingNumberTable::default();
    let truth = true_subspaces(cfg, &x, &candidates, &p)?;
    let n_true = truth.iter().filter(|&&t| t).count();
    let counts = candidates
        .iter()
        .map(|s| count_outliers(&x, s, &p))
        .collect::<Result<Vec<_>, _>>()?;
    let utilities = candidates
        .iter()
        .map(|s| mechanisms::subspace_utility(&x, s, &p, &table))
        .collect::<Result<Vec<_>, _>>()?;

    let mut rows = Vec::new();
    for (ei, &eps) in cfg.epsilons().iter().enumerate() {
        let count_pp = PrivacyParams::for_count(eps / (2.0 * h as f64), delta / h as f64)?;
        let mut bounds: HashMap<usize, SensitivityBound> = HashMap::new();
        let (mut precision, mut recall) = (0.0, 0.0);
        let mut spent = (0.0, 0.0);
        for rep in 0..cfg.reps {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, ei as u64, rep as u64));
            let mut ledger = BudgetLedger::new();
            let picked = mechanisms::top_h_select(&candidates, &utilities, h, eps / 4.0, &mut rng, &mut ledger)?;
            let mut hits = 0;
            for s in &picked {
                let idx = candidates.iter().position(|cand| cand == s).expect("picked from candidates");
                if truth[idx] {
                    hits += 1;
                }
                let bound = match bounds.get(&idx) {
                    Some(b) => *b,
                    None => {
                        let b = smooth_bound_for(&x, s, p, &count_pp, cfg)?;
                        bounds.insert(idx, b);
                        b
                    }
                };
                mechanisms::gaussian_by_smooth(counts[idx], &bound, &count_pp, &mut rng)?;
                ledger.record_spend(format!("count in {s}"), count_pp.epsilon, count_pp.delta)?;
            }
            precision += hits as f64 / h as f64;
            if n_true > 0 {
                recall += hits as f64 / n_true as f64;
            }
            spent = (ledger.total_epsilon(), ledger.total_delta());
        }
        rows.push(TopHRow {
            dataset: x.name().to_string(),
            eps,
            delta,
            h,
            c,
            reps: cfg.reps,
            precision: precision / cfg.reps as f64,
            recall: recall / cfg.reps as f64,
            ledger_epsilon: spent.0,
            ledger_delta: spent.1,
            seed: cfg.seed,
        });
    }
    Ok(rows)
}

fn binomial(n: usize, c: usize) -> u128 {
    let c = c.min(n - c.min(n));
    (0..c).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

pub fn run_bounds_sweep(cfg: &RunConfig) -> Result<Vec<BoundsRow>, CliError> {
    expect_scenario(cfg, Scenario::Bounds)?;
    bounds_rows(&cfg.bounds.clone().unwrap_or_default())
}

pub fn bounds_rows(b: &BoundsConfig) -> Result<Vec<BoundsRow>, CliError> {
    let table = KissingNumberTable::default();
    let mut rows = Vec::new();
    for &d in &b.dims {
        for &k in &b.ks {
            let (lower, upper) = global_sensitivity_bounds(b.n, d, k, &table)?;
            rows.push(BoundsRow { d, k, lower, upper });
        }
    }
    Ok(rows)
}

/// Accuracy of the non-private detector for each grid radius; the selected
/// row is the one `tune_radius` picks.
pub fn run_tune_radius(cfg: &RunConfig) -> Result<Vec<TuneRow>, CliError> {
    expect_scenario(cfg, Scenario::TuneRadius)?;
    let x = cfg.load_dataset()?;
    let s = cfg.subspace_for(&x)?;
    let k = cfg.k.expect("validated");
    let grid = cfg.tune_grid.as_deref().expect("validated");
    let labels = x
        .labels()
        .ok_or_else(|| CliError::Config("radius tuning needs labeled data".into()))?;
    let chosen = dpoutlier_core::data_io::tune_radius(&x, &s, k, grid)?;
    grid.iter()
        .map(|&r| {
            let p = OutlierParams::new(k, r)?;
            let m = evaluate_detection(&outlier_indices(&x, &s, &p)?, labels)?;
            Ok(TuneRow {
                r,
                accuracy: m.accuracy,
                precision: m.precision,
                recall: m.recall,
                selected: r == chosen,
            })
        })
        .collect()
}
