//! Oracle-equivalence, soundness and DP-ratio checks on seeded random
//! instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use dpoutlier_core::mechanisms::{exponential_choice, subspace_utility};
use dpoutlier_core::oracle::{self, GridDomain};
use dpoutlier_core::outlier::degree_profile;
use dpoutlier_core::seb::smallest_enclosing_ball;
use dpoutlier_core::sensitivity::{largest_coverable_subset, DEFAULT_POOL_CAP};
use dpoutlier_core::{
    count_outliers, Dataset, KissingNumberTable, OutlierParams, PrivacyParams, SearchConfig, SensitivityContext,
    SmoothParams, Subspace,
};

use crate::config::{RunConfig, Scenario, VerifyConfig};
use crate::{derive_seed, CliError};

pub const SEB: &str = "seb-vs-oracle";
pub const RECOUNT: &str = "degree-recount";
pub const COVERABLE: &str = "coverable-vs-oracle";
pub const SMOOTH: &str = "smooth-pruning-vs-unpruned";
pub const LOCAL: &str = "local-bound-soundness";
pub const LS_T: &str = "ls-t-soundness";
pub const DP_RATIO: &str = "exponential-dp-ratio";
pub const CHECKS: [&str; 7] = [SEB, RECOUNT, COVERABLE, SMOOTH, LOCAL, LS_T, DP_RATIO];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub instances: usize,
    pub min_instances: usize,
    pub failures: Vec<String>,
}

impl CheckResult {
    fn new(name: &str, min_instances: usize) -> Self {
        Self {
            name: name.to_string(),
            instances: 0,
            min_instances,
            failures: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.instances >= self.min_instances
    }

    fn fail(&mut self, instance: usize, seed: u64, what: String) {
        self.failures.push(format!("instance {instance} (seed {seed}): {what}"));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyRow {
    pub check: String,
    pub instances: usize,
    pub min_instances: usize,
    pub failures: usize,
    pub passed: bool,
    pub first_failure: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }

    pub fn failed_names(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed()).map(|c| c.name.as_str()).collect()
    }

    pub fn rows(&self) -> Vec<VerifyRow> {
        self.checks
            .iter()
            .map(|c| VerifyRow {
                check: c.name.clone(),
                instances: c.instances,
                min_instances: c.min_instances,
                failures: c.failures.len(),
                passed: c.passed(),
                first_failure: c.failures.first().cloned().unwrap_or_default(),
            })
            .collect()
    }
}

pub fn run_verify(cfg: &RunConfig) -> Result<VerifyReport, CliError> {
    if cfg.scenario != Scenario::Verify {
        return Err(CliError::Config(format!(
            "config is for scenario '{}', not 'verify'",
            cfg.scenario.name()
        )));
    }
    let v = cfg.verify.clone().unwrap_or_default();
    if let Some(name) = &v.inject_failure {
        if !CHECKS.contains(&name.as_str()) {
            return Err(CliError::Config(format!(
                "unknown check '{name}' for failure injection; known: {}",
                CHECKS.join(", ")
            )));
        }
    }
    run_checks(cfg.seed, &v)
}

pub fn run_checks(seed: u64, v: &VerifyConfig) -> Result<VerifyReport, CliError> {
    let inject = |name: &str| v.inject_failure.as_deref() == Some(name);
    Ok(VerifyReport {
        checks: vec![
            check_seb(seed, v.seb_instances, inject(SEB))?,
            check_recount(seed, v.recount_instances, inject(RECOUNT))?,
            check_coverable(seed, v.pools, inject(COVERABLE))?,
            check_smooth_pruning(seed, v.smooth_instances, inject(SMOOTH))?,
            check_local_soundness(seed, v.local_instances, inject(LOCAL))?,
            check_ls_t_soundness(seed, v.ls_t_instances, inject(LS_T))?,
            check_dp_ratio(seed, v.dp_pairs, v.dp_draws, v.dp_epsilon, inject(DP_RATIO))?,
        ],
    })
}

fn instance_rng(seed: u64, check: &str, i: usize) -> (u64, ChaCha8Rng) {
    let id = CHECKS.iter().position(|c| *c == check).unwrap_or(CHECKS.len()) as u64;
    let s = derive_seed(seed, id + 1, i as u64);
    (s, ChaCha8Rng::seed_from_u64(s))
}

fn uniform_points(rng: &mut ChaCha8Rng, n: usize, d: usize, half_width: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-half_width..half_width)).collect())
        .collect()
}

/// A few tight clusters plus scattered points, so that degrees spread over
/// a range around small `k`.
fn clustered_dataset(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Dataset {
    let centers = uniform_points(rng, 3, d, 3.0);
    let rows = (0..n)
        .map(|_| {
            if rng.random_bool(0.25) {
                (0..d).map(|_| rng.random_range(-4.0..4.0)).collect()
            } else {
                let c = &centers[rng.random_range(0..centers.len())];
                c.iter().map(|v| v + rng.random_range(-0.7..0.7)).collect()
            }
        })
        .collect();
    Dataset::new("verify", rows).expect("finite, equal dimensions")
}

pub fn check_seb(seed: u64, instances: usize, inject: bool) -> Result<CheckResult, CliError> {
    let mut res = CheckResult::new(SEB, instances);
    for i in 0..instances {
        let (s, mut rng) = instance_rng(seed, SEB, i);
        let d = 1 + i % 3;
        let n = rng.random_range(1..=8);
        let mut pts = uniform_points(&mut rng, n, d, 2.0);
        if n > 2 && rng.random_bool(0.2) {
            pts[n - 1] = pts[0].clone();
        }
        let mut fast = smallest_enclosing_ball(&pts)?.radius;
        if inject {
            fast *= 1.01;
        }
        let slow = oracle::brute_seb_radius(&pts)?;
        if (fast - slow).abs() > 1e-9 * slow.max(1.0) {
            res.fail(i, s, format!("solver radius {fast} vs oracle {slow}"));
        }
        res.instances += 1;
    }
    Ok(res)
}

pub fn check_recount(seed: u64, instances: usize, inject: bool) -> Result<CheckResult, CliError> {
    let mut res = CheckResult::new(RECOUNT, instances);
    for i in 0..instances {
        let (s, mut rng) = instance_rng(seed, RECOUNT, i);
        let d = 1 + i % 4;
        let n = rng.random_range(1..=60);
        let x = clustered_dataset(&mut rng, n, d);
        let sub = Subspace::full(d)?;
        let p = OutlierParams::new(rng.random_range(1..=4), rng.random_range(0.2..1.5))?;
        let mut fast = count_outliers(&x, &sub, &p)?;
        if inject {
            fast += 1;
        }
        let slow = oracle::brute_count(&x, &sub, &p)?;
        let degrees_match = degree_profile(&x, &sub, &p)?.degrees() == oracle::brute_degrees(&x, &sub, &p)?;
        if fast != slow || !degrees_match {
            res.fail(i, s, format!("count {fast} vs recount {slow}, degrees match: {degrees_match}"));
        }
        res.instances += 1;
    }
    Ok(res)
}

pub fn check_coverable(seed: u64, instances: usize, inject: bool) -> Result<CheckResult, CliError> {
    let mut res = CheckResult::new(COVERABLE, instances);
    for i in 0..instances {
        let (s, mut rng) = instance_rng(seed, COVERABLE, i);
        let d = 1 + i % 3;
        let n = rng.random_range(0..=10);
        let pool = uniform_points(&mut rng, n, d, 1.0);
        let r = rng.random_range(0.15..1.0);
        let mut fast = largest_coverable_subset(&pool, r, DEFAULT_POOL_CAP)?;
        if inject {
            fast += 1;
        }
        let slow = oracle::brute_coverable(&pool, r)?;
        if fast != slow {
            res.fail(i, s, format!("search {fast} vs enumeration {slow} (n={n}, d={d}, r={r})"));
        }
        res.instances += 1;
    }
    Ok(res)
}

pub fn check_smooth_pruning(seed: u64, instances: usize, inject: bool) -> Result<CheckResult, CliError> {
    let mut res = CheckResult::new(SMOOTH, instances);
    for i in 0..instances {
        let (s, mut rng) = instance_rng(seed, SMOOTH, i);
        let d = 1 + i % 3;
        let n = rng.random_range(1..=15);
        let x = clustered_dataset(&mut rng, n, d);
        let sub = Subspace::full(d)?;
        let p = OutlierParams::new(rng.random_range(1..=4), rng.random_range(0.3..1.5))?;
        let pp = PrivacyParams::for_count(rng.random_range(0.05..3.0), 0.01)?;
        let sp = SmoothParams::new(pp.beta())?;
        let cfg = SearchConfig::default();
        let mut pruned = SensitivityContext::new(&x, &sub, p, cfg)?.smooth_bound(&sp)?.value;
        if inject {
            pruned *= 0.5;
        }
        let full = oracle::brute_smooth_bound(&x, &sub, &p, &sp, cfg)?;
        if pruned != full {
            res.fail(i, s, format!("pruned {pruned} vs unpruned {full}"));
        }
        res.instances += 1;
    }
    Ok(res)
}

fn grid_instance(rng: &mut ChaCha8Rng, max_n: usize) -> Result<(GridDomain, Dataset, OutlierParams), CliError> {
    let grid = GridDomain::uniform(2, -2.0, 2.0, 5)?;
    let n = rng.random_range(1..=max_n);
    let x = grid.random_dataset(n, rng)?;
    let p = OutlierParams::new(rng.random_range(1..=3), rng.random_range(0.3..2.0))?;
    Ok((grid, x, p))
}

pub fn check_local_soundness(seed: u64, instances: usize, inject: bool) -> Result<CheckResult, CliError> {
    let mut res = CheckResult::new(LOCAL, instances);
    let sub = Subspace::full(2)?;
    for i in 0..instances {
        let (s, mut rng) = instance_rng(seed, LOCAL, i);
        let (grid, x, p) = grid_instance(&mut rng, oracle::MAX_GRID_RECORDS)?;
        let ctx = SensitivityContext::new(&x, &sub, p, SearchConfig::default())?;
        let mut bound = ctx.local_bound()?.value;
        if inject {
            bound = 0.0;
        }
        let exact = oracle::brute_local_sensitivity(&x, &grid, &sub, &p)?;
        if (exact as f64) > bound {
            res.fail(i, s, format!("exact LS {exact} above bound {bound}"));
        }
        res.instances += 1;
    }
    Ok(res)
}

pub fn check_ls_t_soundness(seed: u64, instances: usize, inject: bool) -> Result<CheckResult, CliError> {
    let mut res = CheckResult::new(LS_T, instances);
    let sub = Subspace::full(2)?;
    for i in 0..instances {
        let (s, mut rng) = instance_rng(seed, LS_T, i);
        let t = 1 + i % 2;
        let (grid, x, p) = grid_instance(&mut rng, if t == 1 { 6 } else { 4 })?;
        let ctx = SensitivityContext::new(&x, &sub, p, SearchConfig::default())?;
        let mut bound = ctx.ls_t(t)?;
        if inject {
            bound = 0;
        }
        let exact = oracle::brute_ls_t(&x, &grid, &sub, &p, t)?;
        if exact > bound {
            res.fail(i, s, format!("exact LS^({t}) {exact} above bound {bound}"));
        }
        res.instances += 1;
    }
    Ok(res)
}

/// Exponential mechanism over the candidates {1}, {2}, {1,2} on a tiny grid
/// dataset and its worst single-record neighbor among a few random moves.
pub fn check_dp_ratio(
    seed: u64,
    pairs: usize,
    draws: usize,
    epsilon: f64,
    inject: bool,
) -> Result<CheckResult, CliError> {
    let mut res = CheckResult::new(DP_RATIO, pairs);
    let table = KissingNumberTable::default();
    let candidates = [
        Subspace::new([0])?,
        Subspace::new([1])?,
        Subspace::new([0, 1])?,
    ];
    for i in 0..pairs {
        let (s, mut rng) = instance_rng(seed, DP_RATIO, i);
        let grid = GridDomain::uniform(2, -2.0, 2.0, 5)?;
        let x = grid.random_dataset(6, &mut rng)?;
        let p = OutlierParams::new(2, 0.8)?;
        let utilities = |ds: &Dataset| -> Result<Vec<f64>, CliError> {
            candidates
                .iter()
                .map(|c| Ok(subspace_utility(ds, c, &p, &table)?))
                .collect()
        };
        let u = utilities(&x)?;
        let mut best = (0.0, u.clone());
        for _ in 0..40 {
            let y = x.with_record_replaced(rng.random_range(0..x.len()), grid.random_cell(&mut rng))?;
            let u2 = utilities(&y)?;
            let du = u.iter().zip(&u2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if du > best.0 {
                best = (du, u2);
            }
        }
        let (du, u_prime) = best;
        let report = oracle::empirical_dp_check(
            |r: &mut ChaCha8Rng| exponential_choice(&u, epsilon, r).expect("valid utilities"),
            |r: &mut ChaCha8Rng| exponential_choice(&u_prime, epsilon, r).expect("valid utilities"),
            candidates.len(),
            draws,
            100,
            &mut rng,
        )?;
        let mut bound = (2.0 * epsilon * du).exp();
        if inject {
            bound *= 0.5;
        }
        if !report.within(bound, 3.0) {
            res.fail(
                i,
                s,
                format!("max ratio {} (se {}) above e^(2 eps du) = {bound}", report.max_ratio, report.max_ratio_se),
            );
        }
        if report.insufficient_draws {
            res.fail(i, s, format!("{draws} draws too few for every outcome"));
        }
        res.instances += 1;
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> VerifyConfig {
        VerifyConfig {
            pools: 20,
            smooth_instances: 5,
            local_instances: 5,
            ls_t_instances: 2,
            seb_instances: 20,
            recount_instances: 5,
            dp_pairs: 1,
            dp_draws: 20_000,
            dp_epsilon: 0.5,
            inject_failure: None,
        }
    }

    #[test]
    fn small_suite_passes() {
        let report = run_checks(3, &small()).unwrap();
        assert!(report.passed(), "{:?}", report.failed_names());
        assert_eq!(report.rows().len(), CHECKS.len());
    }

    #[test]
    fn injected_failure_is_named() {
        for name in [COVERABLE, SMOOTH, RECOUNT, SEB] {
            let mut v = small();
            v.inject_failure = Some(name.to_string());
            let report = run_checks(3, &v).unwrap();
            assert_eq!(report.failed_names(), vec![name]);
        }
    }

    #[test]
    fn unknown_injection_is_a_config_error() {
        let mut cfg = RunConfig::new(Scenario::Verify);
        cfg.verify = Some(VerifyConfig {
            inject_failure: Some("nope".into()),
            ..small()
        });
        assert!(matches!(run_verify(&cfg), Err(CliError::Config(_))));
    }
}
