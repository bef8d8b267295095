//! Brute-force reference implementations for checking the optimized code.
//!
//! Everything here is deliberately naive: its own distance function, its own
//! enclosing-ball routine (enumerate support sets, keep the smallest valid
//! circumscribed ball), full subset enumeration and exhaustive record moves
//! over a finite grid domain. Inputs are hard-capped so an accidental large
//! instance fails fast instead of running for hours.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::outlier::{Dataset, OutlierParams, Subspace};
use crate::sensitivity::{discount, SearchConfig, SensitivityContext, SmoothParams};

pub const MAX_BRUTE_POOL: usize = 20;
pub const MAX_GRID_RECORDS: usize = 8;
pub const MAX_GRID_CELLS: usize = 10_000;
pub const MAX_SMOOTH_RECORDS: usize = 15;
/// Neighboring datasets enumerated by [`brute_ls_t`].
pub const MAX_NEIGHBORHOOD: usize = 200_000;

const TOL: f64 = 1e-9;

/// A finite stand-in for the record domain: a product of per-attribute levels.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDomain {
    levels: Vec<Vec<f64>>,
}

impl GridDomain {
    pub fn new(levels: Vec<Vec<f64>>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidArgument("grid needs at least one attribute".into()));
        }
        if levels.iter().any(|l| l.len() < 2 || l.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidArgument(
                "every grid attribute needs at least 2 finite levels".into(),
            ));
        }
        let cells = levels
            .iter()
            .try_fold(1usize, |acc, l| acc.checked_mul(l.len()))
            .unwrap_or(usize::MAX);
        if cells > MAX_GRID_CELLS {
            return Err(Error::ResourceLimit {
                what: "grid domain",
                size: cells,
                cap: MAX_GRID_CELLS,
            });
        }
        Ok(Self { levels })
    }

    /// `m` evenly spaced levels on `[lo, hi]` in each of `d` attributes.
    pub fn uniform(d: usize, lo: f64, hi: f64, m: usize) -> Result<Self> {
        if m < 2 || !(hi > lo) {
            return Err(Error::InvalidArgument("uniform grid needs m >= 2 and hi > lo".into()));
        }
        let axis: Vec<f64> = (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect();
        Self::new(vec![axis; d])
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }

    pub fn n_cells(&self) -> usize {
        self.levels.iter().map(Vec::len).product()
    }

    /// All cells, last attribute varying fastest.
    pub fn cells(&self) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new()];
        for axis in &self.levels {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    axis.iter().map(move |&v| {
                        let mut c = prefix.clone();
                        c.push(v);
                        c
                    })
                })
                .collect();
        }
        out
    }

    pub fn random_cell<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.levels.iter().map(|l| l[rng.random_range(0..l.len())]).collect()
    }

    pub fn random_dataset<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Dataset> {
        Dataset::new("grid", (0..n).map(|_| self.random_cell(rng)).collect())
    }
}

/// Number of positions at which two equally sized datasets differ.
pub fn hamming(a: &Dataset, b: &Dataset) -> Result<usize> {
    if a.len() != b.len() || a.dim() != b.dim() {
        return Err(Error::DimensionMismatch("hamming distance needs equal shapes".into()));
    }
    Ok((0..a.len()).filter(|&i| a.record(i) != b.record(i)).count())
}

fn dist(a: &[f64], b: &[f64], s: &Subspace) -> f64 {
    let mut acc = 0.0;
    for &j in s.dims() {
        acc += (a[j] - b[j]) * (a[j] - b[j]);
    }
    (acc / s.len() as f64).sqrt()
}

fn check_subspace(x: &Dataset, s: &Subspace) -> Result<()> {
    match s.dims().last() {
        Some(&j) if j < x.dim() => Ok(()),
        _ => Err(Error::DimensionMismatch(format!("subspace {s} outside dimension {}", x.dim()))),
    }
}

fn brute_count_records(rows: &[Vec<f64>], s: &Subspace, p: &OutlierParams) -> usize {
    let mut outliers = 0;
    for (i, a) in rows.iter().enumerate() {
        let mut deg = 0;
        for (j, b) in rows.iter().enumerate() {
            if i != j && dist(a, b, s) <= p.r {
                deg += 1;
            }
        }
        if deg < p.k {
            outliers += 1;
        }
    }
    outliers
}

/// Neighbor counts by a plain double loop.
pub fn brute_degrees(x: &Dataset, s: &Subspace, p: &OutlierParams) -> Result<Vec<usize>> {
    check_subspace(x, s)?;
    let rows = x.records();
    Ok((0..rows.len())
        .map(|i| {
            (0..rows.len())
                .filter(|&j| j != i && dist(&rows[i], &rows[j], s) <= p.r)
                .count()
        })
        .collect())
}

pub fn brute_count(x: &Dataset, s: &Subspace, p: &OutlierParams) -> Result<usize> {
    check_subspace(x, s)?;
    Ok(brute_count_records(x.records(), s, p))
}

/// Radius of the smallest enclosing ball, by trying every affinely
/// independent support set of at most `d + 1` points and keeping the
/// smallest circumscribed ball that contains everything.
pub fn brute_seb_radius(points: &[Vec<f64>]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("no points".into()));
    }
    let d = points[0].len();
    if points.iter().any(|p| p.len() != d) {
        return Err(Error::DimensionMismatch("points of mixed dimension".into()));
    }
    let n = points.len();
    let max_support = (d + 1).min(n);
    let mut best = f64::INFINITY;
    let mut support = Vec::new();
    enumerate_supports(points, 0, max_support, &mut support, &mut best);
    Ok(best)
}

fn enumerate_supports(
    points: &[Vec<f64>],
    from: usize,
    max_support: usize,
    support: &mut Vec<usize>,
    best: &mut f64,
) {
    if !support.is_empty() {
        if let Some((center, radius)) = circumball(points, support) {
            let scale = 1.0 + radius;
            if radius < *best && points.iter().all(|p| euclid(p, &center) <= radius + TOL * scale) {
                *best = radius;
            }
        }
    }
    if support.len() == max_support {
        return;
    }
    for i in from..points.len() {
        support.push(i);
        enumerate_supports(points, i + 1, max_support, support, best);
        support.pop();
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Center and radius of the ball through `support` whose center lies in the
/// support's affine hull. Gram-Schmidt puts the offsets `q_i = p_i - p_0` in
/// lower-triangular coordinates, so `2 q_i . c = |q_i|^2` solves by forward
/// substitution. `None` if the support is affinely dependent.
fn circumball(points: &[Vec<f64>], support: &[usize]) -> Option<(Vec<f64>, f64)> {
    let p0 = &points[support[0]];
    let offsets: Vec<Vec<f64>> = support[1..]
        .iter()
        .map(|&i| points[i].iter().zip(p0).map(|(a, b)| a - b).collect())
        .collect();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut coords: Vec<Vec<f64>> = Vec::new();
    for q in &offsets {
        let mut residual = q.clone();
        let mut c = Vec::with_capacity(basis.len() + 1);
        for e in &basis {
            let proj: f64 = q.iter().zip(e).map(|(a, b)| a * b).sum();
            c.push(proj);
            for (r, b) in residual.iter_mut().zip(e) {
                *r -= proj * b;
            }
        }
        let norm = residual.iter().map(|v| v * v).sum::<f64>().sqrt();
        let qnorm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 1e-10 * qnorm.max(1e-300) || qnorm == 0.0 {
            return None;
        }
        c.push(norm);
        basis.push(residual.iter().map(|v| v / norm).collect());
        coords.push(c);
    }
    let m = coords.len();
    let mut y = vec![0.0; m];
    for i in 0..m {
        let sq: f64 = coords[i].iter().map(|v| v * v).sum();
        let mut rhs = sq / 2.0;
        for j in 0..i {
            rhs -= coords[i][j] * y[j];
        }
        y[i] = rhs / coords[i][i];
    }
    let mut center = p0.clone();
    for (yi, e) in y.iter().zip(&basis) {
        for (c, b) in center.iter_mut().zip(e) {
            *c += yi * b;
        }
    }
    let radius = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    Some((center, radius))
}

/// Largest `r`-coverable subset of `pool`, by checking every subset.
pub fn brute_coverable(pool: &[Vec<f64>], r: f64) -> Result<usize> {
    if pool.len() > MAX_BRUTE_POOL {
        return Err(Error::ResourceLimit {
            what: "brute-force coverable pool",
            size: pool.len(),
            cap: MAX_BRUTE_POOL,
        });
    }
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    let mut best = 0usize;
    for mask in 1u32..(1u32 << pool.len()) {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        let subset: Vec<Vec<f64>> = (0..pool.len())
            .filter(|&i| mask >> i & 1 == 1)
            .map(|i| pool[i].clone())
            .collect();
        if brute_seb_radius(&subset)? <= r + TOL {
            best = size;
        }
    }
    Ok(best)
}

fn check_grid_instance(x: &Dataset, grid: &GridDomain, s: &Subspace) -> Result<()> {
    check_subspace(x, s)?;
    if x.len() > MAX_GRID_RECORDS {
        return Err(Error::ResourceLimit {
            what: "grid-move oracle dataset",
            size: x.len(),
            cap: MAX_GRID_RECORDS,
        });
    }
    if grid.dim() != x.dim() {
        return Err(Error::DimensionMismatch(format!(
            "grid has dimension {}, data {}",
            grid.dim(),
            x.dim()
        )));
    }
    Ok(())
}

/// Exact local sensitivity of the outlier count over the grid: the largest
/// count change from moving any one record to any grid cell.
pub fn brute_local_sensitivity(x: &Dataset, grid: &GridDomain, s: &Subspace, p: &OutlierParams) -> Result<usize> {
    check_grid_instance(x, grid, s)?;
    Ok(local_sensitivity_rows(x.records(), &grid.cells(), s, p))
}

fn local_sensitivity_rows(rows: &[Vec<f64>], cells: &[Vec<f64>], s: &Subspace, p: &OutlierParams) -> usize {
    let base = brute_count_records(rows, s, p);
    let mut work = rows.to_vec();
    let mut worst = 0;
    for i in 0..rows.len() {
        for cell in cells {
            work[i] = cell.clone();
            worst = worst.max(brute_count_records(&work, s, p).abs_diff(base));
        }
        work[i] = rows[i].clone();
    }
    worst
}

/// `max` of the exact local sensitivity over every grid dataset within
/// Hamming distance `t` of `x` (changed records land on grid cells).
pub fn brute_ls_t(x: &Dataset, grid: &GridDomain, s: &Subspace, p: &OutlierParams, t: usize) -> Result<usize> {
    check_grid_instance(x, grid, s)?;
    let cells = grid.cells();
    let n = x.len();
    let t = t.min(n);
    // sum_{j<=t} C(n, j) * cells^j
    let mut neighborhood = 0usize;
    let mut choose = 1usize;
    for j in 0..=t {
        if j > 0 {
            choose = choose * (n - j + 1) / j;
        }
        neighborhood = neighborhood.saturating_add(choose.saturating_mul(cells.len().saturating_pow(j as u32)));
    }
    if neighborhood > MAX_NEIGHBORHOOD {
        return Err(Error::ResourceLimit {
            what: "Hamming neighborhood",
            size: neighborhood,
            cap: MAX_NEIGHBORHOOD,
        });
    }
    let mut rows = x.records().to_vec();
    let mut worst = 0;
    visit_neighborhood(&mut rows, &cells, 0, t, &mut |rows| {
        worst = worst.max(local_sensitivity_rows(rows, &cells, s, p));
    });
    Ok(worst)
}

/// Calls `f` on every dataset obtained by replacing at most `budget` of the
/// records at positions `>= from` by grid cells.
fn visit_neighborhood(
    rows: &mut Vec<Vec<f64>>,
    cells: &[Vec<f64>],
    from: usize,
    budget: usize,
    f: &mut dyn FnMut(&[Vec<f64>]),
) {
    if from == rows.len() || budget == 0 {
        f(rows);
        return;
    }
    visit_neighborhood(rows, cells, from + 1, budget, f);
    let original = rows[from].clone();
    for cell in cells {
        if *cell == original {
            continue;
        }
        rows[from] = cell.clone();
        visit_neighborhood(rows, cells, from + 1, budget - 1, f);
    }
    rows[from] = original;
}

/// `max_{0<=t<=N} e^{-t beta} LS^(t)` over every `t`, with no early exit.
pub fn brute_smooth_bound(
    x: &Dataset,
    s: &Subspace,
    p: &OutlierParams,
    sp: &SmoothParams,
    config: SearchConfig,
) -> Result<f64> {
    if x.len() > MAX_SMOOTH_RECORDS {
        return Err(Error::ResourceLimit {
            what: "unpruned smooth-bound dataset",
            size: x.len(),
            cap: MAX_SMOOTH_RECORDS,
        });
    }
    let ctx = SensitivityContext::new(x, s, *p, config)?;
    let mut best = 0.0f64;
    for t in 0..=x.len() {
        best = best.max(discount(t, sp.beta) * ctx.ls_t(t)? as f64);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutcomeRatio {
    pub outcome: usize,
    pub p: f64,
    pub p_prime: f64,
    /// `p / p_prime` oriented so that it is `>= 1`.
    pub ratio: f64,
    /// Delta-method standard error of `ratio`.
    pub se: f64,
    /// Both empirical frequencies reached the minimum count.
    pub reliable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpCheckReport {
    pub draws: usize,
    pub outcomes: Vec<OutcomeRatio>,
    /// Largest ratio over reliable outcomes (1 if there are none).
    pub max_ratio: f64,
    /// Standard error of the outcome attaining `max_ratio`.
    pub max_ratio_se: f64,
    /// Some outcome had too few draws on one side to estimate its ratio.
    pub insufficient_draws: bool,
}

impl DpCheckReport {
    pub fn max_log_ratio(&self) -> f64 {
        self.max_ratio.ln()
    }

    /// `max_ratio <= bound + z * se` for the worst outcome.
    pub fn within(&self, bound: f64, z: f64) -> bool {
        self.outcomes
            .iter()
            .filter(|o| o.reliable)
            .all(|o| o.ratio <= bound + z * o.se)
    }
}

/// Monte Carlo estimate of the per-outcome probability ratios between a
/// mechanism run on `X` and on a neighbor `X'`. Outcomes are indices in
/// `0..n_outcomes`; an outcome seen fewer than `min_count` times on either
/// side is marked unreliable and raises `insufficient_draws`.
pub fn empirical_dp_check<R, F, G>(
    mut on_x: F,
    mut on_x_prime: G,
    n_outcomes: usize,
    draws: usize,
    min_count: usize,
    rng: &mut R,
) -> Result<DpCheckReport>
where
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> usize,
    G: FnMut(&mut R) -> usize,
{
    if draws == 0 || n_outcomes == 0 {
        return Err(Error::InvalidArgument("need at least one draw and one outcome".into()));
    }
    let mut hits = vec![0usize; n_outcomes];
    let mut hits_prime = vec![0usize; n_outcomes];
    for _ in 0..draws {
        let o = on_x(rng);
        let o2 = on_x_prime(rng);
        if o >= n_outcomes || o2 >= n_outcomes {
            return Err(Error::InvalidArgument(format!(
                "mechanism returned outcome {} outside 0..{n_outcomes}",
                o.max(o2)
            )));
        }
        hits[o] += 1;
        hits_prime[o2] += 1;
    }
    let m = draws as f64;
    let mut outcomes = Vec::with_capacity(n_outcomes);
    for o in 0..n_outcomes {
        let (a, b) = (hits[o], hits_prime[o]);
        let (p, q) = (a as f64 / m, b as f64 / m);
        let reliable = a >= min_count.max(1) && b >= min_count.max(1);
        let (ratio, se) = if reliable {
            let (hi, lo) = if p >= q { (p, q) } else { (q, p) };
            let ratio = hi / lo;
            // Var(hi/lo) ~ ratio^2 (Var(hi)/hi^2 + Var(lo)/lo^2), Var(f) = f(1-f)/m
            let rel = (1.0 - hi) / (m * hi) + (1.0 - lo) / (m * lo);
            (ratio, ratio * rel.sqrt())
        } else {
            (f64::NAN, f64::NAN)
        };
        outcomes.push(OutcomeRatio {
            outcome: o,
            p,
            p_prime: q,
            ratio,
            se,
            reliable,
        });
    }
    let worst = outcomes
        .iter()
        .filter(|o| o.reliable)
        .max_by(|a, b| a.ratio.total_cmp(&b.ratio));
    let (max_ratio, max_ratio_se) = worst.map_or((1.0, 0.0), |o| (o.ratio, o.se));
    let insufficient_draws = outcomes.iter().any(|o| !o.reliable && (o.p > 0.0 || o.p_prime > 0.0));
    Ok(DpCheckReport {
        draws,
        outcomes,
        max_ratio,
        max_ratio_se,
        insufficient_draws,
    })
}
