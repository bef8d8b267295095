//! Sensitivity of the outlier count query.
//!
//! * Global bounds from kissing numbers: `min(N, 2dk+1) <= GS <= min(N, k K_d + 1)`.
//! * An upper bound on the local sensitivity from the degree-`k` and
//!   degree-`(k-1)` records a single move can reach.
//! * Upper bounds on `LS^(t)`, the largest local sensitivity among datasets
//!   at Hamming distance `t`, via the largest `r`-coverable subset of the
//!   records whose degree lies within `t` of `k` (resp. `k-1`).
//! * A smooth upper bound `max_t e^{-t beta} LS^(t)` evaluated with an early
//!   exit once a tail bound on the remaining terms falls below the running
//!   maximum.

use std::cell::RefCell;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kissing::KissingNumberTable;
use crate::outlier::{degree_profile, distance_unchecked, Dataset, DegreeProfile, OutlierParams, Subspace};
use crate::seb::{smallest_enclosing_ball, COVER_TOL};

/// Default cap on the size of a subset search handed to the exhaustive
/// include/exclude search (`O(2^n)` enclosing-ball calls).
pub const DEFAULT_POOL_CAP: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    GlobalLower,
    GlobalUpper,
    LocalUpper,
    LsTUpper,
    SmoothUpper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub n: usize,
    pub dim: usize,
    pub k: usize,
    pub r: Option<f64>,
    pub beta: Option<f64>,
    pub t: Option<usize>,
}

/// A sensitivity value tagged with what it bounds and the parameters it was
/// computed for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityBound {
    pub kind: BoundKind,
    pub value: f64,
    pub params: BoundParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothParams {
    pub beta: f64,
}

impl SmoothParams {
    /// `beta` may be `+inf`, which keeps only the `t = 0` term.
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::InvalidArgument(format!("beta must be > 0, got {beta}")));
        }
        Ok(Self { beta })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub pool_cap: usize,
    pub tol: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            pool_cap: DEFAULT_POOL_CAP,
            tol: COVER_TOL,
        }
    }
}

/// `(min(N, 2dk+1), min(N, k K_d + 1))`.
pub fn global_sensitivity_bounds(
    n: usize,
    d: usize,
    k: usize,
    table: &KissingNumberTable,
) -> Result<(usize, usize)> {
    let kd = table.upper(d)?;
    let n64 = n as u64;
    let (d64, k64) = (d as u64, k as u64);
    let lower = n64.min(d64.saturating_mul(k64).saturating_mul(2).saturating_add(1));
    let upper = n64.min(k64.saturating_mul(kd).saturating_add(1));
    Ok((lower as usize, upper as usize))
}

pub fn global_bound(
    kind: BoundKind,
    n: usize,
    d: usize,
    k: usize,
    table: &KissingNumberTable,
) -> Result<SensitivityBound> {
    let (lower, upper) = global_sensitivity_bounds(n, d, k, table)?;
    let value = match kind {
        BoundKind::GlobalLower => lower,
        BoundKind::GlobalUpper => upper,
        other => {
            return Err(Error::InvalidArgument(format!("{other:?} is not a global bound")));
        }
    };
    Ok(SensitivityBound {
        kind,
        value: value as f64,
        params: BoundParams {
            n,
            dim: d,
            k,
            r: None,
            beta: None,
            t: None,
        },
    })
}

/// Records of degree exactly `deg` within subspace distance `r` of `center`.
pub fn cv_set(
    x: &Dataset,
    s: &Subspace,
    center: &[f64],
    deg: usize,
    p: &OutlierParams,
    profile: &DegreeProfile,
) -> Result<Vec<usize>> {
    s.check(x.dim().min(center.len()))?;
    Ok(profile
        .level(deg)
        .iter()
        .copied()
        .filter(|&i| distance_unchecked(center, x.record(i), s) <= p.r)
        .collect())
}

/// Union of the level sets `V(deg+i)` for `i` in `[-t, t]`; degrees outside
/// `[0, N-1]` contribute nothing. Sorted ascending.
pub fn candidate_pool(profile: &DegreeProfile, deg: usize, t: usize) -> Vec<usize> {
    let n = profile.len();
    if n == 0 {
        return Vec::new();
    }
    let lo = deg.saturating_sub(t);
    let hi = deg.saturating_add(t).min(n - 1);
    if lo > hi {
        return Vec::new();
    }
    let mut pool: Vec<usize> = profile
        .level_sets()
        .range(lo..=hi)
        .flat_map(|(_, members)| members.iter().copied())
        .collect();
    pool.sort_unstable();
    pool
}

/// Size of the largest subset of `pool` whose smallest enclosing ball has
/// radius `<= r` (plus [`COVER_TOL`]); 0 for an empty pool.
///
/// Exhaustive include/exclude search: a branch stops as soon as its subset
/// stops being coverable (supersets only grow the ball) or can no longer beat
/// the best size found.
pub fn largest_coverable_subset<P: AsRef<[f64]>>(pool: &[P], r: f64, pool_cap: usize) -> Result<usize> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    if pool.len() > pool_cap {
        return Err(Error::ResourceLimit {
            what: "coverable-subset pool",
            size: pool.len(),
            cap: pool_cap,
        });
    }
    let pts: Vec<&[f64]> = pool.iter().map(AsRef::as_ref).collect();
    let mut search = SubsetSearch {
        pool: &pts,
        r,
        tol: COVER_TOL,
        best: 0,
    };
    let mut chosen = Vec::with_capacity(pts.len());
    search.run(0, &mut chosen);
    Ok(search.best)
}

struct SubsetSearch<'a, 'b> {
    pool: &'b [&'a [f64]],
    r: f64,
    tol: f64,
    best: usize,
}

impl<'a> SubsetSearch<'a, '_> {
    /// `chosen` is coverable on entry.
    fn run(&mut self, i: usize, chosen: &mut Vec<&'a [f64]>) {
        self.best = self.best.max(chosen.len());
        if i == self.pool.len() || chosen.len() + (self.pool.len() - i) <= self.best {
            return;
        }
        chosen.push(self.pool[i]);
        if self.coverable(chosen) {
            self.run(i + 1, chosen);
        }
        chosen.pop();
        self.run(i + 1, chosen);
    }

    fn coverable(&self, pts: &[&[f64]]) -> bool {
        pts.len() <= 1
            || smallest_enclosing_ball(pts).expect("nonempty, equal dimensions").radius
                <= self.r + self.tol
    }
}

/// Per-(dataset, subspace, params) state shared by the local, `LS^(t)` and
/// smooth bounds.
pub struct SensitivityContext<'a> {
    dataset: &'a Dataset,
    subspace: &'a Subspace,
    params: OutlierParams,
    config: SearchConfig,
    profile: DegreeProfile,
    embedded: Vec<Vec<f64>>,
    adjacency: Vec<Vec<bool>>,
    /// `LS^(t)` does not depend on beta, so it is shared across smooth bounds.
    ls_cache: RefCell<HashMap<usize, LsTerms>>,
}

type LsTerms = (usize, Option<usize>, Option<usize>);

impl<'a> SensitivityContext<'a> {
    pub fn new(
        dataset: &'a Dataset,
        subspace: &'a Subspace,
        params: OutlierParams,
        config: SearchConfig,
    ) -> Result<Self> {
        let profile = degree_profile(dataset, subspace, &params)?;
        let n = dataset.len();
        let embedded = dataset.records().iter().map(|x| subspace.embed(x)).collect();
        let mut adjacency = vec![vec![false; n]; n];
        for i in 0..n {
            adjacency[i][i] = true;
            for j in (i + 1)..n {
                let near = distance_unchecked(dataset.record(i), dataset.record(j), subspace) <= params.r;
                adjacency[i][j] = near;
                adjacency[j][i] = near;
            }
        }
        Ok(Self {
            dataset,
            subspace,
            params,
            config,
            profile,
            embedded,
            adjacency,
            ls_cache: RefCell::new(HashMap::new()),
        })
    }

    pub fn profile(&self) -> &DegreeProfile {
        &self.profile
    }

    pub fn n(&self) -> usize {
        self.dataset.len()
    }

    fn bound_params(&self, beta: Option<f64>, t: Option<usize>) -> BoundParams {
        BoundParams {
            n: self.n(),
            dim: self.subspace.len(),
            k: self.params.k,
            r: Some(self.params.r),
            beta,
            t,
        }
    }

    /// Largest number of records centred in a radius-`r` ball around some
    /// record; a lower bound on the coverable maximum.
    fn record_centred_cover(&self, pool: &[usize]) -> usize {
        (0..self.n())
            .map(|c| pool.iter().filter(|&&j| self.adjacency[c][j]).count())
            .max()
            .unwrap_or(0)
    }

    /// Largest `r`-coverable subset of the records in `pool`.
    ///
    /// The exhaustive search runs only on irreducible pieces: members of a
    /// coverable subset are pairwise within `2r`, so the pool splits into
    /// connected components of the `2r` graph, and a component larger than
    /// the cap is searched per anchor (the lowest-indexed member of the
    /// subset plus its later `2r` neighbors). The cap applies to each piece.
    fn max_coverable(&self, pool: &[usize], floor: usize) -> Result<usize> {
        if pool.is_empty() {
            return Ok(0);
        }
        match self.subspace.len() {
            1 => return Ok(floor.max(self.cover_1d(pool))),
            2 => return Ok(floor.max(self.cover_2d(pool))),
            _ => {}
        }
        let mut best = floor;
        let r = self.params.r;
        let tol = self.config.tol;
        let near2r = |a: usize, b: usize| {
            let d2: f64 = self.embedded[a]
                .iter()
                .zip(&self.embedded[b])
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            d2.sqrt() <= 2.0 * (r + tol)
        };

        let mut components = components(pool, &near2r);
        components.sort_by_key(|c| std::cmp::Reverse(c.len()));
        for comp in components {
            if comp.len() <= best {
                break;
            }
            let pts: Vec<&[f64]> = comp.iter().map(|&i| self.embedded[i].as_slice()).collect();
            if smallest_enclosing_ball(&pts)?.radius <= r + tol {
                best = comp.len();
                continue;
            }
            if comp.len() <= self.config.pool_cap {
                let mut search = SubsetSearch { pool: &pts, r, tol, best };
                search.run(0, &mut Vec::with_capacity(pts.len()));
                best = search.best;
                continue;
            }
            for (a, &anchor) in comp.iter().enumerate() {
                let rest: Vec<&[f64]> = comp[a + 1..]
                    .iter()
                    .filter(|&&j| near2r(anchor, j))
                    .map(|&j| self.embedded[j].as_slice())
                    .collect();
                if rest.len() + 1 <= best {
                    continue;
                }
                if rest.len() > self.config.pool_cap {
                    return Err(Error::ResourceLimit {
                        what: "coverable-subset search neighborhood",
                        size: rest.len(),
                        cap: self.config.pool_cap,
                    });
                }
                let mut search = SubsetSearch { pool: &rest, r, tol, best };
                search.run(0, &mut vec![self.embedded[anchor].as_slice()]);
                best = best.max(search.best);
            }
        }
        Ok(best)
    }

    /// Exact in one dimension: the best interval of length `2r` starts at a
    /// pool point.
    fn cover_1d(&self, pool: &[usize]) -> usize {
        let mut v: Vec<f64> = pool.iter().map(|&i| self.embedded[i][0]).collect();
        v.sort_by(f64::total_cmp);
        let width = 2.0 * (self.params.r + self.config.tol);
        let mut best = 0;
        let mut hi = 0;
        for lo in 0..v.len() {
            while hi < v.len() && v[hi] - v[lo] <= width {
                hi += 1;
            }
            best = best.max(hi - lo);
        }
        best
    }

    /// Exact in two dimensions: some optimal disc of radius `r` has two pool
    /// points on its boundary (or covers a single point), so it suffices to
    /// try the at most two such discs per pair.
    fn cover_2d(&self, pool: &[usize]) -> usize {
        let r = self.params.r;
        let reach = r + self.config.tol;
        let pts: Vec<[f64; 2]> = pool
            .iter()
            .map(|&i| [self.embedded[i][0], self.embedded[i][1]])
            .collect();
        let count = |c: [f64; 2]| {
            pts.iter()
                .filter(|p| ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt() <= reach)
                .count()
        };
        let mut best = 1;
        for a in 0..pts.len() {
            for b in (a + 1)..pts.len() {
                let (dx, dy) = (pts[b][0] - pts[a][0], pts[b][1] - pts[a][1]);
                let len = (dx * dx + dy * dy).sqrt();
                if len > 2.0 * reach {
                    continue;
                }
                let mid = [(pts[a][0] + pts[b][0]) / 2.0, (pts[a][1] + pts[b][1]) / 2.0];
                if len == 0.0 {
                    best = best.max(count(mid));
                    continue;
                }
                let h = (r * r - len * len / 4.0).max(0.0).sqrt();
                let (ux, uy) = (-dy / len, dx / len);
                best = best.max(count([mid[0] + h * ux, mid[1] + h * uy]));
                best = best.max(count([mid[0] - h * ux, mid[1] - h * uy]));
            }
        }
        best
    }

    /// `max_{x in D} |union_{|i|<=t} CV(X, x, deg+i, r)|`, or `None` when
    /// `lb + t + 1 >= N` already holds for the record-centred lower bound
    /// `lb`, so the clamped `LS^(t)` bound is `N` whatever the exact value.
    fn coverable_term(&self, deg: usize, t: usize) -> Result<Option<usize>> {
        let pool = candidate_pool(&self.profile, deg, t);
        // in one and two dimensions the exact cover is cheaper than the bound
        let exact = self.subspace.len() <= 2;
        let lb = if exact {
            self.max_coverable(&pool, 0)?
        } else {
            self.record_centred_cover(&pool)
        };
        if lb + t + 1 >= self.n() {
            return Ok(None);
        }
        if exact {
            return Ok(Some(lb));
        }
        self.max_coverable(&pool, lb).map(Some)
    }

    pub fn local_bound(&self) -> Result<SensitivityBound> {
        let k = self.params.k;
        let n = self.n();
        let removal = (0..n)
            .map(|c| self.profile.level(k).iter().filter(|&&j| self.adjacency[c][j]).count())
            .max()
            .unwrap_or(0);
        let pool = self.profile.level(k - 1);
        let lb = if self.subspace.len() <= 2 {
            self.max_coverable(pool, 0)?
        } else {
            self.record_centred_cover(pool)
        };
        let insertion = if lb + 1 >= n { lb } else { self.max_coverable(pool, lb)? };
        let value = n.min(removal.max(insertion) + 1);
        Ok(SensitivityBound {
            kind: BoundKind::LocalUpper,
            value: value as f64,
            params: self.bound_params(None, Some(0)),
        })
    }

    /// Upper bound on `LS^(t)` as an integer in `[1, N]`.
    pub fn ls_t(&self, t: usize) -> Result<usize> {
        Ok(self.ls_t_with_terms(t)?.0)
    }

    /// The bound together with the exact coverable terms for degrees `k` and
    /// `k-1` (`None` where the clamp made them unnecessary).
    fn ls_t_with_terms(&self, t: usize) -> Result<LsTerms> {
        if let Some(&hit) = self.ls_cache.borrow().get(&t) {
            return Ok(hit);
        }
        let terms = self.compute_ls_t(t)?;
        self.ls_cache.borrow_mut().insert(t, terms);
        Ok(terms)
    }

    fn compute_ls_t(&self, t: usize) -> Result<LsTerms> {
        let n = self.n();
        let k = self.params.k;
        if t + 1 >= n {
            return Ok((n, None, None));
        }
        let (Some(a), Some(b)) = (self.coverable_term(k, t)?, self.coverable_term(k - 1, t)?) else {
            return Ok((n, None, None));
        };
        Ok((n.min(a.max(b) + t + 1), Some(a), Some(b)))
    }

    pub fn ls_t_bound(&self, t: usize) -> Result<SensitivityBound> {
        Ok(SensitivityBound {
            kind: BoundKind::LsTUpper,
            value: self.ls_t(t)? as f64,
            params: self.bound_params(None, Some(t)),
        })
    }

    /// Sizes of the level sets `|V(j)|` for `j` in `0..N`.
    fn level_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n()];
        for (&deg, members) in self.profile.level_sets() {
            sizes[deg] = members.len();
        }
        sizes
    }

    /// `S_UB^{done}`: an upper bound on `e^{-t beta} LS^(t)` for every
    /// `t > done`, given the exact coverable terms at step `done` (zero for
    /// `done = -1`).
    fn tail_bound(&self, done: Option<usize>, cover_k: usize, cover_km1: usize, beta: f64, sizes: &[usize]) -> f64 {
        let n = self.n();
        let k = self.params.k;
        let first = done.map_or(0, |d| d + 1);
        // sum of |V(c+i)| over first <= |i| <= t, grown one shell per step
        let shell = |c: usize, i: usize| -> usize {
            let up = c.checked_add(i).filter(|&j| j < n).map_or(0, |j| sizes[j]);
            let down = if i == 0 { 0 } else { c.checked_sub(i).filter(|&j| j < n).map_or(0, |j| sizes[j]) };
            up + down
        };
        let (mut extra_k, mut extra_km1) = (0usize, 0usize);
        let mut worst = 0.0f64;
        for t in first..=n {
            extra_k += shell(k, t);
            extra_km1 += shell(k - 1, t);
            let u = (cover_k + extra_k).max(cover_km1 + extra_km1);
            let term = discount(t, beta) * n.min(u + t + 1) as f64;
            worst = worst.max(term);
        }
        worst
    }

    /// Smooth upper bound with the early exit; see [`SmoothTrace`].
    pub fn smooth_trace(&self, sp: &SmoothParams) -> Result<SmoothTrace> {
        let n = self.n();
        let beta = sp.beta;
        let sizes = self.level_sizes();
        let mut s_max = 0.0f64;
        let mut steps = Vec::new();
        // exact coverable terms from the previous step
        let (mut prev_k, mut prev_km1) = (0usize, 0usize);
        let mut done: Option<usize> = None;
        for t in 0..=n {
            let tail = self.tail_bound(done, prev_k, prev_km1, beta, &sizes);
            if tail < s_max {
                return Ok(SmoothTrace {
                    value: s_max,
                    steps,
                    stopped_early: true,
                });
            }
            let (ls, a, b) = self.ls_t_with_terms(t)?;
            let term = discount(t, beta) * ls as f64;
            s_max = s_max.max(term);
            steps.push(SmoothStep { t, ls_t: ls, term, tail_bound: tail });
            match (a, b) {
                (Some(a), Some(b)) => {
                    prev_k = a;
                    prev_km1 = b;
                }
                // the clamp is saturated; later tail bounds are at most N
                _ => {
                    prev_k = n;
                    prev_km1 = n;
                }
            }
            done = Some(t);
        }
        Ok(SmoothTrace {
            value: s_max,
            steps,
            stopped_early: false,
        })
    }

    pub fn smooth_bound(&self, sp: &SmoothParams) -> Result<SensitivityBound> {
        let trace = self.smooth_trace(sp)?;
        Ok(SensitivityBound {
            kind: BoundKind::SmoothUpper,
            value: trace.value,
            params: self.bound_params(Some(sp.beta), None),
        })
    }
}

/// One evaluated step of the smooth-bound loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothStep {
    pub t: usize,
    pub ls_t: usize,
    /// `e^{-t beta} * ls_t`
    pub term: f64,
    /// Tail bound that was checked before evaluating this step.
    pub tail_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothTrace {
    pub value: f64,
    pub steps: Vec<SmoothStep>,
    pub stopped_early: bool,
}

/// `e^{-t beta}`, with the `t = 0` factor fixed at 1 so `beta = inf` works.
pub fn discount(t: usize, beta: f64) -> f64 {
    if t == 0 {
        1.0
    } else {
        (-(t as f64) * beta).exp()
    }
}

fn components(pool: &[usize], near: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..pool.len()).collect();
    fn find(parent: &mut [usize], mut a: usize) -> usize {
        while parent[a] != a {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        a
    }
    for a in 0..pool.len() {
        for b in (a + 1)..pool.len() {
            if near(pool[a], pool[b]) {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for a in 0..pool.len() {
        let root = find(&mut parent, a);
        groups.entry(root).or_default().push(pool[a]);
    }
    groups.into_values().collect()
}

pub fn local_sensitivity_bound(
    x: &Dataset,
    s: &Subspace,
    p: &OutlierParams,
    config: SearchConfig,
) -> Result<SensitivityBound> {
    SensitivityContext::new(x, s, *p, config)?.local_bound()
}

pub fn ls_t_bound(
    x: &Dataset,
    s: &Subspace,
    p: &OutlierParams,
    t: usize,
    config: SearchConfig,
) -> Result<SensitivityBound> {
    SensitivityContext::new(x, s, *p, config)?.ls_t_bound(t)
}

pub fn smooth_sensitivity_bound(
    x: &Dataset,
    s: &Subspace,
    p: &OutlierParams,
    sp: &SmoothParams,
    config: SearchConfig,
) -> Result<SensitivityBound> {
    SensitivityContext::new(x, s, *p, config)?.smooth_bound(sp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(rows: Vec<Vec<f64>>) -> Dataset {
        Dataset::new("t", rows).unwrap()
    }

    /// Five points pairwise within r = 1 of each other (a small pentagon).
    fn clique5() -> Dataset {
        ds((0..5)
            .map(|i| {
                let a = i as f64 * std::f64::consts::TAU / 5.0;
                vec![0.3 * a.cos(), 0.3 * a.sin()]
            })
            .collect())
    }

    #[test]
    fn global_bound_examples() {
        let t = KissingNumberTable::default();
        assert_eq!(global_sensitivity_bounds(1000, 1, 3, &t).unwrap(), (7, 7));
        assert_eq!(global_sensitivity_bounds(1000, 2, 1, &t).unwrap(), (5, 7));
        assert_eq!(global_sensitivity_bounds(3, 5, 10, &t).unwrap(), (3, 3));
        assert_eq!(global_sensitivity_bounds(1000, 2, 3, &t).unwrap(), (13, 19));
        assert!(matches!(
            global_sensitivity_bounds(10, 99, 1, &t),
            Err(Error::UnsupportedDimension(99))
        ));
        // huge K_d saturates to N instead of overflowing
        assert_eq!(global_sensitivity_bounds(500, 34, 1_000_000_000, &t).unwrap(), (500, 500));
        let b = global_bound(BoundKind::GlobalUpper, 1000, 2, 3, &t).unwrap();
        assert_eq!(b.value, 19.0);
        assert!(global_bound(BoundKind::SmoothUpper, 10, 2, 3, &t).is_err());
    }

    #[test]
    fn global_lower_le_upper_for_every_dimension() {
        let t = KissingNumberTable::default();
        for d in t.dims() {
            for k in 1..20 {
                for n in [1, 7, 50, 10_000] {
                    let (lo, hi) = global_sensitivity_bounds(n, d, k, &t).unwrap();
                    assert!(lo <= hi && hi <= n, "d={d} k={k} n={n}");
                }
            }
        }
    }

    #[test]
    fn cv_set_examples() {
        let x = clique5();
        let s = Subspace::full(2).unwrap();
        let p = OutlierParams::new(3, 1.0).unwrap();
        let prof = degree_profile(&x, &s, &p).unwrap();
        assert!(cv_set(&x, &s, &[50.0, 50.0], 4, &p, &prof).unwrap().is_empty());
        assert!(cv_set(&x, &s, x.record(0), 5, &p, &prof).unwrap().is_empty());
        for i in 0..5 {
            assert_eq!(cv_set(&x, &s, x.record(i), 4, &p, &prof).unwrap(), vec![0, 1, 2, 3, 4]);
        }
    }

    #[test]
    fn candidate_pool_examples() {
        // degrees: a=2, b=3, c=4, plus others at 0 and 7
        let prof = DegreeProfile::from_degrees(vec![2, 3, 4, 0, 7, 7, 7, 7, 7]);
        assert_eq!(candidate_pool(&prof, 3, 0), vec![1]);
        assert_eq!(candidate_pool(&prof, 3, 1), vec![0, 1, 2]);
        assert_eq!(candidate_pool(&prof, 3, 9), (0..9).collect::<Vec<_>>());
        assert_eq!(candidate_pool(&prof, 0, 2), vec![0, 3]);
        assert!(candidate_pool(&prof, 20, 1).is_empty());
    }

    #[test]
    fn largest_coverable_examples() {
        let r = 1.0;
        let far = [vec![0.0, 0.0], vec![3.0, 0.0], vec![0.0, 3.0]];
        assert_eq!(largest_coverable_subset(&far, r, 24).unwrap(), 1);
        let tight: Vec<Vec<f64>> = (0..6).map(|i| vec![0.1 * i as f64, 0.05]).collect();
        assert_eq!(largest_coverable_subset(&tight, r, 24).unwrap(), 6);
        let empty: Vec<Vec<f64>> = vec![];
        assert_eq!(largest_coverable_subset(&empty, r, 24).unwrap(), 0);
        // three points on a unit-spaced line: any two coverable, not all three at r = 0.6
        let line = [vec![0.0], vec![1.0], vec![2.0]];
        assert_eq!(largest_coverable_subset(&line, 0.6, 24).unwrap(), 2);
    }

    #[test]
    fn pool_cap_is_enforced() {
        let pool: Vec<Vec<f64>> = (0..25).map(|i| vec![i as f64]).collect();
        match largest_coverable_subset(&pool, 1.0, 24) {
            Err(Error::ResourceLimit { size: 25, cap: 24, .. }) => {}
            other => panic!("expected resource limit, got {other:?}"),
        }
        let msg = largest_coverable_subset(&pool, 1.0, 24).unwrap_err().to_string();
        assert!(msg.contains("24"));
        assert_eq!(largest_coverable_subset(&pool, 1.0, 25).unwrap(), 3);
    }

    #[test]
    fn local_bound_examples() {
        let x = clique5();
        let s = Subspace::full(2).unwrap();
        let cfg = SearchConfig::default();
        let b = local_sensitivity_bound(&x, &s, &OutlierParams::new(3, 1.0).unwrap(), cfg).unwrap();
        assert_eq!(b.kind, BoundKind::LocalUpper);
        assert_eq!(b.value, 1.0);

        let one = ds(vec![vec![0.0, 0.0]]);
        let b = local_sensitivity_bound(&one, &s, &OutlierParams::new(1, 1.0).unwrap(), cfg).unwrap();
        assert_eq!(b.value, 1.0);
    }

    #[test]
    fn ls_t_examples() {
        let x = clique5();
        let s = Subspace::full(2).unwrap();
        let p = OutlierParams::new(3, 1.0).unwrap();
        let cfg = SearchConfig::default();
        let ctx = SensitivityContext::new(&x, &s, p, cfg).unwrap();
        // t = 0: both pools empty
        assert_eq!(ctx.ls_t(0).unwrap(), 1);
        // t = 1: the degree-k pool picks up all five records
        assert_eq!(ctx.ls_t(1).unwrap(), 5);
        assert_eq!(ls_t_bound(&x, &s, &p, 5, cfg).unwrap().value, 5.0);
        assert!(ctx.ls_t(0).unwrap() as f64 >= ctx.local_bound().unwrap().value);
    }

    #[test]
    fn smooth_bound_separated_clusters() {
        // two tight clusters of 6: every degree is 5, far from k = 1
        let mut rows = Vec::new();
        for c in [0.0, 10.0] {
            for i in 0..6 {
                rows.push(vec![c + 0.01 * i as f64, c]);
            }
        }
        let x = ds(rows);
        let s = Subspace::full(2).unwrap();
        let p = OutlierParams::new(1, 0.5).unwrap();
        let ctx = SensitivityContext::new(&x, &s, p, SearchConfig::default()).unwrap();
        let trace = ctx.smooth_trace(&SmoothParams::new(1.0).unwrap()).unwrap();
        assert_eq!(trace.value, 1.0);
        assert!(trace.stopped_early);
        assert!(trace.steps.len() < 4);
    }

    #[test]
    fn infinite_beta_keeps_first_term() {
        let x = clique5();
        let s = Subspace::full(2).unwrap();
        let p = OutlierParams::new(3, 1.0).unwrap();
        let ctx = SensitivityContext::new(&x, &s, p, SearchConfig::default()).unwrap();
        let b = ctx.smooth_bound(&SmoothParams::new(f64::INFINITY).unwrap()).unwrap();
        assert_eq!(b.value, ctx.ls_t(0).unwrap() as f64);
        assert!(SmoothParams::new(0.0).is_err());
        assert!(SmoothParams::new(f64::NAN).is_err());
    }

    #[test]
    fn max_coverable_matches_plain_search() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let n = rng.random_range(1..14);
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect();
            let x = ds(rows);
            let s = Subspace::full(3).unwrap();
            let r = rng.random_range(0.2..1.2);
            let p = OutlierParams::new(1, r).unwrap();
            // a tiny cap forces the anchored decomposition
            let cfg = SearchConfig { pool_cap: 3, tol: COVER_TOL };
            let ctx = SensitivityContext::new(&x, &s, p, cfg).unwrap();
            let pool: Vec<usize> = (0..n).collect();
            let pts: Vec<Vec<f64>> = pool.iter().map(|&i| s.embed(x.record(i))).collect();
            let plain = largest_coverable_subset(&pts, r, 64).unwrap();
            match ctx.max_coverable(&pool, 0) {
                Ok(v) => assert_eq!(v, plain),
                Err(Error::ResourceLimit { .. }) => {}
                Err(e) => panic!("{e}"),
            }
            let wide = SensitivityContext::new(&x, &s, p, SearchConfig::default()).unwrap();
            assert_eq!(wide.max_coverable(&pool, 0).unwrap(), plain);
        }
    }

    #[test]
    fn low_dimensional_covers_match_plain_search() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for trial in 0..120 {
            let d = 1 + trial % 2;
            let n = rng.random_range(1..16);
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect();
            let x = ds(rows);
            let s = Subspace::new(0..d).unwrap();
            let r = rng.random_range(0.1..1.2);
            let p = OutlierParams::new(1, r).unwrap();
            let ctx = SensitivityContext::new(&x, &s, p, SearchConfig::default()).unwrap();
            let pool: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.8)).collect();
            let pts: Vec<Vec<f64>> = pool.iter().map(|&i| s.embed(x.record(i))).collect();
            let plain = largest_coverable_subset(&pts, r, 64).unwrap();
            assert_eq!(ctx.max_coverable(&pool, 0).unwrap(), plain, "d={d} trial {trial}");
        }
    }

    #[test]
    fn smooth_bound_with_k_above_n() {
        let x = ds(vec![vec![0.0, 0.0], vec![5.0, 5.0]]);
        let s = Subspace::full(2).unwrap();
        let p = OutlierParams::new(4, 1.0).unwrap();
        let b = smooth_sensitivity_bound(&x, &s, &p, &SmoothParams::new(0.1).unwrap(), SearchConfig::default())
            .unwrap();
        assert!(b.value >= 1.0 && b.value <= 2.0);
        let one = ds(vec![vec![1.0, 1.0]]);
        let b = smooth_sensitivity_bound(&one, &s, &p, &SmoothParams::new(0.1).unwrap(), SearchConfig::default())
            .unwrap();
        assert_eq!(b.value, 1.0);
    }

    #[test]
    fn shared_context_matches_fresh_ones() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(19);
        let x = ds((0..30).map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]).collect());
        let s = Subspace::full(2).unwrap();
        let p = OutlierParams::new(3, 0.6).unwrap();
        let shared = SensitivityContext::new(&x, &s, p, SearchConfig::default()).unwrap();
        for beta in [0.5, 0.01, 0.1, 0.002] {
            let sp = SmoothParams::new(beta).unwrap();
            let fresh = SensitivityContext::new(&x, &s, p, SearchConfig::default()).unwrap();
            assert_eq!(shared.smooth_trace(&sp).unwrap(), fresh.smooth_trace(&sp).unwrap());
        }
    }
}
