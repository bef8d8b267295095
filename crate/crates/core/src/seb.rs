//! Exact smallest enclosing ball in any dimension.
//!
//! Move-to-front variant of Welzl's algorithm: the support set is kept on a
//! stack and the ball for a support set is the circumsphere of the support
//! points inside their affine hull. A point that is numerically affinely
//! dependent on the current support is never pushed; in exact arithmetic such
//! a point is already on the ball.
//!
//! The solver is deterministic and holds no state between calls.

use crate::error::{Error, Result};

/// Additive tolerance for radius comparisons on standardized data.
pub const COVER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        sq_dist(&self.center, p).sqrt() <= self.radius + tol
    }
}

pub fn smallest_enclosing_ball<P: AsRef<[f64]>>(points: &[P]) -> Result<Ball> {
    let pts: Vec<&[f64]> = points.iter().map(AsRef::as_ref).collect();
    let Some(first) = pts.first() else {
        return Err(Error::InvalidArgument(
            "smallest enclosing ball of an empty point set".into(),
        ));
    };
    let dim = first.len();
    if let Some(p) = pts.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch(format!(
            "point of dimension {} in a set of dimension {dim}",
            p.len()
        )));
    }
    Ok(Solver::new(pts).solve())
}

/// True iff the smallest enclosing ball of `points` has radius `<= r + tol`.
pub fn is_coverable<P: AsRef<[f64]>>(points: &[P], r: f64, tol: f64) -> Result<bool> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    Ok(smallest_enclosing_ball(points)?.radius <= r + tol)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

struct Solver<'a> {
    pts: Vec<&'a [f64]>,
    order: Vec<usize>,
    support: Vec<usize>,
    center: Vec<f64>,
    sq_radius: f64,
}

impl<'a> Solver<'a> {
    fn new(pts: Vec<&'a [f64]>) -> Self {
        let dim = pts[0].len();
        Self {
            order: (0..pts.len()).collect(),
            pts,
            support: Vec::with_capacity(dim + 1),
            center: vec![0.0; dim],
            sq_radius: -1.0,
        }
    }

    fn dim(&self) -> usize {
        self.center.len()
    }

    fn solve(mut self) -> Ball {
        let n = self.pts.len();
        self.mtf(n);
        // report the radius that actually encloses every input point
        let sq_r = self
            .pts
            .iter()
            .map(|p| sq_dist(&self.center, p))
            .fold(0.0, f64::max);
        Ball {
            center: self.center,
            radius: sq_r.sqrt(),
        }
    }

    fn is_outside(&self, idx: usize) -> bool {
        let d = sq_dist(&self.center, self.pts[idx]);
        d > self.sq_radius * (1.0 + 1e-12) + 1e-30
    }

    fn mtf(&mut self, end: usize) {
        if self.support.len() == self.dim() + 1 {
            return;
        }
        let mut i = 0;
        while i < end {
            let idx = self.order[i];
            if self.is_outside(idx) && self.push(idx) {
                self.mtf(i);
                self.support.pop();
                let moved = self.order.remove(i);
                self.order.insert(0, moved);
            }
            i += 1;
        }
    }

    /// Adds `idx` to the support and replaces the current ball by the
    /// circumsphere of the new support. Returns false, leaving the state
    /// unchanged, if the new support is affinely dependent.
    fn push(&mut self, idx: usize) -> bool {
        self.support.push(idx);
        match self.circumsphere() {
            Some((center, sq_radius)) => {
                self.center = center;
                self.sq_radius = sq_radius;
                true
            }
            None => {
                self.support.pop();
                false
            }
        }
    }

    fn circumsphere(&self) -> Option<(Vec<f64>, f64)> {
        let origin = self.pts[self.support[0]];
        let m = self.support.len() - 1;
        if m == 0 {
            return Some((origin.to_vec(), 0.0));
        }
        let dirs: Vec<Vec<f64>> = self.support[1..]
            .iter()
            .map(|&s| self.pts[s].iter().zip(origin).map(|(a, b)| a - b).collect())
            .collect();
        let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };

        // Center = origin + sum_j lambda_j dirs_j, equidistant from all support
        // points: 2 <dirs_j, c - origin> = |dirs_j|^2.
        let mut a = vec![vec![0.0; m + 1]; m];
        for j in 0..m {
            for l in 0..m {
                a[j][l] = 2.0 * dot(&dirs[j], &dirs[l]);
            }
            a[j][m] = dot(&dirs[j], &dirs[j]);
        }
        let scale = (0..m).map(|j| a[j][j]).fold(0.0, f64::max);
        if scale == 0.0 {
            return None;
        }
        let lambda = solve_linear(a, scale * 1e-12)?;

        let mut center = origin.to_vec();
        for (l, dir) in lambda.iter().zip(&dirs) {
            for (c, v) in center.iter_mut().zip(dir) {
                *c += l * v;
            }
        }
        let sq_radius = sq_dist(&center, origin);
        Some((center, sq_radius))
    }
}

/// Gaussian elimination with partial pivoting on an augmented `m x (m+1)`
/// matrix. `None` if a pivot falls below `pivot_floor`.
fn solve_linear(mut a: Vec<Vec<f64>>, pivot_floor: f64) -> Option<Vec<f64>> {
    let m = a.len();
    for col in 0..m {
        let piv = (col..m).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() <= pivot_floor {
            return None;
        }
        a.swap(col, piv);
        for row in (col + 1)..m {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for c in col..=m {
                    a[row][c] -= f * a[col][c];
                }
            }
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let tail: f64 = ((row + 1)..m).map(|c| a[row][c] * x[c]).sum();
        x[row] = (a[row][m] - tail) / a[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_point() {
        let b = smallest_enclosing_ball(&[vec![1.0, -2.0, 3.0]]).unwrap();
        assert_eq!(b.center, vec![1.0, -2.0, 3.0]);
        assert_eq!(b.radius, 0.0);
    }

    #[test]
    fn two_points() {
        let b = smallest_enclosing_ball(&[vec![0.0, 0.0], vec![2.0, 0.0]]).unwrap();
        assert!((b.radius - 1.0).abs() < 1e-12);
        assert!((b.center[0] - 1.0).abs() < 1e-12 && b.center[1].abs() < 1e-12);
    }

    #[test]
    fn equilateral_triangle() {
        let h = 3f64.sqrt() / 2.0;
        let b = smallest_enclosing_ball(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, h]]).unwrap();
        assert!((b.radius - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        assert!((b.radius - 0.57735).abs() < 1e-5);
    }

    #[test]
    fn obtuse_triangle_uses_longest_side() {
        let b = smallest_enclosing_ball(&[vec![0.0, 0.0], vec![4.0, 0.0], vec![2.0, 0.5]]).unwrap();
        assert!((b.radius - 2.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        let same = vec![vec![0.5, 0.5]; 6];
        assert_eq!(smallest_enclosing_ball(&same).unwrap().radius, 0.0);

        let line: Vec<Vec<f64>> = (0..7).map(|i| vec![i as f64, 2.0 * i as f64, 0.0]).collect();
        let b = smallest_enclosing_ball(&line).unwrap();
        let expect = (36.0f64 + 144.0).sqrt() / 2.0;
        assert!((b.radius - expect).abs() < 1e-9);

        // four cocircular points in 3-d with duplicates
        let pts = vec![
            vec![1.0, 0.0, 0.0],
            vec![-1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, -1.0, 0.0],
            vec![0.0, -1.0, 0.0],
            vec![1.0, 0.0, 0.0],
        ];
        let b = smallest_enclosing_ball(&pts).unwrap();
        assert!((b.radius - 1.0).abs() < 1e-9);
    }

    #[test]
    fn errors() {
        let empty: Vec<Vec<f64>> = vec![];
        assert!(smallest_enclosing_ball(&empty).is_err());
        assert!(matches!(
            smallest_enclosing_ball(&[vec![0.0], vec![0.0, 1.0]]),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(is_coverable(&[vec![0.0]], 0.0, COVER_TOL).is_err());
    }

    #[test]
    fn coverability() {
        assert!(is_coverable(&[vec![7.0, 7.0]], 0.01, COVER_TOL).unwrap());
        let r = 0.5;
        let far = [vec![0.0], vec![2.0 * r + 0.1]];
        assert!(!is_coverable(&far, r, COVER_TOL).unwrap());
        let touching = [vec![0.0], vec![2.0 * r]];
        assert!(is_coverable(&touching, r, COVER_TOL).unwrap());
    }

    fn point_set() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (1usize..5).prop_flat_map(|d| {
            prop::collection::vec(prop::collection::vec(-2.0f64..2.0, d), 1..12)
        })
    }

    proptest! {
        #[test]
        fn encloses_every_point(pts in point_set()) {
            let b = smallest_enclosing_ball(&pts).unwrap();
            for p in &pts {
                prop_assert!(b.contains(p, COVER_TOL));
            }
        }

        #[test]
        fn adding_a_point_never_shrinks(pts in point_set(), extra in prop::collection::vec(-2.0f64..2.0, 4)) {
            let before = smallest_enclosing_ball(&pts).unwrap().radius;
            let mut more = pts.clone();
            more.push(extra[..pts[0].len()].to_vec());
            let after = smallest_enclosing_ball(&more).unwrap().radius;
            prop_assert!(after >= before - 1e-9);
        }

        #[test]
        fn scale_equivariant(pts in point_set(), c in 0.1f64..10.0) {
            let r = smallest_enclosing_ball(&pts).unwrap().radius;
            let scaled: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|v| v * c).collect()).collect();
            let rs = smallest_enclosing_ball(&scaled).unwrap().radius;
            prop_assert!((rs - c * r).abs() <= 1e-9 * (1.0 + c * r));
        }
    }
}
