use serde::{Deserialize, Serialize};

use super::body::ConvexBody;
use super::lp::{is_feasible, lp_maximize};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm};

/// A nonempty open convex region `Γ ⊆ ℝ^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RegionKind", into = "RegionKind")]
pub struct OpenConvexRegion {
    kind: RegionKind,
    dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum RegionKind {
    /// `{x : A·x < b}`
    #[serde(rename = "hregion")]
    HRegion {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
    },
    #[serde(rename = "open_ball")]
    OpenBall { center: Vec<f64>, radius: f64 },
    #[serde(rename = "full_space")]
    FullSpace { dim: usize },
}

impl From<OpenConvexRegion> for RegionKind {
    fn from(r: OpenConvexRegion) -> Self {
        r.kind
    }
}

impl TryFrom<RegionKind> for OpenConvexRegion {
    type Error = Error;

    fn try_from(kind: RegionKind) -> Result<Self> {
        let dim = match &kind {
            RegionKind::FullSpace { dim } => *dim,
            RegionKind::OpenBall { center, radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "open ball radius {radius} must be > 0"
                    )));
                }
                center.len()
            }
            RegionKind::HRegion { a, b } => {
                let dim = a.first().map(Vec::len).unwrap_or(0);
                if a.len() != b.len() {
                    return Err(Error::InvalidInput(format!(
                        "hregion has {} rows in A but {} entries in b",
                        a.len(),
                        b.len()
                    )));
                }
                if let Some(row) = a.iter().find(|r| r.len() != dim) {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: row.len(),
                    });
                }
                if a.iter().flatten().chain(b).any(|v| !v.is_finite()) {
                    return Err(Error::InvalidInput("non-finite hregion data".into()));
                }
                if !has_interior_point(a, b, dim)? {
                    return Err(Error::InvalidInput("hregion is empty".into()));
                }
                dim
            }
        };
        if dim == 0 || dim > super::body::MAX_DIM {
            return Err(Error::InvalidInput(format!("dimension {dim} outside 1..=3")));
        }
        Ok(OpenConvexRegion { kind, dim })
    }
}

/// Maximize the slack `t ≤ 1` in `a_i·x + |a_i| t ≤ b_i`; an interior point
/// exists iff the optimum is positive.
fn has_interior_point(a: &[Vec<f64>], b: &[f64], dim: usize) -> Result<bool> {
    if a.iter().zip(b).any(|(row, &bi)| norm(row) == 0.0 && bi <= 0.0) {
        return Ok(false);
    }
    let mut rows: Vec<Vec<f64>> = a
        .iter()
        .map(|row| {
            let mut r = row.clone();
            r.push(norm(row));
            r
        })
        .collect();
    let mut rhs = b.to_vec();
    let mut cap = vec![0.0; dim + 1];
    cap[dim] = 1.0;
    rows.push(cap.clone());
    rhs.push(1.0);
    match lp_maximize(&rows, &rhs, &cap) {
        Ok(sol) => Ok(sol.value > 1e-12),
        Err(Error::Infeasible) => Ok(false),
        Err(e) => Err(e),
    }
}

impl OpenConvexRegion {
    pub fn hregion(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        RegionKind::HRegion { a, b }.try_into()
    }

    pub fn open_ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        RegionKind::OpenBall { center, radius }.try_into()
    }

    pub fn full_space(dim: usize) -> Result<Self> {
        RegionKind::FullSpace { dim }.try_into()
    }

    /// `∏ (lo_i, ∞)`.
    pub fn orthant(lo: &[f64]) -> Result<Self> {
        let d = lo.len();
        let a = (0..d)
            .map(|i| {
                let mut r = vec![0.0; d];
                r[i] = -1.0;
                r
            })
            .collect();
        Self::hregion(a, lo.iter().map(|v| -v).collect())
    }

    /// Open box `∏ (lo_i, hi_i)`.
    pub fn open_box(lo: &[f64], hi: &[f64]) -> Result<Self> {
        let d = lo.len();
        let mut a = Vec::new();
        let mut b = Vec::new();
        for i in 0..d {
            let mut r = vec![0.0; d];
            r[i] = -1.0;
            a.push(r.clone());
            b.push(-lo[i]);
            r[i] = 1.0;
            a.push(r);
            b.push(hi[i]);
        }
        Self::hregion(a, b)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &RegionKind {
        &self.kind
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        match &self.kind {
            RegionKind::FullSpace { .. } => true,
            RegionKind::OpenBall { center, radius } => {
                norm(&crate::linalg::sub(x, center)) < *radius
            }
            RegionKind::HRegion { a, b } => a.iter().zip(b).all(|(r, &bi)| dot(r, x) < bi),
        }
    }

    /// Intersection of two regions. Only H-regions and full spaces combine.
    pub fn intersect(&self, other: &OpenConvexRegion) -> Result<OpenConvexRegion> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        match (&self.kind, &other.kind) {
            (RegionKind::FullSpace { .. }, _) => Ok(other.clone()),
            (_, RegionKind::FullSpace { .. }) => Ok(self.clone()),
            (RegionKind::HRegion { a: a1, b: b1 }, RegionKind::HRegion { a: a2, b: b2 }) => {
                let a = a1.iter().chain(a2).cloned().collect();
                let b = b1.iter().chain(b2).cloned().collect();
                Self::hregion(a, b)
                    .map_err(|_| Error::OutsideGamma("intersection of regions is empty".into()))
            }
            _ => Err(Error::InvalidInput(
                "intersection with an open ball is not representable".into(),
            )),
        }
    }

    /// A lower bound on the distance from `K` to the complement of Γ
    /// (exact for H-regions); positive iff `K ⊆ Γ`.
    pub fn margin(&self, k: &ConvexBody) -> f64 {
        match &self.kind {
            RegionKind::FullSpace { .. } => f64::INFINITY,
            RegionKind::HRegion { a, b } => a
                .iter()
                .zip(b)
                .filter(|(r, _)| norm(r) > 0.0)
                .map(|(r, bi)| (bi - k.support_function(r)) / norm(r))
                .fold(f64::INFINITY, f64::min),
            RegionKind::OpenBall { center, radius } => {
                let far = if let Some((c, r)) = k.ball_form() {
                    norm(&crate::linalg::sub(&c, center)) + r
                } else if let Some(vs) = k.vertex_form() {
                    vs.iter()
                        .map(|v| norm(&crate::linalg::sub(v, center)))
                        .fold(0.0, f64::max)
                } else {
                    let shifted = ConvexBody::minkowski_sum(
                        k.clone(),
                        ConvexBody::point(center.iter().map(|c| -c).collect())
                            .expect("valid point"),
                    )
                    .expect("same dimension");
                    shifted.circumradius_bound()
                };
                radius - far
            }
        }
    }

    pub fn strictly_contains(&self, k: &ConvexBody) -> bool {
        k.dim() == self.dim && self.margin(k) > 0.0
    }

    fn shrunk_polytope(a: &[Vec<f64>], b: &[f64], n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let d = a[0].len();
        let nf = n as f64;
        let mut rows = a.to_vec();
        let mut rhs: Vec<f64> = a.iter().zip(b).map(|(r, bi)| bi - norm(r) / nf).collect();
        for i in 0..d {
            for s in [1.0, -1.0] {
                let mut e = vec![0.0; d];
                e[i] = s;
                rows.push(e);
                rhs.push(nf);
            }
        }
        (rows, rhs)
    }

    /// Smallest `N ≥ 1` for which the exhaustion body is nonempty.
    pub fn min_exhaustion_index(&self) -> Result<usize> {
        let RegionKind::HRegion { a, b } = &self.kind else {
            return Ok(1);
        };
        let feasible = |n: usize| -> Result<bool> {
            let (rows, rhs) = Self::shrunk_polytope(a, b, n);
            is_feasible(&rows, &rhs, self.dim)
        };
        if feasible(1)? {
            return Ok(1);
        }
        let mut hi = 2usize;
        while !feasible(hi)? {
            if hi > 1 << 40 {
                return Err(Error::InvalidInput("region too thin to exhaust".into()));
            }
            hi *= 2;
        }
        let mut lo = hi / 2; // infeasible
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if feasible(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// The `N`-th body of the fixed exhaustion of Γ:
    /// H-regions shrink every facet by `|a_i|/N` inside the box `[-N, N]^d`;
    /// open balls shrink to radius `r(1 - 1/(N+1))`; ℝ^d gives `B̄(0, N)`.
    pub fn exhaust(&self, n: usize) -> Result<ConvexBody> {
        if n == 0 {
            return Err(Error::ExhaustionIndexTooSmall {
                index: 0,
                minimum: self.min_exhaustion_index()?,
            });
        }
        match &self.kind {
            RegionKind::FullSpace { dim } => ConvexBody::ball(vec![0.0; *dim], n as f64),
            RegionKind::OpenBall { center, radius } => {
                ConvexBody::ball(center.clone(), radius * (1.0 - 1.0 / (n as f64 + 1.0)))
            }
            RegionKind::HRegion { a, b } => {
                let (rows, rhs) = Self::shrunk_polytope(a, b, n);
                if !is_feasible(&rows, &rhs, self.dim)? {
                    return Err(Error::ExhaustionIndexTooSmall {
                        index: n,
                        minimum: self.min_exhaustion_index()?,
                    });
                }
                ConvexBody::hpolytope(rows, rhs)
            }
        }
    }
}

/// `exhaust` as a free function.
pub fn exhaust(region: &OpenConvexRegion, n: usize) -> Result<ConvexBody> {
    region.exhaust(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_line_exhaustion() {
        let g = OpenConvexRegion::hregion(vec![vec![-1.0]], vec![0.0]).unwrap();
        let k = g.exhaust(3).unwrap();
        assert!((k.support_function(&[1.0]) - 3.0).abs() < 1e-12);
        assert!((-k.support_function(&[-1.0]) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(g.min_exhaustion_index().unwrap(), 1);
    }

    #[test]
    fn full_space_and_ball() {
        let g = OpenConvexRegion::full_space(2).unwrap();
        assert_eq!(g.exhaust(5).unwrap(), ConvexBody::ball(vec![0.0, 0.0], 5.0).unwrap());
        let b = OpenConvexRegion::open_ball(vec![1.0], 2.0).unwrap();
        assert_eq!(b.exhaust(1).unwrap().ball_form().unwrap(), (vec![1.0], 1.0));
    }

    #[test]
    fn index_too_small() {
        let sq = OpenConvexRegion::open_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_eq!(sq.min_exhaustion_index().unwrap(), 2);
        assert_eq!(
            sq.exhaust(1),
            Err(Error::ExhaustionIndexTooSmall { index: 1, minimum: 2 })
        );
        let tri = OpenConvexRegion::hregion(
            vec![vec![-1.0, 0.0], vec![0.0, -1.0], vec![1.0, 1.0]],
            vec![0.0, 0.0, 1.0],
        )
        .unwrap();
        // 2/N ≤ 1 - √2/N  ⇔  N ≥ 2 + √2
        assert_eq!(tri.min_exhaustion_index().unwrap(), 4);
    }

    #[test]
    fn empty_regions_rejected() {
        assert!(OpenConvexRegion::hregion(vec![vec![1.0], vec![-1.0]], vec![0.0, 0.0]).is_err());
        assert!(OpenConvexRegion::hregion(vec![vec![0.0]], vec![0.0]).is_err());
        assert!(OpenConvexRegion::open_ball(vec![0.0], 0.0).is_err());
    }

    #[test]
    fn margin_of_exhaustion_bodies() {
        let g = OpenConvexRegion::orthant(&[0.5]).unwrap();
        let k = g.exhaust(4).unwrap();
        assert!((g.margin(&k) - 0.25).abs() < 1e-12);
        assert!(!g.strictly_contains(&ConvexBody::interval(0.1, 0.4).unwrap()));
    }
}
