use serde::{Deserialize, Serialize};

use super::body::{BodyKind, ConvexBody};
use super::directions::{unit_directions, DEFAULT_SEED};
use crate::error::{Error, Result};
use crate::linalg::{self, norm};

pub const INCLUSION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InclusionVerdict {
    Certified,
    Falsified,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InclusionWitness {
    /// Unit direction `u` with `h_inner(u) > h_outer(u)`.
    Direction(Vec<f64>),
    /// Name of the exact rule that certified the inclusion.
    Certificate(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionReport {
    pub verdict: InclusionVerdict,
    pub witness: Option<InclusionWitness>,
    pub directions_tested: usize,
}

impl InclusionReport {
    pub fn is_certified(&self) -> bool {
        self.verdict == InclusionVerdict::Certified
    }

    fn certified(tag: &str, tested: usize) -> Self {
        InclusionReport {
            verdict: InclusionVerdict::Certified,
            witness: Some(InclusionWitness::Certificate(tag.to_string())),
            directions_tested: tested,
        }
    }

    fn falsified(u: Vec<f64>, tested: usize) -> Self {
        InclusionReport {
            verdict: InclusionVerdict::Falsified,
            witness: Some(InclusionWitness::Direction(u)),
            directions_tested: tested,
        }
    }
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = norm(v);
    if n == 0.0 {
        let mut e = vec![0.0; v.len()];
        e[0] = 1.0;
        e
    } else {
        linalg::scale(v, 1.0 / n)
    }
}

/// Exact decision rules; `None` when no rule applies.
fn exact_rules(inner: &ConvexBody, outer: &ConvexBody) -> Option<InclusionReport> {
    if let Some((a, b)) = outer.h_form() {
        // K ⊆ {Aη ≤ b} iff h_K(a_i) ≤ b_i for every row.
        let tag = if inner.vertex_form().is_some() && !matches!(inner.kind(), BodyKind::Ball { .. })
        {
            "vertex-in-halfspaces"
        } else {
            "support-at-facet-normals"
        };
        for (row, bi) in a.iter().zip(&b) {
            let n = norm(row);
            if n == 0.0 {
                continue;
            }
            if inner.support_function(row) > bi + INCLUSION_TOL * n {
                return Some(InclusionReport::falsified(unit(row), a.len()));
            }
        }
        return Some(InclusionReport::certified(tag, a.len()));
    }
    if let Some((co, ro)) = outer.ball_form() {
        if let Some((ci, ri)) = inner.ball_form() {
            let offset = linalg::sub(&ci, &co);
            return Some(if norm(&offset) + ri <= ro + INCLUSION_TOL {
                InclusionReport::certified("ball-in-ball", 0)
            } else {
                InclusionReport::falsified(unit(&offset), 1)
            });
        }
        if let Some(vs) = inner.vertex_form() {
            for v in &vs {
                let offset = linalg::sub(v, &co);
                if norm(&offset) > ro + INCLUSION_TOL {
                    return Some(InclusionReport::falsified(unit(&offset), 1));
                }
            }
            return Some(InclusionReport::certified("vertices-in-ball", 0));
        }
    }
    if let BodyKind::MinkowskiSum { parts } = outer.kind() {
        for (i, p) in parts.iter().enumerate() {
            if p == inner
                && parts
                    .iter()
                    .enumerate()
                    .all(|(j, q)| j == i || q.contains_origin_exact() == Some(true))
            {
                return Some(InclusionReport::certified("summand-plus-origin", 0));
            }
        }
    }
    None
}

/// Three-valued test of `inner ⊆ outer` via support functions.
pub fn contains(inner: &ConvexBody, outer: &ConvexBody, n_dirs: usize) -> Result<InclusionReport> {
    let d = inner.dim();
    if outer.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: outer.dim(),
        });
    }
    if n_dirs < 2 * d {
        return Err(Error::InvalidInput(format!(
            "need at least {} directions, got {n_dirs}",
            2 * d
        )));
    }
    if let Some(report) = exact_rules(inner, outer) {
        return Ok(report);
    }
    let dirs = unit_directions(d, n_dirs - 2 * d, DEFAULT_SEED);
    for u in &dirs {
        if inner.support_function(u) > outer.support_function(u) + INCLUSION_TOL {
            return Ok(InclusionReport::falsified(u.clone(), dirs.len()));
        }
    }
    Ok(InclusionReport {
        verdict: InclusionVerdict::Undetermined,
        witness: None,
        directions_tested: dirs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> ConvexBody {
        ConvexBody::cuboid(&[0.0, 0.0], &[1.0, 1.0]).unwrap()
    }

    #[test]
    fn body_inside_its_fattening() {
        let k = square();
        let r = contains(&k, &k.fatten(0.1).unwrap(), 16).unwrap();
        assert!(r.is_certified());
    }

    #[test]
    fn big_ball_not_in_small() {
        let big = ConvexBody::ball(vec![0.0, 0.0], 2.0).unwrap();
        let small = ConvexBody::ball(vec![0.0, 0.0], 1.0).unwrap();
        let r = contains(&big, &small, 8).unwrap();
        assert_eq!(r.verdict, InclusionVerdict::Falsified);
        let Some(InclusionWitness::Direction(u)) = r.witness else {
            panic!("expected direction witness")
        };
        assert!(big.support_function(&u) > small.support_function(&u) + INCLUSION_TOL);
    }

    #[test]
    fn segment_in_square_exact() {
        let seg = ConvexBody::vpolytope(vec![vec![0.25, 0.25], vec![0.5, 0.5]]).unwrap();
        let r = contains(&seg, &square(), 4).unwrap();
        assert!(r.is_certified());
        assert_eq!(
            r.witness,
            Some(InclusionWitness::Certificate("vertex-in-halfspaces".into()))
        );
    }

    #[test]
    fn sampled_falsification_and_undetermined() {
        let disc = ConvexBody::ball(vec![0.0, 0.0], 1.0).unwrap();
        let sum = ConvexBody::minkowski_sum(disc.clone(), square()).unwrap();
        let shifted = ConvexBody::minkowski_sum(
            disc.clone(),
            ConvexBody::point(vec![5.0, 0.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(
            contains(&shifted, &sum, 16).unwrap().verdict,
            InclusionVerdict::Falsified
        );
        let inner = ConvexBody::scaled(0.5, sum.clone()).unwrap();
        let outer = ConvexBody::minkowski_sum(sum, ConvexBody::point(vec![0.1, 0.1]).unwrap()).unwrap();
        assert_eq!(
            contains(&inner, &outer, 16).unwrap().verdict,
            InclusionVerdict::Undetermined
        );
    }

    #[test]
    fn too_few_directions() {
        assert!(contains(&square(), &square(), 3).is_err());
    }
}
