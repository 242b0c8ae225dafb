use rand::Rng;
use serde::{Deserialize, Serialize};

use super::lp::{is_feasible, lp_maximize};
use crate::error::{Error, Result};
use crate::linalg::{self, dot, norm};

pub const MAX_DIM: usize = 3;

/// A nonempty compact convex body in ℝ^d, d ∈ {1, 2, 3}.
///
/// Construction validates the representation; every value of this type is a
/// genuine compact convex set, so support-function evaluation cannot fail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BodyKind", into = "BodyKind")]
pub struct ConvexBody {
    kind: BodyKind,
    dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum BodyKind {
    #[serde(rename = "ball")]
    Ball { center: Vec<f64>, radius: f64 },
    #[serde(rename = "vpolytope")]
    VPolytope { vertices: Vec<Vec<f64>> },
    #[serde(rename = "hpolytope")]
    HPolytope {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
    },
    #[serde(rename = "scaled")]
    Scaled { lambda: f64, body: Box<ConvexBody> },
    #[serde(rename = "reflected")]
    Reflected { body: Box<ConvexBody> },
    #[serde(rename = "minkowski_sum")]
    MinkowskiSum { parts: Vec<ConvexBody> },
}

impl From<ConvexBody> for BodyKind {
    fn from(b: ConvexBody) -> Self {
        b.kind
    }
}

impl TryFrom<BodyKind> for ConvexBody {
    type Error = Error;

    fn try_from(kind: BodyKind) -> Result<Self> {
        let dim = match &kind {
            BodyKind::Ball { center, radius } => {
                check_point(center)?;
                if !(radius.is_finite() && *radius >= 0.0) {
                    return Err(Error::InvalidInput(format!("ball radius {radius} must be ≥ 0")));
                }
                center.len()
            }
            BodyKind::VPolytope { vertices } => {
                let first = vertices
                    .first()
                    .ok_or_else(|| Error::InvalidInput("vpolytope needs a vertex".into()))?;
                for v in vertices {
                    check_point(v)?;
                    if v.len() != first.len() {
                        return Err(Error::DimensionMismatch {
                            expected: first.len(),
                            got: v.len(),
                        });
                    }
                }
                first.len()
            }
            BodyKind::HPolytope { a, b } => validate_hpolytope(a, b)?,
            BodyKind::Scaled { lambda, body } => {
                if !(lambda.is_finite() && *lambda >= 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "scale factor {lambda} must be ≥ 0 (use a reflection for -K)"
                    )));
                }
                body.dim
            }
            BodyKind::Reflected { body } => body.dim,
            BodyKind::MinkowskiSum { parts } => {
                let first = parts
                    .first()
                    .ok_or_else(|| Error::InvalidInput("empty Minkowski sum".into()))?;
                for p in parts {
                    if p.dim != first.dim {
                        return Err(Error::DimensionMismatch {
                            expected: first.dim,
                            got: p.dim,
                        });
                    }
                }
                first.dim
            }
        };
        let kind = match kind {
            BodyKind::VPolytope { vertices } => BodyKind::VPolytope {
                vertices: dedup_points(vertices),
            },
            other => other,
        };
        Ok(ConvexBody { kind, dim })
    }
}

fn check_point(p: &[f64]) -> Result<()> {
    if p.is_empty() || p.len() > MAX_DIM {
        return Err(Error::InvalidInput(format!(
            "dimension {} outside 1..={MAX_DIM}",
            p.len()
        )));
    }
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite coordinate".into()));
    }
    Ok(())
}

fn validate_hpolytope(a: &[Vec<f64>], b: &[f64]) -> Result<usize> {
    let first = a
        .first()
        .ok_or_else(|| Error::InvalidInput("hpolytope needs constraints".into()))?;
    let dim = first.len();
    check_point(first)?;
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "hpolytope has {} rows in A but {} entries in b",
            a.len(),
            b.len()
        )));
    }
    for row in a {
        if row.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: row.len(),
            });
        }
    }
    if !is_feasible(a, b, dim)? {
        return Err(Error::InvalidInput("hpolytope is empty".into()));
    }
    for axis in 0..dim {
        for sign in [1.0, -1.0] {
            let mut c = vec![0.0; dim];
            c[axis] = sign;
            match lp_maximize(a, b, &c) {
                Ok(_) => {}
                Err(Error::Unbounded) => {
                    return Err(Error::InvalidInput("hpolytope is unbounded".into()))
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(dim)
}

fn dedup_points(points: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(points.len());
    for p in points {
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out
}

fn dedup_approx(points: Vec<Vec<f64>>, tol: f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(points.len());
    for p in points {
        if !out
            .iter()
            .any(|q| p.iter().zip(q).all(|(x, y)| (x - y).abs() <= tol))
        {
            out.push(p);
        }
    }
    out
}

impl ConvexBody {
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        BodyKind::Ball { center, radius }.try_into()
    }

    pub fn point(p: Vec<f64>) -> Result<Self> {
        Self::vpolytope(vec![p])
    }

    pub fn vpolytope(vertices: Vec<Vec<f64>>) -> Result<Self> {
        BodyKind::VPolytope { vertices }.try_into()
    }

    pub fn hpolytope(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        BodyKind::HPolytope { a, b }.try_into()
    }

    /// Axis-aligned box `∏ [lo_i, hi_i]` in H-form.
    pub fn cuboid(lo: &[f64], hi: &[f64]) -> Result<Self> {
        let d = lo.len();
        let mut a = Vec::with_capacity(2 * d);
        let mut b = Vec::with_capacity(2 * d);
        for i in 0..d {
            let mut up = vec![0.0; d];
            up[i] = 1.0;
            a.push(up);
            b.push(hi[i]);
            let mut down = vec![0.0; d];
            down[i] = -1.0;
            a.push(down);
            b.push(-lo[i]);
        }
        Self::hpolytope(a, b)
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::cuboid(&[lo], &[hi])
    }

    pub fn scaled(lambda: f64, body: ConvexBody) -> Result<Self> {
        BodyKind::Scaled {
            lambda,
            body: Box::new(body),
        }
        .try_into()
    }

    /// `-K`.
    pub fn reflected(body: ConvexBody) -> Self {
        let dim = body.dim;
        ConvexBody {
            kind: BodyKind::Reflected {
                body: Box::new(body),
            },
            dim,
        }
    }

    pub fn minkowski_sum(k1: ConvexBody, k2: ConvexBody) -> Result<Self> {
        if k1.dim != k2.dim {
            return Err(Error::DimensionMismatch {
                expected: k1.dim,
                got: k2.dim,
            });
        }
        BodyKind::MinkowskiSum {
            parts: vec![k1, k2],
        }
        .try_into()
    }

    pub fn minkowski_sum_of(parts: Vec<ConvexBody>) -> Result<Self> {
        BodyKind::MinkowskiSum { parts }.try_into()
    }

    /// `K_ε = K + B̄(0, ε)`.
    pub fn fatten(&self, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidInput(format!("fattening radius {eps} must be > 0")));
        }
        Self::minkowski_sum(self.clone(), Self::ball(vec![0.0; self.dim], eps)?)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &BodyKind {
        &self.kind
    }

    fn check_dim(&self, x: &[f64]) {
        assert_eq!(x.len(), self.dim, "direction has wrong dimension");
    }

    /// `h_K(x) = max_{η∈K} x·η`.
    pub fn support_function(&self, x: &[f64]) -> f64 {
        self.check_dim(x);
        match &self.kind {
            BodyKind::Ball { center, radius } => dot(center, x) + radius * norm(x),
            BodyKind::VPolytope { vertices } => vertices
                .iter()
                .map(|v| dot(v, x))
                .fold(f64::NEG_INFINITY, f64::max),
            BodyKind::HPolytope { a, b } => {
                lp_maximize(a, b, x)
                    .expect("validated hpolytope is feasible and bounded")
                    .value
            }
            BodyKind::Scaled { lambda, body } => lambda * body.support_function(x),
            BodyKind::Reflected { body } => body.support_function(&linalg::neg(x)),
            BodyKind::MinkowskiSum { parts } => parts.iter().map(|p| p.support_function(x)).sum(),
        }
    }

    /// A maximizer of `x·η` over the body. Ties are broken arbitrarily.
    pub fn support_point(&self, x: &[f64]) -> Vec<f64> {
        self.check_dim(x);
        match &self.kind {
            BodyKind::Ball { center, radius } => {
                let n = norm(x);
                if n == 0.0 {
                    center.clone()
                } else {
                    linalg::add(center, &linalg::scale(x, radius / n))
                }
            }
            BodyKind::VPolytope { vertices } => vertices
                .iter()
                .max_by(|p, q| dot(p, x).total_cmp(&dot(q, x)))
                .cloned()
                .expect("nonempty"),
            BodyKind::HPolytope { a, b } => {
                lp_maximize(a, b, x)
                    .expect("validated hpolytope is feasible and bounded")
                    .argmax
            }
            BodyKind::Scaled { lambda, body } => linalg::scale(&body.support_point(x), *lambda),
            BodyKind::Reflected { body } => linalg::neg(&body.support_point(&linalg::neg(x))),
            BodyKind::MinkowskiSum { parts } => parts
                .iter()
                .map(|p| p.support_point(x))
                .reduce(|a, b| linalg::add(&a, &b))
                .expect("nonempty"),
        }
    }

    /// Vertices of an H-polytope by brute-force enumeration over
    /// d-subsets of constraints.
    fn enumerate_h_vertices(a: &[Vec<f64>], b: &[f64]) -> Vec<Vec<f64>> {
        let dim = a[0].len();
        let m = a.len();
        let scale = 1.0 + b.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
        let mut out = Vec::new();
        let mut combo: Vec<usize> = (0..dim).collect();
        if m < dim {
            return out;
        }
        loop {
            let mat: Vec<Vec<f64>> = combo.iter().map(|&i| a[i].clone()).collect();
            let rhs: Vec<f64> = combo.iter().map(|&i| b[i]).collect();
            if let Some(v) = linalg::solve(mat, rhs) {
                if a.iter().zip(b).all(|(row, bi)| dot(row, &v) <= bi + 1e-9 * scale) {
                    out.push(v);
                }
            }
            // next combination
            let mut i = dim;
            loop {
                if i == 0 {
                    return dedup_approx(out, 1e-10 * scale);
                }
                i -= 1;
                if combo[i] < m - dim + i {
                    combo[i] += 1;
                    for j in i + 1..dim {
                        combo[j] = combo[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    /// Finite vertex (or generating point) set, when one is available.
    pub fn vertex_form(&self) -> Option<Vec<Vec<f64>>> {
        match &self.kind {
            BodyKind::Ball { center, radius } if *radius == 0.0 => Some(vec![center.clone()]),
            BodyKind::Ball { .. } => None,
            BodyKind::VPolytope { vertices } => Some(vertices.clone()),
            BodyKind::HPolytope { a, b } => Some(Self::enumerate_h_vertices(a, b)),
            BodyKind::Scaled { lambda, body } => body
                .vertex_form()
                .map(|vs| dedup_points(vs.iter().map(|v| linalg::scale(v, *lambda)).collect())),
            BodyKind::Reflected { body } => body
                .vertex_form()
                .map(|vs| vs.iter().map(|v| linalg::neg(v)).collect()),
            BodyKind::MinkowskiSum { parts } => {
                let mut acc: Vec<Vec<f64>> = vec![vec![0.0; self.dim]];
                for p in parts {
                    let vs = p.vertex_form()?;
                    if acc.len() * vs.len() > 4096 {
                        return None;
                    }
                    acc = acc
                        .iter()
                        .flat_map(|a| vs.iter().map(move |v| linalg::add(a, v)))
                        .collect();
                }
                Some(dedup_approx(acc, 1e-13))
            }
        }
    }

    /// `(A, b)` with `K = {η : Aη ≤ b}`, when directly available.
    pub fn h_form(&self) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
        if self.dim == 1 {
            // Every 1-d body is the interval [-h(-1), h(1)].
            let hi = self.support_function(&[1.0]);
            let lo = -self.support_function(&[-1.0]);
            return Some((vec![vec![1.0], vec![-1.0]], vec![hi, -lo]));
        }
        match &self.kind {
            BodyKind::HPolytope { a, b } => Some((a.clone(), b.clone())),
            BodyKind::Scaled { lambda, body } => {
                let (a, b) = body.h_form()?;
                if *lambda == 0.0 {
                    let zero = vec![0.0; self.dim];
                    let cube = ConvexBody::cuboid(&zero, &zero).ok()?;
                    return cube.h_form();
                }
                Some((a, linalg::scale(&b, *lambda)))
            }
            BodyKind::Reflected { body } => {
                let (a, b) = body.h_form()?;
                Some((a.iter().map(|r| linalg::neg(r)).collect(), b))
            }
            _ => None,
        }
    }

    /// `(center, radius)` when the body is exactly a closed ball.
    pub fn ball_form(&self) -> Option<(Vec<f64>, f64)> {
        match &self.kind {
            BodyKind::Ball { center, radius } => Some((center.clone(), *radius)),
            BodyKind::VPolytope { vertices } if vertices.len() == 1 => {
                Some((vertices[0].clone(), 0.0))
            }
            BodyKind::Scaled { lambda, body } => body
                .ball_form()
                .map(|(c, r)| (linalg::scale(&c, *lambda), lambda * r)),
            BodyKind::Reflected { body } => body.ball_form().map(|(c, r)| (linalg::neg(&c), r)),
            BodyKind::MinkowskiSum { parts } => {
                let mut c = vec![0.0; self.dim];
                let mut r = 0.0;
                for p in parts {
                    let (pc, pr) = p.ball_form()?;
                    c = linalg::add(&c, &pc);
                    r += pr;
                }
                Some((c, r))
            }
            _ => None,
        }
    }

    /// Whether the origin lies in the body, when decidable exactly.
    pub fn contains_origin_exact(&self) -> Option<bool> {
        if let Some((c, r)) = self.ball_form() {
            return Some(norm(&c) <= r + 1e-12);
        }
        if let Some((_, b)) = self.h_form() {
            return Some(b.iter().all(|&bi| bi >= -1e-10));
        }
        None
    }

    /// An upper bound `R` with `K ⊆ B̄(0, R)`; exact for vertex and ball forms.
    pub fn circumradius_bound(&self) -> f64 {
        if let Some(vs) = self.vertex_form() {
            return vs.iter().map(|v| norm(v)).fold(0.0, f64::max);
        }
        match &self.kind {
            BodyKind::Ball { center, radius } => norm(center) + radius,
            BodyKind::Scaled { lambda, body } => lambda * body.circumradius_bound(),
            BodyKind::Reflected { body } => body.circumradius_bound(),
            BodyKind::MinkowskiSum { parts } => parts.iter().map(|p| p.circumradius_bound()).sum(),
            BodyKind::VPolytope { .. } | BodyKind::HPolytope { .. } => unreachable!(),
        }
    }

    /// Flattened form for fast repeated support-function evaluation.
    pub fn flatten(&self) -> FlatBody {
        let mut flat = FlatBody {
            dim: self.dim,
            vertex_sets: Vec::new(),
            ball_center: vec![0.0; self.dim],
            ball_radius: 0.0,
        };
        self.flatten_into(1.0, &mut flat);
        flat
    }

    fn flatten_into(&self, s: f64, flat: &mut FlatBody) {
        match &self.kind {
            BodyKind::Ball { center, radius } => {
                flat.ball_center = linalg::add(&flat.ball_center, &linalg::scale(center, s));
                flat.ball_radius += s.abs() * radius;
            }
            BodyKind::VPolytope { .. } | BodyKind::HPolytope { .. } => {
                let vs = self.vertex_form().expect("polytopes have vertex form");
                if vs.len() == 1 {
                    flat.ball_center = linalg::add(&flat.ball_center, &linalg::scale(&vs[0], s));
                } else {
                    flat.vertex_sets
                        .push(vs.iter().map(|v| linalg::scale(v, s)).collect());
                }
            }
            BodyKind::Scaled { lambda, body } => body.flatten_into(s * lambda, flat),
            BodyKind::Reflected { body } => body.flatten_into(-s, flat),
            BodyKind::MinkowskiSum { parts } => parts.iter().for_each(|p| p.flatten_into(s, flat)),
        }
    }

    /// Points of the body for sup-over-K sampling: support points in the
    /// given directions, all vertices when the body is a single polytope, and
    /// random convex combinations of those, `max_points` in total.
    pub fn sample_points<R: Rng>(
        &self,
        directions: &[Vec<f64>],
        max_points: usize,
        rng: &mut R,
    ) -> Vec<Vec<f64>> {
        let mut extreme: Vec<Vec<f64>> = Vec::new();
        if let Some(vs) = self.vertex_form() {
            if vs.len() <= max_points / 2 {
                extreme.extend(vs);
            }
        }
        for u in directions {
            extreme.push(self.support_point(u));
        }
        let mut points = dedup_approx(extreme, 1e-12);
        points.truncate(max_points);
        let base = points.clone();
        while points.len() < max_points && base.len() > 1 {
            let weights: Vec<f64> = base.iter().map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
            let total: f64 = weights.iter().sum();
            let mut p = vec![0.0; self.dim];
            for (w, v) in weights.iter().zip(&base) {
                for (pi, vi) in p.iter_mut().zip(v) {
                    *pi += w / total * vi;
                }
            }
            points.push(p);
        }
        points
    }
}

/// Support function as `Σ_sets max_v v·x + c·x + r|x|`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatBody {
    pub dim: usize,
    pub vertex_sets: Vec<Vec<Vec<f64>>>,
    pub ball_center: Vec<f64>,
    pub ball_radius: f64,
}

impl FlatBody {
    pub fn support(&self, x: &[f64]) -> f64 {
        let mut h = dot(&self.ball_center, x);
        if self.ball_radius != 0.0 {
            h += self.ball_radius * norm(x);
        }
        for set in &self.vertex_sets {
            h += set.iter().map(|v| dot(v, x)).fold(f64::NEG_INFINITY, f64::max);
        }
        h
    }
}

/// `minkowski_sum` as a free function.
pub fn minkowski_sum(k1: ConvexBody, k2: ConvexBody) -> Result<ConvexBody> {
    ConvexBody::minkowski_sum(k1, k2)
}

/// `support_function` as a free function.
pub fn support_function(k: &ConvexBody, x: &[f64]) -> f64 {
    k.support_function(x)
}
