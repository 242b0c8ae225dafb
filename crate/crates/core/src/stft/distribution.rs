use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Poly, SchwartzTestFunction, Window};
use crate::error::{Error, Result};
use crate::geometry::{OpenConvexRegion, MAX_DIM};
use crate::linalg::{dot, multi_binomial, sub_indices};

mod coeff {
    use super::*;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Real(f64),
        Pair([f64; 2]),
    }

    pub fn serialize<S: Serializer>(c: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
        [c.re, c.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Complex64, D::Error> {
        Ok(match Repr::deserialize(d)? {
            Repr::Real(r) => Complex64::new(r, 0.0),
            Repr::Pair([re, im]) => Complex64::new(re, im),
        })
    }

    pub fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }
}

/// One summand of a symbolic test distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Term {
    /// `coeff · ∂^α δ_a`.
    DeltaDeriv {
        a: Vec<f64>,
        #[serde(default)]
        alpha: Vec<u32>,
        #[serde(with = "coeff", default = "coeff::one")]
        coeff: Complex64,
    },
    /// `coeff · p(t-a) e^{μ·t}` on the orthant `t ≥ a`.
    ExpPolyOrthant {
        mu: Vec<f64>,
        corner: Vec<f64>,
        #[serde(default)]
        poly: Poly,
        #[serde(with = "coeff", default = "coeff::one")]
        coeff: Complex64,
    },
    /// `coeff · p(t-c) e^{-|t-c|²/(2σ²)} e^{-τ·t}`.
    GaussPoly {
        sigma: f64,
        center: Vec<f64>,
        #[serde(default)]
        poly: Poly,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tilt: Option<Vec<f64>>,
        #[serde(with = "coeff", default = "coeff::one")]
        coeff: Complex64,
    },
    /// `coeff · p(t-c) ψ(t) e^{-τ·t}` for a bump `ψ` centred at `c`.
    Bump {
        window: Window,
        #[serde(default)]
        poly: Poly,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tilt: Option<Vec<f64>>,
        #[serde(with = "coeff", default = "coeff::one")]
        coeff: Complex64,
    },
}

impl Term {
    pub fn dim(&self) -> usize {
        match self {
            Term::DeltaDeriv { a, .. } => a.len(),
            Term::ExpPolyOrthant { mu, .. } => mu.len(),
            Term::GaussPoly { center, .. } => center.len(),
            Term::Bump { window, .. } => window.dim(),
        }
    }

    pub fn coeff(&self) -> Complex64 {
        match self {
            Term::DeltaDeriv { coeff, .. }
            | Term::ExpPolyOrthant { coeff, .. }
            | Term::GaussPoly { coeff, .. }
            | Term::Bump { coeff, .. } => *coeff,
        }
    }

    fn coeff_mut(&mut self) -> &mut Complex64 {
        match self {
            Term::DeltaDeriv { coeff, .. }
            | Term::ExpPolyOrthant { coeff, .. }
            | Term::GaussPoly { coeff, .. }
            | Term::Bump { coeff, .. } => coeff,
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        let check = |v: &[f64]| -> Result<()> {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput("non-finite term parameter".into()));
            }
            Ok(())
        };
        if !(self.coeff().re.is_finite() && self.coeff().im.is_finite()) {
            return Err(Error::InvalidInput("non-finite coefficient".into()));
        }
        let poly_ok = |p: &Poly| -> Result<()> {
            if p.arity() > dim || !p.is_finite() {
                return Err(Error::InvalidInput("polynomial does not fit the dimension".into()));
            }
            Ok(())
        };
        match self {
            Term::DeltaDeriv { a, alpha, .. } => {
                check(a)?;
                if !alpha.is_empty() && alpha.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: alpha.len() });
                }
            }
            Term::ExpPolyOrthant { mu, corner, poly, .. } => {
                check(mu)?;
                check(corner)?;
                poly_ok(poly)?;
            }
            Term::GaussPoly { sigma, center, poly, tilt, .. } => {
                if !(sigma.is_finite() && *sigma > 0.0) {
                    return Err(Error::InvalidInput("Gaussian width must be positive".into()));
                }
                check(center)?;
                poly_ok(poly)?;
                if let Some(t) = tilt {
                    check(t)?;
                }
            }
            Term::Bump { window, poly, tilt, .. } => {
                check(window.center())?;
                poly_ok(poly)?;
                if let Some(t) = tilt {
                    check(t)?;
                }
            }
        }
        Ok(())
    }

    /// The smooth function behind a `GaussPoly` or `Bump` term, without its coefficient.
    pub fn function(&self) -> Option<SchwartzTestFunction> {
        match self {
            Term::GaussPoly { sigma, center, poly, tilt, .. } => Some(SchwartzTestFunction {
                poly: poly.clone(),
                sigma: 0.5 / (sigma * sigma),
                center: center.clone(),
                tilt: tilt.clone(),
                bump: None,
                scale: 1.0,
            }),
            Term::Bump { window, poly, tilt, .. } => Some(SchwartzTestFunction {
                poly: poly.clone(),
                sigma: 0.0,
                center: window.center().to_vec(),
                tilt: tilt.clone(),
                bump: Some(window.clone()),
                scale: 1.0,
            }),
            _ => None,
        }
    }

    /// `ln |e^{μ·t}|` bound rate used when truncating test functions against this term.
    pub fn growth(&self) -> f64 {
        match self {
            Term::ExpPolyOrthant { mu, .. } => crate::linalg::norm(mu),
            _ => 0.0,
        }
    }

    /// Region of `ξ` with `e^{-ξ·t}` times the term tempered.
    pub fn gamma_region(&self) -> Result<OpenConvexRegion> {
        match self {
            Term::ExpPolyOrthant { mu, .. } => OpenConvexRegion::orthant(mu),
            _ => OpenConvexRegion::full_space(self.dim()),
        }
    }
}

fn add_tilt(tilt: &mut Option<Vec<f64>>, eta: &[f64]) {
    let t = tilt.get_or_insert_with(|| vec![0.0; eta.len()]);
    for (a, b) in t.iter_mut().zip(eta) {
        *a += b;
    }
}

/// Finite sum of [`Term`]s in a fixed dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution")]
pub struct TestDistribution {
    dim: usize,
    terms: Vec<Term>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDistribution {
    dim: usize,
    #[serde(default)]
    terms: Vec<Term>,
}

impl TryFrom<RawDistribution> for TestDistribution {
    type Error = Error;

    fn try_from(r: RawDistribution) -> Result<Self> {
        TestDistribution::new(r.dim, r.terms)
    }
}

impl TestDistribution {
    pub fn new(dim: usize, terms: Vec<Term>) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidInput(format!("dimension {dim} outside 1..={MAX_DIM}")));
        }
        for t in &terms {
            t.validate(dim)?;
        }
        let terms = terms
            .into_iter()
            .map(|t| match t {
                Term::DeltaDeriv { a, alpha, coeff } if alpha.is_empty() => Term::DeltaDeriv {
                    alpha: vec![0; a.len()],
                    a,
                    coeff,
                },
                other => other,
            })
            .collect();
        Ok(TestDistribution { dim, terms })
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Self::new(dim, Vec::new())
    }

    pub fn delta(a: Vec<f64>) -> Result<Self> {
        Self::delta_deriv(vec![0; a.len()], a)
    }

    pub fn delta_deriv(alpha: Vec<u32>, a: Vec<f64>) -> Result<Self> {
        Self::new(
            a.len(),
            vec![Term::DeltaDeriv { a, alpha, coeff: coeff::one() }],
        )
    }

    /// `H(t - a) e^{μ·t}` (all coordinates at least `a`).
    pub fn exp_orthant(mu: Vec<f64>, corner: Vec<f64>) -> Result<Self> {
        Self::new(
            mu.len(),
            vec![Term::ExpPolyOrthant { mu, corner, poly: Poly::default(), coeff: coeff::one() }],
        )
    }

    /// `e^{-|t-c|²/(2σ²)}`.
    pub fn gaussian(sigma: f64, center: Vec<f64>) -> Result<Self> {
        Self::new(
            center.len(),
            vec![Term::GaussPoly { sigma, center, poly: Poly::default(), tilt: None, coeff: coeff::one() }],
        )
    }

    pub fn bump(window: Window) -> Result<Self> {
        Self::new(
            window.dim(),
            vec![Term::Bump { window, poly: Poly::default(), tilt: None, coeff: coeff::one() }],
        )
    }

    /// A smooth test function as a distribution.
    pub fn from_function(f: &SchwartzTestFunction) -> Result<Self> {
        let coeff = Complex64::new(f.scale, 0.0);
        let term = match &f.bump {
            Some(w) if f.sigma == 0.0 => {
                if w.center() != f.center.as_slice() {
                    return Err(Error::InvalidInput("bump must be centred at the polynomial centre".into()));
                }
                Term::Bump { window: w.clone(), poly: f.poly.clone(), tilt: f.tilt.clone(), coeff }
            }
            None => Term::GaussPoly {
                sigma: (0.5 / f.sigma).sqrt(),
                center: f.center.clone(),
                poly: f.poly.clone(),
                tilt: f.tilt.clone(),
                coeff,
            },
            Some(_) => {
                return Err(Error::InvalidInput("Gaussian times bump is not in the term grammar".into()))
            }
        };
        Self::new(f.center.len(), vec![term])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coeff() == Complex64::new(0.0, 0.0))
    }

    /// True when every term is an `L²` function (`GaussPoly` or `Bump`).
    pub fn is_square_integrable(&self) -> bool {
        self.terms
            .iter()
            .all(|t| matches!(t, Term::GaussPoly { .. } | Term::Bump { .. }))
    }

    pub fn max_derivative_order(&self) -> u32 {
        self.terms
            .iter()
            .map(|t| match t {
                Term::DeltaDeriv { alpha, .. } => alpha.iter().sum(),
                _ => 0,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            *t.coeff_mut() *= c;
        }
        out
    }

    pub fn plus(&self, other: &TestDistribution) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(TestDistribution { dim: self.dim, terms })
    }

    /// `e^{-η·t} f`, folded into the term grammar. A delta derivative expands by
    /// the product rule: `e^{-η·t} ∂^α δ_a = Σ_β C(α,β) η^{α-β} e^{-η·a} ∂^β δ_a`.
    pub fn reweight(&self, eta: &[f64]) -> Result<Self> {
        if eta.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: eta.len() });
        }
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            match t {
                Term::DeltaDeriv { a, alpha, coeff } => {
                    let base = (-dot(eta, a)).exp();
                    for beta in sub_indices(alpha) {
                        let mut c = multi_binomial(alpha, &beta) * base;
                        for i in 0..self.dim {
                            c *= eta[i].powi((alpha[i] - beta[i]) as i32);
                        }
                        if c != 0.0 {
                            terms.push(Term::DeltaDeriv { a: a.clone(), alpha: beta, coeff: coeff * c });
                        }
                    }
                }
                Term::ExpPolyOrthant { mu, corner, poly, coeff } => terms.push(Term::ExpPolyOrthant {
                    mu: mu.iter().zip(eta).map(|(m, e)| m - e).collect(),
                    corner: corner.clone(),
                    poly: poly.clone(),
                    coeff: *coeff,
                }),
                Term::GaussPoly { sigma, center, poly, tilt, coeff } => {
                    let mut tilt = tilt.clone();
                    add_tilt(&mut tilt, eta);
                    terms.push(Term::GaussPoly { sigma: *sigma, center: center.clone(), poly: poly.clone(), tilt, coeff: *coeff });
                }
                Term::Bump { window, poly, tilt, coeff } => {
                    let mut tilt = tilt.clone();
                    add_tilt(&mut tilt, eta);
                    terms.push(Term::Bump { window: window.clone(), poly: poly.clone(), tilt, coeff: *coeff });
                }
            }
        }
        Self::new(self.dim, terms)
    }

    /// `(T_h f)(t) = f(t - h)`.
    pub fn translate(&self, h: &[f64]) -> Result<Self> {
        if h.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: h.len() });
        }
        let shift = |v: &[f64]| -> Vec<f64> { v.iter().zip(h).map(|(a, b)| a + b).collect() };
        let terms = self
            .terms
            .iter()
            .map(|t| -> Result<Term> {
                Ok(match t {
                    Term::DeltaDeriv { a, alpha, coeff } => Term::DeltaDeriv { a: shift(a), alpha: alpha.clone(), coeff: *coeff },
                    Term::ExpPolyOrthant { mu, corner, poly, coeff } => Term::ExpPolyOrthant {
                        mu: mu.clone(),
                        corner: shift(corner),
                        poly: poly.clone(),
                        coeff: coeff * (-dot(mu, h)).exp(),
                    },
                    Term::GaussPoly { sigma, center, poly, tilt, coeff } => Term::GaussPoly {
                        sigma: *sigma,
                        center: shift(center),
                        poly: poly.clone(),
                        tilt: tilt.clone(),
                        coeff: coeff * tilt.as_ref().map_or(1.0, |tl| dot(tl, h).exp()),
                    },
                    Term::Bump { window, poly, tilt, coeff } => Term::Bump {
                        window: window.clone().centered_at(shift(window.center()))?,
                        poly: poly.clone(),
                        tilt: tilt.clone(),
                        coeff: coeff * tilt.as_ref().map_or(1.0, |tl| dot(tl, h).exp()),
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.dim, terms)
    }

    /// Intersection of the per-term regions; all of `ℝ^d` for the zero distribution.
    pub fn gamma_region(&self) -> Result<OpenConvexRegion> {
        let mut region = OpenConvexRegion::full_space(self.dim)?;
        for t in &self.terms {
            region = region.intersect(&t.gamma_region()?)?;
        }
        Ok(region)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_grammar() {
        let json = r#"{"dim":1,"terms":[
            {"type":"delta_deriv","a":[0.0],"alpha":[1]},
            {"type":"exp_poly_orthant","mu":[0.5],"corner":[0.0],"coeff":[2.0,-1.0]},
            {"type":"gauss_poly","sigma":1.0,"center":[0.0],"coeff":3.0}
        ]}"#;
        let f: TestDistribution = serde_json::from_str(json).unwrap();
        assert_eq!(f.terms().len(), 3);
        assert_eq!(f.terms()[1].coeff(), Complex64::new(2.0, -1.0));
        assert_eq!(f.max_derivative_order(), 1);
        let back: TestDistribution = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(back, f);
        assert!(serde_json::from_str::<TestDistribution>(r#"{"dim":2,"terms":[{"type":"delta_deriv","a":[0.0]}]}"#).is_err());
    }

    #[test]
    fn regions() {
        let f = TestDistribution::exp_orthant(vec![0.5], vec![0.0]).unwrap();
        let g = f.gamma_region().unwrap();
        assert!(g.contains_point(&[0.6]) && !g.contains_point(&[0.5]));
        let d = TestDistribution::delta(vec![0.0, 0.0]).unwrap().gamma_region().unwrap();
        assert!(d.contains_point(&[-100.0, 7.0]));
    }
}
