use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::geometry::{ConvexBody, FlatBody};
use crate::linalg::norm;

/// Lazily flattened support function of an `ExpSupport` body.
#[derive(Debug, Clone, Default)]
pub struct FlatCache(OnceLock<FlatBody>);

impl PartialEq for FlatCache {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

/// A positive continuous weight on ℝ^d, built from a small descriptor grammar.
/// Evaluation is done in log space so exponential weights never overflow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Weight {
    Constant { value: f64 },
    /// `(1 + |x|)^k`
    Poly { k: f64 },
    /// `(1 + |x|)^{-n}`
    PolyInv { n: f64 },
    /// `e^{h_K(x)}`
    ExpSupport {
        body: ConvexBody,
        #[serde(skip)]
        cache: FlatCache,
    },
    /// `e^{max(|x|, 1)^a}`
    PowerExp { a: f64 },
    Product { factors: Vec<Weight> },
    Quotient { num: Box<Weight>, den: Box<Weight> },
    /// Pointwise minimum.
    Min { terms: Vec<Weight> },
}

impl Weight {
    pub fn constant(value: f64) -> Self {
        Weight::Constant { value }
    }

    pub fn poly(k: f64) -> Self {
        Weight::Poly { k }
    }

    pub fn poly_inv(n: f64) -> Self {
        Weight::PolyInv { n }
    }

    pub fn exp_support(body: ConvexBody) -> Self {
        Weight::ExpSupport {
            body,
            cache: FlatCache::default(),
        }
    }

    pub fn power_exp(a: f64) -> Self {
        Weight::PowerExp { a }
    }

    /// `e^{-rate |x|}` on ℝ^dim.
    pub fn exp_decay(rate: f64, dim: usize) -> Result<Self> {
        Ok(Weight::Quotient {
            num: Box::new(Weight::constant(1.0)),
            den: Box::new(Weight::exp_support(ConvexBody::ball(vec![0.0; dim], rate)?)),
        })
    }

    pub fn product(factors: Vec<Weight>) -> Self {
        Weight::Product { factors }
    }

    pub fn quotient(num: Weight, den: Weight) -> Self {
        Weight::Quotient {
            num: Box::new(num),
            den: Box::new(den),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Weight::Constant { value } if !(value.is_finite() && *value > 0.0) => Err(
                Error::InvalidInput(format!("constant weight {value} must be positive")),
            ),
            Weight::Poly { k: e } | Weight::PolyInv { n: e } | Weight::PowerExp { a: e }
                if !e.is_finite() =>
            {
                Err(Error::InvalidInput("non-finite weight exponent".into()))
            }
            Weight::Product { factors: ws } | Weight::Min { terms: ws } => {
                if ws.is_empty() {
                    return Err(Error::InvalidInput("empty weight combination".into()));
                }
                ws.iter().try_for_each(Weight::validate)
            }
            Weight::Quotient { num, den } => {
                num.validate()?;
                den.validate()
            }
            _ => Ok(()),
        }
    }

    /// Dimension constraint carried by the weight, if any.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Weight::ExpSupport { body, .. } => Some(body.dim()),
            Weight::Product { factors: ws } | Weight::Min { terms: ws } => {
                ws.iter().find_map(Weight::dim)
            }
            Weight::Quotient { num, den } => num.dim().or(den.dim()),
            _ => None,
        }
    }

    /// `ln w(x)`.
    pub fn ln_value(&self, x: &[f64]) -> f64 {
        match self {
            Weight::Constant { value } => value.ln(),
            Weight::Poly { k } => k * norm(x).ln_1p(),
            Weight::PolyInv { n } => -n * norm(x).ln_1p(),
            Weight::ExpSupport { body, cache } => cache.0.get_or_init(|| body.flatten()).support(x),
            Weight::PowerExp { a } => norm(x).max(1.0).powf(*a),
            Weight::Product { factors } => factors.iter().map(|w| w.ln_value(x)).sum(),
            Weight::Quotient { num, den } => num.ln_value(x) - den.ln_value(x),
            Weight::Min { terms } => terms
                .iter()
                .map(|w| w.ln_value(x))
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.ln_value(x).exp()
    }
}
