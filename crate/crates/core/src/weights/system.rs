use serde::{Deserialize, Serialize};

use super::Weight;
use crate::error::{Error, Result};
use crate::geometry::directions::{probe_directions, DEFAULT_SEED};
use crate::geometry::{contains, ConvexBody, OpenConvexRegion};

/// Relative slack allowed in the monotonicity invariants.
pub const MONOTONE_TOL: f64 = 1e-12;

/// Radii at which monotonicity of a user-defined system is spot-checked.
const MONOTONE_RADII: [f64; 9] = [0.0, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0, 1e3];

/// `v_N`, `N = start..start+len`, pointwise nonincreasing in `N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecreasingWeightSystem {
    dim: usize,
    start: usize,
    weights: Vec<Weight>,
}

/// Where an increasing system came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemOrigin {
    /// `w_N = e^{h_{-K_N}}` with `K_N` the fixed exhaustion of the region.
    Exponential {
        region: OpenConvexRegion,
        bodies: Vec<ConvexBody>,
    },
    UserDefined,
}

/// `w_N`, `N = start..start+len`, pointwise nondecreasing in `N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncreasingWeightSystem {
    dim: usize,
    start: usize,
    weights: Vec<Weight>,
    origin: SystemOrigin,
}

/// Log-space monotonicity: `ln lower ≤ ln upper + ln(1 + tol)` on sample points.
fn check_monotone(weights: &[Weight], start: usize, increasing: bool, dim: usize) -> Result<()> {
    for w in weights {
        w.validate()?;
        if let Some(d) = w.dim() {
            if d != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: d,
                });
            }
        }
    }
    let dirs = probe_directions(dim, DEFAULT_SEED);
    let slack = MONOTONE_TOL.ln_1p();
    for (i, pair) in weights.windows(2).enumerate() {
        let (lo, hi) = if increasing {
            (&pair[0], &pair[1])
        } else {
            (&pair[1], &pair[0])
        };
        for u in &dirs {
            for r in MONOTONE_RADII {
                let x: Vec<f64> = u.iter().map(|c| c * r).collect();
                let (a, b) = (lo.ln_value(&x), hi.ln_value(&x));
                if a > b + slack + 1e-13 * b.abs() {
                    return Err(Error::InvalidInput(format!(
                        "weight system not monotone between indices {} and {} at {:?}",
                        start + i,
                        start + i + 1,
                        x
                    )));
                }
            }
        }
    }
    Ok(())
}

impl DecreasingWeightSystem {
    pub fn new(start: usize, weights: Vec<Weight>, dim: usize) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInput("empty weight system".into()));
        }
        check_monotone(&weights, start, false, dim)?;
        Ok(DecreasingWeightSystem {
            dim,
            start,
            weights,
        })
    }

    /// `v_N = (1 + |x|)^{-N}`, `N = 0..=n_max`.
    pub fn polynomial(n_max: usize, dim: usize) -> Self {
        DecreasingWeightSystem {
            dim,
            start: 0,
            weights: (0..=n_max).map(|n| Weight::poly_inv(n as f64)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn max_index(&self) -> usize {
        self.start + self.weights.len() - 1
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.max_index()
    }

    pub fn weight(&self, n: usize) -> &Weight {
        &self.weights[n - self.start]
    }

    pub fn weights(&self) -> &[Weight] {
        &self.weights
    }
}

impl IncreasingWeightSystem {
    pub fn new(start: usize, weights: Vec<Weight>, dim: usize) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInput("empty weight system".into()));
        }
        check_monotone(&weights, start, true, dim)?;
        Ok(IncreasingWeightSystem {
            dim,
            start,
            weights,
            origin: SystemOrigin::UserDefined,
        })
    }

    pub fn origin(&self) -> &SystemOrigin {
        &self.origin
    }

    pub fn is_exponential(&self) -> bool {
        matches!(self.origin, SystemOrigin::Exponential { .. })
    }

    /// `K_N` for exponential systems.
    pub fn body(&self, n: usize) -> Option<&ConvexBody> {
        match &self.origin {
            SystemOrigin::Exponential { bodies, .. } => bodies.get(n - self.start),
            SystemOrigin::UserDefined => None,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn max_index(&self) -> usize {
        self.start + self.weights.len() - 1
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.max_index()
    }

    pub fn weight(&self, n: usize) -> &Weight {
        &self.weights[n - self.start]
    }

    pub fn weights(&self) -> &[Weight] {
        &self.weights
    }
}

/// `w_N = e^{h_{-K_N}}` for `N = N₀..=n_max`, with nesting of the bodies
/// certified by the exact inclusion test.
pub fn exp_weight_system(region: &OpenConvexRegion, n_max: usize) -> Result<IncreasingWeightSystem> {
    let start = region.min_exhaustion_index()?;
    if n_max < start {
        return Err(Error::ExhaustionIndexTooSmall {
            index: n_max,
            minimum: start,
        });
    }
    let bodies = (start..=n_max)
        .map(|n| region.exhaust(n))
        .collect::<Result<Vec<_>>>()?;
    let dim = region.dim();
    for (i, pair) in bodies.windows(2).enumerate() {
        let report = contains(&pair[0], &pair[1], 2 * dim)?;
        if !report.is_certified() {
            return Err(Error::InvalidInput(format!(
                "exhaustion bodies {} and {} not certified nested",
                start + i,
                start + i + 1
            )));
        }
    }
    let weights = bodies
        .iter()
        .map(|k| Weight::exp_support(ConvexBody::reflected(k.clone())))
        .collect();
    Ok(IncreasingWeightSystem {
        dim,
        start,
        weights,
        origin: SystemOrigin::Exponential {
            region: region.clone(),
            bodies,
        },
    })
}

/// JSON description of an increasing system.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IncreasingSystemSpec {
    Exponential { region: OpenConvexRegion, n_max: usize },
    Explicit {
        #[serde(default = "one")]
        start: usize,
        dim: usize,
        weights: Vec<Weight>,
    },
}

/// JSON description of a decreasing system.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DecreasingSystemSpec {
    Polynomial { n_max: usize, dim: usize },
    Explicit {
        #[serde(default)]
        start: usize,
        dim: usize,
        weights: Vec<Weight>,
    },
}

fn one() -> usize {
    1
}

impl IncreasingSystemSpec {
    pub fn dim(&self) -> usize {
        match self {
            IncreasingSystemSpec::Exponential { region, .. } => region.dim(),
            IncreasingSystemSpec::Explicit { dim, .. } => *dim,
        }
    }

    pub fn build(&self) -> Result<IncreasingWeightSystem> {
        match self {
            IncreasingSystemSpec::Exponential { region, n_max } => exp_weight_system(region, *n_max),
            IncreasingSystemSpec::Explicit {
                start,
                dim,
                weights,
            } => IncreasingWeightSystem::new(*start, weights.clone(), *dim),
        }
    }
}

impl DecreasingSystemSpec {
    pub fn build(&self) -> Result<DecreasingWeightSystem> {
        match self {
            DecreasingSystemSpec::Polynomial { n_max, dim } => {
                Ok(DecreasingWeightSystem::polynomial(*n_max, *dim))
            }
            DecreasingSystemSpec::Explicit {
                start,
                dim,
                weights,
            } => DecreasingWeightSystem::new(*start, weights.clone(), *dim),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotonicity_is_enforced() {
        let up = vec![Weight::poly(2.0), Weight::poly(1.0)];
        assert!(IncreasingWeightSystem::new(1, up.clone(), 1).is_err());
        assert!(DecreasingWeightSystem::new(0, up, 1).is_ok());
    }

    #[test]
    fn half_line_system() {
        let region = OpenConvexRegion::hregion(vec![vec![-1.0]], vec![0.0]).unwrap();
        let sys = exp_weight_system(&region, 8).unwrap();
        assert_eq!(sys.start(), 1);
        assert_eq!(sys.max_index(), 8);
        let w3 = sys.weight(3);
        assert!((w3.ln_value(&[2.0]) + 2.0 / 3.0).abs() < 1e-12);
        assert!((w3.ln_value(&[-2.0]) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn too_small_index() {
        let sq = OpenConvexRegion::open_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!(matches!(
            exp_weight_system(&sq, 1),
            Err(Error::ExhaustionIndexTooSmall { minimum: 2, .. })
        ));
    }
}
