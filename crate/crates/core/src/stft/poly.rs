use serde::{Deserialize, Serialize};

/// `coeff · u^powers`; missing trailing powers count as zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub coeff: f64,
    #[serde(default)]
    pub powers: Vec<u32>,
}

/// A real polynomial in `d` variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Poly {
    terms: Vec<Monomial>,
}

impl Default for Poly {
    fn default() -> Self {
        Poly::constant(1.0)
    }
}

fn falling(p: u32, k: u32) -> f64 {
    (0..k).map(|j| (p - j) as f64).product()
}

impl Poly {
    pub fn new(terms: Vec<Monomial>) -> Self {
        Poly { terms }
    }

    pub fn constant(c: f64) -> Self {
        Poly {
            terms: vec![Monomial {
                coeff: c,
                powers: Vec::new(),
            }],
        }
    }

    /// `c · u_axis^p`.
    pub fn monomial(c: f64, axis: usize, p: u32) -> Self {
        let mut powers = vec![0; axis + 1];
        powers[axis] = p;
        Poly {
            terms: vec![Monomial { coeff: c, powers }],
        }
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn is_finite(&self) -> bool {
        self.terms.iter().all(|m| m.coeff.is_finite())
    }

    /// Largest number of variables any monomial mentions.
    pub fn arity(&self) -> usize {
        self.terms.iter().map(|m| m.powers.len()).max().unwrap_or(0)
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .filter(|m| m.coeff != 0.0)
            .map(|m| m.powers.iter().sum())
            .max()
            .unwrap_or(0)
    }

    pub fn abs_coeff_sum(&self) -> f64 {
        self.terms.iter().map(|m| m.coeff.abs()).sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|m| Monomial {
                    coeff: m.coeff * s,
                    powers: m.powers.clone(),
                })
                .collect(),
        }
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        self.derivative(&[], u)
    }

    /// `∂^beta p (u)`.
    pub fn derivative(&self, beta: &[u32], u: &[f64]) -> f64 {
        let mut total = 0.0;
        'terms: for m in &self.terms {
            let mut v = m.coeff;
            for (i, &ui) in u.iter().enumerate() {
                let p = m.powers.get(i).copied().unwrap_or(0);
                let b = beta.get(i).copied().unwrap_or(0);
                if b > p {
                    continue 'terms;
                }
                v *= falling(p, b) * ui.powi((p - b) as i32);
            }
            total += v;
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives() {
        // p(u, v) = 3u²v - v³ + 2
        let p = Poly::new(vec![
            Monomial { coeff: 3.0, powers: vec![2, 1] },
            Monomial { coeff: -1.0, powers: vec![0, 3] },
            Monomial { coeff: 2.0, powers: vec![] },
        ]);
        let u = [1.5, -2.0];
        assert_eq!(p.eval(&u), 3.0 * 2.25 * -2.0 + 8.0 + 2.0);
        assert_eq!(p.derivative(&[1, 0], &u), 6.0 * 1.5 * -2.0);
        assert_eq!(p.derivative(&[0, 2], &u), -6.0 * -2.0);
        assert_eq!(p.derivative(&[2, 1], &u), 6.0);
        assert_eq!(p.derivative(&[3, 0], &u), 0.0);
        assert_eq!(p.degree(), 3);
    }
}
