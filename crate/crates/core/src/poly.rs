//! Sparse real polynomials in the five ambient coordinates.
//!
//! Used for polynomial fixtures, for profiles `ζ(σ)` of homogeneous fields
//! (a polynomial restricted to the unit sphere), and as the trial space of
//! the projection.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{Point, DIM};

/// Exponent vector of a monomial `x1^a1 ... x5^a5`.
pub type Exponent = [u8; DIM];

/// One monomial with its coefficient, in the serialized form
/// `{"exp": [a1, .., a5], "coef": c}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub exp: Exponent,
    pub coef: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Poly {
    terms: BTreeMap<Exponent, f64>,
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial([0; DIM], c)
    }

    /// The coordinate function `x_k` (0-based).
    pub fn coordinate(k: usize) -> Self {
        let mut e = [0; DIM];
        e[k] = 1;
        Self::monomial(e, 1.0)
    }

    pub fn monomial(exp: Exponent, coef: f64) -> Self {
        let mut p = Self::zero();
        p.add_term(exp, coef);
        p
    }

    pub fn from_terms(terms: &[Term]) -> Self {
        let mut p = Self::zero();
        for t in terms {
            p.add_term(t.exp, t.coef);
        }
        p
    }

    pub fn terms(&self) -> Vec<Term> {
        self.terms
            .iter()
            .map(|(&exp, &coef)| Term { exp, coef })
            .collect()
    }

    pub fn add_term(&mut self, exp: Exponent, coef: f64) {
        if coef == 0.0 {
            return;
        }
        let entry = self.terms.entry(exp).or_insert(0.0);
        *entry += coef;
        if *entry == 0.0 {
            self.terms.remove(&exp);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&a| a as usize).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut p = Self::zero();
        for (&e, &c) in &self.terms {
            p.add_term(e, c * s);
        }
        p
    }

    pub fn add(&self, other: &Poly) -> Self {
        let mut p = self.clone();
        for (&e, &c) in &other.terms {
            p.add_term(e, c);
        }
        p
    }

    pub fn mul(&self, other: &Poly) -> Self {
        let mut p = Self::zero();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let mut e = [0u8; DIM];
                for k in 0..DIM {
                    e[k] = ea[k] + eb[k];
                }
                p.add_term(e, ca * cb);
            }
        }
        p
    }

    /// Partial derivative with respect to `x_k`.
    pub fn derivative(&self, k: usize) -> Self {
        let mut p = Self::zero();
        for (&e, &c) in &self.terms {
            if e[k] > 0 {
                let mut d = e;
                d[k] -= 1;
                p.add_term(d, c * e[k] as f64);
            }
        }
        p
    }

    pub fn eval(&self, x: &Point) -> f64 {
        match PowerTable::new(x, self.max_exponent()) {
            Some(t) => self.terms.iter().map(|(e, c)| c * t.monomial(e)).sum(),
            None => self.terms.iter().map(|(e, c)| c * monomial_value(e, x)).sum(),
        }
    }

    pub fn gradient(&self, x: &Point) -> Point {
        self.value_and_gradient(x).1
    }

    /// `(p(x), ∇p(x))` in one pass.
    pub fn value_and_gradient(&self, x: &Point) -> (f64, Point) {
        let table = PowerTable::new(x, self.max_exponent());
        let mono = |e: &Exponent| match &table {
            Some(t) => t.monomial(e),
            None => monomial_value(e, x),
        };
        let mut v = 0.0;
        let mut g = [0.0; DIM];
        for (e, c) in &self.terms {
            v += c * mono(e);
            for k in 0..DIM {
                if e[k] == 0 {
                    continue;
                }
                let mut d = *e;
                d[k] -= 1;
                g[k] += c * e[k] as f64 * mono(&d);
            }
        }
        (v, g)
    }

    fn max_exponent(&self) -> u8 {
        self.terms.keys().flatten().copied().max().unwrap_or(0)
    }
}

const TABLE_MAX: usize = 12;

/// `x_k^a` for `a ≤ TABLE_MAX`, built by repeated multiplication.
struct PowerTable([[f64; TABLE_MAX + 1]; DIM]);

impl PowerTable {
    fn new(x: &Point, max_exp: u8) -> Option<Self> {
        let m = max_exp as usize;
        if m > TABLE_MAX {
            return None;
        }
        let mut t = [[1.0; TABLE_MAX + 1]; DIM];
        for k in 0..DIM {
            for a in 1..=m {
                t[k][a] = t[k][a - 1] * x[k];
            }
        }
        Some(Self(t))
    }

    fn monomial(&self, e: &Exponent) -> f64 {
        let t = &self.0;
        t[0][e[0] as usize] * t[1][e[1] as usize] * t[2][e[2] as usize] * t[3][e[3] as usize] * t[4][e[4] as usize]
    }
}

pub fn monomial_value(e: &Exponent, x: &Point) -> f64 {
    let mut v = 1.0;
    for k in 0..DIM {
        if e[k] > 0 {
            v *= x[k].powi(e[k] as i32);
        }
    }
    v
}

/// All exponent vectors of total degree exactly `d`, in lexicographic order.
pub fn exponents_of_degree(d: usize) -> Vec<Exponent> {
    fn rec(k: usize, left: usize, cur: &mut Exponent, out: &mut Vec<Exponent>) {
        if k == DIM - 1 {
            cur[k] = left as u8;
            out.push(*cur);
            return;
        }
        for a in (0..=left).rev() {
            cur[k] = a as u8;
            rec(k + 1, left - a, cur, out);
        }
    }
    let mut out = Vec::new();
    rec(0, d, &mut [0; DIM], &mut out);
    out
}

/// A polynomial vector field `x ↦ (p1(x), .., p5(x))`.
pub type VecPoly = [Poly; DIM];

pub fn vec_poly_eval(p: &VecPoly, x: &Point) -> Point {
    std::array::from_fn(|i| p[i].eval(x))
}

/// `σ ↦ c·σ`.
pub fn radial_vec_poly(c: f64) -> VecPoly {
    std::array::from_fn(|i| Poly::coordinate(i).scaled(c))
}

/// `σ ↦ v` for a constant vector `v`.
pub fn constant_vec_poly(v: &Point) -> VecPoly {
    std::array::from_fn(|i| Poly::constant(v[i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_counts_match_binomials() {
        // C(d + 4, 4)
        assert_eq!(exponents_of_degree(0).len(), 1);
        assert_eq!(exponents_of_degree(1).len(), 5);
        assert_eq!(exponents_of_degree(2).len(), 15);
        assert_eq!(exponents_of_degree(4).len(), 70);
    }

    #[test]
    fn product_and_gradient() {
        let p = Poly::coordinate(0).mul(&Poly::coordinate(1)).add(&Poly::constant(2.0));
        let x = [0.5, -2.0, 1.0, 0.0, 3.0];
        assert_eq!(p.eval(&x), -1.0 + 2.0);
        assert_eq!(p.gradient(&x), [-2.0, 0.5, 0.0, 0.0, 0.0]);
        assert_eq!(p.derivative(0), Poly::coordinate(1));
        assert_eq!(p.degree(), 2);
    }

    #[test]
    fn cancellation_removes_terms() {
        let p = Poly::coordinate(2).add(&Poly::coordinate(2).scaled(-1.0));
        assert!(p.is_zero());
    }
}
