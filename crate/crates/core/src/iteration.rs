//! Dyadic recurrence bounds and threshold constants.
//!
//! The certification object is the equality orbit
//! `F_{m+1} = b + δ F_m^{3/2}`: any sequence with
//! `F_{m+1} ≤ b + δ F_m^{3/2}` and the same start is dominated by it, since
//! `x ↦ b + δx^{3/2}` is increasing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceSpec {
    /// Additive scale; `b = 1` is the unscaled recurrence.
    #[serde(default = "one")]
    pub b: f64,
    pub delta: f64,
    /// Starting value `F(1)`.
    #[serde(rename = "F1")]
    pub f1: f64,
    pub depth: usize,
}

fn one() -> f64 {
    1.0
}

impl RecurrenceSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.delta) || !ok(self.f1) || !ok(self.b) || self.depth == 0 {
            return Err(Error::Config(format!(
                "recurrence needs finite positive b, δ, F(1) and depth ≥ 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Largest admissible `δ`: `min{b F1^{-3/2}, 1/(2√(2b))}`.
pub fn premise_limit(b: f64, f1: f64) -> f64 {
    (b * f1.powf(-1.5)).min(1.0 / (2.0 * (2.0 * b).sqrt()))
}

/// Whether `δ ≤ min{b F1^{-3/2}, 1/(2√(2b))}`. The comparison allows a
/// relative slack of four ulps so that boundary cases written as different
/// floating-point expressions (`2^{-3/2}` and `1/(2√2)`) are admitted.
pub fn check_recurrence_premise(spec: &RecurrenceSpec) -> bool {
    spec.delta <= premise_limit(spec.b, spec.f1) * (1.0 + 4.0 * f64::EPSILON)
}

fn require_premise(spec: &RecurrenceSpec) -> Result<()> {
    spec.validate()?;
    if !check_recurrence_premise(spec) {
        return Err(Error::PremiseViolated(format!(
            "δ = {} exceeds min{{b F1^(-3/2), 1/(2√(2b))}} = {}",
            spec.delta,
            premise_limit(spec.b, spec.f1)
        )));
    }
    Ok(())
}

/// Equality orbit without the premise check; `depth + 1` values starting at `F1`.
pub fn orbit(b: f64, delta: f64, f1: f64, depth: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(depth + 1);
    let mut f = f1;
    out.push(f);
    for _ in 0..depth {
        f = b + delta * f.powf(1.5);
        out.push(f);
    }
    out
}

/// `F(4^{-m})` for `m = 0..=depth` along the equality orbit.
pub fn simulate_recurrence(spec: &RecurrenceSpec) -> Result<Vec<f64>> {
    require_premise(spec)?;
    Ok(orbit(spec.b, spec.delta, spec.f1, spec.depth))
}

/// `max{2b, (b/δ)^{2/3}}`.
pub fn iteration_bound(spec: &RecurrenceSpec) -> Result<f64> {
    require_premise(spec)?;
    Ok((2.0 * spec.b).max((spec.b / spec.delta).powf(2.0 / 3.0)))
}

/// `S(ℓ) = 2((3/2)^ℓ - 1)`.
pub fn geometric_exponent(l: u32) -> f64 {
    2.0 * (1.5f64.powi(l as i32) - 1.0)
}

/// Checks `F_m ≤ 1 + (1/2)(2δ)^{S(ℓ)} F_{m-ℓ}^{(3/2)^ℓ}` on an orbit with
/// `b = 1` wherever `δ F_k^{3/2} ≥ 1` for every `k ∈ [m-ℓ, m-1]`.
/// Returns the number of checked pairs and the largest excess.
pub fn induction_claim_check(orbit: &[f64], delta: f64, max_l: u32) -> (usize, f64) {
    let mut checked = 0;
    let mut worst = f64::NEG_INFINITY;
    for m in 1..orbit.len() {
        for l in 1..=max_l {
            let l_us = l as usize;
            if l_us > m {
                break;
            }
            if !(m - l_us..m).all(|k| delta * orbit[k].powf(1.5) >= 1.0) {
                continue;
            }
            let rhs = 1.0
                + 0.5 * (2.0 * delta).powf(geometric_exponent(l)) * orbit[m - l_us].powf(1.5f64.powi(l as i32));
            checked += 1;
            worst = worst.max(orbit[m] - rhs);
        }
    }
    (checked, worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConstants {
    pub m: f64,
    #[serde(rename = "C_E")]
    pub c_e: f64,
    pub delta1: f64,
    pub delta2: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
    pub feasible: bool,
}

/// `δ1 = m²/2`; `δ2` the largest value with
/// `√m ≥ 2√2 δ2 + √(8(δ2² + C_E))`, i.e. `(m - 8C_E)/(4√(2m))` (zero if
/// negative); `C0 = max{m², (m²√m/(2δ2√m + 2√2 C_E))^{2/3}}`.
pub fn threshold_constants(m: f64, c_e: f64) -> Result<ThresholdConstants> {
    if !(c_e >= 1.0) || !c_e.is_finite() {
        return Err(Error::Config(format!("C_E must be at least 1, got {c_e}")));
    }
    if !(m >= 0.0) || !m.is_finite() {
        return Err(Error::Config(format!("m must be finite and nonnegative, got {m}")));
    }
    let delta2 = if m > 0.0 {
        ((m - 8.0 * c_e) / (4.0 * (2.0 * m).sqrt())).max(0.0)
    } else {
        0.0
    };
    let sm = m.sqrt();
    let second = (m * m * sm / (2.0 * delta2 * sm + 2.0 * 2f64.sqrt() * c_e)).powf(2.0 / 3.0);
    Ok(ThresholdConstants {
        m,
        c_e,
        delta1: m * m / 2.0,
        delta2,
        c0: (m * m).max(second),
        feasible: delta2 > 0.0,
    })
}
