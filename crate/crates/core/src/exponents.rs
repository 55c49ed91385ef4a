//! Exponent arithmetic behind the L^m bootstrap: admissible ranges, the
//! interpolation exponents θ and the m_k schedule.

use serde::Serialize;

use crate::error::{Error, Result};

pub const IDENTITY_TOL: f64 = 1e-12;

/// p′ = p/(p − 1).
pub fn p_prime(p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::Domain(format!("conjugate exponent needs p > 1, got {p}")));
    }
    Ok(p / (p - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MRange {
    /// Exclusive lower bound.
    pub lower: f64,
    /// Inclusive upper bound.
    pub upper: f64,
    pub nonempty: bool,
    /// upper − lower minus the closed-form gap.
    pub gap_residual: f64,
}

impl MRange {
    pub fn contains(&self, m: f64) -> bool {
        m > self.lower && m <= self.upper * (1.0 + IDENTITY_TOL)
    }
}

/// Closed form of upper − lower.
pub fn range_gap(m0: f64, p: f64) -> f64 {
    (3.0 * p - 4.0) * (m0 * (4.0 * p - 7.0) + 12.0 * (p - 2.0)) / (12.0 * (p - 1.0))
}

/// Range of m reachable from a bound on ∫n^{m0}:
/// m0(3p−4)/(4(p−1)) + (p−2)/(p−1) < m ≤ m0(p − 4/3) + 3(p − 2).
pub fn admissible_m_range(m0: f64, p: f64) -> Result<MRange> {
    if !(p > 4.0 / 3.0) || !p.is_finite() {
        return Err(Error::Domain(format!("admissible range needs p > 4/3, got {p}")));
    }
    if !(m0 >= 1.0) || !m0.is_finite() {
        return Err(Error::Domain(format!("m0 must be at least 1, got {m0}")));
    }
    let lower = m0 * (3.0 * p - 4.0) / (4.0 * (p - 1.0)) + (p - 2.0) / (p - 1.0);
    let upper = m0 * (p - 4.0 / 3.0) + 3.0 * (p - 2.0);
    let gap_residual = (upper - lower) - range_gap(m0, p);
    Ok(MRange { lower, upper, nonempty: upper > lower, gap_residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExponentFlags {
    pub range_ok: bool,
    pub theta_in_unit_interval: bool,
    pub young_ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentTable {
    pub p: f64,
    pub p_prime: f64,
    pub m0: f64,
    pub m: f64,
    pub m_star: f64,
    pub beta: f64,
    pub alpha: f64,
    pub alpha_prime: f64,
    pub theta51: f64,
    /// Residual of m_*/(βα) = θ(1/p − 1/3) + (1 − θ)m_*/m0.
    pub theta_residual: f64,
    /// θ − 1 from its factored form; must share the sign of theta51 − 1.
    pub theta_minus_one_factored: f64,
    /// βθα/m_* − p evaluated directly.
    pub young_excess: f64,
    /// The same quantity from its factored form.
    pub young_excess_factored: f64,
    pub valid: ExponentFlags,
}

/// Exponent table for one step m0 → m, requiring m in the admissible range.
pub fn bootstrap_exponents(m0: f64, m: f64, p: f64) -> Result<ExponentTable> {
    let range = admissible_m_range(m0, p)?;
    if !range.contains(m) {
        return Err(Error::RangeViolation { m, lower: range.lower, upper: range.upper });
    }
    bootstrap_exponents_unchecked(m0, m, p)
}

/// Same as [`bootstrap_exponents`] but evaluates the formulas for any m,
/// reporting `range_ok = false` instead of failing.
pub fn bootstrap_exponents_unchecked(m0: f64, m: f64, p: f64) -> Result<ExponentTable> {
    let range = admissible_m_range(m0, p)?;
    let p_prime = p_prime(p)?;
    let m_star = (m - 2.0) / p + 1.0;
    let beta = m + 1.0 / (p - 1.0) - 1.0;
    let alpha = 4.0 * (p - 1.0) / (3.0 * p - 4.0);
    let alpha_prime = 4.0 * (p - 1.0) / p;

    let d1 = m * (p - 1.0) - p + 2.0;
    let d2 = 3.0 * m + (m0 + 3.0) * p - 3.0 * (m0 + 2.0);
    let theta51 = 3.0 * (m + p - 2.0) * (4.0 * m * (p - 1.0) + m0 * (4.0 - 3.0 * p) - 4.0 * p + 8.0)
        / (4.0 * d1 * d2);
    let theta_minus_one_factored =
        -m0 * p * (5.0 * (p - 2.0) + (4.0 * p - 7.0) * m) / (4.0 * d1 * d2);
    let theta_residual = m_star / (beta * alpha)
        - (theta51 * (1.0 / p - 1.0 / 3.0) + (1.0 - theta51) * m_star / m0);

    let young_excess = beta * theta51 * alpha / m_star - p;
    let young_excess_factored = p * p * (3.0 * m - m0 * (3.0 * p - 4.0) - 9.0 * (p - 2.0))
        / ((3.0 * p - 4.0) * (3.0 * m - m0 + (m0 + 3.0) * (p - 2.0)));

    Ok(ExponentTable {
        p,
        p_prime,
        m0,
        m,
        m_star,
        beta,
        alpha,
        alpha_prime,
        theta51,
        theta_residual,
        theta_minus_one_factored,
        young_excess,
        young_excess_factored,
        valid: ExponentFlags {
            range_ok: range.contains(m),
            theta_in_unit_interval: theta51 > 0.0 && theta51 < 1.0,
            young_ok: young_excess <= IDENTITY_TOL * p,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradientInterpolation {
    pub theta: f64,
    /// 5(p−1)/(6p) − [θ(1/p − 1/3) + (1 − θ)(p − 1)/p].
    pub identity_residual: f64,
    pub theta_in_unit_interval: bool,
    /// 2pθ/(p − 1) < p.
    pub young_ok: bool,
}

pub fn gradient_interpolation(p: f64) -> Result<GradientInterpolation> {
    if !(p > 1.5) || !p.is_finite() {
        return Err(Error::Domain(format!("interpolation exponent needs p > 3/2, got {p}")));
    }
    let theta = (p - 1.0) / (4.0 * (2.0 * p - 3.0));
    let identity_residual =
        5.0 * (p - 1.0) / (6.0 * p) - (theta * (1.0 / p - 1.0 / 3.0) + (1.0 - theta) * (p - 1.0) / p);
    Ok(GradientInterpolation {
        theta,
        identity_residual,
        theta_in_unit_interval: theta > 0.0 && theta < 1.0,
        young_ok: 2.0 * p * theta / (p - 1.0) < p,
    })
}

/// θ = (p − 1)/(4(2p − 3)).
pub fn gradient_theta(p: f64) -> Result<f64> {
    Ok(gradient_interpolation(p)?.theta)
}

/// Upper end (exclusive) of the integrability range for r, infinite for p ≥ 3.
pub fn max_integrability(p: f64) -> f64 {
    if p >= 3.0 {
        f64::INFINITY
    } else {
        3.0 * p / (3.0 - p)
    }
}

/// θ = 3p(r − 1)/((4p − 3)r), valid for 1 ≤ r < 3p/(3 − p) (any r ≥ 1 once p ≥ 3).
pub fn integrability_theta(r: f64, p: f64) -> Result<f64> {
    if !(p > crate::model::CRITICAL_P) || !p.is_finite() {
        return Err(Error::Domain(format!("integrability exponents need p > 32/15, got {p}")));
    }
    if !(r >= 1.0 && r < max_integrability(p)) {
        return Err(Error::IntegrabilityRange { r, p });
    }
    Ok(3.0 * p * (r - 1.0) / ((4.0 * p - 3.0) * r))
}

/// 1/r − [θ(1/p − 1/3) + (1 − θ)].
pub fn integrability_residual(r: f64, p: f64, theta: f64) -> f64 {
    1.0 / r - (theta * (1.0 / p - 1.0 / 3.0) + (1.0 - theta))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapSchedule {
    pub delta: f64,
    pub p: f64,
    /// m_0 = 1, …, m_K with K = ⌈δ₁⌉.
    pub m_values: Vec<f64>,
    /// Real-valued step count at which m_k reaches 2.
    pub delta1: f64,
    /// First k with m_k ≥ 2.
    pub first_k_reaching_two: usize,
}

impl BootstrapSchedule {
    fn rate(&self) -> f64 {
        self.delta + 0.8
    }

    /// Fixed point of the recursion, −(15δ + 2)/(5δ − 1).
    pub fn limit(&self) -> f64 {
        -(15.0 * self.delta + 2.0) / (5.0 * self.delta - 1.0)
    }

    /// m_k = (δ + 4/5)^k (1 − L) + L with L the fixed point.
    pub fn closed_form(&self, k: usize) -> f64 {
        let l = self.limit();
        self.rate().powi(k as i32) * (1.0 - l) + l
    }

    /// m_{k+1} from m_k.
    pub fn next(&self, m: f64) -> f64 {
        m * self.rate() + 3.0 * (self.delta + 2.0 / 15.0)
    }
}

pub fn bootstrap_schedule(delta: f64) -> Result<BootstrapSchedule> {
    if !(delta > 0.0 && delta < 0.1) {
        return Err(Error::Domain(format!("delta must lie in (0, 1/10), got {delta}")));
    }
    let delta1 = (25.0 * delta / (20.0 * delta + 1.0)).ln() / (delta + 0.8).ln();
    let mut sched = BootstrapSchedule {
        delta,
        p: crate::model::CRITICAL_P + delta,
        m_values: vec![1.0],
        delta1,
        first_k_reaching_two: 0,
    };
    let last = delta1.ceil() as usize;
    for _ in 0..last {
        let m = *sched.m_values.last().unwrap();
        sched.m_values.push(sched.next(m));
    }
    sched.first_k_reaching_two =
        sched.m_values.iter().position(|&m| m >= 2.0).unwrap_or(sched.m_values.len());
    Ok(sched)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjugate_exponents() {
        assert_eq!(p_prime(2.0).unwrap(), 2.0);
        assert!(p_prime(1.0).is_err());
        for p in [1.5, 2.2, 3.0, 7.0] {
            assert!((1.0 / p + 1.0 / p_prime(p).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn admissible_range_examples() {
        let r = admissible_m_range(1.0, 3.0).unwrap();
        // 5/8 + 1/2; the gap 14/3 − 9/8 = 85/24 matches the closed form
        assert!((r.lower - 1.125).abs() < 1e-15);
        assert!((r.upper - r.lower - 85.0 / 24.0).abs() < 1e-14);
        assert!((r.upper - 14.0 / 3.0).abs() < 1e-14);
        assert!(r.nonempty);
        assert!(r.gap_residual.abs() < 1e-12);

        let r = admissible_m_range(2.0, 2.0).unwrap();
        assert!((r.lower - 1.0).abs() < 1e-15);
        assert!((r.upper - 4.0 / 3.0).abs() < 1e-15);

        // at the threshold p = 25/12 the upper bound sits exactly at 1
        let r = admissible_m_range(1.0, 25.0 / 12.0).unwrap();
        assert!((r.upper - 1.0).abs() < 1e-12);
        assert!(admissible_m_range(1.0, 4.0 / 3.0).is_err());
    }

    #[test]
    fn exponent_table_at_upper_bound() {
        let r = admissible_m_range(1.0, 2.5).unwrap();
        let t = bootstrap_exponents(1.0, r.upper, 2.5).unwrap();
        assert!(t.valid.range_ok && t.valid.theta_in_unit_interval && t.valid.young_ok);
        assert!(t.young_excess_factored.abs() < 1e-12);
        assert!(t.young_excess.abs() < 1e-12);
        assert!((1.0 / t.alpha + 1.0 / t.alpha_prime - 1.0).abs() < 1e-12);
        assert!((t.m_star * t.p - (t.m - 2.0 + t.p)).abs() < 1e-12);
        assert!(t.theta_residual.abs() < 1e-12);
    }

    #[test]
    fn out_of_range_m_is_reported_with_bounds() {
        match bootstrap_exponents(1.0, 2.0, 32.0 / 15.0 + 0.01) {
            Err(Error::RangeViolation { m, lower, upper }) => {
                assert_eq!(m, 2.0);
                assert!((upper - 1.24).abs() < 1e-12);
                assert!(lower < upper);
            }
            other => panic!("expected range violation, got {other:?}"),
        }
    }

    #[test]
    fn gradient_interpolation_at_two() {
        let l = gradient_interpolation(2.0).unwrap();
        assert_eq!(l.theta, 0.25);
        assert!(l.identity_residual.abs() < 1e-15);
        assert!(l.young_ok && l.theta_in_unit_interval);
        assert!(gradient_theta(1.5).is_err());
    }

    #[test]
    fn integrability_examples() {
        assert_eq!(integrability_theta(1.0, 2.5).unwrap(), 0.0);
        let th = integrability_theta(6.0, 2.2).unwrap();
        assert!((th - 33.0 / 34.8).abs() < 1e-15);
        assert!(integrability_residual(6.0, 2.2, th).abs() < 1e-12);
        assert!(matches!(integrability_theta(15.0, 2.5), Err(Error::IntegrabilityRange { .. })));
        assert!(integrability_theta(0.5, 2.5).is_err());
        assert!(integrability_theta(1e6, 3.5).unwrap() < 1.0);
        assert!(integrability_theta(2.0, 2.1).is_err());
    }

    #[test]
    fn bootstrap_at_one_hundredth() {
        let s = bootstrap_schedule(0.01).unwrap();
        assert_eq!(s.m_values[0], 1.0);
        assert!((s.m_values[1] - 1.24).abs() < 1e-14);
        let expected = (24.0f64 / 5.0).ln() / (100.0f64 / 81.0).ln();
        assert!((s.delta1 - expected).abs() < 1e-12);
        assert_eq!(s.m_values.len(), 9);
        assert_eq!(s.first_k_reaching_two, 8);
        assert!(s.m_values[7] < 2.0 && s.m_values[8] >= 2.0);
        assert!((s.limit() - 2.15 / 0.95).abs() < 1e-12);
        assert!(bootstrap_schedule(0.1).is_err());
        assert!(bootstrap_schedule(0.0).is_err());
    }

    #[test]
    fn bootstrap_step_is_the_upper_bound() {
        let s = bootstrap_schedule(0.03).unwrap();
        for w in s.m_values.windows(2) {
            let r = admissible_m_range(w[0], s.p).unwrap();
            assert!((r.upper - w[1]).abs() < 1e-12);
        }
    }
}
