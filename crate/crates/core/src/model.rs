//! Model parameters, the sensitivity pair (χ, f), the saturating regularizer
//! F_ε and the energy weight Ψ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Chemotactic sensitivity χ and consumption rate f.
///
/// Only a closed set of pairs is supported so the validator and Ψ stay exact.
/// `Polynomial` holds coefficient tables (constant term first).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SensitivityPair {
    /// χ ≡ 1, f(s) = s.
    #[default]
    Linear,
    Polynomial { chi: Vec<f64>, f: Vec<f64> },
}

fn horner(coeffs: &[f64], s: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c)
}

fn horner_prime(coeffs: &[f64], s: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (k, &c)| acc * s + k as f64 * c)
}

impl SensitivityPair {
    #[inline]
    pub fn chi(&self, s: f64) -> f64 {
        match self {
            SensitivityPair::Linear => 1.0,
            SensitivityPair::Polynomial { chi, .. } => horner(chi, s),
        }
    }

    #[inline]
    pub fn f(&self, s: f64) -> f64 {
        match self {
            SensitivityPair::Linear => s,
            SensitivityPair::Polynomial { f, .. } => horner(f, s),
        }
    }

    #[inline]
    pub fn f_prime(&self, s: f64) -> f64 {
        match self {
            SensitivityPair::Linear => 1.0,
            SensitivityPair::Polynomial { f, .. } => horner_prime(f, s),
        }
    }

    /// g = f/χ.
    #[inline]
    pub fn g(&self, s: f64) -> f64 {
        match self {
            SensitivityPair::Linear => s,
            _ => self.f(s) / self.chi(s),
        }
    }

    /// Largest f′ over `samples` evenly spaced points of [0, s_max].
    pub fn max_f_prime(&self, s_max: f64, samples: usize) -> f64 {
        let samples = samples.max(2);
        (0..samples)
            .map(|i| self.f_prime(s_max * i as f64 / (samples - 1) as f64))
            .fold(0.0, f64::max)
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, SensitivityPair::Linear)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    ChiPositive,
    FNonnegative,
    FVanishesAtZero,
    GIncreasing,
    GConcave,
    ChiFNondecreasing,
}

impl Condition {
    pub const ALL: [Condition; 6] = [
        Condition::ChiPositive,
        Condition::FNonnegative,
        Condition::FVanishesAtZero,
        Condition::GIncreasing,
        Condition::GConcave,
        Condition::ChiFNondecreasing,
    ];

    pub fn describe(self) -> &'static str {
        match self {
            Condition::ChiPositive => "chi > 0",
            Condition::FNonnegative => "f >= 0",
            Condition::FVanishesAtZero => "f(0) = 0",
            Condition::GIncreasing => "(f/chi)' > 0",
            Condition::GConcave => "(f/chi)'' <= 0",
            Condition::ChiFNondecreasing => "(chi*f)' >= 0",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub condition: Condition,
    pub passed: bool,
    /// Sample point with the least favourable value.
    pub worst_s: f64,
    /// Value of the checked quantity there (derivatives as finite differences).
    pub worst_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub s_max: f64,
    pub results: Vec<ConditionResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn get(&self, c: Condition) -> &ConditionResult {
        self.results.iter().find(|r| r.condition == c).expect("all conditions are reported")
    }

    pub fn failures(&self) -> Vec<Condition> {
        self.results.iter().filter(|r| !r.passed).map(|r| r.condition).collect()
    }
}

pub const STRUCTURAL_TOL: f64 = 1e-10;

/// Checks the structural conditions on (χ, f) over [0, s_max] with centered
/// finite differences.
///
/// Differences are compared against `STRUCTURAL_TOL` relative to the
/// magnitudes entering them, so round-off in the stencil never decides a
/// verdict at any scale of `s_max`.
pub fn validate_structural_conditions(
    pair: &SensitivityPair,
    s_max: f64,
    samples: usize,
) -> Result<ValidationReport> {
    if !(s_max > 0.0 && s_max.is_finite()) {
        return Err(Error::Domain(format!("s_max must be positive, got {s_max}")));
    }
    if samples < 3 {
        return Err(Error::Domain(format!("need at least 3 samples, got {samples}")));
    }
    let tol = STRUCTURAL_TOL;
    let h = 1e-3 * s_max;
    let points: Vec<f64> = (0..samples).map(|i| s_max * i as f64 / (samples - 1) as f64).collect();

    let eval = |s: f64| -> Result<(f64, f64)> {
        let (chi, f) = (pair.chi(s), pair.f(s));
        if !chi.is_finite() || !f.is_finite() {
            return Err(Error::InvalidSensitivity(format!("non-finite value at s = {s}")));
        }
        Ok((chi, f))
    };

    let mut f_scale: f64 = 0.0;
    for &s in &points {
        f_scale = f_scale.max(eval(s)?.1.abs());
    }
    let f_scale = f_scale.max(f64::MIN_POSITIVE);

    // (passed, worst_s, worst_value) tracked as the minimum of a margin
    struct Track {
        passed: bool,
        worst_s: f64,
        worst_margin: f64,
        worst_value: f64,
    }
    impl Track {
        fn new() -> Self {
            Track { passed: true, worst_s: 0.0, worst_margin: f64::INFINITY, worst_value: f64::NAN }
        }
        fn push(&mut self, s: f64, margin: f64, ok: bool, value: f64) {
            self.passed &= ok;
            if margin < self.worst_margin {
                self.worst_margin = margin;
                self.worst_s = s;
                self.worst_value = value;
            }
        }
    }
    let mut tracks: Vec<Track> = (0..6).map(|_| Track::new()).collect();

    for &s in &points {
        let (chi, f) = eval(s)?;
        let (chi_p, f_p) = eval(s + h)?;
        let (chi_m, f_m) = eval(s - h)?;
        let (g, g_p, g_m) = (f / chi, f_p / chi_p, f_m / chi_m);

        tracks[0].push(s, chi, chi > 0.0, chi);
        tracks[1].push(s, f / f_scale, f >= -tol * f_scale, f);

        let d1 = g_p - g_m;
        let scale1 = g_p.abs() + g_m.abs();
        tracks[3].push(s, d1 / scale1.max(f64::MIN_POSITIVE), d1 > tol * scale1, d1 / (2.0 * h));

        let d2 = g_p - 2.0 * g + g_m;
        let scale2 = g_p.abs() + 2.0 * g.abs() + g_m.abs();
        tracks[4].push(s, -d2 / scale2.max(f64::MIN_POSITIVE), d2 <= tol * scale2, d2 / (h * h));

        let (cf_p, cf_m) = (chi_p * f_p, chi_m * f_m);
        let d3 = cf_p - cf_m;
        let scale3 = cf_p.abs() + cf_m.abs();
        tracks[5].push(s, d3 / scale3.max(f64::MIN_POSITIVE), d3 >= -tol * scale3, d3 / (2.0 * h));
    }
    let f0 = eval(0.0)?.1;
    tracks[2].push(0.0, -f0.abs(), f0.abs() <= tol * f_scale.max(1.0), f0);

    let results = Condition::ALL
        .iter()
        .zip(tracks)
        .map(|(&condition, t)| ConditionResult {
            condition,
            passed: t.passed,
            worst_s: t.worst_s,
            worst_value: t.worst_value,
        })
        .collect();
    Ok(ValidationReport { s_max, results })
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("epsilon must be positive, got {eps}")))
    }
}

/// ln(1+x)/x, evaluated so that it is nonincreasing in x under rounding.
#[inline]
fn log1p_ratio(x: f64) -> f64 {
    if x < 1e-8 {
        1.0 - 0.5 * x
    } else {
        x.ln_1p() / x
    }
}

/// F_ε(s) = ln(1 + εs)/ε without the domain checks, for hot loops.
#[inline]
pub fn f_eps_unchecked(s: f64, eps: f64) -> f64 {
    s * log1p_ratio(eps * s)
}

/// F_ε′(s) = 1/(1 + εs) without the domain checks.
#[inline]
pub fn f_eps_prime_unchecked(s: f64, eps: f64) -> f64 {
    1.0 / (1.0 + eps * s)
}

/// Saturating substitute for the identity: F_ε(s) = ln(1 + εs)/ε.
pub fn f_eps(s: f64, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    if !(s >= 0.0) {
        return Err(Error::Domain(format!("F_eps needs s >= 0, got {s}")));
    }
    Ok(f_eps_unchecked(s, eps))
}

pub fn f_eps_prime(s: f64, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    if !(s >= 0.0) {
        return Err(Error::Domain(format!("F_eps' needs s >= 0, got {s}")));
    }
    Ok(f_eps_prime_unchecked(s, eps))
}

/// Ψ(s) = ∫₁ˢ dσ/√g(σ). Closed form 2(√s − 1) for the linear pair,
/// quadrature otherwise.
pub fn psi(s: f64, pair: &SensitivityPair) -> Result<f64> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("psi needs s >= 0, got {s}")));
    }
    match pair {
        SensitivityPair::Linear => Ok(2.0 * (s.sqrt() - 1.0)),
        _ => psi_quadrature(s, pair),
    }
}

/// Ψ′(s) = 1/√g(s).
#[inline]
pub fn psi_prime(s: f64, pair: &SensitivityPair) -> f64 {
    1.0 / pair.g(s).sqrt()
}

/// Ψ by adaptive Simpson quadrature after the substitution σ = τ², which
/// removes the 1/√σ endpoint singularity when g vanishes linearly at zero.
pub fn psi_quadrature(s: f64, pair: &SensitivityPair) -> Result<f64> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("psi needs s >= 0, got {s}")));
    }
    let (a, b) = (1.0, s.sqrt());
    if a == b {
        return Ok(0.0);
    }
    let integrand = |tau: f64| -> Result<f64> {
        let sigma = tau * tau;
        let g = pair.g(sigma);
        if !(g > 0.0) {
            return Err(Error::StructuralCondition(format!("g({sigma}) = {g} is not positive")));
        }
        Ok(2.0 * tau / g.sqrt())
    };
    adaptive_simpson(&integrand, a, b, 1e-13)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> Result<f64>, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn recurse(
        f: &dyn Fn(f64) -> Result<f64>,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm)?, f(rm)?);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        Ok(recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
    }
    let (fa, fb, fm) = (f(a)?, f(b)?, f(0.5 * (a + b))?);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Regime of the diffusion exponent relative to the global existence threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// p > 32/15: covered by the global weak existence result.
    AboveThreshold,
    /// 2 <= p <= 32/15: slow diffusion below that threshold.
    SlowBelowThreshold,
    /// 1 < p < 2: fast diffusion, not supported by the solver.
    FastDiffusion,
}

pub const CRITICAL_P: f64 = 32.0 / 15.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub p: f64,
    pub kappa: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub sensitivity: SensitivityPair,
    /// Constant ∇Φ of the affine potential (one entry per active axis).
    pub phi_gradient: Vec<f64>,
    /// max c₀; set from the initial oxygen field.
    #[serde(default = "one")]
    pub s0: f64,
}

fn one() -> f64 {
    1.0
}

impl ModelParams {
    pub fn new(p: f64, kappa: f64, epsilon: f64, phi_gradient: Vec<f64>) -> Self {
        ModelParams { p, kappa, epsilon, sensitivity: SensitivityPair::Linear, phi_gradient, s0: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::Config(format!("p must exceed 1, got {}", self.p)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Config(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        if !self.kappa.is_finite() || self.phi_gradient.iter().any(|g| !g.is_finite()) {
            return Err(Error::Config("kappa and phi_gradient must be finite".into()));
        }
        if !(self.s0 >= 0.0) {
            return Err(Error::Config(format!("s0 must be nonnegative, got {}", self.s0)));
        }
        Ok(())
    }

    pub fn regime(&self) -> Regime {
        if self.p < 2.0 {
            Regime::FastDiffusion
        } else if self.p > CRITICAL_P {
            Regime::AboveThreshold
        } else {
            Regime::SlowBelowThreshold
        }
    }

    /// ∇Φ component along `axis` (zero beyond the supplied entries).
    #[inline]
    pub fn grad_phi(&self, axis: usize) -> f64 {
        self.phi_gradient.get(axis).copied().unwrap_or(0.0)
    }
}
