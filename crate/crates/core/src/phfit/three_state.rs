use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{FitError, FitErrorKind};
use crate::dist::{Lifetime, MomentTriple, PhaseType};
use crate::error::{invalid, Result};

/// Burn-in model: a fresh disk fails at `alpha` or leaves burn-in at
/// `sigma`; once burnt in it fails at `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeStateParams {
    pub alpha: f64,
    pub sigma: f64,
    pub beta: f64,
}

/// Closed-form rates before feasibility checks. `sigma` and `beta` go
/// complex when the discriminant is negative; `alpha` is always real.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawThreeState {
    pub alpha: Complex64,
    pub sigma: Complex64,
    pub beta: Complex64,
}

impl ThreeStateParams {
    pub fn new(alpha: f64, sigma: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("sigma", sigma), ("beta", beta)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("must be > 0, got {v}")));
            }
        }
        Ok(Self { alpha, sigma, beta })
    }

    /// Total outflow of the burn-in phase.
    fn burn_in_rate(&self) -> f64 {
        self.alpha + self.sigma
    }

    /// `(e^{-beta t} - e^{-(alpha+sigma) t}) / (alpha + sigma - beta)`,
    /// continuous through the confluent case where it becomes `t e^{-beta t}`.
    fn bridge(&self, t: f64) -> f64 {
        let d = self.burn_in_rate() - self.beta;
        let x = d * t;
        let core = if x == 0.0 { t } else { -(-x).exp_m1() / d };
        (-self.beta * t).exp() * core
    }

    /// Rates of the two exponential terms of the density.
    pub fn exponents(&self) -> (f64, f64) {
        (self.beta, self.burn_in_rate())
    }

    /// Limit of the hazard rate as `t -> inf`.
    pub fn hazard_limit(&self) -> f64 {
        self.beta.min(self.burn_in_rate())
    }

    /// Slope of the hazard rate:
    /// `sigma (beta - alpha) e^{-(sigma+alpha+beta) t} / S(t)^2`.
    pub fn hazard_slope(&self, t: f64) -> f64 {
        let s = self.survival(t);
        let num = self.sigma
            * (self.beta - self.alpha)
            * (-(self.burn_in_rate() + self.beta) * t).exp();
        num / (s * s)
    }

    pub fn to_phase_type(&self) -> PhaseType {
        PhaseType::coxian(&self.coxian()).expect("positive rates")
    }

    /// `(exit, advance)` per phase.
    pub fn coxian(&self) -> Vec<(f64, f64)> {
        vec![(self.alpha, self.sigma), (self.beta, 0.0)]
    }

    /// First raw moment in closed form.
    pub fn mean_closed_form(&self) -> f64 {
        let (a, s, b) = (self.alpha, self.sigma, self.beta);
        (s / b + (a - b) / (a + s)) / (a - b + s)
    }

    /// Multiply every rate by `factor`, dividing all times by it.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            alpha: self.alpha * factor,
            sigma: self.sigma * factor,
            beta: self.beta * factor,
        }
    }
}

impl Lifetime for ThreeStateParams {
    /// `[beta sigma e^{-beta t} + (alpha-beta)(sigma+alpha) e^{-(sigma+alpha) t}] / (sigma+alpha-beta)`,
    /// evaluated as `alpha e^{-(alpha+sigma)t} + sigma beta * bridge(t)`.
    fn pdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        self.alpha * (-self.burn_in_rate() * t).exp() + self.sigma * self.beta * self.bridge(t)
    }

    fn cdf(&self, t: f64) -> f64 {
        1.0 - self.survival(t)
    }

    fn survival(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        (-self.burn_in_rate() * t).exp() + self.sigma * self.bridge(t)
    }

    fn moment(&self, k: u32) -> Result<f64> {
        self.to_phase_type().moment(k)
    }

    fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.to_phase_type().sample(rng)
    }
}

/// Match three moments with the burn-in model.
///
/// The density's Laplace transform is `(1 + q z) / (1 + p1 z + p2 z^2)` with
/// `p2 = 1 / (beta (alpha+sigma))`, `p1 = (beta + alpha + sigma) p2` and
/// `q = alpha p2`. Expanding against the reduced moments `n_k = mu_k / k!`
/// gives `p1 = (n3 - n1 n2) / (n2 - n1^2)`, `p2 = p1 n1 - n2`, `q = p1 - n1`;
/// `beta` and `alpha + sigma` are the two roots of `x^2 - (p1/p2) x + 1/p2`.
///
/// Returns both root assignments: first with `alpha + sigma` taking the
/// larger root, then swapped. Both describe the same density.
pub fn fit_three_state(m: &MomentTriple) -> Result<(ThreeStateParams, ThreeStateParams), FitError> {
    let raw = closed_form(m);
    let branches = [raw.0, raw.1];
    let parts = |b: &RawThreeState| [b.alpha, b.sigma, b.beta];
    let kind = if branches
        .iter()
        .flat_map(parts)
        .any(|c| !(c.re.is_finite() && c.im.is_finite()))
    {
        Some(FitErrorKind::Degenerate)
    } else if raw.0.sigma.im != 0.0 || raw.0.beta.im != 0.0 {
        Some(FitErrorKind::ComplexDiscriminant)
    } else if branches.iter().flat_map(parts).any(|c| c.re <= 0.0) {
        Some(FitErrorKind::NegativeRate)
    } else {
        None
    };
    if let Some(kind) = kind {
        return Err(FitError {
            kind,
            raw: Some(raw.0),
            moments: *m,
        });
    }
    let mk = |b: &RawThreeState| ThreeStateParams {
        alpha: b.alpha.re,
        sigma: b.sigma.re,
        beta: b.beta.re,
    };
    Ok((mk(&raw.0), mk(&raw.1)))
}

/// Both closed-form branches, unchecked. Computed in units of `mu1`
/// and rescaled, so the arithmetic is independent of the time unit.
pub fn closed_form(m: &MomentTriple) -> (RawThreeState, RawThreeState) {
    let n1 = 1.0;
    let n2 = m.mu2 / (m.mu1 * m.mu1) / 2.0;
    let n3 = m.mu3 / (m.mu1 * m.mu1 * m.mu1) / 6.0;
    let p1 = (n3 - n1 * n2) / (n2 - n1 * n1);
    let p2 = p1 * n1 - n2;
    let q = p1 - n1;
    let sum = p1 / p2;
    let prod = 1.0 / p2;
    let disc = Complex64::new(sum * sum - 4.0 * prod, 0.0).sqrt();
    let alpha = Complex64::new(q / p2, 0.0);
    let hi = (Complex64::new(sum, 0.0) + disc) / 2.0;
    let lo = (Complex64::new(sum, 0.0) - disc) / 2.0;
    let unit = 1.0 / m.mu1;
    let branch = |burn_in: Complex64, beta: Complex64| RawThreeState {
        alpha: alpha * unit,
        sigma: (burn_in - alpha) * unit,
        beta: beta * unit,
    };
    (branch(hi, lo), branch(lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Weibull;

    fn published_ttop() -> ThreeStateParams {
        ThreeStateParams::new(1.72e-6, 2.49e-6, 2.88e-6).unwrap()
    }

    #[test]
    fn pdf_at_zero_is_alpha() {
        let p = published_ttop();
        assert!((p.pdf(0.0) - p.alpha).abs() < 1e-18);
        // Quoted two-exponential form at t = 0.
        let (a, s, b) = (p.alpha, p.sigma, p.beta);
        let quoted = (b * s + (a - b) * (s + a)) / (s + a - b);
        assert!((quoted - a).abs() < 1e-18);
    }

    #[test]
    fn pdf_matches_quoted_mixture_and_matrix_exponential() {
        let p = published_ttop();
        let (a, s, b) = (p.alpha, p.sigma, p.beta);
        let ph = p.to_phase_type();
        for t in [0.0, 1e3, 1e5, 4.4e5, 2e6] {
            let quoted = (b * s * (-b * t).exp() + (a - b) * (s + a) * (-(s + a) * t).exp())
                / (s + a - b);
            assert!((p.pdf(t) - quoted).abs() < 1e-10 * quoted.abs().max(1e-12));
            assert!((p.pdf(t) - ph.pdf(t)).abs() <= 1e-10 * ph.pdf(t));
        }
    }

    #[test]
    fn confluent_case_is_continuous() {
        // sigma + alpha == beta exactly.
        let p = ThreeStateParams::new(0.25, 0.75, 1.0).unwrap();
        let near = ThreeStateParams::new(0.25, 0.75, 1.0 + 1e-9).unwrap();
        for t in [0.0f64, 0.5, 2.0, 7.0] {
            let limit = 0.25 * (-t).exp() + 0.75 * t * (-t).exp();
            assert!((p.pdf(t) - limit).abs() < 1e-15);
            assert!((p.pdf(t) - near.pdf(t)).abs() < 1e-8);
        }
    }

    #[test]
    fn closed_form_mean_agrees() {
        let p = published_ttop();
        let ph_mean = p.moment(1).unwrap();
        assert!(((p.mean_closed_form() - ph_mean) / ph_mean).abs() < 1e-12);
    }

    #[test]
    fn ttop_fit_reproduces_published_rates() {
        let m = Weibull::new(1.12, 461_386.0, 0.0).unwrap().moments().unwrap();
        let (first, second) = fit_three_state(&m).unwrap();
        let rel = |x: f64, y: f64| ((x - y) / y).abs();
        assert!(rel(first.alpha, 1.72e-6) < 0.015);
        assert!(rel(first.sigma, 2.49e-6) < 0.015);
        assert!(rel(first.beta, 2.88e-6) < 0.015);
        assert!(rel(second.alpha, 1.72e-6) < 0.015);
        assert!(rel(second.sigma, 1.16e-6) < 0.015);
        assert!(rel(second.beta, 4.21e-6) < 0.015);
    }

    #[test]
    fn repair_times_are_infeasible() {
        let ttr = Weibull::new(2.0, 12.0, 6.0).unwrap().moments().unwrap();
        let err = fit_three_state(&ttr).unwrap_err();
        assert_eq!(err.kind, FitErrorKind::ComplexDiscriminant);
        let raw = err.raw.unwrap();
        assert!(raw.alpha.re < 0.0);
        assert!(raw.sigma.im != 0.0 && raw.beta.im != 0.0);
        let scr = Weibull::new(3.0, 168.0, 6.0).unwrap().moments().unwrap();
        assert_eq!(
            fit_three_state(&scr).unwrap_err().kind,
            FitErrorKind::ComplexDiscriminant
        );
    }

    #[test]
    fn exponential_moments_are_degenerate() {
        let m = MomentTriple::new(1.0, 2.0, 6.0).unwrap();
        let err = fit_three_state(&m).unwrap_err();
        assert_eq!(err.kind, FitErrorKind::Degenerate);
    }

    #[test]
    fn hazard_slope_zero_when_rates_equal() {
        let p = ThreeStateParams::new(2e-6, 1e-6, 2e-6).unwrap();
        for t in [0.0, 1e4, 1e6] {
            assert_eq!(p.hazard_slope(t), 0.0);
        }
    }
}
