//! Bath correlation kernels `α(t − s)` and the memory coefficients
//!
//! ```text
//! g0(t) = ∫₀ᵗ α(t−s) ds
//! g1(t) = ∫₀ᵗ α(t−s)(t−s) ds
//! g2(t) = ∫₀ᵗ ∫₀ˢ α(t−s) α(s−u) (t−s) du ds
//! ```
//!
//! Both decaying kernels are single complex exponentials `c·e^{−λu}`, so their
//! coefficients have closed forms. The quadrature path works for any kernel and
//! doubles as the oracle for the closed forms.

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::quadrature::adaptive_simpson;

/// Stationary bath correlation function of the delay `u = t − s ≥ 0`.
#[derive(Clone, Debug, PartialEq)]
pub enum CorrelationKernel {
    /// Zero-temperature exponential kernel `α(u) = e^{−u/τ} / (2τ)`.
    ExponentialZeroT { tau: f64 },
    /// High-temperature Ohmic kernel `α(u) = 2kT·Δ(u) + i·Δ̇(u)` with the
    /// exponential cutoff `Δ(u) = (Λ/2)e^{−Λ|u|}`; the memory time is `1/Λ`.
    OhmicHighTemp { kt: f64, cutoff: f64 },
    /// Discrete oscillator modes, `α(u) = Σ g² e^{−iωu}` over `(g, ω)` pairs.
    DiscreteModes { modes: Vec<(f64, f64)> },
}

impl CorrelationKernel {
    pub fn exponential(tau: f64) -> Result<Self> {
        let k = CorrelationKernel::ExponentialZeroT { tau };
        k.validate()?;
        Ok(k)
    }

    pub fn ohmic(kt: f64, cutoff: f64) -> Result<Self> {
        let k = CorrelationKernel::OhmicHighTemp { kt, cutoff };
        k.validate()?;
        Ok(k)
    }

    pub fn discrete(modes: Vec<(f64, f64)>) -> Result<Self> {
        let k = CorrelationKernel::DiscreteModes { modes };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::usage(format!("kernel parameter {name} must be positive and finite, got {v}")))
            }
        };
        match self {
            CorrelationKernel::ExponentialZeroT { tau } => positive("tau", *tau),
            CorrelationKernel::OhmicHighTemp { kt, cutoff } => {
                positive("kT", *kt)?;
                positive("Lambda", *cutoff)
            }
            CorrelationKernel::DiscreteModes { modes } => {
                if modes.is_empty() {
                    return Err(Error::usage("discrete kernel needs at least one mode"));
                }
                if modes.iter().any(|(g, w)| !g.is_finite() || !w.is_finite()) {
                    return Err(Error::usage("discrete kernel modes must be finite"));
                }
                Ok(())
            }
        }
    }

    /// Memory time of a decaying kernel.
    pub fn memory_time(&self) -> Option<f64> {
        match self {
            CorrelationKernel::ExponentialZeroT { tau } => Some(*tau),
            CorrelationKernel::OhmicHighTemp { cutoff, .. } => Some(1.0 / cutoff),
            CorrelationKernel::DiscreteModes { .. } => None,
        }
    }

    /// `(c, λ)` with `α(u) = c·e^{−λu}` for the single-exponential kernels.
    fn exponential_form(&self) -> Option<(C64, f64)> {
        match *self {
            CorrelationKernel::ExponentialZeroT { tau } => Some((C64::new(0.5 / tau, 0.0), 1.0 / tau)),
            CorrelationKernel::OhmicHighTemp { kt, cutoff } => {
                Some((C64::new(kt * cutoff, -0.5 * cutoff * cutoff), cutoff))
            }
            CorrelationKernel::DiscreteModes { .. } => None,
        }
    }

    fn value(&self, u: f64) -> C64 {
        match self {
            CorrelationKernel::DiscreteModes { modes } => {
                modes.iter().map(|&(g, w)| C64::new(0.0, -w * u).exp() * (g * g)).sum()
            }
            _ => {
                let (c, lambda) = self.exponential_form().expect("decaying kernel");
                c * (-lambda * u).exp()
            }
        }
    }
}

/// Values of `g0, g1, g2` at time `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoefficientSet {
    pub t: f64,
    pub g0: C64,
    pub g1: C64,
    pub g2: C64,
}

impl CoefficientSet {
    pub fn new(t: f64, g0: C64, g1: C64, g2: C64) -> Self {
        CoefficientSet { t, g0, g1, g2 }
    }

    pub fn zero(t: f64) -> Self {
        let z = C64::new(0.0, 0.0);
        CoefficientSet { t, g0: z, g1: z, g2: z }
    }

    /// Memoryless limit: `g0 = 1/2`, `g1 = g2 = 0`.
    pub fn markov(t: f64) -> Self {
        CoefficientSet { g0: C64::new(0.5, 0.0), ..Self::zero(t) }
    }

    pub fn at(self, t: f64) -> Self {
        CoefficientSet { t, ..self }
    }

    pub fn is_finite(&self) -> bool {
        self.g0.is_finite() && self.g1.is_finite() && self.g2.is_finite()
    }

    /// Largest componentwise modulus of the difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.g0 - other.g0).norm().max((self.g1 - other.g1).norm()).max((self.g2 - other.g2).norm())
    }
}

pub fn alpha_eval(kernel: &CorrelationKernel, u: f64) -> Result<C64> {
    kernel.validate()?;
    if !(u >= 0.0) {
        return Err(Error::usage(format!("correlation delay must be non-negative, got {u}")));
    }
    Ok(kernel.value(u))
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::usage(format!("coefficient time must be finite and non-negative, got {t}")))
    }
}

// Dimensionless profiles of the single-exponential coefficients, x = λt:
//   s0 = 1 − e^{−x}
//   s1 = 1 − e^{−x}(1 + x)
//   s2 = s1 − x²e^{−x}/2
// Series below x = 1 avoid the cancellation in the direct forms.
fn profile_s0(x: f64) -> f64 {
    -(-x).exp_m1()
}

fn profile_s1(x: f64) -> f64 {
    if x < 1.0 {
        // Σ_{n≥2} (−1)^n (n−1)/n! xⁿ
        let mut term = -x; // (−x)ⁿ/n! at n = 1
        let mut sum = 0.0;
        for n in 2..=24 {
            term *= -x / n as f64;
            sum += (n - 1) as f64 * term;
        }
        sum
    } else {
        profile_s0(x) - x * (-x).exp()
    }
}

fn profile_s2(x: f64) -> f64 {
    if x < 1.0 {
        // Σ_{n≥3} (−1)^n (n−1)(n−2)/(2·n!) xⁿ with the sign folded into the term.
        let mut term = x * x / 2.0; // (−x)ⁿ/n! at n = 2
        let mut sum = 0.0;
        for n in 3..=25 {
            term *= -x / n as f64;
            sum -= 0.5 * ((n - 1) * (n - 2)) as f64 * term;
        }
        sum
    } else {
        profile_s1(x) - 0.5 * x * x * (-x).exp()
    }
}

/// Analytic coefficients for the decaying kernels; `None` for discrete modes.
pub fn coefficients_closed_form(kernel: &CorrelationKernel, t: f64) -> Result<Option<CoefficientSet>> {
    kernel.validate()?;
    check_time(t)?;
    let Some((c, lambda)) = kernel.exponential_form() else {
        return Ok(None);
    };
    let x = lambda * t;
    Ok(Some(CoefficientSet {
        t,
        g0: c / lambda * profile_s0(x),
        g1: c / (lambda * lambda) * profile_s1(x),
        g2: c * c / (lambda * lambda * lambda) * profile_s2(x),
    }))
}

/// Coefficients by adaptive Simpson quadrature to absolute tolerance `tol`.
///
/// `g0` and `g1` are single integrals over `s ∈ [0, t]`; `g2` nests an inner
/// integral over `u ∈ [0, s]` inside the outer one, each with `tol / 2`.
pub fn coefficients_quadrature(kernel: &CorrelationKernel, t: f64, tol: f64) -> Result<CoefficientSet> {
    kernel.validate()?;
    check_time(t)?;
    if !(tol > 0.0) {
        return Err(Error::usage(format!("quadrature tolerance must be positive, got {tol}")));
    }
    let alpha = |u: f64| kernel.value(u);

    let g0 = adaptive_simpson(&mut |s| alpha(t - s), 0.0, t, tol)
        .ok_or(Error::Quadrature { integral: "g0", t })?;
    let g1 = adaptive_simpson(&mut |s| alpha(t - s) * (t - s), 0.0, t, tol)
        .ok_or(Error::Quadrature { integral: "g1", t })?;

    let mut inner_failed = false;
    let mut outer = |s: f64| {
        let inner = adaptive_simpson(&mut |u| alpha(s - u), 0.0, s, 0.5 * tol);
        match inner {
            Some(v) => alpha(t - s) * (t - s) * v,
            None => {
                inner_failed = true;
                C64::new(0.0, 0.0)
            }
        }
    };
    let g2 = adaptive_simpson(&mut outer, 0.0, t, 0.5 * tol);
    let g2 = match g2 {
        Some(v) if !inner_failed => v,
        _ => return Err(Error::Quadrature { integral: "g2", t }),
    };

    Ok(CoefficientSet { t, g0, g1, g2 })
}

/// `t → ∞` limits of the coefficients; rejects non-decaying kernels.
///
/// The returned set carries `t = ∞`.
pub fn asymptotic_coefficients(kernel: &CorrelationKernel) -> Result<CoefficientSet> {
    kernel.validate()?;
    let (c, lambda) = kernel
        .exponential_form()
        .ok_or_else(|| Error::usage("discrete-mode kernels do not decay; no asymptotic coefficients"))?;
    Ok(CoefficientSet {
        t: f64::INFINITY,
        g0: c / lambda,
        g1: c / (lambda * lambda),
        g2: c * c / (lambda * lambda * lambda),
    })
}

/// Time-dependent coefficients: closed form when available, otherwise
/// quadrature at `tol`.
pub fn coefficients(kernel: &CorrelationKernel, t: f64, tol: f64) -> Result<CoefficientSet> {
    match coefficients_closed_form(kernel, t)? {
        Some(c) => Ok(c),
        None => coefficients_quadrature(kernel, t, tol),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn alpha_examples() {
        let tau = 0.3;
        let k = CorrelationKernel::exponential(tau).unwrap();
        assert_abs_diff_eq!(alpha_eval(&k, 0.0).unwrap().re, 1.0 / (2.0 * tau));

        let w0 = 1.7;
        let modes = CorrelationKernel::discrete(vec![(1.0, w0)]).unwrap();
        for u in [0.0, 0.4, 3.0] {
            let v = alpha_eval(&modes, u).unwrap();
            assert!((v - C64::new(0.0, -w0 * u).exp()).norm() < 1e-15);
        }

        let (kt, lam) = (3.0, 5.0);
        let ohm = CorrelationKernel::ohmic(kt, lam).unwrap();
        let v = alpha_eval(&ohm, 0.0).unwrap();
        assert_abs_diff_eq!(v.re, kt * lam);
        assert_abs_diff_eq!(v.im, -lam * lam / 2.0);
    }

    #[test]
    fn alpha_rejects_negative_delay_and_bad_kernels() {
        let k = CorrelationKernel::exponential(1.0).unwrap();
        assert!(alpha_eval(&k, -1e-3).unwrap_err().is_usage());
        assert!(CorrelationKernel::exponential(0.0).unwrap_err().is_usage());
        assert!(CorrelationKernel::ohmic(1.0, -2.0).unwrap_err().is_usage());
        assert!(CorrelationKernel::discrete(vec![]).unwrap_err().is_usage());
        assert!(CorrelationKernel::discrete(vec![(f64::NAN, 1.0)]).unwrap_err().is_usage());
    }

    #[test]
    fn closed_form_examples() {
        let tau = 0.7;
        let k = CorrelationKernel::exponential(tau).unwrap();
        let c0 = coefficients_closed_form(&k, 0.0).unwrap().unwrap();
        assert_eq!(c0, CoefficientSet::zero(0.0));

        let far = coefficients_closed_form(&k, 60.0 * tau).unwrap().unwrap();
        assert_abs_diff_eq!(far.g0.re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(far.g1.re, tau / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(far.g2.re, tau / 4.0, epsilon = 1e-15);

        let modes = CorrelationKernel::discrete(vec![(1.0, 0.0)]).unwrap();
        assert_eq!(coefficients_closed_form(&modes, 1.0).unwrap(), None);
        assert!(coefficients_closed_form(&k, -1.0).unwrap_err().is_usage());
    }

    #[test]
    fn closed_form_matches_hand_integrals() {
        // Direct (non-series) forms at moderate x, written out independently.
        let tau = 0.5;
        let k = CorrelationKernel::exponential(tau).unwrap();
        for t in [0.01, 0.04, 0.3, 1.0, 4.0] {
            let x: f64 = t / tau;
            let g0 = 0.5 * (1.0 - (-x).exp());
            let g1 = tau / 2.0 * (1.0 - (-x).exp() * (1.0 + x));
            let g2 = 0.5 * g1 - t * t / (8.0 * tau) * (-x).exp();
            let c = coefficients_closed_form(&k, t).unwrap().unwrap();
            assert_abs_diff_eq!(c.g0.re, g0, epsilon = 1e-15);
            assert_abs_diff_eq!(c.g1.re, g1, epsilon = 1e-14);
            assert_abs_diff_eq!(c.g2.re, g2, epsilon = 1e-14);
            assert_eq!(c.g0.im, 0.0);
        }
    }

    #[test]
    fn series_and_direct_profiles_join_smoothly() {
        for f in [profile_s1 as fn(f64) -> f64, profile_s2] {
            let below = f(1.0 - 1e-12);
            let above = f(1.0 + 1e-12);
            // Slopes are below 1, so a 2e-12 step moves the value by less than 2e-12.
            assert!((below - above).abs() < 2e-12 + 1e-14 * above.abs());
        }
    }

    #[test]
    fn quadrature_examples() {
        let k = CorrelationKernel::exponential(1.0).unwrap();
        assert_eq!(coefficients_quadrature(&k, 0.0, 1e-10).unwrap(), CoefficientSet::zero(0.0));

        let q = coefficients_quadrature(&k, 5.0, 1e-10).unwrap();
        let c = coefficients_closed_form(&k, 5.0).unwrap().unwrap();
        assert!(q.max_abs_diff(&c) <= 1e-8, "diff {}", q.max_abs_diff(&c));

        // α ≡ 1: g0 = t, g1 = t²/2, g2 = ∫₀ᵗ (t−s) s ds = t³/6.
        let flat = CorrelationKernel::discrete(vec![(1.0, 0.0)]).unwrap();
        for t in [0.5, 2.0, 3.5] {
            let q = coefficients_quadrature(&flat, t, 1e-10).unwrap();
            assert_abs_diff_eq!(q.g0.re, t, epsilon = 1e-12);
            assert_abs_diff_eq!(q.g1.re, t * t / 2.0, epsilon = 1e-12);
            assert_abs_diff_eq!(q.g2.re, t * t * t / 6.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn quadrature_rejects_bad_tolerance() {
        let k = CorrelationKernel::exponential(1.0).unwrap();
        assert!(coefficients_quadrature(&k, 1.0, 0.0).unwrap_err().is_usage());
    }

    #[test]
    fn quadrature_reports_unreachable_tolerance() {
        // Below f64 resolution of a kernel of size ~10⁴ the refinement cannot converge.
        let k = CorrelationKernel::ohmic(1e4, 1.0).unwrap();
        let err = coefficients_quadrature(&k, 30.0, 1e-300).unwrap_err();
        assert!(matches!(err, Error::Quadrature { integral: "g0", .. }), "{err:?}");
    }

    #[test]
    fn ohmic_closed_form_matches_quadrature() {
        let k = CorrelationKernel::ohmic(2.0, 3.0).unwrap();
        for t in [0.05, 0.4, 1.3, 6.0] {
            let q = coefficients_quadrature(&k, t, 1e-10).unwrap();
            let c = coefficients_closed_form(&k, t).unwrap().unwrap();
            assert!(q.max_abs_diff(&c) <= 1e-8, "t={t}: {q:?} vs {c:?}");
        }
    }

    #[test]
    fn asymptotic_examples() {
        let tau = 0.2;
        let k = CorrelationKernel::exponential(tau).unwrap();
        let a = asymptotic_coefficients(&k).unwrap();
        assert_abs_diff_eq!(a.g0.re, 0.5);
        assert_abs_diff_eq!(a.g1.re, tau / 2.0, epsilon = 1e-16);
        assert_abs_diff_eq!(a.g2.re, tau / 4.0, epsilon = 1e-16);
        let q = coefficients_quadrature(&k, 50.0 * tau, 1e-10).unwrap();
        assert!(q.max_abs_diff(&a.at(q.t)) <= 1e-8);

        let (kt, lam) = (20.0, 4.0);
        let ohm = asymptotic_coefficients(&CorrelationKernel::ohmic(kt, lam).unwrap()).unwrap();
        assert_abs_diff_eq!(ohm.g0.re, kt, epsilon = 1e-12);
        assert_abs_diff_eq!(ohm.g0.im, -lam / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ohm.g1.re, kt / lam, epsilon = 1e-12);
        assert_abs_diff_eq!(ohm.g1.im, -0.5, epsilon = 1e-12);

        let modes = CorrelationKernel::discrete(vec![(1.0, 1.0)]).unwrap();
        assert!(asymptotic_coefficients(&modes).unwrap_err().is_usage());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn g1_is_order_tau(tau in 1e-3f64..1.0, x in 5.0f64..100.0) {
            let k = CorrelationKernel::exponential(tau).unwrap();
            let c = coefficients_closed_form(&k, x * tau).unwrap().unwrap();
            prop_assert!(c.g1.norm() <= tau);
        }

        #[test]
        fn g0_saturates_monotonically(tau in 1e-3f64..2.0, t in 0.0f64..10.0, dt in 0.0f64..1.0) {
            let k = CorrelationKernel::exponential(tau).unwrap();
            let a = coefficients_closed_form(&k, t).unwrap().unwrap();
            let b = coefficients_closed_form(&k, t + dt).unwrap().unwrap();
            prop_assert!(b.g0.re >= a.g0.re);
        }

        #[test]
        fn coefficients_scale_with_memory_time(tau in 1e-3f64..2.0, factor in 0.1f64..10.0, x in 0.0f64..40.0) {
            let k1 = CorrelationKernel::exponential(tau).unwrap();
            let k2 = CorrelationKernel::exponential(tau * factor).unwrap();
            let a = coefficients_closed_form(&k1, x * tau).unwrap().unwrap();
            let b = coefficients_closed_form(&k2, x * tau * factor).unwrap().unwrap();
            prop_assert!((a.g0 - b.g0).norm() <= 1e-14);
            prop_assert!((a.g1 / tau - b.g1 / (tau * factor)).norm() <= 1e-14);
            prop_assert!((a.g2 / tau - b.g2 / (tau * factor)).norm() <= 1e-14);
        }
    }
}
