//! Rate function `H` of `X(T(t))/t`, where `T` is the inverse of a
//! tempered stable subordinator (`γ ∈ (0,1)`, `δ = 0`) and `X` is an
//! independent real Lévy process with log-MGF `Λ_X`.
//!
//! `H(x) = sup_η {ηx − Λ(Λ_X(η))}` with `Λ` the limiting log-MGF of
//! `T(t)/t`. For `θ = 0` the zero of `H` is `0` whatever the drift of
//! `X` (trapping); for `θ > 0` it is `θ^{1−γ}/(λγ) Λ_X'(0)` (rushing).

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::conjugate::{
    lambda_inverse_rate, legendre_numeric, Bound, ConjugateError, ConjugateOptions, ConvexFn,
    Domain, RateFn,
};
use crate::ext::ExtReal;
use crate::params::ParamSet;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TimeChangeError {
    #[error(
        "time change needs γ ∈ (0,1) so that κ*(0) = ∞; γ = {gamma} < 0 gives a \
         compound Poisson subordinator whose inverse has an atom at 0"
    )]
    NegativeGammaUnsupported { gamma: f64 },
    #[error("time change needs δ = 0, got δ = {delta}")]
    DispersionUnsupported { delta: f64 },
    #[error("Λ_X'(0) must be > 0 for the one-sided derivative taxonomy, got {value}")]
    DerivativeNotPositive { value: f64 },
    #[error("root of Λ_X(η) = {target} on η < 0 could not be bracketed: {detail}")]
    RootBracketFailed { target: f64, detail: String },
    #[error("Lévy exponent '{name}' rejected: {reason}")]
    InvalidExponent { name: String, reason: String },
    #[error(transparent)]
    Conjugate(#[from] ConjugateError),
}

/// User-supplied `Λ_X` with optional derivative.
#[derive(Clone)]
pub struct CustomLevy<T> {
    pub name: String,
    pub f: Arc<dyn Fn(T) -> T + Send + Sync>,
    pub df: Option<Arc<dyn Fn(T) -> T + Send + Sync>>,
    pub deriv_at_zero: T,
}

impl<T: fmt::Debug> fmt::Debug for CustomLevy<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomLevy")
            .field("name", &self.name)
            .field("deriv_at_zero", &self.deriv_at_zero)
            .finish_non_exhaustive()
    }
}

/// Log-MGF `Λ_X(η) = log E[e^{η X(1)}]` of a real Lévy process.
#[derive(Debug, Clone)]
pub enum LevyExponent<T> {
    /// `X(t) = μt`.
    Drift {
        mu: T,
    },
    /// `X(t) = μt + σW(t)`: `Λ_X(η) = μη + σ²η²/2`.
    BrownianDrift {
        mu: T,
        sigma: T,
    },
    /// Compound Poisson with `Exp` jumps of the given mean:
    /// `Λ_X(η) = r (1/(1 − mη) − 1)`, finite only for `η < 1/m`.
    CompoundPoissonExp {
        rate: T,
        mean: T,
    },
    Custom(CustomLevy<T>),
}

impl<T: Scalar> LevyExponent<T> {
    /// Wraps a closure after checking `Λ_X(0) = 0` and convexity on `probe`.
    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(T) -> T + Send + Sync + 'static,
        df: Option<Arc<dyn Fn(T) -> T + Send + Sync>>,
        deriv_at_zero: T,
        probe: &[T],
    ) -> Result<Self, TimeChangeError> {
        let name = name.into();
        let reject = |reason: String| TimeChangeError::InvalidExponent {
            name: name.clone(),
            reason,
        };
        let f0 = f(T::zero());
        if f0.abs() > T::boundary_eps() {
            return Err(reject(format!("Λ_X(0) = {f0}, expected 0")));
        }
        if probe.windows(2).any(|w| w[1] <= w[0]) {
            return Err(reject("probe grid must be increasing".into()));
        }
        for w in probe.windows(3) {
            let (a, m, b) = (w[0], w[1], w[2]);
            let (fa, fm, fb) = (f(a), f(m), f(b));
            let wgt = (m - a) / (b - a);
            let chord = (T::one() - wgt) * fa + wgt * fb;
            let slack = T::lit(1e-9) * (fa.abs() + fm.abs() + fb.abs() + T::one());
            if !(fm <= chord + slack) {
                return Err(reject(format!("not convex near η = {m}")));
            }
        }
        Ok(LevyExponent::Custom(CustomLevy {
            name,
            f: Arc::new(f),
            df,
            deriv_at_zero,
        }))
    }

    pub fn name(&self) -> String {
        match self {
            LevyExponent::Drift { .. } => "drift".into(),
            LevyExponent::BrownianDrift { .. } => "brownian-drift".into(),
            LevyExponent::CompoundPoissonExp { .. } => "compound-poisson-exp".into(),
            LevyExponent::Custom(c) => c.name.clone(),
        }
    }

    pub fn eval(&self, eta: T) -> ExtReal<T> {
        let half = T::lit(0.5);
        match self {
            LevyExponent::Drift { mu } => ExtReal::Finite(*mu * eta),
            LevyExponent::BrownianDrift { mu, sigma } => {
                ExtReal::Finite(*mu * eta + half * *sigma * *sigma * eta * eta)
            }
            LevyExponent::CompoundPoissonExp { rate, mean } => {
                let d = T::one() - *mean * eta;
                if d <= T::zero() {
                    ExtReal::PosInf
                } else {
                    ExtReal::Finite(*rate * *mean * eta / d)
                }
            }
            LevyExponent::Custom(c) => ExtReal::from_float((c.f)(eta)),
        }
    }

    pub fn derivative(&self, eta: T) -> Option<T> {
        match self {
            LevyExponent::Drift { mu } => Some(*mu),
            LevyExponent::BrownianDrift { mu, sigma } => Some(*mu + *sigma * *sigma * eta),
            LevyExponent::CompoundPoissonExp { rate, mean } => {
                let d = T::one() - *mean * eta;
                (d > T::zero()).then(|| *rate * *mean / (d * d))
            }
            LevyExponent::Custom(c) => c.df.as_ref().map(|d| d(eta)),
        }
    }

    /// `Λ_X'(0) = E[X(1)]`.
    pub fn deriv_at_zero(&self) -> T {
        match self {
            LevyExponent::Drift { mu } | LevyExponent::BrownianDrift { mu, .. } => *mu,
            LevyExponent::CompoundPoissonExp { rate, mean } => *rate * *mean,
            LevyExponent::Custom(c) => c.deriv_at_zero,
        }
    }

    pub fn domain(&self) -> Domain<T> {
        match self {
            LevyExponent::CompoundPoissonExp { mean, .. } => Domain {
                lo: Bound::Unbounded,
                hi: Bound::Open(T::one() / *mean),
            },
            _ => Domain::real_line(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaRegime {
    ThetaZero,
    ThetaPositive,
}

/// `H` for a given subordinator and Lévy exponent.
#[derive(Debug, Clone)]
pub struct HRateFn<T> {
    pub params: ParamSet<T>,
    pub levy: LevyExponent<T>,
    pub theta_regime: ThetaRegime,
}

/// `η ↦ Λ(Λ_X(η))`, the function conjugated to obtain `H`.
struct Composite<'a, T> {
    lambda: RateFn<T>,
    levy: &'a LevyExponent<T>,
}

impl<T: Scalar> ConvexFn<T> for Composite<'_, T> {
    fn eval(&self, eta: T) -> ExtReal<T> {
        match self.levy.eval(eta) {
            ExtReal::Finite(v) => self.lambda.eval(v),
            other => other,
        }
    }

    fn domain(&self) -> Domain<T> {
        self.levy.domain()
    }

    fn derivative(&self, eta: T) -> Option<T> {
        let v = self.levy.eval(eta).finite()?;
        Some(self.lambda.derivative(v)? * self.levy.derivative(eta)?)
    }
}

impl<T: Scalar> HRateFn<T> {
    pub fn new(params: ParamSet<T>, levy: LevyExponent<T>) -> Result<Self, TimeChangeError> {
        if !params.is_stable_branch() {
            return Err(TimeChangeError::NegativeGammaUnsupported {
                gamma: params.gamma().as_f64(),
            });
        }
        if params.delta() != T::zero() {
            return Err(TimeChangeError::DispersionUnsupported {
                delta: params.delta().as_f64(),
            });
        }
        let theta_regime = if params.theta() == T::zero() {
            ThetaRegime::ThetaZero
        } else {
            ThetaRegime::ThetaPositive
        };
        Ok(HRateFn {
            params,
            levy,
            theta_regime,
        })
    }

    fn composite(&self) -> Composite<'_, T> {
        Composite {
            lambda: RateFn::lambda_inv(self.params).expect("δ = 0 checked at construction"),
            levy: &self.levy,
        }
    }

    /// `Λ(Λ_X(η))`.
    pub fn inner(&self, eta: T) -> ExtReal<T> {
        match self.levy.eval(eta) {
            ExtReal::Finite(v) => lambda_inverse_rate(&self.params, v).unwrap_or(ExtReal::PosInf),
            other => other,
        }
    }
}

impl<T: Scalar> ConvexFn<T> for HRateFn<T> {
    fn eval(&self, x: T) -> ExtReal<T> {
        h_rate(self, x, ConjugateOptions::default()).unwrap_or(ExtReal::PosInf)
    }

    fn domain(&self) -> Domain<T> {
        Domain::real_line()
    }

    /// `H'(x)` is the maximizing `η`.
    fn derivative(&self, x: T) -> Option<T> {
        legendre_numeric(&self.composite(), x, ConjugateOptions::default())
            .ok()?
            .argmax
    }
}

/// `H(x) = sup_η {ηx − Λ(Λ_X(η))}`.
pub fn h_rate<T: Scalar>(
    h: &HRateFn<T>,
    x: T,
    opts: ConjugateOptions<T>,
) -> Result<ExtReal<T>, TimeChangeError> {
    Ok(legendre_numeric(&h.composite(), x, opts)?.value)
}

/// Zero of `H`: `0` for `θ = 0`, `θ^{1−γ}/(λγ) Λ_X'(0)` for `θ > 0`.
pub fn h_zero<T: Scalar>(h: &HRateFn<T>) -> T {
    let p = &h.params;
    match h.theta_regime {
        ThetaRegime::ThetaZero => T::zero(),
        ThetaRegime::ThetaPositive => {
            p.theta().powf(T::one() - p.gamma()) / (p.lambda() * p.gamma()) * h.levy.deriv_at_zero()
        }
    }
}

/// Numerical minimizer of `H`, for cross-checking [`h_zero`].
pub fn h_argmin_numeric<T: Scalar>(h: &HRateFn<T>) -> Result<T, TimeChangeError> {
    let r = legendre_numeric(h, T::zero(), ConjugateOptions::default())?;
    r.argmax
        .ok_or(TimeChangeError::Conjugate(ConjugateError::EmptyDomain))
}

/// One-sided derivatives of `H` at `0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneSidedDerivs<T> {
    /// `D₋H(0)`; `−∞` flags `H = ∞` on `x < 0`.
    pub d_minus: ExtReal<T>,
    pub d_plus: T,
}

impl<T: Scalar> OneSidedDerivs<T> {
    pub fn infinite_on_negatives(&self) -> bool {
        self.d_minus == ExtReal::NegInf
    }
}

/// `D₋H(0)` and `D₊H(0)` from the roots of `Λ_X(η) = c` on `η ≤ 0`, where
/// `c = 0` for `θ = 0` and `c = −λθ^γ` for `θ > 0`.
///
/// `H(0) = −inf Λ(Λ_X)` is attained on the flat set `{η : Λ_X(η) ≤ c}` of
/// the inner function; its endpoints are the one-sided slopes. A flat set
/// unbounded to the left means `H = ∞` on `x < 0`. When `Λ_X` never goes
/// below `c` the flat set degenerates to the minimizer of `Λ_X`, and both
/// derivatives equal it.
pub fn h_one_sided_derivs_at_zero<T: Scalar>(
    h: &HRateFn<T>,
) -> Result<OneSidedDerivs<T>, TimeChangeError> {
    let slope0 = h.levy.deriv_at_zero();
    if !(slope0 > T::zero()) {
        return Err(TimeChangeError::DerivativeNotPositive {
            value: slope0.as_f64(),
        });
    }
    let p = &h.params;
    let c = match h.theta_regime {
        ThetaRegime::ThetaZero => T::zero(),
        ThetaRegime::ThetaPositive => -p.lambda() * p.theta_pow_gamma(),
    };
    let fail = |detail: String| TimeChangeError::RootBracketFailed {
        target: c.as_f64(),
        detail,
    };
    let f = |eta: T| -> Result<T, TimeChangeError> {
        h.levy
            .eval(eta)
            .finite()
            .ok_or_else(|| fail(format!("Λ_X({eta}) is not finite")))
    };

    // Minimizer of Λ_X on η ≤ 0, by expanding left from 0 while Λ_X decreases.
    let cap = T::lit(1e12);
    let mut hi = T::zero();
    let mut step = T::lit(1e-3);
    let mut lo = -step;
    let mut runaway = false;
    while f(lo)? < f(hi)? {
        hi = lo;
        step = step * T::lit(2.0);
        lo = lo - step;
        if -lo > cap {
            runaway = true;
            break;
        }
    }

    // Right root: Λ_X increases on [argmin, 0], and Λ_X(0) = 0 ≥ c.
    let bisect = |mut neg: T, mut pos: T| -> Result<T, TimeChangeError> {
        for _ in 0..400 {
            let mid = T::lit(0.5) * (neg + pos);
            if mid == neg || mid == pos {
                break;
            }
            if f(mid)? < c {
                neg = mid
            } else {
                pos = mid
            }
        }
        Ok(T::lit(0.5) * (neg + pos))
    };

    if runaway {
        // Λ_X keeps decreasing to −∞: flat set unbounded to the left.
        let below = f(lo)?;
        if below >= c {
            return Err(fail(format!(
                "Λ_X decreases without crossing {c} down to η = {lo}"
            )));
        }
        let d_plus = if c == T::zero() {
            T::zero()
        } else {
            bisect(lo, T::zero())?
        };
        return Ok(OneSidedDerivs {
            d_minus: ExtReal::NegInf,
            d_plus,
        });
    }

    // Λ_X is convex and no longer decreasing at lo, so its minimizer lies in [lo, 0].
    let (mut a, mut b) = (lo, T::zero());
    let inv_phi = T::lit(0.618_033_988_749_894_9);
    for _ in 0..200 {
        let x1 = b - (b - a) * inv_phi;
        let x2 = a + (b - a) * inv_phi;
        if f(x1)? <= f(x2)? {
            b = x2
        } else {
            a = x1
        }
    }
    let eta_min = T::lit(0.5) * (a + b);
    let f_min = f(eta_min)?;

    if f_min >= c {
        if c == T::zero() {
            // Only possible when Λ_X'(0) ≤ 0, which was excluded above.
            return Err(fail("Λ_X does not go below 0 on η < 0".into()));
        }
        return Ok(OneSidedDerivs {
            d_minus: ExtReal::Finite(eta_min),
            d_plus: eta_min,
        });
    }

    let d_plus = if c == T::zero() {
        T::zero()
    } else {
        bisect(eta_min, T::zero())?
    };

    // Left root: expand left of the minimizer until Λ_X climbs back to c.
    let mut far = eta_min - T::one().max(eta_min.abs());
    loop {
        let v = match h.levy.eval(far) {
            ExtReal::Finite(v) => v,
            _ => return Err(fail(format!("Λ_X({far}) is not finite"))),
        };
        if v >= c {
            break;
        }
        if -far > cap {
            return Ok(OneSidedDerivs {
                d_minus: ExtReal::NegInf,
                d_plus,
            });
        }
        far = far * T::lit(2.0);
    }
    // On [far, eta_min] Λ_X decreases through c.
    let (mut pos, mut neg) = (far, eta_min);
    for _ in 0..400 {
        let mid = T::lit(0.5) * (pos + neg);
        if mid == pos || mid == neg {
            break;
        }
        if f(mid)? < c {
            neg = mid
        } else {
            pos = mid
        }
    }
    Ok(OneSidedDerivs {
        d_minus: ExtReal::Finite(T::lit(0.5) * (pos + neg)),
        d_plus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conjugate::{lin_grid, psi, psi_right_derivative_at_zero};

    fn p(g: f64, l: f64, t: f64) -> ParamSet<f64> {
        ParamSet::validate(g, l, t, 0.0).unwrap()
    }

    fn quad() -> LevyExponent<f64> {
        // η² + η: Brownian with drift 1 and σ² = 2.
        LevyExponent::BrownianDrift {
            mu: 1.0,
            sigma: 2f64.sqrt(),
        }
    }

    #[test]
    fn rejects_negative_gamma_with_reason() {
        let q = ParamSet::validate(-1.0, 1.0, 1.0, 0.0).unwrap();
        let err = HRateFn::new(q, LevyExponent::Drift { mu: 1.0 }).unwrap_err();
        assert!(err.to_string().contains("κ*(0) = ∞"), "{err}");
        let q = ParamSet::validate(0.5, 1.0, 1.0, 1.0).unwrap();
        assert!(HRateFn::new(q, LevyExponent::Drift { mu: 1.0 }).is_err());
    }

    #[test]
    fn identity_time_change_gives_psi() {
        for q in [p(0.5, 1.0, 1.0), p(0.3, 2.0, 4.0), p(0.7, 1.0, 0.5)] {
            let h = HRateFn::new(q, LevyExponent::Drift { mu: 1.0 }).unwrap();
            let zero = h_zero(&h);
            for x in lin_grid(0.0, 4.0 * zero, 21) {
                let a = h_rate(&h, x, ConjugateOptions::default()).unwrap().unwrap();
                let b = psi(&q, x).unwrap().unwrap();
                assert!((a - b).abs() <= 1e-6, "x={x}: {a} vs {b}");
            }
            assert_eq!(
                h_rate(&h, -0.5, ConjugateOptions::default()).unwrap(),
                ExtReal::PosInf
            );
            let d = h_one_sided_derivs_at_zero(&h).unwrap();
            assert!(d.infinite_on_negatives());
            let want = psi_right_derivative_at_zero(&q).unwrap().unwrap();
            assert!((d.d_plus - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn zeros() {
        let h = HRateFn::new(p(0.5, 1.0, 0.0), LevyExponent::Drift { mu: 7.0 }).unwrap();
        assert_eq!(h_zero(&h), 0.0);
        assert_eq!(
            h_rate(&h, 0.0, ConjugateOptions::default()).unwrap(),
            ExtReal::Finite(0.0)
        );
        let h = HRateFn::new(p(0.5, 1.0, 1.0), LevyExponent::Drift { mu: 1.0 }).unwrap();
        assert!((h_zero(&h) - 2.0).abs() < 1e-15);
        assert!(
            h_rate(&h, 2.0, ConjugateOptions::default())
                .unwrap()
                .unwrap()
                .abs()
                < 1e-12
        );
        let h = HRateFn::new(
            p(0.5, 2.0, 4.0),
            LevyExponent::BrownianDrift {
                mu: 0.0,
                sigma: 1.0,
            },
        )
        .unwrap();
        assert_eq!(h_zero(&h), 0.0);
    }

    #[test]
    fn numeric_argmin_matches_zero() {
        for (q, levy) in [
            (p(0.5, 1.0, 1.0), quad()),
            (
                p(0.5, 1.0, 1.0),
                LevyExponent::CompoundPoissonExp {
                    rate: 2.0,
                    mean: 0.5,
                },
            ),
            (
                p(0.4, 2.0, 3.0),
                LevyExponent::BrownianDrift {
                    mu: -0.5,
                    sigma: 1.0,
                },
            ),
        ] {
            let h = HRateFn::new(q, levy).unwrap();
            let m = h_argmin_numeric(&h).unwrap();
            assert!((m - h_zero(&h)).abs() <= 1e-6, "{m} vs {}", h_zero(&h));
        }
    }

    #[test]
    fn one_sided_taxonomy() {
        let h = HRateFn::new(p(0.5, 1.0, 0.0), quad()).unwrap();
        let d = h_one_sided_derivs_at_zero(&h).unwrap();
        assert!((d.d_minus.unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(d.d_plus, 0.0);

        // λθ^γ = 3/16 with γ = 0.5, λ = 3/16, θ = 1.
        let h = HRateFn::new(p(0.5, 3.0 / 16.0, 1.0), quad()).unwrap();
        let d = h_one_sided_derivs_at_zero(&h).unwrap();
        assert!((d.d_minus.unwrap() + 0.75).abs() < 1e-12);
        assert!((d.d_plus + 0.25).abs() < 1e-12);

        let h = HRateFn::new(p(0.5, 1.0, 1.0), LevyExponent::Drift { mu: 1.0 }).unwrap();
        let d = h_one_sided_derivs_at_zero(&h).unwrap();
        assert!(d.infinite_on_negatives());
        assert!((d.d_plus + 1.0).abs() < 1e-12);

        let h = HRateFn::new(p(0.5, 1.0, 1.0), LevyExponent::Drift { mu: -1.0 }).unwrap();
        assert!(matches!(
            h_one_sided_derivs_at_zero(&h),
            Err(TimeChangeError::DerivativeNotPositive { .. })
        ));
    }

    #[test]
    fn one_sided_derivatives_match_finite_differences() {
        let cases = [
            (p(0.5, 1.0, 0.0), quad()),
            (p(0.5, 3.0 / 16.0, 1.0), quad()),
            (p(0.5, 1.0, 1.0), LevyExponent::Drift { mu: 1.0 }),
        ];
        let opts = ConjugateOptions::default();
        for (q, levy) in cases {
            let h = HRateFn::new(q, levy).unwrap();
            let d = h_one_sided_derivs_at_zero(&h).unwrap();
            let h0 = h_rate(&h, 0.0, opts).unwrap().unwrap();
            for step in [1e-3, 1e-4] {
                let right = (h_rate(&h, step, opts).unwrap().unwrap() - h0) / step;
                assert!(
                    (right - d.d_plus).abs() <= 5e-2,
                    "{q:?}: D+ {right} vs {}",
                    d.d_plus
                );
                match d.d_minus {
                    ExtReal::Finite(dm) => {
                        let left = (h0 - h_rate(&h, -step, opts).unwrap().unwrap()) / step;
                        assert!((left - dm).abs() <= 5e-2, "D- {left} vs {dm}");
                    }
                    _ => assert_eq!(h_rate(&h, -step, opts).unwrap(), ExtReal::PosInf),
                }
            }
        }
    }

    #[test]
    fn custom_exponent_checks() {
        let probe = lin_grid(-5.0, 5.0, 41);
        let ok = LevyExponent::custom("cosh", |e: f64| e.cosh() - 1.0 + e, None, 1.0, &probe);
        assert!(ok.is_ok());
        let bad = LevyExponent::custom("sin", |e: f64| e.sin(), None, 1.0, &probe);
        assert!(matches!(bad, Err(TimeChangeError::InvalidExponent { .. })));
        let off = LevyExponent::custom("shifted", |e: f64| e * e + 1.0, None, 0.0, &probe);
        assert!(off.is_err());
        // A custom exponent matching a preset gives the same H.
        let custom = LevyExponent::custom(
            "quad",
            |e: f64| e * e + e,
            Some(Arc::new(|e: f64| 2.0 * e + 1.0)),
            1.0,
            &probe,
        )
        .unwrap();
        let a = HRateFn::new(p(0.5, 1.0, 1.0), custom).unwrap();
        let b = HRateFn::new(p(0.5, 1.0, 1.0), quad()).unwrap();
        for x in [-0.5, 0.5, 3.0] {
            let (u, v) = (
                h_rate(&a, x, ConjugateOptions::default()).unwrap().unwrap(),
                h_rate(&b, x, ConjugateOptions::default()).unwrap().unwrap(),
            );
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn compound_poisson_exponent_domain() {
        let l = LevyExponent::CompoundPoissonExp {
            rate: 2.0f64,
            mean: 0.5,
        };
        assert_eq!(l.eval(2.0), ExtReal::PosInf);
        assert!((l.eval(1.0).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(l.deriv_at_zero(), 1.0);
    }
}
