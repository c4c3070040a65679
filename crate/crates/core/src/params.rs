//! Admissible parameter space of the tempered subordinator family.
//!
//! A parameter set `(γ, λ, θ, δ)` is admissible when it lies in
//! `P1 = (−∞,0)×(0,∞)×(0,∞)×[0,∞)` or `P2 = (0,1)×(0,∞)×[0,∞)×[0,∞)`.
//! The endpoints `γ = 0` and `γ = 1` give deterministic laws and are
//! rejected, together with a `1e-12` neighbourhood around them because
//! the exponents `1/(1−γ)` and `γ/(γ−1)` blow up there.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

const GAMMA_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("parameter {name} is not finite ({value})")]
    NonFinite { name: &'static str, value: f64 },
    #[error("out of parameter space: {0}")]
    OutOfParameterSpace(String),
}

/// Law of the time-one marginal, determined by the sign pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// `γ < 0, δ = 0`: compound Poisson with Gamma jumps.
    GammaCompoundPoisson,
    /// `γ ∈ (0,1), δ = 0`: (tempered when `θ > 0`) positive stable.
    TemperedStable,
    /// `δ > 0`: either of the above with a Gamma-randomized intensity.
    GammaMixed,
}

/// Validated `(γ, λ, θ, δ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "RawParams<T>",
    into = "RawParams<T>",
    bound = "T: Scalar + Serialize + DeserializeOwned"
)]
pub struct ParamSet<T> {
    gamma: T,
    lambda: T,
    theta: T,
    delta: T,
    regime: Regime,
}

/// Wire form: `{"gamma":…, "lambda":…, "theta":…, "delta":…}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawParams<T> {
    pub gamma: T,
    pub lambda: T,
    pub theta: T,
    pub delta: T,
}

impl<T: Scalar> TryFrom<RawParams<T>> for ParamSet<T> {
    type Error = ParamError;

    fn try_from(raw: RawParams<T>) -> Result<Self, Self::Error> {
        ParamSet::validate(raw.gamma, raw.lambda, raw.theta, raw.delta)
    }
}

impl<T: Scalar> From<ParamSet<T>> for RawParams<T> {
    fn from(p: ParamSet<T>) -> Self {
        RawParams {
            gamma: p.gamma,
            lambda: p.lambda,
            theta: p.theta,
            delta: p.delta,
        }
    }
}

impl<T: Scalar> ParamSet<T> {
    pub fn validate(gamma: T, lambda: T, theta: T, delta: T) -> Result<Self, ParamError> {
        for (name, value) in [
            ("gamma", gamma),
            ("lambda", lambda),
            ("theta", theta),
            ("delta", delta),
        ] {
            if !value.is_finite() {
                return Err(ParamError::NonFinite {
                    name,
                    value: value.as_f64(),
                });
            }
        }
        let zero = T::zero();
        let guard = T::lit(GAMMA_GUARD);
        let oops = |msg: String| Err(ParamError::OutOfParameterSpace(msg));

        if gamma.abs() <= guard {
            return oops(format!(
                "γ = {gamma} is (numerically) 0, which gives a deterministic law"
            ));
        }
        if (gamma - T::one()).abs() <= guard {
            return oops(format!(
                "γ = {gamma} is (numerically) 1, which gives a deterministic law"
            ));
        }
        if gamma > T::one() {
            return oops(format!("γ must be < 1, got {gamma}"));
        }
        if lambda <= zero {
            return oops(format!("λ must be > 0, got {lambda}"));
        }
        if delta < zero {
            return oops(format!("δ must be ≥ 0, got {delta}"));
        }
        if gamma < zero && theta <= zero {
            return oops(format!("θ must be > 0 when γ < 0, got {theta}"));
        }
        if theta < zero {
            return oops(format!("θ must be ≥ 0, got {theta}"));
        }

        let regime = if delta > zero {
            Regime::GammaMixed
        } else if gamma < zero {
            Regime::GammaCompoundPoisson
        } else {
            Regime::TemperedStable
        };
        Ok(ParamSet {
            gamma,
            lambda,
            theta,
            delta,
            regime,
        })
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// `sgn γ` as `±1`.
    pub fn sgn(&self) -> T {
        if self.gamma < T::zero() {
            -T::one()
        } else {
            T::one()
        }
    }

    /// `sgn(γ)·γ = |γ|`.
    pub fn abs_gamma(&self) -> T {
        self.gamma.abs()
    }

    /// `θ^γ`, with `0^γ = 0` for `γ ∈ (0,1)`.
    pub fn theta_pow_gamma(&self) -> T {
        self.theta.powf(self.gamma)
    }

    pub fn is_stable_branch(&self) -> bool {
        self.gamma > T::zero()
    }

    pub fn with_lambda(&self, lambda: T) -> Result<Self, ParamError> {
        Self::validate(self.gamma, lambda, self.theta, self.delta)
    }

    pub fn with_theta(&self, theta: T) -> Result<Self, ParamError> {
        Self::validate(self.gamma, self.lambda, theta, self.delta)
    }

    pub fn with_delta(&self, delta: T) -> Result<Self, ParamError> {
        Self::validate(self.gamma, self.lambda, self.theta, delta)
    }

    /// The same parameters with `δ = 0`.
    pub fn undispersed(&self) -> Self {
        ParamSet {
            delta: T::zero(),
            regime: if self.gamma < T::zero() {
                Regime::GammaCompoundPoisson
            } else {
                Regime::TemperedStable
            },
            ..*self
        }
    }

    pub fn cast<U: Scalar>(&self) -> Result<ParamSet<U>, ParamError> {
        ParamSet::validate(
            U::lit(self.gamma.as_f64()),
            U::lit(self.lambda.as_f64()),
            U::lit(self.theta.as_f64()),
            U::lit(self.delta.as_f64()),
        )
    }
}
