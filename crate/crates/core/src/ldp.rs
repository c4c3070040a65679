//! Scaling transforms of `S_(γ,λ,θ,0)` in `θ`, the finite-dimensional rate
//! functions `I` (increments) and `J` (marginals), and Monte Carlo rate
//! estimation with optional exponential tilting.
//!
//! Everything rests on the exact identity
//! `Σ (t_i − t_{i−1}) θ^{−γ} κ_θ(θ y_i) = Σ (t_i − t_{i−1}) κ_1(y_i)`,
//! where `κ_θ` is the cumulant of `S_(γ,λ,θ,0)`.

use serde::Serialize;
use thiserror::Error;

use crate::conjugate::{kappa_star_closed, ConjugateError};
use crate::cumulant::CumulantFn;
use crate::ext::ExtReal;
use crate::params::{ParamError, ParamSet};
use crate::simulate::{sample_increment, sample_increments, RngStream, SimError};
use crate::stats::compensated_sum;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LdpError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Conjugate(#[from] ConjugateError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("invalid scaling: {0}")]
    InvalidScaling(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no tilt solves κ'(y) = {x} below the abscissa")]
    TiltRootNotFound { x: f64 },
}

fn invalid(msg: impl Into<String>) -> LdpError {
    LdpError::InvalidArgument(msg.into())
}

/// Strictly increasing positive times to spans `t_i − t_{i−1}` with `t_0 = 0`.
pub fn spans(times: &[f64]) -> Result<Vec<f64>, LdpError> {
    if times.is_empty() {
        return Err(invalid("need at least one time"));
    }
    let mut prev = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        if !(t > prev) || !t.is_finite() {
            return Err(invalid(format!(
                "times must satisfy 0 < t_1 < … < t_m, got {times:?}"
            )));
        }
        out.push(t - prev);
        prev = t;
    }
    Ok(out)
}

fn unit_theta(gamma: f64, lambda: f64) -> Result<ParamSet<f64>, LdpError> {
    Ok(ParamSet::validate(gamma, lambda, 1.0, 0.0)?)
}

/// `I(x) = Σ Δt_i κ*_(γ,λ,1,0)(x_i/Δt_i)`; negative increments cost `+∞`.
pub fn rate_i(
    gamma: f64,
    lambda: f64,
    times: &[f64],
    xs: &[f64],
) -> Result<ExtReal<f64>, LdpError> {
    let p = unit_theta(gamma, lambda)?;
    let dts = spans(times)?;
    if xs.len() != dts.len() {
        return Err(invalid(format!(
            "{} times but {} values",
            dts.len(),
            xs.len()
        )));
    }
    let mut total = ExtReal::zero();
    for (&dt, &x) in dts.iter().zip(xs) {
        if x.is_nan() {
            return Err(invalid("NaN value"));
        }
        let u = x / dt;
        let term = if u < 0.0 {
            ExtReal::PosInf
        } else {
            kappa_star_closed(&p, u)?.scale(dt)
        };
        total = total.add(term);
    }
    Ok(total)
}

/// `J(z) = I(z_1, z_2 − z_1, …, z_m − z_{m−1})`.
pub fn rate_j(
    gamma: f64,
    lambda: f64,
    times: &[f64],
    zs: &[f64],
) -> Result<ExtReal<f64>, LdpError> {
    let mut prev = 0.0;
    let diffs: Vec<f64> = zs
        .iter()
        .map(|&z| {
            let d = z - prev;
            prev = z;
            d
        })
        .collect();
    rate_i(gamma, lambda, times, &diffs)
}

/// The unique zero `x_i = Δt_i λ |γ|` of `I`.
pub fn rate_i_zero(gamma: f64, lambda: f64, times: &[f64]) -> Result<Vec<f64>, LdpError> {
    unit_theta(gamma, lambda)?;
    Ok(spans(times)?
        .into_iter()
        .map(|dt| dt * lambda * gamma.abs())
        .collect())
}

/// Largest relative residual `|lhs − rhs| / max(1, |rhs|)` of the
/// θ-invariance identity over every `θ` and every y-vector.
pub fn theta_invariance_check(
    gamma: f64,
    lambda: f64,
    thetas: &[f64],
    ys: &[Vec<f64>],
    times: &[f64],
) -> Result<f64, LdpError> {
    let dts = spans(times)?;
    let k1 = CumulantFn::new(unit_theta(gamma, lambda)?);
    let mut worst = 0.0f64;
    for &theta in thetas {
        let kt = CumulantFn::new(ParamSet::validate(gamma, lambda, theta, 0.0)?);
        let tg = theta.powf(gamma);
        for y in ys {
            if y.len() != dts.len() {
                return Err(invalid("y-vector length differs from the number of times"));
            }
            let mut lhs = ExtReal::zero();
            let mut rhs = ExtReal::zero();
            for (&dt, &yi) in dts.iter().zip(y) {
                lhs = lhs.add(kt.kappa(theta * yi).scale(dt / tg));
                rhs = rhs.add(k1.kappa(yi).scale(dt));
            }
            let r = match (lhs, rhs) {
                (ExtReal::Finite(a), ExtReal::Finite(b)) => (a - b).abs() / b.abs().max(1.0),
                (a, b) if a == b => 0.0,
                _ => f64::INFINITY,
            };
            worst = worst.max(r);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaLimit {
    ToInfinity,
    ToZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingMode {
    /// `θ S(t/θ^γ)`, speed 1.
    Identical,
    /// `θ^g S(t/θ^h)`, speed `θ^{1−g}`.
    Scaled,
    /// `a_θ θ S(t/(a_θ θ^γ))`, speed `1/a_θ`, with `a_θ = θ^{a_power}`.
    Moderate,
}

/// A scaling of `S_(γ,λ,θ,0)` together with its speed.
///
/// `h = γ − 1 + g` always. In moderate mode `g` only enters through the
/// admissibility conditions on `a_θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingSpec {
    pub mode: ScalingMode,
    pub gamma: f64,
    pub g: f64,
    pub h: f64,
    pub a_power: f64,
    pub theta_limit: ThetaLimit,
}

impl ScalingSpec {
    pub fn identical(gamma: f64) -> Self {
        ScalingSpec {
            mode: ScalingMode::Identical,
            gamma,
            g: 1.0,
            h: gamma,
            a_power: 0.0,
            theta_limit: ThetaLimit::ToInfinity,
        }
    }

    pub fn scaled(gamma: f64, g: f64, theta_limit: ThetaLimit) -> Result<Self, LdpError> {
        let s = ScalingSpec {
            mode: ScalingMode::Scaled,
            gamma,
            g,
            h: gamma - 1.0 + g,
            a_power: 0.0,
            theta_limit,
        };
        s.check()?;
        Ok(s)
    }

    pub fn moderate(
        gamma: f64,
        g: f64,
        a_power: f64,
        theta_limit: ThetaLimit,
    ) -> Result<Self, LdpError> {
        let s = ScalingSpec {
            mode: ScalingMode::Moderate,
            gamma,
            g,
            h: gamma - 1.0 + g,
            a_power,
            theta_limit,
        };
        s.check()?;
        Ok(s)
    }

    /// Re-checks the invariants, e.g. after deserialization or manual edits.
    pub fn check(&self) -> Result<(), LdpError> {
        if !(self.g.is_finite()
            && self.h.is_finite()
            && self.a_power.is_finite()
            && self.gamma.is_finite())
        {
            return Err(LdpError::InvalidScaling("non-finite exponent".into()));
        }
        if self.mode == ScalingMode::Identical {
            return Ok(());
        }
        let e = 1.0 - self.g;
        if ((self.gamma - self.h) - e).abs() > 1e-12 {
            return Err(LdpError::InvalidScaling(format!(
                "γ − h = {} differs from 1 − g = {e}",
                self.gamma - self.h
            )));
        }
        let dir = match self.theta_limit {
            ThetaLimit::ToInfinity => 1.0,
            ThetaLimit::ToZero => -1.0,
        };
        if !(dir * e > 0.0) {
            return Err(LdpError::InvalidScaling(format!(
                "1 − g = {e} has the wrong sign for {:?}",
                self.theta_limit
            )));
        }
        if self.mode == ScalingMode::Moderate {
            // a_θ → 0 and θ^{1−g} a_θ → ∞ in the declared limit.
            if !(dir * self.a_power < 0.0 && dir * (e + self.a_power) > 0.0) {
                return Err(LdpError::InvalidScaling(format!(
                    "a_θ = θ^{} violates the moderate deviation conditions",
                    self.a_power
                )));
            }
        }
        Ok(())
    }

    pub fn a_theta(&self, theta: f64) -> f64 {
        theta.powf(self.a_power)
    }

    /// Space factor multiplying `S`.
    pub fn factor(&self, theta: f64) -> f64 {
        match self.mode {
            ScalingMode::Identical => theta,
            ScalingMode::Scaled => theta.powf(self.g),
            ScalingMode::Moderate => self.a_theta(theta) * theta,
        }
    }

    /// Factor applied to the time arguments.
    pub fn time_scale(&self, theta: f64) -> f64 {
        match self.mode {
            ScalingMode::Identical => theta.powf(-self.gamma),
            ScalingMode::Scaled => theta.powf(-self.h),
            ScalingMode::Moderate => 1.0 / (self.a_theta(theta) * theta.powf(self.gamma)),
        }
    }

    pub fn speed(&self, theta: f64) -> f64 {
        match self.mode {
            ScalingMode::Identical => 1.0,
            ScalingMode::Scaled => theta.powf(1.0 - self.g),
            ScalingMode::Moderate => 1.0 / self.a_theta(theta),
        }
    }
}

fn scaled_params(
    spec: &ScalingSpec,
    p: &ParamSet<f64>,
    theta: f64,
) -> Result<ParamSet<f64>, LdpError> {
    if p.delta() != 0.0 {
        return Err(invalid("scaling requires δ = 0"));
    }
    if p.gamma() != spec.gamma {
        return Err(invalid(format!(
            "spec built for γ = {} but params have γ = {}",
            spec.gamma,
            p.gamma()
        )));
    }
    if !(theta > 0.0) {
        return Err(invalid(format!("θ must be > 0, got {theta}")));
    }
    spec.check()?;
    Ok(p.with_theta(theta)?)
}

/// One draw of the scaled increments `factor·(S(τ t_i) − S(τ t_{i−1}))`
/// of `S_(γ,λ,θ,0)`, `τ` the time scale.
pub fn scaled_sample(
    spec: &ScalingSpec,
    p: &ParamSet<f64>,
    theta: f64,
    times: &[f64],
    rng: &mut RngStream,
) -> Result<Vec<f64>, LdpError> {
    let q = scaled_params(spec, p, theta)?;
    let (c, tau) = (spec.factor(theta), spec.time_scale(theta));
    spans(times)?
        .into_iter()
        .map(|dt| Ok(c * sample_increment(&q, dt * tau, rng)?))
        .collect()
}

/// `(1/v) log E[exp(v Σ y_i Y_i)]` for the scaled increments `Y`, evaluated
/// exactly from the cumulant. Equals `Σ Δt_i κ_1(y_i)` for every θ.
pub fn scaled_log_mgf(
    spec: &ScalingSpec,
    p: &ParamSet<f64>,
    theta: f64,
    times: &[f64],
    ys: &[f64],
) -> Result<ExtReal<f64>, LdpError> {
    let q = scaled_params(spec, p, theta)?;
    let k = CumulantFn::new(q);
    let (c, tau, v) = (
        spec.factor(theta),
        spec.time_scale(theta),
        spec.speed(theta),
    );
    let dts = spans(times)?;
    if ys.len() != dts.len() {
        return Err(invalid("y-vector length differs from the number of times"));
    }
    let mut total = ExtReal::zero();
    for (&dt, &y) in dts.iter().zip(ys) {
        total = total.add(k.kappa(v * c * y).scale(dt * tau / v));
    }
    Ok(total)
}

/// Monte Carlo estimate of `−(1/v) log P(A)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LdpEstimate {
    pub level: f64,
    pub speed: f64,
    /// `+∞` when nothing hit the set.
    pub emp_rate: f64,
    /// Half-width of the 95% interval for `emp_rate` (delta method on the log scale).
    pub ci_halfwidth: f64,
    pub n: usize,
    pub p_hat: f64,
}

impl LdpEstimate {
    fn from_p(level: f64, speed: f64, n: usize, p_hat: f64, se: f64) -> Self {
        let (emp_rate, ci_halfwidth) = if p_hat > 0.0 {
            (-p_hat.ln() / speed, 1.96 * se / (p_hat * speed))
        } else {
            (f64::INFINITY, f64::INFINITY)
        };
        LdpEstimate {
            level,
            speed,
            emp_rate,
            ci_halfwidth,
            n,
            p_hat,
        }
    }

    pub fn ci(&self) -> (f64, f64) {
        (
            self.emp_rate - self.ci_halfwidth,
            self.emp_rate + self.ci_halfwidth,
        )
    }

    /// Whether the two 95% intervals overlap.
    pub fn agrees_with(&self, other: &LdpEstimate) -> bool {
        let (a, b) = (self.ci(), other.ci());
        a.0 <= b.1 && b.0 <= a.1
    }
}

fn check_speed(v: f64) -> Result<(), LdpError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("speed must be > 0, got {v}")))
    }
}

/// Estimate from hit counts; `level` is recorded for reporting only.
pub fn rate_from_hits(
    hits: usize,
    n: usize,
    speed: f64,
    level: f64,
) -> Result<LdpEstimate, LdpError> {
    check_speed(speed)?;
    if n == 0 || hits > n {
        return Err(invalid(format!("{hits} hits out of {n}")));
    }
    let p = hits as f64 / n as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    Ok(LdpEstimate::from_p(level, speed, n, p, se))
}

pub fn empirical_rate<F>(draws: &[Vec<f64>], in_set: F, speed: f64) -> Result<LdpEstimate, LdpError>
where
    F: Fn(&[f64]) -> bool,
{
    let hits = draws.iter().filter(|d| in_set(d)).count();
    rate_from_hits(hits, draws.len(), speed, f64::NAN)
}

/// The set `{v : v_i ≥ x_i for all i}`.
pub fn upper_orthant(corner: &[f64]) -> impl Fn(&[f64]) -> bool + '_ {
    move |v| v.len() == corner.len() && v.iter().zip(corner).all(|(a, b)| a >= b)
}

/// Estimate from importance weights (zero outside the set).
fn rate_from_weights(weights: &[f64], speed: f64, level: f64) -> LdpEstimate {
    let n = weights.len() as f64;
    let p = compensated_sum(weights.iter().copied()) / n;
    let var = compensated_sum(weights.iter().map(|w| (w - p) * (w - p))) / (n - 1.0).max(1.0);
    LdpEstimate::from_p(level, speed, weights.len(), p, (var / n).sqrt())
}

/// Tilt `y_x` with `κ'(y_x) = x` for `δ = 0`.
pub fn tilt_for(p: &ParamSet<f64>, x: f64) -> Result<f64, LdpError> {
    if p.delta() != 0.0 {
        return Err(invalid("tilting requires δ = 0"));
    }
    if !(x > 0.0 && x.is_finite()) {
        return Err(LdpError::TiltRootNotFound { x });
    }
    let a = (x / (p.lambda() * p.abs_gamma())).powf(1.0 / (p.gamma() - 1.0));
    if !(a > 0.0 && a.is_finite()) {
        return Err(LdpError::TiltRootNotFound { x });
    }
    Ok(p.theta() - a)
}

/// `P(S(t)/t ≥ x)` by sampling `S(t)` under the exponentially tilted law,
/// which is again `S_(γ,λ,θ−y_x,0)`, and weighting by `e^{−y_x S(t) + tκ(y_x)}`.
/// The reported speed is `t`.
pub fn tilted_tail_estimator(
    p: &ParamSet<f64>,
    t: f64,
    x: f64,
    n: usize,
    seed: u64,
) -> Result<LdpEstimate, LdpError> {
    if n == 0 || !(t > 0.0) {
        return Err(invalid(format!(
            "need n > 0 and t > 0, got n = {n}, t = {t}"
        )));
    }
    let y = tilt_for(p, x)?;
    let tilted = p.with_theta(p.theta() - y)?;
    let log_mgf = t * CumulantFn::new(*p).kappa(y).unwrap();
    let threshold = t * x;
    let weights: Vec<f64> = sample_increments(&tilted, t, n, seed)?
        .into_iter()
        .map(|s| {
            if s >= threshold {
                (log_mgf - y * s).exp()
            } else {
                0.0
            }
        })
        .collect();
    Ok(rate_from_weights(&weights, t, x))
}

/// Plain Monte Carlo counterpart of [`tilted_tail_estimator`].
pub fn plain_tail_estimator(
    p: &ParamSet<f64>,
    t: f64,
    x: f64,
    n: usize,
    seed: u64,
) -> Result<LdpEstimate, LdpError> {
    if n == 0 || !(t > 0.0) {
        return Err(invalid(format!(
            "need n > 0 and t > 0, got n = {n}, t = {t}"
        )));
    }
    let threshold = t * x;
    let hits = sample_increments(p, t, n, seed)?
        .into_iter()
        .filter(|&s| s >= threshold)
        .count();
    rate_from_hits(hits, n, t, x)
}

/// Central second difference of `I` in coordinate `i` at its zero.
pub fn rate_i_curvature(
    gamma: f64,
    lambda: f64,
    times: &[f64],
    i: usize,
    rel_step: f64,
) -> Result<f64, LdpError> {
    let zero = rate_i_zero(gamma, lambda, times)?;
    if i >= zero.len() {
        return Err(invalid("coordinate out of range"));
    }
    let h = rel_step * zero[i];
    let at = |d: f64| -> Result<f64, LdpError> {
        let mut x = zero.clone();
        x[i] += d;
        Ok(rate_i(gamma, lambda, times, &x)?.to_float())
    };
    Ok((at(h)? - 2.0 * at(0.0)? + at(-h)?) / (h * h))
}
