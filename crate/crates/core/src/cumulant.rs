//! Cumulant function `κ(y) = log E[exp(y S(1))]` of the subordinator.
//!
//! For `δ = 0`:
//! `κ(y) = λ sgn(γ) (θ^γ − (θ−y)^γ)` for `y ≤ θ` (`y < θ` when `γ < 0`).
//! For `δ > 0` the intensity is Gamma-randomized and
//! `κ(y) = −(1/δ) log(1 − λδ sgn(γ)(θ^γ − (θ−y)^γ))`.
//!
//! Evaluation goes through `θ^γ − (θ−y)^γ = −θ^γ expm1(γ ln(1 − y/θ))`,
//! which keeps full relative precision near `y = 0`.

use thiserror::Error;

use crate::conjugate::{Bound, ConvexFn, Domain};
use crate::ext::ExtReal;
use crate::params::ParamSet;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CumulantError {
    #[error("argument {y} is not below the abscissa of convergence {y0}")]
    DomainExceeded { y: f64, y0: f64 },
    #[error("value {w} is outside the range of the cumulant")]
    OutsideRange { w: f64 },
}

/// `κ` for a fixed parameter set, with its abscissa of convergence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CumulantFn<T> {
    params: ParamSet<T>,
    y0: T,
    closed: bool,
}

impl<T: Scalar> CumulantFn<T> {
    pub fn new(params: ParamSet<T>) -> Self {
        let y0 = domain_abscissa(&params);
        let closed = params.is_stable_branch()
            && (params.delta() == T::zero()
                || params.lambda() * params.delta() * params.theta_pow_gamma() < T::one());
        CumulantFn { params, y0, closed }
    }

    pub fn params(&self) -> &ParamSet<T> {
        &self.params
    }

    /// Abscissa of convergence `y0 ∈ [0, θ]`.
    pub fn y0(&self) -> T {
        self.y0
    }

    /// Whether `κ(y0)` is finite (closed right endpoint of the domain).
    pub fn closed_endpoint(&self) -> bool {
        self.closed
    }

    /// `sgn(γ)(θ^γ − (θ−y)^γ)` for `y < θ`.
    fn base(&self, y: T) -> T {
        let p = &self.params;
        let g = p.gamma();
        let theta = p.theta();
        if theta > T::zero() {
            let core = -p.theta_pow_gamma() * (g * (-y / theta).ln_1p()).exp_m1();
            p.sgn() * core
        } else {
            // θ = 0 only occurs with γ ∈ (0,1), and then y ≤ 0.
            -(-y).powf(g)
        }
    }

    /// `κ_(γ,λ,θ,0)(y)`, finite branch only.
    fn kappa0(&self, y: T) -> T {
        self.params.lambda() * self.base(y)
    }

    fn lift_kappa0(&self, k0: T) -> ExtReal<T> {
        let delta = self.params.delta();
        if delta == T::zero() {
            return ExtReal::Finite(k0);
        }
        let arg = delta * k0;
        if arg >= T::one() {
            ExtReal::PosInf
        } else {
            ExtReal::Finite(-(-arg).ln_1p() / delta)
        }
    }

    /// Value at the right endpoint: finite on a closed endpoint, `+∞` otherwise.
    pub fn kappa_at_y0(&self) -> ExtReal<T> {
        if !self.closed {
            return ExtReal::PosInf;
        }
        // A closed endpoint only occurs on the stable branch with y0 = θ.
        self.lift_kappa0(self.params.lambda() * self.params.theta_pow_gamma())
    }

    /// `lim_{y→−∞} κ(y)`.
    pub fn kappa_at_neg_inf(&self) -> ExtReal<T> {
        let p = &self.params;
        if p.is_stable_branch() {
            return ExtReal::NegInf;
        }
        let tg = p.theta_pow_gamma();
        if p.delta() == T::zero() {
            ExtReal::Finite(-p.lambda() * tg)
        } else {
            ExtReal::Finite(-(p.lambda() * p.delta() * tg).ln_1p() / p.delta())
        }
    }

    pub fn kappa(&self, y: T) -> ExtReal<T> {
        if y.is_nan() {
            panic!("kappa evaluated at NaN");
        }
        if y > self.y0 {
            return ExtReal::PosInf;
        }
        if y == T::neg_infinity() {
            return self.kappa_at_neg_inf();
        }
        let tol = T::boundary_eps() * self.y0.abs().max(T::one());
        if self.y0 - y <= tol {
            return self.kappa_at_y0();
        }
        self.lift_kappa0(self.kappa0(y))
    }

    /// First (`order = 1`) or second (`order = 2`) derivative for `y < y0`.
    pub fn kappa_deriv(&self, y: T, order: u8) -> Result<T, CumulantError> {
        assert!(
            order == 1 || order == 2,
            "only first and second derivatives are available"
        );
        if !(y < self.y0) {
            return Err(CumulantError::DomainExceeded {
                y: y.as_f64(),
                y0: self.y0.as_f64(),
            });
        }
        let p = &self.params;
        let g = p.gamma();
        let u = p.theta() - y;
        let scale = p.lambda() * p.abs_gamma();
        let k1 = scale * u.powf(g - T::one());
        let k2 = scale * (T::one() - g) * u.powf(g - T::lit(2.0));
        if p.delta() == T::zero() {
            return Ok(if order == 1 { k1 } else { k2 });
        }
        let d = T::one() - p.delta() * self.kappa0(y);
        Ok(if order == 1 {
            k1 / d
        } else {
            (k2 * d + p.delta() * k1 * k1) / (d * d)
        })
    }

    /// `κ'(0)`, the mean of `S(1)`. Infinite (an error) when `θ = 0`.
    pub fn mean(&self) -> Result<T, CumulantError> {
        self.kappa_deriv(T::zero(), 1)
    }

    /// `κ''(0)`, the variance of `S(1)`.
    pub fn variance(&self) -> Result<T, CumulantError> {
        self.kappa_deriv(T::zero(), 2)
    }

    /// Solves `κ(y) = w` on the finite part of the domain.
    pub fn kappa_inverse(&self, w: T) -> Result<T, CumulantError> {
        let p = &self.params;
        let out = || CumulantError::OutsideRange { w: w.as_f64() };
        let lo = self.kappa_at_neg_inf();
        if let ExtReal::Finite(lo) = lo {
            if w <= lo {
                return Err(out());
            }
        }
        if let ExtReal::Finite(hi) = self.kappa_at_y0() {
            if w > hi {
                return Err(out());
            }
        }
        // Undo the Gamma randomization, then the power.
        let b = if p.delta() == T::zero() {
            w / p.lambda()
        } else {
            -(-p.delta() * w).exp_m1() / (p.lambda() * p.delta())
        };
        let inner = p.theta_pow_gamma() - p.sgn() * b;
        if inner < T::zero() || (inner == T::zero() && !p.is_stable_branch()) {
            return Err(out());
        }
        Ok(p.theta() - inner.powf(T::one() / p.gamma()))
    }

    /// `κ'(y0 − ε)` along a decreasing sequence of `ε`.
    pub fn steepness_probe(&self, eps: &[T]) -> SteepnessReport<T> {
        assert!(
            eps.windows(2).all(|w| w[1] < w[0]) && eps.iter().all(|&e| e > T::zero()),
            "eps sequence must be positive and strictly decreasing"
        );
        let values: Vec<T> = eps
            .iter()
            .map(|&e| {
                self.kappa_deriv(self.y0 - e, 1)
                    .expect("y0 - eps lies inside the domain")
            })
            .collect();
        let increasing = values.windows(2).all(|w| w[1] > w[0]);
        let growth = match (values.first(), values.last()) {
            (Some(&a), Some(&b)) if a > T::zero() => b / a,
            _ => T::one(),
        };
        let bounded = !increasing || growth < T::lit(STEEP_GROWTH);
        SteepnessReport {
            eps: eps.to_vec(),
            values,
            increasing,
            growth,
            bounded,
        }
    }
}

const STEEP_GROWTH: f64 = 10.0;

/// Result of [`CumulantFn::steepness_probe`].
#[derive(Debug, Clone, PartialEq)]
pub struct SteepnessReport<T> {
    pub eps: Vec<T>,
    pub values: Vec<T>,
    pub increasing: bool,
    /// Ratio of the last to the first derivative value.
    pub growth: T,
    /// Set when the sequence is non-monotone or grows less than tenfold.
    pub bounded: bool,
}

/// Abscissa of convergence of `κ`.
pub fn domain_abscissa<T: Scalar>(p: &ParamSet<T>) -> T {
    let theta = p.theta();
    if p.delta() == T::zero() {
        return theta;
    }
    let inv = T::one() / (p.lambda() * p.delta());
    let tg = p.theta_pow_gamma();
    if p.is_stable_branch() {
        if tg <= inv {
            theta
        } else {
            theta - (tg - inv).powf(T::one() / p.gamma())
        }
    } else {
        theta - (tg + inv).powf(T::one() / p.gamma())
    }
}

impl<T: Scalar> ConvexFn<T> for CumulantFn<T> {
    fn eval(&self, y: T) -> ExtReal<T> {
        self.kappa(y)
    }

    fn domain(&self) -> Domain<T> {
        Domain {
            lo: Bound::Unbounded,
            hi: if self.closed {
                Bound::Closed(self.y0)
            } else {
                Bound::Open(self.y0)
            },
        }
    }

    fn derivative(&self, y: T) -> Option<T> {
        self.kappa_deriv(y, 1).ok()
    }
}

/// Outcome of a closure query: either the family is closed under the
/// operation and a parameter set is returned, or a generic evaluator for
/// the resulting cumulant.
#[derive(Debug, Clone, PartialEq)]
pub enum Closure<T> {
    Closed(ParamSet<T>),
    NotClosed(GenericCumulant<T>),
}

/// Cumulant of a composition or generalized mixture of independent members.
#[derive(Debug, Clone, PartialEq)]
pub enum GenericCumulant<T> {
    /// `κ_h ∘ … ∘ κ_1`, stages stored innermost first.
    Composite(Vec<CumulantFn<T>>),
    /// `Σ c_i κ_i`.
    Mixture(Vec<(T, CumulantFn<T>)>),
}

impl<T: Scalar> GenericCumulant<T> {
    pub fn eval(&self, y: T) -> ExtReal<T> {
        match self {
            GenericCumulant::Composite(stages) => {
                stages.iter().fold(ExtReal::Finite(y), |acc, k| match acc {
                    ExtReal::Finite(v) => k.kappa(v),
                    ExtReal::PosInf => ExtReal::PosInf,
                    ExtReal::NegInf => k.kappa_at_neg_inf(),
                })
            }
            GenericCumulant::Mixture(terms) => terms
                .iter()
                .fold(ExtReal::zero(), |acc, (c, k)| acc.add(k.kappa(y).scale(*c))),
        }
    }

    fn upper_bound(&self) -> Bound<T> {
        match self {
            GenericCumulant::Composite(stages) => {
                let mut iter = stages.iter().rev();
                let outer = iter.next().expect("nonempty composition");
                let (mut b, mut closed) = (outer.y0(), outer.closed_endpoint());
                for k in iter {
                    let reach = k.kappa_at_y0();
                    let stays_inside = match reach {
                        ExtReal::Finite(v) => v < b || (v == b && closed),
                        _ => false,
                    };
                    if stays_inside {
                        b = k.y0();
                        closed = k.closed_endpoint();
                    } else {
                        b = k.kappa_inverse(b).unwrap_or(k.y0());
                    }
                }
                if closed {
                    Bound::Closed(b)
                } else {
                    Bound::Open(b)
                }
            }
            GenericCumulant::Mixture(terms) => {
                let b = terms
                    .iter()
                    .map(|(_, k)| k.y0())
                    .fold(T::infinity(), T::min);
                let closed = terms.iter().all(|(_, k)| k.y0() > b || k.closed_endpoint());
                if closed {
                    Bound::Closed(b)
                } else {
                    Bound::Open(b)
                }
            }
        }
    }
}

impl<T: Scalar> ConvexFn<T> for GenericCumulant<T> {
    fn eval(&self, y: T) -> ExtReal<T> {
        GenericCumulant::eval(self, y)
    }

    fn domain(&self) -> Domain<T> {
        Domain {
            lo: Bound::Unbounded,
            hi: self.upper_bound(),
        }
    }

    fn derivative(&self, y: T) -> Option<T> {
        match self {
            GenericCumulant::Composite(stages) => {
                let mut v = y;
                let mut d = T::one();
                for k in stages {
                    d = d * k.kappa_deriv(v, 1).ok()?;
                    v = k.kappa(v).finite()?;
                }
                Some(d)
            }
            GenericCumulant::Mixture(terms) => terms.iter().try_fold(T::zero(), |acc, (c, k)| {
                Some(acc + *c * k.kappa_deriv(y, 1).ok()?)
            }),
        }
    }
}

fn close_to<T: Scalar>(a: T, b: T) -> bool {
    (a - b).abs() <= T::boundary_eps()
}

fn is_unit_stable<T: Scalar>(p: &ParamSet<T>) -> bool {
    p.is_stable_branch()
        && close_to(p.lambda(), T::one())
        && p.theta() == T::zero()
        && p.delta() == T::zero()
}

/// Composition `S_1 ∘ … ∘ S_h` of independent members. Closed only for
/// `(γ_i, 1, 0, 0)` with every `γ_i ∈ (0,1)`, giving `(∏γ_i, 1, 0, 0)`.
pub fn compose_closure<T: Scalar>(ps: &[ParamSet<T>]) -> Closure<T> {
    assert!(!ps.is_empty(), "composition of an empty list");
    if ps.iter().all(is_unit_stable) {
        let g = ps.iter().fold(T::one(), |acc, p| acc * p.gamma());
        if let Ok(p) = ParamSet::validate(g, T::one(), T::zero(), T::zero()) {
            return Closure::Closed(p);
        }
    }
    // Cumulant of S_1 ∘ … ∘ S_h is κ_h ∘ … ∘ κ_1, so S_1 is the innermost stage.
    Closure::NotClosed(GenericCumulant::Composite(
        ps.iter().map(|p| CumulantFn::new(*p)).collect(),
    ))
}

/// Generalized mixture `Σ S_i(c_i t)`. Closed only when every member is
/// `(γ, λ_i, 0, 0)` with a shared `γ ∈ (0,1)`, giving `(γ, Σ c_i λ_i, 0, 0)`.
pub fn mixture_closure<T: Scalar>(terms: &[(T, ParamSet<T>)]) -> Closure<T> {
    assert!(!terms.is_empty(), "mixture of an empty list");
    assert!(
        terms.iter().all(|(c, _)| *c > T::zero()),
        "mixture weights must be positive"
    );
    let g = terms[0].1.gamma();
    let shared = terms.iter().all(|(_, p)| {
        p.is_stable_branch()
            && close_to(p.gamma(), g)
            && p.theta() == T::zero()
            && p.delta() == T::zero()
    });
    if shared {
        let lambda = terms
            .iter()
            .fold(T::zero(), |acc, (c, p)| acc + *c * p.lambda());
        if let Ok(p) = ParamSet::validate(g, lambda, T::zero(), T::zero()) {
            return Closure::Closed(p);
        }
    }
    Closure::NotClosed(GenericCumulant::Mixture(
        terms
            .iter()
            .map(|(c, p)| (*c, CumulantFn::new(*p)))
            .collect(),
    ))
}
