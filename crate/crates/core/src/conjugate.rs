//! Legendre–Fenchel conjugation and the closed-form rate functions built
//! from the cumulant.
//!
//! * `κ*(x) = sup_y {xy − κ(y)}`: rate of `S(t)/t`.
//! * `Ψ(x) = x κ*(1/x)` for `x > 0`, `Ψ(0) = θ`, `+∞` for `x < 0`: rate of `T(t)/t`.
//! * `Λ(y) = lim (1/t) log E[exp(y T(t))]`, whose conjugate is again `Ψ`.
//!
//! Closed forms exist only for `δ = 0`; for `δ > 0` everything goes
//! through [`legendre_numeric`].

use thiserror::Error;

use crate::cumulant::CumulantFn;
use crate::ext::ExtReal;
use crate::params::ParamSet;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConjugateError {
    #[error("objective is not concave near y = {at} (negative second difference of the primal)")]
    NonConvexDetected { at: f64 },
    #[error("argument {x} is outside the domain")]
    DomainExceeded { x: f64 },
    #[error("closed form requires δ = 0")]
    RequiresZeroDelta,
    #[error("closed form requires θ > 0")]
    RequiresPositiveTheta,
    #[error("function has no finite value on its domain")]
    EmptyDomain,
}

/// One end of an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound<T> {
    Unbounded,
    Open(T),
    Closed(T),
}

impl<T: Scalar> Bound<T> {
    pub fn value(&self) -> Option<T> {
        match *self {
            Bound::Unbounded => None,
            Bound::Open(v) | Bound::Closed(v) => Some(v),
        }
    }

    fn is_closed(&self) -> bool {
        matches!(self, Bound::Closed(_))
    }
}

/// Interval on which a convex function is (or may be) finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain<T> {
    pub lo: Bound<T>,
    pub hi: Bound<T>,
}

impl<T: Scalar> Domain<T> {
    pub fn real_line() -> Self {
        Domain {
            lo: Bound::Unbounded,
            hi: Bound::Unbounded,
        }
    }

    pub fn contains(&self, y: T) -> bool {
        let lo_ok = match self.lo {
            Bound::Unbounded => true,
            Bound::Open(a) => y > a,
            Bound::Closed(a) => y >= a,
        };
        let hi_ok = match self.hi {
            Bound::Unbounded => true,
            Bound::Open(b) => y < b,
            Bound::Closed(b) => y <= b,
        };
        lo_ok && hi_ok
    }

    /// A point strictly inside the interval, preferring the origin.
    fn interior_point(&self) -> T {
        let zero = T::zero();
        match (self.lo.value(), self.hi.value()) {
            (None, None) => zero,
            (Some(a), None) => {
                if a < zero {
                    zero
                } else {
                    a + a.abs().max(T::one())
                }
            }
            (None, Some(b)) => {
                if b > zero {
                    zero
                } else {
                    b - b.abs().max(T::one())
                }
            }
            (Some(a), Some(b)) => {
                if a < zero && zero < b {
                    zero
                } else {
                    T::lit(0.5) * (a + b)
                }
            }
        }
    }
}

/// Convex function of one real variable, possibly `+∞` outside a domain.
pub trait ConvexFn<T: Scalar> {
    fn eval(&self, y: T) -> ExtReal<T>;

    fn domain(&self) -> Domain<T>;

    /// Derivative in the interior of the domain, if available.
    fn derivative(&self, _y: T) -> Option<T> {
        None
    }

    /// `lim_{y→−∞} f(y)` when it is known in closed form.
    fn limit_at_neg_inf(&self) -> Option<ExtReal<T>> {
        None
    }
}

/// Adapter for closures.
pub struct FnConvex<F, D> {
    pub f: F,
    pub df: Option<D>,
    pub domain: Domain<f64>,
}

impl<F, D> ConvexFn<f64> for FnConvex<F, D>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    fn eval(&self, y: f64) -> ExtReal<f64> {
        if !self.domain.contains(y) {
            return ExtReal::PosInf;
        }
        ExtReal::from_float((self.f)(y))
    }

    fn domain(&self) -> Domain<f64> {
        self.domain
    }

    fn derivative(&self, y: f64) -> Option<f64> {
        self.df.as_ref().map(|d| d(y))
    }
}

/// Tuning knobs for [`legendre_numeric`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugateOptions<T> {
    /// Tolerance on the dual objective.
    pub tol: T,
    /// Bracket growth past this magnitude is treated as divergence.
    pub cap: T,
    pub max_iter: usize,
}

impl<T: Scalar> Default for ConjugateOptions<T> {
    fn default() -> Self {
        ConjugateOptions {
            tol: T::lit(1e-10),
            cap: T::lit(1e12),
            max_iter: 400,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugateResult<T> {
    pub value: ExtReal<T>,
    /// Maximizer; `None` when the supremum is only approached at infinity.
    pub argmax: Option<T>,
    pub iterations: usize,
    /// `|x − f'(argmax)|` at an interior maximizer, zero otherwise.
    pub residual: T,
}

fn objective<T: Scalar>(f: &impl ConvexFn<T>, x: T, y: T) -> ExtReal<T> {
    match f.eval(y) {
        ExtReal::Finite(v) => ExtReal::Finite(x * y - v),
        ExtReal::PosInf => ExtReal::NegInf,
        ExtReal::NegInf => ExtReal::PosInf,
    }
}

struct Search<'a, T, F> {
    f: &'a F,
    x: T,
    opts: ConjugateOptions<T>,
    iterations: usize,
}

/// Where a one-directional expansion stopped.
enum Expansion<T> {
    /// `[inside, outside]` brackets the maximizer.
    Bracket(T, T),
    /// Reached a finite endpoint of the domain.
    Endpoint(T),
    /// Ran past the cap towards ±∞; carries the last two points.
    Runaway(T, T),
}

impl<'a, T: Scalar, F: ConvexFn<T>> Search<'a, T, F> {
    fn g(&self, y: T) -> ExtReal<T> {
        objective(self.f, self.x, y)
    }

    fn gp(&self, y: T) -> Option<T> {
        self.f.derivative(y).map(|d| self.x - d)
    }

    fn near(a: T, b: T) -> bool {
        (a - b).abs() <= T::boundary_eps() * T::lit(1e-2) * a.abs().max(T::one())
    }

    /// Moves from `s` in direction `dir` (±1) while `still_rising` holds.
    fn expand(
        &mut self,
        s: T,
        dir: T,
        mut still_rising: impl FnMut(&Self, T, T) -> Result<bool, ConjugateError>,
    ) -> Result<Expansion<T>, ConjugateError> {
        let dom = self.f.domain();
        let edge = if dir > T::zero() {
            dom.hi.value()
        } else {
            dom.lo.value()
        };
        let mut prev = s;
        let mut k = 0;
        let step0 = s.abs().max(T::one());
        loop {
            k += 1;
            self.iterations += 1;
            let next = match edge {
                Some(e) => e - (e - s) * T::lit(0.5).powi(k),
                None => s + dir * step0 * (T::lit(2.0).powi(k) - T::one()),
            };
            if let Some(e) = edge {
                if Self::near(next, e) || next == prev {
                    return Ok(Expansion::Endpoint(e));
                }
            } else if next.abs() > self.opts.cap {
                return Ok(Expansion::Runaway(prev, next));
            }
            if !still_rising(self, prev, next)? {
                return Ok(Expansion::Bracket(prev, next));
            }
            if k as usize > self.opts.max_iter {
                return Ok(match edge {
                    Some(e) => Expansion::Endpoint(e),
                    None => Expansion::Runaway(prev, next),
                });
            }
            prev = next;
        }
    }

    /// Bisection on the (nonincreasing) dual slope `x − f'(y)`.
    fn bisect_slope(&mut self, mut up: T, mut down: T) -> T {
        for _ in 0..self.opts.max_iter {
            self.iterations += 1;
            let mid = T::lit(0.5) * (up + down);
            if mid == up || mid == down {
                break;
            }
            match self.gp(mid) {
                Some(s) if s > T::zero() => up = mid,
                Some(s) if s < T::zero() => down = mid,
                Some(_) => return mid,
                None => {
                    // Derivative unavailable here: fall back to comparing values.
                    let (gu, gd) = (self.g(up), self.g(down));
                    if gu > gd {
                        down = mid
                    } else {
                        up = mid
                    }
                }
            }
        }
        // Pick the better of the two final points.
        if self.g(up) >= self.g(down) {
            up
        } else {
            down
        }
    }

    fn golden(&mut self, mut a: T, mut b: T) -> T {
        let inv_phi = T::lit(0.618_033_988_749_894_9);
        let tol = T::epsilon().sqrt();
        let mut c = b - (b - a) * inv_phi;
        let mut d = a + (b - a) * inv_phi;
        let (mut gc, mut gd) = (self.g(c), self.g(d));
        for _ in 0..self.opts.max_iter {
            self.iterations += 1;
            if (b - a).abs() <= tol * (a.abs() + b.abs()).max(T::one()) * T::lit(1e-3) {
                break;
            }
            if gc >= gd {
                b = d;
                d = c;
                gd = gc;
                c = b - (b - a) * inv_phi;
                gc = self.g(c);
            } else {
                a = c;
                c = d;
                gc = gd;
                d = a + (b - a) * inv_phi;
                gd = self.g(d);
            }
        }
        T::lit(0.5) * (a + b)
    }

    fn check_convex(&self, a: T, m: T, b: T) -> Result<(), ConjugateError> {
        let (fa, fm, fb) = (self.f.eval(a), self.f.eval(m), self.f.eval(b));
        if let (ExtReal::Finite(fa), ExtReal::Finite(fm), ExtReal::Finite(fb)) = (fa, fm, fb) {
            if !(a < m && m < b) {
                return Ok(());
            }
            let w = (m - a) / (b - a);
            let chord = (T::one() - w) * fa + w * fb;
            let slack = T::lit(1e-9) * (fa.abs() + fm.abs() + fb.abs() + T::one());
            if fm > chord + slack {
                return Err(ConjugateError::NonConvexDetected { at: m.as_f64() });
            }
        }
        Ok(())
    }

    fn run(mut self) -> Result<ConjugateResult<T>, ConjugateError> {
        let dom = self.f.domain();
        let s = dom.interior_point();
        if !self.f.eval(s).is_finite() {
            return Err(ConjugateError::EmptyDomain);
        }
        let use_slope = self.gp(s).is_some();
        let (dir, exp) = if use_slope {
            let g0 = self.gp(s).unwrap();
            if g0 == T::zero() {
                return Ok(self.finish(s, None));
            }
            let dir = if g0 > T::zero() { T::one() } else { -T::one() };
            let mut last_slope = g0;
            let exp = self.expand(s, dir, |me, _prev, next| {
                let Some(sl) = me.gp(next) else {
                    return Ok(me.g(next) > ExtReal::NegInf);
                };
                // Slope of a concave objective must not increase along the search.
                let scale = T::lit(1e-9) * (T::one() + last_slope.abs());
                if dir * (sl - last_slope) > scale {
                    return Err(ConjugateError::NonConvexDetected { at: next.as_f64() });
                }
                last_slope = sl;
                Ok(dir * sl > T::zero())
            })?;
            (dir, exp)
        } else {
            let h = s.abs().max(T::one()) * T::lit(1e-3);
            let dir = if self.g(s + h) >= self.g(s - h) || !dom.contains(s - h) {
                T::one()
            } else {
                -T::one()
            };
            let exp = self.expand(s, dir, |me, prev, next| {
                let (gp, gn) = (me.g(prev), me.g(next));
                Ok(gn > gp)
            })?;
            (dir, exp)
        };

        match exp {
            Expansion::Bracket(inside, outside) => {
                let start_side = if dir > T::zero() {
                    s.min(inside)
                } else {
                    s.max(inside)
                };
                let (lo, hi) = if inside < outside {
                    (start_side, outside)
                } else {
                    (outside, start_side)
                };
                let y = if use_slope {
                    if dir > T::zero() {
                        self.bisect_slope(inside, outside)
                    } else {
                        self.bisect_slope(outside, inside)
                    }
                } else {
                    self.golden(lo, hi)
                };
                self.check_convex(lo, y, hi)?;
                let best = self.compare_endpoints(y);
                Ok(self.finish(best, None))
            }
            Expansion::Endpoint(e) => {
                let closed = if dir > T::zero() {
                    dom.hi.is_closed()
                } else {
                    dom.lo.is_closed()
                };
                if closed && self.f.eval(e).is_finite() {
                    Ok(self.finish(e, None))
                } else {
                    // Open endpoint approached with the objective still rising:
                    // supremum is the limit there; report the closest evaluable point.
                    let mut y = e;
                    let mut back = (e - s).abs() * T::lit(1e-12);
                    while !self.g(y).is_finite() || !dom.contains(y) {
                        y = e - dir * back;
                        back = back * T::lit(2.0);
                    }
                    Ok(self.finish(y, None))
                }
            }
            Expansion::Runaway(prev, next) => {
                if dir < T::zero() && self.x == T::zero() {
                    if let Some(lim) = self.f.limit_at_neg_inf() {
                        let value = match lim {
                            ExtReal::Finite(v) => ExtReal::Finite(-v),
                            ExtReal::NegInf => ExtReal::PosInf,
                            ExtReal::PosInf => ExtReal::NegInf,
                        };
                        return Ok(ConjugateResult {
                            value,
                            argmax: None,
                            iterations: self.iterations,
                            residual: T::zero(),
                        });
                    }
                }
                let (gp, gn) = (self.g(prev), self.g(next));
                let settled = match (gp, gn) {
                    (ExtReal::Finite(a), ExtReal::Finite(b)) => {
                        (b - a).abs() <= self.opts.tol * b.abs().max(T::one())
                    }
                    _ => false,
                };
                let value = if settled { gn } else { ExtReal::PosInf };
                Ok(ConjugateResult {
                    value,
                    argmax: None,
                    iterations: self.iterations,
                    residual: T::zero(),
                })
            }
        }
    }

    /// Closed endpoints can beat an interior candidate for non-steep `f`.
    fn compare_endpoints(&self, y: T) -> T {
        let dom = self.f.domain();
        let mut best = y;
        for b in [dom.lo, dom.hi] {
            if let Bound::Closed(e) = b {
                if self.g(e) > self.g(best) {
                    best = e;
                }
            }
        }
        best
    }

    fn finish(&self, y: T, _hint: Option<()>) -> ConjugateResult<T> {
        let residual = self.gp(y).map(|s| s.abs()).unwrap_or(T::zero());
        ConjugateResult {
            value: self.g(y),
            argmax: Some(y),
            iterations: self.iterations,
            residual,
        }
    }
}

/// `sup_y {x y − f(y)}` by bracketed concave maximization.
pub fn legendre_numeric<T: Scalar, F: ConvexFn<T>>(
    f: &F,
    x: T,
    opts: ConjugateOptions<T>,
) -> Result<ConjugateResult<T>, ConjugateError> {
    Search {
        f,
        x,
        opts,
        iterations: 0,
    }
    .run()
}

/// `κ*(0) = −lim_{y→−∞} κ(y)`: `+∞` on the stable branch,
/// `λθ^γ` for `γ < 0, δ = 0` and `(1/δ) log(1 + λδθ^γ)` for `γ < 0, δ > 0`.
pub fn kappa_star_at_zero<T: Scalar>(p: &ParamSet<T>) -> ExtReal<T> {
    match CumulantFn::new(*p).kappa_at_neg_inf() {
        ExtReal::Finite(v) => ExtReal::Finite(-v),
        ExtReal::NegInf => ExtReal::PosInf,
        ExtReal::PosInf => ExtReal::NegInf,
    }
}

fn require_undispersed<T: Scalar>(p: &ParamSet<T>) -> Result<(), ConjugateError> {
    if p.delta() != T::zero() {
        return Err(ConjugateError::RequiresZeroDelta);
    }
    Ok(())
}

/// Maximizer `y*(x) = θ − (x/(λ|γ|))^{1/(γ−1)}` of `xy − κ(y)`, `x > 0`.
fn kappa_star_argmax<T: Scalar>(p: &ParamSet<T>, x: T) -> T {
    p.theta() - (x / (p.lambda() * p.abs_gamma())).powf(T::one() / (p.gamma() - T::one()))
}

/// Closed-form `κ*` for `δ = 0`.
pub fn kappa_star_closed<T: Scalar>(p: &ParamSet<T>, x: T) -> Result<ExtReal<T>, ConjugateError> {
    require_undispersed(p)?;
    if x < T::zero() {
        return Err(ConjugateError::DomainExceeded { x: x.as_f64() });
    }
    if x == T::zero() {
        return Ok(kappa_star_at_zero(p));
    }
    let a = (x / (p.lambda() * p.abs_gamma())).powf(T::one() / (p.gamma() - T::one()));
    let v = x * (p.theta() - a) - p.lambda() * p.sgn() * (p.theta_pow_gamma() - a.powf(p.gamma()));
    Ok(ExtReal::Finite(v))
}

/// `b = (λ|γ|x)^{1/(1−γ)}`.
fn psi_b<T: Scalar>(p: &ParamSet<T>, x: T) -> T {
    (p.lambda() * p.abs_gamma() * x).powf(T::one() / (T::one() - p.gamma()))
}

/// Closed-form `Ψ` for `δ = 0`:
/// `Ψ(x) = θ − (λ|γ|x)^{1/(1−γ)} + λ sgn(γ) x ((λ|γ|x)^{γ/(1−γ)} − θ^γ)`.
pub fn psi<T: Scalar>(p: &ParamSet<T>, x: T) -> Result<ExtReal<T>, ConjugateError> {
    require_undispersed(p)?;
    if x < T::zero() {
        return Ok(ExtReal::PosInf);
    }
    if x == T::zero() {
        return Ok(ExtReal::Finite(p.theta()));
    }
    let g = p.gamma();
    let b = psi_b(p, x);
    let bg = (p.lambda() * p.abs_gamma() * x).powf(g / (T::one() - g));
    Ok(ExtReal::Finite(
        p.theta() - b + p.lambda() * p.sgn() * x * (bg - p.theta_pow_gamma()),
    ))
}

/// `c_γ = γ^{γ/(1−γ)} − γ^{1/(1−γ)}` for `γ ∈ (0,1)` and
/// `(−γ)^{γ/(1−γ)} + (−γ)^{1/(1−γ)}` for `γ < 0`.
pub fn c_gamma<T: Scalar>(gamma: T) -> T {
    let one = T::one();
    let e1 = gamma / (one - gamma);
    let e2 = one / (one - gamma);
    if gamma > T::zero() {
        gamma.powf(e1) - gamma.powf(e2)
    } else {
        let a = -gamma;
        a.powf(e1) + a.powf(e2)
    }
}

/// `Ψ` in the two-branch `c_γ` form,
/// `θ ∓ λθ^γ x ± λ^{1/(1−γ)} c_γ x^{1/(1−γ)}` (upper signs for `γ ∈ (0,1)`).
pub fn psi_c_gamma<T: Scalar>(p: &ParamSet<T>, x: T) -> Result<ExtReal<T>, ConjugateError> {
    require_undispersed(p)?;
    if x < T::zero() {
        return Ok(ExtReal::PosInf);
    }
    let e = T::one() / (T::one() - p.gamma());
    let power = p.lambda().powf(e) * c_gamma(p.gamma()) * x.powf(e);
    let linear = p.lambda() * p.theta_pow_gamma() * x;
    let s = p.sgn();
    Ok(ExtReal::Finite(p.theta() - s * linear + s * power))
}

/// `Ψ'(x)` for `x > 0`, `δ = 0`.
fn psi_deriv<T: Scalar>(p: &ParamSet<T>, x: T) -> T {
    let one = T::one();
    let g = p.gamma();
    let la = p.lambda() * p.abs_gamma();
    let xe = x.powf(g / (one - g));
    let term = p.lambda() * p.sgn() * la.powf(g / (one - g)) - la.powf(one / (one - g));
    xe * term / (one - g) - p.lambda() * p.sgn() * p.theta_pow_gamma()
}

/// Right derivative of `Ψ` at `0`: `−λθ^γ` for `γ ∈ (0,1)`, `−∞` for `γ < 0`.
pub fn psi_right_derivative_at_zero<T: Scalar>(
    p: &ParamSet<T>,
) -> Result<ExtReal<T>, ConjugateError> {
    require_undispersed(p)?;
    if p.theta() <= T::zero() {
        return Err(ConjugateError::RequiresPositiveTheta);
    }
    if p.is_stable_branch() {
        Ok(ExtReal::Finite(-p.lambda() * p.theta_pow_gamma()))
    } else {
        Ok(ExtReal::NegInf)
    }
}

/// `Λ(y) = lim (1/t) log E[exp(y T(t))]` for `δ = 0`.
pub fn lambda_inverse_rate<T: Scalar>(p: &ParamSet<T>, y: T) -> Result<ExtReal<T>, ConjugateError> {
    require_undispersed(p)?;
    let l = p.lambda();
    let tg = p.theta_pow_gamma();
    let inv_g = T::one() / p.gamma();
    if p.is_stable_branch() {
        if y < -l * tg {
            Ok(ExtReal::Finite(-p.theta()))
        } else {
            Ok(ExtReal::Finite(
                (tg + y / l).max(T::zero()).powf(inv_g) - p.theta(),
            ))
        }
    } else if y < l * tg {
        Ok(ExtReal::Finite((tg - y / l).powf(inv_g) - p.theta()))
    } else {
        Ok(ExtReal::PosInf)
    }
}

fn lambda_inverse_deriv<T: Scalar>(p: &ParamSet<T>, y: T) -> Option<T> {
    let l = p.lambda();
    let tg = p.theta_pow_gamma();
    let g = p.gamma();
    let e = T::one() / g - T::one();
    if p.is_stable_branch() {
        if y < -l * tg {
            Some(T::zero())
        } else {
            Some((tg + y / l).powf(e) / (l * g))
        }
    } else if y < l * tg {
        Some(-(tg - y / l).powf(e) / (l * g))
    } else {
        None
    }
}

/// The interval `𝓘` on which `κ^{-1}(−z)` is defined and `Λ` is strictly increasing.
pub fn tilde_psi_domain<T: Scalar>(p: &ParamSet<T>) -> Domain<T> {
    let edge = p.lambda() * p.theta_pow_gamma();
    if p.is_stable_branch() {
        Domain {
            lo: Bound::Open(-edge),
            hi: Bound::Unbounded,
        }
    } else {
        Domain {
            lo: Bound::Unbounded,
            hi: Bound::Open(edge),
        }
    }
}

/// `Ψ̃(z) = −κ^{-1}(−z)` on `𝓘`.
pub fn tilde_psi<T: Scalar>(p: &ParamSet<T>, z: T) -> Result<T, ConjugateError> {
    require_undispersed(p)?;
    if !tilde_psi_domain(p).contains(z) {
        return Err(ConjugateError::DomainExceeded { x: z.as_f64() });
    }
    CumulantFn::new(*p)
        .kappa_inverse(-z)
        .map(|y| -y)
        .map_err(|_| ConjugateError::DomainExceeded { x: z.as_f64() })
}

/// `Ψ̃` as a convex function on `𝓘`.
#[derive(Debug, Clone, Copy)]
pub struct TildePsi<T>(pub ParamSet<T>);

impl<T: Scalar> ConvexFn<T> for TildePsi<T> {
    fn eval(&self, z: T) -> ExtReal<T> {
        match tilde_psi(&self.0, z) {
            Ok(v) => ExtReal::Finite(v),
            Err(_) => ExtReal::PosInf,
        }
    }

    fn domain(&self) -> Domain<T> {
        tilde_psi_domain(&self.0)
    }

    fn derivative(&self, z: T) -> Option<T> {
        // d/dz[−κ^{-1}(−z)] = 1/κ'(κ^{-1}(−z)).
        let k = CumulantFn::new(self.0);
        let y = k.kappa_inverse(-z).ok()?;
        k.kappa_deriv(y, 1).ok().map(|d| T::one() / d)
    }
}

/// Which rate function a [`RateFn`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateKind {
    /// Closed-form `κ*` (`δ = 0`).
    KappaStar,
    /// Closed-form `Ψ` (`δ = 0`).
    Psi,
    /// Closed-form `Λ` (`δ = 0`).
    LambdaInv,
    /// Numerically conjugated `κ*` or `Ψ` (`δ > 0`).
    Numeric(NumericTarget),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NumericTarget {
    KappaStar,
    Psi,
}

/// Convex rate-type function with its effective domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFn<T> {
    pub kind: RateKind,
    pub params: ParamSet<T>,
    pub effective_domain: Domain<T>,
}

impl<T: Scalar> RateFn<T> {
    /// `κ*`: closed form when `δ = 0`, numeric otherwise.
    pub fn kappa_star(p: ParamSet<T>) -> Self {
        let lo = if p.is_stable_branch() {
            Bound::Open(T::zero())
        } else {
            Bound::Closed(T::zero())
        };
        RateFn {
            kind: if p.delta() == T::zero() {
                RateKind::KappaStar
            } else {
                RateKind::Numeric(NumericTarget::KappaStar)
            },
            params: p,
            effective_domain: Domain {
                lo,
                hi: Bound::Unbounded,
            },
        }
    }

    /// `Ψ`: closed form when `δ = 0`, numeric otherwise.
    pub fn psi(p: ParamSet<T>) -> Self {
        RateFn {
            kind: if p.delta() == T::zero() {
                RateKind::Psi
            } else {
                RateKind::Numeric(NumericTarget::Psi)
            },
            params: p,
            effective_domain: Domain {
                lo: Bound::Closed(T::zero()),
                hi: Bound::Unbounded,
            },
        }
    }

    /// `Λ` (`δ = 0` only).
    pub fn lambda_inv(p: ParamSet<T>) -> Result<Self, ConjugateError> {
        require_undispersed(&p)?;
        let effective_domain = if p.is_stable_branch() {
            Domain::real_line()
        } else {
            Domain {
                lo: Bound::Unbounded,
                hi: Bound::Open(p.lambda() * p.theta_pow_gamma()),
            }
        };
        Ok(RateFn {
            kind: RateKind::LambdaInv,
            params: p,
            effective_domain,
        })
    }

    pub fn value(&self, x: T) -> Result<ExtReal<T>, ConjugateError> {
        let p = &self.params;
        match self.kind {
            RateKind::KappaStar => {
                if x < T::zero() {
                    Ok(ExtReal::PosInf)
                } else {
                    kappa_star_closed(p, x)
                }
            }
            RateKind::Psi => psi(p, x),
            RateKind::LambdaInv => lambda_inverse_rate(p, x),
            RateKind::Numeric(NumericTarget::KappaStar) => {
                if x < T::zero() {
                    return Ok(ExtReal::PosInf);
                }
                if x == T::zero() {
                    return Ok(kappa_star_at_zero(p));
                }
                Ok(legendre_numeric(&CumulantFn::new(*p), x, ConjugateOptions::default())?.value)
            }
            RateKind::Numeric(NumericTarget::Psi) => {
                if x < T::zero() {
                    return Ok(ExtReal::PosInf);
                }
                if x == T::zero() {
                    return Ok(ExtReal::Finite(p.theta()));
                }
                // x κ*(1/x) = sup_y {y − x κ(y)}.
                let k = CumulantFn::new(*p);
                let r = legendre_numeric(&k, T::one() / x, ConjugateOptions::default())?;
                Ok(r.value.scale(x))
            }
        }
    }

    /// Point where the rate vanishes, in closed form.
    pub fn zero(&self) -> Option<T> {
        let p = &self.params;
        let mean = CumulantFn::new(*p).mean().ok();
        match self.kind {
            RateKind::KappaStar | RateKind::Numeric(NumericTarget::KappaStar) => mean,
            RateKind::Psi | RateKind::Numeric(NumericTarget::Psi) => {
                if p.theta() == T::zero() {
                    Some(T::zero())
                } else {
                    mean.map(|m| T::one() / m)
                }
            }
            // Λ(0) = 0 but Λ takes negative values; it is not a rate.
            RateKind::LambdaInv => None,
        }
    }

    /// Numerical minimizer, for cross-checking [`RateFn::zero`].
    pub fn argmin_numeric(&self) -> Result<T, ConjugateError> {
        // min f = −sup{0·y − f(y)}.
        let r = legendre_numeric(self, T::zero(), ConjugateOptions::default())?;
        r.argmax.ok_or(ConjugateError::EmptyDomain)
    }
}

impl<T: Scalar> ConvexFn<T> for RateFn<T> {
    fn eval(&self, x: T) -> ExtReal<T> {
        self.value(x).unwrap_or(ExtReal::PosInf)
    }

    fn domain(&self) -> Domain<T> {
        self.effective_domain
    }

    fn derivative(&self, x: T) -> Option<T> {
        let p = &self.params;
        match self.kind {
            RateKind::KappaStar if x > T::zero() => Some(kappa_star_argmax(p, x)),
            RateKind::Psi if x > T::zero() => Some(psi_deriv(p, x)),
            RateKind::LambdaInv => lambda_inverse_deriv(p, x),
            RateKind::Numeric(NumericTarget::KappaStar) if x > T::zero() => {
                legendre_numeric(&CumulantFn::new(*p), x, ConjugateOptions::default())
                    .ok()?
                    .argmax
            }
            _ => None,
        }
    }

    fn limit_at_neg_inf(&self) -> Option<ExtReal<T>> {
        match self.kind {
            RateKind::LambdaInv => {
                if self.params.is_stable_branch() {
                    Some(ExtReal::Finite(-self.params.theta()))
                } else {
                    // (θ^γ − y/λ)^{1/γ} → 0 as y → −∞.
                    Some(ExtReal::Finite(-self.params.theta()))
                }
            }
            _ => None,
        }
    }
}

/// Outcome of [`duality_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct DualityReport<T> {
    /// `max |Ψ(x) − sup_y {xy − Λ(y)}|` over the x grid.
    pub psi_err: T,
    /// `max |Λ(y) − sup_x {xy − Ψ(x)}|` over the y grid.
    pub lambda_err: T,
    pub pass: bool,
}

/// Checks `Ψ = Λ*` and `Λ = Ψ*` on grids.
pub fn duality_check<T: Scalar>(
    p: &ParamSet<T>,
    x_grid: &[T],
    y_grid: &[T],
    tol: T,
) -> Result<DualityReport<T>, ConjugateError> {
    let lam = RateFn::lambda_inv(*p)?;
    let ps = RateFn::psi(*p);
    let opts = ConjugateOptions::default();
    let mut psi_err = T::zero();
    for &x in x_grid {
        let closed = psi(p, x)?;
        let numeric = legendre_numeric(&lam, x, opts)?.value;
        psi_err = psi_err.max(ext_gap(closed, numeric));
    }
    let mut lambda_err = T::zero();
    for &y in y_grid {
        let closed = lambda_inverse_rate(p, y)?;
        let numeric = legendre_numeric(&ps, y, opts)?.value;
        lambda_err = lambda_err.max(ext_gap(closed, numeric));
    }
    Ok(DualityReport {
        psi_err,
        lambda_err,
        pass: psi_err <= tol && lambda_err <= tol,
    })
}

/// Default grids for [`duality_check`]: `x` around the zero of `Ψ`, `y`
/// spanning `𝓘` (and the flat part of `Λ` on the stable branch).
pub fn default_duality_grids<T: Scalar>(p: &ParamSet<T>, n: usize) -> (Vec<T>, Vec<T>) {
    let m = CumulantFn::new(*p).mean().unwrap_or(T::one());
    let zero = T::one() / m;
    let xs = lin_grid(zero * T::lit(0.1), zero * T::lit(5.0), n);
    let edge = p.lambda() * p.theta_pow_gamma();
    let ys = if p.is_stable_branch() {
        lin_grid(-edge * T::lit(1.5), edge * T::lit(3.0) + T::one(), n)
    } else {
        lin_grid(-edge * T::lit(5.0) - T::one(), edge * T::lit(0.9), n)
    };
    (xs, ys)
}

/// Distance between extended reals; `0` when both are the same infinity.
pub fn ext_gap<T: Scalar>(a: ExtReal<T>, b: ExtReal<T>) -> T {
    match (a, b) {
        (ExtReal::Finite(a), ExtReal::Finite(b)) => (a - b).abs(),
        (a, b) if a == b => T::zero(),
        _ => T::infinity(),
    }
}

/// `n` equally spaced points from `start` to `stop` inclusive.
pub fn lin_grid<T: Scalar>(start: T, stop: T, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / T::from_usize(n - 1).unwrap();
            (0..n)
                .map(|i| start + step * T::from_usize(i).unwrap())
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p(g: f64, l: f64, t: f64, d: f64) -> ParamSet<f64> {
        ParamSet::validate(g, l, t, d).unwrap()
    }

    fn quadratic() -> FnConvex<impl Fn(f64) -> f64, impl Fn(f64) -> f64> {
        FnConvex {
            f: |y: f64| 0.5 * y * y,
            df: Some(|y: f64| y),
            domain: Domain::real_line(),
        }
    }

    #[test]
    fn quadratic_is_self_conjugate() {
        let r = legendre_numeric(&quadratic(), 3.0, ConjugateOptions::default()).unwrap();
        assert_relative_eq!(r.value.unwrap(), 4.5, epsilon = 1e-12);
        assert_relative_eq!(r.argmax.unwrap(), 3.0, epsilon = 1e-12);
        assert!(r.residual <= 1e-10);
        // Without a derivative the golden-section path is used.
        let f = FnConvex {
            f: |y: f64| 0.5 * y * y,
            df: None::<fn(f64) -> f64>,
            domain: Domain::real_line(),
        };
        let r = legendre_numeric(&f, -2.0, ConjugateOptions::default()).unwrap();
        assert_relative_eq!(r.value.unwrap(), 2.0, epsilon = 1e-10);
    }

    #[test]
    fn biconjugate_of_quadratic() {
        struct Conj;
        impl ConvexFn<f64> for Conj {
            fn eval(&self, x: f64) -> ExtReal<f64> {
                let f = FnConvex {
                    f: |y: f64| 0.5 * y * y,
                    df: Some(|y: f64| y),
                    domain: Domain::real_line(),
                };
                legendre_numeric(&f, x, ConjugateOptions::default())
                    .unwrap()
                    .value
            }
            fn domain(&self) -> Domain<f64> {
                Domain::real_line()
            }
        }
        for &y in &[-2.0, 0.3, 1.7] {
            let r = legendre_numeric(&Conj, y, ConjugateOptions::default()).unwrap();
            assert_relative_eq!(r.value.unwrap(), 0.5 * y * y, epsilon = 1e-8);
        }
    }

    #[test]
    fn non_convex_input_is_reported() {
        let f = FnConvex {
            f: |y: f64| -0.5 * y * y,
            df: Some(|y: f64| -y),
            domain: Domain::real_line(),
        };
        assert!(matches!(
            legendre_numeric(&f, 1.0, ConjugateOptions::default()),
            Err(ConjugateError::NonConvexDetected { .. })
        ));
    }

    #[test]
    fn linear_growth_diverges() {
        // f(y) = |y| has conjugate +∞ outside [−1, 1].
        let f = FnConvex {
            f: |y: f64| y.abs(),
            df: Some(|y: f64| y.signum()),
            domain: Domain::real_line(),
        };
        let r = legendre_numeric(&f, 2.0, ConjugateOptions::default()).unwrap();
        assert_eq!(r.value, ExtReal::PosInf);
    }

    #[test]
    fn kappa_star_vanishes_at_the_mean() {
        let k = CumulantFn::new(p(0.5, 1.0, 1.0, 0.0));
        let r = legendre_numeric(&k, 0.5, ConjugateOptions::default()).unwrap();
        assert!(r.value.unwrap().abs() < 1e-15);
        assert!(r.argmax.unwrap().abs() < 1e-12);
        assert_eq!(
            kappa_star_closed(&p(0.5, 1.0, 1.0, 0.0), 0.5).unwrap(),
            ExtReal::Finite(0.0)
        );
    }

    #[test]
    fn kappa_star_closed_values() {
        assert_relative_eq!(
            kappa_star_closed(&p(0.5, 1.0, 1.0, 0.0), 1.0)
                .unwrap()
                .unwrap(),
            0.25,
            epsilon = 1e-15
        );
        assert!(kappa_star_closed(&p(0.5, 1.0, 1.0, 0.0), -1.0).is_err());
        assert!(kappa_star_closed(&p(0.5, 1.0, 1.0, 1.0), 1.0).is_err());
        assert_eq!(
            kappa_star_closed(&p(0.5, 1.0, 1.0, 0.0), 0.0).unwrap(),
            ExtReal::PosInf
        );
        // γ < 0: κ*(0) = −inf κ = λθ^γ.
        assert_eq!(
            kappa_star_closed(&p(-1.0, 1.0, 1.0, 0.0), 0.0).unwrap(),
            ExtReal::Finite(1.0)
        );
    }

    #[test]
    fn kappa_star_at_zero_cases() {
        assert_eq!(kappa_star_at_zero(&p(0.5, 1.0, 1.0, 0.0)), ExtReal::PosInf);
        assert_eq!(kappa_star_at_zero(&p(0.5, 1.0, 1.0, 2.0)), ExtReal::PosInf);
        assert_eq!(
            kappa_star_at_zero(&p(-1.0, 2.0, 1.0, 0.0)),
            ExtReal::Finite(2.0)
        );
        assert_relative_eq!(
            kappa_star_at_zero(&p(-1.0, 1.0, 1.0, 1.0)).unwrap(),
            std::f64::consts::LN_2
        );
    }

    /// Brute-force grid supremum, the independent route for δ > 0.
    fn grid_sup(k: &CumulantFn<f64>, x: f64, lo: f64, n: usize) -> f64 {
        let hi = k.y0();
        let mut best = f64::NEG_INFINITY;
        let mut best_i = 0;
        let step = (hi - lo) / n as f64;
        for i in 0..=n {
            let y = lo + step * i as f64;
            if let ExtReal::Finite(v) = k.kappa(y) {
                if x * y - v > best {
                    best = x * y - v;
                    best_i = i;
                }
            }
        }
        // Polish around the best grid point by a finer local grid.
        let centre = lo + step * best_i as f64;
        let fine = step / 1000.0;
        for j in -1000..=1000 {
            let y = centre + fine * j as f64;
            if y <= hi {
                if let ExtReal::Finite(v) = k.kappa(y) {
                    best = best.max(x * y - v);
                }
            }
        }
        best
    }

    #[test]
    fn numeric_conjugate_with_dispersion_matches_grid_supremum() {
        let k = CumulantFn::new(p(0.5, 1.0, 1.0, 1.0));
        let r = legendre_numeric(&k, 1.0, ConjugateOptions::default()).unwrap();
        let oracle = grid_sup(&k, 1.0, -50.0, 1_000_000);
        assert!(
            (r.value.unwrap() - oracle).abs() <= 1e-8,
            "{} vs {oracle}",
            r.value.unwrap()
        );
    }

    #[test]
    fn psi_values() {
        assert_relative_eq!(
            psi(&p(0.5, 1.0, 0.0, 0.0), 1.0).unwrap().unwrap(),
            0.25,
            epsilon = 1e-15
        );
        assert!(psi(&p(0.5, 1.0, 1.0, 0.0), 2.0).unwrap().unwrap().abs() < 1e-15);
        assert_eq!(psi(&p(-1.0, 1.0, 1.0, 0.0), -1.0).unwrap(), ExtReal::PosInf);
        assert_eq!(
            psi(&p(0.5, 1.0, 3.0, 0.0), 0.0).unwrap(),
            ExtReal::Finite(3.0)
        );
        assert_relative_eq!(c_gamma(0.5), 0.25);
    }

    #[test]
    fn psi_forms_agree_on_both_branches() {
        for &(g, l, t) in &[
            (0.5, 1.0, 1.0),
            (0.25, 2.0, 4.0),
            (-1.0, 1.0, 1.0),
            (-2.0, 2.0, 4.0),
            (0.7, 1.0, 0.0),
        ] {
            let q = p(g, l, t, 0.0);
            for &x in &[0.0, 0.01, 0.3, 1.0, 2.5, 10.0] {
                let a = psi(&q, x).unwrap().unwrap();
                let b = psi_c_gamma(&q, x).unwrap().unwrap();
                assert!(
                    (a - b).abs() <= 1e-12 * (1.0 + a.abs()),
                    "γ={g} x={x}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn psi_is_x_kappa_star_of_reciprocal() {
        for &(g, l, t) in &[(0.5, 1.0, 1.0), (-1.0, 2.0, 4.0), (0.75, 2.0, 4.0)] {
            let q = p(g, l, t, 0.0);
            for &x in &[0.05, 0.5, 2.0, 7.0] {
                let lhs = psi(&q, x).unwrap().unwrap();
                let rhs = x * kappa_star_closed(&q, 1.0 / x).unwrap().unwrap();
                assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
            }
        }
    }

    #[test]
    fn psi_theta_shift_identity() {
        let q = p(0.4, 1.5, 2.0, 0.0);
        let q0 = p(0.4, 1.5, 0.0, 0.0);
        for &x in &[0.0, 0.2, 1.0, 3.0] {
            let lhs = psi(&q, x).unwrap().unwrap();
            let rhs = 2.0 + psi(&q0, x).unwrap().unwrap() - 1.5 * 2.0f64.powf(0.4) * x;
            assert_relative_eq!(lhs, rhs, epsilon = 1e-12);
        }
    }

    #[test]
    fn psi_right_derivative() {
        assert_eq!(
            psi_right_derivative_at_zero(&p(0.5, 2.0, 4.0, 0.0)).unwrap(),
            ExtReal::Finite(-4.0)
        );
        assert_eq!(
            psi_right_derivative_at_zero(&p(-1.0, 1.0, 1.0, 0.0)).unwrap(),
            ExtReal::NegInf
        );
        let q = p(0.5, 1.0, 1.0, 0.0);
        for h in [1e-4, 1e-6] {
            let fd = (psi(&q, h).unwrap().unwrap() - psi(&q, 0.0).unwrap().unwrap()) / h;
            assert!((fd + 1.0).abs() < 1e-3, "{fd}");
        }
        let q = p(-1.0, 1.0, 1.0, 0.0);
        let fd = (psi(&q, 1e-8).unwrap().unwrap() - 1.0) / 1e-8;
        assert!(fd < -1e3);
    }

    #[test]
    fn lambda_inverse_values() {
        let q = p(0.5, 1.0, 1.0, 0.0);
        assert_relative_eq!(
            lambda_inverse_rate(&q, 3.0).unwrap().unwrap(),
            15.0,
            epsilon = 1e-12
        );
        assert_eq!(lambda_inverse_rate(&q, 0.0).unwrap(), ExtReal::Finite(0.0));
        assert_eq!(
            lambda_inverse_rate(&q, -5.0).unwrap(),
            ExtReal::Finite(-1.0)
        );
        assert_eq!(
            lambda_inverse_rate(&p(-1.0, 1.0, 1.0, 0.0), 2.0).unwrap(),
            ExtReal::PosInf
        );
        assert_relative_eq!(
            lambda_inverse_rate(&p(0.5, 1.0, 0.0, 0.0), 4.0)
                .unwrap()
                .unwrap(),
            16.0
        );
        assert_eq!(
            lambda_inverse_rate(&p(0.5, 1.0, 0.0, 0.0), -4.0).unwrap(),
            ExtReal::Finite(0.0)
        );
    }

    #[test]
    fn tilde_psi_inverts_kappa() {
        let q = p(0.5, 1.0, 1.0, 0.0);
        assert_eq!(tilde_psi(&q, 0.0).unwrap(), 0.0);
        let v = tilde_psi(&q, 15.0).unwrap();
        assert_relative_eq!(v, 255.0, epsilon = 1e-10);
        assert_relative_eq!(
            CumulantFn::new(q).kappa(-v).unwrap(),
            -15.0,
            epsilon = 1e-12
        );
        assert!(matches!(
            tilde_psi(&p(-1.0, 1.0, 1.0, 0.0), 2.0),
            Err(ConjugateError::DomainExceeded { .. })
        ));
        // On 𝓘, Ψ̃ coincides with Λ.
        for q in [p(0.5, 1.0, 1.0, 0.0), p(-1.5, 2.0, 3.0, 0.0)] {
            for &z in &[-0.5, 0.0, 0.3] {
                assert_relative_eq!(
                    tilde_psi(&q, z).unwrap(),
                    lambda_inverse_rate(&q, z).unwrap().unwrap(),
                    max_relative = 1e-12
                );
            }
        }
    }

    #[test]
    fn tilde_psi_conjugates_to_psi() {
        for q in [
            p(0.5, 1.0, 1.0, 0.0),
            p(-1.0, 1.0, 1.0, 0.0),
            p(0.3, 2.0, 4.0, 0.0),
        ] {
            let zero = 1.0 / CumulantFn::new(q).mean().unwrap();
            for x in lin_grid(0.1 * zero, 4.0 * zero, 12) {
                let r = legendre_numeric(&TildePsi(q), x, ConjugateOptions::default()).unwrap();
                let ps = psi(&q, x).unwrap().unwrap();
                assert!((r.value.unwrap() - ps).abs() <= 1e-6, "{q:?} x={x}");
            }
        }
    }

    #[test]
    fn duality_on_both_branches() {
        for q in [p(0.5, 1.0, 1.0, 0.0), p(-1.0, 1.0, 1.0, 0.0)] {
            let (xs, ys) = default_duality_grids(&q, 50);
            let rep = duality_check(&q, &xs, &ys, 1e-6).unwrap();
            assert!(rep.pass, "{q:?}: {rep:?}");
        }
    }

    #[test]
    fn rate_fn_zeros_match_numeric_argmin() {
        for q in [
            p(0.5, 1.0, 1.0, 0.0),
            p(-1.0, 2.0, 4.0, 0.0),
            p(0.5, 1.0, 1.0, 1.0),
        ] {
            for r in [RateFn::kappa_star(q), RateFn::psi(q)] {
                let z = r.zero().unwrap();
                let m = r.argmin_numeric().unwrap();
                assert!((z - m).abs() <= 1e-8, "{:?}: {z} vs {m}", r.kind);
            }
        }
    }

    #[test]
    fn dispersion_lowers_kappa_star() {
        let base = RateFn::kappa_star(p(0.5, 1.0, 1.0, 0.0));
        for &d in &[0.5, 1.0, 2.0] {
            let mixed = RateFn::kappa_star(p(0.5, 1.0, 1.0, d));
            for x in lin_grid(0.05, 3.0, 15) {
                let a = mixed.value(x).unwrap().unwrap();
                let b = base.value(x).unwrap().unwrap();
                assert!(a <= b + 1e-10, "δ={d} x={x}: {a} > {b}");
            }
        }
    }

    #[test]
    fn numeric_psi_for_dispersed_parameters() {
        let q = p(-0.5, 1.0, 2.0, 0.7);
        let r = RateFn::psi(q);
        let zero = r.zero().unwrap();
        assert!(r.value(zero).unwrap().unwrap().abs() < 1e-10);
        assert!(r.value(2.0 * zero).unwrap().unwrap() > 0.0);
        assert_eq!(r.value(0.0).unwrap(), ExtReal::Finite(2.0));
    }
}
