//! Samplers for `S(t)`, the first-passage time `T(t) = inf{u : S(u) > t}`
//! and time-changed values `X(T(t))`.
//!
//! Increments are drawn from their exact law:
//!
//! * `γ < 0, δ = 0`: compound Poisson, `Poisson(dt λθ^γ)` jumps, each
//!   `Gamma(shape −γ, rate θ)`. The jump sum is drawn as a single Gamma.
//! * `γ ∈ (0,1), θ = 0, δ = 0`: positive stable with Laplace exponent
//!   `dt λ s^γ` (Kanter's representation).
//! * `γ ∈ (0,1), θ > 0, δ = 0`: the stable draw accepted with probability
//!   `e^{−θX}`. The step is split so that `dt λθ^γ ≤ 1`, which keeps the
//!   acceptance rate above `e^{−1}`.
//! * `δ > 0`: `G ~ Gamma(shape dt/δ, scale λδ)`, then a unit-time draw with
//!   intensity `G` and `δ = 0`. Averaging `e^{G κ_1(y)}` over `G` gives
//!   `(1 − λδ κ_1(y))^{−dt/δ}`, which is `e^{dt κ(y)}`, so grid increments of
//!   a path are exact too.
//!
//! Every replicate owns a ChaCha8 stream `(seed, stream_id)`; parallel
//! helpers collect in replicate order, so results do not depend on the
//! number of threads.

use rand::distr::Open01;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::gamma as gamma_fn;
use thiserror::Error;

use crate::params::{ParamSet, Regime};
use crate::timechange::LevyExponent;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("tilting rejection exceeded {attempts} attempts (step too large?)")]
    RejectionBudgetExceeded { attempts: u64 },
    #[error("first passage above {level} not reached by the safety horizon {horizon}")]
    HorizonExceeded { level: f64, horizon: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Attempts allowed per tempered sub-step; acceptance is at least `e^{−1}`.
const MAX_ATTEMPTS: u64 = 10_000;
/// Streams reserved per replicate (time process, Lévy process, spare).
const LANES: u64 = 4;

/// Reproducible random stream identified by `(seed, stream_id)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            rng,
        }
    }

    /// Stream for lane `lane` of replicate `replicate`.
    pub fn replicate(seed: u64, replicate: u64, lane: u64) -> Self {
        assert!(lane < LANES, "lane out of range");
        Self::new(seed, replicate * LANES + lane)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Unvalidated copy of the parameters for the inner loops.
#[derive(Debug, Clone, Copy)]
struct Raw {
    gamma: f64,
    lambda: f64,
    theta: f64,
    delta: f64,
}

impl From<&ParamSet<f64>> for Raw {
    fn from(p: &ParamSet<f64>) -> Self {
        Raw {
            gamma: p.gamma(),
            lambda: p.lambda(),
            theta: p.theta(),
            delta: p.delta(),
        }
    }
}

/// Positive stable variable with `E[e^{−sX}] = e^{−c s^γ}`.
pub fn positive_stable<R: Rng + ?Sized>(gamma: f64, c: f64, rng: &mut R) -> f64 {
    if gamma == 0.5 {
        // Lévy law: c²/(2Z²) has Laplace transform e^{−c√s}.
        let z: f64 = StandardNormal.sample(rng);
        return c * c / (2.0 * z * z);
    }
    let u = std::f64::consts::PI * rng.sample::<f64, _>(Open01);
    let e: f64 = Exp1.sample(rng);
    let g = gamma;
    let x = (g * u).sin() / u.sin().powf(1.0 / g) * (((1.0 - g) * u).sin() / e).powf((1.0 - g) / g);
    c.powf(1.0 / g) * x
}

fn tempered_stable<R: Rng + ?Sized>(
    gamma: f64,
    c: f64,
    theta: f64,
    rng: &mut R,
) -> Result<f64, SimError> {
    for _ in 0..MAX_ATTEMPTS {
        let x = positive_stable(gamma, c, rng);
        // Accept with probability e^{−θx}: compare against an Exp(1) draw.
        let e: f64 = Exp1.sample(rng);
        if e > theta * x {
            return Ok(x);
        }
    }
    Err(SimError::RejectionBudgetExceeded {
        attempts: MAX_ATTEMPTS,
    })
}

fn gamma_draw<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    Gamma::new(shape, scale)
        .expect("positive gamma parameters")
        .sample(rng)
}

fn poisson_draw<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let n: f64 = Poisson::new(mean)
        .expect("positive Poisson mean")
        .sample(rng);
    n as u64
}

fn draw<R: Rng + ?Sized>(p: Raw, dt: f64, rng: &mut R) -> Result<f64, SimError> {
    if p.delta > 0.0 {
        let g = gamma_draw(dt / p.delta, p.lambda * p.delta, rng);
        if g == 0.0 {
            return Ok(0.0);
        }
        return draw(
            Raw {
                lambda: g,
                delta: 0.0,
                ..p
            },
            1.0,
            rng,
        );
    }
    if p.gamma < 0.0 {
        let n = poisson_draw(dt * p.lambda * p.theta.powf(p.gamma), rng);
        if n == 0 {
            return Ok(0.0);
        }
        return Ok(gamma_draw(n as f64 * -p.gamma, 1.0 / p.theta, rng));
    }
    if p.theta == 0.0 {
        return Ok(positive_stable(p.gamma, dt * p.lambda, rng));
    }
    let mass = dt * p.lambda * p.theta.powf(p.gamma);
    let pieces = mass.ceil().max(1.0) as u64;
    let c = dt * p.lambda / pieces as f64;
    let mut sum = 0.0;
    for _ in 0..pieces {
        sum += tempered_stable(p.gamma, c, p.theta, rng)?;
    }
    Ok(sum)
}

fn check_positive(name: &str, v: f64) -> Result<(), SimError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(SimError::InvalidArgument(format!(
            "{name} must be finite and > 0, got {v}"
        )))
    }
}

/// One draw of `S(dt)`.
pub fn sample_increment<R: Rng + ?Sized>(
    p: &ParamSet<f64>,
    dt: f64,
    rng: &mut R,
) -> Result<f64, SimError> {
    check_positive("dt", dt)?;
    draw(Raw::from(p), dt, rng)
}

/// Grid-sampled (or, for compound Poisson, exactly jump-recorded) path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// `(time, size)` of every jump, for the compound Poisson regime only.
    pub exact_jumps: Option<Vec<(f64, f64)>>,
}

impl PathSample {
    /// Right-continuous value at `t`.
    pub fn value_at(&self, t: f64) -> f64 {
        let i = self.times.partition_point(|&s| s <= t);
        self.values[i.saturating_sub(1)]
    }
}

pub fn simulate_path<R: Rng + ?Sized>(
    p: &ParamSet<f64>,
    horizon: f64,
    step: f64,
    rng: &mut R,
) -> Result<PathSample, SimError> {
    check_positive("step", step)?;
    check_positive("horizon", horizon)?;
    if step > horizon {
        return Err(SimError::InvalidArgument(format!(
            "step {step} exceeds horizon {horizon}"
        )));
    }
    if p.regime() == Regime::GammaCompoundPoisson {
        let rate = p.lambda() * p.theta_pow_gamma();
        let mut times = vec![0.0];
        let mut values = vec![0.0];
        let mut jumps = Vec::new();
        let mut now = 0.0;
        let mut level = 0.0;
        loop {
            let wait: f64 = Exp1.sample(rng);
            now += wait / rate;
            if now > horizon {
                break;
            }
            let size = gamma_draw(-p.gamma(), 1.0 / p.theta(), rng);
            level += size;
            jumps.push((now, size));
            times.push(now);
            values.push(level);
        }
        times.push(horizon);
        values.push(level);
        return Ok(PathSample {
            times,
            values,
            exact_jumps: Some(jumps),
        });
    }
    let raw = Raw::from(p);
    let n = (horizon / step).ceil() as usize;
    let mut times = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    times.push(0.0);
    values.push(0.0);
    let mut level = 0.0;
    for k in 1..=n {
        let t = if k == n { horizon } else { k as f64 * step };
        level += draw(raw, t - times[k - 1], rng)?;
        times.push(t);
        values.push(level);
    }
    Ok(PathSample {
        times,
        values,
        exact_jumps: None,
    })
}

/// Estimated first-passage time above `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PassageResult {
    pub t: f64,
    pub t_hat: f64,
    /// `0` for exact sampling, otherwise the grid step: the true passage
    /// time lies in `(t_hat − bias_bound, t_hat]`.
    pub bias_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PassageOptions {
    /// Give up after this multiple of the expected passage time.
    pub horizon_factor: f64,
}

impl Default for PassageOptions {
    fn default() -> Self {
        PassageOptions {
            horizon_factor: 50.0,
        }
    }
}

/// Typical size of `T(t)`: `t/κ'(0)` when `θ > 0`, and the mean
/// `t^γ/(λ Γ(1+γ))` of the inverse stable subordinator when `θ = 0`.
pub fn passage_scale(p: &ParamSet<f64>, t: f64) -> f64 {
    if p.theta() > 0.0 {
        let mean = p.lambda() * p.abs_gamma() * p.theta().powf(p.gamma() - 1.0);
        t / mean
    } else {
        t.powf(p.gamma()) / (p.lambda() * gamma_fn(1.0 + p.gamma()))
    }
}

pub fn inverse_passage<R: Rng + ?Sized>(
    p: &ParamSet<f64>,
    t: f64,
    step: f64,
    rng: &mut R,
    opts: PassageOptions,
) -> Result<PassageResult, SimError> {
    check_positive("t", t)?;
    check_positive("step", step)?;
    let horizon = opts.horizon_factor * passage_scale(p, t) + 100.0 * step;
    let exceeded = || SimError::HorizonExceeded { level: t, horizon };
    if p.regime() == Regime::GammaCompoundPoisson {
        let rate = p.lambda() * p.theta_pow_gamma();
        let (shape, scale) = (-p.gamma(), 1.0 / p.theta());
        let mut now = 0.0;
        let mut level = 0.0;
        while level <= t {
            let wait: f64 = Exp1.sample(rng);
            now += wait / rate;
            if now > horizon {
                return Err(exceeded());
            }
            level += gamma_draw(shape, scale, rng);
        }
        return Ok(PassageResult {
            t,
            t_hat: now,
            bias_bound: 0.0,
        });
    }
    let raw = Raw::from(p);
    let max_steps = (horizon / step).ceil() as u64;
    let mut level = 0.0;
    for k in 1..=max_steps {
        level += draw(raw, step, rng)?;
        if level > t {
            return Ok(PassageResult {
                t,
                t_hat: k as f64 * step,
                bias_bound: step,
            });
        }
    }
    Err(exceeded())
}

/// Draw of `X(s)` for a Lévy process with a built-in sampler.
pub fn sample_levy<R: Rng + ?Sized>(
    levy: &LevyExponent<f64>,
    s: f64,
    rng: &mut R,
) -> Result<f64, SimError> {
    if !(s >= 0.0) {
        return Err(SimError::InvalidArgument(format!(
            "time must be ≥ 0, got {s}"
        )));
    }
    match levy {
        LevyExponent::Drift { mu } => Ok(mu * s),
        LevyExponent::BrownianDrift { mu, sigma } => {
            let z: f64 = StandardNormal.sample(rng);
            Ok(mu * s + sigma * s.sqrt() * z)
        }
        LevyExponent::CompoundPoissonExp { rate, mean } => {
            let n = poisson_draw(rate * s, rng);
            Ok(if n == 0 {
                0.0
            } else {
                gamma_draw(n as f64, *mean, rng)
            })
        }
        LevyExponent::Custom(c) => Err(SimError::InvalidArgument(format!(
            "Lévy exponent '{}' has no sampler",
            c.name
        ))),
    }
}

/// `X(T(t))` with `T` and `X` driven by distinct streams.
pub fn sample_time_changed(
    levy: &LevyExponent<f64>,
    p: &ParamSet<f64>,
    t: f64,
    step: f64,
    time_rng: &mut RngStream,
    levy_rng: &mut RngStream,
    opts: PassageOptions,
) -> Result<f64, SimError> {
    if time_rng.seed() == levy_rng.seed() && time_rng.stream_id() == levy_rng.stream_id() {
        return Err(SimError::InvalidArgument(
            "time and Lévy processes must use distinct streams".into(),
        ));
    }
    let passage = inverse_passage(p, t, step, time_rng, opts)?;
    sample_levy(levy, passage.t_hat, levy_rng)
}

/// `f(i)` for `i in 0..n`, evaluated in parallel and returned in order.
pub fn par_map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..n as u64).into_par_iter().map(f).collect()
}

/// `n` independent draws of `S(dt)`, replicate `i` on stream `(seed, i)`.
pub fn sample_increments(
    p: &ParamSet<f64>,
    dt: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>, SimError> {
    check_positive("dt", dt)?;
    let raw = Raw::from(p);
    par_map_indexed(n, |i| draw(raw, dt, &mut RngStream::replicate(seed, i, 0)))
        .into_iter()
        .collect()
}

pub fn sample_passages(
    p: &ParamSet<f64>,
    t: f64,
    step: f64,
    n: usize,
    seed: u64,
    opts: PassageOptions,
) -> Result<Vec<PassageResult>, SimError> {
    par_map_indexed(n, |i| {
        inverse_passage(p, t, step, &mut RngStream::replicate(seed, i, 0), opts)
    })
    .into_iter()
    .collect()
}

pub fn sample_time_changed_many(
    levy: &LevyExponent<f64>,
    p: &ParamSet<f64>,
    t: f64,
    step: f64,
    n: usize,
    seed: u64,
    opts: PassageOptions,
) -> Result<Vec<f64>, SimError> {
    par_map_indexed(n, |i| {
        sample_time_changed(
            levy,
            p,
            t,
            step,
            &mut RngStream::replicate(seed, i, 0),
            &mut RngStream::replicate(seed, i, 1),
            opts,
        )
    })
    .into_iter()
    .collect()
}
