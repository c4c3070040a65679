//! Cumulants, Legendre transforms, large-deviation rate functions and
//! samplers for the four-parameter tempered subordinator family
//! `S_(γ,λ,θ,δ)`, its inverse (first-passage) process `T(t)` and time
//! changes `X(T(t))` of independent Lévy processes.
//!
//! The analytic layers (`params`, `cumulant`, `conjugate`, `mlf`,
//! `timechange`) are generic over the floating-point type through
//! [`Scalar`]; the Monte Carlo layers (`simulate`, `ldp`) work in `f64`.
//! Concrete aliases for the common instantiations live at the crate root.

// Guards like `!(x > 0.0)` are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conjugate;
pub mod cumulant;
pub mod ext;
pub mod ldp;
pub mod mlf;
pub mod params;
pub mod scalar;
pub mod simulate;
pub mod stats;
pub mod timechange;

pub use conjugate::{
    ConjugateError, ConjugateOptions, ConjugateResult, ConvexFn, Domain, RateFn, RateKind,
};
pub use cumulant::{Closure, CumulantError, CumulantFn};
pub use ext::ExtReal;
pub use ldp::{LdpError, LdpEstimate, ScalingMode, ScalingSpec, ThetaLimit};
pub use mlf::{MlfBranch, MlfError, MlfEval};
pub use params::{ParamError, ParamSet, Regime};
pub use scalar::Scalar;
pub use simulate::{PassageOptions, PassageResult, PathSample, RngStream, SimError};
pub use timechange::{HRateFn, LevyExponent, ThetaRegime, TimeChangeError};

pub type ParamSet64 = ParamSet<f64>;
pub type ParamSet32 = ParamSet<f32>;
pub type CumulantFn64 = CumulantFn<f64>;
pub type CumulantFn32 = CumulantFn<f32>;
pub type RateFn64 = RateFn<f64>;
pub type ExtReal64 = ExtReal<f64>;
pub type LevyExponent64 = LevyExponent<f64>;
pub type HRateFn64 = HRateFn<f64>;
