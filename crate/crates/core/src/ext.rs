use std::fmt;

use crate::scalar::Scalar;

/// Extended real value. Infinite results are tagged rather than carried as
/// IEEE infinities so that callers must handle them explicitly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal<T> {
    Finite(T),
    PosInf,
    NegInf,
}

impl<T: Scalar> ExtReal<T> {
    pub fn zero() -> Self {
        ExtReal::Finite(T::zero())
    }

    /// Wraps a float, mapping IEEE infinities to the tagged variants.
    /// NaN is a programming error here.
    pub fn from_float(x: T) -> Self {
        debug_assert!(!x.is_nan(), "NaN cannot be an extended real");
        if x == T::infinity() {
            ExtReal::PosInf
        } else if x == T::neg_infinity() {
            ExtReal::NegInf
        } else {
            ExtReal::Finite(x)
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn is_pos_inf(&self) -> bool {
        matches!(self, ExtReal::PosInf)
    }

    pub fn finite(self) -> Option<T> {
        match self {
            ExtReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    /// Finite value, panicking otherwise. Intended for tests and for call
    /// sites that have already established finiteness.
    #[track_caller]
    pub fn unwrap(self) -> T {
        match self {
            ExtReal::Finite(x) => x,
            other => panic!("expected a finite value, got {other:?}"),
        }
    }

    /// IEEE view, for output formatting and plotting.
    pub fn to_float(self) -> T {
        match self {
            ExtReal::Finite(x) => x,
            ExtReal::PosInf => T::infinity(),
            ExtReal::NegInf => T::neg_infinity(),
        }
    }

    pub fn scale(self, c: T) -> Self {
        debug_assert!(c >= T::zero());
        match self {
            ExtReal::Finite(x) => ExtReal::Finite(x * c),
            inf if c > T::zero() => inf,
            _ => ExtReal::zero(),
        }
    }

    /// Sum where `+∞ + (−∞)` is treated as `+∞` (the convention for
    /// sums of rate functions, which are never `−∞`).
    #[allow(clippy::should_implement_trait)]
    pub fn add(self, other: Self) -> Self {
        match (self, other) {
            (ExtReal::PosInf, _) | (_, ExtReal::PosInf) => ExtReal::PosInf,
            (ExtReal::NegInf, _) | (_, ExtReal::NegInf) => ExtReal::NegInf,
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
        }
    }
}

impl<T: Scalar> PartialOrd for ExtReal<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.to_float().partial_cmp(&other.to_float())
    }
}

impl<T: Scalar> fmt::Display for ExtReal<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(x) => write!(f, "{x}"),
            ExtReal::PosInf => f.write_str("inf"),
            ExtReal::NegInf => f.write_str("-inf"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinities_round_trip_through_floats() {
        assert_eq!(ExtReal::from_float(f64::INFINITY), ExtReal::PosInf);
        assert_eq!(ExtReal::<f64>::NegInf.to_float(), f64::NEG_INFINITY);
        assert_eq!(ExtReal::from_float(2.5f32), ExtReal::Finite(2.5));
    }

    #[test]
    fn addition_absorbs_into_plus_infinity() {
        let a = ExtReal::Finite(1.0f64);
        assert_eq!(a.add(ExtReal::PosInf), ExtReal::PosInf);
        assert_eq!(a.add(ExtReal::Finite(2.0)), ExtReal::Finite(3.0));
        assert!(ExtReal::Finite(1.0f64) < ExtReal::PosInf);
        assert_eq!(ExtReal::<f64>::PosInf.scale(0.0), ExtReal::Finite(0.0));
    }
}
