//! Pointwise convex conjugation of Young functions.
//!
//! The complementary function is the Legendre transform in the second
//! argument, computed per point by golden-section search on the concave
//! objective t -> s*t - M(x, t) after a geometric bracket growth. The
//! conjugate density is the generalized right-inverse of the density, and
//! the generalized inverse of M itself comes from monotone bisection.

use crate::geometry::Point;
use crate::phi::{PhiFunction, PhiError};
use crate::search::golden_max;
use std::sync::Arc;
use thiserror::Error;

/// Bracket growth cap: past this the objective is treated as never turning.
const GROWTH_CAP: f64 = 1e160;
/// Stopping tolerance for the interior search, relative and absolute.
const SEARCH_TOL: f64 = 1e-10;
const MAX_ITER: u32 = 400;

#[derive(Debug, Error)]
pub enum ConjugateError {
    #[error("evaluation overflow at s = {s}")]
    Overflow { s: f64 },
    #[error("conjugate is unbounded at s = {s}")]
    Unbounded { s: f64 },
    #[error("argument {t} is out of the representable range")]
    OutOfRange { t: f64 },
}

impl From<PhiError> for ConjugateError {
    fn from(e: PhiError) -> Self {
        match e {
            PhiError::Overflow { s } => ConjugateError::Overflow { s },
            PhiError::InvalidParameter { detail, .. } => {
                // Conjugation only ever feeds nonnegative arguments; a
                // parameter error at this level is a caller bug.
                panic!("invalid parameter during conjugation: {detail}")
            }
        }
    }
}

/// Value of the complementary function at one (x, s), with search metadata.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct ConjugateResult {
    /// sup over t of s*t - M(x, t); `INFINITY` when the sup does not turn.
    pub value: f64,
    pub argmax_t: f64,
    pub search_interval: (f64, f64),
    pub iterations: u32,
    pub unbounded: bool,
}

/// Conjugate of a scalar convex function; the engine behind
/// [`conjugate_eval`], exposed so test oracles can reuse it on closures.
pub fn conjugate_scalar<F: Fn(f64) -> f64>(m: F, s: f64) -> ConjugateResult {
    debug_assert!(s >= 0.0);
    let objective = |t: f64| {
        let v = m(t);
        if v.is_finite() {
            s * t - v
        } else {
            f64::NEG_INFINITY
        }
    };
    if s == 0.0 {
        // sup of -M is attained at 0.
        return ConjugateResult {
            value: 0.0,
            argmax_t: 0.0,
            search_interval: (0.0, 0.0),
            iterations: 0,
            unbounded: false,
        };
    }
    // Grow the right endpoint until the objective has turned over.
    let mut t_hi = 1.0;
    let mut f_half = objective(0.5);
    let mut f_hi = objective(1.0);
    while f_hi >= f_half {
        t_hi *= 2.0;
        if t_hi > GROWTH_CAP {
            return ConjugateResult {
                value: f64::INFINITY,
                argmax_t: f64::INFINITY,
                search_interval: (0.0, t_hi),
                iterations: 0,
                unbounded: true,
            };
        }
        f_half = f_hi;
        f_hi = objective(t_hi);
    }
    let r = golden_max(objective, 0.0, t_hi, SEARCH_TOL, SEARCH_TOL, MAX_ITER);
    // t = 0 is always admissible, so the sup is at least 0.
    let (value, argmax_t) = if r.fx >= 0.0 { (r.fx, r.x) } else { (0.0, 0.0) };
    ConjugateResult {
        value,
        argmax_t,
        search_interval: (0.0, t_hi),
        iterations: r.iterations,
        unbounded: false,
    }
}

/// Evaluate the complementary function of `phi` at (x, s).
pub fn conjugate_eval(phi: &PhiFunction, x: Point, s: f64) -> ConjugateResult {
    conjugate_scalar(|t| phi.eval(x, t), s)
}

/// Generalized right-inverse of the density: sup { v : a(x, v) <= s },
/// found by monotone bisection with geometric bracket growth.
pub fn conjugate_density(phi: &PhiFunction, x: Point, s: f64) -> Result<f64, ConjugateError> {
    debug_assert!(s >= 0.0);
    // Overflowing density values compare as "above s", which is exactly what
    // the sup needs, so overflow never aborts the search.
    let below = |v: f64| -> bool {
        match phi.eval_density(x, v) {
            Ok(a) => a <= s,
            Err(_) => false,
        }
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    while below(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > GROWTH_CAP {
            return Ok(f64::INFINITY);
        }
    }
    for _ in 0..200 {
        if hi - lo <= 1e-12 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if below(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Generalized inverse inf { s >= 0 : M(x, s) >= t } by monotone bisection.
/// Flat segments resolve to the left endpoint of the preimage.
pub fn inverse_eval(phi: &PhiFunction, x: Point, t: f64) -> Result<f64, ConjugateError> {
    debug_assert!(t >= 0.0);
    if t == 0.0 {
        return Ok(0.0);
    }
    // Overflow counts as M >= t when growing the bracket.
    let reaches = |s: f64| phi.eval(x, s) >= t;
    let mut lo = 0.0;
    let mut hi = 1.0;
    while !reaches(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > GROWTH_CAP {
            return Err(ConjugateError::OutOfRange { t });
        }
    }
    for _ in 0..200 {
        if hi - lo <= 1e-12 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if reaches(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// M(x, u) + conj(x, v) - u v. Nonnegative up to tolerance, and zero at the
/// equality witnesses v = a(x, u) and u = a*(x, v).
pub fn young_gap(phi: &PhiFunction, x: Point, u: f64, v: f64) -> Result<f64, ConjugateError> {
    debug_assert!(u >= 0.0 && v >= 0.0);
    let mu = phi.eval(x, u);
    if !mu.is_finite() {
        return Err(ConjugateError::Overflow { s: u });
    }
    let conj = conjugate_eval(phi, x, v);
    if conj.unbounded {
        return Err(ConjugateError::Unbounded { s: v });
    }
    Ok(mu + conj.value - u * v)
}

/// The complementary function as a Young function in its own right, with the
/// conjugate density as its density. Values are computed on demand.
pub fn conjugate_phi(phi: &PhiFunction) -> PhiFunction {
    let desc = format!("conjugate({phi})");
    let base = phi.clone();
    let base_density = phi.clone();
    let density = Arc::new(move |x: Point, s: f64| {
        conjugate_density(&base_density, x, s).unwrap_or(f64::INFINITY)
    });
    PhiFunction::custom(
        move |x, s| conjugate_eval(&base, x, s).value,
        Some(density),
        &desc,
    )
}
