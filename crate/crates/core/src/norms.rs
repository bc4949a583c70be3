//! Luxemburg norm by monotone bisection, a computable Orlicz-norm
//! surrogate, and the norm-level inequality checks built on them.
//!
//! The bisection works on the nonincreasing map lambda -> modular(u, lambda)
//! and returns the upper bracket end, so a converged result always satisfies
//! modular(u, value) <= 1 on the same quadrature it was computed with.

use crate::conjugate::{conjugate_density, conjugate_phi, inverse_eval};
use crate::geometry::{BoxRegion, Point};
use crate::grid::{integrate_product, integrate_product_abs, modular, Domain, GridFunction};
use crate::phi::PhiFunction;
use crate::search::golden_min;
use serde::Serialize;
use thiserror::Error;

/// Default relative tolerance on lambda.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Default refinement doublings inside norm computations.
pub const DEFAULT_REFINEMENTS: usize = 4;
const MAX_BISECT: u32 = 200;
/// Bracket growth cap on lambda. Past 2^128 the values lambda^-p underflow
/// toward subnormals and erase the refinement-growth signature, so any
/// bracket that gets this far is treated as having no finite lambda.
const LAMBDA_CAP: f64 = 3.402823669209385e38; // 2^128

#[derive(Debug, Error)]
pub enum NormError {
    #[error("norm not evaluable: {0}")]
    NotEvaluable(String),
    #[error("surrogate search failed: {0}")]
    SurrogateSearchFailed(String),
    #[error("domain mismatch between functions")]
    DomainMismatch,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormStatus {
    Converged,
    ZeroFunction,
    NoFiniteLambda,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormResult {
    pub value: f64,
    pub bracket: (f64, f64),
    pub iterations: u32,
    pub modular_at_value: f64,
    pub status: NormStatus,
}

impl NormResult {
    pub fn converged(&self) -> bool {
        self.status == NormStatus::Converged
    }

    /// Norm value with the zero convention; infinity when not in the space.
    pub fn value_or_inf(&self) -> f64 {
        match self.status {
            NormStatus::NoFiniteLambda => f64::INFINITY,
            _ => self.value,
        }
    }
}

pub fn luxemburg_norm(phi: &PhiFunction, u: &GridFunction, tol: f64) -> NormResult {
    luxemburg_norm_with(phi, u, tol, DEFAULT_REFINEMENTS)
}

/// inf { lambda > 0 : modular(u, lambda) <= 1 } by bracketing and bisection.
pub fn luxemburg_norm_with(
    phi: &PhiFunction,
    u: &GridFunction,
    tol: f64,
    refinements: usize,
) -> NormResult {
    assert!(tol > 0.0, "tolerance must be positive");
    let rho = |lambda: f64| modular(phi, u, lambda, refinements).effective();
    // Samples alone cannot witness zero: an analytic spike narrower than the
    // cell width vanishes at every center but has positive modular, which the
    // support-restricted quadrature does see.
    let zero = if u.sup_abs() == 0.0 {
        match u.analytic() {
            None => true,
            Some(_) => rho(1e-250) == 0.0,
        }
    } else {
        false
    };
    if zero {
        return NormResult {
            value: 0.0,
            bracket: (0.0, 0.0),
            iterations: 0,
            modular_at_value: 0.0,
            status: NormStatus::ZeroFunction,
        };
    }

    // Bracket: find lambda_hi with rho <= 1 and lambda_lo with rho > 1.
    let mut iterations = 0u32;
    let mut lambda = 1.0;
    let mut m = rho(lambda);
    let (mut lo, mut hi);
    if m <= 1.0 {
        hi = lambda;
        loop {
            lambda *= 0.5;
            iterations += 1;
            if lambda < 1e-300 {
                // Modular stays <= 1 for arbitrarily small lambda: the
                // function is zero in measure at this resolution.
                return NormResult {
                    value: 0.0,
                    bracket: (0.0, hi),
                    iterations,
                    modular_at_value: 0.0,
                    status: NormStatus::ZeroFunction,
                };
            }
            m = rho(lambda);
            if m > 1.0 {
                lo = lambda;
                break;
            }
            hi = lambda;
        }
    } else {
        lo = lambda;
        loop {
            lambda *= 2.0;
            iterations += 1;
            if lambda > LAMBDA_CAP {
                return NormResult {
                    value: f64::INFINITY,
                    bracket: (lo, f64::INFINITY),
                    iterations,
                    modular_at_value: f64::INFINITY,
                    status: NormStatus::NoFiniteLambda,
                };
            }
            m = rho(lambda);
            if m <= 1.0 {
                hi = lambda;
                break;
            }
            lo = lambda;
        }
    }

    while hi - lo > tol * hi.max(1.0) && iterations < MAX_BISECT {
        let mid = 0.5 * (lo + hi);
        iterations += 1;
        if rho(mid) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    NormResult {
        value: hi,
        bracket: (lo, hi),
        iterations,
        modular_at_value: rho(hi),
        status: NormStatus::Converged,
    }
}

pub fn amemiya_norm(phi: &PhiFunction, u: &GridFunction, tol: f64) -> Result<f64, NormError> {
    amemiya_norm_with(phi, u, tol, DEFAULT_REFINEMENTS)
}

/// Orlicz-norm surrogate inf over k > 0 of (1/k)(1 + modular(k u, 1)),
/// computed as the minimum over lambda = 1/k of lambda (1 + modular(u, lambda)).
/// Lands in [lux, 2 lux] up to tolerance; it is never asserted to equal the
/// Orlicz norm itself.
pub fn amemiya_norm_with(
    phi: &PhiFunction,
    u: &GridFunction,
    tol: f64,
    refinements: usize,
) -> Result<f64, NormError> {
    let lux = luxemburg_norm_with(phi, u, tol, refinements);
    match lux.status {
        NormStatus::ZeroFunction => return Ok(0.0),
        NormStatus::NoFiniteLambda => {
            return Err(NormError::NotEvaluable("no finite lambda for the base norm".into()))
        }
        NormStatus::Converged => {}
    }
    let objective =
        |lambda: f64| lambda * (1.0 + modular(phi, u, lambda, refinements).effective());

    // The minimizer sits near the norm but can fall below it for exponents
    // close to 1, so expand the bracket downhill in both directions.
    let mut lo = lux.value;
    let mut f_lo = objective(lo);
    let mut steps = 0;
    loop {
        let probe = 0.5 * lo;
        let f_probe = objective(probe);
        if !(f_probe < f_lo) || probe < 1e-280 {
            break;
        }
        lo = probe;
        f_lo = f_probe;
        steps += 1;
        if steps > 1100 {
            return Err(NormError::SurrogateSearchFailed("no downhill turnover".into()));
        }
    }
    let mut hi = 2.0 * lux.value;
    let mut f_hi = objective(hi);
    let mut steps = 0;
    loop {
        let probe = 2.0 * hi;
        let f_probe = objective(probe);
        if !(f_probe < f_hi) || probe > LAMBDA_CAP {
            break;
        }
        hi = probe;
        f_hi = f_probe;
        steps += 1;
        if steps > 1100 {
            return Err(NormError::SurrogateSearchFailed("objective keeps decreasing".into()));
        }
    }
    let r = golden_min(objective, 0.5 * lo, hi, 1e-9, 1e-12, 400);
    Ok(r.fx)
}

/// All measured pieces of one pairing inequality check.
#[derive(Clone, Debug, Serialize)]
pub struct HolderReport {
    /// integral of |u v|.
    pub pairing: f64,
    pub lux_u: NormResult,
    /// Norm of v under the complementary function.
    pub lux_v_conjugate: NormResult,
    /// Orlicz-norm surrogate of u; `None` when the search failed.
    pub orlicz_u: Option<f64>,
    /// orlicz_u * lux_v_conjugate - pairing; nonnegative up to tolerance.
    pub slack: Option<f64>,
    pub evaluable: bool,
}

pub fn holder_check(
    phi: &PhiFunction,
    u: &GridFunction,
    v: &GridFunction,
) -> Result<HolderReport, NormError> {
    if u.domain != v.domain {
        return Err(NormError::DomainMismatch);
    }
    let pairing = integrate_product_abs(u, v).map_err(|_| NormError::DomainMismatch)?;
    let lux_u = luxemburg_norm(phi, u, DEFAULT_TOL);
    let conj = conjugate_phi(phi);
    let lux_v_conjugate = luxemburg_norm(&conj, v, DEFAULT_TOL);
    let orlicz_u = amemiya_norm(phi, u, DEFAULT_TOL).ok();
    let evaluable = lux_u.status != NormStatus::NoFiniteLambda
        && lux_v_conjugate.status != NormStatus::NoFiniteLambda
        && orlicz_u.is_some();
    let slack = if evaluable {
        orlicz_u.map(|o| o * lux_v_conjugate.value - pairing)
    } else {
        None
    };
    Ok(HolderReport { pairing, lux_u, lux_v_conjugate, orlicz_u, slack, evaluable })
}

/// Norm of an indicator against the constructive inverse-function bound.
#[derive(Clone, Debug, Serialize)]
pub struct CharIndicatorBound {
    pub lux: f64,
    pub bound: f64,
    /// Probe point where M(., s) was largest over the sampled set.
    pub c1: Point,
    /// Constant in the inverse argument c2 / |E|.
    pub c2: f64,
    pub sample_count: usize,
}

/// Bound the Luxemburg norm of the indicator of a sub-box E by
/// 1 / M^{-1}(c1, c2 / |E|) with c2 = 1/2 and c1 the probe point where
/// M(., s) is largest over a finite sample of E at the relevant scale.
pub fn char_indicator_bound(
    phi: &PhiFunction,
    domain: &Domain,
    e_box: &BoxRegion,
) -> Result<CharIndicatorBound, NormError> {
    if !e_box.is_valid() || e_box.volume() <= 0.0 {
        return Err(NormError::InvalidInput(format!("empty box {e_box}")));
    }
    if !domain.bounds.contains_box(e_box) {
        return Err(NormError::InvalidInput(format!(
            "{e_box} is not inside the domain {}",
            domain.bounds
        )));
    }
    let volume = e_box.volume();
    let c2 = 0.5;
    let level = c2 / volume;

    // Scale first from the box midpoint, then pick the worst probe point.
    let mid = e_box.center();
    let s_scale =
        inverse_eval(phi, mid, level).map_err(|e| NormError::NotEvaluable(e.to_string()))?;
    let samples = crate::phi::probe_points(e_box, 257);
    let sample_count = samples.len();
    let c1 = samples
        .into_iter()
        .max_by(|a, b| phi.eval(*a, s_scale).total_cmp(&phi.eval(*b, s_scale)))
        .expect("nonempty sample");
    let inv =
        inverse_eval(phi, c1, level).map_err(|e| NormError::NotEvaluable(e.to_string()))?;
    if inv <= 0.0 {
        return Err(NormError::NotEvaluable("inverse vanished".into()));
    }
    let e = *e_box;
    let chi = GridFunction::sample_with_support(
        *domain,
        move |p| f64::from(e.contains(p)),
        *e_box,
    )
    .map_err(|e| NormError::InvalidInput(e.to_string()))?;
    let lux = luxemburg_norm(phi, &chi, DEFAULT_TOL);
    if !lux.converged() {
        return Err(NormError::NotEvaluable("indicator norm did not converge".into()));
    }
    Ok(CharIndicatorBound { lux: lux.value, bound: 1.0 / inv, c1, c2, sample_count })
}

/// Lower estimate of the operator norm of u -> integral(u v) over the unit
/// ball, computed by sweeping candidates.
#[derive(Clone, Debug, Serialize)]
pub struct DualFunctionalReport {
    /// sup over candidates of |integral(u v)| after normalization.
    pub lower_estimate: f64,
    /// Norm of v under the complementary function.
    pub lux_v_conjugate: f64,
    pub pairings: Vec<f64>,
    /// Candidates skipped because their norm was not evaluable.
    pub skipped: usize,
}

/// Sweep `candidates` (normalized into the unit ball when needed) against v.
pub fn dual_functional_norm(
    phi: &PhiFunction,
    v: &GridFunction,
    candidates: &[GridFunction],
) -> Result<DualFunctionalReport, NormError> {
    if candidates.is_empty() {
        return Err(NormError::InvalidInput("empty candidate list".into()));
    }
    let conj = conjugate_phi(phi);
    let lux_v = luxemburg_norm(&conj, v, DEFAULT_TOL);
    if lux_v.status == NormStatus::NoFiniteLambda {
        return Err(NormError::NotEvaluable("v has no finite conjugate norm".into()));
    }
    let mut pairings = Vec::with_capacity(candidates.len());
    let mut skipped = 0;
    for cand in candidates {
        if cand.domain != v.domain {
            return Err(NormError::DomainMismatch);
        }
        let lux_c = luxemburg_norm(phi, cand, DEFAULT_TOL);
        let scaled;
        let unit_cand = match lux_c.status {
            NormStatus::ZeroFunction => cand,
            NormStatus::NoFiniteLambda => {
                skipped += 1;
                continue;
            }
            NormStatus::Converged => {
                if lux_c.value > 1.0 + DEFAULT_TOL {
                    scaled = cand.scale(1.0 / lux_c.value);
                    &scaled
                } else {
                    cand
                }
            }
        };
        let pairing =
            integrate_product(unit_cand, v).map_err(|_| NormError::DomainMismatch)?.abs();
        pairings.push(pairing);
    }
    let lower_estimate = pairings.iter().fold(0.0f64, |m, &p| m.max(p));
    Ok(DualFunctionalReport { lower_estimate, lux_v_conjugate: lux_v.value, pairings, skipped })
}

/// The equality-case candidate u*(x) = a*(x, |v(x)| / ||v||) sign(v(x)),
/// built samples-only so downstream integrals stay on the shared grid.
pub fn young_witness_candidate(
    phi: &PhiFunction,
    v: &GridFunction,
) -> Result<GridFunction, NormError> {
    let conj = conjugate_phi(phi);
    let lux_v = luxemburg_norm(&conj, v, DEFAULT_TOL);
    match lux_v.status {
        NormStatus::ZeroFunction => return Ok(GridFunction::zero(v.domain)),
        NormStatus::NoFiniteLambda => {
            return Err(NormError::NotEvaluable("witness needs a finite conjugate norm".into()))
        }
        NormStatus::Converged => {}
    }
    let mut samples = Vec::with_capacity(v.samples.len());
    for (i, &vi) in v.samples.iter().enumerate() {
        let x = v.domain.cell_center(i);
        let a = conjugate_density(phi, x, vi.abs() / lux_v.value)
            .map_err(|e| NormError::NotEvaluable(e.to_string()))?;
        if !a.is_finite() {
            return Err(NormError::NotEvaluable("conjugate density overflow".into()));
        }
        samples.push(a * vi.signum());
    }
    let mut witness = GridFunction::from_samples(v.domain, samples)
        .map_err(|e| NormError::NotEvaluable(e.to_string()))?;
    witness.support_hint = v.support_hint;
    Ok(witness)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phi::SpatialField;

    fn unit_domain(res: usize) -> Domain {
        Domain::new_1d(0.0, 1.0, res).unwrap()
    }

    fn m1_const(p: f64) -> PhiFunction {
        let probes = crate::phi::probe_points(&BoxRegion::one_d(0.0, 1.0), 9);
        PhiFunction::power_exponent(SpatialField::constant(p), &probes).unwrap()
    }

    fn indicator(d: Domain, lo: f64, hi: f64) -> GridFunction {
        GridFunction::sample_with_support(
            d,
            move |p| f64::from(p.x() > lo && p.x() < hi),
            BoxRegion::one_d(lo, hi),
        )
        .unwrap()
    }

    #[test]
    fn luxemburg_norm_examples() {
        let phi = m1_const(2.0);
        let d = unit_domain(1000);
        let n = luxemburg_norm(&phi, &GridFunction::constant(d, 3.0), DEFAULT_TOL);
        assert!(n.converged());
        assert!((n.value - 3.0).abs() < 1e-7);

        let n = luxemburg_norm(&phi, &indicator(d, 0.0, 0.5), DEFAULT_TOL);
        assert!((n.value - 0.5f64.sqrt()).abs() < 1e-7);

        // Double power with u = 1: lambda solves l^-2 + l^-4 = 1, the root of
        // a quartic in 1/l; independent oracle by scalar bisection.
        let probes = crate::phi::probe_points(&BoxRegion::one_d(0.0, 1.0), 9);
        let m4 =
            PhiFunction::double_power(2.0, 4.0, SpatialField::constant(1.0), &probes).unwrap();
        let n = luxemburg_norm(&m4, &GridFunction::constant(d, 1.0), DEFAULT_TOL);
        let (mut lo, mut hi) = (0.5f64, 4.0f64);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if mid.powf(-2.0) + mid.powf(-4.0) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((n.value - hi).abs() < 1e-7, "{} vs {hi}", n.value);
        assert!((n.value - ((1.0 + 5f64.sqrt()) / 2.0).sqrt()).abs() < 1e-6);
    }

    #[test]
    fn norm_statuses() {
        let phi = m1_const(2.0);
        let d = unit_domain(100);
        let z = luxemburg_norm(&phi, &GridFunction::zero(d), DEFAULT_TOL);
        assert_eq!(z.status, NormStatus::ZeroFunction);
        assert_eq!(z.value, 0.0);

        // x^(-1/2) under the square: modular(lambda) = lambda^-2 * int(1/x),
        // so the log-divergent trace has the same growth ratios at every
        // lambda and the bracket search runs into the cap.
        let d = unit_domain(500);
        let u = GridFunction::sample(d, |p| p.x().powf(-0.5)).unwrap();
        let n = luxemburg_norm(&phi, &u, DEFAULT_TOL);
        assert_eq!(n.status, NormStatus::NoFiniteLambda, "{n:?}");
        assert_eq!(n.value_or_inf(), f64::INFINITY);
    }

    #[test]
    fn bisection_bracket_is_certified() {
        let phi = m1_const(2.5);
        let d = unit_domain(500);
        let u = GridFunction::sample(d, |p| 1.0 + (3.0 * p.x()).cos()).unwrap();
        let n = luxemburg_norm(&phi, &u, DEFAULT_TOL);
        assert!(n.converged());
        let (lo, hi) = n.bracket;
        assert!(lo <= n.value && n.value <= hi);
        assert!(hi - lo <= DEFAULT_TOL * n.value.max(1.0));
        assert!(modular(&phi, &u, hi, DEFAULT_REFINEMENTS).value <= 1.0);
        assert!(modular(&phi, &u, lo, DEFAULT_REFINEMENTS).value > 1.0);
        assert!(n.modular_at_value <= 1.0);
    }

    #[test]
    fn amemiya_examples() {
        let phi = m1_const(2.0);
        let d = unit_domain(1000);
        // Closed-form minimum of (1/k)(1 + 9 k^2) is 6 at k = 1/3.
        let u = GridFunction::constant(d, 3.0);
        let a = amemiya_norm(&phi, &u, DEFAULT_TOL).unwrap();
        assert!((a - 6.0).abs() < 1e-6, "got {a}");
        let lux = luxemburg_norm(&phi, &u, DEFAULT_TOL).value;
        assert!(lux <= a + 1e-9 && a <= 2.0 * lux + 1e-6);

        // Zero convention.
        assert_eq!(amemiya_norm(&phi, &GridFunction::zero(d), DEFAULT_TOL).unwrap(), 0.0);

        // Indicator: minimum of (1/k)(1 + k^2/2) = sqrt(2).
        let chi = indicator(d, 0.0, 0.5);
        let a = amemiya_norm(&phi, &chi, DEFAULT_TOL).unwrap();
        assert!((a - 2f64.sqrt()).abs() < 1e-6, "got {a}");
        let lux = luxemburg_norm(&phi, &chi, DEFAULT_TOL).value;
        assert!(lux <= a + 1e-9 && a <= 2.0 * lux + 1e-6);
    }

    #[test]
    fn amemiya_bracket_reaches_below_the_norm() {
        // p close to 1 pushes the minimizer well below the norm value.
        let phi = m1_const(1.1);
        let d = unit_domain(500);
        let u = GridFunction::constant(d, 2.0);
        let a = amemiya_norm(&phi, &u, DEFAULT_TOL).unwrap();
        let lux = luxemburg_norm(&phi, &u, DEFAULT_TOL).value;
        // Closed form: min over l of l + l^(1-p) I with I = 2^p.
        let p = 1.1f64;
        let i = 2f64.powf(p);
        let l_star = ((p - 1.0) * i).powf(1.0 / p);
        let exact = l_star + l_star.powf(1.0 - p) * i;
        assert!((a - exact).abs() < 1e-6 * exact, "{a} vs {exact}");
        assert!(lux <= a + 1e-9 && a <= 2.0 * lux + 1e-6);
    }

    #[test]
    fn holder_example_with_square() {
        // M(s) = s^2, u = v = 1: pairing 1, conjugate norm 1/2, surrogate 2.
        let phi = PhiFunction::scalar(|s| s * s, "s^2");
        let d = unit_domain(1000);
        let one = GridFunction::constant(d, 1.0);
        let r = holder_check(&phi, &one, &one).unwrap();
        assert!(r.evaluable);
        assert!((r.pairing - 1.0).abs() < 1e-12);
        assert!((r.lux_v_conjugate.value - 0.5).abs() < 1e-7, "{:?}", r.lux_v_conjugate);
        assert!((r.lux_u.value - 1.0).abs() < 1e-7);
        let o = r.orlicz_u.unwrap();
        assert!(o >= r.lux_u.value - 1e-9 && o <= 2.0 * r.lux_u.value + 1e-6);
        assert!(r.slack.unwrap() >= -1e-8, "slack {:?}", r.slack);
    }

    #[test]
    fn holder_zero_and_indicator_cases() {
        let phi = m1_const(2.0);
        let d = unit_domain(1000);
        let z = GridFunction::zero(d);
        let v = GridFunction::constant(d, 2.0);
        let r = holder_check(&phi, &z, &v).unwrap();
        assert_eq!(r.pairing, 0.0);
        assert!(r.slack.unwrap() >= -1e-9);

        let chi = indicator(d, 0.0, 0.5);
        let r = holder_check(&phi, &chi, &chi).unwrap();
        assert!((r.pairing - 0.5).abs() < 1e-12);
        assert!(r.slack.unwrap() >= -1e-8);
    }

    #[test]
    fn char_indicator_bound_closed_forms() {
        let d = unit_domain(1000);
        let phi = m1_const(2.0);
        let r = char_indicator_bound(&phi, &d, &BoxRegion::one_d(0.0, 0.25)).unwrap();
        assert!((r.lux - 0.5).abs() < 1e-6);
        assert!((r.bound - 0.5f64.sqrt()).abs() < 1e-6);
        assert!(r.lux <= r.bound + 1e-9);

        let phi3 = m1_const(3.0);
        let r = char_indicator_bound(&phi3, &d, &BoxRegion::one_d(0.0, 0.125)).unwrap();
        assert!((r.lux - 0.5).abs() < 1e-6);
        assert!((r.bound - 0.25f64.powf(1.0 / 3.0)).abs() < 1e-6);
        assert!(r.lux <= r.bound + 1e-9);

        // E = the whole domain: norm exactly 1, bound sqrt(2).
        let r = char_indicator_bound(&phi, &d, &BoxRegion::one_d(0.0, 1.0)).unwrap();
        assert!((r.lux - 1.0).abs() < 1e-7);
        assert!((r.bound - 2f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn dual_functional_sandwich_with_witness() {
        // M(s) = s^2, v = 1: conjugate norm 1/2; including u = 1 reaches the
        // pairing 1 = 2 * ||v||, and the witness candidate is also optimal.
        let phi = PhiFunction::scalar(|s| s * s, "s^2");
        let d = unit_domain(1000);
        let v = GridFunction::constant(d, 1.0);
        let witness = young_witness_candidate(&phi, &v).unwrap();
        let candidates =
            vec![GridFunction::constant(d, 1.0), GridFunction::sample(d, |p| p.x()).unwrap(), witness];
        let r = dual_functional_norm(&phi, &v, &candidates).unwrap();
        assert!((r.lux_v_conjugate - 0.5).abs() < 1e-7);
        assert!(r.lower_estimate <= 2.0 * r.lux_v_conjugate + 1e-7);
        assert!(r.lower_estimate >= 0.95 * r.lux_v_conjugate, "{r:?}");
        assert_eq!(r.skipped, 0);

        // Zero v: everything collapses to zero.
        let z = GridFunction::zero(d);
        let r = dual_functional_norm(&phi, &z, &candidates).unwrap();
        assert_eq!(r.lower_estimate, 0.0);

        // Empty candidates are rejected.
        assert!(dual_functional_norm(&phi, &v, &[]).is_err());
    }

    #[test]
    fn dual_witness_for_indicator() {
        let phi = m1_const(2.0);
        let d = unit_domain(1000);
        let v = indicator(d, 0.0, 0.5);
        // Conjugate of s^2 is s^2/4, so ||chi_E|| there is sqrt(|E|)/2.
        let witness = young_witness_candidate(&phi, &v).unwrap();
        let r = dual_functional_norm(&phi, &v, &[witness]).unwrap();
        let expect = 0.5f64.sqrt() / 2.0;
        assert!((r.lux_v_conjugate - expect).abs() < 1e-6);
        assert!(r.lower_estimate >= 0.95 * r.lux_v_conjugate);
        assert!(r.lower_estimate <= 2.0 * r.lux_v_conjugate + 1e-7);
    }

    #[test]
    fn norm_homogeneity_and_triangle() {
        let phi = m1_const(2.5);
        let d = unit_domain(500);
        let u = GridFunction::sample(d, |p| (5.0 * p.x()).sin() + 1.2).unwrap();
        let v = GridFunction::sample(d, |p| p.x() * p.x()).unwrap();
        let nu = luxemburg_norm(&phi, &u, DEFAULT_TOL).value;
        for c in [-2.0, -1.0, 0.5, 3.0] {
            let nc = luxemburg_norm(&phi, &u.scale(c), DEFAULT_TOL).value;
            assert!((nc - c.abs() * nu).abs() <= 1e-7 * nu.max(1.0), "c={c}");
        }
        let nv = luxemburg_norm(&phi, &v, DEFAULT_TOL).value;
        let nsum = luxemburg_norm(&phi, &u.add(&v).unwrap(), DEFAULT_TOL).value;
        assert!(nsum <= nu + nv + 1e-7);
    }

    #[test]
    fn unit_ball_equivalence() {
        let phi = m1_const(2.0);
        let d = unit_domain(800);
        let u = GridFunction::sample(d, |p| 1.5 * p.x() + 0.2).unwrap();
        let n = luxemburg_norm(&phi, &u, DEFAULT_TOL);
        let scaled = u.scale(1.0 / n.value);
        let m = modular(&phi, &scaled, 1.0, DEFAULT_REFINEMENTS).value;
        assert!(m <= 1.0 + 1e-8, "modular {m}");
        assert!(m >= 1.0 - 1e-4);
    }
}
