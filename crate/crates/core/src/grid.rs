//! Discretized open box domains, sampled functions, and the modular
//! functional u -> integral of M(x, |u(x)| / lambda) over the domain.
//!
//! A `GridFunction` is cell-center samples plus an optional analytic
//! closure. When the closure is present the modular re-evaluates it on
//! refined grids (restricted to the support hint, which is exact because
//! M(x, 0) = 0); samples-only functions integrate at their own resolution
//! in a single level.

use crate::geometry::{BoxRegion, Point};
use crate::phi::PhiFunction;
use crate::quad;
use serde::Serialize;
use std::sync::Arc;
use thiserror::Error;

pub type AnalyticFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("expression evaluation failed at {point}: got {value}")]
    SampleFailure { point: Point, value: f64 },
    #[error("domain mismatch between grid functions")]
    DomainMismatch,
    #[error("sample vector has length {got}, expected {expected}")]
    SampleCount { got: usize, expected: usize },
    #[error("csv import: {0}")]
    Csv(String),
}

/// A uniform midpoint grid over an open axis-aligned box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Domain {
    pub bounds: BoxRegion,
    /// Cells per axis.
    pub resolution: usize,
}

impl Domain {
    pub fn new_1d(lo: f64, hi: f64, resolution: usize) -> Result<Self, GridError> {
        Self::new(BoxRegion::one_d(lo, hi), resolution)
    }

    pub fn new_2d(
        lo_x: f64,
        hi_x: f64,
        lo_y: f64,
        hi_y: f64,
        resolution: usize,
    ) -> Result<Self, GridError> {
        Self::new(BoxRegion::two_d(lo_x, hi_x, lo_y, hi_y), resolution)
    }

    pub fn new(bounds: BoxRegion, resolution: usize) -> Result<Self, GridError> {
        if !bounds.is_valid() {
            return Err(GridError::InvalidDomain(format!("bad bounds {bounds}")));
        }
        if resolution < 2 {
            return Err(GridError::InvalidDomain(format!(
                "resolution {resolution} must be >= 2"
            )));
        }
        Ok(Domain { bounds, resolution })
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim
    }

    pub fn cell_count(&self) -> usize {
        if self.dim() == 1 {
            self.resolution
        } else {
            self.resolution * self.resolution
        }
    }

    pub fn cell_width(&self, axis: usize) -> f64 {
        let (lo, hi) = self.bounds.bounds[axis];
        (hi - lo) / self.resolution as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.cell_width(a)).product()
    }

    pub fn cell_center(&self, i: usize) -> Point {
        let (lo_x, _) = self.bounds.bounds[0];
        if self.dim() == 1 {
            Point::one_d(lo_x + (i as f64 + 0.5) * self.cell_width(0))
        } else {
            let ix = i % self.resolution;
            let iy = i / self.resolution;
            let (lo_y, _) = self.bounds.bounds[1];
            Point::two_d(
                lo_x + (ix as f64 + 0.5) * self.cell_width(0),
                lo_y + (iy as f64 + 0.5) * self.cell_width(1),
            )
        }
    }

    pub fn centers(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.cell_count()).map(move |i| self.cell_center(i))
    }

    /// Index of the cell whose center is nearest to `p` (clamped to the grid).
    fn nearest_cell(&self, p: Point) -> usize {
        let clamp_axis = |a: usize, v: f64| -> usize {
            let (lo, _) = self.bounds.bounds[a];
            let idx = ((v - lo) / self.cell_width(a) - 0.5).round();
            idx.clamp(0.0, (self.resolution - 1) as f64) as usize
        };
        if self.dim() == 1 {
            clamp_axis(0, p.x())
        } else {
            clamp_axis(1, p.y()) * self.resolution + clamp_axis(0, p.x())
        }
    }
}

/// Real-valued samples on a domain with an optional analytic closure.
#[derive(Clone)]
pub struct GridFunction {
    pub domain: Domain,
    pub samples: Vec<f64>,
    analytic: Option<AnalyticFn>,
    pub support_hint: Option<BoxRegion>,
}

impl std::fmt::Debug for GridFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridFunction")
            .field("domain", &self.domain)
            .field("samples", &self.samples.len())
            .field("analytic", &self.analytic.is_some())
            .field("support_hint", &self.support_hint)
            .finish()
    }
}

impl GridFunction {
    /// Sample a closure at the cell centers, retaining it for refinement.
    /// A non-finite value at any center rejects the whole function.
    pub fn sample(
        domain: Domain,
        f: impl Fn(Point) -> f64 + Send + Sync + 'static,
    ) -> Result<Self, GridError> {
        let analytic: AnalyticFn = Arc::new(f);
        let mut samples = Vec::with_capacity(domain.cell_count());
        for p in domain.centers() {
            let v = analytic(p);
            if !v.is_finite() {
                return Err(GridError::SampleFailure { point: p, value: v });
            }
            samples.push(v);
        }
        Ok(GridFunction { domain, samples, analytic: Some(analytic), support_hint: None })
    }

    pub fn sample_with_support(
        domain: Domain,
        f: impl Fn(Point) -> f64 + Send + Sync + 'static,
        support: BoxRegion,
    ) -> Result<Self, GridError> {
        let mut g = Self::sample(domain, f)?;
        g.support_hint = support.intersect(&domain.bounds);
        Ok(g)
    }

    pub fn from_samples(domain: Domain, samples: Vec<f64>) -> Result<Self, GridError> {
        if samples.len() != domain.cell_count() {
            return Err(GridError::SampleCount {
                got: samples.len(),
                expected: domain.cell_count(),
            });
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(GridError::SampleFailure {
                point: domain.cell_center(i),
                value: samples[i],
            });
        }
        Ok(GridFunction { domain, samples, analytic: None, support_hint: None })
    }

    pub fn constant(domain: Domain, c: f64) -> Self {
        GridFunction {
            samples: vec![c; domain.cell_count()],
            domain,
            analytic: Some(Arc::new(move |_| c)),
            support_hint: None,
        }
    }

    pub fn zero(domain: Domain) -> Self {
        let mut z = Self::constant(domain, 0.0);
        z.support_hint = None;
        z
    }

    pub fn analytic(&self) -> Option<&AnalyticFn> {
        self.analytic.as_ref()
    }

    /// Crate-internal assembly from pre-evaluated samples and the closure
    /// that produced them. Unlike [`sample`], non-finite samples are kept:
    /// operator outputs may legitimately carry overflowed nodes, which the
    /// modular then reports as overflow.
    pub(crate) fn from_parts(
        domain: Domain,
        samples: Vec<f64>,
        analytic: Option<AnalyticFn>,
        support_hint: Option<BoxRegion>,
    ) -> Self {
        debug_assert_eq!(samples.len(), domain.cell_count());
        GridFunction { domain, samples, analytic, support_hint }
    }

    pub fn with_support_hint(mut self, support: BoxRegion) -> Self {
        self.support_hint = support.intersect(&self.domain.bounds);
        self
    }

    /// Infer a support hint from the samples: the bounding box of the
    /// nonzero cells, padded by one cell width per axis. Leaves the hint
    /// unset when every sample vanishes.
    pub fn with_inferred_support(mut self) -> Self {
        let d = self.domain;
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        let mut any = false;
        for (i, &v) in self.samples.iter().enumerate() {
            if v != 0.0 {
                any = true;
                let p = d.cell_center(i);
                for a in 0..d.dim() {
                    lo[a] = lo[a].min(p.coords[a]);
                    hi[a] = hi[a].max(p.coords[a]);
                }
            }
        }
        if any {
            let mut b = d.bounds;
            for a in 0..d.dim() {
                b.bounds[a] = (lo[a] - d.cell_width(a), hi[a] + d.cell_width(a));
            }
            self.support_hint = b.intersect(&d.bounds);
        }
        self
    }

    /// Value at an arbitrary point with zero extension outside the domain;
    /// analytic when available, nearest cell sample otherwise.
    pub fn value_at(&self, p: Point) -> f64 {
        if !self.domain.bounds.contains(p) {
            return 0.0;
        }
        match &self.analytic {
            Some(f) => f(p),
            None => self.samples[self.domain.nearest_cell(p)],
        }
    }

    pub fn sup_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, c: f64) -> GridFunction {
        let analytic = self.analytic.clone().map(|f| {
            Arc::new(move |p: Point| c * f(p)) as AnalyticFn
        });
        GridFunction {
            domain: self.domain,
            samples: self.samples.iter().map(|v| c * v).collect(),
            analytic,
            support_hint: self.support_hint,
        }
    }

    fn combine(&self, other: &GridFunction, op: fn(f64, f64) -> f64) -> Result<Self, GridError> {
        if self.domain != other.domain {
            return Err(GridError::DomainMismatch);
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(&a, &b)| op(a, b))
            .collect();
        let analytic = match (self.analytic.clone(), other.analytic.clone()) {
            (Some(f), Some(g)) => {
                Some(Arc::new(move |p: Point| op(f(p), g(p))) as AnalyticFn)
            }
            _ => None,
        };
        let support_hint = match (self.support_hint, other.support_hint) {
            (Some(a), Some(b)) => Some(a.hull(&b)),
            _ => None,
        };
        Ok(GridFunction { domain: self.domain, samples, analytic, support_hint })
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self, GridError> {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self, GridError> {
        self.combine(other, |a, b| a - b)
    }

    /// Export as `x[,y],value` rows over the cell centers.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if self.domain.dim() == 1 {
            out.push_str("x,value\n");
            for (i, p) in self.domain.centers().enumerate() {
                out.push_str(&format!("{},{}\n", p.x(), self.samples[i]));
            }
        } else {
            out.push_str("x,y,value\n");
            for (i, p) in self.domain.centers().enumerate() {
                out.push_str(&format!("{},{},{}\n", p.x(), p.y(), self.samples[i]));
            }
        }
        out
    }

    /// Import values exported by [`to_csv`]; coordinates must match the
    /// cell centers of `domain` in order.
    pub fn from_csv(domain: Domain, text: &str) -> Result<Self, GridError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| GridError::Csv("empty file".into()))?;
        let expected_cols = if domain.dim() == 1 { 2 } else { 3 };
        if header.split(',').count() != expected_cols {
            return Err(GridError::Csv(format!("expected {expected_cols} columns")));
        }
        let mut samples = Vec::with_capacity(domain.cell_count());
        for (i, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != expected_cols {
                return Err(GridError::Csv(format!("row {i}: expected {expected_cols} fields")));
            }
            let parse = |s: &str| -> Result<f64, GridError> {
                s.trim().parse().map_err(|_| GridError::Csv(format!("row {i}: bad number `{s}`")))
            };
            if i >= domain.cell_count() {
                return Err(GridError::Csv("too many rows".into()));
            }
            let center = domain.cell_center(i);
            let x = parse(fields[0])?;
            if (x - center.x()).abs() > 1e-9 * (1.0 + center.x().abs()) {
                return Err(GridError::Csv(format!("row {i}: x {x} off-grid")));
            }
            if domain.dim() == 2 {
                let y = parse(fields[1])?;
                if (y - center.y()).abs() > 1e-9 * (1.0 + center.y().abs()) {
                    return Err(GridError::Csv(format!("row {i}: y {y} off-grid")));
                }
            }
            samples.push(parse(fields[expected_cols - 1])?);
        }
        Self::from_samples(domain, samples)
    }
}

/// Result of a modular evaluation with its refinement trace.
#[derive(Clone, Debug, Serialize)]
pub struct ModularValue {
    /// Finest estimate, `INFINITY` after an overflow.
    pub value: f64,
    pub divergent: bool,
    pub refinement_trace: Vec<f64>,
    pub lambda: f64,
    pub overflow_at: Option<Point>,
}

impl ModularValue {
    /// The value with divergence folded in as infinity.
    pub fn effective(&self) -> f64 {
        if self.divergent {
            f64::INFINITY
        } else {
            self.value
        }
    }
}

/// Integral of M(x, |u(x)| / lambda) over the domain by composite midpoint
/// quadrature, refined `refinements` times by doubling when `u` carries an
/// analytic closure (samples-only functions use one level). Declared
/// divergent when the trace keeps growing by more than the growth factor
/// over the last three doublings (the signature that separates logarithmic
/// blowup from a settling singular tail), or on overflow at a node.
pub fn modular(
    phi: &PhiFunction,
    u: &GridFunction,
    lambda: f64,
    refinements: usize,
) -> ModularValue {
    assert!(lambda > 0.0 && lambda.is_finite(), "lambda must be positive");
    let (estimates, overflow_at) = match u.analytic() {
        Some(f) => {
            let region = match u.support_hint {
                Some(hint) => match hint.intersect(&u.domain.bounds) {
                    Some(r) => r,
                    None => {
                        return ModularValue {
                            value: 0.0,
                            divergent: false,
                            refinement_trace: vec![0.0],
                            lambda,
                            overflow_at: None,
                        }
                    }
                },
                None => u.domain.bounds,
            };
            let f = f.clone();
            let integrand = move |p: Point| phi.eval(p, f(p).abs() / lambda);
            let out = quad::midpoint_refined(&region, u.domain.resolution, refinements, &integrand);
            (out.estimates, out.overflow_at)
        }
        None => {
            let vol = u.domain.cell_volume();
            let mut sum = 0.0;
            let mut comp = 0.0;
            let mut overflow = None;
            for (i, &s) in u.samples.iter().enumerate() {
                let v = phi.eval(u.domain.cell_center(i), s.abs() / lambda);
                if !v.is_finite() {
                    overflow = Some(u.domain.cell_center(i));
                    break;
                }
                let y = v - comp;
                let t = sum + y;
                comp = (t - sum) - y;
                sum = t;
            }
            (if overflow.is_none() { vec![sum * vol] } else { vec![] }, overflow)
        }
    };
    let divergent = quad::diverging(&estimates, overflow_at.is_some(), quad::GROWTH_FACTOR);
    ModularValue {
        value: if overflow_at.is_some() {
            f64::INFINITY
        } else {
            estimates.last().copied().unwrap_or(0.0)
        },
        divergent,
        refinement_trace: estimates,
        lambda,
        overflow_at,
    }
}

/// Kahan sum of |u v| times the cell volume over the shared grid.
pub fn integrate_product_abs(u: &GridFunction, v: &GridFunction) -> Result<f64, GridError> {
    integrate_product_impl(u, v, true)
}

/// Signed pairing: Kahan sum of u v times the cell volume.
pub fn integrate_product(u: &GridFunction, v: &GridFunction) -> Result<f64, GridError> {
    integrate_product_impl(u, v, false)
}

fn integrate_product_impl(
    u: &GridFunction,
    v: &GridFunction,
    absolute: bool,
) -> Result<f64, GridError> {
    if u.domain != v.domain {
        return Err(GridError::DomainMismatch);
    }
    let mut sum = 0.0;
    let mut comp = 0.0;
    for (&a, &b) in u.samples.iter().zip(&v.samples) {
        let prod = if absolute { (a * b).abs() } else { a * b };
        let y = prod - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    Ok(sum * u.domain.cell_volume())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phi::{PhiFunction, SpatialField};

    fn unit_domain(res: usize) -> Domain {
        Domain::new_1d(0.0, 1.0, res).unwrap()
    }

    fn m1_const(p: f64) -> PhiFunction {
        let probes = crate::phi::probe_points(&BoxRegion::one_d(0.0, 1.0), 9);
        PhiFunction::power_exponent(SpatialField::constant(p), &probes).unwrap()
    }

    #[test]
    fn sampling_basics() {
        let d = unit_domain(100);
        let g = GridFunction::sample(d, |_| 3.0).unwrap();
        assert!(g.samples.iter().all(|&v| v == 3.0));

        // Cell centers avoid the boundary, so x^(-1/4) samples finitely.
        let d = unit_domain(1000);
        let g = GridFunction::sample(d, |p| p.x().powf(-0.25)).unwrap();
        assert!(g.samples.iter().all(|v| v.is_finite()));

        // Midpoint sampling of an aligned indicator: 5 ones, 5 zeros.
        let d = unit_domain(10);
        let g = GridFunction::sample(d, |p| f64::from(p.x() < 0.5)).unwrap();
        assert_eq!(g.samples.iter().filter(|&&v| v == 1.0).count(), 5);
        assert_eq!(g.samples.iter().filter(|&&v| v == 0.0).count(), 5);

        // Unsampleable expression rejected with the offending point.
        let err = GridFunction::sample(unit_domain(10), |p| (p.x() - 0.5).ln()).unwrap_err();
        match err {
            GridError::SampleFailure { point, .. } => assert!(point.x() < 0.5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn modular_of_constant() {
        let phi = m1_const(2.0);
        let u = GridFunction::constant(unit_domain(1000), 3.0);
        let m = modular(&phi, &u, 1.0, 4);
        assert!(!m.divergent);
        assert!((m.value - 9.0).abs() < 1e-12);
    }

    #[test]
    fn modular_monotone_in_lambda_and_convex_in_u() {
        let phi = m1_const(2.5);
        let d = unit_domain(500);
        let u = GridFunction::sample(d, |p| 1.0 + p.x()).unwrap();
        let v = GridFunction::sample(d, |p| 2.0 - p.x()).unwrap();
        let m1 = modular(&phi, &u, 0.5, 2).value;
        let m2 = modular(&phi, &u, 1.0, 2).value;
        assert!(m1 >= m2 - 1e-12);

        let mid = u.add(&v).unwrap().scale(0.5);
        let lhs = modular(&phi, &mid, 1.0, 2).value;
        let rhs = 0.5 * (modular(&phi, &u, 1.0, 2).value + modular(&phi, &v, 1.0, 2).value);
        assert!(lhs <= rhs + 1e-12);
    }

    #[test]
    fn modular_homogeneity_is_exact_at_matching_nodes() {
        let phi = m1_const(3.0);
        let d = unit_domain(256);
        let u = GridFunction::sample(d, |p| (7.0 * p.x()).sin() + 1.5).unwrap();
        let a = modular(&phi, &u, 0.75, 3);
        let b = modular(&phi, &u.scale(2.0), 1.5, 3);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    #[test]
    fn modular_additive_over_disjoint_supports() {
        let phi = m1_const(2.0);
        let d = unit_domain(1000);
        let u = GridFunction::sample_with_support(
            d,
            |p| f64::from(p.x() > 0.1 && p.x() < 0.3) * 2.0,
            BoxRegion::one_d(0.1, 0.3),
        )
        .unwrap();
        let v = GridFunction::sample_with_support(
            d,
            |p| f64::from(p.x() > 0.6 && p.x() < 0.9) * 1.5,
            BoxRegion::one_d(0.6, 0.9),
        )
        .unwrap();
        let sum = u.add(&v).unwrap();
        let lhs = modular(&phi, &sum, 1.0, 3).value;
        let rhs = modular(&phi, &u, 1.0, 3).value + modular(&phi, &v, 1.0, 3).value;
        assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
    }

    #[test]
    fn modular_known_value_oracle() {
        // Constant exponent with polynomial u: closed forms to 1e-6 relative.
        let u_cases: [(fn(Point) -> f64, fn(f64) -> f64); 2] = [
            (|p| p.x(), |p| 1.0 / (p + 1.0)),            // int x^p
            (|p| p.x() * p.x(), |p| 1.0 / (2.0 * p + 1.0)), // int x^(2p)
        ];
        for p_exp in [1.5, 2.0, 3.0] {
            let phi = m1_const(p_exp);
            for (f, exact) in u_cases {
                let u = GridFunction::sample(unit_domain(1000), f).unwrap();
                let m = modular(&phi, &u, 1.0, 4);
                let want = exact(p_exp);
                assert!(
                    (m.value - want).abs() <= 1e-6 * want,
                    "p={p_exp}: {} vs {want}",
                    m.value
                );
            }
        }
    }

    #[test]
    fn piecewise_exponent_shift_diverges() {
        // Exponent 2 on [0,1), 4 on (-1,0); u = x^(-1/4) on (0,1).
        let probes = crate::phi::probe_points(&BoxRegion::one_d(-1.0, 1.0), 9);
        let p = SpatialField::from_fn(|pt| if pt.x() >= 0.0 { 2.0 } else { 4.0 }, "piecewise");
        let phi = PhiFunction::power_exponent(p, &probes).unwrap();
        let d = Domain::new_1d(-1.0, 1.0, 2000).unwrap();
        let f = GridFunction::sample_with_support(
            d,
            |pt| if pt.x() > 0.0 { pt.x().powf(-0.25) } else { 0.0 },
            BoxRegion::one_d(0.0, 1.0),
        )
        .unwrap();
        let m = modular(&phi, &f, 1.0, 6);
        assert!(!m.divergent);
        assert!((m.value - 2.0).abs() < 0.04, "value {}", m.value);
        // Trace converges toward 2 from below.
        assert!(m.refinement_trace.windows(2).all(|w| w[1] >= w[0]));
        assert!(m.refinement_trace.iter().all(|&v| v < 2.0));

        let shifted = crate::operators::translate(&f, [0.1, 0.0]);
        let m = modular(&phi, &shifted, 1.0, 6);
        assert!(m.divergent, "trace {:?}", m.refinement_trace);
    }

    #[test]
    fn csv_round_trip() {
        let d = unit_domain(16);
        let g = GridFunction::sample(d, |p| p.x() * 2.0 - 0.5).unwrap();
        let text = g.to_csv();
        let back = GridFunction::from_csv(d, &text).unwrap();
        assert_eq!(g.samples, back.samples);
        assert!(GridFunction::from_csv(unit_domain(8), &text).is_err());
    }
}
