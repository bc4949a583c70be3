//! Generalized Young functions M(x, s) and their numeric checkers.
//!
//! A function here is convex and nondecreasing in `s` with M(x, 0) = 0,
//! positive for s > 0, superlinear at infinity and sublinear at zero. Five
//! builtin families cover the usual examples (variable-exponent power,
//! power-log, shifted power, weighted double power, exponential power), and
//! `custom` accepts an arbitrary closure or expression in (x, s).
//!
//! Evaluations land in the extended reals: overflow (and any NaN produced
//! on the way) is mapped to `f64::INFINITY`, and every consumer in the crate
//! treats a non-finite value as the distinguished overflow outcome rather
//! than a number. The exponential family makes overflow an expected event,
//! not an error.

use crate::expr::{EvalContext, Expr};
use crate::geometry::{BoxRegion, Point};
use crate::quad;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

pub type PointFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type ModulusFn = Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>;

#[derive(Debug, Error)]
pub enum PhiError {
    #[error("invalid parameter: {detail}{}", at.map(|p| format!(" at {p}")).unwrap_or_default())]
    InvalidParameter { detail: String, at: Option<Point> },
    #[error("evaluation overflow at s = {s}")]
    Overflow { s: f64 },
}

fn invalid(detail: impl Into<String>, at: Option<Point>) -> PhiError {
    PhiError::InvalidParameter { detail: detail.into(), at }
}

/// A scalar field over the domain, e.g. a variable exponent p(x) or the
/// weight of the double-power family. Carries a description for reports.
#[derive(Clone)]
pub struct SpatialField {
    f: PointFn,
    desc: String,
}

impl SpatialField {
    pub fn from_expr(expr: &Expr) -> Result<Self, PhiError> {
        if expr.uses_s() {
            return Err(invalid(
                format!("spatial field `{}` must not depend on s", expr.source()),
                None,
            ));
        }
        let desc = expr.source().to_string();
        let e = expr.clone();
        Ok(SpatialField {
            f: Arc::new(move |p: Point| e.eval(&EvalContext { x: p.x(), y: p.y(), s: 0.0 })),
            desc,
        })
    }

    pub fn constant(c: f64) -> Self {
        SpatialField { f: Arc::new(move |_| c), desc: format!("{c}") }
    }

    pub fn from_fn(f: impl Fn(Point) -> f64 + Send + Sync + 'static, desc: &str) -> Self {
        SpatialField { f: Arc::new(f), desc: desc.to_string() }
    }

    #[inline]
    pub fn eval(&self, p: Point) -> f64 {
        (self.f)(p)
    }

    pub fn describe(&self) -> &str {
        &self.desc
    }
}

impl fmt::Debug for SpatialField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SpatialField({})", self.desc)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyId {
    M1,
    M2,
    M3,
    M4,
    M5,
    Custom,
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FamilyId::M1 => "m1",
            FamilyId::M2 => "m2",
            FamilyId::M3 => "m3",
            FamilyId::M4 => "m4",
            FamilyId::M5 => "m5",
            FamilyId::Custom => "custom",
        };
        f.write_str(s)
    }
}

#[derive(Clone)]
enum PhiKind {
    /// |s|^p(x)
    PowerExponent { p: SpatialField },
    /// |s|^p(x) * log(e + |s|)
    PowerLog { p: SpatialField },
    /// ((1 + s^2)^(p(x)/2) - 1) / p(x)
    ShiftedPower { p: SpatialField },
    /// |s|^p + a(x) |s|^q, 1 < p < q, a >= 0
    DoublePower { p: f64, q: f64, weight: SpatialField },
    /// exp(|s|^p(x)) - 1
    ExpPower { p: SpatialField },
    Custom { eval: ModulusFn, density: Option<ModulusFn>, desc: String },
}

/// A generalized Young function with family metadata.
#[derive(Clone)]
pub struct PhiFunction {
    kind: PhiKind,
}

impl fmt::Debug for PhiFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PhiFunction({self})")
    }
}

impl fmt::Display for PhiFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            PhiKind::PowerExponent { p } => write!(f, "m1[p = {}]", p.describe()),
            PhiKind::PowerLog { p } => write!(f, "m2[p = {}]", p.describe()),
            PhiKind::ShiftedPower { p } => write!(f, "m3[p = {}]", p.describe()),
            PhiKind::DoublePower { p, q, weight } => {
                write!(f, "m4[p = {p}, q = {q}, a = {}]", weight.describe())
            }
            PhiKind::ExpPower { p } => write!(f, "m5[p = {}]", p.describe()),
            PhiKind::Custom { desc, .. } => write!(f, "custom[{desc}]"),
        }
    }
}

fn check_exponent_field(p: &SpatialField, probes: &[Point]) -> Result<(), PhiError> {
    for &x in probes {
        let v = p.eval(x);
        if !v.is_finite() || v <= 1.0 {
            return Err(invalid(
                format!("exponent p(x) = {v} must be finite and > 1 (p = {})", p.describe()),
                Some(x),
            ));
        }
    }
    Ok(())
}

impl PhiFunction {
    pub fn power_exponent(p: SpatialField, probes: &[Point]) -> Result<Self, PhiError> {
        check_exponent_field(&p, probes)?;
        Ok(PhiFunction { kind: PhiKind::PowerExponent { p } })
    }

    pub fn power_log(p: SpatialField, probes: &[Point]) -> Result<Self, PhiError> {
        check_exponent_field(&p, probes)?;
        Ok(PhiFunction { kind: PhiKind::PowerLog { p } })
    }

    pub fn shifted_power(p: SpatialField, probes: &[Point]) -> Result<Self, PhiError> {
        check_exponent_field(&p, probes)?;
        Ok(PhiFunction { kind: PhiKind::ShiftedPower { p } })
    }

    pub fn double_power(
        p: f64,
        q: f64,
        weight: SpatialField,
        probes: &[Point],
    ) -> Result<Self, PhiError> {
        if !(p > 1.0 && q > p) {
            return Err(invalid(format!("require 1 < p < q, got p = {p}, q = {q}"), None));
        }
        for &x in probes {
            let w = weight.eval(x);
            if !w.is_finite() || w < 0.0 {
                return Err(invalid(
                    format!("weight a(x) = {w} must be finite and >= 0 (a = {})", weight.describe()),
                    Some(x),
                ));
            }
        }
        Ok(PhiFunction { kind: PhiKind::DoublePower { p, q, weight } })
    }

    pub fn exp_power(p: SpatialField, probes: &[Point]) -> Result<Self, PhiError> {
        check_exponent_field(&p, probes)?;
        Ok(PhiFunction { kind: PhiKind::ExpPower { p } })
    }

    pub fn custom(
        eval: impl Fn(Point, f64) -> f64 + Send + Sync + 'static,
        density: Option<ModulusFn>,
        desc: &str,
    ) -> Self {
        PhiFunction {
            kind: PhiKind::Custom { eval: Arc::new(eval), density, desc: desc.to_string() },
        }
    }

    /// A custom function of `s` alone, handy for scalar oracles.
    pub fn scalar(eval: impl Fn(f64) -> f64 + Send + Sync + 'static, desc: &str) -> Self {
        PhiFunction::custom(move |_, s| eval(s), None, desc)
    }

    pub fn family_id(&self) -> FamilyId {
        match &self.kind {
            PhiKind::PowerExponent { .. } => FamilyId::M1,
            PhiKind::PowerLog { .. } => FamilyId::M2,
            PhiKind::ShiftedPower { .. } => FamilyId::M3,
            PhiKind::DoublePower { .. } => FamilyId::M4,
            PhiKind::ExpPower { .. } => FamilyId::M5,
            PhiKind::Custom { .. } => FamilyId::Custom,
        }
    }

    /// Evaluate M(x, s). Nonnegative; overflow comes back as `INFINITY`.
    pub fn eval(&self, x: Point, s: f64) -> f64 {
        let s = s.abs();
        let v = match &self.kind {
            PhiKind::PowerExponent { p } => s.powf(p.eval(x)),
            PhiKind::PowerLog { p } => s.powf(p.eval(x)) * (std::f64::consts::E + s).ln(),
            PhiKind::ShiftedPower { p } => {
                let pv = p.eval(x);
                ((1.0 + s * s).powf(0.5 * pv) - 1.0) / pv
            }
            PhiKind::DoublePower { p, q, weight } => s.powf(*p) + weight.eval(x) * s.powf(*q),
            PhiKind::ExpPower { p } => s.powf(p.eval(x)).exp() - 1.0,
            PhiKind::Custom { eval, .. } => eval(x, s),
        };
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }

    /// Whether an analytic s-derivative is available (the power-exponent and
    /// double-power families, and custom functions supplied with one).
    pub fn density_available(&self) -> bool {
        matches!(
            &self.kind,
            PhiKind::PowerExponent { .. }
                | PhiKind::DoublePower { .. }
                | PhiKind::Custom { density: Some(_), .. }
        )
    }

    /// The density a(x, s) with M(x, t) = integral of a(x, .) over [0, t].
    ///
    /// Uses the analytic derivative when available, otherwise a second-order
    /// one-sided difference quotient with relative step 1e-6 * max(1, s)
    /// (one-sided because a(x, .) is only right-continuous at 0). a(x,0) = 0.
    pub fn eval_density(&self, x: Point, s: f64) -> Result<f64, PhiError> {
        let s = s.abs();
        if s == 0.0 {
            return Ok(0.0);
        }
        let analytic = match &self.kind {
            PhiKind::PowerExponent { p } => {
                let pv = p.eval(x);
                Some(pv * s.powf(pv - 1.0))
            }
            PhiKind::DoublePower { p, q, weight } => {
                Some(p * s.powf(p - 1.0) + weight.eval(x) * q * s.powf(q - 1.0))
            }
            PhiKind::Custom { density: Some(d), .. } => Some(d(x, s)),
            _ => None,
        };
        let v = match analytic {
            Some(v) => v,
            None => {
                let h = 1e-6 * s.max(1.0);
                let f0 = self.eval(x, s);
                let f1 = self.eval(x, s + h);
                let f2 = self.eval(x, s + 2.0 * h);
                if !(f0.is_finite() && f1.is_finite() && f2.is_finite()) {
                    return Err(PhiError::Overflow { s });
                }
                (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h)
            }
        };
        if v.is_finite() {
            Ok(v.max(0.0))
        } else {
            Err(PhiError::Overflow { s })
        }
    }
}

/// Serializable configuration block for a Young function; expression strings
/// are evaluated pointwise. This is the on-disk format the CLI consumes.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiSpec {
    pub family: String,
    /// Exponent expression p(x) (families m1/m2/m3/m5) or scalar p (m4).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<String>,
    /// Scalar q (family m4 only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<String>,
    /// Weight expression a(x) (family m4 only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<String>,
    /// Custom evaluation expression in (x, y, s).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
    /// Optional custom density expression in (x, y, s).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<String>,
}

fn parse_field(src: &str, what: &str) -> Result<SpatialField, PhiError> {
    let expr = Expr::parse(src)
        .map_err(|e| invalid(format!("{what}: {e} in `{src}`"), None))?;
    SpatialField::from_expr(&expr)
}

fn parse_scalar(src: &str, what: &str) -> Result<f64, PhiError> {
    let expr = Expr::parse(src)
        .map_err(|e| invalid(format!("{what}: {e} in `{src}`"), None))?;
    if expr.uses_s() {
        return Err(invalid(format!("{what} must be a constant, got `{src}`"), None));
    }
    let v = expr.eval(&EvalContext::default());
    if v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(format!("{what} must be finite, got `{src}`"), None))
    }
}

/// Build a Young function from its configuration block, validating the
/// parameters at probe points spread over `region`.
pub fn make_phi(spec: &PhiSpec, region: &BoxRegion) -> Result<PhiFunction, PhiError> {
    let probes = probe_points(region, 33);
    let need = |field: &Option<String>, name: &str| -> Result<String, PhiError> {
        field.clone().ok_or_else(|| {
            invalid(format!("family `{}` requires `{name}`", spec.family), None)
        })
    };
    match spec.family.to_ascii_lowercase().as_str() {
        "m1" => PhiFunction::power_exponent(parse_field(&need(&spec.p, "p")?, "p")?, &probes),
        "m2" => PhiFunction::power_log(parse_field(&need(&spec.p, "p")?, "p")?, &probes),
        "m3" => PhiFunction::shifted_power(parse_field(&need(&spec.p, "p")?, "p")?, &probes),
        "m4" => {
            let p = parse_scalar(&need(&spec.p, "p")?, "p")?;
            let q = parse_scalar(&need(&spec.q, "q")?, "q")?;
            let weight = parse_field(&need(&spec.weight, "weight")?, "weight")?;
            PhiFunction::double_power(p, q, weight, &probes)
        }
        "m5" => PhiFunction::exp_power(parse_field(&need(&spec.p, "p")?, "p")?, &probes),
        "custom" => {
            let src = need(&spec.expr, "expr")?;
            let eval = Expr::parse(&src)
                .map_err(|e| invalid(format!("expr: {e} in `{src}`"), None))?;
            let density = match &spec.density {
                Some(dsrc) => {
                    let d = Expr::parse(dsrc)
                        .map_err(|e| invalid(format!("density: {e} in `{dsrc}`"), None))?;
                    Some(Arc::new(move |p: Point, s: f64| {
                        d.eval(&EvalContext { x: p.x(), y: p.y(), s })
                    }) as ModulusFn)
                }
                None => None,
            };
            Ok(PhiFunction::custom(
                move |p, s| eval.eval(&EvalContext { x: p.x(), y: p.y(), s }),
                density,
                &src,
            ))
        }
        other => Err(invalid(format!("unknown family `{other}`"), None)),
    }
}

/// Interior probe points: the midpoint grid of `region` with n cells per axis.
pub fn probe_points(region: &BoxRegion, n: usize) -> Vec<Point> {
    let (lo_x, hi_x) = region.bounds[0];
    let wx = (hi_x - lo_x) / n as f64;
    if region.dim == 1 {
        (0..n).map(|i| Point::one_d(lo_x + (i as f64 + 0.5) * wx)).collect()
    } else {
        let (lo_y, hi_y) = region.bounds[1];
        let m = (n as f64).sqrt().ceil() as usize;
        let wy = (hi_y - lo_y) / m as f64;
        let wx = (hi_x - lo_x) / m as f64;
        let mut out = Vec::with_capacity(m * m);
        for iy in 0..m {
            for ix in 0..m {
                out.push(Point::two_d(
                    lo_x + (ix as f64 + 0.5) * wx,
                    lo_y + (iy as f64 + 0.5) * wy,
                ));
            }
        }
        out
    }
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// A finite probe grid in x and s used by the axiom and growth checkers.
#[derive(Clone, Debug)]
pub struct ProbeGrid {
    pub xs: Vec<Point>,
    pub ss: Vec<f64>,
    pub description: String,
}

impl ProbeGrid {
    /// Default probe: 17 interior x-points, s = 0 plus 24 log-spaced values
    /// in [1e-3, 1e2].
    pub fn for_box(region: &BoxRegion) -> Self {
        Self::with_s_max(region, 1e2, 25)
    }

    /// Probe with s (resp. t) values up to `s_max`.
    pub fn with_s_max(region: &BoxRegion, s_max: f64, n_s: usize) -> Self {
        let xs = probe_points(region, 17);
        let mut ss = vec![0.0];
        ss.extend(logspace(1e-3, s_max, n_s.max(2) - 1));
        let description = format!(
            "{} x-points on {region}, {} s-values in [0, {s_max}]",
            xs.len(),
            ss.len()
        );
        ProbeGrid { xs, ss, description }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvexityViolation {
    pub x: Point,
    pub s1: f64,
    pub s2: f64,
    /// eval(midpoint) - (eval(s1) + eval(s2)) / 2, positive when convexity fails.
    pub gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MonotonicityViolation {
    pub x: Point,
    pub s_lo: f64,
    pub s_hi: f64,
    pub drop: f64,
}

/// Outcome of probing the Young-function axioms on a finite grid.
#[derive(Clone, Debug, Serialize)]
pub struct AxiomReport {
    pub checked_points: usize,
    pub zero_at_zero: bool,
    pub monotonicity_violations: Vec<MonotonicityViolation>,
    pub convexity_violations: Vec<ConvexityViolation>,
    /// (x, s) pairs where evaluation overflowed; recorded, not failures.
    pub overflow_points: Vec<(Point, f64)>,
    /// M(x, s_max) / s_max per x: grows with s_max for superlinear functions.
    pub superlinear_evidence: Vec<(Point, f64)>,
    /// M(x, s_min) / s_min per x at the smallest positive probe.
    pub sublinear_at_zero_evidence: Vec<(Point, f64)>,
}

impl AxiomReport {
    pub fn is_clean(&self) -> bool {
        self.zero_at_zero
            && self.monotonicity_violations.is_empty()
            && self.convexity_violations.is_empty()
    }
}

/// Probe the axioms (zero at zero, monotone, midpoint convex) on the grid.
/// Divergent evaluations are recorded as overflow entries, never failures.
pub fn validate_axioms(phi: &PhiFunction, probe: &ProbeGrid) -> AxiomReport {
    assert!(
        probe.ss.len() >= 3 && probe.ss.contains(&0.0),
        "probe needs at least 3 s-values including 0"
    );
    let mut ss = probe.ss.clone();
    ss.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let tol = |v: f64| 1e-9 * (1.0 + v.abs());

    let mut report = AxiomReport {
        checked_points: 0,
        zero_at_zero: true,
        monotonicity_violations: Vec::new(),
        convexity_violations: Vec::new(),
        overflow_points: Vec::new(),
        superlinear_evidence: Vec::new(),
        sublinear_at_zero_evidence: Vec::new(),
    };

    for &x in &probe.xs {
        let values: Vec<f64> = ss.iter().map(|&s| phi.eval(x, s)).collect();
        report.checked_points += values.len();
        for (&s, &v) in ss.iter().zip(&values) {
            if !v.is_finite() {
                report.overflow_points.push((x, s));
            }
        }
        if values[0].abs() > 1e-12 {
            report.zero_at_zero = false;
        }
        for (v, s) in values.windows(2).zip(ss.windows(2)) {
            if v[0].is_finite() && v[1].is_finite() && v[1] < v[0] - tol(v[0]) {
                report.monotonicity_violations.push(MonotonicityViolation {
                    x,
                    s_lo: s[0],
                    s_hi: s[1],
                    drop: v[0] - v[1],
                });
            }
        }
        for i in 0..ss.len() {
            for j in (i + 1)..ss.len() {
                let (v1, v2) = (values[i], values[j]);
                if !(v1.is_finite() && v2.is_finite()) {
                    continue;
                }
                let mid = 0.5 * (ss[i] + ss[j]);
                let vm = phi.eval(x, mid);
                if !vm.is_finite() {
                    report.overflow_points.push((x, mid));
                    continue;
                }
                let bound = 0.5 * (v1 + v2);
                if vm > bound + tol(bound) {
                    report.convexity_violations.push(ConvexityViolation {
                        x,
                        s1: ss[i],
                        s2: ss[j],
                        gap: vm - bound,
                    });
                }
            }
        }
        let positive: Vec<(f64, f64)> = ss
            .iter()
            .zip(&values)
            .filter(|(&s, &v)| s > 0.0 && v.is_finite())
            .map(|(&s, &v)| (s, v))
            .collect();
        if let Some(&(s, v)) = positive.last() {
            report.superlinear_evidence.push((x, v / s));
        }
        if let Some(&(s, v)) = positive.first() {
            report.sublinear_at_zero_evidence.push((x, v / s));
        }
    }
    report
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Delta2Status {
    Consistent,
    Falsified,
}

#[derive(Clone, Debug, Serialize)]
pub struct Delta2Witness {
    pub x: Point,
    pub t: f64,
    /// M(x, 2t) / M(x, t); infinite when doubling overflowed.
    pub ratio: f64,
}

/// Falsification-only verdict for the doubling growth condition
/// M(x, 2t) <= k M(x, t) + h. `consistent` means no witness was found on
/// the probe; it is never a proof.
#[derive(Clone, Debug, Serialize)]
pub struct Delta2Verdict {
    pub status: Delta2Status,
    pub witness: Option<Delta2Witness>,
    pub probe_spec: String,
    pub assumed_k: f64,
    pub assumed_h_bound: f64,
}

pub fn check_delta2(
    phi: &PhiFunction,
    probe: &ProbeGrid,
    assumed_k: f64,
    assumed_h_bound: f64,
) -> Result<Delta2Verdict, PhiError> {
    if !(assumed_k >= 1.0) {
        return Err(invalid(format!("assumed_k must be >= 1, got {assumed_k}"), None));
    }
    if !(assumed_h_bound >= 0.0) {
        return Err(invalid(
            format!("assumed_h_bound must be >= 0, got {assumed_h_bound}"),
            None,
        ));
    }
    let mut witness = None;
    'scan: for &x in &probe.xs {
        for &t in &probe.ss {
            if t <= 0.0 {
                continue;
            }
            let m1 = phi.eval(x, t);
            if !m1.is_finite() {
                continue;
            }
            let m2 = phi.eval(x, 2.0 * t);
            // Overflow of the doubled value with a finite base is itself a witness.
            let bound = assumed_k * m1 + assumed_h_bound;
            if m2 > bound + 1e-9 * (1.0 + bound) {
                let ratio = if m1 > 0.0 { m2 / m1 } else { f64::INFINITY };
                witness = Some(Delta2Witness { x, t, ratio });
                break 'scan;
            }
        }
    }
    Ok(Delta2Verdict {
        status: if witness.is_some() { Delta2Status::Falsified } else { Delta2Status::Consistent },
        witness,
        probe_spec: probe.description.clone(),
        assumed_k,
        assumed_h_bound,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegrabilityStatus {
    Finite,
    Diverging,
}

/// Refined estimates of the integral of x -> M(x, c) over a compact box.
#[derive(Clone, Debug, Serialize)]
pub struct IntegrabilityVerdict {
    pub compact_set: String,
    pub constant_c: f64,
    pub integral_estimates: Vec<f64>,
    pub status: IntegrabilityStatus,
    pub overflow_at: Option<Point>,
}

pub fn check_local_integrability(
    phi: &PhiFunction,
    region: &BoxRegion,
    c: f64,
    refinements: usize,
) -> Result<IntegrabilityVerdict, PhiError> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(invalid(format!("constant c must be positive, got {c}"), None));
    }
    if !region.is_valid() {
        return Err(invalid(format!("invalid compact box {region}"), None));
    }
    let base = if region.dim == 1 { 512 } else { 64 };
    let out = quad::midpoint_refined(region, base, refinements, &|p| phi.eval(p, c));
    // Finiteness additionally demands the last two estimates be Cauchy.
    let diverging = quad::diverging(&out.estimates, out.overflow_at.is_some(), quad::GROWTH_FACTOR)
        || !quad::cauchy_tail(&out.estimates, quad::GROWTH_FACTOR);
    Ok(IntegrabilityVerdict {
        compact_set: region.to_string(),
        constant_c: c,
        integral_estimates: out.estimates,
        status: if diverging { IntegrabilityStatus::Diverging } else { IntegrabilityStatus::Finite },
        overflow_at: out.overflow_at,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_probes() -> Vec<Point> {
        probe_points(&BoxRegion::one_d(0.0, 1.0), 33)
    }

    fn m1_const(p: f64) -> PhiFunction {
        PhiFunction::power_exponent(SpatialField::constant(p), &unit_probes()).unwrap()
    }

    #[test]
    fn family_formulas_at_reference_points() {
        // |s|^p with constant p = 2.
        let m1 = m1_const(2.0);
        assert_eq!(m1.eval(Point::one_d(0.3), 3.0), 9.0);
        // |s|^p + a(x) |s|^q at p = 2, q = 4, a = 1: 2^2 + 2^4 = 20.
        let m4 = PhiFunction::double_power(2.0, 4.0, SpatialField::constant(1.0), &unit_probes())
            .unwrap();
        assert_eq!(m4.eval(Point::one_d(0.5), 2.0), 20.0);
        // exp(|s|^p) - 1 at p = 2, s = 1: e - 1.
        let m5 = PhiFunction::exp_power(SpatialField::constant(2.0), &unit_probes()).unwrap();
        assert!((m5.eval(Point::one_d(0.1), 1.0) - (std::f64::consts::E - 1.0)).abs() < 1e-12);
        // Everybody vanishes at 0.
        for phi in [&m1, &m4, &m5] {
            assert_eq!(phi.eval(Point::one_d(0.4), 0.0), 0.0);
        }
    }

    #[test]
    fn doubling_ratio_is_exact_for_constant_exponent() {
        let phi = m1_const(3.0);
        let x = Point::one_d(0.2);
        for t in [0.1, 1.0, 7.5] {
            let ratio = phi.eval(x, 2.0 * t) / phi.eval(x, t);
            assert!((ratio - 8.0).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_parameters_are_rejected_with_a_point() {
        let p = Expr::parse("2 - 4*x").unwrap(); // dips below 1 on (0.25, 1)
        let field = SpatialField::from_expr(&p).unwrap();
        let err = PhiFunction::power_exponent(field, &unit_probes()).unwrap_err();
        match err {
            PhiError::InvalidParameter { at: Some(pt), .. } => assert!(pt.x() > 0.25),
            other => panic!("expected InvalidParameter with point, got {other:?}"),
        }
        assert!(PhiFunction::double_power(
            3.0,
            2.0,
            SpatialField::constant(1.0),
            &unit_probes()
        )
        .is_err());
    }

    #[test]
    fn density_analytic_and_difference_quotient() {
        let x = Point::one_d(0.0);
        let m1 = m1_const(2.0);
        assert!((m1.eval_density(x, 3.0).unwrap() - 6.0).abs() < 1e-12);
        assert_eq!(m1.eval_density(x, 0.0).unwrap(), 0.0);

        let m4 = PhiFunction::double_power(2.0, 4.0, SpatialField::constant(1.0), &unit_probes())
            .unwrap();
        assert!((m4.eval_density(x, 1.0).unwrap() - 6.0).abs() < 1e-12);

        // Power-log family falls back to the one-sided quotient; compare with
        // a high-order central-difference oracle of s^2 log(e + s).
        let m2 = PhiFunction::power_log(SpatialField::constant(2.0), &unit_probes()).unwrap();
        assert!(!m2.density_available());
        let f = |s: f64| s * s * (std::f64::consts::E + s).ln();
        let h = 1e-4;
        let oracle = (-f(1.0 + 2.0 * h) + 8.0 * f(1.0 + h) - 8.0 * f(1.0 - h) + f(1.0 - 2.0 * h))
            / (12.0 * h);
        let got = m2.eval_density(x, 1.0).unwrap();
        assert!((got - oracle).abs() < 1e-6, "got {got}, oracle {oracle}");
    }

    #[test]
    fn density_overflow_is_signalled() {
        let m5 = PhiFunction::exp_power(SpatialField::constant(2.0), &unit_probes()).unwrap();
        assert!(matches!(
            m5.eval_density(Point::one_d(0.5), 40.0),
            Err(PhiError::Overflow { .. })
        ));
    }

    #[test]
    fn axiom_report_clean_for_builtins() {
        let region = BoxRegion::one_d(0.0, 1.0);
        let probe = ProbeGrid::for_box(&region);
        for phi in [
            m1_const(2.0),
            PhiFunction::power_log(SpatialField::constant(1.5), &unit_probes()).unwrap(),
            PhiFunction::shifted_power(SpatialField::constant(3.0), &unit_probes()).unwrap(),
            PhiFunction::double_power(2.0, 4.0, SpatialField::constant(1.0), &unit_probes())
                .unwrap(),
            PhiFunction::exp_power(SpatialField::constant(2.0), &unit_probes()).unwrap(),
        ] {
            let report = validate_axioms(&phi, &probe);
            assert!(report.is_clean(), "{phi}: {report:?}");
        }
    }

    #[test]
    fn sqrt_is_caught_by_the_midpoint_test() {
        let phi = PhiFunction::scalar(|s| s.sqrt(), "sqrt(s)");
        let probe = ProbeGrid::for_box(&BoxRegion::one_d(0.0, 1.0));
        let report = validate_axioms(&phi, &probe);
        assert!(!report.convexity_violations.is_empty());
        let v = &report.convexity_violations[0];
        assert!(v.gap > 0.0);
    }

    #[test]
    fn superlinear_evidence_grows_for_cubic() {
        let phi = PhiFunction::shifted_power(SpatialField::constant(3.0), &unit_probes()).unwrap();
        let region = BoxRegion::one_d(0.0, 1.0);
        let report = validate_axioms(&phi, &ProbeGrid::for_box(&region));
        assert!(report.is_clean());
        for &(_, ratio) in &report.superlinear_evidence {
            // At s = 100 the ratio M(x, s)/s is far above the slope near zero.
            assert!(ratio > 1e2);
        }
        for &(_, ratio) in &report.sublinear_at_zero_evidence {
            assert!(ratio < 1e-2);
        }
    }

    #[test]
    fn delta2_consistent_for_bounded_exponents_and_falsified_for_exponential() {
        let region = BoxRegion::one_d(0.0, 1.0);
        let probe = ProbeGrid::with_s_max(&region, 16.0, 25);

        let p = SpatialField::from_expr(&Expr::parse("2 + 2*x").unwrap()).unwrap();
        let m1 = PhiFunction::power_exponent(p, &unit_probes()).unwrap();
        let v = check_delta2(&m1, &probe, 16.0, 0.0).unwrap();
        assert_eq!(v.status, Delta2Status::Consistent, "{v:?}");

        let m4 = PhiFunction::double_power(2.0, 4.0, SpatialField::constant(1.0), &unit_probes())
            .unwrap();
        let v = check_delta2(&m4, &probe, 16.0, 0.0).unwrap();
        assert_eq!(v.status, Delta2Status::Consistent);

        let m5 = PhiFunction::exp_power(SpatialField::constant(2.0), &unit_probes()).unwrap();
        let v = check_delta2(&m5, &probe, 1e6, 1e6).unwrap();
        assert_eq!(v.status, Delta2Status::Falsified);
        let w = v.witness.expect("witness");
        // The witness satisfies the violated inequality concretely.
        let lhs = m5.eval(w.x, 2.0 * w.t);
        let rhs = 1e6 * m5.eval(w.x, w.t) + 1e6;
        assert!(lhs > rhs);
    }

    #[test]
    fn delta2_rejects_bad_assumptions() {
        let phi = m1_const(2.0);
        let probe = ProbeGrid::for_box(&BoxRegion::one_d(0.0, 1.0));
        assert!(check_delta2(&phi, &probe, 0.5, 0.0).is_err());
        assert!(check_delta2(&phi, &probe, 2.0, -1.0).is_err());
    }

    #[test]
    fn local_integrability_of_builtin_examples() {
        let probes = unit_probes();
        // Variable exponent on (0,1), K = [0.1, 0.9], c = 3.
        let p = SpatialField::from_expr(&Expr::parse("2 + x").unwrap()).unwrap();
        let m1 = PhiFunction::power_exponent(p, &probes).unwrap();
        let v =
            check_local_integrability(&m1, &BoxRegion::one_d(0.1, 0.9), 3.0, 4).unwrap();
        assert_eq!(v.status, IntegrabilityStatus::Finite);

        // Locally integrable weight 1/sqrt(x) on [0.25, 0.75].
        let w = SpatialField::from_expr(&Expr::parse("1 / sqrt(x)").unwrap()).unwrap();
        let m4 = PhiFunction::double_power(2.0, 3.0, w, &probes).unwrap();
        let v =
            check_local_integrability(&m4, &BoxRegion::one_d(0.25, 0.75), 1.0, 4).unwrap();
        assert_eq!(v.status, IntegrabilityStatus::Finite);

        // Constant exponent: integral of 2^2 over [0,1] is exactly 4.
        let m1c = m1_const(2.0);
        let v = check_local_integrability(&m1c, &BoxRegion::one_d(0.0, 1.0), 2.0, 4).unwrap();
        assert_eq!(v.status, IntegrabilityStatus::Finite);
        assert!((v.integral_estimates.last().unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn integrability_estimates_monotone_in_region() {
        let p = SpatialField::from_expr(&Expr::parse("2 + x").unwrap()).unwrap();
        let phi = PhiFunction::power_exponent(p, &unit_probes()).unwrap();
        let small =
            check_local_integrability(&phi, &BoxRegion::one_d(0.2, 0.6), 2.0, 3).unwrap();
        let large =
            check_local_integrability(&phi, &BoxRegion::one_d(0.1, 0.9), 2.0, 3).unwrap();
        let (a, b) = (
            small.integral_estimates.last().unwrap(),
            large.integral_estimates.last().unwrap(),
        );
        assert!(*a <= *b + 1e-9);
    }

    #[test]
    fn make_phi_from_spec() {
        let region = BoxRegion::one_d(0.0, 1.0);
        let spec = PhiSpec {
            family: "m4".into(),
            p: Some("2".into()),
            q: Some("4".into()),
            weight: Some("1".into()),
            ..Default::default()
        };
        let phi = make_phi(&spec, &region).unwrap();
        assert_eq!(phi.family_id(), FamilyId::M4);
        assert_eq!(phi.eval(Point::one_d(0.5), 2.0), 20.0);

        let bad = PhiSpec { family: "m1".into(), p: Some("1".into()), ..Default::default() };
        assert!(make_phi(&bad, &region).is_err());

        let custom = PhiSpec {
            family: "custom".into(),
            expr: Some("s^2".into()),
            ..Default::default()
        };
        let phi = make_phi(&custom, &region).unwrap();
        assert_eq!(phi.eval(Point::one_d(0.0), 3.0), 9.0);
    }
}
