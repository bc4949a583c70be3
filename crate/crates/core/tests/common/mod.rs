//! Shared fixtures for the integration suites.
#![allow(dead_code)] // each test binary uses its own subset

use mokit::geometry::BoxRegion;
use mokit::grid::{Domain, GridFunction};
use mokit::phi::{probe_points, PhiFunction, SpatialField};

pub fn unit_probes() -> Vec<mokit::geometry::Point> {
    probe_points(&BoxRegion::one_d(0.0, 1.0), 17)
}

pub fn m1_const(p: f64) -> PhiFunction {
    PhiFunction::power_exponent(SpatialField::constant(p), &unit_probes()).unwrap()
}

pub fn m1_variable() -> PhiFunction {
    let p = SpatialField::from_fn(|pt| 2.0 + pt.x(), "2 + x");
    PhiFunction::power_exponent(p, &unit_probes()).unwrap()
}

pub fn m2_const(p: f64) -> PhiFunction {
    PhiFunction::power_log(SpatialField::constant(p), &unit_probes()).unwrap()
}

pub fn m3_const(p: f64) -> PhiFunction {
    PhiFunction::shifted_power(SpatialField::constant(p), &unit_probes()).unwrap()
}

pub fn m4_unit_weight() -> PhiFunction {
    PhiFunction::double_power(2.0, 4.0, SpatialField::constant(1.0), &unit_probes()).unwrap()
}

pub fn indicator(d: Domain, lo: f64, hi: f64) -> GridFunction {
    GridFunction::sample_with_support(
        d,
        move |p| f64::from(p.x() > lo && p.x() < hi),
        BoxRegion::one_d(lo, hi),
    )
    .unwrap()
}
