//! Approximation operators on grid functions: translation with zero
//! extension, truncation against a compact exhaustion, and mollification
//! by the smooth bump kernel.

use crate::geometry::{BoxRegion, Point};
use crate::grid::{AnalyticFn, Domain, GridFunction};
use rayon::prelude::*;
use std::sync::Arc;

/// Nodes per axis of the tensor midpoint rule behind the mollifier kernel.
const KERNEL_RESOLUTION: usize = 64;

/// u(x + h) where both x and x + h lie in the domain, 0 otherwise.
///
/// Uses the analytic closure when present. Samples-only functions shift by
/// whole cells, with h rounded to the grid.
pub fn translate(u: &GridFunction, h: [f64; 2]) -> GridFunction {
    let domain = u.domain;
    let bounds = domain.bounds;
    // supp(tau_h u) = (supp(u) - h) intersected with the domain.
    let support = u
        .support_hint
        .unwrap_or(bounds)
        .translated([-h[0], -h[1]])
        .intersect(&bounds);
    let moved = match u.analytic() {
        Some(f) => {
            let f = f.clone();
            let closure: AnalyticFn = Arc::new(move |p: Point| {
                let q = p.offset(h);
                if bounds.contains(p) && bounds.contains(q) {
                    f(q)
                } else {
                    0.0
                }
            });
            let samples = domain.centers().map(|p| closure(p)).collect();
            GridFunction::from_parts(domain, samples, Some(closure), None)
        }
        None => {
            let cols = domain.resolution as i64;
            let rows = if domain.dim() == 1 { 1 } else { cols };
            let shift_x = (h[0] / domain.cell_width(0)).round() as i64;
            let shift_y = if domain.dim() == 2 {
                (h[1] / domain.cell_width(1)).round() as i64
            } else {
                0
            };
            let mut samples = vec![0.0; domain.cell_count()];
            for row in 0..rows {
                for col in 0..cols {
                    let (sc, sr) = (col + shift_x, row + shift_y);
                    if sc >= 0 && sc < cols && sr >= 0 && sr < rows {
                        samples[(row * cols + col) as usize] =
                            u.samples[(sr * cols + sc) as usize];
                    }
                }
            }
            let mut g = GridFunction::from_samples(domain, samples).expect("finite samples");
            g.support_hint = None;
            g
        }
    };
    match support {
        Some(b) => moved.with_support_hint(b),
        // Support left the domain entirely: the zero function.
        None => GridFunction::zero(domain),
    }
}

/// The compact exhaustion K_j = { x : |x| <= j, dist(x, complement) >= 1/j }.
#[derive(Clone, Copy, Debug)]
pub struct CompactExhaustion {
    pub index: u32,
    pub domain_bounds: BoxRegion,
}

impl CompactExhaustion {
    pub fn new(index: u32, domain: &Domain) -> Self {
        assert!(index >= 1);
        CompactExhaustion { index, domain_bounds: domain.bounds }
    }

    pub fn contains(&self, p: Point) -> bool {
        let j = self.index as f64;
        p.norm() <= j && self.domain_bounds.boundary_distance(p) >= 1.0 / j
    }

    /// Bounding box of the mask (exact in 1-d; the 2-d mask also carries the
    /// Euclidean ball constraint inside this box). `None` when empty.
    pub fn bounding_box(&self) -> Option<BoxRegion> {
        let j = self.index as f64;
        let mut out = self.domain_bounds;
        for a in 0..out.dim {
            let (lo, hi) = out.bounds[a];
            let lo = (lo + 1.0 / j).max(-j);
            let hi = (hi - 1.0 / j).min(j);
            if lo >= hi {
                return None;
            }
            out.bounds[a] = (lo, hi);
        }
        Some(out)
    }
}

/// Clamp to [-j, j] and cut off outside the exhaustion set K_j, producing a
/// bounded, compactly supported function.
pub fn truncate(u: &GridFunction, j: u32) -> GridFunction {
    let ex = CompactExhaustion::new(j, &u.domain);
    let level = j as f64;
    let domain = u.domain;
    let mask_box = match ex.bounding_box() {
        Some(b) => b,
        None => return GridFunction::zero(domain),
    };
    let support = u.support_hint.unwrap_or(domain.bounds).intersect(&mask_box);
    let out = match u.analytic() {
        Some(f) => {
            let f = f.clone();
            let closure: AnalyticFn = Arc::new(move |p: Point| {
                if ex.contains(p) {
                    f(p).clamp(-level, level)
                } else {
                    0.0
                }
            });
            let samples = domain.centers().map(|p| closure(p)).collect();
            GridFunction::from_parts(domain, samples, Some(closure), None)
        }
        None => {
            let samples = u
                .samples
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    if ex.contains(domain.cell_center(i)) {
                        v.clamp(-level, level)
                    } else {
                        0.0
                    }
                })
                .collect();
            let mut g = GridFunction::from_samples(domain, samples).expect("finite samples");
            g.support_hint = None;
            g
        }
    };
    match support {
        Some(b) => out.with_support_hint(b),
        None => GridFunction::zero(domain),
    }
}

/// Midpoint nodes and weights of the bump kernel on the unit ball,
/// renormalized so the discrete mass is exactly 1.
pub(crate) fn kernel_nodes(dim: usize, resolution: usize) -> Vec<([f64; 2], f64)> {
    let bump = |r2: f64| -> f64 {
        if r2 < 1.0 {
            (-1.0 / (1.0 - r2)).exp()
        } else {
            0.0
        }
    };
    let w = 2.0 / resolution as f64;
    let coord = |i: usize| -1.0 + (i as f64 + 0.5) * w;
    let mut nodes = Vec::new();
    if dim == 1 {
        for i in 0..resolution {
            let y = coord(i);
            let v = bump(y * y);
            if v > 0.0 {
                nodes.push(([y, 0.0], v * w));
            }
        }
    } else {
        for iy in 0..resolution {
            for ix in 0..resolution {
                let (yx, yy) = (coord(ix), coord(iy));
                let v = bump(yx * yx + yy * yy);
                if v > 0.0 {
                    nodes.push(([yx, yy], v * w * w));
                }
            }
        }
    }
    let mass: f64 = nodes.iter().map(|(_, w)| w).sum();
    for node in &mut nodes {
        node.1 /= mass;
    }
    nodes
}

/// Mollification output; the smooth-compact-support guarantee holds only
/// when epsilon stays below the distance from the support to the boundary.
#[derive(Clone, Debug)]
pub struct Mollified {
    pub function: GridFunction,
    pub smooth_compact_guarantee: bool,
}

/// Convolve with the rescaled bump kernel: the value at x averages
/// u(x - epsilon y) over the unit ball against the kernel, with u extended
/// by zero outside the domain.
pub fn mollify(u: &GridFunction, epsilon: f64) -> Mollified {
    assert!(epsilon > 0.0 && epsilon.is_finite());
    let domain = u.domain;
    let nodes = Arc::new(kernel_nodes(domain.dim(), KERNEL_RESOLUTION));
    let smooth_compact_guarantee = match u.support_hint {
        Some(hint) => epsilon < hint.inner_margin(&domain.bounds),
        None => false,
    };
    let base = u.clone();
    let nodes_c = nodes.clone();
    let closure: AnalyticFn = Arc::new(move |p: Point| {
        let mut sum = 0.0;
        for (y, w) in nodes_c.iter() {
            sum += w * base.value_at(p.offset([-epsilon * y[0], -epsilon * y[1]]));
        }
        sum
    });
    let samples: Vec<f64> = (0..domain.cell_count())
        .into_par_iter()
        .map(|i| closure(domain.cell_center(i)))
        .collect();
    let support = u
        .support_hint
        .map(|hint| hint.inflated(epsilon))
        .and_then(|b| b.intersect(&domain.bounds));
    let g = GridFunction::from_parts(domain, samples, Some(closure), support);
    Mollified { function: g, smooth_compact_guarantee }
}
