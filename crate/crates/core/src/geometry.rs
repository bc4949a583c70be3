//! Points and axis-aligned boxes in dimension 1 or 2.
//!
//! Everything downstream (grids, quadrature, masks) works on open boxes;
//! openness only matters at measure-zero faces, so containment here is
//! closed and callers that care sample strictly interior points.

use serde::Serialize;
use std::fmt;

/// A point of the ambient space. For 1-d points the second coordinate is 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Point {
    pub dim: usize,
    pub coords: [f64; 2],
}

impl Point {
    pub fn one_d(x: f64) -> Self {
        Point { dim: 1, coords: [x, 0.0] }
    }

    pub fn two_d(x: f64, y: f64) -> Self {
        Point { dim: 2, coords: [x, y] }
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.coords[0]
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.coords[1]
    }

    /// Euclidean norm over the active coordinates.
    pub fn norm(&self) -> f64 {
        match self.dim {
            1 => self.coords[0].abs(),
            _ => self.coords[0].hypot(self.coords[1]),
        }
    }

    pub fn offset(&self, h: [f64; 2]) -> Point {
        Point {
            dim: self.dim,
            coords: [self.coords[0] + h[0], self.coords[1] + h[1]],
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dim == 1 {
            write!(f, "({})", self.coords[0])
        } else {
            write!(f, "({}, {})", self.coords[0], self.coords[1])
        }
    }
}

/// An axis-aligned box. For 1-d boxes the second axis is the dummy (0, 1).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoxRegion {
    pub dim: usize,
    pub bounds: [(f64, f64); 2],
}

impl BoxRegion {
    pub fn one_d(lo: f64, hi: f64) -> Self {
        BoxRegion { dim: 1, bounds: [(lo, hi), (0.0, 1.0)] }
    }

    pub fn two_d(lo_x: f64, hi_x: f64, lo_y: f64, hi_y: f64) -> Self {
        BoxRegion { dim: 2, bounds: [(lo_x, hi_x), (lo_y, hi_y)] }
    }

    pub fn is_valid(&self) -> bool {
        (0..self.dim).all(|a| {
            let (lo, hi) = self.bounds[a];
            lo.is_finite() && hi.is_finite() && lo < hi
        })
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|a| self.bounds[a].1 - self.bounds[a].0).product()
    }

    /// Closed containment.
    pub fn contains(&self, p: Point) -> bool {
        (0..self.dim).all(|a| {
            let (lo, hi) = self.bounds[a];
            p.coords[a] >= lo && p.coords[a] <= hi
        })
    }

    pub fn contains_box(&self, other: &BoxRegion) -> bool {
        (0..self.dim).all(|a| {
            let (lo, hi) = self.bounds[a];
            let (olo, ohi) = other.bounds[a];
            olo >= lo && ohi <= hi
        })
    }

    /// Intersection, or `None` when the boxes only touch or miss each other.
    pub fn intersect(&self, other: &BoxRegion) -> Option<BoxRegion> {
        let mut out = *self;
        for a in 0..self.dim {
            let lo = self.bounds[a].0.max(other.bounds[a].0);
            let hi = self.bounds[a].1.min(other.bounds[a].1);
            if lo >= hi {
                return None;
            }
            out.bounds[a] = (lo, hi);
        }
        Some(out)
    }

    /// Smallest box containing both.
    pub fn hull(&self, other: &BoxRegion) -> BoxRegion {
        let mut out = *self;
        for a in 0..self.dim {
            out.bounds[a] = (
                self.bounds[a].0.min(other.bounds[a].0),
                self.bounds[a].1.max(other.bounds[a].1),
            );
        }
        out
    }

    pub fn translated(&self, h: [f64; 2]) -> BoxRegion {
        let mut out = *self;
        for a in 0..self.dim {
            out.bounds[a] = (self.bounds[a].0 + h[a], self.bounds[a].1 + h[a]);
        }
        out
    }

    pub fn inflated(&self, eps: f64) -> BoxRegion {
        let mut out = *self;
        for a in 0..self.dim {
            out.bounds[a] = (self.bounds[a].0 - eps, self.bounds[a].1 + eps);
        }
        out
    }

    /// Distance from an interior point to the boundary; exact for boxes
    /// (minimum of the per-axis face distances). Negative outside.
    pub fn boundary_distance(&self, p: Point) -> f64 {
        (0..self.dim)
            .map(|a| {
                let (lo, hi) = self.bounds[a];
                (p.coords[a] - lo).min(hi - p.coords[a])
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Margin between this box and the boundary of an enclosing box.
    pub fn inner_margin(&self, outer: &BoxRegion) -> f64 {
        (0..self.dim)
            .map(|a| {
                let (lo, hi) = self.bounds[a];
                let (olo, ohi) = outer.bounds[a];
                (lo - olo).min(ohi - hi)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn center(&self) -> Point {
        let cx = 0.5 * (self.bounds[0].0 + self.bounds[0].1);
        let cy = 0.5 * (self.bounds[1].0 + self.bounds[1].1);
        if self.dim == 1 {
            Point::one_d(cx)
        } else {
            Point::two_d(cx, cy)
        }
    }
}

impl fmt::Display for BoxRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.bounds[0].0, self.bounds[0].1)?;
        if self.dim == 2 {
            write!(f, "x[{}, {}]", self.bounds[1].0, self.bounds[1].1)?;
        }
        Ok(())
    }
}
