//! Radial isomorphism between the square `S = [-1, 1]²` and the disc `u² + v² ≤ 2`.
//!
//! The forward map rescales each point along its ray so that the square of
//! max-norm `r` lands on the circle of Euclidean radius `√2·r`. Both maps are
//! defined on all of ℝ², because noisy received samples fall outside `S` and `C`.

use std::f64::consts::SQRT_2;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// Inputs whose max-norm is below this are treated as the origin.
const ZERO_THRESHOLD: f64 = 1e-300;

/// A point of the real plane (or a scalar with `v = 0` for 1D constellations).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlanePoint {
    pub u: f64,
    pub v: f64,
}

impl PlanePoint {
    pub const ORIGIN: PlanePoint = PlanePoint { u: 0.0, v: 0.0 };

    pub const fn new(u: f64, v: f64) -> Self {
        PlanePoint { u, v }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }

    pub(crate) fn check_finite(self) -> Result<Self> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(Error::NonFinite(self.u, self.v))
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.u * self.u + self.v * self.v
    }

    pub fn norm(&self) -> f64 {
        self.u.hypot(self.v)
    }

    /// Chebyshev norm `max(|u|, |v|)`.
    pub fn max_norm(&self) -> f64 {
        self.u.abs().max(self.v.abs())
    }

    pub fn dist_sqr(&self, other: &PlanePoint) -> f64 {
        let du = self.u - other.u;
        let dv = self.v - other.v;
        du * du + dv * dv
    }

    pub fn dot(&self, other: &PlanePoint) -> f64 {
        self.u * other.u + self.v * other.v
    }
}

impl Add for PlanePoint {
    type Output = PlanePoint;
    fn add(self, rhs: PlanePoint) -> PlanePoint {
        PlanePoint::new(self.u + rhs.u, self.v + rhs.v)
    }
}

impl Sub for PlanePoint {
    type Output = PlanePoint;
    fn sub(self, rhs: PlanePoint) -> PlanePoint {
        PlanePoint::new(self.u - rhs.u, self.v - rhs.v)
    }
}

impl Mul<PlanePoint> for f64 {
    type Output = PlanePoint;
    fn mul(self, rhs: PlanePoint) -> PlanePoint {
        PlanePoint::new(self * rhs.u, self * rhs.v)
    }
}

/// Square-to-disc map: `√2·max(|u|,|v|)/‖p‖ · p`.
pub fn radial_forward(p: PlanePoint) -> Result<PlanePoint> {
    p.check_finite().map(forward_unchecked)
}

/// Disc-to-square map: `‖p‖/(√2·max(|u|,|v|)) · p`.
pub fn radial_inverse(p: PlanePoint) -> Result<PlanePoint> {
    p.check_finite().map(inverse_unchecked)
}

// The unchecked variants are used on hot paths where the caller already
// guarantees finiteness (constellation points plus Gaussian noise).

#[inline]
pub(crate) fn forward_unchecked(p: PlanePoint) -> PlanePoint {
    let m = p.max_norm();
    if m < ZERO_THRESHOLD {
        return PlanePoint::ORIGIN;
    }
    (SQRT_2 * m / p.norm()) * p
}

#[inline]
pub(crate) fn inverse_unchecked(p: PlanePoint) -> PlanePoint {
    let m = p.max_norm();
    if m < ZERO_THRESHOLD {
        return PlanePoint::ORIGIN;
    }
    (p.norm() / (SQRT_2 * m)) * p
}
