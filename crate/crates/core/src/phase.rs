//! Angle helpers shared by the oracle, the engine and the readout.

use std::f64::consts::{PI, TAU};

/// Map an angle onto its canonical representative in `[0, 2π)`.
#[inline]
pub fn wrap(angle: f64) -> f64 {
    let r = angle.rem_euclid(TAU);
    // rem_euclid can return exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Map an angle onto `(−π, π]`.
#[inline]
pub fn center(angle: f64) -> f64 {
    let w = wrap(angle);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Shortest angular distance between two angles, in `[0, π]`.
#[inline]
pub fn circular_distance(a: f64, b: f64) -> f64 {
    center(a - b).abs()
}

/// Map a cycle fraction onto `[0, 1)`.
#[inline]
pub fn wrap_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Map a cycle fraction onto `(−½, ½]`.
#[inline]
pub fn center_unit(x: f64) -> f64 {
    let w = wrap_unit(x);
    if w > 0.5 {
        w - 1.0
    } else {
        w
    }
}

#[inline]
pub fn to_cycles(angle: f64) -> f64 {
    angle / TAU
}

#[inline]
pub fn to_radians(cycles: f64) -> f64 {
    cycles * TAU
}
