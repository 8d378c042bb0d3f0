use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Frame {
    /// alpha/beta, fixed to the stator
    Stationary,
    /// d/q, rotating with the rotor
    Rotor,
}

/// A two-axis quantity (current, voltage or flux linkage) tagged with the
/// frame it is expressed in.
///
/// Arithmetic between vectors of different frames is a programming error and
/// panics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameVector {
    pub x1: f64,
    pub x2: f64,
    pub frame: Frame,
}

impl FrameVector {
    pub const fn new(x1: f64, x2: f64, frame: Frame) -> Self {
        FrameVector { x1, x2, frame }
    }

    pub const fn stationary(alpha: f64, beta: f64) -> Self {
        Self::new(alpha, beta, Frame::Stationary)
    }

    pub const fn rotor(d: f64, q: f64) -> Self {
        Self::new(d, q, Frame::Rotor)
    }

    pub const fn zero(frame: Frame) -> Self {
        Self::new(0.0, 0.0, frame)
    }

    /// Unit vector at `angle` scaled by `magnitude`.
    pub fn polar(magnitude: f64, angle: f64, frame: Frame) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(magnitude * c, magnitude * s, frame)
    }

    pub fn magnitude(&self) -> f64 {
        self.x1.hypot(self.x2)
    }

    pub fn angle(&self) -> f64 {
        self.x2.atan2(self.x1)
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.check(other);
        self.x1 * other.x1 + self.x2 * other.x2
    }

    /// z-component of the 2-D cross product `self x other`.
    pub fn cross(&self, other: &Self) -> f64 {
        self.check(other);
        self.x1 * other.x2 - self.x2 * other.x1
    }

    pub fn is_finite(&self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }

    /// Rotate by +90 degrees (multiplication by j).
    pub fn rotate_quarter(&self) -> Self {
        Self::new(-self.x2, self.x1, self.frame)
    }

    #[inline]
    fn check(&self, other: &Self) {
        assert!(
            self.frame == other.frame,
            "mixed-frame arithmetic: {:?} vs {:?}",
            self.frame,
            other.frame
        );
    }
}

impl fmt::Display for FrameVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = match self.frame {
            Frame::Stationary => ("alpha", "beta"),
            Frame::Rotor => ("d", "q"),
        };
        write!(f, "({a}={}, {b}={})", self.x1, self.x2)
    }
}

impl Add for FrameVector {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.check(&rhs);
        Self::new(self.x1 + rhs.x1, self.x2 + rhs.x2, self.frame)
    }
}

impl Sub for FrameVector {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.check(&rhs);
        Self::new(self.x1 - rhs.x1, self.x2 - rhs.x2, self.frame)
    }
}

impl AddAssign for FrameVector {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl SubAssign for FrameVector {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl Neg for FrameVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x1, -self.x2, self.frame)
    }
}

impl Mul<f64> for FrameVector {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self::new(self.x1 * k, self.x2 * k, self.frame)
    }
}

impl Mul<FrameVector> for f64 {
    type Output = FrameVector;
    fn mul(self, v: FrameVector) -> FrameVector {
        v * self
    }
}

/// Wrap an angle to `[0, 2pi)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    // rem_euclid can return exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Wrap an angle to `(-pi, pi]`.
pub(crate) fn wrap_pm_pi(theta: f64) -> f64 {
    let w = wrap_angle(theta);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Stationary -> rotor frame: `[[cos, sin], [-sin, cos]]`.
///
/// # Panics
/// If `v` is not a stationary-frame vector.
pub fn park(theta: f64, v: FrameVector) -> FrameVector {
    assert_eq!(v.frame, Frame::Stationary, "park expects a stationary-frame vector");
    let (s, c) = theta.sin_cos();
    FrameVector::rotor(c * v.x1 + s * v.x2, -s * v.x1 + c * v.x2)
}

/// Rotor -> stationary frame (transpose of the Park matrix).
///
/// # Panics
/// If `v` is not a rotor-frame vector.
pub fn inverse_park(theta: f64, v: FrameVector) -> FrameVector {
    assert_eq!(v.frame, Frame::Rotor, "inverse_park expects a rotor-frame vector");
    let (s, c) = theta.sin_cos();
    FrameVector::stationary(c * v.x1 - s * v.x2, s * v.x1 + c * v.x2)
}

const HALF_SQRT3: f64 = 0.866_025_403_784_438_6;

/// Amplitude-invariant three-phase -> alpha/beta projection. The zero-sequence
/// component is discarded.
pub fn clarke(abc: [f64; 3]) -> FrameVector {
    let [a, b, c] = abc;
    FrameVector::stationary(
        2.0 / 3.0 * (a - 0.5 * b - 0.5 * c),
        2.0 / 3.0 * (HALF_SQRT3 * b - HALF_SQRT3 * c),
    )
}

/// alpha/beta -> phase quantities, assuming zero sequence.
pub fn inverse_clarke(v: FrameVector) -> [f64; 3] {
    assert_eq!(v.frame, Frame::Stationary);
    [
        v.x1,
        -0.5 * v.x1 + HALF_SQRT3 * v.x2,
        -0.5 * v.x1 - HALF_SQRT3 * v.x2,
    ]
}
