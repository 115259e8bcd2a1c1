//! Single-qubit Bloch-vector arithmetic.
//!
//! Rotations follow the right-hand rule about the named positive axis, so
//! `Rx(phi)` takes `(0, 0, 1)` to `(0, -sin phi, cos phi)`. Free evolution is
//! the closed-form two-channel model: transverse components precess about Z
//! and shrink with `T2`, the longitudinal component relaxes toward `+1` with
//! `T1`. No time stepping is involved.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlochVector<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Scalar> BlochVector<T> {
    /// Builds a vector, rejecting non-finite components and states outside the ball.
    pub fn try_new(x: T, y: T, z: T) -> Result<Self> {
        let v = Self { x, y, z };
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(invalid("Bloch components must be finite"));
        }
        if !v.is_physical() {
            return Err(invalid(format!("Bloch vector norm {} exceeds 1", v.norm())));
        }
        Ok(v)
    }

    /// The ground state `|0>`, `(0, 0, 1)`.
    pub fn ground() -> Self {
        Self {
            x: T::zero(),
            y: T::zero(),
            z: T::one(),
        }
    }

    pub fn excited() -> Self {
        Self {
            x: T::zero(),
            y: T::zero(),
            z: -T::one(),
        }
    }

    pub fn norm_sqr(&self) -> T {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    pub fn is_physical(&self) -> bool {
        self.norm_sqr() <= T::one() + T::physical_tol()
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        (self.x - other.x)
            .abs()
            .max((self.y - other.y).abs())
            .max((self.z - other.z).abs())
    }

    pub fn rotate(self, axis: Axis, angle: T) -> Result<Self> {
        apply_rotation(self, axis, angle)
    }
}

/// Relaxation time constants in microseconds. `+inf` disables a channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxationTimes<T> {
    pub t1: T,
    pub t2: T,
}

impl<T: Scalar> RelaxationTimes<T> {
    pub fn new(t1: T, t2: T) -> Result<Self> {
        if t1.is_nan() || t2.is_nan() || t1 <= T::zero() || t2 <= T::zero() {
            return Err(invalid(format!(
                "relaxation times must be positive (t1={t1}, t2={t2})"
            )));
        }
        if t2 > T::of(2.0) * t1 {
            return Err(invalid(format!("t2={t2} exceeds 2*t1={}", T::of(2.0) * t1)));
        }
        Ok(Self { t1, t2 })
    }

    /// No decay at all.
    pub fn infinite() -> Self {
        Self {
            t1: T::infinity(),
            t2: T::infinity(),
        }
    }

    /// Rates multiplied by `lambda`: times divided by it, `lambda = 0` disables decay.
    pub fn scaled(&self, lambda: T) -> Self {
        if lambda == T::zero() {
            return Self::infinite();
        }
        Self {
            t1: self.t1 / lambda,
            t2: self.t2 / lambda,
        }
    }

    /// Pure-dephasing rate `1/T2 - 1/(2 T1)` in 1/us.
    pub fn pure_dephasing_rate(&self) -> T {
        self.t2.recip() - (T::of(2.0) * self.t1).recip()
    }
}

pub fn apply_rotation<T: Scalar>(
    state: BlochVector<T>,
    axis: Axis,
    angle: T,
) -> Result<BlochVector<T>> {
    if !angle.is_finite() {
        return Err(invalid(format!(
            "rotation angle must be finite, got {angle}"
        )));
    }
    let (s, c) = angle.sin_cos();
    let BlochVector { x, y, z } = state;
    Ok(match axis {
        Axis::X => BlochVector {
            x,
            y: y * c - z * s,
            z: y * s + z * c,
        },
        Axis::Y => BlochVector {
            x: x * c + z * s,
            y,
            z: z * c - x * s,
        },
        Axis::Z => BlochVector {
            x: x * c - y * s,
            y: x * s + y * c,
            z,
        },
    })
}

/// Closed-form free evolution for `duration` microseconds.
///
/// `detuning` (rad/us) precesses the transverse plane about +Z; decay and
/// precession commute, so both are applied in one step.
pub fn free_evolution<T: Scalar>(
    state: BlochVector<T>,
    duration: T,
    rt: RelaxationTimes<T>,
    detuning: T,
) -> Result<BlochVector<T>> {
    if duration.is_nan() || duration < T::zero() {
        return Err(invalid(format!("duration must be >= 0, got {duration}")));
    }
    if !detuning.is_finite() {
        return Err(invalid("detuning must be finite"));
    }
    let transverse = (-duration / rt.t2).exp();
    let longitudinal = (-duration / rt.t1).exp();
    let (s, c) = (detuning * duration).sin_cos();
    let BlochVector { x, y, z } = state;
    Ok(BlochVector {
        x: transverse * (x * c - y * s),
        y: transverse * (x * s + y * c),
        z: z * longitudinal + (T::one() - longitudinal),
    })
}

pub fn z_expectation<T: Scalar>(state: BlochVector<T>) -> T {
    state.z
}
