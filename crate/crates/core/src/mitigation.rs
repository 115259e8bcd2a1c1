//! Zero-noise extrapolation and confusion-matrix readout correction.
//!
//! Readout correction inverts the 2x2 confusion map exactly.

use serde::{Deserialize, Serialize};

use crate::emulator::{Confusion, ShotCounts};
use crate::error::{invalid, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZnePoint<T> {
    pub lambda: T,
    pub z: T,
}

/// Linear model `z(lambda) = a + b * lambda`; `z0` is the unclipped intercept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZneFit<T> {
    pub a: T,
    pub b: T,
    pub z0: T,
    pub out_of_range: bool,
}

/// Least-squares line through the points, evaluated at `lambda = 0`.
///
/// Points are sorted before accumulation, so the fit is bit-identical for
/// any input order.
pub fn zne_extrapolate<T: Scalar>(points: &[ZnePoint<T>]) -> Result<ZneFit<T>> {
    if points
        .iter()
        .any(|p| !(p.lambda > T::zero()) || !p.lambda.is_finite() || !p.z.is_finite())
    {
        return Err(invalid("ZNE points need finite z and lambda > 0"));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| {
        a.lambda
            .partial_cmp(&b.lambda)
            .unwrap()
            .then(a.z.partial_cmp(&b.z).unwrap())
    });
    let distinct = pts
        .windows(2)
        .filter(|w| w[0].lambda != w[1].lambda)
        .count()
        + 1;
    if pts.is_empty() || distinct < 2 {
        return Err(invalid("ZNE needs at least two distinct noise scales"));
    }
    let n = T::from_usize(pts.len()).unwrap();
    let mean_l = pts.iter().map(|p| p.lambda).sum::<T>() / n;
    let mean_z = pts.iter().map(|p| p.z).sum::<T>() / n;
    let sxx: T = pts.iter().map(|p| (p.lambda - mean_l).powi(2)).sum();
    let sxz: T = pts
        .iter()
        .map(|p| (p.lambda - mean_l) * (p.z - mean_z))
        .sum();
    let b = sxz / sxx;
    let a = mean_z - b * mean_l;
    Ok(ZneFit {
        a,
        b,
        z0: a,
        out_of_range: a.abs() > T::one(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MitigatedProbabilities<T> {
    pub p0: T,
    pub p1: T,
    /// The raw inverse left `[0, 1]` and was clamped and renormalized.
    pub clamped: bool,
}

impl<T: Scalar> MitigatedProbabilities<T> {
    pub fn z(&self) -> T {
        self.p0 - self.p1
    }
}

pub fn readout_mitigate<T: Scalar>(
    counts: ShotCounts,
    readout: &Confusion<T>,
) -> Result<MitigatedProbabilities<T>> {
    readout_mitigate_probabilities(counts.p0()?, readout)
}

/// Inverts the confusion map on an observed probability of reading 0.
pub fn readout_mitigate_probabilities<T: Scalar>(
    observed_p0: T,
    readout: &Confusion<T>,
) -> Result<MitigatedProbabilities<T>> {
    let det = readout.determinant();
    if det.abs() < T::of(1e-12) {
        return Err(invalid("readout confusion matrix is singular"));
    }
    let m = &readout.matrix;
    let q0 = observed_p0;
    let q1 = T::one() - observed_p0;
    let raw0 = (m[1][1] * q0 - m[1][0] * q1) / det;
    let raw1 = (m[0][0] * q1 - m[0][1] * q0) / det;
    let inside = |p: T| p >= T::zero() && p <= T::one();
    if inside(raw0) && inside(raw1) {
        return Ok(MitigatedProbabilities {
            p0: raw0,
            p1: raw1,
            clamped: false,
        });
    }
    let c0 = raw0.max(T::zero()).min(T::one());
    let c1 = raw1.max(T::zero()).min(T::one());
    let total = c0 + c1;
    Ok(MitigatedProbabilities {
        p0: c0 / total,
        p1: c1 / total,
        clamped: true,
    })
}
