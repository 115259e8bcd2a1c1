//! The Aurora controller: phase-error proxy, squared-error objective,
//! sign-based update of the compensation offset, the closed loop built on
//! it, and the global offset sweep across a set of probe phases.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::emulator::{derive_seed, Backend, NoiseProfile};
use crate::error::{invalid, Error, Result};
use crate::mitigation::readout_mitigate_probabilities;
use crate::scalar::Scalar;
use crate::schedule::{build_circuit, MitigationCondition};

/// Largest gain magnitude for which the update stays in the stable region, rad.
pub const MAX_GAIN: f64 = 0.02;

pub fn ideal_z<T: Scalar>(phi: T) -> T {
    phi.cos()
}

/// `deltaZ = <Z>_ideal - <Z>_meas`.
pub fn phase_error_proxy<T: Scalar>(ideal: T, measured: T) -> T {
    ideal - measured
}

pub fn objective<T: Scalar>(ideal: T, measured: T) -> T {
    let d = phase_error_proxy(ideal, measured);
    d * d
}

fn sgn<T: Scalar>(v: T) -> T {
    if v > T::zero() {
        T::one()
    } else if v < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step<T> {
    /// Offset at which the measurement was taken.
    pub delta_phi: T,
    pub delta_z: T,
    pub objective: T,
}

/// Controller iterate. The gain bound is checked at construction and the
/// fields are read-only afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerState<T> {
    delta_phi: T,
    eta: T,
    iteration: usize,
    history: Vec<Step<T>>,
}

impl<T: Scalar> ControllerState<T> {
    pub fn new(delta_phi: T, eta: T) -> Result<Self> {
        if !eta.is_finite() || eta.abs() > T::of(MAX_GAIN) {
            return Err(Error::GainOutOfRange(eta.as_f64()));
        }
        if !delta_phi.is_finite() {
            return Err(invalid("initial offset must be finite"));
        }
        Ok(Self {
            delta_phi,
            eta,
            iteration: 0,
            history: Vec::new(),
        })
    }

    pub fn delta_phi(&self) -> T {
        self.delta_phi
    }

    pub fn eta(&self) -> T {
        self.eta
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn history(&self) -> &[Step<T>] {
        &self.history
    }

    /// `delta_phi <- delta_phi + eta * sgn(delta_z)` with `sgn(0) = 0`.
    pub fn sign_update(self, delta_z: T) -> Self {
        let step = self.eta * sgn(delta_z);
        self.advance(delta_z, step)
    }

    /// Records a measurement without moving.
    pub fn hold(self, delta_z: T) -> Self {
        self.advance(delta_z, T::zero())
    }

    fn advance(mut self, delta_z: T, step: T) -> Self {
        self.history.push(Step {
            delta_phi: self.delta_phi,
            delta_z,
            objective: delta_z * delta_z,
        });
        self.delta_phi = self.delta_phi + step;
        self.iteration += 1;
        self
    }

    /// Offset of the recorded step with the smallest objective (earliest on ties).
    pub fn best_recorded(&self) -> Option<T> {
        self.history
            .iter()
            .fold(None::<&Step<T>>, |best, s| match best {
                Some(b) if b.objective <= s.objective => Some(b),
                _ => Some(s),
            })
            .map(|s| s.delta_phi)
    }

    fn alternating_tail(&self, len: usize) -> bool {
        if self.history.len() < len {
            return false;
        }
        let tail = &self.history[self.history.len() - len..];
        let signs: Vec<T> = tail.iter().map(|s| sgn(s.delta_z)).collect();
        signs.iter().all(|s| *s != T::zero()) && signs.windows(2).all(|w| w[0] == -w[1])
    }
}

pub fn sign_update<T: Scalar>(state: ControllerState<T>, delta_z: T) -> ControllerState<T> {
    state.sign_update(delta_z)
}

/// How the controller observes `<Z>` for a given `(phi, delta_phi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe<T> {
    pub condition: MitigationCondition,
    pub idle_ns: T,
    pub dd_reps: usize,
    /// `0` selects expectation mode.
    pub shots: u64,
    /// Invert the readout map before forming the proxy.
    pub mitigate_readout: bool,
}

impl<T: Scalar> Probe<T> {
    /// Shallow probe: no idle window, so only the systematic phase bias and
    /// readout are visible. Readout is inverted.
    pub fn shallow(shots: u64) -> Self {
        Self {
            condition: MitigationCondition::DeltaPhiOnly,
            idle_ns: T::zero(),
            dd_reps: 12,
            shots,
            mitigate_readout: true,
        }
    }

    pub fn measure<B: Backend<T> + ?Sized>(
        &self,
        phi: T,
        delta_phi: T,
        backend: &B,
        profile: &NoiseProfile<T>,
        seed: u64,
    ) -> Result<T> {
        let template = build_circuit(
            phi,
            delta_phi,
            self.condition,
            self.idle_ns,
            self.dd_reps,
            profile.dt_ns,
        )?;
        let obs = backend.execute(&template, self.shots, profile, seed)?;
        if self.mitigate_readout {
            let m = readout_mitigate_probabilities(obs.p0(), &profile.readout)?;
            Ok(m.z())
        } else {
            Ok(obs.z())
        }
    }

    /// Stopping threshold on `|deltaZ|`: two binomial standard errors at
    /// `z = 0` when sampling, `1e-12` in expectation mode.
    pub fn threshold(&self) -> T {
        if self.shots == 0 {
            T::of(1e-12)
        } else {
            T::of(2.0) / T::from_u64(self.shots).unwrap().sqrt()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    LimitCycle,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedLoopRun<T> {
    pub phi: T,
    pub state: ControllerState<T>,
    pub termination: Termination,
    /// Last iterate, or the history-best offset after a limit cycle.
    pub final_delta_phi: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopSettings<T> {
    pub eta: T,
    pub max_iters: usize,
    pub initial_delta_phi: T,
}

impl<T: Scalar> Default for LoopSettings<T> {
    fn default() -> Self {
        Self {
            eta: T::of(0.01),
            max_iters: 50,
            initial_delta_phi: T::zero(),
        }
    }
}

/// Measure, form the proxy, update; repeat until the proxy falls below the
/// probe threshold, the signs alternate over four consecutive steps, or
/// `max_iters` is reached. Each iteration uses a fresh derived seed.
pub fn run_closed_loop<T: Scalar, B: Backend<T> + ?Sized>(
    phi: T,
    backend: &B,
    profile: &NoiseProfile<T>,
    probe: &Probe<T>,
    settings: &LoopSettings<T>,
    seed: u64,
) -> Result<ClosedLoopRun<T>> {
    if settings.max_iters == 0 {
        return Err(invalid("max_iters must be >= 1"));
    }
    let mut state = ControllerState::new(settings.initial_delta_phi, settings.eta)?;
    let ideal = ideal_z(phi);
    let threshold = probe.threshold();
    let mut termination = Termination::MaxIterations;
    for k in 0..settings.max_iters {
        let measured = probe.measure(
            phi,
            state.delta_phi(),
            backend,
            profile,
            derive_seed(seed, &[k as u64]),
        )?;
        let dz = phase_error_proxy(ideal, measured);
        if dz.abs() < threshold {
            state = state.hold(dz);
            termination = Termination::Converged;
            break;
        }
        state = state.sign_update(dz);
        if state.alternating_tail(4) {
            termination = Termination::LimitCycle;
            break;
        }
    }
    let final_delta_phi = match termination {
        Termination::LimitCycle => state.best_recorded().unwrap_or(state.delta_phi()),
        _ => state.delta_phi(),
    };
    Ok(ClosedLoopRun {
        phi,
        state,
        termination,
        final_delta_phi,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    pub lo: T,
    pub hi: T,
    pub step: T,
}

impl<T: Scalar> Default for Grid<T> {
    fn default() -> Self {
        Self {
            lo: T::of(-0.3),
            hi: T::of(0.3),
            step: T::of(0.005),
        }
    }
}

impl<T: Scalar> Grid<T> {
    pub fn points(&self) -> Result<Vec<T>> {
        if !(self.step > T::zero()) || !self.step.is_finite() {
            return Err(invalid("grid step must be positive"));
        }
        if !self.lo.is_finite() || !self.hi.is_finite() || self.hi < self.lo {
            return Err(invalid("grid bounds must be finite with lo <= hi"));
        }
        let n = ((self.hi - self.lo) / self.step + T::of(1e-9))
            .floor()
            .to_usize()
            .ok_or_else(|| invalid("grid too large"))?
            + 1;
        Ok((0..n)
            .map(|i| self.lo + T::from_usize(i).unwrap() * self.step)
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint<T> {
    pub delta_phi: T,
    pub mean_objective: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiCurve<T> {
    pub phi: T,
    /// Objective at each grid point, same order as [`CalibrationResult::grid`].
    pub objective: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult<T> {
    pub delta_phi_star: T,
    pub grid: Vec<GridPoint<T>>,
    pub per_phi_curves: Vec<PhiCurve<T>>,
}

/// Sweeps the offset grid and picks the value minimizing the objective
/// averaged over `phi_set` (ties go to the smallest `|delta_phi|`).
///
/// Grid points are evaluated in parallel; each `(grid index, phi index)`
/// cell has its own derived seed, so the result does not depend on thread count.
pub fn calibrate_offset<T: Scalar, B: Backend<T> + ?Sized>(
    phi_set: &[T],
    backend: &B,
    profile: &NoiseProfile<T>,
    probe: &Probe<T>,
    grid: &Grid<T>,
    seed: u64,
) -> Result<CalibrationResult<T>> {
    if phi_set.is_empty() {
        return Err(invalid("phi set must be nonempty"));
    }
    let offsets = grid.points()?;
    let rows: Vec<Vec<T>> = offsets
        .par_iter()
        .enumerate()
        .map(|(i, &dphi)| {
            phi_set
                .iter()
                .enumerate()
                .map(|(j, &phi)| {
                    let z = probe.measure(
                        phi,
                        dphi,
                        backend,
                        profile,
                        derive_seed(seed, &[i as u64, j as u64]),
                    )?;
                    Ok(objective(ideal_z(phi), z))
                })
                .collect::<Result<Vec<T>>>()
        })
        .collect::<Result<_>>()?;

    let count = T::from_usize(phi_set.len()).unwrap();
    let grid_points: Vec<GridPoint<T>> = offsets
        .iter()
        .zip(&rows)
        .map(|(&delta_phi, row)| GridPoint {
            delta_phi,
            mean_objective: row.iter().copied().sum::<T>() / count,
        })
        .collect();

    let best = grid_points
        .iter()
        .fold(None::<&GridPoint<T>>, |best, p| match best {
            Some(b)
                if b.mean_objective < p.mean_objective
                    || (b.mean_objective == p.mean_objective
                        && b.delta_phi.abs() <= p.delta_phi.abs()) =>
            {
                Some(b)
            }
            _ => Some(p),
        })
        .expect("grid has at least one point");

    let per_phi_curves = phi_set
        .iter()
        .enumerate()
        .map(|(j, &phi)| PhiCurve {
            phi,
            objective: rows.iter().map(|r| r[j]).collect(),
        })
        .collect();

    Ok(CalibrationResult {
        delta_phi_star: best.delta_phi,
        grid: grid_points,
        per_phi_curves,
    })
}
