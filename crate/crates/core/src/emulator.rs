//! Noisy single-qubit emulator behind a swappable backend boundary.
//!
//! Noise is split into four independently testable mechanisms:
//! amplitude damping (`T1`), Markovian pure dephasing (the rest of `T2`),
//! a quasi-static detuning drawn once per trial (refocused by XY8), and a
//! systematic phase bias added to the encoded phase once per circuit (not
//! refocused). The scale factor `lambda` multiplies the Markovian rates and
//! the quasi-static spread; it leaves the circuit untouched.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bloch::{apply_rotation, free_evolution, BlochVector, RelaxationTimes};
use crate::error::{invalid, Result};
use crate::scalar::Scalar;
use crate::schedule::{CircuitTemplate, EventKind, Role};

/// Row-stochastic readout map: `matrix[true][read]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Confusion<T> {
    pub matrix: [[T; 2]; 2],
}

impl<T: Scalar> Confusion<T> {
    /// `p10` is P(read 1 | true 0), `p01` is P(read 0 | true 1).
    pub fn new(p10: T, p01: T) -> Result<Self> {
        let c = Self {
            matrix: [[T::one() - p10, p10], [p01, T::one() - p01]],
        };
        c.validate()?;
        Ok(c)
    }

    pub fn symmetric(p: T) -> Result<Self> {
        Self::new(p, p)
    }

    pub fn identity() -> Self {
        Self {
            matrix: [[T::one(), T::zero()], [T::zero(), T::one()]],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, row) in self.matrix.iter().enumerate() {
            if row.iter().any(|p| !(*p >= T::zero() && *p <= T::one())) {
                return Err(invalid(format!(
                    "readout row {i} has an entry outside [0, 1]"
                )));
            }
            if (row[0] + row[1] - T::one()).abs() > T::physical_tol() {
                return Err(invalid(format!("readout row {i} does not sum to 1")));
            }
        }
        Ok(())
    }

    pub fn determinant(&self) -> T {
        let m = &self.matrix;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// Observed probability of reading 0 given the true probability of 0.
    pub fn apply(&self, p0_true: T) -> T {
        p0_true * self.matrix[0][0] + (T::one() - p0_true) * self.matrix[1][0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseProfile<T> {
    pub rt: RelaxationTimes<T>,
    pub dt_ns: T,
    /// Systematic phase bias in rad.
    pub eps_sys: T,
    /// Standard deviation of the per-trial detuning, rad/us.
    pub sigma_qs: T,
    pub readout: Confusion<T>,
    pub lambda: T,
}

impl<T: Scalar> NoiseProfile<T> {
    /// Device-calibrated defaults: T1 = 155.3 us, T2 = 110.3 us, a 0.15 rad
    /// bias, 0.05 rad/us quasi-static spread and 1% symmetric readout error.
    pub fn calibrated() -> Self {
        Self {
            rt: RelaxationTimes::new(T::of(155.3), T::of(110.3)).expect("valid defaults"),
            dt_ns: T::of(0.5),
            eps_sys: T::of(0.15),
            sigma_qs: T::of(0.05),
            readout: Confusion::symmetric(T::of(0.01)).expect("valid defaults"),
            lambda: T::one(),
        }
    }

    pub fn noise_free() -> Self {
        Self {
            rt: RelaxationTimes::infinite(),
            dt_ns: T::of(0.5),
            eps_sys: T::zero(),
            sigma_qs: T::zero(),
            readout: Confusion::identity(),
            lambda: T::one(),
        }
    }

    pub fn with_lambda(mut self, lambda: T) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn validate(&self) -> Result<()> {
        RelaxationTimes::new(self.rt.t1, self.rt.t2)?;
        self.readout.validate()?;
        if !(self.dt_ns > T::zero()) || !self.dt_ns.is_finite() {
            return Err(invalid("dt must be positive"));
        }
        if !self.eps_sys.is_finite() {
            return Err(invalid("eps_sys must be finite"));
        }
        if !(self.sigma_qs >= T::zero()) || !self.sigma_qs.is_finite() {
            return Err(invalid("sigma_qs must be finite and >= 0"));
        }
        if !(self.lambda >= T::zero()) || !self.lambda.is_finite() {
            return Err(invalid("lambda must be finite and >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotCounts {
    pub n0: u64,
    pub n1: u64,
}

impl ShotCounts {
    pub fn shots(&self) -> u64 {
        self.n0 + self.n1
    }

    pub fn p0<T: Scalar>(&self) -> Result<T> {
        let shots = self.shots();
        if shots == 0 {
            return Err(invalid("zero shots"));
        }
        Ok(T::from_u64(self.n0).unwrap() / T::from_u64(shots).unwrap())
    }
}

/// What a backend hands back: sampled counts, or the exact observed
/// probability of reading 0 when run in expectation mode (`shots = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Observation<T> {
    Sampled(ShotCounts),
    Exact { p0: T },
}

impl<T: Scalar> Observation<T> {
    pub fn p0(&self) -> T {
        match self {
            Observation::Sampled(c) => c.p0().expect("backends never return zero shots"),
            Observation::Exact { p0 } => *p0,
        }
    }

    pub fn z(&self) -> T {
        T::of(2.0) * self.p0() - T::one()
    }
}

/// `<Z> = (n0 - n1) / (n0 + n1)`.
pub fn estimate_z<T: Scalar>(counts: ShotCounts) -> Result<T> {
    let shots = counts.shots();
    if shots == 0 {
        return Err(invalid("cannot estimate <Z> from zero shots"));
    }
    let n0 = T::from_u64(counts.n0).unwrap();
    let n1 = T::from_u64(counts.n1).unwrap();
    Ok((n0 - n1) / (n0 + n1))
}

/// Walks the template timeline and returns the Bloch vector just before readout.
pub fn simulate_state<T: Scalar>(
    template: &CircuitTemplate<T>,
    profile: &NoiseProfile<T>,
    qs_detuning: T,
) -> Result<BlochVector<T>> {
    template.validate()?;
    let rt = profile.rt.scaled(profile.lambda);
    let per_us = template.dt_ns / T::of(1000.0);
    let mut state = BlochVector::ground();
    for event in &template.events {
        match event.kind {
            EventKind::Rotation { axis, angle, role } => {
                let angle = if role == Role::Encode {
                    angle + profile.eps_sys
                } else {
                    angle
                };
                state = apply_rotation(state, axis, angle)?;
            }
            EventKind::Delay => {
                let us = T::from_u64(event.duration).unwrap() * per_us;
                state = free_evolution(state, us, rt, qs_detuning)?;
            }
            EventKind::Measure => break,
        }
    }
    Ok(state)
}

fn check_z<T: Scalar>(z: T) -> Result<f64> {
    let z = z.as_f64();
    if !z.is_finite() || z.abs() > 1.0 + 1e-9 {
        return Err(invalid(format!("|z| must be <= 1, got {z}")));
    }
    Ok(z.clamp(-1.0, 1.0))
}

fn sample_from<T: Scalar, R: Rng>(
    rng: &mut R,
    z: f64,
    shots: u64,
    readout: &Confusion<T>,
) -> ShotCounts {
    let p0 = (1.0 + z) / 2.0;
    let flip_from_0 = readout.matrix[0][1].as_f64();
    let flip_from_1 = readout.matrix[1][0].as_f64();
    let mut n0 = 0;
    for _ in 0..shots {
        let truth_is_0 = rng.random::<f64>() < p0;
        let flip = rng.random::<f64>() < if truth_is_0 { flip_from_0 } else { flip_from_1 };
        if truth_is_0 != flip {
            n0 += 1;
        }
    }
    ShotCounts { n0, n1: shots - n0 }
}

/// Draws `shots` projective outcomes with `p0 = (1 + z) / 2`, each passed through the readout map.
pub fn sample_counts<T: Scalar>(
    z: T,
    shots: u64,
    readout: &Confusion<T>,
    rng_seed: u64,
) -> Result<ShotCounts> {
    let z = check_z(z)?;
    if shots == 0 {
        return Err(invalid("shots must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    Ok(sample_from(&mut rng, z, shots, readout))
}

/// Execution boundary. Implementations must be pure functions of their inputs and seed.
pub trait Backend<T: Scalar>: Send + Sync {
    fn execute(
        &self,
        template: &CircuitTemplate<T>,
        shots: u64,
        profile: &NoiseProfile<T>,
        trial_seed: u64,
    ) -> Result<Observation<T>>;
}

/// In-process Bloch emulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct LocalEmulator;

impl<T: Scalar> Backend<T> for LocalEmulator {
    fn execute(
        &self,
        template: &CircuitTemplate<T>,
        shots: u64,
        profile: &NoiseProfile<T>,
        trial_seed: u64,
    ) -> Result<Observation<T>> {
        backend_execute(template, shots, profile, trial_seed)
    }
}

/// One trial: draw the quasi-static detuning, evolve, then sample (or return
/// the exact observed probability when `shots == 0`).
pub fn backend_execute<T: Scalar>(
    template: &CircuitTemplate<T>,
    shots: u64,
    profile: &NoiseProfile<T>,
    trial_seed: u64,
) -> Result<Observation<T>> {
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
    let g: f64 = rng.sample(StandardNormal);
    let qs = T::of(g) * profile.sigma_qs * profile.lambda;
    let state = simulate_state(template, profile, qs)?;
    if shots == 0 {
        let z = T::of(check_z(state.z)?);
        let p0_true = (T::one() + z) / T::of(2.0);
        return Ok(Observation::Exact {
            p0: profile.readout.apply(p0_true),
        });
    }
    let z = check_z(state.z)?;
    Ok(Observation::Sampled(sample_from(
        &mut rng,
        z,
        shots,
        &profile.readout,
    )))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Folds coordinates into a seed with SplitMix64. The mapping is part of the
/// output format: changing it changes every recorded seed.
pub fn derive_seed(master: u64, coords: &[u64]) -> u64 {
    coords.iter().fold(splitmix64(master), |h, &c| {
        splitmix64(h ^ splitmix64(c.wrapping_add(1)))
    })
}

/// Seed of one campaign cell: `(master, phi index, condition, trial, lambda index)`.
pub fn trial_seed(
    master: u64,
    phi_index: usize,
    condition: crate::schedule::MitigationCondition,
    trial: usize,
    lambda_index: usize,
) -> u64 {
    derive_seed(
        master,
        &[
            phi_index as u64,
            condition.index(),
            trial as u64,
            lambda_index as u64,
        ],
    )
}
