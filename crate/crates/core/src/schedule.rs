//! Circuit templates for the five mitigation conditions.
//!
//! Every template is realized in the Ramsey frame: `Ry(pi/2)` moves the
//! ground state onto the equator, the probe phase `phi` is written as a Z
//! rotation, the idle window runs either as one delay or as an XY8 train,
//! the optional compensation `Rz(-delta_phi)` follows, and `Ry(-pi/2)` maps
//! the transverse x component back onto Z for readout. The ideal readout is
//! therefore `cos(phi)`.
//!
//! Times are integer ticks of the hardware `dt`. Pi pulses are instantaneous.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bloch::Axis;
use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// Pulse axes of one XY8 block.
pub const XY8_PATTERN: [Axis; 8] = [
    Axis::X,
    Axis::Y,
    Axis::X,
    Axis::Y,
    Axis::Y,
    Axis::X,
    Axis::Y,
    Axis::X,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MitigationCondition {
    Baseline,
    DdOnly,
    DeltaPhiOnly,
    AuroraDd,
    AuroraDdZne,
}

impl MitigationCondition {
    pub const ALL: [MitigationCondition; 5] = [
        MitigationCondition::Baseline,
        MitigationCondition::DdOnly,
        MitigationCondition::DeltaPhiOnly,
        MitigationCondition::AuroraDd,
        MitigationCondition::AuroraDdZne,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            MitigationCondition::Baseline => "baseline",
            MitigationCondition::DdOnly => "dd_only",
            MitigationCondition::DeltaPhiOnly => "delta_phi_only",
            MitigationCondition::AuroraDd => "aurora_dd",
            MitigationCondition::AuroraDdZne => "aurora_dd_zne",
        }
    }

    /// Stable small integer used in seed derivation.
    pub fn index(self) -> u64 {
        match self {
            MitigationCondition::Baseline => 0,
            MitigationCondition::DdOnly => 1,
            MitigationCondition::DeltaPhiOnly => 2,
            MitigationCondition::AuroraDd => 3,
            MitigationCondition::AuroraDdZne => 4,
        }
    }

    pub fn has_dd(self) -> bool {
        matches!(
            self,
            MitigationCondition::DdOnly
                | MitigationCondition::AuroraDd
                | MitigationCondition::AuroraDdZne
        )
    }

    pub fn compensates(self) -> bool {
        matches!(
            self,
            MitigationCondition::DeltaPhiOnly
                | MitigationCondition::AuroraDd
                | MitigationCondition::AuroraDdZne
        )
    }

    pub fn uses_zne(self) -> bool {
        self == MitigationCondition::AuroraDdZne
    }
}

impl fmt::Display for MitigationCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for MitigationCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MitigationCondition::ALL
            .into_iter()
            .find(|c| c.tag() == s)
            .ok_or_else(|| invalid(format!("unknown condition '{s}'")))
    }
}

/// What a rotation is for; the emulator injects the systematic phase bias at [`Role::Encode`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Prepare,
    Encode,
    Refocus,
    Compensate,
    Unprepare,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind<T> {
    Rotation { axis: Axis, angle: T, role: Role },
    Delay,
    Measure,
}

/// One timeline entry; `start` and `duration` count ticks of `dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseEvent<T> {
    pub kind: EventKind<T>,
    pub start: u64,
    pub duration: u64,
}

impl<T: Scalar> PulseEvent<T> {
    pub fn is_refocusing_pulse(&self) -> bool {
        matches!(
            self.kind,
            EventKind::Rotation {
                role: Role::Refocus,
                ..
            }
        )
    }

    pub fn end(&self) -> u64 {
        self.start + self.duration
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitTemplate<T> {
    pub phi: T,
    /// Applied compensation; zero when the condition does not compensate.
    pub delta_phi: T,
    pub condition: MitigationCondition,
    pub dt_ns: T,
    pub events: Vec<PulseEvent<T>>,
    /// In ticks.
    pub total_duration: u64,
}

impl<T: Scalar> CircuitTemplate<T> {
    pub fn total_duration_ns(&self) -> T {
        ticks_to_ns(self.total_duration, self.dt_ns)
    }

    pub fn pulse_count(&self) -> usize {
        self.events
            .iter()
            .filter(|e| e.is_refocusing_pulse())
            .count()
    }

    /// Checks the ordering and overlap invariants.
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_ns > T::zero()) {
            return Err(invalid("template dt must be positive"));
        }
        let mut cursor = 0u64;
        for (i, e) in self.events.iter().enumerate() {
            if e.start < cursor {
                return Err(invalid(format!(
                    "event {i} starts before the previous one ends"
                )));
            }
            cursor = e.end();
        }
        if cursor != self.total_duration {
            return Err(invalid("total_duration does not match the event timeline"));
        }
        Ok(())
    }
}

pub fn ticks_to_ns<T: Scalar>(ticks: u64, dt_ns: T) -> T {
    T::from_u64(ticks).expect("tick count representable") * dt_ns
}

fn ns_to_ticks<T: Scalar>(ns: T, dt_ns: T) -> Result<u64> {
    if !(dt_ns > T::zero()) || !dt_ns.is_finite() {
        return Err(invalid(format!(
            "dt must be positive and finite, got {dt_ns}"
        )));
    }
    if ns.is_nan() || ns < T::zero() || !ns.is_finite() {
        return Err(invalid(format!(
            "duration must be finite and >= 0, got {ns}"
        )));
    }
    (ns / dt_ns)
        .round()
        .to_u64()
        .ok_or_else(|| invalid("duration overflows tick counter"))
}

/// Splits `total` into `parts` integers that differ by at most one, spreading the remainder evenly.
fn spread(total: u64, parts: u64) -> Vec<u64> {
    let q = total / parts;
    let r = total % parts;
    (0..parts)
        .map(|i| q + ((i + 1) * r / parts - i * r / parts))
        .collect()
}

fn xy8_ticks<T: Scalar>(reps: usize, idle_ticks: u64, start: u64) -> Result<Vec<PulseEvent<T>>> {
    if reps == 0 {
        return Err(invalid("XY8 needs at least one repetition"));
    }
    let n = 8 * reps as u64;
    // Toggling-frame cancellation needs the even- and odd-indexed segments to
    // carry equal time, so the window is trimmed to an even tick count.
    let span = idle_ticks - idle_ticks % 2;
    let half = span / 2;
    if half < n {
        return Err(Error::ScheduleInfeasible(format!(
            "{idle_ticks} ticks cannot hold {n} pi-pulses with at least two ticks between them"
        )));
    }
    let odd = spread(half, n / 2);
    let even = spread(half, n / 2);

    let mut segments = Vec::with_capacity(n as usize + 1);
    let lead = even[0] / 2;
    segments.push(lead);
    for k in 0..(n / 2) as usize {
        segments.push(odd[k]);
        if k + 1 < (n / 2) as usize {
            segments.push(even[k + 1]);
        }
    }
    segments.push(even[0] - lead);
    debug_assert_eq!(segments.len() as u64, n + 1);

    let mut events = Vec::with_capacity(2 * n as usize + 1);
    let mut t = start;
    for (i, &seg) in segments.iter().enumerate() {
        events.push(PulseEvent {
            kind: EventKind::Delay,
            start: t,
            duration: seg,
        });
        t += seg;
        if i < n as usize {
            events.push(PulseEvent {
                kind: EventKind::Rotation {
                    axis: XY8_PATTERN[i % 8],
                    angle: T::PI(),
                    role: Role::Refocus,
                },
                start: t,
                duration: 0,
            });
        }
    }
    Ok(events)
}

/// XY8 train of `reps` blocks filling `idle_duration_ns`, starting at time zero.
///
/// Spacing is symmetric: half gaps at both ends, full gaps between pulses.
pub fn xy8_schedule<T: Scalar>(
    reps: usize,
    idle_duration_ns: T,
    dt_ns: T,
) -> Result<Vec<PulseEvent<T>>> {
    let idle = ns_to_ticks(idle_duration_ns, dt_ns)?;
    xy8_ticks(reps, idle, 0)
}

pub fn build_circuit<T: Scalar>(
    phi: T,
    delta_phi: T,
    condition: MitigationCondition,
    idle_duration_ns: T,
    dd_reps: usize,
    dt_ns: T,
) -> Result<CircuitTemplate<T>> {
    if !phi.is_finite() {
        return Err(invalid(format!("phi must be finite, got {phi}")));
    }
    if !delta_phi.is_finite() {
        return Err(invalid(format!(
            "delta_phi must be finite, got {delta_phi}"
        )));
    }
    let idle = ns_to_ticks(idle_duration_ns, dt_ns)?;
    let half_pi = T::FRAC_PI_2();
    let rotation = |axis, angle, role, start| PulseEvent {
        kind: EventKind::Rotation { axis, angle, role },
        start,
        duration: 0,
    };

    let mut events = vec![
        rotation(Axis::Y, half_pi, Role::Prepare, 0),
        rotation(Axis::Z, phi, Role::Encode, 0),
    ];
    if condition.has_dd() {
        events.extend(xy8_ticks::<T>(dd_reps, idle, 0)?);
    } else if idle > 0 {
        events.push(PulseEvent {
            kind: EventKind::Delay,
            start: 0,
            duration: idle,
        });
    }
    let end = events.last().map(PulseEvent::end).unwrap_or(0);
    let applied = if condition.compensates() {
        events.push(rotation(Axis::Z, -delta_phi, Role::Compensate, end));
        delta_phi
    } else {
        T::zero()
    };
    events.push(rotation(Axis::Y, -half_pi, Role::Unprepare, end));
    events.push(PulseEvent {
        kind: EventKind::Measure,
        start: end,
        duration: 0,
    });

    Ok(CircuitTemplate {
        phi,
        delta_phi: applied,
        condition,
        dt_ns,
        events,
        total_duration: end,
    })
}

/// Idle time of a template in nanoseconds: all delays, including the gaps inside an XY8 window.
pub fn total_idle<T: Scalar>(template: &CircuitTemplate<T>) -> T {
    let ticks: u64 = template
        .events
        .iter()
        .filter(|e| matches!(e.kind, EventKind::Delay))
        .map(|e| e.duration)
        .sum();
    ticks_to_ns(ticks, template.dt_ns)
}
