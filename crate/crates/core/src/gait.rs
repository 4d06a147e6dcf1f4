//! Servo phase to gait: the phase-to-mode map, scripted servo sweeps, and
//! the alternating-tripod contact pattern of the ten legs.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, SizeClass};
use crate::transmission::{self, BeltCoupling, ClosedSystem, Group, LegId, TransmissionError};

pub const WALK_END: f64 = 2.0 * PI / 3.0;
pub const TURN_LEFT_END: f64 = PI;
pub const TURN_RIGHT_END: f64 = 4.0 * PI / 3.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaitError {
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error("sampling step must be positive and finite, got {0} s")]
    Step(f64),
    #[error(
        "small legs touch down at twist fraction {small:.4}, not after large legs at {large:.4}; \
         raise the small contact threshold"
    )]
    ContactOrdering { large: f64, small: f64 },
    #[error("contact threshold fraction {0} must lie in (0, 1]")]
    Threshold(f64),
    #[error(transparent)]
    Transmission(#[from] TransmissionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GaitMode {
    Walk,
    TurnLeft,
    TurnRight,
}

impl GaitMode {
    pub fn name(self) -> &'static str {
        match self {
            GaitMode::Walk => "walk",
            GaitMode::TurnLeft => "turn_left",
            GaitMode::TurnRight => "turn_right",
        }
    }
}

impl std::fmt::Display for GaitMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Right-open mode intervals tiling `[0, 2pi)`, in phase order.
pub const MODE_INTERVALS: [(f64, f64, GaitMode); 4] = [
    (0.0, WALK_END, GaitMode::Walk),
    (WALK_END, TURN_LEFT_END, GaitMode::TurnLeft),
    (TURN_LEFT_END, TURN_RIGHT_END, GaitMode::TurnRight),
    (TURN_RIGHT_END, TAU, GaitMode::Walk),
];

pub fn normalize_phase(phase: f64) -> f64 {
    let p = phase.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if p >= TAU {
        0.0
    } else {
        p
    }
}

pub fn mode_of_phase(phase: f64) -> GaitMode {
    let p = normalize_phase(phase);
    if p < WALK_END {
        GaitMode::Walk
    } else if p < TURN_LEFT_END {
        GaitMode::TurnLeft
    } else if p < TURN_RIGHT_END {
        GaitMode::TurnRight
    } else {
        GaitMode::Walk
    }
}

/// Mode of the interval a phase is approached from below, so the upper end
/// of a forward sweep keeps the sweep's own mode.
pub fn mode_of_phase_from_below(phase: f64) -> GaitMode {
    let p = normalize_phase(phase);
    if p == 0.0 {
        return GaitMode::Walk;
    }
    MODE_INTERVALS
        .iter()
        .find(|(lo, hi, _)| *lo < p && p <= *hi)
        .map(|(_, _, m)| *m)
        .unwrap_or(GaitMode::Walk)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepDirection {
    #[default]
    Forward,
    Reverse,
}

/// One scripted block: the servo sweeps `start -> end` (or back) once per
/// period, `repeats` times, snapping back between sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSegment {
    pub start_rad: f64,
    pub end_rad: f64,
    pub period_s: f64,
    pub repeats: u32,
    #[serde(default)]
    pub direction: SweepDirection,
}

impl ScheduleSegment {
    pub fn new(start_rad: f64, end_rad: f64, period_s: f64, repeats: u32) -> Self {
        Self {
            start_rad,
            end_rad,
            period_s,
            repeats,
            direction: SweepDirection::Forward,
        }
    }

    pub fn reversed(mut self) -> Self {
        self.direction = SweepDirection::Reverse;
        self
    }

    pub fn duration(&self) -> f64 {
        self.period_s * f64::from(self.repeats)
    }

    pub fn span(&self) -> f64 {
        self.end_rad - self.start_rad
    }

    fn validate(&self, index: usize) -> Result<(), GaitError> {
        let ok_phase = |p: f64| p.is_finite() && (0.0..=TAU).contains(&p);
        if !(ok_phase(self.start_rad) && ok_phase(self.end_rad) && self.start_rad < self.end_rad) {
            return Err(GaitError::Schedule(format!(
                "segment {index}: phase interval [{}, {}] must satisfy 0 <= start < end <= 2pi",
                self.start_rad, self.end_rad
            )));
        }
        if !(self.period_s.is_finite() && self.period_s > 0.0) {
            return Err(GaitError::Schedule(format!(
                "segment {index}: period must be positive, got {} s",
                self.period_s
            )));
        }
        Ok(())
    }

    /// Phase reached after sweeping `frac` of one sweep.
    pub fn phase_at_fraction(&self, frac: f64) -> f64 {
        match self.direction {
            SweepDirection::Forward => self.start_rad + frac * self.span(),
            SweepDirection::Reverse => self.end_rad - frac * self.span(),
        }
    }

    fn mode_at_fraction(&self, frac: f64) -> GaitMode {
        let phase = self.phase_at_fraction(frac);
        match self.direction {
            SweepDirection::Forward if frac >= 1.0 => mode_of_phase_from_below(phase),
            _ => mode_of_phase(phase),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServoSchedule {
    #[serde(default, rename = "segment")]
    pub segments: Vec<ScheduleSegment>,
}

/// Where in a schedule a time falls.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Cursor {
    segment: usize,
    /// Fraction of the current sweep, in `[0, 1]`.
    frac: f64,
}

impl ServoSchedule {
    pub fn new(segments: Vec<ScheduleSegment>) -> Result<Self, GaitError> {
        let s = Self { segments };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), GaitError> {
        for (i, seg) in self.segments.iter().enumerate() {
            seg.validate(i)?;
        }
        Ok(())
    }

    pub fn walk(cycles: u32, period_s: f64) -> Self {
        Self {
            segments: vec![ScheduleSegment::new(0.0, WALK_END, period_s, cycles)],
        }
    }

    pub fn turn_left(cycles: u32, period_s: f64) -> Self {
        Self {
            segments: vec![ScheduleSegment::new(
                WALK_END,
                TURN_LEFT_END,
                period_s,
                cycles,
            )],
        }
    }

    pub fn turn_right(cycles: u32, period_s: f64) -> Self {
        Self {
            segments: vec![ScheduleSegment::new(
                TURN_LEFT_END,
                TURN_RIGHT_END,
                period_s,
                cycles,
            )],
        }
    }

    /// Full servo turn per cycle: walk, turn left, turn right, walk.
    pub fn full_cycle(cycles: u32, period_s: f64) -> Self {
        Self {
            segments: vec![ScheduleSegment::new(0.0, TAU, period_s, cycles)],
        }
    }

    pub fn then(mut self, other: ServoSchedule) -> Self {
        self.segments.extend(other.segments);
        self
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(ScheduleSegment::duration).sum()
    }

    pub fn initial_phase(&self) -> f64 {
        self.segments
            .first()
            .map_or(0.0, |s| s.phase_at_fraction(0.0))
    }

    /// Start time of each segment.
    pub fn segment_starts(&self) -> Vec<f64> {
        let mut t = 0.0;
        self.segments
            .iter()
            .map(|s| {
                let start = t;
                t += s.duration();
                start
            })
            .collect()
    }

    fn cursor(&self, t: f64) -> Option<Cursor> {
        let mut start = 0.0;
        let mut last = None;
        for (i, seg) in self.segments.iter().enumerate() {
            if seg.repeats == 0 {
                continue;
            }
            let end = start + seg.duration();
            if t < end {
                let local = (t - start).max(0.0) / seg.period_s;
                return Some(Cursor {
                    segment: i,
                    frac: local - local.floor(),
                });
            }
            last = Some(i);
            start = end;
        }
        last.map(|segment| Cursor { segment, frac: 1.0 })
    }

    /// Servo phase at time `t`; holds the final phase past the end.
    pub fn servo_phase(&self, t: f64) -> f64 {
        match self.cursor(t) {
            Some(c) => self.segments[c.segment].phase_at_fraction(c.frac),
            None => self.initial_phase(),
        }
    }

    /// Gait mode commanded at time `t`.
    pub fn mode_at(&self, t: f64) -> GaitMode {
        match self.cursor(t) {
            Some(c) => self.segments[c.segment].mode_at_fraction(c.frac),
            None => mode_of_phase(self.initial_phase()),
        }
    }
}

pub fn servo_phase(schedule: &ServoSchedule, t: f64) -> f64 {
    schedule.servo_phase(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhaseRole {
    Swing,
    Stance,
}

impl PhaseRole {
    pub fn name(self) -> &'static str {
        match self {
            PhaseRole::Swing => "swing",
            PhaseRole::Stance => "stance",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegState {
    pub leg: LegId,
    pub group: Group,
    pub size_class: SizeClass,
    pub phase_role: PhaseRole,
    pub in_contact: bool,
    pub bend: f64,
}

/// Bend angles at which a rising leg reaches the ground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactThresholds {
    pub large_rad: f64,
    pub small_rad: f64,
}

impl ContactThresholds {
    pub fn for_size(&self, size: SizeClass) -> f64 {
        match size {
            SizeClass::Large => self.large_rad,
            SizeClass::Small => self.small_rad,
        }
    }
}

fn cluster_bend(bends: &[f64; 10], group: Group, size: SizeClass) -> f64 {
    LegId::ALL
        .iter()
        .filter(|l| l.group() == group && l.size_class() == size)
        .map(|l| bends[l.index()])
        .fold(f64::INFINITY, f64::min)
}

/// Contact pattern of all ten legs.
///
/// The group whose input is being twisted touches down each size cluster
/// once that cluster's weakest leg passes its threshold; until then the
/// opposite group's cluster keeps the ground. A group is in stance while its
/// large legs bear load.
pub fn leg_contact_states(
    bends: &[f64; 10],
    phase: f64,
    belt: &BeltCoupling,
    thresholds: &ContactThresholds,
) -> [LegState; 10] {
    let rising = if belt.is_twisting(Group::B, phase) {
        Group::B
    } else {
        Group::A
    };
    let holder = |size: SizeClass| {
        if cluster_bend(bends, rising, size) >= thresholds.for_size(size) {
            rising
        } else {
            rising.other()
        }
    };
    let large_holder = holder(SizeClass::Large);
    let small_holder = holder(SizeClass::Small);

    LegId::ALL.map(|leg| {
        let group = leg.group();
        let size_class = leg.size_class();
        let in_contact = match size_class {
            SizeClass::Large => group == large_holder,
            SizeClass::Small => group == small_holder,
        };
        LegState {
            leg,
            group,
            size_class,
            phase_role: if group == large_holder {
                PhaseRole::Stance
            } else {
                PhaseRole::Swing
            },
            in_contact,
            bend: bends[leg.index()],
        }
    })
}

/// One row of a gait timeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaitSample {
    pub t: f64,
    pub phase: f64,
    pub mode: GaitMode,
    pub legs: [LegState; 10],
}

impl GaitSample {
    pub fn role(&self, group: Group) -> PhaseRole {
        let leg = match group {
            Group::A => LegId::A1,
            Group::B => LegId::B1,
        };
        self.legs[leg.index()].phase_role
    }
}

/// Both closed systems, the belt and the contact thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct GaitEngine {
    pub belt: BeltCoupling,
    pub sys_a: ClosedSystem,
    pub sys_b: ClosedSystem,
    pub thresholds: ContactThresholds,
}

impl GaitEngine {
    /// Thresholds are fractions of each size's bend at full twist (taken
    /// from system B). Small legs must touch down strictly after large ones.
    pub fn new(
        belt: BeltCoupling,
        sys_a: ClosedSystem,
        sys_b: ClosedSystem,
        large_fraction: f64,
        small_fraction: f64,
    ) -> Result<Self, GaitError> {
        for f in [large_fraction, small_fraction] {
            if !(f.is_finite() && f > 0.0 && f <= 1.0) {
                return Err(GaitError::Threshold(f));
            }
        }
        let mut engine = Self {
            belt,
            sys_a,
            sys_b,
            thresholds: ContactThresholds {
                large_rad: 0.0,
                small_rad: 0.0,
            },
        };
        let full = engine.group_bends(Group::B, 1.0)?;
        engine.thresholds = ContactThresholds {
            large_rad: large_fraction * full.0,
            small_rad: small_fraction * full.1,
        };
        let (large, small) = engine.touchdown_fractions()?;
        if small <= large {
            return Err(GaitError::ContactOrdering { large, small });
        }
        Ok(engine)
    }

    pub fn system(&self, group: Group) -> &ClosedSystem {
        match group {
            Group::A => &self.sys_a,
            Group::B => &self.sys_b,
        }
    }

    /// Curvature of a system at a twist angle. Over-twisted systems are
    /// held at full saturation.
    pub fn curvature(&self, group: Group, alpha: f64) -> Result<f64, GaitError> {
        let sys = self.system(group);
        match transmission::solve_equilibrium(sys, alpha) {
            Ok(eq) => Ok(eq.rho),
            Err(TransmissionError::Saturated { .. }) => Ok(sys.full_saturation_curvature()),
            Err(e) => Err(e.into()),
        }
    }

    /// (weakest large bend, weakest small bend) of a group at a twist fraction.
    fn group_bends(&self, group: Group, twist_fraction: f64) -> Result<(f64, f64), GaitError> {
        let sys = self.system(group);
        let rho = self.curvature(group, twist_fraction * sys.input.alpha_max_rad)?;
        let mut large = f64::INFINITY;
        let mut small = f64::INFINITY;
        for unit in sys.outputs.iter().take(5) {
            let bend = geometry::unit_bend(unit, rho).map_err(TransmissionError::from)?;
            match unit.size_class {
                SizeClass::Large => large = large.min(bend),
                SizeClass::Small => small = small.min(bend),
            }
        }
        Ok((large, small))
    }

    /// Twist fractions of system B at which its large and small clusters
    /// touch down.
    pub fn touchdown_fractions(&self) -> Result<(f64, f64), GaitError> {
        let find = |size: SizeClass| -> Result<f64, GaitError> {
            let pick = |b: (f64, f64)| match size {
                SizeClass::Large => b.0,
                SizeClass::Small => b.1,
            };
            let target = self.thresholds.for_size(size);
            let (mut lo, mut hi) = (0.0, 1.0);
            if pick(self.group_bends(Group::B, hi)?) < target {
                return Ok(f64::INFINITY);
            }
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if pick(self.group_bends(Group::B, mid)?) >= target {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Ok(hi)
        };
        Ok((find(SizeClass::Large)?, find(SizeClass::Small)?))
    }

    pub fn bend_profile(&self, servo: f64) -> Result<[f64; 10], GaitError> {
        let alpha_a = self.belt.twist_angle(Group::A, servo, &self.sys_a.input);
        let alpha_b = self.belt.twist_angle(Group::B, servo, &self.sys_b.input);
        let rho_a = self.curvature(Group::A, alpha_a)?;
        let rho_b = self.curvature(Group::B, alpha_b)?;
        Ok(transmission::leg_bends(
            &self.sys_a,
            &self.sys_b,
            rho_a,
            rho_b,
        )?)
    }

    pub fn leg_states(&self, servo: f64) -> Result<[LegState; 10], GaitError> {
        let bends = self.bend_profile(servo)?;
        Ok(leg_contact_states(
            &bends,
            servo,
            &self.belt,
            &self.thresholds,
        ))
    }

    /// Samples the leg states every `dt` over `[0, duration)`; an empty
    /// schedule yields the single initial sample.
    pub fn timeline(
        &self,
        schedule: &ServoSchedule,
        dt: f64,
    ) -> Result<Vec<GaitSample>, GaitError> {
        gait_timeline(self, schedule, dt)
    }
}

pub fn gait_timeline(
    engine: &GaitEngine,
    schedule: &ServoSchedule,
    dt: f64,
) -> Result<Vec<GaitSample>, GaitError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(GaitError::Step(dt));
    }
    schedule.validate()?;
    let duration = schedule.duration();
    let n = ((duration / dt) - 1e-9).ceil().max(1.0) as usize;
    (0..n)
        .map(|k| {
            let t = k as f64 * dt;
            let phase = schedule.servo_phase(t);
            Ok(GaitSample {
                t,
                phase,
                mode: schedule.mode_at(t),
                legs: engine.leg_states(phase)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_examples() {
        assert_eq!(mode_of_phase(0.1), GaitMode::Walk);
        assert_eq!(mode_of_phase(2.5), GaitMode::TurnLeft);
        assert_eq!(mode_of_phase(3.5), GaitMode::TurnRight);
        assert_eq!(mode_of_phase(5.0), GaitMode::Walk);
    }

    #[test]
    fn mode_boundaries_are_right_open() {
        assert_eq!(mode_of_phase(0.0), GaitMode::Walk);
        assert_eq!(mode_of_phase(WALK_END), GaitMode::TurnLeft);
        assert_eq!(mode_of_phase(TURN_LEFT_END), GaitMode::TurnRight);
        assert_eq!(mode_of_phase(TURN_RIGHT_END), GaitMode::Walk);
        assert_eq!(mode_of_phase(TAU), GaitMode::Walk);
        assert_eq!(mode_of_phase(-0.1), GaitMode::Walk);
        assert_eq!(mode_of_phase(TAU + 2.5), GaitMode::TurnLeft);
        assert_eq!(mode_of_phase(-1e-300), GaitMode::Walk);
    }

    #[test]
    fn from_below_keeps_sweep_mode() {
        assert_eq!(mode_of_phase_from_below(WALK_END), GaitMode::Walk);
        assert_eq!(mode_of_phase_from_below(TURN_LEFT_END), GaitMode::TurnLeft);
        assert_eq!(
            mode_of_phase_from_below(TURN_RIGHT_END),
            GaitMode::TurnRight
        );
        assert_eq!(mode_of_phase_from_below(0.0), GaitMode::Walk);
    }

    #[test]
    fn servo_phase_examples() {
        let walk = ServoSchedule::walk(3, 2.8);
        assert_eq!(walk.servo_phase(0.0), 0.0);
        assert!((walk.servo_phase(1.4) - PI / 3.0).abs() < 1e-12);
        assert_eq!(walk.servo_phase(100.0), WALK_END);
        assert_eq!(walk.mode_at(100.0), GaitMode::Walk);
        assert!((walk.servo_phase(2.8 + 0.7) - PI / 6.0).abs() < 1e-12);
        assert_eq!(ServoSchedule::default().servo_phase(5.0), 0.0);
    }

    #[test]
    fn reverse_sweep_runs_backwards() {
        let s = ServoSchedule::new(vec![ScheduleSegment::new(0.0, PI, 2.0, 1).reversed()]).unwrap();
        assert_eq!(s.servo_phase(0.0), PI);
        assert!((s.servo_phase(1.0) - PI / 2.0).abs() < 1e-12);
        assert_eq!(s.servo_phase(2.0), 0.0);
    }

    #[test]
    fn schedule_validation() {
        assert!(ServoSchedule::new(vec![ScheduleSegment::new(1.0, 0.5, 2.0, 1)]).is_err());
        assert!(ServoSchedule::new(vec![ScheduleSegment::new(0.0, 7.0, 2.0, 1)]).is_err());
        assert!(ServoSchedule::new(vec![ScheduleSegment::new(0.0, 1.0, 0.0, 1)]).is_err());
        assert!(ServoSchedule::new(vec![ScheduleSegment::new(0.0, TAU, 2.0, 1)]).is_ok());
    }

    #[test]
    fn zero_repeat_segments_are_skipped() {
        let s = ServoSchedule::new(vec![
            ScheduleSegment::new(0.0, 1.0, 2.0, 0),
            ScheduleSegment::new(2.0, 3.0, 1.0, 1),
        ])
        .unwrap();
        assert_eq!(s.servo_phase(0.0), 2.0);
        assert_eq!(s.duration(), 1.0);
    }

    fn bends(a: (f64, f64), b: (f64, f64)) -> [f64; 10] {
        [a.0, a.0, a.0, a.1, a.1, b.0, b.0, b.0, b.1, b.1]
    }

    #[test]
    fn rising_group_takes_ground_past_threshold() {
        let belt = BeltCoupling::default();
        let th = ContactThresholds {
            large_rad: 1.0,
            small_rad: 0.8,
        };
        // B rising (phase in [0, pi)) but still below both thresholds
        let legs = leg_contact_states(&bends((1.5, 1.2), (0.5, 0.4)), 0.5, &belt, &th);
        assert!(legs[LegId::A1.index()].in_contact && legs[LegId::SmallA1.index()].in_contact);
        assert!(!legs[LegId::B1.index()].in_contact);
        assert_eq!(legs[LegId::B1.index()].phase_role, PhaseRole::Swing);

        // B large past threshold, small not yet
        let legs = leg_contact_states(&bends((0.6, 0.5), (1.1, 0.7)), 1.8, &belt, &th);
        assert!(legs[LegId::B2.index()].in_contact);
        assert!(!legs[LegId::SmallB1.index()].in_contact);
        assert!(legs[LegId::SmallA2.index()].in_contact);
        assert_eq!(legs[LegId::A3.index()].phase_role, PhaseRole::Swing);

        // both B clusters down
        let legs = leg_contact_states(&bends((0.3, 0.2), (1.4, 0.9)), 2.5, &belt, &th);
        for leg in legs {
            assert_eq!(leg.in_contact, leg.group == Group::B);
        }
    }
}
