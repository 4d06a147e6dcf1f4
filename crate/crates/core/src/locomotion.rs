//! Planar body motion from gait modes.
//!
//! Locomotion is kinematic: stance legs are perfect anchors, and each
//! half-cycle (one tripod exchange) moves the body by a calibrated arc.
//! Positions are in centimeters and headings in radians, kept unwrapped.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gait::{
    self, GaitError, GaitMode, ScheduleSegment, ServoSchedule, SweepDirection, MODE_INTERVALS,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LocomotionError {
    #[error("calibration target `{field}` must be positive and finite, got {value}")]
    Target { field: &'static str, value: f64 },
    #[error("invalid calibration: {0}")]
    Calibration(String),
    #[error("sampling step must be positive and finite, got {0} s")]
    Step(f64),
    #[error("path needs at least two waypoints, got {0}")]
    TooFewWaypoints(usize),
    #[error("waypoint {index} at ({x:.2}, {y:.2}) cm is unreachable: {reason}")]
    Unreachable {
        index: usize,
        x: f64,
        y: f64,
        reason: String,
    },
    #[error("need at least three points to fit a circle")]
    CircleFit,
    #[error(transparent)]
    Gait(#[from] GaitError),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading }
    }

    /// Applies `local`, expressed in this pose's body frame.
    pub fn compose(&self, local: &Pose) -> Pose {
        let (s, c) = self.heading.sin_cos();
        Pose {
            x: self.x + c * local.x - s * local.y,
            y: self.y + s * local.x + c * local.y,
            heading: self.heading + local.heading,
        }
    }

    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        (x - self.x).hypot(y - self.y)
    }

    fn lerp(&self, other: &Pose, w: f64) -> Pose {
        Pose {
            x: self.x + w * (other.x - self.x),
            y: self.y + w * (other.y - self.y),
            heading: self.heading + w * (other.heading - self.heading),
        }
    }
}

/// Measured performance the stride model is fitted to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationTargets {
    pub body_length_cm: f64,
    pub walk_speed_cm_s: f64,
    pub walk_period_s: f64,
    pub left_turn_90_s: f64,
    pub left_period_s: f64,
    pub right_turn_90_s: f64,
    pub right_period_s: f64,
    pub turn_radius_cm: f64,
    #[serde(default = "one")]
    pub terrain_efficiency: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for CalibrationTargets {
    /// Flat-tabletop performance of the reference robot.
    fn default() -> Self {
        Self {
            body_length_cm: 25.0,
            walk_speed_cm_s: 1.75,
            walk_period_s: 2.8,
            left_turn_90_s: 54.0,
            left_period_s: 4.0,
            right_turn_90_s: 38.0,
            right_period_s: 3.0,
            turn_radius_cm: 15.0,
            terrain_efficiency: 1.0,
        }
    }
}

/// Per-cycle stride and heading increments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    pub body_length_cm: f64,
    /// Distance advanced per walk cycle on flat ground.
    pub stride_walk_cm: f64,
    pub dtheta_left_rad: f64,
    pub dtheta_right_rad: f64,
    pub turn_radius_cm: f64,
    pub terrain_efficiency: f64,
    pub walk_period_s: f64,
    pub left_period_s: f64,
    pub right_period_s: f64,
}

impl Calibration {
    pub fn validate(&self) -> Result<(), LocomotionError> {
        let fields = [
            ("body_length_cm", self.body_length_cm),
            ("stride_walk_cm", self.stride_walk_cm),
            ("dtheta_left_rad", self.dtheta_left_rad),
            ("dtheta_right_rad", self.dtheta_right_rad),
            ("turn_radius_cm", self.turn_radius_cm),
            ("terrain_efficiency", self.terrain_efficiency),
            ("walk_period_s", self.walk_period_s),
            ("left_period_s", self.left_period_s),
            ("right_period_s", self.right_period_s),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(LocomotionError::Calibration(format!(
                    "{name} = {v} must be positive"
                )));
            }
        }
        if self.terrain_efficiency > 1.0 {
            return Err(LocomotionError::Calibration(format!(
                "terrain_efficiency = {} exceeds 1",
                self.terrain_efficiency
            )));
        }
        let (lo, hi) = (
            self.dtheta_left_rad.min(self.dtheta_right_rad),
            self.dtheta_left_rad.max(self.dtheta_right_rad),
        );
        if hi > 1.5 * lo {
            return Err(LocomotionError::Calibration(format!(
                "left and right turn rates differ by more than 50% ({} vs {} rad/cycle)",
                self.dtheta_left_rad, self.dtheta_right_rad
            )));
        }
        Ok(())
    }

    pub fn dtheta(&self, mode: GaitMode) -> f64 {
        match mode {
            GaitMode::Walk => 0.0,
            GaitMode::TurnLeft => self.dtheta_left_rad,
            GaitMode::TurnRight => self.dtheta_right_rad,
        }
    }

    /// Arc length covered by one turn cycle.
    pub fn arc_per_turn_cycle(&self, mode: GaitMode) -> f64 {
        self.turn_radius_cm * self.dtheta(mode)
    }

    pub fn period(&self, mode: GaitMode) -> f64 {
        match mode {
            GaitMode::Walk => self.walk_period_s,
            GaitMode::TurnLeft => self.left_period_s,
            GaitMode::TurnRight => self.right_period_s,
        }
    }

    pub fn with_terrain_efficiency(mut self, efficiency: f64) -> Self {
        self.terrain_efficiency = efficiency;
        self
    }
}

/// Closed-form inversion of the measured speed and turn times.
pub fn calibrate(targets: &CalibrationTargets) -> Result<Calibration, LocomotionError> {
    let fields = [
        ("body_length_cm", targets.body_length_cm),
        ("walk_speed_cm_s", targets.walk_speed_cm_s),
        ("walk_period_s", targets.walk_period_s),
        ("left_turn_90_s", targets.left_turn_90_s),
        ("left_period_s", targets.left_period_s),
        ("right_turn_90_s", targets.right_turn_90_s),
        ("right_period_s", targets.right_period_s),
        ("turn_radius_cm", targets.turn_radius_cm),
        ("terrain_efficiency", targets.terrain_efficiency),
    ];
    for (field, value) in fields {
        if !(value.is_finite() && value > 0.0) {
            return Err(LocomotionError::Target { field, value });
        }
    }
    let calib = Calibration {
        body_length_cm: targets.body_length_cm,
        stride_walk_cm: targets.walk_speed_cm_s * targets.walk_period_s,
        dtheta_left_rad: FRAC_PI_2 / (targets.left_turn_90_s / targets.left_period_s),
        dtheta_right_rad: FRAC_PI_2 / (targets.right_turn_90_s / targets.right_period_s),
        turn_radius_cm: targets.turn_radius_cm,
        terrain_efficiency: targets.terrain_efficiency,
        walk_period_s: targets.walk_period_s,
        left_period_s: targets.left_period_s,
        right_period_s: targets.right_period_s,
    };
    calib.validate()?;
    Ok(calib)
}

/// Body motion over one half-cycle: an arc of length `forward_cm` that turns
/// the heading by `dheading_rad` (a straight line when that is zero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrideIncrement {
    pub forward_cm: f64,
    pub dheading_rad: f64,
}

impl StrideIncrement {
    pub fn scaled(&self, fraction: f64) -> Self {
        Self {
            forward_cm: self.forward_cm * fraction,
            dheading_rad: self.dheading_rad * fraction,
        }
    }

    /// Rigid motion in the body frame at the start of the increment.
    pub fn local_motion(&self) -> Pose {
        let d = self.dheading_rad;
        let (along, across) = if d.abs() < 1e-12 {
            (self.forward_cm, self.forward_cm * d / 2.0)
        } else {
            let r = self.forward_cm / d;
            (r * d.sin(), r * (1.0 - d.cos()))
        };
        Pose::new(along, across, d)
    }
}

pub fn stride_increment(mode: GaitMode, calib: &Calibration) -> StrideIncrement {
    match mode {
        GaitMode::Walk => StrideIncrement {
            forward_cm: calib.stride_walk_cm / 2.0 * calib.terrain_efficiency,
            dheading_rad: 0.0,
        },
        GaitMode::TurnLeft => StrideIncrement {
            forward_cm: calib.turn_radius_cm * calib.dtheta_left_rad / 2.0,
            dheading_rad: calib.dtheta_left_rad / 2.0,
        },
        GaitMode::TurnRight => StrideIncrement {
            forward_cm: calib.turn_radius_cm * calib.dtheta_right_rad / 2.0,
            dheading_rad: -calib.dtheta_right_rad / 2.0,
        },
    }
}

/// Applies `half_cycles` identical half-cycle increments.
pub fn step(pose: Pose, mode: GaitMode, half_cycles: u32, calib: &Calibration) -> Pose {
    let local = stride_increment(mode, calib).local_motion();
    (0..half_cycles).fold(pose, |p, _| p.compose(&local))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub pose: Pose,
    pub mode: GaitMode,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn final_pose(&self) -> Option<Pose> {
        self.samples.last().map(|s| s.pose)
    }

    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    /// First time the unwrapped heading change reaches `angle` in
    /// magnitude, linearly interpolated between samples.
    pub fn time_to_heading_change(&self, angle: f64) -> Option<f64> {
        let h0 = self.samples.first()?.pose.heading;
        self.samples.windows(2).find_map(|w| {
            let a = (w[0].pose.heading - h0).abs();
            let b = (w[1].pose.heading - h0).abs();
            (a < angle && b >= angle).then(|| w[0].t + (angle - a) / (b - a) * (w[1].t - w[0].t))
        })
    }
}

/// Pieces of one half-cycle sweep, in traversal order: (mode, fraction).
fn half_cycle_pieces(seg: &ScheduleSegment, half: usize) -> Vec<(GaitMode, f64)> {
    let half_span = seg.span() / 2.0;
    let (lo, hi) = match seg.direction {
        SweepDirection::Forward => (
            seg.start_rad + half as f64 * half_span,
            seg.start_rad + (half + 1) as f64 * half_span,
        ),
        SweepDirection::Reverse => (
            seg.end_rad - (half + 1) as f64 * half_span,
            seg.end_rad - half as f64 * half_span,
        ),
    };
    let mut pieces: Vec<(GaitMode, f64)> = MODE_INTERVALS
        .iter()
        .filter_map(|&(a, b, mode)| {
            let overlap = hi.min(b) - lo.max(a);
            (overlap > 0.0).then_some((mode, overlap / half_span))
        })
        .collect();
    if seg.direction == SweepDirection::Reverse {
        pieces.reverse();
    }
    pieces
}

/// Pose after each half-cycle of the schedule, starting from `start`.
fn exchange_knots(schedule: &ServoSchedule, calib: &Calibration, start: Pose) -> Vec<(f64, Pose)> {
    let mut knots = vec![(0.0, start)];
    let mut pose = start;
    let mut t0 = 0.0;
    for seg in &schedule.segments {
        let per_half: [Vec<(GaitMode, f64)>; 2] =
            [half_cycle_pieces(seg, 0), half_cycle_pieces(seg, 1)];
        let locals: [Vec<Pose>; 2] = per_half.clone().map(|pieces| {
            pieces
                .iter()
                .map(|&(mode, frac)| stride_increment(mode, calib).scaled(frac).local_motion())
                .collect()
        });
        for cycle in 0..seg.repeats {
            for (half, local) in locals.iter().enumerate() {
                for motion in local {
                    pose = pose.compose(motion);
                }
                let t = t0 + (f64::from(cycle) + (half + 1) as f64 / 2.0) * seg.period_s;
                knots.push((t, pose));
            }
        }
        t0 += seg.duration();
    }
    knots
}

fn interpolate(knots: &[(f64, Pose)], t: f64) -> Pose {
    let idx = knots.partition_point(|(kt, _)| *kt <= t);
    if idx == 0 {
        return knots[0].1;
    }
    if idx >= knots.len() {
        return knots[knots.len() - 1].1;
    }
    let (ta, pa) = knots[idx - 1];
    let (tb, pb) = knots[idx];
    if tb <= ta {
        return pb;
    }
    pa.lerp(&pb, (t - ta) / (tb - ta))
}

/// Trajectory sampled every `dt` from the origin, plus the end instant.
pub fn simulate(
    schedule: &ServoSchedule,
    calib: &Calibration,
    dt: f64,
) -> Result<Trajectory, LocomotionError> {
    simulate_from(Pose::default(), schedule, calib, dt)
}

pub fn simulate_from(
    start: Pose,
    schedule: &ServoSchedule,
    calib: &Calibration,
    dt: f64,
) -> Result<Trajectory, LocomotionError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(LocomotionError::Step(dt));
    }
    schedule.validate()?;
    calib.validate()?;
    let knots = exchange_knots(schedule, calib, start);
    let duration = schedule.duration();
    let n = (duration / dt + 1e-9).floor() as usize;
    let mut samples = Vec::with_capacity(n + 2);
    for k in 0..=n {
        let t = k as f64 * dt;
        samples.push(TrajectorySample {
            t,
            pose: interpolate(&knots, t),
            mode: schedule.mode_at(t),
        });
    }
    if duration - n as f64 * dt > 1e-9 * duration.max(1.0) {
        samples.push(TrajectorySample {
            t: duration,
            pose: knots[knots.len() - 1].1,
            mode: schedule.mode_at(duration),
        });
    }
    Ok(Trajectory { samples })
}

/// Pose reached at the end of a schedule, without sampling.
pub fn final_pose(start: Pose, schedule: &ServoSchedule, calib: &Calibration) -> Pose {
    exchange_knots(schedule, calib, start)
        .last()
        .map_or(start, |k| k.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerOptions {
    /// Walk once the heading error to the target is below this.
    pub heading_tolerance_rad: f64,
    /// A waypoint counts as reached within this distance.
    pub capture_radius_cm: f64,
    /// Unwrapped heading to turn to after the last waypoint, relative to
    /// the start heading.
    #[serde(default)]
    pub final_heading_change_rad: Option<f64>,
    pub initial_heading_rad: f64,
    pub max_cycles: u32,
}

impl Default for PlannerOptions {
    fn default() -> Self {
        Self {
            heading_tolerance_rad: 0.15,
            capture_radius_cm: 3.0,
            final_heading_change_rad: None,
            initial_heading_rad: 0.0,
            max_cycles: 10_000,
        }
    }
}

fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(TAU) - PI;
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

fn push_cycle(segments: &mut Vec<ScheduleSegment>, mode: GaitMode, calib: &Calibration) {
    let (start, end) = match mode {
        GaitMode::Walk => (0.0, gait::WALK_END),
        GaitMode::TurnLeft => (gait::WALK_END, gait::TURN_LEFT_END),
        GaitMode::TurnRight => (gait::TURN_LEFT_END, gait::TURN_RIGHT_END),
    };
    match segments.last_mut() {
        Some(last) if last.start_rad == start && last.end_rad == end => last.repeats += 1,
        _ => segments.push(ScheduleSegment::new(start, end, calib.period(mode), 1)),
    }
}

/// Greedy waypoint follower: turn on the arc toward the next waypoint until
/// the walking line passes close enough, then walk, one cycle at a time.
pub fn follow_path(
    waypoints: &[(f64, f64)],
    calib: &Calibration,
    opts: &PlannerOptions,
    dt: f64,
) -> Result<(ServoSchedule, Trajectory), LocomotionError> {
    if waypoints.len() < 2 {
        return Err(LocomotionError::TooFewWaypoints(waypoints.len()));
    }
    calib.validate()?;
    let cycle = |mode| {
        let local = stride_increment(mode, calib).local_motion();
        local.compose(&local)
    };
    let (walk, left, right) = (
        cycle(GaitMode::Walk),
        cycle(GaitMode::TurnLeft),
        cycle(GaitMode::TurnRight),
    );
    let start = Pose::new(waypoints[0].0, waypoints[0].1, opts.initial_heading_rad);
    let mut pose = start;
    let mut segments = Vec::new();
    let mut cycles = 0u32;
    let radius = calib.turn_radius_cm;

    for (index, &(x, y)) in waypoints.iter().enumerate().skip(1) {
        let unreachable = |reason: String| LocomotionError::Unreachable {
            index,
            x,
            y,
            reason,
        };
        loop {
            let dist = pose.distance_to(x, y);
            if dist <= opts.capture_radius_cm {
                break;
            }
            if cycles >= opts.max_cycles {
                return Err(unreachable(format!(
                    "not reached within {} cycles",
                    opts.max_cycles
                )));
            }
            let err = wrap_angle((y - pose.y).atan2(x - pose.x) - pose.heading);
            let miss = dist * err.sin().abs();
            let walkable = err.abs() < opts.heading_tolerance_rad
                || (err.cos() > 0.0 && miss < 0.5 * opts.capture_radius_cm);
            let (mode, motion) = if walkable {
                (GaitMode::Walk, &walk)
            } else {
                let sign = err.signum();
                let (s, c) = pose.heading.sin_cos();
                let (cx, cy) = (pose.x - sign * radius * s, pose.y + sign * radius * c);
                if (x - cx).hypot(y - cy) < radius - opts.capture_radius_cm {
                    return Err(unreachable(format!(
                        "inside the {:.1} cm turning circle",
                        radius
                    )));
                }
                if sign > 0.0 {
                    (GaitMode::TurnLeft, &left)
                } else {
                    (GaitMode::TurnRight, &right)
                }
            };
            pose = pose.compose(motion);
            push_cycle(&mut segments, mode, calib);
            cycles += 1;
        }
    }

    if let Some(change) = opts.final_heading_change_rad {
        let target = start.heading + change;
        loop {
            let err = target - pose.heading;
            let (mode, motion) = if err > 0.0 {
                (GaitMode::TurnLeft, &left)
            } else {
                (GaitMode::TurnRight, &right)
            };
            if err.abs() <= calib.dtheta(mode) / 2.0 || cycles >= opts.max_cycles {
                break;
            }
            pose = pose.compose(motion);
            push_cycle(&mut segments, mode, calib);
            cycles += 1;
        }
    }

    let schedule = ServoSchedule { segments };
    let trajectory = simulate_from(start, &schedule, calib, dt)?;
    Ok((schedule, trajectory))
}

/// Least-squares circle through planar points (algebraic fit).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
}

impl Circle {
    /// Largest relative deviation of the points from the circle.
    pub fn max_relative_deviation(&self, points: &[(f64, f64)]) -> f64 {
        points
            .iter()
            .map(|&(x, y)| ((x - self.cx).hypot(y - self.cy) - self.radius).abs() / self.radius)
            .fold(0.0, f64::max)
    }
}

pub fn fit_circle(points: &[(f64, f64)]) -> Result<Circle, LocomotionError> {
    if points.len() < 3 {
        return Err(LocomotionError::CircleFit);
    }
    let a = DMatrix::from_fn(points.len(), 3, |i, j| match j {
        0 => points[i].0,
        1 => points[i].1,
        _ => 1.0,
    });
    let b = DVector::from_iterator(points.len(), points.iter().map(|&(x, y)| -(x * x + y * y)));
    let sol = a
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|_| LocomotionError::CircleFit)?;
    let (cx, cy) = (-sol[0] / 2.0, -sol[1] / 2.0);
    let r2 = cx * cx + cy * cy - sol[2];
    if !(r2.is_finite() && r2 > 0.0) {
        return Err(LocomotionError::CircleFit);
    }
    Ok(Circle {
        cx,
        cy,
        radius: r2.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn calib() -> Calibration {
        calibrate(&CalibrationTargets::default()).unwrap()
    }

    #[test]
    fn default_calibration_constants() {
        let c = calib();
        assert!((c.stride_walk_cm - 4.9).abs() < 1e-12);
        assert!((c.dtheta_left_rad - 0.116_355_283_466_289_4).abs() < 1e-12);
        assert!((c.dtheta_right_rad - 0.124_010_236_325_912_89).abs() < 1e-12);
    }

    #[test]
    fn one_body_length_in_14_8_seconds() {
        let c = calibrate(&CalibrationTargets {
            walk_speed_cm_s: 25.0 / 14.8,
            ..CalibrationTargets::default()
        })
        .unwrap();
        assert!((c.stride_walk_cm - 4.729_729_729_729_73).abs() < 1e-9);
    }

    #[test]
    fn calibrate_rejects_bad_targets() {
        let err = calibrate(&CalibrationTargets {
            left_period_s: 0.0,
            ..CalibrationTargets::default()
        })
        .unwrap_err();
        assert_eq!(
            err,
            LocomotionError::Target {
                field: "left_period_s",
                value: 0.0
            }
        );
        assert!(calibrate(&CalibrationTargets {
            right_turn_90_s: 10.0,
            ..CalibrationTargets::default()
        })
        .is_err());
    }

    #[test]
    fn stride_increment_per_mode() {
        let c = calib();
        let walk = stride_increment(GaitMode::Walk, &c);
        assert_eq!(walk.dheading_rad, 0.0);
        assert!((walk.forward_cm - 2.45).abs() < 1e-12);
        let left = stride_increment(GaitMode::TurnLeft, &c);
        assert!(left.dheading_rad > 0.0);
        assert!((left.forward_cm - c.arc_per_turn_cycle(GaitMode::TurnLeft) / 2.0).abs() < 1e-12);
        assert!(stride_increment(GaitMode::TurnRight, &c).dheading_rad < 0.0);
        let cork = stride_increment(GaitMode::Walk, &c.with_terrain_efficiency(0.023 / 0.07));
        assert!((cork.forward_cm * 2.0 / c.walk_period_s - 0.023 * 25.0).abs() < 1e-9);
    }

    #[test]
    fn step_examples() {
        let c = calib();
        let p = Pose::new(1.0, 2.0, 0.3);
        assert_eq!(step(p, GaitMode::TurnLeft, 0, &c), p);
        let walked = step(Pose::default(), GaitMode::Walk, 6, &c);
        assert!((walked.x - 6.0 * 2.45).abs() < 1e-12);
        assert_eq!(walked.y, 0.0);
        assert_eq!(walked.heading, 0.0);

        let half_turn = stride_increment(GaitMode::TurnLeft, &c).dheading_rad;
        let n = (TAU / half_turn).round() as u32;
        let around = step(Pose::default(), GaitMode::TurnLeft, n, &c);
        assert!(around.distance_to(0.0, 0.0) < c.stride_walk_cm);
        assert!((around.heading - f64::from(n) * half_turn).abs() < 1e-9);
    }

    #[test]
    fn turn_arc_stays_on_the_turning_circle() {
        let c = calib();
        let mut pose = Pose::default();
        for _ in 0..30 {
            pose = step(pose, GaitMode::TurnLeft, 1, &c);
            let d = pose.distance_to(0.0, c.turn_radius_cm);
            assert!((d - c.turn_radius_cm).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_schedule_gives_single_sample() {
        let tr = simulate(&ServoSchedule::default(), &calib(), 0.1).unwrap();
        assert_eq!(tr.samples.len(), 1);
        assert_eq!(tr.samples[0].pose, Pose::default());
        assert!(simulate(&ServoSchedule::default(), &calib(), 0.0).is_err());
    }

    #[test]
    fn full_cycle_pieces_cover_all_modes() {
        let seg = ScheduleSegment::new(0.0, TAU, 8.4, 1);
        let first = half_cycle_pieces(&seg, 0);
        assert_eq!(first.len(), 2);
        assert_eq!(first[0].0, GaitMode::Walk);
        assert!((first[0].1 - 2.0 / 3.0).abs() < 1e-12);
        let rev = half_cycle_pieces(&seg.reversed(), 0);
        assert_eq!(rev[0].0, GaitMode::Walk);
        assert_eq!(rev[1].0, GaitMode::TurnRight);
    }

    #[test]
    fn wrap_angle_range() {
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert_eq!(wrap_angle(0.25), 0.25);
    }

    #[test]
    fn circle_fit_recovers_circle() {
        let pts: Vec<_> = (0..12)
            .map(|i| {
                let a = f64::from(i) * 0.4;
                (3.0 + 15.0 * a.cos(), -2.0 + 15.0 * a.sin())
            })
            .collect();
        let c = fit_circle(&pts).unwrap();
        assert!((c.radius - 15.0).abs() < 1e-9);
        assert!((c.cx - 3.0).abs() < 1e-9 && (c.cy + 2.0).abs() < 1e-9);
        assert!(fit_circle(&pts[..2]).is_err());
    }
}
