//! Commands behind the `bests-sim` binary. Each command returns the files it
//! produced so callers (and tests) can inspect them before they hit disk.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{ConfigError, RobotConfig};
use crate::gait::{GaitError, GaitMode, GaitSample, PhaseRole, ServoSchedule};
use crate::geometry;
use crate::locomotion::{self, Calibration, LocomotionError, PlannerOptions, Pose, Trajectory};
use crate::plot::{BarChart, LinePlot, Series};
use crate::transmission::{self, Group, LegId, TransmissionError};

/// Overrides the output directory when `--out` is not given.
pub const OUT_DIR_ENV: &str = "BESTS_SIM_OUT";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("schedule: {0}")]
    Schedule(String),
    #[error("solver: {0}")]
    Solver(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Schedule(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<GaitError> for CliError {
    fn from(e: GaitError) -> Self {
        match e {
            GaitError::Schedule(m) => CliError::Schedule(m),
            other => CliError::Solver(other.to_string()),
        }
    }
}

impl From<TransmissionError> for CliError {
    fn from(e: TransmissionError) -> Self {
        CliError::Solver(e.to_string())
    }
}

impl From<LocomotionError> for CliError {
    fn from(e: LocomotionError) -> Self {
        match e {
            LocomotionError::Gait(g) => g.into(),
            other => CliError::Solver(other.to_string()),
        }
    }
}

/// A file produced by a command, relative to the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    fn new(name: &str, contents: String) -> Self {
        Self {
            name: name.to_string(),
            contents,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub config_hash: String,
    pub artifacts: Vec<ManifestEntry>,
    pub wall_time_s: f64,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Writes the artifacts plus `run_report.json` into `out_dir`.
pub fn write_artifacts(
    out_dir: &Path,
    command: &str,
    config: &RobotConfig,
    artifacts: &[Artifact],
    started: Instant,
) -> Result<RunReport, CliError> {
    std::fs::create_dir_all(out_dir)?;
    let mut manifest = Vec::new();
    for a in artifacts {
        std::fs::write(out_dir.join(&a.name), &a.contents)?;
        manifest.push(ManifestEntry {
            file: a.name.clone(),
            bytes: a.contents.len(),
            sha256: sha256_hex(a.contents.as_bytes()),
        });
    }
    let report = RunReport {
        command: command.to_string(),
        config_hash: config.hash(),
        artifacts: manifest,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(out_dir.join("run_report.json"), json + "\n")?;
    Ok(report)
}

pub fn resolve_out_dir(cli_out: Option<PathBuf>, config: &RobotConfig) -> PathBuf {
    cli_out
        .or_else(|| config.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn f(v: f64) -> String {
    format!("{v:.9}")
}

/// Curvature range for `characterize`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoRange {
    pub min: f64,
    pub max: f64,
    pub points: u32,
}

impl RhoRange {
    pub fn from_config(config: &RobotConfig) -> Self {
        Self {
            min: config.sweep.rho_min_per_mm,
            max: config.sweep.rho_max_per_mm,
            points: config.sweep.rho_points,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points <= 1 {
            return vec![self.min];
        }
        let n = self.points - 1;
        (0..=n)
            .map(|i| self.min + (self.max - self.min) * f64::from(i) / f64::from(n))
            .collect()
    }
}

/// Bend-versus-curvature curves of one large and one small unit.
pub fn characterize(config: &RobotConfig, range: RhoRange) -> Result<Vec<Artifact>, CliError> {
    if !(range.min.is_finite() && range.min >= 0.0 && range.max >= range.min) || range.points == 0 {
        return Err(ConfigError::Value {
            path: "sweep".into(),
            message: format!("bad curvature range {range:?}"),
        }
        .into());
    }
    let outputs = config.outputs(Group::A).map_err(TransmissionError::from)?;
    let large = &outputs[LegId::A1.slot()];
    let small = &outputs[LegId::SmallA1.slot()];
    let mut csv =
        String::from("rho_per_mm,large_bend_rad,small_bend_rad,large_saturated,small_saturated\n");
    let (mut lp, mut sp) = (Vec::new(), Vec::new());
    for rho in range.values() {
        let l = geometry::bend_state(large, rho).map_err(TransmissionError::from)?;
        let s = geometry::bend_state(small, rho).map_err(TransmissionError::from)?;
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            f(rho),
            f(l.unit_bend),
            f(s.unit_bend),
            u8::from(l.saturated),
            u8::from(s.saturated)
        );
        lp.push((rho, l.unit_bend.to_degrees()));
        sp.push((rho, s.unit_bend.to_degrees()));
    }
    let svg = LinePlot {
        title: "Unit bend vs curvature".into(),
        x_label: "curvature rho (1/mm)".into(),
        y_label: "bend (deg)".into(),
        series: vec![
            Series::new(format!("large r={} mm", large.segment.r()), lp),
            Series::new(format!("small r={} mm", small.segment.r()), sp),
        ],
        equal_aspect: false,
    }
    .to_svg();
    Ok(vec![
        Artifact::new("characterize.csv", csv),
        Artifact::new("characterize.svg", svg),
    ])
}

/// Output bend against servo twist for several total gas volumes. Rows
/// where the outputs overflow are reported and the sweep continues.
pub fn twist_sweep(config: &RobotConfig, ribs: Option<u32>) -> Result<Vec<Artifact>, CliError> {
    let mut config = config.clone();
    if let Some(r) = ribs {
        config.systems.a.input.ribs = r;
    }
    let mut csv = String::from(
        "v_total_ml,alpha_rad,eta,rho_per_mm,large_bend_rad,small_bend_rad,status,overflow_ml\n",
    );
    let mut series = Vec::new();
    let n = config.sweep.twist_points.max(1);
    for &v_total in &config.sweep.twist_volumes_ml {
        let sys = config.system_with_volume(Group::A, v_total)?;
        let alpha_max = sys.input.alpha_max_rad;
        let mut pts = Vec::new();
        for i in 0..n {
            let alpha = if n == 1 {
                0.0
            } else {
                alpha_max * f64::from(i) / f64::from(n - 1)
            };
            match transmission::solve_equilibrium(&sys, alpha) {
                Ok(eq) => {
                    let lb = geometry::unit_bend(&sys.outputs[LegId::A1.slot()], eq.rho)
                        .map_err(TransmissionError::from)?;
                    let sb = geometry::unit_bend(&sys.outputs[LegId::SmallA1.slot()], eq.rho)
                        .map_err(TransmissionError::from)?;
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{},{},ok,0",
                        f(v_total),
                        f(alpha),
                        f(eq.eta),
                        f(eq.rho),
                        f(lb),
                        f(sb)
                    );
                    pts.push((alpha.to_degrees(), lb.to_degrees()));
                }
                Err(TransmissionError::Saturated { overflow_ml }) => {
                    let eta = sys.input.shrinkage(alpha)?;
                    let _ = writeln!(
                        csv,
                        "{},{},{},,,,saturated,{}",
                        f(v_total),
                        f(alpha),
                        f(eta),
                        f(overflow_ml)
                    );
                }
                Err(e) => return Err(e.into()),
            }
        }
        series.push(Series::new(format!("{v_total} mL, large"), pts));
    }
    let svg = LinePlot {
        title: format!(
            "Large-leg bend vs servo twist ({} ribs)",
            config.systems.a.input.ribs
        ),
        x_label: "twist (deg)".into(),
        y_label: "bend (deg)".into(),
        series,
        equal_aspect: false,
    }
    .to_svg();
    Ok(vec![
        Artifact::new("twist_sweep.csv", csv),
        Artifact::new("twist_sweep.svg", svg),
    ])
}

/// Named schedules: `walk`, `turn-left`, `turn-right`, `cycle`, and the
/// planned paths `s` and `o`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinSchedule {
    Walk,
    TurnLeft,
    TurnRight,
    Cycle,
    SPath,
    OPath,
}

impl BuiltinSchedule {
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "walk" => Self::Walk,
            "turn-left" => Self::TurnLeft,
            "turn-right" => Self::TurnRight,
            "cycle" => Self::Cycle,
            "s" => Self::SPath,
            "o" => Self::OPath,
            _ => return None,
        })
    }
}

pub fn o_path_waypoints(config: &RobotConfig) -> Vec<(f64, f64)> {
    let r = config.paths.o_radius_cm;
    let n = config.paths.o_waypoints;
    // clockwise from the top of a circle centred below the start
    (0..=n)
        .map(|i| {
            let a = TAU * f64::from(i) / f64::from(n);
            (r * a.sin(), -r + r * a.cos())
        })
        .collect()
}

pub fn s_path_waypoints(config: &RobotConfig) -> Vec<(f64, f64)> {
    let amp = config.paths.s_amplitude_cm;
    let len = config.paths.s_length_cm;
    let n = config.paths.s_waypoints;
    (0..=n)
        .map(|i| {
            let x = len * f64::from(i) / f64::from(n);
            (x, amp * (TAU * x / len).sin())
        })
        .collect()
}

fn s_path_options(config: &RobotConfig) -> PlannerOptions {
    let slope = config.paths.s_amplitude_cm * TAU / config.paths.s_length_cm;
    PlannerOptions {
        initial_heading_rad: slope.atan(),
        final_heading_change_rad: Some(0.0),
        ..config.planner_options()
    }
}

fn o_path_options(config: &RobotConfig) -> PlannerOptions {
    PlannerOptions {
        final_heading_change_rad: Some(-TAU),
        ..config.planner_options()
    }
}

/// A schedule and, for planned paths, the trajectory the planner predicted.
pub struct ResolvedSchedule {
    pub schedule: ServoSchedule,
    pub planned: Option<Trajectory>,
    pub start: Pose,
}

pub fn resolve_schedule(
    config: &RobotConfig,
    which: &str,
    dt: f64,
) -> Result<ResolvedSchedule, CliError> {
    let calib = config.calibrate()?;
    let fixed = |schedule| ResolvedSchedule {
        schedule,
        planned: None,
        start: Pose::default(),
    };
    let planned =
        |waypoints: Vec<(f64, f64)>, opts: PlannerOptions| -> Result<ResolvedSchedule, CliError> {
            let (schedule, trajectory) = locomotion::follow_path(&waypoints, &calib, &opts, dt)?;
            Ok(ResolvedSchedule {
                schedule,
                planned: Some(trajectory),
                start: Pose::new(waypoints[0].0, waypoints[0].1, opts.initial_heading_rad),
            })
        };
    let p = &config.paths;
    match BuiltinSchedule::parse(which) {
        Some(BuiltinSchedule::Walk) => Ok(fixed(ServoSchedule::walk(
            p.walk_cycles,
            calib.walk_period_s,
        ))),
        Some(BuiltinSchedule::TurnLeft) => Ok(fixed(ServoSchedule::turn_left(
            p.turn_left_cycles,
            calib.left_period_s,
        ))),
        Some(BuiltinSchedule::TurnRight) => Ok(fixed(ServoSchedule::turn_right(
            p.turn_right_cycles,
            calib.right_period_s,
        ))),
        Some(BuiltinSchedule::Cycle) => Ok(fixed(config.cycle_schedule(2))),
        Some(BuiltinSchedule::SPath) => planned(s_path_waypoints(config), s_path_options(config)),
        Some(BuiltinSchedule::OPath) => planned(o_path_waypoints(config), o_path_options(config)),
        None => {
            let text = std::fs::read_to_string(which).map_err(|e| {
                CliError::Schedule(format!(
                    "`{which}` is neither a built-in schedule nor a readable file: {e}"
                ))
            })?;
            Ok(fixed(parse_schedule(&text)?))
        }
    }
}

pub fn parse_schedule(text: &str) -> Result<ServoSchedule, CliError> {
    let schedule: ServoSchedule =
        toml::from_str(text).map_err(|e| CliError::Schedule(e.to_string()))?;
    schedule.validate()?;
    Ok(schedule)
}

pub fn schedule_to_toml(schedule: &ServoSchedule) -> String {
    toml::to_string(schedule).expect("schedule serializes")
}

pub fn gait_csv(samples: &[GaitSample]) -> String {
    let mut csv = String::from("t_s,phase_rad,mode,role_A,role_B");
    for leg in LegId::ALL {
        let _ = write!(csv, ",bend_{leg}_rad");
    }
    for leg in LegId::ALL {
        let _ = write!(csv, ",contact_{leg}");
    }
    csv.push('\n');
    for s in samples {
        let _ = write!(
            csv,
            "{},{},{},{},{}",
            f(s.t),
            f(s.phase),
            s.mode,
            s.role(Group::A).name(),
            s.role(Group::B).name()
        );
        for leg in &s.legs {
            let _ = write!(csv, ",{}", f(leg.bend));
        }
        for leg in &s.legs {
            let _ = write!(csv, ",{}", u8::from(leg.in_contact));
        }
        csv.push('\n');
    }
    csv
}

/// Swing intervals (leg off the ground) of each leg, in seconds.
pub fn swing_bars(samples: &[GaitSample], end: f64) -> Vec<(LegId, Vec<(f64, f64)>)> {
    LegId::ALL
        .iter()
        .map(|&leg| {
            let mut bars = Vec::new();
            let mut open: Option<f64> = None;
            for s in samples {
                let swinging = !s.legs[leg.index()].in_contact;
                match (swinging, open) {
                    (true, None) => open = Some(s.t),
                    (false, Some(a)) => {
                        bars.push((a, s.t));
                        open = None;
                    }
                    _ => {}
                }
            }
            if let Some(a) = open {
                bars.push((a, end));
            }
            (leg, bars)
        })
        .collect()
}

pub fn gait(
    config: &RobotConfig,
    schedule: &ServoSchedule,
    dt: f64,
) -> Result<Vec<Artifact>, CliError> {
    let engine = config.gait_engine()?;
    let samples = engine.timeline(schedule, dt)?;
    let end = samples.last().map_or(0.0, |s| s.t + dt);
    let rows = swing_bars(&samples, end)
        .into_iter()
        .map(|(leg, bars)| (leg.name().to_string(), bars))
        .collect();
    let svg = BarChart {
        title: "Swing phase of each leg".into(),
        x_label: "time (s)".into(),
        x_max: end,
        rows,
    }
    .to_svg();
    Ok(vec![
        Artifact::new("gait.csv", gait_csv(&samples)),
        Artifact::new("gait.svg", svg),
    ])
}

pub fn trajectory_csv(trajectory: &Trajectory) -> String {
    let mut csv = String::from("t_s,x_cm,y_cm,heading_rad,mode\n");
    for s in &trajectory.samples {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            f(s.t),
            f(s.pose.x),
            f(s.pose.y),
            f(s.pose.heading),
            s.mode
        );
    }
    csv
}

pub fn simulate(
    config: &RobotConfig,
    which: &str,
    dt: f64,
) -> Result<(Trajectory, Vec<Artifact>), CliError> {
    let calib = config.calibrate()?;
    let resolved = resolve_schedule(config, which, dt)?;
    let trajectory = match resolved.planned {
        Some(t) => t,
        None => locomotion::simulate_from(resolved.start, &resolved.schedule, &calib, dt)?,
    };
    let path = LinePlot {
        title: format!("Body path ({which})"),
        x_label: "x (cm)".into(),
        y_label: "y (cm)".into(),
        series: vec![Series::new(
            "body",
            trajectory
                .samples
                .iter()
                .map(|s| (s.pose.x, s.pose.y))
                .collect(),
        )],
        equal_aspect: true,
    }
    .to_svg();
    let h0 = trajectory.samples.first().map_or(0.0, |s| s.pose.heading);
    let heading = LinePlot {
        title: format!("Heading change ({which})"),
        x_label: "time (s)".into(),
        y_label: "heading change (deg)".into(),
        series: vec![Series::new(
            "heading",
            trajectory
                .samples
                .iter()
                .map(|s| (s.t, (s.pose.heading - h0).to_degrees()))
                .collect(),
        )],
        equal_aspect: false,
    }
    .to_svg();
    let artifacts = vec![
        Artifact::new("trajectory.csv", trajectory_csv(&trajectory)),
        Artifact::new("path.svg", path),
        Artifact::new("heading.svg", heading),
        Artifact::new("schedule.toml", schedule_to_toml(&resolved.schedule)),
    ];
    Ok((trajectory, artifacts))
}

/// Quantities recovered by simulating a calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundTrip {
    pub walk_speed_cm_s: f64,
    pub left_turn_90_s: f64,
    pub right_turn_90_s: f64,
    pub turn_radius_cm: f64,
}

/// Simulates walking and both turns with the calibration and measures what
/// a camera would: speed, time to 90 degrees, fitted turning radius.
pub fn round_trip(calib: &Calibration, dt: f64) -> Result<RoundTrip, CliError> {
    let walk = ServoSchedule::walk(8, calib.walk_period_s);
    let tr = locomotion::simulate(&walk, calib, dt)?;
    let end = tr.final_pose().unwrap_or_default();
    let walk_speed = end.x.hypot(end.y) / tr.duration();

    let quarter = |schedule: ServoSchedule| -> Result<(f64, Trajectory), CliError> {
        let tr = locomotion::simulate(&schedule, calib, dt)?;
        let t = tr
            .time_to_heading_change(PI / 2.0)
            .ok_or_else(|| CliError::Solver("turn never reached 90 degrees".into()))?;
        Ok((t, tr))
    };
    let cycles = |d: f64| ((PI / d).ceil() as u32).max(3);
    let (left, left_tr) = quarter(ServoSchedule::turn_left(
        cycles(calib.dtheta_left_rad),
        calib.left_period_s,
    ))?;
    let (right, _) = quarter(ServoSchedule::turn_right(
        cycles(calib.dtheta_right_rad),
        calib.right_period_s,
    ))?;
    let points: Vec<_> = left_tr
        .samples
        .iter()
        .map(|s| (s.pose.x, s.pose.y))
        .collect();
    let circle = locomotion::fit_circle(&points)?;
    Ok(RoundTrip {
        walk_speed_cm_s: walk_speed,
        left_turn_90_s: left,
        right_turn_90_s: right,
        turn_radius_cm: circle.radius,
    })
}

#[derive(Serialize)]
struct CalibrationFile<'a> {
    calibration: &'a locomotion::CalibrationTargets,
    fitted: &'a Calibration,
    round_trip: RoundTrip,
}

pub fn calibrate(config: &RobotConfig) -> Result<(Calibration, Vec<Artifact>), CliError> {
    let calib = config.calibrate()?;
    let check = round_trip(&calib, config.paths.dt_s)?;
    let text = toml::to_string(&CalibrationFile {
        calibration: &config.calibration,
        fitted: &calib,
        round_trip: check,
    })
    .expect("calibration serializes");
    let header = "# Stride model fitted to the [calibration] targets. The [calibration]\n\
                  # table can be pasted back into a robot config.\n\n";
    Ok((
        calib,
        vec![Artifact::new("calibration.toml", format!("{header}{text}"))],
    ))
}

/// Fraction of samples each leg spends on the ground.
pub fn contact_fractions(samples: &[GaitSample]) -> [f64; 10] {
    let mut counts = [0usize; 10];
    for s in samples {
        for leg in &s.legs {
            counts[leg.leg.index()] += usize::from(leg.in_contact);
        }
    }
    counts.map(|c| c as f64 / samples.len().max(1) as f64)
}

/// Whether a full tripod (three large legs of one group) bears load.
pub fn has_tripod_support(sample: &GaitSample) -> bool {
    [Group::A, Group::B].iter().any(|&g| {
        sample
            .legs
            .iter()
            .filter(|l| l.group == g && l.size_class == geometry::SizeClass::Large && l.in_contact)
            .count()
            == 3
    })
}

pub fn is_walk(sample: &GaitSample) -> bool {
    sample.mode == GaitMode::Walk
}

pub fn stance_group(sample: &GaitSample) -> Option<Group> {
    [Group::A, Group::B]
        .into_iter()
        .find(|&g| sample.role(g) == PhaseRole::Stance)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_range_values() {
        let r = RhoRange {
            min: 0.0,
            max: 0.2,
            points: 3,
        };
        assert_eq!(r.values(), vec![0.0, 0.1, 0.2]);
        let one = RhoRange { points: 1, ..r };
        assert_eq!(one.values(), vec![0.0]);
    }

    #[test]
    fn parse_builtin_names() {
        assert_eq!(BuiltinSchedule::parse("o"), Some(BuiltinSchedule::OPath));
        assert_eq!(
            BuiltinSchedule::parse("turn-right"),
            Some(BuiltinSchedule::TurnRight)
        );
        assert_eq!(BuiltinSchedule::parse("zigzag"), None);
    }

    #[test]
    fn schedule_file_round_trip() {
        let s = ServoSchedule::walk(3, 2.8).then(ServoSchedule::turn_left(2, 4.0));
        let text = schedule_to_toml(&s);
        assert_eq!(parse_schedule(&text).unwrap(), s);
        assert!(matches!(
            parse_schedule("[[segment]]\nstart_rad = 1.0\n"),
            Err(CliError::Schedule(_))
        ));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Schedule("x".into()).exit_code(), 2);
        assert_eq!(CliError::Solver("x".into()).exit_code(), 3);
        let cfg_err = ConfigError::Legs("x".into());
        assert_eq!(CliError::from(cfg_err).exit_code(), 2);
    }

    #[test]
    fn waypoint_sets_start_at_origin() {
        let cfg = RobotConfig::default();
        let o = o_path_waypoints(&cfg);
        assert_eq!(o[0], (0.0, 0.0));
        let last = o[o.len() - 1];
        assert!(last.0.abs() < 1e-9 && last.1.abs() < 1e-9);
        let s = s_path_waypoints(&cfg);
        assert_eq!(s[0], (0.0, 0.0));
        assert!((s[s.len() - 1].0 - cfg.paths.s_length_cm).abs() < 1e-12);
    }
}
