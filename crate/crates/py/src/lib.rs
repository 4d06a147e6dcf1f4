//! Python bindings for the bests-core simulator.

use bests_core::cli::{self, CliError};
use bests_core::gait::{self, GaitMode};
use bests_core::geometry::{self, SegmentGeometry};
use bests_core::locomotion::{self, Calibration, CalibrationTargets};
use bests_core::{transmission, Group, RobotConfig, ServoSchedule};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

/// `(t_s, x_cm, y_cm, heading_rad, mode)`
type Row = (f64, f64, f64, f64, String);

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn cli_err(e: CliError) -> PyErr {
    match e.exit_code() {
        2 => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse_group(name: &str) -> PyResult<Group> {
    match name {
        "A" | "a" => Ok(Group::A),
        "B" | "b" => Ok(Group::B),
        other => Err(PyValueError::new_err(format!("unknown group `{other}`"))),
    }
}

/// Cross-section of one bellows segment.
#[pyclass(name = "Segment", frozen)]
struct PySegment {
    inner: SegmentGeometry,
}

#[pymethods]
impl PySegment {
    #[new]
    #[pyo3(signature = (r_mm, beta=0.5, depth_mm=60.0))]
    fn new(r_mm: f64, beta: f64, depth_mm: f64) -> PyResult<Self> {
        Ok(Self {
            inner: SegmentGeometry::new(r_mm, beta, depth_mm).map_err(value_err)?,
        })
    }

    #[getter]
    fn r(&self) -> f64 {
        self.inner.r()
    }

    #[getter]
    fn s1(&self) -> f64 {
        self.inner.s1()
    }

    #[getter]
    fn s2(&self) -> f64 {
        self.inner.s2()
    }

    #[getter]
    fn saturation_curvature(&self) -> f64 {
        self.inner.saturation_curvature()
    }

    /// Returns `(k, phi, saturated)` for one half segment.
    fn half_bend(&self, rho: f64) -> PyResult<(f64, f64, bool)> {
        let h = geometry::half_segment_bend(&self.inner, rho).map_err(value_err)?;
        Ok((h.k, h.phi, h.saturated))
    }

    fn separated_area(&self, rho: f64) -> PyResult<f64> {
        geometry::separated_area(&self.inner, rho).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Segment(r_mm={}, beta={}, depth_mm={})",
            self.inner.r(),
            self.inner.beta(),
            self.inner.depth()
        )
    }
}

/// A validated robot configuration and the operations built on it.
#[pyclass(name = "Robot", frozen)]
struct PyRobot {
    config: RobotConfig,
}

#[pymethods]
impl PyRobot {
    /// Loads a TOML config; without a path the bundled default is used.
    #[new]
    #[pyo3(signature = (path=None))]
    fn new(path: Option<std::path::PathBuf>) -> PyResult<Self> {
        let config = match path {
            Some(p) => RobotConfig::load(&p).map_err(value_err)?,
            None => RobotConfig::default(),
        };
        Ok(Self { config })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self {
            config: RobotConfig::from_toml_str(text).map_err(value_err)?,
        })
    }

    fn to_toml(&self) -> String {
        self.config.to_toml_string()
    }

    fn config_hash(&self) -> String {
        self.config.hash()
    }

    /// Equilibrium `(rho, eta)` of one group's closed system at twist `alpha`.
    fn equilibrium(&self, group: &str, alpha: f64) -> PyResult<(f64, f64)> {
        let sys = self.config.system(parse_group(group)?).map_err(value_err)?;
        let eq = transmission::solve_equilibrium(&sys, alpha)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        Ok((eq.rho, eq.eta))
    }

    /// Bend of every leg at a servo phase, keyed by leg name.
    fn leg_bends(&self, servo: f64) -> PyResult<Vec<(String, f64)>> {
        let engine = self.config.gait_engine().map_err(value_err)?;
        let bends = engine
            .bend_profile(servo)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        Ok(transmission::LegId::ALL
            .iter()
            .map(|l| (l.name().to_string(), bends[l.index()]))
            .collect())
    }

    /// Contact flag of every leg at a servo phase.
    fn leg_contacts(&self, servo: f64) -> PyResult<Vec<(String, bool)>> {
        let engine = self.config.gait_engine().map_err(value_err)?;
        let states = engine
            .leg_states(servo)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        Ok(states
            .iter()
            .map(|s| (s.leg.name().to_string(), s.in_contact))
            .collect())
    }

    fn calibrate(&self) -> PyResult<PyCalibration> {
        Ok(PyCalibration {
            inner: self.config.calibrate().map_err(value_err)?,
        })
    }

    /// Runs `simulate` with a built-in schedule name or a schedule file and
    /// returns rows of `(t, x, y, heading, mode)`.
    #[pyo3(signature = (schedule="walk", dt=None))]
    fn simulate(&self, schedule: &str, dt: Option<f64>) -> PyResult<Vec<Row>> {
        let dt = dt.unwrap_or(self.config.paths.dt_s);
        let (trajectory, _) = cli::simulate(&self.config, schedule, dt).map_err(cli_err)?;
        Ok(rows(&trajectory))
    }

    /// CSV text produced by `simulate` (same bytes as the CLI writes).
    #[pyo3(signature = (schedule="walk", dt=None))]
    fn trajectory_csv(&self, schedule: &str, dt: Option<f64>) -> PyResult<String> {
        let dt = dt.unwrap_or(self.config.paths.dt_s);
        let (trajectory, _) = cli::simulate(&self.config, schedule, dt).map_err(cli_err)?;
        Ok(cli::trajectory_csv(&trajectory))
    }
}

/// Fitted stride model.
#[pyclass(name = "Calibration", frozen)]
struct PyCalibration {
    inner: Calibration,
}

#[pymethods]
impl PyCalibration {
    #[new]
    #[pyo3(signature = (walk_speed_cm_s=1.75, walk_period_s=2.8, left_turn_90_s=54.0, left_period_s=4.0,
                        right_turn_90_s=38.0, right_period_s=3.0, turn_radius_cm=15.0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        walk_speed_cm_s: f64,
        walk_period_s: f64,
        left_turn_90_s: f64,
        left_period_s: f64,
        right_turn_90_s: f64,
        right_period_s: f64,
        turn_radius_cm: f64,
    ) -> PyResult<Self> {
        let targets = CalibrationTargets {
            walk_speed_cm_s,
            walk_period_s,
            left_turn_90_s,
            left_period_s,
            right_turn_90_s,
            right_period_s,
            turn_radius_cm,
            ..CalibrationTargets::default()
        };
        Ok(Self {
            inner: locomotion::calibrate(&targets).map_err(value_err)?,
        })
    }

    #[getter]
    fn stride_walk_cm(&self) -> f64 {
        self.inner.stride_walk_cm
    }

    #[getter]
    fn dtheta_left_rad(&self) -> f64 {
        self.inner.dtheta_left_rad
    }

    #[getter]
    fn dtheta_right_rad(&self) -> f64 {
        self.inner.dtheta_right_rad
    }

    #[getter]
    fn turn_radius_cm(&self) -> f64 {
        self.inner.turn_radius_cm
    }

    /// Trajectory of `cycles` cycles in one mode (`walk`, `turn_left`, `turn_right`).
    #[pyo3(signature = (mode, cycles, dt=0.1))]
    fn simulate(&self, mode: &str, cycles: u32, dt: f64) -> PyResult<Vec<Row>> {
        let schedule = match mode {
            "walk" => ServoSchedule::walk(cycles, self.inner.walk_period_s),
            "turn_left" => ServoSchedule::turn_left(cycles, self.inner.left_period_s),
            "turn_right" => ServoSchedule::turn_right(cycles, self.inner.right_period_s),
            other => return Err(PyValueError::new_err(format!("unknown mode `{other}`"))),
        };
        let tr = locomotion::simulate(&schedule, &self.inner, dt).map_err(value_err)?;
        Ok(rows(&tr))
    }

    /// Plans a schedule through the waypoints; returns the trajectory rows.
    #[pyo3(signature = (waypoints, dt=0.1, initial_heading_rad=0.0))]
    fn follow_path(
        &self,
        waypoints: Vec<(f64, f64)>,
        dt: f64,
        initial_heading_rad: f64,
    ) -> PyResult<Vec<Row>> {
        let opts = locomotion::PlannerOptions {
            initial_heading_rad,
            ..Default::default()
        };
        let (_, tr) = locomotion::follow_path(&waypoints, &self.inner, &opts, dt)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        Ok(rows(&tr))
    }
}

fn rows(tr: &locomotion::Trajectory) -> Vec<Row> {
    tr.samples
        .iter()
        .map(|s| {
            (
                s.t,
                s.pose.x,
                s.pose.y,
                s.pose.heading,
                s.mode.name().to_string(),
            )
        })
        .collect()
}

/// Gait mode (`walk`, `turn_left`, `turn_right`) at a servo phase.
#[pyfunction]
fn mode_of_phase(phase: f64) -> &'static str {
    gait::mode_of_phase(phase).name()
}

/// Servo phase at time `t` of a single sweep over `[start, end]`.
#[pyfunction]
#[pyo3(signature = (t, start_rad, end_rad, period_s, repeats=1))]
fn servo_phase(t: f64, start_rad: f64, end_rad: f64, period_s: f64, repeats: u32) -> PyResult<f64> {
    let schedule = ServoSchedule::new(vec![gait::ScheduleSegment::new(
        start_rad, end_rad, period_s, repeats,
    )])
    .map_err(value_err)?;
    Ok(schedule.servo_phase(t))
}

/// Twist fraction of a group's input bellows at a servo phase (unit gear ratio).
#[pyfunction]
fn twist_fraction(group: &str, servo: f64) -> PyResult<f64> {
    Ok(transmission::BeltCoupling::default().twist_fraction(parse_group(group)?, servo))
}

#[pymodule]
fn bests_sim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySegment>()?;
    m.add_class::<PyRobot>()?;
    m.add_class::<PyCalibration>()?;
    m.add_function(wrap_pyfunction!(mode_of_phase, m)?)?;
    m.add_function(wrap_pyfunction!(servo_phase, m)?)?;
    m.add_function(wrap_pyfunction!(twist_fraction, m)?)?;
    m.add("WALK", GaitMode::Walk.name())?;
    Ok(())
}
