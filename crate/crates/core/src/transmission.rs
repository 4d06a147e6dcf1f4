//! Closed-gas transmission: a servo-twisted input bellows feeding five leg
//! units, and the timing belt that holds two such systems half a turn apart.
//!
//! The enclosed gas is treated as incompressible, so the state of a system is
//! the single curvature `rho` at which the gas pushed out of the input
//! bellows exactly fills the outputs.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, BellowsUnit, GeometryError, SizeClass};

pub const MAX_BISECTION_ITERS: usize = 80;
pub const RESIDUAL_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransmissionError {
    #[error("twist angle {alpha} rad outside [0, {alpha_max}]")]
    TwistOutOfRange { alpha: f64, alpha_max: f64 },
    #[error("invalid input bellows: {0}")]
    InvalidInput(String),
    #[error("closed system has no output units")]
    NoOutputs,
    #[error(
        "total gas {v_total} mL cannot fill the flat outputs and the input ({needed} mL needed)"
    )]
    Underfilled { v_total: f64, needed: f64 },
    #[error("outputs saturated with {overflow_ml} mL of gas left over")]
    Saturated { overflow_ml: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// The twisted driver bellows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputUnit {
    pub v_rest_ml: f64,
    pub alpha_max_rad: f64,
    /// Skeleton rib count.
    pub ribs: u32,
    pub squeeze_exponent: f64,
    /// Fraction of `v_rest_ml` expelled at full twist by a rib-less bellows.
    pub squeeze_gain: f64,
}

impl InputUnit {
    pub fn validate(&self) -> Result<(), TransmissionError> {
        let bad = |what: &str, v: f64| TransmissionError::InvalidInput(format!("{what} = {v}"));
        if !(self.v_rest_ml.is_finite() && self.v_rest_ml > 0.0) {
            return Err(bad("v_rest_ml", self.v_rest_ml));
        }
        if !(self.alpha_max_rad.is_finite() && self.alpha_max_rad > 0.0) {
            return Err(bad("alpha_max_rad", self.alpha_max_rad));
        }
        if !(self.squeeze_exponent.is_finite() && self.squeeze_exponent > 0.0) {
            return Err(bad("squeeze_exponent", self.squeeze_exponent));
        }
        if !(self.squeeze_gain.is_finite() && self.squeeze_gain >= 0.0) {
            return Err(bad("squeeze_gain", self.squeeze_gain));
        }
        Ok(())
    }

    /// Expelled-volume gain. Ribs widen the squeezed area; the benefit
    /// saturates at twice the rib-less gain.
    pub fn rib_gain(&self) -> f64 {
        let ribs = f64::from(self.ribs);
        self.squeeze_gain * (1.0 + ribs / (ribs + 2.0))
    }

    fn twist_fraction(&self, alpha: f64) -> Result<f64, TransmissionError> {
        if !(alpha.is_finite() && (0.0..=self.alpha_max_rad).contains(&alpha)) {
            return Err(TransmissionError::TwistOutOfRange {
                alpha,
                alpha_max: self.alpha_max_rad,
            });
        }
        Ok(alpha / self.alpha_max_rad)
    }

    /// Volume shrinkage rate at a twist angle, in [0, 1].
    pub fn shrinkage(&self, alpha: f64) -> Result<f64, TransmissionError> {
        let w = self.twist_fraction(alpha)?;
        Ok((w.powf(self.squeeze_exponent) * self.rib_gain()).min(1.0))
    }

    pub fn volume(&self, alpha: f64) -> Result<f64, TransmissionError> {
        Ok(self.v_rest_ml * (1.0 - self.shrinkage(alpha)?))
    }
}

pub fn input_volume(input: &InputUnit, alpha: f64) -> Result<f64, TransmissionError> {
    input.volume(alpha)
}

/// One sealed gas circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedSystem {
    pub input: InputUnit,
    pub outputs: Vec<BellowsUnit>,
    pub v_total_ml: f64,
}

/// A solved state of a closed system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub alpha: f64,
    pub rho: f64,
    pub eta: f64,
    pub v_in_ml: f64,
    pub v_out_ml: f64,
    /// `v_in + v_out - v_total`.
    pub residual_ml: f64,
}

impl ClosedSystem {
    pub fn new(
        input: InputUnit,
        outputs: Vec<BellowsUnit>,
        v_total_ml: f64,
    ) -> Result<Self, TransmissionError> {
        let sys = Self {
            input,
            outputs,
            v_total_ml,
        };
        sys.validate()?;
        Ok(sys)
    }

    /// Builds a system whose rest state (no twist) balances at zero
    /// curvature: the input holds all gas not trapped in the flat outputs.
    pub fn assembled(
        mut input: InputUnit,
        outputs: Vec<BellowsUnit>,
        v_total_ml: f64,
    ) -> Result<Self, TransmissionError> {
        input.v_rest_ml = v_total_ml - outputs.iter().map(|u| u.v_flat_ml).sum::<f64>();
        Self::new(input, outputs, v_total_ml)
    }

    pub fn validate(&self) -> Result<(), TransmissionError> {
        self.input.validate()?;
        if self.outputs.is_empty() {
            return Err(TransmissionError::NoOutputs);
        }
        for unit in &self.outputs {
            unit.validate()?;
        }
        if !(self.v_total_ml.is_finite() && self.v_total_ml > 0.0) {
            return Err(TransmissionError::InvalidInput(format!(
                "v_total_ml = {}",
                self.v_total_ml
            )));
        }
        Ok(())
    }

    pub fn output_volume(&self, rho: f64) -> Result<f64, TransmissionError> {
        let mut total = 0.0;
        for unit in &self.outputs {
            total += geometry::unit_volume(unit, rho)?;
        }
        Ok(total)
    }

    /// Curvature at which every output has stopped growing.
    pub fn full_saturation_curvature(&self) -> f64 {
        self.outputs
            .iter()
            .map(geometry::saturation_curvature)
            .filter(|r| r.is_finite())
            .fold(0.0, f64::max)
    }

    /// Conservation residual `v_in(alpha) + v_out(rho) - v_total`.
    pub fn residual(&self, alpha: f64, rho: f64) -> Result<f64, TransmissionError> {
        Ok(self.input.volume(alpha)? + self.output_volume(rho)? - self.v_total_ml)
    }
}

/// Common output curvature that conserves the enclosed gas at twist `alpha`.
///
/// Bisection on `[0, rho_full]`, where `rho_full` saturates every output.
/// Fails with [`TransmissionError::Saturated`] when the outputs cannot absorb
/// the expelled gas.
pub fn solve_equilibrium(sys: &ClosedSystem, alpha: f64) -> Result<Equilibrium, TransmissionError> {
    let v_in = sys.input.volume(alpha)?;
    let eta = sys.input.shrinkage(alpha)?;
    let tol = RESIDUAL_REL_TOL * sys.v_total_ml;
    let residual = |rho: f64| -> Result<f64, TransmissionError> {
        Ok(v_in + sys.output_volume(rho)? - sys.v_total_ml)
    };
    let done = |rho: f64, r: f64| Equilibrium {
        alpha,
        rho,
        eta,
        v_in_ml: v_in,
        v_out_ml: r + sys.v_total_ml - v_in,
        residual_ml: r,
    };

    let r_lo = residual(0.0)?;
    if r_lo > tol {
        return Err(TransmissionError::Underfilled {
            v_total: sys.v_total_ml,
            needed: sys.v_total_ml + r_lo,
        });
    }
    if r_lo.abs() <= tol {
        return Ok(done(0.0, r_lo));
    }
    let mut hi = sys.full_saturation_curvature();
    let r_hi = residual(hi)?;
    if r_hi < -tol {
        return Err(TransmissionError::Saturated { overflow_ml: -r_hi });
    }
    if r_hi.abs() <= tol {
        // The saturated plateau is flat; report its onset instead of its end.
        let start_of_plateau = bisect_plateau_onset(sys, v_in, hi, tol)?;
        let r = residual(start_of_plateau)?;
        return Ok(done(start_of_plateau, r));
    }

    let mut lo = 0.0;
    let mut best = (hi, r_hi);
    for _ in 0..MAX_BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        let r = residual(mid)?;
        if r.abs() < best.1.abs() {
            best = (mid, r);
        }
        if r.abs() <= tol {
            break;
        }
        if r < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(done(best.0, best.1))
}

fn bisect_plateau_onset(
    sys: &ClosedSystem,
    v_in: f64,
    hi: f64,
    tol: f64,
) -> Result<f64, TransmissionError> {
    let mut lo = 0.0;
    let mut hi = hi;
    for _ in 0..MAX_BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        let r = v_in + sys.output_volume(mid)? - sys.v_total_ml;
        if r < -tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Timing belt tying both input bellows to one servo, half a turn apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeltCoupling {
    pub gear_ratio: f64,
}

impl Default for BeltCoupling {
    fn default() -> Self {
        Self { gear_ratio: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Group {
    A,
    B,
}

impl Group {
    pub fn other(self) -> Self {
        match self {
            Group::A => Group::B,
            Group::B => Group::A,
        }
    }
}

impl BeltCoupling {
    pub const PHASE_OFFSET: f64 = PI;

    /// Input-side phase of a group, wrapped to `[0, 2pi)`. Group B sits at
    /// the servo phase, group A half a turn ahead.
    pub fn input_phase(&self, group: Group, servo: f64) -> f64 {
        let base = self.gear_ratio * servo;
        let phase = match group {
            Group::B => base,
            Group::A => base + Self::PHASE_OFFSET,
        };
        phase.rem_euclid(TAU)
    }

    /// Twist as a fraction of full collapse: a triangle wave that rises over
    /// the first half turn and releases over the second.
    pub fn twist_fraction(&self, group: Group, servo: f64) -> f64 {
        let u = self.input_phase(group, servo);
        if u <= PI {
            u / PI
        } else {
            (TAU - u) / PI
        }
    }

    /// Whether the group's input is being twisted (rather than released) as
    /// the servo advances.
    pub fn is_twisting(&self, group: Group, servo: f64) -> bool {
        let u = self.input_phase(group, servo);
        (u < PI) == (self.gear_ratio >= 0.0)
    }

    pub fn twist_angle(&self, group: Group, servo: f64, input: &InputUnit) -> f64 {
        (self.twist_fraction(group, servo) * input.alpha_max_rad).min(input.alpha_max_rad)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledState {
    pub servo: f64,
    pub a: Equilibrium,
    pub b: Equilibrium,
}

impl CoupledState {
    pub fn get(&self, group: Group) -> &Equilibrium {
        match group {
            Group::A => &self.a,
            Group::B => &self.b,
        }
    }
}

/// Solves both systems at one servo phase. They share no gas; only the belt
/// ties their twist angles together.
pub fn coupled_state(
    belt: &BeltCoupling,
    sys_a: &ClosedSystem,
    sys_b: &ClosedSystem,
    servo: f64,
) -> Result<CoupledState, TransmissionError> {
    let a = solve_equilibrium(sys_a, belt.twist_angle(Group::A, servo, &sys_a.input))?;
    let b = solve_equilibrium(sys_b, belt.twist_angle(Group::B, servo, &sys_b.input))?;
    Ok(CoupledState { servo, a, b })
}

/// The ten legs in a fixed order: each group's three large units then its
/// two small ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LegId {
    A1,
    A2,
    A3,
    #[serde(rename = "a1")]
    SmallA1,
    #[serde(rename = "a2")]
    SmallA2,
    B1,
    B2,
    B3,
    #[serde(rename = "b1")]
    SmallB1,
    #[serde(rename = "b2")]
    SmallB2,
}

impl LegId {
    pub const ALL: [LegId; 10] = [
        LegId::A1,
        LegId::A2,
        LegId::A3,
        LegId::SmallA1,
        LegId::SmallA2,
        LegId::B1,
        LegId::B2,
        LegId::B3,
        LegId::SmallB1,
        LegId::SmallB2,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn group(self) -> Group {
        if self.index() < 5 {
            Group::A
        } else {
            Group::B
        }
    }

    pub fn size_class(self) -> SizeClass {
        if self.index() % 5 < 3 {
            SizeClass::Large
        } else {
            SizeClass::Small
        }
    }

    /// Slot within the group's output list.
    pub fn slot(self) -> usize {
        self.index() % 5
    }

    /// Same position in the opposite group.
    pub fn mirror(self) -> LegId {
        LegId::ALL[(self.index() + 5) % 10]
    }

    pub fn name(self) -> &'static str {
        match self {
            LegId::A1 => "A1",
            LegId::A2 => "A2",
            LegId::A3 => "A3",
            LegId::SmallA1 => "a1",
            LegId::SmallA2 => "a2",
            LegId::B1 => "B1",
            LegId::B2 => "B2",
            LegId::B3 => "B3",
            LegId::SmallB1 => "b1",
            LegId::SmallB2 => "b2",
        }
    }
}

impl std::fmt::Display for LegId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Bend of every leg at the given curvatures, indexed by [`LegId::index`].
/// Each system's outputs are expected in leg order (three large, two small).
pub fn leg_bends(
    sys_a: &ClosedSystem,
    sys_b: &ClosedSystem,
    rho_a: f64,
    rho_b: f64,
) -> Result<[f64; 10], TransmissionError> {
    let mut bends = [0.0; 10];
    for leg in LegId::ALL {
        let (sys, rho) = match leg.group() {
            Group::A => (sys_a, rho_a),
            Group::B => (sys_b, rho_b),
        };
        let unit = sys
            .outputs
            .get(leg.slot())
            .ok_or(TransmissionError::NoOutputs)?;
        bends[leg.index()] = geometry::unit_bend(unit, rho)?;
    }
    Ok(bends)
}

pub fn leg_bend_profile(
    belt: &BeltCoupling,
    sys_a: &ClosedSystem,
    sys_b: &ClosedSystem,
    servo: f64,
) -> Result<[f64; 10], TransmissionError> {
    let state = coupled_state(belt, sys_a, sys_b, servo)?;
    leg_bends(sys_a, sys_b, state.a.rho, state.b.rho)
}
