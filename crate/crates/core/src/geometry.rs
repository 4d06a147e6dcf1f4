//! Arc-geometry bending model of a heat-bonded bellows segment.
//!
//! A segment cross-section is split into a separated region of length `s1`
//! that bulges into a circular arc of curvature `rho`, and a contacted region
//! of length `s2` that stays straight. All lengths are millimeters, angles are
//! radians and volumes are milliliters.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Half central angle at which adjacent segment faces are fully folded.
pub const THETA_CAP: f64 = FRAC_PI_2;

const MM3_PER_ML: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("curvature must be finite and non-negative, got {0}")]
    NegativeCurvature(f64),
    #[error("segment radius must be positive, got {0} mm")]
    Radius(f64),
    #[error("segment depth must be positive, got {0} mm")]
    Depth(f64),
    #[error("contact-release fraction must lie in [0, 1), got {0}")]
    Beta(f64),
    #[error("a bellows unit needs at least one segment")]
    NoSegments,
    #[error("flat-state residual volume must be finite and non-negative, got {0} mL")]
    FlatVolume(f64),
}

/// Fabrication geometry of one bending bellows segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSegment", into = "RawSegment")]
pub struct SegmentGeometry {
    r: f64,
    beta: f64,
    depth: f64,
}

#[derive(Serialize, Deserialize)]
struct RawSegment {
    r_mm: f64,
    beta: f64,
    depth_mm: f64,
}

impl TryFrom<RawSegment> for SegmentGeometry {
    type Error = GeometryError;

    fn try_from(raw: RawSegment) -> Result<Self, Self::Error> {
        SegmentGeometry::new(raw.r_mm, raw.beta, raw.depth_mm)
    }
}

impl From<SegmentGeometry> for RawSegment {
    fn from(seg: SegmentGeometry) -> Self {
        RawSegment {
            r_mm: seg.r,
            beta: seg.beta,
            depth_mm: seg.depth,
        }
    }
}

impl SegmentGeometry {
    pub fn new(r: f64, beta: f64, depth: f64) -> Result<Self, GeometryError> {
        if !(r.is_finite() && r > 0.0) {
            return Err(GeometryError::Radius(r));
        }
        if !(beta.is_finite() && (0.0..1.0).contains(&beta)) {
            return Err(GeometryError::Beta(beta));
        }
        if !(depth.is_finite() && depth > 0.0) {
            return Err(GeometryError::Depth(depth));
        }
        Ok(Self { r, beta, depth })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    /// Length of the separated (arc) region.
    pub fn s1(&self) -> f64 {
        self.beta * self.r
    }

    /// Length of the contacted (straight) region; `s1 + s2 == r`.
    pub fn s2(&self) -> f64 {
        self.r - self.s1()
    }

    /// Curvature at which the half central angle reaches [`THETA_CAP`].
    /// Infinite for `beta == 0`, where the segment never separates.
    pub fn saturation_curvature(&self) -> f64 {
        let s1 = self.s1();
        if s1 == 0.0 {
            f64::INFINITY
        } else {
            2.0 * THETA_CAP / s1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeClass {
    Large,
    Small,
}

/// A leg-sized chain of identical segments sharing one gas volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellowsUnit {
    pub id: String,
    pub size_class: SizeClass,
    pub segment: SegmentGeometry,
    pub n_segments: u32,
    /// Residual gas held by the flat laminate.
    pub v_flat_ml: f64,
}

impl BellowsUnit {
    pub fn new(
        id: impl Into<String>,
        size_class: SizeClass,
        segment: SegmentGeometry,
        n_segments: u32,
        v_flat_ml: f64,
    ) -> Result<Self, GeometryError> {
        let unit = Self {
            id: id.into(),
            size_class,
            segment,
            n_segments,
            v_flat_ml,
        };
        unit.validate()?;
        Ok(unit)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.n_segments == 0 {
            return Err(GeometryError::NoSegments);
        }
        if !(self.v_flat_ml.is_finite() && self.v_flat_ml >= 0.0) {
            return Err(GeometryError::FlatVolume(self.v_flat_ml));
        }
        Ok(())
    }
}

/// Bend of half a segment at a given curvature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfSegmentBend {
    /// Length of the A-B segment.
    pub k: f64,
    pub phi: f64,
    pub saturated: bool,
}

/// Full kinematic state of one unit at a given curvature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BendState {
    pub rho: f64,
    /// Radius of curvature; `None` for a flat segment.
    pub radius: Option<f64>,
    pub theta: f64,
    pub k: f64,
    pub phi: f64,
    pub unit_bend: f64,
    pub saturated: bool,
}

fn check_curvature(rho: f64) -> Result<(), GeometryError> {
    if rho.is_finite() && rho >= 0.0 {
        Ok(())
    } else {
        Err(GeometryError::NegativeCurvature(rho))
    }
}

/// `sin(x) / x` with the removable singularity filled in.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `(x - sin x) / x^2`, accurate for small `x`.
fn arc_excess_ratio(x: f64) -> f64 {
    if x < 0.1 {
        let x2 = x * x;
        // x/3! - x^3/5! + x^5/7! - x^7/9! + x^9/11!
        x * (1.0 / 6.0
            - x2 * (1.0 / 120.0 - x2 * (1.0 / 5040.0 - x2 * (1.0 / 362_880.0 - x2 / 39_916_800.0))))
    } else {
        (x - x.sin()) / (x * x)
    }
}

/// Half of the central angle subtended by the separated arc.
pub fn central_angle(seg: &SegmentGeometry, rho: f64) -> Result<f64, GeometryError> {
    check_curvature(rho)?;
    Ok(seg.s1() * rho / 2.0)
}

/// Length of A-B and the half-segment bending angle. Beyond the fold-over
/// curvature the angle is held at its cap and the state is flagged.
pub fn half_segment_bend(
    seg: &SegmentGeometry,
    rho: f64,
) -> Result<HalfSegmentBend, GeometryError> {
    let theta = central_angle(seg, rho)?;
    let saturated = rho >= seg.saturation_curvature();
    let theta = if saturated {
        THETA_CAP
    } else {
        theta.min(THETA_CAP)
    };
    if theta == 0.0 {
        return Ok(HalfSegmentBend {
            k: seg.r(),
            phi: 0.0,
            saturated: false,
        });
    }
    let (k, phi) = arc_triangle(seg.s1(), seg.s2(), theta);
    Ok(HalfSegmentBend { k, phi, saturated })
}

/// `(k, phi)` of the triangle formed by the straight run `s2` and the chord
/// of an arc of length `s1` with half central angle `theta > 0`. Defined for
/// `s2 = 0` too, where `k` is the chord and `phi = theta`.
pub fn arc_triangle(s1: f64, s2: f64, theta: f64) -> (f64, f64) {
    // 2R sin(theta) with R = s1 / (2 theta)
    let chord = s1 * sinc(theta);
    let k = (s2 * s2 + chord * chord - 2.0 * s2 * chord * (PI - theta).cos()).sqrt();
    let phi = (chord * (PI - theta).sin() / k).clamp(-1.0, 1.0).asin();
    (k, phi)
}

pub fn bend_state(unit: &BellowsUnit, rho: f64) -> Result<BendState, GeometryError> {
    let half = half_segment_bend(&unit.segment, rho)?;
    let theta = if half.saturated {
        THETA_CAP
    } else {
        central_angle(&unit.segment, rho)?.min(THETA_CAP)
    };
    Ok(BendState {
        rho,
        radius: (rho > 0.0).then(|| 1.0 / rho),
        theta,
        k: half.k,
        phi: half.phi,
        unit_bend: 2.0 * half.phi * f64::from(unit.n_segments),
        saturated: half.saturated,
    })
}

/// Aggregate bend of the unit: every segment bends identically.
pub fn unit_bend(unit: &BellowsUnit, rho: f64) -> Result<f64, GeometryError> {
    let half = half_segment_bend(&unit.segment, rho)?;
    Ok(2.0 * half.phi * f64::from(unit.n_segments))
}

/// Area between the separated arc and its chord for one segment, mm^2.
pub fn separated_area(seg: &SegmentGeometry, rho: f64) -> Result<f64, GeometryError> {
    let theta = if rho >= seg.saturation_curvature() {
        THETA_CAP
    } else {
        central_angle(seg, rho)?.min(THETA_CAP)
    };
    let s1 = seg.s1();
    // R^2 (2θ - sin 2θ) / 2 rewritten in x = 2θ so rho never divides.
    Ok(s1 * s1 * arc_excess_ratio(2.0 * theta) / 2.0)
}

/// Enclosed gas of the unit, mL.
pub fn unit_volume(unit: &BellowsUnit, rho: f64) -> Result<f64, GeometryError> {
    let area = separated_area(&unit.segment, rho)?;
    Ok(f64::from(unit.n_segments) * area * unit.segment.depth() / MM3_PER_ML + unit.v_flat_ml)
}

/// Smallest curvature at which the unit stops bending.
pub fn saturation_curvature(unit: &BellowsUnit) -> f64 {
    unit.segment.saturation_curvature()
}

/// Largest bend the unit can reach.
pub fn max_unit_bend(unit: &BellowsUnit) -> f64 {
    let rho = saturation_curvature(unit);
    if rho.is_finite() {
        unit_bend(unit, rho).unwrap_or(0.0)
    } else {
        0.0
    }
}
