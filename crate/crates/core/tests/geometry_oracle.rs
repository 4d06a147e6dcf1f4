//! Bend geometry against an explicit planar construction, and the segment
//! area against a polygon.

use std::f64::consts::PI;

use bests_core::geometry::{self, BellowsUnit, SegmentGeometry, SizeClass};
use proptest::prelude::*;

/// Places the straight run along the negative x axis ending at the bonded
/// edge (origin) and the separated arc leaving it tangentially, then
/// measures |AB| and the angle of AB against the x axis.
fn planar_oracle(r: f64, beta: f64, rho: f64) -> (f64, f64) {
    let s1 = beta * r;
    let s2 = r - s1;
    let a = (-s2, 0.0);
    let b = if rho == 0.0 {
        (s1, 0.0)
    } else {
        let big_r = 1.0 / rho;
        let sweep = s1 * rho; // full central angle of the arc
                              // 1 - cos written as 2 sin^2 to stay accurate at tiny sweeps
        (
            big_r * sweep.sin(),
            2.0 * big_r * (sweep / 2.0).sin().powi(2),
        )
    };
    let dx = b.0 - a.0;
    let dy = b.1 - a.1;
    (dx.hypot(dy), dy.atan2(dx))
}

fn polygon_area(seg: &SegmentGeometry, rho: f64, n: usize) -> f64 {
    // arc from the origin, closed by its chord; shoelace formula
    let big_r = 1.0 / rho;
    let sweep = seg.s1() * rho;
    let pts: Vec<(f64, f64)> = (0..=n)
        .map(|i| {
            let a = sweep * i as f64 / n as f64;
            (big_r * a.sin(), 2.0 * big_r * (a / 2.0).sin().powi(2))
        })
        .collect();
    let mut twice = 0.0;
    for i in 0..pts.len() {
        let (x0, y0) = pts[i];
        let (x1, y1) = pts[(i + 1) % pts.len()];
        twice += x0 * y1 - x1 * y0;
    }
    twice.abs() / 2.0
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn worked_example_matches_construction() {
    let seg = SegmentGeometry::new(30.0, 0.5, 60.0).unwrap();
    let h = geometry::half_segment_bend(&seg, 0.02).unwrap();
    let (k, phi) = planar_oracle(30.0, 0.5, 0.02);
    assert!(rel(h.k, k) < 1e-12 && rel(h.phi, phi) < 1e-12);
    assert!((k - 29.859_636_038_705_82).abs() < 1e-9);
    assert!((phi - 0.074_859_005_081_762_6).abs() < 1e-12);
    let unit = BellowsUnit::new("L", SizeClass::Large, seg, 4, 0.5).unwrap();
    assert!((geometry::unit_bend(&unit, 0.02).unwrap() - 8.0 * phi).abs() < 1e-12);
}

#[test]
fn saturation_curvature_from_grid_scan() {
    let seg = SegmentGeometry::new(30.0, 0.5, 60.0).unwrap();
    let n = 10_000;
    let first = (0..=n)
        .map(|i| 0.3 * i as f64 / n as f64)
        .find(|&rho| geometry::half_segment_bend(&seg, rho).unwrap().saturated)
        .unwrap();
    let exact = seg.saturation_curvature();
    assert!((exact - 0.209_439_510_239_319_53).abs() < 1e-15);
    assert!(first >= exact && first - exact <= 0.3 / n as f64);
}

#[test]
fn area_matches_polygon() {
    let seg = SegmentGeometry::new(30.0, 0.5, 40.0).unwrap();
    let closed = geometry::separated_area(&seg, 0.02).unwrap();
    let poly = polygon_area(&seg, 0.02, 10_000);
    assert!(rel(closed, poly) < 1e-6, "{closed} vs {poly}");
    assert!((closed - 5.599_741_673_325_553).abs() < 1e-12);
    let unit = BellowsUnit::new("L", SizeClass::Large, seg, 4, 0.5).unwrap();
    let v = geometry::unit_volume(&unit, 0.02).unwrap();
    assert!((v - (0.895_958_667_732_088_5 + 0.5)).abs() < 1e-12);
    for rho in [1e-4, 1e-3, 0.05, 0.1, 0.2] {
        assert!(
            rel(
                geometry::separated_area(&seg, rho).unwrap(),
                polygon_area(&seg, rho, 10_000)
            ) < 1e-6
        );
    }
}

#[test]
fn degenerate_limits() {
    let seg = SegmentGeometry::new(30.0, 0.5, 60.0).unwrap();
    let h = geometry::half_segment_bend(&seg, 0.0).unwrap();
    assert_eq!((h.k, h.phi), (30.0, 0.0));
    let (k, phi) = geometry::arc_triangle(20.0, 0.0, 0.5);
    assert!((phi - 0.5).abs() < 1e-12);
    assert!((k - 40.0 * 0.5_f64.sin()).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn formulas_match_planar_construction(
        r in 5.0..60.0f64,
        beta in 0.02..0.98f64,
        frac in 0.0..0.999f64,
    ) {
        let seg = SegmentGeometry::new(r, beta, 50.0).unwrap();
        let rho = frac * seg.saturation_curvature();
        let h = geometry::half_segment_bend(&seg, rho).unwrap();
        let (k, phi) = planar_oracle(r, beta, rho);
        prop_assert!(rel(h.k, k) < 1e-9);
        let ok = if phi == 0.0 { h.phi.abs() < 1e-15 } else { rel(h.phi, phi) < 1e-9 };
        prop_assert!(ok);
    }

    // Below beta = 0.5 the arc end starts dropping before the cap, so the
    // bend peaks slightly before saturation; volume stays monotone.
    #[test]
    fn bend_and_volume_are_monotone(r in 5.0..60.0f64, beta in 0.5..0.98f64, a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let seg = SegmentGeometry::new(r, beta, 50.0).unwrap();
        let unit = BellowsUnit::new("u", SizeClass::Large, seg, 3, 0.5).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let sat = seg.saturation_curvature();
        prop_assert!(geometry::unit_bend(&unit, lo * sat).unwrap() <= geometry::unit_bend(&unit, hi * sat).unwrap());
        prop_assert!(geometry::unit_volume(&unit, lo * sat).unwrap() <= geometry::unit_volume(&unit, hi * sat).unwrap());
    }

    #[test]
    fn volume_is_monotone_for_any_split(beta in 0.02..0.98f64, a in 0.0..1.2f64, b in 0.0..1.2f64) {
        let seg = SegmentGeometry::new(30.0, beta, 50.0).unwrap();
        let unit = BellowsUnit::new("u", SizeClass::Large, seg, 3, 0.5).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let sat = seg.saturation_curvature();
        prop_assert!(geometry::unit_volume(&unit, lo * sat).unwrap() <= geometry::unit_volume(&unit, hi * sat).unwrap());
    }

    #[test]
    fn bend_is_capped(r in 5.0..60.0f64, beta in 0.05..0.95f64, over in 1.0..5.0f64) {
        let seg = SegmentGeometry::new(r, beta, 50.0).unwrap();
        let h = geometry::half_segment_bend(&seg, over * seg.saturation_curvature()).unwrap();
        prop_assert!(h.saturated);
        prop_assert!(h.phi <= PI / 2.0 + 1e-12);
    }
}
