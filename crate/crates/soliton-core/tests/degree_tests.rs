//! Degree machinery: synthetic winding loops, Newton inversion round trips,
//! and the signed-crossing certificate on the circle-fibered family.
//!
//! Numerical pins come from an independent high-order sweep of the reduced
//! map; tolerances reflect the 10⁻⁴ residual gate of the cone estimators.

use soliton_core::cone_map::{eval_F, ConeSlopes};
use soliton_core::degree::{
    boundary_loop_values, degree_s1r3, invert_F, winding_around, winding_number,
    CertificateKind, DegreeTarget, SearchBox,
};
use soliton_core::integrator::IntegrationParams;
use soliton_core::profile_ode::{InitialConditions, Topology};
use soliton_core::SolitonError;

fn circle(n: usize, center: (f64, f64)) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let th = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            let rad = 1.0 + 0.3 * if i % 2 == 0 { 1.0 } else { -1.0 };
            (center.0 + rad * th.cos(), center.1 + rad * th.sin())
        })
        .collect()
}

#[test]
fn winding_synthetic_loops() {
    let loop16 = circle(16, (0.0, 0.0));
    assert_eq!(winding_number(&loop16, (0.0, 0.0)).unwrap(), 1);
    assert_eq!(winding_number(&loop16, (0.2, -0.3)).unwrap(), 1);
    // target outside the loop
    assert_eq!(winding_number(&loop16, (5.0, 0.0)).unwrap(), 0);
    // reversed orientation
    let rev: Vec<_> = loop16.iter().rev().copied().collect();
    assert_eq!(winding_number(&rev, (0.0, 0.0)).unwrap(), -1);
}

#[test]
fn winding_rejects_bad_loops() {
    assert!(matches!(
        winding_number(&[(1.0, 0.0), (0.0, 1.0)], (0.0, 0.0)),
        Err(SolitonError::InvalidParameters(_))
    ));
    // a sample exactly on the target
    let mut hit = circle(8, (0.0, 0.0));
    hit[3] = (0.4, 0.4);
    assert!(matches!(
        winding_number(&hit, (0.4, 0.4)),
        Err(SolitonError::OnTarget { segment: 3 })
    ));
    // antipodal jump: the angle increment is exactly π, ambiguous
    let jump = [(1.0, 0.0), (-1.0, 0.0), (1.0, 0.0)];
    assert!(matches!(
        winding_number(&jump, (0.0, 0.0)),
        Err(SolitonError::Refine { segment: 0 })
    ));
}

/// Forward-evaluate at a known parameter point, then ask the inverse solver
/// to find it back from nine cold starts.
#[test]
fn invert_recovers_known_preimage() {
    let params = IntegrationParams::default();
    let ic = InitialConditions::new(Topology::S1xR3, 1.0, -1.0).unwrap();
    let cd = eval_F(&ic, &params).unwrap();
    let target = ConeSlopes {
        a_slope: cd.slopes.a_slope,
        b_slope: cd.slopes.b_slope,
        err_estimate: 0.0,
    };
    let bx = SearchBox::new(0.5, 2.0, 0.1, 10.0).unwrap();
    let pre = invert_F(&target, Topology::S1xR3, &bx, &params).unwrap();
    assert_eq!(pre.len(), 1, "multistart must merge to the single root");
    let p = &pre[0];
    assert!((p.ic.orbit_size - 1.0).abs() < 1e-3, "orbit {}", p.ic.orbit_size);
    assert!((p.ic.f0 + 1.0).abs() < 1e-3, "f0 {}", p.ic.f0);
    assert!(p.residual < 1e-4);
    // dF₀/d(orbit) > 0, dF₁/d(orbit) = 0, dF₁/d(−f₀) < 0 ⇒ det < 0
    assert_eq!(p.orientation, Some(-1));
}

#[test]
fn invert_reports_out_of_reach_targets() {
    let params = IntegrationParams::default();
    let target = ConeSlopes { a_slope: 100.0, b_slope: 1.0, err_estimate: 0.0 };
    let bx = SearchBox::new(0.9, 1.1, 0.9, 1.1).unwrap();
    assert!(matches!(
        invert_F(&target, Topology::S1xR3, &bx, &params),
        Err(SolitonError::NoneFound)
    ));
}

/// The reduced sweep over five decades of −f₀ finds exactly one transversal
/// crossing of the asymptotic sphere slope through 1, at the pinned location.
#[test]
fn signed_count_circle_family() {
    let params = IntegrationParams::default();
    let report = degree_s1r3(1.0, (1e-3, 1e2), &params).unwrap();
    assert_eq!(report.certificate, CertificateKind::SignedCount);
    assert!(matches!(report.target, DegreeTarget::BSlope(t) if t == 1.0));
    assert_eq!(report.signed_count, Some(1));
    assert_eq!(report.crossings.len(), 1);
    let c = &report.crossings[0];
    assert!(
        (c.mf0 - 0.9474588123).abs() / 0.9474588123 < 1e-3,
        "crossing at -f0 = {}",
        c.mf0
    );
    assert!(
        (c.a_slope - 0.709613).abs() / 0.709613 < 2e-3,
        "circle slope at crossing = {}",
        c.a_slope
    );
    assert_eq!(report.preimages.len(), 1);
    assert_eq!(report.preimages[0].orientation, Some(1));
}

#[test]
fn sweep_requires_a_straddling_range() {
    let params = IntegrationParams::default();
    // both endpoints sit below the target slope 1
    match degree_s1r3(1.0, (5.0, 100.0), &params) {
        Err(SolitonError::BracketFailure { lo, hi }) => {
            assert!(lo < 1.0 && hi < 1.0, "endpoint values ({lo}, {hi})");
        }
        other => panic!("expected bracket failure, got {other:?}"),
    }
    assert!(matches!(
        degree_s1r3(1.0, (0.0, 1.0), &params),
        Err(SolitonError::InvalidParameters(_))
    ));
}

/// Boundary winding around the image of an interior point: ±1 for a local
/// diffeomorphism, sign flipping with loop orientation.
#[test]
fn winding_matches_local_orientation() {
    let params = IntegrationParams::default();
    let ic = InitialConditions::new(Topology::S1xR3, 1.0, -1.0).unwrap();
    let cd = eval_F(&ic, &params).unwrap();
    // generic target: measured image point, mildly perturbed off any special value
    let target = (1.05 * cd.slopes.a_slope, 0.98 * cd.slopes.b_slope);

    let bx = SearchBox::new(0.8, 1.25, 0.8, 1.25).unwrap();
    let (w, n_used) = winding_around(Topology::S1xR3, &bx, target, &params).unwrap();
    assert_eq!(w, -1, "counterclockwise parameter loop, det J < 0 ({n_used} pts/side)");

    let values = boundary_loop_values(Topology::S1xR3, &bx, n_used, &params).unwrap();
    let rev: Vec<_> = values.iter().rev().copied().collect();
    assert_eq!(winding_number(&rev, target).unwrap(), 1);
}
