//! Right-hand sides, the degenerate-boundary structure of the transformed
//! first-order system, and curvature at and off the axis.

use nalgebra::Matrix4;
use soliton_core::geometry::{
    bianchi_constant, curvature, origin_frame, scalar_at_origin, soliton_residual,
    trace_residual,
};
use soliton_core::integrator::{integrate, IntegrationParams};
use soliton_core::profile_ode::{
    boundary_jet, rhs, transformed_boundary_s2r2, transformed_p_s2r2, InitialConditions,
    ProfileState, Topology,
};
use soliton_core::SolitonError;

fn ic(t: Topology, orbit: f64, f0: f64) -> InitialConditions {
    InitialConditions::new(t, orbit, f0).unwrap()
}

/// One state worked through the equations by hand.
#[test]
fn rhs_hand_value() {
    let st = ProfileState { r: 1.3, a: 1.1, da: 0.4, b: 0.9, db: 0.8, f: -0.3, df: -0.6 };
    let d = rhs(&st).unwrap();
    assert_eq!(d[0], 0.4);
    assert_eq!(d[2], 0.8);
    assert_eq!(d[4], -0.6);
    assert!((d[1] - 0.1488888888888889).abs() < 1e-15);
    assert!((d[3] - 0.5290909090909092).abs() < 1e-15);
    assert!((d[5] - 0.3111111111111113).abs() < 2e-15);
}

#[test]
fn rhs_degenerate_points() {
    let ok = ProfileState { r: 1.0, a: 1.0, da: 0.0, b: 1.0, db: 0.0, f: 0.0, df: 0.0 };
    assert!(rhs(&ok).is_ok());
    for bad in [
        ProfileState { r: 0.0, ..ok },
        ProfileState { a: 0.0, ..ok },
        ProfileState { b: -1.0, ..ok },
    ] {
        assert!(matches!(rhs(&bad), Err(SolitonError::DegeneratePoint { .. })));
    }
}

/// The soliton equations hold identically when second derivatives come from
/// the right-hand sides — along actual trajectories the residual is pure
/// roundoff.
#[test]
fn soliton_identity_is_algebraic() {
    let p = IntegrationParams { r_max: Some(20.0), ..IntegrationParams::default() };
    for t in [Topology::S1xR3, Topology::S2xR2] {
        let sol = integrate(&ic(t, 1.0, -1.0), &p).unwrap();
        for s in &sol.samples {
            let second = rhs(s).unwrap();
            let res = soliton_residual(s, &second).unwrap();
            assert!(res <= 1e-10 * (1.0 + s.r * s.r), "residual {res:.3e} at r={}", s.r);
            let frame = curvature(s, &second).unwrap();
            let tr = trace_residual(s, &frame).abs();
            assert!(tr <= 1e-10 * (1.0 + s.r * s.r), "trace {tr:.3e} at r={}", s.r);
        }
    }
}

/// Axis limits read off the jet: every sectional curvature is finite and the
/// scalar curvature closes to its boundary value.
#[test]
fn origin_curvature() {
    let jet = boundary_jet(&ic(Topology::S1xR3, 1.0, -1.0), 6).unwrap();
    let fr = origin_frame(&jet);
    assert!((fr.rm1221 - (-1.0 / 3.0)).abs() < 1e-14);
    assert!((fr.rm2332 - (-1.0 / 3.0)).abs() < 1e-14);
    // −b''(0)-limit = −(1/3 + f0/2) = 1/6 at f0 = −1
    assert!((fr.rm1331 - 1.0 / 6.0).abs() < 1e-14);
    assert!((fr.rm3443 - 1.0 / 6.0).abs() < 1e-14);
    assert!((fr.scalar - (-1.0)).abs() < 1e-13);

    let jet = boundary_jet(&ic(Topology::S2xR2, 2.0, -0.5), 6).unwrap();
    let fr = origin_frame(&jet);
    // 1/b₀² − f0 and the sphere direction 1/b₀²
    assert!((fr.rm1221 - (0.25 + 0.5)).abs() < 1e-14);
    assert!((fr.rm3443 - 0.25).abs() < 1e-14);
    // mixed planes −(1 + 1/b₀²)/2
    assert!((fr.rm1331 - (-(1.0 + 0.25) / 2.0)).abs() < 1e-14);

    for (t, orbit, f0) in [
        (Topology::S1xR3, 1.0, -1.0),
        (Topology::S1xR3, 0.5, -3.0),
        (Topology::S2xR2, 1.0, -1.0),
        (Topology::S2xR2, 2.0, -0.1),
    ] {
        let p = ic(t, orbit, f0);
        let jet = boundary_jet(&p, 6).unwrap();
        assert!(
            (scalar_at_origin(&jet) - bianchi_constant(&p)).abs() < 1e-12,
            "R(0) closure for {t:?}"
        );
    }
}

/// Near-axis curvature from jet data connects continuously to the frame
/// computed from integrated states just past the handoff.
#[test]
fn axis_frame_matches_outer_frame() {
    let p = IntegrationParams { r_max: Some(2.0), ..IntegrationParams::default() };
    for (t, orbit, f0) in [(Topology::S1xR3, 1.0, -1.0), (Topology::S2xR2, 0.5, -2.0)] {
        let q = ic(t, orbit, f0);
        let jet = boundary_jet(&q, 8).unwrap();
        let axis = origin_frame(&jet);
        let sol = integrate(&q, &p).unwrap();
        let s = &sol.samples[1]; // first integrated sample just past handoff
        let outer = curvature(s, &rhs(s).unwrap()).unwrap();
        // O(r²) continuity at r ~ 10⁻³
        for (x, y) in axis.components().iter().zip(outer.components()) {
            assert!((x - y).abs() < 1e-4, "frame jump {x} vs {y} at r={}", s.r);
        }
    }
}

// --- transformed system -----------------------------------------------------

fn fd_jacobian(b0: f64, f0: f64) -> Matrix4<f64> {
    let u0 = transformed_boundary_s2r2(b0, f0);
    let mut j = Matrix4::zeros();
    for col in 0..4 {
        let h = 1e-6 * (1.0 + u0[col].abs());
        let (mut up, mut um) = (u0, u0);
        up[col] += h;
        um[col] -= h;
        let pp = transformed_p_s2r2(&up, 0.0).unwrap();
        let pm = transformed_p_s2r2(&um, 0.0).unwrap();
        for row in 0..4 {
            j[(row, col)] = (pp[row] - pm[row]) / (2.0 * h);
        }
    }
    j
}

/// The vector field P vanishes at the boundary value and its u-Jacobian has
/// the closed form rows (nonzero only for Ḟ and Ḃ), with spectrum
/// {−1, 0, 0, 0} — the degenerate structure the startup expansion relies on.
#[test]
fn transformed_boundary_structure() {
    for (b0, f0) in [(0.5, -1.0), (1.0, -1.0), (2.0, -0.3)] {
        let u0 = transformed_boundary_s2r2(b0, f0);
        assert_eq!(u0, [f0 / 2.0, 1.0, b0, (b0 + 1.0 / b0) / 4.0]);
        let p0 = transformed_p_s2r2(&u0, 0.0).unwrap();
        for v in p0 {
            assert!(v.abs() < 1e-14, "P(u0, 0) = {p0:?}");
        }

        let j = fd_jacobian(b0, f0);
        let row1 = [
            0.0,
            -(1.0 + b0 * b0) / (2.0 * b0 * b0),
            (b0 * b0 - 1.0) / (2.0 * b0 * b0 * b0),
            -2.0 / b0,
        ];
        let row4 = [0.0, -(b0 + 1.0 / b0) / 4.0, (1.0 - 1.0 / (b0 * b0)) / 4.0, -1.0];
        for c in 0..4 {
            assert!((j[(0, c)] - row1[c]).abs() < 1e-7, "dF row, col {c}");
            assert!(j[(1, c)].abs() < 1e-7, "dh row is zero");
            assert!(j[(2, c)].abs() < 1e-7, "db row is zero");
            assert!((j[(3, c)] - row4[c]).abs() < 1e-7, "dB row, col {c}");
        }

        let mut eig: Vec<f64> = j.complex_eigenvalues().iter().map(|z| z.re).collect();
        for z in j.complex_eigenvalues().iter() {
            assert!(z.im.abs() < 1e-7, "real spectrum");
        }
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expect = [-1.0, 0.0, 0.0, 0.0];
        for (e, x) in eig.iter().zip(expect) {
            assert!((e - x).abs() < 1e-6, "eigenvalues {eig:?}");
        }
    }
}
