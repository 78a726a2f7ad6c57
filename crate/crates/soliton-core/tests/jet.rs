//! Boundary jet: coefficient tables pinned from an independent
//! implementation of the stage-by-stage solve, closed-form low-order
//! coefficients, parity structure, and equation residuals at the handoff.

use soliton_core::profile_ode::{boundary_jet, rhs, InitialConditions, Topology};
use soliton_core::SolitonError;

fn ic(t: Topology, orbit: f64, f0: f64) -> InitialConditions {
    InitialConditions::new(t, orbit, f0).unwrap()
}

fn assert_coeffs(actual: &[f64], expected: &[f64], label: &str) {
    assert_eq!(actual.len(), expected.len(), "{label}: length");
    for (k, (&a, &e)) in actual.iter().zip(expected).enumerate() {
        let tol = 1e-13 * (1.0 + e.abs());
        assert!(
            (a - e).abs() <= tol,
            "{label}[{k}]: got {a:.17e}, pinned {e:.17e}"
        );
    }
}

#[test]
fn pinned_coefficients_s1r3() {
    let jet = boundary_jet(&ic(Topology::S1xR3, 1.0, -1.0), 8).unwrap();
    assert_coeffs(
        &jet.a_coeff,
        &[
            1.0,
            0.0,
            0.16666666666666666,
            0.0,
            -0.006481481481481481,
            0.0,
            0.0003336272780717225,
            0.0,
            -1.8422286610117296e-05,
            0.0,
        ],
        "a",
    );
    assert_coeffs(
        &jet.b_coeff,
        &[
            0.0,
            1.0,
            0.0,
            -0.027777777777777776,
            0.0,
            0.006898148148148148,
            0.0,
            -0.0014257107163853195,
            0.0,
            0.00027853459556547816,
        ],
        "b",
    );
    assert_coeffs(
        &jet.f_coeff,
        &[
            0.0,
            0.0,
            -0.5,
            0.0,
            0.011111111111111112,
            0.0,
            -0.0025220458553791886,
            0.0,
            0.000482111363063744,
            0.0,
        ],
        "f",
    );

    let jet = boundary_jet(&ic(Topology::S1xR3, 2.0, -0.5), 8).unwrap();
    assert_coeffs(
        &jet.a_coeff,
        &[
            2.0,
            0.0,
            0.3333333333333333,
            0.0,
            -0.001851851851851852,
            0.0,
            -0.00022339800117577896,
            0.0,
            1.3913384283754654e-05,
            0.0,
        ],
        "a",
    );
    assert_coeffs(
        &jet.b_coeff,
        &[
            0.0,
            1.0,
            0.0,
            0.013888888888888888,
            0.0,
            0.0008912037037037037,
            0.0,
            -0.00022971322016460905,
            0.0,
            3.36948243356985e-05,
        ],
        "b",
    );
    assert_coeffs(
        &jet.f_coeff,
        &[
            0.0,
            0.0,
            -0.25,
            0.0,
            -0.002777777777777778,
            0.0,
            -0.00039462081128747794,
            0.0,
            7.423941798941799e-05,
            0.0,
        ],
        "f",
    );
}

#[test]
fn pinned_coefficients_s2r2() {
    let jet = boundary_jet(&ic(Topology::S2xR2, 1.0, -1.0), 8).unwrap();
    assert_coeffs(
        &jet.a_coeff,
        &[
            0.0,
            1.0,
            0.0,
            -0.3333333333333333,
            0.0,
            0.23333333333333334,
            0.0,
            -0.16587301587301587,
            0.0,
            0.12181437389770723,
        ],
        "a",
    );
    assert_coeffs(
        &jet.b_coeff,
        &[
            1.0,
            0.0,
            0.5,
            0.0,
            -0.08333333333333333,
            0.0,
            0.03194444444444444,
            0.0,
            -0.015959821428571427,
            0.0,
        ],
        "b",
    );
    assert_coeffs(
        &jet.f_coeff,
        &[
            0.0,
            0.0,
            -0.5,
            0.0,
            0.08333333333333333,
            0.0,
            -0.05277777777777778,
            0.0,
            0.033754960317460315,
            0.0,
        ],
        "f",
    );

    let jet = boundary_jet(&ic(Topology::S2xR2, 0.5, -2.0), 8).unwrap();
    assert_coeffs(
        &jet.a_coeff,
        &[
            0.0,
            1.0,
            0.0,
            -1.0,
            0.0,
            1.6625,
            0.0,
            -2.9785714285714286,
            0.0,
            5.582483190035274,
        ],
        "a",
    );
    assert_coeffs(
        &jet.b_coeff,
        &[
            0.5,
            0.0,
            0.625,
            0.0,
            -0.3125,
            0.0,
            0.3029513888888889,
            0.0,
            -0.3840215773809524,
            0.0,
        ],
        "b",
    );
    assert_coeffs(
        &jet.f_coeff,
        &[
            0.0,
            0.0,
            -1.0,
            0.0,
            0.5,
            0.0,
            -0.7277777777777777,
            0.0,
            1.1786706349206348,
            0.0,
        ],
        "f",
    );
}

/// Low-order coefficients in closed form, checked on a small parameter grid.
#[test]
fn closed_form_low_orders() {
    for &(a0, f0) in &[(1.0, -1.0), (2.0, -0.5), (0.5, -3.0), (1.3, -0.1)] {
        let jet = boundary_jet(&ic(Topology::S1xR3, a0, f0), 6).unwrap();
        let rel = |x: f64, y: f64| (x - y).abs() / (1.0 + y.abs());
        assert!(rel(jet.a_coeff[2], a0 / 6.0) < 1e-14);
        assert!(rel(jet.a_coeff[4], a0 * (12.0 * f0 + 5.0) / 1080.0) < 1e-14);
        assert!(rel(jet.b_coeff[3], f0 / 12.0 + 1.0 / 18.0) < 1e-14);
        assert!(
            rel(
                jet.b_coeff[5],
                29.0 * f0 * f0 / 2400.0 + 11.0 * f0 / 1800.0 + 1.0 / 1080.0
            ) < 1e-14
        );
        assert!(rel(jet.f_coeff[2], f0 / 2.0) < 1e-14);
        assert!(rel(jet.f_coeff[4], f0 * (3.0 * f0 + 2.0) / 90.0) < 1e-14);
    }
    for &(b0, f0) in &[(1.0, -1.0), (0.5, -2.0), (2.0, -0.25)] {
        let jet = boundary_jet(&ic(Topology::S2xR2, b0, f0), 6).unwrap();
        let rel = |x: f64, y: f64| (x - y).abs() / (1.0 + y.abs());
        assert!(rel(jet.a_coeff[3], f0 / 6.0 - 1.0 / (6.0 * b0 * b0)) < 1e-14);
        assert!(rel(jet.b_coeff[2], (b0 * b0 + 1.0) / (4.0 * b0)) < 1e-14);
        assert!(
            rel(
                jet.b_coeff[4],
                (b0.powi(4) * f0 + b0 * b0 * f0 - b0 * b0 - 1.0) / (48.0 * b0.powi(3))
            ) < 1e-14
        );
        assert!(rel(jet.f_coeff[4], f0 * f0 / 24.0 - f0 / (24.0 * b0 * b0)) < 1e-14);
    }
}

/// a even / b odd / f even on S¹×ℝ³; mirrored on S²×ℝ².
#[test]
fn parity_structure() {
    let jet = boundary_jet(&ic(Topology::S1xR3, 1.7, -0.4), 8).unwrap();
    for k in (1..jet.a_coeff.len()).step_by(2) {
        assert_eq!(jet.a_coeff[k], 0.0, "a odd coefficient {k}");
        assert_eq!(jet.f_coeff[k], 0.0, "f odd coefficient {k}");
    }
    for k in (0..jet.b_coeff.len()).step_by(2) {
        assert_eq!(jet.b_coeff[k], 0.0, "b even coefficient {k}");
    }
    let jet = boundary_jet(&ic(Topology::S2xR2, 0.8, -1.6), 8).unwrap();
    for k in (0..jet.a_coeff.len()).step_by(2) {
        assert_eq!(jet.a_coeff[k], 0.0, "a even coefficient {k}");
    }
    for k in (1..jet.b_coeff.len()).step_by(2) {
        assert_eq!(jet.b_coeff[k], 0.0, "b odd coefficient {k}");
        assert_eq!(jet.f_coeff[k], 0.0, "f odd coefficient {k}");
    }
}

/// The truncated series satisfies the equations of motion at the handoff:
/// second derivatives of the polynomials match the right-hand sides up to
/// truncation error O(r^order).
#[test]
fn equation_residual_at_handoff() {
    let dd = |c: &[f64], r: f64| -> f64 {
        (2..c.len()).map(|k| (k * (k - 1)) as f64 * c[k] * r.powi(k as i32 - 2)).sum()
    };
    for (t, orbit, f0) in [
        (Topology::S1xR3, 1.0, -1.0),
        (Topology::S1xR3, 0.5, -3.0),
        (Topology::S2xR2, 1.0, -1.0),
        (Topology::S2xR2, 2.0, -0.1),
    ] {
        let jet = boundary_jet(&ic(t, orbit, f0), 8).unwrap();
        let r = 8e-4;
        let st = jet.eval(r).unwrap();
        let rhs_v = rhs(&st).unwrap();
        // the f'' right-hand side loses ~1e-16/r² to cancellation near the
        // axis (roundoff of 1 − b'² divided by b twice); tolerances sit just
        // above that floor, far below any O(1) structural error
        assert!((dd(&jet.a_coeff, r) - rhs_v[1]).abs() < 1e-12, "a'' residual");
        assert!((dd(&jet.b_coeff, r) - rhs_v[3]).abs() < 1e-12, "b'' residual");
        assert!((dd(&jet.f_coeff, r) - rhs_v[5]).abs() < 1e-9, "f'' residual");
    }
}

#[test]
fn rejects_bad_parameters() {
    assert!(matches!(
        InitialConditions::new(Topology::S1xR3, 0.0, -1.0),
        Err(SolitonError::InvalidParameters(_))
    ));
    assert!(matches!(
        InitialConditions::new(Topology::S1xR3, -1.0, -1.0),
        Err(SolitonError::InvalidParameters(_))
    ));
    assert!(matches!(
        InitialConditions::new(Topology::S2xR2, 1.0, 0.25),
        Err(SolitonError::InvalidParameters(_))
    ));
    assert!(InitialConditions::new(Topology::S1xR3, 1.0, 0.0).is_ok());
}

#[test]
fn eval_respects_validity_radius() {
    let jet = boundary_jet(&ic(Topology::S1xR3, 1.0, -1.0), 6).unwrap();
    assert!(jet.eval(jet.r_series_max).is_ok());
    assert!(matches!(
        jet.eval(2.0 * jet.r_series_max),
        Err(SolitonError::OutOfRange { .. })
    ));
}
