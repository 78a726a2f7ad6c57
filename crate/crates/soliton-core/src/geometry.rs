//! Curvature of the doubly-warped metric dr² + a(r)²dθ² + b(r)²g_{S²}.
//!
//! In the orthonormal frame {∂r, a⁻¹∂θ, b⁻¹e₂, b⁻¹e₃} the curvature
//! operator is diagonal with four distinct sectional curvatures; everything
//! here (Ricci, scalar, the soliton and Bianchi identities) is assembled
//! from those.  Second derivatives are always taken from the equations of
//! motion, so the diagonal soliton identity and the trace identity vanish
//! algebraically — their residuals measure floating-point consistency, not
//! integration error.  The quantity that genuinely monitors the trajectory
//! is the first-order Bianchi integral R + |∇f|² + 2f = const.

use crate::profile_ode::{InitialConditions, ProfileState, SeriesJet, Topology};
use crate::{Result, SolitonError};
use serde::{Deserialize, Serialize};

/// Sectional curvatures K(e_i ∧ e_j) in the orthonormal frame, indexed
/// 1 = ∂r, 2 = circle, 3,4 = sphere.  The pairs (13,14) and (23,24) are
/// equal by symmetry and stored once each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureFrame {
    /// K(∂r ∧ circle) = −a''/a
    pub rm1221: f64,
    /// K(∂r ∧ sphere) = −b''/b  (doubled in traces)
    pub rm1331: f64,
    /// K(circle ∧ sphere) = −a'b'/(ab)  (doubled in traces)
    pub rm2332: f64,
    /// K(sphere ∧ sphere) = (1 − b'²)/b²
    pub rm3443: f64,
    pub scalar: f64,
}

impl CurvatureFrame {
    /// The six frame planes, duplicates included.
    pub fn components(&self) -> [f64; 6] {
        [self.rm1221, self.rm1331, self.rm1331, self.rm2332, self.rm2332, self.rm3443]
    }

    pub fn max_abs_sectional(&self) -> f64 {
        self.components().iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }

    fn close(rm1221: f64, rm1331: f64, rm2332: f64, rm3443: f64) -> Self {
        let scalar = 2.0 * (rm1221 + 2.0 * rm1331 + 2.0 * rm2332 + rm3443);
        Self { rm1221, rm1331, rm2332, rm3443, scalar }
    }
}

/// Frame curvature at a regular point (r, a, b > 0).  `second` is the
/// derivative vector from `profile_ode::rhs` at the same state.
pub fn curvature(state: &ProfileState, second: &[f64; 6]) -> Result<CurvatureFrame> {
    if !(state.r > 0.0 && state.a > 0.0 && state.b > 0.0) {
        return Err(SolitonError::DegeneratePoint { r: state.r });
    }
    let (dda, ddb) = (second[1], second[3]);
    Ok(CurvatureFrame::close(
        -dda / state.a,
        -ddb / state.b,
        -state.da * state.db / (state.a * state.b),
        (1.0 - state.db * state.db) / (state.b * state.b),
    ))
}

/// Curvature at the degenerate orbit, where every component is a 0/0 limit.
/// Each limit is a ratio of leading jet coefficients, so this is exact up to
/// the jet solve itself — no differencing.
pub fn origin_frame(jet: &SeriesJet) -> CurvatureFrame {
    let (a, b) = (&jet.a_coeff, &jet.b_coeff);
    match jet.ic.topology {
        // a even (a₀ + α₂r² + …), b odd (r + β₃r³ + …):
        //   −a''/a → −2α₂/a₀,  −b''/b and (1−b'²)/b² → −6β₃,
        //   −a'b'/(ab) → −2α₂/a₀.
        Topology::S1xR3 => {
            let k_axis = -2.0 * a[2] / a[0];
            let k_sphere = -6.0 * b[3];
            CurvatureFrame::close(k_axis, k_sphere, k_axis, k_sphere)
        }
        // a odd (r + α₃r³ + …), b even (b₀ + β₂r² + …):
        //   −a''/a → −6α₃,  −b''/b and −a'b'/(ab) → −2β₂/b₀,
        //   (1−b'²)/b² → 1/b₀².
        Topology::S2xR2 => {
            let k_axis = -6.0 * a[3];
            let k_mixed = -2.0 * b[2] / b[0];
            CurvatureFrame::close(k_axis, k_mixed, k_mixed, 1.0 / (b[0] * b[0]))
        }
    }
}

/// Scalar curvature at r = 0; closed forms are −3f₀ − 4 on S¹×ℝ³ and
/// −2f₀ − 4 on S²×ℝ² and the jet reproduces them to roundoff.
pub fn scalar_at_origin(jet: &SeriesJet) -> f64 {
    origin_frame(jet).scalar
}

/// The conserved value R(0) = R + |∇f|² + 2f for given initial data.
pub fn bianchi_constant(ic: &InitialConditions) -> f64 {
    match ic.topology {
        Topology::S1xR3 => -3.0 * ic.f0 - 4.0,
        Topology::S2xR2 => -2.0 * ic.f0 - 4.0,
    }
}

/// R + Δf + 4.  Zero by construction when `frame` came from `curvature`
/// with equations-of-motion second derivatives; kept as a consistency probe.
pub fn trace_residual(state: &ProfileState, frame: &CurvatureFrame) -> f64 {
    // f'' recovered from the same frame data the trace uses
    let ddf = -frame.rm1221 - 2.0 * frame.rm1331 - 1.0;
    let lap = ddf + (state.da / state.a + 2.0 * state.db / state.b) * state.df;
    frame.scalar + lap + 4.0
}

/// Drift of the first integral R + |∇f|² + 2f away from its boundary value.
/// This is the genuine accuracy monitor: it is conserved by the flow, not by
/// construction.
pub fn bianchi_residual(state: &ProfileState, frame: &CurvatureFrame, ic: &InitialConditions) -> f64 {
    frame.scalar + state.df * state.df + 2.0 * state.f - bianchi_constant(ic)
}

/// max over the three frame directions of |Ric(e,e) + Hess f(e,e) + 1|.
/// Algebraically zero off the axis (the profile system *is* this equation);
/// measures cancellation error only.
pub fn soliton_residual(state: &ProfileState, second: &[f64; 6]) -> Result<f64> {
    if !(state.r > 0.0 && state.a > 0.0 && state.b > 0.0) {
        return Err(SolitonError::DegeneratePoint { r: state.r });
    }
    let (a, da, b, db, df) = (state.a, state.da, state.b, state.db, state.df);
    let (dda, ddb, ddf) = (second[1], second[3], second[5]);
    let mixed = da * db / (a * b);
    let radial = -dda / a - 2.0 * ddb / b + ddf + 1.0;
    let circle = -dda / a - 2.0 * mixed + da * df / a + 1.0;
    let sphere = -ddb / b - mixed + (1.0 - db * db) / (b * b) + db * df / b + 1.0;
    Ok(radial.abs().max(circle.abs()).max(sphere.abs()))
}
