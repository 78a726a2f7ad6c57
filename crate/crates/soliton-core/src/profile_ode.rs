//! Profile ODE system, degenerate boundary data, and the Taylor jet at r = 0.
//!
//! The second-order system (see crate docs) is singular at the axis: for
//! S¹×ℝ³ the factor `b` vanishes like `r` (with `b'(0) = 1`), for S²×ℝ²
//! the factor `a` does.  All terms that divide by the vanishing factor have
//! numerators vanishing at the same rate, so the solution is analytic and a
//! power-series jet both proves the limits and starts the integration.
//!
//! The jet coefficients are *not* hand-derived: `boundary_jet` runs an
//! order-matching engine over truncated power series.  The coefficient
//! equations are triangular in parity *stages*, not in single orders — at
//! stage m the triple (even-factor coeff m, potential coeff m, odd-factor
//! coeff m+1) is mutually coupled but affine, so one probe of the series
//! pipeline plus a 3×3 solve pins it exactly.

use crate::{Result, SolitonError};
use serde::{Deserialize, Serialize};

/// Which 4-manifold the profile lives on; fixes which factor collapses at
/// the singular orbit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Topology {
    /// Collapsing S² factor at r = 0: a(0)=a₀>0, a'(0)=0, b(0)=0, b'(0)=1.
    S1xR3,
    /// Collapsing S¹ factor at r = 0: a(0)=0, a'(0)=1, b(0)=b₀>0, b'(0)=0.
    S2xR2,
}

/// The two shooting parameters: size of the non-collapsed orbit at r = 0
/// and f₀ = f''(0) ≤ 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialConditions {
    pub topology: Topology,
    /// a₀ for S1xR3, b₀ for S2xR2; strictly positive.
    pub orbit_size: f64,
    /// f''(0).  Strictly negative for soliton runs; 0 is the Einstein
    /// reference (hyperbolic space) and is accepted only where documented.
    pub f0: f64,
}

impl InitialConditions {
    pub fn new(topology: Topology, orbit_size: f64, f0: f64) -> Result<Self> {
        if !(orbit_size > 0.0) || !orbit_size.is_finite() {
            return Err(SolitonError::InvalidParameters(format!(
                "orbit_size must be positive and finite, got {orbit_size}"
            )));
        }
        if !(f0 <= 0.0) {
            return Err(SolitonError::InvalidParameters(format!(
                "f0 = f''(0) must be <= 0, got {f0}"
            )));
        }
        Ok(Self { topology, orbit_size, f0 })
    }
}

/// Phase point of the first-order system: (a, a', b, b', f, f') at radius r.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileState {
    pub r: f64,
    pub a: f64,
    pub da: f64,
    pub b: f64,
    pub db: f64,
    pub f: f64,
    pub df: f64,
}

impl ProfileState {
    pub(crate) fn from_vec(r: f64, y: &[f64; 6]) -> Self {
        Self { r, a: y[0], da: y[1], b: y[2], db: y[3], f: y[4], df: y[5] }
    }

    /// Phase vector (a, a', b, b', f, f') without the radius.
    pub fn to_array(&self) -> [f64; 6] {
        [self.a, self.da, self.b, self.db, self.f, self.df]
    }
}

/// First derivatives of the phase vector: (a', a'', b', b'', f', f'').
///
/// Substitution order matters for the third slot: f'' is defined through
/// the *just-computed* a'' and b'', so the three returned second
/// derivatives always satisfy the trace relation identically.
pub fn rhs(state: &ProfileState) -> Result<[f64; 6]> {
    let ProfileState { r, a, da, b, db, f: _, df } = *state;
    if !(r > 0.0) || !(a > 0.0) || !(b > 0.0) {
        return Err(SolitonError::DegeneratePoint { r });
    }
    let dda = -2.0 * da * db / b + da * df + a;
    let ddb = (1.0 - db * db) / b - da * db / a + db * df + b;
    let ddf = dda / a + 2.0 * ddb / b - 1.0;
    Ok([da, dda, db, ddb, df, ddf])
}

// --- truncated power-series algebra ----------------------------------------
//
// Coefficient lists x[0..=n] represent Σ x_k r^k.  Division requires a unit
// constant term; `shift` is division by r and *drops* the constant slot, so
// it is only applied to series with an exact structural zero there (this is
// precisely where the L'Hôpital limits of the degenerate terms live).

fn smul(x: &[f64], y: &[f64], n: usize) -> Vec<f64> {
    (0..=n)
        .map(|k| (0..=k.min(x.len() - 1)).filter(|i| k - i < y.len()).map(|i| x[i] * y[k - i]).sum())
        .collect()
}

fn sdiv(x: &[f64], y: &[f64], n: usize) -> Vec<f64> {
    debug_assert!(y[0] != 0.0);
    let mut z: Vec<f64> = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let mut acc = if k < x.len() { x[k] } else { 0.0 };
        for (i, zi) in z.iter().enumerate() {
            if k - i < y.len() {
                acc -= zi * y[k - i];
            }
        }
        z.push(acc / y[0]);
    }
    z
}

fn shift(x: &[f64]) -> Vec<f64> {
    let mut z: Vec<f64> = x[1..].to_vec();
    z.push(0.0);
    z
}

fn sdif(x: &[f64]) -> Vec<f64> {
    let mut z: Vec<f64> = (1..x.len()).map(|k| k as f64 * x[k]).collect();
    z.push(0.0);
    z
}

/// Series of (a'', b'', f'') to index n from jet coefficients, with every
/// degenerate division resolved by shifting against the unit series b/r
/// (S1xR3) or a/r (S2xR2).  Building f'' to index n reads a'' and b'' one
/// index further, hence the internal depth m = n + 2.
fn second_derivs(
    topology: Topology,
    al: &[f64],
    be: &[f64],
    ph: &[f64],
    n: usize,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let m = n + 2;
    let (da, db, df) = (sdif(al), sdif(be), sdif(ph));
    let dadb = smul(&da, &db, m);
    let dadf = smul(&da, &df, m);
    let dbdf = smul(&db, &df, m);
    let mut one_m_db2 = smul(&db, &db, m);
    for c in one_m_db2.iter_mut() {
        *c = -*c;
    }
    one_m_db2[0] += 1.0;

    let add3 = |u: &[f64], v: &[f64], w: &[f64], scale_u: f64| -> Vec<f64> {
        u.iter().zip(v).zip(w).map(|((u, v), w)| scale_u * u + v + w).collect()
    };

    let at = |x: &[f64], k: usize| if k < x.len() { x[k] } else { 0.0 };

    match topology {
        Topology::S1xR3 => {
            let be_s = shift(be); // b/r, constant term b'(0) = 1
            let dda = add3(&sdiv(&shift(&dadb), &be_s, m), &dadf, al, -2.0);
            let t1 = sdiv(&shift(&one_m_db2), &be_s, m);
            let t2 = sdiv(&dadb, al, m);
            let ddb: Vec<f64> =
                (0..=m).map(|k| t1[k] - t2[k] + dbdf[k] + at(be, k)).collect();
            let u = sdiv(&dda, al, n);
            let v = sdiv(&shift(&ddb), &be_s, n);
            let ddf: Vec<f64> =
                (0..=n).map(|k| u[k] + 2.0 * v[k] - if k == 0 { 1.0 } else { 0.0 }).collect();
            (dda, ddb, ddf)
        }
        Topology::S2xR2 => {
            let al_s = shift(al); // a/r, constant term a'(0) = 1
            let dda = add3(&sdiv(&dadb, be, m), &dadf, al, -2.0);
            let t1 = sdiv(&one_m_db2, be, m);
            let t2 = sdiv(&shift(&dadb), &al_s, m);
            let ddb: Vec<f64> =
                (0..=m).map(|k| t1[k] - t2[k] + dbdf[k] + at(be, k)).collect();
            let u = sdiv(&shift(&dda), &al_s, n);
            let v = sdiv(&ddb, be, n);
            let ddf: Vec<f64> =
                (0..=n).map(|k| u[k] + 2.0 * v[k] - if k == 0 { 1.0 } else { 0.0 }).collect();
            (dda, ddb, ddf)
        }
    }
}

/// Taylor jet of (a, b, f) at r = 0 with the parity structure forced by
/// smoothness at the singular orbit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesJet {
    pub ic: InitialConditions,
    /// Highest order matched against the equations; residual after
    /// substitution is O(r^{order-1}).
    pub order: usize,
    /// Coefficient lists; the odd-parity factor carries one extra slot.
    pub a_coeff: Vec<f64>,
    pub b_coeff: Vec<f64>,
    pub f_coeff: Vec<f64>,
    /// Largest radius the jet is trusted at (handoff radius).
    pub r_series_max: f64,
}

/// Default trust radius of the jet; the handoff point to the stepper.
pub const R_SERIES_MAX_DEFAULT: f64 = 1e-3;

/// Default jet order (three matched stages per parity class).
pub const SERIES_ORDER_DEFAULT: usize = 6;

/// Solve the coefficient equations stage by stage.
///
/// Stage m determines (x_even, x_f, x_odd) = e.g. for S1xR3 the triple
/// (α_m, φ_m, β_{m+1}).  The stage residual is affine in the unknowns, so
/// it is reconstructed from four pipeline probes and solved directly; a
/// final probe asserts the residual actually vanished, which would catch
/// any structural error in the series pipeline immediately.  At m = 2 the
/// potential slot is pinned by φ₂ = f0/2 and the f-equation at order 0 must
/// hold automatically (it is asserted, not solved).
pub fn boundary_jet(ic: &InitialConditions, order: usize) -> Result<SeriesJet> {
    if ic.f0 > 0.0 || ic.orbit_size <= 0.0 {
        return Err(SolitonError::InvalidParameters(format!(
            "jet needs orbit_size > 0 and f0 <= 0, got ({}, {})",
            ic.orbit_size, ic.f0
        )));
    }
    if order < 3 {
        return Err(SolitonError::InvalidParameters(format!("jet order must be >= 3, got {order}")));
    }
    let top_even = order - order % 2;
    let len = top_even + 2;
    let mut al = vec![0.0; len];
    let mut be = vec![0.0; len];
    let mut ph = vec![0.0; len];
    match ic.topology {
        Topology::S1xR3 => {
            al[0] = ic.orbit_size;
            be[1] = 1.0;
        }
        Topology::S2xR2 => {
            al[1] = 1.0;
            be[0] = ic.orbit_size;
        }
    }
    ph[2] = ic.f0 / 2.0;

    for m in (2..=top_even).step_by(2) {
        let solve_f = m >= 4;
        // residual of the order-matching equations as a function of the
        // three stage unknowns
        let residual = |xe: f64, xf: f64, xo: f64,
                        al: &mut [f64], be: &mut [f64], ph: &mut [f64]| -> [f64; 3] {
            match ic.topology {
                Topology::S1xR3 => {
                    al[m] = xe;
                    be[m + 1] = xo;
                }
                Topology::S2xR2 => {
                    be[m] = xe;
                    al[m + 1] = xo;
                }
            }
            if solve_f {
                ph[m] = xf;
            }
            let (dda, ddb, ddf) = second_derivs(ic.topology, al, be, ph, m - 1);
            let (ev, od) = match ic.topology {
                Topology::S1xR3 => (dda[m - 2], ddb[m - 1]),
                Topology::S2xR2 => (ddb[m - 2], dda[m - 1]),
            };
            let mm = (m * (m - 1)) as f64;
            let mp = ((m + 1) * m) as f64;
            [mm * xe - ev, mp * xo - od, mm * xf - ddf[m - 2]]
        };

        let r0 = residual(0.0, 0.0, 0.0, &mut al, &mut be, &mut ph);
        let ce = residual(1.0, 0.0, 0.0, &mut al, &mut be, &mut ph);
        let cf = residual(0.0, 1.0, 0.0, &mut al, &mut be, &mut ph);
        let co = residual(0.0, 0.0, 1.0, &mut al, &mut be, &mut ph);
        let col = |c: [f64; 3]| [c[0] - r0[0], c[1] - r0[1], c[2] - r0[2]];
        let (ce, cf, co) = (col(ce), col(cf), col(co));

        let x = if solve_f {
            solve3([[ce[0], cf[0], co[0]], [ce[1], cf[1], co[1]], [ce[2], cf[2], co[2]]],
                   [-r0[0], -r0[1], -r0[2]])
        } else {
            // φ₂ already pinned: 2×2 in (x_even, x_odd)
            let d = ce[0] * co[1] - co[0] * ce[1];
            let xe = (-r0[0] * co[1] + co[0] * r0[1]) / d;
            let xo = (-ce[0] * r0[1] + r0[0] * ce[1]) / d;
            [xe, ic.f0 / 2.0, xo]
        };

        let check = residual(x[0], x[1], x[2], &mut al, &mut be, &mut ph);
        let scale =
            1.0 + ic.f0.abs() + ic.orbit_size + 1.0 / ic.orbit_size + x.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        let tol = 1e-7 * scale * scale;
        if check.iter().take(if solve_f { 3 } else { 2 }).any(|c| c.abs() > tol) {
            // affine structure of the stage failed — a pipeline bug, never
            // a property of valid inputs
            panic!("series stage {m} residual {check:?} exceeds {tol:.2e} for {ic:?}");
        }
        if !solve_f && check[2].abs() > tol {
            panic!("order-0 potential equation inconsistent: {:.3e} for {ic:?}", check[2]);
        }
    }

    Ok(SeriesJet {
        ic: *ic,
        order,
        a_coeff: al,
        b_coeff: be,
        f_coeff: ph,
        r_series_max: R_SERIES_MAX_DEFAULT,
    })
}

fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> [f64; 3] {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&m);
    let mut x = [0.0; 3];
    for j in 0..3 {
        let mut mj = m;
        for i in 0..3 {
            mj[i][j] = b[i];
        }
        x[j] = det(&mj) / d;
    }
    x
}

impl SeriesJet {
    /// Horner evaluation of the three series and their derivatives.
    pub fn eval(&self, r: f64) -> Result<ProfileState> {
        if !(0.0..=self.r_series_max).contains(&r) {
            return Err(SolitonError::OutOfRange { r, r_series_max: self.r_series_max });
        }
        let horner = |c: &[f64]| -> (f64, f64) {
            let mut v = 0.0;
            let mut d = 0.0;
            for (k, &ck) in c.iter().enumerate().rev() {
                v = v * r + ck;
                if k > 0 {
                    d = d * r + k as f64 * ck;
                }
            }
            (v, d)
        };
        let (a, da) = horner(&self.a_coeff);
        let (b, db) = horner(&self.b_coeff);
        let (f, df) = horner(&self.f_coeff);
        Ok(ProfileState { r, a, da, b, db, f, df })
    }
}

/// Free-function form of [`SeriesJet::eval`].
pub fn jet_eval(jet: &SeriesJet, r: f64) -> Result<ProfileState> {
    jet.eval(r)
}

// --- transformed S2xR2 system (independent oracle) --------------------------

/// P(u, ρ) of the regular-singular form ρ·du/dρ = P(u, ρ) obtained from the
/// S²×ℝ² profile equations by taking ρ = a² as the independent variable,
/// with state (F, h, b, B) = (df/dρ, (a')², b, db/dρ).  P vanishes at the
/// boundary point (F, h, b, B)(0) = (f0/2, 1, b₀, (b₀ + 1/b₀)/4).
pub fn transformed_p_s2r2(state: &[f64; 4], rho: f64) -> Result<[f64; 4]> {
    let [ff, h, b, bb] = *state;
    if !(h > 0.0) || !(b > 0.0) {
        return Err(SolitonError::DegeneratePoint { r: rho });
    }
    let p1 = (1.0 + b * b
        - 4.0 * bb * bb * h * rho
        - b * b * ff * (1.0 + 2.0 * ff * h) * rho
        + 4.0 * b * bb * h * (2.0 * ff * rho - 1.0))
        / (2.0 * b * b * h);
    let p2 = -4.0 * h * rho * bb / b + 2.0 * h * rho * ff + rho;
    let p3 = bb * rho;
    let p4 = 1.0 / (4.0 * h * b) - bb + rho * bb * bb / b - rho * bb / (2.0 * h) + b / (4.0 * h);
    Ok([p1, p2, p3, p4])
}

/// du/dρ = P(u, ρ)/ρ for ρ > 0; the startup at ρ = 0 uses the linearized
/// slope instead (see the cross-check tests).
pub fn rhs_transformed_s2r2(state: &[f64; 4], rho: f64) -> Result<[f64; 4]> {
    if !(rho > 0.0) {
        return Err(SolitonError::DegeneratePoint { r: rho });
    }
    let p = transformed_p_s2r2(state, rho)?;
    Ok([p[0] / rho, p[1] / rho, p[2] / rho, p[3] / rho])
}

/// Boundary state of the transformed system for given (b₀, f0).
pub fn transformed_boundary_s2r2(b0: f64, f0: f64) -> [f64; 4] {
    [f0 / 2.0, 1.0, b0, 0.25 * (b0 + 1.0 / b0)]
}
