//! Asymptotic cone data: vertex offset K, cone slopes, and the shooting map.
//!
//! Every trajectory with f₀ < 0 opens up linearly, a ~ a'∞·(r−K),
//! b ~ b'∞·(r−K), and f' + (r−K) → 0.  The latter makes K̂(r) = f'(r) + r a
//! direct estimator of the vertex; slopes follow from a'(r) with
//! a(r)/(r−K) as an independent cross-estimator.  The map
//! F(ic) = (a'∞, b'∞) assembled here is the object whose preimages the
//! degree module counts.

use crate::integrator::{integrate, IntegrationParams, SolitonSolution};
use crate::profile_ode::{rhs, InitialConditions, ProfileState};
use crate::{Result, SolitonError};
use serde::{Deserialize, Serialize};

/// Cone opening slopes with a combined error estimate: estimator
/// disagreement plus half-radius drift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeSlopes {
    pub a_slope: f64,
    pub b_slope: f64,
    pub err_estimate: f64,
}

/// Result of a converged shooting-map evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeData {
    pub k: f64,
    pub slopes: ConeSlopes,
    /// Radius the converged evaluation actually integrated to.
    pub r_used: f64,
}

/// Vertex estimate K̂ = f'(r) + r at the outermost sample, gated on
/// half-radius agreement.
#[allow(non_snake_case)]
pub fn estimate_K(solution: &SolitonSolution) -> Result<f64> {
    let last = solution.last();
    let k_full = last.df + last.r;
    let half = solution.sample_near(last.r / 2.0);
    let k_half = half.df + half.r;
    let drift = (k_full - k_half).abs();
    if drift > 1e-4 {
        return Err(SolitonError::NotConverged { err_estimate: drift, r_max: last.r });
    }
    Ok(k_full)
}

/// Slopes from the outermost sample: primary a'(r), cross-checked against
/// a(r)/(r−K), with half-radius drift folded into the error estimate.
pub fn extract_slopes(solution: &SolitonSolution) -> Result<ConeSlopes> {
    let k = match solution.k {
        Some(k) => k,
        None => estimate_K(solution)?,
    };
    let last = solution.last();
    let half = solution.sample_near(last.r / 2.0);
    if last.r - k <= 0.0 {
        return Err(SolitonError::NotConverged { err_estimate: f64::INFINITY, r_max: last.r });
    }
    let est = |value: f64, deriv_full: f64, deriv_half: f64| -> (f64, f64) {
        let secondary = value / (last.r - k);
        let err = (deriv_full - secondary).abs() + (deriv_full - deriv_half).abs();
        (deriv_full, err)
    };
    let (a_slope, err_a) = est(last.a, last.da, half.da);
    let (b_slope, err_b) = est(last.b, last.db, half.db);
    let err_estimate = err_a.max(err_b);
    if err_estimate > 1e-4 {
        return Err(SolitonError::NotConverged { err_estimate, r_max: last.r });
    }
    Ok(ConeSlopes { a_slope, b_slope, err_estimate })
}

/// Integrate and fill in the cone fields; fails if either gate fails.
pub fn integrate_with_cone(
    ic: &InitialConditions,
    params: &IntegrationParams,
) -> Result<SolitonSolution> {
    let mut sol = integrate(ic, params)?;
    let k = estimate_K(&sol)?;
    sol.k = Some(k);
    let slopes = extract_slopes(&sol)?;
    sol.slopes = Some(slopes);
    Ok(sol)
}

/// Like `integrate_with_cone`, but when `params.r_max` is unset the range
/// doubles from 200 until both convergence gates pass (the slow regime,
/// |f₀| ~ 10⁻³, needs ~2400, capped at 6400).  An explicit `r_max` is
/// honored as a single attempt so callers control the cost/accuracy point
/// themselves.
pub fn converge_with_cone(
    ic: &InitialConditions,
    params: &IntegrationParams,
) -> Result<SolitonSolution> {
    if params.r_max.is_some() {
        return integrate_with_cone(ic, params);
    }
    let mut r_try = 200.0;
    loop {
        let attempt = IntegrationParams { r_max: Some(r_try), ..params.clone() };
        match integrate_with_cone(ic, &attempt) {
            Ok(sol) => return Ok(sol),
            Err(SolitonError::NotConverged { err_estimate, r_max }) => {
                if r_try >= 6400.0 {
                    return Err(SolitonError::NotConverged { err_estimate, r_max });
                }
                r_try *= 2.0;
            }
            Err(e) => return Err(e),
        }
    }
}

/// The shooting map F(ic) = (a'∞, b'∞), by `converge_with_cone`.
#[allow(non_snake_case)]
pub fn eval_F(ic: &InitialConditions, params: &IntegrationParams) -> Result<ConeData> {
    let sol = converge_with_cone(ic, params)?;
    Ok(ConeData { k: sol.k.unwrap(), slopes: sol.slopes.unwrap(), r_used: sol.last().r })
}

// --- ε-conicality -----------------------------------------------------------

/// Hermite interpolation of (a, b, f') over the stored samples, using the
/// exact derivatives the equations of motion provide at each node.
struct ProfileInterp<'a> {
    samples: &'a [ProfileState],
    ddf: Vec<f64>,
}

impl<'a> ProfileInterp<'a> {
    fn new(samples: &'a [ProfileState]) -> Result<Self> {
        let ddf = samples.iter().map(|s| rhs(s).map(|d| d[5])).collect::<Result<Vec<_>>>()?;
        Ok(Self { samples, ddf })
    }

    fn bracket(&self, r: f64) -> usize {
        let i = self
            .samples
            .partition_point(|s| s.r < r)
            .clamp(1, self.samples.len() - 1);
        i - 1
    }

    /// (a, b, f') at radius r ∈ [samples[0].r, samples[last].r].
    fn eval(&self, r: f64) -> (f64, f64, f64) {
        let i = self.bracket(r);
        let (p, q) = (&self.samples[i], &self.samples[i + 1]);
        let h = q.r - p.r;
        let t = ((r - p.r) / h).clamp(0.0, 1.0);
        let t2 = t * t;
        let (h00, h10) = (2.0 * t2 * t - 3.0 * t2 + 1.0, t2 * t - 2.0 * t2 + t);
        let (h01, h11) = (3.0 * t2 - 2.0 * t2 * t, t2 * t - t2);
        let herm = |v0: f64, d0: f64, v1: f64, d1: f64| {
            h00 * v0 + h10 * h * d0 + h01 * v1 + h11 * h * d1
        };
        (
            herm(p.a, p.da, q.a, q.da),
            herm(p.b, p.db, q.b, q.db),
            herm(p.df, self.ddf[i], q.df, self.ddf[i + 1]),
        )
    }
}

/// m = 0 conicality report: the radial reparameterization d(s) and the
/// metric gap against the cone ds² + (a'∞ s)²dθ² + (b'∞ s)² g_{S²}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonConicalityReport {
    pub epsilon: f64,
    pub k: f64,
    /// Anchor s* = r* − K at the outermost sample.
    pub s_star: f64,
    /// Smallest grid s beyond which the gap stays ≤ ε.
    pub s0: f64,
    /// (s, gap) pairs on the log grid, ascending in s.
    pub grid: Vec<(f64, f64)>,
}

/// Pull the metric back along the characteristic d'(s) = −f'(d(s))/s
/// (∇f = f'∂ᵣ, so this is the flow identifying cone and soliton radii) and
/// measure the worst relative gap among the three metric components.
pub fn epsilon_conicality(
    solution: &SolitonSolution,
    slopes: &ConeSlopes,
    epsilon: f64,
) -> Result<EpsilonConicalityReport> {
    if !(epsilon > 0.0) {
        return Err(SolitonError::InvalidParameters(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let k = match solution.k {
        Some(k) => k,
        None => estimate_K(solution)?,
    };
    let last = solution.last();
    let s_star = last.r - k;
    if s_star <= 0.0 {
        return Err(SolitonError::NeverConical { max_gap: f64::INFINITY });
    }
    let interp = ProfileInterp::new(&solution.samples)?;
    let r_floor = solution.samples[0].r;

    // Integrate d backwards from (s*, r*) over 3 decades (or until the
    // sampled range runs out), recording the gap on a 16-per-octave log grid.
    let s_min = (s_star / 8.0).max(1e-3);
    let n_grid = 1 + (16.0 * (s_star / s_min).log2()).ceil() as usize;
    let ratio = (s_min / s_star).powf(1.0 / (n_grid - 1) as f64);

    let dprime = |s: f64, d: f64| -> f64 {
        let (_, _, df) = interp.eval(d);
        -df / s
    };

    let mut grid = Vec::with_capacity(n_grid);
    let mut s = s_star;
    let mut d = last.r;
    for step in 0..n_grid {
        let slope = dprime(s, d);
        let gap = {
            let (a, b, _) = interp.eval(d);
            let ga = (a / (slopes.a_slope * s)).powi(2) - 1.0;
            let gb = (b / (slopes.b_slope * s)).powi(2) - 1.0;
            let gr = slope * slope - 1.0;
            ga.abs().max(gb.abs()).max(gr.abs())
        };
        grid.push((s, gap));
        if step + 1 == n_grid {
            break;
        }
        // one RK4 substep per grid interval (the flow is mild: d' ≈ 1)
        let s_next = s * ratio;
        let h = s_next - s;
        let k1 = dprime(s, d);
        let k2 = dprime(s + 0.5 * h, d + 0.5 * h * k1);
        let k3 = dprime(s + 0.5 * h, d + 0.5 * h * k2);
        let k4 = dprime(s_next, d + h * k3);
        d += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if d <= r_floor {
            break;
        }
        s = s_next;
    }
    grid.reverse(); // ascending s

    // smallest grid s0 with gap ≤ ε from there on out
    let mut s0 = None;
    let mut max_gap: f64 = 0.0;
    for &(s, gap) in grid.iter().rev() {
        max_gap = max_gap.max(gap);
        if gap <= epsilon {
            s0 = Some(s);
        } else {
            break;
        }
    }
    match s0 {
        Some(s0) => Ok(EpsilonConicalityReport { epsilon, k, s_star, s0, grid }),
        None => Err(SolitonError::NeverConical { max_gap }),
    }
}

/// sup over samples with r ≥ 10 of r²·max|Rm|.  Refused for Einstein runs,
/// where r²·|Rm| grows without bound by constant negative curvature.
pub fn decay_constant(solution: &SolitonSolution) -> Result<f64> {
    if solution.ic.f0 == 0.0 {
        return Err(SolitonError::InvalidParameters(
            "decay constant is a soliton quantity; the Einstein profile has r^2|Rm| ~ r^2/3"
                .into(),
        ));
    }
    let mut sup: Option<f64> = None;
    for s in &solution.samples {
        if s.r < 10.0 {
            continue;
        }
        let frame = crate::geometry::curvature(s, &rhs(s)?)?;
        let v = s.r * s.r * frame.max_abs_sectional();
        sup = Some(sup.map_or(v, |m: f64| m.max(v)));
    }
    sup.ok_or(SolitonError::NotReached { r_max: solution.last().r })
}
