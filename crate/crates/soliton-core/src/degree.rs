//! Degree certificates for the shooting map.
//!
//! Two mechanisms, numerically independent: signed preimage counts
//! (1D reduction for S¹×ℝ³, where the second component of F depends on f₀
//! alone and is strictly monotone) and boundary winding numbers of F − target
//! around parameter rectangles.  The S²×ℝ² degree-zero statement is
//! certified both by winding and by non-surjectivity: the b'∞ = 1 level set
//! has bounded first component, so doubling that bound exhibits a value with
//! no preimage.
//!
//! Orientation convention: parameter space (orbit_size, −f₀) is taken
//! right-handed.  Flipping it negates every orientation sign and every
//! winding number in lockstep; only the relative sign is meaningful.

use crate::cone_map::{eval_F, ConeSlopes};
use crate::integrator::IntegrationParams;
use crate::profile_ode::{InitialConditions, Topology};
use crate::{Result, SolitonError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Parameter rectangle in (orbit_size, −f₀), both coordinates positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub orbit_lo: f64,
    pub orbit_hi: f64,
    pub mf0_lo: f64,
    pub mf0_hi: f64,
}

impl SearchBox {
    pub fn new(orbit_lo: f64, orbit_hi: f64, mf0_lo: f64, mf0_hi: f64) -> Result<Self> {
        if !(0.0 < orbit_lo && orbit_lo <= orbit_hi && 0.0 < mf0_lo && mf0_lo <= mf0_hi) {
            return Err(SolitonError::InvalidParameters(format!(
                "search box must satisfy 0 < lo <= hi per axis, got \
                 orbit [{orbit_lo}, {orbit_hi}], -f0 [{mf0_lo}, {mf0_hi}]"
            )));
        }
        Ok(Self { orbit_lo, orbit_hi, mf0_lo, mf0_hi })
    }

    fn clamp(&self, p: [f64; 2]) -> [f64; 2] {
        [p[0].clamp(self.orbit_lo, self.orbit_hi), p[1].clamp(self.mf0_lo, self.mf0_hi)]
    }
}

fn ic_at(topology: Topology, p: [f64; 2]) -> Result<InitialConditions> {
    InitialConditions::new(topology, p[0], -p[1])
}

/// A located solution of F(p) = target.  `orientation` is sign(det J_F);
/// `None` marks a numerically singular Jacobian, which is excluded from
/// signed counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Preimage {
    pub ic: InitialConditions,
    pub value: (f64, f64),
    pub residual: f64,
    pub orientation: Option<i8>,
}

/// A target for the shooting map: full 2-vector, or the reduced scalar
/// (second component only) used by the S¹×ℝ³ sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DegreeTarget {
    Slopes(f64, f64),
    BSlope(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertificateKind {
    SignedCount,
    Winding,
    NonSurjectivity,
}

/// One bracketed crossing of the reduced sweep, with the local orientation
/// sign(−F₁') read off the bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub mf0: f64,
    pub a_slope: f64,
    pub sign: i8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSetPoint {
    pub b0: f64,
    pub mf0: f64,
    pub a_slope: f64,
}

/// Evidence bundle for one certificate.  Unused fields stay empty/None so a
/// single report type serializes uniformly across mechanisms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeReport {
    pub topology: Topology,
    pub target: DegreeTarget,
    pub certificate: CertificateKind,
    pub search_box: SearchBox,
    pub preimages: Vec<Preimage>,
    pub signed_count: Option<i32>,
    pub winding: Option<i32>,
    pub crossings: Vec<Crossing>,
    pub level_set: Vec<LevelSetPoint>,
    /// (coarse-grid max, fine-grid max) of a'∞ along the level set —
    /// agreement under refinement is the stability check.
    pub level_set_max_a_slope: Option<(f64, f64)>,
}

impl DegreeReport {
    fn new(
        topology: Topology,
        target: DegreeTarget,
        certificate: CertificateKind,
        search_box: SearchBox,
    ) -> Self {
        Self {
            topology,
            target,
            certificate,
            search_box,
            preimages: Vec::new(),
            signed_count: None,
            winding: None,
            crossings: Vec::new(),
            level_set: Vec::new(),
            level_set_max_a_slope: None,
        }
    }
}

// --- Newton inversion -------------------------------------------------------

struct NewtonOutcome {
    p: [f64; 2],
    value: (f64, f64),
    residual: f64,
    det: f64,
    det_scale: f64,
}

fn newton_from(
    start: [f64; 2],
    target: (f64, f64),
    topology: Topology,
    search_box: &SearchBox,
    params: &IntegrationParams,
) -> Option<NewtonOutcome> {
    let f = |p: [f64; 2]| -> Option<(f64, f64)> {
        let cd = eval_F(&ic_at(topology, p).ok()?, params).ok()?;
        Some((cd.slopes.a_slope, cd.slopes.b_slope))
    };
    let res_norm =
        |v: (f64, f64)| -> f64 { (v.0 - target.0).abs().max((v.1 - target.1).abs()) };

    let mut p = search_box.clamp(start);
    let mut value = f(p)?;
    let mut best = res_norm(value);
    let mut stall = 0usize;
    for _ in 0..25 {
        if best < 1e-4 {
            // converged: finish with the Jacobian at the root
            let (det, det_scale) = jacobian_det(&f, p)?;
            return Some(NewtonOutcome { p, value, residual: best, det, det_scale });
        }
        // central-difference Jacobian, step relative to each parameter
        let mut j = [[0.0f64; 2]; 2];
        for col in 0..2 {
            let h = 1e-3 * (1.0 + p[col].abs());
            let (mut pp, mut pm) = (p, p);
            pp[col] += h;
            pm[col] -= h;
            let (vp, vm) = (f(pp)?, f(pm)?);
            j[0][col] = (vp.0 - vm.0) / (2.0 * h);
            j[1][col] = (vp.1 - vm.1) / (2.0 * h);
        }
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 {
            return None;
        }
        let r = [value.0 - target.0, value.1 - target.1];
        let step = [
            -(j[1][1] * r[0] - j[0][1] * r[1]) / det,
            -(j[0][0] * r[1] - j[1][0] * r[0]) / det,
        ];
        // backtracking: first damping factor that improves the residual
        let mut advanced = false;
        for k in 0..5 {
            let lambda = 0.5f64.powi(k);
            let cand =
                search_box.clamp([p[0] + lambda * step[0], p[1] + lambda * step[1]]);
            if cand == p {
                continue;
            }
            if let Some(v) = f(cand) {
                if res_norm(v) < best {
                    p = cand;
                    value = v;
                    best = res_norm(v);
                    advanced = true;
                    break;
                }
            }
        }
        if !advanced {
            stall += 1;
            if stall >= 2 {
                return None; // pinned at the box edge or a local minimum
            }
        } else {
            stall = 0;
        }
    }
    None
}

fn jacobian_det(
    f: &dyn Fn([f64; 2]) -> Option<(f64, f64)>,
    p: [f64; 2],
) -> Option<(f64, f64)> {
    let mut j = [[0.0f64; 2]; 2];
    for col in 0..2 {
        let h = 1e-3 * (1.0 + p[col].abs());
        let (mut pp, mut pm) = (p, p);
        pp[col] += h;
        pm[col] -= h;
        let (vp, vm) = (f(pp)?, f(pm)?);
        j[0][col] = (vp.0 - vm.0) / (2.0 * h);
        j[1][col] = (vp.1 - vm.1) / (2.0 * h);
    }
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let scale = (j[0][0].abs() + j[0][1].abs()) * (j[1][0].abs() + j[1][1].abs());
    Some((det, scale))
}

/// Multistart damped Newton solve of F(p) = target over `search_box`.
/// Duplicates within 10⁻³ relative parameter distance are merged (smallest
/// residual wins).  No surviving root is an error by design: `NoneFound`
/// feeds the non-surjectivity certificate.
#[allow(non_snake_case)]
pub fn invert_F(
    target: &ConeSlopes,
    topology: Topology,
    search_box: &SearchBox,
    params: &IntegrationParams,
) -> Result<Vec<Preimage>> {
    if !(target.a_slope > 0.0 && target.b_slope > 0.0) {
        return Err(SolitonError::InvalidParameters(format!(
            "slope targets must be positive, got ({}, {})",
            target.a_slope, target.b_slope
        )));
    }
    let tgt = (target.a_slope, target.b_slope);
    // 3×3 multistart, log-spaced across the box
    let log_grid = |lo: f64, hi: f64| -> [f64; 3] {
        [lo, (lo * hi).sqrt(), hi]
    };
    let starts: Vec<[f64; 2]> = {
        let os = log_grid(search_box.orbit_lo, search_box.orbit_hi);
        let ss = log_grid(search_box.mf0_lo, search_box.mf0_hi);
        os.iter().flat_map(|&o| ss.iter().map(move |&s| [o, s])).collect()
    };
    let hits: Vec<NewtonOutcome> = starts
        .par_iter()
        .filter_map(|&p0| newton_from(p0, tgt, topology, search_box, params))
        .collect();

    let mut merged: Vec<NewtonOutcome> = Vec::new();
    for h in hits {
        let dup = merged.iter_mut().find(|m| {
            (m.p[0] - h.p[0]).abs() / (1.0 + m.p[0].abs()) < 1e-3
                && (m.p[1] - h.p[1]).abs() / (1.0 + m.p[1].abs()) < 1e-3
        });
        match dup {
            Some(m) if h.residual < m.residual => *m = h,
            Some(_) => {}
            None => merged.push(h),
        }
    }
    if merged.is_empty() {
        return Err(SolitonError::NoneFound);
    }
    merged.sort_by(|x, y| x.p[1].partial_cmp(&y.p[1]).unwrap());
    Ok(merged
        .into_iter()
        .map(|m| Preimage {
            ic: ic_at(topology, m.p).expect("clamped into a valid box"),
            value: m.value,
            residual: m.residual,
            orientation: if m.det.abs() > 1e-9 * m.det_scale.max(1e-300) {
                Some(if m.det > 0.0 { 1 } else { -1 })
            } else {
                None
            },
        })
        .collect())
}

// --- S¹×ℝ³: reduced monotone sweep -----------------------------------------

/// Reduced second component F₁(−f₀) at orbit size 1.
fn f1_values(mf0s: &[f64], params: &IntegrationParams) -> Result<Vec<(f64, f64)>> {
    mf0s.par_iter()
        .map(|&s| {
            let cd = eval_F(&ic_at(Topology::S1xR3, [1.0, s])?, params)?;
            Ok((cd.slopes.a_slope, cd.slopes.b_slope))
        })
        .collect()
}

/// Signed crossing count of F₁(−f₀) = target over `f0_range` (in −f₀).
///
/// The sweep refines until two consecutive grid resolutions agree on the
/// crossing count; each crossing is then pinned by log-bisection and
/// contributes sign(−F₁') read off its bracket.  Endpoints must straddle the
/// target (F₁ blows up as −f₀ → 0 and dies as −f₀ → ∞).  The report states
/// the count; callers assert |count| = 1.
#[allow(non_snake_case)]
pub fn degree_s1r3(
    target_b_slope: f64,
    f0_range: (f64, f64),
    params: &IntegrationParams,
) -> Result<DegreeReport> {
    let (lo, hi) = f0_range;
    if !(0.0 < lo && lo < hi) {
        return Err(SolitonError::InvalidParameters(format!(
            "need 0 < lo < hi in the -f0 variable, got ({lo}, {hi})"
        )));
    }
    let grid = |n: usize| -> Vec<f64> {
        (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
    };
    // fine grid nests the coarse one, so one parallel sweep serves both
    let fine = grid(65);
    let vals = f1_values(&fine, params)?;

    let end_lo = vals[0].1;
    let end_hi = vals[64].1;
    if !(end_lo > target_b_slope && target_b_slope > end_hi) {
        return Err(SolitonError::BracketFailure { lo: end_lo, hi: end_hi });
    }

    let count_at = |stride: usize| -> usize {
        (0..64 / stride)
            .filter(|&i| {
                let (p, q) = (vals[i * stride].1, vals[(i + 1) * stride].1);
                (p - target_b_slope) * (q - target_b_slope) < 0.0
            })
            .count()
    };
    if count_at(2) != count_at(1) {
        return Err(SolitonError::Refine { segment: 0 });
    }

    let mut crossings = Vec::new();
    for i in 0..64 {
        let (pa, pb) = (vals[i], vals[i + 1]);
        if (pa.1 - target_b_slope) * (pb.1 - target_b_slope) >= 0.0 {
            continue;
        }
        let sign: i8 = if pa.1 > pb.1 { 1 } else { -1 }; // sign(−F₁')
        let (mut slo, mut shi) = (fine[i], fine[i + 1]);
        let mut flo = pa.1 - target_b_slope;
        let mut a_here = pa.0;
        for _ in 0..20 {
            let mid = (slo * shi).sqrt();
            let cd = eval_F(&ic_at(Topology::S1xR3, [1.0, mid])?, params)?;
            let fm = cd.slopes.b_slope - target_b_slope;
            a_here = cd.slopes.a_slope;
            if flo * fm <= 0.0 {
                shi = mid;
            } else {
                slo = mid;
                flo = fm;
            }
        }
        crossings.push(Crossing { mf0: (slo * shi).sqrt(), a_slope: a_here, sign });
    }
    let signed_count: i32 = crossings.iter().map(|c| c.sign as i32).sum();

    let search_box = SearchBox::new(1.0, 1.0, lo, hi)?;
    let mut report = DegreeReport::new(
        Topology::S1xR3,
        DegreeTarget::BSlope(target_b_slope),
        CertificateKind::SignedCount,
        search_box,
    );
    report.preimages = crossings
        .iter()
        .map(|c| Preimage {
            ic: InitialConditions::new(Topology::S1xR3, 1.0, -c.mf0).unwrap(),
            value: (c.a_slope, target_b_slope),
            residual: 0.0,
            orientation: Some(c.sign),
        })
        .collect();
    report.signed_count = Some(signed_count);
    report.crossings = crossings;
    Ok(report)
}

// --- boundary winding -------------------------------------------------------

/// Winding number of `loop_values − target`: angle increments summed and
/// divided by 2π.  Any single increment of magnitude ≥ π means the loop is
/// undersampled (`Refine`); a value hitting the target is `OnTarget`.
pub fn winding_number(loop_values: &[(f64, f64)], target: (f64, f64)) -> Result<i32> {
    if loop_values.len() < 3 {
        return Err(SolitonError::InvalidParameters(format!(
            "winding needs at least 3 loop samples, got {}",
            loop_values.len()
        )));
    }
    let angles: Vec<f64> = loop_values
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            let (dx, dy) = (x - target.0, y - target.1);
            if dx == 0.0 && dy == 0.0 {
                Err(SolitonError::OnTarget { segment: i })
            } else {
                Ok(dy.atan2(dx))
            }
        })
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    for i in 0..angles.len() {
        let nxt = angles[(i + 1) % angles.len()];
        let mut d = nxt - angles[i];
        if d > std::f64::consts::PI {
            d -= 2.0 * std::f64::consts::PI;
        } else if d < -std::f64::consts::PI {
            d += 2.0 * std::f64::consts::PI;
        }
        if d.abs() >= std::f64::consts::PI {
            return Err(SolitonError::Refine { segment: i });
        }
        total += d;
    }
    let w = total / (2.0 * std::f64::consts::PI);
    let rounded = w.round();
    if (w - rounded).abs() >= 0.1 {
        return Err(SolitonError::InvalidParameters(format!(
            "winding sum {w:.6} is not near an integer; loop data inconsistent"
        )));
    }
    Ok(rounded as i32)
}

/// F along the counterclockwise boundary of `search_box` (right-handed in
/// (orbit, −f₀)), `n_per_side` samples per edge, corners not duplicated.
pub fn boundary_loop_values(
    topology: Topology,
    search_box: &SearchBox,
    n_per_side: usize,
    params: &IntegrationParams,
) -> Result<Vec<(f64, f64)>> {
    let b = search_box;
    let mut points = Vec::with_capacity(4 * n_per_side);
    let lerp_log = |lo: f64, hi: f64, t: f64| lo * (hi / lo).powf(t);
    for i in 0..n_per_side {
        let t = i as f64 / n_per_side as f64;
        points.push([lerp_log(b.orbit_lo, b.orbit_hi, t), b.mf0_lo]);
    }
    for i in 0..n_per_side {
        let t = i as f64 / n_per_side as f64;
        points.push([b.orbit_hi, lerp_log(b.mf0_lo, b.mf0_hi, t)]);
    }
    for i in 0..n_per_side {
        let t = i as f64 / n_per_side as f64;
        points.push([lerp_log(b.orbit_hi, b.orbit_lo, t), b.mf0_hi]);
    }
    for i in 0..n_per_side {
        let t = i as f64 / n_per_side as f64;
        points.push([b.orbit_lo, lerp_log(b.mf0_hi, b.mf0_lo, t)]);
    }
    points
        .par_iter()
        .map(|&p| {
            let cd = eval_F(&ic_at(topology, p)?, params)?;
            Ok((cd.slopes.a_slope, cd.slopes.b_slope))
        })
        .collect()
}

/// Winding of F − target around the box boundary, densifying the loop until
/// every angular step is resolved.  Returns the winding and the per-side
/// sample count that achieved it.
pub fn winding_around(
    topology: Topology,
    search_box: &SearchBox,
    target: (f64, f64),
    params: &IntegrationParams,
) -> Result<(i32, usize)> {
    let mut n = 16;
    loop {
        let values = boundary_loop_values(topology, search_box, n, params)?;
        match winding_number(&values, target) {
            Ok(w) => return Ok((w, n)),
            Err(SolitonError::Refine { .. }) if n < 512 => n *= 2,
            Err(e) => return Err(e),
        }
    }
}

// --- S²×ℝ²: degree zero -----------------------------------------------------

/// Trace the b'∞ = 1 level set over a log grid of b₀, root-finding in −f₀.
/// `None` per grid point when the search interval does not bracket.
fn level_set(
    b0s: &[f64],
    search: (f64, f64),
    params: &IntegrationParams,
) -> Vec<Option<LevelSetPoint>> {
    b0s.par_iter()
        .map(|&b0| {
            let g = |s: f64| -> Option<(f64, f64)> {
                let cd = eval_F(&ic_at(Topology::S2xR2, [b0, s]).ok()?, params).ok()?;
                Some((cd.slopes.a_slope, cd.slopes.b_slope))
            };
            let (mut lo, mut hi) = search;
            let (mut vlo, vhi) = (g(lo)?, g(hi)?);
            if (vlo.1 - 1.0) * (vhi.1 - 1.0) > 0.0 {
                return None;
            }
            let mut a_here = vlo.0;
            for _ in 0..25 {
                let mid = (lo * hi).sqrt();
                let vm = g(mid)?;
                a_here = vm.0;
                if (vlo.1 - 1.0) * (vm.1 - 1.0) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    vlo = vm;
                }
            }
            Some(LevelSetPoint { b0, mf0: (lo * hi).sqrt(), a_slope: a_here })
        })
        .collect()
}

/// Degree-zero certificates for S²×ℝ².  Returns two reports: a winding
/// certificate (winding of F − target = 0 around the box boundary) and a
/// non-surjectivity certificate (the b'∞ = 1 level set has a'∞ bounded by
/// max < target.0, and `invert_F` at the exhibited target finds nothing).
#[allow(non_snake_case)]
pub fn degree_s2r2(
    search_box: &SearchBox,
    params: &IntegrationParams,
) -> Result<Vec<DegreeReport>> {
    let grid = |n: usize| -> Vec<f64> {
        (0..n)
            .map(|i| {
                search_box.orbit_lo
                    * (search_box.orbit_hi / search_box.orbit_lo)
                        .powf(i as f64 / (n - 1) as f64)
            })
            .collect()
    };
    let search = (search_box.mf0_lo, search_box.mf0_hi);
    let fine_pts = level_set(&grid(17), search, params);
    let coarse_pts = level_set(&grid(9), search, params);
    let max_of = |pts: &[Option<LevelSetPoint>]| -> Option<f64> {
        pts.iter().flatten().map(|p| p.a_slope).fold(None, |m, v| {
            Some(m.map_or(v, |x: f64| x.max(v)))
        })
    };
    let (max_fine, max_coarse) = match (max_of(&fine_pts), max_of(&coarse_pts)) {
        (Some(f), Some(c)) => (f, c),
        _ => return Err(SolitonError::NoneFound),
    };

    // witness value strictly outside the measured image of the level set
    let witness = ConeSlopes { a_slope: 2.0 * max_fine, b_slope: 1.0, err_estimate: 0.0 };
    let mut nonsurj = DegreeReport::new(
        Topology::S2xR2,
        DegreeTarget::Slopes(witness.a_slope, witness.b_slope),
        CertificateKind::NonSurjectivity,
        *search_box,
    );
    nonsurj.level_set = fine_pts.into_iter().flatten().collect();
    nonsurj.level_set_max_a_slope = Some((max_coarse, max_fine));
    match invert_F(&witness, Topology::S2xR2, search_box, params) {
        Err(SolitonError::NoneFound) => {}
        Ok(found) => nonsurj.preimages = found, // evidence against; caller sees it
        Err(e) => return Err(e),
    }

    let target = (witness.a_slope, witness.b_slope);
    let (w, _) = winding_around(Topology::S2xR2, search_box, target, params)?;
    let mut winding = DegreeReport::new(
        Topology::S2xR2,
        DegreeTarget::Slopes(target.0, target.1),
        CertificateKind::Winding,
        *search_box,
    );
    winding.winding = Some(w);

    Ok(vec![winding, nonsurj])
}
