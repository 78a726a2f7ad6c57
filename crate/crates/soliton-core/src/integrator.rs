//! Error-controlled outward integration of the profile system.
//!
//! Away from r = 0 the system is smooth and non-stiff (the axis degeneracy
//! is handled by the series jet, never by the stepper), so an explicit
//! embedded 5(4) pair with PI step-size control is the right tool.  The
//! stepper carries a 4th-order continuous extension used for three things:
//! log-spaced sample emission, location of the f' = −1 event, and the
//! mandatory half/quarter-radius samples the tail estimators compare
//! against.
//!
//! Sign monotonicity (a' > 0, b' > 0, f' < 0 for f₀ < 0) is enforced at
//! every accepted step: losing a proven sign means the *integration* failed.

use crate::geometry;
use crate::profile_ode::{boundary_jet, rhs, InitialConditions, ProfileState, SeriesJet};
use crate::{Result, SolitonError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Stepper and sampling knobs.  `r_max = None` selects the adaptive policy
/// max(40, 4·r₀); an explicit radius disables all adaptation (used both by
/// callers that know the range and by tests that want a failure).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrationParams {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub r_max: Option<f64>,
    /// The tail is stiff: the contracting mode has rate ≈ |f'| ≈ r, so
    /// explicit steps shrink like h ≈ 3/r and reaching R costs ~R²/7 steps.
    /// The default covers the deepest cone-convergence ladder (R = 6400).
    pub max_steps: usize,
    /// Geometric sample-stride factor (log-spaced tail data).
    pub sample_factor: f64,
    /// Jet handoff radius.
    pub r_series_max: f64,
    /// Jet order handed to `boundary_jet`.
    pub series_order: usize,
    /// Early-termination threshold for the slope-plateau rule.
    pub plateau_tol: f64,
    /// Overflow guard on |state| components.
    pub guard: f64,
    /// Exact radii to sample (dense-output evaluation), in addition to the
    /// geometric grid and the mandatory r_max/4, r_max/2, r_max marks.
    pub extra_samples: Vec<f64>,
}

impl Default for IntegrationParams {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            r_max: None,
            max_steps: 10_000_000,
            sample_factor: 1.05,
            r_series_max: crate::profile_ode::R_SERIES_MAX_DEFAULT,
            series_order: crate::profile_ode::SERIES_ORDER_DEFAULT,
            plateau_tol: 1e-8,
            guard: 1e150,
            extra_samples: Vec::new(),
        }
    }
}

impl IntegrationParams {
    fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.abs_tol <= self.rel_tol && self.rel_tol < 1e-3) {
            return Err(SolitonError::InvalidParameters(format!(
                "need 0 < abs_tol <= rel_tol < 1e-3, got ({:.3e}, {:.3e})",
                self.abs_tol, self.rel_tol
            )));
        }
        if let Some(r_max) = self.r_max {
            if !(r_max > 1.0) {
                return Err(SolitonError::InvalidParameters(format!(
                    "r_max must exceed 1, got {r_max}"
                )));
            }
        }
        if !(self.sample_factor > 1.0 && self.sample_factor < 2.0) {
            return Err(SolitonError::InvalidParameters(format!(
                "sample_factor must lie in (1, 2), got {}",
                self.sample_factor
            )));
        }
        Ok(())
    }
}

/// Why the integration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    ReachedRMax,
    /// Both slope doubling-differences fell below `plateau_tol` at r ≥ 20.
    SlopePlateau,
}

/// Residual and curvature summaries accumulated over the emitted samples.
/// Residuals are drift-normalized: max over samples of |residual|/(1 + r²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub max_trace_residual: f64,
    pub max_bianchi_residual: f64,
    /// sup over samples with r ≥ 10 of r²·max|Rm|, when the run got there.
    pub tail_sup_r2rm: Option<f64>,
    pub termination: Termination,
}

/// An integrated trajectory with the derived asymptotic data.  `K` and
/// `slopes` stay `None` until the cone extraction fills them in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolitonSolution {
    pub ic: InitialConditions,
    pub samples: Vec<ProfileState>,
    pub r0: Option<f64>,
    pub k: Option<f64>,
    pub slopes: Option<crate::cone_map::ConeSlopes>,
    pub diagnostics: Diagnostics,
}

impl SolitonSolution {
    /// Sample with r closest to the query radius.
    pub fn sample_near(&self, r: f64) -> &ProfileState {
        let idx = self
            .samples
            .binary_search_by(|s| s.r.partial_cmp(&r).unwrap())
            .unwrap_or_else(|i| i);
        let lo = idx.saturating_sub(1);
        let hi = idx.min(self.samples.len() - 1);
        if (self.samples[hi].r - r).abs() < (r - self.samples[lo].r).abs() {
            &self.samples[hi]
        } else {
            &self.samples[lo]
        }
    }

    pub fn last(&self) -> &ProfileState {
        self.samples.last().expect("non-empty by construction")
    }
}

// --- Dormand–Prince 5(4) ----------------------------------------------------

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// 5th-order weights equal A[6]; the embedded 4th-order difference:
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// dense-output weights of the 4th-order continuous extension
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// One accepted step with its interpolation coefficients.
struct DenseStep {
    r: f64,
    h: f64,
    cont: [[f64; 6]; 5],
}

impl DenseStep {
    fn eval(&self, r: f64) -> [f64; 6] {
        let th = (r - self.r) / self.h;
        let th1 = 1.0 - th;
        let mut y = [0.0; 6];
        for i in 0..6 {
            let c = &self.cont;
            y[i] = c[0][i] + th * (c[1][i] + th1 * (c[2][i] + th * (c[3][i] + th1 * c[4][i])));
        }
        y
    }
}

struct Dp5<'a> {
    f: &'a dyn Fn(f64, &[f64; 6]) -> Result<[f64; 6]>,
    rel_tol: f64,
    abs_tol: f64,
    r: f64,
    y: [f64; 6],
    k1: [f64; 6],
    h: f64,
    facold: f64,
}

impl<'a> Dp5<'a> {
    fn new(
        f: &'a dyn Fn(f64, &[f64; 6]) -> Result<[f64; 6]>,
        r: f64,
        y: [f64; 6],
        h0: f64,
        rel_tol: f64,
        abs_tol: f64,
    ) -> Result<Self> {
        let k1 = f(r, &y)?;
        Ok(Self { f, rel_tol, abs_tol, r, y, k1, h: h0, facold: 1e-4 })
    }

    /// Advance one accepted step, not beyond `r_end`; returns the dense
    /// interpolant of the step taken.
    fn step(&mut self, r_end: f64) -> Result<DenseStep> {
        loop {
            let h = self.h.min(r_end - self.r);
            let mut k = [[0.0; 6]; 7];
            k[0] = self.k1;
            for s in 1..7 {
                let mut ys = self.y;
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        for i in 0..6 {
                            ys[i] += h * a * kj[i];
                        }
                    }
                }
                k[s] = (self.f)(self.r + C[s] * h, &ys)?;
            }
            // stage 7 is evaluated at y_new (FSAL): k[6] = f(r+h, y_new)
            let mut y_new = self.y;
            for (j, kj) in k.iter().enumerate().take(6) {
                let a = A[6][j];
                if a != 0.0 {
                    for i in 0..6 {
                        y_new[i] += h * a * kj[i];
                    }
                }
            }

            let mut err2 = 0.0;
            for i in 0..6 {
                let e: f64 = (0..7).map(|j| E[j] * k[j][i]).sum();
                let sc = self.abs_tol + self.rel_tol * self.y[i].abs().max(y_new[i].abs());
                err2 += (h * e / sc) * (h * e / sc);
            }
            let err = (err2 / 6.0).sqrt();

            if err <= 1.0 {
                // PI controller (Hairer's dopri5 constants)
                let fac11 = err.powf(0.17);
                let fac = (fac11 / self.facold.powf(0.04) / 0.9).clamp(0.2, 5.0);
                let h_next = h / fac;
                self.facold = err.max(1e-4);

                let mut cont = [[0.0; 6]; 5];
                for i in 0..6 {
                    let ydiff = y_new[i] - self.y[i];
                    let bspl = h * k[0][i] - ydiff;
                    cont[0][i] = self.y[i];
                    cont[1][i] = ydiff;
                    cont[2][i] = bspl;
                    cont[3][i] = ydiff - h * k[6][i] - bspl;
                    cont[4][i] = h * (0..7).map(|j| D[j] * k[j][i]).sum::<f64>();
                }
                let taken = DenseStep { r: self.r, h, cont };

                self.r += h;
                self.y = y_new;
                self.k1 = k[6];
                self.h = h_next;
                return Ok(taken);
            }
            let fac11 = err.powf(0.17);
            self.h = h / (fac11 / 0.9).min(5.0);
        }
    }
}

// --- driver -----------------------------------------------------------------

struct SampleStream {
    factor: f64,
    next_geom: f64,
    extras: Vec<f64>,
    marks: Vec<f64>, // pending mandatory radii, sorted descending
}

impl SampleStream {
    fn new(start: f64, factor: f64, extras: &[f64]) -> Self {
        let extras: Vec<f64> =
            extras.iter().copied().filter(|x| x.is_finite() && *x > start).collect();
        Self { factor, next_geom: start * factor, extras, marks: Vec::new() }
    }

    fn set_marks(&mut self, r_done: f64, r_max: f64) {
        let mut m: Vec<f64> = [r_max / 4.0, r_max / 2.0, r_max]
            .into_iter()
            .chain(self.extras.iter().copied())
            .filter(|&x| x > r_done && x <= r_max)
            .collect();
        m.sort_by(|p, q| q.partial_cmp(p).unwrap());
        m.dedup();
        self.marks = m;
    }

    fn peek(&self) -> f64 {
        self.marks.last().copied().map_or(self.next_geom, |m| m.min(self.next_geom))
    }

    fn advance(&mut self) {
        let next = self.peek();
        if self.marks.last().is_some_and(|&m| m <= next) {
            self.marks.pop();
        }
        if self.next_geom <= next {
            self.next_geom = next * self.factor;
        }
    }
}

/// Integrate from the jet handoff outward.
pub fn integrate(ic: &InitialConditions, params: &IntegrationParams) -> Result<SolitonSolution> {
    params.validate()?;
    let jet = {
        let mut j = boundary_jet(ic, params.series_order)?;
        j.r_series_max = params.r_series_max;
        j
    };
    integrate_from_jet(ic, &jet, params)
}

pub(crate) fn integrate_from_jet(
    ic: &InitialConditions,
    jet: &SeriesJet,
    params: &IntegrationParams,
) -> Result<SolitonSolution> {
    let soliton_run = ic.f0 < 0.0;
    let y0_state = jet.eval(jet.r_series_max)?;
    let r_start = jet.r_series_max;

    let f = |r: f64, y: &[f64; 6]| -> Result<[f64; 6]> {
        rhs(&ProfileState::from_vec(r, y))
    };

    let mut stepper =
        Dp5::new(&f, r_start, y0_state.to_array(), r_start / 10.0, params.rel_tol, params.abs_tol)?;

    // Adaptive default range.  Soliton trajectories are neutrally stable
    // (linear cone growth), so 40 — extended to 4·r₀ below — is cheap and
    // safe.  The Einstein profile instead rides exponentially growing modes:
    // roundoff seeds amplify like e^{2r/√3} and destroy the trajectory near
    // r ≈ 30, so its default stops at 20 (an explicit r_max is honored and
    // fails honestly via the guard).
    let mut r_max = params.r_max.unwrap_or(if soliton_run { 40.0 } else { 20.0 });
    let adaptive = params.r_max.is_none();

    let mut samples = vec![y0_state];
    let mut stream = SampleStream::new(r_start, params.sample_factor, &params.extra_samples);
    stream.set_marks(r_start, r_max);

    let mut r0: Option<f64> = None;
    let mut diag = Diagnostics {
        max_trace_residual: 0.0,
        max_bianchi_residual: 0.0,
        tail_sup_r2rm: None,
        termination: Termination::ReachedRMax,
    };
    let mut steps = 0usize;

    let absorb = |state: ProfileState, diag: &mut Diagnostics| -> Result<()> {
        let sd = rhs(&state)?;
        let frame = geometry::curvature(&state, &sd)?;
        let drift = 1.0 + state.r * state.r;
        let tr = geometry::trace_residual(&state, &frame).abs() / drift;
        let bi = geometry::bianchi_residual(&state, &frame, ic).abs() / drift;
        diag.max_trace_residual = diag.max_trace_residual.max(tr);
        diag.max_bianchi_residual = diag.max_bianchi_residual.max(bi);
        if state.r >= 10.0 {
            let m = frame.max_abs_sectional();
            let v = state.r * state.r * m;
            diag.tail_sup_r2rm = Some(diag.tail_sup_r2rm.map_or(v, |s: f64| s.max(v)));
        }
        Ok(())
    };
    absorb(y0_state, &mut diag)?;

    'outer: while stepper.r < r_max {
        if steps >= params.max_steps {
            return Err(SolitonError::StepLimitExceeded { r: stepper.r });
        }
        steps += 1;
        let step = stepper.step(r_max)?;
        let r_new = stepper.r;
        let y_new = stepper.y;

        if y_new.iter().any(|v| !v.is_finite() || v.abs() > params.guard) {
            return Err(SolitonError::BlowUp { r: r_new });
        }
        if soliton_run {
            let scale = 1.0 + y_new.iter().fold(0.0f64, |s, v| s.max(v.abs()));
            let tol = 1e-12 * scale;
            for (v, q) in [(y_new[1], "a'"), (y_new[3], "b'"), (-y_new[5], "-f'")] {
                if v < -tol {
                    return Err(SolitonError::MonotonicityViolation { r: r_new, quantity: q });
                }
            }
        }

        // f' = −1 event: locate within the step by bisection on the dense
        // interpolant (f' is monotone), then extend the adaptive range.
        if r0.is_none() && soliton_run && y_new[5] + 1.0 <= 0.0 {
            let (mut lo, mut hi) = (step.r, step.r + step.h);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if step.eval(mid)[5] + 1.0 > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let re = 0.5 * (lo + hi);
            r0 = Some(re);
            if adaptive && 4.0 * re > r_max {
                r_max = 4.0 * re;
                stream.set_marks(r_new, r_max);
            }
            let ev = ProfileState::from_vec(re, &step.eval(re));
            if samples.last().is_none_or(|s| s.r < re) {
                // emit any grid samples that precede the event first
                while stream.peek() < re {
                    let rs = stream.peek();
                    let st = ProfileState::from_vec(rs, &step.eval(rs));
                    absorb(st, &mut diag)?;
                    samples.push(st);
                    stream.advance();
                }
                absorb(ev, &mut diag)?;
                samples.push(ev);
            }
        }

        while stream.peek() <= r_new {
            let rs = stream.peek();
            let st = if (rs - r_new).abs() < 1e-14 * r_new {
                ProfileState::from_vec(r_new, &y_new)
            } else {
                ProfileState::from_vec(rs, &step.eval(rs))
            };
            if samples.last().is_none_or(|s| s.r < st.r) {
                absorb(st, &mut diag)?;
                // slope-plateau rule: compare against the stored sample
                // nearest half this radius
                if st.r >= 40.0 {
                    let half = sample_at(&samples, st.r / 2.0);
                    if (st.da - half.da).abs() < params.plateau_tol
                        && (st.db - half.db).abs() < params.plateau_tol
                    {
                        samples.push(st);
                        diag.termination = Termination::SlopePlateau;
                        break 'outer;
                    }
                }
                samples.push(st);
            }
            stream.advance();
        }
    }

    // make sure the terminal state is a sample (geometric stride may have
    // just passed it)
    let terminal = ProfileState::from_vec(stepper.r, &stepper.y);
    if samples.last().is_none_or(|s| s.r < terminal.r)
        && diag.termination == Termination::ReachedRMax
    {
        absorb(terminal, &mut diag)?;
        samples.push(terminal);
    }

    Ok(SolitonSolution { ic: *ic, samples, r0, k: None, slopes: None, diagnostics: diag })
}

fn sample_at(samples: &[ProfileState], r: f64) -> &ProfileState {
    let idx = samples
        .binary_search_by(|s| s.r.partial_cmp(&r).unwrap())
        .unwrap_or_else(|i| i.min(samples.len() - 1));
    let lo = idx.saturating_sub(1);
    if (samples[idx].r - r).abs() < (r - samples[lo].r).abs() {
        &samples[idx]
    } else {
        &samples[lo]
    }
}

/// Root of f'(r) = −1 recomputed from the stored samples: bisection on the
/// bracketing interval of a cubic Hermite model built from (f', f'') at the
/// bracket ends.  Independent of the in-flight event location, so the two
/// values cross-check each other.
pub fn detect_r0(solution: &SolitonSolution) -> Result<f64> {
    let s = &solution.samples;
    let i = match s.iter().position(|p| p.df <= -1.0) {
        Some(0) => return Err(SolitonError::NotReached { r_max: s.last().unwrap().r }),
        Some(i) => i,
        None => return Err(SolitonError::NotReached { r_max: s.last().unwrap().r }),
    };
    let (p, q) = (&s[i - 1], &s[i]);
    let h = q.r - p.r;
    let (f0, f1) = (p.df + 1.0, q.df + 1.0);
    let (d0, d1) = (rhs(p)?[5], rhs(q)?[5]);
    let hermite = |t: f64| {
        let t2 = t * t;
        let h00 = 2.0 * t2 * t - 3.0 * t2 + 1.0;
        let h10 = t2 * t - 2.0 * t2 + t;
        let h01 = -2.0 * t2 * t + 3.0 * t2;
        let h11 = t2 * t - t2;
        h00 * f0 + h10 * h * d0 + h01 * f1 + h11 * h * d1
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if hermite(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(p.r + 0.5 * (lo + hi) * h)
}

/// Independent integrations over a parameter grid; result order matches the
/// input, failures stay per-point.
pub fn sweep(
    grid: &[InitialConditions],
    params: &IntegrationParams,
) -> Vec<Result<SolitonSolution>> {
    grid.par_iter().map(|ic| integrate(ic, params)).collect()
}
