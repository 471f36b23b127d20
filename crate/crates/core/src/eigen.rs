//! Shooting, bisection on the free exponent, and passage through the sonic point.
//!
//! Shots run from the jump state toward increasing `xi` until the sonic
//! discriminant `X^2 - C^2` vanishes, the integration fails, or `xi_max` is
//! reached. The sign of the numerator at the stop classifies the trial value.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eos::ProblemKind;
use crate::error::{Error, Result};
use crate::ode::{Dopri, StepOptions};
use crate::reconstruct::SolutionProfile;
use crate::roots::brent;
use crate::similarity::{
    cavity_start, derived, gradients, jump_init_cavity, jump_init_shock, rhs, rhs_desingularized, Exponents,
    FreeParam, Parameterization, ProblemSpec, SimilarityState,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegrationMode {
    /// `xi` is the independent variable.
    Direct,
    /// Arc parameter with `dxi/dtau` proportional to `R X (X^2 - C^2)`.
    Desingularized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative offset of the first cavity sample from the surface.
    pub epsilon: f64,
    /// Relative restart offset on either side of the sonic point.
    pub h_jump: f64,
    /// Sonic stop threshold relative to the jump velocity-squared scale.
    pub delta_stop: f64,
    /// `xi_max = xi_max_factor * xi_s`.
    pub xi_max_factor: f64,
    pub rtol: f64,
    pub atol: f64,
    pub mode: IntegrationMode,
    pub max_steps: usize,
    pub max_iterations: usize,
    /// Largest normalized distance from the sonic locus accepted for a crossing.
    pub crossing_tol: f64,
    /// Largest spacing in `ln xi` between stored profile samples.
    pub sample_dlnxi: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            epsilon: 1e-6,
            h_jump: 1e-5,
            delta_stop: 1e-8,
            xi_max_factor: 1e4,
            rtol: 1e-10,
            atol: 1e-12,
            mode: IntegrationMode::Desingularized,
            max_steps: 200_000,
            max_iterations: 200,
            crossing_tol: 1e-4,
            sample_dlnxi: 2e-3,
        }
    }
}

impl SolverOptions {
    fn step_options(&self) -> StepOptions {
        StepOptions { rtol: self.rtol, atol: self.atol, ..StepOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    SonicApproach,
    StepUnderflow,
    DomainError,
    ReachedXiMax,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StopReason::SonicApproach => "sonic_approach",
            StopReason::StepUnderflow => "step_underflow",
            StopReason::DomainError => "domain_error",
            StopReason::ReachedXiMax => "reached_xi_max",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootReport {
    pub value: f64,
    pub exponents: Exponents,
    pub stop_xi: f64,
    pub stop_reason: StopReason,
    pub numerator_sign: i8,
    pub stop_numerator: f64,
    pub stop_delta: f64,
    /// Absolute sonic threshold used for this shot.
    pub delta_stop: f64,
    pub detail: String,
    pub trajectory: Vec<SimilarityState>,
}

/// A problem together with the map from the searched parameter to exponents.
#[derive(Debug, Clone)]
pub struct EigenProblem {
    pub spec: ProblemSpec,
    pub param: Parameterization,
}

impl EigenProblem {
    pub fn new(spec: ProblemSpec, free: FreeParam, fixed: Option<f64>) -> Result<Self> {
        let param = spec.constraints().parameterize(free, fixed)?;
        Ok(EigenProblem { spec, param })
    }

    pub fn spec_at(&self, value: f64) -> Result<ProblemSpec> {
        let s = self.spec.with_exponents(self.param.exponents(value));
        s.validate()?;
        Ok(s)
    }
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// First integrated state and the velocity-squared scale for the sonic threshold.
pub fn start_state(spec: &ProblemSpec, opts: &SolverOptions) -> Result<(SimilarityState, f64)> {
    match spec.kind {
        ProblemKind::Shock => {
            let j = jump_init_shock(spec)?;
            let s = j.post_state();
            Ok((s, derived(spec, &s)?.c2))
        }
        ProblemKind::Cavity => {
            let j = jump_init_cavity(spec)?;
            Ok((cavity_start(spec, opts.epsilon)?, j.vs * j.vs))
        }
    }
}

/// Shoots with the free parameter set to `value`.
pub fn shoot(problem: &EigenProblem, value: f64, opts: &SolverOptions) -> Result<ShootReport> {
    let spec = problem.spec_at(value)?;
    let (start, scale) = start_state(&spec, opts)?;
    let mut rep = shoot_from(&spec, start, opts.delta_stop * scale, opts)?;
    rep.value = value;
    Ok(rep)
}

/// Shoots from an arbitrary regular state with an absolute sonic threshold.
pub fn shoot_from(spec: &ProblemSpec, start: SimilarityState, delta_stop: f64, opts: &SolverOptions) -> Result<ShootReport> {
    let xi_max = opts.xi_max_factor * spec.xi_s()?;
    let mut rep = match opts.mode {
        IntegrationMode::Direct => {
            let seg = integrate_segment(spec, start, xi_max, delta_stop, opts, false)?;
            let last = *seg.states.last().unwrap_or(&start);
            let (n, d) = derived(spec, &last).map(|d| (d.numerator, d.delta)).unwrap_or((f64::NAN, f64::NAN));
            ShootReport {
                value: f64::NAN,
                exponents: spec.exponents,
                stop_xi: last.xi,
                stop_reason: seg.end,
                numerator_sign: if n.is_nan() { 0 } else { sign(n) },
                stop_numerator: n,
                stop_delta: d,
                delta_stop,
                detail: seg.detail,
                trajectory: seg.states,
            }
        }
        IntegrationMode::Desingularized => shoot_desingularized(spec, start, xi_max, delta_stop, opts)?,
    };
    rep.exponents = spec.exponents;
    Ok(rep)
}

fn to_state(y: &[f64; 4]) -> SimilarityState {
    SimilarityState::new(y[0], y[1], y[2], y[3])
}

fn shoot_desingularized(
    spec: &ProblemSpec,
    start: SimilarityState,
    xi_max: f64,
    delta_stop: f64,
    opts: &SolverOptions,
) -> Result<ShootReport> {
    let d0 = derived(spec, &start)?;
    let orient = if start.r * d0.x * d0.delta < 0.0 { -1.0 } else { 1.0 };
    let (sx0, sd0) = (sign(d0.x), sign(d0.delta));
    let mut field = |_t: f64, y: &[f64; 4]| -> Result<[f64; 4]> {
        let s = to_state(y);
        let d = derived(spec, &s)?;
        let g = rhs_desingularized(spec, &s)?;
        let c = d.c2.max(0.0).sqrt();
        let norm = s.r * (d.x.abs() + c).powi(3) + f64::MIN_POSITIVE;
        Ok(g.map(|v| orient * v / norm))
    };
    let y0 = [start.xi, start.r, start.v, start.pi];
    let mut st = Dopri::new(&mut field, 0.0, y0, opts.step_options())?;
    let mut traj = vec![start];
    let finish = |traj: Vec<SimilarityState>, s: SimilarityState, reason: StopReason, detail: String| {
        let (n, d) = derived(spec, &s).map(|d| (d.numerator, d.delta)).unwrap_or((f64::NAN, f64::NAN));
        ShootReport {
            value: f64::NAN,
            exponents: spec.exponents,
            stop_xi: s.xi,
            stop_reason: reason,
            numerator_sign: if n.is_nan() { 0 } else { sign(n) },
            stop_numerator: n,
            stop_delta: d,
            delta_stop,
            detail,
            trajectory: traj,
        }
    };
    let r_floor = 1e-12 * start.r;
    let mut stall = 0usize;
    for _ in 0..opts.max_steps {
        let step = match st.step(&mut field, f64::INFINITY) {
            Ok(s) => s,
            Err(u) => {
                let last = *traj.last().unwrap();
                let (reason, why) = classify_underflow(&u.cause);
                return Ok(finish(traj, last, reason, why));
            }
        };
        let s1 = to_state(&step.y1);
        let d1 = match derived(spec, &s1) {
            Ok(d) => d,
            Err(e) => {
                let last = *traj.last().unwrap();
                let (reason, why) = classify_underflow(&Some(e));
                return Ok(finish(traj, last, reason, why));
            }
        };
        if sign(d1.delta) != sd0 {
            let tau = brent(
                |t| Ok(derived(spec, &to_state(&step.dense(t)))?.delta),
                step.t0,
                step.t1,
                1e-15 * step.t1.abs().max(1e-300),
                200,
            )
            .unwrap_or(step.t1);
            let s = to_state(&step.dense(tau));
            traj.push(s);
            return Ok(finish(traj, s, StopReason::SonicApproach, String::new()));
        }
        if sign(d1.x) != sx0 {
            traj.push(s1);
            return Ok(finish(traj, s1, StopReason::StepUnderflow, "group velocity X vanished".into()));
        }
        if s1.xi >= xi_max {
            let tau = brent(|t| Ok(step.dense(t)[0] - xi_max), step.t0, step.t1, 1e-15 * step.t1.abs(), 200)
                .unwrap_or(step.t1);
            let s = to_state(&step.dense(tau));
            traj.push(s);
            return Ok(finish(traj, s, StopReason::ReachedXiMax, String::new()));
        }
        if s1.r < r_floor {
            traj.push(s1);
            return Ok(finish(traj, s1, StopReason::StepUnderflow, "density collapsed to zero".into()));
        }
        let moved = (0..4).any(|i| (step.y1[i] - step.y0[i]).abs() > 1e-13 * step.y1[i].abs().max(1e-300));
        stall = if moved { 0 } else { stall + 1 };
        traj.push(s1);
        if stall > 200 {
            let reason = if d1.delta.abs() < delta_stop { StopReason::SonicApproach } else { StopReason::StepUnderflow };
            return Ok(finish(traj, s1, reason, "trajectory stalled at a fixed point".into()));
        }
    }
    let last = *traj.last().unwrap();
    Ok(finish(traj, last, StopReason::StepUnderflow, "step limit reached".into()))
}

fn classify_underflow(cause: &Option<Error>) -> (StopReason, String) {
    match cause {
        Some(e @ (Error::Domain { .. } | Error::Pressure { .. })) => (StopReason::DomainError, e.to_string()),
        Some(e) => (StopReason::StepUnderflow, e.to_string()),
        None => (StopReason::StepUnderflow, "step size underflow".into()),
    }
}

/// Samples from a direct-mode integration.
#[derive(Debug, Clone)]
pub struct Segment {
    pub states: Vec<SimilarityState>,
    pub end: StopReason,
    pub detail: String,
}

/// Integrates from `start` to `xi_end` in `ln xi`, stopping at the sonic line.
///
/// With `dense` set, the step is capped at `opts.sample_dlnxi` so that every
/// stored sample is a full-accuracy step endpoint.
pub fn integrate_segment(
    spec: &ProblemSpec,
    start: SimilarityState,
    xi_end: f64,
    delta_stop: f64,
    opts: &SolverOptions,
    dense: bool,
) -> Result<Segment> {
    let mut f = |x: f64, y: &[f64; 3]| {
        let xi = x.exp();
        rhs(spec, &SimilarityState::from_fields(xi, *y)).map(|d| d.map(|v| v * xi))
    };
    let mut so = opts.step_options();
    if dense {
        so.h_max = opts.sample_dlnxi;
    }
    let x_end = xi_end.ln();
    let mut st = Dopri::new(&mut f, start.xi.ln(), start.fields(), so)?;
    let d0 = derived(spec, &start)?;
    let (sd0, sx0) = (sign(d0.delta), sign(d0.x));
    let mut states = vec![start];
    let at = |x: f64, y: [f64; 3]| SimilarityState::from_fields(if x == x_end { xi_end } else { x.exp() }, y);
    for _ in 0..opts.max_steps {
        if st.t >= x_end {
            return Ok(Segment { states, end: StopReason::ReachedXiMax, detail: String::new() });
        }
        let step = match st.step(&mut f, x_end) {
            Ok(s) => s,
            Err(u) => {
                let (end, detail) = classify_underflow(&u.cause);
                return Ok(Segment { states, end, detail });
            }
        };
        let s1 = at(step.t1, step.y1);
        let d1 = derived(spec, &s1)?;
        if sign(d1.delta) != sd0 {
            let x = brent(
                |x| Ok(derived(spec, &at(x, step.dense(x)))?.delta),
                step.t0,
                step.t1,
                1e-15 * step.t1.abs().max(1.0),
                200,
            )
            .unwrap_or(step.t1);
            states.push(at(x, step.dense(x)));
            return Ok(Segment { states, end: StopReason::SonicApproach, detail: String::new() });
        }
        states.push(s1);
        if d1.delta.abs() < delta_stop {
            return Ok(Segment { states, end: StopReason::SonicApproach, detail: String::new() });
        }
        if sign(d1.x) != sx0 {
            return Ok(Segment { states, end: StopReason::StepUnderflow, detail: "group velocity X vanished".into() });
        }
    }
    Ok(Segment { states, end: StopReason::StepUnderflow, detail: "step limit reached".into() })
}

/// Outcome of one trial value in a bracket scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub value: f64,
    pub stop_reason: Option<StopReason>,
    #[serde(deserialize_with = "crate::serde_num::f64_or_nan")]
    pub stop_xi: f64,
    pub numerator_sign: i8,
    #[serde(deserialize_with = "crate::serde_num::f64_or_nan")]
    pub numerator: f64,
    #[serde(deserialize_with = "crate::serde_num::f64_or_nan")]
    pub delta: f64,
    pub error: Option<String>,
}

/// Shoots at `n` evenly spaced interior points of `(lo, hi)`, in parallel.
pub fn scan(problem: &EigenProblem, lo: f64, hi: f64, n: usize, opts: &SolverOptions) -> Vec<ScanPoint> {
    let values: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64).collect();
    scan_values(problem, &values, opts)
}

/// Shoots at each listed value, in parallel; output order follows input order.
pub fn scan_values(problem: &EigenProblem, values: &[f64], opts: &SolverOptions) -> Vec<ScanPoint> {
    values
        .par_iter()
        .map(|&value| match shoot(problem, value, opts) {
            Ok(r) => ScanPoint {
                value,
                stop_reason: Some(r.stop_reason),
                stop_xi: r.stop_xi,
                numerator_sign: r.numerator_sign,
                numerator: r.stop_numerator,
                delta: r.stop_delta,
                error: None,
            },
            Err(e) => ScanPoint {
                value,
                stop_reason: None,
                stop_xi: f64::NAN,
                numerator_sign: 0,
                numerator: f64::NAN,
                delta: f64::NAN,
                error: Some(e.to_string()),
            },
        })
        .collect()
}

/// Adjacent scan points with opposite nonzero numerator signs.
pub fn sign_changes(points: &[ScanPoint]) -> Vec<(f64, f64)> {
    points
        .windows(2)
        .filter(|w| w[0].numerator_sign * w[1].numerator_sign < 0)
        .map(|w| (w[0].value, w[1].value))
        .collect()
}

#[derive(Debug, Clone)]
pub struct Bisection {
    pub lo: f64,
    pub hi: f64,
    pub iterations: usize,
    pub lo_report: ShootReport,
    pub hi_report: ShootReport,
}

impl Bisection {
    pub fn value(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Bisects on the numerator sign until the bracket is narrower than `tol`.
pub fn bisect(problem: &EigenProblem, lo: f64, hi: f64, tol: f64, opts: &SolverOptions) -> Result<Bisection> {
    if !(tol >= 1e-12) {
        return Err(Error::InvalidParameters(format!("tol_alpha must be at least 1e-12, got {tol}")));
    }
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut rl = shoot(problem, lo, opts)?;
    let mut rh = shoot(problem, hi, opts)?;
    if rl.numerator_sign * rh.numerator_sign >= 0 {
        return Err(Error::NoSignChange { lo, hi, lo_sign: rl.numerator_sign, hi_sign: rh.numerator_sign });
    }
    let mut it = 0;
    while hi - lo > tol {
        if it >= opts.max_iterations {
            return Err(Error::MaxIterations(it));
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let r = shoot(problem, mid, opts)?;
        if r.numerator_sign == rl.numerator_sign {
            lo = mid;
            rl = r;
        } else if r.numerator_sign == 0 {
            lo = mid;
            hi = mid;
            rl = r.clone();
            rh = r;
        } else {
            hi = mid;
            rh = r;
        }
        it += 1;
    }
    Ok(Bisection { lo, hi, iterations: it, lo_report: rl, hi_report: rh })
}

/// Converged exponent with its continued profile.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub free: FreeParam,
    pub value: f64,
    pub exponents: Exponents,
    pub bracket: (f64, f64),
    pub iterations: usize,
    pub sonic_xi: f64,
    /// `|N|` on the converged trajectory at its closest approach to the sonic point.
    pub residual: f64,
    /// Sum of the magnitudes of the terms in `N` at the same point.
    pub residual_scale: f64,
    pub crossing: Crossing,
    pub profile: SolutionProfile,
}

/// Bisection followed by the sonic crossing.
pub fn find_eigenvalue(problem: &EigenProblem, bracket: (f64, f64), tol: f64, opts: &SolverOptions) -> Result<EigenResult> {
    let b = bisect(problem, bracket.0, bracket.1, tol, opts)?;
    let value = b.value();
    let (crossing, profile) = cross_sonic(problem, value, &[&b.lo_report, &b.hi_report], opts)?;
    Ok(EigenResult {
        free: problem.param.free,
        value,
        exponents: problem.param.exponents(value),
        bracket: (b.lo, b.hi),
        iterations: b.iterations,
        sonic_xi: crossing.sonic.xi,
        residual: crossing.residual,
        residual_scale: crossing.residual_scale,
        crossing,
        profile,
    })
}

/// Local data at the sonic point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub sonic: SimilarityState,
    /// `(dR, dV, dPi) / dxi` along the continued branch.
    pub slope: [f64; 3],
    /// Both roots of the limiting-ratio quadratic.
    pub ratios: [f64; 2],
    pub residual: f64,
    pub residual_scale: f64,
    /// Normalized distance from the trajectory to the sonic locus.
    pub approach_distance: f64,
}

/// Sum of magnitudes of the terms of `N`, the local scale of the numerator.
fn numerator_scale(spec: &ProblemSpec, s: &SimilarityState, x: f64, c2: f64) -> f64 {
    let (a, b, k) = (spec.alpha(), spec.beta(), spec.k as f64);
    ((2.0 * a + b) * s.pi).abs() + (s.r * s.v).abs() * ((a * x).abs() + k * c2 / s.xi)
}

/// Closest approach of the trajectories to the locus `N = 0 = X^2 - C^2`.
///
/// Distance is `hypot(N / |N terms|, (X^2 - C^2) / (X^2 + C^2))`, which is
/// local and scale free, so neither a singular start nor a later blow-up
/// distorts it.
fn closest_to_sonic(spec: &ProblemSpec, reports: &[&ShootReport]) -> Result<(SimilarityState, f64, f64, f64, usize, usize)> {
    let mut best: Option<(SimilarityState, f64, f64, f64, usize, usize)> = None;
    for (ri, rep) in reports.iter().enumerate() {
        for (i, s) in rep.trajectory.iter().enumerate() {
            let Ok(d) = derived(spec, s) else { continue };
            let n_sc = numerator_scale(spec, s, d.x, d.c2);
            let d_sc = d.x * d.x + d.c2;
            if !(n_sc > 0.0 && d_sc > 0.0) {
                continue;
            }
            let m = (d.numerator / n_sc).hypot(d.delta / d_sc);
            if m.is_finite() && best.as_ref().is_none_or(|b| m < b.1) {
                best = Some((*s, m, d.numerator.abs(), n_sc, ri, i));
            }
        }
    }
    best.ok_or_else(|| Error::CrossingFailure("empty approach trajectory".into()))
}

/// Gauss-Newton projection onto `N = 0 = X^2 - C^2` with minimal scaled correction.
fn polish_sonic(spec: &ProblemSpec, guess: SimilarityState) -> Result<SimilarityState> {
    let sc = [guess.xi.abs(), guess.r.abs(), guess.v.abs().max(1e-3), guess.pi.abs().max(1e-3)];
    let mut z = [guess.xi, guess.r, guess.v, guess.pi];
    for _ in 0..60 {
        let s = to_state(&z);
        let d = derived(spec, &s)?;
        let (gn, gd) = gradients(spec, &s)?;
        let a: [f64; 4] = std::array::from_fn(|i| gn[i] * sc[i]);
        let b: [f64; 4] = std::array::from_fn(|i| gd[i] * sc[i]);
        let (aa, ab, bb) = (dot(&a, &a), dot(&a, &b), dot(&b, &b));
        let det = aa * bb - ab * ab;
        if !(det.abs() > 0.0) {
            return Err(Error::CrossingFailure("degenerate sonic locus".into()));
        }
        let (fn_, fd) = (d.numerator, d.delta);
        let l1 = (bb * fn_ - ab * fd) / det;
        let l2 = (aa * fd - ab * fn_) / det;
        let mut step = 0.0f64;
        for i in 0..4 {
            let dz = -(a[i] * l1 + b[i] * l2);
            z[i] += dz * sc[i];
            step = step.max(dz.abs());
        }
        if step < 1e-15 {
            break;
        }
    }
    let s = to_state(&z);
    derived(spec, &s)?;
    Ok(s)
}

fn dot(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Slope `(R', V', Pi')` at a sonic point for a given limiting ratio `c = N / Delta`.
fn branch_slope(spec: &ProblemSpec, s: &SimilarityState, c: f64) -> [f64; 3] {
    let (a, b, k) = (spec.alpha(), spec.beta(), spec.k as f64);
    let x = (1.0 + a) * s.xi + s.v;
    let w = [1.0 / x, -1.0 / s.r, x];
    let add = [(b - k * s.v / s.xi) * s.r / x, 0.0, a * s.r * s.v];
    std::array::from_fn(|i| c * w[i] + add[i])
}

/// Roots of the quadratic for `c = lim N / (X^2 - C^2)` at a sonic point.
fn sonic_ratios(spec: &ProblemSpec, s: &SimilarityState) -> Result<Option<[f64; 2]>> {
    let (gn, gd) = gradients(spec, s)?;
    let w = branch_slope(spec, s, 1.0);
    let a0 = branch_slope(spec, s, 0.0);
    let wv: [f64; 3] = std::array::from_fn(|i| w[i] - a0[i]);
    let dd = |g: &[f64; 4], v: &[f64; 3]| g[1] * v[0] + g[2] * v[1] + g[3] * v[2];
    let qa = dd(&gd, &wv);
    let qb = gd[0] + dd(&gd, &a0) - dd(&gn, &wv);
    let qc = -(gn[0] + dd(&gn, &a0));
    if qa.abs() < 1e-300 {
        return Ok(Some([-qc / qb, -qc / qb]));
    }
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return Ok(None);
    }
    let q = -0.5 * (qb + qb.signum() * disc.sqrt());
    let r1 = q / qa;
    let r2 = if q != 0.0 { qc / q } else { -qb / qa - r1 };
    Ok(Some([r1, r2]))
}

/// Continues the converged trajectory through the sonic point and assembles the profile.
pub fn cross_sonic(
    problem: &EigenProblem,
    value: f64,
    approach: &[&ShootReport],
    opts: &SolverOptions,
) -> Result<(Crossing, SolutionProfile)> {
    let spec = problem.spec_at(value)?;
    let (start, scale) = start_state(&spec, opts)?;
    let delta_stop = opts.delta_stop * scale;
    let (near, dist, residual, residual_scale, ri, idx) = closest_to_sonic(&spec, approach)?;
    if dist > opts.crossing_tol {
        return Err(Error::CrossingFailure(format!(
            "trajectory stays {dist:.3e} (normalized) away from the sonic locus"
        )));
    }
    let sonic = polish_sonic(&spec, near)?;
    let ratios = sonic_ratios(&spec, &sonic)?
        .ok_or_else(|| Error::CrossingFailure("sonic point is a spiral: no real crossing slope".into()))?;

    // Secant along the approach trajectory picks the branch it arrived on.
    let traj = &approach[ri].trajectory;
    let xi_star = sonic.xi;
    let prev = traj[..idx]
        .iter()
        .rev()
        .find(|s| (xi_star - s.xi) > 100.0 * opts.h_jump * xi_star)
        .copied()
        .unwrap_or(traj[0]);
    let secant: [f64; 3] = std::array::from_fn(|i| (sonic.fields()[i] - prev.fields()[i]) / (xi_star - prev.xi));
    let fsc = [sonic.r.abs(), sonic.v.abs().max(1e-3), sonic.pi.abs().max(1e-3)];
    let miss = |c: f64| {
        let y = branch_slope(&spec, &sonic, c);
        (0..3).map(|i| ((y[i] - secant[i]) * xi_star / fsc[i]).powi(2)).sum::<f64>()
    };
    let c = if miss(ratios[0]) <= miss(ratios[1]) { ratios[0] } else { ratios[1] };

    // Re-integrate at the converged value. When this trajectory meets
    // X^2 = C^2 next to the projected point, its own event state is the sonic
    // sample so that neighbouring samples come from one trajectory.
    let h = opts.h_jump * xi_star;
    let pre = integrate_segment(&spec, start, xi_star + 10.0 * h, 0.0, opts, true)?;
    let event = pre.states.last().copied().filter(|e| pre.end == StopReason::SonicApproach && (e.xi - xi_star).abs() <= h);
    let (sonic, pre_states) = match event {
        Some(e) => (e, pre.states.iter().take_while(|s| s.xi <= e.xi - h).copied().collect::<Vec<_>>()),
        None => {
            let seg = integrate_segment(&spec, start, xi_star - h, 0.0, opts, true)?;
            let reached = seg.states.last().map(|s| s.xi).unwrap_or(start.xi);
            if reached < (xi_star - h) * (1.0 - 1e-12) {
                return Err(Error::CrossingFailure(format!(
                    "approach integration stopped at xi = {reached} before the sonic point ({}: {})",
                    seg.end, seg.detail
                )));
            }
            (sonic, seg.states)
        }
    };
    let xi_star = sonic.xi;
    let slope = branch_slope(&spec, &sonic, c);
    let y_b: [f64; 3] = std::array::from_fn(|i| sonic.fields()[i] + slope[i] * h);
    let sb = SimilarityState::from_fields(xi_star + h, y_b);
    let db = derived(&spec, &sb)?;
    if db.delta <= 0.0 || db.delta.abs() < delta_stop {
        return Err(Error::CrossingFailure(format!(
            "restart state is not supersonic (X^2 - C^2 = {:e})",
            db.delta
        )));
    }
    let xi_max = opts.xi_max_factor * spec.xi_s()?;
    let post = integrate_segment(&spec, sb, xi_max, delta_stop, opts, true)?;
    if post.end != StopReason::ReachedXiMax {
        return Err(Error::CrossingFailure(format!(
            "continued integration stopped at xi = {} ({}{})",
            post.states.last().map(|s| s.xi).unwrap_or(sb.xi),
            post.end,
            if post.detail.is_empty() { String::new() } else { format!(": {}", post.detail) }
        )));
    }

    let mut samples = Vec::with_capacity(pre.states.len() + post.states.len() + 2);
    if spec.kind == ProblemKind::Cavity {
        samples.push(jump_init_cavity(&spec)?.post_state());
    }
    samples.extend(pre_states);
    samples.push(sonic);
    samples.extend(post.states.iter().copied());
    samples.dedup_by(|a, b| a.xi <= b.xi);
    let profile = SolutionProfile::new(&spec, samples, Some(xi_star))?;
    let crossing = Crossing { sonic, slope, ratios, residual, residual_scale, approach_distance: dist };
    Ok((crossing, profile))
}
