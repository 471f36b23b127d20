//! Independent checks of a converged profile against the flow equations,
//! the jump and entropy conditions, and the conservation form.

use serde::{Deserialize, Serialize};

use crate::eos::ProblemKind;
use crate::error::{Error, Result};
use crate::reconstruct::{to_physical, PhysicalSample, Region, SolutionProfile};
use crate::similarity::{conservation_residuals, derived, rhs, SimilarityState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub t_probe: f64,
    /// Relative time step of the central differences.
    pub h_t: f64,
    /// Relative radial step of the central differences.
    pub h_r: f64,
    pub n_grid: usize,
    /// Grid spans `[lo_factor, hi_factor] * xi_s` in similarity coordinates.
    pub lo_factor: f64,
    pub hi_factor: f64,
    pub pde_tol: f64,
    pub conservation_tol: f64,
    /// Samples closer than this (relative) to the sonic point or the jump are skipped.
    pub exclusion: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            t_probe: -1.0,
            h_t: 1e-5,
            h_r: 1e-5,
            n_grid: 50,
            lo_factor: 1.05,
            hi_factor: 100.0,
            pde_tol: 1e-5,
            conservation_tol: 1e-5,
            exclusion: 1e-3,
        }
    }
}

/// Largest relative residuals of the mass, momentum and energy equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdeResidual {
    pub mass: f64,
    pub momentum: f64,
    pub energy: f64,
}

impl PdeResidual {
    pub fn max(&self) -> f64 {
        self.mass.max(self.momentum).max(self.energy)
    }
}

/// Log-spaced radii inside the disturbed region at `t`.
pub fn default_grid(profile: &SolutionProfile, t: f64, opts: &VerifyOptions) -> Vec<f64> {
    let scale = t.abs().powf(1.0 + profile.alpha());
    let lo = opts.lo_factor * profile.xi_s;
    let hi = (opts.hi_factor * profile.xi_s).min(0.5 * profile.xi_last());
    let n = opts.n_grid.max(2);
    (0..n)
        .map(|i| scale * lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

fn rel(terms: &[f64]) -> f64 {
    let sum: f64 = terms.iter().sum();
    let scale: f64 = terms.iter().map(|v| v.abs()).sum();
    if scale > 0.0 {
        sum.abs() / scale
    } else {
        0.0
    }
}

/// Central-difference residuals of the three flow equations on `r_grid` at `t_probe`.
pub fn pde_residual(
    profile: &SolutionProfile,
    t_probe: f64,
    r_grid: &[f64],
    h_t: f64,
    h_r: f64,
) -> Result<PdeResidual> {
    let eos = &profile.spec.eos;
    let k = profile.spec.k as f64;
    let mut out = PdeResidual { mass: 0.0, momentum: 0.0, energy: 0.0 };
    for &r in r_grid {
        let dt = h_t * t_probe.abs();
        let dr = h_r * r;
        let c = to_physical(profile, r, t_probe)?;
        let pts: [PhysicalSample; 4] = [
            to_physical(profile, r + dr, t_probe)?,
            to_physical(profile, r - dr, t_probe)?,
            to_physical(profile, r, t_probe + dt)?,
            to_physical(profile, r, t_probe - dt)?,
        ];
        if pts.iter().any(|p| p.region != c.region || p.extrapolated != c.extrapolated) {
            return Err(Error::Grid(format!("stencil at r = {r} crosses the jump or the sampled range")));
        }
        if c.region != Region::Disturbed {
            continue;
        }
        let [rp, rm, tp, tm] = pts;
        let d_r = |f: fn(&PhysicalSample) -> f64| (f(&rp) - f(&rm)) / (2.0 * dr);
        let d_t = |f: fn(&PhysicalSample) -> f64| (f(&tp) - f(&tm)) / (2.0 * dt);
        let (rho_r, u_r, p_r) = (d_r(|s| s.rho), d_r(|s| s.u), d_r(|s| s.p));
        let (rho_t, u_t, p_t) = (d_t(|s| s.rho), d_t(|s| s.u), d_t(|s| s.p));
        let ks = eos.bulk_modulus(c.p, c.rho)?;
        let div = [u_r, k * c.u / r];
        out.mass = out.mass.max(rel(&[rho_t, c.u * rho_r, c.rho * div[0], c.rho * div[1]]));
        out.momentum = out.momentum.max(rel(&[u_t, c.u * u_r, p_r / c.rho]));
        out.energy = out.energy.max(rel(&[p_t, c.u * p_r, ks * div[0], ks * div[1]]));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyCheck {
    pub ok: bool,
    /// Smallest `C - |X|` on the checked range.
    #[serde(deserialize_with = "crate::serde_num::f64_or_nan")]
    pub margin: f64,
    #[serde(deserialize_with = "crate::serde_num::f64_or_nan")]
    pub margin_xi: f64,
    /// The jump moves into its pre-jump state supersonically (always, as that sound speed is 0).
    pub upstream_supersonic: bool,
    /// Fluid behind the jump moves inward.
    pub inward: bool,
}

/// `|X| < C` just behind the jump (shock) or on the fluid side up to the sonic point (cavity).
pub fn entropy_condition(profile: &SolutionProfile) -> Result<EntropyCheck> {
    let spec = &profile.spec;
    let first = profile.samples[0];
    let upstream_x = (1.0 + spec.alpha()) * profile.xi_s;
    let inward = first.v < 0.0;
    let candidates: Vec<SimilarityState> = match spec.kind {
        ProblemKind::Shock => vec![first],
        ProblemKind::Cavity => {
            let end = profile.sonic_xi.unwrap_or(profile.xi_last());
            profile.samples.iter().skip(1).filter(|s| s.xi < end * (1.0 - 1e-12)).copied().collect()
        }
    };
    let mut margin = f64::INFINITY;
    let mut margin_xi = f64::NAN;
    for s in &candidates {
        let d = derived(spec, s)?;
        let m = d.c2.max(0.0).sqrt() - d.x.abs();
        if m < margin {
            margin = m;
            margin_xi = s.xi;
        }
    }
    Ok(EntropyCheck {
        ok: margin > 0.0 && inward && !candidates.is_empty(),
        margin,
        margin_xi,
        upstream_supersonic: upstream_x.abs() > 0.0,
        inward,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IvtCheck {
    pub ok: bool,
    pub near_xi: f64,
    #[serde(deserialize_with = "crate::serde_num::f64_or_nan")]
    pub near_delta: f64,
    pub far_xi: f64,
    #[serde(deserialize_with = "crate::serde_num::f64_or_nan")]
    pub far_delta: f64,
    /// Neighbouring samples where `X^2 - C^2` turns positive.
    pub bracket: Option<(f64, f64)>,
    pub sonic_xi: Option<f64>,
}

/// `X^2 - C^2` is negative behind the jump, positive at `100 xi_s`, and changes sign at the sonic point.
pub fn ivt_check(profile: &SolutionProfile) -> Result<IvtCheck> {
    let spec = &profile.spec;
    let near = match spec.kind {
        ProblemKind::Shock => profile.samples[0],
        ProblemKind::Cavity => profile.samples[1],
    };
    let near_delta = derived(spec, &near)?.delta;
    let far_xi = 100.0 * profile.xi_s;
    let (far, ext) = profile.state_at(far_xi)?;
    let far_delta = if ext { f64::NAN } else { derived(spec, &far)?.delta };
    let deltas: Vec<f64> = profile.samples.iter().map(|s| derived(spec, s).map(|d| d.delta)).collect::<Result<_>>()?;
    let scale = deltas.iter().map(|d| d.abs()).fold(0.0, f64::max);
    let mut last_neg = None;
    let mut bracket = None;
    for (s, d) in profile.samples.iter().zip(&deltas) {
        if d.abs() <= 1e-12 * scale {
            continue;
        }
        if *d < 0.0 {
            last_neg = Some(s.xi);
        } else if let Some(lo) = last_neg {
            bracket = Some((lo, s.xi));
            break;
        }
    }
    let inside = match (bracket, profile.sonic_xi) {
        (Some((a, b)), Some(z)) => z >= a && z <= b,
        _ => false,
    };
    Ok(IvtCheck {
        ok: near_delta < 0.0 && far_delta > 0.0 && inside,
        near_xi: near.xi,
        near_delta,
        far_xi,
        far_delta,
        bracket,
        sonic_xi: profile.sonic_xi,
    })
}

fn excluded(profile: &SolutionProfile, xi: f64, width: f64) -> bool {
    xi <= profile.xi_s * (1.0 + width) || profile.sonic_xi.is_some_and(|z| (xi - z).abs() <= width * z)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyIndicator {
    pub xi: Vec<f64>,
    /// `R' C^2 - Pi'`.
    pub values: Vec<f64>,
    /// `beta R C^2 / X - (beta + 2 alpha) Pi / X`.
    pub expected: Vec<f64>,
    /// +1 or -1 when single-signed, 0 when identically zero or mixed.
    pub sign: i8,
    pub mixed: bool,
}

/// Samples `R' C^2 - Pi'` away from the jump and the sonic point.
pub fn entropy_indicator(profile: &SolutionProfile, exclusion: f64) -> Result<EntropyIndicator> {
    let spec = &profile.spec;
    let (a, b) = (spec.alpha(), spec.beta());
    let mut out = EntropyIndicator { xi: vec![], values: vec![], expected: vec![], sign: 0, mixed: false };
    for s in &profile.samples {
        if excluded(profile, s.xi, exclusion) || s.xi > profile.xi_last() {
            continue;
        }
        let Ok(d) = rhs(spec, s) else { continue };
        let dv = derived(spec, s)?;
        out.xi.push(s.xi);
        out.values.push(d[0] * dv.c2 - d[2]);
        out.expected.push(b * s.r * dv.c2 / dv.x - (b + 2.0 * a) * s.pi / dv.x);
    }
    let scale = out.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let pos = out.values.iter().any(|v| *v > 1e-12 * scale);
    let neg = out.values.iter().any(|v| *v < -1e-12 * scale);
    out.mixed = pos && neg;
    out.sign = match (pos, neg) {
        (true, false) => 1,
        (false, true) => -1,
        _ => 0,
    };
    Ok(out)
}

/// Largest relative conservation-form residuals using interpolant
/// derivatives at midpoints between samples.
pub fn conservation_norms(profile: &SolutionProfile, exclusion: f64) -> Result<[f64; 3]> {
    let spec = &profile.spec;
    let mut out = [0.0f64; 3];
    for w in profile.samples.windows(2) {
        let xi = (w[0].xi * w[1].xi).sqrt();
        if excluded(profile, xi, exclusion) {
            continue;
        }
        let (s, _) = profile.state_at(xi)?;
        let d = profile.derivative_at(xi)?;
        let c = conservation_residuals(spec, &s, &d)?;
        let r = [c.mass, c.momentum, c.entropy];
        for i in 0..3 {
            if c.scales[i] > 0.0 {
                out[i] = out[i].max(r[i].abs() / c.scales[i]);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub pde_residual_norms: PdeResidual,
    pub entropy: EntropyCheck,
    pub ivt: IvtCheck,
    pub conservation_norms: [f64; 3],
    pub indicator_sign: i8,
    pub indicator_mixed: bool,
    pub passed: bool,
    pub notes: Vec<String>,
}

/// Runs every check; cavity entropy margins are reported without failing the run.
pub fn verify(profile: &SolutionProfile, opts: &VerifyOptions) -> Result<VerificationReport> {
    let grid = default_grid(profile, opts.t_probe, opts);
    let pde = pde_residual(profile, opts.t_probe, &grid, opts.h_t, opts.h_r)?;
    let entropy = entropy_condition(profile)?;
    let ivt = ivt_check(profile)?;
    let cons = conservation_norms(profile, opts.exclusion)?;
    let ind = entropy_indicator(profile, opts.exclusion)?;
    let mut notes = Vec::new();
    let pde_ok = pde.max() < opts.pde_tol;
    if !pde_ok {
        notes.push(format!("flow-equation residual {:.3e} exceeds {:.1e}", pde.max(), opts.pde_tol));
    }
    let cons_ok = cons.iter().all(|c| *c < opts.conservation_tol);
    if !cons_ok {
        notes.push(format!("conservation-form residuals {:.3e} {:.3e} {:.3e} exceed {:.1e}", cons[0], cons[1], cons[2], opts.conservation_tol));
    }
    if !entropy.ok {
        notes.push(format!("entropy condition margin {:.3e} at xi = {}", entropy.margin, entropy.margin_xi));
    }
    if !ivt.ok {
        notes.push("sonic discriminant does not change sign as expected".into());
    }
    if ind.mixed {
        notes.push("entropy indicator changes sign".into());
    }
    let entropy_gate = match profile.kind() {
        ProblemKind::Shock => entropy.ok,
        ProblemKind::Cavity => true,
    };
    Ok(VerificationReport {
        pde_residual_norms: pde,
        entropy,
        ivt,
        conservation_norms: cons,
        indicator_sign: ind.sign,
        indicator_mixed: ind.mixed,
        passed: pde_ok && cons_ok && ivt.ok && entropy_gate,
        notes,
    })
}
