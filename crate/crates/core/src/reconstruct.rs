//! Similarity profiles and their mapping back to physical `(r, t)` fields.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eos::ProblemKind;
use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;
use crate::similarity::{rhs, ProblemSpec, SimilarityState};

/// A sampled solution of the similarity equations.
///
/// The interpolant is a cubic Hermite curve in `ln xi` per field, using the
/// ODE right-hand side as knot slopes where it is regular and three-point
/// estimates elsewhere, limited on monotone intervals.
#[derive(Debug, Clone)]
pub struct SolutionProfile {
    pub spec: ProblemSpec,
    pub xi_s: f64,
    pub sonic_xi: Option<f64>,
    pub samples: Vec<SimilarityState>,
    interp: [MonotoneCubic; 3],
}

fn three_point(x: &[f64], y: &[f64], i: usize) -> f64 {
    let n = x.len();
    if n == 2 {
        return (y[1] - y[0]) / (x[1] - x[0]);
    }
    let (a, b, c) = if i == 0 {
        (0, 1, 2)
    } else if i == n - 1 {
        (n - 3, n - 2, n - 1)
    } else {
        (i - 1, i, i + 1)
    };
    // Derivative of the quadratic through three points, evaluated at x[i].
    let t = x[i];
    let la = ((t - x[b]) + (t - x[c])) / ((x[a] - x[b]) * (x[a] - x[c]));
    let lb = ((t - x[a]) + (t - x[c])) / ((x[b] - x[a]) * (x[b] - x[c]));
    let lc = ((t - x[a]) + (t - x[b])) / ((x[c] - x[a]) * (x[c] - x[b]));
    la * y[a] + lb * y[b] + lc * y[c]
}

impl SolutionProfile {
    /// Builds a profile; `spec` must carry the converged exponents.
    pub fn new(spec: &ProblemSpec, samples: Vec<SimilarityState>, sonic_xi: Option<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidParameters("a profile needs at least two samples".into()));
        }
        if samples.windows(2).any(|w| !(w[1].xi > w[0].xi)) {
            return Err(Error::InvalidParameters("profile xi samples must be strictly increasing".into()));
        }
        let xi_s = spec.xi_s()?;
        if (samples[0].xi - xi_s).abs() > 1e-12 * xi_s {
            return Err(Error::InvalidParameters(format!(
                "first sample xi = {} differs from the jump coordinate {xi_s}",
                samples[0].xi
            )));
        }
        let x: Vec<f64> = samples.iter().map(|s| s.xi.ln()).collect();
        let cols: [Vec<f64>; 3] = std::array::from_fn(|j| samples.iter().map(|s| s.fields()[j]).collect());
        let mut slopes: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; samples.len()]);
        for (i, s) in samples.iter().enumerate() {
            let near_sonic = sonic_xi.is_some_and(|z| (s.xi - z).abs() <= 1e-12 * z);
            let d = if near_sonic { None } else { rhs(spec, s).ok().filter(|d| d.iter().all(|v| v.is_finite())) };
            for j in 0..3 {
                slopes[j][i] = match d {
                    Some(d) => d[j] * s.xi,
                    None => three_point(&x, &cols[j], i),
                };
            }
        }
        let [s0, s1, s2] = slopes;
        let [c0, c1, c2] = cols;
        let interp = [
            MonotoneCubic::with_slopes(x.clone(), c0, s0)?,
            MonotoneCubic::with_slopes(x.clone(), c1, s1)?,
            MonotoneCubic::with_slopes(x, c2, s2)?,
        ];
        Ok(SolutionProfile { spec: spec.clone(), xi_s, sonic_xi, samples, interp })
    }

    pub fn alpha(&self) -> f64 {
        self.spec.alpha()
    }

    pub fn beta(&self) -> f64 {
        self.spec.beta()
    }

    pub fn kind(&self) -> ProblemKind {
        self.spec.kind
    }

    pub fn xi_last(&self) -> f64 {
        self.samples[self.samples.len() - 1].xi
    }

    /// Interpolated state at `xi >= xi_s`; beyond the last sample the last
    /// values are held and the result is flagged as extrapolated.
    pub fn state_at(&self, xi: f64) -> Result<(SimilarityState, bool)> {
        if !(xi >= self.xi_s * (1.0 - 1e-14)) {
            return Err(Error::OutsideRegion { xi, xi_s: self.xi_s });
        }
        let last = self.samples[self.samples.len() - 1];
        if xi > last.xi {
            return Ok((SimilarityState::new(xi, last.r, last.v, last.pi), true));
        }
        let x = xi.ln();
        Ok((
            SimilarityState::new(xi, self.interp[0].eval(x), self.interp[1].eval(x), self.interp[2].eval(x)),
            false,
        ))
    }

    /// Interpolated `(dR, dV, dPi) / dxi`.
    pub fn derivative_at(&self, xi: f64) -> Result<[f64; 3]> {
        let (_, ext) = self.state_at(xi)?;
        if ext {
            return Ok([0.0; 3]);
        }
        let x = xi.ln();
        Ok(std::array::from_fn(|j| self.interp[j].eval_with_deriv(x).1 / xi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Vacuum,
    Upstream,
    Disturbed,
    /// The point could not be evaluated (e.g. `t >= 0`).
    Invalid,
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Region::Vacuum => "vacuum",
            Region::Upstream => "upstream",
            Region::Disturbed => "disturbed",
            Region::Invalid => "invalid",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalSample {
    pub r: f64,
    pub t: f64,
    pub rho: f64,
    pub u: f64,
    pub p: f64,
    pub xi: f64,
    pub region: Region,
    /// Fields come from the held far-field values rather than the interpolant.
    pub extrapolated: bool,
}

/// Physical fields at `(r, t)` for `t < 0`.
pub fn to_physical(profile: &SolutionProfile, r: f64, t: f64) -> Result<PhysicalSample> {
    if !(t < 0.0) {
        return Err(Error::Grid(format!("only t < 0 is supported, got t = {t}")));
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::Grid(format!("radius must be finite and non-negative, got {r}")));
    }
    let tau = -t;
    let (a, b) = (profile.alpha(), profile.beta());
    let xi = r * tau.powf(-(1.0 + a));
    let p0 = profile.spec.eos.p0;
    if xi < profile.xi_s {
        return Ok(match profile.kind() {
            ProblemKind::Cavity => {
                PhysicalSample { r, t, rho: 0.0, u: 0.0, p: 0.0, xi, region: Region::Vacuum, extrapolated: false }
            }
            ProblemKind::Shock => PhysicalSample {
                r,
                t,
                rho: profile.spec.rho0,
                u: 0.0,
                p: p0,
                xi,
                region: Region::Upstream,
                extrapolated: false,
            },
        });
    }
    let (s, extrapolated) = profile.state_at(xi)?;
    Ok(PhysicalSample {
        r,
        t,
        rho: tau.powf(b) * s.r,
        u: tau.powf(a) * s.v,
        p: p0 + tau.powf(2.0 * a + b) * s.pi,
        xi,
        region: Region::Disturbed,
        extrapolated,
    })
}

/// Jump radius `xi_s |t|^(1 + alpha)`.
pub fn jump_trajectory(profile: &SolutionProfile, t: f64) -> f64 {
    profile.xi_s * t.abs().powf(1.0 + profile.alpha())
}

/// Jump velocity `-(1 + alpha) xi_s |t|^alpha` for `t < 0`.
pub fn jump_speed(profile: &SolutionProfile, t: f64) -> Result<f64> {
    if !(t < 0.0) {
        return Err(Error::Grid(format!("jump speed needs t < 0, got {t}")));
    }
    Ok(-(1.0 + profile.alpha()) * profile.xi_s * (-t).powf(profile.alpha()))
}

/// Row-major table over `(t, r)`; failures become `Region::Invalid` rows.
pub fn sample_grid(profile: &SolutionProfile, r_grid: &[f64], t_list: &[f64]) -> Vec<PhysicalSample> {
    t_list
        .par_iter()
        .map(|&t| {
            r_grid
                .iter()
                .map(|&r| {
                    to_physical(profile, r, t).unwrap_or(PhysicalSample {
                        r,
                        t,
                        rho: f64::NAN,
                        u: f64::NAN,
                        p: f64::NAN,
                        xi: f64::NAN,
                        region: Region::Invalid,
                        extrapolated: false,
                    })
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .concat()
}
