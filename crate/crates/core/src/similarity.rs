//! Similarity phase space: state, reduced ODE system, sonic quantities,
//! jump initial states and the conservation-form diagnostics.
//!
//! With `tau = |t|` and `t < 0`, the similarity variables are
//! `xi = r tau^-(1+alpha)`, `rho = tau^beta R`, `u = tau^alpha V` and
//! `p - p0 = tau^(2 alpha + beta) Pi`.

use serde::{Deserialize, Serialize};

use crate::eos::{ConstraintSet, EosModel, ProblemKind};
use crate::error::{Error, Result};
use crate::roots::brent;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub alpha: f64,
    pub beta: f64,
}

/// Which exponent the eigenvalue search varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FreeParam {
    Alpha,
    Beta,
}

/// Affine map from the free parameter to `(alpha, beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Parameterization {
    pub free: FreeParam,
    base: Exponents,
    dir: (f64, f64),
}

impl Parameterization {
    pub fn exponents(&self, value: f64) -> Exponents {
        Exponents {
            alpha: self.base.alpha + value * self.dir.0,
            beta: self.base.beta + value * self.dir.1,
        }
    }

    /// Value of the free parameter for the given exponents.
    pub fn value_of(&self, e: Exponents) -> f64 {
        match self.free {
            FreeParam::Alpha => e.alpha,
            FreeParam::Beta => e.beta,
        }
    }
}

impl ConstraintSet {
    /// Solves the relations for all exponents in terms of `free`.
    ///
    /// With two free dimensions the other exponent must be supplied in
    /// `fixed`. With one it is implied by the relation and `fixed` must agree
    /// with it if given.
    pub fn parameterize(&self, free: FreeParam, fixed: Option<f64>) -> Result<Parameterization> {
        let unit = match free {
            FreeParam::Alpha => (1.0, 0.0),
            FreeParam::Beta => (0.0, 1.0),
        };
        let zero = Exponents { alpha: 0.0, beta: 0.0 };
        match self.free_dims {
            0 => Err(Error::Constraint(format!(
                "{} / {} admits no free scaling exponent",
                self.family, self.kind
            ))),
            2 => {
                let other = fixed.ok_or_else(|| {
                    Error::Constraint("two free exponents: the non-searched exponent must be fixed".into())
                })?;
                let base = match free {
                    FreeParam::Alpha => Exponents { alpha: 0.0, beta: other },
                    FreeParam::Beta => Exponents { alpha: other, beta: 0.0 },
                };
                Ok(Parameterization { free, base, dir: unit })
            }
            _ => {
                let r = &self.relations[0];
                let dir = match free {
                    FreeParam::Alpha if r.a_beta != 0.0 => (1.0, -r.a_alpha / r.a_beta),
                    FreeParam::Beta if r.a_alpha != 0.0 => (-r.a_beta / r.a_alpha, 1.0),
                    _ => {
                        return Err(Error::Constraint(format!(
                            "relation '{}' pins the requested free exponent",
                            r.label
                        )))
                    }
                };
                let p = Parameterization { free, base: zero, dir };
                if let Some(v) = fixed {
                    let probe = p.exponents(1.0);
                    let implied = match free {
                        FreeParam::Alpha => probe.beta,
                        FreeParam::Beta => probe.alpha,
                    };
                    if implied == 0.0 && v != 0.0 {
                        return Err(Error::Constraint(format!(
                            "fixed exponent {v} conflicts with relation '{}'",
                            r.label
                        )));
                    }
                }
                Ok(p)
            }
        }
    }
}

/// A point `(xi, R, V, Pi)` of the similarity phase space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityState {
    pub xi: f64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "Pi")]
    pub pi: f64,
}

impl SimilarityState {
    pub fn new(xi: f64, r: f64, v: f64, pi: f64) -> Self {
        SimilarityState { xi, r, v, pi }
    }

    pub fn fields(&self) -> [f64; 3] {
        [self.r, self.v, self.pi]
    }

    pub fn from_fields(xi: f64, y: [f64; 3]) -> Self {
        SimilarityState { xi, r: y[0], v: y[1], pi: y[2] }
    }
}

/// How the jump coordinate `xi_s` is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpNormalization {
    /// Fixed `xi_s`.
    Coordinate(f64),
    /// `xi_s = 1 / (1 + alpha)` so that the scaled jump speed is `-1`.
    UnitSpeed,
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    /// 1 cylindrical, 2 spherical.
    pub k: u8,
    pub eos: EosModel,
    pub exponents: Exponents,
    /// Upstream density for shocks.
    pub rho0: f64,
    pub jump: JumpNormalization,
    /// Fluid density at the cavity surface.
    pub surface_density: f64,
    /// Relative floor on `|X (X^2 - C^2)|` below which `rhs` reports a singular point.
    pub singular_floor: f64,
}

impl ProblemSpec {
    pub fn new(kind: ProblemKind, k: u8, eos: EosModel, exponents: Exponents) -> Result<Self> {
        if k != 1 && k != 2 {
            return Err(Error::InvalidParameters(format!("geometry index must be 1 or 2, got {k}")));
        }
        let jump = match kind {
            ProblemKind::Cavity => JumpNormalization::UnitSpeed,
            ProblemKind::Shock => JumpNormalization::Coordinate(1.0),
        };
        let spec = ProblemSpec {
            kind,
            k,
            eos,
            exponents,
            rho0: 1.0,
            jump,
            surface_density: 1.0,
            singular_floor: 1e-30,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let e = self.exponents;
        if !(e.alpha.is_finite() && e.beta.is_finite()) {
            return Err(Error::InvalidExponent("exponents must be finite".into()));
        }
        if self.kind == ProblemKind::Shock {
            if e.beta != 0.0 {
                return Err(Error::InvalidExponent(format!("shock problems need beta = 0, got {}", e.beta)));
            }
            if !(self.rho0 > 0.0) {
                return Err(Error::InvalidParameters(format!("rho0 must be positive, got {}", self.rho0)));
            }
        }
        if let JumpNormalization::Coordinate(x) = self.jump {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::InvalidParameters(format!("xi_s must be positive, got {x}")));
            }
        }
        if !(self.surface_density > 0.0) {
            return Err(Error::InvalidParameters("surface density must be positive".into()));
        }
        Ok(())
    }

    pub fn with_exponents(&self, exponents: Exponents) -> Self {
        ProblemSpec { exponents, ..self.clone() }
    }

    pub fn constraints(&self) -> ConstraintSet {
        self.eos.classify_constraints(self.kind)
    }

    pub fn alpha(&self) -> f64 {
        self.exponents.alpha
    }

    pub fn beta(&self) -> f64 {
        self.exponents.beta
    }

    /// Jump coordinate in similarity space.
    pub fn xi_s(&self) -> Result<f64> {
        if !(self.alpha() > -1.0) {
            return Err(Error::InvalidExponent(format!("alpha = {} must exceed -1", self.alpha())));
        }
        Ok(match self.jump {
            JumpNormalization::Coordinate(x) => x,
            JumpNormalization::UnitSpeed => 1.0 / (1.0 + self.alpha()),
        })
    }

    /// Scaled pressure to physical-style pressure for EOS calls.
    fn f_at(&self, s: &SimilarityState) -> Result<f64> {
        self.eos.eval_f(self.eos.p0 + s.pi, s.r)
    }
}

/// Derived quantities at a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derived {
    pub x: f64,
    pub c2: f64,
    pub delta: f64,
    pub numerator: f64,
    pub f: f64,
}

pub fn group_velocity(spec: &ProblemSpec, s: &SimilarityState) -> f64 {
    (1.0 + spec.alpha()) * s.xi + s.v
}

fn check_state(s: &SimilarityState) -> Result<()> {
    if !(s.xi > 0.0) {
        return Err(Error::NonPhysical { xi: s.xi, what: "xi must be positive" });
    }
    if !(s.r > 0.0) {
        return Err(Error::NonPhysical { xi: s.xi, what: "R must be positive" });
    }
    if !(s.v.is_finite() && s.pi.is_finite()) {
        return Err(Error::NonPhysical { xi: s.xi, what: "non-finite state" });
    }
    Ok(())
}

pub fn derived(spec: &ProblemSpec, s: &SimilarityState) -> Result<Derived> {
    check_state(s)?;
    let f = spec.f_at(s)?;
    let (a, b, k) = (spec.alpha(), spec.beta(), spec.k as f64);
    let x = group_velocity(spec, s);
    let c2 = s.pi * f / s.r;
    let numerator = (2.0 * a + b) * s.pi - s.r * s.v * (a * x + k * c2 / s.xi);
    Ok(Derived { x, c2, delta: x * x - c2, numerator, f })
}

/// Eigenvalue numerator `N = (2a + b) Pi - R V (a X + k C^2 / xi)`.
pub fn numerator(spec: &ProblemSpec, s: &SimilarityState) -> Result<f64> {
    Ok(derived(spec, s)?.numerator)
}

/// Sonic discriminant `X^2 - C^2`.
pub fn sonic_discriminant(spec: &ProblemSpec, s: &SimilarityState) -> Result<f64> {
    Ok(derived(spec, s)?.delta)
}

/// `(dR, dV, dPi) / dxi`.
pub fn rhs(spec: &ProblemSpec, s: &SimilarityState) -> Result<[f64; 3]> {
    let d = derived(spec, s)?;
    let den = d.x * d.delta;
    let scale = ((1.0 + spec.alpha().abs()) * s.xi + s.v.abs() + d.c2.sqrt()).powi(3);
    if !(den.abs() > spec.singular_floor * scale) {
        return Err(Error::SingularPoint { xi: s.xi, value: den.abs() });
    }
    Ok(rhs_from(spec, s, &d))
}

fn rhs_from(spec: &ProblemSpec, s: &SimilarityState, d: &Derived) -> [f64; 3] {
    let (a, b, k) = (spec.alpha(), spec.beta(), spec.k as f64);
    let common = d.numerator / (s.r * d.x * d.delta);
    [
        common * s.r + (b - k * s.v / s.xi) * s.r / d.x,
        -common * d.x,
        common * s.r * d.x * d.x + a * s.r * s.v,
    ]
}

/// Numerator-cleared field with `dxi/dtau = R X (X^2 - C^2)`, order `(xi, R, V, Pi)`.
pub fn rhs_desingularized(spec: &ProblemSpec, s: &SimilarityState) -> Result<[f64; 4]> {
    let d = derived(spec, s)?;
    let (a, b, k) = (spec.alpha(), spec.beta(), spec.k as f64);
    let dd = s.r * d.x * d.delta;
    let n = d.numerator;
    Ok([
        dd,
        n * s.r + (b - k * s.v / s.xi) * s.r * s.r * d.delta,
        -n * d.x,
        n * s.r * d.x * d.x + a * s.r * s.v * dd,
    ])
}

/// Partials `(d/dxi, d/dR, d/dV, d/dPi)` of `N` and of `X^2 - C^2`.
pub fn gradients(spec: &ProblemSpec, s: &SimilarityState) -> Result<([f64; 4], [f64; 4])> {
    check_state(s)?;
    let (f, f_p, f_rho) = spec.eos.f_grad(spec.eos.p0 + s.pi, s.r)?;
    let (a, b, k) = (spec.alpha(), spec.beta(), spec.k as f64);
    let x = group_velocity(spec, s);
    let c2 = s.pi * f / s.r;
    let c2_r = s.pi * f_rho / s.r - s.pi * f / (s.r * s.r);
    let c2_p = f / s.r + s.pi * f_p / s.r;
    let g = a * x + k * c2 / s.xi;
    let n = [
        -s.r * s.v * (a * (1.0 + a) - k * c2 / (s.xi * s.xi)),
        -s.v * g - s.r * s.v * k * c2_r / s.xi,
        -s.r * g - s.r * s.v * a,
        (2.0 * a + b) - s.r * s.v * k * c2_p / s.xi,
    ];
    let d = [2.0 * x * (1.0 + a), -c2_r, 2.0 * x, -c2_p];
    Ok((n, d))
}

/// States on both sides of the jump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpState {
    pub xi_s: f64,
    /// `(R0, V0, Pi0)`.
    pub pre: [f64; 3],
    /// `(R1, V1, Pi1)`.
    pub post: [f64; 3],
    /// Scaled jump speed `-(1 + alpha) xi_s`.
    pub vs: f64,
}

impl JumpState {
    pub fn post_state(&self) -> SimilarityState {
        SimilarityState::from_fields(self.xi_s, self.post)
    }
}

/// Free-surface state: vacuum ahead, zero pressure and fluid speed equal to the surface speed.
pub fn jump_init_cavity(spec: &ProblemSpec) -> Result<JumpState> {
    if spec.kind != ProblemKind::Cavity {
        return Err(Error::InvalidParameters("jump_init_cavity needs a cavity problem".into()));
    }
    let xi_s = spec.xi_s()?;
    let vs = -(1.0 + spec.alpha()) * xi_s;
    Ok(JumpState { xi_s, pre: [0.0; 3], post: [spec.surface_density, vs, 0.0], vs })
}

/// Residual of the reduced energy relation in terms of the compression ratio.
fn compression_residual(spec: &ProblemSpec, chi: f64) -> Result<f64> {
    Ok(2.0 * spec.rho0 * spec.eos.energy_phi(chi * spec.rho0)? - (1.0 - 1.0 / chi))
}

/// Post-shock state of an infinitely strong shock into quiescent fluid.
pub fn jump_init_shock(spec: &ProblemSpec) -> Result<JumpState> {
    if spec.kind != ProblemKind::Shock {
        return Err(Error::InvalidParameters("jump_init_shock needs a shock problem".into()));
    }
    let xi_s = spec.xi_s()?;
    let vs = -(1.0 + spec.alpha()) * xi_s;
    let r0 = spec.rho0;
    let (_, hi) = spec.eos.domain();
    let chi_max = if hi.is_finite() { hi / r0 } else { 1e8 };
    if !(chi_max > 1.0) {
        return Err(Error::NoRoot);
    }
    let n = 400;
    let lo_l = (1e-9f64).ln_1p();
    let hi_l = (chi_max * (1.0 - 1e-12)).ln();
    let mut prev: Option<(f64, f64)> = None;
    let mut bracket = None;
    for i in 0..=n {
        let chi = (lo_l + (hi_l - lo_l) * i as f64 / n as f64).exp();
        let g = match compression_residual(spec, chi) {
            Ok(g) => g,
            Err(_) => continue,
        };
        if let Some((c0, g0)) = prev {
            if g0.signum() != g.signum() {
                bracket = Some((c0, chi));
                break;
            }
        }
        prev = Some((chi, g));
    }
    let (a, b) = bracket.ok_or(Error::NoRoot)?;
    let chi = brent(|c| compression_residual(spec, c), a, b, 1e-15 * b, 300)?;
    let r1 = chi * r0;
    let v1 = vs * (1.0 - 1.0 / chi);
    let pi1 = r0 * vs * v1;
    let jump = JumpState { xi_s, pre: [r0, 0.0, 0.0], post: [r1, v1, pi1], vs };
    let d = derived(spec, &jump.post_state())?;
    let c1 = d.c2.sqrt();
    if !(d.x.abs() < c1) {
        return Err(Error::EntropyViolation { x1: d.x.abs(), c1 });
    }
    Ok(jump)
}

/// Residuals of the three reduced jump relations, each relative to its largest term.
pub fn jump_relation_residuals(spec: &ProblemSpec, j: &JumpState) -> Result<[f64; 3]> {
    let [r0, v0, p0] = j.pre;
    let [r1, v1, p1] = j.post;
    let vs = j.vs;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    let mass = rel(r1 * (vs - v1), r0 * (vs - v0));
    let mom = rel(r0 * vs * v1 + p0, p1);
    let e1 = p1 * spec.eos.energy_phi(r1)?;
    let energy = rel(r0 * vs * (e1 + 0.5 * v1 * v1), p1 * v1);
    Ok([mass, mom, energy])
}

/// Starting state at `xi_s (1 + eps)` from the leading-order expansion
/// about the free surface, where `X = C = 0`.
///
/// With `s = xi - xi_s`: `Pi ~ alpha V1 R1 s`, `V ~ V1 + b s` with
/// `b = (beta + alpha - 1 - k V1 f / xi_s) / (f + 1)`, and `R` held at `R1`
/// (its local behaviour is a power of `s`, not analytic).
pub fn cavity_start(spec: &ProblemSpec, eps: f64) -> Result<SimilarityState> {
    let j = jump_init_cavity(spec)?;
    let [r1, v1, _] = j.post;
    let (a, b, k) = (spec.alpha(), spec.beta(), spec.k as f64);
    let f = spec.eos.eval_f(spec.eos.p0, r1)?;
    let slope_v = (b + a - 1.0 - k * v1 * f / j.xi_s) / (f + 1.0);
    let slope_p = a * v1 * r1;
    let s = eps * j.xi_s;
    Ok(SimilarityState::new(j.xi_s + s, r1, v1 + slope_v * s, slope_p * s))
}

/// Residuals of the conservation-form equations with their term scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservationResiduals {
    pub mass: f64,
    pub momentum: f64,
    pub entropy: f64,
    pub scales: [f64; 3],
}

impl ConservationResiduals {
    /// Largest residual relative to its term scale.
    pub fn max_relative(&self) -> f64 {
        let r = [self.mass, self.momentum, self.entropy];
        (0..3)
            .map(|i| if self.scales[i] > 0.0 { r[i].abs() / self.scales[i] } else { r[i].abs() })
            .fold(0.0, f64::max)
    }
}

/// Mass flux, momentum flux and entropy-form residuals given `(R', V', Pi')`.
pub fn conservation_residuals(
    spec: &ProblemSpec,
    s: &SimilarityState,
    derivs: &[f64; 3],
) -> Result<ConservationResiduals> {
    let d = derived(spec, s)?;
    let (a, b, k) = (spec.alpha(), spec.beta(), spec.k as f64);
    let [dr, dv, dp] = *derivs;
    let (r, x, c2, xi) = (s.r, d.x, d.c2, s.xi);
    let dx = 1.0 + a + dv;
    let lhs1 = dr * x + r * dx;
    let rhs1 = ((1.0 + a) * (1.0 + k) + b - k * x / xi) * r;
    let lhs2 = dr * x * x + 2.0 * r * x * dx + dp;
    let coef2 = 2.0 + k + (3.0 + k) * a + b - k * x / xi - a * (1.0 + a) * xi / x;
    let rhs2 = coef2 * r * x;
    let lhs3 = dr * c2 - dp;
    let rhs3 = b * r * c2 / x - (b + 2.0 * a) * s.pi / x;
    Ok(ConservationResiduals {
        mass: lhs1 - rhs1,
        momentum: lhs2 - rhs2,
        entropy: lhs3 - rhs3,
        scales: [
            (dr * x).abs() + (r * dx).abs() + rhs1.abs(),
            (dr * x * x).abs() + (2.0 * r * x * dx).abs() + dp.abs() + rhs2.abs(),
            (dr * c2).abs() + dp.abs() + (b * r * c2 / x).abs() + ((b + 2.0 * a) * s.pi / x).abs(),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eos::EosModel;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ideal_shock(alpha: f64) -> ProblemSpec {
        ProblemSpec::new(ProblemKind::Shock, 2, EosModel::ideal(1.4).unwrap(), Exponents { alpha, beta: 0.0 }).unwrap()
    }

    fn pmg_cavity(alpha: f64, k: u8) -> ProblemSpec {
        let eos = EosModel::pseudo_mie_gruneisen(1.489, 0.25, 1.0).unwrap();
        ProblemSpec::new(ProblemKind::Cavity, k, eos, Exponents { alpha, beta: 0.0 }).unwrap()
    }

    #[test]
    fn quiescent_state_is_fixed_point() {
        let spec = ideal_shock(-0.3);
        let d = rhs(&spec, &SimilarityState::new(2.0, 1.0, 0.0, 0.0)).unwrap();
        assert_eq!(d, [0.0, 0.0, 0.0]);
        let c = conservation_residuals(&spec, &SimilarityState::new(2.0, 1.0, 0.0, 0.0), &d).unwrap();
        assert!(c.mass.abs() < 1e-15);
    }

    #[test]
    fn cavity_surface_is_singular() {
        let spec = pmg_cavity(-0.852896, 2);
        let j = jump_init_cavity(&spec).unwrap();
        let s = j.post_state();
        assert!(matches!(rhs(&spec, &s), Err(Error::SingularPoint { .. })));
        assert_eq!(sonic_discriminant(&spec, &s).unwrap(), 0.0);
    }

    #[test]
    fn cavity_jump_examples() {
        let spec = pmg_cavity(-0.852896, 2);
        let j = jump_init_cavity(&spec).unwrap();
        assert_relative_eq!(j.xi_s, 6.79791, max_relative = 1e-6);
        assert_relative_eq!(j.post[1], -1.0, max_relative = 1e-14);
        assert_eq!(j.post[0], 1.0);
        assert_eq!(j.post[2], 0.0);
        let j0 = jump_init_cavity(&pmg_cavity(0.0, 2)).unwrap();
        assert_eq!((j0.xi_s, j0.post[1]), (1.0, -1.0));
        let bad = pmg_cavity(-1.0, 2);
        assert!(matches!(jump_init_cavity(&bad), Err(Error::InvalidExponent(_))));
    }

    #[test]
    fn numerator_reductions() {
        let spec = ideal_shock(-0.3);
        assert_eq!(numerator(&spec, &SimilarityState::new(1.5, 2.0, 0.0, 0.0)).unwrap(), 0.0);
        let s = SimilarityState::new(1.5, 2.0, -0.4, 0.0);
        let x = 0.7 * 1.5 - 0.4;
        assert_relative_eq!(numerator(&spec, &s).unwrap(), -2.0 * -0.4 * -0.3 * x, max_relative = 1e-14);
    }

    /// Brute-force oracle: scan the compression ratio on a fine grid against
    /// the three jump relations written out with e = p / ((gamma - 1) rho).
    #[test]
    fn strong_shock_matches_scan_oracle() {
        let g = 1.4;
        let vs = -(1.0f64 - 0.282826);
        let mut best = (f64::INFINITY, 0.0);
        for i in 1..200_000 {
            let chi = 1.0 + i as f64 * 1e-4;
            let v1 = vs * (1.0 - 1.0 / chi);
            let p1 = vs * v1;
            let e1 = p1 / ((g - 1.0) * chi);
            let res = (vs * (e1 + 0.5 * v1 * v1) - p1 * v1).abs();
            if res < best.0 {
                best = (res, chi);
            }
        }
        assert!((best.1 - 6.0).abs() < 2e-4);
        let j = jump_init_shock(&ideal_shock(-0.282826)).unwrap();
        assert_relative_eq!(j.post[0], 6.0, max_relative = 1e-10);
        assert_relative_eq!(j.post[1], -0.597645, epsilon = 1e-6);
        assert_relative_eq!(j.post[2], 0.428615, epsilon = 1e-6);
        for r in jump_relation_residuals(&ideal_shock(-0.282826), &j).unwrap() {
            assert!(r < 1e-12, "jump residual {r}");
        }
        let d = derived(&ideal_shock(-0.282826), &j.post_state()).unwrap();
        assert_relative_eq!(d.x, 0.119529, max_relative = 1e-5);
        assert_relative_eq!(d.c2.sqrt(), 0.316244, max_relative = 1e-5);
    }

    #[test]
    fn pmg_shock_stays_below_compression_limit() {
        let eos = EosModel::pseudo_mie_gruneisen(1.489, 0.25, 1.0).unwrap();
        let spec = ProblemSpec::new(ProblemKind::Shock, 2, eos, Exponents { alpha: -0.3, beta: 0.0 }).unwrap();
        let j = jump_init_shock(&spec).unwrap();
        assert!(j.post[0] > 1.0 && j.post[0] < 1.489 / 0.489);
        for r in jump_relation_residuals(&spec, &j).unwrap() {
            assert!(r < 1e-12, "jump residual {r}");
        }
    }

    #[test]
    fn cavity_start_is_regular() {
        let spec = pmg_cavity(-0.852896, 2);
        let s = cavity_start(&spec, 1e-4).unwrap();
        let d = rhs(&spec, &s).unwrap();
        assert!(d.iter().all(|v| v.is_finite()));
        let j = jump_init_cavity(&spec).unwrap();
        assert_relative_eq!(s.xi, j.xi_s * (1.0 + 1e-4));
    }

    #[test]
    fn parameterizations() {
        let eos = EosModel::power_law(3.0, None, 0.0, f64::INFINITY).unwrap();
        let c = eos.classify_constraints(ProblemKind::Cavity);
        let p = c.parameterize(FreeParam::Alpha, None).unwrap();
        let e = p.exponents(-0.4);
        assert_relative_eq!(e.beta, 2.0 * -0.4 / (3.0 - 1.0));
        assert!(c.satisfied_by(e.alpha, e.beta, 1e-14));
        let ideal = EosModel::ideal(1.4).unwrap().classify_constraints(ProblemKind::Cavity);
        assert!(ideal.parameterize(FreeParam::Beta, None).is_err());
        let pb = ideal.parameterize(FreeParam::Beta, Some(0.0)).unwrap();
        assert_eq!(pb.exponents(0.3), Exponents { alpha: 0.0, beta: 0.3 });
        let gen = EosModel::general(None, 0.0, 1.0).unwrap().classify_constraints(ProblemKind::Shock);
        assert!(matches!(gen.parameterize(FreeParam::Alpha, None), Err(Error::Constraint(_))));
        let ds = EosModel::ideal(1.4).unwrap().classify_constraints(ProblemKind::Shock);
        assert!(ds.parameterize(FreeParam::Beta, None).is_err());
    }

    fn random_spec(alpha: f64, beta: f64, k: u8, pmg: bool) -> ProblemSpec {
        let eos = if pmg {
            EosModel::pseudo_mie_gruneisen(1.489, 0.25, 1.0).unwrap()
        } else {
            EosModel::ideal(1.4).unwrap()
        };
        let mut spec = ProblemSpec::new(ProblemKind::Cavity, k, eos, Exponents { alpha, beta: 0.0 }).unwrap();
        spec.exponents.beta = beta;
        spec
    }

    proptest! {
        #[test]
        fn conservation_form_agrees_with_rhs(
            alpha in -0.95f64..0.5, beta in -0.5f64..0.5, k in 1u8..=2, pmg in any::<bool>(),
            xi in 0.1f64..10.0, r in 0.05f64..3.0, v in -3.0f64..3.0, pi in 0.0f64..5.0,
        ) {
            let spec = random_spec(alpha, beta, k, pmg);
            let s = SimilarityState::new(xi, r, v, pi);
            if let Ok(d) = rhs(&spec, &s) {
                let c = conservation_residuals(&spec, &s, &d).unwrap();
                prop_assert!(c.max_relative() < 1e-9, "{:?}", c);
            }
        }

        #[test]
        fn analytic_gradients_match_fd(
            alpha in -0.95f64..0.5, k in 1u8..=2, pmg in any::<bool>(),
            xi in 0.5f64..5.0, r in 0.2f64..2.5, v in -2.0f64..2.0, pi in 0.1f64..3.0,
        ) {
            let spec = random_spec(alpha, 0.0, k, pmg);
            let s = SimilarityState::new(xi, r, v, pi);
            let (gn, gd) = gradients(&spec, &s).unwrap();
            let base = [xi, r, v, pi];
            for i in 0..4 {
                let h = 1e-6 * base[i].abs().max(0.1);
                let mut up = base;
                let mut dn = base;
                up[i] += h;
                dn[i] -= h;
                let su = SimilarityState::new(up[0], up[1], up[2], up[3]);
                let sd = SimilarityState::new(dn[0], dn[1], dn[2], dn[3]);
                let n_fd = (numerator(&spec, &su).unwrap() - numerator(&spec, &sd).unwrap()) / (2.0 * h);
                let d_fd = (sonic_discriminant(&spec, &su).unwrap() - sonic_discriminant(&spec, &sd).unwrap()) / (2.0 * h);
                let nsc = gn.iter().map(|g| g.abs()).fold(1e-3, f64::max);
                let dsc = gd.iter().map(|g| g.abs()).fold(1e-3, f64::max);
                prop_assert!((gn[i] - n_fd).abs() <= 1e-6 * nsc, "N[{}] {} vs {}", i, gn[i], n_fd);
                prop_assert!((gd[i] - d_fd).abs() <= 1e-6 * dsc, "D[{}] {} vs {}", i, gd[i], d_fd);
            }
        }

        #[test]
        fn ideal_compression_ratio_exact(g in 1.1f64..3.0, alpha in -0.9f64..-0.05) {
            let spec = ProblemSpec::new(ProblemKind::Shock, 2, EosModel::ideal(g).unwrap(), Exponents { alpha, beta: 0.0 }).unwrap();
            let j = jump_init_shock(&spec).unwrap();
            prop_assert!((j.post[0] - (g + 1.0) / (g - 1.0)).abs() <= 1e-10 * (g + 1.0) / (g - 1.0));
        }
    }
}
