//! Bulk-modulus families, scaling-invariance checks and the energy closure.
//!
//! Every model is described by `f = K_S / (p - p0)`. Four families are
//! supported, matching the admissibility classes of the similarity
//! reduction: a general `f(p, rho)`, a power-law scaled `f((p - p0) rho^-lambda)`,
//! a density-only `f(rho)` and the constant ideal-gas `gamma`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;
use crate::ode::{integrate_to, StepOptions};

pub type ScalarFn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type ScalarFn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Default relative step for finite-difference partials.
pub const DEFAULT_H_FD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Cavity,
    Shock,
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemKind::Cavity => "cavity",
            ProblemKind::Shock => "shock",
        })
    }
}

/// Density law for the `DensityScaled` family.
#[derive(Clone)]
pub enum DensityLaw {
    /// `K_S = p c1 (c2 + (eta - c3)^2 / (eta_max - eta))`, `eta = rho / rho_ref`.
    PseudoMieGruneisen { s: f64, q: f64, rho_ref: f64 },
    /// `f(rho)` from a table with monotone cubic interpolation.
    Tabulated(MonotoneCubic),
    Custom(ScalarFn1),
}

#[derive(Clone)]
pub enum Family {
    /// `f(p, rho)`.
    GeneralF(Option<ScalarFn2>),
    /// `f(z)` with `z = (p - p0) rho^-lambda`.
    PowerLawScaled { lambda: f64, f: Option<ScalarFn1> },
    DensityScaled(DensityLaw),
    IdealGamma(f64),
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::GeneralF(_) => "general_f",
            Family::PowerLawScaled { .. } => "power_law_scaled",
            Family::DensityScaled(_) => "density_scaled",
            Family::IdealGamma(_) => "ideal_gamma",
        }
    }
}

/// Pseudo-Mie-Gruneisen coefficients `(c1, c2, c3, eta_max)`.
pub fn pmg_coefficients(s: f64, q: f64) -> (f64, f64, f64, f64) {
    let c1 = (1.0 - 4.0 * s) / (4.0 * q * (q - 2.0) * (s - 1.0));
    let c2 = q * (4.0 * (s - 1.0) - q * (2.0 * s - 1.0));
    let c3 = (q + s - 1.0) / (s - 1.0);
    (c1, c2, c3, s / (s - 1.0))
}

/// An equation of state with its declared density validity domain.
#[derive(Clone)]
pub struct EosModel {
    pub family: Family,
    pub p0: f64,
    rho_lo: f64,
    rho_hi: f64,
    closed: bool,
}

impl fmt::Debug for EosModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("EosModel");
        d.field("family", &self.family.name());
        match &self.family {
            Family::PowerLawScaled { lambda, .. } => {
                d.field("lambda", lambda);
            }
            Family::DensityScaled(DensityLaw::PseudoMieGruneisen { s, q, rho_ref }) => {
                d.field("s", s).field("q", q).field("rho_ref", rho_ref);
            }
            Family::IdealGamma(g) => {
                d.field("gamma", g);
            }
            _ => {}
        }
        d.field("p0", &self.p0).field("domain", &(self.rho_lo, self.rho_hi)).finish()
    }
}

/// A linear relation `a_alpha * alpha + a_beta * beta = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRelation {
    pub a_alpha: f64,
    pub a_beta: f64,
    pub label: String,
}

impl LinearRelation {
    fn new(a_alpha: f64, a_beta: f64, label: impl Into<String>) -> Self {
        LinearRelation { a_alpha, a_beta, label: label.into() }
    }

    pub fn residual(&self, alpha: f64, beta: f64) -> f64 {
        self.a_alpha * alpha + self.a_beta * beta
    }
}

/// Admissible scaling exponents for one (family, problem) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub kind: ProblemKind,
    pub family: String,
    pub relations: Vec<LinearRelation>,
    pub free_dims: usize,
}

impl ConstraintSet {
    fn build(kind: ProblemKind, family: &str, relations: Vec<LinearRelation>) -> Self {
        let rank = match relations.len() {
            0 => 0,
            1 => 1,
            _ => {
                let mut r = 1;
                for i in 0..relations.len() {
                    for j in i + 1..relations.len() {
                        let (a, b) = (&relations[i], &relations[j]);
                        if (a.a_alpha * b.a_beta - a.a_beta * b.a_alpha).abs() > 1e-12 {
                            r = 2;
                        }
                    }
                }
                r
            }
        };
        ConstraintSet { kind, family: family.to_string(), relations, free_dims: 2 - rank }
    }

    pub fn satisfied_by(&self, alpha: f64, beta: f64, tol: f64) -> bool {
        self.relations.iter().all(|r| r.residual(alpha, beta).abs() <= tol)
    }
}

impl fmt::Display for ConstraintSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rel: Vec<&str> = self.relations.iter().map(|r| r.label.as_str()).collect();
        write!(
            f,
            "{} / {}: {{{}}}, free_dims = {}",
            self.family,
            self.kind,
            rel.join(", "),
            self.free_dims
        )
    }
}

impl EosModel {
    pub fn ideal(gamma: f64) -> Result<Self> {
        if !(gamma > 1.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameters(format!("gamma must exceed 1, got {gamma}")));
        }
        Ok(EosModel { family: Family::IdealGamma(gamma), p0: 0.0, rho_lo: 0.0, rho_hi: f64::INFINITY, closed: false })
    }

    pub fn pseudo_mie_gruneisen(s: f64, q: f64, rho_ref: f64) -> Result<Self> {
        if !(s > 1.0 && s.is_finite()) {
            return Err(Error::InvalidParameters(format!("s must exceed 1, got {s}")));
        }
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::InvalidParameters(format!("q must lie in (0, 1], got {q}")));
        }
        if !(rho_ref > 0.0 && rho_ref.is_finite()) {
            return Err(Error::InvalidParameters(format!("rho_ref must be positive, got {rho_ref}")));
        }
        let (c1, c2, _, eta_max) = pmg_coefficients(s, q);
        if !(c1 > 0.0 && c2 > 0.0) {
            return Err(Error::InvalidParameters(format!(
                "s = {s}, q = {q} give a non-positive bulk modulus (c1 = {c1}, c2 = {c2})"
            )));
        }
        Ok(EosModel {
            family: Family::DensityScaled(DensityLaw::PseudoMieGruneisen { s, q, rho_ref }),
            p0: 0.0,
            rho_lo: 0.0,
            rho_hi: eta_max * rho_ref,
            closed: false,
        })
    }

    /// Density-only law from `(rho, f)` pairs; the domain is the closed table range.
    pub fn tabulated(rho: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        if f.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidParameters("tabulated f must be positive".into()));
        }
        if rho.first().is_some_and(|r| !(*r > 0.0)) {
            return Err(Error::InvalidParameters("tabulated densities must be positive".into()));
        }
        let m = MonotoneCubic::new(rho, f)?;
        let (lo, hi) = m.domain();
        Ok(EosModel { family: Family::DensityScaled(DensityLaw::Tabulated(m)), p0: 0.0, rho_lo: lo, rho_hi: hi, closed: true })
    }

    /// Density-only law from a closure valid on the open interval `(rho_lo, rho_hi)`.
    pub fn density_scaled(f: ScalarFn1, rho_lo: f64, rho_hi: f64) -> Result<Self> {
        Self::check_domain(rho_lo, rho_hi)?;
        Ok(EosModel { family: Family::DensityScaled(DensityLaw::Custom(f)), p0: 0.0, rho_lo, rho_hi, closed: false })
    }

    pub fn general(f: Option<ScalarFn2>, rho_lo: f64, rho_hi: f64) -> Result<Self> {
        Self::check_domain(rho_lo, rho_hi)?;
        Ok(EosModel { family: Family::GeneralF(f), p0: 0.0, rho_lo, rho_hi, closed: false })
    }

    pub fn power_law(lambda: f64, f: Option<ScalarFn1>, rho_lo: f64, rho_hi: f64) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::InvalidParameters("lambda must be finite".into()));
        }
        Self::check_domain(rho_lo, rho_hi)?;
        Ok(EosModel { family: Family::PowerLawScaled { lambda, f }, p0: 0.0, rho_lo, rho_hi, closed: false })
    }

    fn check_domain(lo: f64, hi: f64) -> Result<()> {
        if !(lo >= 0.0 && hi > lo) {
            return Err(Error::InvalidParameters(format!("bad density domain ({lo}, {hi})")));
        }
        Ok(())
    }

    pub fn with_p0(mut self, p0: f64) -> Self {
        self.p0 = p0;
        self
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.rho_lo, self.rho_hi)
    }

    pub fn in_domain(&self, rho: f64) -> bool {
        if self.closed {
            rho >= self.rho_lo && rho <= self.rho_hi
        } else {
            rho > self.rho_lo && rho < self.rho_hi
        }
    }

    /// Compression limit of the density law, if any.
    pub fn eta_max(&self) -> Option<f64> {
        match &self.family {
            Family::DensityScaled(DensityLaw::PseudoMieGruneisen { s, .. }) => Some(s / (s - 1.0)),
            _ => None,
        }
    }

    fn domain_check(&self, p: f64, rho: f64) -> Result<()> {
        if !self.in_domain(rho) || !rho.is_finite() {
            return Err(Error::Domain { rho, lo: self.rho_lo, hi: self.rho_hi });
        }
        if !(p >= self.p0) {
            return Err(Error::Pressure { p, p0: self.p0 });
        }
        Ok(())
    }

    fn raw_f(&self, p: f64, rho: f64) -> Result<f64> {
        Ok(match &self.family {
            Family::IdealGamma(g) => *g,
            Family::DensityScaled(law) => match law {
                DensityLaw::PseudoMieGruneisen { s, q, rho_ref } => {
                    let (c1, c2, c3, em) = pmg_coefficients(*s, *q);
                    let eta = rho / rho_ref;
                    c1 * (c2 + (eta - c3) * (eta - c3) / (em - eta))
                }
                DensityLaw::Tabulated(m) => m.eval(rho),
                DensityLaw::Custom(f) => f(rho),
            },
            Family::GeneralF(f) => f.as_ref().ok_or(Error::MissingLaw("general_f has no f(p, rho)"))?(p, rho),
            Family::PowerLawScaled { lambda, f } => {
                let f = f.as_ref().ok_or(Error::MissingLaw("power_law_scaled has no f(z)"))?;
                f((p - self.p0) * rho.powf(-lambda))
            }
        })
    }

    /// `f = K_S / (p - p0)`.
    pub fn eval_f(&self, p: f64, rho: f64) -> Result<f64> {
        self.domain_check(p, rho)?;
        let f = self.raw_f(p, rho)?;
        if !(f > 0.0 && f.is_finite()) {
            return Err(Error::InvalidParameters(format!("f = {f} is not positive at p = {p}, rho = {rho}")));
        }
        Ok(f)
    }

    /// `f` with its partials `(f, df/dp, df/drho)`.
    pub fn f_grad(&self, p: f64, rho: f64) -> Result<(f64, f64, f64)> {
        let f = self.eval_f(p, rho)?;
        match &self.family {
            Family::IdealGamma(_) => Ok((f, 0.0, 0.0)),
            Family::DensityScaled(DensityLaw::PseudoMieGruneisen { s, q, rho_ref }) => {
                let (c1, _, c3, em) = pmg_coefficients(*s, *q);
                let eta = rho / rho_ref;
                let d = em - eta;
                let dfde = c1 * (2.0 * (eta - c3) / d + (eta - c3) * (eta - c3) / (d * d));
                Ok((f, 0.0, dfde / rho_ref))
            }
            Family::DensityScaled(DensityLaw::Tabulated(m)) => Ok((f, 0.0, m.eval_with_deriv(rho).1)),
            _ => {
                let hr = DEFAULT_H_FD * rho;
                let dfr = (self.raw_f(p, rho + hr)? - self.raw_f(p, rho - hr)?) / (2.0 * hr);
                let dfp = match self.family {
                    Family::DensityScaled(_) => 0.0,
                    _ => {
                        let hp = DEFAULT_H_FD * if p != 0.0 { p.abs() } else { 1.0 };
                        (self.raw_f(p + hp, rho)? - self.raw_f(p - hp, rho)?) / (2.0 * hp)
                    }
                };
                Ok((f, dfp, dfr))
            }
        }
    }

    /// Adiabatic bulk modulus `K_S = (p - p0) f`.
    pub fn bulk_modulus(&self, p: f64, rho: f64) -> Result<f64> {
        Ok((p - self.p0) * self.eval_f(p, rho)?)
    }

    /// `c^2 = K_S / rho`.
    pub fn sound_speed_sq(&self, p: f64, rho: f64) -> Result<f64> {
        Ok(self.bulk_modulus(p, rho)? / rho)
    }

    /// Residual of the scaling-invariance condition on `K_S` at `(p, rho)`.
    pub fn invariance_residual(&self, alpha: f64, beta: f64, p: f64, rho: f64, h_fd: f64) -> Result<f64> {
        Ok(self.invariance_terms(alpha, beta, p, rho, h_fd)?.0)
    }

    /// Residual together with the sum of magnitudes of its three terms.
    pub fn invariance_terms(&self, alpha: f64, beta: f64, p: f64, rho: f64, h_fd: f64) -> Result<(f64, f64)> {
        let hr = h_fd * rho;
        let hp = h_fd * if p != 0.0 { p.abs() } else { 1.0 };
        let k = self.bulk_modulus(p, rho)?;
        let dk_drho = (self.bulk_modulus(p, rho + hr)? - self.bulk_modulus(p, rho - hr)?) / (2.0 * hr);
        let dk_dp = (self.bulk_modulus(p + hp, rho)? - self.bulk_modulus(p - hp, rho)?) / (2.0 * hp);
        let a = beta * rho * dk_drho;
        let b = (2.0 * alpha + beta) * (p - self.p0) * dk_dp;
        let c = (2.0 * alpha + beta) * k;
        Ok((a + b - c, a.abs() + b.abs() + c.abs()))
    }

    /// Relations on `(alpha, beta)` under which this family admits scaling solutions.
    pub fn classify_constraints(&self, kind: ProblemKind) -> ConstraintSet {
        let alpha0 = || LinearRelation::new(1.0, 0.0, "alpha = 0");
        let beta0 = || LinearRelation::new(0.0, 1.0, "beta = 0");
        let rel = match (&self.family, kind) {
            (Family::GeneralF(_), _) => vec![alpha0(), beta0()],
            (Family::PowerLawScaled { .. }, ProblemKind::Shock) => vec![alpha0(), beta0()],
            (Family::PowerLawScaled { lambda, .. }, ProblemKind::Cavity) => {
                vec![LinearRelation::new(2.0, 1.0 - lambda, "beta + 2 alpha = lambda beta")]
            }
            (Family::DensityScaled(_), _) => vec![beta0()],
            (Family::IdealGamma(_), ProblemKind::Cavity) => vec![],
            (Family::IdealGamma(_), ProblemKind::Shock) => vec![beta0()],
        };
        ConstraintSet::build(kind, self.family.name(), rel)
    }

    /// Particular solution `phi` of `phi' + (f/rho) phi = 1/rho^2`, so that `e = p phi(rho)`.
    pub fn energy_phi(&self, rho: f64) -> Result<f64> {
        self.energy_phi_tol(rho, 1e-12)
    }

    /// `energy_phi` with an explicit relative integration tolerance.
    ///
    /// The homogeneous part is removed by anchoring at the low-density end of
    /// the domain, where `rho * phi -> 1 / (f - 1)`. In `x = ln rho` the
    /// quantity `psi = rho * phi` obeys `psi' = 1 + (1 - f) psi`, which
    /// contracts onto the particular solution when `f > 1`.
    pub fn energy_phi_tol(&self, rho: f64, rtol: f64) -> Result<f64> {
        match self.family {
            Family::DensityScaled(_) | Family::IdealGamma(_) => {}
            _ => return Err(Error::UnsupportedFamily(self.family.name())),
        }
        if self.p0 != 0.0 {
            return Err(Error::UnsupportedFamily("energy closure requires p0 = 0"));
        }
        self.domain_check(0.0, rho)?;
        let rho_a = if self.closed {
            self.rho_lo
        } else {
            let scale = match &self.family {
                Family::DensityScaled(DensityLaw::PseudoMieGruneisen { rho_ref, .. }) => *rho_ref,
                _ => 1.0,
            };
            (self.rho_lo.max(1e-12 * scale)).min(rho)
        };
        let f_a = self.eval_f(0.0, rho_a)?;
        if f_a <= 1.0 {
            return Err(Error::InvalidParameters(format!(
                "energy closure needs f > 1 at the low-density end (f = {f_a})"
            )));
        }
        let psi_a = 1.0 / (f_a - 1.0);
        let opts = StepOptions { rtol, atol: rtol * 1e-3, ..StepOptions::default() };
        let psi = integrate_to(
            |x, y: &[f64; 1]| {
                let r = x.exp().clamp(rho_a, rho);
                Ok([1.0 + (1.0 - self.eval_f(0.0, r)?) * y[0]])
            },
            rho_a.ln(),
            [psi_a],
            rho.ln(),
            opts,
        )?;
        Ok(psi[0] / rho)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn pmg() -> EosModel {
        EosModel::pseudo_mie_gruneisen(1.489, 0.25, 1.0).unwrap()
    }

    fn witness() -> EosModel {
        EosModel::density_scaled(Arc::new(|r| 1.4 + r), 0.0, f64::INFINITY).unwrap()
    }

    #[test]
    fn pmg_coefficients_by_hand() {
        let (s, q) = (1.489f64, 0.25f64);
        let c1 = (1.0 - 4.0 * s) / (4.0 * q * (q - 2.0) * (s - 1.0));
        let (a, b, c, e) = pmg_coefficients(s, q);
        assert_relative_eq!(a, c1);
        assert_relative_eq!(a, 5.791411, max_relative = 1e-6);
        assert_relative_eq!(b, 0.365375, max_relative = 1e-6);
        assert_relative_eq!(c, 1.511247, max_relative = 1e-6);
        assert_relative_eq!(e, 3.044990, max_relative = 1e-6);
    }

    #[test]
    fn eval_f_examples() {
        assert_eq!(EosModel::ideal(1.4).unwrap().eval_f(3.0, 0.2).unwrap(), 1.4);
        let m = pmg();
        let (c1, c2, c3, em) = pmg_coefficients(1.489, 0.25);
        let expect = c1 * (c2 + (1.0 - c3).powi(2) / (em - 1.0));
        assert_relative_eq!(m.eval_f(1.0, 1.0).unwrap(), expect, max_relative = 1e-15);
        assert_relative_eq!(expect, 2.856248, max_relative = 1e-6);
        assert!(matches!(m.eval_f(1.0, em), Err(Error::Domain { .. })));
        assert!(matches!(m.eval_f(1.0, 0.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn sound_speed_examples() {
        assert_relative_eq!(EosModel::ideal(1.4).unwrap().sound_speed_sq(1.0, 1.0).unwrap(), 1.4);
        assert_eq!(pmg().sound_speed_sq(0.0, 1.0).unwrap(), 0.0);
        assert_relative_eq!(pmg().sound_speed_sq(2.0, 1.0).unwrap(), 5.712496, max_relative = 1e-6);
    }

    #[test]
    fn pmg_diverges_at_compression_limit() {
        let m = pmg();
        let em = m.eta_max().unwrap();
        let mut prev = 0.0;
        for i in 1..12 {
            let f = m.eval_f(1.0, em - 10f64.powi(-i)).unwrap();
            assert!(f > prev);
            prev = f;
        }
        assert!(prev > 1e10);
    }

    #[test]
    fn analytic_gradient_matches_fd() {
        let m = pmg();
        for eta in [0.1, 0.7, 1.0, 2.0, 2.9] {
            let (_, _, d) = m.f_grad(1.0, eta).unwrap();
            let h = 1e-6 * eta;
            let fd = (m.eval_f(1.0, eta + h).unwrap() - m.eval_f(1.0, eta - h).unwrap()) / (2.0 * h);
            assert_relative_eq!(d, fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn invariance_residual_examples() {
        let ideal = EosModel::ideal(1.4).unwrap();
        assert!(ideal.invariance_residual(-0.3, 0.7, 1.0, 1.0, DEFAULT_H_FD).unwrap().abs() < 1e-8);
        let r = witness().invariance_residual(0.0, 1.0, 1.0, 1.0, DEFAULT_H_FD).unwrap();
        assert_relative_eq!(r, 1.0, max_relative = 1e-6);
        assert!(pmg().invariance_residual(-0.8, 0.0, 2.0, 1.5, DEFAULT_H_FD).unwrap().abs() < 1e-7);
    }

    #[test]
    fn stencil_outside_domain_is_error() {
        let m = pmg();
        let em = m.eta_max().unwrap();
        assert!(m.invariance_residual(-0.5, 0.0, 1.0, em * (1.0 - 1e-7), DEFAULT_H_FD).is_err());
        assert!(m.invariance_residual(-0.5, 0.0, 0.0, 1.0, DEFAULT_H_FD).is_err());
    }

    #[test]
    fn classification_cells() {
        let gen = EosModel::general(Some(Arc::new(|p, r| 1.5 + p * r)), 0.0, f64::INFINITY).unwrap();
        let c = gen.classify_constraints(ProblemKind::Cavity);
        assert_eq!(c.free_dims, 0);
        assert_eq!(c.relations.len(), 2);
        let c = pmg().classify_constraints(ProblemKind::Shock);
        assert_eq!(c.free_dims, 1);
        assert_eq!(c.relations[0].label, "beta = 0");
        let c = EosModel::ideal(1.4).unwrap().classify_constraints(ProblemKind::Cavity);
        assert_eq!(c.free_dims, 2);
        assert!(c.relations.is_empty());
        let pl = EosModel::power_law(3.0, None, 0.0, f64::INFINITY).unwrap();
        let c = pl.classify_constraints(ProblemKind::Cavity);
        assert_eq!(c.free_dims, 1);
        assert!(c.satisfied_by(-0.5, -0.5, 1e-15));
    }

    #[test]
    fn energy_phi_ideal() {
        for g in [1.2, 1.4, 5.0 / 3.0] {
            let m = EosModel::ideal(g).unwrap();
            for rho in [0.1, 1.0, 2.0, 10.0] {
                assert_relative_eq!(m.energy_phi(rho).unwrap(), 1.0 / ((g - 1.0) * rho), max_relative = 1e-10);
            }
        }
        assert_relative_eq!(EosModel::ideal(1.4).unwrap().energy_phi(1.0).unwrap(), 2.5, max_relative = 1e-12);
        assert_relative_eq!(EosModel::ideal(1.4).unwrap().energy_phi(2.0).unwrap(), 1.25, max_relative = 1e-12);
    }

    #[test]
    fn energy_phi_unsupported() {
        let pl = EosModel::power_law(3.0, Some(Arc::new(|z| 1.5 + z)), 0.0, f64::INFINITY).unwrap();
        assert!(matches!(pl.energy_phi(1.0), Err(Error::UnsupportedFamily(_))));
    }

    /// Independent oracle: `phi(rho) = (1/rho) * int_0^inf exp(y - G(y)) dy`,
    /// `G(y) = int_0^y f(rho e^-z) dz`, by composite Simpson in `u` with
    /// `y = Y u^3` so the steep start near `y = 0` is resolved.
    fn phi_oracle(m: &EosModel, rho: f64) -> f64 {
        let n = 200_000;
        let ymax = 40.0;
        let h = 1.0 / n as f64;
        let y = |u: f64| ymax * u * u * u;
        let fz = |u: f64| m.eval_f(0.0, rho * (-y(u)).exp()).unwrap() * 3.0 * ymax * u * u;
        let mut g = vec![0.0; n + 1];
        for i in 1..=n {
            let a = (i - 1) as f64 * h;
            g[i] = g[i - 1] + h / 6.0 * (fz(a) + 4.0 * fz(a + 0.5 * h) + fz(a + h));
        }
        let w = |i: usize| {
            let u = i as f64 * h;
            (y(u) - g[i]).exp() * 3.0 * ymax * u * u
        };
        let mut s = w(0) + w(n);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 * w(i) } else { 2.0 * w(i) };
        }
        s * h / 3.0 / rho
    }

    #[test]
    fn energy_phi_pmg_matches_quadrature_oracle() {
        let m = pmg();
        let em = m.eta_max().unwrap();
        for rho in [0.5, 1.0, 2.0, em * 0.999] {
            let a = m.energy_phi(rho).unwrap();
            assert!(a.is_finite() && a > 0.0);
            assert_relative_eq!(a, phi_oracle(&m, rho), max_relative = 1e-8);
            let coarse = m.energy_phi_tol(rho, 1e-10).unwrap();
            assert_relative_eq!(a, coarse, max_relative = 1e-8);
        }
    }

    #[test]
    fn tabulated_law_interpolates() {
        let rho: Vec<f64> = (0..20).map(|i| 0.1 + 0.1 * i as f64).collect();
        let f: Vec<f64> = rho.iter().map(|r| 1.4 + r).collect();
        let m = EosModel::tabulated(rho, f).unwrap();
        assert_relative_eq!(m.eval_f(1.0, 1.05).unwrap(), 2.45, max_relative = 1e-12);
        assert!(m.eval_f(1.0, 2.5).is_err());
    }

    proptest! {
        #[test]
        fn ideal_phi_property(g in 1.05f64..3.0, rho in 0.1f64..10.0) {
            let m = EosModel::ideal(g).unwrap();
            let phi = m.energy_phi(rho).unwrap();
            prop_assert!((phi * (g - 1.0) * rho - 1.0).abs() < 1e-10);
        }

        #[test]
        fn pmg_f_positive_on_domain(eta in 1e-6f64..3.0449) {
            let f = pmg().eval_f(1.0, eta).unwrap();
            prop_assert!(f > 0.0 && f.is_finite());
        }
    }
}
