//! Run configuration read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use selfsim_core::eigen::IntegrationMode;
use selfsim_core::{EosModel, Exponents, FreeParam, ProblemKind, ProblemSpec, SolverOptions};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSection,
    pub eos: EosSection,
    #[serde(default)]
    pub exponents: ExponentSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub grid: GridSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub kind: ProblemKind,
    #[serde(default = "default_k")]
    pub k: u8,
    /// Upstream density of a shock problem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho0: Option<f64>,
}

fn default_k() -> u8 {
    2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    GeneralF,
    PowerLawScaled,
    DensityScaled,
    IdealGamma,
}

/// EOS block. `density_scaled` takes either `s`, `q` (and `rho_ref`) for the
/// pseudo-Mie-Gruneisen law or a `table` of `[rho, f]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EosSection {
    pub family: FamilyName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_ref: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_hi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentSection {
    #[serde(default = "default_free")]
    pub free: FreeParam,
    /// Fixed value of alpha when beta is searched, or a starting value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

fn default_free() -> FreeParam {
    FreeParam::Alpha
}

impl Default for ExponentSection {
    fn default() -> Self {
        ExponentSection { free: FreeParam::Alpha, alpha: None, beta: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverSection {
    pub tol_alpha: f64,
    pub bracket: [f64; 2],
    pub scan_points: usize,
    pub epsilon: f64,
    pub h_jump: f64,
    pub delta_stop: f64,
    pub xi_max_factor: f64,
    pub rtol: f64,
    pub atol: f64,
    pub mode: IntegrationMode,
    pub crossing_tol: f64,
    pub sample_dlnxi: f64,
    pub max_steps: usize,
    pub max_iterations: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let o = SolverOptions::default();
        SolverSection {
            tol_alpha: 1e-10,
            bracket: [-0.99, -0.05],
            scan_points: 20,
            epsilon: o.epsilon,
            h_jump: o.h_jump,
            delta_stop: o.delta_stop,
            xi_max_factor: o.xi_max_factor,
            rtol: o.rtol,
            atol: o.atol,
            mode: o.mode,
            crossing_tol: o.crossing_tol,
            sample_dlnxi: o.sample_dlnxi,
            max_steps: o.max_steps,
            max_iterations: o.max_iterations,
        }
    }
}

// Missing keys fall back to the defaults above, one key at a time.
impl<'de> Deserialize<'de> for SolverSection {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Partial {
            tol_alpha: Option<f64>,
            bracket: Option<[f64; 2]>,
            scan_points: Option<usize>,
            epsilon: Option<f64>,
            h_jump: Option<f64>,
            delta_stop: Option<f64>,
            xi_max_factor: Option<f64>,
            rtol: Option<f64>,
            atol: Option<f64>,
            mode: Option<IntegrationMode>,
            crossing_tol: Option<f64>,
            sample_dlnxi: Option<f64>,
            max_steps: Option<usize>,
            max_iterations: Option<usize>,
        }
        let p = Partial::deserialize(d)?;
        let z = SolverSection::default();
        Ok(SolverSection {
            tol_alpha: p.tol_alpha.unwrap_or(z.tol_alpha),
            bracket: p.bracket.unwrap_or(z.bracket),
            scan_points: p.scan_points.unwrap_or(z.scan_points),
            epsilon: p.epsilon.unwrap_or(z.epsilon),
            h_jump: p.h_jump.unwrap_or(z.h_jump),
            delta_stop: p.delta_stop.unwrap_or(z.delta_stop),
            xi_max_factor: p.xi_max_factor.unwrap_or(z.xi_max_factor),
            rtol: p.rtol.unwrap_or(z.rtol),
            atol: p.atol.unwrap_or(z.atol),
            mode: p.mode.unwrap_or(z.mode),
            crossing_tol: p.crossing_tol.unwrap_or(z.crossing_tol),
            sample_dlnxi: p.sample_dlnxi.unwrap_or(z.sample_dlnxi),
            max_steps: p.max_steps.unwrap_or(z.max_steps),
            max_iterations: p.max_iterations.unwrap_or(z.max_iterations),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_format")]
    pub format: Format,
    #[serde(default)]
    pub plot: bool,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_format() -> Format {
    Format::Csv
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: default_dir(), format: Format::Csv, plot: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

/// Reconstruction grid: explicit radii in `r`, or `n_r` points between `r_min` and `r_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "default_t")]
    pub t: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    #[serde(default)]
    pub n_r: usize,
    #[serde(default = "default_spacing")]
    pub spacing: Spacing,
}

fn default_t() -> Vec<f64> {
    vec![-1.0]
}

fn default_spacing() -> Spacing {
    Spacing::Linear
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { t: default_t(), r: None, r_min: None, r_max: None, n_r: 0, spacing: Spacing::Linear }
    }
}

impl GridSection {
    pub fn radii(&self) -> Result<Vec<f64>, CliError> {
        if let Some(r) = &self.r {
            return Ok(r.clone());
        }
        if self.n_r == 0 {
            return Ok(Vec::new());
        }
        let (lo, hi) = match (self.r_min, self.r_max) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(CliError::config("grid: n_r needs r_min and r_max")),
        };
        if self.n_r == 1 {
            return Ok(vec![lo]);
        }
        let n = (self.n_r - 1) as f64;
        Ok((0..self.n_r)
            .map(|i| {
                let s = i as f64 / n;
                match self.spacing {
                    Spacing::Linear => lo + (hi - lo) * s,
                    Spacing::Log => lo * (hi / lo).powf(s),
                }
            })
            .collect())
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub plot: bool,
    pub k: Option<u8>,
    pub bracket: Option<(f64, f64)>,
    pub tol_alpha: Option<f64>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(d) = &o.out {
            self.output.dir = d.clone();
        }
        if let Some(f) = o.format {
            self.output.format = f;
        }
        if o.plot {
            self.output.plot = true;
        }
        if let Some(k) = o.k {
            self.problem.k = k;
        }
        if let Some((lo, hi)) = o.bracket {
            self.solver.bracket = [lo, hi];
        }
        if let Some(t) = o.tol_alpha {
            self.solver.tol_alpha = t;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let s = &self.solver;
        if !matches!(self.problem.k, 1 | 2) {
            return Err(CliError::config(format!("problem.k must be 1 or 2, got {}", self.problem.k)));
        }
        let positive = [
            ("tol_alpha", s.tol_alpha),
            ("epsilon", s.epsilon),
            ("h_jump", s.h_jump),
            ("delta_stop", s.delta_stop),
            ("xi_max_factor", s.xi_max_factor),
            ("rtol", s.rtol),
            ("atol", s.atol),
            ("crossing_tol", s.crossing_tol),
            ("sample_dlnxi", s.sample_dlnxi),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::config(format!("solver.{name} must be positive, got {v}")));
            }
        }
        if !(s.bracket[0] < s.bracket[1]) {
            return Err(CliError::config(format!("bracket must be ordered, got {:?}", s.bracket)));
        }
        if s.scan_points < 2 {
            return Err(CliError::config("solver.scan_points must be at least 2"));
        }
        if self.grid.t.iter().any(|t| !(*t < 0.0)) {
            return Err(CliError::config("grid.t values must be negative"));
        }
        Ok(())
    }

    pub fn eos(&self) -> Result<EosModel, CliError> {
        let e = &self.eos;
        let need = |v: Option<f64>, key: &str| v.ok_or_else(|| CliError::config(format!("eos.{key} is required")));
        let lo = e.rho_lo.unwrap_or(0.0);
        let hi = e.rho_hi.unwrap_or(f64::INFINITY);
        let model = match e.family {
            FamilyName::IdealGamma => EosModel::ideal(need(e.gamma, "gamma")?),
            FamilyName::DensityScaled => match (&e.table, e.s, e.q) {
                (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                    return Err(CliError::config("eos: give either s/q or table, not both"))
                }
                (Some(t), None, None) => {
                    let (rho, f): (Vec<f64>, Vec<f64>) = t.iter().map(|p| (p[0], p[1])).unzip();
                    EosModel::tabulated(rho, f)
                }
                (None, s, q) => {
                    EosModel::pseudo_mie_gruneisen(need(s, "s")?, need(q, "q")?, e.rho_ref.unwrap_or(1.0))
                }
            },
            FamilyName::GeneralF => EosModel::general(None, lo, hi),
            FamilyName::PowerLawScaled => EosModel::power_law(need(e.lambda, "lambda")?, None, lo, hi),
        }
        .map_err(|err| CliError::config(format!("eos: {err}")))?;
        Ok(match e.p0 {
            Some(p0) => model.with_p0(p0),
            None => model,
        })
    }

    /// Problem with starting exponents; the searched one is overwritten by the solver.
    pub fn spec(&self) -> Result<ProblemSpec, CliError> {
        let start = Exponents { alpha: self.exponents.alpha.unwrap_or(-0.5), beta: self.exponents.beta.unwrap_or(0.0) };
        let mut spec = ProblemSpec::new(self.problem.kind, self.problem.k, self.eos()?, start)
            .map_err(|e| CliError::config(e.to_string()))?;
        if let Some(r) = self.problem.rho0 {
            spec.rho0 = r;
        }
        Ok(spec)
    }

    /// Value of the non-searched exponent, when the constraints leave it free.
    pub fn fixed_exponent(&self) -> Option<f64> {
        match self.exponents.free {
            FreeParam::Alpha => self.exponents.beta,
            FreeParam::Beta => self.exponents.alpha,
        }
    }

    pub fn solver_options(&self) -> SolverOptions {
        let s = &self.solver;
        SolverOptions {
            epsilon: s.epsilon,
            h_jump: s.h_jump,
            delta_stop: s.delta_stop,
            xi_max_factor: s.xi_max_factor,
            rtol: s.rtol,
            atol: s.atol,
            mode: s.mode,
            max_steps: s.max_steps,
            max_iterations: s.max_iterations,
            crossing_tol: s.crossing_tol,
            sample_dlnxi: s.sample_dlnxi,
        }
    }

    /// Canonical TOML rendering of the effective configuration.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical rendering, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
