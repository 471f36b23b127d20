//! Command implementations. Each writes its files and returns what it computed.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use selfsim_core::eigen::{find_eigenvalue, scan, sign_changes, EigenResult, ScanPoint};
use selfsim_core::reconstruct::sample_grid;
use selfsim_core::verify::verify;
use selfsim_core::{
    ConstraintSet, EigenProblem, Error, Exponents, PhysicalSample, SolutionProfile, VerificationReport, VerifyOptions,
};

use crate::config::RunConfig;
use crate::output::{
    profile_rows, read_json, read_table, write_json, write_table, write_text, Candidate, EigenMeta, PhysicalRow,
    ProfileRow, Tolerances,
};
use crate::plot::profile_svg;
use crate::{CliError, EXIT_NO_ROOT, EXIT_OK, EXIT_UNSOLVABLE, EXIT_VERIFY};

pub const META_FILE: &str = "eigen.json";
pub const REPORT_FILE: &str = "verification.json";
pub const PLOT_FILE: &str = "profile.svg";

pub fn profile_path(cfg: &RunConfig) -> PathBuf {
    cfg.output.dir.join(format!("profile.{}", cfg.output.format.ext()))
}

pub fn scan_path(cfg: &RunConfig) -> PathBuf {
    cfg.output.dir.join(format!("scan.{}", cfg.output.format.ext()))
}

pub fn physical_path(cfg: &RunConfig) -> PathBuf {
    cfg.output.dir.join(format!("physical.{}", cfg.output.format.ext()))
}

pub fn cmd_classify(cfg: &RunConfig) -> Result<(ConstraintSet, i32), CliError> {
    let cs = cfg.eos()?.classify_constraints(cfg.problem.kind);
    let code = if cs.free_dims == 0 { EXIT_UNSOLVABLE } else { EXIT_OK };
    Ok((cs, code))
}

fn problem(cfg: &RunConfig) -> Result<EigenProblem, CliError> {
    let spec = cfg.spec()?;
    let cs = spec.constraints();
    if cs.free_dims == 0 {
        return Err(CliError::new(EXIT_UNSOLVABLE, format!("no scaling solution: {cs}")));
    }
    let fixed = if cs.free_dims == 2 {
        Some(cfg.fixed_exponent().ok_or_else(|| {
            CliError::config(format!("{cs}: set the non-searched exponent in [exponents]"))
        })?)
    } else {
        None
    };
    EigenProblem::new(spec, cfg.exponents.free, fixed).map_err(|e| CliError::config(e.to_string()))
}

pub fn cmd_scan(cfg: &RunConfig) -> Result<Vec<ScanPoint>, CliError> {
    let p = problem(cfg)?;
    let [lo, hi] = cfg.solver.bracket;
    let points = scan(&p, lo, hi, cfg.solver.scan_points, &cfg.solver_options());
    write_table(&scan_path(cfg), &points)?;
    Ok(points)
}

pub struct SolveOutcome {
    pub scan: Vec<ScanPoint>,
    pub candidates: Vec<Candidate>,
    /// First candidate, in bracket order, whose trajectory crosses the sonic point.
    pub result: Option<EigenResult>,
    pub files: Vec<PathBuf>,
}

/// Scans the bracket, refines every sign change and writes the first crossing solution.
pub fn cmd_solve(cfg: &RunConfig) -> Result<SolveOutcome, CliError> {
    let p = problem(cfg)?;
    let opts = cfg.solver_options();
    let [lo, hi] = cfg.solver.bracket;
    let points = scan(&p, lo, hi, cfg.solver.scan_points, &opts);
    let mut files = vec![scan_path(cfg)];
    write_table(&files[0], &points)?;
    let brackets = sign_changes(&points);
    if brackets.is_empty() {
        let signs: Vec<String> = points.iter().map(|s| s.numerator_sign.to_string()).collect();
        return Err(CliError::new(
            EXIT_NO_ROOT,
            format!("no numerator sign change in ({lo}, {hi}); signs {}", signs.join(" ")),
        ));
    }
    let tol = cfg.solver.tol_alpha;
    let results: Vec<Result<EigenResult, Error>> =
        brackets.par_iter().map(|&b| find_eigenvalue(&p, b, tol, &opts)).collect();
    let candidates: Vec<Candidate> = brackets
        .iter()
        .zip(&results)
        .map(|(b, r)| match r {
            Ok(e) => Candidate {
                bracket: [b.0, b.1],
                value: e.value,
                crossed: true,
                sonic_xi: e.sonic_xi,
                residual: e.residual / e.residual_scale,
                iterations: e.iterations,
                error: None,
            },
            Err(err) => Candidate {
                bracket: [b.0, b.1],
                value: f64::NAN,
                crossed: false,
                sonic_xi: f64::NAN,
                residual: f64::NAN,
                iterations: 0,
                error: Some(err.to_string()),
            },
        })
        .collect();
    let result = results.into_iter().find_map(|r| r.ok());
    let Some(res) = result else {
        let why: Vec<String> = candidates.iter().filter_map(|c| c.error.clone()).collect();
        return Err(CliError::new(
            EXIT_NO_ROOT,
            format!("no sign change led to a sonic crossing: {}", why.join("; ")),
        ));
    };
    let rows = profile_rows(&res.profile);
    let pp = profile_path(cfg);
    write_table(&pp, &rows)?;
    files.push(pp);
    let meta = EigenMeta {
        tool: "selfsim".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: cfg.hash(),
        kind: cfg.problem.kind,
        k: cfg.problem.k,
        free: res.free,
        alpha: res.exponents.alpha,
        beta: res.exponents.beta,
        xi_s: res.profile.xi_s,
        sonic_xi: res.sonic_xi,
        residual: res.residual,
        residual_scale: res.residual_scale,
        iterations: res.iterations,
        bracket: [res.bracket.0, res.bracket.1],
        tolerances: Tolerances::from_config(cfg),
        candidates: candidates.clone(),
        config: cfg.clone(),
    };
    let mp = cfg.output.dir.join(META_FILE);
    write_json(&mp, &meta)?;
    files.push(mp);
    if cfg.output.plot {
        let sp = cfg.output.dir.join(PLOT_FILE);
        write_text(&sp, &profile_svg(&rows, Some(res.sonic_xi)))?;
        files.push(sp);
    }
    Ok(SolveOutcome { scan: points, candidates, result: Some(res), files })
}

/// Loads a profile table together with the metadata file next to it.
///
/// Without metadata the exponents come from `[exponents]` and no sonic point is assumed.
pub fn load_profile(cfg: &RunConfig, path: &Path) -> Result<SolutionProfile, CliError> {
    let rows: Vec<ProfileRow> = read_table(path)?;
    let meta_path = path.parent().unwrap_or(Path::new(".")).join(META_FILE);
    let spec = cfg.spec()?;
    let (exponents, sonic) = if meta_path.exists() {
        let m: EigenMeta = read_json(&meta_path)?;
        if m.kind != cfg.problem.kind || m.k != cfg.problem.k {
            return Err(CliError::config(format!(
                "{} was solved for {} k={}, config asks for {} k={}",
                meta_path.display(),
                m.kind,
                m.k,
                cfg.problem.kind,
                cfg.problem.k
            )));
        }
        (Exponents { alpha: m.alpha, beta: m.beta }, Some(m.sonic_xi))
    } else {
        match (cfg.exponents.alpha, cfg.exponents.beta) {
            (Some(alpha), Some(beta)) => (Exponents { alpha, beta }, None),
            _ => {
                return Err(CliError::config(format!(
                    "{} not found; [exponents] alpha and beta are needed instead",
                    meta_path.display()
                )))
            }
        }
    };
    let spec = spec.with_exponents(exponents);
    let states = rows.iter().map(ProfileRow::state).collect();
    SolutionProfile::new(&spec, states, sonic).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

pub fn cmd_reconstruct(cfg: &RunConfig, profile: Option<&Path>) -> Result<Vec<PhysicalSample>, CliError> {
    let pp = profile.map(Path::to_path_buf).unwrap_or_else(|| profile_path(cfg));
    let prof = load_profile(cfg, &pp)?;
    let r = cfg.grid.radii()?;
    let samples = sample_grid(&prof, &r, &cfg.grid.t);
    let rows: Vec<PhysicalRow> = samples.iter().map(PhysicalRow::from).collect();
    write_table(&physical_path(cfg), &rows)?;
    Ok(samples)
}

pub fn cmd_verify(cfg: &RunConfig, profile: Option<&Path>) -> Result<(VerificationReport, i32), CliError> {
    let pp = profile.map(Path::to_path_buf).unwrap_or_else(|| profile_path(cfg));
    let prof = load_profile(cfg, &pp)?;
    let report = verify(&prof, &VerifyOptions::default()).map_err(|e| CliError::runtime(e.to_string()))?;
    write_json(&cfg.output.dir.join(REPORT_FILE), &report)?;
    let code = if report.passed { EXIT_OK } else { EXIT_VERIFY };
    Ok((report, code))
}
