use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use selfsim_cli::output::{read_json, read_table, EigenMeta, PhysicalRow, ProfileRow};
use selfsim_cli::{load_profile, RunConfig};
use selfsim_core::eigen::ScanPoint;
use selfsim_core::{Region, VerificationReport};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_selfsim")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    let out = dir.join("out");
    fs::write(&p, format!("{body}\n[output]\ndir = {:?}\n", out.display().to_string())).unwrap();
    p
}

const GUDERLEY: &str = r#"
[problem]
kind = "shock"
k = 2
[eos]
family = "ideal_gamma"
gamma = 1.4
[solver]
bracket = [-0.5, -0.1]
scan_points = 8
[grid]
t = [-1.0]
r = [0.5, 0.9, 1.0, 1.1283, 2.0, 10.0]
"#;

const CAVITY: &str = r#"
[problem]
kind = "cavity"
k = 2
[eos]
family = "density_scaled"
s = 1.489
q = 0.25
"#;

#[test]
fn classify_exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let c = write_config(d.path(), "g.toml", "[problem]\nkind = \"shock\"\n[eos]\nfamily = \"general_f\"\n");
    let o = run(&["classify", "--config", c.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stdout).contains("free_dims: 0"));

    let c = write_config(d.path(), "i.toml", "[problem]\nkind = \"cavity\"\n[eos]\nfamily = \"ideal_gamma\"\ngamma = 1.4\n");
    let o = run(&["classify", "--config", c.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("free_dims: 2"));

    let c = write_config(d.path(), "bad.toml", "[problem]\nkind = \"cavity\"\nflavour = 1\n");
    assert_eq!(code(&run(&["classify", "--config", c.to_str().unwrap()])), 2);
    assert_eq!(code(&run(&["classify", "--config", "/nonexistent/config.toml"])), 2);
}

#[test]
fn guderley_solve_reconstruct_verify() {
    let d = tempfile::tempdir().unwrap();
    let c = write_config(d.path(), "g.toml", GUDERLEY);
    let cs = c.to_str().unwrap();
    let o = run(&["solve", "--config", cs, "--plot"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = d.path().join("out");
    let meta: EigenMeta = read_json(&out.join("eigen.json")).unwrap();
    assert!((meta.alpha + 0.282826).abs() < 1e-4, "{}", meta.alpha);
    assert_eq!(meta.config_hash.len(), 64);
    assert!(out.join("profile.svg").exists());

    // The written table reloads to the same rows, bit for bit.
    let text = fs::read_to_string(out.join("profile.csv")).unwrap();
    assert!(text.starts_with("xi,R,V,Pi,X,C2,delta,numerator\n"));
    let cfg = RunConfig::load(&c).unwrap();
    let prof = load_profile(&cfg, &out.join("profile.csv")).unwrap();
    let rows: Vec<ProfileRow> = read_table(&out.join("profile.csv")).unwrap();
    let again = selfsim_cli::output::profile_rows(&prof);
    assert_eq!(rows.len(), again.len());
    for (a, b) in rows.iter().zip(&again) {
        assert_eq!(a.xi.to_bits(), b.xi.to_bits());
        assert_eq!(a.R.to_bits(), b.R.to_bits());
        assert_eq!(a.numerator.to_bits(), b.numerator.to_bits());
    }

    let o = run(&["reconstruct", "--config", cs]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let phys: Vec<PhysicalRow> = read_table(&out.join("physical.csv")).unwrap();
    assert_eq!(phys.len(), 6);
    let regions: Vec<Region> = phys.iter().map(|p| p.region).collect();
    assert_eq!(regions.windows(2).filter(|w| w[0] != w[1]).count(), 1, "{regions:?}");
    // At t = -1 the similarity columns come back unchanged.
    let at_sonic = phys.iter().find(|p| p.r == 2.0).unwrap();
    let (s, _) = prof.state_at(2.0).unwrap();
    assert!((at_sonic.rho - s.r).abs() < 1e-14 && (at_sonic.u - s.v).abs() < 1e-14 && (at_sonic.p - s.pi).abs() < 1e-14);

    let o = run(&["verify", "--config", cs]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let rep: VerificationReport = read_json(&out.join("verification.json")).unwrap();
    assert!(rep.passed && rep.pde_residual_norms.max() < 1e-5);

    // A profile labelled with a slightly wrong exponent fails the flow equations.
    let mut bad = meta.clone();
    bad.alpha += 1e-3;
    selfsim_cli::output::write_json(&out.join("eigen.json"), &bad).unwrap();
    let o = run(&["verify", "--config", cs]);
    assert_eq!(code(&o), 5);
    let rep_bad: VerificationReport = read_json(&out.join("verification.json")).unwrap();
    assert!(rep_bad.pde_residual_norms.mass > 10.0 * rep.pde_residual_norms.mass);
}

#[test]
fn json_format_round_trips() {
    let d = tempfile::tempdir().unwrap();
    let c = write_config(d.path(), "g.toml", GUDERLEY);
    let o = run(&["solve", "--config", c.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code(&o), 0);
    let out = d.path().join("out");
    let rows: Vec<ProfileRow> = read_table(&out.join("profile.json")).unwrap();
    let scan: Vec<ScanPoint> = read_table(&out.join("scan.json")).unwrap();
    assert_eq!(scan.len(), 8);
    let mut cfg = RunConfig::load(&c).unwrap();
    cfg.output.format = selfsim_cli::Format::Json;
    let prof = load_profile(&cfg, &out.join("profile.json")).unwrap();
    assert_eq!(prof.samples.len(), rows.len());
}

#[test]
fn bracket_without_root_exits_4_with_scan() {
    let d = tempfile::tempdir().unwrap();
    let c = write_config(d.path(), "c.toml", CAVITY);
    let o = run(&["solve", "--config", c.to_str().unwrap(), "--bracket", "-0.3,-0.2"]);
    assert_eq!(code(&o), 4);
    let scan: Vec<ScanPoint> = read_table(&d.path().join("out/scan.csv")).unwrap();
    assert_eq!(scan.len(), 20);
    assert!(scan.iter().all(|s| s.numerator_sign == scan[0].numerator_sign));
    assert!(!d.path().join("out/profile.csv").exists());
}

#[test]
fn flag_validation() {
    let d = tempfile::tempdir().unwrap();
    let c = write_config(d.path(), "c.toml", CAVITY);
    let cs = c.to_str().unwrap();
    assert_eq!(code(&run(&["solve", "--config", cs, "--bracket", "-0.2,-0.3"])), 2);
    assert_eq!(code(&run(&["solve", "--config", cs, "--k", "3"])), 2);
    assert_eq!(code(&run(&["solve", "--config", cs, "--tol-alpha", "0"])), 2);
}

#[test]
fn reconstruct_edge_cases() {
    let d = tempfile::tempdir().unwrap();
    // Missing profile file.
    let c = write_config(d.path(), "c.toml", CAVITY);
    assert_eq!(code(&run(&["reconstruct", "--config", c.to_str().unwrap()])), 2);

    // Quiescent shock profile without metadata: empty grid gives an empty
    // table and the flow equations hold exactly.
    let body = "[problem]\nkind = \"shock\"\n[eos]\nfamily = \"ideal_gamma\"\ngamma = 1.4\n[exponents]\nalpha = -0.3\nbeta = 0.0\n";
    let c = write_config(d.path(), "q.toml", body);
    let out = d.path().join("out");
    fs::create_dir_all(&out).unwrap();
    let mut csv = String::from("xi,R,V,Pi,X,C2,delta,numerator\n");
    for i in 0..200 {
        let xi = 1.0 + i as f64 * 0.5;
        csv.push_str(&format!("{xi:.16e},1,0,0,0,0,0,0\n"));
    }
    fs::write(out.join("profile.csv"), csv).unwrap();
    let o = run(&["reconstruct", "--config", c.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(out.join("physical.csv")).unwrap(), "r,t,rho,u,p,region\n");
    let _ = run(&["verify", "--config", c.to_str().unwrap()]);
    let rep: VerificationReport = read_json(&out.join("verification.json")).unwrap();
    assert_eq!(rep.pde_residual_norms.max(), 0.0);
}
