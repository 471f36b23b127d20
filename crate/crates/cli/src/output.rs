//! Deterministic file formats and their loaders.
//!
//! Every float is written with 17 significant digits (`{:.16e}`), which
//! round-trips `f64` exactly. JSON goes through [`Json17`], which does the
//! same for numbers inside JSON documents.

use std::fs;
use std::io;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use selfsim_core::eigen::ScanPoint;
use selfsim_core::similarity::derived;
use selfsim_core::{FreeParam, PhysicalSample, ProblemKind, Region, SimilarityState, SolutionProfile};

use crate::config::{Format, RunConfig};
use crate::CliError;

pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Pretty JSON with floats in `{:.16e}` form.
pub struct Json17<'a>(PrettyFormatter<'a>);

impl Formatter for Json17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt17(value).as_bytes())
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Json17(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("serializable to JSON");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON is UTF-8")
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::runtime(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))
}

fn format_of(path: &Path) -> Format {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => Format::Json,
        _ => Format::Csv,
    }
}

/// Rows with a fixed CSV header.
pub trait Table: Serialize + DeserializeOwned {
    const HEADER: &'static [&'static str];
    fn record(&self) -> Vec<String>;
}

pub fn render_table<T: Table>(rows: &[T], format: Format) -> String {
    match format {
        Format::Json => to_json(&rows),
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
            w.write_record(T::HEADER).expect("in-memory write");
            for r in rows {
                w.write_record(r.record()).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is UTF-8")
        }
    }
}

pub fn write_table<T: Table>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    write(path, &render_table(rows, format_of(path)))
}

pub fn read_table<T: Table>(path: &Path) -> Result<Vec<T>, CliError> {
    let text = read(path)?;
    let bad = |e: String| CliError::config(format!("malformed {}: {e}", path.display()));
    match format_of(path) {
        Format::Json => serde_json::from_str(&text).map_err(|e| bad(e.to_string())),
        Format::Csv => {
            let mut r = csv::Reader::from_reader(text.as_bytes());
            let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
            if header.iter().ne(T::HEADER.iter().copied()) {
                return Err(bad(format!("expected header {}", T::HEADER.join(","))));
            }
            r.deserialize().collect::<Result<Vec<T>, _>>().map_err(|e| bad(e.to_string()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct ProfileRow {
    pub xi: f64,
    pub R: f64,
    pub V: f64,
    pub Pi: f64,
    #[serde(deserialize_with = "selfsim_core::serde_num::f64_or_nan")]
    pub X: f64,
    #[serde(deserialize_with = "selfsim_core::serde_num::f64_or_nan")]
    pub C2: f64,
    #[serde(deserialize_with = "selfsim_core::serde_num::f64_or_nan")]
    pub delta: f64,
    #[serde(deserialize_with = "selfsim_core::serde_num::f64_or_nan")]
    pub numerator: f64,
}

impl Table for ProfileRow {
    const HEADER: &'static [&'static str] = &["xi", "R", "V", "Pi", "X", "C2", "delta", "numerator"];
    fn record(&self) -> Vec<String> {
        [self.xi, self.R, self.V, self.Pi, self.X, self.C2, self.delta, self.numerator].map(fmt17).to_vec()
    }
}

impl ProfileRow {
    pub fn state(&self) -> SimilarityState {
        SimilarityState::new(self.xi, self.R, self.V, self.Pi)
    }
}

pub fn profile_rows(profile: &SolutionProfile) -> Vec<ProfileRow> {
    profile
        .samples
        .iter()
        .map(|s| {
            let (x, c2, delta, n) = match derived(&profile.spec, s) {
                Ok(d) => (d.x, d.c2, d.delta, d.numerator),
                Err(_) => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
            };
            ProfileRow { xi: s.xi, R: s.r, V: s.v, Pi: s.pi, X: x, C2: c2, delta, numerator: n }
        })
        .collect()
}

impl Table for ScanPoint {
    const HEADER: &'static [&'static str] =
        &["value", "stop_reason", "stop_xi", "numerator_sign", "numerator", "delta", "error"];
    fn record(&self) -> Vec<String> {
        vec![
            fmt17(self.value),
            self.stop_reason.map(|r| r.to_string()).unwrap_or_default(),
            fmt17(self.stop_xi),
            self.numerator_sign.to_string(),
            fmt17(self.numerator),
            fmt17(self.delta),
            self.error.clone().unwrap_or_default(),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalRow {
    pub r: f64,
    pub t: f64,
    #[serde(deserialize_with = "selfsim_core::serde_num::f64_or_nan")]
    pub rho: f64,
    #[serde(deserialize_with = "selfsim_core::serde_num::f64_or_nan")]
    pub u: f64,
    #[serde(deserialize_with = "selfsim_core::serde_num::f64_or_nan")]
    pub p: f64,
    pub region: Region,
}

impl From<&PhysicalSample> for PhysicalRow {
    fn from(s: &PhysicalSample) -> Self {
        PhysicalRow { r: s.r, t: s.t, rho: s.rho, u: s.u, p: s.p, region: s.region }
    }
}

impl Table for PhysicalRow {
    const HEADER: &'static [&'static str] = &["r", "t", "rho", "u", "p", "region"];
    fn record(&self) -> Vec<String> {
        let mut v = [self.r, self.t, self.rho, self.u, self.p].map(fmt17).to_vec();
        v.push(self.region.to_string());
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub tol_alpha: f64,
    pub rtol: f64,
    pub atol: f64,
    pub delta_stop: f64,
    pub epsilon: f64,
    pub h_jump: f64,
    pub xi_max_factor: f64,
    pub crossing_tol: f64,
    pub sample_dlnxi: f64,
}

impl Tolerances {
    pub fn from_config(c: &RunConfig) -> Self {
        let s = &c.solver;
        Tolerances {
            tol_alpha: s.tol_alpha,
            rtol: s.rtol,
            atol: s.atol,
            delta_stop: s.delta_stop,
            epsilon: s.epsilon,
            h_jump: s.h_jump,
            xi_max_factor: s.xi_max_factor,
            crossing_tol: s.crossing_tol,
            sample_dlnxi: s.sample_dlnxi,
        }
    }
}

/// One refined sign change of the numerator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub bracket: [f64; 2],
    #[serde(deserialize_with = "selfsim_core::serde_num::f64_or_nan")]
    pub value: f64,
    pub crossed: bool,
    #[serde(deserialize_with = "selfsim_core::serde_num::f64_or_nan")]
    pub sonic_xi: f64,
    #[serde(deserialize_with = "selfsim_core::serde_num::f64_or_nan")]
    pub residual: f64,
    pub iterations: usize,
    pub error: Option<String>,
}

/// Metadata of a solved eigenvalue problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenMeta {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub kind: ProblemKind,
    pub k: u8,
    pub free: FreeParam,
    pub alpha: f64,
    pub beta: f64,
    pub xi_s: f64,
    pub sonic_xi: f64,
    /// `|N|` at the sonic point and the largest `|N|` on the trajectory.
    pub residual: f64,
    pub residual_scale: f64,
    pub iterations: usize,
    pub bracket: [f64; 2],
    pub tolerances: Tolerances,
    pub candidates: Vec<Candidate>,
    pub config: RunConfig,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write(path, &to_json(value))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("malformed {}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    write(path, text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use selfsim_core::eigen::StopReason;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, -0.852896, 1.0 / 3.0, 6.02214076e23, 5e-324, -0.0] {
            let s = fmt17(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(fmt17(0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn json_numbers_are_fixed_format() {
        #[derive(Serialize, Deserialize, PartialEq, Debug)]
        struct S {
            a: f64,
            n: usize,
        }
        let s = to_json(&S { a: 0.5, n: 3 });
        assert!(s.contains("5.0000000000000000e-1"), "{s}");
        let back: S = serde_json::from_str(&s).unwrap();
        assert_eq!(back, S { a: 0.5, n: 3 });
    }

    #[test]
    fn scan_table_round_trips_with_nan_and_text() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![
            ScanPoint {
                value: -0.4,
                stop_reason: Some(StopReason::SonicApproach),
                stop_xi: 1.25,
                numerator_sign: -1,
                numerator: -3.5e-4,
                delta: 1e-9,
                error: None,
            },
            ScanPoint {
                value: -0.3,
                stop_reason: None,
                stop_xi: f64::NAN,
                numerator_sign: 0,
                numerator: f64::NAN,
                delta: f64::NAN,
                error: Some("density 3.1, outside (0, 3.04)".into()),
            },
        ];
        for ext in ["csv", "json"] {
            let p = dir.path().join(format!("scan.{ext}"));
            write_table(&p, &rows).unwrap();
            let back: Vec<ScanPoint> = read_table(&p).unwrap();
            assert_eq!(back[0], rows[0]);
            assert_eq!(back[1].error, rows[1].error);
            assert!(back[1].stop_xi.is_nan() && back[1].stop_reason.is_none());
        }
    }

    #[test]
    fn header_is_checked() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("profile.csv");
        fs::write(&p, "xi,V,R,Pi,X,C2,delta,numerator\n").unwrap();
        assert_eq!(read_table::<ProfileRow>(&p).unwrap_err().code, 2);
    }
}
