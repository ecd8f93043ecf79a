//! Result artifacts of a run.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::engine::{Config, DemonsParams, RegistrationResult, StepRecord};
use crate::error::{Error, Result};
use crate::io::{write_displacement, write_pgm};
use crate::meshq::det_jacobian;
use crate::metrics::MetricsReport;
use crate::synth::PairKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ocrdir,
    Demons,
}

/// How the input pair was obtained.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum InputSpec {
    Files {
        reference: PathBuf,
        template: PathBuf,
    },
    Generated {
        kind: PairKind,
        m: usize,
        n: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub input: InputSpec,
    pub method: Method,
    pub config: Config,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub demons: Option<DemonsParams>,
    pub out_dir: PathBuf,
    /// Set when the run stopped before reaching `t = 1`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aborted: Option<String>,
}

#[derive(Serialize)]
struct MetricsFile<'a> {
    #[serde(flatten)]
    metrics: &'a MetricsReport,
    status: &'a str,
    per_step: &'a [StepRecord],
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `m` lines, line `i` holding `det(i, j)` for `j = 0..n`.
pub fn detjac_csv(result: &RegistrationResult) -> String {
    let det = det_jacobian(&result.omega_final);
    let spec = det.spec();
    let mut s = String::with_capacity(spec.len() * 13);
    for i in 0..spec.m() {
        for j in 0..spec.n() {
            if j > 0 {
                s.push(',');
            }
            write!(s, "{:.9}", det.get(i, j)).unwrap();
        }
        s.push('\n');
    }
    s
}

/// Deformed grid lines, every `stride`-th row and column.
pub fn grid_svg(result: &RegistrationResult, stride: usize) -> String {
    let omega = &result.omega_final;
    let spec = omega.spec();
    let stride = stride.max(1);
    let size = 512.0;
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    let mut line = |pts: &mut dyn Iterator<Item = [f64; 2]>| {
        let coords: Vec<String> = pts
            .map(|p| format!("{:.2},{:.2}", p[0] * size, p[1] * size))
            .collect();
        writeln!(
            s,
            r#"<polyline fill="none" stroke="black" stroke-width="0.6" points="{}"/>"#,
            coords.join(" ")
        )
        .unwrap();
    };
    for j in (0..spec.n()).step_by(stride) {
        line(&mut (0..spec.m()).map(|i| omega.get(i, j)));
    }
    for i in (0..spec.m()).step_by(stride) {
        line(&mut (0..spec.n()).map(|j| omega.get(i, j)));
    }
    s.push_str("</svg>\n");
    s
}

pub fn metrics_json(result: &RegistrationResult, status: &str) -> String {
    let file = MetricsFile {
        metrics: &result.metrics,
        status,
        per_step: &result.per_step,
    };
    serde_json::to_string_pretty(&file).expect("metrics serialise")
}

pub fn per_step_csv(steps: &[StepRecord]) -> String {
    let mut s = String::from("t,dt,r_min,det_min,det_max,inner_iters,halvings,corrected_points\n");
    for r in steps {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.t, r.dt, r.r_min, r.det_min, r.det_max, r.inner_iters, r.halvings, r.corrected_points
        )
        .unwrap();
    }
    s
}

/// Writes `warped.pgm`, `displacement.f64`, `detjac.csv`, `grid.svg`,
/// `metrics.json` and `manifest.json` into `manifest.out_dir`.
pub fn emit(result: &RegistrationResult, manifest: &RunManifest) -> Result<Vec<PathBuf>> {
    let dir = &manifest.out_dir;
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.clone(),
        source,
    })?;
    let spec = result.omega_final.spec();
    let status = if manifest.aborted.is_some() {
        "aborted"
    } else if result.metrics.re_ssd.is_none() {
        "perfect_match"
    } else {
        "ok"
    };
    let paths: Vec<PathBuf> = [
        "warped.pgm",
        "displacement.f64",
        "detjac.csv",
        "grid.svg",
        "metrics.json",
        "manifest.json",
    ]
    .iter()
    .map(|f| dir.join(f))
    .collect();
    write_pgm(&paths[0], &result.warped)?;
    write_displacement(&paths[1], &result.displacement)?;
    write_file(&paths[2], detjac_csv(result))?;
    write_file(
        &paths[3],
        grid_svg(result, (spec.m().max(spec.n()) / 32).max(1)),
    )?;
    write_file(&paths[4], metrics_json(result, status))?;
    write_file(
        &paths[5],
        serde_json::to_string_pretty(manifest).expect("manifest serialises"),
    )?;
    Ok(paths)
}
