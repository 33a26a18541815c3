//! Result files: convergence history, density field (CSV and PGM),
//! nodal pressures and a JSON run summary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{OptResult, RunConfig};
use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// `%g`-style formatting with six significant digits.
pub fn sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    // rounding can bump the exponent, e.g. 999999.7
    let s = format!("{:.5e}", v);
    let (mant, e) = s.split_once('e').expect("exponent present");
    let exp_rounded: i32 = e.parse().expect("integer exponent");
    let exp = exp.max(exp_rounded);
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let fixed = format!("{:.*}", decimals, v);
        trim_zeros(&fixed)
    } else {
        format!(
            "{}e{}{:02}",
            trim_zeros(mant),
            if exp_rounded < 0 { '-' } else { '+' },
            exp_rounded.abs()
        )
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

pub fn convergence_csv(result: &OptResult) -> String {
    let h = &result.history;
    let mut s = String::from("iter,compliance,volfrac,change\n");
    for i in 0..h.len() {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            i + 1,
            sig6(h.compliance[i]),
            sig6(h.volfrac[i]),
            sig6(h.change[i])
        );
    }
    s
}

/// Row-major `nely x nelx`, top row first.
pub fn density_csv(mesh: &Mesh, xphys: &[f64]) -> String {
    let mut s = String::new();
    for r in 0..mesh.nely {
        let row: Vec<String> = (0..mesh.nelx).map(|c| sig6(xphys[mesh.elem(r, c)])).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Plain grayscale image, solid dark.
pub fn density_pgm(mesh: &Mesh, xphys: &[f64]) -> String {
    let mut s = format!("P2\n{} {}\n255\n", mesh.nelx, mesh.nely);
    for r in 0..mesh.nely {
        let row: Vec<String> = (0..mesh.nelx)
            .map(|c| {
                let x = xphys[mesh.elem(r, c)].clamp(0.0, 1.0);
                ((255.0 * (1.0 - x)).round() as u8).to_string()
            })
            .collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

/// `node,x,y,p` with 0-based node ids and y measured up from the bottom.
pub fn pressure_csv(mesh: &Mesh, p: &[f64]) -> String {
    let mut s = String::from("node,x,y,p\n");
    for (k, &v) in p.iter().enumerate().take(mesh.nno) {
        let (x, y) = mesh.node_coords(k);
        let _ = writeln!(s, "{k},{x},{y},{}", sig6(v));
    }
    s
}

#[derive(Debug, Serialize)]
pub struct Summary<'a> {
    pub problem: String,
    pub final_compliance: f64,
    pub final_objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub grayness_percent: f64,
    pub final_volfrac: f64,
    pub volume_constraint: f64,
    pub final_beta: Option<f64>,
    pub config: &'a RunConfig,
}

pub fn summary_json(result: &OptResult, cfg: &RunConfig) -> String {
    let summary = Summary {
        problem: cfg.problem_name(),
        final_compliance: result.final_compliance(),
        final_objective: result.final_objective(),
        iterations: result.iterations,
        converged: result.converged,
        grayness_percent: result.grayness,
        final_volfrac: result.history.volfrac.last().copied().unwrap_or(f64::NAN),
        volume_constraint: result.final_constraint,
        final_beta: result.final_beta,
        config: cfg,
    };
    let mut s = serde_json::to_string_pretty(&summary).expect("summary is serializable");
    s.push('\n');
    s
}

fn write(path: PathBuf, contents: &str) -> Result<()> {
    fs::write(&path, contents).map_err(|source| Error::Io { path, source })
}

/// Writes all result files into `dir`, creating it if needed.
pub fn export_results(result: &OptResult, cfg: &RunConfig, mesh: &Mesh, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    write(dir.join("convergence.csv"), &convergence_csv(result))?;
    write(dir.join("density.csv"), &density_csv(mesh, &result.xphys))?;
    write(dir.join("density.pgm"), &density_pgm(mesh, &result.xphys))?;
    write(dir.join("pressure.csv"), &pressure_csv(mesh, &result.pressure))?;
    write(dir.join("result.json"), &summary_json(result, cfg))?;
    Ok(())
}
