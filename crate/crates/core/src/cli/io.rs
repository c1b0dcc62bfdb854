use crate::domain::{Factor, Lattice, VerticalGrid};
use crate::error::{Error, Result};
use crate::linear::SolutionTriple;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

/// Where a subcommand writes its artifacts.
///
/// A path ending in `.json` names the report itself, and the other
/// artifacts go next to it prefixed by its stem; any other path is a
/// directory holding `report.json` and the other artifacts.
#[derive(Debug, Clone)]
pub struct OutTarget {
    dir: PathBuf,
    report: PathBuf,
    prefix: Option<String>,
}

impl OutTarget {
    pub fn new(out: &Path) -> Self {
        if out.extension().is_some_and(|e| e == "json") {
            let dir = out.parent().map(Path::to_path_buf).unwrap_or_default();
            let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned());
            OutTarget {
                dir,
                report: out.to_path_buf(),
                prefix: stem,
            }
        } else {
            OutTarget {
                dir: out.to_path_buf(),
                report: out.join("report.json"),
                prefix: None,
            }
        }
    }

    pub fn report(&self) -> &Path {
        &self.report
    }

    /// Path of a secondary artifact.
    pub fn artifact(&self, name: &str) -> PathBuf {
        match &self.prefix {
            Some(p) => self.dir.join(format!("{p}_{name}")),
            None => self.dir.join(name),
        }
    }

    pub fn ensure(&self) -> Result<()> {
        if !self.dir.as_os_str().is_empty() {
            fs::create_dir_all(&self.dir)
                .map_err(|e| Error::Config(format!("out: cannot create {}: {e}", self.dir.display())))?;
        }
        Ok(())
    }
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// CSV table with a header row.
pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Serialized spectral state: coefficients of `u` and `p` are indexed
/// `[component][lattice point][vertical node]`, those of `eta` by lattice
/// point; every coefficient is `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub factors: Vec<Factor>,
    pub cutoffs: Vec<usize>,
    pub depth: f64,
    pub vertical_m: usize,
    pub wavenumbers: Vec<Vec<i64>>,
    pub nodes: Vec<f64>,
    pub u: Vec<Vec<Vec<[f64; 2]>>>,
    pub p: Vec<Vec<[f64; 2]>>,
    pub eta: Vec<[f64; 2]>,
}

fn pair(c: &C64) -> [f64; 2] {
    [c.re, c.im]
}

impl SolutionFile {
    pub fn new(lattice: &Lattice, grid: &VerticalGrid, x: &SolutionTriple) -> Self {
        let nlat = lattice.len();
        SolutionFile {
            factors: lattice.factors().to_vec(),
            cutoffs: lattice.cutoffs().to_vec(),
            depth: grid.depth(),
            vertical_m: grid.m(),
            wavenumbers: (0..nlat).map(|l| lattice.wavenumbers(l)).collect(),
            nodes: grid.nodes().to_vec(),
            u: (0..x.n())
                .map(|c| {
                    (0..nlat)
                        .map(|l| x.u.profile(c, l).iter().map(pair).collect())
                        .collect()
                })
                .collect(),
            p: (0..nlat)
                .map(|l| x.p.profile(0, l).iter().map(pair).collect())
                .collect(),
            eta: x.eta.comp(0).iter().map(pair).collect(),
        }
    }

    /// True when every coefficient vanishes.
    pub fn is_zero(&self) -> bool {
        let zero = |c: &[f64; 2]| c[0] == 0.0 && c[1] == 0.0;
        self.u.iter().flatten().flatten().all(zero) && self.p.iter().flatten().all(zero) && self.eta.iter().all(zero)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn out_target_modes() {
        let t = OutTarget::new(Path::new("runs/algebra.json"));
        assert_eq!(t.report(), Path::new("runs/algebra.json"));
        assert_eq!(t.artifact("ratios.csv"), Path::new("runs/algebra_ratios.csv"));
        let t = OutTarget::new(Path::new("run"));
        assert_eq!(t.report(), Path::new("run/report.json"));
        assert_eq!(t.artifact("sol.json"), Path::new("run/sol.json"));
    }
}
