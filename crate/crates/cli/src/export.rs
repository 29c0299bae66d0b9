//! Deterministic writers for trajectory heatmaps, curves, grids, and the
//! run manifest. All numeric output uses fixed 17-significant-digit decimal
//! formatting and LF line endings, so identical inputs produce byte-identical
//! data files.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ptdimer_core::Trajectory;
use serde::Serialize;

/// Floor for log10 intensities: the broken phase spans > 15 decades, and
/// anything below 1e-16 is formatting noise.
pub const LOG10_CLAMP: f64 = -16.0;

/// 17 significant digits: enough to round-trip any f64 exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn log10_clamped(intensity: f64) -> f64 {
    if intensity.is_nan() {
        return LOG10_CLAMP;
    }
    intensity.log10().max(LOG10_CLAMP)
}

/// Collects written file names so the manifest can list every artifact.
pub struct OutputSink {
    dir: PathBuf,
    files: Vec<String>,
}

impl OutputSink {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }
}

pub fn heatmap_csv(m_values: &[i64], times: &[f64], row: impl Fn(usize, usize) -> f64) -> String {
    let mut out = String::new();
    out.push('m');
    for &t in times {
        out.push(',');
        out.push_str(&fmt_f64(t));
    }
    out.push('\n');
    for (i, &m) in m_values.iter().enumerate() {
        out.push_str(&m.to_string());
        for j in 0..times.len() {
            out.push(',');
            out.push_str(&fmt_f64(log10_clamped(row(i, j))));
        }
        out.push('\n');
    }
    out
}

/// Writes `<prefix>intensity_g.csv`, `<prefix>intensity_l.csv` (log10,
/// clamped at -16) and `<prefix>total_intensity.csv` (linear).
pub fn export_trajectory(
    sink: &mut OutputSink,
    traj: &Trajectory<f64>,
    m_values: &[i64],
    prefix: &str,
) -> Result<()> {
    anyhow::ensure!(
        m_values.len() == traj.n_dimers(),
        "dimer index list has {} entries for {} dimers",
        m_values.len(),
        traj.n_dimers()
    );
    let times = &traj.times;
    sink.write(
        &format!("{prefix}intensity_g.csv"),
        &heatmap_csv(m_values, times, |i, j| traj.intensity_g[[i, j]]),
    )?;
    sink.write(
        &format!("{prefix}intensity_l.csv"),
        &heatmap_csv(m_values, times, |i, j| traj.intensity_l[[i, j]]),
    )?;
    let mut total = String::from("t,intensity\n");
    for (j, &t) in times.iter().enumerate() {
        total.push_str(&fmt_f64(t));
        total.push(',');
        total.push_str(&fmt_f64(traj.total[j]));
        total.push('\n');
    }
    sink.write(&format!("{prefix}total_intensity.csv"), &total)?;
    Ok(())
}

/// Generic column table: header names plus rows of pre-formatted cells.
pub fn write_table(
    sink: &mut OutputSink,
    name: &str,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<()> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    sink.write(name, &out)
}

#[derive(Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub files: Vec<String>,
    pub wall_time_ms: u64,
}

/// Writes `manifest.json` last, listing every file the sink produced
/// (including the manifest itself).
pub fn write_manifest(
    sink: &mut OutputSink,
    command: &str,
    config: &crate::config::RunConfig,
    wall_time_ms: u64,
) -> Result<()> {
    let mut files = sink.files().to_vec();
    files.push("manifest.json".into());
    files.sort();
    let manifest = Manifest {
        command: command.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config.config_hash(),
        config: serde_json::to_value(config).context("serializing config")?,
        files,
        wall_time_ms,
    };
    let text = serde_json::to_string_pretty(&manifest).context("serializing manifest")?;
    sink.write("manifest.json", &(text + "\n"))
}

/// Parse a heatmap CSV back into (m_values, times, log10 grid); used by the
/// round-trip test.
#[cfg(test)]
pub fn parse_heatmap(text: &str) -> io::Result<(Vec<i64>, Vec<f64>, Vec<Vec<f64>>)> {
    let bad = |msg: &str| io::Error::new(io::ErrorKind::InvalidData, msg.to_string());
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty heatmap file"))?;
    let times: Vec<f64> = header
        .split(',')
        .skip(1)
        .map(|s| s.parse().map_err(|_| bad("bad time value")))
        .collect::<io::Result<_>>()?;
    let mut m_values = Vec::new();
    let mut grid = Vec::new();
    for line in lines {
        let mut cells = line.split(',');
        let m = cells
            .next()
            .ok_or_else(|| bad("empty row"))?
            .parse()
            .map_err(|_| bad("bad dimer index"))?;
        let row: Vec<f64> = cells
            .map(|s| s.parse().map_err(|_| bad("bad intensity value")))
            .collect::<io::Result<_>>()?;
        if row.len() != times.len() {
            return Err(bad("row length does not match header"));
        }
        m_values.push(m);
        grid.push(row);
    }
    Ok((m_values, times, grid))
}

/// Ensure stdout errors (e.g. closed pipe) do not panic.
pub fn print_line(line: &str) {
    let _ = writeln!(io::stdout(), "{line}");
}

#[cfg(test)]
mod tests {
    use super::*;
    use ptdimer_core::{evolve, initial_state, InitialSpec, LatticeParams};
    use ptdimer_core::lattice::{Boundary, ModelKind};

    fn sample_trajectory() -> (Trajectory<f64>, Vec<i64>) {
        let p = LatticeParams::new(
            41,
            1.0,
            1.0,
            0.5,
            Boundary::Open,
            ModelKind::PtSymmetric,
        )
        .unwrap();
        let psi0 = initial_state(&p, &InitialSpec::gain_site(0)).unwrap();
        let traj = evolve(&p, &psi0, 10.0, 500).unwrap();
        (traj, p.dimer_indices().collect())
    }

    #[test]
    fn shapes_match_grid() {
        let (traj, m) = sample_trajectory();
        let dir = tempfile::tempdir().unwrap();
        let mut sink = OutputSink::new(dir.path()).unwrap();
        export_trajectory(&mut sink, &traj, &m, "").unwrap();
        let text = std::fs::read_to_string(dir.path().join("intensity_g.csv")).unwrap();
        let (ms, times, grid) = parse_heatmap(&text).unwrap();
        assert_eq!(ms.len(), 41);
        assert_eq!(times.len(), 501);
        assert_eq!(grid.len(), 41);
        assert_eq!(grid[0].len(), 501);
        assert!(!text.contains('\r'), "LF line endings only");
    }

    #[test]
    fn round_trip_recovers_intensities() {
        let (traj, m) = sample_trajectory();
        let dir = tempfile::tempdir().unwrap();
        let mut sink = OutputSink::new(dir.path()).unwrap();
        export_trajectory(&mut sink, &traj, &m, "").unwrap();
        let text = std::fs::read_to_string(dir.path().join("intensity_l.csv")).unwrap();
        let (_, _, grid) = parse_heatmap(&text).unwrap();
        for i in 0..traj.n_dimers() {
            for j in 0..traj.n_times() {
                let original = traj.intensity_l[[i, j]];
                let recovered = 10f64.powf(grid[i][j]);
                if original > 1e-15 {
                    let rel = (recovered - original).abs() / original;
                    assert!(rel < 1e-13, "cell ({i}, {j}): {recovered} vs {original}");
                } else {
                    assert!(recovered <= 1.01e-15);
                }
            }
        }
    }

    #[test]
    fn zero_intensity_clamps_to_minus_16() {
        assert_eq!(log10_clamped(0.0), -16.0);
        assert_eq!(log10_clamped(1e-30), -16.0);
        assert!((log10_clamped(1e-3) + 3.0).abs() < 1e-12);
    }

    #[test]
    fn manifest_lists_every_file() {
        let (traj, m) = sample_trajectory();
        let dir = tempfile::tempdir().unwrap();
        let mut sink = OutputSink::new(dir.path()).unwrap();
        export_trajectory(&mut sink, &traj, &m, "").unwrap();
        let cfg = crate::config::RunConfig::default();
        write_manifest(&mut sink, "evolve", &cfg, 12).unwrap();
        let text = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        let manifest: serde_json::Value = serde_json::from_str(&text).unwrap();
        let listed: Vec<&str> = manifest["files"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_str().unwrap())
            .collect();
        for name in [
            "intensity_g.csv",
            "intensity_l.csv",
            "total_intensity.csv",
            "manifest.json",
        ] {
            assert!(listed.contains(&name), "{name} missing from manifest");
            assert!(dir.path().join(name).exists());
        }
        assert_eq!(manifest["config_hash"], cfg.config_hash());
    }
}
