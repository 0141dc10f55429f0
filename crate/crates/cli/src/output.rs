//! Run directory layout: manifest, CSV files and plain-text field snapshots.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;

use convrl::config::render_config;
use convrl::field::Grid;
use convrl::train::{write_curve_rows, EvalSummary, ExperimentConfig, CURVE_HEADER};
use convrl::{EpisodeLog, Field};

pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn create(root: &Path) -> anyhow::Result<Self> {
        std::fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn csv(&self, name: &str) -> anyhow::Result<BufWriter<File>> {
        let p = self.path(name);
        Ok(BufWriter::new(File::create(&p).with_context(|| format!("creating {}", p.display()))?))
    }
}

/// `manifest.cfg`: provenance comments followed by the full config, so
/// `--config <run>/manifest.cfg` repeats the run.
pub fn write_manifest(
    dir: &RunDir,
    command: &str,
    cfg: &ExperimentConfig,
    extra: &[(&str, Option<String>)],
) -> anyhow::Result<()> {
    let mut f = dir.csv("manifest.cfg")?;
    writeln!(f, "# convrl {} run manifest", env!("CARGO_PKG_VERSION"))?;
    writeln!(f, "# command = {command}")?;
    for (k, v) in extra {
        if let Some(v) = v {
            writeln!(f, "# {k} = {v}")?;
        }
    }
    writeln!(f, "# target = {}-{}", std::env::consts::ARCH, std::env::consts::OS)?;
    writeln!(f, "# scalar = f64")?;
    writeln!(f)?;
    f.write_all(render_config(cfg).as_bytes())?;
    f.flush()?;
    Ok(())
}

pub fn tag_baseline(out: &mut impl Write, kind: &str) -> std::io::Result<()> {
    writeln!(out, "# baseline = {kind}")
}

pub fn write_evals(dir: &RunDir, evals: &[EvalSummary]) -> anyhow::Result<()> {
    let mut f = dir.csv("evals.csv")?;
    writeln!(f, "episode,mean_return,mean_final_mse,blow_ups")?;
    for e in evals {
        writeln!(f, "{},{},{},{}", e.episode, e.mean_return, e.mean_final_mse, e.blow_ups)?;
    }
    f.flush()?;
    Ok(())
}

/// Per-step curve of every evaluation episode, a summary, and snapshots when recorded.
pub fn write_eval(dir: &RunDir, logs: &[EpisodeLog], snapshots: bool) -> anyhow::Result<()> {
    let mut curve = dir.csv("eval_curve.csv")?;
    writeln!(curve, "{CURVE_HEADER}")?;
    for (i, log) in logs.iter().enumerate() {
        write_curve_rows(&mut curve, i, log)?;
    }
    let mut summary = dir.csv("eval_summary.csv")?;
    writeln!(summary, "episode,total_reward,final_mse,terminated")?;
    for (i, log) in logs.iter().enumerate() {
        writeln!(summary, "{i},{},{},{}", log.total_reward(), log.final_mse(), log.terminated)?;
    }
    summary.flush()?;
    if snapshots {
        let sdir = dir.path("snapshots");
        std::fs::create_dir_all(&sdir)?;
        for (i, log) in logs.iter().enumerate() {
            for (k, (t, field)) in log.snapshots.iter().enumerate() {
                let mut f = BufWriter::new(File::create(sdir.join(format!("episode-{i}-{k:04}.txt")))?);
                write_snapshot(&mut f, *t, field)?;
                f.flush()?;
            }
        }
    }
    Ok(())
}

pub fn write_sweep(dir: &RunDir, sweep: &[(f64, f64)]) -> anyhow::Result<()> {
    let mut f = dir.csv("opposition_sweep.csv")?;
    tag_baseline(&mut f, "opposition")?;
    writeln!(f, "gain,mean_final_mse")?;
    for (g, m) in sweep {
        writeln!(f, "{g},{m}")?;
    }
    f.flush()?;
    Ok(())
}

/// Header of `key = value` comments, then one line per grid row and component, row-major.
pub fn write_snapshot(out: &mut impl Write, t: f64, field: &Field) -> std::io::Result<()> {
    writeln!(out, "# t = {t}")?;
    writeln!(out, "# components = {}", field.components())?;
    let rows = match field.grid() {
        Grid::Line(g) => {
            writeln!(out, "# grid = line\n# length = {}\n# points = {}\n# periodic = {}", g.length, g.n_points, g.periodic)?;
            1
        }
        Grid::Plane(g) => {
            writeln!(out, "# grid = plane\n# length = {}\n# points = {} x {}\n# periodic = true", g.length, g.n, g.n)?;
            g.n
        }
    };
    for c in 0..field.components() {
        let v = field.component(c);
        let cols = v.len() / rows;
        for r in 0..rows {
            let line: Vec<String> = v[r * cols..(r + 1) * cols].iter().map(|x| x.to_string()).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use convrl::field::{Grid1D, Grid2D};

    #[test]
    fn snapshot_layout() {
        let g = Grid1D::periodic(22.0, 16).unwrap();
        let f = Field::from_fn_1d(g, |x| x);
        let mut buf = Vec::new();
        write_snapshot(&mut buf, 1.5, &f).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data.len(), 1);
        assert_eq!(data[0].split(' ').count(), 16);
        assert!(text.contains("# t = 1.5"));

        let p = Grid2D::new(1.0, 16).unwrap();
        let f = Field::from_fn_2d(p, |x, y| x + 10.0 * y);
        let mut buf = Vec::new();
        write_snapshot(&mut buf, 0.0, &f).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows.len(), 16);
        // second row holds y = dy
        let first: f64 = rows[1].split(' ').next().unwrap().parse().unwrap();
        assert!((first - 10.0 / 16.0).abs() < 1e-12);
    }
}
