//! Figure-ready bundles: mean and a ±1 std band across seeds.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use qrpolicy_core::stats;

use crate::config::{Experiment, ExperimentConfig};
use crate::experiments::Learner;
use crate::output::seed_file;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandPoint {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Pointwise mean ± population std over equally indexed series. Series of
/// different lengths are cut to the shortest.
pub fn band(series: &[Vec<f64>]) -> Vec<BandPoint> {
    let len = series.iter().map(Vec::len).min().unwrap_or(0);
    (0..len)
        .map(|i| {
            let column: Vec<f64> = series.iter().map(|s| s[i]).collect();
            let mean = stats::mean(&column);
            let sd = stats::std_dev(&column);
            BandPoint {
                mean,
                lower: mean - sd,
                upper: mean + sd,
            }
        })
        .collect()
}

/// Reads a CSV with a header row into `(header, rows)`.
pub fn read_csv(path: &Path) -> anyhow::Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header = match lines.next() {
        Some(h) => h.split(',').map(str::to_owned).collect(),
        None => bail!("{} is empty", path.display()),
    };
    let rows = lines
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect();
    Ok((header, rows))
}

/// One numeric column of a CSV file.
pub fn read_column(path: &Path, column: &str) -> anyhow::Result<Vec<f64>> {
    let (header, rows) = read_csv(path)?;
    let idx = header
        .iter()
        .position(|h| h == column)
        .with_context(|| format!("{} has no column '{column}'", path.display()))?;
    rows.iter()
        .map(|r| {
            r.get(idx)
                .with_context(|| format!("short row in {}", path.display()))?
                .parse::<f64>()
                .with_context(|| format!("bad number in {}", path.display()))
        })
        .collect()
}

#[derive(Debug, Default)]
pub struct PlotReport {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

fn write_band(path: &Path, x_name: &str, xs: &[f64], points: &[BandPoint], seeds: usize) -> anyhow::Result<()> {
    let mut w = std::io::BufWriter::new(fs::File::create(path).with_context(|| format!("creating {}", path.display()))?);
    writeln!(w, "{x_name},mean,lower,upper,seeds")?;
    for (x, p) in xs.iter().zip(points) {
        writeln!(w, "{x},{},{},{},{seeds}", p.mean, p.lower, p.upper)?;
    }
    w.flush()?;
    Ok(())
}

/// Builds `plot/` inside a finished results directory. Missing per-seed
/// files are skipped and reported as warnings.
pub fn plotdata(dir: &Path) -> anyhow::Result<PlotReport> {
    let mut config = ExperimentConfig::from_json_file(&dir.join("config.json"))?;
    config.out = dir.to_path_buf();
    let plot = dir.join("plot");
    fs::create_dir_all(&plot).with_context(|| format!("creating {}", plot.display()))?;
    let mut report = PlotReport::default();
    match config.experiment {
        Experiment::Fitbench => fitbench_bundle(&config, &plot, &mut report)?,
        Experiment::Rps => {
            for learner in [Learner::Quantile, Learner::Gaussian] {
                curve_bundle(&config, learner, &plot, &mut report)?;
            }
        }
        Experiment::Choice => {
            for learner in [Learner::Qrdrl, Learner::Ppo] {
                curve_bundle(&config, learner, &plot, &mut report)?;
            }
        }
    }
    Ok(report)
}

fn curve_bundle(config: &ExperimentConfig, learner: Learner, plot: &Path, report: &mut PlotReport) -> anyhow::Result<()> {
    let (x_name, y_name) = match config.experiment {
        Experiment::Rps => ("iteration", "return"),
        _ => ("env_steps", "mean_return"),
    };
    let mut curves = Vec::new();
    let mut xs: Option<Vec<f64>> = None;
    let mut pooled: Option<Vec<f64>> = None;
    let mut template: Option<PathBuf> = None;
    for &seed in &config.seeds {
        let path = seed_file(&config.out, "curves", learner, seed);
        if !path.exists() {
            report.warnings.push(format!("missing {}", path.display()));
            continue;
        }
        let ys = read_column(&path, y_name)?;
        curves.push(match config.experiment {
            Experiment::Rps => stats::trailing_moving_average(&ys, config.rps.smoothing),
            _ => ys,
        });
        if xs.is_none() {
            xs = Some(read_column(&path, x_name)?);
        }
        let hist = seed_file(&config.out, "histograms", learner, seed);
        match read_column(&hist, "count") {
            Ok(counts) => match &mut pooled {
                Some(acc) => acc.iter_mut().zip(&counts).for_each(|(a, c)| *a += c),
                None => {
                    pooled = Some(counts);
                    template = Some(hist);
                }
            },
            Err(_) => report.warnings.push(format!("missing {}", hist.display())),
        }
    }
    if curves.is_empty() {
        report.warnings.push(format!("no runs found for {}", learner.name()));
        return Ok(());
    }
    let points = band(&curves);
    let path = plot.join(format!("{}_return.csv", learner.name()));
    write_band(&path, x_name, xs.as_deref().unwrap_or_default(), &points, curves.len())?;
    report.files.push(path);

    if let (Some(counts), Some(template)) = (pooled, template) {
        let (header, rows) = read_csv(&template)?;
        let path = plot.join(format!("{}_actions.csv", learner.name()));
        let mut w = std::io::BufWriter::new(fs::File::create(&path)?);
        writeln!(w, "{}", header.join(","))?;
        for (row, c) in rows.iter().zip(&counts) {
            writeln!(w, "{},{},{c}", row[0], row[1])?;
        }
        w.flush()?;
        report.files.push(path);
    }
    Ok(())
}

fn fitbench_bundle(config: &ExperimentConfig, plot: &Path, report: &mut PlotReport) -> anyhow::Result<()> {
    let path = config.out.join("predictions.csv");
    let (_, rows) = read_csv(&path)?;
    let path = plot.join("fitbench_predictions.csv");
    let mut w = std::io::BufWriter::new(fs::File::create(&path)?);
    writeln!(w, "architecture,distribution,tau,analytic,mean,lower,upper,seeds")?;
    let mut keys: Vec<(String, String)> = Vec::new();
    for r in &rows {
        let key = (r[0].clone(), r[1].clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    for (arch, dist) in keys {
        let mine: Vec<&Vec<String>> = rows.iter().filter(|r| r[0] == arch && r[1] == dist).collect();
        let mut seeds: Vec<&str> = Vec::new();
        for r in &mine {
            if !seeds.contains(&r[2].as_str()) {
                seeds.push(&r[2]);
            }
        }
        let present: Vec<u64> = seeds.iter().filter_map(|s| s.parse().ok()).collect();
        for s in &config.seeds {
            if !present.contains(s) {
                report.warnings.push(format!("{arch}/{dist}: missing seed {s}"));
            }
        }
        let series: Vec<Vec<f64>> = seeds
            .iter()
            .map(|s| mine.iter().filter(|r| r[2] == *s).map(|r| r[4].parse().unwrap_or(f64::NAN)).collect())
            .collect();
        let first = mine.iter().filter(|r| r[2] == seeds[0]);
        for (r, p) in first.zip(band(&series)) {
            writeln!(w, "{arch},{dist},{},{},{},{},{},{}", r[3], r[5], p.mean, p.lower, p.upper, series.len())?;
        }
    }
    w.flush()?;
    report.files.push(path);
    Ok(())
}
