use std::fs;
use std::path::Path;
use std::process::Command;

use qrpolicy::config::{Experiment, ExperimentConfig};
use qrpolicy::output::Summary;
use qrpolicy::plotdata::{band, plotdata, read_column, read_csv};
use qrpolicy_core::stats;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qrpolicy"))
}

fn summary(dir: &Path) -> Summary {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn tiny_choice(out: &Path, seeds: Vec<u64>) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(Experiment::Choice);
    c.seeds = seeds;
    c.choice.steps = 512;
    c.scale = qrpolicy::Scale::Paper;
    c.hyper.steps_per_update = 128;
    c.hyper.k = 4;
    c.hyper.epochs = 2;
    c.hyper.feature_sizes = vec![8];
    c.hyper.quantile_width = 8;
    c.choice.histogram_samples = 200;
    c.out = out.to_path_buf();
    c
}

fn tiny_rps(out: &Path, seeds: Vec<u64>) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(Experiment::Rps);
    c.seeds = seeds;
    c.scale = qrpolicy::Scale::Paper;
    c.rps.iterations = 4;
    c.rps.counter.games = 60;
    c.rps.counter.eval_games = 10;
    c.rps.quantile_width = 8;
    c.rps.gaussian_hidden = 8;
    c.rps.counter.hidden = 8;
    c.rps.histogram_samples = 100;
    c.out = out.to_path_buf();
    c
}

#[test]
fn fitbench_smoke_writes_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"fitbench": {"batches": 50}}"#).unwrap();
    let out = dir.path().join("out");
    let status = bin()
        .args(["fitbench", "--seeds", "0", "--lr", "0.01", "--arch", "relu", "--dist", "gaussian"])
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let (header, rows) = read_csv(&out.join("fitbench.csv")).unwrap();
    assert_eq!(header, ["architecture", "distribution", "lr", "seed", "mse", "diverged"]);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][..4], ["relu", "gaussian", "0.01", "0"]);
    let s = summary(&out);
    assert_eq!(s.experiment, Experiment::Fitbench);
    assert_eq!(s.per_seed["relu/gaussian"], vec![rows[0][4].parse::<f64>().unwrap()]);
}

#[test]
fn malformed_config_is_reported_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, "{ not json").unwrap();
    let out = bin().arg("rps").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("parsing config"));
}

#[test]
fn choice_writes_one_curve_per_seed_and_summary_recomputes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_choice(dir.path(), vec![0, 1, 2]);
    let report = qrpolicy::run(&cfg).unwrap();
    assert_eq!(report.exit_code(), 0);
    let s = summary(dir.path());
    assert_eq!(s, report.summary);
    assert_eq!(s.config_hash, cfg.hash());

    for learner in ["qrdrl", "ppo"] {
        let mut finals = Vec::new();
        let mut a_mass = Vec::new();
        for seed in [0, 1, 2] {
            let curve = dir.path().join(format!("curves/{learner}_seed{seed}.csv"));
            let returns = read_column(&curve, "mean_return").unwrap();
            assert_eq!(returns.len(), 4);
            finals.push(qrpolicy::experiments::final_tenth(&returns));
            let actions = read_column(&dir.path().join(format!("actions/{learner}_seed{seed}.csv")), "action").unwrap();
            a_mass.push(actions.iter().filter(|&&a| (-0.6..=-0.4).contains(&a)).count() as f64 / actions.len() as f64);
            assert!(dir.path().join(format!("checkpoints/{learner}_seed{seed}.ckpt")).exists());
        }
        for (series, values) in [("final_return", &finals), ("button_a_mass", &a_mass)] {
            let key = format!("{learner}/{series}");
            assert_eq!(&s.per_seed[&key], values);
            assert!((s.mean[&key] - stats::mean(values)).abs() <= 1e-12);
            assert!((s.std[&key] - stats::std_dev(values)).abs() <= 1e-12);
        }
    }
}

#[test]
fn same_config_gives_byte_identical_csvs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        qrpolicy::run(&tiny_rps(dir, vec![0, 1])).unwrap();
        qrpolicy::run(&tiny_choice(&dir.join("choice"), vec![3])).unwrap();
    }
    let mut compared = 0;
    for sub in ["curves", "actions", "histograms", "choice/curves", "choice/actions", "choice/histograms"] {
        for entry in fs::read_dir(a.path().join(sub)).unwrap() {
            let path = entry.unwrap().path();
            let other = b.path().join(sub).join(path.file_name().unwrap());
            assert_eq!(fs::read(&path).unwrap(), fs::read(&other).unwrap(), "{}", path.display());
            compared += 1;
        }
    }
    assert_eq!(compared, 3 * 4 + 3 * 2);
    assert_eq!(fs::read(a.path().join("summary.json")).unwrap(), fs::read(b.path().join("summary.json")).unwrap());
}

#[test]
fn rps_summary_recomputes_from_curves() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_rps(dir.path(), vec![4, 5]);
    let report = qrpolicy::run(&cfg).unwrap();
    for learner in ["quantile", "gaussian"] {
        let finals: Vec<f64> = [4, 5]
            .iter()
            .map(|s| {
                let raw = read_column(&dir.path().join(format!("curves/{learner}_seed{s}.csv")), "return").unwrap();
                let smooth = stats::trailing_moving_average(&raw, 10);
                stats::mean(&smooth[smooth.len().saturating_sub(20)..])
            })
            .collect();
        let key = format!("{learner}/final_return");
        assert!((report.summary.mean[&key] - stats::mean(&finals)).abs() <= 1e-12);
        assert!((report.summary.std[&key] - stats::std_dev(&finals)).abs() <= 1e-12);
    }
}

#[test]
fn band_examples() {
    let flat = band(&[vec![1.0; 5], vec![1.0; 5], vec![1.0; 5]]);
    assert!(flat.iter().all(|p| p.mean == 1.0 && p.lower == 1.0 && p.upper == 1.0));
    let two = band(&[vec![0.0], vec![2.0]]);
    assert_eq!(two[0].mean, 1.0);
    assert_eq!(two[0].upper - two[0].mean, 1.0);
    assert_eq!(two[0].mean - two[0].lower, 1.0);
}

#[test]
fn impulse_smoothing_matches_direct_convolution() {
    let mut impulse = vec![0.0; 30];
    impulse[5] = 1.0;
    let smoothed = stats::trailing_moving_average(&impulse, 10);
    for (i, &s) in smoothed.iter().enumerate() {
        let lo = i.saturating_sub(9);
        let direct: f64 = (lo..=i).map(|j| impulse[j]).sum::<f64>() / (i - lo + 1) as f64;
        assert!((s - direct).abs() < 1e-15, "index {i}");
    }
    assert_eq!(smoothed[4], 0.0);
    assert!((smoothed[5] - 1.0 / 6.0).abs() < 1e-15);
    assert!((smoothed[14] - 0.1).abs() < 1e-15);
    assert_eq!(smoothed[15], 0.0);
}

#[test]
fn plotdata_bands_and_warns_on_missing_seed() {
    let dir = tempfile::tempdir().unwrap();
    qrpolicy::run(&tiny_rps(dir.path(), vec![0, 1])).unwrap();
    fs::remove_file(dir.path().join("curves/gaussian_seed1.csv")).unwrap();
    let report = plotdata(dir.path()).unwrap();
    assert_eq!(report.warnings.len(), 1, "{:?}", report.warnings);
    assert!(report.warnings[0].contains("gaussian_seed1"));

    let mean = read_column(&dir.path().join("plot/quantile_return.csv"), "mean").unwrap();
    let per_seed: Vec<Vec<f64>> = [0, 1]
        .iter()
        .map(|s| {
            let raw = read_column(&dir.path().join(format!("curves/quantile_seed{s}.csv")), "return").unwrap();
            stats::trailing_moving_average(&raw, 10)
        })
        .collect();
    for (i, m) in mean.iter().enumerate() {
        assert!((m - (per_seed[0][i] + per_seed[1][i]) / 2.0).abs() < 1e-12);
    }
    let seeds = read_column(&dir.path().join("plot/gaussian_return.csv"), "seeds").unwrap();
    assert!(seeds.iter().all(|&s| s == 1.0));
    let pooled = read_column(&dir.path().join("plot/quantile_actions.csv"), "count").unwrap();
    assert_eq!(pooled.iter().sum::<f64>(), 200.0);
}

#[test]
fn plotdata_fitbench_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(Experiment::Fitbench);
    cfg.seeds = vec![0, 1];
    cfg.fitbench.batches = 20;
    cfg.fitbench.lrs = vec![0.01];
    cfg.fitbench.distributions = vec![qrpolicy_core::DistributionSpec::DiscontinuousUniform];
    cfg.out = dir.path().to_path_buf();
    qrpolicy::run(&cfg).unwrap();
    let report = plotdata(dir.path()).unwrap();
    assert!(report.warnings.is_empty());
    let (_, rows) = read_csv(&dir.path().join("plot/fitbench_predictions.csv")).unwrap();
    assert_eq!(rows.len(), 3 * 99);
}
