//! Training pipeline checks on a small circle run shared across the tests in this file.

mod common;

use std::path::PathBuf;
use std::sync::OnceLock;

use pcgan::data::load_dataset;
use pcgan::metrics::{fit_circle, quadrant_shares};
use pcgan::nets::{normal_matrix, Model, PointCloud};
use pcgan::trainer::{
    collect_codes, eval_reconstruction, running_mean, train_conditional, train_hierarchical, EvalConfig, Stage,
    TrainConfig, TrainReport,
};

struct Run {
    _dir: tempfile::TempDir,
    root: PathBuf,
    report: TrainReport,
    model: Model,
}

/// 64 training clouds, 2000 conditional steps, then the hierarchical stage.
fn run() -> &'static Run {
    static RUN: OnceLock<Run> = OnceLock::new();
    RUN.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        let train = common::write_circles(&root.join("train"), 64, 100, 5);
        common::write_circles(&root.join("test"), 64, 100, 500_000);
        let config = TrainConfig {
            manifest: train,
            out: root.join("model"),
            steps: 2000,
            ..TrainConfig::circles()
        };
        let report = train_conditional(&config).unwrap();
        train_hierarchical(&TrainConfig {
            stage: Stage::Hierarchical,
            ..config.clone()
        })
        .unwrap();
        let model = Model::load(&config.out).unwrap();
        Run {
            _dir: dir,
            root,
            report,
            model,
        }
    })
}

#[test]
fn smoke_run_halves_the_upper_bound() {
    let r = run();
    let smooth = running_mean(&r.report.w_upper(), 100);
    let (first, last) = (smooth[99], *smooth.last().unwrap());
    assert!(last < 0.5 * first, "running-mean w_upper {first} -> {last}");
    assert!(r
        .report
        .rows
        .iter()
        .all(|row| row.w_upper.is_finite() && row.w_lower.is_finite()));
}

#[test]
fn training_clouds_evaluate_no_worse_than_held_out() {
    let r = run();
    let eval = |name: &str| {
        let ds = load_dataset(&r.root.join(name).join("manifest.json")).unwrap();
        eval_reconstruction(&r.model, &ds, &EvalConfig::default())
            .unwrap()
            .summary
    };
    let (seen, held_out) = (eval("train"), eval("test"));
    assert!(
        seen.mean_w_upper <= held_out.mean_w_upper,
        "train {} vs held-out {}",
        seen.mean_w_upper,
        held_out.mean_w_upper
    );
}

#[test]
fn generated_radii_stay_in_the_data_range() {
    let r = run();
    let ds = load_dataset(&r.root.join("test/manifest.json")).unwrap();
    let mut rng = pcgan::seeded_rng(1);
    let inside = ds
        .clouds
        .iter()
        .filter(|c| {
            let out = r.model.reconstruct(c, 500, &mut rng).unwrap();
            fit_circle(&out).is_ok_and(|f| f.radius >= 1.6 * 0.9 && f.radius <= 6.4 * 1.1)
        })
        .count();
    assert!(
        inside as f64 >= 0.95 * ds.len() as f64,
        "{inside}/{} radii in range",
        ds.len()
    );
}

#[test]
fn distinct_circles_get_distinct_codes() {
    let r = run();
    let ring = |cx: f64, cy: f64, radius: f64| {
        let rows: Vec<[f64; 2]> = (0..100)
            .map(|i| {
                let t = i as f64 * std::f64::consts::TAU / 100.0;
                [cx + radius * t.cos(), cy + radius * t.sin()]
            })
            .collect();
        PointCloud::from_rows(&rows).unwrap()
    };
    let rings: Vec<PointCloud> = [ring(15.0, 15.0, 2.0), ring(-15.0, -15.0, 5.0)]
        .iter()
        .map(|c| r.model.normalization.apply(c).unwrap())
        .collect();
    let codes = collect_codes(&r.model, &rings).unwrap();
    let sep: f64 = (0..codes.cols())
        .map(|j| (codes.get(0, j) - codes.get(1, j)).powi(2))
        .sum();
    assert!(sep.sqrt() > 0.0);
}

#[test]
fn variable_output_sizes_share_one_code() {
    let r = run();
    let psi = r.model.object_generator.sample_code(&mut pcgan::seeded_rng(2)).unwrap();
    for n in [1, 10_000] {
        let c = r
            .model
            .generator
            .generate_points(&psi, n, &mut pcgan::seeded_rng(3))
            .unwrap();
        assert_eq!(c.len(), n);
    }
}

#[test]
fn generated_codes_match_the_collected_mean() {
    let r = run();
    let ds = load_dataset(&r.root.join("train/manifest.json")).unwrap();
    let normalized: Vec<PointCloud> = ds
        .clouds
        .iter()
        .map(|c| r.model.normalization.apply(c).unwrap())
        .collect();
    let real = collect_codes(&r.model, &normalized).unwrap();
    let u = normal_matrix(4000, r.model.object_generator.noise_dim(), &mut pcgan::seeded_rng(4));
    let fake = r.model.object_generator.codes_from_noise(&u).unwrap();
    let m = real.rows() as f64;
    for j in 0..real.cols() {
        let col: Vec<f64> = (0..real.rows()).map(|i| real.get(i, j)).collect();
        let mean = col.iter().sum::<f64>() / m;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
        let se = (var / m).sqrt();
        let gen = (0..fake.rows()).map(|i| fake.get(i, j)).sum::<f64>() / fake.rows() as f64;
        assert!(
            (gen - mean).abs() <= 3.0 * se,
            "dimension {j}: generated {gen} vs {mean} ± {se}"
        );
    }
}

#[test]
fn hierarchical_samples_cover_every_quadrant() {
    let r = run();
    let mut rng = pcgan::seeded_rng(6);
    let centers: Vec<[f64; 2]> = (0..1000)
        .filter_map(|_| fit_circle(&r.model.sample_hierarchical(100, &mut rng).unwrap()).ok())
        .map(|f| f.center)
        .collect();
    let shares = quadrant_shares(&centers);
    assert!(shares.iter().all(|&s| s >= 0.1), "{shares:?}");
}
