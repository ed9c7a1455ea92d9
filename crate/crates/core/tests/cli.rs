//! End-to-end checks of the `pcgan` binary.

use std::path::Path;
use std::process::{Command, Output};

use pcgan::data::write_cloud_text;
use pcgan::nets::PointCloud;

fn pcgan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcgan"))
        .args(args)
        .env_remove("PCGAN_THREADS")
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const HELP_PAGES: &[&[&str]] = &[
    &[],
    &["gen-data"],
    &["gen-data", "circles"],
    &["gen-data", "mesh"],
    &["train"],
    &["sample"],
    &["ot"],
    &["metrics"],
    &["eval"],
    &["lemma-check"],
    &["export-plot"],
];

/// Regenerate with `UPDATE_GOLDEN=1 cargo test --test cli`.
#[test]
fn help_text_matches_golden_file() {
    let mut text = String::new();
    for page in HELP_PAGES {
        let mut args = page.to_vec();
        args.push("--help");
        let o = pcgan(&args);
        assert_eq!(o.status.code(), Some(0), "{args:?}");
        text += &format!("==> pcgan {}\n{}\n", args.join(" "), stdout(&o));
    }
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/help.txt");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(golden.parent().unwrap()).unwrap();
        std::fs::write(&golden, &text).unwrap();
    }
    assert_eq!(text, std::fs::read_to_string(&golden).unwrap());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.txt");
    std::fs::write(&empty, "").unwrap();
    let missing = dir.path().join("missing.txt");
    let svg = dir.path().join("x.svg");
    let (empty, missing, svg) = (
        empty.to_str().unwrap(),
        missing.to_str().unwrap(),
        svg.to_str().unwrap(),
    );

    assert_eq!(pcgan(&["--version"]).status.code(), Some(0));
    assert_eq!(pcgan(&["ot", "--bogus"]).status.code(), Some(1));
    assert_eq!(pcgan(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        pcgan(&["lemma-check", "--eps1", "0.1", "--eps2", "0.4"]).status.code(),
        Some(1)
    );
    assert_eq!(
        pcgan(&["export-plot", "--cloud", missing, "--out", svg]).status.code(),
        Some(2)
    );
    let o = pcgan(&["export-plot", "--cloud", empty, "--out", svg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
    assert_eq!(pcgan(&["metrics", "--cloud", missing]).status.code(), Some(2));
}

#[test]
fn lemma_check_prints_the_window() {
    let o = pcgan(&["lemma-check", "--eps1", "0.2", "--eps2", "0.4"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let field = |key: &str| -> Vec<f64> {
        let line = text.lines().find(|l| l.starts_with(key)).unwrap();
        line[key.len()..]
            .split(|c: char| !(c.is_ascii_digit() || c == '.' || c == '-' || c == 'e'))
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().unwrap())
            .collect()
    };
    let window = field("window");
    assert!((window[0] - 1.0 / 3.0).abs() < 1e-12 && window[1] == 0.5, "{window:?}");
    let lambda = field("lambda")[0];
    assert!(lambda > window[0] && lambda < window[1]);
    assert!(field("tightening")[0] > 0.0);
}

#[test]
fn scatter_has_one_marker_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<[f64; 2]> = (0..37)
        .map(|i| [(i as f64).cos() * 3.0, (i as f64).sin() * 3.0])
        .collect();
    let cloud = dir.path().join("c.txt");
    write_cloud_text(&cloud, &PointCloud::from_rows(&rows).unwrap()).unwrap();
    let svg = dir.path().join("c.svg");
    let o = pcgan(&[
        "export-plot",
        "--cloud",
        cloud.to_str().unwrap(),
        "--out",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&svg).unwrap().matches("<circle").count(), 37);
}

#[test]
fn projection_along_z_drops_the_third_coordinate() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<[f64; 3]> = (0..20)
        .map(|i| [i as f64 * 0.5, (i as f64).sin(), 100.0 + i as f64])
        .collect();
    let cloud = dir.path().join("c.txt");
    write_cloud_text(&cloud, &PointCloud::from_rows(&rows).unwrap()).unwrap();
    let svg = dir.path().join("p.svg");
    let o = pcgan(&[
        "export-plot",
        "--cloud",
        cloud.to_str().unwrap(),
        "--axis",
        "z",
        "--out",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("p.csv")).unwrap();
    let got: Vec<[f64; 2]> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<f64> = l.split(',').skip(1).map(|s| s.parse().unwrap()).collect();
            [f[0], f[1]]
        })
        .collect();
    let want: Vec<[f64; 2]> = rows.iter().map(|r| [r[0], r[1]]).collect();
    assert_eq!(got, want);
}

#[test]
fn log_plot_keeps_the_raw_csv() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("train_log.csv");
    let text = "step,w_upper,w_lower,sandwich\n0,3.5,0.1,3.3\n1,2.25,0.2,2.15\n2,1.125,0.3,1.08\n";
    std::fs::write(&log, text).unwrap();
    let svg = dir.path().join("plots/loss.svg");
    let o = pcgan(&[
        "export-plot",
        "--log",
        log.to_str().unwrap(),
        "--out",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(&log).unwrap(), text);
    assert_eq!(
        std::fs::read_to_string(dir.path().join("plots/loss.csv")).unwrap(),
        text
    );
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<polyline"));
}

#[test]
fn gen_data_writes_one_file_per_cloud() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d");
    let o = pcgan(&[
        "--seed",
        "7",
        "gen-data",
        "circles",
        "--m",
        "12",
        "--n",
        "30",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let clouds = std::fs::read_dir(&out)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("cloud_"))
        .count();
    assert_eq!(clouds, 12);
    assert!(out.join("manifest.json").exists());
}
