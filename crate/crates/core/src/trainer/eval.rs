//! Reconstruction evaluation: encode each test cloud, regenerate it, and score the result.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{dataset_normalization, load_mesh, Dataset};
use crate::metrics::{coverage, d2f, fit_circle, ks_statistic, quadrant_shares, uniform_cdf};
use crate::nets::Model;
use crate::ot::{w_upper, AuctionConfig};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Generated points per cloud; 500 for 2D and 2048 for 3D when unset.
    pub points: Option<usize>,
    /// Reference distribution of radii for the KS statistic.
    pub radius_range: (f64, f64),
    /// Distance under which a face counts as covered; nearest-face assignment when unset.
    pub coverage_threshold: Option<f64>,
    pub auction: AuctionConfig,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            points: None,
            radius_range: (1.6, 6.4),
            coverage_threshold: None,
            auction: AuctionConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalRow {
    pub index: usize,
    pub path: String,
    /// Matched L1 cost between the cloud and an equal-size reconstruction, divided by
    /// [`EvalSummary::unit`].
    pub w_upper: f64,
    /// Fitted `(cx, cy, r)` of the generated points (2D only; `None` when the fit fails).
    pub circle: Option<[f64; 3]>,
    pub d2f: Option<f64>,
    pub coverage: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalSummary {
    pub count: usize,
    /// Global scale of the evaluation set (root mean squared deviation per coordinate);
    /// `w_upper` values are reported in this unit.
    pub unit: f64,
    pub mean_w_upper: f64,
    pub median_w_upper: f64,
    pub ks_radius: Option<f64>,
    pub quadrant_shares: Option<[f64; 4]>,
    pub fit_failures: usize,
    pub mean_d2f: Option<f64>,
    pub mean_coverage: Option<f64>,
}

impl EvalSummary {
    /// Quadrants holding at least 10% of the fitted centers.
    pub fn quadrants_covered(&self) -> usize {
        self.quadrant_shares
            .map(|q| q.iter().filter(|&&s| s >= 0.1).count())
            .unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalTable {
    pub rows: Vec<EvalRow>,
    pub summary: EvalSummary,
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Scores every cloud of `dataset`. Cloud `i` draws its noise from seed `config.seed + i`.
pub fn eval_reconstruction(model: &Model, dataset: &Dataset, config: &EvalConfig) -> Result<EvalTable> {
    if dataset.is_empty() {
        return Err(Error::Empty("evaluation set is empty".into()));
    }
    let dim = model.config.data_dim;
    if let Some(c) = dataset.clouds.iter().find(|c| c.dim() != dim) {
        return Err(Error::Shape(format!("model is {dim}-d, test cloud is {}-d", c.dim())));
    }
    let points = config.points.unwrap_or(if dim == 2 { 500 } else { 2048 });
    if points == 0 {
        return Err(Error::InvalidArgument(
            "evaluation needs at least one generated point".into(),
        ));
    }
    let unit = dataset_normalization(&dataset.clouds)?.scale;
    let rows: Vec<EvalRow> = (0..dataset.len())
        .into_par_iter()
        .map(|i| {
            let cloud = &dataset.clouds[i];
            let mut rng = crate::seeded_rng(config.seed.wrapping_add(i as u64));
            let psi = model.encoder.encode(&model.normalization.apply(cloud)?)?;
            let matched =
                model
                    .normalization
                    .invert(&model.generator.generate_points(&psi, cloud.len(), &mut rng)?)?;
            let w = w_upper(cloud, &matched, &config.auction)? / unit;
            let generated = model
                .normalization
                .invert(&model.generator.generate_points(&psi, points, &mut rng)?)?;
            let circle = match dim {
                2 => fit_circle(&generated)
                    .ok()
                    .map(|f| [f.center[0], f.center[1], f.radius]),
                _ => None,
            };
            let (d, cov) = match dataset.mesh_path(i) {
                Some(p) if dim == 3 => {
                    let mesh = load_mesh(&p)?;
                    (
                        Some(d2f(&generated, &mesh)?),
                        Some(coverage(&generated, &mesh, config.coverage_threshold)?),
                    )
                }
                _ => (None, None),
            };
            Ok(EvalRow {
                index: i,
                path: dataset.entries[i].path.clone(),
                w_upper: w,
                circle,
                d2f: d,
                coverage: cov,
            })
        })
        .collect::<Result<_>>()?;
    let summary = summarize(&rows, dim, unit, config)?;
    Ok(EvalTable { rows, summary })
}

fn summarize(rows: &[EvalRow], dim: usize, unit: f64, config: &EvalConfig) -> Result<EvalSummary> {
    let ws: Vec<f64> = rows.iter().map(|r| r.w_upper).collect();
    let avg = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    let fits: Vec<[f64; 3]> = rows.iter().filter_map(|r| r.circle).collect();
    let (ks, shares) = if dim == 2 && !fits.is_empty() {
        let radii: Vec<f64> = fits.iter().map(|f| f[2]).collect();
        let (a, b) = config.radius_range;
        let centers: Vec<[f64; 2]> = fits.iter().map(|f| [f[0], f[1]]).collect();
        (
            Some(ks_statistic(&radii, uniform_cdf(a, b))?),
            Some(quadrant_shares(&centers)),
        )
    } else {
        (None, None)
    };
    let d: Vec<f64> = rows.iter().filter_map(|r| r.d2f).collect();
    let c: Vec<f64> = rows.iter().filter_map(|r| r.coverage).collect();
    Ok(EvalSummary {
        count: rows.len(),
        unit,
        mean_w_upper: avg(&ws).unwrap_or(f64::NAN),
        median_w_upper: median(&ws),
        ks_radius: ks,
        quadrant_shares: shares,
        fit_failures: if dim == 2 { rows.len() - fits.len() } else { 0 },
        mean_d2f: avg(&d),
        mean_coverage: avg(&c),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per cloud: `index,path,w_upper,center_x,center_y,radius,d2f,coverage`.
pub fn write_eval_csv(path: &Path, table: &EvalTable) -> Result<()> {
    let mut out = String::from("index,path,w_upper,center_x,center_y,radius,d2f,coverage\n");
    for r in &table.rows {
        let [cx, cy, rad] = r.circle.map(|c| c.map(Some)).unwrap_or([None; 3]);
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.index,
            r.path.replace(',', "_"),
            r.w_upper,
            opt(cx),
            opt(cy),
            opt(rad),
            opt(r.d2f),
            opt(r.coverage)
        )
        .expect("writing to a String");
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Human-readable summary lines.
pub fn format_summary(s: &EvalSummary) -> String {
    let mut out = format!(
        "clouds {}\nunit {:.6}\nmean w_upper {:.6}\nmedian w_upper {:.6}\n",
        s.count, s.unit, s.mean_w_upper, s.median_w_upper
    );
    if let Some(ks) = s.ks_radius {
        writeln!(out, "radius KS {ks:.6}").expect("writing to a String");
    }
    if let Some(q) = s.quadrant_shares {
        writeln!(
            out,
            "quadrant shares {:.4} {:.4} {:.4} {:.4} (covered {})",
            q[0],
            q[1],
            q[2],
            q[3],
            s.quadrants_covered()
        )
        .expect("writing to a String");
        writeln!(out, "circle fit failures {}", s.fit_failures).expect("writing to a String");
    }
    if let Some(d) = s.mean_d2f {
        writeln!(out, "mean d2f {d:.6}").expect("writing to a String");
    }
    if let Some(c) = s.mean_coverage {
        writeln!(out, "mean coverage {c:.6}").expect("writing to a String");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_circles, CircleDatasetConfig, ManifestEntry};
    use crate::nets::{ModelConfig, PointCloud};

    fn circles(m: usize) -> Dataset {
        let ds = gen_circles(&CircleDatasetConfig {
            clouds: m,
            points: 40,
            seed: 2,
            ..Default::default()
        })
        .unwrap();
        Dataset {
            root: ".".into(),
            entries: (0..m)
                .map(|i| ManifestEntry {
                    path: format!("c{i}.txt"),
                    label: "circle".into(),
                    center: None,
                    radius: None,
                    mesh: None,
                })
                .collect(),
            clouds: ds.clouds,
        }
    }

    #[test]
    fn median_of_odd_even_and_empty() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn one_row_per_cloud_and_csv_matches() {
        let model = Model::new(&ModelConfig::circles(), &mut crate::seeded_rng(1)).unwrap();
        let ds = circles(7);
        let cfg = EvalConfig {
            points: Some(60),
            ..EvalConfig::default()
        };
        let table = eval_reconstruction(&model, &ds, &cfg).unwrap();
        assert_eq!(table.rows.len(), 7);
        assert_eq!(table.summary.count, 7);
        assert!(table.summary.ks_radius.is_some());
        assert!(table.rows.iter().all(|r| r.w_upper > 0.0 && r.d2f.is_none()));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("eval.csv");
        write_eval_csv(&p, &table).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 8);
        assert!(text.starts_with("index,path,w_upper,center_x,center_y,radius,d2f,coverage\n"));
        assert!(format_summary(&table.summary).contains("radius KS"));
    }

    #[test]
    fn checkpoint_round_trip_gives_identical_metrics() {
        let model = Model::new(&ModelConfig::circles(), &mut crate::seeded_rng(4)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        model.save(dir.path()).unwrap();
        let back = Model::load(dir.path()).unwrap();
        let ds = circles(5);
        let cfg = EvalConfig {
            points: Some(50),
            seed: 11,
            ..EvalConfig::default()
        };
        let a = eval_reconstruction(&model, &ds, &cfg).unwrap();
        let b = eval_reconstruction(&back, &ds, &cfg).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert!((x.w_upper - y.w_upper).abs() <= 1e-12);
        }
        assert_eq!(a, b);
    }

    #[test]
    fn dimension_mismatch_and_empty_set_are_errors() {
        let model = Model::new(&ModelConfig::circles(), &mut crate::seeded_rng(0)).unwrap();
        let mut ds = circles(2);
        ds.clouds[1] = PointCloud::from_rows(&[[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]]).unwrap();
        assert!(matches!(
            eval_reconstruction(&model, &ds, &EvalConfig::default()),
            Err(Error::Shape(_))
        ));
        ds.clouds.clear();
        ds.entries.clear();
        assert!(eval_reconstruction(&model, &ds, &EvalConfig::default()).is_err());
    }

    #[test]
    fn quadrant_count_uses_ten_percent() {
        let s = EvalSummary {
            count: 10,
            unit: 1.0,
            mean_w_upper: 0.0,
            median_w_upper: 0.0,
            ks_radius: None,
            quadrant_shares: Some([0.5, 0.3, 0.1, 0.1 - 1e-9]),
            fit_failures: 0,
            mean_d2f: None,
            mean_coverage: None,
        };
        assert_eq!(s.quadrants_covered(), 3);
    }
}
