//! The `pcgan` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

pub mod plot;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::data::{
    gen_circles, load_dataset, load_mesh, normalize, read_cloud, sample_surface, write_cloud_binary, write_cloud_text,
    write_manifest, write_off, CircleDatasetConfig, ManifestEntry,
};
use crate::losses::{default_lambda_grid, lemma1_verify};
use crate::metrics::{coverage, d2f, fit_circle};
use crate::nets::{Model, PointCloud};
use crate::ot::{auction_assign, cost_matrix, hungarian_assign, AuctionConfig, Metric, MAX_HUNGARIAN};
use crate::trainer::{
    eval_reconstruction, format_summary, read_csv, train, write_eval_csv, EvalConfig, Stage, TrainConfig,
};
use crate::{Error, Result};
use plot::Axis;

/// Environment variable holding the default worker-thread count.
pub const THREADS_ENV: &str = "PCGAN_THREADS";

const EXIT_CODES: &str = "Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
Worker threads default to $PCGAN_THREADS when set.";

#[derive(Debug, Parser)]
#[command(name = "pcgan", version, about = "Point-cloud GAN with sandwiched Wasserstein estimation", after_help = EXIT_CODES)]
pub struct Cli {
    /// Worker threads; 1 gives bit-reproducible runs
    #[arg(long, global = true, value_name = "N", display_order = 100)]
    pub threads: Option<usize>,
    /// Seed for every random draw
    #[arg(long, global = true, value_name = "SEED", display_order = 101)]
    pub seed: Option<u64>,
    /// More log output (repeat for debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count, display_order = 102)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a dataset: synthetic circles or surface samples of OFF meshes
    #[command(subcommand, after_help = EXIT_CODES)]
    GenData(GenData),
    /// Train a model (conditional stage, or hierarchical stage on a trained model)
    #[command(after_help = EXIT_CODES)]
    Train(TrainArgs),
    /// Draw point clouds from a trained model
    #[command(after_help = EXIT_CODES)]
    Sample(SampleArgs),
    /// Match two equal-size clouds and report the transport cost
    #[command(after_help = EXIT_CODES)]
    Ot(OtArgs),
    /// Distance-to-face, coverage and circle-fit metrics for one cloud
    #[command(after_help = EXIT_CODES)]
    Metrics(MetricsArgs),
    /// Reconstruct a test set and score every cloud
    #[command(after_help = EXIT_CODES)]
    Eval(EvalArgs),
    /// Check the sandwich tightening window for given estimator errors
    #[command(after_help = EXIT_CODES)]
    LemmaCheck(LemmaArgs),
    /// Render a loss log or point clouds as SVG, with a CSV alongside
    #[command(after_help = EXIT_CODES)]
    ExportPlot(PlotArgs),
}

#[derive(Debug, Subcommand)]
pub enum GenData {
    /// Circles with centers from a four-component Gaussian mixture
    #[command(after_help = EXIT_CODES)]
    Circles(CirclesArgs),
    /// Area-uniform surface samples of OFF meshes
    #[command(after_help = EXIT_CODES)]
    Mesh(MeshArgs),
}

#[derive(Debug, Args)]
pub struct CirclesArgs {
    /// Number of clouds
    #[arg(long, default_value_t = 1000)]
    pub m: usize,
    /// Points per cloud
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// Write binary clouds instead of text
    #[arg(long)]
    pub binary: bool,
}

#[derive(Debug, Args)]
pub struct MeshArgs {
    /// OFF files to sample
    #[arg(required = true)]
    pub meshes: Vec<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// Points per mesh
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Add the eight rotations {0, π/8, …, 7π/8} about z
    #[arg(long)]
    pub augment: bool,
    /// Normalize each cloud (and its copy of the mesh) to zero mean and unit variance
    #[arg(long)]
    pub normalize: bool,
    /// Write binary clouds instead of text
    #[arg(long)]
    pub binary: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Config file, JSON or `key=value` lines; unset fields take the circles values
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Starting configuration when no file is given
    #[arg(long, value_enum, default_value_t = Preset::Circles)]
    pub preset: Preset,
    /// Dataset manifest
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Model directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Generator steps for the selected stage
    #[arg(long)]
    pub steps: Option<usize>,
    /// Stage to train; the hierarchical stage needs a trained model in --out
    #[arg(long, value_enum)]
    pub stage: Option<StageArg>,
    /// Override any config field, e.g. --set sandwich.lambda=0
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Print the resolved config as JSON and exit
    #[arg(long)]
    pub print_config: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Circles,
    Modelnet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StageArg {
    Conditional,
    Hierarchical,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Model directory
    #[arg(long)]
    pub model: PathBuf,
    /// Points per cloud
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    /// Number of clouds (hierarchical sampling only)
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Reconstruct this cloud instead of sampling hierarchically
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output file, or directory when --count > 1
    #[arg(long)]
    pub out: PathBuf,
    /// Write binary clouds instead of text
    #[arg(long)]
    pub binary: bool,
}

#[derive(Debug, Args)]
pub struct OtArgs {
    /// First cloud
    #[arg(long)]
    pub a: PathBuf,
    /// Second cloud
    #[arg(long)]
    pub b: PathBuf,
    /// Ground cost between points
    #[arg(long, value_enum, default_value_t = Metric::L1)]
    pub metric: Metric,
    /// Final ε as a fraction of mean cost / n
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
    /// Also solve exactly with the Hungarian method
    #[arg(long)]
    pub exact: bool,
    /// Write the matching as CSV rows `i,j,cost`
    #[arg(long)]
    pub assignment: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Cloud file
    #[arg(long)]
    pub cloud: PathBuf,
    /// OFF mesh for distance-to-face and coverage
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// Coverage distance threshold; nearest-face assignment when omitted
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Fit a circle (2D clouds)
    #[arg(long)]
    pub circle: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Model directory
    #[arg(long)]
    pub model: PathBuf,
    /// Test-set manifest
    #[arg(long)]
    pub manifest: PathBuf,
    /// Per-cloud CSV
    #[arg(long)]
    pub out: PathBuf,
    /// Generated points per cloud (500 for 2D, 2048 for 3D by default)
    #[arg(long)]
    pub points: Option<usize>,
    /// Coverage distance threshold
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct LemmaArgs {
    /// Relative error of the lower estimator
    #[arg(long)]
    pub eps1: f64,
    /// Relative error of the upper estimator
    #[arg(long)]
    pub eps2: f64,
    /// True distance
    #[arg(long, default_value_t = 1.0)]
    pub w: f64,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Training log CSV to chart
    #[arg(long, conflicts_with = "cloud")]
    pub log: Option<PathBuf>,
    /// Cloud files to scatter (repeatable)
    #[arg(long)]
    pub cloud: Vec<PathBuf>,
    /// Output SVG; the CSV is written next to it
    #[arg(long)]
    pub out: PathBuf,
    /// Projection axis for 3D clouds
    #[arg(long, value_enum, default_value_t = Axis::Z)]
    pub axis: Axis,
}

/// Parses `args`, runs the command, and returns the process exit code. Results go to `out`,
/// diagnostics to standard error.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            if code == 0 {
                let _ = write!(out, "{}", e.render());
            } else {
                let _ = e.print();
            }
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .try_init();
    if let Err(e) = configure_threads(cli.threads) {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads(flag: Option<usize>) -> Result<()> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("{THREADS_ENV}={v:?} is not a thread count")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(Error::InvalidArgument("thread count must be at least 1".into()));
        }
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::debug!("worker pool already initialized; keeping it");
        }
    }
    Ok(())
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::GenData(GenData::Circles(a)) => gen_circles_cmd(a, seed, out),
        Command::GenData(GenData::Mesh(a)) => gen_mesh_cmd(a, seed, out),
        Command::Train(a) => train_cmd(a, cli.seed, out),
        Command::Sample(a) => sample_cmd(a, seed, out),
        Command::Ot(a) => ot_cmd(a, out),
        Command::Metrics(a) => metrics_cmd(a, out),
        Command::Eval(a) => eval_cmd(a, seed, out),
        Command::LemmaCheck(a) => lemma_cmd(a, out),
        Command::ExportPlot(a) => plot_cmd(a, out),
    }
}

fn emit(out: &mut dyn Write, text: impl AsRef<str>) -> Result<()> {
    out.write_all(text.as_ref().as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

fn mkdir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_cloud(path: &Path, cloud: &PointCloud, binary: bool) -> Result<()> {
    if binary {
        write_cloud_binary(path, cloud)
    } else {
        write_cloud_text(path, cloud)
    }
}

fn cloud_name(i: usize, total: usize, binary: bool) -> String {
    let width = total.saturating_sub(1).to_string().len().max(5);
    format!("cloud_{i:0width$}.{}", if binary { "bin" } else { "txt" })
}

fn gen_circles_cmd(a: &CirclesArgs, seed: u64, out: &mut dyn Write) -> Result<()> {
    let ds = gen_circles(&CircleDatasetConfig {
        clouds: a.m,
        points: a.n,
        seed,
        ..Default::default()
    })?;
    mkdir(&a.out)?;
    let mut entries = Vec::with_capacity(a.m);
    for (i, (cloud, truth)) in ds.clouds.iter().zip(&ds.truth).enumerate() {
        let name = cloud_name(i, a.m, a.binary);
        write_cloud(&a.out.join(&name), cloud, a.binary)?;
        entries.push(ManifestEntry {
            path: name,
            label: "circle".into(),
            center: Some(truth.center.to_vec()),
            radius: Some(truth.radius),
            mesh: None,
        });
    }
    write_manifest(&a.out.join("manifest.json"), &entries)?;
    emit(out, format!("wrote {} clouds to {}\n", a.m, a.out.display()))
}

fn gen_mesh_cmd(a: &MeshArgs, seed: u64, out: &mut dyn Write) -> Result<()> {
    if a.samples == 0 {
        return Err(Error::InvalidArgument("--samples must be at least 1".into()));
    }
    mkdir(&a.out)?;
    let angles = if a.augment {
        crate::data::augmentation_angles()
    } else {
        vec![0.0]
    };
    let total = a.meshes.len() * angles.len();
    let mut entries = Vec::with_capacity(total);
    let mut rng = crate::seeded_rng(seed);
    for path in &a.meshes {
        let mesh = load_mesh(path)?;
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        for &angle in &angles {
            let (s, c) = angle.sin_cos();
            let rotated = mesh.map_vertices(|v| [c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]])?;
            let mut cloud = sample_surface(&rotated, a.samples, &mut rng)?;
            let mut shape = rotated;
            if a.normalize {
                let (nc, norm) = normalize(&cloud)?;
                cloud = nc;
                shape = shape.map_vertices(|v| {
                    let mut w = v;
                    for d in 0..3 {
                        w[d] = (v[d] - norm.offset[d]) / norm.scale;
                    }
                    w
                })?;
            }
            let i = entries.len();
            let name = cloud_name(i, total, a.binary);
            let mesh_name = format!("mesh_{i:05}.off");
            write_cloud(&a.out.join(&name), &cloud, a.binary)?;
            write_off(&a.out.join(&mesh_name), &shape)?;
            entries.push(ManifestEntry {
                path: name,
                label: label.clone(),
                center: None,
                radius: None,
                mesh: Some(mesh_name),
            });
        }
    }
    write_manifest(&a.out.join("manifest.json"), &entries)?;
    emit(out, format!("wrote {total} clouds to {}\n", a.out.display()))
}

fn train_config(a: &TrainArgs, seed: Option<u64>) -> Result<TrainConfig> {
    let mut config = match &a.config {
        Some(p) => TrainConfig::load(p)?,
        None => match a.preset {
            Preset::Circles => TrainConfig::circles(),
            Preset::Modelnet => TrainConfig::modelnet(256),
        },
    };
    if let Some(m) = &a.manifest {
        config.manifest = m.clone();
    }
    if let Some(o) = &a.out {
        config.out = o.clone();
    }
    if let Some(s) = a.stage {
        config.stage = match s {
            StageArg::Conditional => Stage::Conditional,
            StageArg::Hierarchical => Stage::Hierarchical,
        };
    }
    if let Some(s) = a.steps {
        match config.stage {
            Stage::Conditional => config.steps = s,
            Stage::Hierarchical => config.hierarchical.steps = s,
        }
    }
    if let Some(s) = seed {
        config.seed = s;
    }
    config.with_overrides(&a.overrides)
}

fn train_cmd(a: &TrainArgs, seed: Option<u64>, out: &mut dyn Write) -> Result<()> {
    let config = train_config(a, seed)?;
    if a.print_config {
        return emit(out, serde_json::to_string_pretty(&config)? + "\n");
    }
    let report = train(&config)?;
    let last = report.rows.last().copied();
    let mut text = format!(
        "trained {} steps in {:.1}s\nmodel {}\nlog {}\n",
        report.rows.len(),
        report.wall_time_secs,
        report.checkpoint.display(),
        report.log.display()
    );
    if let Some(r) = last {
        text += &format!(
            "final w_upper {} w_lower {} sandwich {}\n",
            r.w_upper, r.w_lower, r.sandwich
        );
    }
    emit(out, text)
}

fn sample_cmd(a: &SampleArgs, seed: u64, out: &mut dyn Write) -> Result<()> {
    if a.n == 0 || a.count == 0 {
        return Err(Error::InvalidArgument("--n and --count must be at least 1".into()));
    }
    let model = Model::load(&a.model)?;
    let mut rng = crate::seeded_rng(seed);
    if let Some(input) = &a.input {
        if a.count != 1 {
            return Err(Error::InvalidArgument(
                "--count applies to hierarchical sampling only".into(),
            ));
        }
        let cloud = model.reconstruct(&read_cloud(input)?, a.n, &mut rng)?;
        write_cloud(&a.out, &cloud, a.binary)?;
        return emit(out, format!("wrote {} points to {}\n", a.n, a.out.display()));
    }
    if a.count == 1 {
        let cloud = model.sample_hierarchical(a.n, &mut rng)?;
        write_cloud(&a.out, &cloud, a.binary)?;
        return emit(out, format!("wrote {} points to {}\n", a.n, a.out.display()));
    }
    mkdir(&a.out)?;
    for i in 0..a.count {
        let cloud = model.sample_hierarchical(a.n, &mut rng)?;
        write_cloud(&a.out.join(cloud_name(i, a.count, a.binary)), &cloud, a.binary)?;
    }
    emit(out, format!("wrote {} clouds to {}\n", a.count, a.out.display()))
}

fn ot_cmd(a: &OtArgs, out: &mut dyn Write) -> Result<()> {
    let x = read_cloud(&a.a)?;
    let y = read_cloud(&a.b)?;
    let config = AuctionConfig {
        metric: a.metric,
        ..AuctionConfig::with_relative_gap(a.delta)
    };
    config.validate()?;
    let result = auction_assign(&x, &y, &config)?;
    let s = &result.stats;
    let mut text = format!(
        "w_upper {}\ntotal_cost {}\nepsilon_final {}\ngap_bound {}\nphases {}\nrounds {}\n",
        result.assignment.average_cost(),
        result.assignment.total_cost(),
        s.epsilon_final,
        s.gap_bound,
        s.phases.len(),
        s.rounds
    );
    if a.exact {
        if x.len() > MAX_HUNGARIAN {
            return Err(Error::InvalidArgument(format!(
                "--exact supports at most {MAX_HUNGARIAN} points, got {}",
                x.len()
            )));
        }
        let exact = hungarian_assign(&x, &y, a.metric)?;
        text += &format!("exact {}\n", exact.average_cost());
    }
    if let Some(p) = &a.assignment {
        let costs = cost_matrix(&x, &y, a.metric)?;
        let mut csv = String::from("i,j,cost\n");
        for (i, &j) in result.assignment.perm().iter().enumerate() {
            csv += &format!("{i},{j},{}\n", costs.get(i, j));
        }
        std::fs::write(p, csv).map_err(|e| Error::io(p, e))?;
    }
    emit(out, text)
}

fn metrics_cmd(a: &MetricsArgs, out: &mut dyn Write) -> Result<()> {
    let cloud = read_cloud(&a.cloud)?;
    let mut text = format!("points {}\ndim {}\n", cloud.len(), cloud.dim());
    if let Some(m) = &a.mesh {
        let mesh = load_mesh(m)?;
        text += &format!(
            "faces {}\nd2f {}\ncoverage {}\n",
            mesh.face_count(),
            d2f(&cloud, &mesh)?,
            coverage(&cloud, &mesh, a.threshold)?
        );
    }
    if a.circle {
        let fit = fit_circle(&cloud)?;
        text += &format!(
            "center {} {}\nradius {}\nresidual_rms {}\n",
            fit.center[0], fit.center[1], fit.radius, fit.residual_rms
        );
    }
    if a.mesh.is_none() && !a.circle {
        return Err(Error::InvalidArgument("give --mesh and/or --circle".into()));
    }
    emit(out, text)
}

fn eval_cmd(a: &EvalArgs, seed: u64, out: &mut dyn Write) -> Result<()> {
    let model = Model::load(&a.model)?;
    let dataset = load_dataset(&a.manifest)?;
    let config = EvalConfig {
        points: a.points,
        coverage_threshold: a.threshold,
        seed,
        ..EvalConfig::default()
    };
    let table = eval_reconstruction(&model, &dataset, &config)?;
    write_eval_csv(&a.out, &table)?;
    emit(out, format_summary(&table.summary))
}

fn lemma_cmd(a: &LemmaArgs, out: &mut dyn Write) -> Result<()> {
    let r = lemma1_verify(a.w, a.eps1, a.eps2, &default_lambda_grid())?;
    let one_sided = r.one_sided_floor;
    emit(
        out,
        format!(
            "window ({}, {})\nlambda {}\nerror {}\none-sided error {}\ntightening {}\n",
            r.window.0,
            r.window.1,
            r.lambda,
            r.worst_case_error,
            one_sided,
            one_sided - r.worst_case_error
        ),
    )
}

fn plot_cmd(a: &PlotArgs, out: &mut dyn Write) -> Result<()> {
    let csv_path = a.out.with_extension("csv");
    if let Some(log) = &a.log {
        let (names, rows) = read_csv(log)?;
        if rows.is_empty() {
            return Err(Error::Empty(format!("{} has no rows", log.display())));
        }
        write_text(&a.out, &plot::line_chart(&names, &rows))?;
        if csv_path != *log {
            std::fs::copy(log, &csv_path).map_err(|e| Error::io(&csv_path, e))?;
        }
        return emit(out, format!("wrote {} and {}\n", a.out.display(), csv_path.display()));
    }
    if a.cloud.is_empty() {
        return Err(Error::InvalidArgument("give --log or at least one --cloud".into()));
    }
    let mut sets = Vec::with_capacity(a.cloud.len());
    let mut csv = String::from("set,u,v\n");
    for (k, p) in a.cloud.iter().enumerate() {
        let pts = plot::project(&read_cloud(p)?, a.axis)?;
        for q in &pts {
            csv += &format!("{k},{},{}\n", q[0], q[1]);
        }
        sets.push(pts);
    }
    write_text(&a.out, &plot::scatter(&sets))?;
    write_text(&csv_path, &csv)?;
    emit(out, format!("wrote {} and {}\n", a.out.display(), csv_path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(d) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        mkdir(d)?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
