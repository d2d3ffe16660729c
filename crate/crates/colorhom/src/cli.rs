//! Command-line surface: fit / apply / eval / synth / demo-theorem.
//!
//! All file writes are atomic and all floating-point output uses shortest
//! round-trip formatting, so identical argv + inputs + seeds give
//! byte-identical outputs.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::Matrix3;
use serde_json::{json, Value};

use crate::als::AlsConfig;
use crate::colorspace::LinearRGB;
use crate::correction::{
    apply_matrix, evaluate, fit_homography_detailed, fit_least_squares, shading_correct,
    ChartMeasurement, FitDetail, Method, Reference, Solver,
};
use crate::homography::{apply, conjugate_construct, ErrorMetric, Homography3};
use crate::io::csv::{load_patch_csv, save_patch_csv, Encoding};
use crate::io::synth::{generate_synthetic, MMode, SynthSpec};
use crate::io::atomic_write;
use crate::ransac::RansacConfig;
use crate::rng::Rng;
use crate::Error;

#[derive(Parser)]
#[command(
    name = "colorhom",
    version,
    about = "Shading-robust color correction via chromaticity homographies"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fit a 3x3 correction matrix mapping --src rows to --ref rows
    Fit(FitArgs),
    /// Apply a fitted matrix to a patch CSV
    Apply(ApplyArgs),
    /// Two-step protocol: fit on observed data, apply to shading-corrected
    /// data, report CIE Lab delta-E per method
    Eval(EvalArgs),
    /// Generate a seeded synthetic chart instance with known ground truth
    Synth(SynthArgs),
    /// Print the worst conjugation-property deviation over 1000 random maps
    DemoTheorem(DemoArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum EncodingArg {
    Linear,
    Srgb8,
}

impl From<EncodingArg> for Encoding {
    fn from(e: EncodingArg) -> Encoding {
        match e {
            EncodingArg::Linear => Encoding::Linear,
            EncodingArg::Srgb8 => Encoding::Srgb8,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Chroma,
    Lab,
}

impl From<MetricArg> for ErrorMetric {
    fn from(m: MetricArg) -> ErrorMetric {
        match m {
            MetricArg::Chroma => ErrorMetric::Chromaticity,
            MetricArg::Lab => ErrorMetric::LabDeltaE,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FitMethod {
    Ls,
    Als,
    Ransac,
}

#[derive(Args)]
struct SolverFlags {
    /// ALS convergence threshold
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    /// ALS iteration cap
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    /// RANSAC trial count
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    /// RANSAC inlier threshold (defaults to 0.02 chroma / 2.0 lab)
    #[arg(long)]
    threshold: Option<f64>,
    /// RANSAC inlier metric
    #[arg(long, value_enum, default_value_t = MetricArg::Chroma)]
    metric: MetricArg,
    /// RANSAC sampler seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SolverFlags {
    fn als(&self) -> AlsConfig {
        AlsConfig {
            epsilon: self.epsilon,
            max_iterations: self.max_iter,
            ..AlsConfig::default()
        }
    }

    fn ransac(&self) -> RansacConfig {
        let mut cfg = RansacConfig::for_metric(self.metric.into());
        cfg.iterations = self.trials;
        cfg.seed = self.seed;
        if let Some(t) = self.threshold {
            cfg.inlier_threshold = t;
        }
        cfg
    }
}

#[derive(Args)]
struct FitArgs {
    /// Source patches (camera measurements)
    #[arg(long)]
    src: PathBuf,
    /// Reference patches
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long, value_enum)]
    method: FitMethod,
    /// Output JSON path
    #[arg(long)]
    out: PathBuf,
    /// CSV value encoding
    #[arg(long, value_enum, default_value_t = EncodingArg::Linear)]
    encoding: EncodingArg,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct ApplyArgs {
    /// JSON file holding a 9-element row-major matrix (or a fit output)
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    src: PathBuf,
    /// Output CSV path (linear encoding)
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = EncodingArg::Linear)]
    encoding: EncodingArg,
}

#[derive(Args)]
struct EvalArgs {
    /// Chart measurements with shading
    #[arg(long)]
    observed: PathBuf,
    /// Gray-target measurements; shading correction is synthesized by
    /// division
    #[arg(long, conflicts_with = "shading_corrected")]
    gray: Option<PathBuf>,
    /// Pre-divided chart measurements
    #[arg(long)]
    shading_corrected: Option<PathBuf>,
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Comma-separated: ls, als, ransac
    #[arg(long, default_value = "ls,als")]
    methods: String,
    /// Also write the report as JSON
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = EncodingArg::Linear)]
    encoding: EncodingArg,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 24)]
    n_patches: usize,
    #[arg(long, default_value_t = 0.5)]
    shading_low: f64,
    #[arg(long, default_value_t = 1.5)]
    shading_high: f64,
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,
    #[arg(long, value_enum, default_value_t = MModeArg::RandomFullRank)]
    m_mode: MModeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for observed/shading_corrected/reference CSVs + truth JSON
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MModeArg {
    RandomDiagonal,
    RandomFullRank,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.cmd {
        Cmd::Fit(a) => run_fit(a),
        Cmd::Apply(a) => run_apply(a),
        Cmd::Eval(a) => run_eval(a),
        Cmd::Synth(a) => run_synth(a),
        Cmd::DemoTheorem(a) => run_demo(a),
    }
}

fn to_json(v: impl serde::Serialize) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn write_json(path: &Path, doc: &Value) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(doc).expect("valid json");
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

fn run_fit(a: FitArgs) -> Result<(), Error> {
    let src = load_patch_csv(&a.src, a.encoding.into())?;
    let reference = load_patch_csv(&a.reference, a.encoding.into())?;
    let mut doc = serde_json::Map::new();
    let cm = match a.method {
        FitMethod::Ls => fit_least_squares(&src, &reference)?,
        FitMethod::Als => {
            let (cm, detail) =
                fit_homography_detailed(&src, &reference, &Solver::Als(a.solver.als()))?;
            if let FitDetail::Als(r) = detail {
                doc.insert("als".into(), to_json(&r));
            }
            cm
        }
        FitMethod::Ransac => {
            let (cm, detail) =
                fit_homography_detailed(&src, &reference, &Solver::Ransac(a.solver.ransac()))?;
            if let FitDetail::Ransac { ransac, refit } = detail {
                doc.insert("ransac".into(), to_json(&ransac));
                doc.insert("refit".into(), to_json(&refit));
            }
            cm
        }
    };
    doc.insert("method".into(), json!(cm.method.as_str()));
    doc.insert("matrix".into(), to_json(cm.to_array()));
    write_json(&a.out, &Value::Object(doc))
}

fn parse_matrix(doc: &Value) -> Result<Matrix3<f64>, Error> {
    let arr = match doc {
        Value::Array(_) => Some(doc),
        Value::Object(map) => map.get("matrix").or_else(|| map.get("H")),
        _ => None,
    };
    let arr = arr
        .and_then(Value::as_array)
        .ok_or_else(|| Error::InvalidInput("expected a 9-element matrix array".into()))?;
    if arr.len() != 9 {
        return Err(Error::InvalidInput(format!(
            "expected 9 matrix entries, got {}",
            arr.len()
        )));
    }
    let mut vals = [0.0; 9];
    for (i, v) in arr.iter().enumerate() {
        vals[i] = v
            .as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::InvalidInput("non-finite matrix entry".into()))?;
    }
    Ok(Matrix3::from_row_slice(&vals))
}

fn run_apply(a: ApplyArgs) -> Result<(), Error> {
    let text = std::fs::read_to_string(&a.matrix)
        .map_err(|e| Error::Io(format!("{}: {e}", a.matrix.display())))?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", a.matrix.display())))?;
    let m = parse_matrix(&doc)?;
    let src = load_patch_csv(&a.src, a.encoding.into())?;
    let (out, _clamped) = apply_matrix(&m, &src);
    save_patch_csv(&a.out, &out)
}

fn run_eval(a: EvalArgs) -> Result<(), Error> {
    let observed = load_patch_csv(&a.observed, a.encoding.into())?;
    let reference = Reference::Linear(load_patch_csv(&a.reference, a.encoding.into())?);
    let shading_corrected = match (&a.shading_corrected, &a.gray) {
        (Some(path), _) => Some(load_patch_csv(path, a.encoding.into())?),
        (None, Some(gray)) => {
            let gray = load_patch_csv(gray, a.encoding.into())?;
            Some(shading_correct(&observed, &gray)?)
        }
        (None, None) => None,
    };

    let mut methods: Vec<Method> = Vec::new();
    for tag in a.methods.split(',') {
        let method = match tag.trim() {
            "ls" => Method::LeastSquares,
            "als" => Method::HomographyAls(a.solver.als()),
            "ransac" => Method::HomographyRansac(a.solver.ransac()),
            other => {
                return Err(Error::InvalidInput(format!("unknown method {other:?}")));
            }
        };
        if !methods.iter().any(|m| m.tag() == method.tag()) {
            methods.push(method);
        }
    }

    let measurement = ChartMeasurement {
        observed,
        shading_corrected,
        reference,
    };
    let report = evaluate(&measurement, &methods)?;
    print!("{}", report.text_table());
    if let Some(path) = &a.json {
        write_json(path, &to_json(&report))?;
    }
    Ok(())
}

fn run_synth(a: SynthArgs) -> Result<(), Error> {
    let spec = SynthSpec {
        n_patches: a.n_patches,
        shading_low: a.shading_low,
        shading_high: a.shading_high,
        noise_sigma: a.noise_sigma,
        m_mode: match a.m_mode {
            MModeArg::RandomDiagonal => MMode::RandomDiagonal,
            MModeArg::RandomFullRank => MMode::RandomFullRank,
        },
        seed: a.seed,
    };
    let data = generate_synthetic(&spec)?;
    std::fs::create_dir_all(&a.out_dir)
        .map_err(|e| Error::Io(format!("{}: {e}", a.out_dir.display())))?;
    save_patch_csv(&a.out_dir.join("observed.csv"), &data.measurement.observed)?;
    save_patch_csv(
        &a.out_dir.join("shading_corrected.csv"),
        data.measurement.shading_corrected.as_ref().expect("synth always produces it"),
    )?;
    save_patch_csv(
        &a.out_dir.join("reference.csv"),
        &data.measurement.reference.as_linear()?,
    )?;
    write_json(&a.out_dir.join("truth.json"), &to_json(&data.truth))
}

fn run_demo(a: DemoArgs) -> Result<(), Error> {
    let mut rng = Rng::new(a.seed);
    let mut max_dev = 0.0f64;
    let mut done = 0;
    while done < 1000 {
        let mut m = Matrix3::zeros();
        for r in 0..3 {
            for c in 0..3 {
                m[(r, c)] = rng.uniform(-1.0, 1.0);
            }
        }
        if m.determinant().abs() < 1e-2 {
            continue;
        }
        let h = conjugate_construct(&Homography3::new(m)?);
        let rgb = LinearRGB::new(
            rng.uniform(0.05, 1.0),
            rng.uniform(0.05, 1.0),
            rng.uniform(0.05, 1.0),
        )?;
        // row-vector map: ρ·M
        let mapped = [
            rgb.r * m[(0, 0)] + rgb.g * m[(1, 0)] + rgb.b * m[(2, 0)],
            rgb.r * m[(0, 1)] + rgb.g * m[(1, 1)] + rgb.b * m[(2, 1)],
            rgb.r * m[(0, 2)] + rgb.g * m[(1, 2)] + rgb.b * m[(2, 2)],
        ];
        let sum = mapped[0] + mapped[1] + mapped[2];
        if sum.abs() < 1e-6 {
            continue;
        }
        let direct = (mapped[0] / sum, mapped[1] / sum);
        let via = crate::colorspace::dehomogenize(&apply(
            &h,
            &crate::colorspace::rgb_to_rgi(&rgb)?,
        )?)?;
        let dev = (direct.0 - via.0).abs().max((direct.1 - via.1).abs());
        max_dev = max_dev.max(dev);
        done += 1;
    }
    println!("max conjugation deviation over 1000 samples: {max_dev}");
    Ok(())
}
