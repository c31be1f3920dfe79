//! `caliper`: calibration reports, synthetic data and the API server.
//!
//! Exit status is 0 on success, 2 on usage errors and 1 on runtime errors.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use caliper_core::binning::{BinSpec, Strategy, MAX_BINS};
use caliper_core::dataset::{ingest_features, ingest_predictions, write_labels_csv, write_probs_csv, Column};
use caliper_core::dataset::{EvaluationSession, FeatureTable, ModelRecord, ViewMode};
use caliper_core::lrd::LrdParams;
use caliper_core::report::build_report;
use caliper_core::selection::SubgroupPredicate;
use caliper_core::svg::render_svg;
use caliper_core::synth::{drop_informative, gen_classification, majority_weights, Distortion, SynthSpec};
use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "caliper", version, about = "Calibration analysis for probabilistic classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a JSON report (and optionally an SVG plot) for one or more models.
    Report(ReportArgs),
    /// Serve the JSON API.
    Serve(ServeArgs),
    /// Generate Gaussian-mixture data with known posteriors as CSV files.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Confidence,
    Classwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Uniform,
    Quantile,
}

#[derive(Debug, clap::Args)]
struct ReportArgs {
    /// Features CSV; without it rows are identified by index only.
    #[arg(long, env = "CALIPER_FEATURES")]
    features: Option<PathBuf>,
    /// Probability CSV, one per model.
    #[arg(long, required = true, env = "CALIPER_PROBS")]
    probs: Vec<PathBuf>,
    /// Labels CSV shared by all models (index or one-hot).
    #[arg(long, env = "CALIPER_LABELS")]
    labels: PathBuf,
    /// Model names in `--probs` order; defaults to the file stems.
    #[arg(long = "model-name", env = "CALIPER_MODEL_NAME")]
    model_name: Vec<String>,
    /// Classes to plot in classwise mode; all classes when omitted.
    #[arg(long, env = "CALIPER_CLASS")]
    class: Vec<usize>,
    #[arg(long, value_enum, default_value = "confidence", env = "CALIPER_MODE")]
    mode: ModeArg,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..=MAX_BINS as u64), env = "CALIPER_BINS")]
    bins: u64,
    #[arg(long, value_enum, default_value = "uniform", env = "CALIPER_STRATEGY")]
    strategy: StrategyArg,
    /// Also fit a learned reliability diagram per curve.
    #[arg(long, env = "CALIPER_LRD")]
    lrd: bool,
    /// Seed for the learned diagrams.
    #[arg(long, default_value_t = 0, env = "CALIPER_SEED")]
    seed: u64,
    /// JSON subgroup predicate restricting every curve.
    #[arg(long, env = "CALIPER_SUBGROUP")]
    subgroup: Option<PathBuf>,
    /// Report path; stdout when omitted.
    #[arg(long, env = "CALIPER_OUT")]
    out: Option<PathBuf>,
    #[arg(long, env = "CALIPER_SVG")]
    svg: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct ServeArgs {
    #[arg(long, default_value_t = caliper_service::DEFAULT_PORT, env = "CALIPER_PORT")]
    port: u16,
    /// Directory of static files served for non-API paths.
    #[arg(long, env = "CALIPER_ASSETS")]
    assets: Option<PathBuf>,
}

/// Class weights as given on the command line.
#[derive(Debug, Clone, PartialEq)]
enum WeightsArg {
    Uniform,
    /// First class gets the share, the rest split the remainder evenly.
    MajorityRest(f64),
    Explicit(Vec<f64>),
}

fn parse_weights(s: &str) -> Result<WeightsArg, String> {
    if s == "uniform" {
        return Ok(WeightsArg::Uniform);
    }
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| p.parse::<f64>().map_err(|_| format!("invalid weight {p:?}"));
    if parts.len() == 2 && parts[1] == "uniform-rest" {
        let m = num(parts[0])?;
        if !(0.0..=1.0).contains(&m) {
            return Err(format!("majority share {m} outside [0, 1]"));
        }
        return Ok(WeightsArg::MajorityRest(m));
    }
    Ok(WeightsArg::Explicit(parts.into_iter().map(num).collect::<Result<_, _>>()?))
}

#[derive(Debug, Clone, PartialEq)]
enum DistortionArg {
    None,
    Temperature(f64),
    /// Posterior reweighting from the generating priors to uniform priors.
    PriorShift,
}

fn parse_distortion(s: &str) -> Result<DistortionArg, String> {
    match s.split_once(':') {
        None if s == "none" => Ok(DistortionArg::None),
        None if s == "prior-shift" => Ok(DistortionArg::PriorShift),
        Some(("temperature", t)) => match t.parse::<f64>() {
            Ok(t) if t > 0.0 && t.is_finite() => Ok(DistortionArg::Temperature(t)),
            _ => Err(format!("temperature must be a positive number, got {t:?}")),
        },
        _ => Err(format!(
            "unknown distortion {s:?}; expected none, temperature:T or prior-shift"
        )),
    }
}

#[derive(Debug, clap::Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 10_000, env = "CALIPER_N")]
    n: usize,
    #[arg(long, default_value_t = 10, env = "CALIPER_CLASSES")]
    classes: usize,
    #[arg(long, default_value_t = 10, env = "CALIPER_INFORMATIVE")]
    informative: usize,
    #[arg(long, default_value_t = 10, env = "CALIPER_NOISE")]
    noise: usize,
    /// `uniform`, `S,uniform-rest` or an explicit comma-separated list.
    #[arg(long, default_value = "uniform", value_parser = parse_weights, env = "CALIPER_WEIGHTS")]
    weights: WeightsArg,
    /// `none`, `temperature:T` or `prior-shift`.
    #[arg(long, default_value = "none", value_parser = parse_distortion, env = "CALIPER_DISTORTION")]
    distortion: DistortionArg,
    /// Informative dimensions the predictor may use; all when omitted.
    #[arg(long, env = "CALIPER_KEEP_INFORMATIVE")]
    keep_informative: Option<usize>,
    #[arg(long, default_value_t = caliper_core::synth::DEFAULT_CENTROID_SCALE, env = "CALIPER_CENTROID_SCALE")]
    centroid_scale: f64,
    #[arg(long, default_value_t = 0, env = "CALIPER_SEED")]
    seed: u64,
    #[arg(long, env = "CALIPER_OUT_DIR")]
    out_dir: PathBuf,
}

type Failure = Box<dyn std::error::Error>;

fn usage_error(msg: impl std::fmt::Display) -> ! {
    Cli::command().error(ErrorKind::ValueValidation, msg).exit()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Report(args) => report(args),
        Command::Serve(args) => serve(args),
        Command::Synth(args) => synth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn with_path<T, E: std::fmt::Display>(path: &Path, r: Result<T, E>) -> Result<T, Failure> {
    r.map_err(|e| format!("{}: {e}", path.display()).into())
}

fn open(path: &Path) -> Result<File, Failure> {
    with_path(path, File::open(path))
}

fn row_index_table(n: usize) -> FeatureTable {
    FeatureTable::new(vec!["row".into()], vec![Column::Numeric((0..n).map(|j| j as f64).collect())])
        .expect("single numeric column")
}

fn report(args: ReportArgs) -> Result<(), Failure> {
    if args.model_name.len() > args.probs.len() {
        usage_error("more --model-name values than --probs files");
    }
    let mut models = Vec::new();
    for (i, path) in args.probs.iter().enumerate() {
        let name = match args.model_name.get(i) {
            Some(n) => n.clone(),
            None => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| format!("model_{i}")),
        };
        let preds = with_path(path, ingest_predictions(open(path)?, open(&args.labels)?))?;
        models.push(with_path(path, ModelRecord::new(name, preds))?);
    }
    let table = match &args.features {
        Some(path) => with_path(path, ingest_features(open(path)?, &HashMap::new()))?,
        None => row_index_table(models[0].n()),
    };
    let mut session = EvaluationSession::new("report", table);
    for m in models {
        session.add_model(m)?;
    }

    let mut curves = Vec::new();
    for m in session.models() {
        match args.mode {
            ModeArg::Confidence => curves.push((m.name().to_string(), ViewMode::Confidence)),
            ModeArg::Classwise => {
                let classes: Vec<usize> = if args.class.is_empty() {
                    (0..m.classes()).collect()
                } else {
                    args.class.clone()
                };
                curves.extend(classes.into_iter().map(|c| (m.name().to_string(), ViewMode::ClassWise(c))));
            }
        }
    }
    let strategy = match args.strategy {
        StrategyArg::Uniform => Strategy::Uniform,
        StrategyArg::Quantile => Strategy::Quantile,
    };
    let spec = BinSpec::new(strategy, args.bins as usize)?;
    let subgroup: Option<SubgroupPredicate> = match &args.subgroup {
        Some(path) => Some(with_path(path, serde_json::from_reader(open(path)?))?),
        None => None,
    };
    let lrd = args.lrd.then(|| LrdParams::with_seed(args.seed));
    let report = build_report(&session, &curves, spec, lrd.as_ref(), subgroup.as_ref())?;

    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    match &args.out {
        Some(path) => with_path(path, fs::write(path, &json))?,
        None => std::io::stdout().write_all(json.as_bytes())?,
    }
    if let Some(path) = &args.svg {
        with_path(path, fs::write(path, render_svg(&report)))?;
    }
    Ok(())
}

fn serve(args: ServeArgs) -> Result<(), Failure> {
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let addr = caliper_service::bind_address(args.port);
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| format!("cannot bind {addr}: {e}"))?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        caliper_service::serve(listener, caliper_service::AppState::default(), args.assets).await?;
        Ok(())
    })
}

fn synth(args: SynthArgs) -> Result<(), Failure> {
    if args.classes < 2 {
        usage_error("--classes must be at least 2");
    }
    let class_weights = match &args.weights {
        WeightsArg::Uniform => vec![1.0 / args.classes as f64; args.classes],
        WeightsArg::MajorityRest(m) => majority_weights(args.classes, *m),
        WeightsArg::Explicit(w) if w.len() == args.classes => w.clone(),
        WeightsArg::Explicit(w) => usage_error(format!("{} weights given for {} classes", w.len(), args.classes)),
    };
    let spec = SynthSpec {
        n: args.n,
        classes: args.classes,
        informative: args.informative,
        noise: args.noise,
        class_weights,
        centroid_scale: args.centroid_scale,
        seed: args.seed,
    };
    if let Err(e) = spec.validate() {
        usage_error(e);
    }
    let mut data = gen_classification(&spec)?;
    if let Some(keep) = args.keep_informative {
        data = drop_informative(&data, keep)?;
    }
    let distortion = match args.distortion {
        DistortionArg::None => Distortion::None,
        DistortionArg::Temperature(t) => Distortion::Temperature { t },
        DistortionArg::PriorShift => Distortion::ClassPriorShift {
            original: spec.class_weights.clone(),
            resampled: vec![1.0 / spec.classes as f64; spec.classes],
        },
    };
    let model = data.model("synth", &distortion)?;

    let dir = &args.out_dir;
    with_path(dir, fs::create_dir_all(dir))?;
    let create = |name: &str| -> Result<BufWriter<File>, Failure> {
        let path = dir.join(name);
        Ok(BufWriter::new(with_path(&path, File::create(&path))?))
    };
    data.features.write_csv(create("features.csv")?)?;
    write_probs_csv(create("probs.csv")?, model.probs(), model.classes())?;
    write_labels_csv(create("labels.csv")?, model.labels())?;
    write_probs_csv(create("posteriors.csv")?, &data.posteriors, data.classes)?;
    Ok(())
}
