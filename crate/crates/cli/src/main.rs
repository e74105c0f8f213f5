//! `mammocad` command-line driver.
//!
//! Exit codes: 0 success, 1 runtime or data error, 2 usage error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use mammocad::classifiers::{ClassifierConfig, Family};
use mammocad::dataio::{balance_dataset, generate_phantom_dataset, load_image, DatasetManifest, LabeledSample, PhantomConfig};
use mammocad::evaluation::{compare_reports, emit_report, load_report, run_protocol, ReportFormat};
use mammocad::features::{extract, save_features, load_features, ExtractorId, FeatureMatrix, SpectrumElement};
use mammocad::wavelets::WaveletFamily;

const EXIT_RUNTIME: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "mammocad", version, about = "Wavelet/Zernike mammographic mass classification pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a labelled synthetic phantom dataset with a manifest
    Phantom {
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        normals: usize,
        #[arg(long, default_value_t = 10)]
        benign: usize,
        #[arg(long, default_value_t = 10)]
        malignant: usize,
        /// Image side in pixels
        #[arg(long, default_value_t = 128)]
        size: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Extract a feature matrix from every image of a manifest
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_enum)]
        extractor: ExtractorKind,
        /// Wavelet family (wavelet-zernike only) [default: sym8]
        #[arg(long, value_parser = ["bior3.7", "db8", "sym8"])]
        family: Option<String>,
        /// Structuring element (spectrum only) [default: square]
        #[arg(long, value_parser = ["square", "cross"])]
        se: Option<String>,
        /// Feature CSV to write
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (0 = all cores)
        #[arg(long, env = "MAMMOCAD_JOBS", default_value_t = 0)]
        jobs: usize,
    },
    /// Run the seeded cross-validation protocol for one classifier
    Evaluate {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, value_parser = ["elm", "svm", "knn", "tree", "mlp"])]
        classifier: String,
        /// Kernel or trainer name valid for the classifier
        #[arg(long)]
        kernel: String,
        /// Seeds 1..=N for data order and classifier weights
        #[arg(long, default_value_t = 30)]
        seeds: u64,
        /// Oversample minority classes before the protocol
        #[arg(long)]
        balance: bool,
        #[arg(long, default_value_t = 1)]
        balance_seed: u64,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Worker threads (0 = all cores)
        #[arg(long, env = "MAMMOCAD_JOBS", default_value_t = 0)]
        jobs: usize,
    },
    /// Pairwise t-tests and accuracy/time ratios across reports
    Compare {
        #[arg(long, num_args = 2.., required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ExtractorKind {
    WaveletZernike,
    Spectrum,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ReportFormat::Csv,
            Format::Json => ReportFormat::Json,
        }
    }
}

/// Failure classified by exit code.
enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<mammocad::Error> for Failure {
    fn from(e: mammocad::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("building worker pool")
}

fn phantom(cfg: PhantomConfig, out: &Path) -> Result<(), Failure> {
    println!(
        "phantom: out={} normals={} benign={} malignant={} size={} seed={}",
        out.display(),
        cfg.normals,
        cfg.benign,
        cfg.malignant,
        cfg.size,
        cfg.seed
    );
    let manifest = generate_phantom_dataset(&cfg, out)?;
    println!(
        "wrote {} images and {}",
        manifest.entries.len(),
        out.join("manifest.csv").display()
    );
    Ok(())
}

fn extractor_id(kind: ExtractorKind, family: Option<&str>, se: Option<&str>) -> Result<ExtractorId, Failure> {
    match kind {
        ExtractorKind::WaveletZernike => {
            if se.is_some() {
                return Err(Failure::Usage("--se applies only to the spectrum extractor".into()));
            }
            let family: WaveletFamily = family
                .unwrap_or("sym8")
                .parse()
                .map_err(|e: mammocad::Error| Failure::Usage(e.to_string()))?;
            Ok(ExtractorId::WaveletZernike { family })
        }
        ExtractorKind::Spectrum => {
            if family.is_some() {
                return Err(Failure::Usage("--family applies only to the wavelet-zernike extractor".into()));
            }
            let element: SpectrumElement = se
                .unwrap_or("square")
                .parse()
                .map_err(|e: mammocad::Error| Failure::Usage(e.to_string()))?;
            Ok(ExtractorId::Spectrum { element })
        }
    }
}

fn extract_features(manifest_path: &Path, id: ExtractorId, out: &Path, jobs: usize) -> Result<(), Failure> {
    println!(
        "extract: manifest={} extractor={id} out={} jobs={jobs}",
        manifest_path.display(),
        out.display()
    );
    let manifest = DatasetManifest::load(manifest_path)?;
    let rows: Vec<mammocad::Result<LabeledSample>> = pool(jobs)?.install(|| {
        manifest
            .entries
            .par_iter()
            .map(|entry| {
                let path = manifest.resolve(entry);
                let start = Instant::now();
                let img = load_image(&path)?;
                let f = extract(&img, id)?;
                eprintln!("{} {:.3}s", entry.image_path, start.elapsed().as_secs_f64());
                Ok(LabeledSample::real(f.values, entry.label))
            })
            .collect()
    });
    let rows = rows.into_iter().collect::<mammocad::Result<Vec<_>>>()?;
    let matrix = FeatureMatrix::new(id, rows)?;
    save_features(&matrix, out)?;
    println!("wrote {} x {} features to {}", matrix.len(), matrix.dims(), out.display());
    Ok(())
}

struct EvaluateArgs {
    features: PathBuf,
    classifier: String,
    kernel: String,
    seeds: u64,
    balance: Option<u64>,
    report: PathBuf,
    format: Format,
    jobs: usize,
}

fn evaluate(a: EvaluateArgs) -> Result<(), Failure> {
    let family: Family = a.classifier.parse().map_err(|e: mammocad::Error| Failure::Usage(e.to_string()))?;
    if !family.kernels().contains(&a.kernel.as_str()) {
        return Err(Failure::Usage(format!(
            "kernel '{}' is not valid for {family} (expected one of: {})",
            a.kernel,
            family.kernels().join(", ")
        )));
    }
    if a.seeds == 0 {
        return Err(Failure::Usage("--seeds must be at least 1".into()));
    }
    let config = ClassifierConfig::from_names(family, &a.kernel).map_err(|e| Failure::Usage(e.to_string()))?;
    let mut matrix = load_features(&a.features)?;
    if let Some(seed) = a.balance {
        let rows = balance_dataset(&matrix.rows, seed)?;
        matrix = FeatureMatrix::new(matrix.extractor, rows)?;
    }
    let config_json = serde_json::to_string(&config).context("serializing configuration")?;
    println!(
        "evaluate: features={} extractor={} samples={} classifier={family} kernel={} seeds={} balance={} report={} format={:?} jobs={}",
        a.features.display(),
        matrix.extractor,
        matrix.len(),
        a.kernel,
        a.seeds,
        a.balance.map(|s| format!("seed {s}")).unwrap_or_else(|| "off".into()),
        a.report.display(),
        a.format,
        a.jobs
    );
    println!("classifier_config: {config_json}");
    let report = pool(a.jobs)?.install(|| run_protocol(&matrix, &config, a.seeds))?;
    for d in &report.decisions {
        println!("decision: {d}");
    }
    emit_report(&report, &a.report, a.format.into())?;
    let g = &report.aggregates;
    println!(
        "{}: {} runs ({} failed), test accuracy {:.2} ± {:.2}%, train {:.2} ± {:.2}%, train time {:.4} ± {:.4}s",
        report.config_id,
        report.runs.len(),
        g.failed_runs,
        g.test_acc.mean,
        g.test_acc.std,
        g.train_acc.mean,
        g.train_acc.std,
        g.train_sec.mean,
        g.train_sec.std
    );
    Ok(())
}

fn compare(paths: &[PathBuf], out: &Path) -> Result<(), Failure> {
    println!(
        "compare: reports={} out={}",
        paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(" "),
        out.display()
    );
    let reports = paths
        .iter()
        .map(|p| load_report(p).with_context(|| format!("loading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let comparison = compare_reports(&reports)?;
    let text = comparison.to_text();
    std::fs::write(out, &text).with_context(|| format!("writing {}", out.display()))?;
    print!("{text}");
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Phantom {
            out,
            normals,
            benign,
            malignant,
            size,
            seed,
        } => phantom(
            PhantomConfig {
                normals,
                benign,
                malignant,
                size,
                seed,
            },
            &out,
        ),
        Command::Extract {
            manifest,
            extractor,
            family,
            se,
            out,
            jobs,
        } => {
            let id = extractor_id(extractor, family.as_deref(), se.as_deref())?;
            extract_features(&manifest, id, &out, jobs)
        }
        Command::Evaluate {
            features,
            classifier,
            kernel,
            seeds,
            balance,
            balance_seed,
            report,
            format,
            jobs,
        } => evaluate(EvaluateArgs {
            features,
            classifier,
            kernel,
            seeds,
            balance: balance.then_some(balance_seed),
            report,
            format,
            jobs,
        }),
        Command::Compare { reports, out } => compare(&reports, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
