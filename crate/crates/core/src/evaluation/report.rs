use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifiers::{ClassifierConfig, Family};
use crate::dataio::ClassLabel;
use crate::error::{Error, Result};

use super::stats::{t_test, MeanStd, TTestResult};

/// Report schema version.
pub const REPORT_VERSION: u32 = 1;

/// Configurations below this mean test accuracy (percent) are left out of
/// the ratio table.
pub const NEAR_CHANCE_ACCURACY: f64 = 55.0;

pub const CSV_COLUMNS: [&str; 12] = [
    "config_id",
    "extractor",
    "family",
    "classifier",
    "kernel",
    "seed",
    "weight_seed",
    "fold",
    "train_acc",
    "test_acc",
    "train_sec",
    "test_sec",
];

/// Class-by-class counts: rows are actual N/B/M, columns predicted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u32; 3]; 3],
}

impl ConfusionMatrix {
    pub fn from_predictions(actual: &[ClassLabel], predicted: &[ClassLabel]) -> Self {
        let mut m = ConfusionMatrix::default();
        for (a, p) in actual.iter().zip(predicted) {
            m.counts[a.index()][p.index()] += 1;
        }
        m
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u32 {
        (0..3).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sums(&self) -> [u32; 3] {
        self.counts.map(|r| r.iter().sum())
    }

    /// Accuracy in percent; zero for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            t => 100.0 * f64::from(self.trace()) / f64::from(t),
        }
    }
}

/// One train/test evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Data-order seed.
    pub seed: u64,
    /// Classifier seed; `None` for classifiers without randomness.
    pub weight_seed: Option<u64>,
    pub fold: usize,
    /// MLP hidden layout such as `100-100`; empty otherwise.
    pub variant: String,
    /// Percent.
    pub train_acc: f64,
    /// Percent.
    pub test_acc: f64,
    pub train_sec: f64,
    pub test_sec: f64,
    /// Test-partition confusion counts.
    pub confusion: ConfusionMatrix,
    /// Set when the run could not be evaluated (degenerate fold).
    pub error: Option<String>,
}

impl RunRecord {
    pub fn completed(&self) -> bool {
        self.error.is_none()
    }
}

/// Statistics over the completed runs of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub completed_runs: usize,
    pub failed_runs: usize,
    pub train_acc: MeanStd,
    pub test_acc: MeanStd,
    pub train_sec: MeanStd,
    pub test_sec: MeanStd,
    pub confusion_mean: [[f64; 3]; 3],
    pub confusion_std: [[f64; 3]; 3],
}

impl Aggregates {
    pub fn of(runs: &[RunRecord]) -> Self {
        let done: Vec<&RunRecord> = runs.iter().filter(|r| r.completed()).collect();
        let column = |f: fn(&RunRecord) -> f64| -> MeanStd {
            MeanStd::of(&done.iter().map(|r| f(r)).collect::<Vec<_>>())
        };
        let mut confusion_mean = [[0.0; 3]; 3];
        let mut confusion_std = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let cell: Vec<f64> = done
                    .iter()
                    .map(|r| f64::from(r.confusion.counts[i][j]))
                    .collect();
                let s = MeanStd::of(&cell);
                confusion_mean[i][j] = s.mean;
                confusion_std[i][j] = s.std;
            }
        }
        Aggregates {
            completed_runs: done.len(),
            failed_runs: runs.len() - done.len(),
            train_acc: column(|r| r.train_acc),
            test_acc: column(|r| r.test_acc),
            train_sec: column(|r| r.train_sec),
            test_sec: column(|r| r.test_sec),
            confusion_mean,
            confusion_std,
        }
    }
}

/// Everything produced by one classifier configuration under the protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: u32,
    /// `<extractor>/<classifier>/<kernel>`.
    pub config_id: String,
    /// Full extractor id, e.g. `wavelet-zernike:sym8`.
    pub extractor: String,
    /// Wavelet family or structuring element of the extractor.
    pub family: String,
    pub classifier: Family,
    pub kernel: String,
    pub classifier_config: ClassifierConfig,
    pub classes: Vec<ClassLabel>,
    pub samples: usize,
    pub synthetic_samples: usize,
    /// Seeds `1..=seeds` were used for data order (and classifier weights).
    pub seeds: u64,
    pub folds: usize,
    pub decisions: Vec<String>,
    pub runs: Vec<RunRecord>,
    pub aggregates: Aggregates,
}

impl RunReport {
    pub fn test_accuracies(&self) -> Vec<f64> {
        self.runs.iter().filter(|r| r.completed()).map(|r| r.test_acc).collect()
    }

    /// Per-run accuracies, confusions and errors without timing columns;
    /// reproducible byte for byte from the same inputs and seeds.
    pub fn accuracy_section(&self) -> String {
        let mut out = String::new();
        for r in &self.runs {
            let _ = writeln!(
                out,
                "{},{},{},{},{:?},{:?},{:?},{}",
                r.seed,
                r.weight_seed.map(|w| w.to_string()).unwrap_or_default(),
                r.fold,
                r.variant,
                r.train_acc,
                r.test_acc,
                r.confusion.counts,
                r.error.as_deref().unwrap_or("")
            );
        }
        let a = &self.aggregates;
        let _ = writeln!(
            out,
            "train_acc={:?},test_acc={:?},confusion_mean={:?},confusion_std={:?}",
            a.train_acc, a.test_acc, a.confusion_mean, a.confusion_std
        );
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::UnknownName {
                kind: "report format",
                name: other.into(),
                expected: "csv, json".into(),
            }),
        }
    }
}

fn labels_str(classes: &[ClassLabel]) -> String {
    classes.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(" ")
}

/// CSV layout: `# key=value` metadata lines, a header row, one row per run,
/// then `# aggregate` lines.
pub fn report_to_csv(report: &RunReport) -> Result<String> {
    let mut out = String::new();
    let config = serde_json::to_string(&report.classifier_config)
        .map_err(|e| Error::Serialization(e.to_string()))?;
    let meta: Vec<(&str, String)> = vec![
        ("version", report.version.to_string()),
        ("config_id", report.config_id.clone()),
        ("extractor", report.extractor.clone()),
        ("family", report.family.clone()),
        ("classifier", report.classifier.as_str().to_string()),
        ("kernel", report.kernel.clone()),
        ("classifier_config", config),
        ("classes", labels_str(&report.classes)),
        ("samples", report.samples.to_string()),
        ("synthetic_samples", report.synthetic_samples.to_string()),
        ("seeds", report.seeds.to_string()),
        ("folds", report.folds.to_string()),
    ];
    for (k, v) in meta {
        let _ = writeln!(out, "# {k}={v}");
    }
    for d in &report.decisions {
        let _ = writeln!(out, "# decision={d}");
    }
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let mut header: Vec<String> = CSV_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.push("variant".into());
    for i in 0..3 {
        for j in 0..3 {
            header.push(format!("cm_{i}{j}"));
        }
    }
    header.push("error".into());
    let csv_err = |e: csv::Error| Error::Serialization(e.to_string());
    w.write_record(&header).map_err(csv_err)?;
    for r in &report.runs {
        let mut row = vec![
            report.config_id.clone(),
            report.extractor.clone(),
            report.family.clone(),
            report.classifier.as_str().to_string(),
            report.kernel.clone(),
            r.seed.to_string(),
            r.weight_seed.map(|s| s.to_string()).unwrap_or_default(),
            r.fold.to_string(),
            format!("{:?}", r.train_acc),
            format!("{:?}", r.test_acc),
            format!("{:?}", r.train_sec),
            format!("{:?}", r.test_sec),
            r.variant.clone(),
        ];
        row.extend(r.confusion.counts.iter().flatten().map(|c| c.to_string()));
        row.push(r.error.clone().unwrap_or_default());
        w.write_record(&row).map_err(csv_err)?;
    }
    let body = w.into_inner().map_err(|e| Error::Serialization(e.to_string()))?;
    out.push_str(&String::from_utf8(body).map_err(|e| Error::Serialization(e.to_string()))?);
    let a = &report.aggregates;
    let _ = writeln!(out, "# aggregate completed_runs={}", a.completed_runs);
    let _ = writeln!(out, "# aggregate failed_runs={}", a.failed_runs);
    for (name, s) in [
        ("train_acc", a.train_acc),
        ("test_acc", a.test_acc),
        ("train_sec", a.train_sec),
        ("test_sec", a.test_sec),
    ] {
        let _ = writeln!(out, "# aggregate {name}={:?},{:?}", s.mean, s.std);
    }
    for (name, m) in [("confusion_mean", a.confusion_mean), ("confusion_std", a.confusion_std)] {
        let cells: Vec<String> = m.iter().flatten().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(out, "# aggregate {name}={}", cells.join(","));
    }
    Ok(out)
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::Malformed(msg.into())
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| malformed(format!("bad {what} '{s}'")))
}

fn parse_floats(s: &str, n: usize, what: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| parse_num(x, what))
        .collect::<Result<_>>()?;
    if v.len() != n {
        return Err(malformed(format!("{what} needs {n} values")));
    }
    Ok(v)
}

fn grid(v: &[f64]) -> [[f64; 3]; 3] {
    let mut g = [[0.0; 3]; 3];
    for (k, x) in v.iter().enumerate() {
        g[k / 3][k % 3] = *x;
    }
    g
}

/// Parses [`report_to_csv`] output. The embedded aggregate block is kept
/// as written; [`Aggregates::of`] recomputes it from the rows.
pub fn report_from_csv(text: &str) -> Result<RunReport> {
    let mut meta = std::collections::HashMap::new();
    let mut decisions = Vec::new();
    let mut aggregates = std::collections::HashMap::new();
    let mut body = String::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# aggregate ") {
            let (k, v) = rest.split_once('=').ok_or_else(|| malformed(line))?;
            aggregates.insert(k.to_string(), v.to_string());
        } else if let Some(rest) = line.strip_prefix("# ") {
            let (k, v) = rest.split_once('=').ok_or_else(|| malformed(line))?;
            if k == "decision" {
                decisions.push(v.to_string());
            } else {
                meta.insert(k.to_string(), v.to_string());
            }
        } else if !line.trim().is_empty() {
            body.push_str(line);
            body.push('\n');
        }
    }
    let get = |k: &str| -> Result<&String> {
        meta.get(k).ok_or_else(|| malformed(format!("missing '{k}' metadata")))
    };
    let version: u32 = parse_num(get("version")?, "version")?;
    if version != REPORT_VERSION {
        return Err(malformed(format!("unsupported report version {version}")));
    }
    let classifier_config: ClassifierConfig = serde_json::from_str(get("classifier_config")?)
        .map_err(|e| Error::Serialization(e.to_string()))?;
    let classes = get("classes")?
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<Vec<ClassLabel>>>()?;

    let mut reader = csv::ReaderBuilder::new().from_reader(body.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::Serialization(e.to_string()))?
        .clone();
    if header.len() != CSV_COLUMNS.len() + 11 || header.iter().take(12).ne(CSV_COLUMNS) {
        return Err(malformed("unexpected report columns"));
    }
    let mut runs = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Serialization(e.to_string()))?;
        let mut counts = [[0u32; 3]; 3];
        for k in 0..9 {
            counts[k / 3][k % 3] = parse_num(&rec[13 + k], "confusion count")?;
        }
        runs.push(RunRecord {
            seed: parse_num(&rec[5], "seed")?,
            weight_seed: if rec[6].is_empty() {
                None
            } else {
                Some(parse_num(&rec[6], "weight seed")?)
            },
            fold: parse_num(&rec[7], "fold")?,
            train_acc: parse_num(&rec[8], "train accuracy")?,
            test_acc: parse_num(&rec[9], "test accuracy")?,
            train_sec: parse_num(&rec[10], "train time")?,
            test_sec: parse_num(&rec[11], "test time")?,
            variant: rec[12].to_string(),
            confusion: ConfusionMatrix { counts },
            error: if rec[22].is_empty() {
                None
            } else {
                Some(rec[22].to_string())
            },
        });
    }
    let agg = |k: &str| -> Result<&String> {
        aggregates
            .get(k)
            .ok_or_else(|| malformed(format!("missing aggregate '{k}'")))
    };
    let pair = |k: &str| -> Result<MeanStd> {
        let v = parse_floats(agg(k)?, 2, k)?;
        Ok(MeanStd { mean: v[0], std: v[1] })
    };
    let aggregates = Aggregates {
        completed_runs: parse_num(agg("completed_runs")?, "completed runs")?,
        failed_runs: parse_num(agg("failed_runs")?, "failed runs")?,
        train_acc: pair("train_acc")?,
        test_acc: pair("test_acc")?,
        train_sec: pair("train_sec")?,
        test_sec: pair("test_sec")?,
        confusion_mean: grid(&parse_floats(agg("confusion_mean")?, 9, "confusion mean")?),
        confusion_std: grid(&parse_floats(agg("confusion_std")?, 9, "confusion std")?),
    };
    Ok(RunReport {
        version,
        config_id: get("config_id")?.clone(),
        extractor: get("extractor")?.clone(),
        family: get("family")?.clone(),
        classifier: get("classifier")?.parse()?,
        kernel: get("kernel")?.clone(),
        classifier_config,
        classes,
        samples: parse_num(get("samples")?, "samples")?,
        synthetic_samples: parse_num(get("synthetic_samples")?, "synthetic samples")?,
        seeds: parse_num(get("seeds")?, "seeds")?,
        folds: parse_num(get("folds")?, "folds")?,
        decisions,
        runs,
        aggregates,
    })
}

pub fn emit_report(report: &RunReport, path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
    let path = path.as_ref();
    let text = match format {
        ReportFormat::Csv => report_to_csv(report)?,
        ReportFormat::Json => serde_json::to_string_pretty(report)
            .map_err(|e| Error::Serialization(e.to_string()))?,
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Loads a report written by [`emit_report`], detecting the format from
/// the content.
pub fn load_report(path: impl AsRef<Path>) -> Result<RunReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.trim_start().starts_with('{') {
        let report: RunReport =
            serde_json::from_str(&text).map_err(|e| Error::Serialization(e.to_string()))?;
        if report.version != REPORT_VERSION {
            return Err(malformed(format!("unsupported report version {}", report.version)));
        }
        Ok(report)
    } else {
        report_from_csv(&text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub config_id: String,
    pub mean_test_acc: f64,
    pub mean_train_sec: f64,
    /// Mean test accuracy (percent) per mean training second.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    /// Sorted by descending ratio.
    pub rows: Vec<RatioRow>,
    /// Configurations under [`NEAR_CHANCE_ACCURACY`].
    pub excluded: Vec<String>,
}

pub fn accuracy_time_ratio(mean_acc: f64, mean_sec: f64) -> Result<f64> {
    if mean_sec <= 0.0 || !mean_sec.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "mean training time must be positive (got {mean_sec})"
        )));
    }
    Ok(mean_acc / mean_sec)
}

pub fn ratio_report(reports: &[RunReport]) -> Result<RatioReport> {
    let mut rows = Vec::new();
    let mut excluded = Vec::new();
    for r in reports {
        let a = &r.aggregates;
        if a.test_acc.mean < NEAR_CHANCE_ACCURACY {
            excluded.push(r.config_id.clone());
            continue;
        }
        rows.push(RatioRow {
            config_id: r.config_id.clone(),
            mean_test_acc: a.test_acc.mean,
            mean_train_sec: a.train_sec.mean,
            ratio: accuracy_time_ratio(a.test_acc.mean, a.train_sec.mean)?,
        });
    }
    rows.sort_by(|x, y| y.ratio.total_cmp(&x.ratio));
    Ok(RatioReport { rows, excluded })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTest {
    pub a: String,
    pub b: String,
    pub test: TTestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub tests: Vec<PairwiseTest>,
    pub ratios: RatioReport,
}

/// Pairwise t-tests on per-run test accuracies plus the ratio table.
pub fn compare_reports(reports: &[RunReport]) -> Result<Comparison> {
    if reports.len() < 2 {
        return Err(Error::InvalidArgument("comparison needs at least two reports".into()));
    }
    let classes = &reports[0].classes;
    if let Some(r) = reports.iter().find(|r| &r.classes != classes) {
        return Err(Error::Dataset(format!(
            "class sets differ: {} has [{}], {} has [{}]",
            reports[0].config_id,
            labels_str(classes),
            r.config_id,
            labels_str(&r.classes)
        )));
    }
    let mut tests = Vec::new();
    for i in 0..reports.len() {
        for j in i + 1..reports.len() {
            tests.push(PairwiseTest {
                a: reports[i].config_id.clone(),
                b: reports[j].config_id.clone(),
                test: t_test(&reports[i].test_accuracies(), &reports[j].test_accuracies())?,
            });
        }
    }
    Ok(Comparison {
        tests,
        ratios: ratio_report(reports)?,
    })
}

impl Comparison {
    pub fn to_text(&self) -> String {
        let mut out = String::from("a,b,t,df,p,hypothesis\n");
        for t in &self.tests {
            let _ = writeln!(
                out,
                "{},{},{:.6},{},{:.6e},{}",
                t.a, t.b, t.test.t_statistic, t.test.degrees_of_freedom, t.test.p_value, t.test.hypothesis
            );
        }
        out.push_str("\nconfig_id,mean_test_acc,mean_train_sec,ratio\n");
        for r in &self.ratios.rows {
            let _ = writeln!(
                out,
                "{},{:.4},{:.6},{:.4}",
                r.config_id, r.mean_test_acc, r.mean_train_sec, r.ratio
            );
        }
        for e in &self.ratios.excluded {
            let _ = writeln!(out, "# excluded (near chance): {e}");
        }
        out
    }
}
