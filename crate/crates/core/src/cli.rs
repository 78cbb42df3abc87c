//! `shockspec` command-line interface.
//!
//! Machine-readable output is JSON (one line on stdout per command, plus any
//! requested files); plot data is CSV. Failures print a single JSON line
//! `{"error": ..., "kind": ...}` on stderr and exit with 1 (usage), 2 (data)
//! or 3 (time budget exhausted).

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dataset::{
    self, read_dataset, DatasetManifest, DatasetWriter, GridSpec, Record, ShockDataset,
};
use crate::error::Error;
use crate::losses::{evaluate_losses, LatentStats, LossConfig};
use crate::metrics::{self, SpectrumEnsemble};
use crate::sds::{self, FitConfig, GaConfig};
use crate::srs::{self, FrequencyGrid, Signal, Spectrum};
use crate::synth::{self, GenParams, GenerateOptions};

pub const THREADS_ENV: &str = "SHOCKSPEC_THREADS";

#[derive(Debug, Parser)]
#[command(name = "shockspec", version, about = "Shock response spectrum toolkit")]
pub struct Cli {
    /// Worker threads (default: available parallelism); results do not depend on it
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic shock dataset
    Gen(GenArgs),
    /// Recompute the spectra of a dataset on a grid
    Srs(SrsArgs),
    /// Fit sum-of-decayed-sinusoid models to target spectra
    SdsFit(SdsFitArgs),
    /// Evaluate the five loss terms for a target/prediction pair
    LossesEval(LossesEvalArgs),
    /// Score candidate signals against hold-out targets
    Eval(EvalArgs),
    /// Aggregate the spectra of a dataset into one spectrum
    Aggregate(AggregateArgs),
    /// Dump dataset spectra as CSV
    ExportCsv(ExportCsvArgs),
    /// Time the main operations
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Log-spaced grid as f_min,f_max,count
    #[arg(long, value_name = "FMIN,FMAX,F")]
    pub grid: Option<String>,
    /// Damping ratio of every oscillator
    #[arg(long)]
    pub zeta: Option<f64>,
    /// Padding scale p (padding length is divided by p)
    #[arg(long)]
    pub pad_scale: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// JSON file of generator parameters; missing fields take defaults
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Max-normalize every record and store the factors
    #[arg(long)]
    pub normalize: bool,
    /// Stream index of the first record
    #[arg(long, default_value_t = 0)]
    pub first_stream: u64,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args)]
pub struct SrsArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args)]
pub struct SdsFitArgs {
    /// Dataset (stored spectra are the targets) or JSON spectrum
    #[arg(long)]
    pub target: PathBuf,
    /// JSON file with every fit
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 12)]
    pub atoms: usize,
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    /// Objective evaluations per restart
    #[arg(long, default_value_t = 1000)]
    pub max_evals: usize,
    /// Refine with the genetic algorithm
    #[arg(long)]
    pub ga: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Wall-clock cap per fit in seconds
    #[arg(long)]
    pub budget_s: Option<f64>,
    /// Fit only these record indices (comma separated)
    #[arg(long, value_delimiter = ',')]
    pub indices: Option<Vec<usize>>,
    /// Write rendered models as a dataset for `eval`
    #[arg(long)]
    pub signals_out: Option<PathBuf>,
    /// Samples per rendered model (JSON targets only)
    #[arg(long)]
    pub n_samples: Option<usize>,
    /// Sample rate for rendering (JSON targets only)
    #[arg(long)]
    pub sample_rate: Option<f64>,
    #[arg(long)]
    pub pad_scale: Option<f64>,
}

#[derive(Debug, Args)]
pub struct LossesEvalArgs {
    /// Dataset or JSON signal
    #[arg(long)]
    pub target: PathBuf,
    /// Dataset or JSON signal
    #[arg(long)]
    pub pred: PathBuf,
    /// Record index when an input is a dataset
    #[arg(long, default_value_t = 0)]
    pub index: u64,
    /// JSON file with `mu` and `log_var`
    #[arg(long)]
    pub latent: Option<PathBuf>,
    /// JSON loss configuration; missing fields take defaults
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub targets: PathBuf,
    #[arg(long)]
    pub candidates: PathBuf,
    /// Second candidate set for win rates
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    #[arg(long)]
    pub report: PathBuf,
    /// Directory for histogram and ECDF CSV files
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Histogram bin width in dB
    #[arg(long, default_value_t = 0.5)]
    pub bin_width: f64,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AggregateMode {
    Mean,
    UpperTol,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub mode: AggregateMode,
    /// k-factor for the upper tolerance
    #[arg(long, default_value_t = 2.0)]
    pub k: f64,
    /// Write the spectrum here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportCsvArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Export only this record
    #[arg(long)]
    pub index: Option<u64>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Signals for the SRS throughput measurement
    #[arg(long, default_value_t = 64)]
    pub signals: usize,
    /// Include one SDS fit with the default budget
    #[arg(long)]
    pub fit: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Lib(Error::Io(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Lib(Error::Manifest(e))
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn report_error(message: &str, kind: &str) {
    let line = json!({ "error": message, "kind": kind });
    eprintln!("{line}");
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.to_string();
            let first = text
                .lines()
                .next()
                .unwrap_or("usage error")
                .trim_start_matches("error: ");
            report_error(first, "usage");
            return 1;
        }
    };
    match with_threads(cli.threads, || dispatch(cli.command)) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(CliError::Usage(msg)) => {
            report_error(&msg, "usage");
            1
        }
        Err(CliError::Lib(e)) => {
            report_error(&e.to_string(), e.kind());
            match e {
                Error::BudgetExhausted(_) => 3,
                _ => 2,
            }
        }
    }
}

#[cfg(feature = "parallel")]
fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> CliResult<T> + Send,
) -> CliResult<T> {
    match threads {
        Some(0) => Err(usage("--threads must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| usage(e.to_string()))?;
            pool.install(f)
        }
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_threads<T>(threads: Option<usize>, f: impl FnOnce() -> CliResult<T>) -> CliResult<T> {
    if threads == Some(0) {
        return Err(usage("--threads must be at least 1"));
    }
    f()
}

/// Help text of the top-level command or one subcommand.
pub fn help_text(subcommand: Option<&str>) -> Option<String> {
    let mut cmd = Cli::command();
    cmd.build();
    let target = match subcommand {
        None => &mut cmd,
        Some(name) => cmd.find_subcommand_mut(name)?,
    };
    Some(target.render_long_help().to_string())
}

fn dispatch(command: Command) -> CliResult<serde_json::Value> {
    match command {
        Command::Gen(a) => cmd_gen(a),
        Command::Srs(a) => cmd_srs(a),
        Command::SdsFit(a) => cmd_sds_fit(a),
        Command::LossesEval(a) => cmd_losses_eval(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Aggregate(a) => cmd_aggregate(a),
        Command::ExportCsv(a) => cmd_export_csv(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

fn parse_grid(text: &str, zeta: f64) -> CliResult<GridSpec> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bad = || usage(format!("--grid expects FMIN,FMAX,COUNT, got {text:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    Ok(GridSpec {
        f_min: parts[0].parse().map_err(|_| bad())?,
        f_max: parts[1].parse().map_err(|_| bad())?,
        count: parts[2].parse().map_err(|_| bad())?,
        damping_ratio: zeta,
    })
}

impl GridArgs {
    fn resolve(&self, fallback: GridSpec) -> CliResult<GridSpec> {
        let zeta = self.zeta.unwrap_or(fallback.damping_ratio);
        match &self.grid {
            Some(text) => parse_grid(text, zeta),
            None => Ok(GridSpec {
                damping_ratio: zeta,
                ..fallback
            }),
        }
    }

    fn pad(&self, fallback: f64) -> f64 {
        self.pad_scale.unwrap_or(fallback)
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Lib(Error::invalid(format!("{}: {e}", path.display()))))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn is_dataset(path: &Path) -> CliResult<bool> {
    let mut head = [0u8; 8];
    let mut f = File::open(path)?;
    let n = f.read(&mut head)?;
    Ok(n == 8 && head == dataset::MAGIC)
}

/// JSON form of a spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumFile {
    pub freqs_hz: Vec<f64>,
    pub values: Vec<f64>,
    pub damping_ratio: f64,
}

impl SpectrumFile {
    pub fn from_spectrum(s: &Spectrum) -> Self {
        Self {
            freqs_hz: s.freqs_hz().to_vec(),
            values: s.values().to_vec(),
            damping_ratio: s.grid().damping_ratio(),
        }
    }

    pub fn to_spectrum(&self) -> crate::Result<Spectrum> {
        let grid = Arc::new(FrequencyGrid::new(
            self.freqs_hz.clone(),
            self.damping_ratio,
        )?);
        Spectrum::new(self.values.clone(), grid)
    }
}

/// JSON form of a signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalFile {
    pub sample_rate_hz: f64,
    pub samples: Vec<f64>,
}

fn cmd_gen(a: GenArgs) -> CliResult<serde_json::Value> {
    if a.count == 0 {
        return Err(usage("--count must be at least 1"));
    }
    let params: GenParams = match &a.params {
        Some(p) => read_json(p)?,
        None => GenParams::default(),
    };
    let params = params.with_seed(a.seed);
    let grid = a.grid.resolve(GridSpec::standard())?;
    let options = GenerateOptions {
        pad_scale: a.grid.pad(srs::DEFAULT_PAD_SCALE),
        normalize: a.normalize,
        first_stream: a.first_stream,
    };
    let manifest = synth::generate_dataset(&params, a.count, &grid, &options, &a.out)?;
    Ok(json!({
        "command": "gen",
        "out": a.out,
        "count": manifest.count,
        "noise_var": manifest.noise_var,
    }))
}

fn cmd_srs(a: SrsArgs) -> CliResult<serde_json::Value> {
    let data = read_dataset(&a.input)?;
    let grid_spec = a.grid.resolve(data.manifest.grid)?;
    let pad_scale = a.grid.pad(data.manifest.pad_scale);
    let grid = Arc::new(grid_spec.to_grid()?);
    let fs = data.manifest.sample_rate_hz;
    grid.check_nyquist(fs)?;

    let records: Vec<crate::Result<Record>> = crate::par::map_range(data.len(), |j| {
        let signal = data.signal(j)?;
        let spectrum = srs::srs_filterbank(&signal, &grid, pad_scale)?;
        Ok(Record {
            signal: data.records[j].signal.clone(),
            spectrum: spectrum.values().iter().map(|&v| v as f32).collect(),
        })
    });
    let mut writer = DatasetWriter::create(&a.out, data.manifest.n_samples, grid.len())?;
    for r in records {
        writer.write_record(&r?)?;
    }
    let mut manifest = data.manifest.clone();
    manifest.grid = grid_spec;
    manifest.pad_scale = pad_scale;
    manifest.spectra_paired = true;
    let manifest = writer.finish(manifest)?;
    Ok(json!({ "command": "srs", "out": a.out, "count": manifest.count }))
}

#[derive(Debug, Serialize)]
struct FitRecord {
    index: usize,
    #[serde(flatten)]
    result: sds::FitResult,
}

fn cmd_sds_fit(a: SdsFitArgs) -> CliResult<serde_json::Value> {
    let mut config = FitConfig {
        m_atoms: a.atoms,
        restarts: a.restarts,
        max_evals: a.max_evals,
        time_budget_s: a.budget_s,
        ga: a.ga.then(GaConfig::default),
        seed: a.seed,
        ..Default::default()
    };
    let mut targets: Vec<(usize, Spectrum)> = Vec::new();
    let mut manifest_for_signals: Option<DatasetManifest> = None;
    if is_dataset(&a.target)? {
        let data = read_dataset(&a.target)?;
        let grid = data.manifest.frequency_grid()?;
        config.n_samples = data.manifest.n_samples;
        config.sample_rate_hz = data.manifest.sample_rate_hz;
        config.pad_scale = a.pad_scale.unwrap_or(data.manifest.pad_scale);
        let indices: Vec<usize> = a
            .indices
            .clone()
            .unwrap_or_else(|| (0..data.len()).collect());
        for &i in &indices {
            if i >= data.len() {
                return Err(usage(format!(
                    "index {i} out of range (count {})",
                    data.len()
                )));
            }
            targets.push((i, physical_spectrum(&data, i, &grid)?));
        }
        let mut m = DatasetManifest::new(
            config.n_samples,
            config.sample_rate_hz,
            data.manifest.grid,
            config.pad_scale,
        );
        m.source = format!("sds-fit of {}", a.target.display());
        manifest_for_signals = Some(m);
    } else {
        let spec: SpectrumFile = read_json(&a.target)?;
        config.n_samples = a.n_samples.unwrap_or(config.n_samples);
        config.sample_rate_hz = a.sample_rate.unwrap_or(config.sample_rate_hz);
        config.pad_scale = a.pad_scale.unwrap_or(config.pad_scale);
        targets.push((0, spec.to_spectrum()?));
        if a.signals_out.is_some() {
            return Err(usage("--signals-out needs a dataset target"));
        }
    }
    config.validate().map_err(|e| usage(e.to_string()))?;

    let mut fits = Vec::with_capacity(targets.len());
    for (index, target) in &targets {
        let result = sds::fit_sds(target, &config)?;
        fits.push(FitRecord {
            index: *index,
            result,
        });
    }
    let losses: Vec<f64> = fits.iter().map(|f| f.result.loss).collect();
    let summary = metrics::Summary::from_values(&losses)?;
    write_json(
        &a.out,
        &json!({ "config": config, "summary": summary, "fits": fits }),
    )?;

    if let (Some(path), Some(manifest)) = (&a.signals_out, manifest_for_signals) {
        let grid = manifest.frequency_grid()?;
        let mut writer = DatasetWriter::create(path, manifest.n_samples, grid.len())?;
        for f in &fits {
            let signal = sds::render_sds(&f.result.model)?;
            let (record, _) = Record::from_signal(&signal, &grid, manifest.pad_scale, false)?;
            writer.write_record(&record)?;
        }
        writer.finish(manifest)?;
    }
    Ok(json!({
        "command": "sds-fit",
        "out": a.out,
        "count": fits.len(),
        "median_loss": summary.median,
    }))
}

/// Stored spectrum of record `i`, undoing max-normalization when present.
fn physical_spectrum(
    data: &ShockDataset,
    i: usize,
    grid: &Arc<FrequencyGrid>,
) -> crate::Result<Spectrum> {
    let s = data.spectrum(i, grid)?;
    Ok(match &data.manifest.normalization {
        Some(n) => s.scaled(n.scales[i]),
        None => s,
    })
}

fn load_signal(path: &Path, index: u64) -> CliResult<(Signal, Option<(GridSpec, f64)>)> {
    if is_dataset(path)? {
        let mut reader = dataset::DatasetReader::open(path)?;
        let record = reader.read_record(index)?;
        let m = reader.manifest();
        Ok((
            record.to_signal(m.sample_rate_hz)?,
            Some((m.grid, m.pad_scale)),
        ))
    } else {
        let s: SignalFile = read_json(path)?;
        Ok((Signal::new(s.samples, s.sample_rate_hz)?, None))
    }
}

fn cmd_losses_eval(a: LossesEvalArgs) -> CliResult<serde_json::Value> {
    let (target, meta) = load_signal(&a.target, a.index)?;
    let (pred, _) = load_signal(&a.pred, a.index)?;
    let mut config: LossConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => LossConfig::default(),
    };
    let (fallback_grid, fallback_pad) =
        meta.unwrap_or((GridSpec::standard(), config.shape.pad_scale));
    let grid_spec = a.grid.resolve(fallback_grid)?;
    config.shape.pad_scale = a.grid.pad(fallback_pad);
    let grid = Arc::new(grid_spec.to_grid()?);
    let latent: Option<LatentStats> = a.latent.as_deref().map(read_json).transpose()?;
    let report = evaluate_losses(&target, &pred, &grid, latent.as_ref(), &config)?;
    write_json(&a.out, &json!({ "grid": grid_spec, "report": report }))?;
    Ok(json!({ "command": "losses-eval", "out": a.out, "total": report.total }))
}

fn cmd_eval(a: EvalArgs) -> CliResult<serde_json::Value> {
    let targets = read_dataset(&a.targets)?;
    let candidates = read_dataset(&a.candidates)?;
    let baseline = a.baseline.as_deref().map(read_dataset).transpose()?;
    let grid_spec = a.grid.resolve(targets.manifest.grid)?;
    let pad_scale = a.grid.pad(targets.manifest.pad_scale);
    let grid = Arc::new(grid_spec.to_grid()?);
    let report =
        metrics::evaluate_holdout(&targets, &candidates, baseline.as_ref(), &grid, pad_scale)?;
    write_json(&a.report, &report)?;

    if let Some(dir) = &a.csv {
        fs::create_dir_all(dir)?;
        let mut out = BufWriter::new(File::create(dir.join("db_histogram.csv"))?);
        metrics::write_histogram_csv(
            &mut out,
            &metrics::histogram(&report.db_errors, a.bin_width)?,
        )?;
        out.flush()?;
        let mut out = BufWriter::new(File::create(dir.join("db_ecdf.csv"))?);
        metrics::write_ecdf_csv(&mut out, &metrics::ecdf(&report.db_errors))?;
        out.flush()?;
        let mut out = BufWriter::new(File::create(dir.join("rmsle_ecdf.csv"))?);
        metrics::write_ecdf_csv(&mut out, &metrics::ecdf(&report.per_sample_rmsle))?;
        out.flush()?;
    }
    Ok(json!({
        "command": "eval",
        "report": a.report,
        "count": report.count,
        "rmsle_mean": report.summary.mean,
        "rmsle_median": report.summary.median,
        "db_within_1": report.db_within_1,
        "db_within_3": report.db_within_3,
        "win_rate_vs_baseline": report.win_rate_vs_baseline,
    }))
}

fn cmd_aggregate(a: AggregateArgs) -> CliResult<serde_json::Value> {
    let data = read_dataset(&a.input)?;
    let grid = data.manifest.frequency_grid()?;
    let spectra = (0..data.len())
        .map(|i| physical_spectrum(&data, i, &grid))
        .collect::<crate::Result<Vec<_>>>()?;
    let ensemble = SpectrumEnsemble::new(spectra)?;
    let result = match a.mode {
        AggregateMode::Mean => metrics::aggregate_mean(&ensemble)?,
        AggregateMode::UpperTol => metrics::aggregate_upper_tol(&ensemble, a.k)?,
    };
    let file = SpectrumFile::from_spectrum(&result);
    match &a.out {
        Some(path) => {
            write_json(path, &file)?;
            Ok(json!({ "command": "aggregate", "out": path, "count": ensemble.len() }))
        }
        None => Ok(serde_json::to_value(&file)?),
    }
}

fn cmd_export_csv(a: ExportCsvArgs) -> CliResult<serde_json::Value> {
    let mut reader = dataset::DatasetReader::open(&a.input)?;
    let freqs = reader.manifest().grid.to_grid()?.freqs_hz().to_vec();
    let mut out = BufWriter::new(File::create(&a.out)?);
    writeln!(out, "record,freq_hz,value")?;
    let mut rows = 0;
    let mut emit = |index: u64, record: &Record, out: &mut BufWriter<File>| -> CliResult<()> {
        for (f, v) in freqs.iter().zip(&record.spectrum) {
            writeln!(out, "{index},{f},{v}")?;
            rows += 1;
        }
        Ok(())
    };
    match a.index {
        Some(i) => {
            let record = reader.read_record(i)?;
            emit(i, &record, &mut out)?;
        }
        None => {
            for (i, record) in reader.by_ref().enumerate() {
                emit(i as u64, &record?, &mut out)?;
            }
        }
    }
    out.flush()?;
    Ok(json!({ "command": "export-csv", "out": a.out, "rows": rows }))
}

fn cmd_bench(a: BenchArgs) -> CliResult<serde_json::Value> {
    if a.signals == 0 {
        return Err(usage("--signals must be at least 1"));
    }
    let params = GenParams::default().with_seed(a.seed);
    let grid = Arc::new(FrequencyGrid::standard());
    let signals = (0..a.signals as u64)
        .map(|i| synth::generate_shock(&params, i).map(|(s, _)| s))
        .collect::<crate::Result<Vec<_>>>()?;

    let t = Instant::now();
    for s in &signals {
        srs::srs_filterbank(s, &grid, srs::DEFAULT_PAD_SCALE)?;
    }
    let filterbank_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    srs::srs_analytical(&signals[0], &grid, srs::DEFAULT_PAD_SCALE)?;
    let analytical_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let (_, srs0) = synth::generate_pair(&params, 0, &grid, srs::DEFAULT_PAD_SCALE)?;
    let generate_s = t.elapsed().as_secs_f64();

    let fit = if a.fit {
        let t = Instant::now();
        let res = sds::fit_sds(&srs0, &FitConfig::default())?;
        Some(
            json!({ "wall_s": t.elapsed().as_secs_f64(), "loss": res.loss, "evaluations": res.evaluations }),
        )
    } else {
        None
    };
    Ok(json!({
        "command": "bench",
        "signals": a.signals,
        "n_samples": params.n_samples,
        "grid_points": grid.len(),
        "filterbank_ms_per_signal": 1e3 * filterbank_s / a.signals as f64,
        "filterbank_signals_per_s": a.signals as f64 / filterbank_s,
        "analytical_ms_per_signal": 1e3 * analytical_s,
        "generate_pair_ms": 1e3 * generate_s,
        "sds_fit": fit,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_flag_parsing() {
        let g = parse_grid("10, 1000,4", 0.05).unwrap();
        assert_eq!(g.count, 4);
        assert_eq!(g.damping_ratio, 0.05);
        assert!(parse_grid("10,1000", 0.03).is_err());
        assert!(parse_grid("a,b,c", 0.03).is_err());
    }

    #[test]
    fn help_lists_every_subcommand() {
        let top = help_text(None).unwrap();
        for name in [
            "gen",
            "srs",
            "sds-fit",
            "losses-eval",
            "eval",
            "aggregate",
            "export-csv",
            "bench",
        ] {
            assert!(top.contains(name), "{name}");
            assert!(help_text(Some(name)).is_some());
        }
        assert!(help_text(Some("nope")).is_none());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["shockspec"]), 1);
        assert_eq!(run(["shockspec", "gen", "--count", "x", "--out", "a"]), 1);
        assert_eq!(run(["shockspec", "--help"]), 0);
    }
}
