//! Evaluation metrics and spectrum aggregation.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dataset::ShockDataset;
use crate::error::{Error, Result};
use crate::par;
use crate::srs::{srs_filterbank, FrequencyGrid, Spectrum};
use crate::LOG_FLOOR;

pub use crate::sds::rmsle_loss as rmsle;

/// Signed per-frequency error `20 log10(pred / target)` in dB.
pub fn db_error(target: &Spectrum, pred: &Spectrum) -> Result<Vec<f64>> {
    target.ensure_same_grid(pred)?;
    Ok(target
        .values()
        .iter()
        .zip(pred.values())
        .map(|(t, p)| 20.0 * (p.max(LOG_FLOOR).log10() - t.max(LOG_FLOOR).log10()))
        .collect())
}

/// Fraction of pairs where `a` is strictly lower than `b`.
pub fn win_rate(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::invalid("win rate of empty sequences"));
    }
    let wins = a.iter().zip(b).filter(|(x, y)| x < y).count();
    Ok(wins as f64 / a.len() as f64)
}

/// Quantile of sorted data by linear interpolation between order statistics
/// (position `(n - 1) q`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Descriptive statistics; `std` uses population (n) normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub q025: f64,
    pub q975: f64,
}

impl Summary {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("summary of an empty sequence"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Ok(Self {
            count: values.len(),
            mean,
            median: quantile_sorted(&sorted, 0.5),
            std: var.sqrt(),
            min: sorted[0],
            max: sorted[sorted.len() - 1],
            q025: quantile_sorted(&sorted, 0.025),
            q975: quantile_sorted(&sorted, 0.975),
        })
    }
}

/// Spectra of `J` realizations on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEnsemble {
    spectra: Vec<Spectrum>,
}

impl SpectrumEnsemble {
    pub fn new(spectra: Vec<Spectrum>) -> Result<Self> {
        let first = spectra
            .first()
            .ok_or_else(|| Error::invalid("an ensemble needs at least one spectrum"))?;
        for s in &spectra[1..] {
            first.ensure_same_grid(s)?;
        }
        Ok(Self { spectra })
    }

    pub fn spectra(&self) -> &[Spectrum] {
        &self.spectra
    }

    pub fn len(&self) -> usize {
        self.spectra.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spectra.is_empty()
    }

    pub fn grid(&self) -> &Arc<FrequencyGrid> {
        self.spectra[0].grid()
    }

    fn column_map(&self, f: impl Fn(&mut dyn Iterator<Item = f64>) -> f64) -> Result<Spectrum> {
        let values = (0..self.grid().len())
            .map(|i| f(&mut self.spectra.iter().map(|s| s.values()[i])))
            .collect();
        Spectrum::new(values, Arc::clone(self.grid()))
    }
}

/// Per-frequency arithmetic mean.
pub fn aggregate_mean(ensemble: &SpectrumEnsemble) -> Result<Spectrum> {
    let j = ensemble.len() as f64;
    ensemble.column_map(|col| col.sum::<f64>() / j)
}

/// Per-frequency `10^(mean(log10 s) + k std(log10 s))`, population std.
pub fn aggregate_upper_tol(ensemble: &SpectrumEnsemble, k_factor: f64) -> Result<Spectrum> {
    if ensemble.len() < 2 {
        return Err(Error::invalid("upper tolerance needs at least two spectra"));
    }
    if !(k_factor >= 0.0 && k_factor.is_finite()) {
        return Err(Error::invalid("k_factor must be finite and >= 0"));
    }
    let j = ensemble.len() as f64;
    ensemble.column_map(|col| {
        let logs: Vec<f64> = col.map(|v| v.max(LOG_FLOOR).log10()).collect();
        let mean = logs.iter().sum::<f64>() / j;
        let var = logs.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / j;
        10f64.powf(mean + k_factor * var.sqrt())
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub count: usize,
    pub n_frequencies: usize,
    pub per_sample_rmsle: Vec<f64>,
    pub summary: Summary,
    pub baseline_rmsle: Option<Vec<f64>>,
    pub baseline_summary: Option<Summary>,
    /// Fraction of records where the candidates beat the baseline.
    pub win_rate_vs_baseline: Option<f64>,
    /// Sample-major: record `j`, frequency `i` at `j * n_frequencies + i`.
    pub db_errors: Vec<f64>,
    pub db_within_1: f64,
    pub db_within_3: f64,
    pub pad_scale: f64,
}

impl EvalReport {
    pub fn from_errors(
        per_sample_rmsle: Vec<f64>,
        db_errors: Vec<f64>,
        n_frequencies: usize,
        baseline_rmsle: Option<Vec<f64>>,
        pad_scale: f64,
    ) -> Result<Self> {
        let within = |tol: f64| {
            db_errors.iter().filter(|d| d.abs() <= tol).count() as f64 / db_errors.len() as f64
        };
        let (baseline_summary, win) = match &baseline_rmsle {
            Some(b) => (
                Some(Summary::from_values(b)?),
                Some(win_rate(&per_sample_rmsle, b)?),
            ),
            None => (None, None),
        };
        Ok(Self {
            count: per_sample_rmsle.len(),
            n_frequencies,
            summary: Summary::from_values(&per_sample_rmsle)?,
            db_within_1: within(1.0),
            db_within_3: within(3.0),
            per_sample_rmsle,
            baseline_rmsle,
            baseline_summary,
            win_rate_vs_baseline: win,
            db_errors,
            pad_scale,
        })
    }
}

fn check_aligned(targets: &ShockDataset, candidates: &ShockDataset) -> Result<()> {
    if targets.len() != candidates.len() {
        return Err(Error::CountMismatch(format!(
            "{} targets but {} candidates",
            targets.len(),
            candidates.len()
        )));
    }
    if targets.manifest.grid != candidates.manifest.grid {
        return Err(Error::GridMismatch);
    }
    if targets.manifest.sample_rate_hz != candidates.manifest.sample_rate_hz {
        return Err(Error::invalid("target and candidate sample rates differ"));
    }
    Ok(())
}

fn dataset_spectra(
    data: &ShockDataset,
    grid: &Arc<FrequencyGrid>,
    pad_scale: f64,
) -> Result<Vec<Spectrum>> {
    par::map_range(data.len(), |j| {
        Ok(srs_filterbank(&data.signal(j)?, grid, pad_scale)?.scaled(data.scale(j)))
    })
    .into_iter()
    .collect()
}

/// Score candidate signals against hold-out targets.
///
/// The SRS of every target and candidate signal is computed on `grid`;
/// stored spectra are not used. Max-normalized datasets are compared at their
/// original scale. With `baseline`, `win_rate_vs_baseline` is the
/// fraction of records where `candidates` has strictly lower RMSLE.
pub fn evaluate_holdout(
    targets: &ShockDataset,
    candidates: &ShockDataset,
    baseline: Option<&ShockDataset>,
    grid: &Arc<FrequencyGrid>,
    pad_scale: f64,
) -> Result<EvalReport> {
    check_aligned(targets, candidates)?;
    if let Some(b) = baseline {
        check_aligned(targets, b)?;
    }
    if targets.is_empty() {
        return Err(Error::invalid("no records to evaluate"));
    }
    let target_spectra = dataset_spectra(targets, grid, pad_scale)?;
    let score = |data: &ShockDataset| -> Result<(Vec<f64>, Vec<f64>)> {
        let spectra = dataset_spectra(data, grid, pad_scale)?;
        let mut rmsles = Vec::with_capacity(spectra.len());
        let mut dbs = Vec::with_capacity(spectra.len() * grid.len());
        for (t, c) in target_spectra.iter().zip(&spectra) {
            rmsles.push(rmsle(t, c)?);
            dbs.extend(db_error(t, c)?);
        }
        Ok((rmsles, dbs))
    };
    let (per_sample, dbs) = score(candidates)?;
    let baseline_rmsle = baseline.map(|b| score(b).map(|(r, _)| r)).transpose()?;
    EvalReport::from_errors(per_sample, dbs, grid.len(), baseline_rmsle, pad_scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Fixed-width histogram with bins aligned to multiples of `bin_width`.
pub fn histogram(values: &[f64], bin_width: f64) -> Result<Vec<HistogramBin>> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::invalid("bin width must be positive"));
    }
    if values.is_empty() {
        return Ok(Vec::new());
    }
    let idx = |v: f64| (v / bin_width).floor() as i64;
    let lo = values.iter().map(|&v| idx(v)).min().expect("non-empty");
    let hi = values.iter().map(|&v| idx(v)).max().expect("non-empty");
    let mut counts = vec![0usize; (hi - lo + 1) as usize];
    for &v in values {
        counts[(idx(v) - lo) as usize] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| {
            let b = lo + k as i64;
            HistogramBin {
                lo: b as f64 * bin_width,
                hi: (b + 1) as f64 * bin_width,
                count,
            }
        })
        .collect())
}

/// Empirical CDF points `(x_(k), k / n)` for sorted data.
pub fn ecdf(values: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .into_iter()
        .enumerate()
        .map(|(k, x)| (x, (k + 1) as f64 / n))
        .collect()
}

pub fn write_histogram_csv(out: &mut impl Write, bins: &[HistogramBin]) -> Result<()> {
    writeln!(out, "bin_lo,bin_hi,count")?;
    for b in bins {
        writeln!(out, "{},{},{}", b.lo, b.hi, b.count)?;
    }
    Ok(())
}

pub fn write_ecdf_csv(out: &mut impl Write, points: &[(f64, f64)]) -> Result<()> {
    writeln!(out, "value,cdf")?;
    for (x, p) in points {
        writeln!(out, "{x},{p}")?;
    }
    Ok(())
}
