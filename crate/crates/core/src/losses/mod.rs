//! Reference implementations of the training-loss terms.
//!
//! All functions are plain numeric evaluations (no gradients); the JSON
//! record produced by [`evaluate_losses`] is the parity fixture for other
//! implementations of the same terms.

mod welch;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use welch::{hann_periodic, welch_psd, WelchConfig};

use crate::error::{Error, Result};
use crate::par;
use crate::srs::filter::argmax_abs;
use crate::srs::{
    srs_filterbank, validate_inputs, FrequencyGrid, RampInvariantSdof, Signal, Spectrum,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogBase {
    Natural,
    Ten,
}

impl LogBase {
    fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Ten => x.log10(),
        }
    }
}

/// Log settings for MSLE: `log(x + eps)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogConfig {
    pub base: LogBase,
    pub eps: f64,
}

impl Default for LogConfig {
    fn default() -> Self {
        Self {
            base: LogBase::Natural,
            eps: 1e-12,
        }
    }
}

/// Mean squared difference of `log(x + eps)`.
pub fn msle(target: &[f64], pred: &[f64], log: &LogConfig) -> Result<f64> {
    if target.len() != pred.len() {
        return Err(Error::LengthMismatch {
            expected: target.len(),
            found: pred.len(),
        });
    }
    if target.is_empty() {
        return Err(Error::invalid("msle of empty sequences"));
    }
    let sum: f64 = target
        .iter()
        .zip(pred)
        .map(|(t, p)| {
            let d = log.base.log(p + log.eps) - log.base.log(t + log.eps);
            d * d
        })
        .sum();
    Ok(sum / target.len() as f64)
}

fn check_pair(target: &Signal, pred: &Signal) -> Result<()> {
    if target.len() != pred.len() {
        return Err(Error::LengthMismatch {
            expected: target.len(),
            found: pred.len(),
        });
    }
    if target.sample_rate_hz() != pred.sample_rate_hz() {
        return Err(Error::invalid("signals have different sample rates"));
    }
    Ok(())
}

/// Root-mean-square error between two signals.
pub fn loss_ts(target: &Signal, pred: &Signal) -> Result<f64> {
    check_pair(target, pred)?;
    let sum: f64 = target
        .samples()
        .iter()
        .zip(pred.samples())
        .map(|(t, p)| (p - t) * (p - t))
        .sum();
    Ok((sum / target.len() as f64).sqrt())
}

pub fn loss_srs(target: &Spectrum, pred: &Spectrum, log: &LogConfig) -> Result<f64> {
    target.ensure_same_grid(pred)?;
    msle(target.values(), pred.values(), log)
}

/// MSLE between Welch PSD estimates.
pub fn loss_psd(
    target: &Signal,
    pred: &Signal,
    welch: &WelchConfig,
    log: &LogConfig,
) -> Result<f64> {
    check_pair(target, pred)?;
    let fs = target.sample_rate_hz();
    let pt = welch_psd(target.samples(), fs, welch)?;
    let pp = welch_psd(pred.samples(), fs, welch)?;
    msle(&pt, &pp, log)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShapeConfig {
    /// Gaussian width in natural periods of each oscillator; 0 gives a delta weight.
    pub sigma_periods: f64,
    pub pad_scale: f64,
}

impl Default for ShapeConfig {
    fn default() -> Self {
        Self {
            sigma_periods: 1.0,
            pad_scale: crate::srs::DEFAULT_PAD_SCALE,
        }
    }
}

/// Gaussian-weighted mean squared difference of peak-aligned oscillator
/// responses, one value per grid frequency.
///
/// Each padded response is rotated circularly so that its first
/// maximum-magnitude sample lands at index `L / 2`; the weight is a Gaussian
/// of width `sigma_periods * fs / f` samples centred there, normalized to unit
/// sum.
pub fn shape_terms(
    target: &Signal,
    pred: &Signal,
    grid: &Arc<FrequencyGrid>,
    config: &ShapeConfig,
) -> Result<Vec<f64>> {
    check_pair(target, pred)?;
    if !(config.sigma_periods >= 0.0 && config.sigma_periods.is_finite()) {
        return Err(Error::invalid("sigma_periods must be finite and >= 0"));
    }
    let pad = validate_inputs(target, grid, config.pad_scale)?;
    validate_inputs(pred, grid, config.pad_scale)?;
    let fs = target.sample_rate_hz();
    let zeta = grid.damping_ratio();
    Ok(par::map_slice(grid.freqs_hz(), |&f| {
        let filter = RampInvariantSdof::new(f, zeta, fs);
        let a = filter.response(target.samples(), pad);
        let b = filter.response(pred.samples(), pad);
        aligned_weighted_mse(&a, &b, config.sigma_periods * fs / f)
    }))
}

fn aligned_weighted_mse(a: &[f64], b: &[f64], sigma: f64) -> f64 {
    let len = a.len();
    let center = len / 2;
    let (pa, pb) = (argmax_abs(a), argmax_abs(b));
    let at = |x: &[f64], peak: usize, n: usize| x[(n + len + peak - center) % len];
    if sigma == 0.0 {
        let d = a[pa] - b[pb];
        return d * d;
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for n in 0..len {
        let u = (n as f64 - center as f64) / sigma;
        let w = (-0.5 * u * u).exp();
        if w == 0.0 {
            continue;
        }
        let d = at(a, pa, n) - at(b, pb, n);
        num += w * d * d;
        den += w;
    }
    num / den
}

pub fn loss_shape(
    target: &Signal,
    pred: &Signal,
    grid: &Arc<FrequencyGrid>,
    config: &ShapeConfig,
) -> Result<f64> {
    let terms = shape_terms(target, pred, grid, config)?;
    Ok(terms.iter().sum::<f64>() / terms.len() as f64)
}

/// Diagonal-Gaussian posterior parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentStats {
    pub mu: Vec<f64>,
    pub log_var: Vec<f64>,
}

impl LatentStats {
    pub fn new(mu: Vec<f64>, log_var: Vec<f64>) -> Result<Self> {
        let s = Self { mu, log_var };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mu.len() != self.log_var.len() {
            return Err(Error::LengthMismatch {
                expected: self.mu.len(),
                found: self.log_var.len(),
            });
        }
        if let Some(i) = self
            .mu
            .iter()
            .chain(&self.log_var)
            .position(|v| !v.is_finite())
        {
            return Err(Error::NonFinite(i % self.mu.len().max(1)));
        }
        Ok(())
    }
}

/// KL divergence from `N(mu, diag(exp(log_var)))` to the standard normal.
pub fn kl_divergence(stats: &LatentStats) -> f64 {
    0.5 * stats
        .mu
        .iter()
        .zip(&stats.log_var)
        .map(|(m, lv)| m * m + lv.exp() - lv - 1.0)
        .sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossParts {
    pub shape: f64,
    pub ts: f64,
    pub psd: f64,
    pub srs: f64,
    pub kl: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub w_shape: f64,
    pub w_ts: f64,
    pub w_psd: f64,
    pub w_srs: f64,
    pub w_kl: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            w_shape: 0.282,
            w_ts: 0.062,
            w_psd: 0.0147,
            w_srs: 0.237,
            w_kl: 0.404,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let w = [self.w_shape, self.w_ts, self.w_psd, self.w_srs, self.w_kl];
        if w.iter().any(|v| !(*v >= 0.0 && v.is_finite())) || !w.iter().any(|v| *v > 0.0) {
            return Err(Error::invalid(
                "loss weights must be finite, >= 0, and not all zero",
            ));
        }
        Ok(())
    }
}

pub fn loss_total(parts: &LossParts, weights: &LossWeights) -> f64 {
    weights.w_shape * parts.shape
        + weights.w_ts * parts.ts
        + weights.w_psd * parts.psd
        + weights.w_srs * parts.srs
        + weights.w_kl * parts.kl
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct LossConfig {
    pub weights: LossWeights,
    pub srs_log: LogConfig,
    pub psd_log: LogConfig,
    pub welch: WelchConfig,
    pub shape: ShapeConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub parts: LossParts,
    pub total: f64,
    pub config: LossConfig,
}

/// All five terms and the weighted total for one (target, prediction) pair.
/// The KL part is zero when no latent statistics are supplied.
pub fn evaluate_losses(
    target: &Signal,
    pred: &Signal,
    grid: &Arc<FrequencyGrid>,
    latent: Option<&LatentStats>,
    config: &LossConfig,
) -> Result<LossReport> {
    config.weights.validate()?;
    check_pair(target, pred)?;
    let pad_scale = config.shape.pad_scale;
    let st = srs_filterbank(target, grid, pad_scale)?;
    let sp = srs_filterbank(pred, grid, pad_scale)?;
    if let Some(l) = latent {
        l.validate()?;
    }
    let parts = LossParts {
        shape: loss_shape(target, pred, grid, &config.shape)?,
        ts: loss_ts(target, pred)?,
        psd: loss_psd(target, pred, &config.welch, &config.psd_log)?,
        srs: loss_srs(&st, &sp, &config.srs_log)?,
        kl: latent.map_or(0.0, kl_divergence),
    };
    Ok(LossReport {
        parts,
        total: loss_total(&parts, &config.weights),
        config: *config,
    })
}
