//! Forward shock response spectrum (SRS) operator.
//!
//! A bank of base-excited single-degree-of-freedom oscillators is driven by a
//! common acceleration record; the maximax SRS at each natural frequency is the
//! peak absolute acceleration of the oscillator mass over the zero-padded record.
//!
//! Two independent realizations are provided:
//!
//! * [`srs_filterbank`]: the ramp-invariant recursive filter per oscillator
//!   (fast path, used everywhere else in the crate);
//! * [`srs_analytical`]: trapezoidal convolution with the damped-sine impulse
//!   response followed by numerical differentiation (slow reference oracle).

mod analytical;
pub(crate) mod filter;

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use analytical::{convolve, convolve_direct, srs_analytical};
pub use filter::{sdof_response, srs_filterbank, RampInvariantSdof, SdofResponse};

/// Damping ratio used across the oscillator bank unless overridden.
pub const DEFAULT_DAMPING_RATIO: f64 = 0.03;
/// Padding scale factor `p`: the trailing zero pad is the half-cycle length divided by `p`.
pub const DEFAULT_PAD_SCALE: f64 = 3.0;
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 32768.0;
pub const DEFAULT_F_MIN_HZ: f64 = 10.0;
pub const DEFAULT_F_MAX_HZ: f64 = 4096.0;
pub const DEFAULT_GRID_POINTS: usize = 100;

/// Uniformly sampled acceleration record.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    sample_rate_hz: f64,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::invalid(format!(
                "sample rate must be positive and finite, got {sample_rate_hz}"
            )));
        }
        if samples.is_empty() {
            return Err(Error::invalid("signal must contain at least one sample"));
        }
        if let Some(idx) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(idx));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn zeros(len: usize, sample_rate_hz: f64) -> Result<Self> {
        Self::new(vec![0.0; len], sample_rate_hz)
    }

    pub fn from_f32(samples: &[f32], sample_rate_hz: f64) -> Result<Self> {
        Self::new(
            samples.iter().map(|&v| f64::from(v)).collect(),
            sample_rate_hz,
        )
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Elementwise product with a finite scalar.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|v| v * factor).collect(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }
}

/// Oscillator natural frequencies plus the shared damping ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    freqs_hz: Vec<f64>,
    damping_ratio: f64,
}

impl FrequencyGrid {
    pub fn new(freqs_hz: Vec<f64>, damping_ratio: f64) -> Result<Self> {
        check_damping(damping_ratio)?;
        if freqs_hz.is_empty() {
            return Err(Error::invalid("frequency grid must not be empty"));
        }
        if freqs_hz.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(Error::invalid(
                "grid frequencies must be finite and positive",
            ));
        }
        if freqs_hz.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "grid frequencies must be strictly increasing",
            ));
        }
        Ok(Self {
            freqs_hz,
            damping_ratio,
        })
    }

    /// `count` geometrically spaced frequencies from `f_min_hz` to `f_max_hz`, endpoints exact.
    pub fn log_spaced(
        f_min_hz: f64,
        f_max_hz: f64,
        count: usize,
        damping_ratio: f64,
    ) -> Result<Self> {
        if count < 2 {
            return Err(Error::invalid(format!(
                "grid needs at least 2 points, got {count}"
            )));
        }
        if !(f_min_hz.is_finite() && f_max_hz.is_finite() && f_min_hz > 0.0) {
            return Err(Error::invalid("grid endpoints must be finite and positive"));
        }
        if f_min_hz >= f_max_hz {
            return Err(Error::invalid(format!(
                "grid range is empty: f_min {f_min_hz} >= f_max {f_max_hz}"
            )));
        }
        let ratio = (f_max_hz / f_min_hz).ln();
        let last = (count - 1) as f64;
        let mut freqs: Vec<f64> = (0..count)
            .map(|k| f_min_hz * (ratio * k as f64 / last).exp())
            .collect();
        freqs[0] = f_min_hz;
        freqs[count - 1] = f_max_hz;
        Self::new(freqs, damping_ratio)
    }

    /// 100 log-spaced points over 10..4096 Hz with 3% damping.
    pub fn standard() -> Self {
        Self::log_spaced(
            DEFAULT_F_MIN_HZ,
            DEFAULT_F_MAX_HZ,
            DEFAULT_GRID_POINTS,
            DEFAULT_DAMPING_RATIO,
        )
        .expect("standard grid is valid")
    }

    pub fn freqs_hz(&self) -> &[f64] {
        &self.freqs_hz
    }

    pub fn damping_ratio(&self) -> f64 {
        self.damping_ratio
    }

    pub fn len(&self) -> usize {
        self.freqs_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs_hz.is_empty()
    }

    pub fn f_min(&self) -> f64 {
        self.freqs_hz[0]
    }

    pub fn f_max(&self) -> f64 {
        self.freqs_hz[self.freqs_hz.len() - 1]
    }

    pub(crate) fn check_nyquist(&self, sample_rate_hz: f64) -> Result<()> {
        let nyquist_hz = sample_rate_hz / 2.0;
        if self.f_max() > nyquist_hz {
            return Err(Error::Nyquist {
                freq_hz: self.f_max(),
                nyquist_hz,
            });
        }
        Ok(())
    }
}

/// `log_frequency_grid` with the default damping ratio.
pub fn log_frequency_grid(f_min_hz: f64, f_max_hz: f64, count: usize) -> Result<FrequencyGrid> {
    FrequencyGrid::log_spaced(f_min_hz, f_max_hz, count, DEFAULT_DAMPING_RATIO)
}

/// SRS magnitudes aligned to a shared grid.
#[derive(Debug, Clone)]
pub struct Spectrum {
    values: Vec<f64>,
    grid: Arc<FrequencyGrid>,
}

impl Spectrum {
    pub fn new(values: Vec<f64>, grid: Arc<FrequencyGrid>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid(
                "spectrum values must be finite and non-negative",
            ));
        }
        Ok(Self { values, grid })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn grid(&self) -> &Arc<FrequencyGrid> {
        &self.grid
    }

    pub fn freqs_hz(&self) -> &[f64] {
        self.grid.freqs_hz()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Multiply by a non-negative finite factor.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * factor).collect(),
            grid: Arc::clone(&self.grid),
        }
    }

    pub fn same_grid(&self, other: &Spectrum) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub(crate) fn ensure_same_grid(&self, other: &Spectrum) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

impl PartialEq for Spectrum {
    fn eq(&self, other: &Self) -> bool {
        self.same_grid(other) && self.values == other.values
    }
}

fn check_damping(damping_ratio: f64) -> Result<()> {
    if !(damping_ratio > 0.0 && damping_ratio < 1.0) {
        return Err(Error::Domain(format!(
            "damping ratio must lie in (0, 1), got {damping_ratio}"
        )));
    }
    Ok(())
}

/// Number of trailing zeros appended before filtering.
///
/// The full pad is half a damped period of the lowest oscillator,
/// `ceil(fs / (2 f_min sqrt(1 - zeta^2)))`, which is then divided by `scale_p`
/// and rounded up again.
pub fn padding_length(
    sample_rate_hz: f64,
    f_min_hz: f64,
    damping_ratio: f64,
    scale_p: f64,
) -> Result<usize> {
    check_damping(damping_ratio)?;
    if !(sample_rate_hz > 0.0 && f_min_hz > 0.0) || !sample_rate_hz.is_finite() {
        return Err(Error::invalid("sample rate and f_min must be positive"));
    }
    if !(scale_p >= 1.0 && scale_p.is_finite()) {
        return Err(Error::invalid(format!(
            "padding scale must be >= 1, got {scale_p}"
        )));
    }
    let full =
        (sample_rate_hz / (2.0 * f_min_hz * (1.0 - damping_ratio * damping_ratio).sqrt())).ceil();
    Ok((full / scale_p).ceil() as usize)
}

/// Worst-case percentage error of the sampled peak of an undamped sinusoidal
/// response at `f_max_hz`, `100 (1 - cos(pi f_max / fs))`.
pub fn sampling_error_bound(sample_rate_hz: f64, f_max_hz: f64) -> Result<f64> {
    if !(f_max_hz > 0.0 && sample_rate_hz > 0.0) {
        return Err(Error::invalid("sample rate and f_max must be positive"));
    }
    let oversampling = sample_rate_hz / f_max_hz;
    Ok(100.0 * (1.0 - (PI / oversampling).cos()))
}

pub(crate) fn validate_inputs(
    signal: &Signal,
    grid: &FrequencyGrid,
    scale_p: f64,
) -> Result<usize> {
    grid.check_nyquist(signal.sample_rate_hz())?;
    padding_length(
        signal.sample_rate_hz(),
        grid.f_min(),
        grid.damping_ratio(),
        scale_p,
    )
}
