use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Welch estimator settings: periodic Hann window, no detrending,
/// one-sided density in units²/Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WelchConfig {
    pub segment_len: usize,
    pub overlap: usize,
}

impl Default for WelchConfig {
    fn default() -> Self {
        Self {
            segment_len: 1024,
            overlap: 512,
        }
    }
}

impl WelchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.segment_len < 2 || self.overlap >= self.segment_len {
            return Err(Error::invalid(
                "Welch segment_len must be >= 2 and overlap < segment_len",
            ));
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        self.segment_len / 2 + 1
    }
}

pub fn hann_periodic(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
        .collect()
}

/// Averaged-periodogram PSD; returns `segment_len / 2 + 1` bins from DC to Nyquist.
pub fn welch_psd(samples: &[f64], sample_rate_hz: f64, config: &WelchConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let seg = config.segment_len;
    if samples.len() < seg {
        return Err(Error::invalid(format!(
            "signal of {} samples is shorter than one Welch segment ({seg})",
            samples.len()
        )));
    }
    let step = seg - config.overlap;
    let n_segments = (samples.len() - seg) / step + 1;
    let window = hann_periodic(seg);
    let scale = 1.0 / (sample_rate_hz * window.iter().map(|w| w * w).sum::<f64>());
    let fft = FftPlanner::new().plan_fft_forward(seg);

    let mut psd = vec![0.0; config.n_bins()];
    let mut buf = vec![Complex::new(0.0, 0.0); seg];
    for s in 0..n_segments {
        let chunk = &samples[s * step..s * step + seg];
        for ((b, x), w) in buf.iter_mut().zip(chunk).zip(&window) {
            *b = Complex::new(x * w, 0.0);
        }
        fft.process(&mut buf);
        for (p, b) in psd.iter_mut().zip(&buf) {
            *p += b.norm_sqr();
        }
    }
    let last = psd.len() - 1;
    for (k, p) in psd.iter_mut().enumerate() {
        let one_sided = if k == 0 || (k == last && seg.is_multiple_of(2)) {
            1.0
        } else {
            2.0
        };
        *p *= one_sided * scale / n_segments as f64;
    }
    Ok(psd)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parseval_for_white_sequence() {
        // Integrated one-sided density equals the mean power of the record.
        let fs = 1000.0;
        let x: Vec<f64> = (0..8192)
            .map(|n| ((n * 7919 % 1013) as f64 / 506.0) - 1.0)
            .collect();
        let mean_power = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        let cfg = WelchConfig::default();
        let psd = welch_psd(&x, fs, &cfg).unwrap();
        let df = fs / cfg.segment_len as f64;
        let integrated: f64 = psd.iter().sum::<f64>() * df;
        assert!(
            (integrated / mean_power - 1.0).abs() < 0.05,
            "{integrated} vs {mean_power}"
        );
    }

    #[test]
    fn sine_power_lands_in_its_bin() {
        let fs = 1024.0;
        let x: Vec<f64> = (0..4096)
            .map(|n| (2.0 * PI * 128.0 * n as f64 / fs).sin())
            .collect();
        let psd = welch_psd(&x, fs, &WelchConfig::default()).unwrap();
        let peak = psd
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(peak, 128);
    }

    #[test]
    fn short_signal_is_rejected() {
        assert!(welch_psd(&[0.0; 100], 1.0, &WelchConfig::default()).is_err());
        let bad = WelchConfig {
            segment_len: 8,
            overlap: 8,
        };
        assert!(welch_psd(&[0.0; 100], 1.0, &bad).is_err());
    }

    #[test]
    fn window_is_periodic() {
        let w = hann_periodic(4);
        assert_eq!(w[0], 0.0);
        assert!((w[2] - 1.0).abs() < 1e-15);
        assert!((w[1] - 0.5).abs() < 1e-15);
    }
}
