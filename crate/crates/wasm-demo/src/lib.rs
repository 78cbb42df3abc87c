//! Browser bindings for three shockspec operations: the SRS of a half-sine
//! pulse, a synthetic shock with its SRS, and a small SDS fit.
//!
//! Each export has a plain Rust counterpart (`*_plot`) so the numerics can be
//! tested natively.

use std::sync::Arc;

use shockspec::sds::{fit_sds, model_spectrum, FitConfig};
use shockspec::srs::{srs_filterbank, FrequencyGrid, Signal, Spectrum};
use shockspec::synth::{generate_shock, GenParams};
use wasm_bindgen::prelude::*;

const FS: f64 = 32768.0;
const N_SAMPLES: usize = 9000;

/// A time history together with its spectrum.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct SrsPlot {
    sample_rate_hz: f64,
    samples: Vec<f64>,
    freqs_hz: Vec<f64>,
    values: Vec<f64>,
}

#[wasm_bindgen]
impl SrsPlot {
    #[wasm_bindgen(getter)]
    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    #[wasm_bindgen(getter)]
    pub fn samples(&self) -> Vec<f64> {
        self.samples.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn freqs_hz(&self) -> Vec<f64> {
        self.freqs_hz.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }
}

impl SrsPlot {
    fn new(signal: &Signal, spectrum: &Spectrum) -> Self {
        Self {
            sample_rate_hz: signal.sample_rate_hz(),
            samples: signal.samples().to_vec(),
            freqs_hz: spectrum.freqs_hz().to_vec(),
            values: spectrum.values().to_vec(),
        }
    }
}

/// Target spectrum, fitted spectrum and the rendered model.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct FitPlot {
    target: SrsPlot,
    fitted: SrsPlot,
    loss: f64,
    evaluations: usize,
}

#[wasm_bindgen]
impl FitPlot {
    #[wasm_bindgen(getter)]
    pub fn target(&self) -> SrsPlot {
        self.target.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn fitted(&self) -> SrsPlot {
        self.fitted.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn loss(&self) -> f64 {
        self.loss
    }

    #[wasm_bindgen(getter)]
    pub fn evaluations(&self) -> usize {
        self.evaluations
    }
}

fn grid(zeta: f64) -> shockspec::Result<Arc<FrequencyGrid>> {
    Ok(Arc::new(FrequencyGrid::log_spaced(
        10.0, 4096.0, 100, zeta,
    )?))
}

pub fn half_sine_plot(
    duration_ms: f64,
    amplitude: f64,
    zeta: f64,
    pad_scale: f64,
) -> shockspec::Result<SrsPlot> {
    if !(duration_ms > 0.0 && duration_ms * 1e-3 * FS < N_SAMPLES as f64) {
        return Err(shockspec::Error::InvalidArgument(format!(
            "pulse duration must be in (0, {:.0}) ms",
            1e3 * N_SAMPLES as f64 / FS
        )));
    }
    let duration = duration_ms * 1e-3;
    let samples = (0..N_SAMPLES)
        .map(|n| {
            let t = n as f64 / FS;
            if t < duration {
                amplitude * (std::f64::consts::PI * t / duration).sin()
            } else {
                0.0
            }
        })
        .collect();
    let signal = Signal::new(samples, FS)?;
    let spectrum = srs_filterbank(&signal, &grid(zeta)?, pad_scale)?;
    Ok(SrsPlot::new(&signal, &spectrum))
}

pub fn synthetic_shock_plot(seed: u64, stream: u64, pad_scale: f64) -> shockspec::Result<SrsPlot> {
    let (signal, _) = generate_shock(&GenParams::default().with_seed(seed), stream)?;
    let spectrum = srs_filterbank(&signal, &grid(0.03)?, pad_scale)?;
    Ok(SrsPlot::new(&signal, &spectrum))
}

pub fn sds_fit_plot(
    seed: u64,
    stream: u64,
    atoms: usize,
    max_evals: usize,
) -> shockspec::Result<FitPlot> {
    let target = synthetic_shock_plot(seed, stream, 3.0)?;
    let g = grid(0.03)?;
    let target_spectrum = Spectrum::new(target.values.clone(), Arc::clone(&g))?;
    let config = FitConfig {
        m_atoms: atoms,
        restarts: 1,
        max_evals,
        ..Default::default()
    };
    let fit = fit_sds(&target_spectrum, &config)?;
    let rendered = fit.model.render()?;
    let fitted = model_spectrum(&fit.model, &g, config.pad_scale)?;
    Ok(FitPlot {
        target,
        fitted: SrsPlot::new(&rendered, &fitted),
        loss: fit.loss,
        evaluations: fit.evaluations,
    })
}

fn js_err(e: shockspec::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// SRS of a half-sine pulse of `duration_ms` and peak `amplitude`.
#[wasm_bindgen]
pub fn half_sine_srs(
    duration_ms: f64,
    amplitude: f64,
    zeta: f64,
    pad_scale: f64,
) -> Result<SrsPlot, JsError> {
    half_sine_plot(duration_ms, amplitude, zeta, pad_scale).map_err(js_err)
}

#[wasm_bindgen]
pub fn synthetic_shock(seed: u64, stream: u64, pad_scale: f64) -> Result<SrsPlot, JsError> {
    synthetic_shock_plot(seed, stream, pad_scale).map_err(js_err)
}

#[wasm_bindgen]
pub fn sds_fit(seed: u64, stream: u64, atoms: usize, max_evals: usize) -> Result<FitPlot, JsError> {
    sds_fit_plot(seed, stream, atoms, max_evals).map_err(js_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_sine_plot_shape() {
        let p = half_sine_plot(11.0, 2.0, 0.03, 3.0).unwrap();
        assert_eq!(p.samples.len(), N_SAMPLES);
        assert_eq!(p.freqs_hz.len(), 100);
        let peak = p.values.iter().cloned().fold(0.0, f64::max);
        assert!(peak > 3.0 && peak < 3.6, "{peak}");
        assert!((p.values[99] / 2.0 - 1.0).abs() < 0.05);
    }

    #[test]
    fn half_sine_rejects_bad_durations() {
        assert!(half_sine_plot(0.0, 1.0, 0.03, 3.0).is_err());
        assert!(half_sine_plot(1000.0, 1.0, 0.03, 3.0).is_err());
        assert!(half_sine_plot(5.0, 1.0, 0.0, 3.0).is_err());
    }

    #[test]
    fn synthetic_shock_matches_the_library() {
        let p = synthetic_shock_plot(4, 2, 3.0).unwrap();
        let (s, _) = generate_shock(&GenParams::default().with_seed(4), 2).unwrap();
        assert_eq!(p.samples, s.samples());
        let spec = srs_filterbank(&s, &Arc::new(FrequencyGrid::standard()), 3.0).unwrap();
        assert_eq!(p.values, spec.values());
    }

    #[test]
    fn small_fit_runs() {
        let f = sds_fit_plot(1, 0, 3, 60).unwrap();
        assert!(f.loss.is_finite() && f.loss > 0.0);
        assert!(f.evaluations <= 60);
        assert_eq!(f.fitted.values.len(), 100);
        assert_eq!(f.fitted.samples.len(), N_SAMPLES);
    }
}
