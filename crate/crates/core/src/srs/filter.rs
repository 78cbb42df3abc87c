use std::sync::Arc;

use super::{validate_inputs, FrequencyGrid, Signal, Spectrum};
use crate::error::Result;
use crate::par;

/// Ramp-invariant second-order recursion for the absolute acceleration of a
/// base-excited oscillator (Smallwood's formulation, as standardized in ISO 18431-4).
///
/// The input is assumed piecewise linear between samples and at rest before
/// the first one, so the recursion is exact for that interpolant. The state is
/// carried as `y[n-1]` and `d[n-1] = y[n-1] - y[n-2]`:
///
/// `d[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2] - leak y[n-1] + decay2 d[n-1]`,
/// `y[n] = y[n-1] + d[n]`,
///
/// which keeps rounding error small when the poles sit close to z = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampInvariantSdof {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    /// `1 - 2 e cos(wd dt) + e^2`, equal to `b0 + b1 + b2`.
    pub leak: f64,
    /// `e^2` with `e = exp(-zeta w dt)`.
    pub decay2: f64,
}

/// `1 - sin(k) / k`, accurate for small `k`.
fn one_minus_sinc(k: f64) -> f64 {
    if k.abs() < 0.1 {
        let k2 = k * k;
        k2 / 6.0 * (1.0 - k2 / 20.0 * (1.0 - k2 / 42.0 * (1.0 - k2 / 72.0 * (1.0 - k2 / 110.0))))
    } else {
        1.0 - k.sin() / k
    }
}

impl RampInvariantSdof {
    pub fn new(natural_freq_hz: f64, damping_ratio: f64, sample_rate_hz: f64) -> Self {
        let omega = 2.0 * std::f64::consts::PI * natural_freq_hz;
        let omega_d = omega * (1.0 - damping_ratio * damping_ratio).sqrt();
        let dt = 1.0 / sample_rate_hz;
        let em1 = (-damping_ratio * omega * dt).exp_m1();
        let e = 1.0 + em1;
        let one_minus_e = -em1;
        let k = omega_d * dt;
        let oms = one_minus_sinc(k);
        let half_chord = 2.0 * (0.5 * k).sin().powi(2);
        Self {
            b0: one_minus_e + e * oms,
            b1: 2.0 * e * (half_chord - oms),
            b2: e * (oms - one_minus_e),
            leak: one_minus_e * one_minus_e + 2.0 * e * half_chord,
            decay2: e * e,
        }
    }

    /// Maximum of |y| over the input followed by `pad` zeros, with its index.
    pub fn peak(&self, input: &[f64], pad: usize) -> (f64, usize) {
        let (mut x1, mut x2, mut y1, mut d1) = (0.0, 0.0, 0.0, 0.0);
        let mut best = 0.0f64;
        let mut best_idx = 0usize;
        for (n, &x0) in input
            .iter()
            .chain(std::iter::repeat_n(&0.0, pad))
            .enumerate()
        {
            let d0 = self.b0 * x0 + self.b1 * x1 + self.b2 * x2 - self.leak * y1 + self.decay2 * d1;
            let y0 = y1 + d0;
            let mag = y0.abs();
            if mag > best {
                best = mag;
                best_idx = n;
            }
            x2 = x1;
            x1 = x0;
            d1 = d0;
            y1 = y0;
        }
        (best, best_idx)
    }

    /// Full response over the input followed by `pad` zeros.
    pub fn response(&self, input: &[f64], pad: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(input.len() + pad);
        let (mut x1, mut x2, mut y1, mut d1) = (0.0, 0.0, 0.0, 0.0);
        for &x0 in input.iter().chain(std::iter::repeat_n(&0.0, pad)) {
            let d0 = self.b0 * x0 + self.b1 * x1 + self.b2 * x2 - self.leak * y1 + self.decay2 * d1;
            let y0 = y1 + d0;
            out.push(y0);
            x2 = x1;
            x1 = x0;
            d1 = d0;
            y1 = y0;
        }
        out
    }
}

/// Absolute acceleration of one oscillator over the padded record.
#[derive(Debug, Clone, PartialEq)]
pub struct SdofResponse {
    pub natural_freq_hz: f64,
    pub absolute_accel: Vec<f64>,
    /// First index attaining the maximum of |absolute_accel|.
    pub peak_index: usize,
}

impl SdofResponse {
    pub fn peak_value(&self) -> f64 {
        self.absolute_accel[self.peak_index]
    }
}

pub fn sdof_response(
    signal: &Signal,
    natural_freq_hz: f64,
    damping_ratio: f64,
    pad: usize,
) -> SdofResponse {
    let filter = RampInvariantSdof::new(natural_freq_hz, damping_ratio, signal.sample_rate_hz());
    let absolute_accel = filter.response(signal.samples(), pad);
    let peak_index = argmax_abs(&absolute_accel);
    SdofResponse {
        natural_freq_hz,
        absolute_accel,
        peak_index,
    }
}

pub(crate) fn argmax_abs(values: &[f64]) -> usize {
    let mut best = 0.0f64;
    let mut idx = 0;
    for (i, v) in values.iter().enumerate() {
        if v.abs() > best {
            best = v.abs();
            idx = i;
        }
    }
    idx
}

/// Peak magnitudes of several filters driven by the same input.
///
/// Filters run several at a time in one pass over the input; each lane
/// performs exactly the arithmetic of [`RampInvariantSdof::peak`], so results
/// are bit-identical.
pub(crate) fn peak_values(filters: &[RampInvariantSdof], input: &[f64], pad: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(filters.len());
    let mut rest = filters;
    while !rest.is_empty() {
        let taken = match rest.len() {
            n if n >= 8 => push_lanes::<8>(rest, input, pad, &mut out),
            n if n >= 4 => push_lanes::<4>(rest, input, pad, &mut out),
            _ => {
                out.extend(rest.iter().map(|f| f.peak(input, pad).0));
                rest.len()
            }
        };
        rest = &rest[taken..];
    }
    out
}

const LANES: usize = 8;

fn push_lanes<const N: usize>(
    filters: &[RampInvariantSdof],
    input: &[f64],
    pad: usize,
    out: &mut Vec<f64>,
) -> usize {
    let mut b0 = [0.0; N];
    let mut b1 = [0.0; N];
    let mut b2 = [0.0; N];
    let mut leak = [0.0; N];
    let mut decay2 = [0.0; N];
    for (k, f) in filters[..N].iter().enumerate() {
        b0[k] = f.b0;
        b1[k] = f.b1;
        b2[k] = f.b2;
        leak[k] = f.leak;
        decay2[k] = f.decay2;
    }
    let (mut x1, mut x2) = (0.0, 0.0);
    let mut y1 = [0.0; N];
    let mut d1 = [0.0; N];
    let mut best = [0.0f64; N];
    for &x0 in input.iter().chain(std::iter::repeat_n(&0.0, pad)) {
        for k in 0..N {
            let d0 = b0[k] * x0 + b1[k] * x1 + b2[k] * x2 - leak[k] * y1[k] + decay2[k] * d1[k];
            let y0 = y1[k] + d0;
            best[k] = best[k].max(y0.abs());
            d1[k] = d0;
            y1[k] = y0;
        }
        x2 = x1;
        x1 = x0;
    }
    out.extend_from_slice(&best);
    N
}

/// Maximax acceleration SRS via one ramp-invariant filter per grid frequency.
pub fn srs_filterbank(
    signal: &Signal,
    grid: &Arc<FrequencyGrid>,
    scale_p: f64,
) -> Result<Spectrum> {
    let pad = validate_inputs(signal, grid, scale_p)?;
    let fs = signal.sample_rate_hz();
    let zeta = grid.damping_ratio();
    let filters: Vec<RampInvariantSdof> = grid
        .freqs_hz()
        .iter()
        .map(|&f| RampInvariantSdof::new(f, zeta, fs))
        .collect();
    let chunks: Vec<&[RampInvariantSdof]> = filters.chunks(LANES).collect();
    let values = par::map_slice(&chunks, |chunk| peak_values(chunk, signal.samples(), pad))
        .into_iter()
        .flatten()
        .collect();
    Spectrum::new(values, Arc::clone(grid))
}
