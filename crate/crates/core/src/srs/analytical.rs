//! Reference SRS from the convolution (Duhamel) solution of the oscillator.
//!
//! Relative displacement is `z(t) = -(1/wd) \int x''(tau) e^{-zeta w (t-tau)} sin(wd (t-tau)) dtau`,
//! evaluated on the sample instants by the trapezoidal rule with the record
//! at rest one sample before its start. `z''` comes from second central
//! differences and the absolute acceleration is `z'' + x''`.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{validate_inputs, FrequencyGrid, Signal, Spectrum};
use crate::error::Result;

const DIRECT_CONV_LIMIT: usize = 1 << 16;

/// Full linear convolution computed term by term.
pub fn convolve_direct(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Full linear convolution; switches to FFT for long operands.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    if a.len().saturating_mul(b.len()) <= DIRECT_CONV_LIMIT {
        return convolve_direct(a, b);
    }
    let out_len = a.len() + b.len() - 1;
    let mut conv = FftConvolver::new(a, out_len);
    conv.apply(b)
}

/// Holds the transform of one operand so it can be convolved with many kernels.
struct FftConvolver {
    size: usize,
    out_len: usize,
    spectrum: Vec<Complex<f64>>,
    planner: FftPlanner<f64>,
}

impl FftConvolver {
    fn new(signal: &[f64], out_len: usize) -> Self {
        let size = out_len.next_power_of_two();
        let mut planner = FftPlanner::new();
        let mut spectrum = to_complex(signal, size);
        planner.plan_fft_forward(size).process(&mut spectrum);
        Self {
            size,
            out_len,
            spectrum,
            planner,
        }
    }

    fn apply(&mut self, kernel: &[f64]) -> Vec<f64> {
        let mut buf = to_complex(kernel, self.size);
        self.planner.plan_fft_forward(self.size).process(&mut buf);
        for (b, s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= s;
        }
        self.planner.plan_fft_inverse(self.size).process(&mut buf);
        let norm = 1.0 / self.size as f64;
        buf.iter().take(self.out_len).map(|c| c.re * norm).collect()
    }
}

fn to_complex(values: &[f64], size: usize) -> Vec<Complex<f64>> {
    let mut buf = vec![Complex::new(0.0, 0.0); size];
    for (dst, &v) in buf.iter_mut().zip(values) {
        dst.re = v;
    }
    buf
}

/// Samples of the relative-displacement impulse response at `m * dt`.
fn displacement_kernel(natural_freq_hz: f64, damping_ratio: f64, dt: f64, len: usize) -> Vec<f64> {
    let omega = 2.0 * PI * natural_freq_hz;
    let omega_d = omega * (1.0 - damping_ratio * damping_ratio).sqrt();
    (0..len)
        .map(|m| {
            let t = m as f64 * dt;
            -(-damping_ratio * omega * t).exp() * (omega_d * t).sin() / omega_d
        })
        .collect()
}

/// Peak absolute acceleration given the displacement convolution sums.
///
/// `sums[n] = sum_k x[k] h[n-k]` for `n = 0..=total`; the record has
/// `total` samples after padding.
fn peak_from_sums(sums: &[f64], input: &[f64], total: usize, dt: f64) -> f64 {
    let z = |n: isize| -> f64 {
        if n < 0 {
            0.0
        } else {
            dt * sums[n as usize]
        }
    };
    let inv_dt2 = 1.0 / (dt * dt);
    let mut best = 0.0f64;
    for n in 0..total {
        let ni = n as isize;
        let z_ddot = (z(ni + 1) - 2.0 * z(ni) + z(ni - 1)) * inv_dt2;
        let x = input.get(n).copied().unwrap_or(0.0);
        best = best.max((z_ddot + x).abs());
    }
    best
}

/// Slow reference SRS from the analytical convolution solution.
pub fn srs_analytical(
    signal: &Signal,
    grid: &Arc<FrequencyGrid>,
    scale_p: f64,
) -> Result<Spectrum> {
    let pad = validate_inputs(signal, grid, scale_p)?;
    let input = signal.samples();
    let dt = signal.sample_period();
    let total = input.len() + pad;
    // One extra displacement sample past the padded end feeds the last central difference.
    let kernel_len = total + 1;
    let zeta = grid.damping_ratio();

    let use_direct = input.len().saturating_mul(kernel_len) <= DIRECT_CONV_LIMIT;
    let mut fft = (!use_direct).then(|| FftConvolver::new(input, input.len() + kernel_len - 1));

    let values = grid
        .freqs_hz()
        .iter()
        .map(|&f| {
            let kernel = displacement_kernel(f, zeta, dt, kernel_len);
            let sums = match fft.as_mut() {
                Some(c) => c.apply(&kernel),
                None => convolve_direct(input, &kernel),
            };
            peak_from_sums(&sums, input, total, dt)
        })
        .collect();
    Spectrum::new(values, Arc::clone(grid))
}
