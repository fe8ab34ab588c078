//! Small signal-processing building blocks shared by synthesis and features.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// Periodic Hann window of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Real-input power spectra of fixed-length frames.
///
/// Output is one-sided: `n/2 + 1` bins, interior bins doubled, everything
/// divided by `n`, so that the bins of a frame sum to the energy of the
/// windowed frame.
pub struct PowerSpectrum {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    buf: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl PowerSpectrum {
    pub fn new(n: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(n);
        let scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
        PowerSpectrum {
            n,
            fft,
            buf: vec![Complex::default(); n],
            scratch,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn bins(&self) -> usize {
        self.n / 2 + 1
    }

    /// Power of `frame` multiplied sample-wise by `window`, written to `out`.
    pub fn compute(&mut self, frame: &[f64], window: &[f64], out: &mut [f64]) {
        debug_assert_eq!(frame.len(), self.n);
        debug_assert_eq!(out.len(), self.bins());
        for ((b, &x), &w) in self.buf.iter_mut().zip(frame).zip(window) {
            *b = Complex::new(x * w, 0.0);
        }
        self.fft.process_with_scratch(&mut self.buf, &mut self.scratch);
        let n = self.n as f64;
        let last = self.n / 2;
        for (k, o) in out.iter_mut().enumerate() {
            let p = self.buf[k].norm_sqr() / n;
            let doubled = k != 0 && !(self.n % 2 == 0 && k == last);
            *o = if doubled { 2.0 * p } else { p };
        }
    }
}

/// Hann-windowed one-sided power spectrum of a whole signal.
pub fn power_spectrum(signal: &[f64]) -> Vec<f64> {
    let mut ps = PowerSpectrum::new(signal.len());
    let mut out = vec![0.0; ps.bins()];
    ps.compute(signal, &hann(signal.len()), &mut out);
    out
}

/// Index of the largest bin, skipping DC.
pub fn peak_bin(power: &[f64]) -> Option<usize> {
    power
        .iter()
        .enumerate()
        .skip(1)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
}

/// Direct-form-I biquad.
#[derive(Debug, Clone)]
pub struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
    x1: f64,
    x2: f64,
    y1: f64,
    y2: f64,
}

impl Biquad {
    /// Second-order resonant low-pass (unity DC gain, peak near `f0` of about
    /// `q` for q well above 1).
    pub fn resonant_lowpass(f0: f64, q: f64, sample_rate: f64) -> Self {
        let w0 = 2.0 * PI * f0 / sample_rate;
        let alpha = w0.sin() / (2.0 * q);
        let cos = w0.cos();
        let a0 = 1.0 + alpha;
        let b1 = (1.0 - cos) / a0;
        Biquad {
            b: [b1 / 2.0, b1, b1 / 2.0],
            a: [-2.0 * cos / a0, (1.0 - alpha) / a0],
            x1: 0.0,
            x2: 0.0,
            y1: 0.0,
            y2: 0.0,
        }
    }

    pub fn process(&mut self, x: f64) -> f64 {
        let y = self.b[0] * x + self.b[1] * self.x1 + self.b[2] * self.x2
            - self.a[0] * self.y1
            - self.a[1] * self.y2;
        self.x2 = self.x1;
        self.x1 = x;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }

    /// Magnitude response at frequency `f`.
    pub fn gain_at(&self, f: f64, sample_rate: f64) -> f64 {
        let w = 2.0 * PI * f / sample_rate;
        let z1 = Complex::from_polar(1.0, -w);
        let z2 = z1 * z1;
        let num = self.b[0] + self.b[1] * z1 + self.b[2] * z2;
        let den = 1.0 + self.a[0] * z1 + self.a[1] * z2;
        (num / den).norm()
    }
}

/// Windowed-sinc low-pass with a Blackman window, unity DC gain.
pub fn lowpass_fir(cutoff_ratio: f64, taps: usize) -> Vec<f64> {
    let m = (taps - 1) as f64;
    let mut h: Vec<f64> = (0..taps)
        .map(|i| {
            let x = i as f64 - m / 2.0;
            let sinc = if x == 0.0 {
                2.0 * cutoff_ratio
            } else {
                (2.0 * PI * cutoff_ratio * x).sin() / (PI * x)
            };
            let w = 0.42 - 0.5 * (2.0 * PI * i as f64 / m).cos()
                + 0.08 * (4.0 * PI * i as f64 / m).cos();
            sinc * w
        })
        .collect();
    let sum: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= sum);
    h
}

/// Low-pass then keep every `factor`-th sample, `out_len` outputs. The filter
/// is centred (zero phase), with zeros assumed outside the signal.
pub fn decimate(signal: &[f64], factor: usize, out_len: usize) -> Vec<f64> {
    if factor == 1 {
        let mut v = signal.to_vec();
        v.resize(out_len, 0.0);
        return v;
    }
    let taps = 8 * factor + 1;
    let h = lowpass_fir(0.45 / factor as f64, taps);
    let half = (taps / 2) as isize;
    (0..out_len)
        .map(|j| {
            let c = (j * factor) as isize;
            h.iter()
                .enumerate()
                .filter_map(|(k, &hk)| {
                    let idx = c + half - k as isize;
                    (idx >= 0 && (idx as usize) < signal.len()).then(|| hk * signal[idx as usize])
                })
                .sum()
        })
        .collect()
}

pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().sum::<f64>() / x.len() as f64
    }
}

/// Pearson correlation coefficient; 0 when either input is constant.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (ma, mb) = (mean(&a[..n]), mean(&b[..n]));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (da, db) = (a[i] - ma, b[i] - mb);
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

/// Median of a slice (mean of the middle pair for even lengths).
pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parseval_one_sided() {
        for n in [16usize, 17, 64] {
            let x: Vec<f64> = (0..n).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
            let w = hann(n);
            let mut ps = PowerSpectrum::new(n);
            let mut out = vec![0.0; ps.bins()];
            ps.compute(&x, &w, &mut out);
            let energy: f64 = x.iter().zip(&w).map(|(a, b)| (a * b).powi(2)).sum();
            let total: f64 = out.iter().sum();
            assert!((total - energy).abs() < 1e-9 * energy, "n={n}");
        }
    }

    #[test]
    fn resonant_lowpass_shape() {
        let fs = 16_000.0;
        let f = Biquad::resonant_lowpass(1200.0, 5.0, fs);
        assert!((f.gain_at(0.0, fs) - 1.0).abs() < 1e-12);
        let peak = f.gain_at(1200.0, fs);
        assert!(peak > 4.5 && peak < 5.5, "{peak}");
        assert!(f.gain_at(6000.0, fs) < 0.1);
    }

    #[test]
    fn decimation_passes_low_rejects_high() {
        let fs = 16_000.0;
        let tone = |f: f64| -> Vec<f64> {
            (0..16_000)
                .map(|i| (2.0 * PI * f * i as f64 / fs).sin())
                .collect()
        };
        let low = decimate(&tone(100.0), 16, 1000);
        let high = decimate(&tone(2000.0), 16, 1000);
        assert!((rms(&low[100..900]) - 0.5f64.sqrt()).abs() < 0.01);
        assert!(rms(&high[100..900]) < 1e-3);
    }

    #[test]
    fn median_and_correlation() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
        let a = [1.0, 2.0, 3.0];
        assert!((correlation(&a, &[2.0, 4.0, 6.0]) - 1.0).abs() < 1e-12);
        assert_eq!(correlation(&a, &[1.0, 1.0, 1.0]), 0.0);
    }
}
