//! Spectral and evoked-potential measurements behind the SNR figures.
//!
//! Noise power is the Welch density summed over the 5-125 Hz band (1 Hz bins,
//! segment length equal to the sampling rate); signal power is the median of
//! the squared event-triggered average between 300 and 500 ms. Their ratio in
//! dB is the SNR, and the per-subject difference filtered-minus-inner is the
//! improvement.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Taper applied to each Welch segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    #[default]
    Hann,
    Rectangular,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchOptions {
    pub window: Window,
    /// Fraction of a segment shared with the next one, in `[0, 1)`.
    pub overlap: f64,
}

impl Default for WelchOptions {
    fn default() -> Self {
        Self {
            window: Window::Hann,
            overlap: 0.5,
        }
    }
}

/// One-sided power spectral density in V^2/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct Periodogram {
    pub bin_width_hz: f64,
    pub sample_rate_hz: f64,
    pub density: Vec<f64>,
}

impl Periodogram {
    pub fn frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_width_hz
    }

    pub fn nyquist_hz(&self) -> f64 {
        self.sample_rate_hz / 2.0
    }

    pub fn total_power(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.bin_width_hz
    }
}

/// Welch PSD with segments of `fs` samples, which gives 1 Hz bins.
pub fn welch_psd(v: &[f64], sample_rate_hz: f64) -> Result<Periodogram> {
    welch_psd_with(v, sample_rate_hz, WelchOptions::default())
}

pub fn welch_psd_with(
    v: &[f64],
    sample_rate_hz: f64,
    options: WelchOptions,
) -> Result<Periodogram> {
    if !(sample_rate_hz > 0.0) {
        return Err(Error::NonPositiveSampleRate(sample_rate_hz));
    }
    if !(0.0..1.0).contains(&options.overlap) {
        return Err(Error::InvalidParameter {
            name: "overlap",
            reason: format!("must lie in [0, 1), got {}", options.overlap),
        });
    }
    let seg_len = sample_rate_hz.round() as usize;
    if seg_len < 2 {
        return Err(Error::InvalidParameter {
            name: "sample_rate_hz",
            reason: format!("need at least two samples per segment, got {seg_len}"),
        });
    }
    if v.len() < seg_len {
        return Err(Error::SignalTooShort {
            len: v.len(),
            needed: seg_len,
        });
    }
    let step = (((1.0 - options.overlap) * seg_len as f64).round() as usize).max(1);
    let window: Vec<f64> = match options.window {
        // periodic Hann
        Window::Hann => (0..seg_len)
            .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / seg_len as f64).cos())
            .collect(),
        Window::Rectangular => vec![1.0; seg_len],
    };
    let window_energy: f64 = window.iter().map(|w| w * w).sum();

    let fft = FftPlanner::<f64>::new().plan_fft_forward(seg_len);
    let num_bins = seg_len / 2 + 1;
    let mut acc = vec![0.0; num_bins];
    let mut buf = vec![Complex::new(0.0, 0.0); seg_len];
    let mut segments = 0usize;
    let mut start = 0;
    while start + seg_len <= v.len() {
        let seg = &v[start..start + seg_len];
        let mean = seg.iter().sum::<f64>() / seg_len as f64;
        for ((b, &s), &w) in buf.iter_mut().zip(seg).zip(&window) {
            *b = Complex::new((s - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        segments += 1;
        start += step;
    }

    let scale = 1.0 / (sample_rate_hz * window_energy * segments as f64);
    let nyquist_bin = if seg_len.is_multiple_of(2) {
        Some(num_bins - 1)
    } else {
        None
    };
    let density = acc
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let one_sided = if k == 0 || Some(k) == nyquist_bin {
                1.0
            } else {
                2.0
            };
            p * scale * one_sided
        })
        .collect();
    Ok(Periodogram {
        bin_width_hz: sample_rate_hz / seg_len as f64,
        sample_rate_hz,
        density,
    })
}

/// Band limits of the noise measurement, in Hz.
pub const NOISE_BAND_HZ: (f64, f64) = (5.0, 125.0);

/// Sum of the density bins from `lo_hz` to `hi_hz` inclusive, times the bin width.
pub fn noise_power(p: &Periodogram, lo_hz: f64, hi_hz: f64) -> Result<f64> {
    if hi_hz > p.nyquist_hz() + 1e-9 {
        return Err(Error::BandExceedsNyquist {
            hi_hz,
            nyquist_hz: p.nyquist_hz(),
        });
    }
    if !(lo_hz >= 0.0 && lo_hz <= hi_hz) {
        return Err(Error::InvalidParameter {
            name: "lo_hz",
            reason: format!("band [{lo_hz}, {hi_hz}] Hz is empty or negative"),
        });
    }
    let first = (lo_hz / p.bin_width_hz).ceil() as usize;
    let last = ((hi_hz / p.bin_width_hz).floor() as usize).min(p.density.len() - 1);
    Ok(p.density[first..=last].iter().sum::<f64>() * p.bin_width_hz)
}

/// Pointwise mean of trigger-aligned windows.
#[derive(Debug, Clone, PartialEq)]
pub struct EventAverage {
    pub window: Vec<f64>,
    pub pre_ms: f64,
    pub sample_rate_hz: f64,
    pub num_events: usize,
    /// Triggers whose window did not fit inside the recording.
    pub skipped: usize,
}

impl EventAverage {
    /// Time of sample `i` relative to the trigger, in ms.
    pub fn time_ms(&self, i: usize) -> f64 {
        i as f64 * 1000.0 / self.sample_rate_hz - self.pre_ms
    }
}

/// Averages `v` over windows from `pre_ms` before to `post_ms` after each trigger.
pub fn event_average(
    v: &[f64],
    triggers: &[usize],
    pre_ms: f64,
    post_ms: f64,
    sample_rate_hz: f64,
) -> Result<EventAverage> {
    if !(sample_rate_hz > 0.0) {
        return Err(Error::NonPositiveSampleRate(sample_rate_hz));
    }
    if !(pre_ms >= 0.0 && post_ms > 0.0) {
        return Err(Error::InvalidParameter {
            name: "post_ms",
            reason: format!("window [-{pre_ms}, {post_ms}] ms is empty"),
        });
    }
    let pre = (pre_ms * sample_rate_hz / 1000.0).round() as usize;
    let len = ((pre_ms + post_ms) * sample_rate_hz / 1000.0).round() as usize;
    let mut sum = vec![0.0; len];
    let mut used = 0usize;
    for &t in triggers {
        if t < pre || t - pre + len > v.len() {
            continue;
        }
        for (s, x) in sum.iter_mut().zip(&v[t - pre..t - pre + len]) {
            *s += x;
        }
        used += 1;
    }
    let skipped = triggers.len() - used;
    if used == 0 {
        return Err(Error::NoUsableTriggers { skipped });
    }
    sum.iter_mut().for_each(|s| *s /= used as f64);
    Ok(EventAverage {
        window: sum,
        pre_ms,
        sample_rate_hz,
        num_events: used,
        skipped,
    })
}

/// Default evoked-response interval, in ms after the trigger.
pub const P300_WINDOW_MS: (f64, f64) = (300.0, 500.0);

/// Median of the squared average over `[lo_ms, hi_ms]`.
pub fn p300_signal_power(avg: &EventAverage) -> Result<f64> {
    p300_signal_power_in(avg, P300_WINDOW_MS.0, P300_WINDOW_MS.1)
}

pub fn p300_signal_power_in(avg: &EventAverage, lo_ms: f64, hi_ms: f64) -> Result<f64> {
    let fs = avg.sample_rate_hz;
    let to_index = |ms: f64| ((ms + avg.pre_ms) * fs / 1000.0).round();
    let (first, last) = (to_index(lo_ms), to_index(hi_ms));
    if first < 0.0 || last as usize >= avg.window.len() {
        return Err(Error::WindowTooShort {
            covered_ms: avg.time_ms(avg.window.len().saturating_sub(1)),
            needed_ms: hi_ms,
        });
    }
    let mut squares: Vec<f64> = avg.window[first as usize..=last as usize]
        .iter()
        .map(|v| v * v)
        .collect();
    Ok(median(&mut squares))
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Which signal a measurement refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FilterId {
    Inner,
    Dnf,
    Lms,
    Laplace,
}

impl FilterId {
    pub const ALL: [FilterId; 4] = [
        FilterId::Inner,
        FilterId::Dnf,
        FilterId::Lms,
        FilterId::Laplace,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FilterId::Inner => "inner",
            FilterId::Dnf => "dnf",
            FilterId::Lms => "lms",
            FilterId::Laplace => "laplace",
        }
    }
}

impl fmt::Display for FilterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FilterId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "inner" => Ok(FilterId::Inner),
            "dnf" => Ok(FilterId::Dnf),
            "lms" => Ok(FilterId::Lms),
            "laplace" => Ok(FilterId::Laplace),
            other => Err(Error::InvalidParameter {
                name: "filter",
                reason: format!("unknown filter `{other}` (expected inner, dnf, lms or laplace)"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrReport {
    pub signal_power: f64,
    pub noise_power: f64,
    pub snr_db: f64,
    pub filter_id: FilterId,
}

pub fn snr(signal_power: f64, noise_power: f64, filter_id: FilterId) -> Result<SnrReport> {
    if !(signal_power > 0.0) {
        return Err(Error::NonPositivePower {
            name: "signal_power",
            value: signal_power,
        });
    }
    if !(noise_power > 0.0) {
        return Err(Error::NonPositivePower {
            name: "noise_power",
            value: noise_power,
        });
    }
    Ok(SnrReport {
        signal_power,
        noise_power,
        snr_db: 10.0 * (signal_power / noise_power).log10(),
        filter_id,
    })
}

/// SNR improvement in dB, positive when `after` is cleaner than `before`.
pub fn delta_snr(before: &SnrReport, after: &SnrReport) -> f64 {
    after.snr_db - before.snr_db
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn white(n: usize, sigma: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let v: f64 = StandardNormal.sample(&mut rng);
                sigma * v
            })
            .collect()
    }

    #[test]
    fn white_noise_integrates_to_its_variance() {
        let sigma = 3e-6;
        let v = white(100_000, sigma, 1);
        let p = welch_psd(&v, 250.0).unwrap();
        assert_eq!(p.density.len(), 126);
        assert_eq!(p.bin_width_hz, 1.0);
        let rel = p.total_power() / (sigma * sigma) - 1.0;
        assert!(rel.abs() < 0.05, "{rel}");
    }

    #[test]
    fn rectangular_no_overlap_also_integrates() {
        let v = white(100_000, 1.0, 2);
        let opts = WelchOptions {
            window: Window::Rectangular,
            overlap: 0.0,
        };
        let p = welch_psd_with(&v, 250.0, opts).unwrap();
        assert!((p.total_power() - 1.0).abs() < 0.05);
    }

    #[test]
    fn bin_centered_sine_power_sits_in_its_bin() {
        let fs = 250.0;
        let a = 2.0;
        let f0 = 40.0;
        let v: Vec<f64> = (0..25_000)
            .map(|i| a * (2.0 * PI * f0 * i as f64 / fs).sin())
            .collect();
        let p = welch_psd(&v, fs).unwrap();
        let near: f64 = p.density[39..=41].iter().sum();
        assert!((near / (a * a / 2.0) - 1.0).abs() < 0.05);
        assert!((p.total_power() / (a * a / 2.0) - 1.0).abs() < 0.05);
    }

    #[test]
    fn zero_signal_has_zero_density() {
        let p = welch_psd(&vec![0.0; 1000], 250.0).unwrap();
        assert!(p.density.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn short_signal_is_rejected() {
        assert!(matches!(
            welch_psd(&[0.0; 100], 250.0),
            Err(Error::SignalTooShort {
                len: 100,
                needed: 250
            })
        ));
    }

    #[test]
    fn noise_band_counts_inclusive_bins() {
        let flat = Periodogram {
            bin_width_hz: 1.0,
            sample_rate_hz: 250.0,
            density: vec![1.0; 126],
        };
        assert_eq!(noise_power(&flat, 5.0, 125.0).unwrap(), 121.0);
        let zero = Periodogram {
            density: vec![0.0; 126],
            ..flat.clone()
        };
        assert_eq!(noise_power(&zero, 5.0, 125.0).unwrap(), 0.0);
        assert!(matches!(
            noise_power(&flat, 5.0, 126.0),
            Err(Error::BandExceedsNyquist { .. })
        ));
    }

    #[test]
    fn white_noise_band_share() {
        let v = white(100_000, 1.0, 3);
        let p = welch_psd(&v, 250.0).unwrap();
        let share = noise_power(&p, 5.0, 125.0).unwrap() / p.total_power();
        // 121 of 126 bins, the DC and Nyquist bins carrying half weight
        let expected = 121.0 / 126.0;
        assert!((share / expected - 1.0).abs() < 0.05, "{share}");
    }

    fn pulse(len: usize) -> Vec<f64> {
        (0..len)
            .map(|i| (PI * i as f64 / len as f64).sin() * 1e-5)
            .collect()
    }

    #[test]
    fn identical_pulses_average_to_the_pulse() {
        let fs = 250.0;
        let shape = pulse(250);
        let mut v = vec![0.0; 5000];
        let triggers = vec![100, 1200, 3000];
        for &t in &triggers {
            v[t..t + 250].copy_from_slice(&shape);
        }
        let avg = event_average(&v, &triggers, 0.0, 1000.0, fs).unwrap();
        assert_eq!(avg.num_events, 3);
        for (a, b) in avg.window.iter().zip(&shape) {
            assert!((a - b).abs() < 1e-18);
        }
    }

    #[test]
    fn averaging_shrinks_noise_by_root_n() {
        let fs = 250.0;
        let len = 250;
        let events = 100;
        let sigma = 1e-5;
        let noise = white(len * events + len, sigma, 4);
        let triggers: Vec<usize> = (0..events).map(|k| k * len).collect();
        let avg = event_average(&noise, &triggers, 0.0, 1000.0, fs).unwrap();
        let std = (avg.window.iter().map(|v| v * v).sum::<f64>() / len as f64).sqrt();
        let ratio = sigma / std;
        assert!((ratio / 10.0 - 1.0).abs() < 0.15, "{ratio}");
    }

    #[test]
    fn single_trigger_returns_its_window() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let avg = event_average(&v, &[10], 0.0, 1000.0, 250.0).unwrap();
        assert_eq!(avg.window, v[10..260].to_vec());
    }

    #[test]
    fn triggers_without_room_are_skipped() {
        let v = vec![1.0; 400];
        let avg = event_average(&v, &[10, 300], 0.0, 1000.0, 250.0).unwrap();
        assert_eq!((avg.num_events, avg.skipped), (1, 1));
        assert!(matches!(
            event_average(&v, &[300], 0.0, 1000.0, 250.0),
            Err(Error::NoUsableTriggers { skipped: 1 })
        ));
    }

    #[test]
    fn average_ignores_trigger_order() {
        let v = white(10_000, 1.0, 5);
        let a = event_average(&v, &[100, 2000, 5000, 7000], 100.0, 600.0, 250.0).unwrap();
        let b = event_average(&v, &[7000, 100, 5000, 2000], 100.0, 600.0, 250.0).unwrap();
        for (x, y) in a.window.iter().zip(&b.window) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    fn average_of(window: Vec<f64>) -> EventAverage {
        EventAverage {
            window,
            pre_ms: 0.0,
            sample_rate_hz: 250.0,
            num_events: 1,
            skipped: 0,
        }
    }

    #[test]
    fn constant_window_power() {
        let avg = average_of(vec![10e-6; 250]);
        let p = p300_signal_power(&avg).unwrap();
        assert!((p - 1e-10).abs() < 1e-24);
        assert_eq!(p300_signal_power(&average_of(vec![0.0; 250])).unwrap(), 0.0);
    }

    #[test]
    fn triangular_peak_matches_enumeration() {
        let fs = 250.0;
        // 0 -> 10 uV -> 0 across 300..500 ms
        let window: Vec<f64> = (0..250)
            .map(|i| {
                let t = i as f64 * 1000.0 / fs;
                if (300.0..=500.0).contains(&t) {
                    10e-6 * (1.0 - ((t - 400.0) / 100.0).abs())
                } else {
                    0.0
                }
            })
            .collect();
        // brute force: every sample with 300 <= t <= 500 ms, squared, sorted, middle
        let mut inside: Vec<f64> = (0..250)
            .filter(|&i| {
                let t = i as f64 * 4.0;
                (300.0..=500.0).contains(&t)
            })
            .map(|i| window[i] * window[i])
            .collect();
        assert_eq!(inside.len(), 51);
        inside.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expected = inside[25];
        let got = p300_signal_power(&average_of(window)).unwrap();
        assert_eq!(got, expected);
    }

    #[test]
    fn short_window_is_rejected() {
        let avg = average_of(vec![1.0; 100]);
        assert!(matches!(
            p300_signal_power(&avg),
            Err(Error::WindowTooShort { .. })
        ));
    }

    #[test]
    fn snr_in_db() {
        assert_eq!(snr(1e-8, 1e-8, FilterId::Inner).unwrap().snr_db, 0.0);
        let r = snr(1e-10, 1e-8, FilterId::Dnf).unwrap();
        assert!((r.snr_db + 20.0).abs() < 1e-12);
        assert!(snr(0.0, 1.0, FilterId::Dnf).is_err());
        assert!(snr(1.0, -1.0, FilterId::Dnf).is_err());
    }

    #[test]
    fn snr_round_trips_to_signal_power() {
        for (s, n) in [(1e-10, 3e-9), (2.5e-7, 1e-12), (1.0, 1.0)] {
            let r = snr(s, n, FilterId::Lms).unwrap();
            let back = 10f64.powf(r.snr_db / 10.0) * r.noise_power;
            assert!((back / s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_filter_has_zero_improvement() {
        let r = snr(3e-10, 7e-9, FilterId::Inner).unwrap();
        let same = SnrReport {
            filter_id: FilterId::Dnf,
            ..r
        };
        assert_eq!(delta_snr(&r, &same), 0.0);
        let better = snr(3e-10, 7e-10, FilterId::Dnf).unwrap();
        assert!(delta_snr(&r, &better) > 0.0);
    }

    #[test]
    fn filter_ids_parse() {
        for id in FilterId::ALL {
            assert_eq!(id.as_str().parse::<FilterId>().unwrap(), id);
        }
        assert!("wiener".parse::<FilterId>().is_err());
    }
}
