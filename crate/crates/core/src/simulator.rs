//! Synthetic EEG/EMG recordings with known ground truth.
//!
//! Pure EEG is low-passed Gaussian noise, EMG is Gaussian noise with periodic
//! clench bursts pushed through a band-pass. The inner electrode sees both;
//! the outer ring sees the EMG plus a fraction `alpha` of the EEG.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::analysis::{
    noise_power, snr, welch_psd, FilterId, Periodogram, SnrReport, NOISE_BAND_HZ,
};
use crate::error::{Error, Result};
use crate::iir::{BiquadCascade, Response};
use crate::pipeline::{conditioned_inner, run_filter, FilterKind, FilterRun, WeightSample};
use crate::stats::{paired_significance_with, PairedTest};
use crate::types::{FilterConfig, RecordingSession};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub sample_rate_hz: f64,
    pub duration_s: f64,
    /// Standard deviation of the white noise behind the EEG, in volts.
    pub eeg_sigma: f64,
    pub eeg_lp_hz: f64,
    pub emg_sigma: f64,
    pub burst_period_s: f64,
    pub burst_duration_s: f64,
    pub burst_gain: f64,
    pub emg_center_hz: f64,
    pub emg_half_width_hz: f64,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: 250.0,
            duration_s: 120.0,
            eeg_sigma: 40e-6,
            eeg_lp_hz: 17.0,
            emg_sigma: 15e-6,
            burst_period_s: 15.0,
            burst_duration_s: 1.0,
            burst_gain: 5.0,
            emg_center_hz: 50.0,
            emg_half_width_hz: 35.0,
            alpha: 0.4,
            seed: 1,
        }
    }
}

impl SimConfig {
    pub fn num_samples(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let fs = self.sample_rate_hz;
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(Error::NonPositiveSampleRate(fs));
        }
        let positive = [
            ("duration_s", self.duration_s),
            ("eeg_lp_hz", self.eeg_lp_hz),
            ("burst_period_s", self.burst_period_s),
            ("burst_duration_s", self.burst_duration_s),
            ("emg_center_hz", self.emg_center_hz),
            ("emg_half_width_hz", self.emg_half_width_hz),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive, got {v}"),
                });
            }
        }
        let non_negative = [
            ("eeg_sigma", self.eeg_sigma),
            ("emg_sigma", self.emg_sigma),
            ("burst_gain", self.burst_gain),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be non-negative, got {v}"),
                });
            }
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: format!("crosstalk must lie in [0, 1], got {}", self.alpha),
            });
        }
        let nyquist = fs / 2.0;
        let (lo, hi) = self.emg_band_hz();
        if lo <= 0.0 || hi >= nyquist {
            return Err(Error::CutoffOutOfRange {
                cutoff_hz: if lo <= 0.0 { lo } else { hi },
                nyquist_hz: nyquist,
            });
        }
        if self.eeg_lp_hz >= nyquist {
            return Err(Error::CutoffOutOfRange {
                cutoff_hz: self.eeg_lp_hz,
                nyquist_hz: nyquist,
            });
        }
        Ok(())
    }

    pub fn emg_band_hz(&self) -> (f64, f64) {
        (
            self.emg_center_hz - self.emg_half_width_hz,
            self.emg_center_hz + self.emg_half_width_hz,
        )
    }
}

// independent ChaCha streams per source so changing one never shifts another
const EEG_STREAM: u64 = 1;
const EMG_STREAM: u64 = 2;
const COHORT_STREAM: u64 = 3;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize, sigma: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let v: f64 = StandardNormal.sample(rng);
            sigma * v
        })
        .collect()
}

/// Pure EEG `c[n]`: white Gaussian noise through a 2nd-order low-pass.
pub fn gen_pure_eeg(config: &SimConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let fs = config.sample_rate_hz;
    let mut rng = stream(config.seed, EEG_STREAM);
    let raw = gaussian(&mut rng, config.num_samples(), config.eeg_sigma);
    let mut lp = BiquadCascade::lowpass(config.eeg_lp_hz, fs)?;
    Ok(lp.process(&raw))
}

/// Whether sample `i` falls inside a clench burst.
pub fn in_burst(config: &SimConfig, i: usize) -> bool {
    let t = i as f64 / config.sample_rate_hz;
    let phase = t - (t / config.burst_period_s).floor() * config.burst_period_s;
    phase < config.burst_duration_s
}

/// Pure EMG `r[n]`: gated Gaussian noise, then band-pass filtered.
pub fn gen_emg(config: &SimConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let fs = config.sample_rate_hz;
    let mut rng = stream(config.seed, EMG_STREAM);
    let mut raw = gaussian(&mut rng, config.num_samples(), config.emg_sigma);
    for (i, v) in raw.iter_mut().enumerate() {
        if in_burst(config, i) {
            *v *= config.burst_gain;
        }
    }
    let band = Response::bandpass_centered(config.emg_center_hz, config.emg_half_width_hz, fs);
    let mut bp = BiquadCascade::design(band, fs, 2)?;
    Ok(bp.process(&raw))
}

/// A simulated recording together with its hidden components.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSession {
    pub session: RecordingSession,
    /// Pure EEG.
    pub c: Vec<f64>,
    /// Pure EMG.
    pub r: Vec<f64>,
    pub alpha: f64,
}

/// `d = r + c`, `x = r + alpha * c`.
pub fn mix(c: Vec<f64>, r: Vec<f64>, alpha: f64, sample_rate_hz: f64) -> Result<SimSession> {
    if c.len() != r.len() {
        return Err(Error::LengthMismatch {
            inner: c.len(),
            outer: r.len(),
        });
    }
    let inner: Vec<f64> = r.iter().zip(&c).map(|(r, c)| r + c).collect();
    let outer: Vec<f64> = r.iter().zip(&c).map(|(r, c)| r + alpha * c).collect();
    let session = RecordingSession::new(sample_rate_hz, inner, outer, "simulated");
    Ok(SimSession {
        session,
        c,
        r,
        alpha,
    })
}

pub fn simulate(config: &SimConfig) -> Result<SimSession> {
    let c = gen_pure_eeg(config)?;
    let r = gen_emg(config)?;
    let mut sim = mix(c, r, config.alpha, config.sample_rate_hz)?;
    sim.session.label = format!("sim-{}", config.seed);
    Ok(sim)
}

/// Peak of the lagged cross-correlation, as an amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recovery {
    pub amplitude: f64,
    /// Lag `m` at the peak; positive when `e` trails `c`.
    pub lag: isize,
}

/// `max_m sqrt(|sum_n c[n-m] e[n]| / N)` over all lags, computed with an FFT.
pub fn recovered_amplitude(c: &[f64], e: &[f64]) -> Result<f64> {
    recover(c, e).map(|r| r.amplitude)
}

pub fn recover(c: &[f64], e: &[f64]) -> Result<Recovery> {
    if c.len() != e.len() {
        return Err(Error::LengthMismatch {
            inner: c.len(),
            outer: e.len(),
        });
    }
    let n = c.len();
    if n == 0 {
        return Err(Error::EmptyRecording);
    }
    let len = (2 * n - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let pad = |v: &[f64]| {
        let mut b: Vec<Complex<f64>> = v.iter().map(|&x| Complex::new(x, 0.0)).collect();
        b.resize(len, Complex::new(0.0, 0.0));
        b
    };
    let mut cf = pad(c);
    let mut ef = pad(e);
    fwd.process(&mut cf);
    fwd.process(&mut ef);
    let mut xc: Vec<Complex<f64>> = cf.iter().zip(&ef).map(|(a, b)| a.conj() * b).collect();
    inv.process(&mut xc);

    let scale = 1.0 / len as f64;
    let mut best = Recovery {
        amplitude: 0.0,
        lag: 0,
    };
    let mut best_abs = -1.0;
    for m in -(n as isize - 1)..=(n as isize - 1) {
        let idx = if m >= 0 {
            m as usize
        } else {
            (len as isize + m) as usize
        };
        let v = (xc[idx].re * scale).abs();
        if v > best_abs {
            best_abs = v;
            best.lag = m;
        }
    }
    best.amplitude = (best_abs / n as f64).sqrt();
    Ok(best)
}

/// How per-subject EMG levels spread around the base value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EmgSpread {
    /// Uniform on `[base - half_width, base + half_width]`.
    Uniform { half_width: f64 },
    /// Gaussian with the given standard deviation, clipped at zero.
    Gaussian { sigma: f64 },
}

impl Default for EmgSpread {
    fn default() -> Self {
        EmgSpread::Uniform { half_width: 5e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortConfig {
    pub num_subjects: usize,
    pub sim: SimConfig,
    pub filter: FilterConfig,
    pub spread: EmgSpread,
    pub test: PairedTest,
    /// Keep the per-subject filter runs and sessions (memory heavy).
    pub keep_runs: bool,
}

impl Default for CohortConfig {
    fn default() -> Self {
        Self {
            num_subjects: 20,
            sim: SimConfig::default(),
            filter: FilterConfig::default(),
            spread: EmgSpread::default(),
            test: PairedTest::default(),
            keep_runs: false,
        }
    }
}

/// Measured quantities for one filter on one subject.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectMeasure {
    pub report: SnrReport,
    /// SNR change relative to the inner electrode; 0 for the inner row.
    pub delta_db: f64,
    /// Recovered EEG amplitude divided by that of the pure EEG.
    pub amplitude_ratio: f64,
    pub psd: Periodogram,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectResult {
    pub index: usize,
    pub seed: u64,
    pub emg_sigma: f64,
    /// Ordered as [`FilterId::ALL`].
    pub measures: Vec<SubjectMeasure>,
    pub sim: Option<SimSession>,
    pub runs: Vec<FilterRun>,
    /// Weight-distance traces of the adaptive filters.
    pub traces: Vec<(FilterKind, Vec<WeightSample>)>,
}

impl SubjectResult {
    pub fn measure(&self, id: FilterId) -> &SubjectMeasure {
        &self.measures[FilterId::ALL.iter().position(|&f| f == id).unwrap()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortResult {
    pub subjects: Vec<SubjectResult>,
    pub test: PairedTest,
}

impl CohortResult {
    pub fn deltas(&self, id: FilterId) -> Vec<f64> {
        self.subjects
            .iter()
            .map(|s| s.measure(id).delta_db)
            .collect()
    }

    pub fn snrs(&self, id: FilterId) -> Vec<f64> {
        self.subjects
            .iter()
            .map(|s| s.measure(id).report.snr_db)
            .collect()
    }

    pub fn mean_delta(&self, id: FilterId) -> f64 {
        let d = self.deltas(id);
        d.iter().sum::<f64>() / d.len() as f64
    }

    /// Paired p-value between the SNRs of two signals across subjects.
    pub fn significance(&self, a: FilterId, b: FilterId) -> Result<f64> {
        paired_significance_with(&self.snrs(a), &self.snrs(b), self.test)
    }
}

/// Seed of the `k`-th subject.
pub fn subject_seed(base: u64, k: usize) -> u64 {
    base.wrapping_mul(1_000_003).wrapping_add(k as u64 + 1)
}

/// Per-subject EMG levels drawn from the configured spread.
pub fn emg_levels(config: &CohortConfig) -> Vec<f64> {
    let mut rng = stream(config.sim.seed, COHORT_STREAM);
    let base = config.sim.emg_sigma;
    (0..config.num_subjects)
        .map(|_| {
            match config.spread {
                EmgSpread::Uniform { half_width } => {
                    rng.random_range(base - half_width..=base + half_width)
                }
                EmgSpread::Gaussian { sigma } => Normal::new(base, sigma)
                    .map(|d| d.sample(&mut rng))
                    .unwrap_or(base),
            }
            .max(0.0)
        })
        .collect()
}

/// Simulates and filters every subject; results are ordered by subject.
pub fn run_cohort(config: &CohortConfig) -> Result<CohortResult> {
    if config.num_subjects < 2 {
        return Err(Error::InvalidParameter {
            name: "num_subjects",
            reason: format!("need at least 2 subjects, got {}", config.num_subjects),
        });
    }
    config.sim.validate()?;
    let sigmas = emg_levels(config);

    let subjects = sigmas
        .into_par_iter()
        .enumerate()
        .map(|(k, emg_sigma)| {
            let seed = subject_seed(config.sim.seed, k);
            let sim = SimConfig {
                emg_sigma,
                seed,
                ..config.sim.clone()
            };
            let filter = FilterConfig {
                rng_seed: seed,
                ..config.filter.clone()
            };
            let mut result = evaluate_subject(&sim, &filter, config.keep_runs)?;
            result.index = k;
            Ok(result)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CohortResult {
        subjects,
        test: config.test,
    })
}

/// Simulates one subject and measures every filter against the inner electrode.
pub fn evaluate_subject(
    sim: &SimConfig,
    filter: &FilterConfig,
    keep_runs: bool,
) -> Result<SubjectResult> {
    let session = simulate(sim)?;
    let (measures, runs) =
        evaluate_with_truth(&session.session, &session.c, filter, &FilterKind::ALL)?;
    let traces = runs
        .iter()
        .filter(|r| r.kind != FilterKind::Laplace)
        .map(|r| (r.kind, r.weight_trace.clone()))
        .collect();
    Ok(SubjectResult {
        index: 0,
        seed: sim.seed,
        emg_sigma: sim.emg_sigma,
        measures,
        sim: keep_runs.then_some(session),
        runs: if keep_runs { runs } else { Vec::new() },
        traces,
    })
}

/// Measures SNR against a known pure EEG `c`: signal power is the squared
/// recovered amplitude, noise power the 5-125 Hz Welch band power.
pub fn evaluate_with_truth(
    session: &RecordingSession,
    c: &[f64],
    filter: &FilterConfig,
    filters: &[FilterKind],
) -> Result<(Vec<SubjectMeasure>, Vec<FilterRun>)> {
    let fs = session.sample_rate_hz;
    let reference = recovered_amplitude(c, c)?;
    let measure = |id: FilterId, v: &[f64]| -> Result<(SnrReport, f64, Periodogram)> {
        let amp = recovered_amplitude(c, v)?;
        let psd = welch_psd(v, fs)?;
        let noise = noise_power(&psd, NOISE_BAND_HZ.0, NOISE_BAND_HZ.1)?;
        let report = snr(amp * amp, noise, id)?;
        let ratio = if reference > 0.0 {
            amp / reference
        } else {
            0.0
        };
        Ok((report, ratio, psd))
    };

    let inner = conditioned_inner(session, filter)?;
    let (inner_report, inner_ratio, inner_psd) = measure(FilterId::Inner, &inner)?;
    let mut measures = vec![SubjectMeasure {
        report: inner_report,
        delta_db: 0.0,
        amplitude_ratio: inner_ratio,
        psd: inner_psd,
    }];
    let mut runs = Vec::new();
    for &kind in filters {
        let id = match kind {
            FilterKind::Dnf => FilterId::Dnf,
            FilterKind::Lms => FilterId::Lms,
            FilterKind::Laplace => FilterId::Laplace,
        };
        let run = run_filter(session, filter, kind)?;
        let (report, ratio, psd) = measure(id, &run.output)?;
        measures.push(SubjectMeasure {
            delta_db: report.snr_db - inner_report.snr_db,
            report,
            amplitude_ratio: ratio,
            psd,
        });
        runs.push(run);
    }
    Ok((measures, runs))
}

/// Ratio of the largest to the smallest density bin over `[lo_hz, hi_hz]`.
pub fn spectral_flatness_ratio(p: &Periodogram, lo_hz: f64, hi_hz: f64) -> f64 {
    let first = (lo_hz / p.bin_width_hz).ceil() as usize;
    let last = ((hi_hz / p.bin_width_hz).floor() as usize).min(p.density.len() - 1);
    let band = &p.density[first..=last];
    let max = band.iter().copied().fold(f64::MIN, f64::max);
    let min = band.iter().copied().fold(f64::MAX, f64::min);
    max / min
}

/// A sinusoid helper used by examples and tests.
pub fn tone(freq_hz: f64, amplitude: f64, sample_rate_hz: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| amplitude * (2.0 * PI * freq_hz * i as f64 / sample_rate_hz).sin())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short() -> SimConfig {
        SimConfig {
            duration_s: 40.0,
            ..SimConfig::default()
        }
    }

    fn var(v: &[f64]) -> f64 {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
    }

    #[test]
    fn eeg_is_lowpassed() {
        let cfg = short();
        let c = gen_pure_eeg(&cfg).unwrap();
        assert_eq!(c.len(), 10_000);
        assert!(var(&c) < cfg.eeg_sigma * cfg.eeg_sigma);
        assert_eq!(c, gen_pure_eeg(&cfg).unwrap());
    }

    fn share_below(hz: usize, seconds: f64) -> f64 {
        let cfg = SimConfig {
            duration_s: seconds,
            ..SimConfig::default()
        };
        let c = gen_pure_eeg(&cfg).unwrap();
        let p = welch_psd(&c, cfg.sample_rate_hz).unwrap();
        p.density[..hz].iter().sum::<f64>() / p.density.iter().sum::<f64>()
    }

    // integral of |H|^2 of the designed low-pass, evaluated on a fine grid
    fn analytic_share_below(hz: f64) -> f64 {
        let lp = BiquadCascade::lowpass(17.0, 250.0).unwrap();
        let steps = 125_000;
        let (mut below, mut total) = (0.0, 0.0);
        for k in 0..steps {
            let f = (k as f64 + 0.5) * 125.0 / steps as f64;
            let g = lp.response_at(f, 250.0).norm_sqr();
            total += g;
            if f < hz {
                below += g;
            }
        }
        below / total
    }

    #[test]
    fn eeg_power_share_matches_filter_response() {
        let expected = analytic_share_below(25.0);
        assert!((expected - 0.931).abs() < 0.002, "{expected}");
        let measured = share_below(25, 120.0);
        assert!(
            (measured - expected).abs() < 0.02,
            "{measured} vs {expected}"
        );
    }

    // A 2nd-order 17 Hz Butterworth keeps only ~93% of its power below 25 Hz,
    // so this bound cannot hold for the specified EEG model.
    #[test]
    #[ignore = "bound exceeds the 2nd-order 17 Hz low-pass response (93.1% below 25 Hz)"]
    fn eeg_power_mostly_below_25_hz() {
        assert!(share_below(25, 40.0) > 0.95);
    }

    #[test]
    fn emg_bursts_are_five_times_louder() {
        let cfg = SimConfig {
            duration_s: 120.0,
            ..SimConfig::default()
        };
        let r = gen_emg(&cfg).unwrap();
        let (mut loud, mut quiet) = (Vec::new(), Vec::new());
        for (i, &v) in r.iter().enumerate() {
            // keep clear of the filter transients at burst edges
            let t = i as f64 / cfg.sample_rate_hz % cfg.burst_period_s;
            if (0.1..0.9).contains(&t) {
                loud.push(v);
            } else if (2.0..13.0).contains(&t) {
                quiet.push(v);
            }
        }
        let ratio = (var(&loud) / var(&quiet)).sqrt();
        assert!((ratio / 5.0 - 1.0).abs() < 0.15, "{ratio}");
    }

    #[test]
    fn emg_stays_in_band() {
        let cfg = short();
        let r = gen_emg(&cfg).unwrap();
        let p = welch_psd(&r, cfg.sample_rate_hz).unwrap();
        let total: f64 = p.density.iter().sum();
        let outside: f64 = p
            .density
            .iter()
            .enumerate()
            .filter(|(k, _)| !(10..=90).contains(k))
            .map(|(_, d)| d)
            .sum();
        assert!(outside / total < 0.10, "{}", outside / total);
    }

    #[test]
    fn silent_emg_is_zero() {
        let cfg = SimConfig {
            emg_sigma: 0.0,
            ..short()
        };
        assert!(gen_emg(&cfg).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mixing_identity_is_exact() {
        let sim = simulate(&short()).unwrap();
        for i in 0..sim.c.len() {
            assert_eq!(sim.session.inner[i], sim.r[i] + sim.c[i]);
            assert_eq!(sim.session.outer[i], sim.r[i] + 0.4 * sim.c[i]);
        }
        let c = vec![1.0, 2.0, 3.0];
        let r = vec![0.5, -0.5, 0.25];
        assert_eq!(
            mix(c.clone(), r.clone(), 0.0, 250.0).unwrap().session.outer,
            r
        );
        let full = mix(c, r, 1.0, 250.0).unwrap();
        assert_eq!(full.session.outer, full.session.inner);
        assert!(mix(vec![1.0], vec![], 0.4, 250.0).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::default().validate().is_ok());
        assert!(SimConfig {
            alpha: 1.5,
            ..SimConfig::default()
        }
        .validate()
        .is_err());
        assert!(SimConfig {
            emg_half_width_hz: 80.0,
            ..SimConfig::default()
        }
        .validate()
        .is_err());
        assert!(SimConfig {
            duration_s: 0.0,
            ..SimConfig::default()
        }
        .validate()
        .is_err());
    }

    fn brute(c: &[f64], e: &[f64]) -> (f64, isize) {
        let n = c.len() as isize;
        let mut best = (-1.0, 0);
        for m in -(n - 1)..n {
            let s: f64 = (0..n)
                .filter(|&i| i - m >= 0 && i - m < n)
                .map(|i| c[(i - m) as usize] * e[i as usize])
                .sum();
            if s.abs() > best.0 {
                best = (s.abs(), m);
            }
        }
        (((best.0) / n as f64).sqrt(), best.1)
    }

    #[test]
    fn recovery_matches_brute_force_and_finds_lag() {
        let mut cfg = short();
        cfg.duration_s = 4.0;
        let c = gen_pure_eeg(&cfg).unwrap();
        let mut delayed = vec![0.0; 25];
        delayed.extend_from_slice(&c[..c.len() - 25]);
        let fast = recover(&c, &delayed).unwrap();
        let (amp, lag) = brute(&c, &delayed);
        assert!((fast.amplitude / amp - 1.0).abs() < 1e-9);
        assert_eq!(fast.lag, 25);
        assert_eq!(lag, 25);
        let same = recovered_amplitude(&c, &c).unwrap();
        let rms = (c.iter().map(|x| x * x).sum::<f64>() / c.len() as f64).sqrt();
        assert!((same / rms - 1.0).abs() < 1e-9);
        // the delayed copy loses only its last 25 samples of overlap
        assert!((fast.amplitude / same - 1.0).abs() < 0.02);
        assert_eq!(recovered_amplitude(&c, &vec![0.0; c.len()]).unwrap(), 0.0);
        assert!(recovered_amplitude(&[], &[]).is_err());
    }

    #[test]
    fn recovery_grows_with_signal_share() {
        for seed in 0..10 {
            let cfg = SimConfig {
                seed,
                duration_s: 20.0,
                ..SimConfig::default()
            };
            let c = gen_pure_eeg(&cfg).unwrap();
            let noise = gaussian(&mut stream(seed, 99), c.len(), 40e-6);
            let mut last = 0.0;
            for beta in [0.25, 0.5, 0.75, 1.0] {
                let e: Vec<f64> = c.iter().zip(&noise).map(|(c, n)| beta * c + n).collect();
                let amp = recovered_amplitude(&c, &e).unwrap();
                assert!(amp > last, "seed {seed} beta {beta}");
                last = amp;
            }
        }
    }

    #[test]
    fn burst_gate_timing() {
        let cfg = SimConfig::default();
        assert!(in_burst(&cfg, 0));
        assert!(in_burst(&cfg, 249));
        assert!(!in_burst(&cfg, 250));
        assert!(in_burst(&cfg, 15 * 250));
        assert!(!in_burst(&cfg, 16 * 250));
    }

    #[test]
    fn cohort_shares_non_emg_parameters() {
        let cfg = CohortConfig {
            num_subjects: 3,
            sim: SimConfig {
                duration_s: 10.0,
                ..SimConfig::default()
            },
            ..CohortConfig::default()
        };
        let res = run_cohort(&cfg).unwrap();
        assert_eq!(res.subjects.len(), 3);
        for (k, s) in res.subjects.iter().enumerate() {
            assert_eq!(s.index, k);
            assert!((10e-6..=20e-6).contains(&s.emg_sigma));
            assert_eq!(s.measures.len(), 4);
            assert_eq!(s.measure(FilterId::Inner).delta_db, 0.0);
        }
        let again = run_cohort(&cfg).unwrap();
        assert_eq!(res, again);
        assert!(run_cohort(&CohortConfig {
            num_subjects: 1,
            ..cfg
        })
        .is_err());
    }
}
