//! Conditioning chain, tapped delay line and the tap-count / delay rules.

use crate::error::{Error, Result};
use crate::iir::{BiquadCascade, Response};
use crate::types::{FilterConfig, RecordingSession};

/// Fixed-capacity delay line holding the most recent `N` samples.
///
/// Samples are mirrored into a buffer of length `2N` so the taps are always
/// available as one contiguous newest-first slice.
#[derive(Debug, Clone, PartialEq)]
pub struct TappedDelayLine {
    buf: Vec<f64>,
    head: usize,
    capacity: usize,
}

impl TappedDelayLine {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "delay line needs at least one tap");
        Self {
            buf: vec![0.0; 2 * capacity],
            head: 0,
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Pushes one sample and returns all taps, newest first.
    #[inline]
    pub fn push(&mut self, sample: f64) -> &[f64] {
        self.head = if self.head == 0 {
            self.capacity - 1
        } else {
            self.head - 1
        };
        self.buf[self.head] = sample;
        self.buf[self.head + self.capacity] = sample;
        self.taps()
    }

    /// Owned copy of the taps after pushing `sample`.
    pub fn push_and_read(&mut self, sample: f64) -> Vec<f64> {
        self.push(sample).to_vec()
    }

    #[inline]
    pub fn taps(&self) -> &[f64] {
        &self.buf[self.head..self.head + self.capacity]
    }

    /// The sample pushed `k` steps ago; tap 0 is the newest.
    pub fn tap(&self, k: usize) -> f64 {
        self.taps()[k]
    }

    pub fn clear(&mut self) {
        self.buf.iter_mut().for_each(|v| *v = 0.0);
        self.head = 0;
    }
}

/// Number of delay-line taps: `floor(fs / fc_outer)`.
pub fn compute_num_taps(sample_rate_hz: f64, hp_outer_hz: f64) -> Result<usize> {
    if !(sample_rate_hz > 0.0) {
        return Err(Error::NonPositiveSampleRate(sample_rate_hz));
    }
    if !(hp_outer_hz > 0.0) {
        return Err(Error::InvalidParameter {
            name: "hp_outer_hz",
            reason: format!("must be positive, got {hp_outer_hz}"),
        });
    }
    let ratio = sample_rate_hz / hp_outer_hz;
    if ratio < 2.0 {
        return Err(Error::InvalidParameter {
            name: "num_taps",
            reason: format!("fs / fc = {ratio} < 2 leaves no room for a half-length delay"),
        });
    }
    Ok(ratio.floor() as usize)
}

/// Tap count for a run, honoring the config override.
pub fn resolve_num_taps(sample_rate_hz: f64, config: &FilterConfig) -> Result<usize> {
    match config.num_taps_override {
        Some(n) if n >= 2 => Ok(n),
        Some(n) => Err(Error::InvalidParameter {
            name: "num_taps_override",
            reason: format!("need at least 2 taps, got {n}"),
        }),
        None => compute_num_taps(sample_rate_hz, config.hp_outer_hz),
    }
}

/// Delay applied to the inner signal: half the tap count, rounded down.
pub fn signal_delay(num_taps: usize) -> usize {
    num_taps / 2
}

/// Streaming conditioner for one channel: high-pass, mains band-stop, gain.
#[derive(Debug, Clone)]
pub struct ChannelConditioner {
    chain: BiquadCascade,
    gain: f64,
}

impl ChannelConditioner {
    pub fn new(highpass_hz: f64, config: &FilterConfig, sample_rate_hz: f64) -> Result<Self> {
        let hp = BiquadCascade::highpass(highpass_hz, sample_rate_hz)?;
        let bs = BiquadCascade::design(
            Response::bandstop_centered(
                config.notch_hz,
                config.notch_half_width_hz,
                sample_rate_hz,
            ),
            sample_rate_hz,
            2,
        )?;
        Ok(Self {
            chain: hp.chain(bs),
            gain: config.gain_gamma,
        })
    }

    /// Inner-channel conditioner (DC removal).
    pub fn inner(config: &FilterConfig, sample_rate_hz: f64) -> Result<Self> {
        Self::new(config.hp_inner_hz, config, sample_rate_hz)
    }

    /// Noise-reference conditioner (removes slow artefacts below the EMG band).
    pub fn outer(config: &FilterConfig, sample_rate_hz: f64) -> Result<Self> {
        Self::new(config.hp_outer_hz, config, sample_rate_hz)
    }

    /// Same filters with unit gain, used where results stay in volts.
    pub fn unity_gain(mut self) -> Self {
        self.gain = 1.0;
        self
    }

    #[inline]
    pub fn process_sample(&mut self, raw: f64) -> f64 {
        self.gain * self.chain.process_sample(raw)
    }

    pub fn process(&mut self, raw: &[f64]) -> Vec<f64> {
        raw.iter().map(|&v| self.process_sample(v)).collect()
    }
}

/// Conditioned inputs of the adaptive filters, in volts times the gain.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedStreams {
    pub d: Vec<f64>,
    pub x: Vec<f64>,
    pub d_delayed: Vec<f64>,
    pub num_taps: usize,
    pub gain: f64,
}

impl ConditionedStreams {
    pub fn delay(&self) -> usize {
        signal_delay(self.num_taps)
    }
}

/// Runs the conditioning chain over a session, one sample at a time.
pub fn condition(session: &RecordingSession, config: &FilterConfig) -> Result<ConditionedStreams> {
    session.check()?;
    let fs = session.sample_rate_hz;
    config.validate(fs)?;
    let num_taps = resolve_num_taps(fs, config)?;
    let delay = signal_delay(num_taps);

    let mut inner = ChannelConditioner::inner(config, fs)?;
    let mut outer = ChannelConditioner::outer(config, fs)?;
    let mut delay_line = TappedDelayLine::new(delay + 1);

    let n = session.len();
    let mut d = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n);
    let mut d_delayed = Vec::with_capacity(n);
    for (&raw_d, &raw_x) in session.inner.iter().zip(&session.outer) {
        let dv = inner.process_sample(raw_d);
        d.push(dv);
        x.push(outer.process_sample(raw_x));
        d_delayed.push(delay_line.push(dv)[delay]);
    }
    Ok(ConditionedStreams {
        d,
        x,
        d_delayed,
        num_taps,
        gain: config.gain_gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};
    use std::f64::consts::PI;

    #[test]
    fn delay_line_backfills_zeros() {
        let mut line = TappedDelayLine::new(3);
        assert_eq!(line.push_and_read(1.0), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn delay_line_evicts_oldest() {
        let mut line = TappedDelayLine::new(3);
        for v in [1.0, 2.0, 3.0] {
            line.push(v);
        }
        assert_eq!(line.push_and_read(4.0), vec![4.0, 3.0, 2.0]);
    }

    #[test]
    fn last_tap_after_n_pushes_is_first_sample() {
        let n = 7;
        let mut line = TappedDelayLine::new(n);
        for i in 0..n {
            line.push(10.0 + i as f64);
        }
        assert_eq!(line.tap(n - 1), 10.0);
    }

    proptest! {
        #[test]
        fn tap_k_is_sample_pushed_k_steps_ago(
            samples in proptest::collection::vec(-1e3f64..1e3, 1..200),
            cap in 1usize..40,
        ) {
            let mut line = TappedDelayLine::new(cap);
            for (i, &s) in samples.iter().enumerate() {
                let taps = line.push(s).to_vec();
                for (k, &t) in taps.iter().enumerate() {
                    let expected = if k <= i { samples[i - k] } else { 0.0 };
                    prop_assert_eq!(t, expected);
                }
            }
        }
    }

    #[test]
    fn tap_counts_follow_sampling_ratio() {
        assert_eq!(compute_num_taps(250.0, 5.0).unwrap(), 50);
        assert_eq!(compute_num_taps(500.0, 5.0).unwrap(), 100);
        assert_eq!(compute_num_taps(500.0, 250.0).unwrap(), 2);
        assert!(compute_num_taps(500.0, 251.0).is_err());
    }

    #[test]
    fn override_takes_precedence() {
        let cfg = FilterConfig {
            num_taps_override: Some(50),
            ..FilterConfig::default()
        };
        assert_eq!(resolve_num_taps(500.0, &cfg).unwrap(), 50);
        assert_eq!(
            resolve_num_taps(500.0, &FilterConfig::default()).unwrap(),
            100
        );
    }

    #[test]
    fn odd_tap_count_floors_the_delay() {
        assert_eq!(signal_delay(51), 25);
        assert_eq!(signal_delay(50), 25);
    }

    fn session_from(inner: Vec<f64>, outer: Vec<f64>, fs: f64) -> RecordingSession {
        RecordingSession::new(fs, inner, outer, "test")
    }

    #[test]
    fn dc_is_removed_from_inner() {
        let fs = 250.0;
        let n = (10.0 * fs) as usize + 1;
        let s = session_from(vec![1e-3; n], vec![1e-3; n], fs);
        let cfg = FilterConfig::default();
        let c = condition(&s, &cfg).unwrap();
        assert!(c.d.last().unwrap().abs() < 1e-6 * cfg.gain_gamma);
    }

    #[test]
    fn mains_is_notched_on_both_channels() {
        let fs = 250.0;
        let n = (20.0 * fs) as usize;
        let tone: Vec<f64> = (0..n)
            .map(|i| 1e-4 * (2.0 * PI * 50.0 * i as f64 / fs).sin())
            .collect();
        let cfg = FilterConfig::default();
        let c = condition(&session_from(tone.clone(), tone.clone(), fs), &cfg).unwrap();
        let power = |v: &[f64]| v[n / 2..].iter().map(|x| x * x).sum::<f64>();
        let p_in = power(&tone) * cfg.gain_gamma.powi(2);
        for out in [&c.d, &c.x] {
            let att_db = 10.0 * (power(out) / p_in).log10();
            assert!(att_db <= -40.0, "{att_db}");
        }
    }

    #[test]
    fn microvolt_inputs_land_near_unit_range() {
        let fs = 500.0;
        let n = 10_000;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // +-200 uV broadband activity
        let raw: Vec<f64> = (0..n)
            .map(|_| {
                let v: f64 = StandardNormal.sample(&mut rng);
                (v * 70e-6).clamp(-200e-6, 200e-6)
            })
            .collect();
        let c = condition(
            &session_from(raw.clone(), raw, fs),
            &FilterConfig::default(),
        )
        .unwrap();
        let peak = c.d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(peak > 0.1 && peak < 0.4, "{peak}");
    }

    #[test]
    fn delayed_copy_peaks_at_half_tap_count() {
        let fs = 250.0;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let raw: Vec<f64> = (0..5000)
            .map(|_| {
                1e-5 * {
                    let v: f64 = StandardNormal.sample(&mut rng);
                    v
                }
            })
            .collect();
        let c = condition(
            &session_from(raw.clone(), raw, fs),
            &FilterConfig::default(),
        )
        .unwrap();
        assert_eq!(c.num_taps, 50);
        let delay = c.delay();
        assert!(c.d_delayed[..delay].iter().all(|&v| v == 0.0));
        for n in delay..c.d.len() {
            assert_eq!(c.d_delayed[n], c.d[n - delay]);
        }
        let xcorr = |lag: usize| -> f64 {
            (lag..c.d.len())
                .map(|n| c.d[n - lag] * c.d_delayed[n])
                .sum()
        };
        let best = (0..2 * delay)
            .max_by(|&a, &b| xcorr(a).total_cmp(&xcorr(b)))
            .unwrap();
        assert_eq!(best, delay);
    }

    #[test]
    fn conditioning_is_deterministic() {
        let fs = 250.0;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let raw: Vec<f64> = (0..3000)
            .map(|_| {
                1e-5 * {
                    let v: f64 = StandardNormal.sample(&mut rng);
                    v
                }
            })
            .collect();
        let s = session_from(raw.clone(), raw.iter().map(|v| 0.5 * v).collect(), fs);
        let cfg = FilterConfig::default();
        assert_eq!(condition(&s, &cfg).unwrap(), condition(&s, &cfg).unwrap());
    }
}
