//! Shared vocabulary: recordings and run configuration.
//!
//! All samples are stored in volts. Files that carry microvolts are converted
//! on ingestion (see [`crate::io`]).

use crate::error::{Error, Result};

/// A two-channel recording from a compound electrode.
///
/// `inner` is the signal-plus-noise channel, `outer` the ring electrode that
/// serves as the noise reference.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordingSession {
    pub sample_rate_hz: f64,
    pub inner: Vec<f64>,
    pub outer: Vec<f64>,
    /// Sample indices of stimulus onsets, if the session had any.
    pub triggers: Option<Vec<usize>>,
    pub label: String,
}

impl RecordingSession {
    pub fn new(
        sample_rate_hz: f64,
        inner: Vec<f64>,
        outer: Vec<f64>,
        label: impl Into<String>,
    ) -> Self {
        Self {
            sample_rate_hz,
            inner,
            outer,
            triggers: None,
            label: label.into(),
        }
    }

    pub fn with_triggers(mut self, triggers: Vec<usize>) -> Self {
        self.triggers = Some(triggers);
        self
    }

    pub fn len(&self) -> usize {
        self.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.sample_rate_hz
    }

    /// Checks the session invariants and hands the session back unchanged.
    pub fn validate(self) -> Result<Self> {
        self.check()?;
        Ok(self)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.sample_rate_hz > 0.0) || !self.sample_rate_hz.is_finite() {
            return Err(Error::NonPositiveSampleRate(self.sample_rate_hz));
        }
        if self.inner.len() != self.outer.len() {
            return Err(Error::LengthMismatch {
                inner: self.inner.len(),
                outer: self.outer.len(),
            });
        }
        if self.inner.is_empty() {
            return Err(Error::EmptyRecording);
        }
        if let Some(triggers) = &self.triggers {
            let len = self.inner.len();
            if let Some((position, &index)) = triggers.iter().enumerate().find(|(_, &t)| t >= len) {
                return Err(Error::TriggerOutOfRange {
                    index,
                    position,
                    len,
                });
            }
        }
        Ok(())
    }
}

/// Validates a session, returning it unchanged when every invariant holds.
pub fn validate_session(session: RecordingSession) -> Result<RecordingSession> {
    session.validate()
}

/// How the network weights are drawn at start-up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightInit {
    /// Uniform on (0, 1].
    #[default]
    UnitInterval,
    /// Uniform on (-1, 1].
    Symmetric,
}

/// Parameters of the conditioning chain and the adaptive filters.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    /// Gain applied after conditioning so network inputs land near +-0.2.
    pub gain_gamma: f64,
    pub hp_inner_hz: f64,
    pub hp_outer_hz: f64,
    pub notch_hz: f64,
    /// Half-bandwidth of the mains band-stop.
    pub notch_half_width_hz: f64,
    pub learning_rate_eta: f64,
    pub num_layers: usize,
    pub num_taps_override: Option<usize>,
    pub rng_seed: u64,
    pub weight_init: WeightInit,
    /// LMS step size; `None` derives it from `eta / num_taps`.
    pub lms_mu: Option<f64>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self::jaw_clench()
    }
}

impl FilterConfig {
    /// Learning rate used for the muscle-noise (jaw clench) recordings.
    pub const ETA_JAW: f64 = 2.5;
    /// Learning rate used for the P300 oddball recordings.
    pub const ETA_P300: f64 = 10.0;

    /// Defaults for EMG-contaminated recordings.
    pub fn jaw_clench() -> Self {
        Self {
            gain_gamma: 1000.0,
            hp_inner_hz: 0.5,
            hp_outer_hz: 5.0,
            notch_hz: 50.0,
            notch_half_width_hz: 2.5,
            learning_rate_eta: Self::ETA_JAW,
            num_layers: 6,
            num_taps_override: None,
            rng_seed: 42,
            weight_init: WeightInit::UnitInterval,
            lms_mu: None,
        }
    }

    /// Defaults for the evoked-potential sessions; only the learning rate differs.
    pub fn p300() -> Self {
        Self {
            learning_rate_eta: Self::ETA_P300,
            ..Self::jaw_clench()
        }
    }

    pub fn validate(&self, sample_rate_hz: f64) -> Result<()> {
        if !(sample_rate_hz > 0.0) {
            return Err(Error::NonPositiveSampleRate(sample_rate_hz));
        }
        let nyquist = sample_rate_hz / 2.0;
        for f in [self.hp_inner_hz, self.hp_outer_hz, self.notch_hz] {
            if !(f > 0.0 && f < nyquist) {
                return Err(Error::CutoffOutOfRange {
                    cutoff_hz: f,
                    nyquist_hz: nyquist,
                });
            }
        }
        if !(self.notch_half_width_hz > 0.0) {
            return Err(Error::InvalidParameter {
                name: "notch_half_width_hz",
                reason: format!("must be positive, got {}", self.notch_half_width_hz),
            });
        }
        if !(self.learning_rate_eta > 0.0) || !self.learning_rate_eta.is_finite() {
            return Err(Error::InvalidParameter {
                name: "learning_rate_eta",
                reason: format!("must be positive, got {}", self.learning_rate_eta),
            });
        }
        if self.num_layers < 2 {
            return Err(Error::InvalidParameter {
                name: "num_layers",
                reason: format!("need at least 2 layers, got {}", self.num_layers),
            });
        }
        if !(self.gain_gamma > 0.0) {
            return Err(Error::InvalidParameter {
                name: "gain_gamma",
                reason: format!("must be positive, got {}", self.gain_gamma),
            });
        }
        if let Some(mu) = self.lms_mu {
            if !(mu > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "lms_mu",
                    reason: format!("must be positive, got {mu}"),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn session(inner: usize, outer: usize) -> RecordingSession {
        RecordingSession::new(250.0, vec![0.0; inner], vec![0.0; outer], "t")
    }

    #[test]
    fn equal_channels_without_triggers_validate() {
        let s = session(10, 10);
        assert_eq!(s.clone().validate().unwrap(), s);
    }

    #[test]
    fn length_mismatch_is_reported() {
        let err = session(10, 9).validate().unwrap_err();
        assert_eq!(
            err,
            Error::LengthMismatch {
                inner: 10,
                outer: 9
            }
        );
        assert!(err.to_string().contains("length mismatch"));
    }

    #[test]
    fn trigger_at_length_is_out_of_range() {
        let err = session(10, 10)
            .with_triggers(vec![0, 10])
            .validate()
            .unwrap_err();
        assert_eq!(
            err,
            Error::TriggerOutOfRange {
                index: 10,
                position: 1,
                len: 10
            }
        );
        assert!(err.to_string().contains("trigger out of range"));
        assert!(session(10, 10).with_triggers(vec![9]).validate().is_ok());
    }

    #[test]
    fn sample_rate_must_be_positive() {
        let mut s = session(3, 3);
        s.sample_rate_hz = 0.0;
        assert!(matches!(s.validate(), Err(Error::NonPositiveSampleRate(_))));
    }

    #[test]
    fn validation_is_idempotent() {
        let s = session(5, 5).with_triggers(vec![1, 3]);
        let once = validate_session(s).unwrap();
        let twice = validate_session(once.clone()).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn config_rejects_out_of_range_frequencies() {
        let cfg = FilterConfig::default();
        assert!(cfg.validate(250.0).is_ok());
        // 50 Hz notch is not below Nyquist at 100 Hz
        assert!(matches!(
            cfg.validate(100.0),
            Err(Error::CutoffOutOfRange { .. })
        ));
        let bad = FilterConfig {
            num_layers: 1,
            ..FilterConfig::default()
        };
        assert!(bad.validate(250.0).is_err());
        let zero_eta = FilterConfig {
            learning_rate_eta: 0.0,
            ..FilterConfig::default()
        };
        assert!(zero_eta.validate(250.0).is_err());
    }

    #[test]
    fn p300_preset_only_changes_eta() {
        let jaw = FilterConfig::jaw_clench();
        let p300 = FilterConfig::p300();
        assert_eq!(p300.learning_rate_eta, 10.0);
        assert_eq!(
            FilterConfig {
                learning_rate_eta: jaw.learning_rate_eta,
                ..p300
            },
            jaw
        );
    }
}
