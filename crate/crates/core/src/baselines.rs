//! Comparison filters: an LMS-tuned adaptive FIR and the Laplace subtraction.

use crate::error::{Error, Result};
use crate::preprocessing::ChannelConditioner;
use crate::types::{FilterConfig, RecordingSession};

/// Output of one LMS step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmsStep {
    pub remover: f64,
    pub output: f64,
}

/// Adaptive FIR filter tuned by least mean squares.
#[derive(Debug, Clone, PartialEq)]
pub struct LmsFilter {
    weights: Vec<f64>,
    mu: f64,
}

impl LmsFilter {
    pub fn new(num_taps: usize, mu: f64) -> Result<Self> {
        if num_taps == 0 {
            return Err(Error::InvalidParameter {
                name: "num_taps",
                reason: "LMS filter needs at least one tap".into(),
            });
        }
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParameter {
                name: "mu",
                reason: format!("step size must be finite and non-negative, got {mu}"),
            });
        }
        Ok(Self {
            weights: vec![0.0; num_taps],
            mu,
        })
    }

    /// Like [`LmsFilter::new`] but rejects step sizes beyond `2 / (N * P)`.
    pub fn with_stability_guard(num_taps: usize, mu: f64, mean_power: f64) -> Result<Self> {
        let bound = stability_bound(num_taps, mean_power);
        if mu >= bound {
            return Err(Error::UnstableStepSize { mu, bound });
        }
        Self::new(num_taps, mu)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn num_taps(&self) -> usize {
        self.weights.len()
    }

    pub fn step(&mut self, d_delayed: f64, taps: &[f64]) -> Result<LmsStep> {
        if taps.len() != self.weights.len() {
            return Err(Error::TapCountMismatch {
                expected: self.weights.len(),
                got: taps.len(),
            });
        }
        let remover: f64 = self.weights.iter().zip(taps).map(|(w, x)| w * x).sum();
        let output = d_delayed - remover;
        let g = self.mu * output;
        let mut finite = true;
        for (w, x) in self.weights.iter_mut().zip(taps) {
            *w += g * x;
            finite &= w.is_finite();
        }
        if !finite {
            return Err(Error::Divergence { layer: 0 });
        }
        Ok(LmsStep { remover, output })
    }
}

/// Default LMS step size: the network learning rate spread over the taps.
pub fn default_mu(eta: f64, num_taps: usize) -> f64 {
    eta / num_taps as f64
}

/// Classical LMS stability bound `2 / (N * P)` for input power `P`.
pub fn stability_bound(num_taps: usize, mean_power: f64) -> f64 {
    if mean_power > 0.0 {
        2.0 / (num_taps as f64 * mean_power)
    } else {
        f64::INFINITY
    }
}

/// Laplace operator output in volts.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceOutput {
    pub output: Vec<f64>,
}

/// Subtracts the raw outer channel from the raw inner one, then removes DC
/// and mains from the difference.
pub fn laplace(session: &RecordingSession, config: &FilterConfig) -> Result<LaplaceOutput> {
    session.check()?;
    let fs = session.sample_rate_hz;
    config.validate(fs)?;
    let mut cond = ChannelConditioner::inner(config, fs)?.unity_gain();
    let output = session
        .inner
        .iter()
        .zip(&session.outer)
        .map(|(d, x)| cond.process_sample(d - x))
        .collect();
    Ok(LaplaceOutput { output })
}
