//! End-to-end filter runs over a recording session.

use std::fmt;
use std::str::FromStr;

use crate::analysis::{
    event_average, noise_power, p300_signal_power_in, snr, welch_psd, FilterId, Periodogram,
    SnrReport, NOISE_BAND_HZ, P300_WINDOW_MS,
};
use crate::baselines::{default_mu, laplace, LmsFilter};
use crate::error::{Error, Result};
use crate::network::DnfNetwork;
use crate::preprocessing::{condition, ConditionedStreams, TappedDelayLine};
use crate::types::{FilterConfig, RecordingSession};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FilterKind {
    Dnf,
    Lms,
    Laplace,
}

impl FilterKind {
    pub const ALL: [FilterKind; 3] = [FilterKind::Dnf, FilterKind::Lms, FilterKind::Laplace];

    pub fn as_str(self) -> &'static str {
        match self {
            FilterKind::Dnf => "dnf",
            FilterKind::Lms => "lms",
            FilterKind::Laplace => "laplace",
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dnf" => Ok(FilterKind::Dnf),
            "lms" => Ok(FilterKind::Lms),
            "laplace" => Ok(FilterKind::Laplace),
            other => Err(Error::InvalidParameter {
                name: "filter",
                reason: format!("unknown filter `{other}` (expected dnf, lms or laplace)"),
            }),
        }
    }
}

/// Weight distances from the initial weights, sampled every so often.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSample {
    pub sample: usize,
    /// One entry per layer (a single entry for LMS).
    pub distances: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    /// Mean over samples of the fraction of hidden neurons with `tanh' < 0.1`.
    pub saturation_fraction: f64,
    pub num_taps: usize,
    pub layer_sizes: Vec<usize>,
}

/// Result of running one filter over a session.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterRun {
    pub kind: FilterKind,
    /// Cleaned signal in volts.
    pub output: Vec<f64>,
    /// Remover in volts; empty for Laplace.
    pub remover: Vec<f64>,
    /// Output delay relative to the input, in samples.
    pub latency: usize,
    pub weight_trace: Vec<WeightSample>,
    pub diagnostics: Diagnostics,
}

/// Runs the chosen filter, tracing weights once per second of signal.
pub fn run_filter(
    session: &RecordingSession,
    config: &FilterConfig,
    kind: FilterKind,
) -> Result<FilterRun> {
    let every = (session.sample_rate_hz.round() as usize).max(1);
    run_filter_traced(session, config, kind, every)
}

pub fn run_filter_traced(
    session: &RecordingSession,
    config: &FilterConfig,
    kind: FilterKind,
    trace_every: usize,
) -> Result<FilterRun> {
    if kind == FilterKind::Laplace {
        let out = laplace(session, config)?;
        return Ok(FilterRun {
            kind,
            output: out.output,
            remover: Vec::new(),
            latency: 0,
            weight_trace: Vec::new(),
            diagnostics: Diagnostics::default(),
        });
    }
    let streams = condition(session, config)?;
    run_adaptive(&streams, config, kind, trace_every.max(1))
}

/// Runs DNF or LMS over already conditioned streams.
pub fn run_adaptive(
    streams: &ConditionedStreams,
    config: &FilterConfig,
    kind: FilterKind,
    trace_every: usize,
) -> Result<FilterRun> {
    let n_taps = streams.num_taps;
    let inv_gain = 1.0 / streams.gain;
    let n = streams.x.len();
    let mut line = TappedDelayLine::new(n_taps);
    let mut output = Vec::with_capacity(n);
    let mut remover = Vec::with_capacity(n);
    let mut trace = Vec::new();
    let mut diagnostics = Diagnostics {
        num_taps: n_taps,
        ..Diagnostics::default()
    };

    match kind {
        FilterKind::Dnf => {
            let mut net = DnfNetwork::new(
                n_taps,
                config.num_layers,
                config.learning_rate_eta,
                config.rng_seed,
                config.weight_init,
            )?;
            diagnostics.layer_sizes = net.layer_sizes().to_vec();
            let mut saturated = 0.0;
            for (i, (&x, &d)) in streams.x.iter().zip(&streams.d_delayed).enumerate() {
                let taps = line.push(x);
                let step = net.learn_step(d, taps)?;
                saturated += 1.0 - net.hidden_fraction_above(0.1);
                output.push(step.output * inv_gain);
                remover.push(step.remover * inv_gain);
                if (i + 1) % trace_every == 0 {
                    trace.push(WeightSample {
                        sample: i + 1,
                        distances: net.weight_distance(),
                    });
                }
            }
            diagnostics.saturation_fraction = if n > 0 { saturated / n as f64 } else { 0.0 };
        }
        FilterKind::Lms => {
            let mu = config
                .lms_mu
                .unwrap_or_else(|| default_mu(config.learning_rate_eta, n_taps));
            let mut lms = LmsFilter::new(n_taps, mu)?;
            diagnostics.layer_sizes = vec![n_taps, 1];
            for (i, (&x, &d)) in streams.x.iter().zip(&streams.d_delayed).enumerate() {
                let taps = line.push(x);
                let step = lms.step(d, taps)?;
                output.push(step.output * inv_gain);
                remover.push(step.remover * inv_gain);
                if (i + 1) % trace_every == 0 {
                    let dist = lms.weights().iter().map(|w| w * w).sum::<f64>().sqrt();
                    trace.push(WeightSample {
                        sample: i + 1,
                        distances: vec![dist],
                    });
                }
            }
        }
        FilterKind::Laplace => {
            return Err(Error::InvalidParameter {
                name: "kind",
                reason: "laplace is not an adaptive filter".into(),
            })
        }
    }
    Ok(FilterRun {
        kind,
        output,
        remover,
        latency: streams.delay(),
        weight_trace: trace,
        diagnostics,
    })
}

/// Conditioned inner channel in volts, the reference the filters are compared against.
pub fn conditioned_inner(session: &RecordingSession, config: &FilterConfig) -> Result<Vec<f64>> {
    let streams = condition(session, config)?;
    let inv = 1.0 / streams.gain;
    Ok(streams.d.iter().map(|v| v * inv).collect())
}

/// Event window and evoked-response interval used on real recordings, in ms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvokedWindow {
    pub pre_ms: f64,
    pub post_ms: f64,
    pub lo_ms: f64,
    pub hi_ms: f64,
}

impl Default for EvokedWindow {
    fn default() -> Self {
        Self {
            pre_ms: 0.0,
            post_ms: 1000.0,
            lo_ms: P300_WINDOW_MS.0,
            hi_ms: P300_WINDOW_MS.1,
        }
    }
}

/// SNR of one signal of a recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Measured {
    pub report: SnrReport,
    /// Change relative to the inner electrode; 0 for the inner row.
    pub delta_db: f64,
    pub psd: Periodogram,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordingEvaluation {
    /// Inner first, then the filters in the order requested.
    pub measures: Vec<Measured>,
    pub runs: Vec<FilterRun>,
}

fn filter_id(kind: FilterKind) -> FilterId {
    match kind {
        FilterKind::Dnf => FilterId::Dnf,
        FilterKind::Lms => FilterId::Lms,
        FilterKind::Laplace => FilterId::Laplace,
    }
}

fn measure_evoked(
    v: &[f64],
    triggers: &[usize],
    latency: usize,
    fs: f64,
    window: &EvokedWindow,
    id: FilterId,
) -> Result<(SnrReport, Periodogram)> {
    let shifted: Vec<usize> = triggers.iter().map(|t| t + latency).collect();
    let avg = event_average(v, &shifted, window.pre_ms, window.post_ms, fs)?;
    let signal = p300_signal_power_in(&avg, window.lo_ms, window.hi_ms)?;
    let psd = welch_psd(v, fs)?;
    let noise = noise_power(&psd, NOISE_BAND_HZ.0, NOISE_BAND_HZ.1)?;
    Ok((snr(signal, noise, id)?, psd))
}

/// Runs the filters on a triggered recording and measures evoked-response SNR.
pub fn evaluate_recording(
    session: &RecordingSession,
    config: &FilterConfig,
    filters: &[FilterKind],
    window: &EvokedWindow,
) -> Result<RecordingEvaluation> {
    let triggers = session
        .triggers
        .as_deref()
        .filter(|t| !t.is_empty())
        .ok_or(Error::NoUsableTriggers { skipped: 0 })?;
    let fs = session.sample_rate_hz;
    let inner = conditioned_inner(session, config)?;
    let (inner_report, inner_psd) =
        measure_evoked(&inner, triggers, 0, fs, window, FilterId::Inner)?;
    let mut measures = vec![Measured {
        report: inner_report,
        delta_db: 0.0,
        psd: inner_psd,
    }];
    let mut runs = Vec::new();
    for &kind in filters {
        let run = run_filter(session, config, kind)?;
        let (report, psd) = measure_evoked(
            &run.output,
            triggers,
            run.latency,
            fs,
            window,
            filter_id(kind),
        )?;
        measures.push(Measured {
            delta_db: report.snr_db - inner_report.snr_db,
            report,
            psd,
        });
        runs.push(run);
    }
    Ok(RecordingEvaluation { measures, runs })
}
