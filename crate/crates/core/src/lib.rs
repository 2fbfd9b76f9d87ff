//! Streaming adaptive noise cancellation with a deep neural filter.
//!
//! A noise reference (the outer ring of a compound electrode) feeds a tapped
//! delay line and a bias-free tanh funnel network. The network output, the
//! "remover", is subtracted from the delayed inner electrode signal; the
//! difference is both the cleaned signal and the training error, so the
//! network keeps learning on every sample.
//!
//! Alongside the network live the comparison filters (LMS-tuned FIR and the
//! Laplace subtraction), the conditioning chain, Welch-based SNR analysis and
//! a synthetic EEG/EMG simulator for end-to-end checks.

// negated comparisons are how NaN parameters get rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod baselines;
pub mod error;
pub mod iir;
pub mod io;
pub mod network;
pub mod pipeline;
pub mod plot;
pub mod preprocessing;
pub mod report;
pub mod simulator;
pub mod stats;
pub mod types;

pub use analysis::{
    delta_snr, event_average, noise_power, p300_signal_power, snr, welch_psd, FilterId,
    Periodogram, SnrReport,
};
pub use error::{Error, ErrorKind, Result};
pub use iir::{centered_band_edges, BiquadCascade, Response};
pub use io::{ingest, Ingested};
pub use network::{gradient_check, layer_sizes, DnfNetwork, DnfStepOutput};
pub use pipeline::{evaluate_recording, run_filter, EvokedWindow, FilterKind, FilterRun};
pub use preprocessing::{compute_num_taps, condition, ConditionedStreams, TappedDelayLine};
pub use report::{write_report, ReportData};
pub use simulator::{
    recovered_amplitude, run_cohort, simulate, CohortConfig, SimConfig, SimSession,
};
pub use stats::{paired_significance, PairedTest};
pub use types::{validate_session, FilterConfig, RecordingSession, WeightInit};
