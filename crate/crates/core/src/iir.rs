//! Butterworth IIR design and per-sample execution as cascaded biquads.
//!
//! Designs go through the analog Butterworth prototype, the usual
//! lowpass/highpass/bandpass/bandstop frequency transforms and the bilinear
//! transform with pre-warped band edges, so the digital -3 dB points land
//! exactly on the requested frequencies. Band designs of order `n` produce
//! `2n` poles (`n` biquads), matching the usual convention of DSP libraries.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Frequency response shape and its edge frequencies in Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Response {
    Lowpass { cutoff_hz: f64 },
    Highpass { cutoff_hz: f64 },
    Bandpass { low_hz: f64, high_hz: f64 },
    Bandstop { low_hz: f64, high_hz: f64 },
}

impl Response {
    /// Band-pass whose warped geometric center lands exactly on `center_hz`.
    pub fn bandpass_centered(center_hz: f64, half_width_hz: f64, sample_rate_hz: f64) -> Self {
        let (low_hz, high_hz) = centered_band_edges(center_hz, half_width_hz, sample_rate_hz);
        Response::Bandpass { low_hz, high_hz }
    }

    /// Band-stop with its null exactly on `center_hz`.
    pub fn bandstop_centered(center_hz: f64, half_width_hz: f64, sample_rate_hz: f64) -> Self {
        let (low_hz, high_hz) = centered_band_edges(center_hz, half_width_hz, sample_rate_hz);
        Response::Bandstop { low_hz, high_hz }
    }
}

/// Band edges whose pre-warped geometric mean is the warped `center_hz` and
/// whose pre-warped width equals that of `center_hz +- half_width_hz`.
///
/// Symmetric edges in Hz would put the null of a band-stop slightly below
/// the center after warping; this keeps it on the center. Edges falling
/// outside `(0, fs/2)` are returned unchanged so design reports them.
pub fn centered_band_edges(center_hz: f64, half_width_hz: f64, sample_rate_hz: f64) -> (f64, f64) {
    let (lo, hi) = (center_hz - half_width_hz, center_hz + half_width_hz);
    let nyquist = sample_rate_hz / 2.0;
    if !(lo > 0.0 && hi < nyquist && sample_rate_hz > 0.0) {
        return (lo, hi);
    }
    let warp = |f: f64| (PI * f / sample_rate_hz).tan();
    let unwarp = |w: f64| w.atan() * sample_rate_hz / PI;
    let wc = warp(center_hz);
    let bw = warp(hi) - warp(lo);
    let w1 = (-bw + (bw * bw + 4.0 * wc * wc).sqrt()) / 2.0;
    (unwarp(w1), unwarp(w1 + bw))
}

/// What a cascade was designed for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Design {
    pub response: Response,
    pub sample_rate_hz: f64,
    pub order: usize,
}

/// One second-order section in transposed direct form II.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
    s1: f64,
    s2: f64,
}

impl Biquad {
    pub fn new(b0: f64, b1: f64, b2: f64, a1: f64, a2: f64) -> Self {
        Self {
            b0,
            b1,
            b2,
            a1,
            a2,
            s1: 0.0,
            s2: 0.0,
        }
    }

    #[inline]
    pub fn process_sample(&mut self, x: f64) -> f64 {
        let y = self.b0 * x + self.s1;
        self.s1 = self.b1 * x - self.a1 * y + self.s2;
        self.s2 = self.b2 * x - self.a2 * y;
        y
    }

    pub fn reset(&mut self) {
        self.s1 = 0.0;
        self.s2 = 0.0;
    }

    pub fn state(&self) -> (f64, f64) {
        (self.s1, self.s2)
    }

    /// Poles strictly inside the unit circle (stability triangle).
    pub fn is_stable(&self) -> bool {
        self.a2.abs() < 1.0 && self.a1.abs() < 1.0 + self.a2
    }

    /// Transfer function evaluated at normalized angular frequency `w` (rad/sample).
    pub fn response(&self, w: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -w);
        let z2 = z1 * z1;
        (self.b0 + self.b1 * z1 + self.b2 * z2) / (1.0 + self.a1 * z1 + self.a2 * z2)
    }
}

/// A chain of biquads with its own state. An empty chain is the identity.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BiquadCascade {
    sections: Vec<Biquad>,
    design: Option<Design>,
}

impl BiquadCascade {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn from_sections(sections: Vec<Biquad>) -> Self {
        Self {
            sections,
            design: None,
        }
    }

    /// Designs a Butterworth filter of the given prototype order.
    pub fn design(response: Response, sample_rate_hz: f64, order: usize) -> Result<Self> {
        let sections = butterworth_sections(response, sample_rate_hz, order)?;
        Ok(Self {
            sections,
            design: Some(Design {
                response,
                sample_rate_hz,
                order,
            }),
        })
    }

    pub fn lowpass(cutoff_hz: f64, sample_rate_hz: f64) -> Result<Self> {
        Self::design(Response::Lowpass { cutoff_hz }, sample_rate_hz, 2)
    }

    pub fn highpass(cutoff_hz: f64, sample_rate_hz: f64) -> Result<Self> {
        Self::design(Response::Highpass { cutoff_hz }, sample_rate_hz, 2)
    }

    pub fn bandpass(low_hz: f64, high_hz: f64, sample_rate_hz: f64) -> Result<Self> {
        Self::design(Response::Bandpass { low_hz, high_hz }, sample_rate_hz, 2)
    }

    pub fn bandstop(low_hz: f64, high_hz: f64, sample_rate_hz: f64) -> Result<Self> {
        Self::design(Response::Bandstop { low_hz, high_hz }, sample_rate_hz, 2)
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    pub fn design_descriptor(&self) -> Option<&Design> {
        self.design.as_ref()
    }

    /// Appends `other`'s sections, so the result filters through `self` then `other`.
    pub fn chain(mut self, other: BiquadCascade) -> Self {
        self.sections.extend(other.sections);
        self.design = None;
        self
    }

    #[inline]
    pub fn process_sample(&mut self, x: f64) -> f64 {
        self.sections
            .iter_mut()
            .fold(x, |acc, s| s.process_sample(acc))
    }

    pub fn process(&mut self, input: &[f64]) -> Vec<f64> {
        input.iter().map(|&x| self.process_sample(x)).collect()
    }

    pub fn reset(&mut self) {
        self.sections.iter_mut().for_each(Biquad::reset);
    }

    pub fn is_stable(&self) -> bool {
        self.sections.iter().all(Biquad::is_stable)
    }

    /// Complex frequency response at `freq_hz` for a sampling rate `sample_rate_hz`.
    pub fn response_at(&self, freq_hz: f64, sample_rate_hz: f64) -> Complex64 {
        let w = 2.0 * PI * freq_hz / sample_rate_hz;
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(w))
    }

    pub fn magnitude_db_at(&self, freq_hz: f64, sample_rate_hz: f64) -> f64 {
        20.0 * self.response_at(freq_hz, sample_rate_hz).norm().log10()
    }
}

fn check_edge(f: f64, nyquist: f64) -> Result<()> {
    if f > 0.0 && f < nyquist {
        Ok(())
    } else {
        Err(Error::CutoffOutOfRange {
            cutoff_hz: f,
            nyquist_hz: nyquist,
        })
    }
}

fn butterworth_sections(response: Response, fs: f64, order: usize) -> Result<Vec<Biquad>> {
    if !(fs > 0.0) || !fs.is_finite() {
        return Err(Error::NonPositiveSampleRate(fs));
    }
    if order == 0 {
        return Err(Error::InvalidParameter {
            name: "order",
            reason: "filter order must be at least 1".into(),
        });
    }
    let nyquist = fs / 2.0;
    match response {
        Response::Lowpass { cutoff_hz } | Response::Highpass { cutoff_hz } => {
            check_edge(cutoff_hz, nyquist)?
        }
        Response::Bandpass { low_hz, high_hz } | Response::Bandstop { low_hz, high_hz } => {
            check_edge(low_hz, nyquist)?;
            check_edge(high_hz, nyquist)?;
            if low_hz >= high_hz {
                return Err(Error::BandEdgesInverted { low_hz, high_hz });
            }
        }
    }

    let two_fs = 2.0 * fs;
    let warp = |f: f64| two_fs * (PI * f / fs).tan();
    let prototype: Vec<Complex64> = (0..order)
        .map(|k| {
            let theta = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
            Complex64::from_polar(1.0, theta)
        })
        .collect();

    // analog poles, then numerator shape and the reference point for unit gain
    let (analog, numerator, reference_w): (Vec<Complex64>, Numerator, f64) = match response {
        Response::Lowpass { cutoff_hz } => {
            let wc = warp(cutoff_hz);
            (
                prototype.iter().map(|p| p * wc).collect(),
                Numerator::Lowpass,
                0.0,
            )
        }
        Response::Highpass { cutoff_hz } => {
            let wc = warp(cutoff_hz);
            (
                prototype.iter().map(|p| wc / p).collect(),
                Numerator::Highpass,
                PI,
            )
        }
        Response::Bandpass { low_hz, high_hz } | Response::Bandstop { low_hz, high_hz } => {
            let (w1, w2) = (warp(low_hz), warp(high_hz));
            let bw = w2 - w1;
            let w0 = (w1 * w2).sqrt();
            let center = 2.0 * (w0 / two_fs).atan();
            let bandpass = matches!(response, Response::Bandpass { .. });
            let mut poles = Vec::with_capacity(2 * order);
            for p in &prototype {
                let q = if bandpass {
                    p * bw / 2.0
                } else {
                    bw / (2.0 * p)
                };
                let disc = (q * q - w0 * w0).sqrt();
                poles.push(q + disc);
                poles.push(q - disc);
            }
            if bandpass {
                (poles, Numerator::Bandpass, center)
            } else {
                (poles, Numerator::Bandstop(center), 0.0)
            }
        }
    };

    let digital: Vec<Complex64> = analog.iter().map(|s| (two_fs + s) / (two_fs - s)).collect();

    const IMAG_TOL: f64 = 1e-10;
    let mut sections = Vec::new();
    let mut real_poles = Vec::new();
    for p in &digital {
        if p.im > IMAG_TOL {
            sections.push(numerator.section(-2.0 * p.re, p.norm_sqr(), true));
        } else if p.im.abs() <= IMAG_TOL {
            real_poles.push(p.re);
        }
    }
    real_poles.sort_by(|a, b| a.total_cmp(b));
    for pair in real_poles.chunks(2) {
        match *pair {
            [p1, p2] => sections.push(numerator.section(-(p1 + p2), p1 * p2, true)),
            [p] => sections.push(numerator.section(-p, 0.0, false)),
            _ => unreachable!(),
        }
    }

    for s in &mut sections {
        let g = s.response(reference_w).norm();
        s.b0 /= g;
        s.b1 /= g;
        s.b2 /= g;
    }
    Ok(sections)
}

#[derive(Debug, Clone, Copy)]
enum Numerator {
    Lowpass,
    Highpass,
    Bandpass,
    /// Notch zeros at the given normalized angular frequency.
    Bandstop(f64),
}

impl Numerator {
    fn section(self, a1: f64, a2: f64, second_order: bool) -> Biquad {
        let (b0, b1, b2) = match (self, second_order) {
            (Numerator::Lowpass, true) => (1.0, 2.0, 1.0),
            (Numerator::Lowpass, false) => (1.0, 1.0, 0.0),
            (Numerator::Highpass, true) => (1.0, -2.0, 1.0),
            (Numerator::Highpass, false) => (1.0, -1.0, 0.0),
            (Numerator::Bandpass, _) => (1.0, 0.0, -1.0),
            (Numerator::Bandstop(w), _) => (1.0, -2.0 * w.cos(), 1.0),
        };
        Biquad::new(b0, b1, b2, a1, a2)
    }
}
