//! The deep neural filter: a bias-free tanh funnel trained online, one sample
//! at a time, to produce a remover signal from the noise-reference taps.
//!
//! Layer `0` maps the `N` taps onto `I(1)` neurons, layer `l` maps `I(l)` onto
//! `I(l + 1)`, and the last layer holds a single neuron whose activation is the
//! remover `y`. The error `e = d_delayed - y` is both the filter output and the
//! output-neuron delta; hidden deltas pick up the `tanh'` factor as usual and
//! every weight moves by `eta * a_prev * delta` right after the forward pass.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::types::WeightInit;

/// Funnel layer widths: `I(l) = floor(N / b^(l-1))` with `b = N^(1/(L-1))`.
pub fn layer_sizes(num_taps: usize, num_layers: usize) -> Result<Vec<usize>> {
    if num_taps < 2 {
        return Err(Error::InvalidParameter {
            name: "num_taps",
            reason: format!("need at least 2 taps, got {num_taps}"),
        });
    }
    if num_layers < 2 {
        return Err(Error::InvalidParameter {
            name: "num_layers",
            reason: format!("need at least 2 layers, got {num_layers}"),
        });
    }
    if num_taps < num_layers {
        return Err(Error::InvalidParameter {
            name: "num_layers",
            reason: format!("{num_layers} layers cannot funnel down from {num_taps} taps"),
        });
    }
    let n = num_taps as f64;
    let b = (n.ln() / (num_layers - 1) as f64).exp();
    let mut sizes: Vec<usize> = (0..num_layers)
        .map(|l| {
            // b^(L-1) == N in exact arithmetic; keep exact quotients from rounding down
            let v = n / b.powi(l as i32);
            ((v + 1e-9).floor() as usize).max(1)
        })
        .collect();
    sizes[0] = num_taps;
    *sizes.last_mut().unwrap() = 1;
    Ok(sizes)
}

/// Result of one online learning step.
#[derive(Debug, Clone, PartialEq)]
pub struct DnfStepOutput {
    /// Network output `y`.
    pub remover: f64,
    /// `d_delayed - y`: the cleaned sample and the training error.
    pub output: f64,
    pub weight_distances: Option<Vec<f64>>,
}

/// Fully connected bias-free tanh network with online backpropagation.
#[derive(Debug, Clone, PartialEq)]
pub struct DnfNetwork {
    num_inputs: usize,
    layer_sizes: Vec<usize>,
    /// Row-major `out x in` matrices, one per layer.
    weights: Vec<Vec<f64>>,
    initial_weights: Vec<Vec<f64>>,
    pre_activations: Vec<Vec<f64>>,
    activations: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
    input: Vec<f64>,
    eta: f64,
}

impl DnfNetwork {
    /// Builds a funnel network for `num_taps` inputs with freshly drawn weights.
    pub fn new(
        num_taps: usize,
        num_layers: usize,
        eta: f64,
        rng_seed: u64,
        init: WeightInit,
    ) -> Result<Self> {
        let sizes = layer_sizes(num_taps, num_layers)?;
        Self::with_layer_sizes(num_taps, sizes, eta, rng_seed, init)
    }

    /// Arbitrary non-increasing widths ending in one neuron.
    pub fn with_layer_sizes(
        num_inputs: usize,
        layer_sizes: Vec<usize>,
        eta: f64,
        rng_seed: u64,
        init: WeightInit,
    ) -> Result<Self> {
        if num_inputs == 0 || layer_sizes.is_empty() || layer_sizes.contains(&0) {
            return Err(Error::InvalidParameter {
                name: "layer_sizes",
                reason: "every layer and the input need at least one unit".into(),
            });
        }
        if *layer_sizes.last().unwrap() != 1 {
            return Err(Error::InvalidParameter {
                name: "layer_sizes",
                reason: "the output layer must hold exactly one neuron".into(),
            });
        }
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(Error::InvalidParameter {
                name: "eta",
                reason: format!("learning rate must be finite and non-negative, got {eta}"),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let mut fan_in = num_inputs;
        let mut weights = Vec::with_capacity(layer_sizes.len());
        for &width in &layer_sizes {
            let layer: Vec<f64> = (0..width * fan_in)
                .map(|_| {
                    let u: f64 = rng.random();
                    match init {
                        WeightInit::UnitInterval => 1.0 - u,
                        WeightInit::Symmetric => 1.0 - 2.0 * u,
                    }
                })
                .collect();
            weights.push(layer);
            fan_in = width;
        }
        let zeros = |sizes: &[usize]| sizes.iter().map(|&w| vec![0.0; w]).collect::<Vec<_>>();
        Ok(Self {
            num_inputs,
            initial_weights: weights.clone(),
            weights,
            pre_activations: zeros(&layer_sizes),
            activations: zeros(&layer_sizes),
            deltas: zeros(&layer_sizes),
            input: vec![0.0; num_inputs],
            layer_sizes,
            eta,
        })
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn num_layers(&self) -> usize {
        self.layer_sizes.len()
    }

    pub fn num_weights(&self) -> usize {
        self.weights.iter().map(Vec::len).sum()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn set_eta(&mut self, eta: f64) {
        self.eta = eta;
    }

    /// Fan-in of layer `l`.
    pub fn layer_inputs(&self, layer: usize) -> usize {
        if layer == 0 {
            self.num_inputs
        } else {
            self.layer_sizes[layer - 1]
        }
    }

    /// Row-major weights of `layer`: entry `[j * fan_in + i]` connects input `i` to neuron `j`.
    pub fn weights(&self, layer: usize) -> &[f64] {
        &self.weights[layer]
    }

    pub fn weights_mut(&mut self, layer: usize) -> &mut [f64] {
        &mut self.weights[layer]
    }

    pub fn initial_weights(&self, layer: usize) -> &[f64] {
        &self.initial_weights[layer]
    }

    /// Activations of the last forward pass.
    pub fn activations(&self, layer: usize) -> &[f64] {
        &self.activations[layer]
    }

    pub fn pre_activations(&self, layer: usize) -> &[f64] {
        &self.pre_activations[layer]
    }

    fn check_taps(&self, taps: &[f64]) -> Result<()> {
        if taps.len() == self.num_inputs {
            Ok(())
        } else {
            Err(Error::TapCountMismatch {
                expected: self.num_inputs,
                got: taps.len(),
            })
        }
    }

    /// Propagates the taps through the network and returns the remover.
    pub fn forward(&mut self, taps: &[f64]) -> Result<f64> {
        self.check_taps(taps)?;
        self.input.copy_from_slice(taps);
        for l in 0..self.layer_sizes.len() {
            let (done, rest) = self.activations.split_at_mut(l);
            let prev: &[f64] = if l == 0 { &self.input } else { &done[l - 1] };
            let fan_in = prev.len();
            let w = &self.weights[l];
            let z = &mut self.pre_activations[l];
            let a = &mut rest[0];
            for (j, row) in w.chunks_exact(fan_in).enumerate() {
                let s: f64 = row.iter().zip(prev).map(|(wi, xi)| wi * xi).sum();
                z[j] = s;
                a[j] = s.tanh();
            }
        }
        Ok(self.activations.last().unwrap()[0])
    }

    /// One online step: forward, subtract, backpropagate, update.
    pub fn learn_step(&mut self, d_delayed: f64, taps: &[f64]) -> Result<DnfStepOutput> {
        let remover = self.forward(taps)?;
        let error = d_delayed - remover;
        self.backpropagate(error);
        self.apply_update()?;
        Ok(DnfStepOutput {
            remover,
            output: error,
            weight_distances: None,
        })
    }

    /// Fills the deltas from the output-neuron error (no `tanh'` on the output).
    fn backpropagate(&mut self, output_delta: f64) {
        let last = self.layer_sizes.len() - 1;
        self.deltas[last][0] = output_delta;
        for l in (0..last).rev() {
            let (lower, upper) = self.deltas.split_at_mut(l + 1);
            let delta = &mut lower[l];
            let upper_delta = &upper[0];
            let fan_in = self.layer_sizes[l];
            delta.iter_mut().for_each(|v| *v = 0.0);
            for (row, &dk) in self.weights[l + 1].chunks_exact(fan_in).zip(upper_delta) {
                for (acc, w) in delta.iter_mut().zip(row) {
                    *acc += w * dk;
                }
            }
            for (dj, aj) in delta.iter_mut().zip(&self.activations[l]) {
                *dj *= 1.0 - aj * aj;
            }
        }
    }

    fn apply_update(&mut self) -> Result<()> {
        if self.eta == 0.0 {
            return Ok(());
        }
        for l in 0..self.layer_sizes.len() {
            let prev: &[f64] = if l == 0 {
                &self.input
            } else {
                &self.activations[l - 1]
            };
            let fan_in = prev.len();
            let mut finite = true;
            for (row, &dj) in self.weights[l]
                .chunks_exact_mut(fan_in)
                .zip(&self.deltas[l])
            {
                let g = self.eta * dj;
                for (w, &ai) in row.iter_mut().zip(prev) {
                    *w += g * ai;
                    finite &= w.is_finite();
                }
            }
            if !finite {
                return Err(Error::Divergence { layer: l });
            }
        }
        Ok(())
    }

    /// Per-layer Euclidean distance from the initial weights.
    pub fn weight_distance(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.initial_weights)
            .map(|(w, w0)| {
                w.iter()
                    .zip(w0)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    /// Smallest `tanh'(z)` across hidden neurons of the last forward pass.
    pub fn min_hidden_derivative(&self) -> f64 {
        let last = self.layer_sizes.len() - 1;
        self.activations[..last]
            .iter()
            .flatten()
            .map(|a| 1.0 - a * a)
            .fold(1.0, f64::min)
    }

    /// Fraction of hidden neurons whose `tanh'(z)` exceeds `threshold` in the last pass.
    pub fn hidden_fraction_above(&self, threshold: f64) -> f64 {
        let last = self.layer_sizes.len() - 1;
        let (count, above) = self.activations[..last]
            .iter()
            .flatten()
            .fold((0usize, 0usize), |(c, a), act| {
                (c + 1, a + usize::from(1.0 - act * act > threshold))
            });
        if count == 0 {
            1.0
        } else {
            above as f64 / count as f64
        }
    }

    /// Gradient of `0.5 * (d_delayed - z_out)^2` with the output stage taken
    /// as linear, obtained by backpropagation. Leaves the weights untouched.
    pub fn linear_output_gradient(
        &mut self,
        d_delayed: f64,
        taps: &[f64],
    ) -> Result<Vec<Vec<f64>>> {
        self.forward(taps)?;
        let z_out = self.pre_activations.last().unwrap()[0];
        self.backpropagate(d_delayed - z_out);
        Ok((0..self.layer_sizes.len())
            .map(|l| {
                let prev: &[f64] = if l == 0 {
                    &self.input
                } else {
                    &self.activations[l - 1]
                };
                self.deltas[l]
                    .iter()
                    .flat_map(|&dj| prev.iter().map(move |&ai| -dj * ai))
                    .collect()
            })
            .collect())
    }

    /// Stand-alone evaluation of the output pre-activation, used by the
    /// finite-difference check so it shares no state with `forward`.
    fn output_preactivation(&self, taps: &[f64]) -> f64 {
        let mut a = taps.to_vec();
        let mut z_out = 0.0;
        for w in &self.weights {
            let fan_in = a.len();
            let z: Vec<f64> = w
                .chunks_exact(fan_in)
                .map(|row| row.iter().zip(&a).map(|(wi, xi)| wi * xi).sum())
                .collect();
            z_out = z[0];
            a = z.iter().map(|v| v.tanh()).collect();
        }
        z_out
    }
}

/// Below this magnitude gradients are compared in absolute terms.
pub const GRADIENT_FLOOR: f64 = 1e-4;

/// Compares backpropagated gradients with central finite differences of
/// `0.5 * e^2` (linear output stage) and returns the largest relative error.
///
/// The learning rule ascends by `eta * a * delta`, which is descent on this
/// loss because its gradient is `-delta * a`.
pub fn gradient_check(net: &DnfNetwork, d_delayed: f64, taps: &[f64], epsilon: f64) -> Result<f64> {
    let mut work = net.clone();
    let analytic = work.linear_output_gradient(d_delayed, taps)?;
    let loss = |n: &DnfNetwork| 0.5 * (d_delayed - n.output_preactivation(taps)).powi(2);
    let mut probe = net.clone();
    let mut worst = 0.0f64;
    for (l, grads) in analytic.iter().enumerate() {
        for (idx, &g) in grads.iter().enumerate() {
            let w0 = probe.weights[l][idx];
            probe.weights[l][idx] = w0 + epsilon;
            let plus = loss(&probe);
            probe.weights[l][idx] = w0 - epsilon;
            let minus = loss(&probe);
            probe.weights[l][idx] = w0;
            let fd = (plus - minus) / (2.0 * epsilon);
            let scale = g.abs().max(fd.abs()).max(GRADIENT_FLOOR);
            worst = worst.max((g - fd).abs() / scale);
        }
    }
    Ok(worst)
}
