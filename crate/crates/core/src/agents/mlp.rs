//! Fully connected network with ReLU hidden layers and a linear output,
//! plus an Adam optimiser. Backpropagation is written out by hand.

use std::io::{self, Write};

use rand::{Rng, RngCore};

use super::CheckpointError;

/// Weights are row-major `outputs x inputs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Same shape as the network's parameters.
pub type Gradients = Mlp;

impl Mlp {
    /// Uniform `±1/sqrt(fan_in)` initialisation. With `zero_output` the last
    /// layer starts at zero so every Q-value is initially 0.
    pub fn new(sizes: &[usize], zero_output: bool, rng: &mut dyn RngCore) -> Self {
        assert!(sizes.len() >= 2, "need at least an input and an output size");
        let n = sizes.len() - 1;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let mut d = Dense::zeros(w[0], w[1]);
                if !(zero_output && i == n - 1) {
                    let bound = 1.0 / (w[0] as f64).sqrt();
                    for v in d.weights.iter_mut().chain(d.bias.iter_mut()) {
                        *v = rng.gen_range(-bound..bound);
                    }
                }
                d
            })
            .collect();
        Self { layers }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.inputs, l.outputs))
                .collect(),
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].inputs];
        s.extend(self.layers.iter().map(|l| l.outputs));
        s
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn n_outputs(&self) -> usize {
        self.layers.last().unwrap().outputs
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(l.bias.iter()))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(|v| v.is_finite())
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.activations(&[x]).pop().unwrap()
    }

    /// Outputs for a batch of inputs, one row per input.
    pub fn forward_batch(&self, inputs: &[&[f64]]) -> Vec<Vec<f64>> {
        let out = self.activations(inputs).pop().unwrap();
        out.chunks_exact(self.n_outputs()).map(<[f64]>::to_vec).collect()
    }

    /// Row-major `n x width` input of every layer, then the network output.
    fn activations(&self, inputs: &[&[f64]]) -> Vec<Vec<f64>> {
        let n = inputs.len();
        let last = self.layers.len() - 1;
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len() + 1);
        acts.push(inputs.iter().flat_map(|x| x.iter().copied()).collect());
        assert_eq!(acts[0].len(), n * self.n_inputs(), "input width mismatch");
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::with_capacity(n * layer.outputs);
            for _ in 0..n {
                z.extend_from_slice(&layer.bias);
            }
            // z += a . W^T
            gemm(
                (n, layer.inputs, layer.outputs),
                (&acts[l], layer.inputs as isize, 1),
                (&layer.weights, 1, layer.inputs as isize),
                &mut z,
                1.0,
            );
            if l < last {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(z);
        }
        acts
    }

    /// Mean squared error between `targets[k]` and output `actions[k]` for
    /// input `inputs[k]`, and its gradient with respect to every parameter.
    /// The minibatch is processed as whole matrices.
    pub fn selected_mse_grad(
        &self,
        inputs: &[&[f64]],
        actions: &[usize],
        targets: &[f64],
    ) -> (f64, Gradients) {
        let n = inputs.len();
        assert!(n > 0 && actions.len() == n && targets.len() == n);
        let last = self.layers.len() - 1;
        let acts = self.activations(inputs);
        let n_out = self.n_outputs();
        let out = &acts[last + 1];
        let mut delta = vec![0.0; n * n_out];
        let mut loss = 0.0;
        for k in 0..n {
            let err = out[k * n_out + actions[k]] - targets[k];
            loss += err * err;
            delta[k * n_out + actions[k]] = 2.0 * err / n as f64;
        }
        let mut grads = self.zeros_like();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let g = &mut grads.layers[l];
            let input = &acts[l];
            // dW = delta^T . a
            gemm(
                (layer.outputs, n, layer.inputs),
                (&delta, 1, layer.outputs as isize),
                (input, layer.inputs as isize, 1),
                &mut g.weights,
                0.0,
            );
            for row in delta.chunks_exact(layer.outputs) {
                for (b, d) in g.bias.iter_mut().zip(row) {
                    *b += d;
                }
            }
            if l == 0 {
                break;
            }
            // delta_prev = (delta . W) masked by the ReLU derivative.
            let mut prev = vec![0.0; n * layer.inputs];
            gemm(
                (n, layer.outputs, layer.inputs),
                (&delta, layer.outputs as isize, 1),
                (&layer.weights, layer.inputs as isize, 1),
                &mut prev,
                0.0,
            );
            for (p, &a) in prev.iter_mut().zip(input) {
                if a <= 0.0 {
                    *p = 0.0;
                }
            }
            delta = prev;
        }
        (loss / n as f64, grads)
    }

    pub fn save(&self, w: &mut dyn Write) -> io::Result<()> {
        let sizes: Vec<String> = self.sizes().iter().map(|s| s.to_string()).collect();
        writeln!(w, "layers {}", sizes.join(" "))?;
        for l in &self.layers {
            let ws: Vec<String> = l.weights.iter().map(|v| v.to_string()).collect();
            let bs: Vec<String> = l.bias.iter().map(|v| v.to_string()).collect();
            writeln!(w, "w {}", ws.join(" "))?;
            writeln!(w, "b {}", bs.join(" "))?;
        }
        Ok(())
    }

    pub fn load(lines: &mut dyn Iterator<Item = io::Result<String>>) -> Result<Self, CheckpointError> {
        let bad = |m: &str| CheckpointError::Format(m.to_string());
        let mut next = || -> Result<String, CheckpointError> {
            lines.next().transpose()?.ok_or_else(|| bad("truncated network"))
        };
        let header = next()?;
        let sizes = header
            .strip_prefix("layers ")
            .ok_or_else(|| bad("expected `layers`"))?
            .split_whitespace()
            .map(|s| s.parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| bad("layer sizes"))?;
        if sizes.len() < 2 {
            return Err(bad("need at least two layer sizes"));
        }
        let parse_row = |line: String, tag: &str, len: usize| -> Result<Vec<f64>, CheckpointError> {
            let v = line
                .strip_prefix(tag)
                .ok_or_else(|| bad("weight row tag"))?
                .split_whitespace()
                .map(|s| s.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| bad("weight value"))?;
            if v.len() != len {
                return Err(bad("weight row length"));
            }
            Ok(v)
        };
        let mut layers = Vec::new();
        for w in sizes.windows(2) {
            let weights = parse_row(next()?, "w ", w[0] * w[1])?;
            let bias = parse_row(next()?, "b ", w[1])?;
            layers.push(Dense {
                inputs: w[0],
                outputs: w[1],
                weights,
                bias,
            });
        }
        Ok(Self { layers })
    }
}

/// `c = a . b + beta * c` for an `m x k` matrix `a`, a `k x n` matrix `b`
/// and a row-major `m x n` matrix `c`, each input given with its row and
/// column strides.
fn gemm(
    (m, k, n): (usize, usize, usize),
    (a, rsa, csa): (&[f64], isize, isize),
    (b, rsb, csb): (&[f64], isize, isize),
    c: &mut [f64],
    beta: f64,
) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    // SAFETY: the assertion above keeps every strided access in bounds for
    // the strides used by this module (dense row-major or its transpose).
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Adam with bias-corrected moment estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(learning_rate: f64, param_count: usize) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut Mlp, grads: &Gradients) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for (((p, g), m), v) in params
            .params_mut()
            .zip(grads.params())
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}
