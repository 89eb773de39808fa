//! Plain-`f64` multilayer perceptron with manual reverse-mode gradients.
//!
//! The networks here are small (two hidden layers of 64 units), so an
//! explicit implementation beats pulling in an autodiff stack: every gradient
//! is written out by hand and checked against finite differences in the test
//! suite. Hidden activations are `tanh`; the output layer is linear.

use rand::Rng;
use rand_distr::StandardNormal;

/// A fully-connected network. `sizes` holds the layer widths from input to
/// output; `weights[l]` is row-major `[out × in]` for layer `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    /// Layer widths, input first.
    pub sizes: Vec<usize>,
    /// Row-major weight matrices, one per layer.
    pub weights: Vec<Vec<f64>>,
    /// Bias vectors, one per layer.
    pub biases: Vec<Vec<f64>>,
}

/// Per-layer activations recorded during a forward pass, as needed for
/// backpropagation. `layer_inputs[l]` feeds layer `l`; the last entry is the
/// network output.
#[derive(Debug, Clone)]
pub struct MlpCache {
    /// Input to each layer, plus the final output.
    pub layer_inputs: Vec<Vec<f64>>,
}

impl MlpCache {
    /// The network output this cache was produced with.
    pub fn output(&self) -> &[f64] {
        self.layer_inputs.last().expect("cache holds at least the input")
    }
}

/// Gradients with the same shapes as an [`Mlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    /// d(loss)/d(weights), same layout as [`Mlp::weights`].
    pub d_weights: Vec<Vec<f64>>,
    /// d(loss)/d(biases), same layout as [`Mlp::biases`].
    pub d_biases: Vec<Vec<f64>>,
}

impl Mlp {
    /// Number of layers (weight matrices).
    pub fn layers(&self) -> usize {
        self.weights.len()
    }

    /// Input width.
    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    /// Output width.
    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("network has layers")
    }

    /// Orthogonally initialized network: hidden and output weight matrices
    /// get orthogonal rows/columns scaled by `hidden_gain` and `output_gain`
    /// respectively; biases start at zero.
    pub fn orthogonal(sizes: &[usize], hidden_gain: f64, output_gain: f64, rng: &mut impl Rng) -> Self {
        assert!(sizes.len() >= 2, "network needs an input and an output layer");
        let mut weights = Vec::with_capacity(sizes.len() - 1);
        let mut biases = Vec::with_capacity(sizes.len() - 1);
        for l in 0..sizes.len() - 1 {
            let (input, output) = (sizes[l], sizes[l + 1]);
            let gain = if l == sizes.len() - 2 { output_gain } else { hidden_gain };
            weights.push(orthogonal_matrix(output, input, gain, rng));
            biases.push(vec![0.0; output]);
        }
        Mlp {
            sizes: sizes.to_vec(),
            weights,
            biases,
        }
    }

    /// Forward pass.
    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        self.forward_cached(input)
            .layer_inputs
            .pop()
            .expect("forward pass records the output")
    }

    /// Forward pass that records the activations backpropagation needs.
    pub fn forward_cached(&self, input: &[f64]) -> MlpCache {
        debug_assert_eq!(input.len(), self.input_dim());
        let mut layer_inputs = Vec::with_capacity(self.layers() + 1);
        layer_inputs.push(input.to_vec());
        let mut current = input.to_vec();
        for l in 0..self.layers() {
            let (rows, cols) = (self.sizes[l + 1], self.sizes[l]);
            let mut next = vec![0.0; rows];
            for o in 0..rows {
                let row = &self.weights[l][o * cols..(o + 1) * cols];
                let mut z = self.biases[l][o];
                for i in 0..cols {
                    z += row[i] * current[i];
                }
                // Hidden layers squash; the last layer is linear.
                next[o] = if l + 1 < self.layers() { z.tanh() } else { z };
            }
            layer_inputs.push(next.clone());
            current = next;
        }
        MlpCache { layer_inputs }
    }

    /// Backpropagates `d_output` (gradient at the network output) through the
    /// cached pass, accumulating into `grads`.
    pub fn backward(&self, cache: &MlpCache, d_output: &[f64], grads: &mut MlpGrads) {
        debug_assert_eq!(d_output.len(), self.output_dim());
        let mut delta = d_output.to_vec();
        for l in (0..self.layers()).rev() {
            let (rows, cols) = (self.sizes[l + 1], self.sizes[l]);
            let input = &cache.layer_inputs[l];
            for o in 0..rows {
                grads.d_biases[l][o] += delta[o];
                let row = &mut grads.d_weights[l][o * cols..(o + 1) * cols];
                for i in 0..cols {
                    row[i] += delta[o] * input[i];
                }
            }
            if l > 0 {
                let mut d_input = vec![0.0; cols];
                for o in 0..rows {
                    let row = &self.weights[l][o * cols..(o + 1) * cols];
                    for i in 0..cols {
                        d_input[i] += delta[o] * row[i];
                    }
                }
                // The layer below ends in tanh: fold in its derivative,
                // 1 - a², using the recorded post-activation values.
                for i in 0..cols {
                    d_input[i] *= 1.0 - input[i] * input[i];
                }
                delta = d_input;
            }
        }
    }

    /// Zero-filled gradient holder shaped like this network.
    pub fn zero_grads(&self) -> MlpGrads {
        MlpGrads {
            d_weights: self.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            d_biases: self.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    /// Total number of parameters.
    pub fn param_count(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }
}

/// Row-major `rows × cols` matrix with orthonormal rows (or columns, when
/// `rows < cols`), scaled by `gain`.
///
/// Built by modified Gram-Schmidt on a Gaussian matrix: draw `max × min`
/// normals, orthonormalize the `min` columns, and transpose if needed. The
/// Gram-Schmidt `R` diagonal is positive by construction, so no sign fix is
/// required for uniqueness.
fn orthogonal_matrix(rows: usize, cols: usize, gain: f64, rng: &mut impl Rng) -> Vec<f64> {
    let n = rows.max(cols);
    let m = rows.min(cols);
    // Column-major n×m Gaussian.
    let mut columns: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    for j in 0..m {
        // Modified Gram-Schmidt with a redraw guard for the (measure-zero)
        // degenerate case.
        loop {
            for k in 0..j {
                let proj: f64 = (0..n).map(|i| columns[j][i] * columns[k][i]).sum();
                for i in 0..n {
                    columns[j][i] -= proj * columns[k][i];
                }
            }
            let norm: f64 = columns[j].iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-12 {
                for v in &mut columns[j] {
                    *v /= norm;
                }
                break;
            }
            columns[j] = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        }
    }
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            // rows ≥ cols: Q is rows×cols as built (column k = columns[k]).
            // rows < cols: transpose so the rows come out orthonormal.
            let q = if rows >= cols { columns[c][r] } else { columns[r][c] };
            out[r * cols + c] = gain * q;
        }
    }
    out
}
