//! Fully-connected ReLU network with hand-written forward and backward passes.
//!
//! Hidden layers use ReLU, the output layer is linear. Weights are stored
//! row-major (`out_dim x in_dim`) in 64-bit floats.

mod gradcheck;
mod optim;

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub use gradcheck::{gradient_check, gradient_check_with, GradCheckReport, ParamCoord};
pub use optim::{OptimState, OptimizerKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub output_dim: usize,
    pub activation: Activation,
    pub init_seed: u64,
}

impl MlpSpec {
    pub fn new(input_dim: usize, hidden: Vec<usize>, output_dim: usize, init_seed: u64) -> Self {
        MlpSpec {
            input_dim,
            hidden,
            output_dim,
            activation: Activation::Relu,
            init_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden.contains(&0) {
            return Err(Error::config(format!(
                "network dimensions must be positive: {self:?}"
            )));
        }
        Ok(())
    }

    /// `(in, out)` for each layer.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 1);
        let mut prev = self.input_dim;
        for &h in self.hidden.iter().chain(std::iter::once(&self.output_dim)) {
            dims.push((prev, h));
            prev = h;
        }
        dims
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    in_dim: usize,
    out_dim: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Dense {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    /// Row-major, `weights[o * in_dim + i]`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    fn affine(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.weights.chunks_exact(self.in_dim).zip(&self.bias).map(
            |(row, b)| row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + b,
        ));
    }

    fn params(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().chain(&self.bias)
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().chain(&mut self.bias)
    }
}

/// Parameter gradients, shaped like the network's layers.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        Gradients {
            layers: mlp
                .layers
                .iter()
                .map(|l| Dense::zeros(l.in_dim, l.out_dim))
                .collect(),
        }
    }

    pub fn fill_zero(&mut self) {
        for l in &mut self.layers {
            l.params_mut().for_each(|p| *p = 0.0);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.params_mut().for_each(|p| *p *= factor);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|g| g.is_finite())
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(Dense::params)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    spec: MlpSpec,
    layers: Vec<Dense>,
}

impl Mlp {
    /// He-uniform weights in `±sqrt(6 / fan_in)`, zero biases.
    pub fn new(spec: MlpSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = rng::seeded(spec.init_seed);
        let layers = spec
            .layer_dims()
            .into_iter()
            .map(|(i, o)| {
                let limit = (6.0 / i as f64).sqrt();
                let mut layer = Dense::zeros(i, o);
                for w in &mut layer.weights {
                    *w = rng.gen_range(-limit..limit);
                }
                layer
            })
            .collect();
        Ok(Mlp { spec, layers })
    }

    /// A network with every parameter set to zero.
    pub fn zeros(spec: MlpSpec) -> Result<Self> {
        spec.validate()?;
        let layers = spec
            .layer_dims()
            .into_iter()
            .map(|(i, o)| Dense::zeros(i, o))
            .collect();
        Ok(Mlp { spec, layers })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.spec.output_dim
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().flat_map(Dense::params).all(|p| p.is_finite())
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::contract(format!(
                "input has {} features, network expects {}",
                input.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut cur = input.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (idx, layer) in self.layers.iter().enumerate() {
            layer.affine(&cur, &mut next);
            if idx < last {
                next.iter_mut().for_each(|z| *z = z.max(0.0));
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Outputs of every layer; `acts[0]` is the input and `acts[L]` the
    /// network output. Hidden entries are post-ReLU.
    fn forward_trace(&self, input: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(input.to_vec());
        let last = self.layers.len() - 1;
        for (idx, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::with_capacity(layer.out_dim);
            layer.affine(&acts[idx], &mut out);
            if idx < last {
                out.iter_mut().for_each(|z| *z = z.max(0.0));
            }
            acts.push(out);
        }
        acts
    }

    pub fn backward(&self, input: &[f64], output_grad: &[f64]) -> Result<Gradients> {
        let mut grads = Gradients::zeros_like(self);
        self.accumulate_gradients(input, output_grad, &mut grads)?;
        Ok(grads)
    }

    /// Adds the gradient of `output_grad · forward(input)` to `grads`.
    ///
    /// ReLU's derivative at exactly zero is taken as zero.
    pub fn accumulate_gradients(
        &self,
        input: &[f64],
        output_grad: &[f64],
        grads: &mut Gradients,
    ) -> Result<()> {
        self.check_input(input)?;
        if output_grad.len() != self.output_dim() {
            return Err(Error::contract(format!(
                "output gradient has {} entries, network has {} outputs",
                output_grad.len(),
                self.output_dim()
            )));
        }
        if grads.layers.len() != self.layers.len() {
            return Err(Error::contract("gradient buffer shape mismatch"));
        }

        let acts = self.forward_trace(input);
        let mut delta = output_grad.to_vec();
        for idx in (0..self.layers.len()).rev() {
            let layer = &self.layers[idx];
            let g = &mut grads.layers[idx];
            let x = &acts[idx];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                g.bias[o] += d;
                let row = &mut g.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                row.iter_mut().zip(x).for_each(|(gw, xi)| *gw += d * xi);
            }
            if idx == 0 {
                break;
            }
            // propagate through the weights, then the ReLU of the layer below
            let mut below = vec![0.0; layer.in_dim];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                below.iter_mut().zip(row).for_each(|(b, w)| *b += d * w);
            }
            for (b, a) in below.iter_mut().zip(x) {
                if *a <= 0.0 {
                    *b = 0.0;
                }
            }
            delta = below;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&ModelFile::from(self)).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::structure(format!("model file: {e}")))?;
        file.try_into()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct LayerFile {
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
}

/// On-disk form: `{"spec":{..},"layers":[{"w":[[..]],"b":[..]}]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct ModelFile {
    pub(crate) spec: MlpSpec,
    pub(crate) layers: Vec<LayerFile>,
}

impl From<&Mlp> for ModelFile {
    fn from(mlp: &Mlp) -> Self {
        ModelFile {
            spec: mlp.spec.clone(),
            layers: mlp
                .layers
                .iter()
                .map(|l| LayerFile {
                    w: l.weights.chunks_exact(l.in_dim).map(<[f64]>::to_vec).collect(),
                    b: l.bias.clone(),
                })
                .collect(),
        }
    }
}

impl TryFrom<ModelFile> for Mlp {
    type Error = Error;

    fn try_from(file: ModelFile) -> Result<Self> {
        file.spec.validate()?;
        let dims = file.spec.layer_dims();
        if dims.len() != file.layers.len() {
            return Err(Error::structure(format!(
                "spec describes {} layers, file has {}",
                dims.len(),
                file.layers.len()
            )));
        }
        let mut layers = Vec::with_capacity(dims.len());
        for (idx, ((in_dim, out_dim), lf)) in dims.into_iter().zip(file.layers).enumerate() {
            if lf.b.len() != out_dim
                || lf.w.len() != out_dim
                || lf.w.iter().any(|row| row.len() != in_dim)
            {
                return Err(Error::structure(format!(
                    "layer {idx}: expected {out_dim}x{in_dim} weights"
                )));
            }
            let layer = Dense {
                in_dim,
                out_dim,
                weights: lf.w.concat(),
                bias: lf.b,
            };
            if !layer.params().all(|p| p.is_finite()) {
                return Err(Error::structure(format!("layer {idx}: non-finite parameter")));
            }
            layers.push(layer);
        }
        Ok(Mlp {
            spec: file.spec,
            layers,
        })
    }
}
