use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_training_data, Label, ModelError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => sigmoid(z),
        }
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Dense layer; `weights` is row-major with one row per output unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    fn forward_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for (row, b) in self.weights.chunks_exact(self.inputs).zip(&self.bias) {
            let z: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b;
            out.push(self.activation.apply(z));
        }
    }
}

/// Feed-forward network whose single sigmoid output is the benign probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub input_dim: usize,
    pub layers: Vec<Layer>,
}

impl MlpModel {
    pub fn new(input_dim: usize, layers: Vec<Layer>) -> Result<Self, ModelError> {
        let m = Self { input_dim, layers };
        m.validate()?;
        Ok(m)
    }

    pub(crate) fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::Invalid(msg));
        if self.layers.is_empty() {
            return bad("network has no layers".into());
        }
        let mut width = self.input_dim;
        for (i, l) in self.layers.iter().enumerate() {
            if l.inputs != width {
                return bad(format!("layer {i} expects {} inputs, previous width is {width}", l.inputs));
            }
            if l.outputs == 0 || l.weights.len() != l.inputs.saturating_mul(l.outputs) || l.bias.len() != l.outputs {
                return bad(format!("layer {i} has inconsistent shapes"));
            }
            if l.weights.iter().chain(&l.bias).any(|v| !v.is_finite()) {
                return bad(format!("layer {i} has non-finite parameters"));
            }
            width = l.outputs;
        }
        let last = self.layers.last().unwrap();
        if last.outputs != 1 || last.activation != Activation::Sigmoid {
            return bad("final layer must be a single sigmoid unit".into());
        }
        Ok(())
    }

    /// Benign-class probability.
    pub fn predict(&self, x: &[f64]) -> Result<f64, ModelError> {
        if x.len() != self.input_dim {
            return Err(ModelError::DimensionMismatch { expected: self.input_dim, got: x.len() });
        }
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        for layer in &self.layers {
            layer.forward_into(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur[0])
    }

    /// Euclidean norm of the last layer's weights.
    pub fn last_layer_norm(&self) -> f64 {
        self.layers.last().unwrap().weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    /// Activations feeding the final layer.
    pub fn penultimate(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        if x.len() != self.input_dim {
            return Err(ModelError::DimensionMismatch { expected: self.input_dim, got: x.len() });
        }
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        for layer in &self.layers[..self.layers.len() - 1] {
            layer.forward_into(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    pub fn train(data: &[Vec<f64>], labels: &[Label], cfg: &MlpConfig) -> Result<(Self, TrainReport), ModelError> {
        mlp_train(data, labels, cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self { hidden: vec![64, 64], epochs: 400, learning_rate: 0.01, seed: 0 }
    }
}

/// Full-batch loss after every accepted step (index 0 is the initial loss).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub losses: Vec<f64>,
    pub final_learning_rate: f64,
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

/// Full-batch Adam on binary cross-entropy. A step that increases the loss is
/// rolled back and the learning rate halved, so the recorded loss sequence is
/// non-increasing.
fn mlp_train(data: &[Vec<f64>], labels: &[Label], cfg: &MlpConfig) -> Result<(MlpModel, TrainReport), ModelError> {
    let dim = check_training_data(data, labels)?;
    if cfg.hidden.contains(&0) {
        return Err(ModelError::Invalid("hidden layer of width 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut widths = vec![dim];
    widths.extend(&cfg.hidden);
    widths.push(1);
    let layers: Vec<Layer> = widths
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let last = i == widths.len() - 2;
            let limit = if last { (6.0 / (w[0] + w[1]) as f64).sqrt() } else { (6.0 / w[0] as f64).sqrt() };
            Layer {
                inputs: w[0],
                outputs: w[1],
                weights: (0..w[0] * w[1]).map(|_| rng.gen_range(-limit..limit)).collect(),
                bias: vec![0.0; w[1]],
                activation: if last { Activation::Sigmoid } else { Activation::Relu },
            }
        })
        .collect();
    let mut model = MlpModel { input_dim: dim, layers };
    let targets: Vec<f64> = labels.iter().map(|l| l.target()).collect();

    let n_params = model.layers.len() * 2;
    let shapes: Vec<usize> = model.layers.iter().flat_map(|l| [l.weights.len(), l.bias.len()]).collect();
    let mut adam = Adam {
        m: shapes.iter().map(|&s| vec![0.0; s]).collect(),
        v: shapes.iter().map(|&s| vec![0.0; s]).collect(),
        t: 0,
    };
    debug_assert_eq!(adam.m.len(), n_params);

    let mut lr = cfg.learning_rate;
    let mut acts = forward_batch(&model, data);
    let mut loss = bce(acts.last().unwrap(), &targets);
    let mut losses = vec![loss];
    for _ in 0..cfg.epochs {
        let grads = backward_batch(&model, &acts, &targets);
        let saved = (model.clone(), adam.m.clone(), adam.v.clone(), adam.t);
        adam.t += 1;
        let (b1, b2, eps) = (0.9, 0.999, 1e-8);
        let c1 = 1.0 - f64::powi(b1, adam.t);
        let c2 = 1.0 - f64::powi(b2, adam.t);
        for (slot, grad) in grads.iter().enumerate() {
            let layer = &mut model.layers[slot / 2];
            let params = if slot % 2 == 0 { &mut layer.weights } else { &mut layer.bias };
            let (m, v) = (&mut adam.m[slot], &mut adam.v[slot]);
            for j in 0..params.len() {
                m[j] = b1 * m[j] + (1.0 - b1) * grad[j];
                v[j] = b2 * v[j] + (1.0 - b2) * grad[j] * grad[j];
                params[j] -= lr * (m[j] / c1) / ((v[j] / c2).sqrt() + eps);
            }
        }
        let trial = forward_batch(&model, data);
        let trial_loss = bce(trial.last().unwrap(), &targets);
        if trial_loss <= loss {
            acts = trial;
            loss = trial_loss;
            losses.push(loss);
        } else {
            (model, adam.m, adam.v, adam.t) = saved;
            lr *= 0.5;
            if lr < 1e-12 {
                break;
            }
        }
    }
    Ok((model, TrainReport { losses, final_learning_rate: lr }))
}

/// Per-layer activations for every sample; index 0 is the input.
fn forward_batch(model: &MlpModel, data: &[Vec<f64>]) -> Vec<Vec<Vec<f64>>> {
    let mut acts = vec![data.to_vec()];
    for layer in &model.layers {
        let prev = acts.last().unwrap();
        let out = prev
            .iter()
            .map(|x| {
                let mut o = Vec::with_capacity(layer.outputs);
                layer.forward_into(x, &mut o);
                o
            })
            .collect();
        acts.push(out);
    }
    acts
}

fn bce(outputs: &[Vec<f64>], targets: &[f64]) -> f64 {
    const EPS: f64 = 1e-12;
    let total: f64 = outputs
        .iter()
        .zip(targets)
        .map(|(o, &y)| {
            let p = o[0].clamp(EPS, 1.0 - EPS);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum();
    total / targets.len() as f64
}

/// Gradients ordered as [w0, b0, w1, b1, ...].
fn backward_batch(model: &MlpModel, acts: &[Vec<Vec<f64>>], targets: &[f64]) -> Vec<Vec<f64>> {
    let n = targets.len() as f64;
    let mut grads: Vec<Vec<f64>> =
        model.layers.iter().flat_map(|l| [vec![0.0; l.weights.len()], vec![0.0; l.bias.len()]]).collect();
    for s in 0..targets.len() {
        // Sigmoid + cross-entropy: dL/dz = (p - y) / n.
        let mut delta = vec![(acts.last().unwrap()[s][0] - targets[s]) / n];
        for li in (0..model.layers.len()).rev() {
            let layer = &model.layers[li];
            let input = &acts[li][s];
            {
                let gw = &mut grads[2 * li];
                for (o, &d) in delta.iter().enumerate() {
                    let row = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                    for (g, &x) in row.iter_mut().zip(input) {
                        *g += d * x;
                    }
                }
            }
            for (g, &d) in grads[2 * li + 1].iter_mut().zip(&delta) {
                *g += d;
            }
            if li == 0 {
                break;
            }
            let mut prev = vec![0.0; layer.inputs];
            for (o, &d) in delta.iter().enumerate() {
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (p, &w) in prev.iter_mut().zip(row) {
                    *p += d * w;
                }
            }
            // Hidden layers are ReLU.
            for (p, &a) in prev.iter_mut().zip(input) {
                if a <= 0.0 {
                    *p = 0.0;
                }
            }
            delta = prev;
        }
    }
    grads
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(w: Vec<f64>, b: f64) -> MlpModel {
        let inputs = w.len();
        MlpModel::new(
            inputs,
            vec![Layer { inputs, outputs: 1, weights: w, bias: vec![b], activation: Activation::Sigmoid }],
        )
        .unwrap()
    }

    #[test]
    fn zero_network_outputs_half() {
        let m = MlpModel::new(
            3,
            vec![
                Layer {
                    inputs: 3,
                    outputs: 2,
                    weights: vec![0.0; 6],
                    bias: vec![0.0; 2],
                    activation: Activation::Relu,
                },
                Layer {
                    inputs: 2,
                    outputs: 1,
                    weights: vec![0.0; 2],
                    bias: vec![0.0],
                    activation: Activation::Sigmoid,
                },
            ],
        )
        .unwrap();
        assert_eq!(m.predict(&[1.0, -2.0, 3.0]).unwrap(), 0.5);
        assert_eq!(single(vec![1.0], 0.0).predict(&[0.0]).unwrap(), 0.5);
    }

    #[test]
    fn dimension_mismatch() {
        assert_eq!(
            single(vec![1.0], 0.0).predict(&[0.0, 1.0]),
            Err(ModelError::DimensionMismatch { expected: 1, got: 2 })
        );
    }

    #[test]
    fn rejects_non_sigmoid_head() {
        let r = MlpModel::new(
            1,
            vec![Layer { inputs: 1, outputs: 1, weights: vec![1.0], bias: vec![0.0], activation: Activation::Relu }],
        );
        assert!(r.is_err());
    }

    #[test]
    fn single_class_is_degenerate() {
        let data = vec![vec![0.0], vec![1.0]];
        let r = mlp_train(&data, &[Label::Malware, Label::Malware], &MlpConfig::default());
        assert!(matches!(r, Err(ModelError::DegenerateData(_))));
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert!((sigmoid(0.3) + sigmoid(-0.3) - 1.0).abs() < 1e-15);
    }

    fn param_mut(m: &mut MlpModel, slot: usize, j: usize) -> &mut f64 {
        let l = &mut m.layers[slot / 2];
        if slot.is_multiple_of(2) {
            &mut l.weights[j]
        } else {
            &mut l.bias[j]
        }
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn gradient_matches_finite_differences() {
        let data = vec![vec![0.3, -0.2], vec![-0.5, 0.9], vec![0.1, 0.4]];
        let labels = [Label::Benign, Label::Malware, Label::Benign];
        let targets: Vec<f64> = labels.iter().map(|l| l.target()).collect();
        let cfg = MlpConfig { hidden: vec![3], epochs: 0, learning_rate: 0.0, seed: 4 };
        let (model, _) = mlp_train(&data, &labels, &cfg).unwrap();
        let acts = forward_batch(&model, &data);
        let grads = backward_batch(&model, &acts, &targets);
        let h = 1e-6;
        for (slot, g) in grads.iter().enumerate() {
            for j in 0..g.len() {
                let mut plus = model.clone();
                let mut minus = model.clone();
                *param_mut(&mut plus, slot, j) += h;
                *param_mut(&mut minus, slot, j) -= h;
                let lp = bce(forward_batch(&plus, &data).last().unwrap(), &targets);
                let lm = bce(forward_batch(&minus, &data).last().unwrap(), &targets);
                let fd = (lp - lm) / (2.0 * h);
                assert!((fd - g[j]).abs() < 1e-6, "slot {slot} idx {j}: fd {fd} vs {}", g[j]);
            }
        }
    }
}
