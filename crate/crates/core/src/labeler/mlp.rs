//! 3 → 100 → 100 → 5 rectifier network with softmax output and hand-written
//! backpropagation.
//!
//! Weights are stored row-major as `[out][in]`. All sums run in ascending
//! index order, which makes training bit-reproducible for a fixed seed.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{FeatureVector, LabelerError, CLASSES, FEATURES, HIDDEN};

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub w3: Vec<f64>,
    pub b3: Vec<f64>,
}

/// Intermediate values of one forward pass.
struct Trace {
    h1: Vec<f64>,
    h2: Vec<f64>,
    probs: [f64; CLASSES],
}

impl MlpParams {
    pub fn zeros() -> Self {
        MlpParams {
            w1: vec![0.0; HIDDEN * FEATURES],
            b1: vec![0.0; HIDDEN],
            w2: vec![0.0; HIDDEN * HIDDEN],
            b2: vec![0.0; HIDDEN],
            w3: vec![0.0; CLASSES * HIDDEN],
            b3: vec![0.0; CLASSES],
        }
    }

    /// Uniform in ±1/√fan_in for weights and biases alike.
    pub fn init(rng: &mut ChaCha8Rng) -> Self {
        let mut p = Self::zeros();
        let mut fill = |v: &mut Vec<f64>, fan_in: usize| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            v.iter_mut().for_each(|x| *x = rng.random_range(-bound..bound));
        };
        fill(&mut p.w1, FEATURES);
        fill(&mut p.b1, FEATURES);
        fill(&mut p.w2, HIDDEN);
        fill(&mut p.b2, HIDDEN);
        fill(&mut p.w3, HIDDEN);
        fill(&mut p.b3, HIDDEN);
        p
    }

    /// Parameter blocks in file order: w1, b1, w2, b2, w3, b3.
    pub fn blocks(&self) -> [&Vec<f64>; 6] {
        [&self.w1, &self.b1, &self.w2, &self.b2, &self.w3, &self.b3]
    }

    pub fn blocks_mut(&mut self) -> [&mut Vec<f64>; 6] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2, &mut self.w3, &mut self.b3]
    }

    pub fn check(&self) -> Result<(), LabelerError> {
        let expected = [HIDDEN * FEATURES, HIDDEN, HIDDEN * HIDDEN, HIDDEN, CLASSES * HIDDEN, CLASSES];
        for (i, (block, len)) in self.blocks().iter().zip(expected).enumerate() {
            if block.len() != len {
                return Err(LabelerError::Shape(format!("block {i} has {} values, expected {len}", block.len())));
            }
            if block.iter().any(|x| !x.is_finite()) {
                return Err(LabelerError::NonFinite);
            }
        }
        Ok(())
    }

    /// Class probabilities in [`super::CLASS_ORDER`].
    pub fn forward(&self, x: &FeatureVector) -> Result<[f64; CLASSES], LabelerError> {
        self.check()?;
        if x.as_array().iter().any(|v| !v.is_finite()) {
            return Err(LabelerError::NonFinite);
        }
        Ok(self.trace(x).probs)
    }

    fn trace(&self, x: &FeatureVector) -> Trace {
        let x = x.as_array();
        let h1 = dense_relu(&self.w1, &self.b1, &x, HIDDEN);
        let h2 = dense_relu(&self.w2, &self.b2, &h1, HIDDEN);
        let mut logits = [0.0; CLASSES];
        for (c, logit) in logits.iter_mut().enumerate() {
            let row = &self.w3[c * HIDDEN..(c + 1) * HIDDEN];
            *logit = self.b3[c] + row.iter().zip(&h2).map(|(w, h)| w * h).sum::<f64>();
        }
        Trace { h1, h2, probs: softmax(&logits) }
    }

    /// Cross-entropy of the true class and its gradient w.r.t. every parameter.
    #[allow(clippy::needless_range_loop)]
    pub fn loss_and_grad(&self, x: &FeatureVector, class: usize) -> (f64, MlpParams) {
        let t = self.trace(x);
        let loss = cross_entropy(t.probs[class]);
        let mut g = MlpParams::zeros();
        let input = x.as_array();

        let mut d_logits = t.probs;
        d_logits[class] -= 1.0;
        let mut d_h2 = vec![0.0; HIDDEN];
        for c in 0..CLASSES {
            g.b3[c] = d_logits[c];
            for k in 0..HIDDEN {
                g.w3[c * HIDDEN + k] = d_logits[c] * t.h2[k];
                d_h2[k] += d_logits[c] * self.w3[c * HIDDEN + k];
            }
        }
        let mut d_h1 = vec![0.0; HIDDEN];
        for k in 0..HIDDEN {
            let dz = if t.h2[k] > 0.0 { d_h2[k] } else { 0.0 };
            g.b2[k] = dz;
            for m in 0..HIDDEN {
                g.w2[k * HIDDEN + m] = dz * t.h1[m];
                d_h1[m] += dz * self.w2[k * HIDDEN + m];
            }
        }
        for m in 0..HIDDEN {
            let dz = if t.h1[m] > 0.0 { d_h1[m] } else { 0.0 };
            g.b1[m] = dz;
            for f in 0..FEATURES {
                g.w1[m * FEATURES + f] = dz * input[f];
            }
        }
        (loss, g)
    }

    pub fn loss(&self, x: &FeatureVector, class: usize) -> f64 {
        cross_entropy(self.trace(x).probs[class])
    }

    /// `self -= lr * grad`
    pub fn step(&mut self, grad: &MlpParams, lr: f64) {
        for (p, g) in self.blocks_mut().into_iter().zip(grad.blocks()) {
            p.iter_mut().zip(g).for_each(|(p, g)| *p -= lr * g);
        }
    }
}

/// `-ln p`, floored away from infinity; NaN stays NaN.
fn cross_entropy(p: f64) -> f64 {
    if p.is_nan() {
        f64::NAN
    } else {
        -p.max(f64::MIN_POSITIVE).ln()
    }
}

fn dense_relu(w: &[f64], b: &[f64], input: &[f64], out: usize) -> Vec<f64> {
    let n = input.len();
    (0..out)
        .map(|o| {
            let z = b[o] + w[o * n..(o + 1) * n].iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
            z.max(0.0)
        })
        .collect()
}

fn softmax(logits: &[f64; CLASSES]) -> [f64; CLASSES] {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = [0.0; CLASSES];
    let mut total = 0.0;
    for (o, &l) in out.iter_mut().zip(logits) {
        *o = (l - max).exp();
        total += *o;
    }
    out.iter_mut().for_each(|o| *o /= total);
    out
}
