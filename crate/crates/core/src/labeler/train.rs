use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{class_index, FeatureVector, LabelerError, MlpParams, CLASSES, CLASS_ORDER};
use crate::model::SpanLabel;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Share of examples used for updates; the rest drives early stopping.
    pub train_fraction: f64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Epochs without held-out improvement before stopping; `None` never stops early.
    pub patience: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { train_fraction: 0.8, learning_rate: 1e-3, max_epochs: 300, patience: Some(10), seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    /// Checkpoint with the lowest held-out loss.
    pub params: MlpParams,
    pub best_epoch: usize,
    pub initial_train_loss: f64,
    pub train_losses: Vec<f64>,
    pub heldout_losses: Vec<f64>,
    pub heldout_accuracy: f64,
    pub train_size: usize,
    pub heldout_size: usize,
}

fn mean_loss(params: &MlpParams, data: &[(FeatureVector, usize)]) -> f64 {
    data.iter().map(|(x, c)| params.loss(x, *c)).sum::<f64>() / data.len() as f64
}

fn accuracy(params: &MlpParams, data: &[(FeatureVector, usize)]) -> f64 {
    let correct = data
        .iter()
        .filter(|(x, c)| {
            let probs = params.forward(x).expect("finite checkpoint");
            super::argmax_first(&probs) == *c
        })
        .count();
    correct as f64 / data.len() as f64
}

/// Per-example SGD on cross-entropy with a seeded split and shuffle.
pub fn train(examples: &[(FeatureVector, SpanLabel)], config: &TrainConfig) -> Result<TrainReport, LabelerError> {
    if !(config.train_fraction > 0.0 && config.train_fraction < 1.0) {
        return Err(LabelerError::Data(format!("train_fraction {} not in (0, 1)", config.train_fraction)));
    }
    if examples.len() < 10 {
        return Err(LabelerError::Data(format!("{} examples, need at least 10", examples.len())));
    }
    let mut data = Vec::with_capacity(examples.len());
    for (x, label) in examples {
        let c = class_index(*label)
            .ok_or_else(|| LabelerError::Data(format!("label {label} is not a classifier class")))?;
        if x.as_array().iter().any(|v| !v.is_finite()) {
            return Err(LabelerError::NonFinite);
        }
        data.push((*x, c));
    }
    let mut counts = [0usize; CLASSES];
    data.iter().for_each(|(_, c)| counts[*c] += 1);
    if counts.iter().filter(|&&n| n > 0).count() < 2 {
        return Err(LabelerError::Data("need at least two distinct labels".into()));
    }
    for (c, &n) in counts.iter().enumerate() {
        if n > 0 && (n as f64) < 0.05 * data.len() as f64 {
            log::warn!("class {} has only {n} of {} examples; expect poor recall", CLASS_ORDER[c], data.len());
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    data.shuffle(&mut rng);
    let cut = ((data.len() as f64 * config.train_fraction).round() as usize).clamp(1, data.len() - 1);
    let (train_set, heldout) = data.split_at(cut);
    let mut train_set = train_set.to_vec();

    let mut params = MlpParams::init(&mut rng);
    let initial_train_loss = mean_loss(&params, &train_set);
    let mut best = (mean_loss(&params, heldout), params.clone(), 0usize);
    let mut train_losses = Vec::new();
    let mut heldout_losses = Vec::new();
    let mut stale = 0;
    for epoch in 1..=config.max_epochs {
        train_set.shuffle(&mut rng);
        for (x, c) in &train_set {
            let (_, grad) = params.loss_and_grad(x, *c);
            params.step(&grad, config.learning_rate);
        }
        let tl = mean_loss(&params, &train_set);
        let hl = mean_loss(&params, heldout);
        if tl.is_nan() || hl.is_nan() {
            return Err(LabelerError::Diverged(epoch));
        }
        train_losses.push(tl);
        heldout_losses.push(hl);
        if hl < best.0 {
            best = (hl, params.clone(), epoch);
            stale = 0;
        } else {
            stale += 1;
            if config.patience.is_some_and(|p| stale >= p) {
                break;
            }
        }
    }
    let (_, params, best_epoch) = best;
    Ok(TrainReport {
        heldout_accuracy: accuracy(&params, heldout),
        params,
        best_epoch,
        initial_train_loss,
        train_losses,
        heldout_losses,
        train_size: train_set.len(),
        heldout_size: heldout.len(),
    })
}
