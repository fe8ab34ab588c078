use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::input::{pad_batch, ModelInput};
use super::model::{forward, loss_and_gradients, ClassifierModel};
use super::layers;
use super::{Optimizer, TrainConfig};
use crate::{seed, Error, Result};

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trained {
    pub model: ClassifierModel,
    /// Mean training cross-entropy of the untrained model.
    pub initial_loss: f64,
    /// Mean batch loss per epoch.
    pub loss_history: Vec<f64>,
}

impl Trained {
    pub fn final_loss(&self) -> f64 {
        self.loss_history.last().copied().unwrap_or(self.initial_loss)
    }
}

fn mean_loss(model: &ClassifierModel, set: &[ModelInput]) -> Result<f64> {
    let mut total = 0.0;
    for chunk in set.chunks(64) {
        let labels: Vec<usize> = chunk.iter().map(|m| m.label).collect();
        for (logits, &label) in forward(model, chunk)?.iter().zip(&labels) {
            if label >= model.config.num_classes {
                return Err(Error::LabelOutOfRange {
                    label,
                    num_classes: model.config.num_classes,
                });
            }
            total += layers::cross_entropy(logits, label).0;
        }
    }
    Ok(total / set.len() as f64)
}

/// Mini-batch training. The set is first put into key order, so the result
/// depends on the seed and the set's contents but not on the order it was
/// passed in. Input standardizers are fitted here unless already fitted.
pub fn train(mut model: ClassifierModel, set: &[ModelInput], cfg: &TrainConfig) -> Result<Trained> {
    if set.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let violations = cfg.validate();
    if !violations.is_empty() {
        return Err(Error::Validation {
            what: "train config",
            violations,
        });
    }
    let mut order: Vec<&ModelInput> = set.iter().collect();
    order.sort_by(|a, b| a.key.cmp(&b.key));
    let sorted: Vec<ModelInput> = order.into_iter().cloned().collect();

    if !model.normalization_fitted {
        model.fit_normalization(&sorted);
    }
    let initial_loss = mean_loss(&model, &sorted)?;
    if !initial_loss.is_finite() {
        return Err(Error::Divergence {
            epoch: 0,
            loss: initial_loss,
        });
    }

    let sizes: Vec<usize> = model.parameters().iter().map(|p| p.len()).collect();
    let mut m1: Vec<Vec<f64>> = sizes.iter().map(|&n| vec![0.0; n]).collect();
    let mut m2 = m1.clone();
    let mut step = 0i32;
    let mut rng = seed::rng(seed::derive_str(cfg.seed, "shuffle"));
    let mut idx: Vec<usize> = (0..sorted.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        idx.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in idx.chunks(cfg.batch_size) {
            let raw: Vec<ModelInput> = chunk.iter().map(|&i| sorted[i].clone()).collect();
            let batch = pad_batch(&raw);
            let labels: Vec<usize> = batch.iter().map(|m| m.label).collect();
            let (loss, grads) = loss_and_gradients(&model, &batch, &labels)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, loss });
            }
            epoch_loss += loss;
            batches += 1;
            step += 1;
            let lr = cfg.learning_rate;
            let (bc1, bc2) = (1.0 - ADAM_BETA1.powi(step), 1.0 - ADAM_BETA2.powi(step));
            for (k, (p, g)) in model.parameters_mut().into_iter().zip(&grads.tensors).enumerate() {
                match cfg.optimizer {
                    Optimizer::Sgd => {
                        for (w, &d) in p.iter_mut().zip(g) {
                            *w -= lr * d;
                        }
                    }
                    Optimizer::Adam => {
                        let (a, b) = (&mut m1[k], &mut m2[k]);
                        for i in 0..p.len() {
                            a[i] = ADAM_BETA1 * a[i] + (1.0 - ADAM_BETA1) * g[i];
                            b[i] = ADAM_BETA2 * b[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
                            p[i] -= lr * (a[i] / bc1) / ((b[i] / bc2).sqrt() + ADAM_EPS);
                        }
                    }
                }
            }
        }
        let mean = epoch_loss / batches as f64;
        if !mean.is_finite() || !model.is_finite() {
            return Err(Error::Divergence { epoch, loss: mean });
        }
        history.push(mean);
    }
    Ok(Trained {
        model,
        initial_loss,
        loss_history: history,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Percent correct.
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    /// `confusion[true][predicted]`
    pub confusion: Vec<Vec<usize>>,
}

/// Argmax predictions scored against labels. Ties go to the lower class.
pub fn evaluate(model: &ClassifierModel, set: &[ModelInput]) -> Result<Evaluation> {
    if set.is_empty() {
        return Err(Error::Empty("test set"));
    }
    let k = model.config.num_classes;
    let mut confusion = vec![vec![0usize; k]; k];
    let mut correct = 0;
    for ex in set {
        if ex.label >= k {
            return Err(Error::LabelOutOfRange {
                label: ex.label,
                num_classes: k,
            });
        }
        let logits = forward(model, std::slice::from_ref(ex))?.remove(0);
        let pred = logits
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &z)| if z > best.1 { (i, z) } else { best })
            .0;
        confusion[ex.label][pred] += 1;
        correct += usize::from(pred == ex.label);
    }
    Ok(Evaluation {
        accuracy: correct as f64 / set.len() as f64 * 100.0,
        correct,
        total: set.len(),
        confusion,
    })
}
