use rand::Rng;
use serde::{Deserialize, Serialize};

use super::input::{Grid, ModelInput};
use super::layers::{self, Tensor3};
use super::{ModelConfig, Normalization, Pooling};
use crate::{seed, Error, Result};

/// Channels and frequency bins of one modality's input grid. Frame counts vary
/// per example and are not part of the shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StackShape {
    pub channels: usize,
    pub bins: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct InputShapes {
    pub audio: Option<StackShape>,
    pub accel: Option<StackShape>,
    pub motion: Option<usize>,
}

impl InputShapes {
    /// Shapes of an example, as the model would see it.
    pub fn of(example: &ModelInput) -> Self {
        let sh = |g: &Grid| StackShape {
            channels: g.channels,
            bins: g.bins,
        };
        InputShapes {
            audio: example.audio.as_ref().map(sh),
            accel: example.accel.as_ref().map(sh),
            motion: example.motion.as_ref().map(Vec::len),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvLayer {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: [usize; 2],
    pub pool: [usize; 2],
    /// `[out][in][kh][kw]`
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    /// `[out][in]`
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Fixed per-(channel, bin) affine input normalization, fitted on the
/// training set and never updated by the optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub inv_std: Vec<f64>,
}

impl Standardizer {
    pub fn identity(len: usize) -> Self {
        Standardizer {
            mean: vec![0.0; len],
            inv_std: vec![1.0; len],
        }
    }

    /// Statistics over every valid frame of `grids`, visited in order.
    pub fn fit<'a>(grids: impl Iterator<Item = &'a Grid>, shape: StackShape, mode: Normalization) -> Self {
        let len = shape.channels * shape.bins;
        let (mut s1, mut s2, mut n) = (vec![0.0; len], vec![0.0; len], 0usize);
        for g in grids {
            for c in 0..g.channels {
                for t in 0..g.valid {
                    let row = &g.data[(c * g.frames + t) * g.bins..][..g.bins];
                    for (b, &v) in row.iter().enumerate() {
                        s1[c * g.bins + b] += v;
                        s2[c * g.bins + b] += v * v;
                    }
                }
            }
            n += g.valid;
        }
        if n == 0 {
            return Standardizer::identity(len);
        }
        let mut n = n as f64;
        if mode == Normalization::PerChannel {
            for (s, bins) in [&mut s1, &mut s2].into_iter().zip([shape.bins; 2]) {
                for c in s.chunks_mut(bins) {
                    let total: f64 = c.iter().sum();
                    c.fill(total);
                }
            }
            n *= shape.bins as f64;
        }
        let mean: Vec<f64> = s1.iter().map(|s| s / n).collect();
        let inv_std = s2
            .iter()
            .zip(&mean)
            .map(|(s, m)| 1.0 / (s / n - m * m).max(0.0).sqrt().max(1e-6))
            .collect();
        Standardizer { mean, inv_std }
    }

    fn apply(&self, g: &Grid) -> Tensor3 {
        let mut x = Tensor3::zeros(g.channels, g.valid, g.bins);
        for c in 0..g.channels {
            for t in 0..g.valid {
                let src = &g.data[(c * g.frames + t) * g.bins..][..g.bins];
                let dst = x.idx(c, t, 0);
                let (m, s) = (&self.mean[c * g.bins..], &self.inv_std[c * g.bins..]);
                for b in 0..g.bins {
                    x.data[dst + b] = (src[b] - m[b]) * s[b];
                }
            }
        }
        x
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvStack {
    pub shape: StackShape,
    pub layers: Vec<ConvLayer>,
    pub norm: Standardizer,
}

impl ConvStack {
    fn output_len(&self, pooling: Pooling) -> usize {
        let last = self.layers.last().map_or(self.shape.channels, |l| l.out_channels);
        match pooling {
            Pooling::Global => last,
            Pooling::TimeOnly => {
                let bins = self.layers.iter().fold(self.shape.bins, |b, l| b.div_ceil(l.pool[1]));
                last * bins
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub config: ModelConfig,
    pub shapes: InputShapes,
    pub audio: Option<ConvStack>,
    pub accel: Option<ConvStack>,
    pub hidden: DenseLayer,
    pub output: DenseLayer,
    /// Whether the input standardizers hold training-set statistics.
    pub normalization_fitted: bool,
}

/// Gradients in the same order as [`ClassifierModel::parameters`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros_like(model: &ClassifierModel) -> Self {
        Gradients {
            tensors: model.parameters().iter().map(|p| vec![0.0; p.len()]).collect(),
        }
    }
}

fn he_uniform(rng: &mut impl Rng, n: usize, fan_in: usize) -> Vec<f64> {
    let limit = (6.0 / fan_in as f64).sqrt();
    (0..n).map(|_| rng.random_range(-limit..limit)).collect()
}

fn dense_layer(rng: &mut impl Rng, inputs: usize, outputs: usize) -> DenseLayer {
    DenseLayer {
        inputs,
        outputs,
        weights: he_uniform(rng, inputs * outputs, inputs.max(1)),
        bias: vec![0.0; outputs],
    }
}

fn conv_stack(rng: &mut impl Rng, cfg: &ModelConfig, shape: StackShape) -> Result<ConvStack> {
    if shape.channels == 0 || shape.bins == 0 {
        return Err(Error::Config(format!("empty input shape {shape:?}")));
    }
    let mut in_c = shape.channels;
    let mut layers = Vec::new();
    for b in &cfg.conv_blocks {
        let [kh, kw] = b.kernel;
        let fan_in = in_c * kh * kw;
        layers.push(ConvLayer {
            in_channels: in_c,
            out_channels: b.out_channels,
            kernel: b.kernel,
            pool: b.pool,
            weights: he_uniform(rng, b.out_channels * fan_in, fan_in),
            bias: vec![0.0; b.out_channels],
        });
        in_c = b.out_channels;
    }
    Ok(ConvStack {
        shape,
        layers,
        norm: Standardizer::identity(shape.channels * shape.bins),
    })
}

/// Construct a model for the given input shapes. Weights are drawn from
/// `U(-sqrt(6 / fan_in), sqrt(6 / fan_in))`; biases start at zero.
pub fn build_model(config: &ModelConfig, shapes: InputShapes) -> Result<ClassifierModel> {
    config.check().map_err(|e| Error::Config(e.to_string()))?;
    if shapes.audio.is_none() && shapes.accel.is_none() && shapes.motion.is_none() {
        return Err(Error::Config("model has no inputs".into()));
    }
    if shapes.motion == Some(0) {
        return Err(Error::Config("motion vector must be nonempty".into()));
    }
    let mut rng = seed::rng(config.seed);
    // Fixed draw order: audio stack, accel stack, hidden, output.
    let audio = shapes.audio.map(|s| conv_stack(&mut rng, config, s)).transpose()?;
    let accel = shapes.accel.map(|s| conv_stack(&mut rng, config, s)).transpose()?;
    let fused = audio.as_ref().map_or(0, |s| s.output_len(config.pooling))
        + accel.as_ref().map_or(0, |s| s.output_len(config.pooling))
        + shapes.motion.unwrap_or(0);
    let hidden = dense_layer(&mut rng, fused, config.dense_hidden);
    let output = dense_layer(&mut rng, config.dense_hidden, config.num_classes);
    Ok(ClassifierModel {
        config: config.clone(),
        shapes,
        audio,
        accel,
        hidden,
        output,
        normalization_fitted: false,
    })
}

impl ClassifierModel {
    /// Length of the fused vector entering the hidden layer.
    pub fn dense_input_len(&self) -> usize {
        self.hidden.inputs
    }

    /// Every trainable tensor, in a fixed order.
    pub fn parameters(&self) -> Vec<&Vec<f64>> {
        let mut out = Vec::new();
        for stack in [&self.audio, &self.accel].into_iter().flatten() {
            for l in &stack.layers {
                out.push(&l.weights);
                out.push(&l.bias);
            }
        }
        for d in [&self.hidden, &self.output] {
            out.push(&d.weights);
            out.push(&d.bias);
        }
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out = Vec::new();
        for stack in [&mut self.audio, &mut self.accel].into_iter().flatten() {
            for l in &mut stack.layers {
                out.push(&mut l.weights);
                out.push(&mut l.bias);
            }
        }
        for d in [&mut self.hidden, &mut self.output] {
            out.push(&mut d.weights);
            out.push(&mut d.bias);
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|p| p.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.parameters().iter().all(|p| p.iter().all(|v| v.is_finite()))
    }

    /// Fit the input standardizers on `set` (valid frames only).
    pub fn fit_normalization(&mut self, set: &[ModelInput]) {
        let mode = self.config.normalization;
        if let Some(s) = self.audio.as_mut() {
            s.norm = Standardizer::fit(set.iter().filter_map(|m| m.audio.as_ref()), s.shape, mode);
        }
        if let Some(s) = self.accel.as_mut() {
            s.norm = Standardizer::fit(set.iter().filter_map(|m| m.accel.as_ref()), s.shape, mode);
        }
        self.normalization_fitted = true;
    }

    fn check_example(&self, ex: &ModelInput) -> Result<()> {
        let check = |name: &str, stack: &Option<ConvStack>, grid: &Option<Grid>| -> Result<()> {
            match (stack, grid) {
                (None, None) => Ok(()),
                (Some(s), Some(g)) => {
                    if g.channels != s.shape.channels || g.bins != s.shape.bins {
                        Err(Error::Shape(format!(
                            "{name} grid is {}x{} (channels x bins), model expects {}x{}",
                            g.channels, g.bins, s.shape.channels, s.shape.bins
                        )))
                    } else if g.valid == 0 || g.valid > g.frames {
                        Err(Error::Shape(format!(
                            "{name} grid has {} valid of {} frames",
                            g.valid, g.frames
                        )))
                    } else {
                        Ok(())
                    }
                }
                (Some(_), None) => Err(Error::Shape(format!("{name} input missing"))),
                (None, Some(_)) => Err(Error::Shape(format!("unexpected {name} input"))),
            }
        };
        check("audio", &self.audio, &ex.audio)?;
        check("accel", &self.accel, &ex.accel)?;
        if ex.motion.as_ref().map(Vec::len) != self.shapes.motion {
            return Err(Error::Shape(format!(
                "motion vector length {:?}, model expects {:?}",
                ex.motion.as_ref().map(Vec::len),
                self.shapes.motion
            )));
        }
        Ok(())
    }
}

struct BlockCache {
    input: Tensor3,
    activated: Tensor3,
    argmax: Vec<usize>,
}

struct StackCache {
    blocks: Vec<BlockCache>,
    last: (usize, usize, usize),
}

/// Intermediate values of one example's forward pass.
pub struct ForwardTrace {
    stacks: Vec<Option<StackCache>>,
    /// Fused vector entering the hidden layer.
    pub fused: Vec<f64>,
    hidden: Vec<f64>,
    pub logits: Vec<f64>,
}

fn stack_forward(stack: &ConvStack, grid: &Grid, pooling: Pooling) -> (Vec<f64>, StackCache) {
    let mut x = stack.norm.apply(grid);
    let mut blocks = Vec::with_capacity(stack.layers.len());
    for l in &stack.layers {
        let mut y = layers::conv2d(&x, &l.weights, &l.bias, l.out_channels, l.kernel[0], l.kernel[1]);
        layers::relu_inplace(&mut y);
        let (p, argmax) = layers::max_pool(&y, l.pool[0], l.pool[1]);
        blocks.push(BlockCache {
            input: x,
            activated: y,
            argmax,
        });
        x = p;
    }
    let pooled = match pooling {
        Pooling::Global => layers::global_avg_pool(&x),
        Pooling::TimeOnly => layers::time_avg_pool(&x),
    };
    (
        pooled,
        StackCache {
            blocks,
            last: (x.c, x.t, x.f),
        },
    )
}

fn stack_backward(stack: &ConvStack, cache: &StackCache, d_pooled: &[f64], pooling: Pooling, grads: &mut [Vec<f64>]) {
    let mut d = match pooling {
        Pooling::Global => layers::global_avg_pool_backward(d_pooled, cache.last),
        Pooling::TimeOnly => layers::time_avg_pool_backward(d_pooled, cache.last),
    };
    for (i, (l, bc)) in stack.layers.iter().zip(&cache.blocks).enumerate().rev() {
        let a = &bc.activated;
        let mut dy = layers::max_pool_backward(&bc.argmax, &d, (a.c, a.t, a.f));
        layers::relu_backward_inplace(a, &mut dy);
        let (dw, db, dx) = layers::conv2d_backward(&bc.input, &l.weights, &dy, l.kernel[0], l.kernel[1], i > 0);
        grads[2 * i] = dw;
        grads[2 * i + 1] = db;
        if let Some(dx) = dx {
            d = dx;
        }
    }
}

fn forward_one(model: &ClassifierModel, ex: &ModelInput) -> Result<ForwardTrace> {
    model.check_example(ex)?;
    let pooling = model.config.pooling;
    let mut fused = Vec::with_capacity(model.hidden.inputs);
    let mut stacks = Vec::with_capacity(2);
    for (stack, grid) in [(&model.audio, &ex.audio), (&model.accel, &ex.accel)] {
        match (stack, grid) {
            (Some(s), Some(g)) => {
                let (v, c) = stack_forward(s, g, pooling);
                fused.extend(v);
                stacks.push(Some(c));
            }
            _ => stacks.push(None),
        }
    }
    if let Some(m) = &ex.motion {
        fused.extend_from_slice(m);
    }
    let mut hidden = layers::dense(&fused, &model.hidden.weights, &model.hidden.bias);
    hidden.iter_mut().for_each(|v| *v = v.max(0.0));
    let logits = layers::dense(&hidden, &model.output.weights, &model.output.bias);
    Ok(ForwardTrace {
        stacks,
        fused,
        hidden,
        logits,
    })
}

/// Full forward pass of one example, keeping intermediates.
pub fn forward_trace(model: &ClassifierModel, example: &ModelInput) -> Result<ForwardTrace> {
    forward_one(model, example)
}

/// Logits for every example in the batch, one row each.
pub fn forward(model: &ClassifierModel, batch: &[ModelInput]) -> Result<Vec<Vec<f64>>> {
    batch.iter().map(|ex| forward_one(model, ex).map(|t| t.logits)).collect()
}

fn backward_one(model: &ClassifierModel, trace: &ForwardTrace, dlogits: &[f64], grads: &mut Gradients) {
    let n_dense = 4;
    let n = grads.tensors.len();
    let (stack_grads, dense_grads) = grads.tensors.split_at_mut(n - n_dense);
    let (hid, out) = dense_grads.split_at_mut(2);

    let (ow, ob) = out.split_at_mut(1);
    let mut dh = layers::dense_backward(&trace.hidden, &model.output.weights, dlogits, &mut ow[0], &mut ob[0]);
    for (g, &h) in dh.iter_mut().zip(&trace.hidden) {
        if h <= 0.0 {
            *g = 0.0;
        }
    }
    let (hw, hb) = hid.split_at_mut(1);
    let dfused = layers::dense_backward(&trace.fused, &model.hidden.weights, &dh, &mut hw[0], &mut hb[0]);

    let mut offset = 0;
    let mut slot = 0;
    for (stack, cache) in [&model.audio, &model.accel].into_iter().zip(&trace.stacks) {
        let (Some(stack), Some(cache)) = (stack, cache) else {
            continue;
        };
        let len = stack.output_len(model.config.pooling);
        let k = 2 * stack.layers.len();
        let mut local: Vec<Vec<f64>> = vec![Vec::new(); k];
        stack_backward(stack, cache, &dfused[offset..offset + len], model.config.pooling, &mut local);
        for (dst, src) in stack_grads[slot..slot + k].iter_mut().zip(local) {
            dst.iter_mut().zip(src).for_each(|(a, b)| *a += b);
        }
        offset += len;
        slot += k;
    }
}

/// Mean cross-entropy over the batch and its gradient for every parameter.
pub fn loss_and_gradients(model: &ClassifierModel, batch: &[ModelInput], labels: &[usize]) -> Result<(f64, Gradients)> {
    if batch.is_empty() {
        return Err(Error::Empty("batch"));
    }
    if batch.len() != labels.len() {
        return Err(Error::Shape(format!("{} examples but {} labels", batch.len(), labels.len())));
    }
    let k = model.config.num_classes;
    if let Some(&label) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::LabelOutOfRange { label, num_classes: k });
    }
    let scale = 1.0 / batch.len() as f64;
    let mut total = Gradients::zeros_like(model);
    let mut loss = 0.0;
    for (ex, &label) in batch.iter().zip(labels) {
        let trace = forward_one(model, ex)?;
        let (l, mut dlogits) = layers::cross_entropy(&trace.logits, label);
        loss += l * scale;
        dlogits.iter_mut().for_each(|g| *g *= scale);
        backward_one(model, &trace, &dlogits, &mut total);
    }
    Ok((loss, total))
}
