use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::kernels::BnRunning;
use super::model::{loss_mse, GinModel, GraphBatch, Mode, ModelShape};
use crate::error::{Error, Result};
use crate::rewire::RewirePlan;
use crate::synthdata::Sample;

/// Linear warmup to `peak_lr`, then geometric decay per epoch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainSchedule {
    pub peak_lr: f64,
    pub total_epochs: usize,
    pub warmup_epochs: usize,
    pub decay_per_epoch: f64,
    pub batch_size: usize,
}

impl TrainSchedule {
    pub fn lr(&self, epoch: usize) -> f64 {
        if epoch < self.warmup_epochs {
            self.peak_lr * (epoch + 1) as f64 / self.warmup_epochs as f64
        } else {
            self.peak_lr * self.decay_per_epoch.powi((epoch - self.warmup_epochs) as i32)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.peak_lr > 0.0) || !(self.decay_per_epoch > 0.0) || self.batch_size == 0 {
            return Err(Error::InvalidArgument(
                "schedule needs peak_lr > 0, decay > 0 and batch_size >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Adam with bias correction.
#[derive(Clone, Debug)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(num_params: usize) -> Self {
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let mhat = *m / bc1;
            let vhat = *v / bc2;
            *p -= lr * mhat / (vhat.sqrt() + self.eps);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub lr: f64,
    pub train_mse: f64,
    pub eval_mse: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochMetrics>,
}

impl TrainReport {
    pub fn final_eval_mse(&self) -> f64 {
        self.epochs.last().map_or(f64::NAN, |e| e.eval_mse)
    }

    /// `epoch,lr,train_mse,eval_mse` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,lr,train_mse,eval_mse\n");
        for e in &self.epochs {
            writeln!(out, "{},{},{},{}", e.epoch, e.lr, e.train_mse, e.eval_mse).unwrap();
        }
        out
    }
}

/// Samples with one precomputed rewire plan each.
#[derive(Clone, Copy, Debug)]
pub struct TrainData<'a> {
    pub train: &'a [Sample],
    pub train_plans: &'a [RewirePlan],
    pub eval: &'a [Sample],
    pub eval_plans: &'a [RewirePlan],
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainOptions {
    pub schedule: TrainSchedule,
    /// Seeds the per-epoch shuffles.
    pub seed: u64,
    /// Fit standardised targets (train mean/std); metrics stay in raw units.
    pub standardize_targets: bool,
}

/// Affine target transform `(t - shift) / scale`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct TargetScale {
    shift: f64,
    scale: f64,
}

impl TargetScale {
    fn fit(samples: &[Sample], enabled: bool) -> Self {
        if !enabled || samples.is_empty() {
            return TargetScale { shift: 0.0, scale: 1.0 };
        }
        let n = samples.len() as f64;
        let mean = samples.iter().map(|s| s.target).sum::<f64>() / n;
        let var = samples.iter().map(|s| (s.target - mean).powi(2)).sum::<f64>() / n;
        let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
        TargetScale { shift: mean, scale }
    }

    fn forward(&self, t: f64) -> f64 {
        (t - self.shift) / self.scale
    }

    fn inverse(&self, y: f64) -> f64 {
        y * self.scale + self.shift
    }
}

fn batches_in_order<'a>(
    samples: &'a [Sample],
    plans: &'a [RewirePlan],
    order: &[usize],
    batch_size: usize,
) -> Result<Vec<(GraphBatch, Vec<f64>)>> {
    order
        .chunks(batch_size)
        .map(|chunk| {
            let items: Vec<_> = chunk.iter().map(|&i| (&samples[i], &plans[i])).collect();
            let targets = chunk.iter().map(|&i| samples[i].target).collect();
            Ok((GraphBatch::new(&items)?, targets))
        })
        .collect()
}

/// Eval-mode MSE in raw target units.
fn evaluate(model: &GinModel, batches: &[(GraphBatch, Vec<f64>)], scale: TargetScale) -> Result<f64> {
    let mut sq = 0.0;
    let mut count = 0usize;
    for (batch, targets) in batches {
        let (preds, _) = model.forward(batch, Mode::Eval)?;
        for (p, t) in preds.iter().zip(targets) {
            let err = scale.inverse(*p) - t;
            sq += err * err;
            count += 1;
        }
    }
    Ok(if count == 0 { f64::NAN } else { sq / count as f64 })
}

/// Mini-batch Adam training with per-epoch reshuffling. Single-threaded and
/// bit-reproducible for a fixed model, data and seed.
pub fn train(model: &mut GinModel, data: TrainData<'_>, opts: TrainOptions) -> Result<TrainReport> {
    let schedule = opts.schedule;
    schedule.validate()?;
    if data.train.len() != data.train_plans.len() || data.eval.len() != data.eval_plans.len() {
        return Err(Error::SizeMismatch("need exactly one rewire plan per sample".into()));
    }
    if data.train.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    let scale = TargetScale::fit(data.train, opts.standardize_targets);
    let eval_order: Vec<usize> = (0..data.eval.len()).collect();
    let eval_batches = batches_in_order(data.eval, data.eval_plans, &eval_order, schedule.batch_size)?;

    let mut adam = Adam::new(model.params().len());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let mut epochs = Vec::with_capacity(schedule.total_epochs);
    for epoch in 0..schedule.total_epochs {
        let lr = schedule.lr(epoch);
        order.shuffle(&mut rng);
        let mut sq = 0.0;
        for chunk in order.chunks(schedule.batch_size) {
            let items: Vec<_> = chunk.iter().map(|&i| (&data.train[i], &data.train_plans[i])).collect();
            let batch = GraphBatch::new(&items)?;
            let targets: Vec<f64> = chunk.iter().map(|&i| scale.forward(data.train[i].target)).collect();
            let (preds, cache) = model.forward(&batch, Mode::Train)?;
            let loss = loss_mse(&preds, &targets)?;
            if !loss.is_finite() {
                return Err(Error::Diverged(format!("non-finite loss at epoch {epoch}")));
            }
            sq += loss * chunk.len() as f64 * scale.scale * scale.scale;
            let grads = model.backward(&batch, &cache, &preds, &targets)?;
            model.update_running(&cache, batch.num_nodes());
            adam.step(model.params_mut(), &grads, lr);
        }
        let train_mse = sq / data.train.len() as f64;
        let eval_mse = evaluate(model, &eval_batches, scale)?;
        if !eval_mse.is_finite() && !data.eval.is_empty() {
            return Err(Error::Diverged(format!("non-finite eval MSE at epoch {epoch}")));
        }
        epochs.push(EpochMetrics {
            epoch,
            lr,
            train_mse,
            eval_mse,
        });
    }
    // Predictions from standardised models are mapped back at inference; bake
    // the transform into the output layer so the saved model is self-contained.
    if opts.standardize_targets {
        model.rescale_output(scale.scale, scale.shift);
    }
    Ok(TrainReport { epochs })
}

const CHECKPOINT_MAGIC: &str = "prior-rewire-gin v1";

impl GinModel {
    /// Maps outputs `y -> scale * y + shift` by adjusting the last layer.
    pub fn rescale_output(&mut self, scale: f64, shift: f64) {
        let groups = self.param_groups();
        let (_, w) = groups.iter().find(|(n, _)| n == "readout.1.weight").cloned().expect("layout");
        let (_, b) = groups.iter().find(|(n, _)| n == "readout.1.bias").cloned().expect("layout");
        let p = self.params_mut();
        p[w].iter_mut().for_each(|v| *v *= scale);
        p[b.start] = p[b.start] * scale + shift;
    }

    /// Text checkpoint: magic line, shape header, parameters, running stats.
    pub fn to_checkpoint(&self) -> String {
        let s = self.shape();
        let mut out = String::new();
        writeln!(out, "{CHECKPOINT_MAGIC}").unwrap();
        writeln!(out, "shape input_dim={} hidden={} layers={}", s.input_dim, s.hidden, s.layers).unwrap();
        writeln!(out, "params {}", self.params().len()).unwrap();
        for v in self.params() {
            writeln!(out, "{v}").unwrap();
        }
        writeln!(out, "running {}", self.running_stats().len()).unwrap();
        for r in self.running_stats() {
            let join = |xs: &[f64]| xs.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
            writeln!(out, "mean {}", join(&r.mean)).unwrap();
            writeln!(out, "var {}", join(&r.var)).unwrap();
        }
        out
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let mut next = || lines.next().ok_or(Error::Parse { line: 0, msg: "truncated checkpoint".into() });
        let err = |line: usize, msg: &str| Error::Parse { line, msg: msg.into() };

        let (ln, magic) = next()?;
        if magic != CHECKPOINT_MAGIC {
            return Err(err(ln, "not a GIN checkpoint"));
        }
        let (ln, shape_line) = next()?;
        let mut dims = [0usize; 3];
        let fields: Vec<&str> = shape_line.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != "shape" {
            return Err(err(ln, "expected shape header"));
        }
        for (slot, (field, key)) in dims.iter_mut().zip(fields[1..].iter().zip(["input_dim", "hidden", "layers"])) {
            let value = field
                .strip_prefix(key)
                .and_then(|r| r.strip_prefix('='))
                .ok_or_else(|| err(ln, "bad shape field"))?;
            *slot = value.parse().map_err(|_| err(ln, "bad shape value"))?;
        }
        let shape = ModelShape::new(dims[0], dims[1], dims[2]);
        let (ln, count_line) = next()?;
        let count: usize = count_line
            .strip_prefix("params ")
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| err(ln, "expected `params N`"))?;
        let mut params = Vec::with_capacity(count);
        for _ in 0..count {
            let (ln, v) = next()?;
            params.push(v.parse().map_err(|_| err(ln, "bad parameter"))?);
        }
        let (ln, running_line) = next()?;
        let blocks: usize = running_line
            .strip_prefix("running ")
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| err(ln, "expected `running N`"))?;
        let mut running = Vec::with_capacity(blocks);
        for _ in 0..blocks {
            let mut read_row = |key: &str| -> Result<Vec<f64>> {
                let (ln, line) = next()?;
                let rest = line
                    .strip_prefix(key)
                    .ok_or_else(|| err(ln, "bad running-stat line"))?;
                rest.split_whitespace()
                    .map(|t| t.parse().map_err(|_| err(ln, "bad running-stat value")))
                    .collect()
            };
            let mean = read_row("mean")?;
            let var = read_row("var")?;
            running.push(BnRunning { mean, var });
        }
        GinModel::from_parts(shape, params, running)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_a() -> TrainSchedule {
        TrainSchedule {
            peak_lr: 1e-3,
            total_epochs: 200,
            warmup_epochs: 50,
            decay_per_epoch: 0.95,
            batch_size: 32,
        }
    }

    #[test]
    fn lr_schedule() {
        let s = table_a();
        assert!((s.lr(0) - 2e-5).abs() < 1e-18);
        assert!((s.lr(49) - 1e-3).abs() < 1e-18);
        assert_eq!(s.lr(50), 1e-3);
        assert!((s.lr(51) - 9.5e-4).abs() < 1e-18);
        assert!((0..200).all(|e| s.lr(e) > 0.0));
    }

    #[test]
    fn adam_first_step_is_lr_sized() {
        let mut p = vec![1.0, -1.0];
        let mut adam = Adam::new(2);
        adam.step(&mut p, &[0.5, -2.0], 0.1);
        assert!((p[0] - 0.9).abs() < 1e-6);
        assert!((p[1] + 0.9).abs() < 1e-6);
    }

    #[test]
    fn checkpoint_roundtrip() {
        let m = GinModel::new(ModelShape::new(3, 4, 2), 9);
        let text = m.to_checkpoint();
        assert_eq!(GinModel::from_checkpoint(&text).unwrap(), m);
        assert!(GinModel::from_checkpoint("nope").is_err());
    }
}
