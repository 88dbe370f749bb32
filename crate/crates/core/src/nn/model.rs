use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::kernels::{
    aggregate, aggregate_backward, batchnorm_backward, batchnorm_eval, batchnorm_train,
    dense_backward, dense_forward, relu, relu_backward, Adjacency, BnCache, BnRunning,
};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::Matrix;
use crate::rewire::RewirePlan;
use crate::synthdata::Sample;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelShape {
    pub input_dim: usize,
    pub hidden: usize,
    pub layers: usize,
}

impl ModelShape {
    pub fn new(input_dim: usize, hidden: usize, layers: usize) -> Self {
        ModelShape {
            input_dim,
            hidden,
            layers,
        }
    }

    pub fn param_count(&self) -> usize {
        let (f, h, l) = (self.input_dim, self.hidden, self.layers);
        (f * h + h) + l * (1 + 2 * (h * h + h) + 2 * h) + (h * h + h) + (h + 1)
    }

    fn layout(&self) -> Layout {
        let (f, h) = (self.input_dim, self.hidden);
        let mut cursor = 0;
        let mut take = |len: usize| {
            let r = Span(cursor, len);
            cursor += len;
            r
        };
        let input_w = take(f * h);
        let input_b = take(h);
        let layers = (0..self.layers)
            .map(|_| LayerSpans {
                eps: take(1),
                w1: take(h * h),
                b1: take(h),
                gamma: take(h),
                beta: take(h),
                w2: take(h * h),
                b2: take(h),
            })
            .collect();
        let out1_w = take(h * h);
        let out1_b = take(h);
        let out2_w = take(h);
        let out2_b = take(1);
        let total = cursor;
        Layout {
            input_w,
            input_b,
            layers,
            out1_w,
            out1_b,
            out2_w,
            out2_b,
            total,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Span(usize, usize);

impl Span {
    fn of<'a>(&self, p: &'a [f64]) -> &'a [f64] {
        &p[self.0..self.0 + self.1]
    }

    fn of_mut<'a>(&self, p: &'a mut [f64]) -> &'a mut [f64] {
        &mut p[self.0..self.0 + self.1]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct LayerSpans {
    eps: Span,
    w1: Span,
    b1: Span,
    gamma: Span,
    beta: Span,
    w2: Span,
    b2: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Layout {
    input_w: Span,
    input_b: Span,
    layers: Vec<LayerSpans>,
    out1_w: Span,
    out1_b: Span,
    out2_w: Span,
    out2_b: Span,
    total: usize,
}

/// GIN regressor: input dense layer, `layers` GIN layers with learnable
/// `eps` and MLP `dense -> batch-norm -> ReLU -> dense`, sum pooling, and an
/// output MLP `dense -> ReLU -> dense(1)`.
///
/// All trainable parameters live in one flat vector; see [`GinModel::params`].
#[derive(Clone, Debug, PartialEq)]
pub struct GinModel {
    shape: ModelShape,
    layout: Layout,
    params: Vec<f64>,
    running: Vec<BnRunning>,
}

impl GinModel {
    /// Uniform fan-in initialisation, `eps = 0`, batch-norm scale 1 and shift 0.
    pub fn new(shape: ModelShape, seed: u64) -> Self {
        let layout = shape.layout();
        let mut params = vec![0.0; layout.total];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut init = |span: Span, fan_in: usize, params: &mut [f64]| {
            let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
            for p in span.of_mut(params) {
                *p = rng.gen_range(-bound..bound);
            }
        };
        let (f, h) = (shape.input_dim, shape.hidden);
        init(layout.input_w, f, &mut params);
        init(layout.input_b, f, &mut params);
        for l in &layout.layers {
            init(l.w1, h, &mut params);
            init(l.b1, h, &mut params);
            l.gamma.of_mut(&mut params).fill(1.0);
            init(l.w2, h, &mut params);
            init(l.b2, h, &mut params);
        }
        init(layout.out1_w, h, &mut params);
        init(layout.out1_b, h, &mut params);
        init(layout.out2_w, h, &mut params);
        init(layout.out2_b, h, &mut params);
        GinModel {
            shape,
            running: vec![BnRunning::new(h); shape.layers],
            layout,
            params,
        }
    }

    /// Rebuilds a model from a flat parameter vector and running statistics.
    pub fn from_parts(shape: ModelShape, params: Vec<f64>, running: Vec<BnRunning>) -> Result<Self> {
        let layout = shape.layout();
        if params.len() != layout.total || running.len() != shape.layers {
            return Err(Error::SizeMismatch(format!(
                "expected {} parameters and {} running-stat blocks",
                layout.total, shape.layers
            )));
        }
        if running.iter().any(|r| r.mean.len() != shape.hidden || r.var.len() != shape.hidden) {
            return Err(Error::SizeMismatch("running statistics width".into()));
        }
        Ok(GinModel {
            shape,
            layout,
            params,
            running,
        })
    }

    pub fn shape(&self) -> ModelShape {
        self.shape
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn running_stats(&self) -> &[BnRunning] {
        &self.running
    }

    pub fn eps(&self, layer: usize) -> f64 {
        self.layout.layers[layer].eps.of(&self.params)[0]
    }

    /// Zeroes the final dense layer's weights (not its bias).
    pub fn zero_output_weights(&mut self) {
        self.layout.out2_w.of_mut(&mut self.params).fill(0.0);
    }

    /// Names each flat parameter index with its group, e.g. `layer1.eps`.
    pub fn param_groups(&self) -> Vec<(String, std::ops::Range<usize>)> {
        let l = &self.layout;
        let r = |s: Span| s.0..s.0 + s.1;
        let mut out = vec![
            ("input.weight".to_string(), r(l.input_w)),
            ("input.bias".to_string(), r(l.input_b)),
        ];
        for (i, ls) in l.layers.iter().enumerate() {
            for (name, span) in [
                ("eps", ls.eps),
                ("mlp.0.weight", ls.w1),
                ("mlp.0.bias", ls.b1),
                ("bn.weight", ls.gamma),
                ("bn.bias", ls.beta),
                ("mlp.1.weight", ls.w2),
                ("mlp.1.bias", ls.b2),
            ] {
                out.push((format!("layer{i}.{name}"), r(span)));
            }
        }
        out.push(("readout.0.weight".into(), r(l.out1_w)));
        out.push(("readout.0.bias".into(), r(l.out1_b)));
        out.push(("readout.1.weight".into(), r(l.out2_w)));
        out.push(("readout.1.bias".into(), r(l.out2_b)));
        out
    }

    /// Forward pass over a batch. Takes `&self`: in train mode the batch
    /// statistics are returned in the cache and applied with
    /// [`GinModel::update_running`].
    pub fn forward(&self, batch: &GraphBatch, mode: Mode) -> Result<(Vec<f64>, ForwardCache)> {
        if batch.layer_adj.len() != self.shape.layers {
            return Err(Error::SizeMismatch(format!(
                "schedule has {} layers, model has {}",
                batch.layer_adj.len(),
                self.shape.layers
            )));
        }
        if batch.x.cols() != self.shape.input_dim {
            return Err(Error::SizeMismatch(format!(
                "features have {} columns, model expects {}",
                batch.x.cols(),
                self.shape.input_dim
            )));
        }
        let p = &self.params;
        let l = &self.layout;
        let mut h = dense_forward(&batch.x, l.input_w.of(p), l.input_b.of(p));
        let mut layers = Vec::with_capacity(self.shape.layers);
        for (i, ls) in l.layers.iter().enumerate() {
            let eps = ls.eps.of(p)[0];
            let agg = aggregate(&h, &batch.layer_adj[i], eps);
            let z1 = dense_forward(&agg, ls.w1.of(p), ls.b1.of(p));
            let (bn_out, bn) = match mode {
                Mode::Train => {
                    let (y, c) = batchnorm_train(&z1, ls.gamma.of(p), ls.beta.of(p));
                    (y, Some(c))
                }
                Mode::Eval => (
                    batchnorm_eval(&z1, ls.gamma.of(p), ls.beta.of(p), &self.running[i]),
                    None,
                ),
            };
            let r = relu(&bn_out);
            let out = dense_forward(&r, ls.w2.of(p), ls.b2.of(p));
            layers.push(LayerCache {
                h_in: h,
                agg,
                bn,
                bn_out,
                r,
            });
            h = out;
        }
        let pooled = batch.pool(&h);
        let o1_pre = dense_forward(&pooled, l.out1_w.of(p), l.out1_b.of(p));
        let o1 = relu(&o1_pre);
        let pred_m = dense_forward(&o1, l.out2_w.of(p), l.out2_b.of(p));
        let preds = pred_m.data().to_vec();
        Ok((
            preds,
            ForwardCache {
                layers,
                h_final: h,
                pooled,
                o1_pre,
                o1,
            },
        ))
    }

    pub fn update_running(&mut self, cache: &ForwardCache, rows: usize) {
        for (running, layer) in self.running.iter_mut().zip(&cache.layers) {
            if let Some(bn) = &layer.bn {
                running.update(bn, rows);
            }
        }
    }

    /// Reverse-mode gradient of the batch MSE. Needs a train-mode cache.
    pub fn backward(&self, batch: &GraphBatch, cache: &ForwardCache, preds: &[f64], targets: &[f64]) -> Result<Vec<f64>> {
        if preds.len() != targets.len() || preds.len() != batch.num_graphs {
            return Err(Error::SizeMismatch("predictions and targets differ in length".into()));
        }
        let p = &self.params;
        let l = &self.layout;
        let mut grads = vec![0.0; l.total];
        let b = preds.len() as f64;
        let dpred = Matrix::from_vec(
            preds.len(),
            1,
            preds.iter().zip(targets).map(|(y, t)| 2.0 * (y - t) / b).collect(),
        );

        let mut g2w = vec![0.0; l.out2_w.1];
        let mut g2b = vec![0.0; 1];
        let do1 = dense_backward(&cache.o1, l.out2_w.of(p), &dpred, &mut g2w, &mut g2b, true)
            .expect("dx requested");
        l.out2_w.of_mut(&mut grads).copy_from_slice(&g2w);
        l.out2_b.of_mut(&mut grads).copy_from_slice(&g2b);

        let do1_pre = relu_backward(&cache.o1_pre, &do1);
        let mut g1w = vec![0.0; l.out1_w.1];
        let mut g1b = vec![0.0; l.out1_b.1];
        let dpooled = dense_backward(&cache.pooled, l.out1_w.of(p), &do1_pre, &mut g1w, &mut g1b, true)
            .expect("dx requested");
        l.out1_w.of_mut(&mut grads).copy_from_slice(&g1w);
        l.out1_b.of_mut(&mut grads).copy_from_slice(&g1b);

        let mut dh = batch.unpool(&dpooled);
        for (i, ls) in l.layers.iter().enumerate().rev() {
            let lc = &cache.layers[i];
            let bn = lc.bn.as_ref().ok_or_else(|| {
                Error::InvalidArgument("backward needs a train-mode forward pass".into())
            })?;
            let mut gw2 = vec![0.0; ls.w2.1];
            let mut gb2 = vec![0.0; ls.b2.1];
            let dr = dense_backward(&lc.r, ls.w2.of(p), &dh, &mut gw2, &mut gb2, true)
                .expect("dx requested");
            let dbn = relu_backward(&lc.bn_out, &dr);
            let mut ggamma = vec![0.0; ls.gamma.1];
            let mut gbeta = vec![0.0; ls.beta.1];
            let dz1 = batchnorm_backward(&dbn, bn, ls.gamma.of(p), &mut ggamma, &mut gbeta);
            let mut gw1 = vec![0.0; ls.w1.1];
            let mut gb1 = vec![0.0; ls.b1.1];
            let dagg = dense_backward(&lc.agg, ls.w1.of(p), &dz1, &mut gw1, &mut gb1, true)
                .expect("dx requested");
            let eps = ls.eps.of(p)[0];
            let (dh_in, deps) = aggregate_backward(&lc.h_in, &batch.layer_adj[i], eps, &dagg);
            ls.eps.of_mut(&mut grads)[0] = deps;
            ls.w1.of_mut(&mut grads).copy_from_slice(&gw1);
            ls.b1.of_mut(&mut grads).copy_from_slice(&gb1);
            ls.gamma.of_mut(&mut grads).copy_from_slice(&ggamma);
            ls.beta.of_mut(&mut grads).copy_from_slice(&gbeta);
            ls.w2.of_mut(&mut grads).copy_from_slice(&gw2);
            ls.b2.of_mut(&mut grads).copy_from_slice(&gb2);
            dh = dh_in;
        }
        let mut giw = vec![0.0; l.input_w.1];
        let mut gib = vec![0.0; l.input_b.1];
        dense_backward(&batch.x, l.input_w.of(p), &dh, &mut giw, &mut gib, false);
        l.input_w.of_mut(&mut grads).copy_from_slice(&giw);
        l.input_b.of_mut(&mut grads).copy_from_slice(&gib);
        Ok(grads)
    }

    /// Batch MSE and its gradient in one call.
    pub fn loss_and_grad(&self, batch: &GraphBatch, targets: &[f64]) -> Result<(f64, Vec<f64>, ForwardCache)> {
        let (preds, cache) = self.forward(batch, Mode::Train)?;
        let loss = loss_mse(&preds, targets)?;
        let grads = self.backward(batch, &cache, &preds, targets)?;
        Ok((loss, grads, cache))
    }
}

#[derive(Clone, Debug)]
struct LayerCache {
    h_in: Matrix,
    agg: Matrix,
    bn: Option<BnCache>,
    bn_out: Matrix,
    r: Matrix,
}

/// Intermediate activations kept for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    layers: Vec<LayerCache>,
    h_final: Matrix,
    pooled: Matrix,
    o1_pre: Matrix,
    o1: Matrix,
}

impl ForwardCache {
    /// Node embeddings after the last GIN layer.
    pub fn node_embeddings(&self) -> &Matrix {
        &self.h_final
    }
}

/// Disjoint union of several graphs: stacked features, one adjacency per
/// layer (base or rewired per each plan's schedule) and a node-to-graph map.
#[derive(Clone, Debug)]
pub struct GraphBatch {
    x: Matrix,
    graph_of: Vec<usize>,
    num_graphs: usize,
    layer_adj: Vec<Adjacency>,
}

impl GraphBatch {
    pub fn new(items: &[(&Sample, &RewirePlan)]) -> Result<Self> {
        let parts: Vec<(&Matrix, &RewirePlan)> = items
            .iter()
            .map(|&(s, plan)| {
                if plan.base.num_nodes() != s.graph.num_nodes() || plan.base.edges() != s.graph.edges() {
                    return Err(Error::InvalidArgument(
                        "rewire plan base graph differs from the sample graph".into(),
                    ));
                }
                Ok((&s.features, plan))
            })
            .collect::<Result<_>>()?;
        Self::from_parts(&parts)
    }

    /// Like [`GraphBatch::new`] from raw feature matrices.
    pub fn from_parts(items: &[(&Matrix, &RewirePlan)]) -> Result<Self> {
        let layers = items.first().map_or(0, |(_, p)| p.layers());
        let cols = items.first().map_or(0, |(x, _)| x.cols());
        for (x, plan) in items {
            if plan.layers() != layers {
                return Err(Error::SizeMismatch("plans in a batch differ in layer count".into()));
            }
            if x.rows() != plan.base.num_nodes() || plan.rewired.num_nodes() != x.rows() {
                return Err(Error::SizeMismatch("feature rows differ from node count".into()));
            }
            if x.cols() != cols {
                return Err(Error::SizeMismatch("feature widths differ within a batch".into()));
            }
        }
        let x = Matrix::vstack(items.iter().map(|(x, _)| *x), cols);
        let mut graph_of = Vec::with_capacity(x.rows());
        for (gi, (m, _)) in items.iter().enumerate() {
            graph_of.extend(std::iter::repeat_n(gi, m.rows()));
        }
        let layer_adj = (0..layers)
            .map(|layer| {
                let mut adj = Adjacency::new();
                let mut offset = 0;
                for (m, plan) in items {
                    let g = plan.graph_for_layer(layer);
                    for u in 0..m.rows() {
                        adj.push_row(g.neighbours(u).iter().map(|&v| v + offset));
                    }
                    offset += m.rows();
                }
                adj
            })
            .collect();
        Ok(GraphBatch {
            x,
            graph_of,
            num_graphs: items.len(),
            layer_adj,
        })
    }

    pub fn num_graphs(&self) -> usize {
        self.num_graphs
    }

    pub fn num_nodes(&self) -> usize {
        self.x.rows()
    }

    fn pool(&self, h: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.num_graphs, h.cols());
        for (u, &g) in self.graph_of.iter().enumerate() {
            for (o, &v) in out.row_mut(g).iter_mut().zip(h.row(u)) {
                *o += v;
            }
        }
        out
    }

    fn unpool(&self, dpooled: &Matrix) -> Matrix {
        let mut dh = Matrix::zeros(self.graph_of.len(), dpooled.cols());
        for (u, &g) in self.graph_of.iter().enumerate() {
            dh.row_mut(u).copy_from_slice(dpooled.row(g));
        }
        dh
    }
}

pub fn loss_mse(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.is_empty() {
        return Err(Error::InvalidArgument("MSE of an empty batch".into()));
    }
    if pred.len() != target.len() {
        return Err(Error::SizeMismatch(format!(
            "{} predictions vs {} targets",
            pred.len(),
            target.len()
        )));
    }
    let sum: f64 = pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(sum / pred.len() as f64)
}

/// Prediction for a single sample under its rewire plan.
pub fn model_forward(model: &GinModel, sample: &Sample, plan: &RewirePlan, mode: Mode) -> Result<f64> {
    let batch = GraphBatch::new(&[(sample, plan)])?;
    let (preds, _) = model.forward(&batch, mode)?;
    Ok(preds[0])
}

/// The MLP applied after aggregation in a single GIN layer.
#[derive(Clone, Debug, PartialEq)]
pub enum Phi {
    /// Pass-through, for inspecting the aggregation alone.
    Identity,
    Mlp(MlpParams),
}

/// `dense -> batch-norm -> ReLU -> dense`; weights `in x out`.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
    pub running: BnRunning,
}

/// One GIN update `phi((1 + eps) h_u + sum_{v in N(u)} h_v)` on a single graph.
pub fn gin_layer_forward(h: &Matrix, g: &Graph, eps: f64, phi: &Phi, mode: Mode) -> Result<Matrix> {
    if h.rows() != g.num_nodes() {
        return Err(Error::SizeMismatch(format!(
            "{} feature rows for {} nodes",
            h.rows(),
            g.num_nodes()
        )));
    }
    let mut adj = Adjacency::new();
    for u in 0..g.num_nodes() {
        adj.push_row(g.neighbours(u).iter().copied());
    }
    let agg = aggregate(h, &adj, eps);
    match phi {
        Phi::Identity => Ok(agg),
        Phi::Mlp(m) => {
            if m.w1.rows() != h.cols() || m.w2.rows() != m.w1.cols() {
                return Err(Error::SizeMismatch("MLP weight shapes".into()));
            }
            let z1 = dense_forward(&agg, m.w1.data(), &m.b1);
            let bn = match mode {
                Mode::Train => batchnorm_train(&z1, &m.gamma, &m.beta).0,
                Mode::Eval => batchnorm_eval(&z1, &m.gamma, &m.beta, &m.running),
            };
            Ok(dense_forward(&relu(&bn), m.w2.data(), &m.b2))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewire::rewirer_base_only;

    #[test]
    fn param_count_formula() {
        let shape = ModelShape::new(1, 8, 5);
        let m = GinModel::new(shape, 0);
        assert_eq!(m.params().len(), shape.param_count());
        // 16 + 5 * 161 + 72 + 9
        assert_eq!(shape.param_count(), 902);
        let covered: usize = m.param_groups().iter().map(|(_, r)| r.len()).sum();
        assert_eq!(covered, shape.param_count());
    }

    #[test]
    fn identity_phi_sums_neighbours() {
        let h = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]);
        let out = gin_layer_forward(&h, &Graph::path(3), 0.0, &Phi::Identity, Mode::Train).unwrap();
        assert_eq!(out.row(1), &[2.0, 2.0]);
        let out = gin_layer_forward(&h, &Graph::empty(3), 0.5, &Phi::Identity, Mode::Eval).unwrap();
        assert_eq!(out.row(2), &[1.5, 1.5]);
        assert!(gin_layer_forward(&h, &Graph::path(2), 0.0, &Phi::Identity, Mode::Eval).is_err());
    }

    #[test]
    fn loss_examples() {
        assert_eq!(loss_mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(loss_mse(&[0.0], &[2.0]).unwrap(), 4.0);
        assert_eq!(loss_mse(&[1.0, 3.0], &[0.0, 0.0]).unwrap(), 5.0);
        assert!(loss_mse(&[], &[]).is_err());
    }

    #[test]
    fn schedule_mismatch_is_an_error() {
        let model = GinModel::new(ModelShape::new(1, 4, 3), 1);
        let g = Graph::path(3);
        let plan = rewirer_base_only(&g, 2);
        let x = Matrix::zeros(3, 1);
        let batch = GraphBatch::from_parts(&[(&x, &plan)]).unwrap();
        assert!(model.forward(&batch, Mode::Eval).is_err());
    }
}
