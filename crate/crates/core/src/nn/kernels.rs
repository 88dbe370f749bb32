//! Forward and backward kernels shared by the GIN model and the standalone
//! layer API. Dense weights are stored `in x out`, row-major.

use crate::matrix::Matrix;

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

/// Compressed neighbour lists over the rows of a (possibly batched) node matrix.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl Adjacency {
    pub fn new() -> Self {
        Adjacency {
            offsets: vec![0],
            targets: Vec::new(),
        }
    }

    /// Appends the neighbour list of the next row.
    pub fn push_row(&mut self, neighbours: impl IntoIterator<Item = usize>) {
        self.targets.extend(neighbours);
        self.offsets.push(self.targets.len());
    }

    pub fn num_rows(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn row(&self, u: usize) -> &[usize] {
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }
}

pub fn dense_forward(x: &Matrix, w: &[f64], b: &[f64]) -> Matrix {
    let (n, fan_in) = (x.rows(), x.cols());
    let fan_out = b.len();
    debug_assert_eq!(w.len(), fan_in * fan_out);
    let mut y = Matrix::zeros(n, fan_out);
    for r in 0..n {
        let xr = x.row(r);
        let yr = y.row_mut(r);
        yr.copy_from_slice(b);
        for (k, &xv) in xr.iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            let wk = &w[k * fan_out..(k + 1) * fan_out];
            for (yv, &wv) in yr.iter_mut().zip(wk) {
                *yv += xv * wv;
            }
        }
    }
    y
}

/// Accumulates `dw += x^T dy`, `db += colsum(dy)`; returns `dy w^T` when asked.
pub fn dense_backward(
    x: &Matrix,
    w: &[f64],
    dy: &Matrix,
    dw: &mut [f64],
    db: &mut [f64],
    want_dx: bool,
) -> Option<Matrix> {
    let (n, fan_in) = (x.rows(), x.cols());
    let fan_out = dy.cols();
    for r in 0..n {
        let xr = x.row(r);
        let dyr = dy.row(r);
        for (dbv, &g) in db.iter_mut().zip(dyr) {
            *dbv += g;
        }
        for (k, &xv) in xr.iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            let dwk = &mut dw[k * fan_out..(k + 1) * fan_out];
            for (d, &g) in dwk.iter_mut().zip(dyr) {
                *d += xv * g;
            }
        }
    }
    if !want_dx {
        return None;
    }
    let mut dx = Matrix::zeros(n, fan_in);
    for r in 0..n {
        let dyr = dy.row(r);
        let dxr = dx.row_mut(r);
        for (k, dxv) in dxr.iter_mut().enumerate() {
            let wk = &w[k * fan_out..(k + 1) * fan_out];
            *dxv = wk.iter().zip(dyr).map(|(a, b)| a * b).sum();
        }
    }
    Some(dx)
}

/// `(1 + eps) h_u + sum_{v in N(u)} h_v` for every row.
pub fn aggregate(h: &Matrix, adj: &Adjacency, eps: f64) -> Matrix {
    let mut out = Matrix::zeros(h.rows(), h.cols());
    for u in 0..h.rows() {
        let row = out.row_mut(u);
        for (o, &x) in row.iter_mut().zip(h.row(u)) {
            *o = (1.0 + eps) * x;
        }
        for &v in adj.row(u) {
            for (o, &x) in row.iter_mut().zip(h.row(v)) {
                *o += x;
            }
        }
    }
    out
}

/// Gradients of [`aggregate`] for a symmetric adjacency: `(dh, d_eps)`.
pub fn aggregate_backward(h: &Matrix, adj: &Adjacency, eps: f64, dagg: &Matrix) -> (Matrix, f64) {
    let mut dh = Matrix::zeros(h.rows(), h.cols());
    let mut deps = 0.0;
    for u in 0..h.rows() {
        let gu = dagg.row(u);
        deps += gu.iter().zip(h.row(u)).map(|(a, b)| a * b).sum::<f64>();
        let row = dh.row_mut(u);
        for (o, &g) in row.iter_mut().zip(gu) {
            *o += (1.0 + eps) * g;
        }
        for &v in adj.row(u) {
            for (o, &g) in row.iter_mut().zip(dagg.row(v)) {
                *o += g;
            }
        }
    }
    (dh, deps)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BnCache {
    pub xhat: Matrix,
    pub inv_std: Vec<f64>,
    pub mean: Vec<f64>,
    /// Biased batch variance.
    pub var: Vec<f64>,
}

/// Batch normalisation with batch statistics over all rows.
pub fn batchnorm_train(z: &Matrix, gamma: &[f64], beta: &[f64]) -> (Matrix, BnCache) {
    let (n, c) = (z.rows(), z.cols());
    let nf = n.max(1) as f64;
    let mut mean = vec![0.0; c];
    for r in 0..n {
        for (m, &x) in mean.iter_mut().zip(z.row(r)) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= nf);
    let mut var = vec![0.0; c];
    for r in 0..n {
        for ((v, &x), &m) in var.iter_mut().zip(z.row(r)).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    var.iter_mut().for_each(|v| *v /= nf);
    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
    let mut xhat = Matrix::zeros(n, c);
    let mut y = Matrix::zeros(n, c);
    for r in 0..n {
        for j in 0..c {
            let xh = (z[(r, j)] - mean[j]) * inv_std[j];
            xhat[(r, j)] = xh;
            y[(r, j)] = gamma[j] * xh + beta[j];
        }
    }
    (
        y,
        BnCache {
            xhat,
            inv_std,
            mean,
            var,
        },
    )
}

pub fn batchnorm_eval(z: &Matrix, gamma: &[f64], beta: &[f64], running: &BnRunning) -> Matrix {
    let mut y = z.clone();
    for r in 0..z.rows() {
        for (j, v) in y.row_mut(r).iter_mut().enumerate() {
            *v = gamma[j] * (*v - running.mean[j]) / (running.var[j] + BN_EPS).sqrt() + beta[j];
        }
    }
    y
}

/// Returns `dz`; accumulates `dgamma`, `dbeta`.
pub fn batchnorm_backward(
    dy: &Matrix,
    cache: &BnCache,
    gamma: &[f64],
    dgamma: &mut [f64],
    dbeta: &mut [f64],
) -> Matrix {
    let (n, c) = (dy.rows(), dy.cols());
    let nf = n as f64;
    let mut sum_dxhat = vec![0.0; c];
    let mut sum_dxhat_xhat = vec![0.0; c];
    for r in 0..n {
        for j in 0..c {
            let g = dy[(r, j)];
            let xh = cache.xhat[(r, j)];
            dgamma[j] += g * xh;
            dbeta[j] += g;
            let dxh = g * gamma[j];
            sum_dxhat[j] += dxh;
            sum_dxhat_xhat[j] += dxh * xh;
        }
    }
    let mut dz = Matrix::zeros(n, c);
    for r in 0..n {
        for j in 0..c {
            let dxh = dy[(r, j)] * gamma[j];
            dz[(r, j)] = cache.inv_std[j] / nf
                * (nf * dxh - sum_dxhat[j] - cache.xhat[(r, j)] * sum_dxhat_xhat[j]);
        }
    }
    dz
}

/// Running statistics for evaluation-mode batch normalisation.
#[derive(Clone, Debug, PartialEq)]
pub struct BnRunning {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl BnRunning {
    pub fn new(channels: usize) -> Self {
        BnRunning {
            mean: vec![0.0; channels],
            var: vec![1.0; channels],
        }
    }

    /// Exponential update with unbiased batch variance.
    pub fn update(&mut self, cache: &BnCache, rows: usize) {
        let correction = if rows > 1 {
            rows as f64 / (rows - 1) as f64
        } else {
            1.0
        };
        for j in 0..self.mean.len() {
            self.mean[j] = (1.0 - BN_MOMENTUM) * self.mean[j] + BN_MOMENTUM * cache.mean[j];
            self.var[j] =
                (1.0 - BN_MOMENTUM) * self.var[j] + BN_MOMENTUM * cache.var[j] * correction;
        }
    }
}

pub fn relu(x: &Matrix) -> Matrix {
    let mut y = x.clone();
    y.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
    y
}

/// Masks `dy` by `pre > 0`.
pub fn relu_backward(pre: &Matrix, dy: &Matrix) -> Matrix {
    let mut dx = dy.clone();
    for (d, &p) in dx.data_mut().iter_mut().zip(pre.data()) {
        if p <= 0.0 {
            *d = 0.0;
        }
    }
    dx
}
