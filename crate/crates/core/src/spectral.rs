//! Laplacian diagnostics: effective resistance, commute time, spectral gap
//! and diameter. Dense eigendecomposition; meant for graphs of at most a few
//! thousand nodes.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Relative eigenvalue cutoff for the pseudoinverse.
pub const PINV_CUTOFF: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct LaplacianSummary {
    pub num_nodes: usize,
    pub num_edges: usize,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub pseudoinverse: DMatrix<f64>,
    components: Vec<usize>,
}

pub fn laplacian(g: &Graph) -> DMatrix<f64> {
    let n = g.num_nodes();
    let mut l = DMatrix::zeros(n, n);
    for &(u, v) in g.edges() {
        l[(u, v)] -= 1.0;
        l[(v, u)] -= 1.0;
        l[(u, u)] += 1.0;
        l[(v, v)] += 1.0;
    }
    l
}

fn component_labels(g: &Graph) -> Vec<usize> {
    let mut label = vec![0; g.num_nodes()];
    for (c, members) in g.connected_components().into_iter().enumerate() {
        for u in members {
            label[u] = c;
        }
    }
    label
}

impl LaplacianSummary {
    pub fn new(g: &Graph) -> Self {
        let n = g.num_nodes();
        let eig = SymmetricEigen::new(laplacian(g));
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();

        let lambda_max = eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
        let cutoff = PINV_CUTOFF * lambda_max;
        let mut pinv = DMatrix::zeros(n, n);
        for k in 0..n {
            let lambda = eig.eigenvalues[k];
            if lambda > cutoff {
                let v = eig.eigenvectors.column(k);
                pinv += (v * v.transpose()) / lambda;
            }
        }
        // Symmetrise away round-off.
        let pseudoinverse = (&pinv + pinv.transpose()) * 0.5;
        LaplacianSummary {
            num_nodes: n,
            num_edges: g.num_edges(),
            eigenvalues,
            pseudoinverse,
            components: component_labels(g),
        }
    }

    fn check_pair(&self, u: usize, v: usize) -> Result<()> {
        for node in [u, v] {
            if node >= self.num_nodes {
                return Err(Error::NodeOutOfRange {
                    node,
                    num_nodes: self.num_nodes,
                });
            }
        }
        if self.components[u] != self.components[v] {
            return Err(Error::Disconnected(format!(
                "nodes {u} and {v} lie in different components"
            )));
        }
        Ok(())
    }

    pub fn effective_resistance(&self, u: usize, v: usize) -> Result<f64> {
        self.check_pair(u, v)?;
        let p = &self.pseudoinverse;
        Ok((p[(u, u)] + p[(v, v)] - 2.0 * p[(u, v)]).max(0.0))
    }

    pub fn commute_time(&self, u: usize, v: usize) -> Result<f64> {
        if self.num_edges == 0 {
            return Err(Error::InvalidArgument("commute time needs at least one edge".into()));
        }
        Ok(2.0 * self.num_edges as f64 * self.effective_resistance(u, v)?)
    }

    pub fn spectral_gap(&self) -> f64 {
        let components = self.components.iter().max().map_or(0, |&c| c + 1);
        if components > 1 || self.num_nodes < 2 {
            return 0.0;
        }
        self.eigenvalues[1].max(0.0)
    }
}

pub fn effective_resistance(g: &Graph, u: usize, v: usize) -> Result<f64> {
    LaplacianSummary::new(g).effective_resistance(u, v)
}

pub fn commute_time(g: &Graph, u: usize, v: usize) -> Result<f64> {
    LaplacianSummary::new(g).commute_time(u, v)
}

/// Mean commute time over all unordered node pairs.
pub fn average_commute_time(g: &Graph) -> Result<f64> {
    if !g.is_connected() {
        return Err(Error::Disconnected("average commute time is undefined".into()));
    }
    if g.num_edges() == 0 {
        return Err(Error::InvalidArgument("average commute time needs at least one edge".into()));
    }
    let summary = LaplacianSummary::new(g);
    let n = g.num_nodes();
    let mut total = 0.0;
    for u in 0..n {
        for v in u + 1..n {
            total += summary.commute_time(u, v)?;
        }
    }
    Ok(total / (n * (n - 1) / 2) as f64)
}

/// Second-smallest Laplacian eigenvalue; 0 for disconnected graphs.
pub fn spectral_gap(g: &Graph) -> f64 {
    if !g.is_connected() || g.num_nodes() < 2 {
        return 0.0;
    }
    LaplacianSummary::new(g).spectral_gap()
}

pub fn diameter(g: &Graph) -> Result<usize> {
    g.all_pairs_distances()
        .max_finite()
        .ok_or_else(|| Error::Disconnected("diameter is undefined".into()))
}
