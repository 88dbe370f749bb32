//! Independent reference implementations used as test oracles. None of these
//! call into the code paths they check.
#![allow(dead_code)]

use prior_rewire::graph::NodePair;
use prior_rewire::nn::GinModel;
use prior_rewire::rewire::RewirePlan;
use prior_rewire::{Graph, Matrix};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random connected graph: random recursive tree plus `extra` random edges.
pub fn random_connected(n: usize, extra: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<NodePair> = (1..n).map(|v| (rng.gen_range(0..v), v)).collect();
    if n > 1 {
        for _ in 0..extra {
            let u = rng.gen_range(0..n);
            let v = rng.gen_range(0..n);
            edges.push((u, v));
        }
    }
    Graph::new(n, edges).unwrap()
}

pub fn connected_graph(max_nodes: usize) -> impl Strategy<Value = Graph> {
    (1..=max_nodes, 0usize..12, any::<u64>()).prop_map(|(n, extra, seed)| random_connected(n, extra, seed))
}

/// Any simple graph, possibly disconnected.
pub fn any_graph(max_nodes: usize) -> impl Strategy<Value = Graph> {
    (1..=max_nodes).prop_flat_map(|n| {
        proptest::collection::vec((0..n, 0..n), 0..3 * n).prop_map(move |e| Graph::new(n, e).unwrap())
    })
}

/// BFS distances by repeated frontier expansion over the edge list only.
pub fn oracle_distances(g: &Graph) -> Vec<Vec<Option<usize>>> {
    let n = g.num_nodes();
    let mut out = vec![vec![None; n]; n];
    for s in 0..n {
        out[s][s] = Some(0);
        let mut frontier = vec![s];
        let mut d = 0;
        while !frontier.is_empty() {
            d += 1;
            let mut next = Vec::new();
            for &(a, b) in g.edges() {
                for (x, y) in [(a, b), (b, a)] {
                    if frontier.contains(&x) && out[s][y].is_none() {
                        out[s][y] = Some(d);
                        next.push(y);
                    }
                }
            }
            frontier = next;
        }
    }
    out
}

/// Data A target with an unordered-pair loop over a distance table.
pub fn oracle_target_a(g: &Graph, x: &[f64], c1: f64, c2: f64, c3: f64, d: usize) -> f64 {
    let dist = oracle_distances(g);
    let n = g.num_nodes();
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let e = (x[i] + x[j]).exp();
            let dij = dist[i][j].unwrap();
            let coef = if dij == 1 {
                c1
            } else if dij == d {
                c2
            } else {
                c3
            };
            total += coef * e;
        }
    }
    total
}

/// Data B target, summing edges and same-colour pairs in reverse order.
pub fn oracle_target_b(g: &Graph, x: &[f64], c1: f64, c2: f64) -> f64 {
    let colours = g.colours().unwrap();
    let n = g.num_nodes();
    let mut total = 0.0;
    for i in (0..n).rev() {
        for j in (0..i).rev() {
            let e = (x[i] + x[j]).exp();
            if g.has_edge(i, j) {
                total += c1 * e;
            }
            if colours[i].is_some() && colours[i] == colours[j] {
                total += c2 * e;
            }
        }
    }
    total
}

/// Mean round-trip time u -> v -> u of a simple random walk.
pub fn monte_carlo_commute(g: &Graph, u: usize, v: usize, walks: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0u64;
    for _ in 0..walks {
        let mut pos = u;
        let mut steps = 0u64;
        for target in [v, u] {
            while pos != target {
                let nb = g.neighbours(pos);
                pos = nb[rng.gen_range(0..nb.len())];
                steps += 1;
            }
        }
        total += steps;
    }
    total as f64 / walks as f64
}

/// Row-major node features as nested vectors.
pub fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
}

fn group<'a>(model: &'a GinModel, name: &str) -> &'a [f64] {
    let (_, range) = model
        .param_groups()
        .into_iter()
        .find(|(n, _)| n == name)
        .unwrap_or_else(|| panic!("no parameter group {name}"));
    &model.params()[range]
}

/// `y = x W + b` with `W` stored `in x out` row-major.
fn dense(x: &[Vec<f64>], w: &[f64], b: &[f64]) -> Vec<Vec<f64>> {
    let out = b.len();
    x.iter()
        .map(|row| {
            (0..out)
                .map(|j| b[j] + row.iter().enumerate().map(|(k, &v)| v * w[k * out + j]).sum::<f64>())
                .collect()
        })
        .collect()
}

fn relu(x: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    x.into_iter().map(|r| r.into_iter().map(|v| v.max(0.0)).collect()).collect()
}

/// Straight-line GIN forward pass over a batch of graphs, node by node.
/// `train` uses batch statistics, otherwise the model's running statistics.
pub fn oracle_gin(model: &GinModel, items: &[(&Matrix, &RewirePlan)], train: bool) -> Vec<f64> {
    let shape = model.shape();
    let mut h: Vec<Vec<f64>> = Vec::new();
    let mut owner = Vec::new();
    for (gi, (x, _)) in items.iter().enumerate() {
        for r in rows(x) {
            h.push(r);
            owner.push(gi);
        }
    }
    h = dense(&h, group(model, "input.weight"), group(model, "input.bias"));
    for l in 0..shape.layers {
        // Neighbour lists in batch coordinates.
        let mut nbrs: Vec<Vec<usize>> = Vec::new();
        let mut offset = 0;
        for (x, plan) in items {
            let g = plan.graph_for_layer(l);
            for u in 0..x.rows() {
                nbrs.push(g.neighbours(u).iter().map(|&v| v + offset).collect());
            }
            offset += x.rows();
        }
        let eps = group(model, &format!("layer{l}.eps"))[0];
        let agg: Vec<Vec<f64>> = (0..h.len())
            .map(|u| {
                let mut a: Vec<f64> = h[u].iter().map(|v| (1.0 + eps) * v).collect();
                for &v in &nbrs[u] {
                    for (k, x) in a.iter_mut().enumerate() {
                        *x += h[v][k];
                    }
                }
                a
            })
            .collect();
        let z = dense(&agg, group(model, &format!("layer{l}.mlp.0.weight")), group(model, &format!("layer{l}.mlp.0.bias")));
        let gamma = group(model, &format!("layer{l}.bn.weight"));
        let beta = group(model, &format!("layer{l}.bn.bias"));
        let c = gamma.len();
        let (mean, var): (Vec<f64>, Vec<f64>) = if train {
            let n = z.len() as f64;
            let mean: Vec<f64> = (0..c).map(|j| z.iter().map(|r| r[j]).sum::<f64>() / n).collect();
            let var = (0..c)
                .map(|j| z.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n)
                .collect();
            (mean, var)
        } else {
            let rs = &model.running_stats()[l];
            (rs.mean.clone(), rs.var.clone())
        };
        let bn: Vec<Vec<f64>> = z
            .iter()
            .map(|r| (0..c).map(|j| gamma[j] * (r[j] - mean[j]) / (var[j] + 1e-5).sqrt() + beta[j]).collect())
            .collect();
        h = dense(
            &relu(bn),
            group(model, &format!("layer{l}.mlp.1.weight")),
            group(model, &format!("layer{l}.mlp.1.bias")),
        );
    }
    let mut pooled = vec![vec![0.0; shape.hidden]; items.len()];
    for (u, row) in h.iter().enumerate() {
        for (k, v) in row.iter().enumerate() {
            pooled[owner[u]][k] += v;
        }
    }
    let o1 = relu(dense(&pooled, group(model, "readout.0.weight"), group(model, "readout.0.bias")));
    dense(&o1, group(model, "readout.1.weight"), group(model, "readout.1.bias"))
        .into_iter()
        .map(|r| r[0])
        .collect()
}

/// Relative closeness with an absolute floor for values near zero.
pub fn close(a: f64, b: f64, rel: f64, floor: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + floor
}
