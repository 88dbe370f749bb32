//! Cayley graphs of SL(2, Z_n) under the generators
//! `[[1,1],[0,1]]` and `[[1,0],[1,1]]` together with their inverses.
//!
//! Node 0 is always the identity; the remaining nodes are numbered in the
//! order a breadth-first search discovers them, applying the generators in
//! the fixed order `s1, s1^-1, s2, s2^-1` by right multiplication. Because of
//! that numbering, the ascending-index [`Graph::bfs_order`] from node 0 is
//! exactly `0..|V|`, and trimming is a prefix cut.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// A 2x2 matrix over Z_n, row-major, entries in `[0, n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    pub a: u32,
    pub b: u32,
    pub c: u32,
    pub d: u32,
}

impl GroupElement {
    pub fn identity() -> Self {
        GroupElement { a: 1, b: 0, c: 0, d: 1 }
    }

    /// Reduces the entries mod `n`.
    pub fn new(a: i64, b: i64, c: i64, d: i64, n: u32) -> Self {
        let r = |x: i64| x.rem_euclid(n as i64) as u32;
        GroupElement {
            a: r(a),
            b: r(b),
            c: r(c),
            d: r(d),
        }
    }

    pub fn det(&self, n: u32) -> u32 {
        let n = n as u64;
        let ad = self.a as u64 * self.d as u64 % n;
        let bc = self.b as u64 * self.c as u64 % n;
        ((ad + n - bc) % n) as u32
    }

    pub fn mul(&self, rhs: &Self, n: u32) -> Self {
        let n64 = n as u64;
        let m = |x: u32, y: u32, z: u32, w: u32| {
            ((x as u64 * y as u64 + z as u64 * w as u64) % n64) as u32
        };
        GroupElement {
            a: m(self.a, rhs.a, self.b, rhs.c),
            b: m(self.a, rhs.b, self.b, rhs.d),
            c: m(self.c, rhs.a, self.d, rhs.c),
            d: m(self.c, rhs.b, self.d, rhs.d),
        }
    }

    /// Inverse of a determinant-one matrix: `[[d, -b], [-c, a]]`.
    pub fn inverse(&self, n: u32) -> Self {
        GroupElement::new(
            self.d as i64,
            -(self.b as i64),
            -(self.c as i64),
            self.a as i64,
            n,
        )
    }
}

/// The symmetric generating set in application order `s1, s1^-1, s2, s2^-1`.
pub fn generators(n: u32) -> [GroupElement; 4] {
    let s1 = GroupElement::new(1, 1, 0, 1, n);
    let s2 = GroupElement::new(1, 0, 1, 1, n);
    [s1, s1.inverse(n), s2, s2.inverse(n)]
}

#[derive(Clone, Debug)]
pub struct CayleyGraph {
    pub graph: Graph,
    pub n: u32,
    /// Group element carried by each node.
    pub provenance: Vec<GroupElement>,
    pub trimmed: bool,
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            out.push(p);
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Order of SL(2, Z_n): `n^3 * prod_{p | n} (1 - 1/p^2)`.
pub fn cayley_size(n: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    let mut size = n
        .checked_pow(3)
        .ok_or_else(|| Error::InvalidArgument(format!("n = {n} overflows")))?;
    for p in prime_factors(n) {
        size = size / (p * p) * (p * p - 1);
    }
    Ok(size)
}

/// Smallest `n >= 2` whose Cayley graph has at least `size` nodes.
pub fn minimal_n_for(size: usize) -> u32 {
    let mut n = 2u32;
    while cayley_size(n as u64).expect("n >= 2") < size as u64 {
        n += 1;
    }
    n
}

/// Full Cayley graph of SL(2, Z_n).
pub fn build_cayley(n: u32) -> Result<CayleyGraph> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("Cayley graph needs n >= 2, got {n}")));
    }
    build(n, None)
}

/// Cayley graph cut to the first `size` nodes of its BFS from the identity,
/// using the smallest group that is large enough.
pub fn trimmed_cayley(size: usize) -> Result<CayleyGraph> {
    if size == 0 {
        return Err(Error::InvalidArgument("trimmed Cayley size must be >= 1".into()));
    }
    build(minimal_n_for(size), Some(size))
}

/// Like [`trimmed_cayley`] but in a caller-chosen group SL(2, Z_n).
pub fn trimmed_cayley_in(n: u32, size: usize) -> Result<CayleyGraph> {
    if n < 2 || size == 0 {
        return Err(Error::InvalidArgument("need n >= 2 and size >= 1".into()));
    }
    let total = cayley_size(n as u64)?;
    if size as u64 > total {
        return Err(Error::InvalidArgument(format!(
            "SL(2, Z_{n}) has only {total} elements, asked for {size}"
        )));
    }
    build(n, Some(size))
}

/// BFS over the group. With `limit`, discovery stops after `limit` nodes and
/// only edges among the kept nodes remain.
fn build(n: u32, limit: Option<usize>) -> Result<CayleyGraph> {
    let gens = generators(n);
    let total = cayley_size(n as u64)? as usize;
    let keep = limit.unwrap_or(total).min(total);

    let mut index: HashMap<GroupElement, usize> = HashMap::with_capacity(total);
    let mut provenance = Vec::with_capacity(total);
    let mut edges = Vec::with_capacity(2 * total);
    let mut queue = VecDeque::new();

    let id = GroupElement::identity();
    index.insert(id, 0);
    provenance.push(id);
    queue.push_back(0usize);
    while let Some(u) = queue.pop_front() {
        let g = provenance[u];
        for s in &gens {
            let h = g.mul(s, n);
            let v = match index.get(&h) {
                Some(&v) => v,
                None if provenance.len() < keep => {
                    let v = provenance.len();
                    index.insert(h, v);
                    provenance.push(h);
                    queue.push_back(v);
                    v
                }
                None => continue,
            };
            edges.push((u, v));
        }
    }
    debug_assert!(limit.is_some() || provenance.len() == total);
    let graph = Graph::new(provenance.len(), edges)?;
    Ok(CayleyGraph {
        graph,
        n,
        provenance,
        trimmed: limit.is_some(),
    })
}
