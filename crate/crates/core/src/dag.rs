//! Labelled digraph stored as a dense row-major bit matrix.
//!
//! Bit `(u, v)` set means the arc `u -> v`. Vertices are `0..n` internally;
//! the text formats shift to 1-based labels.

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dag {
    n: usize,
    stride: usize,
    bits: Vec<u64>,
}

/// Canonical histogram key: the row-major adjacency bits of a labelled graph.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DagKey {
    n: usize,
    bits: Vec<u64>,
}

impl DagKey {
    pub fn node_count(&self) -> usize {
        self.n
    }
}

impl std::fmt::Debug for Dag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let edges: Vec<(usize, usize)> = self.edges().collect();
        write!(f, "Dag(n={}, edges={:?})", self.n, edges)
    }
}

impl Dag {
    /// The graph on `n` vertices with no arcs.
    pub fn empty(n: usize) -> Self {
        let stride = n.div_ceil(64);
        Dag {
            n,
            stride,
            bits: vec![0; stride * n],
        }
    }

    /// Builds a graph from 0-based arcs, rejecting self-loops, out-of-range
    /// endpoints and cycles.
    pub fn from_edges<I: IntoIterator<Item = (usize, usize)>>(n: usize, edges: I) -> Result<Self> {
        let dag = Self::from_edges_unchecked(n, edges)?;
        if !crate::baselines::is_acyclic(&dag) {
            return Err(Error::Cyclic);
        }
        Ok(dag)
    }

    /// Like [`Dag::from_edges`] but keeps cycles, so that parsers can hand
    /// arbitrary input to [`crate::baselines::is_acyclic`]. Self-loops and
    /// out-of-range endpoints are still rejected.
    pub fn from_edges_unchecked<I: IntoIterator<Item = (usize, usize)>>(
        n: usize,
        edges: I,
    ) -> Result<Self> {
        let mut dag = Dag::empty(n);
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidArgument(format!("arc ({u}, {v}) out of range for n = {n}")));
            }
            if u == v {
                return Err(Error::InvalidArgument(format!("self-loop at {u}")));
            }
            dag.set_edge(u, v);
        }
        Ok(dag)
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.bits[u * self.stride + v / 64] >> (v % 64) & 1 == 1
    }

    #[inline]
    pub(crate) fn set_edge(&mut self, u: usize, v: usize) {
        self.bits[u * self.stride + v / 64] |= 1 << (v % 64);
    }

    #[inline]
    pub(crate) fn clear_edge(&mut self, u: usize, v: usize) {
        self.bits[u * self.stride + v / 64] &= !(1 << (v % 64));
    }

    /// Mutable words of row `u`; bits at or beyond `n` must stay clear.
    pub(crate) fn row_words_mut(&mut self, u: usize) -> &mut [u64] {
        &mut self.bits[u * self.stride..(u + 1) * self.stride]
    }

    pub(crate) fn row_words(&self, u: usize) -> &[u64] {
        &self.bits[u * self.stride..(u + 1) * self.stride]
    }

    /// Heap bytes held by the adjacency matrix.
    pub fn matrix_bytes(&self) -> usize {
        self.bits.len() * std::mem::size_of::<u64>()
    }

    /// Targets of arcs leaving `u`, ascending.
    pub fn children(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        self.row_words(u).iter().enumerate().flat_map(|(w, &word)| BitIter(word).map(move |b| w * 64 + b))
    }

    /// All arcs `(u, v)` in ascending lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| self.children(u).map(move |v| (u, v)))
    }

    pub fn edge_count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn out_degree(&self, u: usize) -> usize {
        self.row_words(u).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for (_, v) in self.edges() {
            deg[v] += 1;
        }
        deg
    }

    /// Vertices with no incoming arcs.
    pub fn outpoints(&self) -> Vec<usize> {
        self.in_degrees()
            .into_iter()
            .enumerate()
            .filter_map(|(v, d)| (d == 0).then_some(v))
            .collect()
    }

    /// Same vertex set with every arc reversed.
    pub fn reversed(&self) -> Dag {
        let mut out = Dag::empty(self.n);
        for (u, v) in self.edges() {
            out.set_edge(v, u);
        }
        out
    }

    /// Relabels vertex `u` as `perm[u]`; `perm` must be a permutation of `0..n`.
    pub fn relabelled(&self, perm: &[usize]) -> Dag {
        assert_eq!(perm.len(), self.n);
        let mut out = Dag::empty(self.n);
        for (u, v) in self.edges() {
            out.set_edge(perm[u], perm[v]);
        }
        out
    }

    pub fn key(&self) -> DagKey {
        DagKey {
            n: self.n,
            bits: self.bits.clone(),
        }
    }

    /// Inverse of [`Dag::key`].
    pub fn from_key(key: &DagKey) -> Dag {
        Dag {
            n: key.n,
            stride: key.n.div_ceil(64),
            bits: key.bits.clone(),
        }
    }
}

struct BitIter(u64);

impl Iterator for BitIter {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let b = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(b)
    }
}
