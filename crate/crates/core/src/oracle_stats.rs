//! Brute-force ground truth for small graphs and the chi-square machinery
//! that the statistical tests are built on.

use std::collections::BTreeMap;

use statrs::function::gamma::gamma_ur;

use crate::counting::Variant;
use crate::dag::Dag;
use crate::error::{invalid, Result};

/// Largest `n` for exhaustive enumeration: `2^20` candidate matrices.
pub const ENUMERATION_MAX_N: usize = 5;

/// Every labelled DAG on `n <= 5` nodes, from all off-diagonal 0/1 matrices
/// that pass the acyclicity check.
pub fn enumerate_all_dags(n: usize) -> Result<Vec<Dag>> {
    if n > ENUMERATION_MAX_N {
        return Err(invalid(format!("exhaustive enumeration is capped at n = {ENUMERATION_MAX_N}")));
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (0..n).filter(move |&v| v != u).map(move |v| (u, v)))
        .collect();
    let mut out = Vec::new();
    for mask in 0u32..(1 << pairs.len()) {
        let mut rows = [0u8; ENUMERATION_MAX_N];
        for (i, &(u, v)) in pairs.iter().enumerate() {
            if mask >> i & 1 == 1 {
                rows[u] |= 1 << v;
            }
        }
        if small_acyclic(&rows[..n]) {
            let edges = pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, e)| *e);
            out.push(Dag::from_edges_unchecked(n, edges)?);
        }
    }
    Ok(out)
}

/// Kahn's algorithm on child bitmasks.
fn small_acyclic(rows: &[u8]) -> bool {
    let mut left: u8 = ((1u16 << rows.len()) - 1) as u8;
    while left != 0 {
        let targeted = (0..rows.len())
            .filter(|u| left >> u & 1 == 1)
            .fold(0u8, |acc, u| acc | rows[u]);
        let sources = left & !targeted;
        if sources == 0 {
            return false;
        }
        left &= !sources;
    }
    true
}

/// Number of vertices with no incoming arcs.
pub fn classify_outpoints(dag: &Dag) -> usize {
    dag.in_degrees().iter().filter(|&&d| d == 0).count()
}

/// Canonical layer decomposition: the outpoints, then the outpoints of what
/// is left once they are removed, and so on. Returns `None` on a cycle.
pub fn peel_layers(dag: &Dag) -> Option<Vec<Vec<usize>>> {
    let mut indeg = dag.in_degrees();
    let mut layer: Vec<usize> = (0..dag.node_count()).filter(|&v| indeg[v] == 0).collect();
    let mut layers = Vec::new();
    let mut placed = 0;
    while !layer.is_empty() {
        placed += layer.len();
        let mut next = Vec::new();
        for &u in &layer {
            for v in dag.children(u) {
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    next.push(v);
                }
            }
        }
        next.sort_unstable();
        layers.push(std::mem::replace(&mut layer, next));
    }
    (placed == dag.node_count()).then_some(layers)
}

/// Whether the arcs from a freshly added layer `new` into an older DAG obey
/// `variant`. `old_outpoints` must each receive at least one arc; that part
/// is what makes the decomposition canonical.
fn step_allowed(
    dag: &Dag,
    new: &[usize],
    old_outpoints: &[usize],
    old_rest: &[usize],
    variant: Variant,
) -> bool {
    let from_new = |v: usize| new.iter().filter(|&&u| dag.has_edge(u, v)).count();
    if old_outpoints.iter().any(|&v| from_new(v) == 0) {
        return false;
    }
    match variant {
        Variant::Unrestricted => true,
        Variant::MaxIn { max_in } => old_outpoints.iter().chain(old_rest).all(|&v| from_new(v) <= max_in),
        Variant::MaxInOut { max_in, max_out } => {
            old_outpoints.iter().all(|&v| from_new(v) <= max_in)
                && new
                    .iter()
                    .all(|&u| old_rest.iter().filter(|&&v| dag.has_edge(u, v)).count() <= max_out)
        }
        Variant::MaxChildren { max_children } => new.iter().all(|&u| dag.out_degree(u) <= max_children),
    }
}

/// Checks the per-layer limits of `variant` along the canonical peeling.
pub fn satisfies_layer_limits(dag: &Dag, variant: Variant) -> bool {
    let Some(layers) = peel_layers(dag) else {
        return false;
    };
    for i in 0..layers.len().saturating_sub(1) {
        let rest: Vec<usize> = layers[i + 2..].iter().flatten().copied().collect();
        if !step_allowed(dag, &layers[i], &layers[i + 1], &rest, variant) {
            return false;
        }
    }
    true
}

/// All DAGs on `n <= 5` nodes that the layer-by-layer construction can
/// produce under `variant`, built directly from the construction: choose
/// the outpoint set, build an older DAG on the remaining labels, then try
/// every arc pattern from the new layer into it.
pub fn enumerate_layered(n: usize, variant: Variant) -> Result<Vec<Dag>> {
    if n == 0 || n > ENUMERATION_MAX_N {
        return Err(invalid(format!("layered enumeration needs 1 <= n <= {ENUMERATION_MAX_N}")));
    }
    let all: Vec<usize> = (0..n).collect();
    let mut out: Vec<Dag> = build_layered(&all, variant)
        .into_iter()
        .map(|(edges, _)| Dag::from_edges_unchecked(n, edges))
        .collect::<Result<_>>()?;
    out.sort_by_key(|d| d.key());
    Ok(out)
}

type Partial = (Vec<(usize, usize)>, Vec<usize>);

fn build_layered(labels: &[usize], variant: Variant) -> Vec<Partial> {
    let size = labels.len();
    let n = labels.iter().max().map_or(0, |m| m + 1);
    let mut out = Vec::new();
    for pick in 1u32..(1 << size) {
        let new: Vec<usize> = (0..size).filter(|i| pick >> i & 1 == 1).map(|i| labels[i]).collect();
        let old: Vec<usize> = (0..size).filter(|i| pick >> i & 1 == 0).map(|i| labels[i]).collect();
        if old.is_empty() {
            out.push((Vec::new(), new));
            continue;
        }
        let slots: Vec<(usize, usize)> = new.iter().flat_map(|&u| old.iter().map(move |&v| (u, v))).collect();
        for (old_edges, old_outpoints) in build_layered(&old, variant) {
            let old_rest: Vec<usize> = old.iter().copied().filter(|v| !old_outpoints.contains(v)).collect();
            for mask in 0u32..(1 << slots.len()) {
                let mut edges = old_edges.clone();
                edges.extend(slots.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, e)| *e));
                let dag = Dag::from_edges_unchecked(n, edges.iter().copied()).expect("labels in range");
                if step_allowed(&dag, &new, &old_outpoints, &old_rest, variant) {
                    out.push((edges, new.clone()));
                }
            }
        }
    }
    out
}

/// Counts of observed keys.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram<K: Ord> {
    counts: BTreeMap<K, u64>,
    trials: u64,
}

impl<K: Ord> Default for Histogram<K> {
    fn default() -> Self {
        Histogram {
            counts: BTreeMap::new(),
            trials: 0,
        }
    }
}

impl<K: Ord + Clone> Histogram<K> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, key: K) {
        self.add_many(key, 1);
    }

    pub fn add_many(&mut self, key: K, count: u64) {
        *self.counts.entry(key).or_insert(0) += count;
        self.trials += count;
    }

    pub fn count(&self, key: &K) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    /// Number of distinct keys seen.
    pub fn cells(&self) -> usize {
        self.counts.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, u64)> {
        self.counts.iter().map(|(k, c)| (k, *c))
    }

    pub fn merge(&mut self, other: &Histogram<K>) {
        for (k, c) in other.iter() {
            self.add_many(k.clone(), c);
        }
    }
}

impl<K: Ord + Clone> FromIterator<K> for Histogram<K> {
    fn from_iter<I: IntoIterator<Item = K>>(iter: I) -> Self {
        let mut h = Histogram::new();
        for k in iter {
            h.add(k);
        }
        h
    }
}

/// Outcome of a Pearson chi-square test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub min_expected: f64,
}

impl ChiSquare {
    /// Fewer than five expected counts in some cell: the p-value is only
    /// approximate.
    pub fn low_expected(&self) -> bool {
        self.min_expected < 5.0
    }

    fn new(statistic: f64, dof: usize, min_expected: f64) -> Self {
        ChiSquare {
            statistic,
            dof,
            p_value: chi_square_tail(statistic, dof),
            min_expected,
        }
    }
}

/// `P(X >= x)` for `X ~ chi^2(dof)`.
pub fn chi_square_tail(x: f64, dof: usize) -> f64 {
    if dof == 0 || x <= 0.0 {
        return 1.0;
    }
    if !x.is_finite() {
        return 0.0;
    }
    gamma_ur(dof as f64 / 2.0, x / 2.0)
}

/// Goodness of fit of `hist` against `expected` probabilities (normalised
/// here). A key observed with zero expected probability makes the
/// statistic infinite.
pub fn chi_square_uniformity<K: Ord + Clone>(hist: &Histogram<K>, expected: &BTreeMap<K, f64>) -> ChiSquare {
    let mass: f64 = expected.values().sum();
    let trials = hist.trials() as f64;
    let mut stat = 0.0;
    let mut min_expected = f64::INFINITY;
    let mut cells = 0;
    for (key, p) in expected {
        if *p <= 0.0 {
            continue;
        }
        cells += 1;
        let e = trials * p / mass;
        min_expected = min_expected.min(e);
        let o = hist.count(key) as f64;
        stat += (o - e) * (o - e) / e;
    }
    if hist.iter().any(|(k, c)| c > 0 && expected.get(k).is_none_or(|p| *p <= 0.0)) {
        stat = f64::INFINITY;
    }
    ChiSquare::new(stat, cells.max(1) - 1, min_expected)
}

/// The uniform law over `keys`.
pub fn uniform_over<K: Ord>(keys: impl IntoIterator<Item = K>) -> BTreeMap<K, f64> {
    keys.into_iter().map(|k| (k, 1.0)).collect()
}

/// Homogeneity test between two histograms over the union of their keys.
/// Cells with fewer than ten observations in total are pooled into one.
pub fn two_sample_test<K: Ord + Clone>(a: &Histogram<K>, b: &Histogram<K>) -> ChiSquare {
    let mut rows: Vec<(u64, u64)> = Vec::new();
    let mut pooled = (0, 0);
    let mut keys: Vec<&K> = a.counts.keys().chain(b.counts.keys()).collect();
    keys.sort();
    keys.dedup();
    for k in keys {
        let cell = (a.count(k), b.count(k));
        if cell.0 + cell.1 < 10 {
            pooled.0 += cell.0;
            pooled.1 += cell.1;
        } else {
            rows.push(cell);
        }
    }
    if pooled.0 + pooled.1 > 0 {
        rows.push(pooled);
    }
    let (na, nb) = (a.trials() as f64, b.trials() as f64);
    let total = na + nb;
    if rows.len() < 2 || na == 0.0 || nb == 0.0 {
        return ChiSquare::new(0.0, 0, f64::INFINITY);
    }
    let mut stat = 0.0;
    let mut min_expected = f64::INFINITY;
    for &(oa, ob) in &rows {
        let c = (oa + ob) as f64;
        for (o, n) in [(oa as f64, na), (ob as f64, nb)] {
            let e = n * c / total;
            min_expected = min_expected.min(e);
            stat += (o - e) * (o - e) / e;
        }
    }
    ChiSquare::new(stat, rows.len() - 1, min_expected)
}

/// Total variation distance between the empirical law and `expected`.
pub fn tv_distance<K: Ord + Clone>(hist: &Histogram<K>, expected: &BTreeMap<K, f64>) -> f64 {
    let mass: f64 = expected.values().sum();
    let trials = hist.trials() as f64;
    let mut diff: f64 = expected
        .iter()
        .map(|(k, p)| (hist.count(k) as f64 / trials - p / mass).abs())
        .sum();
    diff += hist
        .iter()
        .filter(|(k, _)| !expected.contains_key(*k))
        .map(|(_, c)| c as f64 / trials)
        .sum::<f64>();
    diff / 2.0
}
