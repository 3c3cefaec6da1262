//! Perfectly uniform DAGs from the outpoint recursion.
//!
//! Sampling runs in three stages:
//!
//! 1. draw the sequence of outpoint-layer sizes `k_1, k_2, ...` by walking
//!    partial sums of the count table with fresh uniform big integers,
//! 2. fill a lower-triangular adjacency matrix block by block, innermost
//!    layer first, so that each older outpoint receives at least one arc from
//!    the layer added on top of it,
//! 3. relabel the vertices with a uniform permutation.
//!
//! Since every step is weighted by the exact number of completions, each
//! labelled DAG on `n` nodes comes out with probability `1 / a_n`.

use std::ops::Range;

use num_bigint::BigUint;
use num_traits::Zero;

use crate::counting::{CountTable, OutpointCounts, Variant};
use crate::dag::Dag;
use crate::error::{invalid, Error, Result};
use crate::rng::{draw_uniform_bigint, RandomSource};

/// Sizes of the successive outpoint layers, outermost first. The last entry
/// is the layer that leaves nothing behind.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OutpointSequence {
    layers: Vec<usize>,
}

impl OutpointSequence {
    pub fn new(layers: Vec<usize>) -> Result<Self> {
        if layers.is_empty() || layers.contains(&0) {
            return Err(invalid("outpoint layers must be non-empty and positive"));
        }
        Ok(OutpointSequence { layers })
    }

    pub fn layers(&self) -> &[usize] {
        &self.layers
    }

    pub fn node_count(&self) -> usize {
        self.layers.iter().sum()
    }

    /// Outpoints of the whole DAG.
    pub fn first(&self) -> usize {
        self.layers[0]
    }
}

/// One reconstruction step: the rows of a freshly added layer and the older
/// vertices they may point at, split into the previous layer (the older
/// DAG's outpoints, which must each be hit) and everything before it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct LayerStep {
    pub new: Range<usize>,
    pub old_outpoints: Range<usize>,
    pub old_rest: Range<usize>,
}

/// Blocks are laid out innermost layer first on contiguous indices.
pub(crate) fn layer_steps(seq: &OutpointSequence) -> Vec<LayerStep> {
    let mut steps = Vec::with_capacity(seq.layers.len().saturating_sub(1));
    let mut prev = 0..0;
    let mut start = 0;
    for &size in seq.layers.iter().rev() {
        let block = start..start + size;
        if !prev.is_empty() {
            steps.push(LayerStep {
                new: block.clone(),
                old_outpoints: prev.clone(),
                old_rest: 0..prev.start,
            });
        }
        prev = block;
        start += size;
    }
    steps
}

/// Smallest index whose running sum of `weights` reaches `r` (1-based).
pub(crate) fn pick_by_partial_sums<I>(weights: I, r: &BigUint) -> Option<usize>
where
    I: IntoIterator<Item = BigUint>,
{
    let mut acc = BigUint::zero();
    for (i, w) in weights.into_iter().enumerate() {
        acc += w;
        if &acc >= r {
            return Some(i);
        }
    }
    None
}

/// Draws the next layer size `s` below a layer of `k` nodes sitting on an
/// older DAG of `m` nodes.
pub(crate) fn next_layer<T: OutpointCounts + ?Sized>(
    table: &T,
    k: usize,
    m: usize,
    rng: &mut RandomSource,
) -> Result<usize> {
    let weight = |s: usize| table.link_weight(k, m, s) * table.count(m, s);
    let bound = if k + m <= table.n_max() {
        table.layer_total(k + m, k).clone()
    } else {
        (1..=m).map(weight).sum()
    };
    let r = draw_uniform_bigint(&bound, rng)?;
    pick_by_partial_sums((1..=m).map(weight), &r)
        .map(|i| i + 1)
        .ok_or_else(|| invalid("layer weights do not reach the layer total"))
}

/// Completes `layers` once the last layer has `k` nodes and `remaining`
/// nodes are still to be placed below it.
pub(crate) fn finish_sequence<T: OutpointCounts + ?Sized>(
    table: &T,
    layers: &mut Vec<usize>,
    mut k: usize,
    mut remaining: usize,
    rng: &mut RandomSource,
) -> Result<()> {
    while remaining > 0 {
        let s = next_layer(table, k, remaining, rng)?;
        layers.push(s);
        remaining -= s;
        k = s;
    }
    Ok(())
}

/// Outpoint sequence for `n` nodes, drawn against any count table.
pub fn sample_outpoint_sequence<T: OutpointCounts + ?Sized>(
    n: usize,
    table: &T,
    rng: &mut RandomSource,
) -> Result<OutpointSequence> {
    if n == 0 {
        return Err(invalid("graphs need at least one node"));
    }
    if n > table.n_max() {
        return Err(Error::OutOfRange { n, n_max: table.n_max() });
    }
    let r = draw_uniform_bigint(table.total(n), rng)?;
    let k = pick_by_partial_sums((1..=n).map(|k| table.count(n, k).clone()), &r)
        .map(|i| i + 1)
        .ok_or_else(|| invalid("row does not reach its total"))?;
    let mut layers = vec![k];
    finish_sequence(table, &mut layers, k, n - k, rng)?;
    Ok(OutpointSequence { layers })
}

/// A uniform nonzero pattern over `k` rows, least significant bit = first row.
fn nonzero_pattern(k: usize, rng: &mut RandomSource, out: &mut Vec<u64>) {
    out.clear();
    if k <= 62 {
        out.push(rng.below((1u64 << k) - 1) + 1);
        return;
    }
    loop {
        out.clear();
        let mut left = k;
        while left > 0 {
            let take = left.min(64);
            out.push(rng.bits(take as u32));
            left -= take;
        }
        if out.iter().any(|w| *w != 0) {
            return;
        }
    }
}

/// Fills the columns `0..width` of row `u` with fair coin flips.
pub(crate) fn fill_row_prefix(dag: &mut Dag, u: usize, width: usize, rng: &mut RandomSource) {
    let row = dag.row_words_mut(u);
    let full = width / 64;
    for w in row.iter_mut().take(full) {
        *w |= rng.word();
    }
    let tail = width % 64;
    if tail > 0 {
        row[full] |= rng.bits(tail as u32);
    }
}

/// Lower-triangular DAG realising `seq`: vertex blocks are laid out from the
/// innermost layer outwards, and every arc runs from a newer block to an
/// older one.
pub fn reconstruct_dag(seq: &OutpointSequence, rng: &mut RandomSource) -> Dag {
    let mut dag = Dag::empty(seq.node_count());
    let mut pattern = Vec::new();
    for step in layer_steps(seq) {
        let k = step.new.len();
        for u in step.new.clone() {
            fill_row_prefix(&mut dag, u, step.old_rest.end, rng);
        }
        for v in step.old_outpoints.clone() {
            nonzero_pattern(k, rng, &mut pattern);
            for (j, u) in step.new.clone().enumerate() {
                if pattern[j / 64] >> (j % 64) & 1 == 1 {
                    dag.set_edge(u, v);
                }
            }
        }
    }
    dag
}

/// A uniform permutation of `0..n`: position `i` swaps with a uniform
/// position in `i..n`, so an all-zero bit stream gives the identity.
pub fn uniform_permutation(n: usize, rng: &mut RandomSource) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in 0..n.saturating_sub(1) {
        let j = i + rng.below((n - i) as u64) as usize;
        perm.swap(i, j);
    }
    perm
}

pub fn permute_labels(dag: &Dag, rng: &mut RandomSource) -> Dag {
    let perm = uniform_permutation(dag.node_count(), rng);
    dag.relabelled(&perm)
}

/// Uniform labelled DAG on `n` nodes from an unrestricted table.
pub fn sample_uniform_dag(n: usize, table: &CountTable, rng: &mut RandomSource) -> Result<Dag> {
    if table.variant() != Variant::Unrestricted {
        return Err(Error::VariantMismatch {
            expected: "unrestricted".into(),
            found: table.variant().to_string(),
        });
    }
    let seq = sample_outpoint_sequence(n, table, rng)?;
    let dag = reconstruct_dag(&seq, rng);
    Ok(permute_labels(&dag, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::is_acyclic;
    use crate::counting::build_count_table;
    use crate::rng::testing::ZeroRng;
    use proptest::prelude::*;
    use std::collections::HashMap;

    #[test]
    fn steps_layout() {
        let seq = OutpointSequence::new(vec![2, 1, 3]).unwrap();
        let steps = layer_steps(&seq);
        assert_eq!(
            steps,
            vec![
                LayerStep { new: 3..4, old_outpoints: 0..3, old_rest: 0..0 },
                LayerStep { new: 4..6, old_outpoints: 3..4, old_rest: 0..3 },
            ]
        );
    }

    #[test]
    fn single_node() {
        let t = build_count_table(3).unwrap();
        let mut rng = RandomSource::seeded(5);
        for _ in 0..10 {
            assert_eq!(sample_outpoint_sequence(1, &t, &mut rng).unwrap().layers(), &[1]);
            let d = sample_uniform_dag(1, &t, &mut rng).unwrap();
            assert_eq!((d.node_count(), d.edge_count()), (1, 0));
        }
    }

    #[test]
    fn out_of_range() {
        let t = build_count_table(3).unwrap();
        let mut rng = RandomSource::seeded(5);
        assert!(matches!(sample_outpoint_sequence(4, &t, &mut rng), Err(Error::OutOfRange { .. })));
        assert!(sample_outpoint_sequence(0, &t, &mut rng).is_err());
    }

    #[test]
    fn two_node_sequence_frequencies() {
        // P([1,1]) = 2/3; 30000 draws, sd ~81.6, 4 sd band.
        let t = build_count_table(2).unwrap();
        let mut rng = RandomSource::seeded(17);
        let hits = (0..30000)
            .filter(|_| sample_outpoint_sequence(2, &t, &mut rng).unwrap().layers() == [1, 1])
            .count();
        assert!((hits as i64 - 20000).abs() < 330, "{hits}");
    }

    #[test]
    fn three_node_first_layer_frequencies() {
        let t = build_count_table(3).unwrap();
        let mut rng = RandomSource::seeded(99);
        let trials = 50000;
        let mut counts = [0usize; 4];
        for _ in 0..trials {
            counts[sample_outpoint_sequence(3, &t, &mut rng).unwrap().first()] += 1;
        }
        for (k, p) in [(1, 15.0 / 25.0), (2, 9.0 / 25.0), (3, 1.0 / 25.0)] {
            let sd = (trials as f64 * p * (1.0 - p)).sqrt();
            assert!((counts[k] as f64 - trials as f64 * p).abs() < 4.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn all_outpoint_layer_is_empty() {
        let mut rng = RandomSource::seeded(1);
        let d = reconstruct_dag(&OutpointSequence::new(vec![4]).unwrap(), &mut rng);
        assert_eq!(d.edge_count(), 0);
    }

    #[test]
    fn two_layers_of_one() {
        let mut rng = RandomSource::seeded(1);
        let d = reconstruct_dag(&OutpointSequence::new(vec![1, 1]).unwrap(), &mut rng);
        assert_eq!(d.edges().collect::<Vec<_>>(), vec![(1, 0)]);
    }

    #[test]
    fn three_layers_of_one_split_evenly() {
        let seq = OutpointSequence::new(vec![1, 1, 1]).unwrap();
        let mut rng = RandomSource::seeded(8);
        let mut with_long_arc = 0;
        let trials = 20000;
        for _ in 0..trials {
            let d = reconstruct_dag(&seq, &mut rng);
            assert!(d.has_edge(1, 0) && d.has_edge(2, 1));
            with_long_arc += d.has_edge(2, 0) as usize;
        }
        // sd ~70.7
        assert!((with_long_arc as i64 - 10000).abs() < 300, "{with_long_arc}");
    }

    #[test]
    fn zero_stream_gives_identity_permutation() {
        let mut rng = RandomSource::from_rng(ZeroRng);
        assert_eq!(uniform_permutation(6, &mut rng), (0..6).collect::<Vec<_>>());
        let d = Dag::from_edges(4, [(3, 0), (2, 1)]).unwrap();
        assert_eq!(permute_labels(&d, &mut rng), d);
        let empty = Dag::empty(5);
        let mut rng = RandomSource::seeded(3);
        assert_eq!(permute_labels(&empty, &mut rng), empty);
    }

    #[test]
    fn permutation_flips_single_arc_evenly() {
        let d = Dag::from_edges(2, [(0, 1)]).unwrap();
        let mut rng = RandomSource::seeded(12);
        let forward = (0..20000).filter(|_| permute_labels(&d, &mut rng).has_edge(0, 1)).count();
        assert!((forward as i64 - 10000).abs() < 300, "{forward}");
    }

    #[test]
    fn wide_layers_use_long_patterns() {
        // A 70-node outpoint layer on top of one node exercises the
        // multi-word nonzero pattern path.
        let seq = OutpointSequence::new(vec![70, 1]).unwrap();
        let mut rng = RandomSource::seeded(4);
        for _ in 0..20 {
            let d = reconstruct_dag(&seq, &mut rng);
            assert!(d.in_degrees()[0] >= 1);
            assert_eq!(d.outpoints().len(), 70);
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let t = build_count_table(30).unwrap();
        let a = sample_uniform_dag(30, &t, &mut RandomSource::seeded(77)).unwrap();
        let b = sample_uniform_dag(30, &t, &mut RandomSource::seeded(77)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sequence_probabilities_at_n4() {
        // Probability of a sequence is the share of a_4 it accounts for;
        // enumerate the exact law from the table and compare frequencies.
        let t = build_count_table(4).unwrap();
        let mut rng = RandomSource::seeded(2);
        let trials = 60000;
        let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
        for _ in 0..trials {
            *seen.entry(sample_outpoint_sequence(4, &t, &mut rng).unwrap().layers().to_vec()).or_default() += 1;
        }
        // [1,1,1,1]: 4! labellings times 1·2·4 arc choices (each new node must
        // hit the previous one and is free on the rest) = 192 of 543.
        let chain = (24.0 * 8.0) / 543.0;
        let got = seen[&vec![1, 1, 1, 1]] as f64 / trials as f64;
        assert!((got - chain).abs() < 4.0 * (chain * (1.0 - chain) / trials as f64).sqrt(), "{got} vs {chain}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn structural_invariants(n in 1usize..40, seed in any::<u64>()) {
            let t = build_count_table(40).unwrap();
            let mut rng = RandomSource::seeded(seed);
            let seq = sample_outpoint_sequence(n, &t, &mut rng).unwrap();
            prop_assert_eq!(seq.node_count(), n);
            prop_assert!(seq.layers().len() <= n);
            let d = reconstruct_dag(&seq, &mut rng);
            prop_assert!(is_acyclic(&d));
            let innermost = *seq.layers().last().unwrap();
            prop_assert!((0..innermost).all(|u| d.out_degree(u) == 0));
            let indeg = d.in_degrees();
            prop_assert!(indeg[n - seq.first()..].iter().all(|x| *x == 0));
            prop_assert_eq!(d.outpoints().len(), seq.first());
            for (u, v) in d.edges() {
                prop_assert!(u > v);
            }
            let p = permute_labels(&d, &mut rng);
            prop_assert!(is_acyclic(&p));
            prop_assert_eq!(p.edge_count(), d.edge_count());
            prop_assert_eq!(p.outpoints().len(), seq.first());
        }
    }
}
