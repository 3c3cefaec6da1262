//! Graph predicates and the two simple samplers used as foils: the
//! triangular-matrix sampler, which is fast but biased towards sparse graphs,
//! and the arc-toggling Markov chain, which is uniform only in the limit.

use std::collections::VecDeque;

use num_rational::Ratio;

use crate::dag::Dag;
use crate::error::{invalid, Result};
use crate::rng::RandomSource;
use crate::sample_exact::permute_labels;

/// Kahn's algorithm: repeatedly strip vertices of in-degree zero.
pub fn is_acyclic(dag: &Dag) -> bool {
    let mut indeg = dag.in_degrees();
    let mut stack: Vec<usize> = (0..dag.node_count()).filter(|&v| indeg[v] == 0).collect();
    let mut seen = 0;
    while let Some(u) = stack.pop() {
        seen += 1;
        for v in dag.children(u) {
            indeg[v] -= 1;
            if indeg[v] == 0 {
                stack.push(v);
            }
        }
    }
    seen == dag.node_count()
}

/// One component in the undirected skeleton. The empty graph on zero nodes
/// and any single vertex count as connected.
pub fn is_weakly_connected(dag: &Dag) -> bool {
    let n = dag.node_count();
    if n <= 1 {
        return true;
    }
    let mut adj = vec![Vec::new(); n];
    for (u, v) in dag.edges() {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut reached = 1;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                reached += 1;
                queue.push_back(v);
            }
        }
    }
    reached == n
}

/// Fills the strict upper triangle with Bernoulli(`p`) arcs, then permutes
/// the labels. Not uniform: a graph is produced once for every topological
/// order it has, so the empty graph is `n!` times too likely.
pub fn sample_triangular(n: usize, p: Ratio<u64>, rng: &mut RandomSource) -> Result<Dag> {
    if *p.denom() == 0 || p.numer() > p.denom() {
        return Err(invalid(format!("edge probability {p} outside [0, 1]")));
    }
    let mut dag = Dag::empty(n);
    for u in 0..n {
        for v in u + 1..n {
            if rng.bernoulli(*p.numer(), *p.denom()) {
                dag.set_edge(u, v);
            }
        }
    }
    Ok(permute_labels(&dag, rng))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct McmcConfig {
    pub burn_in_steps: u64,
    pub thinning_steps: u64,
    /// Keep only one of the `n` pairs `(i, i)`, which always stay put.
    pub prune_self_pairs: bool,
}

impl McmcConfig {
    pub fn new(burn_in_steps: u64, thinning_steps: u64, prune_self_pairs: bool) -> Result<Self> {
        if thinning_steps < 1 {
            return Err(invalid("thinning must be at least one step"));
        }
        Ok(McmcConfig {
            burn_in_steps,
            thinning_steps,
            prune_self_pairs,
        })
    }
}

/// Ordered pair drawn uniformly from all `n²` pairs, or from the `n² - n + 1`
/// pairs left when all but one diagonal pair are pruned.
fn draw_pair(n: usize, prune: bool, rng: &mut RandomSource) -> (usize, usize) {
    let count = if prune { n * n - n + 1 } else { n * n };
    pair_at(n, prune, rng.below(count as u64) as usize)
}

fn pair_at(n: usize, prune: bool, idx: usize) -> (usize, usize) {
    if !prune || n == 1 {
        return (idx / n, idx % n);
    }
    if idx == 0 {
        return (0, 0);
    }
    let t = idx - 1;
    let i = t / (n - 1);
    let j = t % (n - 1);
    (i, if j >= i { j + 1 } else { j })
}

/// Whether `to` can be reached from `from` along arcs.
fn reaches(dag: &Dag, from: usize, to: usize) -> bool {
    if from == to {
        return true;
    }
    let mut seen = vec![false; dag.node_count()];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(u) = stack.pop() {
        for v in dag.children(u) {
            if v == to {
                return true;
            }
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    false
}

/// Toggles the arc `i -> j` for a uniform pair `(i, j)`. Deletions always
/// go through; an addition is skipped if `j` already reaches `i`.
pub fn mcmc_step(dag: &mut Dag, cfg: &McmcConfig, rng: &mut RandomSource) {
    let n = dag.node_count();
    if n == 0 {
        return;
    }
    let (i, j) = draw_pair(n, cfg.prune_self_pairs, rng);
    apply_pair(dag, i, j);
    debug_assert!(is_acyclic(dag));
}

fn apply_pair(dag: &mut Dag, i: usize, j: usize) {
    if dag.has_edge(i, j) {
        dag.clear_edge(i, j);
    } else if !reaches(dag, j, i) {
        dag.set_edge(i, j);
    }
}

/// A chain kept alive between samples: burn in once, then thin.
#[derive(Clone, Debug)]
pub struct McmcChain {
    state: Dag,
    cfg: McmcConfig,
}

impl McmcChain {
    /// Starts from the empty graph and runs the burn-in.
    pub fn new(n: usize, cfg: McmcConfig, rng: &mut RandomSource) -> Self {
        let mut state = Dag::empty(n);
        for _ in 0..cfg.burn_in_steps {
            mcmc_step(&mut state, &cfg, rng);
        }
        McmcChain { state, cfg }
    }

    pub fn state(&self) -> &Dag {
        &self.state
    }

    /// Advances by the thinning interval and returns the new state.
    pub fn next_sample(&mut self, rng: &mut RandomSource) -> Dag {
        for _ in 0..self.cfg.thinning_steps {
            mcmc_step(&mut self.state, &self.cfg, rng);
        }
        self.state.clone()
    }
}

/// The state after burn-in of a fresh chain started at the empty graph.
pub fn sample_mcmc(n: usize, cfg: &McmcConfig, rng: &mut RandomSource) -> Dag {
    McmcChain::new(n, *cfg, rng).state
}
