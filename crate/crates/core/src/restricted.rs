//! Samplers for restricted and weighted DAG families.
//!
//! All of them reuse the outpoint-sequence walk of [`crate::sample_exact`]
//! against a table built for the restriction; only the way each layer is
//! wired to the older DAG changes.

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, Zero};

use crate::baselines::is_weakly_connected;
use crate::counting::{ratio_to_f64, Binomials, CountTable, Variant, WeightedTable};
use crate::dag::Dag;
use crate::error::{invalid, Error, Result};
use crate::rng::{draw_uniform_bigint, RandomSource};
use crate::sample_exact::{
    layer_steps, permute_labels, pick_by_partial_sums, sample_outpoint_sequence,
    sample_uniform_dag, LayerStep,
};

/// A restriction on the DAGs to draw.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RestrictionSpec {
    Connected,
    /// Each layer sends at most `K` arcs into every older node.
    MaxIn(usize),
    /// At most `K` arcs into each older outpoint per layer, and at most
    /// `K_n` arcs from each new node into older non-outpoints.
    MaxInOut(usize, usize),
    MaxChildren(usize),
    Weighted(Ratio<u64>),
}

impl RestrictionSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RestrictionSpec::MaxIn(k) | RestrictionSpec::MaxInOut(k, _) | RestrictionSpec::MaxChildren(k)
                if k < 1 =>
            {
                Err(invalid("K must be at least 1"))
            }
            RestrictionSpec::Weighted(p) if *p.denom() == 0 || p.numer() > p.denom() => {
                Err(invalid(format!("edge probability {p} outside [0, 1]")))
            }
            _ => Ok(()),
        }
    }

    /// Table variant this restriction samples against, if it needs one of
    /// its own.
    pub fn variant(&self) -> Option<Variant> {
        match *self {
            RestrictionSpec::MaxIn(k) => Some(Variant::MaxIn { max_in: k }),
            RestrictionSpec::MaxInOut(k, kn) => Some(Variant::MaxInOut { max_in: k, max_out: kn }),
            RestrictionSpec::MaxChildren(k) => Some(Variant::MaxChildren { max_children: k }),
            RestrictionSpec::Connected => Some(Variant::Unrestricted),
            RestrictionSpec::Weighted(_) => None,
        }
    }
}

fn mismatch(expected: &str, table: &CountTable) -> Error {
    Error::VariantMismatch {
        expected: expected.into(),
        found: table.variant().to_string(),
    }
}

/// Uniform weakly connected DAG by rejection, with the number of attempts.
pub fn sample_connected_dag_counted(n: usize, table: &CountTable, rng: &mut RandomSource) -> Result<(Dag, u64)> {
    let mut attempts = 0;
    loop {
        attempts += 1;
        let dag = sample_uniform_dag(n, table, rng)?;
        if is_weakly_connected(&dag) {
            return Ok((dag, attempts));
        }
    }
}

pub fn sample_connected_dag(n: usize, table: &CountTable, rng: &mut RandomSource) -> Result<Dag> {
    sample_connected_dag_counted(n, table, rng).map(|(d, _)| d)
}

/// Size `i` in `lo..=hi` drawn with weight `binom(n, i)`.
fn binomial_size(binom: &Binomials, n: usize, lo: usize, hi: usize, rng: &mut RandomSource) -> Result<usize> {
    let hi = hi.min(n);
    let total = binom.partial_row_sum(n, lo, hi);
    let r = draw_uniform_bigint(&total, rng)?;
    pick_by_partial_sums((lo..=hi).map(|i| binom.get(n, i)), &r)
        .map(|j| lo + j)
        .ok_or_else(|| invalid("binomial weights do not reach their sum"))
}

/// Uniform `size`-subset of `0..n`, by a partial shuffle.
fn uniform_subset(n: usize, size: usize, rng: &mut RandomSource) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..size {
        let j = i + rng.below((n - i) as u64) as usize;
        idx.swap(i, j);
    }
    idx.truncate(size);
    idx
}

/// Uniform subset of `0..n` with size in `lo..=hi`.
fn bounded_subset(binom: &Binomials, n: usize, lo: usize, hi: usize, rng: &mut RandomSource) -> Result<Vec<usize>> {
    let size = binomial_size(binom, n, lo, hi, rng)?;
    Ok(uniform_subset(n, size, rng))
}

/// DAG uniform among those the layer construction yields under a max-in or
/// max-in/max-out table.
pub fn sample_max_in_dag(n: usize, table: &CountTable, rng: &mut RandomSource) -> Result<Dag> {
    let (max_in, max_out) = match table.variant() {
        Variant::MaxIn { max_in } => (max_in, None),
        Variant::MaxInOut { max_in, max_out } => (max_in, Some(max_out)),
        _ => return Err(mismatch("max-in or max-in-out", table)),
    };
    table.check_range(n)?;
    let binom = table.binomials();
    let seq = sample_outpoint_sequence(n, table, rng)?;
    let mut dag = Dag::empty(n);
    for step in layer_steps(&seq) {
        let k = step.new.len();
        let new = step.new.start;
        for v in step.old_outpoints.clone() {
            for j in bounded_subset(binom, k, 1, max_in, rng)? {
                dag.set_edge(new + j, v);
            }
        }
        match max_out {
            None => {
                for v in step.old_rest.clone() {
                    for j in bounded_subset(binom, k, 0, max_in, rng)? {
                        dag.set_edge(new + j, v);
                    }
                }
            }
            Some(max_out) => {
                for u in step.new.clone() {
                    for c in bounded_subset(binom, step.old_rest.len(), 0, max_out, rng)? {
                        dag.set_edge(u, step.old_rest.start + c);
                    }
                }
            }
        }
    }
    Ok(permute_labels(&dag, rng))
}

/// How to wire a layer under a children limit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChildrenStrategy {
    /// Pick per layer: `A` when `C(k,m,s,K) / N(m)^k`, the acceptance rate
    /// of `A`, is at least `threshold`, `B` below it.
    Auto { threshold: f64 },
    /// Independent rows, rejecting layers that miss an older outpoint.
    A,
    /// One marked arc per older outpoint, then free arcs, with a correcting
    /// acceptance step.
    B,
}

impl Default for ChildrenStrategy {
    fn default() -> Self {
        ChildrenStrategy::Auto { threshold: 0.1 }
    }
}

/// Rows of one layer step under a children limit, as older-column indices
/// relative to `old_rest.start`; outpoint columns come last.
struct ChildrenLayer<'a> {
    binom: &'a Binomials,
    k: usize,
    m: usize,
    s: usize,
    cap: usize,
}

impl ChildrenLayer<'_> {
    fn outpoint_col(&self, c: usize) -> usize {
        self.m - self.s + c
    }

    /// Strategy A: each row a uniform subset of size at most `K`, drawn by
    /// size then placement; restart while some outpoint column is empty.
    fn draw_a(&self, rng: &mut RandomSource) -> Result<Vec<Vec<usize>>> {
        loop {
            let sizes = (0..self.k)
                .map(|_| binomial_size(self.binom, self.m, 0, self.cap, rng))
                .collect::<Result<Vec<_>>>()?;
            if sizes.iter().sum::<usize>() < self.s {
                continue;
            }
            let rows: Vec<Vec<usize>> = sizes.iter().map(|&d| uniform_subset(self.m, d, rng)).collect();
            let mut hit = vec![false; self.s];
            for &c in rows.iter().flatten() {
                if c >= self.m - self.s {
                    hit[c - (self.m - self.s)] = true;
                }
            }
            if hit.iter().all(|&h| h) {
                return Ok(rows);
            }
        }
    }

    /// Free-choice count for a row already holding `c` marked arcs.
    fn extra_options(&self, c: usize) -> BigUint {
        let free = self.m - c;
        self.binom.partial_row_sum(free, 0, self.cap - c)
    }

    /// `max prod_r g(c_r)` over row counts `c_r <= K` summing to `s`.
    fn best_product(&self) -> BigUint {
        let g: Vec<BigUint> = (0..=self.cap.min(self.s)).map(|c| self.extra_options(c)).collect();
        // best[t]: largest product over the rows so far with t marks placed.
        let mut best: Vec<Option<BigUint>> = vec![None; self.s + 1];
        best[0] = Some(BigUint::one());
        for _ in 0..self.k {
            let mut next: Vec<Option<BigUint>> = vec![None; self.s + 1];
            for (t, cur) in best.iter().enumerate() {
                let Some(cur) = cur else { continue };
                for (c, gc) in g.iter().enumerate() {
                    if t + c > self.s {
                        break;
                    }
                    let v = cur * gc;
                    if next[t + c].as_ref().is_none_or(|x| &v > x) {
                        next[t + c] = Some(v);
                    }
                }
            }
            best = next;
        }
        best[self.s].clone().unwrap_or_default()
    }

    /// Strategy B: every older outpoint gets one marked arc from a uniform
    /// row (restart if a row exceeds `K`); each row then adds a uniform
    /// subset of its unmarked columns within its remaining budget. A final
    /// matrix is reachable from `F = prod l_c` markings, where `l_c` is the
    /// in-count of outpoint column `c`, and the row choices have probability
    /// `prod 1 / g(c_r)`; accepting with `prod g(c_r) / (D F)` evens this out.
    fn draw_b(&self, best: &BigUint, rng: &mut RandomSource) -> Result<Vec<Vec<usize>>> {
        loop {
            let mut marked = vec![Vec::new(); self.k];
            for c in 0..self.s {
                marked[rng.below(self.k as u64) as usize].push(self.outpoint_col(c));
            }
            if marked.iter().any(|r| r.len() > self.cap) {
                continue;
            }
            let mut rows = Vec::with_capacity(self.k);
            let mut weight = BigUint::one();
            for mine in &marked {
                let c = mine.len();
                weight *= self.extra_options(c);
                let free: Vec<usize> = (0..self.m).filter(|x| !mine.contains(x)).collect();
                let extra = bounded_subset(self.binom, free.len(), 0, self.cap - c, rng)?;
                let mut row = mine.clone();
                row.extend(extra.into_iter().map(|i| free[i]));
                rows.push(row);
            }
            let mut in_counts = vec![0u64; self.s];
            for &col in rows.iter().flatten() {
                if col >= self.m - self.s {
                    in_counts[col - (self.m - self.s)] += 1;
                }
            }
            let f: BigUint = in_counts.iter().map(|&l| BigUint::from(l)).product();
            let r = draw_uniform_bigint(&(best * f), rng)?;
            if r <= weight {
                return Ok(rows);
            }
        }
    }
}

/// Uniform DAG with every out-degree at most `K`, from a children-limited
/// table.
pub fn sample_children_limited_dag(
    n: usize,
    table: &CountTable,
    strategy: ChildrenStrategy,
    rng: &mut RandomSource,
) -> Result<Dag> {
    let Variant::MaxChildren { max_children } = table.variant() else {
        return Err(mismatch("max-children", table));
    };
    table.check_range(n)?;
    let seq = sample_outpoint_sequence(n, table, rng)?;
    let mut dag = Dag::empty(n);
    for step in layer_steps(&seq) {
        let LayerStep { new, old_outpoints, old_rest } = step;
        let layer = ChildrenLayer {
            binom: table.binomials(),
            k: new.len(),
            m: old_outpoints.end,
            s: old_outpoints.len(),
            cap: max_children,
        };
        let use_b = match strategy {
            ChildrenStrategy::A => false,
            ChildrenStrategy::B => true,
            ChildrenStrategy::Auto { threshold } => {
                let options = table.binomials().partial_row_sum(layer.m, 0, max_children);
                let proxy = ratio_to_f64(
                    &table.link_weight(layer.k, layer.m, layer.s),
                    &num_traits::pow(options, layer.k),
                );
                proxy < threshold
            }
        };
        let rows = if use_b {
            let best = layer.best_product();
            if best.is_zero() {
                return Err(invalid("layer has no valid wiring"));
            }
            layer.draw_b(&best, rng)?
        } else {
            layer.draw_a(rng)?
        };
        debug_assert_eq!(old_rest.start, 0);
        for (u, row) in new.clone().zip(rows) {
            for c in row {
                dag.set_edge(u, c);
            }
        }
    }
    Ok(permute_labels(&dag, rng))
}

/// `k`-bit pattern of independent Bernoulli(`p`) bits conditioned on not
/// being all zero. Rejection first; if that keeps failing (tiny `p`), the
/// position of the lowest set bit is drawn exactly, with the bits above it
/// left independent.
fn weighted_nonzero_pattern(k: usize, num: u64, den: u64, rng: &mut RandomSource) -> Result<Vec<bool>> {
    for _ in 0..64 {
        let bits: Vec<bool> = (0..k).map(|_| rng.bernoulli(num, den)).collect();
        if bits.iter().any(|&b| b) {
            return Ok(bits);
        }
    }
    let q = BigUint::from(den - num);
    let den_b = BigUint::from(den);
    // P(lowest set bit = j) is proportional to q^j num den^(k-1-j).
    let weights: Vec<BigUint> = (0..k)
        .map(|j| num_traits::pow(q.clone(), j) * num * num_traits::pow(den_b.clone(), k - 1 - j))
        .collect();
    let total: BigUint = weights.iter().sum();
    let r = draw_uniform_bigint(&total, rng)?;
    let first = pick_by_partial_sums(weights, &r).ok_or_else(|| invalid("pattern weights do not reach their sum"))?;
    Ok((0..k)
        .map(|j| match j.cmp(&first) {
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => true,
            std::cmp::Ordering::Greater => rng.bernoulli(num, den),
        })
        .collect())
}

/// DAG drawn with probability proportional to `p^l (1-p)^{L-l}` for `l` arcs.
pub fn sample_weighted_dag(n: usize, p: Ratio<u64>, table: &WeightedTable, rng: &mut RandomSource) -> Result<Dag> {
    RestrictionSpec::Weighted(p).validate()?;
    if p != table.p() {
        return Err(Error::VariantMismatch {
            expected: format!("weighted p={p}"),
            found: format!("weighted p={}", table.p()),
        });
    }
    table.check_range(n)?;
    let (num, den) = (*table.p().numer(), *table.p().denom());
    let seq = sample_outpoint_sequence(n, table, rng)?;
    let mut dag = Dag::empty(n);
    for step in layer_steps(&seq) {
        for u in step.new.clone() {
            for v in step.old_rest.clone() {
                if rng.bernoulli(num, den) {
                    dag.set_edge(u, v);
                }
            }
        }
        for v in step.old_outpoints.clone() {
            let bits = weighted_nonzero_pattern(step.new.len(), num, den, rng)?;
            for (u, b) in step.new.clone().zip(bits) {
                if b {
                    dag.set_edge(u, v);
                }
            }
        }
    }
    Ok(permute_labels(&dag, rng))
}
