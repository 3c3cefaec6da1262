//! Approximately uniform DAGs in O(n²) for large `n`.
//!
//! As `n` grows the fraction of DAGs with `k` outpoints converges to a fixed
//! law `A_k`, and the next layer size given a layer of `k` converges to
//! `B(s | k) = (1 - 2^-k)^s A_s / Z_k`. Above `n_switch` remaining nodes the
//! layers are drawn from these limits; the last `n_switch` or fewer nodes
//! are finished with the exact table, conditioned on the last limit layer.
//!
//! All limit draws are made on a fixed-point grid of `10^-10`, so a seed
//! gives the same graph on every platform.

use crate::counting::{CountTable, Variant};
use crate::dag::Dag;
use crate::error::{invalid, Error, Result};
use crate::rng::RandomSource;
use crate::sample_exact::{finish_sequence, permute_labels, reconstruct_dag, sample_outpoint_sequence, OutpointSequence};

/// Grid on which limit probabilities are stored.
pub const LIMIT_SCALE: u64 = 10_000_000_000;

/// Limiting outpoint fractions `A_1..A_7`, scaled by `10^10`. `A_8` and
/// beyond round to zero at this resolution.
pub const LIMIT_OUTPOINT_FRACTIONS: [u64; 7] =
    [5_743_623_733, 3_662_136_732, 564_645_435, 29_023_072, 566_517, 4_496, 15];

pub const MAX_LIMIT_LAYER: usize = LIMIT_OUTPOINT_FRACTIONS.len();

pub const DEFAULT_N_SWITCH: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct LimitTables {
    n_switch: usize,
    z: [f64; MAX_LIMIT_LAYER],
    /// `conditional[k - 1][s - 1]`: `B(s | k)` on the `10^-10` grid.
    conditional: [[u64; MAX_LIMIT_LAYER]; MAX_LIMIT_LAYER],
}

impl LimitTables {
    pub fn n_switch(&self) -> usize {
        self.n_switch
    }

    pub fn a(&self, k: usize) -> f64 {
        LIMIT_OUTPOINT_FRACTIONS[k - 1] as f64 / LIMIT_SCALE as f64
    }

    pub fn z(&self, k: usize) -> f64 {
        self.z[k - 1]
    }

    /// `B(s | k)` evaluated in floating point.
    pub fn b(&self, k: usize, s: usize) -> f64 {
        (1.0 - 0.5f64.powi(k as i32)).powi(s as i32) * self.a(s) / self.z(k)
    }

    /// `B(s | k)` on the fixed-point grid used for sampling.
    pub fn b_fixed(&self, k: usize, s: usize) -> u64 {
        self.conditional[k - 1][s - 1]
    }

    pub fn draw_first(&self, rng: &mut RandomSource) -> usize {
        draw_fixed(&LIMIT_OUTPOINT_FRACTIONS, rng)
    }

    pub fn draw_next(&self, k: usize, rng: &mut RandomSource) -> usize {
        draw_fixed(&self.conditional[k - 1], rng)
    }
}

fn draw_fixed(row: &[u64; MAX_LIMIT_LAYER], rng: &mut RandomSource) -> usize {
    let r = rng.below(LIMIT_SCALE) + 1;
    let mut acc = 0;
    for (i, w) in row.iter().enumerate() {
        acc += w;
        if acc >= r {
            return i + 1;
        }
    }
    unreachable!("fixed-point rows sum to the grid size")
}

/// Builds `Z_k` and the conditionals `B(s | k)` for `k, s <= 7`.
///
/// The fixed-point conditionals are computed in exact integer arithmetic:
/// with `W_s = (2^k - 1)^s 2^{k(7-s)} A_s`, `B(s | k) = W_s / sum W`, rounded
/// half up to the grid, and the rounding residue is added to `s = 1`.
pub fn build_limit_tables(n_switch: usize) -> Result<LimitTables> {
    if n_switch < 8 {
        return Err(invalid("n_switch must be at least 8 so the exact tail covers layers up to 7"));
    }
    let mut z = [0.0; MAX_LIMIT_LAYER];
    let mut conditional = [[0u64; MAX_LIMIT_LAYER]; MAX_LIMIT_LAYER];
    for k in 1..=MAX_LIMIT_LAYER {
        let keep = 1.0 - 0.5f64.powi(k as i32);
        z[k - 1] = (1..=MAX_LIMIT_LAYER)
            .map(|s| keep.powi(s as i32) * LIMIT_OUTPOINT_FRACTIONS[s - 1] as f64 / LIMIT_SCALE as f64)
            .sum();

        let weights: Vec<u128> = (1..=MAX_LIMIT_LAYER)
            .map(|s| ((1u128 << k) - 1).pow(s as u32) << (k * (MAX_LIMIT_LAYER - s)))
            .zip(LIMIT_OUTPOINT_FRACTIONS)
            .map(|(w, a)| w * u128::from(a))
            .collect();
        let norm: u128 = weights.iter().sum();
        let scale = u128::from(LIMIT_SCALE);
        let mut assigned: i128 = 0;
        for (s, w) in weights.iter().enumerate() {
            let v = (2 * scale * w + norm) / (2 * norm);
            conditional[k - 1][s] = v as u64;
            assigned += v as i128;
        }
        let residue = LIMIT_SCALE as i128 - assigned;
        conditional[k - 1][0] = (conditional[k - 1][0] as i128 + residue) as u64;
    }
    Ok(LimitTables { n_switch, z, conditional })
}

/// Outpoint sequence drawn from the limit laws while more than `n_switch`
/// nodes remain, then finished exactly.
pub fn sample_outpoint_sequence_hybrid(
    n: usize,
    lt: &LimitTables,
    table: &CountTable,
    rng: &mut RandomSource,
) -> Result<OutpointSequence> {
    if table.variant() != Variant::Unrestricted {
        return Err(Error::VariantMismatch {
            expected: "unrestricted".into(),
            found: table.variant().to_string(),
        });
    }
    if table.n_max() < lt.n_switch {
        return Err(invalid(format!(
            "exact table reaches n = {} but the switch point is {}",
            table.n_max(),
            lt.n_switch
        )));
    }
    if n <= lt.n_switch {
        return sample_outpoint_sequence(n, table, rng);
    }
    let mut k = lt.draw_first(rng);
    let mut layers = vec![k];
    let mut remaining = n - k;
    while remaining > lt.n_switch {
        k = lt.draw_next(k, rng);
        layers.push(k);
        remaining -= k;
    }
    finish_sequence(table, &mut layers, k, remaining, rng)?;
    OutpointSequence::new(layers)
}

pub fn sample_large_dag(n: usize, lt: &LimitTables, table: &CountTable, rng: &mut RandomSource) -> Result<Dag> {
    let seq = sample_outpoint_sequence_hybrid(n, lt, table, rng)?;
    let dag = reconstruct_dag(&seq, rng);
    Ok(permute_labels(&dag, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::{build_count_table, ratio_to_f64};

    #[test]
    fn fractions_sum_to_grid() {
        assert_eq!(LIMIT_OUTPOINT_FRACTIONS.iter().sum::<u64>(), LIMIT_SCALE);
        let lt = build_limit_tables(20).unwrap();
        assert_eq!(lt.a(1), 0.5743623733);
    }

    #[test]
    fn normalizers_and_rows() {
        let lt = build_limit_tables(20).unwrap();
        // sum_s 2^-s A_s from the table integers.
        assert!((lt.z(1) - 0.385_975_844_489_843_7).abs() < 1e-15);
        for k in 1..=7 {
            let row: f64 = (1..=7).map(|s| lt.b(k, s)).sum();
            assert!((row - 1.0).abs() < 1e-12);
            assert!((1..=7).all(|s| lt.b(k, s) >= 0.0));
            let fixed: u64 = (1..=7).map(|s| lt.b_fixed(k, s)).sum();
            assert_eq!(fixed, LIMIT_SCALE);
            for s in 1..=7 {
                assert!((lt.b_fixed(k, s) as f64 / LIMIT_SCALE as f64 - lt.b(k, s)).abs() < 2e-10);
            }
        }
    }

    #[test]
    fn rejects_small_switch() {
        assert!(build_limit_tables(7).is_err());
        let lt = build_limit_tables(20).unwrap();
        let small = build_count_table(10).unwrap();
        assert!(sample_outpoint_sequence_hybrid(30, &lt, &small, &mut RandomSource::seeded(0)).is_err());
    }

    #[test]
    fn twenty_node_fractions_match_limits() {
        let t = build_count_table(20).unwrap();
        for k in 1..=7 {
            let exact = ratio_to_f64(t.a(20, k), t.total(20));
            let limit = LIMIT_OUTPOINT_FRACTIONS[k - 1] as f64 / LIMIT_SCALE as f64;
            assert!((exact - limit).abs() < 1e-10, "k = {k}: {exact} vs {limit}");
        }
    }

    #[test]
    fn at_switch_point_matches_exact_sampler() {
        let lt = build_limit_tables(20).unwrap();
        let t = build_count_table(20).unwrap();
        for seed in 0..20 {
            let a = sample_outpoint_sequence_hybrid(20, &lt, &t, &mut RandomSource::seeded(seed)).unwrap();
            let b = sample_outpoint_sequence(20, &t, &mut RandomSource::seeded(seed)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn long_sequences_are_well_formed() {
        let lt = build_limit_tables(20).unwrap();
        let t = build_count_table(20).unwrap();
        let mut rng = RandomSource::seeded(3);
        for _ in 0..50 {
            let seq = sample_outpoint_sequence_hybrid(1000, &lt, &t, &mut rng).unwrap();
            assert_eq!(seq.node_count(), 1000);
            let mut left = 1000;
            for &k in seq.layers() {
                if left > 20 {
                    assert!((1..=7).contains(&k));
                }
                left -= k;
            }
        }
    }

    #[test]
    fn single_node_large_path() {
        let lt = build_limit_tables(20).unwrap();
        let t = build_count_table(20).unwrap();
        let d = sample_large_dag(1, &lt, &t, &mut RandomSource::seeded(1)).unwrap();
        assert_eq!((d.node_count(), d.edge_count()), (1, 0));
    }
}
