//! Uniform random generation of labelled directed acyclic graphs.
//!
//! Exact sampling rests on counting DAGs by their number of outpoints
//! (vertices with no incoming arcs): [`counting`] builds the big-integer
//! tables, [`sample_exact`] walks them to draw a layer sequence and fills in
//! the adjacency matrix, and [`sample_limit`] swaps the tables for their
//! large-`n` limits so that a sample costs O(n²). [`restricted`] covers
//! connected, degree-limited and edge-weighted DAGs, [`baselines`] has the
//! biased triangular sampler and the Markov chain, and [`oracle_stats`]
//! holds the brute-force enumerators and chi-square tests.
//!
//! ```
//! use dagforge::{build_count_table, sample_uniform_dag, RandomSource};
//!
//! let table = build_count_table(10).unwrap();
//! let mut rng = RandomSource::seeded(7);
//! let dag = sample_uniform_dag(10, &table, &mut rng).unwrap();
//! assert!(dagforge::is_acyclic(&dag));
//! ```

pub mod baselines;
pub mod counting;
pub mod dag;
pub mod error;
pub mod format;
pub mod oracle_stats;
pub mod restricted;
pub mod rng;
pub mod sample_exact;
pub mod sample_limit;

pub use baselines::{
    is_acyclic, is_weakly_connected, mcmc_step, sample_mcmc, sample_triangular, McmcChain, McmcConfig,
};
pub use counting::{
    asymptotic_ratio, build_children_limited_table, build_count_table, build_restricted_table,
    build_weighted_table, c_link_count, edge_probability, load_table, total_inclusion_exclusion, Binomials,
    CountTable, LoadedTable, OutpointCounts, Variant, WeightedTable, DEFAULT_N_MAX,
};
pub use dag::{Dag, DagKey};
pub use error::{Error, Result};
pub use format::{parse_dags, write_dag, OutputFormat};
pub use oracle_stats::{
    chi_square_uniformity, classify_outpoints, enumerate_all_dags, two_sample_test, ChiSquare, Histogram,
};
pub use restricted::{
    sample_children_limited_dag, sample_connected_dag, sample_max_in_dag, sample_weighted_dag, ChildrenStrategy,
    RestrictionSpec,
};
pub use rng::{draw_uniform_bigint, RandomSource};
pub use sample_exact::{
    permute_labels, reconstruct_dag, sample_outpoint_sequence, sample_uniform_dag, uniform_permutation,
    OutpointSequence,
};
pub use sample_limit::{
    build_limit_tables, sample_large_dag, sample_outpoint_sequence_hybrid, LimitTables, DEFAULT_N_SWITCH,
};

/// Re-exported so callers can name probabilities and counts without adding
/// the numeric crates themselves.
pub use num_bigint::BigUint;
pub use num_rational::Ratio;
