//! Exact count tables behind every sampler.
//!
//! A DAG on `n` nodes with `k` outpoints decomposes into its outpoints and a
//! smaller DAG on `m = n - k` nodes with `s` outpoints. Every table here
//! stores, for `1 <= k <= n <= n_max`,
//!
//! * `b(n, k) = sum_{s=1..m} w(k, m, s) * a(m, s)`, the label-free layer count,
//! * `a(n, k) = f(n, k) * b(n, k)`, with `f` the labelling factor (a binomial),
//! * `total(n) = sum_k a(n, k)`,
//!
//! where the link weight `w(k, m, s)` counts the ways `k` new outpoints can
//! attach to the older DAG. The variants differ only in `w` and `f`.

mod cache;
mod links;

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{invalid, Error, Result};

pub use cache::{load_table, LoadedTable, CACHE_MAGIC};
pub use links::{c_link_count, LinkCounter};

/// Largest `n_max` built by default; larger graphs go through the
/// limit-distribution sampler.
pub const DEFAULT_N_MAX: usize = 200;

/// Leading constants of `a_n ~ n! 2^L / (M q^n)`, to the three digits
/// commonly quoted.
pub const ASYMPTOTIC_M: f64 = 0.574;
pub const ASYMPTOTIC_Q: f64 = 1.48;

/// Which family of DAGs a [`CountTable`] counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    Unrestricted,
    /// Every older node receives at most `max_in` arcs from each new layer.
    MaxIn { max_in: usize },
    /// Older outpoints receive at most `max_in` arcs from each new layer and
    /// every new node sends at most `max_out` arcs to older non-outpoints.
    MaxInOut { max_in: usize, max_out: usize },
    /// Every node has at most `max_children` children.
    MaxChildren { max_children: usize },
}

impl Variant {
    pub fn tag(&self) -> &'static str {
        match self {
            Variant::Unrestricted => "unrestricted",
            Variant::MaxIn { .. } => "max-in",
            Variant::MaxInOut { .. } => "max-in-out",
            Variant::MaxChildren { .. } => "max-children",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::Unrestricted => write!(f, "unrestricted"),
            Variant::MaxIn { max_in } => write!(f, "max-in(K={max_in})"),
            Variant::MaxInOut { max_in, max_out } => write!(f, "max-in-out(K={max_in}, K_n={max_out})"),
            Variant::MaxChildren { max_children } => write!(f, "max-children(K={max_children})"),
        }
    }
}

/// Read access shared by integer and weighted tables, which is all the
/// outpoint-sequence samplers need.
pub trait OutpointCounts {
    fn n_max(&self) -> usize;
    /// Weight of all `n`-node DAGs with `k` outpoints.
    fn count(&self, n: usize, k: usize) -> &BigUint;
    /// `count(n, k)` without the labelling factor.
    fn layer_total(&self, n: usize, k: usize) -> &BigUint;
    fn total(&self, n: usize) -> &BigUint;
    /// Ways `k` new outpoints attach to an older DAG of `m` nodes with `s`
    /// outpoints, not counting the older DAG itself.
    fn link_weight(&self, k: usize, m: usize, s: usize) -> BigUint;
}

/// Pascal's triangle in big integers, grown on demand.
#[derive(Clone, Debug, Default)]
pub struct Binomials {
    rows: Vec<Vec<BigUint>>,
}

impl Binomials {
    pub fn new(n: usize) -> Self {
        let mut b = Binomials { rows: Vec::new() };
        b.ensure(n);
        b
    }

    pub fn ensure(&mut self, n: usize) {
        while self.rows.len() <= n {
            let row = match self.rows.last() {
                None => vec![BigUint::one()],
                Some(prev) => {
                    let mut row = Vec::with_capacity(prev.len() + 1);
                    row.push(BigUint::one());
                    for w in prev.windows(2) {
                        row.push(&w[0] + &w[1]);
                    }
                    row.push(BigUint::one());
                    row
                }
            };
            self.rows.push(row);
        }
    }

    /// `binom(n, k)`; zero for `k > n`.
    pub fn get(&self, n: usize, k: usize) -> BigUint {
        if k > n {
            BigUint::zero()
        } else {
            self.rows[n][k].clone()
        }
    }

    pub fn row(&self, n: usize) -> &[BigUint] {
        &self.rows[n]
    }

    /// `sum_{i=lo..=hi} binom(n, i)`, clamped to the row.
    pub fn partial_row_sum(&self, n: usize, lo: usize, hi: usize) -> BigUint {
        let hi = hi.min(n);
        if lo > hi {
            return BigUint::zero();
        }
        self.rows[n][lo..=hi].iter().sum()
    }
}

/// Triangular storage shared by the table types. Index 0 rows are unused.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Triangle {
    pub(crate) a: Vec<Vec<BigUint>>,
    pub(crate) b: Vec<Vec<BigUint>>,
    pub(crate) total: Vec<BigUint>,
}

impl Triangle {
    fn with_capacity(n_max: usize) -> Self {
        let mut t = Triangle {
            a: Vec::with_capacity(n_max + 1),
            b: Vec::with_capacity(n_max + 1),
            total: Vec::with_capacity(n_max + 1),
        };
        t.a.push(Vec::new());
        t.b.push(Vec::new());
        t.total.push(BigUint::one());
        t
    }

    fn n_max(&self) -> usize {
        self.a.len() - 1
    }

    /// Appends row `n`; `row_a[k - 1]`, `row_b[k - 1]` hold `k = 1..=n`.
    fn push_row(&mut self, row_a: Vec<BigUint>, row_b: Vec<BigUint>) {
        let mut a = Vec::with_capacity(row_a.len() + 1);
        a.push(BigUint::zero());
        a.extend(row_a);
        let mut b = Vec::with_capacity(row_b.len() + 1);
        b.push(BigUint::zero());
        b.extend(row_b);
        self.total.push(a.iter().sum());
        self.a.push(a);
        self.b.push(b);
    }
}

/// Exact counts of labelled DAGs by outpoint number, for one [`Variant`].
///
/// Immutable once built; share it freely between samplers.
#[derive(Clone, Debug)]
pub struct CountTable {
    variant: Variant,
    tri: Triangle,
    binom: Binomials,
    links: Option<LinkCounter>,
}

impl PartialEq for CountTable {
    fn eq(&self, other: &Self) -> bool {
        self.variant == other.variant && self.tri == other.tri
    }
}

impl CountTable {
    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn n_max(&self) -> usize {
        self.tri.n_max()
    }

    /// `a(n, k)`: DAGs on `n` labelled nodes with exactly `k` outpoints.
    pub fn a(&self, n: usize, k: usize) -> &BigUint {
        &self.tri.a[n][k]
    }

    pub fn b(&self, n: usize, k: usize) -> &BigUint {
        &self.tri.b[n][k]
    }

    pub fn total(&self, n: usize) -> &BigUint {
        &self.tri.total[n]
    }

    /// `C(k, m, s, K)` values; present only for the children-limited variant.
    pub fn links(&self) -> Option<&LinkCounter> {
        self.links.as_ref()
    }

    pub fn binomials(&self) -> &Binomials {
        &self.binom
    }

    pub(crate) fn check_range(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(invalid("graphs need at least one node"));
        }
        if n > self.n_max() {
            return Err(Error::OutOfRange { n, n_max: self.n_max() });
        }
        Ok(())
    }

    /// Ways `k` new nodes can attach to an older DAG (`m` nodes, `s` outpoints).
    pub fn link_weight(&self, k: usize, m: usize, s: usize) -> BigUint {
        if m == 0 {
            return BigUint::one();
        }
        match self.variant {
            Variant::Unrestricted => unrestricted_weight(k, m, s),
            Variant::MaxIn { max_in } => {
                let hit = self.binom.partial_row_sum(k, 1, max_in);
                let free = self.binom.partial_row_sum(k, 0, max_in);
                num_traits::pow(hit, s) * num_traits::pow(free, m - s)
            }
            Variant::MaxInOut { max_in, max_out } => {
                let hit = self.binom.partial_row_sum(k, 1, max_in);
                let sends = self.binom.partial_row_sum(m - s, 0, max_out);
                num_traits::pow(hit, s) * num_traits::pow(sends, k)
            }
            Variant::MaxChildren { .. } => self
                .links
                .as_ref()
                .and_then(|l| l.get(k, m, s))
                .expect("link counts cover every (k, m) with k + m <= n_max"),
        }
    }

    /// `b(n, k)` computed from the rows below `n`.
    fn layer_sum(&mut self, k: usize, m: usize) -> BigUint {
        if m == 0 {
            return BigUint::one();
        }
        let a_m = &self.tri.a[m];
        match self.variant {
            Variant::Unrestricted => {
                let f = (BigUint::one() << k) - 1u32;
                let g = BigUint::one() << k;
                horner(&f, &g, m, a_m)
            }
            Variant::MaxIn { max_in } => {
                let f = self.binom.partial_row_sum(k, 1, max_in);
                let g = self.binom.partial_row_sum(k, 0, max_in);
                horner(&f, &g, m, a_m)
            }
            Variant::MaxInOut { .. } => (1..=m).map(|s| self.link_weight(k, m, s) * &self.tri.a[m][s]).sum(),
            Variant::MaxChildren { .. } => {
                let links = self.links.as_mut().expect("children table carries link counts");
                let mut sum = BigUint::zero();
                for s in 1..=m {
                    let c = links.count(k, m, s).expect("s <= m");
                    sum += c * &self.tri.a[m][s];
                }
                sum
            }
        }
    }

    fn build(n_max: usize, variant: Variant) -> Result<Self> {
        if n_max < 1 {
            return Err(invalid("n_max must be at least 1"));
        }
        let links = match variant {
            Variant::MaxChildren { max_children } => Some(LinkCounter::new(max_children)?),
            _ => None,
        };
        let mut table = CountTable {
            variant,
            tri: Triangle::with_capacity(n_max),
            binom: Binomials::new(n_max),
            links,
        };
        for n in 1..=n_max {
            let mut row_a = Vec::with_capacity(n);
            let mut row_b = Vec::with_capacity(n);
            for k in 1..=n {
                let b = table.layer_sum(k, n - k);
                row_a.push(table.binom.get(n, k) * &b);
                row_b.push(b);
            }
            table.tri.push_row(row_a, row_b);
        }
        Ok(table)
    }

    pub(crate) fn from_parts(variant: Variant, tri: Triangle) -> Result<Self> {
        let n_max = tri.n_max();
        let links = match variant {
            Variant::MaxChildren { max_children } => {
                let mut l = LinkCounter::new(max_children)?;
                for n in 1..=n_max {
                    for k in 1..n {
                        for s in 1..=n - k {
                            l.count(k, n - k, s)?;
                        }
                    }
                }
                Some(l)
            }
            _ => None,
        };
        Ok(CountTable {
            variant,
            tri,
            binom: Binomials::new(n_max),
            links,
        })
    }

}

impl OutpointCounts for CountTable {
    fn n_max(&self) -> usize {
        CountTable::n_max(self)
    }
    fn count(&self, n: usize, k: usize) -> &BigUint {
        self.a(n, k)
    }
    fn layer_total(&self, n: usize, k: usize) -> &BigUint {
        self.b(n, k)
    }
    fn total(&self, n: usize) -> &BigUint {
        CountTable::total(self, n)
    }
    fn link_weight(&self, k: usize, m: usize, s: usize) -> BigUint {
        CountTable::link_weight(self, k, m, s)
    }
}

/// `(2^k - 1)^s 2^{k(m-s)}`.
pub(crate) fn unrestricted_weight(k: usize, m: usize, s: usize) -> BigUint {
    num_traits::pow((BigUint::one() << k) - 1u32, s) << (k * (m - s))
}

/// `sum_{s=1..m} f^s g^{m-s} a[s]` by Horner's rule in `f`. Multiplying by a
/// small `f` is linear in the accumulator size, and `g` powers reduce to
/// shifts when `g` is a power of two.
fn horner(f: &BigUint, g: &BigUint, m: usize, a: &[BigUint]) -> BigUint {
    let g_shift = (g.count_ones() == 1).then(|| g.trailing_zeros().unwrap_or(0) as usize);
    let mut g_pow = BigUint::one();
    let mut acc = a[m].clone();
    for s in (1..m).rev() {
        acc *= f;
        let e = m - s;
        match g_shift {
            Some(sh) => acc += &a[s] << (sh * e),
            None => {
                g_pow *= g;
                acc += &a[s] * &g_pow;
            }
        }
    }
    acc * f
}

/// All labelled DAGs, counted by outpoints.
pub fn build_count_table(n_max: usize) -> Result<CountTable> {
    CountTable::build(n_max, Variant::Unrestricted)
}

/// DAGs where each new layer sends at most `max_in` arcs into every older
/// node; with `max_out` set, the cap applies to older outpoints only and
/// each new node sends at most `max_out` arcs to older non-outpoints.
pub fn build_restricted_table(n_max: usize, max_in: usize, max_out: Option<usize>) -> Result<CountTable> {
    if max_in < 1 {
        return Err(invalid("max in-arcs per layer K must be at least 1"));
    }
    let variant = match max_out {
        None => Variant::MaxIn { max_in },
        Some(max_out) => Variant::MaxInOut { max_in, max_out },
    };
    CountTable::build(n_max, variant)
}

/// DAGs in which every node has at most `max_children` children.
pub fn build_children_limited_table(n_max: usize, max_children: usize) -> Result<CountTable> {
    if max_children < 1 {
        return Err(invalid("max children K must be at least 1"));
    }
    CountTable::build(n_max, Variant::MaxChildren { max_children })
}

/// Totals `a_0..=a_n` from the signed recursion
/// `a_n = sum_k (-1)^{k+1} binom(n,k) 2^{k(n-k)} a_{n-k}`.
pub(crate) fn inclusion_exclusion_totals(n: usize) -> Vec<BigUint> {
    let binom = Binomials::new(n);
    let mut totals: Vec<BigInt> = vec![BigInt::one()];
    for j in 1..=n {
        let mut acc = BigInt::zero();
        for k in 1..=j {
            let term = BigInt::from(binom.get(j, k) * (totals[j - k].magnitude() << (k * (j - k))));
            if k % 2 == 1 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        totals.push(acc);
    }
    totals.into_iter().map(|t| t.magnitude().clone()).collect()
}

/// Total DAG count on `n` nodes by inclusion-exclusion, computed
/// independently of the outpoint table it is checked against.
pub fn total_inclusion_exclusion(n: usize, table: &CountTable) -> Result<BigUint> {
    if table.variant() != Variant::Unrestricted {
        return Err(Error::VariantMismatch {
            expected: "unrestricted".into(),
            found: table.variant().to_string(),
        });
    }
    table.check_range(n)?;
    Ok(inclusion_exclusion_totals(n).pop().expect("n >= 1"))
}

/// `a_n M q^n / (n! 2^L)`; tends to one when `M` and `q` are exact.
pub fn asymptotic_ratio(n: usize, table: &CountTable) -> Result<f64> {
    table.check_range(n)?;
    let l = n * (n - 1) / 2;
    let fact: BigUint = (1..=n).map(BigUint::from).product();
    let scaled = ratio_to_f64(table.total(n), &(fact << l));
    Ok(scaled * ASYMPTOTIC_M * ASYMPTOTIC_Q.powi(n as i32))
}

/// `num / den` as a float without overflowing either operand.
pub fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    assert!(!den.is_zero(), "division by zero");
    if num.is_zero() {
        return 0.0;
    }
    // Scale so the integer quotient carries about 64 significant bits.
    let shift = 64 + den.bits() as i64 - num.bits() as i64;
    let q = if shift >= 0 {
        (num << shift as usize) / den
    } else {
        num / (den << (-shift) as usize)
    };
    q.to_f64().expect("finite") * 2f64.powi(-(shift as i32))
}

/// DAG weights proportional to `p^l (1-p)^{L-l}` for `l` arcs, `p = num/den`.
///
/// Stored scaled by `den^L` so every entry is an integer: a DAG with `l`
/// arcs contributes `num^l (den - num)^{L-l}`. At `p = 1/2` the scaled
/// table coincides with the unrestricted [`CountTable`].
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedTable {
    p: Ratio<u64>,
    tri: Triangle,
}

impl WeightedTable {
    pub fn p(&self) -> Ratio<u64> {
        self.p
    }

    pub fn n_max(&self) -> usize {
        self.tri.n_max()
    }

    /// `den^L * a_hat(n, k)`.
    pub fn scaled(&self, n: usize, k: usize) -> &BigUint {
        &self.tri.a[n][k]
    }

    /// Exact weighted count of `n`-node DAGs with `k` outpoints.
    pub fn a_hat(&self, n: usize, k: usize) -> BigRational {
        BigRational::new(BigInt::from(self.tri.a[n][k].clone()), BigInt::from(self.scale(n)))
    }

    pub fn total_hat(&self, n: usize) -> BigRational {
        BigRational::new(BigInt::from(self.tri.total[n].clone()), BigInt::from(self.scale(n)))
    }

    fn scale(&self, n: usize) -> BigUint {
        num_traits::pow(BigUint::from(*self.p.denom()), n * (n.saturating_sub(1)) / 2)
    }

    fn q(&self) -> u64 {
        self.p.denom() - self.p.numer()
    }

    pub(crate) fn label_factor(p: Ratio<u64>, binom: &Binomials, n: usize, k: usize) -> BigUint {
        let q = p.denom() - p.numer();
        binom.get(n, k) * num_traits::pow(BigUint::from(q), k * (k - 1) / 2)
    }

    pub(crate) fn check_range(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(invalid("graphs need at least one node"));
        }
        if n > self.n_max() {
            return Err(Error::OutOfRange { n, n_max: self.n_max() });
        }
        Ok(())
    }

    pub(crate) fn from_parts(p: Ratio<u64>, tri: Triangle) -> Self {
        WeightedTable { p, tri }
    }

}

impl OutpointCounts for WeightedTable {
    fn n_max(&self) -> usize {
        WeightedTable::n_max(self)
    }
    fn count(&self, n: usize, k: usize) -> &BigUint {
        &self.tri.a[n][k]
    }
    fn layer_total(&self, n: usize, k: usize) -> &BigUint {
        &self.tri.b[n][k]
    }
    fn total(&self, n: usize) -> &BigUint {
        &self.tri.total[n]
    }
    /// `(den^k - q^k)^s den^{k(m-s)}`: every older outpoint hit at least once,
    /// older non-outpoints unconstrained.
    fn link_weight(&self, k: usize, m: usize, s: usize) -> BigUint {
        let den_k = num_traits::pow(BigUint::from(*self.p.denom()), k);
        let q_k = num_traits::pow(BigUint::from(self.q()), k);
        num_traits::pow(&den_k - q_k, s) * num_traits::pow(den_k, m - s)
    }
}

/// Parses and validates an edge probability `p` in `[0, 1]`.
pub fn edge_probability(num: u64, den: u64) -> Result<Ratio<u64>> {
    if den == 0 {
        return Err(invalid("edge probability denominator is zero"));
    }
    if num > den {
        return Err(invalid(format!("edge probability {num}/{den} exceeds 1")));
    }
    let g = num.gcd(&den);
    Ok(Ratio::new_raw(num / g, den / g))
}

pub fn build_weighted_table(n_max: usize, p: Ratio<u64>) -> Result<WeightedTable> {
    if n_max < 1 {
        return Err(invalid("n_max must be at least 1"));
    }
    let p = edge_probability(*p.numer(), *p.denom())?;
    let den = BigUint::from(*p.denom());
    let q = BigUint::from(p.denom() - p.numer());
    let binom = Binomials::new(n_max);
    let mut tri = Triangle::with_capacity(n_max);
    for n in 1..=n_max {
        let mut row_a = Vec::with_capacity(n);
        let mut row_b = Vec::with_capacity(n);
        for k in 1..=n {
            let m = n - k;
            let b = if m == 0 {
                BigUint::one()
            } else {
                let den_k = num_traits::pow(den.clone(), k);
                let f = &den_k - num_traits::pow(q.clone(), k);
                horner(&f, &den_k, m, &tri.a[m])
            };
            row_a.push(WeightedTable::label_factor(p, &binom, n, k) * &b);
            row_b.push(b);
        }
        tri.push_row(row_a, row_b);
    }
    Ok(WeightedTable { p, tri })
}
