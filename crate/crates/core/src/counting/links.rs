use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::Binomials;
use crate::error::{invalid, Result};

/// Memoized `C(k, m, s, K)`: the number of ways `k` new outpoints, each
/// sending at most `K` arcs, can link into `m` older nodes so that each of
/// the `s` older outpoints receives at least one arc.
///
/// Inclusion-exclusion over the set of older outpoints left unlinked:
/// `C(k,m,s) = N(m)^k - sum_{i=1..s} binom(s,i) C(k, m-i, s-i)`, where
/// `N(m) = sum_{i=0..min(m,K)} binom(m,i)` counts the rows one new node may
/// send.
#[derive(Clone, Debug)]
pub struct LinkCounter {
    max_children: usize,
    binom: Binomials,
    cache: HashMap<(usize, usize, usize), BigUint>,
}

impl LinkCounter {
    pub fn new(max_children: usize) -> Result<Self> {
        if max_children < 1 {
            return Err(invalid("max children K must be at least 1"));
        }
        Ok(LinkCounter {
            max_children,
            binom: Binomials::new(0),
            cache: HashMap::new(),
        })
    }

    pub fn max_children(&self) -> usize {
        self.max_children
    }

    /// Subsets of `m` older nodes one new node may link to.
    pub fn row_options(&mut self, m: usize) -> BigUint {
        self.binom.ensure(m);
        self.binom.partial_row_sum(m, 0, m.min(self.max_children))
    }

    pub fn count(&mut self, k: usize, m: usize, s: usize) -> Result<BigUint> {
        if k < 1 {
            return Err(invalid("C(k,m,s,K) needs k >= 1"));
        }
        if s > m {
            return Err(invalid(format!("C(k,m,s,K) needs s <= m, got s = {s}, m = {m}")));
        }
        Ok(self.count_inner(k, m, s))
    }

    fn count_inner(&mut self, k: usize, m: usize, s: usize) -> BigUint {
        if m == 0 {
            return BigUint::one();
        }
        if let Some(c) = self.cache.get(&(k, m, s)) {
            return c.clone();
        }
        let mut value = num_traits::pow(self.row_options(m), k);
        self.binom.ensure(s);
        for i in 1..=s {
            let sub = self.count_inner(k, m - i, s - i);
            if !sub.is_zero() {
                value -= self.binom.get(s, i) * sub;
            }
        }
        self.cache.insert((k, m, s), value.clone());
        value
    }

    /// Read-only lookup for a value already computed.
    pub fn get(&self, k: usize, m: usize, s: usize) -> Option<BigUint> {
        if m == 0 {
            return Some(BigUint::one());
        }
        self.cache.get(&(k, m, s)).cloned()
    }
}

/// One-shot `C(k, m, s, K)` with a throwaway cache.
pub fn c_link_count(k: usize, m: usize, s: usize, max_children: usize) -> Result<BigUint> {
    LinkCounter::new(max_children)?.count(k, m, s)
}
