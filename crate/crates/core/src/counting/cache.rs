//! Versioned text cache for count tables.
//!
//! ```text
//! dagforge-tables v1 variant=<tag> n_max=<n> [K=<k>] [K_n=<k>] [p=<num>/<den>]
//! <n> <k> <a> <b>
//! ...
//! ```
//!
//! One data line per `(n, k)` in row-major order, decimal integers. Loading
//! re-checks `a = f(n, k) * b`, the base rows and, for unrestricted tables,
//! the row sums against inclusion-exclusion; any mismatch is a hard error.

use std::io::{BufRead, Write};

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, Zero};

use super::{
    edge_probability, inclusion_exclusion_totals, Binomials, CountTable, Triangle, Variant, WeightedTable,
};
use crate::error::{Error, Result};

pub const CACHE_MAGIC: &str = "dagforge-tables";
const VERSION: &str = "v1";

/// A table read back from a cache file.
#[derive(Clone, Debug)]
pub enum LoadedTable {
    Counts(CountTable),
    Weighted(WeightedTable),
}

impl CountTable {
    pub fn header(&self) -> String {
        let params = match self.variant {
            Variant::Unrestricted => String::new(),
            Variant::MaxIn { max_in } => format!(" K={max_in}"),
            Variant::MaxInOut { max_in, max_out } => format!(" K={max_in} K_n={max_out}"),
            Variant::MaxChildren { max_children } => format!(" K={max_children}"),
        };
        format!("{CACHE_MAGIC} {VERSION} variant={} n_max={}{params}", self.variant.tag(), self.n_max())
    }

    pub fn write_cache<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.header())?;
        write_rows(&mut out, &self.tri)
    }
}

impl WeightedTable {
    pub fn header(&self) -> String {
        format!(
            "{CACHE_MAGIC} {VERSION} variant=weighted n_max={} p={}/{}",
            self.n_max(),
            self.p.numer(),
            self.p.denom()
        )
    }

    pub fn write_cache<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.header())?;
        write_rows(&mut out, &self.tri)
    }
}

fn write_rows<W: Write>(out: &mut W, tri: &Triangle) -> std::io::Result<()> {
    for n in 1..tri.a.len() {
        for k in 1..=n {
            writeln!(out, "{n} {k} {} {}", tri.a[n][k], tri.b[n][k])?;
        }
    }
    out.flush()
}

fn integrity(msg: impl Into<String>) -> Error {
    Error::Integrity(msg.into())
}

struct Header {
    tag: String,
    n_max: usize,
    k: Option<usize>,
    k_n: Option<usize>,
    p: Option<Ratio<u64>>,
}

fn parse_header(line: &str) -> Result<Header> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some(CACHE_MAGIC) {
        return Err(integrity("not a table cache (bad magic)"));
    }
    match parts.next() {
        Some(VERSION) => {}
        Some(v) => return Err(integrity(format!("unsupported cache version {v}"))),
        None => return Err(integrity("missing cache version")),
    }
    let mut h = Header {
        tag: String::new(),
        n_max: 0,
        k: None,
        k_n: None,
        p: None,
    };
    for part in parts {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| integrity(format!("malformed header field {part:?}")))?;
        let num = |v: &str| v.parse::<usize>().map_err(|_| integrity(format!("bad number in {part:?}")));
        match key {
            "variant" => h.tag = value.to_string(),
            "n_max" => h.n_max = num(value)?,
            "K" => h.k = Some(num(value)?),
            "K_n" => h.k_n = Some(num(value)?),
            "p" => {
                let (a, b) = value
                    .split_once('/')
                    .ok_or_else(|| integrity(format!("bad probability {value:?}")))?;
                let a = a.parse().map_err(|_| integrity(format!("bad probability {value:?}")))?;
                let b = b.parse().map_err(|_| integrity(format!("bad probability {value:?}")))?;
                h.p = Some(edge_probability(a, b).map_err(|e| integrity(e.to_string()))?);
            }
            _ => return Err(integrity(format!("unknown header field {key:?}"))),
        }
    }
    if h.n_max < 1 {
        return Err(integrity("n_max missing or zero"));
    }
    Ok(h)
}

fn parse_rows<R: BufRead>(lines: &mut std::io::Lines<R>, n_max: usize) -> Result<Triangle> {
    let mut tri = Triangle::with_capacity(n_max);
    let mut line_no = 1;
    for n in 1..=n_max {
        let mut row_a = Vec::with_capacity(n);
        let mut row_b = Vec::with_capacity(n);
        for k in 1..=n {
            line_no += 1;
            let line = lines
                .next()
                .ok_or_else(|| integrity(format!("truncated at n = {n}, k = {k}")))?
                .map_err(|e| integrity(e.to_string()))?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(integrity(format!("line {line_no}: expected 4 fields")));
            }
            if fields[0] != n.to_string() || fields[1] != k.to_string() {
                return Err(integrity(format!("line {line_no}: expected entry ({n}, {k})")));
            }
            let parse = |s: &str| {
                BigUint::parse_bytes(s.as_bytes(), 10)
                    .ok_or_else(|| integrity(format!("line {line_no}: bad integer")))
            };
            row_a.push(parse(fields[2])?);
            row_b.push(parse(fields[3])?);
        }
        tri.push_row(row_a, row_b);
    }
    for rest in lines {
        let rest = rest.map_err(|e| integrity(e.to_string()))?;
        if !rest.trim().is_empty() {
            return Err(integrity("trailing data after last row"));
        }
    }
    Ok(tri)
}

/// `a = factor(n, k) * b` everywhere and `b(n, n) = 1`.
fn verify_factors(tri: &Triangle, factor: impl Fn(usize, usize) -> BigUint) -> Result<()> {
    for n in 1..tri.a.len() {
        if !tri.b[n][n].is_one() {
            return Err(integrity(format!("b({n}, {n}) must be 1")));
        }
        for k in 1..=n {
            let f = factor(n, k);
            if f * &tri.b[n][k] != tri.a[n][k] {
                return Err(integrity(format!("a({n}, {k}) is not its labelling factor times b({n}, {k})")));
            }
        }
    }
    Ok(())
}

/// Reads a cache file and verifies it before handing it out.
pub fn load_table<R: BufRead>(reader: R) -> Result<LoadedTable> {
    let mut lines = reader.lines();
    let first = lines
        .next()
        .ok_or_else(|| integrity("empty cache file"))?
        .map_err(|e| integrity(e.to_string()))?;
    let h = parse_header(&first)?;
    let tri = parse_rows(&mut lines, h.n_max)?;
    let binom = Binomials::new(h.n_max);
    let need_k = || h.k.filter(|k| *k >= 1).ok_or_else(|| integrity("variant needs K >= 1"));
    let variant = match h.tag.as_str() {
        "unrestricted" => Some(Variant::Unrestricted),
        "max-in" => Some(Variant::MaxIn { max_in: need_k()? }),
        "max-in-out" => Some(Variant::MaxInOut {
            max_in: need_k()?,
            max_out: h.k_n.ok_or_else(|| integrity("max-in-out needs K_n"))?,
        }),
        "max-children" => Some(Variant::MaxChildren { max_children: need_k()? }),
        "weighted" => None,
        other => return Err(integrity(format!("unknown variant {other:?}"))),
    };
    match variant {
        Some(variant) => {
            verify_factors(&tri, |n, k| binom.get(n, k))?;
            if variant == Variant::Unrestricted {
                let ie = inclusion_exclusion_totals(h.n_max);
                for (n, (total, expected)) in tri.total.iter().zip(&ie).enumerate().skip(1) {
                    if total != expected {
                        return Err(integrity(format!("row sum at n = {n} disagrees with inclusion-exclusion")));
                    }
                }
            }
            Ok(LoadedTable::Counts(CountTable::from_parts(variant, tri)?))
        }
        None => {
            let p = h.p.ok_or_else(|| integrity("weighted table needs p"))?;
            verify_factors(&tri, |n, k| WeightedTable::label_factor(p, &binom, n, k))?;
            if tri.total.iter().skip(1).any(|t| t.is_zero()) {
                return Err(integrity("weighted totals must be positive"));
            }
            Ok(LoadedTable::Weighted(WeightedTable::from_parts(p, tri)))
        }
    }
}
