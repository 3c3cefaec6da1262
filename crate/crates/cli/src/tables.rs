//! Building, loading and writing count tables.

use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use dagforge::{
    build_children_limited_table, build_count_table, build_restricted_table, build_weighted_table, load_table,
    CountTable, Error, LoadedTable, Ratio, Variant, WeightedTable, DEFAULT_N_MAX,
};

use crate::args::{TableVariant, TablesArgs};
use crate::error::{CliError, CliResult};

pub const TABLES_ENV: &str = "DAGFORGE_TABLES";

/// Where to look for a cache: the flag, else the environment. The flag is
/// binding; an environment cache that does not fit is skipped.
fn cache_path(flag: Option<&Path>) -> Option<(PathBuf, bool)> {
    if let Some(p) = flag {
        return Some((p.to_path_buf(), true));
    }
    std::env::var_os(TABLES_ENV)
        .filter(|v| !v.is_empty())
        .map(|v| (PathBuf::from(v), false))
}

pub fn load(path: &Path) -> CliResult<LoadedTable> {
    let file = File::open(path).map_err(|e| CliError::cache(path, Error::Integrity(e.to_string())))?;
    load_table(BufReader::new(file)).map_err(|e| CliError::cache(path, e))
}

fn describe(t: &LoadedTable) -> String {
    match t {
        LoadedTable::Counts(c) => c.variant().to_string(),
        LoadedTable::Weighted(w) => format!("weighted(p={})", w.p()),
    }
}

fn too_small(path: &Path, have: usize, need: usize) -> CliError {
    CliError::usage(format!(
        "{} covers n <= {have} but n = {need} was requested; rebuild it with `tables --max-n {need}` or use --method hybrid",
        path.display()
    ))
}

fn check_range(need: usize) -> CliResult<()> {
    if need > DEFAULT_N_MAX {
        return Err(CliError::usage(format!(
            "exact sampling at n = {need} needs tables beyond the built-in limit of {DEFAULT_N_MAX}; \
             use --method hybrid or pass --tables-file with a larger table"
        )));
    }
    Ok(())
}

pub fn build(variant: Variant, n_max: usize) -> dagforge::Result<CountTable> {
    match variant {
        Variant::Unrestricted => build_count_table(n_max),
        Variant::MaxIn { max_in } => build_restricted_table(n_max, max_in, None),
        Variant::MaxInOut { max_in, max_out } => build_restricted_table(n_max, max_in, Some(max_out)),
        Variant::MaxChildren { max_children } => build_children_limited_table(n_max, max_children),
    }
}

/// A count table of `variant` covering `need` nodes.
pub fn count_table(variant: Variant, need: usize, flag: Option<&Path>) -> CliResult<CountTable> {
    if let Some((path, binding)) = cache_path(flag) {
        match load(&path)? {
            LoadedTable::Counts(t) if t.variant() == variant => {
                if t.n_max() >= need {
                    return Ok(t);
                }
                if binding {
                    return Err(too_small(&path, t.n_max(), need));
                }
            }
            other if binding => {
                return Err(CliError::cache(
                    &path,
                    Error::VariantMismatch {
                        expected: variant.to_string(),
                        found: describe(&other),
                    },
                ))
            }
            _ => {}
        }
    }
    check_range(need)?;
    Ok(build(variant, need)?)
}

pub fn weighted_table(p: Ratio<u64>, need: usize, flag: Option<&Path>) -> CliResult<WeightedTable> {
    if let Some((path, binding)) = cache_path(flag) {
        match load(&path)? {
            LoadedTable::Weighted(t) if t.p() == p => {
                if t.n_max() >= need {
                    return Ok(t);
                }
                if binding {
                    return Err(too_small(&path, t.n_max(), need));
                }
            }
            other if binding => {
                return Err(CliError::cache(
                    &path,
                    Error::VariantMismatch {
                        expected: format!("weighted(p={p})"),
                        found: describe(&other),
                    },
                ))
            }
            _ => {}
        }
    }
    check_range(need)?;
    Ok(build_weighted_table(need, p)?)
}

fn requested(args: &TablesArgs) -> CliResult<Option<Variant>> {
    let k = || {
        args.k
            .ok_or_else(|| CliError::usage("this --variant needs --K"))
    };
    let unused = |flag: &str, set: bool| {
        if set {
            Err(CliError::usage(format!("{flag} does not apply to this variant")))
        } else {
            Ok(())
        }
    };
    let v = match args.variant {
        TableVariant::Unrestricted => Some(Variant::Unrestricted),
        TableVariant::MaxIn => Some(Variant::MaxIn { max_in: k()? }),
        TableVariant::MaxInOut => Some(Variant::MaxInOut {
            max_in: k()?,
            max_out: args.k_n.ok_or_else(|| CliError::usage("--variant max-in-out needs --K-n"))?,
        }),
        TableVariant::MaxChildren => Some(Variant::MaxChildren { max_children: k()? }),
        TableVariant::Weighted => None,
    };
    unused("--K", args.k.is_some() && matches!(v, None | Some(Variant::Unrestricted)))?;
    unused("--K-n", args.k_n.is_some() && !matches!(v, Some(Variant::MaxInOut { .. })))?;
    unused("--edge-prob", args.edge_prob.is_some() && v.is_some())?;
    Ok(v)
}

/// Builds the table, reads the serialised form back through the verifying
/// loader, and only then writes it out.
pub fn run(args: &TablesArgs) -> CliResult<()> {
    if args.max_n < 1 {
        return Err(CliError::usage("--max-n must be at least 1"));
    }
    let mut text = Vec::new();
    let summary = match requested(args)? {
        Some(variant) => {
            let t = build(variant, args.max_n)?;
            t.write_cache(&mut text)?;
            match load_table(&text[..])? {
                LoadedTable::Counts(back) if back.total(args.max_n) == t.total(args.max_n) => {}
                _ => return Err(Error::Integrity("table did not survive a round trip".into()).into()),
            }
            let total = t.total(args.max_n).to_string();
            let total = if total.len() > 24 { format!("a {}-digit number", total.len()) } else { total };
            format!("{variant}, n_max = {}, total({}) is {total}", args.max_n, args.max_n)
        }
        None => {
            let p = args
                .edge_prob
                .ok_or_else(|| CliError::usage("--variant weighted needs --edge-prob"))?;
            let t = build_weighted_table(args.max_n, p)?;
            t.write_cache(&mut text)?;
            match load_table(&text[..])? {
                LoadedTable::Weighted(back) if back.scaled(args.max_n, 1) == t.scaled(args.max_n, 1) => {}
                _ => return Err(Error::Integrity("table did not survive a round trip".into()).into()),
            }
            format!("weighted(p={p}), n_max = {}", args.max_n)
        }
    };
    write_atomically(&args.out, &text)?;
    eprintln!("wrote {} ({summary})", args.out.display());
    Ok(())
}

fn write_atomically(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if path.as_os_str() == "-" {
        let mut out = io::stdout().lock();
        out.write_all(bytes)?;
        return Ok(out.flush()?);
    }
    let fail = |source| CliError::Write {
        path: path.to_path_buf(),
        source,
    };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(fail)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        fail(e)
    })
}
