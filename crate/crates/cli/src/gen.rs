//! The `gen` subcommand.

use std::io::{self, BufWriter, Write};

use dagforge::{
    build_limit_tables, is_weakly_connected, sample_children_limited_dag, sample_large_dag, sample_max_in_dag,
    sample_triangular, sample_uniform_dag, sample_weighted_dag, write_dag, ChildrenStrategy, CountTable, Dag,
    LimitTables, McmcChain, McmcConfig, OutputFormat, RandomSource, Ratio, Variant, WeightedTable,
};
use rayon::prelude::*;

use crate::args::{GenArgs, Method};
use crate::error::{CliError, CliResult};
use crate::tables;

/// Above this size the default method is hybrid.
pub const EXACT_DEFAULT_LIMIT: usize = 100;

/// Cap on connectivity rejections for one sample.
const MAX_CONNECTED_ATTEMPTS: u64 = 1_000_000;

/// Bytes of adjacency per parallel batch, roughly.
const BATCH_BUDGET: usize = 1 << 24;

enum Sampler {
    Exact(CountTable),
    Hybrid(Box<LimitTables>, CountTable),
    MaxIn(CountTable),
    Children {
        table: CountTable,
        strategy: ChildrenStrategy,
        reverse: bool,
    },
    Weighted(Ratio<u64>, WeightedTable),
    Triangular(Ratio<u64>),
}

impl Sampler {
    fn draw(&self, n: usize, rng: &mut RandomSource) -> dagforge::Result<Dag> {
        match self {
            Sampler::Exact(t) => sample_uniform_dag(n, t, rng),
            Sampler::Hybrid(lt, t) => sample_large_dag(n, lt, t, rng),
            Sampler::MaxIn(t) => sample_max_in_dag(n, t, rng),
            Sampler::Children {
                table,
                strategy,
                reverse,
            } => {
                let d = sample_children_limited_dag(n, table, *strategy, rng)?;
                Ok(if *reverse { d.reversed() } else { d })
            }
            Sampler::Weighted(p, t) => sample_weighted_dag(n, *p, t, rng),
            Sampler::Triangular(p) => sample_triangular(n, *p, rng),
        }
    }
}

struct Generator {
    n: usize,
    sampler: Sampler,
    connected: bool,
}

impl Generator {
    /// Sample `index` of the run, drawn from its own stream.
    fn sample(&self, seed: u64, index: u64) -> dagforge::Result<Dag> {
        let mut rng = RandomSource::for_sample(seed, index);
        for _ in 0..MAX_CONNECTED_ATTEMPTS {
            let d = self.sampler.draw(self.n, &mut rng)?;
            if !self.connected || is_weakly_connected(&d) {
                return Ok(d);
            }
        }
        Err(dagforge::Error::InvalidArgument(format!(
            "no connected graph after {MAX_CONNECTED_ATTEMPTS} attempts; the restricted family is too sparse"
        )))
    }
}

fn resolve_method(args: &GenArgs, n: usize) -> CliResult<Method> {
    let r = &args.restrictions;
    let family = r.family_flags();
    let method = args.method.unwrap_or(if !family.is_empty() || n <= EXACT_DEFAULT_LIMIT {
        Method::Exact
    } else {
        Method::Hybrid
    });
    let family_without_p: Vec<_> = family.iter().filter(|f| **f != "--edge-prob").collect();
    match method {
        Method::Exact if family.len() > 1 => Err(CliError::usage(format!(
            "{} cannot be combined",
            family.join(" and ")
        ))),
        Method::Hybrid if !family.is_empty() => Err(CliError::usage(format!(
            "the hybrid sampler is unrestricted; drop {} or use --method exact",
            family.join(", ")
        ))),
        Method::Mcmc if r.connected || !family.is_empty() => {
            Err(CliError::usage("the mcmc baseline takes no restriction flags"))
        }
        Method::Triangular if r.connected || !family_without_p.is_empty() => Err(CliError::usage(
            "the triangular baseline takes only --edge-prob",
        )),
        m => Ok(m),
    }
}

fn build_generator(args: &GenArgs, n: usize, method: Method) -> CliResult<Generator> {
    let r = &args.restrictions;
    let file = args.tables_file.as_deref();
    let sampler = match method {
        Method::Triangular => Sampler::Triangular(r.edge_prob.unwrap_or(Ratio::new(1, 2))),
        Method::Hybrid => {
            if args.n_switch < 8 {
                return Err(CliError::usage("--n-switch must be at least 8"));
            }
            let table = tables::count_table(Variant::Unrestricted, args.n_switch, file)?;
            Sampler::Hybrid(Box::new(build_limit_tables(args.n_switch)?), table)
        }
        Method::Exact => {
            if let Some(k) = r.max_in {
                let variant = match r.max_out {
                    Some(kn) => Variant::MaxInOut { max_in: k, max_out: kn },
                    None => Variant::MaxIn { max_in: k },
                };
                Sampler::MaxIn(tables::count_table(variant, n, file)?)
            } else if let Some(k) = r.max_children.or(r.max_parents) {
                Sampler::Children {
                    table: tables::count_table(Variant::MaxChildren { max_children: k }, n, file)?,
                    strategy: args.strategy(),
                    reverse: r.max_parents.is_some(),
                }
            } else if let Some(p) = r.edge_prob {
                Sampler::Weighted(p, tables::weighted_table(p, n, file)?)
            } else {
                Sampler::Exact(tables::count_table(Variant::Unrestricted, n, file)?)
            }
        }
        Method::Mcmc => unreachable!("mcmc runs as one chain"),
    };
    Ok(Generator {
        n,
        sampler,
        connected: r.connected,
    })
}

pub fn run(args: &GenArgs) -> CliResult<()> {
    let n = usize::try_from(args.nodes).map_err(|_| CliError::usage("--nodes is too large"))?;
    let method = resolve_method(args, n)?;
    let format = OutputFormat::from(args.format);
    let mut out = BufWriter::new(io::stdout().lock());
    if method == Method::Mcmc {
        run_chain(args, n, format, &mut out)?;
    } else {
        let generator = build_generator(args, n, method)?;
        run_parallel(&generator, args, format, &mut out)?;
    }
    out.flush()?;
    Ok(())
}

/// Successive thinned states of one chain started from the empty graph on
/// stream 0 of the seed.
fn run_chain<W: Write>(args: &GenArgs, n: usize, format: OutputFormat, out: &mut W) -> CliResult<()> {
    let cfg = McmcConfig::new(args.burn_in, args.thin, args.prune_self_pairs).map_err(|e| CliError::usage(e.to_string()))?;
    let mut rng = RandomSource::for_sample(args.seed, 0);
    let mut chain = McmcChain::new(n, cfg, &mut rng);
    for _ in 0..args.count {
        write_dag(out, &chain.next_sample(&mut rng), format)?;
    }
    Ok(())
}

fn run_parallel<W: Write>(g: &Generator, args: &GenArgs, format: OutputFormat, out: &mut W) -> CliResult<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| CliError::usage(format!("cannot start {} worker threads: {e}", args.jobs)))?;
    let batch = (BATCH_BUDGET / (g.n * g.n / 8 + 1)).clamp(pool.current_num_threads(), 4096) as u64;
    let mut start = 0;
    while start < args.count {
        let end = args.count.min(start + batch);
        let records: Vec<dagforge::Result<Vec<u8>>> = pool.install(|| {
            (start..end)
                .into_par_iter()
                .map(|i| {
                    let d = g.sample(args.seed, i)?;
                    let mut buf = Vec::new();
                    write_dag(&mut buf, &d, format).expect("writing to memory");
                    Ok(buf)
                })
                .collect()
        });
        for r in records {
            out.write_all(&r?)?;
        }
        start = end;
    }
    Ok(())
}
