use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dagforge::{ChildrenStrategy, OutputFormat, Ratio, DEFAULT_N_SWITCH};

#[derive(Parser, Debug)]
#[command(name = "dagforge", version, about = "Uniform random labelled DAGs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate random DAGs.
    Gen(GenArgs),
    /// Precompute a count table and write it to a cache file.
    Tables(TablesArgs),
    /// Statistical and structural checks on a stream of DAGs.
    Stats {
        #[command(subcommand)]
        test: StatsCommand,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Exact,
    Hybrid,
    Mcmc,
    Triangular,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Edgelist,
    Matrix,
    Dot,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Edgelist => OutputFormat::Edgelist,
            Format::Matrix => OutputFormat::Matrix,
            Format::Dot => OutputFormat::Dot,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Strategy {
    Auto,
    A,
    B,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Restrictions {
    /// Only weakly connected DAGs (rejection).
    #[arg(long)]
    pub connected: bool,

    /// At most K arcs from each new layer into every older node.
    #[arg(long, value_name = "K")]
    pub max_in: Option<usize>,

    /// With --max-in: at most Kn arcs from each new node into older
    /// non-outpoints; older outpoints keep the --max-in bound.
    #[arg(long = "max-out-nonoutpoints", value_name = "Kn", requires = "max_in")]
    pub max_out: Option<usize>,

    /// At most K children per node.
    #[arg(long, value_name = "K")]
    pub max_children: Option<usize>,

    /// At most K parents per node.
    #[arg(long, value_name = "K")]
    pub max_parents: Option<usize>,

    /// Arc probability NUM/DEN: a weighted law for the exact sampler, the
    /// fill rate for the triangular baseline.
    #[arg(long, value_name = "NUM/DEN", value_parser = parse_probability)]
    pub edge_prob: Option<Ratio<u64>>,
}

impl Restrictions {
    /// Flags that pick a restricted family, ignoring `--connected`.
    pub fn family_flags(&self) -> Vec<&'static str> {
        let mut set = Vec::new();
        if self.max_in.is_some() {
            set.push("--max-in");
        }
        if self.max_children.is_some() {
            set.push("--max-children");
        }
        if self.max_parents.is_some() {
            set.push("--max-parents");
        }
        if self.edge_prob.is_some() {
            set.push("--edge-prob");
        }
        set
    }
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub nodes: u64,

    #[arg(long, default_value_t = 1)]
    pub count: u64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Defaults to exact up to 100 nodes and hybrid above.
    #[arg(long, value_enum)]
    pub method: Option<Method>,

    #[arg(long, value_enum, default_value_t = Format::Edgelist)]
    pub format: Format,

    #[command(flatten)]
    pub restrictions: Restrictions,

    /// Layer construction for --max-children and --max-parents.
    #[arg(long, value_enum, default_value_t = Strategy::Auto)]
    pub children_strategy: Strategy,

    /// Acceptance-rate threshold below which `auto` switches to strategy B.
    #[arg(long, default_value_t = 0.1)]
    pub children_threshold: f64,

    /// MCMC steps before the first sample.
    #[arg(long, default_value_t = 10_000)]
    pub burn_in: u64,

    /// MCMC steps between samples.
    #[arg(long, default_value_t = 100)]
    pub thin: u64,

    /// Never propose the pairs (i, i) except one.
    #[arg(long)]
    pub prune_self_pairs: bool,

    /// Remaining size below which the hybrid sampler switches to exact draws.
    #[arg(long, default_value_t = DEFAULT_N_SWITCH)]
    pub n_switch: usize,

    /// Count table cache to load instead of building one. Defaults to
    /// $DAGFORGE_TABLES when that matches the request.
    #[arg(long, value_name = "PATH")]
    pub tables_file: Option<PathBuf>,

    /// Worker threads; 0 uses every core. Output does not depend on it.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

impl GenArgs {
    pub fn strategy(&self) -> ChildrenStrategy {
        match self.children_strategy {
            Strategy::Auto => ChildrenStrategy::Auto {
                threshold: self.children_threshold,
            },
            Strategy::A => ChildrenStrategy::A,
            Strategy::B => ChildrenStrategy::B,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum TableVariant {
    Unrestricted,
    MaxIn,
    MaxInOut,
    MaxChildren,
    Weighted,
}

#[derive(Args, Debug)]
pub struct TablesArgs {
    #[arg(long, default_value_t = dagforge::DEFAULT_N_MAX)]
    pub max_n: usize,

    /// Output path; `-` writes to stdout.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,

    #[arg(long, value_enum, default_value_t = TableVariant::Unrestricted)]
    pub variant: TableVariant,

    #[arg(long = "K", value_name = "K")]
    pub k: Option<usize>,

    #[arg(long = "K-n", value_name = "Kn")]
    pub k_n: Option<usize>,

    #[arg(long, value_name = "NUM/DEN", value_parser = parse_probability)]
    pub edge_prob: Option<Ratio<u64>>,
}

#[derive(Args, Debug)]
pub struct Common {
    /// Input files; none or `-` reads stdin.
    pub inputs: Vec<PathBuf>,

    /// Significance level.
    #[arg(long, default_value_t = 0.001)]
    pub alpha: f64,

    /// Emit the report as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Subcommand, Debug)]
pub enum StatsCommand {
    /// Chi-square fit against the uniform (or weighted) law over all DAGs
    /// of at most five nodes, optionally restricted.
    Uniformity {
        /// Defaults to the size of the first graph.
        #[arg(long)]
        nodes: Option<usize>,
        #[command(flatten)]
        restrictions: Restrictions,
        #[command(flatten)]
        common: Common,
    },
    /// Every graph must be acyclic.
    Acyclic {
        #[command(flatten)]
        common: Common,
    },
    /// Outpoint counts against the exact law, or the limit law past the
    /// table range.
    Outpoints {
        #[arg(long)]
        nodes: Option<usize>,
        /// Largest tolerated |z| per outpoint count.
        #[arg(long, default_value_t = 3.5)]
        z_max: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Two-sample homogeneity test between two streams.
    Compare {
        first: PathBuf,
        second: PathBuf,
        #[arg(long, default_value_t = 0.001)]
        alpha: f64,
        #[arg(long)]
        json: bool,
    },
}

fn parse_probability(s: &str) -> Result<Ratio<u64>, String> {
    let (num, den) = s.split_once('/').unwrap_or((s, "1"));
    let num: u64 = num.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
    let den: u64 = den.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
    dagforge::edge_probability(num, den).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn probabilities() {
        assert_eq!(parse_probability("2/4"), Ok(Ratio::new(1, 2)));
        assert_eq!(parse_probability("1"), Ok(Ratio::new(1, 1)));
        assert_eq!(parse_probability("0/3"), Ok(Ratio::new(0, 1)));
        assert!(parse_probability("3/2").is_err());
        assert!(parse_probability("1/0").is_err());
        assert!(parse_probability("a/2").is_err());
    }

    #[test]
    fn max_out_needs_max_in() {
        assert!(Cli::try_parse_from(["dagforge", "gen", "--nodes", "3", "--max-out-nonoutpoints", "1"]).is_err());
        assert!(Cli::try_parse_from(["dagforge", "gen", "--nodes", "3", "--max-in", "1", "--max-out-nonoutpoints", "1"]).is_ok());
        assert!(Cli::try_parse_from(["dagforge", "gen", "--nodes", "0"]).is_err());
    }
}
