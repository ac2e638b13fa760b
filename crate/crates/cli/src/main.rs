use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use setbwt::io::{self, InputFormat};
use setbwt::oracle::brute_force_bwt;
use setbwt::pipeline::{DEFAULT_BLOCK_SUFFIXES, DEFAULT_PIPELINE_DEPTH};
use setbwt::{build, Alphabet, BuildConfig, BuildReport, EncodePolicy, IndexState, Layout};

/// Largest input, in suffixes, that `verify` will hand to the brute-force oracle.
const ORACLE_LIMIT: usize = 100_000;

#[derive(Parser)]
#[command(
    name = "setbwt",
    version,
    about = "Incremental BWT / FM-index construction for read sets"
)]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a new index from read files.
    Build {
        #[command(flatten)]
        input: InputArgs,
        /// Index file to write.
        #[arg(short = 'o', long)]
        output: PathBuf,
        /// Also write the BWT as ASCII text.
        #[arg(long)]
        bwt_out: Option<PathBuf>,
        /// Symbols per page.
        #[arg(long, default_value_t = setbwt::paged_bwt::DEFAULT_PAGE_SIZE)]
        page_size: usize,
        /// Distance between in-page occurrence samples.
        #[arg(long, default_value_t = setbwt::paged_bwt::DEFAULT_SAMPLE_SPACING)]
        sample_spacing: usize,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Add reads to an existing index.
    Append {
        /// Existing index.
        #[arg(short = 'x', long)]
        index: PathBuf,
        #[command(flatten)]
        input: InputArgs,
        /// Index file to write (may equal the input index).
        #[arg(short = 'o', long)]
        output: PathBuf,
        #[arg(long)]
        bwt_out: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Count occurrences of a pattern.
    Count {
        #[arg(short = 'x', long)]
        index: PathBuf,
        #[arg(short = 'p', long)]
        pattern: String,
    },
    /// Print index statistics and audit its counters.
    Stats {
        #[arg(short = 'x', long)]
        index: PathBuf,
    },
    /// Build with the pipeline and with the brute-force oracle and compare.
    Verify {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 256)]
        page_size: usize,
        #[arg(long, default_value_t = 16)]
        sample_spacing: usize,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Report per-stage throughput.
    Bench {
        #[arg(short = 'i', long = "input", num_args = 1.., conflicts_with = "synthetic_bp")]
        inputs: Vec<PathBuf>,
        /// Generate uniform random reads totalling this many bases instead of
        /// reading files.
        #[arg(long)]
        synthetic_bp: Option<usize>,
        #[arg(long, default_value_t = 100)]
        read_length: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = FormatArg::Auto)]
        format: FormatArg,
        #[arg(long, value_enum, default_value_t = PolicyArg::MapN)]
        policy: PolicyArg,
        #[arg(long, default_value_t = setbwt::paged_bwt::DEFAULT_PAGE_SIZE)]
        page_size: usize,
        #[arg(long, default_value_t = setbwt::paged_bwt::DEFAULT_SAMPLE_SPACING)]
        sample_spacing: usize,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Input files (FASTA, FASTQ or one read per line).
    #[arg(short = 'i', long = "input", num_args = 1.., required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Auto)]
    format: FormatArg,
    /// How to treat characters outside ACGTN.
    #[arg(long, value_enum, default_value_t = PolicyArg::MapN)]
    policy: PolicyArg,
}

#[derive(Args)]
struct RunArgs {
    /// Target suffixes per block.
    #[arg(long, default_value_t = DEFAULT_BLOCK_SUFFIXES)]
    block_suffixes: usize,
    /// Worker threads (default: logical CPUs).
    #[arg(long)]
    threads: Option<usize>,
    /// Blocks in flight between pipeline stages.
    #[arg(long, default_value_t = DEFAULT_PIPELINE_DEPTH)]
    pipeline_depth: usize,
}

impl RunArgs {
    fn config(&self) -> BuildConfig {
        let defaults = BuildConfig::default();
        BuildConfig {
            block_suffixes: self.block_suffixes,
            workers: self.threads.unwrap_or(defaults.workers),
            pipeline_depth: self.pipeline_depth,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Auto,
    Fasta,
    Fastq,
    Lines,
}

impl From<FormatArg> for InputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Auto => InputFormat::Auto,
            FormatArg::Fasta => InputFormat::Fasta,
            FormatArg::Fastq => InputFormat::Fastq,
            FormatArg::Lines => InputFormat::Lines,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Strict,
    MapN,
}

impl From<PolicyArg> for EncodePolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Strict => EncodePolicy::Strict,
            PolicyArg::MapN => EncodePolicy::MapToN,
        }
    }
}

#[derive(Serialize)]
struct IndexSummary {
    n: u64,
    m: u64,
    pages: usize,
    blocks: usize,
}

impl IndexSummary {
    fn new(state: &IndexState, report: &BuildReport) -> Self {
        Self {
            n: state.n_ext(),
            m: state.m_ext(),
            pages: state.bwt().page_count(),
            blocks: report.blocks.len(),
        }
    }
}

#[derive(Serialize)]
struct Stats {
    n: u64,
    m: u64,
    sigma: usize,
    page_size: usize,
    sample_spacing: usize,
    pages: usize,
    fill_histogram: Vec<usize>,
    min_fill: usize,
    max_fill: usize,
    allocated_symbols: usize,
    symbol_counts: Vec<u64>,
    audit: String,
}

#[derive(Serialize)]
struct StageRate {
    stage: &'static str,
    mbp_per_s: f64,
}

#[derive(Serialize)]
struct Bench {
    reads: usize,
    bases: usize,
    blocks: usize,
    wall_seconds: f64,
    overall_mbp_per_s: f64,
    stages: Vec<StageRate>,
    sieve_passes_first_block: Vec<u64>,
}

fn emit<T: Serialize>(json: bool, value: &T, text: impl FnOnce(&T) -> String) -> Result<()> {
    if json {
        println!("{}", serde_json::to_string(value)?);
    } else {
        println!("{}", text(value));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let dna = Alphabet::dna();
    let json = cli.json;
    match cli.command {
        Command::Build {
            input,
            output,
            bwt_out,
            page_size,
            sample_spacing,
            run,
        } => {
            let layout = Layout {
                page_size,
                sample_spacing,
                ..Layout::default()
            };
            let reads = io::read_inputs(
                &input.inputs,
                input.format.into(),
                &dna,
                input.policy.into(),
            );
            let (state, report) = build(reads, layout, &run.config())?;
            finish_index(&state, &output, bwt_out.as_deref(), &dna)?;
            emit(json, &IndexSummary::new(&state, &report), |s| {
                format!(
                    "indexed {} strings, {} symbols in {} pages ({} blocks)",
                    s.m, s.n, s.pages, s.blocks
                )
            })?;
        }
        Command::Append {
            index,
            input,
            output,
            bwt_out,
            run,
        } => {
            let mut state =
                io::load_index(&index).with_context(|| format!("loading {}", index.display()))?;
            let reads = io::read_inputs(
                &input.inputs,
                input.format.into(),
                &dna,
                input.policy.into(),
            );
            let report = state.append(reads, &run.config())?;
            finish_index(&state, &output, bwt_out.as_deref(), &dna)?;
            emit(json, &IndexSummary::new(&state, &report), |s| {
                format!(
                    "index now holds {} strings, {} symbols in {} pages",
                    s.m, s.n, s.pages
                )
            })?;
        }
        Command::Count { index, pattern } => {
            let state =
                io::load_index(&index).with_context(|| format!("loading {}", index.display()))?;
            let encoded = dna
                .encode(pattern.as_bytes(), EncodePolicy::Strict)
                .context("pattern")?;
            let count = state.count(&encoded)?;
            #[derive(Serialize)]
            struct Count<'a> {
                pattern: &'a str,
                count: u64,
            }
            emit(
                json,
                &Count {
                    pattern: &pattern,
                    count,
                },
                |c| c.count.to_string(),
            )?;
        }
        Command::Stats { index } => {
            let state =
                io::load_index(&index).with_context(|| format!("loading {}", index.display()))?;
            let bwt = state.bwt();
            let fills = bwt.page_fills();
            let stats = Stats {
                n: bwt.len(),
                m: bwt.terminators(),
                sigma: bwt.sigma(),
                page_size: bwt.page_size(),
                sample_spacing: bwt.sample_spacing(),
                pages: bwt.page_count(),
                fill_histogram: bwt.fill_histogram(10),
                min_fill: fills.iter().copied().min().unwrap_or(0),
                max_fill: fills.iter().copied().max().unwrap_or(0),
                allocated_symbols: bwt.allocated_capacity(),
                symbol_counts: bwt.symbol_counts(),
                audit: match bwt.audit() {
                    Ok(()) => "ok".into(),
                    Err(e) => e.to_string(),
                },
            };
            emit(json, &stats, |s| {
                format!(
                    "n\t{}\nm\t{}\npages\t{}\npage size\t{}\nsample spacing\t{}\nfill min/max\t{}/{}\n\
                     fill histogram (10% bins)\t{:?}\nallocated symbols\t{}\nsymbol counts ($ACGTN)\t{:?}\naudit\t{}",
                    s.n, s.m, s.pages, s.page_size, s.sample_spacing, s.min_fill, s.max_fill,
                    s.fill_histogram, s.allocated_symbols, s.symbol_counts, s.audit
                )
            })?;
            if stats.audit != "ok" {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Verify {
            input,
            page_size,
            sample_spacing,
            run,
        } => {
            let reads: Vec<Vec<u8>> = io::read_inputs(
                &input.inputs,
                input.format.into(),
                &dna,
                input.policy.into(),
            )
            .collect::<setbwt::Result<_>>()?;
            let suffixes: usize = reads.iter().map(|r| r.len() + 1).sum();
            if suffixes > ORACLE_LIMIT {
                bail!("verify is limited to {ORACLE_LIMIT} suffixes, input has {suffixes}");
            }
            let layout = Layout {
                page_size,
                sample_spacing,
                ..Layout::default()
            };
            let (state, _) = build(reads.iter().cloned().map(Ok), layout, &run.config())?;
            let expected = brute_force_bwt(&reads);
            let got = state.extract_all();
            let audit = state.audit();
            let pass = got == expected && audit.is_ok();
            #[derive(Serialize)]
            struct Verify {
                result: &'static str,
                strings: usize,
                suffixes: usize,
                first_mismatch: Option<usize>,
            }
            let verdict = Verify {
                result: if pass { "PASS" } else { "FAIL" },
                strings: reads.len(),
                suffixes,
                first_mismatch: got.iter().zip(&expected).position(|(a, b)| a != b),
            };
            emit(json, &verdict, |v| {
                format!(
                    "{} ({} strings, {} suffixes)",
                    v.result, v.strings, v.suffixes
                )
            })?;
            if !pass {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Bench {
            inputs,
            synthetic_bp,
            read_length,
            seed,
            format,
            policy,
            page_size,
            sample_spacing,
            run,
        } => {
            let reads: Vec<Vec<u8>> = match synthetic_bp {
                Some(bp) => synthetic_reads(bp, read_length, seed),
                None if inputs.is_empty() => bail!("bench needs --input files or --synthetic-bp"),
                None => io::read_inputs(&inputs, format.into(), &dna, policy.into())
                    .collect::<setbwt::Result<_>>()?,
            };
            let layout = Layout {
                page_size,
                sample_spacing,
                ..Layout::default()
            };
            let started = Instant::now();
            let (_, report) = build(reads.iter().cloned().map(Ok), layout, &run.config())?;
            let wall = started.elapsed().as_secs_f64();
            let bases = report.chars();
            let bench = Bench {
                reads: reads.len(),
                bases,
                blocks: report.blocks.len(),
                wall_seconds: wall,
                overall_mbp_per_s: bases as f64 / 1e6 / wall,
                stages: report
                    .stage_throughputs()
                    .into_iter()
                    .map(|(stage, mbp_per_s)| StageRate { stage, mbp_per_s })
                    .collect(),
                sieve_passes_first_block: report
                    .blocks
                    .first()
                    .map(|b| b.sort.active_per_pass.clone())
                    .unwrap_or_default(),
            };
            emit(json, &bench, |b| {
                let mut out = format!(
                    "{} reads, {} bases, {} blocks in {:.2} s ({:.1} Mbp/s overall)\n",
                    b.reads, b.bases, b.blocks, b.wall_seconds, b.overall_mbp_per_s
                );
                for s in &b.stages {
                    out.push_str(&format!("{:<16}{:>10.1} Mbp/s\n", s.stage, s.mbp_per_s));
                }
                out.push_str(&format!(
                    "active suffixes per sort pass: {:?}",
                    b.sieve_passes_first_block
                ));
                out
            })?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn finish_index(
    state: &IndexState,
    output: &std::path::Path,
    bwt_out: Option<&std::path::Path>,
    alphabet: &Alphabet,
) -> Result<()> {
    io::save_index(state, output).with_context(|| format!("writing {}", output.display()))?;
    if let Some(path) = bwt_out {
        io::save_bwt_text(state, alphabet, path)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

/// Uniform random ACGT reads of `read_length` bases totalling about `bases`.
fn synthetic_reads(bases: usize, read_length: usize, seed: u64) -> Vec<Vec<u8>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let read_length = read_length.max(1);
    (0..bases.div_ceil(read_length))
        .map(|_| (0..read_length).map(|_| rng.gen_range(1..=4u8)).collect())
        .collect()
}
