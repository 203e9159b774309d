use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use morphgrid_cli::config::{Overrides, PipelineConfig, SourceMode};
use morphgrid_cli::fixtures::{make_fixtures, FixtureSpec};
use morphgrid_cli::pipeline::{run_repeats, Pipeline, REPORT_TXT};
use morphgrid_core::paradigms::OmegaMode;
use morphgrid_core::Error;

/// Unsupervised discovery of inflectional paradigms from raw text.
#[derive(Parser)]
#[command(name = "morphgrid", version)]
struct Cli {
    /// Pipeline config file (.toml or .json)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed, overrides the config file
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Artifact directory, overrides the config file
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    /// Skip cell-count selection and use this many cells
    #[arg(long, global = true)]
    gold_k: Option<usize>,

    /// Exponent weighting in the second clustering pass
    #[arg(long, global = true, value_enum)]
    omega: Option<OmegaArg>,

    /// How source cells are picked when completing grids
    #[arg(long, global = true, value_enum)]
    sources: Option<SourceArg>,

    /// Train cell-clustering embeddings with the stock n-gram range
    #[arg(long, global = true)]
    no_affix_bias: bool,

    /// Train cell-clustering embeddings with the stock context window
    #[arg(long, global = true)]
    no_window_bias: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse annotations and tables, build the corpus, lexicon, and gold grid
    Ingest,
    /// Train both embedding spaces on the corpus
    Embed,
    /// Cluster the lexicon into cells and pick the cell count
    Cells,
    /// Group forms across cells into paradigm candidates
    Paradigms,
    /// Learn rewrite rules and complete the predicted grid
    Reinflect,
    /// Score the predicted grid against the gold grid
    Evaluate,
    /// Run every stage in order
    RunAll {
        /// Repeat with consecutive seeds and report per-metric means
        #[arg(long, default_value_t = 1)]
        repeats: usize,
    },
    /// Generate a synthetic corpus, annotations, tables, and config
    MakeFixtures {
        /// Directory to write the fixture files into
        #[arg(long)]
        out: PathBuf,
        /// Number of synthetic lemmas
        #[arg(long, default_value_t = 50)]
        stems: usize,
        /// Number of corpus sentences beyond the coverage block
        #[arg(long, default_value_t = 50_000)]
        pairs: usize,
        /// Generator seed; also seeds the written config
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OmegaArg {
    Heuristic,
    Const1,
    Const0,
}

impl From<OmegaArg> for OmegaMode {
    fn from(a: OmegaArg) -> Self {
        match a {
            OmegaArg::Heuristic => OmegaMode::Heuristic,
            OmegaArg::Const1 => OmegaMode::Const1,
            OmegaArg::Const0 => OmegaMode::Const0,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SourceArg {
    Ranked,
    Random,
}

impl From<SourceArg> for SourceMode {
    fn from(a: SourceArg) -> Self {
        match a {
            SourceArg::Ranked => SourceMode::Ranked,
            SourceArg::Random => SourceMode::Random,
        }
    }
}

/// Which side of the program an error came from decides the exit code:
/// 2 for config and input problems, 3 for malformed data files, 4 for
/// failures inside the pipeline itself.
enum Phase {
    Config,
    Run,
}

fn exit_code(phase: &Phase, err: &Error) -> u8 {
    match err {
        Error::Parse { .. } | Error::Format(_) => 3,
        _ => match phase {
            Phase::Config => 2,
            Phase::Run => 4,
        },
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((phase, err)) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&phase, &err))
        }
    }
}

fn run(cli: Cli) -> Result<(), (Phase, Error)> {
    if let Command::MakeFixtures { out, stems, pairs, seed } = cli.command {
        let spec = FixtureSpec { stems, pairs, seed };
        let config_path = make_fixtures(&out, &spec).map_err(|e| (Phase::Run, e))?;
        println!("{}", config_path.display());
        return Ok(());
    }

    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| (Phase::Config, Error::invalid("--config is required")))?;
    let mut config = PipelineConfig::load(config_path).map_err(|e| (Phase::Config, e))?;
    let overrides = Overrides {
        seed: cli.seed,
        output_dir: cli.output_dir.clone(),
        gold_k: cli.gold_k,
        omega: cli.omega.map(OmegaMode::from),
        sources: cli.sources.map(SourceMode::from),
        no_affix_bias: cli.no_affix_bias,
        no_window_bias: cli.no_window_bias,
    };
    config.apply(&overrides);
    config.finalize();
    config.validate().map_err(|e| (Phase::Config, e))?;
    let out_dir = config.output_dir.clone();

    let stage = match cli.command {
        Command::Ingest => "ingest",
        Command::Embed => "embed",
        Command::Cells => "cells",
        Command::Paradigms => "paradigms",
        Command::Reinflect => "reinflect",
        Command::Evaluate => "evaluate",
        Command::RunAll { repeats } => {
            if repeats > 1 {
                let summary =
                    run_repeats(&config, repeats).map_err(|e| (Phase::Run, e))?;
                print!("{}", summary.render_table());
            } else {
                let mut pipeline = Pipeline::new(config).map_err(|e| (Phase::Run, e))?;
                let report = pipeline.run_all().map_err(|e| (Phase::Run, e))?;
                print!("{}", report.render_table());
            }
            return Ok(());
        }
        Command::MakeFixtures { .. } => unreachable!("handled above"),
    };

    let mut pipeline = Pipeline::new(config).map_err(|e| (Phase::Run, e))?;
    pipeline.run_stage(stage).map_err(|e| (Phase::Run, e))?;
    if stage == "evaluate" {
        let table = std::fs::read_to_string(out_dir.join(REPORT_TXT))
            .map_err(|e| (Phase::Run, Error::Io(e)))?;
        print!("{table}");
    }
    Ok(())
}
