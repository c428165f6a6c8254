use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sperner::chains::WindowSchedule;
use sperner::covers::{random_box_cover, RandomCoverParams};
use sperner::experiment::{run_experiment, Experiment, ExperimentConfig, OutputFormat};
use sperner::formats::{write_colouring, write_cover};
use sperner::labelings::{random_sperner_colouring, PaletteMode};
use sperner::lattice::FamilyPolicy;

/// Default directory for reports when `--output` is not given.
const OUT_DIR_VAR: &str = "SPERNER_OUT_DIR";

#[derive(Parser)]
#[command(name = "sperner", version, about = "Finite experiments on Sperner colourings, covers and fixed points")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Largest number of colours on a cube, over seeded Sperner colourings.
    KuhnVerify(Common),
    /// Colouring to cover and back to a rich cube.
    ReductionRoundtrip(Common),
    /// Point of maximal multiplicity of a box cover.
    LebesgueWitness(Common),
    /// Adaptive dyadic subdivision of a box cover.
    Subdivide(Common),
    /// Nerve poset of a box cover and its longest chain.
    NerveChains(Common),
    /// Extension chains for finite-support colourings.
    C0Chains(Common),
    /// Approximate fixed points of a built-in map.
    Brouwer(Common),
    /// Replays the inductive construction on a grid cover.
    EmulateInduction(Common),
    /// Writes a seeded colouring or cover in the text format.
    Generate(Generate),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    CoInfinite,
    FiniteSubsets,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Colouring,
    Cover,
}

#[derive(Args)]
struct Common {
    /// Dimension N.
    #[arg(short = 'N', long, default_value_t = 2)]
    dim: usize,
    /// Grid bound n.
    #[arg(short = 'n', long, default_value_t = 2)]
    bound: u32,
    /// Brouwer scale m, or the grid scale of the emulation.
    #[arg(short = 'm', long)]
    scale: Option<u32>,
    /// Base seed; required by randomized experiments without an input file.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of consecutive seeds.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    #[arg(long, default_value_t = 20)]
    max_level: u32,
    #[arg(long, default_value_t = 8)]
    max_size: usize,
    #[arg(long, default_value_t = 100_000)]
    element_budget: usize,
    /// Chain depth.
    #[arg(long, default_value_t = 3)]
    depth: usize,
    #[arg(long, default_value_t = 4)]
    window_start: usize,
    #[arg(long, default_value_t = 2)]
    window_step: usize,
    #[arg(long, default_value_t = 100_000)]
    node_budget: usize,
    /// Colouring or cover file instead of seeded instances.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Map name (identity, square, rotate, const, poly, shift), or
    /// `canonical` for the c0 chain search.
    #[arg(long, default_value = "rotate")]
    map: String,
    #[arg(long)]
    map_arg: Option<String>,
    /// Tolerance for the coordinate experiment, as `p/q`.
    #[arg(long)]
    eps: Option<String>,
    #[arg(long, default_value_t = 3)]
    doublings: u32,
    #[arg(long, default_value_t = 2)]
    min_growth: usize,
    #[arg(long, value_enum, default_value_t = Family::CoInfinite)]
    family: Family,
    #[arg(long, default_value_t = 64)]
    max_steps: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Include wall-clock time in the report.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct Generate {
    #[arg(value_enum)]
    kind: Kind,
    #[arg(short = 'N', long, default_value_t = 2)]
    dim: usize,
    #[arg(short = 'n', long, default_value_t = 2)]
    bound: u32,
    #[arg(long)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn randomized(e: Experiment, common: &Common) -> bool {
    match e {
        Experiment::Brouwer => false,
        Experiment::C0Chains => common.map != "canonical" && common.input.is_none(),
        _ => common.input.is_none(),
    }
}

fn config(e: Experiment, c: &Common) -> Result<ExperimentConfig, String> {
    if randomized(e, c) && c.seed.is_none() {
        return Err(format!("{} needs --seed or --input", e.name()));
    }
    Ok(ExperimentConfig {
        experiment: e,
        dim: c.dim,
        bound: c.bound,
        scale: c.scale,
        seed: c.seed.unwrap_or(0),
        seeds: c.seeds,
        max_level: c.max_level,
        max_size: c.max_size,
        element_budget: c.element_budget,
        depth: c.depth,
        window: WindowSchedule {
            start: c.window_start,
            step: c.window_step,
        },
        node_budget: c.node_budget,
        input: c.input.clone(),
        map: c.map.clone(),
        map_arg: c.map_arg.clone(),
        eps: c.eps.clone(),
        doublings: c.doublings,
        min_growth: c.min_growth,
        family: match c.family {
            Family::CoInfinite => FamilyPolicy::CoInfinite,
            Family::FiniteSubsets => FamilyPolicy::FiniteSubsets,
        },
        max_steps: c.max_steps,
        format: match c.format {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
        },
        threads: c.threads,
        timing: c.timing,
    })
}

fn destination(output: Option<PathBuf>, default_name: &str) -> Option<PathBuf> {
    output.or_else(|| std::env::var_os(OUT_DIR_VAR).map(|dir| PathBuf::from(dir).join(default_name)))
}

fn emit(text: &str, path: Option<PathBuf>) -> Result<(), String> {
    match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| format!("{}: {e}", parent.display()))?;
            }
            std::fs::write(&p, text).map_err(|e| format!("{}: {e}", p.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_one(e: Experiment, c: Common) -> Result<i32, String> {
    let cfg = config(e, &c)?;
    let report = run_experiment(&cfg).map_err(|err| err.to_string())?;
    let ext = match cfg.format {
        OutputFormat::Json => "json",
        OutputFormat::Csv => "csv",
    };
    emit(&report.render(), destination(c.output, &format!("{}.{ext}", e.name())))?;
    Ok(report.outcome.exit_code())
}

fn generate(g: Generate) -> Result<i32, String> {
    let text = match g.kind {
        Kind::Colouring => {
            let phi = random_sperner_colouring(g.dim, g.bound, g.seed, PaletteMode::Mixed).map_err(|e| e.to_string())?;
            write_colouring(&phi)
        }
        Kind::Cover => {
            let cover = random_box_cover(g.dim, g.seed, &RandomCoverParams::default()).map_err(|e| e.to_string())?;
            write_cover(&cover)
        }
    };
    emit(&text, g.output)?;
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::KuhnVerify(c) => run_one(Experiment::KuhnVerify, c),
        Command::ReductionRoundtrip(c) => run_one(Experiment::ReductionRoundtrip, c),
        Command::LebesgueWitness(c) => run_one(Experiment::LebesgueWitness, c),
        Command::Subdivide(c) => run_one(Experiment::Subdivide, c),
        Command::NerveChains(c) => run_one(Experiment::NerveChains, c),
        Command::C0Chains(c) => run_one(Experiment::C0Chains, c),
        Command::Brouwer(c) => run_one(Experiment::Brouwer, c),
        Command::EmulateInduction(c) => run_one(Experiment::EmulateInduction, c),
        Command::Generate(g) => generate(g),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
