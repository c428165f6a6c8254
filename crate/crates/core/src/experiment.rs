//! Experiment dispatch: each experiment produces a JSON report (with the
//! configuration echoed) and a CSV table, plus an outcome that maps to a
//! process exit code.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use num_traits::One;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::chains::{
    build_nerve_poset, extension_chain_search, max_chain_length, max_chain_length_dp, nested_cover_chain,
    poset_to_json, verify_extension_chain, CanonicalSparse, ChainError, ChainReport, SparseColouring,
    WindowSchedule, WindowedColouring,
};
use crate::covers::emulation::{audit_trace, emulate_inductive_search, EmulationConfig, EmulationError};
use crate::covers::{
    colouring_to_cover, grid_image, max_multiplicity_point, random_box_cover, rich_cube_via_cover, BoxCover,
    CoverError, RandomCoverParams, Q,
};
use crate::fixedpoint::{brouwer_approx, builtin_map, coordinate_fixed_experiment, improvement_trend, parse_rational, FixedPointError};
use crate::formats::{parse_colouring, parse_cover, FormatError};
use crate::labelings::{
    check_cubical_sperner, max_colours_per_cube, random_sperner_colouring, Colouring, LabelingError, PaletteMode,
};
use crate::lattice::{FamilyPolicy, LatticeError};
use crate::subdivision::{
    adaptive_subdivide, complex_colour_stats, leaf_volume_sum, leaves_to_jsonl, verify_leaves, well_founded_check,
    SubdivisionError,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Format { path: PathBuf, source: FormatError },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Labeling(#[from] LabelingError),
    #[error(transparent)]
    Cover(#[from] CoverError),
    #[error(transparent)]
    Subdivision(#[from] SubdivisionError),
    #[error(transparent)]
    Emulation(#[from] EmulationError),
    #[error(transparent)]
    FixedPoint(#[from] FixedPointError),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

impl ExperimentError {
    /// Exit code for errors raised before any result exists.
    pub fn exit_code(&self) -> i32 {
        1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    KuhnVerify,
    ReductionRoundtrip,
    LebesgueWitness,
    Subdivide,
    NerveChains,
    C0Chains,
    Brouwer,
    EmulateInduction,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::KuhnVerify => "kuhn-verify",
            Experiment::ReductionRoundtrip => "reduction-roundtrip",
            Experiment::LebesgueWitness => "lebesgue-witness",
            Experiment::Subdivide => "subdivide",
            Experiment::NerveChains => "nerve-chains",
            Experiment::C0Chains => "c0-chains",
            Experiment::Brouwer => "brouwer",
            Experiment::EmulateInduction => "emulate-induction",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Dimension `N`.
    pub dim: usize,
    /// Grid bound `n`.
    pub bound: u32,
    /// Secondary scale: the Brouwer scale `m`, or the grid used for the
    /// emulation (default `3n`).
    pub scale: Option<u32>,
    pub seed: u64,
    /// Number of consecutive seeds for sweeps.
    pub seeds: u64,
    pub max_level: u32,
    pub max_size: usize,
    pub element_budget: usize,
    pub depth: usize,
    pub window: WindowSchedule,
    pub node_budget: usize,
    pub input: Option<PathBuf>,
    pub map: String,
    pub map_arg: Option<String>,
    pub eps: Option<String>,
    pub doublings: u32,
    pub min_growth: usize,
    pub family: FamilyPolicy,
    pub max_steps: usize,
    pub format: OutputFormat,
    /// Worker cap. Results do not depend on it, so it is left out of the
    /// echoed config to keep reports identical across thread counts.
    #[serde(skip_serializing, default)]
    pub threads: Option<usize>,
    /// Adds wall-clock time to the report, which then stops being
    /// reproducible byte for byte.
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            dim: 2,
            bound: 2,
            scale: None,
            seed: 0,
            seeds: 1,
            max_level: 20,
            max_size: 8,
            element_budget: 100_000,
            depth: 3,
            window: WindowSchedule::default(),
            node_budget: 100_000,
            input: None,
            map: "rotate".into(),
            map_arg: None,
            eps: None,
            doublings: 3,
            min_growth: 2,
            family: FamilyPolicy::CoInfinite,
            max_steps: 64,
            format: OutputFormat::Json,
            threads: None,
            timing: false,
        }
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Config(m.into()));
        if self.dim == 0 {
            return bad("dimension must be positive");
        }
        if self.bound == 0 {
            return bad("bound must be positive");
        }
        if self.seeds == 0 {
            return bad("seeds must be positive");
        }
        if self.max_size == 0 || self.depth == 0 || self.node_budget == 0 || self.element_budget == 0 {
            return bad("budgets must be positive");
        }
        if self.threads == Some(0) {
            return bad("threads must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Ok,
    Violation,
    BudgetExhausted,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Ok => 0,
            Outcome::Violation => 2,
            Outcome::BudgetExhausted => 3,
        }
    }

    fn worst(self, other: Outcome) -> Outcome {
        match (self, other) {
            (Outcome::Violation, _) | (_, Outcome::Violation) => Outcome::Violation,
            (Outcome::BudgetExhausted, _) | (_, Outcome::BudgetExhausted) => Outcome::BudgetExhausted,
            _ => Outcome::Ok,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub outcome: Outcome,
    pub results: Value,
    pub csv_header: Vec<String>,
    pub csv_rows: Vec<Vec<String>>,
    pub runtime_ms: Option<u128>,
    pub config: ExperimentConfig,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut doc = json!({
            "experiment": self.config.experiment.name(),
            "config": self.config,
            "status": self.outcome,
            "results": self.results,
        });
        if let Some(ms) = self.runtime_ms {
            doc["runtime_ms"] = json!(ms);
        }
        let mut text = serde_json::to_string_pretty(&doc).expect("report serialises");
        text.push('\n');
        text
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.csv_header.join(",");
        out.push('\n');
        for row in &self.csv_rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    pub fn render(&self) -> String {
        match self.config.format {
            OutputFormat::Json => self.to_json(),
            OutputFormat::Csv => self.to_csv(),
        }
    }
}

struct Partial {
    outcome: Outcome,
    results: Value,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

/// Runs one experiment, on a dedicated thread pool when `threads` is set.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report, ExperimentError> {
    config.validate()?;
    let start = Instant::now();
    let partial = match config.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| ExperimentError::Config(e.to_string()))?
            .install(|| dispatch(config))?,
        None => dispatch(config)?,
    };
    Ok(Report {
        outcome: partial.outcome,
        results: partial.results,
        csv_header: partial.header.into_iter().map(String::from).collect(),
        csv_rows: partial.rows,
        runtime_ms: config.timing.then(|| start.elapsed().as_millis()),
        config: config.clone(),
    })
}

fn dispatch(cfg: &ExperimentConfig) -> Result<Partial, ExperimentError> {
    match cfg.experiment {
        Experiment::KuhnVerify => kuhn_verify(cfg),
        Experiment::ReductionRoundtrip => reduction_roundtrip(cfg),
        Experiment::LebesgueWitness => lebesgue_witness(cfg),
        Experiment::Subdivide => subdivide(cfg),
        Experiment::NerveChains => nerve_chains(cfg),
        Experiment::C0Chains => c0_chains(cfg),
        Experiment::Brouwer => brouwer(cfg),
        Experiment::EmulateInduction => emulate(cfg),
    }
}

fn read_input(path: &PathBuf) -> Result<String, ExperimentError> {
    std::fs::read_to_string(path).map_err(|e| ExperimentError::Io {
        path: path.clone(),
        message: e.to_string(),
    })
}

fn load_colouring(path: &PathBuf) -> Result<Colouring, ExperimentError> {
    parse_colouring(&read_input(path)?).map_err(|source| ExperimentError::Format {
        path: path.clone(),
        source,
    })
}

fn load_cover(path: &PathBuf) -> Result<BoxCover, ExperimentError> {
    parse_cover(&read_input(path)?).map_err(|source| ExperimentError::Format {
        path: path.clone(),
        source,
    })
}

/// The colourings of a sweep: the input file, or one seeded colouring per seed.
fn colourings(cfg: &ExperimentConfig) -> Result<Vec<(Option<u64>, Colouring)>, ExperimentError> {
    match &cfg.input {
        Some(p) => Ok(vec![(None, load_colouring(p)?)]),
        None => (cfg.seed..cfg.seed + cfg.seeds)
            .map(|s| Ok((Some(s), random_sperner_colouring(cfg.dim, cfg.bound, s, PaletteMode::Mixed)?)))
            .collect(),
    }
}

fn covers(cfg: &ExperimentConfig) -> Result<Vec<(Option<u64>, BoxCover)>, ExperimentError> {
    match &cfg.input {
        Some(p) => Ok(vec![(None, load_cover(p)?)]),
        None => (cfg.seed..cfg.seed + cfg.seeds)
            .map(|s| Ok((Some(s), random_box_cover(cfg.dim, s, &RandomCoverParams::default())?)))
            .collect(),
    }
}

fn seed_text(seed: Option<u64>) -> String {
    seed.map_or_else(|| "input".into(), |s| s.to_string())
}

fn qs(v: &[Q]) -> Vec<String> {
    v.iter().map(Q::to_string).collect()
}

fn kuhn_verify(cfg: &ExperimentConfig) -> Result<Partial, ExperimentError> {
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    let mut outcome = Outcome::Ok;
    let mut min_count: Option<usize> = None;
    for (seed, phi) in colourings(cfg)? {
        let valid = check_cubical_sperner(&phi).is_valid();
        let rich = max_colours_per_cube(&phi);
        let target = phi.grid().dim() + 1;
        if valid && rich.count < target {
            outcome = Outcome::Violation;
        }
        if valid {
            min_count = Some(min_count.map_or(rich.count, |m| m.min(rich.count)));
        }
        rows.push(vec![seed_text(seed), valid.to_string(), rich.count.to_string()]);
        runs.push(json!({
            "seed": seed,
            "valid": valid,
            "max_colours": rich.count,
            "cube": rich.cube.coords(),
        }));
    }
    Ok(Partial {
        outcome,
        results: json!({ "min_max_colours": min_count, "target": cfg.dim + 1, "runs": runs }),
        header: vec!["seed", "valid", "max_colours"],
        rows,
    })
}

fn reduction_roundtrip(cfg: &ExperimentConfig) -> Result<Partial, ExperimentError> {
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    let mut outcome = Outcome::Ok;
    for (seed, phi) in colourings(cfg)? {
        let cover = colouring_to_cover(&phi)?;
        let max_diam = cover.max_diameter()?;
        let rich = rich_cube_via_cover(&phi)?;
        let palette: BTreeSet<_> = phi.cube_palette(&rich.cube)?.into_iter().collect();
        let contained = rich.colours.is_subset(&palette);
        let target = phi.grid().dim() + 1;
        if max_diam >= Q::one() || !contained || rich.colours.len() < target {
            outcome = Outcome::Violation;
        }
        rows.push(vec![
            seed_text(seed),
            max_diam.to_string(),
            rich.colours.len().to_string(),
            contained.to_string(),
        ]);
        runs.push(json!({
            "seed": seed,
            "members": cover.members().len(),
            "max_diameter": max_diam.to_string(),
            "cube": rich.cube.coords(),
            "colours": rich.colours.iter().map(|c| c.0).collect::<Vec<_>>(),
            "point": qs(&rich.point),
            "colours_in_cube_palette": contained,
        }));
    }
    Ok(Partial {
        outcome,
        results: json!({ "runs": runs }),
        header: vec!["seed", "max_diameter", "colours", "contained"],
        rows,
    })
}

fn lebesgue_witness(cfg: &ExperimentConfig) -> Result<Partial, ExperimentError> {
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    let mut outcome = Outcome::Ok;
    for (seed, cover) in covers(cfg)? {
        let w = max_multiplicity_point(&cover)?;
        let small = cover.max_diameter()? < Q::one();
        if small && w.multiplicity() < cover.dim() + 1 {
            outcome = Outcome::Violation;
        }
        rows.push(vec![seed_text(seed), w.multiplicity().to_string(), small.to_string()]);
        runs.push(json!({
            "seed": seed,
            "point": qs(&w.point),
            "multiplicity": w.multiplicity(),
            "members": w.members,
            "all_diameters_below_one": small,
        }));
    }
    Ok(Partial {
        outcome,
        results: json!({ "runs": runs }),
        header: vec!["seed", "multiplicity", "diameters_below_one"],
        rows,
    })
}

fn subdivide(cfg: &ExperimentConfig) -> Result<Partial, ExperimentError> {
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    let mut outcome = Outcome::Ok;
    for (seed, cover) in covers(cfg)? {
        let tree = adaptive_subdivide(&cover, cfg.max_level)?;
        let (finite, depth) = well_founded_check(&tree);
        let volume = leaf_volume_sum(&tree);
        let mut run = json!({
            "seed": seed,
            "leaves": tree.leaves.len(),
            "refused": tree.refused(),
            "depth": depth,
            "finite": finite,
            "volume": volume.map(|v| v.to_string()),
        });
        if finite {
            verify_leaves(&tree, &cover)?;
            let stats = complex_colour_stats(&tree, &cover)?;
            if volume.is_some_and(|v| v != Q::one()) {
                outcome = Outcome::Violation;
            }
            run["colour_stats"] = json!({
                "vertices": stats.vertices,
                "max": stats.max,
                "histogram": stats.histogram,
                "face_violations": stats.face_violations,
            });
            run["leaf_records"] = leaves_to_jsonl(&tree)
                .lines()
                .map(|l| serde_json::from_str(l).expect("records are JSON"))
                .collect::<Vec<Value>>()
                .into();
        } else {
            outcome = outcome.worst(Outcome::BudgetExhausted);
        }
        rows.push(vec![
            seed_text(seed),
            tree.leaves.len().to_string(),
            depth.to_string(),
            tree.refused().to_string(),
        ]);
        runs.push(run);
    }
    Ok(Partial {
        outcome,
        results: json!({ "runs": runs }),
        header: vec!["seed", "leaves", "depth", "refused"],
        rows,
    })
}

fn nerve_chains(cfg: &ExperimentConfig) -> Result<Partial, ExperimentError> {
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    let mut outcome = Outcome::Ok;
    for (seed, cover) in covers(cfg)? {
        let poset = build_nerve_poset(&cover, cfg.max_size, cfg.element_budget);
        let chain = max_chain_length(&poset);
        let dp = max_chain_length_dp(&poset);
        let w = max_multiplicity_point(&cover)?;
        let target = cover.dim() + 1;
        let family = nested_cover_chain(&cover, target.min(cfg.max_size));
        if chain != dp || !poset.is_downward_closed() || (chain < w.multiplicity().min(cfg.max_size) && !poset.budget_exhausted) {
            outcome = Outcome::Violation;
        }
        if poset.budget_exhausted {
            outcome = outcome.worst(Outcome::BudgetExhausted);
        }
        rows.push(vec![
            seed_text(seed),
            poset.len().to_string(),
            chain.to_string(),
            w.multiplicity().to_string(),
        ]);
        runs.push(json!({
            "seed": seed,
            "elements": poset.len(),
            "max_chain_length": chain,
            "multiplicity": w.multiplicity(),
            "size_capped": poset.size_capped,
            "budget_exhausted": poset.budget_exhausted,
            "intersecting_family": family,
            "poset": if poset.len() <= 512 { poset_to_json(&poset) } else { Value::Null },
        }));
    }
    Ok(Partial {
        outcome,
        results: json!({ "runs": runs }),
        header: vec!["seed", "elements", "max_chain_length", "multiplicity"],
        rows,
    })
}

fn chain_json<C: SparseColouring>(phi: &C, report: &ChainReport) -> (Value, bool) {
    let verified = verify_extension_chain(phi, &report.chain).is_ok();
    let links: Vec<Value> = report
        .chain
        .iter()
        .map(|l| json!({ "support": l.sigma.support(), "window": l.sigma.window(), "colour": l.colour.0 }))
        .collect();
    (
        json!({
            "length": report.chain.len(),
            "reached_depth": report.reached_depth,
            "budget_exhausted": report.budget_exhausted,
            "nodes": report.nodes,
            "verified": verified,
            "chain": links,
        }),
        verified,
    )
}

fn c0_chains(cfg: &ExperimentConfig) -> Result<Partial, ExperimentError> {
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    let mut outcome = Outcome::Ok;
    let mut record = |label: String, value: Value, verified: bool, exhausted: bool, len: usize| {
        if !verified {
            outcome = Outcome::Violation;
        } else if exhausted {
            outcome = outcome.worst(Outcome::BudgetExhausted);
        }
        rows.push(vec![label, len.to_string(), verified.to_string()]);
        runs.push(value);
    };
    if cfg.map == "canonical" {
        let phi = CanonicalSparse { bound: cfg.bound };
        let r = extension_chain_search(&phi, cfg.depth, cfg.window, cfg.node_budget);
        let (v, ok) = chain_json(&phi, &r);
        record("canonical".into(), v, ok, r.budget_exhausted, r.chain.len());
    } else {
        let width = cfg.window.window(cfg.depth);
        let sources: Vec<(Option<u64>, Colouring)> = match &cfg.input {
            Some(p) => vec![(None, load_colouring(p)?)],
            None => (cfg.seed..cfg.seed + cfg.seeds)
                .map(|s| Ok((Some(s), random_sperner_colouring(width, cfg.bound, s, PaletteMode::Mixed)?)))
                .collect::<Result<_, ExperimentError>>()?,
        };
        for (seed, colouring) in sources {
            let phi = WindowedColouring { colouring };
            let r = extension_chain_search(&phi, cfg.depth, cfg.window, cfg.node_budget);
            let (mut v, ok) = chain_json(&phi, &r);
            v["seed"] = json!(seed);
            record(seed_text(seed), v, ok, r.budget_exhausted, r.chain.len());
        }
    }
    Ok(Partial {
        outcome,
        results: json!({ "runs": runs }),
        header: vec!["source", "length", "verified"],
        rows,
    })
}

fn brouwer(cfg: &ExperimentConfig) -> Result<Partial, ExperimentError> {
    let f = builtin_map(&cfg.map, cfg.dim, cfg.map_arg.as_deref())?;
    let base = cfg.scale.unwrap_or(8);
    let cap = base.saturating_mul(1 << (cfg.doublings + 4).min(20));
    let mut rows = Vec::new();
    let mut steps = Vec::new();
    let mut residuals = Vec::new();
    let mut outcome = Outcome::Ok;
    for d in 0..=cfg.doublings {
        let m = base << d;
        match brouwer_approx(f.as_ref(), m, cap) {
            Ok(r) => {
                rows.push(vec![m.to_string(), r.m.to_string(), r.residual.to_string()]);
                steps.push(json!({
                    "m": m,
                    "m_used": r.m,
                    "escalations": r.escalations,
                    "point": qs(&r.point),
                    "residual": r.residual.to_string(),
                    "lipschitz_bound": r.lipschitz_bound.map(|b| b.to_string()),
                }));
                residuals.push(r.residual);
            }
            Err(FixedPointError::NotFound(at)) => {
                outcome = outcome.worst(Outcome::BudgetExhausted);
                steps.push(json!({ "m": m, "not_found_up_to": at }));
            }
            Err(e) => return Err(e.into()),
        }
    }
    let trend = improvement_trend(&residuals);
    let mut results = json!({ "map": f.name(), "steps": steps, "improvement_trend": trend });
    if let Some(eps) = &cfg.eps {
        let eps = parse_rational(eps)?;
        let r = coordinate_fixed_experiment(f.as_ref(), eps, base << cfg.doublings)?;
        results["coordinates"] = json!({
            "eps": eps.to_string(),
            "point": qs(&r.point),
            "axes": r.axes.iter().collect::<Vec<_>>(),
            "residuals": qs(&r.residuals),
            "cubes_examined": r.cubes_examined,
        });
    }
    Ok(Partial {
        outcome,
        results,
        header: vec!["m", "m_used", "residual"],
        rows,
    })
}

fn emulate(cfg: &ExperimentConfig) -> Result<Partial, ExperimentError> {
    let scale = cfg.scale.unwrap_or(3 * cfg.bound);
    let sources: Vec<(Option<u64>, BoxCover)> = match &cfg.input {
        Some(p) => vec![(None, load_cover(p)?)],
        None => colourings(cfg)?
            .into_iter()
            .map(|(s, phi)| Ok((s, colouring_to_cover(&phi)?)))
            .collect::<Result<_, ExperimentError>>()?,
    };
    let ecfg = EmulationConfig {
        family: cfg.family,
        min_growth: cfg.min_growth,
        max_steps: cfg.max_steps,
        seed: cfg.seed,
        ..EmulationConfig::default()
    };
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    let mut outcome = Outcome::Ok;
    for (seed, cover) in sources {
        let grid_cover = grid_image(&cover, scale)?;
        let trace = emulate_inductive_search(&grid_cover, &ecfg)?;
        let audit = if trace.steps.is_empty() {
            None
        } else {
            Some(audit_trace(&trace, &grid_cover, &ecfg)?)
        };
        let passed = audit.as_ref().is_some_and(|a| a.passed());
        if trace.success() && !passed {
            outcome = Outcome::Violation;
        }
        rows.push(vec![
            seed_text(seed),
            trace.steps.len().to_string(),
            trace.success().to_string(),
            passed.to_string(),
        ]);
        runs.push(json!({ "seed": seed, "scale": scale, "trace": trace, "audit": audit }));
    }
    Ok(Partial {
        outcome,
        results: json!({ "runs": runs }),
        header: vec!["seed", "steps", "success", "audit_passed"],
        rows,
    })
}
