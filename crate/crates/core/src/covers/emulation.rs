//! Finite replay of the inductive 4-tuple construction behind the infinite
//! covering-dimension argument.
//!
//! The construction picks `(σ_k, A_k, L_k, U_k)` with `L_k` a maximum of the
//! local relative Lebesgue number and `M(σ_k, A_k, L_k, G_{U_k}, 𝒢)` holding.
//! Here the index set is `{0, …, N−1}`, the set `S` of indices with infinitely
//! many zeros is replaced by indices with at least `min_zeros` zeros, and the
//! co-infinite families are replaced by [`FamilyPolicy`]. Maxima are exact
//! while the number of `(σ, A)` pairs fits the budget and seeded samples
//! beyond it. The trace records which was used.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{
    ball, candidate_supersets, hat_ball, local_lebesgue, property_m, AKFunction, CoordSet,
    FamilyPolicy, Grid, GridSet, Index, LatticeError, MConfig, SupersetBudget,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmulationError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("cover has no members")]
    EmptyCover,
    #[error("member {member} has grid diameter {diameter}, not below {bound}")]
    DiameterTooLarge {
        member: usize,
        diameter: u32,
        bound: u32,
    },
    #[error("grid point {0} lies in no member")]
    Uncovered(Index),
    #[error("trace is malformed: {0}")]
    MalformedTrace(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmulationConfig {
    pub family: FamilyPolicy,
    /// Finite stand-in for `S`: indices with at least this many zeros.
    pub min_zeros: usize,
    /// Required size of `A_k ∖ A_{k−1}`; the infinite construction asks for
    /// more than one new coordinate.
    pub min_growth: usize,
    pub max_steps: usize,
    /// Largest number of `(σ, A)` pairs evaluated exactly in one maximum.
    pub pair_budget: usize,
    /// Escape pairs `(A′, χ)` tried per step before giving up.
    pub max_escapes: usize,
    pub seed: u64,
    pub supersets: SupersetBudget,
}

impl Default for EmulationConfig {
    fn default() -> Self {
        EmulationConfig {
            family: FamilyPolicy::CoInfinite,
            min_zeros: 1,
            min_growth: 2,
            max_steps: 64,
            pair_budget: 200_000,
            max_escapes: 64,
            seed: 0,
            supersets: SupersetBudget::default(),
        }
    }
}

impl EmulationConfig {
    pub fn m_config(&self) -> MConfig {
        MConfig {
            family: self.family,
            min_zeros: self.min_zeros,
            budget: self.supersets.clone(),
        }
    }
}

/// The pair `(A′_m, χ_m)` with `B(σ_m + χ_m, A′_m ∖ A_m, 1) ⊄ G_{U_m}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Escape {
    pub axes: CoordSet,
    pub chi: AKFunction,
    pub centre: Index,
}

/// One 4-tuple `(σ_k, A_k, L_k, U_k)` together with the chosen zero `n_k`
/// and, from the second step on, the escape used to reach it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TupleStep {
    pub sigma: Index,
    pub axes: CoordSet,
    pub level: u32,
    pub member: usize,
    pub pivot: usize,
    pub escape: Option<Escape>,
    pub sampled: bool,
}

/// Selection requirements, in the order they are checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Clause {
    /// No candidate pair at all.
    Maximum,
    Growth,
    Normalization,
    Separation,
    Containment,
    PropertyM,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "reason")]
pub enum StopReason {
    CoordinatesExhausted,
    NoEscapingExtension,
    StepLimit,
    EscapeBudget,
    Failed { step: usize, clause: Clause },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantifierCounts {
    pub lebesgue_evaluations: usize,
    pub maximisers_examined: usize,
    pub escape_candidates: usize,
    pub m_extensions: usize,
    pub m_supersets: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub dim: usize,
    pub bound: u32,
    pub steps: Vec<TupleStep>,
    pub stop: StopReason,
    /// `σ̂`: the last `σ` on `A_last`, zero elsewhere.
    pub sigma_hat: Option<Index>,
    /// Least 1-based `i₀` with `L_i = L_{i₀}` for every later step.
    pub i0: Option<usize>,
    pub hat_multiplicity: usize,
    /// Whether the members `U_i`, `i ≥ i₀`, are pairwise distinct.
    pub tail_members_distinct: bool,
    pub min_level: Option<u32>,
    pub counts: QuantifierCounts,
    pub sampled: bool,
}

impl Trace {
    pub fn success(&self) -> bool {
        !self.steps.is_empty() && !matches!(self.stop, StopReason::Failed { .. })
    }
}

fn check_precondition(cover: &[GridSet]) -> Result<Grid, EmulationError> {
    let first = cover.first().ok_or(EmulationError::EmptyCover)?;
    let grid = first.grid();
    let n = grid.bound();
    for (member, g) in cover.iter().enumerate() {
        if g.grid() != grid {
            return Err(LatticeError::Mismatch(grid.dim(), n, g.grid().dim(), g.grid().bound()).into());
        }
        if let Some(d) = g.diameter() {
            if d >= n {
                return Err(EmulationError::DiameterTooLarge {
                    member,
                    diameter: d,
                    bound: n,
                });
            }
        }
    }
    for idx in grid.iter() {
        if !cover.iter().any(|g| g.contains(&idx)) {
            return Err(EmulationError::Uncovered(idx));
        }
    }
    Ok(grid)
}

struct Maximum {
    level: u32,
    /// Maximisers ordered by `(|A|, A, σ)`, so the smallest enlargement
    /// attaining the maximum comes first and leaves room for later steps.
    winners: Vec<(CoordSet, Index)>,
    sampled: bool,
}

/// `max ℓ(σ, A, 𝒢)` over `σ ∈ sigmas`, `A ∈ axes`.
fn maximise(
    sigmas: &[Index],
    axes: &[CoordSet],
    cover: &[GridSet],
    cfg: &EmulationConfig,
    salt: u64,
    counts: &mut QuantifierCounts,
) -> Result<Option<Maximum>, EmulationError> {
    let total = sigmas.len() * axes.len();
    if total == 0 {
        return Ok(None);
    }
    let sampled = total > cfg.pair_budget;
    let pairs: Vec<(usize, usize)> = if sampled {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut picks: Vec<(usize, usize)> = (0..cfg.pair_budget)
            .map(|_| (rng.gen_range(0..axes.len()), rng.gen_range(0..sigmas.len())))
            .collect();
        picks.sort_unstable();
        picks.dedup();
        picks
    } else {
        (0..axes.len())
            .flat_map(|a| (0..sigmas.len()).map(move |s| (a, s)))
            .collect()
    };
    counts.lebesgue_evaluations += pairs.len();
    let values: Vec<Option<u32>> = pairs
        .par_iter()
        .map(|&(a, s)| local_lebesgue(&sigmas[s], &axes[a], cover))
        .collect::<Result<_, _>>()?;
    let Some(level) = values.iter().flatten().copied().max() else {
        return Ok(None);
    };
    let mut winners: Vec<(CoordSet, Index)> = pairs
        .iter()
        .zip(&values)
        .filter(|(_, v)| **v == Some(level))
        .map(|(&(a, s), _)| (axes[a], sigmas[s].clone()))
        .collect();
    winners.sort_by(|x, y| (x.0.len(), x.0, &x.1).cmp(&(y.0.len(), y.0, &y.1)));
    Ok(Some(Maximum {
        level,
        winners,
        sampled,
    }))
}

fn first_member(ball: &[Index], cover: &[GridSet]) -> Option<usize> {
    cover.iter().position(|g| g.contains_all(ball))
}

/// Picks the first maximiser meeting growth, normalisation, separation from
/// the previous member, containment and property `M`. On failure returns the
/// furthest clause any candidate reached.
fn select(
    max: &Maximum,
    prev: Option<&TupleStep>,
    cover: &[GridSet],
    cfg: &EmulationConfig,
    counts: &mut QuantifierCounts,
) -> Result<Result<TupleStep, Clause>, EmulationError> {
    let m_cfg = cfg.m_config();
    let mut furthest = Clause::Maximum;
    for (axes, sigma) in &max.winners {
        counts.maximisers_examined += 1;
        let base = match prev {
            Some(p) => p.axes,
            None => CoordSet::empty(sigma.dim())?,
        };
        let fresh = axes.difference(&base);
        if fresh.len() < cfg.min_growth {
            furthest = furthest.max(Clause::Growth);
            continue;
        }
        let off_support_zero = sigma
            .coords()
            .iter()
            .enumerate()
            .all(|(i, &c)| axes.contains(i) || c == 0);
        let pivot = fresh.iter().find(|&i| sigma.coords()[i] == 0);
        let Some(pivot) = pivot.filter(|_| off_support_zero) else {
            furthest = furthest.max(Clause::Normalization);
            continue;
        };
        if let Some(p) = prev {
            if cover[p.member].contains_all(&hat_ball(sigma, axes, 1.min(sigma.bound()))?) {
                furthest = furthest.max(Clause::Separation);
                continue;
            }
        }
        let Some(member) = first_member(&hat_ball(sigma, axes, max.level)?, cover) else {
            furthest = furthest.max(Clause::Containment);
            continue;
        };
        let report = property_m(sigma, axes, max.level, &cover[member], cover, &m_cfg)?;
        counts.m_extensions += report.extensions_checked;
        counts.m_supersets += report.supersets_checked;
        if !report.holds {
            furthest = furthest.max(Clause::PropertyM);
            continue;
        }
        return Ok(Ok(TupleStep {
            sigma: sigma.clone(),
            axes: *axes,
            level: max.level,
            member,
            pivot,
            escape: None,
            sampled: max.sampled || report.sampled,
        }));
    }
    Ok(Err(furthest))
}

enum StepOutcome {
    Next(TupleStep),
    Stop(StopReason),
}

fn first_step(
    grid: Grid,
    cover: &[GridSet],
    cfg: &EmulationConfig,
    counts: &mut QuantifierCounts,
) -> Result<StepOutcome, EmulationError> {
    let sigmas: Vec<Index> = grid.iter().filter(|s| s.zeros() >= cfg.min_zeros).collect();
    let (axes, _) = candidate_supersets(&CoordSet::empty(grid.dim())?, cfg.family, &cfg.supersets);
    let Some(max) = maximise(&sigmas, &axes, cover, cfg, 1, counts)? else {
        return Ok(StepOutcome::Stop(StopReason::Failed {
            step: 1,
            clause: Clause::Maximum,
        }));
    };
    Ok(match select(&max, None, cover, cfg, counts)? {
        Ok(step) => StepOutcome::Next(step),
        Err(clause) => StepOutcome::Stop(StopReason::Failed { step: 1, clause }),
    })
}

fn next_step(
    prev: &TupleStep,
    step_no: usize,
    cover: &[GridSet],
    cfg: &EmulationConfig,
    counts: &mut QuantifierCounts,
) -> Result<StepOutcome, EmulationError> {
    let (escapes, _) = candidate_supersets(&prev.axes, cfg.family, &cfg.supersets);
    let escapes: Vec<CoordSet> = escapes
        .into_iter()
        .filter(|a| {
            // room for A_{m+1} ⊇ A′ with enough fresh coordinates
            cfg.family.admits(&prev.axes, a) && prev.axes.complement().len() >= cfg.min_growth
        })
        .collect();
    if escapes.is_empty() {
        return Ok(StepOutcome::Stop(StopReason::CoordinatesExhausted));
    }
    let home = &cover[prev.member];
    let region = hat_ball(&prev.sigma, &prev.axes, prev.level)?;
    let mut tried = 0usize;
    let mut furthest: Option<Clause> = None;
    for a_prime in &escapes {
        let moved = a_prime.difference(&prev.axes);
        for centre in ball(&prev.sigma, &moved, prev.level)? {
            counts.escape_candidates += 1;
            if home.contains_all(&ball(&centre, &moved, 1.min(centre.bound()))?) {
                continue;
            }
            if tried == cfg.max_escapes {
                return Ok(StepOutcome::Stop(StopReason::EscapeBudget));
            }
            tried += 1;
            let sigmas: Vec<Index> = region
                .iter()
                .filter(|s| s.zeros() >= cfg.min_zeros)
                .filter(|s| a_prime.iter().all(|i| s.coords()[i] == centre.coords()[i]))
                .cloned()
                .collect();
            let (mut axes, _) = candidate_supersets(a_prime, cfg.family, &cfg.supersets);
            axes.insert(0, *a_prime);
            let salt = (step_no as u64) << 32 | tried as u64;
            let Some(max) = maximise(&sigmas, &axes, cover, cfg, salt, counts)? else {
                furthest = furthest.max(Some(Clause::Maximum));
                continue;
            };
            match select(&max, Some(prev), cover, cfg, counts)? {
                Ok(mut step) => {
                    let chi = AKFunction::difference(&prev.sigma, &centre, moved, prev.level)?;
                    step.escape = Some(Escape {
                        axes: *a_prime,
                        chi,
                        centre,
                    });
                    return Ok(StepOutcome::Next(step));
                }
                Err(clause) => furthest = furthest.max(Some(clause)),
            }
        }
    }
    Ok(StepOutcome::Stop(match furthest {
        None => StopReason::NoEscapingExtension,
        Some(clause) => StopReason::Failed {
            step: step_no,
            clause,
        },
    }))
}

/// Runs the construction on a cover of `[n]^N` whose members have grid
/// diameter below `n`.
pub fn emulate_inductive_search(cover: &[GridSet], cfg: &EmulationConfig) -> Result<Trace, EmulationError> {
    let grid = check_precondition(cover)?;
    let mut counts = QuantifierCounts::default();
    let mut steps: Vec<TupleStep> = Vec::new();
    let stop = loop {
        if steps.len() == cfg.max_steps {
            break StopReason::StepLimit;
        }
        let outcome = match steps.last() {
            None => first_step(grid, cover, cfg, &mut counts)?,
            Some(prev) => next_step(prev, steps.len() + 1, cover, cfg, &mut counts)?,
        };
        match outcome {
            StepOutcome::Next(step) => {
                log::debug!("step {}: L = {}, A = {}", steps.len() + 1, step.level, step.axes);
                steps.push(step);
            }
            StepOutcome::Stop(reason) => break reason,
        }
    };
    let sigma_hat = steps.last().map(limit_index);
    let i0 = stabilisation_index(&steps);
    let hat_multiplicity = sigma_hat
        .as_ref()
        .map_or(0, |s| cover.iter().filter(|g| g.contains(s)).count());
    let tail_members_distinct = i0.is_some_and(|i0| {
        let mut tail: Vec<usize> = steps[i0 - 1..].iter().map(|s| s.member).collect();
        let len = tail.len();
        tail.sort_unstable();
        tail.dedup();
        tail.len() == len
    });
    let min_level = steps.iter().map(|s| s.level).min();
    let sampled = steps.iter().any(|s| s.sampled);
    Ok(Trace {
        dim: grid.dim(),
        bound: grid.bound(),
        steps,
        stop,
        sigma_hat,
        i0,
        hat_multiplicity,
        tail_members_distinct,
        min_level,
        counts,
        sampled,
    })
}

fn limit_index(last: &TupleStep) -> Index {
    let coords = last
        .sigma
        .coords()
        .iter()
        .enumerate()
        .map(|(i, &c)| if last.axes.contains(i) { c } else { 0 })
        .collect();
    Index::new(last.sigma.bound(), coords).expect("same shape as σ")
}

fn stabilisation_index(steps: &[TupleStep]) -> Option<usize> {
    let last = steps.last()?.level;
    let tail = steps.iter().rev().take_while(|s| s.level == last).count();
    Some(steps.len() - tail + 1)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyAudit {
    pub property: u8,
    pub passed: bool,
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub properties: Vec<PropertyAudit>,
    /// `σ̂ ∈ G_{U_i}` for every recorded `i ≥ i₀`.
    pub final_membership: bool,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.final_membership && self.properties.iter().all(|p| p.passed)
    }
}

/// Re-derives the seven induction properties and the final membership claim
/// from the trace alone, without reusing any of the engine's choices.
pub fn audit_trace(trace: &Trace, cover: &[GridSet], cfg: &EmulationConfig) -> Result<AuditReport, EmulationError> {
    let steps = &trace.steps;
    if steps.is_empty() {
        return Err(EmulationError::MalformedTrace("no steps".into()));
    }
    if steps.iter().any(|s| s.member >= cover.len()) {
        return Err(EmulationError::MalformedTrace("member out of range".into()));
    }
    let dim = trace.dim;
    let mut out = Vec::with_capacity(7);
    let mut record = |property: u8, failure: Option<String>| {
        out.push(PropertyAudit {
            property,
            passed: failure.is_none(),
            detail: failure,
        })
    };

    let m_cfg = cfg.m_config();
    let mut fail = None;
    for (k, s) in steps.iter().enumerate() {
        let r = property_m(&s.sigma, &s.axes, s.level, &cover[s.member], cover, &m_cfg)?;
        if !r.holds {
            fail = Some(format!("step {}: M fails (contained = {})", k + 1, r.contained));
            break;
        }
    }
    record(1, fail);

    let fail = steps
        .windows(2)
        .position(|w| w[1].level > w[0].level)
        .map(|k| format!("L_{} < L_{}", k + 1, k + 2));
    record(2, fail);

    let mut fail = None;
    let mut prev = CoordSet::empty(dim)?;
    for (k, s) in steps.iter().enumerate() {
        if !cfg.family.admits(&prev, &s.axes) {
            fail = Some(format!("A_{} is not an admissible enlargement of A_{}", k + 1, k));
            break;
        }
        prev = s.axes;
    }
    record(3, fail);

    let mut fail = None;
    let mut prev = CoordSet::empty(dim)?;
    for (k, s) in steps.iter().enumerate() {
        let fresh = s.axes.difference(&prev);
        if !fresh.contains(s.pivot) || s.sigma.coords()[s.pivot] != 0 || fresh.len() < cfg.min_growth {
            fail = Some(format!("step {}: pivot {} or growth {} invalid", k + 1, s.pivot, fresh.len()));
            break;
        }
        prev = s.axes;
    }
    record(4, fail);

    let mut fail = None;
    'outer: for (k, later) in steps.iter().enumerate() {
        for (i, earlier) in steps[..=k].iter().enumerate() {
            if earlier.axes.iter().any(|a| later.sigma.coords()[a] != earlier.sigma.coords()[a]) {
                fail = Some(format!("σ_{} and σ_{} disagree on A_{}", k + 1, i + 1, i + 1));
                break 'outer;
            }
        }
    }
    record(5, fail);

    let last_axes = steps.last().expect("nonempty").axes;
    let fail = steps
        .iter()
        .position(|s| (0..dim).any(|i| !last_axes.contains(i) && s.sigma.coords()[i] != 0))
        .map(|k| format!("σ_{} nonzero outside A_m", k + 1));
    record(6, fail);

    let mut fail = None;
    for (i, w) in steps.windows(2).enumerate() {
        let probe = hat_ball(&w[1].sigma, &w[1].axes, 1.min(trace.bound))?;
        if cover[w[0].member].contains_all(&probe) {
            fail = Some(format!("B̂(σ_{}, A_{}, 1) lies inside U_{}", i + 2, i + 2, i + 1));
            break;
        }
    }
    record(7, fail);

    let final_membership = match (&trace.sigma_hat, trace.i0) {
        (Some(hat), Some(i0)) => steps[i0 - 1..].iter().all(|s| cover[s.member].contains(hat)),
        _ => false,
    };
    Ok(AuditReport {
        properties: out,
        final_membership,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covers::{colouring_to_cover, grid_image};
    use crate::labelings::{ColourId, Colouring};

    fn injective_cover(dim: usize, n: u32, scale: u32) -> Vec<GridSet> {
        let g = Grid::new(dim, n).unwrap();
        let phi = Colouring::from_fn(g, |i| ColourId(g.rank(i) as u64));
        grid_image(&colouring_to_cover(&phi).unwrap(), scale).unwrap()
    }

    #[test]
    fn whole_grid_member_rejected() {
        let g = Grid::new(2, 3).unwrap();
        let r = emulate_inductive_search(&[GridSet::full(g)], &EmulationConfig::default());
        assert!(matches!(r, Err(EmulationError::DiameterTooLarge { .. })));
    }

    #[test]
    fn uncovered_grid_rejected() {
        let g = Grid::new(1, 3).unwrap();
        let part = GridSet::from_predicate(g, |i| i.coords()[0] < 2);
        let r = emulate_inductive_search(&[part], &EmulationConfig::default());
        assert!(matches!(r, Err(EmulationError::Uncovered(_))));
    }

    #[test]
    fn injective_two_dimensional_trace_audits() {
        let cover = injective_cover(2, 3, 9);
        let cfg = EmulationConfig {
            min_growth: 1,
            ..EmulationConfig::default()
        };
        let trace = emulate_inductive_search(&cover, &cfg).unwrap();
        assert!(trace.success(), "{:?}", trace.stop);
        assert!(trace.steps.iter().all(|s| s.level >= 1 && s.level < 9));
        let audit = audit_trace(&trace, &cover, &cfg).unwrap();
        assert!(audit.passed(), "{audit:?}");
    }

    #[test]
    fn four_dimensional_prefix_audits() {
        let cover = injective_cover(4, 2, 4);
        let cfg = EmulationConfig {
            min_growth: 1,
            ..EmulationConfig::default()
        };
        let trace = emulate_inductive_search(&cover, &cfg).unwrap();
        assert!(!trace.steps.is_empty(), "{:?}", trace.stop);
        let audit = audit_trace(&trace, &cover, &cfg).unwrap();
        assert!(audit.passed(), "{audit:?}");
        assert!(trace.steps[0].level < 4);
    }

    #[test]
    fn tampered_trace_fails_audit() {
        let cover = injective_cover(2, 3, 9);
        let cfg = EmulationConfig {
            min_growth: 1,
            ..EmulationConfig::default()
        };
        let mut trace = emulate_inductive_search(&cover, &cfg).unwrap();
        trace.steps[0].level += 1;
        let audit = audit_trace(&trace, &cover, &cfg).unwrap();
        assert!(!audit.properties[0].passed);
    }

    #[test]
    fn stabilisation_index_counts_from_one() {
        let s = |level| TupleStep {
            sigma: Index::zero(1, 2).unwrap(),
            axes: CoordSet::full(1).unwrap(),
            level,
            member: 0,
            pivot: 0,
            escape: None,
            sampled: false,
        };
        assert_eq!(stabilisation_index(&[s(3), s(2), s(2)]), Some(2));
        assert_eq!(stabilisation_index(&[s(1)]), Some(1));
        assert_eq!(stabilisation_index(&[]), None);
    }
}
