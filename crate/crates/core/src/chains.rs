//! Finite-support indices, extension chains of growing colour sets, and the
//! nerve poset of a cover.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::covers::{BoxCover, RationalBox};
use crate::labelings::{ColourId, Colouring};
use crate::lattice::Index;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("coordinate {axis} is outside the window {window}")]
    OutsideWindow { axis: usize, window: usize },
    #[error("value {value} at coordinate {axis} is not in [1, {bound}]")]
    BadValue { axis: usize, value: u32, bound: u32 },
    #[error("bound must be at least 1")]
    ZeroBound,
    #[error("window {0} is larger than the colouring supports")]
    WindowTooLarge(usize),
}

/// An element of `[n]^{<ω}` with finite support, viewed through a window of
/// addressable coordinates `0..window`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SparseIndex {
    bound: u32,
    window: usize,
    support: BTreeMap<usize, u32>,
}

impl SparseIndex {
    pub fn new(bound: u32, window: usize, support: BTreeMap<usize, u32>) -> Result<Self, ChainError> {
        if bound == 0 {
            return Err(ChainError::ZeroBound);
        }
        for (&axis, &value) in &support {
            if axis >= window {
                return Err(ChainError::OutsideWindow { axis, window });
            }
            if value == 0 || value > bound {
                return Err(ChainError::BadValue { axis, value, bound });
            }
        }
        Ok(SparseIndex {
            bound,
            window,
            support,
        })
    }

    pub fn zero(bound: u32, window: usize) -> Self {
        SparseIndex {
            bound,
            window,
            support: BTreeMap::new(),
        }
    }

    /// Dense coordinates over the window; zeros are dropped from the support.
    pub fn from_dense(bound: u32, coords: &[u32]) -> Result<Self, ChainError> {
        let support = coords
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(i, &v)| (i, v))
            .collect();
        SparseIndex::new(bound, coords.len(), support)
    }

    pub fn bound(&self) -> u32 {
        self.bound
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn support(&self) -> &BTreeMap<usize, u32> {
        &self.support
    }

    pub fn value(&self, axis: usize) -> u32 {
        self.support.get(&axis).copied().unwrap_or(0)
    }

    pub fn dense(&self) -> Vec<u32> {
        (0..self.window).map(|i| self.value(i)).collect()
    }

    /// Same point viewed through a wider window.
    pub fn widen(&self, window: usize) -> Result<Self, ChainError> {
        SparseIndex::new(self.bound, window, self.support.clone())
    }

    /// `self` agrees with `other` on the support of `other`.
    pub fn extends(&self, other: &SparseIndex) -> bool {
        other.support.iter().all(|(&i, &v)| self.value(i) == v)
    }

    /// `K_σ` restricted to the window: every `σ + τ`, `τ ∈ {0,1}^window`.
    pub fn positive_cube(&self) -> Vec<SparseIndex> {
        let base = self.dense();
        let free: Vec<usize> = (0..self.window).filter(|&i| base[i] < self.bound).collect();
        (0..1u64 << free.len())
            .map(|bits| {
                let mut c = base.clone();
                for (j, &axis) in free.iter().enumerate() {
                    c[axis] += ((bits >> j) & 1) as u32;
                }
                SparseIndex::from_dense(self.bound, &c).expect("stays in range")
            })
            .collect()
    }
}

/// A colouring of finite-support indices.
pub trait SparseColouring: Sync {
    fn bound(&self) -> u32;
    /// Largest window the colouring can evaluate.
    fn max_window(&self) -> usize;
    fn colour(&self, sigma: &SparseIndex) -> ColourId;

    fn cube_palette(&self, sigma: &SparseIndex) -> BTreeSet<ColourId> {
        sigma.positive_cube().iter().map(|t| self.colour(t)).collect()
    }
}

/// Colour = the set of coordinates equal to `n`, as a bit mask.
#[derive(Debug, Clone, Copy)]
pub struct CanonicalSparse {
    pub bound: u32,
}

impl SparseColouring for CanonicalSparse {
    fn bound(&self) -> u32 {
        self.bound
    }

    fn max_window(&self) -> usize {
        64
    }

    fn colour(&self, sigma: &SparseIndex) -> ColourId {
        ColourId(
            sigma
                .support
                .iter()
                .filter(|(_, &v)| v == self.bound)
                .fold(0u64, |acc, (&i, _)| acc | 1 << i),
        )
    }
}

/// A dense colouring of `[n]^W` read as a colouring of indices supported in
/// the first `W` coordinates.
#[derive(Debug, Clone)]
pub struct WindowedColouring {
    pub colouring: Colouring,
}

impl SparseColouring for WindowedColouring {
    fn bound(&self) -> u32 {
        self.colouring.grid().bound()
    }

    fn max_window(&self) -> usize {
        self.colouring.grid().dim()
    }

    fn colour(&self, sigma: &SparseIndex) -> ColourId {
        let mut c = sigma.dense();
        c.resize(self.max_window(), 0);
        let idx = Index::new(self.bound(), c).expect("window within grid");
        self.colouring.colour(&idx).expect("same grid")
    }
}

/// Windows `W_k = start + (k − 1)·step`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSchedule {
    pub start: usize,
    pub step: usize,
}

impl Default for WindowSchedule {
    fn default() -> Self {
        WindowSchedule { start: 4, step: 2 }
    }
}

impl WindowSchedule {
    /// Window for the 1-based chain position `k`.
    pub fn window(&self, k: usize) -> usize {
        self.start + (k.max(1) - 1) * self.step
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainLink {
    pub sigma: SparseIndex,
    pub colour: ColourId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainReport {
    /// Longest chain found.
    pub chain: Vec<ChainLink>,
    pub reached_depth: bool,
    pub budget_exhausted: bool,
    pub nodes: usize,
}

struct Search<'a, C: SparseColouring> {
    phi: &'a C,
    depth: usize,
    schedule: WindowSchedule,
    budget: usize,
    nodes: usize,
    best: Vec<ChainLink>,
    exhausted: bool,
}

impl<C: SparseColouring> Search<'_, C> {
    fn run(&mut self, chain: &mut Vec<ChainLink>) -> bool {
        if chain.len() > self.best.len() {
            self.best = chain.clone();
        }
        if chain.len() == self.depth {
            return true;
        }
        let k = chain.len() + 1;
        let window = self.schedule.window(k).min(self.phi.max_window());
        let n = self.phi.bound();
        let base = match chain.last() {
            Some(link) => link.sigma.clone(),
            None => SparseIndex::zero(n, window),
        };
        let fixed: Vec<u32> = (0..window).map(|i| base.value(i)).collect();
        let free: Vec<usize> = (0..window).filter(|&i| fixed[i] == 0).collect();
        let used: BTreeSet<ColourId> = chain.iter().map(|l| l.colour).collect();
        // odometer over values of the coordinates outside the old support
        let mut digits = vec![0u32; free.len()];
        loop {
            if self.nodes >= self.budget {
                self.exhausted = true;
                return false;
            }
            self.nodes += 1;
            let mut coords = fixed.clone();
            for (j, &axis) in free.iter().enumerate() {
                coords[axis] = digits[j];
            }
            let sigma = SparseIndex::from_dense(n, &coords).expect("values in range");
            let palette = self.phi.cube_palette(&sigma);
            if used.is_subset(&palette) {
                for &colour in palette.difference(&used) {
                    chain.push(ChainLink {
                        sigma: sigma.clone(),
                        colour,
                    });
                    let done = self.run(chain);
                    chain.pop();
                    if done || self.exhausted {
                        return done;
                    }
                }
            }
            let mut j = digits.len();
            loop {
                if j == 0 {
                    return false;
                }
                j -= 1;
                digits[j] += 1;
                if digits[j] <= n {
                    break;
                }
                digits[j] = 0;
            }
        }
    }
}

/// Backtracking search for `σ_1, σ_2, …` with each `σ_{k+1}` extending
/// `σ_k` and distinct colours `τ_1, …, τ_k` all appearing on `K_{σ_k}`.
/// Candidates are visited in lexicographic order inside window `W_k`;
/// `budget` bounds the number of cube palettes evaluated.
pub fn extension_chain_search<C: SparseColouring>(
    phi: &C,
    depth: usize,
    schedule: WindowSchedule,
    budget: usize,
) -> ChainReport {
    let mut search = Search {
        phi,
        depth,
        schedule,
        budget,
        nodes: 0,
        best: Vec::new(),
        exhausted: false,
    };
    let mut chain = Vec::new();
    let reached = search.run(&mut chain);
    ChainReport {
        chain: search.best,
        reached_depth: reached,
        budget_exhausted: search.exhausted,
        nodes: search.nodes,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChainViolation {
    NotAnExtension { position: usize },
    RepeatedColour { position: usize },
    MissingColour { position: usize, colour: ColourId },
}

/// Checks both chain clauses from scratch: every `σ_{k+1}` extends `σ_k`,
/// and `{τ_1, …, τ_k} ⊆ φ(K_{σ_k})` with the `τ` pairwise distinct.
pub fn verify_extension_chain<C: SparseColouring>(phi: &C, chain: &[ChainLink]) -> Result<(), ChainViolation> {
    for k in 0..chain.len() {
        if k > 0 {
            let (prev, next) = (&chain[k - 1].sigma, &chain[k].sigma);
            if prev.support().iter().any(|(i, v)| next.value(*i) != *v) {
                return Err(ChainViolation::NotAnExtension { position: k });
            }
        }
        if chain[..k].iter().any(|l| l.colour == chain[k].colour) {
            return Err(ChainViolation::RepeatedColour { position: k });
        }
        let sigma = &chain[k].sigma;
        let base = sigma.dense();
        let mut seen = HashSet::new();
        for bits in 0..1u64 << base.len() {
            let c: Vec<u32> = base
                .iter()
                .enumerate()
                .map(|(i, &v)| (v + ((bits >> i) & 1) as u32).min(sigma.bound()))
                .collect();
            seen.insert(phi.colour(&SparseIndex::from_dense(sigma.bound(), &c).expect("in range")));
        }
        if let Some(link) = chain[..=k].iter().find(|l| !seen.contains(&l.colour)) {
            return Err(ChainViolation::MissingColour {
                position: k,
                colour: link.colour,
            });
        }
    }
    Ok(())
}

/// Intersecting subfamilies of a cover, ordered by inclusion. Level `j`
/// holds the families of `j + 1` members as sorted member positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NervePoset {
    pub labels: Vec<u64>,
    pub levels: Vec<Vec<Vec<usize>>>,
    pub max_size: usize,
    /// The last level reached `max_size`, so larger families were not tried.
    pub size_capped: bool,
    /// The element budget stopped the construction.
    pub budget_exhausted: bool,
}

impl NervePoset {
    pub fn len(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn elements(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.levels.iter().flatten()
    }

    pub fn label_set(&self, element: &[usize]) -> Vec<u64> {
        element.iter().map(|&i| self.labels[i]).collect()
    }

    /// Every facet of every element is itself an element.
    pub fn is_downward_closed(&self) -> bool {
        let all: HashSet<&Vec<usize>> = self.elements().collect();
        self.elements().filter(|e| e.len() > 1).all(|e| {
            (0..e.len()).all(|skip| {
                let facet: Vec<usize> = e.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, &v)| v).collect();
                all.contains(&facet)
            })
        })
    }
}

/// Whether the unions `regions` share a point: some choice of one box per
/// region has a nonempty intersection.
pub fn regions_intersect(regions: &[&[RationalBox]]) -> bool {
    fn go(regions: &[&[RationalBox]], acc: Option<RationalBox>) -> bool {
        match regions.split_first() {
            None => acc.is_some_and(|b| !b.is_empty()),
            Some((first, rest)) => first.iter().any(|b| {
                let next = match &acc {
                    None => b.clone(),
                    Some(a) => a.intersect(b),
                };
                !next.is_empty() && go(rest, Some(next))
            }),
        }
    }
    go(regions, None)
}

/// Builds the nerve level by level: a family of size `j + 1` is tested only
/// when all its facets are present. Stops at `max_size` or once more than
/// `element_budget` elements exist.
pub fn build_nerve_poset(cover: &BoxCover, max_size: usize, element_budget: usize) -> NervePoset {
    let members = cover.members();
    let labels: Vec<u64> = members.iter().map(|m| m.label).collect();
    let mut levels: Vec<Vec<Vec<usize>>> = Vec::new();
    let mut budget_exhausted = false;
    if max_size == 0 {
        return NervePoset {
            labels,
            levels,
            max_size,
            size_capped: true,
            budget_exhausted,
        };
    }
    levels.push((0..members.len()).map(|i| vec![i]).collect());
    let mut total = members.len();
    while levels.len() < max_size {
        let prev = levels.last().expect("nonempty");
        let present: HashSet<&Vec<usize>> = prev.iter().collect();
        let mut candidates = Vec::new();
        for (i, a) in prev.iter().enumerate() {
            for b in &prev[i + 1..] {
                if a[..a.len() - 1] != b[..b.len() - 1] {
                    break;
                }
                let mut cand = a.clone();
                cand.push(*b.last().expect("nonempty"));
                let facets_ok = (0..cand.len() - 2).all(|skip| {
                    let facet: Vec<usize> = cand.iter().enumerate().filter(|(j, _)| *j != skip).map(|(_, &v)| v).collect();
                    present.contains(&facet)
                });
                if facets_ok {
                    candidates.push(cand);
                }
            }
        }
        let next: Vec<Vec<usize>> = candidates
            .into_par_iter()
            .filter(|cand| {
                let regions: Vec<&[RationalBox]> = cand.iter().map(|&i| members[i].region.as_slice()).collect();
                regions_intersect(&regions)
            })
            .collect();
        if next.is_empty() {
            break;
        }
        total += next.len();
        levels.push(next);
        if total > element_budget {
            budget_exhausted = true;
            break;
        }
    }
    let size_capped = levels.len() == max_size;
    NervePoset {
        labels,
        levels,
        max_size,
        size_capped,
        budget_exhausted,
    }
}

/// Longest inclusion chain: the size of the largest element, since the
/// poset is downward closed.
pub fn max_chain_length(poset: &NervePoset) -> usize {
    poset
        .levels
        .iter()
        .rev()
        .find(|l| !l.is_empty())
        .map_or(0, |l| l[0].len())
}

/// Longest chain by dynamic programming over facets, without assuming
/// downward closure.
pub fn max_chain_length_dp(poset: &NervePoset) -> usize {
    let mut best: BTreeMap<&Vec<usize>, usize> = BTreeMap::new();
    let mut overall = 0;
    for level in &poset.levels {
        for e in level {
            let below = (0..e.len())
                .filter_map(|skip| {
                    let facet: Vec<usize> = e.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, &v)| v).collect();
                    best.get(&facet).copied()
                })
                .max()
                .unwrap_or(0);
            let len = below + 1;
            overall = overall.max(len);
            best.insert(e, len);
        }
    }
    overall
}

/// Some intersecting family of exactly `target` members, as labels.
pub fn nested_cover_chain(cover: &BoxCover, target: usize) -> Option<Vec<u64>> {
    if target == 0 {
        return Some(Vec::new());
    }
    if target > cover.members().len() {
        return None;
    }
    let poset = build_nerve_poset(cover, target, usize::MAX);
    poset
        .levels
        .get(target - 1)
        .and_then(|l| l.first())
        .map(|e| poset.label_set(e))
}

#[derive(Serialize)]
struct AdjacencyRecord {
    element: Vec<u64>,
    facets: Vec<Vec<u64>>,
}

/// JSON array of `{element, facets}` records, facets given by labels.
pub fn poset_to_json(poset: &NervePoset) -> serde_json::Value {
    let records: Vec<AdjacencyRecord> = poset
        .elements()
        .map(|e| AdjacencyRecord {
            element: poset.label_set(e),
            facets: if e.len() < 2 {
                Vec::new()
            } else {
                (0..e.len())
                    .map(|skip| {
                        e.iter()
                            .enumerate()
                            .filter(|(i, _)| *i != skip)
                            .map(|(_, &v)| poset.labels[v])
                            .collect()
                    })
                    .collect()
            },
        })
        .collect();
    serde_json::to_value(records).expect("plain records serialise")
}
