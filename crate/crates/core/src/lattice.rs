//! The combinatorial ground floor: points of the grid `[n]^N`, truncated
//! addition, positive cubes, sup distance, combinatorial balls and the local
//! relative Lebesgue number of a grid cover.
//!
//! Everything here is a pure function of its inputs. Set-valued results are
//! returned in lexicographic order of coordinates.

use std::fmt;
use std::str::FromStr;

use bitvec::vec::BitVec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("invalid grid shape: dim {dim}, bound {bound} (both must be at least 1)")]
    InvalidShape { dim: usize, bound: u32 },
    #[error("coordinate {axis} has value {value}, outside [0, {bound}]")]
    CoordOutOfRange { axis: usize, value: i64, bound: u32 },
    #[error("shape mismatch: (N={0}, n={1}) vs (N={2}, n={3})")]
    Mismatch(usize, u32, usize, u32),
    #[error("radius {k} outside [0, {bound}]")]
    RadiusOutOfRange { k: u32, bound: u32 },
    #[error("coordinate {axis} outside a {dim}-dimensional coordinate set")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("coordinate sets support at most 64 axes, got {0}")]
    TooManyAxes(usize),
    #[error("grid [{bound}]^{dim} is too large to enumerate")]
    GridTooLarge { dim: usize, bound: u32 },
    #[error("(A,k)-function value {value} at axis {axis} violates bound {k} or support")]
    BadFunctionValue { axis: usize, value: i64, k: u32 },
    #[error("empty cover")]
    EmptyCover,
    #[error("cannot parse index: {0}")]
    Parse(String),
}

pub type Result<T, E = LatticeError> = std::result::Result<T, E>;

/// Shape of the grid `[bound]^dim`, i.e. `{0..=bound}^dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    bound: u32,
}

impl Grid {
    pub fn new(dim: usize, bound: u32) -> Result<Self> {
        if dim == 0 || bound == 0 {
            return Err(LatticeError::InvalidShape { dim, bound });
        }
        let side = bound as u128 + 1;
        let mut total: u128 = 1;
        for _ in 0..dim {
            total = total.saturating_mul(side);
        }
        if total > (1u128 << 40) {
            return Err(LatticeError::GridTooLarge { dim, bound });
        }
        Ok(Grid { dim, bound })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bound(&self) -> u32 {
        self.bound
    }

    /// Number of grid points, `(bound + 1)^dim`.
    pub fn len(&self) -> usize {
        (self.bound as usize + 1).pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Lexicographic rank; axis 0 is the most significant digit.
    pub fn rank(&self, idx: &Index) -> usize {
        let side = self.bound as usize + 1;
        idx.coords
            .iter()
            .fold(0usize, |acc, &c| acc * side + c as usize)
    }

    pub fn unrank(&self, mut rank: usize) -> Index {
        let side = self.bound as usize + 1;
        let mut coords = vec![0u32; self.dim];
        for slot in coords.iter_mut().rev() {
            *slot = (rank % side) as u32;
            rank /= side;
        }
        Index {
            bound: self.bound,
            coords,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Index> + '_ {
        (0..self.len()).map(move |r| self.unrank(r))
    }

    pub fn check(&self, idx: &Index) -> Result<()> {
        if idx.dim() != self.dim || idx.bound != self.bound {
            return Err(LatticeError::Mismatch(
                self.dim,
                self.bound,
                idx.dim(),
                idx.bound,
            ));
        }
        Ok(())
    }
}

/// A point of `[n]^N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Index {
    bound: u32,
    coords: Vec<u32>,
}

impl Index {
    pub fn new(bound: u32, coords: Vec<u32>) -> Result<Self> {
        if coords.is_empty() || bound == 0 {
            return Err(LatticeError::InvalidShape {
                dim: coords.len(),
                bound,
            });
        }
        if let Some((axis, &value)) = coords.iter().enumerate().find(|(_, &c)| c > bound) {
            return Err(LatticeError::CoordOutOfRange {
                axis,
                value: value as i64,
                bound,
            });
        }
        Ok(Index { bound, coords })
    }

    pub fn zero(dim: usize, bound: u32) -> Result<Self> {
        Index::new(bound, vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn bound(&self) -> u32 {
        self.bound
    }

    pub fn coords(&self) -> &[u32] {
        &self.coords
    }

    pub fn grid(&self) -> Grid {
        Grid {
            dim: self.dim(),
            bound: self.bound,
        }
    }

    /// Number of coordinates equal to zero.
    pub fn zeros(&self) -> usize {
        self.coords.iter().filter(|&&c| c == 0).count()
    }

    fn same_shape(&self, other: &Index) -> Result<()> {
        if self.dim() != other.dim() || self.bound != other.bound {
            return Err(LatticeError::Mismatch(
                self.dim(),
                self.bound,
                other.dim(),
                other.bound,
            ));
        }
        Ok(())
    }

    fn with_coords(&self, coords: Vec<u32>) -> Index {
        Index {
            bound: self.bound,
            coords,
        }
    }
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={} N={} : ", self.bound, self.dim())?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for Index {
    type Err = LatticeError;

    /// Parses the text form `n=2 N=3 : 1,0,2`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || LatticeError::Parse(s.to_string());
        let (head, body) = s.split_once(':').ok_or_else(bad)?;
        let mut bound = None;
        let mut dim = None;
        for tok in head.split_whitespace() {
            if let Some(v) = tok.strip_prefix("n=") {
                bound = Some(v.parse::<u32>().map_err(|_| bad())?);
            } else if let Some(v) = tok.strip_prefix("N=") {
                dim = Some(v.parse::<usize>().map_err(|_| bad())?);
            } else {
                return Err(bad());
            }
        }
        let (bound, dim) = (bound.ok_or_else(bad)?, dim.ok_or_else(bad)?);
        let coords = body
            .trim()
            .split(',')
            .map(|t| t.trim().parse::<u32>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        if coords.len() != dim {
            return Err(bad());
        }
        Index::new(bound, coords)
    }
}

/// `(σ+τ)(i) = min(n, σ(i)+τ(i))`.
pub fn truncated_add(sigma: &Index, tau: &Index) -> Result<Index> {
    sigma.same_shape(tau)?;
    let n = sigma.bound;
    let coords = sigma
        .coords
        .iter()
        .zip(&tau.coords)
        .map(|(&a, &b)| (a + b).min(n))
        .collect();
    Ok(sigma.with_coords(coords))
}

/// The positive cube `K_σ = {σ + τ : τ ∈ {0,1}^N}`, deduplicated and sorted.
///
/// Axes with `σ(i) = n` are clamped, so the cube has `2^(#{i : σ(i) < n})`
/// elements.
pub fn positive_cube(sigma: &Index) -> Vec<Index> {
    let n = sigma.bound;
    let ranges: Vec<(u32, u32)> = sigma
        .coords
        .iter()
        .map(|&c| (c, (c + 1).min(n)))
        .collect();
    AxisRanges::new(ranges)
        .map(|coords| sigma.with_coords(coords))
        .collect()
}

pub fn sup_distance(sigma: &Index, tau: &Index) -> Result<u32> {
    sigma.same_shape(tau)?;
    Ok(sigma
        .coords
        .iter()
        .zip(&tau.coords)
        .map(|(&a, &b)| a.abs_diff(b))
        .max()
        .unwrap_or(0))
}

/// A subset of the axes `{0, …, N−1}`, stored as a bit mask (N ≤ 64).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CoordSet {
    dim: usize,
    mask: u64,
}

impl CoordSet {
    pub fn empty(dim: usize) -> Result<Self> {
        if dim > 64 {
            return Err(LatticeError::TooManyAxes(dim));
        }
        Ok(CoordSet { dim, mask: 0 })
    }

    pub fn full(dim: usize) -> Result<Self> {
        let mut s = CoordSet::empty(dim)?;
        s.mask = full_mask(dim);
        Ok(s)
    }

    pub fn from_axes(dim: usize, axes: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut s = CoordSet::empty(dim)?;
        for a in axes {
            s.insert(a)?;
        }
        Ok(s)
    }

    pub fn from_mask(dim: usize, mask: u64) -> Result<Self> {
        let s = CoordSet::empty(dim)?;
        if mask & !full_mask(dim) != 0 {
            return Err(LatticeError::AxisOutOfRange {
                axis: 63 - mask.leading_zeros() as usize,
                dim,
            });
        }
        Ok(CoordSet { mask, ..s })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn insert(&mut self, axis: usize) -> Result<()> {
        if axis >= self.dim {
            return Err(LatticeError::AxisOutOfRange {
                axis,
                dim: self.dim,
            });
        }
        self.mask |= 1 << axis;
        Ok(())
    }

    pub fn contains(&self, axis: usize) -> bool {
        axis < self.dim && self.mask >> axis & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn is_full(&self) -> bool {
        self.mask == full_mask(self.dim)
    }

    pub fn is_subset(&self, other: &CoordSet) -> bool {
        self.mask & !other.mask == 0
    }

    pub fn complement(&self) -> CoordSet {
        CoordSet {
            dim: self.dim,
            mask: !self.mask & full_mask(self.dim),
        }
    }

    pub fn union(&self, other: &CoordSet) -> CoordSet {
        CoordSet {
            dim: self.dim,
            mask: self.mask | other.mask,
        }
    }

    pub fn difference(&self, other: &CoordSet) -> CoordSet {
        CoordSet {
            dim: self.dim,
            mask: self.mask & !other.mask,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.dim).filter(move |&a| self.contains(a))
    }
}

impl fmt::Display for CoordSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, a) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str("}")
    }
}

fn full_mask(dim: usize) -> u64 {
    if dim >= 64 {
        u64::MAX
    } else {
        (1u64 << dim) - 1
    }
}

/// An `(A,k)`-function: values in `[−k, k]`, zero off the support `A`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AKFunction {
    support: CoordSet,
    k: u32,
    values: Vec<i64>,
}

impl AKFunction {
    pub fn new(support: CoordSet, k: u32, values: Vec<i64>) -> Result<Self> {
        if values.len() != support.dim() {
            return Err(LatticeError::AxisOutOfRange {
                axis: values.len(),
                dim: support.dim(),
            });
        }
        for (axis, &value) in values.iter().enumerate() {
            if value.unsigned_abs() > k as u64 || (value != 0 && !support.contains(axis)) {
                return Err(LatticeError::BadFunctionValue { axis, value, k });
            }
        }
        Ok(AKFunction { support, k, values })
    }

    pub fn zero(support: CoordSet, k: u32) -> Self {
        AKFunction {
            values: vec![0; support.dim()],
            support,
            k,
        }
    }

    /// The function `τ − σ`; fails unless it is an `(A,k)`-function.
    pub fn difference(sigma: &Index, tau: &Index, support: CoordSet, k: u32) -> Result<Self> {
        sigma.same_shape(tau)?;
        let values = sigma
            .coords
            .iter()
            .zip(&tau.coords)
            .map(|(&s, &t)| t as i64 - s as i64)
            .collect();
        AKFunction::new(support, k, values)
    }

    pub fn support(&self) -> &CoordSet {
        &self.support
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    /// `σ + χ`, required to stay inside `[0, n]^N`.
    pub fn apply(&self, sigma: &Index) -> Result<Index> {
        if sigma.dim() != self.values.len() {
            return Err(LatticeError::Mismatch(
                sigma.dim(),
                sigma.bound,
                self.values.len(),
                sigma.bound,
            ));
        }
        let mut coords = Vec::with_capacity(sigma.dim());
        for (axis, (&s, &v)) in sigma.coords.iter().zip(&self.values).enumerate() {
            let value = s as i64 + v;
            if value < 0 || value > sigma.bound as i64 {
                return Err(LatticeError::CoordOutOfRange {
                    axis,
                    value,
                    bound: sigma.bound,
                });
            }
            coords.push(value as u32);
        }
        Ok(sigma.with_coords(coords))
    }
}

/// Odometer over a product of inclusive integer ranges, lexicographic order.
#[derive(Debug, Clone)]
pub(crate) struct AxisRanges {
    ranges: Vec<(u32, u32)>,
    current: Option<Vec<u32>>,
}

impl AxisRanges {
    pub(crate) fn new(ranges: Vec<(u32, u32)>) -> Self {
        let current = if ranges.iter().all(|&(lo, hi)| lo <= hi) {
            Some(ranges.iter().map(|&(lo, _)| lo).collect())
        } else {
            None
        };
        AxisRanges { ranges, current }
    }
}

impl Iterator for AxisRanges {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        let out = self.current.clone()?;
        let cur = self.current.as_mut().expect("checked above");
        let mut axis = cur.len();
        loop {
            if axis == 0 {
                self.current = None;
                break;
            }
            axis -= 1;
            if cur[axis] < self.ranges[axis].1 {
                cur[axis] += 1;
                break;
            }
            cur[axis] = self.ranges[axis].0;
        }
        Some(out)
    }
}

fn check_radius(sigma: &Index, a: &CoordSet, k: u32) -> Result<()> {
    if k > sigma.bound {
        return Err(LatticeError::RadiusOutOfRange {
            k,
            bound: sigma.bound,
        });
    }
    if a.dim() != sigma.dim() {
        return Err(LatticeError::Mismatch(
            sigma.dim(),
            sigma.bound,
            a.dim(),
            sigma.bound,
        ));
    }
    Ok(())
}

fn radius_range(c: u32, k: u32, n: u32) -> (u32, u32) {
    (c.saturating_sub(k), (c + k).min(n))
}

fn ball_ranges(sigma: &Index, perturbed: &CoordSet, k: u32) -> Vec<(u32, u32)> {
    sigma
        .coords
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            if perturbed.contains(i) {
                radius_range(c, k, sigma.bound)
            } else {
                (c, c)
            }
        })
        .collect()
}

/// `B(σ, A, k)`: perturb coordinates in `A` by at most `k`, fix the rest.
pub fn ball(sigma: &Index, a: &CoordSet, k: u32) -> Result<Vec<Index>> {
    check_radius(sigma, a, k)?;
    Ok(AxisRanges::new(ball_ranges(sigma, a, k))
        .map(|c| sigma.with_coords(c))
        .collect())
}

/// Finite form of `B̂(σ, A, k)`: coordinates in `A` are fixed, every other
/// coordinate is perturbed by at most `k` (clipped to `[0, n]`).
pub fn hat_ball(sigma: &Index, a: &CoordSet, k: u32) -> Result<Vec<Index>> {
    check_radius(sigma, a, k)?;
    Ok(AxisRanges::new(ball_ranges(sigma, &a.complement(), k))
        .map(|c| sigma.with_coords(c))
        .collect())
}

/// A subset of `[n]^N`, as a dense bitset indexed by lexicographic rank.
#[derive(Clone, PartialEq, Eq)]
pub struct GridSet {
    grid: Grid,
    bits: BitVec,
}

impl fmt::Debug for GridSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridSet")
            .field("grid", &self.grid)
            .field("len", &self.len())
            .finish()
    }
}

impl GridSet {
    pub fn empty(grid: Grid) -> Self {
        GridSet {
            grid,
            bits: BitVec::repeat(false, grid.len()),
        }
    }

    pub fn full(grid: Grid) -> Self {
        GridSet {
            grid,
            bits: BitVec::repeat(true, grid.len()),
        }
    }

    pub fn from_predicate(grid: Grid, mut pred: impl FnMut(&Index) -> bool) -> Self {
        let mut bits = BitVec::with_capacity(grid.len());
        for idx in grid.iter() {
            bits.push(pred(&idx));
        }
        GridSet { grid, bits }
    }

    pub fn from_indices<'a>(grid: Grid, items: impl IntoIterator<Item = &'a Index>) -> Result<Self> {
        let mut set = GridSet::empty(grid);
        for idx in items {
            set.insert(idx)?;
        }
        Ok(set)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn insert(&mut self, idx: &Index) -> Result<()> {
        self.grid.check(idx)?;
        let r = self.grid.rank(idx);
        self.bits.set(r, true);
        Ok(())
    }

    /// Membership; indices of a different shape are never members.
    pub fn contains(&self, idx: &Index) -> bool {
        self.grid.check(idx).is_ok() && self.bits[self.grid.rank(idx)]
    }

    pub(crate) fn contains_coords(&self, coords: &[u32]) -> bool {
        let side = self.grid.bound as usize + 1;
        let r = coords.iter().fold(0usize, |acc, &c| acc * side + c as usize);
        self.bits[r]
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.not_any()
    }

    pub fn is_subset(&self, other: &GridSet) -> bool {
        self.grid == other.grid
            && self
                .bits
                .iter_ones()
                .all(|r| other.bits[r])
    }

    pub fn contains_all<'a>(&self, items: impl IntoIterator<Item = &'a Index>) -> bool {
        items.into_iter().all(|i| self.contains(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = Index> + '_ {
        self.bits.iter_ones().map(move |r| self.grid.unrank(r))
    }

    /// Sup-distance diameter; `None` for the empty set.
    pub fn diameter(&self) -> Option<u32> {
        if self.is_empty() {
            return None;
        }
        let mut lo = vec![u32::MAX; self.grid.dim];
        let mut hi = vec![0u32; self.grid.dim];
        for idx in self.iter() {
            for (axis, &c) in idx.coords.iter().enumerate() {
                lo[axis] = lo[axis].min(c);
                hi[axis] = hi[axis].max(c);
            }
        }
        lo.iter().zip(&hi).map(|(l, h)| h - l).max()
    }
}

fn check_cover(sigma: &Index, cover: &[GridSet]) -> Result<()> {
    let first = cover.first().ok_or(LatticeError::EmptyCover)?;
    for g in cover {
        if g.grid != first.grid {
            return Err(LatticeError::Mismatch(
                first.grid.dim,
                first.grid.bound,
                g.grid.dim,
                g.grid.bound,
            ));
        }
    }
    first.grid.check(sigma)
}

/// Largest `k` with `B̂(σ, A, k) ⊆ g`, or `None` when `σ ∉ g`.
///
/// Computed from the nearest non-member of `g` that agrees with `σ` on `A`,
/// measured in sup distance over the free axes.
pub(crate) fn member_radius(sigma: &Index, a: &CoordSet, g: &GridSet) -> Option<u32> {
    if !g.contains(sigma) {
        return None;
    }
    let n = sigma.bound;
    let ranges: Vec<(u32, u32)> = sigma
        .coords
        .iter()
        .enumerate()
        .map(|(i, &c)| if a.contains(i) { (c, c) } else { (0, n) })
        .collect();
    let mut nearest = u32::MAX;
    for coords in AxisRanges::new(ranges) {
        if g.contains_coords(&coords) {
            continue;
        }
        let d = coords
            .iter()
            .zip(&sigma.coords)
            .map(|(&x, &s)| x.abs_diff(s))
            .max()
            .unwrap_or(0);
        nearest = nearest.min(d);
        if nearest == 1 {
            break;
        }
    }
    Some(if nearest == u32::MAX { n } else { (nearest - 1).min(n) })
}

/// The local relative Lebesgue number `ℓ(σ, A, 𝒢)`: the largest `k ∈ [0, n]`
/// such that `B̂(σ, A, k)` lies inside one member. `None` when `σ` itself is
/// uncovered.
pub fn local_lebesgue(sigma: &Index, a: &CoordSet, cover: &[GridSet]) -> Result<Option<u32>> {
    check_cover(sigma, cover)?;
    if a.dim() != sigma.dim() {
        return Err(LatticeError::Mismatch(
            sigma.dim(),
            sigma.bound,
            a.dim(),
            sigma.bound,
        ));
    }
    Ok(cover.iter().filter_map(|g| member_radius(sigma, a, g)).max())
}

/// Which strict supersets `A′ ⊋ A` count as admissible enlargements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyPolicy {
    /// Strict supersets that still leave at least one axis free.
    #[default]
    CoInfinite,
    /// All strict supersets, the full axis set included.
    FiniteSubsets,
}

impl FamilyPolicy {
    pub fn admits(&self, base: &CoordSet, candidate: &CoordSet) -> bool {
        base.is_subset(candidate)
            && base != candidate
            && (matches!(self, FamilyPolicy::FiniteSubsets) || !candidate.is_full())
    }
}

/// Enumeration of candidate supersets: exhaustive up to `exhaustive_dim`
/// axes, a seeded sample of `sample_size` above.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupersetBudget {
    pub exhaustive_dim: usize,
    pub sample_size: usize,
    pub seed: u64,
}

impl Default for SupersetBudget {
    fn default() -> Self {
        SupersetBudget {
            exhaustive_dim: 16,
            sample_size: 4096,
            seed: 0,
        }
    }
}

/// Admissible strict supersets of `base` in increasing mask order, plus a
/// flag telling whether the list was sampled.
pub fn candidate_supersets(
    base: &CoordSet,
    policy: FamilyPolicy,
    budget: &SupersetBudget,
) -> (Vec<CoordSet>, bool) {
    let free = base.complement().mask;
    if base.dim() <= budget.exhaustive_dim {
        let mut out = Vec::new();
        let mut sub = free;
        // standard submask walk, visits every nonempty submask of `free`
        while sub != 0 {
            let cand = CoordSet {
                dim: base.dim(),
                mask: base.mask | sub,
            };
            if policy.admits(base, &cand) {
                out.push(cand);
            }
            sub = (sub - 1) & free;
        }
        out.sort();
        (out, false)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
        let free_axes: Vec<usize> = base.complement().iter().collect();
        let mut out = Vec::with_capacity(budget.sample_size);
        let mut attempts = 0;
        while out.len() < budget.sample_size && attempts < budget.sample_size * 8 {
            attempts += 1;
            let mut mask = base.mask;
            for &a in &free_axes {
                if rng.gen_bool(0.5) {
                    mask |= 1 << a;
                }
            }
            let cand = CoordSet {
                dim: base.dim(),
                mask,
            };
            if policy.admits(base, &cand) {
                out.push(cand);
            }
        }
        out.sort();
        out.dedup();
        (out, true)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MConfig {
    pub family: FamilyPolicy,
    /// An index belongs to the finite stand-in for `S` when it has at least
    /// this many zero coordinates.
    pub min_zeros: usize,
    pub budget: SupersetBudget,
}

impl Default for MConfig {
    fn default() -> Self {
        MConfig {
            family: FamilyPolicy::CoInfinite,
            min_zeros: 1,
            budget: SupersetBudget::default(),
        }
    }
}

/// A counterexample to the second clause of `M`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MWitness {
    pub extension: Index,
    pub axes: CoordSet,
    pub member: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MReport {
    pub holds: bool,
    pub contained: bool,
    /// `k ≥ n`: the second clause has nothing to check.
    pub ceiling_vacuous: bool,
    pub witness: Option<MWitness>,
    pub extensions_checked: usize,
    pub supersets_checked: usize,
    pub sampled: bool,
}

/// Property `M(σ, A, k, G, 𝒢)`: `B̂(σ,A,k) ⊆ G`, and no extension
/// `σ′ ∈ B̂(σ,A,k) ∩ S` has `B̂(σ′,A′,k+1)` inside any member for an
/// admissible `A′ ⊋ A`.
pub fn property_m(
    sigma: &Index,
    a: &CoordSet,
    k: u32,
    g: &GridSet,
    cover: &[GridSet],
    cfg: &MConfig,
) -> Result<MReport> {
    check_cover(sigma, cover)?;
    check_radius(sigma, a, k.min(sigma.bound))?;
    let n = sigma.bound;
    let mut report = MReport {
        holds: false,
        contained: false,
        ceiling_vacuous: false,
        witness: None,
        extensions_checked: 0,
        supersets_checked: 0,
        sampled: false,
    };
    let ball = hat_ball(sigma, a, k.min(n))?;
    report.contained = g.contains_all(&ball);
    if !report.contained {
        return Ok(report);
    }
    if k >= n {
        report.ceiling_vacuous = true;
        report.holds = true;
        return Ok(report);
    }
    let (supersets, sampled) = candidate_supersets(a, cfg.family, &cfg.budget);
    report.sampled = sampled;
    for ext in ball.iter().filter(|s| s.zeros() >= cfg.min_zeros) {
        report.extensions_checked += 1;
        for sup in &supersets {
            report.supersets_checked += 1;
            let hit = cover
                .iter()
                .position(|gp| member_radius(ext, sup, gp).is_some_and(|r| r > k));
            if let Some(member) = hit {
                report.witness = Some(MWitness {
                    extension: ext.clone(),
                    axes: *sup,
                    member,
                });
                return Ok(report);
            }
        }
    }
    report.holds = true;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(n: u32, c: &[u32]) -> Index {
        Index::new(n, c.to_vec()).unwrap()
    }

    fn set(dim: usize, axes: &[usize]) -> CoordSet {
        CoordSet::from_axes(dim, axes.iter().copied()).unwrap()
    }

    #[test]
    fn truncated_add_examples() {
        assert_eq!(
            truncated_add(&idx(3, &[2]), &idx(3, &[2])).unwrap(),
            idx(3, &[3])
        );
        let s = idx(4, &[1, 4, 0]);
        assert_eq!(truncated_add(&s, &Index::zero(3, 4).unwrap()).unwrap(), s);
        assert_eq!(
            truncated_add(&idx(2, &[1, 2, 0]), &idx(2, &[1, 1, 1])).unwrap(),
            idx(2, &[2, 2, 1])
        );
        assert!(truncated_add(&idx(2, &[1]), &idx(3, &[1])).is_err());
        assert!(truncated_add(&idx(2, &[1]), &idx(2, &[1, 1])).is_err());
    }

    #[test]
    fn positive_cube_examples() {
        assert_eq!(
            positive_cube(&idx(2, &[0, 0])),
            vec![idx(2, &[0, 0]), idx(2, &[0, 1]), idx(2, &[1, 0]), idx(2, &[1, 1])]
        );
        assert_eq!(positive_cube(&idx(2, &[2, 2])), vec![idx(2, &[2, 2])]);
        assert_eq!(
            positive_cube(&idx(2, &[1, 2])),
            vec![idx(2, &[1, 2]), idx(2, &[2, 2])]
        );
    }

    #[test]
    fn sup_distance_examples() {
        let s = idx(4, &[1, 2, 4]);
        assert_eq!(sup_distance(&s, &s).unwrap(), 0);
        assert_eq!(sup_distance(&idx(3, &[0, 3]), &idx(3, &[3, 3])).unwrap(), 3);
        assert_eq!(sup_distance(&s, &idx(4, &[3, 2, 0])).unwrap(), 4);
    }

    #[test]
    fn ball_examples() {
        let s = idx(2, &[1, 0]);
        assert_eq!(ball(&s, &set(2, &[]), 2).unwrap(), vec![s.clone()]);
        assert_eq!(
            ball(&s, &set(2, &[0]), 1).unwrap(),
            vec![idx(2, &[0, 0]), idx(2, &[1, 0]), idx(2, &[2, 0])]
        );
        let all = ball(&idx(2, &[0, 0]), &set(2, &[0, 1]), 2).unwrap();
        assert_eq!(all.len(), 9);
        assert_eq!(all, Grid::new(2, 2).unwrap().iter().collect::<Vec<_>>());
        assert!(matches!(
            ball(&s, &set(2, &[0]), 3),
            Err(LatticeError::RadiusOutOfRange { .. })
        ));
    }

    #[test]
    fn hat_ball_examples() {
        let s = idx(2, &[1, 1]);
        assert_eq!(hat_ball(&s, &CoordSet::full(2).unwrap(), 2).unwrap(), vec![s.clone()]);
        assert_eq!(
            hat_ball(&s, &CoordSet::empty(2).unwrap(), 2).unwrap().len(),
            9
        );
        assert_eq!(
            hat_ball(&s, &set(2, &[0]), 1).unwrap(),
            vec![idx(2, &[1, 0]), idx(2, &[1, 1]), idx(2, &[1, 2])]
        );
    }

    #[test]
    fn local_lebesgue_examples() {
        let grid = Grid::new(2, 3).unwrap();
        let s = idx(3, &[1, 2]);
        let none = CoordSet::empty(2).unwrap();
        assert_eq!(
            local_lebesgue(&s, &none, &[GridSet::full(grid)]).unwrap(),
            Some(3)
        );
        let single = GridSet::from_indices(grid, [&s]).unwrap();
        assert_eq!(local_lebesgue(&s, &none, &[single]).unwrap(), Some(0));

        let g1 = Grid::new(1, 2).unwrap();
        let low = GridSet::from_indices(g1, [&idx(2, &[0]), &idx(2, &[1])]).unwrap();
        let high = GridSet::from_indices(g1, [&idx(2, &[1]), &idx(2, &[2])]).unwrap();
        // B̂((1), ∅, 1) = {0,1,2} fits neither member, so only k = 0 survives
        assert_eq!(
            local_lebesgue(&idx(2, &[1]), &CoordSet::empty(1).unwrap(), &[low.clone(), high.clone()])
                .unwrap(),
            Some(0)
        );
        assert_eq!(
            local_lebesgue(&idx(2, &[0]), &CoordSet::empty(1).unwrap(), &[low.clone(), high])
                .unwrap(),
            Some(1)
        );
        assert_eq!(
            local_lebesgue(&idx(2, &[2]), &CoordSet::empty(1).unwrap(), std::slice::from_ref(&low)).unwrap(),
            None
        );
        assert_eq!(
            local_lebesgue(&idx(2, &[2]), &CoordSet::empty(1).unwrap(), &[]),
            Err(LatticeError::EmptyCover)
        );
    }

    #[test]
    fn property_m_trivial_cases() {
        let grid = Grid::new(2, 2).unwrap();
        let s = idx(2, &[0, 1]);
        let a = CoordSet::empty(2).unwrap();
        let full = GridSet::full(grid);
        let r = property_m(&s, &a, 2, &full, std::slice::from_ref(&full), &MConfig::default()).unwrap();
        assert!(r.holds && r.ceiling_vacuous);

        let empty = GridSet::empty(grid);
        let r = property_m(&s, &a, 0, &empty, &[full], &MConfig::default()).unwrap();
        assert!(!r.holds && !r.contained);
    }

    #[test]
    fn candidate_supersets_respect_policy() {
        let base = set(3, &[1]);
        let b = SupersetBudget::default();
        let (co, sampled) = candidate_supersets(&base, FamilyPolicy::CoInfinite, &b);
        assert!(!sampled);
        assert_eq!(co, vec![set(3, &[0, 1]), set(3, &[1, 2])]);
        let (fin, _) = candidate_supersets(&base, FamilyPolicy::FiniteSubsets, &b);
        assert_eq!(fin.len(), 3);
        assert!(fin.contains(&CoordSet::full(3).unwrap()));
    }

    #[test]
    fn superset_sampling_above_cap() {
        let base = CoordSet::empty(20).unwrap();
        let b = SupersetBudget {
            exhaustive_dim: 16,
            sample_size: 64,
            seed: 3,
        };
        let (list, sampled) = candidate_supersets(&base, FamilyPolicy::CoInfinite, &b);
        assert!(sampled);
        assert!(!list.is_empty() && list.len() <= 64);
        assert!(list.iter().all(|s| !s.is_empty() && !s.is_full()));
        assert_eq!(list, candidate_supersets(&base, FamilyPolicy::CoInfinite, &b).0);
    }

    #[test]
    fn index_text_form() {
        let s: Index = "n=2 N=3 : 1,0,2".parse().unwrap();
        assert_eq!(s, idx(2, &[1, 0, 2]));
        assert_eq!(s.to_string(), "n=2 N=3 : 1,0,2");
        assert!("n=2 N=2 : 1,0,2".parse::<Index>().is_err());
        assert!("n=2 N=1 : 3".parse::<Index>().is_err());
    }

    #[test]
    fn ak_function_support() {
        let a = set(3, &[0, 2]);
        assert!(AKFunction::new(a, 2, vec![-2, 0, 1]).is_ok());
        assert!(AKFunction::new(a, 2, vec![0, 1, 0]).is_err());
        assert!(AKFunction::new(a, 1, vec![2, 0, 0]).is_err());
        let s = idx(3, &[1, 1, 1]);
        let chi = AKFunction::new(a, 1, vec![1, 0, -1]).unwrap();
        assert_eq!(chi.apply(&s).unwrap(), idx(3, &[2, 1, 0]));
        // every element of B(σ, A, k) is σ + χ for an (A,k)-function χ
        for t in ball(&s, &a, 1).unwrap() {
            let chi = AKFunction::difference(&s, &t, a, 1).unwrap();
            assert_eq!(chi.apply(&s).unwrap(), t);
        }
    }

    #[test]
    fn grid_rank_roundtrip() {
        let g = Grid::new(3, 2).unwrap();
        for (r, i) in g.iter().enumerate() {
            assert_eq!(g.rank(&i), r);
        }
        assert_eq!(g.unrank(5), idx(2, &[0, 1, 2]));
    }
}
