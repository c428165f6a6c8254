//! Box covers of `[0,1]^N`, the reductions between Sperner colourings and
//! covers, and the search for points of maximal multiplicity.

mod boxes;
pub mod emulation;

use std::collections::{BTreeSet, HashSet};

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use boxes::{axis_candidates, box_diameter, q, regions_meet, Interval, RationalBox, Q};

use crate::labelings::{check_cubical_sperner, ColourId, Colouring, LabelingError, SpernerCheck};
use crate::lattice::{sup_distance, Grid, GridSet, Index, LatticeError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoverError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Labeling(#[from] LabelingError),
    #[error("boxes need at least one axis")]
    ZeroDimension,
    #[error("axis {axis}: interval {interval} is not inside [0, 1]")]
    BadInterval { axis: usize, interval: String },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("region is empty")]
    EmptyRegion,
    #[error("member {0} has an empty region")]
    EmptyMember(u64),
    #[error("label {0} appears on more than one member")]
    DuplicateLabel(u64),
    #[error("a cover needs at least one member")]
    NoMembers,
    #[error("point {0:?} is not covered")]
    NotACover(Vec<String>),
    #[error("colouring is not Sperner-valid: {0} and {1} share a colour")]
    InvalidColouring(Index, Index),
    #[error("member {label} has diameter {diameter}, not below 1")]
    DiameterNotBelowOne { label: u64, diameter: String },
    #[error("grid point {0} is not covered")]
    Uncovered(Index),
    #[error("{0} and {1} are more than one step apart")]
    PairwiseTooFar(Index, Index),
    #[error("empty index set")]
    EmptySet,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverMember {
    pub label: u64,
    pub region: Vec<RationalBox>,
}

impl CoverMember {
    pub fn contains(&self, point: &[Q]) -> bool {
        self.region.iter().any(|b| b.contains(point))
    }

    pub fn diameter(&self) -> Result<Q, CoverError> {
        box_diameter(&self.region)
    }
}

/// A finite family of labelled box unions in `[0,1]^N`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxCover {
    dim: usize,
    members: Vec<CoverMember>,
}

impl BoxCover {
    /// Checks dimensions, nonempty regions and label uniqueness. Coverage of
    /// `[0,1]^N` is a separate question, see [`BoxCover::verify`].
    pub fn new(dim: usize, members: Vec<CoverMember>) -> Result<Self, CoverError> {
        if dim == 0 {
            return Err(CoverError::ZeroDimension);
        }
        if members.is_empty() {
            return Err(CoverError::NoMembers);
        }
        let mut seen = HashSet::new();
        for m in &members {
            if !seen.insert(m.label) {
                return Err(CoverError::DuplicateLabel(m.label));
            }
            if m.region.iter().all(RationalBox::is_empty) {
                return Err(CoverError::EmptyMember(m.label));
            }
            if let Some(b) = m.region.iter().find(|b| b.dim() != dim) {
                return Err(CoverError::DimMismatch {
                    expected: dim,
                    found: b.dim(),
                });
            }
        }
        Ok(BoxCover { dim, members })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn members(&self) -> &[CoverMember] {
        &self.members
    }

    pub fn labels(&self) -> Vec<u64> {
        self.members.iter().map(|m| m.label).collect()
    }

    pub fn boxes(&self) -> impl Iterator<Item = &RationalBox> {
        self.members.iter().flat_map(|m| m.region.iter())
    }

    /// Per-axis arrangement candidates over every box of the cover.
    pub fn candidates(&self) -> Vec<Vec<Q>> {
        (0..self.dim)
            .map(|axis| axis_candidates(self.boxes(), axis))
            .collect()
    }

    /// Labels of the members containing `point`, in cover order.
    pub fn members_at(&self, point: &[Q]) -> Vec<u64> {
        self.members
            .iter()
            .filter(|m| m.contains(point))
            .map(|m| m.label)
            .collect()
    }

    /// Confirms the union contains `[0,1]^N` by testing every point of the
    /// arrangement grid; reports the lexicographically least gap.
    pub fn verify(&self) -> Result<(), CoverError> {
        let cands = self.candidates();
        let all: Vec<(usize, &RationalBox)> = self
            .members
            .iter()
            .enumerate()
            .flat_map(|(i, m)| m.region.iter().map(move |b| (i, b)))
            .filter(|(_, b)| !b.is_empty())
            .collect();
        let mut prefix = Vec::with_capacity(self.dim);
        match find_gap(&cands, &all, &mut prefix) {
            None => Ok(()),
            Some(p) => Err(CoverError::NotACover(p.iter().map(|x| x.to_string()).collect())),
        }
    }

    pub fn max_diameter(&self) -> Result<Q, CoverError> {
        let mut best = Q::zero();
        for m in &self.members {
            best = best.max(m.diameter()?);
        }
        Ok(best)
    }
}

fn find_gap(cands: &[Vec<Q>], active: &[(usize, &RationalBox)], prefix: &mut Vec<Q>) -> Option<Vec<Q>> {
    let axis = prefix.len();
    if active.is_empty() {
        let mut p = prefix.clone();
        p.extend(cands[axis..].iter().map(|c| c[0]));
        return Some(p);
    }
    if axis == cands.len() {
        return None;
    }
    for c in &cands[axis] {
        let next: Vec<(usize, &RationalBox)> = active
            .iter()
            .filter(|(_, b)| b.axes()[axis].contains(c))
            .copied()
            .collect();
        prefix.push(*c);
        let gap = find_gap(cands, &next, prefix);
        prefix.pop();
        if gap.is_some() {
            return gap;
        }
    }
    None
}

/// Whether the closed box `∏ [lo_i, hi_i]` lies inside the union `region`.
///
/// A single box is tried first; otherwise every point of the arrangement grid
/// of the union, clipped to the query box, is tested.
pub fn region_contains_closed_box(region: &[RationalBox], lo: &[Q], hi: &[Q]) -> bool {
    if region.iter().any(|b| b.contains_closed_box(lo, hi)) {
        return true;
    }
    let live: Vec<(usize, &RationalBox)> = region
        .iter()
        .filter(|b| !b.is_empty())
        .filter(|b| {
            b.axes()
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(iv, (a, z))| !iv.intersect(&Interval::closed(*a, *z)).is_empty())
        })
        .enumerate()
        .collect();
    if live.is_empty() {
        return false;
    }
    let cands: Vec<Vec<Q>> = (0..lo.len())
        .map(|axis| {
            let mut ends = vec![lo[axis], hi[axis]];
            for (_, b) in &live {
                for e in [b.axes()[axis].lo, b.axes()[axis].hi] {
                    if e > lo[axis] && e < hi[axis] {
                        ends.push(e);
                    }
                }
            }
            ends.sort();
            ends.dedup();
            let mut out = Vec::with_capacity(2 * ends.len());
            for w in ends.windows(2) {
                out.push(w[0]);
                out.push((w[0] + w[1]) / Q::from_integer(2));
            }
            out.push(*ends.last().expect("lo present"));
            out
        })
        .collect();
    let mut prefix = Vec::with_capacity(lo.len());
    find_gap(&cands, &live, &mut prefix).is_none()
}

/// The box `G_σ = ∏ I_k(σ)` around the grid point `σ/n`:
/// `[0, 1/n)` at `σ(k) = 0`, `(1 − 1/n, 1]` at `σ(k) = n`, and the open
/// interval `((σ(k) − 2/3)/n, (σ(k) + 2/3)/n)` in between.
pub fn g_sigma(sigma: &Index) -> RationalBox {
    let n = sigma.bound() as i64;
    let axes = sigma
        .coords()
        .iter()
        .map(|&c| {
            let c = c as i64;
            if c == 0 {
                Interval::new(Q::zero(), false, q(1, n), true)
            } else if c == n {
                Interval::new(q(n - 1, n), true, Q::one(), false)
            } else {
                Interval::open(q(3 * c - 2, 3 * n), q(3 * c + 2, 3 * n))
            }
        })
        .collect();
    RationalBox::new(axes).expect("G_σ endpoints lie in [0, 1]")
}

/// The grid point `σ/n` as a rational point of `[0,1]^N`.
pub fn grid_point(sigma: &Index) -> Vec<Q> {
    let n = sigma.bound() as i64;
    sigma.coords().iter().map(|&c| q(c as i64, n)).collect()
}

/// One member `U_τ = ⋃{G_σ : φ(σ) = τ}` per colour, ordered by colour.
/// Refuses colourings that are not Sperner-valid; every member diameter is
/// then re-checked to be below 1.
pub fn colouring_to_cover(phi: &Colouring) -> Result<BoxCover, CoverError> {
    if let SpernerCheck::Violation(a, b) = check_cubical_sperner(phi) {
        return Err(CoverError::InvalidColouring(a, b));
    }
    let grid = phi.grid();
    let palette: Vec<ColourId> = phi.palette().into_iter().collect();
    let mut regions: Vec<Vec<RationalBox>> = vec![Vec::new(); palette.len()];
    for (rank, sigma) in grid.iter().enumerate() {
        let c = phi.colour_at_rank(rank);
        let slot = palette.binary_search(&c).expect("colour from palette");
        regions[slot].push(g_sigma(&sigma));
    }
    let members: Vec<CoverMember> = palette
        .iter()
        .zip(regions)
        .map(|(c, region)| CoverMember { label: c.0, region })
        .collect();
    for m in &members {
        let d = m.diameter()?;
        if d >= Q::one() {
            return Err(CoverError::DiameterNotBelowOne {
                label: m.label,
                diameter: d.to_string(),
            });
        }
    }
    BoxCover::new(grid.dim(), members)
}

/// Colours each grid point `σ/n` by the least label among the members
/// containing it.
pub fn cover_to_colouring(cover: &BoxCover, n: u32) -> Result<Colouring, CoverError> {
    let grid = Grid::new(cover.dim, n)?;
    let mut colours = Vec::with_capacity(grid.len());
    for sigma in grid.iter() {
        let p = grid_point(&sigma);
        let label = cover
            .members
            .iter()
            .filter(|m| m.contains(&p))
            .map(|m| m.label)
            .min()
            .ok_or_else(|| CoverError::Uncovered(sigma.clone()))?;
        colours.push(ColourId(label));
    }
    Ok(Colouring::from_vec(grid, colours)?)
}

/// A point of maximal multiplicity and every member containing it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub point: Vec<Q>,
    pub members: Vec<u64>,
}

impl Witness {
    pub fn multiplicity(&self) -> usize {
        self.members.len()
    }
}

/// Exact search for a point lying in the most members.
///
/// Sweeps the arrangement grid axis by axis, keeping only the boxes that
/// contain the current prefix and pruning prefixes whose surviving members
/// cannot beat the best count so far. The result is the lexicographically
/// least maximiser on the arrangement grid.
pub fn max_multiplicity_point(cover: &BoxCover) -> Result<Witness, CoverError> {
    cover.verify()?;
    let cands = cover.candidates();
    let all: Vec<(usize, &RationalBox)> = cover
        .members
        .iter()
        .enumerate()
        .flat_map(|(i, m)| m.region.iter().map(move |b| (i, b)))
        .filter(|(_, b)| !b.is_empty())
        .collect();
    let mut best: Option<(usize, Vec<Q>)> = None;
    let mut prefix = Vec::with_capacity(cover.dim);
    sweep(&cands, &all, &mut prefix, &mut best);
    let (_, point) = best.expect("a verified cover has a covered point");
    let members = cover.members_at(&point);
    Ok(Witness { point, members })
}

fn distinct_members(active: &[(usize, &RationalBox)]) -> usize {
    let mut ids: Vec<usize> = active.iter().map(|(i, _)| *i).collect();
    ids.sort_unstable();
    ids.dedup();
    ids.len()
}

fn sweep(
    cands: &[Vec<Q>],
    active: &[(usize, &RationalBox)],
    prefix: &mut Vec<Q>,
    best: &mut Option<(usize, Vec<Q>)>,
) {
    let count = distinct_members(active);
    let floor = best.as_ref().map_or(0, |b| b.0);
    if count <= floor {
        return;
    }
    let axis = prefix.len();
    if axis == cands.len() {
        *best = Some((count, prefix.clone()));
        return;
    }
    for c in &cands[axis] {
        let next: Vec<(usize, &RationalBox)> = active
            .iter()
            .filter(|(_, b)| b.axes()[axis].contains(c))
            .copied()
            .collect();
        prefix.push(*c);
        sweep(cands, &next, prefix, best);
        prefix.pop();
    }
}

/// The coordinatewise infimum of a set of indices that pairwise differ by at
/// most one in every coordinate; the whole set then lies in its positive cube.
pub fn infimum_cube_recovery(set: &[Index]) -> Result<Index, CoverError> {
    let first = set.first().ok_or(CoverError::EmptySet)?;
    for (i, a) in set.iter().enumerate() {
        for b in &set[i + 1..] {
            if sup_distance(a, b)? > 1 {
                return Err(CoverError::PairwiseTooFar(a.clone(), b.clone()));
            }
        }
    }
    let coords = (0..first.dim())
        .map(|axis| set.iter().map(|s| s.coords()[axis]).min().expect("nonempty"))
        .collect();
    Ok(Index::new(first.bound(), coords)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverRichCube {
    pub cube: Index,
    pub colours: BTreeSet<ColourId>,
    pub point: Vec<Q>,
    /// The distinct-colour indices whose boxes contain `point`.
    pub witnesses: Vec<Index>,
}

/// Rich cube found through the cover: build `{U_τ}`, take a point of maximal
/// multiplicity, gather (greedily, lexicographically) indices `σ` with the
/// point in `G_σ` and pairwise distinct colours, and return their infimum cube.
pub fn rich_cube_via_cover(phi: &Colouring) -> Result<CoverRichCube, CoverError> {
    let cover = colouring_to_cover(phi)?;
    let witness = max_multiplicity_point(&cover)?;
    let mut colours = BTreeSet::new();
    let mut witnesses = Vec::new();
    for (rank, sigma) in phi.grid().iter().enumerate() {
        if g_sigma(&sigma).contains(&witness.point) {
            let c = phi.colour_at_rank(rank);
            if colours.insert(c) {
                witnesses.push(sigma);
            }
        }
    }
    let cube = infimum_cube_recovery(&witnesses)?;
    Ok(CoverRichCube {
        cube,
        colours,
        point: witness.point,
        witnesses,
    })
}

/// `G_U = {ρ ∈ [n]^N : ρ/n ∈ U}` for every member, in cover order.
pub fn grid_image(cover: &BoxCover, n: u32) -> Result<Vec<GridSet>, CoverError> {
    let grid = Grid::new(cover.dim, n)?;
    Ok(cover
        .members
        .iter()
        .map(|m| GridSet::from_predicate(grid, |rho| m.contains(&grid_point(rho))))
        .collect())
}

/// Parameters of [`random_box_cover`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RandomCoverParams {
    /// Denominator of the cell breakpoints.
    pub denominator: i64,
    /// Largest cell width, as a numerator over `denominator`.
    pub max_cell: i64,
    /// Margins are drawn from `1..=max_margin` over `2·denominator`.
    pub max_margin: i64,
    /// Probability (in quarters) that a box joins the previous member.
    pub merge_quarters: u32,
}

impl Default for RandomCoverParams {
    fn default() -> Self {
        RandomCoverParams {
            denominator: 24,
            max_cell: 14,
            max_margin: 3,
            merge_quarters: 1,
        }
    }
}

/// Seeded cover of `[0,1]^N` by open boxes of diameter `< 1`.
///
/// Each axis is cut into random cells; every product cell is widened by a
/// positive margin on each interior side (open there, closed at `0` and
/// `1`). Occasionally a box is merged into the previous member when the
/// union keeps diameter below 1. The margins give the cover a positive
/// Lebesgue number.
pub fn random_box_cover(dim: usize, seed: u64, params: &RandomCoverParams) -> Result<BoxCover, CoverError> {
    if dim == 0 {
        return Err(CoverError::ZeroDimension);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let den = params.denominator;
    let mut cuts: Vec<Vec<i64>> = Vec::with_capacity(dim);
    for _ in 0..dim {
        loop {
            let pieces = rng.gen_range(2..=4usize);
            let mut pts: Vec<i64> = (0..pieces - 1).map(|_| rng.gen_range(1..den)).collect();
            pts.push(0);
            pts.push(den);
            pts.sort_unstable();
            pts.dedup();
            if pts.len() >= 3 && pts.windows(2).all(|w| w[1] - w[0] <= params.max_cell) {
                cuts.push(pts);
                break;
            }
        }
    }
    let cells: Vec<usize> = cuts.iter().map(|c| c.len() - 1).collect();
    let total: usize = cells.iter().product();
    let mut members: Vec<CoverMember> = Vec::new();
    for flat in 0..total {
        let mut rem = flat;
        let mut axes = Vec::with_capacity(dim);
        for axis in (0..dim).rev() {
            let j = rem % cells[axis];
            rem /= cells[axis];
            let (a, b) = (cuts[axis][j], cuts[axis][j + 1]);
            let lo = if a == 0 {
                (Q::zero(), false)
            } else {
                let m = rng.gen_range(1..=params.max_margin);
                let lo = 2 * a - m;
                (q(lo.max(0), 2 * den), lo > 0)
            };
            let hi = if b == den {
                (Q::one(), false)
            } else {
                let m = rng.gen_range(1..=params.max_margin);
                let hi = 2 * b + m;
                (q(hi.min(2 * den), 2 * den), hi < 2 * den)
            };
            axes.push(Interval::new(lo.0, lo.1, hi.0, hi.1));
        }
        axes.reverse();
        let bx = RationalBox::new(axes)?;
        let merge = !members.is_empty() && rng.gen_ratio(params.merge_quarters.min(4), 4);
        if merge {
            let last = members.last_mut().expect("nonempty");
            let mut region = last.region.clone();
            region.push(bx.clone());
            if box_diameter(&region)? < Q::one() {
                last.region = region;
                continue;
            }
        }
        let label = members.len() as u64;
        members.push(CoverMember {
            label,
            region: vec![bx],
        });
    }
    BoxCover::new(dim, members)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labelings::{max_colours_per_cube, random_sperner_colouring, PaletteMode};
    use crate::lattice::positive_cube;

    fn idx(n: u32, c: &[u32]) -> Index {
        Index::new(n, c.to_vec()).unwrap()
    }

    fn unit_member(label: u64, lo: Q, hi: Q) -> CoverMember {
        CoverMember {
            label,
            region: vec![RationalBox::new(vec![Interval::closed(lo, hi)]).unwrap()],
        }
    }

    /// Reference evaluation: every point of the full arrangement grid,
    /// every box, no pruning.
    fn brute_force(cover: &BoxCover) -> (usize, Vec<Q>) {
        let cands = cover.candidates();
        let mut best = (0usize, Vec::new());
        let mut odometer = vec![0usize; cands.len()];
        loop {
            let p: Vec<Q> = odometer.iter().enumerate().map(|(a, &i)| cands[a][i]).collect();
            let count = cover.members().iter().filter(|m| m.contains(&p)).count();
            if count > best.0 {
                best = (count, p);
            }
            let mut axis = cands.len();
            loop {
                if axis == 0 {
                    return best;
                }
                axis -= 1;
                odometer[axis] += 1;
                if odometer[axis] < cands[axis].len() {
                    break;
                }
                odometer[axis] = 0;
            }
        }
    }

    #[test]
    fn g_sigma_intervals() {
        let b = g_sigma(&idx(3, &[1, 0, 3]));
        assert_eq!(b.axes()[0], Interval::open(q(1, 9), q(5, 9)));
        assert_eq!(b.axes()[1], Interval::new(q(0, 1), false, q(1, 3), true));
        assert_eq!(b.axes()[2], Interval::new(q(2, 3), true, q(1, 1), false));
        assert_eq!(box_diameter(&[g_sigma(&idx(3, &[1, 1]))]).unwrap(), q(4, 9));
    }

    #[test]
    fn injective_one_dimensional_reduction() {
        let g = Grid::new(1, 2).unwrap();
        let phi = Colouring::from_fn(g, |i| ColourId(i.coords()[0] as u64));
        let cover = colouring_to_cover(&phi).unwrap();
        let diams: Vec<Q> = cover.members().iter().map(|m| m.diameter().unwrap()).collect();
        assert_eq!(diams, vec![q(1, 2), q(2, 3), q(1, 2)]);
        cover.verify().unwrap();
    }

    #[test]
    fn centre_lies_in_own_box() {
        let g = Grid::new(3, 3).unwrap();
        for s in g.iter() {
            assert!(g_sigma(&s).contains(&grid_point(&s)));
        }
    }

    #[test]
    fn invalid_colouring_refused() {
        let g = Grid::new(1, 2).unwrap();
        let phi = Colouring::from_fn(g, |_| ColourId(0));
        assert!(matches!(
            colouring_to_cover(&phi),
            Err(CoverError::InvalidColouring(_, _))
        ));
    }

    #[test]
    fn tiny_boxes_give_injective_colouring() {
        let n = 3;
        let g = Grid::new(2, n).unwrap();
        let members = g
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let p = grid_point(&s);
                CoverMember {
                    label: 100 + i as u64,
                    region: vec![RationalBox::new(
                        p.iter().map(|&x| Interval::closed(x, x)).collect(),
                    )
                    .unwrap()],
                }
            })
            .collect();
        let cover = BoxCover::new(2, members).unwrap();
        let phi = cover_to_colouring(&cover, n).unwrap();
        assert_eq!(phi.palette().len(), g.len());
    }

    #[test]
    fn wide_member_breaks_sperner() {
        let cover = BoxCover::new(
            1,
            vec![unit_member(0, q(0, 1), q(1, 1)), unit_member(1, q(1, 3), q(2, 3))],
        )
        .unwrap();
        let phi = cover_to_colouring(&cover, 2).unwrap();
        assert!(!check_cubical_sperner(&phi).is_valid());
    }

    #[test]
    fn uncovered_grid_point_reported() {
        let cover = BoxCover::new(1, vec![unit_member(0, q(0, 1), q(1, 3))]).unwrap();
        assert!(matches!(
            cover_to_colouring(&cover, 2),
            Err(CoverError::Uncovered(_))
        ));
        assert!(matches!(cover.verify(), Err(CoverError::NotACover(_))));
    }

    #[test]
    fn multiplicity_examples() {
        let one = BoxCover::new(
            2,
            vec![CoverMember {
                label: 9,
                region: vec![RationalBox::unit(2)],
            }],
        )
        .unwrap();
        assert_eq!(max_multiplicity_point(&one).unwrap().multiplicity(), 1);

        let two = BoxCover::new(
            1,
            vec![unit_member(0, q(0, 1), q(2, 3)), unit_member(1, q(1, 3), q(1, 1))],
        )
        .unwrap();
        let w = max_multiplicity_point(&two).unwrap();
        assert_eq!(w.members, vec![0, 1]);
        assert_eq!(w.point, vec![q(1, 3)]);
    }

    #[test]
    fn sweep_agrees_with_brute_force() {
        for dim in 1..=2 {
            for seed in 0..25 {
                let cover = random_box_cover(dim, seed, &RandomCoverParams::default()).unwrap();
                let w = max_multiplicity_point(&cover).unwrap();
                let (count, point) = brute_force(&cover);
                assert_eq!((w.multiplicity(), &w.point), (count, &point), "dim {dim} seed {seed}");
                assert!(count > dim);
            }
        }
    }

    #[test]
    fn infimum_examples() {
        let s = vec![idx(2, &[2, 1]), idx(2, &[1, 2])];
        let cube = infimum_cube_recovery(&s).unwrap();
        assert_eq!(cube, idx(2, &[1, 1]));
        let k = positive_cube(&cube);
        assert!(s.iter().all(|x| k.contains(x)));
        assert_eq!(infimum_cube_recovery(&[idx(2, &[1, 0])]).unwrap(), idx(2, &[1, 0]));
        assert!(matches!(
            infimum_cube_recovery(&[idx(2, &[0, 0]), idx(2, &[2, 0])]),
            Err(CoverError::PairwiseTooFar(_, _))
        ));
        assert!(matches!(infimum_cube_recovery(&[]), Err(CoverError::EmptySet)));
    }

    #[test]
    fn rich_cube_one_dimensional() {
        let g = Grid::new(1, 2).unwrap();
        let phi = Colouring::from_fn(g, |i| ColourId(i.coords()[0] as u64));
        let r = rich_cube_via_cover(&phi).unwrap();
        assert_eq!(r.colours.len(), 2);
        assert_eq!(max_colours_per_cube(&phi).count, 2);
    }

    #[test]
    fn rich_cube_colours_inside_cube_palette() {
        for seed in 0..15 {
            let phi = random_sperner_colouring(2, 3, seed, PaletteMode::Mixed).unwrap();
            let r = rich_cube_via_cover(&phi).unwrap();
            let pal: BTreeSet<ColourId> = phi.cube_palette(&r.cube).unwrap().into_iter().collect();
            assert!(r.colours.is_subset(&pal));
            assert!(r.colours.len() <= max_colours_per_cube(&phi).count);
            assert!(r.colours.len() >= 3);
        }
    }

    #[test]
    fn random_covers_are_covers_with_small_members() {
        for dim in 1..=3 {
            for seed in 0..10 {
                let c = random_box_cover(dim, seed, &RandomCoverParams::default()).unwrap();
                c.verify().unwrap();
                assert!(c.max_diameter().unwrap() < Q::one());
            }
        }
    }

    #[test]
    fn duplicate_labels_rejected() {
        let r = BoxCover::new(
            1,
            vec![unit_member(3, q(0, 1), q(1, 2)), unit_member(3, q(1, 2), q(1, 1))],
        );
        assert_eq!(r, Err(CoverError::DuplicateLabel(3)));
    }
}
