//! Sperner colourings of the cubical grid `[n]^N` and of the staircase
//! subdivision of a `d`-simplex: validators, rich-cube search and
//! fully-labeled cell search.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{Grid, Index, LatticeError};

/// An opaque colour. Only equality matters to the Sperner condition; the
/// canonical colourings encode a 0/1 vector of length `N` in the low bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ColourId(pub u64);

impl ColourId {
    pub fn from_bits(bits: &[bool]) -> Self {
        ColourId(
            bits.iter()
                .enumerate()
                .fold(0u64, |acc, (i, &b)| acc | (b as u64) << i),
        )
    }

    pub fn bit(self, axis: usize) -> bool {
        self.0 >> axis & 1 == 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabelingError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("colouring has {got} entries, grid needs {want}")]
    WrongLength { got: usize, want: usize },
    #[error("simplicial labeling violates the Sperner condition: {0:?}")]
    Invalid(SimplicialViolation),
    #[error("valid Sperner labeling without a fully-labeled cell")]
    NoFullyLabeledCell,
    #[error("simplex dimension {d} and scale {m} must both be at least 1")]
    BadComplex { d: usize, m: u32 },
}

/// A total colouring of `[n]^N`, stored in lexicographic rank order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Colouring {
    grid: Grid,
    colours: Vec<ColourId>,
}

impl Colouring {
    pub fn from_fn(grid: Grid, mut f: impl FnMut(&Index) -> ColourId) -> Self {
        let colours = grid.iter().map(|i| f(&i)).collect();
        Colouring { grid, colours }
    }

    pub fn from_vec(grid: Grid, colours: Vec<ColourId>) -> Result<Self, LabelingError> {
        if colours.len() != grid.len() {
            return Err(LabelingError::WrongLength {
                got: colours.len(),
                want: grid.len(),
            });
        }
        Ok(Colouring { grid, colours })
    }

    /// `φ₀(σ)[i] = 1` iff `σ(i) = n`.
    pub fn canonical(grid: Grid) -> Self {
        let n = grid.bound();
        Colouring::from_fn(grid, |i| {
            ColourId::from_bits(&i.coords().iter().map(|&c| c == n).collect::<Vec<_>>())
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn colour(&self, idx: &Index) -> Result<ColourId, LatticeError> {
        self.grid.check(idx)?;
        Ok(self.colours[self.grid.rank(idx)])
    }

    pub fn colour_at_rank(&self, rank: usize) -> ColourId {
        self.colours[rank]
    }

    pub fn colours(&self) -> &[ColourId] {
        &self.colours
    }

    pub fn palette(&self) -> BTreeSet<ColourId> {
        self.colours.iter().copied().collect()
    }

    /// Sorted, deduplicated colours of the positive cube at `rank`.
    pub fn cube_palette_at(&self, rank: usize) -> Vec<ColourId> {
        let mut out = Vec::with_capacity(1 << self.grid.dim().min(10));
        for r in CubeRanks::new(self.grid, rank) {
            out.push(self.colours[r]);
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn cube_palette(&self, sigma: &Index) -> Result<Vec<ColourId>, LatticeError> {
        self.grid.check(sigma)?;
        Ok(self.cube_palette_at(self.grid.rank(sigma)))
    }
}

/// Ranks of the vertices of the positive cube anchored at a rank.
struct CubeRanks {
    base: usize,
    offsets: Vec<usize>,
    next: usize,
}

impl CubeRanks {
    fn new(grid: Grid, rank: usize) -> Self {
        let side = grid.bound() as usize + 1;
        let dim = grid.dim();
        let mut offsets = Vec::with_capacity(dim);
        let mut stride = 1usize;
        let mut r = rank;
        // walk axes from least significant (last) to most significant
        for _ in 0..dim {
            let c = r % side;
            r /= side;
            if c < side - 1 {
                offsets.push(stride);
            }
            stride *= side;
        }
        CubeRanks {
            base: rank,
            offsets,
            next: 0,
        }
    }
}

impl Iterator for CubeRanks {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.next >= 1 << self.offsets.len() {
            return None;
        }
        let m = self.next;
        self.next += 1;
        Some(
            self.offsets
                .iter()
                .enumerate()
                .filter(|(i, _)| m >> i & 1 == 1)
                .map(|(_, &o)| o)
                .sum::<usize>()
                + self.base,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpernerCheck {
    Valid,
    /// The lexicographically least pair `σ < σ′` at sup distance `n` sharing a colour.
    Violation(Index, Index),
}

impl SpernerCheck {
    pub fn is_valid(&self) -> bool {
        matches!(self, SpernerCheck::Valid)
    }
}

/// Checks `φ(σ) ≠ φ(σ′)` whenever `‖σ − σ′‖ = n`.
///
/// A colour class violates the condition exactly when, on some axis, it
/// holds both a point with coordinate `0` and a point with coordinate `n`.
pub fn check_cubical_sperner(phi: &Colouring) -> SpernerCheck {
    let grid = phi.grid;
    let n = grid.bound();
    let dim = grid.dim();
    let mut extremes: HashMap<ColourId, Vec<u8>> = HashMap::new();
    let mut bad = false;
    for (rank, &c) in phi.colours.iter().enumerate() {
        let idx = grid.unrank(rank);
        let flags = extremes.entry(c).or_insert_with(|| vec![0; dim]);
        for (axis, &x) in idx.coords().iter().enumerate() {
            if x == 0 {
                flags[axis] |= 1;
            }
            if x == n {
                flags[axis] |= 2;
            }
            bad |= flags[axis] == 3;
        }
    }
    if !bad {
        return SpernerCheck::Valid;
    }
    let mut classes: HashMap<ColourId, Vec<usize>> = HashMap::new();
    for (rank, &c) in phi.colours.iter().enumerate() {
        classes.entry(c).or_default().push(rank);
    }
    for (rank, &c) in phi.colours.iter().enumerate() {
        let sigma = grid.unrank(rank);
        for &other in classes[&c].iter().filter(|&&r| r > rank) {
            let tau = grid.unrank(other);
            let far = sigma
                .coords()
                .iter()
                .zip(tau.coords())
                .any(|(&a, &b)| a.abs_diff(b) == n);
            if far {
                return SpernerCheck::Violation(sigma, tau);
            }
        }
    }
    unreachable!("an extreme-flag conflict always yields a violating pair")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RichCube {
    pub cube: Index,
    pub count: usize,
}

/// Maximises `|φ(K_σ)|` over all `σ ∈ [n]^N` (degenerate clamped cubes
/// included). Ties go to the lexicographically least `σ`.
pub fn max_colours_per_cube(phi: &Colouring) -> RichCube {
    if !check_cubical_sperner(phi).is_valid() {
        log::warn!("max_colours_per_cube called on a colouring that is not Sperner-valid");
    }
    let counts: Vec<usize> = (0..phi.grid.len())
        .into_par_iter()
        .with_min_len(64)
        .map(|r| phi.cube_palette_at(r).len())
        .collect();
    let (best_rank, best) = counts
        .iter()
        .enumerate()
        .fold((0usize, 0usize), |(br, bc), (r, &c)| if c > bc { (r, c) } else { (br, bc) });
    RichCube {
        cube: phi.grid.unrank(best_rank),
        count: best,
    }
}

/// First `σ` in the lexicographic sweep with `|φ(K_σ)| ≥ target`.
pub fn find_rich_cube(phi: &Colouring, target: usize) -> Option<Index> {
    if target > 1usize << phi.grid.dim().min(63) {
        return None;
    }
    (0..phi.grid.len())
        .into_par_iter()
        .with_min_len(64)
        .position_first(|r| phi.cube_palette_at(r).len() >= target)
        .map(|r| phi.grid.unrank(r))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PaletteMode {
    /// The canonical colouring with no perturbation.
    Canonical,
    /// Recolour points with colours already present.
    Recolour,
    /// Recolour with present colours and freshly minted ones.
    #[default]
    Mixed,
}

/// Seeded generator of Sperner-valid cubical colourings.
///
/// Starts from the canonical colouring and applies `2·|grid|` proposed
/// recolourings; a proposal is kept only when the class it joins stays free
/// of opposite extremes on every axis.
pub fn random_sperner_colouring(
    dim: usize,
    bound: u32,
    seed: u64,
    mode: PaletteMode,
) -> Result<Colouring, LabelingError> {
    let grid = Grid::new(dim, bound)?;
    let mut phi = Colouring::canonical(grid);
    if mode == PaletteMode::Canonical {
        return Ok(phi);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Index> = grid.iter().collect();
    // per colour, per axis: (#points at 0, #points at n)
    let mut extremes: HashMap<ColourId, Vec<(u32, u32)>> = HashMap::new();
    let touch = |ext: &mut HashMap<ColourId, Vec<(u32, u32)>>, c: ColourId, p: &Index, add: bool| {
        let e = ext.entry(c).or_insert_with(|| vec![(0, 0); dim]);
        for (axis, &x) in p.coords().iter().enumerate() {
            let slot = if x == 0 {
                &mut e[axis].0
            } else if x == bound {
                &mut e[axis].1
            } else {
                continue;
            };
            if add {
                *slot += 1;
            } else {
                *slot -= 1;
            }
        }
    };
    for (p, &c) in points.iter().zip(&phi.colours) {
        touch(&mut extremes, c, p, true);
    }
    let mut next_fresh = 1u64 << dim.min(62);
    for _ in 0..2 * points.len() {
        let target = rng.gen_range(0..points.len());
        let proposal = if mode == PaletteMode::Mixed && rng.gen_ratio(1, 4) {
            next_fresh += 1;
            ColourId(next_fresh - 1)
        } else {
            phi.colours[rng.gen_range(0..points.len())]
        };
        let current = phi.colours[target];
        if proposal == current {
            continue;
        }
        let p = &points[target];
        let ok = match extremes.get(&proposal) {
            None => true,
            Some(e) => p.coords().iter().enumerate().all(|(axis, &x)| {
                !(x == 0 && e[axis].1 > 0) && !(x == bound && e[axis].0 > 0)
            }),
        };
        if ok {
            touch(&mut extremes, current, p, false);
            touch(&mut extremes, proposal, p, true);
            phi.colours[target] = proposal;
        }
    }
    debug_assert!(check_cubical_sperner(&phi).is_valid());
    Ok(phi)
}

/// The staircase (Freudenthal) subdivision of the standard `d`-simplex at
/// scale `m`: vertices are barycentric numerators `(k₀,…,k_d)` with
/// `Σ kᵢ = m`, and there are `m^d` cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplicialComplex {
    dim: usize,
    scale: u32,
    vertices: Vec<Vec<u32>>,
    cells: Vec<Vec<usize>>,
}

impl SimplicialComplex {
    pub fn new(dim: usize, scale: u32) -> Result<Self, LabelingError> {
        if dim == 0 || scale == 0 {
            return Err(LabelingError::BadComplex { d: dim, m: scale });
        }
        let mut vertices = Vec::new();
        compositions(scale, dim + 1, &mut Vec::new(), &mut vertices);
        let lookup: HashMap<Vec<u32>, usize> = vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i))
            .collect();

        // Work in staircase coordinates m ≥ y₀ ≥ y₁ ≥ … ≥ y_{d−1} ≥ 0.
        let to_bary = |y: &[i64]| -> Option<Vec<u32>> {
            let m = scale as i64;
            let mut k = Vec::with_capacity(dim + 1);
            k.push(m - y[0]);
            for j in 1..dim {
                k.push(y[j - 1] - y[j]);
            }
            k.push(y[dim - 1]);
            k.iter()
                .all(|&v| v >= 0)
                .then(|| k.into_iter().map(|v| v as u32).collect())
        };
        let perms = permutations(dim);
        let mut cells = Vec::new();
        let mut base = vec![0i64; dim];
        loop {
            for perm in &perms {
                let mut y = base.clone();
                let mut cell = Vec::with_capacity(dim + 1);
                let mut inside = true;
                for step in 0..=dim {
                    if step > 0 {
                        y[perm[step - 1]] += 1;
                    }
                    match to_bary(&y) {
                        Some(k) => cell.push(lookup[&k]),
                        None => {
                            inside = false;
                            break;
                        }
                    }
                }
                if inside {
                    cells.push(cell);
                }
            }
            // advance the base point over [0, m−1]^d
            let mut axis = dim;
            loop {
                if axis == 0 {
                    cells.sort();
                    return Ok(SimplicialComplex {
                        dim,
                        scale,
                        vertices,
                        cells,
                    });
                }
                axis -= 1;
                if base[axis] + 1 < scale as i64 {
                    base[axis] += 1;
                    break;
                }
                base[axis] = 0;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn vertices(&self) -> &[Vec<u32>] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn vertex_index(&self, bary: &[u32]) -> Option<usize> {
        self.vertices.iter().position(|v| v == bary)
    }

    /// Vertex index of the corner `e_j` of the simplex.
    pub fn corner(&self, j: usize) -> usize {
        self.vertices
            .iter()
            .position(|v| v[j] == self.scale)
            .expect("every corner is a vertex")
    }
}

fn compositions(total: u32, parts: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if parts == 1 {
        prefix.push(total);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in (0..=total).rev() {
        prefix.push(first);
        compositions(total - first, parts - 1, prefix, out);
        prefix.pop();
    }
}

fn permutations(d: usize) -> Vec<Vec<usize>> {
    fn go(rest: &mut Vec<usize>, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(cur.clone());
            return;
        }
        for i in 0..rest.len() {
            let x = rest.remove(i);
            cur.push(x);
            go(rest, cur, out);
            cur.pop();
            rest.insert(i, x);
        }
    }
    let mut out = Vec::new();
    go(&mut (0..d).collect(), &mut Vec::new(), &mut out);
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SimplicialViolation {
    LabelOutOfRange { vertex: usize, label: u32 },
    CornersNotBijective,
    /// A vertex on the facet opposite corner `j` carries that corner's label.
    FaceLabel { vertex: usize, facet: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplicialColouring {
    complex: SimplicialComplex,
    labels: Vec<u32>,
}

impl SimplicialColouring {
    pub fn new(complex: SimplicialComplex, labels: Vec<u32>) -> Result<Self, LabelingError> {
        if labels.len() != complex.vertices.len() {
            return Err(LabelingError::WrongLength {
                got: labels.len(),
                want: complex.vertices.len(),
            });
        }
        Ok(SimplicialColouring { complex, labels })
    }

    pub fn from_fn(complex: SimplicialComplex, mut f: impl FnMut(&[u32]) -> u32) -> Self {
        let labels = complex.vertices.iter().map(|v| f(v)).collect();
        SimplicialColouring { complex, labels }
    }

    pub fn complex(&self) -> &SimplicialComplex {
        &self.complex
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Corner labels bijective onto `{0..d}`; a vertex with `k_j = 0` never
    /// carries the label of corner `j`.
    pub fn validate(&self) -> Result<(), SimplicialViolation> {
        let d = self.complex.dim;
        if let Some((vertex, &label)) = self
            .labels
            .iter()
            .enumerate()
            .find(|(_, &l)| l as usize > d)
        {
            return Err(SimplicialViolation::LabelOutOfRange { vertex, label });
        }
        let corner_labels: Vec<u32> = (0..=d)
            .map(|j| self.labels[self.complex.corner(j)])
            .collect();
        let distinct: BTreeSet<u32> = corner_labels.iter().copied().collect();
        if distinct.len() != d + 1 {
            return Err(SimplicialViolation::CornersNotBijective);
        }
        for (vertex, bary) in self.complex.vertices.iter().enumerate() {
            for (facet, &k) in bary.iter().enumerate() {
                if k == 0 && self.labels[vertex] == corner_labels[facet] {
                    return Err(SimplicialViolation::FaceLabel { vertex, facet });
                }
            }
        }
        Ok(())
    }

    pub fn is_fully_labeled(&self, cell: &[usize]) -> bool {
        let set: BTreeSet<u32> = cell.iter().map(|&v| self.labels[v]).collect();
        set.len() == self.complex.dim + 1
    }

    /// Exhaustive scan: indices of all fully-labeled cells.
    pub fn fully_labeled_cells(&self) -> Vec<usize> {
        (0..self.complex.cells.len())
            .filter(|&c| self.is_fully_labeled(&self.complex.cells[c]))
            .collect()
    }
}

/// `true` iff every colour class has barycentric diameter `< 1`, i.e. any
/// two same-coloured vertices differ by less than `m` in every barycentric
/// numerator.
pub fn boundedness_check(phi: &SimplicialColouring) -> bool {
    let m = phi.complex.scale;
    let mut spans: HashMap<u32, Vec<(u32, u32)>> = HashMap::new();
    for (bary, &label) in phi.complex.vertices.iter().zip(&phi.labels) {
        let span = spans
            .entry(label)
            .or_insert_with(|| bary.iter().map(|&k| (k, k)).collect());
        for (s, &k) in span.iter_mut().zip(bary) {
            s.0 = s.0.min(k);
            s.1 = s.1.max(k);
        }
    }
    spans
        .values()
        .all(|span| span.iter().all(|&(lo, hi)| hi - lo < m))
}

/// Finds a fully-labeled cell by following doors, i.e. facets labeled
/// exactly `{0, …, d−1}`, from each boundary door in turn.
///
/// Returns the cell as vertex indices.
pub fn find_fully_labeled_cell(phi: &SimplicialColouring) -> Result<Vec<usize>, LabelingError> {
    phi.validate().map_err(LabelingError::Invalid)?;
    let cx = &phi.complex;
    let d = cx.dim;
    let mut facets: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();
    for (ci, cell) in cx.cells.iter().enumerate() {
        for drop in 0..=d {
            facets.entry(facet_key(cell, drop)).or_default().push(ci);
        }
    }
    let is_door = |facet: &[usize]| {
        let set: BTreeSet<u32> = facet.iter().map(|&v| phi.labels[v]).collect();
        set.len() == d && set.iter().all(|&l| (l as usize) < d)
    };
    let mut boundary_doors: Vec<&Vec<usize>> = facets
        .iter()
        .filter(|(f, cs)| cs.len() == 1 && is_door(f))
        .map(|(f, _)| f)
        .collect();
    boundary_doors.sort();
    let mut spent: BTreeSet<Vec<usize>> = BTreeSet::new();
    for start in boundary_doors {
        if spent.contains(start) {
            continue;
        }
        spent.insert(start.clone());
        let mut cell = facets[start][0];
        let mut entry = start.clone();
        for _ in 0..=cx.cells.len() {
            let verts = &cx.cells[cell];
            if phi.is_fully_labeled(verts) {
                return Ok(verts.clone());
            }
            let exit = (0..=d)
                .map(|drop| facet_key(verts, drop))
                .find(|f| *f != entry && is_door(f))
                .expect("a cell entered through a door has a second door");
            match facets[&exit].iter().find(|&&c| c != cell) {
                Some(&next) => {
                    cell = next;
                    entry = exit;
                }
                None => {
                    spent.insert(exit);
                    break;
                }
            }
        }
    }
    Err(LabelingError::NoFullyLabeledCell)
}

fn facet_key(cell: &[usize], drop: usize) -> Vec<usize> {
    let mut f: Vec<usize> = cell
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != drop)
        .map(|(_, &v)| v)
        .collect();
    f.sort_unstable();
    f
}

/// Seeded Sperner labeling: corners get a random permutation of `{0..d}`,
/// every other vertex a random label among the corners of its carrier face.
pub fn random_simplicial_labeling(
    dim: usize,
    scale: u32,
    seed: u64,
) -> Result<SimplicialColouring, LabelingError> {
    let complex = SimplicialComplex::new(dim, scale)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut corner_labels: Vec<u32> = (0..=dim as u32).collect();
    corner_labels.shuffle(&mut rng);
    let labels = complex
        .vertices
        .iter()
        .map(|bary| {
            let carrier: Vec<u32> = bary
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(j, _)| corner_labels[j])
                .collect();
            carrier[rng.gen_range(0..carrier.len())]
        })
        .collect();
    SimplicialColouring::new(complex, labels)
}
