//! Adaptive dyadic subdivision of `[0,1]^N` against a cover: only cubes that
//! fit no member are split, so the resulting complex is non-uniform.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::covers::{q, region_contains_closed_box, BoxCover, CoverError, Q};

/// Deepest level whose corner coordinates and volumes stay exact in `i64`.
pub const LEVEL_LIMIT: u32 = 30;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubdivisionError {
    #[error(transparent)]
    Cover(#[from] CoverError),
    #[error("max level {0} exceeds the supported limit {LEVEL_LIMIT}")]
    LevelTooDeep(u32),
    #[error("vertex {0:?} lies in no member")]
    UncoveredVertex(Vec<String>),
    #[error("{0} leaves were refused at the maximum level")]
    Refused(usize),
}

/// The closed cube `∏ [c_i / 2^L, (c_i + 1) / 2^L]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    pub level: u32,
    pub corner: Vec<u64>,
}

impl DyadicCube {
    pub fn root(dim: usize) -> Self {
        DyadicCube {
            level: 0,
            corner: vec![0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.corner.len()
    }

    pub fn side(&self) -> Q {
        q(1, 1i64 << self.level)
    }

    pub fn lower(&self) -> Vec<Q> {
        let den = 1i64 << self.level;
        self.corner.iter().map(|&c| q(c as i64, den)).collect()
    }

    pub fn upper(&self) -> Vec<Q> {
        let den = 1i64 << self.level;
        self.corner.iter().map(|&c| q(c as i64 + 1, den)).collect()
    }

    /// The `2^N` halves, in lexicographic corner order.
    pub fn children(&self) -> Vec<DyadicCube> {
        let dim = self.dim();
        (0..1u64 << dim)
            .map(|bits| DyadicCube {
                level: self.level + 1,
                corner: (0..dim)
                    .map(|i| 2 * self.corner[i] + ((bits >> (dim - 1 - i)) & 1))
                    .collect(),
            })
            .collect()
    }

    /// Integer corner range `[lo, hi]` at level `fine`.
    fn span_at(&self, fine: u32) -> Vec<(u64, u64)> {
        let shift = fine - self.level;
        self.corner
            .iter()
            .map(|&c| (c << shift, (c + 1) << shift))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "status")]
pub enum LeafStatus {
    Accepted { label: u64 },
    Refused,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leaf {
    pub cube: DyadicCube,
    pub status: LeafStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubdivisionTree {
    pub dim: usize,
    pub max_level: u32,
    /// Leaves sorted by `(level, corner)`.
    pub leaves: Vec<Leaf>,
    pub split_nodes: usize,
}

impl SubdivisionTree {
    pub fn refused(&self) -> usize {
        self.leaves
            .iter()
            .filter(|l| l.status == LeafStatus::Refused)
            .count()
    }

    pub fn is_complete(&self) -> bool {
        self.refused() == 0
    }

    pub fn depth(&self) -> u32 {
        self.leaves.iter().map(|l| l.cube.level).max().unwrap_or(0)
    }
}

/// Least label of a member containing the closed cube, if any.
fn fitting_label(cover: &BoxCover, cube: &DyadicCube) -> Option<u64> {
    let (lo, hi) = (cube.lower(), cube.upper());
    cover
        .members()
        .iter()
        .filter(|m| region_contains_closed_box(&m.region, &lo, &hi))
        .map(|m| m.label)
        .min()
}

/// Breadth-first refinement: a cube inside some member becomes an accepted
/// leaf, any other cube is split, and cubes still unfitted at `max_level` are
/// refused.
pub fn adaptive_subdivide(cover: &BoxCover, max_level: u32) -> Result<SubdivisionTree, SubdivisionError> {
    if max_level > LEVEL_LIMIT {
        return Err(SubdivisionError::LevelTooDeep(max_level));
    }
    let mut leaves = Vec::new();
    let mut split_nodes = 0;
    let mut frontier = vec![DyadicCube::root(cover.dim())];
    while !frontier.is_empty() {
        let fits: Vec<Option<u64>> = frontier.par_iter().map(|c| fitting_label(cover, c)).collect();
        let mut next = Vec::new();
        for (cube, fit) in frontier.into_iter().zip(fits) {
            match fit {
                Some(label) => leaves.push(Leaf {
                    cube,
                    status: LeafStatus::Accepted { label },
                }),
                None if cube.level >= max_level => leaves.push(Leaf {
                    cube,
                    status: LeafStatus::Refused,
                }),
                None => {
                    split_nodes += 1;
                    next.extend(cube.children());
                }
            }
        }
        frontier = next;
    }
    leaves.sort_by(|a, b| a.cube.cmp(&b.cube));
    let tree = SubdivisionTree {
        dim: cover.dim(),
        max_level,
        leaves,
        split_nodes,
    };
    if !tree.is_complete() {
        log::warn!("{} cubes refused at level {max_level}", tree.refused());
    }
    Ok(tree)
}

/// `(no refused leaves, longest root-to-leaf chain)`.
pub fn well_founded_check(tree: &SubdivisionTree) -> (bool, u32) {
    (tree.is_complete(), tree.depth())
}

/// Sum of leaf volumes, exact while `depth · N ≤ 62`.
pub fn leaf_volume_sum(tree: &SubdivisionTree) -> Option<Q> {
    if tree.depth() as usize * tree.dim > 62 {
        return None;
    }
    let mut total = Q::zero();
    for leaf in &tree.leaves {
        total += q(1, 1i64 << (leaf.cube.level as usize * tree.dim));
    }
    Some(total)
}

/// Re-checks every accepted leaf against the member named by its label.
pub fn verify_leaves(tree: &SubdivisionTree, cover: &BoxCover) -> Result<(), SubdivisionError> {
    let refused = tree.refused();
    if refused > 0 {
        return Err(SubdivisionError::Refused(refused));
    }
    for leaf in &tree.leaves {
        if let LeafStatus::Accepted { label } = leaf.status {
            let member = cover
                .members()
                .iter()
                .find(|m| m.label == label)
                .ok_or(CoverError::NoMembers)?;
            if !region_contains_closed_box(&member.region, &leaf.cube.lower(), &leaf.cube.upper()) {
                return Err(SubdivisionError::Cover(CoverError::NotACover(
                    leaf.cube.lower().iter().map(|x| x.to_string()).collect(),
                )));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColourStats {
    pub vertices: usize,
    /// Distinct colours on the vertices inside each leaf, in leaf order.
    pub per_leaf: Vec<usize>,
    pub max: usize,
    /// Colour count → number of leaves.
    pub histogram: BTreeMap<usize, usize>,
    /// `(leaf, vertex)` incidences where a vertex lies in a leaf without
    /// being one of its corners, i.e. neighbours meeting in partial faces.
    pub face_violations: usize,
}

/// Colours every vertex of the leaf complex by the least member containing
/// it and counts the colours appearing on each leaf. Vertices of finer
/// neighbours lying on a leaf's boundary are counted for that leaf too.
pub fn complex_colour_stats(tree: &SubdivisionTree, cover: &BoxCover) -> Result<ColourStats, SubdivisionError> {
    let refused = tree.refused();
    if refused > 0 {
        return Err(SubdivisionError::Refused(refused));
    }
    let fine = tree.depth();
    let dim = tree.dim;
    let mut verts: Vec<Vec<u64>> = Vec::new();
    for leaf in &tree.leaves {
        let span = leaf.cube.span_at(fine);
        for bits in 0..1u64 << dim {
            verts.push(
                (0..dim)
                    .map(|i| if (bits >> i) & 1 == 1 { span[i].1 } else { span[i].0 })
                    .collect(),
            );
        }
    }
    verts.sort();
    verts.dedup();
    let den = 1i64 << fine;
    let colours: Vec<u64> = verts
        .par_iter()
        .map(|v| {
            let p: Vec<Q> = v.iter().map(|&c| q(c as i64, den)).collect();
            cover
                .members()
                .iter()
                .filter(|m| m.contains(&p))
                .map(|m| m.label)
                .min()
                .ok_or_else(|| SubdivisionError::UncoveredVertex(p.iter().map(|x| x.to_string()).collect()))
        })
        .collect::<Result<_, _>>()?;
    let per_leaf: Vec<(usize, usize)> = tree
        .leaves
        .par_iter()
        .map(|leaf| {
            let span = leaf.cube.span_at(fine);
            let start = verts.partition_point(|v| v[0] < span[0].0);
            let mut seen: Vec<u64> = Vec::new();
            let mut hanging = 0;
            for (v, c) in verts[start..].iter().zip(&colours[start..]) {
                if v[0] > span[0].1 {
                    break;
                }
                if !v.iter().zip(&span).all(|(x, (a, b))| a <= x && x <= b) {
                    continue;
                }
                if !seen.contains(c) {
                    seen.push(*c);
                }
                if !v.iter().zip(&span).all(|(x, (a, b))| x == a || x == b) {
                    hanging += 1;
                }
            }
            (seen.len(), hanging)
        })
        .collect();
    let mut histogram = BTreeMap::new();
    for (count, _) in &per_leaf {
        *histogram.entry(*count).or_insert(0) += 1;
    }
    Ok(ColourStats {
        vertices: verts.len(),
        max: per_leaf.iter().map(|p| p.0).max().unwrap_or(0),
        face_violations: per_leaf.iter().map(|p| p.1).sum(),
        per_leaf: per_leaf.into_iter().map(|p| p.0).collect(),
        histogram,
    })
}

#[derive(Serialize)]
struct LeafRecord<'a> {
    level: u32,
    corner: &'a [u64],
    status: &'static str,
    label: Option<u64>,
}

/// One JSON object per leaf, newline separated.
pub fn leaves_to_jsonl(tree: &SubdivisionTree) -> String {
    let mut out = String::new();
    for leaf in &tree.leaves {
        let (status, label) = match leaf.status {
            LeafStatus::Accepted { label } => ("accepted", Some(label)),
            LeafStatus::Refused => ("refused", None),
        };
        let rec = LeafRecord {
            level: leaf.cube.level,
            corner: &leaf.cube.corner,
            status,
            label,
        };
        let line = serde_json::to_string(&rec).expect("plain record serialises");
        let _ = writeln!(out, "{line}");
    }
    out
}

/// Every accepted leaf paired with its label, ordered by lower corner.
pub fn leaf_intervals(tree: &SubdivisionTree) -> Vec<(Vec<Q>, Vec<Q>, Option<u64>)> {
    let mut out: Vec<_> = tree
        .leaves
        .iter()
        .map(|l| {
            let label = match l.status {
                LeafStatus::Accepted { label } => Some(label),
                LeafStatus::Refused => None,
            };
            (l.cube.lower(), l.cube.upper(), label)
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    out
}

/// Refinement by depth-first recursion, for cross-checking the breadth-first
/// construction.
pub fn recursive_leaves(cover: &BoxCover, cube: &DyadicCube, max_level: u32, out: &mut VecDeque<Leaf>) {
    match fitting_label(cover, cube) {
        Some(label) => out.push_back(Leaf {
            cube: cube.clone(),
            status: LeafStatus::Accepted { label },
        }),
        None if cube.level >= max_level => out.push_back(Leaf {
            cube: cube.clone(),
            status: LeafStatus::Refused,
        }),
        None => {
            for c in cube.children() {
                recursive_leaves(cover, &c, max_level, out);
            }
        }
    }
}
